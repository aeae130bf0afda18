//! Linear stability of the IMEX-BDF schemes on the relaxation test system.
//!
//! Fourier analysis of the linear system with frozen coefficients reduces one
//! step to a scalar recurrence in the rescaled variables. Eliminating the flux
//! variable gives a characteristic polynomial of degree `2s` in the
//! amplification factor `zeta`. `z_r` is the (real, positive) relaxation
//! number `dt / eps^{1+alpha}`; `z_i` is the real magnitude of the purely
//! imaginary transport number `i xi dt / eps^alpha`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stepper::Formulation;
use crate::tableaux::Tableau;

/// Roots within this distance of 1 in modulus count as on the unit circle.
pub const UNIT_TOL: f64 = 1e-9;
/// Distance below which two near-circle roots are treated as one multiple root.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Roots of `coeffs[0] z^n + coeffs[1] z^{n-1} + ... + coeffs[n]`.
///
/// Leading zeros are dropped. Roots are the eigenvalues of the companion matrix.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let Some(lead) = coeffs.iter().position(|c| c.norm() > 0.0) else {
        return Vec::new();
    };
    let c = &coeffs[lead..];
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    m.schur()
        .eigenvalues()
        .map(|ev| ev.iter().copied().collect())
        .unwrap_or_default()
}

/// Root condition: every root has modulus `<= 1 + tol`, and roots on the
/// unit circle (within `tol * 100`) are not clustered with another root.
pub fn roots_stable(roots: &[Complex64], tol: f64, cluster: f64) -> bool {
    let on_circle = tol.max(1e-7);
    for (i, r) in roots.iter().enumerate() {
        let m = r.norm();
        if !m.is_finite() || m > 1.0 + tol {
            return false;
        }
        if (m - 1.0).abs() <= on_circle
            && roots.iter().enumerate().any(|(k, q)| k != i && (q - r).norm() < cluster)
        {
            return false;
        }
    }
    true
}

fn add_scaled(acc: &mut [Complex64], poly: &[Complex64], w: Complex64) {
    for (a, p) in acc.iter_mut().zip(poly) {
        *a += w * p;
    }
}

/// Characteristic polynomial in descending powers of `zeta` (degree `2s`).
///
/// Only BDF-type tableaus (all history implicit weights zero) are supported.
pub fn char_poly(
    tab: &Tableau,
    formulation: Formulation,
    z_r: f64,
    z_i: f64,
    eps_alpha: f64,
) -> Result<Vec<Complex64>> {
    if !tab.is_bdf() {
        return Err(Error::Config(format!(
            "stability analysis needs a BDF-type tableau, {} has implicit history weights",
            tab.name
        )));
    }
    let s = tab.steps;
    let deg = 2 * s;
    let cm1 = tab.c_minus1;
    let one = Complex64::new(1.0, 0.0);
    // ascending powers, index = exponent
    let mut rho = vec![Complex64::default(); deg + 1];
    let mut sig1 = vec![Complex64::default(); deg + 1];
    let mut sig2 = vec![Complex64::default(); deg + 1];
    let mut lead = vec![Complex64::default(); deg + 1];
    rho[deg] = one;
    lead[deg] = one;
    for j in 0..s {
        rho[deg - 1 - j] += tab.a[j];
        sig1[deg - 1 - j] += tab.a[j];
        sig2[deg - 1 - j] += tab.b[j];
        for h in 0..s {
            sig1[deg - 2 - j - h] += tab.a[j] * tab.a[h];
        }
    }
    let z = Complex64::new(0.0, z_i);
    let damp = 1.0 + z_r * cm1;
    let mut p = rho;
    add_scaled(&mut p, &sig1, one / damp);
    match formulation {
        Formulation::ApImplicit => {
            add_scaled(&mut p, &sig2, z * z_r * eps_alpha * cm1 / damp);
            add_scaled(&mut p, &lead, -(z * z) * cm1 * cm1 / damp);
        }
        _ => {
            add_scaled(&mut p, &sig2, -z * (z - z_r * eps_alpha) * cm1 / damp);
        }
    }
    p.reverse();
    Ok(p)
}

/// Largest root modulus of the characteristic polynomial.
pub fn max_root_modulus(
    tab: &Tableau,
    formulation: Formulation,
    z_r: f64,
    z_i: f64,
    eps_alpha: f64,
) -> Result<f64> {
    let roots = poly_roots(&char_poly(tab, formulation, z_r, z_i, eps_alpha)?);
    Ok(roots.iter().map(|r| r.norm()).fold(0.0, f64::max))
}

/// Root-condition check at one point of the plane.
pub fn is_stable(
    tab: &Tableau,
    formulation: Formulation,
    z_r: f64,
    z_i: f64,
    eps_alpha: f64,
) -> Result<bool> {
    let roots = poly_roots(&char_poly(tab, formulation, z_r, z_i, eps_alpha)?);
    Ok(roots_stable(&roots, UNIT_TOL, CLUSTER_TOL))
}

/// Sampling of the `(z_r, z_i)` plane. `z_r` is log-spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub zr_min: f64,
    pub zr_max: f64,
    pub nr: usize,
    pub zi_min: f64,
    pub zi_max: f64,
    pub ni: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self { zr_min: 1e-2, zr_max: 1e3, nr: 40, zi_min: 0.0, zi_max: 3.0, ni: 40 }
    }
}

impl ScanGrid {
    pub fn zr_values(&self) -> Vec<f64> {
        let (lo, hi) = (self.zr_min.log10(), self.zr_max.log10());
        (0..self.nr)
            .map(|k| {
                let t = if self.nr > 1 { k as f64 / (self.nr - 1) as f64 } else { 0.0 };
                10f64.powf(lo + t * (hi - lo))
            })
            .collect()
    }

    pub fn zi_values(&self) -> Vec<f64> {
        (0..self.ni)
            .map(|k| {
                let t = if self.ni > 1 { k as f64 / (self.ni - 1) as f64 } else { 0.0 };
                self.zi_min + t * (self.zi_max - self.zi_min)
            })
            .collect()
    }
}

/// One sample of a stability scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    pub z_r: f64,
    pub z_i: f64,
    pub max_modulus: f64,
    pub stable: bool,
}

/// Evaluate the root condition on a grid, row-major in `z_i` then `z_r`.
pub fn scan(
    tab: &Tableau,
    formulation: Formulation,
    eps_alpha: f64,
    grid: &ScanGrid,
) -> Result<Vec<StabilityPoint>> {
    // fail fast on unsupported tableaus
    char_poly(tab, formulation, 1.0, 0.0, eps_alpha)?;
    let zr = grid.zr_values();
    let zi = grid.zi_values();
    let pts: Vec<(f64, f64)> =
        zi.iter().flat_map(|&y| zr.iter().map(move |&x| (x, y))).collect();
    Ok(pts
        .par_iter()
        .map(|&(x, y)| {
            let roots = poly_roots(&char_poly(tab, formulation, x, y, eps_alpha).unwrap());
            StabilityPoint {
                z_r: x,
                z_i: y,
                max_modulus: roots.iter().map(|r| r.norm()).fold(0.0, f64::max),
                stable: roots_stable(&roots, UNIT_TOL, CLUSTER_TOL),
            }
        })
        .collect())
}

/// Fraction of scan points that are stable.
pub fn stable_fraction(points: &[StabilityPoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.iter().filter(|p| p.stable).count() as f64 / points.len() as f64
}
