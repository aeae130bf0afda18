//! Finite-difference building blocks: grid, ghost cells, WENO5
//! reconstruction, Rusanov fluxes, the bounded-eigenvalue dissipation
//! coefficient and sixth-order central stencils.

use crate::error::{Error, Result};
use crate::models::BoundaryCondition;

/// Ghost cells on each side; enough for WENO5 and the 7-point stencils.
pub const GHOST: usize = 3;

/// Default WENO smoothness regularizer.
pub const WENO_EPS: f64 = 1e-8;

/// Uniform cell-centred grid on `[x_lo, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_hi > x_lo) || n < 2 * GHOST {
            return Err(Error::Config(format!(
                "grid needs x_hi > x_lo and at least {} cells (got [{x_lo}, {x_hi}], n = {n})",
                2 * GHOST
            )));
        }
        Ok(Self { x_lo, x_hi, n })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Interface positions `x_lo + k dx`, `k = 0..=n`.
    pub fn faces(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.x_lo + k as f64 * self.dx()).collect()
    }

    /// Grid with half the cells (each coarse cell covers two fine ones).
    pub fn coarsen(&self) -> Result<Self> {
        if !self.n.is_multiple_of(2) {
            return Err(Error::Config(format!("cannot coarsen {} cells", self.n)));
        }
        Grid::new(self.x_lo, self.x_hi, self.n / 2)
    }
}

/// Ghosted storage: interior cell `i` lives at index `i + GHOST`.
pub fn with_ghosts(interior: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; interior.len() + 2 * GHOST];
    w[GHOST..GHOST + interior.len()].copy_from_slice(interior);
    w
}

pub fn interior(w: &[f64]) -> &[f64] {
    &w[GHOST..w.len() - GHOST]
}

/// Symmetry of a variable under reflection at a wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Fill the ghost cells of a ghosted field in place.
pub fn fill_ghosts(w: &mut [f64], bc: BoundaryCondition, parity: Parity) {
    let n = w.len() - 2 * GHOST;
    let sign = if parity == Parity::Odd { -1.0 } else { 1.0 };
    for g in 0..GHOST {
        let (lo, hi) = (GHOST - 1 - g, GHOST + n + g);
        match bc {
            BoundaryCondition::Periodic => {
                w[lo] = w[lo + n];
                w[hi] = w[hi - n];
            }
            BoundaryCondition::ZeroFlux => {
                w[lo] = w[GHOST];
                w[hi] = w[GHOST + n - 1];
            }
            BoundaryCondition::Reflecting => {
                w[lo] = sign * w[GHOST + g];
                w[hi] = sign * w[GHOST + n - 1 - g];
            }
        }
    }
}

/// Interior column and sign that the (possibly ghost) cell `idx` copies,
/// matching [`fill_ghosts`]. Used to assemble linear operators.
pub fn ghost_map(idx: isize, n: usize, bc: BoundaryCondition, parity: Parity) -> (usize, f64) {
    let n_i = n as isize;
    if (0..n_i).contains(&idx) {
        return (idx as usize, 1.0);
    }
    let sign = if parity == Parity::Odd { -1.0 } else { 1.0 };
    match bc {
        BoundaryCondition::Periodic => (idx.rem_euclid(n_i) as usize, 1.0),
        BoundaryCondition::ZeroFlux => (if idx < 0 { 0 } else { n - 1 }, 1.0),
        BoundaryCondition::Reflecting => {
            if idx < 0 {
                ((-1 - idx) as usize, sign)
            } else {
                ((2 * n_i - 1 - idx) as usize, sign)
            }
        }
    }
}

/// WENO5 value at the right face of the centre cell `c` from `(a, b, c, d, e)`
/// = cells `i-2..=i+2`. Returns the value and the nonlinear weights.
#[inline]
pub fn weno5_right_face(a: f64, b: f64, c: f64, d: f64, e: f64, weno_eps: f64) -> (f64, [f64; 3]) {
    const D: [f64; 3] = [0.3, 0.6, 0.1];
    let q0 = (2.0 * c + 5.0 * d - e) / 6.0;
    let q1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
    let q2 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
    let s0 = 13.0 / 12.0 * (c - 2.0 * d + e).powi(2) + 0.25 * (3.0 * c - 4.0 * d + e).powi(2);
    let s1 = 13.0 / 12.0 * (b - 2.0 * c + d).powi(2) + 0.25 * (b - d).powi(2);
    let s2 = 13.0 / 12.0 * (a - 2.0 * b + c).powi(2) + 0.25 * (a - 4.0 * b + 3.0 * c).powi(2);
    let a0 = D[0] / (weno_eps + s0).powi(2);
    let a1 = D[1] / (weno_eps + s1).powi(2);
    let a2 = D[2] / (weno_eps + s2).powi(2);
    let sum = a0 + a1 + a2;
    let w = [a0 / sum, a1 / sum, a2 / sum];
    (w[0] * q0 + w[1] * q1 + w[2] * q2, w)
}

/// Left and right WENO5 states at every face `k = 0..=n` of a ghosted field.
///
/// Face `k` separates interior cells `k-1` and `k`.
pub fn weno5_faces(w: &[f64], weno_eps: f64) -> (Vec<f64>, Vec<f64>) {
    let n = w.len() - 2 * GHOST;
    let mut minus = Vec::with_capacity(n + 1);
    let mut plus = Vec::with_capacity(n + 1);
    for k in 0..=n {
        // left cell k-1 at ghosted index k-1+GHOST
        let l = k + GHOST - 1;
        minus.push(weno5_right_face(w[l - 2], w[l - 1], w[l], w[l + 1], w[l + 2], weno_eps).0);
        let r = k + GHOST;
        plus.push(weno5_right_face(w[r + 2], w[r + 1], w[r], w[r - 1], w[r - 2], weno_eps).0);
    }
    (minus, plus)
}

/// Rusanov flux `(F(Q-) + F(Q+) - theta (J+ - J-)) / 2`, where `J` is the
/// variable whose jump dissipates this flux component.
#[inline]
pub fn rusanov(f_minus: f64, f_plus: f64, jump_minus: f64, jump_plus: f64, theta: f64) -> f64 {
    0.5 * (f_minus + f_plus - theta * (jump_plus - jump_minus))
}

/// Numerical fluxes `(f_hat, v_hat, p_hat)` for the pair `Q = (u, v)`:
/// `f` and `v` are dissipated by the jump in `u`, `p` by the jump in `v`.
pub fn rusanov_triple(
    q_minus: (f64, f64),
    q_plus: (f64, f64),
    f: (f64, f64),
    p: (f64, f64),
    theta: f64,
) -> (f64, f64, f64) {
    (
        rusanov(f.0, f.1, q_minus.0, q_plus.0, theta),
        rusanov(q_minus.1, q_plus.1, q_minus.0, q_plus.0, theta),
        rusanov(p.0, p.1, q_minus.1, q_plus.1, theta),
    )
}

/// Eigenvalues of the reformulated hyperbolic part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigBound {
    pub theta: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// `max(|lambda_plus|, |lambda_minus|)`
    pub cap: f64,
}

/// Eigenvalues for wave speed `gamma`, stiff blend `theta = E / G` with
/// `G = E + dt c_{-1} k`, and `coupling = theta * c_s`, where `c_s` is the
/// frozen relaxation sound speed (`eps^{-alpha}` for the prototype).
///
/// The product is passed directly because `theta` underflows and `c_s`
/// overflows in the small-`eps` limit.
#[inline]
pub fn eigen_bound_general(gamma: f64, theta: f64, coupling: f64) -> EigBound {
    let g = gamma * (1.0 - theta);
    let r = (g * g + 4.0 * coupling * coupling).sqrt();
    let lp = 0.5 * (g + r);
    let lm = 0.5 * (g - r);
    EigBound { theta, lambda_plus: lp, lambda_minus: lm, cap: lp.abs().max(lm.abs()) }
}

/// Eigenvalue bound for the prototype scaling
/// (`theta = eps^{1+alpha} / (eps^{1+alpha} + dt c_{-1})`).
pub fn eigenvalue_bound(gamma: f64, eps: f64, alpha: f64, dt: f64, c_minus1: f64) -> EigBound {
    let e = eps.powf(1.0 + alpha);
    let g = e + dt * c_minus1;
    // theta * eps^{-alpha} = eps / g
    eigen_bound_general(gamma, e / g, eps / g)
}

/// Sixth-order gradient of a ghosted field at every face `k = 0..=n`.
pub fn face_gradient6(w: &[f64], dx: f64) -> Vec<f64> {
    let n = w.len() - 2 * GHOST;
    (0..=n)
        .map(|k| {
            let r = k + GHOST; // right cell
            (49.0 / 36.0 * (w[r] - w[r - 1]) - 5.0 / 36.0 * (w[r + 1] - w[r - 2])
                + 1.0 / 90.0 * (w[r + 2] - w[r - 3]))
                / dx
        })
        .collect()
}

/// Weights of the 7-point sixth-order second derivative, offsets `-3..=3`.
pub const LAPLACIAN6: [f64; 7] =
    [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];

/// Weights of the 7-point sixth-order first derivative, offsets `-3..=3`.
pub const DERIV6: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0];

fn stencil7(w: &[f64], weights: &[f64; 7], scale: f64) -> Vec<f64> {
    let n = w.len() - 2 * GHOST;
    (0..n)
        .map(|i| {
            let c = i + GHOST;
            weights.iter().enumerate().map(|(o, wt)| wt * w[c + o - 3]).sum::<f64>() * scale
        })
        .collect()
}

/// Sixth-order `d^2/dx^2` at interior cells of a ghosted field.
pub fn laplacian6(w: &[f64], dx: f64) -> Vec<f64> {
    stencil7(w, &LAPLACIAN6, 1.0 / (dx * dx))
}

/// Sixth-order central `d/dx` at interior cells of a ghosted field.
pub fn derivative6(w: &[f64], dx: f64) -> Vec<f64> {
    stencil7(w, &DERIV6, 1.0 / dx)
}

/// Conservative difference `(h[i+1] - h[i]) / dx` of face values.
pub fn face_divergence(h: &[f64], dx: f64) -> Vec<f64> {
    h.windows(2).map(|p| (p[1] - p[0]) / dx).collect()
}

/// Exact cell averages of `sin(k x + phase)` on the grid.
pub fn cell_average_sin(grid: &Grid, k: f64, phase: f64) -> Vec<f64> {
    let h = grid.dx();
    let factor = if k * h == 0.0 { 1.0 } else { (0.5 * k * h).sin() / (0.5 * k * h) };
    grid.centers().iter().map(|&x| (k * x + phase).sin() * factor).collect()
}
