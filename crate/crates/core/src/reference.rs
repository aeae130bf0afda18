//! Exact solutions, error norms, convergence studies and independently coded
//! limit schemes used as oracles for the relaxation steppers.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spatial::{laplacian6, weno5_faces, Grid, GHOST};
use crate::tableaux::Tableau;

/// Diffusive-limit solution of the Riemann problem with the jump at `x = 2`.
pub fn exact_erf_riemann(x: f64, t: f64, rho_l: f64, rho_r: f64) -> f64 {
    debug_assert!(t > 0.0);
    0.5 * (rho_l + rho_r) + 0.5 * (rho_l - rho_r) * libm::erf((t - x + 2.0) / (2.0 * t.sqrt()))
}

/// Support radius `(12 (t + 1))^{1/3}` of the Barenblatt profile.
pub fn barenblatt_radius(t: f64) -> f64 {
    (12.0 * (t + 1.0)).cbrt()
}

/// Barenblatt solution of `rho_t = (rho^2)_xx`, shifted to `t + 1`.
pub fn barenblatt(x: f64, t: f64) -> f64 {
    let r = barenblatt_radius(t);
    if x.abs() >= r {
        0.0
    } else {
        (1.0 - (x / r).powi(2)) / r
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Config(format!("field lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

pub fn l1_error(a: &[f64], b: &[f64], dx: f64) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx)
}

pub fn linf_error(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Average a field onto a grid `factor` times coarser (nested cells).
pub fn restrict(fine: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 || !fine.len().is_multiple_of(factor) {
        return Err(Error::Config(format!(
            "cannot restrict {} cells by a factor {factor}",
            fine.len()
        )));
    }
    Ok(fine.chunks(factor).map(|c| c.iter().sum::<f64>() / factor as f64).collect())
}

/// `log2(prev / cur)`, NaN when either error vanishes.
pub fn rate(prev: f64, cur: f64) -> f64 {
    if prev > 0.0 && cur > 0.0 {
        (prev / cur).log2()
    } else {
        f64::NAN
    }
}

/// Errors between consecutive levels and the observed rates.
///
/// Row `k` holds `|q_{N_k} - R q_{N_{k+1}}|_1` on the grid with `N_k` cells;
/// its rate compares it with row `k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scheme: String,
    pub formulation: String,
    pub eps: f64,
    pub alpha: f64,
    pub n: Vec<usize>,
    pub err_u: Vec<f64>,
    pub rate_u: Vec<f64>,
    pub err_v: Vec<f64>,
    pub rate_v: Vec<f64>,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "scheme,formulation,epsilon,alpha,N,err_u,rate_u,err_v,rate_v";

    /// Rate of `u` at the row with `n` cells.
    pub fn u_rate_at(&self, n: usize) -> Option<f64> {
        self.n.iter().position(|&m| m == n).map(|k| self.rate_u[k])
    }

    pub fn v_rate_at(&self, n: usize) -> Option<f64> {
        self.n.iter().position(|&m| m == n).map(|k| self.rate_v[k])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for k in 0..self.n.len() {
            s.push_str(&format!(
                "{},{},{:e},{},{},{:e},{},{:e},{}\n",
                self.scheme,
                self.formulation,
                self.eps,
                self.alpha,
                self.n[k],
                self.err_u[k],
                fmt_rate(self.rate_u[k]),
                self.err_v[k],
                fmt_rate(self.rate_v[k])
            ));
        }
        s
    }
}

fn fmt_rate(r: f64) -> String {
    if r.is_nan() {
        "NaN".into()
    } else {
        format!("{r:.4}")
    }
}

/// Solutions `(u, v)` at the final time for each refinement level.
pub type LevelSolver<'a> = dyn Fn(usize) -> Result<(Vec<f64>, Vec<f64>)> + Sync + 'a;

/// Run `base_n * 2^k`, `k = 0..levels`, in parallel and compare
/// consecutive levels. Produces `levels - 1` rows.
pub fn convergence_study(
    scheme: &str,
    formulation: &str,
    eps: f64,
    alpha: f64,
    base_n: usize,
    levels: usize,
    solve: &LevelSolver<'_>,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::Config(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    let ns: Vec<usize> = (0..levels).map(|k| base_n << k).collect();
    let sols: Vec<(Vec<f64>, Vec<f64>)> =
        ns.par_iter().map(|&n| solve(n)).collect::<Result<Vec<_>>>()?;
    let mut rep = ConvergenceReport {
        scheme: scheme.to_string(),
        formulation: formulation.to_string(),
        eps,
        alpha,
        n: Vec::new(),
        err_u: Vec::new(),
        rate_u: Vec::new(),
        err_v: Vec::new(),
        rate_v: Vec::new(),
    };
    for k in 0..levels - 1 {
        let dx = 1.0 / ns[k] as f64;
        let (uc, vc) = &sols[k];
        let (uf, vf) = &sols[k + 1];
        // domain length folds into the norm through dx of the unit-length study
        let eu = l1_error(uc, &restrict(uf, 2)?, dx)?;
        let ev = l1_error(vc, &restrict(vf, 2)?, dx)?;
        rep.n.push(ns[k]);
        rep.rate_u.push(rep.err_u.last().map_or(f64::NAN, |&p| rate(p, eu)));
        rep.rate_v.push(rep.err_v.last().map_or(f64::NAN, |&p| rate(p, ev)));
        rep.err_u.push(eu);
        rep.err_v.push(ev);
    }
    Ok(rep)
}

/// Limit equations integrated by the oracle schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitScheme {
    /// `u_t + gamma u_x = 0`, explicit multistep.
    Convection,
    /// `u_t + gamma u_x = u_xx`, explicit multistep.
    ConvectionDiffusionExplicit,
    /// `u_t + gamma u_x = u_xx` with implicit diffusion.
    ConvectionDiffusionImex,
}

fn periodic_ghosts(u: &[f64]) -> Vec<f64> {
    let n = u.len() as isize;
    (-(GHOST as isize)..n + GHOST as isize)
        .map(|i| u[i.rem_euclid(n) as usize])
        .collect()
}

/// Divergence of the Rusanov flux of `gamma u` with dissipation `|gamma|`.
fn convection_divergence(u: &[f64], gamma: f64, dx: f64, weno_eps: f64) -> Vec<f64> {
    let (m, p) = weno5_faces(&periodic_ghosts(u), weno_eps);
    let h: Vec<f64> = m
        .iter()
        .zip(&p)
        .map(|(a, b)| 0.5 * (gamma * (a + b) - gamma.abs() * (b - a)))
        .collect();
    h.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}

/// Integrate a limit scheme for the linear model on a periodic grid.
///
/// `history` holds `s` levels of `u`, newest first. Returns `u` after each of
/// `steps` steps.
#[allow(clippy::too_many_arguments)]
pub fn limit_scheme_oracle(
    tab: &Tableau,
    scheme: LimitScheme,
    grid: &Grid,
    gamma: f64,
    dt: f64,
    weno_eps: f64,
    history: &[Vec<f64>],
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let s = tab.steps;
    if history.len() != s || history.iter().any(|h| h.len() != grid.n) {
        return Err(Error::Config(format!("oracle needs {s} history levels of {} cells", grid.n)));
    }
    let n = grid.n;
    let dx = grid.dx();
    let mut hist: Vec<Vec<f64>> = history.to_vec();
    let mut out = Vec::with_capacity(steps);
    let lu = if scheme == LimitScheme::ConvectionDiffusionImex {
        // I - dt c_{-1} L6 with periodic wrap
        let mut m = DMatrix::<f64>::identity(n, n);
        let w = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
        for i in 0..n {
            for (o, wk) in w.iter().enumerate() {
                let j = (i as isize + o as isize - 3).rem_euclid(n as isize) as usize;
                m[(i, j)] -= dt * tab.c_minus1 * wk / (dx * dx);
            }
        }
        Some(m.lu())
    } else {
        None
    };
    for _ in 0..steps {
        let mut rhs = vec![0.0; n];
        for (j, u) in hist.iter().enumerate() {
            let conv = convection_divergence(u, gamma, dx, weno_eps);
            let lap = laplacian6(&periodic_ghosts(u), dx);
            for i in 0..n {
                rhs[i] -= tab.a[j] * u[i] + dt * tab.b[j] * conv[i];
                match scheme {
                    LimitScheme::Convection => {}
                    LimitScheme::ConvectionDiffusionExplicit => rhs[i] += dt * tab.b[j] * lap[i],
                    LimitScheme::ConvectionDiffusionImex => rhs[i] += dt * tab.c[j] * lap[i],
                }
            }
        }
        let u_new = match &lu {
            Some(lu) => lu
                .solve(&DVector::from_vec(rhs))
                .ok_or_else(|| Error::Numerical("singular oracle system".into()))?
                .data
                .into(),
            None => rhs,
        };
        hist.insert(0, u_new.clone());
        hist.truncate(s);
        out.push(u_new);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_riemann_values() {
        assert_eq!(exact_erf_riemann(2.25, 0.25, 4.0, 2.0), 3.0);
        assert!((exact_erf_riemann(0.0, 1e6, 4.0, 2.0) - 4.0).abs() < 1e-3);
    }

    #[test]
    fn barenblatt_values() {
        let r = barenblatt_radius(3.0);
        assert!((r - 48f64.cbrt()).abs() < 1e-14);
        assert!((barenblatt(0.0, 3.0) - 1.0 / r).abs() < 1e-15);
        assert_eq!(barenblatt(r, 3.0), 0.0);
        assert_eq!(barenblatt(-r - 1.0, 3.0), 0.0);
        assert!((barenblatt(0.0, 0.0) - 12f64.powf(-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn norms_and_restriction() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(l1_error(&a, &a, 0.25).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!((l1_error(&a, &b, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(linf_error(&a, &b).unwrap(), 0.5);
        assert!(l1_error(&a, &b[..3], 0.25).is_err());
        assert_eq!(restrict(&a, 2).unwrap(), vec![1.5, 3.5]);
        assert_eq!(restrict(&a, 1).unwrap(), a);
        assert!(restrict(&a, 3).is_err());
    }

    #[test]
    fn l1_of_sine_tends_to_two_over_pi() {
        let g = Grid::new(0.0, 1.0, 4096).unwrap();
        let s: Vec<f64> = g.centers().iter().map(|x| (2.0 * std::f64::consts::PI * x).sin()).collect();
        let e = l1_error(&s, &vec![0.0; 4096], g.dx()).unwrap();
        assert!((e - 2.0 / std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn study_on_constant_state_has_nan_rates() {
        let rep = convergence_study("x", "y", 1.0, 1.0, 8, 3, &|n| Ok((vec![1.0; n], vec![2.0; n]))).unwrap();
        assert_eq!(rep.n, vec![8, 16]);
        assert!(rep.err_u.iter().all(|&e| e == 0.0));
        assert!(rep.rate_u.iter().all(|r| r.is_nan()));
        assert!(convergence_study("x", "y", 1.0, 1.0, 8, 2, &|n| Ok((vec![0.0; n], vec![0.0; n]))).is_err());
    }

    #[test]
    fn study_recovers_synthetic_rates() {
        // u_N = 1 + N^{-3}: errors scale as N^{-3}
        let rep = convergence_study("x", "y", 1.0, 1.0, 16, 4, &|n| {
            let e = (n as f64).powi(-3);
            Ok((vec![1.0 + e; n], vec![1.0 + e * e; n]))
        })
        .unwrap();
        assert!((rep.rate_u[1] - 3.0).abs() < 1e-12 && (rep.rate_v[2] - 6.0).abs() < 1e-12);
        assert!(rep.to_csv().starts_with(ConvergenceReport::CSV_HEADER));
    }
}
