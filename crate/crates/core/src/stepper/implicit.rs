//! Implicit diffusion solve `u - d/dx( mu d/dx p(u) ) = rhs`.
//!
//! The second derivative is the conservative sixth-order face-gradient
//! difference, so the operator is 7-banded; periodic wrap-around adds corner
//! entries handled with a low-rank (Woodbury) correction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::BoundaryCondition;
use crate::spatial::{ghost_map, Parity};

/// Coefficients of the face gradient on cells `k-3..=k+2` (face `k`).
const FACE_GRAD: [f64; 6] =
    [-1.0 / 90.0, 5.0 / 36.0, -49.0 / 36.0, 49.0 / 36.0, -5.0 / 36.0, 1.0 / 90.0];

/// Band matrix with LU factorization by partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width], pivots: vec![0; n], factored: false }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(self.in_band(i, j));
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl >= i && j <= i + self.ku + self.kl {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn factor(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Numerical(format!("singular band matrix at column {k}")));
            }
            self.pivots[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let piv = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / piv;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve in place; the matrix must be factored.
    pub fn solve(&self, x: &mut [f64]) {
        assert!(self.factored);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            let hi = (k + kl).min(n - 1);
            for (i, xi) in x.iter_mut().enumerate().take(hi + 1).skip(k + 1) {
                *xi -= self.data[self.idx(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            let hi = (k + ku + kl).min(n - 1);
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(k + 1) {
                s -= self.data[self.idx(k, j)] * xj;
            }
            x[k] = s / self.data[self.idx(k, k)];
        }
    }
}

/// Banded matrix plus a few out-of-band entries.
#[derive(Debug, Clone)]
pub struct BandSystem {
    band: BandMatrix,
    corners: Vec<(usize, usize, f64)>,
    // Woodbury data
    rows: Vec<usize>,
    z: Vec<Vec<f64>>,
    cap: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl BandSystem {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            band: BandMatrix::zeros(n, k, k),
            corners: Vec::new(),
            rows: Vec::new(),
            z: Vec::new(),
            cap: None,
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if self.band.in_band(i, j) {
            self.band.add(i, j, v);
        } else if let Some(e) = self.corners.iter_mut().find(|e| e.0 == i && e.1 == j) {
            e.2 += v;
        } else {
            self.corners.push((i, j, v));
        }
    }

    pub fn factor(&mut self) -> Result<()> {
        self.band.factor()?;
        let n = self.band.n;
        let mut rows: Vec<usize> = self.corners.iter().map(|e| e.0).collect();
        rows.sort_unstable();
        rows.dedup();
        self.z = rows
            .iter()
            .map(|&r| {
                let mut e = vec![0.0; n];
                e[r] = 1.0;
                self.band.solve(&mut e);
                e
            })
            .collect();
        if !rows.is_empty() {
            let m = rows.len();
            let mut s = DMatrix::<f64>::identity(m, m);
            for (a, &r) in rows.iter().enumerate() {
                for &(i, j, v) in &self.corners {
                    if i == r {
                        for b in 0..m {
                            s[(a, b)] += v * self.z[b][j];
                        }
                    }
                }
            }
            let lu = s.lu();
            if !lu.is_invertible() {
                return Err(Error::Numerical("singular periodic correction".into()));
            }
            self.cap = Some(lu);
        }
        self.rows = rows;
        Ok(())
    }

    pub fn solve(&self, x: &mut [f64]) {
        self.band.solve(x);
        if let Some(lu) = &self.cap {
            let m = self.rows.len();
            let mut t = DVector::<f64>::zeros(m);
            for (a, &r) in self.rows.iter().enumerate() {
                for &(i, j, v) in &self.corners {
                    if i == r {
                        t[a] += v * x[j];
                    }
                }
            }
            let y = lu.solve(&t).expect("factored");
            for (b, zb) in self.z.iter().enumerate() {
                for (xi, zi) in x.iter_mut().zip(zb) {
                    *xi -= y[b] * zi;
                }
            }
        }
    }

    /// Dense copy, for testing.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.band.n;
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if self.band.in_band(i, j) {
                    d[(i, j)] = self.band.get(i, j);
                }
            }
        }
        for &(i, j, v) in &self.corners {
            d[(i, j)] += v;
        }
        d
    }
}

/// `L p = d/dx( mu d/dx p )` with per-face weights `mu` (`n + 1` entries).
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    pub n: usize,
    pub dx: f64,
    pub mu_face: Vec<f64>,
    pub bc: BoundaryCondition,
}

impl DiffusionOperator {
    /// Row `i` of `L` as `(column, weight)` pairs acting on interior `p`.
    fn row(&self, i: usize, mut emit: impl FnMut(usize, f64)) {
        let inv = 1.0 / (self.dx * self.dx);
        for (face, sign) in [(i + 1, 1.0), (i, -1.0)] {
            let mu = self.mu_face[face] * sign * inv;
            if mu == 0.0 {
                continue;
            }
            for (m, g) in FACE_GRAD.iter().enumerate() {
                let cell = face as isize - 3 + m as isize;
                let (col, wt) = ghost_map(cell, self.n, self.bc, Parity::Even);
                emit(col, mu * g * wt);
            }
        }
    }

    /// Apply `L` to interior point values of `p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut s = 0.0;
                self.row(i, |c, w| s += w * p[c]);
                s
            })
            .collect()
    }

    /// `I - L diag(dp)`.
    pub fn system(&self, dp: &[f64]) -> BandSystem {
        let mut sys = BandSystem::new(self.n, 3);
        for i in 0..self.n {
            sys.add(i, i, 1.0);
            self.row(i, |c, w| sys.add(i, c, -w * dp[c]));
        }
        sys
    }
}

/// Solve `u - L p(u) = rhs` for `u`.
///
/// With `linear_p` the system is assembled once (`p(u) = p'(0) u + p(0)` is
/// assumed). Otherwise Newton iterations run until the residual max-norm is
/// below `tol * max(|rhs|_inf, 1)`.
#[allow(clippy::too_many_arguments)]
pub fn implicit_solve(
    op: &DiffusionOperator,
    p: &dyn Fn(f64) -> f64,
    dp: &dyn Fn(f64) -> f64,
    linear_p: bool,
    rhs: &[f64],
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = op.n;
    if linear_p {
        let slope = dp(0.0);
        let offset = p(0.0);
        let mut sys = op.system(&vec![slope; n]);
        sys.factor()?;
        // constant offsets are annihilated by L
        let _ = offset;
        let mut x = rhs.to_vec();
        sys.solve(&mut x);
        return Ok((x, 1));
    }
    let scale = rhs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut u = guess.to_vec();
    for it in 0..max_iter {
        let pu: Vec<f64> = u.iter().map(|&x| p(x)).collect();
        let lp = op.apply(&pu);
        let res: Vec<f64> = (0..n).map(|i| u[i] - lp[i] - rhs[i]).collect();
        let rmax = res.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !rmax.is_finite() {
            return Err(Error::Numerical("non-finite residual in implicit solve".into()));
        }
        if rmax <= tol * scale {
            return Ok((u, it));
        }
        let d: Vec<f64> = u.iter().map(|&x| dp(x)).collect();
        let mut sys = op.system(&d);
        sys.factor()?;
        let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
        sys.solve(&mut delta);
        for (ui, di) in u.iter_mut().zip(&delta) {
            *ui += di;
        }
    }
    Err(Error::Numerical(format!("implicit solve did not converge in {max_iter} iterations")))
}
