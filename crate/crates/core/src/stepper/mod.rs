//! Time integration.
//!
//! All schemes (first-order, IMEX multistep, IMEX Runge-Kutta stages) share
//! one update. Given levels `Q_j = (u_j, v_j)` and weights `alpha_j`,
//! `beta_j`, `gamma_j`, `gamma_imp`, the flux variable is solved in closed
//! form from
//!
//! ```text
//! E v* = E sum alpha_j v_j + dt [ sum beta_j (f_j - D p_x(u_j)) - sum gamma_j k_j v_j - gamma_imp k* v* ]
//! u* = sum alpha_j u_j - dt d/dx [ sum gamma_j v_j + gamma_imp v* ]
//! ```
//!
//! and substituted into the `u` update, which is then written as a single
//! conservative face flux. In the stiff limit the `v_j` contributions vanish
//! and the flux reduces to the limiting convection-diffusion flux, so the
//! discrete scheme is asymptotic preserving. In the implicit formulation the
//! `p_x` terms move to the implicit side and `u*` solves a banded system.

pub mod bootstrap;
pub mod implicit;

use std::collections::VecDeque;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{BoundaryCondition, LocalCoefs, Model, Scaling};
use crate::spatial::{
    derivative6, eigen_bound_general, face_gradient6, fill_ghosts, interior, weno5_faces,
    with_ghosts, Grid, Parity, GHOST, WENO_EPS,
};
use crate::tableaux::Tableau;

use implicit::{implicit_solve, DiffusionOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// One-step IMEX Euler with explicit diffusion.
    FirstOrder,
    /// Multistep, relaxation implicit, diffusion explicit.
    ApExplicit,
    /// Multistep, relaxation and diffusion implicit.
    ApImplicit,
}

impl Formulation {
    pub fn name(&self) -> &'static str {
        match self {
            Formulation::FirstOrder => "first-order",
            Formulation::ApExplicit => "ap-explicit",
            Formulation::ApImplicit => "ap-implicit",
        }
    }
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "first-order" | "first" => Ok(Self::FirstOrder),
            "ap-explicit" | "explicit" => Ok(Self::ApExplicit),
            "ap-implicit" | "implicit" => Ok(Self::ApImplicit),
            _ => Err(Error::Config(format!("unknown formulation '{s}'"))),
        }
    }
}

/// Discretization of the explicit `(D p_x)_x` term. The implicit formulation
/// always uses the sixth-order stencil.
///
/// With `dt = lambda dx^2` the sixth-order stencil has spectral radius
/// `6.04 lambda / dx^2`, outside the explicit stability interval of the
/// IMEX-BDF schemes for `lambda = 0.25`; the double Rusanov operator stays
/// inside it, so it is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionStencil {
    /// Conservative sixth-order 7-point stencil.
    Sixth,
    /// Central WENO/Rusanov derivative applied twice.
    DoubleRusanov,
}

impl FromStr for DiffusionStencil {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fd6" | "sixth" => Ok(Self::Sixth),
            "double_rusanov" => Ok(Self::DoubleRusanov),
            _ => Err(Error::Config(format!("unknown diffusion stencil '{s}'"))),
        }
    }
}

/// Time-step rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtRule {
    /// `lambda dx max(eps, dx)` for explicit diffusion, `lambda dx max(eps, 1)` for implicit.
    Diffusive,
    /// `lambda dx max(eps, min(1, dx / eps^{1-alpha}))`.
    Hyperbolic,
}

impl FromStr for DtRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "diffusive" | "parabolic" => Ok(Self::Diffusive),
            "hyperbolic" => Ok(Self::Hyperbolic),
            _ => Err(Error::Config(format!("unknown dt rule '{s}'"))),
        }
    }
}

/// Time step from the CFL number `lambda`.
pub fn select_dt(
    formulation: Formulation,
    rule: DtRule,
    grid: &Grid,
    scaling: &Scaling,
    lambda: f64,
) -> f64 {
    let dx = grid.dx();
    let eps = scaling.eps;
    match rule {
        DtRule::Diffusive => match formulation {
            Formulation::ApImplicit => lambda * dx * eps.max(1.0),
            _ => lambda * dx * eps.max(dx),
        },
        DtRule::Hyperbolic => {
            let worst = grid
                .centers()
                .iter()
                .map(|&x| eps.powf(1.0 - scaling.alpha.at(x)))
                .fold(0.0, f64::max);
            lambda * dx * eps.max((dx / worst).min(1.0))
        }
    }
}

/// Tuning knobs shared by all steppers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub formulation: Formulation,
    pub stencil: DiffusionStencil,
    pub weno_eps: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Treat CFL-number-above-one warnings as errors.
    pub strict_cfl: bool,
}

impl SolverOptions {
    pub fn new(formulation: Formulation) -> Self {
        Self {
            formulation,
            stencil: DiffusionStencil::DoubleRusanov,
            weno_eps: WENO_EPS,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            strict_cfl: false,
        }
    }
}

/// Model, scaling and grid together with per-cell and per-face coefficients.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Model,
    pub scaling: Scaling,
    pub grid: Grid,
    pub bc: BoundaryCondition,
    pub cells: Vec<LocalCoefs>,
    pub faces: Vec<LocalCoefs>,
}

impl Problem {
    pub fn new(model: Model, scaling: Scaling, grid: Grid, bc: BoundaryCondition) -> Result<Self> {
        scaling.validate()?;
        let coefs = |x: f64| -> Result<LocalCoefs> {
            let a = scaling.alpha.at(x);
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("alpha({x}) = {a} outside [0, 1]")));
            }
            Ok(LocalCoefs::new(&model, scaling.eps, a))
        };
        let cells = grid.centers().into_iter().map(coefs).collect::<Result<Vec<_>>>()?;
        let faces = grid.faces().into_iter().map(coefs).collect::<Result<Vec<_>>>()?;
        Ok(Self { model, scaling, grid, bc, cells, faces })
    }

    pub fn alpha_cells(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.alpha).collect()
    }

    /// `v = f(u) - D p(u)_x` with the sixth-order central derivative.
    pub fn well_prepared_v(&self, u: &[f64]) -> Vec<f64> {
        let mut p = with_ghosts(&u.iter().map(|&x| self.model.p(x)).collect::<Vec<_>>());
        fill_ghosts(&mut p, self.bc, Parity::Even);
        let dp = derivative6(&p, self.grid.dx());
        // start from v = 0 for the quadratic RW term, then one fixed-point sweep
        let mut v = vec![0.0; u.len()];
        for _ in 0..2 {
            v = (0..u.len())
                .map(|i| {
                    let c = &self.cells[i];
                    (self.model.f(u[i], v[i], c.eps2a) - c.d * dp[i]) / self.model.k(u[i])
                })
                .collect();
        }
        v
    }
}

/// Face reconstructions and derived quantities of one time level.
#[derive(Debug, Clone)]
struct FaceData {
    um: Vec<f64>,
    up: Vec<f64>,
    vm: Vec<f64>,
    vp: Vec<f64>,
    fm: Vec<f64>,
    fp: Vec<f64>,
    pm: Vec<f64>,
    pp: Vec<f64>,
    /// Wave-speed bound at faces.
    speed: Vec<f64>,
    /// Face value of `p_x` for the explicit diffusion term.
    grad: Vec<f64>,
    /// Sixth-order central `p_x` at cells (implicit formulation).
    dp_central: Vec<f64>,
    f_cell: Vec<f64>,
    k_cell: Vec<f64>,
    k_face: Vec<f64>,
}

/// One time level with ghosted fields.
#[derive(Debug, Clone)]
pub struct Level {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    data: FaceData,
}

impl Level {
    pub fn new(pb: &Problem, opts: &SolverOptions, t: f64, u: &[f64], v: &[f64]) -> Self {
        let mut ug = with_ghosts(u);
        let mut vg = with_ghosts(v);
        fill_ghosts(&mut ug, pb.bc, Parity::Even);
        fill_ghosts(&mut vg, pb.bc, Parity::Odd);
        let data = FaceData::build(pb, opts, &ug, &vg);
        Self { t, u: ug, v: vg, data }
    }

    pub fn u_interior(&self) -> &[f64] {
        interior(&self.u)
    }

    pub fn v_interior(&self) -> &[f64] {
        interior(&self.v)
    }

    pub fn mass(&self, dx: f64) -> f64 {
        self.u_interior().iter().sum::<f64>() * dx
    }
}

impl FaceData {
    fn build(pb: &Problem, opts: &SolverOptions, ug: &[f64], vg: &[f64]) -> Self {
        let n = pb.grid.n;
        let dx = pb.grid.dx();
        let m = &pb.model;
        let (um, up) = weno5_faces(ug, opts.weno_eps);
        let (vm, vp) = weno5_faces(vg, opts.weno_eps);
        let mut fm = Vec::with_capacity(n + 1);
        let mut fp = Vec::with_capacity(n + 1);
        let mut speed = Vec::with_capacity(n + 1);
        let mut k_face = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let e2 = pb.faces[k].eps2a;
            fm.push(m.f(um[k], vm[k], e2));
            fp.push(m.f(up[k], vp[k], e2));
            speed.push(m.wave_speed(um[k], vm[k], e2).max(m.wave_speed(up[k], vp[k], e2)));
            k_face.push(m.k(0.5 * (ug[k + GHOST - 1] + ug[k + GHOST])));
        }
        let pm: Vec<f64> = um.iter().map(|&x| m.p(x)).collect();
        let pp: Vec<f64> = up.iter().map(|&x| m.p(x)).collect();
        let mut pg: Vec<f64> = ug.iter().map(|&x| m.p(x)).collect();
        fill_ghosts(&mut pg, pb.bc, Parity::Even);
        let grad = match (opts.formulation, opts.stencil) {
            (Formulation::ApImplicit, _) | (_, DiffusionStencil::Sixth) => face_gradient6(&pg, dx),
            (_, DiffusionStencil::DoubleRusanov) => {
                let q: Vec<f64> =
                    (0..n).map(|i| 0.5 * (pm[i + 1] + pp[i + 1] - pm[i] - pp[i]) / dx).collect();
                let mut qg = with_ghosts(&q);
                fill_ghosts(&mut qg, pb.bc, Parity::Odd);
                let (qm, qp) = weno5_faces(&qg, opts.weno_eps);
                qm.iter().zip(&qp).map(|(a, b)| 0.5 * (a + b)).collect()
            }
        };
        let dp_central = if opts.formulation == Formulation::ApImplicit {
            derivative6(&pg, dx)
        } else {
            Vec::new()
        };
        let f_cell = (0..n).map(|i| m.f(ug[i + GHOST], vg[i + GHOST], pb.cells[i].eps2a)).collect();
        let k_cell = (0..n).map(|i| m.k(ug[i + GHOST])).collect();
        Self { um, up, vm, vp, fm, fp, pm, pp, speed, grad, dp_central, f_cell, k_cell, k_face }
    }
}

/// Weights of one update (multistep step or Runge-Kutta stage).
#[derive(Debug, Clone)]
pub struct UpdateWeights {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_imp: f64,
}

impl UpdateWeights {
    pub fn multistep(t: &Tableau) -> Self {
        Self {
            alpha: t.a.iter().map(|x| -x).collect(),
            beta: t.b.clone(),
            gamma: t.c.clone(),
            gamma_imp: t.c_minus1,
        }
    }
}

/// Diagnostics of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateDiag {
    /// Largest numerical-dissipation coefficient used.
    pub theta_max: f64,
    /// `theta_max * dt / dx`.
    pub cfl: f64,
    /// Cells violating the sub-characteristic condition.
    pub subchar_violations: usize,
    pub newton_iterations: usize,
}

/// Advance `levels` (newest first) by one update of size `dt`.
///
/// `kappa_state` is the interior `u` at which the relaxation rate of the new
/// level is frozen.
pub fn advance(
    pb: &Problem,
    opts: &SolverOptions,
    levels: &[&Level],
    w: &UpdateWeights,
    dt: f64,
    kappa_state: &[f64],
    t_new: f64,
) -> Result<(Level, UpdateDiag)> {
    let n = pb.grid.n;
    let dx = pb.grid.dx();
    let m = &pb.model;
    let nl = levels.len();
    debug_assert!(w.alpha.len() == nl && w.beta.len() == nl && w.gamma.len() == nl);
    let implicit = opts.formulation == Formulation::ApImplicit;
    let gi = w.gamma_imp;
    let mut diag = UpdateDiag::default();

    // relaxation rate frozen for the new level
    let (kap_c, kap_f): (Vec<f64>, Vec<f64>) = if m.constant_rate() {
        (vec![1.0; n], vec![1.0; n + 1])
    } else {
        let mut g = with_ghosts(kappa_state);
        fill_ghosts(&mut g, pb.bc, Parity::Even);
        (
            (0..n).map(|i| m.k(g[i + GHOST])).collect(),
            (0..=n).map(|k| m.k(0.5 * (g[k + GHOST - 1] + g[k + GHOST]))).collect(),
        )
    };

    // per-cell stiff weights
    let g_c: Vec<f64> = (0..n).map(|i| pb.cells[i].e + dt * gi * kap_c[i]).collect();
    let theta_c: Vec<f64> = (0..n).map(|i| pb.cells[i].e / g_c[i]).collect();
    let coup_c: Vec<f64> = (0..n).map(|i| pb.cells[i].e_sound / g_c[i]).collect();
    let g_f: Vec<f64> = (0..=n).map(|k| pb.faces[k].e + dt * gi * kap_f[k]).collect();

    // dissipation coefficient per level and face
    let theta_cap: Vec<Vec<f64>> = levels
        .iter()
        .map(|lv| {
            (0..=n)
                .map(|k| {
                    let l = k.saturating_sub(1);
                    let r = k.min(n - 1);
                    let sp = lv.data.speed[k];
                    let dpl = m.dp(lv.data.um[k]).max(m.dp(lv.data.up[k])).sqrt();
                    let bl = eigen_bound_general(sp, theta_c[l], coup_c[l] * dpl).cap;
                    let br = eigen_bound_general(sp, theta_c[r], coup_c[r] * dpl).cap;
                    bl.max(br)
                })
                .collect()
        })
        .collect();
    diag.theta_max = theta_cap.iter().flatten().fold(0.0, |a, &b| a.max(b));
    diag.cfl = diag.theta_max * dt / dx;

    // conservative face flux of the u update
    let mut flux = vec![0.0; n + 1];
    for k in 0..=n {
        let fc = &pb.faces[k];
        let gk = g_f[k];
        let theta_f = fc.e / gk;
        let wf = dt * gi / gk;
        let mut fl = 0.0;
        let mut diff = 0.0;
        for (j, lv) in levels.iter().enumerate() {
            let d = &lv.data;
            let th = theta_cap[j][k];
            let du = d.up[k] - d.um[k];
            let cv = if m.constant_rate() {
                w.gamma[j] * theta_f
            } else {
                w.gamma[j] * (fc.e + dt * gi * (kap_f[k] - d.k_face[k])) / gk
            } + gi * w.alpha[j] * theta_f;
            if cv != 0.0 {
                fl += cv * 0.5 * (d.vm[k] + d.vp[k] - th * du);
            }
            if w.beta[j] != 0.0 {
                fl += wf * w.beta[j] * 0.5 * (d.fm[k] + d.fp[k] - th * du);
            }
            let dw = if implicit { w.gamma[j] } else { w.beta[j] };
            diff += dw * d.grad[k];
        }
        flux[k] = fl - wf * fc.d * diff;
    }

    let mut u_new: Vec<f64> = (0..n)
        .map(|i| {
            let base: f64 = levels.iter().zip(&w.alpha).map(|(lv, a)| a * lv.u[i + GHOST]).sum();
            base - dt / dx * (flux[i + 1] - flux[i])
        })
        .collect();

    if implicit {
        let mu_face: Vec<f64> =
            (0..=n).map(|k| dt * (dt * gi / g_f[k]) * pb.faces[k].d * gi).collect();
        let op = DiffusionOperator { n, dx, mu_face, bc: pb.bc };
        let p = |x: f64| m.p(x);
        let dp = |x: f64| m.dp(x);
        let (sol, it) =
            implicit_solve(&op, &p, &dp, true, &u_new, &u_new, opts.newton_tol, opts.newton_max_iter)?;
        u_new = sol;
        diag.newton_iterations = it;
    }

    // closed-form flux variable
    let mut dp_new = Vec::new();
    if implicit {
        let mut pg = with_ghosts(&u_new.iter().map(|&x| m.p(x)).collect::<Vec<_>>());
        fill_ghosts(&mut pg, pb.bc, Parity::Even);
        dp_new = derivative6(&pg, dx);
    }
    let v_new: Vec<f64> = (0..n)
        .map(|i| {
            let c = &pb.cells[i];
            let mut acc_e = 0.0;
            let mut acc = 0.0;
            for (j, lv) in levels.iter().enumerate() {
                let d = &lv.data;
                let vj = lv.v[i + GHOST];
                acc_e += w.alpha[j] * vj;
                if implicit {
                    acc += w.beta[j] * d.f_cell[i]
                        - w.gamma[j] * (d.k_cell[i] * vj + c.d * d.dp_central[i]);
                } else {
                    // Rusanov jump on the E-scaled v equation: the v dissipation is
                    // dt * theta * Theta / 2 and fades as v relaxes onto u
                    let px = 0.5 * (d.pm[i + 1] + d.pp[i + 1] - d.pm[i] - d.pp[i]) / dx;
                    let diss = 0.5
                        * (theta_cap[j][i + 1] * (d.vp[i + 1] - d.vm[i + 1])
                            - theta_cap[j][i] * (d.vp[i] - d.vm[i]))
                        / dx;
                    acc += w.beta[j] * (d.f_cell[i] - c.d * px + c.e * diss)
                        - w.gamma[j] * d.k_cell[i] * vj;
                }
            }
            if implicit {
                acc -= gi * c.d * dp_new[i];
            }
            (c.e * acc_e + dt * acc) / g_c[i]
        })
        .collect();

    if u_new.iter().chain(&v_new).any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite state at t = {t_new}")));
    }
    for (i, &u) in u_new.iter().enumerate() {
        let c = &pb.cells[i];
        let fprime = m.wave_speed(u, v_new[i], c.eps2a);
        if fprime * fprime >= m.dp(u) * c.stiff {
            diag.subchar_violations += 1;
        }
    }
    Ok((Level::new(pb, opts, t_new, &u_new, &v_new), diag))
}

/// Summary of a completed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    pub diag: UpdateDiag,
    /// `sum u dx` after the step.
    pub mass: f64,
    /// `|mass change| / (sum |u| dx)` over this step.
    pub mass_drift: f64,
}

/// Multistep integrator state: history ring (newest first) and settings.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub problem: Problem,
    pub opts: SolverOptions,
    pub tableau: Tableau,
    pub dt: f64,
    history: VecDeque<Level>,
    weights: UpdateWeights,
    extrap: Vec<f64>,
    pub steps: usize,
    pub theta_max: f64,
    pub max_cfl: f64,
    pub max_mass_drift: f64,
    pub subchar_warnings: usize,
}

impl Simulation {
    /// Start from initial data. `v0 = None` selects the well-prepared closure.
    pub fn new(
        problem: Problem,
        opts: SolverOptions,
        tableau: Tableau,
        u0: &[f64],
        v0: Option<&[f64]>,
        dt: f64,
    ) -> Result<Self> {
        if u0.len() != problem.grid.n || v0.is_some_and(|v| v.len() != problem.grid.n) {
            return Err(Error::Config("initial data length does not match the grid".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let tableau = if opts.formulation == Formulation::FirstOrder { Tableau::euler() } else { tableau };
        let v0 = match v0 {
            Some(v) => v.to_vec(),
            None => problem.well_prepared_v(u0),
        };
        let lv = Level::new(&problem, &opts, 0.0, u0, &v0);
        let weights = UpdateWeights::multistep(&tableau);
        let extrap = tableau.extrapolation_weights();
        let mut history = VecDeque::with_capacity(tableau.steps);
        history.push_front(lv);
        Ok(Self {
            problem,
            opts,
            tableau,
            dt,
            history,
            weights,
            extrap,
            steps: 0,
            theta_max: 0.0,
            max_cfl: 0.0,
            max_mass_drift: 0.0,
            subchar_warnings: 0,
        })
    }

    /// Replace the history (newest first) with given `(u, v)` interior levels.
    pub fn set_history(&mut self, levels: &[(Vec<f64>, Vec<f64>)], t_newest: f64) {
        self.history.clear();
        for (j, (u, v)) in levels.iter().enumerate() {
            let t = t_newest - j as f64 * self.dt;
            self.history.push_back(Level::new(&self.problem, &self.opts, t, u, v));
        }
    }

    pub fn current(&self) -> &Level {
        &self.history[0]
    }

    pub fn time(&self) -> f64 {
        self.history[0].t
    }

    pub fn history(&self) -> impl Iterator<Item = &Level> {
        self.history.iter()
    }

    /// True once the history holds `s` levels.
    pub fn is_bootstrapped(&self) -> bool {
        self.history.len() >= self.tableau.steps
    }

    fn record(&mut self, diag: &UpdateDiag, before: f64, after: &Level) -> Result<StepReport> {
        let dx = self.problem.grid.dx();
        let scale = after.u_interior().iter().map(|x| x.abs()).sum::<f64>() * dx;
        let mass = after.mass(dx);
        let drift = if scale > 0.0 { (mass - before).abs() / scale } else { 0.0 };
        if self.problem.bc == BoundaryCondition::Periodic {
            self.max_mass_drift = self.max_mass_drift.max(drift);
        }
        self.theta_max = self.theta_max.max(diag.theta_max);
        self.max_cfl = self.max_cfl.max(diag.cfl);
        if diag.cfl > 1.0 {
            if self.opts.strict_cfl {
                return Err(Error::Numerical(format!(
                    "CFL number {:.3} exceeds 1 at t = {}",
                    diag.cfl, after.t
                )));
            }
            log::warn!("CFL number {:.3} exceeds 1 at t = {:.6}", diag.cfl, after.t);
        }
        if diag.subchar_violations > 0 {
            if self.subchar_warnings == 0 {
                log::warn!(
                    "sub-characteristic condition violated in {} cells at t = {:.6}",
                    diag.subchar_violations,
                    after.t
                );
            }
            self.subchar_warnings += diag.subchar_violations;
        }
        Ok(StepReport { t: after.t, dt: self.dt, diag: *diag, mass, mass_drift: drift })
    }

    /// Fill the history to `s` levels with IMEX Runge-Kutta substeps.
    pub fn bootstrap_rk3(&mut self) -> Result<()> {
        while !self.is_bootstrapped() {
            self.rk_step()?;
        }
        Ok(())
    }

    /// One step of size `dt` by Runge-Kutta substeps, pushed onto the history.
    pub fn rk_step(&mut self) -> Result<StepReport> {
        let dx = self.problem.grid.dx();
        let s = self.tableau.steps as f64;
        let h_max = self.dt.min(bootstrap::LAMBDA_BOOT * dx.powf((s / 3.0).max(1.0)));
        let sub = (self.dt / h_max - 1e-9).ceil().max(1.0) as usize;
        let h = self.dt / sub as f64;
        let t0 = self.time();
        let mut lv = self.history[0].clone();
        let mut diag = UpdateDiag::default();
        for k in 0..sub {
            let t_end = if k + 1 == sub { t0 + self.dt } else { t0 + (k + 1) as f64 * h };
            let (next, d) = bootstrap::rk_substep(&self.problem, &self.opts, &lv, h, t_end)?;
            diag.theta_max = diag.theta_max.max(d.theta_max);
            diag.cfl = diag.cfl.max(d.cfl);
            diag.subchar_violations = diag.subchar_violations.max(d.subchar_violations);
            lv = next;
        }
        let before = self.history[0].mass(dx);
        let rep = self.record(&diag, before, &lv)?;
        self.push(lv);
        self.steps += 1;
        Ok(rep)
    }

    fn push(&mut self, lv: Level) {
        self.history.push_front(lv);
        self.history.truncate(self.tableau.steps);
    }

    /// One multistep update; bootstraps first if needed.
    pub fn step(&mut self) -> Result<StepReport> {
        if !self.is_bootstrapped() {
            return self.rk_step();
        }
        let n = self.problem.grid.n;
        let levels: Vec<&Level> = self.history.iter().collect();
        let kappa: Vec<f64> = if self.problem.model.constant_rate() {
            Vec::new()
        } else {
            (0..n)
                .map(|i| {
                    levels.iter().zip(&self.extrap).map(|(lv, e)| e * lv.u[i + GHOST]).sum()
                })
                .collect()
        };
        let t_new = levels[0].t + self.dt;
        let (lv, diag) =
            advance(&self.problem, &self.opts, &levels, &self.weights, self.dt, &kappa, t_new)?;
        let before = levels[0].mass(self.problem.grid.dx());
        let rep = self.record(&diag, before, &lv)?;
        self.push(lv);
        self.steps += 1;
        Ok(rep)
    }

    /// Take `count` steps.
    pub fn advance_steps(&mut self, count: usize) -> Result<()> {
        for _ in 0..count {
            self.step()?;
        }
        Ok(())
    }
}

/// Number of steps and adjusted time step reaching `t_final` exactly.
pub fn fit_steps(t_final: f64, dt_max: f64) -> (usize, f64) {
    let steps = ((t_final / dt_max) - 1e-9).ceil().max(1.0) as usize;
    (steps, t_final / steps as f64)
}
