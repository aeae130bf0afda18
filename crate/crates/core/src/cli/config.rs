//! Run configuration: presets, `key = value` files and overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::models::{AlphaProfile, BoundaryCondition, Model, Scaling};
use crate::reference::barenblatt;
use crate::spatial::{cell_average_sin, Grid};
use crate::stepper::{
    fit_steps, select_dt, DiffusionStencil, DtRule, Formulation, Problem, SolverOptions,
};
use crate::tableaux::{builtin, load_tableau, parse_real, Tableau, ORDER_TOL};

/// Final time of the smooth periodic convergence problem.
pub const TEST1_FINAL_TIME: f64 = 0.06;

pub const PRESETS: &[&str] = &[
    "test1",
    "test2-riemann",
    "test3-barenblatt",
    "test4a-riemann",
    "test4b-square-wave",
    "test4c-variable-alpha",
];

/// Initial `u` profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Initial {
    /// Cell averages of `sin(2 pi x)`.
    Sine,
    /// `u_left` for `x <= x_jump`, `u_right` beyond.
    Riemann { u_left: f64, u_right: f64, x_jump: f64 },
    /// Barenblatt profile at `t = 0`.
    Barenblatt,
    /// `inside` for `|x| <= half_width`, `outside` elsewhere.
    SquareWave { inside: f64, outside: f64, half_width: f64 },
}

/// Initial `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialFlux {
    /// Chapman-Enskog closure `f(u) - D p(u)_x`.
    WellPrepared,
    Zero,
    /// `sin(2 pi x) - cos(2 pi x)` cell averages (the smooth problem only).
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub model: Model,
    pub eps: f64,
    pub alpha: AlphaProfile,
    pub scheme: String,
    pub tableau_file: Option<PathBuf>,
    pub formulation: Formulation,
    pub nx: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub bc: BoundaryCondition,
    pub cfl: f64,
    pub t_final: f64,
    pub dt_rule: DtRule,
    pub diffusion_stencil: DiffusionStencil,
    pub weno_eps: f64,
    pub newton_tol: f64,
    pub initial: Initial,
    pub initial_flux: InitialFlux,
    pub strict_cfl: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::test1()
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("expected a boolean, got '{v}'"))),
    }
}

impl RunConfig {
    fn test1() -> Self {
        Self {
            preset: Some("test1".into()),
            model: Model::LinearRelaxation { gamma: 1.0 },
            eps: 1.0,
            alpha: AlphaProfile::Constant(1.0),
            scheme: "BDF2".into(),
            tableau_file: None,
            formulation: Formulation::ApExplicit,
            nx: 128,
            x_lo: 0.0,
            x_hi: 1.0,
            bc: BoundaryCondition::Periodic,
            cfl: 0.25,
            t_final: TEST1_FINAL_TIME,
            dt_rule: DtRule::Diffusive,
            diffusion_stencil: DiffusionStencil::DoubleRusanov,
            weno_eps: crate::spatial::WENO_EPS,
            newton_tol: 1e-12,
            initial: Initial::Sine,
            initial_flux: InitialFlux::WellPrepared,
            strict_cfl: false,
        }
    }

    /// Built-in scenario by name.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::test1();
        let riemann = Initial::Riemann { u_left: 4.0, u_right: 2.0, x_jump: 2.0 };
        let cfg = match name.to_ascii_lowercase().as_str() {
            "test1" => base,
            "test2-riemann" | "test2" => Self {
                preset: Some("test2-riemann".into()),
                eps: 1e-6,
                nx: 80,
                x_hi: 4.0,
                bc: BoundaryCondition::ZeroFlux,
                cfl: 0.4,
                t_final: 0.25,
                initial: riemann,
                initial_flux: InitialFlux::Zero,
                ..base
            },
            "test3-barenblatt" | "test3" => Self {
                preset: Some("test3-barenblatt".into()),
                model: Model::HeatOrPorous { porous: true },
                eps: 1e-6,
                alpha: AlphaProfile::Constant(0.0),
                nx: 80,
                x_lo: -10.0,
                x_hi: 10.0,
                bc: BoundaryCondition::ZeroFlux,
                cfl: 0.4,
                t_final: 3.0,
                initial: Initial::Barenblatt,
                initial_flux: InitialFlux::Zero,
                ..base
            },
            "test4a-riemann" | "test4a" => Self {
                preset: Some("test4a-riemann".into()),
                model: Model::RuijgrookWu,
                eps: 1e-6,
                nx: 100,
                x_hi: 4.0,
                bc: BoundaryCondition::ZeroFlux,
                cfl: 0.4,
                t_final: 0.25,
                dt_rule: DtRule::Hyperbolic,
                initial: riemann,
                ..base
            },
            "test4b-square-wave" | "test4b" => Self {
                preset: Some("test4b-square-wave".into()),
                model: Model::RuijgrookWu,
                eps: 0.7,
                scheme: "BDF4".into(),
                formulation: Formulation::ApImplicit,
                nx: 100,
                x_lo: -0.5,
                x_hi: 0.5,
                bc: BoundaryCondition::Reflecting,
                cfl: 0.1,
                t_final: 0.2,
                initial: Initial::SquareWave { inside: 1.0, outside: 0.0, half_width: 0.125 },
                initial_flux: InitialFlux::Zero,
                ..base
            },
            "test4c-variable-alpha" | "test4c" => Self {
                preset: Some("test4c-variable-alpha".into()),
                model: Model::RuijgrookWu,
                eps: 1e-8,
                alpha: AlphaProfile::SingleTransition { width: 0.01 },
                scheme: "BDF3".into(),
                formulation: Formulation::ApImplicit,
                nx: 100,
                x_lo: -0.5,
                x_hi: 0.5,
                bc: BoundaryCondition::Reflecting,
                cfl: 0.1,
                t_final: 0.05,
                initial: Initial::SquareWave { inside: 1.0, outside: 0.5, half_width: 0.125 },
                initial_flux: InitialFlux::Zero,
                ..base
            },
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset '{name}' (available: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let v = value.trim();
        let real = || parse_real(v);
        match key.as_str() {
            "preset" => {
                let keep_strict = self.strict_cfl;
                *self = Self::preset(v)?;
                self.strict_cfl = keep_strict;
            }
            "model" => {
                self.model = match v.to_ascii_lowercase().as_str() {
                    "linear" => Model::LinearRelaxation { gamma: 1.0 },
                    "heat" => Model::HeatOrPorous { porous: false },
                    "porous" => Model::HeatOrPorous { porous: true },
                    "ruijgrook_wu" | "ruijgrook-wu" | "rw" => Model::RuijgrookWu,
                    _ => return Err(Error::Config(format!("unknown model '{v}'"))),
                }
            }
            "gamma" => match &mut self.model {
                Model::LinearRelaxation { gamma } => *gamma = real()?,
                _ => return Err(Error::Config("gamma applies to the linear model only".into())),
            },
            "eps" | "epsilon" => self.eps = real()?,
            "alpha" => self.alpha = AlphaProfile::Constant(real()?),
            "profile" | "alpha_profile" => {
                let width = 0.01;
                self.alpha = match v.to_ascii_lowercase().replace('_', "-").as_str() {
                    "single-transition" | "single" => AlphaProfile::SingleTransition { width },
                    "double-transition" | "double" => {
                        AlphaProfile::DoubleTransition { width, offset: 0.075 }
                    }
                    "constant" => AlphaProfile::Constant(self.alpha.at(0.0)),
                    _ => return Err(Error::Config(format!("unknown alpha profile '{v}'"))),
                };
                if self.preset.as_deref() == Some("test4c-variable-alpha") {
                    self.t_final = match self.alpha {
                        AlphaProfile::DoubleTransition { .. } => 0.1,
                        _ => 0.05,
                    };
                }
            }
            "profile_width" => match &mut self.alpha {
                AlphaProfile::SingleTransition { width }
                | AlphaProfile::DoubleTransition { width, .. } => *width = real()?,
                _ => return Err(Error::Config("profile_width needs a transition profile".into())),
            },
            "profile_offset" => match &mut self.alpha {
                AlphaProfile::DoubleTransition { offset, .. } => *offset = real()?,
                _ => return Err(Error::Config("profile_offset needs the double transition".into())),
            },
            "scheme" => {
                builtin(v)?;
                self.scheme = v.to_string();
                self.tableau_file = None;
            }
            "tableau_file" => self.tableau_file = Some(PathBuf::from(v)),
            "formulation" => self.formulation = v.parse()?,
            "nx" | "n" => {
                self.nx = v.parse().map_err(|_| Error::Config(format!("invalid nx '{v}'")))?
            }
            "x_lo" => self.x_lo = real()?,
            "x_hi" => self.x_hi = real()?,
            "domain" => {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("domain must be 'lo,hi', got '{v}'")))?;
                self.x_lo = parse_real(a.trim())?;
                self.x_hi = parse_real(b.trim())?;
            }
            "bc" => self.bc = v.parse()?,
            "cfl" | "lambda" => self.cfl = real()?,
            "t_final" | "t" => self.t_final = real()?,
            "dt_rule" => self.dt_rule = v.parse()?,
            "diffusion_stencil" => self.diffusion_stencil = v.parse()?,
            "weno_eps" => self.weno_eps = real()?,
            "newton_tol" => self.newton_tol = real()?,
            "initial" => {
                self.initial = match v.to_ascii_lowercase().as_str() {
                    "sine" => Initial::Sine,
                    "riemann" => Initial::Riemann { u_left: 4.0, u_right: 2.0, x_jump: 2.0 },
                    "barenblatt" => Initial::Barenblatt,
                    "square" | "square_wave" => {
                        Initial::SquareWave { inside: 1.0, outside: 0.0, half_width: 0.125 }
                    }
                    _ => return Err(Error::Config(format!("unknown initial profile '{v}'"))),
                }
            }
            "u_left" | "u_right" | "x_jump" => match &mut self.initial {
                Initial::Riemann { u_left, u_right, x_jump } => {
                    let t = match key.as_str() {
                        "u_left" => u_left,
                        "u_right" => u_right,
                        _ => x_jump,
                    };
                    *t = real()?;
                }
                _ => return Err(Error::Config(format!("{key} needs initial = riemann"))),
            },
            "u_inside" | "u_outside" | "half_width" => match &mut self.initial {
                Initial::SquareWave { inside, outside, half_width } => {
                    let t = match key.as_str() {
                        "u_inside" => inside,
                        "u_outside" => outside,
                        _ => half_width,
                    };
                    *t = real()?;
                }
                _ => return Err(Error::Config(format!("{key} needs initial = square"))),
            },
            "initial_flux" | "v0" => {
                self.initial_flux = match v.to_ascii_lowercase().replace('_', "-").as_str() {
                    "well-prepared" => InitialFlux::WellPrepared,
                    "zero" => InitialFlux::Zero,
                    "literal" => InitialFlux::Literal,
                    _ => return Err(Error::Config(format!("unknown initial flux '{v}'"))),
                }
            }
            "literal_initial_data" => {
                if parse_bool(v)? {
                    self.initial_flux = InitialFlux::Literal;
                } else if self.initial_flux == InitialFlux::Literal {
                    self.initial_flux = InitialFlux::WellPrepared;
                }
            }
            "strict_cfl" => self.strict_cfl = parse_bool(v)?,
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Apply the lines of a `key = value` file. `#` starts a comment.
    /// A `preset` line resets everything set before it.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", ln + 1)))?;
            self.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", ln + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn tableau(&self) -> Result<Tableau> {
        match &self.tableau_file {
            Some(p) => load_tableau(p),
            None => builtin(&self.scheme),
        }
    }

    pub fn scaling(&self) -> Scaling {
        Scaling { eps: self.eps, alpha: self.alpha }
    }

    pub fn validate(&self) -> Result<()> {
        self.scaling().validate()?;
        let pos = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        pos("cfl", self.cfl)?;
        pos("t_final", self.t_final)?;
        pos("weno_eps", self.weno_eps)?;
        pos("newton_tol", self.newton_tol)?;
        if !(self.x_hi > self.x_lo) {
            return Err(Error::Config(format!("empty domain [{}, {}]", self.x_lo, self.x_hi)));
        }
        let s = self.tableau()?.steps;
        if self.nx < 2 * s + 7 {
            return Err(Error::Config(format!("nx = {} too small, need at least {}", self.nx, 2 * s + 7)));
        }
        if self.initial_flux == InitialFlux::Literal && self.initial != Initial::Sine {
            return Err(Error::Config("literal initial flux is defined for the sine profile only".into()));
        }
        Ok(())
    }

    /// Resolved configuration as `key = value` lines, readable by [`apply_text`](Self::apply_text).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("model", self.model.name().into());
        if let Model::LinearRelaxation { gamma } = self.model {
            kv("gamma", gamma.to_string());
        }
        kv("eps", format!("{:e}", self.eps));
        match self.alpha {
            AlphaProfile::Constant(a) => kv("alpha", a.to_string()),
            AlphaProfile::SingleTransition { width } => {
                kv("profile", "single-transition".into());
                kv("profile_width", width.to_string());
            }
            AlphaProfile::DoubleTransition { width, offset } => {
                kv("profile", "double-transition".into());
                kv("profile_width", width.to_string());
                kv("profile_offset", offset.to_string());
            }
        }
        match &self.tableau_file {
            Some(p) => kv("tableau_file", p.display().to_string()),
            None => kv("scheme", self.scheme.clone()),
        }
        kv("formulation", self.formulation.name().into());
        kv("nx", self.nx.to_string());
        kv("domain", format!("{},{}", self.x_lo, self.x_hi));
        kv(
            "bc",
            match self.bc {
                BoundaryCondition::Periodic => "periodic",
                BoundaryCondition::ZeroFlux => "zero-flux",
                BoundaryCondition::Reflecting => "reflecting",
            }
            .into(),
        );
        kv("cfl", self.cfl.to_string());
        kv("t_final", self.t_final.to_string());
        kv(
            "dt_rule",
            match self.dt_rule {
                DtRule::Diffusive => "diffusive",
                DtRule::Hyperbolic => "hyperbolic",
            }
            .into(),
        );
        kv(
            "diffusion_stencil",
            match self.diffusion_stencil {
                DiffusionStencil::Sixth => "fd6",
                DiffusionStencil::DoubleRusanov => "double_rusanov",
            }
            .into(),
        );
        kv("weno_eps", format!("{:e}", self.weno_eps));
        kv("newton_tol", format!("{:e}", self.newton_tol));
        match self.initial {
            Initial::Sine => kv("initial", "sine".into()),
            Initial::Barenblatt => kv("initial", "barenblatt".into()),
            Initial::Riemann { u_left, u_right, x_jump } => {
                kv("initial", "riemann".into());
                kv("u_left", u_left.to_string());
                kv("u_right", u_right.to_string());
                kv("x_jump", x_jump.to_string());
            }
            Initial::SquareWave { inside, outside, half_width } => {
                kv("initial", "square".into());
                kv("u_inside", inside.to_string());
                kv("u_outside", outside.to_string());
                kv("half_width", half_width.to_string());
            }
        }
        kv(
            "initial_flux",
            match self.initial_flux {
                InitialFlux::WellPrepared => "well-prepared",
                InitialFlux::Zero => "zero",
                InitialFlux::Literal => "literal",
            }
            .into(),
        );
        kv("strict_cfl", self.strict_cfl.to_string());
        s
    }

    /// Assemble the problem, initial data and time step.
    pub fn build(&self) -> Result<Setup> {
        self.validate()?;
        let tableau = self.tableau()?;
        tableau.verify(ORDER_TOL.max(1e-12))?;
        let grid = Grid::new(self.x_lo, self.x_hi, self.nx)?;
        let problem = Problem::new(self.model, self.scaling(), grid, self.bc)?;
        let two_pi = 2.0 * std::f64::consts::PI;
        let xs = grid.centers();
        let u0: Vec<f64> = match self.initial {
            Initial::Sine => cell_average_sin(&grid, two_pi, 0.0),
            Initial::Riemann { u_left, u_right, x_jump } => {
                xs.iter().map(|&x| if x <= x_jump { u_left } else { u_right }).collect()
            }
            Initial::Barenblatt => xs.iter().map(|&x| barenblatt(x, 0.0)).collect(),
            Initial::SquareWave { inside, outside, half_width } => {
                xs.iter().map(|&x| if x.abs() <= half_width { inside } else { outside }).collect()
            }
        };
        let v0 = match self.initial_flux {
            InitialFlux::WellPrepared => None,
            InitialFlux::Zero => Some(vec![0.0; self.nx]),
            InitialFlux::Literal => {
                // sin - cos = sqrt(2) sin(. - pi/4)
                let s = cell_average_sin(&grid, two_pi, -std::f64::consts::FRAC_PI_4);
                Some(s.iter().map(|x| x * std::f64::consts::SQRT_2).collect())
            }
        };
        let mut opts = SolverOptions::new(self.formulation);
        opts.stencil = self.diffusion_stencil;
        opts.weno_eps = self.weno_eps;
        opts.newton_tol = self.newton_tol;
        opts.strict_cfl = self.strict_cfl;
        let dt_max = select_dt(self.formulation, self.dt_rule, &grid, &problem.scaling, self.cfl);
        let (steps, dt) = fit_steps(self.t_final, dt_max);
        Ok(Setup { problem, opts, tableau, u0, v0, dt, steps })
    }
}

/// Everything needed to start a simulation.
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: Problem,
    pub opts: SolverOptions,
    pub tableau: Tableau,
    pub u0: Vec<f64>,
    pub v0: Option<Vec<f64>>,
    pub dt: f64,
    pub steps: usize,
}

impl Setup {
    pub fn simulation(&self) -> Result<crate::stepper::Simulation> {
        crate::stepper::Simulation::new(
            self.problem.clone(),
            self.opts,
            self.tableau.clone(),
            &self.u0,
            self.v0.as_deref(),
            self.dt,
        )
    }

    /// Integrate to the final time; returns the simulation for inspection.
    pub fn run(&self) -> Result<crate::stepper::Simulation> {
        let mut sim = self.simulation()?;
        sim.advance_steps(self.steps)?;
        Ok(sim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for p in PRESETS {
            let cfg = RunConfig::preset(p).unwrap();
            let s = cfg.build().unwrap();
            assert!(s.dt * s.steps as f64 - cfg.t_final < 1e-12, "{p}");
        }
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn text_round_trip() {
        for p in PRESETS {
            let mut cfg = RunConfig::preset(p).unwrap();
            cfg.set("profile", "double-transition").unwrap();
            let mut back = RunConfig::default();
            back.apply_text(&cfg.to_text()).unwrap();
            back.preset = cfg.preset.clone();
            assert_eq!(back, cfg, "{p}");
        }
    }

    #[test]
    fn bad_settings_rejected() {
        let mut c = RunConfig::default();
        assert!(c.set("scheme", "RK4").is_err());
        assert!(c.set("colour", "red").is_err());
        assert!(c.apply_text("eps 3").is_err());
        c.set("eps", "2").unwrap();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.set("nx", "8").unwrap();
        assert!(c.validate().is_err());
        let mut c = RunConfig::preset("test2-riemann").unwrap();
        c.set("literal_initial_data", "true").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn literal_flux_matches_printed_data() {
        let mut c = RunConfig::default();
        c.set("literal_initial_data", "yes").unwrap();
        let s = c.build().unwrap();
        let v = s.v0.unwrap();
        let g = s.problem.grid;
        let k = 2.0 * std::f64::consts::PI;
        let f = (0.5 * k * g.dx()).sin() / (0.5 * k * g.dx());
        for (i, vi) in v.iter().enumerate() {
            let x = g.center(i);
            assert!((vi - f * ((k * x).sin() - (k * x).cos())).abs() < 1e-14);
        }
    }
}
