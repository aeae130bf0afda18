//! Relaxation models, scalings and boundary conditions.
//!
//! Every model has the form
//!
//! ```text
//! u_t + v_x = 0
//! v_t + eps^{-a_p} p(u)_x = -eps^{-a_s} (k(u) v - f(u, v))
//! ```
//!
//! Multiplying the second equation by `E = eps^{a_s}` exposes the stiff
//! weight `E` and the diffusion weight `D = eps^{a_s - a_p}`.

use crate::error::{Error, Result};

/// Densities below this are clamped when evaluating the porous relaxation rate.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// `f = gamma u`, `p = u`, unit relaxation rate.
    LinearRelaxation { gamma: f64 },
    /// `f = 0`, `p = u`, stiffness `eps^{-2}` and `eps^{-(2+alpha)}`.
    /// The rate is `1` (heat) or `1/(2 rho)` (porous medium with `m = 2`).
    HeatOrPorous { porous: bool },
    /// `f = (u^2 - eps^{2 alpha} v^2) / 2`, `p = u`.
    RuijgrookWu,
}

impl Model {
    /// Exponent of the pressure-gradient stiffness.
    pub fn a_p(&self, alpha: f64) -> f64 {
        match self {
            Model::HeatOrPorous { .. } => 2.0,
            _ => 2.0 * alpha,
        }
    }

    /// Exponent of the relaxation stiffness.
    pub fn a_s(&self, alpha: f64) -> f64 {
        match self {
            Model::HeatOrPorous { .. } => 2.0 + alpha,
            _ => 1.0 + alpha,
        }
    }

    /// Equilibrium flux `f(u, v)`; `eps2a = eps^{2 alpha}`.
    #[inline]
    pub fn f(&self, u: f64, v: f64, eps2a: f64) -> f64 {
        match *self {
            Model::LinearRelaxation { gamma } => gamma * u,
            Model::HeatOrPorous { .. } => 0.0,
            Model::RuijgrookWu => 0.5 * (u * u - eps2a * v * v),
        }
    }

    /// Bound on `|df/du|` used for the numerical dissipation.
    #[inline]
    pub fn wave_speed(&self, u: f64, v: f64, eps2a: f64) -> f64 {
        match *self {
            Model::LinearRelaxation { gamma } => gamma.abs(),
            Model::HeatOrPorous { .. } => 0.0,
            Model::RuijgrookWu => u.abs() + (eps2a * v).abs(),
        }
    }

    #[inline]
    pub fn p(&self, u: f64) -> f64 {
        u
    }

    #[inline]
    pub fn dp(&self, _u: f64) -> f64 {
        1.0
    }

    /// Relaxation rate `k(u)`.
    #[inline]
    pub fn k(&self, u: f64) -> f64 {
        match *self {
            Model::HeatOrPorous { porous: true } => 0.5 / u.max(DENSITY_FLOOR),
            _ => 1.0,
        }
    }

    /// True when `k` does not depend on the state.
    pub fn constant_rate(&self) -> bool {
        !matches!(self, Model::HeatOrPorous { porous: true })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::LinearRelaxation { .. } => "linear",
            Model::HeatOrPorous { porous: false } => "heat",
            Model::HeatOrPorous { porous: true } => "porous",
            Model::RuijgrookWu => "ruijgrook-wu",
        }
    }
}

/// Spatial profile of the scaling exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaProfile {
    Constant(f64),
    /// `1 - H(x)/2` with the logistic step `H(x) = 1/(1 + exp(x/width))`.
    SingleTransition { width: f64 },
    /// `1/2 - (H(x + offset) - H(x - offset))/2`.
    DoubleTransition { width: f64, offset: f64 },
}

fn logistic(x: f64, width: f64) -> f64 {
    1.0 / (1.0 + (x / width).exp())
}

impl AlphaProfile {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            AlphaProfile::Constant(a) => a,
            AlphaProfile::SingleTransition { width } => 1.0 - 0.5 * logistic(x, width),
            AlphaProfile::DoubleTransition { width, offset } => {
                0.5 - 0.5 * (logistic(x + offset, width) - logistic(x - offset, width))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, AlphaProfile::Constant(_))
    }
}

/// Relaxation parameter and scaling exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub eps: f64,
    pub alpha: AlphaProfile,
}

impl Scaling {
    pub fn new(eps: f64, alpha: f64) -> Result<Self> {
        let s = Self { eps, alpha: AlphaProfile::Constant(alpha) };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Config(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        if let AlphaProfile::Constant(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("alpha must lie in [0, 1], got {a}")));
            }
        }
        Ok(())
    }
}

/// Scaling-dependent weights at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefs {
    pub alpha: f64,
    /// `eps^{a_s}`
    pub e: f64,
    /// `eps^{a_s - a_p}`
    pub d: f64,
    /// `eps^{-a_p}`, the squared frozen sound speed of the relaxation system.
    pub stiff: f64,
    /// `eps^{2 alpha}`
    pub eps2a: f64,
    /// `E * sqrt(stiff) = eps^{a_s - a_p/2}`, finite in the small-`eps` limit.
    pub e_sound: f64,
}

impl LocalCoefs {
    pub fn new(model: &Model, eps: f64, alpha: f64) -> Self {
        let a_p = model.a_p(alpha);
        let a_s = model.a_s(alpha);
        Self {
            alpha,
            e: eps.powf(a_s),
            d: eps.powf(a_s - a_p),
            stiff: eps.powf(-a_p),
            eps2a: eps.powf(2.0 * alpha),
            e_sound: eps.powf(a_s - 0.5 * a_p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Periodic,
    /// Constant extrapolation of all variables.
    ZeroFlux,
    /// Mirror: `u` even, `v` odd.
    Reflecting,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Self::Periodic),
            "zero-flux" | "zeroflux" | "neumann" => Ok(Self::ZeroFlux),
            "reflecting" | "wall" => Ok(Self::Reflecting),
            _ => Err(Error::Config(format!("unknown boundary condition '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diffusive_scaling_weights() {
        let m = Model::LinearRelaxation { gamma: 1.0 };
        let c = LocalCoefs::new(&m, 0.1, 1.0);
        assert!((c.e - 0.01).abs() < 1e-15);
        assert!((c.d - 1.0).abs() < 1e-15);
        assert!((c.stiff - 100.0).abs() < 1e-10);
        let h = LocalCoefs::new(&Model::HeatOrPorous { porous: true }, 0.1, 0.0);
        assert!((h.e - 0.01).abs() < 1e-15 && (h.d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_profiles() {
        let s = AlphaProfile::SingleTransition { width: 0.01 };
        assert!((s.at(-0.4) - 0.5).abs() < 1e-12 && (s.at(0.4) - 1.0).abs() < 1e-12);
        let d = AlphaProfile::DoubleTransition { width: 0.01, offset: 0.075 };
        assert!((d.at(0.0) - 1.0).abs() < 1e-3 && (d.at(0.4) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn porous_rate() {
        let m = Model::HeatOrPorous { porous: true };
        assert_eq!(m.k(2.0), 0.25);
        assert!(m.k(0.0).is_finite());
        assert!(Scaling::new(0.0, 1.0).is_err());
        assert!(Scaling::new(0.5, 1.5).is_err());
    }
}
