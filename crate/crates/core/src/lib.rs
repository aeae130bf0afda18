//! Asymptotic-preserving IMEX linear multistep schemes for hyperbolic
//! relaxation systems
//!
//! ```text
//! u_t + v_x = 0
//! v_t + eps^{-2 alpha} p(u)_x = -eps^{-(1+alpha)} (v - f(u))
//! ```
//!
//! and relatives, across hyperbolic and diffusive scalings.

pub mod cli;
pub mod error;
pub mod models;
pub mod reference;
pub mod spatial;
pub mod stability;
pub mod stepper;
pub mod tableaux;

pub use error::{Error, Result};
pub use tableaux::Tableau;
