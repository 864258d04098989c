//! Diffuse-scattering field models for ray-based radio propagation.
//!
//! Implements the effective-roughness family of scattering models: the
//! legacy single-lobe model, its reciprocal replacement, and the reciprocal
//! double-lobe variant, together with the special functions the closed-form
//! normalization constants are built from, an independent quadrature oracle
//! for the hemispherical power-balance integral, and a parameter-fitting
//! routine for calibrating the models against measured pattern cuts.

pub mod calibration;
pub mod error;
pub mod geometry;
pub mod models;
pub mod oracle;
pub mod specfun;

pub use error::{Error, Result};
pub use geometry::{Direction, ScatterGeometry};
pub use models::{ErParameters, SourceParameters};
