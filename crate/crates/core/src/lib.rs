//! MAGMAR copula-based time-series models.
//!
//! The AR part of a model is a stationary D-vine over lagged pseudo-observations;
//! the MAG ("moving aggregate") part filters iid uniform innovations through an
//! inverse conditional copula before they enter the AR updating equation.

pub mod cli;
pub mod copula;
pub mod data;
pub mod dvine;
pub mod error;
pub mod estimation;
pub mod model;
pub mod model_string;
pub mod optim;
pub mod quadrature;
pub mod special;
pub mod verification;

pub use copula::{CopulaSpec, Family, UnitValue};
pub use error::{MagmarError, Result};
