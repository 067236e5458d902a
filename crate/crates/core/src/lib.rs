//! Adaptive isogeometric phase-field fracture on truncated hierarchical B-splines.
//!
//! The crate is organised bottom-up: [`splines`] holds univariate kernels,
//! [`hierarchy`] builds THB spaces on nested dyadic meshes, [`assembly`] and
//! [`solvers`] form and solve the staggered elasticity/damage problems, and
//! [`adaptivity`], [`initialization`] and [`bench`] drive complete runs.

pub mod adaptivity;
pub mod assembly;
pub mod bench;
pub mod error;
pub mod hierarchy;
pub mod initialization;
pub mod model;
pub mod solvers;
pub mod sparse;
pub mod splines;

pub use error::{Error, Result};
