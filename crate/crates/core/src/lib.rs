//! Restricted local Morrey norms, super-level-set sparseness and
//! regularity-criterion diagnostics for periodic 3D vector fields.

pub mod error;
pub mod fields;
pub mod grid;
pub mod lemma_verify;
pub mod morrey;
pub mod nse;
pub mod preduality;
pub mod sparseness;
mod serde_ext;

pub use error::{Error, Result};
pub use grid::{curl, sup_norm, Grid3, ScalarField, VectorField, Voxel, UNIT_BALL_VOLUME};
