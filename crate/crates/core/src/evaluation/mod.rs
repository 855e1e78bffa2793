//! Ground-truth metrics and synthetic test data.
//!
//! For two fragments the reference frame is fragment A, so the relative
//! pose of B is the whole prediction and both metrics compare it directly
//! against the ground-truth relative pose.

pub mod fracture;
pub mod metrics;
pub mod shapes;

pub use fracture::{generate_fracture, CutPlane, CutSurface, FractureParams, SyntheticFracture};
pub use metrics::{evaluate_pair, rotation_rmse, translation_rmse, PairErrors};
