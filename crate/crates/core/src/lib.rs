//! Pairwise reassembly of broken 3D objects from point clouds.
//!
//! The pipeline detects breaking curves from the eigenvalues of local
//! neighbourhood covariances, grows surface regions bounded by those curves,
//! registers every retained region of one fragment against every retained
//! region of the other with ICP, and keeps the pair with the lowest Chamfer
//! distance. Its transform aligns the second fragment onto the first.
//!
//! ```no_run
//! use reassembly::pipeline::{run_pipeline, PipelineConfig};
//!
//! let config = PipelineConfig::default();
//! let assembly = run_pipeline("a.ply".as_ref(), "b.ply".as_ref(), &config)?;
//! println!("{:?} chamfer {}", assembly.transform, assembly.report.best.chamfer);
//! # Ok::<(), reassembly::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod eigen;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod parallel;
pub mod pipeline;
pub mod registration;
pub mod segmentation;
pub mod spatial;

pub use error::{Error, Result};
pub use geometry::{Aabb, Point3, PointCloud, RigidTransform, Vec3};
pub use graph::NeighborhoodGraph;
pub use spatial::KdTree;
