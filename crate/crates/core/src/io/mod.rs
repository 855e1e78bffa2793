//! File formats: PLY point clouds (ASCII and binary little-endian), OBJ
//! vertices (read-only), transform JSON, colored label exports and the
//! match-results CSV.

mod labeled;
mod obj;
mod ply;
mod transform;

use std::path::Path;

pub use labeled::{palette_color, write_labeled_cloud, LabeledCloudExport, CURVE_COLOR};
pub use obj::read_obj;
pub use ply::{read_ply, write_ply, PlyFormat, Precision, WriteOptions};
pub use transform::{read_transform, transform_to_json, write_transform, TransformFile, SCHEMA_VERSION};

use crate::error::Result;
use crate::geometry::PointCloud;

/// Reads a point cloud, choosing the parser by extension (`.obj`) and
/// falling back to PLY.
pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    let is_obj = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("obj"));
    if is_obj {
        read_obj(path)
    } else {
        read_ply(path)
    }
}

/// Writes a PLY file in the requested layout.
pub fn write_point_cloud(cloud: &PointCloud, path: &Path, options: WriteOptions) -> Result<()> {
    write_ply(cloud, path, options)
}
