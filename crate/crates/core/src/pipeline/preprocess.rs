use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, Vec3};

fn bits(p: &Point3) -> [u64; 3] {
    // -0.0 and 0.0 are the same point
    [p.x + 0.0, p.y + 0.0, p.z + 0.0].map(f64::to_bits)
}

/// Removes exact duplicates (first occurrence kept, order preserved), then
/// optionally replaces the points of each occupied voxel by their centroid.
/// Voxels are anchored at the bounding-box minimum and emitted in order of
/// first occupancy.
pub fn preprocess(cloud: &PointCloud, voxel_size: Option<f64>) -> Result<PointCloud> {
    if let Some(v) = voxel_size {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("voxel_size", "must be positive"));
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(cloud.len());
    let unique: Vec<Point3> = cloud.iter().filter(|p| seen.insert(bits(p))).copied().collect();
    let points = match voxel_size {
        None => unique,
        Some(v) => {
            let min = cloud.aabb().min_corner;
            let mut slot: HashMap<[i64; 3], usize> = HashMap::new();
            let mut acc: Vec<(Vec3, usize)> = Vec::new();
            for p in &unique {
                let d = (p - min) / v;
                let key = [d.x.floor() as i64, d.y.floor() as i64, d.z.floor() as i64];
                let i = *slot.entry(key).or_insert_with(|| {
                    acc.push((Vec3::zeros(), 0));
                    acc.len() - 1
                });
                acc[i].0 += p.coords;
                acc[i].1 += 1;
            }
            acc.into_iter().map(|(sum, n)| Point3::from(sum / n as f64)).collect()
        }
    };
    PointCloud::with_id(points, cloud.source_id.clone())
}
