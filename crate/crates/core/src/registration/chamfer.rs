use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, RigidTransform};
use crate::spatial::KdTree;

fn mean_nearest_d2(from: &[Point3], to: &KdTree) -> f64 {
    from.iter().map(|p| to.nearest_d2(p).0).sum::<f64>() / from.len() as f64
}

/// Symmetric Chamfer distance with squared distances and per-side means:
/// `mean_a min_b ‖a−b‖² + mean_b min_a ‖b−a‖²`.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (ta, tb) = (KdTree::new(&a.points), KdTree::new(&b.points));
    Ok(mean_nearest_d2(&a.points, &tb) + mean_nearest_d2(&b.points, &ta))
}

/// Chamfer distance between `transform(q)` and `p`, using prebuilt indexes
/// of the untransformed clouds. The P side is queried through the inverse
/// transform so neither index has to be rebuilt.
pub fn chamfer_distance_indexed(p: &KdTree, q: &KdTree, transform: &RigidTransform) -> f64 {
    let inv = transform.inverse();
    let q_to_p = q
        .points()
        .iter()
        .map(|x| p.nearest_d2(&transform.apply_point(x)).0)
        .sum::<f64>()
        / q.len() as f64;
    let p_to_q = p
        .points()
        .iter()
        .map(|x| q.nearest_d2(&inv.apply_point(x)).0)
        .sum::<f64>()
        / p.len() as f64;
    p_to_q + q_to_p
}
