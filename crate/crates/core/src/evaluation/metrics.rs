use serde::Serialize;

use super::fracture::SyntheticFracture;
use crate::geometry::{geodesic_rotation_angle, RigidTransform};

/// Relative-rotation error in degrees, in `[0, 180]`.
pub fn rotation_rmse(pred: &RigidTransform, gt: &RigidTransform) -> f64 {
    geodesic_rotation_angle(pred, gt)
}

/// RMS over the three translation components, optionally divided by
/// `normalizer` (typically a bounding-box diagonal).
pub fn translation_rmse(pred: &RigidTransform, gt: &RigidTransform, normalizer: Option<f64>) -> f64 {
    let rms = (pred.translation - gt.translation).norm() / 3f64.sqrt();
    match normalizer {
        Some(n) => rms / n,
        None => rms,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairErrors {
    pub rot_err_deg: f64,
    /// Normalized by the source bounding-box diagonal.
    pub trans_err: f64,
}

pub fn evaluate_pair(pred: &RigidTransform, fracture: &SyntheticFracture) -> PairErrors {
    PairErrors {
        rot_err_deg: rotation_rmse(pred, &fracture.gt_relative),
        trans_err: translation_rmse(pred, &fracture.gt_relative, Some(fracture.source_diagonal)),
    }
}
