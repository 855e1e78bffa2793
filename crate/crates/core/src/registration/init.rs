use crate::eigen;
use crate::geometry::{centroid, covariance, Mat3, Point3, PointCloud, RigidTransform, Vec3};

/// Relative size of the middle eigenvalue below which a region counts as
/// (nearly) collinear.
const RANK_TOLERANCE: f64 = 1e-9;

/// When the two largest variances are this close, the in-plane axes are
/// not reliable and extra candidates are spun about the third axis.
const ROUND_RATIO: f64 = 0.7;

/// Extra in-plane orientations tried for round regions.
const SPIN_STEPS: usize = 36;

/// Principal axes as columns, largest variance first, each signed so the
/// third moment of the projections is non-negative. Also reports whether
/// the region is round in its principal plane.
fn canonical_frame(points: &[Point3]) -> Option<(Point3, Mat3, bool)> {
    let c = centroid(points);
    let (values, vectors) = eigen::eigen(&covariance(points));
    if !(values[2] > 0.0) || values[1] <= RANK_TOLERANCE * values[2] {
        return None;
    }
    let round = values[1] >= ROUND_RATIO * values[2];
    let mut frame = Mat3::from_columns(&[vectors.column(2).into_owned(), vectors.column(1).into_owned(), vectors.column(0).into_owned()]);
    for k in 0..3 {
        let axis: Vec3 = frame.column(k).into();
        let skew: f64 = points.iter().map(|p| (p - c).dot(&axis).powi(3)).sum();
        if skew < 0.0 {
            frame.column_mut(k).neg_mut();
        }
    }
    Some((c, frame, round))
}

/// Candidate poses mapping `rq` onto `rp`: centroid alignment composed with
/// the four proper sign assignments that take `rq`'s principal axes onto
/// `rp`'s. If either region is round in its principal plane, further
/// candidates spin about `rp`'s third axis in 10° steps (listed after the
/// first four). Falls back to a single centroid-only candidate when either
/// region is degenerate.
pub fn initial_alignments(rp: &PointCloud, rq: &PointCloud) -> Vec<RigidTransform> {
    alignments_for(&rp.points, &rq.points)
}

pub(crate) fn alignments_for(rp: &[Point3], rq: &[Point3]) -> Vec<RigidTransform> {
    let (Some((cp, ep, round_p)), Some((cq, eq, round_q))) = (canonical_frame(rp), canonical_frame(rq)) else {
        let shift = centroid(rp) - centroid(rq);
        return vec![RigidTransform::from_translation(shift)];
    };
    let s = (ep.determinant() * eq.determinant()).signum();
    let pose = |spin: f64, signs: [f64; 3]| {
        let (sin, cos) = spin.sin_cos();
        let turn = Mat3::new(cos, -sin, 0.0, sin, cos, 0.0, 0.0, 0.0, 1.0);
        let r = ep * turn * Mat3::from_diagonal(&Vec3::from(signs)) * eq.transpose();
        RigidTransform {
            rotation: r,
            translation: cp.coords - r * cq.coords,
        }
    };
    let flips = [[1.0, 1.0, s], [1.0, -1.0, -s], [-1.0, 1.0, -s], [-1.0, -1.0, s]];
    let mut out: Vec<RigidTransform> = flips.iter().map(|&f| pose(0.0, f)).collect();
    if round_p || round_q {
        // the 180° turns of the two normal orientations are already above
        for k in (1..SPIN_STEPS).filter(|&k| 2 * k != SPIN_STEPS) {
            let spin = std::f64::consts::TAU * k as f64 / SPIN_STEPS as f64;
            out.push(pose(spin, flips[0]));
            out.push(pose(spin, flips[1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic_rotation_angle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob(seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..400)
                .map(|_| {
                    let x: f64 = rng.random_range(0.0..1.0);
                    Point3::new(3.0 * x * x, rng.random_range(-0.5..0.5) * (1.0 + x), 0.3 * rng.random::<f64>())
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn translated_copy_first_candidate_exact() {
        let p = blob(1);
        let t = RigidTransform::from_translation(Vec3::new(5.0, -3.0, 2.0));
        let q = t.inverse().apply(&p);
        let cands = initial_alignments(&p, &q);
        assert_eq!(cands.len(), 4);
        assert!((cands[0].rotation - Mat3::identity()).amax() < 1e-9);
        assert!((cands[0].translation - t.translation).amax() < 1e-9);
    }

    #[test]
    fn rotated_copy_has_matching_candidate() {
        let p = blob(2);
        for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
            let t = RigidTransform::from_axis_angle(axis, 90.0);
            let q = t.inverse().apply(&p);
            let best = initial_alignments(&p, &q)
                .iter()
                .map(|c| geodesic_rotation_angle(c, &t) + (c.translation - t.translation).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6, "{best}");
        }
    }

    #[test]
    fn candidates_are_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20 {
            let p = blob(seed);
            let q = RigidTransform::random_rotation(&mut rng).apply(&blob(seed + 100));
            for c in initial_alignments(&p, &q) {
                assert!(c.is_valid(1e-9));
            }
        }
    }

    fn disk(seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..600)
                .map(|_| {
                    let r = rng.random_range(0.0f64..1.0).sqrt();
                    let t = rng.random_range(0.0..std::f64::consts::TAU);
                    Point3::new(r * t.cos(), r * t.sin(), 0.05 * rng.random::<f64>())
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn round_regions_get_spun_candidates() {
        let p = disk(5);
        let cands = initial_alignments(&p, &disk(6));
        assert_eq!(cands.len(), 4 + 2 * (SPIN_STEPS - 2));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let t = RigidTransform::from_axis_angle(Vec3::z(), rng.random_range(0.0..360.0));
            let q = t.inverse().apply(&p);
            let best = initial_alignments(&p, &q)
                .iter()
                .map(|c| geodesic_rotation_angle(c, &t))
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 180.0 / SPIN_STEPS as f64 + 1e-9, "{best}");
        }
        for c in &cands {
            assert!(c.is_valid(1e-9));
        }
    }

    #[test]
    fn collinear_region_falls_back_to_centroid() {
        let line = PointCloud::new((0..10).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect()).unwrap();
        let p = blob(4);
        let cands = initial_alignments(&p, &line);
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].rotation, Mat3::identity());
        assert!((cands[0].apply_point(&line.centroid()) - p.centroid()).norm() < 1e-12);
    }
}
