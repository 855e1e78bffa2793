//! Synthetic two-piece fractures with known poses.
//!
//! The source cloud is split by the sign of its distance to a cut surface: a
//! plane, optionally displaced along its normal by a smooth low-frequency
//! relief. Surface samplings of closed objects have nothing on the fracture
//! face, so by default each side also receives its own independent sampling
//! of the cut surface inside the object (`fill`). Each side is then moved by
//! its own random pose.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{random_unit_vector, Point3, PointCloud, RigidTransform, Vec3};
use crate::spatial::KdTree;

pub const MIN_SOURCE_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutPlane {
    pub point: Point3,
    pub normal: Vec3,
}

impl CutPlane {
    /// Plane with a random normal, passing within ±`offset` (fraction of the
    /// extent along that normal) of the centroid.
    pub fn random<R: Rng + ?Sized>(cloud: &PointCloud, offset: f64, rng: &mut R) -> Self {
        let normal = random_unit_vector(rng);
        let c = cloud.centroid();
        let (lo, hi) = cloud
            .iter()
            .map(|p| (p - c).dot(&normal))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let shift = rng.random_range(-1.0..=1.0) * offset * (hi - lo) / 2.0;
        CutPlane {
            point: c + normal * shift,
            normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    direction: f64,
    frequency: f64,
    phase: f64,
    weight: f64,
}

/// A plane with an optional relief `h(u, v)` along its normal, `|h| ≤ amplitude`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutSurface {
    pub origin: Point3,
    pub normal: Vec3,
    pub amplitude: f64,
    e1: Vec3,
    e2: Vec3,
    waves: Vec<Wave>,
}

impl CutSurface {
    pub fn plane(plane: &CutPlane) -> Result<Self> {
        let norm = plane.normal.norm();
        if !(norm.is_finite() && norm > 0.0) || !plane.point.coords.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("cut", "plane needs a finite point and nonzero normal"));
        }
        let n = plane.normal / norm;
        let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let e1 = n.cross(&helper).normalize();
        let e2 = n.cross(&e1);
        Ok(CutSurface {
            origin: plane.point,
            normal: n,
            amplitude: 0.0,
            e1,
            e2,
            waves: Vec::new(),
        })
    }

    /// Plane plus three random sinusoids with wavelengths between a third and
    /// two thirds of `scale`.
    pub fn jittered<R: Rng + ?Sized>(plane: &CutPlane, amplitude: f64, scale: f64, rng: &mut R) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid("jitter_amp", "must be finite and non-negative"));
        }
        let mut s = Self::plane(plane)?;
        if amplitude == 0.0 {
            return Ok(s);
        }
        let mut waves: Vec<Wave> = (0..3)
            .map(|_| Wave {
                direction: rng.random_range(0.0..PI),
                frequency: rng.random_range(1.5..3.0) * 2.0 * PI / scale,
                phase: rng.random_range(0.0..2.0 * PI),
                weight: rng.random_range(0.5..1.0),
            })
            .collect();
        let total: f64 = waves.iter().map(|w| w.weight).sum();
        for w in &mut waves {
            w.weight /= total;
        }
        s.amplitude = amplitude;
        s.waves = waves;
        Ok(s)
    }

    pub fn relief(&self, u: f64, v: f64) -> f64 {
        self.waves
            .iter()
            .map(|w| w.weight * (w.frequency * (u * w.direction.cos() + v * w.direction.sin()) + w.phase).sin())
            .sum::<f64>()
            * self.amplitude
    }

    fn local(&self, p: &Point3) -> (f64, f64, f64) {
        let d = p - self.origin;
        (d.dot(&self.e1), d.dot(&self.e2), d.dot(&self.normal))
    }

    /// Offset from the surface along the normal; positive on the normal side.
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        let (u, v, w) = self.local(p);
        w - self.relief(u, v)
    }

    pub fn point_at(&self, u: f64, v: f64) -> Point3 {
        self.origin + self.e1 * u + self.e2 * v + self.normal * self.relief(u, v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractureParams {
    pub cut: CutPlane,
    /// Relief amplitude in model units; 0 gives a planar cut.
    pub jitter_amp: f64,
    pub pose_seed: u64,
    pub max_angle_deg: f64,
    /// Maximum displacement as a fraction of the source bbox diagonal.
    pub max_shift: f64,
    /// Sample the cut surface inside the object for each side.
    pub fill: bool,
}

impl FractureParams {
    pub fn new(cut: CutPlane, pose_seed: u64) -> Self {
        FractureParams {
            cut,
            jitter_amp: 0.0,
            pose_seed,
            max_angle_deg: 60.0,
            max_shift: 0.3,
            fill: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFracture {
    pub fragment_a: PointCloud,
    pub fragment_b: PointCloud,
    /// Maps fragment B into fragment A's frame.
    pub gt_relative: RigidTransform,
    /// Assembled frame to A's scrambled frame.
    pub pose_a: RigidTransform,
    pub pose_b: RigidTransform,
    pub seed: u64,
    pub cut: CutSurface,
    /// Source indices of the leading points of each fragment; fill points
    /// follow them.
    pub indices_a: Vec<usize>,
    pub indices_b: Vec<usize>,
    pub source_diagonal: f64,
}

impl SyntheticFracture {
    pub fn fill_counts(&self) -> (usize, usize) {
        (
            self.fragment_a.len() - self.indices_a.len(),
            self.fragment_b.len() - self.indices_b.len(),
        )
    }
}

/// Rotation by at most `max_angle_deg` about `center`, then a shift of at
/// most `max_shift`.
fn random_pose(rng: &mut ChaCha8Rng, center: &Point3, max_angle_deg: f64, max_shift: f64) -> RigidTransform {
    let axis = random_unit_vector(rng);
    let angle = rng.random_range(0.0..=max_angle_deg);
    let shift = random_unit_vector(rng) * rng.random_range(0.0..=max_shift);
    let mut pose = RigidTransform::from_axis_angle(axis, angle);
    pose.translation = center.coords - pose.rotation * center.coords + shift;
    pose
}

/// Mean spacing of a surface sampling, from the 8-nearest-neighbour radius on
/// a strided subset.
fn surface_spacing(cloud: &PointCloud) -> Result<f64> {
    let tree = KdTree::new(&cloud.points);
    let stride = (cloud.len() / 2000).max(1);
    let mut total = 0.0;
    let mut count = 0;
    for i in (0..cloud.len()).step_by(stride) {
        let r = tree.knn_of(i, 8)?.last().map_or(0.0, |n| n.distance);
        total += r * r;
        count += 1;
    }
    Ok((PI * total / count as f64 / 8.0).sqrt())
}

const RAY_DIRECTIONS: usize = 7;

/// Majority vote over several rays of the crossing parity with the rim.
/// Rim points within `width` of a ray count as hits; hits separated by more
/// than `gap` along the ray are separate crossings.
fn inside_rim(q: (f64, f64), rim: &[(f64, f64)], width: f64, gap: f64) -> bool {
    let mut votes = 0;
    let mut hits = Vec::new();
    for k in 0..RAY_DIRECTIONS {
        let theta = 0.1 + 2.0 * PI * k as f64 / RAY_DIRECTIONS as f64;
        let (dx, dy) = (theta.cos(), theta.sin());
        hits.clear();
        for &(x, y) in rim {
            let (rx, ry) = (x - q.0, y - q.1);
            let t = rx * dx + ry * dy;
            if t > 0.0 && (rx * dy - ry * dx).abs() < width {
                hits.push(t);
            }
        }
        hits.sort_by(f64::total_cmp);
        let mut crossings = 0;
        let mut last = f64::NEG_INFINITY;
        for &t in &hits {
            if t - last > gap {
                crossings += 1;
            }
            last = t;
        }
        if crossings % 2 == 1 {
            votes += 1;
        }
    }
    2 * votes > RAY_DIRECTIONS
}

/// Jittered-grid samples of the cut surface inside the rim of the source.
fn fill_cut(source: &PointCloud, cut: &CutSurface, spacing: f64, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    let rim: Vec<(f64, f64)> = source
        .iter()
        .filter(|p| cut.signed_distance(p).abs() < spacing)
        .map(|p| {
            let (u, v, _) = cut.local(p);
            (u, v)
        })
        .collect();
    if rim.len() < 3 {
        return Vec::new();
    }
    let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(u, v) in &rim {
        u0 = u0.min(u);
        u1 = u1.max(u);
        v0 = v0.min(v);
        v1 = v1.max(v);
    }
    let nu = ((u1 - u0) / spacing).ceil() as usize;
    let nv = ((v1 - v0) / spacing).ceil() as usize;
    let mut out = Vec::new();
    for i in 0..nu {
        for j in 0..nv {
            let u = u0 + (i as f64 + rng.random_range(0.0..1.0)) * spacing;
            let v = v0 + (j as f64 + rng.random_range(0.0..1.0)) * spacing;
            if inside_rim((u, v), &rim, 1.5 * spacing, 3.0 * spacing) {
                out.push(cut.point_at(u, v));
            }
        }
    }
    out
}

pub fn generate_fracture(source: &PointCloud, params: &FractureParams) -> Result<SyntheticFracture> {
    if source.len() < MIN_SOURCE_POINTS {
        return Err(Error::CloudTooSmall {
            points: source.len(),
            required: MIN_SOURCE_POINTS,
        });
    }
    if !(params.max_angle_deg >= 0.0 && params.max_angle_deg <= 180.0) {
        return Err(Error::invalid("max_angle", "must lie in [0, 180] degrees"));
    }
    if !(params.max_shift >= 0.0 && params.max_shift.is_finite()) {
        return Err(Error::invalid("max_shift", "must be finite and non-negative"));
    }
    let diagonal = source.aabb().diagonal();
    let mut relief_rng = ChaCha8Rng::seed_from_u64(params.pose_seed);
    relief_rng.set_stream(1);
    let cut = CutSurface::jittered(&params.cut, params.jitter_amp, diagonal, &mut relief_rng)?;

    let (mut indices_a, mut indices_b) = (Vec::new(), Vec::new());
    for (i, p) in source.iter().enumerate() {
        if cut.signed_distance(p) >= 0.0 {
            indices_a.push(i);
        } else {
            indices_b.push(i);
        }
    }
    if indices_a.is_empty() || indices_b.is_empty() {
        return Err(Error::DegenerateCut);
    }
    let mut points_a: Vec<Point3> = indices_a.iter().map(|&i| source[i]).collect();
    let mut points_b: Vec<Point3> = indices_b.iter().map(|&i| source[i]).collect();
    if params.fill {
        let spacing = surface_spacing(source)?;
        let mut fill_rng = ChaCha8Rng::seed_from_u64(params.pose_seed);
        fill_rng.set_stream(2);
        points_a.extend(fill_cut(source, &cut, spacing, &mut fill_rng));
        points_b.extend(fill_cut(source, &cut, spacing, &mut fill_rng));
    }

    let mut pose_rng = ChaCha8Rng::seed_from_u64(params.pose_seed);
    let center = source.centroid();
    let shift = params.max_shift * diagonal;
    let pose_a = random_pose(&mut pose_rng, &center, params.max_angle_deg, shift);
    let pose_b = random_pose(&mut pose_rng, &center, params.max_angle_deg, shift);
    Ok(SyntheticFracture {
        fragment_a: PointCloud::with_id(pose_a.apply_points(&points_a), "fragment_a")?,
        fragment_b: PointCloud::with_id(pose_b.apply_points(&points_b), "fragment_b")?,
        gt_relative: pose_a.compose(&pose_b.inverse()),
        pose_a,
        pose_b,
        seed: params.pose_seed,
        cut,
        indices_a,
        indices_b,
        source_diagonal: diagonal,
    })
}
