//! Points, clouds and rigid motions.

use nalgebra::{Matrix3, Unit, UnitQuaternion, Vector3};
use rand::Rng;

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Numerical tolerances shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max deviation of `RᵀR` from identity and of `det R` from 1.
    pub orthonormal: f64,
    /// Looser bound applied when reading transforms from disk.
    pub orthonormal_read: f64,
    /// Largest eigenvalue at or below which a covariance counts as degenerate.
    pub degenerate_eigenvalue: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        orthonormal: 1e-9,
        orthonormal_read: 1e-6,
        degenerate_eigenvalue: 1e-15,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// An ordered set of 3D points. Index `i` names the same point for the
/// lifetime of a pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub source_id: String,
}

impl PointCloud {
    /// Validates that the cloud is non-empty and every coordinate is finite.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        Self::with_id(points, String::new())
    }

    pub fn with_id(points: Vec<Point3>, source_id: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(index) = points
            .iter()
            .position(|p| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinitePoint { index });
        }
        Ok(Self {
            points,
            source_id: source_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    /// Points at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<PointCloud> {
        PointCloud::with_id(
            indices.iter().map(|&i| self.points[i]).collect(),
            self.source_id.clone(),
        )
    }

    pub fn centroid(&self) -> Point3 {
        centroid(&self.points)
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.points)
    }
}

impl std::ops::Index<usize> for PointCloud {
    type Output = Point3;
    fn index(&self, i: usize) -> &Point3 {
        &self.points[i]
    }
}

pub fn centroid(points: &[Point3]) -> Point3 {
    let sum = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / points.len() as f64)
}

/// Population covariance `(1/n) Σ (p − p̄)(p − p̄)ᵀ`.
pub fn covariance(points: &[Point3]) -> Mat3 {
    let c = centroid(points);
    let mut m = Mat3::zeros();
    for p in points {
        let d = p - c;
        m += d * d.transpose();
    }
    m / points.len() as f64
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min_corner: Point3,
    pub max_corner: Point3,
}

impl Aabb {
    pub fn from_points(points: &[Point3]) -> Self {
        let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            for a in 0..3 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        Self {
            min_corner: min,
            max_corner: max,
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max_corner - self.min_corner
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min_corner, &self.max_corner)
    }
}

/// A proper rigid motion `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Checks orthonormality and `det = +1` at the default tolerance.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        Self::new_with_tolerance(rotation, translation, Tolerances::DEFAULT.orthonormal)
    }

    pub fn new_with_tolerance(rotation: Mat3, translation: Vec3, tol: f64) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonOrthonormal {
                deviation: f64::INFINITY,
            });
        }
        let det = rotation.determinant();
        if det < 0.0 {
            return Err(Error::ImproperRotation { det });
        }
        let deviation = orthonormality_error(&rotation);
        if deviation > tol || (det - 1.0).abs() > tol {
            return Err(Error::NonOrthonormal {
                deviation: deviation.max((det - 1.0).abs()),
            });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: t,
        }
    }

    pub fn from_rotation(rotation: Mat3) -> Self {
        Self {
            rotation,
            translation: Vec3::zeros(),
        }
    }

    /// Rotation by `angle_deg` about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vec3, angle_deg: f64) -> Self {
        let axis = Unit::new_normalize(axis);
        let q = UnitQuaternion::from_axis_angle(&axis, angle_deg.to_radians());
        Self::from_rotation(q.to_rotation_matrix().into_inner())
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self {
            rotation: q.to_rotation_matrix().into_inner(),
            translation,
        }
    }

    /// Uniformly distributed rotation (Shoemake's unit-quaternion method).
    pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_quaternion(&random_unit_quaternion(rng), Vec3::zeros())
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn apply_points(&self, points: &[Point3]) -> Vec<Point3> {
        points.iter().map(|p| self.apply_point(p)).collect()
    }

    /// Output point `i` is `R·p_i + t`; length, order and id are preserved.
    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud {
            points: self.apply_points(&cloud.points),
            source_id: cloud.source_id.clone(),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let out = RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        };
        if orthonormality_error(&out.rotation) > Tolerances::DEFAULT.orthonormal {
            out.reorthonormalized()
        } else {
            out
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Projects the rotation back onto SO(3) through its polar factor.
    pub fn reorthonormalized(&self) -> RigidTransform {
        RigidTransform {
            rotation: nearest_rotation(&self.rotation),
            translation: self.translation,
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        orthonormality_error(&self.rotation) <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    /// Rotation angle in degrees, in `[0, 180]`.
    pub fn rotation_angle_deg(&self) -> f64 {
        rotation_matrix_angle(&self.rotation)
    }

    /// Rotation rows followed by translation, 12 numbers.
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
            t[0], t[1], t[2],
        ]
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

/// Frobenius norm of `RᵀR − I`.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

/// Closest proper rotation to `m` in the Frobenius sense.
pub fn nearest_rotation(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

pub fn random_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let u3: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = nalgebra::Quaternion::new(b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin());
    UnitQuaternion::new_normalize(q)
}

/// Uniformly random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Angle of the rotation `m` in degrees. Equivalent to
/// `arccos((tr m − 1) / 2)` but well conditioned near 0° and 180°.
fn rotation_matrix_angle(m: &Mat3) -> f64 {
    let sin2 = Vec3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    )
    .norm();
    let cos2 = m.trace() - 1.0;
    sin2.atan2(cos2).to_degrees()
}

/// Geodesic distance between the rotations of `a` and `b`, in degrees,
/// within `[0, 180]`.
pub fn geodesic_rotation_angle(a: &RigidTransform, b: &RigidTransform) -> f64 {
    rotation_matrix_angle(&(a.rotation.transpose() * b.rotation))
}
