//! Surface samplers for synthetic test objects, all centred at the origin.

use std::f64::consts::PI;

use rand::Rng;

use crate::geometry::{random_unit_vector, Point3};

/// Points together with the index of the surface patch each was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSamples {
    pub points: Vec<Point3>,
    pub labels: Vec<usize>,
}

/// Near-uniform deterministic sphere sampling (golden-angle spiral).
pub fn fibonacci_sphere(n: usize, radius: f64) -> Vec<Point3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Point3::new(r * phi.cos(), r * phi.sin(), z) * radius
        })
        .collect()
}

pub fn sphere_surface<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<Point3> {
    (0..n).map(|_| Point3::from(random_unit_vector(rng) * radius)).collect()
}

/// Face `f` of an axis-aligned cube: axis `f / 2`, on the negative side when
/// `f` is even.
fn cube_face_point(face: usize, a: f64, b: f64, half: f64) -> Point3 {
    let axis = face / 2;
    let w = if face.is_multiple_of(2) { -half } else { half };
    let mut c = [0.0; 3];
    c[axis] = w;
    c[(axis + 1) % 3] = a;
    c[(axis + 2) % 3] = b;
    Point3::new(c[0], c[1], c[2])
}

/// Uniform random samples on the surface of a cube with edge length `side`.
pub fn cube_surface<R: Rng + ?Sized>(n: usize, side: f64, rng: &mut R) -> LabeledSamples {
    let half = side / 2.0;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let face = rng.random_range(0..6);
        let a = rng.random_range(-half..half);
        let b = rng.random_range(-half..half);
        points.push(cube_face_point(face, a, b, half));
        labels.push(face);
    }
    LabeledSamples { points, labels }
}

/// Cell-centred `m × m` grid on each cube face; no point lies on an edge.
pub fn cube_grid(m: usize, side: f64) -> LabeledSamples {
    let half = side / 2.0;
    let step = side / m as f64;
    let mut points = Vec::with_capacity(6 * m * m);
    let mut labels = Vec::with_capacity(6 * m * m);
    for face in 0..6 {
        for i in 0..m {
            for j in 0..m {
                let a = -half + (i as f64 + 0.5) * step;
                let b = -half + (j as f64 + 0.5) * step;
                points.push(cube_face_point(face, a, b, half));
                labels.push(face);
            }
        }
    }
    LabeledSamples { points, labels }
}

/// Closed cylinder along z. Labels: 0 side, 1 bottom cap, 2 top cap.
pub fn cylinder_surface<R: Rng + ?Sized>(n: usize, radius: f64, height: f64, rng: &mut R) -> LabeledSamples {
    let side_area = 2.0 * PI * radius * height;
    let cap_area = PI * radius * radius;
    let total = side_area + 2.0 * cap_area;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = rng.random_range(0.0..total);
        let theta = rng.random_range(0.0..2.0 * PI);
        if pick < side_area {
            let z = rng.random_range(-height / 2.0..height / 2.0);
            points.push(Point3::new(radius * theta.cos(), radius * theta.sin(), z));
            labels.push(0);
        } else {
            let r = radius * rng.random_range(0.0f64..1.0).sqrt();
            let top = pick >= side_area + cap_area;
            let z = if top { height / 2.0 } else { -height / 2.0 };
            points.push(Point3::new(r * theta.cos(), r * theta.sin(), z));
            labels.push(if top { 2 } else { 1 });
        }
    }
    LabeledSamples { points, labels }
}
