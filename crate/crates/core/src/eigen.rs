//! Symmetric 3×3 eigen-decomposition.
//!
//! Eigenvalues use the trigonometric closed form; when the characteristic
//! polynomial is close to having a repeated root the closed form loses
//! accuracy and the cyclic Jacobi iteration is used instead.

use crate::geometry::{Mat3, Vec3};

/// `|r|` above this means two roots nearly coincide.
const REPEATED_ROOT_GUARD: f64 = 1.0 - 1e-6;
const JACOBI_SWEEPS: usize = 50;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues(m: &Mat3) -> [f64; 3] {
    let scale = m.amax();
    if scale == 0.0 {
        return [0.0; 3];
    }
    let a = m / scale;
    let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = a.trace() / 3.0;
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    if p < 1e-12 {
        return [q * scale; 3];
    }
    let b = (a - Mat3::identity() * q) / p;
    let r = b.determinant() / 2.0;
    if r.abs() > REPEATED_ROOT_GUARD {
        return jacobi(m).0;
    }
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;
    let mut v = [lo * scale, mid * scale, hi * scale];
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenvalues ascending with the matching unit eigenvectors as columns.
pub fn eigen(m: &Mat3) -> ([f64; 3], Mat3) {
    jacobi(m)
}

/// Cyclic Jacobi rotations on a symmetric matrix.
fn jacobi(m: &Mat3) -> ([f64; 3], Mat3) {
    let mut a = *m;
    let mut v = Mat3::identity();
    for _ in 0..JACOBI_SWEEPS {
        let off = a[(0, 1)].abs() + a[(0, 2)].abs() + a[(1, 2)].abs();
        if off <= f64::EPSILON * a.amax() || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Mat3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= rot;
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let values = order.map(|i| a[(i, i)]);
    let vectors = Mat3::from_columns(&order.map(|i| -> Vec3 { v.column(i).into() }));
    (values, vectors)
}
