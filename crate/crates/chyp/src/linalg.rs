//! Small complex 3x3 helpers on top of nalgebra.

use nalgebra::{Matrix3, Vector3};
pub use num_complex::Complex64 as C64;

use crate::poly;

pub type Mat3 = Matrix3<C64>;
pub type Vec3 = Vector3<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub(crate) fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

#[cfg(test)]
pub(crate) fn vec3(a: C64, b: C64, d: C64) -> Vec3 {
    Vec3::new(a, b, d)
}

/// Largest entry modulus.
pub(crate) fn max_abs(m: &Mat3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn vmax_abs(v: &Vec3) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Principal cube root.
pub(crate) fn cbrt(z: C64) -> C64 {
    if z.norm() == 0.0 {
        return z;
    }
    C64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
}

/// Divide by the principal cube root of the determinant so that det = 1.
pub(crate) fn det_normalize(m: &Mat3) -> Mat3 {
    let d = m.determinant();
    m / cbrt(d)
}

/// Rescale so the largest-modulus coordinate equals one.
pub(crate) fn normalize_max(v: &Vec3) -> Vec3 {
    let (idx, _) = v
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    v / v[idx]
}

/// Projective equality: compare after normalising the largest coordinate of `u`.
pub(crate) fn proj_eq(u: &Vec3, v: &Vec3, tol: f64) -> bool {
    proj_distance(u, v) <= tol
}

/// Residual of projective equality, scale free.
pub(crate) fn proj_distance(u: &Vec3, v: &Vec3) -> f64 {
    let (idx, _) = u
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if v[idx].norm() == 0.0 {
        return f64::INFINITY;
    }
    let un = u / u[idx];
    let vn = v / v[idx];
    vmax_abs(&(un - vn))
}

/// Projective equality of matrices (equal up to a nonzero scalar).
pub(crate) fn mat_proj_distance(a: &Mat3, b: &Mat3) -> f64 {
    let (mut bi, mut bv) = (0, -1.0);
    for (i, z) in a.iter().enumerate() {
        if z.norm() > bv {
            bv = z.norm();
            bi = i;
        }
    }
    if b[bi].norm() == 0.0 {
        return f64::INFINITY;
    }
    max_abs(&(a / a[bi] - b / b[bi]))
}

/// Eigenvalues from the characteristic polynomial.
pub(crate) fn eigenvalues(m: &Mat3) -> [C64; 3] {
    let tr = m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    poly::cubic_roots_monic(-tr, minors, -m.determinant())
}

/// A vector spanning the (numerical) kernel of a rank-2 matrix.
pub(crate) fn kernel_vector(m: &Mat3) -> Vec3 {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let mut best = Vec3::zeros();
    let mut best_norm = -1.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let v = rows[i].cross(&rows[j]);
        let n = v.norm();
        if n > best_norm {
            best_norm = n;
            best = v;
        }
    }
    best / C64::new(best_norm, 0.0)
}

/// Numerical rank with a relative threshold on singular values.
pub(crate) fn rank(m: &Mat3, rel_tol: f64) -> usize {
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * top).count()
}
