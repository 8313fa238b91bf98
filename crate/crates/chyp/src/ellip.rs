//! Elliptic normal forms, the standard fixed torus and its circle foliation.
//!
//! In the Siegel model `E_{a,b} = e^{-i(a+b)/3} C diag(e^{ia}, e^{ib}, 1) C`
//! fixes `p_E = [-1, 0, 1]`. The standard torus is
//! `T^2 = { [z1, z2, 1] on the boundary : |z1 + 1|^2 = 2 |z2|^2 }`, foliated by
//! the circles `C_q(theta) = E_{theta,-theta}(q)`.

use std::f64::consts::{SQRT_2, TAU};

use crate::cproj::{
    cayley_matrix, classify_isometry, cone_sign, triple_product_arg, ConeSign, FormKind,
    HermitianForm, Isometry, IsometryKind, ProjectivePoint,
};
use crate::heis::{
    isometric_sphere, translation_matrix, HeisenbergPoint, HoroPoint,
};
use crate::linalg::{self, cis, re, C64, Mat3, Vec3};
use crate::{Error, Result};

/// Rotation angles of an elliptic normal form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticAngles {
    pub alpha: f64,
    pub beta: f64,
}

fn wrap(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = wrap(a - b);
    d.min(TAU - d)
}

impl EllipticAngles {
    pub fn new(alpha: f64, beta: f64) -> Self {
        EllipticAngles { alpha, beta }
    }

    /// `E_{theta, -theta}`.
    pub fn real(theta: f64) -> Self {
        EllipticAngles::new(theta, -theta)
    }

    /// `0 < alpha != beta < 2 pi` (mod `2 pi`).
    pub fn is_regular(&self, tol: f64) -> bool {
        angle_gap(self.alpha, 0.0) > tol
            && angle_gap(self.beta, 0.0) > tol
            && angle_gap(self.alpha, self.beta) > tol
    }

    /// `beta = -alpha` (mod `2 pi`).
    pub fn is_real(&self, tol: f64) -> bool {
        angle_gap(self.alpha, -self.beta) <= tol
    }
}

/// The normal form `E_{alpha,beta}` in either model, with determinant one.
pub fn elliptic_normal_form(ang: EllipticAngles, model: FormKind) -> Isometry {
    let d = Mat3::from_diagonal(&Vec3::new(cis(ang.alpha), cis(ang.beta), re(1.0)))
        * cis(-(ang.alpha + ang.beta) / 3.0);
    let ball = Isometry::raw(d, FormKind::Ball);
    match model {
        FormKind::Ball => ball,
        FormKind::Siegel => ball.cayley_conjugate(),
    }
}

/// The fixed point `p_E = [-1, 0, 1]` of the Siegel normal forms.
pub fn p_e() -> ProjectivePoint {
    ProjectivePoint::from_coords(re(-1.0), re(0.0), re(1.0), FormKind::Siegel)
        .expect("nonzero")
}

/// Siegel coordinates `q = [kappa1, kappa2, 1]` of a boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub kappa1: C64,
    pub kappa2: C64,
}

impl TorusPoint {
    pub fn new(kappa1: C64, kappa2: C64) -> Self {
        TorusPoint { kappa1, kappa2 }
    }

    /// `q(phi) = [-(3 + 2 sqrt2), (2 + sqrt2) e^{i phi}, 1]`, one point per leaf.
    pub fn leaf_base(phi: f64) -> Self {
        TorusPoint::new(re(-(3.0 + 2.0 * SQRT_2)), (2.0 + SQRT_2) * cis(phi))
    }

    /// The base point `q0 = [-1 - 2i, sqrt2, 1]`.
    pub fn q0() -> Self {
        TorusPoint::new(C64::new(-1.0, -2.0), re(SQRT_2))
    }

    pub fn from_point(p: &ProjectivePoint) -> Result<Self> {
        if p.kind() != FormKind::Siegel {
            return Err(Error::FormMismatch);
        }
        let l = p.standard_lift().ok_or(Error::DistinguishedPoint)?;
        Ok(TorusPoint::new(l[0], l[1]))
    }

    pub fn lift(&self) -> Vec3 {
        Vec3::new(self.kappa1, self.kappa2, re(1.0))
    }

    pub fn to_point(&self) -> ProjectivePoint {
        ProjectivePoint::new(self.lift(), FormKind::Siegel).expect("nonzero")
    }

    /// `|kappa2|^2 + 2 Re kappa1`, zero on the boundary.
    pub fn boundary_residual(&self) -> f64 {
        self.kappa2.norm_sqr() + 2.0 * self.kappa1.re
    }

    /// `|kappa1 + 1|^2 - 2 |kappa2|^2`, zero on `T^2`.
    pub fn torus_residual(&self) -> f64 {
        (self.kappa1 + 1.0).norm_sqr() - 2.0 * self.kappa2.norm_sqr()
    }
}

/// Whether a Siegel boundary point lies on the standard torus.
pub fn torus_membership(q: &ProjectivePoint, tol: f64) -> Result<bool> {
    let tp = TorusPoint::from_point(q)?;
    let scale = 1.0 + (tp.kappa1 + 1.0).norm_sqr() + 2.0 * tp.kappa2.norm_sqr();
    Ok(tp.torus_residual().abs() <= tol * scale)
}

/// `C_q(theta) = E_{theta,-theta}(q)`, through the explicit lift
/// `((z1+1)e^{i theta}/2 + (z1-1)/2, z2 e^{-i theta}, (z1+1)e^{i theta}/2 - (z1-1)/2)`.
pub fn circle_point(q: &TorusPoint, theta: f64) -> ProjectivePoint {
    let e = cis(theta);
    let a = (q.kappa1 + 1.0) / 2.0 * e;
    let b = (q.kappa1 - 1.0) / 2.0;
    ProjectivePoint::new(Vec3::new(a + b, q.kappa2 * e.conj(), a - b), FormKind::Siegel)
        .expect("nonzero")
}

/// The three angular invariants
/// `A(p_E, q, Eq)`, `A(p_E, q, E^2 q)`, `A(q, Eq, E^2 q)`.
pub fn fixed_lagrangian_invariants(ang: EllipticAngles, q: &ProjectivePoint) -> Result<[f64; 3]> {
    let e = elliptic_normal_form(ang, FormKind::Siegel);
    let q1 = e.apply(q)?;
    let q2 = e.apply(&q1)?;
    let pe = p_e();
    Ok([
        triple_product_arg(&pe, q, &q1)?,
        triple_product_arg(&pe, q, &q2)?,
        triple_product_arg(q, &q1, &q2)?,
    ])
}

/// Output of [`real_elliptic_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealEllipticReport {
    pub is_real: bool,
    /// Rotation angle in `(0, pi]` of the eigenvalue ratios, when real.
    pub theta: Option<f64>,
    pub fixed_point: ProjectivePoint,
    /// Eigenvalues of the det-one representative, fixed eigenvalue first.
    pub eigenvalues: [C64; 3],
    /// Eigenvectors matching `eigenvalues`.
    pub eigenvectors: [Vec3; 3],
}

/// Decide whether a regular elliptic element is real elliptic.
///
/// Real means the eigenvalue ratios against the negative-type eigenvalue are
/// `e^{i theta}` and `e^{-i theta}`.
pub fn real_elliptic_test(g: &Isometry, tol: f64) -> Result<RealEllipticReport> {
    if classify_isometry(g, tol).kind != IsometryKind::RegularElliptic {
        return Err(Error::NotRegularElliptic);
    }
    let m = g.det_normalized();
    let ev = linalg::eigenvalues(&m);
    let form = *g.form();
    let mut vecs = [Vec3::zeros(); 3];
    let mut norms = [0.0; 3];
    for i in 0..3 {
        let v = linalg::kernel_vector(&(m - Mat3::identity() * ev[i]));
        norms[i] = form.product(&v, &v).re;
        vecs[i] = v;
    }
    let fixed = (0..3)
        .min_by(|&a, &b| norms[a].total_cmp(&norms[b]))
        .expect("three eigenvalues");
    if norms[fixed] >= 0.0 {
        return Err(Error::NotRegularElliptic);
    }
    let others: Vec<usize> = (0..3).filter(|&i| i != fixed).collect();
    let mu1 = ev[others[0]] / ev[fixed];
    let mu2 = ev[others[1]] / ev[fixed];
    let is_real = (mu1 * mu2 - re(1.0)).norm() <= tol.sqrt();
    // Order the positive eigenvectors so the first has angle in (0, pi].
    let (i1, i2) = if mu1.arg() > 0.0 {
        (others[0], others[1])
    } else {
        (others[1], others[0])
    };
    let theta = is_real.then(|| (ev[i1] / ev[fixed]).arg().abs());
    let fixed_point = ProjectivePoint::new(vecs[fixed], form)?;
    Ok(RealEllipticReport {
        is_real,
        theta,
        fixed_point,
        eigenvalues: [ev[fixed], ev[i1], ev[i2]],
        eigenvectors: [vecs[fixed], vecs[i1], vecs[i2]],
    })
}

/// The torus `Q(T^2)` fixed by a regular real elliptic `g = Q E_{theta,-theta} Q^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedTorus {
    pub conjugator: Isometry,
    pub theta: f64,
    pub fixed_point: ProjectivePoint,
}

impl FixedTorus {
    /// `Q(C_{q(phi)}(theta))`.
    pub fn sample(&self, phi: f64, theta: f64) -> ProjectivePoint {
        let p = circle_point(&TorusPoint::leaf_base(phi), theta);
        self.conjugator.apply(&p).expect("same form")
    }
}

/// Build `Q` from the eigenbasis: positive eigenvectors normalised to `+1`,
/// the negative one to `-1`, then the determinant normalised to one.
pub fn fixed_torus_of(g: &Isometry, tol: f64) -> Result<FixedTorus> {
    if g.kind() != FormKind::Siegel {
        return Err(Error::FormMismatch);
    }
    let rep = real_elliptic_test(g, tol)?;
    if !rep.is_real {
        return Err(Error::NotRealElliptic);
    }
    let form = HermitianForm::siegel();
    let normalise = |v: &Vec3| v / re(form.product(v, v).re.abs().sqrt());
    let [vf, v1, v2] = rep.eigenvectors;
    let u = Mat3::from_columns(&[normalise(&v1), normalise(&v2), normalise(&vf)]);
    let q = linalg::det_normalize(&(u * cayley_matrix()));
    Ok(FixedTorus {
        conjugator: Isometry::raw(q, FormKind::Siegel),
        theta: rep.theta.expect("real"),
        fixed_point: rep.fixed_point,
    })
}

/// Sampled Hausdorff distance between two leaves `C_q`, `C_q'`, measured in
/// ball coordinates.
pub fn leaf_distance(q1: &TorusPoint, q2: &TorusPoint, samples: usize) -> f64 {
    let pts = |q: &TorusPoint| -> Vec<Vec3> {
        (0..samples)
            .map(|k| {
                let p = circle_point(q, TAU * k as f64 / samples as f64);
                let b = cayley_matrix() * p.lift();
                b / b[2]
            })
            .collect()
    };
    let a = pts(q1);
    let b = pts(q2);
    let one_sided = |x: &[Vec3], y: &[Vec3]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(&a, &b).max(one_sided(&b, &a))
}

/// The Siegel-to-Siegel map `H2 T_q` sending `q` to `q_inf`.
pub fn normalising_matrix(q: &TorusPoint) -> Mat3 {
    let t = translation_matrix(&HeisenbergPoint::new(-q.kappa2, -2.0 * q.kappa1.im));
    *HermitianForm::siegel().matrix() * t
}

/// `(H2 T_q) E_{-theta,theta} (H2 T_q)^{-1}`, whose isometric sphere is the
/// sphere centred at `H2 T_q C_q(theta)`.
pub fn tilde_elliptic(q: &TorusPoint, theta: f64) -> Isometry {
    let m = normalising_matrix(q);
    let minv = m.try_inverse().expect("invertible");
    let e = elliptic_normal_form(EllipticAngles::new(-theta, theta), FormKind::Siegel);
    Isometry::raw(m * e.matrix() * minv, FormKind::Siegel)
}

/// The affine line in the Heisenberg group onto which `H2 T_q` sends the
/// leaf `C_q` (minus `q`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RCircleLine {
    pub theta0: f64,
    pub x0: f64,
    pub y0: f64,
    pub v0: f64,
    pub cz: C64,
    pub ct: f64,
}

impl RCircleLine {
    /// `[x e^{i theta0} + x0 + i y0, v0 + 2 x y0 cos theta0 - 2 x x0 sin theta0]`.
    pub fn point(&self, x: f64) -> HeisenbergPoint {
        let (s, c) = self.theta0.sin_cos();
        HeisenbergPoint::new(
            x * cis(self.theta0) + C64::new(self.x0, self.y0),
            self.v0 + 2.0 * x * self.y0 * c - 2.0 * x * self.x0 * s,
        )
    }

    /// Line parameter of the leaf point `C_q(theta)`: `x = -|C_z| cot(theta/2)`.
    pub fn param(&self, theta: f64) -> f64 {
        -self.cz.norm() / (theta / 2.0).tan()
    }
}

/// Line data for the leaf through `q`.
pub fn rcircle_affine_params(q: &TorusPoint, tol: f64) -> Result<RCircleLine> {
    let k1 = q.kappa1;
    let k2 = q.kappa2;
    let n2 = k2.norm_sqr();
    if k2.norm() <= tol {
        return Err(Error::Degenerate("leaf is a C-circle (kappa2 = 0)".into()));
    }
    let cz = k2 * (k1 + 3.0) * C64::i() / (4.0 * n2);
    if cz.norm() <= tol {
        return Err(Error::Degenerate("C_z vanishes".into()));
    }
    let ct = -(k1.re + 1.0) / (2.0 * n2);
    let base = k2 * (k1 - 1.0) / (-4.0 * n2);
    Ok(RCircleLine {
        theta0: (-cz).arg(),
        x0: base.re,
        y0: base.im,
        v0: k1.im / (2.0 * n2),
        cz,
        ct,
    })
}

/// Push the leaf point `C_q(theta)` through `H2 T_q` into Heisenberg coordinates.
pub fn pushed_circle_point(q: &TorusPoint, theta: f64) -> Result<HoroPoint> {
    let p = circle_point(q, theta);
    let img = ProjectivePoint::new(normalising_matrix(q) * p.lift(), FormKind::Siegel)?;
    HoroPoint::from_point(&img)
}

/// Largest isometric-sphere membership residual `|d - r|` over samples of the
/// finite C-circle `C_[sqrt2, 0] = { [sqrt2 e^{i phi}, 0] }` against
/// `I(E_{theta,-theta})`.
pub fn c_circle_on_sphere_check(theta: f64, samples: usize) -> Result<f64> {
    let e = elliptic_normal_form(EllipticAngles::real(theta), FormKind::Siegel);
    let s = isometric_sphere(&e, 1e-12)?;
    Ok((0..samples)
        .map(|k| {
            let phi = TAU * k as f64 / samples as f64;
            let p = HeisenbergPoint::new(SQRT_2 * cis(phi), 0.0).horo();
            s.sphere.margin(&p).abs()
        })
        .fold(0.0, f64::max))
}

/// Whether a Siegel point is on the boundary within `tol`.
pub fn is_boundary(p: &ProjectivePoint, tol: f64) -> bool {
    cone_sign(p, tol) == ConeSign::Null
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cproj::{cartan_invariant, hermitian_product};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn torus_pt(phi: f64, theta: f64) -> TorusPoint {
        TorusPoint::from_point(&circle_point(&TorusPoint::leaf_base(phi), theta)).unwrap()
    }

    #[test]
    fn normal_form_examples() {
        let id = elliptic_normal_form(EllipticAngles::new(0.0, 0.0), FormKind::Siegel);
        assert!(linalg::max_abs(&(id.matrix() - Mat3::identity())) < 1e-15);
        let e = elliptic_normal_form(EllipticAngles::new(0.7, 2.1), FormKind::Siegel);
        assert!(Isometry::new(*e.matrix(), FormKind::Siegel).is_ok());
        assert!(e.apply(&p_e()).unwrap().proj_eq(&p_e(), 1e-15));
        // Cayley conjugation of the ball form gives the Siegel form.
        let b = elliptic_normal_form(EllipticAngles::new(0.7, 2.1), FormKind::Ball);
        assert!(b.cayley_conjugate().proj_eq(&e, 1e-14));
    }

    #[test]
    fn siegel_entries_match_explicit_display() {
        // E(q) first entry: (z1+1)/2 e^{i(2a-b)/3} + (z1-1)/2 e^{-i(a+b)/3}.
        let (a, b) = (0.9, 2.6);
        let e = elliptic_normal_form(EllipticAngles::new(a, b), FormKind::Siegel);
        let m = e.matrix();
        let p = cis((2.0 * a - b) / 3.0);
        let q = cis(-(a + b) / 3.0);
        assert!((m[(0, 0)] - (p + q) / 2.0).norm() < 1e-15);
        assert!((m[(0, 2)] - (p - q) / 2.0).norm() < 1e-15);
        assert!((m[(1, 1)] - cis((2.0 * b - a) / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn torus_membership_examples() {
        assert!(torus_membership(&TorusPoint::q0().to_point(), 1e-12).unwrap());
        let origin = TorusPoint::new(re(0.0), re(0.0)).to_point();
        assert!(!torus_membership(&origin, 1e-12).unwrap());
        for k in 0..16 {
            let q = TorusPoint::leaf_base(k as f64 * 0.4);
            assert!(torus_membership(&q.to_point(), 1e-12).unwrap());
            assert!(q.boundary_residual().abs() < 1e-12);
        }
        assert_eq!(
            torus_membership(&ProjectivePoint::q_infinity(), 1e-12),
            Err(Error::DistinguishedPoint)
        );
    }

    #[test]
    fn circle_point_examples() {
        let q = TorusPoint::q0();
        assert!(circle_point(&q, 0.0).proj_eq(&q.to_point(), 1e-15));
        assert!(circle_point(&q, TAU).proj_eq(&q.to_point(), 1e-14));

        let o = TorusPoint::new(re(0.0), re(0.0));
        let th = 1.1;
        let expect = Vec3::new((cis(th) - 1.0) / 2.0, re(0.0), (cis(th) + 1.0) / 2.0);
        assert!(linalg::proj_eq(circle_point(&o, th).lift(), &expect, 1e-15));

        // The explicit lift is the image under E_{theta,-theta}.
        let e = elliptic_normal_form(EllipticAngles::real(th), FormKind::Siegel);
        assert!(e.apply(&q.to_point()).unwrap().proj_eq(&circle_point(&q, th), 1e-14));
    }

    #[test]
    fn leaf_points_have_vanishing_invariants() {
        let q = TorusPoint::q0();
        let th = 2.0 * PI / 5.0;
        let p1 = q.to_point();
        let p2 = circle_point(&q, th);
        let p3 = circle_point(&q, 2.0 * th);
        assert!(cartan_invariant(&p1, &p2, &p3, 1e-9).unwrap().abs() < 1e-12);
        let inv = fixed_lagrangian_invariants(EllipticAngles::real(th), &p1).unwrap();
        assert!(inv.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn real_elliptic_examples() {
        let th = 2.0 * PI / 5.0;
        let e = elliptic_normal_form(EllipticAngles::new(th, 8.0 * PI / 5.0), FormKind::Siegel);
        let rep = real_elliptic_test(&e, 1e-9).unwrap();
        assert!(rep.is_real);
        assert!((rep.theta.unwrap() - th).abs() < 1e-12);
        assert!(rep.fixed_point.proj_eq(&p_e(), 1e-12));

        let e = elliptic_normal_form(EllipticAngles::new(th, 4.0 * PI / 5.0), FormKind::Siegel);
        let rep = real_elliptic_test(&e, 1e-9).unwrap();
        assert!(!rep.is_real);

        let id = Isometry::identity(FormKind::Siegel);
        assert_eq!(real_elliptic_test(&id, 1e-9), Err(Error::NotRegularElliptic));
    }

    #[test]
    fn eigenvector_signature_is_negative_then_positive() {
        let e = elliptic_normal_form(EllipticAngles::real(1.3), FormKind::Siegel);
        let rep = real_elliptic_test(&e, 1e-9).unwrap();
        let h = HermitianForm::siegel();
        let [vf, v1, v2] = rep.eigenvectors;
        assert!(h.product(&vf, &vf).re < 0.0);
        assert!(h.product(&v1, &v1).re > 0.0);
        assert!(h.product(&v2, &v2).re > 0.0);
        let r1 = rep.eigenvalues[1] / rep.eigenvalues[0];
        assert!((r1 - cis(1.3)).norm() < 1e-12);
    }

    #[test]
    fn fixed_torus_of_standard_form_is_standard_torus() {
        let e = elliptic_normal_form(EllipticAngles::real(0.8), FormKind::Siegel);
        let ft = fixed_torus_of(&e, 1e-9).unwrap();
        for (phi, th) in [(0.0, 0.0), (1.0, 2.0), (4.0, 5.5)] {
            let s = ft.sample(phi, th);
            assert!(torus_membership(&s, 1e-9).unwrap());
        }
    }

    #[test]
    fn fixed_torus_of_conjugated_element() {
        // Conjugate by a translation and a dilation.
        let t = translation_matrix(&HeisenbergPoint::new(C64::new(0.3, -0.7), 1.4));
        let d = Mat3::from_diagonal(&Vec3::new(re(1.5), re(1.0), re(1.0 / 1.5)));
        let p = t * d;
        let alpha = 2.2;
        let e = elliptic_normal_form(EllipticAngles::real(alpha), FormKind::Siegel);
        let g = Isometry::raw(p * e.matrix() * p.try_inverse().unwrap(), FormKind::Siegel);
        let ft = fixed_torus_of(&g, 1e-9).unwrap();
        let q = ft.conjugator;
        let (u, det) = crate::cproj::membership_residuals(q.matrix(), q.form());
        assert!(u < 1e-12 && det < 1e-12);
        for k in 0..20 {
            let phi = 0.31 * k as f64;
            let th = 0.17 * k as f64;
            let s = ft.sample(phi, th);
            assert!(is_boundary(&s, 1e-9));
            let back = q.inverse().apply(&s).unwrap();
            assert!(torus_membership(&back, 1e-9).unwrap());
            // g moves the sample along its leaf by the rotation angle.
            let moved = g.apply(&s).unwrap();
            let ahead = ft.sample(phi, th + ft.theta);
            let behind = ft.sample(phi, th - ft.theta);
            assert!(moved.proj_eq(&ahead, 1e-9) || moved.proj_eq(&behind, 1e-9));
        }
        assert!((ft.theta - (TAU - alpha)).abs() < 1e-9 || (ft.theta - alpha).abs() < 1e-9);
        let non_real = elliptic_normal_form(EllipticAngles::new(0.5, 1.7), FormKind::Siegel);
        assert_eq!(fixed_torus_of(&non_real, 1e-9), Err(Error::NotRealElliptic));
    }

    #[test]
    fn rcircle_line_examples() {
        let q = TorusPoint::q0();
        let line = rcircle_affine_params(&q, 1e-12).unwrap();
        let (s, c) = line.theta0.sin_cos();
        let lhs = 2.0 * line.y0 * c - 2.0 * line.x0 * s;
        assert!((lhs + line.ct / line.cz.norm()).abs() < 1e-12);

        let mut worst: f64 = 0.0;
        for k in 1..100 {
            let th = TAU * k as f64 / 100.0;
            let h = pushed_circle_point(&q, th).unwrap();
            assert!(h.u.abs() < 1e-9);
            let on_line = line.point(line.param(th));
            let scale = 1.0 + h.z.norm() + h.t.abs();
            worst = worst.max(((h.z - on_line.z).norm() + (h.t - on_line.t).abs()) / scale);
        }
        assert!(worst < 1e-9, "deviation {worst}");
        // q itself goes to q_inf.
        assert!(pushed_circle_point(&q, 0.0).is_err());
        assert!(rcircle_affine_params(&TorusPoint::new(re(-1.0), re(0.0)), 1e-12).is_err());
    }

    #[test]
    fn pushed_antipode_has_closed_form() {
        let q = TorusPoint::q0();
        let p = circle_point(&q, PI);
        let img = normalising_matrix(&q) * p.lift();
        let k1 = q.kappa1;
        let k2 = q.kappa2;
        let expect = Vec3::new(-k1, k2 * (k1 - 1.0), re(-4.0 * k2.norm_sqr()));
        assert!(linalg::proj_eq(&img, &expect, 1e-14));
    }

    #[test]
    fn c_circle_lies_on_sphere() {
        assert!(c_circle_on_sphere_check(PI, 32).unwrap() < 1e-12);
        assert!(c_circle_on_sphere_check(2.0 * PI / 3.0, 32).unwrap() < 1e-12);
        // A generic torus leaf is not on the sphere.
        let th = 2.0 * PI / 3.0;
        let e = elliptic_normal_form(EllipticAngles::real(th), FormKind::Siegel);
        let s = isometric_sphere(&e, 1e-12).unwrap();
        let worst = (0..32)
            .map(|k| {
                let p = circle_point(&TorusPoint::q0(), TAU * k as f64 / 32.0);
                HoroPoint::from_point(&p).map(|h| s.sphere.margin(&h).abs()).unwrap_or(0.0)
            })
            .fold(0.0, f64::max);
        assert!(worst > 0.1);
    }

    #[test]
    fn tilde_sphere_center_and_radius() {
        let q = TorusPoint::q0();
        for th in [0.5, PI / 2.0, 2.0, 4.0] {
            let g = tilde_elliptic(&q, th);
            let s = isometric_sphere(&g, 1e-12).unwrap();
            let r = 1.0 / (SQRT_2 * q.kappa2.norm() * (th / 2.0).sin());
            assert!((s.sphere.radius - r).abs() < 1e-12);
            let c = ProjectivePoint::new(normalising_matrix(&q) * circle_point(&q, th).lift(), FormKind::Siegel).unwrap();
            let c = HoroPoint::from_point(&c).unwrap();
            assert!((c.z - s.sphere.center.z).norm() < 1e-12);
            assert!((c.t - s.sphere.center.t).abs() < 1e-12);
        }
    }

    #[test]
    fn leaves_coincide_or_are_disjoint() {
        let a = TorusPoint::leaf_base(0.7);
        let same = torus_pt(0.7, 2.4);
        assert!(leaf_distance(&a, &same, 256) < 0.05);
        // Hausdorff on samples: exact coincidence shows up as matching grids.
        let shifted = torus_pt(0.7, TAU / 256.0 * 37.0);
        assert!(leaf_distance(&a, &shifted, 256) < 1e-6);
        for phi in [0.9, 1.5, 3.0, 5.0] {
            let b = TorusPoint::leaf_base(phi);
            assert!(leaf_distance(&a, &b, 256) > 0.01);
        }
        // E_{t,-t} maps a leaf to itself.
        let e = elliptic_normal_form(EllipticAngles::real(1.9), FormKind::Siegel);
        for k in 0..8 {
            let p = circle_point(&a, 0.8 * k as f64);
            let img = e.apply(&p).unwrap();
            assert!(img.proj_eq(&circle_point(&a, 0.8 * k as f64 + 1.9), 1e-13));
        }
    }

    #[test]
    fn product_with_fixed_point() {
        // <p_E, q> = conj(z1) - 1 on standard lifts.
        let q = TorusPoint::q0();
        let h = hermitian_product(&p_e(), &q.to_point()).unwrap();
        assert!((h - (q.kappa1.conj() - 1.0)).norm() < 1e-15);
    }

    fn boundary_point() -> impl Strategy<Value = ProjectivePoint> {
        (-3.0..3.0f64, -3.0..3.0f64, -4.0..4.0f64)
            .prop_map(|(a, b, t)| HeisenbergPoint::new(C64::new(a, b), t).to_point())
    }

    proptest! {
        #[test]
        fn invariants_vanish_iff_real_and_on_torus(
            a in 0.2..6.0f64, b in 0.2..6.0f64, q in boundary_point(),
            phi in 0.0..TAU, th in 0.0..TAU,
        ) {
            prop_assume!(angle_gap(a, b) > 0.2 && angle_gap(a, -b) > 0.2);
            prop_assume!(angle_gap(2.0 * a, 0.0) > 0.2 && angle_gap(2.0 * b, 0.0) > 0.2);
            // Non-real elliptic: some invariant is nonzero.
            let inv = fixed_lagrangian_invariants(EllipticAngles::new(a, b), &q).unwrap();
            prop_assert!(inv.iter().any(|x| x.abs() > 1e-6));
            // Real elliptic, torus point: all vanish.
            let tp = circle_point(&TorusPoint::leaf_base(phi), th);
            let inv = fixed_lagrangian_invariants(EllipticAngles::real(a), &tp).unwrap();
            prop_assert!(inv.iter().all(|x| x.abs() < 1e-9));
            // Real elliptic, generic point off the torus: some invariant is nonzero.
            let tq = TorusPoint::from_point(&q).unwrap();
            if tq.torus_residual().abs() > 1e-3 && tq.kappa2.norm() > 1e-3 {
                let inv = fixed_lagrangian_invariants(EllipticAngles::real(a), &q).unwrap();
                prop_assert!(inv.iter().any(|x| x.abs() > 1e-9));
            }
        }
    }
}
