//! Projective models of the complex hyperbolic plane.
//!
//! Points are complex 3-vectors up to scale, paired with one of the two
//! standard Hermitian forms of signature (2,1):
//!
//! * `Ball`: `H1 = diag(1, 1, -1)`;
//! * `Siegel`: `H2`, the antidiagonal form with unit center entry.
//!
//! The product convention is `<z, w> = w* H z`. The Cayley transform is its
//! own inverse and intertwines the two forms.

use crate::linalg::{self, c, re, C64, Mat3, Vec3};
use crate::{Error, Result, DEFAULT_TOL};

/// Which of the two standard forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormKind {
    Ball,
    Siegel,
}

impl FormKind {
    pub fn other(self) -> FormKind {
        match self {
            FormKind::Ball => FormKind::Siegel,
            FormKind::Siegel => FormKind::Ball,
        }
    }
}

/// A standard Hermitian form of signature (2,1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianForm {
    kind: FormKind,
    matrix: Mat3,
}

impl HermitianForm {
    pub fn new(kind: FormKind) -> Self {
        let o = re(0.0);
        let l = re(1.0);
        let matrix = match kind {
            FormKind::Ball => Mat3::new(l, o, o, o, l, o, o, o, -l),
            FormKind::Siegel => Mat3::new(o, o, l, o, l, o, l, o, o),
        };
        HermitianForm { kind, matrix }
    }

    pub fn ball() -> Self {
        Self::new(FormKind::Ball)
    }

    pub fn siegel() -> Self {
        Self::new(FormKind::Siegel)
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    /// `<u, v> = v* H u` on raw lifts.
    pub fn product(&self, u: &Vec3, v: &Vec3) -> C64 {
        (v.adjoint() * self.matrix * u)[(0, 0)]
    }
}

impl From<FormKind> for HermitianForm {
    fn from(kind: FormKind) -> Self {
        HermitianForm::new(kind)
    }
}

/// A point of complex projective 2-space, tagged with a form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectivePoint {
    lift: Vec3,
    form: HermitianForm,
}

impl ProjectivePoint {
    pub fn new(lift: Vec3, form: impl Into<HermitianForm>) -> Result<Self> {
        if lift.iter().all(|z| z.norm() == 0.0) || lift.iter().any(|z| !z.is_finite()) {
            return Err(Error::ZeroVector);
        }
        Ok(ProjectivePoint {
            lift,
            form: form.into(),
        })
    }

    /// Convenience constructor from three coordinates.
    pub fn from_coords(a: C64, b: C64, d: C64, form: impl Into<HermitianForm>) -> Result<Self> {
        Self::new(Vec3::new(a, b, d), form)
    }

    /// The distinguished boundary point `q_inf = [1, 0, 0]` of the Siegel domain.
    pub fn q_infinity() -> Self {
        ProjectivePoint {
            lift: Vec3::new(re(1.0), re(0.0), re(0.0)),
            form: HermitianForm::siegel(),
        }
    }

    pub fn lift(&self) -> &Vec3 {
        &self.lift
    }

    pub fn form(&self) -> &HermitianForm {
        &self.form
    }

    pub fn kind(&self) -> FormKind {
        self.form.kind
    }

    /// Self product `<p, p>`.
    pub fn norm_sq(&self) -> f64 {
        self.form.product(&self.lift, &self.lift).re
    }

    /// Lift rescaled so that the last coordinate is one, when it is nonzero.
    pub fn standard_lift(&self) -> Option<Vec3> {
        let last = self.lift[2];
        if last.norm() <= DEFAULT_TOL * linalg::vmax_abs(&self.lift) {
            None
        } else {
            Some(self.lift / last)
        }
    }

    /// Projective equality within `tol`.
    pub fn proj_eq(&self, other: &ProjectivePoint, tol: f64) -> bool {
        self.form.kind == other.form.kind && linalg::proj_eq(&self.lift, &other.lift, tol)
    }

    /// Scale-free distance between lifts, used as an equality residual.
    pub fn proj_residual(&self, other: &ProjectivePoint) -> f64 {
        linalg::proj_distance(&self.lift, &other.lift)
    }
}

/// `<u, v>` for two points against the same form.
pub fn hermitian_product(u: &ProjectivePoint, v: &ProjectivePoint) -> Result<C64> {
    if u.form.kind != v.form.kind {
        return Err(Error::FormMismatch);
    }
    Ok(u.form.product(&u.lift, &v.lift))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeSign {
    Negative,
    Null,
    Positive,
}

/// Sign of `<p, p>` with a band of `tol * |lift|^2` around zero.
pub fn cone_sign(p: &ProjectivePoint, tol: f64) -> ConeSign {
    let v = p.norm_sq();
    let scale = p.lift.norm_squared();
    if v.abs() <= tol * scale {
        ConeSign::Null
    } else if v < 0.0 {
        ConeSign::Negative
    } else {
        ConeSign::Positive
    }
}

/// Bergman distance between two points of the negative cone.
///
/// Uses `cosh^2(d/2) = <u,v><v,u> / (<u,u><v,v>)`.
pub fn bergman_distance(u: &ProjectivePoint, v: &ProjectivePoint) -> Result<f64> {
    let uv = hermitian_product(u, v)?;
    for p in [u, v] {
        if cone_sign(p, DEFAULT_TOL) != ConeSign::Negative {
            return Err(Error::NotNegative(p.norm_sq()));
        }
    }
    let x = uv.norm_sqr() / (u.norm_sq() * v.norm_sq());
    Ok(2.0 * x.max(1.0).sqrt().acosh())
}

/// The Cayley matrix, an involution exchanging `H1` and `H2`.
pub fn cayley_matrix() -> Mat3 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let o = re(0.0);
    Mat3::new(re(s), o, re(s), o, re(1.0), o, re(s), o, re(-s))
}

/// Move a point to the other model.
pub fn cayley_transform(p: &ProjectivePoint) -> ProjectivePoint {
    ProjectivePoint {
        lift: cayley_matrix() * p.lift,
        form: HermitianForm::new(p.form.kind.other()),
    }
}

/// An element of `SU(H)` for one of the standard forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    matrix: Mat3,
    form: HermitianForm,
}

impl Isometry {
    /// Validate membership in `SU(H)` with the default tolerance.
    pub fn new(matrix: Mat3, form: impl Into<HermitianForm>) -> Result<Self> {
        Self::with_tol(matrix, form, DEFAULT_TOL)
    }

    /// Validate membership with residuals measured relative to `|M|^2`.
    pub fn with_tol(matrix: Mat3, form: impl Into<HermitianForm>, tol: f64) -> Result<Self> {
        let form = form.into();
        let (unitary, det) = membership_residuals(&matrix, &form);
        if unitary > tol || det > tol || !unitary.is_finite() {
            return Err(Error::NotInGroup { unitary, det });
        }
        Ok(Isometry { matrix, form })
    }

    /// Wrap a matrix known to be in `SU(H)` by construction.
    pub(crate) fn raw(matrix: Mat3, form: FormKind) -> Self {
        Isometry {
            matrix,
            form: HermitianForm::new(form),
        }
    }

    pub fn identity(form: impl Into<HermitianForm>) -> Self {
        Isometry {
            matrix: Mat3::identity(),
            form: form.into(),
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn form(&self) -> &HermitianForm {
        &self.form
    }

    pub fn kind(&self) -> FormKind {
        self.form.kind
    }

    /// Composition `self * other` (apply `other` first).
    pub fn compose(&self, other: &Isometry) -> Result<Isometry> {
        if self.form.kind != other.form.kind {
            return Err(Error::FormMismatch);
        }
        Ok(Isometry {
            matrix: self.matrix * other.matrix,
            form: self.form,
        })
    }

    /// Inverse via `M^{-1} = H M* H` (both standard forms are involutions).
    pub fn inverse(&self) -> Isometry {
        let h = self.form.matrix;
        Isometry {
            matrix: h * self.matrix.adjoint() * h,
            form: self.form,
        }
    }

    /// Integer power, negative exponents through the inverse.
    pub fn pow(&self, k: i64) -> Isometry {
        let base = if k < 0 { self.inverse() } else { *self };
        let mut acc = Mat3::identity();
        let mut b = base.matrix;
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc *= b;
            }
            b = b * b;
            e >>= 1;
        }
        Isometry {
            matrix: acc,
            form: self.form,
        }
    }

    pub fn apply(&self, p: &ProjectivePoint) -> Result<ProjectivePoint> {
        if p.form.kind != self.form.kind {
            return Err(Error::FormMismatch);
        }
        ProjectivePoint::new(self.matrix * p.lift, self.form)
    }

    /// The matrix divided by the principal cube root of its determinant.
    pub fn det_normalized(&self) -> Mat3 {
        linalg::det_normalize(&self.matrix)
    }

    pub fn trace(&self) -> C64 {
        self.det_normalized().trace()
    }

    /// Eigenvalues of the det-one representative.
    pub fn eigenvalues(&self) -> [C64; 3] {
        linalg::eigenvalues(&self.det_normalized())
    }

    /// Conjugate into the other model by the Cayley matrix.
    pub fn cayley_conjugate(&self) -> Isometry {
        let cm = cayley_matrix();
        Isometry {
            matrix: cm * self.matrix * cm,
            form: HermitianForm::new(self.form.kind.other()),
        }
    }

    /// Equality in `PU(H)`.
    pub fn proj_eq(&self, other: &Isometry, tol: f64) -> bool {
        linalg::mat_proj_distance(&self.matrix, &other.matrix) <= tol
    }
}

/// Residuals `(|M* H M - H| / max(1,|M|^2), |det M - 1|)`.
pub fn membership_residuals(m: &Mat3, form: &HermitianForm) -> (f64, f64) {
    let scale = linalg::max_abs(m).powi(2).max(1.0);
    let unitary = linalg::max_abs(&(m.adjoint() * form.matrix * m - form.matrix)) / scale;
    let det = (m.determinant() - re(1.0)).norm();
    (unitary, det)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IsometryKind {
    Loxodromic,
    RegularElliptic,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefinedKind {
    Identity,
    Unipotent,
    ScrewParabolic,
    SpecialElliptic,
}

/// Trace-based classification. `refined` is a best-effort reading of the
/// eigenstructure and is only filled in on the boundary band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryClass {
    pub kind: IsometryKind,
    pub f_value: f64,
    pub refined: Option<RefinedKind>,
}

/// Goldman's discriminant `f(z) = |z|^4 - 8 Re(z^3) + 18 |z|^2 - 27`.
pub fn trace_discriminant(z: C64) -> f64 {
    let n2 = z.norm_sqr();
    n2 * n2 - 8.0 * (z * z * z).re + 18.0 * n2 - 27.0
}

/// Classify with the band `|f| <= tol * max(1, |tr|^4)`.
pub fn classify_isometry(g: &Isometry, tol: f64) -> IsometryClass {
    let m = g.det_normalized();
    let tr = m.trace();
    let f = trace_discriminant(tr);
    let band = tol * tr.norm().powi(4).max(1.0);
    let kind = if f > band {
        IsometryKind::Loxodromic
    } else if f < -band {
        IsometryKind::RegularElliptic
    } else {
        IsometryKind::Boundary
    };
    let refined = match kind {
        IsometryKind::Boundary => Some(refine(&m, tol)),
        _ => None,
    };
    IsometryClass {
        kind,
        f_value: f,
        refined,
    }
}

fn refine(m: &Mat3, tol: f64) -> RefinedKind {
    // Defective eigenvalues only resolve to about tol^(1/3).
    let cluster = tol.cbrt().max(1e-6) * 10.0;
    let ev = linalg::eigenvalues(m);
    let scale = linalg::max_abs(m).max(1.0);
    let close = |a: C64, b: C64| (a - b).norm() <= cluster;
    let all_same = close(ev[0], ev[1]) && close(ev[1], ev[2]) && close(ev[0], ev[2]);
    if all_same {
        let lambda = (ev[0] + ev[1] + ev[2]) / 3.0;
        let diff = m - Mat3::identity() * lambda;
        if linalg::max_abs(&diff) <= cluster * scale {
            return RefinedKind::Identity;
        }
        return RefinedKind::Unipotent;
    }
    let pair = [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .find(|&(i, j)| close(ev[i], ev[j]));
    match pair {
        Some((i, j)) => {
            let lambda = (ev[i] + ev[j]) / 2.0;
            let diagonalizable =
                linalg::rank(&(m - Mat3::identity() * lambda), cluster) <= 1;
            let unit = ev.iter().all(|z| (z.norm() - 1.0).abs() <= cluster);
            if diagonalizable && unit {
                RefinedKind::SpecialElliptic
            } else {
                RefinedKind::ScrewParabolic
            }
        }
        None => RefinedKind::ScrewParabolic,
    }
}

/// Cartan's angular invariant `arg(-<p1,p2><p2,p3><p3,p1>)` of three
/// distinct boundary points.
pub fn cartan_invariant(
    p1: &ProjectivePoint,
    p2: &ProjectivePoint,
    p3: &ProjectivePoint,
    tol: f64,
) -> Result<f64> {
    let pts = [p1, p2, p3];
    for p in pts {
        if p.form.kind != p1.form.kind {
            return Err(Error::FormMismatch);
        }
        if cone_sign(p, tol) != ConeSign::Null {
            return Err(Error::Degenerate(format!(
                "point is not null: <p,p> = {:e}",
                p.norm_sq()
            )));
        }
    }
    let mut prod = re(-1.0);
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        let h = hermitian_product(pts[a], pts[b])?;
        if h.norm() <= tol * pts[a].lift.norm() * pts[b].lift.norm() {
            return Err(Error::Degenerate("coincident boundary points".into()));
        }
        prod *= h;
    }
    Ok(prod.arg())
}

/// `arg(-<p1,p2><p2,p3><p3,p1>)` without the nullity check, for triples that
/// include an interior point.
pub fn triple_product_arg(
    p1: &ProjectivePoint,
    p2: &ProjectivePoint,
    p3: &ProjectivePoint,
) -> Result<f64> {
    let prod = -hermitian_product(p1, p2)? * hermitian_product(p2, p3)? * hermitian_product(p3, p1)?;
    Ok(prod.arg())
}

/// The order-two complex reflection `p -> -p + 2 <p,n>/<n,n> n` in the
/// complex line polar to `n`.
pub fn complex_reflection(polar: &ProjectivePoint, tol: f64) -> Result<Isometry> {
    let nn = polar.norm_sq();
    if cone_sign(polar, tol) != ConeSign::Positive {
        return Err(Error::NotPositive(nn));
    }
    let n = polar.lift;
    let h = polar.form.matrix;
    let m = -Mat3::identity() + (n * n.adjoint() * h) * c(2.0 / nn, 0.0);
    Ok(Isometry {
        matrix: m,
        form: polar.form,
    })
}
