//! Heisenberg coordinates on the boundary of the Siegel domain.
//!
//! A boundary point other than `q_inf` is a Heisenberg point `[z, t]` with
//! standard lift `((-|z|^2 + i t)/2, z, 1)`; interior points get a height
//! `u > 0` and lift `((-|z|^2 - u + i t)/2, z, 1)`.
//!
//! Sign convention. The group law is `[z,t][w,s] = [z+w, t+s+2 Im(z conj w)]`
//! and the extended Cygan metric is
//! `| |z-w|^2 + |u-v| - i(t - s + 2 Im(z conj w)) |^{1/2}`. These agree with
//! `|2 <p, q>|^{1/2}` on boundary pairs, which is locked in by tests.

use crate::cproj::{
    cayley_matrix, cone_sign, hermitian_product, ConeSign, FormKind, HermitianForm, Isometry,
    ProjectivePoint,
};
use crate::linalg::{self, c, cis, re, C64, Mat3, Vec3};
use crate::{Error, Result, DEFAULT_TOL};

/// A point `[z, t]` of the Heisenberg group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisenbergPoint {
    pub z: C64,
    pub t: f64,
}

impl HeisenbergPoint {
    pub fn new(z: C64, t: f64) -> Self {
        HeisenbergPoint { z, t }
    }

    pub fn identity() -> Self {
        HeisenbergPoint::new(re(0.0), 0.0)
    }

    pub fn inverse(&self) -> Self {
        HeisenbergPoint::new(-self.z, -self.t)
    }

    pub fn horo(&self) -> HoroPoint {
        HoroPoint {
            z: self.z,
            t: self.t,
            u: 0.0,
        }
    }

    pub fn to_point(&self) -> ProjectivePoint {
        self.horo().to_point()
    }
}

/// Group law `[z,t][w,s] = [z+w, t+s+2 Im(z conj w)]`.
pub fn heis_mul(p: &HeisenbergPoint, q: &HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint::new(p.z + q.z, p.t + q.t + 2.0 * (p.z * q.z.conj()).im)
}

/// Horospherical coordinates `[z, t, u]`, `u >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoroPoint {
    pub z: C64,
    pub t: f64,
    pub u: f64,
}

impl HoroPoint {
    pub fn new(z: C64, t: f64, u: f64) -> Result<Self> {
        if u < 0.0 || !u.is_finite() {
            return Err(Error::InvalidParameter(format!("height u = {u} must be >= 0")));
        }
        Ok(HoroPoint { z, t, u })
    }

    pub fn lift(&self) -> Vec3 {
        Vec3::new(
            c(-self.z.norm_sqr() - self.u, self.t) / 2.0,
            self.z,
            re(1.0),
        )
    }

    pub fn to_point(&self) -> ProjectivePoint {
        ProjectivePoint::new(self.lift(), FormKind::Siegel).expect("standard lift is nonzero")
    }

    pub fn heisenberg(&self) -> HeisenbergPoint {
        HeisenbergPoint::new(self.z, self.t)
    }

    /// Coordinates of a Siegel point in the closed negative cone.
    ///
    /// Heights within `DEFAULT_TOL` of zero (relative) are snapped to 0.
    pub fn from_point(p: &ProjectivePoint) -> Result<Self> {
        if p.kind() != FormKind::Siegel {
            return Err(Error::FormMismatch);
        }
        let lift = p.standard_lift().ok_or(Error::DistinguishedPoint)?;
        let z = lift[1];
        let t = 2.0 * lift[0].im;
        let u = -2.0 * lift[0].re - z.norm_sqr();
        let scale = 1.0 + z.norm_sqr() + 2.0 * lift[0].norm();
        if u < -DEFAULT_TOL * scale {
            return Err(Error::NotNegative(-u));
        }
        Ok(HoroPoint { z, t, u: u.max(0.0) })
    }
}

/// Matrix of the Heisenberg translation by `[z, t]`.
pub fn translation_matrix(p: &HeisenbergPoint) -> Mat3 {
    let o = re(0.0);
    let l = re(1.0);
    Mat3::new(
        l,
        -p.z.conj(),
        c(-p.z.norm_sqr(), p.t) / 2.0,
        o,
        l,
        p.z,
        o,
        o,
        l,
    )
}

/// Generators of the stabilizer of `q_inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stabilizer {
    Translation(HeisenbergPoint),
    Rotation(f64),
    Dilation(f64),
}

/// The Siegel-form matrix of a stabilizer generator.
///
/// * translation `[z,t]`: `[w,s,u] -> [z+w, t+s+2 Im(z conj w), u]`;
/// * rotation `theta`: `[w,s,u] -> [e^{i theta} w, s, u]`;
/// * dilation `lambda`: `[w,s,u] -> [lambda w, lambda^2 s, lambda^2 u]`.
pub fn stabilizer_isometry(kind: Stabilizer) -> Result<Isometry> {
    let m = match kind {
        Stabilizer::Translation(p) => translation_matrix(&p),
        Stabilizer::Rotation(theta) => {
            Mat3::from_diagonal(&Vec3::new(re(1.0), cis(theta), re(1.0))) * cis(-theta / 3.0)
        }
        Stabilizer::Dilation(lambda) => {
            if lambda == 0.0 || !lambda.is_finite() {
                return Err(Error::InvalidParameter("dilation factor must be nonzero".into()));
            }
            Mat3::from_diagonal(&Vec3::new(re(lambda), re(1.0), re(1.0 / lambda)))
        }
    };
    Ok(Isometry::raw(m, FormKind::Siegel))
}

/// Extended Cygan distance between horospherical points.
pub fn cygan_distance(p: &HoroPoint, q: &HoroPoint) -> f64 {
    let w = (p.z - q.z).norm_sqr() + (p.u - q.u).abs();
    let v = p.t - q.t + 2.0 * (p.z * q.z.conj()).im;
    C64::new(w, -v).norm().sqrt()
}

/// Boundary Cygan distance.
pub fn cygan_distance_boundary(p: &HeisenbergPoint, q: &HeisenbergPoint) -> f64 {
    cygan_distance(&p.horo(), &q.horo())
}

/// The Siegel coordinates `(kappa1, kappa2)` of a boundary point in the ball.
fn kappa_of(q_ball: &ProjectivePoint) -> Result<(C64, C64)> {
    if q_ball.kind() != FormKind::Ball {
        return Err(Error::FormMismatch);
    }
    if cone_sign(q_ball, DEFAULT_TOL) != ConeSign::Null {
        return Err(Error::InvalidParameter("base point must lie on the boundary".into()));
    }
    let q = cayley_matrix() * q_ball.lift();
    if q[2].norm() <= DEFAULT_TOL * linalg::vmax_abs(&q) {
        return Err(Error::Degenerate("base point maps to q_infinity".into()));
    }
    Ok((q[0] / q[2], q[1] / q[2]))
}

/// The map `H2 T_q C` taking the ball to the Siegel domain with `q_ball`
/// sent to `q_inf`.
pub fn pullback_matrix(q_ball: &ProjectivePoint) -> Result<Mat3> {
    let (k1, k2) = kappa_of(q_ball)?;
    let t = translation_matrix(&HeisenbergPoint::new(-k2, -2.0 * k1.im));
    Ok(*HermitianForm::siegel().matrix() * t * cayley_matrix())
}

/// Pullback of the extended Cygan metric to the ball, centred at the
/// boundary point `q_ball`.
///
/// Closed form `|4 <w,w'> / (D(w) conj D(w'))|^{1/2}` with
/// `D(w) = w1 + 1 + sqrt2 conj(k2) w2 + conj(k1)(w1 - 1)` on lifts with
/// `w3 = 1`. Valid when at least one argument is on the boundary.
pub fn pullback_cygan_distance(
    w: &ProjectivePoint,
    w2: &ProjectivePoint,
    q_ball: &ProjectivePoint,
) -> Result<f64> {
    let (k1, k2) = kappa_of(q_ball)?;
    if w.kind() != FormKind::Ball || w2.kind() != FormKind::Ball {
        return Err(Error::FormMismatch);
    }
    if cone_sign(w, DEFAULT_TOL) != ConeSign::Null && cone_sign(w2, DEFAULT_TOL) != ConeSign::Null
    {
        return Err(Error::InvalidParameter(
            "at least one point must lie on the boundary".into(),
        ));
    }
    let d = |p: &ProjectivePoint| -> Result<(Vec3, C64)> {
        let l = p.standard_lift().ok_or(Error::DistinguishedPoint)?;
        let v = l[0] + 1.0 + 2f64.sqrt() * k2.conj() * l[1] + k1.conj() * (l[0] - 1.0);
        if v.norm() <= DEFAULT_TOL {
            return Err(Error::DistinguishedPoint);
        }
        Ok((l, v))
    };
    let (l1, d1) = d(w)?;
    let (l2, d2) = d(w2)?;
    let h = HermitianForm::ball().product(&l1, &l2);
    Ok((4.0 * h / (d1 * d2.conj())).norm().sqrt())
}

/// A Cygan sphere `S_{center}(radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyganSphere {
    pub center: HeisenbergPoint,
    pub radius: f64,
}

impl CyganSphere {
    pub fn new(center: HeisenbergPoint, radius: f64) -> Result<Self> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("radius {radius} must be > 0")));
        }
        Ok(CyganSphere { center, radius })
    }

    /// `d(p, center) - radius`.
    pub fn margin(&self, p: &HoroPoint) -> f64 {
        cygan_distance(p, &self.center.horo()) - self.radius
    }

    /// The geographic point on this sphere (a translate of `S_{[0,0]}(r)`).
    pub fn geographic(&self, alpha: f64, beta: f64, omega: f64) -> Result<ProjectivePoint> {
        let gc = GeoCoord::new(alpha, beta, omega, self.radius)?;
        let lift = translation_matrix(&self.center) * geographic_point(&gc).lift();
        ProjectivePoint::new(lift, FormKind::Siegel)
    }
}

/// Position of a point relative to an isometric sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SphereSide {
    /// `I_-`: the side containing the center.
    Inside,
    On,
    /// `I_+`: the side containing `q_inf`.
    Outside,
}

/// The isometric sphere `I(g)` together with the polar data for side tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometricSphere {
    pub sphere: CyganSphere,
    /// Lift of `g^{-1}(q_inf)` matching the det-one representative of `g`.
    pub preimage: Vec3,
}

impl IsometricSphere {
    /// `|<p, g^{-1} q_inf>| / |<p, q_inf>|`; equals `(d/r)^2` on standard lifts.
    pub fn level(&self, p: &ProjectivePoint) -> Result<f64> {
        if p.kind() != FormKind::Siegel {
            return Err(Error::FormMismatch);
        }
        let l = linalg::normalize_max(p.lift());
        let h2 = HermitianForm::siegel();
        let a = h2.product(&l, &Vec3::new(re(1.0), re(0.0), re(0.0))).norm();
        let b = h2.product(&l, &self.preimage).norm();
        Ok(if a == 0.0 { f64::INFINITY } else { b / a })
    }

    /// Which side of `I(g)` the point lies on, with a band of `tol` on the level.
    pub fn side(&self, p: &ProjectivePoint, tol: f64) -> Result<SphereSide> {
        let lv = self.level(p)?;
        Ok(if lv < 1.0 - tol {
            SphereSide::Inside
        } else if lv > 1.0 + tol {
            SphereSide::Outside
        } else {
            SphereSide::On
        })
    }
}

/// Isometric sphere of `g` in the Siegel domain.
///
/// Center `[conj(g32)/conj(g31), 2 Im(conj(g33)/conj(g31))]`, radius
/// `sqrt(2/|g31|)` for the det-one representative.
pub fn isometric_sphere(g: &Isometry, tol: f64) -> Result<IsometricSphere> {
    if g.kind() != FormKind::Siegel {
        return Err(Error::FormMismatch);
    }
    let m = g.det_normalized();
    let (g31, g32, g33) = (m[(2, 0)], m[(2, 1)], m[(2, 2)]);
    if g31.norm() <= tol * linalg::max_abs(&m) {
        return Err(Error::StabilizerElement);
    }
    let center = HeisenbergPoint::new(g32.conj() / g31.conj(), 2.0 * (g33.conj() / g31.conj()).im);
    Ok(IsometricSphere {
        sphere: CyganSphere {
            center,
            radius: (2.0 / g31.norm()).sqrt(),
        },
        preimage: Vec3::new(g33.conj(), g32.conj(), g31.conj()),
    })
}

/// Geographic coordinates `(alpha, beta, omega)` on a sphere of radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoCoord {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub r: f64,
}

impl GeoCoord {
    pub fn new(alpha: f64, beta: f64, omega: f64, r: f64) -> Result<Self> {
        let half = std::f64::consts::FRAC_PI_2;
        if !(-half - DEFAULT_TOL..=half + DEFAULT_TOL).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} outside [-pi/2, pi/2]")));
        }
        let bound = alpha.cos().max(0.0).sqrt();
        if omega.abs() > bound + DEFAULT_TOL {
            return Err(Error::InvalidParameter(format!(
                "|omega| = {} exceeds sqrt(cos alpha) = {bound}",
                omega.abs()
            )));
        }
        if r <= 0.0 || !r.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter("radius must be > 0".into()));
        }
        Ok(GeoCoord { alpha, beta, omega, r })
    }

    /// Horospherical height `r^2 (cos alpha - omega^2)`.
    pub fn height(&self) -> f64 {
        (self.r * self.r * (self.alpha.cos() - self.omega * self.omega)).max(0.0)
    }
}

/// The point `(-r^2 e^{-i alpha}/2, r omega e^{i(beta - alpha/2)}, 1)` of
/// `S_{[0,0]}(r)`.
pub fn geographic_point(gc: &GeoCoord) -> ProjectivePoint {
    let r2 = gc.r * gc.r;
    let lift = Vec3::new(
        -r2 * cis(-gc.alpha) / 2.0,
        gc.r * gc.omega * cis(gc.beta - gc.alpha / 2.0),
        re(1.0),
    );
    ProjectivePoint::new(lift, FormKind::Siegel).expect("nonzero lift")
}

/// `|2 <p, q>|^{1/2}` on standard lifts.
pub fn product_distance(p: &HoroPoint, q: &HoroPoint) -> f64 {
    let h = hermitian_product(&p.to_point(), &q.to_point()).expect("same form");
    (2.0 * h.norm()).sqrt()
}
