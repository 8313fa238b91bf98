//! Complex hyperbolic `(n,∞,∞)`-triangle groups.
//!
//! The representation is parameterised by `n >= 3` and `t = tan(A/2)`, where
//! `A ∈ (0,π)` is the angular invariant of the triangle. The generators are
//! the complex reflections `I1, I2, I3` in the Siegel domain, and
//! `A = I1 I2`, `B = I2 I3`.
//!
//! The discreteness certificate checks that `I(B^{j'})` and
//! `I(A^k B^j A^{-k})` are disjoint for every `j', j` and `1 <= k < 2/sin(π/n)`
//! (apart from the tangent pair `(1, n-1, 1)`), using the Cygan margin
//! `ρ = d(c, c') - (r + r')`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use crate::cproj::{classify_isometry, FormKind, HermitianForm, Isometry, IsometryClass};
use crate::heis::{cygan_distance_boundary, heis_mul, isometric_sphere, HeisenbergPoint, IsometricSphere};
use crate::linalg::{self, c, re};
use crate::{Error, Mat3, Result, DEFAULT_TOL};

/// Parameters of a triangle-group representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleParams {
    pub n: usize,
    pub t: f64,
    /// The angular invariant `A = 2 atan(t)`.
    pub angular: f64,
    pub y: f64,
    pub z: f64,
}

impl TriangleParams {
    /// Deviation from the circle `(y - 1/sin²(π/n))² + z² = cos²(π/n)/sin⁴(π/n)`.
    pub fn circle_residual(&self) -> f64 {
        let (s, co) = (PI / self.n as f64).sin_cos();
        let s2 = s * s;
        (self.y - 1.0 / s2).powi(2) + self.z * self.z - co * co / (s2 * s2)
    }

    /// `arg(y-1+zi) - arg(y+zi)` reduced to `[0, 2π)`.
    pub fn angle_from_yz(&self) -> f64 {
        let a = c(self.y - 1.0, self.z).arg() - c(self.y, self.z).arg();
        a.rem_euclid(2.0 * PI)
    }

    /// `A^k` acts on Heisenberg space as this left translation.
    pub fn a_translation(k: i64) -> HeisenbergPoint {
        HeisenbergPoint::new(re(-2.0 * k as f64), 0.0)
    }
}

/// `(y, z)` from `n` and `t`.
pub fn params_from_t(n: usize, t: f64) -> Result<TriangleParams> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n = {n} must be >= 3")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let co = (PI / n as f64).cos();
    let t2 = t * t;
    let s = (1.0 - t2) / (1.0 + t2);
    let den = 2.0 * s * co - (1.0 + co * co);
    let y = (s * co - 1.0) / den;
    let z = (-2.0 * t / (1.0 + t2)) * co / den;
    Ok(TriangleParams {
        n,
        t,
        angular: 2.0 * t.atan(),
        y,
        z,
    })
}

/// Parameters from the angular invariant `A ∈ (0, π)`.
pub fn params_from_angular(n: usize, angular: f64) -> Result<TriangleParams> {
    if !(angular > 0.0 && angular < PI) {
        return Err(Error::InvalidParameter(format!(
            "angular invariant {angular} must lie in (0, π)"
        )));
    }
    params_from_t(n, (angular / 2.0).tan())
}

/// Positivity threshold `tan(π/(2n))`; `W_A` is parabolic there.
pub fn threshold(n: usize) -> f64 {
    (PI / (2.0 * n as f64)).tan()
}

/// Largest integer strictly below `2/sin(π/n)`.
pub fn k_bound(n: usize) -> i64 {
    let b = 2.0 / (PI / n as f64).sin();
    // 2/sin(π/6) = 4 rounds up; keep the bound strict.
    (b - 1e-9).ceil() as i64 - 1
}

/// The three complex reflections and derived words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generators {
    pub i1: Isometry,
    pub i2: Isometry,
    pub i3: Isometry,
}

fn mul(a: &Isometry, b: &Isometry) -> Isometry {
    Isometry::raw(a.matrix() * b.matrix(), FormKind::Siegel)
}

impl Generators {
    pub fn a(&self) -> Isometry {
        mul(&self.i1, &self.i2)
    }

    pub fn b(&self) -> Isometry {
        mul(&self.i2, &self.i3)
    }

    /// `W_A = I1 I3 I2 I3`.
    pub fn w_a(&self) -> Isometry {
        mul(&mul(&self.i1, &self.i3), &mul(&self.i2, &self.i3))
    }

    /// `W_B = I1 I2 I3`.
    pub fn w_b(&self) -> Isometry {
        mul(&mul(&self.i1, &self.i2), &self.i3)
    }
}

pub fn generators(p: &TriangleParams) -> Result<Generators> {
    let m = p.y * p.y + p.z * p.z;
    if m <= DEFAULT_TOL {
        return Err(Error::InvalidParameter(format!("y² + z² = {m:e} vanishes")));
    }
    let w = c(p.y, p.z);
    let (o, one) = (re(0.0), re(1.0));
    let i1 = Mat3::new(-one, o, o, o, one, o, o, o, -one);
    let i2 = Mat3::new(-one, re(-2.0), re(2.0), o, one, re(-2.0), o, o, -one);
    let i3 = Mat3::new(
        -one,
        o,
        o,
        w * 2.0 / m,
        one,
        o,
        re(2.0 / m),
        w.conj() * 2.0 / m,
        -one,
    );
    let form = HermitianForm::siegel();
    Ok(Generators {
        i1: Isometry::new(i1, form)?,
        i2: Isometry::new(i2, form)?,
        i3: Isometry::new(i3, form)?,
    })
}

/// `B^k` from the closed form in `cos(2πk/n)`, `sin(2πk/n)` and
/// `v = B² - 2μB + id`, `μ = cos(2π/n)`.
pub fn power_of_b(p: &TriangleParams, k: i64) -> Result<Isometry> {
    let b = *generators(p)?.b().matrix();
    let nf = p.n as f64;
    let mu = (2.0 * PI / nf).cos();
    let id = Mat3::identity();
    let v = b * b - b * re(2.0 * mu) + id;
    let ang = 2.0 * PI * k as f64 / nf;
    let s1 = (2.0 * PI / nf).sin();
    let sh = (PI / nf).sin();
    let m = id * re(ang.cos())
        + (b - id * re(mu) - v * re(0.5)) * re(ang.sin() / s1)
        + v * re((1.0 - ang.cos()) / (4.0 * sh * sh));
    Ok(Isometry::raw(m, FormKind::Siegel))
}

/// Trace of `W_A` from `3 + 16(1-y)/(y²+z²)`.
pub fn wa_trace_formula(p: &TriangleParams) -> f64 {
    3.0 + 16.0 * (1.0 - p.y) / (p.y * p.y + p.z * p.z)
}

pub fn wa_type(p: &TriangleParams, tol: f64) -> Result<IsometryClass> {
    Ok(classify_isometry(&generators(p)?.w_a(), tol))
}

pub fn wb_type(p: &TriangleParams, tol: f64) -> Result<IsometryClass> {
    Ok(classify_isometry(&generators(p)?.w_b(), tol))
}

/// Powers of `A` and `B` for repeated sphere queries at fixed parameters.
struct Words {
    n: usize,
    a: Isometry,
    b: Isometry,
}

impl Words {
    fn new(p: &TriangleParams) -> Result<Self> {
        let g = generators(p)?;
        Ok(Words {
            n: p.n,
            a: g.a(),
            b: g.b(),
        })
    }

    /// `A^k B^j A^{-k}`.
    fn conj(&self, j: i64, k: i64) -> Isometry {
        let ak = self.a.pow(k);
        mul(&mul(&ak, &self.b.pow(j)), &ak.inverse())
    }

    fn sphere(&self, j: usize, k: i64) -> Result<IsometricSphere> {
        check_index(self.n, j)?;
        isometric_sphere(&self.conj(j as i64, k), DEFAULT_TOL).map_err(|e| match e {
            Error::StabilizerElement => {
                Error::Degenerate(format!("A^k B^j A^-k fixes q_inf (j = {j}, k = {k})"))
            }
            other => other,
        })
    }
}

fn check_index(n: usize, j: usize) -> Result<()> {
    if j == 0 || j >= n {
        return Err(Error::InvalidParameter(format!("index {j} outside 1..{}", n - 1)));
    }
    Ok(())
}

/// The isometric sphere `I_{j,k} = I(A^k B^j A^{-k})`.
pub fn word_sphere(p: &TriangleParams, j: usize, k: i64) -> Result<IsometricSphere> {
    Words::new(p)?.sphere(j, k)
}

/// Closed-form radius of `I_{j,k}`, independent of `k`.
pub fn radius_closed_form(p: &TriangleParams, j: usize) -> f64 {
    let nf = p.n as f64;
    let (sh, ch) = (PI / (2.0 * nf)).sin_cos();
    0.5 * (p.t * p.t + 1.0).sqrt() * (PI / nf).sin()
        / (p.t * p.t * ch.powi(4) + sh.powi(4)).sqrt()
        / (PI * j as f64 / nf).sin()
}

/// Radii and centers of the family `I_{j,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereFamily {
    pub n: usize,
    /// `r_j` for `j = 1..n-1` (index `j - 1`).
    pub radii: Vec<f64>,
    pub closed_radii: Vec<f64>,
    pub centers: BTreeMap<(usize, i64), HeisenbergPoint>,
    /// Largest coordinate deviation between `c_{j,k}` and `T_{[-2k,0]}(c_{j,0})`.
    pub translation_residual: f64,
}

/// Spheres `I_{j,k}` for `j = 1..n-1` and `|k| <= k_max`.
pub fn sphere_family(p: &TriangleParams, k_max: i64) -> Result<SphereFamily> {
    let words = Words::new(p)?;
    let mut radii = Vec::with_capacity(p.n - 1);
    let mut closed_radii = Vec::with_capacity(p.n - 1);
    let mut centers = BTreeMap::new();
    let mut translation_residual: f64 = 0.0;
    for j in 1..p.n {
        let base = words.sphere(j, 0)?;
        radii.push(base.sphere.radius);
        closed_radii.push(radius_closed_form(p, j));
        for k in -k_max.abs()..=k_max.abs() {
            let s = words.sphere(j, k)?;
            let moved = heis_mul(&TriangleParams::a_translation(k), &base.sphere.center);
            translation_residual = translation_residual.max(coord_distance(&s.sphere.center, &moved));
            centers.insert((j, k), s.sphere.center);
        }
    }
    Ok(SphereFamily {
        n: p.n,
        radii,
        closed_radii,
        centers,
        translation_residual,
    })
}

/// Coordinate deviation; the Cygan metric takes a fourth root near zero and
/// would amplify rounding.
pub fn coord_distance(a: &HeisenbergPoint, b: &HeisenbergPoint) -> f64 {
    (a.z - b.z).norm().max((a.t - b.t).abs())
}

/// `ρ_{j',j,k} = d(c_{j',0}, c_{j,k}) - (r_{j'} + r_j)`.
pub fn rho(p: &TriangleParams, jprime: usize, j: usize, k: i64) -> Result<f64> {
    let words = Words::new(p)?;
    rho_with(&words, jprime, j, k)
}

fn rho_with(words: &Words, jprime: usize, j: usize, k: i64) -> Result<f64> {
    let s0 = words.sphere(jprime, 0)?.sphere;
    let s1 = words.sphere(j, k)?.sphere;
    Ok(cygan_distance_boundary(&s0.center, &s1.center) - (s0.radius + s1.radius))
}

/// Closed forms of `ρ` for the cases treated analytically at `n = 3, 4, 5`.
pub fn rho_closed_form(p: &TriangleParams, jprime: usize, j: usize, k: i64) -> Option<f64> {
    let t = p.t;
    let t2 = t * t;
    let (s2, s5) = (2f64.sqrt(), 5f64.sqrt());
    match (p.n, jprime, j, k) {
        (3, 2, 1, 1) => {
            let q = (9.0 * t2 + 1.0).sqrt();
            Some(8.0 * t / q - 4.0 * (t2 + 1.0).sqrt() / q)
        }
        (4, _, _, 1) => {
            let den = (3.0 + 2.0 * s2) * t2 + 3.0 - 2.0 * s2;
            let r1 = (2.0 * (t2 + 1.0) / den).sqrt();
            let r2 = ((t2 + 1.0) / den).sqrt();
            match (jprime, j) {
                (2, 2) => Some(2.0 - 2.0 * r2),
                (3, 1) => {
                    let x = 4.0 * ((3.0 * s2 + 4.0) * t2 * t2 - (3.0 * s2 - 4.0))
                        / (t2 + 1.0).powi(2);
                    Some(2.0 * r1 * ((1.0 + x).powf(0.25) - 1.0))
                }
                _ => None,
            }
        }
        (5, _, _, 1) => {
            let r = |i: usize| {
                (5.0 - s5).sqrt() / (5.0 * (3.0 + s5) * t2 + 7.0 - 3.0 * s5).sqrt()
                    * (t2 + 1.0).sqrt()
                    / (i as f64 * PI / 5.0).sin()
            };
            let d4 = match (jprime, j) {
                (2, 3) => 256.0 * (4.0 / (25.0 * (9.0 + 4.0 * s5) * t2 + 5.0) + 0.2).powi(2),
                (3, 2) => 16384.0 * t2 * t2 / (5.0 * (3.0 + s5) * t2 - 3.0 * s5 + 7.0).powi(2),
                (4, 1) => {
                    25600.0 / (5.0 + s5).powi(4)
                        * (((7.0 + 3.0 * s5) * t2 + 3.0 - s5) / (5.0 * t2 - 4.0 * s5 + 9.0))
                            .powi(2)
                }
                _ => return None,
            };
            Some(d4.powf(0.25) - r(jprime) - r(j))
        }
        _ => None,
    }
}

/// Residuals of the tangency of `I_{1,k}` and `I_{n-1,k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangencyResidual {
    /// `|d(c_{1,k}, c_{n-1,k+1}) - (r_1 + r_{n-1})|`.
    pub distance: f64,
    /// Largest `|level - 1|` of the fixed point of `A^k (AB) A^{-k}` on both spheres.
    pub fixed_point: f64,
    /// `|<p,p>| / |p|²` for the fixed point.
    pub nullity: f64,
}

impl TangencyResidual {
    pub fn max(&self) -> f64 {
        self.distance.max(self.fixed_point)
    }
}

pub fn tangency_check(p: &TriangleParams, k: i64) -> Result<TangencyResidual> {
    let words = Words::new(p)?;
    tangency_with(&words, k)
}

fn tangency_with(words: &Words, k: i64) -> Result<TangencyResidual> {
    let n = words.n;
    let s1 = words.sphere(1, k)?;
    let s2 = words.sphere(n - 1, k + 1)?;
    let distance = (cygan_distance_boundary(&s1.sphere.center, &s2.sphere.center)
        - (s1.sphere.radius + s2.sphere.radius))
        .abs();

    let ak = words.a.pow(k);
    let ab = mul(&words.a, &words.b);
    let g = mul(&mul(&ak, &ab), &ak.inverse());
    let m = g.det_normalized() - Mat3::identity();
    let scale = linalg::max_abs(&m);
    if linalg::rank(&m, 1e-8) != 2 {
        return Err(Error::Degenerate(format!(
            "A^k (AB) A^-k is not three-step unipotent (k = {k}, |M - id| = {scale:e})"
        )));
    }
    let v = linalg::kernel_vector(&m);
    let nullity = HermitianForm::siegel().product(&v, &v).norm() / v.norm_squared();
    if nullity > 1e-6 {
        return Err(Error::Degenerate(format!(
            "fixed point of A^k (AB) A^-k is not null (k = {k}, |<p,p>| = {nullity:e})"
        )));
    }
    let point = crate::cproj::ProjectivePoint::new(v, FormKind::Siegel)?;
    let fixed_point = (s1.level(&point)? - 1.0)
        .abs()
        .max((s2.level(&point)? - 1.0).abs());
    Ok(TangencyResidual {
        distance,
        fixed_point,
        nullity,
    })
}

/// A triple `(j', j, k)` indexing `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Witness {
    pub jprime: usize,
    pub j: usize,
    pub k: i64,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.jprime, self.j, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertEntry {
    pub jprime: usize,
    pub j: usize,
    pub k: i64,
    pub rho: f64,
}

impl CertEntry {
    pub fn witness(&self) -> Witness {
        Witness {
            jprime: self.jprime,
            j: self.j,
            k: self.k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    Failed(Witness),
    Boundary,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Certified => f.write_str("Certified"),
            Verdict::Failed(_) => f.write_str("Failed"),
            Verdict::Boundary => f.write_str("Boundary"),
        }
    }
}

/// One-sided discreteness certificate; `Certified` implies discreteness,
/// anything else is inconclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretenessCertificate {
    pub n: usize,
    pub t: f64,
    pub k_bound: i64,
    pub entries: Vec<CertEntry>,
    pub tangency_residual: f64,
    pub verdict: Verdict,
    pub min_margin: f64,
    /// The entry attaining `min_margin`.
    pub witness: Option<Witness>,
}

/// The `(j', j, k)` triples checked by [`certify`].
pub fn required_triples(n: usize) -> Vec<Witness> {
    let kb = k_bound(n);
    let mut out = Vec::new();
    for jprime in 1..n {
        for j in 1..n {
            for k in 1..=kb {
                if (jprime, j, k) != (1, n - 1, 1) {
                    out.push(Witness { jprime, j, k });
                }
            }
        }
    }
    out
}

pub fn certify(p: &TriangleParams, tol: f64) -> Result<DiscretenessCertificate> {
    let words = Words::new(p)?;
    let mut entries = Vec::new();
    for w in required_triples(p.n) {
        entries.push(CertEntry {
            jprime: w.jprime,
            j: w.j,
            k: w.k,
            rho: rho_with(&words, w.jprime, w.j, w.k)?,
        });
    }
    let tangency_residual = match tangency_with(&words, 0) {
        Ok(r) => r.max(),
        Err(_) => f64::INFINITY,
    };
    let argmin = entries
        .iter()
        .min_by(|a, b| a.rho.total_cmp(&b.rho))
        .copied();
    let min_margin = argmin.map_or(f64::INFINITY, |e| e.rho);
    let witness = argmin.map(|e| e.witness());
    let verdict = if min_margin < -tol {
        Verdict::Failed(witness.expect("negative margin has an entry"))
    } else if !(tangency_residual < tol) {
        Verdict::Failed(Witness {
            jprime: 1,
            j: p.n - 1,
            k: 1,
        })
    } else if min_margin <= tol {
        Verdict::Boundary
    } else {
        Verdict::Certified
    };
    Ok(DiscretenessCertificate {
        n: p.n,
        t: p.t,
        k_bound: k_bound(p.n),
        entries,
        tangency_residual,
        verdict,
        min_margin,
        witness,
    })
}

/// One row of a `ρ` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub t: f64,
    pub jprime: usize,
    pub j: usize,
    pub k: i64,
    pub rho: f64,
}

/// Every required `ρ_{j',j,k}` at one `t`, in certificate order.
pub fn sweep_at(n: usize, t: f64) -> Result<Vec<SweepRow>> {
    let p = params_from_t(n, t)?;
    let words = Words::new(&p)?;
    required_triples(n)
        .into_iter()
        .map(|w| {
            Ok(SweepRow {
                n,
                t,
                jprime: w.jprime,
                j: w.j,
                k: w.k,
                rho: rho_with(&words, w.jprime, w.j, w.k)?,
            })
        })
        .collect()
}

/// Rows ordered by `t`, then by `(j', j, k)`.
pub fn certify_sweep(n: usize, t_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty t grid".into()));
    }
    let mut rows = Vec::new();
    for &t in t_grid {
        rows.extend(sweep_at(n, t)?);
    }
    Ok(rows)
}

/// Brackets `[t_i, t_{i+1}]` where `ρ` for `w` changes sign in a sweep.
pub fn sign_changes(rows: &[SweepRow], w: Witness) -> Vec<(f64, f64)> {
    let series: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| (r.jprime, r.j, r.k) == (w.jprime, w.j, w.k))
        .map(|r| (r.t, r.rho))
        .collect();
    series
        .windows(2)
        .filter(|p| (p[0].1 < 0.0) != (p[1].1 < 0.0))
        .map(|p| (p[0].0, p[1].0))
        .collect()
}

/// Bisection for a zero of `t ↦ ρ_w(t)` in a sign-changing bracket.
pub fn rho_root(n: usize, w: Witness, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let f = |t: f64| params_from_t(n, t).and_then(|p| rho(&p, w.jprime, w.j, w.k));
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    if (fa < 0.0) == (f(b)? < 0.0) {
        return Err(Error::InvalidParameter(format!("no sign change of ρ{w} on [{lo}, {hi}]")));
    }
    let neg_low = fa < 0.0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        if (f(m)? < 0.0) == neg_low {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cproj::IsometryKind;
    use proptest::prelude::*;

    fn p(n: usize, t: f64) -> TriangleParams {
        params_from_t(n, t).unwrap()
    }

    fn proj_identity(m: &Mat3) -> f64 {
        linalg::mat_proj_distance(m, &Mat3::identity())
    }

    #[test]
    fn params_n3_t1() {
        let q = p(3, 1.0);
        assert!((q.y - 0.8).abs() < 1e-15 && (q.z - 0.4).abs() < 1e-15);
        assert!(((q.y - 4.0 / 3.0).powi(2) + q.z * q.z - 4.0 / 9.0).abs() < 1e-15);
        assert!((q.angle_from_yz() - PI / 2.0).abs() < 1e-14);
        assert!(params_from_t(3, 0.0).is_err());
        assert!(params_from_t(2, 1.0).is_err());
    }

    #[test]
    fn angular_round_trip() {
        let q = params_from_angular(5, 2.0).unwrap();
        assert!((q.angular - 2.0).abs() < 1e-14);
        assert!((q.angle_from_yz() - 2.0).abs() < 1e-12);
        // Approaching the R-Fuchsian end.
        assert!((p(4, 1e6).angle_from_yz() - PI).abs() < 1e-5);
    }

    #[test]
    fn generator_relations() {
        for n in 3..=8 {
            for t in [0.3, 1.0, 2.5] {
                let g = generators(&p(n, t)).unwrap();
                for i in [g.i1, g.i2, g.i3] {
                    assert!(proj_identity(&(i.matrix() * i.matrix())) < 1e-12);
                }
                for u in [g.a(), mul(&g.i3, &g.i1)] {
                    let d = u.det_normalized() - Mat3::identity();
                    assert!(linalg::max_abs(&(d * d * d)) < 1e-10);
                    assert!(linalg::max_abs(&(d * d)) > 1e-3);
                }
                let b = g.b();
                assert!(proj_identity(b.pow(n as i64).matrix()) < 1e-10);
                let mut ev = linalg::eigenvalues(&b.det_normalized()).to_vec();
                let theta = 2.0 * PI / n as f64;
                for target in [re(1.0), linalg::cis(theta), linalg::cis(-theta)] {
                    let i = (0..ev.len())
                        .min_by(|&a, &b| (ev[a] - target).norm().total_cmp(&(ev[b] - target).norm()))
                        .unwrap();
                    assert!((ev[i] - target).norm() < 1e-9, "n={n} t={t}");
                    ev.remove(i);
                }
            }
        }
    }

    #[test]
    fn closed_power_matches_direct() {
        let q = p(5, 0.9);
        let b = generators(&q).unwrap().b();
        assert!(linalg::max_abs(&(power_of_b(&q, 2).unwrap().matrix() - b.matrix() * b.matrix())) < 1e-12);
        assert!(proj_identity(power_of_b(&q, 0).unwrap().matrix()) < 1e-15);
        assert!(proj_identity(power_of_b(&q, 5).unwrap().matrix()) < 1e-12);
        for k in -7..=7 {
            let d = power_of_b(&q, k).unwrap().matrix() - b.pow(k).matrix();
            assert!(linalg::max_abs(&d) < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn radius_n3() {
        let q = p(3, 1.0);
        let s = word_sphere(&q, 1, 0).unwrap();
        assert!((s.sphere.radius - 2.0 / 5f64.sqrt()).abs() < 1e-14);
        assert!((radius_closed_form(&q, 1) - 2.0 / 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn n3_centers() {
        for t in [0.4, 1.0, 3.0] {
            let q = p(3, t);
            let fam = sphere_family(&q, 2).unwrap();
            let d = 9.0 * t * t + 1.0;
            for k in -2..=2 {
                let kf = k as f64;
                let c1 = HeisenbergPoint::new(
                    c(-2.0 * kf + (6.0 * t * t + 2.0) / d, 4.0 * t / d),
                    16.0 * t * kf / d,
                );
                let c2 = HeisenbergPoint::new(
                    c(-2.0 * kf + 12.0 * t * t / d, -4.0 * t / d),
                    16.0 * t / d - 16.0 * t * kf / d,
                );
                assert!(coord_distance(&fam.centers[&(1, k)], &c1) < 1e-12);
                assert!(coord_distance(&fam.centers[&(2, k)], &c2) < 1e-12);
            }
            let r = 2.0 * ((t * t + 1.0) / d).sqrt();
            assert!(fam.radii.iter().all(|x| (x - r).abs() < 1e-13));
        }
    }

    #[test]
    fn radii_symmetric_and_decreasing() {
        for n in 3..=8 {
            let mut prev: Option<Vec<f64>> = None;
            for t in [0.5, 1.0, 2.0] {
                let fam = sphere_family(&p(n, t), 0).unwrap();
                for j in 1..n {
                    assert!((fam.radii[j - 1] - fam.radii[n - j - 1]).abs() < 1e-12);
                    assert!((fam.radii[j - 1] - fam.closed_radii[j - 1]).abs() < 1e-12);
                }
                if let Some(pr) = prev {
                    assert!(fam.radii.iter().zip(&pr).all(|(a, b)| a < b));
                }
                prev = Some(fam.radii);
            }
        }
    }

    #[test]
    fn rho_n3_values() {
        let expect = (8.0 - 4.0 * 2f64.sqrt()) / 10f64.sqrt();
        assert!((rho(&p(3, 1.0), 2, 1, 1).unwrap() - expect).abs() < 1e-13);
        assert!(rho(&p(3, 1.0 / 3f64.sqrt()), 2, 1, 1).unwrap().abs() < 1e-13);
        let half = rho(&p(3, 0.5), 2, 1, 1).unwrap();
        let q = 3.25f64.sqrt();
        assert!((half - (4.0 / q - 4.0 * 1.25f64.sqrt() / q)).abs() < 1e-13);
        assert!(half < -0.26 && half > -0.27);
        assert!(rho(&p(3, 1.0), 0, 1, 1).is_err());
        assert!(rho(&p(3, 1.0), 1, 3, 1).is_err());
    }

    #[test]
    fn closed_forms_agree_with_matrices() {
        let cases = [(3, 2, 1), (4, 2, 2), (4, 3, 1), (5, 2, 3), (5, 3, 2), (5, 4, 1)];
        for (n, jp, j) in cases {
            for t in [0.2, 0.35, 0.7, 1.0, 1.9, 4.0] {
                let q = p(n, t);
                let a = rho(&q, jp, j, 1).unwrap();
                let b = rho_closed_form(&q, jp, j, 1).unwrap();
                assert!((a - b).abs() < 1e-10, "n={n} ({jp},{j},1) t={t}: {a} vs {b}");
            }
        }
        assert!(rho_closed_form(&p(6, 1.0), 1, 1, 1).is_none());
    }

    #[test]
    fn lemma_roots() {
        let w = |jprime, j| Witness { jprime, j, k: 1 };
        let cases = [
            (3, w(2, 1), 1.0 / 3f64.sqrt()),
            (4, w(3, 1), 2f64.sqrt() - 1.0),
            (5, w(2, 3), (1.0 - 2.0 / 5f64.sqrt()).sqrt()),
            (5, w(3, 2), (1.0 - 2.0 / 5f64.sqrt()).sqrt()),
            (5, w(4, 1), (1.0 - 2.0 / 5f64.sqrt()).sqrt()),
        ];
        for (n, wit, root) in cases {
            let grid: Vec<f64> = (1..=60).map(|i| 0.05 * i as f64).collect();
            let rows = certify_sweep(n, &grid).unwrap();
            let br = sign_changes(&rows, wit);
            assert_eq!(br.len(), 1, "n={n} {wit}");
            let r = rho_root(n, wit, br[0].0, br[0].1, 1e-12).unwrap();
            assert!((r - root).abs() < 1e-9, "n={n} {wit}: {r} vs {root}");
            assert!((root - threshold(n)).abs() < 1e-12);
        }
        // rho_{2,2,1} = 2 - 2 r_2 > 0 above the n = 4 threshold.
        for t in [0.42, 0.6, 1.0, 5.0] {
            assert!(rho(&p(4, t), 2, 2, 1).unwrap() > 0.0);
        }
    }

    #[test]
    fn k_bounds() {
        assert_eq!(k_bound(3), 2);
        assert_eq!(k_bound(4), 2);
        assert_eq!(k_bound(5), 3);
        assert_eq!(k_bound(6), 3);
        for n in 3..=20 {
            let k = k_bound(n) as f64;
            let b = 2.0 / (PI / n as f64).sin();
            assert!(k < b - 1e-12 && k + 1.0 >= b - 1e-9);
        }
    }

    #[test]
    fn tangency() {
        for n in 3..=6 {
            let q = p(n, 1.0);
            for k in 0..=2 {
                let r = tangency_check(&q, k).unwrap();
                assert!(r.max() < 1e-9, "n={n} k={k}: {r:?}");
                assert!(r.nullity < 1e-12);
            }
        }
    }

    #[test]
    fn wa_classification() {
        let q = p(3, 1.0);
        assert!((wa_trace_formula(&q) - 7.0).abs() < 1e-12);
        assert!((generators(&q).unwrap().w_a().trace() - re(7.0)).norm() < 1e-12);
        let cl = wa_type(&q, DEFAULT_TOL).unwrap();
        assert_eq!(cl.kind, IsometryKind::Loxodromic);
        assert!((cl.f_value - 512.0).abs() < 1e-8);
        for n in 3..=6 {
            let th = threshold(n);
            assert_eq!(wa_type(&p(n, th), DEFAULT_TOL).unwrap().kind, IsometryKind::Boundary);
            assert_eq!(
                wa_type(&p(n, th * 0.99), DEFAULT_TOL).unwrap().kind,
                IsometryKind::RegularElliptic
            );
            assert_eq!(wa_type(&p(n, th * 1.01), DEFAULT_TOL).unwrap().kind, IsometryKind::Loxodromic);
        }
        assert!(wb_type(&q, DEFAULT_TOL).is_ok());
    }

    #[test]
    fn certificates() {
        let c1 = certify(&p(3, 1.0), DEFAULT_TOL).unwrap();
        assert_eq!(c1.verdict, Verdict::Certified);
        assert_eq!(c1.k_bound, 2);
        assert_eq!(c1.entries.len(), 7);
        let r211 = c1.entries.iter().find(|e| (e.jprime, e.j, e.k) == (2, 1, 1)).unwrap();
        assert!((r211.rho - (8.0 - 4.0 * 2f64.sqrt()) / 10f64.sqrt()).abs() < 1e-12);
        // The binding pair at t = 1 is (1,1,1), tied with (2,2,1).
        let c10 = HeisenbergPoint::new(c(0.8, 0.4), 0.0);
        let c11 = HeisenbergPoint::new(c(-1.2, 0.4), 1.6);
        let r111 = cygan_distance_boundary(&c10, &c11) - 4.0 / 5f64.sqrt();
        assert!((r111 - (4.0f64.hypot(3.2).sqrt() - 4.0 / 5f64.sqrt())).abs() < 1e-15);
        assert!((c1.min_margin - r111).abs() < 1e-12);
        assert_eq!(c1.witness, Some(Witness { jprime: 1, j: 1, k: 1 }));

        let c2 = certify(&p(3, 0.5), DEFAULT_TOL).unwrap();
        assert_eq!(c2.verdict, Verdict::Failed(Witness { jprime: 2, j: 1, k: 1 }));

        for n in 3..=5 {
            let at = certify(&p(n, threshold(n)), DEFAULT_TOL).unwrap();
            assert_eq!(at.verdict, Verdict::Boundary, "n={n}");
        }
    }

    #[test]
    fn n6_margins() {
        // Positive throughout t > tan(π/6); negative just above tan(π/12).
        for t in [0.58, 0.7, 1.0, 3.0, 10.0] {
            assert_eq!(certify(&p(6, t), DEFAULT_TOL).unwrap().verdict, Verdict::Certified);
        }
        let t = threshold(6) + 0.01;
        let cert = certify(&p(6, t), DEFAULT_TOL).unwrap();
        assert!(matches!(cert.verdict, Verdict::Failed(w) if (w.jprime, w.j) == (1, 1) || (w.jprime, w.j) == (5, 5)));
        assert!(rho(&p(6, t), 1, 1, 1).unwrap() < 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn circle_invariant(n in 3usize..12, t in 0.01f64..50.0) {
            let q = p(n, t);
            prop_assert!(q.circle_residual().abs() < 1e-12 * (1.0 + q.y * q.y));
            prop_assert!((q.angle_from_yz() - q.angular).abs() < 1e-10);
        }

        #[test]
        fn b_has_order_n(n in 3usize..=8, t in 0.05f64..10.0) {
            let q = p(n, t);
            let b = generators(&q).unwrap().b();
            prop_assert!(proj_identity(b.pow(n as i64).matrix()) < 1e-10);
            let k = (t * 7.0) as i64 % (2 * n as i64) - n as i64;
            let d = power_of_b(&q, k).unwrap().matrix() - b.pow(k).matrix();
            prop_assert!(linalg::max_abs(&d) < 1e-10);
        }

        #[test]
        fn a_translates_centers(n in 3usize..7, t in 0.1f64..5.0) {
            let fam = sphere_family(&p(n, t), 3).unwrap();
            prop_assert!(fam.translation_residual < 1e-12);
        }

        #[test]
        fn tangency_equivariant(n in 3usize..7, t in 0.2f64..5.0) {
            let q = p(n, t);
            let r0 = tangency_check(&q, 0).unwrap();
            let r2 = tangency_check(&q, 2).unwrap();
            prop_assert!(r0.max() < 1e-9 && r2.max() < 1e-9);
        }

        #[test]
        fn wa_trace(n in 3usize..9, t in 0.05f64..10.0) {
            let q = p(n, t);
            let tr = generators(&q).unwrap().w_a().trace();
            prop_assert!((tr - re(wa_trace_formula(&q))).norm() < 1e-9 * tr.norm().max(1.0));
        }
    }
}
