//! Intersections of the standard family of isometric spheres.
//!
//! Fix the torus point `q0 = [-1-2i, sqrt2, 1]` and pull everything back to
//! the ball. The sphere `I(theta)` is the isometric sphere of the conjugated
//! real elliptic `E_{-theta,theta}`; all of them pass through the ball origin.
//!
//! `I(theta1) ∩ I(theta2)` is parameterised by `(psi1, psi2) ∈ (0, 2pi)^2`
//! and, with `X = cot(psi1/2)`, `Y = cot(psi2/2)`, is the disk `W(X,Y) <= 0`.
//! A third sphere cuts this disk along `Q(X,Y) = 0`, a crossing through the
//! origin with four boundary points on `W = 0`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use crate::cproj::{FormKind, ProjectivePoint};
use crate::heis::GeoCoord;
use crate::linalg::{c, cis, re, C64, Vec3};
use crate::poly;
use crate::{Error, Result};

/// Tolerance below which `c22''` is treated as exactly zero.
const LINE_TOL: f64 = 1e-13;

/// The boundary point `q^ball = [1+i, -(1-i), 2]` sent to `q_inf`.
pub fn q_ball() -> ProjectivePoint {
    ProjectivePoint::from_coords(c(1.0, 1.0), c(-1.0, 1.0), re(2.0), FormKind::Ball)
        .expect("nonzero")
}

fn check_pair(theta1: f64, theta2: f64) -> Result<()> {
    if !(0.0 < theta1 && theta1 < theta2 && theta2 < TAU) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < theta1 < theta2 < 2pi, got ({theta1}, {theta2})"
        )));
    }
    Ok(())
}

fn check_third(theta3: f64) -> Result<()> {
    if !(0.0..=TAU).contains(&theta3) {
        return Err(Error::InvalidParameter(format!("theta3 = {theta3} outside [0, 2pi]")));
    }
    Ok(())
}

/// `|(1-i) w1 e^{-i theta} - (1+i) w2 e^{i theta} - 2| - |(1-i) w1 - (1+i) w2 - 2|`.
///
/// Negative inside `I(theta)`, zero on it, positive outside.
pub fn standard_sphere_side(omega: &ProjectivePoint, theta: f64) -> Result<f64> {
    if omega.kind() != FormKind::Ball {
        return Err(Error::FormMismatch);
    }
    if omega.proj_eq(&q_ball(), 1e-12) {
        return Err(Error::DistinguishedPoint);
    }
    let l = omega.standard_lift().ok_or_else(|| {
        Error::Degenerate("point at infinity of the ball chart".into())
    })?;
    Ok(side_raw(l[0], l[1], theta))
}

fn side_raw(w1: C64, w2: C64, theta: f64) -> f64 {
    let a = c(1.0, -1.0) * w1;
    let b = c(1.0, 1.0) * w2;
    (a * cis(-theta) - b * cis(theta) - 2.0).norm() - (a - b - 2.0).norm()
}

/// Coordinates on the disk `I(theta1) ∩ I(theta2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskCoords {
    pub psi1: f64,
    pub psi2: f64,
    pub x: f64,
    pub y: f64,
}

impl DiskCoords {
    pub fn from_psi(psi1: f64, psi2: f64) -> Self {
        DiskCoords {
            psi1,
            psi2,
            x: 1.0 / (psi1 / 2.0).tan(),
            y: 1.0 / (psi2 / 2.0).tan(),
        }
    }

    pub fn from_xy(x: f64, y: f64) -> Self {
        DiskCoords {
            psi1: psi_of(x),
            psi2: psi_of(y),
            x,
            y,
        }
    }
}

/// Inverse of `X = cot(psi/2)` on `(0, 2pi)`.
pub fn psi_of(x: f64) -> f64 {
    2.0 * 1f64.atan2(x)
}

/// The ball point with parameters `(psi1, psi2)` on `I(theta1) ∩ I(theta2)`.
pub fn omega_from_psi(theta1: f64, theta2: f64, psi1: f64, psi2: f64) -> Result<ProjectivePoint> {
    check_pair(theta1, theta2)?;
    let (e1, e2) = (cis(psi1), cis(psi2));
    let n1 = e1 * (cis(theta2) - 1.0) + e2 * (1.0 - cis(theta1)) + cis(theta2) - cis(theta1);
    let n2 = e1 * (cis(-theta2) - 1.0) + e2 * (1.0 - cis(-theta1)) + cis(-theta2) - cis(-theta1);
    let i2 = c(0.0, 2.0);
    let d = -i2 * theta1.sin() * e2 + i2 * theta2.sin() * e1 + i2 * (theta2 - theta1).sin();
    if d.norm() < 1e-300 {
        return Err(Error::Degenerate("denominator vanishes".into()));
    }
    ProjectivePoint::new(
        Vec3::new(c(1.0, 1.0) * n1 / d, c(1.0, -1.0) * n2 / d, re(1.0)),
        FormKind::Ball,
    )
}

/// Coefficients of
/// `W(X,Y) = c22 X^2 Y^2 + c20 X^2 + c02 Y^2 + 2 c11 X Y + c00`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WCoeffs {
    pub c22: f64,
    pub c20: f64,
    pub c02: f64,
    pub c11: f64,
    pub c00: f64,
    pub theta1: f64,
    pub theta2: f64,
}

pub fn w_coefficients(theta1: f64, theta2: f64) -> Result<WCoeffs> {
    check_pair(theta1, theta2)?;
    let (t1, t2) = (theta1, theta2);
    let s = |x: f64| x.sin();
    let sq = |x: f64| x.sin().powi(2);
    let c22 = 2.0
        * sq((t1 - t2) / 2.0)
        * (6.0 - (t1 - t2).cos() - (t1 + t2).cos() - 2.0 * t1.cos() - 2.0 * t2.cos());
    let c20 = 2.0
        * sq(t2 / 2.0)
        * (6.0 - 2.0 * (t1 - t2).cos() - (2.0 * t1 - t2).cos() - 2.0 * t1.cos() - t2.cos());
    let c02 = 2.0
        * sq(t1 / 2.0)
        * (6.0 - 2.0 * (t1 - t2).cos() - (t1 - 2.0 * t2).cos() - t1.cos() - 2.0 * t2.cos());
    let c11 = -16.0 * sq(t1 / 2.0) * sq(t2 / 2.0);
    let c00 = -16.0 * sq(t1 / 2.0) * sq(t2 / 2.0) * s((t1 - t2) / 2.0).powi(2);
    Ok(WCoeffs {
        c22,
        c20,
        c02,
        c11,
        c00,
        theta1,
        theta2,
    })
}

impl WCoeffs {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c22 * x * x * y * y + self.c20 * x * x + self.c02 * y * y + 2.0 * self.c11 * x * y
            + self.c00
    }

    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        [
            2.0 * self.c22 * x * y * y + 2.0 * self.c20 * x + 2.0 * self.c11 * y,
            2.0 * self.c22 * x * x * y + 2.0 * self.c02 * y + 2.0 * self.c11 * x,
        ]
    }

    /// The unique `s > 0` with `W(sqrt s, k sqrt s) = 0`.
    fn boundary_sq_along(&self, k: f64) -> f64 {
        let a = self.c22 * k * k;
        let b = self.c20 + 2.0 * self.c11 * k + self.c02 * k * k;
        let c0 = self.c00;
        // a s^2 + b s + c0 = 0 with a >= 0, b > 0, c0 < 0.
        2.0 * (-c0) / (b + (b * b - 4.0 * a * c0).sqrt())
    }
}

/// `W(X, Y)`.
pub fn w_eval(wc: &WCoeffs, x: f64, y: f64) -> f64 {
    wc.eval(x, y)
}

/// Coefficients of `Q(X,Y) = c22'' X^2 Y^2 + c20'' X^2 + c02'' Y^2 + 2 c11'' X Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QCoeffs {
    pub c22q: f64,
    pub c20q: f64,
    pub c02q: f64,
    pub c11q: f64,
    /// `(a, b, c) = -(c20'', c11'', c02'') / c22''` when `c22''` is not negligible.
    pub reduced: Option<(f64, f64, f64)>,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

pub fn q_coefficients(theta1: f64, theta2: f64, theta3: f64) -> Result<QCoeffs> {
    check_pair(theta1, theta2)?;
    check_third(theta3)?;
    Ok(q_coefficients_raw(theta1, theta2, theta3, 1e-12))
}

fn q_coefficients_raw(t1: f64, t2: f64, t3: f64, tol: f64) -> QCoeffs {
    let s = |x: f64| x.sin();
    let c22q = s((t1 - t2) / 2.0).powi(2) * s((t3 - t1 - t2) / 2.0);
    let c20q = s(t2 / 2.0).powi(2) * s((t1 - t2 + t3) / 2.0);
    let c02q = s(t1 / 2.0).powi(2) * s((t2 - t1 + t3) / 2.0);
    let c11q = -s(t1 / 2.0) * s(t2 / 2.0) * s(t3 / 2.0);
    let reduced = (c22q.abs() > tol).then(|| (-c20q / c22q, -c11q / c22q, -c02q / c22q));
    QCoeffs {
        c22q,
        c20q,
        c02q,
        c11q,
        reduced,
        theta1: t1,
        theta2: t2,
        theta3: t3,
    }
}

impl QCoeffs {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c22q * x * x * y * y + self.c20q * x * x + self.c02q * y * y + 2.0 * self.c11q * x * y
    }

    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        [
            2.0 * self.c22q * x * y * y + 2.0 * self.c20q * x + 2.0 * self.c11q * y,
            2.0 * self.c22q * x * x * y + 2.0 * self.c02q * y + 2.0 * self.c11q * x,
        ]
    }

    fn scale(&self) -> f64 {
        self.c22q
            .abs()
            .max(self.c20q.abs())
            .max(self.c02q.abs())
            .max(self.c11q.abs())
    }

    /// `q(k) = c20'' + 2 c11'' k + c02'' k^2`.
    fn slope_poly(&self) -> [f64; 3] {
        [self.c20q, 2.0 * self.c11q, self.c02q]
    }
}

/// `sin(theta3/2) sin((theta1-theta3)/2) sin((theta2-theta3)/2)`.
pub fn q_hat_factor(theta1: f64, theta2: f64, theta3: f64) -> f64 {
    (theta3 / 2.0).sin() * ((theta1 - theta3) / 2.0).sin() * ((theta2 - theta3) / 2.0).sin()
}

/// `Q^(X, Y) = 64 sin(theta3/2) sin((theta1-theta3)/2) sin((theta2-theta3)/2) Q(X, Y)`.
///
/// Its sign decides `I(theta3)` membership: `Q^ <= 0` on the closed inside.
pub fn q_hat(theta1: f64, theta2: f64, theta3: f64, x: f64, y: f64) -> Result<f64> {
    let q = q_coefficients(theta1, theta2, theta3)?;
    Ok(64.0 * q_hat_factor(theta1, theta2, theta3) * q.eval(x, y))
}

/// `Q(X, Y)`.
pub fn q_eval(qc: &QCoeffs, x: f64, y: f64) -> f64 {
    qc.eval(x, y)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `c22''^2 * heart(k)`, a quartic that stays finite when `c22'' = 0`.
/// Coefficients in ascending order.
fn scaled_heart(w: &WCoeffs, q: &QCoeffs) -> [f64; 5] {
    let qk = q.slope_poly();
    let wk = [w.c20, 2.0 * w.c11, w.c02];
    let qq = poly_mul(&qk, &qk);
    let wq = poly_mul(&wk, &qk);
    let mut out = [0.0; 5];
    for i in 0..5 {
        out[i] = w.c22 * qq[i] - q.c22q * wq[i];
    }
    out[2] += w.c00 * q.c22q * q.c22q;
    out
}

/// The quartic
/// `c22/c22''^2 q(k)^2 - w(k) q(k)/c22'' + c00 k^2`, equal to `k^2 W(X, kX)`
/// along `Q = 0`. Here `q(k) = c20'' + 2c11'' k + c02'' k^2` and
/// `w(k) = c20 + 2c11 k + c02 k^2`.
pub fn heartsuit(theta1: f64, theta2: f64, theta3: f64, k: f64) -> Result<f64> {
    let w = w_coefficients(theta1, theta2)?;
    let q = q_coefficients(theta1, theta2, theta3)?;
    let qk = q.c20q + 2.0 * q.c11q * k + q.c02q * k * k;
    let wk = w.c20 + 2.0 * w.c11 * k + w.c02 * k * k;
    Ok(w.c22 / (q.c22q * q.c22q) * qk * qk - wk * qk / q.c22q + w.c00 * k * k)
}

/// A sampled branch of `{Q = 0} ∩ {W <= 0}` from the origin to `W = 0`.
///
/// Labels follow the curves `gamma_{eps,tau,sigma}`: `eps = sgn X`,
/// `sigma = sgn XY`, `tau` picks the root
/// `x^_±(l) = l/(2a) ((l - 2b) ± sigma sqrt((l - 2b)^2 - 4ac))` with `X^2 = x^_tau(XY)`. A label is 0 where it does
/// not apply (axis branches, straight-line loci, `a = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub eps: i8,
    pub tau: i8,
    pub sigma: i8,
    /// `(X, Y)` samples, first the origin, last the boundary point.
    pub points: Vec<[f64; 2]>,
}

/// The crossing `I(theta1) ∩ I(theta2) ∩ I(theta3)` in disk coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub w: WCoeffs,
    pub q: QCoeffs,
    pub boundary_points: Vec<[f64; 2]>,
    pub arcs: Vec<Arc>,
}

impl Crossing {
    /// Largest `max(|W|, |Q|)` over the boundary points.
    pub fn boundary_residual(&self) -> f64 {
        self.boundary_points
            .iter()
            .map(|p| self.w.eval(p[0], p[1]).abs().max(self.q.eval(p[0], p[1]).abs()))
            .fold(0.0, f64::max)
    }
}

/// The four-armed crossing for a third sphere `theta3 ∉ {theta1, theta2}`.
pub fn crossing_points(theta1: f64, theta2: f64, theta3: f64) -> Result<Crossing> {
    check_pair(theta1, theta2)?;
    check_third(theta3)?;
    if (theta3 - theta1).abs() < 1e-12 || (theta3 - theta2).abs() < 1e-12 {
        return Err(Error::InvalidParameter(
            "theta3 coincides with theta1 or theta2".into(),
        ));
    }
    crossing_unchecked(theta1, theta2, theta3)
}

/// As [`crossing_points`] but also accepts the limiting leaves
/// `theta3 ∈ {theta1, theta2}`.
pub fn crossing_unchecked(theta1: f64, theta2: f64, theta3: f64) -> Result<Crossing> {
    check_pair(theta1, theta2)?;
    check_third(theta3)?;
    let w = w_coefficients(theta1, theta2)?;
    let q = q_coefficients_raw(theta1, theta2, theta3, 1e-12);
    let pts = boundary_points(&w, &q);
    if pts.len() != 4 {
        return Err(Error::Degenerate(format!(
            "found {} boundary points for ({theta1}, {theta2}, {theta3})",
            pts.len()
        )));
    }
    let arcs = pts.iter().map(|p| trace_arc(&w, &q, *p)).collect();
    Ok(Crossing {
        theta1,
        theta2,
        theta3,
        w,
        q,
        boundary_points: pts,
        arcs,
    })
}

/// Candidate slopes `Y = kX` of the points of `{Q = 0} ∩ {W = 0}`; `None`
/// stands for the line `X = 0`.
fn candidate_slopes(w: &WCoeffs, q: &QCoeffs) -> Vec<Option<f64>> {
    let scale = q.scale();
    let mut out = Vec::new();
    if q.c22q.abs() <= LINE_TOL * scale {
        // Q is a quadratic form: two lines through the origin.
        let [a0, a1, a2] = q.slope_poly();
        if a2.abs() <= LINE_TOL * scale {
            out.push(None);
        }
        out.extend(poly::real_quadratic_roots(a2, a1, a0).into_iter().map(Some));
        return out;
    }
    let p = scaled_heart(w, q);
    // Deflate the root k = 1.
    let mut d = [0.0; 4];
    d[3] = p[4];
    for i in (0..3).rev() {
        d[i] = p[i + 1] + d[i + 1];
    }
    let pscale = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if d[3].abs() <= 1e-12 * pscale {
        out.push(None);
    }
    if p[0].abs() <= 1e-14 * pscale {
        out.push(Some(0.0));
    }
    out.extend(
        poly::real_cubic_roots(d[3], d[2], d[1], d[0], 1e-5)
            .into_iter()
            .map(Some),
    );
    out
}

fn newton_polish(w: &WCoeffs, q: &QCoeffs, mut p: [f64; 2]) -> [f64; 2] {
    for _ in 0..8 {
        let f = [w.eval(p[0], p[1]), q.eval(p[0], p[1])];
        let gw = w.grad(p[0], p[1]);
        let gq = q.grad(p[0], p[1]);
        let det = gw[0] * gq[1] - gw[1] * gq[0];
        if det.abs() < 1e-300 {
            break;
        }
        let dx = (f[0] * gq[1] - f[1] * gw[1]) / det;
        let dy = (gw[0] * f[1] - gq[0] * f[0]) / det;
        let next = [p[0] - dx, p[1] - dy];
        let fn_ = w.eval(next[0], next[1]).abs() + q.eval(next[0], next[1]).abs();
        if fn_ <= f[0].abs() + f[1].abs() {
            p = next;
        } else {
            break;
        }
        if dx.abs() + dy.abs() < 1e-16 * (1.0 + p[0].abs() + p[1].abs()) {
            break;
        }
    }
    p
}

/// The four points of `{Q = 0} ∩ {W = 0}`.
fn boundary_points(w: &WCoeffs, q: &QCoeffs) -> Vec<[f64; 2]> {
    let qs = q.scale();
    let mut found: Vec<[f64; 2]> = Vec::new();
    for slope in candidate_slopes(w, q) {
        let base = match slope {
            None => [0.0, (-w.c00 / w.c02).sqrt()],
            Some(k) => {
                let s = w.boundary_sq_along(k).sqrt();
                [s, k * s]
            }
        };
        for sign in [1.0, -1.0] {
            let p0 = [sign * base[0], sign * base[1]];
            let r2 = 1.0 + p0[0] * p0[0] + p0[1] * p0[1];
            if q.eval(p0[0], p0[1]).abs() > 1e-4 * qs * r2 * r2 {
                continue;
            }
            let p = newton_polish(w, q, p0);
            let ok_w = w.eval(p[0], p[1]).abs() <= 1e-10 * w.c22.max(1.0) * r2 * r2;
            let ok_q = q.eval(p[0], p[1]).abs() <= 1e-10 * qs.max(1e-300) * r2 * r2;
            if !(ok_w && ok_q) {
                continue;
            }
            let dup = found
                .iter()
                .any(|f| (f[0] - p[0]).hypot(f[1] - p[1]) <= 1e-7 * r2.sqrt());
            if !dup {
                found.push(p);
            }
        }
    }
    found.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    found
}

fn sgn(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn arc_labels(q: &QCoeffs, p: [f64; 2], on_axis: bool) -> (i8, i8, i8) {
    let eps = sgn(p[0]);
    if on_axis {
        return (eps, 0, 0);
    }
    let lambda = p[0] * p[1];
    let sigma = sgn(lambda);
    let tau = match q.reduced {
        Some((a, b, cc)) if a.abs() > 1e-9 => {
            let disc = f64::from(sigma) * ((lambda - 2.0 * b).powi(2) - 4.0 * a * cc).max(0.0).sqrt();
            let xp = lambda / (2.0 * a) * ((lambda - 2.0 * b) + disc);
            let xm = lambda / (2.0 * a) * ((lambda - 2.0 * b) - disc);
            let x2 = p[0] * p[0];
            if (xp - x2).abs() <= (xm - x2).abs() {
                1
            } else {
                -1
            }
        }
        _ => 0,
    };
    (eps, tau, sigma)
}

fn straight_arc(p: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            [t * p[0], t * p[1]]
        })
        .collect()
}

/// `qphi(phi) = c20'' cos^2 + c02'' sin^2 + 2 c11'' cos sin`.
fn qphi(q: &QCoeffs, phi: f64) -> f64 {
    let (s, c0) = phi.sin_cos();
    q.c20q * c0 * c0 + q.c02q * s * s + 2.0 * q.c11q * c0 * s
}

/// Radius of the `Q = 0` curve along the ray at angle `phi`.
fn polar_radius(q: &QCoeffs, phi: f64) -> Option<f64> {
    let (s, c0) = phi.sin_cos();
    let den = q.c22q * c0 * c0 * s * s;
    let g = -qphi(q, phi) / den;
    (g.is_finite() && g >= 0.0).then(|| g.sqrt())
}

fn trace_arc(w: &WCoeffs, q: &QCoeffs, p: [f64; 2]) -> Arc {
    let norm = p[0].hypot(p[1]);
    let on_axis = p[0].abs() <= 1e-12 * norm || p[1].abs() <= 1e-12 * norm;
    let (eps, tau, sigma) = arc_labels(q, p, on_axis);
    let lines = q.c22q.abs() <= LINE_TOL * q.scale();
    if on_axis || lines {
        return Arc {
            eps,
            tau,
            sigma,
            points: straight_arc(p, 64),
        };
    }
    let phi_p = p[1].atan2(p[0]);
    // Zeros of qphi (where the curve meets the origin) and poles (axes).
    let [a0, a1, a2] = q.slope_poly();
    let mut zeros: Vec<f64> = poly::real_quadratic_roots(a2, a1, a0)
        .into_iter()
        .map(f64::atan)
        .collect();
    if a2.abs() <= LINE_TOL * q.scale() {
        zeros.push(PI / 2.0);
    }
    let mut crit: Vec<(f64, bool)> = Vec::new();
    for m in -3..=3 {
        for z in &zeros {
            crit.push((z + m as f64 * PI, true));
        }
        for j in 0..2 {
            crit.push((m as f64 * PI + j as f64 * PI / 2.0, false));
        }
    }
    // A zero sitting on an axis is a pole of the polar graph.
    let is_pole = |x: f64| {
        let r = (x / (PI / 2.0)).round();
        (x - r * PI / 2.0).abs() < 1e-12
    };
    let crit: Vec<(f64, bool)> = crit
        .into_iter()
        .map(|(x, z)| (x, z && !is_pole(x)))
        .collect();
    let lo = crit
        .iter()
        .filter(|(x, _)| *x < phi_p - 1e-15)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .copied();
    let hi = crit
        .iter()
        .filter(|(x, _)| *x > phi_p + 1e-15)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .copied();
    let mut best: Option<(f64, Vec<[f64; 2]>)> = None;
    for end in [lo, hi].into_iter().flatten() {
        if !end.1 {
            continue;
        }
        let pts = sample_polar(q, end.0, phi_p, p, norm);
        let worst = pts.iter().map(|x| w.eval(x[0], x[1])).fold(f64::MIN, f64::max);
        if best.as_ref().is_none_or(|(bw, _)| worst < *bw) {
            best = Some((worst, pts));
        }
    }
    let points = best.map(|b| b.1).unwrap_or_else(|| straight_arc(p, 64));
    Arc {
        eps,
        tau,
        sigma,
        points,
    }
}

/// Sample the polar graph `r(phi)` from the origin (`phi0`) to the boundary
/// point at `phi1`, refining until consecutive samples are close.
fn sample_polar(q: &QCoeffs, phi0: f64, phi1: f64, end: [f64; 2], norm: f64) -> Vec<[f64; 2]> {
    let point = |phi: f64| -> [f64; 2] {
        let r = polar_radius(q, phi).unwrap_or(0.0);
        [r * phi.cos(), r * phi.sin()]
    };
    let h = norm / 64.0;
    let n = 64;
    let mut params: Vec<f64> = (0..=n).map(|i| phi0 + (phi1 - phi0) * i as f64 / n as f64).collect();
    for _ in 0..40 {
        let mut refined = Vec::with_capacity(params.len() * 2);
        let mut changed = false;
        for win in params.windows(2) {
            refined.push(win[0]);
            let (a, b) = (point(win[0]), point(win[1]));
            if (a[0] - b[0]).hypot(a[1] - b[1]) > h && (win[1] - win[0]).abs() > 1e-15 {
                refined.push(0.5 * (win[0] + win[1]));
                changed = true;
            }
        }
        refined.push(*params.last().expect("nonempty"));
        params = refined;
        if !changed {
            break;
        }
    }
    let mut pts: Vec<[f64; 2]> = params.iter().map(|&x| point(x)).collect();
    pts[0] = [0.0, 0.0];
    *pts.last_mut().expect("nonempty") = end;
    pts
}

/// `{0, 2pi, theta2-theta1, 2pi-(theta2-theta1), theta1+theta2,
/// theta1+theta2-2pi} ∩ [0, 2pi]`, sorted and deduplicated.
pub fn singular_angles(theta1: f64, theta2: f64) -> Vec<f64> {
    let d = theta2 - theta1;
    let s = theta1 + theta2;
    let mut v: Vec<f64> = [0.0, TAU, d, TAU - d, s, s - TAU]
        .into_iter()
        .filter(|x| (-1e-12..=TAU + 1e-12).contains(x))
        .map(|x| x.clamp(0.0, TAU))
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v
}

/// One leaf `{Q_{theta3} = 0} ∩ {W <= 0}` of the foliation of the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub theta3: f64,
    /// One of the limiting leaves `theta3 ∈ {0, theta1, theta2}`.
    pub singular: bool,
    pub crossing: Crossing,
}

/// Leaves for `theta3 = 2 pi k / grid`, together with the three singular
/// leaves, ordered by `theta3`.
pub fn foliation_leaves(theta1: f64, theta2: f64, grid: usize) -> Result<Vec<Leaf>> {
    check_pair(theta1, theta2)?;
    if grid < 2 {
        return Err(Error::InvalidParameter("grid must be at least 2".into()));
    }
    let mut angles: Vec<f64> = (0..grid).map(|k| TAU * k as f64 / grid as f64).collect();
    angles.extend([0.0, theta1, theta2]);
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let singular = [0.0, theta1, theta2];
    angles
        .into_iter()
        .map(|t3| {
            let s = singular.iter().any(|x| (x - t3).abs() < 1e-12);
            let t3 = singular
                .iter()
                .copied()
                .find(|x| (x - t3).abs() < 1e-12)
                .unwrap_or(t3);
            Ok(Leaf {
                theta3: t3,
                singular: s,
                crossing: crossing_unchecked(theta1, theta2, t3)?,
            })
        })
        .collect()
}

/// Result of the pairwise leaf disjointness check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisjointnessReport {
    /// Crossings between segments of different leaves.
    pub leaf_crossings: usize,
    /// Crossings between different arcs of the same leaf.
    pub arc_crossings: usize,
    /// Smallest distance between segments of different leaves seen in the
    /// spatial hash.
    pub min_leaf_distance: f64,
    pub segments: usize,
}

impl DisjointnessReport {
    pub fn disjoint(&self) -> bool {
        self.leaf_crossings == 0 && self.arc_crossings == 0
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c0: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c0[1] - a[1]) - (b[1] - a[1]) * (c0[0] - a[0])
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c0: [f64; 2], d: [f64; 2]) -> bool {
    let o1 = orient(a, b, c0);
    let o2 = orient(a, b, d);
    let o3 = orient(c0, d, a);
    let o4 = orient(c0, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * ab[0]).hypot(p[1] - a[1] - t * ab[1])
}

fn segment_distance(a: [f64; 2], b: [f64; 2], c0: [f64; 2], d: [f64; 2]) -> f64 {
    if segments_cross(a, b, c0, d) {
        return 0.0;
    }
    point_segment_distance(a, c0, d)
        .min(point_segment_distance(b, c0, d))
        .min(point_segment_distance(c0, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Check that distinct leaves meet only near the origin, using a spatial hash
/// over polyline segments. Segments with an endpoint within `origin_radius`
/// of the origin are ignored.
pub fn leaf_disjointness(leaves: &[Leaf], origin_radius: f64) -> DisjointnessReport {
    struct Seg {
        leaf: usize,
        arc: usize,
        a: [f64; 2],
        b: [f64; 2],
    }
    let mut segs = Vec::new();
    for (li, leaf) in leaves.iter().enumerate() {
        for (ai, arc) in leaf.crossing.arcs.iter().enumerate() {
            for win in arc.points.windows(2) {
                let (a, b) = (win[0], win[1]);
                if a[0].hypot(a[1]) < origin_radius || b[0].hypot(b[1]) < origin_radius {
                    continue;
                }
                segs.push(Seg { leaf: li, arc: ai, a, b });
            }
        }
    }
    let extent = segs
        .iter()
        .flat_map(|s| [s.a[0].abs(), s.a[1].abs(), s.b[0].abs(), s.b[1].abs()])
        .fold(1e-9, f64::max);
    let cell = extent / 256.0;
    let key = |x: f64| (x / cell).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, s) in segs.iter().enumerate() {
        let (x0, x1) = (key(s.a[0].min(s.b[0])), key(s.a[0].max(s.b[0])));
        let (y0, y1) = (key(s.a[1].min(s.b[1])), key(s.a[1].max(s.b[1])));
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                grid.entry((gx, gy)).or_default().push(i);
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut report = DisjointnessReport {
        leaf_crossings: 0,
        arc_crossings: 0,
        min_leaf_distance: f64::INFINITY,
        segments: segs.len(),
    };
    for bucket in grid.values() {
        for (ii, &i) in bucket.iter().enumerate() {
            for &j in &bucket[ii + 1..] {
                let (si, sj) = (&segs[i], &segs[j]);
                if si.leaf == sj.leaf && si.arc == sj.arc {
                    continue;
                }
                let pair = (i.min(j), i.max(j));
                if !seen.insert(pair) {
                    continue;
                }
                let crossing = segments_cross(si.a, si.b, sj.a, sj.b);
                if si.leaf != sj.leaf {
                    report.min_leaf_distance = report
                        .min_leaf_distance
                        .min(segment_distance(si.a, si.b, sj.a, sj.b));
                    if crossing {
                        report.leaf_crossings += 1;
                    }
                } else if crossing {
                    report.arc_crossings += 1;
                }
            }
        }
    }
    report
}

/// Common point of two crossings on the same disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadruplePoint {
    /// `(X, Y)` of the common point found farthest from the origin (the origin
    /// itself when it is the only one).
    pub point: [f64; 2],
    /// Largest distance from the origin among common points with `W <= 0`.
    pub residual: f64,
    pub ball_point: ProjectivePoint,
}

/// Intersect `I(a) ∩ I(b) ∩ I(c) ∩ I(d)` for four distinct angles, working on
/// the disk of the two smallest.
pub fn quadruple_point(angles: [f64; 4]) -> Result<QuadruplePoint> {
    let mut t = angles;
    t.sort_by(f64::total_cmp);
    for i in 0..3 {
        if (t[i + 1] - t[i]).abs() < 1e-12 {
            return Err(Error::InvalidParameter("angles must be distinct".into()));
        }
    }
    if t[0] <= 0.0 || t[3] >= TAU {
        return Err(Error::InvalidParameter("angles must lie in (0, 2pi)".into()));
    }
    let w = w_coefficients(t[0], t[1])?;
    let q3 = q_coefficients_raw(t[0], t[1], t[2], 1e-12);
    let q4 = q_coefficients_raw(t[0], t[1], t[3], 1e-12);
    // Eliminate the quartic term: l = c22''(4) Q3 - c22''(3) Q4 is a quadratic form.
    let l20 = q4.c22q * q3.c20q - q3.c22q * q4.c20q;
    let l02 = q4.c22q * q3.c02q - q3.c22q * q4.c02q;
    let l11 = q4.c22q * q3.c11q - q3.c22q * q4.c11q;
    let lscale = l20.abs().max(l02.abs()).max(l11.abs());
    if lscale <= 1e-14 {
        return Err(Error::Degenerate("the two crossings coincide".into()));
    }
    let mut slopes: Vec<Option<f64>> = Vec::new();
    if l02.abs() <= 1e-12 * lscale {
        slopes.push(None);
    }
    slopes.extend(
        poly::real_quadratic_roots(l02, 2.0 * l11, l20)
            .into_iter()
            .map(Some),
    );
    let mut common: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for s in slopes {
        // Q restricted to the line: A X^4 + B X^2 (or A Y^4 + B Y^2 on X = 0).
        let restricted = |qc: &QCoeffs| -> (f64, f64) {
            match s {
                Some(k) => (qc.c22q * k * k, qc.c20q + 2.0 * qc.c11q * k + qc.c02q * k * k),
                None => (0.0, qc.c02q),
            }
        };
        let (a3, b3) = restricted(&q3);
        let (a4, b4) = restricted(&q4);
        let (a, b) = if a3.abs() >= a4.abs() { (a3, b3) } else { (a4, b4) };
        if a.abs() <= 1e-14 {
            continue;
        }
        let x2 = -b / a;
        if x2 <= 0.0 {
            continue;
        }
        let x = x2.sqrt();
        for sign in [1.0, -1.0] {
            let p = match s {
                Some(k) => [sign * x, sign * k * x],
                None => [0.0, sign * x],
            };
            let r2 = 1.0 + p[0] * p[0] + p[1] * p[1];
            let on_both = q3.eval(p[0], p[1]).abs() <= 1e-9 * r2 * r2
                && q4.eval(p[0], p[1]).abs() <= 1e-9 * r2 * r2;
            if on_both && w.eval(p[0], p[1]) <= 0.0 {
                common.push(p);
            }
        }
    }
    let point = common
        .iter()
        .copied()
        .max_by(|a, b| a[0].hypot(a[1]).total_cmp(&b[0].hypot(b[1])))
        .expect("origin is always present");
    let residual = point[0].hypot(point[1]);
    let dc = DiskCoords::from_xy(point[0], point[1]);
    let ball_point = omega_from_psi(t[0], t[1], dc.psi1, dc.psi2)?;
    Ok(QuadruplePoint {
        point,
        residual,
        ball_point,
    })
}

/// The `kappa`-free form of "the geographic point `(alpha, beta, omega)` of
/// `I(theta1)` lies in the closed inside of `I(theta2)`": the value is `<= 0`
/// exactly in that case. The radius field of `gc` is not used.
///
/// With `s_i = sin(theta_i/2)` and `dx = cot(theta1/2) - cot(theta2/2)`:
/// `4w^2/s1^2 - 4/(dx s1) (cos(a/2+b)/s1^2 + dx^2 cos(-a/2+b)) w + dx^2
///  + 2cos(a)/s1^2 + (1/s1^4 - 1/s2^4)/dx^2`.
pub fn geo_pair_inequality(theta1: f64, theta2: f64, gc: &GeoCoord) -> Result<f64> {
    if !(0.0 < theta1 && theta1 < TAU && 0.0 < theta2 && theta2 < TAU) {
        return Err(Error::InvalidParameter("angles must lie in (0, 2pi)".into()));
    }
    let cot = |x: f64| 1.0 / x.tan();
    let dx = cot(theta1 / 2.0) - cot(theta2 / 2.0);
    if dx.abs() <= 1e-12 {
        return Err(Error::Degenerate("cot(theta1/2) = cot(theta2/2)".into()));
    }
    let s1 = (theta1 / 2.0).sin();
    let s2 = (theta2 / 2.0).sin();
    let (a, b, w) = (gc.alpha, gc.beta, gc.omega);
    let s1sq = s1 * s1;
    Ok(4.0 * w * w / s1sq
        - 4.0 / (dx * s1) * ((a / 2.0 + b).cos() / s1sq + dx * dx * (-a / 2.0 + b).cos()) * w
        + dx * dx
        + 2.0 * a.cos() / s1sq
        + (1.0 / s1sq.powi(2) - 1.0 / s2.powi(4)) / (dx * dx))
}
