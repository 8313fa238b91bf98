//! Low-degree polynomial roots with Newton polishing.

use crate::linalg::C64;

/// Roots of the monic cubic `x^3 + a2 x^2 + a1 x + a0`.
pub fn cubic_roots_monic(a2: C64, a1: C64, a0: C64) -> [C64; 3] {
    let shift = a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let w1 = -q / 2.0 + s;
    let w2 = -q / 2.0 - s;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let omega = C64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [C64::new(0.0, 0.0); 3];
    if w.norm() == 0.0 {
        roots = [-shift; 3];
    } else {
        let u = w.powf(1.0 / 3.0);
        let mut uk = u;
        for r in roots.iter_mut() {
            let v = -p / (3.0 * uk);
            *r = uk + v - shift;
            uk *= omega;
        }
    }
    for r in roots.iter_mut() {
        *r = polish(*r, |x| {
            let f = ((x + a2) * x + a1) * x + a0;
            let df = (3.0 * x + 2.0 * a2) * x + a1;
            (f, df)
        });
    }
    roots
}

fn polish(mut x: C64, f: impl Fn(C64) -> (C64, C64)) -> C64 {
    for _ in 0..4 {
        let (v, d) = f(x);
        if d.norm() == 0.0 || !d.norm().is_finite() {
            break;
        }
        let step = v / d;
        let next = x - step;
        if f(next).0.norm() < v.norm() {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// Real roots of `a x^2 + b x + c` (degenerating to linear when `a` vanishes).
pub fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut out = vec![q / a];
    if q != 0.0 {
        out.push(c / q);
    } else {
        out.push(0.0);
    }
    out
}

/// Real roots of `a x^3 + b x^2 + c x + d`.
///
/// Roots whose imaginary part is within `imag_tol` (relative) of zero are
/// accepted as real; this keeps near-double roots from being dropped.
pub fn real_cubic_roots(a: f64, b: f64, c: f64, d: f64, imag_tol: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-13 * scale {
        return real_quadratic_roots(b, c, d);
    }
    let roots = cubic_roots_monic(
        C64::new(b / a, 0.0),
        C64::new(c / a, 0.0),
        C64::new(d / a, 0.0),
    );
    let mut out: Vec<f64> = roots
        .iter()
        .filter(|r| r.im.abs() <= imag_tol * (1.0 + r.re.abs()))
        .map(|r| {
            polish(C64::new(r.re, 0.0), |x| {
                let f = ((x * a + b) * x + c) * x + d;
                let df = (x * 3.0 * a + 2.0 * b) * x + c;
                (f, df)
            })
            .re
        })
        .collect();
    out.sort_by(|x, y| x.total_cmp(y));
    out
}
