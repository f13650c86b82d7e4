//! `₂F₁(1, b; b + 1; z)` for `b > 0`, `z ≤ 0`.
//!
//! This is the only family the closed-form Laplace transforms need. With
//! `x = -z` it equals `b ∫₀¹ t^(b-1) / (1 + x t) dt`, which is what the large
//! argument branch and the quadrature fallback work from.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

const SERIES_EPS: f64 = 1e-15;
const MAX_TERMS: usize = 100_000;
/// Below this the plain Gauss series is used.
const DIRECT_LIMIT: f64 = 0.5;
/// Up to this the Pfaff-transformed series is used (its argument stays ≤ 0.9).
const PFAFF_LIMIT: f64 = 9.0;
/// Distance from an integer `b` below which the large-argument expansion
/// loses too many digits to cancellation.
const NEAR_INTEGER: f64 = 1e-4;

/// Gauss hypergeometric function restricted to `a = 1`, `c = b + 1`,
/// `b > 0`, `z ≤ 0` (including `-∞`).
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let in_family = a == 1.0
        && b.is_finite()
        && b > 0.0
        && (c - (b + 1.0)).abs() <= 1e-12 * c.abs().max(1.0)
        && z <= 0.0;
    if !in_family {
        return Err(Error::UnsupportedHypergeometric { a, b, c, z });
    }
    hyp_neg(b, -z)
}

/// `₂F₁(1, b; b + 1; -x)` for `x ≥ 0`.
pub(crate) fn hyp_neg(b: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < DIRECT_LIMIT {
        Ok(direct_series(b, x))
    } else if x <= PFAFF_LIMIT {
        Ok(pfaff_series(b, x))
    } else {
        let frac = b - b.floor();
        if !(NEAR_INTEGER..=1.0 - NEAR_INTEGER).contains(&frac) {
            by_quadrature(b, x)
        } else {
            Ok(b * large_argument(b, x))
        }
    }
}

/// `Σ b/(b+k) (-x)^k`.
fn direct_series(b: f64, x: f64) -> f64 {
    let mut sum = 1.0;
    let mut power = 1.0;
    for k in 1..MAX_TERMS {
        power *= -x;
        let term = b / (b + k as f64) * power;
        sum += term;
        if term.abs() < SERIES_EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// `(1+x)^-1 ₂F₁(1, 1; b+1; x/(1+x))`.
fn pfaff_series(b: f64, x: f64) -> f64 {
    let w = x / (1.0 + x);
    let c = b + 1.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (kf + 1.0) / (c + kf) * w;
        sum += term;
        if term.abs() < SERIES_EPS * sum {
            break;
        }
    }
    sum / (1.0 + x)
}

/// `g_b(x) = ∫₀¹ t^(b-1)/(1+xt) dt` for `x > 1` and non-integer `b`.
///
/// For `0 < b < 1` the integral over `(0, ∞)` is `x^-b π / sin(πb)` and the
/// part over `(1, ∞)` has a convergent series in `1/x`. Larger `b` follow
/// from `g_b = (1/(b-1) - g_{b-1}) / x`, which is stable for `x > 1`.
fn large_argument(b: f64, x: f64) -> f64 {
    let steps = b.floor() as usize;
    let b0 = b - steps as f64;
    let mut tail = 0.0;
    let mut power = 1.0 / x;
    for k in 0..MAX_TERMS {
        let term = power / (k as f64 + 1.0 - b0);
        if k % 2 == 0 {
            tail += term;
        } else {
            tail -= term;
        }
        if term < SERIES_EPS * tail.abs() {
            break;
        }
        power /= x;
    }
    let mut g = x.powf(-b0) * PI / (PI * b0).sin() - tail;
    let mut bb = b0;
    for _ in 0..steps {
        bb += 1.0;
        g = (1.0 / (bb - 1.0) - g) / x;
    }
    g
}

/// `∫₀¹ dv / (1 + x v^(1/b))`, the defining integral after `v = t^b`.
fn by_quadrature(b: f64, x: f64) -> Result<f64> {
    // Concentrate panels where x v^(1/b) passes through 1.
    let knee = x.powf(-b).min(1.0);
    let mut points = vec![0.0];
    let mut p = knee * 1e-3;
    while p < 1.0 {
        if p > 0.0 {
            points.push(p);
        }
        p *= 10.0;
    }
    points.push(1.0);
    let points = quad::panel_points(0.0, 1.0, points);
    let inv_b = 1.0 / b;
    Ok(quad::integrate_points(|v| 1.0 / (1.0 + x * v.powf(inv_b)), &points, Tolerance::new(1e-300, 1e-14))?.value)
}
