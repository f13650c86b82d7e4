//! Oracles shared by the integration tests. Nothing here calls the crate's
//! own quadrature, so agreement is a genuine cross-check.

#![allow(dead_code)]

use std::io::Write;
use std::sync::OnceLock;

use densecell::{CoverageProvider, Result};

const GL_ORDER: usize = 20;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let k = k as f64;
                        (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

/// Composite Gauss–Legendre over `[a, b]` split into `panels` equal pieces.
pub fn gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for &(x, w) in gauss_legendre() {
            sum += w * f(mid + 0.5 * h * x);
        }
    }
    sum * 0.5 * h
}

/// Composite rule over consecutive pieces of a sorted breakpoint list.
pub fn gl_pieces<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], panels_per_piece: usize) -> f64 {
    points.windows(2).filter(|w| w[1] > w[0]).map(|w| gl(&mut f, w[0], w[1], panels_per_piece)).sum()
}

/// `∫₀^d u^β/(1+t u^α) du` in `v = ln u`.
pub fn rho1_oracle(alpha: f64, beta: f64, t: f64, d: f64) -> f64 {
    let top = d.ln();
    let bottom = top - 45.0 / (beta + 1.0);
    let f = |v: f64| {
        let (a, b) = (alpha * v + t.ln(), (beta + 1.0) * v);
        // e^b / (1 + e^a) without overflow
        if a > 0.0 {
            (b - a).exp() / (1.0 + (-a).exp())
        } else {
            b.exp() / (1.0 + a.exp())
        }
    };
    let knee = (-t.ln() / alpha).clamp(bottom, top);
    gl_pieces(f, &[bottom, knee - 1.0, knee, knee + 1.0, top].map(|x: f64| x.clamp(bottom, top)), 40)
}

/// `∫_d^∞ u^β/(1+t u^α) du` in `v = ln u`, cut after 45 e-folds of decay.
pub fn rho2_oracle(alpha: f64, beta: f64, t: f64, d: f64) -> f64 {
    let rate = alpha - beta - 1.0;
    let bottom = d.ln();
    let knee = (-t.ln() / alpha).max(bottom);
    let top = knee + 45.0 / rate;
    let f = |v: f64| {
        let (a, b) = (alpha * v + t.ln(), (beta + 1.0) * v);
        if a > 0.0 {
            (b - a).exp() / (1.0 + (-a).exp())
        } else {
            b.exp() / (1.0 + a.exp())
        }
    };
    let pts = [bottom, knee - 1.0, knee, knee + 1.0, knee + 5.0 / rate, top].map(|x: f64| x.clamp(bottom, top));
    let mut pts = pts.to_vec();
    pts.sort_by(f64::total_cmp);
    gl_pieces(f, &pts, 60)
}

/// ASE through the SINR density: `λ ∫_{γ₀}^∞ log₂(1+γ) f(γ) dγ` with
/// `f = -dp/dγ` taken by central differences in `t = ln γ`.
///
/// The range is walked in unit-width `t` panels until the remaining mass
/// `log₂(1+γ) p(γ)` is below `1e-9` of the running total.
pub fn ase_direct<P: CoverageProvider + ?Sized>(provider: &P, lambda: f64, gamma0: f64) -> Result<f64> {
    const STEP: f64 = 1e-3;
    let p = |t: f64| provider.coverage(lambda, t.exp()).map(|c| c.p_cov);
    let mut lo = gamma0.ln();
    let mut total = 0.0;
    let mut failure = None;
    for _ in 0..400 {
        let piece = gl(
            |t| {
                let slope = match (p(t + STEP), p(t - STEP)) {
                    (Ok(a), Ok(b)) => (a - b) / (2.0 * STEP),
                    (Err(e), _) | (_, Err(e)) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                };
                -slope * (1.0 + t.exp()).log2()
            },
            lo,
            lo + 1.0,
            1,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        total += piece;
        lo += 1.0;
        let rest = p(lo)? * (1.0 + lo.exp()).log2();
        if rest < 1e-9 * total {
            break;
        }
    }
    Ok(lambda * total)
}

/// One summary line written straight to stderr so it shows even when the
/// test harness captures output.
pub fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}
