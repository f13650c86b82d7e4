//! Area spectral efficiency from a coverage provider or from SINR samples.
//!
//! With `p(γ) = P[SINR > γ]` the ASE is `λ ∫_{γ₀}^∞ log₂(1+γ) f(γ) dγ`
//! where `f = -p'`. Integrating by parts removes the derivative:
//!
//! `A = λ [log₂(1+γ₀) p(γ₀) + (1/ln 2) ∫_{γ₀}^∞ p(γ)/(1+γ) dγ]`.

use std::f64::consts::LN_2;

use crate::analytic::{CoverageProvider, Method};
use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsePoint {
    pub lambda: f64,
    /// Linear minimum working SINR.
    pub gamma0: f64,
    /// bps/Hz/km².
    pub ase: f64,
    pub method: Method,
    /// Standard error for sample estimates, quadrature estimate otherwise.
    pub abs_error_est: f64,
}

/// The tail integral stops once its remainder is bounded by this.
const TAIL_BOUND: f64 = 1e-8;
/// Width in `ln γ` of the first tail panel; later panels double.
const FIRST_WIDTH: f64 = 4.0;
const MAX_PANELS: usize = 40;

/// `∫_{γ₀}^∞ p(γ)/(1+γ) dγ` and its error estimate.
///
/// The integral is taken in `t = ln γ` over panels of doubling width. After
/// each panel the remainder is bounded by `p(γ_max)/κ`, with `κ` the decay
/// rate of `p` in `ln γ` measured across that panel, and the loop stops once
/// the bound drops below 1e-8.
pub fn coverage_tail_integral<F>(mut p: F, gamma0: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return Err(Error::InvalidParams(format!("gamma0 must be positive, got {gamma0}")));
    }
    let mut lo = gamma0.ln();
    let mut p_lo = p(gamma0)?;
    let mut width = FIRST_WIDTH;
    let mut total = 0.0;
    let mut err = 0.0;
    for _ in 0..MAX_PANELS {
        if p_lo <= 0.0 {
            return Ok((total, err));
        }
        let hi = lo + width;
        let mut failure = None;
        let panel = quad::integrate(
            |t| {
                let g = t.exp();
                match p(g) {
                    // e^t / (1 + e^t) written for large t
                    Ok(v) => v / (1.0 + (-t).exp()),
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            lo,
            hi,
            Tolerance::new(1e-9, 1e-7),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let panel = panel?;
        total += panel.value;
        err += panel.abs_error;
        let p_hi = p(hi.exp())?;
        if p_hi <= 0.0 {
            return Ok((total, err));
        }
        let kappa = (p_lo / p_hi).ln() / width;
        if kappa > 0.0 && p_hi / kappa < TAIL_BOUND {
            return Ok((total, err + p_hi / kappa));
        }
        lo = hi;
        p_lo = p_hi;
        width *= 2.0;
    }
    Err(Error::Quadrature {
        lo: gamma0,
        hi: lo.exp(),
        estimate: p_lo,
        tolerance: TAIL_BOUND,
    })
}

/// ASE at density `lambda` and minimum working SINR `gamma0` (linear).
pub fn ase<P: CoverageProvider + ?Sized>(provider: &P, lambda: f64, gamma0: f64) -> Result<AsePoint> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParams(format!("BS density must be positive, got {lambda}")));
    }
    let mut cov_err = 0.0f64;
    let (tail, tail_err) = coverage_tail_integral(
        |g| {
            let c = provider.coverage(lambda, g)?;
            cov_err = cov_err.max(c.abs_error_est);
            Ok(c.p_cov)
        },
        gamma0,
    )?;
    let at_gamma0 = provider.coverage(lambda, gamma0)?;
    let ase = lambda * ((1.0 + gamma0).log2() * at_gamma0.p_cov + tail / LN_2);
    Ok(AsePoint {
        lambda,
        gamma0,
        ase,
        method: provider.method(),
        abs_error_est: lambda * ((1.0 + gamma0).log2() * at_gamma0.abs_error_est + (tail_err + cov_err) / LN_2),
    })
}

/// Sample estimate `λ · mean(log₂(1+SINR) · 1{SINR > γ₀})` with its
/// standard error.
pub fn ase_mc(samples: &[f64], lambda: f64, gamma0: f64) -> Result<AsePoint> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as f64;
    let rate = |s: f64| if s > gamma0 { (1.0 + s).log2() } else { 0.0 };
    let mean = samples.iter().map(|&s| rate(s)).sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|&s| (rate(s) - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(AsePoint {
        lambda,
        gamma0,
        ase: lambda * mean,
        method: Method::MonteCarlo,
        abs_error_est: lambda * (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::CoveragePoint;

    struct Synthetic<F>(F);

    impl<F: Fn(f64) -> f64 + Sync> CoverageProvider for Synthetic<F> {
        fn method(&self) -> Method {
            Method::AnalyticGeneral
        }
        fn coverage(&self, lambda: f64, gamma: f64) -> Result<CoveragePoint> {
            Ok(CoveragePoint { lambda, gamma, p_cov: (self.0)(gamma), method: Method::AnalyticGeneral, abs_error_est: 0.0 })
        }
    }

    #[test]
    fn zero_coverage_gives_zero() {
        let a = ase(&Synthetic(|_| 0.0), 10.0, 1.0).unwrap();
        assert_eq!(a.ase, 0.0);
    }

    #[test]
    fn exponential_ccdf_matches_direct_integral() {
        // p = e^{-γ/2}: A/λ = ∫_{γ0}^∞ log2(1+γ) e^{-γ/2}/2 dγ, evaluated
        // directly with the density instead of by parts.
        let (mean, g0) = (2.0, 0.5);
        let direct = quad::integrate(
            |g| (1.0 + g).log2() * (-g / mean).exp() / mean,
            g0,
            f64::INFINITY,
            Tolerance::new(1e-14, 1e-13),
        )
        .unwrap()
        .value;
        let a = ase(&Synthetic(move |g: f64| (-g / mean).exp()), 3.0, g0).unwrap();
        assert!((a.ase - 3.0 * direct).abs() < 1e-6, "{} vs {}", a.ase, 3.0 * direct);
    }

    #[test]
    fn power_law_ccdf_tail_is_captured() {
        // p = (1+γ)^-1/2: ∫_{γ0}^∞ (1+γ)^-3/2 dγ = 2 (1+γ0)^-1/2
        let g0 = 1.0;
        let (tail, _) = coverage_tail_integral(|g| Ok((1.0 + g).powf(-0.5)), g0).unwrap();
        let exact = 2.0 / 2f64.sqrt();
        assert!((tail - exact).abs() < 1e-7, "{tail} vs {exact}");
    }

    #[test]
    fn bounded_below_by_boundary_term() {
        let p = Synthetic(|g: f64| 1.0 / (1.0 + g));
        for &g0 in &[0.5, 1.0, 2.0, 10.0] {
            let a = ase(&p, 7.0, g0).unwrap();
            assert!(a.ase >= 7.0 * (1.0 + g0).log2() / (1.0 + g0));
        }
    }

    #[test]
    fn provider_errors_propagate() {
        struct Failing;
        impl CoverageProvider for Failing {
            fn method(&self) -> Method {
                Method::AnalyticGeneral
            }
            fn coverage(&self, _: f64, _: f64) -> Result<CoveragePoint> {
                Err(Error::Domain("nope".into()))
            }
        }
        assert!(matches!(ase(&Failing, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn sample_estimate_basics() {
        assert_eq!(ase_mc(&[0.1, 0.2, 0.3], 10.0, 1.0).unwrap().ase, 0.0);
        assert!(matches!(ase_mc(&[], 10.0, 1.0), Err(Error::EmptySamples)));
        let s = [0.5, 3.0, 7.0, 15.0];
        let one = ase_mc(&s, 5.0, 1.0).unwrap();
        let two = ase_mc(&s, 10.0, 1.0).unwrap();
        assert!((two.ase - 2.0 * one.ase).abs() < 1e-12);
        // (2 + 3 + 4) / 4 per unit density
        assert!((one.ase - 5.0 * 9.0 / 4.0).abs() < 1e-12);
    }
}
