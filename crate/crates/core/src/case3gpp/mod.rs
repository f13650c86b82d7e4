//! Closed-form coverage for the two-slope model with a linear LoS
//! probability (the "case1" preset and its re-parameterizations).
//!
//! The Laplace transforms reduce to the two special functions [`rho1`] and
//! [`rho2`], leaving a single integral over the serving distance per term.

mod hyp2f1;

use std::f64::consts::PI;

pub use hyp2f1::hyp2f1;

use crate::analytic::{CoverageProvider, CoveragePoint, Method, Tolerances};
use crate::error::{Error, Result};
use crate::model::{reference, LosProbability, NetworkParams, PowerLaw, Scenario};
use crate::quad::{self, Tolerance};

/// `ρ₁(α, β, t, d) = ∫₀^d u^β / (1 + t u^α) du`.
pub fn rho1(alpha: f64, beta: f64, t: f64, d: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta >= 0.0 && t >= 0.0 && d >= 0.0) || !alpha.is_finite() || !t.is_finite() {
        return Err(Error::Domain(format!("rho1({alpha}, {beta}, {t}, {d})")));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    let b = (beta + 1.0) / alpha;
    Ok(d.powf(beta + 1.0) / (beta + 1.0) * hyp2f1::hyp_neg(b, t * d.powf(alpha))?)
}

/// `ρ₂(α, β, t, d) = ∫_d^∞ u^β / (1 + t u^α) du`, finite only for `α > β + 1`.
pub fn rho2(alpha: f64, beta: f64, t: f64, d: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta >= 0.0 && t > 0.0 && d > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("rho2({alpha}, {beta}, {t}, {d})")));
    }
    let excess = alpha - beta - 1.0;
    if !(excess > 0.0) {
        return Err(Error::Domain(format!("rho2 needs alpha > beta + 1, got alpha={alpha}, beta={beta}")));
    }
    if d.is_infinite() {
        return Ok(0.0);
    }
    let b = excess / alpha;
    Ok(d.powf(-excess) / (t * excess) * hyp2f1::hyp_neg(b, 1.0 / (t * d.powf(alpha)))?)
}

/// Parameters of the two-slope, linear-LoS model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case1Params {
    /// LoS probability reaches zero here (km).
    pub d1: f64,
    pub los: PowerLaw,
    pub nlos: PowerLaw,
    pub network: NetworkParams,
    y1: f64,
}

impl Case1Params {
    pub fn new(d1: f64, los: PowerLaw, nlos: PowerLaw, network: NetworkParams) -> Result<Self> {
        network.validate()?;
        if !(d1.is_finite() && d1 > 0.0) {
            return Err(Error::InvalidModel(format!("d1 must be positive, got {d1}")));
        }
        for (name, law) in [("LoS", los), ("NLoS", nlos)] {
            if !(law.gain > 0.0 && law.exponent > 0.0 && law.gain.is_finite() && law.exponent.is_finite()) {
                return Err(Error::InvalidModel(format!("{name} law must have positive gain and exponent")));
            }
        }
        if !(nlos.exponent > 2.0) {
            return Err(Error::InvalidModel(format!("NLoS exponent must exceed 2, got {}", nlos.exponent)));
        }
        if nlos.exponent < los.exponent {
            return Err(Error::InvalidModel("NLoS exponent must not be below the LoS exponent".into()));
        }
        let y1 = nlos.inverse(los.eval(d1));
        if !(y1 > 0.0 && y1 < d1) {
            return Err(Error::InvalidModel(format!("equal-loss radius of d1 ({y1}) must lie in (0, d1)")));
        }
        Ok(Self { d1, los, nlos, network, y1 })
    }

    /// Reference parameters with the given density and threshold.
    pub fn reference(lambda: f64, gamma: f64) -> Result<Self> {
        let network = NetworkParams::new(
            lambda,
            crate::model::db_to_linear(reference::P_TX_DBM),
            crate::model::db_to_linear(reference::N0_DBM),
            gamma,
        )?;
        Self::new(
            reference::D1_KM,
            PowerLaw::from_db(reference::LOS_GAIN_DB, reference::LOS_EXPONENT),
            PowerLaw::from_db(reference::NLOS_GAIN_DB, reference::NLOS_EXPONENT),
            network,
        )
    }

    /// Extracts the parameters from a single-segment scenario with a linear
    /// LoS probability.
    pub fn from_scenario(sc: &Scenario, network: NetworkParams) -> Result<Self> {
        let LosProbability::Linear { cutoff_km } = *sc.los() else {
            return Err(Error::InvalidModel("closed forms need a linear LoS probability".into()));
        };
        let [seg] = sc.path_loss().segments() else {
            return Err(Error::InvalidModel("closed forms need a single path loss segment".into()));
        };
        Self::new(cutoff_km, seg.los, seg.nlos, network)
    }

    pub fn with_network(self, network: NetworkParams) -> Result<Self> {
        Self::new(self.d1, self.los, self.nlos, network)
    }

    /// NLoS distance with the same loss as a LoS link at `d1`.
    pub fn y1(&self) -> f64 {
        self.y1
    }

    /// `r₁`: NLoS distance matching a LoS link at `r`.
    pub fn r1(&self, r: f64) -> f64 {
        self.nlos.inverse(self.los.eval(r))
    }

    /// `r₂`: LoS distance matching a NLoS link at `r`.
    pub fn r2(&self, r: f64) -> f64 {
        self.los.inverse(self.nlos.eval(r))
    }

    fn two_pi_lambda(&self) -> f64 {
        2.0 * PI * self.network.lambda
    }

    /// `∫_a^d1 (1 - u/d1) u/(1+t u^α) du`: LoS interferers inside the LoS
    /// zone, starting at `a`.
    fn los_zone(&self, t: f64, a: f64) -> Result<f64> {
        let (al, d1) = (self.los.exponent, self.d1);
        Ok(rho1(al, 1.0, t, d1)? - rho1(al, 1.0, t, a)? - (rho1(al, 2.0, t, d1)? - rho1(al, 2.0, t, a)?) / d1)
    }

    /// `∫_a^∞ (1 - Pr^L(u)) u/(1+t u^α) du` for NLoS interferers, `a ≤ d1`.
    fn nlos_from(&self, t: f64, a: f64) -> Result<f64> {
        let (an, d1) = (self.nlos.exponent, self.d1);
        Ok((rho1(an, 2.0, t, d1)? - rho1(an, 2.0, t, a)?) / d1 + rho2(an, 1.0, t, d1)?)
    }

    fn check_range(&self, r: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
        if r > lo && r <= hi && r.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("{what} needs r in ({lo}, {hi}], got {r}")))
        }
    }

    fn check_gamma(gamma: f64) -> Result<()> {
        if gamma >= 0.0 && gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("threshold must be finite and non-negative, got {gamma}")))
        }
    }

    fn log_laplace_los_near(&self, gamma: f64, r: f64) -> Result<f64> {
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let base = gamma * r.powf(self.los.exponent);
        let t_los = 1.0 / base;
        let t_nlos = self.los.gain / (self.nlos.gain * base);
        let e = self.los_zone(t_los, r)? + self.nlos_from(t_nlos, self.r1(r))?;
        Ok(-self.two_pi_lambda() * e)
    }

    fn log_laplace_nlos_near(&self, gamma: f64, r: f64) -> Result<f64> {
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let base = gamma * r.powf(self.nlos.exponent);
        let t_nlos = 1.0 / base;
        let mut e = self.nlos_from(t_nlos, r)?;
        if r <= self.y1 {
            let t_los = self.nlos.gain / (self.los.gain * base);
            e += self.los_zone(t_los, self.r2(r))?;
        }
        Ok(-self.two_pi_lambda() * e)
    }

    fn log_laplace_nlos_far(&self, gamma: f64, r: f64) -> Result<f64> {
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let t = 1.0 / (gamma * r.powf(self.nlos.exponent));
        Ok(-self.two_pi_lambda() * rho2(self.nlos.exponent, 1.0, t, r)?)
    }

    /// Serving-distance density for a LoS BS at `r ≤ d1`.
    fn pdf_los(&self, r: f64) -> f64 {
        let (l, d1) = (self.network.lambda, self.d1);
        let r1 = self.r1(r);
        (-PI * l * r * r + 2.0 * PI * l * (r.powi(3) - r1.powi(3)) / (3.0 * d1)).exp() * (1.0 - r / d1) * 2.0 * PI * l * r
    }

    /// Serving-distance density for a NLoS BS at `r ≤ d1`.
    fn pdf_nlos_near(&self, r: f64) -> f64 {
        let (l, d1) = (self.network.lambda, self.d1);
        let exponent = if r <= self.y1 {
            let r2 = self.r2(r);
            -PI * l * r2 * r2 + 2.0 * PI * l * (r2.powi(3) - r.powi(3)) / (3.0 * d1)
        } else {
            -PI * l * d1 * d1 / 3.0 - 2.0 * PI * l * r.powi(3) / (3.0 * d1)
        };
        exponent.exp() * (r / d1) * 2.0 * PI * l * r
    }

    /// Serving-distance density for a NLoS BS beyond `d1`.
    fn pdf_nlos_far(&self, r: f64) -> f64 {
        let l = self.network.lambda;
        (-PI * l * r * r).exp() * 2.0 * PI * l * r
    }
}

/// Laplace transform of the interference for a LoS-served UE at
/// `r ∈ (0, d1]`, evaluated at `s = γ / (P ζ^L(r))`.
pub fn laplace_los_near(c: &Case1Params, gamma: f64, r: f64) -> Result<f64> {
    Case1Params::check_gamma(gamma)?;
    c.check_range(r, 0.0, c.d1, "LoS near-zone transform")?;
    Ok(c.log_laplace_los_near(gamma, r)?.exp())
}

/// Laplace transform for a NLoS-served UE at `r ∈ (0, d1]`, at
/// `s = γ / (P ζ^NL(r))`. Up to `y1` LoS interferers beyond `r₂` contribute;
/// past `y1` only NLoS interferers remain.
pub fn laplace_nlos_near(c: &Case1Params, gamma: f64, r: f64) -> Result<f64> {
    Case1Params::check_gamma(gamma)?;
    c.check_range(r, 0.0, c.d1, "NLoS near-zone transform")?;
    Ok(c.log_laplace_nlos_near(gamma, r)?.exp())
}

/// Laplace transform for a NLoS-served UE at `r > d1`.
pub fn laplace_nlos_far(c: &Case1Params, gamma: f64, r: f64) -> Result<f64> {
    Case1Params::check_gamma(gamma)?;
    c.check_range(r, c.d1, f64::INFINITY, "NLoS far-zone transform")?;
    Ok(c.log_laplace_nlos_far(gamma, r)?.exp())
}

/// The three non-zero coverage terms. The LoS term beyond `d1` is
/// identically zero because no LoS BS exists there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case1Terms {
    pub los_near: f64,
    pub nlos_near: f64,
    pub nlos_far: f64,
    pub abs_error_est: f64,
}

impl Case1Terms {
    pub fn total(&self) -> f64 {
        self.los_near + self.nlos_near + self.nlos_far
    }
}

/// Evaluates the three coverage terms at threshold `gamma` with the density
/// and powers of `c.network`.
pub fn coverage_terms(c: &Case1Params, gamma: f64, tol: &Tolerances) -> Result<Case1Terms> {
    Case1Params::check_gamma(gamma)?;
    let NetworkParams { lambda, p_tx, n0, .. } = c.network;
    let t = Tolerance::new(tol.outer, 1e-12);
    let noise_los = gamma * n0 / (p_tx * c.los.gain);
    let noise_nlos = gamma * n0 / (p_tx * c.nlos.gain);
    // Typical nearest-BS distance and the radii where the noise factor
    // reaches e^-1 on each branch.
    let typical = 1.0 / (PI * lambda).sqrt();
    let edges = [typical, noise_los.powf(-1.0 / c.los.exponent), noise_nlos.powf(-1.0 / c.nlos.exponent)];
    let scale_points: Vec<f64> = edges
        .iter()
        .filter(|e| e.is_finite())
        .flat_map(|e| [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0].map(|m| m * e))
        .collect();

    let mut first_error: Option<Error> = None;
    let mut guard = |v: Result<f64>| match v {
        Ok(x) => x,
        Err(e) => {
            first_error.get_or_insert(e);
            f64::NAN
        }
    };

    let los_pts = quad::panel_points(0.0, c.d1, scale_points.iter().copied());
    let los = quad::integrate_points(
        |r| {
            if r == 0.0 || r >= c.d1 {
                return 0.0;
            }
            let log_l = guard(c.log_laplace_los_near(gamma, r));
            (log_l - noise_los * r.powf(c.los.exponent)).exp() * c.pdf_los(r)
        },
        &los_pts,
        t,
    );

    let near_pts = quad::panel_points(0.0, c.d1, scale_points.iter().copied().chain([c.y1]));
    let nlos_near = quad::integrate_points(
        |r| {
            if r == 0.0 {
                return 0.0;
            }
            let log_l = guard(c.log_laplace_nlos_near(gamma, r));
            (log_l - noise_nlos * r.powf(c.nlos.exponent)).exp() * c.pdf_nlos_near(r)
        },
        &near_pts,
        t,
    );

    let far_pts = quad::panel_points(c.d1, f64::INFINITY, scale_points.iter().copied());
    let nlos_far = quad::integrate_points(
        |r| {
            let noise = noise_nlos * r.powf(c.nlos.exponent);
            if noise > 745.0 || r.is_infinite() {
                return 0.0;
            }
            let log_l = guard(c.log_laplace_nlos_far(gamma, r));
            (log_l - noise).exp() * c.pdf_nlos_far(r)
        },
        &far_pts,
        t,
    );

    if let Some(e) = first_error {
        return Err(e);
    }
    let (los, nlos_near, nlos_far) = (los?, nlos_near?, nlos_far?);
    Ok(Case1Terms {
        los_near: los.value,
        nlos_near: nlos_near.value,
        nlos_far: nlos_far.value,
        abs_error_est: los.abs_error + nlos_near.abs_error + nlos_far.abs_error,
    })
}

/// Coverage probability from the closed-form transforms, one quadrature per
/// term.
pub fn coverage_case1(c: &Case1Params, gamma: f64) -> Result<CoveragePoint> {
    coverage_case1_with(c, gamma, &Tolerances::default())
}

pub fn coverage_case1_with(c: &Case1Params, gamma: f64, tol: &Tolerances) -> Result<CoveragePoint> {
    let terms = coverage_terms(c, gamma, tol)?;
    Ok(CoveragePoint {
        lambda: c.network.lambda,
        gamma,
        p_cov: terms.total(),
        method: Method::AnalyticClosed,
        abs_error_est: terms.abs_error_est,
    })
}

impl CoverageProvider for Case1Params {
    fn method(&self) -> Method {
        Method::AnalyticClosed
    }

    fn coverage(&self, lambda: f64, gamma: f64) -> Result<CoveragePoint> {
        // Closed forms are cheap enough to always run at tight tolerance.
        let c = self.with_network(self.network.with_lambda(lambda).with_gamma(gamma))?;
        coverage_case1_with(&c, gamma, &Tolerances::tight())
    }
}
