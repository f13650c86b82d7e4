//! Coverage probability for an arbitrary scenario by nested adaptive
//! quadrature: distance PDFs of the serving BS, the Laplace transform of the
//! interference, and the outer integral over the serving distance.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Branch, NetworkParams, Scenario};
use crate::quad::{self, Tolerance};

/// Where a coverage or ASE value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    AnalyticGeneral,
    AnalyticClosed,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::AnalyticGeneral => "analytic-general",
            Method::AnalyticClosed => "analytic-closed",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePoint {
    pub lambda: f64,
    /// Linear SINR threshold.
    pub gamma: f64,
    pub p_cov: f64,
    pub method: Method,
    /// Quadrature error estimate, or the standard error for Monte Carlo.
    pub abs_error_est: f64,
}

/// Serving-distance densities split by the serving branch, in 1/km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistancePdfSample {
    pub r: f64,
    pub density_los: f64,
    pub density_nlos: f64,
}

impl DistancePdfSample {
    pub fn total(&self) -> f64 {
        self.density_los + self.density_nlos
    }
}

/// Absolute tolerances of the quadrature levels. `middle` applies to the
/// Laplace exponent, `outer` to the coverage integral itself. The innermost
/// exclusion integrals are exact or come from the scenario's moment table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub middle: f64,
    pub outer: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { middle: 1e-8, outer: 1e-6 }
    }
}

impl Tolerances {
    /// Used where coverage values are differenced, e.g. the peak search.
    pub fn tight() -> Self {
        Self { middle: 1e-12, outer: 1e-11 }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("BS density must be positive, got {lambda}")))
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance must be positive and finite, got {r}")))
    }
}

/// Density of the serving distance when the serving BS is on `branch`.
///
/// The UE attaches to the strongest BS, so a `branch` BS at `r` serves only
/// if no `branch` BS is closer and no opposite-branch BS lies within the
/// equal-loss radius.
pub fn pdf_distance_branch(sc: &Scenario, lambda: f64, branch: Branch, r: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_r(r)?;
    Ok(pdf_unchecked(sc, lambda, branch, r))
}

fn pdf_unchecked(sc: &Scenario, lambda: f64, branch: Branch, r: f64) -> f64 {
    let p = sc.branch_prob(r, branch);
    if p == 0.0 {
        return 0.0;
    }
    let other = branch.other();
    let target = sc.path_loss().gain(r, branch);
    let r_other = sc.path_loss().radius_for_gain(target, other);
    let exponent = sc.moment(r_other, other) + sc.moment(r, branch);
    (-2.0 * PI * lambda * exponent).exp() * p * 2.0 * PI * lambda * r
}

/// `f^L(r)`.
pub fn pdf_distance_los(sc: &Scenario, lambda: f64, r: f64) -> Result<f64> {
    pdf_distance_branch(sc, lambda, Branch::Los, r)
}

/// `f^NL(r)`.
pub fn pdf_distance_nlos(sc: &Scenario, lambda: f64, r: f64) -> Result<f64> {
    pdf_distance_branch(sc, lambda, Branch::Nlos, r)
}

pub fn pdf_distance(sc: &Scenario, lambda: f64, r: f64) -> Result<DistancePdfSample> {
    Ok(DistancePdfSample {
        r,
        density_los: pdf_distance_los(sc, lambda, r)?,
        density_nlos: pdf_distance_nlos(sc, lambda, r)?,
    })
}

/// `u·x/(1+x)` written to stay accurate for very large `x`.
#[inline]
fn saturating(u: f64, x: f64) -> f64 {
    if x > 1.0 {
        u / (1.0 + 1.0 / x)
    } else {
        u * x / (1.0 + x)
    }
}

/// Exclusion radii `(LoS, NLoS)` of the interferers for a UE served on
/// `serving` at distance `r`.
fn exclusion_radii(sc: &Scenario, serving: Branch, r: f64) -> (f64, f64) {
    let target = sc.path_loss().gain(r, serving);
    let other = sc.path_loss().radius_for_gain(target, serving.other());
    match serving {
        Branch::Los => (r, other),
        Branch::Nlos => (other, r),
    }
}

/// `∫_{from}^∞ Pr^b(u) u x/(1+x) du` with `x = sPζ^b(u)`.
fn interference_integral(sc: &Scenario, branch: Branch, sp: f64, from: f64, tol: Tolerance) -> Result<quad::Integral> {
    if from.is_infinite() {
        return Ok(quad::Integral { value: 0.0, abs_error: 0.0, evaluations: 0 });
    }
    let pl = sc.path_loss();
    let knee = pl.radius_for_gain(1.0 / sp, branch);
    let mut interior: Vec<f64> = sc.splits().to_vec();
    if knee.is_finite() {
        interior.extend([knee, 4.0 * knee, 16.0 * knee]);
    }
    let mut points = quad::panel_points(from, f64::INFINITY, interior);
    if points.len() == 2 && from == 0.0 {
        points.insert(1, 1.0);
    }
    quad::integrate_points(
        |u| {
            let p = sc.branch_prob(u, branch);
            if p == 0.0 {
                0.0
            } else {
                p * saturating(u, sp * pl.gain(u, branch))
            }
        },
        &points,
        tol,
    )
}

/// Laplace transform of the aggregate interference at `s` (1/mW) for a UE
/// served on `serving` at distance `r`, with Rayleigh fading and transmit
/// power `p_tx`.
pub fn laplace_interference(sc: &Scenario, lambda: f64, p_tx: f64, s: f64, serving: Branch, r: f64) -> Result<f64> {
    laplace_interference_with(sc, lambda, p_tx, s, serving, r, &Tolerances::default())
}

pub fn laplace_interference_with(
    sc: &Scenario,
    lambda: f64,
    p_tx: f64,
    s: f64,
    serving: Branch,
    r: f64,
    tol: &Tolerances,
) -> Result<f64> {
    check_lambda(lambda)?;
    check_r(r)?;
    if !(s >= 0.0) || s.is_infinite() {
        return Err(Error::Domain(format!("Laplace argument must be finite and non-negative, got {s}")));
    }
    sc.check_interference_finite()?;
    Ok(log_laplace(sc, lambda, p_tx * s, serving, r, tol)?.0.exp())
}

/// Natural log of the Laplace transform and its absolute error estimate.
fn log_laplace(sc: &Scenario, lambda: f64, sp: f64, serving: Branch, r: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    if sp == 0.0 {
        return Ok((0.0, 0.0));
    }
    let scale = 2.0 * PI * lambda;
    let t = Tolerance::new(tol.middle / scale, 1e-10);
    let (x_los, x_nlos) = exclusion_radii(sc, serving, r);
    let los = interference_integral(sc, Branch::Los, sp, x_los, t)?;
    let nlos = interference_integral(sc, Branch::Nlos, sp, x_nlos, t)?;
    Ok((-scale * (los.value + nlos.value), scale * (los.abs_error + nlos.abs_error)))
}

/// Distances where the outer integrand for `serving` can have a kink: the
/// model breakpoints, their equal-loss images and a few multiples of the
/// typical nearest-BS distance.
fn outer_points(sc: &Scenario, params: &NetworkParams, serving: Branch) -> Vec<f64> {
    let pl = sc.path_loss();
    let mut interior: Vec<f64> = sc.splits().to_vec();
    // Past this radius the noise factor alone is below e^-1; at high
    // thresholds the whole integrand sits well inside it.
    let noise_edge = pl.radius_for_gain(params.gamma * params.n0 / params.p_tx, serving);
    if noise_edge.is_finite() {
        interior.extend([0.01, 0.1, 0.3, 1.0, 3.0].iter().map(|m| m * noise_edge));
    }
    for &d in sc.splits() {
        // r at which the opposite-branch exclusion radius reaches d
        let image = pl.radius_for_gain(pl.gain(d, serving.other()), serving);
        interior.push(image);
    }
    let typical = 1.0 / (PI * params.lambda).sqrt();
    interior.extend([0.03, 0.1, 0.3, 1.0, 3.0, 10.0].iter().map(|m| m * typical));
    quad::panel_points(0.0, f64::INFINITY, interior)
}

/// Contribution of `serving` to the coverage probability and its error
/// estimate.
pub fn coverage_term(sc: &Scenario, params: &NetworkParams, serving: Branch, tol: &Tolerances) -> Result<(f64, f64)> {
    params.validate()?;
    sc.check_interference_finite()?;
    let NetworkParams { lambda, p_tx, n0, gamma } = *params;
    let pl = sc.path_loss();
    let mut first_error = None;
    let mut inner_error = 0.0f64;
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let pdf = pdf_unchecked(sc, lambda, serving, r);
        if pdf == 0.0 {
            return 0.0;
        }
        let s_p = gamma / pl.gain(r, serving);
        let noise = -s_p * n0 / p_tx;
        if noise < -745.0 {
            return 0.0;
        }
        match log_laplace(sc, lambda, s_p, serving, r, tol) {
            Ok((log_l, err)) => {
                let v = (noise + log_l).exp() * pdf;
                inner_error = inner_error.max(err * v);
                v
            }
            Err(e) => {
                first_error.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let points = outer_points(sc, params, serving);
    let result = quad::integrate_points(integrand, &points, Tolerance::new(tol.outer, 1e-12));
    if let Some(e) = first_error {
        return Err(e);
    }
    let integral = result?;
    Ok((integral.value, integral.abs_error + inner_error))
}

/// Coverage probability `P[SINR > γ]` by the general three-level quadrature.
pub fn coverage_probability(sc: &Scenario, params: &NetworkParams) -> Result<CoveragePoint> {
    coverage_probability_with(sc, params, &Tolerances::default())
}

pub fn coverage_probability_with(sc: &Scenario, params: &NetworkParams, tol: &Tolerances) -> Result<CoveragePoint> {
    let (los, e_los) = coverage_term(sc, params, Branch::Los, tol)?;
    let (nlos, e_nlos) = coverage_term(sc, params, Branch::Nlos, tol)?;
    let p_cov = los + nlos;
    let err = e_los + e_nlos;
    debug_assert!(
        (-10.0 * err - 1e-12..=1.0 + 10.0 * err + 1e-12).contains(&p_cov),
        "coverage {p_cov} outside [0, 1]"
    );
    Ok(CoveragePoint {
        lambda: params.lambda,
        gamma: params.gamma,
        p_cov,
        method: Method::AnalyticGeneral,
        abs_error_est: err,
    })
}

/// Anything that can evaluate `p_cov(λ, γ)`.
pub trait CoverageProvider: Sync {
    fn method(&self) -> Method;
    fn coverage(&self, lambda: f64, gamma: f64) -> Result<CoveragePoint>;
}

/// General three-level quadrature bound to a scenario and fixed powers.
#[derive(Debug, Clone)]
pub struct GeneralEngine {
    pub scenario: Scenario,
    /// mW.
    pub p_tx: f64,
    /// mW.
    pub n0: f64,
    pub tol: Tolerances,
}

impl GeneralEngine {
    pub fn new(scenario: Scenario, p_tx: f64, n0: f64) -> Self {
        Self { scenario, p_tx, n0, tol: Tolerances::default() }
    }

    pub fn with_tolerances(self, tol: Tolerances) -> Self {
        Self { tol, ..self }
    }
}

impl CoverageProvider for GeneralEngine {
    fn method(&self) -> Method {
        Method::AnalyticGeneral
    }

    fn coverage(&self, lambda: f64, gamma: f64) -> Result<CoveragePoint> {
        let params = NetworkParams::new(lambda, self.p_tx, self.n0, gamma)?;
        coverage_probability_with(&self.scenario, &params, &self.tol)
    }
}

/// Result of a peak search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub location: f64,
    pub value: f64,
    /// Final bracket around `location`.
    pub bracket: (f64, f64),
}

/// Density maximizing the general-engine coverage within `lambda_range`.
pub fn find_coverage_peak(sc: &Scenario, params: &NetworkParams, lambda_range: (f64, f64)) -> Result<Peak> {
    let engine = GeneralEngine::new(sc.clone(), params.p_tx, params.n0).with_tolerances(Tolerances::tight());
    find_provider_peak(&engine, params.gamma, lambda_range)
}

/// Density maximizing `provider`'s coverage at threshold `gamma`.
pub fn find_provider_peak<P: CoverageProvider + ?Sized>(provider: &P, gamma: f64, lambda_range: (f64, f64)) -> Result<Peak> {
    find_peak(|lambda| Ok(provider.coverage(lambda, gamma)?.p_cov), lambda_range)
}

/// Number of log-spaced points in the coarse scan of [`find_peak`].
const PEAK_SCAN_POINTS: usize = 41;
const PEAK_FD_STEP: f64 = 1e-3;

/// Interior maximizer of `f` on `(lo, hi)`.
///
/// A log-spaced scan locates the largest sample; if it sits on either end
/// there is no interior peak. The bracket around it is then narrowed by
/// bisection on the sign of a central difference with relative step 1e-3.
pub fn find_peak<F>(mut f: F, (lo, hi): (f64, f64)) -> Result<Peak>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParams(format!("peak search needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let ratio = (hi / lo).ln() / (PEAK_SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..PEAK_SCAN_POINTS).map(|i| lo * (ratio * i as f64).exp()).collect();
    let values = grid.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or(Error::NoInteriorPeak { lo, hi })?;
    if best == 0 || best == grid.len() - 1 {
        return Err(Error::NoInteriorPeak { lo, hi });
    }
    let mut slope = |x: f64| -> Result<f64> {
        let h = PEAK_FD_STEP * x;
        Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
    };
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    if slope(a)? <= 0.0 || slope(b)? >= 0.0 {
        // Flat or noisy around the scan maximum: settle for the sample.
        return Ok(Peak { location: grid[best], value: values[best], bracket: (a, b) });
    }
    for _ in 0..100 {
        let mid = (a * b).sqrt();
        if slope(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b / a - 1.0 < 1e-7 {
            break;
        }
    }
    let location = (a * b).sqrt();
    Ok(Peak { location, value: f(location)?, bracket: (a, b) })
}
