//! Monte Carlo simulation of the typical UE at the origin.
//!
//! BSs form a Poisson process on a disk. Each link is LoS with probability
//! `Pr^L(r)`, the UE attaches to the BS with the largest gain and every link
//! sees unit-mean Rayleigh power fading.
//!
//! The disk is cut into rings with radii on the lattice `2^(k/4)` km. Each
//! ring of each trial draws from its own ChaCha8 stream keyed by
//! `(seed, ring)` and positioned at `trial_index`, so a trial does not depend
//! on the trial count or on scheduling, and a larger window only appends
//! outer rings to an otherwise identical draw.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

use crate::analytic::{self, CoveragePoint, CoverageProvider, Method};
use crate::error::{Error, Result};
use crate::model::{Branch, NetworkParams, Scenario};
use crate::quad::{self, Tolerance};

/// Ring radii are `2^(k / RINGS_PER_OCTAVE)` km.
const RINGS_PER_OCTAVE: i32 = 4;
/// Everything inside `2^(INNER_RING / RINGS_PER_OCTAVE)` km (about 1 m) is
/// one disk.
const INNER_RING: i32 = -40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    /// Simulation window around the UE; `None` picks
    /// `max(5/√λ, 3·d_last, 2 km)` with `d_last` the outermost model break.
    /// The radius is rounded up to the ring lattice.
    pub disk_radius_km: Option<f64>,
    /// BSs closer than this are redrawn.
    pub min_bs_guard_km: f64,
    /// Redraws allowed per trial when the window comes up empty.
    pub max_empty_resamples: u32,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { trials: 10_000, seed: 1, disk_radius_km: None, min_bs_guard_km: 1e-9, max_empty_resamples: 1000 }
    }
}

impl McConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::MonteCarlo("at least one trial is required".into()));
        }
        if let Some(r) = self.disk_radius_km {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::MonteCarlo(format!("disk radius must be positive, got {r}")));
            }
        }
        if !(self.min_bs_guard_km >= 0.0) {
            return Err(Error::MonteCarlo("guard radius must be non-negative".into()));
        }
        Ok(())
    }

    /// Effective window radius (km) after rounding up to the ring lattice.
    pub fn window_radius(&self, sc: &Scenario, lambda: f64) -> f64 {
        ring_radius(self.outer_ring(sc, lambda))
    }

    fn outer_ring(&self, sc: &Scenario, lambda: f64) -> i32 {
        let wanted = self.disk_radius_km.unwrap_or_else(|| {
            let d_last = sc.splits().last().copied().unwrap_or(0.0);
            (5.0 / lambda.sqrt()).max(3.0 * d_last).max(2.0)
        });
        let k = (wanted.log2() * RINGS_PER_OCTAVE as f64 - 1e-9).ceil() as i32;
        k.max(INNER_RING)
    }
}

fn ring_radius(k: i32) -> f64 {
    2f64.powf(k as f64 / RINGS_PER_OCTAVE as f64)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

/// One BS as seen from the UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub r: f64,
    pub branch: Branch,
    /// Unit-mean exponential power fading.
    pub fading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub sinr: f64,
    pub serving_distance: f64,
    pub serving_branch: Branch,
    /// Times the window came up empty before this draw.
    pub empty_resamples: u32,
}

/// Serving link index and SINR for a fixed layout. The serving BS has the
/// largest gain; ties go to the nearer BS, then to the lower index.
pub fn sinr_of_links(sc: &Scenario, p_tx: f64, n0: f64, links: &[Link]) -> Option<(usize, f64)> {
    let pl = sc.path_loss();
    let mut best: Option<(usize, f64)> = None;
    for (i, l) in links.iter().enumerate() {
        let g = pl.gain(l.r, l.branch);
        best = match best {
            None => Some((i, g)),
            Some((j, bg)) => {
                if g > bg || (g == bg && l.r < links[j].r) {
                    Some((i, g))
                } else {
                    Some((j, bg))
                }
            }
        };
    }
    let (serving, gain) = best?;
    let interference: f64 = links
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != serving)
        .map(|(_, l)| p_tx * pl.gain(l.r, l.branch) * l.fading)
        .sum();
    Some((serving, p_tx * gain * links[serving].fading / (interference + n0)))
}

/// Precomputed per-ring geometry for one density.
struct Rings {
    /// `(ring id, inner radius², outer radius², count law)`.
    rings: Vec<(i32, f64, f64, Poisson<f64>)>,
}

impl Rings {
    fn new(lambda: f64, outer: i32) -> Result<Self> {
        let mut rings = Vec::new();
        let mut inner = 0.0;
        for k in INNER_RING..=outer {
            let r = ring_radius(k);
            let (a, b) = (inner * inner, r * r);
            let mean = lambda * PI * (b - a);
            let law = Poisson::new(mean).map_err(|e| Error::MonteCarlo(format!("Poisson mean {mean}: {e}")))?;
            rings.push((k, a, b, law));
            inner = r;
        }
        Ok(Self { rings })
    }
}

fn ring_rng(seed: u64, ring: i32, trial: u64) -> ChaCha8Rng {
    let key = seed ^ ((ring - INNER_RING) as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial);
    rng
}

fn draw_layout(sc: &Scenario, rings: &Rings, cfg: &McConfig, trial: u64, links: &mut Vec<Link>) -> Result<u32> {
    let mut streams: Vec<ChaCha8Rng> = rings.rings.iter().map(|&(k, ..)| ring_rng(cfg.seed, k, trial)).collect();
    let mut empty = 0;
    loop {
        links.clear();
        for ((_, a, b, law), rng) in rings.rings.iter().zip(streams.iter_mut()) {
            let count = law.sample(rng) as u64;
            for _ in 0..count {
                let r = loop {
                    let u: f64 = rng.random();
                    let r = (a + u * (b - a)).sqrt();
                    if r >= cfg.min_bs_guard_km && r > 0.0 {
                        break r;
                    }
                };
                let los = rng.random::<f64>() < sc.los().prob(r);
                let fading: f64 = Exp1.sample(rng);
                links.push(Link { r, branch: if los { Branch::Los } else { Branch::Nlos }, fading });
            }
        }
        if !links.is_empty() {
            return Ok(empty);
        }
        empty += 1;
        if empty > cfg.max_empty_resamples {
            return Err(Error::MonteCarlo(format!(
                "window was empty {empty} times in trial {trial}; use a larger disk radius"
            )));
        }
    }
}

fn check_inputs(params: &NetworkParams, cfg: &McConfig) -> Result<()> {
    cfg.validate()?;
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !ok(params.lambda) || !ok(params.p_tx) || !(params.n0 >= 0.0) {
        return Err(Error::InvalidParams(format!("invalid simulation parameters {params:?}")));
    }
    Ok(())
}

fn trial_with(sc: &Scenario, params: &NetworkParams, cfg: &McConfig, rings: &Rings, trial: u64, links: &mut Vec<Link>) -> Result<TrialOutcome> {
    let empty_resamples = draw_layout(sc, rings, cfg, trial, links)?;
    let (serving, sinr) = sinr_of_links(sc, params.p_tx, params.n0, links).expect("layout is non-empty");
    Ok(TrialOutcome { sinr, serving_distance: links[serving].r, serving_branch: links[serving].branch, empty_resamples })
}

/// Full outcome of trial `trial_index`. `params.gamma` is not used.
pub fn simulate_trial(sc: &Scenario, params: &NetworkParams, cfg: &McConfig, trial_index: u64) -> Result<TrialOutcome> {
    check_inputs(params, cfg)?;
    let rings = Rings::new(params.lambda, cfg.outer_ring(sc, params.lambda))?;
    trial_with(sc, params, cfg, &rings, trial_index, &mut Vec::new())
}

/// SINR of trial `trial_index` (linear).
pub fn simulate_sinr(sc: &Scenario, params: &NetworkParams, cfg: &McConfig, trial_index: u64) -> Result<f64> {
    Ok(simulate_trial(sc, params, cfg, trial_index)?.sinr)
}

/// All `cfg.trials` outcomes in trial order.
pub fn simulate_trials(sc: &Scenario, params: &NetworkParams, cfg: &McConfig) -> Result<Vec<TrialOutcome>> {
    check_inputs(params, cfg)?;
    let rings = Rings::new(params.lambda, cfg.outer_ring(sc, params.lambda))?;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map_init(Vec::new, |links, t| trial_with(sc, params, cfg, &rings, t, links))
        .collect()
}

/// Fraction of outcomes with SINR above `gamma`.
pub fn coverage_from_outcomes(outcomes: &[TrialOutcome], gamma: f64, seed: u64) -> Result<McEstimate> {
    let sinr: Vec<f64> = outcomes.iter().map(|o| o.sinr).collect();
    coverage_from_sinr(&sinr, gamma, seed)
}

pub fn coverage_from_sinr(sinr: &[f64], gamma: f64, seed: u64) -> Result<McEstimate> {
    if sinr.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = sinr.len() as f64;
    let hits = sinr.iter().filter(|&&s| s > gamma).count() as f64;
    let mean = hits / n;
    let std_error = if sinr.len() > 1 { (mean * (1.0 - mean) / (n - 1.0)).sqrt() } else { 0.0 };
    Ok(McEstimate { mean, std_error, trials: sinr.len(), seed })
}

/// Empirical coverage probability at `params.gamma` (which may be 0).
pub fn estimate_coverage(sc: &Scenario, params: &NetworkParams, cfg: &McConfig) -> Result<McEstimate> {
    let outcomes = simulate_trials(sc, params, cfg)?;
    coverage_from_outcomes(&outcomes, params.gamma, cfg.seed)
}

/// Simulation bound to a scenario, powers and configuration.
#[derive(Debug, Clone)]
pub struct MonteCarloEngine {
    pub scenario: Scenario,
    pub p_tx: f64,
    pub n0: f64,
    pub config: McConfig,
}

impl MonteCarloEngine {
    pub fn new(scenario: Scenario, p_tx: f64, n0: f64, config: McConfig) -> Self {
        Self { scenario, p_tx, n0, config }
    }

    /// SINR samples at density `lambda`.
    pub fn sinr_samples(&self, lambda: f64) -> Result<Vec<f64>> {
        let params = NetworkParams { lambda, p_tx: self.p_tx, n0: self.n0, gamma: 1.0 };
        Ok(simulate_trials(&self.scenario, &params, &self.config)?.into_iter().map(|o| o.sinr).collect())
    }
}

impl CoverageProvider for MonteCarloEngine {
    fn method(&self) -> Method {
        Method::MonteCarlo
    }

    fn coverage(&self, lambda: f64, gamma: f64) -> Result<CoveragePoint> {
        let est = coverage_from_sinr(&self.sinr_samples(lambda)?, gamma, self.config.seed)?;
        Ok(CoveragePoint { lambda, gamma, p_cov: est.mean, method: Method::MonteCarlo, abs_error_est: est.std_error })
    }
}

/// Normalized histogram of the serving distance split by branch.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationHistogram {
    pub r_max: f64,
    pub bin_width: f64,
    /// Density (1/km) per bin for LoS-served trials.
    pub los: Vec<f64>,
    pub nlos: Vec<f64>,
    /// Fraction of trials served from beyond `r_max`.
    pub overflow: f64,
    pub trials: usize,
}

impl AssociationHistogram {
    pub fn bins(&self) -> usize {
        self.los.len()
    }

    /// Total probability mass, including the overflow.
    pub fn total_mass(&self) -> f64 {
        self.los.iter().chain(&self.nlos).sum::<f64>() * self.bin_width + self.overflow
    }

    /// Largest deviation between the histogram and the bin averages of the
    /// analytic densities, over both branches, and the peak of the analytic
    /// total density (also bin-averaged).
    pub fn sup_deviation(&self, sc: &Scenario, lambda: f64) -> Result<(f64, f64)> {
        let mut worst = 0.0f64;
        let mut peak = 0.0f64;
        for i in 0..self.bins() {
            let lo = i as f64 * self.bin_width;
            let hi = lo + self.bin_width;
            let points = quad::panel_points(lo, hi, sc.splits().iter().copied());
            let mut avg = [0.0; 2];
            for (slot, branch) in avg.iter_mut().zip(Branch::BOTH) {
                let q = quad::integrate_points(
                    |r| if r > 0.0 { analytic::pdf_distance_branch(sc, lambda, branch, r).unwrap_or(f64::NAN) } else { 0.0 },
                    &points,
                    Tolerance::new(1e-10, 1e-8),
                )?;
                *slot = q.value / self.bin_width;
            }
            worst = worst.max((self.los[i] - avg[0]).abs()).max((self.nlos[i] - avg[1]).abs());
            peak = peak.max(avg[0] + avg[1]);
        }
        Ok((worst, peak))
    }
}

/// Histogram of the serving distance over `bins` bins on `[0, r_max]` with
/// `r_max = √(ln 10⁶ / (πλ))`, beyond which the nearest BS alone lies with
/// probability 10⁻⁶.
pub fn estimate_association_pdf(sc: &Scenario, params: &NetworkParams, cfg: &McConfig, bins: usize) -> Result<AssociationHistogram> {
    if bins < 2 {
        return Err(Error::MonteCarlo(format!("need at least 2 bins, got {bins}")));
    }
    let outcomes = simulate_trials(sc, params, cfg)?;
    let r_max = (1e6f64.ln() / (PI * params.lambda)).sqrt();
    let width = r_max / bins as f64;
    let mut los = vec![0u64; bins];
    let mut nlos = vec![0u64; bins];
    let mut overflow = 0u64;
    for o in &outcomes {
        let idx = (o.serving_distance / width) as usize;
        if idx >= bins {
            overflow += 1;
            continue;
        }
        match o.serving_branch {
            Branch::Los => los[idx] += 1,
            Branch::Nlos => nlos[idx] += 1,
        }
    }
    let n = outcomes.len() as f64;
    let density = |c: &Vec<u64>| c.iter().map(|&k| k as f64 / (n * width)).collect::<Vec<_>>();
    Ok(AssociationHistogram {
        r_max,
        bin_width: width,
        los: density(&los),
        nlos: density(&nlos),
        overflow: overflow as f64 / n,
        trials: outcomes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    fn net(lambda: f64) -> NetworkParams {
        Preset::Case1.network(lambda, 0.0).unwrap()
    }

    #[test]
    fn single_bs_has_noise_limited_sinr() {
        let sc = Preset::Case1.scenario();
        let links = [Link { r: 0.1, branch: Branch::Los, fading: 0.7 }];
        let (i, s) = sinr_of_links(&sc, 2.0, 1e-9, &links).unwrap();
        let expected = 2.0 * sc.path_loss().gain(0.1, Branch::Los) * 0.7 / 1e-9;
        assert_eq!(i, 0);
        assert_eq!(s, expected);
    }

    #[test]
    fn strongest_not_nearest_serves() {
        let sc = Preset::Case1.scenario();
        let links = [
            Link { r: 0.02, branch: Branch::Nlos, fading: 1.0 },
            Link { r: 0.05, branch: Branch::Los, fading: 1.0 },
        ];
        let (i, _) = sinr_of_links(&sc, 1.0, 1e-12, &links).unwrap();
        assert_eq!(i, 1);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let sc = Preset::Case1.scenario();
        let l = Link { r: 0.05, branch: Branch::Los, fading: 1.0 };
        assert_eq!(sinr_of_links(&sc, 1.0, 1.0, &[l, l]).unwrap().0, 0);
        assert!(sinr_of_links(&sc, 1.0, 1.0, &[]).is_none());
    }

    #[test]
    fn huge_noise_drives_sinr_to_zero() {
        let sc = Preset::Case1.scenario();
        let mut p = net(10.0);
        p.n0 = 1e30;
        assert!(simulate_sinr(&sc, &p, &McConfig::new(1, 3), 0).unwrap() < 1e-20);
    }

    #[test]
    fn trials_do_not_depend_on_trial_count() {
        let sc = Preset::Case2.scenario();
        let a = simulate_trials(&sc, &net(30.0), &McConfig::new(50, 9)).unwrap();
        let b = simulate_trials(&sc, &net(30.0), &McConfig::new(20, 9)).unwrap();
        assert_eq!(&a[..20], &b[..]);
        assert_eq!(a[17], simulate_trial(&sc, &net(30.0), &McConfig::new(1, 9), 17).unwrap());
    }

    #[test]
    fn larger_window_keeps_inner_draw() {
        let sc = Preset::Case1.scenario();
        let small = McConfig { disk_radius_km: Some(1.0), ..McConfig::new(1, 4) };
        let big = McConfig { disk_radius_km: Some(2.0), ..small };
        for t in 0..20 {
            let a = simulate_trial(&sc, &net(20.0), &small, t).unwrap();
            let b = simulate_trial(&sc, &net(20.0), &big, t).unwrap();
            assert_eq!(a.serving_distance, b.serving_distance);
            assert!(b.sinr <= a.sinr);
        }
    }

    #[test]
    fn window_radius_on_lattice() {
        let sc = Preset::Case1.scenario();
        let cfg = McConfig::default();
        assert_eq!(cfg.window_radius(&sc, 100.0), 2.0);
        let w = cfg.window_radius(&sc, 0.1);
        assert!(w >= 5.0 / 0.1f64.sqrt() && w < 5.0 / 0.1f64.sqrt() * 2f64.powf(0.25));
    }

    #[test]
    fn zero_threshold_always_covered() {
        let sc = Preset::Case1.scenario();
        let mut p = net(10.0);
        p.gamma = 0.0;
        assert_eq!(estimate_coverage(&sc, &p, &McConfig::new(200, 1)).unwrap().mean, 1.0);
        p.gamma = 1e30;
        assert_eq!(estimate_coverage(&sc, &p, &McConfig::new(200, 1)).unwrap().mean, 0.0);
    }

    #[test]
    fn empty_window_budget_reported() {
        let sc = Preset::Case1.scenario();
        let cfg = McConfig { disk_radius_km: Some(0.001), max_empty_resamples: 3, ..McConfig::new(1, 1) };
        assert!(matches!(simulate_trial(&sc, &net(0.01), &cfg, 0), Err(Error::MonteCarlo(_))));
    }

    #[test]
    fn invalid_config_rejected() {
        let sc = Preset::Case1.scenario();
        assert!(estimate_coverage(&sc, &net(1.0), &McConfig::new(0, 1)).is_err());
        assert!(estimate_association_pdf(&sc, &net(1.0), &McConfig::new(10, 1), 1).is_err());
    }

    #[test]
    fn histogram_basics() {
        let sc = Preset::SingleSlope.scenario();
        let h = estimate_association_pdf(&sc, &net(100.0), &McConfig::new(2000, 5), 20).unwrap();
        assert!(h.los.iter().all(|&d| d == 0.0));
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_los_fraction_follows_probability() {
        // Among all BSs of a drop, the LoS share in a distance band matches
        // Pr^L there.
        let sc = Preset::Case1.scenario();
        let rings = Rings::new(200.0, 0).unwrap();
        let cfg = McConfig::new(1, 11);
        let (mut los, mut all) = (0u64, 0u64);
        let mut links = Vec::new();
        for t in 0..40 {
            draw_layout(&sc, &rings, &cfg, t, &mut links).unwrap();
            for l in links.iter().filter(|l| (0.1..0.2).contains(&l.r)) {
                all += 1;
                los += (l.branch == Branch::Los) as u64;
            }
        }
        // band average of 1 - r/0.3 over area: ∫ (1-r/0.3) r dr / ∫ r dr
        let expected = 1.0 - (2.0 / 3.0) * (0.2f64.powi(3) - 0.1f64.powi(3)) / (0.3 * (0.2f64.powi(2) - 0.1f64.powi(2)));
        let p = los as f64 / all as f64;
        let se = (expected * (1.0 - expected) / all as f64).sqrt();
        assert!((p - expected).abs() < 4.0 * se, "{p} vs {expected} (n={all})");
    }
}
