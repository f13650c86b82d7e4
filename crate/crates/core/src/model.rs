//! Piecewise LoS/NLoS path loss and the LoS probability families.
//!
//! Distances are in km, powers in linear mW and gains are dimensionless.
//! Every piecewise function uses the same membership rule: a break distance
//! belongs to the piece below it, so piece `n` covers `(d_{n-1}, d_n]` and the
//! first piece also owns `r = 0`.

use std::f64::consts::LN_10;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

/// Propagation branch of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Los,
    Nlos,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Los, Branch::Nlos];

    pub fn other(self) -> Branch {
        match self {
            Branch::Los => Branch::Nlos,
            Branch::Nlos => Branch::Los,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Los => "los",
            Branch::Nlos => "nlos",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `gain * r^(-exponent)`: the path loss of one branch on one segment,
/// with `gain` the linear path loss at the 1 km reference distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub gain: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub const fn new(gain: f64, exponent: f64) -> Self {
        Self { gain, exponent }
    }

    /// Builds from a reference loss in dB, e.g. `-103.8` for `10^-10.38`.
    pub fn from_db(gain_db: f64, exponent: f64) -> Self {
        Self::new(db_to_linear(gain_db), exponent)
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        self.gain * r.powf(-self.exponent)
    }

    /// Distance at which this law reaches `target`.
    #[inline]
    pub fn inverse(&self, target: f64) -> f64 {
        (self.gain / target).powf(1.0 / self.exponent)
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::InvalidModel(format!("{what} gain must be positive, got {}", self.gain)));
        }
        if !(self.exponent.is_finite() && self.exponent > 0.0) {
            return Err(Error::InvalidModel(format!(
                "{what} exponent must be positive, got {}",
                self.exponent
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossSegment {
    pub start_km: f64,
    /// `f64::INFINITY` for the last segment.
    pub end_km: f64,
    pub los: PowerLaw,
    pub nlos: PowerLaw,
}

impl PathLossSegment {
    #[inline]
    pub fn law(&self, branch: Branch) -> &PowerLaw {
        match branch {
            Branch::Los => &self.los,
            Branch::Nlos => &self.nlos,
        }
    }
}

/// Ordered segments tiling `(0, ∞)`, each with a LoS and a NLoS power law.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossModel {
    segments: Vec<PathLossSegment>,
}

impl PathLossModel {
    pub fn new(segments: Vec<PathLossSegment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidModel("at least one segment is required".into()));
        };
        if first.start_km != 0.0 {
            return Err(Error::InvalidModel("the first segment must start at 0 km".into()));
        }
        if segments.last().map(|s| s.end_km) != Some(f64::INFINITY) {
            return Err(Error::InvalidModel("the last segment must extend to infinity".into()));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.start_km < seg.end_km) {
                return Err(Error::InvalidModel(format!(
                    "segment {i} is empty: [{}, {}]",
                    seg.start_km, seg.end_km
                )));
            }
            seg.los.validate("LoS")?;
            seg.nlos.validate("NLoS")?;
            if seg.nlos.exponent < seg.los.exponent {
                return Err(Error::InvalidModel(format!(
                    "segment {i}: NLoS exponent {} is below the LoS exponent {}",
                    seg.nlos.exponent, seg.los.exponent
                )));
            }
            if let Some(next) = segments.get(i + 1) {
                if next.start_km != seg.end_km {
                    return Err(Error::InvalidModel(format!(
                        "segments {i} and {} do not meet ({} vs {})",
                        i + 1,
                        seg.end_km,
                        next.start_km
                    )));
                }
                // The equal-loss radii are only well defined when each
                // stacked branch is non-increasing across the breaks.
                for b in Branch::BOTH {
                    let below = seg.law(b).eval(seg.end_km);
                    let above = next.law(b).eval(seg.end_km);
                    if above > below * (1.0 + 1e-12) {
                        return Err(Error::InvalidModel(format!(
                            "{b} path loss jumps upward at {} km",
                            seg.end_km
                        )));
                    }
                }
            }
        }
        Ok(Self { segments })
    }

    /// One segment covering all distances.
    pub fn uniform(los: PowerLaw, nlos: PowerLaw) -> Result<Self> {
        Self::new(vec![PathLossSegment { start_km: 0.0, end_km: f64::INFINITY, los, nlos }])
    }

    /// Segments from interior break distances `d_1 < … < d_{N-1}` and `N`
    /// (LoS, NLoS) law pairs.
    pub fn from_breaks(breaks: &[f64], laws: &[(PowerLaw, PowerLaw)]) -> Result<Self> {
        if laws.len() != breaks.len() + 1 {
            return Err(Error::InvalidModel(format!(
                "{} breaks need {} law pairs, got {}",
                breaks.len(),
                breaks.len() + 1,
                laws.len()
            )));
        }
        let mut edges = Vec::with_capacity(breaks.len() + 2);
        edges.push(0.0);
        edges.extend_from_slice(breaks);
        edges.push(f64::INFINITY);
        let segments = laws
            .iter()
            .enumerate()
            .map(|(i, &(los, nlos))| PathLossSegment { start_km: edges[i], end_km: edges[i + 1], los, nlos })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[PathLossSegment] {
        &self.segments
    }

    /// Interior break distances.
    pub fn breaks(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments[..self.segments.len() - 1].iter().map(|s| s.end_km)
    }

    /// Index of the segment owning `r`.
    pub fn segment_index(&self, r: f64) -> usize {
        self.segments
            .iter()
            .position(|s| r <= s.end_km)
            .unwrap_or(self.segments.len() - 1)
    }

    #[inline]
    pub(crate) fn segment_at(&self, r: f64) -> &PathLossSegment {
        if self.segments.len() == 1 {
            &self.segments[0]
        } else {
            &self.segments[self.segment_index(r)]
        }
    }

    /// Linear gain `ζ^branch(r)`.
    pub fn path_loss(&self, r: f64, branch: Branch) -> Result<f64> {
        if !(r > 0.0) || r.is_nan() {
            return Err(Error::Domain(format!("path loss needs r > 0, got {r}")));
        }
        Ok(self.gain(r, branch))
    }

    #[inline]
    pub(crate) fn gain(&self, r: f64, branch: Branch) -> f64 {
        self.segment_at(r).law(branch).eval(r)
    }

    /// Returns a copy with every LoS exponent replaced.
    pub fn with_los_exponent(&self, exponent: f64) -> Result<Self> {
        let segments = self
            .segments
            .iter()
            .map(|s| PathLossSegment { los: PowerLaw::new(s.los.gain, exponent), ..*s })
            .collect();
        Self::new(segments)
    }

    /// Distance at which the opposite branch matches the loss of a `from`
    /// link of length `r`.
    ///
    /// With `from = Los` this is `r₁` (`ζ^NL(r₁) = ζ^L(r)`), with
    /// `from = Nlos` it is `r₂`. Each segment is inverted in closed form.
    /// When the target falls inside a downward jump of the stacked branch the
    /// break distance is returned, which is the supremum of the distances
    /// where the opposite branch is at least as strong. `0.0` is returned if
    /// the target exceeds every value and `f64::INFINITY` if it is below all.
    pub fn equal_loss_radius(&self, r: f64, from: Branch) -> Result<f64> {
        let target = self.path_loss(r, from)?;
        Ok(self.radius_for_gain(target, from.other()))
    }

    /// `sup { x > 0 : ζ^branch(x) ≥ target }`.
    pub(crate) fn radius_for_gain(&self, target: f64, branch: Branch) -> f64 {
        if !(target > 0.0) {
            return f64::INFINITY;
        }
        if target.is_infinite() {
            return 0.0;
        }
        for seg in self.segments.iter().rev() {
            let law = seg.law(branch);
            let top = if seg.start_km == 0.0 { f64::INFINITY } else { law.eval(seg.start_km) };
            if top >= target {
                return law.inverse(target).clamp(seg.start_km, seg.end_km);
            }
        }
        0.0
    }

    /// Same quantity as [`equal_loss_radius`](Self::equal_loss_radius), found
    /// by bisection on the stacked branch without using the power-law
    /// inverse.
    pub fn equal_loss_radius_bisect(&self, r: f64, from: Branch) -> Result<f64> {
        let target = self.path_loss(r, from)?;
        let other = from.other();
        let stronger = |x: f64| self.gain(x, other) >= target;
        let mut hi = 1.0;
        while stronger(hi) {
            hi *= 2.0;
            if hi > 1e15 {
                return Ok(f64::INFINITY);
            }
        }
        let mut lo = hi;
        while !stronger(lo) {
            lo *= 0.5;
            if lo < 1e-300 {
                return Ok(0.0);
            }
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if stronger(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// LoS probability `Pr^L(r)` as a function of link distance.
#[derive(Debug, Clone, PartialEq)]
pub enum LosProbability {
    /// `1 - r/cutoff` up to the cutoff, zero beyond.
    Linear { cutoff_km: f64 },
    /// `0.5 - min(0.5, 5 exp(-r1/r)) + min(0.5, 5 exp(-r/r2))`; its first
    /// kink sits at `r1 / ln 10` where the value is exactly one half.
    TwoPieceExp { r1_km: f64, r2_km: f64 },
    /// Straight lines between `(distance, probability)` knots, held constant
    /// before the first knot and after the last.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    AlwaysNlos,
}

impl LosProbability {
    pub fn validate(&self) -> Result<()> {
        match self {
            LosProbability::Linear { cutoff_km } => {
                if !(cutoff_km.is_finite() && *cutoff_km > 0.0) {
                    return Err(Error::InvalidModel(format!("linear cutoff must be positive, got {cutoff_km}")));
                }
            }
            LosProbability::TwoPieceExp { r1_km, r2_km } => {
                if !(r1_km.is_finite() && *r1_km > 0.0 && r2_km.is_finite() && *r2_km > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "exponential shape parameters must be positive, got {r1_km}, {r2_km}"
                    )));
                }
            }
            LosProbability::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err(Error::InvalidModel("piecewise-linear LoS needs at least one knot".into()));
                }
                for &(d, p) in knots {
                    if !(d.is_finite() && d >= 0.0) {
                        return Err(Error::InvalidModel(format!("knot distance {d} is invalid")));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidModel(format!("knot probability {p} is outside [0, 1]")));
                    }
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidModel("knot distances must be strictly increasing".into()));
                }
            }
            LosProbability::AlwaysNlos => {}
        }
        Ok(())
    }

    /// `Pr^L(r)`.
    pub fn probability(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("LoS probability needs r >= 0, got {r}")));
        }
        Ok(self.prob(r))
    }

    #[inline]
    pub(crate) fn prob(&self, r: f64) -> f64 {
        match self {
            LosProbability::Linear { cutoff_km } => {
                if r <= *cutoff_km {
                    1.0 - r / cutoff_km
                } else {
                    0.0
                }
            }
            LosProbability::TwoPieceExp { r1_km, r2_km } => {
                let near = (5.0 * (-r1_km / r).exp()).min(0.5);
                let far = (5.0 * (-r / r2_km).exp()).min(0.5);
                (0.5 - near + far).clamp(0.0, 1.0)
            }
            LosProbability::PiecewiseLinear { knots } => piecewise_linear(knots, r),
            LosProbability::AlwaysNlos => 0.0,
        }
    }

    /// Distances where the function has a kink or a jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            LosProbability::Linear { cutoff_km } => vec![*cutoff_km],
            LosProbability::TwoPieceExp { r1_km, r2_km } => {
                let mut v = vec![r1_km / LN_10, r2_km * LN_10];
                v.sort_by(f64::total_cmp);
                v
            }
            LosProbability::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).filter(|&d| d > 0.0).collect(),
            LosProbability::AlwaysNlos => Vec::new(),
        }
    }

    /// Probability that holds for all distances beyond the last breakpoint
    /// in the limit `r → ∞`.
    pub fn tail_probability(&self) -> f64 {
        match self {
            LosProbability::PiecewiseLinear { knots } => knots.last().map(|k| k.1).unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// `∫₀^x Pr^L(u) u du` when it has a polynomial closed form.
    fn exact_moment(&self, x: f64) -> Option<f64> {
        match self {
            LosProbability::Linear { cutoff_km } => {
                let y = x.min(*cutoff_km);
                Some(y * y / 2.0 - y * y * y / (3.0 * cutoff_km))
            }
            LosProbability::PiecewiseLinear { knots } => Some(piecewise_linear_moment(knots, x)),
            LosProbability::AlwaysNlos => Some(0.0),
            LosProbability::TwoPieceExp { .. } => None,
        }
    }
}

fn piecewise_linear(knots: &[(f64, f64)], r: f64) -> f64 {
    let (d0, p0) = knots[0];
    if r <= d0 {
        return p0;
    }
    for w in knots.windows(2) {
        let (da, pa) = w[0];
        let (db, pb) = w[1];
        if r <= db {
            return pa + (pb - pa) * (r - da) / (db - da);
        }
    }
    knots[knots.len() - 1].1
}

/// ∫₀^x p(u) u du for the piecewise-linear p.
fn piecewise_linear_moment(knots: &[(f64, f64)], x: f64) -> f64 {
    // ∫_a^b (c0 + c1 u) u du
    let poly = |c0: f64, c1: f64, a: f64, b: f64| c0 * (b * b - a * a) / 2.0 + c1 * (b * b * b - a * a * a) / 3.0;
    let (d0, p0) = knots[0];
    let mut acc = poly(p0, 0.0, 0.0, x.min(d0));
    if x <= d0 {
        return acc;
    }
    for w in knots.windows(2) {
        let (da, pa) = w[0];
        let (db, pb) = w[1];
        let slope = (pb - pa) / (db - da);
        let hi = x.min(db);
        acc += poly(pa - slope * da, slope, da, hi);
        if x <= db {
            return acc;
        }
    }
    let (dl, pl) = knots[knots.len() - 1];
    acc + poly(pl, 0.0, dl, x)
}

/// Cumulative `∫₀^x Pr^L(u) u du` for families without a polynomial form:
/// values at fixed nodes are computed once, queries add a short adaptive
/// integral from the nearest node below.
#[derive(Debug, Clone)]
struct MomentTable {
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

const MOMENT_TOL: Tolerance = Tolerance::new(1e-16, 1e-13);

impl MomentTable {
    fn build(los: &LosProbability) -> Result<Self> {
        // Geometric grid from 1 m to the distance where Pr^L underflows.
        let far = match los {
            LosProbability::TwoPieceExp { r1_km, r2_km } => (r2_km * (5f64.ln() + 746.0)).max(r1_km / LN_10) * 1.01,
            _ => 100.0,
        };
        let mut nodes = vec![0.0];
        let mut d = 1e-3;
        while d < far {
            nodes.push(d);
            d *= 10f64.powf(1.0 / 16.0);
        }
        nodes.push(far);
        nodes.extend(los.breakpoints());
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in nodes.windows(2) {
            acc += quad::integrate(|u| los.prob(u) * u, w[0], w[1], MOMENT_TOL)?.value;
            cumulative.push(acc);
        }
        Ok(Self { nodes, cumulative })
    }

    fn eval(&self, los: &LosProbability, x: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if x >= self.nodes[last] {
            // Pr^L has underflowed to zero out here.
            return self.cumulative[last];
        }
        let k = self.nodes.partition_point(|&n| n <= x) - 1;
        let base = self.nodes[k];
        if x == base {
            return self.cumulative[k];
        }
        let tail = quad::integrate(|u| los.prob(u) * u, base, x, MOMENT_TOL)
            .map(|i| i.value)
            .unwrap_or_else(|_| 0.5 * (los.prob(base) * base + los.prob(x) * x) * (x - base));
        self.cumulative[k] + tail
    }
}

/// A path loss model paired with a LoS probability function: everything the
/// coverage engines need to describe the propagation environment.
#[derive(Debug, Clone)]
pub struct Scenario {
    path_loss: PathLossModel,
    los: LosProbability,
    table: Option<MomentTable>,
    splits: Vec<f64>,
}

impl Scenario {
    pub fn new(path_loss: PathLossModel, los: LosProbability) -> Result<Self> {
        los.validate()?;
        let table = match los.exact_moment(1.0) {
            Some(_) => None,
            None => Some(MomentTable::build(&los)?),
        };
        let mut splits: Vec<f64> = path_loss.breaks().chain(los.breakpoints()).collect();
        splits.sort_by(f64::total_cmp);
        splits.dedup();
        Ok(Self { path_loss, los, table, splits })
    }

    pub fn path_loss(&self) -> &PathLossModel {
        &self.path_loss
    }

    pub fn los(&self) -> &LosProbability {
        &self.los
    }

    /// Union of the path loss breaks and the LoS probability breakpoints.
    pub fn splits(&self) -> &[f64] {
        &self.splits
    }

    /// `∫₀^x Pr^L(u) u du`.
    pub fn los_moment(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match &self.table {
            None => self.los.exact_moment(x).unwrap_or(0.0),
            Some(t) => t.eval(&self.los, x),
        }
    }

    /// `∫₀^x (1 - Pr^L(u)) u du`.
    pub fn nlos_moment(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        if x.is_infinite() {
            return f64::INFINITY;
        }
        (x * x / 2.0 - self.los_moment(x)).max(0.0)
    }

    pub(crate) fn moment(&self, x: f64, branch: Branch) -> f64 {
        match branch {
            Branch::Los => self.los_moment(x),
            Branch::Nlos => self.nlos_moment(x),
        }
    }

    /// Probability that a link of length `r` is on `branch`.
    #[inline]
    pub(crate) fn branch_prob(&self, r: f64, branch: Branch) -> f64 {
        let p = self.los.prob(r);
        match branch {
            Branch::Los => p,
            Branch::Nlos => 1.0 - p,
        }
    }

    /// Replaces every LoS exponent.
    pub fn with_los_exponent(&self, exponent: f64) -> Result<Self> {
        Self::new(self.path_loss.with_los_exponent(exponent)?, self.los.clone())
    }

    /// Interference stays finite only if every branch that persists to
    /// infinity decays faster than `r^-2`.
    pub(crate) fn check_interference_finite(&self) -> Result<()> {
        let last = self.path_loss.segments().last().expect("non-empty");
        let p_tail = self.los.tail_probability();
        if p_tail > 0.0 && last.los.exponent <= 2.0 {
            return Err(Error::InvalidModel(format!(
                "LoS exponent {} <= 2 with LoS probability {p_tail} at infinity: interference diverges",
                last.los.exponent
            )));
        }
        if p_tail < 1.0 && last.nlos.exponent <= 2.0 {
            return Err(Error::InvalidModel(format!(
                "NLoS exponent {} <= 2 at infinity: interference diverges",
                last.nlos.exponent
            )));
        }
        Ok(())
    }
}

/// Density, powers and SINR threshold, all linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// BSs per km².
    pub lambda: f64,
    /// mW.
    pub p_tx: f64,
    /// mW.
    pub n0: f64,
    pub gamma: f64,
}

impl NetworkParams {
    pub fn new(lambda: f64, p_tx: f64, n0: f64, gamma: f64) -> Result<Self> {
        let p = Self { lambda, p_tx, n0, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn from_db(lambda: f64, p_tx_dbm: f64, n0_dbm: f64, gamma_db: f64) -> Result<Self> {
        Self::new(lambda, db_to_linear(p_tx_dbm), db_to_linear(n0_dbm), db_to_linear(gamma_db))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.lambda) {
            return Err(Error::InvalidParams(format!("BS density must be positive, got {}", self.lambda)));
        }
        if !ok(self.p_tx) {
            return Err(Error::InvalidParams(format!("transmit power must be positive, got {}", self.p_tx)));
        }
        if !ok(self.n0) {
            return Err(Error::InvalidParams(format!("noise power must be positive, got {}", self.n0)));
        }
        if !(self.gamma > 0.0) || self.gamma.is_nan() {
            return Err(Error::InvalidParams(format!("SINR threshold must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Reference parameters of the small-cell study.
pub mod reference {
    pub const D1_KM: f64 = 0.3;
    pub const LOS_GAIN_DB: f64 = -103.8;
    pub const LOS_EXPONENT: f64 = 2.09;
    pub const NLOS_GAIN_DB: f64 = -145.4;
    pub const NLOS_EXPONENT: f64 = 3.75;
    pub const P_TX_DBM: f64 = 24.0;
    pub const N0_DBM: f64 = -95.0;
    pub const EXP_R1_KM: f64 = 0.156;
    pub const EXP_R2_KM: f64 = 0.03;
    pub const APPROX_D1_KM: f64 = 0.0184;
    pub const APPROX_D2_KM: f64 = 0.1171;
}

/// Named scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Two power laws with a linear LoS probability over 0.3 km.
    Case1,
    /// Two power laws with the two-piece exponential LoS probability.
    Case2,
    /// Case 2 with its LoS probability replaced by a 3-knot linear fit.
    ApproxCase2,
    /// Single NLoS power law with exponent 3.75, no LoS links.
    SingleSlope,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Case1, Preset::Case2, Preset::ApproxCase2, Preset::SingleSlope];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Case1 => "case1",
            Preset::Case2 => "case2",
            Preset::ApproxCase2 => "approx-case2",
            Preset::SingleSlope => "single-slope",
        }
    }

    pub fn path_loss(self) -> PathLossModel {
        use reference::*;
        PathLossModel::uniform(
            PowerLaw::from_db(LOS_GAIN_DB, LOS_EXPONENT),
            PowerLaw::from_db(NLOS_GAIN_DB, NLOS_EXPONENT),
        )
        .expect("reference path loss is valid")
    }

    pub fn los_probability(self) -> LosProbability {
        use reference::*;
        match self {
            Preset::Case1 => LosProbability::Linear { cutoff_km: D1_KM },
            Preset::Case2 => LosProbability::TwoPieceExp { r1_km: EXP_R1_KM, r2_km: EXP_R2_KM },
            Preset::ApproxCase2 => LosProbability::PiecewiseLinear {
                knots: vec![(APPROX_D1_KM, 1.0), (APPROX_D2_KM, 0.0)],
            },
            Preset::SingleSlope => LosProbability::AlwaysNlos,
        }
    }

    pub fn scenario(self) -> Scenario {
        Scenario::new(self.path_loss(), self.los_probability()).expect("presets are valid")
    }

    /// Reference powers with the given density and threshold (dB).
    pub fn network(self, lambda: f64, gamma_db: f64) -> Result<NetworkParams> {
        NetworkParams::from_db(lambda, reference::P_TX_DBM, reference::N0_DBM, gamma_db)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}' (expected case1, case2, approx-case2 or single-slope)")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn case1() -> PathLossModel {
        Preset::Case1.path_loss()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn linear_los_examples() {
        let f = LosProbability::Linear { cutoff_km: 0.3 };
        assert_eq!(f.probability(0.3).unwrap(), 0.0);
        assert!((f.probability(0.15).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(f.probability(0.0).unwrap(), 1.0);
        assert_eq!(f.probability(1.0).unwrap(), 0.0);
    }

    #[test]
    fn two_piece_exp_examples() {
        let f = Preset::Case2.los_probability();
        let d1 = 0.156 / LN_10;
        assert!((f.probability(d1).unwrap() - 0.5).abs() < 1e-12);
        // continuity across the first kink
        assert!((f.probability(d1 * (1.0 + 1e-9)).unwrap() - 0.5).abs() < 1e-8);
        assert!((f.probability(0.0184).unwrap() - 0.999).abs() < 5e-4);
        assert_eq!(f.probability(0.0).unwrap(), 1.0);
    }

    #[test]
    fn approx_case2_passes_through_midpoint() {
        let f = Preset::ApproxCase2.los_probability();
        let p = f.probability(0.156 / LN_10).unwrap();
        assert!((p - 0.5).abs() < 1e-3, "{p}");
        assert_eq!(f.probability(0.01).unwrap(), 1.0);
        assert_eq!(f.probability(0.2).unwrap(), 0.0);
    }

    #[test]
    fn negative_distance_is_domain_error() {
        let f = LosProbability::AlwaysNlos;
        assert!(matches!(f.probability(-1e-3), Err(Error::Domain(_))));
    }

    #[test]
    fn break_point_belongs_to_lower_piece() {
        let f = LosProbability::PiecewiseLinear { knots: vec![(0.1, 1.0), (0.1 + 1e-9, 0.0)] };
        assert_eq!(f.probability(0.1).unwrap(), 1.0);
        let m = PathLossModel::from_breaks(
            &[0.5],
            &[(PowerLaw::new(1.0, 2.0), PowerLaw::new(1.0, 3.0)), (PowerLaw::new(0.5, 2.0), PowerLaw::new(0.5, 3.0))],
        )
        .unwrap();
        assert_eq!(m.segment_index(0.5), 0);
        assert_eq!(m.segment_index(0.5000001), 1);
        assert_eq!(m.path_loss(0.5, Branch::Los).unwrap(), 4.0);
    }

    #[test]
    fn invalid_knots_rejected() {
        let f = LosProbability::PiecewiseLinear { knots: vec![(0.2, 1.0), (0.1, 0.0)] };
        assert!(f.validate().is_err());
        let f = LosProbability::PiecewiseLinear { knots: vec![(0.2, 1.5)] };
        assert!(f.validate().is_err());
    }

    #[test]
    fn case1_path_loss_values() {
        let m = case1();
        assert!(rel(m.path_loss(1.0, Branch::Los).unwrap(), 10f64.powf(-10.38)) < 1e-12);
        assert!(rel(m.path_loss(1.0, Branch::Nlos).unwrap(), 10f64.powf(-14.54)) < 1e-12);
        // log10: -10.38 + 2.09 = -8.29
        assert!(rel(m.path_loss(0.1, Branch::Los).unwrap(), 10f64.powf(-8.29)) < 1e-12);
    }

    #[test]
    fn zero_distance_rejected() {
        assert!(matches!(case1().path_loss(0.0, Branch::Los), Err(Error::Domain(_))));
    }

    #[test]
    fn equal_loss_radius_examples() {
        let m = case1();
        // 10^(-14.54) x^(-3.75) = 10^(-8.29)  =>  x = 10^(-6.25/3.75)
        let expected = 10f64.powf(-6.25 / 3.75);
        let closed = m.equal_loss_radius(0.1, Branch::Los).unwrap();
        let bisect = m.equal_loss_radius_bisect(0.1, Branch::Los).unwrap();
        assert!(rel(closed, expected) < 1e-12);
        assert!(rel(bisect, expected) < 1e-12);
        assert!((closed - 0.021544).abs() < 1e-5);

        // y1 = d1^(aL/aNL) (A_NL/A_L)^(1/aNL)
        let y1 = m.equal_loss_radius(0.3, Branch::Los).unwrap();
        let formula = 0.3f64.powf(2.09 / 3.75) * 10f64.powf((-14.54 + 10.38) / 3.75);
        assert!(rel(y1, formula) < 1e-12);
        assert!((y1 - 0.03974).abs() < 1e-5, "{y1}");
    }

    #[test]
    fn equal_loss_fixed_point_at_crossing() {
        // LoS and NLoS cross where A_L r^-aL = A_NL r^-aNL
        let m = case1();
        let cross = (10f64.powf(-14.54) / 10f64.powf(-10.38)).powf(1.0 / (3.75 - 2.09));
        let r1 = m.equal_loss_radius(cross, Branch::Los).unwrap();
        assert!(rel(r1, cross) < 1e-10);
    }

    #[test]
    fn upward_jump_rejected() {
        let r = PathLossModel::from_breaks(
            &[0.5],
            &[(PowerLaw::new(1.0, 2.0), PowerLaw::new(1.0, 3.0)), (PowerLaw::new(5.0, 2.0), PowerLaw::new(1.0, 3.0))],
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn nlos_faster_than_los_enforced() {
        let r = PathLossModel::uniform(PowerLaw::new(1.0, 3.0), PowerLaw::new(1.0, 2.0));
        assert!(r.is_err());
    }

    #[test]
    fn radius_in_jump_gap_is_break() {
        // NLoS drops by 10x at 1 km; a target inside the gap maps to the break
        let m = PathLossModel::from_breaks(
            &[1.0],
            &[(PowerLaw::new(1.0, 2.0), PowerLaw::new(1.0, 3.0)), (PowerLaw::new(1.0, 2.0), PowerLaw::new(0.1, 3.0))],
        )
        .unwrap();
        assert_eq!(m.radius_for_gain(0.5, Branch::Nlos), 1.0);
        let b = m.equal_loss_radius_bisect(2f64.sqrt(), Branch::Los).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
        assert_eq!(m.radius_for_gain(0.0, Branch::Nlos), f64::INFINITY);
        assert_eq!(m.radius_for_gain(f64::INFINITY, Branch::Nlos), 0.0);
    }

    #[test]
    fn moments_match_quadrature() {
        for preset in Preset::ALL {
            let sc = preset.scenario();
            for &x in &[1e-4, 0.01, 0.0184, 0.05, 0.0677, 0.1, 0.3, 1.0, 7.0] {
                let q = quad::integrate(|u| sc.los().prob(u) * u, 0.0, x, Tolerance::new(1e-15, 1e-13))
                    .unwrap()
                    .value;
                let m = sc.los_moment(x);
                assert!((m - q).abs() <= 1e-13 + 1e-11 * q, "{preset} x={x}: {m} vs {q}");
                assert!((sc.nlos_moment(x) - (x * x / 2.0 - q)).abs() <= 1e-12 * x * x);
            }
        }
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("case3".parse::<Preset>().is_err());
    }

    #[test]
    fn db_round_trip() {
        for &x in &[-95.0, 0.0, 3.0, 24.0, 41.3] {
            assert!((linear_to_db(db_to_linear(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    fn any_los() -> impl Strategy<Value = LosProbability> {
        prop_oneof![
            (0.01f64..2.0).prop_map(|c| LosProbability::Linear { cutoff_km: c }),
            (0.01f64..1.0, 0.005f64..0.5).prop_map(|(a, b)| LosProbability::TwoPieceExp { r1_km: a, r2_km: b }),
            prop::collection::vec((0.0f64..1.0, 0.0f64..=1.0), 1..6).prop_map(|mut ks| {
                ks.sort_by(|a, b| a.0.total_cmp(&b.0));
                ks.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
                LosProbability::PiecewiseLinear { knots: ks }
            }),
            Just(LosProbability::AlwaysNlos),
        ]
    }

    proptest! {
        #[test]
        fn los_probability_in_unit_interval(f in any_los(), r in 0.0f64..50.0) {
            let p = f.probability(r).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn path_loss_decreasing(r in 1e-4f64..10.0, step in 1e-6f64..1.0) {
            let m = case1();
            for b in Branch::BOTH {
                prop_assert!(m.path_loss(r + step, b).unwrap() < m.path_loss(r, b).unwrap());
            }
        }

        #[test]
        fn equal_loss_round_trip(r in 1e-4f64..5.0) {
            let m = case1();
            let r1 = m.equal_loss_radius(r, Branch::Los).unwrap();
            let back = m.equal_loss_radius(r1, Branch::Nlos).unwrap();
            prop_assert!(rel(back, r) < 1e-9);
        }

        #[test]
        fn closed_form_matches_bisection(r in 1e-4f64..5.0, from_los in any::<bool>()) {
            let m = case1();
            let from = if from_los { Branch::Los } else { Branch::Nlos };
            let a = m.equal_loss_radius(r, from).unwrap();
            let b = m.equal_loss_radius_bisect(r, from).unwrap();
            prop_assert!(rel(a, b) < 1e-10, "{} vs {}", a, b);
        }
    }
}
