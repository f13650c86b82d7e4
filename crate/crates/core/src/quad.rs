//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! All panels of a call share one error budget: the panel with the largest
//! error estimate is bisected until the summed estimate falls under
//! `max(abs, rel * |value|)`. Semi-infinite panels `[a, ∞)` are mapped onto
//! `[0, 1)` with `u = a + c t / (1 - t)`, so no truncation radius is needed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const MAX_SUBDIVISIONS: usize = 4000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Absolute/relative stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// u = start + scale * t / (1 - t)
    Tail { start: f64, scale: f64 },
}

impl Map {
    #[inline]
    fn eval<F: FnMut(f64) -> f64>(&self, f: &mut F, t: f64) -> f64 {
        match *self {
            Map::Identity => f(t),
            Map::Tail { start, scale } => {
                let one_minus = 1.0 - t;
                let u = start + scale * t / one_minus;
                if !u.is_finite() {
                    return 0.0;
                }
                let y = f(u);
                if y == 0.0 {
                    0.0
                } else {
                    y * scale / (one_minus * one_minus)
                }
            }
        }
    }

    /// Panel bounds in the caller's variable.
    fn physical(&self, t: f64) -> f64 {
        match *self {
            Map::Identity => t,
            Map::Tail { start, scale } => {
                if t >= 1.0 {
                    f64::INFINITY
                } else {
                    start + scale * t / (1.0 - t)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    error: f64,
    /// The error estimate is at the rounding floor and cannot shrink.
    at_floor: bool,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// One 21-point Kronrod evaluation with the embedded 10-point Gauss error.
fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, map: Map, lo: f64, hi: f64) -> Result<(f64, f64, bool)> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = map.eval(f, center);
    let mut res_k = WGK[10] * f_center;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = map.eval(f, center - x);
        let f2 = map.eval(f, center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    if !value.is_finite() {
        return Err(Error::Domain(format!(
            "integrand is not finite on [{}, {}]",
            map.physical(lo),
            map.physical(hi)
        )));
    }
    let err = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    let at_floor = err > 0.0 && err <= 50.0 * f64::EPSILON * res_abs * half.abs();
    Ok((value, err, at_floor))
}

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, seeds: &[(f64, f64, Map)], tol: Tolerance) -> Result<Integral> {
    let mut heap = BinaryHeap::with_capacity(seeds.len() + 64);
    let mut evaluations = 0;
    let mut total = 0.0;
    let mut total_err = 0.0;
    // Panels too narrow to bisect further; their error is frozen.
    let mut frozen_err = 0.0;
    // Panels whose error is pure rounding; refining them is pointless.
    let mut floor_err = 0.0;
    // Values of panels taken off the heap for either reason.
    let mut retired = 0.0;

    for &(lo, hi, map) in seeds {
        if hi <= lo {
            continue;
        }
        let (value, error, at_floor) = kronrod21(f, map, lo, hi)?;
        evaluations += 21;
        total += value;
        total_err += error;
        heap.push(Panel { lo, hi, map, value, error, at_floor });
    }

    let mut subdivisions = 0;
    while total_err - floor_err > tol.target(total) {
        let Some(worst) = heap.pop() else { break };
        if worst.at_floor {
            floor_err += worst.error;
            retired += worst.value;
            continue;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            frozen_err += worst.error;
            retired += worst.value;
            if frozen_err > tol.target(total) {
                return Err(Error::Quadrature {
                    lo: worst.map.physical(worst.lo),
                    hi: worst.map.physical(worst.hi),
                    estimate: total_err,
                    tolerance: tol.target(total),
                });
            }
            continue;
        }
        if subdivisions >= MAX_SUBDIVISIONS {
            return Err(Error::Quadrature {
                lo: worst.map.physical(worst.lo),
                hi: worst.map.physical(worst.hi),
                estimate: total_err,
                tolerance: tol.target(total),
            });
        }
        subdivisions += 1;
        let (v1, e1, f1) = kronrod21(f, worst.map, worst.lo, mid)?;
        let (v2, e2, f2) = kronrod21(f, worst.map, mid, worst.hi)?;
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { lo: worst.lo, hi: mid, map: worst.map, value: v1, error: e1, at_floor: f1 });
        heap.push(Panel { lo: mid, hi: worst.hi, map: worst.map, value: v2, error: e2, at_floor: f2 });
    }

    // Re-sum to shed the drift from incremental updates.
    let value: f64 = heap.iter().map(|p| p.value).sum::<f64>() + retired;
    let abs_error: f64 = heap.iter().map(|p| p.error).sum::<f64>() + frozen_err + floor_err;
    Ok(Integral { value, abs_error, evaluations })
}

/// Integrates `f` over `[a, b]`; `b` may be `f64::INFINITY`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_points_impl(&mut f, &[a, b], tol)
}

/// Integrates `f` across the panels delimited by the sorted `points`.
///
/// Interior points are where the integrand has kinks or jumps; the panels
/// are refined under a single shared error budget. The last point may be
/// `f64::INFINITY`.
pub fn integrate_points<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: Tolerance) -> Result<Integral> {
    integrate_points_impl(&mut f, points, tol)
}

fn integrate_points_impl<F: FnMut(f64) -> f64>(f: &mut F, points: &[f64], tol: Tolerance) -> Result<Integral> {
    if points.len() < 2 {
        return Ok(Integral { value: 0.0, abs_error: 0.0, evaluations: 0 });
    }
    let mut seeds = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if lo.is_nan() || hi.is_nan() || lo.is_infinite() {
            return Err(Error::Domain(format!("bad integration panel [{lo}, {hi}]")));
        }
        if hi < lo {
            return Err(Error::Domain(format!("integration points not sorted: {lo} > {hi}")));
        }
        if hi == f64::INFINITY {
            let scale = if lo > 0.0 { lo } else { 1.0 };
            seeds.push((0.0, 1.0, Map::Tail { start: lo, scale }));
        } else if hi > lo {
            seeds.push((lo, hi, Map::Identity));
        }
    }
    adapt(f, &seeds, tol)
}

/// Merges split points into a sorted, deduplicated list restricted to `[lo, hi]`.
pub(crate) fn panel_points(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = interior
        .into_iter()
        .filter(|&p| p.is_finite() && p > lo && p < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    pts
}
