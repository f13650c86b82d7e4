//! Command-line front end: sweeps over density and threshold written as CSV.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analytic::{self, CoverageProvider, GeneralEngine, Method, Tolerances};
use crate::ase;
use crate::case3gpp::Case1Params;
use crate::error::{Error, Result};
use crate::model::{self, db_to_linear, reference, LosProbability, PathLossModel, PowerLaw, Preset, Scenario};
use crate::montecarlo::{self, McConfig, MonteCarloEngine};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "densecell", version, about = "Coverage and ASE of dense small cell networks with LoS/NLoS propagation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coverage probability over a density grid.
    Coverage(CoverageArgs),
    /// Area spectral efficiency over a density grid.
    Ase(AseArgs),
    /// Compare two providers or two presets over a density grid.
    Validate(ValidateArgs),
    /// Density that maximizes coverage.
    Peak(PeakArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// case1, case2, approx-case2 or single-slope.
    #[arg(long)]
    pub preset: Option<String>,
    /// Inline model, e.g. `los=-103.8:2.09; nlos=-145.4:3.75; los-prob=linear:0.3`.
    #[arg(long)]
    pub model: Option<String>,
    /// Replaces every LoS path loss exponent.
    #[arg(long)]
    pub alpha_los: Option<f64>,
    /// Log-spaced grid `start:stop:points_per_decade`, or a single density.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    /// analytic-general, analytic-closed or monte-carlo (comma list allowed).
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub disk_radius_km: Option<f64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// SINR thresholds in dB (comma list).
    #[arg(long)]
    pub gamma_db: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct AseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Minimum working SINRs in dB (comma list, may be empty).
    #[arg(long)]
    pub gamma0_db: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub gamma_db: Option<String>,
    /// Provider checked against `--provider` (default monte-carlo).
    #[arg(long)]
    pub against_provider: Option<String>,
    /// Compare against this preset with the same provider instead.
    #[arg(long)]
    pub against_preset: Option<String>,
    /// Absolute tolerance; Monte Carlo rows widen it to 3 standard errors.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PeakArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub gamma_db: Option<String>,
    /// Search range `lo:hi` in BSs/km².
    #[arg(long)]
    pub lambda_range: Option<String>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(Outcome::Passed) => EXIT_OK,
        Ok(Outcome::Failed) => EXIT_FAILED,
        Err(e) => {
            eprintln!("densecell: {e}");
            match e {
                Error::Config(_) | Error::InvalidModel(_) | Error::InvalidParams(_) => EXIT_CONFIG,
                _ => EXIT_FAILED,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Coverage(a) => {
            let spec = Spec::resolve(&a.common, &[("gamma-db", a.gamma_db.as_deref())])?;
            cmd_coverage(&spec)
        }
        Command::Ase(a) => {
            let spec = Spec::resolve(&a.common, &[("gamma0-db", a.gamma0_db.as_deref())])?;
            cmd_ase(&spec)
        }
        Command::Validate(a) => {
            let tol = a.tolerance.map(|t| t.to_string());
            let spec = Spec::resolve(
                &a.common,
                &[
                    ("gamma-db", a.gamma_db.as_deref()),
                    ("against-provider", a.against_provider.as_deref()),
                    ("against-preset", a.against_preset.as_deref()),
                    ("tolerance", tol.as_deref()),
                ],
            )?;
            cmd_validate(&spec)
        }
        Command::Peak(a) => {
            let spec = Spec::resolve(&a.common, &[("gamma-db", a.gamma_db.as_deref()), ("lambda-range", a.lambda_range.as_deref())])?;
            cmd_peak(&spec)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    General,
    Closed,
    MonteCarlo,
}

impl ProviderKind {
    fn method(self) -> Method {
        match self {
            ProviderKind::General => Method::AnalyticGeneral,
            ProviderKind::Closed => Method::AnalyticClosed,
            ProviderKind::MonteCarlo => Method::MonteCarlo,
        }
    }
}

impl FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "analytic-general" => Ok(ProviderKind::General),
            "analytic-closed" => Ok(ProviderKind::Closed),
            "monte-carlo" => Ok(ProviderKind::MonteCarlo),
            other => Err(Error::Config(format!(
                "unknown provider '{other}' (expected analytic-general, analytic-closed or monte-carlo)"
            ))),
        }
    }
}

/// Log-spaced density grid.
pub fn parse_lambda_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |p: &str| -> Result<f64> { p.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{p}' in lambda grid '{s}'"))) };
    let grid = match parts.as_slice() {
        [one] => vec![num(one)?],
        [start, stop, ppd] => {
            let (start, stop, ppd) = (num(start)?, num(stop)?, num(ppd)?);
            if !(start > 0.0 && stop >= start && stop.is_finite()) {
                return Err(Error::Config(format!("lambda grid needs 0 < start <= stop, got '{s}'")));
            }
            if !(ppd > 0.0 && ppd.is_finite()) {
                return Err(Error::Config(format!("points per decade must be positive, got '{s}'")));
            }
            let n = (ppd * (stop / start).log10() + 1e-9).floor() as usize;
            (0..=n).map(|k| start * 10f64.powf(k as f64 / ppd)).collect()
        }
        _ => return Err(Error::Config(format!("lambda grid must be start:stop:points_per_decade, got '{s}'"))),
    };
    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Config(format!("lambda grid values must be positive, got '{s}'")));
    }
    Ok(grid)
}

/// Comma-separated numbers; an empty string gives an empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{p}' in '{s}'"))))
        .collect()
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let v: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad range '{s}'"))))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [lo, hi] if *lo > 0.0 && hi > lo => Ok((*lo, *hi)),
        _ => Err(Error::Config(format!("range must be lo:hi with 0 < lo < hi, got '{s}'"))),
    }
}

/// Parses an inline model: `;`-separated `key=value` items.
///
/// * `breaks=d1,d2,…` interior path loss breaks in km (optional)
/// * `los=G_dB:alpha,…` and `nlos=G_dB:alpha,…`, one pair per segment
/// * `los-prob=linear:d1 | exp:R1:R2 | pwl:d:p,d:p,… | none`
pub fn parse_model(s: &str) -> Result<Scenario> {
    let mut items = BTreeMap::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("model item '{part}' is not key=value")))?;
        items.insert(k.trim().to_string(), v.trim().to_string());
    }
    let laws = |key: &str| -> Result<Vec<PowerLaw>> {
        let v = items.get(key).ok_or_else(|| Error::Config(format!("model is missing '{key}'")))?;
        v.split(',')
            .map(|pair| {
                let (g, a) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("'{pair}' should be gain_db:exponent")))?;
                let g: f64 = g.trim().parse().map_err(|_| Error::Config(format!("bad gain in '{pair}'")))?;
                let a: f64 = a.trim().parse().map_err(|_| Error::Config(format!("bad exponent in '{pair}'")))?;
                Ok(PowerLaw::from_db(g, a))
            })
            .collect()
    };
    let los = laws("los")?;
    let nlos = laws("nlos")?;
    if los.len() != nlos.len() {
        return Err(Error::Config("los and nlos need the same number of segments".into()));
    }
    let breaks = match items.get("breaks") {
        Some(b) => parse_list(b)?,
        None => Vec::new(),
    };
    let pairs: Vec<(PowerLaw, PowerLaw)> = los.into_iter().zip(nlos).collect();
    let path_loss = PathLossModel::from_breaks(&breaks, &pairs)?;
    let los_prob = match items.get("los-prob").map(String::as_str) {
        None | Some("none") => LosProbability::AlwaysNlos,
        Some(v) => {
            let (kind, rest) = v.split_once(':').unwrap_or((v, ""));
            let nums = |r: &str| parse_list(&r.replace(':', ","));
            match kind {
                "linear" => match nums(rest)?.as_slice() {
                    [d] => LosProbability::Linear { cutoff_km: *d },
                    _ => return Err(Error::Config(format!("linear LoS needs one cutoff, got '{v}'"))),
                },
                "exp" => match nums(rest)?.as_slice() {
                    [r1, r2] => LosProbability::TwoPieceExp { r1_km: *r1, r2_km: *r2 },
                    _ => return Err(Error::Config(format!("exp LoS needs R1:R2, got '{v}'"))),
                },
                "pwl" => {
                    let knots = rest
                        .split(',')
                        .map(|k| match nums(k)?.as_slice() {
                            [d, p] => Ok((*d, *p)),
                            _ => Err(Error::Config(format!("knot '{k}' should be distance:probability"))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    LosProbability::PiecewiseLinear { knots }
                }
                other => return Err(Error::Config(format!("unknown LoS probability '{other}'"))),
            }
        }
    };
    Scenario::new(path_loss, los_prob)
}

/// Reads a flat `key = value` file. `#` starts a comment.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", n + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

/// Fully resolved run description.
#[derive(Debug, Clone)]
pub struct Spec {
    pub scenario_name: String,
    pub scenario: Scenario,
    pub lambdas: Vec<f64>,
    pub providers: Vec<ProviderKind>,
    pub mc: McConfig,
    pub p_tx: f64,
    pub n0: f64,
    pub out: Option<PathBuf>,
    pub alpha_los: Option<f64>,
    /// Command-specific keys (`gamma-db`, `tolerance`, …).
    pub extra: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "preset",
    "model",
    "alpha-los",
    "lambda-grid",
    "provider",
    "trials",
    "seed",
    "disk-radius-km",
    "out",
    "gamma-db",
    "gamma0-db",
    "against-provider",
    "against-preset",
    "tolerance",
    "lambda-range",
];

impl Spec {
    pub fn resolve(common: &CommonArgs, specific: &[(&str, Option<&str>)]) -> Result<Self> {
        let mut kv = match &common.config {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        if let Some(bad) = kv.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown config key '{bad}'")));
        }
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        };
        set("preset", common.preset.clone());
        set("model", common.model.clone());
        set("alpha-los", common.alpha_los.map(|v| v.to_string()));
        set("lambda-grid", common.lambda_grid.clone());
        set("provider", common.provider.clone());
        set("trials", common.trials.map(|v| v.to_string()));
        set("seed", common.seed.map(|v| v.to_string()));
        set("disk-radius-km", common.disk_radius_km.map(|v| v.to_string()));
        set("out", common.out.as_ref().map(|p| p.display().to_string()));
        for &(k, v) in specific {
            set(k, v.map(str::to_string));
        }
        Self::from_map(kv)
    }

    pub fn from_map(mut kv: BTreeMap<String, String>) -> Result<Self> {
        let parse_f64 = |k: &str, v: &str| v.parse::<f64>().map_err(|_| Error::Config(format!("{k}: bad number '{v}'")));
        let (scenario_name, mut scenario) = match (kv.remove("model"), kv.get("preset")) {
            (Some(_), Some(_)) => return Err(Error::Config("give either a preset or an inline model, not both".into())),
            (Some(m), None) => ("inline".to_string(), parse_model(&m)?),
            (None, p) => {
                let preset: Preset = p.map(String::as_str).unwrap_or("case1").parse()?;
                (preset.name().to_string(), preset.scenario())
            }
        };
        kv.remove("preset");
        let alpha_los = match kv.remove("alpha-los") {
            Some(v) => Some(parse_f64("alpha-los", &v)?),
            None => None,
        };
        if let Some(a) = alpha_los {
            scenario = scenario.with_los_exponent(a)?;
        }
        let lambdas = parse_lambda_grid(&kv.remove("lambda-grid").unwrap_or_else(|| "0.1:10000:10".into()))?;
        let providers = kv
            .remove("provider")
            .unwrap_or_else(|| "analytic-general".into())
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<ProviderKind>>>()?;
        let mut mc = McConfig::default();
        if let Some(v) = kv.remove("trials") {
            mc.trials = v.parse().map_err(|_| Error::Config(format!("trials: bad count '{v}'")))?;
        }
        if let Some(v) = kv.remove("seed") {
            mc.seed = v.parse().map_err(|_| Error::Config(format!("seed: bad value '{v}'")))?;
        }
        if let Some(v) = kv.remove("disk-radius-km") {
            mc.disk_radius_km = Some(parse_f64("disk-radius-km", &v)?);
        }
        let out = kv.remove("out").map(PathBuf::from);
        Ok(Self {
            scenario_name,
            scenario,
            lambdas,
            providers,
            mc,
            p_tx: db_to_linear(reference::P_TX_DBM),
            n0: db_to_linear(reference::N0_DBM),
            out,
            alpha_los,
            extra: kv,
        })
    }

    fn db_list(&self, key: &str, default: &str) -> Result<Vec<f64>> {
        parse_list(self.extra.get(key).map(String::as_str).unwrap_or(default))
    }

    fn provider(&self, kind: ProviderKind) -> Result<Box<dyn CoverageProvider>> {
        self.provider_for(kind, &self.scenario)
    }

    fn evaluator(&self, kind: ProviderKind, sc: &Scenario) -> Result<Evaluator> {
        Ok(match kind {
            ProviderKind::MonteCarlo => Evaluator::Sampled(MonteCarloEngine::new(sc.clone(), self.p_tx, self.n0, self.mc)),
            _ => Evaluator::Analytic(self.provider_for(kind, sc)?),
        })
    }

    fn provider_for(&self, kind: ProviderKind, sc: &Scenario) -> Result<Box<dyn CoverageProvider>> {
        Ok(match kind {
            ProviderKind::General => Box::new(GeneralEngine::new(sc.clone(), self.p_tx, self.n0)),
            ProviderKind::Closed => {
                let net = model::NetworkParams::new(1.0, self.p_tx, self.n0, 1.0)?;
                Box::new(Case1Params::from_scenario(sc, net)?)
            }
            ProviderKind::MonteCarlo => Box::new(MonteCarloEngine::new(sc.clone(), self.p_tx, self.n0, self.mc)),
        })
    }

    fn header(&self, command: &str) -> Vec<(String, String)> {
        let mut h = vec![
            ("tool".to_string(), format!("densecell {}", env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), command.to_string()),
            ("scenario".to_string(), self.scenario_name.clone()),
            ("p_tx_dbm".to_string(), reference::P_TX_DBM.to_string()),
            ("n0_dbm".to_string(), reference::N0_DBM.to_string()),
        ];
        if let Some(a) = self.alpha_los {
            h.push(("alpha_los".into(), a.to_string()));
        }
        let tol = Tolerances::default();
        h.push(("tolerance_middle".into(), format!("{:e}", tol.middle)));
        h.push(("tolerance_outer".into(), format!("{:e}", tol.outer)));
        if self.providers.contains(&ProviderKind::MonteCarlo) || self.extra.get("against-provider").is_some_and(|p| p == "monte-carlo") {
            h.push(("trials".into(), self.mc.trials.to_string()));
            h.push(("seed".into(), self.mc.seed.to_string()));
            if let Some(r) = self.mc.disk_radius_km {
                h.push(("disk_radius_km".into(), r.to_string()));
            }
        }
        for (k, v) in &self.extra {
            h.push((k.replace('-', "_"), v.clone()));
        }
        h
    }

    fn write_csv(&self, command: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = String::new();
        for (k, v) in self.header(command) {
            text.push_str(&format!("# {k}={v}\n"));
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        match &self.out {
            Some(p) => fs::write(p, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
            None => io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("cannot write to stdout: {e}"))),
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}

/// A provider ready to evaluate coverage at several thresholds per density.
enum Evaluator {
    Analytic(Box<dyn CoverageProvider>),
    Sampled(MonteCarloEngine),
}

impl Evaluator {
    /// `(p_cov, error)` per threshold. A simulation runs once per density
    /// and serves every threshold.
    fn coverage_at(&self, lambda: f64, gammas: &[f64]) -> Result<Vec<(f64, f64)>> {
        match self {
            Evaluator::Analytic(p) => gammas
                .iter()
                .map(|&g| p.coverage(lambda, g).map(|c| (c.p_cov, c.abs_error_est)))
                .collect(),
            Evaluator::Sampled(engine) => {
                let sinr = engine.sinr_samples(lambda)?;
                gammas
                    .iter()
                    .map(|&g| montecarlo::coverage_from_sinr(&sinr, g, engine.config.seed).map(|e| (e.mean, e.std_error)))
                    .collect()
            }
        }
    }
}

pub fn cmd_coverage(spec: &Spec) -> Result<Outcome> {
    let gammas_db = spec.db_list("gamma-db", "0")?;
    let gammas: Vec<f64> = gammas_db.iter().map(|&g| db_to_linear(g)).collect();
    let mut rows = Vec::new();
    for &kind in &spec.providers {
        let eval = spec.evaluator(kind, &spec.scenario)?;
        let results = spec
            .lambdas
            .par_iter()
            .map(|&l| {
                let t = Instant::now();
                let r = eval.coverage_at(l, &gammas)?;
                Ok((l, r, t.elapsed().as_secs_f64() * 1e3))
            })
            .collect::<Result<Vec<_>>>()?;
        for (l, r, ms) in results {
            for (g_db, (p, e)) in gammas_db.iter().zip(r) {
                rows.push(vec![fmt(l), g_db.to_string(), fmt(p), format!("{e:.3e}"), kind.method().to_string(), format!("{ms:.1}")]);
            }
        }
    }
    spec.write_csv("coverage", &["lambda", "gamma_db", "p_cov", "err_or_se", "provider", "wall_ms"], &rows)?;
    Ok(Outcome::Passed)
}

pub fn cmd_ase(spec: &Spec) -> Result<Outcome> {
    let g0_db = spec.db_list("gamma0-db", "0")?;
    let mut rows = Vec::new();
    for &kind in &spec.providers {
        let results: Vec<Vec<f64>> = if kind == ProviderKind::MonteCarlo {
            let engine = MonteCarloEngine::new(spec.scenario.clone(), spec.p_tx, spec.n0, spec.mc);
            spec.lambdas
                .iter()
                .map(|&l| {
                    let samples = engine.sinr_samples(l)?;
                    g0_db.iter().map(|&g| Ok(ase::ase_mc(&samples, l, db_to_linear(g))?.ase)).collect()
                })
                .collect::<Result<_>>()?
        } else {
            let provider = spec.provider(kind)?;
            spec.lambdas
                .par_iter()
                .map(|&l| g0_db.iter().map(|&g| Ok(ase::ase(provider.as_ref(), l, db_to_linear(g))?.ase)).collect())
                .collect::<Result<_>>()?
        };
        for (&l, values) in spec.lambdas.iter().zip(results) {
            for (g, a) in g0_db.iter().zip(values) {
                rows.push(vec![fmt(l), g.to_string(), fmt(a), kind.method().to_string()]);
            }
        }
    }
    spec.write_csv("ase", &["lambda", "gamma0_db", "ase", "provider"], &rows)?;
    Ok(Outcome::Passed)
}

pub fn cmd_validate(spec: &Spec) -> Result<Outcome> {
    let gammas_db = spec.db_list("gamma-db", "0")?;
    let tolerance = match spec.extra.get("tolerance") {
        Some(t) => t.parse::<f64>().map_err(|_| Error::Config(format!("tolerance: bad number '{t}'")))?,
        None => 0.01,
    };
    let ref_kind = *spec.providers.first().ok_or_else(|| Error::Config("no provider given".into()))?;
    let reference = spec.evaluator(ref_kind, &spec.scenario)?;
    let (candidate, cand_kind, cand_label) = match spec.extra.get("against-preset") {
        Some(p) => {
            let preset: Preset = p.parse()?;
            let mut sc = preset.scenario();
            if let Some(a) = spec.alpha_los {
                sc = sc.with_los_exponent(a)?;
            }
            (spec.evaluator(ref_kind, &sc)?, ref_kind, format!("{}@{}", ref_kind.method(), preset))
        }
        None => {
            let kind: ProviderKind = spec.extra.get("against-provider").map(String::as_str).unwrap_or("monte-carlo").parse()?;
            (spec.evaluator(kind, &spec.scenario)?, kind, kind.method().to_string())
        }
    };
    let gammas: Vec<f64> = gammas_db.iter().map(|&g| db_to_linear(g)).collect();
    let results = spec
        .lambdas
        .par_iter()
        .map(|&l| {
            let a = reference.coverage_at(l, &gammas)?;
            let b = candidate.coverage_at(l, &gammas)?;
            Ok((l, a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut all_pass = true;
    for (l, a, b) in results {
        for (g_db, ((pa, ea), (pb, eb))) in gammas_db.iter().zip(a.into_iter().zip(b)) {
            let se = [(ref_kind, ea), (cand_kind, eb)]
                .iter()
                .filter(|(k, _)| *k == ProviderKind::MonteCarlo)
                .fold(0.0, |acc, (_, e)| acc + e * e)
                .sqrt();
            let bound = tolerance.max(3.0 * se);
            let diff = (pa - pb).abs();
            let status = if 3.0 * se > tolerance {
                "insufficient-trials"
            } else if diff <= bound {
                "pass"
            } else {
                "fail"
            };
            if status != "pass" {
                all_pass = false;
            }
            rows.push(vec![
                fmt(l),
                g_db.to_string(),
                fmt(pa),
                fmt(pb),
                format!("{diff:.3e}"),
                format!("{se:.3e}"),
                format!("{bound:.3e}"),
                status.to_string(),
            ]);
        }
    }
    if rows.iter().any(|r| r[7] == "insufficient-trials") {
        eprintln!("densecell: the Monte Carlo standard error exceeds a third of the tolerance; increase --trials");
    }
    let mut spec = spec.clone();
    spec.extra.insert("reference".into(), ref_kind.method().to_string());
    spec.extra.insert("candidate".into(), cand_label);
    spec.write_csv(
        "validate",
        &["lambda", "gamma_db", "reference", "candidate", "abs_diff", "se", "bound", "status"],
        &rows,
    )?;
    Ok(if all_pass { Outcome::Passed } else { Outcome::Failed })
}

pub fn cmd_peak(spec: &Spec) -> Result<Outcome> {
    let gammas_db = spec.db_list("gamma-db", "0")?;
    let range = parse_range(spec.extra.get("lambda-range").map(String::as_str).unwrap_or("1:1000"))?;
    let mut rows = Vec::new();
    for &kind in &spec.providers {
        let peaks = gammas_db
            .par_iter()
            .map(|&g| match kind {
                ProviderKind::General => {
                    let params = model::NetworkParams::new(1.0, spec.p_tx, spec.n0, db_to_linear(g))?;
                    analytic::find_coverage_peak(&spec.scenario, &params, range)
                }
                _ => analytic::find_provider_peak(spec.provider(kind)?.as_ref(), db_to_linear(g), range),
            })
            .collect::<Result<Vec<_>>>()?;
        for (g, p) in gammas_db.iter().zip(peaks) {
            rows.push(vec![
                g.to_string(),
                format!("{:.6}", p.location),
                fmt(p.value),
                format!("{:.6}", p.bracket.0),
                format!("{:.6}", p.bracket.1),
                kind.method().to_string(),
            ]);
        }
    }
    spec.write_csv("peak", &["gamma_db", "lambda_star", "p_cov", "bracket_lo", "bracket_hi", "provider"], &rows)?;
    Ok(Outcome::Passed)
}
