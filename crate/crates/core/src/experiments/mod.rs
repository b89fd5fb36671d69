//! Monte Carlo drivers: the smallest-singular-value tail sweep, null-vector mass
//! diagnostics, linear spectral statistics and radial eigenvalue histograms.
//!
//! Trial `t` at size `n` draws everything from `SeedStream::new(seed).path(&[kind, n, t])`:
//! child 0 samples the chain, child 1 the shift `z`. Records are collected in trial order,
//! so output does not depend on the number of worker threads.

mod spectral;
pub mod stats;

use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{Admissibility, Assignment, ChainSource, EnsembleSpec, EntryDistribution, SeedStream};
use crate::error::{Error, Result};
use crate::geometry::{self, SphereParams, Verdict};
use crate::linearization::{BlockVector, StructuredSolver, TranslatedLinearization};
use crate::spectra::{self, SvMethod};

pub use spectral::{
    circular_law_histogram, linear_statistic, predicted_variance, predicted_variance_terms, predicted_variance_unchecked,
    radial_histogram, run_linear_statistic, LinearStatisticRun, RadialHistogram, TestFunction, VarianceTerms,
};

/// Relative tolerance for shift-invert versus dense agreement in spot checks.
pub const DENSE_AGREEMENT_RTOL: f64 = 1e-6;
/// Largest `Mn` at which a failed structured solve falls back to dense SVD routes.
pub const DENSE_FALLBACK_CAP: usize = 400;

/// How the shift `z` is chosen per trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ZRule {
    /// `|z| = n^exponent` at a fixed argument.
    Power {
        exponent: f64,
        #[serde(default)]
        arg: f64,
    },
    /// Uniform argument, log-uniform modulus between the tail-bound annulus endpoints
    /// `n^{1/2 -+ A/(1000 M)}`.
    Annulus,
    Fixed {
        re: f64,
        im: f64,
    },
}

impl Default for ZRule {
    fn default() -> Self {
        ZRule::Power { exponent: 0.5, arg: 0.0 }
    }
}

/// Annulus `[n^{1/2 - A/(1000M)}, n^{1/2 + A/(1000M)}]` of admissible `|z|`.
pub fn annulus(n: usize, m: usize, tail_exponent: f64) -> (f64, f64) {
    let w = tail_exponent / (1000.0 * m as f64);
    let n = n as f64;
    (n.powf(0.5 - w), n.powf(0.5 + w))
}

pub fn in_regime(z: Complex64, n: usize, m: usize, tail_exponent: f64) -> bool {
    let (lo, hi) = annulus(n, m, tail_exponent);
    let r = z.norm();
    r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)
}

impl ZRule {
    pub fn sample(&self, n: usize, m: usize, tail_exponent: f64, stream: SeedStream) -> Complex64 {
        match *self {
            ZRule::Power { exponent, arg } => Complex64::from_polar((n as f64).powf(exponent), arg),
            ZRule::Annulus => {
                let (lo, hi) = annulus(n, m, tail_exponent);
                let mut rng = stream.rng();
                let t: f64 = rng.gen();
                let arg: f64 = rng.gen::<f64>() * TAU;
                Complex64::from_polar((lo.ln() + t * (hi.ln() - lo.ln())).exp(), arg)
            }
            ZRule::Fixed { re, im } => Complex64::new(re, im),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ZRule::Power { exponent, arg } => exponent.is_finite() && arg.is_finite(),
            ZRule::Annulus => true,
            ZRule::Fixed { re, im } => re.is_finite() && im.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("z_rule parameters must be finite".into()))
        }
    }
}

fn default_distributions() -> Vec<String> {
    vec!["ginibre".into()]
}
fn default_epsilon0() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    0.25
}
fn default_tol() -> f64 {
    1e-10
}
fn default_true() -> bool {
    true
}
fn default_budget() -> f64 {
    0.05
}

/// Numerical settings for the predicted CLT variance and its bootstrap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarianceSettings {
    pub grid_resolution: usize,
    pub fourier_modes: usize,
    pub bootstrap: usize,
}

impl Default for VarianceSettings {
    fn default() -> Self {
        Self { grid_resolution: 400, fourier_modes: 256, bootstrap: 1000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramSettings {
    pub bins: usize,
    pub max_radius: f64,
}

impl Default for HistogramSettings {
    fn default() -> Self {
        Self { bins: 24, max_radius: 1.2 }
    }
}

/// One experiment, as read from a JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub m: usize,
    /// Tail exponent `A` in `P(sigma_1 <= n^{-1/2-A})`.
    #[serde(rename = "A")]
    pub tail_exponent: f64,
    /// Block-mass exponent: trials pass when `min(|u_1|, |u_M|) >= n^{-epsilon0}`.
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    /// Incompressibility threshold `b = n^{-epsilon}` with `a = 1/log n`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub z_rule: ZRule,
    /// One name for every factor, or one per factor.
    #[serde(default = "default_distributions")]
    pub distributions: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: SvMethod,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Compare against dense SVD at the smallest grid size.
    #[serde(default = "default_true")]
    pub dense_check: bool,
    /// Largest tolerated fraction of excluded trials per grid size.
    #[serde(default = "default_budget")]
    pub failure_budget: f64,
    /// Record per-trial wall time. Off by default because it makes reruns differ.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub test_function: TestFunction,
    #[serde(default)]
    pub variance: VarianceSettings,
    #[serde(default)]
    pub histogram: HistogramSettings,
}

fn default_method() -> SvMethod {
    SvMethod::ShiftInvert
}

impl ExperimentConfig {
    /// Defaults with the given grid, `M`, `A`, trial count and seed.
    pub fn new(n_grid: Vec<usize>, m: usize, tail_exponent: f64, trials: usize, seed: u64) -> Self {
        Self {
            n_grid,
            m,
            tail_exponent,
            epsilon0: default_epsilon0(),
            epsilon: default_epsilon(),
            z_rule: ZRule::default(),
            distributions: default_distributions(),
            trials,
            seed,
            method: default_method(),
            tol: default_tol(),
            dense_check: true,
            failure_budget: default_budget(),
            record_wall_time: false,
            test_function: TestFunction::default(),
            variance: VarianceSettings::default(),
            histogram: HistogramSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidParameter(format!("{field}: {msg}")));
        if self.n_grid.is_empty() {
            return bad("n_grid", "must be nonempty".into());
        }
        if let Some(n) = self.n_grid.iter().find(|&&n| n == 0) {
            return bad("n_grid", format!("sizes must be positive, got {n}"));
        }
        if self.m == 0 {
            return bad("m", "must be at least 1".into());
        }
        if !(self.tail_exponent > 0.0 && self.tail_exponent < 1.0) {
            return bad("A", format!("must lie in (0, 1), got {}", self.tail_exponent));
        }
        for (name, x) in [("epsilon0", self.epsilon0), ("epsilon", self.epsilon)] {
            if !(x > 0.0 && x.is_finite()) {
                return bad(name, format!("must be positive, got {x}"));
            }
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad("tol", format!("must be positive, got {}", self.tol));
        }
        if !(0.0..=1.0).contains(&self.failure_budget) {
            return bad("failure_budget", format!("must lie in [0, 1], got {}", self.failure_budget));
        }
        if self.distributions.len() != 1 && self.distributions.len() != self.m {
            return bad("distributions", format!("need 1 or M = {} names, got {}", self.m, self.distributions.len()));
        }
        for name in &self.distributions {
            EntryDistribution::by_name(name)?;
        }
        if self.histogram.bins == 0 || !(self.histogram.max_radius > 0.0) {
            return bad("histogram", "need bins >= 1 and max_radius > 0".into());
        }
        self.z_rule.validate()?;
        self.test_function.validate()
    }

    /// Ensemble at size `n` with admissibility checks.
    pub fn ensemble(&self, n: usize) -> Result<EnsembleSpec> {
        let dists = self.distributions.iter().map(|d| EntryDistribution::by_name(d)).collect::<Result<Vec<_>>>()?;
        let assignment = if dists.len() == 1 {
            Assignment::Constant(dists.into_iter().next().unwrap())
        } else {
            Assignment::PerFactor(dists)
        };
        EnsembleSpec::new(n, self.m, assignment, Admissibility::default())
    }
}

/// Which experiment produced a record; also the first component of every seed path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sweep = 1,
    NullMass = 2,
    LinearStatistic = 3,
    Histogram = 4,
}

/// One Monte Carlo trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed_path: String,
    pub n: usize,
    pub m: usize,
    pub z_re: f64,
    pub z_im: f64,
    pub sigma_min: Option<f64>,
    pub dist_min: Option<f64>,
    pub dist_argmin: Option<usize>,
    pub mass_profile: Vec<f64>,
    pub incompressible: Option<bool>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub wall_ms: Option<f64>,
    pub method: SvMethod,
    pub gap_limited: bool,
    pub dense_sigma_min: Option<f64>,
    pub degenerate: bool,
    pub out_of_regime: bool,
    /// Set when the trial was excluded.
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn excluded(&self) -> bool {
        self.error.is_some()
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z_re, self.z_im)
    }
}

/// Null vector extraction route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NullRoute {
    /// Last column of `Y(z)^{-1}` from the structured solver.
    Inverse,
    /// SVD of `Y(z)` without its last row.
    Svd,
}

fn trial_stream(cfg: &ExperimentConfig, kind: ExperimentKind, n: usize, trial: usize) -> (SeedStream, String) {
    let path = [kind as u64, n as u64, trial as u64];
    (SeedStream::new(cfg.seed).path(&path), format!("{}/{}/{}/{}", cfg.seed, path[0], path[1], path[2]))
}

fn run_trial(
    cfg: &ExperimentConfig,
    spec: &EnsembleSpec,
    kind: ExperimentKind,
    trial: usize,
    route: NullRoute,
    dense_check: bool,
) -> TrialRecord {
    let start = Instant::now();
    let n = spec.n();
    let (stream, seed_path) = trial_stream(cfg, kind, n, trial);
    let z = cfg.z_rule.sample(n, cfg.m, cfg.tail_exponent, stream.child(1));
    let mut rec = TrialRecord {
        trial,
        seed_path,
        n,
        m: cfg.m,
        z_re: z.re,
        z_im: z.im,
        sigma_min: None,
        dist_min: None,
        dist_argmin: None,
        mass_profile: Vec::new(),
        incompressible: None,
        a: None,
        b: None,
        wall_ms: None,
        method: cfg.method,
        gap_limited: false,
        dense_sigma_min: None,
        degenerate: false,
        out_of_regime: !in_regime(z, n, cfg.m, cfg.tail_exponent),
        error: None,
    };
    if let Err(e) = fill_trial(cfg, spec, stream, z, route, dense_check, &mut rec) {
        rec.error = Some(e.to_string());
    }
    if cfg.record_wall_time {
        rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    rec
}

fn fill_trial(
    cfg: &ExperimentConfig,
    spec: &EnsembleSpec,
    stream: SeedStream,
    z: Complex64,
    route: NullRoute,
    dense_check: bool,
    rec: &mut TrialRecord,
) -> Result<()> {
    let lin = TranslatedLinearization::new(spec.sample_chain(stream.child(0))?, z);
    let dim = lin.dim();
    let solver = StructuredSolver::new(&lin);
    if dense_check || cfg.method == SvMethod::Dense {
        rec.dense_sigma_min = Some(spectra::smallest_singular_value(&lin, SvMethod::Dense, cfg.tol)?.value);
    }
    rec.sigma_min = Some(match (cfg.method, &solver) {
        (SvMethod::Dense, _) => rec.dense_sigma_min.unwrap(),
        (SvMethod::ShiftInvert, Ok(s)) => {
            let r = spectra::shift_invert(s, cfg.tol)?;
            rec.gap_limited = r.gap_limited;
            r.value
        }
        (SvMethod::ShiftInvert, Err(e)) => return Err(e.clone()),
    });

    if let Ok(s) = &solver {
        let d = s.row_distances()?;
        let (k, v) = d.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        rec.dist_min = Some(v);
        rec.dist_argmin = Some(k);
    }

    let u = match (route, &solver) {
        (NullRoute::Inverse, Ok(s)) => Some(geometry::null_vector_via_inverse(s, dim - 1)?),
        _ if route == NullRoute::Svd || dim <= DENSE_FALLBACK_CAP => {
            let nv = geometry::null_vector(&lin, dim - 1)?;
            rec.degenerate = nv.degenerate;
            Some(nv.u)
        }
        _ => None,
    };
    if let Some(u) = u {
        fill_mass(cfg, &u, rec)?;
    }
    Ok(())
}

fn fill_mass(cfg: &ExperimentConfig, u: &BlockVector, rec: &mut TrialRecord) -> Result<()> {
    rec.mass_profile = geometry::mass_profile(u)?;
    let n = u.n();
    if n < 3 || rec.mass_profile[0] == 0.0 {
        return Ok(());
    }
    let p = SphereParams::diagnostic_defaults(n, cfg.epsilon, n)?;
    let mut first = u.block(1).to_vec();
    crate::numerics::normalize(&mut first);
    let cl = geometry::classify(&first, &p)?;
    rec.incompressible = Some(cl.verdict == Verdict::Incompressible);
    rec.a = Some(p.a);
    rec.b = Some(p.b);
    Ok(())
}

/// Aggregates at one grid size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSummary {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub excluded: usize,
    /// `n^{-1/2-A}`.
    pub threshold: f64,
    pub exceed: usize,
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub median_sigma_sqrt_n: f64,
    pub q10_sigma_sqrt_n: f64,
    pub q90_sigma_sqrt_n: f64,
    pub dense_checked: usize,
    pub dense_agree: usize,
    pub distance_violations: usize,
    pub gap_limited: usize,
    pub out_of_regime: usize,
    /// `n^{-epsilon0}`.
    pub mass_threshold: f64,
    pub mass_pass: usize,
    pub incompressible: usize,
    pub classified: usize,
    pub mean_log_min_mass: Option<f64>,
}

impl GridSummary {
    pub fn mass_rate(&self) -> f64 {
        self.mass_pass as f64 / (self.trials - self.excluded).max(1) as f64
    }

    pub fn incompressible_rate(&self) -> f64 {
        self.incompressible as f64 / self.classified.max(1) as f64
    }

    pub fn dense_agreement_rate(&self) -> f64 {
        self.dense_agree as f64 / self.dense_checked.max(1) as f64
    }
}

/// Trend across the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendSummary {
    /// Every consecutive pair satisfies `wilson_low(n_next) <= wilson_high(n)`.
    pub exceedance_non_increasing: bool,
    /// Least-squares slope of `mean log min(|u_1|, |u_M|)` against `log n`.
    pub min_mass_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultSet {
    pub kind: ExperimentKind,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<GridSummary>,
    pub trend: TrendSummary,
    pub failure_budget: f64,
    pub failure_budget_exceeded: bool,
}

impl ResultSet {
    pub fn check_budget(&self) -> Result<()> {
        match self.summaries.iter().find(|s| s.excluded as f64 > self.failure_budget * s.trials as f64) {
            Some(s) => Err(Error::FailureBudget { excluded: s.excluded, total: s.trials }),
            None => Ok(()),
        }
    }

    /// One JSON object per line, in trial order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

fn summarize(cfg: &ExperimentConfig, n: usize, records: &[TrialRecord]) -> GridSummary {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| !r.excluded()).collect();
    let sigmas: Vec<f64> = ok.iter().filter_map(|r| r.sigma_min).collect();
    let threshold = (n as f64).powf(-0.5 - cfg.tail_exponent);
    let exceed = sigmas.iter().filter(|&&s| s <= threshold).count();
    let (wilson_low, wilson_high) = stats::wilson_interval(exceed, sigmas.len(), stats::Z95);
    let scaled: Vec<f64> = sigmas.iter().map(|s| s * (n as f64).sqrt()).collect();
    let q = |l| if scaled.is_empty() { f64::NAN } else { stats::quantile(&scaled, l) };
    let dense: Vec<(f64, f64)> = ok.iter().filter_map(|r| Some((r.sigma_min?, r.dense_sigma_min?))).collect();
    let dense_agree = dense.iter().filter(|(s, d)| (s - d).abs() <= DENSE_AGREEMENT_RTOL * d.abs()).count();
    let mass_threshold = (n as f64).powf(-cfg.epsilon0);
    let min_mass: Vec<f64> = ok
        .iter()
        .filter(|r| !r.mass_profile.is_empty())
        .map(|r| r.mass_profile[0].min(*r.mass_profile.last().unwrap()))
        .collect();
    let logs: Vec<f64> = min_mass.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
    GridSummary {
        n,
        m: cfg.m,
        trials: records.len(),
        excluded: records.len() - ok.len(),
        threshold,
        exceed,
        p_hat: exceed as f64 / sigmas.len().max(1) as f64,
        wilson_low,
        wilson_high,
        median_sigma_sqrt_n: q(0.5),
        q10_sigma_sqrt_n: q(0.1),
        q90_sigma_sqrt_n: q(0.9),
        dense_checked: dense.len(),
        dense_agree,
        distance_violations: ok
            .iter()
            .filter(|r| matches!((r.sigma_min, r.dist_min), (Some(s), Some(d)) if s > d * (1.0 + 1e-9)))
            .count(),
        gap_limited: ok.iter().filter(|r| r.gap_limited).count(),
        out_of_regime: records.iter().filter(|r| r.out_of_regime).count(),
        mass_threshold,
        mass_pass: min_mass.iter().filter(|&&x| x >= mass_threshold).count(),
        incompressible: ok.iter().filter(|r| r.incompressible == Some(true)).count(),
        classified: ok.iter().filter(|r| r.incompressible.is_some()).count(),
        mean_log_min_mass: (logs.len() == min_mass.len() && !logs.is_empty()).then(|| stats::mean(&logs)),
    }
}

fn run_grid(cfg: &ExperimentConfig, kind: ExperimentKind, route: NullRoute) -> Result<ResultSet> {
    cfg.validate()?;
    let mut grid = cfg.n_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let n_min = grid[0];
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &n in &grid {
        let spec = cfg.ensemble(n)?;
        let dense_check = cfg.dense_check && n == n_min && cfg.m * n <= spectra::DENSE_CAP;
        let recs: Vec<TrialRecord> =
            (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &spec, kind, t, route, dense_check)).collect();
        summaries.push(summarize(cfg, n, &recs));
        records.extend(recs);
    }
    let failure_budget_exceeded =
        summaries.iter().any(|s| s.excluded as f64 > cfg.failure_budget * s.trials as f64);
    let exceedance_non_increasing = summaries.windows(2).all(|w| w[1].wilson_low <= w[0].wilson_high);
    let pts: Vec<(f64, f64)> =
        summaries.iter().filter_map(|s| Some(((s.n as f64).ln(), s.mean_log_min_mass?))).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(ResultSet {
        kind,
        records,
        summaries,
        trend: TrendSummary { exceedance_non_increasing, min_mass_slope: stats::slope(&x, &y) },
        failure_budget: cfg.failure_budget,
        failure_budget_exceeded,
    })
}

/// Empirical `P(sigma_1(Y(z)) <= n^{-1/2-A})` per grid size with Wilson intervals.
/// Null vectors come from the structured inverse.
pub fn run_sv_tail_sweep(cfg: &ExperimentConfig) -> Result<ResultSet> {
    run_grid(cfg, ExperimentKind::Sweep, NullRoute::Inverse)
}

/// Block-mass profiles and incompressibility of SVD-extracted null vectors.
pub fn run_null_mass_experiment(cfg: &ExperimentConfig) -> Result<ResultSet> {
    run_grid(cfg, ExperimentKind::NullMass, NullRoute::Svd)
}

/// Recomputes one record from the configuration alone.
pub fn replay_trial(cfg: &ExperimentConfig, kind: ExperimentKind, n: usize, trial: usize) -> Result<TrialRecord> {
    cfg.validate()?;
    let spec = cfg.ensemble(n)?;
    let n_min = *cfg.n_grid.iter().min().unwrap();
    let dense_check = cfg.dense_check && n == n_min && cfg.m * n <= spectra::DENSE_CAP;
    let route = if kind == ExperimentKind::NullMass { NullRoute::Svd } else { NullRoute::Inverse };
    Ok(run_trial(cfg, &spec, kind, trial, route, dense_check))
}
