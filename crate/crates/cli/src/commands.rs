use std::path::{Path, PathBuf};

use cyclin::ensembles::{sample_factor, Admissibility, Assignment, EnsembleSpec, EntryDistribution, SeedStream};
use cyclin::experiments::{
    self, ExperimentConfig, GridSummary, LinearStatisticRun, RadialHistogram, ResultSet,
};
use cyclin::geometry;
use cyclin::linearization::{FactorChain, StructuredSolver, TranslatedLinearization};
use cyclin::numerics::ComplexMatrix;
use cyclin::spectra::{smallest_singular_value, SvMethod};
use cyclin::Complex64;
use serde::Serialize;

use crate::output::{self, RunManifest};
use crate::{CliError, ExperimentArgs, MethodArg, RerunArgs, SampleArgs, SvminArgs};

/// Largest `Mn` for which `svmin` computes row distances densely when the structured route fails.
const DENSE_DISTANCE_CAP: usize = 400;

fn ensemble(n: usize, m: usize, dist: &[String]) -> Result<EnsembleSpec, CliError> {
    let laws = dist.iter().map(|d| EntryDistribution::by_name(d.trim())).collect::<cyclin::Result<Vec<_>>>()?;
    let assignment = match laws.len() {
        1 => Assignment::Constant(laws.into_iter().next().expect("one law")),
        k if k == m => Assignment::PerFactor(laws),
        k => return Err(CliError::Usage(format!("--dist needs 1 or M = {m} names, got {k}"))),
    };
    Ok(EnsembleSpec::new(n, m, assignment, Admissibility::default())?)
}

fn sample_chain(n: usize, m: usize, dist: &[String], seed: u64) -> Result<FactorChain, CliError> {
    let spec = ensemble(n, m, dist)?;
    let stream = SeedStream::new(seed);
    let factors = (1..=m).map(|k| sample_factor(&spec, k, stream)).collect::<cyclin::Result<Vec<_>>>()?;
    Ok(FactorChain::new(factors)?)
}

pub fn sample(a: &SampleArgs) -> Result<(), CliError> {
    let chain = sample_chain(a.n, a.m, &a.dist, a.seed)?;
    for (k, f) in chain.factors().iter().enumerate() {
        let path = a.out.join(format!("factor_{}.csv", k + 1));
        output::write_atomic(&path, f.to_csv().as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn load_chain(paths: &[PathBuf]) -> Result<FactorChain, CliError> {
    let factors = paths
        .iter()
        .map(|p| {
            ComplexMatrix::from_csv(&output::read_to_string(p)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FactorChain::new(factors)?)
}

fn row_distance_min(lin: &TranslatedLinearization) -> Option<(f64, usize)> {
    let dists = match StructuredSolver::new(lin).and_then(|s| s.row_distances()) {
        Ok(d) => d,
        Err(_) if lin.dim() <= DENSE_DISTANCE_CAP => geometry::row_distances(&lin.materialize()).ok()?,
        Err(_) => return None,
    };
    dists.iter().copied().enumerate().map(|(k, d)| (d, k)).min_by(|x, y| x.0.total_cmp(&y.0))
}

pub fn svmin(a: &SvminArgs) -> Result<(), CliError> {
    let chain = if !a.factors.is_empty() {
        load_chain(&a.factors)?
    } else {
        let (n, m) = (a.n.expect("required by clap"), a.m.expect("required by clap"));
        if a.identity {
            if n == 0 || m == 0 {
                return Err(CliError::Usage("need n >= 1 and M >= 1".into()));
            }
            FactorChain::identities(n, m)
        } else {
            sample_chain(n, m, &a.dist, a.seed)?
        }
    };
    if !(a.z_abs.is_finite() && a.z_abs >= 0.0) || !a.z_arg.is_finite() {
        return Err(CliError::Usage("--z-abs must be finite and nonnegative, --z-arg finite".into()));
    }
    let (n, m) = (chain.n(), chain.m());
    let (lo, hi) = ((n as f64).powf(0.4), (n as f64).powf(0.6));
    if a.z_abs < lo || a.z_abs > hi {
        eprintln!("warning: |z| = {} lies outside [n^0.4, n^0.6] = [{lo:.4}, {hi:.4}]", a.z_abs);
    }
    let z = Complex64::from_polar(a.z_abs, a.z_arg);
    let lin = TranslatedLinearization::new(chain, z);
    let methods: &[SvMethod] = match a.method {
        MethodArg::Dense => &[SvMethod::Dense],
        MethodArg::ShiftInvert => &[SvMethod::ShiftInvert],
        MethodArg::Both => &[SvMethod::ShiftInvert, SvMethod::Dense],
    };
    println!("n = {n}, M = {m}, z = {} + {}i", z.re, z.im);
    let mut values = Vec::new();
    for &method in methods {
        let s = smallest_singular_value(&lin, method, a.tol)?;
        let label = match method {
            SvMethod::Dense => "dense",
            SvMethod::ShiftInvert => "shift-invert",
        };
        println!("sigma_min [{label}] = {:?}", s.value);
        if s.gap_limited {
            eprintln!("warning: shift-invert convergence limited by a small singular gap");
        }
        values.push(s.value);
    }
    if let [x, y] = values[..] {
        let rel = (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        println!("relative difference = {rel:.3e} (agree to 1e-6: {})", rel <= 1e-6);
    }
    match row_distance_min(&lin) {
        Some((d, k)) => println!("min row distance = {d:?} (row {k})"),
        None => println!("min row distance = unavailable"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ValueRow {
    replica: usize,
    value: f64,
}

#[derive(Serialize)]
struct LinstatSummaryRow {
    n: usize,
    m: usize,
    replicas: usize,
    excluded: usize,
    mean: f64,
    predicted_variance: f64,
    empirical_variance: f64,
    relative_error: f64,
    bootstrap_se: f64,
    bootstrap_ci_low: f64,
    bootstrap_ci_high: f64,
    qq_deviation: f64,
}

impl From<&LinearStatisticRun> for LinstatSummaryRow {
    fn from(r: &LinearStatisticRun) -> Self {
        Self {
            n: r.n,
            m: r.m,
            replicas: r.replicas,
            excluded: r.excluded,
            mean: r.mean,
            predicted_variance: r.predicted_variance,
            empirical_variance: r.empirical_variance,
            relative_error: r.relative_error(),
            bootstrap_se: r.bootstrap.standard_error,
            bootstrap_ci_low: r.bootstrap.ci_low,
            bootstrap_ci_high: r.bootstrap.ci_high,
            qq_deviation: r.qq_deviation,
        }
    }
}

#[derive(Serialize)]
struct BinRow {
    r_low: f64,
    r_high: f64,
    count: usize,
    fraction: f64,
}

fn bins(h: &RadialHistogram) -> Vec<BinRow> {
    h.edges
        .windows(2)
        .zip(&h.counts)
        .map(|(e, &c)| BinRow { r_low: e[0], r_high: e[1], count: c, fraction: c as f64 / h.total.max(1) as f64 })
        .collect()
}

/// Files produced by one experiment, plus whether its failure budget was exceeded.
struct Artifacts {
    files: Vec<(&'static str, Vec<u8>)>,
    budget: Option<String>,
}

fn result_set_artifacts(rs: &ResultSet) -> Result<Artifacts, CliError> {
    #[derive(Serialize)]
    struct Summary<'a> {
        kind: experiments::ExperimentKind,
        summaries: &'a [GridSummary],
        trend: &'a experiments::TrendSummary,
        failure_budget: f64,
        failure_budget_exceeded: bool,
    }
    let summary = Summary {
        kind: rs.kind,
        summaries: &rs.summaries,
        trend: &rs.trend,
        failure_budget: rs.failure_budget,
        failure_budget_exceeded: rs.failure_budget_exceeded,
    };
    Ok(Artifacts {
        files: vec![
            ("records.jsonl", rs.to_jsonl().into_bytes()),
            ("summary.csv", output::csv_bytes(&rs.summaries)?),
            ("summary.json", output::json_bytes(&summary)),
        ],
        budget: rs.check_budget().err().map(|e| e.to_string()),
    })
}

fn run(command: &str, cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match command {
        "sweep" => result_set_artifacts(&experiments::run_sv_tail_sweep(cfg)?),
        "nullmass" => result_set_artifacts(&experiments::run_null_mass_experiment(cfg)?),
        "linstat" => {
            let r = experiments::run_linear_statistic(cfg, &cfg.test_function)?;
            let rows: Vec<ValueRow> = r.values.iter().enumerate().map(|(i, &v)| ValueRow { replica: i, value: v }).collect();
            let budget = (r.excluded as f64 > cfg.failure_budget * r.replicas as f64)
                .then(|| format!("{} of {} replicas failed, exceeding the failure budget", r.excluded, r.replicas));
            Ok(Artifacts {
                files: vec![
                    ("records.jsonl", output::jsonl_bytes(&rows)),
                    ("summary.csv", output::csv_bytes(&[LinstatSummaryRow::from(&r)])?),
                    ("summary.json", output::json_bytes(&r)),
                ],
                budget,
            })
        }
        "histogram" => {
            let h = experiments::circular_law_histogram(cfg)?;
            let rows = bins(&h);
            Ok(Artifacts {
                files: vec![
                    ("records.jsonl", output::jsonl_bytes(&rows)),
                    ("summary.csv", output::csv_bytes(&rows)?),
                    ("summary.json", output::json_bytes(&h)),
                ],
                budget: None,
            })
        }
        other => Err(CliError::Usage(format!("unknown experiment `{other}`"))),
    }
}

fn execute(command: &str, cfg: ExperimentConfig, out: &Path, argv: &[String]) -> Result<(), CliError> {
    let started = output::now_ms();
    let artifacts = run(command, &cfg)?;
    let mut outputs = Vec::new();
    for (name, bytes) in &artifacts.files {
        let path = out.join(name);
        output::write_atomic(&path, bytes)?;
        outputs.push(path);
    }
    let manifest_path = out.join("manifest.json");
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        command: command.to_string(),
        args: argv.to_vec(),
        seed: cfg.seed,
        config: cfg,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_ms: started,
        finished_unix_ms: output::now_ms(),
        workers: rayon::current_num_threads(),
        outputs,
    };
    output::write_atomic(&manifest_path, &output::json_bytes(&manifest))?;
    for p in &manifest.outputs {
        println!("{}", p.display());
    }
    match artifacts.budget {
        Some(msg) => Err(CliError::Budget(msg)),
        None => Ok(()),
    }
}

pub fn experiment(command: &str, a: &ExperimentArgs, argv: &[String]) -> Result<(), CliError> {
    let cfg = output::parse_config(&output::read_to_string(&a.config)?)?;
    execute(command, cfg, &a.out, argv)
}

pub fn rerun(a: &RerunArgs, argv: &[String]) -> Result<(), CliError> {
    let text = output::read_to_string(&a.manifest)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let manifest: RunManifest = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Usage(format!("manifest field `{path}`: {}", e.into_inner()))
    })?;
    manifest.config.validate().map_err(|e| CliError::Usage(format!("config {e}")))?;
    if manifest.config.seed != manifest.seed {
        return Err(CliError::Usage("manifest seed does not match its config".into()));
    }
    execute(&manifest.command, manifest.config, &a.out, argv)
}
