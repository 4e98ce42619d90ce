//! The `verify`, `protocol`, `tomography` and `witness-sweep` commands.
//!
//! Every command writes into one directory per run whose name is derived
//! from its arguments, so identical invocations overwrite identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;
use tlcs_core::gates::{
    basis_word, spatial_lcs_circuit, swap_elimination_deviation_with, Basis, GateKind,
};
use tlcs_core::linalg::{Matrix, Operator, StateVector};
use tlcs_core::noise::NoiseParams;
use tlcs_core::protocol::{
    acceptance_fraction, accepted_histogram, derive_seed, run_protocol_enumerated,
    run_protocol_shots, ProtocolConfig, SamplingEngine, ShotSampler, MAX_ENUMERATED_QUBITS,
};
use tlcs_core::tomography::{
    bootstrap_fidelity, median, percentile_interval, quantile, reconstruct, tomography_settings,
    ExpectationTable, ReconstructionResult, SettingCounts, TomographyPlan,
};

use crate::config::{load_noise_params, reference_noise_params, write_noise_params, ConfigError};
use crate::formats::{
    counts_csv, distribution_csv, expectation_csv, gnuplot_data, matrix_json_text, records_text,
    witness_summary_csv, WitnessSummary,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] tlcs_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Core(_) | CliError::Io { .. } | CliError::CheckFailed(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage(err: tlcs_core::Error) -> CliError {
    CliError::Usage(err.to_string())
}

/// Bootstrap confidence level of reported intervals.
pub const CONFIDENCE: f64 = 0.95;

/// Noise selection shared by the simulation commands.
#[derive(Debug, Clone, Default)]
pub struct NoiseOptions {
    pub no_noise: bool,
    pub no_herald: bool,
    pub noise_file: Option<PathBuf>,
}

impl NoiseOptions {
    pub fn resolve(&self) -> CliResult<Option<NoiseParams>> {
        if self.no_noise {
            return Ok(None);
        }
        Ok(Some(match &self.noise_file {
            Some(path) => load_noise_params(path)?,
            None => reference_noise_params(),
        }))
    }

    fn suffix(&self) -> String {
        let mut s = String::new();
        if self.no_noise {
            s.push_str("-noiseless");
        }
        if self.no_herald {
            s.push_str("-noherald");
        }
        s
    }
}

/// Output directory of one run.
#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path, name: &str) -> CliResult<Self> {
        let path = root.join(name);
        std::fs::create_dir_all(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.path.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
    }

    fn write_config(&self, noise: Option<&NoiseParams>) -> CliResult<()> {
        match noise {
            Some(p) => self.write("config.conf", &write_noise_params(p)),
            None => self.write("config.conf", "# noiseless\n"),
        }
    }
}

fn run_parameters(pairs: &[(&str, String)]) -> String {
    pairs.iter().fold(String::new(), |mut out, (k, v)| {
        let _ = writeln!(out, "{k} = {v}");
        out
    })
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub states: usize,
    /// Replaces the CNOT by one with a flipped sign, to exercise the failure path.
    pub inject_cnot_sign_error: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            states: 100,
            inject_cnot_sign_error: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "passed": self.passed(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "passed": c.passed,
                "max_deviation": c.max_deviation,
                "tolerance": c.tolerance,
                "cases": c.cases,
                "counterexample": c.counterexample,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<28} cases={:<4} max_deviation={:.3e} tolerance={:.0e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.cases,
                c.max_deviation,
                c.tolerance
            );
            if let Some(ce) = &c.counterexample {
                let _ = writeln!(out, "     counterexample: {ce}");
            }
        }
        out
    }
}

fn sign_flipped_cnot() -> Operator {
    let mut m = GateKind::CNOT.matrix().into_matrix();
    m[(3, 2)] = -m[(3, 2)];
    Operator::new(m).expect("4x4")
}

fn format_state(psi: &StateVector) -> String {
    let parts: Vec<String> = psi
        .amplitudes()
        .iter()
        .map(|a| format!("{:+.6}{:+.6}i", a.re, a.im))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn swap_elimination_check(opts: &VerifyOptions) -> CliResult<CheckResult> {
    let cnot = if opts.inject_cnot_sign_error {
        sign_flipped_cnot()
    } else {
        GateKind::CNOT.matrix()
    };
    let tolerance = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: (f64, Option<StateVector>) = (0.0, None);
    for _ in 0..opts.states {
        let psi = StateVector::haar_random(1, &mut rng);
        let dev = swap_elimination_deviation_with(&psi, &cnot)?;
        if dev > worst.0 {
            worst = (dev, Some(psi));
        }
    }
    let passed = worst.0 <= tolerance;
    Ok(CheckResult {
        name: "swap_elimination",
        passed,
        max_deviation: worst.0,
        tolerance,
        cases: opts.states,
        counterexample: (!passed)
            .then(|| worst.1.as_ref().map(format_state))
            .flatten(),
    })
}

fn swap_squared_check() -> CheckResult {
    let swap = GateKind::SWAP.matrix();
    let square = swap.compose(&swap).expect("4x4");
    let deviation = square.matrix().max_abs_diff(&Matrix::identity(4));
    CheckResult {
        name: "swap_squared_identity",
        passed: square.matrix() == &Matrix::identity(4),
        max_deviation: deviation,
        tolerance: 0.0,
        cases: 1,
        counterexample: None,
    }
}

/// Basis settings checked for a chain of `n`: all of them up to four
/// qubits, otherwise `sampled` random ones.
pub fn oracle_settings(n: usize, sampled: usize, seed: u64) -> Vec<Vec<Basis>> {
    if n <= 4 {
        return tomography_settings(n).expect("n within range");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, n as u64));
    (0..sampled)
        .map(|_| {
            (0..n)
                .map(|_| Basis::ALL[rand::Rng::gen_range(&mut rng, 0..3)])
                .collect()
        })
        .collect()
}

/// Largest total-variation distance between time-domain and spatial distributions.
pub fn oracle_deviation(n: usize, bases: &[Basis]) -> tlcs_core::Result<f64> {
    let cfg = ProtocolConfig::new(n, bases.to_vec())?;
    let time = run_protocol_enumerated(&cfg)?;
    let space = spatial_lcs_circuit(n, bases)?.outcome_distribution()?;
    Ok(time.total_variation(&space))
}

fn oracle_check(seed: u64) -> CliResult<CheckResult> {
    let tolerance = 1e-9;
    let cases: Vec<(usize, Vec<Basis>)> = (2..=6)
        .flat_map(|n| {
            oracle_settings(n, 50, seed)
                .into_iter()
                .map(move |b| (n, b))
        })
        .collect();
    let deviations = cases
        .par_iter()
        .map(|(n, b)| oracle_deviation(*n, b))
        .collect::<tlcs_core::Result<Vec<f64>>>()?;
    let (worst, dev) =
        deviations.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
        );
    let passed = dev <= tolerance;
    Ok(CheckResult {
        name: "time_space_equivalence",
        passed,
        max_deviation: dev,
        tolerance,
        cases: cases.len(),
        counterexample: (!passed)
            .then(|| format!("N={} bases={}", cases[worst].0, basis_word(&cases[worst].1))),
    })
}

fn noiseless_tomography_check() -> CliResult<CheckResult> {
    let tolerance = 1e-8;
    let deviations = (2..=4)
        .map(|n| {
            let cfg = ProtocolConfig::new(n, vec![Basis::Z; n])?;
            let plan = build_plan(&cfg)?;
            Ok((1.0 - reconstruct(&plan.exact_table()?, n)?.fidelity).abs())
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let dev = deviations.iter().copied().fold(0.0, f64::max);
    Ok(CheckResult {
        name: "noiseless_tomography",
        passed: dev <= tolerance,
        max_deviation: dev,
        tolerance,
        cases: deviations.len(),
        counterexample: None,
    })
}

pub fn verify(opts: &VerifyOptions) -> CliResult<VerifyReport> {
    Ok(VerifyReport {
        checks: vec![
            swap_elimination_check(opts)?,
            swap_squared_check(),
            oracle_check(opts.seed)?,
            noiseless_tomography_check()?,
        ],
    })
}

pub fn cmd_verify(opts: &VerifyOptions, out_root: &Path) -> CliResult<(VerifyReport, RunDir)> {
    let report = verify(opts)?;
    let mut name = format!("verify-seed{}", opts.seed);
    if opts.inject_cnot_sign_error {
        name.push_str("-injected");
    }
    let dir = RunDir::create(out_root, &name)?;
    let mut json_text = serde_json::to_string_pretty(&report.to_json()).expect("serializable");
    json_text.push('\n');
    dir.write("report.json", &json_text)?;
    dir.write("report.txt", &report.to_text())?;
    Ok((report, dir))
}

// ---------------------------------------------------------------- protocol

#[derive(Debug, Clone)]
pub struct ProtocolOptions {
    pub n: usize,
    pub bases: String,
    pub shots: usize,
    pub seed: u64,
    pub engine: SamplingEngine,
    pub noise: NoiseOptions,
}

#[derive(Debug, Clone)]
pub struct ProtocolSummary {
    pub shots: usize,
    pub accepted_fraction: f64,
    pub dir: RunDir,
}

pub fn cmd_protocol(opts: &ProtocolOptions, out_root: &Path) -> CliResult<ProtocolSummary> {
    let bases = Basis::parse_word(&opts.bases).map_err(usage)?;
    let noise = opts.noise.resolve()?;
    let cfg = ProtocolConfig::new(opts.n, bases)
        .map_err(usage)?
        .with_noise(noise.clone())
        .with_heralding(!opts.noise.no_herald)
        .with_shots(opts.shots)
        .with_seed(opts.seed)
        .with_engine(opts.engine);
    cfg.validate().map_err(usage)?;
    let sampler = ShotSampler::new(&cfg)?;
    let records: Vec<_> = (0..sampler.block_count())
        .into_par_iter()
        .map(|b| sampler.sample_block(b))
        .collect::<Vec<_>>()
        .concat();

    let word = basis_word(&cfg.bases);
    let dir = RunDir::create(
        out_root,
        &format!(
            "protocol-n{}-{}-seed{}{}",
            opts.n,
            word,
            opts.seed,
            opts.noise.suffix()
        ),
    )?;
    dir.write_config(noise.as_ref())?;
    dir.write(
        "run.txt",
        &run_parameters(&[
            ("command", "protocol".into()),
            ("n", opts.n.to_string()),
            ("bases", word),
            ("shots", opts.shots.to_string()),
            ("seed", opts.seed.to_string()),
            ("engine", opts.engine.as_str().into()),
            ("heralding", cfg.heralding.to_string()),
        ]),
    )?;
    dir.write("records.txt", &records_text(&records))?;
    let accepted = accepted_histogram(&records, opts.n);
    let total: u64 = accepted.iter().sum();
    if total > 0 {
        let freq: Vec<f64> = accepted.iter().map(|&c| c as f64 / total as f64).collect();
        dir.write("frequencies.csv", &distribution_csv(opts.n, &freq))?;
    }
    if opts.n <= MAX_ENUMERATED_QUBITS {
        let exact = run_protocol_enumerated(&cfg)?;
        dir.write(
            "distribution.csv",
            &distribution_csv(opts.n, &exact.probabilities),
        )?;
    }
    Ok(ProtocolSummary {
        shots: records.len(),
        accepted_fraction: acceptance_fraction(&records),
        dir,
    })
}

// ---------------------------------------------------------------- tomography

/// Exact per-setting distributions, computed concurrently.
pub fn build_plan(template: &ProtocolConfig) -> CliResult<TomographyPlan> {
    let count = tomography_settings(template.n).map_err(usage)?.len();
    let distributions = (0..count)
        .into_par_iter()
        .map(|i| run_protocol_enumerated(&TomographyPlan::setting_config(template, i)?))
        .collect::<tlcs_core::Result<Vec<_>>>()?;
    Ok(TomographyPlan::from_distributions(template, distributions)?)
}

/// Per-setting accepted histograms; setting `i` uses seed `derive_seed(seed, i)`.
pub fn sample_counts(
    template: &ProtocolConfig,
    plan: &TomographyPlan,
    shots: usize,
    seed: u64,
) -> CliResult<Vec<SettingCounts>> {
    let counts = (0..plan.settings().len())
        .into_par_iter()
        .map(|i| match template.engine {
            SamplingEngine::Distribution => plan.sample_setting(i, shots, seed),
            SamplingEngine::Trajectory => {
                let cfg = TomographyPlan::setting_config(template, i)?
                    .with_shots(shots)
                    .with_seed(derive_seed(seed, i as u64));
                Ok(SettingCounts::from_records(
                    cfg.bases.clone(),
                    &run_protocol_shots(&cfg)?,
                ))
            }
        })
        .collect::<tlcs_core::Result<Vec<_>>>()?;
    Ok(counts)
}

/// Witness interval from `resamples` bootstrap resamples.
pub fn bootstrap_witness(
    counts: &[SettingCounts],
    n: usize,
    resamples: usize,
    seed: u64,
) -> CliResult<Option<(f64, f64)>> {
    if resamples == 0 {
        return Ok(None);
    }
    let seed = derive_seed(seed, u64::MAX);
    let fidelities = (0..resamples as u64)
        .into_par_iter()
        .map(|r| bootstrap_fidelity(counts, n, seed, r))
        .collect::<tlcs_core::Result<Vec<_>>>()?;
    let ci = percentile_interval(&fidelities, CONFIDENCE)?;
    Ok(Some((ci.witness_low, ci.witness_high)))
}

#[derive(Debug, Clone)]
pub struct TomographyOptions {
    pub n: usize,
    pub shots_per_setting: usize,
    pub seed: u64,
    pub engine: SamplingEngine,
    pub bootstrap: usize,
    /// Use infinite-shot expectations instead of sampling.
    pub exact: bool,
    pub noise: NoiseOptions,
}

#[derive(Debug, Clone)]
pub struct TomographySummary {
    pub result: ReconstructionResult,
    pub interval: Option<(f64, f64)>,
    pub dir: RunDir,
}

fn tomography_template(
    n: usize,
    noise: &NoiseOptions,
    seed: u64,
    engine: SamplingEngine,
) -> CliResult<(ProtocolConfig, Option<NoiseParams>)> {
    let params = noise.resolve()?;
    let template = ProtocolConfig::new(n, vec![Basis::Z; n])
        .map_err(usage)?
        .with_noise(params.clone())
        .with_heralding(!noise.no_herald)
        .with_seed(seed)
        .with_engine(engine);
    tomography_settings(n).map_err(usage)?;
    Ok((template, params))
}

pub fn cmd_tomography(opts: &TomographyOptions, out_root: &Path) -> CliResult<TomographySummary> {
    if opts.shots_per_setting == 0 && !opts.exact {
        return Err(CliError::Usage(
            "--shots-per-setting must be positive".into(),
        ));
    }
    let (template, params) = tomography_template(opts.n, &opts.noise, opts.seed, opts.engine)?;
    let plan = build_plan(&template)?;
    let (table, counts) = if opts.exact {
        (plan.exact_table()?, None)
    } else {
        let counts = sample_counts(&template, &plan, opts.shots_per_setting, opts.seed)?;
        (
            ExpectationTable::from_setting_counts(opts.n, &counts)?,
            Some(counts),
        )
    };
    let result = reconstruct(&table, opts.n)?;
    let interval = match &counts {
        Some(c) => bootstrap_witness(c, opts.n, opts.bootstrap, opts.seed)?,
        None => None,
    };

    let mode = if opts.exact {
        "-exact".to_string()
    } else {
        format!("-s{}", opts.shots_per_setting)
    };
    let dir = RunDir::create(
        out_root,
        &format!(
            "tomography-n{}{}-seed{}{}",
            opts.n,
            mode,
            opts.seed,
            opts.noise.suffix()
        ),
    )?;
    dir.write_config(params.as_ref())?;
    dir.write(
        "run.txt",
        &run_parameters(&[
            ("command", "tomography".into()),
            ("n", opts.n.to_string()),
            ("shots_per_setting", opts.shots_per_setting.to_string()),
            ("seed", opts.seed.to_string()),
            ("engine", opts.engine.as_str().into()),
            ("exact", opts.exact.to_string()),
            ("bootstrap", opts.bootstrap.to_string()),
            ("heralding", template.heralding.to_string()),
        ]),
    )?;
    if let Some(c) = &counts {
        dir.write("counts.csv", &counts_csv(c))?;
    }
    dir.write("expectations.csv", &expectation_csv(&table))?;
    dir.write("rho.json", &matrix_json_text(result.rho_hat.matrix()))?;
    dir.write(
        "rho_linear.json",
        &matrix_json_text(&result.raw_linear_inversion),
    )?;
    let (ci_low, ci_high) = interval.unwrap_or((f64::NAN, f64::NAN));
    dir.write(
        "summary.csv",
        &witness_summary_csv(&[WitnessSummary {
            n: opts.n,
            fidelity: result.fidelity,
            witness: result.witness,
            ci_low,
            ci_high,
        }]),
    )?;
    Ok(TomographySummary {
        result,
        interval,
        dir,
    })
}

// ---------------------------------------------------------------- witness sweep

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub n_min: usize,
    pub n_max: usize,
    /// One count per chain length, or a single count for all.
    pub reps: Vec<usize>,
    pub shots_per_setting: usize,
    pub seed: u64,
    pub engine: SamplingEngine,
    pub bootstrap: usize,
    pub noise: NoiseOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub fidelities: Vec<f64>,
    pub witnesses: Vec<f64>,
    /// Infinite-shot witness of the same model.
    pub exact_witness: f64,
    pub interval: Option<(f64, f64)>,
}

impl SweepPoint {
    pub fn median_fidelity(&self) -> f64 {
        median(&self.fidelities)
    }

    pub fn median_witness(&self) -> f64 {
        median(&self.witnesses)
    }
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
    pub dir: RunDir,
}

fn sweep_reps(opts: &SweepOptions) -> CliResult<Vec<usize>> {
    if opts.n_min > opts.n_max {
        return Err(CliError::Usage("--n-min must not exceed --n-max".into()));
    }
    let count = opts.n_max - opts.n_min + 1;
    let reps = match opts.reps.len() {
        1 => vec![opts.reps[0]; count],
        len if len == count => opts.reps.clone(),
        len => {
            return Err(CliError::Usage(format!(
                "--reps lists {len} counts for {count} chain lengths"
            )))
        }
    };
    if reps.contains(&0) || opts.shots_per_setting == 0 {
        return Err(CliError::Usage(
            "repetitions and shots must be positive".into(),
        ));
    }
    Ok(reps)
}

/// Repeated tomography at one chain length; repetition `r` uses seed
/// `derive_seed(derive_seed(seed, n), r)`.
pub fn sweep_point(
    template: &ProtocolConfig,
    reps: usize,
    shots: usize,
    seed: u64,
    bootstrap: usize,
) -> CliResult<SweepPoint> {
    let n = template.n;
    let plan = build_plan(template)?;
    let point_seed = derive_seed(seed, n as u64);
    let runs = (0..reps as u64)
        .map(|r| {
            let counts = sample_counts(template, &plan, shots, derive_seed(point_seed, r))?;
            let table = ExpectationTable::from_setting_counts(n, &counts)?;
            Ok((reconstruct(&table, n)?, counts))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let exact = reconstruct(&plan.exact_table()?, n)?;
    let interval = bootstrap_witness(&runs[0].1, n, bootstrap, point_seed)?;
    Ok(SweepPoint {
        n,
        fidelities: runs.iter().map(|(r, _)| r.fidelity).collect(),
        witnesses: runs.iter().map(|(r, _)| r.witness).collect(),
        exact_witness: exact.witness,
        interval,
    })
}

pub fn cmd_witness_sweep(opts: &SweepOptions, out_root: &Path) -> CliResult<SweepSummary> {
    let reps = sweep_reps(opts)?;
    let mut points = Vec::new();
    let mut params = None;
    for (n, &r) in (opts.n_min..=opts.n_max).zip(&reps) {
        let (template, p) = tomography_template(n, &opts.noise, opts.seed, opts.engine)?;
        params = p;
        points.push(sweep_point(
            &template,
            r,
            opts.shots_per_setting,
            opts.seed,
            opts.bootstrap,
        )?);
    }

    let dir = RunDir::create(
        out_root,
        &format!(
            "witness-sweep-n{}-{}-s{}-seed{}{}",
            opts.n_min,
            opts.n_max,
            opts.shots_per_setting,
            opts.seed,
            opts.noise.suffix()
        ),
    )?;
    dir.write_config(params.as_ref())?;
    dir.write(
        "run.txt",
        &run_parameters(&[
            ("command", "witness-sweep".into()),
            ("n_min", opts.n_min.to_string()),
            ("n_max", opts.n_max.to_string()),
            (
                "reps",
                reps.iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("shots_per_setting", opts.shots_per_setting.to_string()),
            ("seed", opts.seed.to_string()),
            ("engine", opts.engine.as_str().into()),
            ("bootstrap", opts.bootstrap.to_string()),
            ("heralding", (!opts.noise.no_herald).to_string()),
        ]),
    )?;
    let mut reps_csv = String::from("N,rep,fidelity,witness\n");
    for p in &points {
        for (i, (f, w)) in p.fidelities.iter().zip(&p.witnesses).enumerate() {
            let _ = writeln!(reps_csv, "{},{},{},{}", p.n, i, f, w);
        }
    }
    dir.write("witness_reps.csv", &reps_csv)?;
    let summary: Vec<WitnessSummary> = points
        .iter()
        .map(|p| {
            let (lo, hi) = p.interval.unwrap_or((f64::NAN, f64::NAN));
            WitnessSummary {
                n: p.n,
                fidelity: p.median_fidelity(),
                witness: p.median_witness(),
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();
    dir.write("summary.csv", &witness_summary_csv(&summary))?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut w = p.witnesses.clone();
            w.sort_by(f64::total_cmp);
            vec![
                p.n as f64,
                w[0],
                quantile(&w, 0.25),
                quantile(&w, 0.5),
                quantile(&w, 0.75),
                w[w.len() - 1],
                p.exact_witness,
            ]
        })
        .collect();
    dir.write(
        "witness.dat",
        &gnuplot_data(&["N", "min", "q1", "median", "q3", "max", "exact"], &rows),
    )?;
    Ok(SweepSummary { points, dir })
}

/// Parses a comma-separated list of repetition counts.
pub fn parse_reps(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid repetition count `{x}`"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tlcs_core::linalg::Complex64;

    #[test]
    fn sign_error_breaks_identity() {
        let report = verify(&VerifyOptions {
            states: 10,
            inject_cnot_sign_error: true,
            ..VerifyOptions::default()
        })
        .unwrap();
        assert!(!report.passed());
        let swap = &report.checks[0];
        assert!(!swap.passed);
        assert!(swap.counterexample.is_some());
    }

    #[test]
    fn reps_expansion() {
        let mut opts = SweepOptions {
            n_min: 3,
            n_max: 5,
            reps: vec![50, 50, 20],
            shots_per_setting: 10,
            seed: 0,
            engine: SamplingEngine::Distribution,
            bootstrap: 0,
            noise: NoiseOptions::default(),
        };
        assert_eq!(sweep_reps(&opts).unwrap(), vec![50, 50, 20]);
        opts.reps = vec![4];
        assert_eq!(sweep_reps(&opts).unwrap(), vec![4, 4, 4]);
        opts.reps = vec![1, 2];
        assert!(matches!(sweep_reps(&opts), Err(CliError::Usage(_))));
        assert_eq!(parse_reps("50, 50,20").unwrap(), vec![50, 50, 20]);
        assert!(parse_reps("5,x").is_err());
    }

    #[test]
    fn oracle_settings_cover_small_chains() {
        assert_eq!(oracle_settings(3, 50, 0).len(), 27);
        assert_eq!(oracle_settings(5, 50, 0).len(), 50);
        assert_eq!(oracle_settings(5, 50, 1), oracle_settings(5, 50, 1));
    }

    #[test]
    fn complex_format() {
        let psi =
            StateVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(
            format_state(&psi),
            "[+1.000000+0.000000i, +0.000000+0.000000i]"
        );
    }
}
