use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tlcs::commands::{
    cmd_protocol, cmd_tomography, cmd_verify, cmd_witness_sweep, parse_reps, CliError, CliResult,
    NoiseOptions, ProtocolOptions, SweepOptions, TomographyOptions, VerifyOptions,
};
use tlcs_core::protocol::SamplingEngine;

#[derive(Parser)]
#[command(
    name = "tlcs",
    version,
    about = "Recycled two-qubit linear cluster state simulator"
)]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Root directory for run outputs.
    #[arg(long, global = true, env = "TLCS_OUT_DIR", default_value = "runs")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct NoiseArgs {
    /// Disable every noise source.
    #[arg(long)]
    no_noise: bool,
    /// Keep shots regardless of the herald outcome.
    #[arg(long)]
    no_herald: bool,
    /// Device parameter file replacing the bundled reference device.
    #[arg(long, conflicts_with = "no_noise")]
    noise_file: Option<PathBuf>,
}

impl From<NoiseArgs> for NoiseOptions {
    fn from(a: NoiseArgs) -> Self {
        NoiseOptions {
            no_noise: a.no_noise,
            no_herald: a.no_herald,
            noise_file: a.noise_file,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the gate identities and the time/space equivalence.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random states for the SWAP-elimination check.
        #[arg(long, default_value_t = 100)]
        states: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long, hide = true)]
        inject_cnot_sign_error: bool,
    },
    /// Sample single shots of the recycling protocol.
    Protocol {
        #[arg(long)]
        n: usize,
        /// Measurement basis per qubit, e.g. XZX.
        #[arg(long)]
        bases: String,
        #[arg(long, default_value_t = 2000)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "trajectory", value_parser = parse_engine)]
        engine: SamplingEngine,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Full state tomography of one chain length.
    Tomography {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        shots_per_setting: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "distribution", value_parser = parse_engine)]
        engine: SamplingEngine,
        /// Bootstrap resamples for the witness interval (0 disables).
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        /// Use exact expectations instead of sampled counts.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Repeated tomography over a range of chain lengths.
    WitnessSweep {
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        /// Repetitions per chain length, or one count for all.
        #[arg(long, default_value = "50,50,20", value_parser = parse_reps)]
        reps: RepCounts,
        #[arg(long, default_value_t = 2000)]
        shots_per_setting: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "distribution", value_parser = parse_engine)]
        engine: SamplingEngine,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[command(flatten)]
        noise: NoiseArgs,
    },
}

/// Parsed as one comma-separated argument.
type RepCounts = Vec<usize>;

fn parse_engine(s: &str) -> Result<SamplingEngine, String> {
    SamplingEngine::parse(s)
        .ok_or_else(|| format!("unknown engine `{s}` (trajectory, distribution)"))
}

fn fmt_interval(interval: Option<(f64, f64)>) -> String {
    match interval {
        Some((lo, hi)) => format!("[{lo:.4}, {hi:.4}]"),
        None => "n/a".into(),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Verify {
            seed,
            states,
            json,
            inject_cnot_sign_error,
        } => {
            let opts = VerifyOptions {
                seed,
                states,
                inject_cnot_sign_error,
            };
            let (report, dir) = cmd_verify(&opts, &cli.out_dir)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report.to_json()).expect("serializable")
                );
            } else {
                print!("{}", report.to_text());
                println!("report: {}", dir.path().join("report.json").display());
            }
            if !report.passed() {
                return Err(CliError::CheckFailed("verification failed".into()));
            }
        }
        Command::Protocol {
            n,
            bases,
            shots,
            seed,
            engine,
            noise,
        } => {
            let opts = ProtocolOptions {
                n,
                bases,
                shots,
                seed,
                engine,
                noise: noise.into(),
            };
            let s = cmd_protocol(&opts, &cli.out_dir)?;
            println!("shots: {}", s.shots);
            println!("accepted fraction: {:.4}", s.accepted_fraction);
            println!("output: {}", s.dir.path().display());
        }
        Command::Tomography {
            n,
            shots_per_setting,
            seed,
            engine,
            bootstrap,
            exact,
            noise,
        } => {
            let opts = TomographyOptions {
                n,
                shots_per_setting,
                seed,
                engine,
                bootstrap,
                exact,
                noise: noise.into(),
            };
            let s = cmd_tomography(&opts, &cli.out_dir)?;
            println!("N = {n}");
            println!("fidelity: {:.4}", s.result.fidelity);
            println!(
                "witness: {:+.4} {}",
                s.result.witness,
                fmt_interval(s.interval)
            );
            println!("output: {}", s.dir.path().display());
        }
        Command::WitnessSweep {
            n_min,
            n_max,
            reps,
            shots_per_setting,
            seed,
            engine,
            bootstrap,
            noise,
        } => {
            let opts = SweepOptions {
                n_min,
                n_max,
                reps,
                shots_per_setting,
                seed,
                engine,
                bootstrap,
                noise: noise.into(),
            };
            let s = cmd_witness_sweep(&opts, &cli.out_dir)?;
            println!("N  reps  median F  median W  exact W  witness interval");
            for p in &s.points {
                println!(
                    "{:<2} {:>4}  {:.4}    {:+.4}   {:+.4}  {}",
                    p.n,
                    p.witnesses.len(),
                    p.median_fidelity(),
                    p.median_witness(),
                    p.exact_witness,
                    fmt_interval(p.interval)
                );
            }
            println!("output: {}", s.dir.path().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
