//! `hetcache` command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use hetcache::experiments::{run_sweep, RunOptions, SweepSpec};
use hetcache::params::replication_probability;
use hetcache::sim::with_workers;
use hetcache::{Error, ModelConfig, OutageModel};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "hetcache", version, about = "Outage probability of cache-enabled small cell networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct SeedArgs {
    /// Master seed; overrides HETCACHE_SEED and any `seed` in the file.
    #[arg(long, env = "HETCACHE_SEED")]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form outage at one operating point, as JSON.
    Analytic {
        #[arg(long)]
        config: PathBuf,
        /// Report the breakdown for this content rank instead of the average.
        #[arg(long)]
        content_rank: Option<usize>,
    },
    /// Monte-Carlo outage estimate with standard error, as JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long)]
        content_rank: Option<usize>,
        /// Network realizations (overrides the file).
        #[arg(long)]
        realizations: Option<u32>,
        /// Requests per content per realization (overrides the file).
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Run a parameter sweep and write the table as CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArgs,
        /// Write 0 in the `wall_ms` column so repeated runs are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Serialize)]
struct AverageReport<'a> {
    policy: &'a str,
    library_size: usize,
    cache_slots: usize,
    delta: f64,
    avg_outage: f64,
}

#[derive(Serialize)]
struct SimReport<T: Serialize> {
    policy: &'static str,
    realizations: u32,
    trials_per_content: u32,
    #[serde(flatten)]
    estimate: T,
}

/// An input file that could not be read; reported as a configuration error.
#[derive(Debug)]
struct Unreadable(PathBuf);

impl std::fmt::Display for Unreadable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "cannot read {}", self.0.display())
    }
}

impl std::error::Error for Unreadable {}

fn read_input(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| anyhow::Error::new(e).context(Unreadable(path.to_owned())))
}

fn is_configuration(err: &anyhow::Error) -> bool {
    err.downcast_ref::<Unreadable>().is_some()
        || err.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_configuration))
}

fn emit_json(value: &impl Serialize) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn seed_for(flag: Option<u64>, file: Option<u64>) -> u64 {
    flag.or(file).unwrap_or(0)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analytic { config, content_rank } => {
            let text = read_input(&config)?;
            let cfg: ModelConfig = text.parse().with_context(|| config.display().to_string())?;
            let library = cfg.library().with_context(|| config.display().to_string())?;
            let requests = cfg.requests().with_context(|| config.display().to_string())?;
            let model = OutageModel::new(&cfg.params).with_context(|| config.display().to_string())?;
            match content_rank {
                Some(rank) => {
                    let p_c = replication_probability(cfg.policy, rank, &library)
                        .with_context(|| config.display().to_string())?;
                    emit_json(&model.breakdown(p_c)?)
                }
                None => emit_json(&AverageReport {
                    policy: cfg.policy.as_str(),
                    library_size: library.size(),
                    cache_slots: library.cache_slots(),
                    delta: cfg.delta,
                    avg_outage: model.average(cfg.policy, &library, &requests)?,
                }),
            }
        }
        Command::Simulate {
            config,
            seed,
            content_rank,
            realizations,
            trials,
        } => {
            let text = read_input(&config)?;
            let mut cfg: ModelConfig = text.parse().with_context(|| config.display().to_string())?;
            if let Some(r) = realizations {
                cfg.realizations = r;
            }
            if let Some(t) = trials {
                cfg.trials_per_content = t;
            }
            let master = seed_for(seed.seed, cfg.seed);
            let mc = cfg.monte_carlo(master).with_context(|| config.display().to_string())?;
            let library = cfg.library().with_context(|| config.display().to_string())?;
            let requests = cfg.requests().with_context(|| config.display().to_string())?;
            if let Some(rank) = content_rank {
                let est = with_workers(seed.workers, || mc.estimate_content(&cfg.params, cfg.policy, &library, rank))
                    .with_context(|| config.display().to_string())?
                    .with_context(|| config.display().to_string())?;
                emit_json(&SimReport {
                    policy: cfg.policy.as_str(),
                    realizations: mc.realizations,
                    trials_per_content: mc.trials_per_content,
                    estimate: est,
                })
            } else {
                let est = with_workers(seed.workers, || mc.estimate_outage(&cfg.params, cfg.policy, &library, &requests))
                    .with_context(|| config.display().to_string())?
                    .with_context(|| config.display().to_string())?;
                emit_json(&SimReport {
                    policy: cfg.policy.as_str(),
                    realizations: mc.realizations,
                    trials_per_content: mc.trials_per_content,
                    estimate: est,
                })
            }
        }
        Command::Sweep {
            spec,
            out,
            seed,
            no_timing,
        } => {
            let text = read_input(&spec)?;
            let parsed: SweepSpec = text.parse().with_context(|| spec.display().to_string())?;
            let opts = RunOptions {
                seed: seed_for(seed.seed, parsed.base.seed),
                timing: !no_timing,
            };
            let result = with_workers(seed.workers, || run_sweep(&parsed, opts))
                .with_context(|| spec.display().to_string())?
                .with_context(|| spec.display().to_string())?;
            let file = fs::File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
            let mut w = io::BufWriter::new(file);
            result.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn main_with(args: impl IntoIterator<Item = OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_configuration(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn main() -> ExitCode {
    main_with(std::env::args_os())
}
