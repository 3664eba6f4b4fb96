use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use erbo::config::{MethodName, ScenarioConfig, SweepConfig};
use erbo::output;
use erbo::sweep::{self, UleSource};
use erbo_core::detector::calibrate;
use erbo_core::episode::{run_calibration, Policy, MIN_CALIBRATION_STEPS};

#[derive(Parser)]
#[command(name = "erbo", version, about = "Uncertainty-triggered emergency response experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Empirical,
    Burr,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    BoGp,
    Random,
    NoAction,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::BoGp => Policy::BoGp,
            PolicyArg::Random => Policy::RandomResponse,
            PolicyArg::NoAction => Policy::NoAction,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the upper error limit from an obstacle-free drive or an error file.
    Calibrate {
        #[arg(long, conflicts_with = "errors", required_unless_present = "errors")]
        scenario: Option<PathBuf>,
        /// One error per line, or a CSV with an `error` column.
        #[arg(long)]
        errors: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0.995)]
        rho: f64,
        #[arg(long, value_enum, default_value = "empirical")]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one episode and print its outcome.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "bo-gp")]
        policy: PolicyArg,
        /// Overrides the scenario's limit.
        #[arg(long)]
        ule: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        manual_trigger_dist: Option<f64>,
        /// Directory for the trace and responder CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run scenarios x policies x seeds and write CSV outputs.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the replication count in the config.
        #[arg(long)]
        reps: Option<u64>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the success-rate table of a sweep directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Calibrate { scenario, errors, steps, rho, method, out } => {
            let method = match method {
                MethodArg::Empirical => MethodName::Empirical,
                MethodArg::Burr => MethodName::Burr,
            };
            let (cal, samples) = match (scenario, errors) {
                (Some(path), _) => {
                    if steps < MIN_CALIBRATION_STEPS {
                        bail!("--steps must be at least {MIN_CALIBRATION_STEPS}");
                    }
                    let cfg = ScenarioConfig::load(&path)?;
                    let spec = cfg.spec().map_err(anyhow::Error::msg)?;
                    run_calibration(&spec, steps, rho, method.into())
                        .with_context(|| format!("calibrating {}", path.display()))?
                }
                (None, Some(path)) => {
                    let samples = output::read_errors(&path)?;
                    (calibrate(&samples, rho, method.into()).with_context(|| format!("calibrating {}", path.display()))?, samples)
                }
                (None, None) => unreachable!("clap requires one source"),
            };
            let report = output::calibration_report(&cal, samples.len());
            print!("{report}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                output::write_text(&dir.join("calibration.txt"), &report)?;
                output::write_csv(
                    &dir.join("nominal_errors.csv"),
                    &["step", "error"],
                    samples.iter().enumerate().map(|(i, e)| vec![i.to_string(), output::num(*e)]),
                )?;
            }
        }
        Command::Run { scenario, policy, ule, seed, manual_trigger_dist, out } => {
            let mut cfg = ScenarioConfig::load(&scenario)?;
            if let Some(d) = manual_trigger_dist {
                cfg.manual_trigger_distance = Some(d);
            }
            if let Some(u) = ule {
                cfg.ule = Some(u);
            }
            let (ule, source) = sweep::resolve_ule(&cfg)?;
            let rec = sweep::run_single(&cfg, policy.into(), ule, seed)?;
            let source = match source {
                UleSource::Explicit => "explicit",
                UleSource::Calibrated(_) => "calibrated",
            };
            println!("scenario = {}", cfg.name);
            println!("policy = {}", rec.policy.name());
            println!("seed = {seed}");
            println!("ule = {ule} ({source})");
            println!("trigger_step = {}", output::opt(rec.trigger_step));
            println!("trigger_distance = {}", output::opt(rec.trigger_distance));
            println!("response_actions = {}", rec.response_actions.len());
            println!("collided = {}", rec.collided);
            println!("off_road = {}", rec.off_road);
            println!("success = {}", rec.success);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                output::write_trace(&dir.join(sweep::run_file_name(&cfg.name, rec.policy, seed)), &rec.trace)?;
                if !rec.responder_log.is_empty() {
                    output::write_responder_log(&dir.join("responder.csv"), &rec.responder_log)?;
                }
            }
        }
        Command::Sweep { config, reps, jobs, out } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(r) = reps {
                if r == 0 {
                    bail!("--reps must be at least 1");
                }
                cfg.reps = r;
            }
            let result = sweep::run_sweep(&cfg, jobs)?;
            sweep::write_sweep(&result, &out)?;
            print!("{}", sweep::format_report(&result.summary));
        }
        Command::Report { input } => {
            let rows = sweep::read_summary(&input.join("summary.csv"))?;
            if rows.is_empty() {
                bail!("{} has no rows", input.join("summary.csv").display());
            }
            print!("{}", sweep::format_report(&rows));
        }
    }
    Ok(())
}
