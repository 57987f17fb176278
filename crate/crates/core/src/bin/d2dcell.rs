//! Command-line front end: experiments against a flat key=value config,
//! CSV artifacts on stdout or disk.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use d2dcell::experiments::{
    parse_config, report_passed, run_experiment, ExperimentId, ExperimentSpec, MethodSel,
    SweepRange,
};
use d2dcell::model::{Mode, NetworkConfig};

#[derive(Parser)]
#[command(
    name = "d2dcell",
    version,
    about = "Coverage and ASE of a D2D-underlaid uplink cellular network: closed forms cross-validated against a seeded Monte Carlo simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file; omitted keys keep defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every stochastic component.
    #[arg(long, global = true, default_value_t = 7240)]
    seed: u64,
    /// Size knob: Monte Carlo realizations (coverage, sweeps) or UE count
    /// (mode-prob, txpower-sweep).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Write the CSV artifact here instead of stdout only.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Engine selection: analytic | montecarlo | both.
    #[arg(long, global = true, default_value = "both")]
    method: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep start (experiment-specific default otherwise).
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    /// Sweep end, inclusive.
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    /// Sweep step, > 0.
    #[arg(long)]
    step: Option<f64>,
}

impl SweepArgs {
    fn range(&self) -> Result<Option<SweepRange>, String> {
        match (self.from, self.to, self.step) {
            (None, None, None) => Ok(None),
            (Some(from), Some(to), Some(step)) => Ok(Some(SweepRange { from, to, step })),
            _ => Err("sweep needs all of --from, --to, --step".into()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form cellular-mode probability vs the simulated UE fraction.
    ModeProb {
        #[command(flatten)]
        common: Common,
    },
    /// Mean cellular transmit power across a power-control target sweep.
    TxpowerSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Coverage probability over an SINR threshold grid.
    Coverage {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
        /// cellular | d2d | both
        #[arg(long, default_value = "both")]
        mode: String,
    },
    /// Per-tier and sum ASE across a UE-density sweep.
    AseSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Cellular coverage at 0 dB across a mode-threshold sweep.
    BetaSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Run the built-in validation criteria and report pass/fail.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Run a single criterion (e.g. AC-3).
        #[arg(long)]
        only: Option<String>,
    },
}

fn load_cfg(common: &Common) -> Result<NetworkConfig, String> {
    match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())
        }
        None => Ok(NetworkConfig::default()),
    }
}

fn build_spec(
    id: ExperimentId,
    common: &Common,
    sweep: Option<&SweepArgs>,
    mode: Option<&str>,
    only: Option<&String>,
) -> Result<ExperimentSpec, String> {
    let cfg = load_cfg(common)?;
    let mut spec = ExperimentSpec::new(id, cfg);
    spec.method = MethodSel::parse(&common.method).map_err(|e| e.to_string())?;
    spec.seed = common.seed;
    spec.n = common.n;
    spec.out = common.out.clone();
    spec.workers = common.workers;
    spec.only = only.cloned();
    if let Some(s) = sweep {
        spec.sweep = s.range()?;
    }
    if let Some(m) = mode {
        spec.mode = match m {
            "cellular" => Some(Mode::Cellular),
            "d2d" => Some(Mode::D2d),
            "both" => None,
            other => return Err(format!("unknown mode {other}")),
        };
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match &cli.command {
        Command::ModeProb { common } => build_spec(ExperimentId::ModeProb, common, None, None, None),
        Command::TxpowerSweep { common, sweep } => {
            build_spec(ExperimentId::TxPowerSweep, common, Some(sweep), None, None)
        }
        Command::Coverage {
            common,
            sweep,
            mode,
        } => build_spec(ExperimentId::Coverage, common, Some(sweep), Some(mode), None),
        Command::AseSweep { common, sweep } => {
            build_spec(ExperimentId::AseSweep, common, Some(sweep), None, None)
        }
        Command::BetaSweep { common, sweep } => {
            build_spec(ExperimentId::BetaSweep, common, Some(sweep), None, None)
        }
        Command::Validate { common, only } => {
            build_spec(ExperimentId::Validate, common, None, None, only.as_ref())
        }
    };
    let spec = match spec {
        Ok(s) => s,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    for w in spec.cfg.warnings() {
        eprintln!("warning: {w}");
    }
    match run_experiment(&spec) {
        Ok(csv) => {
            print!("{csv}");
            if spec.id == ExperimentId::Validate && !report_passed(&csv) {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
