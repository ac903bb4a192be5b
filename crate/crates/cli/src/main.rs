use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twopatch::commands::{compare, full, gamma, simulate, value, verify};
use twopatch::config::{parse_override, parse_state};
use twopatch::{CliError, ScenarioConfig, Status};
use twopatch_core::ValueKind;

#[derive(Parser, Debug)]
#[command(
    name = "twopatch",
    version,
    about = "Minimal-time bioremediation of a two-patch water resource"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file of `key = value` lines
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set params.d=10` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true, value_parser = parse_override)]
    set: Vec<(String, String)>,
    /// Output directory (output.dir)
    #[arg(short, long, global = true)]
    out: Option<String>,
    /// Seed for randomized suites (seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one strategy; writes trajectory.csv and events.json
    Simulate {
        /// optimal, onepump:1, onepump:2, homog, const:A:Z, constsr:A:S or bestconst
        #[arg(long)]
        strategy: Option<String>,
        /// Initial state `s1,s2` (g/L)
        #[arg(long)]
        x0: Option<String>,
        /// Diffusion d (1/h)
        #[arg(long)]
        d: Option<String>,
    },
    /// Value function at a point, or on the configured grid
    Value {
        #[arg(long, value_enum)]
        which: Which,
        /// Diffusion for `vd` (defaults to params.d)
        #[arg(long)]
        d: Option<String>,
        /// Evaluate at `s1,s2`
        #[arg(long, conflicts_with = "grid")]
        point: Option<String>,
        /// Evaluate on the value.lo/value.hi/value.n grid; writes CSV + JSON
        #[arg(long)]
        grid: bool,
    },
    /// Table of V_d, best constant and one-pump times
    Compare {
        /// Initial states `s1,s2;s1,s2;...`
        #[arg(long)]
        x0: Option<String>,
        /// Diffusions `d,d,...`
        #[arg(long)]
        d: Option<String>,
        /// Thresholds `s,s,...`
        #[arg(long)]
        s_bar: Option<String>,
    },
    /// Pontryagin and HJB checks on seeded scenarios; writes verify.json
    Verify {
        /// Swap the recorded bang branches before checking (must fail)
        #[arg(long)]
        corrupt: bool,
        /// Number of random scenarios
        #[arg(long)]
        count: Option<usize>,
    },
    /// Slow-fast bioreactor model over a list of epsilon values
    Full {
        /// Volume ratios `eps,eps,...`
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        d: Option<String>,
    },
    /// Tabulate mu, shat, gamma and T; writes gamma.csv
    Gamma {
        #[arg(long)]
        s_max: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    V0,
    Vinf,
    Vd,
}

fn push(overrides: &mut Vec<(String, String)>, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        overrides.push((key.to_string(), v.to_string()));
    }
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let mut ov = cli.common.set.clone();
    push(&mut ov, "output.dir", cli.common.out.as_ref());
    push(&mut ov, "seed", cli.common.seed);
    match &cli.command {
        Command::Simulate { strategy, x0, d } => {
            push(&mut ov, "strategy", strategy.as_ref());
            push(&mut ov, "init.x0", x0.as_ref());
            push(&mut ov, "params.d", d.as_ref());
        }
        Command::Value { d, .. } => push(&mut ov, "params.d", d.as_ref()),
        Command::Compare { x0, d, s_bar } => {
            push(&mut ov, "compare.x0", x0.as_ref());
            push(&mut ov, "compare.d", d.as_ref());
            push(&mut ov, "compare.s_bar", s_bar.as_ref());
        }
        Command::Verify { count, .. } => push(&mut ov, "verify.count", *count),
        Command::Full { eps, x0, d } => {
            push(&mut ov, "full.epsilon", eps.as_ref());
            push(&mut ov, "init.x0", x0.as_ref());
            push(&mut ov, "params.d", d.as_ref());
        }
        Command::Gamma { s_max, n } => {
            push(&mut ov, "gamma.s_max", s_max.as_ref());
            push(&mut ov, "gamma.n", *n);
        }
    }
    let cfg = ScenarioConfig::load(cli.common.config.as_deref(), &ov)?;
    match cli.command {
        Command::Simulate { .. } => simulate::run(&cfg),
        Command::Value { which, point, grid, .. } => {
            let kind = match which {
                Which::V0 => ValueKind::V0,
                Which::Vinf => ValueKind::Vinf,
                Which::Vd => ValueKind::Vd(cfg.params.d),
            };
            if grid {
                let spec = value::default_grid(&cfg);
                value::run_grid(&cfg, kind, spec)
            } else {
                let x = match point {
                    Some(p) => parse_state(&p).map_err(|e| CliError::Config(format!("--point: {e}")))?,
                    None => cfg.x0,
                };
                value::run_point(&cfg, kind, x)
            }
        }
        Command::Compare { .. } => compare::run(&cfg),
        Command::Verify { corrupt, .. } => verify::run(&cfg, corrupt),
        Command::Full { .. } => full::run(&cfg),
        Command::Gamma { .. } => gamma::run(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("twopatch: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
