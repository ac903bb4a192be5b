//! `simulate`: one trajectory of the reduced model.

use serde::Serialize;
use twopatch_core::{best_constant_search, simulate, BestConstant, State, Strategy, Termination, Trajectory};

use crate::config::{ScenarioConfig, StrategySpec};
use crate::output::{self, EventsJson};
use crate::{ensure_dir, CliError, Status};

#[derive(Debug, Clone)]
pub struct SimulateResult {
    pub strategy: Strategy,
    pub best: Option<BestConstant>,
    pub trajectory: Trajectory,
}

/// Resolves `bestconst` by search, then integrates.
pub fn compute(cfg: &ScenarioConfig, spec: StrategySpec, x0: State) -> Result<SimulateResult, CliError> {
    let (strategy, best) = match spec {
        StrategySpec::Fixed(s) => (s, None),
        StrategySpec::BestConstant => {
            let b = best_constant_search(x0, &cfg.params, &cfg.growth, &cfg.sim, &cfg.search)?;
            (cfg.search.family.strategy(b.alpha, b.coord, cfg.params.s_bar), Some(b))
        }
    };
    let trajectory = simulate(&strategy, x0, &cfg.params, &cfg.growth, &cfg.sim)?;
    Ok(SimulateResult {
        strategy,
        best,
        trajectory,
    })
}

#[derive(Serialize)]
struct EventsFile {
    #[serde(flatten)]
    events: EventsJson,
    strategy: String,
    x0: [f64; 2],
    config_hash: String,
}

/// Writes `trajectory.csv` and `events.json`.
pub fn run(cfg: &ScenarioConfig) -> Result<Status, CliError> {
    let res = compute(cfg, cfg.strategy, cfg.x0)?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    output::write_csv(
        &dir.join("trajectory.csv"),
        &output::TRAJECTORY_HEADER,
        output::trajectory_rows(&res.trajectory),
    )?;
    let events = &res.trajectory.events;
    output::write_json(
        &dir.join("events.json"),
        &EventsFile {
            events: events.into(),
            strategy: res.strategy.to_string(),
            x0: [cfg.x0.s1, cfg.x0.s2],
            config_hash: cfg.hash(),
        },
    )?;
    if let Some(b) = res.best {
        println!(
            "best constant: alpha = {}, {} = {}",
            b.alpha,
            cfg.search.family.as_str(),
            b.coord
        );
    }
    match events.t_f {
        Some(t) => println!("{}: t_f = {t:.4} h", res.strategy),
        None => println!("{}: horizon reached without hitting the target", res.strategy),
    }
    Ok(match events.reason {
        Termination::Target => Status::Ok,
        Termination::Horizon => Status::Horizon,
    })
}
