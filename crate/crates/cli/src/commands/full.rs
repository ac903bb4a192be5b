//! `full`: the slow-fast bioreactor model over a list of volume ratios ε.

use rayon::prelude::*;
use serde::Serialize;
use twopatch_core::{
    default_full_start, simulate_full, value_at, FullParams, FullState, FullTrajectory, Strategy, Termination,
    ValueKind,
};

use crate::config::{ScenarioConfig, StrategySpec};
use crate::output::{self, EventsJson};
use crate::{ensure_dir, CliError, Status};

#[derive(Debug, Clone, Serialize)]
pub struct FullRun {
    pub epsilon: f64,
    #[serde(flatten)]
    pub events: EventsJson,
    /// Reach time in fast time t = τ/ε.
    pub t_f_fast: Option<f64>,
    pub gap: Option<f64>,
    pub csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FullReport {
    pub config_hash: String,
    pub units: &'static str,
    pub strategy: String,
    pub x0: [f64; 2],
    pub r: f64,
    pub d: f64,
    pub s_bar: f64,
    pub x_r0: f64,
    pub s_r0: f64,
    /// `None` when the reduced run itself misses the target.
    pub v_d: Option<f64>,
    pub runs: Vec<FullRun>,
    /// Gap |t_f − V_d| decreases as ε decreases.
    pub gap_monotone: bool,
}

fn strategy(cfg: &ScenarioConfig) -> Result<Strategy, CliError> {
    match cfg.strategy {
        StrategySpec::Fixed(s) => Ok(s),
        StrategySpec::BestConstant => Err(CliError::Config(
            "full: bestconst is not supported, name a fixed strategy".into(),
        )),
    }
}

pub fn start(cfg: &ScenarioConfig, strategy: &Strategy) -> Result<FullState, CliError> {
    let mut x = default_full_start(strategy, cfg.x0, &cfg.params, &cfg.growth, &cfg.sim)?;
    x.x_r = cfg.full.x_r0;
    if let Some(s) = cfg.full.s_r0 {
        x.s_r = s;
    }
    Ok(x)
}

/// One trajectory per ε, in config order, plus the reduced value.
pub fn compute(cfg: &ScenarioConfig) -> Result<(FullReport, Vec<FullTrajectory>), CliError> {
    let strategy = strategy(cfg)?;
    let x0 = start(cfg, &strategy)?;
    let v_d = match value_at(ValueKind::Vd(cfg.params.d), cfg.x0, &cfg.params, &cfg.growth, &cfg.sim) {
        Ok(v) => Some(v),
        Err(twopatch_core::Error::NoTarget) => None,
        Err(e) => return Err(e.into()),
    };
    let trajs: Vec<FullTrajectory> = cfg
        .full
        .epsilons
        .par_iter()
        .map(|&eps| {
            let p = FullParams::new(cfg.params, eps)?;
            simulate_full(&strategy, x0, &p, &cfg.growth, &cfg.sim)
        })
        .collect::<Result<_, _>>()?;
    let runs: Vec<FullRun> = cfg
        .full
        .epsilons
        .iter()
        .zip(&trajs)
        .map(|(&eps, tr)| FullRun {
            epsilon: eps,
            events: (&tr.events).into(),
            t_f_fast: tr.events.t_f.map(|t| t / eps),
            gap: tr.events.t_f.zip(v_d).map(|(t, v)| (t - v).abs()),
            csv: format!("full_eps_{eps}.csv"),
        })
        .collect();
    let mut by_eps: Vec<(f64, Option<f64>)> = runs.iter().map(|r| (r.epsilon, r.gap)).collect();
    by_eps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let gap_monotone = by_eps
        .windows(2)
        .all(|w| matches!((w[0].1, w[1].1), (Some(a), Some(b)) if b < a));
    let report = FullReport {
        config_hash: cfg.hash(),
        units: "h",
        strategy: strategy.to_string(),
        x0: [cfg.x0.s1, cfg.x0.s2],
        r: cfg.params.r,
        d: cfg.params.d,
        s_bar: cfg.params.s_bar,
        x_r0: x0.x_r,
        s_r0: x0.s_r,
        v_d,
        runs,
        gap_monotone,
    };
    Ok((report, trajs))
}

/// Writes `full_eps_<ε>.csv` per ε and `full.json`.
pub fn run(cfg: &ScenarioConfig) -> Result<Status, CliError> {
    let (report, trajs) = compute(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    for (run, tr) in report.runs.iter().zip(&trajs) {
        output::write_csv(
            &cfg.output_dir.join(&run.csv),
            &output::FULL_HEADER,
            output::full_rows(tr),
        )?;
    }
    output::write_json(&cfg.output_dir.join("full.json"), &report)?;
    match report.v_d {
        Some(v) => println!("reduced value V_d = {v:.4} h"),
        None => println!("reduced model misses the target before the horizon"),
    }
    for r in &report.runs {
        match (r.events.t_f, r.gap) {
            (Some(t), Some(g)) => println!("eps = {}: t_f = {t:.4} h (slow time), gap {g:.2e}", r.epsilon),
            (Some(t), None) => println!("eps = {}: t_f = {t:.4} h (slow time)", r.epsilon),
            (None, _) => println!("eps = {}: horizon reached without hitting the target", r.epsilon),
        }
    }
    let horizon = trajs.iter().any(|t| t.events.reason == Termination::Horizon);
    Ok(if horizon { Status::Horizon } else { Status::Ok })
}
