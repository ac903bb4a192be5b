//! `gamma`: tabulates μ, ŝ, γ and T on [0, s_max].

use twopatch_core::TimeFunction;

use crate::config::ScenarioConfig;
use crate::output;
use crate::{ensure_dir, CliError, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRow {
    pub s: f64,
    pub mu: f64,
    pub shat: f64,
    pub gamma: f64,
    pub t: f64,
}

/// Evenly spaced rows from 0; at s = 0 the setpoint and envelope are 0.
pub fn compute(cfg: &ScenarioConfig) -> Result<Vec<GammaRow>, CliError> {
    let g = &cfg.growth;
    let tf = TimeFunction::new(g, cfg.params.s_bar);
    let n = cfg.gamma_n;
    (0..n)
        .map(|k| {
            let s = cfg.gamma_s_max * k as f64 / (n - 1) as f64;
            let (shat, gamma) = if s > 0.0 { (g.shat(s)?, g.gamma(s)?) } else { (0.0, 0.0) };
            Ok(GammaRow {
                s,
                mu: g.mu(s),
                shat,
                gamma,
                t: tf.eval(s)?,
            })
        })
        .collect()
}

/// Writes `gamma.csv` with columns `s,mu,shat,gamma,T`.
pub fn run(cfg: &ScenarioConfig) -> Result<Status, CliError> {
    let rows = compute(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    output::write_csv(
        &cfg.output_dir.join("gamma.csv"),
        &["s", "mu", "shat", "gamma", "T"],
        rows.iter()
            .map(|r| [r.s, r.mu, r.shat, r.gamma, r.t].map(|v| v.to_string())),
    )?;
    println!("gamma table: {} rows on [0, {}]", rows.len(), cfg.gamma_s_max);
    Ok(Status::Ok)
}
