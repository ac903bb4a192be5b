//! `value`: V0, V∞ or V_d at a point or on a grid.

use rayon::prelude::*;
use serde::Serialize;
use twopatch_core::{value_at, value_grid_with, GridSpec, State, ValueGrid, ValueKind};

use crate::config::ScenarioConfig;
use crate::output;
use crate::{ensure_dir, CliError, Status};

pub fn point(cfg: &ScenarioConfig, kind: ValueKind, x: State) -> Result<f64, CliError> {
    Ok(value_at(kind, x, &cfg.params, &cfg.growth, &cfg.sim)?)
}

/// Nodes are evaluated in parallel and collected in grid order.
pub fn grid(cfg: &ScenarioConfig, kind: ValueKind, spec: GridSpec) -> Result<ValueGrid, CliError> {
    Ok(value_grid_with(kind, spec, &cfg.params, |nodes| {
        nodes
            .par_iter()
            .map(|&x| value_at(kind, x, &cfg.params, &cfg.growth, &cfg.sim))
            .collect()
    })?)
}

pub fn default_grid(cfg: &ScenarioConfig) -> GridSpec {
    GridSpec {
        lo: cfg.grid.lo,
        hi: cfg.grid.hi,
        n: cfg.grid.n,
    }
}

#[derive(Serialize)]
struct GridMeta<'a> {
    which: &'a str,
    d: Option<f64>,
    r: f64,
    s_bar: f64,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
    order: &'static str,
    units: &'static str,
    csv: String,
    config_hash: String,
}

pub fn run_point(cfg: &ScenarioConfig, kind: ValueKind, x: State) -> Result<Status, CliError> {
    let v = point(cfg, kind, x)?;
    println!("{v}");
    Ok(Status::Ok)
}

/// Writes `value_<which>.csv` with columns `s1,s2,value` and a JSON sidecar.
pub fn run_grid(cfg: &ScenarioConfig, kind: ValueKind, spec: GridSpec) -> Result<Status, CliError> {
    let g = grid(cfg, kind, spec)?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let csv_name = format!("value_{}.csv", kind.name());
    let rows = spec
        .nodes()
        .into_iter()
        .zip(&g.values)
        .map(|(x, v)| vec![x.s1.to_string(), x.s2.to_string(), v.to_string()]);
    output::write_csv(&dir.join(&csv_name), &["s1", "s2", "value"], rows)?;
    let meta = GridMeta {
        which: kind.name(),
        d: match kind {
            ValueKind::Vd(d) => Some(d),
            _ => None,
        },
        r: g.r,
        s_bar: g.s_bar,
        lo: spec.lo,
        hi: spec.hi,
        n: spec.n,
        order: "s1 outer, s2 inner",
        units: "h",
        csv: csv_name,
        config_hash: cfg.hash(),
    };
    output::write_json(&dir.join(format!("value_{}.json", kind.name())), &meta)?;
    let max = g.values.iter().cloned().fold(0.0, f64::max);
    println!("{} grid {}x{}: max {max:.4} h", kind.name(), spec.n[0], spec.n[1]);
    Ok(Status::Ok)
}
