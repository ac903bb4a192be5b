//! `compare`: optimal value against the best constant control and the
//! one-pump feedback, laid out per threshold, initial state and diffusion.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use twopatch_core::{
    best_constant_search, simulate, value_at, ConstantFamily, ConstantSearch, Patch, ReducedParams, State, Strategy,
    ValueKind,
};

use super::finite;
use crate::config::{OnePatch, ScenarioConfig};
use crate::output;
use crate::{ensure_dir, CliError, Status};

#[derive(Debug, Clone, Serialize)]
pub struct ConstantCell {
    pub family: &'static str,
    pub t: Option<f64>,
    pub alpha: Option<f64>,
    /// ζ or s*ᵣ/s̄ depending on the family.
    pub coord: Option<f64>,
    pub sr_star: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub s_bar: f64,
    pub x0: [f64; 2],
    pub d: f64,
    pub v_d: Option<f64>,
    pub t_cst: Option<f64>,
    pub t_cst_increase_pct: Option<f64>,
    pub t_one: Option<f64>,
    pub t_one_increase_pct: Option<f64>,
    pub constant: ConstantCell,
    pub constant_extra: Option<ConstantCell>,
    pub t_one_patch1: Option<f64>,
    pub t_one_patch2: Option<f64>,
    pub errors: Vec<String>,
    /// Failures in the extra constant family; these do not fail the cell.
    pub warnings: Vec<String>,
}

impl Cell {
    pub fn failed(&self) -> bool {
        !self.errors.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub units: &'static str,
    pub config_hash: String,
    pub r: f64,
    pub constant_family: &'static str,
    pub one_patch: &'static str,
    pub thresholds: Vec<f64>,
    pub initial_states: Vec<[f64; 2]>,
    pub diffusions: Vec<f64>,
    /// Ordered by threshold, then initial state, then diffusion.
    pub cells: Vec<Cell>,
    pub failed_cells: usize,
}

impl CompareReport {
    pub fn cell(&self, s_bar: f64, x0: State, d: f64) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.s_bar == s_bar && c.x0 == [x0.s1, x0.s2] && c.d == d)
    }
}

/// (T − V)/V in percent; 0 when both vanish.
pub fn increase_pct(t: f64, v: f64) -> f64 {
    if t == v {
        0.0
    } else {
        (t - v) / v * 100.0
    }
}

fn constant_cell(
    family: ConstantFamily,
    x0: State,
    p: &ReducedParams,
    cfg: &ScenarioConfig,
    errors: &mut Vec<String>,
    label: &str,
) -> ConstantCell {
    let search = ConstantSearch { family, ..cfg.search };
    match best_constant_search(x0, p, &cfg.growth, &cfg.sim, &search) {
        Ok(b) => ConstantCell {
            family: family.as_str(),
            t: finite(b.t_f),
            alpha: Some(b.alpha),
            coord: Some(b.coord),
            sr_star: matches!(family, ConstantFamily::Setpoint).then_some(b.coord * p.s_bar),
        },
        Err(e) => {
            errors.push(format!("{label}: {e}"));
            ConstantCell {
                family: family.as_str(),
                t: None,
                alpha: None,
                coord: None,
                sr_star: None,
            }
        }
    }
}

fn one_pump_time(x0: State, patch: Patch, p: &ReducedParams, cfg: &ScenarioConfig) -> Result<f64, String> {
    let tr = simulate(&Strategy::OnePump(patch), x0, p, &cfg.growth, &cfg.sim).map_err(|e| e.to_string())?;
    tr.events
        .t_f
        .ok_or_else(|| "target not reached before the horizon".to_string())
}

pub fn compute_cell(cfg: &ScenarioConfig, s_bar: f64, x0: State, d: f64) -> Cell {
    let mut errors = Vec::new();
    let p = match ReducedParams::new(cfg.params.r, d, s_bar) {
        Ok(p) => p,
        Err(e) => {
            errors.push(e.to_string());
            cfg.params
        }
    };
    let v_d = match value_at(ValueKind::Vd(d), x0, &p, &cfg.growth, &cfg.sim) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("V_d: {e}"));
            None
        }
    };
    let constant = constant_cell(cfg.compare.family, x0, &p, cfg, &mut errors, "T_cst");
    if constant.alpha.is_some() && constant.t.is_none() {
        errors.push("T_cst: no constant control reaches the target".into());
    }
    let mut extra_errors = Vec::new();
    let constant_extra = cfg
        .compare
        .extra_family
        .map(|f| constant_cell(f, x0, &p, cfg, &mut extra_errors, "T_cst extra"));

    let one = one_pump_time(x0, Patch::One, &p, cfg);
    let two = one_pump_time(x0, Patch::Two, &p, cfg);
    let t_one = match cfg.compare.one_patch {
        OnePatch::One => one.clone(),
        OnePatch::Two => two.clone(),
        OnePatch::Best => match (&one, &two) {
            (Ok(a), Ok(b)) => Ok(a.min(*b)),
            (Ok(a), Err(_)) | (Err(_), Ok(a)) => Ok(*a),
            (Err(e), Err(_)) => Err(e.clone()),
        },
    };
    let t_one = match t_one {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(format!("T_one: {e}"));
            None
        }
    };
    let pct = |t: Option<f64>| Some(increase_pct(t?, v_d?));
    Cell {
        s_bar,
        x0: [x0.s1, x0.s2],
        d,
        v_d,
        t_cst: constant.t,
        t_cst_increase_pct: pct(constant.t),
        t_one,
        t_one_increase_pct: pct(t_one),
        constant,
        constant_extra,
        t_one_patch1: one.ok(),
        t_one_patch2: two.ok(),
        errors,
        warnings: extra_errors,
    }
}

/// Every (threshold, initial state, diffusion) cell, computed in parallel.
pub fn compute(cfg: &ScenarioConfig) -> CompareReport {
    let c = &cfg.compare;
    let jobs: Vec<(f64, State, f64)> = c
        .s_bars
        .iter()
        .flat_map(|&sb| c.x0s.iter().flat_map(move |&x| c.ds.iter().map(move |&d| (sb, x, d))))
        .collect();
    let cells: Vec<Cell> = jobs.par_iter().map(|&(sb, x, d)| compute_cell(cfg, sb, x, d)).collect();
    CompareReport {
        units: "h",
        config_hash: cfg.hash(),
        r: cfg.params.r,
        constant_family: c.family.as_str(),
        one_patch: c.one_patch.as_str(),
        thresholds: c.s_bars.clone(),
        initial_states: c.x0s.iter().map(|x| [x.s1, x.s2]).collect(),
        diffusions: c.ds.clone(),
        failed_cells: cells.iter().filter(|c| c.failed()).count(),
        cells,
    }
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or("--".to_string(), |t| format!("{t:.2}"))
}

fn fmt_pct(p: Option<f64>) -> String {
    p.map_or(String::new(), |p| format!("(+{p:.2}%)"))
}

/// Plain-text table: one block per threshold, a row of times per initial
/// state followed by the percentage increases over V_d.
pub fn render(report: &CompareReport) -> String {
    let mut out = String::new();
    let nd = report.diffusions.len();
    let w = 12;
    for &sb in &report.thresholds {
        let _ = writeln!(out, "r = {}, s_bar = {} g/L, times in hours", report.r, sb);
        let mut head = format!("{:<14}", "");
        for name in ["V_d", "T_cst", "T_one"] {
            head.push_str(&format!("{:<width$}", name, width = w * nd));
        }
        let _ = writeln!(out, "{}", head.trim_end());
        let mut sub = format!("{:<14}", "");
        for _ in 0..3 {
            for d in &report.diffusions {
                sub.push_str(&format!("{:<w$}", format!("d={d}")));
            }
        }
        let _ = writeln!(out, "{}", sub.trim_end());
        for x in &report.initial_states {
            let cells: Vec<&Cell> = report.cells.iter().filter(|c| c.s_bar == sb && c.x0 == *x).collect();
            let mut row = format!("{:<14}", format!("({}, {})", x[0], x[1]));
            let mut inc = format!("{:<14}", "  increase");
            for c in &cells {
                row.push_str(&format!("{:<w$}", fmt_time(c.v_d)));
                inc.push_str(&format!("{:<w$}", ""));
            }
            for c in &cells {
                row.push_str(&format!("{:<w$}", fmt_time(c.t_cst)));
                inc.push_str(&format!("{:<w$}", fmt_pct(c.t_cst_increase_pct)));
            }
            for c in &cells {
                row.push_str(&format!("{:<w$}", fmt_time(c.t_one)));
                inc.push_str(&format!("{:<w$}", fmt_pct(c.t_one_increase_pct)));
            }
            let _ = writeln!(out, "{}", row.trim_end());
            let _ = writeln!(out, "{}", inc.trim_end());
            for c in cells.iter().filter(|c| c.failed()) {
                let _ = writeln!(out, "  ! d={}: {}", c.d, c.errors.join("; "));
            }
        }
        out.push('\n');
    }
    out
}

/// Prints the table and writes `compare.txt` and `compare.json`.
pub fn run(cfg: &ScenarioConfig) -> Result<Status, CliError> {
    let started = std::time::Instant::now();
    let report = compute(cfg);
    let text = render(&report);
    ensure_dir(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("compare.txt"), &text)?;
    output::write_json(&cfg.output_dir.join("compare.json"), &report)?;
    print!("{text}");
    eprintln!(
        "compare: {} cells in {:.1} s",
        report.cells.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(if report.failed_cells > 0 {
        Status::Partial
    } else {
        Status::Ok
    })
}
