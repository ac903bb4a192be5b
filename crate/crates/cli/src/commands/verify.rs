//! `verify`: Pontryagin extremality of seeded optimal runs and the HJB
//! residual of V₀.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use twopatch_core::{
    check_extremal, hjb_residual_v0, simulate, swap_branches, ExtremalReport, ExtremalTolerances, ReducedParams, State,
    Strategy,
};

use crate::config::ScenarioConfig;
use crate::output;
use crate::{ensure_dir, CliError, Status};

#[derive(Debug, Clone, Serialize)]
pub struct SampleJson {
    pub t: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    pub branch: &'static str,
    pub sign_violation: f64,
    pub branch_ok: bool,
    pub forbidden: bool,
    pub etadot_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioJson {
    pub x0: [f64; 2],
    pub d: f64,
    pub t_f: Option<f64>,
    pub pass: bool,
    pub max_sign_violation: f64,
    pub max_etadot_error: f64,
    pub branch_violations: usize,
    pub forbidden_violations: usize,
    pub eta_sign_changes: usize,
    pub error: Option<String>,
    pub samples: Vec<SampleJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HjbJson {
    pub grid_points: usize,
    pub kink_points: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceJson {
    pub sign: f64,
    pub etadot: f64,
    pub diagonal: f64,
    pub control: f64,
    pub fd_step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub corrupted: bool,
    pub tolerances: ToleranceJson,
    pub scenarios: Vec<ScenarioJson>,
    pub max_sign_violation: f64,
    pub max_etadot_error: f64,
    pub failed_scenarios: usize,
    pub hjb: HjbJson,
    pub pass: bool,
}

/// Draws `count` starts uniformly in [0, x_max]² outside the target,
/// cycling through the configured diffusions.
pub fn scenarios(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<(State, f64)> {
    let v = &cfg.verify;
    (0..v.count)
        .map(|k| {
            let x = loop {
                let x = State::new(rng.gen_range(0.0..v.x_max), rng.gen_range(0.0..v.x_max));
                if !cfg.params.in_target(x) {
                    break x;
                }
            };
            (x, v.ds[k % v.ds.len()])
        })
        .collect()
}

fn scenario(cfg: &ScenarioConfig, x0: State, d: f64, corrupt: bool, tol: &ExtremalTolerances) -> ScenarioJson {
    let p = cfg.params.with_d(d);
    let run = || -> Result<(Option<f64>, ExtremalReport), twopatch_core::Error> {
        let mut tr = simulate(&Strategy::OptimalTwoPump, x0, &p, &cfg.growth, &cfg.sim)?;
        if corrupt {
            tr = swap_branches(&tr, &cfg.growth)?;
        }
        Ok((tr.events.t_f, check_extremal(&tr, &p, &cfg.growth, tol)?))
    };
    match run() {
        Ok((t_f, rep)) => ScenarioJson {
            x0: [x0.s1, x0.s2],
            d,
            t_f,
            pass: rep.pass,
            max_sign_violation: rep.max_sign_violation,
            max_etadot_error: rep.max_etadot_error,
            branch_violations: rep.branch_violations,
            forbidden_violations: rep.forbidden_violations,
            eta_sign_changes: rep.eta_sign_changes,
            error: None,
            samples: rep
                .samples
                .iter()
                .map(|s| SampleJson {
                    t: s.t,
                    lambda1: s.lambda.lambda1,
                    lambda2: s.lambda.lambda2,
                    eta: s.eta,
                    branch: s.branch.as_str(),
                    sign_violation: s.sign_violation,
                    branch_ok: s.branch_ok,
                    forbidden: s.forbidden,
                    etadot_error: s.etadot_error,
                })
                .collect(),
        },
        Err(e) => ScenarioJson {
            x0: [x0.s1, x0.s2],
            d,
            t_f: None,
            pass: false,
            max_sign_violation: f64::NAN,
            max_etadot_error: f64::NAN,
            branch_violations: 0,
            forbidden_violations: 0,
            eta_sign_changes: 0,
            error: Some(e.to_string()),
            samples: Vec::new(),
        },
    }
}

/// Largest |residual| of the HJB equation for V₀ (d = 0) over an n×n grid
/// in (s̄, x_max]² and `kinks` points on the lines s1 = s̄ and s2 = s̄.
pub fn hjb(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<HjbJson, CliError> {
    let v = &cfg.verify;
    let p = ReducedParams::new(cfg.params.r, 0.0, cfg.params.s_bar)?;
    let sb = p.s_bar;
    let n = v.hjb_n;
    let mut points = Vec::with_capacity(n * n + v.hjb_kinks);
    for i in 1..=n {
        for j in 1..=n {
            let at = |k: usize| sb + (v.hjb_x_max - sb) * k as f64 / n as f64;
            points.push(State::new(at(i), at(j)));
        }
    }
    for k in 0..v.hjb_kinks {
        let other = rng.gen_range(sb..v.hjb_x_max);
        points.push(if k % 2 == 0 {
            State::new(sb, other)
        } else {
            State::new(other, sb)
        });
    }
    let residuals: Vec<_> = points
        .par_iter()
        .map(|&x| hjb_residual_v0(x, &p, &cfg.growth))
        .collect();
    let mut worst: f64 = 0.0;
    for r in residuals {
        worst = worst.max(r?.abs());
    }
    Ok(HjbJson {
        grid_points: n * n,
        kink_points: v.hjb_kinks,
        max_residual: worst,
        tol: v.hjb_tol,
        pass: worst < v.hjb_tol,
    })
}

pub fn compute(cfg: &ScenarioConfig, corrupt: bool) -> Result<VerifyReport, CliError> {
    let tol = ExtremalTolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws = scenarios(cfg, &mut rng);
    let scenarios: Vec<ScenarioJson> = draws
        .par_iter()
        .map(|&(x, d)| scenario(cfg, x, d, corrupt, &tol))
        .collect();
    let hjb = hjb(cfg, &mut rng)?;
    let failed = scenarios.iter().filter(|s| !s.pass).count();
    let fold = |f: fn(&ScenarioJson) -> f64| {
        scenarios.iter().map(f).fold(
            0.0,
            |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) },
        )
    };
    Ok(VerifyReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        corrupted: corrupt,
        tolerances: ToleranceJson {
            sign: tol.sign,
            etadot: tol.etadot,
            diagonal: tol.diagonal,
            control: tol.control,
            fd_step: tol.fd_step,
        },
        max_sign_violation: fold(|s| s.max_sign_violation),
        max_etadot_error: fold(|s| s.max_etadot_error),
        failed_scenarios: failed,
        pass: failed == 0 && hjb.pass,
        hjb,
        scenarios,
    })
}

/// Writes `verify.json`.
pub fn run(cfg: &ScenarioConfig, corrupt: bool) -> Result<Status, CliError> {
    let report = compute(cfg, corrupt)?;
    ensure_dir(&cfg.output_dir)?;
    output::write_json(&cfg.output_dir.join("verify.json"), &report)?;
    println!(
        "extremals: {}/{} pass, max sign violation {:.2e}, max eta-dot error {:.2e}",
        report.scenarios.len() - report.failed_scenarios,
        report.scenarios.len(),
        report.max_sign_violation,
        report.max_etadot_error
    );
    println!(
        "hjb: max residual {:.2e} over {} points (tol {:e})",
        report.hjb.max_residual,
        report.hjb.grid_points + report.hjb.kink_points,
        report.hjb.tol
    );
    Ok(if report.pass {
        Status::Ok
    } else {
        Status::VerificationFailed
    })
}
