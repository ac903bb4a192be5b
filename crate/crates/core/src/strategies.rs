//! Feedback and open-loop control strategies for the reduced model, and the
//! search for the best constant control.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dynamics::{simulate, Control, ReducedParams, SimConfig, State};
use crate::error::{Error, Result};
use crate::growth::GrowthModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Patch {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Most rapid approach to the diagonal, then the singular split α = r.
    OptimalTwoPump,
    /// All flow through one patch at its optimal setpoint.
    OnePump(Patch),
    /// α = r with s*ᵣ at half the weighted mean concentration.
    Homogenizing,
    /// Constant α and constant fraction ζ of the blended inflow.
    ConstantZeta { alpha: f64, zeta: f64 },
    /// Constant α and constant setpoint s*ᵣ; inadmissible once the blended
    /// inflow drops below the setpoint.
    ConstantSetpoint { alpha: f64, sr_star: f64 },
}

impl Strategy {
    pub fn validate(&self) -> Result<()> {
        let check_alpha = |alpha: f64| {
            if (0.0..=1.0).contains(&alpha) {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name: "alpha",
                    value: alpha,
                })
            }
        };
        match *self {
            Strategy::ConstantZeta { alpha, zeta } => {
                check_alpha(alpha)?;
                if !(0.0..=1.0).contains(&zeta) {
                    return Err(Error::InvalidParameter {
                        name: "zeta",
                        value: zeta,
                    });
                }
            }
            Strategy::ConstantSetpoint { alpha, sr_star } => {
                check_alpha(alpha)?;
                if !(sr_star >= 0.0 && sr_star.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "sr_star",
                        value: sr_star,
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The control law in force from `x0` until the next switching event.
    pub(crate) fn initial_law(&self, x0: State, config: &SimConfig) -> Law {
        match *self {
            Strategy::OptimalTwoPump => {
                let tol = config.diag_threshold(x0);
                if x0.s1 > x0.s2 + tol {
                    Law::Bang(Patch::One)
                } else if x0.s2 > x0.s1 + tol {
                    Law::Bang(Patch::Two)
                } else {
                    Law::Singular
                }
            }
            Strategy::OnePump(p) => Law::Bang(p),
            Strategy::Homogenizing => Law::Homogenizing,
            Strategy::ConstantZeta { alpha, zeta } => Law::Constant { alpha, zeta },
            Strategy::ConstantSetpoint { alpha, sr_star } => Law::Setpoint { alpha, sr_star },
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::OptimalTwoPump => f.write_str("optimal"),
            Strategy::OnePump(Patch::One) => f.write_str("onepump:1"),
            Strategy::OnePump(Patch::Two) => f.write_str("onepump:2"),
            Strategy::Homogenizing => f.write_str("homog"),
            Strategy::ConstantZeta { alpha, zeta } => write!(f, "const:{alpha}:{zeta}"),
            Strategy::ConstantSetpoint { alpha, sr_star } => write!(f, "constsr:{alpha}:{sr_star}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseStrategyError;

impl fmt::Display for ParseStrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected optimal, onepump:1, onepump:2, homog, const:<alpha>:<zeta> or constsr:<alpha>:<sr_star>")
    }
}

impl core::error::Error for ParseStrategyError {}

impl FromStr for Strategy {
    type Err = ParseStrategyError;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "optimal" => return Ok(Strategy::OptimalTwoPump),
            "onepump:1" => return Ok(Strategy::OnePump(Patch::One)),
            "onepump:2" => return Ok(Strategy::OnePump(Patch::Two)),
            "homog" => return Ok(Strategy::Homogenizing),
            _ => {}
        }
        let pair = |rest: &str| -> core::result::Result<(f64, f64), ParseStrategyError> {
            let (a, b) = rest.split_once(':').ok_or(ParseStrategyError)?;
            let a = a.trim().parse().map_err(|_| ParseStrategyError)?;
            let b = b.trim().parse().map_err(|_| ParseStrategyError)?;
            Ok((a, b))
        };
        let strategy = if let Some(rest) = s.strip_prefix("const:") {
            let (alpha, zeta) = pair(rest)?;
            Strategy::ConstantZeta { alpha, zeta }
        } else if let Some(rest) = s.strip_prefix("constsr:") {
            let (alpha, sr_star) = pair(rest)?;
            Strategy::ConstantSetpoint { alpha, sr_star }
        } else {
            return Err(ParseStrategyError);
        };
        strategy.validate().map_err(|_| ParseStrategyError)?;
        Ok(strategy)
    }
}

/// A control law evaluated pointwise during one integration phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Law {
    Bang(Patch),
    Singular,
    Homogenizing,
    Constant { alpha: f64, zeta: f64 },
    Setpoint { alpha: f64, sr_star: f64 },
}

impl Law {
    pub(crate) fn control(&self, s: State, params: &ReducedParams, growth: &GrowthModel) -> Result<Control> {
        Ok(match *self {
            Law::Bang(p) => one_pump_feedback(s, p, growth)?,
            Law::Singular => Control {
                alpha: params.r,
                sr_star: growth.shat_or_zero(params.mass(s))?,
            },
            Law::Homogenizing => homogenizing_feedback(s, params),
            Law::Constant { alpha, zeta } => constant_zeta_control(s, alpha, zeta),
            Law::Setpoint { alpha, sr_star } => Control { alpha, sr_star },
        })
    }
}

/// Optimal two-pump feedback: treat the dirtier patch at its optimal
/// setpoint; within `diag_tol` of the diagonal use the singular split α = r.
pub fn optimal_feedback(state: State, params: &ReducedParams, growth: &GrowthModel, diag_tol: f64) -> Result<Control> {
    if state.s1 > state.s2 + diag_tol {
        Ok(Control {
            alpha: 1.0,
            sr_star: growth.shat_or_zero(state.s1)?,
        })
    } else if state.s2 > state.s1 + diag_tol {
        Ok(Control {
            alpha: 0.0,
            sr_star: growth.shat_or_zero(state.s2)?,
        })
    } else {
        Ok(Control {
            alpha: params.r,
            sr_star: growth.shat_or_zero(state.s1)?,
        })
    }
}

pub fn one_pump_feedback(state: State, active: Patch, growth: &GrowthModel) -> Result<Control> {
    Ok(match active {
        Patch::One => Control {
            alpha: 1.0,
            sr_star: growth.shat_or_zero(state.s1)?,
        },
        Patch::Two => Control {
            alpha: 0.0,
            sr_star: growth.shat_or_zero(state.s2)?,
        },
    })
}

pub fn homogenizing_feedback(state: State, params: &ReducedParams) -> Control {
    Control {
        alpha: params.r,
        sr_star: 0.5 * params.mass(state).max(0.0),
    }
}

pub fn constant_zeta_control(state: State, alpha: f64, zeta: f64) -> Control {
    let inflow = (alpha * state.s1 + (1.0 - alpha) * state.s2).max(0.0);
    Control {
        alpha,
        sr_star: zeta * inflow,
    }
}

/// Which family of constant controls the search ranges over. Both are
/// parameterized by (α, c) ∈ [0, 1]².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstantFamily {
    /// c = ζ, the fraction of the blended inflow.
    #[default]
    Zeta,
    /// c = s*ᵣ / s̄, a fixed setpoint at or below the target level.
    Setpoint,
}

impl ConstantFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstantFamily::Zeta => "zeta",
            ConstantFamily::Setpoint => "setpoint",
        }
    }

    /// The constant strategy at search coordinates (α, c).
    pub fn strategy(&self, alpha: f64, c: f64, s_bar: f64) -> Strategy {
        match self {
            ConstantFamily::Zeta => Strategy::ConstantZeta { alpha, zeta: c },
            ConstantFamily::Setpoint => Strategy::ConstantSetpoint {
                alpha,
                sr_star: c * s_bar,
            },
        }
    }
}

impl FromStr for ConstantFamily {
    type Err = ParseStrategyError;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.trim() {
            "zeta" => Ok(ConstantFamily::Zeta),
            "setpoint" => Ok(ConstantFamily::Setpoint),
            _ => Err(ParseStrategyError),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSearch {
    pub family: ConstantFamily,
    /// Nodes per axis of the coarse grid.
    pub grid: usize,
    /// Pattern search stops once its step falls below this.
    pub min_step: f64,
}

impl Default for ConstantSearch {
    fn default() -> Self {
        Self {
            family: ConstantFamily::Zeta,
            grid: 41,
            min_step: 1e-3,
        }
    }
}

/// Search result in search coordinates; `coord` is ζ or s*ᵣ/s̄ depending on
/// the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestConstant {
    pub alpha: f64,
    pub coord: f64,
    pub t_f: f64,
}

/// Reach time of a constant strategy, `+∞` if the horizon is hit or, for a
/// fixed setpoint, if the inflow falls below it before the target.
pub fn constant_reach_time(
    x0: State,
    strategy: &Strategy,
    params: &ReducedParams,
    growth: &GrowthModel,
    config: &SimConfig,
) -> Result<f64> {
    match simulate(strategy, x0, params, growth, config) {
        Ok(tr) => Ok(tr.events.t_f.unwrap_or(f64::INFINITY)),
        Err(Error::InadmissibleControl { .. }) if matches!(strategy, Strategy::ConstantSetpoint { .. }) => {
            Ok(f64::INFINITY)
        }
        Err(e) => Err(e),
    }
}

/// Ordering used for the search: time first, then lowest α, then lowest c.
fn better(a: &BestConstant, b: &BestConstant) -> bool {
    (a.t_f, a.alpha, a.coord) < (b.t_f, b.alpha, b.coord)
}

/// Grid search over (α, c) ∈ [0, 1]² followed by compass pattern search
/// around the best node. Candidates are evaluated sequentially.
pub fn best_constant_search(
    x0: State,
    params: &ReducedParams,
    growth: &GrowthModel,
    config: &SimConfig,
    search: &ConstantSearch,
) -> Result<BestConstant> {
    best_constant_search_with(x0, search, |batch| {
        batch
            .iter()
            .map(|&(a, c)| constant_reach_time(x0, &search.family.strategy(a, c, params.s_bar), params, growth, config))
            .collect()
    })
}

/// [`best_constant_search`] with a caller-supplied batch evaluator, which
/// must return one result per candidate, in order.
pub fn best_constant_search_with<F>(x0: State, search: &ConstantSearch, mut evaluate: F) -> Result<BestConstant>
where
    F: FnMut(&[(f64, f64)]) -> Vec<Result<f64>>,
{
    if !(x0.s1 >= 0.0 && x0.s2 >= 0.0) {
        return Err(Error::Domain {
            what: "initial state",
            s1: x0.s1,
            s2: x0.s2,
        });
    }
    let n = search.grid.max(2);
    let node = |k: usize| k as f64 / (n - 1) as f64;
    let mut grid = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            grid.push((node(i), node(j)));
        }
    }
    let times = evaluate(&grid);
    let mut best: Option<BestConstant> = None;
    for (&(alpha, coord), t) in grid.iter().zip(times) {
        let cand = BestConstant { alpha, coord, t_f: t? };
        if best.is_none_or(|b| better(&cand, &b)) {
            best = Some(cand);
        }
    }
    let mut best = best.filter(|b| b.t_f.is_finite()).ok_or(Error::InfeasibleSearch)?;

    let mut step = 1.0 / (n - 1) as f64;
    let mut iterations = 0;
    while step >= search.min_step && iterations < 10_000 {
        iterations += 1;
        let mut probes = Vec::with_capacity(4);
        for (da, dz) in [(-step, 0.0), (step, 0.0), (0.0, -step), (0.0, step)] {
            let p = ((best.alpha + da).clamp(0.0, 1.0), (best.coord + dz).clamp(0.0, 1.0));
            if p != (best.alpha, best.coord) && !probes.contains(&p) {
                probes.push(p);
            }
        }
        let times = evaluate(&probes);
        let mut moved = false;
        for (&(alpha, coord), t) in probes.iter().zip(times) {
            let cand = BestConstant { alpha, coord, t_f: t? };
            if better(&cand, &best) && cand.t_f < best.t_f {
                best = cand;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::sqrt;

    fn monod() -> GrowthModel {
        GrowthModel::monod(1.0, 1.0)
    }

    fn params() -> ReducedParams {
        ReducedParams::new(0.3, 0.1, 1.0).unwrap()
    }

    #[test]
    fn optimal_feedback_branches() {
        let g = monod();
        let p = params();
        let u = optimal_feedback(State::new(3.0, 1.0), &p, &g, 1e-9).unwrap();
        assert_eq!(u.alpha, 1.0);
        assert!((u.sr_star - 1.0).abs() < 1e-12);
        let u = optimal_feedback(State::new(1.0, 3.0), &p, &g, 1e-9).unwrap();
        assert_eq!(u.alpha, 0.0);
        assert!((u.sr_star - 1.0).abs() < 1e-12);
        let u = optimal_feedback(State::new(2.0, 2.0), &p, &g, 1e-9).unwrap();
        assert_eq!(u.alpha, 0.3);
        assert!((u.sr_star - (sqrt(3.0) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn one_pump_examples() {
        let g = monod();
        let u = one_pump_feedback(State::new(3.0, 10.0), Patch::One, &g).unwrap();
        assert_eq!(u.alpha, 1.0);
        assert!((u.sr_star - 1.0).abs() < 1e-12);
        let s = State::new(0.5, 4.0);
        let u = one_pump_feedback(s, Patch::Two, &g).unwrap();
        assert_eq!(u.alpha, 0.0);
        assert!((u.sr_star - (sqrt(5.0) - 1.0)).abs() < 1e-12);
        assert!(u.sr_star < u.inflow(s));
    }

    #[test]
    fn homogenizing_examples() {
        let u = homogenizing_feedback(State::new(2.0, 2.0), &ReducedParams::new(0.5, 0.0, 1.0).unwrap());
        assert_eq!((u.alpha, u.sr_star), (0.5, 1.0));
        let u = homogenizing_feedback(State::new(4.0, 1.0), &params());
        assert_eq!(u.alpha, 0.3);
        assert!((u.sr_star - 0.95).abs() < 1e-15);
    }

    #[test]
    fn constant_zeta_examples() {
        let g = monod();
        let s = State::new(3.0, 1.0);
        let u = constant_zeta_control(s, 0.5, 0.5);
        assert_eq!(u.sr_star, 1.0);
        let u0 = constant_zeta_control(s, 0.4, 0.0);
        assert_eq!(u0.sr_star, 0.0);
        assert_eq!(g.beta(s.s1, u0.sr_star), 0.0);
        let diag = State::new(2.0, 2.0);
        let u1 = constant_zeta_control(diag, 0.7, 1.0);
        assert_eq!(u1.sr_star, 2.0);
        assert_eq!(g.beta(diag.s1, u1.sr_star), 0.0);
    }

    #[test]
    fn strategy_strings_round_trip() {
        for s in [
            "optimal",
            "onepump:1",
            "onepump:2",
            "homog",
            "const:0.25:0.5",
            "constsr:0.3:0.6",
        ] {
            let parsed: Strategy = s.parse().unwrap();
            assert_eq!(alloc::format!("{parsed}"), s);
        }
        assert!("const:1.5:0.2".parse::<Strategy>().is_err());
        assert!("const:0.5".parse::<Strategy>().is_err());
        assert!("twopump".parse::<Strategy>().is_err());
        assert!("constsr:0.3:-1".parse::<Strategy>().is_err());
    }

    #[test]
    fn search_reports_infeasible() {
        let r = best_constant_search_with(
            State::new(3.0, 3.0),
            &ConstantSearch {
                grid: 3,
                min_step: 0.1,
                ..Default::default()
            },
            |b| b.iter().map(|_| Ok(f64::INFINITY)).collect(),
        );
        assert_eq!(r, Err(Error::InfeasibleSearch));
    }

    #[test]
    fn search_breaks_ties_toward_low_alpha_then_zeta() {
        let r = best_constant_search_with(
            State::new(3.0, 3.0),
            &ConstantSearch {
                grid: 5,
                min_step: 0.1,
                ..Default::default()
            },
            |b| {
                b.iter()
                    .map(|&(a, z)| Ok(if z >= 0.5 && a >= 0.25 { 1.0 } else { 2.0 }))
                    .collect()
            },
        )
        .unwrap();
        assert_eq!((r.alpha, r.coord, r.t_f), (0.25, 0.5, 1.0));
    }

    #[test]
    fn search_refines_smooth_bowl() {
        let r = best_constant_search_with(State::new(3.0, 3.0), &ConstantSearch::default(), |b| {
            b.iter()
                .map(|&(a, z)| Ok(1.0 + (a - 0.3137) * (a - 0.3137) + 2.0 * (z - 0.4711) * (z - 0.4711)))
                .collect()
        })
        .unwrap();
        assert!((r.alpha - 0.3137).abs() < 1e-3 && (r.coord - 0.4711).abs() < 1e-3);
    }
}
