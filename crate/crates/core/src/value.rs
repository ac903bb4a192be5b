//! Minimal-time value functions: the closed forms for no diffusion (V₀) and
//! infinite diffusion (V∞), the simulated V_d, the bounds on the time to
//! reach the diagonal, and grid evaluation.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::dynamics::{simulate, ReducedParams, SimConfig, State};
use crate::error::{Error, Result};
use crate::growth::{GrowthModel, TimeFunction};
use crate::strategies::Strategy;

/// V₀(x) = r·T(x1) + (1−r)·T(x2).
pub fn v0_closed(x: State, tf: &TimeFunction<'_>, r: f64) -> Result<f64> {
    Ok(r * tf.eval(x.s1)? + (1.0 - r) * tf.eval(x.s2)?)
}

/// V∞(x) = T(r·x1 + (1−r)·x2).
pub fn vinf_closed(x: State, tf: &TimeFunction<'_>, r: f64) -> Result<f64> {
    tf.eval(r * x.s1 + (1.0 - r) * x.s2)
}

/// V_d(x): reach time of the optimal feedback with `params.d`.
pub fn vd_sim(x: State, params: &ReducedParams, growth: &GrowthModel, config: &SimConfig) -> Result<f64> {
    if params.in_target(x) {
        return Ok(0.0);
    }
    let tr = simulate(&Strategy::OptimalTwoPump, x, params, growth, config)?;
    tr.events.t_f.ok_or(Error::NoTarget)
}

fn gamma_or_zero(growth: &GrowthModel, sigma: f64) -> Result<f64> {
    if sigma > 0.0 {
        growth.gamma(sigma)
    } else {
        Ok(0.0)
    }
}

/// Upper bound on the time to reach the diagonal, with the rate bounds
/// M₋ ≤ |d/dt (s1 − s2)| − (d/(r(1−r)))|s1 − s2| ≤ M₊ it is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaBound {
    pub bound: f64,
    pub m_minus: f64,
    pub m_plus: f64,
}

pub fn t_delta_bound(x: State, params: &ReducedParams, growth: &GrowthModel) -> Result<DeltaBound> {
    let ReducedParams { r, d, .. } = *params;
    if !(d > 0.0) {
        return Err(Error::UndefinedBound);
    }
    let (g1, g2) = (gamma_or_zero(growth, x.s1)?, gamma_or_zero(growth, x.s2)?);
    let m_minus = (g2 / r).min(g1 / (1.0 - r));
    let m_plus = (g1 / r).max(g2 / (1.0 - r));
    let rr = r * (1.0 - r);
    let gap = (x.s1 - x.s2).abs();
    let bound = if gap == 0.0 {
        0.0
    } else {
        rr / d * libm::log1p(d * gap / (m_minus * rr))
    };
    Ok(DeltaBound { bound, m_minus, m_plus })
}

/// Bounds on s1(t_Δ) = s2(t_Δ) given the capture time `t_delta`.
pub fn s_delta_sandwich(x: State, t_delta: f64, params: &ReducedParams, growth: &GrowthModel) -> Result<(f64, f64)> {
    if !(t_delta >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_delta",
            value: t_delta,
        });
    }
    let r = params.r;
    let (g1, g2) = (gamma_or_zero(growth, x.s1)?, gamma_or_zero(growth, x.s2)?);
    let m_minus = (g2 / r).min(g1 / (1.0 - r));
    let m_plus = (g1 / r).max(g2 / (1.0 - r));
    let mass = params.mass(x);
    Ok((
        mass - r.max(1.0 - r) * m_plus * t_delta,
        mass - r.min(1.0 - r) * m_minus * t_delta,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueKind {
    V0,
    Vinf,
    /// Simulated value at the given diffusion d.
    Vd(f64),
}

impl ValueKind {
    pub fn name(&self) -> &'static str {
        match self {
            ValueKind::V0 => "v0",
            ValueKind::Vinf => "vinf",
            ValueKind::Vd(_) => "vd",
        }
    }
}

/// One function value; in-target and diagonal points use closed forms.
pub fn value_at(
    kind: ValueKind,
    x: State,
    params: &ReducedParams,
    growth: &GrowthModel,
    config: &SimConfig,
) -> Result<f64> {
    if params.in_target(x) {
        return Ok(0.0);
    }
    let tf = TimeFunction::new(growth, params.s_bar);
    match kind {
        ValueKind::V0 => v0_closed(x, &tf, params.r),
        ValueKind::Vinf => vinf_closed(x, &tf, params.r),
        ValueKind::Vd(_) if x.s1 == x.s2 => tf.eval(x.s1),
        ValueKind::Vd(d) => vd_sim(x, &params.with_d(d), growth, config),
    }
}

/// Rectangular node set: `n[0]` nodes over `[lo[0], hi[0]]` in s1 and
/// `n[1]` over `[lo[1], hi[1]]` in s2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
}

impl GridSpec {
    pub fn node(&self, i: usize, j: usize) -> State {
        let at = |k: usize, axis: usize| {
            self.lo[axis] + (self.hi[axis] - self.lo[axis]) * k as f64 / (self.n[axis] - 1) as f64
        };
        State::new(at(i, 0), at(j, 1))
    }

    /// Nodes in row-major order (s1 index outer).
    pub fn nodes(&self) -> Vec<State> {
        let mut out = Vec::with_capacity(self.n[0] * self.n[1]);
        for i in 0..self.n[0] {
            for j in 0..self.n[1] {
                out.push(self.node(i, j));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    pub spec: GridSpec,
    pub kind: ValueKind,
    pub r: f64,
    pub s_bar: f64,
    /// Row-major values (h), aligned with [`GridSpec::nodes`].
    pub values: Vec<f64>,
}

impl ValueGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.n[1] + j]
    }
}

pub fn value_grid(
    kind: ValueKind,
    spec: GridSpec,
    params: &ReducedParams,
    growth: &GrowthModel,
    config: &SimConfig,
) -> Result<ValueGrid> {
    value_grid_with(kind, spec, params, |nodes| {
        nodes
            .iter()
            .map(|&x| value_at(kind, x, params, growth, config))
            .collect()
    })
}

/// [`value_grid`] with a caller-supplied node evaluator returning one
/// result per node, in order.
pub fn value_grid_with<F>(kind: ValueKind, spec: GridSpec, params: &ReducedParams, evaluate: F) -> Result<ValueGrid>
where
    F: FnOnce(&[State]) -> Vec<Result<f64>>,
{
    if spec.n[0] < 2 || spec.n[1] < 2 {
        return Err(Error::InvalidParameter {
            name: "grid resolution",
            value: spec.n[0].min(spec.n[1]) as f64,
        });
    }
    if !(spec.lo[0] >= 0.0 && spec.lo[1] >= 0.0 && spec.hi[0] > spec.lo[0] && spec.hi[1] > spec.lo[1]) {
        return Err(Error::InvalidParameter {
            name: "grid domain",
            value: spec.lo[0].min(spec.lo[1]),
        });
    }
    let nodes = spec.nodes();
    let results = evaluate(&nodes);
    let mut values = Vec::with_capacity(nodes.len());
    for (x, v) in nodes.iter().zip(results) {
        values.push(v.map_err(|e| Error::AtNode {
            s1: x.s1,
            s2: x.s2,
            cause: Box::new(e),
        })?);
    }
    Ok(ValueGrid {
        spec,
        kind,
        r: params.r,
        s_bar: params.s_bar,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{log, sqrt};

    fn t_exact(sigma: f64, s_bar: f64) -> f64 {
        let f = |s: f64| {
            let u = sqrt(1.0 + s);
            2.0 * (log(u - 1.0) - 1.0 / (u - 1.0))
        };
        if sigma <= s_bar {
            0.0
        } else {
            f(sigma) - f(s_bar)
        }
    }

    fn setup() -> (GrowthModel, ReducedParams) {
        (GrowthModel::monod(1.0, 1.0), ReducedParams::new(0.3, 0.1, 1.0).unwrap())
    }

    #[test]
    fn v0_examples() {
        let (g, p) = setup();
        let tf = TimeFunction::new(&g, 1.0);
        assert_eq!(v0_closed(State::new(1.0, 1.0), &tf, 0.3).unwrap(), 0.0);
        assert!((v0_closed(State::new(4.0, 4.0), &tf, p.r).unwrap() - t_exact(4.0, 1.0)).abs() < 1e-9);
        let v = v0_closed(State::new(1.5, 0.0), &tf, p.r).unwrap();
        assert!((t_exact(1.5, 1.0) - 2.064_124_658).abs() < 1e-8);
        assert!((v - 0.3 * t_exact(1.5, 1.0)).abs() < 1e-9);
        assert!((v - 0.619_237_397).abs() < 1e-8);
    }

    #[test]
    fn vinf_examples() {
        let (g, p) = setup();
        let tf = TimeFunction::new(&g, 1.0);
        assert_eq!(vinf_closed(State::new(1.5, 0.0), &tf, p.r).unwrap(), 0.0);
        let v = vinf_closed(State::new(4.0, 0.5), &tf, p.r).unwrap();
        assert!((v - t_exact(1.55, 1.0)).abs() < 1e-9);
        assert!((v - 2.17).abs() <= 0.02 * 2.17);
        let v = vinf_closed(State::new(4.0, 1.5), &tf, p.r).unwrap();
        assert!((v - 3.660_458_158).abs() < 1e-8);
    }

    #[test]
    fn t_delta_bound_examples() {
        let (g, p) = setup();
        assert_eq!(t_delta_bound(State::new(2.0, 2.0), &p, &g).unwrap().bound, 0.0);
        let x = State::new(3.0, 1.5);
        let small = t_delta_bound(x, &p.with_d(1e-8), &g).unwrap();
        let limit = 1.5 / small.m_minus;
        assert!((small.bound - limit).abs() < 1e-6 * limit);
        assert_eq!(t_delta_bound(x, &p.with_d(0.0), &g), Err(Error::UndefinedBound));
    }

    #[test]
    fn sandwich_examples() {
        let (g, p) = setup();
        let x = State::new(3.0, 2.0);
        let (lo, hi) = s_delta_sandwich(x, 0.0, &p, &g).unwrap();
        assert_eq!(lo, hi);
        assert_eq!(lo, p.mass(x));
        let big = p.with_d(1e3);
        let tb = t_delta_bound(x, &big, &g).unwrap().bound;
        let (lo, hi) = s_delta_sandwich(x, tb, &big, &g).unwrap();
        assert!(hi - lo < 0.05, "{lo} {hi}");
        let tb1 = t_delta_bound(x, &p.with_d(1.0), &g).unwrap().bound;
        let (lo1, hi1) = s_delta_sandwich(x, tb1, &p, &g).unwrap();
        assert!(hi1 - lo1 > hi - lo);
    }

    #[test]
    fn small_grid_v0() {
        let (g, p) = setup();
        let spec = GridSpec {
            lo: [0.0, 0.0],
            hi: [5.0, 5.0],
            n: [3, 3],
        };
        let grid = value_grid(ValueKind::V0, spec, &p, &g, &SimConfig::default()).unwrap();
        assert!((grid.get(2, 2) - t_exact(5.0, 1.0)).abs() < 1e-9);
        assert!((grid.get(2, 2) - 5.953_801_588).abs() < 1e-8);
        assert_eq!(grid.get(0, 0), 0.0);
        let vinf = value_grid(ValueKind::Vinf, spec, &p, &g, &SimConfig::default()).unwrap();
        assert_eq!(vinf.get(0, 0), 0.0);
        assert!(vinf.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn grid_rejects_degenerate_resolution() {
        let (g, p) = setup();
        let spec = GridSpec {
            lo: [0.0, 0.0],
            hi: [5.0, 5.0],
            n: [1, 3],
        };
        assert!(value_grid(ValueKind::V0, spec, &p, &g, &SimConfig::default()).is_err());
    }

    #[test]
    fn grid_errors_carry_node() {
        let (_, p) = setup();
        let spec = GridSpec {
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
            n: [2, 2],
        };
        let err = value_grid_with(ValueKind::V0, spec, &p, |nodes| {
            nodes
                .iter()
                .map(|x| {
                    if x.s1 > 0.5 && x.s2 < 0.5 {
                        Err(Error::NoTarget)
                    } else {
                        Ok(0.0)
                    }
                })
                .collect()
        })
        .unwrap_err();
        assert_eq!(
            err,
            Error::AtNode {
                s1: 1.0,
                s2: 0.0,
                cause: Box::new(Error::NoTarget)
            }
        );
    }
}
