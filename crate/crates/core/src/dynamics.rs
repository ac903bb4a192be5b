//! Reduced two-patch dynamics, the full slow-fast bioreactor model and the
//! event-driven simulation of feedback strategies on both.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::growth::{GrowthModel, TimeFunction};
use crate::ode::{self, OdeOptions, Stop};
use crate::strategies::{Law, Strategy};

/// Volume ratio `r = v1/(v1+v2)`, normalized diffusion `d = D/v_r` (1/h)
/// and target threshold `s_bar` (g/L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub r: f64,
    pub d: f64,
    pub s_bar: f64,
}

impl ReducedParams {
    pub fn new(r: f64, d: f64, s_bar: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParameter { name: "r", value: r });
        }
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::InvalidParameter { name: "d", value: d });
        }
        if !(s_bar > 0.0) || !s_bar.is_finite() {
            return Err(Error::InvalidParameter {
                name: "s_bar",
                value: s_bar,
            });
        }
        Ok(Self { r, d, s_bar })
    }

    pub fn with_d(self, d: f64) -> Self {
        Self { d, ..self }
    }

    /// Volume-weighted mean concentration r·s1 + (1−r)·s2.
    pub fn mass(&self, s: State) -> f64 {
        self.r * s.s1 + (1.0 - self.r) * s.s2
    }

    pub fn in_target(&self, s: State) -> bool {
        s.s1.max(s.s2) <= self.s_bar
    }
}

/// Reduced parameters plus the volume ratio `epsilon = v_r/(v1+v2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullParams {
    pub reduced: ReducedParams,
    pub epsilon: f64,
}

impl FullParams {
    pub fn new(reduced: ReducedParams, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        Ok(Self { reduced, epsilon })
    }
}

/// Patch volumes `v1`, `v2`, bioreactor volume `v_r` (L) and diffusion
/// coefficient `diffusion` (L/h).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub v1: f64,
    pub v2: f64,
    pub v_r: f64,
    pub diffusion: f64,
}

/// Maps physical volumes onto `(r, d)` and `epsilon`.
pub fn to_reduced(phys: &PhysicalParams, s_bar: f64) -> Result<(ReducedParams, FullParams)> {
    for (name, v) in [("v1", phys.v1), ("v2", phys.v2), ("v_r", phys.v_r)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter { name, value: v });
        }
    }
    let total = phys.v1 + phys.v2;
    let reduced = ReducedParams::new(phys.v1 / total, phys.diffusion / phys.v_r, s_bar)?;
    let full = FullParams::new(reduced, phys.v_r / total)?;
    Ok((reduced, full))
}

/// Pollutant concentrations in the two patches (g/L).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub s1: f64,
    pub s2: f64,
}

impl State {
    pub const fn new(s1: f64, s2: f64) -> Self {
        Self { s1, s2 }
    }

    pub fn max(&self) -> f64 {
        self.s1.max(self.s2)
    }

    pub fn norm(&self) -> f64 {
        libm::hypot(self.s1, self.s2)
    }
}

/// Bioreactor substrate `s_r`, biomass `x_r` and the patch concentrations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FullState {
    pub s_r: f64,
    pub x_r: f64,
    pub s1: f64,
    pub s2: f64,
}

impl FullState {
    pub fn patches(&self) -> State {
        State::new(self.s1, self.s2)
    }

    fn to_array(self) -> [f64; 4] {
        [self.s_r, self.x_r, self.s1, self.s2]
    }

    fn from_array(a: &[f64; 4]) -> Self {
        Self {
            s_r: a[0],
            x_r: a[1],
            s1: a[2],
            s2: a[3],
        }
    }
}

/// Flow split `alpha = q1/q` and bioreactor setpoint `sr_star`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Control {
    pub alpha: f64,
    pub sr_star: f64,
}

impl Control {
    /// Blended inflow concentration α·s1 + (1−α)·s2, the upper end of U(s).
    pub fn inflow(&self, s: State) -> f64 {
        self.alpha * s.s1 + (1.0 - self.alpha) * s.s2
    }

    pub fn is_admissible(&self, s: State) -> bool {
        let bound = self.inflow(s);
        (0.0..=1.0).contains(&self.alpha) && self.sr_star >= 0.0 && self.sr_star <= bound + 1e-12 * bound.abs().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Horizon (h). `None` picks `10·(T(max(s1, s2)) + 1)` from the start.
    pub t_max: Option<f64>,
    /// Diagonal capture scale: capture when |s1 − s2| ≤ diag_tol·max(1, ‖s‖).
    pub diag_tol: f64,
    pub event_tol: f64,
    /// Largest integrator step; bounds the spacing of stored samples.
    pub max_step: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            t_max: None,
            diag_tol: 1e-9,
            event_tol: 1e-10,
            max_step: 0.25,
        }
    }
}

impl SimConfig {
    pub fn diag_threshold(&self, s: State) -> f64 {
        self.diag_tol * s.norm().max(1.0)
    }

    pub fn horizon(&self, x0: State, growth: &GrowthModel, s_bar: f64) -> Result<f64> {
        match self.t_max {
            Some(t) if t > 0.0 => Ok(t),
            Some(t) => Err(Error::InvalidParameter {
                name: "t_max",
                value: t,
            }),
            None => Ok(10.0 * (TimeFunction::new(growth, s_bar).eval(x0.max())? + 1.0)),
        }
    }

    pub(crate) fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            event_tol: self.event_tol,
            max_step: self.max_step,
            ..OdeOptions::default()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("diag_tol", self.diag_tol),
            ("event_tol", self.event_tol),
            ("max_step", self.max_step),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    OffDiagonal,
    Diagonal,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::OffDiagonal => "offdiag",
            Phase::Diagonal => "diagonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Target,
    Horizon,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Target => "target",
            Termination::Horizon => "horizon",
        }
    }
}

/// First diagonal capture, first target hit and why integration stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Events {
    pub t_delta: Option<f64>,
    pub t_f: Option<f64>,
    pub reason: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    pub control: Control,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Events,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSample {
    /// Slow time τ = ε·t.
    pub t: f64,
    pub state: FullState,
    pub control: Control,
    pub q_over_vr: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullTrajectory {
    pub samples: Vec<FullSample>,
    pub events: Events,
}

/// ṡ = F(s, u) + d·G(s) for the reduced model.
pub fn reduced_rhs(state: State, control: Control, params: &ReducedParams, growth: &GrowthModel) -> [f64; 2] {
    let ReducedParams { r, d, .. } = *params;
    let Control { alpha, sr_star } = control;
    let diff = state.s2 - state.s1;
    [
        -(alpha / r) * growth.beta(state.s1, sr_star) + d * diff / r,
        -((1.0 - alpha) / (1.0 - r)) * growth.beta(state.s2, sr_star) - d * diff / (1.0 - r),
    ]
}

/// Time derivative of the slow-fast model in fast time t, with total
/// dilution `q_over_vr = q/v_r`.
pub fn full_rhs(x: FullState, alpha: f64, q_over_vr: f64, params: &FullParams, growth: &GrowthModel) -> [f64; 4] {
    let ReducedParams { r, d, .. } = params.reduced;
    let eps = params.epsilon;
    let growth_rate = growth.mu(x.s_r) * x.x_r;
    let s_in = alpha * x.s1 + (1.0 - alpha) * x.s2;
    [
        -growth_rate + q_over_vr * (s_in - x.s_r),
        growth_rate - q_over_vr * x.x_r,
        eps * ((alpha / r) * q_over_vr * (x.s_r - x.s1) + (d / r) * (x.s2 - x.s1)),
        eps * (((1.0 - alpha) / (1.0 - r)) * q_over_vr * (x.s_r - x.s2) + (d / (1.0 - r)) * (x.s1 - x.s2)),
    ]
}

fn checked_control(law: &Law, s: State, t: f64, params: &ReducedParams, growth: &GrowthModel) -> Result<Control> {
    let u = law.control(s, params, growth)?;
    if !u.is_admissible(s) {
        return Err(Error::InadmissibleControl {
            t,
            alpha: u.alpha,
            sr_star: u.sr_star,
            bound: u.inflow(s),
        });
    }
    Ok(u)
}

/// Slack of the admissibility constraint s*ᵣ ≤ α s1 + (1−α) s2, shifted by
/// the same tolerance [`Control::is_admissible`] allows.
fn admissibility_margin(law: &Law, s: State, params: &ReducedParams, growth: &GrowthModel) -> f64 {
    match law.control(s, params, growth) {
        Ok(u) => {
            let inflow = u.inflow(s);
            inflow - u.sr_star + 1e-12 * inflow.abs().max(1.0)
        }
        Err(_) => -1.0,
    }
}

fn inadmissible(law: &Law, s: State, t: f64, params: &ReducedParams, growth: &GrowthModel) -> Error {
    match law.control(s, params, growth) {
        Ok(u) => Error::InadmissibleControl {
            t,
            alpha: u.alpha,
            sr_star: u.sr_star,
            bound: u.inflow(s),
        },
        Err(e) => e,
    }
}

fn side(s: State) -> f64 {
    if s.s1 >= s.s2 {
        1.0
    } else {
        -1.0
    }
}

/// Simulates `strategy` on the reduced model from `x0`.
///
/// Under [`Strategy::OptimalTwoPump`] the bang branch chosen at the start is
/// held until |s1 − s2| falls to the capture threshold; from there the
/// motion is the scalar singular arc ṡ = −γ(s) and `t_f = t_Δ + T(s(t_Δ))`.
pub fn simulate(
    strategy: &Strategy,
    x0: State,
    params: &ReducedParams,
    growth: &GrowthModel,
    config: &SimConfig,
) -> Result<Trajectory> {
    config.validate()?;
    strategy.validate()?;
    if !(x0.s1 >= 0.0 && x0.s2 >= 0.0) {
        return Err(Error::Domain {
            what: "initial state",
            s1: x0.s1,
            s2: x0.s2,
        });
    }
    let t_max = config.horizon(x0, growth, params.s_bar)?;
    let opts = config.ode_options();
    let optimal = matches!(strategy, Strategy::OptimalTwoPump);

    let mut samples = Vec::new();
    let mut events = Events {
        t_delta: None,
        t_f: None,
        reason: Termination::Horizon,
    };
    let on_diagonal = |s: State| (s.s1 - s.s2).abs() <= config.diag_threshold(s);

    if on_diagonal(x0) && x0.max() > params.s_bar {
        events.t_delta = Some(0.0);
    }
    let law0 = strategy.initial_law(x0, config);
    samples.push(Sample {
        t: 0.0,
        state: x0,
        control: checked_control(&law0, x0, 0.0, params, growth)?,
        phase: if on_diagonal(x0) {
            Phase::Diagonal
        } else {
            Phase::OffDiagonal
        },
    });
    if params.in_target(x0) {
        events.t_f = Some(0.0);
        events.reason = Termination::Target;
        return Ok(Trajectory { samples, events });
    }

    let mut t = 0.0;
    let mut s = x0;
    if !(optimal && on_diagonal(x0)) {
        let law = law0;
        let sign = side(x0);
        let capture_terminal = optimal;
        let mut failure = None;
        let mut t_delta = None;
        let out = ode::solve(
            |_, y: &[f64; 2]| {
                let st = State::new(y[0], y[1]);
                let u = law.control(st, params, growth)?;
                Ok(reduced_rhs(st, u, params, growth))
            },
            0.0,
            [x0.s1, x0.s2],
            t_max,
            &opts,
            |_, y: &[f64; 2]| {
                let st = State::new(y[0], y[1]);
                [
                    st.max() - params.s_bar,
                    sign * (st.s1 - st.s2) - config.diag_threshold(st),
                    admissibility_margin(&law, st, params, growth),
                ]
            },
            [true, capture_terminal, true],
            |_, te, y: &[f64; 2]| {
                if y[0].max(y[1]) > params.s_bar {
                    t_delta.get_or_insert(te);
                }
            },
            |te, y: &[f64; 2]| {
                let st = State::new(y[0], y[1]);
                match law.control(st, params, growth) {
                    Ok(control) => samples.push(Sample {
                        t: te,
                        state: st,
                        control,
                        phase: if !optimal && on_diagonal(st) {
                            Phase::Diagonal
                        } else {
                            Phase::OffDiagonal
                        },
                    }),
                    Err(e) => {
                        failure.get_or_insert(e);
                    }
                }
            },
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        if events.t_delta.is_none() {
            events.t_delta = t_delta;
        }
        t = out.t;
        s = State::new(out.y[0], out.y[1]);
        match out.stop {
            Stop::Event(0) => {
                events.t_f = Some(out.t);
                events.reason = Termination::Target;
                return Ok(Trajectory { samples, events });
            }
            Stop::Event(2) => return Err(inadmissible(&law, s, out.t, params, growth)),
            Stop::Event(_) => {
                // diagonal capture under the optimal feedback
                events.t_delta = Some(out.t);
                let last = samples.last_mut().expect("observer recorded the capture point");
                last.phase = Phase::Diagonal;
                last.control = Law::Singular.control(s, params, growth)?;
            }
            Stop::End => return Ok(Trajectory { samples, events }),
        }
    }

    // singular arc: s1 = s2 = σ with σ̇ = −γ(σ)
    let sigma0 = params.mass(s);
    let t_capture = t;
    let t_f = t_capture + TimeFunction::new(growth, params.s_bar).eval(sigma0)?;
    let mut failure = None;
    let out = ode::solve(
        |_, y: &[f64; 1]| Ok([-growth.gamma(y[0])?]),
        t_capture,
        [sigma0],
        t_max.min(t_f + 1.0),
        &opts,
        |_, y: &[f64; 1]| [y[0] - params.s_bar],
        [true],
        |_, _, _| {},
        |te, y: &[f64; 1]| {
            let st = State::new(y[0], y[0]);
            match Law::Singular.control(st, params, growth) {
                Ok(control) => samples.push(Sample {
                    t: te,
                    state: st,
                    control,
                    phase: Phase::Diagonal,
                }),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    if t_f > t_max {
        samples.retain(|p| p.t <= t_max);
        return Ok(Trajectory { samples, events });
    }
    if out.stop != Stop::Event(0) {
        return Err(Error::NumericalFailure {
            what: "singular arc integration",
            at: out.t,
        });
    }
    // pin the final sample to the quadrature value of t_f
    let mut last = samples.pop().expect("terminal sample");
    while samples.last().is_some_and(|p| p.t >= t_f) {
        samples.pop();
    }
    last.t = t_f;
    samples.push(last);
    events.t_f = Some(t_f);
    events.reason = Termination::Target;
    Ok(Trajectory { samples, events })
}

/// Default bioreactor start for the full model: `x_r = 1` and `s_r` at the
/// setpoint the strategy would choose at `x0`.
pub fn default_full_start(
    strategy: &Strategy,
    x0: State,
    params: &ReducedParams,
    growth: &GrowthModel,
    config: &SimConfig,
) -> Result<FullState> {
    let u = strategy.initial_law(x0, config).control(x0, params, growth)?;
    Ok(FullState {
        s_r: u.sr_star,
        x_r: 1.0,
        s1: x0.s1,
        s2: x0.s2,
    })
}

/// Simulates `strategy` on the slow-fast model in slow time τ = ε·t. The
/// setpoint is realized through the dilution rate q/v_r = μ(s*ᵣ). After
/// diagonal capture the optimal feedback holds the singular split α = r.
pub fn simulate_full(
    strategy: &Strategy,
    x0: FullState,
    params: &FullParams,
    growth: &GrowthModel,
    config: &SimConfig,
) -> Result<FullTrajectory> {
    config.validate()?;
    strategy.validate()?;
    if !(x0.x_r > 0.0) {
        return Err(Error::InvalidParameter {
            name: "x_r(0)",
            value: x0.x_r,
        });
    }
    if !(x0.s_r >= 0.0 && x0.s1 >= 0.0 && x0.s2 >= 0.0) {
        return Err(Error::Domain {
            what: "initial state",
            s1: x0.s1,
            s2: x0.s2,
        });
    }
    let red = &params.reduced;
    let eps = params.epsilon;
    let t_max = config.horizon(x0.patches(), growth, red.s_bar)?;
    let opts = config.ode_options();
    let optimal = matches!(strategy, Strategy::OptimalTwoPump);
    let on_diagonal = |s: State| (s.s1 - s.s2).abs() <= config.diag_threshold(s);

    let mut law = strategy.initial_law(x0.patches(), config);
    let mut events = Events {
        t_delta: None,
        t_f: None,
        reason: Termination::Horizon,
    };
    let make_sample = |law: &Law, t: f64, x: FullState| -> Result<FullSample> {
        let control = law.control(x.patches(), red, growth)?;
        let phase = if matches!(law, Law::Singular) || on_diagonal(x.patches()) {
            Phase::Diagonal
        } else {
            Phase::OffDiagonal
        };
        Ok(FullSample {
            t,
            state: x,
            control,
            q_over_vr: growth.mu(control.sr_star),
            phase,
        })
    };
    if admissibility_margin(&law, x0.patches(), red, growth) < 0.0 {
        return Err(inadmissible(&law, x0.patches(), 0.0, red, growth));
    }
    let mut samples = alloc::vec![make_sample(&law, 0.0, x0)?];
    if on_diagonal(x0.patches()) && x0.patches().max() > red.s_bar {
        events.t_delta = Some(0.0);
    }
    if red.in_target(x0.patches()) {
        events.t_f = Some(0.0);
        events.reason = Termination::Target;
        return Ok(FullTrajectory { samples, events });
    }

    let mut t = 0.0;
    let mut x = x0;
    loop {
        let sign = side(x.patches());
        let capture_terminal = optimal && !matches!(law, Law::Singular);
        let phase_law = law;
        let mut failure = None;
        let mut t_delta = None;
        let out = ode::solve(
            |_, y: &[f64; 4]| {
                let xs = FullState::from_array(y);
                let u = phase_law.control(xs.patches(), red, growth)?;
                let f = full_rhs(xs, u.alpha, growth.mu(u.sr_star), params, growth);
                Ok([f[0] / eps, f[1] / eps, f[2] / eps, f[3] / eps])
            },
            t,
            x.to_array(),
            t_max,
            &opts,
            |_, y: &[f64; 4]| {
                let st = State::new(y[2], y[3]);
                [
                    st.max() - red.s_bar,
                    sign * (st.s1 - st.s2) - config.diag_threshold(st),
                    admissibility_margin(&phase_law, st, red, growth),
                ]
            },
            [true, capture_terminal, true],
            |_, te, y: &[f64; 4]| {
                if y[2].max(y[3]) > red.s_bar {
                    t_delta.get_or_insert(te);
                }
            },
            |te, y: &[f64; 4]| match make_sample(&phase_law, te, FullState::from_array(y)) {
                Ok(p) => samples.push(p),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            },
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        if events.t_delta.is_none() {
            events.t_delta = t_delta;
        }
        t = out.t;
        x = FullState::from_array(&out.y);
        match out.stop {
            Stop::Event(0) => {
                events.t_f = Some(t);
                events.reason = Termination::Target;
                break;
            }
            Stop::Event(2) => return Err(inadmissible(&phase_law, x.patches(), t, red, growth)),
            Stop::Event(_) => {
                events.t_delta = Some(t);
                law = Law::Singular;
                let last = samples.last_mut().expect("capture sample");
                *last = make_sample(&law, t, x)?;
            }
            Stop::End => break,
        }
    }
    Ok(FullTrajectory { samples, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::Patch;

    fn monod() -> GrowthModel {
        GrowthModel::monod(1.0, 1.0)
    }

    #[test]
    fn reduced_rhs_examples() {
        let g = monod();
        let p = ReducedParams::new(0.3, 0.7, 1.0).unwrap();
        let u = Control {
            alpha: 0.3,
            sr_star: g.shat(2.0).unwrap(),
        };
        let ds = reduced_rhs(State::new(2.0, 2.0), u, &p, &g);
        let gamma2 = (libm::sqrt(3.0) - 1.0) * (libm::sqrt(3.0) - 1.0);
        assert!((ds[0] + gamma2).abs() < 1e-12 && (ds[1] + gamma2).abs() < 1e-12);

        for alpha in [0.0, 0.4, 1.0] {
            let ds = reduced_rhs(State::new(1.0, 1.0), Control { alpha, sr_star: 1.0 }, &p, &g);
            assert_eq!(ds, [0.0, 0.0]);
        }

        let p = ReducedParams::new(0.3, 0.1, 1.0).unwrap();
        let u = Control {
            alpha: 0.0,
            sr_star: g.shat(1.0).unwrap(),
        };
        let ds = reduced_rhs(State::new(3.0, 1.0), u, &p, &g);
        assert!((ds[0] + 0.2 / 0.3).abs() < 1e-12);
        let gamma1 = (libm::sqrt(2.0) - 1.0) * (libm::sqrt(2.0) - 1.0);
        assert!((ds[1] - (-gamma1 / 0.7 + 0.2 / 0.7)).abs() < 1e-12);
        assert!((ds[1] - 0.040_61).abs() < 1e-5);
    }

    #[test]
    fn full_rhs_biomass_axis_and_balance() {
        let g = monod();
        let p = FullParams::new(ReducedParams::new(0.3, 0.5, 1.0).unwrap(), 0.01).unwrap();
        let f = full_rhs(
            FullState {
                s_r: 0.7,
                x_r: 0.0,
                s1: 2.0,
                s2: 3.0,
            },
            0.4,
            0.3,
            &p,
            &g,
        );
        assert_eq!(f[1], 0.0);
        let sigma = 1.7;
        let f = full_rhs(
            FullState {
                s_r: sigma,
                x_r: 0.0,
                s1: sigma,
                s2: sigma,
            },
            0.3,
            0.5,
            &p,
            &g,
        );
        assert_eq!((f[2], f[3]), (0.0, 0.0));
    }

    #[test]
    fn to_reduced_arithmetic() {
        let phys = PhysicalParams {
            v1: 3.0,
            v2: 7.0,
            v_r: 0.1,
            diffusion: 1.0,
        };
        let (red, full) = to_reduced(&phys, 1.0).unwrap();
        assert!((red.r - 0.3).abs() < 1e-15);
        assert!((red.d - 10.0).abs() < 1e-12);
        assert!((full.epsilon - 0.01).abs() < 1e-15);
        let (red, _) = to_reduced(
            &PhysicalParams {
                v1: 2.0,
                v2: 2.0,
                v_r: 0.5,
                diffusion: 0.0,
            },
            1.0,
        )
        .unwrap();
        assert_eq!(red.r, 0.5);
        assert_eq!(red.d, 0.0);
        assert!(to_reduced(
            &PhysicalParams {
                v1: 0.0,
                v2: 2.0,
                v_r: 0.5,
                diffusion: 0.0
            },
            1.0
        )
        .is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(ReducedParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ReducedParams::new(1.0, 1.0, 1.0).is_err());
        assert!(ReducedParams::new(0.5, -1.0, 1.0).is_err());
        assert!(ReducedParams::new(0.5, 1.0, 0.0).is_err());
        let red = ReducedParams::new(0.5, 1.0, 1.0).unwrap();
        assert!(FullParams::new(red, 0.0).is_err());
    }

    #[test]
    fn start_inside_target() {
        let g = monod();
        let p = ReducedParams::new(0.3, 1.0, 1.0).unwrap();
        for strategy in [
            Strategy::OptimalTwoPump,
            Strategy::Homogenizing,
            Strategy::OnePump(Patch::Two),
        ] {
            let tr = simulate(&strategy, State::new(0.5, 0.5), &p, &g, &SimConfig::default()).unwrap();
            assert_eq!(tr.samples.len(), 1);
            assert_eq!(tr.events.t_f, Some(0.0));
        }
    }

    #[test]
    fn diagonal_start_equals_time_function() {
        let g = monod();
        for d in [0.0, 0.1, 10.0] {
            let p = ReducedParams::new(0.3, d, 1.0).unwrap();
            let tr = simulate(
                &Strategy::OptimalTwoPump,
                State::new(4.0, 4.0),
                &p,
                &g,
                &SimConfig::default(),
            )
            .unwrap();
            let tf = tr.events.t_f.unwrap();
            assert!((tf - 5.397_03).abs() < 1e-4, "{tf}");
            assert_eq!(tr.events.t_delta, Some(0.0));
            assert!(tr.samples.iter().all(|p| (p.state.s1 - p.state.s2).abs() <= 1e-9));
            assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        }
    }

    #[test]
    fn target_event_is_located() {
        let g = monod();
        let p = ReducedParams::new(0.3, 10.0, 1.0).unwrap();
        let cfg = SimConfig::default();
        let tr = simulate(&Strategy::OptimalTwoPump, State::new(4.0, 0.5), &p, &g, &cfg).unwrap();
        let last = tr.last();
        assert_eq!(Some(last.t), tr.events.t_f);
        assert!(last.state.max() <= 1.0);
        assert!(tr.samples[..tr.samples.len() - 1].iter().all(|p| p.state.max() > 1.0));
        let tf = tr.events.t_f.unwrap();
        assert!((tf - 2.17).abs() <= 0.03 * 2.17, "{tf}");
    }

    #[test]
    fn one_pump_without_diffusion_hits_horizon() {
        let g = monod();
        let p = ReducedParams::new(0.3, 0.0, 1.0).unwrap();
        let tr = simulate(
            &Strategy::OnePump(Patch::One),
            State::new(4.0, 4.0),
            &p,
            &g,
            &SimConfig::default(),
        )
        .unwrap();
        assert_eq!(tr.events.reason, Termination::Horizon);
        assert_eq!(tr.events.t_f, None);
        assert!((tr.last().state.s2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn full_model_rejects_dead_bioreactor() {
        let g = monod();
        let p = FullParams::new(ReducedParams::new(0.3, 0.1, 1.0).unwrap(), 0.01).unwrap();
        let x0 = FullState {
            s_r: 1.0,
            x_r: 0.0,
            s1: 4.0,
            s2: 1.5,
        };
        assert!(matches!(
            simulate_full(&Strategy::OptimalTwoPump, x0, &p, &g, &SimConfig::default()),
            Err(Error::InvalidParameter { name: "x_r(0)", .. })
        ));
    }

    #[test]
    fn inadmissible_constant_is_rejected_up_front() {
        let g = monod();
        let p = ReducedParams::new(0.3, 0.1, 1.0).unwrap();
        let bad = Strategy::ConstantZeta { alpha: 1.2, zeta: 0.5 };
        assert!(simulate(&bad, State::new(3.0, 1.0), &p, &g, &SimConfig::default()).is_err());
    }
}
