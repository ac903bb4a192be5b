//! A posteriori checks that optimal-feedback trajectories are Pontryagin
//! extremals, and that V₀ satisfies its Hamilton–Jacobi–Bellman equation.
//!
//! Sign convention: the costate λ is nonpositive along extremals and the
//! switching function is η = (−λ₁/r)γ(s₁) − (−λ₂/(1−r))γ(s₂). Positive η
//! selects patch 1, negative η patch 2, and η = 0 the diagonal arc.

use alloc::vec::Vec;

use crate::dynamics::{reduced_rhs, Control, Phase, ReducedParams, State, Trajectory};
use crate::error::{Error, Result};
use crate::growth::GrowthModel;
use crate::ode::{self, OdeOptions};
use crate::strategies::{Law, Patch};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdjointState {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl AdjointState {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        Self { lambda1, lambda2 }
    }

    pub fn norm(&self) -> f64 {
        libm::hypot(self.lambda1, self.lambda2)
    }

    /// Unit-norm copy; the zero costate is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            Self::new(self.lambda1 / n, self.lambda2 / n)
        } else {
            *self
        }
    }
}

/// Costate values at the trajectory sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct CostatePath {
    pub t: Vec<f64>,
    pub lambda: Vec<AdjointState>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Longest allowed spacing between consecutive samples.
    pub max_gap: f64,
}

impl Default for AdjointOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_gap: 1.0,
        }
    }
}

fn gamma0(growth: &GrowthModel, sigma: f64) -> Result<f64> {
    if sigma > 0.0 {
        growth.gamma(sigma)
    } else {
        Ok(0.0)
    }
}

fn near_diagonal(s: State, tol: f64) -> bool {
    (s.s1 - s.s2).abs() <= tol * s.norm().max(1.0)
}

/// Terminal costate. A diagonal arrival takes the ray −(r, 1−r), the only
/// one keeping η = 0 on the diagonal; otherwise the normal of the face of
/// the target that was crossed.
pub fn transversality_seed(traj: &Trajectory, params: &ReducedParams) -> Result<AdjointState> {
    traj.events.t_f.ok_or(Error::NoTarget)?;
    let end = traj.last();
    let r = params.r;
    Ok(if end.phase == Phase::Diagonal || end.state.s1 == end.state.s2 {
        AdjointState::new(-r, -(1.0 - r))
    } else if end.state.s1 < end.state.s2 {
        AdjointState::new(0.0, -1.0)
    } else {
        AdjointState::new(-1.0, 0.0)
    })
}

/// The optimal-feedback law in force on the interval starting at `left`.
fn interval_law(left: Phase, s: State) -> Law {
    match left {
        Phase::Diagonal => Law::Singular,
        Phase::OffDiagonal if s.s1 >= s.s2 => Law::Bang(Patch::One),
        Phase::OffDiagonal => Law::Bang(Patch::Two),
    }
}

/// λ̇ for the non-relaxed adjoint system under control `u`.
pub fn adjoint_rhs(lambda: AdjointState, u: Control, params: &ReducedParams, growth: &GrowthModel) -> [f64; 2] {
    let ReducedParams { r, d, .. } = *params;
    let m = growth.mu(u.sr_star);
    let (l1, l2) = (lambda.lambda1, lambda.lambda2);
    let coupling = l1 / r - l2 / (1.0 - r);
    [
        l1 * (u.alpha / r) * m + d * coupling,
        l2 * ((1.0 - u.alpha) / (1.0 - r)) * m - d * coupling,
    ]
}

/// Forward derivative of the coupled (s, λ) system under `law`.
fn coupled_rhs(law: &Law, y: &[f64; 4], params: &ReducedParams, growth: &GrowthModel) -> Result<[f64; 4]> {
    let s = State::new(y[0], y[1]);
    let u = law.control(s, params, growth)?;
    let fs = reduced_rhs(s, u, params, growth);
    let fl = adjoint_rhs(AdjointState::new(y[2], y[3]), u, params, growth);
    Ok([fs[0], fs[1], fl[0], fl[1]])
}

/// Integrates the adjoint backward from `seed` at t_f along the stored
/// trajectory. On each sample interval the state is re-integrated backward
/// together with λ from the right sample, under the optimal-feedback law of
/// the left sample.
pub fn adjoint_backward(
    traj: &Trajectory,
    params: &ReducedParams,
    growth: &GrowthModel,
    seed: AdjointState,
    opts: &AdjointOptions,
) -> Result<CostatePath> {
    let n = traj.samples.len();
    if n == 0 {
        return Err(Error::NoTarget);
    }
    let ode_opts = OdeOptions {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        ..OdeOptions::default()
    };
    let mut lambda = alloc::vec![AdjointState::default(); n];
    lambda[n - 1] = seed;
    for k in (0..n - 1).rev() {
        let (left, right) = (&traj.samples[k], &traj.samples[k + 1]);
        let gap = right.t - left.t;
        if gap > opts.max_gap {
            return Err(Error::Resolution { t: left.t });
        }
        let l = lambda[k + 1];
        if !(gap > 0.0) {
            lambda[k] = l;
            continue;
        }
        let law = interval_law(left.phase, left.state);
        let y0 = [right.state.s1, right.state.s2, l.lambda1, l.lambda2];
        let out = ode::solve(
            |_, y: &[f64; 4]| {
                let f = coupled_rhs(&law, y, params, growth)?;
                Ok([-f[0], -f[1], -f[2], -f[3]])
            },
            0.0,
            y0,
            gap,
            &ode_opts,
            |_, _| [],
            [],
            |_, _, _| {},
            |_, _| {},
        )?;
        lambda[k] = AdjointState::new(out.y[2], out.y[3]);
    }
    Ok(CostatePath {
        t: traj.samples.iter().map(|p| p.t).collect(),
        lambda,
    })
}

/// Switching function η(λ, s).
pub fn eta(lambda: AdjointState, s: State, params: &ReducedParams, growth: &GrowthModel) -> Result<f64> {
    let r = params.r;
    Ok((-lambda.lambda1 / r) * gamma0(growth, s.s1)? - (-lambda.lambda2 / (1.0 - r)) * gamma0(growth, s.s2)?)
}

/// Closed-form time derivative of η along a bang arc.
pub fn eta_dot_formula(lambda: AdjointState, s: State, params: &ReducedParams, growth: &GrowthModel) -> Result<f64> {
    let ReducedParams { r, d, .. } = *params;
    let (l1, l2) = (lambda.lambda1, lambda.lambda2);
    let g = gamma0(growth, s.s1)? / r + gamma0(growth, s.s2)? / (1.0 - r);
    let m1 = growth.mu(growth.shat_or_zero(s.s1)?);
    let m2 = growth.mu(growth.shat_or_zero(s.s2)?);
    Ok(d * g * (l2 / (1.0 - r) - l1 / r) + d * (l1 * m1 / (r * r) + l2 * m2 / ((1.0 - r) * (1.0 - r))) * (s.s1 - s.s2))
}

/// Q(s, λ, u) = −(α λ₁/r β(s₁, s*ᵣ) + (1−α) λ₂/(1−r) β(s₂, s*ᵣ)).
pub fn q_function(s: State, lambda: AdjointState, u: Control, params: &ReducedParams, growth: &GrowthModel) -> f64 {
    let r = params.r;
    -(u.alpha * lambda.lambda1 / r * growth.beta(s.s1, u.sr_star)
        + (1.0 - u.alpha) * lambda.lambda2 / (1.0 - r) * growth.beta(s.s2, u.sr_star))
}

/// The maximizers of Q over the control set when λ ≤ 0.
fn argmax_candidates(s: State, growth: &GrowthModel) -> Result<[Control; 2]> {
    Ok([
        Control {
            alpha: 1.0,
            sr_star: growth.shat_or_zero(s.s1)?,
        },
        Control {
            alpha: 0.0,
            sr_star: growth.shat_or_zero(s.s2)?,
        },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalTolerances {
    /// Allowed positive part of λ̂ᵢ, and the dead band on η̂.
    pub sign: f64,
    /// Allowed |η̇_formula − η̇_fd| on bang samples.
    pub etadot: f64,
    /// Relative |s₁ − s₂| below which a state counts as diagonal.
    pub diagonal: f64,
    /// Allowed mismatch of the recorded setpoint.
    pub control: f64,
    /// Half-width of the centered difference for η̇.
    pub fd_step: f64,
}

impl Default for ExtremalTolerances {
    fn default() -> Self {
        Self {
            sign: 1e-8,
            etadot: 1e-5,
            diagonal: 1e-6,
            control: 1e-6,
            fd_step: 1e-6,
        }
    }
}

/// Which branch of the feedback a recorded control belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    One,
    Two,
    Diagonal,
}

impl Branch {
    pub fn of(u: Control) -> Self {
        if u.alpha == 1.0 {
            Branch::One
        } else if u.alpha == 0.0 {
            Branch::Two
        } else {
            Branch::Diagonal
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::One => "patch1",
            Branch::Two => "patch2",
            Branch::Diagonal => "diagonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalSample {
    pub t: f64,
    /// Unit-norm costate.
    pub lambda: AdjointState,
    /// η evaluated with the unit-norm costate.
    pub eta: f64,
    pub branch: Branch,
    pub sign_violation: f64,
    pub branch_ok: bool,
    pub forbidden: bool,
    /// |η̇_formula − η̇_fd|, only on bang samples off the diagonal.
    pub etadot_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalReport {
    pub samples: Vec<ExtremalSample>,
    pub max_sign_violation: f64,
    pub max_etadot_error: f64,
    pub branch_violations: usize,
    pub forbidden_violations: usize,
    pub eta_sign_changes: usize,
    pub tolerances: ExtremalTolerances,
    pub pass: bool,
}

fn rk4<F: FnMut(&[f64; 4]) -> Result<[f64; 4]>>(mut f: F, y: [f64; 4], h: f64) -> Result<[f64; 4]> {
    let add = |a: &[f64; 4], b: &[f64; 4], c: f64| core::array::from_fn(|i| a[i] + c * b[i]);
    let k1 = f(&y)?;
    let k2 = f(&add(&y, &k1, h / 2.0))?;
    let k3 = f(&add(&y, &k2, h / 2.0))?;
    let k4 = f(&add(&y, &k3, h))?;
    Ok(core::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

fn eta_dot_fd(
    law: &Law,
    s: State,
    lambda: AdjointState,
    h: f64,
    params: &ReducedParams,
    growth: &GrowthModel,
) -> Result<f64> {
    let y = [s.s1, s.s2, lambda.lambda1, lambda.lambda2];
    let at = |step: f64| -> Result<f64> {
        let z = rk4(|y| coupled_rhs(law, y, params, growth), y, step)?;
        eta(AdjointState::new(z[2], z[3]), State::new(z[0], z[1]), params, growth)
    };
    Ok((at(h)? - at(-h)?) / (2.0 * h))
}

/// Seeds, integrates and checks the costate along an optimal-feedback
/// trajectory. Failures are reported in the result, not as errors.
pub fn check_extremal(
    traj: &Trajectory,
    params: &ReducedParams,
    growth: &GrowthModel,
    tol: &ExtremalTolerances,
) -> Result<ExtremalReport> {
    let seed = transversality_seed(traj, params)?;
    let path = adjoint_backward(traj, params, growth, seed, &AdjointOptions::default())?;
    let mut samples = Vec::with_capacity(traj.samples.len());
    let mut last_sign = 0.0;
    let mut report = ExtremalReport {
        samples: Vec::new(),
        max_sign_violation: 0.0,
        max_etadot_error: 0.0,
        branch_violations: 0,
        forbidden_violations: 0,
        eta_sign_changes: 0,
        tolerances: *tol,
        pass: false,
    };
    for (p, lam) in traj.samples.iter().zip(&path.lambda) {
        let s = p.state;
        let l = lam.normalized();
        let e = eta(l, s, params, growth)?;
        let branch = Branch::of(p.control);
        let on_diag = near_diagonal(s, tol.diagonal);
        let setpoint_ok = |expected: f64| (p.control.sr_star - expected).abs() <= tol.control * expected.max(1.0);
        let branch_ok = if e > tol.sign {
            branch == Branch::One && setpoint_ok(growth.shat_or_zero(s.s1)?)
        } else if e < -tol.sign {
            branch == Branch::Two && setpoint_ok(growth.shat_or_zero(s.s2)?)
        } else {
            on_diag && setpoint_ok(growth.shat_or_zero(params.mass(s))?)
        };
        let forbidden = !on_diag && ((s.s1 > s.s2 && e < -tol.sign) || (s.s1 < s.s2 && e > tol.sign));
        let etadot_error = if p.phase == Phase::OffDiagonal && !on_diag && params.d > 0.0 {
            let law = interval_law(p.phase, s);
            let fd = eta_dot_fd(&law, s, l, tol.fd_step, params, growth)?;
            Some((eta_dot_formula(l, s, params, growth)? - fd).abs())
        } else {
            None
        };
        let sign_violation = l.lambda1.max(l.lambda2).max(0.0);

        if e.abs() > tol.sign {
            let sign = e.signum();
            if last_sign != 0.0 && sign != last_sign {
                report.eta_sign_changes += 1;
            }
            last_sign = sign;
        }
        report.max_sign_violation = report.max_sign_violation.max(sign_violation);
        if let Some(err) = etadot_error {
            report.max_etadot_error = report.max_etadot_error.max(err);
        }
        report.branch_violations += usize::from(!branch_ok);
        report.forbidden_violations += usize::from(forbidden);
        samples.push(ExtremalSample {
            t: p.t,
            lambda: l,
            eta: e,
            branch,
            sign_violation,
            branch_ok,
            forbidden,
            etadot_error,
        });
    }
    report.samples = samples;
    report.pass = report.max_sign_violation <= tol.sign
        && report.max_etadot_error <= tol.etadot
        && report.branch_violations == 0
        && report.forbidden_violations == 0
        && report.eta_sign_changes <= 1;
    Ok(report)
}

/// Swaps the recorded bang branches of a trajectory (α = 1 ↔ α = 0, with the
/// setpoint of the other patch). Used as a negative control for
/// [`check_extremal`].
pub fn swap_branches(traj: &Trajectory, growth: &GrowthModel) -> Result<Trajectory> {
    let mut out = traj.clone();
    for p in &mut out.samples {
        p.control = match Branch::of(p.control) {
            Branch::One => Control {
                alpha: 0.0,
                sr_star: growth.shat_or_zero(p.state.s2)?,
            },
            Branch::Two => Control {
                alpha: 1.0,
                sr_star: growth.shat_or_zero(p.state.s1)?,
            },
            Branch::Diagonal => p.control,
        };
    }
    Ok(out)
}

/// HJB residual −1 + max_u Q(x, −∇W₀, u) for the no-diffusion value
/// W₀ = rT(x₁) + (1−r)T(x₂). On the kinks x₁ = s̄ or x₂ = s̄ both end points
/// of the subdifferential interval are tried and the larger residual in
/// absolute value is returned.
pub fn hjb_residual_v0(x: State, params: &ReducedParams, growth: &GrowthModel) -> Result<f64> {
    if params.in_target(x) || !(x.s1 >= 0.0 && x.s2 >= 0.0) {
        return Err(Error::Domain {
            what: "hjb residual",
            s1: x.s1,
            s2: x.s2,
        });
    }
    let ReducedParams { r, s_bar, .. } = *params;
    let grad = |xi: f64, w: f64| -> Result<[f64; 2]> {
        Ok(if xi > s_bar {
            let g = w / growth.gamma(xi)?;
            [g, g]
        } else if xi == s_bar {
            [0.0, w / growth.gamma(s_bar)?]
        } else {
            [0.0, 0.0]
        })
    };
    let g1 = grad(x.s1, r)?;
    let g2 = grad(x.s2, 1.0 - r)?;
    let candidates = argmax_candidates(x, growth)?;
    let mut worst: f64 = 0.0;
    for &d1 in &g1 {
        for &d2 in &g2 {
            let lambda = AdjointState::new(-d1, -d2);
            let best = candidates
                .iter()
                .map(|&u| q_function(x, lambda, u, params, growth))
                .fold(f64::NEG_INFINITY, f64::max);
            let res = -1.0 + best;
            if res.abs() > worst.abs() {
                worst = res;
            }
        }
    }
    Ok(worst)
}
