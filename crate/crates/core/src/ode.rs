//! Dormand–Prince 5(4) integrator with terminal and non-terminal event
//! location over fixed-size state arrays.
//!
//! Events are scalar functions g(t, y) that fire when they fall from
//! `g > 0` to `g <= 0` across an accepted step. The crossing is bracketed
//! and bisected by re-stepping from the start of the step until the bracket
//! is narrower than `event_tol`; the reported point is the right end of the
//! bracket, so `g <= 0` holds there.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub event_tol: f64,
    /// Upper bound on the step size.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            event_tol: 1e-10,
            max_step: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

/// Why [`solve`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Terminal event with the given index fired.
    Event(usize),
    /// Reached `t_end`.
    End,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub stop: Stop,
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

struct Step<const N: usize> {
    y: [f64; N],
    k7: [f64; N],
    err: [f64; N],
}

fn dp_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Result<Step<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k2 = f(t + C2 * h, &combine(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(
        t + C5 * h,
        &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = f(
        t + h,
        &combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = combine(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new)?;
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(Step { y: y_new, k7, err })
}

fn error_norm<const N: usize>(opts: &OdeOptions, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / scale;
        acc += e * e;
    }
    libm::sqrt(acc / N as f64)
}

fn initial_step<const N: usize>(opts: &OdeOptions, y: &[f64; N], dy: &[f64; N], span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let scale = opts.abs_tol + opts.rel_tol * y[i].abs();
        d0 += (y[i] / scale) * (y[i] / scale);
        d1 += (dy[i] / scale) * (dy[i] / scale);
    }
    let (d0, d1) = (libm::sqrt(d0 / N as f64), libm::sqrt(d1 / N as f64));
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).min(opts.max_step).max(1e-12 * span.max(1.0))
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (`t_end > t0`).
///
/// `events(t, y, out)` fills one value per event; `terminal[i]` selects
/// whether event `i` stops integration. Non-terminal crossings are reported
/// through `on_event(i, t, y)`. `observer(t, y)` sees every accepted step end
/// (and the terminal event point), not the initial point.
#[allow(clippy::too_many_arguments)]
pub fn solve<const N: usize, const M: usize, F, G, O, E>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut events: G,
    terminal: [bool; M],
    mut on_event: E,
    mut observer: O,
) -> Result<Outcome<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    G: FnMut(f64, &[f64; N]) -> [f64; M],
    E: FnMut(usize, f64, &[f64; N]),
    O: FnMut(f64, &[f64; N]),
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut g_prev = events(t, &y);
    let mut fired = [false; M];
    let span = t_end - t0;
    if !(span > 0.0) {
        return Ok(Outcome { t, y, stop: Stop::End });
    }
    let mut h = initial_step(opts, &y, &k1, span);
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::NumericalFailure {
                what: "ode step budget",
                at: t,
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) && !last {
            return Err(Error::StepUnderflow { t, h });
        }
        let step = dp_step(&mut f, t, &y, &k1, h)?;
        let norm = error_norm(opts, &y, &step.y, &step.err);
        if !norm.is_finite() || norm > 1.0 {
            let factor = if norm.is_finite() {
                (0.9 * libm::pow(norm, -0.2)).max(0.2)
            } else {
                0.1
            };
            h *= factor;
            if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h });
            }
            continue;
        }
        let t_new = if last { t_end } else { t + h };
        let g_new = events(t_new, &step.y);

        // earliest falling crossing in this step
        let mut first: Option<(usize, f64, [f64; N])> = None;
        for i in 0..M {
            if g_prev[i] > 0.0 && g_new[i] <= 0.0 {
                let (te, ye) = locate(&mut f, &mut events, i, t, &y, &k1, t_new - t, &step.y, opts.event_tol)?;
                match first {
                    Some((_, tb, _)) if tb <= te => {}
                    _ => first = Some((i, te, ye)),
                }
            }
        }
        if let Some((i, te, ye)) = first {
            if terminal[i] {
                observer(te, &ye);
                return Ok(Outcome {
                    t: te,
                    y: ye,
                    stop: Stop::Event(i),
                });
            }
            if !fired[i] {
                fired[i] = true;
                on_event(i, te, &ye);
            }
        }
        // non-terminal events other than the earliest
        for i in 0..M {
            if !terminal[i] && !fired[i] && g_prev[i] > 0.0 && g_new[i] <= 0.0 {
                let (te, ye) = locate(&mut f, &mut events, i, t, &y, &k1, t_new - t, &step.y, opts.event_tol)?;
                fired[i] = true;
                on_event(i, te, &ye);
            }
        }

        t = t_new;
        y = step.y;
        k1 = step.k7;
        g_prev = g_new;
        observer(t, &y);
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * libm::pow(norm, -0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(opts.max_step);
    }
    Ok(Outcome { t, y, stop: Stop::End })
}

/// Bisects the step length for event `i`, re-stepping from `(t, y)`.
#[allow(clippy::too_many_arguments)]
fn locate<const N: usize, const M: usize, F, G>(
    f: &mut F,
    events: &mut G,
    i: usize,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    y_full: &[f64; N],
    event_tol: f64,
) -> Result<(f64, [f64; N])>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    G: FnMut(f64, &[f64; N]) -> [f64; M],
{
    let mut lo = 0.0;
    let mut hi = h;
    let mut y_hi = *y_full;
    for _ in 0..200 {
        if hi - lo <= event_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let y_mid = dp_step(f, t, y, k1, mid)?.y;
        if events(t + mid, &y_mid)[i] <= 0.0 {
            hi = mid;
            y_hi = y_mid;
        } else {
            lo = mid;
        }
    }
    Ok((t + hi, y_hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_events<const N: usize>(_: f64, _: &[f64; N]) -> [f64; 0] {
        []
    }

    #[test]
    fn exponential_decay_accuracy() {
        let opts = OdeOptions::default();
        let out = solve(
            |_, y: &[f64; 1]| Ok([-y[0]]),
            0.0,
            [1.0],
            5.0,
            &opts,
            no_events,
            [],
            |_, _, _| {},
            |_, _| {},
        )
        .unwrap();
        assert_eq!(out.stop, Stop::End);
        assert!((out.y[0] - libm::exp(-5.0)).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_event() {
        // y = cos t crosses zero (falling) at pi/2
        let opts = OdeOptions::default();
        let out = solve(
            |_, y: &[f64; 2]| Ok([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            10.0,
            &opts,
            |_, y: &[f64; 2]| [y[0]],
            [true],
            |_, _, _| {},
            |_, _| {},
        )
        .unwrap();
        assert_eq!(out.stop, Stop::Event(0));
        assert!((out.t - core::f64::consts::FRAC_PI_2).abs() < 2e-10);
        assert!(out.y[0] <= 0.0);
    }

    #[test]
    fn non_terminal_event_reported_once() {
        let opts = OdeOptions {
            max_step: 0.1,
            ..OdeOptions::default()
        };
        let mut seen = alloc::vec::Vec::new();
        solve(
            |_, _: &[f64; 1]| Ok([1.0]),
            0.0,
            [0.0],
            3.0,
            &opts,
            |_, y: &[f64; 1]| [1.5 - y[0]],
            [false],
            |i, t, _| seen.push((i, t)),
            |_, _| {},
        )
        .unwrap();
        assert_eq!(seen.len(), 1);
        assert!((seen[0].1 - 1.5).abs() < 1e-9);
    }

    #[test]
    fn rhs_errors_propagate() {
        let opts = OdeOptions::default();
        let r = solve(
            |t, _: &[f64; 1]| if t > 0.5 { Err(Error::NoTarget) } else { Ok([1.0]) },
            0.0,
            [0.0],
            1.0,
            &opts,
            no_events,
            [],
            |_, _, _| {},
            |_, _| {},
        );
        assert_eq!(r.unwrap_err(), Error::NoTarget);
    }
}
