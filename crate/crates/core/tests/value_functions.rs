//! Value-function identities, bounds and monotonicity on seeded samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twopatch_core::Strategy;
use twopatch_core::*;

const R: f64 = 0.3;

fn monod() -> GrowthModel {
    GrowthModel::monod(1.0, 1.0)
}

fn params(d: f64) -> ReducedParams {
    ReducedParams::new(R, d, 1.0).unwrap()
}

fn cfg() -> SimConfig {
    SimConfig::default()
}

fn off_diagonal(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> State {
    loop {
        let x = State::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi));
        if (x.s1 - x.s2).abs() > 0.05 {
            return x;
        }
    }
}

#[test]
fn no_diffusion_value_is_closed_form() {
    let g = monod();
    let tf = TimeFunction::new(&g, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..25 {
        let x = State::new(rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
        let v0 = v0_closed(x, &tf, R).unwrap();
        let vd = vd_sim(x, &params(0.0), &g, &cfg()).unwrap();
        assert!((vd - v0).abs() <= 1e-4 * v0.max(1e-12), "{x:?}: {vd} vs {v0}");
    }
}

#[test]
fn diagonal_value_is_independent_of_diffusion() {
    let g = monod();
    let tf = TimeFunction::new(&g, 1.0);
    for s in [1.2, 2.5, 4.0, 7.0] {
        let t = tf.eval(s).unwrap();
        for d in [0.0, 0.1, 1.0, 10.0] {
            let vd = vd_sim(State::new(s, s), &params(d), &g, &cfg()).unwrap();
            assert!((vd - t).abs() < 1e-3 * t, "s={s} d={d}");
        }
    }
}

#[test]
fn value_increases_with_diffusion() {
    let g = monod();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let x = off_diagonal(&mut rng, 1.2, 4.0);
        let v: Vec<f64> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&d| vd_sim(x, &params(d), &g, &cfg()).unwrap())
            .collect();
        assert!(v[0] < v[1] && v[1] < v[2], "{x:?}: {v:?}");
    }
}

#[test]
fn sandwich_between_limit_values() {
    let g = monod();
    let tf = TimeFunction::new(&g, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let x = off_diagonal(&mut rng, 1.05, 4.0);
        let (v0, vinf) = (v0_closed(x, &tf, R).unwrap(), vinf_closed(x, &tf, R).unwrap());
        for d in [0.1, 1.0, 10.0] {
            let vd = vd_sim(x, &params(d), &g, &cfg()).unwrap();
            assert!(v0 <= vd + 1e-9 && vd < vinf - 1e-6, "{x:?} d={d}: {v0} {vd} {vinf}");
        }
    }
}

#[test]
fn sandwich_fails_when_one_patch_starts_clean() {
    let g = monod();
    let tf = TimeFunction::new(&g, 1.0);
    let x = State::new(1.5, 0.0);
    let vd = vd_sim(x, &params(10.0), &g, &cfg()).unwrap();
    assert!(vd < v0_closed(x, &tf, R).unwrap());
}

#[test]
fn large_diffusion_limit() {
    let g = monod();
    let tf = TimeFunction::new(&g, 1.0);
    let x = State::new(4.0, 1.5);
    let vinf = vinf_closed(x, &tf, R).unwrap();
    let vd = vd_sim(x, &params(1e4), &g, &cfg()).unwrap();
    assert!((vd - vinf).abs() < 0.02 * vinf, "{vd} {vinf}");
}

#[test]
fn capture_time_and_level_bounds() {
    let g = monod();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checked = 0;
    for k in 0..20 {
        let d = [0.1, 1.0, 10.0][k % 3];
        let p = params(d);
        let x = off_diagonal(&mut rng, 1.1, 4.0);
        let tr = simulate(&Strategy::OptimalTwoPump, x, &p, &g, &cfg()).unwrap();
        let Some(t_delta) = tr.events.t_delta else { continue };
        checked += 1;
        let bound = t_delta_bound(x, &p, &g).unwrap();
        assert!(t_delta <= bound.bound, "{x:?} d={d}: {t_delta} > {}", bound.bound);
        let at = tr.samples.iter().find(|s| s.t == t_delta).unwrap().state;
        let (lo, hi) = s_delta_sandwich(x, t_delta, &p, &g).unwrap();
        assert!(lo <= at.s1 && at.s1 <= hi, "{x:?} d={d}: {lo} {} {hi}", at.s1);
    }
    assert!(checked >= 15);
}

#[test]
fn no_diffusion_grid_matches_closed_form_grid() {
    let g = monod();
    let p = params(0.0);
    let spec = GridSpec {
        lo: [0.0, 0.0],
        hi: [5.0, 5.0],
        n: [6, 6],
    };
    let v0 = value_grid(ValueKind::V0, spec, &p, &g, &cfg()).unwrap();
    let vd = value_grid(ValueKind::Vd(0.0), spec, &p, &g, &cfg()).unwrap();
    for (a, b) in v0.values.iter().zip(&vd.values) {
        assert!((a - b).abs() <= 1e-4 * a.max(1e-12));
    }
    for (x, v) in spec.nodes().iter().zip(&vd.values) {
        if p.in_target(*x) {
            assert_eq!(*v, 0.0);
        }
        assert!(*v >= 0.0);
    }
}

#[test]
fn reference_points() {
    let g = monod();
    let tf = TimeFunction::new(&g, 1.0);
    let vinf = vinf_closed(State::new(4.0, 0.5), &tf, R).unwrap();
    assert!((vinf - 2.17).abs() <= 0.02 * 2.17);
    let v = vd_sim(State::new(4.0, 1.5), &params(0.1), &g, &cfg()).unwrap();
    assert!((v - 3.20).abs() <= 0.03 * 3.20);
    let v = vd_sim(
        State::new(3.0, 0.0),
        &ReducedParams::new(R, 0.1, 0.1).unwrap(),
        &g,
        &cfg(),
    )
    .unwrap();
    assert!((v - 32.91).abs() <= 0.03 * 32.91);
}
