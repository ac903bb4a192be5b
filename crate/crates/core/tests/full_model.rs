//! The slow-fast model under the optimal feedback approaches the reduced
//! value as ε shrinks.

use twopatch_core::Strategy;
use twopatch_core::*;

#[test]
fn reach_time_converges_to_reduced_value() {
    let g = GrowthModel::monod(1.0, 1.0);
    let cfg = SimConfig::default();
    let p = ReducedParams::new(0.3, 0.1, 1.0).unwrap();
    let x0 = State::new(4.0, 1.5);
    let vd = vd_sim(x0, &p, &g, &cfg).unwrap();
    let mut gaps = Vec::new();
    for eps in [0.1, 0.01, 0.001] {
        let start = default_full_start(&Strategy::OptimalTwoPump, x0, &p, &g, &cfg).unwrap();
        let tr = simulate_full(
            &Strategy::OptimalTwoPump,
            start,
            &FullParams::new(p, eps).unwrap(),
            &g,
            &cfg,
        )
        .unwrap();
        assert_eq!(tr.events.reason, Termination::Target);
        gaps.push((tr.events.t_f.unwrap() - vd).abs());
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 0.05 * vd);
}

#[test]
fn reachable_from_both_sides_and_diagonal() {
    let g = GrowthModel::monod(1.0, 1.0);
    let cfg = SimConfig::default();
    let p = ReducedParams::new(0.3, 1.0, 1.0).unwrap();
    for x0 in [State::new(4.0, 0.5), State::new(0.5, 4.0), State::new(3.0, 3.0)] {
        for eps in [0.1, 0.01] {
            let start = default_full_start(&Strategy::OptimalTwoPump, x0, &p, &g, &cfg).unwrap();
            let tr = simulate_full(
                &Strategy::OptimalTwoPump,
                start,
                &FullParams::new(p, eps).unwrap(),
                &g,
                &cfg,
            )
            .unwrap();
            assert_eq!(tr.events.reason, Termination::Target, "{x0:?} eps={eps}");
            assert!(tr.samples.iter().all(|s| s.state.x_r > 0.0 && s.state.s_r >= -1e-12));
        }
    }
}
