//! Minimal-time bioremediation of a two-patch water resource through a side
//! bioreactor.
//!
//! The crate is `no_std` with `alloc`. It provides the growth kinetics and the
//! derived quantities ŝ, γ and T, the reduced and slow-fast models with an
//! event-locating integrator, the optimal feedback and reference strategies,
//! value functions, and a posteriori optimality checks.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod growth;
pub mod numeric;
pub mod ode;
pub mod pmp;
pub mod strategies;
pub mod value;

pub use dynamics::{
    default_full_start, full_rhs, reduced_rhs, simulate, simulate_full, to_reduced, Control, Events, FullParams,
    FullSample, FullState, FullTrajectory, Phase, PhysicalParams, ReducedParams, Sample, SimConfig, State, Termination,
    Trajectory,
};
pub use error::{Error, Result};
pub use growth::{GrowthModel, HermiteTable, TimeFunction};
pub use pmp::{
    adjoint_backward, check_extremal, eta, eta_dot_formula, hjb_residual_v0, q_function, swap_branches,
    transversality_seed, AdjointOptions, AdjointState, Branch, CostatePath, ExtremalReport, ExtremalSample,
    ExtremalTolerances,
};
pub use strategies::{
    best_constant_search, best_constant_search_with, constant_reach_time, constant_zeta_control, homogenizing_feedback,
    one_pump_feedback, optimal_feedback, BestConstant, ConstantFamily, ConstantSearch, ParseStrategyError, Patch,
    Strategy,
};
pub use value::{
    s_delta_sandwich, t_delta_bound, v0_closed, value_at, value_grid, value_grid_with, vd_sim, vinf_closed, DeltaBound,
    GridSpec, ValueGrid, ValueKind,
};
