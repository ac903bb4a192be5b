//! Subcommand implementations.

pub mod compare;
pub mod full;
pub mod gamma;
pub mod simulate;
pub mod value;
pub mod verify;

/// Finite times as numbers, unreachable ones as `null`.
pub(crate) fn finite(t: f64) -> Option<f64> {
    t.is_finite().then_some(t)
}
