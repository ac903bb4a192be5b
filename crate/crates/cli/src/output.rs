//! CSV and JSON writers. Numbers use Rust's shortest round-trip formatting,
//! so identical inputs give byte-identical files.

use std::path::Path;

use serde::Serialize;
use twopatch_core::{FullTrajectory, Trajectory};

use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes a header and rows of already formatted fields.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn trajectory_rows(traj: &Trajectory) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.samples.iter().map(|s| {
        vec![
            s.t.to_string(),
            s.state.s1.to_string(),
            s.state.s2.to_string(),
            s.control.alpha.to_string(),
            s.control.sr_star.to_string(),
            s.phase.as_str().to_string(),
        ]
    })
}

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "s1", "s2", "alpha", "sr_star", "phase"];

pub const FULL_HEADER: [&str; 9] = ["t", "s1", "s2", "alpha", "sr_star", "phase", "s_r", "x_r", "q_over_vr"];

pub fn full_rows(traj: &FullTrajectory) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.samples.iter().map(|s| {
        vec![
            s.t.to_string(),
            s.state.s1.to_string(),
            s.state.s2.to_string(),
            s.control.alpha.to_string(),
            s.control.sr_star.to_string(),
            s.phase.as_str().to_string(),
            s.state.s_r.to_string(),
            s.state.x_r.to_string(),
            s.q_over_vr.to_string(),
        ]
    })
}

/// `{t_delta, t_f, reason}` for a finished run; absent times are `null`.
#[derive(Debug, Clone, Serialize)]
pub struct EventsJson {
    pub t_delta: Option<f64>,
    pub t_f: Option<f64>,
    pub reason: &'static str,
}

impl From<&twopatch_core::Events> for EventsJson {
    fn from(e: &twopatch_core::Events) -> Self {
        Self {
            t_delta: e.t_delta,
            t_f: e.t_f,
            reason: e.reason.as_str(),
        }
    }
}
