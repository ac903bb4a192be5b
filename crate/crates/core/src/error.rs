use alloc::boxed::Box;
use core::fmt;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An iterative method did not converge. `what` names the routine, `at`
    /// the abscissa (concentration or time) where it gave up.
    NumericalFailure { what: &'static str, at: f64 },
    /// The integrator step size fell below the representable resolution.
    StepUnderflow { t: f64, h: f64 },
    /// A strategy produced a control outside U(s).
    InadmissibleControl {
        t: f64,
        alpha: f64,
        sr_star: f64,
        bound: f64,
    },
    /// A parameter is outside its documented range.
    InvalidParameter { name: &'static str, value: f64 },
    /// The trajectory never reached the target.
    NoTarget,
    /// The point lies outside the domain of the requested quantity.
    Domain { what: &'static str, s1: f64, s2: f64 },
    /// The t_delta bound is undefined without diffusion.
    UndefinedBound,
    /// No constant control reached the target before the horizon.
    InfeasibleSearch,
    /// Stored trajectory samples are too sparse to interpolate.
    Resolution { t: f64 },
    /// A value-grid node failed.
    AtNode { s1: f64, s2: f64, cause: Box<Error> },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NumericalFailure { what, at } => {
                write!(f, "{what} failed to converge at {at}")
            }
            Error::StepUnderflow { t, h } => write!(f, "step size underflow (h = {h:e}) at t = {t}"),
            Error::InadmissibleControl {
                t,
                alpha,
                sr_star,
                bound,
            } => write!(
                f,
                "inadmissible control at t = {t}: alpha = {alpha}, sr_star = {sr_star} > {bound}"
            ),
            Error::InvalidParameter { name, value } => write!(f, "invalid parameter {name} = {value}"),
            Error::NoTarget => f.write_str("trajectory does not reach the target"),
            Error::Domain { what, s1, s2 } => write!(f, "{what} undefined at ({s1}, {s2})"),
            Error::UndefinedBound => f.write_str("t_delta bound requires d > 0"),
            Error::InfeasibleSearch => f.write_str("no constant control reaches the target"),
            Error::Resolution { t } => write!(f, "trajectory samples too sparse near t = {t}"),
            Error::AtNode { s1, s2, cause } => write!(f, "at grid node ({s1}, {s2}): {cause}"),
        }
    }
}

impl core::error::Error for Error {}
