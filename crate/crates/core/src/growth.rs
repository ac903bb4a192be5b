//! Specific growth rate μ, the optimal quasi-steady setpoint ŝ(σ), the
//! removal-rate envelope γ(σ) and the scalar time-to-threshold function T.
//!
//! For a blended inflow concentration σ the bioreactor removes pollutant at
//! rate β(σ, s) = μ(s)(σ − s) when held at setpoint s. Under an increasing
//! concave μ with μ(0) = 0 the maximiser ŝ(σ) ∈ (0, σ) is unique and solves
//! μ(ŝ) = μ′(ŝ)(σ − ŝ); the envelope γ(σ) = β(σ, ŝ(σ)) has γ′(σ) = μ(ŝ(σ)).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric;

/// Specific growth rate of the bioreactor biomass.
#[derive(Debug, Clone)]
pub enum GrowthModel {
    /// μ(s) = mu_max · s / (ks + s). `mu_max` in 1/h, `ks` in g/L.
    Monod { mu_max: f64, ks: f64 },
    /// Piecewise cubic Hermite interpolant of tabulated (s, μ, μ′) triples.
    Tabulated(HermiteTable),
    /// User-supplied rate with an explicit derivative.
    Custom {
        mu: fn(f64) -> f64,
        mu_prime: fn(f64) -> f64,
    },
}

impl Default for GrowthModel {
    fn default() -> Self {
        GrowthModel::Monod { mu_max: 1.0, ks: 1.0 }
    }
}

/// Tabulated growth curve. Nodes start at s = 0 with μ = 0; beyond the last
/// node the curve continues along its tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    s: Vec<f64>,
    mu: Vec<f64>,
    dmu: Vec<f64>,
}

impl HermiteTable {
    pub fn new(s: Vec<f64>, mu: Vec<f64>, dmu: Vec<f64>) -> Result<Self> {
        if s.len() < 2 || s.len() != mu.len() || s.len() != dmu.len() {
            return Err(Error::InvalidParameter {
                name: "growth.table.len",
                value: s.len() as f64,
            });
        }
        if s[0] != 0.0 {
            return Err(Error::InvalidParameter {
                name: "growth.s[0]",
                value: s[0],
            });
        }
        if let Some(w) = s.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "growth.s (not increasing)",
                value: w[1],
            });
        }
        Ok(Self { s, mu, dmu })
    }

    fn locate(&self, x: f64) -> usize {
        // index i with s[i] <= x < s[i+1], clamped to the last interval
        match self.s.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(self.s.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.s.len() - 2),
        }
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.s.len();
        if x >= self.s[n - 1] {
            let dx = x - self.s[n - 1];
            return (self.mu[n - 1] + self.dmu[n - 1] * dx, self.dmu[n - 1]);
        }
        let i = self.locate(x);
        let h = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / h;
        let (y0, y1) = (self.mu[i], self.mu[i + 1]);
        let (m0, m1) = (self.dmu[i] * h, self.dmu[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value =
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let slope = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, slope)
    }
}

impl GrowthModel {
    pub fn monod(mu_max: f64, ks: f64) -> Self {
        GrowthModel::Monod { mu_max, ks }
    }

    /// μ(s). Negative arguments are clamped to zero.
    pub fn mu(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            GrowthModel::Monod { mu_max, ks } => mu_max * s / (ks + s),
            GrowthModel::Tabulated(t) => t.eval(s).0,
            GrowthModel::Custom { mu, .. } => mu(s),
        }
    }

    /// μ′(s) for s ≥ 0.
    pub fn mu_prime(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            GrowthModel::Monod { mu_max, ks } => mu_max * ks / ((ks + s) * (ks + s)),
            GrowthModel::Tabulated(t) => t.eval(s).1,
            GrowthModel::Custom { mu_prime, .. } => mu_prime(s),
        }
    }

    /// Checks μ(0) = 0, μ′ > 0 and chord-slope concavity on a probe grid over
    /// `[0, s_max]`.
    pub fn validate(&self, s_max: f64) -> Result<()> {
        if let GrowthModel::Monod { mu_max, ks } = self {
            if !(*mu_max > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "growth.mu_max",
                    value: *mu_max,
                });
            }
            if !(*ks > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "growth.ks",
                    value: *ks,
                });
            }
        }
        let mu0 = self.mu(0.0);
        if mu0 != 0.0 {
            return Err(Error::InvalidParameter {
                name: "mu(0)",
                value: mu0,
            });
        }
        const PROBES: usize = 200;
        let mut prev_slope = f64::INFINITY;
        let mut prev = (0.0, mu0);
        for k in 0..=PROBES {
            let s = s_max * k as f64 / PROBES as f64;
            let dmu = self.mu_prime(s);
            if !(dmu > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "mu'(s) at probe",
                    value: s,
                });
            }
            if k > 0 {
                let m = self.mu(s);
                let slope = (m - prev.1) / (s - prev.0);
                if slope > prev_slope * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::InvalidParameter {
                        name: "mu concavity at probe",
                        value: s,
                    });
                }
                prev_slope = slope;
                prev = (s, m);
            }
        }
        Ok(())
    }

    /// β(σ, s) = μ(s)(σ − s): removal rate at setpoint `sr_star`.
    pub fn beta(&self, sigma: f64, sr_star: f64) -> f64 {
        self.mu(sr_star) * (sigma - sr_star)
    }

    /// Optimal setpoint ŝ(σ) ∈ (0, σ), the root of μ(s) − μ′(s)(σ − s).
    pub fn shat(&self, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
            });
        }
        const EPS: f64 = 1e-12;
        let residual = |s: f64| self.mu(s) - self.mu_prime(s) * (sigma - s);
        numeric::bracketed_root(
            residual,
            EPS * sigma,
            sigma - EPS * sigma,
            4.0 * f64::EPSILON * sigma,
            300,
        )
        .ok_or(Error::NumericalFailure {
            what: "shat root-finding",
            at: sigma,
        })
    }

    /// ŝ(σ), extended by 0 at σ ≤ 0 where every setpoint is inert.
    pub(crate) fn shat_or_zero(&self, sigma: f64) -> Result<f64> {
        if sigma > 0.0 {
            self.shat(sigma)
        } else {
            Ok(0.0)
        }
    }

    /// γ(σ) = max over s of β(σ, s).
    pub fn gamma(&self, sigma: f64) -> Result<f64> {
        let s = self.shat(sigma)?;
        Ok(self.beta(sigma, s))
    }

    /// γ′(σ) = μ(ŝ(σ)).
    pub fn gamma_prime(&self, sigma: f64) -> Result<f64> {
        Ok(self.mu(self.shat(sigma)?))
    }
}

/// T(σ) = max(0, ∫_{s̄}^{σ} dξ / γ(ξ)): the time to bring a homogeneous
/// resource from σ down to the threshold along the singular arc.
#[derive(Debug, Clone, Copy)]
pub struct TimeFunction<'a> {
    pub growth: &'a GrowthModel,
    pub s_bar: f64,
    pub rel_tol: f64,
}

impl<'a> TimeFunction<'a> {
    pub fn new(growth: &'a GrowthModel, s_bar: f64) -> Self {
        Self {
            growth,
            s_bar,
            rel_tol: 1e-11,
        }
    }

    pub fn eval(&self, sigma: f64) -> Result<f64> {
        if sigma <= self.s_bar {
            return Ok(0.0);
        }
        self.integral(self.s_bar, sigma)
    }

    /// ∫_{lo}^{hi} dξ / γ(ξ) for 0 < lo ≤ hi.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        let mut failure = None;
        let value = numeric::integrate(
            |xi| match self.growth.gamma(xi) {
                Ok(g) => 1.0 / g,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            self.rel_tol,
            0.0,
            4000,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        value.ok_or(Error::NumericalFailure {
            what: "time quadrature",
            at: hi,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{log, sqrt};

    fn monod() -> GrowthModel {
        GrowthModel::monod(1.0, 1.0)
    }

    // Monod(1,1) closed forms, test-only.
    fn shat_exact(sigma: f64) -> f64 {
        sqrt(1.0 + sigma) - 1.0
    }
    fn t_antiderivative(sigma: f64) -> f64 {
        let u = sqrt(1.0 + sigma);
        2.0 * (log(u - 1.0) - 1.0 / (u - 1.0))
    }

    /// dense grid search maximizing β, independent of the root finder
    fn gamma_grid(g: &GrowthModel, sigma: f64) -> f64 {
        let n = 200_000;
        (1..n)
            .map(|k| g.beta(sigma, sigma * k as f64 / n as f64))
            .fold(f64::MIN, f64::max)
    }

    #[test]
    fn shat_monod_examples() {
        let g = monod();
        assert!((g.shat(4.0).unwrap() - (sqrt(5.0) - 1.0)).abs() < 1e-12);
        assert!((g.shat(1.0).unwrap() - (sqrt(2.0) - 1.0)).abs() < 1e-12);
        let tiny = g.shat(1e-6).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-6);
    }

    #[test]
    fn shat_rejects_nonpositive() {
        assert!(matches!(monod().shat(0.0), Err(Error::InvalidParameter { .. })));
        assert!(monod().shat(-1.0).is_err());
    }

    #[test]
    fn gamma_monod_examples_and_grid_oracle() {
        let g = monod();
        let g4 = g.gamma(4.0).unwrap();
        assert!((g4 - (sqrt(5.0) - 1.0).powi(2)).abs() < 1e-12);
        assert!((g4 - 1.527_864_045).abs() < 1e-8);
        let g1 = g.gamma(1.0).unwrap();
        assert!((g1 - 0.171_572_875).abs() < 1e-8);
        for sigma in [0.3, 1.0, 4.0] {
            assert!((g.gamma(sigma).unwrap() - gamma_grid(&g, sigma)).abs() < 1e-9);
        }
    }

    #[test]
    fn gamma_dominates_beta() {
        let g = monod();
        let sigma = 2.7;
        let gam = g.gamma(sigma).unwrap();
        for k in 1..100 {
            let s = sigma * k as f64 / 100.0;
            assert!(gam >= g.beta(sigma, s));
        }
    }

    #[test]
    fn gamma_prime_closed_form_and_finite_difference() {
        let g = monod();
        let gp = g.gamma_prime(4.0).unwrap();
        assert!((gp - (1.0 - 1.0 / sqrt(5.0))).abs() < 1e-12);
        let h = 1e-5;
        let fd = (g.gamma(2.0 + h).unwrap() - g.gamma(2.0 - h).unwrap()) / (2.0 * h);
        assert!((g.gamma_prime(2.0).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn time_function_examples() {
        let g = monod();
        let tf = TimeFunction::new(&g, 1.0);
        assert_eq!(tf.eval(1.0).unwrap(), 0.0);
        assert_eq!(tf.eval(0.3).unwrap(), 0.0);
        let exact4 = t_antiderivative(4.0) - t_antiderivative(1.0);
        assert!((exact4 - 5.397_011_021).abs() < 1e-8);
        assert!((tf.eval(4.0).unwrap() - exact4).abs() < 1e-9 * exact4);
        let exact = t_antiderivative(2.25) - t_antiderivative(1.0);
        assert!((exact - 3.660_458_158).abs() < 1e-8);
        assert!((tf.eval(2.25).unwrap() - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn time_function_concave_above_threshold() {
        let g = monod();
        let tf = TimeFunction::new(&g, 1.0);
        let h = 0.05;
        let mut s = 1.0 + 0.1;
        while s + h < 10.0 {
            let d2 = tf.eval(s + h).unwrap() - 2.0 * tf.eval(s).unwrap() + tf.eval(s - h).unwrap();
            assert!(d2 < 0.0, "second difference {d2} at {s}");
            s += 0.37;
        }
    }

    #[test]
    fn monod_oracle_identity_on_grid() {
        let g = monod();
        for k in 1..=1000 {
            let sigma = 10.0 * k as f64 / 1000.0;
            let exact = (sqrt(1.0 + sigma) - 1.0).powi(2);
            assert!((g.gamma(sigma).unwrap() - exact).abs() < 1e-9);
            let s = g.shat(sigma).unwrap();
            assert!((s - shat_exact(sigma)).abs() < 1e-12 * sigma.max(1.0));
            let res = g.mu(s) - g.mu_prime(s) * (sigma - s);
            assert!(res.abs() <= 1e-10 * g.mu(sigma));
        }
    }

    #[test]
    fn validation() {
        assert!(monod().validate(20.0).is_ok());
        assert!(GrowthModel::monod(-1.0, 1.0).validate(1.0).is_err());
        // Haldane-type inhibition: not increasing
        let haldane = GrowthModel::Custom {
            mu: |s| s / (1.0 + s + s * s),
            mu_prime: |s| (1.0 - s * s) / ((1.0 + s + s * s) * (1.0 + s + s * s)),
        };
        assert!(haldane.validate(5.0).is_err());
        let offset = GrowthModel::Custom {
            mu: |s| 0.1 + s,
            mu_prime: |_| 1.0,
        };
        assert!(offset.validate(5.0).is_err());
    }

    #[test]
    fn tabulated_reproduces_monod() {
        let g = monod();
        let nodes: Vec<f64> = (0..=400).map(|k| 0.05 * k as f64).collect();
        let table = HermiteTable::new(
            nodes.clone(),
            nodes.iter().map(|&s| g.mu(s)).collect(),
            nodes.iter().map(|&s| g.mu_prime(s)).collect(),
        )
        .unwrap();
        let tab = GrowthModel::Tabulated(table);
        assert!(tab.validate(20.0).is_ok());
        for sigma in [0.5, 1.0, 4.0, 9.0] {
            let rel = (tab.gamma(sigma).unwrap() - g.gamma(sigma).unwrap()).abs() / g.gamma(sigma).unwrap();
            assert!(rel < 1e-5, "sigma {sigma}: {rel}");
        }
        // derivative is the exact derivative of the interpolant
        let h = 1e-6;
        for x in [0.013, 0.77, 3.33, 25.0] {
            let fd = (tab.mu(x + h) - tab.mu(x - h)) / (2.0 * h);
            assert!((fd - tab.mu_prime(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn table_rejects_bad_input() {
        assert!(HermiteTable::new(alloc::vec![0.0, 1.0], alloc::vec![0.0], alloc::vec![1.0, 0.5]).is_err());
        assert!(HermiteTable::new(alloc::vec![0.5, 1.0], alloc::vec![0.0, 1.0], alloc::vec![1.0, 0.5]).is_err());
        assert!(HermiteTable::new(alloc::vec![0.0, 0.0], alloc::vec![0.0, 1.0], alloc::vec![1.0, 0.5]).is_err());
    }
}
