use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Noise-trading volatility in shares per square-root year.
///
/// The step variant is a deterministic step function of time: `levels[i]`
/// applies on `[breaks[i-1], breaks[i])` with `breaks` strictly increasing
/// inside `(0, horizon)`. It is sampled at the start of each simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseVolatility {
    Constant(f64),
    Steps { breaks: Vec<f64>, levels: Vec<f64> },
}

impl NoiseVolatility {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            NoiseVolatility::Constant(s) => *s,
            NoiseVolatility::Steps { breaks, levels } => {
                let idx = breaks.iter().take_while(|b| **b <= t).count();
                levels[idx]
            }
        }
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            NoiseVolatility::Constant(s) => {
                if !(s.is_finite() && *s > 0.0) {
                    return Err(invalid(format!("sigma_z must be positive, got {s}")));
                }
            }
            NoiseVolatility::Steps { breaks, levels } => {
                if levels.len() != breaks.len() + 1 {
                    return Err(invalid("sigma_z steps need one more level than breaks"));
                }
                if let Some(bad) = levels.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
                    return Err(invalid(format!("sigma_z levels must be positive, got {bad}")));
                }
                let ordered = breaks.windows(2).all(|w| w[0] < w[1]);
                let inside = breaks.iter().all(|b| *b > 0.0 && *b < horizon);
                if !ordered || !inside {
                    return Err(invalid("sigma_z breaks must increase strictly inside (0, T)"));
                }
            }
        }
        Ok(())
    }
}

/// Parameters of a simulated Kyle-Back market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Fundamental-value volatility, price units per square-root year.
    pub sigma_v: f64,
    pub sigma_z: NoiseVolatility,
    /// Volatility of public, order-flow-orthogonal price news.
    pub sigma_w: f64,
    pub p0: f64,
    /// Session length in years.
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// When false the informed trader is absent and only noise flow arrives.
    pub informed: bool,
    /// Exogenous price impact replacing the equilibrium one.
    pub impact_override: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            sigma_v: 1.0,
            sigma_z: NoiseVolatility::Constant(1.0),
            sigma_w: 0.0,
            p0: 100.0,
            horizon: 1.0,
            n_steps: 390,
            n_paths: 20_000,
            seed: 42,
            informed: true,
            impact_override: None,
        }
    }
}

impl SimParams {
    pub fn kyle(sigma_v: f64, sigma_z: f64) -> Self {
        Self { sigma_v, sigma_z: NoiseVolatility::Constant(sigma_z), ..Self::default() }
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sigma_w(mut self, sigma_w: f64) -> Self {
        self.sigma_w = sigma_w;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_v.is_finite() && self.sigma_v > 0.0) {
            return Err(invalid(format!("sigma_v must be positive, got {}", self.sigma_v)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        self.sigma_z.validate(self.horizon)?;
        if !(self.sigma_w.is_finite() && self.sigma_w >= 0.0) {
            return Err(invalid(format!("sigma_w must be non-negative, got {}", self.sigma_w)));
        }
        if !self.p0.is_finite() {
            return Err(invalid("p0 must be finite"));
        }
        if self.n_steps < 2 {
            return Err(invalid(format!("n_steps must be at least 2, got {}", self.n_steps)));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths must be positive"));
        }
        if let Some(l) = self.impact_override {
            if !(l.is_finite() && l > 0.0) {
                return Err(invalid(format!("impact override must be positive, got {l}")));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Noise variance delivered in each step, `sigma_z(t_{n-1})^2 dt`.
    pub fn step_variances(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_steps)
            .map(|n| {
                let s = self.sigma_z.at(n as f64 * dt);
                s * s * dt
            })
            .collect()
    }

    /// Equilibrium price impact. Constant noise volatility gives
    /// `sigma_v / sigma_z`; a step function gives
    /// `sigma_v sqrt(T) / sqrt(integrated noise variance)`.
    pub fn equilibrium_lambda(&self) -> f64 {
        match &self.sigma_z {
            NoiseVolatility::Constant(s) => self.sigma_v / s,
            NoiseVolatility::Steps { .. } => {
                let total: f64 = self.step_variances().iter().sum();
                self.sigma_v * self.horizon.sqrt() / total.sqrt()
            }
        }
    }

    pub fn lambda(&self) -> f64 {
        self.impact_override.unwrap_or_else(|| self.equilibrium_lambda())
    }

    /// Ground-truth value of information over the session,
    /// `lambda * integrated noise variance` (`sigma_v sigma_z T` for
    /// constant noise volatility in equilibrium).
    pub fn oracle_omega(&self) -> f64 {
        let total: f64 = match &self.sigma_z {
            NoiseVolatility::Constant(s) => s * s * self.horizon,
            NoiseVolatility::Steps { .. } => self.step_variances().iter().sum(),
        };
        self.lambda() * total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(SimParams::kyle(0.0, 1.0).validate().is_err());
        assert!(SimParams::kyle(1.0, -1.0).validate().is_err());
        assert!(SimParams::kyle(1.0, 1.0).with_steps(1).validate().is_err());
        assert!(SimParams::kyle(1.0, 1.0).with_horizon(0.0).validate().is_err());
        assert!(SimParams::kyle(1.0, 1.0).with_sigma_w(-0.1).validate().is_err());
        let mut p = SimParams::kyle(1.0, 1.0);
        p.sigma_z = NoiseVolatility::Steps { breaks: vec![0.5], levels: vec![1.0] };
        assert!(p.validate().is_err());
        p.sigma_z = NoiseVolatility::Steps { breaks: vec![1.5], levels: vec![1.0, 2.0] };
        assert!(p.validate().is_err());
    }

    #[test]
    fn kyle_lambda_and_oracle() {
        let p = SimParams::kyle(2.0, 1.0);
        assert_eq!(p.lambda(), 2.0);
        assert_eq!(p.oracle_omega(), 2.0);
        let p = SimParams::kyle(1.5, 0.5).with_horizon(0.25);
        assert!((p.oracle_omega() - 1.5 * 0.5 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn step_volatility_lambda_matches_integrated_variance() {
        let mut p = SimParams::kyle(1.0, 1.0).with_steps(4);
        p.sigma_z = NoiseVolatility::Steps { breaks: vec![0.5], levels: vec![1.0, 2.0] };
        // integrated variance = 0.5*1 + 0.5*4 = 2.5
        assert_eq!(p.step_variances(), vec![0.25, 0.25, 1.0, 1.0]);
        assert!((p.lambda() - 1.0 / 2.5_f64.sqrt()).abs() < 1e-15);
        assert!((p.oracle_omega() - 2.5_f64.sqrt()).abs() < 1e-12);
    }
}
