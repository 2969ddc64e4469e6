use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::params::SimParams;
use crate::error::{invalid, Result};

/// One simulated trading session.
///
/// Paths hold `n_steps + 1` levels starting at time zero. Increments are
/// always derived from the levels, so every consumer sees the same numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSession {
    pub path_index: usize,
    /// Realised fundamental value.
    pub v: f64,
    pub p: Vec<f64>,
    /// Cumulative informed flow.
    pub x: Vec<f64>,
    /// Cumulative noise flow.
    pub z: Vec<f64>,
    /// Cumulative total flow, `x + z` at every level.
    pub y: Vec<f64>,
    /// Price impact applied in each step.
    pub lambda: Vec<f64>,
    pub dt: f64,
}

fn diff(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| w[1] - w[0]).collect()
}

impl SimSession {
    pub fn n_steps(&self) -> usize {
        self.lambda.len()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    pub fn dp(&self) -> Vec<f64> {
        diff(&self.p)
    }

    pub fn dx(&self) -> Vec<f64> {
        diff(&self.x)
    }

    pub fn dz(&self) -> Vec<f64> {
        diff(&self.z)
    }

    pub fn dy(&self) -> Vec<f64> {
        diff(&self.y)
    }

    /// Checks array lengths and the `y = x + z` identity.
    pub fn validate(&self) -> Result<()> {
        let n = self.lambda.len();
        if n == 0 {
            return Err(invalid("session has no steps"));
        }
        for (name, v) in [("p", &self.p), ("x", &self.x), ("z", &self.z), ("y", &self.y)] {
            if v.len() != n + 1 {
                return Err(invalid(format!("{name} has {} levels, expected {}", v.len(), n + 1)));
            }
        }
        if !(self.dt > 0.0) {
            return Err(invalid("session dt must be positive"));
        }
        Ok(())
    }
}

/// Deterministic RNG stream for one path. Streams are keyed by path index
/// so any parallel schedule reproduces the same draws.
pub(crate) fn path_rng(seed: u64, path_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index as u64);
    rng
}

/// Simulates path `path_index` of the discretised continuous Kyle auction.
///
/// The fundamental is drawn as `p0 + sigma_v sqrt(T) xi`. In step `n` the
/// informed trader buys `theta_n dt` with
/// `theta_n dt = q_n (v - P_{n-1}) / (lambda R_{n-1})`, where `q_n` is the
/// step's noise variance and `R_{n-1}` the noise variance still to come
/// (this is `(v - P)/(lambda (T - t)) dt` for constant noise volatility).
/// Noise trades `sqrt(q_n) xi_n` and the batch clears at
/// `P_n = P_{n-1} + lambda dY_n + sigma_w sqrt(dt) eta_n`.
pub fn simulate_kyle(params: &SimParams, path_index: usize) -> Result<SimSession> {
    params.validate()?;
    if path_index >= params.n_paths {
        return Err(invalid(format!("path index {path_index} out of range for {} paths", params.n_paths)));
    }
    let n = params.n_steps;
    let dt = params.dt();
    let lambda = params.lambda();
    let q = params.step_variances();
    let mut remaining = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        acc += q[i];
        remaining[i] = acc;
    }
    let public_scale = params.sigma_w * dt.sqrt();

    let mut rng = path_rng(params.seed, path_index);
    let xi0: f64 = rng.sample(StandardNormal);
    let v = params.p0 + params.sigma_v * params.horizon.sqrt() * xi0;

    let mut p = Vec::with_capacity(n + 1);
    let mut x = Vec::with_capacity(n + 1);
    let mut z = Vec::with_capacity(n + 1);
    let mut y = Vec::with_capacity(n + 1);
    p.push(params.p0);
    x.push(0.0);
    z.push(0.0);
    y.push(0.0);

    for step in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        let eta: f64 = rng.sample(StandardNormal);
        let p_prev = p[step];
        let gap = v - p_prev;
        let mut dx = if params.informed { q[step] / remaining[step] * gap / lambda } else { 0.0 };
        if params.informed && step + 1 == n && (lambda * dx).abs() > gap.abs() {
            dx = gap / lambda;
        }
        let dz = q[step].sqrt() * xi;
        let dp = lambda * (dx + dz) + public_scale * eta;
        let x_next = x[step] + dx;
        let z_next = z[step] + dz;
        x.push(x_next);
        z.push(z_next);
        y.push(x_next + z_next);
        p.push(p_prev + dp);
    }

    Ok(SimSession { path_index, v, p, x, z, y, lambda: vec![lambda; n], dt })
}
