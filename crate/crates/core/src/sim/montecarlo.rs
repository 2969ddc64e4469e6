//! Monte Carlo aggregation over independent simulated sessions.
//!
//! Paths are generated in parallel but every reduction runs over results
//! collected in path order (or over fixed-size chunks combined in order),
//! so the output does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decomposition::{frequency_sweep, leakage_decomposition, sdf_adjusted_omega, LeakageDecomposition};
use super::kyle::{simulate_kyle, SimSession};
use super::params::SimParams;
use crate::bounds::entropy_to_cv;
use crate::error::{invalid, Result};
use crate::stats::{correlation, MeanSe};

const CHUNK: usize = 256;
const SDF_STREAM_SALT: u64 = 0x5DF0_5DF0_5DF0_5DF0;

/// Simulates every path and applies `f`, returning results in path order.
pub fn run_paths<R, F>(params: &SimParams, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&SimSession) -> Result<R> + Sync,
{
    params.validate()?;
    (0..params.n_paths).into_par_iter().map(|i| simulate_kyle(params, i).and_then(|s| f(&s))).collect()
}

/// Oracle and invariant statistics of a batch of sessions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KyleSummary {
    pub n_paths: usize,
    pub n_steps: usize,
    pub lambda: f64,
    /// Ground truth `lambda * integrated noise variance`.
    pub oracle_omega: f64,
    pub noise_loss: MeanSe,
    pub omega_flow: MeanSe,
    pub leakage: MeanSe,
    pub informed_profit: MeanSe,
    pub noise_pnl: MeanSe,
    pub mm_profit: MeanSe,
    /// No-intercept slope of dP on dY, per path.
    pub lambda_levels: MeanSe,
    /// Per-path correlation of dP with dY.
    pub flow_correlation: MeanSe,
    pub terminal_gap: MeanSe,
    pub max_identity_error: f64,
    pub max_zero_sum_error: f64,
}

impl KyleSummary {
    pub fn mm_t_stat(&self) -> f64 {
        self.mm_profit.t_stat(0.0)
    }
}

struct PathStats {
    decomposition: LeakageDecomposition,
    lambda_levels: f64,
    correlation: f64,
    terminal_gap: f64,
}

fn no_intercept_slope(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

pub fn kyle_summary(params: &SimParams) -> Result<KyleSummary> {
    let stats = run_paths(params, |s| {
        let dp = s.dp();
        let dy = s.dy();
        Ok(PathStats {
            decomposition: leakage_decomposition(s)?,
            lambda_levels: no_intercept_slope(&dy, &dp),
            correlation: correlation(&dp, &dy),
            terminal_gap: (s.p[s.n_steps()] - s.v).abs(),
        })
    })?;
    let col = |f: &dyn Fn(&PathStats) -> f64| -> Vec<f64> { stats.iter().map(f).collect() };
    let ms = |f: &dyn Fn(&PathStats) -> f64| MeanSe::from_samples(&col(f));
    Ok(KyleSummary {
        n_paths: params.n_paths,
        n_steps: params.n_steps,
        lambda: params.lambda(),
        oracle_omega: params.oracle_omega(),
        noise_loss: ms(&|p| p.decomposition.noise_loss),
        omega_flow: ms(&|p| p.decomposition.omega_flow),
        leakage: ms(&|p| p.decomposition.leakage),
        informed_profit: ms(&|p| p.decomposition.informed_profit),
        noise_pnl: ms(&|p| p.decomposition.noise_pnl),
        mm_profit: ms(&|p| p.decomposition.mm_profit),
        lambda_levels: ms(&|p| p.lambda_levels),
        flow_correlation: ms(&|p| p.correlation),
        terminal_gap: ms(&|p| p.terminal_gap),
        max_identity_error: col(&|p| p.decomposition.identity_error()).into_iter().fold(0.0, f64::max),
        max_zero_sum_error: col(&|p| p.decomposition.zero_sum_error()).into_iter().fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub multiple: usize,
    pub h: f64,
    pub omega_flow: MeanSe,
    /// Paired per-path difference `omega_flow(h) - noise_loss`.
    pub excess_over_noise_loss: MeanSe,
    /// Paired per-path difference against the previous multiple in the list.
    pub change_from_previous: Option<MeanSe>,
}

/// Mean flow covariation at each bar multiple, with paired differences.
pub fn frequency_sweep_mc(params: &SimParams, multiples: &[usize]) -> Result<Vec<SweepPoint>> {
    if multiples.is_empty() {
        return Err(invalid("no bar multiples requested"));
    }
    let rows = run_paths(params, |s| {
        let noise = leakage_decomposition(s)?.noise_loss;
        let pts = frequency_sweep(s, multiples)?;
        Ok((noise, pts.iter().map(|p| p.omega_flow).collect::<Vec<_>>()))
    })?;
    let dt = params.dt();
    Ok(multiples
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let om: Vec<f64> = rows.iter().map(|r| r.1[j]).collect();
            let excess: Vec<f64> = rows.iter().map(|r| r.1[j] - r.0).collect();
            let change = (j > 0).then(|| {
                let d: Vec<f64> = rows.iter().map(|r| r.1[j] - r.1[j - 1]).collect();
                MeanSe::from_samples(&d)
            });
            SweepPoint {
                multiple: k,
                h: k as f64 * dt,
                omega_flow: MeanSe::from_samples(&om),
                excess_over_noise_loss: MeanSe::from_samples(&excess),
                change_from_previous: change,
            }
        })
        .collect())
}

/// I.i.d. lognormal discount factors with unit mean, independent of the
/// market, carrying entropy `entropy` per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalSdf {
    pub entropy: f64,
}

impl LognormalSdf {
    /// Factors for one path. Each factor's entropy is `entropy * horizon`,
    /// i.e. `log M ~ N(-L T, 2 L T)`.
    pub fn path(&self, seed: u64, path_index: usize, n_steps: usize, horizon: f64) -> Vec<f64> {
        let lt = self.entropy * horizon;
        let sd = (2.0 * lt).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SDF_STREAM_SALT);
        rng.set_stream(path_index as u64);
        (0..n_steps)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                (sd * e - lt).exp()
            })
            .collect()
    }
}

/// Monte Carlo check of the SDF bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdfCheck {
    pub entropy: f64,
    pub omega_m: MeanSe,
    pub noise_loss: MeanSe,
    pub omega_flow: MeanSe,
    /// `sum_n [mean(f_n) + cov(M_n, f_n)]`, `f_n = dP_n dY_n`, across paths.
    pub covariance_bound: f64,
    /// Per-path `omega_m - bound contribution`; its mean is
    /// `mean(omega_m) - covariance_bound`.
    pub covariance_excess: MeanSe,
    /// `mean(flow) + sd(flow) * sqrt(exp(2 L T) - 1)`.
    pub entropy_bound: f64,
}

impl SdfCheck {
    pub fn covariance_bound_holds(&self, n_se: f64) -> bool {
        self.covariance_excess.mean <= n_se * self.covariance_excess.se
    }

    pub fn entropy_bound_holds(&self, n_se: f64) -> bool {
        self.omega_m.mean <= self.entropy_bound + n_se * self.omega_m.se
    }
}

struct StepSums {
    m: Vec<f64>,
    f: Vec<f64>,
}

pub fn sdf_bound_check(params: &SimParams, sdf: LognormalSdf) -> Result<SdfCheck> {
    params.validate()?;
    if !(sdf.entropy >= 0.0) {
        return Err(invalid("entropy must be non-negative"));
    }
    let n = params.n_steps;
    let horizon = params.horizon;
    let sdf_path = |i: usize| sdf.path(params.seed, i, n, horizon);

    // Pass 1: per-step cross-path means of M and f, reduced chunk by chunk.
    let n_chunks = params.n_paths.div_ceil(CHUNK);
    let partials: Vec<StepSums> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<StepSums> {
            let mut acc = StepSums { m: vec![0.0; n], f: vec![0.0; n] };
            for i in c * CHUNK..((c + 1) * CHUNK).min(params.n_paths) {
                let s = simulate_kyle(params, i)?;
                let m = sdf_path(i);
                let dp = s.dp();
                let dy = s.dy();
                for k in 0..n {
                    acc.m[k] += m[k];
                    acc.f[k] += dp[k] * dy[k];
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut m_bar = vec![0.0; n];
    let mut f_bar = vec![0.0; n];
    for p in &partials {
        for k in 0..n {
            m_bar[k] += p.m[k];
            f_bar[k] += p.f[k];
        }
    }
    let count = params.n_paths as f64;
    m_bar.iter_mut().for_each(|v| *v /= count);
    f_bar.iter_mut().for_each(|v| *v /= count);

    // Pass 2: regenerate each path and form its bound contribution.
    let rows: Vec<[f64; 4]> = (0..params.n_paths)
        .into_par_iter()
        .map(|i| -> Result<[f64; 4]> {
            let s = simulate_kyle(params, i)?;
            let m = sdf_path(i);
            let terms = sdf_adjusted_omega(&s, &m)?;
            let dp = s.dp();
            let dy = s.dy();
            let mut b = 0.0;
            for k in 0..n {
                let f = dp[k] * dy[k];
                b += f + (m[k] - m_bar[k]) * (f - f_bar[k]);
            }
            let noise = leakage_decomposition(&s)?.noise_loss;
            Ok([terms.omega_m, b, noise, terms.omega_flow])
        })
        .collect::<Result<_>>()?;

    let col = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let omega_m = MeanSe::from_samples(&col(0));
    let bound = MeanSe::from_samples(&col(1));
    let excess: Vec<f64> = rows.iter().map(|r| r[0] - r[1]).collect();
    let flow = MeanSe::from_samples(&col(3));
    let cv = entropy_to_cv(sdf.entropy * horizon)?;
    Ok(SdfCheck {
        entropy: sdf.entropy,
        omega_m,
        noise_loss: MeanSe::from_samples(&col(2)),
        omega_flow: flow,
        covariance_bound: bound.mean,
        covariance_excess: MeanSe::from_samples(&excess),
        entropy_bound: flow.mean + flow.sd() * cv,
    })
}
