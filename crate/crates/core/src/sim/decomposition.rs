use serde::{Deserialize, Serialize};

use super::kyle::SimSession;
use crate::error::{invalid, Result};
use crate::stats::compensated_sum;

/// Path-level split of order-flow covariation into the noise traders' loss
/// and the informed traders' own price-impact cost, plus P&L by party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageDecomposition {
    /// `sum dP_n dY_n`, the observable flow covariation.
    pub omega_flow: f64,
    /// `sum dP_n dX_n`.
    pub leakage: f64,
    /// `sum dP_n dZ_n`, the noise traders' slippage loss.
    pub noise_loss: f64,
    /// `sum (v - P_n) dX_n`.
    pub informed_profit: f64,
    /// `sum (v - P_n) dZ_n`, noise traders' total P&L at the batch price.
    pub noise_pnl: f64,
    /// `sum (P_n - v) dY_n`, the market maker's P&L.
    pub mm_profit: f64,
}

impl LeakageDecomposition {
    /// `|omega_flow - leakage - noise_loss|` relative to the largest term.
    pub fn identity_error(&self) -> f64 {
        let scale = self.omega_flow.abs().max(self.leakage.abs()).max(self.noise_loss.abs()).max(f64::MIN_POSITIVE);
        (self.omega_flow - self.leakage - self.noise_loss).abs() / scale
    }

    /// Sum of the three parties' P&L relative to the largest of them.
    pub fn zero_sum_error(&self) -> f64 {
        let scale =
            self.informed_profit.abs().max(self.noise_pnl.abs()).max(self.mm_profit.abs()).max(f64::MIN_POSITIVE);
        (self.informed_profit + self.noise_pnl + self.mm_profit).abs() / scale
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

pub fn leakage_decomposition(session: &SimSession) -> Result<LeakageDecomposition> {
    session.validate()?;
    let dp = session.dp();
    let dx = session.dx();
    let dz = session.dz();
    let dy = session.dy();
    let gap: Vec<f64> = session.p[1..].iter().map(|p| session.v - p).collect();
    Ok(LeakageDecomposition {
        omega_flow: dot(&dp, &dy),
        leakage: dot(&dp, &dx),
        noise_loss: dot(&dp, &dz),
        informed_profit: dot(&gap, &dx),
        noise_pnl: dot(&gap, &dz),
        mm_profit: -dot(&gap, &dy),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    /// Bar length as a multiple of the simulation step.
    pub multiple: usize,
    /// Bar length in years.
    pub h: f64,
    pub omega_flow: f64,
}

/// Re-aggregates the session onto bars of `multiple` steps and recomputes
/// `sum dP dY` for each requested multiple.
pub fn frequency_sweep(session: &SimSession, multiples: &[usize]) -> Result<Vec<FrequencyPoint>> {
    session.validate()?;
    let n = session.n_steps();
    multiples
        .iter()
        .map(|&k| {
            if k == 0 || !n.is_multiple_of(k) {
                return Err(invalid(format!("bar multiple {k} does not divide {n} steps")));
            }
            let coarse =
                |levels: &[f64]| -> Vec<f64> { (1..=n / k).map(|m| levels[m * k] - levels[(m - 1) * k]).collect() };
            let dp = coarse(&session.p);
            let dy = coarse(&session.y);
            Ok(FrequencyPoint { multiple: k, h: k as f64 * session.dt, omega_flow: dot(&dp, &dy) })
        })
        .collect()
}

/// Per-path pieces of the risk-adjusted value of information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdfPathTerms {
    /// `sum M_n dP_n dZ_n`.
    pub omega_m: f64,
    /// `sum dP_n dY_n`.
    pub omega_flow: f64,
    /// `sum M_n dP_n dY_n`.
    pub weighted_flow: f64,
}

/// Weights each step's noise loss by the discount factor `sdf[n]`.
///
/// The covariance part of the bound needs the cross-path distribution and
/// is assembled by [`super::montecarlo::sdf_bound_check`].
pub fn sdf_adjusted_omega(session: &SimSession, sdf: &[f64]) -> Result<SdfPathTerms> {
    session.validate()?;
    if sdf.len() != session.n_steps() {
        return Err(invalid(format!(
            "discount path has {} entries, session has {} steps",
            sdf.len(),
            session.n_steps()
        )));
    }
    if let Some(bad) = sdf.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(invalid(format!("discount factors must be positive, got {bad}")));
    }
    let dp = session.dp();
    let dz = session.dz();
    let dy = session.dy();
    Ok(SdfPathTerms {
        omega_m: compensated_sum((0..dp.len()).map(|i| sdf[i] * dp[i] * dz[i])),
        omega_flow: dot(&dp, &dy),
        weighted_flow: compensated_sum((0..dp.len()).map(|i| sdf[i] * dp[i] * dy[i])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::kyle::simulate_kyle;
    use crate::sim::params::SimParams;

    fn session() -> SimSession {
        let p = SimParams::kyle(1.0, 1.0).with_steps(60).with_paths(4).with_sigma_w(0.4);
        simulate_kyle(&p, 1).unwrap()
    }

    #[test]
    fn identity_and_zero_sum_hold() {
        let d = leakage_decomposition(&session()).unwrap();
        assert!(d.identity_error() < 1e-10);
        assert!(d.zero_sum_error() < 1e-10);
    }

    #[test]
    fn no_informed_flow_means_no_leakage() {
        let mut p = SimParams::kyle(1.0, 1.0).with_steps(30).with_paths(1);
        p.informed = false;
        let d = leakage_decomposition(&simulate_kyle(&p, 0).unwrap()).unwrap();
        assert_eq!(d.leakage, 0.0);
        assert_eq!(d.omega_flow, d.noise_loss);
    }

    #[test]
    fn unit_multiple_matches_decomposition() {
        let s = session();
        let d = leakage_decomposition(&s).unwrap();
        let f = frequency_sweep(&s, &[1]).unwrap();
        assert_eq!(f[0].omega_flow, d.omega_flow);
        assert_eq!(f[0].h, s.dt);
    }

    #[test]
    fn constant_increments_closed_form() {
        // dP = c, dY = d on every step; k-step bars give (N/k)(kc)(kd).
        let n = 12;
        let (c, d) = (0.5, 3.0);
        let s = SimSession {
            path_index: 0,
            v: 0.0,
            p: (0..=n).map(|i| i as f64 * c).collect(),
            x: vec![0.0; n + 1],
            z: (0..=n).map(|i| i as f64 * d).collect(),
            y: (0..=n).map(|i| i as f64 * d).collect(),
            lambda: vec![c / d; n],
            dt: 1.0 / n as f64,
        };
        for (pt, k) in frequency_sweep(&s, &[1, 2, 3, 4, 6, 12]).unwrap().iter().zip([1, 2, 3, 4, 6, 12]) {
            let expected = k as f64 * n as f64 * c * d;
            assert!((pt.omega_flow - expected).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn non_divisor_multiple_is_rejected() {
        assert!(frequency_sweep(&session(), &[7]).is_err());
        assert!(frequency_sweep(&session(), &[0]).is_err());
    }

    #[test]
    fn sdf_weights_scale_noise_loss() {
        let s = session();
        let d = leakage_decomposition(&s).unwrap();
        let n = s.n_steps();
        let one = sdf_adjusted_omega(&s, &vec![1.0; n]).unwrap();
        assert_eq!(one.omega_m, d.noise_loss);
        assert_eq!(one.weighted_flow, d.omega_flow);
        let half = sdf_adjusted_omega(&s, &vec![0.5; n]).unwrap();
        assert!((half.omega_m - 0.5 * d.noise_loss).abs() < 1e-14);
    }

    #[test]
    fn sdf_rejects_non_positive_factor() {
        let s = session();
        let mut m = vec![1.0; s.n_steps()];
        m[3] = 0.0;
        assert!(sdf_adjusted_omega(&s, &m).is_err());
        assert!(sdf_adjusted_omega(&s, &m[1..]).is_err());
    }
}
