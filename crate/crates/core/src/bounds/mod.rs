//! Risk-adjustment bound and the fee comparison arithmetic.
//!
//! Public functions take and return percentages of market capitalisation.

mod fees;
mod report;

pub use fees::{fee_gap, fee_table, summarize_fees, FeeRow, FeeSourceSummary};
pub use report::{puzzle_report, PuzzleInputs, PuzzleReport};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Stochastic discount factor summarised by its entropy
/// `L(M) = log E[M] - E[log M]` per year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdfSpec {
    pub entropy: f64,
    pub mean_m: f64,
}

impl SdfSpec {
    pub fn from_entropy(entropy: f64) -> Result<Self> {
        if !(entropy.is_finite() && entropy >= 0.0) {
            return Err(invalid(format!("entropy must be non-negative, got {entropy}")));
        }
        Ok(Self { entropy, mean_m: 1.0 })
    }

    /// Lognormal SDF with log-volatility `sigma_log_m` per square-root year.
    pub fn from_log_vol(sigma_log_m: f64) -> Result<Self> {
        if !(sigma_log_m.is_finite() && sigma_log_m >= 0.0) {
            return Err(invalid("log volatility must be non-negative"));
        }
        Self::from_entropy(0.5 * sigma_log_m * sigma_log_m)
    }

    pub fn with_mean(mut self, mean_m: f64) -> Result<Self> {
        if !(mean_m > 0.0 && mean_m <= 1.0) {
            return Err(invalid(format!("E[M] must lie in (0, 1], got {mean_m}")));
        }
        self.mean_m = mean_m;
        Ok(self)
    }

    pub fn coefficient_of_variation(&self) -> f64 {
        (2.0 * self.entropy).exp_m1().sqrt()
    }
}

/// Coefficient of variation of a lognormal SDF with entropy `l`:
/// `sqrt(exp(2 l) - 1)`.
pub fn entropy_to_cv(l: f64) -> Result<f64> {
    if !(l.is_finite() && l >= 0.0) {
        return Err(invalid(format!("entropy must be non-negative, got {l}")));
    }
    Ok((2.0 * l).exp_m1().sqrt())
}

/// Inverse of [`entropy_to_cv`]: `0.5 log(1 + cv^2)`.
pub fn cv_to_entropy(cv: f64) -> Result<f64> {
    if !(cv.is_finite() && cv >= 0.0) {
        return Err(invalid(format!("coefficient of variation must be non-negative, got {cv}")));
    }
    Ok(0.5 * (cv * cv).ln_1p())
}

fn non_negative(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be non-negative, got {v}")))
    }
}

/// Upper bound on the risk-adjusted value of information,
/// `omega + sigma(omega) * sqrt(exp(2L) - 1)`, in percent of market cap.
pub fn risk_adjusted_bound(omega_pct: f64, sigma_omega_pct: f64, entropy: f64) -> Result<f64> {
    let omega = non_negative("omega", omega_pct)? / 100.0;
    let sigma = non_negative("sigma(omega)", sigma_omega_pct)? / 100.0;
    Ok(100.0 * (omega + sigma * entropy_to_cv(entropy)?))
}

/// Yearly value captured by being informed only on high-value days.
pub fn concentration_value(base_pct: f64, multiplier: f64, fraction_days: f64) -> Result<f64> {
    let base = non_negative("base value", base_pct)? / 100.0;
    let mult = non_negative("multiplier", multiplier)?;
    let frac = non_negative("fraction of days", fraction_days)?;
    if frac > 1.0 {
        return Err(invalid(format!("fraction of days must be at most 1, got {frac}")));
    }
    Ok(100.0 * base * mult * frac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_to_cv_values() {
        assert_eq!(entropy_to_cv(0.0).unwrap(), 0.0);
        // sqrt(e^0.56 - 1) and sqrt(e^1.16 - 1)
        assert!((entropy_to_cv(0.28).unwrap() - 0.866_414).abs() < 1e-6);
        assert!((entropy_to_cv(0.58).unwrap() - 1.479_842).abs() < 1e-6);
        assert!(entropy_to_cv(-0.1).is_err());
    }

    #[test]
    fn bound_arithmetic() {
        let b = risk_adjusted_bound(0.04, 0.03, 0.58).unwrap();
        assert!((b - 0.084_395).abs() < 1e-6);
        assert!((risk_adjusted_bound(0.04, 0.0, 0.58).unwrap() - 0.04).abs() < 1e-15);
        let b = risk_adjusted_bound(0.04, 0.02, 0.28).unwrap();
        assert!((b - 0.057_328).abs() < 1e-6);
        assert!(risk_adjusted_bound(-0.01, 0.02, 0.28).is_err());
    }

    #[test]
    fn concentration_arithmetic() {
        assert!((concentration_value(0.04, 3.57, 0.01).unwrap() - 0.001_428).abs() < 1e-12);
        assert!((concentration_value(0.04, 3.57, 1.0).unwrap() - 0.1428).abs() < 1e-12);
        assert_eq!(concentration_value(0.04, 3.57, 0.0).unwrap(), 0.0);
        assert!(concentration_value(0.04, 3.57, 1.5).is_err());
    }

    #[test]
    fn sdf_spec_constructors_agree() {
        let a = SdfSpec::from_log_vol(0.8).unwrap();
        assert!((a.entropy - 0.32).abs() < 1e-15);
        assert!((a.coefficient_of_variation() - entropy_to_cv(0.32).unwrap()).abs() < 1e-15);
        assert!(SdfSpec::from_entropy(-1.0).is_err());
        assert!(a.with_mean(1.2).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn entropy_round_trip(l in 0.0f64..5.0) {
                let back = cv_to_entropy(entropy_to_cv(l).unwrap()).unwrap();
                prop_assert!((back - l).abs() <= 1e-12 * l.max(1.0));
            }

            #[test]
            fn bound_monotone(o in 0.0f64..1.0, s in 0.0f64..1.0, l in 0.0f64..2.0, d in 0.0f64..0.5) {
                let b = risk_adjusted_bound(o, s, l).unwrap();
                prop_assert!(risk_adjusted_bound(o + d, s, l).unwrap() >= b);
                prop_assert!(risk_adjusted_bound(o, s + d, l).unwrap() >= b);
                prop_assert!(risk_adjusted_bound(o, s, l + d).unwrap() >= b);
            }
        }
    }
}
