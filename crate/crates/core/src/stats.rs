//! Small numeric helpers shared by the simulation and estimation code.

/// Neumaier-compensated sum. Order-dependent only at the last bit, which is
/// why every reduction in this crate also fixes the summation order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample variance with the n-1 denominator.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64
}

/// Mean together with its standard error across independent draws.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = mean(values);
        let se = if n > 1 { (sample_variance(values) / n as f64).sqrt() } else { f64::NAN };
        Self { mean, se, n }
    }

    pub fn sd(&self) -> f64 {
        self.se * (self.n as f64).sqrt()
    }

    /// t-statistic of the mean against `target`.
    pub fn t_stat(&self, target: f64) -> f64 {
        (self.mean - target) / self.se
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.mean - target).abs() <= n_se * self.se
    }
}

/// Pearson correlation; NaN when either side has no variation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ma = mean(a);
    let mb = mean(b);
    let sab = compensated_sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)));
    let saa = compensated_sum(a.iter().map(|x| (x - ma) * (x - ma)));
    let sbb = compensated_sum(b.iter().map(|y| (y - mb) * (y - mb)));
    sab / (saa * sbb).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics
/// (the `(n-1)p` rule). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }

    #[test]
    fn quantile_interpolates() {
        let s: Vec<f64> = (1..=5).map(f64::from).collect();
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 5.0);
        assert!((quantile_sorted(&s, 0.1) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn mean_se_of_constant_is_zero() {
        let m = MeanSe::from_samples(&[2.0; 10]);
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.se, 0.0);
    }
}
