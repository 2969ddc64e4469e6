//! OLS with absorbed stock and/or day fixed effects and one- or two-way
//! cluster-robust covariance.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Which effects are absorbed by demeaning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedEffects {
    pub stock: bool,
    pub day: bool,
}

impl FixedEffects {
    pub const NONE: Self = Self { stock: false, day: false };
    pub const STOCK: Self = Self { stock: true, day: false };
    pub const DAY: Self = Self { stock: false, day: true };
    pub const BOTH: Self = Self { stock: true, day: true };

    pub fn any(&self) -> bool {
        self.stock || self.day
    }
}

impl fmt::Display for FixedEffects {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.stock, self.day) {
            (false, false) => "none",
            (true, false) => "stock",
            (false, true) => "day",
            (true, true) => "stock+day",
        })
    }
}

/// Cluster dimensions of the covariance; neither means classical OLS.
pub type Clustering = FixedEffects;

/// Regression data with dense group ids (`0..G`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInput {
    pub y: Vec<f64>,
    pub regressors: Vec<(String, Vec<f64>)>,
    pub stock: Vec<usize>,
    pub day: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub coef: f64,
    pub se: f64,
    pub t: f64,
}

impl Term {
    /// Two-sided normal significance stars at 10/5/1%.
    pub fn stars(&self) -> &'static str {
        let t = self.t.abs();
        if t >= 2.576 {
            "***"
        } else if t >= 1.960 {
            "**"
        } else if t >= 1.645 {
            "*"
        } else {
            ""
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub terms: Vec<Term>,
    pub r2: f64,
    /// R-squared of the demeaned regression; equals `r2` without effects.
    pub within_r2: f64,
    pub n_obs: usize,
    pub fixed_effects: FixedEffects,
    pub clusters: Clustering,
    /// Regressors dropped as collinear after demeaning.
    pub dropped: Vec<String>,
    pub demean_iterations: usize,
    pub vcov: Vec<Vec<f64>>,
}

impl RegressionResult {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }
}

pub const MAX_DEMEAN_ITERATIONS: usize = 10_000;
const DEMEAN_TOL: f64 = 1e-10;
const COLLINEAR_TOL: f64 = 1e-7;

fn group_count(ids: &[usize]) -> usize {
    ids.iter().max().map_or(0, |m| m + 1)
}

/// Subtracts group means, alternating over the dimensions, until every group
/// mean is below `1e-10 * max(1, max |col|)`. Returns the sweeps used.
pub fn demean(col: &mut [f64], dims: &[&[usize]]) -> usize {
    if dims.is_empty() {
        return 0;
    }
    let scale = col.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = DEMEAN_TOL * scale;
    let sizes: Vec<Vec<f64>> = dims
        .iter()
        .map(|ids| {
            let mut c = vec![0.0; group_count(ids)];
            for &g in *ids {
                c[g] += 1.0;
            }
            c
        })
        .collect();
    for sweep in 1..=MAX_DEMEAN_ITERATIONS {
        let mut worst = 0.0_f64;
        for (ids, n) in dims.iter().zip(&sizes) {
            let mut sums = vec![0.0; n.len()];
            for (v, &g) in col.iter().zip(*ids) {
                sums[g] += v;
            }
            for (s, c) in sums.iter_mut().zip(n) {
                if *c > 0.0 {
                    *s /= c;
                }
                worst = worst.max(s.abs());
            }
            for (v, &g) in col.iter_mut().zip(*ids) {
                *v -= sums[g];
            }
        }
        if worst < tol {
            return sweep;
        }
    }
    log::warn!("demeaning stopped at the {MAX_DEMEAN_ITERATIONS}-sweep cap");
    MAX_DEMEAN_ITERATIONS
}

fn dense_ids<K: Ord + Clone>(keys: impl Iterator<Item = K>) -> (Vec<usize>, usize) {
    let keys: Vec<K> = keys.collect();
    let mut map = BTreeMap::new();
    for k in &keys {
        let next = map.len();
        map.entry(k.clone()).or_insert(next);
    }
    (keys.iter().map(|k| map[k]).collect(), map.len())
}

/// Cluster-robust sandwich for one partition, CR1 scaled.
fn cluster_vcov(x: &DMatrix<f64>, e: &DVector<f64>, bread: &DMatrix<f64>, ids: &[usize], g: usize) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let mut scores = DMatrix::<f64>::zeros(g, k);
    for i in 0..n {
        for j in 0..k {
            scores[(ids[i], j)] += x[(i, j)] * e[i];
        }
    }
    let meat = scores.transpose() * &scores;
    let c = g as f64 / (g as f64 - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64);
    bread * meat * bread * c
}

fn floor_eigenvalues(v: DMatrix<f64>) -> DMatrix<f64> {
    let sym = (&v + v.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().all(|l| *l >= 0.0) {
        return (&v + v.transpose()) * 0.5;
    }
    let floored = eig.eigenvalues.map(|l| l.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose()
}

fn check_clusters(name: &str, g: usize, n: usize) -> Result<()> {
    if g == n {
        return Err(Error::InsufficientData(format!("every {name} cluster is a singleton")));
    }
    if g < 2 {
        return Err(Error::InsufficientData(format!("need at least two {name} clusters")));
    }
    Ok(())
}

pub fn fe_regression(input: &RegressionInput, fe: FixedEffects, clusters: Clustering) -> Result<RegressionResult> {
    let n = input.y.len();
    if input.stock.len() != n || input.day.len() != n || input.regressors.iter().any(|(_, c)| c.len() != n) {
        return Err(invalid("regression columns must have equal length"));
    }
    if input.y.iter().chain(input.regressors.iter().flat_map(|(_, c)| c)).any(|v| !v.is_finite()) {
        return Err(invalid("regression data must be finite"));
    }
    let mut dims: Vec<&[usize]> = Vec::new();
    if fe.stock {
        dims.push(&input.stock);
    }
    if fe.day {
        dims.push(&input.day);
    }

    let mut y = input.y.clone();
    let mut iterations = demean(&mut y, &dims);
    let norm = |c: &[f64]| c.iter().map(|v| v * v).sum::<f64>().sqrt();
    // (name, demeaned column, norm before demeaning)
    let mut columns: Vec<(String, Vec<f64>, f64)> = Vec::new();
    if !fe.any() {
        columns.push(("(intercept)".to_string(), vec![1.0; n], (n as f64).sqrt()));
    }
    for (name, c) in &input.regressors {
        let raw = norm(c);
        let mut c = c.clone();
        iterations = iterations.max(demean(&mut c, &dims));
        columns.push((name.clone(), c, raw));
    }

    // Gram-Schmidt pass to find columns spanned by earlier ones.
    let mut kept: Vec<(String, Vec<f64>)> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dropped = Vec::new();
    for (name, c, raw) in columns {
        let mut r = c.clone();
        for b in &basis {
            let d: f64 = r.iter().zip(b).map(|(a, b)| a * b).sum();
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= d * bi;
            }
        }
        let rn = norm(&r);
        if raw == 0.0 || rn <= COLLINEAR_TOL * raw {
            log::warn!("dropping collinear regressor {name}");
            dropped.push(name);
            continue;
        }
        basis.push(r.into_iter().map(|v| v / rn).collect());
        kept.push((name, c));
    }
    let k = kept.len();
    if k == 0 {
        return Err(Error::Singular("no identifiable regressors".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!("{n} observations for {k} coefficients")));
    }

    let x = DMatrix::from_fn(n, k, |i, j| kept[j].1[i]);
    let yv = DVector::from_vec(y);
    let xtx = x.transpose() * &x;
    let bread = xtx.clone().cholesky().ok_or_else(|| Error::Singular("X'X is not positive definite".into()))?.inverse();
    let beta = &bread * (x.transpose() * &yv);
    let e = &yv - &x * &beta;
    let ssr = e.dot(&e);

    let ybar = crate::stats::mean(&input.y);
    let tss: f64 = input.y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let r2 = if tss > 0.0 { 1.0 - ssr / tss } else { f64::NAN };
    let within_r2 = if fe.any() {
        let wss = yv.dot(&yv);
        if wss > 0.0 {
            1.0 - ssr / wss
        } else {
            f64::NAN
        }
    } else {
        r2
    };

    let absorbed = if fe.any() {
        let mut a = 0;
        if fe.stock {
            a += group_count(&input.stock);
        }
        if fe.day {
            a += group_count(&input.day);
        }
        a - usize::from(fe.stock && fe.day)
    } else {
        0
    };

    let vcov = match (clusters.stock, clusters.day) {
        (false, false) => {
            let dof = n as f64 - (k + absorbed) as f64;
            if dof <= 0.0 {
                return Err(Error::InsufficientData("no residual degrees of freedom".into()));
            }
            &bread * (ssr / dof)
        }
        (s, d) => {
            let gs = group_count(&input.stock);
            let gd = group_count(&input.day);
            let mut v = DMatrix::<f64>::zeros(k, k);
            if s {
                check_clusters("stock", gs, n)?;
                v += cluster_vcov(&x, &e, &bread, &input.stock, gs);
            }
            if d {
                check_clusters("day", gd, n)?;
                v += cluster_vcov(&x, &e, &bread, &input.day, gd);
            }
            if s && d {
                let (both, gb) = dense_ids(input.stock.iter().zip(&input.day).map(|(a, b)| (*a, *b)));
                if gb >= 2 {
                    v -= cluster_vcov(&x, &e, &bread, &both, gb);
                }
                v = floor_eigenvalues(v);
            }
            v
        }
    };

    let terms = kept
        .iter()
        .enumerate()
        .map(|(j, (name, _))| {
            let se = vcov[(j, j)].max(0.0).sqrt();
            Term { name: name.clone(), coef: beta[j], se, t: beta[j] / se }
        })
        .collect();
    Ok(RegressionResult {
        terms,
        r2,
        within_r2,
        n_obs: n,
        fixed_effects: fe,
        clusters,
        dropped,
        demean_iterations: iterations,
        vcov: (0..k).map(|i| (0..k).map(|j| vcov[(i, j)]).collect()).collect(),
    })
}
