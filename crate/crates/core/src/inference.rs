//! Influence-function covariance and the sup-norm multiplier bootstrap test.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EffectEstimate;
use crate::seed;
use crate::summary::SummaryGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub grid: SummaryGrid,
    pub matrix: Vec<Vec<f64>>,
    /// Pointwise standard errors `sqrt(diag / n)`.
    pub se: Vec<f64>,
}

/// Empirical covariance (divisor `n - 1`) of the influence curves.
pub fn covariance(est: &EffectEstimate) -> Result<CovarianceEstimate> {
    let rows = est
        .if_matrix
        .as_ref()
        .ok_or_else(|| Error::invalid("estimate carries no influence values"))?;
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid("covariance needs at least 2 units"));
    }
    let g = est.grid.n_points;
    let mut mean = vec![0.0; g];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let mut matrix = vec![vec![0.0; g]; g];
    for r in rows {
        let c: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for s in 0..g {
            for t in s..g {
                matrix[s][t] += c[s] * c[t];
            }
        }
    }
    for s in 0..g {
        for t in s..g {
            matrix[s][t] /= (n - 1) as f64;
            matrix[t][s] = matrix[s][t];
        }
    }
    let se = (0..g).map(|t| (matrix[t][t] / n as f64).sqrt()).collect();
    Ok(CovarianceEstimate {
        grid: est.grid,
        matrix,
        se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub degree: usize,
    pub t_n: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub bootstrap: usize,
    pub multiplier: Multiplier,
    pub reject: bool,
    pub bootstrap_summary: BootstrapSummary,
}

/// Test of "no effect at any scale": `T_n = sqrt(n) max |ψ̂|` against the
/// `(1 - α)` quantile of multiplier-bootstrap sups.
pub fn sup_test(
    est: &EffectEstimate,
    alpha: f64,
    b: usize,
    multiplier: Multiplier,
    seed_value: u64,
) -> Result<TestReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if b < 200 {
        return Err(Error::invalid(format!("need at least 200 bootstrap draws, got {b}")));
    }
    let rows = est
        .if_matrix
        .as_ref()
        .ok_or_else(|| Error::invalid("estimate carries no influence values"))?;
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid("test needs at least 2 units"));
    }
    if rows.iter().all(|r| r.iter().all(|&v| v == 0.0)) {
        return Err(Error::Degenerate("influence values are identically zero".into()));
    }
    let g = est.grid.n_points;
    let centred: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&est.curve).map(|(v, m)| v - m).collect())
        .collect();
    let root_n = (n as f64).sqrt();
    let t_n = root_n * est.curve.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut sups: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::derived_rng(seed_value, seed::stream::BOOTSTRAP, k as u64);
            let mut acc = vec![0.0; g];
            for c in &centred {
                let xi: f64 = match multiplier {
                    Multiplier::Gaussian => StandardNormal.sample(&mut rng),
                    Multiplier::Rademacher => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                for (a, v) in acc.iter_mut().zip(c) {
                    *a += xi * v;
                }
            }
            acc.iter().fold(0.0f64, |m, v| m.max(v.abs())) / root_n
        })
        .collect();
    sups.sort_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * b as f64).ceil() as usize;
    let critical_value = sups[rank.clamp(1, b) - 1];
    let mean = sups.iter().sum::<f64>() / b as f64;
    let sd = (sups.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (b as f64 - 1.0)).sqrt();
    Ok(TestReport {
        degree: est.degree,
        t_n,
        critical_value,
        alpha,
        bootstrap: b,
        multiplier,
        reject: t_n > critical_value,
        bootstrap_summary: BootstrapSummary {
            mean,
            sd,
            min: sups[0],
            median: sups[b / 2],
            max: sups[b - 1],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::EstimatorKind;
    use rand_distr::StandardNormal;

    fn estimate(rows: Vec<Vec<f64>>) -> EffectEstimate {
        let g = rows[0].len();
        let mut curve = vec![0.0; g];
        for r in &rows {
            for (c, v) in curve.iter_mut().zip(r) {
                *c += v / rows.len() as f64;
            }
        }
        EffectEstimate {
            kind: EstimatorKind::Aipw,
            degree: 1,
            grid: SummaryGrid::new(0.0, 1.0, g).unwrap(),
            curve,
            n: rows.len(),
            if_matrix: Some(rows),
            metadata: serde_json::Value::Null,
        }
    }

    #[test]
    fn identical_rows_have_zero_covariance() {
        let c = covariance(&estimate(vec![vec![1.0, 2.0, 3.0]; 5])).unwrap();
        assert!(c.matrix.iter().flatten().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn standard_normal_rows_have_unit_variance() {
        let mut rng = seed::rng(4);
        let rows: Vec<Vec<f64>> = (0..4000)
            .map(|_| (0..4).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let c = covariance(&estimate(rows)).unwrap();
        for t in 0..4 {
            assert!((c.matrix[t][t] - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn reject_follows_statistic() {
        let mut rng = seed::rng(9);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..5).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 1.0 + 0.1 * z }).collect())
            .collect();
        let r = sup_test(&estimate(rows), 0.05, 500, Multiplier::Rademacher, 1).unwrap();
        assert!(r.reject);
        assert_eq!(r.reject, r.t_n > r.critical_value);
    }

    #[test]
    fn rejects_bad_arguments() {
        let e = estimate(vec![vec![0.0; 3]; 4]);
        assert!(matches!(sup_test(&e, 0.05, 500, Multiplier::Gaussian, 0), Err(Error::Degenerate(_))));
        assert!(sup_test(&e, 0.05, 100, Multiplier::Gaussian, 0).is_err());
    }
}
