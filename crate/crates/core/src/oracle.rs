//! Closed-form bias and variance of the three estimators when the nuisance
//! estimates deviate from the truth by fixed amounts.
//!
//! With `μ̂_a = μ_a + Δ_a` and `π̂_a = π_a / (1 - δ_a)` (where `π_1 = π`,
//! `π_0 = 1 - π`), the expectations over `X` are taken as averages over the
//! supplied covariate draws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EstimatorKind;
use crate::nuisance::{OutcomeRegression, Propensity};

pub type CurveFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync>;
pub type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Sync>;

/// `delta_mu[a]` is Δ_a and `delta_pi[a]` is δ_a.
pub struct NuisanceDeviation {
    pub delta_mu: [CurveFn; 2],
    pub delta_pi: [ScalarFn; 2],
}

impl NuisanceDeviation {
    pub fn constant(delta_mu: [f64; 2], delta_pi: [f64; 2], grid_len: usize) -> Self {
        let [m0, m1] = delta_mu;
        let [p0, p1] = delta_pi;
        Self {
            delta_mu: [
                Box::new(move |_| vec![m0; grid_len]),
                Box::new(move |_| vec![m1; grid_len]),
            ],
            delta_pi: [Box::new(move |_| p0), Box::new(move |_| p1)],
        }
    }
}

/// The data-generating law: outcome means, residual variances, the
/// propensity, and draws of `X` used to integrate.
pub struct TrueLaw {
    pub mu: [CurveFn; 2],
    pub sigma2: [CurveFn; 2],
    pub pi: ScalarFn,
    pub covariates: Vec<Vec<f64>>,
}

impl TrueLaw {
    fn arm_pi(&self, a: usize, x: &[f64]) -> f64 {
        let p = (self.pi)(x);
        if a == 1 {
            p
        } else {
            1.0 - p
        }
    }

    /// True effect curve `E(μ_1 - μ_0)`.
    pub fn effect(&self) -> Vec<f64> {
        mean_curve(&self.covariates, |x| {
            sub((self.mu[1])(x), &(self.mu[0])(x))
        })
    }
}

fn sub(mut a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x -= y);
    a
}

fn mean_curve(xs: &[Vec<f64>], f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for x in xs {
        let v = f(x);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        acc.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
    }
    let n = xs.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

fn check(dev: &NuisanceDeviation, law: &TrueLaw) -> Result<()> {
    if law.covariates.is_empty() {
        return Err(Error::Empty("covariate draws"));
    }
    for x in &law.covariates {
        for a in 0..2 {
            if (dev.delta_pi[a])(x) >= 1.0 {
                return Err(Error::invalid("deviation δ_a >= 1 gives a non-positive propensity"));
            }
        }
    }
    Ok(())
}

/// Pointwise bias of the estimator under the given deviation.
pub fn bias_oracle(kind: EstimatorKind, dev: &NuisanceDeviation, law: &TrueLaw) -> Result<Vec<f64>> {
    check(dev, law)?;
    let xs = &law.covariates;
    Ok(match kind {
        EstimatorKind::Aipw => mean_curve(xs, |x| {
            let (d1, d0) = ((dev.delta_mu[1])(x), (dev.delta_mu[0])(x));
            let (e1, e0) = ((dev.delta_pi[1])(x), (dev.delta_pi[0])(x));
            d1.iter().zip(&d0).map(|(a, b)| a * e1 - b * e0).collect()
        }),
        EstimatorKind::Pi => mean_curve(xs, |x| sub((dev.delta_mu[1])(x), &(dev.delta_mu[0])(x))),
        EstimatorKind::Ipw | EstimatorKind::IpwKnownPi => mean_curve(xs, |x| {
            let (m1, m0) = ((law.mu[1])(x), (law.mu[0])(x));
            let (e1, e0) = ((dev.delta_pi[1])(x), (dev.delta_pi[0])(x));
            m1.iter().zip(&m0).map(|(a, b)| -(e1 * a - e0 * b)).collect()
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceTerms {
    /// Variance over X of the conditional mean of the influence value.
    pub first: Vec<f64>,
    /// Contribution of the outcome residuals.
    pub residual: Vec<f64>,
    /// Contribution of the outcome error under inverse weighting.
    pub weighting: Vec<f64>,
    /// `(first + residual + weighting) / n`.
    pub total: Vec<f64>,
}

/// Pointwise variance of the estimator with `n` units under the deviation.
pub fn variance_oracle(
    kind: EstimatorKind,
    dev: &NuisanceDeviation,
    law: &TrueLaw,
    n: usize,
) -> Result<VarianceTerms> {
    check(dev, law)?;
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let xs = &law.covariates;
    // For IPW the outcome model is identically zero, i.e. Δ_a = -μ_a.
    let delta = |a: usize, x: &[f64]| -> Vec<f64> {
        match kind {
            EstimatorKind::Ipw | EstimatorKind::IpwKnownPi => {
                (law.mu[a])(x).into_iter().map(|v| -v).collect()
            }
            _ => (dev.delta_mu[a])(x),
        }
    };
    let cond_mean = |x: &[f64]| -> Vec<f64> {
        let (m1, m0) = ((law.mu[1])(x), (law.mu[0])(x));
        let (d1, d0) = (delta(1, x), delta(0, x));
        match kind {
            EstimatorKind::Pi => (0..m1.len()).map(|t| m1[t] + d1[t] - m0[t] - d0[t]).collect(),
            _ => {
                let (e1, e0) = ((dev.delta_pi[1])(x), (dev.delta_pi[0])(x));
                (0..m1.len())
                    .map(|t| m1[t] + d1[t] * e1 - m0[t] - d0[t] * e0)
                    .collect()
            }
        }
    };
    let mean = mean_curve(xs, cond_mean);
    let first = mean_curve(xs, |x| {
        cond_mean(x).iter().zip(&mean).map(|(v, m)| (v - m).powi(2)).collect()
    });
    let g = first.len();
    let (residual, weighting) = if kind == EstimatorKind::Pi {
        (vec![0.0; g], vec![0.0; g])
    } else {
        let residual = mean_curve(xs, |x| {
            let mut out = vec![0.0; g];
            for a in 0..2 {
                let w = (1.0 - (dev.delta_pi[a])(x)).powi(2) / law.arm_pi(a, x);
                for (o, s) in out.iter_mut().zip((law.sigma2[a])(x)) {
                    *o += w * s;
                }
            }
            out
        });
        let weighting = mean_curve(xs, |x| {
            let (p1, p0) = (law.arm_pi(1, x), law.arm_pi(0, x));
            let (e1, e0) = ((dev.delta_pi[1])(x), (dev.delta_pi[0])(x));
            let (d1, d0) = (delta(1, x), delta(0, x));
            (0..g)
                .map(|t| {
                    (d1[t] * (1.0 - e1) * (p0 / p1).sqrt() + d0[t] * (1.0 - e0) * (p1 / p0).sqrt())
                        .powi(2)
                })
                .collect()
        });
        (residual, weighting)
    };
    let total = (0..g)
        .map(|t| (first[t] + residual[t] + weighting[t]) / n as f64)
        .collect();
    Ok(VarianceTerms {
        first,
        residual,
        weighting,
        total,
    })
}

/// Nuisance estimates `μ_a + Δ_a` and `π_a / (1 - δ_a)` built from a law
/// and a deviation, for Monte Carlo checks of the formulas above.
pub struct DeviatedNuisances<'a> {
    pub law: &'a TrueLaw,
    pub dev: &'a NuisanceDeviation,
}

impl OutcomeRegression for DeviatedNuisances<'_> {
    fn predict(&self, a: bool, x: &[f64]) -> Vec<f64> {
        let a = a as usize;
        let mut m = (self.law.mu[a])(x);
        m.iter_mut().zip((self.dev.delta_mu[a])(x)).for_each(|(v, d)| *v += d);
        m
    }
}

impl Propensity for DeviatedNuisances<'_> {
    fn prob(&self, x: &[f64]) -> f64 {
        self.arm_prob(true, x)
    }

    fn arm_prob(&self, a: bool, x: &[f64]) -> f64 {
        let a = a as usize;
        self.law.arm_pi(a, x) / (1.0 - (self.dev.delta_pi[a])(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law() -> TrueLaw {
        let xs: Vec<Vec<f64>> = (0..400).map(|i| vec![(i as f64 / 400.0) * 4.0 - 2.0]).collect();
        TrueLaw {
            mu: [
                Box::new(|x: &[f64]| vec![x[0], 1.0]),
                Box::new(|x: &[f64]| vec![2.0 + x[0], 3.0]),
            ],
            sigma2: [Box::new(|_| vec![0.0; 2]), Box::new(|_| vec![0.0; 2])],
            pi: Box::new(|x: &[f64]| 0.3 + 0.1 * x[0].tanh()),
            covariates: xs,
        }
    }

    #[test]
    fn vanishing_deviations() {
        let l = law();
        let none = NuisanceDeviation::constant([0.0, 0.0], [0.0, 0.0], 2);
        for k in [EstimatorKind::Aipw, EstimatorKind::Pi, EstimatorKind::Ipw] {
            assert!(bias_oracle(k, &none, &l).unwrap().iter().all(|v| v.abs() < 1e-15));
        }
        let only_mu = NuisanceDeviation::constant([0.3, -0.2], [0.0, 0.0], 2);
        assert!(bias_oracle(EstimatorKind::Aipw, &only_mu, &l).unwrap().iter().all(|v| v.abs() < 1e-15));
        let only_pi = NuisanceDeviation::constant([0.0, 0.0], [0.1, -0.3], 2);
        assert!(bias_oracle(EstimatorKind::Aipw, &only_pi, &l).unwrap().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn constant_deviation_bias() {
        let l = law();
        let dev = NuisanceDeviation::constant([0.0, 0.1], [0.0, 0.2], 2);
        let b = bias_oracle(EstimatorKind::Aipw, &dev, &l).unwrap();
        assert!(b.iter().all(|v| (v - 0.02).abs() < 1e-12));
        let b = bias_oracle(EstimatorKind::Pi, &dev, &l).unwrap();
        assert!(b.iter().all(|v| (v - 0.1).abs() < 1e-12));
        let b = bias_oracle(EstimatorKind::Ipw, &dev, &l).unwrap();
        assert!((b[1] + 0.2 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_residual_variance_is_first_term() {
        let l = law();
        let none = NuisanceDeviation::constant([0.0, 0.0], [0.0, 0.0], 2);
        let v = variance_oracle(EstimatorKind::Aipw, &none, &l, 10).unwrap();
        // μ_1 - μ_0 = (2, 2) is constant, so everything vanishes
        assert!(v.total.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn rejects_large_delta() {
        let l = law();
        let dev = NuisanceDeviation::constant([0.0, 0.0], [0.0, 1.0], 2);
        assert!(bias_oracle(EstimatorKind::Aipw, &dev, &l).is_err());
    }
}
