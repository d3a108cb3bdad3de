//! Plug-in, inverse-probability-weighted and cross-fitted doubly robust
//! estimators of the treatment effect on a silhouette curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nuisance::{
    common_grid, fit_outcome, fit_propensity, make_folds, CausalSample, FeatureSpec, FoldPlan,
    OutcomeRegression, Propensity,
};
use crate::seed;
use crate::summary::SummaryGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Pi,
    Ipw,
    IpwKnownPi,
    Aipw,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Pi => "PI",
            EstimatorKind::Ipw => "IPW",
            EstimatorKind::IpwKnownPi => "IPW-known-pi",
            EstimatorKind::Aipw => "AIPW",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub kind: EstimatorKind,
    pub degree: usize,
    pub grid: SummaryGrid,
    pub curve: Vec<f64>,
    /// Per-unit influence values (`n` rows of grid length); kept for IPW and AIPW.
    pub if_matrix: Option<Vec<Vec<f64>>>,
    pub n: usize,
    pub metadata: serde_json::Value,
}

/// Per-unit nuisance predictions. `p1[i]` and `p0[i]` are the estimated
/// probabilities of the treatment and control arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub p1: Vec<f64>,
    pub p0: Vec<f64>,
    pub mu1: Vec<Vec<f64>>,
    pub mu0: Vec<Vec<f64>>,
}

impl Predictions {
    pub fn from_models(
        samples: &[CausalSample],
        prop: &dyn Propensity,
        outcome: &dyn OutcomeRegression,
    ) -> Self {
        let rows: Vec<_> = samples
            .par_iter()
            .map(|s| {
                (
                    prop.arm_prob(true, &s.x),
                    prop.arm_prob(false, &s.x),
                    outcome.predict(true, &s.x),
                    outcome.predict(false, &s.x),
                )
            })
            .collect();
        let mut out = Predictions {
            p1: Vec::with_capacity(rows.len()),
            p0: Vec::with_capacity(rows.len()),
            mu1: Vec::with_capacity(rows.len()),
            mu0: Vec::with_capacity(rows.len()),
        };
        for (p1, p0, m1, m0) in rows {
            out.p1.push(p1);
            out.p0.push(p0);
            out.mu1.push(m1);
            out.mu0.push(m0);
        }
        out
    }
}

fn column_means(rows: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut m = vec![0.0; len];
    for r in rows {
        for (a, v) in m.iter_mut().zip(r) {
            *a += v;
        }
    }
    let n = rows.len() as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

fn arm_weight(a: bool, p1: f64, p0: f64) -> Result<f64> {
    let p = if a { p1 } else { p0 };
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("arm probability {p} outside (0, 1]")));
    }
    Ok(if a { 1.0 / p } else { -1.0 / p })
}

fn check_lengths(samples: &[CausalSample], preds: &Predictions, grid: &SummaryGrid) -> Result<()> {
    let n = samples.len();
    if preds.p1.len() != n || preds.p0.len() != n || preds.mu1.len() != n || preds.mu0.len() != n {
        return Err(Error::invalid("predictions do not match the number of units"));
    }
    if preds
        .mu1
        .iter()
        .chain(&preds.mu0)
        .any(|c| c.len() != grid.n_points)
    {
        return Err(Error::GridMismatch("predicted curve length differs from the grid".into()));
    }
    Ok(())
}

/// Mean of `μ̂_1 - μ̂_0` over units.
pub fn pi_from_predictions(
    samples: &[CausalSample],
    preds: &Predictions,
    d: usize,
) -> Result<EffectEstimate> {
    let grid = common_grid(samples, d)?;
    check_lengths(samples, preds, &grid)?;
    let diffs: Vec<Vec<f64>> = preds
        .mu1
        .iter()
        .zip(&preds.mu0)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    Ok(EffectEstimate {
        kind: EstimatorKind::Pi,
        degree: d,
        grid,
        curve: column_means(&diffs, grid.n_points),
        if_matrix: None,
        n: samples.len(),
        metadata: serde_json::Value::Null,
    })
}

/// Mean of `(A/π̂ - (1-A)/(1-π̂)) φ`.
pub fn ipw_from_predictions(
    samples: &[CausalSample],
    preds: &Predictions,
    d: usize,
    known: bool,
) -> Result<EffectEstimate> {
    let grid = common_grid(samples, d)?;
    check_lengths(samples, preds, &grid)?;
    let mut rows = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let w = arm_weight(s.a, preds.p1[i], preds.p0[i])?;
        rows.push(s.curve(d)?.values.iter().map(|y| w * y).collect::<Vec<_>>());
    }
    Ok(EffectEstimate {
        kind: if known { EstimatorKind::IpwKnownPi } else { EstimatorKind::Ipw },
        degree: d,
        grid,
        curve: column_means(&rows, grid.n_points),
        if_matrix: Some(rows),
        n: samples.len(),
        metadata: serde_json::Value::Null,
    })
}

fn eif_row(s: &CausalSample, d: usize, p1: f64, p0: f64, mu1: &[f64], mu0: &[f64]) -> Result<Vec<f64>> {
    let w = arm_weight(s.a, p1, p0)?;
    let mu_a = if s.a { mu1 } else { mu0 };
    Ok(s.curve(d)?
        .values
        .iter()
        .enumerate()
        .map(|(t, y)| mu1[t] - mu0[t] + w * (y - mu_a[t]))
        .collect())
}

/// Grand mean of per-unit influence curves.
pub fn aipw_from_predictions(
    samples: &[CausalSample],
    preds: &Predictions,
    d: usize,
) -> Result<EffectEstimate> {
    let grid = common_grid(samples, d)?;
    check_lengths(samples, preds, &grid)?;
    let rows = samples
        .iter()
        .enumerate()
        .map(|(i, s)| eif_row(s, d, preds.p1[i], preds.p0[i], &preds.mu1[i], &preds.mu0[i]))
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectEstimate {
        kind: EstimatorKind::Aipw,
        degree: d,
        grid,
        curve: column_means(&rows, grid.n_points),
        if_matrix: Some(rows),
        n: samples.len(),
        metadata: serde_json::Value::Null,
    })
}

/// Uncentred efficient influence function of one unit.
pub fn eif_values(
    sample: &CausalSample,
    prop: &dyn Propensity,
    outcome: &dyn OutcomeRegression,
    d: usize,
) -> Result<Vec<f64>> {
    let mu1 = outcome.predict(true, &sample.x);
    let mu0 = outcome.predict(false, &sample.x);
    let grid = sample.curve(d)?.grid;
    if mu1.len() != grid.n_points {
        return Err(Error::GridMismatch("predicted curve length differs from the grid".into()));
    }
    eif_row(
        sample,
        d,
        prop.arm_prob(true, &sample.x),
        prop.arm_prob(false, &sample.x),
        &mu1,
        &mu0,
    )
}

pub fn estimate_pi(
    samples: &[CausalSample],
    outcome: &dyn OutcomeRegression,
    d: usize,
) -> Result<EffectEstimate> {
    let preds = Predictions::from_models(samples, &crate::nuisance::KnownPropensity(|_| 0.5), outcome);
    pi_from_predictions(samples, &preds, d)
}

struct NoOutcome(usize);

impl OutcomeRegression for NoOutcome {
    fn predict(&self, _a: bool, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.0]
    }
}

/// IPW with a fitted model, or with the true propensity when `known` is set.
pub fn estimate_ipw(
    samples: &[CausalSample],
    prop: &dyn Propensity,
    d: usize,
    known: bool,
) -> Result<EffectEstimate> {
    let grid = common_grid(samples, d)?;
    let preds = Predictions::from_models(samples, prop, &NoOutcome(grid.n_points));
    ipw_from_predictions(samples, &preds, d, known)
}

/// AIPW with fixed nuisance functions (no sample splitting).
pub fn estimate_aipw_with(
    samples: &[CausalSample],
    prop: &dyn Propensity,
    outcome: &dyn OutcomeRegression,
    d: usize,
) -> Result<EffectEstimate> {
    let preds = Predictions::from_models(samples, prop, outcome);
    aipw_from_predictions(samples, &preds, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceConfig {
    pub features: FeatureSpec,
    pub clip: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub basis_size: usize,
    pub ridge: f64,
}

impl NuisanceConfig {
    pub fn new(features: FeatureSpec, basis_size: usize) -> Self {
        Self {
            features,
            clip: 0.01,
            max_iter: 100,
            tol: 1e-8,
            basis_size,
            ridge: 1e-6,
        }
    }
}

/// Cross-fitted predictions for several degrees plus the fold plan used.
#[derive(Debug, Clone)]
pub struct CrossFit {
    pub plan: FoldPlan,
    pub degrees: Vec<usize>,
    pub predictions: Vec<Predictions>,
    pub separation_folds: usize,
}

impl CrossFit {
    fn preds(&self, d: usize) -> Result<&Predictions> {
        let i = self
            .degrees
            .iter()
            .position(|&x| x == d)
            .ok_or_else(|| Error::invalid(format!("degree {d} was not cross-fitted")))?;
        Ok(&self.predictions[i])
    }

    fn tag(&self, mut est: EffectEstimate) -> EffectEstimate {
        est.metadata = serde_json::json!({
            "folds": self.plan.k,
            "fold_seed": self.plan.seed,
            "fold_sizes": self.plan.folds.iter().map(Vec::len).collect::<Vec<_>>(),
        });
        est
    }

    pub fn pi(&self, samples: &[CausalSample], d: usize) -> Result<EffectEstimate> {
        Ok(self.tag(pi_from_predictions(samples, self.preds(d)?, d)?))
    }

    pub fn ipw(&self, samples: &[CausalSample], d: usize) -> Result<EffectEstimate> {
        Ok(self.tag(ipw_from_predictions(samples, self.preds(d)?, d, false)?))
    }

    pub fn aipw(&self, samples: &[CausalSample], d: usize) -> Result<EffectEstimate> {
        Ok(self.tag(aipw_from_predictions(samples, self.preds(d)?, d)?))
    }

    pub fn estimate(&self, kind: EstimatorKind, samples: &[CausalSample], d: usize) -> Result<EffectEstimate> {
        match kind {
            EstimatorKind::Pi => self.pi(samples, d),
            EstimatorKind::Ipw => self.ipw(samples, d),
            EstimatorKind::Aipw => self.aipw(samples, d),
            EstimatorKind::IpwKnownPi => Err(Error::invalid("known-pi IPW needs the true propensity")),
        }
    }
}

fn arms_ok(samples: &[CausalSample], plan: &FoldPlan, need: usize) -> bool {
    let labels = plan.labels(samples.len());
    (0..plan.k).all(|f| {
        let mut inside = [0usize; 2];
        let mut outside = [0usize; 2];
        for (s, &l) in samples.iter().zip(&labels) {
            if l == f {
                inside[s.a as usize] += 1;
            } else {
                outside[s.a as usize] += 1;
            }
        }
        inside[0] > 0 && inside[1] > 0 && outside[0] > need && outside[1] > need
    })
}

/// Fold plan whose folds and complements both contain enough units of each
/// arm, re-drawing with derived seeds at most ten times.
pub fn draw_folds(samples: &[CausalSample], k: usize, seed_value: u64) -> Result<FoldPlan> {
    let l = samples.first().map_or(0, |s| s.x.len());
    for attempt in 0..=10u64 {
        let s = if attempt == 0 {
            seed_value
        } else {
            seed::derive(seed_value, seed::stream::FOLDS, attempt)
        };
        let plan = make_folds(samples.len(), k, s)?;
        if arms_ok(samples, &plan, l + 1) {
            return Ok(plan);
        }
    }
    Err(Error::Degenerate(
        "could not draw folds with both treatment arms after 10 re-draws".into(),
    ))
}

/// Fit nuisances on each fold's complement and predict on the fold.
pub fn cross_fit(
    samples: &[CausalSample],
    degrees: &[usize],
    plan: &FoldPlan,
    config: &NuisanceConfig,
) -> Result<CrossFit> {
    let n = samples.len();
    let labels = plan.labels(n);
    let per_fold: Vec<Result<(Vec<usize>, bool, Vec<Predictions>)>> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<CausalSample> = samples
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l != f)
                .map(|(s, _)| s.clone())
                .collect();
            let test: Vec<CausalSample> = plan.folds[f].iter().map(|&i| samples[i].clone()).collect();
            let prop = fit_propensity(&train, &config.features, config.clip, config.max_iter, config.tol)?;
            let preds = degrees
                .iter()
                .map(|&d| {
                    let outcome = fit_outcome(&train, d, config.basis_size, config.ridge)?;
                    Ok(Predictions::from_models(&test, &prop, &outcome))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((plan.folds[f].clone(), prop.separation, preds))
        })
        .collect();
    let mut predictions: Vec<Predictions> = degrees
        .iter()
        .map(|_| Predictions {
            p1: vec![0.0; n],
            p0: vec![0.0; n],
            mu1: vec![Vec::new(); n],
            mu0: vec![Vec::new(); n],
        })
        .collect();
    let mut separation_folds = 0;
    for res in per_fold {
        let (idx, sep, preds) = res?;
        separation_folds += sep as usize;
        for (out, p) in predictions.iter_mut().zip(preds) {
            for (k, &i) in idx.iter().enumerate() {
                out.p1[i] = p.p1[k];
                out.p0[i] = p.p0[k];
                out.mu1[i] = p.mu1[k].clone();
                out.mu0[i] = p.mu0[k].clone();
            }
        }
    }
    Ok(CrossFit {
        plan: plan.clone(),
        degrees: degrees.to_vec(),
        predictions,
        separation_folds,
    })
}

/// Cross-fitted AIPW.
pub fn estimate_aipw(
    samples: &[CausalSample],
    plan: &FoldPlan,
    config: &NuisanceConfig,
    d: usize,
) -> Result<EffectEstimate> {
    cross_fit(samples, &[d], plan, config)?.aipw(samples, d)
}

/// Trapezoid integral of `|a - b|`.
pub fn l1_distance(a: &[f64], b: &[f64], grid: &SummaryGrid) -> Result<f64> {
    if a.len() != grid.n_points || b.len() != grid.n_points {
        return Err(Error::GridMismatch(format!(
            "curves of length {} and {} on a {}-point grid",
            a.len(),
            b.len(),
            grid.n_points
        )));
    }
    Ok(grid
        .trapezoid_weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (x - y).abs())
        .sum())
}

/// Square root of the average entry of the across-replicate covariance matrix.
pub fn std_summary(curves: &[Vec<f64>]) -> Result<f64> {
    let r = curves.len();
    if r < 2 {
        return Err(Error::invalid("std summary needs at least 2 replicates"));
    }
    let g = curves[0].len();
    let mean = column_means(curves, g);
    let centred: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| c.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    // Σ_s Σ_t cov(s, t) = Σ_i (Σ_t c_it)^2 / (r - 1)
    let total: f64 = centred
        .iter()
        .map(|c| c.iter().sum::<f64>().powi(2))
        .sum::<f64>()
        / (r as f64 - 1.0);
    Ok((total / (g * g) as f64).max(0.0).sqrt())
}

/// Pointwise mean and standard deviation across replicate curves.
pub fn pointwise_band(curves: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let g = curves.first().map_or(0, Vec::len);
    let mean = column_means(curves, g);
    let r = curves.len() as f64;
    let sd = (0..g)
        .map(|t| {
            if curves.len() < 2 {
                return 0.0;
            }
            let ss: f64 = curves.iter().map(|c| (c[t] - mean[t]).powi(2)).sum();
            (ss / (r - 1.0)).sqrt()
        })
        .collect();
    (mean, sd)
}
