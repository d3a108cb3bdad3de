//! Nuisance functions: propensity score, functional outcome regression and
//! the fold plans used for cross-fitting.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::summary::{SilhouetteCurve, SummaryGrid};

/// One unit `(X, A, Y)`; `y` maps homology degree to the observed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalSample {
    pub x: Vec<f64>,
    pub a: bool,
    pub y: BTreeMap<usize, SilhouetteCurve>,
}

impl CausalSample {
    pub fn curve(&self, d: usize) -> Result<&SilhouetteCurve> {
        self.y
            .get(&d)
            .ok_or_else(|| Error::invalid(format!("unit has no curve for degree {d}")))
    }
}

/// Shared grid of all units in degree `d`, checking they agree.
pub fn common_grid(samples: &[CausalSample], d: usize) -> Result<SummaryGrid> {
    let first = samples.first().ok_or(Error::Empty("samples"))?;
    let grid = first.curve(d)?.grid;
    for s in samples {
        grid.ensure_same(&s.curve(d)?.grid)?;
    }
    Ok(grid)
}

/// Rows are basis functions evaluated on the grid: a constant, then cosine
/// and sine pairs of increasing frequency, orthonormal on the interval.
pub fn fourier_basis(j: usize, grid: &SummaryGrid) -> Result<DMatrix<f64>> {
    if j == 0 {
        return Err(Error::invalid("basis size J must be at least 1"));
    }
    grid.validate()?;
    let width = grid.width();
    let ts = grid.points();
    let mut b = DMatrix::zeros(j, grid.n_points);
    let amp = (2.0 / width).sqrt();
    for (col, &t) in ts.iter().enumerate() {
        let s = (t - grid.t_min) / width;
        b[(0, col)] = 1.0 / width.sqrt();
        for row in 1..j {
            let k = row.div_ceil(2) as f64;
            let arg = 2.0 * std::f64::consts::PI * k * s;
            b[(row, col)] = if row % 2 == 1 { amp * arg.cos() } else { amp * arg.sin() };
        }
    }
    Ok(b)
}

/// Predicted outcome curves `μ̂_a(·, x)`.
pub trait OutcomeRegression: Sync {
    fn predict(&self, a: bool, x: &[f64]) -> Vec<f64>;
}

/// Treatment probabilities. `arm_prob(false, x)` is the probability of
/// control, which defaults to `1 - prob(x)`.
pub trait Propensity: Sync {
    fn prob(&self, x: &[f64]) -> f64;

    fn arm_prob(&self, a: bool, x: &[f64]) -> f64 {
        let p = self.prob(x);
        if a {
            p
        } else {
            1.0 - p
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmFit {
    /// `coef[j][0]` is the intercept of basis score j, `coef[j][k + 1]` the
    /// slope on centred covariate k.
    pub coef: Vec<Vec<f64>>,
    pub x_mean: Vec<f64>,
    pub n_train: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    pub degree: usize,
    pub basis_size: usize,
    pub ridge: f64,
    pub grid: SummaryGrid,
    pub arms: [ArmFit; 2],
    #[serde(skip)]
    basis: Option<DMatrix<f64>>,
}

impl OutcomeModel {
    /// Basis coefficients `β_j(x)` for arm `a`.
    pub fn scores(&self, a: bool, x: &[f64]) -> Vec<f64> {
        let arm = &self.arms[a as usize];
        arm.coef
            .iter()
            .map(|row| {
                row[0]
                    + x.iter()
                        .zip(&arm.x_mean)
                        .zip(&row[1..])
                        .map(|((xi, m), b)| (xi - m) * b)
                        .sum::<f64>()
            })
            .collect()
    }

    fn basis(&self) -> std::borrow::Cow<'_, DMatrix<f64>> {
        match &self.basis {
            Some(b) => std::borrow::Cow::Borrowed(b),
            None => std::borrow::Cow::Owned(
                fourier_basis(self.basis_size, &self.grid).expect("validated at fit time"),
            ),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("outcome model serialises")
    }
}

impl OutcomeRegression for OutcomeModel {
    fn predict(&self, a: bool, x: &[f64]) -> Vec<f64> {
        let beta = DVector::from_vec(self.scores(a, x));
        let curve = self.basis().tr_mul(&beta);
        curve.iter().copied().collect()
    }
}

/// Project each curve on the basis rows with trapezoid quadrature.
pub fn basis_scores(curves: &[&[f64]], basis: &DMatrix<f64>, grid: &SummaryGrid) -> DMatrix<f64> {
    let w = grid.trapezoid_weights();
    let mut weighted = basis.clone();
    for (col, wt) in w.iter().enumerate() {
        for row in 0..basis.nrows() {
            weighted[(row, col)] *= wt;
        }
    }
    DMatrix::from_fn(curves.len(), basis.nrows(), |i, j| {
        weighted.row(j).iter().zip(curves[i]).map(|(b, y)| b * y).sum()
    })
}

fn fit_arm(
    xs: &[&[f64]],
    scores: &DMatrix<f64>,
    ridge: f64,
    arm: bool,
) -> Result<ArmFit> {
    let n = xs.len();
    let l = xs[0].len();
    if n <= l + 1 {
        return Err(Error::Degenerate(format!(
            "arm {} has {n} units but needs more than {} to fit",
            arm as u8,
            l + 1
        )));
    }
    let mut x_mean = vec![0.0; l];
    for x in xs {
        for (m, v) in x_mean.iter_mut().zip(x.iter()) {
            *m += v / n as f64;
        }
    }
    let z = DMatrix::from_fn(n, l + 1, |i, k| if k == 0 { 1.0 } else { xs[i][k - 1] - x_mean[k - 1] });
    let mut gram = z.tr_mul(&z);
    for k in 1..=l {
        gram[(k, k)] += ridge;
    }
    let rhs = z.tr_mul(scores);
    let scale = gram.diagonal().max().max(f64::MIN_POSITIVE);
    let chol = gram
        .cholesky()
        .filter(|c| c.l_dirty().diagonal().iter().all(|&v| v * v > 1e-12 * scale))
        .ok_or_else(|| Error::SingularDesign(format!("arm {} with ridge {ridge}", arm as u8)))?;
    let beta = chol.solve(&rhs); // (l + 1) x J
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularDesign(format!("arm {} with ridge {ridge}", arm as u8)));
    }
    let coef = (0..beta.ncols())
        .map(|j| beta.column(j).iter().copied().collect())
        .collect();
    Ok(ArmFit {
        coef,
        x_mean,
        n_train: n,
    })
}

/// Function-on-scalar ridge regression per arm on `J` Fourier scores.
pub fn fit_outcome(train: &[CausalSample], d: usize, j: usize, ridge: f64) -> Result<OutcomeModel> {
    if !(ridge >= 0.0) {
        return Err(Error::invalid(format!("ridge penalty must be >= 0, got {ridge}")));
    }
    let grid = common_grid(train, d)?;
    let basis = fourier_basis(j, &grid)?;
    let mut arms = Vec::with_capacity(2);
    for arm in [false, true] {
        let units: Vec<&CausalSample> = train.iter().filter(|s| s.a == arm).collect();
        if units.is_empty() {
            return Err(Error::Degenerate(format!("no units in arm {}", arm as u8)));
        }
        let xs: Vec<&[f64]> = units.iter().map(|s| s.x.as_slice()).collect();
        let curves: Vec<&[f64]> = units
            .iter()
            .map(|s| s.curve(d).map(|c| c.values.as_slice()))
            .collect::<Result<_>>()?;
        let scores = basis_scores(&curves, &basis, &grid);
        arms.push(fit_arm(&xs, &scores, ridge, arm)?);
    }
    let arm1 = arms.pop().expect("two arms");
    let arm0 = arms.pop().expect("two arms");
    Ok(OutcomeModel {
        degree: d,
        basis_size: j,
        ridge,
        grid,
        arms: [arm0, arm1],
        basis: Some(basis),
    })
}

/// Which covariate terms enter the logistic model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub intercept: bool,
    pub linear: Vec<usize>,
    pub interactions: Vec<(usize, usize)>,
}

impl FeatureSpec {
    pub fn linear_with_intercept(l: usize) -> Self {
        Self {
            intercept: true,
            linear: (0..l).collect(),
            interactions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.intercept as usize + self.linear.len() + self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_index(&self) -> Option<usize> {
        self.linear
            .iter()
            .copied()
            .chain(self.interactions.iter().flat_map(|&(a, b)| [a, b]))
            .max()
    }

    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.len());
        if self.intercept {
            f.push(1.0);
        }
        f.extend(self.linear.iter().map(|&i| x[i]));
        f.extend(self.interactions.iter().map(|&(i, k)| x[i] * x[k]));
        f
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::invalid("propensity feature spec is empty"));
        }
        if let Some(m) = self.max_index() {
            if m >= l {
                return Err(Error::IndexOutOfRange { index: m, len: l });
            }
        }
        Ok(())
    }
}

pub fn expit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityModel {
    pub spec: FeatureSpec,
    pub coef: Vec<f64>,
    pub clip: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Coefficients diverged, which indicates (quasi-)separation.
    pub separation: bool,
}

impl PropensityModel {
    pub fn new(spec: FeatureSpec, coef: Vec<f64>, clip: f64) -> Result<Self> {
        if coef.len() != spec.len() {
            return Err(Error::invalid("coefficient count does not match the feature spec"));
        }
        check_clip(clip)?;
        Ok(Self {
            spec,
            coef,
            clip,
            iterations: 0,
            converged: true,
            separation: false,
        })
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.spec.features(x).iter().zip(&self.coef).map(|(f, b)| f * b).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("propensity model serialises")
    }
}

impl Propensity for PropensityModel {
    fn prob(&self, x: &[f64]) -> f64 {
        expit(self.linear_predictor(x)).clamp(self.clip, 1.0 - self.clip)
    }
}

fn check_clip(clip: f64) -> Result<()> {
    if !(clip > 0.0 && clip < 0.5) {
        return Err(Error::invalid(format!("clip must lie in (0, 0.5), got {clip}")));
    }
    Ok(())
}

/// Logistic regression by iteratively reweighted least squares.
pub fn fit_propensity(
    train: &[CausalSample],
    spec: &FeatureSpec,
    clip: f64,
    max_iter: usize,
    tol: f64,
) -> Result<PropensityModel> {
    check_clip(clip)?;
    let first = train.first().ok_or(Error::Empty("propensity training set"))?;
    spec.validate(first.x.len())?;
    let treated = train.iter().filter(|s| s.a).count();
    if treated == 0 || treated == train.len() {
        return Err(Error::Degenerate("propensity needs both treatment values".into()));
    }
    let p = spec.len();
    let feats = DMatrix::from_fn(train.len(), p, |i, k| spec.features(&train[i].x)[k]);
    let y = DVector::from_iterator(train.len(), train.iter().map(|s| s.a as u8 as f64));
    let mut beta = DVector::zeros(p);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let eta = &feats * &beta;
        let mu = eta.map(expit);
        let grad = feats.tr_mul(&(&y - &mu));
        if grad.norm() <= tol {
            converged = true;
            break;
        }
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-12));
        let mut weighted = feats.clone();
        for (i, wi) in w.iter().enumerate() {
            weighted.row_mut(i).scale_mut(*wi);
        }
        let mut info = feats.tr_mul(&weighted);
        for k in 0..p {
            info[(k, k)] += 1e-10;
        }
        let step = match info.cholesky() {
            Some(c) => c.solve(&grad),
            None => {
                separation = true;
                break;
            }
        };
        beta += step;
        if beta.amax() > 50.0 || beta.iter().any(|v| !v.is_finite()) {
            separation = true;
            break;
        }
    }
    if separation {
        eprintln!("warning: propensity fit diverged (separation); predictions are clipped");
        if beta.iter().any(|v| !v.is_finite()) {
            beta.fill(0.0);
        }
    }
    Ok(PropensityModel {
        spec: spec.clone(),
        coef: beta.iter().copied().collect(),
        clip,
        iterations,
        converged,
        separation,
    })
}

/// A known propensity function, as used for oracle comparisons.
pub struct KnownPropensity<F: Fn(&[f64]) -> f64 + Sync>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Propensity for KnownPropensity<F> {
    fn prob(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Fold id of every unit.
    pub fn labels(&self, n: usize) -> Vec<usize> {
        let mut lab = vec![0; n];
        for (f, idx) in self.folds.iter().enumerate() {
            for &i in idx {
                lab[i] = f;
            }
        }
        lab
    }
}

/// Shuffle `0..n` and cut it into `k` nearly equal folds.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if n < 2 * k {
        return Err(Error::invalid(format!("{n} units cannot fill {k} folds of size >= 2")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = idx[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(FoldPlan { k, seed, folds })
}
