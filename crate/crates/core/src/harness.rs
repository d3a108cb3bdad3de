//! End-to-end experiments: a fixed pool of potential outcomes, replicated
//! draws of covariates and treatment, and summaries of every estimator.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    assign_treatment, gen_covariates, generate_outcome_pairs, true_propensity, CounterfactualUnit,
    DatasetKind, GraphSpec, ImageSpec, OrbitSpec,
};
use crate::error::{Error, Result};
use crate::estimate::{
    cross_fit, draw_folds, estimate_ipw, l1_distance, pointwise_band, std_summary, EffectEstimate,
    EstimatorKind, NuisanceConfig,
};
use crate::inference::{sup_test, Multiplier, TestReport};
use crate::io;
use crate::nuisance::{CausalSample, FeatureSpec, KnownPropensity};
use crate::seed::{self, stream};
use crate::summary::{
    build_complex, complex_diagrams, pipeline_silhouette, silhouette, CapRule, Filtration, Outcome,
    PipelineConfig, SilhouetteCurve, SummaryGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[default]
    None,
    /// Propensity fitted on the first and third covariates only.
    MisPi,
    /// Outcome regression with the reduced basis size.
    MisMu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NuisanceSection {
    pub basis: Option<usize>,
    pub misspecified_basis: Option<usize>,
    pub ridge: f64,
    pub clip: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NuisanceSection {
    fn default() -> Self {
        Self {
            basis: None,
            misspecified_basis: None,
            ridge: 1e-6,
            clip: 0.01,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub degrees: Vec<usize>,
    pub r: Option<f64>,
    pub grid: Option<SummaryGrid>,
    pub filtration: Option<Filtration>,
    pub cap_h0: CapRule,
    pub cap_higher: Option<CapRule>,
    pub estimators: Vec<EstimatorKind>,
    pub scenario: Scenario,
    pub folds: usize,
    pub alpha: f64,
    pub bootstrap: usize,
    pub multiplier: Multiplier,
    /// Run the sup test on the first replicate of an experiment.
    pub report_tests: bool,
    pub nuisance: NuisanceSection,
    pub orbit: OrbitSpec,
    pub image: ImageSpec,
    pub graph: GraphSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Orbit,
            n: 300,
            replicates: 20,
            seed: 2024,
            degrees: vec![0, 1],
            r: None,
            grid: None,
            filtration: None,
            cap_h0: CapRule::Drop,
            cap_higher: None,
            estimators: vec![EstimatorKind::Pi, EstimatorKind::Ipw, EstimatorKind::Aipw],
            scenario: Scenario::None,
            folds: 2,
            alpha: 0.05,
            bootstrap: 1000,
            multiplier: Multiplier::Rademacher,
            report_tests: true,
            nuisance: NuisanceSection::default(),
            orbit: OrbitSpec::default(),
            image: ImageSpec::default(),
            graph: GraphSpec::default(),
        }
    }
}

/// Propensity features of the correctly specified model: all covariates
/// plus the products X2·X3 and X1·X3.
pub fn correct_features() -> FeatureSpec {
    FeatureSpec {
        intercept: true,
        linear: (0..5).collect(),
        interactions: vec![(1, 2), (0, 2)],
    }
}

/// The deliberately misspecified propensity model `expit(b1 X1 + b2 X3)`.
pub fn misspecified_features() -> FeatureSpec {
    FeatureSpec {
        intercept: false,
        linear: vec![0, 2],
        interactions: Vec::new(),
    }
}

impl ExperimentConfig {
    pub fn for_dataset(dataset: DatasetKind) -> Self {
        Self {
            dataset,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn r(&self) -> f64 {
        self.r.unwrap_or(match self.dataset {
            DatasetKind::Orbit => 3.0,
            DatasetKind::SynthImage => 0.1,
            DatasetKind::SynthGraph => 1.0,
        })
    }

    pub fn grid(&self) -> SummaryGrid {
        self.grid.unwrap_or(match self.dataset {
            DatasetKind::Orbit => SummaryGrid { t_min: 0.0, t_max: 0.2, n_points: 201 },
            DatasetKind::SynthImage => SummaryGrid { t_min: 0.0, t_max: 1.0, n_points: 201 },
            DatasetKind::SynthGraph => SummaryGrid { t_min: 0.0, t_max: 8.5, n_points: 201 },
        })
    }

    pub fn filtration(&self) -> Filtration {
        self.filtration.unwrap_or(match self.dataset {
            DatasetKind::Orbit => Filtration::Alpha,
            DatasetKind::SynthImage => Filtration::Cubical,
            DatasetKind::SynthGraph => Filtration::Graph,
        })
    }

    pub fn cap_higher(&self) -> CapRule {
        self.cap_higher.unwrap_or(match self.dataset {
            DatasetKind::SynthGraph => CapRule::Uniform {
                lo: self.graph.cap.0,
                hi: self.graph.cap.1,
            },
            _ => CapRule::Drop,
        })
    }

    /// Basis size actually used, after the scenario is applied.
    pub fn basis_size(&self) -> usize {
        let correct = self.nuisance.basis.unwrap_or(match self.dataset {
            DatasetKind::Orbit => 3,
            DatasetKind::SynthImage => 10,
            DatasetKind::SynthGraph => 5,
        });
        match self.scenario {
            Scenario::MisMu => self.nuisance.misspecified_basis.unwrap_or(match self.dataset {
                DatasetKind::Orbit => 2,
                DatasetKind::SynthImage => 7,
                DatasetKind::SynthGraph => 2,
            }),
            _ => correct,
        }
    }

    pub fn features(&self) -> FeatureSpec {
        match self.scenario {
            Scenario::MisPi => misspecified_features(),
            _ => correct_features(),
        }
    }

    pub fn nuisance_config(&self) -> NuisanceConfig {
        NuisanceConfig {
            features: self.features(),
            clip: self.nuisance.clip,
            max_iter: self.nuisance.max_iter,
            tol: self.nuisance.tol,
            basis_size: self.basis_size(),
            ridge: self.nuisance.ridge,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            filtration: self.filtration(),
            degrees: self.degrees.clone(),
            r: self.r(),
            grid: self.grid(),
            cap_h0: self.cap_h0,
            cap_higher: self.cap_higher(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 2 * self.folds.max(2) {
            return bad(format!("n = {} is too small for {} folds", self.n, self.folds));
        }
        if self.folds < 2 {
            return bad(format!("folds = {} must be at least 2", self.folds));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.estimators.is_empty() {
            return bad("no estimators selected".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        if self.bootstrap < 200 {
            return bad(format!("bootstrap = {} is below 200", self.bootstrap));
        }
        if self.basis_size() == 0 {
            return bad("nuisance.basis must be at least 1".into());
        }
        if !(self.nuisance.clip > 0.0 && self.nuisance.clip < 0.5) {
            return bad(format!("nuisance.clip = {} outside (0, 0.5)", self.nuisance.clip));
        }
        if !(self.nuisance.ridge >= 0.0) {
            return bad(format!("nuisance.ridge = {} is negative", self.nuisance.ridge));
        }
        if self.dataset == DatasetKind::Orbit {
            let o = &self.orbit;
            if o.s_values.len() < 2 || o.points == 0 || !(0.0..=1.0).contains(&o.prob_higher) {
                return bad("orbit needs >= 2 s values, points >= 1 and prob_higher in [0, 1]".into());
            }
        }
        for (name, mix) in [("image.mix", self.image.mix), ("graph.mix", self.graph.mix)] {
            if !(0.0..=1.0).contains(&mix) {
                return bad(format!("{name} = {mix} outside [0, 1]"));
            }
        }
        if self.image.size == 0 {
            return bad("image.size must be positive".into());
        }
        self.pipeline()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Silhouettes of both potential outcomes of every unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub degrees: Vec<usize>,
    pub grid: SummaryGrid,
    pub y0: Vec<BTreeMap<usize, SilhouetteCurve>>,
    pub y1: Vec<BTreeMap<usize, SilhouetteCurve>>,
}

impl Pool {
    pub fn len(&self) -> usize {
        self.y0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y0.is_empty()
    }

    /// Average of `y1 - y0` over the pool: the effect the estimators target.
    pub fn truth(&self, d: usize) -> Vec<f64> {
        let g = self.grid.n_points;
        let mut out = vec![0.0; g];
        for (a, b) in self.y1.iter().zip(&self.y0) {
            for (t, o) in out.iter_mut().enumerate() {
                *o += a[&d].values[t] - b[&d].values[t];
            }
        }
        let n = self.len() as f64;
        out.iter_mut().for_each(|v| *v /= n);
        out
    }
}

fn curves_by_degree(degrees: &[usize], curves: Vec<SilhouetteCurve>) -> BTreeMap<usize, SilhouetteCurve> {
    degrees.iter().copied().zip(curves).collect()
}

/// Generate raw outcomes and turn them into silhouettes.
pub fn build_pool(config: &ExperimentConfig, pool_seed: u64) -> Result<Pool> {
    let pairs = generate_outcome_pairs(
        config.dataset,
        config.n,
        &config.orbit,
        &config.image,
        &config.graph,
        pool_seed,
    )?;
    pool_from_outcomes(config, &pairs, pool_seed)
}

pub fn pool_from_outcomes(
    config: &ExperimentConfig,
    pairs: &[(Outcome, Outcome)],
    pool_seed: u64,
) -> Result<Pool> {
    let pipe = config.pipeline();
    let curves: Vec<_> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (o0, o1))| {
            let s0 = seed::derive(pool_seed, stream::POOL, 2 * i as u64);
            let s1 = seed::derive(pool_seed, stream::POOL, 2 * i as u64 + 1);
            Ok((
                curves_by_degree(&pipe.degrees, pipeline_silhouette(o0, &pipe, s0)?),
                curves_by_degree(&pipe.degrees, pipeline_silhouette(o1, &pipe, s1)?),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (y0, y1) = curves.into_iter().unzip();
    Ok(Pool {
        degrees: pipe.degrees.clone(),
        grid: pipe.grid,
        y0,
        y1,
    })
}

/// Fresh covariates and treatments for every unit of the pool.
pub fn draw_units(pool: &Pool, unit_seed: u64) -> Result<Vec<CounterfactualUnit>> {
    let xs = gen_covariates(pool.len(), unit_seed);
    let probs: Vec<f64> = xs.iter().map(|x| true_propensity(x)).collect();
    let a = assign_treatment(&probs, unit_seed)?;
    Ok(xs
        .into_iter()
        .zip(a)
        .enumerate()
        .map(|(i, (x, a))| CounterfactualUnit {
            x,
            a,
            y0: pool.y0[i].clone(),
            y1: pool.y1[i].clone(),
        })
        .collect())
}

/// Curves of every requested estimator and degree from one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub index: usize,
    pub seed: u64,
    pub curves: Vec<(usize, EstimatorKind, Vec<f64>)>,
}

impl ReplicateResult {
    pub fn curve(&self, d: usize, kind: EstimatorKind) -> Option<&[f64]> {
        self.curves
            .iter()
            .find(|(deg, k, _)| *deg == d && *k == kind)
            .map(|(_, _, c)| c.as_slice())
    }
}

pub fn replicate_seed(master: u64, index: usize) -> u64 {
    seed::derive(master, stream::REPLICATE, index as u64)
}

pub fn run_replicate(config: &ExperimentConfig, pool: &Pool, index: usize) -> Result<ReplicateResult> {
    let rep_seed = replicate_seed(config.seed, index);
    let units = draw_units(pool, rep_seed)?;
    let samples: Vec<_> = units.iter().map(CounterfactualUnit::observed).collect();
    let mut curves = Vec::new();
    let fitted: Vec<EstimatorKind> = config
        .estimators
        .iter()
        .copied()
        .filter(|k| *k != EstimatorKind::IpwKnownPi)
        .collect();
    if !fitted.is_empty() {
        let plan = draw_folds(&samples, config.folds, seed::derive(rep_seed, stream::FOLDS, 0))?;
        let cf = cross_fit(&samples, &pool.degrees, &plan, &config.nuisance_config())?;
        for &d in &pool.degrees {
            for &k in &fitted {
                curves.push((d, k, cf.estimate(k, &samples, d)?.curve));
            }
        }
    }
    if config.estimators.contains(&EstimatorKind::IpwKnownPi) {
        let known = KnownPropensity(true_propensity);
        for &d in &pool.degrees {
            let est = estimate_ipw(&samples, &known, d, true)?;
            curves.push((d, EstimatorKind::IpwKnownPi, est.curve));
        }
    }
    Ok(ReplicateResult {
        index,
        seed: rep_seed,
        curves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub degree: usize,
    pub estimator: EstimatorKind,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// L1 distance between the replicate-average curve and the truth.
    pub l1: f64,
    pub std: f64,
    pub replicate_l1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timings {
    pub pool_seconds: f64,
    pub replicate_seconds: f64,
    pub test_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub generator: String,
    pub grid: SummaryGrid,
    pub truth: BTreeMap<usize, Vec<f64>>,
    pub summaries: Vec<EstimatorSummary>,
    pub failed_replicates: Vec<(usize, String)>,
    pub tests: Vec<TestReport>,
    #[serde(skip)]
    pub timings: Timings,
}

impl ExperimentReport {
    pub fn summary(&self, degree: usize, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.summaries
            .iter()
            .find(|s| s.degree == degree && s.estimator == kind)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let pool = build_pool(config, seed::derive(config.seed, stream::POOL, 0))?;
    let pool_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let results: Vec<(usize, Result<ReplicateResult>)> = (0..config.replicates)
        .into_par_iter()
        .map(|k| (k, run_replicate(config, &pool, k)))
        .collect();
    let replicate_seconds = start.elapsed().as_secs_f64();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (k, r) in results {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => {
                eprintln!("replicate {k} failed: {e}");
                failed.push((k, e.to_string()));
            }
        }
    }
    if ok.is_empty() {
        return Err(Error::Degenerate("every replicate failed".into()));
    }

    let grid = pool.grid;
    let truth: BTreeMap<usize, Vec<f64>> = pool.degrees.iter().map(|&d| (d, pool.truth(d))).collect();
    let mut summaries = Vec::new();
    for &d in &pool.degrees {
        for &k in &config.estimators {
            let curves: Vec<Vec<f64>> = ok
                .iter()
                .map(|r| r.curve(d, k).expect("every replicate has every curve").to_vec())
                .collect();
            let (mean, sd) = pointwise_band(&curves);
            let replicate_l1 = curves
                .iter()
                .map(|c| l1_distance(c, &truth[&d], &grid))
                .collect::<Result<Vec<_>>>()?;
            summaries.push(EstimatorSummary {
                degree: d,
                estimator: k,
                l1: l1_distance(&mean, &truth[&d], &grid)?,
                std: if curves.len() > 1 { std_summary(&curves)? } else { 0.0 },
                mean,
                sd,
                replicate_l1,
            });
        }
    }

    let start = Instant::now();
    let tests = if config.report_tests && config.estimators.contains(&EstimatorKind::Aipw) {
        tests_on_pool(config, &pool, replicate_seed(config.seed, 0))?
    } else {
        Vec::new()
    };
    let test_seconds = start.elapsed().as_secs_f64();

    Ok(ExperimentReport {
        config: config.clone(),
        generator: seed::GENERATOR.to_string(),
        grid,
        truth,
        summaries,
        failed_replicates: failed,
        tests,
        timings: Timings {
            pool_seconds,
            replicate_seconds,
            test_seconds,
        },
    })
}

fn tests_on_pool(config: &ExperimentConfig, pool: &Pool, unit_seed: u64) -> Result<Vec<TestReport>> {
    let units = draw_units(pool, unit_seed)?;
    let samples: Vec<_> = units.iter().map(CounterfactualUnit::observed).collect();
    let plan = draw_folds(&samples, config.folds, seed::derive(unit_seed, stream::FOLDS, 0))?;
    let cf = cross_fit(&samples, &pool.degrees, &plan, &config.nuisance_config())?;
    pool.degrees
        .iter()
        .map(|&d| {
            let est = cf.aipw(&samples, d)?;
            sup_test(
                &est,
                config.alpha,
                config.bootstrap,
                config.multiplier,
                seed::derive(unit_seed, stream::BOOTSTRAP, d as u64),
            )
        })
        .collect()
}

/// One fresh dataset (outcomes, covariates, treatment) from `config.seed`,
/// then the cross-fitted AIPW sup test in every degree.
pub fn run_test(config: &ExperimentConfig) -> Result<Vec<TestReport>> {
    config.validate()?;
    let pool = build_pool(config, seed::derive(config.seed, stream::POOL, 0))?;
    tests_on_pool(config, &pool, replicate_seed(config.seed, 0))
}

/// Raw single-realisation data: both potential outcomes of every unit plus
/// its covariates and treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub seed: u64,
    pub x: Vec<Vec<f64>>,
    pub a: Vec<bool>,
    pub outcomes: Vec<(Outcome, Outcome)>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// The dataset `run_test` works on, as raw outcomes.
pub fn generate_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    config.validate()?;
    let outcomes = generate_outcome_pairs(
        config.dataset,
        config.n,
        &config.orbit,
        &config.image,
        &config.graph,
        seed::derive(config.seed, stream::POOL, 0),
    )?;
    let unit_seed = replicate_seed(config.seed, 0);
    let x = gen_covariates(config.n, unit_seed);
    let probs: Vec<f64> = x.iter().map(|v| true_propensity(v)).collect();
    let a = assign_treatment(&probs, unit_seed)?;
    Ok(Dataset {
        kind: config.dataset,
        seed: config.seed,
        x,
        a,
        outcomes,
    })
}

fn outcome_file(dir: &Path, i: usize, arm: u8) -> PathBuf {
    dir.join("outcomes").join(format!("unit{i:05}_y{arm}.csv"))
}

/// Write covariates.csv, treatment.csv, `outcomes/unitNNNNN_y{0,1}.csv` and
/// manifest.json.
pub fn write_dataset(dir: &Path, data: &Dataset, config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let outcomes_dir = dir.join("outcomes");
    std::fs::create_dir_all(&outcomes_dir).map_err(|e| Error::io(&outcomes_dir, e))?;
    let mut written = vec![dir.join("covariates.csv"), dir.join("treatment.csv")];
    io::write_covariates(&written[0], &data.x)?;
    io::write_treatment(&written[1], &data.a)?;
    for (i, (y0, y1)) in data.outcomes.iter().enumerate() {
        for (arm, y) in [(0, y0), (1, y1)] {
            let path = outcome_file(dir, i, arm);
            io::write_outcome(&path, y)?;
            written.push(path);
        }
    }
    let manifest = serde_json::json!({
        "dataset": config.dataset,
        "n": data.len(),
        "seed": data.seed,
        "generator": seed::GENERATOR,
        "version": env!("CARGO_PKG_VERSION"),
        "law": {
            "covariates": "two Gaussian subgroups, diagonal variance 0.5",
            "subgroup_means": [crate::datagen::SUBGROUP_MEAN_1, crate::datagen::SUBGROUP_MEAN_2],
            "propensity": "expit(-0.5 x1 - 0.1 x2 + 0.6 x3 + 0.1 x4 + 0.1 x5 + 0.5 x2 x3 - 0.7 x1 x3)",
        },
        "seeds": {
            "outcomes": seed::derive(data.seed, stream::POOL, 0),
            "units": replicate_seed(data.seed, 0),
        },
        "outcome_files": "outcomes/unitNNNNN_y0.csv and outcomes/unitNNNNN_y1.csv",
        "config": config,
    });
    let path = dir.join("manifest.json");
    write_file(&path, serde_json::to_string_pretty(&manifest).expect("manifest serialises").as_bytes())?;
    written.push(path);
    Ok(written)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let parse = |msg: String| Error::Parse {
        path: path.display().to_string(),
        msg,
    };
    let manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
    let kind: DatasetKind = serde_json::from_value(manifest["dataset"].clone()).map_err(|e| parse(e.to_string()))?;
    let seed_value = manifest["seed"].as_u64().ok_or_else(|| parse("missing seed".into()))?;
    let x = io::read_covariates(&dir.join("covariates.csv"))?;
    let a = io::read_treatment(&dir.join("treatment.csv"))?;
    if x.len() != a.len() {
        return Err(parse(format!("{} covariate rows but {} treatments", x.len(), a.len())));
    }
    let outcome_kind = match kind {
        DatasetKind::Orbit => io::OutcomeKind::Cloud,
        DatasetKind::SynthImage => io::OutcomeKind::Image,
        DatasetKind::SynthGraph => io::OutcomeKind::Graph,
    };
    let outcomes = (0..a.len())
        .map(|i| {
            Ok((
                io::read_outcome(&outcome_file(dir, i, 0), outcome_kind)?,
                io::read_outcome(&outcome_file(dir, i, 1), outcome_kind)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        kind,
        seed: seed_value,
        x,
        a,
        outcomes,
    })
}

/// Silhouettes of a dataset, as the pool plus the observed samples.
pub fn dataset_samples(config: &ExperimentConfig, data: &Dataset) -> Result<(Pool, Vec<CausalSample>)> {
    let pool = pool_from_outcomes(config, &data.outcomes, seed::derive(data.seed, stream::POOL, 0))?;
    let samples = data
        .x
        .iter()
        .zip(&data.a)
        .enumerate()
        .map(|(i, (x, &a))| CausalSample {
            x: x.clone(),
            a,
            y: if a { pool.y1[i].clone() } else { pool.y0[i].clone() },
        })
        .collect();
    Ok((pool, samples))
}

/// One estimator on one dataset. Fitted nuisances are cross-fitted.
pub fn estimate_on_samples(
    config: &ExperimentConfig,
    samples: &[CausalSample],
    kind: EstimatorKind,
    d: usize,
    seed_value: u64,
) -> Result<EffectEstimate> {
    if kind == EstimatorKind::IpwKnownPi {
        return estimate_ipw(samples, &KnownPropensity(true_propensity), d, true);
    }
    let plan = draw_folds(samples, config.folds, seed::derive(seed_value, stream::FOLDS, 0))?;
    let cf = cross_fit(samples, &[d], &plan, &config.nuisance_config())?;
    cf.estimate(kind, samples, d)
}

/// Sup tests in every degree of the config on an existing dataset.
pub fn dataset_tests(config: &ExperimentConfig, data: &Dataset) -> Result<Vec<TestReport>> {
    let (pool, samples) = dataset_samples(config, data)?;
    let unit_seed = replicate_seed(data.seed, 0);
    let plan = draw_folds(&samples, config.folds, seed::derive(unit_seed, stream::FOLDS, 0))?;
    let cf = cross_fit(&samples, &pool.degrees, &plan, &config.nuisance_config())?;
    pool.degrees
        .iter()
        .map(|&d| {
            sup_test(
                &cf.aipw(&samples, d)?,
                config.alpha,
                config.bootstrap,
                config.multiplier,
                seed::derive(unit_seed, stream::BOOTSTRAP, d as u64),
            )
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn dataset_name(kind: DatasetKind) -> &'static str {
    match kind {
        DatasetKind::Orbit => "orbit",
        DatasetKind::SynthImage => "synth-image",
        DatasetKind::SynthGraph => "synth-graph",
    }
}

/// Write the summary table, the full JSON report, one band file per
/// estimator and degree, and the timings (kept apart since they vary).
pub fn emit_report(report: &ExperimentReport, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    let name = dataset_name(report.config.dataset);

    let mut table = String::from("dataset,degree,estimator,l1_dist,std\n");
    for s in &report.summaries {
        table.push_str(&format!(
            "{name},{},{},{:e},{:e}\n",
            s.degree,
            s.estimator.name(),
            s.l1,
            s.std
        ));
    }
    let path = out.join("table.csv");
    write_file(&path, table.as_bytes())?;
    written.push(path);

    let path = out.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    write_file(&path, json.as_bytes())?;
    written.push(path);

    let ts = report.grid.points();
    for s in &report.summaries {
        let truth = &report.truth[&s.degree];
        let mut band = String::from("t,truth,mean,lower,upper\n");
        for i in 0..ts.len() {
            band.push_str(&format!(
                "{},{},{},{},{}\n",
                ts[i],
                truth[i],
                s.mean[i],
                s.mean[i] - s.sd[i],
                s.mean[i] + s.sd[i]
            ));
        }
        let path = out.join(format!(
            "band_h{}_{}.csv",
            s.degree,
            s.estimator.name().to_lowercase()
        ));
        write_file(&path, band.as_bytes())?;
        written.push(path);
    }

    let path = out.join("timings.json");
    let json = serde_json::to_string_pretty(&report.timings).expect("timings serialise");
    write_file(&path, json.as_bytes())?;
    written.push(path);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset: DatasetKind,
    pub units: usize,
    pub outcomes: usize,
    /// `(stage, seconds)` in pipeline order.
    pub stages: Vec<(String, f64)>,
    pub total: f64,
}

/// Sequential wall-clock timings of every pipeline stage on one dataset.
pub fn benchmark_runtime(config: &ExperimentConfig) -> Result<BenchReport> {
    config.validate()?;
    let pipe = config.pipeline();
    let pool_seed = seed::derive(config.seed, stream::POOL, 0);
    let total_start = Instant::now();

    let t = Instant::now();
    let pairs = generate_outcome_pairs(
        config.dataset,
        config.n,
        &config.orbit,
        &config.image,
        &config.graph,
        pool_seed,
    )?;
    let generate = t.elapsed().as_secs_f64();

    let (mut filtration, mut persistence, mut summary) = (0.0, 0.0, 0.0);
    let mut y0 = Vec::with_capacity(pairs.len());
    let mut y1 = Vec::with_capacity(pairs.len());
    for (i, (o0, o1)) in pairs.iter().enumerate() {
        for (arm, o) in [(0u64, o0), (1, o1)] {
            let t = Instant::now();
            let complex = build_complex(o, pipe.filtration)?;
            filtration += t.elapsed().as_secs_f64();
            let t = Instant::now();
            let diagrams = complex_diagrams(&complex, &pipe, seed::derive(pool_seed, stream::POOL, 2 * i as u64 + arm))?;
            persistence += t.elapsed().as_secs_f64();
            let t = Instant::now();
            let curves = diagrams
                .iter()
                .map(|d| silhouette(d, pipe.r, &pipe.grid))
                .collect::<Result<Vec<_>>>()?;
            summary += t.elapsed().as_secs_f64();
            let map = curves_by_degree(&pipe.degrees, curves);
            if arm == 0 {
                y0.push(map);
            } else {
                y1.push(map);
            }
        }
    }
    let pool = Pool {
        degrees: pipe.degrees.clone(),
        grid: pipe.grid,
        y0,
        y1,
    };

    let t = Instant::now();
    let units = draw_units(&pool, replicate_seed(config.seed, 0))?;
    let samples: Vec<_> = units.iter().map(CounterfactualUnit::observed).collect();
    let plan = draw_folds(&samples, config.folds, 0)?;
    let cf = cross_fit(&samples, &pool.degrees, &plan, &config.nuisance_config())?;
    for &d in &pool.degrees {
        cf.aipw(&samples, d)?;
    }
    let estimation = t.elapsed().as_secs_f64();

    Ok(BenchReport {
        dataset: config.dataset,
        units: config.n,
        outcomes: 2 * pairs.len(),
        stages: vec![
            ("generate".into(), generate),
            ("filtration".into(), filtration),
            ("persistence".into(), persistence),
            ("silhouette".into(), summary),
            ("estimation".into(), estimation),
        ],
        total: total_start.elapsed().as_secs_f64(),
    })
}
