//! Closed-form bias and variance under fixed nuisance deviations, next to a
//! Monte Carlo estimate.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;
use topocause::estimate::{
    estimate_aipw_with, estimate_ipw, estimate_pi, EstimatorKind,
};
use topocause::nuisance::{expit, CausalSample};
use topocause::oracle::{bias_oracle, variance_oracle, DeviatedNuisances, NuisanceDeviation, TrueLaw};
use topocause::summary::{SilhouetteCurve, SummaryGrid};

fn main() -> topocause::Result<()> {
    let grid = SummaryGrid::new(0.0, 1.0, 3)?;
    let g = grid.n_points;
    let mut rng = topocause::seed::rng(5);
    let draws: Vec<Vec<f64>> = (0..20000).map(|_| vec![StandardNormal.sample(&mut rng)]).collect();
    let law = TrueLaw {
        mu: [
            Box::new(move |x: &[f64]| vec![1.0 + 0.3 * x[0]; g]),
            Box::new(move |x: &[f64]| vec![1.5 + 0.3 * x[0]; g]),
        ],
        sigma2: [Box::new(move |_: &[f64]| vec![0.25; g]), Box::new(move |_: &[f64]| vec![0.25; g])],
        pi: Box::new(|x: &[f64]| 0.2 + 0.5 * expit(x[0])),
        covariates: draws.clone(),
    };
    let dev = NuisanceDeviation::constant([0.0, 0.1], [0.0, 0.2], g);
    let samples: Vec<CausalSample> = draws
        .iter()
        .map(|x| {
            let a = rng.random::<f64>() < (law.pi)(x);
            let noise: f64 = StandardNormal.sample(&mut rng);
            let mean = (law.mu[a as usize])(x);
            let values = mean.iter().map(|m| m + 0.5 * noise).collect();
            let curve = SilhouetteCurve { grid, values, r: 1.0, empty_diagram: false };
            CausalSample { x: x.clone(), a, y: BTreeMap::from([(0, curve)]) }
        })
        .collect();
    let nuis = DeviatedNuisances { law: &law, dev: &dev };
    let truth = law.effect();
    for kind in [EstimatorKind::Aipw, EstimatorKind::Pi, EstimatorKind::Ipw] {
        let est = match kind {
            EstimatorKind::Aipw => estimate_aipw_with(&samples, &nuis, &nuis, 0)?,
            EstimatorKind::Pi => estimate_pi(&samples, &nuis, 0)?,
            _ => estimate_ipw(&samples, &nuis, 0, false)?,
        };
        let bias = bias_oracle(kind, &dev, &law)?[0];
        let var = variance_oracle(kind, &dev, &law, samples.len())?;
        println!(
            "{:<5} closed-form bias {bias:+.4}  Monte Carlo {:+.4}  sd {:.4}",
            kind.name(),
            est.curve[0] - truth[0],
            var.total[0].sqrt()
        );
    }
    Ok(())
}
