//! Fit the propensity and the functional outcome regression on one ORBIT
//! dataset and inspect them.

use topocause::harness::{correct_features, dataset_samples, generate_dataset, ExperimentConfig};
use topocause::nuisance::{fit_outcome, fit_propensity, Propensity};
use topocause::datagen::true_propensity;

fn main() -> topocause::Result<()> {
    let config = ExperimentConfig { n: 200, ..ExperimentConfig::default() };
    let data = generate_dataset(&config)?;
    let (_, samples) = dataset_samples(&config, &data)?;

    let prop = fit_propensity(&samples, &correct_features(), 0.01, 100, 1e-8)?;
    let err = samples
        .iter()
        .map(|s| (prop.prob(&s.x) - true_propensity(&s.x)).abs())
        .sum::<f64>()
        / samples.len() as f64;
    println!("propensity: {} IRLS steps, converged {}, mean |error| {err:.3}", prop.iterations, prop.converged);

    let model = fit_outcome(&samples, 1, 3, 1e-6)?;
    for arm in [false, true] {
        let scores = model.scores(arm, &samples[0].x);
        println!("arm {}: basis scores at unit 0 {:?}", arm as u8, scores);
    }
    Ok(())
}
