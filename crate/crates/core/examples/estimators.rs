//! PI, IPW and AIPW on one ORBIT dataset, scored against the sample truth.

use topocause::estimate::{l1_distance, EstimatorKind};
use topocause::harness::{dataset_samples, estimate_on_samples, generate_dataset, ExperimentConfig};

fn main() -> topocause::Result<()> {
    let config = ExperimentConfig::default();
    let data = generate_dataset(&config)?;
    let (pool, samples) = dataset_samples(&config, &data)?;
    for d in [0, 1] {
        let truth = pool.truth(d);
        for kind in [EstimatorKind::Pi, EstimatorKind::Ipw, EstimatorKind::IpwKnownPi, EstimatorKind::Aipw] {
            let est = estimate_on_samples(&config, &samples, kind, d, config.seed)?;
            println!("H{d} {:<12} L1 = {:.3e}", kind.name(), l1_distance(&est.curve, &truth, &est.grid)?);
        }
    }
    Ok(())
}
