//! Sup-norm test of no effect, on the ORBIT data and on a null image design.

use topocause::datagen::DatasetKind;
use topocause::harness::{run_test, ExperimentConfig};

fn main() -> topocause::Result<()> {
    let orbit = ExperimentConfig::default();
    let mut null = ExperimentConfig::for_dataset(DatasetKind::SynthImage);
    null.image.mix = 0.0;
    for (name, config) in [("orbit", orbit), ("image, mix 0", null)] {
        for r in run_test(&config)? {
            println!(
                "{name:<13} H{}: T_n = {:.4}, c = {:.4}, reject = {}",
                r.degree, r.t_n, r.critical_value, r.reject
            );
        }
    }
    Ok(())
}
