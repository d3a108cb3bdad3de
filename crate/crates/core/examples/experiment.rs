//! A small replicated experiment written to a temporary directory.

use topocause::datagen::DatasetKind;
use topocause::harness::{emit_report, run_experiment, ExperimentConfig, Scenario};

fn main() -> topocause::Result<()> {
    let out = std::env::temp_dir().join("topocause-experiment-example");
    for scenario in [Scenario::None, Scenario::MisPi, Scenario::MisMu] {
        let config = ExperimentConfig {
            dataset: DatasetKind::Orbit,
            replicates: 10,
            scenario,
            report_tests: scenario == Scenario::None,
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&config)?;
        println!("{scenario:?}");
        for s in report.summaries.iter().filter(|s| s.degree == 1) {
            println!("  {:<5} L1 = {:.3e}  std = {:.3e}", s.estimator.name(), s.l1, s.std);
        }
        if scenario == Scenario::None {
            let files = emit_report(&report, &out)?;
            println!("  wrote {} files under {}", files.len(), out.display());
        }
    }
    Ok(())
}
