use proptest::prelude::*;
use topocause::datagen::{
    assign_treatment, gen_covariates, gen_orbit, generate_outcome_pairs, true_propensity, DatasetKind, GraphSpec,
    ImageSpec, OrbitOrder, OrbitSpec,
};
use topocause::harness::{build_pool, draw_units, ExperimentConfig};

fn small_orbit() -> OrbitSpec {
    OrbitSpec {
        points: 40,
        ..OrbitSpec::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propensities_stay_inside_the_unit_interval(n in 1..2000usize, s in any::<u64>()) {
        let probs: Vec<f64> = gen_covariates(n, s).iter().map(|x| true_propensity(x)).collect();
        let lo = probs.iter().copied().fold(1.0, f64::min);
        let hi = probs.iter().copied().fold(0.0, f64::max);
        prop_assert!(lo > 0.0 && hi < 1.0);
        prop_assert!(assign_treatment(&probs, s).is_ok());
    }

    #[test]
    fn covariates_are_finite_and_reproducible(n in 1..200usize, s in any::<u64>()) {
        let xs = gen_covariates(n, s);
        prop_assert_eq!(xs.len(), n);
        prop_assert!(xs.iter().all(|x| x.len() == 5 && x.iter().all(|v| v.is_finite())));
        prop_assert_eq!(xs, gen_covariates(n, s));
    }

    #[test]
    fn treatment_leaves_potential_outcomes_untouched(s in any::<u64>(), t1 in any::<u64>(), t2 in any::<u64>()) {
        let kind = DatasetKind::SynthGraph;
        let (orbit, image, graph) = (small_orbit(), ImageSpec::default(), GraphSpec::default());
        let before = generate_outcome_pairs(kind, 12, &orbit, &image, &graph, s).unwrap();
        let xs = gen_covariates(12, t1);
        let probs: Vec<f64> = xs.iter().map(|x| true_propensity(x)).collect();
        for t in [t1, t2] {
            assign_treatment(&probs, t).unwrap();
            let after = generate_outcome_pairs(kind, 12, &orbit, &image, &graph, s).unwrap();
            prop_assert_eq!(&before, &after);
        }
    }

    #[test]
    fn orbits_live_on_the_torus(s in 0.5..6.0f64, seed_value in any::<u64>()) {
        for order in [OrbitOrder::Sequential, OrbitOrder::Simultaneous] {
            let cloud = gen_orbit(s, 50, seed_value, order).unwrap();
            prop_assert_eq!(cloud.len(), 50);
            prop_assert!(cloud.points().iter().flatten().all(|v| (0.0..1.0).contains(v)));
        }
    }
}

#[test]
fn observed_outcome_is_the_selected_potential_outcome() {
    let mut config = ExperimentConfig::for_dataset(DatasetKind::SynthGraph);
    config.n = 40;
    let pool = build_pool(&config, 11).unwrap();
    for unit_seed in [1, 2, 3] {
        let units = draw_units(&pool, unit_seed).unwrap();
        for (i, u) in units.iter().enumerate() {
            let observed = u.observed();
            let want = if u.a { &pool.y1[i] } else { &pool.y0[i] };
            assert_eq!(&observed.y, want);
            assert_eq!(observed.x, u.x);
            assert_eq!(u.y0, pool.y0[i]);
            assert_eq!(u.y1, pool.y1[i]);
        }
    }
}

#[test]
fn boundary_probabilities_are_rejected() {
    assert!(assign_treatment(&[0.5, 1.0], 1).is_err());
    assert!(assign_treatment(&[0.0], 1).is_err());
    assert!(assign_treatment(&[f64::NAN], 1).is_err());
}

#[test]
fn pool_truth_is_the_mean_difference() {
    let mut config = ExperimentConfig::for_dataset(DatasetKind::SynthImage);
    config.n = 30;
    let pool = build_pool(&config, 5).unwrap();
    for &d in &pool.degrees {
        let truth = pool.truth(d);
        for (t, v) in truth.iter().enumerate() {
            let direct = (0..pool.len()).map(|i| pool.y1[i][&d].values[t] - pool.y0[i][&d].values[t]).sum::<f64>()
                / pool.len() as f64;
            assert!((v - direct).abs() < 1e-12);
        }
    }
}
