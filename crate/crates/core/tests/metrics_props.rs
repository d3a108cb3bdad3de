mod common;

use proptest::prelude::*;
use topocause::metrics::{stability_check, wasserstein, wasserstein_bruteforce};
use topocause::persistence::{DiagramPoint, PersistenceDiagram};
use topocause::seed;
use topocause::summary::SummaryGrid;

fn w1(a: &PersistenceDiagram, b: &PersistenceDiagram) -> f64 {
    wasserstein(a, b, 1.0).unwrap().0
}

fn linf(p: DiagramPoint, q: DiagramPoint) -> f64 {
    (p.birth - q.birth).abs().max((p.death - q.death).abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_axioms(s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let a = common::random_diagram(&mut rng, 1, 6, 1.0);
        let b = common::random_diagram(&mut rng, 1, 6, 1.0);
        let c = common::random_diagram(&mut rng, 1, 6, 1.0);
        prop_assert_eq!(w1(&a, &a), 0.0);
        prop_assert!((w1(&a, &b) - w1(&b, &a)).abs() <= 1e-9);
        prop_assert!(w1(&a, &c) <= w1(&a, &b) + w1(&b, &c) + 1e-9);
        let mut padded = a.clone();
        padded.points.push(DiagramPoint::new(0.3, 0.3));
        prop_assert!(w1(&a, &padded) <= 1e-12);
    }

    #[test]
    fn matches_brute_force(s in any::<u64>(), q in prop::sample::select(vec![1.0, 2.0])) {
        let mut rng = seed::rng(s);
        let a = common::random_diagram(&mut rng, 1, 4, 1.0);
        let b = common::random_diagram(&mut rng, 1, 4, 1.0);
        let (w, _) = wasserstein(&a, &b, q).unwrap();
        prop_assert!((w - wasserstein_bruteforce(&a, &b, q).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn matching_covers_each_point_once(s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let a = common::random_diagram(&mut rng, 1, 8, 1.0);
        let b = common::random_diagram(&mut rng, 1, 8, 1.0);
        let (w, m) = wasserstein(&a, &b, 1.0).unwrap();
        let mut left: Vec<usize> = m.pairs.iter().filter_map(|p| p.left).collect();
        let mut right: Vec<usize> = m.pairs.iter().filter_map(|p| p.right).collect();
        left.sort_unstable();
        right.sort_unstable();
        prop_assert_eq!(left, (0..a.len()).collect::<Vec<_>>());
        prop_assert_eq!(right, (0..b.len()).collect::<Vec<_>>());
        let largest = m
            .pairs
            .iter()
            .map(|p| match (p.left, p.right) {
                (Some(i), Some(j)) => linf(a.points[i], b.points[j]),
                (Some(i), None) => a.points[i].persistence() / 2.0,
                (None, Some(j)) => b.points[j].persistence() / 2.0,
                (None, None) => 0.0,
            })
            .fold(0.0, f64::max);
        prop_assert!(largest <= w + 1e-12);
    }

    #[test]
    fn silhouette_stability(s in any::<u64>(), r in prop::sample::select(vec![0.1, 0.5, 1.0, 2.0, 3.0])) {
        let mut rng = seed::rng(s);
        let a = common::random_diagram(&mut rng, 1, 6, 1.0);
        let b = common::random_diagram(&mut rng, 1, 6, 1.0);
        let g = SummaryGrid::new(0.0, 2.0, 201).unwrap();
        let cert = stability_check(&a, &b, r, &g).unwrap();
        prop_assert!(cert.satisfied);
        prop_assert_eq!(cert.satisfied, cert.sup_diff <= cert.bound + 1e-9);
    }
}
