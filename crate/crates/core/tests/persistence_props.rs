mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use topocause::complex::{build_rips, FilteredComplex, PointCloud};
use topocause::persistence::{compute_h0_unionfind, compute_persistence};
use topocause::seed;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduction_matches_oracle(s in any::<u64>()) {
        let k = common::random_simplicial(&mut seed::rng(s));
        let ours = compute_persistence(&k, 2).unwrap();
        let oracle = common::betti_oracle(k.cells(), 2);
        for d in 0..=2 {
            prop_assert_eq!(common::as_pairs(&ours[d]), oracle[d].clone());
        }
    }

    #[test]
    fn union_find_matches_reduction(s in any::<u64>()) {
        let k = common::random_simplicial(&mut seed::rng(s));
        let uf = compute_h0_unionfind(&k).unwrap();
        let red = compute_persistence(&k, 0).unwrap();
        prop_assert_eq!(uf.sorted(), red[0].sorted());
    }

    #[test]
    fn euler_characteristic_matches_betti_sum(s in any::<u64>()) {
        let k = common::random_simplicial(&mut seed::rng(s));
        let diagrams = compute_persistence(&k, 2).unwrap();
        let mut ts: Vec<f64> = k.cells().iter().map(|c| c.value).collect();
        ts.extend(ts.clone().iter().map(|t| t + 0.5));
        for t in ts {
            let alive: i64 = diagrams
                .iter()
                .map(|d| {
                    let count = d.points.iter().filter(|p| p.birth <= t && p.death > t).count() as i64;
                    if d.dim % 2 == 0 { count } else { -count }
                })
                .sum();
            prop_assert_eq!(alive, k.euler_characteristic_at(t));
        }
    }

    #[test]
    fn cell_order_does_not_matter(s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let k = common::random_simplicial(&mut rng);
        let mut cells = k.cells().to_vec();
        cells.shuffle(&mut rng);
        let shuffled = FilteredComplex::simplicial(cells).unwrap();
        prop_assert_eq!(shuffled.cells(), k.cells());
        prop_assert_eq!(compute_persistence(&shuffled, 2).unwrap(), compute_persistence(&k, 2).unwrap());
    }

    #[test]
    fn point_order_does_not_matter(
        pts in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 3..16),
        s in any::<u64>(),
    ) {
        let mut pts: Vec<Vec<f64>> = pts.into_iter().map(|(x, y)| vec![x, y]).collect();
        let before = compute_persistence(&build_rips(&PointCloud::new(pts.clone()).unwrap(), 2, 0.6).unwrap(), 1).unwrap();
        pts.shuffle(&mut seed::rng(s));
        let after = compute_persistence(&build_rips(&PointCloud::new(pts).unwrap(), 2, 0.6).unwrap(), 1).unwrap();
        for d in 0..=1 {
            prop_assert_eq!(before[d].sorted(), after[d].sorted());
        }
    }

    #[test]
    fn diagram_points_lie_above_the_diagonal(s in any::<u64>()) {
        let k = common::random_simplicial(&mut seed::rng(s));
        for d in compute_persistence(&k, 2).unwrap() {
            prop_assert!(d.points.iter().all(|p| p.birth < p.death && p.birth.is_finite()));
        }
    }
}
