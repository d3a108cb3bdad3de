mod common;

use proptest::prelude::*;
use topocause::persistence::{DiagramPoint, PersistenceDiagram};
use topocause::seed;
use topocause::summary::{landscape, silhouette, tent_eval, SummaryGrid};

const POWERS: [f64; 4] = [0.1, 1.0, 3.0, 7.5];

fn grid() -> SummaryGrid {
    SummaryGrid::new(0.0, 2.0, 161).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn increments_bounded_by_spacing(s in any::<u64>(), r in 0.05..8.0f64) {
        let diag = common::random_diagram(&mut seed::rng(s), 1, 10, 1.0);
        let g = grid();
        let phi = silhouette(&diag, r, &g).unwrap();
        for w in phi.values.windows(2) {
            prop_assert!((w[1] - w[0]).abs() <= g.spacing() + 1e-12);
        }
    }

    #[test]
    fn bounded_by_the_highest_tent(s in any::<u64>()) {
        let diag = common::random_diagram(&mut seed::rng(s), 1, 10, 1.0);
        let g = grid();
        let half_max = diag.max_persistence() / 2.0;
        let top = landscape(&diag, 1, &g).unwrap();
        for r in POWERS {
            let phi = silhouette(&diag, r, &g).unwrap();
            for (i, &v) in phi.values.iter().enumerate() {
                let t = g.point(i);
                let tent_max = diag.points.iter().map(|&p| tent_eval(p, t).unwrap()).fold(0.0, f64::max);
                prop_assert!(v >= 0.0);
                prop_assert!(v <= tent_max + 1e-12);
                prop_assert!(tent_max <= half_max + 1e-12);
                prop_assert!(top.values[i] >= v - 1e-12);
            }
        }
    }

    #[test]
    fn landscapes_are_ordered(s in any::<u64>()) {
        let diag = common::random_diagram(&mut seed::rng(s), 1, 8, 1.0);
        let g = grid();
        let curves: Vec<Vec<f64>> = (1..=diag.len() + 2).map(|k| landscape(&diag, k, &g).unwrap().values).collect();
        for pair in curves.windows(2) {
            prop_assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| a >= b));
        }
        prop_assert!(curves.last().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn translation_shifts_the_curve(s in any::<u64>(), c in -0.5..0.5f64) {
        let diag = common::random_diagram(&mut seed::rng(s), 1, 8, 1.0);
        let moved: Vec<DiagramPoint> = diag.points.iter().map(|p| DiagramPoint::new(p.birth + c, p.death + c)).collect();
        let moved = PersistenceDiagram::new(1, moved);
        let g = grid();
        let shifted = SummaryGrid::new(g.t_min + c, g.t_max + c, g.n_points).unwrap();
        for r in POWERS {
            let a = silhouette(&diag, r, &g).unwrap();
            let b = silhouette(&moved, r, &shifted).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn scaling_scales_the_curve(s in any::<u64>(), k in 0.1..10.0f64) {
        let diag = common::random_diagram(&mut seed::rng(s), 1, 8, 1.0);
        let scaled: Vec<DiagramPoint> = diag.points.iter().map(|p| DiagramPoint::new(k * p.birth, k * p.death)).collect();
        let scaled = PersistenceDiagram::new(1, scaled);
        let g = grid();
        let stretched = SummaryGrid::new(k * g.t_min, k * g.t_max, g.n_points).unwrap();
        for r in POWERS {
            let a = silhouette(&diag, r, &g).unwrap();
            let b = silhouette(&scaled, r, &stretched).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((k * x - y).abs() <= 1e-9 * k.max(1.0));
            }
        }
    }
}

#[test]
fn empty_diagram_gives_flagged_zero_curve() {
    let phi = silhouette(&PersistenceDiagram::empty(1), 1.0, &grid()).unwrap();
    assert!(phi.empty_diagram);
    assert!(phi.values.iter().all(|&v| v == 0.0));
}
