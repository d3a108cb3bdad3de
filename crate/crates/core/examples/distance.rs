//! Wasserstein distance with its optimal matching, checked against brute
//! force, and the silhouette stability certificate at three powers.

use topocause::metrics::{stability_check, wasserstein, wasserstein_bruteforce};
use topocause::persistence::PersistenceDiagram;
use topocause::summary::SummaryGrid;

fn main() -> topocause::Result<()> {
    let d1 = PersistenceDiagram::from_pairs(1, &[(0.0, 2.0), (1.0, 3.0), (0.2, 0.5)]);
    let d2 = PersistenceDiagram::from_pairs(1, &[(0.1, 2.2), (1.5, 2.5)]);
    let (w, matching) = wasserstein(&d1, &d2, 1.0)?;
    let brute = wasserstein_bruteforce(&d1, &d2, 1.0)?;
    println!("W1 = {w:.6} (brute force {brute:.6})");
    for p in &matching.pairs {
        println!("  {:?} -> {:?}", p.left, p.right);
    }
    let grid = SummaryGrid::new(0.0, 3.0, 301)?;
    for r in [0.1, 1.0, 3.0] {
        let c = stability_check(&d1, &d2, r, &grid)?;
        println!(
            "r = {r}: sup|diff| = {:.4} <= bound {:.4} (c = {:.4}): {}",
            c.sup_diff, c.bound, c.c, c.satisfied
        );
    }
    Ok(())
}
