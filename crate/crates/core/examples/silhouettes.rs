//! Silhouettes at several powers next to the first two landscapes.

use topocause::persistence::PersistenceDiagram;
use topocause::summary::{landscape, silhouette, SummaryGrid};

fn main() -> topocause::Result<()> {
    let diag = PersistenceDiagram::from_pairs(1, &[(0.0, 2.0), (0.5, 4.0), (1.0, 1.4)]);
    let grid = SummaryGrid::new(0.0, 4.0, 9)?;
    println!("t      {}", fmt(&grid.points()));
    for r in [0.1, 1.0, 3.0] {
        println!("r={r:<4} {}", fmt(&silhouette(&diag, r, &grid)?.values));
    }
    for k in [1, 2] {
        println!("lam{k}   {}", fmt(&landscape(&diag, k, &grid)?.values));
    }
    let empty = silhouette(&PersistenceDiagram::empty(1), 1.0, &grid)?;
    println!("empty diagram flagged: {}", empty.empty_diagram);
    Ok(())
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:6.3}")).collect::<Vec<_>>().join(" ")
}
