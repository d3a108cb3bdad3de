//! Persistence diagrams of a noisy circle, with the two H0 algorithms
//! compared and immortal classes capped three ways.

use rand::Rng;
use topocause::complex::{build_alpha_2d, PointCloud};
use topocause::persistence::{
    cap_infinite_deaths, compute_h0_unionfind, compute_persistence, write_diagrams_csv, CapMode,
};

fn main() -> topocause::Result<()> {
    let mut rng = topocause::seed::rng(11);
    let points = (0..60)
        .map(|_| {
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            let r = 1.0 + 0.05 * (rng.random::<f64>() - 0.5);
            vec![r * a.cos(), r * a.sin()]
        })
        .collect();
    let complex = build_alpha_2d(&PointCloud::new(points)?)?;
    let diagrams = compute_persistence(&complex, 1)?;
    let h1 = diagrams[1].sorted();
    let top = h1.iter().map(|p| p.persistence()).fold(0.0, f64::max);
    println!("H1 has {} points; the circle lives for {top:.3}", h1.len());

    let uf = compute_h0_unionfind(&complex)?;
    println!("union-find H0 equals reduction H0: {}", uf.sorted() == diagrams[0].sorted());

    for mode in [CapMode::Drop, CapMode::Fixed { cap: 2.0 }, CapMode::Uniform { lo: 1.5, hi: 2.5, seed: 3 }] {
        let capped = cap_infinite_deaths(&diagrams[0], mode)?;
        println!("{mode:?}: {} H0 points, finite = {}", capped.len(), !capped.has_infinite());
    }

    let mut csv = Vec::new();
    write_diagrams_csv(&mut csv, &diagrams)?;
    let text = String::from_utf8(csv).expect("utf-8");
    println!("first CSV lines:\n{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
