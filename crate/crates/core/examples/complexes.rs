//! Build each kind of filtered complex and report its size and Euler
//! characteristic at a few filtration values.

use topocause::complex::{
    build_alpha_2d, build_cubical_sublevel, build_graph_sublevel, build_rips, FilteredComplex,
    ImageGrid, NodeWeightedGraph, PointCloud,
};

fn describe(name: &str, k: &FilteredComplex, ts: &[f64]) {
    let mut counts = [0usize; 3];
    for c in k.cells() {
        counts[c.dim.min(2)] += 1;
    }
    print!("{name:<8} cells by dim {counts:?}");
    for &t in ts {
        print!("  chi({t}) = {}", k.euler_characteristic_at(t));
    }
    println!();
}

fn main() -> topocause::Result<()> {
    let square = PointCloud::new(vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
    ])?;
    describe("rips", &build_rips(&square, 2, f64::INFINITY)?, &[0.0, 0.5, 0.8]);
    describe("alpha", &build_alpha_2d(&square)?, &[0.0, 0.5, 0.8]);

    let image = ImageGrid::new(3, 3, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])?;
    describe("cubical", &build_cubical_sublevel(&image)?, &[0.0, 1.0]);

    let graph = NodeWeightedGraph::new(vec![1.0, 2.0, 3.0, 0.5], vec![(0, 1), (1, 2), (2, 0), (2, 3)])?;
    println!("graph: {} components, cycle rank {}", graph.component_count(), graph.cycle_rank());
    describe("graph", &build_graph_sublevel(&graph)?, &[1.0, 3.0]);
    Ok(())
}
