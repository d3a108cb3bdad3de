//! Round trip of every outcome file format through a temporary directory.

use topocause::complex::{ImageGrid, NodeWeightedGraph, PointCloud};
use topocause::io;

fn main() -> topocause::Result<()> {
    let dir = std::env::temp_dir().join("topocause-io-example");
    std::fs::create_dir_all(&dir).map_err(|e| topocause::Error::Io { path: dir.clone(), source: e })?;

    let cloud = PointCloud::new(vec![vec![0.0, 1.0], vec![2.5, -1.0]])?;
    io::write_point_cloud(&dir.join("cloud.csv"), &cloud)?;
    println!("cloud round trip: {}", io::read_point_cloud(&dir.join("cloud.csv"))? == cloud);

    let pgm = dir.join("image.pgm");
    std::fs::write(&pgm, "P2\n2 2\n255\n0 255\n128 64\n").map_err(|e| topocause::Error::Io { path: pgm.clone(), source: e })?;
    let image: ImageGrid = io::read_image(&pgm)?;
    println!("PGM pixels rescaled: {:?}", image.values());

    let graph = NodeWeightedGraph::new(vec![0.5, 1.0, 2.0], vec![(0, 1), (1, 2), (0, 2)])?;
    io::write_graph(&dir.join("graph.csv"), &graph)?;
    println!("graph round trip: {}", io::read_graph(&dir.join("graph.csv"))? == graph);
    Ok(())
}
