//! Filtered complexes built from raw outcomes.
//!
//! Three families of input are supported: point clouds (Vietoris–Rips and
//! planar alpha filtrations), grayscale images (sublevel filtration on the
//! cubical complex whose vertices are pixels), and node-weighted graphs
//! (sublevel filtration where an edge enters at the larger endpoint weight).
//!
//! Filtration values for point clouds are stored in radius units: an edge
//! between points at distance `d` enters at `d / 2`, which makes Rips and
//! alpha diagrams directly comparable.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("point cloud"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::invalid(format!(
                    "mixed point dimensions {} and {}",
                    dim,
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("point cloud coordinates"));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.points[i]
            .iter()
            .zip(&self.points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("image"));
        }
        if rows * cols != values.len() {
            return Err(Error::invalid(format!(
                "image is {rows}x{cols} but has {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image intensities"));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeWeightedGraph {
    node_weights: Vec<f64>,
    edges: Vec<(usize, usize)>,
}

impl NodeWeightedGraph {
    /// Validates indices, rejects self loops and duplicate (unordered) edges.
    pub fn new(node_weights: Vec<f64>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if node_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("node weights"));
        }
        let n = node_weights.len();
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            for idx in [u, v] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, len: n });
                }
            }
            if u == v {
                return Err(Error::invalid(format!("self loop at node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Self {
            node_weights,
            edges,
        })
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.node_weights.len()
    }

    /// Number of connected components (isolated nodes count).
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.node_count()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.node_count();
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
                components -= 1;
            }
        }
        components
    }

    /// First Betti number `E - V + C`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + self.component_count() - self.node_count()
    }
}

/// A simplex or an elementary cube, identified by its sorted vertex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub vertices: Vec<usize>,
    pub dim: usize,
    pub value: f64,
}

impl Cell {
    pub fn new(mut vertices: Vec<usize>, dim: usize, value: f64) -> Self {
        vertices.sort_unstable();
        Self {
            vertices,
            dim,
            value,
        }
    }

    pub fn simplex(vertices: Vec<usize>, value: f64) -> Self {
        let dim = vertices.len().saturating_sub(1);
        Self::new(vertices, dim, value)
    }
}

/// Cells ordered by `(value, dim, vertex set)` together with the boundary
/// of every cell expressed as indices into that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredComplex {
    cells: Vec<Cell>,
    boundaries: Vec<Vec<usize>>,
    /// Set when an alpha filtration had to fall back to Rips.
    pub rips_fallback: bool,
}

fn order_key(a: &Cell, b: &Cell) -> std::cmp::Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.dim.cmp(&b.dim))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

impl FilteredComplex {
    /// Build a complex from cells and the vertex sets of their codimension-one
    /// faces. Sorts into filtration order and rejects missing or late faces.
    pub fn from_cells(entries: Vec<(Cell, Vec<Vec<usize>>)>) -> Result<Self> {
        let mut entries = entries;
        for (cell, faces) in &entries {
            if !cell.value.is_finite() {
                return Err(Error::NonFinite("filtration value"));
            }
            if cell.dim == 0 && !faces.is_empty() {
                return Err(Error::invalid("vertices have no faces"));
            }
        }
        entries.sort_by(|a, b| order_key(&a.0, &b.0));
        let mut index: HashMap<&[usize], usize> = HashMap::with_capacity(entries.len());
        for (i, (cell, _)) in entries.iter().enumerate() {
            if index.insert(cell.vertices.as_slice(), i).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate cell {:?}",
                    cell.vertices
                )));
            }
        }
        let mut boundaries = Vec::with_capacity(entries.len());
        for (i, (cell, faces)) in entries.iter().enumerate() {
            let mut boundary = Vec::with_capacity(faces.len());
            for face in faces {
                let mut key = face.clone();
                key.sort_unstable();
                let &j = index.get(key.as_slice()).ok_or_else(|| {
                    Error::NonMonotone(format!(
                        "face {key:?} of cell {:?} is missing",
                        cell.vertices
                    ))
                })?;
                let face_cell = &entries[j].0;
                if face_cell.dim + 1 != cell.dim {
                    return Err(Error::invalid(format!(
                        "face {key:?} has dimension {} under a {}-cell",
                        face_cell.dim, cell.dim
                    )));
                }
                if j > i {
                    return Err(Error::NonMonotone(format!(
                        "face {key:?} (value {}) enters after cell {:?} (value {})",
                        face_cell.value, cell.vertices, cell.value
                    )));
                }
                boundary.push(j);
            }
            boundary.sort_unstable();
            boundaries.push(boundary);
        }
        let cells = entries.into_iter().map(|(c, _)| c).collect();
        Ok(Self {
            cells,
            boundaries,
            rips_fallback: false,
        })
    }

    /// Build a simplicial complex; faces are all codimension-one subsets.
    pub fn simplicial(cells: Vec<Cell>) -> Result<Self> {
        let entries = cells
            .into_iter()
            .map(|c| {
                let faces = simplex_faces(&c.vertices);
                (c, faces)
            })
            .collect();
        Self::from_cells(entries)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn boundary(&self, i: usize) -> &[usize] {
        &self.boundaries[i]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn max_dim(&self) -> usize {
        self.cells.iter().map(|c| c.dim).max().unwrap_or(0)
    }

    /// Check filtration order and monotonicity of every face relation.
    pub fn validate(&self) -> Result<()> {
        for i in 1..self.cells.len() {
            if order_key(&self.cells[i - 1], &self.cells[i]) == std::cmp::Ordering::Greater {
                return Err(Error::NonMonotone(format!("cells {} and {i} out of order", i - 1)));
            }
        }
        for (i, boundary) in self.boundaries.iter().enumerate() {
            for &j in boundary {
                if j >= i || self.cells[j].value > self.cells[i].value {
                    return Err(Error::NonMonotone(format!(
                        "face {j} does not precede cell {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Euler characteristic of the sublevel complex `{value <= t}`.
    pub fn euler_characteristic_at(&self, t: f64) -> i64 {
        self.cells
            .iter()
            .filter(|c| c.value <= t)
            .map(|c| if c.dim % 2 == 0 { 1 } else { -1 })
            .sum()
    }
}

fn simplex_faces(vertices: &[usize]) -> Vec<Vec<usize>> {
    if vertices.len() <= 1 {
        return Vec::new();
    }
    (0..vertices.len())
        .map(|skip| {
            vertices
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != skip)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Vietoris–Rips filtration up to `max_dim` (1 or 2), keeping simplices whose
/// diameter is at most `2 * max_radius`.
pub fn build_rips(cloud: &PointCloud, max_dim: usize, max_radius: f64) -> Result<FilteredComplex> {
    if !(1..=2).contains(&max_dim) {
        return Err(Error::invalid(format!("max_dim must be 1 or 2, got {max_dim}")));
    }
    if !(max_radius > 0.0) {
        return Err(Error::invalid("max_radius must be positive"));
    }
    let n = cloud.len();
    let mut half = vec![vec![f64::INFINITY; n]; n];
    let mut cells = Vec::new();
    for i in 0..n {
        cells.push(Cell::simplex(vec![i], 0.0));
        half[i][i] = 0.0;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = cloud.distance(i, j) / 2.0;
            if v <= max_radius {
                half[i][j] = v;
                half[j][i] = v;
                cells.push(Cell::simplex(vec![i, j], v));
            }
        }
    }
    if max_dim == 2 {
        for i in 0..n {
            for j in (i + 1)..n {
                if !half[i][j].is_finite() {
                    continue;
                }
                for k in (j + 1)..n {
                    let v = half[i][j].max(half[i][k]).max(half[j][k]);
                    if v.is_finite() {
                        cells.push(Cell::simplex(vec![i, j, k], v));
                    }
                }
            }
        }
    }
    FilteredComplex::simplicial(cells)
}

fn circumradius(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let ab = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let bc = ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt();
    let ca = ((c[0] - a[0]).powi(2) + (c[1] - a[1]).powi(2)).sqrt();
    let cross = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
    if cross == 0.0 {
        f64::INFINITY
    } else {
        ab * bc * ca / (2.0 * cross)
    }
}

/// Planar alpha filtration on the Delaunay triangulation.
///
/// Vertices enter at 0, triangles at their circumradius, and edges at half
/// their length when no Delaunay neighbour lies strictly inside their
/// diametral disk; otherwise at the smallest circumradius of an incident
/// triangle. Exact duplicate points are joined to their first copy by an edge
/// at 0. When the cloud has fewer than three non-collinear points the Rips
/// filtration is returned instead and `rips_fallback` is set.
pub fn build_alpha_2d(cloud: &PointCloud) -> Result<FilteredComplex> {
    if cloud.dim() != 2 {
        return Err(Error::invalid(format!(
            "alpha filtration needs 2-D points, got dimension {}",
            cloud.dim()
        )));
    }
    let pts: Vec<[f64; 2]> = cloud.points().iter().map(|p| [p[0], p[1]]).collect();

    // canonical index for each distinct location
    let mut first_at: HashMap<(u64, u64), usize> = HashMap::new();
    let mut canonical = Vec::with_capacity(pts.len());
    let mut distinct = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let key = (p[0].to_bits(), p[1].to_bits());
        let c = *first_at.entry(key).or_insert_with(|| {
            distinct.push(i);
            i
        });
        canonical.push(c);
    }

    let dpoints: Vec<delaunator::Point> = distinct
        .iter()
        .map(|&i| delaunator::Point {
            x: pts[i][0],
            y: pts[i][1],
        })
        .collect();
    let tri = delaunator::triangulate(&dpoints);
    if tri.triangles.is_empty() {
        let mut complex = build_rips(cloud, 2, f64::MAX)?;
        complex.rips_fallback = true;
        return Ok(complex);
    }

    let mut cells: Vec<Cell> = (0..pts.len()).map(|i| Cell::simplex(vec![i], 0.0)).collect();
    for (i, &c) in canonical.iter().enumerate() {
        if c != i {
            cells.push(Cell::simplex(vec![c, i], 0.0));
        }
    }

    // edge -> (opposite vertices, incident triangle radii)
    let mut edges: HashMap<(usize, usize), (Vec<usize>, Vec<f64>)> = HashMap::new();
    for t in tri.triangles.chunks_exact(3) {
        let v = [distinct[t[0]], distinct[t[1]], distinct[t[2]]];
        let radius = circumradius(pts[v[0]], pts[v[1]], pts[v[2]]);
        cells.push(Cell::simplex(v.to_vec(), radius));
        for k in 0..3 {
            let (a, b, opp) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
            let entry = edges.entry((a.min(b), a.max(b))).or_default();
            entry.0.push(opp);
            entry.1.push(radius);
        }
    }
    let mut edge_list: Vec<_> = edges.into_iter().collect();
    edge_list.sort_by_key(|(k, _)| *k);
    for ((a, b), (opposite, radii)) in edge_list {
        let (pa, pb) = (pts[a], pts[b]);
        let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
        let half_sq = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)) / 4.0;
        let attached = opposite.iter().any(|&o| {
            let d2 = (pts[o][0] - mid[0]).powi(2) + (pts[o][1] - mid[1]).powi(2);
            d2 < half_sq
        });
        let value = if attached {
            radii.iter().cloned().fold(f64::INFINITY, f64::min)
        } else {
            half_sq.sqrt()
        };
        cells.push(Cell::simplex(vec![a, b], value));
    }
    FilteredComplex::simplicial(cells)
}

/// Sublevel filtration of a node-weighted graph.
pub fn build_graph_sublevel(graph: &NodeWeightedGraph) -> Result<FilteredComplex> {
    let w = graph.node_weights();
    let mut cells: Vec<Cell> = w
        .iter()
        .enumerate()
        .map(|(i, &v)| Cell::simplex(vec![i], v))
        .collect();
    for &(u, v) in graph.edges() {
        cells.push(Cell::simplex(vec![u, v], w[u].max(w[v])));
    }
    FilteredComplex::simplicial(cells)
}

/// Sublevel filtration on the cubical complex with pixels as vertices; edges
/// and squares take the maximum of their faces.
pub fn build_cubical_sublevel(image: &ImageGrid) -> Result<FilteredComplex> {
    let (rows, cols) = (image.rows(), image.cols());
    let v = image.values();
    let mut entries = Vec::with_capacity(4 * rows * cols);
    for p in 0..rows * cols {
        entries.push((Cell::new(vec![p], 0, v[p]), Vec::new()));
    }
    for r in 0..rows {
        for c in 0..cols {
            let p = r * cols + c;
            if c + 1 < cols {
                entries.push((
                    Cell::new(vec![p, p + 1], 1, v[p].max(v[p + 1])),
                    vec![vec![p], vec![p + 1]],
                ));
            }
            if r + 1 < rows {
                entries.push((
                    Cell::new(vec![p, p + cols], 1, v[p].max(v[p + cols])),
                    vec![vec![p], vec![p + cols]],
                ));
            }
            if c + 1 < cols && r + 1 < rows {
                let q = [p, p + 1, p + cols, p + cols + 1];
                let value = q.iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max);
                entries.push((
                    Cell::new(q.to_vec(), 2, value),
                    vec![
                        vec![q[0], q[1]],
                        vec![q[2], q[3]],
                        vec![q[0], q[2]],
                        vec![q[1], q[3]],
                    ],
                ));
            }
        }
    }
    FilteredComplex::from_cells(entries)
}
