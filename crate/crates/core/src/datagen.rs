//! Synthetic experimental data: Gaussian-subgroup covariates, a logistic
//! treatment mechanism, and potential outcomes built from linked twist map
//! orbits, blob images or loop graphs.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{ImageGrid, NodeWeightedGraph, PointCloud};
use crate::error::{Error, Result};
use crate::nuisance::{expit, CausalSample};
use crate::seed::{self, stream};
use crate::summary::{Outcome, SilhouetteCurve};

pub const SUBGROUP_MEAN_1: [f64; 5] = [1.0, 0.6, -0.7, 2.2, -1.0];
pub const SUBGROUP_MEAN_2: [f64; 5] = [0.4, -0.4, -0.6, 3.3, 3.0];
pub const COVARIATE_VARIANCE: f64 = 0.5;

/// Two Gaussian subgroups: the first `ceil(n/2)` units around
/// `SUBGROUP_MEAN_1`, the rest around `SUBGROUP_MEAN_2`.
pub fn gen_covariates(n: usize, seed_value: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::derived_rng(seed_value, stream::COVARIATES, 0);
    let normal = Normal::new(0.0, COVARIATE_VARIANCE.sqrt()).expect("valid sd");
    let first = n.div_ceil(2);
    (0..n)
        .map(|i| {
            let mean = if i < first { &SUBGROUP_MEAN_1 } else { &SUBGROUP_MEAN_2 };
            mean.iter().map(|m| m + normal.sample(&mut rng)).collect()
        })
        .collect()
}

/// The logistic treatment mechanism with two interaction terms.
pub fn true_propensity(x: &[f64]) -> f64 {
    expit(
        -0.5 * x[0] - 0.1 * x[1] + 0.6 * x[2] + 0.1 * x[3] + 0.1 * x[4] + 0.5 * x[1] * x[2]
            - 0.7 * x[0] * x[2],
    )
}

pub fn assign_treatment(probabilities: &[f64], seed_value: u64) -> Result<Vec<bool>> {
    if let Some(p) = probabilities.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::invalid(format!("treatment probability {p} outside (0, 1)")));
    }
    let mut rng = seed::derived_rng(seed_value, stream::TREATMENT, 0);
    Ok(probabilities.iter().map(|&p| rng.random::<f64>() < p).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrbitOrder {
    /// The y update sees the freshly updated x.
    #[default]
    Sequential,
    Simultaneous,
}

/// Orbit of the linked twist map on the unit torus, starting from a uniform
/// point which is included as the first of the `n_points` points.
pub fn gen_orbit(s: f64, n_points: usize, seed_value: u64, order: OrbitOrder) -> Result<PointCloud> {
    if !(s > 0.0) {
        return Err(Error::invalid(format!("orbit parameter s must be positive, got {s}")));
    }
    if n_points == 0 {
        return Err(Error::invalid("orbit needs at least one point"));
    }
    let mut rng = seed::rng(seed_value);
    let (mut x, mut y): (f64, f64) = (rng.random(), rng.random());
    let mut pts = Vec::with_capacity(n_points);
    pts.push(vec![x, y]);
    for _ in 1..n_points {
        let nx = (x + s * y * (1.0 - y)).rem_euclid(1.0);
        let xy = match order {
            OrbitOrder::Sequential => nx,
            OrbitOrder::Simultaneous => x,
        };
        y = (y + s * xy * (1.0 - xy)).rem_euclid(1.0);
        x = nx;
        pts.push(vec![x, y]);
    }
    PointCloud::new(pts)
}

/// Which pool each unit drew from, and the resulting `(Y0, Y1)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitPair {
    pub pool0: usize,
    pub pool1: usize,
    pub y0: PointCloud,
    pub y1: PointCloud,
}

/// For every unit pick two distinct pools; the cloud of the pool with the
/// larger `s` becomes `Y1` with probability `prob_higher`.
pub fn pair_orbit(
    pools: &[(f64, Vec<PointCloud>)],
    n: usize,
    prob_higher: f64,
    seed_value: u64,
) -> Result<Vec<OrbitPair>> {
    if pools.len() < 2 {
        return Err(Error::invalid("pairing needs at least two pools"));
    }
    if !(0.0..=1.0).contains(&prob_higher) {
        return Err(Error::invalid(format!("pairing probability {prob_higher} outside [0, 1]")));
    }
    if let Some((s, p)) = pools.iter().find(|(_, p)| p.len() < n) {
        return Err(Error::invalid(format!(
            "pool for s = {s} holds {} clouds but {n} units need one each",
            p.len()
        )));
    }
    let mut rng = seed::derived_rng(seed_value, stream::PAIRING, 0);
    Ok((0..n)
        .map(|i| {
            let pick = sample_indices(&mut rng, pools.len(), 2);
            let (a, b) = (pick.index(0), pick.index(1));
            let (hi, lo) = if pools[a].0 >= pools[b].0 { (a, b) } else { (b, a) };
            let higher_treated = rng.random::<f64>() < prob_higher;
            let (p1, p0) = if higher_treated { (hi, lo) } else { (lo, hi) };
            OrbitPair {
                pool0: p0,
                pool1: p1,
                y0: pools[p0].1[i].clone(),
                y1: pools[p1].1[i].clone(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSpec {
    pub points: usize,
    pub s_values: Vec<f64>,
    pub prob_higher: f64,
    pub order: OrbitOrder,
}

impl Default for OrbitSpec {
    fn default() -> Self {
        Self {
            points: 300,
            s_values: vec![3.5, 4.0, 4.1],
            prob_higher: 0.7,
            order: OrbitOrder::Sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSpec {
    pub size: usize,
    /// Fraction of healthy-like images among the treated outcomes.
    pub mix: f64,
    pub infected_blobs: (usize, usize),
    pub healthy_blobs: (usize, usize),
}

impl Default for ImageSpec {
    fn default() -> Self {
        Self {
            size: 24,
            mix: 0.75,
            infected_blobs: (8, 14),
            healthy_blobs: (1, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSpec {
    pub nodes: (usize, usize),
    /// Fraction of two-loop graphs among the treated outcomes.
    pub mix: f64,
    pub max_weight: f64,
    pub cap: (f64, f64),
}

impl Default for GraphSpec {
    fn default() -> Self {
        Self {
            nodes: (8, 16),
            mix: 0.75,
            max_weight: 6.0,
            cap: (6.5, 8.5),
        }
    }
}

/// Smooth image in [0, 1]: a bright, gently varying background with
/// `blobs` dark Gaussian wells.
pub fn blob_image(size: usize, blobs: usize, rng: &mut ChaCha8Rng) -> Result<ImageGrid> {
    let s = size as f64;
    let (fx, fy, phase): (f64, f64, f64) = (rng.random_range(0.5..1.5), rng.random_range(0.5..1.5), rng.random_range(0.0..6.3));
    let wells: Vec<(f64, f64, f64, f64)> = (0..blobs)
        .map(|_| {
            (
                rng.random_range(0.0..s),
                rng.random_range(0.0..s),
                rng.random_range(1.0..2.5),
                rng.random_range(0.3..0.7),
            )
        })
        .collect();
    let mut values = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let (u, v) = (r as f64, c as f64);
            let mut val = 0.85
                + 0.05 * (fx * std::f64::consts::TAU * u / s + phase).sin()
                    * (fy * std::f64::consts::TAU * v / s).cos();
            for &(cr, cc, sigma, depth) in &wells {
                let d2 = (u - cr).powi(2) + (v - cc).powi(2);
                val -= depth * (-d2 / (2.0 * sigma * sigma)).exp();
            }
            values.push(val.clamp(0.0, 1.0));
        }
    }
    ImageGrid::new(size, size, values)
}

/// Connected graph with exactly `loops` independent cycles: a random tree
/// plus `loops` extra edges, node weights uniform on `[0, max_weight)`.
pub fn loop_graph(
    nodes: usize,
    loops: usize,
    max_weight: f64,
    rng: &mut ChaCha8Rng,
) -> Result<NodeWeightedGraph> {
    if nodes < 3 + loops {
        return Err(Error::invalid(format!("{nodes} nodes are too few for {loops} loops")));
    }
    let weights: Vec<f64> = (0..nodes).map(|_| rng.random_range(0.0..max_weight)).collect();
    let mut edges: Vec<(usize, usize)> = (1..nodes).map(|v| (rng.random_range(0..v), v)).collect();
    let mut present: std::collections::HashSet<(usize, usize)> =
        edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    while edges.len() < nodes - 1 + loops {
        let u = rng.random_range(0..nodes);
        let v = rng.random_range(0..nodes);
        if u != v && present.insert((u.min(v), u.max(v))) {
            edges.push((u, v));
        }
    }
    NodeWeightedGraph::new(weights, edges)
}

/// Image pairs: every control outcome is infected-like, a `mix` share of
/// treated outcomes is healthy-like.
pub fn synth_image_pairs(n: usize, spec: &ImageSpec, seed_value: u64) -> Result<Vec<(ImageGrid, ImageGrid)>> {
    if !(0.0..=1.0).contains(&spec.mix) {
        return Err(Error::invalid(format!("mix {} outside [0, 1]", spec.mix)));
    }
    let healthy = (spec.mix * n as f64).round() as usize;
    let healthy_units = healthy_set(n, healthy, seed_value, stream::IMAGE);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::derived_rng(seed_value, stream::IMAGE, i as u64 + 1);
            let draw = |rng: &mut ChaCha8Rng, range: (usize, usize)| rng.random_range(range.0..=range.1);
            let k0 = draw(&mut rng, spec.infected_blobs);
            let y0 = blob_image(spec.size, k0, &mut rng)?;
            let range = if healthy_units[i] { spec.healthy_blobs } else { spec.infected_blobs };
            let k1 = draw(&mut rng, range);
            let y1 = blob_image(spec.size, k1, &mut rng)?;
            Ok((y0, y1))
        })
        .collect()
}

/// Graph pairs: controls have one loop, a `mix` share of treated units two.
pub fn synth_graph_pairs(
    n: usize,
    spec: &GraphSpec,
    seed_value: u64,
) -> Result<Vec<(NodeWeightedGraph, NodeWeightedGraph)>> {
    if !(0.0..=1.0).contains(&spec.mix) {
        return Err(Error::invalid(format!("mix {} outside [0, 1]", spec.mix)));
    }
    if spec.nodes.0 < 5 || spec.nodes.0 > spec.nodes.1 {
        return Err(Error::invalid("graph node range must satisfy 5 <= min <= max"));
    }
    let two = (spec.mix * n as f64).round() as usize;
    let two_loops = healthy_set(n, two, seed_value, stream::GRAPH);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::derived_rng(seed_value, stream::GRAPH, i as u64 + 1);
            let v0 = rng.random_range(spec.nodes.0..=spec.nodes.1);
            let y0 = loop_graph(v0, 1, spec.max_weight, &mut rng)?;
            let v1 = rng.random_range(spec.nodes.0..=spec.nodes.1);
            let y1 = loop_graph(v1, 1 + two_loops[i] as usize, spec.max_weight, &mut rng)?;
            Ok((y0, y1))
        })
        .collect()
}

/// Random subset of `k` of `n` units, as a mask.
fn healthy_set(n: usize, k: usize, seed_value: u64, label: u64) -> Vec<bool> {
    let mut rng = seed::derived_rng(seed_value, label, 0);
    let mut mask = vec![false; n];
    for i in sample_indices(&mut rng, n, k.min(n)).iter() {
        mask[i] = true;
    }
    mask
}

/// Potential outcome silhouettes of one unit with its covariates and
/// treatment; the observed curve is the one selected by `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualUnit {
    pub x: Vec<f64>,
    pub a: bool,
    pub y0: BTreeMap<usize, SilhouetteCurve>,
    pub y1: BTreeMap<usize, SilhouetteCurve>,
}

impl CounterfactualUnit {
    pub fn observed(&self) -> CausalSample {
        CausalSample {
            x: self.x.clone(),
            a: self.a,
            y: if self.a { self.y1.clone() } else { self.y0.clone() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Orbit,
    SynthImage,
    SynthGraph,
}

/// Raw `(Y0, Y1)` outcomes for `n` units.
pub fn generate_outcome_pairs(
    kind: DatasetKind,
    n: usize,
    orbit: &OrbitSpec,
    image: &ImageSpec,
    graph: &GraphSpec,
    seed_value: u64,
) -> Result<Vec<(Outcome, Outcome)>> {
    Ok(match kind {
        DatasetKind::Orbit => {
            let pools = orbit
                .s_values
                .iter()
                .enumerate()
                .map(|(k, &s)| {
                    let clouds = (0..n)
                        .into_par_iter()
                        .map(|i| {
                            let sd = seed::derive(seed_value, stream::ORBIT, (k * n + i) as u64);
                            gen_orbit(s, orbit.points, sd, orbit.order)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((s, clouds))
                })
                .collect::<Result<Vec<_>>>()?;
            pair_orbit(&pools, n, orbit.prob_higher, seed_value)?
                .into_iter()
                .map(|p| (Outcome::Cloud(p.y0), Outcome::Cloud(p.y1)))
                .collect()
        }
        DatasetKind::SynthImage => synth_image_pairs(n, image, seed_value)?
            .into_iter()
            .map(|(a, b)| (Outcome::Image(a), Outcome::Image(b)))
            .collect(),
        DatasetKind::SynthGraph => synth_graph_pairs(n, graph, seed_value)?
            .into_iter()
            .map(|(a, b)| (Outcome::Graph(a), Outcome::Graph(b)))
            .collect(),
    })
}
