//! Functional summaries of persistence diagrams: power-weighted silhouettes
//! and persistence landscapes on an equally spaced grid.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::complex::{
    build_alpha_2d, build_cubical_sublevel, build_graph_sublevel, build_rips, FilteredComplex,
    ImageGrid, NodeWeightedGraph, PointCloud,
};
use crate::error::{Error, Result};
use crate::persistence::{
    cap_infinite_deaths, compute_h0_unionfind, compute_persistence, CapMode, DiagramPoint,
    PersistenceDiagram,
};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

impl SummaryGrid {
    pub fn new(t_min: f64, t_max: f64, n_points: usize) -> Result<Self> {
        let grid = Self {
            t_min,
            t_max,
            n_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return Err(Error::invalid(format!(
                "grid needs finite t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.n_points < 2 {
            return Err(Error::invalid("grid needs at least 2 points"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_points - 1) as f64
    }

    pub fn width(&self) -> f64 {
        self.t_max - self.t_min
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.t_max
        } else {
            self.t_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Trapezoid weights, so that `Σ w_i f(t_i) ≈ ∫ f`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] = h / 2.0;
        w[self.n_points - 1] = h / 2.0;
        w
    }

    pub fn ensure_same(&self, other: &SummaryGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteCurve {
    pub grid: SummaryGrid,
    pub values: Vec<f64>,
    pub r: f64,
    /// The diagram had no points; `values` is identically zero.
    pub empty_diagram: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeCurve {
    pub grid: SummaryGrid,
    pub k: usize,
    pub values: Vec<f64>,
}

pub fn tent_eval(p: DiagramPoint, t: f64) -> Result<f64> {
    if !p.birth.is_finite() || !p.death.is_finite() {
        return Err(Error::InfiniteCoordinate("tent of an immortal class"));
    }
    Ok(tent(p, t))
}

#[inline]
fn tent(p: DiagramPoint, t: f64) -> f64 {
    (t - p.birth).min(p.death - t).max(0.0)
}

/// Power-weighted silhouette `Σ w_p Λ_p / Σ w_p` with `w_p = (b - a)^r`.
pub fn silhouette(diag: &PersistenceDiagram, r: f64, grid: &SummaryGrid) -> Result<SilhouetteCurve> {
    grid.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("power r must be positive, got {r}")));
    }
    diag.check_finite()?;
    let points: Vec<DiagramPoint> = diag
        .points
        .iter()
        .copied()
        .filter(|p| p.persistence() > 0.0)
        .collect();
    if points.is_empty() {
        return Ok(SilhouetteCurve {
            grid: *grid,
            values: vec![0.0; grid.n_points],
            r,
            empty_diagram: true,
        });
    }
    // normalising by the largest lifetime keeps large r from overflowing
    let top = points.iter().map(|p| p.persistence()).fold(0.0, f64::max);
    let weights: Vec<f64> = points.iter().map(|p| (p.persistence() / top).powf(r)).collect();
    let total: f64 = weights.iter().sum();
    let values = grid
        .points()
        .into_iter()
        .map(|t| {
            let s: f64 = points.iter().zip(&weights).map(|(&p, &w)| w * tent(p, t)).sum();
            s / total
        })
        .collect();
    Ok(SilhouetteCurve {
        grid: *grid,
        values,
        r,
        empty_diagram: false,
    })
}

/// k-th persistence landscape (k starts at 1).
pub fn landscape(diag: &PersistenceDiagram, k: usize, grid: &SummaryGrid) -> Result<LandscapeCurve> {
    grid.validate()?;
    if k == 0 {
        return Err(Error::invalid("landscape index k starts at 1"));
    }
    diag.check_finite()?;
    let mut buf = Vec::with_capacity(diag.len());
    let values = grid
        .points()
        .into_iter()
        .map(|t| {
            buf.clear();
            buf.extend(diag.points.iter().map(|&p| tent(p, t)));
            if buf.len() < k {
                0.0
            } else {
                buf.sort_by(|a, b| b.total_cmp(a));
                buf[k - 1]
            }
        })
        .collect();
    Ok(LandscapeCurve {
        grid: *grid,
        k,
        values,
    })
}

/// A raw complex outcome for one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Cloud(PointCloud),
    Image(ImageGrid),
    Graph(NodeWeightedGraph),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Filtration {
    Rips { max_dim: usize, max_radius: f64 },
    Alpha,
    Cubical,
    Graph,
}

/// Cap rule as written in configs; the uniform seed is derived per unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CapRule {
    Drop,
    Fixed { cap: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl CapRule {
    pub fn to_mode(self, stream_seed: u64, degree: usize) -> CapMode {
        match self {
            CapRule::Drop => CapMode::Drop,
            CapRule::Fixed { cap } => CapMode::Fixed { cap },
            CapRule::Uniform { lo, hi } => CapMode::Uniform {
                lo,
                hi,
                seed: seed::derive(stream_seed, seed::stream::CAP, degree as u64),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub filtration: Filtration,
    pub degrees: Vec<usize>,
    pub r: f64,
    pub grid: SummaryGrid,
    pub cap_h0: CapRule,
    pub cap_higher: CapRule,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("power r must be positive, got {}", self.r)));
        }
        if self.degrees.is_empty() {
            return Err(Error::invalid("no homology degrees requested"));
        }
        if let Some(&d) = self.degrees.iter().find(|&&d| d > 1) {
            return Err(Error::invalid(format!("homology degree {d} is not supported (0 or 1)")));
        }
        Ok(())
    }

    fn cap_for(&self, degree: usize) -> CapRule {
        if degree == 0 {
            self.cap_h0
        } else {
            self.cap_higher
        }
    }
}

/// Filtered complex of one outcome under the configured filtration.
pub fn build_complex(outcome: &Outcome, filtration: Filtration) -> Result<FilteredComplex> {
    match (outcome, filtration) {
        (Outcome::Cloud(c), Filtration::Rips { max_dim, max_radius }) => {
            build_rips(c, max_dim, max_radius)
        }
        (Outcome::Cloud(c), Filtration::Alpha) => build_alpha_2d(c),
        (Outcome::Image(im), Filtration::Cubical) => build_cubical_sublevel(im),
        (Outcome::Graph(g), Filtration::Graph) => build_graph_sublevel(g),
        (o, f) => {
            let kind = match o {
                Outcome::Cloud(_) => "point cloud",
                Outcome::Image(_) => "image",
                Outcome::Graph(_) => "graph",
            };
            Err(Error::invalid(format!("filtration {f:?} does not apply to a {kind}")))
        }
    }
}

/// Diagrams of a complex in each requested degree, capped per the config.
pub fn complex_diagrams(
    complex: &FilteredComplex,
    config: &PipelineConfig,
    stream_seed: u64,
) -> Result<Vec<PersistenceDiagram>> {
    let max_deg = config.degrees.iter().copied().max().unwrap_or(0);
    let all = if max_deg == 0 {
        vec![compute_h0_unionfind(complex)?]
    } else {
        compute_persistence(complex, max_deg)?
    };
    config
        .degrees
        .iter()
        .map(|&d| cap_infinite_deaths(&all[d], config.cap_for(d).to_mode(stream_seed, d)))
        .collect()
}

/// Diagrams of `outcome` in each requested degree, capped per the config.
pub fn pipeline_diagrams(
    outcome: &Outcome,
    config: &PipelineConfig,
    stream_seed: u64,
) -> Result<Vec<PersistenceDiagram>> {
    config.validate()?;
    let complex = build_complex(outcome, config.filtration)?;
    complex_diagrams(&complex, config, stream_seed)
}

/// Outcome → complex → diagrams → silhouettes, one curve per requested degree.
pub fn pipeline_silhouette(
    outcome: &Outcome,
    config: &PipelineConfig,
    stream_seed: u64,
) -> Result<Vec<SilhouetteCurve>> {
    pipeline_diagrams(outcome, config, stream_seed)?
        .iter()
        .map(|d| silhouette(d, config.r, &config.grid))
        .collect()
}

pub fn write_curve_csv<W: Write>(out: W, grid: &SummaryGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.n_points {
        return Err(Error::GridMismatch(format!(
            "{} values for a {}-point grid",
            values.len(),
            grid.n_points
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Parse {
        path: "<curve csv>".into(),
        msg: e.to_string(),
    };
    w.write_record(["t", "value"]).map_err(wrap)?;
    for (t, v) in grid.points().into_iter().zip(values) {
        w.write_record([t.to_string(), v.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<curve csv>", e))?;
    Ok(())
}

/// JSON record of a silhouette with its grid, power, degree and flags.
pub fn silhouette_json(curve: &SilhouetteCurve, degree: usize) -> serde_json::Value {
    serde_json::json!({
        "degree": degree,
        "r": curve.r,
        "grid": curve.grid,
        "empty_diagram": curve.empty_diagram,
        "values": curve.values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> SummaryGrid {
        SummaryGrid::new(a, b, n).unwrap()
    }

    fn at(curve: &[f64], g: &SummaryGrid, t: f64) -> f64 {
        let i = ((t - g.t_min) / g.spacing()).round() as usize;
        curve[i]
    }

    #[test]
    fn tent_values() {
        let p = DiagramPoint::new(0.0, 2.0);
        assert_eq!(tent_eval(p, 1.0).unwrap(), 1.0);
        assert_eq!(tent_eval(p, 3.0).unwrap(), 0.0);
        assert_eq!(tent_eval(DiagramPoint::new(1.0, 4.0), 2.0).unwrap(), 1.0);
        assert!(tent_eval(DiagramPoint::new(0.0, f64::INFINITY), 1.0).is_err());
    }

    #[test]
    fn silhouette_hand_values() {
        let g = grid(0.0, 4.0, 41);
        let single = PersistenceDiagram::from_pairs(0, &[(0.0, 2.0)]);
        for r in [0.1, 1.0, 3.0] {
            let s = silhouette(&single, r, &g).unwrap();
            assert!((at(&s.values, &g, 1.0) - 1.0).abs() < 1e-12);
        }
        let two = PersistenceDiagram::from_pairs(0, &[(0.0, 2.0), (0.0, 4.0)]);
        let s = silhouette(&two, 1.0, &g).unwrap();
        assert!((at(&s.values, &g, 2.0) - 4.0 / 3.0).abs() < 1e-12);
        let mut prev = 0.0;
        for r in [1.0, 3.0, 10.0] {
            let v = at(&silhouette(&two, r, &g).unwrap().values, &g, 2.0);
            assert!(v > prev && v < 2.0);
            prev = v;
        }
    }

    #[test]
    fn empty_diagram_gives_flagged_zero() {
        let g = grid(0.0, 1.0, 11);
        let s = silhouette(&PersistenceDiagram::empty(1), 1.0, &g).unwrap();
        assert!(s.empty_diagram);
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn infinite_death_is_rejected() {
        let g = grid(0.0, 1.0, 11);
        let d = PersistenceDiagram::from_pairs(0, &[(0.0, f64::INFINITY)]);
        assert!(matches!(silhouette(&d, 1.0, &g), Err(Error::InfiniteCoordinate(_))));
    }

    #[test]
    fn landscape_examples() {
        let g = grid(0.0, 3.0, 31);
        let single = PersistenceDiagram::from_pairs(0, &[(0.0, 2.0)]);
        let l1 = landscape(&single, 1, &g).unwrap();
        let s = silhouette(&single, 1.0, &g).unwrap();
        for (a, b) in l1.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(landscape(&single, 2, &g).unwrap().values.iter().all(|&v| v == 0.0));
        let two = PersistenceDiagram::from_pairs(0, &[(0.0, 2.0), (1.0, 3.0)]);
        let l2 = landscape(&two, 2, &g).unwrap();
        assert!((at(&l2.values, &g, 1.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = grid(0.0, 0.3, 4);
        assert_eq!(g.point(3), 0.3);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 0.3).abs() < 1e-15);
        assert!(SummaryGrid::new(1.0, 1.0, 5).is_err());
        assert!(SummaryGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn pipeline_unit_square_alpha_loop() {
        let cloud = PointCloud::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let config = PipelineConfig {
            filtration: Filtration::Alpha,
            degrees: vec![1],
            r: 1.0,
            grid: grid(0.0, 1.0, 101),
            cap_h0: CapRule::Drop,
            cap_higher: CapRule::Drop,
        };
        let curves = pipeline_silhouette(&Outcome::Cloud(cloud), &config, 0).unwrap();
        let g = config.grid;
        let half = 2f64.sqrt() / 2.0;
        for (t, v) in g.points().into_iter().zip(&curves[0].values) {
            if t <= 0.5 || t >= half {
                assert!(*v == 0.0, "t={t} v={v}");
            } else {
                assert!(*v > 0.0);
            }
        }
    }

    #[test]
    fn pipeline_single_point_is_zero() {
        let cloud = PointCloud::new(vec![vec![0.3, 0.3]]).unwrap();
        let config = PipelineConfig {
            filtration: Filtration::Alpha,
            degrees: vec![0, 1],
            r: 3.0,
            grid: grid(0.0, 1.0, 11),
            cap_h0: CapRule::Drop,
            cap_higher: CapRule::Drop,
        };
        let curves = pipeline_silhouette(&Outcome::Cloud(cloud), &config, 0).unwrap();
        assert!(curves.iter().all(|c| c.empty_diagram));
    }

    #[test]
    fn pipeline_rejects_mismatched_filtration() {
        let config = PipelineConfig {
            filtration: Filtration::Cubical,
            degrees: vec![0],
            r: 1.0,
            grid: grid(0.0, 1.0, 11),
            cap_h0: CapRule::Drop,
            cap_higher: CapRule::Drop,
        };
        let cloud = PointCloud::new(vec![vec![0.0, 0.0]]).unwrap();
        assert!(pipeline_silhouette(&Outcome::Cloud(cloud), &config, 0).is_err());
    }
}
