//! Persistence diagrams by boundary-matrix reduction over Z/2.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::complex::FilteredComplex;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub birth: f64,
    /// `f64::INFINITY` for classes that never die.
    pub death: f64,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }
}

/// Birth–death pairs of one homology degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub dim: usize,
    pub points: Vec<DiagramPoint>,
}

impl PersistenceDiagram {
    pub fn new(dim: usize, points: Vec<DiagramPoint>) -> Self {
        Self { dim, points }
    }

    pub fn empty(dim: usize) -> Self {
        Self::new(dim, Vec::new())
    }

    pub fn from_pairs(dim: usize, pairs: &[(f64, f64)]) -> Self {
        Self::new(dim, pairs.iter().map(|&(b, d)| DiagramPoint::new(b, d)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_infinite(&self) -> bool {
        self.points.iter().any(|p| !p.is_finite())
    }

    /// Points sorted by (birth, death); handy for multiset comparison.
    pub fn sorted(&self) -> Vec<DiagramPoint> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
        pts
    }

    pub fn max_persistence(&self) -> f64 {
        self.points.iter().map(|p| p.persistence()).fold(0.0, f64::max)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.points.iter().any(|p| !p.birth.is_finite() || !p.death.is_finite()) {
            return Err(Error::InfiniteCoordinate("diagram has an infinite death; cap it first"));
        }
        Ok(())
    }
}

fn add_columns(target: &mut Vec<usize>, source: &[usize]) {
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < source.len() {
        match target[i].cmp(&source[j]) {
            std::cmp::Ordering::Less => {
                out.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(source[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&target[i..]);
    out.extend_from_slice(&source[j..]);
    *target = out;
}

/// Standard column reduction. Returns one diagram per degree `0..=max_hom_dim`.
pub fn compute_persistence(
    complex: &FilteredComplex,
    max_hom_dim: usize,
) -> Result<Vec<PersistenceDiagram>> {
    complex.validate()?;
    let cells = complex.cells();
    let n = cells.len();
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut pivot_of: HashMap<usize, usize> = HashMap::new();
    let mut paired = vec![false; n];
    let mut diagrams: Vec<PersistenceDiagram> =
        (0..=max_hom_dim).map(PersistenceDiagram::empty).collect();

    for j in 0..n {
        let mut col = complex.boundary(j).to_vec();
        while let Some(&low) = col.last() {
            match pivot_of.get(&low) {
                Some(&k) => add_columns(&mut col, &columns[k]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            pivot_of.insert(low, j);
            paired[low] = true;
            paired[j] = true;
            let (birth, death) = (cells[low].value, cells[j].value);
            let dim = cells[low].dim;
            if dim <= max_hom_dim && birth < death {
                diagrams[dim].points.push(DiagramPoint::new(birth, death));
            }
        }
        columns.push(col);
    }
    for (i, cell) in cells.iter().enumerate() {
        if !paired[i] && cell.dim <= max_hom_dim {
            diagrams[cell.dim]
                .points
                .push(DiagramPoint::new(cell.value, f64::INFINITY));
        }
    }
    Ok(diagrams)
}

/// Degree-0 persistence by union–find with the elder rule.
pub fn compute_h0_unionfind(complex: &FilteredComplex) -> Result<PersistenceDiagram> {
    complex.validate()?;
    let cells = complex.cells();
    // parent pointers over cell indices; only vertices participate
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut diagram = PersistenceDiagram::empty(0);
    let mut roots_alive = vec![false; cells.len()];
    for (i, cell) in cells.iter().enumerate() {
        match cell.dim {
            0 => roots_alive[i] = true,
            1 => {
                let b = complex.boundary(i);
                let (ru, rv) = (find(&mut parent, b[0]), find(&mut parent, b[1]));
                if ru == rv {
                    continue;
                }
                // the root is always the oldest vertex of its component
                let (elder, younger) = if ru < rv { (ru, rv) } else { (rv, ru) };
                let birth = cells[younger].value;
                if birth < cell.value {
                    diagram.points.push(DiagramPoint::new(birth, cell.value));
                }
                parent[younger] = elder;
                roots_alive[younger] = false;
            }
            _ => {}
        }
    }
    for (i, alive) in roots_alive.into_iter().enumerate() {
        if alive {
            diagram
                .points
                .push(DiagramPoint::new(cells[i].value, f64::INFINITY));
        }
    }
    Ok(diagram)
}

/// How infinite deaths are made finite before summarising a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CapMode {
    Fixed { cap: f64 },
    Uniform { lo: f64, hi: f64, seed: u64 },
    Drop,
}

pub fn cap_infinite_deaths(diag: &PersistenceDiagram, mode: CapMode) -> Result<PersistenceDiagram> {
    let max_birth = diag
        .points
        .iter()
        .map(|p| p.birth)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_inf_birth = diag
        .points
        .iter()
        .filter(|p| !p.is_finite())
        .map(|p| p.birth)
        .fold(f64::NEG_INFINITY, f64::max);
    let points = match mode {
        CapMode::Drop => diag.points.iter().copied().filter(|p| p.is_finite()).collect(),
        CapMode::Fixed { cap } => {
            if !cap.is_finite() || cap <= max_birth {
                return Err(Error::invalid(format!(
                    "cap {cap} does not exceed the largest birth {max_birth}"
                )));
            }
            diag.points
                .iter()
                .map(|p| if p.is_finite() { *p } else { DiagramPoint::new(p.birth, cap) })
                .collect()
        }
        CapMode::Uniform { lo, hi, seed } => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!("bad uniform cap range [{lo}, {hi}]")));
            }
            if hi <= max_birth || lo <= max_inf_birth {
                return Err(Error::invalid(format!(
                    "cap range [{lo}, {hi}] does not exceed the births it replaces"
                )));
            }
            let mut rng = seed::rng(seed);
            diag.points
                .iter()
                .map(|p| {
                    if p.is_finite() {
                        *p
                    } else {
                        DiagramPoint::new(p.birth, rng.random_range(lo..=hi))
                    }
                })
                .collect()
        }
    };
    Ok(PersistenceDiagram::new(diag.dim, points))
}

/// Write diagrams as CSV with columns `dim,birth,death`; immortal classes
/// get `inf`.
pub fn write_diagrams_csv<W: Write>(out: W, diagrams: &[PersistenceDiagram]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Parse {
        path: "<diagram csv>".into(),
        msg: e.to_string(),
    };
    w.write_record(["dim", "birth", "death"]).map_err(wrap)?;
    for d in diagrams {
        for p in &d.points {
            let death = if p.death.is_finite() {
                p.death.to_string()
            } else {
                "inf".to_string()
            };
            w.write_record([d.dim.to_string(), p.birth.to_string(), death])
                .map_err(wrap)?;
        }
    }
    w.flush().map_err(|e| Error::io("<diagram csv>", e))?;
    Ok(())
}
