//! Reading and writing raw outcomes: point clouds, images and graphs.

use std::fs;
use std::path::Path;

use crate::complex::{ImageGrid, NodeWeightedGraph, PointCloud};
use crate::error::{Error, Result};
use crate::persistence::{DiagramPoint, PersistenceDiagram};
use crate::summary::Outcome;

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty records of a CSV file, fields trimmed.
fn records(path: &Path, text: &str) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

fn numeric_rows(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let recs = records(path, text)?;
    let mut rows = Vec::with_capacity(recs.len());
    for (i, rec) in recs.iter().enumerate() {
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            // a non-numeric first line is a header
            Err(_) if i == 0 => continue,
            Err(e) => return Err(parse_err(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(rows)
}

pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    let rows = numeric_rows(path, &read_text(path)?)?;
    PointCloud::new(rows).map_err(|e| parse_err(path, e.to_string()))
}

pub fn write_point_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut s = String::new();
    for p in cloud.points() {
        let line: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Image from a CSV grid or an 8/16-bit PGM, with intensities in [0, 1].
pub fn read_image(path: &Path) -> Result<ImageGrid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        return parse_pgm(path, &bytes);
    }
    let text = String::from_utf8(bytes).map_err(|_| parse_err(path, "not UTF-8 text or PGM"))?;
    let rows = numeric_rows(path, &text)?;
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
        return Err(parse_err(path, format!("row {} has {} columns, expected {n_cols}", bad + 1, rows[bad].len())));
    }
    let mut values: Vec<f64> = rows.into_iter().flatten().collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo < 0.0 || hi > 1.0 {
        let span = if hi > lo { hi - lo } else { 1.0 };
        values.iter_mut().for_each(|v| *v = (*v - lo) / span);
    }
    ImageGrid::new(n_rows, n_cols, values).map_err(|e| parse_err(path, e.to_string()))
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<ImageGrid> {
    let binary = bytes[1] == b'5';
    // header tokens: magic, width, height, maxval; '#' starts a comment
    let mut pos = 2;
    let mut header = Vec::with_capacity(3);
    while header.len() < 3 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(path, "truncated PGM header"));
        }
        let tok = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        header.push(tok.parse::<usize>().map_err(|e| parse_err(path, e.to_string()))?);
    }
    let (cols, rows, maxval) = (header[0], header[1], header[2]);
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(path, format!("PGM maxval {maxval} out of range")));
    }
    let count = rows * cols;
    let raw: Vec<usize> = if binary {
        pos += 1;
        let width = if maxval < 256 { 1 } else { 2 };
        let data = bytes.get(pos..pos + count * width).ok_or_else(|| parse_err(path, "truncated PGM data"))?;
        if width == 1 {
            data.iter().map(|&b| b as usize).collect()
        } else {
            data.chunks(2).map(|c| (c[0] as usize) << 8 | c[1] as usize).collect()
        }
    } else {
        let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| parse_err(path, "PGM body is not ASCII"))?;
        let vals = text
            .split_ascii_whitespace()
            .take(count)
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(path, e.to_string()))?;
        if vals.len() < count {
            return Err(parse_err(path, "truncated PGM data"));
        }
        vals
    };
    if let Some(v) = raw.iter().find(|&&v| v > maxval) {
        return Err(parse_err(path, format!("pixel {v} exceeds maxval {maxval}")));
    }
    let values = raw.into_iter().map(|v| v as f64 / maxval as f64).collect();
    ImageGrid::new(rows, cols, values).map_err(|e| parse_err(path, e.to_string()))
}

pub fn write_image_csv(path: &Path, image: &ImageGrid) -> Result<()> {
    let mut s = String::new();
    for r in 0..image.rows() {
        let line: Vec<String> = (0..image.cols()).map(|c| image.get(r, c).to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Graph CSV: a `node,weight` header and one row per node, then a
/// `edge,u,v` header and one row per edge. Rows of the form `edge,3,4` are
/// accepted anywhere.
pub fn read_graph(path: &Path) -> Result<NodeWeightedGraph> {
    let text = read_text(path)?;
    let recs = records(path, &text)?;
    let mut weights: Vec<(usize, f64)> = Vec::new();
    let mut edges = Vec::new();
    let mut in_edges = false;
    let num = |s: &str, line: usize| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|e| parse_err(path, format!("line {line}: {e}")))
    };
    for (i, rec) in recs.iter().enumerate() {
        let line = i + 1;
        let first = rec[0].to_ascii_lowercase();
        match (first.as_str(), rec.len()) {
            ("node", _) => in_edges = false,
            ("edge", 3) if rec[1].eq_ignore_ascii_case("u") => in_edges = true,
            ("edge", 3) => edges.push((num(&rec[1], line)?, num(&rec[2], line)?)),
            (_, 2) if in_edges => edges.push((num(&rec[0], line)?, num(&rec[1], line)?)),
            (_, 2) => {
                let w = rec[1]
                    .parse::<f64>()
                    .map_err(|e| parse_err(path, format!("line {line}: {e}")))?;
                weights.push((num(&rec[0], line)?, w));
            }
            _ => return Err(parse_err(path, format!("line {line}: unexpected row {rec:?}"))),
        }
    }
    weights.sort_by_key(|&(i, _)| i);
    if let Some((k, _)) = weights.iter().enumerate().find(|(k, (i, _))| k != i) {
        return Err(parse_err(path, format!("node ids must be 0..n without gaps (missing {k})")));
    }
    let weights = weights.into_iter().map(|(_, w)| w).collect();
    NodeWeightedGraph::new(weights, edges).map_err(|e| parse_err(path, e.to_string()))
}

pub fn write_graph(path: &Path, graph: &NodeWeightedGraph) -> Result<()> {
    let mut s = String::from("node,weight\n");
    for (i, w) in graph.node_weights().iter().enumerate() {
        s.push_str(&format!("{i},{w}\n"));
    }
    s.push_str("edge,u,v\n");
    for (u, v) in graph.edges() {
        s.push_str(&format!("{u},{v}\n"));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Cloud,
    Image,
    Graph,
}

pub fn read_outcome(path: &Path, kind: OutcomeKind) -> Result<Outcome> {
    Ok(match kind {
        OutcomeKind::Cloud => Outcome::Cloud(read_point_cloud(path)?),
        OutcomeKind::Image => Outcome::Image(read_image(path)?),
        OutcomeKind::Graph => Outcome::Graph(read_graph(path)?),
    })
}

pub fn write_outcome(path: &Path, outcome: &Outcome) -> Result<()> {
    match outcome {
        Outcome::Cloud(c) => write_point_cloud(path, c),
        Outcome::Image(im) => write_image_csv(path, im),
        Outcome::Graph(g) => write_graph(path, g),
    }
}

pub fn outcome_kind(outcome: &Outcome) -> OutcomeKind {
    match outcome {
        Outcome::Cloud(_) => OutcomeKind::Cloud,
        Outcome::Image(_) => OutcomeKind::Image,
        Outcome::Graph(_) => OutcomeKind::Graph,
    }
}

/// Covariate matrix with an `x1..xL` header.
pub fn write_covariates(path: &Path, xs: &[Vec<f64>]) -> Result<()> {
    let l = xs.first().map_or(0, Vec::len);
    let header: Vec<String> = (1..=l).map(|k| format!("x{k}")).collect();
    let mut s = header.join(",") + "\n";
    for x in xs {
        let line: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_covariates(path: &Path) -> Result<Vec<Vec<f64>>> {
    let rows = numeric_rows(path, &read_text(path)?)?;
    let l = rows.first().map_or(0, Vec::len);
    if l == 0 || rows.iter().any(|r| r.len() != l) {
        return Err(parse_err(path, "covariate rows must be non-empty and equally long"));
    }
    Ok(rows)
}

pub fn write_treatment(path: &Path, a: &[bool]) -> Result<()> {
    let mut s = String::from("a\n");
    for &v in a {
        s.push_str(if v { "1\n" } else { "0\n" });
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_treatment(path: &Path) -> Result<Vec<bool>> {
    numeric_rows(path, &read_text(path)?)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r.as_slice() {
            [v] if *v == 0.0 => Ok(false),
            [v] if *v == 1.0 => Ok(true),
            _ => Err(parse_err(path, format!("row {}: treatment must be 0 or 1", i + 1))),
        })
        .collect()
}

/// Diagrams from a `dim,birth,death` CSV; `inf` marks immortal classes.
/// Returns one diagram per degree from 0 to the largest listed.
pub fn read_diagrams_csv(path: &Path) -> Result<Vec<PersistenceDiagram>> {
    let recs = records(path, &read_text(path)?)?;
    let mut points: Vec<Vec<DiagramPoint>> = Vec::new();
    for (i, rec) in recs.iter().enumerate() {
        if i == 0 && rec[0].eq_ignore_ascii_case("dim") {
            continue;
        }
        let line = i + 1;
        let [dim, birth, death] = rec.as_slice() else {
            return Err(parse_err(path, format!("line {line}: expected dim,birth,death")));
        };
        let dim: usize = dim.parse().map_err(|e| parse_err(path, format!("line {line}: {e}")))?;
        let num = |f: &str| -> Result<f64> {
            if f.eq_ignore_ascii_case("inf") {
                return Ok(f64::INFINITY);
            }
            f.parse::<f64>().map_err(|e| parse_err(path, format!("line {line}: {e}")))
        };
        let (b, d) = (num(birth)?, num(death)?);
        if !b.is_finite() || d < b {
            return Err(parse_err(path, format!("line {line}: need finite birth <= death")));
        }
        if points.len() <= dim {
            points.resize(dim + 1, Vec::new());
        }
        points[dim].push(DiagramPoint::new(b, d));
    }
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(dim, pts)| PersistenceDiagram::new(dim, pts))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_cloud_round_trip_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, "x,y\n0,0\n1.5,2\n").unwrap();
        let c = read_point_cloud(&p).unwrap();
        assert_eq!(c.points(), &[vec![0.0, 0.0], vec![1.5, 2.0]]);
        write_point_cloud(&p, &c).unwrap();
        assert_eq!(read_point_cloud(&p).unwrap(), c);
    }

    #[test]
    fn ragged_cloud_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, "0,0\n1\n").unwrap();
        assert!(matches!(read_point_cloud(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn pgm_ascii_and_binary() {
        let dir = tempfile::tempdir().unwrap();
        let p2 = dir.path().join("a.pgm");
        fs::write(&p2, "P2\n# comment\n3 2\n255\n0 51 255\n255 0 102\n").unwrap();
        let im = read_image(&p2).unwrap();
        assert_eq!((im.rows(), im.cols()), (2, 3));
        assert_eq!(im.get(0, 1), 0.2);
        assert_eq!(im.get(1, 0), 1.0);
        let p5 = dir.path().join("b.pgm");
        let mut bytes = b"P5 3 2 255\n".to_vec();
        bytes.extend([0u8, 51, 255, 255, 0, 102]);
        fs::write(&p5, bytes).unwrap();
        assert_eq!(read_image(&p5).unwrap(), im);
    }

    #[test]
    fn csv_image_is_rescaled() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.csv");
        fs::write(&p, "0,10\n5,20\n").unwrap();
        let im = read_image(&p).unwrap();
        assert_eq!(im.values(), &[0.0, 0.5, 0.25, 1.0]);
        fs::write(&p, "0,0.5\n0.25,1\n").unwrap();
        assert_eq!(read_image(&p).unwrap().values(), &[0.0, 0.5, 0.25, 1.0]);
    }

    #[test]
    fn graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        fs::write(&p, "node,weight\n1,2.0\n0,1.0\n2,0.5\nedge,u,v\n0,1\nedge,1,2\n").unwrap();
        let g = read_graph(&p).unwrap();
        assert_eq!(g.node_weights(), &[1.0, 2.0, 0.5]);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        write_graph(&p, &g).unwrap();
        assert_eq!(read_graph(&p).unwrap(), g);
        fs::write(&p, "node,weight\n0,1\nedge,u,v\n0,7\n").unwrap();
        assert!(read_graph(&p).is_err());
    }

    #[test]
    fn diagram_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let diags = vec![
            PersistenceDiagram::from_pairs(0, &[(0.0, 1.0), (0.0, f64::INFINITY)]),
            PersistenceDiagram::from_pairs(1, &[(0.5, 0.75)]),
        ];
        crate::persistence::write_diagrams_csv(fs::File::create(&p).unwrap(), &diags).unwrap();
        assert_eq!(read_diagrams_csv(&p).unwrap(), diags);
        fs::write(&p, "dim,birth,death
0,2,1
").unwrap();
        assert!(read_diagrams_csv(&p).is_err());
    }

    #[test]
    fn treatment_and_covariates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_treatment(&p, &[true, false]).unwrap();
        assert_eq!(read_treatment(&p).unwrap(), vec![true, false]);
        fs::write(&p, "a\n2\n").unwrap();
        assert!(read_treatment(&p).is_err());
        let q = dir.path().join("x.csv");
        write_covariates(&q, &[vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
        assert_eq!(read_covariates(&q).unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.5]]);
    }
}
