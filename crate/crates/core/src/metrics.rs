//! Wasserstein distances between persistence diagrams and the silhouette
//! stability certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::{DiagramPoint, PersistenceDiagram};
use crate::summary::{silhouette, SummaryGrid};

/// One matched pair. `None` stands for the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchPair {
    pub left: Option<usize>,
    pub right: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchPair>,
    /// `Σ cost^q` over the pairs; the distance is its `1/q`-th power.
    pub cost: f64,
}

fn linf(p: DiagramPoint, q: DiagramPoint) -> f64 {
    (p.birth - q.birth).abs().max((p.death - q.death).abs())
}

fn to_diagonal(p: DiagramPoint) -> f64 {
    (p.death - p.birth) / 2.0
}

fn check_inputs(d1: &PersistenceDiagram, d2: &PersistenceDiagram, q: f64) -> Result<()> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::invalid(format!("Wasserstein order q must be >= 1, got {q}")));
    }
    d1.check_finite()?;
    d2.check_finite()?;
    Ok(())
}

/// Minimum-cost perfect assignment on a square matrix (shortest augmenting
/// paths with potentials). Returns `col_of_row`.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays; column 0 is a virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

/// q-Wasserstein distance with an optimal matching.
pub fn wasserstein(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    q: f64,
) -> Result<(f64, Matching)> {
    check_inputs(d1, d2, q)?;
    let (a, b) = (&d1.points, &d2.points);
    let (n, m) = (a.len(), b.len());
    let size = n + m;
    if size == 0 {
        return Ok((0.0, Matching { pairs: Vec::new(), cost: 0.0 }));
    }
    // rows: points of d1 then diagonal slots; columns: points of d2 then diagonal slots
    let mut cost = vec![vec![0.0; size]; size];
    for (i, row) in cost.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = match (i < n, j < m) {
                (true, true) => linf(a[i], b[j]).powf(q),
                (true, false) => to_diagonal(a[i]).powf(q),
                (false, true) => to_diagonal(b[j]).powf(q),
                (false, false) => 0.0,
            };
        }
    }
    let col_of = hungarian(&cost);
    let mut pairs = Vec::new();
    let mut total = 0.0;
    for (i, &j) in col_of.iter().enumerate() {
        let left = (i < n).then_some(i);
        let right = (j < m).then_some(j);
        if left.is_none() && right.is_none() {
            continue;
        }
        total += cost[i][j];
        pairs.push(MatchPair { left, right });
    }
    pairs.sort_by_key(|p| (p.left.is_none(), p.left, p.right));
    Ok((total.powf(1.0 / q), Matching { pairs, cost: total }))
}

/// Exhaustive search over all partial matchings; only for tiny diagrams.
pub fn wasserstein_bruteforce(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    q: f64,
) -> Result<f64> {
    check_inputs(d1, d2, q)?;
    if d1.len() + d2.len() > 8 {
        return Err(Error::SizeLimit(format!(
            "brute force handles at most 8 points, got {}",
            d1.len() + d2.len()
        )));
    }
    fn search(
        i: usize,
        a: &[DiagramPoint],
        b: &[DiagramPoint],
        used: &mut Vec<bool>,
        q: f64,
        acc: f64,
        best: &mut f64,
    ) {
        if i == a.len() {
            let rest: f64 = b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(p, _)| to_diagonal(*p).powf(q))
                .sum();
            *best = best.min(acc + rest);
            return;
        }
        search(i + 1, a, b, used, q, acc + to_diagonal(a[i]).powf(q), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                search(i + 1, a, b, used, q, acc + linf(a[i], b[j]).powf(q), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; d2.len()];
    search(0, &d1.points, &d2.points, &mut used, q, 0.0, &mut best);
    Ok(best.powf(1.0 / q))
}

/// Upper bound on `|(b-a)^r - (b'-a')^r|` via the mean value theorem, using
/// the endpoint where `x^(r-1)` is largest.
pub fn weight_gap_bound(p: DiagramPoint, p2: DiagramPoint, r: f64) -> f64 {
    let (x, y) = (p.persistence(), p2.persistence());
    let dist = linf(p, p2);
    if dist == 0.0 {
        return 0.0;
    }
    let c = if r >= 1.0 { x.max(y) } else { x.min(y) };
    2.0 * r * c.powf(r - 1.0) * dist
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub w1: f64,
    pub sup_diff: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub c: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Exact mean-value point of `x ↦ x^r` between two distinct lifetimes.
fn mean_value_point(x: f64, y: f64, r: f64) -> f64 {
    let (lo, hi) = (x.min(y), x.max(y));
    if lo == 0.0 {
        return hi * r.powf(1.0 / (1.0 - r));
    }
    let slope = (hi.powf(r) - lo.powf(r)) / (r * (hi - lo));
    slope.powf(1.0 / (r - 1.0)).clamp(lo, hi)
}

/// Compare the sup-norm silhouette gap with `(1 + 2 L r c^(r-1)) W_1`.
///
/// `L` is the largest `(b-a)^(1-r)` over both diagrams. For `r >= 1`, `c` is
/// the largest lifetime in either diagram. For `r < 1` the map `x^(r-1)` is
/// decreasing, so `c` is the smallest mean-value point over the pairs of the
/// optimal matching whose lifetimes differ.
pub fn stability_check(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    r: f64,
    grid: &SummaryGrid,
) -> Result<StabilityCertificate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("power r must be positive, got {r}")));
    }
    let (w1, matching) = wasserstein(d1, d2, 1.0)?;
    let phi1 = silhouette(d1, r, grid)?;
    let phi2 = silhouette(d2, r, grid)?;
    let sup_diff = phi1
        .values
        .iter()
        .zip(&phi2.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let lifetimes: Vec<f64> = d1
        .points
        .iter()
        .chain(&d2.points)
        .map(|p| p.persistence())
        .filter(|&x| x > 0.0)
        .collect();
    let l = lifetimes.iter().map(|x| x.powf(1.0 - r)).fold(0.0, f64::max);
    let max_life = lifetimes.iter().cloned().fold(0.0, f64::max);
    let c = if r >= 1.0 {
        max_life
    } else {
        let life = |d: &PersistenceDiagram, i: Option<usize>| i.map_or(0.0, |k| d.points[k].persistence());
        matching
            .pairs
            .iter()
            .map(|m| (life(d1, m.left), life(d2, m.right)))
            .filter(|(x, y)| x != y)
            .map(|(x, y)| mean_value_point(x, y, r))
            .fold(f64::INFINITY, f64::min)
    };
    let c = if c.is_finite() { c } else { max_life };
    let bound = if w1 == 0.0 {
        0.0
    } else {
        (1.0 + 2.0 * l * r * c.powf(r - 1.0)) * w1
    };
    Ok(StabilityCertificate {
        w1,
        sup_diff,
        l,
        c,
        bound,
        satisfied: sup_diff <= bound + 1e-9,
    })
}

/// JSON report for the `distance` subcommand.
pub fn distance_report(
    q: f64,
    distance: f64,
    matching: &Matching,
    certificate: Option<&StabilityCertificate>,
) -> serde_json::Value {
    serde_json::json!({
        "q": q,
        "distance": distance,
        "matching": matching.pairs,
        "certificate": certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(pairs: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::from_pairs(1, pairs)
    }

    #[test]
    fn single_point_to_empty() {
        let (d, m) = wasserstein(&diag(&[(0.0, 2.0)]), &diag(&[]), 1.0).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert_eq!(m.pairs, vec![MatchPair { left: Some(0), right: None }]);
    }

    #[test]
    fn identical_diagrams_match_identically() {
        let a = diag(&[(0.0, 2.0), (1.0, 5.0), (0.5, 0.7)]);
        let (d, m) = wasserstein(&a, &a, 1.0).unwrap();
        assert_eq!(d, 0.0);
        for p in &m.pairs {
            assert_eq!(p.left, p.right);
        }
    }

    #[test]
    fn direct_match_beats_two_deletions() {
        let (d, m) = wasserstein(&diag(&[(0.0, 2.0)]), &diag(&[(0.5, 2.5)]), 1.0).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert_eq!(m.pairs, vec![MatchPair { left: Some(0), right: Some(0) }]);
    }

    #[test]
    fn bruteforce_examples() {
        let d = wasserstein_bruteforce(&diag(&[(0.0, 4.0)]), &diag(&[(1.0, 2.0)]), 1.0).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        assert_eq!(wasserstein_bruteforce(&diag(&[]), &diag(&[]), 1.0).unwrap(), 0.0);
        let big = diag(&[(0.0, 1.0); 5]);
        assert!(matches!(
            wasserstein_bruteforce(&big, &big, 1.0),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn rejects_bad_q_and_infinity() {
        assert!(wasserstein(&diag(&[]), &diag(&[]), 0.5).is_err());
        assert!(wasserstein(&diag(&[(0.0, f64::INFINITY)]), &diag(&[]), 1.0).is_err());
    }

    #[test]
    fn weight_gap_examples() {
        let p = DiagramPoint::new(0.0, 2.0);
        assert_eq!(weight_gap_bound(p, p, 0.5), 0.0);
        assert!((weight_gap_bound(p, DiagramPoint::new(0.0, 3.0), 1.0) - 2.0).abs() < 1e-12);
        let b = weight_gap_bound(DiagramPoint::new(0.0, 1.0), DiagramPoint::new(0.0, 2.0), 2.0);
        assert!((b - 8.0).abs() < 1e-12);
    }

    #[test]
    fn stability_examples() {
        let g = SummaryGrid::new(0.0, 3.0, 301).unwrap();
        let a = diag(&[(0.0, 2.0)]);
        let cert = stability_check(&a, &a, 1.0, &g).unwrap();
        assert_eq!(cert.sup_diff, 0.0);
        assert_eq!(cert.bound, 0.0);
        assert!(cert.satisfied);

        let cert = stability_check(&a, &diag(&[(0.5, 2.5)]), 1.0, &g).unwrap();
        assert!((cert.w1 - 0.5).abs() < 1e-12);
        assert!((cert.bound - 1.5).abs() < 1e-12);
        assert!(cert.satisfied);
    }

    #[test]
    fn small_power_uses_mean_value_point() {
        // a short feature next to a long one moves the r = 0.1 silhouette a lot
        let g = SummaryGrid::new(0.0, 2.0, 2001).unwrap();
        let cert = stability_check(&diag(&[(0.0, 2.0)]), &diag(&[(0.0, 2.0), (0.0, 0.02)]), 0.1, &g)
            .unwrap();
        assert!(cert.sup_diff > 0.3);
        assert!(cert.satisfied, "{cert:?}");
    }
}
