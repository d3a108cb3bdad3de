#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use topocause::complex::{Cell, FilteredComplex};
use topocause::nuisance::{expit, CausalSample};
use topocause::persistence::PersistenceDiagram;
use topocause::summary::{SilhouetteCurve, SummaryGrid};

/// Rank over GF(2) of a set of bit vectors.
pub fn gf2_rank(vectors: &[u128]) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for &v in vectors {
        let mut v = v;
        for &b in &basis {
            let top = 127 - b.leading_zeros();
            if v >> top & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 {
            basis.push(v);
            basis.sort_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Basis of the kernel of the map sending each column index to the bit
/// vector `images[i]`.
fn gf2_kernel(images: &[u128]) -> Vec<u128> {
    // each row: (image, combination of source columns)
    let mut rows: Vec<(u128, u128)> = images.iter().enumerate().map(|(i, &v)| (v, 1u128 << i)).collect();
    let mut kernel = Vec::new();
    let mut pivots: Vec<(u128, u128)> = Vec::new();
    for row in rows.drain(..) {
        let (mut v, mut c) = row;
        for &(pv, pc) in &pivots {
            let top = 127 - pv.leading_zeros();
            if v >> top & 1 == 1 {
                v ^= pv;
                c ^= pc;
            }
        }
        if v == 0 {
            kernel.push(c);
        } else {
            pivots.push((v, c));
            pivots.sort_by(|a, b| b.0.cmp(&a.0));
        }
    }
    kernel
}

/// Persistence diagrams recomputed from ranks of boundary maps at every
/// critical value, with multiplicities from persistent Betti numbers.
/// Cells are identified by vertex sets, so the complex must be simplicial.
pub fn betti_oracle(cells: &[Cell], max_dim: usize) -> Vec<Vec<(f64, f64)>> {
    let mut values: Vec<f64> = cells.iter().map(|c| c.value).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let m = values.len();
    let by_dim: Vec<Vec<&Cell>> = (0..=max_dim + 1)
        .map(|d| cells.iter().filter(|c| c.dim == d).collect())
        .collect();
    let index: Vec<BTreeMap<Vec<usize>, usize>> = by_dim
        .iter()
        .map(|cs| cs.iter().enumerate().map(|(i, c)| (c.vertices.clone(), i)).collect())
        .collect();
    let boundary = |d: usize, c: &Cell| -> u128 {
        if d == 0 {
            return 0;
        }
        let mut v = 0u128;
        for skip in 0..c.vertices.len() {
            let face: Vec<usize> = c.vertices.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &x)| x).collect();
            v |= 1u128 << index[d - 1][&face];
        }
        v
    };
    let level = |t: f64| values.iter().position(|&v| v == t).unwrap();

    // beta[k][i][j]: rank of H_k(K_i) -> H_k(K_j)
    let mut diagrams = vec![Vec::new(); max_dim + 1];
    for (k, diagram) in diagrams.iter_mut().enumerate() {
        let cycles_at = |i: usize| -> Vec<u128> {
            let present: Vec<(usize, &Cell)> = by_dim[k].iter().enumerate().filter(|(_, c)| level(c.value) <= i).map(|(n, c)| (n, *c)).collect();
            let images: Vec<u128> = present.iter().map(|(_, c)| boundary(k, c)).collect();
            gf2_kernel(&images)
                .into_iter()
                .map(|comb| {
                    let mut v = 0u128;
                    for (bit, (n, _)) in present.iter().enumerate() {
                        if comb >> bit & 1 == 1 {
                            v |= 1u128 << n;
                        }
                    }
                    v
                })
                .collect()
        };
        let boundaries_at = |j: usize| -> Vec<u128> {
            by_dim[k + 1].iter().filter(|c| level(c.value) <= j).map(|c| boundary(k + 1, c)).collect()
        };
        let mut beta = vec![vec![0i64; m]; m];
        for i in 0..m {
            let z = cycles_at(i);
            for j in i..m {
                let b = boundaries_at(j);
                let mut both = z.clone();
                both.extend(&b);
                beta[i][j] = gf2_rank(&both) as i64 - gf2_rank(&b) as i64;
            }
        }
        let get = |i: isize, j: usize| -> i64 { if i < 0 { 0 } else { beta[i as usize][j] } };
        for i in 0..m {
            for j in (i + 1)..m {
                let mu = get(i as isize, j - 1) - get(i as isize, j) - get(i as isize - 1, j - 1) + get(i as isize - 1, j);
                assert!(mu >= 0, "negative multiplicity");
                for _ in 0..mu {
                    diagram.push((values[i], values[j]));
                }
            }
            let inf = get(i as isize, m - 1) - get(i as isize - 1, m - 1);
            for _ in 0..inf {
                diagram.push((values[i], f64::INFINITY));
            }
        }
        diagram.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    diagrams
}

pub fn as_pairs(d: &PersistenceDiagram) -> Vec<(f64, f64)> {
    d.sorted().iter().map(|p| (p.birth, p.death)).collect()
}

/// Random simplicial complex on at most 8 vertices with simplices of
/// dimension at most 2 and small integer values, so ties are common.
pub fn random_simplicial(rng: &mut ChaCha8Rng) -> FilteredComplex {
    let n = rng.random_range(1..=8usize);
    let mut value: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for v in 0..n {
        value.insert(vec![v], rng.random_range(0..4) as f64);
    }
    let edge_p = rng.random_range(0.2..1.0);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < edge_p {
                let base = value[&vec![u]].max(value[&vec![v]]);
                value.insert(vec![u, v], base + rng.random_range(0..3) as f64);
            }
        }
    }
    let tri_p = rng.random_range(0.0..1.0);
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let faces = [vec![a, b], vec![a, c], vec![b, c]];
                if faces.iter().all(|f| value.contains_key(f)) && rng.random::<f64>() < tri_p {
                    let base = faces.iter().map(|f| value[f]).fold(0.0, f64::max);
                    value.insert(vec![a, b, c], base + rng.random_range(0..3) as f64);
                }
            }
        }
    }
    let cells = value.into_iter().map(|(v, t)| Cell::simplex(v, t)).collect();
    FilteredComplex::simplicial(cells).expect("monotone by construction")
}

/// Random finite diagram with up to `max_points` points in `[0, scale]`.
pub fn random_diagram(rng: &mut ChaCha8Rng, dim: usize, max_points: usize, scale: f64) -> PersistenceDiagram {
    let k = rng.random_range(0..=max_points);
    let pairs: Vec<(f64, f64)> = (0..k)
        .map(|_| {
            let b = rng.random::<f64>() * scale;
            let d = b + rng.random::<f64>() * scale;
            (b, d)
        })
        .collect();
    PersistenceDiagram::from_pairs(dim, &pairs)
}

pub fn vertex_sets(k: &FilteredComplex) -> BTreeSet<Vec<usize>> {
    k.cells().iter().map(|c| c.vertices.clone()).collect()
}

/// Units with two standard normal covariates, treatment drawn from
/// `expit(x1)`, and smooth outcome curves plus noise on `grid`.
pub fn synthetic_samples(rng: &mut ChaCha8Rng, n: usize, grid: SummaryGrid) -> Vec<CausalSample> {
    let ts = grid.points();
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..2).map(|_| StandardNormal.sample(rng)).collect();
            let a = rng.random::<f64>() < expit(x[0]);
            let level = 1.0 + 0.5 * a as u8 as f64 + 0.3 * x[0] - 0.2 * x[1];
            let values = ts
                .iter()
                .map(|t| level * (1.0 + t).sin().abs() + 0.1 * rng.random::<f64>())
                .collect();
            let curve = SilhouetteCurve {
                grid,
                values,
                r: 1.0,
                empty_diagram: false,
            };
            CausalSample {
                x,
                a,
                y: BTreeMap::from([(1, curve)]),
            }
        })
        .collect()
}
