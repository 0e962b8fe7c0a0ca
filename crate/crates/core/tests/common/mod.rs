//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use phl_core::lattice::{AntKind, BoxGeometry, Site, WeightedGraph};
use phl_core::rng::CounterRng;

/// Dense row-stochastic matrix `P(x, y) = mu_xy / mu_x` (self-weight on the diagonal).
pub fn dense_transition(g: &WeightedGraph<f64>) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut p = vec![vec![0.0; n]; n];
    for x in 0..n {
        p[x][x] = g.self_weight(x) / g.mass(x);
        for (y, w) in g.neighbors(x) {
            p[x][y] = w / g.mass(x);
        }
    }
    p
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// `exp(t (P - I))` by scaling and squaring of a Taylor series.
pub fn expm_generator(p: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut squarings = 0;
    let mut scale = t;
    while scale > 0.125 {
        scale /= 2.0;
        squarings += 1;
    }
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| scale * (p[i][j] - if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    let mut term = result.clone();
    for k in 1..30 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Random connected weighted graph on at most 8 sites of a 4x4 box, with
/// random self-weights.
pub fn random_small_graph(seed: u64, size: usize) -> WeightedGraph<f64> {
    let geom = BoxGeometry::new(2, 4).unwrap();
    let mut rng = CounterRng::new(seed, 99);
    // grow a lattice animal so the graph is connected
    let mut sites: Vec<Site> = vec![[1, 1, 0]];
    while sites.len() < size {
        let base = sites[rng.below(sites.len())];
        let dirs = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        let (dx, dy) = dirs[rng.below(4)];
        let s = [base[0] + dx, base[1] + dy, 0];
        if s[0] >= 0 && s[1] >= 0 && s[0] < 4 && s[1] < 4 && !sites.contains(&s) {
            sites.push(s);
        }
    }
    let mut edges = Vec::new();
    for (i, a) in sites.iter().enumerate() {
        for b in sites.iter().skip(i + 1) {
            if (a[0] - b[0]).abs() + (a[1] - b[1]).abs() == 1 {
                edges.push((*a, *b, 0.25 + 2.0 * rng.next_f64()));
            }
        }
    }
    let mut selfw: Vec<(Site, f64)> = Vec::new();
    for s in &sites {
        if rng.next_f64() < 0.5 {
            selfw.push((*s, rng.next_f64()));
        }
    }
    WeightedGraph::from_parts(geom, AntKind::Conductance, sites, &edges, &selfw).unwrap()
}
