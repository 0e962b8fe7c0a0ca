use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::WeightedGraph;
use crate::scalar::Scalar;

/// Graphs above this size evaluate rows in parallel. Each row is summed in
/// the same fixed order either way, so results are bit-identical.
const PARALLEL_ROWS: usize = 1 << 14;

#[inline]
fn row<S: Scalar>(graph: &WeightedGraph<S>, f: &[S], x: usize, mask: Option<&[bool]>) -> S {
    if let Some(m) = mask {
        if !m[x] {
            return S::zero();
        }
    }
    let mut acc = graph.self_weight(x) * f[x];
    for (y, w) in graph.neighbors(x) {
        if mask.map_or(true, |m| m[y]) {
            acc += w * f[y];
        }
    }
    acc / graph.mass(x)
}

#[inline]
fn free_row<S: Scalar>(graph: &WeightedGraph<S>, f: &[S], x: usize) -> S {
    let (offsets, targets, weights) = graph.csr();
    let range = offsets[x]..offsets[x + 1];
    let mut acc = graph.self_weight(x) * f[x];
    for (&y, &w) in targets[range.clone()].iter().zip(&weights[range]) {
        acc += w * f[y as usize];
    }
    acc / graph.mass(x)
}

fn apply_into<S: Scalar>(graph: &WeightedGraph<S>, f: &[S], out: &mut [S], mask: Option<&[bool]>) {
    let parallel = graph.len() >= PARALLEL_ROWS && rayon::current_num_threads() > 1;
    match (mask, parallel) {
        (None, true) => out.par_iter_mut().enumerate().for_each(|(x, o)| *o = free_row(graph, f, x)),
        (None, false) => {
            for (x, o) in out.iter_mut().enumerate() {
                *o = free_row(graph, f, x);
            }
        }
        (Some(_), true) => out.par_iter_mut().enumerate().for_each(|(x, o)| *o = row(graph, f, x, mask)),
        (Some(_), false) => {
            for (x, o) in out.iter_mut().enumerate() {
                *o = row(graph, f, x, mask);
            }
        }
    }
}

fn check_len<S: Scalar>(graph: &WeightedGraph<S>, f: &[S]) -> Result<()> {
    if f.len() != graph.len() {
        return Err(Error::Structural(format!(
            "function has {} values, graph has {} vertices",
            f.len(),
            graph.len()
        )));
    }
    Ok(())
}

/// One walk step: `f'(x) = sum_y (mu_xy / mu_x) f(y)`, self-weight included.
pub fn apply_transition<S: Scalar>(graph: &WeightedGraph<S>, f: &[S]) -> Result<Vec<S>> {
    check_len(graph, f)?;
    let mut out = vec![S::zero(); f.len()];
    apply_into(graph, f, &mut out, None);
    Ok(out)
}

/// Step of the walk killed outside `inside`: `P^B f`, zero off the domain.
pub fn apply_killed_transition<S: Scalar>(
    graph: &WeightedGraph<S>,
    f: &[S],
    inside: &[bool],
) -> Result<Vec<S>> {
    check_len(graph, f)?;
    if inside.len() != graph.len() {
        return Err(Error::Structural("domain mask size mismatch".into()));
    }
    let mut out = vec![S::zero(); f.len()];
    apply_into(graph, f, &mut out, Some(inside));
    Ok(out)
}

pub(crate) fn step_in_place<S: Scalar>(
    graph: &WeightedGraph<S>,
    cur: &mut Vec<S>,
    scratch: &mut Vec<S>,
    mask: Option<&[bool]>,
) {
    apply_into(graph, cur, scratch, mask);
    std::mem::swap(cur, scratch);
}

/// `<f, g>_mu = sum_x f(x) g(x) mu_x`.
pub fn inner_product<S: Scalar>(graph: &WeightedGraph<S>, f: &[S], g: &[S]) -> S {
    let mut acc = S::zero();
    for x in 0..graph.len() {
        acc += f[x] * g[x] * graph.mass(x);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_weighted_graph, extract_giant_cluster, gen_bond_config, AntKind};
    use crate::rng::CounterRng;

    fn sample(kind: AntKind) -> WeightedGraph<f64> {
        let cfg = gen_bond_config(2, 32, 0.65, 21).unwrap();
        build_weighted_graph(&cfg, &extract_giant_cluster(&cfg).unwrap(), kind).unwrap()
    }

    #[test]
    fn constants_are_preserved() {
        for kind in [AntKind::Myopic, AntKind::Blind] {
            let g = sample(kind);
            let out = apply_transition(&g, &vec![1.0; g.len()]).unwrap();
            assert!(out.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn indicator_gives_transition_probabilities() {
        let g = sample(AntKind::Blind);
        let x = g.len() / 2;
        let mut f = vec![0.0; g.len()];
        f[x] = 1.0;
        let out = apply_transition(&g, &f).unwrap();
        for (y, w) in g.neighbors(x) {
            assert_eq!(out[y], w / g.mass(y));
        }
        assert_eq!(out[x], g.self_weight(x) / g.mass(x));
    }

    #[test]
    fn operator_is_self_adjoint_in_mu() {
        let g = sample(AntKind::Myopic);
        let mut rng = CounterRng::new(3, 3);
        let f: Vec<f64> = (0..g.len()).map(|_| rng.next_f64()).collect();
        let h: Vec<f64> = (0..g.len()).map(|_| rng.next_f64()).collect();
        let pf = apply_transition(&g, &f).unwrap();
        let ph = apply_transition(&g, &h).unwrap();
        let lhs = inner_product(&g, &pf, &h);
        let rhs = inner_product(&g, &f, &ph);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs());
    }

    #[test]
    fn size_mismatch_is_structural() {
        let g = sample(AntKind::Myopic);
        assert!(matches!(apply_transition(&g, &[1.0]), Err(Error::Structural(_))));
    }
}
