//! Discrete-time transition densities `p_n(x0, .)`, stored against `mu`.

use std::sync::Arc;

use super::transition::step_in_place;
use crate::error::{Error, Result};
use crate::lattice::WeightedGraph;
use crate::scalar::Scalar;

/// Upper bound on stored values for full (non-streaming) sequences.
pub const MAX_STORED_VALUES: usize = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelTime {
    Discrete(usize),
    Continuous(f64),
}

/// One time slice `y -> p(x0, y)`; `value = P(X = y) / mu_y`.
#[derive(Clone, Debug)]
pub struct KernelSlice<S> {
    pub source: usize,
    pub time: KernelTime,
    pub values: Vec<S>,
    /// Killing domain `B` (sorted vertex indices), `None` for the free walk.
    pub domain: Option<Arc<Vec<usize>>>,
}

impl<S: Scalar> KernelSlice<S> {
    pub fn step(&self) -> Option<usize> {
        match self.time {
            KernelTime::Discrete(n) => Some(n),
            KernelTime::Continuous(_) => None,
        }
    }

    /// `sum_y p(x0, y) mu_y`.
    pub fn mass(&self, graph: &WeightedGraph<S>) -> S {
        let mut acc = S::zero();
        for (y, &v) in self.values.iter().enumerate() {
            acc += v * graph.mass(y);
        }
        acc
    }

    pub fn value(&self, y: usize) -> S {
        self.values[y]
    }
}

fn delta<S: Scalar>(graph: &WeightedGraph<S>, x0: usize) -> Vec<S> {
    let mut v = vec![S::zero(); graph.len()];
    v[x0] = S::one() / graph.mass(x0);
    v
}

fn check_source<S: Scalar>(graph: &WeightedGraph<S>, x0: usize) -> Result<()> {
    if x0 >= graph.len() {
        return Err(Error::Lookup(format!("source {x0} not in graph")));
    }
    Ok(())
}

/// Streaming evolution of `p_n(x0, .)` keeping only the current slice.
pub struct KernelEvolution<'g, S> {
    graph: &'g WeightedGraph<S>,
    source: usize,
    step: usize,
    current: Vec<S>,
    scratch: Vec<S>,
    mask: Option<Vec<bool>>,
    domain: Option<Arc<Vec<usize>>>,
}

impl<'g, S: Scalar> KernelEvolution<'g, S> {
    pub fn new(graph: &'g WeightedGraph<S>, source: usize) -> Result<Self> {
        check_source(graph, source)?;
        Ok(Self {
            graph,
            source,
            step: 0,
            current: delta(graph, source),
            scratch: vec![S::zero(); graph.len()],
            mask: None,
            domain: None,
        })
    }

    /// Walk killed on leaving `domain` (vertex indices).
    pub fn killed(graph: &'g WeightedGraph<S>, domain: &[usize], source: usize) -> Result<Self> {
        check_source(graph, source)?;
        let mut mask = vec![false; graph.len()];
        for &v in domain {
            if v >= graph.len() {
                return Err(Error::Lookup(format!("domain vertex {v} not in graph")));
            }
            mask[v] = true;
        }
        if !mask[source] {
            return Err(Error::Domain("source lies outside the killing domain".into()));
        }
        let mut sorted = domain.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        Ok(Self {
            graph,
            source,
            step: 0,
            current: delta(graph, source),
            scratch: vec![S::zero(); graph.len()],
            mask: Some(mask),
            domain: Some(Arc::new(sorted)),
        })
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn values(&self) -> &[S] {
        &self.current
    }

    pub fn advance(&mut self) {
        step_in_place(self.graph, &mut self.current, &mut self.scratch, self.mask.as_deref());
        self.step += 1;
    }

    pub fn advance_to(&mut self, n: usize) {
        while self.step < n {
            self.advance();
        }
    }

    pub fn slice(&self) -> KernelSlice<S> {
        KernelSlice {
            source: self.source,
            time: KernelTime::Discrete(self.step),
            values: self.current.clone(),
            domain: self.domain.clone(),
        }
    }
}

fn check_budget(len: usize, count: usize) -> Result<()> {
    if len.saturating_mul(count) > MAX_STORED_VALUES {
        return Err(Error::Resource(format!(
            "{count} slices of {len} values exceed the storage budget; use checkpoints"
        )));
    }
    Ok(())
}

/// Full sequence `p_0, .., p_N` from `x0`.
pub fn discrete_kernel<S: Scalar>(
    graph: &WeightedGraph<S>,
    x0: usize,
    steps: usize,
) -> Result<Vec<KernelSlice<S>>> {
    check_budget(graph.len(), steps + 1)?;
    let mut evo = KernelEvolution::new(graph, x0)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(evo.slice());
    for _ in 0..steps {
        evo.advance();
        out.push(evo.slice());
    }
    Ok(out)
}

/// Slices at the requested times only (any order, duplicates allowed).
pub fn kernel_checkpoints<S: Scalar>(
    graph: &WeightedGraph<S>,
    x0: usize,
    times: &[usize],
) -> Result<Vec<KernelSlice<S>>> {
    let mut sorted = times.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    check_budget(graph.len(), sorted.len())?;
    let mut evo = KernelEvolution::new(graph, x0)?;
    let mut out = Vec::with_capacity(sorted.len());
    for t in sorted {
        evo.advance_to(t);
        out.push(evo.slice());
    }
    Ok(out)
}

/// Killed sequence `p^B_0, .., p^B_N`.
pub fn killed_kernel<S: Scalar>(
    graph: &WeightedGraph<S>,
    domain: &[usize],
    x0: usize,
    steps: usize,
) -> Result<Vec<KernelSlice<S>>> {
    check_budget(graph.len(), steps + 1)?;
    let mut evo = KernelEvolution::killed(graph, domain, x0)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(evo.slice());
    for _ in 0..steps {
        evo.advance();
        out.push(evo.slice());
    }
    Ok(out)
}

/// `p_hat_n = p_n + p_{n+1}` from a slice collection.
pub fn hat_kernel<S: Scalar>(slices: &[KernelSlice<S>], n: usize) -> Result<KernelSlice<S>> {
    let find = |t: usize| {
        slices
            .iter()
            .find(|s| s.step() == Some(t))
            .ok_or_else(|| Error::Sequencing(format!("slice at step {t} not available")))
    };
    let (a, b) = (find(n)?, find(n + 1)?);
    if a.source != b.source {
        return Err(Error::Sequencing("slices come from different sources".into()));
    }
    Ok(KernelSlice {
        source: a.source,
        time: KernelTime::Discrete(n),
        values: a.values.iter().zip(&b.values).map(|(&x, &y)| x + y).collect(),
        domain: a.domain.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{
        build_weighted_graph, extract_giant_cluster, gen_bond_config, AntKind, BoxGeometry,
    };
    use num_rational::Ratio;

    type Q = Ratio<i128>;

    fn cycle4<S: Scalar>() -> WeightedGraph<S> {
        let geom = BoxGeometry::new(2, 4).unwrap();
        let s = [[0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 0]];
        let edges: Vec<_> = (0..4).map(|i| (s[i], s[(i + 1) % 4], S::one())).collect();
        WeightedGraph::from_parts(geom, AntKind::Myopic, s.to_vec(), &edges, &[]).unwrap()
    }

    fn path<S: Scalar>(n: usize) -> WeightedGraph<S> {
        let geom = BoxGeometry::new(2, n.max(4)).unwrap();
        let s: Vec<_> = (0..n as i32).map(|i| [0, i, 0]).collect();
        let edges: Vec<_> = (0..n - 1).map(|i| (s[i], s[i + 1], S::one())).collect();
        WeightedGraph::from_parts(geom, AntKind::Myopic, s, &edges, &[]).unwrap()
    }

    #[test]
    fn four_cycle_return_density() {
        let g = cycle4::<Q>();
        let slices = discrete_kernel(&g, 0, 2).unwrap();
        assert_eq!(slices[0].value(0), Q::new(1, 2));
        // return probability 1/2 after two steps, mu = 2
        assert_eq!(slices[2].value(0), Q::new(1, 4));
        for s in &slices {
            assert_eq!(s.mass(&g), Q::from_integer(1));
        }
    }

    #[test]
    fn hat_kernel_on_bipartite_path() {
        let g = path::<Q>(7);
        let slices = discrete_kernel(&g, 3, 8).unwrap();
        for s in &slices[..8] {
            let n = s.step().unwrap();
            for y in 0..7 {
                if (y + 3 + n) % 2 == 1 {
                    assert_eq!(s.value(y), Q::from_integer(0));
                }
            }
            let hat = hat_kernel(&slices, n).unwrap();
            assert_eq!(hat.mass(&g), Q::from_integer(2));
            if n >= 3 {
                assert!(hat.values.iter().all(|v| *v > Q::from_integer(0)));
            }
        }
        assert!(matches!(hat_kernel(&slices, 8), Err(Error::Sequencing(_))));
    }

    #[test]
    fn killed_path_matches_substochastic_powers() {
        let g = path::<f64>(5);
        let domain = [1, 2, 3];
        let killed = killed_kernel(&g, &domain, 2, 6).unwrap();
        // 3x3 substochastic matrix on {1,2,3}
        let p = [[0.0, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.0]];
        let mut row = [0.0, 1.0, 0.0];
        for slice in &killed {
            for (i, &v) in [1usize, 2, 3].iter().enumerate() {
                assert!((slice.value(v) * g.mass(v) - row[i]).abs() < 1e-15);
            }
            assert_eq!(slice.value(0), 0.0);
            assert_eq!(slice.value(4), 0.0);
            let mut next = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    next[j] += row[i] * p[i][j];
                }
            }
            row = next;
        }
        let masses: Vec<f64> = killed.iter().map(|s| s.mass(&g)).collect();
        assert!(masses.windows(2).all(|w| w[1] <= w[0]));
        assert!(matches!(killed_kernel(&g, &domain, 0, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn killed_on_whole_graph_is_free_walk() {
        let cfg = gen_bond_config(2, 24, 0.7, 2).unwrap();
        let g: WeightedGraph<f64> =
            build_weighted_graph(&cfg, &extract_giant_cluster(&cfg).unwrap(), AntKind::Blind).unwrap();
        let all: Vec<usize> = (0..g.len()).collect();
        let free = discrete_kernel(&g, 5, 30).unwrap();
        let killed = killed_kernel(&g, &all, 5, 30).unwrap();
        for (a, b) in free.iter().zip(&killed) {
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn checkpoints_equal_full_sequence() {
        let cfg = gen_bond_config(2, 24, 0.8, 9).unwrap();
        let g: WeightedGraph<f64> =
            build_weighted_graph(&cfg, &extract_giant_cluster(&cfg).unwrap(), AntKind::Myopic).unwrap();
        let full = discrete_kernel(&g, 0, 40).unwrap();
        let cps = kernel_checkpoints(&g, 0, &[40, 7, 7, 13]).unwrap();
        assert_eq!(cps.len(), 3);
        for c in &cps {
            assert_eq!(c.values, full[c.step().unwrap()].values);
        }
    }

    #[test]
    fn storage_budget_is_enforced() {
        let g = path::<f64>(5);
        assert!(matches!(discrete_kernel(&g, 0, MAX_STORED_VALUES), Err(Error::Resource(_))));
    }
}
