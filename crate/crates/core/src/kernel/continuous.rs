//! Continuous-time kernel `q_t` by uniformization: `Y_t = X_{M_t}` with `M`
//! a rate-one Poisson process, so `q_t = sum_k P(M_t = k) p_k`.

use super::slices::{KernelEvolution, KernelSlice, KernelTime};
use crate::error::{Error, Result};
use crate::lattice::WeightedGraph;
use crate::scalar::Real;

/// Poisson(t) weights `w_0..=w_K` with the exact tail `P(M_t > K) < tol`.
#[derive(Clone, Debug)]
pub struct PoissonTruncation {
    pub weights: Vec<f64>,
    /// Certified upper bound on the omitted mass `P(M_t > K)`.
    pub tail: f64,
}

impl PoissonTruncation {
    pub fn new(t: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::config("tol", format!("tolerance must be positive, got {tol}")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(Self { weights: vec![1.0], tail: 0.0 });
        }
        // far enough out that the remaining tail is far below any useful tol
        let horizon = (t + 14.0 * t.sqrt() + 60.0).ceil() as usize;
        let ln_t = t.ln();
        let mut log_w = -t;
        let mut all = Vec::with_capacity(horizon + 1);
        all.push(log_w.exp());
        for k in 1..=horizon {
            log_w += ln_t - (k as f64).ln();
            all.push(log_w.exp());
        }
        // geometric bound beyond the horizon: w_{j+1}/w_j = t/(j+1) <= t/(horizon+1)
        let ratio = t / (horizon as f64 + 1.0);
        let beyond = all[horizon] * ratio / (1.0 - ratio);
        // suffix[k] = sum_{j >= k} w_j, accumulated from the small end
        let mut suffix = vec![0.0; horizon + 2];
        suffix[horizon + 1] = beyond;
        for k in (0..=horizon).rev() {
            suffix[k] = suffix[k + 1] + all[k];
        }
        let cut = (0..=horizon)
            .find(|&k| suffix[k + 1] < tol)
            .ok_or_else(|| Error::Domain(format!("Poisson tail for t = {t} does not reach {tol}")))?;
        all.truncate(cut + 1);
        Ok(Self { weights: all, tail: suffix[cut + 1] })
    }

    pub fn terms(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Clone, Debug)]
pub struct ContinuousKernel<S> {
    pub slice: KernelSlice<S>,
    /// Omitted Poisson mass; the slice mass deficit is at most this.
    pub tail: f64,
    pub terms: usize,
}

/// `q_t(x0, .)` truncated where the Poisson tail drops below `tol`.
pub fn continuous_kernel<S: Real>(
    graph: &WeightedGraph<S>,
    x0: usize,
    t: f64,
    tol: f64,
) -> Result<ContinuousKernel<S>> {
    Ok(continuous_kernels(graph, x0, &[t], tol)?.pop().expect("one time"))
}

/// Several times sharing one walk evolution.
pub fn continuous_kernels<S: Real>(
    graph: &WeightedGraph<S>,
    x0: usize,
    times: &[f64],
    tol: f64,
) -> Result<Vec<ContinuousKernel<S>>> {
    let truncs = times
        .iter()
        .map(|&t| PoissonTruncation::new(t, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut evo = KernelEvolution::new(graph, x0)?;
    let mut acc: Vec<Vec<S>> = vec![vec![S::zero(); graph.len()]; times.len()];
    let max_terms = truncs.iter().map(|p| p.terms()).max().unwrap_or(0);
    for k in 0..max_terms {
        for (trunc, out) in truncs.iter().zip(acc.iter_mut()) {
            if let Some(&w) = trunc.weights.get(k) {
                if w > 0.0 {
                    let w = S::from_f64_lossy(w);
                    for (o, &p) in out.iter_mut().zip(evo.values()) {
                        *o += w * p;
                    }
                }
            }
        }
        if k + 1 < max_terms {
            evo.advance();
        }
    }
    Ok(times
        .iter()
        .zip(truncs)
        .zip(acc)
        .map(|((&t, trunc), values)| ContinuousKernel {
            slice: KernelSlice { source: x0, time: KernelTime::Continuous(t), values, domain: None },
            tail: trunc.tail,
            terms: trunc.terms(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::transition::inner_product;
    use crate::lattice::{AntKind, BoxGeometry};

    #[test]
    fn poisson_tail_is_certified() {
        for &t in &[0.5, 3.0, 40.0, 1024.0] {
            let p = PoissonTruncation::new(t, 1e-12).unwrap();
            assert!(p.tail < 1e-12);
            let kept: f64 = p.weights.iter().sum();
            // the log recurrence loses about one ulp per term
            let slack = 4.0 * f64::EPSILON * p.terms() as f64;
            assert!((1.0 - kept - p.tail).abs() < slack, "t = {t}: {}", 1.0 - kept - p.tail);
        }
        assert!(matches!(PoissonTruncation::new(1.0, 0.0), Err(Error::Config { .. })));
        assert_eq!(PoissonTruncation::new(0.0, 1e-9).unwrap().weights, vec![1.0]);
    }

    fn triangle_with_tail() -> WeightedGraph<f64> {
        let geom = BoxGeometry::new(2, 4).unwrap();
        let s = [[0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 0]];
        let edges = [
            (s[0], s[1], 1.0),
            (s[1], s[2], 2.0),
            (s[2], s[3], 0.5),
            (s[3], s[0], 1.5),
        ];
        WeightedGraph::from_parts(geom, AntKind::Conductance, s.to_vec(), &edges, &[(s[1], 0.75)])
            .unwrap()
    }

    #[test]
    fn zero_time_is_delta() {
        let g = triangle_with_tail();
        let q = continuous_kernel(&g, 2, 0.0, 1e-12).unwrap();
        assert_eq!(q.slice.value(2), 1.0 / g.mass(2));
        assert_eq!(q.terms, 1);
    }

    #[test]
    fn semigroup_property() {
        let g = triangle_with_tail();
        let tol = 1e-13;
        let (s, t) = (0.7, 1.9);
        let qs: Vec<_> = (0..g.len()).map(|x| continuous_kernel(&g, x, s, tol).unwrap()).collect();
        let qt: Vec<_> = (0..g.len()).map(|x| continuous_kernel(&g, x, t, tol).unwrap()).collect();
        let qst = continuous_kernel(&g, 0, s + t, tol).unwrap();
        for y in 0..g.len() {
            let conv = inner_product(&g, &qs[0].slice.values, &qt[y].slice.values);
            assert!((conv - qst.slice.value(y)).abs() < 1e-12);
        }
        assert!((qst.slice.mass(&g) - 1.0).abs() <= qst.tail + 1e-14);
    }
}
