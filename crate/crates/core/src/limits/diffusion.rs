//! Exact second moments of the walk and the diffusion constant they imply.

use crate::error::{Error, Result};
use crate::kernel::KernelEvolution;
use crate::lattice::WeightedGraph;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionEstimate {
    pub steps: usize,
    /// `E|X_N - x0|^2 / (d N)`.
    pub diffusion: f64,
    /// `E (X_N - x0)_i^2 / N` per coordinate.
    pub coordinate: Vec<f64>,
}

impl DiffusionEstimate {
    /// `max_i |v_i - mean| / mean` over coordinate rates.
    pub fn anisotropy(&self) -> f64 {
        let mean = self.coordinate.iter().sum::<f64>() / self.coordinate.len() as f64;
        self.coordinate.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max)
    }
}

/// Horizon allowed by the truncation margin: `(L/4)^2`.
pub fn margin_horizon<S: Scalar>(graph: &WeightedGraph<S>) -> usize {
    graph.geometry().margin().pow(2)
}

pub(crate) fn check_horizon<S: Scalar>(graph: &WeightedGraph<S>, x0: usize, steps: usize) -> Result<()> {
    if x0 >= graph.len() {
        return Err(Error::Lookup(format!("vertex {x0} not in graph")));
    }
    if !graph.within_margin(x0) {
        return Err(Error::Margin(format!("source {:?} lies inside the boundary margin", graph.site(x0))));
    }
    if steps > margin_horizon(graph) {
        return Err(Error::Margin(format!(
            "{steps} steps exceed the margin horizon (L/4)^2 = {}",
            margin_horizon(graph)
        )));
    }
    Ok(())
}

/// Second moments computed from the exact slice `p_N(x0, .)`.
pub fn estimate_diffusion<S: Scalar>(graph: &WeightedGraph<S>, x0: usize, steps: usize) -> Result<DiffusionEstimate> {
    if steps == 0 {
        return Err(Error::Domain("diffusion estimate needs at least one step".into()));
    }
    check_horizon(graph, x0, steps)?;
    let mut evo = KernelEvolution::new(graph, x0)?;
    evo.advance_to(steps);
    Ok(moments_from(graph, x0, evo.values(), steps))
}

pub(crate) fn moments_from<S: Scalar>(graph: &WeightedGraph<S>, x0: usize, density: &[S], steps: usize) -> DiffusionEstimate {
    let d = graph.dim();
    let origin = graph.site(x0);
    let mut second = vec![0.0f64; d];
    for (y, &p) in density.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let prob = (p * graph.mass(y)).to_f64_lossy();
        let s = graph.site(y);
        for a in 0..d {
            let dx = (s[a] - origin[a]) as f64;
            second[a] += prob * dx * dx;
        }
    }
    let coordinate: Vec<f64> = second.iter().map(|v| v / steps as f64).collect();
    DiffusionEstimate { steps, diffusion: coordinate.iter().sum::<f64>() / d as f64, coordinate }
}
