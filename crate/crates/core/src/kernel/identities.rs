//! Exact identities satisfied by the discrete kernel, measured as maximal
//! deviations over a set of sources.

use super::energy::dirichlet_energy;
use super::slices::{discrete_kernel, hat_kernel, KernelSlice};
use super::transition::inner_product;
use crate::error::{Error, Result};
use crate::lattice::WeightedGraph;
use crate::rng::CounterRng;
use crate::scalar::Real;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelIdentityReport {
    pub sources: Vec<usize>,
    pub horizon: usize,
    /// `max |p_n(x,y) - p_n(y,x)|` over source pairs.
    pub symmetry: f64,
    /// `max |sum_y p_n(x,y) mu_y - 1|`.
    pub mass: f64,
    /// `max |p_{m+n}(x,y) - sum_z p_m(x,z) p_n(y,z) mu_z|`.
    pub chapman_kolmogorov: f64,
    /// `max |p_hat_{2n+2}(x,x) - p_hat_{2n}(x,x) + E(f_n, f_n)|`.
    pub energy: f64,
    /// `max (p_n(x,y) - sqrt(p_{2k}(x,x) p_{2n-2k}(y,y)))^+` with `k = n/2`.
    pub cauchy_schwarz: f64,
    /// `max (p_hat_{2n+2}(x,x) - p_hat_{2n}(x,x))^+`.
    pub diagonal_increase: f64,
}

impl KernelIdentityReport {
    pub fn worst(&self) -> f64 {
        [
            self.symmetry,
            self.mass,
            self.chapman_kolmogorov,
            self.energy,
            self.cauchy_schwarz,
            self.diagonal_increase,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `count` distinct sources inside the measurement margin, chosen by `seed`.
pub fn sample_sources<S: Real>(graph: &WeightedGraph<S>, count: usize, seed: u64) -> Result<Vec<usize>> {
    let eligible: Vec<usize> = (0..graph.len()).filter(|&v| graph.within_margin(v)).collect();
    if eligible.len() < count {
        return Err(Error::Margin(format!(
            "only {} vertices inside the margin, {count} requested",
            eligible.len()
        )));
    }
    let mut rng = CounterRng::new(seed, 0x5eed_5043);
    let mut chosen = Vec::with_capacity(count);
    while chosen.len() < count {
        let v = eligible[rng.below(eligible.len())];
        if !chosen.contains(&v) {
            chosen.push(v);
        }
    }
    Ok(chosen)
}

/// Checks every identity for `n <= horizon`; slices up to `2 horizon + 2`
/// are evolved from each source.
pub fn kernel_identities<S: Real>(
    graph: &WeightedGraph<S>,
    sources: &[usize],
    horizon: usize,
) -> Result<KernelIdentityReport> {
    let top = 2 * horizon + 3;
    let seqs: Vec<Vec<KernelSlice<S>>> = sources
        .iter()
        .map(|&x| discrete_kernel(graph, x, top))
        .collect::<Result<_>>()?;
    let mut rep = KernelIdentityReport {
        sources: sources.to_vec(),
        horizon,
        ..Default::default()
    };
    let up = |a: &mut f64, v: f64| *a = a.max(v);
    for (i, seq) in seqs.iter().enumerate() {
        let x = sources[i];
        for slice in seq {
            up(&mut rep.mass, (slice.mass(graph).to_f64_lossy() - 1.0).abs());
        }
        for n in 0..=horizon {
            let f = hat_kernel(seq, n)?;
            let e = dirichlet_energy(graph, &f.values)?.value().to_f64_lossy();
            let hi = hat_kernel(seq, 2 * n + 2)?.value(x).to_f64_lossy();
            let lo = hat_kernel(seq, 2 * n)?.value(x).to_f64_lossy();
            up(&mut rep.energy, (hi - lo + e).abs());
            up(&mut rep.diagonal_increase, (hi - lo).max(0.0));
        }
        for (j, other) in seqs.iter().enumerate() {
            let y = sources[j];
            for n in 0..=2 * horizon {
                let pxy = seq[n].value(y).to_f64_lossy();
                up(&mut rep.symmetry, (pxy - other[n].value(x).to_f64_lossy()).abs());
                let k = n / 2;
                let bound = (seq[2 * k].value(x).to_f64_lossy() * other[2 * n - 2 * k].value(y).to_f64_lossy()).sqrt();
                up(&mut rep.cauchy_schwarz, (pxy - bound).max(0.0));
            }
            for m in [0, 1, horizon / 2, horizon] {
                for n in [1, horizon / 3 + 1, horizon] {
                    let conv = inner_product(graph, &seq[m].values, &other[n].values).to_f64_lossy();
                    up(&mut rep.chapman_kolmogorov, (seq[m + n].value(y).to_f64_lossy() - conv).abs());
                }
            }
        }
    }
    Ok(rep)
}
