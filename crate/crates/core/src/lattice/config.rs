//! Bond percolation and random-conductance samples on a finite box.

use crate::error::{Error, Result};
use crate::rng::{hash3, unit_f64};

/// Site on a box of Z^d; unused trailing coordinates are zero.
pub type Site = [i32; 3];

const EDGE_STREAM: u64 = 0x45_44_47_45; // "EDGE"

/// Geometry of the box `{0, .., side-1}^dim` with free boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxGeometry {
    pub dim: usize,
    pub side: usize,
}

impl BoxGeometry {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::config("d", format!("dimension must be 2 or 3, got {dim}")));
        }
        if side < 4 {
            return Err(Error::config("L", format!("box side must be at least 4, got {side}")));
        }
        Ok(Self { dim, side })
    }

    pub fn num_sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Nearest-neighbour edges inside the box: d * L^(d-1) * (L-1).
    pub fn num_edges(&self) -> usize {
        self.dim * self.side.pow(self.dim as u32 - 1) * (self.side - 1)
    }

    /// Row-major site id, first coordinate slowest.
    pub fn site_id(&self, site: &Site) -> usize {
        site[..self.dim]
            .iter()
            .fold(0usize, |acc, &c| acc * self.side + c as usize)
    }

    pub fn site(&self, mut id: usize) -> Site {
        let mut out = [0i32; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = (id % self.side) as i32;
            id /= self.side;
        }
        out
    }

    pub fn contains(&self, site: &Site) -> bool {
        site[..self.dim]
            .iter()
            .all(|&c| c >= 0 && (c as usize) < self.side)
    }

    pub fn center(&self) -> Site {
        let mut c = [0i32; 3];
        for v in c.iter_mut().take(self.dim) {
            *v = (self.side / 2) as i32;
        }
        c
    }

    /// |.|_inf distance from the site to the box boundary.
    pub fn boundary_distance(&self, site: &Site) -> usize {
        site[..self.dim]
            .iter()
            .map(|&c| (c as usize).min(self.side - 1 - c as usize))
            .min()
            .unwrap_or(0)
    }

    /// Measurement margin: sites at distance >= L/4 from the boundary.
    pub fn margin(&self) -> usize {
        self.side / 4
    }

    /// Canonical id of the edge `{site, site + e_axis}`; requires
    /// `site[axis] < side - 1`.
    pub fn edge_id(&self, axis: usize, site: &Site) -> usize {
        let per_axis = self.side.pow(self.dim as u32 - 1) * (self.side - 1);
        let mut compact = 0usize;
        for a in 0..self.dim {
            let extent = if a == axis { self.side - 1 } else { self.side };
            compact = compact * extent + site[a] as usize;
        }
        axis * per_axis + compact
    }

    /// Inverse of [`edge_id`](Self::edge_id): `(axis, lower endpoint)`.
    pub fn edge_endpoint(&self, id: usize) -> (usize, Site) {
        let per_axis = self.side.pow(self.dim as u32 - 1) * (self.side - 1);
        let axis = id / per_axis;
        let mut rem = id % per_axis;
        let mut site = [0i32; 3];
        for a in (0..self.dim).rev() {
            let extent = if a == axis { self.side - 1 } else { self.side };
            site[a] = (rem % extent) as i32;
            rem /= extent;
        }
        (axis, site)
    }

    /// All edges as `(edge id, lower site id, upper site id)` in id order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.num_edges()).map(move |id| {
            let (axis, lo) = self.edge_endpoint(id);
            let mut hi = lo;
            hi[axis] += 1;
            (id, self.site_id(&lo), self.site_id(&hi))
        })
    }
}

/// Law of the conductances in the random conductance model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConductanceLaw {
    /// `K^(2U-1)` with U uniform: log-uniform on `[1/K, K]`.
    LogUniform,
    /// Uniform on `[1/K, K]`.
    Uniform,
}

impl ConductanceLaw {
    fn sample(self, k: f64, u: f64) -> f64 {
        match self {
            ConductanceLaw::LogUniform => k.powf(2.0 * u - 1.0),
            ConductanceLaw::Uniform => {
                let lo = 1.0 / k;
                lo + (k - lo) * u
            }
        }
    }

    /// Mean and variance of one conductance.
    pub fn moments(self, k: f64) -> (f64, f64) {
        if k == 1.0 {
            return (1.0, 0.0);
        }
        match self {
            ConductanceLaw::LogUniform => {
                let ln = k.ln();
                let mean = (k - 1.0 / k) / (2.0 * ln);
                let second = (k * k - 1.0 / (k * k)) / (4.0 * ln);
                (mean, second - mean * mean)
            }
            ConductanceLaw::Uniform => {
                let lo = 1.0 / k;
                let w = k - lo;
                ((lo + k) / 2.0, w * w / 12.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EdgeLaw {
    Bernoulli { p: f64 },
    Conductance { k: f64, law: ConductanceLaw, self_weight: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum EdgeStates {
    Open(Vec<bool>),
    Conductance(Vec<f64>),
}

/// One raw sample: per-edge state indexed by canonical edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct BondConfig {
    pub geometry: BoxGeometry,
    pub seed: u64,
    pub law: EdgeLaw,
    pub states: EdgeStates,
}

/// Bernoulli(p) bond percolation on the box of side `side`.
pub fn gen_bond_config(dim: usize, side: usize, p: f64, seed: u64) -> Result<BondConfig> {
    let geometry = BoxGeometry::new(dim, side)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config("p", format!("must lie in [0, 1], got {p}")));
    }
    let open = (0..geometry.num_edges())
        .map(|id| unit_f64(hash3(seed, EDGE_STREAM, id as u64)) < p)
        .collect();
    Ok(BondConfig {
        geometry,
        seed,
        law: EdgeLaw::Bernoulli { p },
        states: EdgeStates::Open(open),
    })
}

/// Random conductances on `[1/K, K]` with the default log-uniform law and
/// zero self-weights.
pub fn gen_conductance_config(dim: usize, side: usize, k: f64, seed: u64) -> Result<BondConfig> {
    gen_conductance_config_with(dim, side, k, seed, ConductanceLaw::LogUniform, 0.0)
}

pub fn gen_conductance_config_with(
    dim: usize,
    side: usize,
    k: f64,
    seed: u64,
    law: ConductanceLaw,
    self_weight: f64,
) -> Result<BondConfig> {
    let geometry = BoxGeometry::new(dim, side)?;
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::config("K", format!("conductance bound must be >= 1, got {k}")));
    }
    if !(self_weight >= 0.0 && self_weight <= k) {
        return Err(Error::config(
            "self_weight",
            format!("self-weight must lie in [0, K], got {self_weight}"),
        ));
    }
    let values = (0..geometry.num_edges())
        .map(|id| law.sample(k, unit_f64(hash3(seed, EDGE_STREAM, id as u64))))
        .collect();
    Ok(BondConfig {
        geometry,
        seed,
        law: EdgeLaw::Conductance { k, law, self_weight },
        states: EdgeStates::Conductance(values),
    })
}

impl BondConfig {
    pub fn num_edges(&self) -> usize {
        self.geometry.num_edges()
    }

    /// Edge weight: 1/0 for percolation, the conductance otherwise.
    pub fn weight(&self, edge: usize) -> f64 {
        match &self.states {
            EdgeStates::Open(open) => {
                if open[edge] {
                    1.0
                } else {
                    0.0
                }
            }
            EdgeStates::Conductance(values) => values[edge],
        }
    }

    pub fn is_open(&self, edge: usize) -> bool {
        self.weight(edge) > 0.0
    }

    pub fn open_count(&self) -> usize {
        match &self.states {
            EdgeStates::Open(open) => open.iter().filter(|&&o| o).count(),
            EdgeStates::Conductance(values) => values.iter().filter(|&&v| v > 0.0).count(),
        }
    }

    /// Central sub-box of side `side`, keeping the parent's edge states.
    /// Used for nested-box truncation diagnostics.
    pub fn central_sub_box(&self, side: usize) -> Result<BondConfig> {
        let parent = self.geometry;
        if side > parent.side {
            return Err(Error::Domain(format!(
                "sub-box side {side} exceeds parent side {}",
                parent.side
            )));
        }
        let geometry = BoxGeometry::new(parent.dim, side)?;
        let offset = ((parent.side - side) / 2) as i32;
        let parent_edge = |id: usize| {
            let (axis, mut lo) = geometry.edge_endpoint(id);
            for c in lo.iter_mut().take(parent.dim) {
                *c += offset;
            }
            parent.edge_id(axis, &lo)
        };
        let states = match &self.states {
            EdgeStates::Open(open) => {
                EdgeStates::Open((0..geometry.num_edges()).map(|id| open[parent_edge(id)]).collect())
            }
            EdgeStates::Conductance(values) => EdgeStates::Conductance(
                (0..geometry.num_edges()).map(|id| values[parent_edge(id)]).collect(),
            ),
        };
        Ok(BondConfig { geometry, seed: self.seed, law: self.law.clone(), states })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_count_matches_formula() {
        for (d, l) in [(2, 4), (2, 17), (3, 5), (3, 8)] {
            let g = BoxGeometry::new(d, l).unwrap();
            let brute = (0..g.num_sites())
                .map(|id| {
                    let s = g.site(id);
                    (0..d).filter(|&a| (s[a] as usize) < l - 1).count()
                })
                .sum::<usize>();
            assert_eq!(g.num_edges(), brute);
        }
    }

    #[test]
    fn edge_ids_are_a_bijection() {
        let g = BoxGeometry::new(3, 5).unwrap();
        let mut seen = vec![false; g.num_edges()];
        for id in 0..g.num_sites() {
            let s = g.site(id);
            assert_eq!(g.site_id(&s), id);
            for axis in 0..3 {
                if (s[axis] as usize) < 4 {
                    let e = g.edge_id(axis, &s);
                    assert!(!seen[e]);
                    seen[e] = true;
                    assert_eq!(g.edge_endpoint(e), (axis, s));
                }
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn p_one_and_zero() {
        let full = gen_bond_config(2, 4, 1.0, 7).unwrap();
        assert_eq!(full.num_edges(), 24);
        assert_eq!(full.open_count(), 24);
        let empty = gen_bond_config(2, 4, 0.0, 7).unwrap();
        assert_eq!(empty.open_count(), 0);
    }

    #[test]
    fn open_fraction_within_binomial_band() {
        let cfg = gen_bond_config(2, 64, 0.5, 42).unwrap();
        let n = cfg.num_edges() as f64;
        let sigma = (n * 0.25).sqrt();
        assert!((cfg.open_count() as f64 - 0.5 * n).abs() < 3.0 * sigma);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(gen_bond_config(4, 8, 0.5, 1), Err(Error::Config { key, .. }) if key == "d"));
        assert!(matches!(gen_bond_config(2, 3, 0.5, 1), Err(Error::Config { key, .. }) if key == "L"));
        assert!(matches!(gen_bond_config(2, 8, 1.5, 1), Err(Error::Config { key, .. }) if key == "p"));
        assert!(matches!(gen_conductance_config(2, 8, 0.5, 1), Err(Error::Config { key, .. }) if key == "K"));
    }

    #[test]
    fn conductances_respect_support_and_mean() {
        let unit = gen_conductance_config(2, 16, 1.0, 3).unwrap();
        assert!(matches!(&unit.states, EdgeStates::Conductance(v) if v.iter().all(|&c| c == 1.0)));

        let cfg = gen_conductance_config(2, 64, 4.0, 1).unwrap();
        let EdgeStates::Conductance(values) = &cfg.states else { unreachable!() };
        assert!(values.iter().all(|&c| (0.25..=4.0).contains(&c)));
        let (mean, var) = ConductanceLaw::LogUniform.moments(4.0);
        let n = values.len() as f64;
        let emp = values.iter().sum::<f64>() / n;
        assert!((emp - mean).abs() < 3.0 * (var / n).sqrt(), "{emp} vs {mean}");
    }

    #[test]
    fn log_uniform_moments_match_quadrature() {
        // E[K^(2U-1)] by midpoint quadrature in u
        let k: f64 = 4.0;
        let m = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..m {
            let c = k.powf(2.0 * (i as f64 + 0.5) / m as f64 - 1.0);
            s1 += c;
            s2 += c * c;
        }
        let (mean, var) = ConductanceLaw::LogUniform.moments(k);
        assert!((s1 / m as f64 - mean).abs() < 1e-8);
        assert!((s2 / m as f64 - s1 * s1 / (m as f64 * m as f64) - var).abs() < 1e-7);
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let a = gen_bond_config(3, 12, 0.4, 99).unwrap();
        let b = gen_bond_config(3, 12, 0.4, 99).unwrap();
        assert_eq!(a, b);
        let c = gen_conductance_config(2, 20, 3.0, 5).unwrap();
        let d = gen_conductance_config(2, 20, 3.0, 5).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn sub_box_keeps_edge_states() {
        let cfg = gen_bond_config(2, 16, 0.6, 4).unwrap();
        let sub = cfg.central_sub_box(8).unwrap();
        for (id, lo, _) in sub.geometry.edges() {
            let (axis, _) = sub.geometry.edge_endpoint(id);
            let mut s = sub.geometry.site(lo);
            s[0] += 4;
            s[1] += 4;
            assert_eq!(sub.is_open(id), cfg.is_open(cfg.geometry.edge_id(axis, &s)));
        }
    }
}
