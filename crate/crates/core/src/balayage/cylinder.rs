//! Space-time cylinders `Q = (0,T] x B` around a graph-metric ball.

use crate::error::{Error, Result};
use crate::lattice::{graph_distances, WeightedGraph};
use crate::scalar::Scalar;

/// Number of integer radii `rho` with `d < rho`, i.e. `ceil(r)`.
fn metric_cut(r: f64) -> u32 {
    r.ceil() as u32
}

/// `B = B_d(x1, R)`, `B_1`, `B_0` (balls `{d < ceil(r)}`) and the outer
/// boundary `dB`. Vertices are addressed by local index: `0..|B|` is `B`,
/// `|B|..|B|+|dB|` is `dB`.
#[derive(Clone, Debug)]
pub struct Cylinder<S> {
    pub center: usize,
    pub radius: f64,
    pub inner_radius: f64,
    pub core_radius: f64,
    pub horizon: usize,
    closure: Vec<usize>,
    ball_len: usize,
    distance: Vec<u32>,
    in_b1: Vec<bool>,
    in_b0: Vec<bool>,
    /// Transition rows of `B`: `(local target, mu_xy)` including the
    /// self-weight, and the vertex mass.
    rows: Vec<(Vec<(usize, S)>, S)>,
    masses: Vec<S>,
    b0_separated: bool,
}

impl<S: Scalar> Cylinder<S> {
    /// Default radii `B_1 = B_d(x1, 2R/3)`, `B_0 = B_d(x1, R/2)`.
    pub fn new(graph: &WeightedGraph<S>, center: usize, radius: usize, horizon: usize) -> Result<Self> {
        let r = radius as f64;
        Self::with_radii(graph, center, r, 2.0 * r / 3.0, r / 2.0, horizon)
    }

    pub fn with_radii(
        graph: &WeightedGraph<S>,
        center: usize,
        radius: f64,
        inner_radius: f64,
        core_radius: f64,
        horizon: usize,
    ) -> Result<Self> {
        if !(radius >= 1.0) || horizon == 0 {
            return Err(Error::Domain(format!("cylinder needs R >= 1 and T >= 1, got R = {radius}, T = {horizon}")));
        }
        if !(core_radius <= inner_radius && inner_radius <= radius && core_radius > 0.0) {
            return Err(Error::Domain("cylinder radii must satisfy 0 < r0 <= r1 <= R".into()));
        }
        let dist = graph_distances(graph, center)?;
        let (cut, cut1, cut0) = (metric_cut(radius), metric_cut(inner_radius), metric_cut(core_radius));
        let mut ball: Vec<usize> = (0..graph.len()).filter(|&v| dist[v] < cut).collect();
        ball.sort_by_key(|&v| (dist[v], v));
        let ball_len = ball.len();
        let mut local = std::collections::HashMap::with_capacity(2 * ball_len);
        for (i, &v) in ball.iter().enumerate() {
            local.insert(v, i);
        }
        let mut closure = ball;
        for i in 0..ball_len {
            for (w, _) in graph.neighbors(closure[i]) {
                if !local.contains_key(&w) {
                    local.insert(w, closure.len());
                    closure.push(w);
                }
            }
        }
        let distance: Vec<u32> = closure.iter().map(|&v| dist[v]).collect();
        let in_b1: Vec<bool> = (0..ball_len).map(|i| distance[i] < cut1).collect();
        let in_b0: Vec<bool> = (0..ball_len).map(|i| distance[i] < cut0).collect();
        let rows: Vec<(Vec<(usize, S)>, S)> = (0..ball_len)
            .map(|i| {
                let v = closure[i];
                let mut row = vec![(i, graph.self_weight(v))];
                row.extend(graph.neighbors(v).map(|(w, mu)| (local[&w], mu)));
                (row, graph.mass(v))
            })
            .collect();
        let masses = closure.iter().map(|&v| graph.mass(v)).collect();
        // Charges are computed with the killed one-step kernel, which sees
        // every move of a B_1 vertex only if none of them reaches dB.
        for i in 0..ball_len {
            if in_b1[i] && rows[i].0.iter().any(|&(j, _)| j >= ball_len) {
                return Err(Error::Domain(format!(
                    "B_1 (radius {inner_radius}) touches the outer boundary of B (radius {radius})"
                )));
            }
        }
        // k(r, .) for r >= 2 lives on B_1 vertices next to B - B_1
        let b0_separated = (0..ball_len).all(|i| {
            !(in_b0[i] && in_b1[i] && rows[i].0.iter().any(|&(j, _)| j < ball_len && !in_b1[j]))
        });
        Ok(Self {
            center,
            radius,
            inner_radius,
            core_radius,
            horizon,
            closure,
            ball_len,
            distance,
            in_b1,
            in_b0,
            rows,
            masses,
            b0_separated,
        })
    }

    /// `|B|`.
    pub fn ball_len(&self) -> usize {
        self.ball_len
    }

    /// `|B u dB|`.
    pub fn closure_len(&self) -> usize {
        self.closure.len()
    }

    pub fn boundary_len(&self) -> usize {
        self.closure.len() - self.ball_len
    }

    /// Graph index of a local vertex.
    pub fn vertex(&self, local: usize) -> usize {
        self.closure[local]
    }

    pub fn vertices(&self) -> &[usize] {
        &self.closure
    }

    pub fn distance(&self, local: usize) -> u32 {
        self.distance[local]
    }

    pub fn in_ball(&self, local: usize) -> bool {
        local < self.ball_len
    }

    pub fn in_inner(&self, local: usize) -> bool {
        local < self.ball_len && self.in_b1[local]
    }

    pub fn in_core(&self, local: usize) -> bool {
        local < self.ball_len && self.in_b0[local]
    }

    pub fn inner(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ball_len).filter(|&i| self.in_b1[i])
    }

    pub fn core(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ball_len).filter(|&i| self.in_b0[i])
    }

    /// `B_1` vertices adjacent to `B - B_1`.
    pub fn charge_support(&self) -> impl Iterator<Item = usize> + '_ {
        self.inner().filter(|&i| self.rows[i].0.iter().any(|&(j, _)| j < self.ball_len && !self.in_b1[j]))
    }

    /// True when `B_0` avoids the support of the late charges.
    pub fn core_separated(&self) -> bool {
        self.b0_separated
    }

    pub fn mass(&self, local: usize) -> S {
        self.masses[local]
    }

    /// `(Pf)(x) = sum_y P(x, y) f(y)` for `x` in `B`; `f` lives on `B u dB`.
    pub fn step_at(&self, f: &[S], x: usize) -> S {
        let (row, mass) = &self.rows[x];
        let mut acc = S::zero();
        for &(j, w) in row {
            acc += w * f[j];
        }
        acc / *mass
    }

    /// `Pf` on `B`, zero on `dB`.
    pub fn step(&self, f: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.closure.len()];
        for x in 0..self.ball_len {
            out[x] = self.step_at(f, x);
        }
        out
    }

    /// `P^B f`: one step of the walk killed on leaving `B`.
    pub fn killed_step(&self, f: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.closure.len()];
        for x in 0..self.ball_len {
            let (row, mass) = &self.rows[x];
            let mut acc = S::zero();
            for &(j, w) in row {
                if j < self.ball_len {
                    acc += w * f[j];
                }
            }
            out[x] = acc / *mass;
        }
        out
    }

    /// Killed densities `p^B_m(y, .)` for `m = 0..=steps`, on local indices.
    pub fn killed_kernel(&self, y: usize, steps: usize) -> Vec<Vec<S>> {
        assert!(y < self.ball_len, "killed kernel source must lie in B");
        let mut f = vec![S::zero(); self.closure.len()];
        f[y] = S::one() / self.masses[y];
        let mut out = Vec::with_capacity(steps + 1);
        out.push(f);
        for m in 0..steps {
            let next = self.killed_step(&out[m]);
            out.push(next);
        }
        out
    }

    /// `Q_- = [T/4, T/2] x B_0` time range, rounded down.
    pub fn lower_times(&self) -> std::ops::RangeInclusive<usize> {
        (self.horizon / 4)..=(self.horizon / 2)
    }

    /// `Q_+ = [3T/4, T-1] x B_0`: the hatted field is defined up to `T - 1`.
    pub fn upper_times(&self) -> std::ops::RangeInclusive<usize> {
        (3 * self.horizon / 4)..=(self.horizon.saturating_sub(1))
    }
}
