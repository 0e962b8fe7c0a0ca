//! Weighted walk graph on a cluster.

use std::collections::VecDeque;

use super::cluster::Cluster;
use super::config::{BondConfig, BoxGeometry, EdgeLaw, Site};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const NONE: u32 = u32::MAX;

/// Which walk the weights describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AntKind {
    /// Uniform over open edges; no self-weight.
    Myopic,
    /// Each of the 2d directions with probability 1/2d, staying put on closed
    /// edges: self-weight `2d - degree`, so every mass equals `2d`.
    Blind,
    /// Edge conductances copied from the configuration.
    Conductance,
}

impl AntKind {
    pub fn name(self) -> &'static str {
        match self {
            AntKind::Myopic => "myopic",
            AntKind::Blind => "blind",
            AntKind::Conductance => "conductance",
        }
    }
}

impl std::str::FromStr for AntKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "myopic" => Ok(AntKind::Myopic),
            "blind" => Ok(AntKind::Blind),
            "conductance" => Ok(AntKind::Conductance),
            other => Err(Error::config("kind", format!("unknown ant kind `{other}`"))),
        }
    }
}

/// Connected weighted graph with symmetric weights `mu_xy`, self-weights
/// `mu_xx` and masses `mu_x = mu_xx + sum_y mu_xy`.
///
/// Vertices are indexed in increasing site-id order; adjacency rows are
/// stored in CSR form with neighbours in increasing index order, which fixes
/// the summation order of every operator built on top.
#[derive(Clone, Debug)]
pub struct WeightedGraph<S> {
    geometry: BoxGeometry,
    kind: AntKind,
    sites: Vec<Site>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<S>,
    self_weights: Vec<S>,
    masses: Vec<S>,
    lookup: Vec<u32>,
}

impl<S: Scalar> WeightedGraph<S> {
    /// Assemble a graph from an undirected edge list (each pair once).
    pub fn from_parts(
        geometry: BoxGeometry,
        kind: AntKind,
        mut sites: Vec<Site>,
        edges: &[(Site, Site, S)],
        self_weights: &[(Site, S)],
    ) -> Result<Self> {
        sites.sort_by_key(|s| geometry.site_id(s));
        sites.dedup();
        let mut lookup = vec![NONE; geometry.num_sites()];
        for (i, s) in sites.iter().enumerate() {
            if !geometry.contains(s) {
                return Err(Error::Structural(format!("site {s:?} outside the box")));
            }
            lookup[geometry.site_id(s)] = i as u32;
        }
        let index = |s: &Site| -> Result<usize> {
            if !geometry.contains(s) || lookup[geometry.site_id(s)] == NONE {
                return Err(Error::Structural(format!("edge endpoint {s:?} is not a vertex")));
            }
            Ok(lookup[geometry.site_id(s)] as usize)
        };
        let n = sites.len();
        let mut rows: Vec<Vec<(u32, S)>> = vec![Vec::new(); n];
        for (a, b, w) in edges {
            let (ia, ib) = (index(a)?, index(b)?);
            if ia == ib {
                return Err(Error::Structural("self-loop in edge list".into()));
            }
            if *w <= S::zero() {
                return Err(Error::Structural(format!("non-positive weight on {a:?}-{b:?}")));
            }
            rows[ia].push((ib as u32, *w));
            rows[ib].push((ia as u32, *w));
        }
        let mut selfw = vec![S::zero(); n];
        for (s, w) in self_weights {
            if *w < S::zero() {
                return Err(Error::Structural(format!("negative self-weight at {s:?}")));
            }
            selfw[index(s)?] = *w;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(t, _)| t);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Structural("duplicate edge".into()));
            }
            for &(t, w) in row.iter() {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        let masses = (0..n)
            .map(|v| {
                let mut m = selfw[v];
                for &w in &weights[offsets[v]..offsets[v + 1]] {
                    m += w;
                }
                m
            })
            .collect::<Vec<S>>();
        if let Some(v) = masses.iter().position(|m| *m <= S::zero()) {
            return Err(Error::Structural(format!("vertex {:?} has zero mass", sites[v])));
        }
        let graph = Self {
            geometry,
            kind,
            sites,
            offsets,
            targets,
            weights,
            self_weights: selfw,
            masses,
            lookup,
        };
        if !graph.is_connected() {
            return Err(Error::Structural("graph is not connected".into()));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim
    }

    pub fn geometry(&self) -> BoxGeometry {
        self.geometry
    }

    pub fn kind(&self) -> AntKind {
        self.kind
    }

    pub fn site(&self, v: usize) -> Site {
        self.sites[v]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn index_of(&self, site: &Site) -> Option<usize> {
        if !self.geometry.contains(site) {
            return None;
        }
        match self.lookup[self.geometry.site_id(site)] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    /// Neighbours `y != x` with `mu_xy > 0`, in increasing index order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&t, &w)| (t as usize, w))
    }

    /// Compressed rows `(offsets, targets, weights)` for tight loops.
    pub(crate) fn csr(&self) -> (&[usize], &[u32], &[S]) {
        (&self.offsets, &self.targets, &self.weights)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Weight `mu_xy` (zero when not adjacent; `mu_xx` when equal).
    pub fn weight(&self, x: usize, y: usize) -> S {
        if x == y {
            return self.self_weights[x];
        }
        let range = self.offsets[x]..self.offsets[x + 1];
        match self.targets[range.clone()].binary_search(&(y as u32)) {
            Ok(i) => self.weights[range.start + i],
            Err(_) => S::zero(),
        }
    }

    pub fn self_weight(&self, v: usize) -> S {
        self.self_weights[v]
    }

    pub fn mass(&self, v: usize) -> S {
        self.masses[v]
    }

    pub fn masses(&self) -> &[S] {
        &self.masses
    }

    pub fn boundary_distance(&self, v: usize) -> usize {
        self.geometry.boundary_distance(&self.sites[v])
    }

    pub fn within_margin(&self, v: usize) -> bool {
        self.boundary_distance(v) >= self.geometry.margin()
    }

    /// Every undirected edge once, as `(x, y, mu_xy)` with `x < y`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.len()).flat_map(move |x| {
            self.neighbors(x).filter(move |&(y, _)| y > x).map(move |(y, w)| (x, y, w))
        })
    }

    fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        bfs_distances(self, 0).iter().all(|&d| d != u32::MAX)
    }

    /// Convert weights to another scalar type.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(S) -> T) -> WeightedGraph<T> {
        WeightedGraph {
            geometry: self.geometry,
            kind: self.kind,
            sites: self.sites.clone(),
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
            weights: self.weights.iter().map(|&w| f(w)).collect(),
            self_weights: self.self_weights.iter().map(|&w| f(w)).collect(),
            masses: self.masses.iter().map(|&w| f(w)).collect(),
            lookup: self.lookup.clone(),
        }
    }
}

/// Weighted graph of the walk of the given kind on a cluster.
pub fn build_weighted_graph<S: Scalar>(
    config: &BondConfig,
    cluster: &Cluster,
    kind: AntKind,
) -> Result<WeightedGraph<S>> {
    let geometry = config.geometry;
    if cluster.geometry != geometry {
        return Err(Error::Structural("cluster and configuration boxes differ".into()));
    }
    if cluster.is_empty() {
        return Err(Error::NoCluster);
    }
    let self_weight_conductance = match (&config.law, kind) {
        (EdgeLaw::Bernoulli { .. }, AntKind::Conductance) => {
            return Err(Error::config("kind", "conductance walk needs a conductance configuration"))
        }
        (EdgeLaw::Conductance { .. }, AntKind::Myopic | AntKind::Blind) => {
            return Err(Error::config("kind", "ant walks need a percolation configuration"))
        }
        (EdgeLaw::Conductance { self_weight, .. }, _) => *self_weight,
        _ => 0.0,
    };
    let mut in_cluster = vec![false; geometry.num_sites()];
    for &s in &cluster.sites {
        in_cluster[s] = true;
    }
    let sites: Vec<Site> = cluster.sites.iter().map(|&s| geometry.site(s)).collect();
    let mut edges = Vec::new();
    let mut degree = vec![0usize; geometry.num_sites()];
    for (id, a, b) in geometry.edges() {
        if !config.is_open(id) {
            continue;
        }
        match (in_cluster[a], in_cluster[b]) {
            (true, true) => {}
            (false, false) => continue,
            _ => {
                return Err(Error::Structural(
                    "cluster is not a union of open components".into(),
                ))
            }
        }
        degree[a] += 1;
        degree[b] += 1;
        let w = match kind {
            AntKind::Conductance => S::from_f64_lossy(config.weight(id)),
            _ => S::one(),
        };
        edges.push((geometry.site(a), geometry.site(b), w));
    }
    let two_d = 2 * geometry.dim;
    let self_weights: Vec<(Site, S)> = match kind {
        AntKind::Myopic => Vec::new(),
        AntKind::Blind => cluster
            .sites
            .iter()
            .map(|&s| (geometry.site(s), S::from_count(two_d - degree[s])))
            .collect(),
        AntKind::Conductance => cluster
            .sites
            .iter()
            .map(|&s| (geometry.site(s), S::from_f64_lossy(self_weight_conductance)))
            .collect(),
    };
    WeightedGraph::from_parts(geometry, kind, sites, &edges, &self_weights)
}

/// Breadth-first graph-metric distances; `u32::MAX` marks unreachable.
fn bfs_distances<S: Scalar>(graph: &WeightedGraph<S>, x0: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; graph.len()];
    dist[x0] = 0;
    let mut queue = VecDeque::from([x0]);
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for (w, _) in graph.neighbors(v) {
            if dist[w] == u32::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Graph-metric distances from `x0` over edges with `mu_xy > 0`.
pub fn graph_distances<S: Scalar>(graph: &WeightedGraph<S>, x0: usize) -> Result<Vec<u32>> {
    if x0 >= graph.len() {
        return Err(Error::Lookup(format!("vertex {x0} not in graph of {} vertices", graph.len())));
    }
    Ok(bfs_distances(graph, x0))
}

fn linf_to(site: &Site, w: &[f64]) -> f64 {
    w.iter()
        .enumerate()
        .map(|(a, &wa)| (site[a] as f64 - wa).abs())
        .fold(0.0, f64::max)
}

/// Cluster vertex minimising `|v - w|_inf`; ties go to the lexicographically
/// smallest coordinates.
pub fn closest_point<S: Scalar>(graph: &WeightedGraph<S>, w: &[f64]) -> Result<usize> {
    let dim = graph.dim();
    if graph.is_empty() {
        return Err(Error::Domain("closest point in an empty graph".into()));
    }
    if w.len() != dim || w.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain(format!("target must be a finite {dim}-vector")));
    }
    let side = graph.geometry().side as i64;
    let scan = |radius: i64| -> Option<(f64, usize)> {
        let lo: Vec<i64> = w.iter().map(|&c| (c.floor() as i64 - radius).max(0)).collect();
        let hi: Vec<i64> = w.iter().map(|&c| (c.ceil() as i64 + radius).min(side - 1)).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut cur = lo.clone();
        loop {
            let mut site = [0i32; 3];
            for a in 0..dim {
                site[a] = cur[a] as i32;
            }
            if let Some(v) = graph.index_of(&site) {
                let d = linf_to(&site, w);
                // lexicographic iteration order keeps the first among equals
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, v));
                }
            }
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return best;
                }
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    for a in axis + 1..dim {
                        cur[a] = lo[a];
                    }
                    break;
                }
            }
        }
    };
    let mut radius = 0i64;
    loop {
        if let Some((d, _)) = scan(radius) {
            // every vertex within distance d lies inside the box of radius ceil(d)
            let full = d.ceil() as i64;
            return Ok(scan(full.max(radius)).expect("candidate persists").1);
        }
        if radius > side + 1 {
            break;
        }
        radius = (radius * 2).max(1);
    }
    // target far outside the box: exhaustive scan
    let mut best = (f64::INFINITY, 0usize);
    for v in 0..graph.len() {
        let d = linf_to(&graph.site(v), w);
        if d < best.0 {
            best = (d, v);
        }
    }
    Ok(best.1)
}
