//! Giant-cluster extraction by union-find.

use super::config::{BondConfig, BoxGeometry};
use crate::error::{Error, Result};

/// Disjoint sets with union by size and path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn component_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

/// Site set of the largest open component, sorted by site id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub geometry: BoxGeometry,
    pub sites: Vec<usize>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Largest connected open component. Ties go to the component whose
/// smallest site is lexicographically smallest.
pub fn extract_giant_cluster(config: &BondConfig) -> Result<Cluster> {
    extract_with_order(config, 0..config.num_edges())
}

/// Same as [`extract_giant_cluster`] with edges merged in the given order;
/// the result does not depend on the order.
pub fn extract_with_order(
    config: &BondConfig,
    order: impl IntoIterator<Item = usize>,
) -> Result<Cluster> {
    let geometry = config.geometry;
    let mut uf = UnionFind::new(geometry.num_sites());
    let mut any_open = false;
    for edge in order {
        if config.is_open(edge) {
            any_open = true;
            let (axis, lo) = geometry.edge_endpoint(edge);
            let mut hi = lo;
            hi[axis] += 1;
            uf.union(geometry.site_id(&lo), geometry.site_id(&hi));
        }
    }
    if !any_open {
        return Err(Error::NoCluster);
    }
    // Site ids increase lexicographically, so the first site reached with
    // the maximal size is the tie-break winner.
    let mut best: Option<(usize, usize)> = None;
    for site in 0..geometry.num_sites() {
        let size = uf.component_size(site);
        if best.map_or(true, |(s, _)| size > s) {
            best = Some((size, uf.find(site)));
        }
    }
    let (_, root) = best.expect("non-empty box");
    let sites = (0..geometry.num_sites()).filter(|&s| uf.find(s) == root).collect();
    Ok(Cluster { geometry, sites })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::config::gen_bond_config;
    use std::collections::VecDeque;

    /// Naive BFS labelling of all components.
    fn flood_fill_giant(config: &BondConfig) -> Vec<usize> {
        let g = config.geometry;
        let mut adj = vec![Vec::new(); g.num_sites()];
        for (id, a, b) in g.edges() {
            if config.is_open(id) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut label = vec![usize::MAX; g.num_sites()];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for start in 0..g.num_sites() {
            if label[start] != usize::MAX {
                continue;
            }
            let c = comps.len();
            let mut members = vec![start];
            label[start] = c;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if label[w] == usize::MAX {
                        label[w] = c;
                        members.push(w);
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
            .into_iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
            .unwrap()
    }

    #[test]
    fn full_box_is_one_cluster() {
        let cfg = gen_bond_config(3, 6, 1.0, 1).unwrap();
        assert_eq!(extract_giant_cluster(&cfg).unwrap().len(), 216);
    }

    #[test]
    fn no_open_edges_is_reported() {
        let cfg = gen_bond_config(2, 8, 0.0, 1).unwrap();
        assert!(matches!(extract_giant_cluster(&cfg), Err(Error::NoCluster)));
    }

    #[test]
    fn matches_flood_fill_oracle() {
        let cfg = gen_bond_config(2, 256, 0.7, 3).unwrap();
        let cluster = extract_giant_cluster(&cfg).unwrap();
        assert_eq!(cluster.sites, flood_fill_giant(&cfg));
        let cfg3 = gen_bond_config(3, 24, 0.3, 11).unwrap();
        assert_eq!(extract_giant_cluster(&cfg3).unwrap().sites, flood_fill_giant(&cfg3));
    }

    #[test]
    fn tie_break_prefers_smallest_site() {
        // two isolated dimers of equal size
        let mut cfg = gen_bond_config(2, 4, 0.0, 1).unwrap();
        let g = cfg.geometry;
        let e1 = g.edge_id(0, &[2, 2, 0]);
        let e2 = g.edge_id(1, &[0, 1, 0]);
        if let super::super::config::EdgeStates::Open(open) = &mut cfg.states {
            open[e1] = true;
            open[e2] = true;
        }
        let cluster = extract_giant_cluster(&cfg).unwrap();
        assert_eq!(cluster.sites, vec![g.site_id(&[0, 1, 0]), g.site_id(&[0, 2, 0])]);
    }

    #[test]
    fn invariant_under_merge_order() {
        let cfg = gen_bond_config(2, 64, 0.55, 8).unwrap();
        let forward = extract_giant_cluster(&cfg).unwrap();
        let reversed = extract_with_order(&cfg, (0..cfg.num_edges()).rev()).unwrap();
        let mut rng = crate::rng::CounterRng::new(5, 0);
        let mut perm: Vec<usize> = (0..cfg.num_edges()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.below(i + 1));
        }
        let shuffled = extract_with_order(&cfg, perm).unwrap();
        assert_eq!(forward, reversed);
        assert_eq!(forward, shuffled);
    }
}
