//! Geometric quantities of a cluster: holes, window masses, density.
//!
//! Windows are half-open lattice cubes `x + [-R, R)^d`, which hold exactly
//! `(2R)^d` sites and tile the lattice.

use super::config::Site;
use super::graph::{graph_distances, WeightedGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Iterate over the sites of the half-open window `x + [-r, r)^d`.
fn window_sites(dim: usize, center: &Site, r: i32) -> impl Iterator<Item = Site> {
    let center = *center;
    let width = (2 * r) as usize;
    let count = width.pow(dim as u32);
    (0..count).map(move |mut k| {
        let mut s = [0i32; 3];
        for a in (0..dim).rev() {
            s[a] = center[a] - r + (k % width) as i32;
            k /= width;
        }
        s
    })
}

fn window_inside(graph_side: usize, dim: usize, center: &Site, r: i32, margin: usize) -> bool {
    (0..dim).all(|a| {
        let lo = center[a] - r;
        let hi = center[a] + r - 1;
        lo >= margin as i32 && hi <= (graph_side - 1 - margin) as i32
    })
}

/// Largest integer `k` such that some axis-aligned cube of `k^d` sites
/// inside the window around the box centre holds no cluster vertex.
pub fn hole_size<S: Scalar>(graph: &WeightedGraph<S>, r: usize) -> Result<usize> {
    let geom = graph.geometry();
    let center = geom.center();
    let r = r as i32;
    if r == 0 || !window_inside(geom.side, geom.dim, &center, r, 0) {
        return Err(Error::Domain(format!("hole radius {r} does not fit in the box")));
    }
    let w = (2 * r) as usize;
    let occupied: Vec<bool> = window_sites(geom.dim, &center, r)
        .map(|s| graph.index_of(&s).is_some())
        .collect();
    // largest empty cube ending at each cell
    let mut run = vec![0usize; occupied.len()];
    let mut best = 0;
    let strides: Vec<usize> = (0..geom.dim).map(|a| w.pow((geom.dim - 1 - a) as u32)).collect();
    for idx in 0..occupied.len() {
        if occupied[idx] {
            continue;
        }
        let coord: Vec<usize> = strides.iter().map(|&s| (idx / s) % w).collect();
        let mut m = usize::MAX;
        // all 2^d - 1 predecessor corners
        for mask in 1..(1usize << geom.dim) {
            let mut j = idx;
            let mut valid = true;
            for a in 0..geom.dim {
                if mask & (1 << a) != 0 {
                    if coord[a] == 0 {
                        valid = false;
                        break;
                    }
                    j -= strides[a];
                }
            }
            m = m.min(if valid { run[j] } else { 0 });
        }
        run[idx] = m + 1;
        best = best.max(run[idx]);
    }
    Ok(best)
}

/// `mu(Lambda(x, R))`: total mass of cluster vertices in the window. The
/// window must keep the measurement margin `L/4` from the box boundary.
pub fn window_mass<S: Scalar>(graph: &WeightedGraph<S>, x: &Site, r: usize) -> Result<S> {
    let geom = graph.geometry();
    if !window_inside(geom.side, geom.dim, x, r as i32, geom.margin()) {
        return Err(Error::Margin(format!(
            "window of radius {r} around {x:?} leaves the margin {}",
            geom.margin()
        )));
    }
    let mut total = S::zero();
    for s in window_sites(geom.dim, x, r as i32) {
        if let Some(v) = graph.index_of(&s) {
            total += graph.mass(v);
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    /// `(R, mu(Lambda(0,R)), mu(Lambda(0,R)) / (2R)^d)` over admissible radii.
    pub profile: Vec<(usize, f64, f64)>,
    /// Density at the largest admissible radius.
    pub estimate: f64,
}

/// Density estimate `a = mu(Lambda(0,R)) / (2R)^d` around the box centre.
/// Radii whose windows leave the margin are skipped.
pub fn density_estimate<S: Scalar>(graph: &WeightedGraph<S>, radii: &[usize]) -> Result<DensityEstimate> {
    let center = graph.geometry().center();
    let dim = graph.dim() as i32;
    let mut radii = radii.to_vec();
    radii.sort_unstable();
    radii.dedup();
    let mut profile = Vec::new();
    for r in radii {
        if r == 0 {
            continue;
        }
        match window_mass(graph, &center, r) {
            Ok(m) => {
                let m = m.to_f64_lossy();
                profile.push((r, m, m / (2.0 * r as f64).powi(dim)));
            }
            Err(Error::Margin(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let estimate = profile
        .last()
        .map(|p| p.2)
        .ok_or_else(|| Error::Margin("no density window fits inside the margin".into()))?;
    Ok(DensityEstimate { profile, estimate })
}

/// Largest window radius around the centre that respects the margin.
pub fn max_window_radius(side: usize) -> usize {
    let center = side / 2;
    let margin = side / 4;
    // lo = center - r >= margin, hi = center + r - 1 <= side - 1 - margin
    (center - margin).min(side - margin - center)
}

#[derive(Clone, Debug)]
pub struct GeometryReport {
    pub source: usize,
    pub distances: Vec<u32>,
    pub holes: Vec<(usize, usize)>,
    pub density: DensityEstimate,
}

pub fn geometry_report<S: Scalar>(
    graph: &WeightedGraph<S>,
    source: usize,
    hole_radii: &[usize],
    window_radii: &[usize],
) -> Result<GeometryReport> {
    let distances = graph_distances(graph, source)?;
    let holes = hole_radii
        .iter()
        .map(|&r| hole_size(graph, r).map(|h| (r, h)))
        .collect::<Result<Vec<_>>>()?;
    let density = density_estimate(graph, window_radii)?;
    Ok(GeometryReport { source, distances, holes, density })
}
