//! Green's function of the walk on a zero-boundary box (d = 3).
//!
//! `g(x0, .)` solves `L g = -delta_{x0} / mu_{x0}` with `g = 0` on cluster
//! vertices of the outermost box layer. Multiplying by `mu` gives the
//! symmetric system `A g = delta_{x0}`, `(A g)_y = sum_z mu_yz (g_y - g_z)`.
//! Self-weights cancel in `A`, so both ants share the same system.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{build_weighted_graph, closest_point, extract_giant_cluster, AntKind, BondConfig, WeightedGraph};
use crate::scalar::{CompensatedSum, Real};
use crate::solver::conjugate_gradient;

const PARALLEL_ROWS: usize = 1 << 14;

/// Interior rows of `A`; Dirichlet neighbours are dropped from the stencil.
struct System<S> {
    /// Graph vertex of each unknown.
    vertices: Vec<usize>,
    /// Unknown index of each graph vertex.
    local: Vec<Option<usize>>,
    rows: Vec<Vec<(usize, S)>>,
    diag: Vec<S>,
    masses: Vec<S>,
}

impl<S: Real> System<S> {
    fn new(graph: &WeightedGraph<S>) -> Self {
        let mut local = vec![None; graph.len()];
        let mut vertices = Vec::new();
        for v in 0..graph.len() {
            if graph.boundary_distance(v) > 0 {
                local[v] = Some(vertices.len());
                vertices.push(v);
            }
        }
        let mut rows = Vec::with_capacity(vertices.len());
        let mut diag = Vec::with_capacity(vertices.len());
        for &v in &vertices {
            let mut d = S::zero();
            let mut row = Vec::new();
            for (z, w) in graph.neighbors(v) {
                d += w;
                if let Some(j) = local[z] {
                    row.push((j, w));
                }
            }
            rows.push(row);
            diag.push(d);
        }
        let masses = vertices.iter().map(|&v| graph.mass(v)).collect();
        Self { vertices, local, rows, diag, masses }
    }

    fn row(&self, v: &[S], i: usize) -> S {
        let mut acc = self.diag[i] * v[i];
        for &(j, w) in &self.rows[i] {
            acc -= w * v[j];
        }
        acc
    }

    fn apply(&self, v: &[S], out: &mut [S]) {
        if v.len() >= PARALLEL_ROWS {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = self.row(v, i));
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.row(v, i);
            }
        }
    }

    /// `max |r_y| / mu_y`, the residual of the walk form `L g + delta / mu`.
    fn walk_residual(&self, r: &[S]) -> f64 {
        r.iter().zip(&self.masses).map(|(&ri, &m)| (ri / m).abs().to_f64_lossy()).fold(0.0, f64::max)
    }

    fn sup(r: &[S]) -> f64 {
        r.iter().map(|v| v.abs().to_f64_lossy()).fold(0.0, f64::max)
    }

    /// Upper bound on `||A^{-1}||_inf = max A^{-1} 1`; `A` is an M-matrix,
    /// so `A^{-1} >= 0` and the row sums are the solution of `A h = 1`.
    fn inverse_norm(&self) -> Result<f64> {
        const EPS: f64 = 1e-6;
        let ones = vec![S::one(); self.vertices.len()];
        let out = conjugate_gradient(|v, o| self.apply(v, o), &self.masses, &ones, EPS, max_iter(self), Self::sup)?;
        // A h = 1 - e with |e| <= EPS gives ||A^{-1}|| <= max h / (1 - EPS)
        Ok(Self::sup(&out.solution) / (1.0 - EPS))
    }

    /// Solve to `tol` in both the walk residual and the certified sup error.
    fn solve(&self, rhs: &[S], tol: f64, inverse: f64) -> Result<(Vec<S>, usize, f64, f64)> {
        let norm = |r: &[S]| self.walk_residual(r).max(inverse * Self::sup(r));
        let out = conjugate_gradient(|v, o| self.apply(v, o), &self.masses, rhs, tol, max_iter(self), norm)?;
        let mut r = vec![S::zero(); rhs.len()];
        self.apply(&out.solution, &mut r);
        for (ri, &b) in r.iter_mut().zip(rhs) {
            *ri = b - *ri;
        }
        Ok((out.solution, out.iterations, self.walk_residual(&r), inverse * Self::sup(&r)))
    }
}

fn max_iter<S>(sys: &System<S>) -> usize {
    20 * sys.vertices.len() + 1000
}

#[derive(Clone, Debug)]
pub struct GreenField<S> {
    pub source: usize,
    /// `g(x0, y)` for every graph vertex; zero on the outer layer.
    pub values: Vec<S>,
    /// Harmonic extension into the box of `|z - x0|^{2-d}` given on the outer layer.
    pub correction: Vec<S>,
    /// `max_y |L g(y) + delta_{x0}(y) / mu_{x0}|`.
    pub residual: f64,
    /// Certified bound on `max_y |g(y) - g_exact(y)|`.
    pub error_bound: f64,
    pub iterations: usize,
    pub margin: usize,
}

fn euclid(graph_site: &crate::lattice::Site, origin: &crate::lattice::Site, dim: usize) -> f64 {
    (0..dim).map(|a| ((graph_site[a] - origin[a]) as f64).powi(2)).sum::<f64>().sqrt()
}

pub fn green_solve<S: Real>(graph: &WeightedGraph<S>, x0: usize, tol: f64) -> Result<GreenField<S>> {
    let dim = graph.dim();
    if dim != 3 {
        return Err(Error::Domain(format!("the Green's function needs d = 3, got d = {dim}")));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tol", "solver tolerance must be positive"));
    }
    if x0 >= graph.len() {
        return Err(Error::Lookup(format!("vertex {x0} not in graph")));
    }
    if !graph.within_margin(x0) {
        return Err(Error::Margin(format!("source {:?} lies inside the boundary margin", graph.site(x0))));
    }
    let sys = System::new(graph);
    let inverse = sys.inverse_norm()?;
    let mut rhs = vec![S::zero(); sys.vertices.len()];
    rhs[sys.local[x0].expect("source is interior")] = S::one();
    let (g, iterations, residual, error_bound) = sys.solve(&rhs, tol, inverse)?;

    let origin = graph.site(x0);
    let data = |z: usize| S::from_f64_lossy(euclid(&graph.site(z), &origin, dim).powf(2.0 - dim as f64));
    let phi_rhs: Vec<S> = sys
        .vertices
        .iter()
        .map(|&v| {
            let mut acc = S::zero();
            for (z, w) in graph.neighbors(v) {
                if sys.local[z].is_none() {
                    acc += w * data(z);
                }
            }
            acc
        })
        .collect();
    let (phi, ..) = sys.solve(&phi_rhs, tol, inverse)?;

    let mut values = vec![S::zero(); graph.len()];
    let mut correction: Vec<S> = (0..graph.len()).map(data).collect();
    for (i, &v) in sys.vertices.iter().enumerate() {
        values[v] = g[i];
        correction[v] = phi[i];
    }
    Ok(GreenField {
        source: x0,
        values,
        correction,
        residual,
        error_bound,
        iterations,
        margin: graph.geometry().margin(),
    })
}

/// `C = Gamma(d/2 - 1) / (2 pi^{d/2} a D)`.
pub fn green_constant(dim: usize, density: f64, diffusion: f64) -> Result<f64> {
    if dim < 3 {
        return Err(Error::Domain(format!("the Green's constant needs d >= 3, got d = {dim}")));
    }
    if !(density > 0.0) || !(diffusion > 0.0) {
        return Err(Error::Domain("density and diffusion estimates must be positive".into()));
    }
    let h = dim as f64 / 2.0;
    Ok(libm::tgamma(h - 1.0) / (2.0 * std::f64::consts::PI.powf(h) * density * diffusion))
}

/// Half-open radial band `lo <= |y - x0| < hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub lo: f64,
    pub hi: f64,
}

impl Shell {
    pub fn unit(r: usize) -> Self {
        Self { lo: r as f64, hi: r as f64 + 1.0 }
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r < self.hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShellStats {
    pub shell: Shell,
    pub count: usize,
    /// Statistics of the boundary-corrected `|y|^{d-2} g / (1 - |y|^{d-2} phi)`.
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Mean of the uncorrected `|y|^{d-2} g(x0, y)`.
    pub raw_mean: f64,
}

impl ShellStats {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreenProfile {
    pub shells: Vec<ShellStats>,
    pub c_ref: f64,
    pub band: f64,
    /// Smallest shell radius from which every later corrected mean is within `band * C`.
    pub onset: Option<f64>,
    pub raw_onset: Option<f64>,
    pub skipped: usize,
}

fn onset(shells: &[ShellStats], c: f64, band: f64, value: impl Fn(&ShellStats) -> f64) -> Option<f64> {
    let mut start = None;
    for s in shells {
        if (value(s) - c).abs() <= band * c {
            start.get_or_insert(s.shell.lo);
        } else {
            start = None;
        }
    }
    start
}

/// Shell statistics over cluster vertices outside the margin. Shells with
/// no vertex, or reaching into the margin, are skipped and counted.
pub fn green_profile<S: Real>(
    graph: &WeightedGraph<S>,
    field: &GreenField<S>,
    shells: &[Shell],
    density: f64,
    diffusion: f64,
    band: f64,
) -> Result<GreenProfile> {
    let dim = graph.dim();
    let c_ref = green_constant(dim, density, diffusion)?;
    let origin = graph.site(field.source);
    let reach = (0..dim)
        .map(|a| {
            let lo = origin[a] as f64 - field.margin as f64;
            let hi = (graph.geometry().side - 1 - field.margin) as f64 - origin[a] as f64;
            lo.min(hi)
        })
        .fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    let mut skipped = 0;
    for &shell in shells {
        // closed margin-free cube around x0 must contain the whole shell
        if shell.hi > reach + 1.0 {
            skipped += 1;
            continue;
        }
        let (mut sum, mut raw) = (CompensatedSum::<f64>::default(), CompensatedSum::<f64>::default());
        let (mut min, mut max, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        for y in 0..graph.len() {
            let r = euclid(&graph.site(y), &origin, dim);
            // the source itself carries no radial information
            if r == 0.0 || !shell.contains(r) || !graph.within_margin(y) {
                continue;
            }
            let scale = r.powi(dim as i32 - 2);
            let g = field.values[y].to_f64_lossy();
            let v = scale * g / (1.0 - scale * field.correction[y].to_f64_lossy());
            sum.add(v);
            raw.add(scale * g);
            min = min.min(v);
            max = max.max(v);
            count += 1;
        }
        if count == 0 {
            skipped += 1;
            continue;
        }
        out.push(ShellStats {
            shell,
            count,
            mean: sum.total() / count as f64,
            min,
            max,
            raw_mean: raw.total() / count as f64,
        });
    }
    Ok(GreenProfile {
        onset: onset(&out, c_ref, band, |s| s.mean),
        raw_onset: onset(&out, c_ref, band, |s| s.raw_mean),
        shells: out,
        c_ref,
        band,
        skipped,
    })
}

/// `max_y |g_myopic(x0, y) - g_blind(x0, y)|` for graphs from one configuration.
pub fn green_ant_equivalence<S: Real>(
    myopic: &WeightedGraph<S>,
    blind: &WeightedGraph<S>,
    x0: usize,
    tol: f64,
) -> Result<f64> {
    if myopic.sites() != blind.sites() {
        return Err(Error::Structural("the two graphs are built on different clusters".into()));
    }
    let a = green_solve(myopic, x0, tol)?;
    let b = green_solve(blind, x0, tol)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(&u, &v)| (u - v).abs().to_f64_lossy())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoBoxShell {
    pub shell: Shell,
    pub small_raw: f64,
    pub large_raw: f64,
    pub small: f64,
    pub large: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoBoxReport {
    pub small_side: usize,
    pub large_side: usize,
    pub shells: Vec<TwoBoxShell>,
    /// Largest relative change of the uncorrected shell mean.
    pub raw_change: f64,
    /// Largest relative change of the corrected shell mean.
    pub change: f64,
}

/// Shell-by-shell comparison of the same source seen in two boxes.
pub fn compare_boxes(small_side: usize, small: &GreenProfile, large_side: usize, large: &GreenProfile) -> TwoBoxReport {
    let mut out = Vec::new();
    for s in &small.shells {
        if let Some(l) = large.shells.iter().find(|l| l.shell == s.shell) {
            out.push(TwoBoxShell {
                shell: s.shell,
                small_raw: s.raw_mean,
                large_raw: l.raw_mean,
                small: s.mean,
                large: l.mean,
            });
        }
    }
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    TwoBoxReport {
        small_side,
        large_side,
        raw_change: out.iter().map(|s| rel(s.small_raw, s.large_raw)).fold(0.0, f64::max),
        change: out.iter().map(|s| rel(s.small, s.large)).fold(0.0, f64::max),
        shells: out,
    }
}

/// Graph of the giant cluster of `config` with the source closest to the box centre.
pub fn centered_graph(config: &BondConfig, kind: AntKind) -> Result<(WeightedGraph<f64>, usize)> {
    let graph = build_weighted_graph::<f64>(config, &extract_giant_cluster(config)?, kind)?;
    let c = config.geometry.center();
    let target: Vec<f64> = c.iter().take(config.geometry.dim).map(|&v| v as f64).collect();
    let x0 = closest_point(&graph, &target)?;
    Ok((graph, x0))
}

/// Truncation diagnostic: the same configuration seen through its central
/// sub-box of half the side and through the full box.
pub fn green_two_box(config: &BondConfig, kind: AntKind, shells: &[Shell], tol: f64) -> Result<TwoBoxReport> {
    let large_side = config.geometry.side;
    let small_side = large_side / 2;
    let profile = |cfg: &BondConfig| -> Result<GreenProfile> {
        let (graph, x0) = centered_graph(cfg, kind)?;
        let field = green_solve(&graph, x0, tol)?;
        // density and diffusion only enter the reference constant
        green_profile(&graph, &field, shells, 1.0, 1.0, 1.0)
    };
    let small = profile(&config.central_sub_box(small_side)?)?;
    let large = profile(config)?;
    Ok(compare_boxes(small_side, &small, large_side, &large))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::apply_transition;
    use crate::lattice::gen_bond_config;
    use std::f64::consts::PI;

    fn lattice(side: usize, p: f64, seed: u64, kind: AntKind) -> WeightedGraph<f64> {
        let cfg = gen_bond_config(3, side, p, seed).unwrap();
        build_weighted_graph(&cfg, &extract_giant_cluster(&cfg).unwrap(), kind).unwrap()
    }

    fn center(g: &WeightedGraph<f64>) -> usize {
        let s = g.geometry().side as f64 / 2.0;
        closest_point(g, &[s, s, s]).unwrap()
    }

    #[test]
    fn constant_matches_classical_value() {
        assert!((green_constant(3, 6.0, 1.0 / 3.0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(green_constant(2, 4.0, 0.5).is_err());
    }

    #[test]
    fn rejects_planar_graphs() {
        let cfg = gen_bond_config(2, 32, 1.0, 1).unwrap();
        let g = build_weighted_graph::<f64>(&cfg, &extract_giant_cluster(&cfg).unwrap(), AntKind::Myopic).unwrap();
        assert!(matches!(green_solve(&g, g.index_of(&[16, 16, 0]).unwrap(), 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn solves_the_walk_equation() {
        let g = lattice(24, 0.6, 2, AntKind::Blind);
        let x0 = center(&g);
        let f = green_solve(&g, x0, 1e-11).unwrap();
        assert!(f.residual < 1e-11 && f.error_bound < 1e-11);
        // L g = P g - g, checked independently on interior vertices
        let pg = apply_transition(&g, &f.values).unwrap();
        for y in 0..g.len() {
            if g.boundary_distance(y) == 0 {
                assert_eq!(f.values[y], 0.0);
                continue;
            }
            let target = if y == x0 { -1.0 / g.mass(x0) } else { 0.0 };
            assert!((pg[y] - f.values[y] - target).abs() < 1e-11);
            assert!(f.values[y] >= 0.0);
        }
    }

    #[test]
    fn symmetric_in_source_and_target() {
        let g = lattice(20, 0.7, 4, AntKind::Myopic);
        let a = center(&g);
        let b = closest_point(&g, &[8.0, 11.0, 9.0]).unwrap();
        let (fa, fb) = (green_solve(&g, a, 1e-12).unwrap(), green_solve(&g, b, 1e-12).unwrap());
        assert!((fa.values[b] - fb.values[a]).abs() < 1e-11);
    }

    #[test]
    fn ants_agree() {
        let cfg = gen_bond_config(3, 24, 1.0, 1).unwrap();
        let cl = extract_giant_cluster(&cfg).unwrap();
        let m = build_weighted_graph::<f64>(&cfg, &cl, AntKind::Myopic).unwrap();
        let b = build_weighted_graph::<f64>(&cfg, &cl, AntKind::Blind).unwrap();
        assert_eq!(green_ant_equivalence(&m, &b, center(&m), 1e-10).unwrap(), 0.0);
        let cfg = gen_bond_config(3, 24, 0.7, 3).unwrap();
        let cl = extract_giant_cluster(&cfg).unwrap();
        let m = build_weighted_graph::<f64>(&cfg, &cl, AntKind::Myopic).unwrap();
        let b = build_weighted_graph::<f64>(&cfg, &cl, AntKind::Blind).unwrap();
        let dev = green_ant_equivalence(&m, &b, center(&m), 1e-10).unwrap();
        assert!(dev > 0.0 && dev < 1e-9, "{dev}");
        let other = lattice(24, 0.7, 4, AntKind::Blind);
        assert!(matches!(green_ant_equivalence(&m, &other, center(&m), 1e-10), Err(Error::Structural(_))));
    }

    #[test]
    fn profile_shell_bookkeeping() {
        let g = lattice(32, 1.0, 1, AntKind::Myopic);
        let f = green_solve(&g, center(&g), 1e-10).unwrap();
        let shells: Vec<Shell> = (0..12).map(Shell::unit).collect();
        let p = green_profile(&g, &f, &shells, 6.0, 1.0 / 3.0, 0.05).unwrap();
        // shells reaching past |x| = 8 leave the margin-free cube
        assert_eq!(p.shells.len() + p.skipped, 12);
        assert!(p.skipped >= 3);
        for s in &p.shells {
            assert!(s.spread() >= 1.0 && s.count > 0);
        }
        // the corrected profile sits much closer to C than the raw one
        let last = p.shells.last().unwrap();
        assert!((last.mean - p.c_ref).abs() < (last.raw_mean - p.c_ref).abs());
    }

    #[test]
    fn corrected_profile_survives_box_doubling() {
        let cfg = gen_bond_config(3, 32, 1.0, 1).unwrap();
        let rep = green_two_box(&cfg, AntKind::Myopic, &[Shell::unit(2), Shell::unit(3)], 1e-10).unwrap();
        assert_eq!((rep.small_side, rep.large_side, rep.shells.len()), (16, 32, 2));
        assert!(rep.change < 0.01 && rep.raw_change > 0.1, "{rep:?}");
    }
}
