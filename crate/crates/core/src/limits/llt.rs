//! Local limit errors `n^{d/2} p_hat_{floor(nt)}(x0, g_n(x))` against
//! `2 a^{-1} k_t(x)`, and the continuous-time analogue against `a^{-1} k_t(x)`.

use super::diffusion::{check_horizon, margin_horizon};
use super::gaussian::{gaussian_cube_mass, gaussian_kernel};
use crate::error::{Error, Result};
use crate::kernel::{KernelEvolution, PoissonTruncation};
use crate::lattice::{closest_point, WeightedGraph};
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct LltGrid {
    pub ns: Vec<usize>,
    pub ts: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
}

impl LltGrid {
    /// `x in {0, e_1 j/2 : j <= 4}`, `t in {1, 2}`.
    pub fn standard(dim: usize, ns: &[usize]) -> Self {
        let xs = (0..=4)
            .map(|j| {
                let mut x = vec![0.0; dim];
                x[0] = j as f64 / 2.0;
                x
            })
            .collect();
        Self { ns: ns.to_vec(), ts: vec![1.0, 2.0], xs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LltParams {
    /// `a`: mass density of the cluster.
    pub density: f64,
    /// `D`: diffusion constant.
    pub diffusion: f64,
    pub continuous: bool,
    /// Half-width of the cubes used for the `J` decomposition, if wanted.
    pub kappa: Option<f64>,
    pub poisson_tol: f64,
}

impl LltParams {
    pub fn new(density: f64, diffusion: f64) -> Self {
        Self { density, diffusion, continuous: false, kappa: None, poisson_tol: 1e-14 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LltRow {
    pub n: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub vertex: usize,
    pub measured: f64,
    pub reference: f64,
    pub abs_err: f64,
}

/// `J = J1 + J2 + J3 + J4` for the cube `Lambda(x, kappa)`:
/// `J = P(X_m / sqrt n in Lambda) + P(X_{m+1} / sqrt n in Lambda) - 2 int_Lambda k_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct JTerms {
    pub n: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub kappa: f64,
    pub j: f64,
    /// Kernel variation across the cube.
    pub j1: f64,
    /// Pointwise local limit error at `g_n(x)`.
    pub j2: f64,
    /// Density of the cube against its volume.
    pub j3: f64,
    /// Gaussian variation across the cube.
    pub j4: f64,
}

impl JTerms {
    pub fn residual(&self) -> f64 {
        (self.j - (self.j1 + self.j2 + self.j3 + self.j4)).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LltReport {
    pub density: f64,
    pub diffusion: f64,
    pub rows: Vec<LltRow>,
    pub continuous_rows: Vec<LltRow>,
    /// `(n, sup error)` over the included grid points, in the order of `ns`.
    pub sup_error: Vec<(usize, f64)>,
    pub continuous_sup_error: Vec<(usize, f64)>,
    pub excluded: usize,
    pub decomposition: Vec<JTerms>,
    /// `2 a^{-1} k_1(0)`.
    pub reference_origin: f64,
}

struct Point {
    n: usize,
    t: f64,
    x: Vec<f64>,
    vertex: usize,
    target: Vec<f64>,
    time: usize,
    hat: [CompensatedSum<f64>; 2],
    cont: Option<(PoissonTruncation, CompensatedSum<f64>)>,
    cube: [CompensatedSum<f64>; 2],
}

fn check_params(dim: usize, grid: &LltGrid, params: &LltParams) -> Result<()> {
    if grid.ns.is_empty() || grid.ts.is_empty() || grid.xs.is_empty() {
        return Err(Error::config("grid", "n list, t grid and x grid must be nonempty"));
    }
    if grid.ns.contains(&0) {
        return Err(Error::config("n-list", "n must be positive"));
    }
    if grid.ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::config("t-grid", "times must be positive"));
    }
    if grid.xs.iter().any(|x| x.len() != dim || x.iter().any(|c| !c.is_finite())) {
        return Err(Error::config("x-grid", format!("points must be finite {dim}-vectors")));
    }
    if !(params.density > 0.0) || !(params.diffusion > 0.0) {
        return Err(Error::Domain("density and diffusion estimates must be positive".into()));
    }
    if let Some(k) = params.kappa {
        if !(k > 0.0) {
            return Err(Error::config("kappa", "cube half-width must be positive"));
        }
    }
    Ok(())
}

/// One streaming pass of the walk from `x0` serves every `(n, t, x)`.
pub fn llt_error<S: Scalar>(
    graph: &WeightedGraph<S>,
    x0: usize,
    grid: &LltGrid,
    params: &LltParams,
) -> Result<LltReport> {
    let dim = graph.dim();
    check_params(dim, grid, params)?;
    let t_max = grid.ts.iter().cloned().fold(0.0, f64::max);
    let n_max = *grid.ns.iter().max().expect("nonempty");
    let last = (n_max as f64 * t_max).floor() as usize + 1;
    check_horizon(graph, x0, last)?;
    let origin = graph.site(x0);
    let mut points = Vec::new();
    let mut excluded = 0;
    for &n in &grid.ns {
        let scale = (n as f64).sqrt();
        for &t in &grid.ts {
            for x in &grid.xs {
                let target: Vec<f64> = (0..dim).map(|a| origin[a] as f64 + scale * x[a]).collect();
                let vertex = match closest_point(graph, &target) {
                    Ok(v) if graph.within_margin(v) => v,
                    _ => {
                        excluded += 1;
                        continue;
                    }
                };
                let cont = if params.continuous {
                    let trunc = PoissonTruncation::new(n as f64 * t, params.poisson_tol)?;
                    if trunc.terms() > margin_horizon(graph) + 1 {
                        return Err(Error::Margin(format!(
                            "continuous time {} needs {} Poisson terms beyond the margin horizon",
                            n as f64 * t,
                            trunc.terms()
                        )));
                    }
                    Some((trunc, CompensatedSum::default()))
                } else {
                    None
                };
                points.push(Point {
                    n,
                    t,
                    x: x.clone(),
                    vertex,
                    target,
                    time: (n as f64 * t).floor() as usize,
                    hat: Default::default(),
                    cont,
                    cube: Default::default(),
                });
            }
        }
    }
    let horizon = points
        .iter()
        .map(|p| p.cont.as_ref().map_or(p.time + 1, |(tr, _)| (p.time + 1).max(tr.terms() - 1)))
        .max()
        .unwrap_or(0);
    let mut evo = KernelEvolution::new(graph, x0)?;
    for k in 0..=horizon {
        evo.advance_to(k);
        let values = evo.values();
        for p in points.iter_mut() {
            let v = values[p.vertex].to_f64_lossy();
            if k == p.time || k == p.time + 1 {
                p.hat[k - p.time].add(v);
                if let Some(kappa) = params.kappa {
                    p.cube[k - p.time] = cube_mass(graph, values, &p.target, kappa * (p.n as f64).sqrt());
                }
            }
            if let Some((tr, acc)) = p.cont.as_mut() {
                if let Some(&w) = tr.weights.get(k) {
                    acc.add(w * v);
                }
            }
        }
    }
    let two_over_a = 2.0 / params.density;
    let mut rows = Vec::new();
    let mut continuous_rows = Vec::new();
    let mut decomposition = Vec::new();
    for p in &points {
        let scale = (p.n as f64).powf(dim as f64 / 2.0);
        let k_t = gaussian_kernel(dim, params.diffusion, p.t, &p.x)?;
        let reference = two_over_a * k_t;
        let hat = p.hat[0].total() + p.hat[1].total();
        let measured = scale * hat;
        rows.push(LltRow {
            n: p.n,
            t: p.t,
            x: p.x.clone(),
            vertex: p.vertex,
            measured,
            reference,
            abs_err: (measured - reference).abs(),
        });
        if let Some((_, acc)) = &p.cont {
            let measured = scale * acc.total();
            // half the discrete reference: exact in binary floating point
            let reference = reference / 2.0;
            continuous_rows.push(LltRow {
                n: p.n,
                t: p.t,
                x: p.x.clone(),
                vertex: p.vertex,
                measured,
                reference,
                abs_err: (measured - reference).abs(),
            });
        }
        if let Some(kappa) = params.kappa {
            decomposition.push(j_terms(graph, p, hat, k_t, kappa, params)?);
        }
    }
    let sup = |rows: &[LltRow]| {
        grid.ns
            .iter()
            .map(|&n| (n, rows.iter().filter(|r| r.n == n).map(|r| r.abs_err).fold(0.0, f64::max)))
            .collect::<Vec<_>>()
    };
    let sup_error = sup(&rows);
    let continuous_sup_error = if params.continuous { sup(&continuous_rows) } else { Vec::new() };
    Ok(LltReport {
        density: params.density,
        diffusion: params.diffusion,
        rows,
        continuous_rows,
        sup_error,
        continuous_sup_error,
        excluded,
        decomposition,
        reference_origin: two_over_a * gaussian_kernel(dim, params.diffusion, 1.0, &vec![0.0; dim])?,
    })
}

fn in_cube(site: &crate::lattice::Site, center: &[f64], half: f64) -> bool {
    center.iter().enumerate().all(|(a, &c)| (site[a] as f64 - c).abs() <= half)
}

/// `sum_{z in cube} f(z) mu_z` over the closed cube around `center`.
fn cube_mass<S: Scalar>(graph: &WeightedGraph<S>, f: &[S], center: &[f64], half: f64) -> CompensatedSum<f64> {
    let mut acc = CompensatedSum::default();
    for (z, &v) in f.iter().enumerate() {
        if !v.is_zero() && in_cube(&graph.site(z), center, half) {
            acc.add((v * graph.mass(z)).to_f64_lossy());
        }
    }
    acc
}

fn j_terms<S: Scalar>(
    graph: &WeightedGraph<S>,
    p: &Point,
    hat: f64,
    k_t: f64,
    kappa: f64,
    params: &LltParams,
) -> Result<JTerms> {
    let dim = graph.dim();
    let half = kappa * (p.n as f64).sqrt();
    let volume = graph
        .sites()
        .iter()
        .zip(graph.masses())
        .filter(|(s, _)| in_cube(s, &p.target, half))
        .map(|(_, &m)| m.to_f64_lossy())
        .sum::<f64>();
    let probability = p.cube[0].total() + p.cube[1].total();
    let scale = (p.n as f64).powf(-(dim as f64) / 2.0);
    let cube = (2.0 * kappa).powi(dim as i32);
    let gauss = gaussian_cube_mass(dim, params.diffusion, p.t, &p.x, kappa)?;
    let j = probability - 2.0 * gauss;
    let j1 = probability - volume * hat;
    let j2 = volume * hat - volume * scale * 2.0 * k_t / params.density;
    let j3 = 2.0 * k_t * (volume * scale / params.density - cube);
    let j4 = 2.0 * (k_t * cube - gauss);
    Ok(JTerms { n: p.n, t: p.t, x: p.x.clone(), kappa, j, j1, j2, j3, j4 })
}
