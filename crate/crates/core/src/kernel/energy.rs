//! Dirichlet form and empirical Poincaré constants.

use nalgebra::{DMatrix, RealField};

use crate::error::{Error, Result};
use crate::lattice::{graph_distances, WeightedGraph};
use crate::scalar::{Real, Scalar};
use crate::solver::{conjugate_gradient, dot};

/// `E(f, f) >= 0`; zero exactly for constants on a connected graph.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct EnergyValue<S>(pub S);

impl<S: Scalar> EnergyValue<S> {
    pub fn value(self) -> S {
        self.0
    }
}

/// `E(f, f) = 1/2 sum_x sum_y mu_xy (f(y) - f(x))^2`; self-weights drop out.
pub fn dirichlet_energy<S: Scalar>(graph: &WeightedGraph<S>, f: &[S]) -> Result<EnergyValue<S>> {
    if f.len() != graph.len() {
        return Err(Error::Structural("function size does not match graph".into()));
    }
    let mut acc = S::zero();
    for (x, y, w) in graph.edges() {
        let d = f[y] - f[x];
        acc += w * d * d;
    }
    Ok(EnergyValue(acc))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoincareMethod {
    DenseEigen,
    InverseIteration,
}

/// Best constant in the Poincaré inequality on a graph-metric ball with
/// `C_W = 1`: `sum_B (f - fbar)^2 mu <= C_P r^2 sum_{y~z in B} |f(y)-f(z)|^2 mu_yz`.
#[derive(Clone, Debug)]
pub struct PoincareReport {
    pub center: usize,
    pub radius: usize,
    pub ball_size: usize,
    /// `max_f Var_mu(f) / sum_{y~z in B} |f(y)-f(z)|^2 mu_yz`.
    pub constant: f64,
    /// `constant / r^2`, the value of `C_P` in the inequality above.
    pub normalized: f64,
    /// `mu(B) / r^d`, the measured volume constant.
    pub volume_ratio: f64,
    pub method: PoincareMethod,
}

/// Balls up to this size are handled by a dense symmetric eigensolve.
pub const DENSE_LIMIT: usize = 2000;

/// Ball `B_d(center, radius) = {y : d(center, y) < radius}`.
pub fn metric_ball<S: Scalar>(graph: &WeightedGraph<S>, center: usize, radius: usize) -> Result<Vec<usize>> {
    let dist = graph_distances(graph, center)?;
    Ok((0..graph.len()).filter(|&v| (dist[v] as usize) < radius).collect())
}

pub fn poincare_constant<S: Real + RealField>(
    graph: &WeightedGraph<S>,
    center: usize,
    radius: usize,
) -> Result<PoincareReport> {
    let ball = metric_ball(graph, center, radius)?;
    if ball.is_empty() {
        return Err(Error::Domain(format!("ball of radius {radius} is empty")));
    }
    let n = ball.len();
    let mut local = vec![usize::MAX; graph.len()];
    for (i, &v) in ball.iter().enumerate() {
        local[v] = i;
    }
    let masses: Vec<S> = ball.iter().map(|&v| graph.mass(v)).collect();
    let volume: f64 = masses.iter().map(|m| m.to_f64_lossy()).sum();
    let r = radius as f64;
    let volume_ratio = volume / r.powi(graph.dim() as i32);
    // induced edges inside the ball, each once
    let mut edges = Vec::new();
    for (i, &v) in ball.iter().enumerate() {
        for (w, mu) in graph.neighbors(v) {
            let j = local[w];
            if j != usize::MAX && j > i {
                edges.push((i, j, mu));
            }
        }
    }
    if n == 1 {
        return Ok(PoincareReport {
            center,
            radius,
            ball_size: 1,
            constant: 0.0,
            normalized: 0.0,
            volume_ratio,
            method: PoincareMethod::DenseEigen,
        });
    }
    // the ordered-pair sum counts every edge twice: denominator = 2 f^T L f,
    // so the extremal ratio is 1 / (2 lambda_2) for L f = lambda M f.
    let (lambda2, method) = if n <= DENSE_LIMIT {
        (dense_lambda2(n, &edges, &masses), PoincareMethod::DenseEigen)
    } else {
        (iterative_lambda2(n, &edges, &masses)?, PoincareMethod::InverseIteration)
    };
    let constant = 1.0 / (2.0 * lambda2);
    Ok(PoincareReport {
        center,
        radius,
        ball_size: n,
        constant,
        normalized: constant / (r * r),
        volume_ratio,
        method,
    })
}

fn dense_lambda2<S: Real + RealField>(n: usize, edges: &[(usize, usize, S)], masses: &[S]) -> f64 {
    let scale: Vec<S> = masses.iter().map(|&m| num_traits::Float::sqrt(m)).collect();
    let mut a = DMatrix::<S>::zeros(n, n);
    for &(i, j, w) in edges {
        a[(i, i)] += w / (scale[i] * scale[i]);
        a[(j, j)] += w / (scale[j] * scale[j]);
        let off = w / (scale[i] * scale[j]);
        a[(i, j)] -= off;
        a[(j, i)] -= off;
    }
    let mut eig: Vec<f64> = a
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.to_f64_lossy())
        .collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig[1]
}

fn iterative_lambda2<S: Real>(n: usize, edges: &[(usize, usize, S)], masses: &[S]) -> Result<f64> {
    let mut diag = vec![S::zero(); n];
    for &(i, j, w) in edges {
        diag[i] = diag[i] + w;
        diag[j] = diag[j] + w;
    }
    let laplacian = |v: &[S], out: &mut [S]| {
        for (o, (&d, &x)) in out.iter_mut().zip(diag.iter().zip(v)) {
            *o = d * x;
        }
        for &(i, j, w) in edges {
            out[i] = out[i] - w * v[j];
            out[j] = out[j] - w * v[i];
        }
    };
    let total: S = masses.iter().fold(S::zero(), |a, &m| a + m);
    let project = |v: &mut [S]| {
        let mean = v.iter().zip(masses).fold(S::zero(), |a, (&x, &m)| a + x * m) / total;
        for x in v.iter_mut() {
            *x = *x - mean;
        }
    };
    let m_norm = |v: &[S]| -> S {
        num_traits::Float::sqrt(v.iter().zip(masses).fold(S::zero(), |a, (&x, &m)| a + x * x * m))
    };
    // start from a smooth non-constant vector
    let mut v: Vec<S> = (0..n).map(|i| S::from_f64_lossy(((i as f64) * 0.37).sin() + 0.01 * i as f64)).collect();
    project(&mut v);
    let mut lambda = f64::INFINITY;
    let mut lv = vec![S::zero(); n];
    for _ in 0..500 {
        let norm = m_norm(&v);
        for x in v.iter_mut() {
            *x = *x / norm;
        }
        laplacian(&v, &mut lv);
        let next_lambda = dot(&v, &lv).to_f64_lossy();
        if (next_lambda - lambda).abs() <= 1e-11 * next_lambda.abs() {
            return Ok(next_lambda);
        }
        lambda = next_lambda;
        let rhs: Vec<S> = v.iter().zip(masses).map(|(&x, &m)| x * m).collect();
        let scale = rhs.iter().fold(0.0f64, |a, x| a.max(x.to_f64_lossy().abs()));
        let solved = conjugate_gradient(&laplacian, &diag, &rhs, 1e-12 * scale, 20 * n, |r: &[S]| {
            r.iter().fold(0.0f64, |a, x| a.max(x.to_f64_lossy().abs()))
        })?;
        v = solved.solution;
        project(&mut v);
    }
    Ok(lambda)
}
