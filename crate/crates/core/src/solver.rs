//! Preconditioned conjugate gradients for symmetric positive (semi)definite
//! operators given as closures.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct CgOutcome<S> {
    pub solution: Vec<S>,
    pub iterations: usize,
    /// Final value of the caller's residual norm.
    pub residual: f64,
}

pub(crate) fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    // fixed-order pairwise blocks: deterministic and tighter than a flat sum
    const BLOCK: usize = 256;
    let mut total = S::zero();
    for (ca, cb) in a.chunks(BLOCK).zip(b.chunks(BLOCK)) {
        let mut part = S::zero();
        for (&x, &y) in ca.iter().zip(cb) {
            part = part + x * y;
        }
        total = total + part;
    }
    total
}

/// Solve `A x = b` with Jacobi preconditioner `diag`. Stops once
/// `residual_norm(r)` drops below `tol`, where `r = b - A x` is recomputed
/// explicitly at each check.
pub fn conjugate_gradient<S, A, N>(
    apply: A,
    diag: &[S],
    rhs: &[S],
    tol: f64,
    max_iter: usize,
    residual_norm: N,
) -> Result<CgOutcome<S>>
where
    S: Real,
    A: Fn(&[S], &mut [S]),
    N: Fn(&[S]) -> f64,
{
    let n = rhs.len();
    let mut x = vec![S::zero(); n];
    let mut r = rhs.to_vec();
    let mut z: Vec<S> = r.iter().zip(diag).map(|(&ri, &di)| ri / di).collect();
    let mut p = z.clone();
    let mut ap = vec![S::zero(); n];
    let mut rz = dot(&r, &z);
    let mut res = residual_norm(&r);
    let mut it = 0;
    while res >= tol {
        if it >= max_iter {
            return Err(Error::Solver { iterations: it, residual: res });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= S::zero() {
            return Err(Error::Solver { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        it += 1;
        if it % 50 == 0 {
            // refresh the recursive residual against drift
            apply(&x, &mut ap);
            for i in 0..n {
                r[i] = rhs[i] - ap[i];
            }
        }
        res = residual_norm(&r);
        if res < tol {
            apply(&x, &mut ap);
            let true_r: Vec<S> = rhs.iter().zip(&ap).map(|(&b, &a)| b - a).collect();
            res = residual_norm(&true_r);
            if res < tol {
                break;
            }
            r = true_r;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgOutcome { solution: x, iterations: it, residual: res })
}
