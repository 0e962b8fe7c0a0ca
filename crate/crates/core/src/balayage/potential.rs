//! Space-time potentials `v(n) = sum_{r=1..n} (P^B)^{n-r} w_r` and the
//! uniqueness of functions in `D` with a given `H`-image, where
//! `Hw(n, x) = w(n, x) - P w_{n-1}(x)`.

use super::caloric::CaloricField;
use super::cylinder::Cylinder;
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PotentialReport {
    /// `max |Hv - w|` on `Q`.
    pub h_residual: f64,
    /// Most negative value of `v` (zero when `v >= 0`).
    pub min_value: f64,
    /// `max |v|` on `Qbar - Q` (time 0 and `dB`).
    pub outside: f64,
    /// `max |Hv|` on `Q - E`.
    pub caloric_residual: f64,
    /// `max |v - u|` for `u` rebuilt from `Hu = w` by forward recursion.
    pub uniqueness_gap: f64,
    /// Same comparison after perturbing `w` at one point of `E`; the
    /// perturbed pair must agree and differ from the unperturbed `v`.
    pub perturbed_gap: f64,
    pub perturbation_visible: bool,
}

fn h_image<S: Scalar>(cyl: &Cylinder<S>, v: &CaloricField<S>, n: usize, x: usize) -> S {
    v.at(n, x) - cyl.step_at(&v.values[n - 1], x)
}

/// `v` by the explicit double sum, each term propagated with `P^B`.
pub fn space_time_potential<S: Scalar>(cyl: &Cylinder<S>, w: &CaloricField<S>) -> CaloricField<S> {
    let len = cyl.closure_len();
    let t = cyl.horizon;
    let mut acc: Vec<Vec<CompensatedSum<S>>> = vec![vec![CompensatedSum::default(); len]; t + 1];
    for r in 1..=t {
        let mut f: Vec<S> = (0..len).map(|x| if cyl.in_ball(x) { w.at(r, x) } else { S::zero() }).collect();
        for n in r..=t {
            if n > r {
                f = cyl.killed_step(&f);
            }
            for x in 0..cyl.ball_len() {
                acc[n][x].add(f[x]);
            }
        }
    }
    CaloricField { values: acc.iter().map(|row| row.iter().map(|a| a.total()).collect()).collect() }
}

/// The unique `u` in `D` with `Hu = w` on `Q`, by `u(n) = w(n) + P u(n-1)`.
fn forward_solution<S: Scalar>(cyl: &Cylinder<S>, w: &CaloricField<S>) -> CaloricField<S> {
    let len = cyl.closure_len();
    let mut values = vec![vec![S::zero(); len]];
    for n in 1..=cyl.horizon {
        let mut row = vec![S::zero(); len];
        for x in 0..cyl.ball_len() {
            row[x] = w.at(n, x) + cyl.step_at(&values[n - 1], x);
        }
        values.push(row);
    }
    CaloricField { values }
}

fn max_gap<S: Scalar>(cyl: &Cylinder<S>, a: &CaloricField<S>, b: &CaloricField<S>) -> f64 {
    let mut g = 0.0f64;
    for n in 0..=cyl.horizon {
        for x in 0..cyl.closure_len() {
            g = g.max((a.at(n, x) - b.at(n, x)).to_f64_lossy().abs());
        }
    }
    g
}

/// Checks the potential of `w >= 0` supported on `E`: `Hv = w` on `Q`,
/// `v` in `D`, and uniqueness of the preimage (also under a perturbation).
pub fn verify_space_time_potential<S: Scalar>(cyl: &Cylinder<S>, w: &CaloricField<S>) -> Result<PotentialReport> {
    if w.values.len() != cyl.horizon + 1 || w.values.iter().any(|r| r.len() != cyl.closure_len()) {
        return Err(Error::Structural("w does not match the cylinder".into()));
    }
    for n in 0..=cyl.horizon {
        for x in 0..cyl.closure_len() {
            let val = w.at(n, x);
            if val < S::zero() {
                return Err(Error::Domain(format!("w({n}, {x}) is negative")));
            }
            if !val.is_zero() && (n == 0 || !cyl.in_inner(x)) {
                return Err(Error::Domain(format!("w({n}, {x}) != 0 outside E")));
            }
        }
    }
    let v = space_time_potential(cyl, w);
    let mut rep = PotentialReport::default();
    for n in 0..=cyl.horizon {
        for x in 0..cyl.closure_len() {
            let val = v.at(n, x).to_f64_lossy();
            rep.min_value = rep.min_value.min(val);
            if n == 0 || !cyl.in_ball(x) {
                rep.outside = rep.outside.max(val.abs());
                continue;
            }
            let h = h_image(cyl, &v, n, x);
            rep.h_residual = rep.h_residual.max((h - w.at(n, x)).to_f64_lossy().abs());
            if !cyl.in_inner(x) {
                rep.caloric_residual = rep.caloric_residual.max(h.to_f64_lossy().abs());
            }
        }
    }
    rep.uniqueness_gap = max_gap(cyl, &v, &forward_solution(cyl, w));
    if let Some(x) = cyl.inner().next() {
        let mut w2 = w.clone();
        let n = (cyl.horizon + 1) / 2;
        w2.values[n][x] += S::one();
        let v2 = space_time_potential(cyl, &w2);
        rep.perturbed_gap = max_gap(cyl, &v2, &forward_solution(cyl, &w2));
        rep.perturbation_visible = max_gap(cyl, &v2, &v) > 0.5;
    }
    Ok(rep)
}
