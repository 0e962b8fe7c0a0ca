use rayon::prelude::*;

use super::oscillation::{holder_check, oscillation_profile};
use super::phi::{harnack_delta, holder_exponent, phi_ratio, PhiFamily};
use crate::balayage::{caloric_function, CaloricSource, Cylinder};
use crate::error::Result;
use crate::lattice::WeightedGraph;
use crate::scalar::Scalar;

/// Harnack measurements on `Q(x0, R, R^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnackReport {
    pub center: usize,
    pub radius: usize,
    pub horizon: usize,
    pub family_size: usize,
    pub unbounded: usize,
    pub c_h: f64,
    pub delta: f64,
    pub theta: f64,
    /// Oscillation-decay violations summed over the checked functions.
    pub violations: usize,
    /// Functions whose oscillation sequence failed to be non-increasing or
    /// to obey the chained bound.
    pub chain_failures: usize,
    pub holder_c: f64,
    /// Diagnostic: the same ratio over lateral boundary deltas, when measured.
    pub c_h_lateral: Option<f64>,
}

/// Functions followed through the nested cylinders: the heat kernel from
/// the centre, random mixtures, and a few lateral deltas.
fn decay_family<S: Scalar>(cyl: &Cylinder<S>, seed: u64) -> Vec<CaloricSource> {
    let mut fam = vec![CaloricSource::InitialDelta(0)];
    fam.extend((0..3).map(|i| CaloricSource::RandomMixture { seed: seed.wrapping_add(i) }));
    if cyl.boundary_len() > 0 {
        for i in 0..2 {
            let vertex = cyl.ball_len() + (i * cyl.boundary_len()) / 2;
            fam.push(CaloricSource::BoundaryDelta { time: 1 + i * cyl.horizon / 4, vertex });
        }
    }
    fam
}

pub fn harnack_report<S: Scalar>(
    graph: &WeightedGraph<S>,
    center: usize,
    radius: usize,
    family: &PhiFamily,
    holder_pairs: usize,
    lateral_vertices: usize,
) -> Result<HarnackReport> {
    let horizon = radius * radius;
    let cyl = Cylinder::new(graph, center, radius, horizon)?;
    let est = phi_ratio(&cyl, family)?;
    let per_fn: Vec<Result<(usize, bool, f64)>> = decay_family(&cyl, family.seed)
        .par_iter()
        .map(|src| {
            let u = caloric_function(&cyl, src)?;
            let osc = oscillation_profile(&cyl, &u, est.c_h, 2.0)?;
            let hold = holder_check(&cyl, &u, est.c_h, 1.0, holder_pairs, family.seed)?;
            Ok((osc.violations, osc.monotone && osc.chained, hold.c))
        })
        .collect();
    let mut rep = HarnackReport {
        center,
        radius,
        horizon,
        family_size: est.evaluated + est.unbounded,
        unbounded: est.unbounded,
        c_h: est.c_h,
        delta: harnack_delta(est.c_h),
        theta: holder_exponent(est.c_h),
        violations: 0,
        chain_failures: 0,
        holder_c: 0.0,
        c_h_lateral: None,
    };
    if lateral_vertices > 0 {
        rep.c_h_lateral = Some(phi_ratio(&cyl, &PhiFamily::lateral(lateral_vertices, family.seed))?.c_h);
    }
    for r in per_fn {
        let (v, ok, c) = r?;
        rep.violations += v;
        rep.chain_failures += usize::from(!ok);
        rep.holder_c = rep.holder_c.max(c);
    }
    Ok(rep)
}
