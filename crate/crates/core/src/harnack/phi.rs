//! Empirical parabolic Harnack constants: `sup_{Q_-} u_hat / inf_{Q_+} u_hat`
//! over a family of nonnegative caloric functions.

use rayon::prelude::*;

use crate::balayage::{caloric_data, check_data, CaloricData, CaloricSource, Cylinder};
use crate::error::Result;
use crate::rng::CounterRng;
use crate::scalar::Scalar;

/// `delta = 1 / (2 C_H)`.
pub fn harnack_delta(c_h: f64) -> f64 {
    1.0 / (2.0 * c_h)
}

/// `theta = log(2 C_H / (2 C_H - 1)) / log 2`; equals 1 at `C_H = 1` and
/// decreases to 0 as `C_H` grows.
pub fn holder_exponent(c_h: f64) -> f64 {
    (2.0 * c_h / (2.0 * c_h - 1.0)).ln() / std::f64::consts::LN_2
}

/// Per-time extremes of `u_hat` over `B_0`, for `n = 0..T-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HatExtremes {
    pub max: Vec<f64>,
    pub min: Vec<f64>,
}

/// Streams the caloric evolution without storing the field.
pub fn hat_extremes<S: Scalar>(cyl: &Cylinder<S>, data: &CaloricData<S>) -> Result<HatExtremes> {
    check_data(cyl, data)?;
    let core: Vec<usize> = cyl.core().collect();
    let nb = cyl.ball_len();
    let mut prev = data.initial.clone();
    let mut ext = HatExtremes { max: Vec::with_capacity(cyl.horizon), min: Vec::with_capacity(cyl.horizon) };
    for n in 1..=cyl.horizon {
        let mut next = cyl.step(&prev);
        next[nb..].copy_from_slice(&data.boundary[n - 1]);
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for &x in &core {
            let h = (next[x] + prev[x]).to_f64_lossy();
            hi = hi.max(h);
            lo = lo.min(h);
        }
        ext.max.push(hi);
        ext.min.push(lo);
        prev = next;
    }
    Ok(ext)
}

/// Ratio for one function from its hat extremes, with the function delayed
/// by `shift` steps (zero before). `None` when the `Q_+` infimum vanishes.
fn shifted_ratio<S: Scalar>(cyl: &Cylinder<S>, ext: &HatExtremes, shift: usize) -> Option<f64> {
    let at = |v: &Vec<f64>, n: usize| if n >= shift { v[n - shift] } else { 0.0 };
    let sup = cyl.lower_times().map(|n| at(&ext.max, n)).fold(0.0, f64::max);
    let inf = cyl.upper_times().map(|n| at(&ext.min, n)).fold(f64::INFINITY, f64::min);
    (inf > 0.0).then(|| sup / inf)
}

/// Ratio for a single caloric function; `None` when `inf_{Q_+} u_hat = 0`.
pub fn phi_ratio_of<S: Scalar>(cyl: &Cylinder<S>, data: &CaloricData<S>) -> Result<Option<f64>> {
    Ok(shifted_ratio(cyl, &hat_extremes(cyl, data)?, 0))
}

/// Which members make up the test family.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiFamily {
    /// Killed kernels from time-0 deltas at up to this many sampled points
    /// of `B u dB`.
    pub initial_deltas: usize,
    /// Lateral deltas `(s, z)` for every `s` at up to this many `z` in `dB`.
    pub boundary_vertices: usize,
    pub mixtures: usize,
    pub seed: u64,
}

impl Default for PhiFamily {
    /// Killed kernels plus random mixtures; lateral deltas are measured
    /// separately (see [`PhiFamily::lateral`]).
    fn default() -> Self {
        Self { initial_deltas: 64, boundary_vertices: 0, mixtures: 8, seed: 1 }
    }
}

impl PhiFamily {
    /// Lateral deltas only, at up to `vertices` boundary points.
    pub fn lateral(vertices: usize, seed: u64) -> Self {
        Self { initial_deltas: 0, boundary_vertices: vertices, mixtures: 0, seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiEstimate {
    /// Lower-bound estimate of the cylinder's Harnack constant.
    pub c_h: f64,
    /// Members with a finite ratio.
    pub evaluated: usize,
    /// Members with `inf_{Q_+} u_hat = 0`, excluded.
    pub unbounded: usize,
    /// Member attaining the maximum.
    pub worst: CaloricSource,
}

fn sample_distinct(rng: &mut CounterRng, pool: usize, count: usize) -> Vec<usize> {
    if count >= pool {
        return (0..pool).collect();
    }
    let mut picked = Vec::with_capacity(count);
    let mut seen = vec![false; pool];
    while picked.len() < count {
        let v = rng.below(pool);
        if !seen[v] {
            seen[v] = true;
            picked.push(v);
        }
    }
    picked.sort_unstable();
    picked
}

enum Job {
    Single(CaloricSource),
    /// All lateral deltas at one boundary vertex.
    Lateral(usize),
}

/// Maximum ratio over the family. Members are evaluated in parallel and
/// folded in a fixed order, so the result does not depend on scheduling.
pub fn phi_ratio<S: Scalar>(cyl: &Cylinder<S>, family: &PhiFamily) -> Result<PhiEstimate> {
    let mut rng = CounterRng::new(family.seed, 0x9411);
    let mut jobs = vec![Job::Single(CaloricSource::Constant)];
    for x in sample_distinct(&mut rng, cyl.closure_len(), family.initial_deltas) {
        jobs.push(Job::Single(CaloricSource::InitialDelta(x)));
    }
    for j in sample_distinct(&mut rng, cyl.boundary_len(), family.boundary_vertices) {
        jobs.push(Job::Lateral(cyl.ball_len() + j));
    }
    for _ in 0..family.mixtures {
        jobs.push(Job::Single(CaloricSource::RandomMixture { seed: rng.next_u64() }));
    }
    let results: Vec<Result<Vec<(CaloricSource, Option<f64>)>>> = jobs
        .par_iter()
        .map(|job| match job {
            Job::Single(src) => Ok(vec![(src.clone(), phi_ratio_of(cyl, &caloric_data(cyl, src)?)?)]),
            Job::Lateral(vertex) => {
                let vertex = *vertex;
                // a lateral delta at (s, z) is the s = 1 delta delayed by s - 1 steps
                let base = CaloricSource::BoundaryDelta { time: 1, vertex };
                let ext = hat_extremes(cyl, &caloric_data(cyl, &base)?)?;
                Ok((1..=cyl.horizon)
                    .map(|time| (CaloricSource::BoundaryDelta { time, vertex }, shifted_ratio(cyl, &ext, time - 1)))
                    .collect())
            }
        })
        .collect();
    let mut est = PhiEstimate { c_h: 1.0, evaluated: 0, unbounded: 0, worst: CaloricSource::Constant };
    for batch in results {
        for (src, ratio) in batch? {
            match ratio {
                Some(r) => {
                    est.evaluated += 1;
                    if r > est.c_h {
                        est.c_h = r;
                        est.worst = src;
                    }
                }
                None => est.unbounded += 1,
            }
        }
    }
    Ok(est)
}

/// Smallest `R` with `|C_H(2R) - C_H(R)| < 0.2 C_H(R)` among measured radii.
pub fn stabilization_radius(profile: &[(usize, f64)]) -> Option<usize> {
    let mut sorted = profile.to_vec();
    sorted.sort_by_key(|p| p.0);
    sorted.iter().find_map(|&(r, c)| {
        let twice = sorted.iter().find(|p| p.0 == 2 * r)?;
        ((twice.1 - c).abs() < 0.2 * c).then_some(r)
    })
}
