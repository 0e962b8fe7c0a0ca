//! Caloric functions on a cylinder: `u(n+1, x) = (P u_n)(x)` for `x` in `B`.

use super::cylinder::Cylinder;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::scalar::Scalar;

/// Parabolic boundary data: `u(0, .)` on `B u dB` and `u(n, .)` on `dB`
/// for `n = 1..=T` (`boundary[n-1]`).
#[derive(Clone, Debug, PartialEq)]
pub struct CaloricData<S> {
    pub initial: Vec<S>,
    pub boundary: Vec<Vec<S>>,
}

impl<S: Scalar> CaloricData<S> {
    pub fn zeros(cyl: &Cylinder<S>) -> Self {
        Self {
            initial: vec![S::zero(); cyl.closure_len()],
            boundary: vec![vec![S::zero(); cyl.boundary_len()]; cyl.horizon],
        }
    }

    pub fn constant(cyl: &Cylinder<S>, c: S) -> Self {
        Self {
            initial: vec![c; cyl.closure_len()],
            boundary: vec![vec![c; cyl.boundary_len()]; cyl.horizon],
        }
    }
}

/// `values[n][local]` for `n = 0..=T` on `B u dB`.
#[derive(Clone, Debug, PartialEq)]
pub struct CaloricField<S> {
    pub values: Vec<Vec<S>>,
}

impl<S: Scalar> CaloricField<S> {
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, n: usize, x: usize) -> S {
        self.values[n][x]
    }

    /// `u_hat(n, x) = u(n+1, x) + u(n, x)`, defined for `n < T`.
    pub fn hat(&self, n: usize, x: usize) -> S {
        self.values[n + 1][x] + self.values[n][x]
    }

    pub fn scaled(&self, c: S) -> Self {
        Self { values: self.values.iter().map(|row| row.iter().map(|&v| v * c).collect()).collect() }
    }
}

pub(crate) fn check_data<S: Scalar>(cyl: &Cylinder<S>, data: &CaloricData<S>) -> Result<()> {
    if data.initial.len() != cyl.closure_len() {
        return Err(Error::Structural(format!(
            "initial data has {} values, cylinder closure has {}",
            data.initial.len(),
            cyl.closure_len()
        )));
    }
    if data.boundary.len() != cyl.horizon || data.boundary.iter().any(|b| b.len() != cyl.boundary_len()) {
        return Err(Error::Structural(format!(
            "boundary data must cover times 1..={} on {} boundary vertices",
            cyl.horizon,
            cyl.boundary_len()
        )));
    }
    Ok(())
}

pub fn evolve_caloric<S: Scalar>(cyl: &Cylinder<S>, data: &CaloricData<S>) -> Result<CaloricField<S>> {
    check_data(cyl, data)?;
    let nb = cyl.ball_len();
    let mut values = Vec::with_capacity(cyl.horizon + 1);
    values.push(data.initial.clone());
    for n in 1..=cyl.horizon {
        let mut next = cyl.step(&values[n - 1]);
        next[nb..].copy_from_slice(&data.boundary[n - 1]);
        values.push(next);
    }
    Ok(CaloricField { values })
}

/// `max |u(n+1, x) - u(n, x) - Lu(n, x)|` over `n < T`, `x` in `B`.
pub fn caloric_residual<S: Scalar>(cyl: &Cylinder<S>, u: &CaloricField<S>) -> f64 {
    let mut worst = 0.0f64;
    for n in 0..u.horizon() {
        for x in 0..cyl.ball_len() {
            let lu = cyl.step_at(&u.values[n], x) - u.values[n][x];
            let r = u.values[n + 1][x] - u.values[n][x] - lu;
            worst = worst.max(r.to_f64_lossy().abs());
        }
    }
    worst
}

/// Members of the nonnegative caloric test family.
#[derive(Clone, Debug, PartialEq)]
pub enum CaloricSource {
    Constant,
    /// `u(0, .) = 1_{x}` on `B u dB`, zero boundary data.
    InitialDelta(usize),
    /// `u(s, z) = 1` at one boundary point, zero elsewhere on the
    /// parabolic boundary.
    BoundaryDelta { time: usize, vertex: usize },
    /// Independent uniform `[0, 1)` parabolic boundary values.
    RandomMixture { seed: u64 },
}

pub fn caloric_data<S: Scalar>(cyl: &Cylinder<S>, source: &CaloricSource) -> Result<CaloricData<S>> {
    let mut data = CaloricData::zeros(cyl);
    match *source {
        CaloricSource::Constant => return Ok(CaloricData::constant(cyl, S::one())),
        CaloricSource::InitialDelta(x) => {
            if x >= cyl.closure_len() {
                return Err(Error::Lookup(format!("local vertex {x} outside the cylinder")));
            }
            data.initial[x] = S::one();
        }
        CaloricSource::BoundaryDelta { time, vertex } => {
            if time == 0 || time > cyl.horizon || vertex < cyl.ball_len() || vertex >= cyl.closure_len() {
                return Err(Error::Lookup(format!("({time}, {vertex}) is not on the lateral boundary")));
            }
            data.boundary[time - 1][vertex - cyl.ball_len()] = S::one();
        }
        CaloricSource::RandomMixture { seed } => {
            let mut rng = CounterRng::new(seed, 0xca10);
            for v in data.initial.iter_mut() {
                *v = S::from_f64_lossy(rng.next_f64());
            }
            for row in data.boundary.iter_mut() {
                for v in row.iter_mut() {
                    *v = S::from_f64_lossy(rng.next_f64());
                }
            }
        }
    }
    Ok(data)
}

pub fn caloric_function<S: Scalar>(cyl: &Cylinder<S>, source: &CaloricSource) -> Result<CaloricField<S>> {
    evolve_caloric(cyl, &caloric_data(cyl, source)?)
}

/// A family of `count` test functions: random mixtures interleaved with
/// initial and boundary deltas chosen by `seed`.
pub fn caloric_family<S: Scalar>(cyl: &Cylinder<S>, count: usize, seed: u64) -> Vec<CaloricSource> {
    let mut rng = CounterRng::new(seed, 0xfa31);
    (0..count)
        .map(|i| match i % 3 {
            0 => CaloricSource::RandomMixture { seed: rng.next_u64() },
            1 => CaloricSource::InitialDelta(rng.below(cyl.closure_len())),
            _ if cyl.boundary_len() > 0 => CaloricSource::BoundaryDelta {
                time: 1 + rng.below(cyl.horizon),
                vertex: cyl.ball_len() + rng.below(cyl.boundary_len()),
            },
            _ => CaloricSource::InitialDelta(rng.below(cyl.ball_len())),
        })
        .collect()
}
