//! The réduite of a caloric function on `E = (0,T] x B_1` and its
//! representation as a killed-kernel potential of a boundary charge.

use super::caloric::{caloric_residual, CaloricField};
use super::cylinder::Cylinder;
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

/// Exact dynamic program for `u_E(n, x) = E[u(Z_{T_E}); T_E < tau_Q]`:
/// `u_E = u` on `E`, zero at time 0 and on `dB`, and one averaging step
/// of the space-time chain elsewhere.
pub fn reduite_dp<S: Scalar>(cyl: &Cylinder<S>, u: &CaloricField<S>) -> CaloricField<S> {
    let len = cyl.closure_len();
    let mut values = vec![vec![S::zero(); len]];
    for n in 1..=cyl.horizon {
        let mut row = vec![S::zero(); len];
        for x in 0..cyl.ball_len() {
            row[x] = if cyl.in_inner(x) { u.at(n, x) } else { cyl.step_at(&values[n - 1], x) };
        }
        values.push(row);
    }
    CaloricField { values }
}

/// `k(r, y)` for `r = 1..=T`; `values[r - 1][y]` on local indices of `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BalayageCharge<S> {
    pub values: Vec<Vec<S>>,
}

impl<S: Scalar> BalayageCharge<S> {
    pub fn at(&self, r: usize, y: usize) -> S {
        self.values[r - 1][y]
    }
}

/// `k(r, y) = sum_{z in B} p^B_1(y, z) (u - u_E)(r-1, z) mu_z` on `B_1`.
fn charge_row<S: Scalar>(cyl: &Cylinder<S>, diff: &[S]) -> Vec<S> {
    let killed = cyl.killed_step(diff);
    (0..cyl.ball_len()).map(|y| if cyl.in_inner(y) { killed[y] } else { S::zero() }).collect()
}

pub fn balayage_charge<S: Scalar>(cyl: &Cylinder<S>, u: &CaloricField<S>, u_e: &CaloricField<S>) -> BalayageCharge<S> {
    let values = (1..=cyl.horizon)
        .map(|r| {
            let diff: Vec<S> = u.values[r - 1].iter().zip(&u_e.values[r - 1]).map(|(&a, &b)| a - b).collect();
            charge_row(cyl, &diff)
        })
        .collect();
    BalayageCharge { values }
}

/// Killed kernels `p^B_m(y, .)`, built on first use.
struct KernelCache<'c, S> {
    cyl: &'c Cylinder<S>,
    steps: usize,
    kernels: Vec<Option<Vec<Vec<S>>>>,
}

impl<'c, S: Scalar> KernelCache<'c, S> {
    fn new(cyl: &'c Cylinder<S>) -> Self {
        Self { cyl, steps: cyl.horizon, kernels: vec![None; cyl.ball_len()] }
    }

    fn get(&mut self, y: usize) -> &Vec<Vec<S>> {
        let (cyl, steps) = (self.cyl, self.steps);
        self.kernels[y].get_or_insert_with(|| cyl.killed_kernel(y, steps))
    }
}

#[derive(Clone, Debug)]
pub struct BalayageOutcome<S> {
    pub reduite: CaloricField<S>,
    pub charge: BalayageCharge<S>,
}

/// `u_E(n, x) = sum_{y in B} sum_{r=1..n} p^B_{n-r}(x, y) k(r, y) mu_y`.
///
/// Times are processed in order: the charge `k(n, .)` needs `u_E(n-1, .)`
/// on `B - B_1`, which the potential itself supplies; on `B_1` the réduite
/// equals `u` by definition. Each value is one compensated sum over all
/// nonzero charges.
pub fn balayage_reduite<S: Scalar>(cyl: &Cylinder<S>, u: &CaloricField<S>) -> BalayageOutcome<S> {
    let len = cyl.closure_len();
    let nb = cyl.ball_len();
    let mut cache = KernelCache::new(cyl);
    let mut reduite = vec![vec![S::zero(); len]];
    let mut charges: Vec<Vec<S>> = Vec::with_capacity(cyl.horizon);
    // (r, y) with k(r, y) != 0
    let mut support: Vec<(usize, usize)> = Vec::new();
    for n in 1..=cyl.horizon {
        let prev = &reduite[n - 1];
        let diff: Vec<S> = (0..len)
            .map(|z| {
                if z < nb && !(n > 1 && cyl.in_inner(z)) {
                    u.at(n - 1, z) - prev[z]
                } else {
                    S::zero()
                }
            })
            .collect();
        let k = charge_row(cyl, &diff);
        support.extend((0..nb).filter(|&y| !k[y].is_zero()).map(|y| (n, y)));
        charges.push(k);
        let mut row = vec![S::zero(); len];
        for (x, out) in row.iter_mut().enumerate().take(nb) {
            let mut acc = CompensatedSum::default();
            for &(r, y) in &support {
                let p = cache.get(y)[n - r][x];
                if !p.is_zero() {
                    acc.add(p * charges[r - 1][y] * cyl.mass(y));
                }
            }
            *out = acc.total();
        }
        reduite.push(row);
    }
    BalayageOutcome { reduite: CaloricField { values: reduite }, charge: BalayageCharge { values: charges } }
}

/// Whether the `r = 1` term may be rewritten as a free killed evolution of
/// `u(0, .)`: this needs `P^B u_0` to vanish on `B - B_1`.
pub fn split_form_applies<S: Scalar>(cyl: &Cylinder<S>, u: &CaloricField<S>) -> bool {
    let pu = cyl.killed_step(&u.values[0]);
    (0..cyl.ball_len()).all(|x| cyl.in_inner(x) || pu[x].is_zero())
}

/// `sum_y p^B_n(x, y) u(0, y) mu_y + sum_y sum_{r=2..n} p^B_{n-r}(x, y) k(r, y) mu_y`.
pub fn balayage_split<S: Scalar>(
    cyl: &Cylinder<S>,
    u: &CaloricField<S>,
    charge: &BalayageCharge<S>,
) -> Result<CaloricField<S>> {
    if !split_form_applies(cyl, u) {
        return Err(Error::Domain("split form needs P^B u(0, .) = 0 on B - B_1".into()));
    }
    let len = cyl.closure_len();
    let nb = cyl.ball_len();
    let mut cache = KernelCache::new(cyl);
    let initial: Vec<usize> = (0..nb).filter(|&y| !u.at(0, y).is_zero()).collect();
    let mut values = vec![vec![S::zero(); len]];
    for n in 1..=cyl.horizon {
        let mut row = vec![S::zero(); len];
        for (x, out) in row.iter_mut().enumerate().take(nb) {
            let mut acc = CompensatedSum::default();
            for &y in &initial {
                acc.add(cache.get(y)[n][x] * u.at(0, y) * cyl.mass(y));
            }
            for r in 2..=n {
                for y in 0..nb {
                    let k = charge.at(r, y);
                    if !k.is_zero() {
                        acc.add(cache.get(y)[n - r][x] * k * cyl.mass(y));
                    }
                }
            }
            *out = acc.total();
        }
        values.push(row);
    }
    Ok(CaloricField { values })
}

/// One verification case: formula against DP plus structural checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BalayageCheck {
    /// `max |balayage - DP|` over `Q`.
    pub max_gap: f64,
    /// Caloric residual of `u` on `Q`.
    pub caloric_residual: f64,
    /// Caloric residual of the DP réduite on `Q - E`.
    pub reduite_residual: f64,
    /// Charges `k(r, y) != 0` with `r >= 2` outside `d(B - B_1)`.
    pub support_violations: usize,
    /// Most negative charge (zero if all charges are nonnegative).
    pub min_charge: f64,
    /// `max (u_E - u)^+` and `max (-u_E)^+` on `Q`.
    pub order_violation: f64,
    /// `max |split - unsplit|` when the split form applies.
    pub split_gap: Option<f64>,
}

pub fn verify_balayage<S: Scalar>(cyl: &Cylinder<S>, u: &CaloricField<S>) -> BalayageCheck {
    let dp = reduite_dp(cyl, u);
    let bal = balayage_reduite(cyl, u);
    let nb = cyl.ball_len();
    let mut check = BalayageCheck { caloric_residual: caloric_residual(cyl, u), ..Default::default() };
    let support: Vec<bool> = {
        let mut s = vec![false; nb];
        cyl.charge_support().for_each(|y| s[y] = true);
        s
    };
    for n in 0..=cyl.horizon {
        for x in 0..nb {
            let (a, b) = (bal.reduite.at(n, x), dp.at(n, x));
            check.max_gap = check.max_gap.max((a - b).to_f64_lossy().abs());
            let ord = (b - u.at(n, x)).to_f64_lossy().max(-b.to_f64_lossy()).max(0.0);
            check.order_violation = check.order_violation.max(ord);
            if n >= 1 && !cyl.in_inner(x) {
                let r = b - cyl.step_at(&dp.values[n - 1], x);
                check.reduite_residual = check.reduite_residual.max(r.to_f64_lossy().abs());
            }
        }
    }
    for r in 1..=cyl.horizon {
        for y in 0..nb {
            let k = bal.charge.at(r, y);
            check.min_charge = check.min_charge.min(k.to_f64_lossy());
            if r >= 2 && !k.is_zero() && !support[y] {
                check.support_violations += 1;
            }
        }
    }
    if let Ok(split) = balayage_split(cyl, u, &bal.charge) {
        let mut gap = 0.0f64;
        for n in 0..=cyl.horizon {
            for x in 0..nb {
                gap = gap.max((split.at(n, x) - bal.reduite.at(n, x)).to_f64_lossy().abs());
            }
        }
        check.split_gap = Some(gap);
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balayage::caloric::{caloric_family, caloric_function, evolve_caloric, CaloricData, CaloricSource};
    use crate::lattice::{build_weighted_graph, extract_giant_cluster, gen_bond_config, AntKind, BoxGeometry, WeightedGraph};
    use crate::rng::CounterRng;
    use num_rational::Ratio;

    type Q = Ratio<i128>;

    fn sample(p: f64, seed: u64) -> WeightedGraph<f64> {
        let cfg = gen_bond_config(2, 48, p, seed).unwrap();
        build_weighted_graph(&cfg, &extract_giant_cluster(&cfg).unwrap(), AntKind::Blind).unwrap()
    }

    #[test]
    fn zero_function_has_zero_reduite() {
        let g = sample(0.7, 1);
        let cyl = Cylinder::new(&g, g.len() / 2, 7, 20).unwrap();
        let u = evolve_caloric(&cyl, &CaloricData::zeros(&cyl)).unwrap();
        let out = balayage_reduite(&cyl, &u);
        assert!(out.reduite.values.iter().flatten().all(|&v| v == 0.0));
        assert!(out.charge.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn dp_equals_u_on_e_and_when_b1_fills_b() {
        let g = sample(0.7, 2);
        let cyl = Cylinder::new(&g, g.len() / 2, 8, 24).unwrap();
        let u = caloric_function(&cyl, &CaloricSource::RandomMixture { seed: 3 }).unwrap();
        let ue = reduite_dp(&cyl, &u);
        for n in 1..=24 {
            for x in cyl.inner() {
                assert_eq!(ue.at(n, x), u.at(n, x));
            }
        }
        // charge from the exact réduite vanishes when u_E = u
        let zero = balayage_charge(&cyl, &u, &u);
        assert!(zero.values.iter().flatten().all(|&v| v == 0.0));
        // B_1 = B: only dB separates, so B_1 touches it and is rejected
        assert!(Cylinder::with_radii(&g, g.len() / 2, 8.0, 8.0, 4.0, 24).is_err());
    }

    #[test]
    fn formula_matches_dp_on_random_cylinders() {
        for (p, seed) in [(0.7, 3), (1.0, 4), (0.65, 5)] {
            let g = sample(p, seed);
            let mut rng = CounterRng::new(seed, 1);
            for _ in 0..3 {
                let c = rng.below(g.len());
                let r = 5 + rng.below(6);
                let t = 12 + rng.below(30);
                let Ok(cyl) = Cylinder::new(&g, c, r, t) else { continue };
                for src in caloric_family(&cyl, 5, seed) {
                    let u = caloric_function(&cyl, &src).unwrap();
                    let chk = verify_balayage(&cyl, &u);
                    assert!(chk.max_gap < 1e-12, "{src:?}: {chk:?}");
                    assert!(chk.reduite_residual < 1e-14);
                    assert_eq!(chk.support_violations, 0);
                    // nonnegative up to rounding; exact in the rational test
                    assert!(chk.min_charge > -1e-15, "{chk:?}");
                    assert!(chk.order_violation < 1e-14);
                }
            }
        }
    }

    #[test]
    fn split_form_needs_vanishing_initial_push() {
        let g = sample(0.7, 6);
        let cyl = Cylinder::new(&g, g.len() / 2, 9, 30).unwrap();
        // boundary-driven u: u(0, .) = 0, split form applies
        let src = CaloricSource::BoundaryDelta { time: 3, vertex: cyl.ball_len() };
        let u = caloric_function(&cyl, &src).unwrap();
        let chk = verify_balayage(&cyl, &u);
        assert!(chk.split_gap.unwrap() < 1e-13);
        // initial data in the core only: P^B u_0 stays inside B_1
        let mut data = CaloricData::zeros(&cyl);
        for x in cyl.core() {
            data.initial[x] = 1.0 + x as f64 * 0.01;
        }
        let u = evolve_caloric(&cyl, &data).unwrap();
        assert!(split_form_applies(&cyl, &u));
        assert!(verify_balayage(&cyl, &u).split_gap.unwrap() < 1e-13);
        // mass next to dB: the two forms differ and the split one is refused
        let u = caloric_function(&cyl, &CaloricSource::Constant).unwrap();
        assert!(!split_form_applies(&cyl, &u));
        assert!(balayage_split(&cyl, &u, &balayage_reduite(&cyl, &u).charge).is_err());
    }

    fn lattice_q(side: usize) -> WeightedGraph<Q> {
        let geom = BoxGeometry::new(2, side).unwrap();
        let mut sites = Vec::new();
        let mut edges = Vec::new();
        let mut selfw = Vec::new();
        for i in 0..side as i32 {
            for j in 0..side as i32 {
                sites.push([i, j, 0]);
                let mut deg = 0;
                if i + 1 < side as i32 {
                    edges.push(([i, j, 0], [i + 1, j, 0], Q::from_integer(1)));
                }
                if j + 1 < side as i32 {
                    // heterogeneous weights keep the check non-trivial
                    edges.push(([i, j, 0], [i, j + 1, 0], Q::from_integer(1 + ((i + j) % 2) as i128)));
                }
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (a, b) = (i + di, j + dj);
                    if a >= 0 && b >= 0 && a < side as i32 && b < side as i32 {
                        deg += 1;
                    }
                }
                if (i + j) % 3 == 0 {
                    selfw.push(([i, j, 0], Q::from_integer(4 - deg as i128 + 1)));
                }
            }
        }
        WeightedGraph::from_parts(geom, AntKind::Conductance, sites, &edges, &selfw).unwrap()
    }

    #[test]
    fn exact_rational_equivalence() {
        let g = lattice_q(9);
        let c = g.index_of(&[4, 4, 0]).unwrap();
        let cyl = Cylinder::new(&g, c, 4, 7).unwrap();
        let mut data = CaloricData::zeros(&cyl);
        for (i, v) in data.initial.iter_mut().enumerate() {
            *v = Q::from_integer((i % 3) as i128);
        }
        for (n, row) in data.boundary.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = Q::from_integer(((n + 2 * j) % 4) as i128);
            }
        }
        let u = evolve_caloric(&cyl, &data).unwrap();
        let dp = reduite_dp(&cyl, &u);
        let bal = balayage_reduite(&cyl, &u);
        assert_eq!(dp, bal.reduite);
        assert!(bal.charge.values.iter().flatten().all(|k| *k >= Q::from_integer(0)));
        // boundary-only data: split form identical too
        let mut data = CaloricData::zeros(&cyl);
        data.boundary[1][0] = Q::from_integer(3);
        data.boundary[4][2] = Q::from_integer(1);
        let u = evolve_caloric(&cyl, &data).unwrap();
        let bal = balayage_reduite(&cyl, &u);
        assert_eq!(balayage_split(&cyl, &u, &bal.charge).unwrap(), bal.reduite);
        assert_eq!(reduite_dp(&cyl, &u), bal.reduite);
    }
}
