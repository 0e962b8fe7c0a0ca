//! Oscillation decay of `u_hat` on the nested cylinders
//! `Q(k) = (t0 - r_k^2) + Q(x0, r_k, r_k^2)`, `r_k = r0 / 2^k`, and the
//! resulting Hölder bound.

use super::phi::{harnack_delta, holder_exponent};
use crate::balayage::{CaloricField, Cylinder};
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::scalar::Scalar;

/// One nesting level on a cylinder `Q(x0, r0, r0^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NestedLevel {
    pub k: usize,
    pub radius: f64,
    /// First time index of `Q(k)`; the last is `t0 - 1`.
    pub start: usize,
    pub osc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelCheck {
    pub k: usize,
    /// `Osc(u_hat, Q(k))` and `Osc(u_hat, Q_+(k)) = Osc(u_hat, Q(k+1))`.
    pub osc: f64,
    pub osc_next: f64,
    /// Harnack constant used at this level: the supplied one, raised to
    /// cover the normalized `v_hat` and `1 - v_hat`.
    pub c_h: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillationReport {
    pub levels: Vec<NestedLevel>,
    pub checks: Vec<LevelCheck>,
    pub violations: usize,
    /// `Osc(k+1) <= Osc(k)` at every level.
    pub monotone: bool,
    /// `Osc(Q(m)) <= prod_{k=1}^{m-1} (1 - delta_k) Osc(Q(1))`.
    pub chained: bool,
}

fn cut(r: f64) -> u32 {
    r.ceil() as u32
}

fn region_extremes<S: Scalar>(
    cyl: &Cylinder<S>,
    u: &CaloricField<S>,
    times: std::ops::RangeInclusive<usize>,
    radius: f64,
) -> (f64, f64) {
    let c = cut(radius);
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for n in times {
        for x in (0..cyl.ball_len()).filter(|&x| cyl.distance(x) < c) {
            let h = u.hat(n, x).to_f64_lossy();
            hi = hi.max(h);
            lo = lo.min(h);
        }
    }
    (hi, lo)
}

/// Oscillation checks for a field caloric on `Q(x0, r0, t0)` (the cylinder
/// centre and radius), over levels with `r_k >= min_radius`.
pub fn oscillation_profile<S: Scalar>(
    cyl: &Cylinder<S>,
    u: &CaloricField<S>,
    c_h: f64,
    min_radius: f64,
) -> Result<OscillationReport> {
    let t0 = cyl.horizon;
    if u.horizon() != t0 {
        return Err(Error::Structural("field horizon does not match the cylinder".into()));
    }
    let mut levels = Vec::new();
    let mut r = cyl.radius;
    let mut k = 0;
    while r >= min_radius.max(1.0) {
        let len = ((r * r).floor() as usize).min(t0);
        if len == 0 {
            break;
        }
        let start = t0 - len;
        let (hi, lo) = region_extremes(cyl, u, start..=t0 - 1, r);
        levels.push(NestedLevel { k, radius: r, start, osc: hi - lo });
        r /= 2.0;
        k += 1;
    }
    if levels.len() < 2 {
        return Err(Error::Domain(format!(
            "radius {} with minimum {min_radius} leaves fewer than two nesting levels",
            cyl.radius
        )));
    }
    let mut checks = Vec::new();
    for w in levels.windows(2) {
        let (cur, next) = (&w[0], &w[1]);
        let (hi, lo) = region_extremes(cyl, u, cur.start..=t0 - 1, cur.radius);
        let len = t0 - cur.start;
        let lower = (cur.start + len / 4)..=(cur.start + len / 2);
        let (lhi, llo) = region_extremes(cyl, u, lower, cur.radius / 2.0);
        let (phi, plo) = region_extremes(cyl, u, next.start..=t0 - 1, next.radius);
        let mut level_c = c_h;
        if cur.osc > 0.0 {
            let norm = |v: f64| (v - lo) / (hi - lo);
            // v_hat and 1 - v_hat on Q_-(k) and Q_+(k)
            for (sup_minus, inf_plus) in [(norm(lhi), norm(plo)), (1.0 - norm(llo), 1.0 - norm(phi))] {
                let ratio = if inf_plus > 0.0 { sup_minus / inf_plus } else { f64::INFINITY };
                level_c = level_c.max(ratio);
            }
        }
        let bound = (1.0 - harnack_delta(level_c)) * cur.osc;
        let violated = next.osc > bound + 1e-12 * cur.osc.abs();
        checks.push(LevelCheck { k: cur.k, osc: cur.osc, osc_next: next.osc, c_h: level_c, violated });
    }
    let violations = checks.iter().filter(|c| c.violated).count();
    let monotone = checks.iter().all(|c| c.osc_next <= c.osc * (1.0 + 1e-12) + 1e-300);
    let mut factor = 1.0;
    let mut chained = true;
    for (i, c) in checks.iter().enumerate().skip(1) {
        factor *= 1.0 - harnack_delta(c.c_h);
        let level = &levels[i + 1];
        chained &= level.osc <= factor * levels[1].osc * (1.0 + 1e-12) + 1e-300;
    }
    Ok(OscillationReport { levels, checks, violations, monotone, chained })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolderReport {
    pub theta: f64,
    /// Smallest `c` for which the bound holds on every sampled pair.
    pub c: f64,
    pub pairs: usize,
    pub sup_upper: f64,
}

/// Samples `(n1, x1), (n2, x2)` with `x_i` in `B_d(x0, r0/2)` and
/// `t0 - rho^2 <= n_i <= t0 - 1`, and fits
/// `|u_hat(n1,x1) - u_hat(n2,x2)| <= c (rho / t0^{1/2})^theta sup_{Q_+} |u_hat|`.
pub fn holder_check<S: Scalar>(
    cyl: &Cylinder<S>,
    u: &CaloricField<S>,
    c_h: f64,
    s: f64,
    pairs: usize,
    seed: u64,
) -> Result<HolderReport> {
    let t0 = cyl.horizon;
    let theta = holder_exponent(c_h);
    let half = cut(cyl.radius / 2.0);
    let points: Vec<usize> = (0..cyl.ball_len()).filter(|&x| cyl.distance(x) < half).collect();
    let mut sup_upper = 0.0f64;
    for n in cyl.upper_times() {
        for x in cyl.core() {
            sup_upper = sup_upper.max(u.hat(n, x).to_f64_lossy().abs());
        }
    }
    let mut rng = CounterRng::new(seed, 0x401d);
    let mut c = 0.0f64;
    for _ in 0..pairs {
        let (x1, x2) = (points[rng.below(points.len())], points[rng.below(points.len())]);
        let rho = s.max(cyl.distance(x1) as f64).max(cyl.distance(x2) as f64).max(1.0);
        let first = t0.saturating_sub((rho * rho).floor() as usize);
        let span = t0 - first;
        let (n1, n2) = (first + rng.below(span), first + rng.below(span));
        let lhs = (u.hat(n1, x1) - u.hat(n2, x2)).to_f64_lossy().abs();
        if lhs == 0.0 {
            continue;
        }
        if sup_upper == 0.0 {
            return Err(Error::Domain("u_hat vanishes on Q_+ but varies near the centre".into()));
        }
        let scale = (rho / (t0 as f64).sqrt()).powf(theta) * sup_upper;
        c = c.max(lhs / scale);
    }
    Ok(HolderReport { theta, c, pairs, sup_upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balayage::{caloric_function, CaloricSource};
    use crate::lattice::{build_weighted_graph, extract_giant_cluster, gen_bond_config, AntKind, WeightedGraph};

    fn lattice(p: f64, side: usize) -> WeightedGraph<f64> {
        let cfg = gen_bond_config(2, side, p, 3).unwrap();
        build_weighted_graph(&cfg, &extract_giant_cluster(&cfg).unwrap(), AntKind::Myopic).unwrap()
    }

    #[test]
    fn constant_has_zero_oscillation() {
        let g = lattice(1.0, 64);
        let cyl = Cylinder::new(&g, g.index_of(&[32, 32, 0]).unwrap(), 8, 64).unwrap();
        let u = caloric_function(&cyl, &CaloricSource::Constant).unwrap();
        let rep = oscillation_profile(&cyl, &u, 5.0, 1.0).unwrap();
        assert!(rep.levels.iter().all(|l| l.osc == 0.0));
        assert_eq!(rep.violations, 0);
        let h = holder_check(&cyl, &u, 5.0, 1.0, 100, 1).unwrap();
        assert_eq!(h.c, 0.0);
    }

    #[test]
    fn heat_kernel_on_full_lattice_decays() {
        let g = lattice(1.0, 96);
        let cyl = Cylinder::new(&g, g.index_of(&[48, 48, 0]).unwrap(), 32, 1024).unwrap();
        let u = caloric_function(&cyl, &CaloricSource::InitialDelta(0)).unwrap();
        let rep = oscillation_profile(&cyl, &u, 1.0, 2.0).unwrap();
        assert_eq!(rep.levels.len(), 5);
        assert_eq!(rep.violations, 0, "{rep:?}");
        assert!(rep.monotone && rep.chained);
        let h = holder_check(&cyl, &u, rep.checks[0].c_h, 2.0, 500, 2).unwrap();
        assert!(h.c.is_finite() && h.theta > 0.0 && h.theta <= 1.0);
    }

    #[test]
    fn identical_points_contribute_nothing() {
        let g = lattice(0.7, 64);
        let cyl = Cylinder::new(&g, g.len() / 2, 4, 16).unwrap();
        let u = caloric_function(&cyl, &CaloricSource::RandomMixture { seed: 1 }).unwrap();
        assert_eq!((u.hat(10, 0) - u.hat(10, 0)).abs(), 0.0);
        assert!(oscillation_profile(&cyl, &u, 2.0, 4.0).is_err());
    }
}
