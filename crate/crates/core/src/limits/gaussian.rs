//! Gaussian heat kernel `k_t(x) = (2 pi t D)^{-d/2} exp(-|x|^2 / (2 D t))`.

use crate::error::{Error, Result};

fn check(d: usize, diffusion: f64, t: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if !(t > 0.0 && t.is_finite()) || !(diffusion > 0.0 && diffusion.is_finite()) {
        return Err(Error::Domain(format!("need t > 0 and D > 0, got t = {t}, D = {diffusion}")));
    }
    Ok(())
}

pub fn gaussian_kernel(d: usize, diffusion: f64, t: f64, x: &[f64]) -> Result<f64> {
    check(d, diffusion, t)?;
    if x.len() != d {
        return Err(Error::Structural(format!("point has {} coordinates, expected {d}", x.len())));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let var = diffusion * t;
    Ok((2.0 * std::f64::consts::PI * var).powf(-(d as f64) / 2.0) * (-r2 / (2.0 * var)).exp())
}

/// `int_{x + [-r, r]^d} k_t(y) dy`, a product of one-dimensional `erf` differences.
pub fn gaussian_cube_mass(d: usize, diffusion: f64, t: f64, x: &[f64], r: f64) -> Result<f64> {
    check(d, diffusion, t)?;
    let s = (2.0 * diffusion * t).sqrt();
    Ok(x.iter()
        .take(d)
        .map(|&c| 0.5 * (libm::erf((c + r) / s) - libm::erf((c - r) / s)))
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn value_at_origin() {
        let v = gaussian_kernel(2, 1.0, 1.0, &[0.0, 0.0]).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-16);
        assert!((v - 0.159155).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gaussian_kernel(2, 1.0, 0.0, &[0.0, 0.0]).is_err());
        assert!(gaussian_kernel(2, -1.0, 1.0, &[0.0, 0.0]).is_err());
        assert!(gaussian_kernel(2, 1.0, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn integrates_to_one() {
        // midpoint rule on [-12, 12]^2 with D t = 2
        let h = 0.05;
        let mut total = 0.0;
        let m = (24.0 / h) as i32;
        for i in 0..m {
            for j in 0..m {
                let x = [-12.0 + (i as f64 + 0.5) * h, -12.0 + (j as f64 + 0.5) * h];
                total += gaussian_kernel(2, 0.5, 4.0, &x).unwrap() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-6);
        assert!((gaussian_cube_mass(3, 0.3, 2.0, &[0.0; 3], 50.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diffusive_scaling() {
        for &t in &[0.5, 2.0, 9.0] {
            for x in [[0.3, -1.1, 0.7], [2.0, 0.0, 0.0]] {
                let lhs = gaussian_kernel(3, 0.4, t, &x).unwrap();
                let y: Vec<f64> = x.iter().map(|v| v / t.sqrt()).collect();
                let rhs = t.powf(-1.5) * gaussian_kernel(3, 0.4, 1.0, &y).unwrap();
                assert!((lhs - rhs).abs() <= 1e-14 * lhs, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn cube_mass_matches_quadrature() {
        let (x, r) = ([0.4, -0.2], 0.5);
        let midpoint = |h: f64| {
            let m = (2.0 * r / h).round() as i32;
            let mut total = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let y = [x[0] - r + (i as f64 + 0.5) * h, x[1] - r + (j as f64 + 0.5) * h];
                    total += gaussian_kernel(2, 0.35, 1.5, &y).unwrap() * h * h;
                }
            }
            total
        };
        // Richardson step removes the h^2 term of the midpoint rule
        let total = (4.0 * midpoint(0.002) - midpoint(0.004)) / 3.0;
        let exact = gaussian_cube_mass(2, 0.35, 1.5, &x, r).unwrap();
        assert!((exact - total).abs() < 1e-10, "{exact} vs {total}");
    }
}
