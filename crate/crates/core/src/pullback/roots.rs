//! Aberth–Ehrlich simultaneous root iteration.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 500;
pub const ROOT_SEED: u64 = 0x0a6e_47b1;

const EPS: f64 = f64::EPSILON;

/// Number of trailing and leading coefficients (ascending order) that are
/// zero relative to the largest one.
pub(crate) fn zero_ends(coeffs: &[Complex64]) -> (usize, usize) {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if scale == 0.0 {
        return (coeffs.len(), 0);
    }
    let small = |c: &Complex64| c.norm() <= 4.0 * EPS * scale;
    let low = coeffs.iter().take_while(|c| small(c)).count();
    let high = coeffs.iter().rev().take_while(|c| small(c)).count();
    (low, high)
}

fn horner(c: &[Complex64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut bound = 0.0;
    let r = z.norm();
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
        bound = bound * r + a.norm();
    }
    (p, dp, bound)
}

/// All roots of `sum c_j z^j` whose leading coefficient is nonzero. Roots at
/// the origin are split off exactly; the rest start on a perturbed circle
/// drawn from a fixed seed.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = coeffs.len().saturating_sub(1);
    if coeffs.is_empty() || coeffs[m].norm_sqr() == 0.0 {
        return Err(Error::Domain("leading coefficient must be nonzero".into()));
    }
    let zeros = coeffs.iter().take_while(|c| c.norm_sqr() == 0.0).count();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let c: Vec<Complex64> = coeffs[zeros..].iter().map(|&a| a / coeffs[m]).collect();
    let k = c.len() - 1;
    match k {
        0 => return Ok(roots),
        1 => {
            roots.push(-c[0]);
            return Ok(roots);
        }
        _ => {}
    }
    let radius = (0..k)
        .map(|j| c[j].norm().powf(1.0 / (k - j) as f64))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(ROOT_SEED);
    let mut z: Vec<Complex64> = (0..k)
        .map(|j| {
            let angle = TAU * (j as f64 + 0.25) / k as f64 + rng.random_range(-0.1..0.1);
            Complex64::from_polar(radius * rng.random_range(0.9..1.1), angle)
        })
        .collect();
    let mut done = vec![false; k];
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..MAX_ITERATIONS {
        worst = (0.0, 0.0);
        for i in 0..k {
            if done[i] {
                continue;
            }
            let (p, dp, bound) = horner(&c, z[i]);
            if p.norm() <= 8.0 * EPS * bound {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..k).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * s);
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            worst.0 = worst.0.max(step.norm());
            worst.1 = worst.1.max(p.norm() / bound);
            if step.norm() <= 2.0 * EPS * z[i].norm() {
                done[i] = true;
            }
        }
        if done.iter().all(|&d| d) {
            roots.extend(z);
            return Ok(roots);
        }
    }
    Err(Error::RootFinder(format!(
        "degree {k}: {} of {k} roots unconverged after {MAX_ITERATIONS} iterations (last step {:e}, relative residual {:e})",
        done.iter().filter(|d| !**d).count(),
        worst.0,
        worst.1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sections::Polynomial;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn factored_cubic() {
        // z^3 - z = z (z - 1) (z + 1)
        let r = sorted(polynomial_roots(&[c(0.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap());
        for (got, want) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - c(want, 0.0)).norm() < 1e-14, "{r:?}");
        }
    }

    #[test]
    fn pure_power_and_linear() {
        let r = polynomial_roots(&[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(r, vec![c(0.0, 0.0); 3]);
        assert_eq!(polynomial_roots(&[c(3.0, 0.0), c(-1.5, 0.0)]).unwrap(), vec![c(2.0, 0.0)]);
        assert!(polynomial_roots(&[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn double_root_within_cluster_radius() {
        // (z - 0.3i)^2 (z + 2)
        let p = Polynomial::from_roots(&[c(0.0, 0.3), c(0.0, 0.3), c(-2.0, 0.0)], c(1.0, 0.0));
        let r = polynomial_roots(p.coeffs()).unwrap();
        assert_eq!(r.iter().filter(|z| (*z - c(0.0, 0.3)).norm() < 1e-6).count(), 2);
    }

    #[test]
    fn reproducible() {
        let p = Polynomial::from_roots(&[c(0.1, 0.2), c(-0.7, 0.0), c(3.0, -1.0), c(0.0, 5.0)], c(0.5, 0.5));
        assert_eq!(polynomial_roots(p.coeffs()).unwrap(), polynomial_roots(p.coeffs()).unwrap());
    }

    proptest! {
        #[test]
        fn recovers_random_roots(re in proptest::collection::vec(-3.0f64..3.0, 2..7), im in proptest::collection::vec(-3.0f64..3.0, 7)) {
            let want: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect();
            let p = Polynomial::from_roots(&want, c(1.0, 0.0));
            let got = polynomial_roots(p.coeffs()).unwrap();
            prop_assert_eq!(got.len(), want.len());
            for z in &got {
                let (v, _, bound) = horner(p.coeffs(), *z);
                prop_assert!(v.norm() <= 1e-12 * bound);
            }
        }
    }
}
