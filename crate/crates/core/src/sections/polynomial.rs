use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{fs_potential, Chart, ProjPoint};

/// A section of `O(n)`: coefficients of `1, z, ..., z^n` in chart 0. The
/// homogeneous form is `sum c_j Z0^(n-j) Z1^j`; zero leading coefficients
/// are allowed, so `n` is the formal degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("a polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("polynomial coefficients must be finite".into()));
        }
        Ok(Polynomial { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Polynomial::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// `scale * prod (z - r)` over `roots`.
    pub fn from_roots(roots: &[Complex64], scale: Complex64) -> Self {
        let mut c = vec![scale];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (j, &a) in c.iter().enumerate() {
                next[j + 1] += a;
                next[j] -= a * r;
            }
            c = next;
        }
        Polynomial { coeffs: c }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Index of the highest nonzero coefficient (`None` for the zero polynomial).
    pub fn true_degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.norm_sqr() > 0.0)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Same section viewed in `O(m)`, `m >= n`.
    pub fn with_degree(&self, m: usize) -> Result<Polynomial> {
        if let Some(d) = self.true_degree() {
            if d > m {
                return Err(Error::Config(format!("cannot view a degree {d} polynomial in degree {m}")));
            }
        }
        let mut c = self.coeffs.clone();
        c.resize(m + 1, Complex64::new(0.0, 0.0));
        c.truncate(m + 1);
        Ok(Polynomial { coeffs: c })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `w^n p(1/w)`, the section in the chart-1 trivialization.
    pub fn eval_reversed(&self, w: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * w + c)
    }

    pub fn eval_chart(&self, chart: Chart, z: Complex64) -> Complex64 {
        match chart {
            Chart::Zero => self.eval(z),
            Chart::One => self.eval_reversed(z),
        }
    }

    /// `sum c_j z0^(n-j) z1^j`.
    pub fn eval_homogeneous(&self, z0: Complex64, z1: Complex64) -> Complex64 {
        let n = self.degree() as i32;
        if z0.norm_sqr() >= z1.norm_sqr() {
            if z0.norm_sqr() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            z0.powi(n) * self.eval(z1 / z0)
        } else {
            z1.powi(n) * self.eval_reversed(z0 / z1)
        }
    }

    /// `log(|s| e^{-n phi_i})` at a chart point, with the Fubini–Study metric.
    pub fn log_norm(&self, chart: Chart, z: Complex64) -> f64 {
        self.eval_chart(chart, z).norm().ln() - self.degree() as f64 * fs_potential(chart, z)
    }

    pub fn log_norm_at(&self, p: &ProjPoint) -> f64 {
        let (chart, z) = crate::sphere::chart_transition(p);
        self.log_norm(chart, z)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial { coeffs: vec![Complex64::new(0.0, 0.0)] };
        }
        Polynomial {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(j, &c)| c * j as f64).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Polynomial {
        Polynomial { coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }
}
