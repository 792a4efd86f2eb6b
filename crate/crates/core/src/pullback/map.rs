use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::roots::{polynomial_roots, zero_ends};
use crate::error::{Error, Result};
use crate::sections::Polynomial;
use crate::sphere::{chart_transition, Chart, ProjPoint};

/// Normalized resultant below which `P` and `Q` count as sharing a root.
pub const RESULTANT_TOL: f64 = 1e-10;
/// Largest admissible residual of a preimage.
pub const PREIMAGE_RESIDUAL: f64 = 1e-10;
/// Chordal radius for merging roots into one preimage.
pub const CLUSTER_RADIUS: f64 = 1e-6;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn derivative(c: &[Complex64]) -> Vec<Complex64> {
    if c.len() == 1 {
        return vec![zero()];
    }
    c.iter().enumerate().skip(1).map(|(j, &a)| a * j as f64).collect()
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(zero(), |acc, &a| acc * z + a)
}

/// Chart-local forms `(a, b, a', b')` with `f = [a : b]`.
#[derive(Clone, Debug, PartialEq)]
struct Forms {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    da: Vec<Complex64>,
    db: Vec<Complex64>,
}

impl Forms {
    fn new(a: Vec<Complex64>, b: Vec<Complex64>) -> Self {
        Forms { da: derivative(&a), db: derivative(&b), a, b }
    }
}

/// A holomorphic self-map of the sphere, `f = P/Q` in chart 0.
///
/// With `d = max(deg P, deg Q)` the homogeneous map is
/// `[Z0 : Z1] -> [Q^(Z0, Z1) : P^(Z0, Z1)]`, where `^` is the degree-`d`
/// homogenization.
#[derive(Clone, PartialEq)]
pub struct RationalMap {
    label: String,
    p: Polynomial,
    q: Polynomial,
    degree: usize,
    forms: [Forms; 2],
    resultant: f64,
}

impl fmt::Debug for RationalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RationalMap")
            .field("label", &self.label)
            .field("degree", &self.degree)
            .field("p", &self.p.coeffs())
            .field("q", &self.q.coeffs())
            .finish()
    }
}

/// A preimage with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preimage {
    pub point: ProjPoint,
    pub multiplicity: usize,
}

/// Largest coordinate modulus at which a point is read in a caller's
/// preferred chart rather than the one where it has modulus at most 1.
/// First-order distance estimates taken in a chart where the point is far
/// out are unreliable.
pub const PREFERRED_COORD_MAX: f64 = 2.0;

/// `p` in `chart` if its coordinate there is moderate, else in the chart
/// where its coordinate has modulus at most 1.
pub fn coord_preferring(p: &ProjPoint, chart: Chart) -> (Chart, Complex64) {
    match p.coord(chart) {
        Some(z) if z.norm() <= PREFERRED_COORD_MAX => (chart, z),
        _ => chart_transition(p),
    }
}

/// Coefficient lists as read from a config file: `[re, im]` pairs,
/// constant term first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(rename = "P")]
    pub p: Vec<[f64; 2]>,
    #[serde(rename = "Q")]
    pub q: Vec<[f64; 2]>,
}

impl MapSpec {
    pub fn build(&self) -> Result<RationalMap> {
        let conv = |v: &[[f64; 2]]| v.iter().map(|&[re, im]| Complex64::new(re, im)).collect::<Vec<_>>();
        RationalMap::new("config", Polynomial::new(conv(&self.p))?, Polynomial::new(conv(&self.q))?)
    }
}

/// Determinant of the Sylvester matrix of two binary forms of degree `d`,
/// each scaled to unit max coefficient.
fn normalized_resultant(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d = a.len() - 1;
    let n = 2 * d;
    let sa = a.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let sb = b.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for row in 0..d {
        for j in 0..=d {
            m[(row, row + j)] = a[j] / sa;
            m[(d + row, row + j)] = b[j] / sb;
        }
    }
    m.determinant().norm()
}

impl RationalMap {
    pub fn new(label: impl Into<String>, p: Polynomial, q: Polynomial) -> Result<Self> {
        let dp = p.true_degree();
        let dq = q.true_degree();
        let Some(dq_) = dq else {
            return Err(Error::Config("Q must not be the zero polynomial".into()));
        };
        let degree = dp.unwrap_or(0).max(dq_);
        if degree == 0 {
            return Err(Error::Config("a constant map is not surjective".into()));
        }
        let p = p.with_degree(degree)?;
        let q = q.with_degree(degree)?;
        let resultant = normalized_resultant(q.coeffs(), p.coeffs());
        if !(resultant > RESULTANT_TOL) {
            return Err(Error::Config(format!(
                "P and Q share a root on the sphere (normalized resultant {resultant:e})"
            )));
        }
        let rev = |c: &[Complex64]| c.iter().rev().copied().collect::<Vec<_>>();
        let forms = [
            Forms::new(q.coeffs().to_vec(), p.coeffs().to_vec()),
            Forms::new(rev(q.coeffs()), rev(p.coeffs())),
        ];
        Ok(RationalMap { label: label.into(), p, q, degree, forms, resultant })
    }

    pub fn identity() -> Self {
        RationalMap::new("identity", Polynomial::from_real(&[0.0, 1.0]).unwrap(), Polynomial::from_real(&[1.0]).unwrap())
            .expect("coprime")
    }

    /// `z^d`.
    pub fn power(d: usize) -> Result<Self> {
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        RationalMap::new(format!("z^{d}"), Polynomial::from_real(&c)?, Polynomial::from_real(&[1.0])?)
    }

    /// The polynomial map `z -> sum c_j z^j`.
    pub fn polynomial(coeffs: &[Complex64]) -> Result<Self> {
        RationalMap::new("polynomial", Polynomial::new(coeffs.to_vec())?, Polynomial::from_real(&[1.0])?)
    }

    /// `(z cos t - sin t) / (z sin t + cos t)`, an isometry of the
    /// Fubini–Study metric.
    pub fn mobius_rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        RationalMap::new(
            format!("rotation({theta})"),
            Polynomial::from_real(&[-s, c]).unwrap(),
            Polynomial::from_real(&[c, s]).unwrap(),
        )
        .expect("unit determinant")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.p
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.q
    }

    pub fn resultant(&self) -> f64 {
        self.resultant
    }

    pub fn is_identity(&self) -> bool {
        let f = &self.forms[0];
        self.degree == 1 && f.a[1] == zero() && f.b[0] == zero() && f.a[0] == f.b[1]
    }

    /// `(a, b)` with `f = [a : b]` at the point with coordinate `z` in `chart`.
    pub fn forms(&self, chart: Chart, z: Complex64) -> (Complex64, Complex64) {
        let f = &self.forms[chart.index()];
        (horner(&f.a, z), horner(&f.b, z))
    }

    /// `a b' - b a'` in `chart`.
    pub fn wronskian(&self, chart: Chart, z: Complex64) -> Complex64 {
        let f = &self.forms[chart.index()];
        horner(&f.a, z) * horner(&f.db, z) - horner(&f.b, z) * horner(&f.da, z)
    }

    pub fn eval_map(&self, x: &ProjPoint) -> ProjPoint {
        let a = self.q.eval_homogeneous(x.z0(), x.z1());
        let b = self.p.eval_homogeneous(x.z0(), x.z1());
        ProjPoint::new(a, b).expect("coprime forms have no common zero")
    }

    pub fn eval_chart(&self, chart: Chart, z: Complex64) -> ProjPoint {
        let (a, b) = self.forms(chart, z);
        ProjPoint::new(a, b).expect("coprime forms have no common zero")
    }

    /// Derivative of the `to`-coordinate of `f` with respect to the
    /// `from`-coordinate, when the image lies in chart `to`.
    pub fn derivative(&self, from: Chart, z: Complex64, to: Chart) -> Option<Complex64> {
        let (a, b) = self.forms(from, z);
        let w = self.wronskian(from, z);
        match to {
            Chart::Zero if a.norm_sqr() > 0.0 => Some(w / (a * a)),
            Chart::One if b.norm_sqr() > 0.0 => Some(-w / (b * b)),
            _ => None,
        }
    }

    /// `|df|^2` measured in the Fubini–Study metric on both sides,
    /// `rho(f(z)) |f'(z)|^2 / rho(z)`.
    pub fn fs_stretch(&self, chart: Chart, z: Complex64) -> f64 {
        let (a, b) = self.forms(chart, z);
        let w = self.wronskian(chart, z);
        let s = 1.0 + z.norm_sqr();
        let t = a.norm_sqr() + b.norm_sqr();
        w.norm_sqr() * s * s / (t * t)
    }

    /// `f o g`.
    pub fn compose(&self, g: &RationalMap) -> Result<RationalMap> {
        let (ag, bg) = (&g.forms[0].a, &g.forms[0].b);
        let d = self.degree;
        let mut pow_a = vec![vec![Complex64::new(1.0, 0.0)]];
        let mut pow_b = vec![vec![Complex64::new(1.0, 0.0)]];
        for k in 0..d {
            pow_a.push(mul(&pow_a[k], ag));
            pow_b.push(mul(&pow_b[k], bg));
        }
        let len = d * g.degree + 1;
        let subst = |coeffs: &[Complex64]| {
            let mut out = vec![zero(); len];
            for (j, &c) in coeffs.iter().enumerate() {
                for (k, t) in mul(&pow_a[d - j], &pow_b[j]).into_iter().enumerate() {
                    out[k] += c * t;
                }
            }
            out
        };
        let a = subst(&self.forms[0].a);
        let b = subst(&self.forms[0].b);
        RationalMap::new(format!("{}o{}", self.label, g.label), Polynomial::new(b)?, Polynomial::new(a)?)
    }

    /// Solutions of `f(x) = y` with multiplicity; the multiplicities sum to
    /// the degree.
    pub fn preimages(&self, y: &ProjPoint) -> Result<Vec<Preimage>> {
        let (y0, y1) = (y.z0(), y.z1());
        let f = &self.forms[0];
        let h: Vec<Complex64> = f.a.iter().zip(&f.b).map(|(&a, &b)| y0 * b - y1 * a).collect();
        let scale = h.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let (_, high) = zero_ends(&h);
        let d = self.degree;
        let mut points = Vec::with_capacity(d);
        if high < h.len() {
            let core = &h[..h.len() - high];
            let (low, _) = zero_ends(core);
            let mut trimmed = core.to_vec();
            for c in trimmed.iter_mut().take(low) {
                *c = zero();
            }
            for z in polynomial_roots(&trimmed)? {
                points.push(ProjPoint::affine(z));
            }
        }
        points.extend(std::iter::repeat_n(ProjPoint::infinity(), high));
        let hom = Polynomial::new(h).expect("finite coefficients");
        for p in &points {
            let r = hom.eval_homogeneous(p.z0(), p.z1()).norm() / scale;
            if !(r <= PREIMAGE_RESIDUAL) {
                return Err(Error::RootFinder(format!(
                    "preimage {:?} of {:?} under {} has residual {r:e}",
                    p, y, self.label
                )));
            }
        }
        let mut out: Vec<Preimage> = Vec::new();
        for p in points {
            match out.iter_mut().find(|q| q.point.chordal_distance(&p) <= CLUSTER_RADIUS) {
                Some(q) => q.multiplicity += 1,
                None => out.push(Preimage { point: p, multiplicity: 1 }),
            }
        }
        Ok(out)
    }

    /// Zeros of the Wronskian, with multiplicity.
    pub fn critical_points(&self) -> Result<Vec<ProjPoint>> {
        let f = &self.forms[0];
        let w = {
            let x = mul(&f.a, &f.db);
            let y = mul(&f.b, &f.da);
            // The top coefficients cancel: the formal degree is 2d - 2.
            x.iter().zip(&y).take(2 * self.degree - 1).map(|(u, v)| u - v).collect::<Vec<_>>()
        };
        let (_, high) = zero_ends(&w);
        let mut out: Vec<ProjPoint> = Vec::new();
        if high < w.len() {
            let core = &w[..w.len() - high];
            for z in polynomial_roots(core)? {
                out.push(ProjPoint::affine(z));
            }
        }
        out.extend(std::iter::repeat_n(ProjPoint::infinity(), high));
        Ok(out)
    }

    /// Images of the critical points, without repetition.
    pub fn critical_values(&self) -> Result<Vec<ProjPoint>> {
        let mut out: Vec<ProjPoint> = Vec::new();
        for c in self.critical_points()? {
            let v = self.eval_map(&c);
            if !out.iter().any(|q| q.chordal_distance(&v) <= CLUSTER_RADIUS) {
                out.push(v);
            }
        }
        Ok(out)
    }

    /// Image of a chart point expressed in the chart of [`chart_transition`].
    pub fn image_coord(&self, chart: Chart, z: Complex64) -> (Chart, Complex64) {
        chart_transition(&self.eval_chart(chart, z))
    }

    /// Image of a chart point in the same chart when its coordinate there is
    /// at most [`PREFERRED_COORD_MAX`] in modulus.
    pub fn image_coord_preferring(&self, chart: Chart, z: Complex64) -> (Chart, Complex64) {
        coord_preferring(&self.eval_chart(chart, z), chart)
    }
}
