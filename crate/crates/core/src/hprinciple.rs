//! Homogenization dictionary for the projective line.
//!
//! A function `v` on `C` with logarithmic growth corresponds to the
//! log-homogeneous function `V(Z0, Z1) = v(Z1/Z0) + log|Z0|` on `C^2`, and a
//! metric `{h_0, h_1}` on `O(1)` (with `h_1(1/z) = h_0(z) - log|z|`)
//! corresponds to the fiber-homogeneous function
//! `log chi(x, t) = d h_i(x) + d log|t|` on the dual bundle.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sections::{BundleLift, FiberPoint};
use crate::sphere::{fs_potential, Chart, ChartFn, GridField, ProjPoint, SphereGrid};
pub use crate::weights::AffineFn;

type HomFn = Arc<dyn Fn(Complex64, Complex64) -> f64 + Send + Sync>;
type FiberFn = Arc<dyn Fn(&FiberPoint) -> f64 + Send + Sync>;


/// Ring radii `2^-k` for the limsup at `Z0 = 0`.
pub const LIMSUP_STEPS: u32 = 40;
const LIMSUP_ANGLES: usize = 16;

/// The scaling factors used by homogeneity checks.
pub fn test_scalars() -> [Complex64; 3] {
    [Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0), Complex64::from_polar(0.5, PI / 3.0)]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Homogenized {
    pub value: f64,
    /// Last two values of the ring sequence when `Z0 = 0`.
    pub tail: Option<[f64; 2]>,
}

/// `v(Z1/Z0) + log|Z0|`, with a limsup over shrinking rings when `Z0 = 0`.
pub fn homogenize(v: &dyn Fn(Complex64) -> f64, z0: Complex64, z1: Complex64) -> Result<Homogenized> {
    if z0.norm_sqr() == 0.0 && z1.norm_sqr() == 0.0 {
        return Err(Error::Domain("(0, 0) is not a point of C^2 minus the origin".into()));
    }
    if z0.norm_sqr() > 0.0 {
        return Ok(Homogenized { value: v(z1 / z0) + z0.norm().ln(), tail: None });
    }
    let mut last = [f64::NAN; 2];
    for k in 1..=LIMSUP_STEPS {
        let eps = 0.5f64.powi(k as i32);
        let m = (0..LIMSUP_ANGLES)
            .map(|a| {
                let y0 = Complex64::from_polar(eps, TAU * a as f64 / LIMSUP_ANGLES as f64);
                v(z1 / y0) + eps.ln()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        last = [last[1], m];
    }
    Ok(Homogenized { value: last[1], tail: Some(last) })
}

/// A function on `C^2 \ {0}` with `F(lambda Z) = F(Z) + d log|lambda|`.
#[derive(Clone)]
pub struct HomogeneousFunction {
    label: String,
    order: f64,
    eval: HomFn,
}

impl std::fmt::Debug for HomogeneousFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HomogeneousFunction").field("label", &self.label).field("order", &self.order).finish()
    }
}

impl HomogeneousFunction {
    pub fn new<F>(label: impl Into<String>, order: f64, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> f64 + Send + Sync + 'static,
    {
        if !(order > 0.0 && order.is_finite()) {
            return Err(Error::Config(format!("order must be positive (got {order})")));
        }
        Ok(HomogeneousFunction { label: label.into(), order, eval: Arc::new(f) })
    }

    /// `max(log|Z0|, log|Z1|)`.
    pub fn max_log() -> Self {
        HomogeneousFunction::new("max_log", 1.0, |a, b| a.norm().max(b.norm()).ln()).expect("order 1")
    }

    /// `(1/2) log(|Z0|^2 + |Z1|^2)`.
    pub fn fubini_study() -> Self {
        HomogeneousFunction::new("fs", 1.0, |a, b| 0.5 * (a.norm_sqr() + b.norm_sqr()).ln()).expect("order 1")
    }

    pub fn log_abs_z1() -> Self {
        HomogeneousFunction::new("log|Z1|", 1.0, |_, b| b.norm().ln()).expect("order 1")
    }

    /// The homogenization of `v` (order 1).
    pub fn homogenized(label: impl Into<String>, v: AffineFn) -> Self {
        HomogeneousFunction::new(label, 1.0, move |a, b| match homogenize(&*v, a, b) {
            Ok(h) => h.value,
            Err(_) => f64::NAN,
        })
        .expect("order 1")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn eval(&self, z0: Complex64, z1: Complex64) -> f64 {
        (self.eval)(z0, z1)
    }

    /// `c * F`, of order `c d`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let f = self.eval.clone();
        HomogeneousFunction::new(format!("{c}*{}", self.label), c * self.order, move |a, b| c * f(a, b))
    }

    /// Largest `|F(lambda Z) - F(Z) - d log|lambda||` over the samples and
    /// [`test_scalars`]; equal infinities count as exact.
    pub fn homogeneity_defect(&self, samples: &[(Complex64, Complex64)]) -> f64 {
        let mut worst = 0.0f64;
        for &(a, b) in samples {
            let base = self.eval(a, b);
            for l in test_scalars() {
                let scaled = self.eval(l * a, l * b);
                let expect = base + self.order * l.norm().ln();
                if scaled == expect {
                    continue;
                }
                worst = worst.max((scaled - expect).abs());
            }
        }
        worst
    }
}

/// `v(z) = V(1, z)` for an order-1 function.
pub fn dehomogenize(f: &HomogeneousFunction) -> Result<AffineFn> {
    if f.order() != 1.0 {
        return Err(Error::Config(format!(
            "dehomogenize needs order 1 (got {}); rescale by 1/d first",
            f.order()
        )));
    }
    let g = f.clone();
    Ok(Arc::new(move |z| g.eval(Complex64::new(1.0, 0.0), z)))
}

/// Chart potentials `h_0, h_1` of a metric on `O(1)`.
#[derive(Clone)]
pub struct MetricData {
    label: String,
    h: [ChartFn; 2],
}

impl std::fmt::Debug for MetricData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricData").field("label", &self.label).finish()
    }
}

impl MetricData {
    pub fn new(label: impl Into<String>, h: [ChartFn; 2]) -> Self {
        MetricData { label: label.into(), h }
    }

    pub fn fubini_study() -> Self {
        MetricData::new("fs", Chart::BOTH.map(|c| Arc::new(move |z| fs_potential(c, z)) as ChartFn))
    }

    /// `h_i = V + phi_i` from a bundle lift.
    pub fn from_lift(lift: &BundleLift) -> Self {
        let h = Chart::BOTH.map(|c| {
            let l = lift.clone();
            Arc::new(move |z| l.metric(c, z)) as ChartFn
        });
        MetricData::new("lift", h)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn h(&self, chart: Chart, z: Complex64) -> f64 {
        (self.h[chart.index()])(z)
    }

    /// Largest `|h_1(1/z) - h_0(z) + log|z||` over nonzero samples.
    pub fn cocycle_defect(&self, samples: &[Complex64]) -> f64 {
        samples
            .iter()
            .filter(|z| z.norm_sqr() > 0.0)
            .map(|&z| (self.h(Chart::One, 1.0 / z) - self.h(Chart::Zero, z) + z.norm().ln()).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest five-point Laplacian of the sampled potentials over interior
    /// nodes (weak positivity certificate).
    pub fn positivity_certificate(&self, grid: &SphereGrid, parallel: bool) -> f64 {
        let f = GridField::from_fn(grid, parallel, |c, z| self.h(c, z));
        let lap = f.laplacian_field(parallel);
        Chart::BOTH
            .iter()
            .flat_map(|&c| lap.values(c).iter().copied())
            .filter(|x| !x.is_nan())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `log chi` on the dual bundle, homogeneous of order `d` in the fiber.
#[derive(Clone)]
pub struct FiberFunction {
    order: f64,
    eval: FiberFn,
}

impl std::fmt::Debug for FiberFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiberFunction").field("order", &self.order).finish()
    }
}

impl FiberFunction {
    pub fn new<F>(order: f64, f: F) -> Result<Self>
    where
        F: Fn(&FiberPoint) -> f64 + Send + Sync + 'static,
    {
        if !(order > 0.0 && order.is_finite()) {
            return Err(Error::Config(format!("order must be positive (got {order})")));
        }
        Ok(FiberFunction { order, eval: Arc::new(f) })
    }

    pub fn from_lift(lift: &BundleLift) -> Self {
        let l = lift.clone();
        FiberFunction::new(1.0, move |p| l.eval(p)).expect("order 1")
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn eval(&self, p: &FiberPoint) -> f64 {
        (self.eval)(p)
    }

    /// `log chi + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let f = self.eval.clone();
        FiberFunction { order: self.order, eval: Arc::new(move |p| f(p) + c) }
    }

    /// Largest `|log chi(x, lambda t) - log chi(x, t) - d log|lambda||`.
    pub fn homogeneity_defect(&self, samples: &[FiberPoint]) -> f64 {
        let mut worst = 0.0f64;
        for p in samples {
            let base = self.eval(p);
            for l in test_scalars() {
                let got = self.eval(&p.scaled(l));
                let expect = base + self.order * l.norm().ln();
                if got != expect {
                    worst = worst.max((got - expect).abs());
                }
            }
        }
        worst
    }
}

/// `log chi(x, t) = d h_i(x) + d log|t|`.
pub fn metric_to_chi(m: &MetricData, d: f64) -> Result<FiberFunction> {
    let m = m.clone();
    FiberFunction::new(d, move |p| {
        if p.t.norm_sqr() == 0.0 {
            return f64::NEG_INFINITY;
        }
        d * (m.h(p.chart, p.coord()) + p.t.norm().ln())
    })
}

/// Deterministic verification points in both charts (`|coordinate| <= 1.5`).
pub fn verification_points() -> Vec<FiberPoint> {
    let mut out = Vec::new();
    for chart in Chart::BOTH {
        for k in 0..24 {
            let r = 1.5 * (k as f64 + 0.5) / 24.0;
            let z = Complex64::from_polar(r, 2.399963 * k as f64);
            let t = Complex64::from_polar(0.3 + 0.1 * k as f64, 0.7 * k as f64);
            out.push(FiberPoint { base: ProjPoint::from_chart(chart, z), chart, t });
        }
    }
    out
}

/// Homogeneity tolerance for [`chi_to_metric`].
pub const CHI_HOMOGENEITY_TOL: f64 = 1e-8;

/// `h_i(x) = (1/d) log chi(x, 1)` after checking order-`d` homogeneity on
/// `samples`.
pub fn chi_to_metric(chi: &FiberFunction, d: f64, samples: &[FiberPoint]) -> Result<MetricData> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Config(format!("order must be positive (got {d})")));
    }
    let probe = FiberFunction { order: d, eval: chi.eval.clone() };
    let defect = probe.homogeneity_defect(samples);
    if !(defect <= CHI_HOMOGENEITY_TOL) {
        return Err(Error::Precondition(format!(
            "chi is not fiber-homogeneous of order {d}: defect {defect:e}"
        )));
    }
    let h = Chart::BOTH.map(|c| {
        let f = chi.eval.clone();
        Arc::new(move |z| {
            f(&FiberPoint { base: ProjPoint::from_chart(c, z), chart: c, t: Complex64::new(1.0, 0.0) }) / d
        }) as ChartFn
    });
    Ok(MetricData::new("from_chi", h))
}

/// Largest round-trip and homogeneity defects over random samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub samples: usize,
    pub seed: u64,
    /// `dehomogenize` then `homogenize`, and back again.
    pub homogenize_defect: f64,
    /// `metric_to_chi` then `chi_to_metric`, compared on `chi` and on `h_i`.
    pub metric_chi_defect: f64,
    pub cocycle_defect: f64,
    pub log_homogeneity_defect: f64,
    pub fiber_homogeneity_defect: f64,
}

/// Runs the dictionary identities for the max-log and Fubini–Study
/// functions on `samples` points drawn from `seed`.
pub fn round_trip_suite(samples: usize, seed: u64) -> Result<RoundTripReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: f64| Complex64::new(rng.random_range(-r..r), rng.random_range(-r..r));
    let pairs: Vec<(Complex64, Complex64)> = (0..samples).map(|_| (draw(2.0), draw(2.0))).collect();
    let fibers: Vec<FiberPoint> = (0..samples)
        .map(|k| {
            let chart = if k % 2 == 0 { Chart::Zero } else { Chart::One };
            let z = draw(1.5);
            FiberPoint { base: ProjPoint::from_chart(chart, z), chart, t: draw(3.0) }
        })
        .collect();

    let mut homog = 0.0f64;
    let mut log_hom = 0.0f64;
    for f in [HomogeneousFunction::max_log(), HomogeneousFunction::fubini_study()] {
        log_hom = log_hom.max(f.homogeneity_defect(&pairs));
        let v = dehomogenize(&f)?;
        let back = HomogeneousFunction::homogenized("back", v.clone());
        let again = dehomogenize(&back)?;
        for &(a, b) in &pairs {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            homog = homog.max((back.eval(a, b) - f.eval(a, b)).abs());
            let z = b / a;
            homog = homog.max((again(z) - v(z)).abs());
        }
    }

    let fs = MetricData::fubini_study();
    let checks = verification_points();
    let mut metric = 0.0f64;
    let mut cocycle = 0.0f64;
    let mut fiber = 0.0f64;
    for d in [1.0, 2.5] {
        let chi = metric_to_chi(&fs, d)?;
        fiber = fiber.max(chi.homogeneity_defect(&fibers));
        let m = chi_to_metric(&chi, d, &checks)?;
        let chi2 = metric_to_chi(&m, d)?;
        for p in &fibers {
            metric = metric.max((chi2.eval(p) - chi.eval(p)).abs());
            metric = metric.max((m.h(p.chart, p.coord()) - fs.h(p.chart, p.coord())).abs());
        }
        let zs: Vec<Complex64> = fibers.iter().map(|p| p.coord()).collect();
        cocycle = cocycle.max(m.cocycle_defect(&zs));
    }
    Ok(RoundTripReport {
        samples,
        seed,
        homogenize_defect: homog,
        metric_chi_defect: metric,
        cocycle_defect: cocycle,
        log_homogeneity_defect: log_hom,
        fiber_homogeneity_defect: fiber,
    })
}

/// Largest `|H(p) - H(p')|` where `p'` is `p` rewritten in the other chart,
/// over `m` points of the circle `|z| = r` with fiber coordinate `t`.
pub fn lift_chart_consistency(lift: &BundleLift, r: f64, m: usize, t: Complex64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..m {
        let z = Complex64::from_polar(r, TAU * (k as f64 + 0.3) / m as f64);
        let p = FiberPoint::new(ProjPoint::affine(z), Chart::Zero, t)?;
        let q = p.in_chart(Chart::One)?;
        worst = worst.max((lift.eval(&p) - lift.eval(&q)).abs());
    }
    Ok(worst)
}
