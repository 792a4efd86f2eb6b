//! Weights `Q`, compact sets `K`, gauges, and the affine/projective weight
//! dictionary.

mod catalog;
mod gauge;
mod mild;
mod set;

pub use catalog::parse_weight;
pub use gauge::{gauge_shift, GaugeFunction};
pub use mild::{mild_check, MildOptions, MildReport};
pub use set::{parse_set, CompactSet, Locus, NodeMask, Sampler};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sphere::{chart_transition, fs_potential, Chart, GridField, ProjPoint, SphereGrid};

/// Solvers clamp `|Q|` to this value.
pub const VALUE_CAP: f64 = 1e6;

/// A weight evaluated at a point given by its coordinate in a chart.
///
/// The weight is a function on the sphere; the chart argument only says
/// which coordinate the caller has at hand, so implementations must agree
/// on overlaps.
pub type WeightFn = Arc<dyn Fn(Chart, Complex64) -> f64 + Send + Sync>;

/// A function of the affine coordinate `z = Z1/Z0`.
pub type AffineFn = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Weight {
    label: String,
    eval: WeightFn,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight").field("label", &self.label).finish_non_exhaustive()
    }
}

impl Weight {
    pub fn new(label: impl Into<String>, eval: WeightFn) -> Self {
        Weight { label: label.into(), eval }
    }

    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(Chart, Complex64) -> f64 + Send + Sync + 'static,
    {
        Weight::new(label, Arc::new(f))
    }

    pub fn zero() -> Self {
        Weight::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        let label = if c == 0.0 { "zero".to_string() } else { format!("constant({c})") };
        Weight::from_fn(label, move |_, _| c)
    }

    /// `Q(Z) = log(|Z| / |Z0|)`, i.e. `(1/2) log(1 + |z|^2)` on chart 0.
    pub fn fs_potential() -> Self {
        Weight::from_fn("fs_potential", |chart, z| match chart {
            Chart::Zero => fs_potential(chart, z),
            Chart::One => fs_potential(chart, z) - z.norm().ln(),
        })
    }

    /// `Q(z) = -log|z - a|`.
    pub fn log_dist(a: Complex64) -> Self {
        Weight::from_fn(format!("log_dist({})", fmt_complex(a)), move |chart, z| match chart {
            Chart::Zero => -(z - a).norm().ln(),
            Chart::One => z.norm().ln() - (1.0 - a * z).norm().ln(),
        })
    }

    /// `Q(z) = |z|^p / p`.
    pub fn radial_power(p: f64) -> Result<Self> {
        if !p.is_finite() || p == 0.0 {
            return Err(Error::Config(format!("radial_power exponent must be nonzero (got {p})")));
        }
        Ok(Weight::from_fn(format!("radial_power({p})"), move |chart, z| match chart {
            Chart::Zero => z.norm().powf(p) / p,
            Chart::One => z.norm().powf(-p) / p,
        }))
    }

    /// Nearest-node lookup in a sampled field.
    pub fn table(label: impl Into<String>, field: GridField) -> Self {
        let field = Arc::new(field);
        Weight::from_fn(label, move |chart, z| {
            if let Some(v) = field.nearest(chart, z) {
                return v;
            }
            match crate::sphere::SphereGrid::other_coord(z) {
                Some(w) => field.nearest(chart.other(), w).unwrap_or(f64::NAN),
                None => field.nearest(chart.other(), Complex64::new(0.0, 0.0)).unwrap_or(f64::NAN),
            }
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn eval_chart(&self, chart: Chart, z: Complex64) -> f64 {
        (self.eval)(chart, z)
    }

    pub fn eval(&self, p: &ProjPoint) -> f64 {
        let (chart, z) = chart_transition(p);
        (self.eval)(chart, z)
    }

    pub fn eval_fn(&self) -> WeightFn {
        self.eval.clone()
    }

    /// `Q + c`.
    pub fn shifted(&self, c: f64) -> Weight {
        let f = self.eval.clone();
        Weight::from_fn(format!("{}{:+}", self.label, c), move |ch, z| f(ch, z) + c)
    }

    /// `s * Q`.
    pub fn scaled(&self, s: f64) -> Weight {
        let f = self.eval.clone();
        Weight::from_fn(format!("{}*{}", s, self.label), move |ch, z| s * f(ch, z))
    }

    /// `Q + g`, where `g` is another weight.
    pub fn plus(&self, other: &Weight) -> Weight {
        let f = self.eval.clone();
        let g = other.eval.clone();
        Weight::from_fn(format!("{}+{}", self.label, other.label), move |ch, z| f(ch, z) + g(ch, z))
    }

    /// Samples the weight at every grid node. NaN values are rejected.
    pub fn sample(&self, grid: &SphereGrid, parallel: bool) -> Result<GridField> {
        let f = GridField::from_fn(grid, parallel, |chart, z| (self.eval)(chart, z));
        for chart in Chart::BOTH {
            if let Some(k) = f.values(chart).iter().position(|v| v.is_nan()) {
                let z = grid.node_at(k);
                return Err(Error::InvalidWeight(format!(
                    "weight {} is NaN at chart {} node {z}",
                    self.label,
                    chart.index()
                )));
            }
        }
        Ok(f)
    }

    /// Node mask of `Q < +inf`.
    pub fn finite_mask(&self, grid: &SphereGrid, parallel: bool) -> Result<NodeMask> {
        let f = self.sample(grid, parallel)?;
        Ok(NodeMask::from_fn(grid, |chart, k| f.values(chart)[k] < f64::INFINITY))
    }
}

pub(crate) fn fmt_complex(a: Complex64) -> String {
    if a.im == 0.0 {
        format!("{}", a.re)
    } else {
        format!("{},{}", a.re, a.im)
    }
}

/// Clamps a weight value to `[-VALUE_CAP, VALUE_CAP]`.
pub fn cap(v: f64) -> f64 {
    v.clamp(-VALUE_CAP, VALUE_CAP)
}

/// `q(z) = Q([1:z]) - (1/2) log(1 + |z|^2)`.
pub fn translate_weight_to_affine(q: &Weight) -> AffineFn {
    let f = q.eval_fn();
    Arc::new(move |z| f(Chart::Zero, z) - fs_potential(Chart::Zero, z))
}

/// The affine translation evaluated at a projective point; undefined at
/// `Z0 = 0`.
pub fn translate_weight_to_affine_at(q: &Weight, p: &ProjPoint) -> Result<f64> {
    let z = p
        .coord(Chart::Zero)
        .ok_or_else(|| Error::Domain("affine translation is undefined at Z0 = 0".into()))?;
    Ok(q.eval_chart(Chart::Zero, z) - fs_potential(Chart::Zero, z))
}

/// Value of the projective extension at `[0:1]`, approximated by the
/// minimum of `Q` over rings `|w| = 2^-k` in chart 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfinityValue {
    pub value: f64,
    /// Ring minima for the last two radii.
    pub tail: [f64; 2],
    /// True when the ring minima grow without bound and the value was
    /// replaced by `+inf`.
    pub capped: bool,
}

const RING_LEVELS: i32 = 40;
const RING_ANGLES: usize = 16;

/// Liminf approximation of `q(1/w) + phi_0(1/w)` as `w -> 0`.
pub fn value_at_infinity(q: &AffineFn) -> InfinityValue {
    let ring_min = |k: i32| {
        let r = 2f64.powi(-k);
        (0..RING_ANGLES)
            .map(|j| {
                let t = std::f64::consts::TAU * (j as f64 + 0.5) / RING_ANGLES as f64;
                let z = 1.0 / Complex64::from_polar(r, t);
                q(z) + fs_potential(Chart::Zero, z)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let a = ring_min(RING_LEVELS - 1);
    let b = ring_min(RING_LEVELS);
    // A logarithmic pole grows by log 2 per halving of the radius.
    let growing = b - a > 0.25 * std::f64::consts::LN_2 || b >= VALUE_CAP;
    let value = if growing { f64::INFINITY } else { a.min(b) };
    InfinityValue { value, tail: [a, b], capped: growing }
}

/// `Q([1:z]) = q(z) + (1/2) log(1 + |z|^2)`, extended to `[0:1]` by
/// [`value_at_infinity`].
pub fn translate_weight_to_projective(label: impl Into<String>, q: AffineFn) -> (Weight, InfinityValue) {
    let inf = value_at_infinity(&q);
    let at_inf = inf.value;
    let w = Weight::from_fn(label, move |chart, z| match chart {
        Chart::Zero => q(z) + fs_potential(Chart::Zero, z),
        Chart::One => {
            if z.norm_sqr() == 0.0 {
                at_inf
            } else {
                let y = 1.0 / z;
                q(y) + fs_potential(Chart::Zero, y)
            }
        }
    });
    (w, inf)
}

impl GridField {
    /// Value at the node nearest to `z` in `chart`, or `None` outside the box.
    pub fn nearest(&self, chart: Chart, z: Complex64) -> Option<f64> {
        let g = self.grid();
        if !g.contains(z) {
            return None;
        }
        let h = g.h();
        let idx = |x: f64| {
            let s = ((x + g.half_width()) / h - 0.5).round();
            (s.max(0.0) as usize).min(g.n() - 1)
        };
        Some(self.values(chart)[g.index(idx(z.re), idx(z.im))])
    }
}

/// Samples a weight on a grid in parallel and caps it.
pub fn sample_capped(q: &Weight, grid: &SphereGrid, parallel: bool) -> Result<(GridField, usize)> {
    let f = q.sample(grid, parallel)?;
    let saturated: usize = Chart::BOTH
        .iter()
        .map(|&c| f.values(c).iter().filter(|v| v.abs() >= VALUE_CAP).count())
        .sum();
    Ok((f.map(cap), saturated))
}
