use std::sync::Arc;

use num_complex::Complex64;

use super::Weight;
use crate::error::{Error, Result};
use crate::sphere::{Chart, ChartFn, GridField, OmegaSpec, ProjPoint, SphereGrid};

/// A continuous gauge `xi` sampled on the grid together with its discrete
/// Laplacian. The form `omega' = omega + dd^c xi` has density
/// `rho + laplacian(xi)`.
#[derive(Clone, Debug)]
pub struct GaugeFunction {
    label: String,
    xi: Arc<GridField>,
    laplacian: Arc<GridField>,
}

/// Value at a node when `z` sits on one (to rounding), bilinear otherwise.
fn node_or_interp(f: &GridField, chart: Chart, z: Complex64) -> Option<f64> {
    let g = f.grid();
    let h = g.h();
    let sx = (z.re + g.half_width()) / h - 0.5;
    let sy = (z.im + g.half_width()) / h - 0.5;
    let (rx, ry) = (sx.round(), sy.round());
    let top = (g.n() - 1) as f64;
    if (sx - rx).abs() < 1e-6 && (sy - ry).abs() < 1e-6 && (0.0..=top).contains(&rx) && (0.0..=top).contains(&ry) {
        return Some(f.values(chart)[g.index(rx as usize, ry as usize)]);
    }
    f.interpolate(chart, z)
}

impl GaugeFunction {
    /// Samples a global function (given in chart coordinates) and computes
    /// its five-point Laplacian. Ring nodes take the other chart's Laplacian
    /// transformed as a density.
    pub fn from_fn<F>(label: impl Into<String>, grid: &SphereGrid, f: F) -> Result<Self>
    where
        F: Fn(Chart, Complex64) -> f64 + Sync + Send,
    {
        let xi = GridField::from_fn(grid, true, f);
        GaugeFunction::from_field(label, xi)
    }

    pub fn from_field(label: impl Into<String>, xi: GridField) -> Result<Self> {
        if xi.values(Chart::Zero).iter().chain(xi.values(Chart::One)).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGauge("gauge must be finite at every node".into()));
        }
        let grid = xi.grid().clone();
        let interior = xi.laplacian_field(true);
        let mut lap = interior.clone();
        for chart in Chart::BOTH {
            for k in grid.ring_indices() {
                let z = grid.node_at(k);
                let w = 1.0 / z;
                let v = interior
                    .interpolate(chart.other(), w)
                    .map(|l| l * z.norm_sqr().powi(-2))
                    .unwrap_or(0.0);
                lap.values_mut(chart)[k] = v;
            }
        }
        Ok(GaugeFunction { label: label.into(), xi: Arc::new(xi), laplacian: Arc::new(lap) })
    }

    pub fn zero(grid: &SphereGrid) -> Self {
        GaugeFunction::constant(grid, 0.0)
    }

    pub fn constant(grid: &SphereGrid, c: f64) -> Self {
        GaugeFunction {
            label: format!("constant({c})"),
            xi: Arc::new(GridField::constant(grid, c)),
            laplacian: Arc::new(GridField::constant(grid, 0.0)),
        }
    }

    /// `xi = amplitude * exp(-|z - center|^2 / width^2)` in the affine chart.
    pub fn bump(grid: &SphereGrid, amplitude: f64, center: Complex64, width: f64) -> Result<Self> {
        let f = move |z: Complex64| amplitude * (-(z - center).norm_sqr() / (width * width)).exp();
        GaugeFunction::from_fn(format!("bump({amplitude},{width})"), grid, move |chart, z| match chart {
            Chart::Zero => f(z),
            Chart::One => {
                if z.norm_sqr() == 0.0 {
                    0.0
                } else {
                    f(1.0 / z)
                }
            }
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn xi(&self) -> &GridField {
        &self.xi
    }

    pub fn laplacian(&self) -> &GridField {
        &self.laplacian
    }

    /// Chart-aware evaluation of `xi`, exact at nodes.
    pub fn eval_chart(&self, chart: Chart, z: Complex64) -> f64 {
        eval_field(&self.xi, chart, z, false)
    }

    pub fn laplacian_chart(&self, chart: Chart, z: Complex64) -> f64 {
        eval_field(&self.laplacian, chart, z, true)
    }
}

/// Evaluates a grid field at a chart point, preferring that chart. Density
/// fields pick up the conformal factor when read from the other chart.
fn eval_field(f: &GridField, chart: Chart, z: Complex64, density: bool) -> f64 {
    if let Some(v) = node_or_interp(f, chart, z) {
        return v;
    }
    if z.norm_sqr() == 0.0 {
        return f.eval(&ProjPoint::from_chart(chart, z), crate::sphere::Interp::Linear);
    }
    let w = 1.0 / z;
    let v = node_or_interp(f, chart.other(), w).unwrap_or(f64::NAN);
    if density {
        v * w.norm_sqr().powi(2)
    } else {
        v
    }
}

/// Returns `Q + direction * xi` and the form `omega' = omega + dd^c xi`.
///
/// The density of `omega'` at grid nodes is `rho + laplacian_h(xi)`, so the
/// gauge identity holds exactly for the discrete problem.
pub fn gauge_shift(
    q: &Weight,
    xi: &GaugeFunction,
    direction: i32,
    omega: &OmegaSpec,
) -> Result<(Weight, OmegaSpec)> {
    if direction != 1 && direction != -1 {
        return Err(Error::Config(format!("gauge direction must be +1 or -1 (got {direction})")));
    }
    let grid = xi.xi().grid().clone();
    for chart in Chart::BOTH {
        let lap = xi.laplacian().values(chart);
        for (k, &l) in lap.iter().enumerate() {
            let (ix, iy) = grid.unindex(k);
            if grid.is_ring(ix, iy) {
                continue;
            }
            let rho = omega.density(chart, grid.node(ix, iy));
            if rho + l < 0.0 {
                return Err(Error::InvalidGauge(format!(
                    "rho + laplacian(xi) = {} < 0 at chart {} node {}",
                    rho + l,
                    chart.index(),
                    grid.node(ix, iy)
                )));
            }
        }
    }
    let s = direction as f64;
    let qf = q.eval_fn();
    let g = xi.clone();
    let label = format!("{}{}{}", q.label(), if s > 0.0 { "+" } else { "-" }, xi.label());
    let shifted = Weight::from_fn(label, move |c, z| qf(c, z) + s * g.eval_chart(c, z));

    let potentials = Chart::BOTH.map(|c| {
        let phi = omega.potential_fn(c);
        let g = xi.clone();
        Arc::new(move |z| phi(z) + g.eval_chart(c, z)) as ChartFn
    });
    let densities = Chart::BOTH.map(|c| {
        let rho = omega.density_fn(c);
        let g = xi.clone();
        Arc::new(move |z| rho(z) + g.laplacian_chart(c, z)) as ChartFn
    });
    let omega2 = OmegaSpec::new(
        format!("{}+ddc({})", omega.label(), xi.label()),
        potentials,
        densities,
        omega.degree(),
    );
    Ok((shifted, omega2))
}
