use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Chart, GridField, SphereGrid};

/// A real function of a chart coordinate.
pub type ChartFn = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;

/// Fubini–Study potential `(1/2) log(1 + |z|^2)`, identical in both charts.
pub fn fs_potential(_chart: Chart, z: Complex64) -> f64 {
    let r = z.norm();
    if r <= 1.0 {
        0.5 * (r * r).ln_1p()
    } else {
        r.ln() + 0.5 * (1.0 / (r * r)).ln_1p()
    }
}

/// Laplacian of [`fs_potential`]: `2 / (1 + |z|^2)^2`. Integrates to `2 pi`.
pub fn omega_density(_chart: Chart, z: Complex64) -> f64 {
    let t = 1.0 + z.norm_sqr();
    2.0 / (t * t)
}

/// The reference form: per-chart potentials and their Laplace densities.
///
/// `degree` is the degree of the line bundle whose curvature the form
/// represents; the potentials satisfy
/// `potential_0(z) - potential_1(1/z) = degree * log|z|` and the total mass
/// is `2 pi degree`.
#[derive(Clone)]
pub struct OmegaSpec {
    label: String,
    potentials: [ChartFn; 2],
    densities: [ChartFn; 2],
    degree: u32,
}

impl fmt::Debug for OmegaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OmegaSpec")
            .field("label", &self.label)
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

/// Result of [`OmegaSpec::check`].
#[derive(Clone, Copy, Debug)]
pub struct OmegaCheck {
    /// Worst relative error between the density and a finite-difference
    /// Laplacian of the potential.
    pub laplacian_rel_err: f64,
    /// Worst violation of the cocycle relation on the overlap.
    pub cocycle_err: f64,
    pub min_density: f64,
}

impl OmegaSpec {
    pub fn new(
        label: impl Into<String>,
        potentials: [ChartFn; 2],
        densities: [ChartFn; 2],
        degree: u32,
    ) -> Self {
        OmegaSpec { label: label.into(), potentials, densities, degree }
    }

    pub fn fubini_study() -> Self {
        let pot: ChartFn = Arc::new(|z| fs_potential(Chart::Zero, z));
        let den: ChartFn = Arc::new(|z| omega_density(Chart::Zero, z));
        OmegaSpec::new("fubini_study", [pot.clone(), pot], [den.clone(), den], 1)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn potential(&self, chart: Chart, z: Complex64) -> f64 {
        (self.potentials[chart.index()])(z)
    }

    pub fn density(&self, chart: Chart, z: Complex64) -> f64 {
        (self.densities[chart.index()])(z)
    }

    pub fn potential_fn(&self, chart: Chart) -> ChartFn {
        self.potentials[chart.index()].clone()
    }

    pub fn density_fn(&self, chart: Chart) -> ChartFn {
        self.densities[chart.index()].clone()
    }

    /// Samples the density at every grid node.
    pub fn sample_density(&self, grid: &SphereGrid, parallel: bool) -> GridField {
        GridField::from_fn(grid, parallel, |chart, z| self.density(chart, z))
    }

    /// Verifies the structural invariants at the given chart-0 sample points
    /// (their reciprocals are used for chart 1).
    pub fn check(&self, samples: &[Complex64]) -> OmegaCheck {
        let step = 1e-3;
        let mut lap = 0.0f64;
        let mut coc = 0.0f64;
        let mut min_den = f64::INFINITY;
        for &z in samples {
            for chart in Chart::BOTH {
                let p = match chart {
                    Chart::Zero => z,
                    Chart::One => {
                        if z.norm() == 0.0 {
                            continue;
                        }
                        1.0 / z
                    }
                };
                let f = |d: Complex64| self.potential(chart, p + d);
                let fd = (f(Complex64::new(step, 0.0))
                    + f(Complex64::new(-step, 0.0))
                    + f(Complex64::new(0.0, step))
                    + f(Complex64::new(0.0, -step))
                    - 4.0 * f(Complex64::new(0.0, 0.0)))
                    / (step * step);
                let rho = self.density(chart, p);
                min_den = min_den.min(rho);
                lap = lap.max((fd - rho).abs() / rho.abs().max(1e-12));
            }
            let r = z.norm();
            if r > 0.0 {
                let d = self.potential(Chart::Zero, z)
                    - self.potential(Chart::One, 1.0 / z)
                    - self.degree as f64 * r.ln();
                coc = coc.max(d.abs());
            }
        }
        OmegaCheck { laplacian_rel_err: lap, cocycle_err: coc, min_density: min_den }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn potential_examples() {
        assert_eq!(fs_potential(Chart::Zero, c(0.0, 0.0)), 0.0);
        assert!((fs_potential(Chart::Zero, c(1.0, 0.0)) - 0.346_573_590_279_972_6).abs() < 1e-15);
        assert!((fs_potential(Chart::One, c(0.5, 0.0)) - 0.5 * 1.25f64.ln()).abs() < 1e-15);
        // Stable for huge arguments.
        let big = fs_potential(Chart::Zero, c(1e200, 0.0));
        assert!((big - 200.0 * 10f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn density_examples() {
        assert_eq!(omega_density(Chart::Zero, c(0.0, 0.0)), 2.0);
        assert_eq!(omega_density(Chart::Zero, c(1.0, 0.0)), 0.5);
    }

    #[test]
    fn fs_spec_invariants() {
        let spec = OmegaSpec::fubini_study();
        let mut samples = Vec::new();
        for k in 0..40 {
            let t = k as f64 / 40.0 * std::f64::consts::TAU;
            let r = 0.9 + 0.2 * (k as f64 / 39.0);
            samples.push(Complex64::from_polar(r, t));
        }
        samples.push(c(0.1, -0.3));
        let chk = spec.check(&samples);
        assert!(chk.laplacian_rel_err <= 1e-4, "{chk:?}");
        assert!(chk.cocycle_err <= 1e-12, "{chk:?}");
        assert!(chk.min_density > 0.0);
    }

    #[test]
    fn radial_mass_is_two_pi() {
        // Midpoint rule on the radial integral of 2/(1+r^2)^2 * 2 pi r.
        let n = 200_000;
        let rmax = 2000.0;
        let dr = rmax / n as f64;
        let mass: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                omega_density(Chart::Zero, c(r, 0.0)) * std::f64::consts::TAU * r * dr
            })
            .sum();
        assert!((mass - std::f64::consts::TAU).abs() < 1e-3);
    }
}
