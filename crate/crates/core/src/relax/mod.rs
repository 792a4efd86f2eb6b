//! The envelope `V_{K,omega,Q}` as a discrete obstacle problem.
//!
//! A grid function is discretely ω-subharmonic when its five-point Laplacian
//! satisfies `lap_h v + rho >= 0`, i.e. `v <= avg4(v) + h^2 rho / 4`. The
//! envelope is the largest such function with `v <= Q` on the mask of `K`;
//! it is the fixed point of `v <- min(Q on K, avg4(v) + h^2 rho / 4)`.
//!
//! The solver iterates upward from the constant `min_K Q`, which is a
//! subsolution, so every Gauss-Seidel iterate satisfies both envelope
//! constraints and the sequence is nodewise non-decreasing. An optional
//! projected-SOR warm start reaches the fixed point quickly; its output is
//! blended with the constant start just enough to be a subsolution again
//! before the monotone phase takes over.

mod diagnostics;
mod drivers;
mod lattice;

pub use diagnostics::{domination_check, ma_residual, Domination, MaResidual};
pub use drivers::{
    gauge_invariance_check, monotone_weight_sweep, GaugeReport, SweepDirection, SweepEntry,
};

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{Chart, GridField, OmegaSpec, SphereGrid};
use crate::weights::{cap, CompactSet, NodeMask, Weight, VALUE_CAP};
use lattice::Lattice;

/// Solver settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Stop when a sweep (with seam transfer) moves no node by more than this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Sweeps between seam transfers.
    pub seam_interval: usize,
    pub warm_start: bool,
    /// Over-relaxation factor for the warm start; `None` picks one from `n`.
    pub sor_factor: Option<f64>,
    pub parallel: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_sweeps: 1_000_000,
            seam_interval: 16,
            warm_start: true,
            sor_factor: None,
            parallel: true,
        }
    }
}

const WARM_TOL: f64 = 1e-13;
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetadata {
    pub half_width: f64,
    pub n_cells: usize,
    pub h: f64,
    pub set: String,
    pub weight: String,
    pub omega: String,
    pub value_cap: f64,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct EnvelopeResult {
    pub v: GridField,
    /// Total sweeps, warm start included.
    pub iterations: usize,
    pub warm_sweeps: usize,
    pub final_update: f64,
    pub converged: bool,
    pub seam_discrepancy: f64,
    pub ma_mass_total: f64,
    /// The constant subsolution the monotone phase starts from.
    pub start_value: f64,
    /// Blend weight applied to the warm start.
    pub blend_theta: f64,
    /// Largest decrease of any node during the monotone phase.
    pub max_monotone_violation: f64,
    /// Largest `V - Q` over interior `K` nodes.
    pub obstacle_violation: f64,
    /// Smallest `lap_h V + rho` over interior nodes.
    pub min_certificate: f64,
    /// `K` nodes whose weight hit the value cap.
    pub saturated_nodes: usize,
    pub wall_time: f64,
    pub mask: NodeMask,
    pub density: GridField,
    pub metadata: RunMetadata,
}

impl EnvelopeResult {
    pub fn grid(&self) -> &SphereGrid {
        self.v.grid()
    }
}

fn default_sor(n: usize) -> f64 {
    2.0 / (1.0 + 3.0 / n as f64)
}

/// Computes the discrete envelope `V_{K,omega,Q}`.
pub fn solve_envelope(
    k: &CompactSet,
    q: &Weight,
    omega: &OmegaSpec,
    grid: &SphereGrid,
    opts: &SolveOptions,
) -> Result<EnvelopeResult> {
    let mask = k.mask(grid);
    let mut res = solve_masked(&mask, q, omega, grid, opts)?;
    res.metadata.set = k.label().to_string();
    Ok(res)
}

/// [`solve_envelope`] for an already rasterized set.
pub fn solve_masked(
    mask: &NodeMask,
    q: &Weight,
    omega: &OmegaSpec,
    grid: &SphereGrid,
    opts: &SolveOptions,
) -> Result<EnvelopeResult> {
    let t0 = Instant::now();
    if mask.is_empty_interior() {
        return Err(Error::EmptySet("K has no interior grid nodes".into()));
    }
    let mut saturated = 0usize;
    let mut start = f64::INFINITY;
    let mut obs = [vec![f64::INFINITY; grid.len()], vec![f64::INFINITY; grid.len()]];
    for chart in Chart::BOTH {
        for (kk, slot) in obs[chart.index()].iter_mut().enumerate() {
            if !mask.get(chart, kk) {
                continue;
            }
            let raw = q.eval_chart(chart, grid.node_at(kk));
            if raw.is_nan() {
                return Err(Error::InvalidWeight(format!(
                    "weight {} is NaN at chart {} node {}",
                    q.label(),
                    chart.index(),
                    grid.node_at(kk)
                )));
            }
            if raw.abs() >= VALUE_CAP {
                saturated += 1;
            }
            let v = cap(raw);
            *slot = v;
            let (ix, iy) = grid.unindex(kk);
            if !grid.is_ring(ix, iy) {
                start = start.min(v);
            }
        }
    }
    if start >= VALUE_CAP {
        return Err(Error::Unbounded(format!(
            "weight {} is +inf (capped at {VALUE_CAP}) on every node of K",
            q.label()
        )));
    }
    let [o0, o1] = obs;
    let obstacle = GridField::new(grid, o0, o1)?;
    let density = omega.sample_density(grid, opts.parallel);
    let mut lat = Lattice::new(grid, start, &obstacle, &density);

    let interval = opts.seam_interval.max(1);
    let mut sweeps = 0usize;
    let mut warm_sweeps = 0usize;
    let mut theta = 0.0;
    if opts.warm_start {
        let relax = opts.sor_factor.unwrap_or_else(|| default_sor(grid.n()));
        while sweeps < opts.max_sweeps {
            let mut st = lat.sweep(relax, opts.parallel);
            sweeps += 1;
            if sweeps % interval == 0 {
                st.max_update = st.max_update.max(lat.transfer().max_update);
                if st.max_update < WARM_TOL {
                    break;
                }
            }
        }
        lat.transfer();
        warm_sweeps = sweeps;
        theta = lat.subsolution_theta();
        if theta > 0.0 {
            lat.blend(theta, start);
        }
    }

    let mut final_update = f64::INFINITY;
    let mut converged = false;
    let mut worst_decrease = 0.0f64;
    let mut gs = 0usize;
    while sweeps < opts.max_sweeps {
        let mut st = lat.sweep(1.0, opts.parallel);
        sweeps += 1;
        gs += 1;
        if gs % interval == 0 {
            let tr = lat.transfer();
            st.max_update = st.max_update.max(tr.max_update);
            st.max_decrease = st.max_decrease.max(tr.max_decrease);
        }
        worst_decrease = worst_decrease.max(st.max_decrease);
        if worst_decrease > MONOTONE_SLACK {
            return Err(Error::Precondition(format!(
                "monotone phase decreased a node by {worst_decrease:e} at sweep {sweeps}"
            )));
        }
        if gs % interval == 0 {
            final_update = st.max_update;
            if final_update < opts.tol {
                converged = true;
                break;
            }
        }
    }

    let v = lat.to_field();
    let h2 = grid.h() * grid.h();
    let min_certificate = lat.min_residual() * 4.0 / h2;
    let mut obstacle_violation = f64::NEG_INFINITY;
    for chart in Chart::BOTH {
        for (kk, &o) in obstacle.values(chart).iter().enumerate() {
            let (ix, iy) = grid.unindex(kk);
            if o < f64::INFINITY && !grid.is_ring(ix, iy) {
                obstacle_violation = obstacle_violation.max(v.values(chart)[kk] - o);
            }
        }
    }
    let seam_discrepancy = v.seam_discrepancy();
    let ma_mass_total = diagnostics::ma_density(&v, &density, opts.parallel).integrate();
    Ok(EnvelopeResult {
        iterations: sweeps,
        warm_sweeps,
        final_update,
        converged,
        seam_discrepancy,
        ma_mass_total,
        start_value: start,
        blend_theta: theta,
        max_monotone_violation: worst_decrease,
        obstacle_violation,
        min_certificate,
        saturated_nodes: saturated,
        wall_time: t0.elapsed().as_secs_f64(),
        mask: mask.clone(),
        density,
        metadata: RunMetadata {
            half_width: grid.half_width(),
            n_cells: grid.n_cells(),
            h: grid.h(),
            set: String::new(),
            weight: q.label().to_string(),
            omega: omega.label().to_string(),
            value_cap: VALUE_CAP,
            tol: opts.tol,
        },
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::fs_potential;
    use num_complex::Complex64;

    pub(crate) fn circle_oracle(chart: Chart, z: Complex64) -> f64 {
        // V = log+|z| + (1/2) log 2 - phi_0(z); symmetric under z -> 1/z.
        let _ = chart;
        let r = z.norm();
        r.ln().max(0.0) + 0.5 * 2f64.ln() - fs_potential(Chart::Zero, z)
    }

    fn opts(parallel: bool) -> SolveOptions {
        SolveOptions { parallel, ..SolveOptions::default() }
    }

    #[test]
    fn whole_sphere_zero_weight_gives_zero() {
        let g = SphereGrid::new(1.25, 41).unwrap();
        let r = solve_envelope(&CompactSet::whole(), &Weight::zero(), &OmegaSpec::fubini_study(), &g, &opts(true))
            .unwrap();
        assert!(r.converged);
        assert!(r.v.max_abs_diff(&GridField::constant(&g, 0.0)) <= 1e-9);
    }

    #[test]
    fn circle_matches_oracle_on_coarse_grid() {
        let g = SphereGrid::new(1.25, 81).unwrap();
        let k = CompactSet::unit_circle();
        let r = solve_envelope(&k, &Weight::zero(), &OmegaSpec::fubini_study(), &g, &opts(true)).unwrap();
        assert!(r.converged);
        assert!(r.max_monotone_violation <= MONOTONE_SLACK);
        assert!(r.obstacle_violation <= 1e-12);
        assert!(r.min_certificate >= -1e-6, "{}", r.min_certificate);
        let exact = GridField::from_fn(&g, false, circle_oracle);
        assert!(r.v.max_abs_diff(&exact) < 0.02, "{}", r.v.max_abs_diff(&exact));
    }

    #[test]
    fn warm_start_and_plain_iteration_agree() {
        let g = SphereGrid::new(1.25, 33).unwrap();
        let k = CompactSet::unit_circle();
        let om = OmegaSpec::fubini_study();
        let q = Weight::radial_power(2.0).unwrap();
        let a = solve_envelope(&k, &q, &om, &g, &opts(false)).unwrap();
        let b = solve_envelope(&k, &q, &om, &g, &SolveOptions { warm_start: false, tol: 1e-11, ..opts(false) })
            .unwrap();
        assert!(a.converged && b.converged);
        assert_eq!(b.warm_sweeps, 0);
        assert!(a.v.max_abs_diff(&b.v) < 1e-7, "{}", a.v.max_abs_diff(&b.v));
    }

    #[test]
    fn parallel_and_sequential_results_are_identical() {
        let g = SphereGrid::new(1.25, 45).unwrap();
        let k = CompactSet::unit_circle();
        let om = OmegaSpec::fubini_study();
        let a = solve_envelope(&k, &Weight::zero(), &om, &g, &opts(false)).unwrap();
        let b = solve_envelope(&k, &Weight::zero(), &om, &g, &opts(true)).unwrap();
        assert_eq!(a.v, b.v);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn errors() {
        let g = SphereGrid::new(1.25, 21).unwrap();
        let om = OmegaSpec::fubini_study();
        let empty = CompactSet::region("empty", |_, _| false);
        assert!(matches!(
            solve_envelope(&empty, &Weight::zero(), &om, &g, &opts(false)),
            Err(Error::EmptySet(_))
        ));
        let inf = Weight::constant(f64::INFINITY);
        assert!(matches!(
            solve_envelope(&CompactSet::unit_circle(), &inf, &om, &g, &opts(false)),
            Err(Error::Unbounded(_))
        ));
    }
}
