//! Holomorphic self-maps of the sphere acting on envelopes.
//!
//! For `f` of degree `d`, pullback is `f^*u = u o f` and pushforward is
//! `f_*u(x) = max u` over `f^{-1}(x)`. The sandwich
//! `alpha V_{f^{-1}K, f^*Q/alpha} <= V_{K,Q} o f <= beta V_{f^{-1}K, f^*Q/beta}`
//! holds when `f^* PSH(omega) ⊂ beta PSH(omega)` and
//! `alpha f_* PSH(omega) ⊂ PSH(omega)`. Neither class condition is finitely
//! checkable: [`estimate_beta`] returns the sup of the density ratio of
//! `f^* omega` to `omega` (sufficient for the first), and [`AlphaBattery`]
//! tests candidate `alpha` on a list of discretely ω-subharmonic fields.

mod map;
mod ops;
mod roots;

pub use map::{
    coord_preferring, MapSpec, Preimage, RationalMap, CLUSTER_RADIUS, PREFERRED_COORD_MAX, PREIMAGE_RESIDUAL, RESULTANT_TOL,
};
pub use ops::{
    image_set, preimage_set, pullback_omega, pullback_u, pullback_weight, pushforward_u, pushforward_u_with,
};
pub use roots::{polynomial_roots, MAX_ITERATIONS, ROOT_SEED};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relax::{solve_envelope, solve_masked, EnvelopeResult, SolveOptions};
use crate::sphere::{omega_density, Chart, GridField, Interp, OmegaSpec, ProjPoint, SphereGrid};
use crate::weights::{CompactSet, Weight};

/// Largest ratio of `f^* omega` to `omega` over the grid nodes of both
/// charts. This is a sufficient `beta`, not the least one.
pub fn estimate_beta(f: &RationalMap, omega: &OmegaSpec, grid: &SphereGrid, parallel: bool) -> f64 {
    let rel = |chart: Chart, z| omega.density(chart, z) / omega_density(chart, z);
    let field = GridField::from_fn(grid, parallel, |chart, z| {
        let (tc, y) = f.image_coord(chart, z);
        f.fs_stretch(chart, z) * rel(tc, y) / rel(chart, z)
    });
    field.max_value()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Estimated,
    User,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichParams {
    pub alpha: f64,
    pub beta: f64,
    pub provenance: Provenance,
}

impl SandwichParams {
    pub fn new(alpha: f64, beta: f64, provenance: Provenance) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= beta && beta.is_finite()) {
            return Err(Error::Config(format!("need 1 < alpha <= beta (got alpha {alpha}, beta {beta})")));
        }
        Ok(SandwichParams { alpha, beta, provenance })
    }

    /// `alpha = beta = 1`, admitted only for the identity map.
    pub fn degenerate() -> Self {
        SandwichParams { alpha: 1.0, beta: 1.0, provenance: Provenance::Estimated }
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha == 1.0 && self.beta == 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaOptions {
    pub tol: f64,
    /// Radius, in cells, of the excluded neighborhood of each critical value.
    pub collar_cells: f64,
    pub interp: Interp,
    pub parallel: bool,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions { tol: 1e-3, collar_cells: 3.0, interp: Interp::Cubic, parallel: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub function: usize,
    pub chart: Chart,
    pub node: [f64; 2],
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaCheck {
    pub alpha: f64,
    /// Smallest `lap_h(alpha f_* u) + rho` over the checked nodes.
    pub worst_residual: f64,
    pub violation: bool,
    pub witness: Option<Witness>,
    pub excluded_nodes: usize,
}

/// Test fields pushed forward once, so candidate `alpha` values are cheap.
#[derive(Clone, Debug)]
pub struct AlphaBattery {
    laplacians: Vec<GridField>,
    density: GridField,
    keep: [Vec<bool>; 2],
    excluded: usize,
    tol: f64,
    critical_values: Vec<ProjPoint>,
}

impl AlphaBattery {
    /// Pushes each field forward by `f`. Every field must pass the discrete
    /// ω-subharmonicity certificate on the checked nodes.
    pub fn new(f: &RationalMap, tests: &[GridField], omega: &OmegaSpec, opts: &AlphaOptions) -> Result<Self> {
        let Some(first) = tests.first() else {
            return Err(Error::Config("the alpha battery needs at least one test field".into()));
        };
        let grid = first.grid().clone();
        if tests.iter().any(|u| u.grid() != &grid) {
            return Err(Error::Config("test fields must share one grid".into()));
        }
        let cvs = f.critical_values()?;
        let radius = opts.collar_cells * grid.h();
        let mut excluded = 0usize;
        let keep = Chart::BOTH.map(|chart| {
            (0..grid.len())
                .map(|k| {
                    let (ix, iy) = grid.unindex(k);
                    let z = grid.node_at(k);
                    let near = cvs.iter().any(|p| p.coord(chart).is_some_and(|c| (c - z).norm() <= radius));
                    if near {
                        excluded += 1;
                    }
                    !near && !grid.is_ring(ix, iy)
                })
                .collect::<Vec<bool>>()
        });
        let density = omega.sample_density(&grid, opts.parallel);
        let mut battery = AlphaBattery {
            laplacians: Vec::new(),
            density,
            keep,
            excluded,
            tol: opts.tol,
            critical_values: cvs,
        };
        for (i, u) in tests.iter().enumerate() {
            let (res, _) = battery.residual(&u.laplacian_field(opts.parallel), 1.0);
            if res < -opts.tol {
                return Err(Error::Precondition(format!(
                    "test field {i} is not discretely omega-subharmonic off the collar: residual {res:e}"
                )));
            }
            let push = pushforward_u_with(f, u, opts.interp, opts.parallel)?;
            battery.laplacians.push(push.laplacian_field(opts.parallel));
        }
        Ok(battery)
    }

    fn residual(&self, lap: &GridField, alpha: f64) -> (f64, Option<(Chart, usize)>) {
        let mut worst = (f64::INFINITY, None);
        for chart in Chart::BOTH {
            let rho = self.density.values(chart);
            for (k, (&l, &keep)) in lap.values(chart).iter().zip(&self.keep[chart.index()]).enumerate() {
                if !keep {
                    continue;
                }
                let r = alpha * l + rho[k];
                if r < worst.0 {
                    worst = (r, Some((chart, k)));
                }
            }
        }
        worst
    }

    pub fn excluded_nodes(&self) -> usize {
        self.excluded
    }

    pub fn critical_values(&self) -> &[ProjPoint] {
        &self.critical_values
    }

    pub fn check(&self, alpha: f64) -> AlphaCheck {
        let mut worst = (f64::INFINITY, None);
        for (i, lap) in self.laplacians.iter().enumerate() {
            let (r, at) = self.residual(lap, alpha);
            if r < worst.0 {
                worst = (r, at.map(|a| (i, a)));
            }
        }
        let g = self.density.grid();
        let witness = worst.1.map(|(i, (chart, k))| {
            let z = g.node_at(k);
            Witness { function: i, chart, node: [z.re, z.im], residual: worst.0 }
        });
        let violation = worst.0 < -self.tol;
        AlphaCheck {
            alpha,
            worst_residual: worst.0,
            violation,
            witness: if violation { witness } else { None },
            excluded_nodes: self.excluded,
        }
    }

    /// The largest `alpha` that passes: `min (rho + tol) / (-lap f_* u)` over
    /// nodes where the pushed-forward Laplacian is negative, rounded down by
    /// a few ulps so that `check(largest_alpha())` passes.
    pub fn largest_alpha(&self) -> f64 {
        let mut best = f64::INFINITY;
        for lap in &self.laplacians {
            for chart in Chart::BOTH {
                let rho = self.density.values(chart);
                for (k, (&l, &keep)) in lap.values(chart).iter().zip(&self.keep[chart.index()]).enumerate() {
                    if keep && l < 0.0 {
                        best = best.min((rho[k] + self.tol) / -l);
                    }
                }
            }
        }
        best * (1.0 - 8.0 * f64::EPSILON)
    }
}

/// `alpha f_* u` tested on every field of `tests`.
pub fn check_alpha(
    f: &RationalMap,
    alpha: f64,
    tests: &[GridField],
    omega: &OmegaSpec,
    opts: &AlphaOptions,
) -> Result<AlphaCheck> {
    Ok(AlphaBattery::new(f, tests, omega, opts)?.check(alpha))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub alpha: f64,
    pub beta: f64,
    pub provenance: Provenance,
    /// `max (alpha V_{f^-1 K, f^*Q/alpha} - V o f)`.
    pub lower_defect: f64,
    /// `max (V o f - beta V_{f^-1 K, f^*Q/beta})`.
    pub upper_defect: f64,
    pub preimage_nodes: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SandwichRun {
    pub report: SandwichReport,
    pub base: EnvelopeResult,
    /// `V_{K,Q} o f`.
    pub composed: GridField,
    pub lower: EnvelopeResult,
    pub upper: EnvelopeResult,
}

fn max_diff(a: &GridField, b: &GridField) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for chart in Chart::BOTH {
        for (x, y) in a.values(chart).iter().zip(b.values(chart)) {
            m = m.max(x - y);
        }
    }
    m
}

/// Computes both sides of the sandwich for `K`, `Q`.
pub fn verify_sandwich(
    f: &RationalMap,
    k: &CompactSet,
    q: &Weight,
    omega: &OmegaSpec,
    params: &SandwichParams,
    grid: &SphereGrid,
    opts: &SolveOptions,
) -> Result<SandwichRun> {
    if params.is_degenerate() {
        if !f.is_identity() {
            return Err(Error::Config("alpha = beta = 1 is admitted only for the identity map".into()));
        }
    } else {
        SandwichParams::new(params.alpha, params.beta, params.provenance)?;
    }
    let base = solve_envelope(k, q, omega, grid, opts)?;
    let composed = pullback_u(f, &base.v, opts.parallel)?;
    let mask = preimage_set(f, k).mask(grid);
    if mask.is_empty_interior() {
        return Err(Error::EmptySet(format!("f^-1({}) has no interior grid nodes", k.label())));
    }
    let upper = solve_masked(&mask, &pullback_weight(f, q, 1.0 / params.beta), omega, grid, opts)?;
    let lower = if params.alpha == params.beta {
        upper.clone()
    } else {
        solve_masked(&mask, &pullback_weight(f, q, 1.0 / params.alpha), omega, grid, opts)?
    };
    let report = SandwichReport {
        alpha: params.alpha,
        beta: params.beta,
        provenance: params.provenance,
        lower_defect: max_diff(&lower.v.map(|v| params.alpha * v), &composed),
        upper_defect: max_diff(&composed, &upper.v.map(|v| params.beta * v)),
        preimage_nodes: mask.count(),
        converged: base.converged && lower.converged && upper.converged,
    };
    Ok(SandwichRun { report, base, composed, lower, upper })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageReport {
    /// `max (V_{f(K),omega,Q} o f - V_{K, f^*omega, Q o f})`.
    pub defect: f64,
    /// Nodes where the density of `f^* omega` is not finite.
    pub excluded_nodes: usize,
    pub image_nodes: usize,
    /// `h` times the largest difference quotient of `V_{f(K),omega,Q}`
    /// between adjacent nodes: a bound for its interpolation error and for
    /// the effect of moving a thin `K` by a fraction of a cell.
    pub interpolation_allowance: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct ImageRun {
    pub report: ImageReport,
    pub image: EnvelopeResult,
    /// `V_{f(K),omega,Q} o f`.
    pub composed: GridField,
    pub pulled: EnvelopeResult,
}

/// Largest `|v(a) - v(b)|` over horizontally or vertically adjacent nodes.
pub fn max_adjacent_jump(v: &GridField) -> f64 {
    let g = v.grid();
    let n = g.n();
    let mut m = 0.0f64;
    for chart in Chart::BOTH {
        let x = v.values(chart);
        for iy in 0..n {
            for ix in 0..n {
                let k = g.index(ix, iy);
                if ix + 1 < n {
                    m = m.max((x[k + 1] - x[k]).abs());
                }
                if iy + 1 < n {
                    m = m.max((x[k + n] - x[k]).abs());
                }
            }
        }
    }
    m
}

pub fn verify_image_inequality(
    f: &RationalMap,
    k: &CompactSet,
    q: &Weight,
    omega: &OmegaSpec,
    grid: &SphereGrid,
    opts: &SolveOptions,
) -> Result<ImageRun> {
    let mask = image_set(f, k).mask(grid);
    if mask.is_empty_interior() {
        return Err(Error::EmptySet(format!("f({}) has no interior grid nodes", k.label())));
    }
    let image = solve_masked(&mask, q, omega, grid, opts)?;
    let composed = pullback_u(f, &image.v, opts.parallel)?;
    let om = pullback_omega(f, omega);
    let dens = om.sample_density(grid, opts.parallel);
    let excluded: usize = Chart::BOTH.iter().map(|&c| dens.values(c).iter().filter(|v| !v.is_finite()).count()).sum();
    if excluded > 0 {
        return Err(Error::Precondition(format!("pulled-back density is not finite at {excluded} nodes")));
    }
    let pulled = solve_envelope(k, &pullback_weight(f, q, 1.0), &om, grid, opts)?;
    let report = ImageReport {
        defect: max_diff(&composed, &pulled.v),
        excluded_nodes: excluded,
        image_nodes: mask.count(),
        interpolation_allowance: max_adjacent_jump(&image.v),
        converged: image.converged && pulled.converged,
    };
    Ok(ImageRun { report, image, composed, pulled })
}
