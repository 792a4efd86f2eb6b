use serde::Serialize;

use super::EnvelopeResult;
use crate::error::{Error, Result};
use crate::sphere::{Chart, GridField, OmegaSpec};
use crate::weights::NodeMask;

/// Collar width, in cells, separating "near K" from "off K".
pub const NEAR_K_CELLS: f64 = 3.0;

/// `lap_h v + rho` at interior nodes (NaN on the ring).
pub(crate) fn ma_density(v: &GridField, density: &GridField, parallel: bool) -> GridField {
    v.laplacian_field(parallel).zip_map(density, |l, r| l + r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaResidual {
    /// `max |lap_h V + rho|` over interior nodes farther than three cells from `K`.
    pub off_k_max_residual: f64,
    /// Partition-of-unity weighted `sum (lap_h V + rho) h^2`.
    pub total_mass: f64,
    /// Share of the mass within three cells of `K`.
    pub mass_on_k_fraction: f64,
    /// Interior nodes counted as off `K`.
    pub off_k_nodes: usize,
}

/// Monge-Ampere mass bookkeeping for a solved envelope.
pub fn ma_residual(result: &EnvelopeResult, mask: &NodeMask) -> MaResidual {
    let g = result.grid();
    let ma = ma_density(&result.v, &result.density, true);
    let near = mask.dilate(NEAR_K_CELLS);
    let h2 = g.h() * g.h();
    let mut off_max = 0.0f64;
    let mut off_nodes = 0usize;
    let mut near_mass = 0.0;
    for chart in Chart::BOTH {
        for (k, &x) in ma.values(chart).iter().enumerate() {
            let (ix, iy) = g.unindex(k);
            if g.is_ring(ix, iy) {
                continue;
            }
            if near.get(chart, k) {
                near_mass += g.pou_weight(g.node_at(k)) * x * h2;
            } else {
                off_nodes += 1;
                off_max = off_max.max(x.abs());
            }
        }
    }
    let total = ma.integrate();
    MaResidual {
        off_k_max_residual: off_max,
        total_mass: total,
        mass_on_k_fraction: if total != 0.0 { near_mass / total } else { f64::NAN },
        off_k_nodes: off_nodes,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Domination {
    /// Mass of `omega + dd^c u` on `{u < v - tol}`.
    pub hypothesis_mass: f64,
    pub min_gap: f64,
    /// False only when the hypothesis holds numerically but `u >= v` fails.
    pub consistent: bool,
}

/// Numerical falsification test of the domination principle: if the
/// Monge-Ampere mass of `u` vanishes on `{u < v}` then `u >= v`.
pub fn domination_check(u: &GridField, v: &GridField, omega: &OmegaSpec, tol: f64) -> Result<Domination> {
    let g = u.grid();
    if g != v.grid() {
        return Err(Error::Config("fields live on different grids".into()));
    }
    let density = omega.sample_density(g, true);
    let cert_tol = 4.0 * tol / (g.h() * g.h());
    let mu = ma_density(u, &density, true);
    let mv = ma_density(v, &density, true);
    for (name, m) in [("u", &mu), ("v", &mv)] {
        for chart in Chart::BOTH {
            for (k, &x) in m.values(chart).iter().enumerate() {
                let (ix, iy) = g.unindex(k);
                if !g.is_ring(ix, iy) && !(x >= -cert_tol) {
                    return Err(Error::Precondition(format!(
                        "{name} is not discretely omega-psh: lap_h + rho = {x:e} at chart {} node {}",
                        chart.index(),
                        g.node_at(k)
                    )));
                }
            }
        }
    }
    let h2 = g.h() * g.h();
    let mut hyp = 0.0;
    let mut gap = f64::INFINITY;
    for chart in Chart::BOTH {
        let (uu, vv) = (u.values(chart), v.values(chart));
        for k in 0..g.len() {
            gap = gap.min(uu[k] - vv[k]);
            let (ix, iy) = g.unindex(k);
            if !g.is_ring(ix, iy) && uu[k] < vv[k] - tol {
                hyp += g.pou_weight(g.node_at(k)) * mu.values(chart)[k] * h2;
            }
        }
    }
    Ok(Domination {
        hypothesis_mass: hyp,
        min_gap: gap,
        consistent: !(hyp <= tol && gap < -10.0 * tol),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{solve_envelope, SolveOptions};
    use super::*;
    use crate::sphere::SphereGrid;
    use crate::weights::{CompactSet, Weight};

    #[test]
    fn whole_sphere_mass_is_omega_mass() {
        let g = SphereGrid::new(1.25, 101).unwrap();
        let k = CompactSet::whole();
        let r = solve_envelope(&k, &Weight::zero(), &OmegaSpec::fubini_study(), &g, &SolveOptions::default())
            .unwrap();
        let m = ma_residual(&r, &k.mask(&g));
        assert_eq!(m.off_k_nodes, 0);
        assert!((m.total_mass / std::f64::consts::TAU - 1.0).abs() < 0.02, "{m:?}");
    }

    #[test]
    fn domination_examples() {
        let g = SphereGrid::new(1.25, 61).unwrap();
        let om = OmegaSpec::fubini_study();
        let r = solve_envelope(&CompactSet::unit_circle(), &Weight::zero(), &om, &g, &SolveOptions::default())
            .unwrap();
        let u = &r.v;
        let d = domination_check(u, u, &om, 1e-9).unwrap();
        assert!(d.consistent && d.hypothesis_mass == 0.0);
        let d = domination_check(u, &u.map(|x| x - 0.1), &om, 1e-9).unwrap();
        assert!(d.consistent);
        assert!((d.min_gap - 0.1).abs() < 1e-12);
        let d = domination_check(u, &GridField::constant(&g, 0.0), &om, 1e-9).unwrap();
        assert!(d.consistent && d.min_gap >= -1e-9, "{d:?}");
    }

    #[test]
    fn domination_rejects_non_psh_input() {
        let g = SphereGrid::new(1.25, 41).unwrap();
        let om = OmegaSpec::fubini_study();
        let spike = GridField::from_fn(&g, false, |_, z| if z.norm() < 1e-9 { 5.0 } else { 0.0 });
        let r = domination_check(&spike, &GridField::constant(&g, 0.0), &om, 1e-9);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
