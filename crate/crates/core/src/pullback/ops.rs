use std::sync::Arc;

use num_complex::Complex64;

use super::map::{coord_preferring, RationalMap};
use crate::error::{Error, Result};
use crate::par;
use crate::sphere::{chart_transition, Chart, ChartFn, GridField, Interp, OmegaSpec, ProjPoint};
use crate::weights::{CompactSet, Locus, Weight};

fn require_finite(u: &GridField) -> Result<()> {
    for chart in Chart::BOTH {
        if let Some(k) = u.values(chart).iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "field is not finite at chart {} node {}",
                chart.index(),
                u.grid().node_at(k)
            )));
        }
    }
    Ok(())
}

/// `u o f`, interpolated in the node's own chart whenever the image lies in
/// that chart's box.
pub fn pullback_u(f: &RationalMap, u: &GridField, parallel: bool) -> Result<GridField> {
    require_finite(u)?;
    Ok(GridField::from_fn(u.grid(), parallel, |chart, z| {
        u.eval_preferring(&f.eval_chart(chart, z), chart, Interp::Linear)
    }))
}

/// `max` of `u` over the fiber `f^{-1}(x)`, bilinear interpolation.
pub fn pushforward_u(f: &RationalMap, u: &GridField, parallel: bool) -> Result<GridField> {
    pushforward_u_with(f, u, Interp::Linear, parallel)
}

pub fn pushforward_u_with(f: &RationalMap, u: &GridField, interp: Interp, parallel: bool) -> Result<GridField> {
    require_finite(u)?;
    let g = u.grid();
    let mut vals = Vec::with_capacity(2);
    for chart in Chart::BOTH {
        let col: Result<Vec<f64>> = par::map_range(g.len(), parallel, |k| {
            let x = ProjPoint::from_chart(chart, g.node_at(k));
            let pre = f.preimages(&x)?;
            Ok(pre
                .iter()
                .map(|p| u.eval_preferring(&p.point, chart, interp))
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .into_iter()
        .collect();
        vals.push(col?);
    }
    let v1 = vals.pop().expect("two charts");
    let v0 = vals.pop().expect("two charts");
    GridField::new(g, v0, v1)
}

/// `s * (Q o f)`.
pub fn pullback_weight(f: &RationalMap, q: &Weight, s: f64) -> Weight {
    let f2 = f.clone();
    let q2 = q.clone();
    let label = if s == 1.0 {
        format!("{}o{}", q.label(), f.label())
    } else {
        format!("{s}*{}o{}", q.label(), f.label())
    };
    Weight::from_fn(label, move |chart, z| s * q2.eval(&f2.eval_chart(chart, z)))
}

/// `f^* omega`: potential `phi o f` (made global through the homogeneous
/// forms) and density `rho(f) |f'|^2`, of degree `d deg(omega)`.
pub fn pullback_omega(f: &RationalMap, omega: &OmegaSpec) -> OmegaSpec {
    let k = omega.degree() as f64;
    let potentials = Chart::BOTH.map(|chart| {
        let (f, om) = (f.clone(), omega.clone());
        Arc::new(move |z: Complex64| {
            let (a, b) = f.forms(chart, z);
            let (tc, y) = chart_transition(&f.eval_chart(chart, z));
            let den = if tc == Chart::Zero { a } else { b };
            om.potential(tc, y) + k * den.norm().ln()
        }) as ChartFn
    });
    let densities = Chart::BOTH.map(|chart| {
        let (f, om) = (f.clone(), omega.clone());
        Arc::new(move |z: Complex64| {
            let (tc, y) = chart_transition(&f.eval_chart(chart, z));
            let d = f.derivative(chart, z, tc).expect("image lies in its transition chart");
            om.density(tc, y) * d.norm_sqr()
        }) as ChartFn
    });
    OmegaSpec::new(
        format!("{}^*{}", f.label(), omega.label()),
        potentials,
        densities,
        omega.degree() * f.degree() as u32,
    )
}

/// `f^{-1}(K)`. Thin sets use the first-order distance `d_K(f(x)) / |f'(x)|`.
/// Images are read in the node's chart when possible, so the identity map
/// reproduces the mask of `K`.
pub fn preimage_set(f: &RationalMap, k: &CompactSet) -> CompactSet {
    let label = format!("{}^-1({})", f.label(), k.label());
    let f2 = f.clone();
    let set = match k.locus().clone() {
        Locus::Region(r) => CompactSet::region(label, move |chart, z| {
            let (tc, y) = f2.image_coord_preferring(chart, z);
            r(tc, y)
        }),
        Locus::Thin(dist) => CompactSet::thin(label, move |chart, z| {
            let (tc, y) = f2.image_coord_preferring(chart, z);
            let dk = dist(tc, y);
            if dk == 0.0 {
                return 0.0;
            }
            let s = f2.derivative(chart, z, tc).map_or(0.0, |d| d.norm());
            if s == 0.0 {
                f64::INFINITY
            } else {
                dk / s
            }
        }),
    };
    if !k.has_sampler() {
        return set;
    }
    let (f3, k3) = (f.clone(), k.clone());
    set.with_sampler(Arc::new(move |m| {
        let base = k3.sample(m.div_ceil(f3.degree())).unwrap_or_default();
        let mut out = Vec::with_capacity(m);
        for z in base {
            if let Ok(pre) = f3.preimages(&ProjPoint::affine(z)) {
                for p in pre {
                    if let Some(x) = p.point.coord(Chart::Zero) {
                        out.extend(std::iter::repeat_n(x, p.multiplicity));
                    }
                }
            }
        }
        out.truncate(m);
        out
    }))
}

/// `f(K)`. Thin sets use `min |f'(x)| d_K(x)` over the preimages `x`.
pub fn image_set(f: &RationalMap, k: &CompactSet) -> CompactSet {
    let label = format!("{}({})", f.label(), k.label());
    let f2 = f.clone();
    let set = match k.locus().clone() {
        Locus::Region(r) => CompactSet::region(label, move |chart, z| {
            let Ok(pre) = f2.preimages(&ProjPoint::from_chart(chart, z)) else {
                return false;
            };
            pre.iter().any(|p| {
                let (c, x) = coord_preferring(&p.point, chart);
                r(c, x)
            })
        }),
        Locus::Thin(dist) => CompactSet::thin(label, move |chart, z| {
            let Ok(pre) = f2.preimages(&ProjPoint::from_chart(chart, z)) else {
                return f64::INFINITY;
            };
            pre.iter()
                .map(|p| {
                    let (c, x) = coord_preferring(&p.point, chart);
                    let dk = dist(c, x);
                    if dk == 0.0 {
                        return 0.0;
                    }
                    f2.derivative(c, x, chart).map_or(f64::INFINITY, |d| dk * d.norm())
                })
                .fold(f64::INFINITY, f64::min)
        }),
    };
    if !k.has_sampler() {
        return set;
    }
    let (f3, k3) = (f.clone(), k.clone());
    set.with_sampler(Arc::new(move |m| {
        k3.sample(m)
            .unwrap_or_default()
            .into_iter()
            .filter_map(|z| f3.eval_map(&ProjPoint::affine(z)).coord(Chart::Zero))
            .collect()
    }))
}
