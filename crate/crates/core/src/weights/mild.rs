use serde::Serialize;

use super::{Weight, VALUE_CAP};
use crate::error::Result;
use crate::sphere::{Chart, OmegaSpec, SphereGrid};

/// Thresholds for [`mild_check`].
#[derive(Clone, Copy, Debug)]
pub struct MildOptions {
    /// Upper bound on the normalized continuity score.
    pub bound: f64,
    /// Lower bound on the fraction of nodes where `Q < +inf`.
    pub floor: f64,
}

impl Default for MildOptions {
    fn default() -> Self {
        MildOptions { bound: 10.0, floor: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MildReport {
    /// `max |e(a) - e(b)| / h^(1/2)` over adjacent nodes, divided by `max e`,
    /// where `e = exp(-Q + phi)`.
    pub continuity_score: f64,
    /// The same statistic before normalization.
    pub raw_continuity: f64,
    pub finite_area_fraction: f64,
    /// Nodes where `|Q|` reaches the value cap or `Q = -inf`; they are left
    /// out of the continuity statistic.
    pub saturated_nodes: usize,
    pub verdict: bool,
}

/// Heuristic sample test of Def.-1 mildness: continuity of `exp(-Q + phi_j)`
/// per chart and a positive-area proxy for non-pluripolarity of `{Q < inf}`.
pub fn mild_check(q: &Weight, omega: &OmegaSpec, grid: &SphereGrid, opts: MildOptions) -> Result<MildReport> {
    let qf = q.sample(grid, true)?;
    let n = grid.n();
    let mut finite = 0usize;
    let mut saturated = 0usize;
    let mut raw = 0.0f64;
    let mut emax = 0.0f64;
    for chart in Chart::BOTH {
        let vals = qf.values(chart);
        let e: Vec<Option<f64>> = vals
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if v == f64::NEG_INFINITY || (v.is_finite() && v.abs() >= VALUE_CAP) {
                    return None;
                }
                if v == f64::INFINITY {
                    return Some(0.0);
                }
                Some((-v + omega.potential(chart, grid.node_at(k))).exp())
            })
            .collect();
        finite += vals.iter().filter(|&&v| v < f64::INFINITY).count();
        saturated += e.iter().filter(|x| x.is_none()).count();
        for (k, ek) in e.iter().enumerate() {
            let Some(a) = *ek else { continue };
            if !a.is_finite() {
                continue;
            }
            emax = emax.max(a);
            let (ix, iy) = grid.unindex(k);
            for nb in [(ix + 1 < n).then(|| k + 1), (iy + 1 < n).then(|| k + n)].into_iter().flatten() {
                if let Some(b) = e[nb] {
                    if b.is_finite() {
                        raw = raw.max((a - b).abs());
                    }
                }
            }
        }
    }
    let raw = raw / grid.h().sqrt();
    let score = if emax > 0.0 { raw / emax } else { 0.0 };
    let frac = finite as f64 / (2 * grid.len()) as f64;
    Ok(MildReport {
        continuity_score: score,
        raw_continuity: raw,
        finite_area_fraction: frac,
        saturated_nodes: saturated,
        verdict: score <= opts.bound && frac >= opts.floor,
    })
}
