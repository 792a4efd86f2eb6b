use serde::{Deserialize, Serialize};

use super::{solve_envelope, EnvelopeResult, SolveOptions};
use crate::error::{Error, Result};
use crate::sphere::{Chart, OmegaSpec, SphereGrid};
use crate::weights::{gauge_shift, CompactSet, GaugeFunction, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    /// `Q_n` increases to the limit.
    Up,
    /// `Q_n` decreases to the limit.
    Down,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub n: usize,
    pub sup_diff_to_limit: f64,
    /// Worst nodewise step against the expected direction relative to the
    /// previous entry (0 for the first).
    pub monotonicity_violation: f64,
}

fn check_schedule(
    grid: &SphereGrid,
    schedule: &[(usize, Weight)],
    limit: &Weight,
    direction: SweepDirection,
) -> Result<()> {
    let sign = match direction {
        SweepDirection::Up => 1.0,
        SweepDirection::Down => -1.0,
    };
    let mut chain: Vec<&Weight> = schedule.iter().map(|(_, q)| q).collect();
    chain.push(limit);
    for pair in chain.windows(2) {
        for chart in Chart::BOTH {
            for k in 0..grid.len() {
                let z = grid.node_at(k);
                let (a, b) = (pair[0].eval_chart(chart, z), pair[1].eval_chart(chart, z));
                if a == b {
                    continue;
                }
                if sign * (b - a) < -1e-12 * a.abs().max(1.0) {
                    return Err(Error::Config(format!(
                        "schedule is not monotone ({direction:?}) between {} and {} at chart {} node {z}",
                        pair[0].label(),
                        pair[1].label(),
                        chart.index()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Solves for every weight of a monotone schedule and for its limit and
/// reports convergence and monotonicity of the envelopes.
pub fn monotone_weight_sweep(
    k: &CompactSet,
    limit: &Weight,
    omega: &OmegaSpec,
    grid: &SphereGrid,
    schedule: &[(usize, Weight)],
    direction: SweepDirection,
    opts: &SolveOptions,
) -> Result<Vec<SweepEntry>> {
    check_schedule(grid, schedule, limit, direction)?;
    let v_lim = solve_envelope(k, limit, omega, grid, opts)?.v;
    let mut out = Vec::with_capacity(schedule.len());
    let mut prev: Option<EnvelopeResult> = None;
    for (n, q) in schedule {
        let r = solve_envelope(k, q, omega, grid, opts)?;
        let violation = match &prev {
            None => 0.0,
            Some(p) => {
                let step = match direction {
                    SweepDirection::Up => p.v.zip_map(&r.v, |a, b| a - b),
                    SweepDirection::Down => p.v.zip_map(&r.v, |a, b| b - a),
                };
                step.max_value().max(0.0)
            }
        };
        out.push(SweepEntry {
            n: *n,
            sup_diff_to_limit: r.v.max_abs_diff(&v_lim),
            monotonicity_violation: violation,
        });
        prev = Some(r);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeReport {
    /// `sup |V_{K,omega',Q} - (V_{K,omega,Q+xi} - xi)|`.
    pub max_defect: f64,
    /// `sup |V_{K,omega',Q} - (V_{K,omega,Q-xi} + xi)|`, the identity with the
    /// opposite sign convention.
    pub opposite_sign_defect: f64,
}

/// Compares envelopes for the cohomologous forms `omega` and
/// `omega' = omega + dd^c xi`. Since `u` is `omega'`-psh exactly when
/// `u + xi` is `omega`-psh, `V_{K,omega',Q} = V_{K,omega,Q+xi} - xi`.
pub fn gauge_invariance_check(
    k: &CompactSet,
    q: &Weight,
    omega: &OmegaSpec,
    xi: &GaugeFunction,
    grid: &SphereGrid,
    opts: &SolveOptions,
) -> Result<GaugeReport> {
    let (q_plus, omega2) = gauge_shift(q, xi, 1, omega)?;
    let (q_minus, _) = gauge_shift(q, xi, -1, omega)?;
    let lhs = solve_envelope(k, q, &omega2, grid, opts)?.v;
    let plus = solve_envelope(k, &q_plus, omega, grid, opts)?.v;
    let minus = solve_envelope(k, &q_minus, omega, grid, opts)?.v;
    let x = xi.xi();
    let rhs = plus.zip_map(x, |a, b| a - b);
    let alt = minus.zip_map(x, |a, b| a + b);
    Ok(GaugeReport { max_defect: lhs.max_abs_diff(&rhs), opposite_sign_defect: lhs.max_abs_diff(&alt) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid() -> SphereGrid {
        SphereGrid::new(1.25, 61).unwrap()
    }

    #[test]
    fn up_and_down_sweeps() {
        let g = grid();
        let k = CompactSet::unit_circle();
        let om = OmegaSpec::fubini_study();
        let q = Weight::zero();
        let opts = SolveOptions::default();
        for (dir, sign) in [(SweepDirection::Up, -1.0), (SweepDirection::Down, 1.0)] {
            let sched: Vec<_> = (1..=4).map(|n| (n, q.shifted(sign / n as f64))).collect();
            let rep = monotone_weight_sweep(&k, &q, &om, &g, &sched, dir, &opts).unwrap();
            for e in &rep {
                assert!(e.sup_diff_to_limit <= 1.0 / e.n as f64 + 2e-9, "{e:?}");
                assert!(e.monotonicity_violation <= 2e-9, "{e:?}");
            }
        }
    }

    #[test]
    fn bump_off_k_leaves_envelope_unchanged() {
        let g = grid();
        let k = CompactSet::unit_circle();
        let om = OmegaSpec::fubini_study();
        let q = Weight::zero();
        let bump = Weight::from_fn("bump", |c, z| {
            let z = if c == Chart::Zero { z } else { 1.0 / z };
            if (z.norm() - 0.3).abs() < 0.1 { 1.0 } else { 0.0 }
        });
        let sched: Vec<_> = (1..=3).map(|n| (n, q.plus(&bump.scaled(1.0 / n as f64)))).collect();
        let rep = monotone_weight_sweep(&k, &q, &om, &g, &sched, SweepDirection::Down, &SolveOptions::default())
            .unwrap();
        for e in rep {
            assert!(e.sup_diff_to_limit <= 1e-9, "{e:?}");
        }
    }

    #[test]
    fn non_monotone_schedule_is_rejected() {
        let g = grid();
        let q = Weight::zero();
        let sched = vec![(1, q.shifted(-0.5)), (2, q.shifted(-1.0))];
        let r = monotone_weight_sweep(
            &CompactSet::unit_circle(),
            &q,
            &OmegaSpec::fubini_study(),
            &g,
            &sched,
            SweepDirection::Up,
            &SolveOptions::default(),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn gauge_identity_and_its_sign() {
        let g = grid();
        let k = CompactSet::unit_circle();
        let om = OmegaSpec::fubini_study();
        let opts = SolveOptions::default();
        let xi = GaugeFunction::constant(&g, 0.2);
        let r = gauge_invariance_check(&k, &Weight::zero(), &om, &xi, &g, &opts).unwrap();
        assert!(r.max_defect <= 2e-9, "{r:?}");
        assert!(r.opposite_sign_defect <= 2e-9, "{r:?}");

        let xi = GaugeFunction::bump(&g, 0.05, Complex64::new(0.2, 0.0), 0.5).unwrap();
        let r = gauge_invariance_check(&k, &Weight::zero(), &om, &xi, &g, &opts).unwrap();
        let h = g.h();
        assert!(r.max_defect <= 5.0 * h * h + 2e-9, "{r:?}");
        // The identity with the sign flipped is off by O(amplitude).
        assert!(r.opposite_sign_defect > 0.01, "{r:?}");
    }
}
