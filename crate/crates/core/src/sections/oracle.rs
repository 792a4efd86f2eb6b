use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use super::lp;
use crate::error::{Error, Result};
use crate::sphere::{fs_potential, Chart};
use crate::weights::Weight;

pub const ORACLE_MAX_DEGREE: usize = 20;
pub const ORACLE_MIN_PHASES: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    /// `(1/n) log(best * e^{-n phi(x)})`.
    pub value: f64,
    /// Optimal `Re(e^{i theta} p(x))`.
    pub best: f64,
    /// `sec(pi/m)`: the phase polygon overestimates `Phi_n` by at most this factor.
    pub sec_factor: f64,
    pub constraints_used: usize,
    pub pivots: usize,
}

struct Problem {
    n: usize,
    center: Complex64,
    radius: f64,
    samples: Vec<Complex64>,
    log_bound: Vec<f64>,
}

impl Problem {
    fn basis(&self, z: Complex64) -> Vec<Complex64> {
        let u = (z - self.center) / self.radius;
        let mut out = Vec::with_capacity(self.n + 1);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..=self.n {
            out.push(p);
            p *= u;
        }
        out
    }

    /// Coefficient row of `Re(e^{i psi} p(z))` in the real variables.
    fn row(&self, z: Complex64, psi: f64, scale: f64) -> Vec<f64> {
        let rot = Complex64::from_polar(scale, psi);
        self.basis(z)
            .into_iter()
            .flat_map(|b| {
                let v = rot * b;
                [v.re, -v.im]
            })
            .collect()
    }

    fn eval(&self, y: &[f64], z: Complex64) -> Complex64 {
        self.basis(z)
            .into_iter()
            .enumerate()
            .map(|(j, b)| Complex64::new(y[2 * j], y[2 * j + 1]) * b)
            .sum()
    }
}

/// Upper approximation of `Phi_n(x)` for the constraint set `K_sample`: the
/// maximum of `Re(e^{i theta} p(x))` over degree-`n` polynomials with
/// `Re(e^{i psi_k} p(z)) <= e^{n (Q + phi)(z)}` on the sample for
/// `psi_k = 2 pi k / m`.
///
/// Rotating `p` by `e^{2 pi i / m}` permutes the constraints, so every
/// `theta_l = 2 pi l / m` of the sweep has the same optimum; the LP is solved
/// at `theta_0` (see [`oracle_phi_n_at_phase`] for the others). Constraints
/// are added by a cutting-plane loop, starting from four phases per sample.
pub fn oracle_phi_n(samples: &[Complex64], q: &Weight, n: usize, x: Complex64, phases: usize) -> Result<OracleResult> {
    oracle_phi_n_at_phase(samples, q, n, x, phases, 0)
}

pub fn oracle_phi_n_at_phase(
    samples: &[Complex64],
    q: &Weight,
    n: usize,
    x: Complex64,
    phases: usize,
    theta_index: usize,
) -> Result<OracleResult> {
    if n == 0 || n > ORACLE_MAX_DEGREE {
        return Err(Error::Config(format!("oracle degree must be in 1..={ORACLE_MAX_DEGREE} (got {n})")));
    }
    if phases < ORACLE_MIN_PHASES {
        return Err(Error::Config(format!("oracle needs at least {ORACLE_MIN_PHASES} phases (got {phases})")));
    }
    if samples.len() < n + 1 {
        return Err(Error::Unbounded(format!("{} samples cannot bound degree {n} polynomials", samples.len())));
    }
    if !x.is_finite() {
        return Err(Error::Domain("oracle point must be affine".into()));
    }
    let nf = n as f64;
    let mut log_bound = Vec::with_capacity(samples.len());
    for &z in samples {
        let qz = q.eval_chart(Chart::Zero, z);
        if !qz.is_finite() {
            return Err(Error::InvalidWeight(format!("weight is {qz} at sample {z}")));
        }
        log_bound.push(nf * (qz + fs_potential(Chart::Zero, z)));
    }
    let lo = samples.iter().fold(Complex64::new(f64::INFINITY, f64::INFINITY), |m, z| {
        Complex64::new(m.re.min(z.re), m.im.min(z.im))
    });
    let hi = samples.iter().fold(Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, z| {
        Complex64::new(m.re.max(z.re), m.im.max(z.im))
    });
    let center = (lo + hi) * 0.5;
    let radius = samples.iter().fold(0.0f64, |m, z| m.max((z - center).norm())).max(1e-12);
    let pb = Problem { n, center, radius, samples: samples.to_vec(), log_bound };

    // Rows are divided by the bound so the right-hand side is 1; the bound's
    // common factor is folded out to keep rows O(1).
    let ref_log = pb.log_bound.iter().cloned().fold(f64::INFINITY, f64::min);
    let row_scale = |i: usize| (ref_log - pb.log_bound[i]).exp();
    let theta = TAU * (theta_index % phases) as f64 / phases as f64;
    let c = pb.row(x, theta, 1.0);

    let quarter: Vec<usize> = (0..4).map(|k| k * phases / 4).collect();
    let mut active: Vec<(usize, usize)> = Vec::new();
    for i in 0..pb.samples.len() {
        for &k in &quarter {
            active.push((i, k));
        }
    }
    let mut pivots = 0usize;
    for _round in 0..200 {
        let a: Vec<Vec<f64>> = active
            .iter()
            .map(|&(i, k)| pb.row(pb.samples[i], TAU * k as f64 / phases as f64, row_scale(i)))
            .collect();
        let sol = lp::maximize(&c, &a, &vec![1.0; a.len()], 200_000)?;
        pivots += sol.pivots;
        let mut cuts: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..pb.samples.len() {
            let pz = pb.eval(&sol.y, pb.samples[i]) * row_scale(i);
            let mut best = (f64::NEG_INFINITY, 0usize);
            for k in 0..phases {
                let v = (Complex64::from_polar(1.0, TAU * k as f64 / phases as f64) * pz).re;
                if v > best.0 {
                    best = (v, k);
                }
            }
            if best.0 > 1.0 + 1e-10 && !active.contains(&(i, best.1)) {
                cuts.push((best.0, i, best.1));
            }
        }
        if cuts.is_empty() {
            let best = sol.objective * ref_log.exp();
            let value = if best > 0.0 {
                (best.ln() - nf * fs_potential(Chart::Zero, x)) / nf
            } else {
                f64::NEG_INFINITY
            };
            return Ok(OracleResult {
                value,
                best,
                sec_factor: 1.0 / (PI / phases as f64).cos(),
                constraints_used: active.len(),
                pivots,
            });
        }
        cuts.sort_by(|a, b| b.0.total_cmp(&a.0));
        active.extend(cuts.into_iter().take(400).map(|(_, i, k)| (i, k)));
    }
    Err(Error::LinearProgram("cutting-plane loop did not close".into()))
}
