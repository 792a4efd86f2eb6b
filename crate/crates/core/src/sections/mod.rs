//! Polynomial (section) envelopes: lower bounds for `V_{K,omega,Q}` built
//! from weighted Lagrange polynomials at Leja nodes, a linear-programming
//! oracle for the discrete extremal problem, and the lift of an envelope to
//! a fiber-homogeneous function on the dual bundle.
//!
//! For nodes `z_0..z_n` with allowances `M_j = e^{n (Q + phi)(z_j)}` the basis
//! is `p_j = M_j l_j` with `l_j` the Lagrange polynomials. Everything is kept
//! in log space: `log|l_j(x)| = sum_{k != j} (log|x - z_k| - log|z_j - z_k|)`.

mod leja;
mod lift;
mod lp;
mod oracle;
mod polynomial;

pub use leja::{leja_indices, leja_nodes, log_vandermonde};
pub use lift::{fiber_transition, lift_to_bundle, BundleLift, FiberPoint};
pub use oracle::{oracle_phi_n, oracle_phi_n_at_phase, OracleResult, ORACLE_MAX_DEGREE, ORACLE_MIN_PHASES};
pub use polynomial::Polynomial;

use num_complex::Complex64;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::par;
use crate::sphere::{chart_transition, fs_potential, Chart, GridField, ProjPoint, SphereGrid};
use crate::weights::{CompactSet, Weight};

/// Default `K_sample` size per degree.
pub const SAMPLES_PER_DEGREE: usize = 50;

/// Tolerance of the renormalized constraint on the sample.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SectionEnvelope {
    n: usize,
    nodes: Vec<Complex64>,
    /// `n (Q + phi)(z_j)`.
    log_allowance: Vec<f64>,
    /// `sum_{k != j} log|z_j - z_k|`.
    log_denominator: Vec<f64>,
    log_normalizer: Vec<f64>,
    sample: Vec<Complex64>,
    sample_digest: String,
}

pub fn sample_digest(sample: &[Complex64]) -> String {
    let mut h = Sha256::new();
    for z in sample {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl SectionEnvelope {
    /// Builds the envelope on an explicit affine sample.
    pub fn from_sample(sample: Vec<Complex64>, q: &Weight, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("section degree must be at least 1".into()));
        }
        let nf = n as f64;
        let mut w = Vec::with_capacity(sample.len());
        for &z in &sample {
            let v = q.eval_chart(Chart::Zero, z);
            if !v.is_finite() {
                return Err(Error::InvalidWeight(format!("weight {} is {v} at sample {z}", q.label())));
            }
            w.push(v + fs_potential(Chart::Zero, z));
        }
        let idx = leja_indices(&sample, &w, n + 1)?;
        let nodes: Vec<Complex64> = idx.iter().map(|&i| sample[i]).collect();
        let log_allowance: Vec<f64> = idx.iter().map(|&i| nf * w[i]).collect();
        let mut log_denominator = Vec::with_capacity(n + 1);
        for (j, zj) in nodes.iter().enumerate() {
            let s: f64 = nodes.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, zk)| (zj - zk).norm().ln()).sum();
            if !s.is_finite() {
                return Err(Error::Degenerate(format!(
                    "Lagrange denominator at node {j} is {s}; try a smaller degree or a denser sample"
                )));
            }
            log_denominator.push(s);
        }
        let mut env = SectionEnvelope {
            n,
            nodes,
            log_allowance,
            log_denominator,
            log_normalizer: vec![0.0; n + 1],
            sample_digest: sample_digest(&sample),
            sample,
        };
        for j in 0..=n {
            let worst = env
                .sample
                .iter()
                .zip(&w)
                .map(|(&z, wz)| env.log_basis(j, Chart::Zero, z) - nf * wz)
                .fold(f64::NEG_INFINITY, f64::max);
            if !worst.is_finite() {
                return Err(Error::Degenerate(format!("basis polynomial {j} has norm {worst} on the sample")));
            }
            env.log_normalizer[j] = worst.max(0.0);
        }
        Ok(env)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    /// `M_n(z_j) = e^{n (Q + phi)(z_j)}`.
    pub fn node_weights(&self) -> Vec<f64> {
        self.log_allowance.iter().map(|x| x.exp()).collect()
    }

    /// `max(1, max_sample |p_j| e^{-n (Q + phi)})`.
    pub fn normalizers(&self) -> Vec<f64> {
        self.log_normalizer.iter().map(|x| x.exp()).collect()
    }

    pub fn sample(&self) -> &[Complex64] {
        &self.sample
    }

    pub fn sample_digest(&self) -> &str {
        &self.sample_digest
    }

    /// `log|p_j|` in the trivialization of `chart` (before renormalization).
    fn log_basis(&self, j: usize, chart: Chart, z: Complex64) -> f64 {
        let mut s = self.log_allowance[j] - self.log_denominator[j];
        for (k, zk) in self.nodes.iter().enumerate() {
            if k == j {
                continue;
            }
            s += match chart {
                Chart::Zero => (z - zk).norm().ln(),
                Chart::One => (1.0 - zk * z).norm().ln(),
            };
        }
        s
    }

    /// `log(|p~_j| e^{-n phi_i})` at a chart point.
    pub fn log_basis_norm(&self, j: usize, chart: Chart, z: Complex64) -> f64 {
        self.log_basis(j, chart, z) - self.log_normalizer[j] - self.n as f64 * fs_potential(chart, z)
    }

    /// `value_n = (1/n) log max_j |p~_j| e^{-n phi}`.
    pub fn value(&self, chart: Chart, z: Complex64) -> f64 {
        let m = (0..=self.n).map(|j| self.log_basis_norm(j, chart, z)).fold(f64::NEG_INFINITY, f64::max);
        m / self.n as f64
    }

    pub fn value_at(&self, p: &ProjPoint) -> f64 {
        let (chart, z) = chart_transition(p);
        self.value(chart, z)
    }

    pub fn value_field(&self, grid: &SphereGrid, parallel: bool) -> GridField {
        GridField::from_fn(grid, parallel, |c, z| self.value(c, z))
    }

    /// The renormalized basis polynomial `p~_j` in monomial form.
    pub fn basis_polynomial(&self, j: usize) -> Polynomial {
        let others: Vec<Complex64> =
            self.nodes.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &z)| z).collect();
        let lead = (self.log_allowance[j] - self.log_denominator[j] - self.log_normalizer[j]).exp();
        let denom_phase: Complex64 = others.iter().map(|zk| (self.nodes[j] - zk) / (self.nodes[j] - zk).norm()).product();
        Polynomial::from_roots(&others, Complex64::new(lead, 0.0) / denom_phase)
    }

    /// Largest `|p~_j| e^{-n (Q + phi)}` over the sample and the basis; at
    /// most `1 + 1e-9` by construction.
    pub fn max_constraint(&self, q: &Weight) -> f64 {
        let nf = self.n as f64;
        let mut worst = f64::NEG_INFINITY;
        for &z in &self.sample {
            let qz = q.eval_chart(Chart::Zero, z);
            for j in 0..=self.n {
                worst = worst.max(self.log_basis_norm(j, Chart::Zero, z) - nf * qz);
            }
        }
        worst.exp()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "nodes": self.nodes.iter().map(|z| json!([z.re, z.im, 0])).collect::<Vec<_>>(),
            "normalizers": self.normalizers(),
            "K_sample_digest": self.sample_digest,
        })
    }
}

/// Builds the degree-`n` envelope on `sample_size` points of `K`
/// (default `50 n`).
pub fn build_section_envelope(k: &CompactSet, q: &Weight, n: usize, sample_size: Option<usize>) -> Result<SectionEnvelope> {
    if n == 0 {
        return Err(Error::Config("section degree must be at least 1".into()));
    }
    let m = sample_size.unwrap_or(SAMPLES_PER_DEGREE * n);
    let sample = k.sample(m)?;
    SectionEnvelope::from_sample(sample, q, n)
}

/// Builds one envelope per degree, concurrently when allowed.
pub fn build_section_envelopes(
    k: &CompactSet,
    q: &Weight,
    degrees: &[usize],
    sample_size: Option<usize>,
    parallel: bool,
) -> Result<Vec<SectionEnvelope>> {
    par::map_slice(degrees, parallel, |&n| build_section_envelope(k, q, n, sample_size)).into_iter().collect()
}

/// `max_{n' <= n} value_{n'}` for each envelope in increasing-degree order.
pub fn combined_values(envs: &[SectionEnvelope], chart: Chart, z: Complex64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..envs.len()).collect();
    order.sort_by_key(|&i| envs[i].n());
    let mut out = vec![0.0; envs.len()];
    let mut running = f64::NEG_INFINITY;
    for i in order {
        running = running.max(envs[i].value(chart, z));
        out[i] = running;
    }
    out
}
