//! Run configuration: one JSON file per experiment.

use std::path::Path;

use omega_green::pullback::MapSpec;
use omega_green::relax::{SolveOptions, SweepDirection};
use omega_green::weights::{parse_set, parse_weight, CompactSet, Weight};
use omega_green::SphereGrid;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Envelope,
    Sections,
    Compare,
    Pullback,
    Sweep,
    Hprinciple,
    Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Relax,
    Sections,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_n_cells")]
    pub n_cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { half_width: default_half_width(), n_cells: default_n_cells() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_solver_tol")]
    pub solver: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_seam_interval")]
    pub seam_interval: usize,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    /// Tolerance of the ω-subharmonicity certificate in the α battery.
    #[serde(default = "default_alpha_tol")]
    pub alpha: f64,
    #[serde(default = "default_collar")]
    pub collar_cells: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: default_solver_tol(),
            max_sweeps: default_max_sweeps(),
            seam_interval: default_seam_interval(),
            warm_start: true,
            alpha: default_alpha_tol(),
            collar_cells: default_collar(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `up` runs `Q - 1/n`, `down` runs `Q + 1/n`.
    #[serde(default = "default_direction")]
    pub direction: SweepDirection,
    #[serde(default = "default_schedule")]
    pub schedule: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { direction: default_direction(), schedule: default_schedule() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    #[serde(default = "default_gauge_constant")]
    pub constant: f64,
    #[serde(default = "default_bump_amplitude")]
    pub bump_amplitude: f64,
    #[serde(default = "default_bump_center")]
    pub bump_center: [f64; 2],
    #[serde(default = "default_bump_width")]
    pub bump_width: f64,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig {
            constant: default_gauge_constant(),
            bump_amplitude: default_bump_amplitude(),
            bump_center: default_bump_center(),
            bump_width: default_bump_width(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_oracle_degree")]
    pub degree: usize,
    #[serde(default = "default_oracle_phases")]
    pub phases: usize,
    #[serde(default = "default_oracle_samples")]
    pub sample_size: usize,
    #[serde(default)]
    pub point: [f64; 2],
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            enabled: true,
            degree: default_oracle_degree(),
            phases: default_oracle_phases(),
            sample_size: default_oracle_samples(),
            point: [0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HPrincipleConfig {
    #[serde(default = "default_hp_samples")]
    pub samples: usize,
    /// Radius of the circle on which the lift is compared across charts.
    #[serde(default = "default_lift_radius")]
    pub lift_radius: f64,
}

impl Default for HPrincipleConfig {
    fn default() -> Self {
        HPrincipleConfig { samples: default_hp_samples(), lift_radius: default_lift_radius() }
    }
}

/// The configuration schema. Every field except `command` has a default;
/// `method` defaults per command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_set")]
    pub set: String,
    #[serde(default = "default_weight")]
    pub weight: String,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
    /// Points sampled from K per section envelope; `null` means `50 n`.
    #[serde(default)]
    pub sample_size: Option<usize>,
    #[serde(default)]
    pub map: Option<MapSpec>,
    /// `null` asks the α battery for a candidate.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// `null` uses the FS-stretch estimate.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub gauge: GaugeConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub hprinciple: HPrincipleConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

fn default_half_width() -> f64 {
    1.25
}
fn default_n_cells() -> usize {
    201
}
fn default_solver_tol() -> f64 {
    1e-9
}
fn default_max_sweeps() -> usize {
    1_000_000
}
fn default_seam_interval() -> usize {
    16
}
fn default_alpha_tol() -> f64 {
    1e-3
}
fn default_collar() -> f64 {
    3.0
}
fn default_true() -> bool {
    true
}
fn default_lift_radius() -> f64 {
    1.1
}
fn default_direction() -> SweepDirection {
    SweepDirection::Up
}
fn default_schedule() -> Vec<usize> {
    vec![1, 2, 4, 8]
}
fn default_gauge_constant() -> f64 {
    0.3
}
fn default_bump_amplitude() -> f64 {
    0.05
}
fn default_bump_center() -> [f64; 2] {
    [0.2, 0.0]
}
fn default_bump_width() -> f64 {
    0.5
}
fn default_oracle_degree() -> usize {
    1
}
fn default_oracle_phases() -> usize {
    64
}
fn default_oracle_samples() -> usize {
    50
}
fn default_hp_samples() -> usize {
    1000
}
fn default_set() -> String {
    "circle".into()
}
fn default_weight() -> String {
    "zero".into()
}
fn default_degrees() -> Vec<usize> {
    vec![10, 20, 40]
}

/// Validated, ready-to-run view of a [`RunConfig`].
pub struct Prepared {
    pub config: RunConfig,
    pub grid: SphereGrid,
    pub set: CompactSet,
    pub weight: Weight,
    pub method: Method,
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{key}: {msg}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tolerances.solver,
            max_sweeps: self.tolerances.max_sweeps,
            seam_interval: self.tolerances.seam_interval,
            warm_start: self.tolerances.warm_start,
            sor_factor: None,
            parallel: self.parallel,
        }
    }

    /// Checks every field and materializes the per-command defaults.
    pub fn prepare(mut self) -> Result<Prepared, CliError> {
        let grid = SphereGrid::new(self.grid.half_width, self.grid.n_cells).map_err(|e| invalid("grid", e))?;
        let set = parse_set(&self.set).map_err(|e| invalid("set", e))?;
        let weight = parse_weight(&self.weight).map_err(|e| invalid("weight", e))?;

        let natural = match self.command {
            Command::Sections => Some(Method::Sections),
            Command::Compare => Some(Method::Both),
            Command::Envelope => None,
            _ => Some(Method::Relax),
        };
        let method = match (self.method, natural) {
            (Some(m), Some(n)) if m != n => {
                return Err(invalid("method", format!("command {:?} requires {n:?}, got {m:?}", self.command)));
            }
            (Some(m), _) => m,
            (None, Some(n)) => n,
            (None, None) => Method::Relax,
        };
        self.method = Some(method);

        let t = &self.tolerances;
        if !(t.solver > 0.0 && t.solver.is_finite()) {
            return Err(invalid("tolerances.solver", "must be positive"));
        }
        if t.max_sweeps == 0 {
            return Err(invalid("tolerances.max_sweeps", "must be positive"));
        }
        if t.seam_interval == 0 {
            return Err(invalid("tolerances.seam_interval", "must be positive"));
        }
        if !(t.alpha > 0.0 && t.alpha.is_finite()) {
            return Err(invalid("tolerances.alpha", "must be positive"));
        }
        if !(t.collar_cells >= 0.0 && t.collar_cells.is_finite()) {
            return Err(invalid("tolerances.collar_cells", "must be non-negative"));
        }
        if method != Method::Relax {
            if self.degrees.is_empty() || self.degrees.contains(&0) {
                return Err(invalid("degrees", "need at least one degree, each >= 1"));
            }
            let mut sorted = self.degrees.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted != self.degrees {
                return Err(invalid("degrees", "must be strictly increasing"));
            }
            if !set.has_sampler() {
                return Err(invalid("set", format!("{} cannot be sampled for section envelopes", set.label())));
            }
        }
        if self.sample_size == Some(0) {
            return Err(invalid("sample_size", "must be positive"));
        }
        match self.command {
            Command::Pullback => {
                let Some(spec) = &self.map else {
                    return Err(invalid("map", "the pullback command needs a map {\"P\": [...], \"Q\": [...]}"));
                };
                spec.build().map_err(|e| invalid("map", e))?;
                for (key, v) in [("alpha", self.alpha), ("beta", self.beta)] {
                    if let Some(v) = v {
                        if !(v >= 1.0 && v.is_finite()) {
                            return Err(invalid(key, format!("must be finite and >= 1 (got {v})")));
                        }
                    }
                }
                if let (Some(a), Some(b)) = (self.alpha, self.beta) {
                    if a > b {
                        return Err(invalid("alpha", format!("must not exceed beta ({a} > {b})")));
                    }
                }
            }
            Command::Sweep => {
                let s = &self.sweep.schedule;
                if s.is_empty() || s.contains(&0) || s.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("sweep.schedule", "must be a strictly increasing list of positive integers"));
                }
            }
            Command::Hprinciple => {
                if self.hprinciple.samples == 0 {
                    return Err(invalid("hprinciple.samples", "must be positive"));
                }
                let r = self.hprinciple.lift_radius;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(invalid("hprinciple.lift_radius", "must be positive"));
                }
            }
            Command::Diagnostics => {
                let g = &self.gauge;
                if !(g.bump_width > 0.0 && g.bump_width.is_finite()) {
                    return Err(invalid("gauge.bump_width", "must be positive"));
                }
                if !(g.constant.is_finite() && g.bump_amplitude.is_finite()) {
                    return Err(invalid("gauge", "amplitudes must be finite"));
                }
            }
            _ => {}
        }
        if matches!(method, Method::Sections | Method::Both) && self.oracle.enabled {
            let o = &self.oracle;
            if o.degree == 0 || o.phases == 0 || o.sample_size == 0 {
                return Err(invalid("oracle", "degree, phases and sample_size must be positive"));
            }
        }
        Ok(Prepared { config: self, grid, set, weight, method })
    }
}
