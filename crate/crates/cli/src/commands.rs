//! The seven commands. Each returns the field written to `V.csv` and the
//! scalars for `summary.json`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use omega_green::hprinciple::{
    lift_chart_consistency, round_trip_suite, verification_points, FiberFunction, MetricData,
};
use omega_green::pullback::{
    estimate_beta, pullback_weight, verify_image_inequality, verify_sandwich, AlphaBattery, AlphaOptions,
    Provenance, RationalMap, SandwichParams,
};
use omega_green::relax::{
    gauge_invariance_check, ma_residual, monotone_weight_sweep, solve_envelope, EnvelopeResult, SweepDirection,
};
use omega_green::sections::{build_section_envelopes, lift_to_bundle, oracle_phi_n, SectionEnvelope};
use omega_green::weights::{mild_check, GaugeFunction, MildOptions};
use omega_green::{Chart, GridField, Interp, OmegaSpec, ProjPoint};
use serde_json::{json, Map, Value};

use crate::config::{Command, Method, Prepared};
use crate::CliError;

pub struct Outcome {
    pub field: GridField,
    pub summary: Map<String, Value>,
    /// Set when the artifacts were produced but a numerical check failed.
    pub failure: Option<String>,
}

impl Outcome {
    fn new(field: GridField) -> Self {
        Outcome { field, summary: Map::new(), failure: None }
    }

    fn put(&mut self, key: &str, v: impl serde::Serialize) {
        self.summary.insert(key.to_string(), json!(v));
    }

    fn fail_unless_converged(&mut self, what: &str, r: &EnvelopeResult) {
        if !r.converged && self.failure.is_none() {
            self.failure = Some(format!(
                "{what}: solver did not converge in {} sweeps (last update {:e})",
                r.iterations, r.final_update
            ));
        }
    }
}

fn at_origin(v: &GridField) -> f64 {
    v.eval(&ProjPoint::affine(Complex64::new(0.0, 0.0)), Interp::Linear)
}

fn envelope_scalars(r: &EnvelopeResult) -> Value {
    json!({
        "iterations": r.iterations,
        "warm_sweeps": r.warm_sweeps,
        "final_update": r.final_update,
        "converged": r.converged,
        "seam_discrepancy": r.seam_discrepancy,
        "ma_mass_total": r.ma_mass_total,
        "start_value": r.start_value,
        "blend_theta": r.blend_theta,
        "max_monotone_violation": r.max_monotone_violation,
        "obstacle_violation": r.obstacle_violation,
        "min_certificate": r.min_certificate,
        "saturated_nodes": r.saturated_nodes,
        "value_cap": r.metadata.value_cap,
        "v_origin": at_origin(&r.v),
        "v_min": r.v.min_value(),
        "v_max": r.v.max_value(),
    })
}

fn merge(out: &mut Outcome, v: Value) {
    if let Value::Object(m) = v {
        out.summary.extend(m);
    }
}

pub fn execute(p: &Prepared) -> Result<Outcome, CliError> {
    match p.config.command {
        Command::Envelope | Command::Sections | Command::Compare => match p.method {
            Method::Relax => envelope(p),
            Method::Sections => sections(p),
            Method::Both => compare(p),
        },
        Command::Pullback => pullback(p),
        Command::Sweep => sweep(p),
        Command::Hprinciple => hprinciple(p),
        Command::Diagnostics => diagnostics(p),
    }
}

fn omega() -> OmegaSpec {
    OmegaSpec::fubini_study()
}

fn solve(p: &Prepared) -> Result<EnvelopeResult, CliError> {
    Ok(solve_envelope(&p.set, &p.weight, &omega(), &p.grid, &p.config.solve_options())?)
}

fn envelope(p: &Prepared) -> Result<Outcome, CliError> {
    let r = solve(p)?;
    let mut out = Outcome::new(r.v.clone());
    merge(&mut out, envelope_scalars(&r));
    out.put("ma_residual", ma_residual(&r, &p.set.mask(&p.grid)));
    out.put("mild", mild_check(&p.weight, &omega(), &p.grid, MildOptions::default())?);
    out.fail_unless_converged("envelope", &r);
    Ok(out)
}

fn section_envelopes(p: &Prepared) -> Result<Vec<SectionEnvelope>, CliError> {
    let c = &p.config;
    Ok(build_section_envelopes(&p.set, &p.weight, &c.degrees, c.sample_size, c.parallel)?)
}

fn section_entry(p: &Prepared, e: &SectionEnvelope) -> Map<String, Value> {
    let origin = e.value(Chart::Zero, Complex64::new(0.0, 0.0));
    let v = json!({
        "n": e.n(),
        "sample_size": e.sample().len(),
        "sample_digest": e.sample_digest(),
        "max_constraint": e.max_constraint(&p.weight),
        "value_origin": origin,
    });
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn oracle(p: &Prepared, out: &mut Outcome) -> Result<(), CliError> {
    let o = &p.config.oracle;
    if !o.enabled {
        return Ok(());
    }
    let samples = p.set.sample(o.sample_size)?;
    let x = Complex64::new(o.point[0], o.point[1]);
    let r = oracle_phi_n(&samples, &p.weight, o.degree, x, o.phases)?;
    out.put(
        "oracle",
        json!({
            "degree": o.degree,
            "point": o.point,
            "phases": o.phases,
            "sample_size": o.sample_size,
            "value": r.value,
            "sec_factor": r.sec_factor,
            "constraints_used": r.constraints_used,
            "pivots": r.pivots,
        }),
    );
    Ok(())
}

fn sections(p: &Prepared) -> Result<Outcome, CliError> {
    let envs = section_envelopes(p)?;
    let top = envs.last().expect("degrees validated non-empty");
    let mut out = Outcome::new(top.value_field(&p.grid, p.config.parallel));
    let entries: Vec<_> = envs.iter().map(|e| section_entry(p, e)).collect();
    out.put("sections", entries);
    oracle(p, &mut out)?;
    Ok(out)
}

fn compare(p: &Prepared) -> Result<Outcome, CliError> {
    let r = solve(p)?;
    let envs = section_envelopes(p)?;
    let mut out = Outcome::new(r.v.clone());
    merge(&mut out, envelope_scalars(&r));
    let mut diffs = Vec::new();
    let mut entries = Vec::new();
    for e in &envs {
        let d = e.value_field(&p.grid, p.config.parallel).max_abs_diff(&r.v);
        let mut m = section_entry(p, e);
        m.insert("sup_diff".into(), json!(d));
        entries.push(m);
        diffs.push(d);
    }
    out.put("sections", entries);
    out.put("sup_diff_non_increasing", diffs.windows(2).all(|w| w[1] <= w[0]));
    oracle(p, &mut out)?;
    out.fail_unless_converged("envelope", &r);
    Ok(out)
}

struct AlphaChoice {
    value: f64,
    provenance: Provenance,
    validated: bool,
}

fn pullback(p: &Prepared) -> Result<Outcome, CliError> {
    let c = &p.config;
    let om = omega();
    let opts = c.solve_options();
    let f: RationalMap = c.map.as_ref().expect("validated").build()?;

    let beta_estimate = estimate_beta(&f, &om, &p.grid, c.parallel);
    let (beta, beta_provenance) = match c.beta {
        Some(b) => (b, Provenance::User),
        None => (beta_estimate, Provenance::Estimated),
    };

    let base = solve(p)?;
    let ao = AlphaOptions { tol: c.tolerances.alpha, collar_cells: c.tolerances.collar_cells, parallel: c.parallel, ..AlphaOptions::default() };
    let tests = [base.v.clone(), GridField::constant(&p.grid, 0.0)];
    let (battery_json, choice) = match AlphaBattery::new(&f, &tests, &om, &ao) {
        Ok(b) => {
            let largest = b.largest_alpha();
            let choice = match c.alpha {
                Some(a) => AlphaChoice { value: a, provenance: Provenance::User, validated: !b.check(a).violation },
                None if f.is_identity() && c.beta.is_none() => {
                    AlphaChoice { value: 1.0, provenance: Provenance::Estimated, validated: !b.check(1.0).violation }
                }
                None => {
                    let a = largest.min(beta);
                    AlphaChoice { value: a, provenance: Provenance::Estimated, validated: a > 1.0 }
                }
            };
            let check = b.check(choice.value);
            let battery = json!({
                "largest_alpha": largest,
                "excluded_nodes": b.excluded_nodes(),
                "critical_values": b.critical_values().len(),
                "worst_residual": check.worst_residual,
                "violation": check.violation,
                "witness": check.witness,
                "error": Value::Null,
            });
            (battery, choice)
        }
        Err(e) => {
            let value = c.alpha.unwrap_or(f64::NAN);
            let provenance = if c.alpha.is_some() { Provenance::User } else { Provenance::Estimated };
            (json!({ "error": e.to_string() }), AlphaChoice { value, provenance, validated: false })
        }
    };

    let mut out = Outcome::new(base.v.clone());
    merge(&mut out, envelope_scalars(&base));
    out.put("map", json!({ "label": f.label(), "degree": f.degree(), "resultant": f.resultant() }));
    out.put(
        "beta",
        json!({ "value": beta, "provenance": beta_provenance, "estimate": beta_estimate }),
    );
    out.put(
        "alpha",
        json!({
            "value": choice.value,
            "provenance": choice.provenance,
            "validated": choice.validated,
            "battery": battery_json,
        }),
    );

    let degenerate = f.is_identity() && choice.validated && choice.value == 1.0 && c.beta.is_none();
    let params = if degenerate {
        Some(SandwichParams::degenerate())
    } else if choice.validated && choice.value > 1.0 {
        Some(SandwichParams::new(choice.value, beta, choice.provenance)?)
    } else if beta > 1.0 {
        Some(SandwichParams::new(beta, beta, beta_provenance)?)
    } else {
        None
    };
    let mut alpha_used = None;
    match params {
        Some(params) => {
            let run = verify_sandwich(&f, &p.set, &p.weight, &om, &params, &p.grid, &opts)?;
            let r = &run.report;
            let lower = if choice.validated { json!(r.lower_defect) } else { Value::Null };
            if choice.validated {
                alpha_used = Some(r.alpha);
            }
            out.put(
                "sandwich",
                json!({
                    "alpha": if choice.validated { json!(r.alpha) } else { Value::Null },
                    "beta": r.beta,
                    "provenance": r.provenance,
                    "lower_defect": lower,
                    "upper_defect": r.upper_defect,
                    "preimage_nodes": r.preimage_nodes,
                    "converged": r.converged,
                    "skipped": Value::Null,
                }),
            );
            if !r.converged && out.failure.is_none() {
                out.failure = Some("sandwich: a solve did not converge".into());
            }
        }
        None => {
            out.put(
                "sandwich",
                json!({ "skipped": format!("no admissible parameters: alpha unvalidated and beta = {beta} <= 1") }),
            );
        }
    }

    let image = verify_image_inequality(&f, &p.set, &p.weight, &om, &p.grid, &opts)?;
    out.put("image", &image.report);
    if !image.report.converged && out.failure.is_none() {
        out.failure = Some("image: a solve did not converge".into());
    }

    let mild_at = |s: f64| mild_check(&pullback_weight(&f, &p.weight, 1.0 / s), &om, &p.grid, MildOptions::default());
    let over_alpha = match alpha_used {
        Some(a) => json!(mild_at(a)?),
        None => Value::Null,
    };
    out.put("mild", json!({ "weight": mild_check(&p.weight, &om, &p.grid, MildOptions::default())?, "pullback_over_alpha": over_alpha, "pullback_over_beta": mild_at(beta)? }));
    out.fail_unless_converged("envelope", &base);
    Ok(out)
}

fn sweep(p: &Prepared) -> Result<Outcome, CliError> {
    let c = &p.config;
    let om = omega();
    let opts = c.solve_options();
    let sign = match c.sweep.direction {
        SweepDirection::Up => -1.0,
        SweepDirection::Down => 1.0,
    };
    let schedule: Vec<_> = c.sweep.schedule.iter().map(|&n| (n, p.weight.shifted(sign / n as f64))).collect();
    let entries = monotone_weight_sweep(&p.set, &p.weight, &om, &p.grid, &schedule, c.sweep.direction, &opts)?;
    let limit = solve(p)?;
    let mut out = Outcome::new(limit.v.clone());
    merge(&mut out, envelope_scalars(&limit));
    let tol = c.tolerances.solver;
    let rows: Vec<_> = entries
        .iter()
        .map(|e| {
            let bound = 1.0 / e.n as f64 + 2.0 * tol;
            json!({
                "n": e.n,
                "sup_diff_to_limit": e.sup_diff_to_limit,
                "monotonicity_violation": e.monotonicity_violation,
                "bound": bound,
                "within_bound": e.sup_diff_to_limit <= bound && e.monotonicity_violation <= 2.0 * tol,
            })
        })
        .collect();
    let ok = rows.iter().all(|r| r["within_bound"] == json!(true));
    out.put("direction", c.sweep.direction);
    out.put("sweep", rows);
    out.put("sweep_within_bounds", ok);
    out.fail_unless_converged("limit envelope", &limit);
    Ok(out)
}

fn hprinciple(p: &Prepared) -> Result<Outcome, CliError> {
    let c = &p.config;
    let om = omega();
    let r = solve(p)?;
    let mut out = Outcome::new(r.v.clone());
    merge(&mut out, envelope_scalars(&r));
    out.put("round_trips", round_trip_suite(c.hprinciple.samples, c.seed)?);
    out.fail_unless_converged("envelope", &r);
    if out.failure.is_some() {
        return Ok(out);
    }
    let lift = lift_to_bundle(&r, &om)?;
    let radius = c.hprinciple.lift_radius;
    let consistency = lift_chart_consistency(&lift, radius, 64, Complex64::new(0.7, 0.2))?;
    let metric = MetricData::from_lift(&lift);
    let ring: Vec<_> = (0..64).map(|k| Complex64::from_polar(radius, TAU * (k as f64 + 0.3) / 64.0)).collect();
    let bound = 10.0 * p.grid.h();
    out.put(
        "lift",
        json!({
            "chart_consistency": consistency,
            "cocycle_defect": metric.cocycle_defect(&ring),
            "bound": bound,
            "within_bound": consistency <= bound,
            "fiber_homogeneity_defect": FiberFunction::from_lift(&lift).homogeneity_defect(&verification_points()),
            "positivity_certificate": metric.positivity_certificate(&p.grid, c.parallel),
        }),
    );
    Ok(out)
}

fn diagnostics(p: &Prepared) -> Result<Outcome, CliError> {
    let c = &p.config;
    let om = omega();
    let opts = c.solve_options();
    let r = solve(p)?;
    let mut out = Outcome::new(r.v.clone());
    merge(&mut out, envelope_scalars(&r));
    let expected = f64::from(om.degree()) * TAU;
    out.put("ma_mass_expected", expected);
    out.put("ma_mass_relative_error", (r.ma_mass_total - expected).abs() / expected);
    out.put("ma_residual", ma_residual(&r, &p.set.mask(&p.grid)));
    out.put("mild", mild_check(&p.weight, &om, &p.grid, MildOptions::default())?);

    let g = &c.gauge;
    let h = p.grid.h();
    let bound = 5.0 * h * h + 2.0 * c.tolerances.solver;
    let gauges = [
        ("constant", GaugeFunction::constant(&p.grid, g.constant)),
        (
            "bump",
            GaugeFunction::bump(&p.grid, g.bump_amplitude, Complex64::new(g.bump_center[0], g.bump_center[1]), g.bump_width)?,
        ),
    ];
    let mut gauge = Map::new();
    for (name, xi) in &gauges {
        let rep = gauge_invariance_check(&p.set, &p.weight, &om, xi, &p.grid, &opts)?;
        gauge.insert(
            (*name).into(),
            json!({
                "label": xi.label(),
                "max_defect": rep.max_defect,
                "opposite_sign_defect": rep.opposite_sign_defect,
                "bound": bound,
                "within_bound": rep.max_defect <= bound,
            }),
        );
    }
    out.put("gauge", gauge);
    out.fail_unless_converged("envelope", &r);
    Ok(out)
}
