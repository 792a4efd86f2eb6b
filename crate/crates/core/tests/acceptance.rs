//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use omega_green::hprinciple::{lift_chart_consistency, round_trip_suite};
use omega_green::pullback::{
    estimate_beta, verify_image_inequality, verify_sandwich, Provenance, RationalMap, SandwichParams,
};
use omega_green::relax::{
    gauge_invariance_check, ma_residual, monotone_weight_sweep, solve_envelope, EnvelopeResult, SolveOptions,
    SweepDirection,
};
use omega_green::sections::{build_section_envelopes, lift_to_bundle, oracle_phi_n};
use omega_green::weights::{parse_set, parse_weight, CompactSet, GaugeFunction, Weight};
use omega_green::{Chart, GridField, Interp, OmegaSpec, ProjPoint, SphereGrid};

const TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn opts(parallel: bool) -> SolveOptions {
    SolveOptions { tol: TOL, parallel, ..SolveOptions::default() }
}

fn fs() -> OmegaSpec {
    OmegaSpec::fubini_study()
}

fn grid(n: usize) -> SphereGrid {
    SphereGrid::new(1.25, n).unwrap()
}

/// Closed-form circle envelope in affine coordinates.
fn circle_oracle(z: Complex64) -> f64 {
    let r = z.norm();
    r.ln().max(0.0) + 0.5 * 2f64.ln() - 0.5 * (1.0 + r * r).ln()
}

fn at_origin(v: &GridField) -> f64 {
    v.eval(&ProjPoint::affine(c(0.0, 0.0)), Interp::Linear)
}

fn solve(k: &CompactSet, q: &Weight, g: &SphereGrid, parallel: bool) -> EnvelopeResult {
    solve_envelope(k, q, &fs(), g, &opts(parallel)).unwrap()
}

struct Fixtures {
    circle_401: EnvelopeResult,
    circle_401_secs: f64,
    circle_201: EnvelopeResult,
}

type Outcome = (bool, String);

struct Suite {
    lines: Vec<(usize, bool, String)>,
}

impl Suite {
    fn run(&mut self, id: usize, name: &str, f: impl FnOnce() -> Outcome) {
        let t0 = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {name}: {detail} [{:.1} s]", t0.elapsed().as_secs_f64());
        self.lines.push((id, pass, detail));
    }
}

fn criterion_1(fx: &Fixtures) -> Outcome {
    let r = &fx.circle_401;
    let g = r.grid();
    let mut worst = 0.0f64;
    for chart in Chart::BOTH {
        for (k, &v) in r.v.values(chart).iter().enumerate() {
            let w = g.node_at(k);
            if (w.norm() - 1.0).abs() <= 3.0 * g.h() {
                continue;
            }
            let z = match chart {
                Chart::Zero => w,
                Chart::One => 1.0 / w,
            };
            worst = worst.max((v - circle_oracle(z)).abs());
        }
    }
    let pass = r.converged && worst <= 0.01 && fx.circle_401_secs <= 60.0;
    (pass, format!("sup error {worst:.2e} (<= 0.01), single-threaded solve {:.1} s (<= 60 s)", fx.circle_401_secs))
}

fn criterion_2() -> Outcome {
    let g = grid(401);
    let t0 = Instant::now();
    let r = solve(&CompactSet::whole(), &Weight::zero(), &g, false);
    let secs = t0.elapsed().as_secs_f64();
    let m = r.v.max_value().abs().max(r.v.min_value().abs());
    (r.converged && m <= 1e-9 && secs <= 5.0, format!("max|V| = {m:.2e} (<= 1e-9), {secs:.2} s (<= 5 s)"))
}

fn criterion_3(fx: &Fixtures) -> Outcome {
    let r = &fx.circle_401;
    let g = r.grid();
    let k = CompactSet::unit_circle();
    let q = Weight::zero();
    let envs = build_section_envelopes(&k, &q, &[10, 20, 40], None, true).unwrap();
    let diffs: Vec<f64> = envs.iter().map(|e| e.value_field(g, true).max_abs_diff(&r.v)).collect();
    let monotone = diffs.windows(2).all(|w| w[1] <= w[0]);
    let samples = k.sample(50).unwrap();
    let o = oracle_phi_n(&samples, &q, 1, c(0.0, 0.0), 64).unwrap();
    let oracle_err = (o.value - 0.5 * 2f64.ln()).abs();
    let pass = monotone && diffs[2] <= 0.15 && oracle_err <= 0.005;
    (
        pass,
        format!(
            "sup|value_n - V| at n = 10/20/40: {:.4}/{:.4}/{:.4} (non-increasing, <= 0.15); oracle n = 1 error {oracle_err:.1e} (<= 0.005)",
            diffs[0], diffs[1], diffs[2]
        ),
    )
}

fn criterion_4(fx: &Fixtures) -> Outcome {
    let g = grid(201);
    let mut fixtures: Vec<(String, EnvelopeResult)> =
        vec![("circle 401".into(), fx.circle_401.clone()), ("circle 201".into(), fx.circle_201.clone())];
    for (set, weight) in [("whole", "zero"), ("disk(0.5)", "fs_potential"), ("segment", "zero"), ("annulus(0.8,1.1)", "zero"), ("circle(0.3,0.2,0.7)", "log_dist(2,0)")] {
        let r = solve(&parse_set(set).unwrap(), &parse_weight(weight).unwrap(), &g, true);
        fixtures.push((format!("{set}/{weight}"), r));
    }
    let mut worst_rel = 0.0f64;
    let mut worst_name = String::new();
    let mut counted = 0;
    for (name, r) in &fixtures {
        if !r.converged {
            continue;
        }
        counted += 1;
        let rel = (r.ma_mass_total - TAU).abs() / TAU;
        if rel > worst_rel {
            worst_rel = rel;
            worst_name = name.clone();
        }
    }
    let r = &fx.circle_401;
    let res = ma_residual(r, &CompactSet::unit_circle().mask(r.grid()));
    let bound = 10.0 * r.grid().h();
    let pass = counted == fixtures.len()
        && worst_rel <= 0.02
        && res.mass_on_k_fraction >= 0.95
        && res.off_k_max_residual <= bound;
    (
        pass,
        format!(
            "{counted}/{} fixtures converged, worst mass error {:.2}% ({worst_name}) (<= 2%); circle: near-K share {:.4} (>= 0.95), off-K residual {:.2e} (<= {bound:.2e})",
            fixtures.len(),
            100.0 * worst_rel,
            res.mass_on_k_fraction,
            res.off_k_max_residual
        ),
    )
}

fn criterion_5() -> Outcome {
    let g = grid(201);
    let bound = 5.0 * g.h() * g.h() + 2.0 * TOL;
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    let cases = [
        ("circle", "zero", GaugeFunction::constant(&g, 0.3)),
        ("circle", "zero", GaugeFunction::bump(&g, 0.05, c(0.2, 0.0), 0.5).unwrap()),
        ("disk(0.5)", "fs_potential", GaugeFunction::constant(&g, -0.7)),
        ("disk(0.5)", "fs_potential", GaugeFunction::bump(&g, 0.05, c(-0.3, 0.4), 0.5).unwrap()),
    ];
    for (set, weight, xi) in &cases {
        let rep = gauge_invariance_check(&parse_set(set).unwrap(), &parse_weight(weight).unwrap(), &fs(), xi, &g, &opts(true))
            .unwrap();
        worst = worst.max(rep.max_defect);
        detail.push(format!("{set}/{}: {:.1e}", xi.label(), rep.max_defect));
    }
    (worst <= bound, format!("{} (<= {bound:.2e})", detail.join(", ")))
}

fn criterion_6() -> Outcome {
    let g = grid(201);
    let schedule_n = [1usize, 2, 4, 8, 16];
    let mut pass = true;
    let mut detail = Vec::new();
    for (set, weight) in [("circle", "zero"), ("disk(0.5)", "fs_potential")] {
        let k = parse_set(set).unwrap();
        let q = parse_weight(weight).unwrap();
        for (dir, sign) in [(SweepDirection::Up, -1.0), (SweepDirection::Down, 1.0)] {
            let schedule: Vec<_> = schedule_n.iter().map(|&n| (n, q.shifted(sign / n as f64))).collect();
            let entries = monotone_weight_sweep(&k, &q, &fs(), &g, &schedule, dir, &opts(true)).unwrap();
            let mut excess = f64::NEG_INFINITY;
            let mut violation = 0.0f64;
            for e in &entries {
                excess = excess.max(e.sup_diff_to_limit - (1.0 / e.n as f64 + 2.0 * TOL));
                violation = violation.max(e.monotonicity_violation);
            }
            pass &= excess <= 0.0 && violation <= 2.0 * TOL;
            detail.push(format!("{set}/{weight} {dir:?}: max(sup_diff - 1/n - 2tol) {excess:.1e}, violation {violation:.1e}"));
        }
    }
    (pass, detail.join("; "))
}

fn criterion_7(fx: &Fixtures) -> Outcome {
    let g401 = fx.circle_401.grid().clone();
    let sq = RationalMap::power(2).unwrap();
    let beta = estimate_beta(&sq, &fs(), &g401, true);
    let params = SandwichParams::new(beta, beta, Provenance::Estimated).unwrap();
    let k = CompactSet::unit_circle();
    let run = verify_sandwich(&sq, &k, &Weight::zero(), &fs(), &params, &g401, &opts(true)).unwrap();
    let upper = run.report.upper_defect;

    let g201 = grid(201);
    let id = verify_sandwich(
        &RationalMap::identity(),
        &CompactSet::circle(c(0.2, 0.1), 0.6),
        &parse_weight("fs_potential").unwrap(),
        &fs(),
        &SandwichParams::degenerate(),
        &g201,
        &opts(true),
    )
    .unwrap();
    let id_worst = id.report.lower_defect.max(id.report.upper_defect);

    let maps = [
        ("identity", RationalMap::identity(), 1.0),
        ("z^2", RationalMap::power(2).unwrap(), 4.0),
        ("z^3", RationalMap::power(3).unwrap(), 9.0),
        ("mobius", RationalMap::mobius_rotation(0.7), 1.0),
    ];
    let mut beta_err = 0.0f64;
    let mut betas = Vec::new();
    for (name, f, want) in &maps {
        let b = estimate_beta(f, &fs(), &g401, true);
        beta_err = beta_err.max((b - want).abs() / want);
        betas.push(format!("{name} {b:.4}"));
    }
    let pass = run.report.converged && upper <= 0.02 && id.report.converged && id_worst <= 2.0 * TOL && beta_err <= 0.01;
    (
        pass,
        format!(
            "z^2 upper defect {upper:.4} (<= 0.02, beta {beta:.4}); identity max defect {id_worst:.1e} (<= {:.0e}); beta {} (rel. error {beta_err:.1e} <= 1%)",
            2.0 * TOL,
            betas.join(", ")
        ),
    )
}

fn criterion_8(fx: &Fixtures) -> Outcome {
    let g401 = fx.circle_401.grid().clone();
    let k = CompactSet::unit_circle();
    let sq = verify_image_inequality(&RationalMap::power(2).unwrap(), &k, &Weight::zero(), &fs(), &g401, &opts(true)).unwrap();
    let g201 = grid(201);
    let mob = verify_image_inequality(
        &RationalMap::mobius_rotation(0.7),
        &CompactSet::circle(c(0.2, 0.1), 0.6),
        &Weight::zero(),
        &fs(),
        &g201,
        &opts(true),
    )
    .unwrap();
    let mob_bound = 2.0 * TOL + mob.report.interpolation_allowance;
    let pass = sq.report.converged && mob.report.converged && sq.report.defect <= 0.03 && mob.report.defect <= mob_bound;
    (
        pass,
        format!(
            "z^2/S^1 defect {:.4} (<= 0.03); Mobius defect {:.4} (<= 2tol + interpolation {mob_bound:.4})",
            sq.report.defect, mob.report.defect
        ),
    )
}

fn criterion_9(fx: &Fixtures) -> Outcome {
    let r = round_trip_suite(1000, 0x5eed).unwrap();
    let trips = r.homogenize_defect.max(r.metric_chi_defect).max(r.cocycle_defect);
    let homog = r.log_homogeneity_defect.max(r.fiber_homogeneity_defect);
    let lift = lift_to_bundle(&fx.circle_401, &fs()).unwrap();
    let mut consistency = 0.0f64;
    for radius in [0.85, 1.0, 1.1, 1.2] {
        consistency = consistency.max(lift_chart_consistency(&lift, radius, 64, c(0.7, 0.2)).unwrap());
    }
    let bound = 10.0 * fx.circle_401.grid().h();
    let pass = trips <= 1e-10 && homog <= 1e-12 && consistency <= bound;
    (
        pass,
        format!(
            "round trips {trips:.1e} (<= 1e-10) on {} samples; homogeneity {homog:.1e} (<= 1e-12); lift chart consistency {consistency:.1e} (<= {bound:.2e})",
            r.samples
        ),
    )
}

fn summary_bytes(r: &EnvelopeResult) -> String {
    let mut s = serde_json::to_string_pretty(&serde_json::json!({
        "iterations": r.iterations,
        "warm_sweeps": r.warm_sweeps,
        "final_update": r.final_update,
        "converged": r.converged,
        "seam_discrepancy": r.seam_discrepancy,
        "ma_mass_total": r.ma_mass_total,
        "start_value": r.start_value,
        "blend_theta": r.blend_theta,
        "metadata": r.metadata,
        "v_origin": at_origin(&r.v),
    }))
    .unwrap();
    let mut csv = Vec::new();
    r.v.write_csv(&mut csv).unwrap();
    s.push_str(&String::from_utf8(csv).unwrap());
    s
}

fn criterion_10(fx: &Fixtures) -> Outcome {
    let h = fx.circle_401.grid().h();
    let change = (at_origin(&fx.circle_201.v) - at_origin(&fx.circle_401.v)).abs();
    let g = grid(201);
    let a = summary_bytes(&fx.circle_201);
    let b = summary_bytes(&solve(&CompactSet::unit_circle(), &Weight::zero(), &g, true));
    let seq = summary_bytes(&solve(&CompactSet::unit_circle(), &Weight::zero(), &g, false));
    let identical = a == b && a == seq;
    let pass = change <= 5.0 * h && identical;
    (
        pass,
        format!(
            "V(0) change 201 -> 401: {change:.2e} = {:.2} h (<= 5 h); summaries byte-identical across reruns and sequential/parallel: {identical}",
            change / h
        ),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    println!("acceptance suite (grid half-width 1.25, solver tol {TOL:e})");
    let t0 = Instant::now();
    let start = Instant::now();
    let circle_401 = solve(&CompactSet::unit_circle(), &Weight::zero(), &grid(401), false);
    let circle_401_secs = start.elapsed().as_secs_f64();
    let circle_201 = solve(&CompactSet::unit_circle(), &Weight::zero(), &grid(201), true);
    let fx = Fixtures { circle_401, circle_401_secs, circle_201 };

    let mut suite = Suite { lines: Vec::new() };
    suite.run(1, "circle fixture vs closed form", || criterion_1(&fx));
    suite.run(2, "trivial envelope on the whole sphere", criterion_2);
    suite.run(3, "cross-method agreement", || criterion_3(&fx));
    suite.run(4, "Monge-Ampere mass and support", || criterion_4(&fx));
    suite.run(5, "gauge invariance", criterion_5);
    suite.run(6, "monotone weight sweeps", criterion_6);
    suite.run(7, "pullback sandwich", || criterion_7(&fx));
    suite.run(8, "image inequality", || criterion_8(&fx));
    suite.run(9, "H-principle round trips", || criterion_9(&fx));
    suite.run(10, "grid refinement and reproducibility", || criterion_10(&fx));

    let failed: Vec<usize> = suite.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    println!(
        "{} of {} criteria passed in {:.1} s",
        suite.lines.len() - failed.len(),
        suite.lines.len(),
        t0.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
