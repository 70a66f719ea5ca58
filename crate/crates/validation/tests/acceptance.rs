//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1-4 and 9-12 run the real experiments through the CLI library
//! and re-check the thresholds from the raw numbers in the run summaries.
//! Criteria 5-8 call the numerical library directly. A criterion also fails
//! when it overruns its runtime budget.

use std::path::Path;
use std::time::Instant;

use hyperlab::conjugate::{a_k_eval, derivative_bound_table, generator_matrix, ConjugateParams, Generator};
use hyperlab::jet::Jet;
use hyperlab::linops::{discretize, RadialGrid, SymBand};
use hyperlab::model::{nu_of, BoundaryCondition, RadialOperatorSpec};
use hyperlab::mourre::{
    commutator_coefficients, commutator_matrix, hs_calculus, hs_calculus_dense, semiclassical_bound_check,
    spectral_calculus_dense, HsOptions, SmoothProfile, XiParams,
};
use hyperlab::profiles::window_jet;
use hyperlab::testbed::{op_norm, random_hermitian};
use hyperlab::weights::linear_fit;
use hyperlab::C64;
use hyperlab_cli::config::{Kind, Overrides};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
    seconds: f64,
    analysis: Option<String>,
}

fn outcome(pass: bool, detail: String, seconds: f64) -> Outcome {
    Outcome { pass, detail, seconds, analysis: None }
}

struct Runs {
    dir: tempfile::TempDir,
}

impl Runs {
    /// Runs `kind` into `<tmp>/<tag>/<kind>` with `--set` overrides; returns (summary, manifest).
    fn run(&self, kind: Kind, tag: &str, set: &[&str], workers: usize) -> (Value, Value) {
        let out = self.dir.path().join(tag);
        let ov = Overrides {
            set: set.iter().map(|s| s.to_string()).collect(),
            workers: Some(workers),
            out: Some(out.clone()),
            ..Default::default()
        };
        let mut log = Vec::new();
        let code = hyperlab_cli::run_to(kind, &ov, false, &mut log);
        let dir = out.join(kind.name());
        let manifest = read_json(&dir.join("manifest.json"));
        if code != 0 {
            eprintln!("{} run exited {code}: {}", kind.name(), manifest["diagnostics"]);
        }
        let summary = std::fs::read_to_string(dir.join(format!("{}.json", kind.name())))
            .map(|s| serde_json::from_str(&s).expect("summary parses"))
            .unwrap_or(Value::Null);
        (summary, manifest)
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("file exists")).expect("json parses")
}

fn task_seconds(manifest: &Value, names: &[&str]) -> f64 {
    manifest["tasks"]
        .as_array()
        .map(|ts| {
            ts.iter()
                .filter(|t| names.iter().any(|n| t["name"] == *n))
                .map(|t| t["wall_seconds"].as_f64().unwrap_or(f64::NAN))
                .sum()
        })
        .unwrap_or(f64::NAN)
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn count(v: &Value) -> u64 {
    v.as_u64().unwrap_or(u64::MAX)
}

fn criterion_1(tb: &Value, manifest: &Value) -> Outcome {
    let id = &tb["suites"]["identity"];
    let keys = ["difference_identity", "adjoint_identity", "commutator_resolvent", "double_resolvent"];
    let worst = keys.iter().map(|k| num(&id["max_residuals"][k])).fold(0.0, f64::max);
    let vio: u64 = ["resolvent_norm", "quadratic_estimate", "identity_tolerance"]
        .iter()
        .map(|k| id["violations"][k].as_u64().unwrap_or(0))
        .sum();
    let seeds = id["seeds"].as_array().map_or(0, |s| s.len());
    outcome(
        worst <= 1e-10 && vio == 0 && seeds == 100,
        format!("{seeds} instances, max relative identity residual {worst:.2e} (<= 1e-10), {vio} norm/quadratic violations"),
        task_seconds(manifest, &["identity_suite"]),
    )
}

fn criterion_2(tb: &Value, manifest: &Value) -> Outcome {
    let scalar = tb["scalar_weight"].as_array().cloned().unwrap_or_default();
    let vio: u64 = scalar.iter().map(|r| count(&r["report"]["violations"])).sum();
    let samples: u64 = scalar.iter().map(|r| count(&r["report"]["samples"])).sum();
    let rec = tb["recurrence"].as_array().cloned().unwrap_or_default();
    let s_values: Vec<f64> = rec.iter().map(|r| num(&r["s"])).collect();
    let within = rec.iter().all(|r| count(&r["trace"]["step_count"]) <= count(&r["trace"]["step_bound"]));
    let steps: Vec<String> = rec
        .iter()
        .map(|r| format!("s={}: {}/{}", r["s"], r["trace"]["step_count"], r["trace"]["step_bound"]))
        .collect();
    let per_s = scalar.first().map_or(0, |r| count(&r["report"]["samples"]));
    outcome(
        vio == 0 && per_s >= 10_000 && within && s_values == [0.55, 0.6, 0.75, 1.0],
        format!("{vio} violations over {samples} samples; recurrence steps {}", steps.join(", ")),
        task_seconds(manifest, &["scalar_weight", "recurrence"]),
    )
}

fn criterion_3(tb: &Value, manifest: &Value) -> Outcome {
    let d = &tb["suites"]["diffineq"];
    let vio: u64 = d["violations"].as_object().map_or(u64::MAX, |m| m.values().map(count).sum());
    let seeds = d["seeds"].as_array().map_or(0, |s| s.len());
    let ratio = num(&d["max_residuals"]["diffineq_ratio"]);
    let nonempty = num(&d["max_residuals"]["nonempty_windows"]);
    let sur = &tb["suites"]["diffineq_surrogate"];
    let sur_vio: u64 = sur["violations"].as_object().map_or(0, |m| m.values().map(count).sum());
    let mut o = outcome(
        vio == 0 && seeds == 100,
        format!(
            "{seeds} accepted instances ({} rejected), {vio} violations, max derivative/bound ratio {ratio:.3e}; \
             instances with eigenvalues in the window {}; shifted-commutator diagnostic {sur_vio} violations",
            d["rejects"],
            if nonempty.is_nan() { 0.0 } else { nonempty }
        ),
        task_seconds(manifest, &["diffineq_suite"]),
    );
    if !(nonempty > 0.0) {
        o.analysis = Some(
            "no accepted instance has an eigenvalue in the localization window, so only the weight-derivative \
             terms of the inequality are exercised"
                .into(),
        );
    }
    o
}

fn criterion_4(flow: &Value, manifest: &Value) -> Outcome {
    let lin = num(&flow["linear_region_error"]);
    let order = num(&flow["unitarity_order"]);
    let group = num(&flow["group_law_defect"]);
    let margin = flow["gronwall_margins"]
        .as_array()
        .map_or(f64::NAN, |m| m.iter().map(num).fold(f64::NEG_INFINITY, f64::max));
    let defects: Vec<f64> = flow["unitarity_defects"].as_array().map_or(Vec::new(), |d| d.iter().map(num).collect());
    let order_ok = (order - 2.0).abs() <= 0.3;
    let mut o = outcome(
        lin <= 1e-8 && order_ok && group <= 1e-6 && margin <= 1e-12,
        format!(
            "linear-region error {lin:.2e} (<= 1e-8); unitarity order {order:.2} (2.0 +/- 0.3), defects [{}]; \
             group-law defect {group:.2e} (<= 1e-6); max Gronwall margin {margin:.2e}",
            defects.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join(", ")
        ),
        num(&manifest["wall_seconds"]),
    );
    if !order_ok && order > 2.3 {
        o.analysis = Some(format!(
            "the unitarity defect decays faster than second order (measured {order:.2}): U_t is applied by \
             four-point cubic interpolation of the pulled-back samples, whose error is O(h^4) for smooth packets"
        ));
    }
    o
}

fn radial(mu: f64) -> RadialOperatorSpec {
    RadialOperatorSpec { k: 0, mu, shift: 0.25, potential: None, r0: 1.0, bc: BoundaryCondition::Dirichlet }
}

fn gaussian(grid: &RadialGrid, c: f64, w: f64) -> Vec<C64> {
    grid.points().iter().map(|&r| C64::new((-((r - c) / w).powi(2)).exp(), 0.0)).collect()
}

fn l2(grid: &RadialGrid, v: &[C64]) -> f64 {
    (grid.h * v.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt()
}

/// Relative defect of the built `i[H, A]` against `i(HA - AH)` from the matrices.
fn commutator_defect(params: &ConjugateParams, h: f64, mu: f64, packet: (f64, f64)) -> f64 {
    let grid = RadialGrid::with_spacing(1.0, 30.0, h, 2).unwrap();
    let spec = radial(mu);
    let hop: SymBand = discretize(&spec, &grid, None).unwrap().hermitian;
    let a: Generator = generator_matrix(params, spec.nu(), &grid);
    let built_op = commutator_matrix(params, &spec, &grid).unwrap();
    let phi = gaussian(&grid, packet.0, packet.1);
    let hax = hop.matvec_c(&a.apply(&phi));
    let ahx = a.apply(&hop.matvec_c(&phi));
    let i = C64::new(0.0, 1.0);
    let built = built_op.matvec_c(&phi);
    let d: Vec<C64> = hax.iter().zip(&ahx).zip(&built).map(|((p, q), b)| i * (p - q) - b).collect();
    l2(&grid, &d) / l2(&grid, &built)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let params = ConjugateParams::from_lambda(100.0, 1.0).unwrap();
    let spacings = [0.02, 0.01, 0.005];
    let mut min_order = f64::INFINITY;
    for mu in [0.0, 4.0, 1e4] {
        for packet in [(8.0, 1.0), (10.0, 1.0), (14.0, 1.5)] {
            let e: Vec<f64> = spacings.iter().map(|&h| commutator_defect(&params, h, mu, packet)).collect();
            let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
            let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
            min_order = min_order.min(linear_fit(&xs, &ys).0);
        }
    }

    // Plateau: a = r + c, so i[H, A] = 2D^2 + 2 a mu e^{-2r} and b = -4.
    let mut worst = 0.0f64;
    let mut checked = 0;
    for mu in [0.0, 9.0, 1e4] {
        let spec = radial(mu);
        let grid = RadialGrid::with_spacing(1.0, 30.0, 0.01, 2).unwrap();
        let co = commutator_coefficients(&params, &spec, &grid);
        let c = commutator_matrix(&params, &spec, &grid).unwrap();
        let h2 = grid.h * grid.h;
        let offset = 2.0 * params.s_big - spec.nu().ln();
        for (i, r) in grid.points().into_iter().enumerate() {
            if r < (2.0 * params.r_big).max(spec.nu().ln() + 2.0 * params.s_big) + 0.01 || i + 1 >= grid.n {
                continue;
            }
            let a = a_k_eval(&params, spec.nu(), r, 0).unwrap();
            let e = mu * (-2.0 * r).exp();
            worst = worst
                .max((a - (r + offset)).abs() / a)
                .max((co.b[i] + 4.0).abs())
                .max(co.c_imag[i].abs())
                .max((c.get(i, i) - (4.0 / h2 + 2.0 * a * e)).abs() * h2)
                .max((c.get(i, i + 1) + 2.0 / h2).abs() * h2);
            checked += 1;
        }
    }
    outcome(
        min_order >= 1.7 && worst <= 1e-10 && checked > 0,
        format!(
            "min fitted order {min_order:.3} (>= 1.7) over mu in {{0, 4, 1e4}} and 3 packets; \
             plateau closed-form deviation {worst:.2e} (<= 1e-10) at {checked} points"
        ),
        start.elapsed().as_secs_f64(),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let k_max = 400;
    let nus: Vec<f64> = (0..=k_max).map(|m| nu_of((m * m) as f64)).collect();
    let rows = derivative_bound_table(&[1e2, 1e3, 1e4], &nus, 1.0, 4000).unwrap();
    let mut pass = true;
    let mut text = Vec::new();
    for j in 1..=4 {
        let cs: Vec<f64> = rows.iter().filter(|r| r.j == j).map(|r| r.c_j).collect();
        let mean = cs.iter().sum::<f64>() / cs.len() as f64;
        let spread = cs.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max);
        pass &= cs.len() == 3 && spread <= 0.2;
        text.push(format!("C_{j} {cs:.4?} (spread {:.1}%)", 100.0 * spread));
    }
    outcome(pass, format!("modes k <= {k_max}: {}", text.join("; ")), start.elapsed().as_secs_f64())
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mus = [0.0, 1.0, 1e2, 1e4, 1e6, 1e8, 1e10, 1e12];
    let mut worst = 0.0f64;
    let mut samples = 0;
    let mut failures = Vec::new();
    for lambda in [1e2, 1e3, 1e4] {
        let conj = ConjugateParams::from_lambda(lambda, 1.0).unwrap();
        let grid = RadialGrid::with_spacing(1.0, 3.0 * conj.r_big + 15.0, 0.01, 2).unwrap();
        let specs: Vec<RadialOperatorSpec> =
            mus.iter().enumerate().map(|(k, &mu)| RadialOperatorSpec { k, ..radial(mu) }).collect();
        for re in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            for im in [0.5, 1.0, 2.0] {
                let xp = XiParams::new(conj, 1.0 / lambda, C64::new(re, im)).unwrap();
                match semiclassical_bound_check(&xp, lambda, &specs, &grid) {
                    Ok(rep) => {
                        worst = worst.max(rep.lhs / rep.rhs);
                        if !(rep.lhs <= rep.rhs) {
                            failures.push(format!("lambda {lambda}, z {re}+{im}i: {:.3e} > {:.3e}", rep.lhs, rep.rhs));
                        }
                    }
                    Err(e) => failures.push(format!("lambda {lambda}, z {re}+{im}i: {e}")),
                }
                samples += 1;
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{samples} (lambda, z) samples, {} modes each, max lhs/rhs {worst:.3e}{}",
            mus.len(),
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
        start.elapsed().as_secs_f64(),
    )
}

/// `exp(1 - 1/(1 - x^2/2))` on `|x| < sqrt 2`.
fn bump(x: Jet) -> Jet {
    if x.value().abs() >= 2f64.sqrt() {
        return Jet::constant(0.0);
    }
    (Jet::constant(1.0) - (Jet::constant(1.0) - x.square().scale(0.5)).recip()).exp()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let f = SmoothProfile { jet: &bump, support: (-std::f64::consts::SQRT_2, std::f64::consts::SQRT_2) };
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(&mut rng, 30, 1.6);
        let hs = hs_calculus_dense(&f, &m, HsOptions::default()).unwrap();
        let oracle = spectral_calculus_dense(|e| f.value(e), &m).unwrap();
        worst = worst.max(op_norm(&(&hs.matrix - &oracle)));
    }
    let grid = RadialGrid::new(1.0, 11.0, 40, 2).unwrap();
    let op = discretize(&radial(4.0), &grid, None).unwrap();
    let w = SmoothProfile { jet: &window_jet, support: (-3.0, 3.0) };
    let (lambda, tau) = (20.0, 0.2);
    let hs = hs_calculus(&w, &op, lambda, tau, HsOptions::default()).unwrap();
    let dense = op.hermitian.to_dense().map(|v| C64::new(v, 0.0));
    let oracle = spectral_calculus_dense(|e| w.value(tau * (e - lambda)), &dense).unwrap();
    let radial_err = op_norm(&(&hs.matrix - &oracle));
    outcome(
        worst <= 1e-6 && radial_err <= 1e-6,
        format!("max error on 20 Hermitian 30x30 matrices {worst:.2e}; on H_k (40 points) {radial_err:.2e} (<= 1e-6)"),
        start.elapsed().as_secs_f64(),
    )
}

const DEFICITS: [&str; 5] = ["r_inverse", "chi_r_minus_one", "one_minus_xi_tilde_sq", "s_inverse", "lambda_inverse"];

fn criterion_9(m: &Value, manifest: &Value) -> Outcome {
    let results = m["results"].as_array().cloned().unwrap_or_default();
    let ratios: Vec<(f64, f64, f64)> =
        results.iter().map(|r| (num(&r["lambda"]), num(&r["min_eig_ratio"]), num(&r["C"]))).collect();
    let ratios_ok = results.len() == 2 && ratios.iter().all(|r| r.1 >= -0.1);
    let mut rising = Vec::new();
    if let [lo, hi] = results.as_slice() {
        for name in DEFICITS {
            let (a, b) = (num(&lo["deficits"][name]), num(&hi["deficits"][name]));
            if !(b < a) {
                rising.push(format!("{name} {a:.3e} -> {b:.3e}"));
            }
        }
    }
    let points: Vec<String> = results.iter().map(|r| r["grid_points"].to_string()).collect();
    outcome(
        ratios_ok && rising.is_empty(),
        format!(
            "(lambda, min_eig_ratio, C) {ratios:?} (>= -0.1), grid points {}; {}",
            points.join("/"),
            if rising.is_empty() { "every deficit decreases".to_string() } else { format!("not decreasing: {}", rising.join(", ")) }
        ),
        num(&manifest["wall_seconds"]),
    )
}

fn criterion_10(sweep: &Value, manifest: &Value) -> Outcome {
    let fit = &sweep["fit"];
    let p = num(&fit["p"]);
    let c_prime = num(&fit["Cprime"]);
    let lambdas: Vec<f64> = sweep["lambdas"].as_array().map_or(Vec::new(), |l| l.iter().map(|r| num(&r["lambda"])).collect());
    let ladder: Vec<f64> = [2.0, 2.5, 3.0, 3.5, 4.0].iter().map(|e| 10f64.powf(*e)).collect();
    let ladder_ok = lambdas.len() == 5 && lambdas.iter().zip(&ladder).all(|(a, b)| (a / b - 1.0).abs() < 1e-12);
    let complete = sweep["lambdas"].as_array().is_some_and(|l| l.iter().all(|r| r["n"].is_number()));
    let st = &sweep["stability"];
    let refined = num(&st["refined_Cprime"]) / c_prime - 1.0;
    let cap = num(&st["cap_x2_Cprime"]) / c_prime - 1.0;
    let p_ok = (-0.6..=-0.4).contains(&p);
    let bound_ok = fit["pass"] == true;
    let mut o = outcome(
        p_ok && bound_ok && complete && ladder_ok && refined.abs() <= 0.5 && cap.abs() <= 0.5,
        format!(
            "p = {p:.4} (in [-0.6, -0.4]), q = {:.3}, C' = {c_prime:.4e}, bound {}; C' change {:+.1}% under 2x \
             refinement, {:+.1}% under 2x CAP (within +/-50%); K_max {}",
            num(&fit["q"]),
            if bound_ok { "holds" } else { "fails" },
            100.0 * refined,
            100.0 * cap,
            sweep["k_max"]
        ),
        num(&manifest["wall_seconds"]),
    );
    if !p_ok {
        o.analysis = Some(format!(
            "fitted p = {p:.4} lies outside [-0.6, -0.4]; the mode sum is truncated at K_max = {} and the \
             maximizing mode index grows with lambda, see sweep_lambda.csv argmax_k",
            sweep["k_max"]
        ));
    }
    o
}

fn criterion_11(w: &Value, manifest: &Value) -> Outcome {
    let unb = &w["unboundedness"];
    let ratios: Vec<f64> = unb["ratios"].as_array().map_or(Vec::new(), |r| r.iter().map(num).collect());
    let increasing = ratios.len() == 3 && ratios.windows(2).all(|p| p[1] > p[0]);
    let exponent = num(&unb["fitted_exponent"]);
    let temperate = count(&w["temperate"]["violations"]);
    let samples = count(&w["temperate"]["samples"]);
    let mut ladder = Vec::new();
    for f in w["factor"].as_array().cloned().unwrap_or_default() {
        let norms: Vec<f64> = f["levels"].as_array().map_or(Vec::new(), |l| l.iter().map(|v| num(&v["norm"])).collect());
        let hi = norms.iter().cloned().fold(0.0, f64::max);
        let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        ladder.push((num(&f["sigma"]), hi / lo));
    }
    let ladder_ok = ladder.len() == 2 && ladder.iter().all(|l| l.1 <= 2.0);
    outcome(
        increasing && (exponent - 1.0).abs() <= 0.15 && temperate == 0 && samples == 100_000 && ladder_ok,
        format!(
            "ratios {ratios:.4?} strictly increasing {increasing}; growth exponent {exponent:.3} (1 +/- 0.15); \
             temperate violations {temperate} of {samples}; ladder (sigma, max/min) {ladder:.3?} (<= 2)"
        ),
        num(&manifest["wall_seconds"]),
    )
}

fn csv_body(path: &Path) -> Option<String> {
    std::fs::read_to_string(path).ok()
}

fn criterion_12(runs: &Runs, one: &Value) -> Outcome {
    let start = Instant::now();
    let (_, manifest) = runs.run(Kind::Sweep, "sweep_w8", &[], 8);
    let files = ["sweep.csv", "sweep_lambda.csv"];
    let mut same = Vec::new();
    for f in files {
        let a = csv_body(&runs.dir.path().join("sweep_w1/sweep").join(f));
        let b = csv_body(&runs.dir.path().join("sweep_w8/sweep").join(f));
        same.push((f, a.is_some() && a == b, a.map_or(0, |s| s.len())));
    }
    let ok = manifest["status"] == "ok" && one["fit"].is_object();
    outcome(
        ok && same.iter().all(|s| s.1),
        format!("byte-identical (file, equal, bytes) {same:?} between workers = 1 and workers = 8"),
        start.elapsed().as_secs_f64(),
    )
}

const NAMES: [&str; 12] = [
    "abstract identities",
    "scalar weight and recurrence",
    "differential inequality",
    "flow/group",
    "commutators",
    "a_k derivative bounds",
    "semiclassical estimate",
    "Helffer-Sjostrand calculus",
    "Mourre positivity",
    "scaling",
    "weight facts",
    "determinism",
];

const LIMITS: [Option<f64>; 12] = [
    Some(10.0),
    Some(5.0),
    Some(60.0),
    Some(30.0),
    Some(30.0),
    Some(10.0),
    Some(300.0),
    Some(60.0),
    Some(600.0),
    Some(1200.0),
    Some(300.0),
    None,
];

fn report(id: usize, o: &Outcome) -> bool {
    let limit = LIMITS[id - 1];
    let in_time = limit.map_or(true, |l| o.seconds < l);
    let pass = o.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / {l:.0} s"));
    println!(
        "{} criterion {id:>2} ({}): {} [{:.1} s{budget}{}]",
        if pass { "PASS" } else { "FAIL" },
        NAMES[id - 1],
        o.detail,
        o.seconds,
        if in_time { "" } else { ", over budget" }
    );
    if !pass {
        if let Some(a) = &o.analysis {
            println!("     analysis: {a}");
        }
    }
    pass
}

fn main() {
    let runs = Runs { dir: tempfile::tempdir().expect("temp dir") };
    let mut passed = Vec::new();

    let (tb, tb_m) = runs.run(Kind::Testbed, "testbed", &[], 1);
    passed.push(report(1, &criterion_1(&tb, &tb_m)));
    passed.push(report(2, &criterion_2(&tb, &tb_m)));
    passed.push(report(3, &criterion_3(&tb, &tb_m)));
    let (flow, flow_m) = runs.run(Kind::Flow, "flow", &[], 1);
    passed.push(report(4, &criterion_4(&flow, &flow_m)));
    passed.push(report(5, &criterion_5()));
    passed.push(report(6, &criterion_6()));
    passed.push(report(7, &criterion_7()));
    passed.push(report(8, &criterion_8()));
    let (m, m_m) = runs.run(Kind::Mourre, "mourre", &["mourre.lambdas=[100, 1000]"], 1);
    passed.push(report(9, &criterion_9(&m, &m_m)));
    let (sweep, sweep_m) = runs.run(Kind::Sweep, "sweep_w1", &["sweep.stability=true"], 1);
    passed.push(report(10, &criterion_10(&sweep, &sweep_m)));
    let (w, w_m) = runs.run(Kind::Weights, "weights", &[], 1);
    passed.push(report(11, &criterion_11(&w, &w_m)));
    passed.push(report(12, &criterion_12(&runs, &sweep)));

    let n = passed.iter().filter(|p| **p).count();
    println!("acceptance: {n} of {} criteria pass", passed.len());
    if n != passed.len() {
        std::process::exit(1);
    }
}
