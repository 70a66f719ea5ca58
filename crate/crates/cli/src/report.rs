//! Summary document and plot data for a run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::Kind;
use crate::output::{fmt_f64, write_atomic, Criterion, Manifest, MANIFEST};

/// Names of the acceptance criteria, by id.
pub const CRITERIA: [(u32, &str); 12] = [
    (1, "abstract identities"),
    (2, "scalar weight and recurrence"),
    (3, "differential inequality"),
    (4, "flow/group"),
    (5, "commutators"),
    (6, "a_k derivative bounds"),
    (7, "semiclassical estimate"),
    (8, "Helffer-Sjostrand calculus"),
    (9, "Mourre positivity"),
    (10, "scaling"),
    (11, "weight facts"),
    (12, "determinism"),
];

struct Run {
    manifest: Manifest,
    summary: Value,
    dir: PathBuf,
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load(dir: &Path, kind: Kind) -> Result<Option<Run>, String> {
    let run_dir = dir.join(kind.name());
    if !run_dir.is_dir() {
        return Ok(None);
    }
    let path = run_dir.join(MANIFEST);
    if !path.is_file() {
        return Err(format!("incomplete run directory: {} has no manifest", run_dir.display()));
    }
    let manifest: Manifest =
        serde_json::from_value(read_json(&path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    for out in &manifest.outputs {
        if !run_dir.join(out).is_file() {
            return Err(format!("incomplete run directory: {} lists missing output {out}", path.display()));
        }
    }
    let summary_path = run_dir.join(format!("{}.json", kind.name()));
    let summary = if summary_path.is_file() { read_json(&summary_path)? } else { Value::Null };
    Ok(Some(Run { manifest, summary, dir: run_dir }))
}

fn num(v: &Value) -> String {
    v.as_f64().map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"))
}

fn write_series(dir: &Path, name: &str, points: &[(f64, f64)], files: &mut Vec<String>) -> Result<(), String> {
    let mut text = String::new();
    for (x, y) in points {
        let _ = writeln!(text, "{} {}", fmt_f64(*x), fmt_f64(*y));
    }
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    write_atomic(&dir.join(name), text.as_bytes()).map_err(|e| e.to_string())?;
    files.push(format!("plots/{name}"));
    Ok(())
}

fn flow_series(run: &Run) -> Result<BTreeMap<String, Vec<(f64, f64)>>, String> {
    let path = run.dir.join("flow.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| cells.get(i).and_then(|c| c.parse::<f64>().ok());
        if let (Some(t), Some(r), Some(g)) = (parse(0), parse(1), parse(2)) {
            out.entry(format!("{t}")).or_default().push((r, g));
        }
    }
    Ok(out)
}

fn with_results(runs: &BTreeMap<Kind, Run>, kind: Kind) -> Option<&Run> {
    runs.get(&kind).filter(|r| !r.summary.is_null())
}

fn missing(runs: &BTreeMap<Kind, Run>, kind: Kind) -> String {
    match runs.get(&kind) {
        Some(r) => format!("no results (status {:?})\n", r.manifest.status),
        None => "absent\n".to_string(),
    }
}

/// Writes `<dir>/report.md` and `<dir>/plots/*.dat`; returns the report path.
pub fn report(dir: &Path) -> Result<PathBuf, String> {
    let mut runs = BTreeMap::new();
    for kind in Kind::EXPERIMENTS {
        if let Some(run) = load(dir, kind)? {
            runs.insert(kind, run);
        }
    }
    if runs.is_empty() {
        return Err(format!("incomplete run directory: no runs under {}", dir.display()));
    }
    let plots = dir.join("plots");
    let mut files = Vec::new();
    let mut md = String::new();
    let _ = writeln!(md, "# Run report\n\nDirectory: `{}`\n", dir.display());
    let _ = writeln!(md, "## Runs\n\n| kind | status | wall time (s) | config hash | outputs |\n|---|---|---|---|---|");
    for kind in Kind::EXPERIMENTS {
        match runs.get(&kind) {
            Some(r) => {
                let m = &r.manifest;
                let _ = writeln!(
                    md,
                    "| {} | {:?} | {:.1} | {} | {} |",
                    kind.name(),
                    m.status,
                    m.wall_seconds,
                    m.config_hash.as_deref().map_or("-", |h| &h[..12.min(h.len())]),
                    m.outputs.join(", ")
                );
            }
            None => {
                let _ = writeln!(md, "| {} | absent | | | |", kind.name());
            }
        }
    }

    let _ = writeln!(md, "\n## Spectrum\n");
    match with_results(&runs, Kind::Spectrum) {
        Some(r) => {
            let s = &r.summary;
            let _ = writeln!(md, "{}: {} distinct eigenvalues, total multiplicity {}.", s["cross_section"].as_str().unwrap_or("-"), s["modes"], s["total_multiplicity"]);
        }
        None => md.push_str(&missing(&runs, Kind::Spectrum)),
    }

    let _ = writeln!(md, "\n## Scaling sweep\n");
    match with_results(&runs, Kind::Sweep) {
        Some(r) => {
            let s = &r.summary;
            let fit = &s["fit"];
            let _ = writeln!(
                md,
                "Fit `log N = p log lambda + q log log lambda + log C`: p = {}, q = {}, C = {}, rms residual {}.\n",
                num(&fit["p"]),
                num(&fit["q"]),
                num(&fit["C"]),
                num(&fit["residual"])
            );
            let _ = writeln!(
                md,
                "Bound `N(lambda) <= C' (log lambda)^{} rho(lambda)`: C' = {}; verdict: {}.\n",
                fit["bound_exponent"],
                num(&fit["Cprime"]),
                if fit["pass"].as_bool() == Some(true) { "holds" } else { "fails" }
            );
            let _ = writeln!(md, "| lambda | grid points | N | argmax k |\n|---|---|---|---|");
            let mut series = Vec::new();
            for row in s["lambdas"].as_array().into_iter().flatten() {
                let _ = writeln!(md, "| {} | {} | {} | {} |", num(&row["lambda"]), row["grid_points"], num(&row["n"]), row["argmax_k"]);
                if let (Some(l), Some(n)) = (row["lambda"].as_f64(), row["n"].as_f64()) {
                    series.push((l, n));
                }
            }
            write_series(&plots, "n_lambda.dat", &series, &mut files)?;
            if let Some(st) = s["stability"].as_object() {
                let _ = writeln!(
                    md,
                    "\nC' under 2x grid refinement: {} ({:+.1}%); under 2x absorbing strength: {} ({:+.1}%).",
                    num(&st["refined_Cprime"]),
                    100.0 * st["refined_change"].as_f64().unwrap_or(f64::NAN),
                    num(&st["cap_x2_Cprime"]),
                    100.0 * st["cap_x2_change"].as_f64().unwrap_or(f64::NAN)
                );
            }
        }
        None => md.push_str(&missing(&runs, Kind::Sweep)),
    }

    let _ = writeln!(md, "\n## Positive commutator\n");
    match with_results(&runs, Kind::Mourre) {
        Some(r) => {
            let names = ["r_inverse", "chi_r_minus_one", "one_minus_xi_tilde_sq", "s_inverse", "lambda_inverse"];
            let _ = writeln!(md, "| lambda | C | min_eig_ratio | {} |\n|---|---|---|{}", names.join(" | "), "---|".repeat(names.len()));
            let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
            for rep in r.summary["results"].as_array().into_iter().flatten() {
                let d = &rep["deficits"];
                let cells: Vec<String> = names.iter().map(|n| num(&d[*n])).collect();
                let _ = writeln!(md, "| {} | {} | {} | {} |", num(&rep["lambda"]), num(&rep["C"]), num(&rep["min_eig_ratio"]), cells.join(" | "));
                for n in names {
                    if let (Some(l), Some(v)) = (rep["lambda"].as_f64(), d[n].as_f64()) {
                        series.entry(n).or_default().push((l, v));
                    }
                }
            }
            for (n, pts) in series {
                write_series(&plots, &format!("deficit_{n}.dat"), &pts, &mut files)?;
            }
        }
        None => md.push_str(&missing(&runs, Kind::Mourre)),
    }

    let _ = writeln!(md, "\n## Conjugate flow\n");
    match with_results(&runs, Kind::Flow) {
        Some(r) => {
            let s = &r.summary;
            let _ = writeln!(
                md,
                "Linear-region error {}, unitarity order {}, group-law defect {}.",
                num(&s["linear_region_error"]),
                num(&s["unitarity_order"]),
                num(&s["group_law_defect"])
            );
            for (t, pts) in flow_series(r)? {
                write_series(&plots, &format!("flow_t{t}.dat"), &pts, &mut files)?;
            }
        }
        None => md.push_str(&missing(&runs, Kind::Flow)),
    }

    let _ = writeln!(md, "\n## Testbed violations\n");
    match with_results(&runs, Kind::Testbed) {
        Some(r) => {
            let mut rows = Vec::new();
            for (suite, rep) in r.summary["suites"].as_object().into_iter().flatten() {
                for (check, count) in rep["violations"].as_object().into_iter().flatten() {
                    if count.as_u64() != Some(0) {
                        rows.push(format!("| {suite} | {check} | {count} |"));
                    }
                }
            }
            for sw in r.summary["scalar_weight"].as_array().into_iter().flatten() {
                let v = &sw["report"]["violations"];
                if v.as_u64() != Some(0) {
                    rows.push(format!("| scalar_weight | s = {} | {v} |", sw["s"]));
                }
            }
            let _ = writeln!(md, "| suite | check | violations |\n|---|---|---|");
            if rows.is_empty() {
                md.push_str("| (none) | | 0 |\n");
            } else {
                md.push_str(&rows.join("\n"));
                md.push('\n');
            }
        }
        None => md.push_str(&missing(&runs, Kind::Testbed)),
    }

    let _ = writeln!(md, "\n## Weights\n");
    match with_results(&runs, Kind::Weights) {
        Some(r) => {
            let s = &r.summary;
            let _ = writeln!(
                md,
                "Unboundedness exponent {}; temperate violations {} of {}.",
                num(&s["unboundedness"]["fitted_exponent"]),
                s["temperate"]["violations"],
                s["temperate"]["samples"]
            );
        }
        None => md.push_str(&missing(&runs, Kind::Weights)),
    }

    let mut evaluated: BTreeMap<u32, Criterion> = BTreeMap::new();
    for r in runs.values() {
        let list: Vec<Criterion> = serde_json::from_value(r.summary["criteria"].clone()).unwrap_or_default();
        for c in list {
            evaluated.insert(c.id, c);
        }
    }
    let _ = writeln!(md, "\n## Acceptance criteria\n\n| # | criterion | status | detail |\n|---|---|---|---|");
    for (id, name) in CRITERIA {
        match evaluated.get(&id) {
            Some(c) => {
                let _ = writeln!(md, "| {id} | {name} | {} | {} |", if c.pass { "PASS" } else { "FAIL" }, c.detail.replace('|', "/"));
            }
            None => {
                let _ = writeln!(md, "| {id} | {name} | not evaluated | |");
            }
        }
    }
    if !files.is_empty() {
        let _ = writeln!(md, "\n## Plot data\n");
        for f in &files {
            let _ = writeln!(md, "- `{f}`");
        }
    }
    let path = dir.join("report.md");
    write_atomic(&path, md.as_bytes()).map_err(|e| e.to_string())?;
    Ok(path)
}
