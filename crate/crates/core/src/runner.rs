//! The four batch commands behind the `robust-hedge` binary.
//!
//! Each command reads one experiment file, writes its artifacts into the
//! output directory and returns the list of files written. Only `--seed`
//! and `--out` may override the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{ExperimentConfig, LoadedConfig};
use crate::error::{Error, Result};
use crate::hedging::{hedge, shortfall, HedgeResult};
use crate::market::{check_structure, KindParams};
use crate::output::{self, Metadata};
use crate::paths::{simulate, PathBundle};
use crate::robustness::{fit_slopes, run_sweep, RobustnessReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Hedge,
    Sweep,
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Hedge => "hedge",
            Command::Sweep => "sweep",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Context {
    config: ExperimentConfig,
    out: PathBuf,
    meta: Metadata,
}

fn context(loaded: &LoadedConfig, opts: &RunOptions, command: Command) -> Result<Context> {
    let mut config = loaded.config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let out = opts.out.clone().unwrap_or_else(|| config.output_dir.clone());
    fs::create_dir_all(&out)?;
    let meta = Metadata::new(&loaded.sha256, config.seed, command.name());
    Ok(Context { config, out, meta })
}

pub fn run(command: Command, loaded: &LoadedConfig, opts: &RunOptions) -> Result<Outcome> {
    match command {
        Command::Simulate => cmd_simulate(loaded, opts),
        Command::Hedge => cmd_hedge(loaded, opts),
        Command::Sweep => cmd_sweep(loaded, opts),
        Command::Report => cmd_report(loaded, opts),
    }
}

fn simulate_config(ctx: &Context) -> Result<PathBundle> {
    let c = &ctx.config;
    simulate(&c.model()?, &c.hedge.kinds, &c.time_grid()?, c.paths.n_paths, &c.sim())
}

/// Simulates the configured variants; writes the binary path dump and
/// node-wise price moments.
pub fn cmd_simulate(loaded: &LoadedConfig, opts: &RunOptions) -> Result<Outcome> {
    let ctx = context(loaded, opts, Command::Simulate)?;
    let bundle = simulate_config(&ctx)?;
    let dump = ctx.out.join(output::PATHS_DUMP);
    bundle.write_dump(std::io::BufWriter::new(fs::File::create(&dump)?))?;
    let csv = ctx.out.join(output::SIMULATE_CSV);
    output::write_simulate_summary(&csv, &ctx.meta, &bundle)?;
    Ok(Outcome {
        files: vec![dump, csv],
        summary: format!(
            "simulated {} paths ({} excluded), {} variant(s)",
            bundle.n_paths(),
            bundle.excluded(),
            bundle.kinds().count()
        ),
    })
}

fn hedge_record(h: &HedgeResult, bundle: &PathBundle) -> Result<serde_json::Value> {
    let v0 = h.value_at_zero();
    let sf = |a: Option<&[f64]>| shortfall(bundle, h.kind, &h.terminal, v0, a);
    let orth_max = h.orth_residual.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let orth_z = h
        .orth_residual
        .iter()
        .zip(&h.orth_stderr)
        .map(|(r, s)| if *s > 0.0 { r.abs() / s } else if *r == 0.0 { 0.0 } else { f64::INFINITY })
        .fold(0.0, f64::max);
    Ok(json!({
        "kind": h.kind.to_string(),
        "n_paths": h.n_paths(),
        "v0": v0,
        "beta": h.solution.beta,
        "lipschitz": h.solution.lipschitz,
        "picard_iterations": h.solution.picard.len(),
        "shortfall_upsilon": sf(Some(&h.upsilon))?,
        "shortfall_pi": sf(Some(&h.pi))?,
        "shortfall_zero": sf(None)?,
        "orth_max_abs": orth_max,
        "orth_max_z": orth_z,
    }))
}

/// Solves and hedges every configured variant; fails fast on hard
/// structure errors and records soft warnings.
pub fn cmd_hedge(loaded: &LoadedConfig, opts: &RunOptions) -> Result<Outcome> {
    let ctx = context(loaded, opts, Command::Hedge)?;
    let c = &ctx.config;
    let model = c.model()?;
    let grid = c.time_grid()?;
    let sim = c.sim();
    let diagnostics = c
        .hedge
        .kinds
        .iter()
        .map(|&k| {
            let p = KindParams::resolve(&model, k, sim.reference_epsilon)?;
            check_structure(&model, &p, &grid, &c.structure)
        })
        .collect::<Result<Vec<_>>>()?;
    let bundle = simulate_config(&ctx)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &kind in &c.hedge.kinds {
        let h = hedge(&bundle, kind, &c.claim, &c.solver)?;
        rows.extend(output::hedge_rows(&h));
        records.push(("hedge", hedge_record(&h, &bundle)?));
    }
    let csv = ctx.out.join(output::HEDGE_CSV);
    let notes = vec![
        ("n_paths".to_string(), bundle.n_paths().to_string()),
        ("excluded".to_string(), bundle.excluded().to_string()),
    ];
    output::write_csv(&csv, &ctx.meta, &notes, &output::HEDGE_HEADER, &rows)?;
    let jsonl = ctx.out.join(output::HEDGE_JSONL);
    output::write_jsonl(&jsonl, &ctx.meta, &records)?;
    let structure = ctx.out.join(output::STRUCTURE_JSON);
    let doc = json!({ "metadata": ctx.meta, "diagnostics": diagnostics });
    fs::write(&structure, serde_json::to_string_pretty(&doc).expect("diagnostics serialize") + "\n")?;
    let warnings: usize = diagnostics.iter().map(|d| d.warnings.len()).sum();
    Ok(Outcome {
        files: vec![csv, jsonl, structure],
        summary: format!(
            "hedged {} variant(s) on {} paths; {warnings} structure warning(s)",
            c.hedge.kinds.len(),
            bundle.n_paths()
        ),
    })
}

fn failure_message(report: &RobustnessReport) -> Option<String> {
    let flag = report.flags.first_failure()?;
    let detail = match flag {
        "certificates" => report
            .certificates
            .iter()
            .find(|c| !c.holds)
            .map(|c| format!("bound on {} violated", c.quantity)),
        "stable" => report
            .certificates
            .iter()
            .find(|c| !c.stable)
            .map(|c| format!("bound on {} moved by {:.3} under halving the paths", c.quantity, c.drift.unwrap_or(f64::NAN))),
        "rates" => Some("slopes of v_dist / pi_dist outside the tolerance".into()),
        "monotone" => report.monotone_violations.first().cloned(),
        "zeta" => Some("zeta norm does not vanish with epsilon".into()),
        "trusted" => report.warnings.first().cloned(),
        _ => None,
    };
    Some(match detail {
        Some(d) => format!("{flag}: {d}"),
        None => flag.to_string(),
    })
}

/// Runs the configured ε-sweep. Artifacts are written even when a check
/// fails; the failure is then returned as a certificate error.
pub fn cmd_sweep(loaded: &LoadedConfig, opts: &RunOptions) -> Result<Outcome> {
    let ctx = context(loaded, opts, Command::Sweep)?;
    let sweep = ctx.config.epsilon_sweep()?;
    let report = run_sweep(&sweep)?;
    output::write_robustness(&ctx.out, &ctx.meta, &report)?;
    if let Some(msg) = failure_message(&report) {
        return Err(Error::Certificate(msg));
    }
    Ok(Outcome {
        files: vec![ctx.out.join(output::ROBUSTNESS_CSV), ctx.out.join(output::ROBUSTNESS_JSONL)],
        summary: format!("sweep over {} levels passed all checks", report.rows.len()),
    })
}

/// Rereads the sweep artifacts, recomputes slopes and bound ratios from the
/// CSV and writes a plain-text summary.
pub fn cmd_report(loaded: &LoadedConfig, opts: &RunOptions) -> Result<Outcome> {
    let ctx = context(loaded, opts, Command::Report)?;
    summarize(&ctx.out)
}

/// Rechecks a sweep directory and writes `report.txt` into it.
pub fn summarize(dir: &Path) -> Result<Outcome> {
    let table = output::read_robustness_csv(&dir.join(output::ROBUSTNESS_CSV))?;
    let records = output::read_jsonl(&dir.join(output::ROBUSTNESS_JSONL))?;
    let of = |kind: &'static str| records.iter().filter(move |r| r["record"] == kind);
    let mut text = String::new();
    let meta = |k: &str| {
        table
            .metadata
            .iter()
            .find(|(key, _)| key == k)
            .map_or("?", |(_, v)| v.as_str())
    };
    text += &format!(
        "sweep {} on {} paths (config {}, seed {})\n\n",
        meta("tag"),
        meta("n_paths"),
        meta("config_sha256"),
        meta("seed")
    );
    text += &format!("{:>8} {:>11} {:>11} {:>11} {:>11}\n", "epsilon", "G2", "claim", "v", "pi");
    for r in &table.rows {
        text += &format!(
            "{:>8} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}\n",
            r.epsilon, r.g2, r.claim_dist, r.v_dist, r.pi_dist
        );
    }

    let mut problems = Vec::new();
    text += "\nslopes (recomputed from the CSV)\n";
    for fit in fit_slopes(&table.rows) {
        let stored = of("slope").find(|s| s["column"] == fit.column.as_str());
        for (key, ours) in [("slope_vs_claim", fit.slope_vs_claim), ("slope_vs_rate", fit.slope_vs_rate)] {
            let theirs = stored.and_then(|s| s[key].as_f64());
            if let (Some(a), Some(b)) = (ours, theirs) {
                if (a - b).abs() > 1e-6 {
                    problems.push(format!("{} {key}: CSV gives {a}, JSON-lines {b}", fit.column));
                }
            } else if ours.is_some() != theirs.is_some() {
                problems.push(format!("{} {key}: present in only one artifact", fit.column));
            }
        }
        let show = |s: Option<f64>| s.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        text += &format!(
            "  {:<13} vs claim {:>7}   vs claim+G² {:>7}\n",
            fit.column,
            show(fit.slope_vs_claim),
            show(fit.slope_vs_rate)
        );
    }

    text += "\nbounds\n";
    for cert in of("certificate") {
        let q = cert["quantity"].as_str().unwrap_or("?");
        let (c, cp) = (cert["c"].as_f64().unwrap_or(f64::NAN), cert["c_prime"].as_f64().unwrap_or(f64::NAN));
        let worst = table
            .rows
            .iter()
            .map(|r| {
                let d = r.column(q).map_or(f64::NAN, |x| x.0);
                if d == 0.0 { 0.0 } else { d / (c * r.claim_dist + cp * r.g2) }
            })
            .fold(0.0, f64::max);
        if !(worst <= 1.0 + 1e-12) {
            problems.push(format!("bound on {q} has ratio {worst}"));
        }
        text += &format!(
            "  {q:<13} {:<16} C = {c:.4e}  C' = {cp:.4e}  max ratio {worst:.4}  drift {}\n",
            cert["bound"].as_str().unwrap_or(""),
            cert["drift"].as_f64().map_or("n/a".into(), |d| format!("{d:.3}"))
        );
    }

    let flags = of("flags")
        .next()
        .ok_or_else(|| Error::Report("no flags record in the JSON-lines file".into()))?;
    text += "\nchecks\n";
    for key in ["monotone", "rates", "certificates", "stable", "zeta", "trusted"] {
        let ok = flags[key].as_bool() == Some(true);
        text += &format!("  {key:<13} {}\n", if ok { "pass" } else { "FAIL" });
        if !ok {
            problems.push(format!("check `{key}` failed"));
        }
    }
    if let Some(mvh) = of("mvh").next() {
        text += &format!(
            "\nterminal shortfall: Υ {:.6e}  π {:.6e}  none {:.6e}\n",
            mvh["upsilon"].as_f64().unwrap_or(f64::NAN),
            mvh["pi"].as_f64().unwrap_or(f64::NAN),
            mvh["zero"].as_f64().unwrap_or(f64::NAN)
        );
    }
    let path = dir.join(output::REPORT_TXT);
    fs::write(&path, &text)?;
    if let Some(first) = problems.first() {
        return Err(Error::Certificate(first.clone()));
    }
    Ok(Outcome {
        files: vec![path],
        summary: text,
    })
}
