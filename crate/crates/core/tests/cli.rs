use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use robust_hedge::config::ExperimentConfig;
use robust_hedge::output::{read_jsonl, read_robustness_csv, ROBUSTNESS_CSV, ROBUSTNESS_JSONL};
use robust_hedge::paths::PathBundle;
use robust_hedge::robustness::DISTANCE_COLUMNS;

const BIN: &str = env!("CARGO_BIN_EXE_robust-hedge");

fn experiment(claim: &str, coefficients: &str, jumps: &str, extra: &str) -> String {
    format!(
        r#"
seed = 3
[model]
s0 = 1.0
{coefficients}
jumps.measure = {jumps}

[claim]
{claim}

[grid]
horizon = 1.0
n_steps = 20

[paths]
n_paths = 2000

{extra}
"#
    )
}

const FLAT_COEFFS: &str = r#"
coefficients.a = { kind = "constant", value = 0.03 }
coefficients.b = { kind = "constant", value = 0.2 }
coefficients.r = { kind = "constant", value = 0.0 }
coefficients.gamma_tilde = { kind = "constant", value = 0.3 }
"#;
const POWER_LAW: &str = r#"{ kind = "power_law", scale = 1.0, alpha = 0.5, z_min = -1.0, z_max = 1.0 }"#;
const SWEEP: &str = r#"
[sweep]
tag = "truncate_add_b"
epsilons = [0.4, 0.2, 0.1, 0.05]
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Column `name` of a CSV written by the tool, skipping `#` lines.
fn csv_column(path: &Path, name: &str) -> Vec<(String, String)> {
    let text = fs::read_to_string(path).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let idx = header.iter().position(|h| h == name).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[idx].to_string())
        })
        .collect()
}

#[test]
fn constant_claim_sweep_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &experiment(r#"payoff = "constant"
value = 1.0"#, FLAT_COEFFS, POWER_LAW, SWEEP),
    );
    let out = dir.path().join("out");
    let (code, _, err) = run(&["sweep", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let table = read_robustness_csv(&out.join(ROBUSTNESS_CSV)).unwrap();
    assert_eq!(table.rows.len(), 4);
    for row in &table.rows {
        for col in DISTANCE_COLUMNS {
            assert_eq!(row.column(col).unwrap().0, 0.0, "{col}");
        }
        assert_eq!(row.zeta_norm, 0.0);
    }
    let (code, stdout, err) = run(&["report", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("report.txt"));
}

#[test]
fn identity_claim_is_replicated_by_holding_one_share() {
    let dir = tempfile::tempdir().unwrap();
    let body = experiment(
        r#"payoff = "identity""#,
        FLAT_COEFFS,
        POWER_LAW,
        "[hedge]\nkinds = [{ tag = \"original\" }, { tag = \"truncate_add_b\", epsilon = 0.1 }]\n",
    );
    let cfg = write_config(dir.path(), "id.toml", &body);
    let out = dir.path().join("out");
    let (code, _, err) = run(&["hedge", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let chi = csv_column(&out.join("hedge.csv"), "mean_chi");
    let mut checked = 0;
    for (_, v) in chi.iter().filter(|(_, v)| !v.is_empty()) {
        let v: f64 = v.parse().unwrap();
        // Exact up to the default ridge shrinkage.
        assert!((v - 1.0).abs() < 1e-4, "mean χ = {v}");
        checked += 1;
    }
    assert_eq!(checked, 2 * 20);
}

#[test]
fn constant_claim_needs_no_stock() {
    let dir = tempfile::tempdir().unwrap();
    let body = experiment("payoff = \"constant\"\nvalue = 2.5", FLAT_COEFFS, POWER_LAW, "");
    let cfg = write_config(dir.path(), "k.toml", &body);
    let out = dir.path().join("out");
    let (code, _, err) = run(&["hedge", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    for (_, v) in csv_column(&out.join("hedge.csv"), "mean_pi").iter().filter(|(_, v)| !v.is_empty()) {
        assert!(v.parse::<f64>().unwrap().abs() < 1e-10, "π = {v}");
    }
    for (_, v) in csv_column(&out.join("hedge.csv"), "mean_value") {
        assert!((v.parse::<f64>().unwrap() - 2.5).abs() < 1e-10);
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["simulate", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    let body = experiment(r#"payoff = "call"
strike = 1.0"#, FLAT_COEFFS, POWER_LAW, "").replace("n_paths = 2000", "n_paths = 0");
    let cfg = write_config(dir.path(), "zero.toml", &body);
    let (code, _, err) = run(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("paths.n_paths"), "{err}");

    let body = experiment(r#"payoff = "call"
strike = 1.0
colour = "blue""#, FLAT_COEFFS, POWER_LAW, "");
    let cfg = write_config(dir.path(), "unknown.toml", &body);
    let (code, _, err) = run(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    let body = experiment(r#"payoff = "call"
strike = 1.0"#, FLAT_COEFFS, POWER_LAW, "");
    let cfg = write_config(dir.path(), "nosweep.toml", &body);
    let (code, _, err) = run(&["sweep", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("sweep"), "{err}");
}

#[test]
fn simulate_dump_round_trips_and_stays_a_martingale_without_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = FLAT_COEFFS.replace("value = 0.03", "value = 0.0").replace("value = 0.3", "value = 0.0");
    let body = experiment(r#"payoff = "identity""#, &coeffs, POWER_LAW, "").replace("n_paths = 2000", "n_paths = 20000");
    let cfg = write_config(dir.path(), "bm.toml", &body);
    let out = dir.path().join("out");
    let (code, _, err) = run(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");

    let bundle = PathBundle::read_dump(fs::File::open(out.join("paths.bin")).unwrap()).unwrap();
    assert_eq!(bundle.n_paths(), 20000);
    let mut again = Vec::new();
    bundle.write_dump(&mut again).unwrap();
    assert_eq!(again, fs::read(out.join("paths.bin")).unwrap());

    let mean = csv_column(&out.join("simulate.csv"), "mean_discounted");
    let se = csv_column(&out.join("simulate.csv"), "se_discounted");
    let (m, s): (f64, f64) = (mean.last().unwrap().1.parse().unwrap(), se.last().unwrap().1.parse().unwrap());
    assert!((m - 1.0).abs() < 4.0 * s, "mean S̃(T) = {m} ± {s}");
}

#[test]
fn report_rejects_tampered_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let body = experiment(r#"payoff = "call"
strike = 1.0"#, FLAT_COEFFS, POWER_LAW, SWEEP);
    let cfg = write_config(dir.path(), "s.toml", &body);
    let out = dir.path().join("out");
    // Small runs may fail a flag; the artifacts are written either way.
    let (code, _, _) = run(&["sweep", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(code == 0 || code == 4);

    let records = read_jsonl(&out.join(ROBUSTNESS_JSONL)).unwrap();
    assert_eq!(records[0]["record"], "metadata");
    let sha = ExperimentConfig::load(&cfg).unwrap().sha256;
    assert_eq!(records[0]["config_sha256"], sha.as_str());

    let csv_path = out.join(ROBUSTNESS_CSV);
    let text = fs::read_to_string(&csv_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let header_at = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    let v_col = lines[header_at].split(',').position(|c| c == "v_dist").unwrap();
    let last = lines.len() - 1;
    let mut cells: Vec<String> = lines[last].split(',').map(String::from).collect();
    cells[v_col] = "1e3".into();
    lines[last] = cells.join(",");
    fs::write(&csv_path, lines.join("\n") + "\n").unwrap();

    let (code, _, err) = run(&["report", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn seed_override_changes_the_run_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let body = experiment(r#"payoff = "call"
strike = 1.0"#, FLAT_COEFFS, POWER_LAW, "");
    let cfg = write_config(dir.path(), "s.toml", &body);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&["simulate", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run(&["simulate", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "99"]);
    let (ta, tb) = (
        fs::read_to_string(a.join("simulate.csv")).unwrap(),
        fs::read_to_string(b.join("simulate.csv")).unwrap(),
    );
    assert!(ta.contains("# seed=3"));
    assert!(tb.contains("# seed=99"));
    assert_ne!(ta.lines().last(), tb.lines().last());
}

#[test]
fn stress_scenario_fails_stability_with_warnings() {
    let cfg = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/stress.toml"));
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["sweep", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("stable"), "{err}");
    let records = read_jsonl(&dir.path().join(ROBUSTNESS_JSONL)).unwrap();
    let flags = records.iter().find(|r| r["record"] == "flags").unwrap();
    assert_eq!(flags["stable"], false);
    assert_eq!(flags["trusted"], false);
    let diag = records.iter().find(|r| r["record"] == "diagnostics").unwrap();
    assert!(diag.to_string().contains("Lipschitz"), "{diag}");
}
