//! CSV and JSON-lines writers for the plotting and reporting side.
//!
//! Every CSV starts with `#`-prefixed `key=value` metadata rows (tool
//! version, config hash, seed) followed by a header row. Floats use the
//! shortest representation that round-trips, so identical runs produce
//! identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hedging::HedgeResult;
use crate::paths::PathBundle;
use crate::robustness::{RobustnessReport, SweepRow, DISTANCE_COLUMNS};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const ROBUSTNESS_CSV: &str = "robustness.csv";
pub const ROBUSTNESS_JSONL: &str = "robustness.jsonl";
pub const HEDGE_CSV: &str = "hedge.csv";
pub const HEDGE_JSONL: &str = "hedge.jsonl";
pub const STRUCTURE_JSON: &str = "structure.json";
pub const SIMULATE_CSV: &str = "simulate.csv";
pub const PATHS_DUMP: &str = "paths.bin";
pub const REPORT_TXT: &str = "report.txt";

/// Provenance stamped on every output file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub command: String,
}

impl Metadata {
    pub fn new(config_sha256: &str, seed: u64, command: &str) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_sha256: config_sha256.into(),
            seed,
            command: command.into(),
        }
    }

    fn rows(&self) -> String {
        format!(
            "# tool={}\n# version={}\n# config_sha256={}\n# seed={}\n# command={}\n",
            self.tool, self.version, self.config_sha256, self.seed, self.command
        )
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        x.to_string().to_lowercase()
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes metadata, extra `#` notes, a header and the rows.
pub fn write_csv(
    path: &Path,
    meta: &Metadata,
    notes: &[(String, String)],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut buf = meta.rows().into_bytes();
    for (k, v) in notes {
        buf.extend_from_slice(format!("# {k}={v}\n").as_bytes());
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r).map_err(csv_error)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fs::write(path, buf)?;
    Ok(())
}

/// One JSON object per line, the metadata first. Each record gets a
/// `record` discriminator.
pub fn write_jsonl(path: &Path, meta: &Metadata, records: &[(&str, serde_json::Value)]) -> Result<()> {
    let mut f = Vec::new();
    let mut line = |record: &str, body: serde_json::Value| -> Result<()> {
        let mut obj = serde_json::Map::new();
        obj.insert("record".into(), record.into());
        match body {
            serde_json::Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("value".into(), other);
            }
        }
        writeln!(f, "{}", serde_json::Value::Object(obj))?;
        Ok(())
    };
    line("metadata", to_value(meta))?;
    for (r, v) in records {
        line(r, v.clone())?;
    }
    fs::write(path, f)?;
    Ok(())
}

pub fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("records serialize")
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

pub const SIMULATE_HEADER: [&str; 6] = [
    "kind",
    "node",
    "t",
    "mean_discounted",
    "sd_discounted",
    "se_discounted",
];

/// Per-kind, per-node moments of the simulated discounted prices.
pub fn write_simulate_summary(path: &Path, meta: &Metadata, bundle: &PathBundle) -> Result<()> {
    let grid = bundle.grid();
    let np = bundle.n_paths();
    let mut rows = Vec::new();
    for kind in bundle.kinds() {
        let kp = bundle.kind(kind)?;
        for k in 0..grid.n_nodes() {
            let (m, sd) = mean_sd(bundle.price(kp, k));
            rows.push(vec![
                kind.to_string(),
                k.to_string(),
                fmt_f64(grid.node(k)),
                fmt_f64(m),
                fmt_f64(sd),
                fmt_f64(sd / (np as f64).sqrt()),
            ]);
        }
    }
    let notes = vec![
        ("n_paths".to_string(), np.to_string()),
        ("excluded".to_string(), bundle.excluded().to_string()),
        ("mean_jump_count".to_string(), fmt_f64(bundle.mean_jump_count())),
    ];
    write_csv(path, meta, &notes, &SIMULATE_HEADER, &rows)
}

pub const HEDGE_HEADER: [&str; 14] = [
    "kind",
    "node",
    "t",
    "mean_value",
    "sd_value",
    "mean_pi",
    "sd_pi",
    "mean_chi",
    "mean_phi",
    "sd_phi",
    "mean_cost",
    "mean_upsilon",
    "orth_residual",
    "orth_stderr",
];

/// Node-wise path averages of a hedge. Step quantities (π, χ, Υ and the
/// orthogonality residual) are left empty at the final node.
pub fn hedge_rows(h: &HedgeResult) -> Vec<Vec<String>> {
    let grid = &h.solution.grid;
    let np = h.n_paths();
    let n = grid.n_steps();
    let node = |v: &[f64], k: usize| mean_sd(&v[k * np..(k + 1) * np]);
    let step = |v: &[f64], k: usize, sd: bool| {
        if k < n {
            let (m, s) = node(v, k);
            fmt_f64(if sd { s } else { m })
        } else {
            String::new()
        }
    };
    (0..=n)
        .map(|k| {
            let (mv, sv) = node(h.value(), k);
            let (mp, sp) = node(&h.phi, k);
            vec![
                h.kind.to_string(),
                k.to_string(),
                fmt_f64(grid.node(k)),
                fmt_f64(mv),
                fmt_f64(sv),
                step(&h.pi, k, false),
                step(&h.pi, k, true),
                step(&h.chi, k, false),
                fmt_f64(mp),
                fmt_f64(sp),
                fmt_f64(node(&h.cost, k).0),
                step(&h.upsilon, k, false),
                if k < n { fmt_f64(h.orth_residual[k]) } else { String::new() },
                if k < n { fmt_f64(h.orth_stderr[k]) } else { String::new() },
            ]
        })
        .collect()
}

pub fn robustness_header() -> Vec<&'static str> {
    let mut h = vec!["epsilon", "g2"];
    for c in DISTANCE_COLUMNS {
        h.push(c);
        h.push(se_column(c));
    }
    h
}

fn se_column(c: &str) -> &'static str {
    match c {
        "claim_dist" => "claim_se",
        "v_dist" => "v_se",
        "pi_dist" => "pi_se",
        "phi_dist" => "phi_se",
        "cost_dist" => "cost_se",
        "upsilon_dist" => "upsilon_se",
        _ => "zeta_se",
    }
}

pub fn write_robustness(dir: &Path, meta: &Metadata, report: &RobustnessReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![fmt_f64(r.epsilon), fmt_f64(r.g2)];
            for c in DISTANCE_COLUMNS {
                let (d, se) = r.column(c).unwrap();
                v.push(fmt_f64(d));
                v.push(fmt_f64(se));
            }
            v
        })
        .collect();
    let notes = vec![
        ("tag".to_string(), report.tag.to_string()),
        ("n_paths".to_string(), report.n_paths.to_string()),
        ("excluded".to_string(), report.excluded.to_string()),
    ];
    write_csv(&dir.join(ROBUSTNESS_CSV), meta, &notes, &robustness_header(), &rows)?;

    let mut records: Vec<(&str, serde_json::Value)> = Vec::new();
    records.extend(report.slopes.iter().map(|s| ("slope", to_value(s))));
    records.extend(report.certificates.iter().map(|c| ("certificate", to_value(c))));
    records.push(("zeta", to_value(&report.zeta)));
    records.push(("mvh", to_value(&report.mvh)));
    records.push((
        "diagnostics",
        serde_json::json!({
            "tag": report.tag,
            "n_paths": report.n_paths,
            "excluded": report.excluded,
            "monotone_violations": report.monotone_violations,
            "warnings": report.warnings,
        }),
    ));
    let mut flags = to_value(&report.flags);
    flags["pass"] = report.flags.all().into();
    records.push(("flags", flags));
    write_jsonl(&dir.join(ROBUSTNESS_JSONL), meta, &records)
}

/// A robustness CSV read back: its metadata and rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessTable {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<SweepRow>,
}

pub fn read_robustness_csv(path: &Path) -> Result<RobustnessTable> {
    let text = fs::read_to_string(path)?;
    let metadata = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].trim().split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Report(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected = robustness_header();
    if let Some(missing) = expected.iter().find(|c| !header.iter().any(|h| h == *c)) {
        return Err(Error::Report(format!("column `{missing}` is missing from {}", path.display())));
    }
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Report(e.to_string()))?;
        let get = |name: &str| -> Result<f64> {
            rec.get(col(name))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Report(format!("row {}: bad value in `{name}`", i + 1)))
        };
        rows.push(SweepRow {
            epsilon: get("epsilon")?,
            g2: get("g2")?,
            claim_dist: get("claim_dist")?,
            claim_se: get("claim_se")?,
            v_dist: get("v_dist")?,
            v_se: get("v_se")?,
            pi_dist: get("pi_dist")?,
            pi_se: get("pi_se")?,
            phi_dist: get("phi_dist")?,
            phi_se: get("phi_se")?,
            cost_dist: get("cost_dist")?,
            cost_se: get("cost_se")?,
            upsilon_dist: get("upsilon_dist")?,
            upsilon_se: get("upsilon_se")?,
            zeta_norm: get("zeta_norm")?,
            zeta_se: get("zeta_se")?,
        });
    }
    Ok(RobustnessTable { metadata, rows })
}

/// JSON-lines records, keyed by their `record` field.
pub fn read_jsonl(path: &Path) -> Result<Vec<serde_json::Value>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Report(format!("{}: {e}", path.display()))))
        .collect()
}
