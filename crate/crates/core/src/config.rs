//! TOML experiment files.
//!
//! ```toml
//! seed = 2024
//! output_dir = "out/atm-call"
//!
//! [model]
//! s0 = 1.0
//! coefficients.a = { kind = "constant", value = 0.03 }
//! coefficients.b = { kind = "constant", value = 0.2 }
//! coefficients.r = { kind = "constant", value = 0.01 }
//! coefficients.gamma_tilde = { kind = "constant", value = 0.3 }
//! jumps.measure = { kind = "power_law", scale = 1.0, alpha = 0.5, z_min = -1.0, z_max = 1.0 }
//!
//! [claim]
//! payoff = "call"
//! strike = 1.0
//!
//! [grid]
//! horizon = 1.0
//! n_steps = 50
//!
//! [paths]
//! n_paths = 10000
//!
//! [sweep]
//! tag = "truncate_add_b"
//! epsilons = [0.4, 0.2, 0.1, 0.05, 0.025]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bsdej::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::hedging::ContingentClaim;
use crate::market::{
    ApproximationKind, CoefficientSpec, JumpSpec, KindTag, MarkFactor, MarketModel, Measure,
    StructureLimits,
};
use crate::paths::SimConfig;
use crate::robustness::{EpsilonSweep, FitOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub model: ModelSection,
    pub claim: ContingentClaim,
    pub grid: GridSection,
    pub paths: PathsSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub hedge: HedgeSection,
    #[serde(default)]
    pub structure: StructureLimits,
    pub sweep: Option<SweepSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub s0: f64,
    pub coefficients: CoefficientSpec,
    pub jumps: JumpsSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpsSection {
    pub measure: Measure,
    #[serde(default = "identity")]
    pub mark_factor: MarkFactor,
}

fn identity() -> MarkFactor {
    MarkFactor::Identity
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub n_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub n_paths: usize,
    pub block_size: Option<usize>,
    pub reference_epsilon: Option<f64>,
    pub max_excluded_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedgeSection {
    /// Variants hedged by `hedge`; `{ tag = "original" }` needs no epsilon.
    pub kinds: Vec<ApproximationKind>,
}

impl Default for HedgeSection {
    fn default() -> Self {
        Self {
            kinds: vec![ApproximationKind::ORIGINAL],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub tag: KindTag,
    pub epsilons: Vec<f64>,
    #[serde(default = "yes")]
    pub stability_check: bool,
    #[serde(default)]
    pub fit: FitOptions,
}

fn yes() -> bool {
    true
}

/// Parsed configuration plus the hash of the text it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    /// Parses TOML; syntax and type errors carry the line and key.
    pub fn from_toml(text: &str) -> Result<LoadedConfig> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or("<document>".to_string(), |span| {
                let line = text[..span.start].matches('\n').count() + 1;
                let src = text.lines().nth(line - 1).unwrap_or("");
                match src.split_once('=') {
                    Some((key, _)) => format!("line {line} ({})", key.trim()),
                    None => format!("line {line}"),
                }
            });
            Error::config(field, e.message().trim())
        })?;
        config.validate()?;
        Ok(LoadedConfig {
            config,
            sha256: sha256_hex(text.as_bytes()),
        })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    /// Semantic checks, reported against the offending key.
    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.time_grid()?;
        if self.paths.n_paths == 0 {
            return Err(Error::config("paths.n_paths", "must be positive"));
        }
        let sim = self.sim();
        if sim.block_size == 0 {
            return Err(Error::config("paths.block_size", "must be positive"));
        }
        if !(sim.reference_epsilon > 0.0 && sim.reference_epsilon.is_finite()) {
            return Err(Error::config("paths.reference_epsilon", "must be positive"));
        }
        if !(0.0..1.0).contains(&sim.max_excluded_fraction) {
            return Err(Error::config("paths.max_excluded_fraction", "must lie in [0, 1)"));
        }
        for (i, k) in self.hedge.kinds.iter().enumerate() {
            ApproximationKind::new(k.tag, k.epsilon)
                .map_err(|e| Error::config(format!("hedge.kinds[{i}]"), e.to_string()))?;
        }
        if self.hedge.kinds.is_empty() {
            return Err(Error::config("hedge.kinds", "at least one kind is required"));
        }
        if self.sweep.is_some() {
            self.epsilon_sweep()?;
        }
        Ok(())
    }

    pub fn model(&self) -> Result<MarketModel> {
        let jump = JumpSpec::new(self.model.jumps.measure.clone(), self.model.jumps.mark_factor)
            .map_err(|e| Error::config("model.jumps", e.to_string()))?;
        MarketModel::new(jump, self.model.coefficients.clone(), self.grid.horizon, self.model.s0)
            .map_err(|e| Error::config("model", e.to_string()))
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.horizon, self.grid.n_steps)
            .map_err(|e| Error::config("grid", e.to_string()))
    }

    pub fn sim(&self) -> SimConfig {
        let mut sim = SimConfig::new(self.seed);
        if let Some(b) = self.paths.block_size {
            sim.block_size = b;
        }
        if let Some(e) = self.paths.reference_epsilon {
            sim.reference_epsilon = e;
        }
        if let Some(f) = self.paths.max_excluded_fraction {
            sim.max_excluded_fraction = f;
        }
        sim
    }

    pub fn epsilon_sweep(&self) -> Result<EpsilonSweep> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::config("sweep", "section is missing"))?;
        let sweep = EpsilonSweep {
            model: self.model()?,
            claim: self.claim.clone(),
            tag: s.tag,
            epsilons: s.epsilons.clone(),
            grid: self.time_grid()?,
            n_paths: self.paths.n_paths,
            sim: self.sim(),
            solver: self.solver,
            limits: self.structure,
            fit: s.fit,
            stability_check: s.stability_check,
        };
        sweep
            .validate()
            .map_err(|e| Error::config("sweep", e.to_string()))?;
        Ok(sweep)
    }
}
