//! Analysis configuration, read from TOML.
//!
//! ```toml
//! horizon = 20.0
//! tol = 1e-10
//! certificates = ["bpt", "complete_product"]
//!
//! [system]
//! a = [[-2.0]]
//! b = [[0.0]]
//! c = [[1.0]]
//! d = { csv = "d.csv" }
//! ```
//!
//! or a `[model]` table (`name = "wentzell"` or `"cenn1"`) instead of
//! `[system]`.

use std::path::{Path, PathBuf};

use opmat::blocksg::BlockSystem;
use opmat::coupled::CoupledSystem;
use opmat::models::ModelSpec;
use opmat::stability::Criterion;
use opmat::Matrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const BLOCK_NAMES: [&str; 4] = ["11", "12", "21", "22"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Slack added to the spectral abscissa when fitting growth constants.
    #[serde(default = "default_margin")]
    pub omega_margin: f64,
    /// All applicable certificates when absent; an empty list limits the
    /// report to the system digest.
    #[serde(default)]
    pub certificates: Option<Vec<Criterion>>,
    #[serde(default)]
    pub seed: u64,
    /// Initial vector for the limit identity; drawn from `seed` when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub system: Option<InlineSystem>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_horizon() -> f64 {
    20.0
}

fn default_tol() -> f64 {
    1e-10
}

fn default_margin() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSystem {
    pub a: MatrixSource,
    pub b: MatrixSource,
    pub c: MatrixSource,
    pub d: MatrixSource,
}

/// A row list, a bare scalar (1×1), or a CSV file relative to the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
    File { csv: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub gamma: Option<Pair>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<Pair>,
}

fn default_n() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pair {
    Same(f64),
    Each([f64; 2]),
}

impl Pair {
    fn get(self) -> [f64; 2] {
        match self {
            Self::Same(v) => [v, v],
            Self::Each(v) => v,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self) -> CliResult<ModelSpec> {
        match self.name.as_str() {
            "wentzell" | "wbc" => {
                if self.p.is_some() || self.q.is_some() {
                    return Err(CliError::Config(
                        "model.p / model.q do not apply to wentzell".into(),
                    ));
                }
                Ok(ModelSpec::Wentzell {
                    k: self.k.unwrap_or(1.0),
                    gamma: self.gamma.map_or([0.0; 2], Pair::get),
                })
            }
            "cenn1" | "dynamic_boundary" => {
                if self.k.is_some() || self.gamma.is_some() {
                    return Err(CliError::Config(
                        "model.k / model.gamma do not apply to cenn1".into(),
                    ));
                }
                Ok(ModelSpec::DynamicBoundary {
                    p: self.p.unwrap_or(1.0),
                    q: self.q.map_or([1.0; 2], Pair::get),
                })
            }
            other => Err(CliError::Config(format!(
                "model.name: unknown model `{other}` (expected wentzell or cenn1)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Block entries of `e^{t𝐀}` to record, from `11`, `12`, `21`, `22`.
    #[serde(default = "default_blocks")]
    pub blocks: Vec<String>,
}

fn default_samples() -> usize {
    101
}

fn default_blocks() -> Vec<String> {
    BLOCK_NAMES.iter().map(|s| s.to_string()).collect()
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            blocks: default_blocks(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            report: default_report(),
            trajectory: default_trajectory(),
        }
    }
}

/// The system a config describes, after matrices are read and validated.
#[derive(Debug, Clone)]
pub enum SystemSource {
    Inline(BlockSystem),
    Model {
        spec: ModelSpec,
        n: usize,
        system: CoupledSystem,
    },
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; CSV references are resolved relative to it and
    /// replaced by their rows.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.inline_csv(base)?;
        Ok(cfg)
    }

    pub fn inline_csv(&mut self, base: &Path) -> CliResult<()> {
        if let Some(sys) = &mut self.system {
            for (name, src) in [
                ("a", &mut sys.a),
                ("b", &mut sys.b),
                ("c", &mut sys.c),
                ("d", &mut sys.d),
            ] {
                if let MatrixSource::File { csv } = src {
                    let rows = read_csv_matrix(&base.join(&*csv))
                        .map_err(|e| CliError::Config(format!("system.{name}: {e}")))?;
                    *src = MatrixSource::Rows(rows);
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CliError::Config(format!(
                "horizon: must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(CliError::Config(format!(
                "tol: must lie in (0, 1e-2], got {}",
                self.tol
            )));
        }
        if !(self.omega_margin > 0.0 && self.omega_margin.is_finite()) {
            return Err(CliError::Config("omega_margin: must be positive".into()));
        }
        if self.trajectory.samples < 2 {
            return Err(CliError::Config(
                "trajectory.samples: need at least 2".into(),
            ));
        }
        if let Some(bad) = self
            .trajectory
            .blocks
            .iter()
            .find(|b| !BLOCK_NAMES.contains(&b.as_str()))
        {
            return Err(CliError::Config(format!(
                "trajectory.blocks: unknown block `{bad}` (expected 11, 12, 21 or 22)"
            )));
        }
        match (&self.system, &self.model) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "give exactly one of [system] and [model], not both".into(),
            )),
            (None, None) => Err(CliError::Config("missing [system] or [model] table".into())),
            _ => Ok(()),
        }
    }

    pub fn resolve(&self) -> CliResult<SystemSource> {
        self.validate()?;
        if let Some(m) = &self.model {
            let spec = m.spec()?;
            let system = spec
                .build(m.n)
                .map_err(|e| CliError::Config(format!("model: {e}")))?;
            return Ok(SystemSource::Model {
                spec,
                n: m.n,
                system,
            });
        }
        let sys = self.system.as_ref().expect("validated");
        let mut blocks = Vec::with_capacity(4);
        for (name, src) in [("a", &sys.a), ("b", &sys.b), ("c", &sys.c), ("d", &sys.d)] {
            blocks
                .push(to_matrix(src).map_err(|e| CliError::Config(format!("system.{name}: {e}")))?);
        }
        let [a, b, c, d]: [Matrix; 4] = blocks.try_into().expect("four blocks");
        if let Some(list) = &self.certificates {
            if list.contains(&Criterion::Stabilizability) {
                return Err(CliError::Config(
                    "certificates: stabilizability needs a [model] (coupled) system".into(),
                ));
            }
        }
        let block =
            BlockSystem::new(a, b, c, d).map_err(|e| CliError::Config(format!("system: {e}")))?;
        if let Some(x0) = &self.x0 {
            if x0.len() != block.n() {
                return Err(CliError::Config(format!(
                    "x0: expected {} entries, got {}",
                    block.n(),
                    x0.len()
                )));
            }
        }
        Ok(SystemSource::Inline(block))
    }

    pub fn wants(&self, c: Criterion) -> bool {
        self.certificates.as_ref().is_none_or(|l| l.contains(&c))
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn to_matrix(src: &MatrixSource) -> Result<Matrix, String> {
    match src {
        MatrixSource::Scalar(v) => Ok(Matrix::scalar(*v)),
        MatrixSource::Rows(rows) => rows_to_matrix(rows),
        MatrixSource::File { csv } => Err(format!("unresolved CSV reference {}", csv.display())),
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix, String> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err("empty matrix".into());
    }
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(format!(
            "row {i} has {} entries, expected {cols}",
            rows[i].len()
        ));
    }
    let flat: Vec<f64> = rows.concat();
    Matrix::from_real_slice(rows.len(), cols, &flat).map_err(|e| e.to_string())
}

fn read_csv_matrix(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("{}: line {}: {e}", path.display(), i + 1))?;
        rows.push(row);
    }
    Ok(rows)
}
