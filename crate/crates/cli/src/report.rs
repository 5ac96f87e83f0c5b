//! JSON report (schema version 1) and CSV output.

use std::fmt::Write as _;
use std::path::Path;

use opmat::blocksg::BlockFormulaCheck;
use opmat::coupled::{AssumptionAudit, GenerationReport};
use opmat::models::ConvergenceTable;
use opmat::semigroup::GrowthBound;
use opmat::stability::Certificate;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block_formula: Vec<BlockFormulaRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dyson: Option<DysonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupled: Option<CoupledSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<Study>,
    /// Sections that do not apply to this system.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SectionNote>,
    /// Sections that were requested and failed numerically.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<SectionNote>,
}

impl Report {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            provenance,
            system: None,
            growth: None,
            certificates: Vec::new(),
            block_formula: Vec::new(),
            dyson: None,
            limit: None,
            coupled: None,
            study: None,
            skipped: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Numerical {
            section: "report".into(),
            message: e.to_string(),
        })?;
        // NaN and infinities would come back as null and break this
        let back: Report = serde_json::from_str(&text).map_err(|e| CliError::Numerical {
            section: "report".into(),
            message: format!("non-finite value in report: {e}"),
        })?;
        if &back != self {
            return Err(CliError::Numerical {
                section: "report".into(),
                message: "report does not round-trip (non-finite value?)".into(),
            });
        }
        text.push('\n');
        Ok(text)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = self.to_json()?;
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: impl Into<String>, config_hash: String, seed: u64) -> Self {
        Self {
            tool: "opmat".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionNote {
    pub section: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDigest {
    pub source: String,
    /// `diagonal` for inline blocks, `coupled` for boundary models.
    pub domain: String,
    pub n: usize,
    pub m: usize,
    pub norms: BlockNorms,
    pub abscissa_a: f64,
    pub abscissa_d: f64,
    pub abscissa_full: f64,
    pub lower_triangular: bool,
    pub upper_triangular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockNorms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthSection {
    pub a: GrowthBound,
    pub d: GrowthBound,
    pub diagonal: GrowthBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockFormulaRow {
    pub t: f64,
    #[serde(flatten)]
    pub check: BlockFormulaCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DysonSection {
    pub t: f64,
    /// `||Σ_{k <= K} S_k(t) - e^{t𝐀}||` for `K = 0, 1, ..`.
    pub partial_sum_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSection {
    pub horizon: f64,
    pub x: Vec<f64>,
    /// `(-D)^{-1} C lim e^{tA} x`.
    pub predicted: Vec<f64>,
    /// `D^{-1} C lim e^{tA} x`, opposite sign, for comparison.
    pub unnegated_form: Vec<f64>,
    pub observed: Vec<f64>,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSection {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AssumptionAudit>,
    pub generation: GenerationReport,
    pub factorization_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Study {
    Wbc(WbcStudy),
    Cenn1(Cenn1Study),
    SharperCriterion(SharperStudy),
    Convergence { table: ConvergenceTable },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WbcStudy {
    pub tables: Vec<ConvergenceTable>,
    pub factorization: Vec<FactorizationRow>,
    pub dirichlet: Vec<DirichletSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationRow {
    pub n: usize,
    pub k: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Residual of the factorization, relative to `1 + ||𝐀|| + |λ|`.
    pub residual: f64,
    /// Matching distance between `σ(Ã_λ)` and `σ(𝐀) - λ`.
    pub spectrum_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSeries {
    pub lambda: f64,
    pub boundary: [f64; 2],
    pub levels: Vec<usize>,
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cenn1Study {
    pub conservative: KernelRow,
    pub decay: Vec<DecayRow>,
    pub table: ConvergenceTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub n: usize,
    pub abscissa: f64,
    /// `||𝐀 1|| / ||1||` for the constant state.
    pub constant_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub abscissa: f64,
    pub fitted_rate: f64,
    pub fit_window: [f64; 2],
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharperStudy {
    pub witnesses: Vec<WitnessRow>,
    pub sweep: SweepSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub norm_b: f64,
    pub norm_c: f64,
    pub complete: Certificate,
    pub bpt: Certificate,
    pub abscissa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub seed: u64,
    pub systems: usize,
    pub max_dim: usize,
    pub complete_passes: usize,
    pub bpt_passes: usize,
    /// Certified systems whose abscissa is not negative.
    pub violations: usize,
    /// Largest abscissa among systems certified by either criterion.
    pub worst_certified_abscissa: Option<f64>,
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV table with a header row and LF line endings.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
        writeln!(out, "{}", cells.join(",")).expect("write to string");
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0), "-2.0000000000000000e0");
        let v = 1.0 / 3.0;
        assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut r = Report::new(Provenance::new("test", String::new(), 0));
        assert!(r.to_json().is_ok());
        r.dyson = Some(DysonSection {
            t: 1.0,
            partial_sum_errors: vec![f64::NAN],
        });
        assert_eq!(r.to_json().unwrap_err().exit_code(), 3);
    }
}
