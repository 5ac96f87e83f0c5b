//! Configuration, orchestration and report output for the `opmat` binary.

pub mod analyze;
pub mod config;
pub mod error;
pub mod report;
pub mod reproduce;

use std::path::{Path, PathBuf};

pub use analyze::{run_analyze, Analysis, Table};
pub use config::AnalysisConfig;
pub use error::{CliError, CliResult};
pub use report::Report;
pub use reproduce::{run_converge, run_reproduce, ModelParams, Overrides};

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes the report and, when present, the trajectory CSV into `dir`.
pub fn write_analysis(
    analysis: &Analysis,
    dir: &Path,
    report: &str,
    csv: &str,
) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let path = dir.join(report);
    analysis.report.write(&path)?;
    written.push(path);
    if let Some(t) = &analysis.trajectory {
        let path = dir.join(csv);
        report::write_csv(&path, &t.header, &t.rows)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes a convergence report and its per-level CSV table into `dir`.
pub fn write_convergence(report: &Report, dir: &Path, stem: &str) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let json = dir.join(format!("{stem}.json"));
    report.write(&json)?;
    let mut written = vec![json];
    if let Some(report::Study::Convergence { table }) = &report.study {
        let header: Vec<String> = ["n", "h", "abscissa", "dtn_error", "factorization_residual"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<f64>> = table
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n as f64,
                    r.h,
                    r.abscissa,
                    r.dtn_error,
                    r.factorization_residual,
                ]
            })
            .collect();
        let csv = dir.join(format!("{stem}.csv"));
        report::write_csv(&csv, &header, &rows)?;
        written.push(csv);
    }
    Ok(written)
}
