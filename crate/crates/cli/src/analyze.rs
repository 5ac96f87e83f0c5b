//! `analyze`: digest, growth constants, certificates and consistency checks
//! for one configured system.
//!
//! Boundary models are certified through their reduced triangular form
//! `Ã_λ + λ` (similar to the assembled matrix), with `λ` the model's
//! evaluation point. Quadrature-based checks (block formula, Dyson series,
//! limit identity) run on inline systems only; discretised models are too
//! stiff for them at desk scale.

use opmat::blocksg::{verify_semigroup_blocks, BlockSystem};
use opmat::coupled::{
    assumption_audit, factorize, generation_report, stabilizability_for_system, CoupledSystem,
};
use opmat::dyson::dyson_series;
use opmat::matcore::{expm, operator_norm, spectral_abscissa};
use opmat::semigroup::{growth_bound, growth_bound_at_rate, GrowthBound};
use opmat::stability::{
    asymptotic_limit_r, bpt_certificate, cascade_certificate, complete_certificate,
    nonresonance_check, stabilizability_certificate, Criterion,
};
use opmat::{Error, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{AnalysisConfig, SystemSource};
use crate::error::{CliError, CliResult};
use crate::report::{
    BlockFormulaRow, BlockNorms, CoupledSection, DysonSection, GrowthSection, LimitSection,
    Provenance, Report, SectionNote, SystemDigest,
};

/// Resonance tolerance for the spectral intersection check.
pub const SPECTRAL_TOL: f64 = 1e-8;
pub const BLOCK_FORMULA_TIMES: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
pub const DYSON_TERMS: usize = 8;
pub const DYSON_TIME: f64 = 2.0;

const CRITERIA: [Criterion; 5] = [
    Criterion::Bpt,
    Criterion::CompleteProduct,
    Criterion::CascadeTriangular,
    Criterion::Nonresonance,
    Criterion::Stabilizability,
];

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: Report,
    pub trajectory: Option<Table>,
}

/// Files the error under `skipped` when the section does not apply to the
/// system, under `failures` otherwise.
pub(crate) fn record<T>(report: &mut Report, section: &str, result: opmat::Result<T>) -> Option<T> {
    match result {
        Ok(v) => Some(v),
        Err(e) => {
            let note = SectionNote {
                section: section.into(),
                message: e.to_string(),
            };
            match e {
                Error::Unsupported(_)
                | Error::NonConvergentOrbit(_)
                | Error::InvalidArgument(_)
                | Error::LambdaInSpectrum { .. } => report.skipped.push(note),
                _ => report.failures.push(note),
            }
            None
        }
    }
}

fn numerical(section: &str, e: Error) -> CliError {
    CliError::Numerical {
        section: section.into(),
        message: e.to_string(),
    }
}

fn split_blocks(full: &Matrix, n: usize) -> opmat::Result<BlockSystem> {
    let m = full.rows() - n;
    BlockSystem::new(
        full.block(0, 0, n, n),
        full.block(0, n, n, m),
        full.block(n, 0, m, n),
        full.block(n, n, m, m),
    )
}

fn digest(source: String, domain: &str, blocks: &BlockSystem) -> opmat::Result<SystemDigest> {
    Ok(SystemDigest {
        source,
        domain: domain.into(),
        n: blocks.n(),
        m: blocks.m(),
        norms: BlockNorms {
            a: operator_norm(&blocks.a),
            b: operator_norm(&blocks.b),
            c: operator_norm(&blocks.c),
            d: operator_norm(&blocks.d),
        },
        abscissa_a: spectral_abscissa(&blocks.a)?,
        abscissa_d: spectral_abscissa(&blocks.d)?,
        abscissa_full: spectral_abscissa(&blocks.assemble())?,
        lower_triangular: blocks.is_lower_triangular(),
        upper_triangular: blocks.is_upper_triangular(),
    })
}

/// `Ã_λ + λ I`, similar to the assembled matrix.
fn reduced_view(sys: &CoupledSystem, lambda: f64) -> opmat::Result<BlockSystem> {
    let t = factorize(sys, lambda)?.a_tilde;
    BlockSystem::new(t.a.shift(lambda), t.b, t.c, t.d.shift(lambda))
}

pub fn run_analyze(cfg: &AnalysisConfig) -> CliResult<Analysis> {
    let source = cfg.resolve()?;
    let mut report = Report::new(Provenance::new("analyze", cfg.digest(), cfg.seed));

    let (full, blocks, label, domain) = match &source {
        SystemSource::Inline(sys) => (
            sys.assemble(),
            sys.clone(),
            "inline".to_string(),
            "diagonal",
        ),
        SystemSource::Model { spec, n, system } => {
            let full = system.assemble();
            let blocks = split_blocks(&full, system.n()).map_err(|e| numerical("system", e))?;
            let name = match spec {
                opmat::models::ModelSpec::Wentzell { .. } => "wentzell",
                opmat::models::ModelSpec::DynamicBoundary { .. } => "cenn1",
            };
            (full, blocks, format!("model:{name}:n={n}"), "coupled")
        }
    };
    report.system = Some(digest(label, domain, &blocks).map_err(|e| numerical("system", e))?);

    if cfg.certificates.as_ref().is_some_and(Vec::is_empty) {
        return Ok(Analysis {
            report,
            trajectory: None,
        });
    }

    let view = match &source {
        SystemSource::Inline(sys) => Some(sys.clone()),
        SystemSource::Model { spec, system, .. } => {
            let lambda = spec.dtn_lambda();
            let section = CoupledSection {
                lambda,
                audit: None,
                generation: match record(&mut report, "coupled", generation_report(system, lambda))
                {
                    Some(g) => g,
                    None => {
                        return Ok(Analysis {
                            report,
                            trajectory: None,
                        })
                    }
                },
                factorization_residual: factorize(system, lambda)
                    .map_err(|e| numerical("coupled", e))?
                    .relative_residual(),
            };
            let audit = record(
                &mut report,
                "coupled.audit",
                assumption_audit(system, lambda),
            );
            let audit = match audit {
                Some(a) if a.a_int_invertible && a.a_int_condition.is_finite() => Some(a),
                Some(_) => {
                    report.skipped.push(SectionNote {
                        section: "coupled.audit".into(),
                        message: "interior block is singular".into(),
                    });
                    None
                }
                None => None,
            };
            report.coupled = Some(CoupledSection { audit, ..section });
            record(&mut report, "reduced form", reduced_view(system, lambda))
        }
    };

    if let Some(view) = &view {
        certificates(cfg, &source, view, &mut report);
        if matches!(source, SystemSource::Inline(_)) {
            quadrature_checks(cfg, view, &mut report);
        }
    }

    let traj = block_trajectory(
        &full,
        blocks.n(),
        cfg.horizon,
        cfg.trajectory.samples,
        &cfg.trajectory.blocks,
    );
    let trajectory = record(&mut report, "trajectory", traj);
    Ok(Analysis { report, trajectory })
}

fn certificates(
    cfg: &AnalysisConfig,
    source: &SystemSource,
    view: &BlockSystem,
    report: &mut Report,
) {
    let margin = cfg.omega_margin;
    let horizon = cfg.horizon;
    let growth = (|| -> opmat::Result<GrowthSection> {
        let a = growth_bound(&view.a, margin, horizon)?;
        let d = growth_bound(&view.d, margin, horizon)?;
        // ||e^{t diag(A, D)}|| = max(||e^{tA}||, ||e^{tD}||): only the block
        // with the smaller exponent needs refitting
        let other = if a.omega >= d.omega {
            growth_bound_at_rate(&view.d, a.omega, horizon)?
        } else {
            growth_bound_at_rate(&view.a, d.omega, horizon)?
        };
        let fitted = if a.omega >= d.omega { a } else { d };
        let diagonal = GrowthBound {
            m: fitted.m.max(other.m),
            samples: fitted.samples + other.samples,
            ..fitted
        };
        Ok(GrowthSection { a, d, diagonal })
    })();
    let growth = record(report, "growth", growth);
    report.growth = growth;
    let (nb, nc) = (operator_norm(&view.b), operator_norm(&view.c));

    for criterion in CRITERIA.into_iter().filter(|c| cfg.wants(*c)) {
        let name = serde_json::to_value(criterion)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let section = format!("certificate.{name}");
        let cert = match criterion {
            Criterion::Bpt => {
                growth.map(|g| bpt_certificate(g.diagonal.m, g.diagonal.omega, nb, nc))
            }
            Criterion::CompleteProduct => {
                growth.map(|g| complete_certificate(g.a.m, g.a.omega, g.d.m, g.d.omega, nb, nc))
            }
            Criterion::CascadeTriangular => Some(cascade_certificate(view)),
            Criterion::Nonresonance => {
                Some(nonresonance_check(&view.a, &view.d, SPECTRAL_TOL).map(|r| r.certificate))
            }
            Criterion::Stabilizability => match source {
                // at λ = 0 the view is the reduced operator the criterion uses
                SystemSource::Model { spec, .. } if spec.dtn_lambda() == 0.0 => growth.map(|g| {
                    stabilizability_certificate(g.a.m, g.a.omega, g.d.m, g.d.omega, nc, nb)
                }),
                SystemSource::Model { system, .. } => {
                    Some(stabilizability_for_system(system, margin, horizon))
                }
                SystemSource::Inline(_) => None,
            },
        };
        if let Some(c) = cert.and_then(|c| record(report, &section, c)) {
            report.certificates.push(c);
        }
    }
}

fn quadrature_checks(cfg: &AnalysisConfig, sys: &BlockSystem, report: &mut Report) {
    if sys.is_lower_triangular() || sys.is_upper_triangular() {
        let mut times: Vec<f64> = BLOCK_FORMULA_TIMES
            .into_iter()
            .filter(|t| *t <= cfg.horizon)
            .collect();
        if times.is_empty() {
            times.push(cfg.horizon);
        }
        for t in times {
            if let Some(check) = record(
                report,
                "block_formula",
                verify_semigroup_blocks(sys, t, cfg.tol),
            ) {
                report.block_formula.push(BlockFormulaRow { t, check });
            } else {
                break;
            }
        }
    } else {
        report.skipped.push(SectionNote {
            section: "block_formula".into(),
            message: "needs B = 0 or C = 0".into(),
        });
    }

    let t = cfg.horizon.min(DYSON_TIME);
    let dyson = (|| -> opmat::Result<DysonSection> {
        let series = dyson_series(sys, DYSON_TERMS, &[t], cfg.tol)?;
        let exact = expm(&sys.assemble(), t)?;
        Ok(DysonSection {
            t,
            partial_sum_errors: (0..=DYSON_TERMS)
                .map(|k| operator_norm(&(&series.partial_sum(k, 0) - &exact)))
                .collect(),
        })
    })();
    report.dyson = record(report, "dyson", dyson);

    if sys.is_lower_triangular() {
        let x = cfg.x0.clone().unwrap_or_else(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect()
        });
        let limit = asymptotic_limit_r(sys, &Matrix::column(&x), cfg.horizon);
        report.limit = record(report, "limit", limit).map(|l| LimitSection {
            horizon: cfg.horizon,
            x,
            predicted: l.predicted.real_column(),
            unnegated_form: l.unnegated_form.real_column(),
            observed: l.observed.real_column(),
            discrepancy: l.discrepancy,
        });
    }
}

/// Operator norms of the requested blocks of `e^{t𝐀}` at `samples` equally
/// spaced times in `[0, horizon]`.
pub fn block_trajectory(
    full: &Matrix,
    n: usize,
    horizon: f64,
    samples: usize,
    blocks: &[String],
) -> opmat::Result<Table> {
    let m = full.rows() - n;
    let mut header = vec!["t".to_string()];
    header.extend(blocks.iter().map(|b| format!("norm_T{b}")));
    let steps = samples.max(2) - 1;
    let mut rows = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = horizon * i as f64 / steps as f64;
        let e = expm(full, t)?;
        let mut row = vec![t];
        for b in blocks {
            let block = match b.as_str() {
                "11" => e.block(0, 0, n, n),
                "12" => e.block(0, n, n, m),
                "21" => e.block(n, 0, m, n),
                _ => e.block(n, n, m, m),
            };
            row.push(operator_norm(&block));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}
