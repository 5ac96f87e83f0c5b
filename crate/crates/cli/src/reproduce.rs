//! Canned studies (`reproduce`) and mesh refinement (`converge`).

use opmat::blocksg::BlockSystem;
use opmat::coupled::factorize;
use opmat::matcore::{eigenvalues, match_spectra, spectral_abscissa};
use opmat::models::{
    build_dynamic_boundary_1d, build_wentzell_1d, convergence_study, dirichlet_extension_error,
    observed_order, trajectory_decay_rate, ModelSpec,
};
use opmat::stability::{
    bpt_certificate, bpt_for_system, complete_certificate, complete_for_system, sharper_witness,
};
use opmat::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analyze::{block_trajectory, Analysis};
use crate::config::BLOCK_NAMES;
use crate::error::{CliError, CliResult};
use crate::report::{
    Cenn1Study, DecayRow, DirichletSeries, FactorizationRow, KernelRow, Provenance, Report,
    SharperStudy, Study, SweepSummary, WbcStudy, WitnessRow,
};

pub const STUDIES: &str = "wbc, cenn1, sharper-criterion";
pub const MODELS: &str = "wentzell, cenn1";

pub const WBC_LEVELS: [usize; 4] = [16, 32, 64, 128];
pub const CENN1_LEVELS: [usize; 3] = [16, 32, 64];
pub const CENN1_FIT_WINDOW: [f64; 2] = [40.0, 80.0];
pub const DEFAULT_SEED: u64 = 41;
pub const SWEEP_SYSTEMS: usize = 200;
pub const SWEEP_MAX_DIM: usize = 6;
const OMEGA_MARGIN: f64 = 1e-3;

/// Values of the global flags; `None` keeps each study's default.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(20.0)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn validate(&self) -> CliResult<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t <= 1e-2) {
                return Err(CliError::Config(format!(
                    "--tol: must lie in (0, 1e-2], got {t}"
                )));
            }
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Config(format!(
                    "--horizon: must be positive, got {h}"
                )));
            }
        }
        Ok(())
    }
}

fn numerical(section: &str) -> impl Fn(opmat::Error) -> CliError + '_ {
    move |e| CliError::Numerical {
        section: section.into(),
        message: e.to_string(),
    }
}

fn hash_of(value: &impl Serialize) -> String {
    let json = serde_json::to_string(value).expect("parameters serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}

pub fn run_reproduce(name: &str, opts: Overrides) -> CliResult<Analysis> {
    opts.validate()?;
    let params = serde_json::json!({ "study": name, "overrides": opts });
    let provenance = Provenance::new(format!("reproduce {name}"), hash_of(&params), opts.seed());
    let mut report = Report::new(provenance);
    let mut trajectory = None;
    report.study = Some(match name {
        "wbc" => Study::Wbc(wbc()?),
        "cenn1" => {
            let (study, table) = cenn1(opts)?;
            trajectory = Some(table);
            Study::Cenn1(study)
        }
        "sharper-criterion" => Study::SharperCriterion(sharper(opts)?),
        other => {
            return Err(CliError::Unknown {
                kind: "study",
                name: other.into(),
                expected: STUDIES,
            })
        }
    });
    Ok(Analysis { report, trajectory })
}

/// Model parameters accepted by `converge`.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ModelParams {
    pub k: Option<f64>,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
}

pub fn model_spec(name: &str, params: ModelParams) -> CliResult<ModelSpec> {
    let spec = match name {
        "wentzell" | "wbc" => ModelSpec::Wentzell {
            k: params.k.unwrap_or(1.0),
            gamma: [params.gamma.unwrap_or(0.0); 2],
        },
        "cenn1" => ModelSpec::DynamicBoundary {
            p: params.p.unwrap_or(1.0),
            q: [params.q.unwrap_or(1.0); 2],
        },
        other => {
            return Err(CliError::Unknown {
                kind: "model",
                name: other.into(),
                expected: MODELS,
            })
        }
    };
    let unused = match spec {
        ModelSpec::Wentzell { .. } => params.p.is_some() || params.q.is_some(),
        ModelSpec::DynamicBoundary { .. } => params.k.is_some() || params.gamma.is_some(),
    };
    if unused {
        return Err(CliError::Config(format!(
            "parameter does not apply to model `{name}`"
        )));
    }
    Ok(spec)
}

pub fn run_converge(
    name: &str,
    params: ModelParams,
    levels: &[usize],
    opts: Overrides,
) -> CliResult<Report> {
    opts.validate()?;
    let spec = model_spec(name, params)?;
    if let Some(&n) = levels.iter().find(|&&n| n < 3) {
        return Err(CliError::Config(format!(
            "--levels: need at least 3 interior nodes, got {n}"
        )));
    }
    let hash = hash_of(&serde_json::json!({ "model": spec, "levels": levels, "overrides": opts }));
    let mut report = Report::new(Provenance::new(
        format!("converge {name}"),
        hash,
        opts.seed(),
    ));
    let table = convergence_study(&spec, levels).map_err(|e| match e {
        opmat::Error::InvalidArgument(msg) => CliError::Config(format!("--levels: {msg}")),
        e => numerical("convergence")(e),
    })?;
    report.study = Some(Study::Convergence { table });
    Ok(report)
}

fn dirichlet_series(lambda: f64, boundary: [f64; 2]) -> CliResult<DirichletSeries> {
    let levels = WBC_LEVELS.to_vec();
    let h: Vec<f64> = levels.iter().map(|n| 1.0 / (n + 1) as f64).collect();
    let errors = levels
        .iter()
        .map(|&n| dirichlet_extension_error(n, lambda, boundary))
        .collect::<opmat::Result<Vec<_>>>()
        .map_err(numerical("dirichlet"))?;
    let orders = (1..levels.len())
        .map(|i| observed_order(errors[i - 1], errors[i], h[i - 1], h[i]))
        .collect();
    Ok(DirichletSeries {
        lambda,
        boundary,
        levels,
        h,
        errors,
        orders,
    })
}

fn wbc() -> CliResult<WbcStudy> {
    let tables = [0.0, 0.5]
        .into_iter()
        .map(|g| {
            convergence_study(
                &ModelSpec::Wentzell {
                    k: 1.0,
                    gamma: [g; 2],
                },
                &WBC_LEVELS,
            )
        })
        .collect::<opmat::Result<Vec<_>>>()
        .map_err(numerical("convergence"))?;

    let (n, k, gamma) = (32, 1.0, 0.5);
    let sys = build_wentzell_1d(n, k, gamma).map_err(numerical("factorization"))?;
    let spectrum = eigenvalues(&sys.assemble()).map_err(numerical("factorization"))?;
    let mut factorization = Vec::new();
    for lambda in [-1.0, -3.0] {
        let row = (|| -> opmat::Result<FactorizationRow> {
            let f = factorize(&sys, lambda)?;
            let shifted: Vec<_> = spectrum.iter().map(|z| z - lambda).collect();
            let tilde = eigenvalues(&f.a_tilde.assemble())?;
            Ok(FactorizationRow {
                n,
                k,
                gamma,
                lambda,
                residual: f.relative_residual(),
                spectrum_mismatch: match_spectra(&tilde, &shifted)?,
            })
        })()
        .map_err(numerical("factorization"))?;
        factorization.push(row);
    }

    let dirichlet = vec![
        dirichlet_series(0.0, [1.0, 2.0])?,
        dirichlet_series(4.0, [1.0, 2.0])?,
    ];
    Ok(WbcStudy {
        tables,
        factorization,
        dirichlet,
    })
}

fn cenn1(opts: Overrides) -> CliResult<(Cenn1Study, crate::analyze::Table)> {
    let n0 = 32;
    let sys = build_dynamic_boundary_1d(n0, &[0.0], [0.0, 0.0]).map_err(numerical("cenn1"))?;
    let full = sys.assemble();
    let mut ones = vec![1.0; n0];
    ones.extend([0.0, 0.0]);
    let constant = Matrix::column(&ones);
    let conservative = KernelRow {
        n: n0,
        abscissa: spectral_abscissa(&full).map_err(numerical("cenn1"))?,
        constant_residual: (&full * &constant).frobenius() / constant.frobenius(),
    };

    let mut decay = Vec::new();
    for &n in &CENN1_LEVELS {
        let row = (|| -> opmat::Result<DecayRow> {
            let a = build_dynamic_boundary_1d(n, &[1.0], [1.0, 1.0])?.assemble();
            let abscissa = spectral_abscissa(&a)?;
            let x = Matrix::column(&vec![1.0; n + 2]);
            let [t0, t1] = CENN1_FIT_WINDOW;
            let fitted_rate = trajectory_decay_rate(&a, &x, t0, t1, 81)?;
            Ok(DecayRow {
                n,
                abscissa,
                fitted_rate,
                fit_window: CENN1_FIT_WINDOW,
                relative_gap: ((fitted_rate - abscissa) / abscissa).abs(),
            })
        })()
        .map_err(numerical("cenn1.decay"))?;
        decay.push(row);
    }
    let table = convergence_study(
        &ModelSpec::DynamicBoundary {
            p: 1.0,
            q: [1.0, 1.0],
        },
        &CENN1_LEVELS,
    )
    .map_err(numerical("cenn1.convergence"))?;

    let decaying = build_dynamic_boundary_1d(n0, &[1.0], [1.0, 1.0]).map_err(numerical("cenn1"))?;
    let blocks: Vec<String> = BLOCK_NAMES.iter().map(|s| s.to_string()).collect();
    let horizon = opts.horizon.unwrap_or(CENN1_FIT_WINDOW[1]);
    let traj = block_trajectory(&decaying.assemble(), n0, horizon, 161, &blocks)
        .map_err(numerical("cenn1.trajectory"))?;
    Ok((
        Cenn1Study {
            conservative,
            decay,
            table,
        },
        traj,
    ))
}

/// Matrix with entries in `[-1, 1)` shifted so that its spectral abscissa is
/// uniform in `[-1, -0.1]`.
fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> opmat::Result<Matrix> {
    let a = random_matrix(rng, n, n, 1.0);
    let target = rng.gen_range(-1.0..-0.1);
    Ok(a.shift(target - spectral_abscissa(&a)?))
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    let data: Vec<f64> = (0..r * c)
        .map(|_| scale * rng.gen_range(-1.0..1.0))
        .collect();
    Matrix::from_real_slice(r, c, &data).expect("nonempty")
}

fn witness_row(sys: &BlockSystem) -> opmat::Result<WitnessRow> {
    // A = D = -1 exactly: ||e^{-t}|| = e^{-t}, so M = 1, eps = -1 are sharp
    let (nb, nc) = (sys.b.re(0, 0).abs(), sys.c.re(0, 0).abs());
    Ok(WitnessRow {
        norm_b: nb,
        norm_c: nc,
        complete: complete_certificate(1.0, -1.0, 1.0, -1.0, nb, nc)?,
        bpt: bpt_certificate(1.0, -1.0, nb, nc)?,
        abscissa: spectral_abscissa(&sys.assemble())?,
    })
}

/// `(u, v)` parameters of the catalogued witnesses; `(0.75, 4/9)` is the
/// pair `||B|| = 4`, `||C|| = 0.1`.
pub const WITNESS_SEEDS: [(f64, f64); 5] = [
    (0.75, 4.0 / 9.0),
    (0.25, 0.5),
    (0.5, 0.99),
    (0.75, 0.1),
    (0.999, 0.999),
];

fn sharper(opts: Overrides) -> CliResult<SharperStudy> {
    let witnesses = WITNESS_SEEDS
        .iter()
        .map(|&(u, v)| witness_row(&sharper_witness(u, v)))
        .collect::<opmat::Result<Vec<_>>>()
        .map_err(numerical("witness"))?;

    let seed = opts.seed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sweep = SweepSummary {
        seed,
        systems: SWEEP_SYSTEMS,
        max_dim: SWEEP_MAX_DIM,
        complete_passes: 0,
        bpt_passes: 0,
        violations: 0,
        worst_certified_abscissa: None,
    };
    for _ in 0..SWEEP_SYSTEMS {
        let outcome = (|| -> opmat::Result<(bool, bool, f64)> {
            let n = rng.gen_range(1..=SWEEP_MAX_DIM);
            let m = rng.gen_range(1..=SWEEP_MAX_DIM);
            let scale = rng.gen_range(0.01..0.5);
            let a = random_stable(&mut rng, n)?;
            let b = random_matrix(&mut rng, n, m, scale);
            let c = random_matrix(&mut rng, m, n, scale);
            let d = random_stable(&mut rng, m)?;
            let sys = BlockSystem::new(a, b, c, d)?;
            let complete = complete_for_system(&sys, OMEGA_MARGIN, opts.horizon())?.satisfied;
            let bpt = bpt_for_system(&sys, OMEGA_MARGIN, opts.horizon())?.satisfied;
            Ok((complete, bpt, spectral_abscissa(&sys.assemble())?))
        })()
        .map_err(numerical("sweep"))?;
        let (complete, bpt, alpha) = outcome;
        sweep.complete_passes += complete as usize;
        sweep.bpt_passes += bpt as usize;
        if complete || bpt {
            sweep.violations += (alpha >= 0.0) as usize;
            sweep.worst_certified_abscissa = Some(
                sweep
                    .worst_certified_abscissa
                    .map_or(alpha, |w| w.max(alpha)),
            );
        }
    }
    Ok(SharperStudy { witnesses, sweep })
}
