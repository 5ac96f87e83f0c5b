use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use opmat_cli::{
    run_analyze, run_converge, run_reproduce, write_analysis, write_convergence, AnalysisConfig,
    CliResult, ModelParams, Overrides,
};

/// Operator-matrix semigroup analysis.
#[derive(Debug, Parser)]
#[command(name = "opmat", version)]
struct Cli {
    /// Quadrature tolerance, in (0, 1e-2].
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Time horizon for growth bounds and trajectories.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Directory for reports and CSV files (default: config setting or `.`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed for randomly drawn test vectors and systems.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyse the system described by a TOML config.
    Analyze { config: PathBuf },
    /// Run a canned study: wbc, cenn1 or sharper-criterion.
    Reproduce { name: String },
    /// Mesh-refinement study of a boundary model: wentzell or cenn1.
    Converge {
        model: String,
        /// Interior grid sizes, strictly increasing
        #[arg(long, num_args = 1.., required = true)]
        levels: Vec<usize>,
        /// Wentzell boundary flux coefficient (default 1)
        #[arg(long)]
        k: Option<f64>,
        /// Wentzell boundary damping (default 0)
        #[arg(long)]
        gamma: Option<f64>,
        /// Dynamic-boundary interior potential (default 1)
        #[arg(long)]
        p: Option<f64>,
        /// Dynamic-boundary decay rate of the boundary data (default 1)
        #[arg(long)]
        q: Option<f64>,
    },
}

fn run(cli: Cli) -> CliResult<bool> {
    let overrides = Overrides {
        tol: cli.tol,
        horizon: cli.horizon,
        seed: cli.seed,
    };
    let written = match cli.command {
        Command::Analyze { config } => {
            let mut cfg = AnalysisConfig::load(&config)?;
            if let Some(t) = cli.tol {
                cfg.tol = t;
            }
            if let Some(h) = cli.horizon {
                cfg.horizon = h;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let analysis = run_analyze(&cfg)?;
            let dir = cli
                .out_dir
                .or_else(|| cfg.output.dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            for f in &analysis.report.failures {
                eprintln!("opmat: {} failed: {}", f.section, f.message);
            }
            let ok = analysis.report.failures.is_empty();
            let files =
                write_analysis(&analysis, &dir, &cfg.output.report, &cfg.output.trajectory)?;
            (files, ok)
        }
        Command::Reproduce { name } => {
            let analysis = run_reproduce(&name, overrides)?;
            let dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("."));
            let files = write_analysis(
                &analysis,
                &dir,
                &format!("{name}.json"),
                &format!("{name}_trajectory.csv"),
            )?;
            (files, true)
        }
        Command::Converge {
            model,
            levels,
            k,
            gamma,
            p,
            q,
        } => {
            let report = run_converge(&model, ModelParams { k, gamma, p, q }, &levels, overrides)?;
            let dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("."));
            (
                write_convergence(&report, &dir, &format!("converge_{model}"))?,
                true,
            )
        }
    };
    for path in &written.0 {
        println!("{}", path.display());
    }
    Ok(written.1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand => 4,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // report written, but a requested section failed
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("opmat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
