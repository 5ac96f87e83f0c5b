use std::path::Path;
use std::process::Command;

use opmat::stability::Criterion;
use opmat_cli::config::MatrixSource;
use opmat_cli::report::Study;
use opmat_cli::{
    run_analyze, run_converge, run_reproduce, write_analysis, AnalysisConfig, ModelParams,
    Overrides, Report,
};

const SCALAR_BLOCKS: &str = "
[system]
a = [[-2.0]]
b = [[0.0]]
c = [[1.0]]
d = [[-1.0]]
";

fn opmat(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_opmat"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn certificate(report: &Report, c: Criterion) -> &opmat::stability::Certificate {
    report
        .certificates
        .iter()
        .find(|x| x.criterion == c)
        .expect("certificate present")
}

#[test]
fn inline_scalar_blocks() {
    let cfg = AnalysisConfig::from_toml(SCALAR_BLOCKS).unwrap();
    let out = run_analyze(&cfg).unwrap();
    let r = &out.report;
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    assert!(certificate(r, Criterion::CompleteProduct).satisfied);
    assert!(certificate(r, Criterion::CascadeTriangular).satisfied);
    // rate eps + M max(|B|, |C|) = -1 + 1 sits on the boundary
    let bpt = certificate(r, Criterion::Bpt);
    assert!(!bpt.satisfied && bpt.margin.abs() < 2e-3);
    assert_eq!(r.block_formula.len(), 4);
    assert!(r.block_formula.iter().all(|row| row.check.residual < 1e-8));
    let limit = r.limit.as_ref().unwrap();
    assert!(limit.discrepancy < 1e-6);
    assert!(r.dyson.as_ref().unwrap().partial_sum_errors[0] < 1e-12);
    assert_eq!(out.trajectory.unwrap().rows.len(), 101);
}

#[test]
fn wentzell_model_decays() {
    let cfg =
        AnalysisConfig::from_toml("[model]\nname = \"wentzell\"\nk = 1.0\ngamma = 1.0\nn = 64\n")
            .unwrap();
    let r = run_analyze(&cfg).unwrap().report;
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    let digest = r.system.as_ref().unwrap();
    assert_eq!((digest.n, digest.m), (64, 2));
    assert!(digest.abscissa_full < 0.0);
    let coupled = r.coupled.as_ref().unwrap();
    assert!(coupled.factorization_residual < 1e-10);
    assert!(coupled.audit.is_some());
    assert!(r
        .certificates
        .iter()
        .any(|c| c.criterion == Criterion::Stabilizability));
}

#[test]
fn cenn1_model_is_upper_triangular_after_reduction() {
    let cfg = AnalysisConfig::from_toml("[model]\nname = \"cenn1\"\nn = 16\n").unwrap();
    let r = run_analyze(&cfg).unwrap().report;
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    assert!(certificate(&r, Criterion::CascadeTriangular).satisfied);
}

#[test]
fn empty_certificate_list_gives_digest_only() {
    let cfg = AnalysisConfig::from_toml(&format!("certificates = []\n{SCALAR_BLOCKS}")).unwrap();
    let out = run_analyze(&cfg).unwrap();
    let r = &out.report;
    assert!(r.system.is_some());
    assert!(r.growth.is_none() && r.certificates.is_empty() && r.block_formula.is_empty());
    assert!(r.dyson.is_none() && r.limit.is_none() && out.trajectory.is_none());
}

#[test]
fn coupled_blocks_are_skipped_not_failed() {
    let cfg = AnalysisConfig::from_toml(
        "[system]\na = [[-1.0, 0.0], [0.0, -2.0]]\nb = [[1.0], [0.0]]\nc = [[0.5, 0.5]]\nd = -1.0\n",
    )
    .unwrap();
    let r = run_analyze(&cfg).unwrap().report;
    assert!(r.failures.is_empty());
    assert!(r.skipped.iter().any(|s| s.section == "block_formula"));
    assert!(r
        .skipped
        .iter()
        .any(|s| s.section == "certificate.cascade_triangular"));
    assert!(r.dyson.is_some());
}

#[test]
fn report_round_trips() {
    for name in ["cenn1", "wbc"] {
        let report = run_reproduce(name, Overrides::default()).unwrap().report;
        let back: Report = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }
    let cfg = AnalysisConfig::from_toml(SCALAR_BLOCKS).unwrap();
    let report = run_analyze(&cfg).unwrap().report;
    let back: Report = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn converge_table() {
    let r = run_converge(
        "wentzell",
        ModelParams::default(),
        &[16, 32],
        Overrides::default(),
    )
    .unwrap();
    match r.study {
        Some(Study::Convergence { table }) => assert_eq!(table.rows.len(), 2),
        other => panic!("unexpected study {other:?}"),
    }
    let err = run_converge(
        "wentzell",
        ModelParams::default(),
        &[32, 16],
        Overrides::default(),
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = run_converge(
        "wentzell",
        ModelParams {
            p: Some(1.0),
            ..Default::default()
        },
        &[16],
        Overrides::default(),
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn csv_matrix_reference_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.csv"), "1.0, 0.5\n").unwrap();
    std::fs::write(
        dir.path().join("sys.toml"),
        "certificates = [\"cascade_triangular\"]\n\
         [system]\na = [[-1.0, 0.0], [0.0, -2.0]]\nb = [[0.0], [0.0]]\nc = { csv = \"c.csv\" }\nd = -1.0\n\
         [trajectory]\nsamples = 5\nblocks = [\"21\", \"22\"]\n",
    )
    .unwrap();
    let cfg = AnalysisConfig::load(&dir.path().join("sys.toml")).unwrap();
    assert_eq!(
        cfg.system.as_ref().unwrap().c,
        MatrixSource::Rows(vec![vec![1.0, 0.5]])
    );
    let out = run_analyze(&cfg).unwrap();
    let files = write_analysis(&out, &dir.path().join("out"), "r.json", "t.csv").unwrap();
    assert_eq!(files.len(), 2);
    let csv = std::fs::read_to_string(&files[1]).unwrap();
    let lines: Vec<&str> = csv.split('\n').collect();
    assert_eq!(lines[0], "t,norm_T21,norm_T22");
    assert_eq!(lines.len(), 7, "header, 5 rows, trailing newline");
    assert!(!csv.contains('\r'));
    for cell in lines[1].split(',') {
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("ok.toml"), SCALAR_BLOCKS).unwrap();
    std::fs::write(
        p.join("bad.toml"),
        "horizon = 1.0\n[system]\na = [[1.0, 2.0]]\n",
    )
    .unwrap();
    std::fs::write(p.join("syntax.toml"), "horizon = \n").unwrap();

    let ok = opmat(&["analyze", "ok.toml", "--out-dir", "out"], p);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    assert!(p.join("out/report.json").exists() && p.join("out/trajectory.csv").exists());

    let bad = opmat(&["analyze", "bad.toml"], p);
    assert_eq!(bad.status.code(), Some(2));
    let syntax = opmat(&["analyze", "syntax.toml"], p);
    assert_eq!(syntax.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&syntax.stderr).contains("line 1"));
    assert_eq!(
        opmat(&["analyze", "missing.toml"], p).status.code(),
        Some(2)
    );
    assert_eq!(
        opmat(&["analyze", "ok.toml", "--tol", "0.5"], p)
            .status
            .code(),
        Some(2)
    );

    assert_eq!(opmat(&["reproduce", "nonsense"], p).status.code(), Some(4));
    assert_eq!(
        opmat(&["converge", "heat", "--levels", "16"], p)
            .status
            .code(),
        Some(4)
    );
    assert_eq!(opmat(&["transmogrify"], p).status.code(), Some(4));
    assert_eq!(opmat(&["--help"], p).status.code(), Some(0));
}
