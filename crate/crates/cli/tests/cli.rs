use std::process::Command;

use proptest::prelude::*;
use tmcert_cli::config::{Job, JobKind, Numerics, Outputs, RunConfig};
use tmcert_cli::{paper_table, run_config, ConfigError, JobStatus, Report};
use tmcert_core::{BoundaryCondition, Verdict};

fn job_strategy() -> impl Strategy<Value = Job> {
    let kind = prop_oneof![
        Just(JobKind::Spectrum),
        Just(JobKind::Kappa),
        Just(JobKind::Certificate),
        Just(JobKind::ModesExport),
        Just(JobKind::FullPipeline),
    ];
    let bc = prop_oneof![
        Just(None),
        Just(Some(BoundaryCondition::Dirichlet)),
        Just(Some(BoundaryCondition::Neumann)),
        Just(Some(BoundaryCondition::MixedByTag)),
    ];
    (
        kind,
        proptest::option::of("[a-z]{1,8}"),
        proptest::option::of("[a-z_]{1,10}"),
        proptest::option::of(prop_oneof![Just("l_shape".to_string()), Just("x_shape".to_string())]),
        bc,
        proptest::collection::btree_map("[a-zA-Z_]{1,6}", -1e6f64..1e6, 0..4),
        (1e-3f64..1.0, 0.5f64..20.0, 1usize..10, 1e-14f64..1e-4, 1usize..100_000),
        proptest::option::of("[a-z]{1,6}\\.csv"),
    )
        .prop_map(|(kind, name, id, preset, bc, params, (h, t, k, tol, n_series), csv)| Job {
            kind,
            name,
            id,
            preset,
            bc,
            params,
            numerics: Numerics { h, t, k, tol, n_series },
            outputs: Outputs { csv },
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip(jobs in proptest::collection::vec(job_strategy(), 0..5)) {
        let cfg = RunConfig { version: 1, jobs };
        let text = cfg.to_json();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
    }
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn empty_job_list_gives_empty_report() {
    let cfg = RunConfig::parse(r#"{"version": 1, "jobs": []}"#).unwrap();
    let dir = tmp();
    let r = Report::new(run_config(&cfg, dir.path(), 4));
    assert!(r.jobs.is_empty());
    assert_eq!(r.errored(), 0);
    r.write(dir.path(), &serde_json::json!({})).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["jobs"], serde_json::json!([]));
}

#[test]
fn parse_errors_point_at_the_problem() {
    match RunConfig::parse("{\"version\": 1,\n \"jobs\": [ {\"kind\": \"spectra\"} ]}") {
        Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    let bad_h = r#"{"version": 1, "jobs": [{"kind": "kappa", "params": {"a": 1}}, {"kind": "spectrum", "preset": "l_shape", "numerics": {"h": -1}}]}"#;
    match RunConfig::parse(bad_h) {
        Err(ConfigError::Field { path, .. }) => assert_eq!(path, "jobs[1].numerics.h"),
        other => panic!("{other:?}"),
    }
    let unknown = r#"{"version": 1, "jobs": [{"kind": "spectrum", "preset": "t_shape"}]}"#;
    assert!(matches!(RunConfig::parse(unknown), Err(ConfigError::Field { path, .. }) if path == "jobs[0].preset"));
    let escape = r#"{"version": 1, "jobs": [{"kind": "kappa", "params": {"a": 1}, "outputs": {"csv": "../x.csv"}}]}"#;
    assert!(RunConfig::parse(escape).is_err());
    assert!(RunConfig::parse(r#"{"version": 2, "jobs": []}"#).is_err());
}

const MIXED: &str = r#"{
  "version": 1,
  "jobs": [
    {"kind": "certificate", "id": "tripode", "params": {"lambda_L": 9.1722}},
    {"kind": "spectrum", "preset": "l_shape", "bc": "dirichlet", "numerics": {"h": 0.03125, "k": 1}},
    {"kind": "kappa", "params": {"a": 3.141592653589793}},
    {"kind": "modes_export", "id": "cuboid", "params": {"a": 1.0, "b": 0.5, "L": 2.0, "samples": 4}},
    {"kind": "certificate", "id": "cuboid", "params": {"a": 1.0}},
    {"kind": "certificate", "id": "tm", "params": {"lambda_D_res": 4.0, "lambda_N": 9.0, "L": 0.2}}
  ]
}"#;

#[test]
fn mixed_run_records_results_in_config_order() {
    let cfg = RunConfig::parse(MIXED).unwrap();
    let dir = tmp();
    let r = Report::new(run_config(&cfg, dir.path(), 3));
    assert_eq!(r.jobs.iter().map(|j| j.index).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());

    let tri = &r.jobs[0];
    assert_eq!(tri.certificates[0].verdict, Verdict::Pass);
    assert!((tri.tripode.as_ref().unwrap().tail_limit + 3.8205).abs() < 0.02);

    let lam = r.jobs[1].spectrum.as_ref().unwrap().eigenvalues[0];
    assert!((lam - 9.1722).abs() < 5e-3 * 9.1722, "{lam}");

    assert!((r.jobs[2].kappa[0].kappa - 4.0214).abs() < 1e-3);

    let q = r.jobs[3].quotient.as_ref().unwrap();
    assert!((q.value - q.expected.unwrap()).abs() < 1e-6 * q.value);
    let csv = std::fs::read_to_string(dir.path().join(&r.jobs[3].artifacts[0])).unwrap();
    assert_eq!(csv.lines().count(), 1 + 64);

    // a missing parameter is an error on that job only
    assert_eq!(r.jobs[4].status, JobStatus::Error);
    assert!(r.jobs[4].error.as_ref().unwrap().contains("params.L"));
    assert_eq!(r.errored(), 1);

    // a certificate that does not hold is an outcome, not an error
    assert_eq!(r.jobs[5].status, JobStatus::Ok);
    assert_eq!(r.jobs[5].certificates[0].verdict, Verdict::Fail);

    let text = r.to_text();
    assert!(text.contains("tripode") && text.contains("fail") && text.contains("error"));
}

#[test]
fn reports_are_deterministic_across_worker_counts() {
    let cfg = RunConfig::parse(MIXED).unwrap();
    let (a, b) = (tmp(), tmp());
    let r1 = Report::new(run_config(&cfg, a.path(), 1)).to_json();
    let r2 = Report::new(run_config(&cfg, b.path(), 6)).to_json();
    assert_eq!(r1, r2);
    let back: Report = serde_json::from_str(&r1).unwrap();
    assert_eq!(back.to_json(), r1);
}

#[test]
fn paper_table_has_ten_rows_and_is_stable_under_coarsening() {
    let coarse = paper_table(1.0 / 16.0).unwrap();
    assert_eq!(coarse.rows.len(), 10);
    assert!(coarse.all_pass(), "{}", coarse.to_text());
    let again = paper_table(1.0 / 16.0).unwrap();
    assert_eq!(coarse.to_json(), again.to_json());
    let finer = paper_table(1.0 / 32.0).unwrap();
    for (c, f) in coarse.rows.iter().zip(&finer.rows) {
        assert_eq!(c.pass, f.pass, "{}", c.quantity);
        assert!(c.tolerance >= f.tolerance);
    }
}

#[test]
fn binary_run_writes_artifacts_and_exit_status() {
    let dir = tmp();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"version": 1, "jobs": [{"kind": "certificate", "id": "tem", "params": {"L": 2.0}}, {"kind": "full_pipeline", "preset": "l_shape", "numerics": {"h": 0.0625}}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_tmcert"))
        .args(["run", cfg.to_str().unwrap(), "--jobs", "2", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["report.json", "report.txt", "report.meta.json", "job1_eigenfunctions.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let first = std::fs::read(out.join("report.json")).unwrap();
    let again = Command::new(env!("CARGO_BIN_EXE_tmcert"))
        .args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(again.success());
    assert_eq!(first, std::fs::read(out.join("report.json")).unwrap());

    std::fs::write(&cfg, r#"{"version": 1, "jobs": [{"kind": "kappa"}]}"#).unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_tmcert")).args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("jobs[0].params.a"));
}

#[test]
fn binary_kappa_and_spectrum() {
    let k = Command::new(env!("CARGO_BIN_EXE_tmcert")).args(["kappa", "3.141592653589793"]).output().unwrap();
    assert!(k.status.success());
    assert!(String::from_utf8_lossy(&k.stdout).contains("4.0214"));
    let s = Command::new(env!("CARGO_BIN_EXE_tmcert"))
        .args(["spectrum", "rectangle", "--bc", "neumann", "--h", "0.125", "-k", "2", "--json"])
        .output()
        .unwrap();
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let v: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    let l0 = v["eigenvalues"][0].as_f64().unwrap();
    // lowest nonzero Neumann eigenvalue π², O(h²) high
    assert!(l0 > 9.8 && l0 < 10.1, "{l0}");
}

