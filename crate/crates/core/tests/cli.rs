use std::process::Command as Process;

use caputokit::cli::emit::{
    json_lines, kernel_csv, kernel_header, read_json_lines, read_kernel_csv, KernelRecord,
};
use caputokit::cli::{
    parse_args, run_command, thread_cap, CliError, Command, Format, Points, RunConfig, Spatial, Suite,
    EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PROBE_FAILURE,
};
use caputokit::kernels::{KernelKind, Regime, SpatialDerivative};
use proptest::prelude::*;

fn args(line: &str) -> Vec<String> {
    std::iter::once("caputokit".to_string())
        .chain(line.split_whitespace().map(String::from))
        .collect()
}

fn config(line: &str) -> RunConfig {
    parse_args(args(line)).unwrap().config
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_caputokit"))
}

// parse_config

#[test]
fn solve_flags_fill_the_rest_with_defaults() {
    let c = config("solve --alpha 0.5 --d 1 --nx 256 --nt 512");
    let want = RunConfig {
        command: Command::Solve,
        alpha: 0.5,
        d: 1,
        nx: 256,
        nt: 512,
        ..RunConfig::default()
    };
    assert_eq!(c, want);
    // every field is echoed, defaults included
    let echoed: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
    let obj = echoed.as_object().unwrap();
    for key in ["command", "alpha", "beta", "horizon", "length", "seed", "format", "series_tol", "output"] {
        assert!(obj.contains_key(key), "{key}");
    }
    assert_eq!(obj["seed"], 7);
}

#[test]
fn alpha_outside_its_window_names_the_field() {
    for bad in ["2.0", "0", "-0.5", "3"] {
        match parse_args(args(&format!("solve --alpha {bad}"))) {
            Err(CliError::Config(e)) => {
                assert_eq!(e.field, "alpha");
                assert!(e.to_string().contains("alpha ∈ (0, 2)"), "{e}");
            }
            other => panic!("{bad}: {other:?}"),
        }
    }
}

#[test]
fn other_windows_are_enforced() {
    for (line, field) in [
        ("kernel --d 4", "d"),
        ("kernel --t 0", "t"),
        ("kernel --xs 0,1", "xs"),
        ("kernel --spatial grad:2", "spatial"),
        ("solve --p 1", "p"),
        ("solve --nx 2", "nx"),
        ("verify --nt 5", "nt"),
        ("ml --beta 0", "beta"),
        ("bench --repeats 0", "repeats"),
        ("kernel --series-tol 0.5", "series_tol"),
        ("kernel --output a/b.csv", "output"),
    ] {
        match parse_args(args(line)) {
            Err(CliError::Config(e)) => assert_eq!(e.field, field, "{line}"),
            other => panic!("{line}: {other:?}"),
        }
    }
}

#[test]
fn json_file_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"command": "kernel", "kind": "q", "alpha": 1.3, "d": 2, "t": 0.5,
            "xs": "0.1:4:64", "spatial": "hess:1:2", "n": 1, "format": "json"}"#,
    )
    .unwrap();
    let from_file = parse_args(args(&format!("--config {}", path.display()))).unwrap().config;
    let from_flags = config("kernel --kind q --alpha 1.3 --d 2 --t 0.5 --xs 0.1:4:64 --spatial hess:1:2 --n 1 --format json");
    assert_eq!(from_file, from_flags);
    assert_eq!(from_file.spatial, Spatial(SpatialDerivative::Hessian(0, 1)));
    // the echoed config reads back to itself
    assert_eq!(RunConfig::from_json(&from_file.to_json()).unwrap(), from_file);
}

#[test]
fn json_configs_reject_unknown_keys_and_bad_values() {
    let unknown = RunConfig::from_json(r#"{"command": "solve", "alpah": 0.5}"#).unwrap_err();
    assert!(unknown.message.contains("alpah"), "{unknown}");
    let missing = RunConfig::from_json(r#"{"alpha": 0.5}"#).unwrap_err();
    assert_eq!(missing.field, "command");
    let window = RunConfig::from_json(r#"{"command": "solve", "alpha": 2.0}"#).unwrap_err();
    assert_eq!(window.field, "alpha");
}

#[test]
fn config_file_and_subcommand_are_exclusive() {
    assert!(matches!(parse_args(args("--config x.json kernel")), Err(CliError::Usage(_))));
    assert!(matches!(parse_args(args("")), Err(CliError::Config(_))));
}

#[test]
fn point_specs_parse_and_print_back() {
    let p: Points = "0.1:4:64".parse().unwrap();
    let v = p.values();
    assert_eq!(v.len(), 64);
    assert_eq!(v[0], 0.1);
    assert_eq!(v[63], 4.0);
    assert_eq!(String::from(p.clone()).parse::<Points>().unwrap(), p);
    let list: Points = "-2,0.5,3".parse().unwrap();
    assert_eq!(list.values(), vec![-2.0, 0.5, 3.0]);
    assert!("1:2".parse::<Points>().is_err());
    assert!("a:2:3".parse::<Points>().is_err());
    for s in ["none", "grad:3", "hess:1:2", "laplacian"] {
        let sp: Spatial = s.parse().unwrap();
        assert_eq!(String::from(sp), s);
    }
    assert!("grad:0".parse::<Spatial>().is_err());
}

#[test]
fn thread_cap_reads_positive_counts() {
    assert_eq!(thread_cap(None).unwrap(), None);
    assert_eq!(thread_cap(Some("3")).unwrap(), Some(3));
    for bad in ["0", "-1", "many"] {
        assert_eq!(thread_cap(Some(bad)).unwrap_err().field, "CAPUTOKIT_THREADS");
    }
}

// emit_report

fn sample_record(d: usize) -> KernelRecord {
    KernelRecord {
        alpha: 0.5,
        d,
        kind: KernelKind::K,
        n: 1,
        m: 2,
        t: 0.75,
        x: (0..d).map(|i| 0.1 + i as f64).collect(),
        big_r: 1.0 / 3.0,
        value: -2.5e-7,
        regime: Regime::Series,
        flag: "ok".into(),
    }
}

#[test]
fn empty_table_is_header_only() {
    for d in 1..=3 {
        let bytes = kernel_csv(d, &[]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text, format!("{}\n", kernel_header(d).join(",")));
        assert!(read_kernel_csv(text.as_bytes()).unwrap().is_empty());
    }
}

#[test]
fn one_record_is_one_row_in_schema_order() {
    let text = String::from_utf8(kernel_csv(2, &[sample_record(2)]).unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,d,kind,n,m,t,x1,x2,R,value,regime,flag");
    assert_eq!(lines.len(), 2);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells.len(), 12);
    assert_eq!(cells[1..5], ["2", "K", "1", "2"]);
    assert_eq!(cells[10..], ["series", "ok"]);
    // 17 significant digits
    assert_eq!(cells[8], "3.3333333333333331e-1");
}

#[test]
fn tables_reject_records_of_another_dimension() {
    assert!(kernel_csv(1, &[sample_record(2)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_and_json_round_trip_to_equal_records(
        values in prop::collection::vec((-1e300f64..1e300, 1e-300f64..1e300, 0usize..3), 0..12),
        d in 1usize..=3,
    ) {
        let records: Vec<KernelRecord> = values
            .iter()
            .map(|&(v, r, n)| KernelRecord {
                alpha: 0.1 + r.fract().abs(),
                d,
                kind: [KernelKind::P, KernelKind::Q, KernelKind::K][n],
                n,
                m: 2 - n,
                t: r,
                x: vec![v / 3.0; d],
                big_r: r / 7.0,
                value: v,
                regime: [Regime::Series, Regime::Contour, Regime::Underflow][n],
                flag: if n == 2 { "underflow".into() } else { "ok".into() },
            })
            .collect();
        let from_csv = read_kernel_csv(&kernel_csv(d, &records).unwrap()).unwrap();
        let from_json: Vec<KernelRecord> = read_json_lines(&json_lines(&records).unwrap()).unwrap();
        prop_assert_eq!(&from_csv, &records);
        prop_assert_eq!(&from_json, &records);
    }
}

// run_command

#[test]
fn kernel_table_of_64_values_with_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("kernel --kind p --alpha 0.5 --d 1 --t 1 --xs 0.1:4:64");
    let paths = run_command(&cfg, dir.path()).unwrap();
    assert_eq!(paths.len(), 2);
    let table = std::fs::read(dir.path().join("kernel.csv")).unwrap();
    let rows = read_kernel_csv(&table).unwrap();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().any(|r| r.regime == Regime::Series));
    assert!(rows.iter().any(|r| r.regime == Regime::Contour));
    for r in &rows {
        assert!(r.value > 0.0 && r.value.is_finite());
        assert_eq!(r.regime == Regime::Series, r.big_r <= 1.0);
    }
    // the sidecar carries the resolved config
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("kernel.csv.meta.json")).unwrap()).unwrap();
    let echoed: RunConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    assert_eq!(echoed, cfg);
}

#[test]
fn verify_runs_are_byte_identical() {
    let cfg = RunConfig {
        command: Command::Verify,
        suite: Suite::KernelL1,
        samples: 8,
        seed: 7,
        ..RunConfig::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_command(&cfg, a.path()).unwrap();
    run_command(&cfg, b.path()).unwrap();
    for name in ["reports.jsonl", "reports.jsonl.meta.json", "summary.csv", "summary.csv.meta.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
    let reports = std::fs::read_to_string(a.path().join("reports.jsonl")).unwrap();
    assert_eq!(reports.lines().count(), 3);
    assert!(!reports.contains("seconds"));
    let timings = std::fs::read_to_string(a.path().join("timings.csv")).unwrap();
    assert_eq!(timings.lines().count(), 4);
}

#[test]
fn single_mode_solve_writes_field_and_grid_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("solve --alpha 0.6 --nx 16 --nt 32");
    run_command(&cfg, dir.path()).unwrap();
    let field = std::fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    assert_eq!(field.lines().next().unwrap(), "t,x1,u");
    assert_eq!(field.lines().count(), 1 + 33 * 16);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("solve.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["meta"]["grid"]["points"], 16);
    assert_eq!(meta["meta"]["grid"]["steps"], 32);
    assert_eq!(meta["meta"]["grid"]["alpha"], 0.6);
    let err = meta["meta"]["max_abs_error"].as_f64().unwrap();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn bench_reports_a_median_per_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("bench --op kernel_eval --repeats 3");
    run_command(&cfg, dir.path()).unwrap();
    let table = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "op,regime,count,median_seconds");
    let regimes: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(regimes.contains(&"series") && regimes.contains(&"contour"), "{regimes:?}");
    let total: usize = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 31);
}

#[test]
fn ml_json_lines_carry_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("ml --alpha 1 --zs -3,0,2");
    cfg.format = Format::Json;
    run_command(&cfg, dir.path()).unwrap();
    let rows: Vec<serde_json::Value> =
        read_json_lines(&std::fs::read(dir.path().join("ml.jsonl")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    for (row, z) in rows.iter().zip([-3.0f64, 0.0, 2.0]) {
        let v = row["value"].as_f64().unwrap();
        assert!((v - z.exp()).abs() <= 1e-13 * z.exp(), "{z}: {v}");
    }
}

// exit codes of the binary

#[test]
fn binary_exit_codes_follow_the_taxonomy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = |extra: &[&str]| {
        binary()
            .args(extra)
            .args(["--out-dir", out])
            .output()
            .unwrap()
    };
    let ok = run(&["kernel", "--xs", "0.5,1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stderr).contains("\"command\": \"kernel\""));

    let bad = run(&["solve", "--alpha", "2.0"]);
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("alpha ∈ (0, 2)"));

    assert_eq!(run(&["solve", "--no-such-flag"]).status.code(), Some(EXIT_CONFIG));

    let budget = run(&["kernel", "--series-terms", "1", "--xs", "0.1"]);
    assert_eq!(budget.status.code(), Some(EXIT_NUMERICAL));

    // two envelope grid points cannot hold the constant steady
    let probe = run(&["verify", "--suite", "envelopes", "--points", "2", "--alpha", "1.2"]);
    assert_eq!(probe.status.code(), Some(EXIT_PROBE_FAILURE));
    assert!(dir.path().join("summary.csv").exists());
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let run = |value: &str| {
        binary()
            .env("CAPUTOKIT_THREADS", value)
            .args(["kernel", "--xs", "0.5", "--out-dir", dir.path().to_str().unwrap()])
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("2"), Some(0));
    assert_eq!(run("0"), Some(EXIT_CONFIG));
}

#[test]
fn print_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .args(["solve", "--nx", "256", "--nt", "512", "--print-config", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let echoed = RunConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(echoed.nx, 256);
    assert_eq!(echoed.nt, 512);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
