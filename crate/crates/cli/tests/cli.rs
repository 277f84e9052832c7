use std::fs;
use std::path::PathBuf;
use std::process::Command;

use mz_cli::{parse_config, resolve, run, Flags, Output};

fn run_in_process(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mz").chain(args.iter().copied());
    let code = run(argv, None, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn config_parsing() {
    let m = parse_config("# comment\ntol = 1e-6\ncache-dir=/tmp/x  # trailing\n\nthreads=2\noutput=csv\n").unwrap();
    assert_eq!(m["tol"], "1e-6");
    assert_eq!(m["cache_dir"], "/tmp/x");
    assert_eq!(m["threads"], "2");
    assert!(parse_config("bogus=1").is_err());
    assert!(parse_config("tol").is_err());
}

#[test]
fn precedence_is_flags_then_env_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("mz.conf");
    fs::write(&file, "tol=1e-6\ncache_dir=/from/file\nthreads=3\noutput=csv\n").unwrap();
    let base = Flags {
        config: Some(file.clone()),
        ..Flags::default()
    };
    let c = resolve(&base, None).unwrap();
    assert_eq!((c.tol, c.threads, c.output), (1e-6, 3, Some(Output::Csv)));
    assert_eq!(c.cache_dir, Some(PathBuf::from("/from/file")));
    let c = resolve(&base, Some("/from/env")).unwrap();
    assert_eq!(c.cache_dir, Some(PathBuf::from("/from/env")));
    let flags = Flags {
        config: Some(file),
        cache_dir: Some(PathBuf::from("/from/flag")),
        tol: Some(1e-9),
        output: Some(Output::Json),
        ..Flags::default()
    };
    let c = resolve(&flags, Some("/from/env")).unwrap();
    assert_eq!(c.cache_dir, Some(PathBuf::from("/from/flag")));
    assert_eq!((c.tol, c.output), (1e-9, Some(Output::Json)));
    let d = resolve(&Flags::default(), None).unwrap();
    assert_eq!((d.tol, d.threads, d.cache_dir, d.output), (1e-8, 0, None, None));
    assert!(resolve(
        &Flags {
            tol: Some(-1.0),
            ..Flags::default()
        },
        None
    )
    .is_err());
}

#[test]
fn zeta_json_and_csv() {
    let (code, out, _) = run_in_process(&["zeta", "--t", "14"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["Z"]["value"].as_f64().unwrap() + 0.105_626_267_779_882_61).abs() < 1e-10);
    let (code, csv, _) = run_in_process(&["zeta", "--t", "14", "--output", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "Z.abs_err,Z.value,t,theta,zeta.abs_err,zeta.value.im,zeta.value.re"
    );
}

#[test]
fn coeffs_are_exact() {
    let (code, out, _) = run_in_process(&["coeffs", "--N", "2", "--threads", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["a"][1]["num"], 1);
    assert_eq!(v["a"][1]["den"], 24);
    assert_eq!(v["a"][2]["num"], 7);
    assert_eq!(v["a"][2]["den"], 5760);
}

#[test]
fn exit_codes() {
    assert_eq!(run_in_process(&["zeta"]).0, 2);
    assert_eq!(run_in_process(&["zeta", "--t", "-3"]).0, 2);
    assert_eq!(run_in_process(&["nonsense"]).0, 2);
    assert_eq!(run_in_process(&["z1", "--sigma", "0.2", "--t", "5"]).0, 2);
    assert_eq!(
        run_in_process(&["z1", "--sigma", "2", "--t", "0", "--resolution", "9"]).0,
        2
    );
    assert_eq!(run_in_process(&["coeffs", "--N", "40"]).0, 2);
    assert_eq!(
        run_in_process(&["scan", "--sigma", "0.5", "--t0", "10", "--t1", "5", "--dt", "1"]).0,
        2
    );
    assert_eq!(run_in_process(&["zeta", "--t", "1", "--tol", "2"]).0, 2);
    assert_eq!(run_in_process(&["--help"]).0, 0);
}

#[test]
fn pole_proximity_reports_laurent_model() {
    let (code, out, err) = run_in_process(&["z1", "--sigma", "1.0005", "--t", "0"]);
    assert_eq!(code, 2);
    assert!(err.contains("pole"));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["method"], "laurent_model");
    assert!(v["error"].as_str().unwrap().contains("pole"));
    let h: f64 = 0.0005;
    let model = 1.0 / (h * h) + (2.0 * mz_core::EULER_GAMMA - mz_core::LN_2PI) / h;
    assert!((v["value"]["re"].as_f64().unwrap() - model).abs() <= 1e-9 * model);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.json");
    let p = path.to_str().unwrap();
    let (code, out, _) = run_in_process(&["zeta", "--t", "100", "--out", p]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["t"], 100.0);
}

fn binary(args: &[&str], cache: Option<&std::path::Path>) -> (i32, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mz"));
    cmd.args(args).env_remove("MZ_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("MZ_CACHE_DIR", dir);
    }
    let o = cmd.output().unwrap();
    (o.status.code().unwrap(), o.stdout)
}

#[test]
fn cache_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["e", "--T", "1000"];
    let (c0, plain) = binary(&args, None);
    let (c1, cold) = binary(&args, Some(dir.path()));
    let (c2, warm) = binary(&args, Some(dir.path()));
    assert_eq!((c0, c1, c2), (0, 0, 0));
    assert_eq!(plain, cold);
    assert_eq!(cold, warm);
    assert!(dir.path().join("z2_nodes_v1.bin").exists());
    let zero = ["zero-e", "--T", "500"];
    let (_, a) = binary(&zero, Some(dir.path()));
    let (_, b) = binary(&zero, Some(dir.path()));
    let (_, c) = binary(&zero, None);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(fs::read_to_string(dir.path().join("e_zeros.csv"))
        .unwrap()
        .starts_with("T_anchor,C,x_star,residual\n"));
}

#[test]
fn short_scan_has_header_and_sorted_rows() {
    let (code, out) = binary(
        &["scan", "--sigma", "0.9", "--t0", "2", "--t1", "6", "--dt", "0.5"],
        None,
    );
    assert_eq!(code, 0);
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(mz_core::mellin::SCAN_HEADER));
    let ts: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ts.len(), 9);
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
}
