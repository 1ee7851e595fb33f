use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use fracdiff::schemes::MethodId;
use fracdiff_cli::bench::{run_bench, write_bench, CSV_FILE, RATES_FILE, SIDECAR_FILE};
use fracdiff_cli::commands::{parse_snapshot_listing, parse_vector, SOLUTION_FILE, SOLUTION_META_FILE};
use fracdiff_cli::config::{FlatConfig, Problem};
use fracdiff_cli::records::read_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracdiff"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "fracdiff {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_bench(problem: Problem, methods: &str) -> fracdiff_cli::config::BenchConfig {
    let (name, n, nx) = match problem {
        Problem::Fd1d { n } => ("fd1d", Some(n), None),
        Problem::Fd2d { nx } => ("fd2d", None, Some(nx)),
        Problem::Files { .. } => unreachable!(),
    };
    FlatConfig {
        problem: Some(name.into()),
        n,
        nx,
        methods: Some(methods.into()),
        k_min: Some(1),
        k_max: Some(6),
        ..Default::default()
    }
    .resolve()
    .unwrap()
}

#[test]
fn bench_is_deterministic() {
    for problem in [Problem::Fd1d { n: 40 }, Problem::Fd2d { nx: 7 }] {
        let cfg = small_bench(problem, "all");
        let a = run_bench(&cfg).unwrap();
        let b = run_bench(&cfg).unwrap();
        assert_eq!(a.records.len(), 8 * 3 * 6);
        let key = |r: &fracdiff_cli::records::ConvergenceRecord| (r.method.clone(), r.s.to_bits(), r.k, r.error_m.to_bits());
        let ka: Vec<_> = a.records.iter().map(key).collect();
        let kb: Vec<_> = b.records.iter().map(key).collect();
        assert_eq!(ka, kb);
        for w in a.records.windows(2) {
            assert!((w[0].method.as_str(), w[0].s, w[0].k) < (w[1].method.as_str(), w[1].s, w[1].k));
        }
    }
}

#[test]
fn oracle_rows_have_zero_error_and_methods_converge() {
    let cfg = small_bench(Problem::Fd1d { n: 30 }, "oracle,zolo,bura");
    let out = run_bench(&cfg).unwrap();
    for r in &out.records {
        match r.method.as_str() {
            "oracle" => assert_eq!(r.error_m, 0.0),
            _ => assert!(r.error_m.is_finite() && r.error_m < 1.0, "{r:?}"),
        }
    }
    let zolo: Vec<f64> = out
        .records
        .iter()
        .filter(|r| r.method == "zolo" && r.s == 0.5)
        .map(|r| r.error_m)
        .collect();
    assert!(zolo.last().unwrap() < &(zolo[0] * 1e-3));
    assert!(out.fits.iter().all(|f| f.method != "oracle"));
}

#[test]
fn csv_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_bench(Problem::Fd1d { n: 20 }, "zolo,gauss,oracle");
    cfg.out_dir = dir.path().to_path_buf();
    let out = run_bench(&cfg).unwrap();
    write_bench(&cfg, &out).unwrap();
    let text = fs::read_to_string(dir.path().join(CSV_FILE)).unwrap();
    assert!(text.starts_with("method,s,k,n,error_M,wall_time_s\n"));
    let back = read_csv(text.as_bytes()).unwrap();
    assert_eq!(back.len(), out.records.len());
    for (x, y) in back.iter().zip(&out.records) {
        assert!(x.same_row(y), "{x:?} vs {y:?}");
    }
    // Gauss exceeds the Laguerre order cap at s = 0.2 with k* = 0.15: those rows fail but the run continues.
    assert!(back.iter().any(|r| r.method == "gauss" && r.s == 0.2 && r.error_m.is_nan()));
    assert!(back.iter().any(|r| r.method == "gauss" && r.s == 0.5 && r.error_m.is_finite()));
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(SIDECAR_FILE)).unwrap()).unwrap();
    assert!(!sidecar["failures"].as_array().unwrap().is_empty());
    assert!(dir.path().join(RATES_FILE).exists());
}

#[test]
fn bench_rejects_oversized_problems() {
    let cfg = small_bench(Problem::Fd2d { nx: 50 }, "zolo");
    let err = run_bench(&cfg).unwrap_err().to_string();
    assert!(err.contains("smaller"), "{err}");
}

#[test]
fn poles_listing_examples() {
    let text = run_ok(&["poles", "--kind", "zolotarev", "-k", "1", "--lmin", "1", "--lmax", "16"]);
    let snaps = parse_snapshot_listing(&text).unwrap();
    assert_eq!(snaps.len(), 2);
    assert_eq!(snaps[0], None);
    // One Zolotarev snapshot sits at the geometric mean of the interval.
    assert!((snaps[1].unwrap() - 4.0).abs() < 1e-12);
    assert!(text.contains("snapshots = {inf, "));

    let text = run_ok(&["poles", "--kind", "sinc", "--kstar", "0.15", "--s-min", "0.2", "--s-max", "0.8"]);
    assert!(text.contains("M = 2194"));
    assert!(text.contains("N = 2194"));

    let text = run_ok(&["poles", "--kind", "bura", "-k", "3", "--s", "0.5", "--lmin", "1", "--lmax", "1e4"]);
    let snaps = parse_snapshot_listing(&text).unwrap();
    assert_eq!(snaps.len(), 4);
    assert!(snaps[1..].iter().all(|t| t.unwrap() > 0.0));
}

#[test]
fn solve_matches_closed_form_on_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["solve", "--problem", "fd1d", "--n", "3", "--method", "zolo", "-k", "3", "--s", "0.5", "--out-dir", out]);
    let u = parse_vector(&fs::read_to_string(dir.path().join(SOLUTION_FILE)).unwrap()).unwrap();
    // Sine expansion with h = 1/4.
    let n = 3;
    let h = 0.25;
    let mut expect = [0.0; 3];
    for j in 1..=n {
        let lam = 4.0 / (h * h) * (j as f64 * PI * h / 2.0).sin().powi(2);
        let v: Vec<f64> = (1..=n).map(|i| (0.5f64).sqrt() * ((i * j) as f64 * PI * h).sin()).collect();
        let c: f64 = v.iter().sum();
        for i in 0..n {
            expect[i] += c * lam.powf(-0.5) * v[i];
        }
    }
    for i in 0..n {
        assert!((u[i] - expect[i]).abs() < 1e-13, "{} vs {}", u[i], expect[i]);
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(SOLUTION_META_FILE)).unwrap()).unwrap();
    assert_eq!(meta["method"], "zolo");
}

fn solve_files(dir: &Path, args: &[&str]) -> (Vec<u8>, Vec<u8>) {
    let mut all = args.to_vec();
    all.extend(["--out-dir", dir.to_str().unwrap()]);
    run_ok(&all);
    (
        fs::read(dir.join(SOLUTION_FILE)).unwrap(),
        fs::read(dir.join(SOLUTION_META_FILE)).unwrap(),
    )
}

#[test]
fn repeated_solves_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["greedy", "direct", "dual"] {
        let args = ["solve", "--problem", "fd2d", "--nx", "9", "--method", method, "-k", "5", "--s", "0.3"];
        let a = solve_files(&dir.path().join("a"), &args);
        let b = solve_files(&dir.path().join("b"), &args);
        assert_eq!(a, b, "{method}");
    }
}

#[test]
fn exported_approximant_reproduces_direct_solve() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("bura.json");
    let base = ["--problem", "fd1d", "--n", "25", "--s", "0.6"];
    let mut export = vec!["bura-export", "-k", "5", "-o", json.to_str().unwrap()];
    export.extend(base);
    run_ok(&export);
    let mut direct = vec!["solve", "--method", "direct", "-k", "5"];
    direct.extend(base);
    let plain = solve_files(&dir.path().join("plain"), &direct);
    direct.extend(["--approximant", json.to_str().unwrap()]);
    let imported = solve_files(&dir.path().join("imported"), &direct);
    assert_eq!(plain.0, imported.0);
}

#[test]
fn sinc_outside_range_is_a_precondition_error() {
    let out = bin()
        .args(["solve", "--problem", "fd1d", "--n", "10", "--method", "sinc", "-k", "3", "--s", "0.9", "--s-min", "0.2", "--s-max", "0.8"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sinc range"), "{err}");
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    fs::write(&cfg, "problem = \"fd1d\"\nn = 16\nmethods = \"zolo,oracle\"\ns = [0.5]\nk_max = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&["bench", "--config", cfg.to_str().unwrap(), "--k-max", "2", "--out-dir", out_dir.to_str().unwrap(), "--threads", "2"]);
    let recs = read_csv(fs::File::open(out_dir.join(CSV_FILE)).unwrap()).unwrap();
    assert_eq!(recs.len(), 2 * 2);
    assert!(recs.iter().all(|r| r.n == 16 && r.k <= 2));
    assert_eq!(MethodId::ALL.len(), 8);
}
