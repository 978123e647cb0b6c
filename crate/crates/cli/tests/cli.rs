use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bstunnel");

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("BSTUNNEL_THREADS");
    if let Some(t) = threads {
        cmd.env("BSTUNNEL_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
phase = "random"
methods = ["mc", "gauss", "gamma", "exact"]

[grid]
length = [20.0, 40.0]
n_tags = [1, 4, 9]

[mc]
runs = 4000
chunk = 500
seed = 11
"#;

fn sweep(config: &Path, out: &Path, threads: Option<&str>) -> Vec<u8> {
    let o = run(
        &[
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
        ],
        threads,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn header_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let bytes = sweep(&cfg, &dir.path().join("out.csv"), None);
    let text = String::from_utf8(bytes).unwrap();
    let golden = include_str!("golden/result_header.csv");
    assert_eq!(text.lines().next().unwrap(), golden.trim_end());
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 4);
}

#[test]
fn sweep_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let first = sweep(&cfg, &dir.path().join("a.csv"), None);
    for (i, t) in ["1", "4", "16"].iter().enumerate() {
        let again = sweep(&cfg, &dir.path().join(format!("b{i}.csv")), Some(t));
        assert_eq!(first, again, "BSTUNNEL_THREADS={t}");
    }
}

#[test]
fn row_count_is_points_times_methods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "n.toml",
        "methods = [\"mc\", \"gamma\"]\n[grid]\nn_tags = { from = 1, to = 80, step = 1 }\n[mc]\nruns = 200\n",
    );
    let text = String::from_utf8(sweep(&cfg, &dir.path().join("out.csv"), None)).unwrap();
    assert_eq!(text.lines().count(), 1 + 160);
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let csv_text = String::from_utf8(sweep(&cfg, &dir.path().join("o.csv"), None)).unwrap();
    let json_out = dir.path().join("nested/deeper/o.json");
    let o = run(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--output",
            json_out.to_str().unwrap(),
            "--format",
            "json",
        ],
        None,
    );
    assert!(o.status.success());
    let rows: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_slice(&std::fs::read(&json_out).unwrap()).unwrap();
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(rows.len(), lines.clone().count());
    for (row, line) in rows.iter().zip(lines) {
        assert_eq!(row.keys().map(String::as_str).collect::<Vec<_>>(), header);
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(row["method"], fields[7]);
        assert_eq!(row["value"].as_f64().unwrap(), fields[8].parse::<f64>().unwrap());
        assert_eq!(row["n_tags"].as_u64().unwrap(), fields[4].parse::<u64>().unwrap());
        let v = row["value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(args, None).status.code().unwrap();

    assert_eq!(
        code(&["doppler", "--speed", "350kmh", "--fc", "1.8GHz", "--ts", "1ms", "--eps", "0.01"]),
        0
    );
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&["sweep", "--config", missing.to_str().unwrap()]), 2);
    for (name, text) in [
        ("syntax.toml", "[model\n"),
        ("eta.toml", "[model]\neta = 1.5\n"),
        ("mismatch.toml", "methods = [\"exact\"]\n"),
        ("empty_grid.toml", "[grid]\nn_tags = []\n"),
        ("unknown.toml", "[model]\nbogus = 1\n"),
    ] {
        let p = write(dir.path(), name, text);
        let o = run(&["sweep", "--config", p.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(
            String::from_utf8_lossy(&o.stderr).contains("line "),
            "{name}: no line reference"
        );
    }
    assert_eq!(code(&["prob", "--phase", "adjustable", "--method", "exact"]), 2);
    assert_eq!(code(&["prob", "--eta", "1.5"]), 2);
    assert_eq!(code(&["prob", "--n", "-3"]), 2);
    assert_eq!(code(&["baseband", "--preset", "warp", "--samples", "4"]), 2);
    // d^400 overflows, the exact integrand turns non-finite.
    assert_eq!(
        code(&["prob", "--phase", "random", "--method", "exact", "--alpha", "400"]),
        3
    );
    let o = run(&["prob"], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eta_error_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "eta.toml", "# comment\n[model]\nalpha = 2.0\neta = 1.5\n");
    let o = run(&["sweep", "--config", p.to_str().unwrap()], None);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("model.eta") && err.contains("line 4"), "{err}");
}

#[test]
fn prob_prints_an_estimate() {
    let o = run(
        &[
            "prob", "--phase", "random", "--method", "mc", "--n", "5", "--l1", "20", "--length", "40", "--runs",
            "2000", "--seed", "3",
        ],
        None,
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["method"], "mc");
    assert_eq!(v["runs"], 2000);
    assert!(v["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn doppler_report_uses_suffixes() {
    let o = run(
        &[
            "doppler", "--speed", "97.22", "--fc", "2.1GHz", "--ts", "1ms", "--eps", "0.1",
        ],
        None,
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["doppler_hz"].as_f64().unwrap() - 681.0).abs() < 1.0);
    assert!((v["residual_phase_rad"].as_f64().unwrap() - 0.43).abs() < 0.01);
}

#[test]
fn pdf_and_baseband_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pdf.csv");
    let o = run(
        &[
            "pdf",
            "--n",
            "2,20",
            "--samples",
            "10000",
            "--bins",
            "20",
            "--sigma-delta",
            "0.1",
            "--output",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 20);
    assert!(text.starts_with("n_tags,quantity,reference,bin_lo,bin_hi,density,reference_pdf,ks\n"));
    assert_eq!(run(&["pdf", "--samples", "100"], None).status.code(), Some(2));

    let trace = dir.path().join("trace.csv");
    let o = run(
        &[
            "baseband",
            "--preset",
            "hsr-1.8ghz",
            "--samples",
            "1000",
            "--output",
            trace.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("n,re,im\n"));
    assert_eq!(text.lines().count(), 1001);
    // The direct link dominates; its residual is 1% of the 1.8 GHz Doppler per 1 ms sample.
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let step = v["residual"]["mean_step"].as_f64().unwrap();
    assert!((step - 0.0367).abs() < 0.003, "{step}");
}
