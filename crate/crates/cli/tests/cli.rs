use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use vinerisk::dvine::DVineRegressionModel;
use vinerisk_cli::config::{COVARIATES, RESPONSE};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vinerisk"))
        .current_dir(dir)
        .env("VINERISK_THREADS", "1")
        .args(args)
        .output()
        .expect("spawn cli")
}

fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn exit_code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().expect("exit code")
}

/// Simulated reference data and a default fit, shared by the tests below.
struct Fixture {
    dir: PathBuf,
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir").keep();
        run_ok(&dir, &["simulate", "--n", "400", "--seed", "2021", "--out", "data.csv"]);
        run_ok(&dir, &["fit", "--data", "data.csv", "--out", "fit"]);
        Fixture { dir }
    })
}

fn load_model(path: &Path) -> DVineRegressionModel {
    serde_json::from_str(&std::fs::read_to_string(path).expect("model file")).expect("model json")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).expect("csv");
    let headers = reader.headers().expect("headers").iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.expect("record").iter().map(|f| f.parse().expect("number")).collect())
        .collect();
    (headers, rows)
}

#[test]
fn simulate_is_deterministic_with_table_names() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_ok(dir, &["simulate", "--n", "50", "--seed", "3", "--out", "a.csv"]);
    run_ok(dir, &["simulate", "--n", "50", "--seed", "3", "--out", "b.csv"]);
    run_ok(dir, &["simulate", "--n", "50", "--seed", "4", "--out", "c.csv"]);
    let a = std::fs::read(dir.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.join("b.csv")).unwrap());
    assert_ne!(a, std::fs::read(dir.join("c.csv")).unwrap());

    let (headers, rows) = read_csv(&dir.join("a.csv"));
    assert_eq!(rows.len(), 50);
    assert_eq!(headers[0], RESPONSE);
    let mut covs: Vec<&str> = headers[1..].iter().map(String::as_str).collect();
    covs.sort_unstable();
    let mut expected = COVARIATES.to_vec();
    expected.sort_unstable();
    assert_eq!(covs, expected);
}

#[test]
fn fitted_model_round_trips() {
    let fx = fixture();
    let path = fx.dir.join("fit/model.json");
    let model = load_model(&path);
    let again = serde_json::to_string_pretty(&model).unwrap() + "\n";
    assert_eq!(again, std::fs::read_to_string(&path).unwrap());

    let reloaded: DVineRegressionModel = serde_json::from_str(&again).unwrap();
    let (headers, rows) = read_csv(&fx.dir.join("data.csv"));
    let order: Vec<usize> =
        model.covariate_names().iter().map(|n| headers.iter().position(|h| h == n).unwrap()).collect();
    for row in rows.iter().take(40) {
        let x: Vec<f64> = order.iter().map(|&k| row[k]).collect();
        for c in [1800.0, 2200.0] {
            assert_eq!(model.exceedance(c, &x).unwrap(), reloaded.exceedance(c, &x).unwrap());
        }
    }
    for file in ["summary.txt", "edges.txt", "margins.csv", "selection.json"] {
        assert!(fx.dir.join("fit").join(file).is_file(), "missing {file}");
    }
}

#[test]
fn noise_covariate_leaves_at_most_ten_summary_rows() {
    let fx = fixture();
    let model = load_model(&fx.dir.join("fit/model.json"));
    assert!(model.covariate_names().len() <= 10, "selected {:?}", model.covariate_names());
    assert!(!model.covariate_names().contains(&vinerisk_cli::reference::NOISE_COVARIATE));
    let summary = std::fs::read_to_string(fx.dir.join("fit/summary.txt")).unwrap();
    let rows = summary.lines().filter(|l| COVARIATES.iter().any(|c| l.split_whitespace().next() == Some(c))).count();
    assert_eq!(rows, model.covariate_names().len());
}

#[test]
fn threshold_far_above_support_flags_nothing() {
    let fx = fixture();
    let out = tempfile::tempdir().unwrap();
    let out_dir = out.path().to_str().unwrap();
    let stdout = run_ok(
        &fx.dir,
        &["assess", "--model", "fit/model.json", "--data", "data.csv", "--threshold", "1e6", "--out", out_dir],
    )
    .stdout;
    let text = String::from_utf8(stdout).unwrap();
    let row = text.lines().nth(1).expect("count row");
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[1], "400");
    assert_eq!(fields[2], "0");
    assert!(out.path().join("risk_1000000.csv").is_file());
    assert!(out.path().join("risk_1000000.json").is_file());
}

#[test]
fn assess_then_rank() {
    let fx = fixture();
    let out = tempfile::tempdir().unwrap();
    let assess_dir = out.path().join("assess");
    let ranking = out.path().join("ranking.txt");
    let cfg = out.path().join("config.toml");
    std::fs::write(&cfg, "p_threshold = 0.05\n").unwrap();
    run_ok(
        &fx.dir,
        &[
            "assess",
            "--model",
            "fit/model.json",
            "--data",
            "data.csv",
            "--threshold",
            "1900",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            assess_dir.to_str().unwrap(),
        ],
    );
    let report = assess_dir.join("risk_1900.json");
    let stdout = run_ok(
        &fx.dir,
        &["rank", "--report", report.to_str().unwrap(), "--data", "data.csv", "--top", "3", "--out", ranking.to_str().unwrap()],
    )
    .stdout;
    let text = std::fs::read_to_string(&ranking).unwrap();
    assert_eq!(String::from_utf8(stdout).unwrap(), text);
    assert!(text.contains("top 3 factors"));
    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ranking.with_extension("json")).unwrap()).unwrap();
    assert_eq!(results.as_array().unwrap().len(), 2);
}

#[test]
fn benchmark_writes_counts_and_crossings() {
    let fx = fixture();
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("config.toml");
    std::fs::write(&cfg, "[lqr]\nbootstrap_replicates = 20\n").unwrap();
    let bench = out.path().join("bench");
    run_ok(
        &fx.dir,
        &[
            "benchmark-lqr",
            "--data",
            "data.csv",
            "--threshold",
            "2200",
            "--levels",
            "0.1,0.5,0.9",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            bench.to_str().unwrap(),
        ],
    );
    let counts = std::fs::read_to_string(bench.join("counts.csv")).unwrap();
    let lines: Vec<&str> = counts.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("threshold,n,lqr,lqr_pct,dvine_gauss"));
    assert!(lines[1].starts_with("2200,400,"));
    for file in ["crossings.csv", "lqr_coefficients.txt", "lqr_fits.json", "dvine_gauss_summary.txt", "dvine_par_summary.txt"] {
        assert!(bench.join(file).is_file(), "missing {file}");
    }
}

#[test]
fn marginal_only_fit_warns_and_gives_half_at_the_median() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("config.toml"), "covariates = []\nmargin_families = [\"normal\"]\n").unwrap();
    run_ok(dir, &["simulate", "--n", "200", "--seed", "5", "--out", "data.csv"]);
    let fit = run_ok(dir, &["fit", "--data", "data.csv", "--config", "config.toml", "--out", "fit"]);
    assert!(String::from_utf8_lossy(&fit.stderr).contains("warning"));
    let model = load_model(&dir.join("fit/model.json"));
    assert!(model.covariate_names().is_empty());

    let median = model.response().margin.quantile(0.5).to_string();
    run_ok(dir, &["assess", "--model", "fit/model.json", "--data", "data.csv", "--threshold", &median, "--out", "assess"]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("assess/risk_{median}.json"))).unwrap())
            .unwrap();
    let records = report["report"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 200);
    for r in records {
        assert!((r["alpha"].as_f64().unwrap() - 0.5).abs() < 1e-9, "{r}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(exit_code(dir, &["no-such-command"]), 2);
    assert_eq!(exit_code(dir, &["fit", "--data", "absent.csv"]), 2);

    std::fs::write(dir.join("partial.csv"), "th80,hws\n1700,1\n1800,2\n").unwrap();
    assert_eq!(exit_code(dir, &["fit", "--data", "partial.csv"]), 2);

    std::fs::write(dir.join("bad.toml"), "p_threshold = 2.0\n").unwrap();
    run_ok(dir, &["simulate", "--n", "40", "--seed", "1", "--out", "small.csv"]);
    assert_eq!(exit_code(dir, &["fit", "--data", "small.csv", "--config", "bad.toml"]), 2);

    run_ok(dir, &["simulate", "--n", "20", "--seed", "1", "--out", "tiny.csv"]);
    assert_eq!(exit_code(dir, &["fit", "--data", "tiny.csv"]), 4);

    let mut flat = String::from("th80,hws\n");
    for i in 0..60 {
        flat.push_str(&format!("{},3.5\n", 1500 + 7 * i));
    }
    std::fs::write(dir.join("flat.csv"), flat).unwrap();
    std::fs::write(dir.join("one.toml"), "covariates = [\"hws\"]\n").unwrap();
    assert_eq!(exit_code(dir, &["fit", "--data", "flat.csv", "--config", "one.toml"]), 3);

    let out = Command::new(env!("CARGO_BIN_EXE_vinerisk"))
        .current_dir(dir)
        .env("VINERISK_THREADS", "zero")
        .args(["simulate", "--n", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rank_with_too_few_risky_records_exits_four() {
    let fx = fixture();
    let out = tempfile::tempdir().unwrap();
    let assess_dir = out.path().join("assess");
    run_ok(
        &fx.dir,
        &[
            "assess",
            "--model",
            "fit/model.json",
            "--data",
            "data.csv",
            "--threshold",
            "1e6",
            "--out",
            assess_dir.to_str().unwrap(),
        ],
    );
    let report = assess_dir.join("risk_1000000.json");
    let ranking = out.path().join("ranking.txt");
    let code = exit_code(
        &fx.dir,
        &["rank", "--report", report.to_str().unwrap(), "--data", "data.csv", "--out", ranking.to_str().unwrap()],
    );
    assert_eq!(code, 4);
}
