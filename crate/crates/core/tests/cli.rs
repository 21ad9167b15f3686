mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn portfolio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_portfolio"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_kv(path: &Path) -> Vec<(String, f64)> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn stats_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let input = data_path("prices_april_2021.csv");
    let out = portfolio(&[
        "stats",
        "--input",
        path_str(&input),
        "--out-dir",
        path_str(dir.path()),
        "--weights",
        "0.2,0.5,0.3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert!(stats.starts_with("asset,mean,stddev,stddev_sample\nIVVB11,"));
    let p = std::fs::read_to_string(dir.path().join("portfolio_returns.csv")).unwrap();
    assert_eq!(p.lines().count(), 1 + 5 + 3);
}

#[test]
fn frontier_rows_lie_on_the_hyperbola() {
    let dir = tempfile::tempdir().unwrap();
    let input = data_path("prices_april_2021.csv");
    let out = portfolio(&[
        "frontier",
        "--input",
        path_str(&input),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let kv = read_kv(&dir.path().join("frontier_summary.csv"));
    let get = |k: &str| kv.iter().find(|(key, _)| key == k).unwrap().1;
    let (a, b, c, delta) = (get("a"), get("b"), get("c"), get("delta"));
    let x_sum: f64 = kv.iter().filter(|(k, _)| k.starts_with("x_min_")).map(|(_, v)| v).sum();
    assert!((x_sum - 1.0).abs() < 1e-12);

    let mut rdr = csv::Reader::from_path(dir.path().join("frontier.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["r", "sigma", "x_1", "x_2", "x_3"]
    );
    let mut rows = 0;
    for rec in rdr.records() {
        let v: Vec<f64> = rec.unwrap().iter().map(|s| s.parse().unwrap()).collect();
        let (r, s) = (v[0], v[1]);
        let residual = delta * s * s - c * r * r + 2.0 * a * r - b;
        assert!(residual.abs() <= 1e-8 * b.max(1.0), "r = {r}: {residual}");
        rows += 1;
    }
    assert_eq!(rows, 200);
}

#[test]
fn min_risk_prints_weights() {
    let input = data_path("prices_april_2021.csv");
    let dir = tempfile::tempdir().unwrap();
    let out = portfolio(&[
        "min-risk",
        "--input",
        path_str(&input),
        "--out-dir",
        path_str(dir.path()),
        "--precision",
        "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("asset,weight,percent\nIVVB11,"));
    assert!(text.contains("sigma_min,"));
}

#[test]
fn comma_locale_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = data_path("prices_april_2021_comma.csv");
    let out = portfolio(&[
        "stats",
        "--input",
        path_str(&input),
        "--locale",
        "comma",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(out.status.success());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Missing input file: validation.
    let out = portfolio(&["stats", "--input", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(2));

    // Malformed row: validation, with the line number in the message.
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "date,A,B\n2021-01-01,1,2\n2021-01-02,x,2\n").unwrap();
    let out = portfolio(&["stats", "--input", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    // Perfectly collinear assets: numerical.
    let collinear = dir.path().join("collinear.csv");
    std::fs::write(
        &collinear,
        "date,A,B,C\n2021-01-01,10,20,5\n2021-01-02,11,22,5.5\n2021-01-03,10.5,21,5.1\n2021-01-04,10.8,21.6,5.3\n",
    )
    .unwrap();
    let out = portfolio(&[
        "frontier",
        "--input",
        path_str(&collinear),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn backtest_replay_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    // Month-end closes for 2018.
    let prices = dir.path().join("closes.csv");
    let mut text = String::from("date,BOVA11,IVVB11\n");
    for r in monthly_rows().iter().filter(|r| r.month.starts_with("2018")) {
        text.push_str(&format!("{}-28,{},{}\n", r.month, r.closes[0], r.closes[1]));
    }
    std::fs::write(&prices, text).unwrap();
    let targets = data_path("targets_2018.csv");
    let out = portfolio(&[
        "backtest",
        "--rule",
        "markowitz",
        "--injected-targets",
        path_str(&targets),
        "--start-date",
        "2018-01-01",
        "--input",
        path_str(&prices),
        "--out-dir",
        path_str(dir.path()),
        "--precision",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("markowitz_decisions.csv")).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == "chosen").unwrap();
    let chosen: Vec<String> = rdr.records().map(|r| r.unwrap()[idx].to_string()).collect();
    assert_eq!(
        chosen[1..],
        [
            "IVVB11", "BOVA11", "IVVB11", "BOVA11", "IVVB11", "BOVA11", "IVVB11", "BOVA11", "IVVB11", "IVVB11",
            "BOVA11"
        ]
    );
    assert!(dir.path().join("markowitz_summary.csv").exists());
    assert!(dir.path().join("markowitz_quota.csv").exists());
}

fn write_generated_prices(dir: &Path) -> std::path::PathBuf {
    let series = random_prices(&mut rng(1), 2, date(2017, 1, 2), date(2018, 7, 1));
    let path = dir.join("prices.csv");
    let f = std::fs::File::create(&path).unwrap();
    portfolio_core::io::write_prices(f, &series, portfolio_core::io::Locale::Dot).unwrap();
    path
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_generated_prices(dir.path());
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# generated run\ninput = {}\nrule = markowitz\nmonthly_contribution = 250\nstart_date = 2018-01-01\n",
            prices.display()
        ),
    )
    .unwrap();
    let out_m = dir.path().join("m");
    let out = portfolio(&["backtest", "--config", path_str(&cfg), "--out-dir", path_str(&out_m)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let kv = read_kv(&out_m.join("markowitz_summary.csv"));
    assert_eq!(kv[0], ("contributed".to_string(), 1000.0 + 5.0 * 250.0));

    // The flag wins over the file.
    let out_n = dir.path().join("n");
    let out = portfolio(&[
        "backtest",
        "--config",
        path_str(&cfg),
        "--rule",
        "naive",
        "--out-dir",
        path_str(&out_n),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_n.join("naive_monthly.csv").exists());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_generated_prices(dir.path());
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = portfolio(&[
            "backtest",
            "--rule",
            "naive",
            "--naive-mode",
            "lowest-close",
            "--input",
            path_str(&prices),
            "--out-dir",
            path_str(&out_dir),
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read(out_dir.join("naive_monthly.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn quota_command_on_petr4() {
    let dir = tempfile::tempdir().unwrap();
    let input = data_path("petr4_flows.csv");
    let out = portfolio(&[
        "quota",
        "--input",
        path_str(&input),
        "--locale",
        "comma",
        "--precision",
        "4",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("quota_return = 0.0303"));
    let ledger = std::fs::read_to_string(dir.path().join("quota.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 20);
    assert!(ledger.contains("2022-02-18,0.0061,-700.0000,1.0000,1211.7"));
}

#[test]
fn markowitz_default_start_follows_warmup() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_generated_prices(dir.path());
    let out = portfolio(&[
        "backtest",
        "--rule",
        "markowitz",
        "--warmup-months",
        "3",
        "--input",
        path_str(&prices),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let monthly = std::fs::read_to_string(dir.path().join("markowitz_monthly.csv")).unwrap();
    let first_row = monthly.lines().nth(1).unwrap();
    assert!(first_row.starts_with("2017-04-"), "{first_row}");
}
