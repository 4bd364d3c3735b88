//! End-to-end runs of the `mkfactor` binary.

mod common;

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use mkfactor::io::{save_series, SeriesFormat};
use mkfactor::{generate_scenario, Dist, MatrixSeries, ScenarioSpec};
use nalgebra::DMatrix;

fn mkfactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkfactor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> Vec<HashMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap();
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            headers.iter().zip(r.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}

fn write_scenario(dir: &Path, name: &str, dist: Dist, t: usize, p: usize) -> String {
    let (x, _) = generate_scenario(&ScenarioSpec::scenario_a(t, p, p, dist, 11)).unwrap();
    let path = dir.join(name);
    save_series(&x, &path, SeriesFormat::from_path(&path)).unwrap();
    path.display().to_string()
}

#[test]
fn simulate_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = mkfactor(&[
            "simulate", "--dist", "t2", "--T", "20", "--p1", "12", "--p2", "10", "--reps", "6",
            "--seed", "5", "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        files.push((
            std::fs::read(out.join("simulate_reps.csv")).unwrap(),
            std::fs::read(out.join("simulate_summary.csv")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files[0].0.clone()).unwrap();
    assert!(text.starts_with("# command = simulate\n"));
    assert!(text.contains("# seed = 5\n"));
    assert!(!text.contains("threads"));
}

#[test]
fn summary_cells_match_the_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = mkfactor(&[
        "simulate", "--T", "15", "--p1", "10", "--p2", "10", "--reps", "5", "--methods", "mrts",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let reps = read_csv(&out.join("simulate_reps.csv"));
    let summary = read_csv(&out.join("simulate_summary.csv"));
    assert_eq!(reps.len(), 5);
    assert_eq!(summary.len(), 1);
    let s = &summary[0];
    for col in ["D_R", "D_C", "MSE", "MSE_F"] {
        let xs: Vec<f64> = reps.iter().map(|r| r[col].parse().unwrap()).collect();
        let (mean, sd) = mkfactor::harness::mean_sd(&xs);
        let got_mean: f64 = s[&format!("mean_{col}")].parse().unwrap();
        let got_sd: f64 = s[&format!("sd_{col}")].parse().unwrap();
        assert!((got_mean - mean).abs() <= 1e-12, "{col}");
        assert!((got_sd - sd).abs() <= 1e-12, "{col}");
    }
    let cell = &s["D_R"];
    let mean: f64 = s["mean_D_R"].parse().unwrap();
    let sd: f64 = s["sd_D_R"].parse().unwrap();
    assert_eq!(cell, &format!("{mean:.4}({sd:.4})"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "T = 12\np1 = 10\np2 = 10\nreps = 2\nmethods = [\"apca\"]\nseed = 9\n").unwrap();
    let out = dir.path().join("o");
    let o = mkfactor(&["simulate", "--config", cfg.to_str().unwrap(), "--reps", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reps = read_csv(&out.join("simulate_reps.csv"));
    assert_eq!(reps.len(), 3);
    assert!(reps.iter().all(|r| r["method"] == "apca" && r["T"] == "12"));
    let text = std::fs::read_to_string(out.join("simulate_reps.csv")).unwrap();
    assert!(text.contains("# seed = 9\n"));
}

#[test]
fn bad_settings_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(code(&mkfactor(&["simulate", "--scenario", "C", "--out", o])), 2);
    assert_eq!(code(&mkfactor(&["simulate", "--dist", "t0", "--out", o])), 2);
    assert_eq!(code(&mkfactor(&["simulate", "--reps", "0", "--out", o])), 2);
    assert_eq!(code(&mkfactor(&["simulate", "--bogus-flag"])), 2);
    assert_eq!(code(&mkfactor(&["simulate", "--config", "/nonexistent/run.toml", "--out", o])), 2);
    assert!(!out.exists());
}

#[test]
fn missing_input_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est");
    let o = mkfactor(&[
        "estimate", "--input", dir.path().join("absent.csv").to_str().unwrap(), "--k1", "1", "--k2", "1",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(!out.exists());
}

#[test]
fn malformed_input_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,row,col,value\n0,0,0,1.0\n0,0,0,2.0\n").unwrap();
    let out = dir.path().join("o");
    let o = mkfactor(&["rank", "--input", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate cell"));
    assert!(!out.exists());
}

#[test]
fn auto_rank_recovers_three_factors_under_t2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_scenario(dir.path(), "x.mkt", Dist::T(2), 50, 50);
    let out = dir.path().join("est");
    let o = mkfactor(&["estimate", "--input", &input, "--auto-rank", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["k1"], 3);
    assert_eq!(meta["k2"], 3);
    assert_eq!(meta["auto_rank"], true);
    for f in ["R_hat.csv", "C_hat.csv", "factors.csv", "common.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let r_hat = mkfactor::io::load_series(&out.join("R_hat.csv"), SeriesFormat::LongCsv).unwrap();
    assert_eq!(r_hat.dims(), (1, 50, 3));
}

#[test]
fn rank_report_selects_the_largest_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_scenario(dir.path(), "x.csv", Dist::T(3), 40, 20);
    let out = dir.path().join("rank");
    let o = mkfactor(&["rank", "--input", &input, "--kmax", "6", "--ridge-c", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("rank.csv"));
    assert_eq!(rows.len(), 2 * 2 * 6);
    for chunk in rows.chunks(6) {
        let ratios: Vec<f64> = chunk.iter().map(|r| r["ratio"].parse().unwrap()).collect();
        let best = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let argmax = ratios.iter().position(|&r| r == best).unwrap() + 1;
        let khat: usize = chunk[0]["khat"].parse().unwrap();
        assert_eq!(khat, argmax);
        let selected: Vec<&str> = chunk.iter().map(|r| r["selected"].as_str()).collect();
        assert_eq!(selected.iter().filter(|s| **s == "1").count(), 1);
        assert_eq!(selected[khat - 1], "1");
    }
}

#[test]
fn noiseless_single_factor_is_found_by_both_selectors() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = common::rng(3);
    let r = common::gaussian(12, 1, &mut g);
    let c = common::gaussian(10, 1, &mut g);
    let x = MatrixSeries::new(
        (0..30)
            .map(|_| &r * common::gaussian(1, 1, &mut g) * c.transpose())
            .collect::<Vec<DMatrix<f64>>>(),
    )
    .unwrap();
    let path = dir.path().join("x.csv");
    save_series(&x, &path, SeriesFormat::LongCsv).unwrap();
    let out = dir.path().join("rank");
    let o = mkfactor(&["rank", "--input", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("rank.csv"));
    for method in ["mrts", "apca"] {
        for side in ["row", "column"] {
            let row = rows.iter().find(|r| r["method"] == method && r["side"] == side).unwrap();
            assert_eq!(row["khat"], "1", "{method} {side}");
        }
    }
}

#[test]
fn rolling_writes_window_rows_and_a_mean_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_scenario(dir.path(), "x.csv", Dist::Normal, 60, 10);
    let out = dir.path().join("roll");
    let o = mkfactor(&[
        "rolling", "--input", &input, "--window", "30", "--block", "10", "--k1", "3", "--k2", "3",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("rolling.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["window"], "mean");
    let mses: Vec<f64> = rows[..3].iter().map(|r| r["MSE"].parse().unwrap()).collect();
    let mean: f64 = rows[3]["MSE"].parse().unwrap();
    assert!((mean - mses.iter().sum::<f64>() / 3.0).abs() <= 1e-12);
    assert_eq!(rows[0]["v"], "");

    let o = mkfactor(&[
        "rolling", "--input", &input, "--window", "55", "--block", "10", "--k1", "3", "--k2", "3",
        "--out", dir.path().join("too_long").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bench_reports_every_grid_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let o = mkfactor(&["bench", "--bench-T", "8,16", "--bench-p", "5", "--repeats", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("bench.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["kendall_secs"].parse::<f64>().unwrap() > 0.0));
}
