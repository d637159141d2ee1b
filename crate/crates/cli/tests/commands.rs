use std::path::Path;
use std::process::{Command, Output};

fn grushin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("run grushin")
}

/// Header and data rows of a CSV written by the CLI, metadata stripped.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>, Vec<String>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for l in lines {
        if let Some(m) = l.strip_prefix("# ") {
            meta.push(m.to_string());
        } else {
            rows.push(l.split(',').map(String::from).collect());
        }
    }
    (header, rows, meta)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn spectrum_table() {
    let d = tempfile::tempdir().unwrap();
    let out = grushin(d.path(), &["spectrum", "--n-max", "8", "--l-max", "40"]);
    assert!(out.status.success());
    let (h, rows, meta) = read_csv(&d.path().join("spectrum.csv"));
    assert_eq!(h, ["n", "l", "lambda", "gramDeviation"]);
    assert_eq!(rows.len(), (0..=8).map(|n| 41 - n).sum::<usize>());
    let row = rows.iter().find(|r| r[0] == "0" && r[1] == "1").unwrap();
    assert_eq!(row[2], "2");
    assert!(rows.iter().all(|r| num(&r[3]) < 1e-8));
    assert!(meta.iter().any(|m| m.starts_with("config_hash=")));
    assert!(meta.iter().any(|m| m == "truncation.L=40"));
}

#[test]
fn free_simulation_decays_like_exp() {
    let d = tempfile::tempdir().unwrap();
    let out = grushin(d.path(), &["simulate", "--init", "1:1:cos:1", "--T", "2", "--steps", "40"]);
    assert!(out.status.success());
    let (h, rows, _) = read_csv(&d.path().join("simulate_norms.csv"));
    let (it, inorm) = (col(&h, "t"), col(&h, "norm"));
    let mut prev_t = -1.0;
    let mut prev_norm = f64::INFINITY;
    for r in &rows {
        let (t, norm) = (num(&r[it]), num(&r[inorm]));
        assert!(t > prev_t);
        assert!(norm <= prev_norm);
        assert!((norm - (-t).exp()).abs() < 1e-14);
        prev_t = t;
        prev_norm = norm;
    }
    assert!(d.path().join("simulate_norms.svg").exists());
}

#[test]
fn control_round_trip_through_simulate() {
    let d = tempfile::tempdir().unwrap();
    let common = ["--init", "0:0:cos:1,1:3:sin:0.5", "--l-max", "12", "--n-max", "2", "--steps", "50"];
    let mut args = vec!["control", "--eps", "1e-4"];
    args.extend(common);
    assert!(grushin(d.path(), &args).status.success());
    let (h, rows, _) = read_csv(&d.path().join("control_sweep.csv"));
    let predicted = num(&rows[0][col(&h, "finalNorm")]);
    assert!(num(&rows[0][col(&h, "mismatch")]) < 1e-12);

    let src = d.path().join("control_sources.csv");
    let src_arg = src.to_str().unwrap();
    let mut args = vec!["simulate", "--control-file", src_arg];
    args.extend(common);
    assert!(grushin(d.path(), &args).status.success());
    let (h, rows, _) = read_csv(&d.path().join("simulate_norms.csv"));
    let last = num(&rows.last().unwrap()[col(&h, "norm")]);
    assert!((last - predicted).abs() < 1e-12, "{last} vs {predicted}");
}

#[test]
fn epsilon_sweep_reduces_final_norm() {
    let d = tempfile::tempdir().unwrap();
    let out = grushin(
        d.path(),
        &["control", "--init", "0:0:cos:1", "--l-max", "16", "--n-max", "0", "--eps", "1e-2,1e-4,1e-6"],
    );
    assert!(out.status.success());
    let (h, rows, _) = read_csv(&d.path().join("control_sweep.csv"));
    let norms: Vec<f64> = rows.iter().map(|r| num(&r[col(&h, "finalNorm")])).collect();
    assert!(norms.windows(2).all(|w| w[0] >= 3.0 * w[1]), "{norms:?}");
}

#[test]
fn mintime_threshold_and_bound() {
    let d = tempfile::tempdir().unwrap();
    let out = grushin(
        d.path(),
        &["mintime", "--a", "1.0471975511965976", "--b", "1.2", "--set", "mintime.TList=0.6,1.0"],
    );
    assert!(out.status.success());
    let (h, rows, meta) = read_csv(&d.path().join("mintime.csv"));
    assert!(meta.iter().any(|m| m == "threshold=0.693147"));
    for r in &rows {
        assert!(num(&r[col(&h, "logRatio")]) <= num(&r[col(&h, "logBound")]));
        assert_eq!(r[col(&h, "boundHolds")], "true");
    }
    let (_, summary, _) = read_csv(&d.path().join("mintime_summary.csv"));
    assert_eq!(summary[0][3], "consistent-with-non-observability");
    assert_eq!(summary[1][3], "above-threshold");
}

#[test]
fn observability_scan_columns() {
    let d = tempfile::tempdir().unwrap();
    let out = grushin(
        d.path(),
        &["observability", "--T", "1.4", "--a", "1.0472", "--b", "1.2", "--n-max", "20"],
    );
    assert!(out.status.success());
    let (h, rows, meta) = read_csv(&d.path().join("observability.csv"));
    for c in ["n", "C_n", "effectiveDim"] {
        col(&h, c);
    }
    assert_eq!(rows.len(), 21);
    assert!(meta.iter().any(|m| m == "status=diagnostic"));
}

#[test]
fn carleman_report() {
    let d = tempfile::tempdir().unwrap();
    let out = grushin(d.path(), &["carleman", "--json"]);
    assert!(out.status.success());
    let (_, rows, _) = read_csv(&d.path().join("carleman_weight.csv"));
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    for q in ["betaMin", "betaMax", "eta1", "eta2", "s1", "s2", "R0", "Tstar"] {
        assert!(names.contains(&q), "{q}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("carleman_kernels.json")).unwrap()).unwrap();
    assert!(json["rows"].as_array().unwrap().iter().all(|r| r["holds"] == true));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(grushin(d.path(), &["mintime", "--a", "1.3", "--b", "1.2"]).status.code(), Some(2));
    assert_eq!(grushin(d.path(), &["spectrum", "--set", "bogus=1"]).status.code(), Some(2));
    assert_eq!(grushin(d.path(), &["spectrum", "--n-max", "9", "--l-max", "4"]).status.code(), Some(2));
    let missing = d.path().join("nope.csv");
    let out = grushin(d.path(), &["simulate", "--control-file", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let cfg = d.path().join("missing.cfg");
    let out = grushin(d.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "# experiment\nmodes.nMax = 1\ntruncation.L = 5\ntime.T = 3\n").unwrap();
    let out = grushin(d.path(), &["spectrum", "--config", cfg.to_str().unwrap(), "--l-max", "6"]);
    assert!(out.status.success());
    let (_, rows, meta) = read_csv(&d.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 7 + 6);
    assert!(meta.iter().any(|m| m == "truncation.L=6"));
}
