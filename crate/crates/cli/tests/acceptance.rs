//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1-8 reuse the checks of `grushin verify` with their pinned
//! limits and add a runtime budget. Criterion 9 runs the binary twice.

use grushin_cli::verify::{self, Criterion};
use grushin_cli::{CliResult, Config};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

struct Outcome {
    id: u8,
    title: String,
    passed: bool,
    detail: String,
}

fn timed(budget_s: f64, run: impl FnOnce() -> CliResult<Criterion>) -> Outcome {
    let start = Instant::now();
    let result = run();
    let elapsed = start.elapsed().as_secs_f64();
    match result {
        Ok(c) => {
            let in_budget = elapsed < budget_s;
            let mut detail = c.summary().lines().skip(1).map(|l| format!("{l}\n")).collect::<String>();
            detail.push_str(&format!(
                "    {} runtime {elapsed:.2} s < {budget_s} s\n",
                if in_budget { "ok  " } else { "FAIL" }
            ));
            Outcome {
                id: c.id,
                title: c.title.to_string(),
                passed: c.passed() && in_budget,
                detail,
            }
        }
        Err(e) => Outcome {
            id: 0,
            title: "error".into(),
            passed: false,
            detail: format!("    error: {e}\n"),
        },
    }
}

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_grushin");
    let start = Instant::now();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut detail = String::new();
    let mut ok = true;
    for d in &dirs {
        let status = Command::new(exe)
            .args(["verify", "--json", "--out"])
            .arg(d.path())
            .output()
            .expect("run grushin verify");
        if !status.status.success() {
            ok = false;
            detail.push_str(&format!("    FAIL verify exited with {:?}\n", status.status.code()));
        }
    }
    for file in ["verify.csv", "verify.json", "verify.txt"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap_or_default();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap_or_default();
        let same = !a.is_empty() && a == b;
        ok &= same;
        detail.push_str(&format!(
            "    {} {file}: {} bytes, identical = {same}\n",
            if same { "ok  " } else { "FAIL" },
            a.len()
        ));
    }
    let elapsed = start.elapsed();
    let in_budget = elapsed < Duration::from_secs(60);
    ok &= in_budget;
    detail.push_str(&format!(
        "    {} runtime {:.2} s < 60 s\n",
        if in_budget { "ok  " } else { "FAIL" },
        elapsed.as_secs_f64()
    ));
    Outcome {
        id: 9,
        title: "determinism of two verify runs".into(),
        passed: ok,
        detail,
    }
}

fn main() -> ExitCode {
    let cfg = Config::default();
    let outcomes = vec![
        timed(10.0, verify::eigen_structure),
        timed(5.0, verify::dissipation),
        timed(5.0, verify::hardy),
        timed(10.0, verify::minimal_time),
        timed(1.0, verify::threshold_formula),
        timed(30.0, verify::observability_duality),
        timed(30.0, verify::hum_convergence),
        timed(60.0, || verify::carleman_machinery(&cfg)),
        determinism(),
    ];
    let mut all = true;
    for o in &outcomes {
        println!(
            "acceptance criterion {}: {} - {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.title
        );
        print!("{}", o.detail);
        all &= o.passed;
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
