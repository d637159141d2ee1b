//! Experiment commands. Each builds its tables, writes them through a
//! [`Writer`] and returns a short console summary.

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Chart, Table, Writer};
use grushin_core::carleman::{
    admissibility_constants, carleman_diagnostic, kernel_bounds_check, search_constants, theta_grid,
    theta_inequalities_check, Admissibility, CarlemanParams, CarlemanWeight, SearchBox, SpectralSolution,
    Zone,
};
use grushin_core::hum::solve_field_control;
use grushin_core::legendre::ModeBasis;
use grushin_core::numerics::{make_latitude_rule, TimeGrid};
use grushin_core::observability::{
    dissipation_window_bound, mintime_lower_bound, uniform_scan, wallis_row, Trend, WindowCase,
};
use grushin_core::spectral::{duhamel_evolve_mode, ControlTrajectory, Field2D, Part};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::sync::Arc;

fn stamp(t: &mut Table, cfg: &Config) {
    t.meta("config_hash", cfg.hash());
    t.meta("truncation.L", cfg.l_max);
    t.meta("modes.nMax", cfg.n_max);
    t.meta("quadrature.order", cfg.order());
}

pub fn bases(cfg: &Config) -> CliResult<Vec<Arc<ModeBasis>>> {
    let rule = make_latitude_rule(cfg.order())?;
    (0..=cfg.n_max)
        .map(|n| Ok(Arc::new(ModeBasis::new(n, cfg.l_max, rule.clone())?)))
        .collect()
}

pub fn initial_field(cfg: &Config, bases: &[Arc<ModeBasis>]) -> CliResult<Field2D> {
    let mut f = Field2D::zeros(bases)?;
    for t in &cfg.initial {
        f.set(t.n, t.part, t.l, t.coeff)?;
    }
    Ok(f)
}

fn part_name(p: Part) -> &'static str {
    match p {
        Part::Cos => "cos",
        Part::Sin => "sin",
    }
}

pub fn spectrum(cfg: &Config, out: &mut Writer) -> CliResult<String> {
    let mut t = Table::new("spectrum", &["n", "l", "lambda", "gramDeviation"]);
    let mut worst: f64 = 0.0;
    for b in bases(cfg)? {
        let dev = b.gram_row_deviation();
        for ((l, lam), d) in b.degrees().zip(b.eigenvalues()).zip(dev) {
            worst = worst.max(d);
            t.push(vec![b.n().into(), l.into(), (*lam).into(), d.into()]);
        }
    }
    stamp(&mut t, cfg);
    t.meta("max_gram_deviation", crate::report::fmt_real(worst));
    out.table(&t)?;
    Ok(format!(
        "spectrum: {} rows, max Gram deviation {worst:.6e} ({})\n",
        t.rows.len(),
        if worst < 1e-8 { "pass" } else { "fail" }
    ))
}

/// Reads a control written by [`control`].
pub fn read_control(path: &Path, template: &Field2D) -> CliResult<ControlTrajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |line: usize, what: &str| CliError::Config(format!("{}:{line}: {what}", path.display()));
    let mut panels: Vec<(f64, f64)> = Vec::new();
    let mut values: Vec<Field2D> = Vec::new();
    let mut zero = template.clone();
    for n in 0..=zero.n_max() {
        for part in [Part::Cos, Part::Sin] {
            zero.mode_mut(n, part).coeffs_mut().fill(0.0);
        }
    }
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(i + 1, "expected 7 fields"));
        }
        let k: usize = f[0].parse().map_err(|_| bad(i + 1, "panel"))?;
        let a: f64 = f[1].parse().map_err(|_| bad(i + 1, "t0"))?;
        let b: f64 = f[2].parse().map_err(|_| bad(i + 1, "t1"))?;
        let n: i64 = f[3].parse().map_err(|_| bad(i + 1, "n"))?;
        let part = match f[4] {
            "cos" => Part::Cos,
            "sin" => Part::Sin,
            _ => return Err(bad(i + 1, "part")),
        };
        let l: i64 = f[5].parse().map_err(|_| bad(i + 1, "l"))?;
        let u: f64 = f[6].parse().map_err(|_| bad(i + 1, "value"))?;
        while panels.len() <= k {
            panels.push((a, b));
            values.push(zero.clone());
        }
        if panels[k] != (a, b) {
            return Err(bad(i + 1, "panel bounds differ between rows"));
        }
        values[k].set(n, part, l, u).map_err(|e| bad(i + 1, &e.to_string()))?;
    }
    Ok(ControlTrajectory { panels, values })
}

fn evolve_with(f0: &Field2D, control: Option<&ControlTrajectory>, t: f64) -> CliResult<Field2D> {
    let Some(c) = control else {
        return Ok(f0.evolve(t)?);
    };
    let mut panels = Vec::new();
    let mut idx = Vec::new();
    for (k, &(a, b)) in c.panels.iter().enumerate() {
        if a < t {
            panels.push((a, b.min(t)));
            idx.push(k);
        }
    }
    let mut out = f0.clone();
    for (n, part, state) in f0.modes() {
        let sources: Vec<Vec<f64>> = idx.iter().map(|&k| c.values[k].mode(n, part).coeffs().to_vec()).collect();
        *out.mode_mut(n, part) = duhamel_evolve_mode(state, &panels, &sources, t)?;
    }
    Ok(out)
}

pub fn simulate(cfg: &Config, out: &mut Writer) -> CliResult<String> {
    let b = bases(cfg)?;
    let f0 = initial_field(cfg, &b)?;
    let control = match &cfg.control_file {
        Some(p) => {
            let c = read_control(p, &f0)?;
            if c.panels.last().is_some_and(|p| p.1 > cfg.horizon * (1.0 + 1e-12)) {
                return Err(CliError::Config(format!(
                    "control extends beyond time.T = {}",
                    cfg.horizon
                )));
            }
            Some(c)
        }
        None => None,
    };
    let mut cols = vec!["t".to_string(), "norm".to_string()];
    cols.extend((0..=cfg.n_max).map(|n| format!("norm_n{n}")));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("simulate_norms", &col_refs);
    let mut per_n: Vec<Vec<(f64, f64)>> = vec![Vec::new(); cfg.n_max as usize + 1];
    let mut last = f0.clone();
    let mut increases = 0usize;
    let mut prev = f64::INFINITY;
    for k in 0..=cfg.steps {
        let time = cfg.horizon * k as f64 / cfg.steps as f64;
        let f = evolve_with(&f0, control.as_ref(), time)?;
        let norm = f.norm();
        if norm > prev {
            increases += 1;
        }
        prev = norm;
        let mut row: Vec<Cell> = vec![time.into(), norm.into()];
        for n in 0..=cfg.n_max {
            let mut sq = f.mode(n, Part::Cos).norm_sq();
            if n > 0 {
                sq += f.mode(n, Part::Sin).norm_sq();
            }
            row.push(sq.sqrt().into());
            per_n[n as usize].push((time, sq.sqrt()));
        }
        t.push(row);
        last = f;
    }
    stamp(&mut t, cfg);
    t.meta("time.T", format!("{:?}", cfg.horizon));
    t.meta("time.steps", cfg.steps);
    t.meta("controlled", control.is_some());
    t.meta("norm_increases", increases);
    out.table(&t)?;

    let mut snap = Table::new("simulate_final", &["n", "part", "l", "coeff"]);
    for (n, part, m) in last.modes() {
        for (l, c) in m.basis().degrees().zip(m.coeffs()) {
            snap.push(vec![n.into(), part_name(part).into(), l.into(), (*c).into()]);
        }
    }
    stamp(&mut snap, cfg);
    snap.meta("t", format!("{:?}", cfg.horizon));
    out.table(&snap)?;

    let mut chart = Chart::new("mode norm decay", "t", "norm of mode n").log_y();
    for (n, pts) in per_n.into_iter().enumerate() {
        if pts.iter().any(|p| p.1 > 0.0) {
            chart.add(&format!("n = {n}"), pts);
        }
    }
    out.svg("simulate_norms", &chart)?;
    Ok(format!(
        "simulate: final norm {:.6e} at T = {}, {} norm increases{}\n",
        last.norm(),
        cfg.horizon,
        increases,
        if control.is_some() { " (controlled)" } else { "" }
    ))
}

/// Whether the ratios beyond `n = 20` strictly decrease.
fn decreasing_beyond_20(rows: &[(i64, f64)]) -> bool {
    let tail: Vec<f64> = rows.iter().filter(|r| r.0 >= 20).map(|r| r.1).collect();
    tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0])
}

pub fn mintime(cfg: &Config, out: &mut Writer) -> CliResult<String> {
    let region = cfg.region()?;
    if cfg.mintime_n.iter().any(|&n| n < 1) {
        return Err(CliError::Config("mintime.nList entries must be at least 1".into()));
    }
    if cfg.mintime_t.iter().any(|&t| !(t > 0.0)) {
        return Err(CliError::Config("mintime.TList entries must be positive".into()));
    }
    let (threshold, _) = mintime_lower_bound(&region);
    let mut t = Table::new(
        "mintime",
        &["T", "n", "ratio", "logRatio", "logLhs", "logBound", "boundHolds", "envelopeRatio"],
    );
    let mut summary = Table::new("mintime_summary", &["T", "threshold", "belowThreshold", "verdict"]);
    let mut chart = Chart::new("highest-weight observability ratio", "n", "ln ratio_n");
    let mut text = format!("mintime: threshold ln(1/cos a) = {threshold:.6}\n");
    let mut ns = cfg.mintime_n.clone();
    ns.sort_unstable();
    ns.dedup();
    for &horizon in &cfg.mintime_t {
        let mut rows = Vec::new();
        let mut pts = Vec::new();
        for &n in &ns {
            let w = wallis_row(n, horizon, &region)?;
            rows.push((n, w.log_ratio));
            pts.push((n as f64, w.log_ratio));
            t.push(vec![
                horizon.into(),
                n.into(),
                w.log_ratio.exp().into(),
                w.log_ratio.into(),
                w.log_lhs.into(),
                w.log_bound.into(),
                w.holds().into(),
                w.envelope_ratio().into(),
            ]);
        }
        let below = horizon < threshold;
        let verdict = match (below, decreasing_beyond_20(&rows)) {
            (true, true) => "consistent-with-non-observability",
            (true, false) => "inconclusive",
            (false, _) => "above-threshold",
        };
        summary.push(vec![horizon.into(), threshold.into(), below.into(), verdict.into()]);
        chart.add(&format!("T = {horizon}"), pts);
        text.push_str(&format!("  T = {horizon}: {verdict}\n"));
    }
    for tab in [&mut t, &mut summary] {
        stamp(tab, cfg);
        tab.meta("region.a", format!("{:?}", region.a()));
        tab.meta("region.b", format!("{:?}", region.b()));
        tab.meta("threshold", format!("{threshold:.6}"));
        tab.meta("threshold_full", crate::report::fmt_real(threshold));
    }
    out.table(&t)?;
    out.table(&summary)?;
    out.svg("mintime", &chart)?;
    Ok(text)
}

pub fn observability(cfg: &Config, out: &mut Writer) -> CliResult<String> {
    let region = cfg.region()?;
    let report = uniform_scan(&region, cfg.horizon, cfg.n_max, cfg.l_max)?;
    let mut t = Table::new(
        "observability",
        &["n", "C_n", "effectiveDim", "condition", "ratio", "inverseRatio"],
    );
    let mut pts = Vec::new();
    for r in &report.rows {
        let (ratio, inv) = match r.ratio {
            Some(q) => (Cell::Real(q), Cell::Real(1.0 / q)),
            None => (Cell::Text(String::new()), Cell::Text(String::new())),
        };
        t.push(vec![
            r.n.into(),
            r.constant.value.into(),
            r.constant.effective_dim.into(),
            r.constant.condition.into(),
            ratio,
            inv,
        ]);
        pts.push((r.n as f64, r.constant.value));
    }
    stamp(&mut t, cfg);
    let (threshold, _) = mintime_lower_bound(&region);
    t.meta("time.T", format!("{:?}", cfg.horizon));
    t.meta("region.a", format!("{:?}", region.a()));
    t.meta("region.b", format!("{:?}", region.b()));
    t.meta("threshold", format!("{threshold:.6}"));
    t.meta("below_threshold", report.below_threshold);
    t.meta("log_slope", crate::report::fmt_real(report.log_slope));
    let trend = match report.trend {
        Trend::Bounded => "bounded",
        Trend::Growing => "growing",
    };
    t.meta("trend", trend);
    t.meta("status", "diagnostic");
    out.table(&t)?;
    let mut chart = Chart::new("observability constant", "n", "C_n(T)").log_y();
    chart.add(&format!("T = {}", cfg.horizon), pts);
    out.svg("observability", &chart)?;
    Ok(format!(
        "observability: max C_n = {:.6e}, trend {trend} (slope {:.6}), T {} threshold {threshold:.6}\n",
        report.max_constant,
        report.log_slope,
        if report.below_threshold { "below" } else { "at or above" }
    ))
}

pub fn control(cfg: &Config, out: &mut Writer) -> CliResult<String> {
    let region = cfg.region()?;
    let b = bases(cfg)?;
    let f0 = initial_field(cfg, &b)?;
    let grid = TimeGrid::full(cfg.horizon, cfg.steps)?;
    let mut t = Table::new(
        "control_sweep",
        &["epsilon", "finalNorm", "simulatedNorm", "mismatch", "cost", "projectionLoss"],
    );
    let mut pts = Vec::new();
    let mut last = None;
    for &eps in &cfg.epsilons {
        let fc = solve_field_control(&f0, &region, cfg.horizon, eps, &grid)?;
        let sim = grushin_core::spectral::duhamel_evolve(&f0, &fc.trajectory, cfg.horizon, &grid)?;
        let mut diff = sim.clone();
        grushin_core::spectral::field_axpy(&mut diff, &fc.predicted_final, -1.0)?;
        let loss: f64 = fc.modes.iter().map(|m| m.2.projection_loss).sum();
        let fin = fc.predicted_final.norm();
        t.push(vec![
            eps.into(),
            fin.into(),
            sim.norm().into(),
            diff.norm().into(),
            fc.cost().into(),
            loss.into(),
        ]);
        pts.push((eps, fin));
        last = Some((eps, fc));
    }
    stamp(&mut t, cfg);
    t.meta("time.T", format!("{:?}", cfg.horizon));
    t.meta("time.steps", cfg.steps);
    t.meta("initial_norm", crate::report::fmt_real(f0.norm()));
    out.table(&t)?;
    let mut chart = Chart::new("controlled final norm", "epsilon", "norm of f(T)").log_x().log_y();
    chart.add("predicted", pts);
    out.svg("control_sweep", &chart)?;

    if let Some((eps, fc)) = last {
        let mut src = Table::new("control_sources", &["panel", "t0", "t1", "n", "part", "l", "u"]);
        for (k, (&(a, bb), field)) in fc.trajectory.panels.iter().zip(&fc.trajectory.values).enumerate() {
            for (n, part, m) in field.modes() {
                if m.coeffs().iter().all(|c| *c == 0.0) {
                    continue;
                }
                for (l, u) in m.basis().degrees().zip(m.coeffs()) {
                    src.push(vec![k.into(), a.into(), bb.into(), n.into(), part_name(part).into(), l.into(), (*u).into()]);
                }
            }
        }
        stamp(&mut src, cfg);
        src.meta("epsilon", crate::report::fmt_real(eps));
        out.table(&src)?;
    }
    let mut text = String::from("control:\n");
    text.push_str(&t.display());
    Ok(text)
}

/// Pure modes `v_{n,l}`, `n = 1..=6`, `l = n..=n+2`.
pub fn calibration_family() -> CliResult<Vec<SpectralSolution>> {
    let mut v = Vec::new();
    for n in 1..=6 {
        for l in n..=n + 2 {
            v.push(SpectralSolution::pure(n, l)?);
        }
    }
    Ok(v)
}

/// Ten random combinations of two or three modes of one frequency.
pub fn held_out_family(seed: u64) -> CliResult<Vec<SpectralSolution>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vec::new();
    for _ in 0..10 {
        let n: i64 = rng.gen_range(1..=6);
        let k = rng.gen_range(2..=3);
        let mut ls: Vec<i64> = Vec::new();
        while ls.len() < k {
            let l = rng.gen_range(n..=n + 4);
            if !ls.contains(&l) {
                ls.push(l);
            }
        }
        ls.sort_unstable();
        let terms: Vec<(i64, f64)> = ls.iter().map(|&l| (l, rng.gen_range(-1.0..1.0))).collect();
        v.push(SpectralSolution::new(n, &terms)?);
    }
    Ok(v)
}

pub const HELD_OUT_SEED: u64 = 20;

fn describe(sol: &SpectralSolution) -> String {
    sol.terms
        .iter()
        .map(|t| format!("{:+.3}*v({},{})", t.coeff, sol.n, t.l))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn weight(cfg: &Config) -> CliResult<(CarlemanWeight, Admissibility)> {
    let w = CarlemanWeight::build(
        cfg.region_a,
        cfg.region_b,
        cfg.a_prime,
        cfg.b_prime,
        cfg.weight_constants(),
    )
    .map_err(|e| CliError::Config(format!("carleman weight: {e}")))?;
    let adm = admissibility_constants(&w);
    Ok((w, adm))
}

pub fn carleman(cfg: &Config, search: bool, out: &mut Writer) -> CliResult<String> {
    cfg.region()?;
    let mut text = String::new();
    if search {
        let k = search_constants(cfg.region_a, cfg.region_b, cfg.a_prime, cfg.b_prime, &SearchBox::default())?;
        let mut t = Table::new("carleman_search", &["key", "value"]);
        t.push(vec!["carleman.A1".into(), k.a1.into()]);
        t.push(vec!["carleman.A2".into(), k.a2.into()]);
        t.push(vec!["carleman.A3".into(), k.a3.into()]);
        stamp(&mut t, cfg);
        out.table(&t)?;
        text.push_str(&format!(
            "search: carleman.A1 = {:?}\n        carleman.A2 = {:?}\n        carleman.A3 = {:?}\n",
            k.a1, k.a2, k.a3
        ));
    }
    let (w, adm) = weight(cfg)?;
    let inv = w.invariants(grushin_core::carleman::WEIGHT_GRID);
    let mut t = Table::new("carleman_weight", &["quantity", "value"]);
    let k = w.constants;
    for (name, v) in [
        ("A1", k.a1),
        ("A2", k.a2),
        ("A3", k.a3),
        ("eta1", w.eta1),
        ("eta2", w.eta2),
        ("betaMin", w.beta_min),
        ("betaMinAt", w.beta_min_at),
        ("betaMax", w.beta_max),
        ("C1", adm.c1),
        ("C2", adm.c2),
        ("C4", adm.c4),
        ("C5", adm.c5),
        ("C6", adm.c6),
        ("C7", adm.c7),
        ("s1", adm.s1),
        ("s2", adm.s2),
        ("R0", adm.r0),
        ("Tstar", adm.t_star),
        ("TstarWithBetaMin", adm.t_star_with_min),
        ("continuityMismatch", inv.continuity),
    ] {
        t.push(vec![name.into(), v.into()]);
    }
    t.push(vec!["invariantsHold".into(), inv.holds().into()]);
    stamp(&mut t, cfg);
    out.table(&t)?;
    text.push_str(&t.display());

    let mut beta = Table::new("carleman_beta", &["x", "beta", "dbeta", "d2beta", "zone"]);
    let count = 400;
    for i in 0..=count {
        let x = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / count as f64;
        let d = w.derivs(x);
        let zone = match w.zone(x) {
            Zone::Deg => "deg",
            Zone::Con => "con",
            Zone::Bdy => "bdy",
        };
        beta.push(vec![x.into(), d[0].into(), d[1].into(), d[2].into(), zone.into()]);
    }
    stamp(&mut beta, cfg);
    out.table(&beta)?;
    let mut chart = Chart::new("Carleman weight", "x", "beta(x)");
    chart.add(
        "beta",
        beta.rows
            .iter()
            .filter_map(|r| match (&r[0], &r[1]) {
                (Cell::Real(x), Cell::Real(y)) => Some((*x, *y)),
                _ => None,
            })
            .collect(),
    );
    out.svg("carleman_beta", &chart)?;

    let mut theta = Table::new("carleman_theta", &["T", "margin1", "margin2", "margin3", "margin4", "holds"]);
    for horizon in [0.1, 1.0, 10.0] {
        let r = theta_inequalities_check(horizon, &theta_grid(horizon, 1000))?;
        let mut row: Vec<Cell> = vec![horizon.into()];
        row.extend(r.margins.iter().map(|m| Cell::Real(*m)));
        row.push(r.holds().into());
        theta.push(row);
    }
    stamp(&mut theta, cfg);
    out.table(&theta)?;

    let mut kern = Table::new("carleman_kernels", &["n", "s", "degMargin", "bdyMargin", "conMargin", "holds"]);
    for n in [1, 3, 6] {
        let p = CarlemanParams::new(&adm, cfg.horizon, n, cfg.s_factor)?;
        for sol in [SpectralSolution::highest_weight(n)?, SpectralSolution::new(n, &[(n, 1.0), (n + 1, -0.5), (n + 3, 0.25)])?] {
            let r = kernel_bounds_check(&sol, &p, &w, &adm)?;
            kern.push(vec![
                n.into(),
                p.s.into(),
                r.deg.margin().into(),
                r.bdy.margin().into(),
                r.con.margin().into(),
                r.holds().into(),
            ]);
        }
    }
    stamp(&mut kern, cfg);
    kern.meta("time.T", format!("{:?}", cfg.horizon));
    kern.meta("carleman.sFactor", format!("{:?}", cfg.s_factor));
    out.table(&kern)?;

    let region = cfg.region()?;
    let cal = calibration_family()?;
    let held = held_out_family(HELD_OUT_SEED)?;
    let diag = carleman_diagnostic(&cal, &held, cfg.horizon, cfg.s_factor, &w, &adm, &region)?;
    let mut dt = Table::new("carleman_diagnostic", &["family", "n", "solution", "ratio", "relative"]);
    for (fam, sols, ratios) in [("calibration", &cal, &diag.calibration), ("held-out", &held, &diag.held_out)] {
        for (s, r) in sols.iter().zip(ratios) {
            dt.push(vec![fam.into(), s.n.into(), describe(s).into(), (*r).into(), (r / diag.r1_hat).into()]);
        }
    }
    stamp(&mut dt, cfg);
    dt.meta("R1_hat", crate::report::fmt_real(diag.r1_hat));
    dt.meta("worst_relative", crate::report::fmt_real(diag.worst_relative));
    dt.meta("status", "diagnostic");
    out.table(&dt)?;

    let mut win = Table::new("carleman_window", &["T", "n", "case", "s", "exponent"]);
    for horizon in [adm.t_star, 2.0 * adm.t_star] {
        for n in [1, 10, 100] {
            let b = dissipation_window_bound(n, horizon, adm.r0, w.beta_min, w.beta_max)?;
            let case = match b.case {
                WindowCase::LowFrequency => "low",
                WindowCase::HighFrequency => "high",
            };
            win.push(vec![horizon.into(), n.into(), case.into(), b.s.into(), b.exponent.into()]);
        }
    }
    stamp(&mut win, cfg);
    out.table(&win)?;

    text.push_str(&format!(
        "diagnostic: R1_hat = {:.6}, worst held-out / R1_hat = {:.6} ({})\n",
        diag.r1_hat,
        diag.worst_relative,
        if diag.holds() { "pass" } else { "fail" }
    ));
    Ok(text)
}
