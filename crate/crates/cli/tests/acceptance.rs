//! Acceptance suite: one pass/fail line per criterion.

use std::path::Path as FsPath;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

use allen_cahn::connections::{
    eps1_star, find_crossing, geometric_action, quadrature_actions, shoot_connections,
    ActionSource, ConnectionResult, CrossingMode, CrossingResult, ShootOptions, ShootReport,
    StringOptions,
};
use allen_cahn::flow::{
    evolve, flow_domain, init_two_phase, measure_speed, tilt_junction, FlowOptions,
};
use allen_cahn::minimizer2d::{self, bound_constants, MinimizeOptions, StripDomain};
use allen_cahn::path::distance_to_polyline;
use allen_cahn::potential::{build_c0, minima_and_convexity, ConvexSetC0};
use allen_cahn::{Classification, Path, PlanePoint, PotentialSpec};
use allen_cahn_cli::commands::minimizer_checks;
use allen_cahn_cli::report::Status;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(n: usize, budget: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "criterion {n:2}: {} ({:.1} s of {} s) {}{}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs(),
        out.detail,
        if in_time { "" } else { " [over time budget]" }
    );
    pass
}

fn shoot(spec: &PotentialSpec, n_scan: usize) -> ShootReport {
    shoot_connections(spec, (0.0, 3.0), n_scan, &ShootOptions::default()).expect("shooting runs")
}

fn uppers(report: &ShootReport) -> Vec<&ConnectionResult> {
    let mut u: Vec<&ConnectionResult> = report
        .connections
        .iter()
        .filter(|c| c.classification() == Classification::Upper)
        .collect();
    u.sort_by(|a, b| {
        a.shooting_height
            .unwrap()
            .total_cmp(&b.shooting_height.unwrap())
    });
    u
}

fn find(report: &ShootReport, class: Classification) -> Option<&ConnectionResult> {
    report
        .connections
        .iter()
        .find(|c| c.classification() == class)
}

fn w1_reference() -> PotentialSpec {
    PotentialSpec::w1(3f64.sqrt() / 6.0).unwrap()
}

fn criterion_1(base: &ShootReport, fine: &ShootReport) -> Outcome {
    let count = |r: &ShootReport| {
        let s = r
            .connections
            .iter()
            .filter(|c| c.classification() == Classification::Scalar)
            .count();
        let u = r
            .connections
            .iter()
            .filter(|c| c.classification() == Classification::Upper)
            .count();
        let l = r
            .connections
            .iter()
            .filter(|c| c.classification() == Classification::Lower)
            .count();
        (r.count(), s, u, l)
    };
    let (a, b) = (count(base), count(fine));
    outcome(
        a == (3, 1, 1, 1) && b == a,
        format!("W1 eps=sqrt3/6: {} connections ({} axis, {} upper, {} lower) at 301 scan points, {} at 602", a.0, a.1, a.2, a.3, b.0),
    )
}

fn criterion_2() -> Outcome {
    let a = quadrature_actions(&w1_reference(), &StringOptions::default()).expect("actions");
    let e_pm = a.e_pm.unwrap();
    let gap = (a.e0 - e_pm) / a.e0;
    outcome(
        e_pm < a.e0 && gap > 0.05,
        format!(
            "E(e±) = {e_pm:.6} < E(e0) = {:.6}, relative gap {:.4} > 0.05",
            a.e0, gap
        ),
    )
}

fn criterion_3() -> Outcome {
    let base = PotentialSpec::w1(0.5).unwrap();
    let opts = StringOptions::default();
    let q = find_crossing(
        &base,
        (0.1, 2.0),
        CrossingMode::EpsStar,
        ActionSource::Quadrature,
        &opts,
    );
    let c = find_crossing(
        &base,
        (0.1, 2.0),
        CrossingMode::EpsStar,
        ActionSource::ClosedForm,
        &opts,
    );
    let closed = match &c {
        Ok(r) => format!("{:.6}", r.parameter),
        Err(e) => format!("none ({e})"),
    };
    match q {
        Ok(r) => {
            let width = r.bracket.1 - r.bracket.0;
            outcome(
                width <= 1e-4,
                format!(
                    "eps*_num = {:.6} in [{:.6}, {:.6}] (width {width:.1e} <= 1e-4); reference 0.4416 (diff {:.1e}); closed-form root {closed}",
                    r.parameter,
                    r.bracket.0,
                    r.bracket.1,
                    r.parameter - 0.4416
                ),
            )
        }
        Err(e) => outcome(false, format!("no quadrature crossing: {e}")),
    }
}

fn sigma_star() -> Result<CrossingResult, String> {
    let eps1 = eps1_star();
    let base = PotentialSpec::w2(eps1, 1.0).unwrap();
    find_crossing(
        &base,
        (0.5, 1.5),
        CrossingMode::SigmaStar { eps1 },
        ActionSource::Quadrature,
        &StringOptions::default(),
    )
    .map_err(|e| e.to_string())
}

fn criterion_4(sigma: &Result<CrossingResult, String>, report: &Option<ShootReport>) -> Outcome {
    let (Ok(s), Some(r)) = (sigma, report) else {
        return outcome(
            false,
            format!("sigma* not found: {:?}", sigma.as_ref().err()),
        );
    };
    let up = uppers(r);
    let e0 = find(r, Classification::Scalar)
        .map(|c| c.action)
        .unwrap_or(f64::NAN);
    if up.len() != 2 {
        return outcome(
            false,
            format!("{} connections, {} upper", r.count(), up.len()),
        );
    }
    let (ei, eii) = (up[0].action, up[1].action);
    let ok = r.count() == 5 && (ei - eii).abs() <= 1e-3 * ei && ei < e0 && eii < e0;
    outcome(
        ok,
        format!(
            "eps1* = {:.7}, sigma* = {:.6}: {} connections; E_I = {ei:.5}, E_II = {eii:.5} (|diff| {:.1e} vs {:.1e}), E0 = {e0:.5}",
            eps1_star(),
            s.parameter,
            r.count(),
            (ei - eii).abs(),
            1e-3 * ei
        ),
    )
}

fn consistency_failures(spec: &PotentialSpec, cs: &[ConnectionResult]) -> Vec<String> {
    let mut bad = Vec::new();
    for c in cs {
        let k = c.consistency(spec);
        if !(k.equipartition_ok && k.ode_ok && k.mirror_ok && k.action_ok) {
            bad.push(format!(
                "{:?} E = {:.5}: {k:?}",
                c.classification(),
                c.action
            ));
        }
    }
    bad
}

fn criterion_5(sets: &[(PotentialSpec, &ShootReport)]) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (spec, r) in sets {
        checked += r.connections.len();
        bad.extend(consistency_failures(spec, &r.connections));
    }
    // Random W1 parameters on top of the fixed configurations.
    let mut runner = TestRunner::new(PropConfig {
        cases: 6,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let random = std::cell::RefCell::new(0usize);
    let prop = runner.run(&(0.15f64..0.9), |eps| {
        let spec = PotentialSpec::w1(eps).unwrap();
        let r = shoot_connections(&spec, (0.0, 3.0), 151, &ShootOptions::default()).unwrap();
        prop_assert!(r.count() >= 1);
        *random.borrow_mut() += r.count();
        let f = consistency_failures(&spec, &r.connections);
        prop_assert!(f.is_empty(), "eps = {eps}: {f:?}");
        Ok(())
    });
    if let Err(e) = prop {
        bad.push(e.to_string());
    }
    outcome(
        bad.is_empty() && checked > 0,
        format!(
            "{} connections checked ({} from random W1 parameters); equipartition <= 1e-3 max W, ODE <= 1e-2 max|W_u|, mirror <= 1e-8, actions <= 1e-3 rel{}",
            checked + *random.borrow(),
            random.borrow(),
            if bad.is_empty() { String::new() } else { format!("; failures: {bad:?}") }
        ),
    )
}

/// Simpson quadrature of the speed on the unit circle for the limit
/// potential `|z^2 - 1|^2 / |z|^4`.
fn circle_limit_action() -> f64 {
    let n = 20_000;
    let f = |t: f64| {
        let z = PlanePoint::from_polar(1.0, t);
        let (x, y) = (z.u1, z.u2);
        let (re, im) = (x * x - y * y - 1.0, 2.0 * x * y);
        (2.0 * (re * re + im * im)).sqrt()
    };
    let h = std::f64::consts::PI / n as f64;
    let mut s = f(0.0) + f(std::f64::consts::PI);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    s * h / 3.0
}

fn criterion_6() -> Outcome {
    let spec = PotentialSpec::w1(1e-3).unwrap();
    let r = shoot(&spec, 301);
    let Some(up) = find(&r, Classification::Upper) else {
        return outcome(false, "no upper connection at eps = 1e-3");
    };
    let circle = Path::semicircle(1.0, 20_001, true).unwrap();
    let dev = up
        .path
        .nodes
        .iter()
        .map(|u| distance_to_polyline(*u, &circle.nodes))
        .fold(0.0, f64::max);
    let radial = up
        .path
        .nodes
        .iter()
        .map(|u| (u.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let oracle = circle_limit_action();
    let action = geometric_action(&spec, &up.path);
    let rel = (action - oracle).abs() / oracle;
    outcome(
        dev <= 0.05 && rel <= 0.02,
        format!(
            "sup distance to unit semicircle {dev:.2e} (radial {radial:.2e}) <= 0.05; action {action:.5} vs limit {oracle:.5} (4 sqrt2 = {:.5}), rel {rel:.2e} <= 0.02",
            4.0 * 2f64.sqrt()
        ),
    )
}

fn criterion_7(w1: &ShootReport) -> Outcome {
    let spec = w1_reference();
    let minima = minima_and_convexity(&spec).unwrap();
    let (Some(plus), Some(minus)) = (
        find(w1, Classification::Upper),
        find(w1, Classification::Lower),
    ) else {
        return outcome(false, "missing e±");
    };
    let paths: Vec<Path> = w1.connections.iter().map(|c| c.path.clone()).collect();
    let c0 = build_c0(&spec, &paths).unwrap_or_else(|_| ConvexSetC0::containing(&paths));
    let domain = StripDomain::new(6.0, 3.0, 0.75, 0.1).unwrap();
    let run = minimizer2d::run(
        &spec,
        &minima,
        domain,
        0.2,
        &plus.path,
        &minus.path,
        plus.action,
        &c0,
        &MinimizeOptions::default(),
    );
    let (_, rep) = match run {
        Ok(x) => x,
        Err(e) => return outcome(false, format!("minimizer failed: {e}")),
    };
    let checks = minimizer_checks(&rep, &minima);
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c.status != Status::Pass)
        .map(|c| c.name.as_str())
        .collect();
    let s = &rep.slices;
    let fit = rep.bounds.decay_fit.as_ref();
    outcome(
        failed.is_empty(),
        format!(
            "(a) trace/fold violations {}/{} (b) max|u| {:.3}, equivariance {:.1e} (c) cosh violations {} of {} at 10h^2 (d) rate {:.3} >= c/2 = {:.3} (e) {:.3} <= J = {:.3} <= {:.3} (f) boundary rows {:.3} <= 0.1 (g) residual {:.1e} <= 0.05; {} iterations{}",
            rep.stats.trace_violations,
            rep.stats.fold_violations,
            rep.max_norm,
            rep.equivariance_error,
            rep.bounds.cosh_violations,
            rep.bounds.cosh_checked,
            fit.map_or(f64::NAN, |f| f.rate),
            0.5 * minima.c,
            2.0 * domain.r_half * (s.e_min - 5.0 * domain.h),
            s.energy,
            s.comparison_energy,
            s.top_distance.max(s.bottom_distance),
            rep.interior_residual,
            rep.stats.iterations,
            if failed.is_empty() { String::new() } else { format!("; failed {failed:?}") }
        ),
    )
}

fn criterion_8() -> Outcome {
    let k = bound_constants(3.0, 0.25, 0.5, 2f64.sqrt()).unwrap();
    let want = (0.90909, 3.8891, 1.0783);
    let ok = (k.delta - want.0).abs() <= 1e-4
        && (k.delta_star - want.1).abs() <= 1e-4
        && (k.r_zero - want.2).abs() <= 1e-4;
    outcome(
        ok,
        format!(
            "(delta, delta*, R0) = ({:.5}, {:.4}, {:.4}) vs {want:?} within 1e-4",
            k.delta, k.delta_star, k.r_zero
        ),
    )
}

/// Junction speed of a two-phase flow on the W2 strip.
fn flow_speed(
    spec: &PotentialSpec,
    top: &Path,
    bottom: &Path,
    split: f64,
) -> Result<(f64, f64, f64), String> {
    let domain = flow_domain(10.0, 3.0, 0.04).map_err(|e| e.to_string())?;
    // Both phases cross the u2 axis with a pole in between, so an exactly
    // symmetric junction is pinned; a small tilt lets it move.
    let mut state = init_two_phase(domain, top, bottom, split, FlowOptions::default())
        .map_err(|e| e.to_string())?;
    tilt_junction(&mut state, 1e-6);
    let state = evolve(state, spec, 1.0).map_err(|e| e.to_string())?;
    let fit = measure_speed(&state).map_err(|e| e.to_string())?;
    Ok((fit.speed, fit.r2, state.max_energy_increase))
}

fn criterion_9(sigma: &Result<CrossingResult, String>, at_sigma: &Option<ShootReport>) -> Outcome {
    let (Ok(s), Some(r_star)) = (sigma, at_sigma) else {
        return outcome(false, "sigma* unavailable");
    };
    let eps1 = eps1_star();
    let spec_ref = PotentialSpec::w2(eps1, 1.5 * s.parameter).unwrap();
    let r_ref = shoot(&spec_ref, 301);
    let (u_ref, u_star) = (uppers(&r_ref), uppers(r_star));
    if u_ref.len() != 2 || u_star.len() != 2 {
        return outcome(
            false,
            "expected two upper families at sigma* and 1.5 sigma*",
        );
    }
    let spec_star = PotentialSpec::w2(eps1, s.parameter).unwrap();
    // Upper phase e2 (crossing the axis higher), lower phase e1.
    let (e1, e2) = (u_ref[0], u_ref[1]);
    let run = || -> Result<Outcome, String> {
        let (c_ref, r2_ref, inc_ref) = flow_speed(&spec_ref, &e2.path, &e1.path, -1.5)?;
        let (c_swap, _, inc_swap) = flow_speed(&spec_ref, &e1.path, &e2.path, 1.5)?;
        let (c_star, _, inc_star) = flow_speed(&spec_star, &u_star[1].path, &u_star[0].path, -1.5)?;
        let expected = (e2.action - e1.action).signum();
        let sign_ok = c_ref.signum() == expected && c_swap.signum() == -expected;
        let ratio = c_star.abs() / c_ref.abs();
        Ok(outcome(
            sign_ok && ratio <= 0.2,
            format!(
                "1.5 sigma*: E_upper = {:.4}, E_lower = {:.4}, c = {c_ref:+.4} (r2 {r2_ref:.3}), sign(E_upper - E_lower) = {expected:+}; swapped c = {c_swap:+.4}; sigma*: c = {c_star:+.4}, |c|/|c_ref| = {ratio:.3} <= 0.2; max energy increase {:.1e}",
                e2.action,
                e1.action,
                inc_ref.max(inc_swap).max(inc_star)
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}

fn snapshot(dir: &FsPath, names: &[&str]) -> Vec<Vec<u8>> {
    names
        .iter()
        .map(|n| std::fs::read(dir.join(n)).unwrap_or_default())
        .collect()
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("w1.json");
    std::fs::write(
        &cfg,
        r#"{"potential": {"family": "W1", "eps": "sqrt3/6"},
            "grid": {"R": 6.0, "mu": 3.0, "eta": 0.75, "h": 0.1, "r": 0.2},
            "outputs": {"dir": "out", "emit_svg": false}, "seed": 7}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let bin = env!("CARGO_BIN_EXE_allen-cahn");
    let names = [
        "connections.json",
        "e0.csv",
        "e_plus.csv",
        "e_minus.csv",
        "scan.csv",
        "field.csv",
        "field.json",
        "minimize_report.json",
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        for cmd in ["connections", "minimize2d"] {
            let status = Process::new(bin)
                .args([
                    cmd,
                    "--config",
                    cfg.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                ])
                .status()
                .expect("binary runs");
            if status.code() != Some(0) {
                return outcome(false, format!("`{cmd}` exited with {status}"));
            }
        }
        runs.push(snapshot(&out, &names));
    }
    let differing: Vec<&str> = names
        .iter()
        .zip(runs[0].iter().zip(&runs[1]))
        .filter(|(_, (a, b))| a != b)
        .map(|(n, _)| *n)
        .collect();
    let empty = runs[0].iter().any(|b| b.is_empty());
    outcome(
        differing.is_empty() && !empty,
        format!(
            "{} artifacts byte-identical across two runs{}",
            names.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!("; differ: {differing:?}")
            }
        ),
    )
}

fn main() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let secs = Duration::from_secs;
    let mut all = true;

    let w1 = w1_reference();
    let mut base = None;
    all &= report(1, secs(60), || {
        let b = shoot(&w1, 301);
        let f = shoot(&w1, 602);
        let o = criterion_1(&b, &f);
        base = Some(b);
        o
    });
    let base = base.unwrap();
    all &= report(2, secs(30), criterion_2);
    all &= report(3, min(10), criterion_3);

    let mut sigma = Err(String::new());
    let mut at_sigma = None;
    all &= report(4, min(10), || {
        sigma = sigma_star();
        if let Ok(s) = &sigma {
            at_sigma = Some(shoot(
                &PotentialSpec::w2(eps1_star(), s.parameter).unwrap(),
                301,
            ));
        }
        criterion_4(&sigma, &at_sigma)
    });

    let mut sets = vec![(w1, &base)];
    let w2_spec = sigma
        .as_ref()
        .ok()
        .map(|s| PotentialSpec::w2(eps1_star(), s.parameter).unwrap());
    if let (Some(spec), Some(r)) = (w2_spec, at_sigma.as_ref()) {
        sets.push((spec, r));
    }
    all &= report(5, secs(60), || criterion_5(&sets));
    all &= report(6, secs(60), criterion_6);
    all &= report(7, min(10), || criterion_7(&base));
    all &= report(8, secs(1), criterion_8);
    all &= report(9, min(10), || criterion_9(&sigma, &at_sigma));
    all &= report(10, min(10), criterion_10);

    if !all {
        std::process::exit(1);
    }
}
