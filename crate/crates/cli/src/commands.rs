//! Subcommand pipelines. Each writes its artifacts under `outputs.dir` and
//! returns its checks.

use std::fs::File;
use std::path::{Path as FsPath, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use allen_cahn::connections::{
    find_crossing, geometry_report, ActionSource, ConnectionResult, ConnectionSummary, Consistency,
    CrossingMode, CrossingResult, GeometryReport, RootInfo, ShootReport, StringOptions,
};
use allen_cahn::flow::{
    evolve, flow_domain, flow_energy, init_two_phase, measure_speed, tilt_junction,
    write_junction_csv, FlowOptions, SpeedFit,
};
use allen_cahn::minimizer2d::{self, Checkpoint, MinimizeOptions, MinimizeReport, StripDomain};
use allen_cahn::potential::{build_c0, minima_and_convexity, ConvexSetC0, MinimaInfo};
use allen_cahn::{Classification, Error, Path, PlanePoint, Potential, PotentialSpec};

use crate::config::RunConfig;
use crate::hypotheses::{shoot, validate_hypotheses};
use crate::report::{exit_code, read_json, write_json, Check, Provenance, ReportDocument, Status};
use crate::svg::{level_set_lines, Figure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Connections,
    EpsilonStar,
    SigmaStar,
    Minimize2d,
    Flow,
    Verify,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Connections => "connections",
            Command::EpsilonStar => "epsilon-star",
            Command::SigmaStar => "sigma-star",
            Command::Minimize2d => "minimize2d",
            Command::Flow => "flow",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

/// Runs one subcommand and returns the exit code (0 or 2); errors map to 1.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<i32> {
    std::fs::create_dir_all(&cfg.outputs.dir)
        .with_context(|| format!("cannot create {}", cfg.outputs.dir.display()))?;
    let checks = match cmd {
        Command::Connections => connections(cfg)?,
        Command::EpsilonStar => epsilon_star(cfg)?,
        Command::SigmaStar => sigma_star(cfg)?,
        Command::Minimize2d => minimize2d(cfg)?,
        Command::Flow => flow(cfg)?,
        Command::Verify => verify(cfg)?,
        Command::Report => report(cfg)?,
    };
    Ok(exit_code(&checks))
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.outputs.dir.join(name)
}

fn save_svg(cfg: &RunConfig, fig: &Figure, name: &str) -> Result<()> {
    if cfg.outputs.emit_svg {
        fig.save(&out(cfg, name))?;
    }
    Ok(())
}

fn string_options(cfg: &RunConfig) -> StringOptions {
    StringOptions {
        n_nodes: cfg.path.n,
        ..StringOptions::default()
    }
}

// ---------------------------------------------------------------- connections

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledConnection {
    pub label: String,
    pub file: String,
    pub summary: ConnectionSummary,
    pub consistency: Consistency,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairGeometry {
    pub upper: String,
    pub lower: String,
    pub report: GeometryReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionsArtifact {
    pub potential: PotentialSpec,
    pub n_scan: usize,
    pub u2_max: f64,
    pub x1_span: f64,
    pub roots: Vec<RootInfo>,
    pub connections: Vec<LabeledConnection>,
    pub geometry: Vec<PairGeometry>,
    pub checks: Vec<Check>,
}

impl ConnectionsArtifact {
    pub fn get(&self, label: &str) -> Option<&LabeledConnection> {
        self.connections.iter().find(|c| c.label == label)
    }

    /// Labels of the smallest-action upper connection and its mirror.
    pub fn minimal_pair(&self) -> Option<(String, String)> {
        let up = self
            .connections
            .iter()
            .filter(|c| c.summary.classification == Classification::Upper)
            .min_by(|a, b| a.summary.action.total_cmp(&b.summary.action))?;
        let lower = up.label.replace("_plus", "_minus");
        self.get(&lower)?;
        Some((up.label.clone(), lower))
    }
}

/// Labels in the shooting order: `e0` for the axis, then `e_plus/e_minus`
/// for a single pair or `e1_plus, e1_minus, e2_plus, ...` by increasing
/// crossing height.
pub fn label_connections(report: &ShootReport) -> Vec<(String, &ConnectionResult)> {
    let mut out = Vec::new();
    if let Some(axis) = report
        .connections
        .iter()
        .find(|c| c.classification() == Classification::Scalar)
    {
        out.push(("e0".to_string(), axis));
    }
    let mut uppers: Vec<&ConnectionResult> = report
        .connections
        .iter()
        .filter(|c| c.classification() == Classification::Upper)
        .collect();
    uppers.sort_by(|a, b| {
        a.shooting_height
            .unwrap_or(0.0)
            .total_cmp(&b.shooting_height.unwrap_or(0.0))
    });
    let single = uppers.len() == 1;
    for (k, up) in uppers.into_iter().enumerate() {
        let stem = if single {
            "e".to_string()
        } else {
            format!("e{}", k + 1)
        };
        out.push((format!("{stem}_plus"), up));
        let h = up.shooting_height.unwrap_or(0.0);
        if let Some(low) = report.connections.iter().find(|c| {
            c.classification() == Classification::Lower
                && c.shooting_height.map_or(false, |l| (l + h).abs() <= 1e-12)
        }) {
            out.push((format!("{stem}_minus"), low));
        }
    }
    out
}

fn connections(cfg: &RunConfig) -> Result<Vec<Check>> {
    let spec = cfg.potential_spec()?;
    let report = shoot(&spec, cfg, cfg.shooting.n_scan)?;
    let labeled = label_connections(&report);
    let mut checks = Vec::new();
    let mut entries = Vec::new();
    for (label, c) in &labeled {
        let file = format!("{label}.csv");
        c.path.write_csv(File::create(out(cfg, &file))?)?;
        let consistency = c.consistency(&spec);
        checks.push(Check::pass_if(
            &format!("{label}.self_consistency"),
            consistency.action_gap,
            consistency.all_ok(),
            "equipartition, ODE residual, mirror action, geometric vs Lagrangian action",
        ));
        entries.push(LabeledConnection {
            label: label.clone(),
            file,
            summary: c.summary(),
            consistency,
        });
    }
    if labeled.len() != report.count() {
        checks.push(Check::new(
            "connections.unpaired",
            (report.count() - labeled.len()) as f64,
            Status::Fail,
            "connections without a mirror partner",
        ));
    }

    let action = |l: &str| {
        entries
            .iter()
            .find(|e| e.label == l)
            .map(|e| e.summary.action)
    };
    let e0 = action("e0");
    let uppers: Vec<&LabeledConnection> = entries
        .iter()
        .filter(|e| e.summary.classification == Classification::Upper)
        .collect();
    match e0 {
        Some(e0) if !uppers.is_empty() => {
            for up in &uppers {
                let a = up.summary.action;
                checks.push(Check::new(
                    &format!("{}.relative_gap_to_e0", up.label),
                    (e0 - a) / e0,
                    Status::Reported,
                    format!("E = {a:.6}, E0 = {e0:.6}"),
                ));
            }
            let min = uppers
                .iter()
                .map(|u| u.summary.action)
                .fold(f64::INFINITY, f64::min);
            checks.push(
                Check::pass_if(
                    "minimal.below_e0",
                    (e0 - min) / e0,
                    min < e0,
                    format!("min off-axis E = {min:.6}, E0 = {e0:.6}"),
                )
                .with_reference(0.0),
            );
            if uppers.len() == 2 {
                let (a, b) = (uppers[0].summary.action, uppers[1].summary.action);
                checks.push(Check::new(
                    "families.action_gap",
                    (a - b) / a,
                    Status::Reported,
                    format!("E_I - E_II = {:.6e}", a - b),
                ));
            }
        }
        _ => checks.push(Check::new(
            "connections.found",
            report.count() as f64,
            Status::Fail,
            "missing axis or off-axis connection",
        )),
    }

    let mut geometry = Vec::new();
    for up in &uppers {
        let lower = up.label.replace("_plus", "_minus");
        let (Some(u), Some(l)) = (
            labeled.iter().find(|(k, _)| *k == up.label),
            labeled.iter().find(|(k, _)| *k == lower),
        ) else {
            continue;
        };
        let g = geometry_report(&u.1.path, &l.1.path, &spec)?;
        geometry.push(PairGeometry {
            upper: up.label.clone(),
            lower,
            report: g,
        });
    }

    let mut wr = csv::Writer::from_path(out(cfg, "scan.csv"))?;
    wr.write_record(["c", "miss", "closest_distance", "flagged"])?;
    for p in &report.scan {
        wr.write_record([
            fmt(p.c),
            fmt(p.miss),
            fmt(p.closest_distance),
            p.flagged.to_string(),
        ])?;
    }
    wr.flush()?;

    write_json(
        &out(cfg, "connections.json"),
        &ConnectionsArtifact {
            potential: spec,
            n_scan: cfg.shooting.n_scan,
            u2_max: cfg.shooting.u2_max,
            x1_span: report.x1_span,
            roots: report.roots.clone(),
            connections: entries,
            geometry,
            checks: checks.clone(),
        },
    )?;

    if cfg.outputs.emit_svg {
        let reach = report
            .connections
            .iter()
            .flat_map(|c| c.path.nodes.iter())
            .map(|u| u.norm())
            .fold(1.0, f64::max);
        let half = (reach + 0.3).max(1.5);
        let mut fig = Figure::new("connections and level sets of W", "u1", "u2");
        fig.equal_aspect = true;
        for line in level_set_lines(&spec, half, 241) {
            fig.line(line, "#bbbbbb", 0.6);
        }
        for (_, c) in &labeled {
            fig.line(
                c.path.nodes.iter().map(|u| (u.u1, u.u2)).collect(),
                "#1f4fa0",
                1.5,
            );
        }
        fig.markers = spec.poles().iter().map(|p| (p.u1, p.u2)).collect();
        save_svg(cfg, &fig, "connections.svg")?;

        let mut scan = Figure::new("shooting miss", "c", "miss");
        scan.line(
            report.scan.iter().map(|p| (p.c, p.miss)).collect(),
            "#1f4fa0",
            1.0,
        );
        scan.line(vec![(0.0, 0.0), (cfg.shooting.u2_max, 0.0)], "#888888", 0.5);
        save_svg(cfg, &scan, "scan.svg")?;
    }
    Ok(checks)
}

fn fmt(x: f64) -> String {
    allen_cahn::path::fmt17(x)
}

/// Loads `connections.json` and checks it was computed for `spec`.
fn load_connections(cfg: &RunConfig, spec: &PotentialSpec) -> Result<ConnectionsArtifact> {
    let path = out(cfg, "connections.json");
    if !path.exists() {
        bail!(
            "missing prerequisite artifact {}: run `connections` first",
            path.display()
        );
    }
    let art: ConnectionsArtifact = read_json(&path)?;
    if art.potential != *spec {
        bail!(
            "prerequisite artifact {} was computed for a different potential: rerun `connections`",
            path.display()
        );
    }
    Ok(art)
}

fn load_path(cfg: &RunConfig, art: &ConnectionsArtifact, label: &str) -> Result<Path> {
    let entry = art.get(label).ok_or_else(|| {
        anyhow!(
            "connection `{label}` is not among {:?}",
            art.connections.iter().map(|c| &c.label).collect::<Vec<_>>()
        )
    })?;
    let file = out(cfg, &entry.file);
    let path = Path::read_csv(
        File::open(&file)
            .with_context(|| format!("missing prerequisite artifact {}", file.display()))?,
    )?;
    Ok(path)
}

// ------------------------------------------------------------------ crossings

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingArtifact {
    pub mode: CrossingMode,
    pub bracket: (f64, f64),
    pub quadrature: Option<CrossingResult>,
    pub closed_form: Option<CrossingResult>,
    /// Gap tables of sources without a sign change.
    pub no_sign_change: Vec<(ActionSource, Vec<(f64, f64)>)>,
    pub reference_value: Option<f64>,
    pub checks: Vec<Check>,
}

/// The printed value of the W1 crossing.
pub const REFERENCE_EPS_STAR: f64 = 0.4416;
/// Four printed decimals plus the bisection width.
pub const REFERENCE_EPS_STAR_TOL: f64 = 2e-4;
/// Relative disagreement of closed-form and quadrature roots that needs
/// reconciliation.
pub const CLOSED_FORM_REL_TOL: f64 = 0.02;

fn crossing(
    cfg: &RunConfig,
    base: &PotentialSpec,
    mode: CrossingMode,
    bracket: (f64, f64),
    reference_value: Option<f64>,
    stem: &str,
) -> Result<Vec<Check>> {
    let opts = string_options(cfg);
    let mut no_sign_change = Vec::new();
    let mut attempt = |source: ActionSource| -> Result<Option<CrossingResult>> {
        match find_crossing(base, bracket, mode, source, &opts) {
            Ok(r) => Ok(Some(r)),
            Err(Error::NoSignChange { table }) => {
                no_sign_change.push((source, table));
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    };
    let quadrature = attempt(ActionSource::Quadrature)?;
    let closed_form = attempt(ActionSource::ClosedForm)?;

    let mut checks = Vec::new();
    match &quadrature {
        Some(q) => {
            let width = q.bracket.1 - q.bracket.0;
            checks.push(
                Check::pass_if(
                    &format!("{stem}.quadrature_bracket"),
                    width,
                    width <= 1e-4,
                    format!("root {:.6}", q.parameter),
                )
                .with_tolerance(1e-4),
            );
            if let Some(p) = reference_value {
                checks.push(Check::against(
                    &format!("{stem}.vs_reference"),
                    q.parameter,
                    p,
                    REFERENCE_EPS_STAR_TOL,
                    Status::Reconcile,
                ));
            }
        }
        None => checks.push(Check::new(
            &format!("{stem}.quadrature_bracket"),
            f64::NAN,
            Status::Reconcile,
            "no sign change of the quadrature gap in the bracket",
        )),
    }
    match (&quadrature, &closed_form) {
        (Some(q), Some(c)) => checks.push(Check::against(
            &format!("{stem}.closed_form_vs_quadrature"),
            c.parameter,
            q.parameter,
            CLOSED_FORM_REL_TOL * q.parameter,
            Status::Reconcile,
        )),
        (_, None) => checks.push(Check::new(
            &format!("{stem}.closed_form"),
            f64::NAN,
            Status::Reconcile,
            "no sign change of the printed-formula gap in the bracket",
        )),
        _ => {}
    }

    let mut wr = csv::Writer::from_path(out(cfg, &format!("{stem}_gaps.csv")))?;
    wr.write_record(["source", "parameter", "gap", "e0", "e_pm", "e_i", "e_ii"])?;
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    for r in quadrature.iter().chain(closed_form.iter()) {
        for p in &r.probes {
            wr.write_record([
                source_name(r.source).to_string(),
                fmt(p.parameter),
                fmt(p.gap),
                fmt(p.actions.e0),
                opt(p.actions.e_pm),
                opt(p.actions.e_i),
                opt(p.actions.e_ii),
            ])?;
        }
    }
    for (source, table) in &no_sign_change {
        for &(t, g) in table {
            wr.write_record([
                source_name(*source).to_string(),
                fmt(t),
                fmt(g),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
    }
    wr.flush()?;

    if cfg.outputs.emit_svg {
        let mut fig = Figure::new(&format!("{stem} action gap"), "parameter", "gap");
        for (r, color) in quadrature
            .iter()
            .map(|r| (r, "#1f4fa0"))
            .chain(closed_form.iter().map(|r| (r, "#c03030")))
        {
            let mut pts: Vec<(f64, f64)> = r.probes.iter().map(|p| (p.parameter, p.gap)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            fig.line(pts, color, 1.2);
        }
        if !fig.series.is_empty() {
            fig.line(vec![(bracket.0, 0.0), (bracket.1, 0.0)], "#888888", 0.5);
        }
        save_svg(cfg, &fig, &format!("{stem}_gaps.svg"))?;
    }

    write_json(
        &out(cfg, &format!("{stem}.json")),
        &CrossingArtifact {
            mode,
            bracket,
            quadrature,
            closed_form,
            no_sign_change,
            reference_value,
            checks: checks.clone(),
        },
    )?;
    Ok(checks)
}

fn source_name(s: ActionSource) -> &'static str {
    match s {
        ActionSource::ClosedForm => "closed_form",
        ActionSource::Quadrature => "quadrature",
    }
}

fn epsilon_star(cfg: &RunConfig) -> Result<Vec<Check>> {
    let b = cfg.crossing.eps_bracket;
    let base = PotentialSpec::w1(0.5 * (b[0] + b[1]))?;
    let base = match cfg.potential.cap_value {
        Some(c) => base.with_cap(c)?,
        None => base,
    };
    crossing(
        cfg,
        &base,
        CrossingMode::EpsStar,
        (b[0], b[1]),
        Some(REFERENCE_EPS_STAR),
        "epsilon_star",
    )
}

fn sigma_star(cfg: &RunConfig) -> Result<Vec<Check>> {
    if cfg.potential.family != "W2" {
        bail!("potential.family: sigma-star needs the W2 family");
    }
    let eps1 = cfg.resolve("eps1", &cfg.potential.eps1)?;
    let b = cfg.crossing.sigma_bracket;
    let base = PotentialSpec::w2(eps1, 0.5 * (b[0] + b[1]))?;
    let base = match cfg.potential.cap_value {
        Some(c) => base.with_cap(c)?,
        None => base,
    };
    crossing(
        cfg,
        &base,
        CrossingMode::SigmaStar { eps1 },
        (b[0], b[1]),
        None,
        "sigma_star",
    )
}

// ------------------------------------------------------------------ minimizer

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeArtifact {
    pub potential: PotentialSpec,
    pub e_plus: String,
    pub e_minus: String,
    pub e_min: f64,
    pub minima: MinimaInfo,
    pub c0: ConvexSetC0,
    pub c0_fallback: bool,
    pub report: MinimizeReport,
    pub checks: Vec<Check>,
}

/// The pass/fail verdicts on a minimizer report.
pub fn minimizer_checks(report: &MinimizeReport, minima: &MinimaInfo) -> Vec<Check> {
    let h = report.domain.h;
    let b = &report.bounds;
    let s = &report.slices;
    let mut checks = vec![
        Check::pass_if(
            "minimizer.monotone",
            report.stats.trace_violations as f64,
            report.monotone(),
            format!(
                "{} trace and {} fold violations",
                report.stats.trace_violations, report.stats.fold_violations
            ),
        ),
        Check::pass_if(
            "minimizer.nontrivial",
            report.max_norm,
            report.nontrivial(),
            "max |u| over the grid",
        )
        .with_reference(0.5),
        Check::pass_if(
            "minimizer.equivariant",
            report.equivariance_error,
            report.equivariance_error <= 1e-12,
            "max |u(gx) - g u(x)|",
        )
        .with_tolerance(1e-12),
        Check::pass_if(
            "minimizer.feasible",
            report.constraint_max,
            report.constraint_max <= report.constraint_r,
            "max distance to a± on the constraint columns",
        )
        .with_reference(report.constraint_r),
        Check::pass_if(
            "minimizer.cosh_bound",
            b.cosh_violations as f64,
            b.cosh_checked > 0 && b.cosh_violations == 0,
            format!(
                "{} of {} nodes above the barrier, max excess {:.3e}",
                b.cosh_violations, b.cosh_checked, b.cosh_max_violation
            ),
        )
        .with_tolerance(b.tol),
    ];
    match (&b.decay_fit, minima.nondegenerate) {
        (Some(fit), true) => checks.push(
            Check::pass_if(
                "minimizer.decay_rate",
                fit.rate,
                fit.rate >= 0.5 * minima.c,
                format!(
                    "fitted rate vs c/2 = {:.4}; M = {:.4}, r2 = {:.4}",
                    0.5 * minima.c,
                    fit.m,
                    fit.r2
                ),
            )
            .with_reference(0.5 * minima.c),
        ),
        (Some(fit), false) => checks.push(Check::new(
            "minimizer.decay_rate",
            fit.rate,
            Status::Reported,
            "degenerate wells: no exponential rate is predicted",
        )),
        (None, _) => checks.push(Check::new(
            "minimizer.decay_rate",
            f64::NAN,
            Status::Fail,
            "too few points for a decay fit",
        )),
    }
    checks.push(Check::pass_if(
        "minimizer.sandwich",
        s.energy,
        s.lower_bound_ok && s.upper_bound_ok,
        format!(
            "2R(E_min - 5h) = {:.4} <= J = {:.4} <= J(comparison) = {:.4}",
            2.0 * report.domain.r_half * (s.e_min - 5.0 * h),
            s.energy,
            s.comparison_energy
        ),
    ));
    let dist = s.top_distance.max(s.bottom_distance);
    checks.push(
        Check::pass_if(
            "minimizer.boundary_rows",
            dist,
            dist <= 0.1,
            "sup-distance of top/bottom rows to e±",
        )
        .with_tolerance(0.1),
    );
    checks.push(
        Check::pass_if(
            "minimizer.interior_residual",
            report.interior_residual,
            report.interior_residual <= 0.05,
            "normalized PDE residual",
        )
        .with_tolerance(0.05),
    );
    checks
}

fn minimize2d(cfg: &RunConfig) -> Result<Vec<Check>> {
    let spec = cfg.potential_spec()?;
    let art = load_connections(cfg, &spec)?;
    let (plus, minus) = art
        .minimal_pair()
        .ok_or_else(|| anyhow!("connections.json has no minimal upper/lower pair"))?;
    let e_plus = load_path(cfg, &art, &plus)?;
    let e_minus = load_path(cfg, &art, &minus)?;
    let e_min = art.get(&plus).map(|c| c.summary.action).unwrap_or(f64::NAN);
    let all: Vec<Path> = art
        .connections
        .iter()
        .map(|c| load_path(cfg, &art, &c.label))
        .collect::<Result<_>>()?;
    let (c0, c0_fallback) = match build_c0(&spec, &all) {
        Ok(c0) => (c0, false),
        Err(_) => (ConvexSetC0::containing(&all), true),
    };
    let minima = minima_and_convexity(&spec)?;
    let g = &cfg.grid;
    let domain = StripDomain::new(g.r_half, g.mu, g.eta, g.h)?;
    let opts = MinimizeOptions {
        max_iter: cfg.solver.max_iter,
        tol_rel: cfg.solver.tol_rel,
        fold_every: cfg.solver.fold_every,
        ..MinimizeOptions::default()
    };
    let (field, report) = minimizer2d::run(
        &spec, &minima, domain, g.r, &e_plus, &e_minus, e_min, &c0, &opts,
    )?;

    let trace = &report.stats.energy_trace;
    Checkpoint {
        domain,
        constraint_r: g.r,
        iteration: report.stats.iterations,
        energy_trace_tail: trace[trace.len().saturating_sub(100)..].to_vec(),
    }
    .save(&field, &out(cfg, "field.csv"))?;

    let checks = minimizer_checks(&report, &minima);
    if cfg.outputs.emit_svg {
        let mut decay = Figure::new("decay of |u - a+| (column max)", "x1", "|u - a+|");
        decay.log_y = true;
        let d = &field.domain;
        let col: Vec<(f64, f64)> = (d.ic()..d.nx)
            .map(|i| {
                let m = (0..d.ny)
                    .map(|j| field.at(i, j).distance(PlanePoint::A_PLUS))
                    .fold(0.0, f64::max);
                (d.x1(i), m)
            })
            .collect();
        decay.line(col, "#1f4fa0", 1.2);
        if let Some(fit) = &report.bounds.decay_fit {
            let x_end = d.x1(d.nx - 1);
            decay.line(
                vec![(0.0, fit.m), (x_end, fit.m * (-fit.rate * x_end).exp())],
                "#c03030",
                0.8,
            );
        }
        save_svg(cfg, &decay, "decay.svg")?;

        let mut slices = Figure::new("slice actions", "x2", "action of row");
        slices.line(report.slices.slice_actions.clone(), "#1f4fa0", 1.2);
        if let (Some(first), Some(last)) = (
            report.slices.slice_actions.first(),
            report.slices.slice_actions.last(),
        ) {
            slices.line(vec![(first.0, e_min), (last.0, e_min)], "#c03030", 0.8);
        }
        save_svg(cfg, &slices, "slices.svg")?;
    }
    write_json(
        &out(cfg, "minimize_report.json"),
        &MinimizeArtifact {
            potential: spec,
            e_plus: plus,
            e_minus: minus,
            e_min,
            minima,
            c0,
            c0_fallback,
            report,
            checks: checks.clone(),
        },
    )?;
    Ok(checks)
}

// ----------------------------------------------------------------------- flow

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowArtifact {
    pub potential: PotentialSpec,
    pub top: String,
    pub bottom: String,
    pub e_top: f64,
    pub e_bottom: f64,
    /// `sign(E_top - E_bottom)`: the junction moves toward the phase of
    /// larger action.
    pub expected_sign: f64,
    pub speed: Option<SpeedFit>,
    pub steps: usize,
    pub final_dt: f64,
    pub final_time: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_energy_increase: f64,
    pub checks: Vec<Check>,
}

/// Relative action gap below which the two phases count as balanced.
pub const BALANCED_REL_TOL: f64 = 1e-3;

fn flow(cfg: &RunConfig) -> Result<Vec<Check>> {
    let spec = cfg.potential_spec()?;
    let art = load_connections(cfg, &spec)?;
    let f = &cfg.flow;
    let top = load_path(cfg, &art, &f.top)?;
    let bottom = load_path(cfg, &art, &f.bottom)?;
    let e_top = art
        .get(&f.top)
        .map(|c| c.summary.action)
        .unwrap_or(f64::NAN);
    let e_bottom = art
        .get(&f.bottom)
        .map(|c| c.summary.action)
        .unwrap_or(f64::NAN);
    let domain = flow_domain(f.half_width, f.half_height, f.h)?;
    let opts = FlowOptions {
        eps_flow: f.eps_flow,
        dt_safety: f.dt_safety,
        ..FlowOptions::default()
    };
    let mut state = init_two_phase(domain, &top, &bottom, f.x2_split, opts)?;
    tilt_junction(&mut state, f.x1_tilt);
    let initial_energy = flow_energy(&spec, &state.field, f.eps_flow);
    let state = evolve(state, &spec, f.t_end)?;
    let final_energy = flow_energy(&spec, &state.field, f.eps_flow);
    let speed = measure_speed(&state).ok();
    write_junction_csv(&state, File::create(out(cfg, "junction.csv"))?)?;

    let mut checks = Vec::new();
    let tol = 1e-10 * initial_energy.abs().max(1.0);
    checks.push(
        Check::pass_if(
            "flow.energy_dissipation",
            state.max_energy_increase,
            state.max_energy_increase <= tol,
            "largest energy increase between records",
        )
        .with_tolerance(tol),
    );
    let diff = e_top - e_bottom;
    let expected_sign = diff.signum();
    match &speed {
        None => checks.push(Check::new(
            "flow.speed",
            f64::NAN,
            Status::Fail,
            "too few junction samples",
        )),
        Some(s) if diff.abs() <= BALANCED_REL_TOL * e_top.max(e_bottom) => checks.push(Check::new(
            "flow.speed",
            s.speed,
            Status::Reported,
            format!(
                "balanced phases (E_top - E_bottom = {diff:.3e}); r2 = {:.4}",
                s.r2
            ),
        )),
        Some(s) => checks.push(
            Check::pass_if(
                "flow.speed_sign",
                s.speed,
                s.speed.signum() == expected_sign,
                format!("E_top - E_bottom = {diff:.4e}; r2 = {:.4}", s.r2),
            )
            .with_reference(expected_sign),
        ),
    }

    if cfg.outputs.emit_svg {
        let mut fig = Figure::new("junction position", "t", "x2");
        fig.line(state.junction_history.clone(), "#1f4fa0", 1.2);
        save_svg(cfg, &fig, "junction.svg")?;
    }
    write_json(
        &out(cfg, "flow.json"),
        &FlowArtifact {
            potential: spec,
            top: f.top.clone(),
            bottom: f.bottom.clone(),
            e_top,
            e_bottom,
            expected_sign,
            speed,
            steps: state.steps,
            final_dt: state.dt,
            final_time: state.time,
            initial_energy,
            final_energy,
            max_energy_increase: state.max_energy_increase,
            checks: checks.clone(),
        },
    )?;
    Ok(checks)
}

// --------------------------------------------------------------- verify/report

fn verify(cfg: &RunConfig) -> Result<Vec<Check>> {
    let spec = cfg.potential_spec()?;
    let report = validate_hypotheses(&spec, cfg)?;
    write_json(&out(cfg, "hypotheses.json"), &report)?;
    Ok(report.checks)
}

const SECTIONS: [&str; 7] = [
    "hypotheses.json",
    "connections.json",
    "epsilon_star.json",
    "sigma_star.json",
    "minimize_report.json",
    "flow.json",
    "timing.txt",
];

fn checks_of(doc: &serde_json::Value) -> Result<Vec<Check>> {
    match doc.get("checks") {
        Some(v) => Ok(serde_json::from_value(v.clone())?),
        None => Ok(Vec::new()),
    }
}

fn report(cfg: &RunConfig) -> Result<Vec<Check>> {
    let load = |name: &str| -> Result<Option<serde_json::Value>> {
        let p = out(cfg, name);
        if p.exists() {
            Ok(Some(read_json(&p)?))
        } else {
            Ok(None)
        }
    };
    let hypotheses = load(SECTIONS[0])?;
    let connections = load(SECTIONS[1])?;
    let crossings: Vec<serde_json::Value> = [load(SECTIONS[2])?, load(SECTIONS[3])?]
        .into_iter()
        .flatten()
        .collect();
    let minimizer = load(SECTIONS[4])?;
    let flow = load(SECTIONS[5])?;
    let mut checks = Vec::new();
    for doc in hypotheses
        .iter()
        .chain(connections.iter())
        .chain(crossings.iter())
        .chain(minimizer.iter())
        .chain(flow.iter())
    {
        checks.extend(checks_of(doc)?);
    }
    let artifacts = SECTIONS[..6]
        .iter()
        .filter(|n| out(cfg, n).exists())
        .map(|n| n.to_string())
        .collect();
    let doc = ReportDocument {
        hypotheses,
        connections,
        crossings,
        minimizer,
        flow,
        checks: checks.clone(),
        provenance: Provenance {
            config_hash: cfg.hash(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: allen_cahn::VERSION.to_string(),
            seed: cfg.seed,
            artifacts,
            timing_file: SECTIONS[6].to_string(),
        },
    };
    write_json(&out(cfg, "report.json"), &doc)?;
    Ok(checks)
}

/// Appends `subcommand seconds` to the timing file.
pub fn record_timing(dir: &FsPath, cmd: Command, seconds: f64) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join(SECTIONS[6]))?;
    writeln!(f, "{} {seconds:.3}", cmd.name())?;
    Ok(())
}
