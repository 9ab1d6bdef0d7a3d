//! Numerical checks of the structural hypotheses on the potential.

use serde::{Deserialize, Serialize};

use allen_cahn::connections::{shoot_connections, ShootOptions, ShootReport};
use allen_cahn::potential::{
    build_c0, check_q_monotonicity, check_symmetry, minima_and_convexity, ConvexSetC0, MinimaInfo,
    QCandidate,
};
use allen_cahn::{Classification, PlanePoint, PotentialSpec};

use crate::config::RunConfig;
use crate::report::{Check, Status};

const SYMMETRY_SAMPLES: usize = 4096;
const SYMMETRY_TOL: f64 = 1e-12;
const Q_SAMPLES: usize = 10_000;
/// Relative action gap below which two connections count as equally minimal.
pub const MINIMAL_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountSummary {
    pub n_scan: usize,
    pub found: usize,
    pub minimal: usize,
    pub heights: Vec<f64>,
    pub actions: Vec<f64>,
}

impl CountSummary {
    pub fn of(report: &ShootReport, n_scan: usize) -> Self {
        let actions: Vec<f64> = report.connections.iter().map(|c| c.action).collect();
        Self {
            n_scan,
            found: report.count(),
            minimal: minimal_count(&actions),
            heights: report
                .connections
                .iter()
                .filter_map(|c| c.shooting_height)
                .collect(),
            actions,
        }
    }
}

/// Number of actions within the relative tolerance of the smallest.
pub fn minimal_count(actions: &[f64]) -> usize {
    let Some(min) = actions.iter().copied().reduce(f64::min) else {
        return 0;
    };
    actions
        .iter()
        .filter(|&&a| a <= min * (1.0 + MINIMAL_REL_TOL))
        .count()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesesReport {
    pub potential: PotentialSpec,
    pub minima: Option<MinimaInfo>,
    pub symmetry_defect: f64,
    pub c0: ConvexSetC0,
    pub c0_fallback: bool,
    pub q_samples_used: usize,
    pub q_violations: usize,
    pub q_violation_fraction: f64,
    pub e0: Option<f64>,
    pub off_axis_actions: Vec<f64>,
    pub counts: Vec<CountSummary>,
    pub checks: Vec<Check>,
}

pub fn shoot(spec: &PotentialSpec, cfg: &RunConfig, n_scan: usize) -> anyhow::Result<ShootReport> {
    let opts = ShootOptions {
        n_nodes: cfg.path.n,
        ..ShootOptions::default()
    };
    Ok(shoot_connections(
        spec,
        (0.0, cfg.shooting.u2_max),
        n_scan,
        &opts,
    )?)
}

/// H1 through H5. Failures become check entries; only a failed shooting run
/// is an error.
pub fn validate_hypotheses(
    spec: &PotentialSpec,
    cfg: &RunConfig,
) -> anyhow::Result<HypothesesReport> {
    let mut checks = Vec::new();

    let minima = minima_and_convexity(spec);
    match &minima {
        Ok(m) => {
            let off = m
                .a_plus
                .distance(PlanePoint::A_PLUS)
                .max(m.a_minus.distance(PlanePoint::A_MINUS));
            checks.push(
                Check::pass_if(
                    "H1.minima_at_pm1",
                    off,
                    off <= 1e-8,
                    "distance of refined wells from (±1, 0)",
                )
                .with_tolerance(1e-8),
            );
            let status = if m.nondegenerate {
                Status::Pass
            } else {
                Status::Reconcile
            };
            checks.push(Check::new(
                "H1.nondegenerate",
                m.hess_eigs.0,
                status,
                format!(
                    "smallest Hessian eigenvalue at a+; c = {:.4}, r0 = {}",
                    m.c, m.r0
                ),
            ));
        }
        Err(e) => checks.push(Check::new(
            "H1.minima_at_pm1",
            f64::NAN,
            Status::Fail,
            e.to_string(),
        )),
    }

    let symmetry_defect = check_symmetry(spec, SYMMETRY_SAMPLES);
    checks.push(
        Check::pass_if(
            "H2.symmetry",
            symmetry_defect,
            symmetry_defect <= SYMMETRY_TOL,
            "max |W(gu) - W(u)| over the group",
        )
        .with_tolerance(SYMMETRY_TOL),
    );

    let base = shoot(spec, cfg, cfg.shooting.n_scan)?;
    let paths: Vec<_> = base.connections.iter().map(|c| c.path.clone()).collect();
    let (c0, c0_fallback) = match build_c0(spec, &paths) {
        Ok(c0) => {
            checks.push(Check::new(
                "H2.c0",
                c0.radius,
                Status::Pass,
                "disk radius with W above its boundary maximum outside",
            ));
            (c0, false)
        }
        Err(e) => {
            let c0 = ConvexSetC0::containing(&paths);
            checks.push(Check::new(
                "H2.c0",
                c0.radius,
                Status::Reconcile,
                format!("{e}; containment disk used instead"),
            ));
            (c0, true)
        }
    };

    let q = check_q_monotonicity(spec, QCandidate::Radial, Q_SAMPLES);
    checks.push(Check::new(
        "H3.radial_q",
        q.violation_fraction,
        Status::Reported,
        format!(
            "{} of {} samples violate W_u . Q_u >= 0",
            q.violations.len(),
            q.samples_used
        ),
    ));

    let e0 = base
        .connections
        .iter()
        .find(|c| c.classification() == Classification::Scalar)
        .map(|c| c.action);
    let off_axis_actions: Vec<f64> = base
        .connections
        .iter()
        .filter(|c| c.classification() != Classification::Scalar)
        .map(|c| c.action)
        .collect();
    match (e0, off_axis_actions.iter().copied().reduce(f64::min)) {
        (Some(e0), Some(min)) => {
            let gap = (e0 - min) / e0;
            checks.push(
                Check::pass_if(
                    "H4.off_axis_below_e0",
                    gap,
                    min < e0,
                    format!("E0 = {e0:.6}, min off-axis = {min:.6}"),
                )
                .with_reference(0.0),
            );
        }
        _ => checks.push(Check::new(
            "H4.off_axis_below_e0",
            f64::NAN,
            Status::Fail,
            "missing axis or off-axis connection",
        )),
    }

    let fine = shoot(spec, cfg, 2 * cfg.shooting.n_scan)?;
    let counts = vec![
        CountSummary::of(&base, cfg.shooting.n_scan),
        CountSummary::of(&fine, 2 * cfg.shooting.n_scan),
    ];
    let stable = counts[0].found == counts[1].found && counts[0].minimal == counts[1].minimal;
    checks.push(Check::pass_if(
        "H5.count_stable",
        counts[0].found as f64,
        stable && counts[0].found > 0,
        format!(
            "#C = {} (#M = {}) at {} scan points, #C = {} (#M = {}) at {}",
            counts[0].found,
            counts[0].minimal,
            counts[0].n_scan,
            counts[1].found,
            counts[1].minimal,
            counts[1].n_scan
        ),
    ));
    let isolated = isolated(&counts[1].heights);
    checks.push(Check::pass_if(
        "H5.isolated",
        counts[1].heights.len() as f64,
        isolated,
        "distinct shooting heights",
    ));

    Ok(HypothesesReport {
        potential: *spec,
        minima: minima.ok(),
        symmetry_defect,
        c0,
        c0_fallback,
        q_samples_used: q.samples_used,
        q_violations: q.violations.len(),
        q_violation_fraction: q.violation_fraction,
        e0,
        off_axis_actions,
        counts,
        checks,
    })
}

fn isolated(heights: &[f64]) -> bool {
    let mut h = heights.to_vec();
    h.sort_by(f64::total_cmp);
    h.windows(2).all(|w| w[1] - w[0] > 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_counting() {
        assert_eq!(minimal_count(&[]), 0);
        assert_eq!(minimal_count(&[5.8, 6.6, 5.8]), 2);
        assert_eq!(minimal_count(&[8.9335, 8.9331, 8.9331, 8.9335, 9.8]), 4);
    }

    #[test]
    fn isolation() {
        assert!(isolated(&[0.0, 1.0, -1.0]));
        assert!(!isolated(&[0.5, 0.5]));
    }
}
