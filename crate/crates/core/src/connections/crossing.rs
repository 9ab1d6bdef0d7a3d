use serde::{Deserialize, Serialize};

use super::{
    closed_form_actions, ellipse_init, minimize_path, scalar_connection, ActionFormulas,
    ActionSource, StringOptions,
};
use crate::error::{Error, Result};
use crate::potential::{Family, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CrossingMode {
    /// Root in `eps` of `E(e±) - E(e0)` for `W1`.
    EpsStar,
    /// Root in `eps2` of `E_I - E_II` for `W2` at fixed `eps1`.
    SigmaStar { eps1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingProbe {
    pub parameter: f64,
    pub gap: f64,
    pub actions: ActionFormulas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingResult {
    pub mode: CrossingMode,
    pub source: ActionSource,
    /// Midpoint of the final bracket.
    pub parameter: f64,
    pub bracket: (f64, f64),
    /// Every bracket in order, each nested in the previous one.
    pub brackets: Vec<(f64, f64)>,
    /// Action values at every probe, in evaluation order.
    pub probes: Vec<CrossingProbe>,
    /// Gap at the returned parameter, interpolated linearly from the bracket
    /// ends.
    pub gap_at_root: f64,
}

pub const CROSSING_WIDTH: f64 = 1e-4;

fn spec_at(base: &PotentialSpec, mode: CrossingMode, t: f64) -> Result<PotentialSpec> {
    let spec = match mode {
        CrossingMode::EpsStar => PotentialSpec::w1(t)?,
        CrossingMode::SigmaStar { eps1 } => PotentialSpec::w2(eps1, t)?,
    };
    spec.with_cap(base.cap_value)
}

/// Actions of every family computed by quadrature (axis) and string
/// minimization (off-axis families).
pub fn quadrature_actions(spec: &PotentialSpec, opts: &StringOptions) -> Result<ActionFormulas> {
    let n = opts.n_nodes | 1;
    let e0 = scalar_connection(spec, n)?.action;
    match spec.family {
        Family::W1 { eps } => {
            let init = ellipse_init(1.0f64.max(1.3 * eps), n, true);
            let up = minimize_path(spec, &init, opts)?;
            Ok(ActionFormulas {
                source: ActionSource::Quadrature,
                e0,
                e_pm: Some(up.action),
                e_i: None,
                e_ii: None,
            })
        }
        Family::W2 { eps1, eps2 } => {
            let (e1, e2) = w2_families(spec, eps1, eps2, opts)?;
            Ok(ActionFormulas {
                source: ActionSource::Quadrature,
                e0,
                e_pm: None,
                e_i: Some(e1.action),
                e_ii: Some(e2.action),
            })
        }
    }
}

/// The two upper families of `W2`: between the poles and above both.
pub fn w2_families(
    spec: &PotentialSpec,
    eps1: f64,
    eps2: f64,
    opts: &StringOptions,
) -> Result<(super::ConnectionResult, super::ConnectionResult)> {
    let n = opts.n_nodes | 1;
    let inner = ellipse_init((eps1 * eps2).sqrt(), n, true);
    let outer = ellipse_init(1.0f64.max(2.0 * eps2), n, true);
    Ok((
        minimize_path(spec, &inner, opts)?,
        minimize_path(spec, &outer, opts)?,
    ))
}

fn gap_of(mode: CrossingMode, a: &ActionFormulas) -> f64 {
    match mode {
        CrossingMode::EpsStar => a.e_pm.unwrap_or(f64::NAN) - a.e0,
        CrossingMode::SigmaStar { .. } => a.e_i.unwrap_or(f64::NAN) - a.e_ii.unwrap_or(f64::NAN),
    }
}

/// Bisection on the action gap until the bracket is at most `1e-4` wide.
/// Without a sign change the error carries the tabulated end gaps.
pub fn find_crossing(
    base: &PotentialSpec,
    bracket: (f64, f64),
    mode: CrossingMode,
    source: ActionSource,
    opts: &StringOptions,
) -> Result<CrossingResult> {
    let mut probes = Vec::new();
    let mut probe = |t: f64| -> Result<f64> {
        let spec = spec_at(base, mode, t)?;
        let actions = match source {
            ActionSource::ClosedForm => closed_form_actions(&spec)?,
            ActionSource::Quadrature => quadrature_actions(&spec, opts)?,
        };
        let gap = gap_of(mode, &actions);
        probes.push(CrossingProbe {
            parameter: t,
            gap,
            actions,
        });
        Ok(gap)
    };
    let (mut lo, mut hi) = bracket;
    let mut g_lo = probe(lo)?;
    let mut g_hi = probe(hi)?;
    if !(g_lo.signum() != g_hi.signum()) || g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::NoSignChange {
            table: vec![(lo, g_lo), (hi, g_hi)],
        });
    }
    let mut brackets = vec![(lo, hi)];
    while hi - lo > CROSSING_WIDTH {
        let mid = 0.5 * (lo + hi);
        let g = probe(mid)?;
        if g == 0.0 {
            lo = mid;
            hi = mid;
            g_lo = 0.0;
            g_hi = 0.0;
        } else if g.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
            g_hi = g;
        }
        brackets.push((lo, hi));
    }
    let parameter = 0.5 * (lo + hi);
    let gap_at_root = if hi > lo { 0.5 * (g_lo + g_hi) } else { 0.0 };
    Ok(CrossingResult {
        mode,
        source,
        parameter,
        bracket: (lo, hi),
        brackets,
        probes,
        gap_at_root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_eps_star_bracketed() {
        let base = PotentialSpec::w1(0.5).unwrap();
        let r = find_crossing(
            &base,
            (0.1, 1.0),
            CrossingMode::EpsStar,
            ActionSource::ClosedForm,
            &StringOptions::default(),
        )
        .unwrap();
        assert!(r.bracket.1 - r.bracket.0 <= CROSSING_WIDTH);
        // Oracle: the printed gap is proportional to 2 + eps + k (3 atan eps - pi).
        let g = |e: f64| 2.0 + e + (1.0 + e * e) / e * (3.0 * e.atan() - std::f64::consts::PI);
        assert!(g(r.bracket.0).signum() != g(r.bracket.1).signum());
        for w in r.brackets.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn no_sign_change_reports_table() {
        let base = PotentialSpec::w1(0.5).unwrap();
        let err = find_crossing(
            &base,
            (1.5, 2.0),
            CrossingMode::EpsStar,
            ActionSource::ClosedForm,
            &StringOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::NoSignChange { table } => assert_eq!(table.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
