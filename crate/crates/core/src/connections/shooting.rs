use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{scalar_connection, ConnectionResult};
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::path::{Classification, Path};
use crate::potential::{
    fd_hessian, sym_eigenvalues, PlanePoint, Potential, PotentialSpec, C0_MARGIN, C0_RADII,
    DEGENERACY_TOL, HESSIAN_STEP,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootOptions {
    /// RK4 step in `x1`, shortened wherever the speed exceeds 1.
    pub step: f64,
    /// Integration span in `x1`; defaults to 40 for nondegenerate wells and
    /// 400 for degenerate ones.
    pub x1_span: Option<f64>,
    /// Escape radius; defaults to the smallest candidate `C0` radius that
    /// contains the scan range with margin.
    pub escape_radius: Option<f64>,
    pub bisection_steps: usize,
    /// Node count of the polished connections (odd).
    pub n_nodes: usize,
    /// Largest closest-approach distance at a bisection root for it to count
    /// as a connection rather than a jump of the miss function.
    pub accept_distance: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            x1_span: None,
            escape_radius: None,
            bisection_steps: 40,
            n_nodes: 2001,
            accept_distance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub c: f64,
    /// Signed distance of `a+` from the trajectory at the closest approach,
    /// positive when `a+` lies to the left of the direction of motion.
    pub miss: f64,
    pub closest_distance: f64,
    /// The trajectory entered a mollification zone.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootInfo {
    pub c: f64,
    pub bracket: (f64, f64),
    pub closest_distance: f64,
    pub accepted: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootReport {
    pub scan: Vec<ScanPoint>,
    pub roots: Vec<RootInfo>,
    /// Scalar connection first, then each accepted upper connection followed
    /// by its mirror image.
    pub connections: Vec<ConnectionResult>,
    pub x1_span: f64,
    pub escape_radius: f64,
}

impl ShootReport {
    pub fn count(&self) -> usize {
        self.connections.len()
    }

    pub fn accepted_heights(&self) -> Vec<f64> {
        self.roots
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.c)
            .collect()
    }
}

struct Flight {
    miss: f64,
    closest_distance: f64,
    flagged: bool,
    /// The path up to the closest approach stays in the closed first quadrant.
    positive: bool,
    /// Points up to the closest approach, when recorded.
    trace: Vec<PlanePoint>,
}

/// RK4 in `x1` with step `step / max(1, |theta'|)`, so that no step moves
/// farther than `step` in the plane.
fn fly(
    spec: &PotentialSpec,
    c: f64,
    step: f64,
    span: f64,
    escape: f64,
    near: f64,
    record: bool,
) -> Flight {
    let mut p = PlanePoint::new(0.0, c);
    let mut v = PlanePoint::new((2.0 * spec.value(p)).sqrt(), 0.0);
    let side = |p: PlanePoint, v: PlanePoint| {
        let n = v.norm();
        if n > 0.0 {
            (p - PlanePoint::A_PLUS).cross(v) / n
        } else {
            0.0
        }
    };
    // (distance, miss, index, positive so far)
    let mut best = (p.distance(PlanePoint::A_PLUS), side(p, v), 0usize, true);
    let mut positive = true;
    let mut trace = Vec::new();
    if record {
        trace.push(p);
    }
    let mut t = 0.0;
    let mut k = 0usize;
    let done = |best: (f64, f64, usize, bool), flagged: bool, mut trace: Vec<PlanePoint>| {
        if record {
            trace.truncate(best.2 + 1);
        }
        Flight {
            miss: best.1,
            closest_distance: best.0,
            flagged,
            positive: best.3,
            trace,
        }
    };
    while t < span {
        let h = step / v.norm().max(1.0);
        let a1 = spec.gradient(p);
        let p2 = p + v * (0.5 * h);
        let v2 = v + a1 * (0.5 * h);
        let a2 = spec.gradient(p2);
        let p3 = p + v2 * (0.5 * h);
        let v3 = v + a2 * (0.5 * h);
        let a3 = spec.gradient(p3);
        let p4 = p + v3 * h;
        let v4 = v + a3 * h;
        let a4 = spec.gradient(p4);
        p += (v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0);
        v += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        t += h;
        k += 1;
        if record {
            trace.push(p);
        }
        // Within `near` of a+ the side of arrival is what the miss measures.
        positive &=
            (p.u1 >= 0.0 && p.u2 * c.signum() >= 0.0) || p.distance(PlanePoint::A_PLUS) <= near;
        if spec.in_mollification_zone(p) {
            // Capture by a pole after the closest approach leaves the miss
            // intact; capture on the way in does not.
            return done(best, k - best.2 <= 1, trace);
        }
        let d = p.distance(PlanePoint::A_PLUS);
        if d < best.0 {
            best = (d, side(p, v), k, positive);
        }
        // Outside the quadrant the trajectory no longer bears on the miss.
        if !positive || !p.is_finite() || p.norm() > escape {
            break;
        }
    }
    done(best, false, trace)
}

fn is_degenerate(spec: &PotentialSpec) -> bool {
    sym_eigenvalues(fd_hessian(spec, PlanePoint::A_PLUS, HESSIAN_STEP)).0 <= DEGENERACY_TOL
}

/// Shooting from the `u2`-axis: for each scanned height `c` the trajectory
/// `theta'' = W_u(theta)` starts at `(0, c)` with horizontal equipartition
/// speed. Sign changes of the miss function are bisected and every root whose
/// trajectory actually reaches `a+` becomes an upper connection.
pub fn shoot_connections(
    spec: &PotentialSpec,
    u2_range: (f64, f64),
    n_scan: usize,
    opts: &ShootOptions,
) -> Result<ShootReport> {
    let (lo, hi) = u2_range;
    if !(lo >= 0.0 && hi > lo) || n_scan < 2 {
        return Err(Error::InvalidPath(format!(
            "bad scan range [{lo}, {hi}] x {n_scan}"
        )));
    }
    let span = opts
        .x1_span
        .unwrap_or(if is_degenerate(spec) { 400.0 } else { 40.0 });
    let escape = opts.escape_radius.unwrap_or_else(|| {
        C0_RADII
            .iter()
            .copied()
            .find(|r| hi <= r - C0_MARGIN)
            .unwrap_or(hi + 1.0)
    });
    let step = opts.step;

    let cs: Vec<f64> = (0..n_scan)
        .map(|k| lo + (hi - lo) * k as f64 / (n_scan - 1) as f64)
        .collect();
    let scan: Vec<ScanPoint> = cs
        .par_iter()
        .map(|&c| {
            let f = fly(spec, c, step, span, escape, opts.accept_distance, false);
            ScanPoint {
                c,
                miss: f.miss,
                closest_distance: f.closest_distance,
                flagged: f.flagged,
            }
        })
        .collect();

    let mut brackets = Vec::new();
    for w in scan.windows(2) {
        let (a, b) = (w[0], w[1]);
        // The axis itself (c = 0) is the scalar member, not a bracket end.
        if a.c <= 0.0 || a.flagged || b.flagged {
            continue;
        }
        if a.miss.signum() != b.miss.signum() {
            brackets.push((a, b));
        }
    }

    let roots: Vec<(RootInfo, Option<Vec<PlanePoint>>)> = brackets
        .par_iter()
        .map(|&(a, b)| {
            let mut hit_zone = false;
            let res = bisect(
                |c| {
                    let f = fly(spec, c, step, span, escape, opts.accept_distance, false);
                    hit_zone |= f.flagged;
                    f.miss
                },
                a.c,
                b.c,
                a.miss,
                b.miss,
                0.0,
                opts.bisection_steps,
            );
            let Some(res) = res else {
                return (
                    RootInfo {
                        c: 0.5 * (a.c + b.c),
                        bracket: (a.c, b.c),
                        closest_distance: f64::NAN,
                        accepted: false,
                        reason: Some("no sign change".into()),
                    },
                    None,
                );
            };
            let f = fly(
                spec,
                res.root,
                step,
                span,
                escape,
                opts.accept_distance,
                true,
            );
            let mut info = RootInfo {
                c: res.root,
                bracket: (res.lo, res.hi),
                closest_distance: f.closest_distance,
                accepted: false,
                reason: None,
            };
            if !f.positive {
                info.reason =
                    Some("path leaves the closed first quadrant before reaching a+".into());
                (info, None)
            } else if hit_zone || f.flagged {
                info.reason = Some("bisection probe entered a mollification zone".into());
                (info, None)
            } else if f.closest_distance > opts.accept_distance {
                info.reason = Some(format!(
                    "closest approach {:.3e} does not shrink: jump of the miss function",
                    f.closest_distance
                ));
                (info, None)
            } else {
                info.accepted = true;
                (info, Some(f.trace))
            }
        })
        .collect();

    let mut connections = vec![scalar_connection(spec, opts.n_nodes)?];
    let mut infos = Vec::with_capacity(roots.len());
    for (info, trace) in roots {
        if let Some(trace) = trace {
            let upper = polish(spec, &trace, opts.n_nodes, info.c)?;
            let lower = upper.mirror();
            connections.push(upper);
            connections.push(lower);
        }
        infos.push(info);
    }
    Ok(ShootReport {
        scan,
        roots: infos,
        connections,
        x1_span: span,
        escape_radius: escape,
    })
}

/// Full connection from a half trajectory `(0, c) -> a+` by `u1 -> -u1`
/// reflection, resampled uniformly in arclength.
fn polish(spec: &PotentialSpec, half: &[PlanePoint], n: usize, c: f64) -> Result<ConnectionResult> {
    let mut nodes: Vec<PlanePoint> = half
        .iter()
        .rev()
        .map(|u| PlanePoint::new(-u.u1, u.u2))
        .collect();
    nodes.pop();
    nodes.extend_from_slice(half);
    let m = nodes.len();
    nodes[0] = PlanePoint::A_MINUS;
    nodes[m - 1] = PlanePoint::A_PLUS;
    let curve = Path::new(nodes, Classification::Upper)?.resample_uniform(n);
    let mut result = ConnectionResult::from_curve(spec, curve)?;
    result.shooting_height = Some(c);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_trajectory_stays_on_axis() {
        let spec = PotentialSpec::w1(0.2887).unwrap();
        let f = fly(&spec, 0.0, 1e-3, 40.0, 3.0, 1e-2, true);
        assert!(f.trace.iter().all(|u| u.u2.abs() <= 1e-12));
        // The unstable direction at the well amplifies the RK4 error.
        assert!(
            f.closest_distance < ShootOptions::default().accept_distance,
            "{}",
            f.closest_distance
        );
        assert_eq!(f.miss, 0.0);
    }
}
