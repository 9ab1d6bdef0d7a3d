use serde::{Deserialize, Serialize};

use super::min_pole_distance;
use crate::contour::{chain_segments, marching_squares, ScalarGrid};
use crate::error::{Error, Result};
use crate::path::{distance_to_polyline, hausdorff, Path};
use crate::potential::{Family, PlanePoint, PotentialSpec};

/// Which implicit trajectory equation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImplicitForm {
    /// Coefficients exactly as printed.
    Printed,
    /// Coefficients from the partial-fraction expansion of the holomorphic
    /// factor (identical to the printed form for `W1`).
    Derived,
}

/// `ln(((eps - u2)^2 + u1^2) / ((eps + u2)^2 + u1^2))`
fn log_ratio(eps: f64, u: PlanePoint) -> f64 {
    let a = (eps - u.u2).powi(2) + u.u1 * u.u1;
    let b = (eps + u.u2).powi(2) + u.u1 * u.u1;
    (a / b).ln()
}

/// Left-hand side of the implicit trajectory equation at `u`.
pub fn implicit_function(spec: &PotentialSpec, form: ImplicitForm, u: PlanePoint) -> f64 {
    match spec.family {
        Family::W1 { eps } => u.u2 + (1.0 + eps * eps) / (4.0 * eps) * log_ratio(eps, u),
        Family::W2 { eps1, eps2 } => {
            let s1 = (eps1 * eps1 + 1.0).powi(2);
            let (c1, c2) = match form {
                ImplicitForm::Printed => {
                    let d = eps2 - eps1 * eps1;
                    (s1 / (4.0 * eps1 * d), s1 / (4.0 * eps2 * d))
                }
                ImplicitForm::Derived => {
                    let d = eps2 * eps2 - eps1 * eps1;
                    let s2 = (eps2 * eps2 + 1.0).powi(2);
                    (s1 / (4.0 * eps1 * d), s2 / (4.0 * eps2 * d))
                }
            };
            u.u2 - c1 * log_ratio(eps1, u) + c2 * log_ratio(eps2, u)
        }
    }
}

/// Max of `|G(u)|` over the nodes of the path.
pub fn implicit_residual(spec: &PotentialSpec, path: &Path, form: ImplicitForm) -> f64 {
    path.nodes
        .iter()
        .map(|&u| implicit_function(spec, form, u).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitReport {
    pub form: ImplicitForm,
    pub residual: f64,
    /// Max distance from the path nodes inside the extraction box to the
    /// off-axis zero set.
    pub zero_set_distance: f64,
    pub nodes_checked: usize,
    /// Off-axis zero set as polylines.
    pub zero_set: Vec<Vec<PlanePoint>>,
}

pub const ZERO_SET_BOX: f64 = 1.5;
const ZERO_SET_GRID: usize = 601;

fn refine_onto_zero(spec: &PotentialSpec, form: ImplicitForm, mut u: PlanePoint) -> PlanePoint {
    let h = 1e-7;
    for _ in 0..8 {
        let g = implicit_function(spec, form, u);
        if g.abs() < 1e-14 {
            break;
        }
        let gx = (implicit_function(spec, form, u + PlanePoint::new(h, 0.0))
            - implicit_function(spec, form, u - PlanePoint::new(h, 0.0)))
            / (2.0 * h);
        let gy = (implicit_function(spec, form, u + PlanePoint::new(0.0, h))
            - implicit_function(spec, form, u - PlanePoint::new(0.0, h)))
            / (2.0 * h);
        let n2 = gx * gx + gy * gy;
        if !(n2 > 0.0) {
            break;
        }
        let step = PlanePoint::new(gx, gy) * (g / n2);
        if step.norm() > 1e-2 {
            break;
        }
        u -= step;
    }
    u
}

/// Zero set of the implicit function on `[-1.5, 1.5]^2` without the axis,
/// refined onto the curve by Newton steps along the gradient.
pub fn implicit_zero_set(spec: &PotentialSpec, form: ImplicitForm) -> Vec<Vec<PlanePoint>> {
    let b = ZERO_SET_BOX;
    let grid = ScalarGrid::sample(
        |u| implicit_function(spec, form, u),
        (-b, b),
        (-b, b),
        ZERO_SET_GRID,
        ZERO_SET_GRID,
    );
    let h = 2.0 * b / (ZERO_SET_GRID - 1) as f64;
    // Sign flips through a pole show up as large corner values.
    let segs: Vec<_> = marching_squares(&grid, 0.0, |v| v.iter().all(|x| x.abs() <= 0.5))
        .into_iter()
        .filter(|(a, c)| a.u2.abs().max(c.u2.abs()) > h)
        .collect();
    chain_segments(&segs)
        .into_iter()
        .map(|line| {
            line.into_iter()
                .map(|u| refine_onto_zero(spec, form, u))
                .collect()
        })
        .collect()
}

pub fn implicit_report(spec: &PotentialSpec, path: &Path, form: ImplicitForm) -> ImplicitReport {
    let zero_set = implicit_zero_set(spec, form);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for &u in &path.nodes {
        if u.u1.abs() > ZERO_SET_BOX || u.u2.abs() > ZERO_SET_BOX {
            continue;
        }
        checked += 1;
        let d = zero_set
            .iter()
            .map(|line| distance_to_polyline(u, line))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    ImplicitReport {
        form,
        residual: implicit_residual(spec, path, form),
        zero_set_distance: if checked == 0 { 0.0 } else { worst },
        nodes_checked: checked,
        zero_set,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    /// The region bounded by the two paths is convex.
    pub convex: bool,
    /// Largest normalized turn against the boundary orientation (0 when
    /// convex).
    pub max_concavity: f64,
    /// `max | |u| - 1 |` over both paths (`W1` only).
    pub circle_deviation: Option<f64>,
    /// `max |u1^2 - u2^2 / 3 - 1|` over both paths (`W1` only).
    pub envelope_deviation: Option<f64>,
    pub min_pole_distance: f64,
    /// Hausdorff distance between the upper path and the mirrored lower one.
    pub mirror_hausdorff: f64,
}

pub const CONVEXITY_TOL: f64 = 1e-8;

fn segments_cross(a: PlanePoint, b: PlanePoint, c: PlanePoint, d: PlanePoint) -> bool {
    let o = |p: PlanePoint, q: PlanePoint, r: PlanePoint| (q - p).cross(r - p);
    let (d1, d2) = (o(a, b, c), o(a, b, d));
    let (d3, d4) = (o(c, d, a), o(c, d, b));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn check_crossing(upper: &Path, lower: &Path) -> Result<()> {
    let (n, m) = (upper.len(), lower.len());
    for i in 1..n - 2 {
        let (a, b) = (upper.nodes[i], upper.nodes[i + 1]);
        let (lo1, hi1) = (a.u1.min(b.u1), a.u1.max(b.u1));
        let (lo2, hi2) = (a.u2.min(b.u2), a.u2.max(b.u2));
        for j in 1..m - 2 {
            let (c, d) = (lower.nodes[j], lower.nodes[j + 1]);
            if c.u1.max(d.u1) < lo1
                || c.u1.min(d.u1) > hi1
                || c.u2.max(d.u2) < lo2
                || c.u2.min(d.u2) > hi2
            {
                continue;
            }
            if segments_cross(a, b, c, d) {
                return Err(Error::CrossingPaths { index: i });
            }
        }
    }
    Ok(())
}

/// Convexity of the region bounded by two connections, distance to the
/// small- and large-`eps` limit curves, pole clearance and mirror symmetry.
pub fn geometry_report(upper: &Path, lower: &Path, spec: &PotentialSpec) -> Result<GeometryReport> {
    if upper.len() < 3 || lower.len() < 3 {
        return Err(Error::InvalidPath(
            "geometry needs at least 3 nodes per path".into(),
        ));
    }
    check_crossing(upper, lower)?;
    let mut poly: Vec<PlanePoint> = upper.nodes.clone();
    poly.extend(lower.nodes.iter().rev().skip(1).take(lower.len() - 2));
    let mut cleaned: Vec<PlanePoint> = Vec::with_capacity(poly.len());
    for p in poly {
        if cleaned
            .last()
            .is_none_or(|q: &PlanePoint| q.distance(p) > 1e-14)
        {
            cleaned.push(p);
        }
    }
    let k = cleaned.len();
    let area: f64 = (0..k)
        .map(|i| cleaned[i].cross(cleaned[(i + 1) % k]))
        .sum::<f64>()
        * 0.5;
    let orient = area.signum();
    let mut max_concavity = 0.0f64;
    for i in 0..k {
        let e0 = cleaned[i] - cleaned[(i + k - 1) % k];
        let e1 = cleaned[(i + 1) % k] - cleaned[i];
        let turn = e0.cross(e1) / (e0.norm() * e1.norm());
        max_concavity = max_concavity.max(-orient * turn);
    }
    let all = || upper.nodes.iter().chain(lower.nodes.iter());
    let (circle_deviation, envelope_deviation) = match spec.family {
        Family::W1 { .. } => (
            Some(all().map(|u| (u.norm() - 1.0).abs()).fold(0.0, f64::max)),
            Some(
                all()
                    .map(|u| (u.u1 * u.u1 - u.u2 * u.u2 / 3.0 - 1.0).abs())
                    .fold(0.0, f64::max),
            ),
        ),
        Family::W2 { .. } => (None, None),
    };
    let min_pole = min_pole_distance(spec, &upper.nodes).min(min_pole_distance(spec, &lower.nodes));
    Ok(GeometryReport {
        convex: max_concavity <= CONVEXITY_TOL,
        max_concavity,
        circle_deviation,
        envelope_deviation,
        min_pole_distance: min_pole,
        mirror_hausdorff: hausdorff(&upper.nodes, &lower.mirror().nodes),
    })
}
