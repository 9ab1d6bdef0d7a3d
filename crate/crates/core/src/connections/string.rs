use serde::{Deserialize, Serialize};

use super::ConnectionResult;
use crate::error::{Error, Result};
use crate::path::{Classification, Path, MIN_CONNECTION_NODES};
use crate::potential::{PlanePoint, Potential, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StringOptions {
    pub n_nodes: usize,
    /// Iteration cap per resolution level.
    pub max_iter: usize,
    pub redistribute_every: usize,
    /// Convergence window in iterations.
    pub window: usize,
    /// Relative action decrease over one window below which the level stops.
    pub tol_rel: f64,
    pub armijo: f64,
    /// Largest node displacement allowed in one step.
    pub max_move: f64,
}

impl Default for StringOptions {
    fn default() -> Self {
        Self {
            n_nodes: 2001,
            max_iter: 20_000,
            redistribute_every: 25,
            window: 50,
            tol_rel: 1e-9,
            armijo: 1e-4,
            max_move: 0.05,
        }
    }
}

/// Curve `(cos t, h sin t)` from `a-` to `a+` through `(0, ±h)`.
pub fn ellipse_init(height: f64, n: usize, upper: bool) -> Path {
    let sign = if upper { 1.0 } else { -1.0 };
    let nodes = (0..n)
        .map(|k| {
            let t = std::f64::consts::PI * (1.0 - k as f64 / (n - 1) as f64);
            PlanePoint::new(t.cos(), sign * height * t.sin())
        })
        .collect();
    let class = if upper {
        Classification::Upper
    } else {
        Classification::Lower
    };
    let mut path = Path::new(nodes, class).expect("ellipse has finite nodes");
    let last = path.nodes.len() - 1;
    path.nodes[0] = PlanePoint::A_MINUS;
    path.nodes[last] = PlanePoint::A_PLUS;
    path
}

fn action_of(spec: &PotentialSpec, x: &[PlanePoint]) -> f64 {
    x.windows(2)
        .map(|w| (2.0 * spec.value(w[0].lerp(w[1], 0.5))).sqrt() * w[0].distance(w[1]))
        .sum()
}

/// Action and its gradient with respect to every node (end entries zero).
fn action_and_gradient(spec: &PotentialSpec, x: &[PlanePoint], grad: &mut [PlanePoint]) -> f64 {
    grad.iter_mut().for_each(|g| *g = PlanePoint::ORIGIN);
    let n = x.len();
    let mut total = 0.0;
    for k in 0..n - 1 {
        let (a, b) = (x[k], x[k + 1]);
        let d = b - a;
        let len = d.norm();
        let (w, gw) = spec.eval(a.lerp(b, 0.5));
        let s = (2.0 * w).sqrt();
        total += s * len;
        if len == 0.0 {
            continue;
        }
        let grad_s = if s > 0.0 {
            gw * (1.0 / s)
        } else {
            PlanePoint::ORIGIN
        };
        let along = d * (s / len);
        let half = grad_s * (0.5 * len);
        grad[k] += half - along;
        grad[k + 1] += half + along;
    }
    grad[0] = PlanePoint::ORIGIN;
    grad[n - 1] = PlanePoint::ORIGIN;
    total
}

/// Removes the component along the discrete tangent at every interior node.
fn project_normal(x: &[PlanePoint], grad: &mut [PlanePoint]) {
    let n = x.len();
    for i in 1..n - 1 {
        let t = x[i + 1] - x[i - 1];
        let tn = t.norm();
        if tn > 0.0 {
            let t = t * (1.0 / tn);
            grad[i] -= t * grad[i].dot(t);
        }
    }
}

struct LevelOutcome {
    nodes: Vec<PlanePoint>,
    /// True when the first convergence window made no progress.
    stalled_at_start: bool,
}

fn relax_level(spec: &PotentialSpec, start: Vec<PlanePoint>, opts: &StringOptions) -> LevelOutcome {
    let n = start.len();
    let mut x = start;
    let mut g = vec![PlanePoint::ORIGIN; n];
    let mut trial = x.clone();
    let mut history: Vec<f64> = Vec::with_capacity(opts.max_iter + 1);
    let mut a = action_and_gradient(spec, &x, &mut g);
    project_normal(&x, &mut g);
    history.push(a);
    let mut prev: Option<(Vec<PlanePoint>, Vec<PlanePoint>)> = None;
    let mut alpha = 0.0;
    let mut stalled_at_start = false;

    for iter in 1..=opts.max_iter {
        let gmax = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let g2: f64 = g.iter().map(|v| v.norm_sq()).sum();
        if gmax == 0.0 || g2 == 0.0 {
            break;
        }
        let seg = action_length(&x) / (n - 1) as f64;
        if let Some((px, pg)) = prev.take() {
            let (mut ss, mut sy) = (0.0, 0.0);
            for i in 0..n {
                let s = x[i] - px[i];
                let y = g[i] - pg[i];
                ss += s.norm_sq();
                sy += s.dot(y);
            }
            alpha = if sy > 0.0 { ss / sy } else { 2.0 * alpha };
        } else {
            alpha = 0.1 * seg / gmax;
        }
        alpha = alpha.min(opts.max_move / gmax);

        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = x[i] - g[i] * alpha;
            }
            let at = action_of(spec, &trial);
            if at <= a - opts.armijo * alpha * g2 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        prev = Some((x.clone(), g.clone()));
        std::mem::swap(&mut x, &mut trial);

        if iter % opts.redistribute_every == 0 {
            let p = Path {
                nodes: x,
                abscissae: None,
                classification: Classification::Upper,
            };
            x = p.resample_uniform(n).nodes;
            prev = None;
        }
        a = action_and_gradient(spec, &x, &mut g);
        project_normal(&x, &mut g);
        history.push(a);

        if iter >= opts.window {
            let old = history[iter - opts.window];
            if (old - a) / a.abs().max(1e-300) < opts.tol_rel {
                stalled_at_start = iter == opts.window;
                break;
            }
        }
    }
    LevelOutcome {
        nodes: x,
        stalled_at_start,
    }
}

fn action_length(x: &[PlanePoint]) -> f64 {
    x.windows(2).map(|w| w[0].distance(w[1])).sum()
}

fn level_sizes(n: usize) -> Vec<usize> {
    let mut sizes = vec![n];
    loop {
        let next = (sizes.last().unwrap() - 1) / 2 + 1;
        if next < MIN_CONNECTION_NODES {
            break;
        }
        sizes.push(next);
    }
    sizes.reverse();
    sizes
}

/// String-method descent of the geometric action with pinned endpoints,
/// solved coarse to fine. An input that already has `n_nodes` nodes and makes
/// no progress over the first convergence window is returned unchanged.
pub fn minimize_path(
    spec: &PotentialSpec,
    init: &Path,
    opts: &StringOptions,
) -> Result<ConnectionResult> {
    let n = opts.n_nodes.max(MIN_CONNECTION_NODES);
    let first = init.nodes[0];
    let last = *init.nodes.last().unwrap();
    if first.distance(PlanePoint::A_MINUS) > 1e-8 || last.distance(PlanePoint::A_PLUS) > 1e-8 {
        return Err(Error::InvalidPath(
            "initial path must run from a- to a+".into(),
        ));
    }
    let radius = spec.mollify_radius();
    let d0 = super::min_pole_distance(spec, &init.nodes);
    if d0 <= radius {
        return Err(Error::PoleApproach {
            distance: d0,
            radius,
        });
    }
    let off_axis = init.nodes.iter().any(|u| u.u2.abs() > 1e-6);

    let mut nodes = None;
    if init.len() == n {
        let probe = relax_level(spec, init.nodes.clone(), opts);
        if probe.stalled_at_start {
            nodes = Some(init.nodes.clone());
        }
    }
    let mut nodes = match nodes {
        Some(x) => x,
        None => {
            let mut x = init.nodes.clone();
            for size in level_sizes(n) {
                let p = Path {
                    nodes: x,
                    abscissae: None,
                    classification: init.classification,
                };
                x = relax_level(spec, p.resample_uniform(size).nodes, opts).nodes;
            }
            x
        }
    };
    let m = nodes.len();
    nodes[0] = PlanePoint::A_MINUS;
    nodes[m - 1] = PlanePoint::A_PLUS;

    let d = super::min_pole_distance(spec, &nodes);
    if d <= radius {
        return Err(Error::PoleApproach {
            distance: d,
            radius,
        });
    }
    let max_u2 = nodes.iter().map(|u| u.u2.abs()).fold(0.0, f64::max);
    let collapsed = off_axis && max_u2 < 1e-6;
    if collapsed {
        nodes.iter_mut().for_each(|u| u.u2 = 0.0);
    }
    let curve = Path::from_nodes(nodes)?;
    let mut result = ConnectionResult::from_curve(spec, curve)?;
    result.collapsed = collapsed;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = PotentialSpec::w1(0.2887).unwrap();
        let x = ellipse_init(1.2, 21, true).nodes;
        let mut g = vec![PlanePoint::ORIGIN; 21];
        action_and_gradient(&spec, &x, &mut g);
        let h = 1e-6;
        for i in [3, 10, 17] {
            for dir in [PlanePoint::new(1.0, 0.0), PlanePoint::new(0.0, 1.0)] {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += dir * h;
                xm[i] -= dir * h;
                let fd = (action_of(&spec, &xp) - action_of(&spec, &xm)) / (2.0 * h);
                assert!((fd - g[i].dot(dir)).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn levels_coarse_to_fine() {
        assert_eq!(level_sizes(2001), vec![126, 251, 501, 1001, 2001]);
        assert_eq!(level_sizes(101), vec![101]);
    }
}
