use serde::{Deserialize, Serialize};

use super::energy::{energy, energy_and_gradient};
use super::Field2D;
use crate::error::{Error, Result};
use crate::potential::{fold_into_quadrant, ConvexSetC0, PlanePoint, PotentialSpec};

/// Folds the values on the quadrant `x1, x2 >= 0` into the closed first
/// quadrant of the target and extends the result equivariantly.
pub fn fold(field: &Field2D) -> Result<Field2D> {
    field.require_equivariant()?;
    let mut out = field.clone();
    let d = out.domain;
    for j in d.jc()..d.ny {
        for i in d.ic()..d.nx {
            let k = d.index(i, j);
            out.values[k] = fold_into_quadrant(out.values[k]);
        }
    }
    out.extend_from_quadrant();
    Ok(out)
}

/// Projection of one nodal value onto the admissible set at column `i`.
fn clip_value(field: &Field2D, c0: &ConvexSetC0, i: usize, u: PlanePoint) -> PlanePoint {
    let u = c0.project(u);
    let center = match field.domain.constraint_side(i) {
        1 => PlanePoint::A_PLUS,
        -1 => PlanePoint::A_MINUS,
        _ => return u,
    };
    let r = field.constraint_r;
    let d = u - center;
    let n = d.norm();
    if n > r {
        center + d * (r / n)
    } else {
        u
    }
}

/// Radial projection into the disk `C0`, then onto the `r`-balls about `a±`
/// on the constraint columns.
pub fn clip(field: &Field2D, c0: &ConvexSetC0) -> Field2D {
    let mut out = field.clone();
    let nx = field.domain.nx;
    for (k, v) in out.values.iter_mut().enumerate() {
        *v = clip_value(field, c0, k % nx, *v);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop when the energy decrease over `window` iterations, relative to
    /// the energy, falls below this.
    pub tol_rel: f64,
    pub window: usize,
    pub fold_every: usize,
    pub armijo: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            tol_rel: 1e-10,
            window: 100,
            fold_every: 10,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    /// No step length gave a decrease; the field is stationary to roundoff.
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Energy after the initial projection and after every accepted step
    /// and fold.
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub grad_norm_final: f64,
    /// Folds that raised the energy beyond roundoff; any such fold aborts
    /// the run, so a returned report always has zero.
    pub fold_violations: usize,
    /// Entries of the trace that exceed their predecessor.
    pub trace_violations: usize,
    pub termination: Termination,
}

fn roundoff(e: f64) -> f64 {
    1e-12 * e.abs().max(1.0)
}

/// Norm of the projected gradient step `P(u - g) - u`.
fn projected_grad_norm(field: &Field2D, c0: &ConvexSetC0, g: &[PlanePoint]) -> f64 {
    let nx = field.domain.nx;
    field
        .values
        .iter()
        .zip(g)
        .enumerate()
        .map(|(k, (&u, &gk))| (clip_value(field, c0, k % nx, u - gk) - u).norm_sq())
        .sum::<f64>()
        .sqrt()
}

/// Spectral projected gradient on the admissible class: Barzilai-Borwein
/// steps, Armijo backtracking on the projected trial point, and a fold every
/// `fold_every` iterations. The returned field is folded and clipped.
pub fn minimize(
    spec: &PotentialSpec,
    init: &Field2D,
    c0: &ConvexSetC0,
    opts: &MinimizeOptions,
) -> Result<(Field2D, SolveStats)> {
    init.require_equivariant()?;
    let mut u = fold(&clip(init, c0))?;
    let (mut e, mut g) = energy_and_gradient(spec, &u);
    let mut trace = vec![e];
    let mut alpha = 0.1;
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;
    let mut last_fold = 0;
    // Energy after every iteration, for the convergence window.
    let mut history = vec![e];

    for it in 1..=opts.max_iter {
        iterations = it;
        let mut step = alpha;
        let mut accepted = None;
        for _ in 0..60 {
            let nx = u.domain.nx;
            let mut trial = u.clone();
            for (k, v) in trial.values.iter_mut().enumerate() {
                *v = clip_value(&u, c0, k % nx, *v - g[k] * step);
            }
            // Roundoff in the gradient breaks the symmetry and the symmetric
            // subspace is unstable, so the trial point is rebuilt from its
            // quadrant before it is judged.
            trial.extend_from_quadrant();
            let dir: f64 = trial
                .values
                .iter()
                .zip(&u.values)
                .zip(&g)
                .map(|((t, x), gk)| (*t - *x).dot(*gk))
                .sum();
            if dir >= 0.0 {
                break;
            }
            let et = energy(spec, &trial);
            if et <= e + opts.armijo * dir {
                accepted = Some((trial, et));
                break;
            }
            step *= 0.5;
        }
        let Some((next, e_next)) = accepted else {
            termination = Termination::LineSearchStalled;
            break;
        };
        let (_, g_next) = energy_and_gradient(spec, &next);
        let (mut ss, mut sy) = (0.0, 0.0);
        for k in 0..next.values.len() {
            let s = next.values[k] - u.values[k];
            ss += s.norm_sq();
            sy += s.dot(g_next[k] - g[k]);
        }
        alpha = if sy > 0.0 {
            (ss / sy).clamp(1e-10, 1e10)
        } else {
            1.0
        };
        u = next;
        e = e_next;
        g = g_next;
        trace.push(e);

        if opts.fold_every > 0 && it - last_fold >= opts.fold_every {
            last_fold = it;
            let folded = fold(&u)?;
            let (ef, gf) = energy_and_gradient(spec, &folded);
            if ef > e + roundoff(e) {
                return Err(Error::EnergyIncrease {
                    stage: "fold",
                    increase: ef - e,
                });
            }
            u = folded;
            e = ef;
            g = gf;
            trace.push(e);
        }

        history.push(e);
        if history.len() > opts.window {
            let old = history[history.len() - 1 - opts.window];
            if (old - e) <= opts.tol_rel * e.abs().max(1e-300) {
                termination = Termination::Converged;
                break;
            }
        }
    }

    let folded = fold(&u)?;
    let ef = energy(spec, &folded);
    if ef > e + roundoff(e) {
        return Err(Error::EnergyIncrease {
            stage: "final fold",
            increase: ef - e,
        });
    }
    let out = clip(&folded, c0);
    let (e_out, g_out) = energy_and_gradient(spec, &out);
    trace.push(e_out);
    let trace_violations = trace
        .windows(2)
        .filter(|w| w[1] > w[0] + roundoff(w[0]))
        .count();
    Ok((
        out.clone(),
        SolveStats {
            energy_trace: trace,
            iterations,
            grad_norm_final: projected_grad_norm(&out, c0, &g_out),
            fold_violations: 0,
            trace_violations,
            termination,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minimizer2d::StripDomain;

    #[test]
    fn fold_maps_sector_values_and_keeps_quadrant_values() {
        let d = StripDomain::new(1.0, 2.0, 0.75, 0.5).unwrap();
        let mut f = Field2D::from_fn(d, 0.2, |x1, x2| {
            PlanePoint::new(0.1 + x1.abs(), 0.2 + x2.abs())
        });
        f.extend_from_quadrant();
        let same = fold(&f).unwrap();
        assert_eq!(same, f);
        let k = d.index(d.ic() + 1, d.jc() + 1);
        f.values[k] = PlanePoint::new(-0.3, 0.5);
        f.extend_from_quadrant();
        let g = fold(&f).unwrap();
        assert_eq!(g.values[k], PlanePoint::new(0.3, 0.5));
        assert_eq!(g.equivariance_error(), 0.0);
    }

    #[test]
    fn fold_rejects_non_equivariant_input() {
        let d = StripDomain::new(1.0, 2.0, 0.75, 0.5).unwrap();
        let f = Field2D::from_fn(d, 0.2, |_, _| PlanePoint::A_PLUS);
        assert!(matches!(fold(&f), Err(Error::NotEquivariant { .. })));
    }

    #[test]
    fn clip_examples() {
        let d = StripDomain::new(1.0, 2.0, 0.75, 0.5).unwrap();
        let c0 = ConvexSetC0::disk(2.0);
        let mut f = Field2D::from_fn(d, 0.2, |_, _| PlanePoint::ORIGIN);
        let free = d.index(d.ic(), 0);
        let last = d.index(d.nx - 1, 0);
        let second = d.index(d.nx - 2, 0);
        f.values[free] = PlanePoint::new(5.0, 0.0);
        f.values[last] = PlanePoint::A_PLUS + PlanePoint::new(0.18, 0.0);
        f.values[second] = PlanePoint::A_PLUS + PlanePoint::new(0.4, 0.0);
        let c = clip(&f, &c0);
        assert_eq!(c.values[free], PlanePoint::new(2.0, 0.0));
        assert_eq!(c.values[last], f.values[last]);
        assert!((c.values[second] - PlanePoint::new(1.2, 0.0)).norm() < 1e-15);
    }
}
