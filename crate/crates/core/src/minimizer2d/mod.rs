//! Equivariant minimizers of the Allen-Cahn energy on strips, with the
//! pointwise constraint near `a±` on the outer columns.

mod domain;
mod energy;
mod solver;
mod verify;

use serde::{Deserialize, Serialize};

pub use domain::{Checkpoint, Field2D, StripDomain, EQUIVARIANCE_INPUT_TOL};
pub use energy::{build_affine, comparison_map, energy, energy_and_gradient, profile_at};
pub use solver::{clip, fold, minimize, MinimizeOptions, SolveStats, Termination};
pub use verify::{
    bound_constants, interior_residual, row_action, slice_diagnostics, verify_bounds, BoundCheck,
    BoundConstants, DecayFit, SliceReport,
};

use crate::error::{Error, Result};
use crate::path::Path;
use crate::potential::{ConvexSetC0, MinimaInfo, PlanePoint, PotentialSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub domain: StripDomain,
    pub constraint_r: f64,
    pub c0_radius: f64,
    pub stats: SolveStats,
    pub energy: f64,
    pub max_norm: f64,
    pub equivariance_error: f64,
    /// Largest distance to `a±` over the constraint columns.
    pub constraint_max: f64,
    pub interior_residual: f64,
    pub affine_energy: f64,
    pub bounds: BoundCheck,
    pub slices: SliceReport,
    /// Constants of the iteration with `Q(u) = |u - a+|` and `B` its bound on
    /// `C0`; absent when the wells are degenerate or `r >= r0`.
    pub constants: Option<BoundConstants>,
}

impl MinimizeReport {
    /// Energy trace never increases beyond roundoff and no fold raised it.
    pub fn monotone(&self) -> bool {
        self.stats.trace_violations == 0 && self.stats.fold_violations == 0
    }

    pub fn nontrivial(&self) -> bool {
        self.max_norm >= 0.5
    }
}

fn constraint_max(field: &Field2D) -> f64 {
    let d = &field.domain;
    let mut worst = 0.0f64;
    for i in 0..d.nx {
        let center = match d.constraint_side(i) {
            1 => PlanePoint::A_PLUS,
            -1 => PlanePoint::A_MINUS,
            _ => continue,
        };
        for j in 0..d.ny {
            worst = worst.max(field.at(i, j).distance(center));
        }
    }
    worst
}

/// Minimizes from the comparison map built from `e±`, then runs every check
/// on the result.
#[allow(clippy::too_many_arguments)]
pub fn run(
    spec: &PotentialSpec,
    minima: &MinimaInfo,
    domain: StripDomain,
    constraint_r: f64,
    e_plus: &Path,
    e_minus: &Path,
    e_min: f64,
    c0: &ConvexSetC0,
    opts: &MinimizeOptions,
) -> Result<(Field2D, MinimizeReport)> {
    if minima.nondegenerate && constraint_r >= minima.r0 {
        return Err(Error::Ordering(format!(
            "constraint radius r = {constraint_r} must be below r0 = {}",
            minima.r0
        )));
    }
    let init = comparison_map(domain, constraint_r, e_plus, e_minus)?;
    let (field, stats) = minimize(spec, &init, c0, opts)?;
    let bounds = verify_bounds(&field, minima);
    let slices = slice_diagnostics(spec, &field, e_plus, e_minus, e_min)?;
    let constants = if minima.nondegenerate && constraint_r < minima.r0 {
        bound_constants(c0.radius + 1.0, constraint_r, minima.r0, minima.c).ok()
    } else {
        None
    };
    let report = MinimizeReport {
        domain,
        constraint_r,
        c0_radius: c0.radius,
        energy: energy(spec, &field),
        max_norm: field.values.iter().map(|u| u.norm()).fold(0.0, f64::max),
        equivariance_error: field.equivariance_error(),
        constraint_max: constraint_max(&field),
        interior_residual: interior_residual(spec, &field, c0),
        affine_energy: energy(spec, &build_affine(domain, constraint_r)),
        stats,
        bounds,
        slices,
        constants,
    };
    Ok((field, report))
}
