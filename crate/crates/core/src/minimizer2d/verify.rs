use serde::{Deserialize, Serialize};

use super::energy::{comparison_map, energy, profile_at};
use super::Field2D;
use crate::error::{Error, Result};
use crate::numerics::fit_line;
use crate::path::Path;
use crate::potential::{ConvexSetC0, MinimaInfo, PlanePoint, Potential, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub b: f64,
    pub r: f64,
    pub r0: f64,
    pub c: f64,
    pub delta: f64,
    pub delta_star: f64,
    pub r_zero: f64,
}

/// `delta = (B - r0)/(B - r)`, `delta* = (B - r)/(c r0)` and
/// `R0 = -ln(r / 2 r0) / (c delta)`.
pub fn bound_constants(b: f64, r: f64, r0: f64, c: f64) -> Result<BoundConstants> {
    if !(b > r0 && r0 > r && r > 0.0 && c > 0.0) {
        return Err(Error::Ordering(format!(
            "need B > r0 > r > 0 and c > 0, got B = {b}, r0 = {r0}, r = {r}, c = {c}"
        )));
    }
    let delta = (b - r0) / (b - r);
    Ok(BoundConstants {
        b,
        r,
        r0,
        c,
        delta,
        delta_star: (b - r) / (c * r0),
        r_zero: -(r / (2.0 * r0)).ln() / (c * delta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Prefactor `M` of `M exp(-rate x1)`.
    pub m: f64,
    pub rate: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub c: f64,
    pub tol: f64,
    pub cosh_checked: usize,
    pub cosh_violations: usize,
    /// Largest excess of `rho+` over the barrier (negative when it holds
    /// everywhere with room).
    pub cosh_max_violation: f64,
    /// Fit of the column maxima of `rho+` on `1 <= x1 <= eta R`.
    pub decay_fit: Option<DecayFit>,
    pub subsolution_checked: usize,
    pub subsolution_violations: usize,
    pub subsolution_max_violation: f64,
}

fn rho_plus(field: &Field2D, i: usize, j: usize) -> f64 {
    field.at(i, j).distance(PlanePoint::A_PLUS)
}

/// The cosh barrier on `C+`, the exponential decay fit, and the discrete
/// subsolution inequality `Lap rho+ >= c^2 rho+` inside `C+`.
pub fn verify_bounds(field: &Field2D, minima: &MinimaInfo) -> BoundCheck {
    let d = &field.domain;
    let c = minima.c;
    let r = field.constraint_r;
    let tol = 10.0 * d.h * d.h;
    let big_r = d.r_half;
    let denom = (c * (d.mu - d.eta) * big_r).cosh();
    let mut check = BoundCheck {
        c,
        tol,
        cosh_checked: 0,
        cosh_violations: 0,
        cosh_max_violation: f64::NEG_INFINITY,
        decay_fit: None,
        subsolution_checked: 0,
        subsolution_violations: 0,
        subsolution_max_violation: f64::NEG_INFINITY,
    };
    for i in 0..d.nx {
        if d.constraint_side(i) != 1 {
            continue;
        }
        let barrier = r * (c * (d.half_width() - d.x1(i))).cosh() / denom;
        for j in 0..d.ny {
            let excess = rho_plus(field, i, j) - barrier;
            check.cosh_checked += 1;
            check.cosh_max_violation = check.cosh_max_violation.max(excess);
            if excess > tol {
                check.cosh_violations += 1;
            }
            let interior = i > 0 && i + 1 < d.nx && j > 0 && j + 1 < d.ny;
            if interior && d.constraint_side(i - 1) == 1 {
                let rho = rho_plus(field, i, j);
                let lap = (rho_plus(field, i + 1, j)
                    + rho_plus(field, i - 1, j)
                    + rho_plus(field, i, j + 1)
                    + rho_plus(field, i, j - 1)
                    - 4.0 * rho)
                    / (d.h * d.h);
                let deficit = c * c * rho - lap;
                check.subsolution_checked += 1;
                check.subsolution_max_violation = check.subsolution_max_violation.max(deficit);
                if deficit > tol {
                    check.subsolution_violations += 1;
                }
            }
        }
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in d.ic()..d.nx {
        let x = d.x1(i);
        if x < 1.0 || x > d.eta * big_r + 1e-9 * d.h {
            continue;
        }
        let sup = (0..d.ny).map(|j| rho_plus(field, i, j)).fold(0.0, f64::max);
        if sup > 0.0 {
            xs.push(x);
            ys.push(sup.ln());
        }
    }
    check.decay_fit = fit_line(&xs, &ys).map(|(slope, icpt, r2)| DecayFit {
        m: icpt.exp(),
        rate: -slope,
        r2,
        points: xs.len(),
    });
    check
}

/// `max |Lap_h u - W_u(u)|` over interior nodes where no clip is active,
/// divided by `max(1, max |W_u|)`.
pub fn interior_residual(spec: &PotentialSpec, field: &Field2D, c0: &ConvexSetC0) -> f64 {
    let d = &field.domain;
    let h2 = d.h * d.h;
    let gmax = field
        .values
        .iter()
        .map(|&u| spec.gradient(u).norm())
        .fold(1.0, f64::max);
    let mut worst = 0.0f64;
    for j in 1..d.ny - 1 {
        for i in 1..d.nx - 1 {
            let u = field.at(i, j);
            if u.norm() >= c0.radius * (1.0 - 1e-12) {
                continue;
            }
            let center = match d.constraint_side(i) {
                1 => Some(PlanePoint::A_PLUS),
                -1 => Some(PlanePoint::A_MINUS),
                _ => None,
            };
            if center.is_some_and(|a| u.distance(a) >= field.constraint_r * (1.0 - 1e-9)) {
                continue;
            }
            let lap =
                (field.at(i + 1, j) + field.at(i - 1, j) + field.at(i, j + 1) + field.at(i, j - 1)
                    - u * 4.0)
                    * (1.0 / h2);
            worst = worst.max((lap - spec.gradient(u)).norm());
        }
    }
    worst / gmax
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    /// `(x2, E(V_x2))` for every grid row.
    pub slice_actions: Vec<(f64, f64)>,
    pub e_min: f64,
    pub slice_tol: f64,
    pub slice_violations: usize,
    pub energy: f64,
    pub normalized_energy: f64,
    /// `int |du/dx2|^2` over the strip.
    pub x2_energy: f64,
    /// Sup-distance of the top row to `e+` and of the bottom row to `e-`.
    pub top_distance: f64,
    pub bottom_distance: f64,
    pub comparison_energy: f64,
    pub upper_bound_ok: bool,
    /// `J >= 2R (E_min - tol)`.
    pub lower_bound_ok: bool,
}

/// 1D action of grid row `j`, discretized like the strip energy.
pub fn row_action(spec: &PotentialSpec, field: &Field2D, j: usize) -> f64 {
    let d = &field.domain;
    let row = field.row(j);
    let mut e = 0.0;
    for i in 0..d.nx {
        let w = if i == 0 || i + 1 == d.nx { 0.5 } else { 1.0 };
        e += w * d.h * spec.value(row[i]);
        if i + 1 < d.nx {
            e += 0.5 * (row[i + 1] - row[i]).norm_sq() / d.h;
        }
    }
    e
}

/// Row actions, energy sandwich, `x2`-energy and distances of the boundary
/// rows to the minimal connections.
pub fn slice_diagnostics(
    spec: &PotentialSpec,
    field: &Field2D,
    e_plus: &Path,
    e_minus: &Path,
    e_min: f64,
) -> Result<SliceReport> {
    if e_plus.abscissae.is_none() || e_minus.abscissae.is_none() {
        return Err(Error::MissingConnections("e+ and e- need abscissae".into()));
    }
    let d = &field.domain;
    let slice_tol = 5.0 * d.h;
    let slice_actions: Vec<(f64, f64)> = (0..d.ny)
        .map(|j| (d.x2(j), row_action(spec, field, j)))
        .collect();
    let slice_violations = slice_actions
        .iter()
        .filter(|(_, e)| *e < e_min - slice_tol)
        .count();
    let energy_value = energy(spec, field);
    let mut x2_energy = 0.0;
    for j in 0..d.ny - 1 {
        for i in 0..d.nx {
            let w = if i == 0 || i + 1 == d.nx { 0.5 } else { 1.0 };
            x2_energy += w * (field.at(i, j + 1) - field.at(i, j)).norm_sq();
        }
    }
    let row_distance = |j: usize, path: &Path| -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..d.nx {
            worst = worst.max(field.at(i, j).distance(profile_at(path, d.x1(i))?));
        }
        Ok(worst)
    };
    let tilde = comparison_map(*d, field.constraint_r, e_plus, e_minus)?;
    let comparison_energy = energy(spec, &tilde);
    let two_r = 2.0 * d.r_half;
    Ok(SliceReport {
        slice_actions,
        e_min,
        slice_tol,
        slice_violations,
        energy: energy_value,
        normalized_energy: energy_value / two_r,
        x2_energy,
        top_distance: row_distance(d.ny - 1, e_plus)?,
        bottom_distance: row_distance(0, e_minus)?,
        comparison_energy,
        upper_bound_ok: energy_value <= comparison_energy,
        lower_bound_ok: energy_value >= two_r * (e_min - slice_tol),
    })
}
