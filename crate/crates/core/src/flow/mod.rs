//! Gradient flow `u_t = eps^2 Lap u - W_u(u)` of two-phase interfaces and the
//! speed of the junction between them.

mod wave;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use wave::{ode_wave_speed, WaveOptions, WaveSpeed};

use crate::error::{Error, Result};
use crate::minimizer2d::{profile_at, Field2D, StripDomain};
use crate::numerics::fit_line;
use crate::path::Path;
use crate::potential::{
    fd_hessian, sym_eigenvalues, PlanePoint, Potential, PotentialSpec, HESSIAN_STEP,
};

/// Largest reflection defect treated as interpolation roundoff.
const SNAP_TOL: f64 = 1e-8;

/// Flow domain `|x1| <= half_width`, `|x2| <= half_height`. The constraint
/// columns of [`StripDomain`] play no role in the flow.
pub fn flow_domain(half_width: f64, half_height: f64, h: f64) -> Result<StripDomain> {
    let mu = half_width / half_height;
    StripDomain::new(half_height, mu, 0.5 * (0.5 + mu), h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    pub eps_flow: f64,
    /// Fraction of the explicit stability limit used as time step.
    pub dt_safety: f64,
    /// Steps between junction samples, energy samples and step-size updates.
    pub record_every: usize,
    /// Values beyond twice this radius abort the run.
    pub c0_radius: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            eps_flow: 1.0,
            dt_safety: 0.2,
            record_every: 10,
            c0_radius: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub field: Field2D,
    pub time: f64,
    pub dt: f64,
    pub steps: usize,
    pub opts: FlowOptions,
    /// `(t, x2)` of the junction, every `record_every` steps.
    pub junction_history: Vec<(f64, f64)>,
    /// `(t, J)` at the same instants, with the initial energy first.
    pub energy_history: Vec<(f64, f64)>,
    /// Largest energy increase over one step.
    pub max_energy_increase: f64,
    /// Connections interpolated to the `x1` grid.
    pub upper_profile: Vec<PlanePoint>,
    pub lower_profile: Vec<PlanePoint>,
    /// Split height the junction search starts from.
    pub x2_split: f64,
}

fn endpoints_ok(p: &Path) -> bool {
    let (Some(a), Some(b)) = (p.nodes.first(), p.nodes.last()) else {
        return false;
    };
    a.distance(PlanePoint::A_MINUS) < 1e-6 && b.distance(PlanePoint::A_PLUS) < 1e-6
}

/// Rows above `x2_split` carry the upper connection, rows below the lower
/// one, blended linearly over one grid spacing on each side of the split.
pub fn init_two_phase(
    domain: StripDomain,
    upper: &Path,
    lower: &Path,
    x2_split: f64,
    opts: FlowOptions,
) -> Result<FlowState> {
    for (name, p) in [("upper", upper), ("lower", lower)] {
        if p.abscissae.is_none() || !endpoints_ok(p) {
            return Err(Error::Mismatch(format!(
                "{name} profile must be a parametrized connection from a- to a+"
            )));
        }
    }
    let inside = domain.x2(0) + domain.h..=domain.x2(domain.ny - 1) - domain.h;
    if !inside.contains(&x2_split) {
        return Err(Error::Mismatch(format!(
            "split {x2_split} is outside the domain rows"
        )));
    }
    let up: Vec<PlanePoint> = (0..domain.nx)
        .map(|i| profile_at(upper, domain.x1(i)))
        .collect::<Result<_>>()?;
    let lo: Vec<PlanePoint> = (0..domain.nx)
        .map(|i| profile_at(lower, domain.x1(i)))
        .collect::<Result<_>>()?;
    let (up, lo) = (snap_reflection(up), snap_reflection(lo));
    let mut values = Vec::with_capacity(domain.len());
    for j in 0..domain.ny {
        let t = ((domain.x2(j) - x2_split) / domain.h).clamp(-1.0, 1.0);
        for i in 0..domain.nx {
            values.push(up[i] * (0.5 * (1.0 + t)) + lo[i] * (0.5 * (1.0 - t)));
        }
    }
    let field = Field2D {
        domain,
        values,
        constraint_r: 0.0,
    };
    let mut state = FlowState {
        field,
        time: 0.0,
        dt: 0.0,
        steps: 0,
        opts,
        junction_history: Vec::new(),
        energy_history: Vec::new(),
        max_energy_increase: 0.0,
        upper_profile: up,
        lower_profile: lo,
        x2_split,
    };
    if let Some(x) = junction(&state) {
        state.junction_history.push((0.0, x));
    }
    Ok(state)
}

/// Adds `amplitude * sech(x1) * sech(x2 - x2_split)` to `u1`. The bump is even
/// in `x1` while equivariant fields have `u1` odd, so it breaks the
/// reflection symmetry at the junction. When the two phases cross the `u2`
/// axis on opposite sides of a pole, a symmetric centre column would have to
/// pass through the pole and the junction stays pinned; the tilt lets it go
/// around.
pub fn tilt_junction(state: &mut FlowState, amplitude: f64) {
    let d = state.field.domain;
    for j in 0..d.ny {
        let sy = 1.0 / (d.x2(j) - state.x2_split).cosh();
        for i in 0..d.nx {
            state.field.values[d.index(i, j)].u1 += amplitude * sy / d.x1(i).cosh();
        }
    }
}

/// A profile that is reflection symmetric up to interpolation roundoff is
/// made exactly symmetric, `u(-x1) = (-u1, u2)(x1)`, so the explicit scheme
/// keeps the symmetry exactly. Other profiles are returned unchanged.
fn snap_reflection(mut p: Vec<PlanePoint>) -> Vec<PlanePoint> {
    let n = p.len();
    let defect = (0..n)
        .map(|i| p[n - 1 - i].distance(PlanePoint::new(-p[i].u1, p[i].u2)))
        .fold(0.0, f64::max);
    if defect > SNAP_TOL {
        return p;
    }
    for i in 0..n / 2 {
        let (a, b) = (p[i], p[n - 1 - i]);
        let m = PlanePoint::new(0.5 * (a.u1 - b.u1), 0.5 * (a.u2 + b.u2));
        p[i] = m;
        p[n - 1 - i] = PlanePoint::new(-m.u1, m.u2);
    }
    if n % 2 == 1 {
        p[n / 2].u1 = 0.0;
    }
    p
}

fn end_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Discrete flow energy: `eps^2/2` times the squared edge differences (half
/// weight on boundary edges) plus the trapezoid sum of `h^2 W`.
pub fn flow_energy(spec: &PotentialSpec, field: &Field2D, eps_flow: f64) -> f64 {
    let d = field.domain;
    let (e2, h2) = (eps_flow * eps_flow, d.h * d.h);
    let rows: Vec<f64> = (0..d.ny)
        .into_par_iter()
        .map(|j| {
            let wr = end_weight(j, d.ny);
            let mut e = 0.0;
            for i in 0..d.nx {
                let u = field.at(i, j);
                let wc = end_weight(i, d.nx);
                e += wr * wc * h2 * spec.value(u);
                if i + 1 < d.nx {
                    e += 0.5 * e2 * wr * (field.at(i + 1, j) - u).norm_sq();
                }
                if j + 1 < d.ny {
                    e += 0.5 * e2 * wc * (field.at(i, j + 1) - u).norm_sq();
                }
            }
            e
        })
        .collect();
    rows.iter().sum()
}

/// `eps^2 Lap_h u - W_u(u)`, which is minus the energy gradient divided by
/// the lumped nodal mass (the reflected-ghost Laplacian on the boundary),
/// together with the flow energy of `field`.
fn velocity(spec: &PotentialSpec, field: &Field2D, eps_flow: f64) -> (Vec<PlanePoint>, f64) {
    let d = field.domain;
    let (e2, h2) = (eps_flow * eps_flow, d.h * d.h);
    let rows: Vec<(Vec<PlanePoint>, f64)> = (0..d.ny)
        .into_par_iter()
        .map(|j| {
            let wr = end_weight(j, d.ny);
            let mut e = 0.0;
            let v = (0..d.nx)
                .map(|i| {
                    let u = field.at(i, j);
                    let wc = end_weight(i, d.nx);
                    let (w, wu) = spec.eval(u);
                    e += wr * wc * h2 * w;
                    // Opposite neighbours are summed first so that mirrored
                    // nodes see bitwise mirrored arithmetic.
                    let mut lap_x = PlanePoint::ORIGIN;
                    let mut lap_y = PlanePoint::ORIGIN;
                    let left = (i > 0).then(|| field.at(i - 1, j) - u);
                    let right = (i + 1 < d.nx).then(|| field.at(i + 1, j) - u);
                    if let Some(du) = right {
                        e += 0.5 * e2 * wr * du.norm_sq();
                    }
                    match (left, right) {
                        (Some(a), Some(b)) => lap_x = a + b,
                        (Some(a), None) | (None, Some(a)) => lap_x = a,
                        (None, None) => {}
                    }
                    let down = (j > 0).then(|| field.at(i, j - 1) - u);
                    let up = (j + 1 < d.ny).then(|| field.at(i, j + 1) - u);
                    if let Some(du) = up {
                        e += 0.5 * e2 * wc * du.norm_sq();
                    }
                    match (down, up) {
                        (Some(a), Some(b)) => lap_y = a + b,
                        (Some(a), None) | (None, Some(a)) => lap_y = a,
                        (None, None) => {}
                    }
                    (lap_x * wr + lap_y * wc) * (e2 / (h2 * wr * wc)) - wu
                })
                .collect();
            (v, e)
        })
        .collect();
    let mut energy = 0.0;
    let mut out = Vec::with_capacity(d.len());
    for (v, e) in rows {
        energy += e;
        out.extend(v);
    }
    (out, energy)
}

/// Largest Hessian eigenvalue modulus of `W` over the nodal values.
fn stiffness(spec: &PotentialSpec, field: &Field2D) -> f64 {
    field
        .values
        .par_iter()
        .map(|&u| {
            let (a, b) = sym_eigenvalues(fd_hessian(spec, u, HESSIAN_STEP));
            a.abs().max(b.abs())
        })
        .reduce(|| 0.0, f64::max)
}

/// `dt_safety * min(h^2 / (4 eps^2), 1 / L)` with `L` the stiffness of `W` at
/// the current nodal values.
pub fn stable_dt(spec: &PotentialSpec, field: &Field2D, opts: &FlowOptions) -> f64 {
    let h = field.domain.h;
    let diffusive = h * h / (4.0 * opts.eps_flow * opts.eps_flow);
    let l = stiffness(spec, field);
    opts.dt_safety
        * if l > 0.0 {
            diffusive.min(1.0 / l)
        } else {
            diffusive
        }
}

/// Sup-distance of each row to the upper profile minus that to the lower one:
/// negative rows look like the upper phase.
pub fn row_identity(state: &FlowState) -> Vec<f64> {
    let d = state.field.domain;
    (0..d.ny)
        .map(|j| {
            let row = state.field.row(j);
            let du = row
                .iter()
                .zip(&state.upper_profile)
                .map(|(u, p)| u.distance(*p))
                .fold(0.0, f64::max);
            let dl = row
                .iter()
                .zip(&state.lower_profile)
                .map(|(u, p)| u.distance(*p))
                .fold(0.0, f64::max);
            du - dl
        })
        .collect()
}

/// Height where the row identity switches from lower to upper, linearly
/// interpolated; the switch nearest the last known position wins. `None`
/// when no row changes identity.
pub fn junction(state: &FlowState) -> Option<f64> {
    let d = state.field.domain;
    let s = row_identity(state);
    let reference = state
        .junction_history
        .last()
        .map_or(state.x2_split, |p| p.1);
    let mut best: Option<f64> = None;
    for j in 0..d.ny - 1 {
        let (a, b) = (s[j], s[j + 1]);
        if a > 0.0 && b <= 0.0 {
            let x = d.x2(j) + d.h * a / (a - b);
            if best.is_none_or(|y| (x - reference).abs() < (y - reference).abs()) {
                best = Some(x);
            }
        }
    }
    best
}

/// Explicit Euler steps up to `t_end`. The step size is refreshed from the
/// current stiffness every `record_every` steps.
pub fn evolve(mut state: FlowState, spec: &PotentialSpec, t_end: f64) -> Result<FlowState> {
    let opts = state.opts;
    let every = opts.record_every.max(1);
    let limit = 2.0 * opts.c0_radius;
    let mut last: Option<f64> = None;
    state.dt = stable_dt(spec, &state.field, &opts);
    while state.time < t_end {
        let dt = state.dt.min(t_end - state.time);
        if dt <= 1e-15 * t_end.abs().max(1.0) {
            break;
        }
        let (v, e) = velocity(spec, &state.field, opts.eps_flow);
        match last {
            Some(prev) => state.max_energy_increase = state.max_energy_increase.max(e - prev),
            None if state.energy_history.is_empty() => state.energy_history.push((state.time, e)),
            None => {}
        }
        last = Some(e);
        for (u, vk) in state.field.values.iter_mut().zip(&v) {
            *u += *vk * dt;
        }
        state.time += dt;
        state.steps += 1;
        let worst = state
            .field
            .values
            .iter()
            .map(|u| u.norm())
            .fold(0.0, f64::max);
        if !(worst <= limit) {
            return Err(Error::BlowUp {
                time: state.time,
                norm: worst,
                limit,
            });
        }
        if state.steps % every == 0 {
            state
                .energy_history
                .push((state.time, flow_energy(spec, &state.field, opts.eps_flow)));
            if let Some(x) = junction(&state) {
                state.junction_history.push((state.time, x));
            }
            state.dt = stable_dt(spec, &state.field, &opts);
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub speed: f64,
    pub r2: f64,
    pub samples: usize,
}

pub const MIN_SPEED_SAMPLES: usize = 20;

/// Least-squares slope of the junction height against time after dropping
/// the first quarter of the samples.
pub fn measure_speed(state: &FlowState) -> Result<SpeedFit> {
    let hist = &state.junction_history;
    let kept = &hist[hist.len() / 4..];
    if kept.len() < MIN_SPEED_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SPEED_SAMPLES,
            have: kept.len(),
        });
    }
    let (ts, xs): (Vec<f64>, Vec<f64>) = kept.iter().copied().unzip();
    let (speed, _, r2) = fit_line(&ts, &xs).ok_or_else(|| Error::TooFewSamples {
        needed: MIN_SPEED_SAMPLES,
        have: kept.len(),
    })?;
    Ok(SpeedFit {
        speed,
        r2,
        samples: kept.len(),
    })
}

/// Writes the junction history as CSV with header `t,x2`.
pub fn write_junction_csv<W: std::io::Write>(state: &FlowState, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "x2"])?;
    for &(t, x) in &state.junction_history {
        wr.write_record([crate::path::fmt17(t), crate::path::fmt17(x)])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_is_a_fixed_point() {
        let spec = PotentialSpec::w1(0.5).unwrap();
        let d = flow_domain(2.0, 1.0, 0.25).unwrap();
        let field = Field2D::from_fn(d, 0.0, |_, _| PlanePoint::A_PLUS);
        let (v, e) = velocity(&spec, &field, 1.0);
        assert_eq!(e, 0.0);
        assert!(v.iter().all(|p| p.norm() == 0.0));
    }

    #[test]
    fn velocity_is_minus_energy_gradient_over_mass() {
        let spec = PotentialSpec::w1(0.5).unwrap();
        let d = flow_domain(1.0, 0.5, 0.25).unwrap();
        let field = Field2D::from_fn(d, 0.0, |x1, x2| {
            PlanePoint::new(x1.tanh(), 0.1 * (x1 + 2.0 * x2).cos())
        });
        let eps = 0.7;
        let (v, e) = velocity(&spec, &field, eps);
        assert_eq!(e, flow_energy(&spec, &field, eps));
        let s = 1e-6;
        for k in [0, 7, d.len() / 2, d.len() - 1] {
            let (i, j) = (k % d.nx, k / d.nx);
            let mass = end_weight(i, d.nx) * end_weight(j, d.ny) * d.h * d.h;
            let mut fp = field.clone();
            let mut fm = field.clone();
            fp.values[k].u1 += s;
            fm.values[k].u1 -= s;
            let g = (flow_energy(&spec, &fp, eps) - flow_energy(&spec, &fm, eps)) / (2.0 * s);
            assert!(
                (v[k].u1 + g / mass).abs() < 1e-5 * (1.0 + v[k].u1.abs()),
                "{k}"
            );
        }
    }
}
