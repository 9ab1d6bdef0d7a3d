use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::potential::{PlanePoint, Potential, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveOptions {
    /// Departure angle from `a-`, measured from the `u1` axis.
    pub angle: f64,
    /// Distance from `a-` of the starting point.
    pub offset: f64,
    /// RK4 time step, shortened wherever the speed exceeds 1.
    pub step: f64,
    pub span: f64,
    pub escape_radius: f64,
    pub width_tol: f64,
    pub max_bisections: usize,
}

impl Default for WaveOptions {
    fn default() -> Self {
        Self {
            angle: 0.0,
            offset: 1e-3,
            step: 1e-3,
            span: 100.0,
            escape_radius: 3.0,
            width_tol: 1e-6,
            max_bisections: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSpeed {
    pub c: f64,
    pub bracket: (f64, f64),
    /// `(c, miss)` of every probe.
    pub probes: Vec<(f64, f64)>,
}

/// Overshoot of a damped flight from `a-`: the Hamiltonian
/// `|U'|^2/2 - W(U)` at the closest approach to `a+`. It is positive when the
/// trajectory arrives with energy to spare and negative when it turns back
/// short of `a+`.
fn overshoot(spec: &PotentialSpec, c: f64, opts: &WaveOptions) -> f64 {
    let dir = PlanePoint::new(opts.angle.cos(), opts.angle.sin());
    let mut p = PlanePoint::A_MINUS + dir * opts.offset;
    let mut v = dir * (2.0 * spec.value(p)).sqrt();
    let accel = |p: PlanePoint, v: PlanePoint| spec.gradient(p) - v * c;
    let energy = |p: PlanePoint, v: PlanePoint| 0.5 * v.norm_sq() - spec.value(p);
    let mut best = (p.distance(PlanePoint::A_PLUS), energy(p, v));
    let mut t = 0.0;
    while t < opts.span {
        let h = opts.step / v.norm().max(1.0);
        let a1 = accel(p, v);
        let (p2, v2) = (p + v * (0.5 * h), v + a1 * (0.5 * h));
        let a2 = accel(p2, v2);
        let (p3, v3) = (p + v2 * (0.5 * h), v + a2 * (0.5 * h));
        let a3 = accel(p3, v3);
        let (p4, v4) = (p + v3 * h, v + a3 * h);
        let a4 = accel(p4, v4);
        p += (v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0);
        v += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        t += h;
        if !p.is_finite() || p.norm() > opts.escape_radius || spec.in_mollification_zone(p) {
            break;
        }
        let d = p.distance(PlanePoint::A_PLUS);
        if d < best.0 {
            best = (d, energy(p, v));
        } else if d > best.0 + 0.5 {
            break;
        }
    }
    best.1
}

/// Bisection in `c` on the overshoot of the damped traveling-wave ODE
/// `U'' - W_u(U) = -c U'`, shooting from `a-` along `opts.angle`.
pub fn ode_wave_speed(
    spec: &PotentialSpec,
    bracket_c: (f64, f64),
    opts: &WaveOptions,
) -> Result<WaveSpeed> {
    let (lo, hi) = bracket_c;
    let (m_lo, m_hi) = (overshoot(spec, lo, opts), overshoot(spec, hi, opts));
    let b = bisect(
        |c| overshoot(spec, c, opts),
        lo,
        hi,
        m_lo,
        m_hi,
        opts.width_tol,
        opts.max_bisections,
    )
    .ok_or(Error::NoSpeedBracket {
        misses: vec![(lo, m_lo), (hi, m_hi)],
    })?;
    Ok(WaveSpeed {
        c: b.root,
        bracket: (b.lo, b.hi),
        probes: b.probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damping_sets_the_sign_of_the_overshoot() {
        let spec = PotentialSpec::w1(0.5).unwrap();
        let opts = WaveOptions::default();
        assert!(overshoot(&spec, 0.3, &opts) < 0.0);
        assert!(overshoot(&spec, -0.3, &opts) > 0.0);
        assert!(overshoot(&spec, 0.0, &opts).abs() < 1e-8);
    }

    #[test]
    fn axis_wave_of_equal_wells_stands_still() {
        let spec = PotentialSpec::w1(0.5).unwrap();
        let w = ode_wave_speed(&spec, (-1.0, 1.0), &WaveOptions::default()).unwrap();
        assert!(w.c.abs() <= 1e-6, "{}", w.c);
        assert!(matches!(
            ode_wave_speed(&spec, (0.2, 1.0), &WaveOptions::default()),
            Err(Error::NoSpeedBracket { .. })
        ));
    }
}
