use super::action::ZERO_W;
use super::ConnectionResult;
use crate::error::{Error, Result};
use crate::path::{Classification, Path};
use crate::potential::{PlanePoint, Potential, PotentialSpec};

const AXIS_SCAN: usize = 20_000;
const WELL_MARGIN: f64 = 1e-3;

fn axis_speed(spec: &PotentialSpec, s: f64) -> f64 {
    (2.0 * spec.value(PlanePoint::new(s, 0.0))).sqrt()
}

/// `x1(e) = int_0^e ds / sqrt(2 W(s, 0))` for `0 <= e < 1`.
fn time_to(spec: &PotentialSpec, e: f64) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    let g = |s: f64| 1.0 / axis_speed(spec, s);
    let tol = 1e-13 * (1.0 + e * g(e));
    quadrature::integrate(g, 0.0, e, tol).integral
}

/// The connection on the `u1`-axis. Nodes are uniform in `e` (odd `n`, so the
/// middle node is `e = 0`); each interior abscissa is an independent adaptive
/// quadrature of `x1(e)`, and the end abscissae use the midpoint rule on the
/// last segment, where the integral diverges.
pub fn scalar_connection(spec: &PotentialSpec, n: usize) -> Result<ConnectionResult> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidPath(format!(
            "node count must be odd and >= 3, got {n}"
        )));
    }
    // Degenerate wells make W tiny right next to them; only zeros away from
    // the wells count.
    for k in 1..AXIS_SCAN {
        let s = -1.0 + 2.0 * k as f64 / AXIS_SCAN as f64;
        if s.abs() < 1.0 - WELL_MARGIN && spec.value(PlanePoint::new(s, 0.0)) <= ZERO_W {
            return Err(Error::AxisMinimum { at: s });
        }
    }
    let mid = (n - 1) / 2;
    let mut es = vec![0.0; n];
    let mut xs = vec![0.0; n];
    for k in mid + 1..n {
        es[k] = (k - mid) as f64 / mid as f64;
    }
    for k in mid + 1..n - 1 {
        xs[k] = time_to(spec, es[k]);
    }
    let last = es[n - 2];
    xs[n - 1] = xs[n - 2] + (1.0 - last) / axis_speed(spec, 0.5 * (1.0 + last));
    for k in 0..mid {
        es[k] = -es[n - 1 - k];
        xs[k] = -xs[n - 1 - k];
    }
    let nodes = es.iter().map(|&e| PlanePoint::new(e, 0.0)).collect();
    let path = Path::new(nodes, Classification::Scalar)?.with_abscissae(xs)?;
    ConnectionResult::from_parametrized(spec, path)
}

/// Scalar profile `e(x1)` interpolated from a scalar connection.
pub fn scalar_profile_at(result: &ConnectionResult, x1: f64) -> f64 {
    let xs = result
        .path
        .abscissae
        .as_ref()
        .expect("scalar connection has abscissae");
    let us: Vec<f64> = result.path.nodes.iter().map(|u| u.u1).collect();
    crate::numerics::interp_linear(xs, &us, x1)
}
