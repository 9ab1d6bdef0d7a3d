use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::point::PlanePoint;
use crate::error::{Error, Result};

pub const DEFAULT_CAP: f64 = 1e6;
pub const DEFAULT_MOLLIFY_RADIUS: f64 = 0.07;

/// Anything the solvers can descend on: a smooth, dihedrally symmetric double
/// well with minima at `(±1, 0)`.
pub trait Potential: Sync {
    /// Value and exact gradient.
    fn eval(&self, u: PlanePoint) -> (f64, PlanePoint);

    fn value(&self, u: PlanePoint) -> f64 {
        self.eval(u).0
    }

    fn gradient(&self, u: PlanePoint) -> PlanePoint {
        self.eval(u).1
    }

    /// Singular points of the unmollified potential.
    fn poles(&self) -> Vec<PlanePoint> {
        Vec::new()
    }

    fn mollify_radius(&self) -> f64 {
        0.0
    }

    fn pole_distance(&self, u: PlanePoint) -> f64 {
        self.poles()
            .iter()
            .map(|p| p.distance(u))
            .fold(f64::INFINITY, f64::min)
    }

    fn in_mollification_zone(&self, u: PlanePoint) -> bool {
        self.pole_distance(u) <= self.mollify_radius()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `|(z^2 - 1) / (z^2 + eps^2)|^2`
    W1 { eps: f64 },
    /// `|(z^2 - 1) / (z^2 + eps1^2)|^2 |(z^2 - 1) / (z^2 + eps2^2)|^2`
    W2 { eps1: f64, eps2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct PotentialSpec {
    pub family: Family,
    /// Distance around each pole inside which the capped value is in force.
    pub mollify_radius: f64,
    /// Saturation level of the mollified value.
    pub cap_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps2: Option<f64>,
    #[serde(default = "default_radius")]
    mollify_radius: f64,
    #[serde(default = "default_cap")]
    cap_value: f64,
}

fn default_radius() -> f64 {
    DEFAULT_MOLLIFY_RADIUS
}

fn default_cap() -> f64 {
    DEFAULT_CAP
}

impl TryFrom<RawSpec> for PotentialSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let family = match (raw.family.as_str(), raw.eps, raw.eps1, raw.eps2) {
            ("W1", Some(eps), None, None) => Family::W1 { eps },
            ("W2", None, Some(eps1), Some(eps2)) => Family::W2 { eps1, eps2 },
            ("W1", ..) => return Err(Error::InvalidSpec("W1 takes exactly `eps`".into())),
            ("W2", ..) => {
                return Err(Error::InvalidSpec(
                    "W2 takes exactly `eps1` and `eps2`".into(),
                ))
            }
            (other, ..) => return Err(Error::InvalidSpec(format!("unknown family `{other}`"))),
        };
        PotentialSpec::new(family, raw.mollify_radius, raw.cap_value)
    }
}

impl From<PotentialSpec> for RawSpec {
    fn from(spec: PotentialSpec) -> Self {
        let (family, eps, eps1, eps2) = match spec.family {
            Family::W1 { eps } => ("W1", Some(eps), None, None),
            Family::W2 { eps1, eps2 } => ("W2", None, Some(eps1), Some(eps2)),
        };
        RawSpec {
            family: family.to_string(),
            eps,
            eps1,
            eps2,
            mollify_radius: spec.mollify_radius,
            cap_value: spec.cap_value,
        }
    }
}

impl PotentialSpec {
    pub fn new(family: Family, mollify_radius: f64, cap_value: f64) -> Result<Self> {
        match family {
            Family::W1 { eps } if !(eps > 0.0 && eps.is_finite()) => {
                return Err(Error::InvalidSpec(format!(
                    "eps must be positive, got {eps}"
                )))
            }
            Family::W2 { eps1, eps2 } if !(eps1 > 0.0 && eps1 <= eps2 && eps2.is_finite()) => {
                return Err(Error::InvalidSpec(format!(
                    "need 0 < eps1 <= eps2, got eps1 = {eps1}, eps2 = {eps2}"
                )))
            }
            _ => {}
        }
        if !(mollify_radius >= 0.0 && mollify_radius.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "mollify_radius must be >= 0, got {mollify_radius}"
            )));
        }
        if !(cap_value > 0.0 && cap_value.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "cap_value must be > 0, got {cap_value}"
            )));
        }
        Ok(Self {
            family,
            mollify_radius,
            cap_value,
        })
    }

    pub fn w1(eps: f64) -> Result<Self> {
        Self::new(
            Family::W1 { eps },
            DEFAULT_MOLLIFY_RADIUS.min(0.25 * eps),
            DEFAULT_CAP,
        )
    }

    pub fn w2(eps1: f64, eps2: f64) -> Result<Self> {
        Self::new(
            Family::W2 { eps1, eps2 },
            DEFAULT_MOLLIFY_RADIUS.min(0.25 * eps1),
            DEFAULT_CAP,
        )
    }

    pub fn with_cap(self, cap_value: f64) -> Result<Self> {
        Self::new(self.family, self.mollify_radius, cap_value)
    }

    pub fn with_mollify_radius(self, mollify_radius: f64) -> Result<Self> {
        Self::new(self.family, mollify_radius, self.cap_value)
    }

    /// The holomorphic factor `f` with `W = |f|^2`, and its derivative.
    pub fn holomorphic(&self, z: Complex64) -> (Complex64, Complex64) {
        let one = Complex64::new(1.0, 0.0);
        let z2 = z * z;
        let factor = |eps: f64| {
            let den = z2 + eps * eps;
            let f = (z2 - one) / den;
            let df = z * (2.0 * (1.0 + eps * eps)) / (den * den);
            (f, df)
        };
        match self.family {
            Family::W1 { eps } => factor(eps),
            Family::W2 { eps1, eps2 } => {
                let (f1, d1) = factor(eps1);
                let (f2, d2) = factor(eps2);
                (f1 * f2, d1 * f2 + f1 * d2)
            }
        }
    }

    /// Unmollified value and gradient; infinite at the poles.
    pub fn raw_eval(&self, u: PlanePoint) -> (f64, PlanePoint) {
        let (f, df) = self.holomorphic(u.to_complex());
        // W = f conj(f); dW/du1 + i dW/du2 = 2 f conj(f').
        let g = f * df.conj() * 2.0;
        (f.norm_sqr(), PlanePoint::new(g.re, g.im))
    }

    pub fn raw_value(&self, u: PlanePoint) -> f64 {
        self.raw_eval(u).0
    }

    /// Values at or below this level pass through the cap untouched.
    pub fn cap_threshold(&self) -> f64 {
        0.1 * self.cap_value
    }

    /// Saturating map `s(W)` and `s'(W)`: identity up to the threshold, then a
    /// tanh tail approaching `cap_value`, matched in value, slope and curvature.
    pub fn cap(&self, w: f64) -> (f64, f64) {
        let t = self.cap_threshold();
        if w <= t {
            return (w, 1.0);
        }
        let span = self.cap_value - t;
        if !w.is_finite() {
            return (self.cap_value, 0.0);
        }
        let th = ((w - t) / span).tanh();
        (t + span * th, 1.0 - th * th)
    }
}

impl Potential for PotentialSpec {
    fn eval(&self, u: PlanePoint) -> (f64, PlanePoint) {
        let (w, g) = self.raw_eval(u);
        if !(w.is_finite() && g.is_finite()) {
            return (self.cap_value, PlanePoint::ORIGIN);
        }
        let (s, ds) = self.cap(w);
        if ds == 1.0 {
            (s, g)
        } else {
            (s, g * ds)
        }
    }

    fn poles(&self) -> Vec<PlanePoint> {
        match self.family {
            Family::W1 { eps } => vec![PlanePoint::new(0.0, eps), PlanePoint::new(0.0, -eps)],
            Family::W2 { eps1, eps2 } => vec![
                PlanePoint::new(0.0, eps1),
                PlanePoint::new(0.0, -eps1),
                PlanePoint::new(0.0, eps2),
                PlanePoint::new(0.0, -eps2),
            ],
        }
    }

    fn mollify_radius(&self) -> f64 {
        self.mollify_radius
    }
}

/// Checked evaluation: rejects non-finite input.
pub fn evaluate<P: Potential + ?Sized>(pot: &P, u: PlanePoint) -> Result<(f64, PlanePoint)> {
    if !u.is_finite() {
        return Err(Error::NonFinite { u1: u.u1, u2: u.u2 });
    }
    Ok(pot.eval(u))
}

pub type Matrix2 = [[f64; 2]; 2];

pub const HESSIAN_STEP: f64 = 1e-5;

/// Central finite difference of the analytic gradient, symmetrized. Not used
/// inside any solver.
pub fn hessian<P: Potential + ?Sized>(pot: &P, u: PlanePoint) -> Result<Matrix2> {
    if !u.is_finite() {
        return Err(Error::NonFinite { u1: u.u1, u2: u.u2 });
    }
    let d = pot.pole_distance(u);
    if d <= pot.mollify_radius() {
        return Err(Error::InsideMollificationZone {
            point: u,
            distance: d,
        });
    }
    Ok(fd_hessian(pot, u, HESSIAN_STEP))
}

pub(crate) fn fd_hessian<P: Potential + ?Sized>(pot: &P, u: PlanePoint, step: f64) -> Matrix2 {
    let gp1 = pot.gradient(u + PlanePoint::new(step, 0.0));
    let gm1 = pot.gradient(u - PlanePoint::new(step, 0.0));
    let gp2 = pot.gradient(u + PlanePoint::new(0.0, step));
    let gm2 = pot.gradient(u - PlanePoint::new(0.0, step));
    let c1 = (gp1 - gm1) * (0.5 / step);
    let c2 = (gp2 - gm2) * (0.5 / step);
    let off = 0.5 * (c1.u2 + c2.u1);
    [[c1.u1, off], [off, c2.u2]]
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym_eigenvalues(m: Matrix2) -> (f64, f64) {
    let tr = m[0][0] + m[1][1];
    let diff = m[0][0] - m[1][1];
    let disc = (0.25 * diff * diff + m[0][1] * m[1][0]).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}
