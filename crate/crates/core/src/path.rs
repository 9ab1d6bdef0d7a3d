//! Discretized planar curves joining the two wells.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CubicSpline;
use crate::potential::{DihedralElement, PlanePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Scalar,
    Upper,
    Lower,
}

impl Classification {
    /// Class of a curve from the sign of its interior `u2` values.
    pub fn infer(nodes: &[PlanePoint]) -> Self {
        let inner = &nodes[1..nodes.len().saturating_sub(1).max(1)];
        let hi = inner.iter().map(|u| u.u2).fold(0.0, f64::max);
        let lo = inner.iter().map(|u| u.u2).fold(0.0, f64::min);
        if hi <= 1e-10 && lo >= -1e-10 {
            Classification::Scalar
        } else if hi >= -lo {
            Classification::Upper
        } else {
            Classification::Lower
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            Classification::Scalar => Classification::Scalar,
            Classification::Upper => Classification::Lower,
            Classification::Lower => Classification::Upper,
        }
    }
}

pub const MIN_CONNECTION_NODES: usize = 101;
pub const ENDPOINT_TOL: f64 = 1e-8;

/// A polyline in the plane. Without abscissae it is treated as a geometric
/// curve; with them it is a graph `x1 -> u(x1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<PlanePoint>,
    pub abscissae: Option<Vec<f64>>,
    pub classification: Classification,
}

impl Path {
    pub fn new(nodes: Vec<PlanePoint>, classification: Classification) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(bad) = nodes.iter().find(|u| !u.is_finite()) {
            return Err(Error::NonFinite {
                u1: bad.u1,
                u2: bad.u2,
            });
        }
        Ok(Self {
            nodes,
            abscissae: None,
            classification,
        })
    }

    /// Builds a path and infers its class from the node signs.
    pub fn from_nodes(nodes: Vec<PlanePoint>) -> Result<Self> {
        let class = if nodes.len() >= 2 {
            Classification::infer(&nodes)
        } else {
            Classification::Scalar
        };
        Self::new(nodes, class)
    }

    pub fn with_abscissae(mut self, xs: Vec<f64>) -> Result<Self> {
        if xs.len() != self.nodes.len() {
            return Err(Error::Mismatch(format!(
                "{} abscissae for {} nodes",
                xs.len(),
                self.nodes.len()
            )));
        }
        if let Some(index) = xs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneAbscissae { index: index + 1 });
        }
        self.abscissae = Some(xs);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Straight segment from `a` to `b` with `n` nodes.
    pub fn segment(a: PlanePoint, b: PlanePoint, n: usize) -> Result<Self> {
        let nodes = (0..n)
            .map(|k| a.lerp(b, k as f64 / (n - 1) as f64))
            .collect();
        Self::from_nodes(nodes)
    }

    /// Half circle of radius `radius` about the origin from `(-radius, 0)` to
    /// `(radius, 0)` through the upper (or lower) half-plane.
    pub fn semicircle(radius: f64, n: usize, upper: bool) -> Result<Self> {
        let sign = if upper { 1.0 } else { -1.0 };
        let nodes = (0..n)
            .map(|k| {
                let th = std::f64::consts::PI * (1.0 - k as f64 / (n - 1) as f64);
                PlanePoint::new(radius * th.cos(), sign * radius * th.sin())
            })
            .collect();
        let class = if upper {
            Classification::Upper
        } else {
            Classification::Lower
        };
        Self::new(nodes, class)
    }

    /// Checks the invariants required of a connection.
    pub fn validate_connection(&self) -> Result<()> {
        let n = self.nodes.len();
        if n < MIN_CONNECTION_NODES {
            return Err(Error::InvalidPath(format!(
                "{n} nodes, need at least {MIN_CONNECTION_NODES}"
            )));
        }
        if self.nodes[0].distance(PlanePoint::A_MINUS) > ENDPOINT_TOL
            || self.nodes[n - 1].distance(PlanePoint::A_PLUS) > ENDPOINT_TOL
        {
            return Err(Error::InvalidPath("endpoints are not at the wells".into()));
        }
        let inner = &self.nodes[1..n - 1];
        let ok = match self.classification {
            Classification::Scalar => inner.iter().all(|u| u.u2.abs() <= 1e-10),
            Classification::Upper => inner.iter().all(|u| u.u2 >= 0.0),
            Classification::Lower => inner.iter().all(|u| u.u2 <= 0.0),
        };
        if !ok {
            return Err(Error::InvalidPath(format!(
                "node signs disagree with classification {:?}",
                self.classification
            )));
        }
        Ok(())
    }

    /// Image under a group element; abscissae are kept.
    pub fn transformed(&self, g: DihedralElement) -> Self {
        let nodes = self.nodes.iter().map(|&u| g.apply(u)).collect();
        let classification = match g {
            DihedralElement::T2 | DihedralElement::S => self.classification.mirrored(),
            _ => self.classification,
        };
        Self {
            nodes,
            abscissae: self.abscissae.clone(),
            classification,
        }
    }

    /// Reflection `u2 -> -u2`.
    pub fn mirror(&self) -> Self {
        self.transformed(DihedralElement::T2)
    }

    /// Cumulative arclength at each node, starting at 0.
    pub fn arclength(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.nodes.len());
        let mut acc = 0.0;
        s.push(0.0);
        for w in self.nodes.windows(2) {
            acc += w[0].distance(w[1]);
            s.push(acc);
        }
        s
    }

    /// Same curve resampled at `n` nodes uniform in arclength by cubic spline
    /// interpolation of each coordinate. Endpoints are kept exactly.
    pub fn resample_uniform(&self, n: usize) -> Self {
        let s = self.arclength();
        let total = *s.last().unwrap();
        if total == 0.0 {
            return Self {
                nodes: vec![self.nodes[0]; n],
                abscissae: None,
                classification: self.classification,
            };
        }
        // Drop repeated nodes so the spline knots are strictly increasing.
        let mut ks = Vec::with_capacity(s.len());
        let mut x = Vec::with_capacity(s.len());
        let mut y = Vec::with_capacity(s.len());
        for (i, &si) in s.iter().enumerate() {
            if ks.last().is_some_and(|&last: &f64| si <= last) {
                continue;
            }
            ks.push(si);
            x.push(self.nodes[i].u1);
            y.push(self.nodes[i].u2);
        }
        let sx = CubicSpline::new(&ks, &x);
        let sy = CubicSpline::new(&ks, &y);
        let mut nodes: Vec<PlanePoint> = (0..n)
            .map(|k| {
                let t = total * k as f64 / (n - 1) as f64;
                PlanePoint::new(sx.eval(t), sy.eval(t))
            })
            .collect();
        nodes[0] = self.nodes[0];
        nodes[n - 1] = *self.nodes.last().unwrap();
        Self {
            nodes,
            abscissae: None,
            classification: self.classification,
        }
    }

    /// Writes `x1,u1,u2`. Geometric paths use cumulative arclength as `x1`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let xs = self.abscissae.clone().unwrap_or_else(|| self.arclength());
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x1", "u1", "u2"])?;
        for (x, u) in xs.iter().zip(&self.nodes) {
            wr.write_record([fmt17(*x), fmt17(u.u1), fmt17(u.u2)])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the `x1,u1,u2` format; the `x1` column becomes the abscissae
    /// when strictly increasing.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x1", "u1", "u2"] {
            return Err(Error::InvalidPath(format!("unexpected header {headers:?}")));
        }
        let mut xs = Vec::new();
        let mut nodes = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidPath(format!("bad number {:?}: {e}", &rec[i])))
            };
            xs.push(parse(0)?);
            nodes.push(PlanePoint::new(parse(1)?, parse(2)?));
        }
        let path = Self::from_nodes(nodes)?;
        if xs.windows(2).all(|w| w[1] > w[0]) {
            path.with_abscissae(xs)
        } else {
            Ok(path)
        }
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Distance from `p` to the polyline through `nodes`.
pub fn distance_to_polyline(p: PlanePoint, nodes: &[PlanePoint]) -> f64 {
    if nodes.len() == 1 {
        return p.distance(nodes[0]);
    }
    nodes
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let len2 = d.norm_sq();
            let t = if len2 == 0.0 {
                0.0
            } else {
                ((p - w[0]).dot(d) / len2).clamp(0.0, 1.0)
            };
            p.distance(w[0] + d * t)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two polylines (node-to-polyline).
pub fn hausdorff(a: &[PlanePoint], b: &[PlanePoint]) -> f64 {
    let one = |x: &[PlanePoint], y: &[PlanePoint]| {
        x.iter()
            .map(|&p| distance_to_polyline(p, y))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let p = Path::semicircle(1.0, 101, true).unwrap();
        let xs: Vec<f64> = (0..101).map(|k| k as f64 * 0.1 - 5.0).collect();
        let p = p.with_abscissae(xs).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,u1,u2\n"));
        let q = Path::read_csv(buf.as_slice()).unwrap();
        assert_eq!(p.nodes, q.nodes);
        assert_eq!(p.abscissae, q.abscissae);
    }

    #[test]
    fn classification_and_mirror() {
        let up = Path::semicircle(1.0, 201, true).unwrap();
        up.validate_connection().unwrap();
        assert_eq!(Classification::infer(&up.nodes), Classification::Upper);
        let down = up.mirror();
        assert_eq!(down.classification, Classification::Lower);
        down.validate_connection().unwrap();
        let axis = Path::segment(PlanePoint::A_MINUS, PlanePoint::A_PLUS, 101).unwrap();
        assert_eq!(axis.classification, Classification::Scalar);
        axis.validate_connection().unwrap();
    }

    #[test]
    fn rejects_non_monotone_abscissae() {
        let p = Path::segment(PlanePoint::A_MINUS, PlanePoint::A_PLUS, 3).unwrap();
        assert!(matches!(
            p.with_abscissae(vec![0.0, 2.0, 1.0]),
            Err(Error::NonMonotoneAbscissae { index: 2 })
        ));
    }

    #[test]
    fn resample_keeps_circle() {
        let p = Path::semicircle(1.0, 301, true).unwrap();
        let q = p.resample_uniform(101);
        assert_eq!(q.nodes[0], p.nodes[0]);
        assert_eq!(q.nodes[100], p.nodes[300]);
        for u in &q.nodes {
            assert!((u.norm() - 1.0).abs() < 1e-6);
        }
        assert!(hausdorff(&p.nodes, &q.nodes) < 1e-3);
    }
}
