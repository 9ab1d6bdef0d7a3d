use serde::{Deserialize, Serialize};

use super::point::{DihedralElement, PlanePoint};
use super::spec::{fd_hessian, sym_eigenvalues, Potential, HESSIAN_STEP};
use crate::error::{Error, Result};
use crate::numerics::halton_2d;
use crate::path::Path;

/// Max of `|W(g u) - W(u)|` over Halton points in `[-3, 3]^2` and all group
/// elements.
pub fn check_symmetry<P: Potential + ?Sized>(pot: &P, n_samples: usize) -> f64 {
    let n = n_samples.max(100);
    let mut worst = 0.0f64;
    for (a, b) in halton_2d(n, 11) {
        let u = PlanePoint::new(6.0 * a - 3.0, 6.0 * b - 3.0);
        let w = pot.value(u);
        for g in DihedralElement::ALL {
            worst = worst.max((pot.value(g.apply(u)) - w).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaInfo {
    pub a_plus: PlanePoint,
    pub a_minus: PlanePoint,
    /// Hessian eigenvalues at `a+`, ascending.
    pub hess_eigs: (f64, f64),
    /// Convexity constant: `c^2` is the smallest sampled Hessian eigenvalue on
    /// the `r0`-ball.
    pub c: f64,
    pub r0: f64,
    /// False when the Hessian at the minima is singular (no admissible `r0`).
    pub nondegenerate: bool,
}

const R0_CANDIDATES: [f64; 5] = [0.5, 0.4, 0.3, 0.2, 0.1];
const POLAR_SAMPLES: usize = 64;
/// Smallest Hessian eigenvalue at the well below which it counts as singular.
pub const DEGENERACY_TOL: f64 = 1e-6;

fn newton_minimum<P: Potential + ?Sized>(pot: &P, start: PlanePoint) -> Result<PlanePoint> {
    let mut u = start;
    for _ in 0..50 {
        let g = pot.gradient(u);
        if g.norm() <= 1e-14 {
            return Ok(u);
        }
        let h = fd_hessian(pot, u, HESSIAN_STEP);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::NewtonDiverged { start });
        }
        let step = PlanePoint::new(
            (h[1][1] * g.u1 - h[0][1] * g.u2) / det,
            (-h[1][0] * g.u1 + h[0][0] * g.u2) / det,
        );
        u -= step;
        if !u.is_finite() || u.distance(start) > 0.5 {
            return Err(Error::NewtonDiverged { start });
        }
    }
    if pot.gradient(u).norm() <= 1e-10 {
        Ok(u)
    } else {
        Err(Error::NewtonDiverged { start })
    }
}

/// Newton refinement of the wells from `(±1, 0)` plus a radial scan for the
/// convexity radius.
pub fn minima_and_convexity<P: Potential + ?Sized>(pot: &P) -> Result<MinimaInfo> {
    let a_plus = newton_minimum(pot, PlanePoint::A_PLUS)?;
    let a_minus = newton_minimum(pot, PlanePoint::A_MINUS)?;
    let hess_eigs = sym_eigenvalues(fd_hessian(pot, a_plus, HESSIAN_STEP));

    let min_eig_on_ball = |r0: f64| -> f64 {
        let mut lo = hess_eigs.0;
        for i in 1..=POLAR_SAMPLES {
            let rad = r0 * i as f64 / POLAR_SAMPLES as f64;
            for j in 0..POLAR_SAMPLES {
                let th = std::f64::consts::TAU * j as f64 / POLAR_SAMPLES as f64;
                let u = a_plus + PlanePoint::from_polar(rad, th);
                if pot.in_mollification_zone(u) {
                    continue;
                }
                lo = lo.min(sym_eigenvalues(fd_hessian(pot, u, HESSIAN_STEP)).0);
            }
        }
        lo
    };

    if hess_eigs.0 > DEGENERACY_TOL {
        for r0 in R0_CANDIDATES {
            let lo = min_eig_on_ball(r0);
            if lo > 0.0 {
                return Ok(MinimaInfo {
                    a_plus,
                    a_minus,
                    hess_eigs,
                    c: lo.sqrt(),
                    r0,
                    nondegenerate: true,
                });
            }
        }
    }
    Ok(MinimaInfo {
        a_plus,
        a_minus,
        hess_eigs,
        c: 0.0,
        r0: 0.0,
        nondegenerate: false,
    })
}

/// A symmetric convex set bounding the admissible values; always a disk about
/// the origin here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexSetC0 {
    pub radius: f64,
    /// Max of `W` over the sampled boundary circle, when checked.
    pub boundary_max: Option<f64>,
    /// Min of `W` over the sampled outer ring, when checked.
    pub ring_min: Option<f64>,
}

pub const C0_RADII: [f64; 4] = [2.0, 2.5, 3.0, 4.0];
pub const C0_MARGIN: f64 = 0.2;
const C0_BOUNDARY_SAMPLES: usize = 720;

impl ConvexSetC0 {
    /// Disk without the potential-growth check, for use as a clipping set.
    pub fn disk(radius: f64) -> Self {
        Self {
            radius,
            boundary_max: None,
            ring_min: None,
        }
    }

    pub fn contains(&self, u: PlanePoint) -> bool {
        u.norm() <= self.radius
    }

    /// Nearest point of the disk.
    pub fn project(&self, u: PlanePoint) -> PlanePoint {
        let n = u.norm();
        if n <= self.radius {
            u
        } else {
            u * (self.radius / n)
        }
    }

    /// Smallest candidate radius containing every node with the margin.
    pub fn containing(paths: &[Path]) -> Self {
        let reach = max_norm(paths);
        let radius = C0_RADII
            .iter()
            .copied()
            .find(|r| reach <= r - C0_MARGIN)
            .unwrap_or_else(|| (reach + C0_MARGIN).ceil());
        Self::disk(radius)
    }
}

fn max_norm(paths: &[Path]) -> f64 {
    paths
        .iter()
        .flat_map(|p| p.nodes.iter())
        .map(|u| u.norm())
        .fold(PlanePoint::A_PLUS.norm(), f64::max)
}

fn circle(radius: f64) -> impl Iterator<Item = PlanePoint> {
    (0..C0_BOUNDARY_SAMPLES).map(move |k| {
        PlanePoint::from_polar(
            radius,
            std::f64::consts::TAU * k as f64 / C0_BOUNDARY_SAMPLES as f64,
        )
    })
}

/// Smallest disk from [`C0_RADII`] that contains the wells and every
/// connection with margin, and outside of which (sampled on the ring at twice
/// the radius) the potential is at least its maximum over the boundary circle.
pub fn build_c0<P: Potential + ?Sized>(pot: &P, connections: &[Path]) -> Result<ConvexSetC0> {
    let reach = max_norm(connections);
    let mut last = None;
    for radius in C0_RADII {
        if reach > radius - C0_MARGIN {
            let far = connections
                .iter()
                .flat_map(|p| p.nodes.iter().copied())
                .fold(
                    PlanePoint::A_PLUS,
                    |a, b| if b.norm() > a.norm() { b } else { a },
                );
            last = Some((radius, "containment margin below 0.2".to_string(), far));
            continue;
        }
        let (boundary_max, _) = circle(radius).map(|u| (pot.value(u), u)).fold(
            (f64::NEG_INFINITY, PlanePoint::ORIGIN),
            |a, b| if b.0 > a.0 { b } else { a },
        );
        let (ring_min, ring_arg) = circle(2.0 * radius).map(|u| (pot.value(u), u)).fold(
            (f64::INFINITY, PlanePoint::ORIGIN),
            |a, b| if b.0 < a.0 { b } else { a },
        );
        if ring_min >= boundary_max {
            return Ok(ConvexSetC0 {
                radius,
                boundary_max: Some(boundary_max),
                ring_min: Some(ring_min),
            });
        }
        last = Some((
            radius,
            format!("ring value {ring_min:.6} below boundary max {boundary_max:.6}"),
            ring_arg,
        ));
    }
    let (radius, reason, sample) = last.expect("candidate list is non-empty");
    Err(Error::NoQualifyingC0 {
        radius,
        reason,
        sample,
    })
}

/// Candidate convex functions for the monotonicity hypothesis.
#[derive(Clone, Copy)]
pub enum QCandidate<'a> {
    /// `Q(u) = |u - a+|`
    Radial,
    /// `Q(u) = |u - a+| + weight (u1 - 1)^2`, convex for `weight >= 0`.
    ShiftedRadial { weight: f64 },
    /// Gradient `Q_u` of a user-supplied convex `Q`.
    Custom(&'a (dyn Fn(PlanePoint) -> PlanePoint + Sync)),
}

impl QCandidate<'_> {
    /// `Q_u(u)`, or `None` where it is undefined (the center).
    pub fn gradient(&self, u: PlanePoint) -> Option<PlanePoint> {
        let d = u - PlanePoint::A_PLUS;
        match self {
            QCandidate::Radial | QCandidate::ShiftedRadial { .. } => {
                let n = d.norm();
                if n < 1e-12 {
                    return None;
                }
                let mut g = d * (1.0 / n);
                if let QCandidate::ShiftedRadial { weight } = self {
                    g.u1 += 2.0 * weight * d.u1;
                }
                Some(g)
            }
            QCandidate::Custom(f) => Some(f(u)),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QReport {
    pub samples_used: usize,
    pub excluded: usize,
    pub violations: Vec<PlanePoint>,
    pub violation_fraction: f64,
}

pub const Q_TOL: f64 = 1e-10;

/// `W_u . Q_u` at `u`, or `None` when `u` is excluded (outside the half-plane,
/// in a mollification zone, or at the center).
pub fn q_product<P: Potential + ?Sized>(pot: &P, q: QCandidate<'_>, u: PlanePoint) -> Option<f64> {
    if u.u1 <= 0.0 || pot.in_mollification_zone(u) {
        return None;
    }
    let qu = q.gradient(u)?;
    Some(pot.gradient(u).dot(qu))
}

pub fn check_q_monotonicity_on<P: Potential + ?Sized>(
    pot: &P,
    q: QCandidate<'_>,
    points: &[PlanePoint],
) -> QReport {
    let mut report = QReport::default();
    for &u in points {
        match q_product(pot, q, u) {
            None => report.excluded += 1,
            Some(v) => {
                report.samples_used += 1;
                if v < -Q_TOL {
                    report.violations.push(u);
                }
            }
        }
    }
    if report.samples_used > 0 {
        report.violation_fraction = report.violations.len() as f64 / report.samples_used as f64;
    }
    report
}

/// Halton samples over `(0, 3] x [-3, 3]`.
pub fn check_q_monotonicity<P: Potential + ?Sized>(
    pot: &P,
    q: QCandidate<'_>,
    n_samples: usize,
) -> QReport {
    let points: Vec<PlanePoint> = halton_2d(n_samples, 29)
        .into_iter()
        .map(|(a, b)| PlanePoint::new(3.0 * a, 6.0 * b - 3.0))
        .collect();
    check_q_monotonicity_on(pot, q, &points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    struct Broken(PotentialSpec);

    impl Potential for Broken {
        fn eval(&self, u: PlanePoint) -> (f64, PlanePoint) {
            let (w, g) = self.0.eval(u);
            (w + u.u1, g + PlanePoint::new(1.0, 0.0))
        }
    }

    #[test]
    fn symmetry_examples() {
        assert!(check_symmetry(&PotentialSpec::w1(1.0).unwrap(), 1000) <= 1e-12);
        assert!(check_symmetry(&PotentialSpec::w2(0.2, 0.7).unwrap(), 1000) <= 1e-12);
        assert!(check_symmetry(&Broken(PotentialSpec::w1(1.0).unwrap()), 1000) > 0.1);
    }

    #[test]
    fn minima_w1_eps1() {
        let info = minima_and_convexity(&PotentialSpec::w1(1.0).unwrap()).unwrap();
        assert_eq!(info.a_plus, PlanePoint::A_PLUS);
        assert_eq!(info.a_minus, PlanePoint::A_MINUS);
        assert!((info.hess_eigs.0 - 2.0).abs() < 1e-4 && (info.hess_eigs.1 - 2.0).abs() < 1e-4);
        assert!(info.nondegenerate && info.r0 >= 0.2);
        // c^2 is a minimum over the ball, so below the center value.
        assert!(info.c > 0.0 && info.c <= 2f64.sqrt() + 1e-6);
        // Independent scan: eigenvalues of the value-only finite-difference
        // Hessian on a coarse radial grid stay above c^2 (up to FD error).
        let p = PotentialSpec::w1(1.0).unwrap();
        for i in 1..=8 {
            for j in 0..16 {
                let u = PlanePoint::A_PLUS
                    + PlanePoint::from_polar(info.r0 * i as f64 / 8.0, j as f64 * 0.3927);
                let h = 1e-4;
                let w = |a: f64, b: f64| p.value(PlanePoint::new(u.u1 + a, u.u2 + b));
                let d11 = (w(h, 0.0) - 2.0 * w(0.0, 0.0) + w(-h, 0.0)) / (h * h);
                let d22 = (w(0.0, h) - 2.0 * w(0.0, 0.0) + w(0.0, -h)) / (h * h);
                let d12 = (w(h, h) - w(h, -h) - w(-h, h) + w(-h, -h)) / (4.0 * h * h);
                let (lo, _) = sym_eigenvalues([[d11, d12], [d12, d22]]);
                assert!(lo >= info.c * info.c - 1e-3, "{lo} at {u:?}");
            }
        }
    }

    #[test]
    fn minima_reference_parameters() {
        let info = minima_and_convexity(&PotentialSpec::w1(0.2887).unwrap()).unwrap();
        assert_eq!(info.a_plus, PlanePoint::A_PLUS);
        assert_eq!(info.a_minus, PlanePoint::A_MINUS);
        let info = minima_and_convexity(&PotentialSpec::w2(0.1266, 0.5).unwrap()).unwrap();
        assert_eq!(info.a_plus, PlanePoint::A_PLUS);
        assert_eq!(info.a_minus, PlanePoint::A_MINUS);
        // The wells of W2 are quartic.
        assert!(!info.nondegenerate);
        assert!(info.hess_eigs.1.abs() < 1e-6);
    }

    #[test]
    fn q_radial_on_axis_ray() {
        let p = PotentialSpec::w1(1.0).unwrap();
        let ray: Vec<PlanePoint> = (1..=50)
            .map(|k| PlanePoint::new(1.0 + 0.01 * k as f64, 0.0))
            .collect();
        // Oracle: dW/dt along the ray by central differences of values.
        for &u in &ray {
            let h = 1e-6;
            let dw = (p.value(PlanePoint::new(u.u1 + h, 0.0))
                - p.value(PlanePoint::new(u.u1 - h, 0.0)))
                / (2.0 * h);
            assert!(dw > 0.0);
        }
        let report = check_q_monotonicity_on(&p, QCandidate::Radial, &ray);
        assert!(report.violations.is_empty());
        assert_eq!(report.samples_used, 50);
    }

    #[test]
    fn q_center_excluded() {
        let p = PotentialSpec::w1(0.5).unwrap();
        assert!(q_product(&p, QCandidate::Radial, PlanePoint::A_PLUS).is_none());
        let report = check_q_monotonicity_on(&p, QCandidate::Radial, &[PlanePoint::A_PLUS]);
        assert_eq!(report.excluded, 1);
    }

    #[test]
    fn q_radial_fails_somewhere_near_poles() {
        let p = PotentialSpec::w1(0.2887).unwrap();
        let report = check_q_monotonicity(&p, QCandidate::Radial, 10_000);
        // Oracle: direct sign evaluation at one point between the pole and a+,
        // where W decreases moving away from a+ toward the pole's shadow.
        let u = PlanePoint::new(0.3, 0.45);
        let d = u - PlanePoint::A_PLUS;
        let h = 1e-6;
        let dw = (p.value(u + d * (h / d.norm())) - p.value(u - d * (h / d.norm()))) / (2.0 * h);
        assert!(report.samples_used > 9000);
        assert!(report.violation_fraction > 0.0);
        assert_eq!(
            dw < 0.0,
            q_product(&p, QCandidate::Radial, u).unwrap() < 0.0
        );
    }

    #[test]
    fn c0_empty_connections() {
        // The containment part qualifies at radius 2 with margin 1; the growth
        // condition on the outer ring fails for W1 because W tends to 1 from
        // below along the real axis while exceeding 1 on the imaginary axis.
        let p = PotentialSpec::w1(0.2887).unwrap();
        let disk = ConvexSetC0::containing(&[]);
        assert_eq!(disk.radius, 2.0);
        let err = build_c0(&p, &[]).unwrap_err();
        match err {
            Error::NoQualifyingC0 { radius, sample, .. } => {
                assert_eq!(radius, 4.0);
                assert!(p.value(sample) < p.value(PlanePoint::new(0.0, 4.0)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn c0_projection() {
        let d = ConvexSetC0::disk(2.0);
        assert_eq!(
            d.project(PlanePoint::new(5.0, 0.0)),
            PlanePoint::new(2.0, 0.0)
        );
        assert_eq!(
            d.project(PlanePoint::new(0.5, 0.5)),
            PlanePoint::new(0.5, 0.5)
        );
    }
}
