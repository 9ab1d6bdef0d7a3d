use crate::error::{Error, Result};
use crate::numerics::fd_weights;
use crate::path::Path;
use crate::potential::{PlanePoint, Potential};

/// Values of `W` at or below this level count as a zero of the potential.
pub const ZERO_W: f64 = 1e-14;

fn segment_metric<P: Potential + ?Sized>(pot: &P, a: PlanePoint, b: PlanePoint) -> f64 {
    let mid = a.lerp(b, 0.5);
    (2.0 * pot.value(mid)).sqrt() * a.distance(b)
}

/// Maupertuis action: midpoint sum of `sqrt(2 W)` times segment length.
pub fn geometric_action<P: Potential + ?Sized>(pot: &P, path: &Path) -> f64 {
    path.nodes
        .windows(2)
        .map(|w| segment_metric(pot, w[0], w[1]))
        .sum()
}

/// `sum (|du|^2 / (2 dx) + dx (W_a + W_b) / 2)` over the segments of a path
/// carrying abscissae.
pub fn lagrangian_action<P: Potential + ?Sized>(pot: &P, path: &Path) -> Result<f64> {
    let xs = path
        .abscissae
        .as_ref()
        .ok_or_else(|| Error::InvalidPath("lagrangian action needs abscissae".into()))?;
    if let Some(index) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneAbscissae { index: index + 1 });
    }
    let w: Vec<f64> = path.nodes.iter().map(|&u| pot.value(u)).collect();
    let mut total = 0.0;
    for k in 0..path.nodes.len() - 1 {
        let dx = xs[k + 1] - xs[k];
        let du2 = (path.nodes[k + 1] - path.nodes[k]).norm_sq();
        total += 0.5 * du2 / dx + 0.5 * dx * (w[k] + w[k + 1]);
    }
    Ok(total)
}

/// Time spent on the straight segment `a -> b` at equipartition speed.
fn segment_time<P: Potential + ?Sized>(pot: &P, a: PlanePoint, b: PlanePoint, end: bool) -> f64 {
    let len = a.distance(b);
    if len == 0.0 {
        return 0.0;
    }
    if end {
        // The integrand diverges at a well; the midpoint value truncates it.
        return len / (2.0 * pot.value(a.lerp(b, 0.5))).sqrt();
    }
    let d = b - a;
    let g = |t: f64| 1.0 / (2.0 * pot.value(a + d * t)).sqrt();
    let scale = g(0.5);
    quadrature::integrate(g, 0.0, 1.0, 1e-12 * scale).integral * len
}

/// Equipartition abscissae `x1 = int |du| / sqrt(2 W)` along the polyline,
/// shifted so the node nearest the `u2`-axis sits at `x1 = 0`. Interior
/// segments use adaptive quadrature; the two end segments, where the
/// integrand diverges at the wells, use the midpoint rule.
pub fn reparametrize_equipartition<P: Potential + ?Sized>(pot: &P, path: &Path) -> Result<Path> {
    let n = path.nodes.len();
    if n < 3 {
        return Err(Error::InvalidPath(
            "need at least 3 nodes to reparametrize".into(),
        ));
    }
    for (index, &u) in path.nodes.iter().enumerate().take(n - 1).skip(1) {
        let value = pot.value(u);
        if value <= ZERO_W {
            return Err(Error::SpuriousMinimum { index, value });
        }
    }
    let mut xs = Vec::with_capacity(n);
    xs.push(0.0);
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let end = k == 0 || k == n - 2;
        acc += segment_time(pot, path.nodes[k], path.nodes[k + 1], end);
        xs.push(acc);
    }
    let center = path
        .nodes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.u1.abs().total_cmp(&b.1.u1.abs()))
        .map(|(i, _)| i)
        .unwrap();
    let shift = xs[center];
    for x in &mut xs {
        *x -= shift;
    }
    let mut out = path.clone();
    out.abscissae = None;
    out.with_abscissae(xs)
}

fn stencil_start(i: usize, n: usize) -> usize {
    // Five-point stencils kept inside the interior nodes 1..=n-2.
    if n < 7 {
        return i.saturating_sub(1).min(n.saturating_sub(3));
    }
    i.saturating_sub(2).clamp(1, n - 6)
}

fn nodal_derivatives(path: &Path, order: usize) -> Result<Vec<(PlanePoint, PlanePoint)>> {
    let xs = path
        .abscissae
        .as_ref()
        .ok_or_else(|| Error::InvalidPath("residuals need abscissae".into()))?;
    let n = xs.len();
    let width = if n < 7 { 3.min(n) } else { 5 };
    let mut out = Vec::with_capacity(n.saturating_sub(2));
    for i in 1..n - 1 {
        let s = stencil_start(i, n);
        let w = fd_weights(xs[i], &xs[s..s + width], order);
        let mut d1 = PlanePoint::ORIGIN;
        let mut d2 = PlanePoint::ORIGIN;
        for (k, &u) in path.nodes[s..s + width].iter().enumerate() {
            d1 += u * w[1][k];
            if order >= 2 {
                d2 += u * w[2][k];
            }
        }
        out.push((d1, d2));
    }
    Ok(out)
}

/// Max over interior nodes of `| |U'|^2 / 2 - W(U) |`, and the max of `W`
/// along the path.
pub fn equipartition_residual<P: Potential + ?Sized>(pot: &P, path: &Path) -> Result<(f64, f64)> {
    let d = nodal_derivatives(path, 1)?;
    let mut worst = 0.0f64;
    let mut max_w = 0.0f64;
    for (i, (d1, _)) in d.iter().enumerate() {
        let w = pot.value(path.nodes[i + 1]);
        max_w = max_w.max(w);
        worst = worst.max((0.5 * d1.norm_sq() - w).abs());
    }
    Ok((worst, max_w))
}

/// Max over interior nodes of `|U'' - W_u(U)|`, and the max of `|W_u|`.
pub fn ode_residual<P: Potential + ?Sized>(pot: &P, path: &Path) -> Result<(f64, f64)> {
    let d = nodal_derivatives(path, 2)?;
    let mut worst = 0.0f64;
    let mut max_g = 0.0f64;
    for (i, (_, d2)) in d.iter().enumerate() {
        let g = pot.gradient(path.nodes[i + 1]);
        max_g = max_g.max(g.norm());
        worst = worst.max((*d2 - g).norm());
    }
    Ok((worst, max_g))
}

pub fn min_pole_distance<P: Potential + ?Sized>(pot: &P, nodes: &[PlanePoint]) -> f64 {
    nodes
        .iter()
        .map(|&u| pot.pole_distance(u))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn straight_oracle(eps: f64) -> f64 {
        // int_{-1}^{1} sqrt(2) (1 - s^2) / (s^2 + eps^2) ds
        2f64.sqrt() * (-2.0 + 2.0 * (1.0 + eps * eps) / eps * (1.0 / eps).atan())
    }

    #[test]
    fn straight_segment_action() {
        let p = PotentialSpec::w1(1.0).unwrap();
        let path = Path::segment(PlanePoint::A_MINUS, PlanePoint::A_PLUS, 2001).unwrap();
        let a = geometric_action(&p, &path);
        assert!((a - straight_oracle(1.0)).abs() < 1e-4);
        assert!((a - 1.6145).abs() < 1e-4);
    }

    #[test]
    fn degenerate_path_has_zero_action() {
        let p = PotentialSpec::w2(0.2, 0.7).unwrap();
        let path = Path::new(
            vec![PlanePoint::A_PLUS; 5],
            crate::path::Classification::Scalar,
        )
        .unwrap();
        assert_eq!(geometric_action(&p, &path), 0.0);
    }

    #[test]
    fn small_eps_circle_limit() {
        let p = PotentialSpec::w1(1e-3).unwrap();
        let path = Path::semicircle(1.0, 4001, true).unwrap();
        let oracle = 4.0 * 2f64.sqrt();
        assert!((geometric_action(&p, &path) - oracle).abs() < 0.01 * oracle);
    }

    #[test]
    fn constant_path_lagrangian_zero() {
        let p = PotentialSpec::w1(0.5).unwrap();
        let path = Path::new(
            vec![PlanePoint::A_PLUS; 11],
            crate::path::Classification::Scalar,
        )
        .unwrap()
        .with_abscissae((0..11).map(|k| k as f64).collect())
        .unwrap();
        assert_eq!(lagrangian_action(&p, &path).unwrap(), 0.0);
    }

    #[test]
    fn compressed_grid_costs_more() {
        let p = PotentialSpec::w1(1.0).unwrap();
        let seg = Path::segment(PlanePoint::A_MINUS, PlanePoint::A_PLUS, 1001).unwrap();
        let eq = reparametrize_equipartition(&p, &seg).unwrap();
        let xs: Vec<f64> = eq
            .abscissae
            .clone()
            .unwrap()
            .iter()
            .map(|x| 0.5 * x)
            .collect();
        let squeezed = seg.clone().with_abscissae(xs).unwrap();
        let l_eq = lagrangian_action(&p, &eq).unwrap();
        let l_sq = lagrangian_action(&p, &squeezed).unwrap();
        assert!(l_sq > l_eq);
        assert!((l_eq - geometric_action(&p, &seg)).abs() < 1e-3 * l_eq);
    }

    #[test]
    fn reparametrize_rejects_interior_zero() {
        let p = PotentialSpec::w1(1.0).unwrap();
        let nodes = vec![
            PlanePoint::A_MINUS,
            PlanePoint::new(0.0, 0.3),
            PlanePoint::A_PLUS,
            PlanePoint::new(1.5, 0.2),
        ];
        let path = Path::from_nodes(nodes).unwrap();
        assert!(matches!(
            reparametrize_equipartition(&p, &path),
            Err(Error::SpuriousMinimum { index: 2, .. })
        ));
    }

    #[test]
    fn circle_arc_abscissae_increase() {
        let p = PotentialSpec::w1(0.2887).unwrap();
        let arc = Path::semicircle(1.0, 301, true).unwrap();
        let r = reparametrize_equipartition(&p, &arc).unwrap();
        let xs = r.abscissae.unwrap();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(xs[150], 0.0);
    }
}
