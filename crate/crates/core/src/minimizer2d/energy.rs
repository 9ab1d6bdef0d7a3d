use rayon::prelude::*;

use super::{Field2D, StripDomain};
use crate::error::{Error, Result};
use crate::numerics::interp_linear;
use crate::path::Path;
use crate::potential::{PlanePoint, Potential, PotentialSpec};

/// Trapezoid weight of grid line `k` out of `n`.
fn end_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k + 1 == n {
        0.5
    } else {
        1.0
    }
}

fn row_energy(spec: &PotentialSpec, field: &Field2D, j: usize) -> f64 {
    let d = &field.domain;
    let h2 = d.h * d.h;
    let wr = end_weight(j, d.ny);
    let row = field.row(j);
    let mut e = 0.0;
    for i in 0..d.nx {
        let u = row[i];
        e += wr * end_weight(i, d.nx) * h2 * spec.value(u);
        if i + 1 < d.nx {
            e += 0.5 * wr * (row[i + 1] - u).norm_sq();
        }
        if j + 1 < d.ny {
            e += 0.5 * end_weight(i, d.nx) * (field.at(i, j + 1) - u).norm_sq();
        }
    }
    e
}

/// Discrete energy: each cell carries half the squared differences of its
/// four edges, so edges on the boundary count half, plus the trapezoid sum of
/// `W`. Rows are summed in a fixed order.
pub fn energy(spec: &PotentialSpec, field: &Field2D) -> f64 {
    let parts: Vec<f64> = (0..field.domain.ny)
        .into_par_iter()
        .map(|j| row_energy(spec, field, j))
        .collect();
    parts.iter().sum()
}

/// Energy and its exact gradient with respect to the nodal values.
pub fn energy_and_gradient(spec: &PotentialSpec, field: &Field2D) -> (f64, Vec<PlanePoint>) {
    let d = field.domain;
    let h2 = d.h * d.h;
    let rows: Vec<(f64, Vec<PlanePoint>)> = (0..d.ny)
        .into_par_iter()
        .map(|j| {
            let wr = end_weight(j, d.ny);
            let mut g = Vec::with_capacity(d.nx);
            for i in 0..d.nx {
                let u = field.at(i, j);
                let wc = end_weight(i, d.nx);
                let mut gi = spec.gradient(u) * (wr * wc * h2);
                if i > 0 {
                    gi += (u - field.at(i - 1, j)) * wr;
                }
                if i + 1 < d.nx {
                    gi += (u - field.at(i + 1, j)) * wr;
                }
                if j > 0 {
                    gi += (u - field.at(i, j - 1)) * wc;
                }
                if j + 1 < d.ny {
                    gi += (u - field.at(i, j + 1)) * wc;
                }
                g.push(gi);
            }
            (row_energy(spec, field, j), g)
        })
        .collect();
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(d.len());
    for (e, g) in rows {
        total += e;
        grad.extend(g);
    }
    (total, grad)
}

/// `a-` for `x1 <= -1`, the straight segment for `|x1| <= 1`, `a+` beyond.
pub fn build_affine(domain: StripDomain, constraint_r: f64) -> Field2D {
    Field2D::from_fn(domain, constraint_r, |x1, _| {
        let t = x1.clamp(-1.0, 1.0);
        PlanePoint::A_MINUS * (0.5 * (1.0 - t)) + PlanePoint::A_PLUS * (0.5 * (1.0 + t))
    })
}

/// Value of a parametrized connection at `x1`, constant beyond its ends.
pub fn profile_at(path: &Path, x1: f64) -> Result<PlanePoint> {
    let xs = path
        .abscissae
        .as_ref()
        .ok_or_else(|| Error::InvalidPath("connection profile needs abscissae".into()))?;
    let u1: Vec<f64> = path.nodes.iter().map(|u| u.u1).collect();
    let u2: Vec<f64> = path.nodes.iter().map(|u| u.u2).collect();
    Ok(PlanePoint::new(
        interp_linear(xs, &u1, x1),
        interp_linear(xs, &u2, x1),
    ))
}

/// The comparison map: `e+` for `x2 >= 1`, `e-` for `x2 <= -1`, linear blend
/// in between. Built on the quadrant and extended equivariantly.
pub fn comparison_map(
    domain: StripDomain,
    constraint_r: f64,
    e_plus: &Path,
    e_minus: &Path,
) -> Result<Field2D> {
    let top: Vec<PlanePoint> = (0..domain.nx)
        .map(|i| profile_at(e_plus, domain.x1(i)))
        .collect::<Result<_>>()?;
    let bottom: Vec<PlanePoint> = (0..domain.nx)
        .map(|i| profile_at(e_minus, domain.x1(i)))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(domain.len());
    for j in 0..domain.ny {
        let s = domain.x2(j).clamp(-1.0, 1.0);
        for i in 0..domain.nx {
            values.push(top[i] * (0.5 * (1.0 + s)) + bottom[i] * (0.5 * (1.0 - s)));
        }
    }
    let mut f = Field2D {
        domain,
        values,
        constraint_r,
    };
    f.extend_from_quadrant();
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w1() -> PotentialSpec {
        PotentialSpec::w1(3f64.sqrt() / 6.0).unwrap()
    }

    #[test]
    fn constant_well_has_zero_energy_and_gradient() {
        let d = StripDomain::new(1.0, 2.0, 0.75, 0.25).unwrap();
        let f = Field2D::from_fn(d, 0.2, |_, _| PlanePoint::A_PLUS);
        let (e, g) = energy_and_gradient(&w1(), &f);
        assert_eq!(e, 0.0);
        assert!(g.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn affine_energy_matches_row_formula_and_continuum() {
        let spec = PotentialSpec::w1(0.2887).unwrap();
        let d = StripDomain::new(4.0, 2.0, 0.75, 0.1).unwrap();
        let f = build_affine(d, 0.2);
        let e = energy(&spec, &f);
        // Oracle 1: the field does not depend on x2, so the sum factors into
        // (ny - 1) copies of a 1D trapezoid sum.
        let row: f64 = (0..d.nx)
            .map(|i| {
                let x = d.x1(i);
                let u = PlanePoint::new(x.clamp(-1.0, 1.0), 0.0);
                let w = if i == 0 || i + 1 == d.nx { 0.5 } else { 1.0 };
                let mut s = w * d.h * d.h * spec.value(u);
                if i + 1 < d.nx {
                    let v = PlanePoint::new(d.x1(i + 1).clamp(-1.0, 1.0), 0.0);
                    s += 0.5 * (v - u).norm_sq();
                }
                s
            })
            .sum();
        assert!((e - (d.ny - 1) as f64 * row).abs() <= 1e-9 * e);
        // Oracle 2: the continuum value 2R (1 + int_{-1}^{1} W(s, 0) ds).
        let wint = quadrature::integrate(|s| spec.value(PlanePoint::new(s, 0.0)), -1.0, 1.0, 1e-12)
            .integral;
        let cont = 2.0 * 4.0 * (1.0 + wint);
        assert!(e > 0.0 && e.is_finite());
        assert!((e - cont).abs() <= 1e-2 * cont, "{e} vs {cont}");
    }

    #[test]
    fn affine_energy_grows_linearly_in_r() {
        let spec = w1();
        let ratios: Vec<f64> = [4.0, 6.0, 8.0]
            .iter()
            .map(|&r| {
                energy(
                    &spec,
                    &build_affine(StripDomain::new(r, 2.0, 0.75, 0.1).unwrap(), 0.2),
                ) / r
            })
            .collect();
        let c = ratios.iter().cloned().fold(0.0, f64::max);
        for q in &ratios {
            assert!(*q <= c && *q > 0.9 * c);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = w1();
        let d = StripDomain::new(1.0, 2.0, 0.75, 0.25).unwrap();
        let f = Field2D::from_fn(d, 0.2, |x1, x2| {
            PlanePoint::new(
                (0.7 * x1).tanh(),
                0.15 * (-x1 * x1).exp() * (x2 + 0.3).sin(),
            )
        });
        let (_, g) = energy_and_gradient(&spec, &f);
        let step = 1e-6;
        for k in (0..d.len()).step_by(d.len() / 20) {
            for comp in 0..2 {
                let mut fp = f.clone();
                let mut fm = f.clone();
                if comp == 0 {
                    fp.values[k].u1 += step;
                    fm.values[k].u1 -= step;
                } else {
                    fp.values[k].u2 += step;
                    fm.values[k].u2 -= step;
                }
                let fd = (energy(&spec, &fp) - energy(&spec, &fm)) / (2.0 * step);
                let an = if comp == 0 { g[k].u1 } else { g[k].u2 };
                assert!(
                    (fd - an).abs() <= 1e-4 * an.abs().max(1e-3),
                    "{k} {comp}: {fd} vs {an}"
                );
            }
        }
    }
}
