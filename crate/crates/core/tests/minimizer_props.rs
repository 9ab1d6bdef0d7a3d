use proptest::prelude::*;

use allen_cahn::minimizer2d::{clip, energy, fold, Field2D, StripDomain};
use allen_cahn::potential::ConvexSetC0;
use allen_cahn::{PlanePoint, PotentialSpec};

fn small_domain() -> StripDomain {
    StripDomain::new(1.0, 2.0, 0.75, 0.25).unwrap()
}

/// Equivariant field built from arbitrary quadrant values.
fn equivariant(values: &[(f64, f64)], r: f64) -> Field2D {
    let d = small_domain();
    let mut f = Field2D::from_fn(d, r, |_, _| PlanePoint::ORIGIN);
    for (k, v) in f.values.iter_mut().enumerate() {
        let (a, b) = values[k % values.len()];
        *v = PlanePoint::new(a, b);
    }
    f.extend_from_quadrant();
    f
}

fn quadrant_values() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.8f64..1.8, -1.8f64..1.8), 16..64)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn fold_never_raises_the_energy(values in quadrant_values(), eps in 0.2f64..1.0) {
        let spec = PotentialSpec::w1(eps).unwrap();
        let f = equivariant(&values, 0.2);
        let g = fold(&f).unwrap();
        let (e0, e1) = (energy(&spec, &f), energy(&spec, &g));
        prop_assert!(e1 <= e0 + 1e-12 * e0.abs().max(1.0), "{e0} -> {e1}");
        prop_assert_eq!(g.equivariance_error(), 0.0);
        prop_assert_eq!(fold(&g).unwrap(), g);
    }

    #[test]
    fn clip_is_feasible_idempotent_and_nonexpansive(
        a in quadrant_values(),
        b in quadrant_values(),
        r in 0.05f64..0.5,
        radius in 1.5f64..3.0,
    ) {
        let c0 = ConvexSetC0::disk(radius);
        let (fa, fb) = (equivariant(&a, r), equivariant(&b, r));
        let (ca, cb) = (clip(&fa, &c0), clip(&fb, &c0));
        let d = fa.domain;
        for j in 0..d.ny {
            for i in 0..d.nx {
                let u = ca.at(i, j);
                prop_assert!(u.norm() <= radius + 1e-12);
                match d.constraint_side(i) {
                    1 => prop_assert!(u.distance(PlanePoint::A_PLUS) <= r + 1e-12),
                    -1 => prop_assert!(u.distance(PlanePoint::A_MINUS) <= r + 1e-12),
                    _ => {}
                }
                let before = fa.at(i, j).distance(fb.at(i, j));
                prop_assert!(u.distance(cb.at(i, j)) <= before + 1e-12);
            }
        }
        let again = clip(&ca, &c0);
        let drift = again.values.iter().zip(&ca.values).map(|(x, y)| x.distance(*y)).fold(0.0, f64::max);
        prop_assert!(drift <= 1e-14, "second clip moved a node by {drift}");
        prop_assert!(ca.equivariance_error() <= 1e-15);
    }
}
