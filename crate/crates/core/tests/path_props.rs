use proptest::prelude::*;

use allen_cahn::connections::geometric_action;
use allen_cahn::{DihedralElement, Path, PlanePoint, PotentialSpec};

fn random_path() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.5f64..1.5, 0.3f64..1.5), 3..40)
}

fn build(interior: &[(f64, f64)]) -> Path {
    let mut nodes = vec![PlanePoint::A_MINUS];
    nodes.extend(interior.iter().map(|&(a, b)| PlanePoint::new(a, b)));
    nodes.push(PlanePoint::A_PLUS);
    Path::from_nodes(nodes).unwrap()
}

proptest! {
    #[test]
    fn action_is_invariant_under_the_group(interior in random_path(), eps in 0.1f64..1.0) {
        let spec = PotentialSpec::w1(eps).unwrap();
        let p = build(&interior);
        let a = geometric_action(&spec, &p);
        for g in DihedralElement::ALL {
            let b = geometric_action(&spec, &p.transformed(g));
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{g:?}: {a} vs {b}");
        }
    }

    #[test]
    fn csv_round_trip_is_exact(interior in random_path()) {
        let p = build(&interior);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = Path::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&q.nodes, &p.nodes);
    }
}
