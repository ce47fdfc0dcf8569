use eitsdp_core::linalg::{eigh, lambda_max_value, lambda_min_value, loewner_leq};
use eitsdp_core::{Geometry, MeasurementModel, SymMatrix};
use proptest::prelude::*;

fn model(m: usize) -> MeasurementModel {
    MeasurementModel::new(Geometry::new(vec![0.7, 0.45, 0.2]).unwrap(), m).unwrap()
}

fn sigma4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..5.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scale_law(s in sigma4(), k in 0.1f64..10.0, m in 1usize..24) {
        let md = model(m);
        let scaled: Vec<f64> = s.iter().map(|v| v * k).collect();
        let a = md.diagonal(&s).unwrap();
        let b = md.diagonal(&scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y * k - x).abs() <= 1e-12 * x);
        }
    }

    #[test]
    fn bracketing(s in sigma4(), m in 1usize..24) {
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(0.0, f64::max);
        let md = model(m);
        for (k, v) in md.diagonal(&s).unwrap().iter().enumerate() {
            let j = (k / 2 + 1) as f64;
            prop_assert!(*v <= 1.0 / (j * lo) * (1.0 + 1e-14));
            prop_assert!(*v >= 1.0 / (j * hi) * (1.0 - 1e-14));
        }
    }

    #[test]
    fn monotone_decreasing(t in sigma4(), bump in prop::collection::vec(0.0f64..2.0, 4), m in 1usize..24) {
        let md = model(m);
        let s: Vec<f64> = t.iter().zip(&bump).map(|(a, b)| a + b).collect();
        prop_assert!(loewner_leq(&md.assemble_f(&s).unwrap(), &md.assemble_f(&t).unwrap(), 1e-12).unwrap());
    }

    #[test]
    fn convex(s in sigma4(), t in sigma4(), w in 0.0f64..1.0, m in 1usize..24) {
        let md = model(m);
        let mid: Vec<f64> = s.iter().zip(&t).map(|(a, b)| w * a + (1.0 - w) * b).collect();
        let mut rhs = md.assemble_f(&s).unwrap().scaled(w);
        rhs.add_scaled(1.0 - w, &md.assemble_f(&t).unwrap());
        prop_assert!(loewner_leq(&md.assemble_f(&mid).unwrap(), &rhs, 1e-12).unwrap());
    }

    #[test]
    fn taylor_remainder_nonnegative(s in sigma4(), t in sigma4(), m in 1usize..24) {
        let md = model(m);
        let d: Vec<f64> = t.iter().zip(&s).map(|(a, b)| a - b).collect();
        let mut rem = md.assemble_f(&t).unwrap().try_sub(&md.assemble_f(&s).unwrap()).unwrap();
        rem.add_scaled(-1.0, &md.assemble_jacobian(&s).unwrap().directional(&d));
        prop_assert!(lambda_min_value(&rem).unwrap() >= -1e-10);
    }

    #[test]
    fn derivative_monotone(s in sigma4(), d in prop::collection::vec(-1.0f64..1.0, 4),
                           bump in prop::collection::vec(0.0f64..1.0, 4), m in 1usize..24) {
        let md = model(m);
        let jac = md.assemble_jacobian(&s).unwrap();
        let big: Vec<f64> = d.iter().zip(&bump).map(|(a, b)| a + b).collect();
        prop_assert!(loewner_leq(&jac.directional(&big), &jac.directional(&d), 1e-12).unwrap());
    }

    #[test]
    fn eigh_reconstructs(order in 1usize..10, seed in prop::collection::vec(-1.0f64..1.0, 45)) {
        let mut a = SymMatrix::zeros(order);
        let mut it = seed.iter();
        for i in 0..order {
            for j in i..order {
                a.set(i, j, *it.next().unwrap());
            }
        }
        let eig = eigh(&a).unwrap();
        let err = eig.reconstruct().try_sub(&a).unwrap().frobenius_norm();
        prop_assert!(err <= 1e-12 * a.frobenius_norm().max(1.0));
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lambda_max_shift(vals in prop::collection::vec(-5.0f64..5.0, 1..8), t in -3.0f64..3.0) {
        let a = SymMatrix::from_diagonal(&vals);
        let base = lambda_max_value(&a).unwrap();
        let shifted = lambda_max_value(&a.shifted(t)).unwrap();
        prop_assert!((shifted - base - t).abs() <= 1e-12 * (1.0 + base.abs()));
    }
}
