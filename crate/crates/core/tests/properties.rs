use proptest::prelude::*;

use fourier_lab::hermite::{coeffs_from_grid, grid_from_coeffs, Basis, BasisSpec};
use fourier_lab::operator::{fourier_operator, fractional_operator, k_operator, parity_operator, RegroupingPlan};
use fourier_lab::symmetry::random_interior_states;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regrouped_square_is_parity(n in 4usize..40, seed in any::<u64>()) {
        let k = k_operator::<f64>(&RegroupingPlan::random(n, seed).unwrap());
        prop_assert_eq!(k.compose(&k), parity_operator(n));
        prop_assert!(k.pow(4).distance(&fourier_lab::operator::OperatorMatrix::identity(n)) == 0.0);
    }

    #[test]
    fn plan_json_round_trip(n in 4usize..40, seed in any::<u64>()) {
        let plan = RegroupingPlan::random(n, seed).unwrap();
        let text = serde_json::to_string(&plan).unwrap();
        let back: RegroupingPlan = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, plan);
    }

    #[test]
    fn rotation_preserves_norm(theta in -10.0f64..10.0, seed in 0u64..1000) {
        let s = &random_interior_states::<f64>(24, 1, seed).unwrap()[0];
        let r = fractional_operator(24, theta).apply(s);
        prop_assert!((r.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_inverse_is_cube(n in 4usize..64) {
        let f = fourier_operator::<f64>(n);
        prop_assert_eq!(f.inverse().unwrap(), f.pow(3));
    }
}

#[test]
fn coefficient_grid_round_trip() {
    let basis = Basis::<f64>::new(BasisSpec::new(48, 96).unwrap()).unwrap();
    for seed in 0..8 {
        let s = &random_interior_states::<f64>(48, 1, seed).unwrap()[0];
        let back = coeffs_from_grid(&grid_from_coeffs(s, &basis.matrix).unwrap(), &basis.matrix).unwrap();
        assert!(back.distance(s) < 1e-12);
    }
}
