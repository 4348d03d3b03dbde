mod common;

use common::{rng, space, tol};
use deddens_core::algebras::{
    bt_empirical, bt_quasi_isometry, bt_rank_one, d_coeff, deddens_empirical, deddens_rank_one,
    deddens_similar_rank_one, RmFamily, VerdictState,
};
use deddens_core::hilbert::{hermitian_sqrt, operator_gap, rank_one};
use deddens_core::workbench::{
    eigen_member, eigen_violator, random_invertible, random_operator, random_polynomial_in, random_unit_vector,
};
use deddens_core::{Operator, ToleranceConfig};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig::with_cases(cases)
}

fn pinv_inverse(a: &Operator) -> Operator {
    deddens_core::hilbert::pinv(a, &ToleranceConfig::default())
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn commutant_is_in_deddens_and_deddens_is_in_bt(seed in any::<u64>(), n in 1usize..7, radius in 0.2f64..1.5) {
        let mut r = rng(seed);
        let s = space(&mut r, n);
        let t = random_operator(&mut r, &s, radius);
        let p = random_polynomial_in(&mut r, &t);
        let d = deddens_empirical(&t, &p, &tol()).unwrap();
        // ill-conditioned powers may stop the profile early; never Out
        prop_assert_ne!(d.state, VerdictState::Out, "{}", d.reason);
        let other = random_operator(&mut r, &s, 1.0);
        for sop in [&p, &other] {
            let d = deddens_empirical(&t, sop, &tol()).unwrap();
            if d.is_in() {
                match bt_empirical(&t, sop, &tol()) {
                    Ok(b) => prop_assert!(!b.is_out(), "D_T In but B_T Out: {}", b.reason),
                    Err(deddens_core::Error::TruncationFailure { .. }) => {}
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
    }

    #[test]
    fn rm_members_are_self_adjoint_and_dominate_identity(seed in any::<u64>(), n in 1usize..7, radius in 0.0f64..1.2) {
        let mut r = rng(seed);
        let s = space(&mut r, n);
        let t = random_operator(&mut r, &s, radius);
        let tol = tol();
        let fam = match RmFamily::build(&t, &tol) {
            Ok(f) => f,
            Err(deddens_core::Error::TruncationFailure { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for m in &fam.members {
            prop_assert!(operator_gap(&m.r_m.adjoint(), &m.r_m) <= tol.residual_tol);
            prop_assert!(m.tail_estimate <= tol.series_term_tol);
            // R_m² − I is positive: its square root exists
            let excess = &(&m.r_m * &m.r_m) - &Operator::identity(&s);
            prop_assert!(hermitian_sqrt(&excess, &tol).is_ok());
        }
    }

    #[test]
    fn transport_coherence(seed in any::<u64>(), n in 2usize..7, member in any::<bool>()) {
        let mut r = rng(seed);
        let s = space(&mut r, n);
        let (x, y) = (random_unit_vector(&mut r, &s), random_unit_vector(&mut r, &s));
        let sop = if member { eigen_member(&mut r, &y) } else { eigen_violator(&mut r, &y) };
        let a = random_invertible(&mut r, &s, 100.0);
        let a_inv = pinv_inverse(&a);
        // S ∈ D_{x⊗y} iff A⁻¹SA ∈ D_{A⁻¹(x⊗y)A}
        let original = deddens_rank_one(&x, &y, &sop, &tol()).unwrap();
        let moved = &(&a_inv * &sop) * &a;
        let transported = deddens_similar_rank_one(&a, &x, &y, &moved, &tol()).unwrap();
        prop_assert_eq!(original, member);
        prop_assert_eq!(original, transported);
        let _ = rank_one(&x, &y).unwrap();
    }

    #[test]
    fn rank_one_predicates_coincide(seed in any::<u64>(), n in 2usize..7, member in any::<bool>()) {
        let mut r = rng(seed);
        let s = space(&mut r, n);
        let (x, y) = (random_unit_vector(&mut r, &s), random_unit_vector(&mut r, &s));
        let sop = if member { eigen_member(&mut r, &y) } else { random_operator(&mut r, &s, 1.0) };
        prop_assert_eq!(deddens_rank_one(&x, &y, &sop, &tol()).unwrap(), bt_rank_one(&y, &sop, &tol()).unwrap());
    }

    #[test]
    fn bt_of_zero_quasi_isometry_is_everything(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let s = space(&mut r, n);
        let sop = random_operator(&mut r, &s, 3.0);
        let v = bt_quasi_isometry(&Operator::zeros(&s), &sop, &tol()).unwrap();
        prop_assert!(v.is_in());
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn d_coefficients_increase_below_reciprocal_radius(m in 1usize..500, r in 0.0f64..10.0) {
        prop_assert!(d_coeff(m + 1, r) > d_coeff(m, r));
        if r > 0.0 {
            prop_assert!(d_coeff(m, r) < 1.0 / r);
        }
    }
}
