mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn polynomial_is_homogeneous(case in homogeneity_case()) {
        check_homogeneity(case)?;
    }

    #[test]
    fn attractor_scales_with_time(case in scaling_case()) {
        check_scaling(case)?;
    }

    #[test]
    fn exponent_trace_is_invariant(case in trace_case()) {
        check_trace(case)?;
    }

    #[test]
    fn conjugate_is_dual_homogeneous(case in legendre_case()) {
        check_legendre_homogeneity(case)?;
    }

    #[test]
    fn conjugate_is_comparable_to_mixed_norm(case in norm_bound_case()) {
        check_norm_bounds(case)?;
    }
}

#[test]
fn unit_degree_monomials_of_mixed_weights() {
    let mut got = unit_degree_monomials(&[3, 2]);
    got.sort();
    assert_eq!(got, vec![vec![0, 4], vec![3, 2], vec![6, 0]]);
}
