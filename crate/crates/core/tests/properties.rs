//! Property tests for the rank engine's contracts: flattening bounds,
//! subadditivity under direct sums, clone invariance, and the degenerate
//! mod-space case.

mod common;

use common::{f2, mask_tensor};
use proptest::prelude::*;
use trl_core::rank::{
    exact_rank, flattening_lower_bound, min_rank_mod, verify_decomposition, Decomposition,
    SearchBudget,
};
use trl_core::{Matrix, MatrixSpan, Scalar, Tensor3};

fn rank_of(t: &Tensor3<Scalar>) -> usize {
    exact_rank(t, &SearchBudget::default())
        .unwrap()
        .rank()
        .expect("search space is small enough to finish")
}

/// A rank-one 2x2 matrix over F_2 from two nonzero bit vectors.
fn bit_rank_one(
    rows: trl_core::IndexSet,
    cols: trl_core::IndexSet,
    u: u8,
    v: u8,
) -> Matrix<Scalar> {
    let field = f2();
    Matrix::from_fn(rows, cols, field.zero(), |r, c| {
        if u >> r & 1 == 1 && v >> c & 1 == 1 {
            field.one()
        } else {
            field.zero()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flattening_never_exceeds_the_exact_rank(mask in 0..=255u8) {
        let t = mask_tensor(mask);
        prop_assert!(flattening_lower_bound(&t) <= rank_of(&t));
    }

    #[test]
    fn witnesses_always_verify(mask in 0..=255u8) {
        let t = mask_tensor(mask);
        let cert = exact_rank(&t, &SearchBudget::default()).unwrap();
        prop_assert!(cert.exact);
        prop_assert!(verify_decomposition(&t, &cert.witness).unwrap());
        prop_assert_eq!(cert.witness.rank(), cert.upper);
    }

    #[test]
    fn rank_is_invariant_under_axis_permutation(mask in 0..=255u8, p in 0..6usize) {
        let perms = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]];
        let t = mask_tensor(mask);
        let q = t.permute_axes(perms[p]).unwrap();
        prop_assert_eq!(rank_of(&t), rank_of(&q));
    }

    #[test]
    fn mod_space_membership_never_raises_the_rank(mask in 0..=255u8, u in 1..4u8, v in 1..4u8) {
        let t = mask_tensor(mask);
        let field = f2();
        let gen = bit_rank_one(t.axis(1).clone(), t.axis(2).clone(), u, v);
        let span3 = MatrixSpan::from_generators(
            t.axis(1).clone(),
            t.axis(2).clone(),
            field,
            vec![gen],
        )
        .unwrap();
        let empty1 = MatrixSpan::empty(t.axis(2).clone(), t.axis(3).clone(), field);
        let empty2 = MatrixSpan::empty(t.axis(1).clone(), t.axis(3).clone(), field);
        let report =
            min_rank_mod(&t, [&empty1, &empty2, &span3], &SearchBudget::default()).unwrap();
        prop_assert!(report.exact);
        prop_assert!(report.upper <= rank_of(&t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn direct_sums_are_subadditive(m1 in 0..=255u8, m2 in 0..=255u8) {
        let a = mask_tensor(m1).retag("1").unwrap();
        let b = mask_tensor(m2).retag("2").unwrap();
        let sum = a.direct_sum(&b).unwrap();
        prop_assert!(rank_of(&sum) <= rank_of(&a) + rank_of(&b));
    }

    #[test]
    fn cloning_preserves_the_rank(mask in 0..=255u8) {
        let t = mask_tensor(mask);
        let cloned = t.clone_along(&["s1", "s2"]).unwrap();
        prop_assert_eq!(rank_of(&cloned), rank_of(&t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_decompositions_verify_and_bound_the_rank(
        u1 in 1..4u8, v1 in 1..4u8, w1 in 1..4u8,
        u2 in 1..4u8, v2 in 1..4u8, w2 in 1..4u8,
    ) {
        let field = f2();
        let vec2 = |bits: u8| -> Vec<Scalar> {
            (0..2).map(|i| field.from_i64((bits >> i & 1) as i64)).collect()
        };
        let d = Decomposition::new(vec![
            (vec2(u1), vec2(v1), vec2(w1)),
            (vec2(u2), vec2(v2), vec2(w2)),
        ]);
        let axes = [
            trl_core::IndexSet::positional(2),
            trl_core::IndexSet::positional(2),
            trl_core::IndexSet::positional(2),
        ];
        let t = d.to_tensor(axes, field).unwrap();
        prop_assert!(verify_decomposition(&t, &d).unwrap());
        prop_assert!(rank_of(&t) <= d.rank());
    }
}
