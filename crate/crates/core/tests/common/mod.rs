//! Shared fixtures for the integration suite: an engine-independent
//! brute-force ranker for 2x2x2 tensors over F_2, and the seven-term
//! bilinear witness for 2x2 matrix multiplication.
//!
//! The brute-force ranker never touches the search engine: a tensor is a
//! bitmask over the eight positions, a rank-one tensor is the AND-product
//! of three nonzero two-bit vectors, and the rank of every mask is the
//! XOR-distance from zero computed by breadth-first search over all 256
//! states.  Any disagreement with the engine is a bug in exactly one of
//! two fully independent implementations.

#![allow(dead_code)]

use trl_core::rank::Decomposition;
use trl_core::{FieldSpec, IndexSet, Scalar, Tensor3};

pub fn f2() -> FieldSpec {
    FieldSpec::fp(2).unwrap()
}

pub fn f5() -> FieldSpec {
    FieldSpec::fp(5).unwrap()
}

/// Bit `i * 4 + j * 2 + k` of the mask holds entry `(i, j, k)`.
pub fn mask_bit(mask: u8, i: usize, j: usize, k: usize) -> bool {
    mask >> (i * 4 + j * 2 + k) & 1 == 1
}

/// All 27 rank-one masks: AND-products of nonzero vectors in F_2^2.
pub fn rank_one_masks() -> Vec<u8> {
    let mut out = Vec::with_capacity(27);
    for u in 1u8..4 {
        for v in 1u8..4 {
            for w in 1u8..4 {
                let mut mask = 0u8;
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            if u >> i & 1 == 1 && v >> j & 1 == 1 && w >> k & 1 == 1 {
                                mask |= 1 << (i * 4 + j * 2 + k);
                            }
                        }
                    }
                }
                out.push(mask);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Exact rank of every 2x2x2 tensor over F_2 by breadth-first search:
/// `table[mask]` is the least number of rank-one masks XOR-ing to `mask`.
pub fn brute_force_f2_ranks() -> [u8; 256] {
    let generators = rank_one_masks();
    let mut table = [u8::MAX; 256];
    table[0] = 0;
    let mut frontier = vec![0u8];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &state in &frontier {
            for &g in &generators {
                let reached = state ^ g;
                if table[reached as usize] == u8::MAX {
                    table[reached as usize] = table[state as usize] + 1;
                    next.push(reached);
                }
            }
        }
        frontier = next;
    }
    table
}

/// The mask as a labeled scalar tensor over F_2 on positional axes.
pub fn mask_tensor(mask: u8) -> Tensor3<Scalar> {
    let field = f2();
    let axes = [
        IndexSet::positional(2),
        IndexSet::positional(2),
        IndexSet::positional(2),
    ];
    Tensor3::from_fn(axes, field.zero(), |i, j, k| {
        if mask_bit(mask, i, j, k) {
            field.one()
        } else {
            field.zero()
        }
    })
}

fn pair_axis() -> IndexSet {
    IndexSet::from_atoms(&["11", "12", "21", "22"]).unwrap()
}

/// The 2x2 matrix multiplication tensor: entry `((i,j),(k,l),(m,n))` is one
/// exactly when `j = k`, `l = m` and `n = i`, so contracting the first two
/// axes against matrices `A` and `B` leaves `(AB)` transposed on the third.
pub fn mm_tensor(field: FieldSpec) -> Tensor3<Scalar> {
    let axes = [pair_axis(), pair_axis(), pair_axis()];
    Tensor3::from_fn(axes, field.zero(), |a, b, c| {
        let (i, j) = (a / 2, a % 2);
        let (k, l) = (b / 2, b % 2);
        let (m, n) = (c / 2, c % 2);
        if j == k && l == m && n == i {
            field.one()
        } else {
            field.zero()
        }
    })
}

/// The seven bilinear products, each as `(a, b, c)` coefficient vectors on
/// the `[11, 12, 21, 22]` label order.  The `c` vector of a product is its
/// contribution to the transposed result, matching [`mm_tensor`].
pub fn seven_term_witness(field: FieldSpec) -> Decomposition {
    let v =
        |coeffs: [i64; 4]| -> Vec<Scalar> { coeffs.iter().map(|&x| field.from_i64(x)).collect() };
    Decomposition::new(vec![
        (v([1, 0, 0, 1]), v([1, 0, 0, 1]), v([1, 0, 0, 1])),
        (v([0, 0, 1, 1]), v([1, 0, 0, 0]), v([0, 1, 0, -1])),
        (v([1, 0, 0, 0]), v([0, 1, 0, -1]), v([0, 0, 1, 1])),
        (v([0, 0, 0, 1]), v([-1, 0, 1, 0]), v([1, 1, 0, 0])),
        (v([1, 1, 0, 0]), v([0, 0, 0, 1]), v([-1, 0, 1, 0])),
        (v([-1, 0, 1, 0]), v([1, 1, 0, 0]), v([0, 0, 0, 1])),
        (v([0, 1, 0, -1]), v([0, 0, 1, 1]), v([1, 0, 0, 0])),
    ])
}
