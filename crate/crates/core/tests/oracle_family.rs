//! Independent re-derivation of the indicator family: every member matrix
//! is rebuilt here from the raw digit rules, with no calls into the family
//! builder's own plumbing beyond parameter validation.

use std::collections::BTreeMap;

use trl_core::construction::{
    build_m_family, sigma_names, ConstructionParams, DiagonalTemplate, MemberKind, PiFamily,
    DEFAULT_MATERIALIZE_BUDGET,
};
use trl_core::{FieldSpec, IndexSet, Label, Matrix, Scalar};

fn params_213() -> ConstructionParams {
    ConstructionParams::desk(2, 1, 3, 17).unwrap()
}

fn hosts() -> (IndexSet, IndexSet) {
    (
        IndexSet::from_atoms(&["a1", "a2"]).unwrap(),
        IndexSet::from_atoms(&["b1", "b2"]).unwrap(),
    )
}

fn template() -> DiagonalTemplate {
    DiagonalTemplate::new(
        vec![Label::atom("a1").unwrap(), Label::atom("a2").unwrap()],
        vec![Label::atom("b1").unwrap(), Label::atom("b2").unwrap()],
    )
    .unwrap()
}

/// The member for tuple index `phi`, straight from the definition: slot `i`
/// reads the first or second base-σ digit of `phi` depending on the parity
/// of `i`, the row uses the read digit and the column the unread one, and
/// the matrix is the product-set indicator of those rows and columns.
fn hand_member(phi: u64, field: FieldSpec) -> Matrix<Scalar> {
    let sigma = 3u64;
    let (u1, u2) = (phi / sigma, phi % sigma);
    let (rows_host, cols_host) = hosts();
    let names = ["0", "1", "2"];
    let prows = rows_host.product(&names).unwrap();
    let pcols = cols_host.product(&names).unwrap();
    let mut m = Matrix::zeros(prows, pcols, field.zero());
    let digits = |slot: usize| if slot == 0 { (u1, u2) } else { (u2, u1) };
    for row_slot in 0..2usize {
        let (w, _) = digits(row_slot);
        for col_slot in 0..2usize {
            let (_, wp) = digits(col_slot);
            m.set(
                w as usize * 2 + row_slot,
                wp as usize * 2 + col_slot,
                field.one(),
            );
        }
    }
    m
}

#[test]
fn every_tuple_member_matches_the_hand_derivation() {
    let p = params_213();
    let pi = PiFamily::canonical(2, 1).unwrap();
    let family = build_m_family(&p, &template(), &pi, DEFAULT_MATERIALIZE_BUDGET).unwrap();
    let names = sigma_names(&p, DEFAULT_MATERIALIZE_BUDGET).unwrap();
    let (rows_host, cols_host) = hosts();
    let field = FieldSpec::Q;
    let mut seen = 0usize;
    for member in family.members() {
        let MemberKind::Phi { index } = member.kind else {
            continue;
        };
        seen += 1;
        let built = family
            .member_matrix(member, &rows_host, &cols_host, &names, field)
            .unwrap();
        let hand = hand_member(index as u64, field);
        assert_eq!(built.support(), hand.support(), "tuple {index}");
        for (r, c) in built.support() {
            assert_eq!(
                built.get(r, c),
                hand.get(r, c),
                "tuple {index} cell ({r},{c})"
            );
        }
    }
    assert_eq!(seen, 9, "one member per base-3 digit pair");
}

#[test]
fn hand_count_of_diagonal_coverage_is_exactly_one() {
    let mut counts: BTreeMap<(usize, u64, u64), u64> = BTreeMap::new();
    for phi in 0..9u64 {
        let (u1, u2) = (phi / 3, phi % 3);
        for (slot, (w, wp)) in [(0usize, (u1, u2)), (1, (u2, u1))] {
            *counts.entry((slot, w, wp)).or_insert(0) += 1;
        }
    }
    assert_eq!(counts.len(), 18, "both slots cover all nine digit pairs");
    assert!(counts.values().all(|&c| c == 1));
}

#[test]
fn unit_members_sit_on_covered_off_diagonal_cells() {
    let p = params_213();
    let pi = PiFamily::canonical(2, 1).unwrap();
    let family = build_m_family(&p, &template(), &pi, DEFAULT_MATERIALIZE_BUDGET).unwrap();
    let names = sigma_names(&p, DEFAULT_MATERIALIZE_BUDGET).unwrap();
    let (rows_host, cols_host) = hosts();
    let field = FieldSpec::Q;

    let mut covered: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for phi in 0..9u64 {
        let hand = hand_member(phi, field);
        for (r, c) in hand.support() {
            if r % 2 != c % 2 {
                *covered.entry((r, c)).or_insert(0) += 1;
            }
        }
    }

    let mut units = 0usize;
    for member in family.members() {
        if member.kind != MemberKind::Unit {
            continue;
        }
        units += 1;
        let m = family
            .member_matrix(member, &rows_host, &cols_host, &names, field)
            .unwrap();
        let support = m.support();
        assert_eq!(support.len(), 1, "a unit member has a single cell");
        let (r, c) = support[0];
        assert!(
            covered.contains_key(&(r, c)),
            "unit at ({r},{c}) must sit under some tuple member"
        );
    }
    assert_eq!(
        units,
        covered.len(),
        "one unit per covered off-diagonal cell"
    );
    assert_eq!(units, 6);
}
