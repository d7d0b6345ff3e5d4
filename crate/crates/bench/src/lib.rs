//! Fixtures for the criterion benches: small inputs with known behavior,
//! sized so a full bench run stays interactive.

use trl_core::{
    ConstructionParams, DiagonalTemplate, FieldSpec, IndexSet, Label, MFamily, PiFamily, Result,
    Scalar, Tensor3,
};

/// The three-term tensor whose exact rank (3) exceeds its flattening
/// bound (2), forcing the search through a failing level.
pub fn w_state(field: FieldSpec) -> Result<Tensor3<Scalar>> {
    let axes = [
        IndexSet::positional(2),
        IndexSet::positional(2),
        IndexSet::positional(2),
    ];
    Ok(Tensor3::from_fn(axes, field.zero(), |i, j, k| {
        if i + j + k == 1 {
            field.one()
        } else {
            field.zero()
        }
    }))
}

/// A three-slot family over tuple length 2 and alphabet size 3: big enough
/// to exercise the member materialization, small enough to realize fully.
pub fn desk_family(cap: u128) -> Result<(ConstructionParams, PiFamily, MFamily)> {
    let params = ConstructionParams::desk(3, 2, 3, 17)?;
    let pi = PiFamily::canonical(params.r, params.theta)?;
    let rows: Vec<Label> = (1..=params.r)
        .map(|i| Label::atom(format!("a{i}")))
        .collect::<Result<_>>()?;
    let cols: Vec<Label> = (1..=params.r)
        .map(|i| Label::atom(format!("b{i}")))
        .collect::<Result<_>>()?;
    let template = DiagonalTemplate::new(rows, cols)?;
    let family = trl_core::build_m_family(&params, &template, &pi, cap)?;
    Ok((params, pi, family))
}
