//! Structured rank-one slice families and the direct-sum assembly pipeline.
//!
//! The central object is a family of rank-one 0-1 matrices attached to a
//! diagonal template.  Fix a template of `r` distinct row labels `a_1..a_r`
//! and column labels `b_1..b_r`, an alphabet size `sigma >= 2`, and a tuple
//! length `theta` with `r <= 2^theta`.  Write `Sigma` for the set of
//! base-`sigma` tuples of length `theta`, so `|Sigma| = sigma^theta`.  Every
//! `s < sigma^2` splits uniquely as `s = u_1*sigma + u_2`; the two digits
//! `u_1(s)`, `u_2(s)` are the coordinate sources.  A selector family assigns
//! each template slot `i` a tuple `pi^i` over `{1, 2}`; slot `i` reads row
//! coordinate `tau` from source `u_{pi^i_tau}` and column coordinate `tau`
//! from the complementary source `u_{3 - pi^i_tau}`.
//!
//! For a tuple function `Phi` (one value below `sigma^2` per coordinate) the
//! family matrix `M_Phi` is the 0-1 indicator of the product set
//! `{(a_i, w(i, Phi))} x {(b_j, w'(j, Phi))}`, a rank-one matrix on the
//! product index sets `(rows x Sigma) x (cols x Sigma)`.  Because each slot
//! reads complementary sources, the diagonal cells `((a_i, w), (b_i, w'))`
//! are covered exactly once as `Phi` ranges over all tuples, so the family
//! sums to the all-copies clone of the template on the diagonal blocks.
//! Adding one matrix unit per covered off-diagonal cell yields a family of
//! rank-one matrices whose span contains every clone of the template.
//!
//! The adjunction pipeline factors a slice-space basis matrix through a
//! diagonal template, clones the ambient tensor along `Sigma`, and adjoins
//! the conjugated family members as fresh slices.  Iterating over all three
//! axes and both summands, and comparing the clone of the full tensor with
//! the direct sum of the two processed summands modulo the adjoined slice
//! spans, yields an exact membership certificate for the assembled instance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::label::{IndexSet, Label};
use crate::linalg::{kron_with_identity, sparse_solve, Matrix, MatrixSpan, SparseVec};
use crate::tensor::Tensor3;

/// Default ceiling for materialized enumerations (tuples, family members,
/// selection candidates).
pub const DEFAULT_MATERIALIZE_BUDGET: u128 = 1 << 20;

/// Size and alphabet parameters for one family construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionParams {
    /// Template size: number of diagonal cells.
    pub r: usize,
    /// Tuple length of the alphabet `Sigma`.
    pub theta: u32,
    /// Base alphabet size; coordinates range over `0..sigma`.
    pub sigma: u64,
    /// Rank threshold separating the two dichotomy branches.
    pub rho: u64,
    /// True when `theta`, `sigma`, `rho` were derived from the instance
    /// size instead of chosen by hand.
    pub derived_defaults: bool,
}

fn ceil_log2(r: usize) -> u32 {
    if r <= 1 {
        0
    } else {
        (r - 1).ilog2() + 1
    }
}

impl ConstructionParams {
    /// Hand-picked parameters for desk-scale experiments.
    pub fn desk(r: usize, theta: u32, sigma: u64, rho: u64) -> Result<Self> {
        let params = ConstructionParams {
            r,
            theta,
            sigma,
            rho,
            derived_defaults: false,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters derived from the template size and the ambient cell count:
    /// `rho = 2*cells + 1`, `theta = ceil(log2 r)`, `sigma = 2*rho^2*r`.
    pub fn derived(r: usize, cells: u128) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParams(
                "the template needs at least one diagonal cell".into(),
            ));
        }
        let rho = cells
            .checked_mul(2)
            .and_then(|x| x.checked_add(1))
            .and_then(|x| u64::try_from(x).ok())
            .ok_or_else(|| {
                Error::InvalidParams("cell count overflows the rank threshold".into())
            })?;
        let sigma = (rho as u128)
            .checked_mul(rho as u128)
            .and_then(|x| x.checked_mul(2))
            .and_then(|x| x.checked_mul(r as u128))
            .and_then(|x| u64::try_from(x).ok())
            .ok_or_else(|| Error::InvalidParams("derived alphabet size overflows u64".into()))?;
        let params = ConstructionParams {
            r,
            theta: ceil_log2(r),
            sigma,
            rho,
            derived_defaults: true,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidParams(
                "the template needs at least one diagonal cell".into(),
            ));
        }
        if self.rho == 0 {
            return Err(Error::InvalidParams(
                "the rank threshold must be positive".into(),
            ));
        }
        let slots = 1u128.checked_shl(self.theta).unwrap_or(u128::MAX);
        if self.r as u128 > slots {
            return Err(Error::InvalidParams(format!(
                "{} diagonal cells need more than {} binary digits",
                self.r, self.theta
            )));
        }
        if self.derived_defaults {
            if self.theta != ceil_log2(self.r) {
                return Err(Error::InvalidParams(
                    "derived parameters fix theta = ceil(log2 r)".into(),
                ));
            }
            let sigma = (self.rho as u128) * (self.rho as u128) * 2 * (self.r as u128);
            if self.sigma as u128 != sigma {
                return Err(Error::InvalidParams(
                    "derived parameters fix sigma = 2*rho^2*r".into(),
                ));
            }
            if self.rho < 3 || self.rho.is_multiple_of(2) {
                return Err(Error::InvalidParams(
                    "a derived rank threshold is odd and at least 3".into(),
                ));
            }
        } else {
            if self.theta == 0 {
                return Err(Error::InvalidParams(
                    "hand-picked parameters need a positive tuple length".into(),
                ));
            }
            if self.sigma < 2 {
                return Err(Error::InvalidParams(
                    "the alphabet needs at least two symbols".into(),
                ));
            }
        }
        Ok(())
    }

    /// `|Sigma| = sigma^theta`, or `None` on overflow.
    pub fn sigma_count(&self) -> Option<u128> {
        (self.sigma as u128).checked_pow(self.theta)
    }

    /// Number of tuple functions, `sigma^(2*theta)`, or `None` on overflow.
    pub fn phi_count(&self) -> Option<u128> {
        (self.sigma as u128).checked_pow(self.theta.checked_mul(2)?)
    }
}

fn structural_check(params: &ConstructionParams) -> Result<()> {
    if params.r == 0 || params.sigma < 2 || params.rho == 0 {
        return Err(Error::InvalidParams(
            "family construction needs r >= 1, sigma >= 2 and a positive rank threshold".into(),
        ));
    }
    let slots = 1u128.checked_shl(params.theta).unwrap_or(u128::MAX);
    if params.r as u128 > slots {
        return Err(Error::InvalidParams(format!(
            "{} diagonal cells need more than {} binary digits",
            params.r, params.theta
        )));
    }
    Ok(())
}

/// Splits `s` into its two coordinate sources: `s = u_1*sigma + u_2`.
pub fn u_parts(s: u64, sigma: u64) -> Result<(u64, u64)> {
    if sigma == 0 {
        return Err(Error::InvalidParams("the alphabet must be nonempty".into()));
    }
    if let Some(limit) = sigma.checked_mul(sigma) {
        if s >= limit {
            return Err(Error::InvalidParams(format!(
                "tuple value {s} is not below sigma^2 = {limit}"
            )));
        }
    }
    Ok((s / sigma, s % sigma))
}

/// Names for the elements of `Sigma`, enumerated as big-endian base-`sigma`
/// tuples and rendered as dot-joined digit strings.
pub fn sigma_names(params: &ConstructionParams, cap: u128) -> Result<Vec<String>> {
    let count = params.sigma_count().ok_or(Error::BudgetExceeded {
        what: "sigma tuple materialization".into(),
        needed: u128::MAX,
        budget: cap,
    })?;
    if count > cap || count > usize::MAX as u128 {
        return Err(Error::BudgetExceeded {
            what: "sigma tuple materialization".into(),
            needed: count,
            budget: cap,
        });
    }
    if params.theta == 0 {
        return Ok(vec!["0".to_string()]);
    }
    let mut names = Vec::with_capacity(count as usize);
    for idx in 0..count {
        let mut digits = vec![0u64; params.theta as usize];
        let mut x = idx;
        for slot in (0..params.theta as usize).rev() {
            digits[slot] = (x % params.sigma as u128) as u64;
            x /= params.sigma as u128;
        }
        let name = digits
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(".");
        names.push(name);
    }
    Ok(names)
}

/// A tuple function: one value below `sigma^2` per coordinate `1..=theta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiFunction {
    values: Vec<u64>,
}

impl PhiFunction {
    pub fn new(params: &ConstructionParams, values: Vec<u64>) -> Result<Self> {
        if values.len() != params.theta as usize {
            return Err(Error::InvalidParams(format!(
                "expected {} tuple values, got {}",
                params.theta,
                values.len()
            )));
        }
        for &v in &values {
            u_parts(v, params.sigma)?;
        }
        Ok(PhiFunction { values })
    }

    /// Decodes a big-endian base-`sigma^2` index.
    pub fn from_index(index: u128, params: &ConstructionParams) -> Result<Self> {
        let total = params.phi_count().ok_or_else(|| {
            Error::InvalidParams("the tuple function count overflows u128".into())
        })?;
        if index >= total {
            return Err(Error::InvalidParams(format!(
                "tuple function index {index} is not below {total}"
            )));
        }
        let base = (params.sigma as u128) * (params.sigma as u128);
        let mut values = vec![0u64; params.theta as usize];
        let mut x = index;
        for slot in (0..params.theta as usize).rev() {
            values[slot] = (x % base) as u64;
            x /= base;
        }
        Ok(PhiFunction { values })
    }

    pub fn index(&self, params: &ConstructionParams) -> Result<u128> {
        if self.values.len() != params.theta as usize {
            return Err(Error::InvalidParams(
                "tuple length does not match the parameters".into(),
            ));
        }
        let base = (params.sigma as u128) * (params.sigma as u128);
        let mut acc = 0u128;
        for &v in &self.values {
            acc = acc
                .checked_mul(base)
                .and_then(|a| a.checked_add(v as u128))
                .ok_or_else(|| Error::InvalidParams("tuple index overflows u128".into()))?;
        }
        Ok(acc)
    }

    /// Value at coordinate `tau` (1-based).
    pub fn value(&self, tau: usize) -> u64 {
        self.values[tau - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Source selectors: row `i` holds the tuple `pi^i` over `{1, 2}` telling
/// each coordinate which of the two sources feeds the row side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiFamily {
    theta: u32,
    rows: Vec<Vec<u8>>,
}

impl PiFamily {
    /// Binary encoding: row `i` is the `theta`-digit binary expansion of `i`
    /// (most significant first) with digits shifted to `{1, 2}`.
    pub fn canonical(r: usize, theta: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParams(
                "at least one selector row is required".into(),
            ));
        }
        let slots = 1u128.checked_shl(theta).unwrap_or(u128::MAX);
        if r as u128 > slots {
            return Err(Error::InvalidParams(format!(
                "{r} selector rows need more than {theta} binary digits"
            )));
        }
        let rows = (0..r)
            .map(|i| {
                (0..theta)
                    .rev()
                    .map(|b| {
                        if b >= usize::BITS {
                            1
                        } else {
                            (((i >> b) & 1) + 1) as u8
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(PiFamily { theta, rows })
    }

    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParams(
                "at least one selector row is required".into(),
            ));
        }
        let theta = rows[0].len();
        let mut seen = BTreeSet::new();
        for row in &rows {
            if row.len() != theta {
                return Err(Error::InvalidParams(
                    "selector rows must share one length".into(),
                ));
            }
            if row.iter().any(|&v| v != 1 && v != 2) {
                return Err(Error::InvalidParams(
                    "selector values must be 1 or 2".into(),
                ));
            }
            if !seen.insert(row.clone()) {
                return Err(Error::InvalidParams(
                    "selector rows must be pairwise distinct".into(),
                ));
            }
        }
        Ok(PiFamily {
            theta: theta as u32,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn theta(&self) -> u32 {
        self.theta
    }

    /// Selector of row `i` at coordinate `tau` (1-based).
    pub fn value(&self, i: usize, tau: usize) -> u8 {
        self.rows[i][tau - 1]
    }
}

/// Distinct row and column labels carrying the diagonal cells of a factored
/// slice basis matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalTemplate {
    rows: Vec<Label>,
    cols: Vec<Label>,
}

impl DiagonalTemplate {
    pub fn new(rows: Vec<Label>, cols: Vec<Label>) -> Result<Self> {
        if rows.is_empty() || rows.len() != cols.len() {
            return Err(Error::InvalidParams(
                "a template needs equally many row and column labels, at least one each".into(),
            ));
        }
        for side in [&rows, &cols] {
            let mut seen = BTreeSet::new();
            for l in side {
                if !seen.insert(l.to_string()) {
                    return Err(Error::DuplicateLabel(l.to_string()));
                }
            }
        }
        Ok(DiagonalTemplate { rows, cols })
    }

    /// The first `r` labels of the two axes, the home of a full-pivot factor.
    pub fn prefix_of(rows_axis: &IndexSet, cols_axis: &IndexSet, r: usize) -> Result<Self> {
        if r == 0 || r > rows_axis.len() || r > cols_axis.len() {
            return Err(Error::InvalidParams(format!(
                "a {r}-cell template does not fit axes of sizes {} and {}",
                rows_axis.len(),
                cols_axis.len()
            )));
        }
        DiagonalTemplate::new(
            rows_axis.labels()[..r].to_vec(),
            cols_axis.labels()[..r].to_vec(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Label] {
        &self.rows
    }

    pub fn cols(&self) -> &[Label] {
        &self.cols
    }

    /// The 0-1 template matrix on host axes: ones at each diagonal cell.
    pub fn matrix_on(
        &self,
        rows_host: &IndexSet,
        cols_host: &IndexSet,
        field: FieldSpec,
    ) -> Result<Matrix<Scalar>> {
        let mut out = Matrix::zeros(rows_host.clone(), cols_host.clone(), field.zero());
        for (a, b) in self.rows.iter().zip(&self.cols) {
            let r = rows_host.position(a).ok_or_else(|| Error::UnknownLabel {
                axis: 1,
                label: a.to_string(),
            })?;
            let c = cols_host.position(b).ok_or_else(|| Error::UnknownLabel {
                axis: 2,
                label: b.to_string(),
            })?;
            out.set(r, c, field.one());
        }
        Ok(out)
    }

    fn hosts(&self) -> Result<(IndexSet, IndexSet)> {
        Ok((
            IndexSet::new(self.rows.clone())?,
            IndexSet::new(self.cols.clone())?,
        ))
    }
}

/// Which rule produced one family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberKind {
    /// Indicator of the product support of one tuple function.
    Phi { index: u128 },
    /// Matrix unit cancelling one covered off-diagonal cell.
    Unit,
}

/// One rank-one family member in structured coordinates: the support is the
/// product of the row cells `(template slot, Sigma index)` with the column
/// cells, and every supported entry equals one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyMember {
    pub kind: MemberKind,
    pub rows: Vec<(usize, u128)>,
    pub cols: Vec<(usize, u128)>,
}

/// The indicator member of one tuple function: row slot `i` sits at the
/// `Sigma` tuple reading coordinate `tau` from source `u_{pi^i_tau}`, and
/// column slot `j` reads the complementary source.
pub fn build_m_phi(
    params: &ConstructionParams,
    pi: &PiFamily,
    phi: &PhiFunction,
) -> Result<FamilyMember> {
    structural_check(params)?;
    if pi.theta() != params.theta || phi.len() != params.theta as usize {
        return Err(Error::InvalidParams(
            "selector and tuple lengths must match the parameters".into(),
        ));
    }
    if pi.len() != params.r {
        return Err(Error::InvalidParams(
            "the selector family must have one row per diagonal cell".into(),
        ));
    }
    let mut rows = Vec::with_capacity(params.r);
    let mut cols = Vec::with_capacity(params.r);
    for i in 0..params.r {
        let mut w = 0u128;
        let mut wp = 0u128;
        for tau in 1..=params.theta as usize {
            let (u1, u2) = u_parts(phi.value(tau), params.sigma)?;
            let (d, dp) = if pi.value(i, tau) == 1 {
                (u1, u2)
            } else {
                (u2, u1)
            };
            w = w * params.sigma as u128 + d as u128;
            wp = wp * params.sigma as u128 + dp as u128;
        }
        rows.push((i, w));
        cols.push((i, wp));
    }
    Ok(FamilyMember {
        kind: MemberKind::Phi {
            index: phi.index(params)?,
        },
        rows,
        cols,
    })
}

/// A complete family: all tuple-function indicators followed by one matrix
/// unit per covered off-diagonal cell, deduplicated and sorted.
#[derive(Debug, Clone)]
pub struct MFamily {
    pub params: ConstructionParams,
    pub template: DiagonalTemplate,
    pub pi: PiFamily,
    members: Vec<FamilyMember>,
    phi_members: usize,
    unit_members: usize,
}

pub fn build_m_family(
    params: &ConstructionParams,
    template: &DiagonalTemplate,
    pi: &PiFamily,
    cap: u128,
) -> Result<MFamily> {
    structural_check(params)?;
    if template.len() != params.r || pi.len() != params.r || pi.theta() != params.theta {
        return Err(Error::InvalidParams(
            "template, selector family and parameters disagree on the cell count".into(),
        ));
    }
    let total = params.phi_count().ok_or(Error::BudgetExceeded {
        what: "family enumeration".into(),
        needed: u128::MAX,
        budget: cap,
    })?;
    if total > cap || total > usize::MAX as u128 {
        return Err(Error::BudgetExceeded {
            what: "family enumeration".into(),
            needed: total,
            budget: cap,
        });
    }
    let phis: Vec<FamilyMember> = (0..total as usize)
        .into_par_iter()
        .map(|idx| {
            let phi = PhiFunction::from_index(idx as u128, params)?;
            build_m_phi(params, pi, &phi)
        })
        .collect::<Result<_>>()?;
    let covered: BTreeSet<(usize, u128, usize, u128)> = phis
        .par_iter()
        .fold(BTreeSet::new, |mut acc, m| {
            for &(i, w) in &m.rows {
                for &(j, wp) in &m.cols {
                    if i != j {
                        acc.insert((i, w, j, wp));
                    }
                }
            }
            acc
        })
        .reduce(BTreeSet::new, |mut a, mut b| {
            a.append(&mut b);
            a
        });
    let units: Vec<FamilyMember> = covered
        .into_iter()
        .map(|(i, w, j, wp)| FamilyMember {
            kind: MemberKind::Unit,
            rows: vec![(i, w)],
            cols: vec![(j, wp)],
        })
        .collect();
    let phi_members = phis.len();
    let unit_members = units.len();
    let mut members = phis;
    members.extend(units);
    Ok(MFamily {
        params: *params,
        template: template.clone(),
        pi: pi.clone(),
        members,
        phi_members,
        unit_members,
    })
}

impl MFamily {
    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn phi_members(&self) -> usize {
        self.phi_members
    }

    pub fn unit_members(&self) -> usize {
        self.unit_members
    }

    /// Realizes one member on `(rows_host x Sigma) x (cols_host x Sigma)`.
    pub fn member_matrix(
        &self,
        member: &FamilyMember,
        rows_host: &IndexSet,
        cols_host: &IndexSet,
        names: &[String],
        field: FieldSpec,
    ) -> Result<Matrix<Scalar>> {
        let prows = rows_host.product(names)?;
        let pcols = cols_host.product(names)?;
        let (nr, nc) = (rows_host.len(), cols_host.len());
        let mut out = Matrix::zeros(prows, pcols, field.zero());
        for &(slot, s) in &member.rows {
            if s >= names.len() as u128 {
                return Err(Error::ShapeMismatch(
                    "a member tuple index exceeds the materialized alphabet".into(),
                ));
            }
            let a = &self.template.rows()[slot];
            let h = rows_host.position(a).ok_or_else(|| {
                Error::ShapeMismatch(format!("template row {a} is missing from the host axis"))
            })?;
            let rpos = s as usize * nr + h;
            for &(slot_c, sc) in &member.cols {
                if sc >= names.len() as u128 {
                    return Err(Error::ShapeMismatch(
                        "a member tuple index exceeds the materialized alphabet".into(),
                    ));
                }
                let b = &self.template.cols()[slot_c];
                let hc = cols_host.position(b).ok_or_else(|| {
                    Error::ShapeMismatch(format!(
                        "template column {b} is missing from the host axis"
                    ))
                })?;
                out.set(rpos, sc as usize * nc + hc, field.one());
            }
        }
        Ok(out)
    }

    /// Realizes every member on the template's own labels.
    pub fn realize_members(&self, field: FieldSpec, cap: u128) -> Result<Vec<Matrix<Scalar>>> {
        let names = sigma_names(&self.params, cap)?;
        let (rows_host, cols_host) = self.template.hosts()?;
        self.members
            .par_iter()
            .map(|m| self.member_matrix(m, &rows_host, &cols_host, &names, field))
            .collect()
    }
}

/// The all-copies clone of a matrix: entry `((s, x), (s', y)) = m(x, y)` for
/// every pair of copy indices.
pub fn clone_matrix<S: AsRef<str>>(m: &Matrix<Scalar>, copies: &[S]) -> Result<Matrix<Scalar>> {
    let rows = m.row_set().product(copies)?;
    let cols = m.col_set().product(copies)?;
    let (nr, nc) = (m.nrows(), m.ncols());
    let mut out = Matrix::zeros(rows, cols, m.zero_entry().clone());
    for (i, j) in m.support() {
        let v = m.get(i, j).clone();
        for a in 0..copies.len() {
            for b in 0..copies.len() {
                out.set(a * nr + i, b * nc + j, v.clone());
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionViolation {
    pub row: usize,
    pub row_tuple: u128,
    pub col_tuple: u128,
    pub count: u64,
}

/// Outcome of the diagonal coverage count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionReport {
    pub ok: bool,
    pub rows: usize,
    pub cells_checked: u128,
    pub first_violation: Option<PartitionViolation>,
}

/// Counts, for every template slot `i`, how many tuple functions land on
/// each diagonal cell `((a_i, w), (b_i, w'))`.  The family partitions the
/// diagonal blocks exactly when every count is one.
pub fn verify_partition(
    params: &ConstructionParams,
    pi: &PiFamily,
    cap: u128,
) -> Result<PartitionReport> {
    structural_check(params)?;
    if pi.len() != params.r || pi.theta() != params.theta {
        return Err(Error::InvalidParams(
            "selector family and parameters disagree".into(),
        ));
    }
    let side = params.sigma_count().ok_or(Error::BudgetExceeded {
        what: "partition count table".into(),
        needed: u128::MAX,
        budget: cap,
    })?;
    let cells = side.checked_mul(side).ok_or(Error::BudgetExceeded {
        what: "partition count table".into(),
        needed: u128::MAX,
        budget: cap,
    })?;
    let table = cells.saturating_mul(params.r as u128);
    if table > cap || cells > usize::MAX as u128 {
        return Err(Error::BudgetExceeded {
            what: "partition count table".into(),
            needed: table,
            budget: cap,
        });
    }
    let total = params
        .phi_count()
        .expect("phi count fits because the square of the tuple count does");
    let side = side as usize;
    let stride = side * side;
    let counts: Vec<u64> = (0..total as u64)
        .into_par_iter()
        .fold(
            || vec![0u64; params.r * stride],
            |mut acc, idx| {
                let phi = PhiFunction::from_index(idx as u128, params)
                    .expect("enumerated index is below the tuple count");
                let member =
                    build_m_phi(params, pi, &phi).expect("validated parameters build every member");
                for (&(i, w), &(_, wp)) in member.rows.iter().zip(&member.cols) {
                    acc[i * stride + w as usize * side + wp as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; params.r * stride],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let mut first_violation = None;
    'scan: for i in 0..params.r {
        for w in 0..side {
            for wp in 0..side {
                let count = counts[i * stride + w * side + wp];
                if count != 1 {
                    first_violation = Some(PartitionViolation {
                        row: i,
                        row_tuple: w as u128,
                        col_tuple: wp as u128,
                        count,
                    });
                    break 'scan;
                }
            }
        }
    }
    Ok(PartitionReport {
        ok: first_violation.is_none(),
        rows: params.r,
        cells_checked: cells * params.r as u128,
        first_violation,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOneReport {
    pub ok: bool,
    pub members_checked: usize,
    pub first_violation: Option<usize>,
}

/// Materializes every member and checks that its rank is exactly one.
pub fn verify_rank_one(family: &MFamily, field: FieldSpec, cap: u128) -> Result<RankOneReport> {
    let mats = family.realize_members(field, cap)?;
    let ranks: Vec<usize> = mats.par_iter().map(|m| m.rank()).collect();
    let first_violation = ranks.iter().position(|&r| r != 1);
    Ok(RankOneReport {
        ok: first_violation.is_none(),
        members_checked: ranks.len(),
        first_violation,
    })
}

#[derive(Debug, Clone)]
pub struct SpanReport {
    pub ok: bool,
    pub solved: bool,
    pub residual_zero: bool,
    pub dim_span: usize,
    pub members: usize,
    pub coefficients: Option<Vec<Scalar>>,
}

fn matrix_cells(m: &Matrix<Scalar>) -> SparseVec {
    let nc = m.ncols();
    let mut out = SparseVec::new();
    for (i, j) in m.support() {
        out.insert(i * nc + j, m.get(i, j).clone());
    }
    out
}

/// Solves for the clone of the template as an exact linear combination of
/// the family members, then re-sums the combination independently.
pub fn verify_clone_in_span(family: &MFamily, field: FieldSpec, cap: u128) -> Result<SpanReport> {
    let names = sigma_names(&family.params, cap)?;
    let (rows_host, cols_host) = family.template.hosts()?;
    let template = family.template.matrix_on(&rows_host, &cols_host, field)?;
    let target = clone_matrix(&template, &names)?;
    let mats = family.realize_members(field, cap)?;
    let columns: Vec<SparseVec> = mats.iter().map(matrix_cells).collect();
    let rhs = matrix_cells(&target);
    let coefficients = sparse_solve(&columns, &rhs, field);
    let solved = coefficients.is_some();
    let residual_zero = match &coefficients {
        None => false,
        Some(coeffs) => {
            let mut acc: BTreeMap<usize, Scalar> = BTreeMap::new();
            for (coeff, col) in coeffs.iter().zip(&columns) {
                if coeff.is_zero() {
                    continue;
                }
                for (cell, v) in col {
                    let e = acc.entry(*cell).or_insert_with(|| field.zero());
                    *e = e.add(&coeff.mul(v));
                }
            }
            acc.retain(|_, v| !v.is_zero());
            acc == rhs
        }
    };
    let span = MatrixSpan::from_generators(
        target.row_set().clone(),
        target.col_set().clone(),
        field,
        mats,
    )?;
    Ok(SpanReport {
        ok: solved && residual_zero,
        solved,
        residual_zero,
        dim_span: span.dim(),
        members: family.members().len(),
        coefficients,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffdiagReport {
    /// The 1-based coordinate at which the two slots read the same source.
    pub tau: usize,
    pub ok: bool,
    pub cells_checked: usize,
    pub first_violation: Option<(String, String)>,
}

/// Checks the structural invariant of an off-diagonal block: on the block
/// `(a_i x Sigma) x (b_j x Sigma)` of any member combination, every nonzero
/// entry has matching row and column digits at the first coordinate where
/// slot `i` and slot `j` read the same source.
pub fn verify_offdiag_structure(
    family: &MFamily,
    x: &Matrix<Scalar>,
    row_slot: usize,
    col_slot: usize,
) -> Result<OffdiagReport> {
    let params = &family.params;
    let r = params.r;
    if row_slot == col_slot || row_slot >= r || col_slot >= r {
        return Err(Error::InvalidParams(
            "the structural check needs two distinct template slots".into(),
        ));
    }
    let tau = (1..=params.theta as usize)
        .find(|&t| family.pi.value(row_slot, t) + family.pi.value(col_slot, t) == 3)
        .ok_or_else(|| Error::InvalidParams("the two slots never read the same source".into()))?;
    if !x.nrows().is_multiple_of(r) || !x.ncols().is_multiple_of(r) {
        return Err(Error::ShapeMismatch(
            "the matrix does not live on template-by-alphabet product axes".into(),
        ));
    }
    let digit_at = |s: usize| -> u64 {
        let shift = (params.sigma as u128).pow(params.theta - tau as u32);
        ((s as u128 / shift) % params.sigma as u128) as u64
    };
    let mut cells_checked = 0usize;
    let mut first_violation = None;
    for (rp, cp) in x.support() {
        if rp % r != row_slot || cp % r != col_slot {
            continue;
        }
        cells_checked += 1;
        if digit_at(rp / r) != digit_at(cp / r) {
            first_violation = Some((
                x.row_set().label(rp).to_string(),
                x.col_set().label(cp).to_string(),
            ));
            break;
        }
    }
    Ok(OffdiagReport {
        tau,
        ok: first_violation.is_none(),
        cells_checked,
        first_violation,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalReport {
    pub delta: Option<usize>,
    pub precondition_ok: bool,
    pub rows: usize,
    pub cols: usize,
}

/// Given, per row, the assignment of elements to diagonals (a permutation of
/// `0..c`) and a set of removed elements, finds the least diagonal avoiding
/// every removed element.  When each row removes fewer than `c / r` elements
/// such a diagonal always exists: every removed element kills exactly one
/// diagonal of its row, so fewer than `c` diagonals are killed in total.
pub fn find_unremoved_diagonal(
    assignments: &[Vec<u64>],
    removed: &[BTreeSet<u64>],
) -> Result<DiagonalReport> {
    let r = assignments.len();
    if r == 0 || removed.len() != r {
        return Err(Error::InvalidParams(
            "one assignment and one removal set per row are required".into(),
        ));
    }
    let c = assignments[0].len();
    for row in assignments {
        if row.len() != c {
            return Err(Error::InvalidParams(
                "assignments must share one length".into(),
            ));
        }
        let mut sorted: Vec<u64> = row.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &v)| v != i as u64) {
            return Err(Error::InvalidParams(
                "each assignment must be a permutation of 0..c".into(),
            ));
        }
    }
    let precondition_ok = removed
        .iter()
        .all(|set| (set.len() as u128) * (r as u128) < c as u128);
    let delta = (0..c).find(|&d| {
        assignments
            .iter()
            .zip(removed)
            .all(|(row, gone)| !gone.contains(&row[d]))
    });
    Ok(DiagonalReport {
        delta,
        precondition_ok,
        rows: r,
        cols: c,
    })
}

/// Outcome of the rank dichotomy scan over a realized family.
#[derive(Debug, Clone)]
pub enum DichotomyWitness {
    /// Some member already has rank at least the threshold.
    HighRank { member: usize, rank: usize },
    /// A choice of one alphabet tuple per slot on each side under which
    /// every member restricts to a scalar multiple of the identity template.
    Selection {
        row_choice: Vec<u128>,
        col_choice: Vec<u128>,
        scales: Vec<Scalar>,
    },
    /// Neither branch could be certified within the given budget.
    BelowRegime { reason: String },
}

/// Scans for a high-rank member, then exhaustively searches for a selection
/// restricting every member to a multiple of the identity.
pub fn dichotomy_witness(
    family: &MFamily,
    field: FieldSpec,
    cap: u128,
) -> Result<DichotomyWitness> {
    let params = &family.params;
    let mats = family.realize_members(field, cap)?;
    for (idx, m) in mats.iter().enumerate() {
        let rank = m.rank();
        if rank as u64 >= params.rho {
            return Ok(DichotomyWitness::HighRank { member: idx, rank });
        }
    }
    let side = params
        .sigma_count()
        .filter(|&s| s <= usize::MAX as u128)
        .ok_or(Error::BudgetExceeded {
            what: "selection alphabet".into(),
            needed: u128::MAX,
            budget: cap,
        })? as usize;
    let r = params.r;
    let total = (side as u128).checked_pow(2 * r as u32);
    let total = match total {
        Some(t) if t <= cap => t,
        _ => {
            return Ok(DichotomyWitness::BelowRegime {
                reason: format!(
                    "no member reaches rank {} and the selection space of {}^{} candidates \
                     exceeds the budget {}",
                    params.rho,
                    side,
                    2 * r,
                    cap
                ),
            });
        }
    };
    for idx in 0..total {
        let mut digits = vec![0usize; 2 * r];
        let mut x = idx;
        for slot in (0..2 * r).rev() {
            digits[slot] = (x % side as u128) as usize;
            x /= side as u128;
        }
        let (rows_pick, cols_pick) = digits.split_at(r);
        let mut scales = Vec::with_capacity(mats.len());
        let mut valid = true;
        'members: for m in &mats {
            let mut diag: Option<Scalar> = None;
            for i in 0..r {
                for j in 0..r {
                    let v = m.get(rows_pick[i] * r + i, cols_pick[j] * r + j);
                    if i != j {
                        if !v.is_zero() {
                            valid = false;
                            break 'members;
                        }
                    } else {
                        match &diag {
                            None => diag = Some(v.clone()),
                            Some(d) => {
                                if d != v {
                                    valid = false;
                                    break 'members;
                                }
                            }
                        }
                    }
                }
            }
            scales.push(diag.expect("r >= 1 always visits a diagonal cell"));
        }
        if valid {
            return Ok(DichotomyWitness::Selection {
                row_choice: rows_pick.iter().map(|&d| d as u128).collect(),
                col_choice: cols_pick.iter().map(|&d| d as u128).collect(),
                scales,
            });
        }
    }
    Ok(DichotomyWitness::BelowRegime {
        reason: format!(
            "no member reaches rank {} and none of the {} selections restricts every \
             member to a multiple of the identity",
            params.rho, total
        ),
    })
}

/// Result of one adjunction step.
#[derive(Debug, Clone)]
pub struct AdjoinOutcome {
    /// The cloned tensor with the conjugated family adjoined as 3-slices.
    pub tensor: Tensor3<Scalar>,
    /// The adjoined matrices, on the cloned first-by-second axes.
    pub adjoined: Vec<Matrix<Scalar>>,
    pub adjoined_labels: Vec<Label>,
    pub family: MFamily,
    pub rank: usize,
}

/// Factors `w` through a diagonal template, clones the tensor along `Sigma`,
/// and adjoins the conjugated family members as fresh 3-slices.  The span of
/// the adjoined slices contains every clone of `w`, and each adjoined slice
/// has rank one.
pub fn adjoin_construction(
    t: &Tensor3<Scalar>,
    w: &Matrix<Scalar>,
    params: &ConstructionParams,
    cap: u128,
) -> Result<AdjoinOutcome> {
    let field = t.field();
    w.ensure_field(field)?;
    if w.row_set() != t.axis(1) || w.col_set() != t.axis(2) {
        return Err(Error::ShapeMismatch(
            "the expanded matrix must live on the first two tensor axes".into(),
        ));
    }
    let (p, rank, q) = w.full_pivot_factor()?;
    if rank == 0 {
        return Err(Error::InvalidParams(
            "cannot expand the zero matrix into a slice family".into(),
        ));
    }
    let slots = 1u128.checked_shl(params.theta).unwrap_or(u128::MAX);
    if rank as u128 > slots {
        return Err(Error::InvalidParams(format!(
            "factor rank {rank} exceeds the 2^{} selector capacity",
            params.theta
        )));
    }
    let step_params = ConstructionParams { r: rank, ..*params };
    let template = DiagonalTemplate::prefix_of(t.axis(1), t.axis(2), rank)?;
    let pi = PiFamily::canonical(rank, params.theta)?;
    let family = build_m_family(&step_params, &template, &pi, cap)?;
    let names = sigma_names(&step_params, cap)?;
    let cloned = t.clone_along(&names)?;
    let p_sigma = kron_with_identity(&p, &names)?;
    let q_sigma = kron_with_identity(&q, &names)?;
    let mut adjoined = Vec::with_capacity(family.members().len());
    for member in family.members() {
        let m = family.member_matrix(member, t.axis(1), t.axis(2), &names, field)?;
        adjoined.push(p_sigma.mul(&m)?.mul(&q_sigma)?);
    }
    let none: [Matrix<Scalar>; 0] = [];
    let (tensor, labels) = cloned.adjoin_slices([&none[..], &none[..], &adjoined[..]])?;
    let [_, _, adjoined_labels] = labels;
    Ok(AdjoinOutcome {
        tensor,
        adjoined,
        adjoined_labels,
        family,
        rank,
    })
}

/// One executed adjunction step inside a recursive build.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// The axis (1, 2 or 3) whose slice space the step expanded.
    pub axis: usize,
    pub rank: usize,
    /// The adjoined matrices promoted to the final clone level.  A step-`s`
    /// matrix is cloned once per later step, so all records end on axes with
    /// the same nesting depth.
    pub members: Vec<Matrix<Scalar>>,
}

#[derive(Debug, Clone)]
pub struct RecursiveBuild {
    pub tensor: Tensor3<Scalar>,
    pub steps: Vec<StepRecord>,
    pub sigma_names: Vec<String>,
    pub depth: usize,
}

/// Peels one basis matrix at a time, axis 1 first, rotating the target axis
/// into the 3-slice position for each adjunction.  Basis matrices for axis 1
/// live on axes 2 x 3, for axis 2 on axes 1 x 3, for axis 3 on axes 1 x 2;
/// all are given on the original axes and are cloned alongside the tensor as
/// the build deepens.
pub fn recursive_construction(
    t: &Tensor3<Scalar>,
    bases: [&[Matrix<Scalar>]; 3],
    params: &ConstructionParams,
    cap: u128,
) -> Result<RecursiveBuild> {
    let field = t.field();
    for (idx, mats) in bases.iter().enumerate() {
        let (ra, ca) = match idx {
            0 => (2, 3),
            1 => (1, 3),
            _ => (1, 2),
        };
        for m in *mats {
            m.ensure_field(field)?;
            if m.row_set() != t.axis(ra) || m.col_set() != t.axis(ca) {
                return Err(Error::ShapeMismatch(format!(
                    "axis {} basis matrices must live on axes {ra} x {ca}",
                    idx + 1
                )));
            }
        }
    }
    let names = sigma_names(params, cap)?;
    let mut pending: VecDeque<(usize, Matrix<Scalar>)> = VecDeque::new();
    for (idx, mats) in bases.iter().enumerate() {
        for m in *mats {
            pending.push_back((idx + 1, m.clone()));
        }
    }
    let mut cur = t.clone();
    let mut steps: Vec<StepRecord> = Vec::new();
    while let Some((axis, w)) = pending.pop_front() {
        let (perm, inv) = match axis {
            1 => ([2, 3, 1], [3, 1, 2]),
            2 => ([1, 3, 2], [1, 3, 2]),
            _ => ([1, 2, 3], [1, 2, 3]),
        };
        let view = cur.permute_axes(perm)?;
        let w_embedded = w.embed(view.axis(1).clone(), view.axis(2).clone())?;
        let out = adjoin_construction(&view, &w_embedded, params, cap)?;
        cur = out.tensor.permute_axes(inv)?;
        for rec in &mut steps {
            for m in rec.members.iter_mut() {
                *m = clone_matrix(m, &names)?;
            }
        }
        for (_, m) in pending.iter_mut() {
            *m = clone_matrix(m, &names)?;
        }
        steps.push(StepRecord {
            axis,
            rank: out.rank,
            members: out.adjoined,
        });
    }
    Ok(RecursiveBuild {
        tensor: cur,
        depth: steps.len(),
        steps,
        sigma_names: names,
    })
}

/// Report of the assembled direct-sum instance.
#[derive(Debug, Clone)]
pub struct AssemblyReport {
    /// Adjunction steps executed per summand.
    pub depth: usize,
    /// Dimensions of the slice spans feeding the first summand's build,
    /// taken from the three cross blocks adjacent to the `1` diagonal block.
    pub u_dims: [usize; 3],
    /// The same for the second summand.
    pub v_dims: [usize; 3],
    pub summands: [Tensor3<Scalar>; 2],
    pub direct_sum: Tensor3<Scalar>,
    /// Dimension of the combined per-axis slice span of all adjoined
    /// families at the final clone level.
    pub mod_space_dims: [usize; 3],
    /// Per-summand span dimensions of the same families.
    pub family_dims: [[usize; 3]; 2],
    /// Whether the combined dimension is the sum of the per-summand ones.
    pub dims_additive: bool,
    /// Whether the clone of the full tensor lies in the class of the summed
    /// processed blocks modulo the three slice spans.
    pub containment: bool,
    pub degenerate: bool,
    pub failures: Vec<String>,
}

fn base_tag(l: &Label) -> Option<&str> {
    let mut cur = l;
    loop {
        match cur {
            Label::Copy(_, inner) => cur = inner,
            Label::Tagged(tag, _) => return Some(tag),
            Label::Atom(_) => return None,
        }
    }
}

fn qualify_adjoined(l: &Label, prefix: &str) -> Result<Label> {
    Ok(match l {
        Label::Atom(s) => {
            if s.starts_with("adj") {
                Label::atom(format!("{prefix}.{s}"))?
            } else {
                l.clone()
            }
        }
        Label::Tagged(t, inner) => Label::tagged(t.clone(), qualify_adjoined(inner, prefix)?)?,
        Label::Copy(c, inner) => Label::copy(c.clone(), qualify_adjoined(inner, prefix)?)?,
    })
}

fn align_to(
    src: &Tensor3<Scalar>,
    axes: [IndexSet; 3],
    field: FieldSpec,
) -> Result<Tensor3<Scalar>> {
    let mut maps: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for a in 0..3 {
        if axes[a].len() != src.axis(a + 1).len() {
            return Err(Error::ShapeMismatch(format!(
                "axis {} of the summed blocks does not cover the cloned tensor",
                a + 1
            )));
        }
        for l in axes[a].iter() {
            let pos = src.axis(a + 1).position(l).ok_or_else(|| {
                Error::ShapeMismatch(format!(
                    "label {l} of the cloned tensor is missing from the summed blocks"
                ))
            })?;
            maps[a].push(pos);
        }
    }
    Ok(Tensor3::from_fn(axes, field.zero(), |i, j, k| {
        src.get(maps[0][i], maps[1][j], maps[2][k]).clone()
    }))
}

/// Splits a fully block-tagged tensor into its two diagonal blocks, runs the
/// recursive construction on each (driven by the slice spans of the six
/// cross blocks), and certifies by an exact feasibility solve that the clone
/// of the full tensor equals the direct sum of the cloned diagonal blocks up
/// to per-axis corrections inside the adjoined slice spans.
pub fn counterexample_assembly(
    t: &Tensor3<Scalar>,
    params: &ConstructionParams,
    cap: u128,
) -> Result<AssemblyReport> {
    let field = t.field();
    let mut sel: [[Vec<usize>; 2]; 3] = Default::default();
    for a in 0..3 {
        for (pos, l) in t.axis(a + 1).iter().enumerate() {
            match l.block_tag() {
                Some("1") => sel[a][0].push(pos),
                Some("2") => sel[a][1].push(pos),
                _ => return Err(Error::MissingBlockTag(l.to_string())),
            }
        }
        if sel[a][0].is_empty() || sel[a][1].is_empty() {
            return Err(Error::InvalidParams(format!(
                "axis {} lacks one of the two diagonal blocks",
                a + 1
            )));
        }
    }
    let block = |bi: usize, bj: usize, bk: usize| -> Result<Tensor3<Scalar>> {
        let axes = [
            t.axis(1).select(&sel[0][bi])?,
            t.axis(2).select(&sel[1][bj])?,
            t.axis(3).select(&sel[2][bk])?,
        ];
        Ok(Tensor3::from_fn(axes, field.zero(), |a, b, c| {
            t.get(sel[0][bi][a], sel[1][bj][b], sel[2][bk][c]).clone()
        }))
    };
    let span_of = |tt: &Tensor3<Scalar>, axis: usize| -> Result<MatrixSpan> {
        let (ra, ca) = match axis {
            1 => (2, 3),
            2 => (1, 3),
            _ => (1, 2),
        };
        MatrixSpan::from_generators(
            tt.axis(ra).clone(),
            tt.axis(ca).clone(),
            field,
            tt.slices(axis)?,
        )
    };
    let t111 = block(0, 0, 0)?;
    let t222 = block(1, 1, 1)?;
    let u_spans = [
        span_of(&block(1, 0, 0)?, 1)?,
        span_of(&block(0, 1, 0)?, 2)?,
        span_of(&block(0, 0, 1)?, 3)?,
    ];
    let v_spans = [
        span_of(&block(0, 1, 1)?, 1)?,
        span_of(&block(1, 0, 1)?, 2)?,
        span_of(&block(1, 1, 0)?, 3)?,
    ];
    let u_dims = [u_spans[0].dim(), u_spans[1].dim(), u_spans[2].dim()];
    let v_dims = [v_spans[0].dim(), v_spans[1].dim(), v_spans[2].dim()];
    let depth1: usize = u_dims.iter().sum();
    let depth2: usize = v_dims.iter().sum();
    if depth1 != depth2 {
        return Err(Error::InvalidParams(format!(
            "the summands peel {depth1} and {depth2} slice dimensions; the clone levels \
             only align when these are equal"
        )));
    }
    let u_bases: Vec<Vec<Matrix<Scalar>>> = u_spans.iter().map(|s| s.reduced_basis()).collect();
    let v_bases: Vec<Vec<Matrix<Scalar>>> = v_spans.iter().map(|s| s.reduced_basis()).collect();
    let rb1 = recursive_construction(&t111, [&u_bases[0], &u_bases[1], &u_bases[2]], params, cap)?;
    let rb2 = recursive_construction(&t222, [&v_bases[0], &v_bases[1], &v_bases[2]], params, cap)?;
    let depth = rb1.depth;
    let summand1 = rb1.tensor.relabel(|l| qualify_adjoined(l, "b1"))?;
    let summand2 = rb2.tensor.relabel(|l| qualify_adjoined(l, "b2"))?;
    let direct_sum = summand1.direct_sum(&summand2)?;

    let names = sigma_names(params, cap)?;
    let mut clone_t = t.clone();
    let mut c111 = t111;
    let mut c222 = t222;
    for _ in 0..depth {
        clone_t = clone_t.clone_along(&names)?;
        c111 = c111.clone_along(&names)?;
        c222 = c222.clone_along(&names)?;
    }
    let core = c111.direct_sum(&c222)?;
    let aligned = align_to(&core, clone_t.axes().clone(), field)?;
    let diff = clone_t.sub(&aligned)?;

    let mut failures: Vec<String> = Vec::new();
    let mut corrections = [
        Tensor3::zeros_scalar(clone_t.axes().clone(), field),
        Tensor3::zeros_scalar(clone_t.axes().clone(), field),
        Tensor3::zeros_scalar(clone_t.axes().clone(), field),
    ];
    for (i, j, k, v) in diff.nonzero_entries() {
        let tags = (
            base_tag(clone_t.axis(1).label(i)).unwrap_or(""),
            base_tag(clone_t.axis(2).label(j)).unwrap_or(""),
            base_tag(clone_t.axis(3).label(k)).unwrap_or(""),
        );
        let target = match tags {
            ("2", "1", "1") | ("1", "2", "2") => 0,
            ("1", "2", "1") | ("2", "1", "2") => 1,
            ("1", "1", "2") | ("2", "2", "1") => 2,
            _ => {
                failures.push(format!(
                    "residual entry at ({}, {}, {}) sits in a diagonal block",
                    clone_t.axis(1).label(i),
                    clone_t.axis(2).label(j),
                    clone_t.axis(3).label(k)
                ));
                continue;
            }
        };
        corrections[target].set(i, j, k, v.clone());
    }

    let mut mod_space_dims = [0usize; 3];
    let mut family_dims = [[0usize; 3]; 2];
    let mut spans: Vec<MatrixSpan> = Vec::with_capacity(3);
    for axis in 1..=3usize {
        let (ra, ca) = match axis {
            1 => (2, 3),
            2 => (1, 3),
            _ => (1, 2),
        };
        let rows = clone_t.axis(ra).clone();
        let cols = clone_t.axis(ca).clone();
        let mut per_build: [Vec<Matrix<Scalar>>; 2] = [Vec::new(), Vec::new()];
        for (which, rb) in [&rb1, &rb2].into_iter().enumerate() {
            for step in rb.steps.iter().filter(|s| s.axis == axis) {
                for m in &step.members {
                    per_build[which].push(m.embed(rows.clone(), cols.clone())?);
                }
            }
        }
        let span1 =
            MatrixSpan::from_generators(rows.clone(), cols.clone(), field, per_build[0].clone())?;
        let span2 =
            MatrixSpan::from_generators(rows.clone(), cols.clone(), field, per_build[1].clone())?;
        family_dims[0][axis - 1] = span1.dim();
        family_dims[1][axis - 1] = span2.dim();
        let mut all = per_build[0].clone();
        all.extend(per_build[1].clone());
        let span = MatrixSpan::from_generators(rows, cols, field, all)?;
        mod_space_dims[axis - 1] = span.dim();

        let columns: Vec<SparseVec> = span.generators().iter().map(matrix_cells).collect();
        let x = &corrections[axis - 1];
        for pos in 0..clone_t.axis(axis).len() {
            let slice = x.slice_at(axis, pos)?;
            if slice.is_zero_matrix() {
                continue;
            }
            let rhs = matrix_cells(&slice);
            match sparse_solve(&columns, &rhs, field) {
                None => failures.push(format!(
                    "axis {axis} slice {} of the correction leaves the adjoined span",
                    clone_t.axis(axis).label(pos)
                )),
                Some(coeffs) => {
                    let mut acc: BTreeMap<usize, Scalar> = BTreeMap::new();
                    for (coeff, col) in coeffs.iter().zip(&columns) {
                        if coeff.is_zero() {
                            continue;
                        }
                        for (cell, v) in col {
                            let e = acc.entry(*cell).or_insert_with(|| field.zero());
                            *e = e.add(&coeff.mul(v));
                        }
                    }
                    acc.retain(|_, v| !v.is_zero());
                    if acc != rhs {
                        failures.push(format!(
                            "axis {axis} slice {} certificate does not re-sum to the slice",
                            clone_t.axis(axis).label(pos)
                        ));
                    }
                }
            }
        }
        spans.push(span);
    }

    match aligned.apply_mod(
        &corrections[0],
        &corrections[1],
        &corrections[2],
        [&spans[0], &spans[1], &spans[2]],
    ) {
        Ok(rebuilt) => {
            if rebuilt != clone_t {
                failures.push("the corrected sum does not equal the cloned tensor".into());
            }
        }
        Err(e) => failures.push(format!("the correction leaves its slice span: {e}")),
    }

    let dims_additive = (0..3).all(|a| mod_space_dims[a] == family_dims[0][a] + family_dims[1][a]);
    Ok(AssemblyReport {
        depth,
        u_dims,
        v_dims,
        summands: [summand1, summand2],
        direct_sum,
        mod_space_dims,
        family_dims,
        dims_additive,
        containment: failures.is_empty(),
        degenerate: depth == 0,
        failures,
    })
}
