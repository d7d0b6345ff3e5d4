//! Symbolic generic tensors and exact genericity measurements.
//!
//! A family of polynomials (here: the entries of a symbolic tensor) has as
//! many degrees of freedom as the transcendence degree, over the base field,
//! of the field extension its members generate.  The Jacobian criterion
//! bounds this from below: if the Jacobian of the family with respect to a
//! chosen variable set reaches rank `q` at any evaluation point, the
//! transcendence degree is at least `q`.  Over characteristic zero the
//! generic Jacobian rank is exact; in characteristic `p` derivatives can
//! lose directions (`d(x^p)/dx = 0`), so every measurement here is an honest
//! lower bound and reports carry the caveat.
//!
//! The module provides, for instance size `(n, r)`:
//!
//! * a variable catalog with one variable vector pair per axis (`x`/`xi`,
//!   `y`/`ga`, `z`/`ze`, each `n x r`) and three `n x n` coefficient
//!   families `A`, `B`, `C` tying the pairs together;
//! * the `2n`-cube tensor summing `r` rank-one terms of the paired vectors,
//!   with axis labels block-tagged `1`/`2`;
//! * the `n`-cube interaction tensor whose `(i, j, k)` entry augments
//!   `sum_a x_i y_j z_k` with three correction terms driven by
//!   coefficient-weighted combinations of the complementary vectors;
//! * degrees-of-freedom estimation over a designated base-variable set,
//!   projection of a decomposed tensor along a scalar matrix, a
//!   left-to-right weak-column scan, a fill test for sums of `k` rank-one
//!   cube terms via initial forms, and exact integer bookkeeping for the
//!   `n^3 - sqrt(108 n^5)` dimension threshold.
//!
//! Field towers are represented by designating variable subsets as base:
//! "constants of the base field" are simply variables excluded from the
//! differentiation set.  No actual field extensions are constructed.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_integer::Roots;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::jacobian::{jacobian_rank, jacobian_rank_report, JacobianReport, DEFAULT_EVAL_BOUND};
use crate::label::IndexSet;
use crate::linalg::Matrix;
use crate::poly::{Monomial, MultiPoly, VarCatalog};
use crate::tensor::Tensor3;

/// Target number of rank-one terms for an instance of side `n`:
/// `floor(0.34 n^2)`, computed as `34 n^2 div 100` in exact integers.
pub fn r_of_n(n: usize) -> usize {
    let n = n as u128;
    ((34 * n * n) / 100) as usize
}

/// The nine variable families of an instance catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarFamily {
    /// First-axis vectors `x_i^a`, one per `(i, a)` in `n x r`.
    X,
    /// First-axis partner vectors `xi_i^a`.
    Xi,
    /// Second-axis vectors `y_j^a`.
    Y,
    /// Second-axis partner vectors `ga_j^a`.
    Ga,
    /// Third-axis vectors `z_k^a`.
    Z,
    /// Third-axis partner vectors `ze_k^a`.
    Ze,
    /// First-axis coefficients `A_i^t`, one per `(i, t)` in `n x n`.
    A,
    /// Second-axis coefficients `B_j^t`.
    B,
    /// Third-axis coefficients `C_k^t`.
    C,
}

impl VarFamily {
    fn prefix(self) -> &'static str {
        match self {
            VarFamily::X => "x",
            VarFamily::Xi => "xi",
            VarFamily::Y => "y",
            VarFamily::Ga => "ga",
            VarFamily::Z => "z",
            VarFamily::Ze => "ze",
            VarFamily::A => "A",
            VarFamily::B => "B",
            VarFamily::C => "C",
        }
    }

    /// Coefficient families are `n x n`; vector families are `n x r`.
    pub fn is_coefficient(self) -> bool {
        matches!(self, VarFamily::A | VarFamily::B | VarFamily::C)
    }
}

const VECTOR_FAMILIES: [VarFamily; 6] = [
    VarFamily::X,
    VarFamily::Xi,
    VarFamily::Y,
    VarFamily::Ga,
    VarFamily::Z,
    VarFamily::Ze,
];

const COEFFICIENT_FAMILIES: [VarFamily; 3] = [VarFamily::A, VarFamily::B, VarFamily::C];

/// All variables of one instance: six `n x r` vector families followed by
/// three `n x n` coefficient families, named `x1_1`, ..., `C{n}_{n}`.
#[derive(Debug, Clone)]
pub struct InstanceCatalog {
    n: usize,
    r: usize,
    catalog: Arc<VarCatalog>,
}

impl InstanceCatalog {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        if n == 0 || r == 0 {
            return Err(Error::InvalidParams(
                "an instance catalog needs n >= 1 and r >= 1".into(),
            ));
        }
        let mut names = Vec::with_capacity(6 * n * r + 3 * n * n);
        for fam in VECTOR_FAMILIES {
            for i in 1..=n {
                for a in 1..=r {
                    names.push(format!("{}{}_{}", fam.prefix(), i, a));
                }
            }
        }
        for fam in COEFFICIENT_FAMILIES {
            for i in 1..=n {
                for t in 1..=n {
                    names.push(format!("{}{}_{}", fam.prefix(), i, t));
                }
            }
        }
        Ok(InstanceCatalog {
            n,
            r,
            catalog: VarCatalog::new(names)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn catalog(&self) -> &Arc<VarCatalog> {
        &self.catalog
    }

    fn family_base(&self, fam: VarFamily) -> usize {
        let nr = self.n * self.r;
        let nn = self.n * self.n;
        match fam {
            VarFamily::X => 0,
            VarFamily::Xi => nr,
            VarFamily::Y => 2 * nr,
            VarFamily::Ga => 3 * nr,
            VarFamily::Z => 4 * nr,
            VarFamily::Ze => 5 * nr,
            VarFamily::A => 6 * nr,
            VarFamily::B => 6 * nr + nn,
            VarFamily::C => 6 * nr + 2 * nn,
        }
    }

    fn family_width(&self, fam: VarFamily) -> usize {
        if fam.is_coefficient() {
            self.n
        } else {
            self.r
        }
    }

    /// Catalog index of variable `(fam, i, j)`; `i < n`, and `j < r` for
    /// vector families or `j < n` for coefficient families (0-based).
    pub fn index(&self, fam: VarFamily, i: usize, j: usize) -> Result<u32> {
        let width = self.family_width(fam);
        if i >= self.n || j >= width {
            return Err(Error::UnknownVariable(format!(
                "{}[{i}][{j}] outside the {} x {width} family",
                fam.prefix(),
                self.n
            )));
        }
        Ok((self.family_base(fam) + i * width + j) as u32)
    }

    pub fn var(&self, field: FieldSpec, fam: VarFamily, i: usize, j: usize) -> Result<MultiPoly> {
        MultiPoly::var(field, self.catalog.clone(), self.index(fam, i, j)?)
    }

    /// All catalog indices of one family, in `(i, j)` order.
    pub fn family_indices(&self, fam: VarFamily) -> Vec<u32> {
        let base = self.family_base(fam);
        let count = self.n * self.family_width(fam);
        (base..base + count).map(|v| v as u32).collect()
    }

    /// The `x`, `y`, `z` indices: the variables kept active when everything
    /// else is pushed into the base field.
    pub fn primary_indices(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(3 * self.n * self.r);
        for fam in [VarFamily::X, VarFamily::Y, VarFamily::Z] {
            out.extend(self.family_indices(fam));
        }
        out
    }

    /// The `xi`, `ga`, `ze`, `A`, `B`, `C` indices: the standard base set.
    pub fn base_indices(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for fam in [VarFamily::Xi, VarFamily::Ga, VarFamily::Ze] {
            out.extend(self.family_indices(fam));
        }
        for fam in COEFFICIENT_FAMILIES {
            out.extend(self.family_indices(fam));
        }
        out
    }
}

/// Instance-level knobs for the genericity measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericityParams {
    pub n: usize,
    pub r: usize,
    /// Projection codimension: scalar matrices `Q` have shape `(n-d) x n`.
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
}

impl GenericityParams {
    /// Size-driven defaults: `r = max(floor(0.34 n^2), 1)` and
    /// `d = min(floor(sqrt(3n)), n-1)`, both clamped so that tiny `n`
    /// remains usable.
    pub fn defaults(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams(
                "instance side n must be positive".into(),
            ));
        }
        let d = (3 * n).sqrt().min(n - 1);
        let params = GenericityParams {
            n,
            r: r_of_n(n).max(1),
            d,
            trials: 3,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.r == 0 {
            return Err(Error::InvalidParams("n and r must be positive".into()));
        }
        if self.d >= self.n {
            return Err(Error::InvalidParams(format!(
                "projection codimension {} must be below n = {}",
                self.d, self.n
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParams(
                "at least one trial is required".into(),
            ));
        }
        Ok(())
    }
}

fn one_monomial(field: FieldSpec, vars: &[u32]) -> (Monomial, Scalar) {
    (
        Monomial::from_pairs(vars.iter().map(|&v| (v, 1)).collect()),
        field.one(),
    )
}

/// The `2n x 2n x 2n` symbolic tensor summing `r` rank-one terms of the
/// concatenated vectors `(x | xi)`, `(y | ga)`, `(z | ze)`.  Axis labels are
/// block-tagged: positions below `n` carry tag `1` (the plain vectors),
/// positions from `n` carry tag `2` (the partner vectors).
pub fn build_generic_t(cat: &InstanceCatalog, field: FieldSpec) -> Result<Tensor3<MultiPoly>> {
    let n = cat.n();
    let mk_axis = |stem: &str| -> Result<IndexSet> {
        let names: Vec<String> = (1..=n).map(|i| format!("{stem}{i}")).collect();
        let plain = IndexSet::from_atoms(&names)?.tagged("1")?;
        let partner = IndexSet::from_atoms(&names)?.tagged("2")?;
        plain.union(&partner)
    };
    let axes = [mk_axis("i")?, mk_axis("j")?, mk_axis("k")?];
    let pick = |vec_fam: VarFamily, partner_fam: VarFamily, pos: usize, a: usize| -> Result<u32> {
        if pos < n {
            cat.index(vec_fam, pos, a)
        } else {
            cat.index(partner_fam, pos - n, a)
        }
    };
    let mut entries = Vec::with_capacity(8 * n * n * n);
    for i in 0..2 * n {
        for j in 0..2 * n {
            for k in 0..2 * n {
                let mut terms = Vec::with_capacity(cat.r());
                for a in 0..cat.r() {
                    let vs = [
                        pick(VarFamily::X, VarFamily::Xi, i, a)?,
                        pick(VarFamily::Y, VarFamily::Ga, j, a)?,
                        pick(VarFamily::Z, VarFamily::Ze, k, a)?,
                    ];
                    terms.push(one_monomial(field, &vs));
                }
                entries.push(MultiPoly::from_terms(field, cat.catalog().clone(), terms)?);
            }
        }
    }
    let mut iter = entries.into_iter();
    Ok(Tensor3::from_fn(
        axes,
        MultiPoly::zero(field, cat.catalog().clone()),
        |_, _, _| iter.next().expect("one entry per position"),
    ))
}

/// How the correction coefficients of one axis enter the interaction tensor.
#[derive(Debug, Clone)]
pub enum CoeffAssignment {
    /// No correction term on this axis.
    Zero,
    /// Coefficients stay symbolic: the catalog's own `A`/`B`/`C` variables.
    Symbolic,
    /// Coefficients are fixed scalars, given as an `n x n` table.
    Scalars(Vec<Vec<Scalar>>),
}

impl CoeffAssignment {
    fn validate(&self, n: usize, field: FieldSpec) -> Result<()> {
        if let CoeffAssignment::Scalars(table) = self {
            if table.len() != n || table.iter().any(|row| row.len() != n) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient table must be {n} x {n}"
                )));
            }
            for row in table {
                for v in row {
                    if v.field() != field {
                        return Err(Error::FieldMismatch {
                            expected: field.to_string(),
                            found: v.field().to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// The `n x n x n` interaction tensor: entry `(i, j, k)` is
/// `sum_a (x_i y_j z_k + a_i y_j z_k + x_i b_j z_k + x_i y_j c_k)` where the
/// correction vectors are coefficient combinations of the partner variables,
/// `a_i^a = sum_t A_i^t xi_t^a`, and likewise for `b` over `ga` and `c` over
/// `ze`.  Each coefficient family enters symbolically, as fixed scalars, or
/// not at all, per its assignment.
pub fn build_phi(
    cat: &InstanceCatalog,
    field: FieldSpec,
    a: &CoeffAssignment,
    b: &CoeffAssignment,
    c: &CoeffAssignment,
) -> Result<Tensor3<MultiPoly>> {
    let n = cat.n();
    for assignment in [a, b, c] {
        assignment.validate(n, field)?;
    }
    let mk_axis = |stem: &str| -> Result<IndexSet> {
        let names: Vec<String> = (1..=n).map(|i| format!("{stem}{i}")).collect();
        IndexSet::from_atoms(&names)
    };
    let axes = [mk_axis("i")?, mk_axis("j")?, mk_axis("k")?];
    let correction = |assignment: &CoeffAssignment,
                      coeff_fam: VarFamily,
                      partner_fam: VarFamily,
                      pos: usize,
                      alpha: usize,
                      others: [u32; 2],
                      terms: &mut Vec<(Monomial, Scalar)>|
     -> Result<()> {
        match assignment {
            CoeffAssignment::Zero => {}
            CoeffAssignment::Symbolic => {
                for t in 0..n {
                    let coeff = cat.index(coeff_fam, pos, t)?;
                    let partner = cat.index(partner_fam, t, alpha)?;
                    terms.push(one_monomial(field, &[coeff, partner, others[0], others[1]]));
                }
            }
            CoeffAssignment::Scalars(table) => {
                for t in 0..n {
                    let v = &table[pos][t];
                    if v.is_zero() {
                        continue;
                    }
                    let partner = cat.index(partner_fam, t, alpha)?;
                    let monomial =
                        Monomial::from_pairs(vec![(partner, 1), (others[0], 1), (others[1], 1)]);
                    terms.push((monomial, v.clone()));
                }
            }
        }
        Ok(())
    };
    let mut entries = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut terms = Vec::new();
                for alpha in 0..cat.r() {
                    let x = cat.index(VarFamily::X, i, alpha)?;
                    let y = cat.index(VarFamily::Y, j, alpha)?;
                    let z = cat.index(VarFamily::Z, k, alpha)?;
                    terms.push(one_monomial(field, &[x, y, z]));
                    correction(a, VarFamily::A, VarFamily::Xi, i, alpha, [y, z], &mut terms)?;
                    correction(b, VarFamily::B, VarFamily::Ga, j, alpha, [x, z], &mut terms)?;
                    correction(c, VarFamily::C, VarFamily::Ze, k, alpha, [x, y], &mut terms)?;
                }
                entries.push(MultiPoly::from_terms(field, cat.catalog().clone(), terms)?);
            }
        }
    }
    let mut iter = entries.into_iter();
    Ok(Tensor3::from_fn(
        axes,
        MultiPoly::zero(field, cat.catalog().clone()),
        |_, _, _| iter.next().expect("one entry per position"),
    ))
}

fn tensor_entries(st: &Tensor3<MultiPoly>) -> Vec<MultiPoly> {
    let [ni, nj, nk] = st.dims();
    let mut out = Vec::with_capacity(ni * nj * nk);
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                out.push(st.get(i, j, k).clone());
            }
        }
    }
    out
}

fn active_complement(catalog_len: usize, base_vars: &[u32]) -> Result<Vec<u32>> {
    let mut base = BTreeSet::new();
    for &v in base_vars {
        if v as usize >= catalog_len {
            return Err(Error::UnknownVariable(format!("#{v}")));
        }
        base.insert(v);
    }
    Ok((0..catalog_len as u32)
        .filter(|v| !base.contains(v))
        .collect())
}

/// Lower bound on the degrees of freedom of the tensor's entry family over
/// the base field extended by the `base_vars`: the maximum Jacobian rank,
/// over the trials, with respect to all remaining variables.
pub fn degrees_of_freedom(
    st: &Tensor3<MultiPoly>,
    base_vars: &[u32],
    trials: usize,
    seed: u64,
) -> Result<usize> {
    Ok(degrees_of_freedom_report(st, base_vars, trials, seed)?.rank)
}

/// The full trial-by-trial report behind [`degrees_of_freedom`].
pub fn degrees_of_freedom_report(
    st: &Tensor3<MultiPoly>,
    base_vars: &[u32],
    trials: usize,
    seed: u64,
) -> Result<JacobianReport> {
    let entries = tensor_entries(st);
    let catalog_len = st.zero_entry().catalog().len();
    let active = active_complement(catalog_len, base_vars)?;
    jacobian_rank_report(&entries, &active, trials, seed, DEFAULT_EVAL_BOUND)
}

/// Projects a decomposed tensor along a scalar matrix: each term
/// `u (x) v (x) w` becomes `(Q u) (x) (Q v) (x) (Q w)`, and the results sum
/// to an `m x m x m` tensor for an `m x n` matrix `Q`.  The projection acts
/// on the decomposition, not on the summed tensor.
pub fn project_tensor(
    terms: &[[Vec<MultiPoly>; 3]],
    q: &Matrix<Scalar>,
) -> Result<Tensor3<MultiPoly>> {
    let first = terms
        .first()
        .and_then(|t| t[0].first())
        .ok_or_else(|| Error::InvalidParams("an empty decomposition cannot be projected".into()))?;
    let field = first.field();
    let catalog = first.catalog().clone();
    q.ensure_field(field)?;
    let n = q.ncols();
    let m = q.nrows();
    if m == 0 {
        return Err(Error::InvalidParams(
            "the projection needs at least one row".into(),
        ));
    }
    for term in terms {
        for vector in term {
            if vector.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "every factor vector must have the projection's {n} columns"
                )));
            }
            for p in vector {
                first.ensure_compatible(p)?;
            }
        }
    }
    let project = |vector: &[MultiPoly]| -> Result<Vec<MultiPoly>> {
        (0..m)
            .map(|row| {
                let mut acc = MultiPoly::zero(field, catalog.clone());
                for (col, p) in vector.iter().enumerate() {
                    acc = acc.add(&p.scale(q.get(row, col))?)?;
                }
                Ok(acc)
            })
            .collect()
    };
    let zero = MultiPoly::zero(field, catalog.clone());
    let mut entries = vec![zero.clone(); m * m * m];
    for term in terms {
        let pu = project(&term[0])?;
        let pv = project(&term[1])?;
        let pw = project(&term[2])?;
        for i in 0..m {
            for j in 0..m {
                let uv = pu[i].mul(&pv[j])?;
                for k in 0..m {
                    let cell = &mut entries[(i * m + j) * m + k];
                    *cell = cell.add(&uv.mul(&pw[k])?)?;
                }
            }
        }
    }
    let axes = [
        IndexSet::positional(m),
        IndexSet::positional(m),
        IndexSet::positional(m),
    ];
    let mut iter = entries.into_iter();
    Ok(Tensor3::from_fn(axes, zero, |_, _, _| {
        iter.next().expect("one entry per position")
    }))
}

/// Verdict for one scanned column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnStatus {
    /// The projected column contributed the full `n - d` to the running
    /// Jacobian rank: its entries are generic over the prefix.
    CertifiedGeneric,
    /// The contribution fell short over a characteristic-zero field, where
    /// the Jacobian criterion is generically exact (up to sampling).
    Weak,
    /// The contribution fell short over positive characteristic, where a
    /// low Jacobian rank proves nothing.
    Indeterminate,
}

/// Outcome of [`weak_column_scan`].
#[derive(Debug, Clone)]
pub struct ColumnScanReport {
    /// Full per-column contribution target, `n - d`.
    pub target: usize,
    pub increments: Vec<usize>,
    pub statuses: Vec<ColumnStatus>,
    pub weak: Vec<usize>,
    pub certified: Vec<usize>,
    pub indeterminate: Vec<usize>,
    /// `floor(delta / d)` when a deficit `delta` was supplied.
    pub weak_limit: Option<u64>,
    pub weak_within_limit: Option<bool>,
    pub trials: usize,
    pub seed: u64,
}

/// Scans the columns of a symbolic `n x m` matrix left to right.  Column `j`
/// is projected by the scalar matrix `Q` and its contribution is the
/// increase of the measured Jacobian-rank lower bound when its `n - d`
/// projected entries join the prefix family.  A column reaching the full
/// `n - d` is certified generic over the prefix; a column falling short is
/// reported weak over characteristic zero and indeterminate over positive
/// characteristic.  When the total deficit `delta` is supplied, the weak
/// count is compared against the `delta / d` ceiling.
pub fn weak_column_scan(
    columns: &[Vec<MultiPoly>],
    q: &Matrix<Scalar>,
    d: usize,
    delta: Option<u64>,
    trials: usize,
    seed: u64,
) -> Result<ColumnScanReport> {
    let n = q.ncols();
    if d >= n {
        return Err(Error::InvalidParams(format!(
            "projection codimension {d} must be below the column height {n}"
        )));
    }
    if q.nrows() != n - d {
        return Err(Error::ShapeMismatch(format!(
            "the projection must have n - d = {} rows, found {}",
            n - d,
            q.nrows()
        )));
    }
    if delta.is_some() && d == 0 {
        return Err(Error::InvalidParams(
            "the weak-count ceiling delta / d needs a positive d".into(),
        ));
    }
    let first = columns.first().and_then(|c| c.first());
    if let Some(first) = first {
        q.ensure_field(first.field())?;
        for column in columns {
            if column.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "every column must have {n} entries"
                )));
            }
            for p in column {
                first.ensure_compatible(p)?;
            }
        }
    }
    let target = n - d;
    let char_zero = first
        .map(|p| p.field().characteristic() == 0)
        .unwrap_or(true);
    let all_vars: Vec<u32> = first
        .map(|p| (0..p.catalog().len() as u32).collect())
        .unwrap_or_default();

    let mut prefix: Vec<MultiPoly> = Vec::new();
    let mut prev_rank = 0usize;
    let mut increments = Vec::with_capacity(columns.len());
    let mut statuses = Vec::with_capacity(columns.len());
    for column in columns {
        for row in 0..target {
            let mut acc: Option<MultiPoly> = None;
            for (col, p) in column.iter().enumerate() {
                let scaled = p.scale(q.get(row, col))?;
                acc = Some(match acc {
                    None => scaled,
                    Some(prev) => prev.add(&scaled)?,
                });
            }
            prefix.push(acc.expect("n >= 1 projected entries"));
        }
        let rank = jacobian_rank(&prefix, &all_vars, trials, seed)?;
        let inc = rank - prev_rank;
        prev_rank = rank;
        increments.push(inc);
        statuses.push(if inc >= target {
            ColumnStatus::CertifiedGeneric
        } else if char_zero {
            ColumnStatus::Weak
        } else {
            ColumnStatus::Indeterminate
        });
    }
    let pick = |status: ColumnStatus| -> Vec<usize> {
        statuses
            .iter()
            .enumerate()
            .filter_map(|(j, &s)| (s == status).then_some(j))
            .collect()
    };
    let weak = pick(ColumnStatus::Weak);
    let weak_limit = delta.map(|dl| dl / d as u64);
    let weak_within_limit = weak_limit.map(|limit| weak.len() as u64 <= limit);
    Ok(ColumnScanReport {
        target,
        increments,
        certified: pick(ColumnStatus::CertifiedGeneric),
        indeterminate: pick(ColumnStatus::Indeterminate),
        weak,
        statuses,
        weak_limit,
        weak_within_limit,
        trials,
        seed,
    })
}

/// Outcome of the fill test for sums of `k` rank-one cube terms.
#[derive(Debug, Clone)]
pub struct FillReport {
    pub n: usize,
    pub k: usize,
    /// `n^3`, the rank at which the entry family fills.
    pub entry_count: usize,
    /// `min(k (3n - 2), n^3)`: the parameter-count ceiling on the Jacobian
    /// rank, each rank-one cube term contributing at most `3n - 2` cone
    /// dimensions. Defective formats fall short of this ceiling.
    pub fill_target: usize,
    /// Jacobian rank of the initial forms of the entries.
    pub initial_rank: usize,
    /// Jacobian rank of the full entries.
    pub full_rank: usize,
    pub fills: bool,
    pub deficient: bool,
    /// Whether the full system reached at least the initial-form rank; the
    /// top-degree forms of a family never out-rank the family itself.
    pub transfer_ok: bool,
    pub corrected: bool,
    pub trials: usize,
    pub seed: u64,
}

/// Builds `sum_a (x^a + p) (x) (y^a + q) (x) (z^a + s)` over `k` variable
/// vector triples, optionally shifted by fixed random scalar vectors, and
/// measures the Jacobian rank of the entry family and of its initial forms.
/// The initial forms drop the shifts, so a full-rank initial system
/// certifies the genericity of the shifted system as well.
pub fn lickteig_pipeline(
    n: usize,
    k: usize,
    field: FieldSpec,
    corrected: bool,
    trials: usize,
    seed: u64,
) -> Result<FillReport> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParams(
            "the fill test needs n >= 1 and k >= 1".into(),
        ));
    }
    let mut names = Vec::with_capacity(3 * n * k);
    for stem in ["x", "y", "z"] {
        for i in 1..=n {
            for a in 1..=k {
                names.push(format!("{stem}{i}_{a}"));
            }
        }
    }
    let catalog = VarCatalog::new(names)?;
    let idx = |axis: usize, i: usize, a: usize| -> u32 { (axis * n * k + i * k + a) as u32 };
    let shifts: Vec<Scalar> = if corrected {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x51f7);
        (0..3 * n * k)
            .map(|_| field.random_scalar(&mut rng, DEFAULT_EVAL_BOUND))
            .collect()
    } else {
        vec![field.zero(); 3 * n * k]
    };
    let factor = |axis: usize, i: usize, a: usize| -> Result<MultiPoly> {
        let v = MultiPoly::var(field, catalog.clone(), idx(axis, i, a))?;
        let shift = &shifts[idx(axis, i, a) as usize];
        if shift.is_zero() {
            Ok(v)
        } else {
            v.add(&MultiPoly::constant(field, catalog.clone(), shift.clone()))
        }
    };
    let mut entries = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                let mut acc = MultiPoly::zero(field, catalog.clone());
                for a in 0..k {
                    let term = factor(0, i, a)?
                        .mul(&factor(1, j, a)?)?
                        .mul(&factor(2, kk, a)?)?;
                    acc = acc.add(&term)?;
                }
                entries.push(acc);
            }
        }
    }
    let initial: Vec<MultiPoly> = entries
        .iter()
        .map(|p| p.initial_form())
        .collect::<Result<_>>()?;
    let all_vars: Vec<u32> = (0..catalog.len() as u32).collect();
    let initial_rank = jacobian_rank(&initial, &all_vars, trials, seed)?;
    let full_rank = jacobian_rank(&entries, &all_vars, trials, seed)?;
    let entry_count = n * n * n;
    Ok(FillReport {
        n,
        k,
        entry_count,
        fill_target: (k * (3 * n - 2)).min(entry_count),
        initial_rank,
        full_rank,
        fills: full_rank == entry_count,
        deficient: full_rank < entry_count,
        transfer_ok: full_rank >= initial_rank,
        corrected,
        trials,
        seed,
    })
}

/// The integer-exact dimension threshold `n^3 - floor(sqrt(108 n^5))`.  The
/// real quantity `n^3 - sqrt(108) n^{5/2}` is zero at `n = 108` and positive
/// exactly from `n = 109`; the integer form agrees in sign for every `n`.
pub fn dimension_threshold(n: u64) -> i128 {
    let n = n as u128;
    let cube = (n * n * n) as i128;
    let inner = 108 * n * n * n * n * n;
    cube - inner.sqrt() as i128
}

/// Least `n <= limit` with a positive dimension threshold.
pub fn first_positive_threshold(limit: u64) -> Option<u64> {
    (1..=limit).find(|&n| dimension_threshold(n) > 0)
}

/// Outcome of the degrees-of-freedom threshold check.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub n: usize,
    pub r: usize,
    /// Measured lower bound for the interaction tensor's degrees of freedom
    /// over the standard base set.
    pub dof_lower: usize,
    /// `ceil(dof / 3n)`: a family with that many degrees of freedom cannot
    /// be written with fewer rank-one terms.
    pub implied_rank_bound: usize,
    /// Whether twice the implied bound exceeds `r`.
    pub exceeds_half_r: bool,
    pub threshold_at_n: i128,
    pub threshold_positive: bool,
    /// Least side at which the threshold turns positive (scanned up to
    /// 1000); the regime is far beyond exact-Jacobian reach.
    pub first_positive_n: Option<u64>,
    pub trials: usize,
    pub seed: u64,
}

/// Measures the degrees of freedom of the symbolic interaction tensor at
/// side `n` over the standard base set, derives the implied rank bound
/// `ceil(dof / 3n)`, and reports the exact integer threshold bookkeeping
/// that locates the asymptotic regime.
pub fn dof_threshold_check(n: usize, trials: usize, seed: u64) -> Result<ThresholdReport> {
    let r = r_of_n(n).max(1);
    let cat = InstanceCatalog::new(n, r)?;
    let phi = build_phi(
        &cat,
        FieldSpec::Q,
        &CoeffAssignment::Symbolic,
        &CoeffAssignment::Symbolic,
        &CoeffAssignment::Symbolic,
    )?;
    let dof_lower = degrees_of_freedom(&phi, &cat.base_indices(), trials, seed)?;
    let implied_rank_bound = dof_lower.div_ceil(3 * n);
    let threshold_at_n = dimension_threshold(n as u64);
    Ok(ThresholdReport {
        n,
        r,
        dof_lower,
        implied_rank_bound,
        exceeds_half_r: 2 * implied_rank_bound > r,
        threshold_at_n,
        threshold_positive: threshold_at_n > 0,
        first_positive_n: first_positive_threshold(1000),
        trials,
        seed,
    })
}

/// One random scalar per catalog variable, reproducible from the seed.
pub fn random_assignment(
    catalog: &Arc<VarCatalog>,
    field: FieldSpec,
    bound: u64,
    seed: u64,
) -> Vec<Scalar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..catalog.len())
        .map(|_| field.random_scalar(&mut rng, bound))
        .collect()
}

/// Evaluates every entry at a full assignment.
pub fn evaluate_tensor(st: &Tensor3<MultiPoly>, point: &[Scalar]) -> Result<Tensor3<Scalar>> {
    let field = st.zero_entry().field();
    let mut out = Tensor3::zeros_scalar(st.axes().clone(), field);
    let [ni, nj, nk] = st.dims();
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                out.set(i, j, k, st.get(i, j, k).evaluate(point)?);
            }
        }
    }
    Ok(out)
}

/// Evaluates the tensor at a seeded random assignment; returns the scalar
/// tensor together with the point used.
pub fn assign_random(
    st: &Tensor3<MultiPoly>,
    bound: u64,
    seed: u64,
) -> Result<(Tensor3<Scalar>, Vec<Scalar>)> {
    let field = st.zero_entry().field();
    let point = random_assignment(st.zero_entry().catalog(), field, bound, seed);
    Ok((evaluate_tensor(st, &point)?, point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::{exact_rank, SearchBudget};

    #[test]
    fn term_count_formula_matches_integer_arithmetic() {
        assert_eq!(r_of_n(10), 34);
        assert_eq!(r_of_n(5), 8);
        assert_eq!(r_of_n(2), 1);
        assert_eq!(r_of_n(1), 0);
        assert_eq!(r_of_n(100), 3400);
    }

    #[test]
    fn catalog_indices_round_trip_names() {
        let cat = InstanceCatalog::new(2, 3).unwrap();
        assert_eq!(cat.catalog().len(), 6 * 2 * 3 + 3 * 4);
        let idx = cat.index(VarFamily::Ga, 1, 2).unwrap();
        assert_eq!(cat.catalog().name(idx), "ga2_3");
        let idx = cat.index(VarFamily::B, 0, 1).unwrap();
        assert_eq!(cat.catalog().name(idx), "B1_2");
        assert!(cat.index(VarFamily::X, 2, 0).is_err());
        assert!(cat.index(VarFamily::A, 0, 3).is_err());
        assert_eq!(cat.primary_indices().len(), 3 * 2 * 3);
        assert_eq!(cat.base_indices().len(), 3 * 2 * 3 + 3 * 4);
    }

    #[test]
    fn params_defaults_stay_valid() {
        let p = GenericityParams::defaults(10, 7).unwrap();
        assert_eq!(p.r, 34);
        assert_eq!(p.d, 5);
        let tiny = GenericityParams::defaults(1, 7).unwrap();
        assert_eq!(tiny.r, 1);
        assert_eq!(tiny.d, 0);
        let mut bad = p;
        bad.d = 10;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn generic_tensor_entries_expand_as_expected() {
        let cat = InstanceCatalog::new(1, 1).unwrap();
        let field = FieldSpec::Q;
        let t = build_generic_t(&cat, field).unwrap();
        assert_eq!(t.dims(), [2, 2, 2]);
        let v = |fam, i, j| cat.var(field, fam, i, j).unwrap();
        let product = |fs: [MultiPoly; 3]| fs[0].mul(&fs[1]).unwrap().mul(&fs[2]).unwrap();
        let x = || v(VarFamily::X, 0, 0);
        let xi = || v(VarFamily::Xi, 0, 0);
        let y = || v(VarFamily::Y, 0, 0);
        let ga = || v(VarFamily::Ga, 0, 0);
        let z = || v(VarFamily::Z, 0, 0);
        let ze = || v(VarFamily::Ze, 0, 0);
        assert_eq!(t.get(0, 0, 0), &product([x(), y(), z()]));
        assert_eq!(t.get(1, 1, 1), &product([xi(), ga(), ze()]));
        assert_eq!(t.get(0, 1, 0), &product([x(), ga(), z()]));
        assert_eq!(t.axis(1).label(0).to_string(), "1:i1");
        assert_eq!(t.axis(1).label(1).to_string(), "2:i1");

        let cat = InstanceCatalog::new(2, 3).unwrap();
        let t = build_generic_t(&cat, FieldSpec::Q).unwrap();
        assert_eq!(t.dims(), [4, 4, 4]);
        for (_, _, _, e) in t.nonzero_entries() {
            assert_eq!(e.num_terms(), 3);
            assert_eq!(e.total_degree(), Some(3));
        }
    }

    #[test]
    fn assigned_generic_tensor_has_rank_at_most_r() {
        for (n, r, seed) in [(1usize, 1usize, 11u64), (1, 2, 12)] {
            let cat = InstanceCatalog::new(n, r).unwrap();
            let field = FieldSpec::fp(5).unwrap();
            let t = build_generic_t(&cat, field).unwrap();
            let (assigned, _) = assign_random(&t, DEFAULT_EVAL_BOUND, seed).unwrap();
            let cert = exact_rank(&assigned, &SearchBudget::default()).unwrap();
            let rank = cert.rank().expect("2x2x2 instances rank exactly");
            assert!(rank <= r, "rank {rank} exceeds {r} terms");
        }
    }

    #[test]
    fn interaction_tensor_matches_the_entry_formula() {
        let cat = InstanceCatalog::new(1, 1).unwrap();
        let phi = build_phi(
            &cat,
            FieldSpec::Q,
            &CoeffAssignment::Symbolic,
            &CoeffAssignment::Symbolic,
            &CoeffAssignment::Symbolic,
        )
        .unwrap();
        assert_eq!(phi.dims(), [1, 1, 1]);
        let entry = phi.get(0, 0, 0);
        assert_eq!(entry.num_terms(), 4);
        assert_eq!(entry.total_degree(), Some(4));
        let field = FieldSpec::Q;
        let v = |fam, i, j| cat.var(field, fam, i, j).unwrap();
        let product = |fs: &[MultiPoly]| {
            fs.iter()
                .skip(1)
                .fold(fs[0].clone(), |acc, f| acc.mul(f).unwrap())
        };
        let x = v(VarFamily::X, 0, 0);
        let y = v(VarFamily::Y, 0, 0);
        let z = v(VarFamily::Z, 0, 0);
        let expected = product(&[x.clone(), y.clone(), z.clone()])
            .add(&product(&[
                v(VarFamily::A, 0, 0),
                v(VarFamily::Xi, 0, 0),
                y.clone(),
                z.clone(),
            ]))
            .unwrap()
            .add(&product(&[
                v(VarFamily::B, 0, 0),
                v(VarFamily::Ga, 0, 0),
                x.clone(),
                z.clone(),
            ]))
            .unwrap()
            .add(&product(&[
                v(VarFamily::C, 0, 0),
                v(VarFamily::Ze, 0, 0),
                x.clone(),
                y.clone(),
            ]))
            .unwrap();
        assert_eq!(entry, &expected);

        let zero_phi = build_phi(
            &cat,
            FieldSpec::Q,
            &CoeffAssignment::Zero,
            &CoeffAssignment::Zero,
            &CoeffAssignment::Zero,
        )
        .unwrap();
        assert_eq!(zero_phi.get(0, 0, 0), &product(&[x, y, z]));

        let field = FieldSpec::Q;
        let table = vec![vec![field.from_i64(2)]];
        let scalar_phi = build_phi(
            &cat,
            field,
            &CoeffAssignment::Scalars(table.clone()),
            &CoeffAssignment::Scalars(table.clone()),
            &CoeffAssignment::Scalars(table),
        )
        .unwrap();
        let entry = scalar_phi.get(0, 0, 0);
        assert_eq!(entry.total_degree(), Some(3));
        assert_eq!(entry.num_terms(), 4);
    }

    #[test]
    fn independent_entries_have_full_degrees_of_freedom() {
        let catalog = VarCatalog::new((0..8).map(|i| format!("t{i}")).collect::<Vec<_>>()).unwrap();
        let axes = [
            IndexSet::positional(2),
            IndexSet::positional(2),
            IndexSet::positional(2),
        ];
        let t = Tensor3::from_fn(
            axes,
            MultiPoly::zero(FieldSpec::Q, catalog.clone()),
            |i, j, k| {
                MultiPoly::var(FieldSpec::Q, catalog.clone(), (4 * i + 2 * j + k) as u32).unwrap()
            },
        );
        assert_eq!(degrees_of_freedom(&t, &[], 2, 5).unwrap(), 8);
    }

    #[test]
    fn rank_one_tensor_has_cone_dimension_freedom() {
        let names: Vec<String> = ["u", "v", "w"]
            .iter()
            .flat_map(|s| (1..=2).map(move |i| format!("{s}{i}")))
            .collect();
        let catalog = VarCatalog::new(names).unwrap();
        let field = FieldSpec::Q;
        let var = |i: u32| MultiPoly::var(field, catalog.clone(), i).unwrap();
        let axes = [
            IndexSet::positional(2),
            IndexSet::positional(2),
            IndexSet::positional(2),
        ];
        let t = Tensor3::from_fn(axes, MultiPoly::zero(field, catalog.clone()), |i, j, k| {
            var(i as u32)
                .mul(&var(2 + j as u32))
                .unwrap()
                .mul(&var(4 + k as u32))
                .unwrap()
        });
        assert_eq!(degrees_of_freedom(&t, &[], 3, 5).unwrap(), 4);
    }

    #[test]
    fn generic_tensor_freedom_over_partner_base_is_three() {
        let cat = InstanceCatalog::new(1, 1).unwrap();
        let t = build_generic_t(&cat, FieldSpec::Q).unwrap();
        let dof = degrees_of_freedom(&t, &cat.base_indices(), 3, 5).unwrap();
        assert_eq!(dof, 3);
    }

    #[test]
    fn projection_by_the_identity_is_the_identity() {
        let names: Vec<String> = ["u", "v", "w"]
            .iter()
            .flat_map(|s| (1..=3).map(move |i| format!("{s}{i}")))
            .collect();
        let catalog = VarCatalog::new(names).unwrap();
        let field = FieldSpec::Q;
        let var = |i: u32| MultiPoly::var(field, catalog.clone(), i).unwrap();
        let term = [
            (0..3).map(&var).collect::<Vec<_>>(),
            (0..3).map(|i| var(3 + i)).collect::<Vec<_>>(),
            (0..3).map(|i| var(6 + i)).collect::<Vec<_>>(),
        ];
        let rows = IndexSet::positional(3);
        let mut q = Matrix::zeros(rows.clone(), rows, field.zero());
        for i in 0..3 {
            q.set(i, i, field.one());
        }
        let p = project_tensor(std::slice::from_ref(&term), &q).unwrap();
        assert_eq!(p.dims(), [3, 3, 3]);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let expect = term[0][i]
                        .mul(&term[1][j])
                        .unwrap()
                        .mul(&term[2][k])
                        .unwrap();
                    assert_eq!(p.get(i, j, k), &expect);
                }
            }
        }

        let mut single = Matrix::zeros(
            IndexSet::positional(1),
            IndexSet::positional(3),
            field.zero(),
        );
        for j in 0..3 {
            single.set(0, j, field.from_i64(j as i64 + 1));
        }
        let p1 = project_tensor(&[term], &single).unwrap();
        assert_eq!(p1.dims(), [1, 1, 1]);
        assert_eq!(p1.get(0, 0, 0).total_degree(), Some(3));
    }

    #[test]
    fn projection_never_gains_degrees_of_freedom() {
        let names: Vec<String> = ["u", "v", "w"]
            .iter()
            .flat_map(|s| (1..=3).map(move |i| format!("{s}{i}")))
            .collect();
        let catalog = VarCatalog::new(names).unwrap();
        let field = FieldSpec::Q;
        let var = |i: u32| MultiPoly::var(field, catalog.clone(), i).unwrap();
        let term = [
            (0..3).map(&var).collect::<Vec<_>>(),
            (0..3).map(|i| var(3 + i)).collect::<Vec<_>>(),
            (0..3).map(|i| var(6 + i)).collect::<Vec<_>>(),
        ];
        let axes = [
            IndexSet::positional(3),
            IndexSet::positional(3),
            IndexSet::positional(3),
        ];
        let full = Tensor3::from_fn(axes, MultiPoly::zero(field, catalog.clone()), |i, j, k| {
            term[0][i]
                .mul(&term[1][j])
                .unwrap()
                .mul(&term[2][k])
                .unwrap()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut q = Matrix::zeros(
            IndexSet::positional(2),
            IndexSet::positional(3),
            field.zero(),
        );
        for i in 0..2 {
            for j in 0..3 {
                q.set(i, j, field.random_scalar(&mut rng, 50));
            }
        }
        let projected = project_tensor(&[term], &q).unwrap();
        let dof_full = degrees_of_freedom(&full, &[], 3, 5).unwrap();
        let dof_proj = degrees_of_freedom(&projected, &[], 3, 5).unwrap();
        assert!(dof_full >= dof_proj, "{dof_full} < {dof_proj}");
    }

    fn independent_columns(n: usize, m: usize, field: FieldSpec) -> Vec<Vec<MultiPoly>> {
        let names: Vec<String> = (0..n * m).map(|i| format!("m{i}")).collect();
        let catalog = VarCatalog::new(names).unwrap();
        (0..m)
            .map(|j| {
                (0..n)
                    .map(|i| MultiPoly::var(field, catalog.clone(), (j * n + i) as u32).unwrap())
                    .collect()
            })
            .collect()
    }

    fn random_q(n: usize, d: usize, field: FieldSpec, seed: u64) -> Matrix<Scalar> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q = Matrix::zeros(
            IndexSet::positional(n - d),
            IndexSet::positional(n),
            field.zero(),
        );
        for i in 0..n - d {
            for j in 0..n {
                q.set(i, j, field.random_scalar(&mut rng, 50));
            }
        }
        q
    }

    #[test]
    fn independent_columns_all_certify() {
        let field = FieldSpec::Q;
        let columns = independent_columns(3, 4, field);
        let q = random_q(3, 1, field, 21);
        let report = weak_column_scan(&columns, &q, 1, Some(8), 3, 5).unwrap();
        assert_eq!(report.target, 2);
        assert_eq!(report.increments, vec![2, 2, 2, 2]);
        assert!(report.weak.is_empty());
        assert_eq!(report.certified, vec![0, 1, 2, 3]);
        assert_eq!(report.weak_limit, Some(8));
        assert_eq!(report.weak_within_limit, Some(true));
    }

    #[test]
    fn repeated_and_constant_columns_are_weak_over_q() {
        let field = FieldSpec::Q;
        let mut columns = independent_columns(3, 2, field);
        columns[1] = columns[0].clone();
        let catalog = columns[0][0].catalog().clone();
        columns.push(vec![
            MultiPoly::constant(
                field,
                catalog.clone(),
                field.from_i64(3)
            );
            3
        ]);
        let q = random_q(3, 1, field, 22);
        let report = weak_column_scan(&columns, &q, 1, None, 3, 5).unwrap();
        assert_eq!(report.statuses[0], ColumnStatus::CertifiedGeneric);
        assert_eq!(report.statuses[1], ColumnStatus::Weak);
        assert_eq!(report.statuses[2], ColumnStatus::Weak);
        assert_eq!(report.increments, vec![2, 0, 0]);
        assert_eq!(report.weak_limit, None);
    }

    #[test]
    fn short_columns_are_indeterminate_over_prime_fields() {
        let field = FieldSpec::fp(5).unwrap();
        let mut columns = independent_columns(3, 2, field);
        columns[1] = columns[0].clone();
        let q = random_q(3, 1, field, 23);
        let report = weak_column_scan(&columns, &q, 1, None, 2, 5).unwrap();
        assert_eq!(report.statuses[1], ColumnStatus::Indeterminate);
        assert!(report.weak.is_empty());
        assert_eq!(report.indeterminate, vec![1]);
    }

    #[test]
    fn fill_test_matches_the_cone_dimension_count() {
        // Four cone terms on the 3x3x3 format span only 26 of the 27
        // dimensions: the k = 4 locus is a hypersurface, so five terms are
        // needed to fill and the parameter-count ceiling of 27 is not met.
        for seed in [9u64, 77, 2026] {
            let four = lickteig_pipeline(3, 4, FieldSpec::Q, false, 5, seed).unwrap();
            assert_eq!(four.fill_target, 27);
            assert_eq!(four.initial_rank, 26);
            assert_eq!(four.full_rank, 26);
            assert!(four.deficient && !four.fills && four.transfer_ok);
        }

        let five = lickteig_pipeline(3, 5, FieldSpec::Q, false, 4, 9).unwrap();
        assert_eq!(five.fill_target, 27);
        assert_eq!(five.initial_rank, 27);
        assert_eq!(five.full_rank, 27);
        assert!(five.fills && !five.deficient && five.transfer_ok);

        let pair = lickteig_pipeline(2, 2, FieldSpec::Q, false, 4, 9).unwrap();
        assert_eq!(pair.full_rank, 8);
        assert!(pair.fills);

        let short = lickteig_pipeline(3, 3, FieldSpec::Q, false, 4, 9).unwrap();
        assert_eq!(short.fill_target, 21);
        assert_eq!(short.full_rank, 21);
        assert!(short.deficient && !short.fills);

        let tiny = lickteig_pipeline(2, 1, FieldSpec::Q, false, 4, 9).unwrap();
        assert_eq!(tiny.full_rank, 4);
        assert_eq!(tiny.fill_target, 4);
    }

    #[test]
    fn shifts_do_not_break_the_fill() {
        let corrected = lickteig_pipeline(3, 5, FieldSpec::Q, true, 4, 9).unwrap();
        assert!(corrected.corrected);
        assert_eq!(corrected.initial_rank, 27);
        assert_eq!(corrected.full_rank, 27);
        assert!(corrected.transfer_ok);

        let shifted_four = lickteig_pipeline(3, 4, FieldSpec::Q, true, 4, 9).unwrap();
        assert_eq!(shifted_four.initial_rank, 26);
        assert_eq!(shifted_four.full_rank, 26);
        assert!(shifted_four.transfer_ok);
    }

    #[test]
    fn threshold_bookkeeping_is_exact() {
        assert_eq!(dimension_threshold(100), -39230);
        assert_eq!(dimension_threshold(108), 0);
        assert!(dimension_threshold(109) > 0);
        assert_eq!(first_positive_threshold(200), Some(109));
        assert_eq!(first_positive_threshold(50), None);
    }

    #[test]
    fn threshold_check_reports_the_implied_bound() {
        let report = dof_threshold_check(1, 3, 5).unwrap();
        assert_eq!(report.r, 1);
        assert!(report.dof_lower >= 1);
        assert_eq!(
            report.implied_rank_bound,
            report.dof_lower.div_ceil(3 * report.n)
        );
        assert!(!report.threshold_positive);
        assert_eq!(report.first_positive_n, Some(109));
    }

    #[test]
    fn evaluation_commutes_with_entry_access() {
        let cat = InstanceCatalog::new(1, 2).unwrap();
        let field = FieldSpec::fp(7).unwrap();
        let t = build_generic_t(&cat, field).unwrap();
        let (assigned, point) = assign_random(&t, DEFAULT_EVAL_BOUND, 31).unwrap();
        for (i, j, k, e) in t.nonzero_entries() {
            assert_eq!(assigned.get(i, j, k), &e.evaluate(&point).unwrap());
        }
    }
}
