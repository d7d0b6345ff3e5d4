//! Exact linear algebra on labeled matrices.
//!
//! Matrices are dense and row-major, with both axes labeled by an
//! [`IndexSet`].  Numeric routines (rank, products, factorizations, span
//! membership) are provided for scalar entries; rank over Q goes through
//! fraction-free (Bareiss) elimination on integers after clearing row
//! denominators, rank over F_p through modular elimination.  A sparse
//! Gauss-Jordan solver backs the larger feasibility systems, where the
//! dense matrix would be mostly zeros.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::label::{IndexSet, Label};

/// A dense labeled matrix.  `E` is a storage type; arithmetic is only
/// defined for scalar entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<E> {
    rows: IndexSet,
    cols: IndexSet,
    data: Vec<E>,
    zero: E,
}

impl<E: Clone + PartialEq> Matrix<E> {
    pub fn zeros(rows: IndexSet, cols: IndexSet, zero: E) -> Self {
        let data = vec![zero.clone(); rows.len() * cols.len()];
        Matrix {
            rows,
            cols,
            data,
            zero,
        }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> E>(
        rows: IndexSet,
        cols: IndexSet,
        zero: E,
        mut f: F,
    ) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for r in 0..rows.len() {
            for c in 0..cols.len() {
                data.push(f(r, c));
            }
        }
        Matrix {
            rows,
            cols,
            data,
            zero,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn row_set(&self) -> &IndexSet {
        &self.rows
    }

    pub fn col_set(&self) -> &IndexSet {
        &self.cols
    }

    pub fn zero_entry(&self) -> &E {
        &self.zero
    }

    pub fn get(&self, r: usize, c: usize) -> &E {
        &self.data[r * self.cols.len() + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: E) {
        self.data[r * self.cols.len() + c] = v;
    }

    pub fn get_by_label(&self, r: &Label, c: &Label) -> Option<&E> {
        let ri = self.rows.position(r)?;
        let ci = self.cols.position(c)?;
        Some(self.get(ri, ci))
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.data.iter().all(|e| *e == self.zero)
    }

    /// Positions (row-major) of entries different from zero.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.nrows() {
            for c in 0..self.ncols() {
                if *self.get(r, c) != self.zero {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Re-places the entries into a larger label space; labels absent from
    /// the target stay zero there only if the entry is zero, otherwise the
    /// embedding fails.  Labels present keep their entries.
    pub fn embed(&self, rows: IndexSet, cols: IndexSet) -> Result<Matrix<E>> {
        let mut out = Matrix::zeros(rows, cols, self.zero.clone());
        for r in 0..self.nrows() {
            for c in 0..self.ncols() {
                let v = self.get(r, c);
                if *v == self.zero {
                    continue;
                }
                let ri = out.rows.position(self.rows.label(r)).ok_or_else(|| {
                    Error::ShapeMismatch(format!(
                        "row label {} with nonzero entry is absent from the embedding target",
                        self.rows.label(r)
                    ))
                })?;
                let ci = out.cols.position(self.cols.label(c)).ok_or_else(|| {
                    Error::ShapeMismatch(format!(
                        "column label {} with nonzero entry is absent from the embedding target",
                        self.cols.label(c)
                    ))
                })?;
                out.set(ri, ci, v.clone());
            }
        }
        Ok(out)
    }

    /// Relabels both axes with a label transformation.
    pub fn map_labels<F: Fn(&Label) -> Result<Label>>(&self, f: F) -> Result<Matrix<E>> {
        Ok(Matrix {
            rows: self.rows.map(&f)?,
            cols: self.cols.map(&f)?,
            data: self.data.clone(),
            zero: self.zero.clone(),
        })
    }
}

impl Matrix<Scalar> {
    pub fn field(&self) -> FieldSpec {
        self.zero.field()
    }

    pub fn identity(set: IndexSet, field: FieldSpec) -> Self {
        let n = set.len();
        let mut m = Matrix::zeros(set.clone(), set, field.zero());
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn ensure_field(&self, field: FieldSpec) -> Result<()> {
        if self.field() != field {
            return Err(Error::FieldMismatch {
                expected: field.to_string(),
                found: self.field().to_string(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Matrix<Scalar>) -> Result<Matrix<Scalar>> {
        other.ensure_field(self.field())?;
        if self.ncols() != other.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "product of {}x{} by {}x{}",
                self.nrows(),
                self.ncols(),
                other.nrows(),
                other.ncols()
            )));
        }
        let field = self.field();
        let mut out = Matrix::zeros(self.rows.clone(), other.cols.clone(), field.zero());
        for r in 0..self.nrows() {
            for k in 0..self.ncols() {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.ncols() {
                    let b = other.get(k, c);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(r, c).add(&a.mul(b));
                    out.set(r, c, cur);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix<Scalar>) -> Result<Matrix<Scalar>> {
        other.ensure_field(self.field())?;
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::ShapeMismatch("matrix addition shapes differ".into()));
        }
        let mut out = self.clone();
        for i in 0..out.data.len() {
            out.data[i] = out.data[i].add(&other.data[i]);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Scalar) -> Matrix<Scalar> {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = v.mul(c);
        }
        out
    }

    pub fn transpose(&self) -> Matrix<Scalar> {
        Matrix::from_fn(
            self.cols.clone(),
            self.rows.clone(),
            self.zero.clone(),
            |r, c| self.get(c, r).clone(),
        )
    }

    /// Exact rank.
    pub fn rank(&self) -> usize {
        match self.field() {
            FieldSpec::Fp(p) => {
                let rows: Vec<Vec<u64>> = (0..self.nrows())
                    .map(|r| {
                        (0..self.ncols())
                            .map(|c| match self.get(r, c) {
                                Scalar::Fp { val, .. } => *val,
                                _ => unreachable!(),
                            })
                            .collect()
                    })
                    .collect();
                rank_mod_p(rows, p)
            }
            FieldSpec::Q => {
                let rows: Vec<Vec<BigInt>> = (0..self.nrows())
                    .map(|r| {
                        clear_denominators(
                            (0..self.ncols())
                                .map(|c| match self.get(r, c) {
                                    Scalar::Rat(x) => x.clone(),
                                    _ => unreachable!(),
                                })
                                .collect(),
                        )
                    })
                    .collect();
                rank_bareiss(rows)
            }
        }
    }

    pub fn is_invertible(&self) -> bool {
        self.nrows() == self.ncols() && self.rank() == self.nrows()
    }

    /// Full-pivot factorization `self = P * D * Q` where `D` is zero except
    /// for ones at `(t, t)` for `t < rank`, and `P`, `Q` are invertible.
    /// Returns `(P, rank, Q)`.
    pub fn full_pivot_factor(&self) -> Result<(Matrix<Scalar>, usize, Matrix<Scalar>)> {
        let field = self.field();
        let mut m = self.clone();
        let mut p = Matrix::identity(self.rows.clone(), field);
        let mut q = Matrix::identity(self.cols.clone(), field);
        let (nr, nc) = (m.nrows(), m.ncols());
        let mut rank = 0usize;
        for t in 0..nr.min(nc) {
            // First nonzero entry of the untouched block, row-major.
            let mut pivot = None;
            'scan: for r in t..nr {
                for c in t..nc {
                    if !m.get(r, c).is_zero() {
                        pivot = Some((r, c));
                        break 'scan;
                    }
                }
            }
            let Some((pr, pc)) = pivot else { break };
            rank = t + 1;
            if pr != t {
                m.swap_rows(pr, t);
                p.swap_cols(pr, t);
            }
            if pc != t {
                m.swap_cols(pc, t);
                q.swap_rows(pc, t);
            }
            let piv = m.get(t, t).clone();
            let piv_inv = piv.inv().expect("pivot is nonzero");
            m.scale_row(t, &piv_inv);
            p.scale_col(t, &piv);
            for r in 0..nr {
                if r == t {
                    continue;
                }
                let f = m.get(r, t).clone();
                if f.is_zero() {
                    continue;
                }
                m.add_scaled_row(t, r, &f.neg());
                // Inverse update: column t of P gains f * column r.
                p.add_scaled_col(r, t, &f);
            }
            for c in 0..nc {
                if c == t {
                    continue;
                }
                let f = m.get(t, c).clone();
                if f.is_zero() {
                    continue;
                }
                m.add_scaled_col(t, c, &f.neg());
                q.add_scaled_row(c, t, &f);
            }
        }
        Ok((p, rank, q))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.ncols() {
            let (x, y) = (self.get(a, c).clone(), self.get(b, c).clone());
            self.set(a, c, y);
            self.set(b, c, x);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for r in 0..self.nrows() {
            let (x, y) = (self.get(r, a).clone(), self.get(r, b).clone());
            self.set(r, a, y);
            self.set(r, b, x);
        }
    }

    fn scale_row(&mut self, r: usize, c: &Scalar) {
        for j in 0..self.ncols() {
            let v = self.get(r, j).mul(c);
            self.set(r, j, v);
        }
    }

    fn scale_col(&mut self, col: usize, c: &Scalar) {
        for i in 0..self.nrows() {
            let v = self.get(i, col).mul(c);
            self.set(i, col, v);
        }
    }

    /// row[dst] += c * row[src]
    fn add_scaled_row(&mut self, src: usize, dst: usize, c: &Scalar) {
        for j in 0..self.ncols() {
            let v = self.get(dst, j).add(&self.get(src, j).mul(c));
            self.set(dst, j, v);
        }
    }

    /// col[dst] += c * col[src]
    fn add_scaled_col(&mut self, src: usize, dst: usize, c: &Scalar) {
        for i in 0..self.nrows() {
            let v = self.get(i, dst).add(&self.get(i, src).mul(c));
            self.set(i, dst, v);
        }
    }

    /// Flattens row-major into a coefficient vector.
    pub fn flatten(&self) -> Vec<Scalar> {
        self.data.clone()
    }
}

/// The block matrix acting as `p` on the base index and as the identity on
/// the copy set: entry `((s,i),(s',j)) = [s = s'] * p[i,j]`, with the same
/// copy-major label layout as [`IndexSet::product`].
pub fn kron_with_identity<S: AsRef<str>>(
    p: &Matrix<Scalar>,
    copies: &[S],
) -> Result<Matrix<Scalar>> {
    let rows = p.row_set().product(copies)?;
    let cols = p.col_set().product(copies)?;
    let (nr, nc) = (p.nrows(), p.ncols());
    let mut out = Matrix::zeros(rows, cols, p.zero_entry().clone());
    for (b, _) in copies.iter().enumerate() {
        for i in 0..nr {
            for j in 0..nc {
                let v = p.get(i, j);
                if !v.is_zero() {
                    out.set(b * nr + i, b * nc + j, v.clone());
                }
            }
        }
    }
    Ok(out)
}

fn rank_mod_p(mut rows: Vec<Vec<u64>>, p: u64) -> usize {
    let nr = rows.len();
    if nr == 0 {
        return 0;
    }
    let nc = rows[0].len();
    let mut rank = 0;
    for c in 0..nc {
        let Some(pivot) = (rank..nr).find(|&r| !rows[r][c].is_multiple_of(p)) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = mod_inv(rows[rank][c], p);
        for j in c..nc {
            rows[rank][j] = mulp(rows[rank][j], inv, p);
        }
        for r in 0..nr {
            if r != rank && rows[r][c] != 0 {
                let f = rows[r][c];
                for j in c..nc {
                    let sub = mulp(f, rows[rank][j], p);
                    rows[r][j] = (rows[r][j] + p - sub) % p;
                }
            }
        }
        rank += 1;
        if rank == nr {
            break;
        }
    }
    rank
}

fn mulp(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn mod_inv(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (a as i128, p as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    s0.rem_euclid(p as i128) as u64
}

fn clear_denominators(row: Vec<BigRational>) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in &row {
        lcm = lcm.lcm(x.denom());
    }
    row.into_iter()
        .map(|x| {
            let scaled = x * BigRational::from_integer(lcm.clone());
            debug_assert!(scaled.denom().is_one());
            scaled.numer().clone()
        })
        .collect()
}

/// Rank of an integer matrix by Bareiss fraction-free elimination.
pub(crate) fn rank_bareiss(mut rows: Vec<Vec<BigInt>>) -> usize {
    let nr = rows.len();
    if nr == 0 {
        return 0;
    }
    let nc = rows[0].len();
    let mut prev = BigInt::one();
    let mut rank = 0usize;
    let mut col = 0usize;
    while rank < nr && col < nc {
        let Some(pivot) = (rank..nr).find(|&r| !rows[r][col].is_zero()) else {
            col += 1;
            continue;
        };
        rows.swap(rank, pivot);
        let piv = rows[rank][col].clone();
        for r in rank + 1..nr {
            for c in col + 1..nc {
                let num = &piv * &rows[r][c] - &rows[r][col] * &rows[rank][c];
                rows[r][c] = num / &prev;
            }
            rows[r][col] = BigInt::zero();
        }
        prev = piv;
        rank += 1;
        col += 1;
    }
    rank
}

/// The linear span of a set of equally-shaped scalar matrices, with a
/// reduced echelon basis cached for dimension and membership queries.
#[derive(Clone, Debug)]
pub struct MatrixSpan {
    rows: IndexSet,
    cols: IndexSet,
    field: FieldSpec,
    generators: Vec<Matrix<Scalar>>,
    /// Echelonized flattened generators: (pivot position, coefficients).
    echelon: Vec<(usize, Vec<Scalar>)>,
}

impl MatrixSpan {
    pub fn empty(rows: IndexSet, cols: IndexSet, field: FieldSpec) -> Self {
        MatrixSpan {
            rows,
            cols,
            field,
            generators: Vec::new(),
            echelon: Vec::new(),
        }
    }

    pub fn from_generators(
        rows: IndexSet,
        cols: IndexSet,
        field: FieldSpec,
        generators: Vec<Matrix<Scalar>>,
    ) -> Result<Self> {
        let mut span = MatrixSpan::empty(rows, cols, field);
        for g in generators {
            span.push_generator(g)?;
        }
        Ok(span)
    }

    fn check_shape(&self, m: &Matrix<Scalar>) -> Result<()> {
        m.ensure_field(self.field)?;
        if *m.row_set() != self.rows || *m.col_set() != self.cols {
            return Err(Error::ShapeMismatch(
                "matrix labels differ from the span's label sets".into(),
            ));
        }
        Ok(())
    }

    /// Adds a generator (kept even if dependent; the echelon cache only
    /// grows when it is independent).
    pub fn push_generator(&mut self, m: Matrix<Scalar>) -> Result<()> {
        self.check_shape(&m)?;
        let mut v = m.flatten();
        reduce_against(&mut v, &self.echelon);
        if let Some(pivot) = v.iter().position(|x| !x.is_zero()) {
            let inv = v[pivot].inv().expect("pivot nonzero");
            for x in &mut v {
                *x = x.mul(&inv);
            }
            self.echelon.push((pivot, v));
            self.echelon.sort_by_key(|(p, _)| *p);
        }
        self.generators.push(m);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.echelon.len()
    }

    pub fn generators(&self) -> &[Matrix<Scalar>] {
        &self.generators
    }

    pub fn row_set(&self) -> &IndexSet {
        &self.rows
    }

    pub fn col_set(&self) -> &IndexSet {
        &self.cols
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn contains(&self, m: &Matrix<Scalar>) -> Result<bool> {
        self.check_shape(m)?;
        let mut v = m.flatten();
        reduce_against(&mut v, &self.echelon);
        Ok(v.iter().all(Scalar::is_zero))
    }

    /// A basis of independent generators (first independent ones win).
    pub fn reduced_basis(&self) -> Vec<Matrix<Scalar>> {
        let mut probe: Vec<(usize, Vec<Scalar>)> = Vec::new();
        let mut basis = Vec::new();
        for g in &self.generators {
            let mut v = g.flatten();
            reduce_against(&mut v, &probe);
            if let Some(pivot) = v.iter().position(|x| !x.is_zero()) {
                let inv = v[pivot].inv().expect("pivot nonzero");
                for x in &mut v {
                    *x = x.mul(&inv);
                }
                probe.push((pivot, v));
                probe.sort_by_key(|(p, _)| *p);
                basis.push(g.clone());
            }
        }
        basis
    }
}

fn reduce_against(v: &mut [Scalar], echelon: &[(usize, Vec<Scalar>)]) {
    for (pivot, row) in echelon {
        let f = v[*pivot].clone();
        if f.is_zero() {
            continue;
        }
        for (x, r) in v.iter_mut().zip(row.iter()) {
            *x = x.sub(&f.mul(r));
        }
    }
}

/// A sparse vector keyed by a dense coordinate index.
pub type SparseVec = BTreeMap<usize, Scalar>;

/// Solves `sum_c x_c * columns[c] = rhs` exactly.  Returns `None` when the
/// system is infeasible; free variables are set to zero.
pub fn sparse_solve(
    columns: &[SparseVec],
    rhs: &SparseVec,
    field: FieldSpec,
) -> Option<Vec<Scalar>> {
    // Row-oriented Gauss-Jordan: rows indexed by the coordinates that occur.
    let mut coords: Vec<usize> = rhs.keys().copied().collect();
    for col in columns {
        coords.extend(col.keys().copied());
    }
    coords.sort_unstable();
    coords.dedup();
    let coord_pos: BTreeMap<usize, usize> =
        coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let nrows = coords.len();
    let mut rows: Vec<BTreeMap<usize, Scalar>> = vec![BTreeMap::new(); nrows];
    let mut rhs_vals: Vec<Scalar> = vec![field.zero(); nrows];
    for (c, col) in columns.iter().enumerate() {
        for (&coord, v) in col {
            if !v.is_zero() {
                rows[coord_pos[&coord]].insert(c, v.clone());
            }
        }
    }
    for (&coord, v) in rhs {
        rhs_vals[coord_pos[&coord]] = v.clone();
    }

    let ncols = columns.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; ncols];
    let mut used_row = vec![false; nrows];
    for c in 0..ncols {
        let Some(pr) = (0..nrows)
            .find(|&r| !used_row[r] && rows[r].get(&c).map(|v| !v.is_zero()).unwrap_or(false))
        else {
            continue;
        };
        used_row[pr] = true;
        pivot_of_col[c] = Some(pr);
        let inv = rows[pr][&c].inv().expect("pivot nonzero");
        let prow: Vec<(usize, Scalar)> = rows[pr].iter().map(|(&k, v)| (k, v.mul(&inv))).collect();
        rows[pr] = prow.iter().cloned().collect();
        rhs_vals[pr] = rhs_vals[pr].mul(&inv);
        let prhs = rhs_vals[pr].clone();
        for r in 0..nrows {
            if r == pr {
                continue;
            }
            let Some(f) = rows[r].get(&c).cloned() else {
                continue;
            };
            if f.is_zero() {
                rows[r].remove(&c);
                continue;
            }
            for (k, v) in &prow {
                let cur = rows[r].get(k).cloned().unwrap_or_else(|| field.zero());
                let nv = cur.sub(&f.mul(v));
                if nv.is_zero() {
                    rows[r].remove(k);
                } else {
                    rows[r].insert(*k, nv);
                }
            }
            rhs_vals[r] = rhs_vals[r].sub(&f.mul(&prhs));
        }
    }

    // Any untouched row with empty coefficients but nonzero rhs: infeasible.
    for r in 0..nrows {
        if rows[r].is_empty() && !rhs_vals[r].is_zero() {
            return None;
        }
    }
    let mut x = vec![field.zero(); ncols];
    for c in 0..ncols {
        if let Some(r) = pivot_of_col[c] {
            x[c] = rhs_vals[r].clone();
        }
    }
    Some(x)
}
