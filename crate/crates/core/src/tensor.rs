//! Labeled order-3 tensors over an exact entry type.
//!
//! A tensor is a dense array indexed by three [`IndexSet`] axes.  Entries
//! are either scalars or polynomials; the structural operations (slicing,
//! tagged direct sums, cloning along a copy set, slice adjunction, axis
//! permutation) are entry-agnostic.
//!
//! Two tensors are *equivalent* when they agree after restriction to their
//! supports, position by position; this is the "up to zero rows and
//! columns" identification used throughout, and it is what allows a matrix
//! or tensor to be re-placed inside larger axes without changing any
//! rank-like quantity.
//!
//! The *clone* along a copy set puts the same entry at every combination
//! of copy coordinates (content times an all-ones pattern), so cloning
//! preserves rank.  *Adjoining* matrices as slices appends one fresh label
//! per matrix on the chosen axis.  The slice-space quotient is realized by
//! [`Tensor3::apply_mod`], which shifts a tensor by correction tensors
//! whose slices are confined to prescribed spans.

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::label::{IndexSet, Label};
use crate::linalg::{Matrix, MatrixSpan};
use crate::poly::MultiPoly;

/// Storage contract for tensor entries.  Arithmetic panics on incompatible
/// operands; every public tensor operation validates compatibility first
/// via [`TensorEntry::compatible`].
pub trait TensorEntry: Clone + PartialEq + std::fmt::Debug {
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Same field (and, for polynomials, same catalog).
    fn compatible(&self, other: &Self) -> bool;
}

impl TensorEntry for Scalar {
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        Scalar::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        Scalar::sub(self, other)
    }
    fn neg(&self) -> Self {
        Scalar::neg(self)
    }
    fn compatible(&self, other: &Self) -> bool {
        self.field() == other.field()
    }
}

impl TensorEntry for MultiPoly {
    fn is_zero(&self) -> bool {
        MultiPoly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        MultiPoly::add(self, other).expect("compatibility validated by caller")
    }
    fn sub(&self, other: &Self) -> Self {
        MultiPoly::sub(self, other).expect("compatibility validated by caller")
    }
    fn neg(&self) -> Self {
        MultiPoly::neg(self)
    }
    fn compatible(&self, other: &Self) -> bool {
        self.ensure_compatible(other).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<E> {
    axes: [IndexSet; 3],
    data: Vec<E>,
    zero: E,
}

impl<E: TensorEntry> Tensor3<E> {
    pub fn zeros(axes: [IndexSet; 3], zero: E) -> Self {
        let n = axes[0].len() * axes[1].len() * axes[2].len();
        Tensor3 {
            axes,
            data: vec![zero.clone(); n],
            zero,
        }
    }

    pub fn from_fn<F: FnMut(usize, usize, usize) -> E>(
        axes: [IndexSet; 3],
        zero: E,
        mut f: F,
    ) -> Self {
        let (ni, nj, nk) = (axes[0].len(), axes[1].len(), axes[2].len());
        let mut data = Vec::with_capacity(ni * nj * nk);
        for i in 0..ni {
            for j in 0..nj {
                for k in 0..nk {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { axes, data, zero }
    }

    /// The labels of one axis (axes are numbered 1, 2, 3).
    pub fn axis(&self, axis: usize) -> &IndexSet {
        assert!((1..=3).contains(&axis), "axes are numbered 1, 2, 3");
        &self.axes[axis - 1]
    }

    pub fn axes(&self) -> &[IndexSet; 3] {
        &self.axes
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.axes[0].len(), self.axes[1].len(), self.axes[2].len()]
    }

    pub fn zero_entry(&self) -> &E {
        &self.zero
    }

    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.axes[1].len() + j) * self.axes[2].len() + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &E {
        &self.data[self.offset(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: E) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    pub fn get_by_labels(&self, i: &Label, j: &Label, k: &Label) -> Result<&E> {
        let pos = |axis: usize, l: &Label| {
            self.axes[axis]
                .position(l)
                .ok_or_else(|| Error::UnknownLabel {
                    axis: axis + 1,
                    label: l.to_string(),
                })
        };
        Ok(self.get(pos(0, i)?, pos(1, j)?, pos(2, k)?))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    pub fn nonzero_entries(&self) -> Vec<(usize, usize, usize, &E)> {
        let mut out = Vec::new();
        for i in 0..self.axes[0].len() {
            for j in 0..self.axes[1].len() {
                for k in 0..self.axes[2].len() {
                    let e = self.get(i, j, k);
                    if !e.is_zero() {
                        out.push((i, j, k, e));
                    }
                }
            }
        }
        out
    }

    fn ensure_entry_compatible(&self, other: &Tensor3<E>) -> Result<()> {
        if !self.zero.compatible(&other.zero) {
            return Err(Error::ShapeMismatch(
                "tensor entry types are incompatible (field or catalog differ)".into(),
            ));
        }
        Ok(())
    }

    fn ensure_same_axes(&self, other: &Tensor3<E>) -> Result<()> {
        self.ensure_entry_compatible(other)?;
        if self.axes != other.axes {
            return Err(Error::ShapeMismatch(
                "tensors are indexed by different axis label sets".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor3<E>) -> Result<Tensor3<E>> {
        self.ensure_same_axes(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a = a.add(b);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Tensor3<E>) -> Result<Tensor3<E>> {
        self.ensure_same_axes(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a = a.sub(b);
        }
        Ok(out)
    }

    /// The slice of the tensor at a fixed label on one axis (axes are
    /// numbered 1, 2, 3).  A 1-slice is a (J x K) matrix, a 2-slice
    /// (I x K), a 3-slice (I x J).
    pub fn slice(&self, axis: usize, at: &Label) -> Result<Matrix<E>> {
        let ax = axis_index(axis)?;
        let pos = self.axes[ax]
            .position(at)
            .ok_or_else(|| Error::UnknownLabel {
                axis,
                label: at.to_string(),
            })?;
        self.slice_at(axis, pos)
    }

    /// Slice by position instead of label.
    pub fn slice_at(&self, axis: usize, pos: usize) -> Result<Matrix<E>> {
        let ax = axis_index(axis)?;
        let (ra, ca) = match ax {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let rows = self.axes[ra].clone();
        let cols = self.axes[ca].clone();
        Ok(Matrix::from_fn(rows, cols, self.zero.clone(), |r, c| {
            let idx = match ax {
                0 => (pos, r, c),
                1 => (r, pos, c),
                _ => (r, c, pos),
            };
            self.get(idx.0, idx.1, idx.2).clone()
        }))
    }

    pub fn slices(&self, axis: usize) -> Result<Vec<Matrix<E>>> {
        let ax = axis_index(axis)?;
        (0..self.axes[ax].len())
            .map(|p| self.slice_at(axis, p))
            .collect()
    }

    /// Positions, per axis, that meet at least one nonzero entry.
    pub fn support(&self) -> [Vec<usize>; 3] {
        let mut sup = [
            vec![false; self.axes[0].len()],
            vec![false; self.axes[1].len()],
            vec![false; self.axes[2].len()],
        ];
        for (i, j, k, _) in self.nonzero_entries() {
            sup[0][i] = true;
            sup[1][j] = true;
            sup[2][k] = true;
        }
        sup.map(|flags| {
            flags
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect()
        })
    }

    /// The tensor restricted to its support, original label order kept.
    pub fn restrict_to_support(&self) -> Tensor3<E> {
        let sup = self.support();
        let axes = [
            self.axes[0]
                .select(&sup[0])
                .expect("subset of distinct labels"),
            self.axes[1]
                .select(&sup[1])
                .expect("subset of distinct labels"),
            self.axes[2]
                .select(&sup[2])
                .expect("subset of distinct labels"),
        ];
        Tensor3::from_fn(axes, self.zero.clone(), |i, j, k| {
            self.get(sup[0][i], sup[1][j], sup[2][k]).clone()
        })
    }

    /// True when both tensors agree after restriction to their supports,
    /// compared position by position in axis order.
    pub fn equivalent(&self, other: &Tensor3<E>) -> bool {
        if !self.zero.compatible(&other.zero) {
            return false;
        }
        let a = self.restrict_to_support();
        let b = other.restrict_to_support();
        a.dims() == b.dims() && a.data == b.data
    }

    /// Wraps every label of every axis in a block tag.
    pub fn retag(&self, tag: &str) -> Result<Tensor3<E>> {
        let axes = [
            self.axes[0].tagged(tag)?,
            self.axes[1].tagged(tag)?,
            self.axes[2].tagged(tag)?,
        ];
        Ok(Tensor3 {
            axes,
            data: self.data.clone(),
            zero: self.zero.clone(),
        })
    }

    /// Applies a label transformation to every axis.
    pub fn relabel<F: Fn(&Label) -> Result<Label>>(&self, f: F) -> Result<Tensor3<E>> {
        let axes = [
            self.axes[0].map(&f)?,
            self.axes[1].map(&f)?,
            self.axes[2].map(&f)?,
        ];
        Ok(Tensor3 {
            axes,
            data: self.data.clone(),
            zero: self.zero.clone(),
        })
    }

    /// Block-diagonal direct sum.  The label sets of matching axes must be
    /// disjoint (tag the operands first when they are not).
    pub fn direct_sum(&self, other: &Tensor3<E>) -> Result<Tensor3<E>> {
        self.ensure_entry_compatible(other)?;
        let axes = [
            self.axes[0].union(&other.axes[0])?,
            self.axes[1].union(&other.axes[1])?,
            self.axes[2].union(&other.axes[2])?,
        ];
        let (n1, m1, l1) = (self.axes[0].len(), self.axes[1].len(), self.axes[2].len());
        Ok(Tensor3::from_fn(axes, self.zero.clone(), |i, j, k| {
            let first = i < n1 && j < m1 && k < l1;
            let second = i >= n1 && j >= m1 && k >= l1;
            if first {
                self.get(i, j, k).clone()
            } else if second {
                other.get(i - n1, j - m1, k - l1).clone()
            } else {
                self.zero.clone()
            }
        }))
    }

    /// The clone along a finite copy set: every combination of copy
    /// coordinates carries the same entry, `T'((s1,i),(s2,j),(s3,k)) =
    /// T(i,j,k)`.
    pub fn clone_along<S: AsRef<str>>(&self, copies: &[S]) -> Result<Tensor3<E>> {
        if copies.is_empty() {
            return Err(Error::InvalidParams("empty copy set for clone".into()));
        }
        let axes = [
            self.axes[0].product(copies)?,
            self.axes[1].product(copies)?,
            self.axes[2].product(copies)?,
        ];
        let (ni, nj, nk) = (self.axes[0].len(), self.axes[1].len(), self.axes[2].len());
        Ok(Tensor3::from_fn(axes, self.zero.clone(), |i, j, k| {
            self.get(i % ni, j % nj, k % nk).clone()
        }))
    }

    /// Adjoins matrices as fresh slices.  `mats[a]` is adjoined on axis
    /// `a+1`: each matrix becomes the slice at a fresh label appended to
    /// that axis.  A matrix adjoined on axis 1 must have rows labeled
    /// inside axis 2 and columns inside axis 3; on axis 2, rows in axis 1
    /// and columns in axis 3; on axis 3, rows in axis 1 and columns in
    /// axis 2.  Smaller matrices are placed on their own support
    /// (zero-padding semantics).  Returns the enlarged tensor and the
    /// fresh labels per axis.
    pub fn adjoin_slices(&self, mats: [&[Matrix<E>]; 3]) -> Result<(Tensor3<E>, [Vec<Label>; 3])> {
        let mut new_labels: [Vec<Label>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut axes = self.axes.clone();
        for a in 0..3 {
            let labels = fresh_adjoin_labels(&axes[a], a + 1, mats[a].len())?;
            axes[a] = axes[a].extend(&labels)?;
            new_labels[a] = labels;
        }
        let mut out = Tensor3::zeros(axes, self.zero.clone());
        // Original block.
        for (i, j, k, e) in self.nonzero_entries() {
            out.set(i, j, k, e.clone());
        }
        for a in 0..3 {
            let (row_axis, col_axis) = match a {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            for (m_idx, m) in mats[a].iter().enumerate() {
                if !m.zero_entry().compatible(&self.zero) {
                    return Err(Error::ShapeMismatch(
                        "adjoined matrix entries are incompatible with the tensor".into(),
                    ));
                }
                let slice_pos = out.axes[a]
                    .position(&new_labels[a][m_idx])
                    .expect("fresh label was appended");
                for (r, c) in m.support() {
                    let rl = m.row_set().label(r);
                    let cl = m.col_set().label(c);
                    let rp = out.axes[row_axis].position(rl).ok_or_else(|| {
                        Error::ShapeMismatch(format!(
                            "adjoined matrix row label {rl} is not on tensor axis {}",
                            row_axis + 1
                        ))
                    })?;
                    let cp = out.axes[col_axis].position(cl).ok_or_else(|| {
                        Error::ShapeMismatch(format!(
                            "adjoined matrix column label {cl} is not on tensor axis {}",
                            col_axis + 1
                        ))
                    })?;
                    let idx = match a {
                        0 => (slice_pos, rp, cp),
                        1 => (rp, slice_pos, cp),
                        _ => (rp, cp, slice_pos),
                    };
                    out.set(idx.0, idx.1, idx.2, m.get(r, c).clone());
                }
            }
        }
        Ok((out, new_labels))
    }

    pub fn permute_axes(&self, perm: [usize; 3]) -> Result<Tensor3<E>> {
        let mut seen = [false; 3];
        for &p in &perm {
            if !(1..=3).contains(&p) || seen[p - 1] {
                return Err(Error::InvalidParams(format!(
                    "axis permutation {perm:?} is not a permutation of 1..3"
                )));
            }
            seen[p - 1] = true;
        }
        let src = [perm[0] - 1, perm[1] - 1, perm[2] - 1];
        let axes = [
            self.axes[src[0]].clone(),
            self.axes[src[1]].clone(),
            self.axes[src[2]].clone(),
        ];
        Ok(Tensor3::from_fn(axes, self.zero.clone(), |i, j, k| {
            let mut idx = [0usize; 3];
            idx[src[0]] = i;
            idx[src[1]] = j;
            idx[src[2]] = k;
            self.get(idx[0], idx[1], idx[2]).clone()
        }))
    }
}

impl Tensor3<Scalar> {
    pub fn field(&self) -> FieldSpec {
        self.zero.field()
    }

    pub fn zeros_scalar(axes: [IndexSet; 3], field: FieldSpec) -> Self {
        Tensor3::zeros(axes, field.zero())
    }

    /// Shifts the tensor inside its slice-space quotient class: returns
    /// `T + A + B + C` after verifying that every 1-slice of `A` lies in
    /// `spans[0]`, every 2-slice of `B` in `spans[1]`, and every 3-slice
    /// of `C` in `spans[2]`.
    pub fn apply_mod(
        &self,
        a: &Tensor3<Scalar>,
        b: &Tensor3<Scalar>,
        c: &Tensor3<Scalar>,
        spans: [&MatrixSpan; 3],
    ) -> Result<Tensor3<Scalar>> {
        for (axis, (t, span)) in [(a, spans[0]), (b, spans[1]), (c, spans[2])]
            .into_iter()
            .enumerate()
        {
            self.ensure_same_axes(t)?;
            for (pos, slice) in t.slices(axis + 1)?.into_iter().enumerate() {
                if !span.contains(&slice)? {
                    return Err(Error::SpanMembership(format!(
                        "correction slice {} on axis {} leaves its span",
                        t.axes[axis].label(pos),
                        axis + 1
                    )));
                }
            }
        }
        self.add(a)?.add(b)?.add(c)
    }

    /// Multiplies along one axis by a matrix whose columns are labeled by
    /// that axis: for axis 1, `T'(i',j,k) = sum_i m[i',i] T(i,j,k)`.
    pub fn mode_multiply(&self, axis: usize, m: &Matrix<Scalar>) -> Result<Tensor3<Scalar>> {
        let ax = axis_index(axis)?;
        m.ensure_field(self.field())?;
        if m.col_set() != &self.axes[ax] {
            return Err(Error::ShapeMismatch(format!(
                "mode product needs matrix columns labeled by axis {axis}"
            )));
        }
        let mut axes = self.axes.clone();
        axes[ax] = m.row_set().clone();
        let field = self.field();
        Ok(Tensor3::from_fn(axes, field.zero(), |i, j, k| {
            let out_pos = [i, j, k][ax];
            let mut acc = field.zero();
            for s in 0..self.axes[ax].len() {
                let w = m.get(out_pos, s);
                if w.is_zero() {
                    continue;
                }
                let mut idx = [i, j, k];
                idx[ax] = s;
                acc = acc.add(&w.mul(self.get(idx[0], idx[1], idx[2])));
            }
            acc
        }))
    }
}

fn axis_index(axis: usize) -> Result<usize> {
    if (1..=3).contains(&axis) {
        Ok(axis - 1)
    } else {
        Err(Error::AxisOutOfRange(axis))
    }
}

fn fresh_adjoin_labels(existing: &IndexSet, axis: usize, count: usize) -> Result<Vec<Label>> {
    let mut out = Vec::with_capacity(count);
    let mut n = 0usize;
    let mut taken: std::collections::HashSet<Label> = existing.iter().cloned().collect();
    while out.len() < count {
        let candidate = Label::atom(format!("adj{axis}_{n}"))?;
        n += 1;
        if taken.insert(candidate.clone()) {
            out.push(candidate);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> FieldSpec {
        FieldSpec::fp(2).unwrap()
    }

    fn small(vals: [[[i64; 2]; 2]; 2], field: FieldSpec) -> Tensor3<Scalar> {
        Tensor3::from_fn(
            [
                IndexSet::positional(2),
                IndexSet::positional(2),
                IndexSet::positional(2),
            ],
            field.zero(),
            |i, j, k| field.from_i64(vals[i][j][k]),
        )
    }

    #[test]
    fn slices_recover_entries() {
        let t = small([[[1, 0], [0, 1]], [[0, 1], [1, 0]]], f2());
        let s = t.slice(1, &Label::parse("0").unwrap()).unwrap();
        assert_eq!(*s.get(0, 0), f2().one());
        assert_eq!(*s.get(0, 1), f2().zero());
        let s3 = t.slice(3, &Label::parse("1").unwrap()).unwrap();
        assert_eq!(*s3.get(0, 1), f2().one());
        assert!(t.slice(1, &Label::parse("9").unwrap()).is_err());
        assert!(t.slice(4, &Label::parse("0").unwrap()).is_err());
    }

    #[test]
    fn support_and_equivalence_ignore_zero_padding() {
        let f = f2();
        let mut big = Tensor3::zeros_scalar(
            [
                IndexSet::positional(3),
                IndexSet::positional(3),
                IndexSet::positional(3),
            ],
            f,
        );
        big.set(1, 2, 0, f.one());
        let mut tiny = Tensor3::zeros_scalar(
            [
                IndexSet::from_atoms(&["a"]).unwrap(),
                IndexSet::from_atoms(&["b"]).unwrap(),
                IndexSet::from_atoms(&["c"]).unwrap(),
            ],
            f,
        );
        tiny.set(0, 0, 0, f.one());
        assert!(big.equivalent(&tiny));
        assert!(tiny.equivalent(&big));
        tiny.set(0, 0, 0, f.zero());
        assert!(!big.equivalent(&tiny));
    }

    #[test]
    fn direct_sum_blocks_are_addressable() {
        let t1 = small([[[1, 0], [0, 0]], [[0, 0], [0, 1]]], f2())
            .retag("1")
            .unwrap();
        let t2 = small([[[0, 1], [0, 0]], [[1, 0], [0, 0]]], f2())
            .retag("2")
            .unwrap();
        let s = t1.direct_sum(&t2).unwrap();
        assert_eq!(s.dims(), [4, 4, 4]);
        let one_slice = s.slice(1, &Label::parse("1:0").unwrap()).unwrap();
        // T1's slice sits in the (J1, K1) block, zero elsewhere.
        assert_eq!(*one_slice.get(0, 0), f2().one());
        assert!(one_slice.get(2, 2).is_zero());
        assert!(one_slice.get(0, 2).is_zero());
        // Without tags the union collides.
        let t3 = small([[[1, 0], [0, 0]], [[0, 0], [0, 1]]], f2());
        assert!(t3.direct_sum(&t3).is_err());
    }

    #[test]
    fn clone_repeats_content_across_copies() {
        let t = small([[[1, 0], [0, 1]], [[0, 1], [1, 0]]], f2());
        let c = t.clone_along(&["0", "1"]).unwrap();
        assert_eq!(c.dims(), [4, 4, 4]);
        for (di, dj, dk) in itertools_product(2, 2, 2)
            .flat_map(|b| [(b, (0, 0, 0)), (b, (1, 1, 1))])
            .map(|((i, j, k), (si, sj, sk))| (si * 2 + i, sj * 2 + j, sk * 2 + k))
        {
            assert_eq!(c.get(di, dj, dk), t.get(di % 2, dj % 2, dk % 2));
        }
        let s = c.slice(3, &Label::parse("1*0").unwrap()).unwrap();
        let s_orig = t.slice(3, &Label::parse("0").unwrap()).unwrap();
        // Each clone 3-slice restricted to one copy-block equals the original slice.
        assert_eq!(*s.get(0, 0), *s_orig.get(0, 0));
        assert_eq!(*s.get(2, 2), *s_orig.get(0, 0));
    }

    fn itertools_product(
        a: usize,
        b: usize,
        c: usize,
    ) -> impl Iterator<Item = (usize, usize, usize)> {
        (0..a).flat_map(move |i| (0..b).flat_map(move |j| (0..c).map(move |k| (i, j, k))))
    }

    #[test]
    fn adjoin_places_each_matrix_on_its_own_slice() {
        let f = f2();
        let t = small([[[1, 0], [0, 0]], [[0, 0], [0, 0]]], f);
        let m = Matrix::from_fn(
            IndexSet::positional(2),
            IndexSet::positional(2),
            f.zero(),
            |r, c| if r == c { f.one() } else { f.zero() },
        );
        let (big, labels) = t
            .adjoin_slices([&[], &[], std::slice::from_ref(&m)])
            .unwrap();
        assert_eq!(big.dims(), [2, 2, 3]);
        assert_eq!(labels[2].len(), 1);
        let s = big.slice(3, &labels[2][0]).unwrap();
        assert_eq!(*s.get(0, 0), f.one());
        assert_eq!(*s.get(1, 1), f.one());
        assert!(s.get(0, 1).is_zero());
        // Original block kept.
        assert_eq!(*big.get(0, 0, 0), f.one());
        // Adjoining nothing is the identity.
        let (same, none) = t.adjoin_slices([&[], &[], &[]]).unwrap();
        assert_eq!(same, t);
        assert!(none.iter().all(Vec::is_empty));
    }

    #[test]
    fn adjoin_rejects_foreign_labels() {
        let f = f2();
        let t = small([[[0, 0], [0, 0]], [[0, 0], [0, 0]]], f);
        let m = Matrix::from_fn(
            IndexSet::from_atoms(&["weird"]).unwrap(),
            IndexSet::positional(2),
            f.zero(),
            |_, _| f.one(),
        );
        assert!(t.adjoin_slices([&[], &[], &[m]]).is_err());
    }

    #[test]
    fn apply_mod_validates_slice_membership() {
        let f = f2();
        let t = small([[[1, 0], [0, 1]], [[0, 1], [1, 0]]], f);
        let axes = t.axes().clone();
        let zero_t = Tensor3::zeros(axes.clone(), f.zero());
        let span_jk = MatrixSpan::from_generators(
            axes[1].clone(),
            axes[2].clone(),
            f,
            vec![Matrix::from_fn(
                axes[1].clone(),
                axes[2].clone(),
                f.zero(),
                |r, c| if r == 0 && c == 0 { f.one() } else { f.zero() },
            )],
        )
        .unwrap();
        let empty_ik = MatrixSpan::empty(axes[0].clone(), axes[2].clone(), f);
        let empty_ij = MatrixSpan::empty(axes[0].clone(), axes[1].clone(), f);
        // Zero corrections always pass and leave the tensor unchanged.
        let same = t
            .apply_mod(&zero_t, &zero_t, &zero_t, [&span_jk, &empty_ik, &empty_ij])
            .unwrap();
        assert_eq!(same, t);
        // A correction with a slice outside its span is rejected.
        let mut a = zero_t.clone();
        a.set(0, 1, 1, f.one());
        assert!(t
            .apply_mod(&a, &zero_t, &zero_t, [&span_jk, &empty_ik, &empty_ij])
            .is_err());
        // One inside the span shifts the entry.
        let mut a2 = zero_t.clone();
        a2.set(0, 0, 0, f.one());
        let shifted = t
            .apply_mod(&a2, &zero_t, &zero_t, [&span_jk, &empty_ik, &empty_ij])
            .unwrap();
        assert!(shifted.get(0, 0, 0).is_zero(), "1 + 1 = 0 over F_2");
    }

    #[test]
    fn permute_axes_moves_entries() {
        let f = f2();
        let mut t = small([[[0, 0], [0, 0]], [[0, 0], [0, 0]]], f);
        t.set(0, 1, 0, f.one());
        let p = t.permute_axes([3, 1, 2]).unwrap();
        assert_eq!(*p.get(0, 0, 1), f.one());
        assert!(t.permute_axes([1, 1, 2]).is_err());
    }
}
