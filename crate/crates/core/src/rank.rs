//! Exact tensor rank and rank bounds at desk scale.
//!
//! The rank of an order-3 tensor equals the least `r` such that some
//! `r`-dimensional space of matrices, spanned by rank-one matrices,
//! contains every 3-slice: from `T = sum a_i (x) b_i (x) c_i` each slice
//! is a combination of the `a_i b_i^T`, and conversely expressing the
//! slices over a rank-one basis of such a space reassembles a
//! decomposition.  [`exact_rank`] searches over those spaces directly:
//! starting from the slice span `V` (dimension `v`) it enumerates, for
//! each target `r` from the flattening lower bound upward, the
//! `(r - v)`-dimensional extensions of `V` generated by rank-one
//! candidates, and accepts the first extension whose contained rank-one
//! matrices span it.  Candidates are enumerated in a fixed order up to
//! scalar normalization, so the returned witness is canonical and
//! independent of thread count.
//!
//! Over the rationals no enumeration can terminate, so only bounds are
//! offered there ([`rank_bounds`]): flattening from below, a greedy
//! slice-by-slice elimination from above.
//!
//! Rank over small extension fields is exposed through
//! [`rank_extension_scan`], which re-runs the same search over `F_{p^e}`
//! for small `e`; matrix rank is invariant under field extension but
//! tensor rank is not, and the scan makes such drops observable.
//!
//! [`min_rank_mod`] minimizes rank over a mod-space: all tensors obtained
//! by adding members of prescribed matrix spans to the slices along each
//! axis.  [`slice_elimination_check`] combines the two engines into the
//! substitution bound: adjoining matrices as fresh slices costs their
//! span dimensions and reduces the remainder to a mod-space minimum, with
//! equality expected exactly when every adjoined matrix has rank at most
//! one.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::jacobian::{jacobian_rank_report, JacobianReport, DEFAULT_EVAL_BOUND};
use crate::label::IndexSet;
use crate::linalg::{Matrix, MatrixSpan};
use crate::poly::{MultiPoly, VarCatalog};
use crate::tensor::Tensor3;

/// Resource limits for the rank engines.  `max_candidates` caps the
/// number of candidate examinations per search, `max_rank` the deepest
/// level probed, `max_members` the mod-space enumeration size before
/// falling back to sampling `sample_size` members.  The optional time
/// limit aborts long searches; deterministic pipelines leave it unset.
#[derive(Clone, Debug)]
pub struct SearchBudget {
    pub max_candidates: u64,
    pub max_rank: usize,
    pub max_members: u128,
    pub sample_size: u64,
    pub time_limit_ms: Option<u64>,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_candidates: 50_000_000,
            max_rank: 24,
            max_members: 1 << 22,
            sample_size: 512,
            time_limit_ms: None,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn with_seed(seed: u64) -> Self {
        SearchBudget {
            seed,
            ..SearchBudget::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_candidates == 0
            || self.max_rank == 0
            || self.max_members == 0
            || self.sample_size == 0
            || self.time_limit_ms == Some(0)
        {
            return Err(Error::InvalidParams(
                "search budget limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A list of rank-one terms; zero terms are dropped at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    terms: Vec<(Vec<Scalar>, Vec<Scalar>, Vec<Scalar>)>,
}

impl Decomposition {
    pub fn new(terms: Vec<(Vec<Scalar>, Vec<Scalar>, Vec<Scalar>)>) -> Self {
        let terms = terms
            .into_iter()
            .filter(|(a, b, c)| {
                !(a.iter().all(Scalar::is_zero)
                    || b.iter().all(Scalar::is_zero)
                    || c.iter().all(Scalar::is_zero))
            })
            .collect();
        Decomposition { terms }
    }

    pub fn empty() -> Self {
        Decomposition { terms: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(Vec<Scalar>, Vec<Scalar>, Vec<Scalar>)] {
        &self.terms
    }

    /// Rebuilds the tensor the decomposition stands for, on the given axes.
    pub fn to_tensor(&self, axes: [IndexSet; 3], field: FieldSpec) -> Result<Tensor3<Scalar>> {
        let dims = [axes[0].len(), axes[1].len(), axes[2].len()];
        for (a, b, c) in &self.terms {
            if a.len() != dims[0] || b.len() != dims[1] || c.len() != dims[2] {
                return Err(Error::ShapeMismatch(
                    "decomposition vectors do not match the axis sizes".into(),
                ));
            }
            for s in a.iter().chain(b).chain(c) {
                if s.field() != field {
                    return Err(Error::FieldMismatch {
                        expected: field.to_string(),
                        found: s.field().to_string(),
                    });
                }
            }
        }
        Ok(Tensor3::from_fn(axes, field.zero(), |i, j, k| {
            let mut acc = field.zero();
            for (a, b, c) in &self.terms {
                acc = acc.add(&a[i].mul(&b[j]).mul(&c[k]));
            }
            acc
        }))
    }

    /// Applies an axis permutation to every term, `perm` mapping new axis
    /// positions to old ones as in [`Tensor3::permute_axes`].
    fn permuted(&self, perm: [usize; 3]) -> Decomposition {
        let src = [perm[0] - 1, perm[1] - 1, perm[2] - 1];
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let parts = [&t.0, &t.1, &t.2];
                (
                    parts[src[0]].clone(),
                    parts[src[1]].clone(),
                    parts[src[2]].clone(),
                )
            })
            .collect();
        Decomposition { terms }
    }

    pub fn to_json_value(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(a, b, c)| {
                let enc = |v: &Vec<Scalar>| {
                    Value::Array(v.iter().map(|s| Value::String(s.to_string())).collect())
                };
                Value::Array(vec![enc(a), enc(b), enc(c)])
            })
            .collect();
        json!({ "rank": self.terms.len(), "terms": terms })
    }

    pub fn from_json_value(v: &Value, field: FieldSpec) -> Result<Decomposition> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::ShapeMismatch("certificate must be a JSON object".into()))?;
        let terms_v = obj
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::ShapeMismatch("certificate needs a \"terms\" array".into()))?;
        let mut terms = Vec::with_capacity(terms_v.len());
        for t in terms_v {
            let triple = t
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| Error::ShapeMismatch("each term must be a triple".into()))?;
            let mut vecs = Vec::with_capacity(3);
            for part in triple {
                let arr = part
                    .as_array()
                    .ok_or_else(|| Error::ShapeMismatch("term parts must be arrays".into()))?;
                let mut v = Vec::with_capacity(arr.len());
                for s in arr {
                    let text = s.as_str().ok_or_else(|| {
                        Error::ShapeMismatch("vector entries must be strings".into())
                    })?;
                    v.push(field.parse_scalar(text)?);
                }
                vecs.push(v);
            }
            let c = vecs.pop().unwrap();
            let b = vecs.pop().unwrap();
            let a = vecs.pop().unwrap();
            terms.push((a, b, c));
        }
        if let Some(stated) = obj.get("rank").and_then(Value::as_u64) {
            if stated as usize != terms.len() {
                return Err(Error::ShapeMismatch(format!(
                    "certificate states rank {stated} but carries {} terms",
                    terms.len()
                )));
            }
        }
        Ok(Decomposition::new(terms))
    }
}

/// Outcome of a rank computation: exact when `lower == upper` and the
/// search was exhaustive; otherwise an honest interval.  The witness is
/// always a valid decomposition with `upper` terms, and the trace records
/// the ordered bound steps that produced `lower`.
#[derive(Clone, Debug)]
pub struct RankCertificate {
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
    pub witness: Decomposition,
    pub trace: Vec<String>,
    pub examined: u64,
}

impl RankCertificate {
    pub fn rank(&self) -> Option<usize> {
        self.exact.then_some(self.upper)
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "witness": self.witness.to_json_value(),
            "trace": self.trace,
            "examined": self.examined,
        })
    }
}

/// True iff the terms sum to `t` entry for entry.
pub fn verify_decomposition(t: &Tensor3<Scalar>, d: &Decomposition) -> Result<bool> {
    let rebuilt = d.to_tensor(t.axes().clone(), t.field())?;
    Ok(rebuilt == *t)
}

fn unfold(t: &Tensor3<Scalar>, axis: usize) -> Matrix<Scalar> {
    let ax = axis - 1;
    let dims = t.dims();
    let (oa, ob) = match ax {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    Matrix::from_fn(
        IndexSet::positional(dims[ax]),
        IndexSet::positional(dims[oa] * dims[ob]),
        t.field().zero(),
        |r, c| {
            let (x, y) = (c / dims[ob], c % dims[ob]);
            let mut idx = [0usize; 3];
            idx[ax] = r;
            idx[oa] = x;
            idx[ob] = y;
            t.get(idx[0], idx[1], idx[2]).clone()
        },
    )
}

/// The largest matrix rank among the three axis unfoldings; a lower bound
/// for tensor rank over every extension field.
pub fn flattening_lower_bound(t: &Tensor3<Scalar>) -> usize {
    (1..=3).map(|a| unfold(t, a).rank()).max().unwrap_or(0)
}

/// Greedy upper bound: each 3-slice is eliminated pivot by pivot, one
/// rank-one term per pivot, after rotating the most favorable axis into
/// slicing position.
fn greedy_slice_decomposition(t: &Tensor3<Scalar>) -> Decomposition {
    let mut best: Option<Decomposition> = None;
    for perm in [[1usize, 2, 3], [2, 3, 1], [3, 1, 2]] {
        let view = t.permute_axes(perm).expect("fixed permutations are valid");
        let d = greedy_axis3(&view);
        let inv = inverse_perm(perm);
        let d = d.permuted(inv);
        if best.as_ref().is_none_or(|b| d.rank() < b.rank()) {
            best = Some(d);
        }
    }
    best.unwrap_or_else(Decomposition::empty)
}

fn inverse_perm(perm: [usize; 3]) -> [usize; 3] {
    let mut inv = [0usize; 3];
    for (new_pos, &old) in perm.iter().enumerate() {
        inv[old - 1] = new_pos + 1;
    }
    inv
}

fn greedy_axis3(t: &Tensor3<Scalar>) -> Decomposition {
    let dims = t.dims();
    let field = t.field();
    let mut terms = Vec::new();
    for k in 0..dims[2] {
        let mut m: Vec<Vec<Scalar>> = (0..dims[0])
            .map(|i| (0..dims[1]).map(|j| t.get(i, j, k).clone()).collect())
            .collect();
        while let Some((r0, c0)) = first_nonzero(&m) {
            let pivot_inv = m[r0][c0].inv().expect("pivot is nonzero");
            let a: Vec<Scalar> = (0..dims[0]).map(|i| m[i][c0].mul(&pivot_inv)).collect();
            let b: Vec<Scalar> = m[r0].clone();
            for i in 0..dims[0] {
                for j in 0..dims[1] {
                    m[i][j] = m[i][j].sub(&a[i].mul(&b[j]));
                }
            }
            let mut c = vec![field.zero(); dims[2]];
            c[k] = field.one();
            terms.push((a, b, c));
        }
    }
    Decomposition::new(terms)
}

fn first_nonzero(m: &[Vec<Scalar>]) -> Option<(usize, usize)> {
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if !e.is_zero() {
                return Some((i, j));
            }
        }
    }
    None
}

/// Field-agnostic bounds: flattening from below, greedy elimination from
/// above.  `exact` is set only when the two meet.
pub fn rank_bounds(t: &Tensor3<Scalar>) -> RankCertificate {
    let lower = flattening_lower_bound(t);
    let witness = greedy_slice_decomposition(t);
    let upper = witness.rank();
    RankCertificate {
        lower,
        upper,
        exact: lower == upper,
        witness,
        trace: vec![
            format!("flattening lower bound {lower}"),
            format!("greedy slice elimination upper bound {upper}"),
        ],
        examined: 0,
    }
}

mod gf {
    //! Table-based arithmetic for `F_{p^e}` with `p^e <= 512`, elements
    //! addressed as base-`p` digit strings packed into a `u16` index.
    //! Degree 2 and 3 extensions use the lexicographically least monic
    //! irreducible modulus, found by root exclusion.

    use crate::error::{Error, Result};

    pub struct GfTable {
        pub p: u64,
        pub e: u32,
        pub q: usize,
        add: Vec<u16>,
        mul: Vec<u16>,
        inv: Vec<u16>,
        neg: Vec<u16>,
    }

    const MAX_Q: usize = 512;

    impl GfTable {
        pub fn new(p: u64, e: u32) -> Result<GfTable> {
            if !(1..=3).contains(&e) {
                return Err(Error::InvalidParams(format!(
                    "extension degree {e} not supported (1..=3)"
                )));
            }
            let q = (p as usize).checked_pow(e).filter(|&q| q <= MAX_Q).ok_or(
                Error::BudgetExceeded {
                    what: "field cardinality for table arithmetic".into(),
                    needed: (p as u128).pow(e),
                    budget: MAX_Q as u128,
                },
            )?;
            let pu = p as usize;
            let digits = |mut x: usize| -> Vec<usize> {
                let mut d = vec![0usize; e as usize];
                for slot in d.iter_mut() {
                    *slot = x % pu;
                    x /= pu;
                }
                d
            };
            let pack =
                |d: &[usize]| -> usize { d.iter().rev().fold(0usize, |acc, &c| acc * pu + c) };
            let modulus: Vec<usize> = if e == 1 {
                vec![0]
            } else {
                (0..q)
                    .map(digits)
                    .find(|c| {
                        (0..pu).all(|t| {
                            let mut val = 1usize;
                            for _ in 0..e {
                                val = val * t % pu;
                            }
                            let rest: usize = c
                                .iter()
                                .enumerate()
                                .map(|(i, &ci)| {
                                    let mut tp = 1usize;
                                    for _ in 0..i {
                                        tp = tp * t % pu;
                                    }
                                    ci * tp % pu
                                })
                                .sum();
                            !(val + rest).is_multiple_of(pu)
                        })
                    })
                    .expect("an irreducible monic polynomial of degree 2 or 3 always exists")
            };
            let mut add = vec![0u16; q * q];
            let mut mul = vec![0u16; q * q];
            let mut neg = vec![0u16; q];
            for a in 0..q {
                let da = digits(a);
                let dn: Vec<usize> = da.iter().map(|&c| (pu - c) % pu).collect();
                neg[a] = pack(&dn) as u16;
                for b in 0..q {
                    let db = digits(b);
                    let ds: Vec<usize> = da.iter().zip(&db).map(|(&x, &y)| (x + y) % pu).collect();
                    add[a * q + b] = pack(&ds) as u16;
                    let mut raw = vec![0usize; 2 * e as usize - 1];
                    for (i, &x) in da.iter().enumerate() {
                        for (j, &y) in db.iter().enumerate() {
                            raw[i + j] = (raw[i + j] + x * y) % pu;
                        }
                    }
                    for d in (e as usize..raw.len()).rev() {
                        let coeff = raw[d];
                        if coeff == 0 {
                            continue;
                        }
                        raw[d] = 0;
                        for (i, &ci) in modulus.iter().enumerate() {
                            let pos = i + d - e as usize;
                            raw[pos] = (raw[pos] + (pu - ci % pu) * coeff) % pu;
                        }
                    }
                    mul[a * q + b] = pack(&raw[..e as usize]) as u16;
                }
            }
            let mut inv = vec![0u16; q];
            for a in 1..q {
                for b in 1..q {
                    if mul[a * q + b] == 1 {
                        inv[a] = b as u16;
                        break;
                    }
                }
            }
            Ok(GfTable {
                p,
                e,
                q,
                add,
                mul,
                inv,
                neg,
            })
        }

        #[inline]
        pub fn add(&self, a: u16, b: u16) -> u16 {
            self.add[a as usize * self.q + b as usize]
        }

        #[inline]
        pub fn sub(&self, a: u16, b: u16) -> u16 {
            self.add(a, self.neg[b as usize])
        }

        #[inline]
        pub fn mul(&self, a: u16, b: u16) -> u16 {
            self.mul[a as usize * self.q + b as usize]
        }

        #[inline]
        pub fn inv(&self, a: u16) -> u16 {
            self.inv[a as usize]
        }
    }

    /// Row-reduced echelon basis over the table field.
    pub struct Echelon<'g> {
        gf: &'g GfTable,
        width: usize,
        rows: Vec<Vec<u16>>,
        pivots: Vec<usize>,
    }

    impl<'g> Echelon<'g> {
        pub fn new(gf: &'g GfTable, width: usize) -> Self {
            Echelon {
                gf,
                width,
                rows: Vec::new(),
                pivots: Vec::new(),
            }
        }

        pub fn dim(&self) -> usize {
            self.rows.len()
        }

        pub fn reduce(&self, v: &mut [u16]) {
            for (row, &pv) in self.rows.iter().zip(&self.pivots) {
                let f = v[pv];
                if f != 0 {
                    for t in pv..self.width {
                        v[t] = self.gf.sub(v[t], self.gf.mul(f, row[t]));
                    }
                }
            }
        }

        /// Consumes the echelon, exposing normalized rows and their
        /// pivot columns in ascending pivot order.
        pub fn into_parts(self) -> (Vec<Vec<u16>>, Vec<usize>) {
            (self.rows, self.pivots)
        }

        /// Inserts the vector if independent; returns whether the
        /// dimension grew.
        pub fn insert(&mut self, mut v: Vec<u16>) -> bool {
            self.reduce(&mut v);
            let Some(pv) = v.iter().position(|&x| x != 0) else {
                return false;
            };
            let f = self.gf.inv(v[pv]);
            for t in pv..self.width {
                v[t] = self.gf.mul(v[t], f);
            }
            for (row, &rp) in self.rows.iter_mut().zip(&self.pivots) {
                let g = row[pv];
                if g != 0 && rp < pv {
                    for t in pv..self.width {
                        row[t] = self.gf.sub(row[t], self.gf.mul(g, v[t]));
                    }
                }
            }
            let at = self.pivots.partition_point(|&x| x < pv);
            self.rows.insert(at, v);
            self.pivots.insert(at, pv);
            true
        }
    }

    /// All vectors of the given length whose first nonzero coordinate is
    /// 1, in ascending lexicographic order with index 0 most significant.
    pub fn normalized_vectors(gf: &GfTable, len: usize) -> Vec<Vec<u16>> {
        let mut out = Vec::new();
        let mut v = vec![0u16; len];
        loop {
            if let Some(first) = v.iter().position(|&x| x != 0) {
                if v[first] == 1 {
                    out.push(v.clone());
                }
            }
            let mut pos = len;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                if (v[pos] as usize) + 1 < gf.q {
                    v[pos] += 1;
                    for t in v.iter_mut().skip(pos + 1) {
                        *t = 0;
                    }
                    break;
                }
            }
        }
    }
}

use gf::{normalized_vectors, Echelon, GfTable};

struct SearchHit {
    level: usize,
    basis: Vec<Vec<u16>>,
}

enum LevelOutcome {
    Found(SearchHit),
    Exhausted,
    BudgetHit,
}

struct SliceSearch<'g> {
    gf: &'g GfTable,
    width: usize,
    candidates: Vec<Vec<u16>>,
    slice_ech_rows: Vec<Vec<u16>>,
    slice_pivots: Vec<usize>,
    examined: u64,
    max_candidates: u64,
    deadline: Option<Instant>,
}

impl<'g> SliceSearch<'g> {
    fn new(
        gf: &'g GfTable,
        ni: usize,
        nj: usize,
        slices: &[Vec<u16>],
        budget: &SearchBudget,
    ) -> Self {
        let width = ni * nj;
        let mut ech = Echelon::new(gf, width);
        for s in slices {
            ech.insert(s.clone());
        }
        let mut candidates = Vec::new();
        for a in normalized_vectors(gf, ni) {
            for b in normalized_vectors(gf, nj) {
                let mut m = vec![0u16; width];
                for (i, &ai) in a.iter().enumerate() {
                    if ai == 0 {
                        continue;
                    }
                    for (j, &bj) in b.iter().enumerate() {
                        m[i * nj + j] = gf.mul(ai, bj);
                    }
                }
                candidates.push(m);
            }
        }
        let (rows, pivots) = ech.into_parts();
        SliceSearch {
            gf,
            width,
            candidates,
            slice_ech_rows: rows,
            slice_pivots: pivots,
            examined: 0,
            max_candidates: budget.max_candidates,
            deadline: budget
                .time_limit_ms
                .map(|ms| Instant::now() + std::time::Duration::from_millis(ms)),
        }
    }

    fn slice_span_dim(&self) -> usize {
        self.slice_ech_rows.len()
    }

    fn reduce_mod_slices(&self, v: &mut [u16]) {
        for (row, &pv) in self.slice_ech_rows.iter().zip(&self.slice_pivots) {
            let f = v[pv];
            if f != 0 {
                for t in pv..self.width {
                    v[t] = self.gf.sub(v[t], self.gf.mul(f, row[t]));
                }
            }
        }
    }

    fn spend(&mut self) -> bool {
        self.examined += 1;
        if self.examined > self.max_candidates {
            return false;
        }
        if let Some(d) = self.deadline {
            if self.examined.is_multiple_of(4096) && Instant::now() > d {
                return false;
            }
        }
        true
    }

    /// Tries every extension of the slice span by `e` rank-one
    /// candidates; returns the first whose contained rank-one matrices
    /// span the whole extension.
    fn run_level(&mut self, r: usize) -> LevelOutcome {
        let v = self.slice_span_dim();
        if r < v {
            return LevelOutcome::Exhausted;
        }
        let e = r - v;
        let mut chosen: Vec<Vec<u16>> = Vec::with_capacity(e);
        let mut chosen_idx: Vec<usize> = Vec::with_capacity(e);
        self.descend(r, e, 0, &mut chosen, &mut chosen_idx)
    }

    fn descend(
        &mut self,
        r: usize,
        remaining: usize,
        start: usize,
        chosen: &mut Vec<Vec<u16>>,
        chosen_idx: &mut Vec<usize>,
    ) -> LevelOutcome {
        if remaining == 0 {
            return self.leaf_check(r, chosen);
        }
        for idx in start..self.candidates.len() {
            if !self.spend() {
                return LevelOutcome::BudgetHit;
            }
            let mut res = self.candidates[idx].clone();
            self.reduce_mod_slices(&mut res);
            reduce_rows(self.gf, &chosen[..], &mut res);
            if res.iter().all(|&x| x == 0) {
                continue;
            }
            normalize_row(self.gf, &mut res);
            chosen.push(res);
            chosen_idx.push(idx);
            let out = self.descend(r, remaining - 1, idx + 1, chosen, chosen_idx);
            chosen.pop();
            chosen_idx.pop();
            match out {
                LevelOutcome::Exhausted => {}
                other => return other,
            }
        }
        LevelOutcome::Exhausted
    }

    fn leaf_check(&mut self, r: usize, chosen: &[Vec<u16>]) -> LevelOutcome {
        let mut span = Echelon::new(self.gf, self.width);
        let mut basis = Vec::with_capacity(r);
        if r == 0 {
            return LevelOutcome::Found(SearchHit { level: 0, basis });
        }
        for idx in 0..self.candidates.len() {
            if !self.spend() {
                return LevelOutcome::BudgetHit;
            }
            let mut res = self.candidates[idx].clone();
            self.reduce_mod_slices(&mut res);
            reduce_rows(self.gf, chosen, &mut res);
            if res.iter().any(|&x| x != 0) {
                continue;
            }
            if span.insert(self.candidates[idx].clone()) {
                basis.push(self.candidates[idx].clone());
                if span.dim() == r {
                    return LevelOutcome::Found(SearchHit { level: r, basis });
                }
            }
        }
        LevelOutcome::Exhausted
    }
}

fn reduce_rows(gf: &GfTable, rows: &[Vec<u16>], v: &mut [u16]) {
    for row in rows {
        let pv = row
            .iter()
            .position(|&x| x != 0)
            .expect("reduction rows are normalized and nonzero");
        let f = v[pv];
        if f != 0 {
            for t in pv..v.len() {
                v[t] = gf.sub(v[t], gf.mul(f, row[t]));
            }
        }
    }
}

fn normalize_row(gf: &GfTable, v: &mut [u16]) {
    if let Some(pv) = v.iter().position(|&x| x != 0) {
        let f = gf.inv(v[pv]);
        for t in pv..v.len() {
            v[t] = gf.mul(v[t], f);
        }
    }
}

fn fp_modulus(t: &Tensor3<Scalar>) -> Result<u64> {
    match t.field() {
        FieldSpec::Fp(p) => Ok(p),
        FieldSpec::Q => Err(Error::InvalidParams(
            "exhaustive rank search needs a finite prime field; use rank_bounds over Q".into(),
        )),
    }
}

fn scalar_to_gf(s: &Scalar) -> u16 {
    match s {
        Scalar::Fp { val, .. } => *val as u16,
        Scalar::Rat(_) => unreachable!("search entries are prime-field residues"),
    }
}

/// Rotates the largest axis into slicing position so searched matrices
/// stay small; ties keep the identity arrangement.
fn search_view(t: &Tensor3<Scalar>) -> (Tensor3<Scalar>, [usize; 3]) {
    let dims = t.dims();
    let best_axis = (0..3).max_by_key(|&a| (dims[a], a)).unwrap();
    let perm = match best_axis {
        0 => [2, 3, 1],
        1 => [1, 3, 2],
        _ => [1, 2, 3],
    };
    if perm == [1, 2, 3] {
        (t.clone(), perm)
    } else {
        (t.permute_axes(perm).expect("fixed permutation"), perm)
    }
}

fn tensor_gf_slices(t: &Tensor3<Scalar>) -> Vec<Vec<u16>> {
    let dims = t.dims();
    (0..dims[2])
        .map(|k| {
            let mut flat = vec![0u16; dims[0] * dims[1]];
            for i in 0..dims[0] {
                for j in 0..dims[1] {
                    flat[i * dims[1] + j] = scalar_to_gf(t.get(i, j, k));
                }
            }
            flat
        })
        .collect()
}

/// Exact rank over a prime field via the subspace-extension search.
/// Exhausted budgets degrade to an interval certificate, never to a
/// wrong answer.
pub fn exact_rank(t: &Tensor3<Scalar>, budget: &SearchBudget) -> Result<RankCertificate> {
    budget.validate()?;
    let p = fp_modulus(t)?;
    let gf = GfTable::new(p, 1)?;
    let (view, perm) = search_view(t);
    let outcome = search_ranked(&gf, &view, budget, true)?;
    outcome_to_certificate(&gf, outcome, &view, t, perm)
}

struct SearchOutcome {
    lower: usize,
    hit: Option<SearchHit>,
    coeffs: Option<Vec<Vec<u16>>>,
    examined: u64,
    trace: Vec<String>,
    budget_hit: bool,
}

fn search_ranked(
    gf: &GfTable,
    view: &Tensor3<Scalar>,
    budget: &SearchBudget,
    want_witness: bool,
) -> Result<SearchOutcome> {
    let dims = view.dims();
    let slices = tensor_gf_slices(view);
    let mut search = SliceSearch::new(gf, dims[0], dims[1], &slices, budget);
    let flat = flattening_lower_bound(view);
    let trivial_upper: usize = {
        let per_axis: Vec<usize> = (1..=3)
            .map(|axis| {
                view.slices(axis)
                    .expect("axis in range")
                    .iter()
                    .map(Matrix::rank)
                    .sum()
            })
            .collect();
        *per_axis.iter().min().unwrap()
    };
    let cap = budget.max_rank.min(trivial_upper);
    let mut trace = vec![format!("flattening lower bound {flat}")];
    let mut lower = flat;
    let mut hit = None;
    let mut budget_hit = false;
    for r in flat..=cap {
        match search.run_level(r) {
            LevelOutcome::Found(h) => {
                trace.push(format!("level {r}: spanning rank-one subspace found"));
                hit = Some(h);
                break;
            }
            LevelOutcome::Exhausted => {
                trace.push(format!("level {r}: exhausted, no spanning subspace"));
                lower = r + 1;
            }
            LevelOutcome::BudgetHit => {
                trace.push(format!(
                    "level {r}: budget exhausted after {} candidate examinations",
                    search.examined
                ));
                budget_hit = true;
                break;
            }
        }
    }
    let coeffs = match (&hit, want_witness) {
        (Some(h), true) => Some(express_slices(gf, &h.basis, &slices)),
        _ => None,
    };
    Ok(SearchOutcome {
        lower,
        hit,
        coeffs,
        examined: search.examined,
        trace,
        budget_hit,
    })
}

/// Solves `basis^T · lambda = slice` for every slice; solvable by
/// construction since slices lie in the span of the basis.
fn express_slices(gf: &GfTable, basis: &[Vec<u16>], slices: &[Vec<u16>]) -> Vec<Vec<u16>> {
    let r = basis.len();
    let width = basis.first().map_or(0, Vec::len);
    // Gaussian elimination on the width x (r + slices) augmented system.
    let mut aug: Vec<Vec<u16>> = (0..width)
        .map(|w| {
            let mut row = Vec::with_capacity(r + slices.len());
            for b in basis {
                row.push(b[w]);
            }
            for s in slices {
                row.push(s[w]);
            }
            row
        })
        .collect();
    let mut pivot_of_col = vec![usize::MAX; r];
    let mut row_cursor = 0usize;
    for col in 0..r {
        let Some(pr) = (row_cursor..width).find(|&rr| aug[rr][col] != 0) else {
            continue;
        };
        aug.swap(row_cursor, pr);
        let f = gf.inv(aug[row_cursor][col]);
        for t in col..aug[row_cursor].len() {
            aug[row_cursor][t] = gf.mul(aug[row_cursor][t], f);
        }
        for rr in 0..width {
            if rr != row_cursor && aug[rr][col] != 0 {
                let g = aug[rr][col];
                for t in col..aug[rr].len() {
                    let sub = gf.mul(g, aug[row_cursor][t]);
                    aug[rr][t] = gf.sub(aug[rr][t], sub);
                }
            }
        }
        pivot_of_col[col] = row_cursor;
        row_cursor += 1;
    }
    (0..slices.len())
        .map(|s| {
            (0..r)
                .map(|col| {
                    let pr = pivot_of_col[col];
                    if pr == usize::MAX {
                        0
                    } else {
                        aug[pr][r + s]
                    }
                })
                .collect()
        })
        .collect()
}

fn factor_rank_one(gf: &GfTable, flat: &[u16], ni: usize, nj: usize) -> (Vec<u16>, Vec<u16>) {
    let (r0, c0) = (0..ni)
        .flat_map(|i| (0..nj).map(move |j| (i, j)))
        .find(|&(i, j)| flat[i * nj + j] != 0)
        .expect("rank-one basis matrices are nonzero");
    let pinv = gf.inv(flat[r0 * nj + c0]);
    let a: Vec<u16> = (0..ni).map(|i| gf.mul(flat[i * nj + c0], pinv)).collect();
    let b: Vec<u16> = (0..nj).map(|j| flat[r0 * nj + j]).collect();
    (a, b)
}

fn outcome_to_certificate(
    gf: &GfTable,
    outcome: SearchOutcome,
    view: &Tensor3<Scalar>,
    original: &Tensor3<Scalar>,
    perm: [usize; 3],
) -> Result<RankCertificate> {
    let field = original.field();
    let dims = view.dims();
    let mut trace = outcome.trace;
    if let Some(hit) = outcome.hit {
        let coeffs = outcome.coeffs.expect("witness requested for exact search");
        let from_gf =
            |v: Vec<u16>| -> Vec<Scalar> { v.iter().map(|&x| field.from_i64(x as i64)).collect() };
        let terms: Vec<_> = hit
            .basis
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let (a, bvec) = factor_rank_one(gf, b, dims[0], dims[1]);
                let c: Vec<u16> = (0..dims[2]).map(|k| coeffs[k][i]).collect();
                (from_gf(a), from_gf(bvec), from_gf(c))
            })
            .collect();
        let witness = Decomposition::new(terms).permuted(inverse_perm(perm));
        if witness.rank() != hit.level || !verify_decomposition(original, &witness)? {
            return Err(Error::ShapeMismatch(
                "internal error: extracted witness fails verification".into(),
            ));
        }
        trace.push(format!("witness verified with {} terms", hit.level));
        return Ok(RankCertificate {
            lower: hit.level,
            upper: hit.level,
            exact: true,
            witness,
            trace,
            examined: outcome.examined,
        });
    }
    let witness = greedy_slice_decomposition(original);
    let upper = witness.rank();
    trace.push(if outcome.budget_hit {
        format!(
            "interval result [{}, {upper}] after budget stop",
            outcome.lower
        )
    } else {
        format!(
            "interval result [{}, {upper}]: probe ceiling reached",
            outcome.lower
        )
    });
    Ok(RankCertificate {
        lower: outcome.lower,
        upper,
        exact: outcome.lower == upper,
        witness,
        trace,
        examined: outcome.examined,
    })
}

/// Rank of each slice-search run over `F_{p^e}`, one entry per requested
/// extension degree.  Tensor entries embed as constants; ranks can only
/// drop as `e` grows on the degrees that divide each other.
#[derive(Clone, Debug)]
pub struct ExtensionRank {
    pub degree: u32,
    pub cardinality: u64,
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
}

pub fn rank_extension_scan(
    t: &Tensor3<Scalar>,
    degrees: &[u32],
    budget: &SearchBudget,
) -> Result<Vec<ExtensionRank>> {
    budget.validate()?;
    let p = fp_modulus(t)?;
    let (view, _) = search_view(t);
    let greedy_upper = greedy_slice_decomposition(t).rank();
    degrees
        .iter()
        .map(|&e| {
            let gf = GfTable::new(p, e)?;
            let out = search_ranked(&gf, &view, budget, false)?;
            let (lower, upper, exact) = match &out.hit {
                Some(h) => (h.level, h.level, true),
                None => (out.lower, greedy_upper, false),
            };
            Ok(ExtensionRank {
                degree: gf.e,
                cardinality: gf.p.pow(gf.e),
                lower,
                upper,
                exact,
            })
        })
        .collect()
}

/// Minimum rank over the mod-space of `t`: every tensor `t + A + B + C`
/// where the 1-slices of `A` stay in `spans[0]`, the 2-slices of `B` in
/// `spans[1]`, the 3-slices of `C` in `spans[2]`.
#[derive(Clone, Debug)]
pub struct ModRankReport {
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
    pub sampled: bool,
    pub members: u128,
    pub members_examined: u128,
    pub witness_member: Tensor3<Scalar>,
    pub witness_certificate: RankCertificate,
}

pub fn min_rank_mod(
    t: &Tensor3<Scalar>,
    spans: [&MatrixSpan; 3],
    budget: &SearchBudget,
) -> Result<ModRankReport> {
    budget.validate()?;
    let p = fp_modulus(t)?;
    let dims = t.dims();
    for (axis, span) in spans.iter().enumerate() {
        let (ra, ca) = match axis {
            0 => (2, 3),
            1 => (1, 3),
            _ => (1, 2),
        };
        if span.dim() > 0 && (span.row_set() != t.axis(ra) || span.col_set() != t.axis(ca)) {
            return Err(Error::ShapeMismatch(format!(
                "span for axis {} must be indexed by the tensor's other two axes",
                axis + 1
            )));
        }
    }
    // One coefficient per (axis, slice, span basis member).
    let mut slots: Vec<(usize, usize, usize)> = Vec::new();
    for axis in 0..3 {
        for slice in 0..dims[axis] {
            for b in 0..spans[axis].dim() {
                slots.push((axis, slice, b));
            }
        }
    }
    let bases: [Vec<Matrix<Scalar>>; 3] = [
        spans[0].reduced_basis(),
        spans[1].reduced_basis(),
        spans[2].reduced_basis(),
    ];
    let members = (p as u128)
        .checked_pow(slots.len() as u32)
        .unwrap_or(u128::MAX);
    let exact_mode = members <= budget.max_members;
    let member_tensor = |m: u128| -> Tensor3<Scalar> {
        let mut out = t.clone();
        let mut rem = m;
        for &(axis, slice, b) in &slots {
            let digit = (rem % p as u128) as i64;
            rem /= p as u128;
            if digit != 0 {
                add_to_slice(&mut out, axis, slice, &bases[axis][b], digit);
            }
        }
        out
    };
    let sample: Option<Vec<u128>> = if exact_mode {
        None
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        Some(
            (0..budget.sample_size)
                .map(|_| rng.gen_range(0..members))
                .collect(),
        )
    };
    let total: u128 = sample.as_ref().map_or(members, |s| s.len() as u128);
    let chunk: u128 = 1024;
    let mut best: Option<(usize, u128, RankCertificate)> = None;
    let mut all_exact = true;
    let mut examined: u128 = 0;
    let mut start: u128 = 0;
    while start < total {
        let end = (start + chunk).min(total);
        let group: Vec<u128> = match &sample {
            Some(s) => s[start as usize..end as usize].to_vec(),
            None => (start..end).collect(),
        };
        let certs: Vec<(u128, RankCertificate)> = group
            .par_iter()
            .map(|&m| {
                let cand = member_tensor(m);
                exact_rank(&cand, budget).map(|c| (m, c))
            })
            .collect::<Result<Vec<_>>>()?;
        for (m, cert) in certs {
            examined += 1;
            if !cert.exact {
                all_exact = false;
            }
            let key = cert.upper;
            if best
                .as_ref()
                .is_none_or(|(bu, bm, _)| key < *bu || (key == *bu && m < *bm))
            {
                best = Some((key, m, cert));
            }
        }
        start = end;
    }
    let (upper, best_m, witness_certificate) =
        best.expect("the mod-space always contains the tensor itself");
    let lower = if exact_mode && all_exact { upper } else { 0 };
    Ok(ModRankReport {
        lower,
        upper,
        exact: exact_mode && all_exact,
        sampled: !exact_mode,
        members,
        members_examined: examined,
        witness_member: member_tensor(best_m),
        witness_certificate,
    })
}

fn add_to_slice(
    t: &mut Tensor3<Scalar>,
    axis: usize,
    slice: usize,
    m: &Matrix<Scalar>,
    multiplier: i64,
) {
    let field = t.field();
    let mult = field.from_i64(multiplier);
    for (r, c) in m.support() {
        let add = mult.mul(m.get(r, c));
        let idx = match axis {
            0 => (slice, r, c),
            1 => (r, slice, c),
            _ => (r, c, slice),
        };
        let cur = t.get(idx.0, idx.1, idx.2).clone();
        t.set(idx.0, idx.1, idx.2, cur.add(&add));
    }
}

/// Both sides of the substitution bound for adjoined slices.
#[derive(Clone, Debug)]
pub struct EliminationReport {
    pub adjoined_all_rank_one: bool,
    pub offset: usize,
    pub adjoined_rank: RankCertificate,
    pub mod_rank: ModRankReport,
    pub equality_expected: bool,
    pub equality: Option<bool>,
    pub lower_inequality: Option<bool>,
}

pub fn slice_elimination_check(
    t: &Tensor3<Scalar>,
    mats: [&[Matrix<Scalar>]; 3],
    budget: &SearchBudget,
) -> Result<EliminationReport> {
    let field = t.field();
    let axes = t.axes();
    let mut all_rank_one = true;
    let mut spans: Vec<MatrixSpan> = Vec::with_capacity(3);
    for axis in 0..3 {
        let (ra, ca) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut gens = Vec::new();
        for m in mats[axis] {
            let embedded = m.embed(axes[ra].clone(), axes[ca].clone())?;
            if embedded.rank() > 1 {
                all_rank_one = false;
            }
            gens.push(embedded);
        }
        spans.push(MatrixSpan::from_generators(
            axes[ra].clone(),
            axes[ca].clone(),
            field,
            gens,
        )?);
    }
    let offset = spans.iter().map(MatrixSpan::dim).sum();
    let (adjoined, _) = t.adjoin_slices(mats)?;
    let adjoined_rank = exact_rank(&adjoined, budget)?;
    let mod_rank = min_rank_mod(t, [&spans[0], &spans[1], &spans[2]], budget)?;
    let both_exact = adjoined_rank.exact && mod_rank.exact;
    let equality = both_exact.then(|| adjoined_rank.upper == mod_rank.upper + offset);
    let lower_inequality = if both_exact {
        Some(adjoined_rank.upper >= mod_rank.upper + offset)
    } else if adjoined_rank.lower >= mod_rank.upper + offset {
        Some(true)
    } else {
        None
    };
    Ok(EliminationReport {
        adjoined_all_rank_one: all_rank_one,
        offset,
        adjoined_rank,
        mod_rank,
        equality_expected: all_rank_one,
        equality,
        lower_inequality,
    })
}

/// Whether `k` generic rank-one `n x n x n` terms have entries filling
/// the full `n^3`-dimensional space, measured by Jacobian rank over the
/// rationals.
#[derive(Clone, Debug)]
pub struct LickteigReport {
    pub n: usize,
    pub k: usize,
    pub ambient: usize,
    pub expected_dim: usize,
    pub threshold_exceeded: bool,
    pub jacobian: JacobianReport,
    pub fills: bool,
}

pub fn lickteig_fill_check(n: usize, k: usize, trials: usize, seed: u64) -> Result<LickteigReport> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParams(
            "fill check needs n >= 1, k >= 1".into(),
        ));
    }
    let mut names = Vec::new();
    for fam in ["u", "v", "w"] {
        for alpha in 1..=k {
            for i in 1..=n {
                names.push(format!("{fam}{alpha}_{i}"));
            }
        }
    }
    let catalog = VarCatalog::new(names)?;
    let field = FieldSpec::Q;
    let var = |fam: usize, alpha: usize, i: usize| -> MultiPoly {
        let idx = fam * k * n + (alpha - 1) * n + (i - 1);
        MultiPoly::var(field, catalog.clone(), idx as u32).expect("index in catalog")
    };
    let mut entries = Vec::with_capacity(n * n * n);
    for i in 1..=n {
        for j in 1..=n {
            for l in 1..=n {
                let mut acc = MultiPoly::zero(field, catalog.clone());
                for alpha in 1..=k {
                    let term = var(0, alpha, i)
                        .mul(&var(1, alpha, j))?
                        .mul(&var(2, alpha, l))?;
                    acc = acc.add(&term)?;
                }
                entries.push(acc);
            }
        }
    }
    let all_vars: Vec<u32> = (0..catalog.len() as u32).collect();
    let jacobian = jacobian_rank_report(&entries, &all_vars, trials, seed, DEFAULT_EVAL_BOUND)?;
    let ambient = n * n * n;
    let expected_dim = (k * (3 * n - 2)).min(ambient);
    Ok(LickteigReport {
        n,
        k,
        ambient,
        expected_dim,
        threshold_exceeded: k * (3 * n - 2) > ambient,
        fills: jacobian.rank == ambient,
        jacobian,
    })
}

/// A random rank-one matrix with nonzero factors, for test corpora.
pub fn random_rank_one<R: Rng>(
    rows: IndexSet,
    cols: IndexSet,
    field: FieldSpec,
    rng: &mut R,
) -> Matrix<Scalar> {
    let sample_nonzero = |len: usize, rng: &mut R| -> Vec<Scalar> {
        loop {
            let v: Vec<Scalar> = (0..len)
                .map(|_| field.random_scalar(rng, DEFAULT_EVAL_BOUND))
                .collect();
            if v.iter().any(|s| !s.is_zero()) {
                return v;
            }
        }
    };
    let a = sample_nonzero(rows.len(), rng);
    let b = sample_nonzero(cols.len(), rng);
    Matrix::from_fn(rows, cols, field.zero(), |r, c| a[r].mul(&b[c]))
}
