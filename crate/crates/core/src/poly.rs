//! Sparse multivariate polynomials over an exact coefficient field.
//!
//! A polynomial is a map from monomials to nonzero coefficients.  Monomials
//! are sparse exponent vectors referring to a shared [`VarCatalog`], ordered
//! by graded lexicographic comparison (total degree first, then lex on the
//! exponent sequence).  All binary operations reject operands whose field or
//! catalog differ.
//!
//! Formal partial derivatives are computed termwise, so over F_p the
//! derivative of `x^p` vanishes; callers that rely on derivative-based
//! independence tests must account for that (see `jacobian`).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{scalar_abs_string, scalar_is_negative, FieldSpec, Scalar};

/// An ordered list of distinct variable names shared by a family of
/// polynomials.  Variables are addressed by their position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarCatalog {
    names: Vec<String>,
}

impl VarCatalog {
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Arc<Self>> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if n.is_empty() {
                return Err(Error::UnknownVariable("(empty name)".into()));
            }
            if !seen.insert(n.clone()) {
                return Err(Error::DuplicateLabel(n.clone()));
            }
        }
        Ok(Arc::new(VarCatalog { names }))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, idx: u32) -> &str {
        &self.names[idx as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<u32> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as u32)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }
}

/// A sparse monomial: strictly increasing variable indices with positive
/// exponents.  The empty list is the constant monomial 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(idx: u32) -> Self {
        Monomial(vec![(idx, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(u32, u32)>) -> Self {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            match merged.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => merged.push((v, e)),
            }
        }
        Monomial(merged)
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent_of(&self, var: u32) -> u32 {
        self.0
            .iter()
            .find(|&&(v, _)| v == var)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut pairs = self.0.clone();
        pairs.extend_from_slice(&other.0);
        Monomial::from_pairs(pairs)
    }

    /// Divides out one power of `var`, or returns `None` if it is absent.
    fn shift_down(&self, var: u32) -> Option<Monomial> {
        let pos = self.0.iter().position(|&(v, _)| v == var)?;
        let mut pairs = self.0.clone();
        if pairs[pos].1 == 1 {
            pairs.remove(pos);
        } else {
            pairs[pos].1 -= 1;
        }
        Some(Monomial(pairs))
    }

    /// Lexicographic comparison of the dense exponent sequences.
    fn lex_cmp(&self, other: &Monomial) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                // The side that still has a variable has a positive exponent
                // at a position where the other side has zero.
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&&(va, ea)), Some(&&(vb, eb))) => {
                    if va < vb {
                        // `self` has a positive exponent on the earlier
                        // variable, `other` has zero there.
                        return Ordering::Greater;
                    }
                    if vb < va {
                        return Ordering::Less;
                    }
                    match ea.cmp(&eb) {
                        Ordering::Equal => {
                            a.next();
                            b.next();
                        }
                        ord => return ord,
                    }
                }
            }
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.lex_cmp(other))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A sparse multivariate polynomial.  The term map never stores a zero
/// coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    field: FieldSpec,
    catalog: Arc<VarCatalog>,
    terms: BTreeMap<Monomial, Scalar>,
}

impl MultiPoly {
    pub fn zero(field: FieldSpec, catalog: Arc<VarCatalog>) -> Self {
        MultiPoly {
            field,
            catalog,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(field: FieldSpec, catalog: Arc<VarCatalog>, c: Scalar) -> Self {
        let mut p = Self::zero(field, catalog);
        if !c.is_zero() {
            assert_eq!(c.field(), p.field, "constant from a different field");
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(field: FieldSpec, catalog: Arc<VarCatalog>, idx: u32) -> Result<Self> {
        if idx as usize >= catalog.len() {
            return Err(Error::UnknownVariable(format!("#{idx}")));
        }
        let mut p = Self::zero(field, catalog);
        p.terms.insert(Monomial::var(idx), field.one());
        Ok(p)
    }

    pub fn from_terms(
        field: FieldSpec,
        catalog: Arc<VarCatalog>,
        terms: Vec<(Monomial, Scalar)>,
    ) -> Result<Self> {
        let mut p = Self::zero(field, catalog);
        for (m, c) in terms {
            if c.is_zero() {
                continue;
            }
            if c.field() != field {
                return Err(Error::FieldMismatch {
                    expected: field.to_string(),
                    found: c.field().to_string(),
                });
            }
            if let Some(&(v, _)) = m.pairs().last() {
                if v as usize >= p.catalog.len() {
                    return Err(Error::UnknownVariable(format!("#{v}")));
                }
            }
            let entry = p.terms.entry(m).or_insert_with(|| field.zero());
            *entry = entry.add(&c);
        }
        p.terms.retain(|_, c| !c.is_zero());
        Ok(p)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn catalog(&self) -> &Arc<VarCatalog> {
        &self.catalog
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    /// Total degree, or `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::total_degree).max()
    }

    pub fn ensure_compatible(&self, other: &MultiPoly) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                expected: self.field.to_string(),
                found: other.field.to_string(),
            });
        }
        if !Arc::ptr_eq(&self.catalog, &other.catalog) && self.catalog != other.catalog {
            return Err(Error::CatalogMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.ensure_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let entry = out
                .terms
                .entry(m.clone())
                .or_insert_with(|| self.field.zero());
            *entry = entry.add(c);
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    pub fn neg(&self) -> MultiPoly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Scalar) -> Result<MultiPoly> {
        if c.field() != self.field {
            return Err(Error::FieldMismatch {
                expected: self.field.to_string(),
                found: c.field().to_string(),
            });
        }
        if c.is_zero() {
            return Ok(Self::zero(self.field, self.catalog.clone()));
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.mul(c);
        }
        out.terms.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.ensure_compatible(other)?;
        let mut acc: BTreeMap<Monomial, Scalar> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let c = ca.mul(cb);
                let entry = acc.entry(m).or_insert_with(|| self.field.zero());
                *entry = entry.add(&c);
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(MultiPoly {
            field: self.field,
            catalog: self.catalog.clone(),
            terms: acc,
        })
    }

    /// Formal partial derivative with respect to one catalog variable.
    pub fn partial_derivative(&self, var: u32) -> Result<MultiPoly> {
        if var as usize >= self.catalog.len() {
            return Err(Error::UnknownVariable(format!("#{var}")));
        }
        let mut out = Self::zero(self.field, self.catalog.clone());
        for (m, c) in &self.terms {
            let e = m.exponent_of(var);
            if e == 0 {
                continue;
            }
            let coeff = c.mul_nat(e as u64);
            if coeff.is_zero() {
                continue;
            }
            let m2 = m.shift_down(var).expect("exponent checked positive");
            let entry = out.terms.entry(m2).or_insert_with(|| self.field.zero());
            *entry = entry.add(&coeff);
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    /// The sum of the terms of maximal total degree.  Undefined (an error)
    /// for the zero polynomial.
    pub fn initial_form(&self) -> Result<MultiPoly> {
        let d = self.total_degree().ok_or(Error::ZeroPolynomial)?;
        let mut out = Self::zero(self.field, self.catalog.clone());
        for (m, c) in &self.terms {
            if m.total_degree() == d {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Evaluates at a full assignment (one scalar per catalog variable).
    pub fn evaluate(&self, point: &[Scalar]) -> Result<Scalar> {
        if point.len() != self.catalog.len() {
            return Err(Error::ShapeMismatch(format!(
                "assignment has {} values for {} variables",
                point.len(),
                self.catalog.len()
            )));
        }
        for s in point {
            if s.field() != self.field {
                return Err(Error::FieldMismatch {
                    expected: self.field.to_string(),
                    found: s.field().to_string(),
                });
            }
        }
        let mut total = self.field.zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for &(var, exp) in m.pairs() {
                let base = &point[var as usize];
                let mut pow = self.field.one();
                for _ in 0..exp {
                    pow = pow.mul(base);
                }
                v = v.mul(&pow);
            }
            total = total.add(&v);
        }
        Ok(total)
    }
}

impl fmt::Display for MultiPoly {
    /// Canonical form: terms in descending graded-lex order, e.g.
    /// `2*x1^2*y3 - 1/3*z2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = scalar_is_negative(c);
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = scalar_abs_string(c);
            let mut wrote_factor = false;
            if mag != "1" || m.pairs().is_empty() {
                write!(f, "{mag}")?;
                wrote_factor = true;
            }
            for &(var, exp) in m.pairs() {
                if wrote_factor {
                    write!(f, "*")?;
                }
                wrote_factor = true;
                write!(f, "{}", self.catalog.name(var))?;
                if exp > 1 {
                    write!(f, "^{exp}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldSpec {
        FieldSpec::Q
    }

    fn catalog3() -> Arc<VarCatalog> {
        VarCatalog::new(vec!["x1", "y3", "z2"]).unwrap()
    }

    fn var(c: &Arc<VarCatalog>, i: u32) -> MultiPoly {
        MultiPoly::var(q(), c.clone(), i).unwrap()
    }

    #[test]
    fn catalog_rejects_duplicates() {
        assert!(VarCatalog::new(vec!["a", "a"]).is_err());
    }

    #[test]
    fn graded_lex_ordering() {
        let x2y = Monomial::from_pairs(vec![(0, 2), (1, 1)]);
        let z = Monomial::var(2);
        let xyz = Monomial::from_pairs(vec![(0, 1), (1, 1), (2, 1)]);
        assert!(x2y > z, "higher degree wins");
        assert!(x2y > xyz, "same degree falls back to lex");
        assert!(Monomial::var(0) > Monomial::var(1));
    }

    #[test]
    fn canonical_display_matches_expected_shape() {
        let c = catalog3();
        let two = q().from_i64(2);
        let third = q().parse_scalar("-1/3").unwrap();
        let p = MultiPoly::from_terms(
            q(),
            c.clone(),
            vec![
                (Monomial::from_pairs(vec![(0, 2), (1, 1)]), two),
                (Monomial::var(2), third),
            ],
        )
        .unwrap();
        assert_eq!(p.to_string(), "2*x1^2*y3 - 1/3*z2");
    }

    #[test]
    fn add_mul_agree_with_hand_expansion() {
        let c = catalog3();
        let x = var(&c, 0);
        let y = var(&c, 1);
        let sum = x.add(&y).unwrap();
        let prod = sum.mul(&sum).unwrap();
        // (x+y)^2 = x^2 + 2xy + y^2
        assert_eq!(prod.num_terms(), 3);
        assert_eq!(prod.to_string(), "x1^2 + 2*x1*y3 + y3^2");
    }

    #[test]
    fn derivative_drops_char_p_powers() {
        let f2 = FieldSpec::fp(2).unwrap();
        let c = VarCatalog::new(vec!["x"]).unwrap();
        let x = MultiPoly::var(f2, c.clone(), 0).unwrap();
        let x2 = x.mul(&x).unwrap();
        assert!(x2.partial_derivative(0).unwrap().is_zero());
        assert!(!x.partial_derivative(0).unwrap().is_zero());
    }

    #[test]
    fn initial_form_needs_nonzero() {
        let c = catalog3();
        let z = MultiPoly::zero(q(), c.clone());
        assert!(matches!(z.initial_form(), Err(Error::ZeroPolynomial)));
        let x = var(&c, 0);
        let one = MultiPoly::constant(q(), c, q().one());
        let p = x.add(&one).unwrap();
        assert_eq!(p.initial_form().unwrap().to_string(), "x1");
    }

    #[test]
    fn evaluation_is_exact() {
        let c = catalog3();
        let x = var(&c, 0);
        let y = var(&c, 1);
        let p = x.mul(&y).unwrap().add(&x).unwrap();
        let v = p
            .evaluate(&[q().from_i64(3), q().from_i64(-2), q().zero()])
            .unwrap();
        assert_eq!(v, q().from_i64(-3));
    }

    #[test]
    fn cross_catalog_operations_rejected() {
        let a = var(&catalog3(), 0);
        let other = VarCatalog::new(vec!["u"]).unwrap();
        let b = MultiPoly::var(q(), other, 0).unwrap();
        assert!(matches!(a.add(&b), Err(Error::CatalogMismatch)));
    }
}
