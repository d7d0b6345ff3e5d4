//! Labels for tensor axis elements, with structural history.
//!
//! An axis element is either an atom, a `(block-tag, inner)` pair produced
//! by a tagged disjoint union, or a `(copy-id, inner)` pair produced by a
//! product with a finite copy set (one copy per element).  Keeping the
//! history structural means a block of a direct sum, or a particular
//! copy inside a cloned tensor, stays addressable after later operations.
//!
//! Canonical text form (used by the file formats): an atom prints as
//! itself, a tagged label as `tag:inner`, a copy label as `copy*inner`.
//! Segments are restricted to `[A-Za-z0-9_.]` so the form parses back
//! unambiguously by splitting at the leftmost separator.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Atom(String),
    Tagged(String, Box<Label>),
    Copy(String, Box<Label>),
}

fn valid_segment(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

impl Label {
    pub fn atom<S: Into<String>>(name: S) -> Result<Label> {
        let name = name.into();
        if valid_segment(&name) {
            Ok(Label::Atom(name))
        } else {
            Err(Error::ParseLabel {
                text: name,
                reason: "atoms may only contain [A-Za-z0-9_.]".into(),
            })
        }
    }

    pub fn tagged<S: Into<String>>(tag: S, inner: Label) -> Result<Label> {
        let tag = tag.into();
        if valid_segment(&tag) {
            Ok(Label::Tagged(tag, Box::new(inner)))
        } else {
            Err(Error::ParseLabel {
                text: tag,
                reason: "tags may only contain [A-Za-z0-9_.]".into(),
            })
        }
    }

    pub fn copy<S: Into<String>>(copy_id: S, inner: Label) -> Result<Label> {
        let copy_id = copy_id.into();
        if valid_segment(&copy_id) {
            Ok(Label::Copy(copy_id, Box::new(inner)))
        } else {
            Err(Error::ParseLabel {
                text: copy_id,
                reason: "copy ids may only contain [A-Za-z0-9_.]".into(),
            })
        }
    }

    /// The outermost block tag, if this label came from a tagged union.
    pub fn block_tag(&self) -> Option<&str> {
        match self {
            Label::Tagged(t, _) => Some(t),
            _ => None,
        }
    }

    pub fn parse(text: &str) -> Result<Label> {
        let bad = |reason: &str| Error::ParseLabel {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let sep = text.find([':', '*']);
        match sep {
            None => {
                if valid_segment(text) {
                    Ok(Label::Atom(text.to_string()))
                } else {
                    Err(bad("invalid atom"))
                }
            }
            Some(i) => {
                let head = &text[..i];
                if !valid_segment(head) {
                    return Err(bad("invalid segment before separator"));
                }
                let rest = Label::parse(&text[i + 1..])?;
                match text.as_bytes()[i] {
                    b':' => Ok(Label::Tagged(head.to_string(), Box::new(rest))),
                    b'*' => Ok(Label::Copy(head.to_string(), Box::new(rest))),
                    _ => unreachable!(),
                }
            }
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Atom(a) => write!(f, "{a}"),
            Label::Tagged(t, inner) => write!(f, "{t}:{inner}"),
            Label::Copy(s, inner) => write!(f, "{s}*{inner}"),
        }
    }
}

/// An ordered set of distinct labels indexing one tensor axis.  The order
/// fixes the dense storage layout; lookups go through a hash map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    labels: Vec<Label>,
    positions: HashMap<Label, usize>,
}

impl IndexSet {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        let mut positions = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if positions.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
        }
        Ok(IndexSet { labels, positions })
    }

    pub fn from_atoms<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let labels = names
            .iter()
            .map(|n| Label::atom(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        IndexSet::new(labels)
    }

    /// Labels `0`, `1`, ..., `n-1`.
    pub fn positional(n: usize) -> Self {
        let labels = (0..n).map(|i| Label::Atom(i.to_string())).collect();
        IndexSet::new(labels).expect("positional labels are distinct")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &Label {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = &Label> {
        self.labels.iter()
    }

    pub fn position(&self, l: &Label) -> Option<usize> {
        self.positions.get(l).copied()
    }

    pub fn contains(&self, l: &Label) -> bool {
        self.positions.contains_key(l)
    }

    /// True when every label of `self` also appears in `other`.
    pub fn subset_of(&self, other: &IndexSet) -> bool {
        self.labels.iter().all(|l| other.contains(l))
    }

    /// Wraps every label in a block tag (for tagged disjoint unions).
    pub fn tagged(&self, tag: &str) -> Result<IndexSet> {
        let labels = self
            .labels
            .iter()
            .map(|l| Label::tagged(tag, l.clone()))
            .collect::<Result<Vec<_>>>()?;
        IndexSet::new(labels)
    }

    /// The product set: for each copy id, one copy of every label,
    /// copy-major (`copies × self`).
    pub fn product<S: AsRef<str>>(&self, copies: &[S]) -> Result<IndexSet> {
        let mut labels = Vec::with_capacity(copies.len() * self.labels.len());
        for c in copies {
            for l in &self.labels {
                labels.push(Label::copy(c.as_ref(), l.clone())?);
            }
        }
        IndexSet::new(labels)
    }

    /// Concatenation; the label sets must be disjoint.
    pub fn union(&self, other: &IndexSet) -> Result<IndexSet> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        IndexSet::new(labels)
    }

    /// Extends with fresh labels, erroring on a collision.
    pub fn extend(&self, extra: &[Label]) -> Result<IndexSet> {
        let mut labels = self.labels.clone();
        labels.extend(extra.iter().cloned());
        IndexSet::new(labels)
    }

    /// The subset at the given positions, preserving order.
    pub fn select(&self, positions: &[usize]) -> Result<IndexSet> {
        let labels = positions.iter().map(|&i| self.labels[i].clone()).collect();
        IndexSet::new(labels)
    }

    /// Applies a label transformation to every element.
    pub fn map<F: Fn(&Label) -> Result<Label>>(&self, f: F) -> Result<IndexSet> {
        let labels = self.labels.iter().map(f).collect::<Result<Vec<_>>>()?;
        IndexSet::new(labels)
    }

    pub fn render(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_round_trip() {
        for text in ["a1", "1:i2", "0.1*m0", "2:0.1*adj3_0", "0*1:x"] {
            let l = Label::parse(text).unwrap();
            assert_eq!(l.to_string(), text);
        }
    }

    #[test]
    fn label_rejects_bad_segments() {
        assert!(Label::parse("").is_err());
        assert!(Label::parse("a b").is_err());
        assert!(Label::parse("x:").is_err());
        assert!(Label::atom("x*y").is_err());
    }

    #[test]
    fn parse_nests_leftmost_first() {
        let l = Label::parse("1:0*a").unwrap();
        match l {
            Label::Tagged(t, inner) => {
                assert_eq!(t, "1");
                assert!(matches!(*inner, Label::Copy(_, _)));
            }
            _ => panic!("expected outer tag"),
        }
    }

    #[test]
    fn index_set_rejects_duplicates() {
        assert!(IndexSet::from_atoms(&["a", "a"]).is_err());
        assert!(IndexSet::from_atoms(&["a", "b"]).is_ok());
    }

    #[test]
    fn product_is_copy_major() {
        let base = IndexSet::from_atoms(&["i", "j"]).unwrap();
        let prod = base.product(&["0", "1"]).unwrap();
        assert_eq!(prod.render(), vec!["0*i", "0*j", "1*i", "1*j"]);
        assert_eq!(prod.position(&Label::parse("1*i").unwrap()), Some(2));
    }

    #[test]
    fn union_requires_disjointness() {
        let a = IndexSet::from_atoms(&["x"]).unwrap();
        let b = IndexSet::from_atoms(&["x"]).unwrap();
        assert!(a.union(&b).is_err());
        let a1 = a.tagged("1").unwrap();
        let b2 = b.tagged("2").unwrap();
        let u = a1.union(&b2).unwrap();
        assert_eq!(u.render(), vec!["1:x", "2:x"]);
    }
}
