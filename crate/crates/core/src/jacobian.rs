//! Transcendence-degree lower bounds via Jacobian rank.
//!
//! The rank of the Jacobian matrix of a polynomial family, evaluated at a
//! point, lower-bounds the rank at a generic point, which in turn
//! lower-bounds the transcendence degree of the family over the base
//! field.  The routines here therefore certify *independence* (rank equal
//! to the family size) but never dependence; over small characteristic the
//! derivative can vanish on p-th powers, which is why reports carry a
//! caveat flag whenever `p` does not exceed the total degrees involved.
//!
//! Ranks are computed exactly: symbolic formal derivatives, seeded random
//! evaluation points, then fraction-free elimination.  The returned value
//! is the maximum over the requested number of trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::label::IndexSet;
use crate::linalg::Matrix;
use crate::poly::MultiPoly;

/// Default half-open sampling range `0..BOUND` for evaluation points over Q.
pub const DEFAULT_EVAL_BOUND: u64 = 10007;

#[derive(Clone, Debug)]
pub struct JacobianReport {
    pub rank: usize,
    pub per_trial: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub bound: u64,
    /// True when the field characteristic is positive and does not exceed
    /// some total degree in the family, so derivative-based certification
    /// may silently lose directions.
    pub char_caveat: bool,
}

fn validate_family(ps: &[MultiPoly], vars: &[u32]) -> Result<()> {
    if let Some(first) = ps.first() {
        for p in ps.iter().skip(1) {
            first.ensure_compatible(p)?;
        }
        let n = first.catalog().len();
        let mut seen = std::collections::HashSet::new();
        for &v in vars {
            if v as usize >= n {
                return Err(Error::UnknownVariable(format!("#{v}")));
            }
            if !seen.insert(v) {
                return Err(Error::DuplicateLabel(format!(
                    "variable {} listed twice",
                    first.catalog().name(v)
                )));
            }
        }
    }
    Ok(())
}

/// The symbolic matrix of formal partials, `out[i][j] = d ps[i] / d vars[j]`.
pub fn jacobian_matrix(ps: &[MultiPoly], vars: &[u32]) -> Result<Vec<Vec<MultiPoly>>> {
    validate_family(ps, vars)?;
    ps.iter()
        .map(|p| vars.iter().map(|&v| p.partial_derivative(v)).collect())
        .collect()
}

/// Deterministic per-trial generator: one seed, one independent stream per
/// trial, so results do not depend on scheduling.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_add(1));
    rng
}

pub fn jacobian_rank_report(
    ps: &[MultiPoly],
    vars: &[u32],
    trials: usize,
    seed: u64,
    bound: u64,
) -> Result<JacobianReport> {
    validate_family(ps, vars)?;
    if ps.is_empty() || vars.is_empty() || trials == 0 {
        return Ok(JacobianReport {
            rank: 0,
            per_trial: vec![0; trials],
            trials,
            seed,
            bound,
            char_caveat: false,
        });
    }
    let field = ps[0].field();
    let catalog = ps[0].catalog().clone();
    let partials = jacobian_matrix(ps, vars)?;
    let max_degree = ps
        .iter()
        .filter_map(MultiPoly::total_degree)
        .max()
        .unwrap_or(0) as u64;
    let char_caveat = match field {
        FieldSpec::Fp(p) => p <= max_degree,
        FieldSpec::Q => false,
    };

    let per_trial: Vec<usize> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let point: Vec<Scalar> = (0..catalog.len())
                .map(|_| field.random_scalar(&mut rng, bound))
                .collect();
            let m = Matrix::from_fn(
                IndexSet::positional(partials.len()),
                IndexSet::positional(vars.len()),
                field.zero(),
                |i, j| {
                    partials[i][j]
                        .evaluate(&point)
                        .expect("validated assignment")
                },
            );
            m.rank()
        })
        .collect();
    let rank = per_trial.iter().copied().max().unwrap_or(0);
    Ok(JacobianReport {
        rank,
        per_trial,
        trials,
        seed,
        bound,
        char_caveat,
    })
}

/// Maximum evaluated Jacobian rank over the trials; a certified lower bound
/// for the transcendence degree of the family.
pub fn jacobian_rank(ps: &[MultiPoly], vars: &[u32], trials: usize, seed: u64) -> Result<usize> {
    Ok(jacobian_rank_report(ps, vars, trials, seed, DEFAULT_EVAL_BOUND)?.rank)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Independence {
    /// The Jacobian reached full rank: the family is algebraically
    /// independent over the base field (sufficiency direction only).
    ProvenIndependent,
    /// No certificate found; the family may or may not be dependent.
    NotProven,
}

pub fn algebraically_independent(
    ps: &[MultiPoly],
    vars: &[u32],
    trials: usize,
    seed: u64,
) -> Result<Independence> {
    if ps.is_empty() {
        return Ok(Independence::ProvenIndependent);
    }
    let rank = jacobian_rank(ps, vars, trials, seed)?;
    if rank == ps.len() {
        Ok(Independence::ProvenIndependent)
    } else {
        Ok(Independence::NotProven)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::VarCatalog;

    fn sym_pair() -> (MultiPoly, MultiPoly) {
        let c = VarCatalog::new(vec!["s1", "s2"]).unwrap();
        let s1 = MultiPoly::var(FieldSpec::Q, c.clone(), 0).unwrap();
        let s2 = MultiPoly::var(FieldSpec::Q, c, 1).unwrap();
        (s1, s2)
    }

    /// Independent oracle: the symbolic 2x2 Jacobian determinant.
    fn symbolic_det2(ps: [&MultiPoly; 2]) -> MultiPoly {
        let d = |p: &MultiPoly, v: u32| p.partial_derivative(v).unwrap();
        let a = d(ps[0], 0).mul(&d(ps[1], 1)).unwrap();
        let b = d(ps[0], 1).mul(&d(ps[1], 0)).unwrap();
        a.sub(&b).unwrap()
    }

    #[test]
    fn elementary_symmetric_pair_is_independent() {
        let (s1, s2) = sym_pair();
        let e1 = s1.add(&s2).unwrap();
        let e2 = s1.mul(&s2).unwrap();
        // Oracle first: det = s1 - s2, not identically zero.
        let det = symbolic_det2([&e1, &e2]);
        assert_eq!(det.to_string(), "s1 - s2");
        assert_eq!(
            jacobian_rank(&[e1.clone(), e2.clone()], &[0, 1], 3, 7).unwrap(),
            2
        );
        assert_eq!(
            algebraically_independent(&[e1, e2], &[0, 1], 3, 7).unwrap(),
            Independence::ProvenIndependent
        );
    }

    #[test]
    fn dependent_pair_stays_rank_one() {
        let (s1, s2) = sym_pair();
        let e1 = s1.add(&s2).unwrap();
        let sq = e1.mul(&e1).unwrap();
        let det = symbolic_det2([&e1, &sq]);
        assert!(det.is_zero(), "rows are parallel for {{f, f^2}}");
        let report = jacobian_rank_report(
            &[e1.clone(), sq.clone()],
            &[0, 1],
            5,
            11,
            DEFAULT_EVAL_BOUND,
        )
        .unwrap();
        assert_eq!(report.rank, 1);
        assert!(report.per_trial.iter().all(|&r| r <= 1));
        assert_eq!(
            algebraically_independent(&[e1, sq], &[0, 1], 5, 11).unwrap(),
            Independence::NotProven
        );
    }

    #[test]
    fn frobenius_power_is_not_certified_in_char_p() {
        let f2 = FieldSpec::fp(2).unwrap();
        let c = VarCatalog::new(vec!["x"]).unwrap();
        let x = MultiPoly::var(f2, c, 0).unwrap();
        let x2 = x.mul(&x).unwrap();
        let report = jacobian_rank_report(std::slice::from_ref(&x2), &[0], 4, 3, 17).unwrap();
        assert_eq!(report.rank, 0);
        assert!(report.char_caveat);
        assert_eq!(
            algebraically_independent(&[x2], &[0], 4, 3).unwrap(),
            Independence::NotProven
        );
    }

    #[test]
    fn empty_family_is_trivially_independent() {
        assert_eq!(jacobian_rank(&[], &[], 3, 0).unwrap(), 0);
        assert_eq!(
            algebraically_independent(&[], &[], 3, 0).unwrap(),
            Independence::ProvenIndependent
        );
    }

    #[test]
    fn more_polynomials_than_variables_is_never_certified() {
        let (s1, s2) = sym_pair();
        let fam = vec![s1.clone(), s2.clone(), s1.add(&s2).unwrap()];
        assert_eq!(
            algebraically_independent(&fam, &[0, 1], 3, 5).unwrap(),
            Independence::NotProven
        );
    }
}
