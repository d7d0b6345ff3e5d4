//! Exact scalar arithmetic over prime fields F_p and the rational numbers.
//!
//! Every [`Scalar`] carries its own field description, so values from
//! different fields can never be combined silently: the arithmetic methods
//! panic on a mismatch, and all public entry points of the crate validate
//! field compatibility before any arithmetic starts.  Rationals are kept in
//! lowest terms with a positive denominator; F_p residues are canonical
//! representatives in `0..p`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Description of the coefficient field a computation runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    /// The prime field with `p` elements.
    Fp(u64),
    /// The field of rational numbers.
    Q,
}

impl FieldSpec {
    /// Builds the prime-field spec, rejecting composite or trivial moduli.
    pub fn fp(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(FieldSpec::Fp(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            FieldSpec::Fp(p) => *p,
            FieldSpec::Q => 0,
        }
    }

    pub fn zero(&self) -> Scalar {
        match self {
            FieldSpec::Fp(p) => Scalar::Fp { p: *p, val: 0 },
            FieldSpec::Q => Scalar::Rat(BigRational::zero()),
        }
    }

    pub fn one(&self) -> Scalar {
        match self {
            FieldSpec::Fp(p) => Scalar::Fp { p: *p, val: 1 },
            FieldSpec::Q => Scalar::Rat(BigRational::one()),
        }
    }

    /// Embeds a signed integer into the field.
    pub fn from_i64(&self, n: i64) -> Scalar {
        match self {
            FieldSpec::Fp(p) => {
                let r = n.rem_euclid(*p as i64) as u64;
                Scalar::Fp { p: *p, val: r }
            }
            FieldSpec::Q => Scalar::Rat(BigRational::from_integer(BigInt::from(n))),
        }
    }

    /// Parses the canonical string form: a residue over F_p, an integer or
    /// a reduced fraction `a/b` over Q.
    pub fn parse_scalar(&self, text: &str) -> Result<Scalar> {
        let bad = |reason: &str| Error::ParseScalar {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let text = text.trim();
        if text.is_empty() {
            return Err(bad("empty string"));
        }
        match self {
            FieldSpec::Fp(p) => {
                let n: i128 = text.parse().map_err(|_| bad("not an integer"))?;
                let r = n.rem_euclid(*p as i128) as u64;
                Ok(Scalar::Fp { p: *p, val: r })
            }
            FieldSpec::Q => {
                let (num, den) = match text.split_once('/') {
                    Some((a, b)) => (a, b),
                    None => (text, "1"),
                };
                let num: BigInt = num.parse().map_err(|_| bad("bad numerator"))?;
                let den: BigInt = den.parse().map_err(|_| bad("bad denominator"))?;
                if den.is_zero() {
                    return Err(bad("zero denominator"));
                }
                Ok(Scalar::Rat(BigRational::new(num, den)))
            }
        }
    }

    /// Draws a field element: uniform over F_p, or a uniform integer in
    /// `0..bound` over Q.
    pub fn random_scalar<R: Rng>(&self, rng: &mut R, bound: u64) -> Scalar {
        match self {
            FieldSpec::Fp(p) => Scalar::Fp {
                p: *p,
                val: rng.gen_range(0..*p),
            },
            FieldSpec::Q => {
                let b = bound.max(1);
                self.from_i64(rng.gen_range(0..b) as i64)
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Fp(p) => write!(f, "F_{p}"),
            FieldSpec::Q => write!(f, "Q"),
        }
    }
}

/// An exact field element.  See the module docs for the mismatch policy.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Fp { p: u64, val: u64 },
    Rat(BigRational),
}

impl Scalar {
    pub fn field(&self) -> FieldSpec {
        match self {
            Scalar::Fp { p, .. } => FieldSpec::Fp(*p),
            Scalar::Rat(_) => FieldSpec::Q,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Fp { val, .. } => *val == 0,
            Scalar::Rat(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Fp { val, .. } => *val == 1,
            Scalar::Rat(r) => r.is_one(),
        }
    }

    fn expect_same_field(&self, other: &Scalar) {
        assert_eq!(
            self.field(),
            other.field(),
            "scalar arithmetic across distinct fields"
        );
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.expect_same_field(other);
        match (self, other) {
            (Scalar::Fp { p, val: a }, Scalar::Fp { val: b, .. }) => Scalar::Fp {
                p: *p,
                val: addmod(*a, *b, *p),
            },
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            _ => unreachable!(),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Fp { p, val } => Scalar::Fp {
                p: *p,
                val: if *val == 0 { 0 } else { p - val },
            },
            Scalar::Rat(r) => Scalar::Rat(-r),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.expect_same_field(other);
        match (self, other) {
            (Scalar::Fp { p, val: a }, Scalar::Fp { val: b, .. }) => Scalar::Fp {
                p: *p,
                val: mulmod(*a, *b, *p),
            },
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a * b),
            _ => unreachable!(),
        }
    }

    pub fn inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(match self {
            Scalar::Fp { p, val } => Scalar::Fp {
                p: *p,
                val: invmod(*val, *p),
            },
            Scalar::Rat(r) => Scalar::Rat(r.recip()),
        })
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        Ok(self.mul(&other.inv()?))
    }

    /// Scales by a small integer; used when formal derivatives multiply
    /// coefficients by exponents (over F_p this is where powers of p vanish).
    pub fn mul_nat(&self, n: u64) -> Scalar {
        match self {
            Scalar::Fp { p, val } => Scalar::Fp {
                p: *p,
                val: mulmod(*val, n % *p, *p),
            },
            Scalar::Rat(r) => Scalar::Rat(r * BigRational::from_integer(BigInt::from(n))),
        }
    }

    /// Canonical text form used in all file formats.
    pub fn to_canonical_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Fp { val, .. } => write!(f, "{val}"),
            Scalar::Rat(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

/// Over Q this prints a magnitude without the sign; F_p residues have no
/// sign, so the canonical form is returned unchanged.
pub(crate) fn scalar_abs_string(s: &Scalar) -> String {
    match s {
        Scalar::Fp { .. } => s.to_string(),
        Scalar::Rat(r) => {
            let a = r.abs();
            if a.denom().is_one() {
                format!("{}", a.numer())
            } else {
                format!("{}/{}", a.numer(), a.denom())
            }
        }
    }
}

pub(crate) fn scalar_is_negative(s: &Scalar) -> bool {
    match s {
        Scalar::Fp { .. } => false,
        Scalar::Rat(r) => r.is_negative(),
    }
}

fn addmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn invmod(a: u64, p: u64) -> u64 {
    // Extended Euclid on (a, p); p is prime and a is nonzero mod p.
    let (mut r0, mut r1) = (a as i128, p as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "inverse of a noninvertible residue");
    s0.rem_euclid(p as i128) as u64
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composite_modulus() {
        assert!(FieldSpec::fp(1).is_err());
        assert!(FieldSpec::fp(9).is_err());
        assert!(FieldSpec::fp(2).is_ok());
        assert!(FieldSpec::fp(10007).is_ok());
    }

    #[test]
    fn fp_arithmetic_is_modular() {
        let f = FieldSpec::fp(5).unwrap();
        let a = f.from_i64(3);
        let b = f.from_i64(4);
        assert_eq!(a.add(&b), f.from_i64(2));
        assert_eq!(a.mul(&b), f.from_i64(2));
        assert_eq!(a.sub(&b), f.from_i64(4));
        assert_eq!(b.inv().unwrap(), f.from_i64(4));
        assert!(f.zero().inv().is_err());
    }

    #[test]
    fn rationals_stay_reduced() {
        let f = FieldSpec::Q;
        let half = f.parse_scalar("2/4").unwrap();
        assert_eq!(half.to_string(), "1/2");
        let neg = f.parse_scalar("3/-6").unwrap();
        assert_eq!(neg.to_string(), "-1/2");
        assert_eq!(half.add(&neg), f.zero());
    }

    #[test]
    fn parse_rejects_garbage() {
        let f = FieldSpec::fp(7).unwrap();
        assert!(f.parse_scalar("x").is_err());
        assert!(FieldSpec::Q.parse_scalar("1/0").is_err());
        assert_eq!(f.parse_scalar("-1").unwrap(), f.from_i64(6));
    }

    #[test]
    #[should_panic(expected = "distinct fields")]
    fn cross_field_arithmetic_panics() {
        let a = FieldSpec::fp(5).unwrap().one();
        let b = FieldSpec::Q.one();
        let _ = a.add(&b);
    }
}
