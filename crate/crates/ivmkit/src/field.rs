//! Ground fields and the small field abstraction used by the linear algebra kernels.

use std::fmt::{self, Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient field underlying every Novikov scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[derive(Default)]
pub enum GroundField {
    #[default]
    F2,
    Fp(u64),
    Q,
}


impl Display for GroundField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundField::F2 => write!(f, "F2"),
            GroundField::Fp(p) => write!(f, "F{p}"),
            GroundField::Q => write!(f, "Q"),
        }
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl GroundField {
    /// Validated constructor; `Fp(2)` is normalized to `F2`.
    pub fn new_fp(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Schema(format!("{p} is not prime")));
        }
        Ok(if p == 2 { GroundField::F2 } else { GroundField::Fp(p) })
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "F2" | "f2" => Ok(GroundField::F2),
            "Q" | "q" => Ok(GroundField::Q),
            _ => {
                let digits = s.trim_start_matches(['F', 'f']);
                let p: u64 = digits
                    .parse()
                    .map_err(|_| Error::Schema(format!("unknown ground field {s:?}")))?;
                GroundField::new_fp(p)
            }
        }
    }

    /// 0 for Q.
    pub fn characteristic(&self) -> u64 {
        match self {
            GroundField::F2 => 2,
            GroundField::Fp(p) => *p,
            GroundField::Q => 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.characteristic() != 0
    }

    /// Canonical representative of `x`: an integer in `[0, p)` for finite fields.
    pub fn reduce(&self, x: BigRational) -> BigRational {
        let p = self.characteristic();
        if p == 0 {
            return x;
        }
        let m = BigInt::from(p);
        let num = x.numer().mod_floor(&m);
        let den = x.denom().mod_floor(&m);
        let inv = modinv(den.to_u64().expect("reduced"), p).expect("denominator divisible by p");
        BigRational::from_integer((num * BigInt::from(inv)).mod_floor(&m))
    }

    pub fn from_i64(&self, v: i64) -> BigRational {
        self.reduce(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn elem_add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        self.reduce(a + b)
    }

    pub fn elem_mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        self.reduce(a * b)
    }

    pub fn elem_neg(&self, a: &BigRational) -> BigRational {
        self.reduce(-a)
    }

    pub fn elem_inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            return None;
        }
        let p = self.characteristic();
        if p == 0 {
            return Some(a.recip());
        }
        let v = a.numer().mod_floor(&BigInt::from(p)).to_u64()?;
        modinv(v, p).map(|i| BigRational::from_integer(BigInt::from(i)))
    }

    /// Image of a ground element in `Fp` as a machine word (finite fields only).
    pub fn to_word(&self, a: &BigRational) -> u64 {
        let p = self.characteristic();
        assert!(p != 0, "to_word on Q");
        self.reduce(a.clone()).numer().to_u64().expect("canonical residue")
    }
}

pub(crate) fn modinv(a: u64, p: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(p as i128) as u64)
}

/// A field given by a context value, so elements need not carry their field.
pub trait Field: Sync + Send {
    type E: Clone + PartialEq + Debug + Send + Sync;

    fn zero(&self) -> Self::E;
    fn one(&self) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn neg(&self, a: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    /// `None` for zero.
    fn inv(&self, a: &Self::E) -> Option<Self::E>;
    fn from_i64(&self, v: i64) -> Self::E;

    fn sub(&self, a: &Self::E, b: &Self::E) -> Self::E {
        self.add(a, &self.neg(b))
    }

    fn eq(&self, a: &Self::E, b: &Self::E) -> bool {
        self.is_zero(&self.sub(a, b))
    }

    /// Pivot preference: lower is better.
    fn pivot_cost(&self, _a: &Self::E) -> usize {
        0
    }
}

/// Prime field with word-sized elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fp(pub u64);

impl Field for Fp {
    type E = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.0
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.0
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.0 - a) % self.0
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.0 as u128) as u64
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        if *a == 0 {
            None
        } else {
            modinv(*a, self.0)
        }
    }
    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.0 as i64) as u64
    }
}

impl Field for GroundField {
    type E = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        self.elem_add(a, b)
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        self.elem_neg(a)
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        self.elem_mul(a, b)
    }
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        self.elem_inv(a)
    }
    fn from_i64(&self, v: i64) -> BigRational {
        GroundField::from_i64(self, v)
    }
    fn pivot_cost(&self, a: &BigRational) -> usize {
        (a.numer().abs().bits() + a.denom().bits()) as usize
    }
}

/// Parses `"a"` or `"a/b"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Schema(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp_inverse_round_trip() {
        let f = Fp(7);
        for a in 1..7 {
            assert_eq!(f.mul(&a, &f.inv(&a).unwrap()), 1);
        }
        assert_eq!(f.inv(&0), None);
    }

    #[test]
    fn reduce_handles_fractions() {
        let g = GroundField::Fp(5);
        // 1/2 = 3 mod 5
        assert_eq!(g.reduce(rat(1, 2)), int(3));
        assert_eq!(g.reduce(int(-1)), int(4));
        assert_eq!(GroundField::F2.from_i64(-3), int(1));
    }

    #[test]
    fn parse_fields() {
        assert_eq!(GroundField::parse("F2").unwrap(), GroundField::F2);
        assert_eq!(GroundField::parse("F3").unwrap(), GroundField::Fp(3));
        assert_eq!(GroundField::parse("Q").unwrap(), GroundField::Q);
        assert!(GroundField::parse("F4").is_err());
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert!(parse_rational("1/0").is_err());
    }
}
