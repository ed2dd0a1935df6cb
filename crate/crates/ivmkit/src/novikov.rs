//! Novikov ring and field arithmetic.
//!
//! Three representations live here:
//! * [`Poly`]: a finite sum `Σ c T^e` with rational exponents (possibly negative);
//! * [`Lam`]: an exact quotient of two `Poly`s, an element of the Novikov field
//!   used by every rank computation;
//! * [`NovikovScalar`]: a truncated series with an explicit precision, used where
//!   completion makes truncation intrinsic.

use std::cmp::Ordering;
use std::fmt::{self, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{parse_rational, Field, GroundField};

/// Finite Puiseux–Laurent polynomial in `T` over a ground field.
///
/// Terms are `(exponent, coefficient)`, sorted by exponent, merged, nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    pub gf: GroundField,
    terms: Vec<(BigRational, BigRational)>,
}

impl Poly {
    pub fn zero(gf: GroundField) -> Self {
        Poly { gf, terms: Vec::new() }
    }

    pub fn one(gf: GroundField) -> Self {
        Poly::constant(gf, BigRational::one())
    }

    pub fn constant(gf: GroundField, c: BigRational) -> Self {
        Poly::monomial(gf, c, BigRational::zero())
    }

    pub fn monomial(gf: GroundField, c: BigRational, e: BigRational) -> Self {
        let c = gf.reduce(c);
        if c.is_zero() {
            Poly::zero(gf)
        } else {
            Poly { gf, terms: vec![(e, c)] }
        }
    }

    /// `T^e`
    pub fn t_pow(gf: GroundField, e: BigRational) -> Self {
        Poly::monomial(gf, BigRational::one(), e)
    }

    /// Builds from arbitrary `(exponent, coefficient)` pairs.
    pub fn from_terms(gf: GroundField, mut terms: Vec<(BigRational, BigRational)>) -> Self {
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(BigRational, BigRational)> = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            match out.last_mut() {
                Some((le, lc)) if *le == e => *lc = gf.elem_add(lc, &c),
                _ => out.push((e, gf.reduce(c))),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Poly { gf, terms: out }
    }

    pub fn terms(&self) -> &[(BigRational, BigRational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Smallest exponent; `None` for zero.
    pub fn valuation(&self) -> Option<&BigRational> {
        self.terms.first().map(|t| &t.0)
    }

    pub fn lowest(&self) -> Option<&(BigRational, BigRational)> {
        self.terms.first()
    }

    pub fn top(&self) -> Option<&(BigRational, BigRational)> {
        self.terms.last()
    }

    /// The constant coefficient, if `self` is a constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [(e, c)] if e.is_zero() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let gf = self.gf;
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < o.terms.len() {
            let ord = match (self.terms.get(i), o.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(o.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = gf.elem_add(&self.terms[i].1, &o.terms[j].1);
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Poly { gf, terms: out }
    }

    pub fn neg(&self) -> Poly {
        let gf = self.gf;
        Poly { gf, terms: self.terms.iter().map(|(e, c)| (e.clone(), gf.elem_neg(c))).collect() }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero(self.gf);
        }
        if o.is_monomial() {
            let (e, c) = &o.terms[0];
            return self.scale(c).shift(e);
        }
        if self.is_monomial() {
            return o.mul(self);
        }
        let gf = self.gf;
        let mut raw = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                raw.push((e1 + e2, c1 * c2));
            }
        }
        Poly::from_terms(gf, raw)
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        let gf = self.gf;
        let c = gf.reduce(c.clone());
        if c.is_zero() {
            return Poly::zero(gf);
        }
        Poly { gf, terms: self.terms.iter().map(|(e, x)| (e.clone(), gf.elem_mul(x, &c))).collect() }
    }

    /// Multiplication by `T^e`.
    pub fn shift(&self, e: &BigRational) -> Poly {
        Poly { gf: self.gf, terms: self.terms.iter().map(|(x, c)| (x + e, c.clone())).collect() }
    }

    /// Drops every term with exponent `>= r`.
    pub fn truncate(&self, r: &BigRational) -> Poly {
        Poly { gf: self.gf, terms: self.terms.iter().filter(|(e, _)| e < r).cloned().collect() }
    }

    /// Divides out the lowest monomial, so the result has lowest term `1·T^0`.
    fn normalized_lowest(&self) -> Poly {
        match self.lowest() {
            None => self.clone(),
            Some((e, c)) => {
                let inv = self.gf.elem_inv(c).expect("nonzero");
                self.scale(&inv).shift(&-e.clone())
            }
        }
    }

    /// Exact quotient `self / d` in the Laurent–Puiseux ring, if it exists.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (top_d, lc_d) = d.top()?;
        let low_d = d.valuation()?.clone();
        let lc_inv = self.gf.elem_inv(lc_d)?;
        let mut rem = self.clone();
        let floor = match self.valuation() {
            None => return Some(Poly::zero(self.gf)),
            Some(v) => v - &low_d,
        };
        let mut q = Vec::new();
        while let Some((te, tc)) = rem.top().cloned() {
            let e = &te - top_d;
            if e < floor {
                return None;
            }
            let c = self.gf.elem_mul(&tc, &lc_inv);
            rem = rem.sub(&d.scale(&c).shift(&e));
            q.push((e, c));
        }
        Some(Poly::from_terms(self.gf, q))
    }

    /// Remainder of polynomial division in `F[T^(1/N)]`; both inputs have lowest exponent 0.
    fn rem_normalized(&self, d: &Poly) -> Poly {
        let (top_d, lc_d) = d.top().cloned().expect("nonzero divisor");
        let lc_inv = self.gf.elem_inv(&lc_d).expect("nonzero");
        let mut r = self.clone();
        while let Some((te, tc)) = r.top().cloned() {
            if te < top_d {
                break;
            }
            let c = self.gf.elem_mul(&tc, &lc_inv);
            r = r.sub(&d.scale(&c).shift(&(te - &top_d)));
        }
        r
    }

    /// Greatest common divisor up to monomial units, normalized with lowest term `1`.
    pub fn gcd(&self, o: &Poly) -> Poly {
        if self.is_zero() {
            return o.normalized_lowest();
        }
        if o.is_zero() {
            return self.normalized_lowest();
        }
        let mut a = self.normalized_lowest();
        let mut b = o.normalized_lowest();
        while !b.is_zero() {
            let r = a.rem_normalized(&b).normalized_lowest();
            a = b;
            b = r;
        }
        a.normalized_lowest()
    }

    /// Parses `"1 + 2*T^1/2 - T^(-3)"`-style expressions.
    pub fn parse(gf: GroundField, s: &str) -> Result<Poly> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Schema("empty scalar".into()));
        }
        let mut pieces = Vec::new();
        let mut cur = String::new();
        let mut depth = 0;
        for (i, ch) in s.chars().enumerate() {
            let prev = if i > 0 { s.as_bytes()[i - 1] as char } else { ' ' };
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            if (ch == '+' || ch == '-') && depth == 0 && prev != '^' && !cur.is_empty() {
                pieces.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        pieces.push(cur);
        let mut terms = Vec::new();
        for p in pieces {
            let (neg, body) = match p.strip_prefix('-') {
                Some(b) => (true, b),
                None => (false, p.strip_prefix('+').unwrap_or(&p)),
            };
            let (coef, exp) = match body.find('T') {
                None => (parse_rational(body)?, BigRational::zero()),
                Some(ti) => {
                    let c = body[..ti].trim_end_matches('*');
                    let coef = if c.is_empty() { BigRational::one() } else { parse_rational(c)? };
                    let rest = &body[ti + 1..];
                    let exp = match rest.strip_prefix('^') {
                        None if rest.is_empty() => BigRational::one(),
                        None => return Err(Error::Schema(format!("bad term {body:?}"))),
                        Some(e) => parse_rational(e.trim_start_matches('(').trim_end_matches(')'))?,
                    };
                    (coef, exp)
                }
            };
            terms.push((exp, if neg { -coef } else { coef }));
        }
        Ok(Poly::from_terms(gf, terms))
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i > 0 {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            } else if neg {
                write!(f, "-")?;
            }
            let exp = if e.is_zero() {
                String::new()
            } else if e.is_one() {
                "T".to_string()
            } else if e.is_integer() && !e.is_negative() {
                format!("T^{}", fmt_rat(e))
            } else {
                format!("T^({})", fmt_rat(e))
            };
            match (a.is_one(), exp.is_empty()) {
                (true, true) => write!(f, "1")?,
                (true, false) => write!(f, "{exp}")?,
                (false, true) => write!(f, "{}", fmt_rat(&a))?,
                (false, false) => write!(f, "{}*{exp}", fmt_rat(&a))?,
            }
        }
        Ok(())
    }
}

/// Exact element of the Novikov field: a reduced fraction of finite polynomials.
///
/// The denominator is normalized to have lowest term `1·T^0`, which makes the
/// representation canonical and derived equality meaningful.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lam {
    num: Poly,
    den: Poly,
}

impl Lam {
    pub fn zero(gf: GroundField) -> Lam {
        Lam { num: Poly::zero(gf), den: Poly::one(gf) }
    }

    pub fn one(gf: GroundField) -> Lam {
        Lam::from_poly(Poly::one(gf))
    }

    pub fn from_poly(p: Poly) -> Lam {
        let gf = p.gf;
        Lam { num: p, den: Poly::one(gf) }
    }

    pub fn from_i64(gf: GroundField, v: i64) -> Lam {
        Lam::from_poly(Poly::constant(gf, gf.from_i64(v)))
    }

    pub fn monomial(gf: GroundField, c: BigRational, e: BigRational) -> Lam {
        Lam::from_poly(Poly::monomial(gf, c, e))
    }

    pub fn t_pow(gf: GroundField, e: BigRational) -> Lam {
        Lam::from_poly(Poly::t_pow(gf, e))
    }

    pub fn gf(&self) -> GroundField {
        self.num.gf
    }

    pub fn new(num: Poly, den: Poly) -> Result<Lam> {
        if den.is_zero() {
            return Err(Error::Invariant("zero denominator".into()));
        }
        Ok(Lam::normalize(num, den))
    }

    fn normalize(num: Poly, den: Poly) -> Lam {
        let gf = num.gf;
        if num.is_zero() {
            return Lam::zero(gf);
        }
        let (num, den) = if den.is_monomial() {
            (num, den)
        } else {
            let g = num.gcd(&den);
            if g.is_monomial() {
                (num, den)
            } else {
                (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
            }
        };
        let (e, c) = den.lowest().cloned().expect("nonzero");
        let inv = gf.elem_inv(&c).expect("nonzero");
        let ne = -e;
        Lam { num: num.scale(&inv).shift(&ne), den: den.scale(&inv).shift(&ne) }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Whether this is a finite polynomial (denominator 1).
    pub fn as_poly(&self) -> Option<&Poly> {
        if self.den.len() == 1 {
            Some(&self.num)
        } else {
            None
        }
    }

    /// The ground constant, if this is one.
    pub fn as_constant(&self) -> Option<BigRational> {
        self.as_poly().and_then(|p| p.as_constant())
    }

    /// `ν(num) − ν(den)`; `None` for zero.
    pub fn valuation(&self) -> Option<BigRational> {
        Some(self.num.valuation()? - self.den.valuation().expect("nonzero"))
    }

    pub fn add(&self, o: &Lam) -> Lam {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        if self.den == o.den {
            return Lam::normalize(self.num.add(&o.num), self.den.clone());
        }
        Lam::normalize(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
    }

    pub fn neg(&self) -> Lam {
        Lam { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, o: &Lam) -> Lam {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Lam) -> Lam {
        if self.is_zero() || o.is_zero() {
            return Lam::zero(self.gf());
        }
        if self.den.len() == 1 && o.den.len() == 1 {
            return Lam::from_poly(self.num.mul(&o.num));
        }
        Lam::normalize(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    pub fn inv(&self) -> Option<Lam> {
        if self.is_zero() {
            None
        } else {
            Some(Lam::normalize(self.den.clone(), self.num.clone()))
        }
    }

    pub fn parse(gf: GroundField, s: &str) -> Result<Lam> {
        match s.split_once("//") {
            Some((n, d)) => {
                let strip = |x: &str| x.trim().trim_start_matches('(').trim_end_matches(')').to_string();
                Lam::new(Poly::parse(gf, &strip(n))?, Poly::parse(gf, &strip(d))?)
            }
            None => Ok(Lam::from_poly(Poly::parse(gf, s)?)),
        }
    }
}

impl Display for Lam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.len() == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) // ({})", self.num, self.den)
        }
    }
}

/// The Novikov field over a ground field, as a [`Field`] context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Nov(pub GroundField);

impl Field for Nov {
    type E = Lam;

    fn zero(&self) -> Lam {
        Lam::zero(self.0)
    }
    fn one(&self) -> Lam {
        Lam::one(self.0)
    }
    fn is_zero(&self, a: &Lam) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &Lam, b: &Lam) -> Lam {
        a.add(b)
    }
    fn neg(&self, a: &Lam) -> Lam {
        a.neg()
    }
    fn mul(&self, a: &Lam, b: &Lam) -> Lam {
        a.mul(b)
    }
    fn inv(&self, a: &Lam) -> Option<Lam> {
        a.inv()
    }
    fn from_i64(&self, v: i64) -> Lam {
        Lam::from_i64(self.0, v)
    }
    fn eq(&self, a: &Lam, b: &Lam) -> bool {
        a == b
    }
    fn pivot_cost(&self, a: &Lam) -> usize {
        a.num.len() + a.den.len()
    }
}

/// A truncated Novikov series `Σ c T^e + O(T^precision)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NovikovScalar {
    pub gf: GroundField,
    poly: Poly,
    /// `None` means exact (infinite precision).
    precision: Option<BigRational>,
}

fn min_prec(a: &Option<BigRational>, b: &Option<BigRational>) -> Option<BigRational> {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(x), Some(y)) => Some(x.min(y).clone()),
    }
}

impl NovikovScalar {
    pub fn new(poly: Poly, precision: Option<BigRational>) -> Self {
        let poly = match &precision {
            Some(p) => poly.truncate(p),
            None => poly,
        };
        NovikovScalar { gf: poly.gf, poly, precision }
    }

    pub fn exact(poly: Poly) -> Self {
        NovikovScalar::new(poly, None)
    }

    pub fn zero(gf: GroundField) -> Self {
        NovikovScalar::exact(Poly::zero(gf))
    }

    pub fn one(gf: GroundField) -> Self {
        NovikovScalar::exact(Poly::one(gf))
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn precision(&self) -> Option<&BigRational> {
        self.precision.as_ref()
    }

    pub fn with_precision(&self, p: Option<BigRational>) -> Self {
        NovikovScalar::new(self.poly.clone(), min_prec(&self.precision, &p))
    }

    /// Membership in the Novikov ring (all exponents nonnegative).
    pub fn is_nonnegative(&self) -> bool {
        self.poly.valuation().is_none_or(|v| !v.is_negative())
    }

    /// Leading exponent; `Ok(None)` is `+∞` (exact zero).
    pub fn valuation(&self) -> Result<Option<BigRational>> {
        match (self.poly.valuation(), &self.precision) {
            (Some(v), _) => Ok(Some(v.clone())),
            (None, None) => Ok(None),
            (None, Some(p)) => Err(Error::Indeterminate(format!(
                "no term resolved below precision {}",
                fmt_rat(p)
            ))),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        NovikovScalar::new(self.poly.add(&o.poly), min_prec(&self.precision, &o.precision))
    }

    pub fn neg(&self) -> Self {
        NovikovScalar::new(self.poly.neg(), self.precision.clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// The error terms `x·O(T^py) + y·O(T^px)` bound the result precision; for
    /// Novikov-ring operands this is the smaller operand precision.
    pub fn mul(&self, o: &Self) -> Self {
        let known_val = |s: &Self| -> BigRational {
            match (s.poly.valuation(), &s.precision) {
                (Some(v), _) => v.clone().min(BigRational::zero()),
                (None, Some(p)) => p.clone().min(BigRational::zero()),
                (None, None) => BigRational::zero(),
            }
        };
        let from_self = self.precision.as_ref().map(|p| p + known_val(o));
        let from_other = o.precision.as_ref().map(|p| p + known_val(self));
        NovikovScalar::new(self.poly.mul(&o.poly), min_prec(&from_self, &from_other))
    }

    /// Factors out the leading monomial `cT^a` and expands a geometric series.
    /// The result is known up to `T^(p − 2a)`, which is `p` for units of the ring.
    pub fn invert(&self) -> Result<Self> {
        let v = self
            .valuation()?
            .ok_or_else(|| Error::Indeterminate("inverse of zero".into()))?;
        let (a, c) = self.poly.lowest().cloned().expect("nonzero");
        let cinv = self.gf.elem_inv(&c).expect("nonzero");
        let lead_inv = Poly::monomial(self.gf, cinv.clone(), -a.clone());
        if self.poly.is_monomial() && self.precision.is_none() {
            return Ok(NovikovScalar::exact(lead_inv));
        }
        let Some(p) = self.precision.clone() else {
            return Err(Error::Unsupported(
                "exact inverse of a non-monomial needs a finite precision".into(),
            ));
        };
        // x = cT^a (1 + u), u known below T^(p − a)
        let rel = &p - &v;
        let u = self.poly.mul(&lead_inv).sub(&Poly::one(self.gf)).truncate(&rel);
        let minus_u = u.neg();
        let mut sum = Poly::one(self.gf);
        let mut pow = Poly::one(self.gf);
        loop {
            pow = pow.mul(&minus_u).truncate(&rel);
            if pow.is_zero() {
                break;
            }
            sum = sum.add(&pow);
        }
        Ok(NovikovScalar::new(sum.mul(&lead_inv), Some(rel - &a)))
    }

    /// Image in `⊗ Λ_[0,r)`: drops exponents `>= r`.
    pub fn truncate(&self, r: &BigRational) -> Self {
        NovikovScalar::new(self.poly.clone(), min_prec(&self.precision, &Some(r.clone())))
    }

    /// Equality of the parts both operands determine.
    pub fn agrees_with(&self, o: &Self) -> bool {
        let p = min_prec(&self.precision, &o.precision);
        match &p {
            Some(p) => self.poly.truncate(p) == o.poly.truncate(p),
            None => self.poly == o.poly,
        }
    }
}

impl Display for NovikovScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.precision {
            None => write!(f, "{}", self.poly),
            Some(p) => write!(f, "{} + O(T^{})", self.poly, fmt_rat(p)),
        }
    }
}

/// Serialized scalar: terms `[coefficient, exponent numerator, exponent denominator]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarDoc {
    pub terms: Vec<(String, i64, i64)>,
    /// `[numerator, denominator]`, absent for exact scalars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<(i64, i64)>,
}

impl ScalarDoc {
    pub fn from_scalar(x: &NovikovScalar) -> Self {
        let terms = x
            .poly
            .terms()
            .iter()
            .map(|(e, c)| (fmt_rat(c), small(e.numer()), small(e.denom())))
            .collect();
        let precision = x.precision.as_ref().map(|p| (small(p.numer()), small(p.denom())));
        ScalarDoc { terms, precision }
    }

    pub fn to_scalar(&self, gf: GroundField) -> Result<NovikovScalar> {
        let mut terms = Vec::new();
        for (c, n, d) in &self.terms {
            if *d == 0 {
                return Err(Error::Schema("zero exponent denominator".into()));
            }
            terms.push((BigRational::new(BigInt::from(*n), BigInt::from(*d)), parse_rational(c)?));
        }
        let precision = match self.precision {
            None => None,
            Some((_, 0)) => return Err(Error::Schema("zero precision denominator".into())),
            Some((n, d)) => Some(BigRational::new(BigInt::from(n), BigInt::from(d))),
        };
        Ok(NovikovScalar::new(Poly::from_terms(gf, terms), precision))
    }
}

fn small(b: &BigInt) -> i64 {
    i64::try_from(b).expect("exponent fits in i64")
}

/// Interval module `Λ_[a,b)` (or `Λ_(a,b)` when `lower_open`); `b = ∞` allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalModule {
    pub lower: BigRational,
    pub upper: Option<BigRational>,
    pub lower_open: bool,
}

impl IntervalModule {
    pub fn new(lower: BigRational, upper: Option<BigRational>, lower_open: bool) -> Result<Self> {
        if let Some(u) = &upper {
            if *u <= lower {
                return Err(Error::Invariant("interval module needs a < b".into()));
            }
        }
        Ok(IntervalModule { lower, upper, lower_open })
    }

    /// `Λ≥r`
    pub fn at_least(r: BigRational) -> Self {
        IntervalModule { lower: r, upper: None, lower_open: false }
    }

    /// Whether `x` represents an element (exponents inside the interval).
    pub fn contains(&self, x: &NovikovScalar) -> bool {
        x.poly().terms().iter().all(|(e, _)| {
            let above = if self.lower_open { *e > self.lower } else { *e >= self.lower };
            above && self.upper.as_ref().is_none_or(|u| e < u)
        })
    }

    /// `M ⊗ Λ_[0,r)`: for `Λ_[a,b)` this is `Λ_[a, min(b, a + r))`.
    pub fn tensor_truncation(&self, r: &BigRational) -> Self {
        let cap = &self.lower + r;
        let upper = Some(match &self.upper {
            Some(u) => u.clone().min(cap),
            None => cap,
        });
        IntervalModule { lower: self.lower.clone(), upper, lower_open: self.lower_open }
    }
}

/// A finite free based module (labels with degrees).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasedModule {
    pub labels: Vec<String>,
    pub degrees: Vec<i64>,
    pub modulus: i64,
}

impl BasedModule {
    pub fn new(labels: Vec<String>, degrees: Vec<i64>, modulus: i64) -> Result<Self> {
        if labels.len() != degrees.len() {
            return Err(Error::Schema("labels and degrees differ in length".into()));
        }
        Ok(BasedModule { labels, degrees, modulus })
    }

    pub fn zero(modulus: i64) -> Self {
        BasedModule { labels: Vec::new(), degrees: Vec::new(), modulus }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// A monomial-weighted basis map: column `j` goes to `c·T^w·e_i` or to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedBasisMap {
    pub target_dim: usize,
    pub cols: Vec<Option<(usize, BigRational, BigRational)>>,
}

impl WeightedBasisMap {
    pub fn identity(n: usize) -> Self {
        WeightedBasisMap {
            target_dim: n,
            cols: (0..n).map(|i| Some((i, BigRational::one(), BigRational::zero()))).collect(),
        }
    }

    /// Multiplication by `T^c` on a free module of rank `n`.
    pub fn t_power(n: usize, c: BigRational) -> Self {
        WeightedBasisMap {
            target_dim: n,
            cols: (0..n).map(|i| Some((i, BigRational::one(), c.clone()))).collect(),
        }
    }

    /// Recognizes a dense matrix (`m[i][j]` = coefficient of `e_i` in the image of `e_j`).
    pub fn from_matrix(m: &[Vec<Lam>], cols: usize) -> Result<Self> {
        let unsupported =
            || Error::Unsupported("completed colimits need monomial-weighted basis maps".into());
        let mut out = Vec::with_capacity(cols);
        for j in 0..cols {
            let mut hit = None;
            for (i, row) in m.iter().enumerate() {
                if row[j].is_zero() {
                    continue;
                }
                let p = row[j].as_poly().filter(|p| p.is_monomial()).ok_or_else(unsupported)?;
                let (w, c) = p.lowest().cloned().expect("monomial");
                if hit.is_some() || w.is_negative() {
                    return Err(unsupported());
                }
                hit = Some((i, c, w));
            }
            out.push(hit);
        }
        Ok(WeightedBasisMap { target_dim: m.len(), cols: out })
    }

    pub fn source_dim(&self) -> usize {
        self.cols.len()
    }

    /// Every nonzero column carries weight at least `c`.
    pub fn contracts_by(&self, c: &BigRational) -> bool {
        self.cols.iter().flatten().all(|(_, _, w)| w >= c)
    }
}

/// A ray `C_0 → C_1 → … → C_N → C_N → …` whose tail repeats an endomorphism of `C_N`.
#[derive(Clone, Debug)]
pub struct BasedRay {
    pub gf: GroundField,
    pub modules: Vec<BasedModule>,
    /// `maps[i]: modules[i] → modules[i + 1]`
    pub maps: Vec<WeightedBasisMap>,
    pub tail: WeightedBasisMap,
}

/// Vector in a based module: one finite polynomial coefficient per basis element.
pub type WeightedVector = Vec<Poly>;

/// Completed colimit of a ray at a fixed truncation.
#[derive(Clone, Debug)]
pub struct CompletedColimit {
    pub module: BasedModule,
    /// Indices in the last module of the surviving basis elements.
    pub survivors: Vec<usize>,
    pub precision: BigRational,
}

impl BasedRay {
    pub fn validate(&self) -> Result<()> {
        if self.modules.is_empty() || self.maps.len() + 1 != self.modules.len() {
            return Err(Error::Schema("a ray needs one map between consecutive modules".into()));
        }
        for (i, m) in self.maps.iter().enumerate() {
            if m.source_dim() != self.modules[i].dim() || m.target_dim != self.modules[i + 1].dim() {
                return Err(Error::Schema(format!("map {i} has the wrong shape")));
            }
            for (j, col) in m.cols.iter().enumerate() {
                if let Some((t, _, _)) = col {
                    let (a, b) = (&self.modules[i], &self.modules[i + 1]);
                    if (a.degrees[j] - b.degrees[*t]).rem_euclid(a.modulus.max(1)) != 0
                        && a.modulus != 0
                        || (a.modulus == 0 && a.degrees[j] != b.degrees[*t])
                    {
                        return Err(Error::Schema(format!("map {i} does not preserve degree")));
                    }
                }
            }
        }
        let last = self.modules.last().expect("nonempty").dim();
        if self.tail.source_dim() != last || self.tail.target_dim != last {
            return Err(Error::Schema("tail map must be an endomorphism of the last module".into()));
        }
        Ok(())
    }

    /// The constant ray on `m` with identity maps.
    pub fn constant(gf: GroundField, m: BasedModule) -> Self {
        let n = m.dim();
        BasedRay { gf, modules: vec![m], maps: vec![], tail: WeightedBasisMap::identity(n) }
    }

    /// `Λ≥0^n —·T^c→ Λ≥0^n —·T^c→ …`
    pub fn contracting(gf: GroundField, m: BasedModule, c: BigRational) -> Self {
        let n = m.dim();
        BasedRay { gf, modules: vec![m], maps: vec![], tail: WeightedBasisMap::t_power(n, c) }
    }

    /// Basis elements of the last module lying on weight-0 cycles of the tail.
    fn zero_weight_cycles(&self) -> Vec<usize> {
        let n = self.tail.source_dim();
        let mut out = Vec::new();
        for start in 0..n {
            let mut cur = start;
            let mut weight = BigRational::zero();
            for _ in 0..n {
                match &self.tail.cols[cur] {
                    None => break,
                    Some((t, _, w)) => {
                        weight += w;
                        cur = *t;
                    }
                }
                if cur == start {
                    if weight.is_zero() {
                        out.push(start);
                    }
                    break;
                }
            }
        }
        out
    }

    /// Completed colimit at precision `r`: the survivors are exactly the tail's
    /// weight-0 cycles; everything else is eventually divisible by every power of `T`.
    pub fn completed_colimit(&self, r: &BigRational) -> Result<CompletedColimit> {
        self.validate()?;
        if !r.is_positive() {
            return Err(Error::Schema("precision must be positive".into()));
        }
        let last = self.modules.last().expect("validated");
        let survivors = self.zero_weight_cycles();
        let module = BasedModule {
            labels: survivors.iter().map(|&i| last.labels[i].clone()).collect(),
            degrees: survivors.iter().map(|&i| last.degrees[i]).collect(),
            modulus: last.modulus,
        };
        Ok(CompletedColimit { module, survivors, precision: r.clone() })
    }

    fn apply(&self, m: &WeightedBasisMap, v: &WeightedVector) -> WeightedVector {
        let mut out: WeightedVector = vec![Poly::zero(self.gf); m.target_dim];
        for (j, x) in v.iter().enumerate() {
            if let Some((t, c, w)) = &m.cols[j] {
                out[*t] = out[*t].add(&x.scale(c).shift(w));
            }
        }
        out
    }

    /// Image of `x ∈ C_k` in the completed colimit at precision `r`, in survivor coordinates.
    pub fn image_at_precision(&self, k: usize, x: &WeightedVector, r: &BigRational) -> Result<WeightedVector> {
        let colim = self.completed_colimit(r)?;
        if k >= self.modules.len() || x.len() != self.modules[k].dim() {
            return Err(Error::Schema("element does not live in the named module".into()));
        }
        let mut v = x.clone();
        for m in &self.maps[k..] {
            v = self.apply(m, &v);
        }
        // Push into the eventual image of the tail, then pull back along the
        // invertible weight-0 cycles to the last stored stage.
        let n = self.tail.source_dim();
        let mut steps = 0;
        for _ in 0..n {
            let off_cycle = v.iter().enumerate().any(|(i, e)| !e.is_zero() && !colim.survivors.contains(&i));
            if !off_cycle {
                break;
            }
            v = self.apply(&self.tail, &v);
            steps += 1;
        }
        let mut out: WeightedVector = vec![Poly::zero(self.gf); colim.survivors.len()];
        for &i in &colim.survivors {
            let mut src = i;
            let mut coef = v[i].truncate(r);
            for _ in 0..steps {
                let pre = colim
                    .survivors
                    .iter()
                    .copied()
                    .find(|&j| matches!(&self.tail.cols[j], Some((t, _, _)) if *t == src))
                    .expect("cycle element has a cycle preimage");
                let (_, mc, _) = self.tail.cols[pre].as_ref().expect("present");
                coef = coef.scale(&self.gf.elem_inv(mc).expect("unit"));
                src = pre;
            }
            let at = colim.survivors.iter().position(|&s| s == src).expect("survivor");
            out[at] = out[at].add(&coef);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{int, rat};
    use proptest::prelude::*;

    const F2: GroundField = GroundField::F2;
    const Q: GroundField = GroundField::Q;

    fn p(gf: GroundField, s: &str) -> Poly {
        Poly::parse(gf, s).unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(NovikovScalar::zero(Q).valuation().unwrap(), None);
        let x = NovikovScalar::exact(p(Q, "T^1/2 + T^2"));
        assert_eq!(x.valuation().unwrap(), Some(rat(1, 2)));
        let lost = NovikovScalar::new(p(Q, "T^2"), Some(int(1)));
        assert!(matches!(lost.valuation(), Err(Error::Indeterminate(_))));
    }

    #[test]
    fn product_valuation_over_q() {
        // (1+T)(2+T^(1/3)) = 2 + T^(1/3) + 2T + T^(4/3)
        let a = NovikovScalar::exact(p(Q, "1 + T"));
        let b = NovikovScalar::exact(p(Q, "2 + T^1/3"));
        let prod = a.mul(&b);
        assert_eq!(prod.poly(), &p(Q, "2 + T^1/3 + 2*T + T^4/3"));
        assert_eq!(prod.valuation().unwrap(), Some(int(0)));
    }

    #[test]
    fn inverse_of_one_plus_t_over_f2() {
        let x = NovikovScalar::new(p(F2, "1 + T"), Some(int(3)));
        let y = x.invert().unwrap();
        assert_eq!(y.poly(), &p(F2, "1 + T + T^2"));
        assert_eq!(y.precision(), Some(&int(3)));
        // multiply back: 1 + T^3 ≡ 1 below T^3
        assert!(x.mul(&y).agrees_with(&NovikovScalar::one(F2)));
    }

    #[test]
    fn truncation_examples() {
        let x = NovikovScalar::exact(p(Q, "T^6/5"));
        assert!(x.truncate(&int(1)).poly().is_zero());
        let y = NovikovScalar::exact(p(Q, "1 + T^1/2"));
        assert_eq!(y.truncate(&int(1)).poly(), y.poly());
        assert_eq!(NovikovScalar::exact(p(Q, "T")).mul(&NovikovScalar::exact(p(Q, "T"))).poly(), &p(Q, "T^2"));
    }

    #[test]
    fn poly_parse_and_display_round_trip() {
        for s in ["1", "T", "-T^(1/2)", "2*T^3 + T^(-1)", "1/2 - T^(4/3)"] {
            let x = p(Q, s);
            assert_eq!(p(Q, &x.to_string()), x, "{s}");
        }
    }

    #[test]
    fn lam_fractions_are_canonical() {
        let a = Lam::new(p(Q, "1 - T^2"), p(Q, "1 - T")).unwrap();
        assert_eq!(a, Lam::from_poly(p(Q, "1 + T")));
        let b = Lam::new(p(Q, "T"), p(Q, "2*T^3")).unwrap();
        assert_eq!(b, Lam::from_poly(p(Q, "1/2*T^(-2)")));
        let inv = Lam::from_poly(p(F2, "1 + T")).inv().unwrap();
        assert_eq!(inv.mul(&Lam::from_poly(p(F2, "1 + T"))), Lam::one(F2));
        assert_eq!(inv.valuation(), Some(int(0)));
    }

    #[test]
    fn lam_display_round_trip() {
        let a = Lam::new(p(Q, "1 + T^2"), p(Q, "1 - T")).unwrap();
        assert_eq!(Lam::parse(Q, &a.to_string()).unwrap(), a);
    }

    #[test]
    fn interval_modules() {
        assert!(IntervalModule::new(int(1), Some(int(1)), false).is_err());
        let m = IntervalModule::new(int(0), Some(int(2)), false).unwrap();
        assert!(m.contains(&NovikovScalar::exact(p(Q, "1 + T"))));
        assert!(!m.contains(&NovikovScalar::exact(p(Q, "T^2"))));
        let t = IntervalModule::at_least(int(1)).tensor_truncation(&int(3));
        assert_eq!(t.upper, Some(int(4)));
    }

    fn line(n: usize) -> BasedModule {
        BasedModule::new((0..n).map(|i| format!("x{i}")).collect(), vec![0; n], 0).unwrap()
    }

    #[test]
    fn constant_ray_colimit_is_the_module() {
        let ray = BasedRay::constant(F2, line(3));
        let c = ray.completed_colimit(&int(10)).unwrap();
        assert_eq!(c.module, line(3));
    }

    #[test]
    fn contracting_ray_completes_to_zero() {
        let ray = BasedRay::contracting(F2, line(1), int(1));
        for r in [5, 10, 20] {
            let c = ray.completed_colimit(&int(r)).unwrap();
            assert_eq!(c.module.dim(), 0);
            let x1 = vec![Poly::one(F2)];
            assert!(ray.image_at_precision(0, &x1, &int(r)).unwrap().is_empty());
        }
    }

    #[test]
    fn mixed_ray_keeps_only_weight_zero_cycles() {
        // e0 ↦ e1 ↦ e0 with weight 0; e2 ↦ T e2
        let tail = WeightedBasisMap {
            target_dim: 3,
            cols: vec![
                Some((1, int(1), int(0))),
                Some((0, int(1), int(0))),
                Some((2, int(1), int(1))),
            ],
        };
        let ray = BasedRay { gf: F2, modules: vec![line(3)], maps: vec![], tail };
        let c = ray.completed_colimit(&int(4)).unwrap();
        assert_eq!(c.survivors, vec![0, 1]);
        let e2 = vec![Poly::zero(F2), Poly::zero(F2), Poly::one(F2)];
        let img = ray.image_at_precision(0, &e2, &int(4)).unwrap();
        assert!(img.iter().all(|e| e.is_zero()));
        let e0 = vec![Poly::one(F2), Poly::zero(F2), Poly::zero(F2)];
        let img = ray.image_at_precision(0, &e0, &int(4)).unwrap();
        assert_eq!(img, vec![Poly::one(F2), Poly::zero(F2)]);
    }

    #[test]
    fn non_monomial_maps_are_rejected() {
        let m = vec![vec![Lam::from_poly(p(F2, "1 + T"))]];
        assert!(matches!(WeightedBasisMap::from_matrix(&m, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn scalar_doc_round_trip() {
        let x = NovikovScalar::new(p(Q, "1/2 + 3*T^(2/3)"), Some(int(5)));
        let doc = ScalarDoc::from_scalar(&x);
        let json = serde_json::to_string(&doc).unwrap();
        let back: ScalarDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_scalar(Q).unwrap(), x);
    }

    fn arb_poly(gf: GroundField) -> impl Strategy<Value = Poly> {
        prop::collection::vec((-3i64..4, 0i64..12, 1i64..4), 0..5).prop_map(move |ts| {
            Poly::from_terms(gf, ts.into_iter().map(|(c, n, d)| (rat(n, d), int(c))).collect())
        })
    }

    proptest! {
        #[test]
        fn valuation_is_ultrametric(a in arb_poly(Q), b in arb_poly(Q)) {
            let (x, y) = (NovikovScalar::exact(a), NovikovScalar::exact(b));
            let s = x.add(&y).valuation().unwrap();
            let (vx, vy) = (x.valuation().unwrap(), y.valuation().unwrap());
            let lo = match (&vx, &vy) {
                (None, v) | (v, None) => v.clone(),
                (Some(u), Some(v)) => Some(u.min(v).clone()),
            };
            if let (Some(s), Some(lo)) = (&s, &lo) {
                prop_assert!(s >= lo);
            }
            if vx != vy {
                prop_assert_eq!(s, lo);
            }
        }

        #[test]
        fn valuation_is_multiplicative(a in arb_poly(Q), b in arb_poly(Q)) {
            let (x, y) = (NovikovScalar::exact(a), NovikovScalar::exact(b));
            let v = x.mul(&y).valuation().unwrap();
            match (x.valuation().unwrap(), y.valuation().unwrap()) {
                (Some(u), Some(w)) => prop_assert_eq!(v, Some(u + w)),
                _ => prop_assert_eq!(v, None),
            }
        }

        #[test]
        fn truncation_is_an_algebra_map(a in arb_poly(F2), b in arb_poly(F2), r in 1i64..6) {
            let r = int(r);
            let (x, y) = (NovikovScalar::exact(a), NovikovScalar::exact(b));
            prop_assume!(x.is_nonnegative() && y.is_nonnegative());
            let lhs = x.mul(&y).truncate(&r);
            let rhs = x.truncate(&r).mul(&y.truncate(&r)).truncate(&r);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn truncation_tower(a in arb_poly(Q)) {
            let x = NovikovScalar::exact(a);
            prop_assert_eq!(x.truncate(&int(2)).truncate(&int(1)), x.truncate(&int(1)));
        }

        #[test]
        fn inverse_times_x_is_one(a in arb_poly(F2), prec in 1i64..8) {
            let x = NovikovScalar::new(a, Some(int(prec)));
            prop_assume!(x.is_nonnegative());
            if let Ok(Some(v)) = x.valuation() {
                prop_assume!(v.is_zero());
                let y = x.invert().unwrap();
                let one = NovikovScalar::one(F2).truncate(&int(prec));
                prop_assert_eq!(x.mul(&y).truncate(&int(prec)), one);
            }
        }

        #[test]
        fn lam_field_laws(a in arb_poly(Q), b in arb_poly(Q), c in arb_poly(Q)) {
            let (x, y, z) = (Lam::from_poly(a), Lam::from_poly(b), Lam::from_poly(c));
            prop_assert_eq!(x.mul(&y.add(&z)), x.mul(&y).add(&x.mul(&z)));
            if let Some(yi) = y.inv() {
                prop_assert_eq!(x.mul(&y).mul(&yi), x.clone());
                let q = x.mul(&yi);
                prop_assert_eq!(q.valuation(), x.valuation().map(|v| v - y.valuation().unwrap()));
            }
        }

        #[test]
        fn ray_contracting_by_any_positive_weight_vanishes(c in 1i64..5, d in 1i64..4, r in 1i64..30) {
            let ray = BasedRay::contracting(F2, line(2), rat(c, d));
            prop_assert_eq!(ray.completed_colimit(&int(r)).unwrap().module.dim(), 0);
        }
    }
}
