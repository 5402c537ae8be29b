//! Laurent polynomials in a formal half power of `q`.
//!
//! An exponent `k` stands for `q^(k/2)`.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QCoeff {
    terms: BTreeMap<i64, BigInt>,
}

impl QCoeff {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 1)
    }

    /// `c * q^(k/2)`.
    pub fn monomial(k: i64, c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        Self { terms }
    }

    pub fn q_half(k: i64) -> Self {
        Self::monomial(k, 1)
    }

    pub fn from_int(c: impl Into<BigInt>) -> Self {
        Self::monomial(0, c)
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, BigInt)>>(it: I) -> Self {
        let mut out = Self::zero();
        for (k, c) in it {
            out.add_term(k, &c);
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: i64) -> BigInt {
        self.terms.get(&k).cloned().unwrap_or_default()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn add_term(&mut self, k: i64, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(k).or_default();
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    /// Multiply by `q^(k/2)`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, d)| (*e, d * c)).collect(),
        }
    }

    /// If this is `±q^(k/2)`, return `(k, sign)`.
    pub fn as_unit(&self) -> Option<(i64, i8)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (k, c) = self.terms.iter().next().unwrap();
        if c.is_one() {
            Some((*k, 1))
        } else if (-c).is_one() {
            Some((*k, -1))
        } else {
            None
        }
    }

    pub fn unit_divide(&self, u: &QCoeff) -> Result<QCoeff> {
        let (k, s) = u.as_unit().ok_or_else(|| Error::NotAUnit(u.to_string()))?;
        let out = self.shift(-k);
        Ok(if s < 0 { -out } else { out })
    }

    /// Value at `q^(1/2) = -1`.
    pub fn eval_classical(&self) -> BigInt {
        let mut acc = BigInt::zero();
        for (k, c) in &self.terms {
            if k.rem_euclid(2) == 0 {
                acc += c;
            } else {
                acc -= c;
            }
        }
        acc
    }

    /// Value modulo `p` with `q^(1/2) = s`.
    pub fn eval_mod(&self, s: u64, p: u64) -> u64 {
        let mut acc = 0u64;
        for (k, c) in &self.terms {
            let cm = bigint_mod(c, p);
            let sk = pow_mod_signed(s, *k, p);
            acc = (acc + mul_mod(cm, sk, p)) % p;
        }
        acc
    }

    /// Exact division by a nonzero integer if every coefficient is divisible.
    pub fn div_exact_int(&self, d: &BigInt) -> Option<QCoeff> {
        let mut out = BTreeMap::new();
        for (k, c) in &self.terms {
            if !(c % d).is_zero() {
                return None;
            }
            out.insert(*k, c / d);
        }
        Some(QCoeff { terms: out })
    }

    /// Division with remainder by a polynomial whose top coefficient is ±1.
    /// Returns `(quotient, remainder)` with `self = quotient * d + remainder`.
    pub fn div_rem_monic(&self, d: &QCoeff) -> Option<(QCoeff, QCoeff)> {
        let dmax = d.max_exp()?;
        let dmin = d.min_exp()?;
        let lead = d.coeff(dmax);
        if !(lead.is_one() || (-&lead).is_one()) {
            return None;
        }
        let span = dmax - dmin;
        let mut r = self.clone();
        let mut quo = QCoeff::zero();
        while let (Some(rmax), Some(rmin)) = (r.max_exp(), r.min_exp()) {
            if rmax - rmin < span {
                break;
            }
            let c = r.coeff(rmax) * &lead;
            let t = QCoeff::monomial(rmax - dmax, c);
            r = &r - &(&t * d);
            quo = &quo + &t;
        }
        Some((quo, r))
    }

    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            g = num_integer::Integer::gcd(&g, c);
        }
        g
    }

    /// Exact quotient `self / d` in `Z[q^{±1/2}]`, or `None` if `d` does not divide.
    pub fn div_exact(&self, d: &QCoeff) -> Option<QCoeff> {
        let (dmax, dmin) = (d.max_exp()?, d.min_exp()?);
        let lead = d.coeff(dmax);
        let mut r = self.clone();
        let mut quo = BTreeMap::new();
        while let (Some(rmax), Some(rmin)) = (r.max_exp(), r.min_exp()) {
            if rmax - rmin < dmax - dmin {
                return None;
            }
            let c = r.coeff(rmax);
            if !(&c % &lead).is_zero() {
                return None;
            }
            let t = QCoeff::monomial(rmax - dmax, c / &lead);
            r = &r - &(&t * d);
            quo.insert(rmax - dmax, t.coeff(rmax - dmax));
        }
        Some(QCoeff { terms: quo })
    }

    /// Divides out the integer content and the lowest power of `q^(1/2)`,
    /// making the top coefficient positive.
    pub fn primitive_part(&self) -> QCoeff {
        let (Some(lo), Some(hi)) = (self.min_exp(), self.max_exp()) else {
            return QCoeff::zero();
        };
        let mut c = self.content();
        if self.coeff(hi).is_negative() {
            c = -c;
        }
        self.div_exact_int(&c).unwrap().shift(-lo)
    }

    /// Greatest common divisor, normalised by [`QCoeff::primitive_part`].
    pub fn gcd(&self, o: &QCoeff) -> QCoeff {
        let mut a = self.primitive_part();
        let mut b = o.primitive_part();
        if a.is_zero() {
            return b.scale(&o.content().abs());
        }
        let content = num_integer::Integer::gcd(&self.content(), &o.content());
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive_part();
            a = b;
            b = r;
        }
        a.scale(&content)
    }

    /// Pseudo-remainder of polynomials in `q^(1/2)` (both shifted to start at 0).
    fn pseudo_rem(&self, d: &QCoeff) -> QCoeff {
        let (dmax, dmin) = (d.max_exp().unwrap(), d.min_exp().unwrap());
        let d = d.shift(-dmin);
        let dd = dmax - dmin;
        let lead = d.coeff(dd);
        let mut r = self.shift(-self.min_exp().unwrap_or(0));
        while let Some(rmax) = r.max_exp() {
            if rmax < dd {
                break;
            }
            let c = r.coeff(rmax);
            r = &r.scale(&lead) - &(&d * &QCoeff::monomial(rmax - dd, c));
        }
        r
    }
}

pub(crate) fn bigint_mod(c: &BigInt, p: u64) -> u64 {
    let r = c % BigInt::from(p);
    let r = if r.is_negative() { r + BigInt::from(p) } else { r };
    r.to_u64().unwrap()
}

pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    r
}

pub(crate) fn pow_mod_signed(s: u64, k: i64, p: u64) -> u64 {
    if k >= 0 {
        pow_mod(s, k as u64, p)
    } else {
        pow_mod(pow_mod(s, p - 2, p), (-k) as u64, p)
    }
}

fn q_power(k: i64) -> String {
    match (k % 2, k / 2) {
        (0, 1) => "q".into(),
        (0, n) => format!("q^{n}"),
        _ => format!("q^({k}/2)"),
    }
}

impl fmt::Display for QCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            if *k == 0 {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", q_power(*k))?;
            } else {
                write!(f, "{a}*{}", q_power(*k))?;
            }
        }
        Ok(())
    }
}

impl Serialize for QCoeff {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.terms.len()))?;
        for (k, c) in &self.terms {
            match c.to_i64() {
                Some(v) => m.serialize_entry(&k.to_string(), &v)?,
                None => m.serialize_entry(&k.to_string(), &c.to_string())?,
            }
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for QCoeff {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw: BTreeMap<String, serde_json::Value> = BTreeMap::deserialize(d)?;
        let mut out = QCoeff::zero();
        for (k, v) in raw {
            let k: i64 = k.parse().map_err(D::Error::custom)?;
            let c: BigInt = match v {
                serde_json::Value::Number(n) => n
                    .as_i64()
                    .map(BigInt::from)
                    .ok_or_else(|| D::Error::custom("non-integer coefficient"))?,
                serde_json::Value::String(s) => s.parse().map_err(D::Error::custom)?,
                _ => return Err(D::Error::custom("bad coefficient")),
            };
            out.add_term(k, &c);
        }
        Ok(out)
    }
}

impl Add for &QCoeff {
    type Output = QCoeff;
    fn add(self, o: &QCoeff) -> QCoeff {
        let mut out = self.clone();
        out += o;
        out
    }
}

impl AddAssign<&QCoeff> for QCoeff {
    fn add_assign(&mut self, o: &QCoeff) {
        for (k, c) in &o.terms {
            self.add_term(*k, c);
        }
    }
}

impl Sub for &QCoeff {
    type Output = QCoeff;
    fn sub(self, o: &QCoeff) -> QCoeff {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(*k, &-c);
        }
        out
    }
}

impl Neg for QCoeff {
    type Output = QCoeff;
    fn neg(self) -> QCoeff {
        QCoeff {
            terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect(),
        }
    }
}

impl Neg for &QCoeff {
    type Output = QCoeff;
    fn neg(self) -> QCoeff {
        -(self.clone())
    }
}

impl Mul for &QCoeff {
    type Output = QCoeff;
    fn mul(self, o: &QCoeff) -> QCoeff {
        let mut out = QCoeff::zero();
        for (a, c) in &self.terms {
            for (b, d) in &o.terms {
                out.add_term(a + b, &(c * d));
            }
        }
        out
    }
}

impl Add for QCoeff {
    type Output = QCoeff;
    fn add(self, o: QCoeff) -> QCoeff {
        &self + &o
    }
}

impl Sub for QCoeff {
    type Output = QCoeff;
    fn sub(self, o: QCoeff) -> QCoeff {
        &self - &o
    }
}

impl Mul for QCoeff {
    type Output = QCoeff;
    fn mul(self, o: QCoeff) -> QCoeff {
        &self * &o
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(k: i64, c: i64) -> QCoeff {
        QCoeff::monomial(k, c)
    }

    #[test]
    fn products() {
        assert_eq!(&q(1, 1) * &q(1, 1), q(2, 1));
        let a = &q(2, 1) + &q(-2, 1);
        assert_eq!(&a * &QCoeff::one(), a);
        // term-by-term expansion of (s - 1/s)(s + 1/s)
        let x = &q(1, 1) - &q(-1, 1);
        let y = &q(1, 1) + &q(-1, 1);
        let mut oracle = QCoeff::zero();
        for (i, ci) in x.terms() {
            for (j, cj) in y.terms() {
                oracle.add_term(i + j, &(ci * cj));
            }
        }
        assert_eq!(&x * &y, oracle);
        assert_eq!(oracle, &q(2, 1) - &q(-2, 1));
    }

    #[test]
    fn classical() {
        assert_eq!(q(3, 1).eval_classical(), BigInt::from(-1));
        assert_eq!((&q(2, 1) + &q(-2, 1)).eval_classical(), BigInt::from(2));
        assert_eq!((&q(11, 1) + &q(15, 1)).eval_classical(), BigInt::from(-2));
    }

    #[test]
    fn unit_division() {
        let a = &q(4, 1) + &q(2, 1);
        assert_eq!(a.unit_divide(&q(2, 1)).unwrap(), &q(2, 1) + &q(0, 1));
        assert_eq!(q(3, 1).unit_divide(&q(1, -1)).unwrap(), q(2, -1));
        let two = &q(2, 1) + &q(0, 1);
        assert!(matches!(a.unit_divide(&two), Err(Error::NotAUnit(_))));
        assert!(matches!(a.unit_divide(&q(0, 2)), Err(Error::NotAUnit(_))));
    }

    #[test]
    fn render_and_json() {
        let a = &q(3, 1) - &q(-2, 5);
        assert_eq!(a.to_string(), "q^(3/2) - 5*q^-1");
        let js = serde_json::to_string(&a).unwrap();
        assert_eq!(js, r#"{"-2":-5,"3":1}"#);
        let b: QCoeff = serde_json::from_str(&js).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monic_division() {
        let d = &q(2, 1) + &q(0, 1);
        let n = &(&q(4, 3) - &q(1, 2)) * &d;
        let (quo, r) = n.div_rem_monic(&d).unwrap();
        assert!(r.is_zero());
        assert_eq!(&quo * &d, n);
    }

    fn arb() -> impl Strategy<Value = QCoeff> {
        prop::collection::vec((-6i64..6, -5i64..5), 0..5)
            .prop_map(|v| QCoeff::from_terms(v.into_iter().map(|(k, c)| (k, BigInt::from(c)))))
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb(), b in arb(), c in arb()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
        }

        #[test]
        fn classical_is_hom(a in arb(), b in arb()) {
            prop_assert_eq!((&a * &b).eval_classical(), a.eval_classical() * b.eval_classical());
        }

        #[test]
        fn exact_division(a in arb(), b in arb()) {
            prop_assume!(!b.is_zero());
            let p = &a * &b;
            prop_assert_eq!(p.div_exact(&b), Some(a.clone()));
        }

        #[test]
        fn gcd_divides(a in arb(), b in arb(), c in arb()) {
            prop_assume!(!c.is_zero() && !(a.is_zero() && b.is_zero()));
            let g = (&a * &c).gcd(&(&b * &c));
            prop_assert!((&a * &c).div_exact(&g).is_some());
            prop_assert!((&b * &c).div_exact(&g).is_some());
            prop_assert!(g.div_exact(&c.primitive_part()).is_some());
        }

        #[test]
        fn unit_divide_inverts(a in arb(), k in -8i64..8, neg in any::<bool>()) {
            let u = QCoeff::monomial(k, if neg { -1 } else { 1 });
            prop_assert_eq!(&a.unit_divide(&u).unwrap() * &u, a);
        }
    }
}
