//! Laurent polynomials in `q^{1/2}` with big-integer coefficients.
//!
//! Exponents are stored in half units: the key `h` stands for `q^{h/2}`.
//! Elements of `Z[q, q^-1]` are exactly those whose keys are all even.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("division by zero")]
    DivByZero,
    #[error("{dividend} is not divisible by {divisor} in the Laurent ring")]
    NonDivisible { dividend: String, divisor: String },
    #[error("quantum binomial [{n} choose {r}] requested with r outside [0, n]")]
    BinomialOutOfRange { n: usize, r: usize },
}

/// A Laurent polynomial in `q^{1/2}` kept in canonical form (no zero coefficients).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RingElem {
    terms: BTreeMap<i64, BigInt>,
}

impl RingElem {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial_half(0, 1)
    }

    /// `c · q^{h/2}`.
    pub fn monomial_half(half_exp: i64, coeff: impl Into<BigInt>) -> Self {
        let coeff = coeff.into();
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(half_exp, coeff);
        }
        Self { terms }
    }

    /// `c · q^e` for an integer exponent `e`.
    pub fn monomial(exp: i64, coeff: impl Into<BigInt>) -> Self {
        Self::monomial_half(2 * exp, coeff)
    }

    /// `q^e`.
    pub fn q_pow(exp: i64) -> Self {
        Self::monomial(exp, 1)
    }

    pub fn from_int(c: impl Into<BigInt>) -> Self {
        Self::monomial_half(0, c)
    }

    /// Builds `Σ c·q^e` from integer-exponent pairs; repeated exponents accumulate.
    pub fn laurent(pairs: &[(i64, i64)]) -> Self {
        Self::from_half_terms(pairs.iter().map(|&(e, c)| (2 * e, BigInt::from(c))))
    }

    /// Builds `Σ c·q^{h/2}` from half-exponent pairs; repeated exponents accumulate.
    pub fn from_half_terms(pairs: impl IntoIterator<Item = (i64, BigInt)>) -> Self {
        let mut out = Self::zero();
        for (h, c) in pairs {
            out.add_term(h, c);
        }
        out
    }

    fn add_term(&mut self, half_exp: i64, coeff: BigInt) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(half_exp).or_insert_with(BigInt::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&half_exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(|c| c.is_one())
    }

    /// Terms in ascending half-exponent order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (i64, &BigInt)> + '_ {
        self.terms.iter().map(|(h, c)| (*h, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of `q^{h/2}`.
    pub fn coeff_half(&self, half_exp: i64) -> BigInt {
        self.terms.get(&half_exp).cloned().unwrap_or_default()
    }

    pub fn min_half_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_half_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn scale(&self, c: impl Into<BigInt>) -> Self {
        let c = c.into();
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(h, a)| (*h, a * &c)).collect(),
        }
    }

    /// Multiplies by `q^{h/2}`.
    pub fn shift_half(&self, half_exp: i64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(h, a)| (h + half_exp, a.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// The ring involution `q ↦ q^{-1}`.
    pub fn bar(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(h, c)| (-h, c.clone())).collect(),
        }
    }

    /// The part of `self` with strictly negative exponents.
    pub fn negative_part(&self) -> Self {
        Self {
            terms: self
                .terms
                .range(..0)
                .map(|(h, c)| (*h, c.clone()))
                .collect(),
        }
    }

    /// Exact quotient `self / divisor`, failing when no Laurent quotient exists.
    pub fn exact_div(&self, divisor: &RingElem) -> Result<RingElem, RingError> {
        let (d_lo, d_hi) = match (divisor.min_half_exp(), divisor.max_half_exp()) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(RingError::DivByZero),
        };
        let d_lead = &divisor.terms[&d_hi];
        let d_span = d_hi - d_lo;
        let non_divisible = || RingError::NonDivisible {
            dividend: self.to_string(),
            divisor: divisor.to_string(),
        };

        let mut rem = self.clone();
        let mut quot = RingElem::zero();
        // The top exponent of `rem` strictly decreases and its bottom exponent never
        // drops, so the loop ends once the span of `rem` is shorter than the divisor's.
        while let (Some(lo), Some(hi)) = (rem.min_half_exp(), rem.max_half_exp()) {
            if hi - lo < d_span {
                return Err(non_divisible());
            }
            let (c, r) = rem.terms[&hi].div_rem(d_lead);
            if !r.is_zero() {
                return Err(non_divisible());
            }
            let shift = hi - d_hi;
            quot.add_term(shift, c.clone());
            rem -= &divisor.shift_half(shift).scale(c);
        }
        Ok(quot)
    }

    /// All exponents are integral, i.e. the element lies in `Z[q, q^-1]`.
    pub fn is_in_a(&self) -> bool {
        self.terms.keys().all(|h| h % 2 == 0)
    }

    /// Membership in `q^{-1} Z_{≥0}[q^{-1}]` (zero included).
    pub fn is_in_qinv_nonneg(&self) -> bool {
        self.terms
            .iter()
            .all(|(h, c)| *h < 0 && h % 2 == 0 && c.is_positive())
    }

    /// Membership in `q^{-1} Z[q^{-1}]` (any signs).
    pub fn is_in_qinv_z(&self) -> bool {
        self.terms.keys().all(|h| *h < 0 && h % 2 == 0)
    }

    pub fn has_zero_constant_term(&self) -> bool {
        !self.terms.contains_key(&0)
    }

    pub fn is_bar_antisymmetric(&self) -> bool {
        self.bar() == -self
    }

    pub fn is_bar_invariant(&self) -> bool {
        self.bar() == *self
    }

    /// `±q^{h/2}` for some `h`; these are exactly the units of the ring.
    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1 && self.terms.values().all(|c| c.abs().is_one())
    }
}

/// `[n]_q = q^{n-1} + q^{n-3} + … + q^{1-n}`.
pub fn quantum(n: usize) -> RingElem {
    let n = n as i64;
    RingElem::from_half_terms((0..n).map(|k| (2 * (n - 1 - 2 * k), BigInt::one())))
}

/// `[n]_q! = [1]_q [2]_q ⋯ [n]_q`.
pub fn quantum_factorial(n: usize) -> RingElem {
    (1..=n).fold(RingElem::one(), |acc, k| &acc * &quantum(k))
}

/// Gaussian binomial `∏_{t=1}^{r} [n-r+t]_q / [t]_q`, dividing exactly after each factor.
pub fn quantum_binomial(n: usize, r: usize) -> Result<RingElem, RingError> {
    if r > n {
        return Err(RingError::BinomialOutOfRange { n, r });
    }
    let mut acc = RingElem::one();
    for t in 1..=r {
        acc = (&acc * &quantum(n - r + t)).exact_div(&quantum(t))?;
    }
    Ok(acc)
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (h, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let abs = c.abs();
            if *h == 0 {
                write!(f, "{abs}")?;
                continue;
            }
            if !abs.is_one() {
                write!(f, "{abs}")?;
            }
            match *h {
                2 => write!(f, "q")?,
                h if h % 2 == 0 => write!(f, "q^{}", h / 2)?,
                h => write!(f, "q^({h}/2)")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElem({self})")
    }
}

impl From<i64> for RingElem {
    fn from(c: i64) -> Self {
        RingElem::from_int(c)
    }
}

impl From<BigInt> for RingElem {
    fn from(c: BigInt) -> Self {
        RingElem::from_int(c)
    }
}

impl Neg for &RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        RingElem {
            terms: self.terms.iter().map(|(h, c)| (*h, -c)).collect(),
        }
    }
}

impl Neg for RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        -&self
    }
}

impl AddAssign<&RingElem> for RingElem {
    fn add_assign(&mut self, rhs: &RingElem) {
        for (h, c) in &rhs.terms {
            self.add_term(*h, c.clone());
        }
    }
}

impl SubAssign<&RingElem> for RingElem {
    fn sub_assign(&mut self, rhs: &RingElem) {
        for (h, c) in &rhs.terms {
            self.add_term(*h, -c);
        }
    }
}

impl Add<&RingElem> for &RingElem {
    type Output = RingElem;
    fn add(self, rhs: &RingElem) -> RingElem {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&RingElem> for &RingElem {
    type Output = RingElem;
    fn sub(self, rhs: &RingElem) -> RingElem {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&RingElem> for &RingElem {
    type Output = RingElem;
    fn mul(self, rhs: &RingElem) -> RingElem {
        let mut out = RingElem::zero();
        for (ha, a) in &self.terms {
            for (hb, b) in &rhs.terms {
                out.add_term(ha + hb, a * b);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<RingElem> for RingElem {
            type Output = RingElem;
            fn $m(self, rhs: RingElem) -> RingElem { (&self).$m(&rhs) }
        }
        impl $tr<&RingElem> for RingElem {
            type Output = RingElem;
            fn $m(self, rhs: &RingElem) -> RingElem { (&self).$m(rhs) }
        }
        impl $tr<RingElem> for &RingElem {
            type Output = RingElem;
            fn $m(self, rhs: RingElem) -> RingElem { self.$m(&rhs) }
        }
    )*};
}

forward_owned!(Add add, Sub sub, Mul mul);

impl std::iter::Sum for RingElem {
    fn sum<I: Iterator<Item = RingElem>>(iter: I) -> Self {
        iter.fold(RingElem::zero(), |mut acc, x| {
            acc += &x;
            acc
        })
    }
}

// Wire format: ascending list of `[half_exponent, "decimal coefficient"]`.
impl Serialize for RingElem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (h, c) in &self.terms {
            seq.serialize_element(&(h, c.to_string()))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for RingElem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs: Vec<(i64, String)> = Vec::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(pairs.len());
        for (h, c) in pairs {
            let c: BigInt = c
                .parse()
                .map_err(|_| de::Error::custom(format!("bad coefficient {c:?}")))?;
            terms.push((h, c));
        }
        Ok(RingElem::from_half_terms(terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l(pairs: &[(i64, i64)]) -> RingElem {
        RingElem::laurent(pairs)
    }

    #[test]
    fn product_of_conjugate_pair() {
        let a = l(&[(1, 1), (-1, 1)]);
        let b = l(&[(1, 1), (-1, -1)]);
        assert_eq!(&a * &b, l(&[(2, 1), (-2, -1)]));
    }

    #[test]
    fn identities() {
        let a = l(&[(3, 2), (-1, -5)]);
        assert_eq!(&a + &RingElem::zero(), a);
        let half = RingElem::monomial_half(1, 1);
        assert_eq!(&half * &half, RingElem::q_pow(1));
        assert!((&a - &a).is_zero());
    }

    #[test]
    fn bar_examples() {
        assert_eq!(l(&[(2, 1), (-1, 3)]).bar(), l(&[(-2, 1), (1, 3)]));
        assert_eq!(quantum(5).bar(), quantum(5));
        assert_eq!(RingElem::zero().bar(), RingElem::zero());
    }

    #[test]
    fn quantum_numbers() {
        assert_eq!(quantum(0), RingElem::zero());
        assert_eq!(quantum(1), RingElem::one());
        assert_eq!(quantum(2), l(&[(1, 1), (-1, 1)]));
        assert_eq!(quantum(3), l(&[(2, 1), (0, 1), (-2, 1)]));
        assert_eq!(quantum_factorial(0), RingElem::one());
        assert_eq!(quantum_binomial(2, 1).unwrap(), quantum(2));
    }

    // Oracle: expand [4][3] by hand and divide by [2][1] using the span argument.
    #[test]
    fn binomial_four_two() {
        let expected = l(&[(4, 1), (2, 1), (0, 2), (-2, 1), (-4, 1)]);
        assert_eq!(quantum_binomial(4, 2).unwrap(), expected);
    }

    #[test]
    fn binomial_rejects_out_of_range() {
        assert_eq!(
            quantum_binomial(3, 4),
            Err(RingError::BinomialOutOfRange { n: 3, r: 4 })
        );
    }

    #[test]
    fn exact_division() {
        let num = l(&[(2, 1), (-2, -1)]);
        let den = l(&[(1, 1), (-1, -1)]);
        assert_eq!(num.exact_div(&den).unwrap(), quantum(2));
        let a = l(&[(5, 7), (-3, 1)]);
        assert_eq!(a.exact_div(&RingElem::one()).unwrap(), a);
        assert!(matches!(
            l(&[(1, 1), (0, 1)]).exact_div(&den),
            Err(RingError::NonDivisible { .. })
        ));
        assert_eq!(a.exact_div(&RingElem::zero()), Err(RingError::DivByZero));
        // Integer content must divide too.
        assert!(l(&[(0, 3)]).exact_div(&l(&[(0, 2)])).is_err());
    }

    #[test]
    fn predicates() {
        assert!(l(&[(-1, 1), (-3, 1)]).is_in_qinv_nonneg());
        assert!(l(&[(-1, 1), (1, -1)]).is_bar_antisymmetric());
        assert!(!l(&[(0, 1), (-1, 1)]).is_in_qinv_nonneg());
        assert!(!l(&[(-1, -1)]).is_in_qinv_nonneg());
        assert!(!RingElem::monomial_half(-1, 1).is_in_qinv_nonneg());
        assert!(RingElem::zero().is_in_qinv_nonneg());
        assert!(!RingElem::monomial_half(3, 1).is_in_a());
        assert!(!l(&[(0, 1)]).has_zero_constant_term());
        assert!(l(&[(-4, -1)]).is_unit());
        assert!(!l(&[(0, 2)]).is_unit());
    }

    #[test]
    fn human_format() {
        assert_eq!(l(&[(-1, 1), (-3, 1)]).to_string(), "q^-1 + q^-3");
        assert_eq!(l(&[(2, -1)]).to_string(), "-q^2");
        assert_eq!(l(&[(1, 1), (0, -1)]).to_string(), "q - 1");
        assert_eq!(l(&[(4, 1), (2, 1), (0, 2)]).to_string(), "q^4 + q^2 + 2");
        assert_eq!(RingElem::monomial_half(3, -2).to_string(), "-2q^(3/2)");
        assert_eq!(RingElem::monomial_half(-1, 1).to_string(), "q^(-1/2)");
        assert_eq!(RingElem::zero().to_string(), "0");
    }

    #[test]
    fn wire_format() {
        let a = l(&[(-1, 1), (2, -3)]);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"[[-2,"1"],[4,"-3"]]"#);
        let back: RingElem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn binomial_symmetry_and_factorial_quotient() {
        for n in 0..=12 {
            for r in 0..=n {
                let b = quantum_binomial(n, r).unwrap();
                assert_eq!(b, quantum_binomial(n, n - r).unwrap());
                let den = &quantum_factorial(r) * &quantum_factorial(n - r);
                assert_eq!(quantum_factorial(n).exact_div(&den).unwrap(), b);
            }
            assert!(quantum(n).is_bar_invariant());
        }
    }

    #[test]
    fn big_coefficients_do_not_overflow() {
        let x = l(&[(1, 1), (0, 1)]).pow(200);
        assert_eq!(x.coeff_half(400), BigInt::from(1));
        assert!(x.coeff_half(200).bits() > 190);
    }

    fn arb_elem() -> impl Strategy<Value = RingElem> {
        prop::collection::vec((-8i64..8, -20i64..20), 0..6).prop_map(|v| {
            RingElem::from_half_terms(v.into_iter().map(|(h, c)| (h, BigInt::from(c))))
        })
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_elem(), b in arb_elem(), c in arb_elem()) {
            prop_assert_eq!(&(&a + &b) - &b, a.clone());
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!((&a * &b).bar(), &a.bar() * &b.bar());
            prop_assert_eq!(a.bar().bar(), a.clone());
        }

        #[test]
        fn division_round_trip(a in arb_elem(), d in arb_elem()) {
            prop_assume!(!d.is_zero());
            let prod = &a * &d;
            prop_assert_eq!(prod.exact_div(&d).unwrap(), a.clone());
            if let Ok(c) = a.exact_div(&d) {
                prop_assert_eq!(&c * &d, a);
            }
        }
    }
}
