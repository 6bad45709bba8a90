//! Tensor products `Λ_d = Λ_{d_1} ⊗ ⋯ ⊗ Λ_{d_l}` with their standard bases,
//! the action of `K^{±1}`, `E`, `F` and divided powers, and the twisted inner product.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orbits;
use crate::qring::{quantum, quantum_binomial, quantum_factorial, RingElem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModuleError {
    #[error("a composition needs at least one part")]
    EmptyComposition,
    #[error("cannot parse composition {input:?}: {reason} at position {position}")]
    Parse {
        input: String,
        position: usize,
        reason: String,
    },
    #[error("index {index:?} is not valid for composition {ambient:?}")]
    InvalidIndex {
        ambient: Vec<usize>,
        index: Vec<usize>,
    },
    #[error("ambient mismatch: {left:?} vs {right:?}")]
    AmbientMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("integrality violation: {0}")]
    IntegralityViolation(String),
    #[error("image of {index:?} does not live in the codomain {codomain:?}")]
    CodomainMismatch {
        index: Vec<usize>,
        codomain: Vec<usize>,
    },
}

/// A sequence `(d_1, …, d_l)` of nonnegative integers, `l ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Composition(Vec<usize>);

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self, ModuleError> {
        if parts.is_empty() {
            return Err(ModuleError::EmptyComposition);
        }
        Ok(Self(parts))
    }

    /// `1^d = (1, …, 1)`.
    pub fn ones(d: usize) -> Self {
        Self(vec![1; d.max(1)])
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `∏ (d_k + 1)`.
    pub fn dim(&self) -> usize {
        self.0.iter().map(|d| d + 1).product()
    }

    /// `(d_1..d_cut)` and `(d_{cut+1}..d_l)`; `None` unless `1 ≤ cut < l`.
    pub fn split_at(&self, cut: usize) -> Option<(Composition, Composition)> {
        if cut == 0 || cut >= self.len() {
            return None;
        }
        Some((Self(self.0[..cut].to_vec()), Self(self.0[cut..].to_vec())))
    }

    pub fn concat(&self, other: &Composition) -> Composition {
        Self(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Swaps parts `i` and `i + 1` (0-based).
    pub fn swapped(&self, i: usize) -> Composition {
        let mut parts = self.0.clone();
        parts.swap(i, i + 1);
        Self(parts)
    }

    pub fn is_valid_index(&self, r: &OrbitIndex) -> bool {
        r.0.len() == self.0.len() && r.0.iter().zip(&self.0).all(|(r, d)| r <= d)
    }

    pub fn check_index(&self, r: &OrbitIndex) -> Result<(), ModuleError> {
        if self.is_valid_index(r) {
            Ok(())
        } else {
            Err(ModuleError::InvalidIndex {
                ambient: self.0.clone(),
                index: r.0.clone(),
            })
        }
    }

    /// Exponent of `q` in the `K`-eigenvalue of `v_r`: `d - 2r`.
    pub fn weight(&self, r: &OrbitIndex) -> i64 {
        self.total() as i64 - 2 * r.total() as i64
    }
}

impl TryFrom<Vec<usize>> for Composition {
    type Error = ModuleError;
    fn try_from(parts: Vec<usize>) -> Result<Self, ModuleError> {
        Composition::new(parts)
    }
}

impl From<Composition> for Vec<usize> {
    fn from(c: Composition) -> Vec<usize> {
        c.0
    }
}

/// Parses a comma-separated list such as `"2,2"`.
pub fn parse_usize_list(input: &str) -> Result<Vec<usize>, ModuleError> {
    let mut out = Vec::new();
    let mut position = 0;
    for piece in input.split(',') {
        let trimmed = piece.trim();
        let offset = position + piece.find(trimmed).unwrap_or(0);
        let value = trimmed.parse::<usize>().map_err(|_| ModuleError::Parse {
            input: input.to_string(),
            position: offset,
            reason: if trimmed.is_empty() {
                "empty entry".to_string()
            } else {
                format!("expected a nonnegative integer, found {trimmed:?}")
            },
        })?;
        out.push(value);
        position += piece.len() + 1;
    }
    Ok(out)
}

impl FromStr for Composition {
    type Err = ModuleError;
    fn from_str(s: &str) -> Result<Self, ModuleError> {
        Composition::new(parse_usize_list(s)?)
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

fn write_tuple(f: &mut fmt::Formatter<'_>, xs: &[usize]) -> fmt::Result {
    write!(f, "(")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

/// Index `r = (r_1, …, r_l)` of the standard basis vector `v_r = v_{r_1} ⊗ ⋯ ⊗ v_{r_l}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrbitIndex(Vec<usize>);

impl OrbitIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn split_at(&self, cut: usize) -> (OrbitIndex, OrbitIndex) {
        (Self(self.0[..cut].to_vec()), Self(self.0[cut..].to_vec()))
    }

    pub fn concat(&self, other: &OrbitIndex) -> OrbitIndex {
        Self(self.0.iter().chain(&other.0).copied().collect())
    }
}

impl From<Vec<usize>> for OrbitIndex {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[usize; N]> for OrbitIndex {
    fn from(v: [usize; N]) -> Self {
        Self(v.to_vec())
    }
}

impl fmt::Display for OrbitIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

/// All valid indices of `Λ_d` at level `r`, in the closure-compatible linear order.
pub fn enumerate_basis(d: &Composition, r: usize) -> Vec<OrbitIndex> {
    orbits::linear_extension(d, r)
}

/// Valid indices at level `r` in lexicographic order.
pub(crate) fn indices_at_level(d: &Composition, r: usize) -> Vec<OrbitIndex> {
    fn go(parts: &[usize], left: usize, acc: &mut Vec<usize>, out: &mut Vec<OrbitIndex>) {
        match parts.split_first() {
            None => {
                if left == 0 {
                    out.push(OrbitIndex(acc.clone()));
                }
            }
            Some((&dk, rest)) => {
                let room: usize = rest.iter().sum();
                for rk in 0..=dk.min(left) {
                    if left - rk > room {
                        continue;
                    }
                    acc.push(rk);
                    go(rest, left - rk, acc, out);
                    acc.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    if r <= d.total() {
        go(d.parts(), r, &mut Vec::new(), &mut out);
    }
    out
}

/// Every standard basis index of `Λ_d`, level by level.
pub fn full_basis(d: &Composition) -> Vec<OrbitIndex> {
    (0..=d.total())
        .flat_map(|r| enumerate_basis(d, r))
        .collect()
}

/// A finite `RingElem`-combination of standard basis vectors of `Λ_d`.
#[derive(Clone, PartialEq, Eq)]
pub struct ModuleVector {
    ambient: Composition,
    terms: BTreeMap<OrbitIndex, RingElem>,
}

impl ModuleVector {
    pub fn zero(ambient: &Composition) -> Self {
        Self {
            ambient: ambient.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn basis(ambient: &Composition, r: OrbitIndex) -> Result<Self, ModuleError> {
        ambient.check_index(&r)?;
        let mut out = Self::zero(ambient);
        out.terms.insert(r, RingElem::one());
        Ok(out)
    }

    pub fn from_terms(
        ambient: &Composition,
        terms: impl IntoIterator<Item = (OrbitIndex, RingElem)>,
    ) -> Result<Self, ModuleError> {
        let mut out = Self::zero(ambient);
        for (r, c) in terms {
            ambient.check_index(&r)?;
            out.add_term(r, &c);
        }
        Ok(out)
    }

    pub fn ambient(&self) -> &Composition {
        &self.ambient
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OrbitIndex, &RingElem)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, r: &OrbitIndex) -> RingElem {
        self.terms.get(r).cloned().unwrap_or_default()
    }

    /// Terms ordered by level, then by the closure-compatible linear order.
    pub fn sorted_terms(&self) -> Vec<(&OrbitIndex, &RingElem)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by_cached_key(|(r, _)| orbits::order_key(&self.ambient, r));
        v
    }

    /// Common level of all terms, if the vector is homogeneous and nonzero.
    pub fn level(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(OrbitIndex::total);
        let first = it.next()?;
        it.all(|t| t == first).then_some(first)
    }

    pub(crate) fn add_term(&mut self, r: OrbitIndex, c: &RingElem) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&r) {
            Some(slot) => {
                *slot += c;
                if slot.is_zero() {
                    self.terms.remove(&r);
                }
            }
            None => {
                self.terms.insert(r, c.clone());
            }
        }
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: &RingElem, other: &ModuleVector) {
        assert_eq!(
            self.ambient, other.ambient,
            "ambient mismatch in add_scaled"
        );
        if c.is_zero() {
            return;
        }
        for (r, a) in &other.terms {
            self.add_term(r.clone(), &(c * a));
        }
    }

    pub fn scale(&self, c: &RingElem) -> ModuleVector {
        let mut out = Self::zero(&self.ambient);
        out.add_scaled(c, self);
        out
    }

    pub fn sub(&self, other: &ModuleVector) -> ModuleVector {
        let mut out = self.clone();
        out.add_scaled(&RingElem::from_int(-1), other);
        out
    }

    pub fn add(&self, other: &ModuleVector) -> ModuleVector {
        let mut out = self.clone();
        out.add_scaled(&RingElem::one(), other);
        out
    }

    /// Applies `bar` to every coefficient; basis vectors stay put.
    pub fn bar_coeffs(&self) -> ModuleVector {
        Self {
            ambient: self.ambient.clone(),
            terms: self
                .terms
                .iter()
                .map(|(r, c)| (r.clone(), c.bar()))
                .collect(),
        }
    }

    /// Applies `f` to every basis vector and extends linearly.
    pub fn map_basis(
        &self,
        target: &Composition,
        mut f: impl FnMut(&OrbitIndex) -> ModuleVector,
    ) -> ModuleVector {
        let mut out = Self::zero(target);
        for (r, c) in &self.terms {
            out.add_scaled(c, &f(r));
        }
        out
    }

    pub fn try_map_basis<E>(
        &self,
        target: &Composition,
        mut f: impl FnMut(&OrbitIndex) -> Result<ModuleVector, E>,
    ) -> Result<ModuleVector, E> {
        let mut out = Self::zero(target);
        for (r, c) in &self.terms {
            out.add_scaled(c, &f(r)?);
        }
        Ok(out)
    }
}

/// `u ⊗ w ∈ Λ_{d' ++ d''}`.
pub fn tensor(u: &ModuleVector, w: &ModuleVector) -> ModuleVector {
    let ambient = u.ambient.concat(&w.ambient);
    let mut out = ModuleVector::zero(&ambient);
    for (a, ca) in &u.terms {
        for (b, cb) in &w.terms {
            out.add_term(a.concat(b), &(ca * cb));
        }
    }
    out
}

impl fmt::Display for ModuleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self
            .sorted_terms()
            .into_iter()
            .rev()
            .map(|(r, c)| (format!("v{r}"), c));
        f.write_str(&render_sum(terms))
    }
}

/// `c_1 x_1 + c_2 x_2 - …` with multi-term coefficients parenthesized.
pub fn render_sum<'a>(terms: impl IntoIterator<Item = (String, &'a RingElem)>) -> String {
    let mut out = String::new();
    for (label, c) in terms {
        let (neg, mag) = if c.num_terms() == 1 && c.terms().all(|(_, x)| x.is_negative()) {
            (true, -c)
        } else {
            (false, c.clone())
        };
        let body = if mag.is_one() {
            label
        } else if mag.num_terms() == 1 {
            format!("{mag} {label}")
        } else {
            format!("({mag}) {label}")
        };
        match (out.is_empty(), neg) {
            (true, false) => out.push_str(&body),
            (true, true) => out.push_str(&format!("-{body}")),
            (false, false) => out.push_str(&format!(" + {body}")),
            (false, true) => out.push_str(&format!(" - {body}")),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl fmt::Debug for ModuleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModuleVector[{}]({self})", self.ambient)
    }
}

#[derive(Serialize, Deserialize)]
struct VectorTermWire {
    r: OrbitIndex,
    coeff: RingElem,
}

#[derive(Serialize, Deserialize)]
struct VectorWire {
    d: Composition,
    terms: Vec<VectorTermWire>,
}

impl Serialize for ModuleVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        VectorWire {
            d: self.ambient.clone(),
            terms: self
                .sorted_terms()
                .into_iter()
                .map(|(r, c)| VectorTermWire {
                    r: r.clone(),
                    coeff: c.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModuleVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = VectorWire::deserialize(deserializer)?;
        ModuleVector::from_terms(&wire.d, wire.terms.into_iter().map(|t| (t.r, t.coeff)))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    K,
    E,
    F,
}

/// `K^{±1}`: `v_r ↦ q^{±(d - 2r)} v_r`.
pub fn act_k(u: &ModuleVector, inverse: bool) -> ModuleVector {
    let d = &u.ambient;
    u.map_basis(d, |r| {
        let w = d.weight(r);
        single(d, r.clone(), RingElem::q_pow(if inverse { -w } else { w }))
    })
}

fn single(d: &Composition, r: OrbitIndex, c: RingElem) -> ModuleVector {
    let mut out = ModuleVector::zero(d);
    out.add_term(r, &c);
    out
}

fn slot_weight(d: usize, r: usize) -> i64 {
    d as i64 - 2 * r as i64
}

/// `E` through `ΔE = E ⊗ 1 + K ⊗ E`, iterated over the factors.
pub fn act_e(u: &ModuleVector) -> ModuleVector {
    let d = &u.ambient;
    u.map_basis(d, |r| e_on_basis(d, r))
}

fn e_on_basis(d: &Composition, r: &OrbitIndex) -> ModuleVector {
    let mut out = ModuleVector::zero(d);
    let mut k_exp = 0;
    for (k, (&dk, &rk)) in d.parts().iter().zip(r.entries()).enumerate() {
        if rk > 0 {
            let mut idx = r.0.clone();
            idx[k] -= 1;
            let c = RingElem::q_pow(k_exp) * quantum(dk - rk + 1);
            out.add_term(OrbitIndex(idx), &c);
        }
        k_exp += slot_weight(dk, rk);
    }
    out
}

/// `F` through `ΔF = F ⊗ K^{-1} + 1 ⊗ F`, iterated over the factors.
pub fn act_f(u: &ModuleVector) -> ModuleVector {
    let d = &u.ambient;
    u.map_basis(d, |r| f_on_basis(d, r))
}

fn f_on_basis(d: &Composition, r: &OrbitIndex) -> ModuleVector {
    let mut out = ModuleVector::zero(d);
    let mut kinv_exp = 0;
    for (k, (&dk, &rk)) in d.parts().iter().zip(r.entries()).enumerate().rev() {
        if rk < dk {
            let mut idx = r.0.clone();
            idx[k] += 1;
            let c = RingElem::q_pow(-kinv_exp) * quantum(rk + 1);
            out.add_term(OrbitIndex(idx), &c);
        }
        kinv_exp += slot_weight(dk, rk);
    }
    out
}

/// Applies a generator once.
pub fn act(u: &ModuleVector, gen: Generator) -> ModuleVector {
    match gen {
        Generator::K => act_k(u, false),
        Generator::E => act_e(u),
        Generator::F => act_f(u),
    }
}

/// `E^{(n)}` or `F^{(n)}`: the `n`-th power divided exactly by `[n]_q!`.
pub fn act_divided(
    u: &ModuleVector,
    gen: Generator,
    n: usize,
) -> Result<ModuleVector, ModuleError> {
    let step: fn(&ModuleVector) -> ModuleVector = match gen {
        Generator::E => act_e,
        Generator::F => act_f,
        Generator::K => {
            return Err(ModuleError::IntegralityViolation(
                "divided powers are defined for E and F only".into(),
            ))
        }
    };
    let mut v = u.clone();
    for _ in 0..n {
        v = step(&v);
    }
    let fact = quantum_factorial(n);
    let mut out = ModuleVector::zero(&v.ambient);
    for (r, c) in v.terms {
        let c = c.exact_div(&fact).map_err(|e| {
            ModuleError::IntegralityViolation(format!("{gen:?}^({n}) on {}: {e}", u.ambient))
        })?;
        out.add_term(r, &c);
    }
    Ok(out)
}

/// `(v_r, v_r) = ∏_k [d_k choose r_k]_q q^{-r_k(d_k - r_k)}`.
pub fn basis_pairing(d: &Composition, r: &OrbitIndex) -> RingElem {
    d.parts()
        .iter()
        .zip(r.entries())
        .map(|(&dk, &rk)| {
            let b = quantum_binomial(dk, rk).expect("valid index");
            b * RingElem::q_pow(-((rk * (dk - rk)) as i64))
        })
        .fold(RingElem::one(), |acc, x| acc * x)
}

/// The symmetric bilinear form with orthogonal standard basis.
pub fn inner_product(u: &ModuleVector, w: &ModuleVector) -> Result<RingElem, ModuleError> {
    if u.ambient != w.ambient {
        return Err(ModuleError::AmbientMismatch {
            left: u.ambient.0.clone(),
            right: w.ambient.0.clone(),
        });
    }
    let (small, large) = if u.len() <= w.len() { (u, w) } else { (w, u) };
    Ok(small
        .terms
        .iter()
        .filter_map(|(r, a)| {
            large
                .terms
                .get(r)
                .map(|b| a * b * basis_pairing(&u.ambient, r))
        })
        .sum())
}

/// The anti-automorphism `ρ`: `ρ(K) = K`, `ρ(E) = qKF`, `ρ(F) = qK^{-1}E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwistedOp {
    pub gen: Generator,
}

pub fn rho_twist(gen: Generator) -> TwistedOp {
    TwistedOp { gen }
}

impl TwistedOp {
    pub fn apply(&self, u: &ModuleVector) -> ModuleVector {
        let q = RingElem::q_pow(1);
        match self.gen {
            Generator::K => act_k(u, false),
            Generator::E => act_k(&act_f(u), false).scale(&q),
            Generator::F => act_k(&act_e(u), true).scale(&q),
        }
    }

    /// The operator as a map on all of `Λ_d`.
    pub fn to_linmap(&self, d: &Composition) -> LinMap {
        let shape = Shape::all(d);
        LinMap::from_fn(&shape, &shape, |r| {
            self.apply(&ModuleVector::basis(d, r.clone()).expect("basis index"))
        })
    }
}

/// A weight space of `Λ_d`, or the whole module when `level` is `None`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub composition: Composition,
    pub level: Option<usize>,
}

impl Shape {
    pub fn all(d: &Composition) -> Self {
        Self {
            composition: d.clone(),
            level: None,
        }
    }

    pub fn level(d: &Composition, r: usize) -> Self {
        Self {
            composition: d.clone(),
            level: Some(r),
        }
    }

    pub fn basis(&self) -> Vec<OrbitIndex> {
        match self.level {
            Some(r) => enumerate_basis(&self.composition, r),
            None => full_basis(&self.composition),
        }
    }

    pub fn contains(&self, r: &OrbitIndex) -> bool {
        self.composition.is_valid_index(r) && self.level.is_none_or(|l| r.total() == l)
    }
}

/// A linear map between weight spaces, stored column by column in standard bases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinMap {
    pub domain: Shape,
    pub codomain: Shape,
    columns: BTreeMap<OrbitIndex, ModuleVector>,
}

impl LinMap {
    pub fn from_fn(
        domain: &Shape,
        codomain: &Shape,
        mut f: impl FnMut(&OrbitIndex) -> ModuleVector,
    ) -> Self {
        let columns = domain.basis().into_iter().map(|r| {
            let img = f(&r);
            (r, img)
        });
        Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            columns: columns.collect(),
        }
    }

    pub fn try_from_fn<E>(
        domain: &Shape,
        codomain: &Shape,
        mut f: impl FnMut(&OrbitIndex) -> Result<ModuleVector, E>,
    ) -> Result<Self, E> {
        let mut columns = BTreeMap::new();
        for r in domain.basis() {
            let img = f(&r)?;
            columns.insert(r, img);
        }
        Ok(Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            columns,
        })
    }

    pub fn identity(shape: &Shape) -> Self {
        let d = &shape.composition;
        Self::from_fn(shape, shape, |r| {
            ModuleVector::basis(d, r.clone()).expect("basis index")
        })
    }

    /// Checks that every column lives in the codomain.
    pub fn validate(&self) -> Result<(), ModuleError> {
        for (r, img) in &self.columns {
            let ok = img.ambient == self.codomain.composition
                && img.terms.keys().all(|s| self.codomain.contains(s));
            if !ok {
                return Err(ModuleError::CodomainMismatch {
                    index: r.0.clone(),
                    codomain: self.codomain.composition.0.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn column(&self, r: &OrbitIndex) -> Option<&ModuleVector> {
        self.columns.get(r)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&OrbitIndex, &ModuleVector)> {
        self.columns.iter()
    }

    pub fn apply(&self, u: &ModuleVector) -> Result<ModuleVector, ModuleError> {
        if u.ambient != self.domain.composition {
            return Err(ModuleError::AmbientMismatch {
                left: u.ambient.0.clone(),
                right: self.domain.composition.0.clone(),
            });
        }
        let target = &self.codomain.composition;
        u.try_map_basis(target, |r| {
            self.columns
                .get(r)
                .cloned()
                .ok_or_else(|| ModuleError::InvalidIndex {
                    ambient: self.domain.composition.0.clone(),
                    index: r.0.clone(),
                })
        })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinMap) -> Result<LinMap, ModuleError> {
        if inner.codomain.composition != self.domain.composition {
            return Err(ModuleError::AmbientMismatch {
                left: inner.codomain.composition.0.clone(),
                right: self.domain.composition.0.clone(),
            });
        }
        let mut columns = BTreeMap::new();
        for (r, img) in &inner.columns {
            columns.insert(r.clone(), self.apply(img)?);
        }
        Ok(LinMap {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            columns,
        })
    }

    /// Matrix with `m[i][j]` = coefficient of `rows[i]` in the image of `cols[j]`.
    pub fn matrix(&self, rows: &[OrbitIndex], cols: &[OrbitIndex]) -> Vec<Vec<RingElem>> {
        rows.iter()
            .map(|s| {
                cols.iter()
                    .map(|r| self.columns.get(r).map(|v| v.coeff(s)).unwrap_or_default())
                    .collect()
            })
            .collect()
    }

    /// Restricts the domain to one weight level.
    pub fn restrict_level(&self, r: usize) -> LinMap {
        LinMap {
            domain: Shape::level(&self.domain.composition, r),
            codomain: Shape::level(&self.codomain.composition, r),
            columns: self
                .columns
                .iter()
                .filter(|(idx, _)| idx.total() == r)
                .map(|(a, b)| (a.clone(), b.clone()))
                .collect(),
        }
    }

    /// Whether every basis vector keeps its level.
    pub fn preserves_levels(&self) -> bool {
        self.columns
            .iter()
            .all(|(r, img)| img.terms.keys().all(|s| s.total() == r.total()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(p: &[usize]) -> Composition {
        Composition::new(p.to_vec()).unwrap()
    }

    fn v(d: &Composition, r: &[usize]) -> ModuleVector {
        ModuleVector::basis(d, OrbitIndex::new(r.to_vec())).unwrap()
    }

    fn l(pairs: &[(i64, i64)]) -> RingElem {
        RingElem::laurent(pairs)
    }

    #[test]
    fn parse_compositions() {
        assert_eq!("2,2".parse::<Composition>().unwrap(), comp(&[2, 2]));
        assert_eq!(" 1, 0 ,3".parse::<Composition>().unwrap(), comp(&[1, 0, 3]));
        match "2,x".parse::<Composition>() {
            Err(ModuleError::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("unexpected {other:?}"),
        }
        match "1,,2".parse::<Composition>() {
            Err(ModuleError::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Composition::new(vec![]).is_err());
    }

    #[test]
    fn basis_enumeration() {
        let d = comp(&[2, 2]);
        let got: Vec<_> = enumerate_basis(&d, 2)
            .into_iter()
            .map(|r| r.entries().to_vec())
            .collect();
        assert_eq!(got, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_basis(&comp(&[5]), 3), vec![OrbitIndex::from([3])]);
        assert!(enumerate_basis(&comp(&[1, 1]), 3).is_empty());
    }

    #[test]
    fn k_action() {
        let d = comp(&[3]);
        assert_eq!(
            act_k(&v(&d, &[2]), false),
            v(&d, &[2]).scale(&RingElem::q_pow(-1))
        );
        let d = comp(&[1, 1]);
        assert_eq!(act_k(&v(&d, &[1, 0]), false), v(&d, &[1, 0]));
        let u = v(&d, &[0, 0]).add(&v(&d, &[1, 1]));
        assert_eq!(act_k(&act_k(&u, true), false), u);
    }

    #[test]
    fn e_f_action() {
        let d = comp(&[3]);
        assert_eq!(act_e(&v(&d, &[2])), v(&d, &[1]).scale(&quantum(2)));
        assert!(act_e(&v(&d, &[0])).is_zero());
        assert!(act_f(&v(&d, &[3])).is_zero());

        let d = comp(&[1, 1]);
        let expect = v(&d, &[1, 0])
            .scale(&RingElem::q_pow(-1))
            .add(&v(&d, &[0, 1]));
        assert_eq!(act_f(&v(&d, &[0, 0])), expect);
        let expect = v(&d, &[0, 1]).add(&v(&d, &[1, 0]).scale(&RingElem::q_pow(-1)));
        assert_eq!(act_e(&v(&d, &[1, 1])), expect);
    }

    #[test]
    fn divided_powers() {
        for dd in 0..6 {
            let d = comp(&[dd]);
            for r in 0..=dd {
                let got = act_divided(&v(&d, &[0]), Generator::F, r).unwrap();
                assert_eq!(got, v(&d, &[r]));
            }
        }
        let d = comp(&[1, 1]);
        let u = v(&d, &[0, 1]).add(&v(&d, &[1, 1]));
        assert_eq!(act_divided(&u, Generator::E, 0).unwrap(), u);
        assert_eq!(
            act_divided(&v(&d, &[0, 0]), Generator::F, 2).unwrap(),
            v(&d, &[1, 1])
        );
    }

    #[test]
    fn pairings() {
        for dd in 0..6 {
            let d = comp(&[dd]);
            for r in 0..=dd {
                let expect =
                    quantum_binomial(dd, r).unwrap() * RingElem::q_pow(-((r * (dd - r)) as i64));
                assert_eq!(inner_product(&v(&d, &[r]), &v(&d, &[r])).unwrap(), expect);
            }
        }
        let d = comp(&[1, 1]);
        assert!(inner_product(&v(&d, &[1, 0]), &v(&d, &[0, 1]))
            .unwrap()
            .is_zero());
        let b = v(&d, &[0, 1]).add(&v(&d, &[1, 0]).scale(&RingElem::q_pow(-1)));
        assert_eq!(inner_product(&b, &b).unwrap(), l(&[(0, 1), (-2, 1)]));
        assert!(matches!(
            inner_product(&b, &v(&comp(&[2]), &[1])),
            Err(ModuleError::AmbientMismatch { .. })
        ));
    }

    #[test]
    fn twisted_operators() {
        let d = comp(&[1]);
        assert_eq!(rho_twist(Generator::E).apply(&v(&d, &[0])), v(&d, &[1]));
        assert_eq!(
            rho_twist(Generator::K).apply(&v(&d, &[1])),
            act_k(&v(&d, &[1]), false)
        );
        // (E v_1, v_0) = (v_1, ρ(E) v_0) = [2] on Λ_2.
        let d = comp(&[2]);
        let lhs = inner_product(&act_e(&v(&d, &[1])), &v(&d, &[0])).unwrap();
        let rhs =
            inner_product(&v(&d, &[1]), &rho_twist(Generator::E).apply(&v(&d, &[0]))).unwrap();
        assert_eq!(lhs, quantum(2));
        assert_eq!(rhs, quantum(2));
    }

    #[test]
    fn vector_wire_format() {
        let d = comp(&[1, 1]);
        let b = v(&d, &[0, 1]).add(&v(&d, &[1, 0]).scale(&RingElem::q_pow(-1)));
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(
            json,
            r#"{"d":[1,1],"terms":[{"r":[1,0],"coeff":[[-2,"1"]]},{"r":[0,1],"coeff":[[0,"1"]]}]}"#
        );
        let back: ModuleVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<ModuleVector>(
            r#"{"d":[1],"terms":[{"r":[2],"coeff":[]}]}"#
        )
        .is_err());
    }

    #[test]
    fn linmap_compose_and_matrix() {
        let d = comp(&[1, 1]);
        let shape = Shape::all(&d);
        let e = LinMap::from_fn(&shape, &shape, |r| {
            act_e(&ModuleVector::basis(&d, r.clone()).unwrap())
        });
        let f = LinMap::from_fn(&shape, &shape, |r| {
            act_f(&ModuleVector::basis(&d, r.clone()).unwrap())
        });
        let ef = e.compose(&f).unwrap();
        let u = v(&d, &[0, 1]);
        assert_eq!(ef.apply(&u).unwrap(), act_e(&act_f(&u)));
        let id = LinMap::identity(&shape);
        assert_eq!(id.compose(&e).unwrap(), e);
        let basis = enumerate_basis(&d, 1);
        let m = id.restrict_level(1).matrix(&basis, &basis);
        assert!(m[0][0].is_one() && m[1][1].is_one() && m[0][1].is_zero());
        assert!(!e.preserves_levels());
        e.validate().unwrap();
    }

    #[test]
    fn dimension_count() {
        for parts in [vec![2, 1], vec![1, 0, 3], vec![2, 2, 2]] {
            let d = comp(&parts);
            let total: usize = (0..=d.total()).map(|r| enumerate_basis(&d, r).len()).sum();
            assert_eq!(total, d.dim());
        }
    }
}
