//! Bar involution on tensor modules, the triangular algorithm for the canonical
//! basis, the split expansion `Λ_d ≅ Λ_{d'} ⊗ Λ_{d''}` in canonical bases, and the
//! refinement embedding `Λ_d → Λ_{1^d}`.
//!
//! On a single factor the bar involution fixes every `v_r`. On `M' ⊗ M''` it is
//! `Θ ∘ (Ψ' ⊗ Ψ'')` with `Θ = Σ_n κ_n F^{(n)} ⊗ E^{(n)}`, where the coefficients `κ_n`
//! are not hard-coded but solved from the requirement `Ψ(F^{(n)} v_(0,0)) = F^{(n)} v_(0,0)`
//! on `Λ_(n,n)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::TableCache;
use crate::orbits::{closure_leq, closure_lt, dense_cell, OrbitError};
use crate::qring::RingElem;
use crate::repmod::{
    act_divided, enumerate_basis, render_sum, tensor, Composition, Generator, LinMap, ModuleError,
    ModuleVector, OrbitIndex, Shape,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("quasi-R coefficient κ_{n} is underdetermined: {reason}")]
    ConventionUnderdetermined { n: usize, reason: String },
    #[error("κ_{needed} requested but only κ_0..κ_{available} are known")]
    QuasiROrder { needed: usize, available: usize },
    #[error(
        "in {ambient}: Ψ(v{index}) - v{index} has support {support} outside the closure of {index}"
    )]
    TriangularityViolation {
        ambient: Composition,
        index: OrbitIndex,
        support: OrbitIndex,
    },
    #[error("in {ambient}: correction coefficient {coeff} at {support} for b{index} is not bar-antisymmetric")]
    ObstructionNotAntisymmetric {
        ambient: Composition,
        index: OrbitIndex,
        support: OrbitIndex,
        coeff: String,
    },
    #[error("in {ambient}: correction coefficient {coeff} at {support} for b{index} has a constant term")]
    NonzeroConstantTerm {
        ambient: Composition,
        index: OrbitIndex,
        support: OrbitIndex,
        coeff: String,
    },
    #[error("cut {cut} is out of range for a composition with {len} parts")]
    CutOutOfRange { cut: usize, len: usize },
    #[error("level {level} is out of range for {ambient}")]
    LevelOutOfRange { ambient: Composition, level: usize },
    #[error("canonical table for {ambient} at level {level} has no row {index}")]
    MissingRow {
        ambient: Composition,
        level: usize,
        index: OrbitIndex,
    },
}

/// The coefficients `κ_0 = 1, κ_1, …, κ_N` of the quasi-R-matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiR {
    kappa: Vec<RingElem>,
}

impl QuasiR {
    /// Solves for `κ_1..κ_N` one order at a time.
    pub fn compute(order: usize) -> Result<Self, CanonError> {
        let mut kappa = vec![RingElem::one()];
        for n in 1..=order {
            let k = solve_kappa(&kappa, n)?;
            kappa.push(k);
        }
        Ok(Self { kappa })
    }

    /// Process-wide memoized coefficients up to at least `order`.
    pub fn cached(order: usize) -> Result<Self, CanonError> {
        static CACHE: OnceLock<Mutex<Vec<RingElem>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(vec![RingElem::one()]));
        let mut kappa = cache.lock().unwrap_or_else(|e| e.into_inner());
        while kappa.len() <= order {
            let n = kappa.len();
            let k = solve_kappa(&kappa, n)?;
            kappa.push(k);
        }
        Ok(Self {
            kappa: kappa.clone(),
        })
    }

    pub fn from_coefficients(kappa: Vec<RingElem>) -> Self {
        Self { kappa }
    }

    pub fn order(&self) -> usize {
        self.kappa.len() - 1
    }

    pub fn kappa(&self, n: usize) -> Option<&RingElem> {
        self.kappa.get(n)
    }

    pub fn coefficients(&self) -> &[RingElem] {
        &self.kappa
    }

    /// A copy with `κ_n` negated, for mutation tests.
    pub fn with_negated(&self, n: usize) -> Self {
        let mut kappa = self.kappa.clone();
        if let Some(k) = kappa.get_mut(n) {
            *k = -&*k;
        }
        Self { kappa }
    }
}

// Ψ on Λ_(n,n) is Θ on the factorwise bar. With κ_n set to zero the only missing
// contribution to Ψ(F^{(n)} v_(0,0)) is κ_n · X where X collects the F^{(n)} ⊗ E^{(n)}
// terms; requiring bar invariance pins κ_n down as long as X has a unit coefficient.
fn solve_kappa(known: &[RingElem], n: usize) -> Result<RingElem, CanonError> {
    let d = Composition::new(vec![n, n])?;
    let mut trial = known.to_vec();
    trial.truncate(n);
    trial.push(RingElem::zero());
    let engine = BarInvolution::new(QuasiR { kappa: trial });

    let top = ModuleVector::basis(&d, OrbitIndex::new(vec![0, 0]))?;
    let u = act_divided(&top, Generator::F, n)?;
    let partial = engine.apply(&u)?;
    let residual = u.sub(&partial);

    let x = engine.theta_term(&d, 1, &u.bar_coeffs(), n)?;
    let underdetermined = |reason: String| CanonError::ConventionUnderdetermined { n, reason };
    let (pivot, pivot_coeff) = x
        .terms()
        .find(|(_, c)| c.is_unit())
        .ok_or_else(|| underdetermined(format!("no unit coefficient in {x}")))?;
    let k = residual
        .coeff(pivot)
        .exact_div(pivot_coeff)
        .map_err(|e| underdetermined(e.to_string()))?;
    if residual != x.scale(&k) {
        return Err(underdetermined(format!(
            "residual {residual} is not a multiple of {x}"
        )));
    }
    if !k.is_in_a() {
        return Err(underdetermined(format!(
            "κ_{n} = {k} has half-integral exponents"
        )));
    }
    Ok(k)
}

/// How `Ψ` splits a multi-factor module into two tensor factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Nesting {
    /// `M_1 ⊗ (M_2 ⊗ (⋯))`.
    Left,
    /// Split after slot `c` at the top, left-nested inside each half.
    TopCut(usize),
}

type PsiKey = (Composition, OrbitIndex, usize);
type DividedKey = (Composition, OrbitIndex, Generator, usize);

/// The bar involution `Ψ` together with memo tables for its basis images.
pub struct BarInvolution {
    quasi_r: QuasiR,
    nesting: Nesting,
    psi_memo: Mutex<HashMap<PsiKey, ModuleVector>>,
    divided_memo: Mutex<HashMap<DividedKey, ModuleVector>>,
}

impl fmt::Debug for BarInvolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BarInvolution")
            .field("quasi_r", &self.quasi_r)
            .field("nesting", &self.nesting)
            .finish()
    }
}

/// Quasi-R order available to [`BarInvolution::standard`]; enough for total `d ≤ 16`.
pub const STANDARD_ORDER: usize = 8;

impl BarInvolution {
    pub fn new(quasi_r: QuasiR) -> Self {
        Self {
            quasi_r,
            nesting: Nesting::Left,
            psi_memo: Mutex::new(HashMap::new()),
            divided_memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn standard() -> Result<Self, CanonError> {
        Ok(Self::new(QuasiR::cached(STANDARD_ORDER)?))
    }

    pub fn with_nesting(mut self, nesting: Nesting) -> Self {
        self.nesting = nesting;
        self
    }

    pub fn quasi_r(&self) -> &QuasiR {
        &self.quasi_r
    }

    pub fn nesting(&self) -> Nesting {
        self.nesting
    }

    /// `Ψ(u)`, anti-linear in the coefficients.
    pub fn apply(&self, u: &ModuleVector) -> Result<ModuleVector, CanonError> {
        let d = u.ambient().clone();
        let cut = match self.nesting {
            Nesting::TopCut(c) if c >= 1 && c < d.len() => c,
            Nesting::TopCut(c) if d.len() > 1 => {
                return Err(CanonError::CutOutOfRange {
                    cut: c,
                    len: d.len(),
                })
            }
            _ => 1,
        };
        self.apply_with_cut(u, cut)
    }

    fn apply_with_cut(&self, u: &ModuleVector, cut: usize) -> Result<ModuleVector, CanonError> {
        let d = u.ambient().clone();
        let mut out = ModuleVector::zero(&d);
        for (r, c) in u.terms() {
            out.add_scaled(&c.bar(), &self.psi_basis(&d, r, cut)?);
        }
        Ok(out)
    }

    /// `Ψ(v_r)` using a split after slot `cut` at the top level.
    fn psi_basis(
        &self,
        d: &Composition,
        r: &OrbitIndex,
        cut: usize,
    ) -> Result<ModuleVector, CanonError> {
        if d.len() == 1 {
            return Ok(ModuleVector::basis(d, r.clone())?);
        }
        let key = (d.clone(), r.clone(), cut);
        if let Some(v) = self.psi_memo.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let (d1, d2) = d
            .split_at(cut)
            .ok_or(CanonError::CutOutOfRange { cut, len: d.len() })?;
        let (r1, r2) = r.split_at(cut);
        let left = self.psi_basis(&d1, &r1, 1)?;
        let right = self.psi_basis(&d2, &r2, 1)?;
        let factorwise = tensor(&left, &right);
        let out = self.theta(d, cut, &factorwise)?;
        self.psi_memo.lock().unwrap().insert(key, out.clone());
        Ok(out)
    }

    /// `Θ(x) = Σ_n κ_n (F^{(n)} ⊗ E^{(n)}) x` with the tensor split after slot `cut`.
    fn theta(
        &self,
        d: &Composition,
        cut: usize,
        x: &ModuleVector,
    ) -> Result<ModuleVector, CanonError> {
        let (d1, d2) = d
            .split_at(cut)
            .ok_or(CanonError::CutOutOfRange { cut, len: d.len() })?;
        let top = d1.total().min(d2.total());
        let mut out = x.clone();
        for n in 1..=top {
            let term = self.theta_term(d, cut, x, n)?;
            if term.is_zero() {
                continue;
            }
            let k = self.quasi_r.kappa(n).ok_or(CanonError::QuasiROrder {
                needed: n,
                available: self.quasi_r.order(),
            })?;
            out.add_scaled(k, &term);
        }
        Ok(out)
    }

    /// `(F^{(n)} ⊗ E^{(n)}) x` without the `κ_n` factor.
    fn theta_term(
        &self,
        d: &Composition,
        cut: usize,
        x: &ModuleVector,
        n: usize,
    ) -> Result<ModuleVector, CanonError> {
        let (d1, d2) = d
            .split_at(cut)
            .ok_or(CanonError::CutOutOfRange { cut, len: d.len() })?;
        let mut out = ModuleVector::zero(d);
        for (r, c) in x.terms() {
            let (r1, r2) = r.split_at(cut);
            let f = self.divided(&d1, &r1, Generator::F, n)?;
            if f.is_zero() {
                continue;
            }
            let e = self.divided(&d2, &r2, Generator::E, n)?;
            if e.is_zero() {
                continue;
            }
            out.add_scaled(c, &tensor(&f, &e));
        }
        Ok(out)
    }

    fn divided(
        &self,
        d: &Composition,
        r: &OrbitIndex,
        gen: Generator,
        n: usize,
    ) -> Result<ModuleVector, CanonError> {
        let key = (d.clone(), r.clone(), gen, n);
        if let Some(v) = self.divided_memo.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = act_divided(&ModuleVector::basis(d, r.clone())?, gen, n)?;
        self.divided_memo.lock().unwrap().insert(key, v.clone());
        Ok(v)
    }
}

/// `b_r = v_r + Σ_{s ≺ r} c_{r,s} v_s` for every `r` on one level of `Λ_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalTable {
    ambient: Composition,
    level: usize,
    order: Vec<OrbitIndex>,
    rows: BTreeMap<OrbitIndex, ModuleVector>,
}

impl CanonicalTable {
    pub fn ambient(&self) -> &Composition {
        &self.ambient
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Row indices in the working linear order.
    pub fn order(&self) -> &[OrbitIndex] {
        &self.order
    }

    pub fn row(&self, r: &OrbitIndex) -> Result<&ModuleVector, CanonError> {
        self.rows.get(r).ok_or_else(|| CanonError::MissingRow {
            ambient: self.ambient.clone(),
            level: self.level,
            index: r.clone(),
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = (&OrbitIndex, &ModuleVector)> {
        self.order.iter().map(move |r| (r, &self.rows[r]))
    }

    /// `c_{r,s}`.
    pub fn coeff(&self, r: &OrbitIndex, s: &OrbitIndex) -> RingElem {
        self.rows.get(r).map(|b| b.coeff(s)).unwrap_or_default()
    }

    /// Coordinates of `u` (supported on this level) in the canonical basis.
    pub fn to_canonical(
        &self,
        u: &ModuleVector,
    ) -> Result<BTreeMap<OrbitIndex, RingElem>, CanonError> {
        let position: HashMap<&OrbitIndex, usize> =
            self.order.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let mut rest = u.clone();
        let mut out = BTreeMap::new();
        while let Some((s, c)) = rest.terms().max_by_key(|(s, _)| position.get(s).copied()) {
            if !position.contains_key(s) {
                return Err(CanonError::LevelOutOfRange {
                    ambient: self.ambient.clone(),
                    level: s.total(),
                });
            }
            let (s, c) = (s.clone(), c.clone());
            rest.add_scaled(&(-&c), self.row(&s)?);
            out.insert(s, c);
        }
        Ok(out)
    }

    /// Checks unitriangularity, support in the closure and positivity of every row.
    pub fn check_structure(&self) -> Result<(), String> {
        for (r, b) in self.rows() {
            if !b.coeff(r).is_one() {
                return Err(format!("b{r} has diagonal coefficient {}", b.coeff(r)));
            }
            for (s, c) in b.terms() {
                if s == r {
                    continue;
                }
                if !closure_lt(s, r).unwrap_or(false) {
                    return Err(format!("b{r} has support {s} outside its closure"));
                }
                if !c.is_in_qinv_nonneg() {
                    return Err(format!("c_{{{r},{s}}} = {c} is not in q^-1 Z>=0[q^-1]"));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn from_parts(
        ambient: Composition,
        level: usize,
        rows: BTreeMap<OrbitIndex, ModuleVector>,
    ) -> Result<Self, CanonError> {
        let order = enumerate_basis(&ambient, level);
        if order.len() != rows.len() {
            return Err(CanonError::LevelOutOfRange { ambient, level });
        }
        for r in &order {
            if !rows.contains_key(r) {
                return Err(CanonError::MissingRow {
                    ambient,
                    level,
                    index: r.clone(),
                });
            }
        }
        Ok(Self {
            ambient,
            level,
            order,
            rows,
        })
    }

    /// Aligned text rendering, one `b_r ↦ …` line per row.
    pub fn render_table(&self) -> String {
        let labels: Vec<String> = self.order.iter().map(|r| format!("b{r}")).collect();
        let width = labels.iter().map(String::len).max().unwrap_or(0);
        let mut out = format!(
            "canonical basis of {} at level {}\n",
            self.ambient, self.level
        );
        for (label, r) in labels.iter().zip(&self.order) {
            out.push_str(&format!("{label:<width$} = {}\n", self.rows[r]));
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TableRowWire {
    r_index: OrbitIndex,
    terms: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct TableWire {
    d: Composition,
    r: usize,
    rows: Vec<TableRowWire>,
}

impl Serialize for CanonicalTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut rows = Vec::with_capacity(self.order.len());
        for (r, b) in self.rows() {
            let v = serde_json::to_value(b).map_err(serde::ser::Error::custom)?;
            rows.push(TableRowWire {
                r_index: r.clone(),
                terms: v["terms"].clone(),
            });
        }
        TableWire {
            d: self.ambient.clone(),
            r: self.level,
            rows,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CanonicalTable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = TableWire::deserialize(deserializer)?;
        let mut rows = BTreeMap::new();
        for row in wire.rows {
            let v = serde_json::json!({ "d": wire.d, "terms": row.terms });
            let b: ModuleVector = serde_json::from_value(v).map_err(D::Error::custom)?;
            rows.insert(row.r_index, b);
        }
        CanonicalTable::from_parts(wire.d, wire.r, rows).map_err(D::Error::custom)
    }
}

/// The triangular algorithm: walk up the linear order, correcting `v_r` by
/// already-known `b_s` until it is fixed by `Ψ`.
pub fn canonical_basis(
    bar: &BarInvolution,
    d: &Composition,
    r: usize,
) -> Result<CanonicalTable, CanonError> {
    if r > d.total() {
        return Err(CanonError::LevelOutOfRange {
            ambient: d.clone(),
            level: r,
        });
    }
    let order = enumerate_basis(d, r);
    let position: HashMap<OrbitIndex, usize> = order
        .iter()
        .enumerate()
        .map(|(i, x)| (x.clone(), i))
        .collect();
    let mut rows: BTreeMap<OrbitIndex, ModuleVector> = BTreeMap::new();

    for idx in &order {
        let mut beta = ModuleVector::basis(d, idx.clone())?;
        loop {
            let delta = bar.apply(&beta)?.sub(&beta);
            if delta.is_zero() {
                break;
            }
            for (s, _) in delta.terms() {
                if !closure_lt(s, idx)? {
                    return Err(CanonError::TriangularityViolation {
                        ambient: d.clone(),
                        index: idx.clone(),
                        support: s.clone(),
                    });
                }
            }
            let (s, g) = delta
                .terms()
                .max_by_key(|(s, _)| position[*s])
                .map(|(s, g)| (s.clone(), g.clone()))
                .expect("nonzero delta");
            if !g.is_bar_antisymmetric() {
                return Err(CanonError::ObstructionNotAntisymmetric {
                    ambient: d.clone(),
                    index: idx.clone(),
                    support: s,
                    coeff: g.to_string(),
                });
            }
            if !g.has_zero_constant_term() {
                return Err(CanonError::NonzeroConstantTerm {
                    ambient: d.clone(),
                    index: idx.clone(),
                    support: s,
                    coeff: g.to_string(),
                });
            }
            // bar(p) - p = -g with p in q^-1 Z[q^-1].
            let p = g.negative_part();
            beta.add_scaled(&p, &rows[&s]);
        }
        rows.insert(idx.clone(), beta);
    }
    CanonicalTable::from_parts(d.clone(), r, rows)
}

/// Canonical tables for every level of `Λ_d`.
pub fn canonical_tables(
    bar: &BarInvolution,
    d: &Composition,
) -> Result<Vec<CanonicalTable>, CanonError> {
    (0..=d.total())
        .map(|r| canonical_basis(bar, d, r))
        .collect()
}

/// `b_r` expanded over `b_{s'} ⊗ b_{s''}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitRow {
    pub index: OrbitIndex,
    pub terms: Vec<(OrbitIndex, OrbitIndex, RingElem)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitExpansion {
    pub ambient: Composition,
    pub cut: usize,
    pub level: usize,
    pub left: Composition,
    pub right: Composition,
    pub rows: Vec<SplitRow>,
}

impl SplitExpansion {
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "split of {} = {} ⊗ {} at level {}\n",
            self.ambient, self.left, self.right, self.level
        );
        let width = self
            .rows
            .iter()
            .map(|row| format!("b{}", row.index).len())
            .max()
            .unwrap_or(0);
        for row in &self.rows {
            let label = format!("b{}", row.index);
            let rhs = render_sum(
                row.terms
                    .iter()
                    .map(|(a, b, c)| (format!("b{a} ⊗ b{b}"), c)),
            );
            out.push_str(&format!("{label:<width$} ↦ {rhs}\n"));
        }
        out
    }
}

#[derive(Serialize)]
struct SplitTermWire<'a> {
    left: &'a OrbitIndex,
    right: &'a OrbitIndex,
    coeff: &'a RingElem,
}

#[derive(Serialize)]
struct SplitRowWire<'a> {
    r_index: &'a OrbitIndex,
    terms: Vec<SplitTermWire<'a>>,
}

impl Serialize for SplitExpansion {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let rows: Vec<SplitRowWire> = self
            .rows
            .iter()
            .map(|row| SplitRowWire {
                r_index: &row.index,
                terms: row
                    .terms
                    .iter()
                    .map(|(a, b, c)| SplitTermWire {
                        left: a,
                        right: b,
                        coeff: c,
                    })
                    .collect(),
            })
            .collect();
        let mut st = serializer.serialize_struct("SplitExpansion", 6)?;
        st.serialize_field("d", &self.ambient)?;
        st.serialize_field("cut", &self.cut)?;
        st.serialize_field("r", &self.level)?;
        st.serialize_field("left_d", &self.left)?;
        st.serialize_field("right_d", &self.right)?;
        st.serialize_field("rows", &rows)?;
        st.end()
    }
}

/// Canonical tables, fetched level by level and kept for reuse; optionally backed by a disk cache.
pub struct TableSource<'a> {
    bar: &'a BarInvolution,
    cache: Option<&'a TableCache>,
    tables: HashMap<(Composition, usize), CanonicalTable>,
}

impl<'a> TableSource<'a> {
    pub fn new(bar: &'a BarInvolution) -> Self {
        Self {
            bar,
            cache: None,
            tables: HashMap::new(),
        }
    }

    /// The cache must only hold tables produced by the same `Ψ` as `bar`.
    pub fn with_cache(bar: &'a BarInvolution, cache: &'a TableCache) -> Self {
        Self {
            cache: Some(cache),
            ..Self::new(bar)
        }
    }

    pub fn bar(&self) -> &'a BarInvolution {
        self.bar
    }

    pub fn get(&mut self, d: &Composition, r: usize) -> Result<&CanonicalTable, CanonError> {
        let key = (d.clone(), r);
        if !self.tables.contains_key(&key) {
            let t = match self.cache {
                Some(cache) => cache.get_or_compute(self.bar, d, r)?,
                None => canonical_basis(self.bar, d, r)?,
            };
            self.tables.insert(key.clone(), t);
        }
        Ok(&self.tables[&key])
    }

    pub fn insert(&mut self, table: CanonicalTable) {
        self.tables
            .insert((table.ambient.clone(), table.level), table);
    }
}

/// Re-expresses each `b_r` of `Λ_d` in the product basis `b_{s'} ⊗ b_{s''}`.
pub fn split_expand(
    tables: &mut TableSource<'_>,
    d: &Composition,
    cut: usize,
    r: usize,
) -> Result<SplitExpansion, CanonError> {
    let (left, right) = d
        .split_at(cut)
        .ok_or(CanonError::CutOutOfRange { cut, len: d.len() })?;
    let full = tables.get(d, r)?.clone();
    let position: HashMap<OrbitIndex, usize> = full
        .order()
        .iter()
        .enumerate()
        .map(|(i, x)| (x.clone(), i))
        .collect();

    let mut rows = Vec::new();
    for (idx, b) in full.rows() {
        let mut rest = b.clone();
        let mut terms = Vec::new();
        while let Some((s, c)) = rest
            .terms()
            .max_by_key(|(s, _)| position[*s])
            .map(|(s, c)| (s.clone(), c.clone()))
        {
            let (s1, s2) = s.split_at(cut);
            let b1 = tables.get(&left, s1.total())?.row(&s1)?.clone();
            let b2 = tables.get(&right, s2.total())?.row(&s2)?.clone();
            let pair = tensor(&b1, &b2);
            rest.add_scaled(&(-&c), &pair);
            terms.push((s1, s2, c));
        }
        rows.push(SplitRow {
            index: idx.clone(),
            terms,
        });
    }
    Ok(SplitExpansion {
        ambient: d.clone(),
        cut,
        level: r,
        left,
        right,
        rows,
    })
}

/// The inclusion `Λ_d → Λ_{1^d}` sending `b_r` to `b_{dense_cell(r)}`, as a map on standard bases.
pub fn embed_refine(tables: &mut TableSource<'_>, d: &Composition) -> Result<LinMap, CanonError> {
    let target = Composition::ones(d.total());
    let domain = Shape::all(d);
    let codomain = Shape::all(&target);
    let mut images: BTreeMap<OrbitIndex, ModuleVector> = BTreeMap::new();
    for r in 0..=d.total() {
        let src = tables.get(d, r)?.clone();
        let dst = tables.get(&target, r)?.clone();
        // v_r = b_r - Σ_{s ≺ r} c_{r,s} v_s, resolved in the linear order.
        for (idx, b) in src.rows() {
            let mut img = dst.row(&dense_cell(d, idx)?)?.clone();
            for (s, c) in b.terms() {
                if s != idx {
                    img.add_scaled(&(-c), &images[s]);
                }
            }
            images.insert(idx.clone(), img);
        }
    }
    let map = LinMap::from_fn(&domain, &codomain, |r| images[r].clone());
    map.validate()?;
    Ok(map)
}

/// Checks `closure_leq` support and positivity for every split row; returns a witness on failure.
pub fn check_split_structure(exp: &SplitExpansion) -> Result<(), String> {
    for row in &exp.rows {
        let (r1, r2) = row.index.split_at(exp.cut);
        let Some((l0, r0, c0)) = row.terms.first() else {
            return Err(format!("empty expansion for b{}", row.index));
        };
        if *l0 != r1 || *r0 != r2 || !c0.is_one() {
            return Err(format!(
                "leading term of b{} is {c0} b{l0}⊗b{r0}",
                row.index
            ));
        }
        for (a, b, c) in &row.terms[1..] {
            let s = a.concat(b);
            if !closure_leq(&s, &row.index).unwrap_or(false) || s == row.index {
                return Err(format!(
                    "b{} expands over b{a}⊗b{b} outside its closure",
                    row.index
                ));
            }
            if !c.is_in_qinv_nonneg() {
                return Err(format!("b{} has coefficient {c} on b{a}⊗b{b}", row.index));
            }
        }
    }
    Ok(())
}
