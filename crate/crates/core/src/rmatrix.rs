//! Braiding maps `R_±(d, σ): Λ_d → Λ_{σ(d)}` built from the universal two-factor map
//!
//! `R_{d1,d2} = (-q^{3/2})^{d1 d2} · τ · q^{H⊗H/2} · Σ_n q^{n(n-1)/2} (q - q^{-1})^n [n]_q! F^{(n)} ⊗ E^{(n)}`,
//!
//! read right to left. `R_-` is the bar conjugate of `R_+` in canonical bases.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::canonical::{BarInvolution, CanonError, TableSource};
use crate::qring::{quantum_factorial, RingElem};
use crate::repmod::{
    act_divided, parse_usize_list, render_sum, Composition, Generator, LinMap, ModuleError,
    ModuleVector, OrbitIndex, Shape,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RMatError {
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error("R-matrix entry {entry} for v{index} of ({d1},{d2}) has a half-integral exponent")]
    HalfPowerLeak {
        d1: usize,
        d2: usize,
        index: OrbitIndex,
        entry: String,
    },
    #[error("letter s_{letter} is not a simple transposition of S_{len}")]
    InvalidLetter { letter: usize, len: usize },
    #[error("word {word:?} has length {word_len} but its permutation has length {perm_len}")]
    NonReducedWord {
        word: Vec<usize>,
        word_len: usize,
        perm_len: usize,
    },
    #[error("R_- ∘ R_+ is not the identity on ({d1},{d2})")]
    InverseCheckFailed { d1: usize, d2: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        })
    }
}

/// A word `s_{i_1} s_{i_2} ⋯ s_{i_k}` in the simple transpositions of `S_l`.
///
/// Words are products: the rightmost letter acts first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermWord {
    len: usize,
    letters: Vec<usize>,
}

impl PermWord {
    pub fn new(len: usize, letters: Vec<usize>) -> Result<Self, RMatError> {
        if let Some(&bad) = letters.iter().find(|&&i| i == 0 || i >= len) {
            return Err(RMatError::InvalidLetter { letter: bad, len });
        }
        Ok(Self { len, letters })
    }

    pub fn parse(len: usize, input: &str) -> Result<Self, RMatError> {
        let letters = if input.trim().is_empty() {
            Vec::new()
        } else {
            parse_usize_list(input)?
        };
        Self::new(len, letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn strands(&self) -> usize {
        self.len
    }

    /// One-line notation: position `j` of the result holds the strand that ends there.
    pub fn permutation(&self) -> Vec<usize> {
        let mut p: Vec<usize> = (0..self.len).collect();
        for &i in self.letters.iter().rev() {
            p.swap(i - 1, i);
        }
        p
    }

    /// `ℓ(σ)`: the number of inversions.
    pub fn perm_length(&self) -> usize {
        let p = self.permutation();
        let mut n = 0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    n += 1;
                }
            }
        }
        n
    }

    pub fn is_reduced(&self) -> bool {
        self.perm_length() == self.letters.len()
    }

    pub fn check_reduced(&self) -> Result<(), RMatError> {
        if self.is_reduced() {
            Ok(())
        } else {
            Err(RMatError::NonReducedWord {
                word: self.letters.clone(),
                word_len: self.letters.len(),
                perm_len: self.perm_length(),
            })
        }
    }

    /// `σ(d)`.
    pub fn act_on(&self, d: &Composition) -> Composition {
        let mut c = d.clone();
        for &i in self.letters.iter().rev() {
            c = c.swapped(i - 1);
        }
        c
    }

    /// `self · other`.
    pub fn then_after(&self, other: &PermWord) -> PermWord {
        PermWord {
            len: self.len,
            letters: self.letters.iter().chain(&other.letters).copied().collect(),
        }
    }

    pub fn inverse(&self) -> PermWord {
        PermWord {
            len: self.len,
            letters: self.letters.iter().rev().copied().collect(),
        }
    }

    /// A word for the block permutation `w(d, σ)` acting on `1^d`: each letter that
    /// swaps blocks of sizes `a, b` becomes `a·b` strand crossings.
    pub fn lift(&self, d: &Composition) -> PermWord {
        let mut applied = Vec::new();
        let mut c = d.clone();
        for &i in self.letters.iter().rev() {
            let (a, b) = (c.parts()[i - 1], c.parts()[i]);
            let start: usize = c.parts()[..i - 1].iter().sum();
            for j in 0..b {
                for x in (start + j..start + a + j).rev() {
                    applied.push(x + 1);
                }
            }
            c = c.swapped(i - 1);
        }
        applied.reverse();
        PermWord {
            len: d.total(),
            letters: applied,
        }
    }
}

/// Order in which the factors of the two-slot formula are applied. Only `Standard`
/// is correct; the others exist so tests can confirm they are detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorOrder {
    /// Θ, then the diagonal, then τ.
    #[default]
    Standard,
    /// Diagonal, then Θ, then τ.
    DiagonalFirst,
    /// τ, then the diagonal, then Θ on the swapped module.
    TransposeFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RMatrixOptions {
    pub order: FactorOrder,
    pub drop_scalar: bool,
}

/// A braiding map between tensor modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RMap {
    pub sign: Sign,
    pub source: Composition,
    pub target: Composition,
    pub map: LinMap,
}

/// `q^{n(n-1)/2} (q - q^{-1})^n [n]_q!`.
pub fn theta_r_coefficient(n: usize) -> RingElem {
    let diff = RingElem::laurent(&[(1, 1), (-1, -1)]);
    RingElem::monomial_half((n * (n.saturating_sub(1))) as i64, 1)
        * diff.pow(n as u32)
        * quantum_factorial(n)
}

fn pair_composition(d1: usize, d2: usize) -> Composition {
    Composition::new(vec![d1, d2]).expect("two parts")
}

fn basis(d: &Composition, r: &[usize]) -> ModuleVector {
    ModuleVector::basis(d, OrbitIndex::new(r.to_vec())).expect("valid index")
}

// Σ_n θ_n F^{(n)} v_a ⊗ E^{(n)} v_b on Λ_(d1,d2).
fn theta_r(d1: usize, d2: usize, a: usize, b: usize) -> Result<ModuleVector, RMatError> {
    let d = pair_composition(d1, d2);
    let (m1, m2) = (pair1(d1), pair1(d2));
    let mut out = ModuleVector::zero(&d);
    for n in 0..=d1.min(d2) {
        let f = act_divided(&basis(&m1, &[a]), Generator::F, n)?;
        let e = act_divided(&basis(&m2, &[b]), Generator::E, n)?;
        let coeff = theta_r_coefficient(n);
        for (x, cx) in f.terms() {
            for (y, cy) in e.terms() {
                let idx = [x.entries()[0], y.entries()[0]];
                out.add_scaled(&(&coeff * &(cx * cy)), &basis(&d, &idx));
            }
        }
    }
    Ok(out)
}

fn pair1(d: usize) -> Composition {
    Composition::new(vec![d]).expect("one part")
}

fn diagonal(d1: usize, d2: usize, u: &ModuleVector) -> ModuleVector {
    let d = u.ambient().clone();
    u.map_basis(&d, |r| {
        let (a, b) = (r.entries()[0] as i64, r.entries()[1] as i64);
        let h = (d1 as i64 - 2 * a) * (d2 as i64 - 2 * b);
        ModuleVector::from_terms(&d, [(r.clone(), RingElem::monomial_half(h, 1))]).expect("index")
    })
}

fn transpose(u: &ModuleVector) -> ModuleVector {
    let p = u.ambient().parts();
    let target = pair_composition(p[1], p[0]);
    u.map_basis(&target, |r| {
        basis(&target, &[r.entries()[1], r.entries()[0]])
    })
}

fn pair_image(
    d1: usize,
    d2: usize,
    a: usize,
    b: usize,
    opts: RMatrixOptions,
) -> Result<ModuleVector, RMatError> {
    let source = pair_composition(d1, d2);
    let v = match opts.order {
        FactorOrder::Standard => transpose(&diagonal(d1, d2, &theta_r(d1, d2, a, b)?)),
        FactorOrder::DiagonalFirst => {
            let scaled = diagonal(d1, d2, &basis(&source, &[a, b]));
            let mut out = ModuleVector::zero(&source);
            for (r, c) in scaled.terms() {
                out.add_scaled(c, &theta_r(d1, d2, r.entries()[0], r.entries()[1])?);
            }
            transpose(&out)
        }
        FactorOrder::TransposeFirst => {
            let swapped = diagonal(d2, d1, &basis(&pair_composition(d2, d1), &[b, a]));
            let mut out = ModuleVector::zero(&pair_composition(d2, d1));
            for (r, c) in swapped.terms() {
                out.add_scaled(c, &theta_r(d2, d1, r.entries()[0], r.entries()[1])?);
            }
            out
        }
    };
    let scalar = if opts.drop_scalar {
        RingElem::one()
    } else {
        let sign = if (d1 * d2).is_multiple_of(2) { 1 } else { -1 };
        RingElem::monomial_half(3 * (d1 * d2) as i64, sign)
    };
    Ok(v.scale(&scalar))
}

/// `R_+` on `Λ_(d1,d2) → Λ_(d2,d1)` in standard bases.
pub fn r_plus_pair(d1: usize, d2: usize) -> Result<RMap, RMatError> {
    r_plus_pair_with(d1, d2, RMatrixOptions::default())
}

pub fn r_plus_pair_with(d1: usize, d2: usize, opts: RMatrixOptions) -> Result<RMap, RMatError> {
    let source = pair_composition(d1, d2);
    let target = pair_composition(d2, d1);
    let map = LinMap::try_from_fn(&Shape::all(&source), &Shape::all(&target), |r| {
        let img = pair_image(d1, d2, r.entries()[0], r.entries()[1], opts)?;
        if let Some((_, c)) = img.terms().find(|(_, c)| !c.is_in_a()) {
            return Err(RMatError::HalfPowerLeak {
                d1,
                d2,
                index: r.clone(),
                entry: c.to_string(),
            });
        }
        Ok(img)
    })?;
    Ok(RMap {
        sign: Sign::Plus,
        source,
        target,
        map,
    })
}

/// Builds a standard-basis map from the images of a canonical basis, resolving
/// `v_r = b_r - Σ_{s ≺ r} c_{r,s} v_s` level by level.
fn from_canonical_images(
    tables: &mut TableSource<'_>,
    source: &Composition,
    target: &Composition,
    mut image_of_b: impl FnMut(&OrbitIndex, &mut TableSource<'_>) -> Result<ModuleVector, RMatError>,
) -> Result<LinMap, RMatError> {
    let mut images: BTreeMap<OrbitIndex, ModuleVector> = BTreeMap::new();
    for r in 0..=source.total() {
        let table = tables.get(source, r)?.clone();
        for (idx, b) in table.rows() {
            let mut img = image_of_b(idx, tables)?;
            for (s, c) in b.terms() {
                if s != idx {
                    img.add_scaled(&(-c), &images[s]);
                }
            }
            images.insert(idx.clone(), img);
        }
    }
    Ok(LinMap::from_fn(
        &Shape::all(source),
        &Shape::all(target),
        |r| images[r].clone(),
    ))
}

/// `R_-` on `Λ_(d1,d2) → Λ_(d2,d1)`: entrywise bar of the canonical-basis matrix of `R_+`.
pub fn r_minus_pair(tables: &mut TableSource<'_>, d1: usize, d2: usize) -> Result<RMap, RMatError> {
    r_minus_from(tables, &r_plus_pair(d1, d2)?)
}

/// Bar conjugate of an arbitrary two-slot `R_+` (used with mutated options in tests).
pub fn r_minus_from(tables: &mut TableSource<'_>, plus: &RMap) -> Result<RMap, RMatError> {
    let (source, target) = (plus.source.clone(), plus.target.clone());
    let map = from_canonical_images(tables, &source, &target, |idx, tables| {
        let src_b = tables.get(&source, idx.total())?.row(idx)?.clone();
        let img = plus.map.apply(&src_b)?;
        let dst = tables.get(&target, idx.total())?;
        let coords = dst.to_canonical(&img)?;
        let mut out = ModuleVector::zero(&target);
        for (s, c) in coords {
            out.add_scaled(&c.bar(), dst.row(&s)?);
        }
        Ok(out)
    })?;
    Ok(RMap {
        sign: Sign::Minus,
        source,
        target,
        map,
    })
}

/// Produces two-slot maps for a given sign; caches them per `(d1, d2)`.
pub struct PairMaps<'a> {
    tables: TableSource<'a>,
    opts: RMatrixOptions,
    cache: BTreeMap<(Sign, usize, usize), RMap>,
}

impl<'a> PairMaps<'a> {
    pub fn new(bar: &'a BarInvolution) -> Self {
        Self::with_options(bar, RMatrixOptions::default())
    }

    pub fn with_options(bar: &'a BarInvolution, opts: RMatrixOptions) -> Self {
        Self::from_tables(TableSource::new(bar), opts)
    }

    pub fn from_tables(tables: TableSource<'a>, opts: RMatrixOptions) -> Self {
        Self {
            tables,
            opts,
            cache: BTreeMap::new(),
        }
    }

    pub fn tables(&mut self) -> &mut TableSource<'a> {
        &mut self.tables
    }

    pub fn pair(&mut self, sign: Sign, d1: usize, d2: usize) -> Result<RMap, RMatError> {
        let key = (sign, d1, d2);
        if let Some(m) = self.cache.get(&key) {
            return Ok(m.clone());
        }
        let plus = r_plus_pair_with(d1, d2, self.opts)?;
        let m = match sign {
            Sign::Plus => plus,
            Sign::Minus => r_minus_from(&mut self.tables, &plus)?,
        };
        self.cache.insert(key, m.clone());
        Ok(m)
    }

    /// `R_±(d, σ)` for a reduced word of `σ`.
    pub fn r_move(
        &mut self,
        d: &Composition,
        word: &PermWord,
        sign: Sign,
    ) -> Result<RMap, RMatError> {
        if word.strands() != d.len() {
            return Err(RMatError::InvalidLetter {
                letter: word.strands(),
                len: d.len(),
            });
        }
        word.check_reduced()?;
        let mut acc = LinMap::identity(&Shape::all(d));
        let mut current = d.clone();
        for &i in word.letters().iter().rev() {
            let slot = i - 1;
            let (a, b) = (current.parts()[slot], current.parts()[slot + 1]);
            let local = self.pair(sign, a, b)?;
            let next = current.swapped(slot);
            let step = LinMap::from_fn(&Shape::all(&current), &Shape::all(&next), |r| {
                embed_local(&next, slot, r, &local.map)
            });
            acc = step.compose(&acc)?;
            current = next;
        }
        Ok(RMap {
            sign,
            source: d.clone(),
            target: current,
            map: acc,
        })
    }
}

// Applies a two-slot map to slots (slot, slot + 1) of v_r, identity elsewhere.
fn embed_local(target: &Composition, slot: usize, r: &OrbitIndex, local: &LinMap) -> ModuleVector {
    let e = r.entries();
    let pair = OrbitIndex::new(vec![e[slot], e[slot + 1]]);
    let img = local.column(&pair).expect("pair basis");
    let mut out = ModuleVector::zero(target);
    for (x, c) in img.terms() {
        let mut idx = e.to_vec();
        idx[slot] = x.entries()[0];
        idx[slot + 1] = x.entries()[1];
        out.add_scaled(c, &basis(target, &idx));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Standard,
    Canonical,
}

/// One weight block of a map, with explicit row and column legends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatrixView {
    pub source_d: Composition,
    pub target_d: Composition,
    pub basis: BasisKind,
    pub level: usize,
    pub row_indices: Vec<OrbitIndex>,
    pub col_indices: Vec<OrbitIndex>,
    pub rows: Vec<Vec<RingElem>>,
}

impl MatrixView {
    pub fn render_table(&self) -> String {
        let sym = match self.basis {
            BasisKind::Standard => "v",
            BasisKind::Canonical => "b",
        };
        let mut out = format!(
            "{} → {} at level {} ({} basis)\n",
            self.source_d,
            self.target_d,
            self.level,
            match self.basis {
                BasisKind::Standard => "standard",
                BasisKind::Canonical => "canonical",
            }
        );
        let labels: Vec<String> = self
            .col_indices
            .iter()
            .map(|r| format!("{sym}{r}"))
            .collect();
        let width = labels.iter().map(String::len).max().unwrap_or(0);
        for (j, label) in labels.iter().enumerate() {
            let rhs = render_sum(
                self.row_indices
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !self.rows[*i][j].is_zero())
                    .map(|(i, s)| (format!("{sym}{s}"), &self.rows[i][j])),
            );
            out.push_str(&format!("{label:<width$} ↦ {rhs}\n"));
        }
        out
    }
}

/// The matrix of `map` on one level in the chosen bases.
pub fn matrix_in_basis(
    tables: &mut TableSource<'_>,
    map: &LinMap,
    level: usize,
    kind: BasisKind,
) -> Result<MatrixView, RMatError> {
    let source = map.domain.composition.clone();
    let target = map.codomain.composition.clone();
    let cols = crate::repmod::enumerate_basis(&source, level);
    let rows_idx = crate::repmod::enumerate_basis(&target, level);
    let rows = match kind {
        BasisKind::Standard => map.matrix(&rows_idx, &cols),
        BasisKind::Canonical => {
            let src = tables.get(&source, level)?.clone();
            let dst = tables.get(&target, level)?.clone();
            let mut m = vec![vec![RingElem::zero(); cols.len()]; rows_idx.len()];
            for (j, r) in cols.iter().enumerate() {
                let img = map.apply(src.row(r)?)?;
                let coords = dst.to_canonical(&img)?;
                for (i, s) in rows_idx.iter().enumerate() {
                    if let Some(c) = coords.get(s) {
                        m[i][j] = c.clone();
                    }
                }
            }
            m
        }
    };
    Ok(MatrixView {
        source_d: source,
        target_d: target,
        basis: kind,
        level,
        row_indices: rows_idx,
        col_indices: cols,
        rows,
    })
}
