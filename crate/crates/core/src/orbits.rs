//! Combinatorics of `P_d`-orbits on Grassmannians: closure order, dimensions,
//! Schubert-cell counts, the working linear order and dense-cell refinement.
//!
//! The orbit `X_r` consists of subspaces `V` with `dim(V ∩ W_{d_1+…+d_k}) = r_1+…+r_k`.
//! Intersection dimensions only jump up under specialization, so `X_s ⊆ closure(X_r)`
//! exactly when every partial sum of `s` dominates the matching partial sum of `r`.

use serde::Serialize;
use thiserror::Error;

use crate::repmod::{indices_at_level, Composition, OrbitIndex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrbitError {
    #[error("index {index} is not valid for composition {ambient}")]
    InvalidIndex {
        ambient: Composition,
        index: OrbitIndex,
    },
    #[error("indices {left} and {right} have different lengths")]
    AmbientMismatch { left: OrbitIndex, right: OrbitIndex },
    #[error("indices {left} and {right} lie on different levels")]
    TotalMismatch { left: OrbitIndex, right: OrbitIndex },
}

fn check(d: &Composition, r: &OrbitIndex) -> Result<(), OrbitError> {
    if d.is_valid_index(r) {
        Ok(())
    } else {
        Err(OrbitError::InvalidIndex {
            ambient: d.clone(),
            index: r.clone(),
        })
    }
}

/// `closure(X_s) ⊆ closure(X_r)`, i.e. partial-sum dominance of `s` over `r`.
pub fn closure_leq(s: &OrbitIndex, r: &OrbitIndex) -> Result<bool, OrbitError> {
    if s.entries().len() != r.entries().len() {
        return Err(OrbitError::AmbientMismatch {
            left: s.clone(),
            right: r.clone(),
        });
    }
    if s.total() != r.total() {
        return Err(OrbitError::TotalMismatch {
            left: s.clone(),
            right: r.clone(),
        });
    }
    let (mut ps, mut pr) = (0, 0);
    for (a, b) in s.entries().iter().zip(r.entries()) {
        ps += a;
        pr += b;
        if ps < pr {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Strict version of [`closure_leq`].
pub fn closure_lt(s: &OrbitIndex, r: &OrbitIndex) -> Result<bool, OrbitError> {
    Ok(s != r && closure_leq(s, r)?)
}

/// `Σ_k r_k(d_k - r_k) + Σ_{i<j} r_j(d_i - r_i)`, from the fibration of `X_r`
/// over a product of Grassmannians with affine fibres.
pub fn orbit_dim(d: &Composition, r: &OrbitIndex) -> Result<usize, OrbitError> {
    check(d, r)?;
    Ok(orbit_dim_unchecked(d, r))
}

fn orbit_dim_unchecked(d: &Composition, r: &OrbitIndex) -> usize {
    let mut dim = 0;
    let mut free_before = 0;
    for (&dk, &rk) in d.parts().iter().zip(r.entries()) {
        dim += rk * (dk - rk) + rk * free_before;
        free_before += dk - rk;
    }
    dim
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Number of Schubert cells inside `X_r`: `∏_k C(d_k, r_k)`.
pub fn cell_count(d: &Composition, r: &OrbitIndex) -> Result<u64, OrbitError> {
    check(d, r)?;
    Ok(d.parts()
        .iter()
        .zip(r.entries())
        .map(|(&dk, &rk)| binomial(dk, rk))
        .product())
}

/// The open Schubert cell of `closure(X_r)`, as an index over `1^d`:
/// each block gets `d_k - r_k` zeros followed by `r_k` ones.
pub fn dense_cell(d: &Composition, r: &OrbitIndex) -> Result<OrbitIndex, OrbitError> {
    check(d, r)?;
    let mut out = Vec::with_capacity(d.total());
    for (&dk, &rk) in d.parts().iter().zip(r.entries()) {
        out.extend(std::iter::repeat_n(0, dk - rk));
        out.extend(std::iter::repeat_n(1, rk));
    }
    if out.is_empty() {
        out.push(0);
    }
    Ok(OrbitIndex::new(out))
}

/// All binary indices over `1^d` whose block sums recover `r`.
pub fn binary_refinements(d: &Composition, r: &OrbitIndex) -> Result<Vec<OrbitIndex>, OrbitError> {
    check(d, r)?;
    let mut out = vec![Vec::new()];
    for (&dk, &rk) in d.parts().iter().zip(r.entries()) {
        let blocks = indices_at_level(&Composition::ones(dk), rk);
        let blocks: Vec<Vec<usize>> = if dk == 0 {
            vec![Vec::new()]
        } else {
            blocks.into_iter().map(|b| b.entries().to_vec()).collect()
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                blocks.iter().map(move |b| {
                    let mut p = prefix.clone();
                    p.extend_from_slice(b);
                    p
                })
            })
            .collect();
    }
    Ok(out
        .into_iter()
        .map(|mut v| {
            if v.is_empty() {
                v.push(0);
            }
            OrbitIndex::new(v)
        })
        .collect())
}

/// Sort key realizing the working order: level, then orbit dimension, then lexicographic.
pub fn order_key(d: &Composition, r: &OrbitIndex) -> (usize, usize, Vec<usize>) {
    (r.total(), orbit_dim_unchecked(d, r), r.entries().to_vec())
}

/// Indices of level `r`, smallest closure first; refines the closure order.
pub fn linear_extension(d: &Composition, r: usize) -> Vec<OrbitIndex> {
    let mut v = indices_at_level(d, r);
    v.sort_by_cached_key(|idx| order_key(d, idx));
    v
}

/// The closure order on one level, with its covering relations.
#[derive(Debug, Clone)]
pub struct OrbitPoset {
    pub ambient: Composition,
    pub level: usize,
    pub elements: Vec<OrbitIndex>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PosetNode {
    pub index: OrbitIndex,
    pub dim: usize,
    pub cells: u64,
    /// Elements covered by this one.
    pub covers: Vec<OrbitIndex>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PosetExport {
    pub d: Composition,
    pub r: usize,
    pub nodes: Vec<PosetNode>,
}

impl OrbitPoset {
    pub fn new(d: &Composition, r: usize) -> Self {
        Self {
            ambient: d.clone(),
            level: r,
            elements: linear_extension(d, r),
        }
    }

    pub fn leq(&self, s: &OrbitIndex, r: &OrbitIndex) -> bool {
        closure_leq(s, r).unwrap_or(false)
    }

    /// Pairs `(s, r)` with `s ≺ r` and nothing strictly between.
    pub fn covers(&self, r: &OrbitIndex) -> Vec<OrbitIndex> {
        let below: Vec<&OrbitIndex> = self
            .elements
            .iter()
            .filter(|s| *s != r && self.leq(s, r))
            .collect();
        below
            .iter()
            .filter(|s| !below.iter().any(|t| t != *s && self.leq(s, t)))
            .map(|s| (*s).clone())
            .collect()
    }

    pub fn export(&self) -> PosetExport {
        PosetExport {
            d: self.ambient.clone(),
            r: self.level,
            nodes: self
                .elements
                .iter()
                .map(|r| PosetNode {
                    index: r.clone(),
                    dim: orbit_dim_unchecked(&self.ambient, r),
                    cells: cell_count(&self.ambient, r).unwrap_or(0),
                    covers: self.covers(r),
                })
                .collect(),
        }
    }

    /// Hasse diagram in DOT, edges pointing from the larger orbit to the one it covers.
    pub fn to_dot(&self) -> String {
        let mut out = format!(
            "digraph orbits_{}_{} {{\n",
            self.ambient
                .parts()
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("_"),
            self.level
        );
        for r in &self.elements {
            let dim = orbit_dim_unchecked(&self.ambient, r);
            out.push_str(&format!("  \"{r}\" [label=\"{r}\\ndim {dim}\"];\n"));
        }
        for r in &self.elements {
            for s in self.covers(r) {
                out.push_str(&format!("  \"{r}\" -> \"{s}\";\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}
