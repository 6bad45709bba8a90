//! Property suites over every small module. Each check either passes or records a
//! witness naming the module, the vectors involved and both sides of the identity.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::canonical::{
    canonical_basis, check_split_structure, embed_refine, split_expand, BarInvolution, Nesting,
    TableSource,
};
use crate::orbits::{
    binary_refinements, cell_count, closure_leq, closure_lt, dense_cell, orbit_dim,
};
use crate::qring::{quantum_binomial, RingElem};
use crate::repmod::{
    act, act_divided, act_k, enumerate_basis, full_basis, inner_product, rho_twist, Composition,
    Generator, LinMap, ModuleError, ModuleVector, OrbitIndex,
};
use crate::rmatrix::{PairMaps, PermWord, RMap, RMatrixOptions, Sign};

/// Checks run against one module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleReport {
    pub ambient: Composition,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl ModuleReport {
    fn new(ambient: &Composition) -> Self {
        Self {
            ambient: ambient.clone(),
            checks: 0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(witness());
        }
    }

    fn check_eq<T: PartialEq + fmt::Display>(
        &mut self,
        lhs: &T,
        rhs: &T,
        what: impl FnOnce() -> String,
    ) {
        self.check(lhs == rhs, || {
            format!("{}: lhs = {lhs}, rhs = {rhs}", what())
        });
    }

    /// Unwraps a result, counting an error as a failed check.
    fn ok<T, E: fmt::Display>(
        &mut self,
        r: Result<T, E>,
        what: impl FnOnce() -> String,
    ) -> Option<T> {
        match r {
            Ok(x) => Some(x),
            Err(e) => {
                self.checks += 1;
                self.failures.push(format!("{}: {e}", what()));
                None
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Algebra,
    Pairing,
    InnerFormula,
    Orbits,
    Bar,
    Positivity,
    Embedding,
    Refinement,
    Braiding,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Algebra,
        Suite::Pairing,
        Suite::InnerFormula,
        Suite::Orbits,
        Suite::Bar,
        Suite::Positivity,
        Suite::Embedding,
        Suite::Refinement,
        Suite::Braiding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Pairing => "pairing",
            Suite::InnerFormula => "inner-formula",
            Suite::Orbits => "orbits",
            Suite::Bar => "bar",
            Suite::Positivity => "positivity",
            Suite::Embedding => "embedding",
            Suite::Refinement => "refinement",
            Suite::Braiding => "braiding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub modules: usize,
    pub checks: usize,
    /// `(ambient, witness)`, smallest module first.
    pub failures: Vec<(Composition, String)>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn witness(&self) -> Option<&(Composition, String)> {
        self.failures.first()
    }

    fn collect(suite: Suite, reports: Vec<ModuleReport>) -> Self {
        let mut failures: Vec<(Composition, String)> = reports
            .iter()
            .flat_map(|m| m.failures.iter().map(|f| (m.ambient.clone(), f.clone())))
            .collect();
        failures.sort_by(|a, b| (a.0.total(), &a.0, &a.1).cmp(&(b.0.total(), &b.0, &b.1)));
        Self {
            suite,
            modules: reports.len(),
            checks: reports.iter().map(|m| m.checks).sum(),
            failures,
        }
    }
}

pub struct VerifyConfig<'a> {
    pub bar: &'a BarInvolution,
    pub r_options: RMatrixOptions,
    pub max_total: usize,
}

/// Compositions with positive parts and total in `1..=max_total`, by total then parts.
pub fn compositions(max_total: usize) -> Vec<Composition> {
    let mut out = Vec::new();
    for n in 1..=max_total {
        for mask in 0..1u64 << (n - 1) {
            let mut parts = Vec::new();
            let mut run = 1;
            for i in 0..n - 1 {
                if mask >> i & 1 == 1 {
                    parts.push(run);
                    run = 1;
                } else {
                    run += 1;
                }
            }
            parts.push(run);
            out.push(Composition::new(parts).expect("nonempty"));
        }
    }
    out.sort_by(|a, b| (a.total(), a).cmp(&(b.total(), b)));
    out
}

fn comp(parts: &[usize]) -> Composition {
    Composition::new(parts.to_vec()).expect("nonempty")
}

/// Modules for the embedding suite.
pub fn embedding_modules() -> Vec<Composition> {
    [&[2][..], &[2, 1], &[1, 2], &[2, 2], &[3, 1]]
        .iter()
        .map(|p| comp(p))
        .collect()
}

/// Modules for the refinement-compatibility suite.
pub fn refinement_modules() -> Vec<Composition> {
    vec![comp(&[2, 1]), comp(&[2, 2])]
}

fn suite_modules(suite: Suite, max_total: usize) -> Vec<Composition> {
    match suite {
        Suite::InnerFormula => (0..=max_total.max(8)).map(|d| comp(&[d])).collect(),
        Suite::Embedding => embedding_modules()
            .into_iter()
            .filter(|d| d.total() <= max_total)
            .collect(),
        Suite::Refinement => refinement_modules()
            .into_iter()
            .filter(|d| d.total() <= max_total)
            .collect(),
        Suite::Braiding => {
            let mut v: Vec<Composition> = compositions(max_total.min(5))
                .into_iter()
                .filter(|d| (2..=3).contains(&d.len()))
                .collect();
            if max_total >= 4 {
                v.push(comp(&[1, 1, 1, 1]));
                v.push(comp(&[2, 1, 1]).concat(&comp(&[0])));
            }
            v
        }
        _ => compositions(max_total),
    }
}

pub fn run_module(cfg: &VerifyConfig<'_>, suite: Suite, d: &Composition) -> ModuleReport {
    match suite {
        Suite::Algebra => algebra_module(d),
        Suite::Pairing => pairing_module(d),
        Suite::InnerFormula => inner_formula_module(d),
        Suite::Orbits => orbits_module(d),
        Suite::Bar => bar_module(cfg.bar, d),
        Suite::Positivity => positivity_module(cfg.bar, d),
        Suite::Embedding => embedding_module(cfg.bar, d),
        Suite::Refinement => refinement_module(cfg.bar, cfg.r_options, d),
        Suite::Braiding => braiding_module(cfg.bar, cfg.r_options, d),
    }
}

/// Runs one suite, fanning modules out across threads.
pub fn run_suite(cfg: &VerifyConfig<'_>, suite: Suite) -> SuiteReport {
    let modules = suite_modules(suite, cfg.max_total);
    let reports: Vec<ModuleReport> = modules
        .par_iter()
        .map(|d| run_module(cfg, suite, d))
        .collect();
    SuiteReport::collect(suite, reports)
}

pub fn run_all(cfg: &VerifyConfig<'_>) -> Vec<SuiteReport> {
    Suite::ALL.iter().map(|&s| run_suite(cfg, s)).collect()
}

fn basis(d: &Composition, r: &OrbitIndex) -> ModuleVector {
    ModuleVector::basis(d, r.clone()).expect("basis index")
}

fn q(h: i64) -> RingElem {
    RingElem::q_pow(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    K,
    KInv,
    E,
    F,
    EDiv(usize),
    FDiv(usize),
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::K => write!(f, "K"),
            Op::KInv => write!(f, "K^-1"),
            Op::E => write!(f, "E"),
            Op::F => write!(f, "F"),
            Op::EDiv(n) => write!(f, "E^({n})"),
            Op::FDiv(n) => write!(f, "F^({n})"),
        }
    }
}

impl Op {
    fn apply(self, u: &ModuleVector) -> Result<ModuleVector, ModuleError> {
        match self {
            Op::K => Ok(act_k(u, false)),
            Op::KInv => Ok(act_k(u, true)),
            Op::E => Ok(act(u, Generator::E)),
            Op::F => Ok(act(u, Generator::F)),
            Op::EDiv(n) => act_divided(u, Generator::E, n),
            Op::FDiv(n) => act_divided(u, Generator::F, n),
        }
    }
}

const GENERATORS: [Op; 4] = [Op::K, Op::KInv, Op::E, Op::F];
const WITH_DIVIDED: [Op; 10] = [
    Op::K,
    Op::KInv,
    Op::E,
    Op::F,
    Op::EDiv(2),
    Op::EDiv(3),
    Op::FDiv(2),
    Op::FDiv(3),
    Op::EDiv(1),
    Op::FDiv(1),
];

/// `map ∘ x = x ∘ map` on every basis vector of the domain.
fn check_intertwines(rep: &mut ModuleReport, name: &str, map: &LinMap, ops: &[Op]) {
    let d = map.domain.composition.clone();
    for r in map.domain.basis() {
        let v = basis(&d, &r);
        for &op in ops {
            let lhs = op
                .apply(&v)
                .map_err(|e| e.to_string())
                .and_then(|xv| map.apply(&xv).map_err(|e| e.to_string()));
            let rhs = map
                .apply(&v)
                .map_err(|e| e.to_string())
                .and_then(|mv| op.apply(&mv).map_err(|e| e.to_string()));
            let (Some(lhs), Some(rhs)) = (
                rep.ok(lhs, || format!("{name}: {op} on v{r}")),
                rep.ok(rhs, || format!("{name}: {op} on image of v{r}")),
            ) else {
                continue;
            };
            rep.check_eq(&lhs, &rhs, || {
                format!("{name} ∘ {op} = {op} ∘ {name} on v{r}")
            });
        }
    }
}

fn check_levels_and_integrality(rep: &mut ModuleReport, name: &str, map: &LinMap) {
    for (r, img) in map.columns() {
        rep.check(img.terms().all(|(s, _)| s.total() == r.total()), || {
            format!("{name} does not preserve the level of v{r}: image {img}")
        });
        rep.check(img.terms().all(|(_, c)| c.is_in_a()), || {
            format!("{name} has a half-integral entry in the image of v{r}: {img}")
        });
    }
}

pub fn algebra_module(d: &Composition) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let qm = q(1) - q(-1);
    for r in full_basis(d) {
        let v = basis(d, &r);
        let (e, f) = (act(&v, Generator::E), act(&v, Generator::F));
        rep.check_eq(
            &act_k(&e, false),
            &act(&act_k(&v, false), Generator::E).scale(&q(2)),
            || format!("KE = q^2 EK on v{r}"),
        );
        rep.check_eq(
            &act_k(&f, false),
            &act(&act_k(&v, false), Generator::F).scale(&q(-2)),
            || format!("KF = q^-2 FK on v{r}"),
        );
        let w = d.weight(&r);
        let lhs = act(&f, Generator::E).sub(&act(&e, Generator::F));
        if let Some(c) = rep.ok((q(w) - q(-w)).exact_div(&qm), || format!("[K; 0] on v{r}")) {
            rep.check_eq(&lhs, &v.scale(&c), || {
                format!("EF - FE = (K - K^-1)/(q - q^-1) on v{r}")
            });
        }
        let top = d.total();
        for gen in [Generator::E, Generator::F] {
            let mut power = v.clone();
            let mut divided = vec![Some(v.clone())];
            for n in 1..=top + 1 {
                power = act(&power, gen);
                let div = rep.ok(act_divided(&v, gen, n), || format!("{gen:?}^({n}) on v{r}"));
                if let Some(div) = &div {
                    let fact = crate::qring::quantum_factorial(n);
                    rep.check_eq(&div.scale(&fact), &power, || {
                        format!("[{n}]! {gen:?}^({n}) = {gen:?}^{n} on v{r}")
                    });
                }
                divided.push(div);
            }
            for n in 1..=top {
                for m in 1..=top - n + 1 {
                    let (Some(inner), Some(rhs)) = (&divided[m], divided[n + m].clone()) else {
                        continue;
                    };
                    let lhs = act_divided(inner, gen, n);
                    let Some(lhs) = rep.ok(lhs, || format!("{gen:?}^({n}){gen:?}^({m}) on v{r}"))
                    else {
                        continue;
                    };
                    let b = quantum_binomial(n + m, n).expect("n <= n + m");
                    rep.check_eq(&lhs, &rhs.scale(&b), || {
                        format!(
                            "{gen:?}^({n}){gen:?}^({m}) = [{}; {n}] {gen:?}^({}) on v{r}",
                            n + m,
                            n + m
                        )
                    });
                }
            }
        }
    }
    rep
}

pub fn pairing_module(d: &Composition) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let all = full_basis(d);
    for r in &all {
        let u = basis(d, r);
        for s in &all {
            let w = basis(d, s);
            for gen in [Generator::K, Generator::E, Generator::F] {
                let xu = match gen {
                    Generator::K => act_k(&u, false),
                    g => act(&u, g),
                };
                let lhs = inner_product(&xu, &w).expect("same ambient");
                let rhs = inner_product(&u, &rho_twist(gen).apply(&w)).expect("same ambient");
                rep.check_eq(&lhs, &rhs, || {
                    format!("({gen:?} v{r}, v{s}) = (v{r}, ρ({gen:?}) v{s})")
                });
            }
            let a = inner_product(&u, &w).expect("same ambient");
            let b = inner_product(&w, &u).expect("same ambient");
            rep.check_eq(&a, &b, || format!("(v{r}, v{s}) = (v{s}, v{r})"));
            if r.total() != s.total() {
                rep.check(a.is_zero(), || format!("(v{r}, v{s}) = {a} across levels"));
            }
        }
    }
    let mut sum = 0;
    for level in 0..=d.total() {
        let found = enumerate_basis(d, level).len();
        let brute = count_indices(d.parts(), level);
        rep.check_eq(&found, &brute, || format!("dimension of level {level}"));
        sum += found;
    }
    let expect: usize = d.parts().iter().map(|x| x + 1).product();
    rep.check_eq(&sum, &expect, || "total dimension".to_string());
    rep
}

fn count_indices(parts: &[usize], level: usize) -> usize {
    match parts.split_first() {
        None => usize::from(level == 0),
        Some((&first, rest)) => (0..=first.min(level))
            .map(|x| count_indices(rest, level - x))
            .sum(),
    }
}

/// `(v_r, v_r) = [d; r]_q q^{-r(d-r)}` on a single factor `Λ_(d)`.
pub fn inner_formula_module(d: &Composition) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let n = d.total();
    for r in 0..=n {
        let v = basis(d, &OrbitIndex::new(vec![r]));
        let lhs = inner_product(&v, &v).expect("same ambient");
        let rhs = quantum_binomial(n, r).expect("r <= n") * q(-((r * (n - r)) as i64));
        rep.check_eq(&lhs, &rhs, || format!("(v({r}), v({r})) on Λ({n})"));
    }
    rep
}

pub fn orbits_module(d: &Composition) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let fine = Composition::ones(d.total());
    for level in 0..=d.total() {
        let elems = enumerate_basis(d, level);
        let leq = |a: &OrbitIndex, b: &OrbitIndex| closure_leq(a, b).expect("same ambient");
        for a in &elems {
            rep.check(leq(a, a), || format!("{a} ⪯ {a}"));
            for b in &elems {
                if a != b {
                    rep.check(!(leq(a, b) && leq(b, a)), || {
                        format!("antisymmetry fails for {a}, {b}")
                    });
                }
                if leq(a, b) && a != b {
                    let (da, db) = (
                        orbit_dim(d, a).expect("index"),
                        orbit_dim(d, b).expect("index"),
                    );
                    rep.check(da < db, || format!("{a} ≺ {b} but dims {da} >= {db}"));
                }
                for c in &elems {
                    if leq(a, b) && leq(b, c) {
                        rep.check(leq(a, c), || {
                            format!("transitivity fails for {a} ⪯ {b} ⪯ {c}")
                        });
                    }
                }
            }
        }
        let mut cells = 0u64;
        for r in &elems {
            cells += cell_count(d, r).expect("index");
            let dense = dense_cell(d, r).expect("index");
            let refs = binary_refinements(d, r).expect("index");
            rep.check(refs.contains(&dense), || {
                format!("dense cell {dense} is not a refinement of {r}")
            });
            for t in &refs {
                rep.check(leq(t, &dense), || {
                    format!("refinement {t} of {r} is not below {dense}")
                });
            }
            let fd = orbit_dim(&fine, &dense).expect("index");
            let cd = orbit_dim(d, r).expect("index");
            let max_ref = refs
                .iter()
                .map(|t| orbit_dim(&fine, t).expect("index"))
                .max()
                .unwrap_or(0);
            rep.check_eq(&fd, &max_ref, || {
                format!("dense cell of {r} has maximal dimension")
            });
            rep.check(cd <= fd, || {
                format!("orbit {r} has dim {cd} above its dense cell {fd}")
            });
            for s in &elems {
                if closure_lt(s, r).expect("same ambient") {
                    for t in binary_refinements(d, s).expect("index") {
                        rep.check(!closure_lt(&dense, &t).expect("same ambient"), || {
                            format!("refinement {t} of {s} ≺ {r} lies above {dense}")
                        });
                    }
                }
            }
        }
        let expect = binom(d.total() as u64, level as u64);
        rep.check_eq(&cells, &expect, || format!("cell count at level {level}"));
    }
    rep
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

pub fn bar_module(bar: &BarInvolution, d: &Composition) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let all = full_basis(d);
    let a = RingElem::laurent(&[(1, 1), (0, 2)]);
    let b = RingElem::laurent(&[(-2, 3), (3, -1)]);
    for (i, r) in all.iter().enumerate() {
        let v = basis(d, r);
        let Some(pv) = rep.ok(bar.apply(&v), || format!("Ψ(v{r})")) else {
            continue;
        };
        if let Some(ppv) = rep.ok(bar.apply(&pv), || format!("Ψ(Ψ(v{r}))")) {
            rep.check_eq(&ppv, &v, || format!("Ψ² on v{r}"));
        }
        let delta = pv.sub(&v);
        for (s, c) in delta.terms() {
            rep.check(closure_lt(s, r).unwrap_or(false), || {
                format!("Ψ(v{r}) - v{r} has coefficient {c} on v{s}, which is not below {r}")
            });
        }
        let s = &all[(i + 1) % all.len()];
        let w = basis(d, s);
        let combo = v.scale(&a).add(&w.scale(&b));
        if let (Some(lhs), Some(pw)) = (
            rep.ok(bar.apply(&combo), || format!("Ψ on a v{r} + b v{s}")),
            rep.ok(bar.apply(&w), || format!("Ψ(v{s})")),
        ) {
            let rhs = pv.scale(&a.bar()).add(&pw.scale(&b.bar()));
            rep.check_eq(&lhs, &rhs, || format!("anti-linearity on v{r}, v{s}"));
        }
        for (x, xbar) in [(Op::K, Op::KInv), (Op::E, Op::E), (Op::F, Op::F)] {
            let xv = x.apply(&v).expect("generator");
            let Some(lhs) = rep.ok(bar.apply(&xv), || format!("Ψ({x} v{r})")) else {
                continue;
            };
            let rhs = xbar.apply(&pv).expect("generator");
            rep.check_eq(&lhs, &rhs, || format!("Ψ({x} v{r}) = {xbar} Ψ(v{r})"));
        }
    }
    if d.len() == 3 {
        let other = BarInvolution::new(bar.quasi_r().clone()).with_nesting(Nesting::TopCut(2));
        for level in 0..=d.total() {
            let left = canonical_basis(bar, d, level);
            let top = canonical_basis(&other, d, level);
            match (left, top) {
                (Ok(x), Ok(y)) => rep.check(x == y, || {
                    format!(
                        "level {level} tables differ between nestings:\n{}{}",
                        x.render_table(),
                        y.render_table()
                    )
                }),
                (x, y) => {
                    rep.checks += 1;
                    rep.failures.push(format!(
                        "level {level} nesting comparison: left {:?}, top cut {:?}",
                        x.err(),
                        y.err()
                    ));
                }
            }
        }
    }
    rep
}

pub fn positivity_module(bar: &BarInvolution, d: &Composition) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let mut tables = TableSource::new(bar);
    for level in 0..=d.total() {
        let Some(table) = rep.ok(tables.get(d, level).cloned(), || {
            format!("canonical table at level {level}")
        }) else {
            continue;
        };
        rep.ok(table.check_structure(), || {
            format!("table structure at level {level}")
        });
        let rows: Vec<(OrbitIndex, ModuleVector)> =
            table.rows().map(|(r, b)| (r.clone(), b.clone())).collect();
        let mut gram = BTreeMap::new();
        for (r, br) in &rows {
            for (s, bs) in &rows {
                let p = inner_product(br, bs).expect("same ambient");
                let off = if r == s {
                    &p - &RingElem::one()
                } else {
                    p.clone()
                };
                rep.check(off.is_in_qinv_nonneg(), || format!("(b{r}, b{s}) = {p}"));
                gram.insert((r.clone(), s.clone()), p);
            }
        }
        for cut in 1..d.len() {
            let Some(exp) = rep.ok(split_expand(&mut tables, d, cut, level), || {
                format!("split at {cut}, level {level}")
            }) else {
                continue;
            };
            rep.ok(check_split_structure(&exp), || {
                format!("split at {cut}, level {level}")
            });
            let mut pairs = BTreeMap::new();
            for row in &exp.rows {
                let mut sum = ModuleVector::zero(d);
                let mut factors = Vec::new();
                for (x, y, c) in &row.terms {
                    let bx = tables
                        .get(&exp.left, x.total())
                        .and_then(|t| t.row(x).cloned());
                    let by = tables
                        .get(&exp.right, y.total())
                        .and_then(|t| t.row(y).cloned());
                    let (Some(bx), Some(by)) = (
                        rep.ok(bx, || format!("left factor b{x}")),
                        rep.ok(by, || format!("right factor b{y}")),
                    ) else {
                        continue;
                    };
                    sum.add_scaled(c, &crate::repmod::tensor(&bx, &by));
                    factors.push((bx, by, c.clone()));
                }
                let full = &rows.iter().find(|(r, _)| *r == row.index).expect("row").1;
                rep.check_eq(&sum, full, || {
                    format!("split of b{} at {cut} reassembles", row.index)
                });
                pairs.insert(row.index.clone(), factors);
            }
            for (r, fr) in &pairs {
                for (s, fs) in &pairs {
                    let mut p = RingElem::zero();
                    for (x1, y1, c1) in fr {
                        for (x2, y2, c2) in fs {
                            let a = inner_product(x1, x2).expect("same ambient");
                            let b = inner_product(y1, y2).expect("same ambient");
                            p += &(c1 * c2 * a * b);
                        }
                    }
                    rep.check_eq(&p, &gram[&(r.clone(), s.clone())], || {
                        format!("split at {cut} preserves (b{r}, b{s})")
                    });
                }
            }
        }
    }
    rep
}

pub fn embedding_module(bar: &BarInvolution, d: &Composition) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let mut tables = TableSource::new(bar);
    let Some(map) = rep.ok(embed_refine(&mut tables, d), || {
        format!("embedding of Λ{d}")
    }) else {
        return rep;
    };
    check_intertwines(&mut rep, "embed", &map, &GENERATORS);
    let all = full_basis(d);
    let images: Vec<ModuleVector> = all
        .iter()
        .map(|r| map.column(r).expect("column").clone())
        .collect();
    for (i, r) in all.iter().enumerate() {
        for (j, s) in all.iter().enumerate() {
            let lhs = inner_product(&images[i], &images[j]).expect("same ambient");
            let rhs = inner_product(&basis(d, r), &basis(d, s)).expect("same ambient");
            rep.check_eq(&lhs, &rhs, || {
                format!("(embed v{r}, embed v{s}) = (v{r}, v{s})")
            });
        }
    }
    rep
}

pub fn refinement_module(
    bar: &BarInvolution,
    opts: RMatrixOptions,
    d: &Composition,
) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let mut maps = PairMaps::with_options(bar, opts);
    let fine = Composition::ones(d.total());
    for word in reduced_words(d.len())
        .into_iter()
        .filter(|w| !w.letters().is_empty())
    {
        let target = word.act_on(d);
        let lifted = word.lift(d);
        for sign in [Sign::Plus, Sign::Minus] {
            let w = format!("{:?}", word.letters());
            let parts = (
                embed_refine(maps.tables(), d),
                embed_refine(maps.tables(), &target),
            );
            let (Some(e_src), Some(e_dst)) = (
                rep.ok(parts.0, || format!("embedding of Λ{d}")),
                rep.ok(parts.1, || format!("embedding of Λ{target}")),
            ) else {
                continue;
            };
            let coarse = maps.r_move(d, &word, sign);
            let refined = maps.r_move(&fine, &lifted, sign);
            let (Some(coarse), Some(refined)) = (
                rep.ok(coarse, || format!("R_{sign}{d} word {w}")),
                rep.ok(refined, || {
                    format!("R_{sign}{fine} lifted word {:?}", lifted.letters())
                }),
            ) else {
                continue;
            };
            let lhs = e_dst.compose(&coarse.map).expect("shapes");
            let rhs = refined.map.compose(&e_src).expect("shapes");
            rep.check(lhs == rhs, || {
                format!(
                    "embed ∘ R_{sign}({d}, {w}) ≠ R_{sign}({fine}, {:?}) ∘ embed",
                    lifted.letters()
                )
            });
        }
    }
    rep
}

/// Every reduced word of every permutation in `S_l`.
pub fn reduced_words(l: usize) -> Vec<PermWord> {
    let max = l * l.saturating_sub(1) / 2;
    let mut out = vec![PermWord::new(l, vec![]).expect("empty word")];
    let mut frontier = out.clone();
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &frontier {
            for i in 1..l {
                let mut letters = w.letters().to_vec();
                letters.push(i);
                let cand = PermWord::new(l, letters).expect("letter in range");
                if cand.is_reduced() {
                    next.push(cand);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `(-q^{±2})^{Σ d_i d_j}` over pairs inverted by the word.
fn highest_weight_scalar(d: &Composition, word: &PermWord, sign: Sign) -> RingElem {
    let p = word.permutation();
    let parts = d.parts();
    let mut e = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                e += parts[p[i]] * parts[p[j]];
            }
        }
    }
    let base = match sign {
        Sign::Plus => RingElem::laurent(&[(2, -1)]),
        Sign::Minus => RingElem::laurent(&[(-2, -1)]),
    };
    base.pow(e as u32)
}

pub fn braiding_module(bar: &BarInvolution, opts: RMatrixOptions, d: &Composition) -> ModuleReport {
    let mut rep = ModuleReport::new(d);
    let mut maps = PairMaps::with_options(bar, opts);
    let words = reduced_words(d.len());
    let mut moves: BTreeMap<(Vec<usize>, Sign), RMap> = BTreeMap::new();
    for w in &words {
        for sign in [Sign::Plus, Sign::Minus] {
            let name = format!("R_{sign}{d} word {:?}", w.letters());
            if let Some(m) = rep.ok(maps.r_move(d, w, sign), || name.clone()) {
                moves.insert((w.letters().to_vec(), sign), m);
            }
        }
    }
    for ((letters, sign), m) in &moves {
        let word = PermWord::new(d.len(), letters.clone()).expect("valid");
        let name = format!("R_{sign}({d}, {letters:?})");
        check_levels_and_integrality(&mut rep, &name, &m.map);
        check_intertwines(&mut rep, &name, &m.map, &WITH_DIVIDED);

        let zero = OrbitIndex::new(vec![0; d.len()]);
        let top = m
            .map
            .column(&zero)
            .cloned()
            .unwrap_or_else(|| ModuleVector::zero(&m.target));
        let expect = basis(&m.target, &zero).scale(&highest_weight_scalar(d, &word, *sign));
        rep.check_eq(&top, &expect, || {
            format!("{name} on the highest weight vector")
        });

        let back = maps.r_move(&m.target, &word.inverse(), sign.flip());
        if let Some(back) = rep.ok(back, || format!("inverse of {name}")) {
            let id = LinMap::identity(&m.map.domain);
            let composed = back.map.compose(&m.map).expect("shapes");
            rep.check(composed == id, || {
                format!("R_{}(σ(d), σ^-1) ∘ {name} is not the identity", sign.flip())
            });
        }
    }
    for a in &words {
        for b in &words {
            let ab = a.then_after(b);
            if !ab.is_reduced() || a.letters().is_empty() || b.letters().is_empty() {
                continue;
            }
            for sign in [Sign::Plus, Sign::Minus] {
                let (Some(mb), Some(mab)) = (
                    moves.get(&(b.letters().to_vec(), sign)),
                    moves.get(&(ab.letters().to_vec(), sign)),
                ) else {
                    continue;
                };
                let Some(ma) = rep.ok(maps.r_move(&mb.target, a, sign), || {
                    format!("R_{sign}({}, {:?})", mb.target, a.letters())
                }) else {
                    continue;
                };
                let composed = ma.map.compose(&mb.map).expect("shapes");
                rep.check(composed == mab.map, || {
                    format!(
                        "R_{sign} with word {:?} after {:?} differs from {:?} on {d}",
                        a.letters(),
                        b.letters(),
                        ab.letters()
                    )
                });
            }
        }
    }
    let mut by_perm: BTreeMap<_, (&Vec<usize>, &RMap)> = BTreeMap::new();
    for ((letters, sign), m) in &moves {
        let perm = PermWord::new(d.len(), letters.clone())
            .expect("valid")
            .permutation();
        match by_perm.get(&(perm.clone(), *sign)) {
            Some((first, other)) => rep.check(other.map == m.map, || {
                format!("R_{sign} on {d} differs between words {first:?} and {letters:?}")
            }),
            None => {
                by_perm.insert((perm, *sign), (letters, m));
            }
        }
    }
    rep
}
