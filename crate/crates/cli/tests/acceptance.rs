//! Acceptance criteria, one line of output each. Exact comparisons throughout.
//!
//! Criteria 1-10 take a `Setup` so that criterion 11 can rerun them against
//! deliberately broken inputs and confirm that something notices.

use std::process::Command;
use std::time::{Duration, Instant};

use qsl2::canonical::{canonical_basis, split_expand, TableSource, STANDARD_ORDER};
use qsl2::repmod::{inner_product, Composition, ModuleVector, OrbitIndex};
use qsl2::rmatrix::{matrix_in_basis, BasisKind, FactorOrder, PairMaps, RMatrixOptions};
use qsl2::verify::{
    braiding_module, embedding_module, embedding_modules, refinement_module, refinement_modules,
    run_suite, ModuleReport, Suite, VerifyConfig,
};
use qsl2::{BarInvolution, CanonicalTable, PermWord, QuasiR, RingElem, Sign};

struct Setup {
    bar: BarInvolution,
    opts: RMatrixOptions,
    /// Whether to also drive the binary; the binary always runs the correct code.
    cli: bool,
}

impl Setup {
    fn standard() -> Self {
        Self {
            bar: BarInvolution::standard().expect("quasi-R solves"),
            opts: RMatrixOptions::default(),
            cli: true,
        }
    }

    fn mutated(kappa_negated: bool, opts: RMatrixOptions) -> Self {
        let quasi_r = QuasiR::cached(STANDARD_ORDER).expect("quasi-R solves");
        let quasi_r = if kappa_negated {
            quasi_r.with_negated(1)
        } else {
            quasi_r
        };
        Self {
            bar: BarInvolution::new(quasi_r),
            opts,
            cli: false,
        }
    }
}

type Outcome = Result<(), String>;

fn comp(p: &[usize]) -> Composition {
    Composition::new(p.to_vec()).unwrap()
}

fn idx(r: &[usize]) -> OrbitIndex {
    OrbitIndex::new(r.to_vec())
}

fn l(pairs: &[(i64, i64)]) -> RingElem {
    RingElem::laurent(pairs)
}

fn vector(d: &Composition, terms: &[(&[usize], RingElem)]) -> ModuleVector {
    ModuleVector::from_terms(d, terms.iter().map(|(r, c)| (idx(r), c.clone()))).unwrap()
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qsl2"))
        .args(args)
        .env_remove("QSL2_CACHE_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reports(reps: Vec<ModuleReport>) -> Outcome {
    for rep in reps {
        if let Some(f) = rep.failures.first() {
            return Err(format!("on Λ{}: {f}", rep.ambient));
        }
    }
    Ok(())
}

fn expected_2_2(d: &Composition) -> Vec<(OrbitIndex, ModuleVector)> {
    vec![
        (idx(&[2, 0]), vector(d, &[(&[2, 0], l(&[(0, 1)]))])),
        (
            idx(&[1, 1]),
            vector(
                d,
                &[(&[1, 1], l(&[(0, 1)])), (&[2, 0], l(&[(-1, 1), (-3, 1)]))],
            ),
        ),
        (
            idx(&[0, 2]),
            vector(
                d,
                &[
                    (&[0, 2], l(&[(0, 1)])),
                    (&[1, 1], l(&[(-1, 1)])),
                    (&[2, 0], l(&[(-4, 1)])),
                ],
            ),
        ),
    ]
}

fn compare_table(t: &CanonicalTable, want: &[(OrbitIndex, ModuleVector)]) -> Outcome {
    let got: Vec<(OrbitIndex, ModuleVector)> =
        t.rows().map(|(r, b)| (r.clone(), b.clone())).collect();
    ensure(got == want, || format!("got\n{}", t.render_table()))
}

fn criterion_1(s: &Setup) -> Outcome {
    let d = comp(&[2, 2]);
    let want = expected_2_2(&d);
    let t = canonical_basis(&s.bar, &d, 2).map_err(|e| e.to_string())?;
    compare_table(&t, &want)?;
    if s.cli {
        let json = cli(&["canon", "--d", "2,2", "--r", "2", "--format", "json"])?;
        let t: CanonicalTable = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        compare_table(&t, &want)?;
        let table = cli(&["canon", "--d", "2,2", "--r", "2", "--format", "table"])?;
        ensure(
            table.lines().filter(|x| x.starts_with("b(")).count() == 3,
            || table.clone(),
        )?;
    }
    Ok(())
}

type SplitTerm = (OrbitIndex, OrbitIndex, RingElem);

fn criterion_2(s: &Setup) -> Outcome {
    let d = comp(&[1, 1, 1]);
    let one = l(&[(0, 1)]);
    let want: Vec<(OrbitIndex, Vec<SplitTerm>)> = vec![
        (
            idx(&[1, 0, 0]),
            vec![(idx(&[1]), idx(&[0, 0]), one.clone())],
        ),
        (
            idx(&[0, 1, 0]),
            vec![
                (idx(&[0]), idx(&[1, 0]), one.clone()),
                (idx(&[1]), idx(&[0, 0]), l(&[(-1, 1)])),
            ],
        ),
        (
            idx(&[0, 0, 1]),
            vec![
                (idx(&[0]), idx(&[0, 1]), one.clone()),
                (idx(&[1]), idx(&[0, 0]), l(&[(-2, 1)])),
            ],
        ),
    ];
    let mut tables = TableSource::new(&s.bar);
    let exp = split_expand(&mut tables, &d, 1, 1).map_err(|e| e.to_string())?;
    let got: Vec<_> = exp
        .rows
        .iter()
        .map(|r| (r.index.clone(), r.terms.clone()))
        .collect();
    ensure(got == want, || format!("got\n{}", exp.render_table()))?;
    if s.cli {
        let json = cli(&[
            "split", "--d", "1,1,1", "--at", "1", "--r", "1", "--format", "json",
        ])?;
        let v: serde_json::Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        let rows = v["rows"].as_array().ok_or("rows missing")?;
        ensure(rows.len() == want.len(), || format!("{} rows", rows.len()))?;
        for (row, (r, terms)) in rows.iter().zip(&want) {
            let got_r: OrbitIndex =
                serde_json::from_value(row["r_index"].clone()).map_err(|e| e.to_string())?;
            ensure(&got_r == r, || format!("row {got_r} in place of {r}"))?;
            let got_terms = row["terms"].as_array().ok_or("terms missing")?;
            ensure(got_terms.len() == terms.len(), || {
                format!("b{r} has {} terms", got_terms.len())
            })?;
            for (t, (a, b, c)) in got_terms.iter().zip(terms) {
                let ga: OrbitIndex =
                    serde_json::from_value(t["left"].clone()).map_err(|e| e.to_string())?;
                let gb: OrbitIndex =
                    serde_json::from_value(t["right"].clone()).map_err(|e| e.to_string())?;
                let gc: RingElem =
                    serde_json::from_value(t["coeff"].clone()).map_err(|e| e.to_string())?;
                ensure((&ga, &gb, &gc) == (a, b, c), || {
                    format!("b{r}: {gc} b{ga}⊗b{gb}")
                })?;
            }
        }
    }
    Ok(())
}

fn catr1(sign: Sign) -> Vec<Vec<Vec<RingElem>>> {
    let m = |h: i64, c: i64| match sign {
        Sign::Plus => l(&[(h, c)]),
        Sign::Minus => l(&[(-h, c)]),
    };
    vec![
        vec![vec![m(2, -1)]],
        vec![vec![m(0, 1), RingElem::zero()], vec![m(1, -1), m(2, -1)]],
        vec![vec![m(2, -1)]],
    ]
}

fn criterion_3(s: &Setup) -> Outcome {
    let d = comp(&[1, 1]);
    let word = PermWord::new(2, vec![1]).unwrap();
    let mut maps = PairMaps::with_options(&s.bar, s.opts);
    for sign in [Sign::Plus, Sign::Minus] {
        let m = maps.r_move(&d, &word, sign).map_err(|e| e.to_string())?;
        for (level, want) in catr1(sign).into_iter().enumerate() {
            let got = matrix_in_basis(maps.tables(), &m.map, level, BasisKind::Canonical)
                .map_err(|e| e.to_string())?;
            ensure(got.rows == want, || {
                format!("R_{sign} level {level}:\n{}", got.render_table())
            })?;
        }
        if s.cli {
            let json = cli(&[
                "rmat",
                "--d",
                "1,1",
                "--word",
                "1",
                "--sign",
                &sign.to_string(),
                "--basis",
                "canonical",
                "--format",
                "json",
            ])?;
            let v: serde_json::Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
            let blocks = v.as_array().ok_or("expected one matrix per level")?;
            ensure(blocks.len() == 3, || format!("{} levels", blocks.len()))?;
            for (block, want) in blocks.iter().zip(catr1(sign)) {
                let rows: Vec<Vec<RingElem>> =
                    serde_json::from_value(block["rows"].clone()).map_err(|e| e.to_string())?;
                ensure(rows == want, || format!("binary R_{sign}: {block}"))?;
            }
        }
    }
    Ok(())
}

fn criterion_4(s: &Setup) -> Outcome {
    let mut maps = PairMaps::with_options(&s.bar, s.opts);
    for d1 in 1..=3 {
        for d2 in 1..=3 {
            let m = maps.pair(Sign::Plus, d1, d2).map_err(|e| e.to_string())?;
            let got = matrix_in_basis(maps.tables(), &m.map, 0, BasisKind::Canonical)
                .map_err(|e| e.to_string())?;
            let want = vec![vec![l(&[(2, -1)]).pow((d1 * d2) as u32)]];
            ensure(got.rows == want, || {
                format!("({d1},{d2}): {}", got.render_table())
            })?;
        }
    }
    Ok(())
}

/// Symmetric Gaussian binomial by Pascal's rule `[n; k] = q^k [n-1; k] + q^{k-n} [n-1; k-1]`.
fn binomial_oracle(n: usize, k: usize) -> RingElem {
    let mut rows = vec![vec![RingElem::one()]];
    for m in 1..=n {
        let prev = &rows[m - 1];
        let row: Vec<RingElem> = (0..=m)
            .map(|j| {
                let mut x = RingElem::zero();
                if j < m {
                    x = x + RingElem::q_pow(j as i64) * prev[j].clone();
                }
                if j > 0 {
                    x = x + RingElem::q_pow(j as i64 - m as i64) * prev[j - 1].clone();
                }
                x
            })
            .collect();
        rows.push(row);
    }
    rows[n][k].clone()
}

fn criterion_5(_: &Setup) -> Outcome {
    for d in 0..=8usize {
        let m = comp(&[d]);
        for r in 0..=d {
            let v = ModuleVector::basis(&m, idx(&[r])).unwrap();
            let got = inner_product(&v, &v).map_err(|e| e.to_string())?;
            let want = binomial_oracle(d, r) * RingElem::q_pow(-((r * (d - r)) as i64));
            ensure(got == want, || {
                format!("(v{r}, v{r}) on Λ({d}) = {got}, expected {want}")
            })?;
        }
    }
    Ok(())
}

fn suite(s: &Setup, suite: Suite, max_total: usize) -> Outcome {
    let cfg = VerifyConfig {
        bar: &s.bar,
        r_options: s.opts,
        max_total,
    };
    let rep = run_suite(&cfg, suite);
    match rep.witness() {
        None => Ok(()),
        Some((d, w)) => Err(format!(
            "{} failures, first on Λ{d}: {w}",
            rep.failures.len()
        )),
    }
}

fn criterion_6(s: &Setup) -> Outcome {
    suite(s, Suite::Positivity, 6)
}

fn criterion_7(s: &Setup) -> Outcome {
    suite(s, Suite::Algebra, 6)
}

fn criterion_8(s: &Setup) -> Outcome {
    suite(s, Suite::Bar, 6)
}

fn criterion_9(s: &Setup) -> Outcome {
    let mut maps = PairMaps::with_options(&s.bar, s.opts);
    let w121 = PermWord::new(3, vec![1, 2, 1]).unwrap();
    let w212 = PermWord::new(3, vec![2, 1, 2]).unwrap();
    let mut modules = Vec::new();
    for p in [[1, 1, 1], [1, 2, 1], [2, 1, 1]] {
        let d = comp(&p);
        for sign in [Sign::Plus, Sign::Minus] {
            let a = maps.r_move(&d, &w121, sign).map_err(|e| e.to_string())?;
            let b = maps.r_move(&d, &w212, sign).map_err(|e| e.to_string())?;
            ensure(a.map == b.map, || {
                format!("Yang–Baxter fails for R_{sign} on Λ{d}")
            })?;
        }
        modules.push(d);
    }
    for d1 in 1..=3 {
        for d2 in 1..=3 {
            modules.push(comp(&[d1, d2]));
        }
    }
    reports(
        modules
            .iter()
            .map(|d| braiding_module(&s.bar, s.opts, d))
            .collect(),
    )
}

fn criterion_10(s: &Setup) -> Outcome {
    reports(
        embedding_modules()
            .iter()
            .map(|d| embedding_module(&s.bar, d))
            .collect(),
    )?;
    reports(
        refinement_modules()
            .iter()
            .map(|d| refinement_module(&s.bar, s.opts, d))
            .collect(),
    )
}

struct Criterion {
    title: &'static str,
    limit: Duration,
    run: fn(&Setup) -> Outcome,
}

fn criteria() -> Vec<Criterion> {
    let c = |title, secs, run| Criterion {
        title,
        limit: Duration::from_secs(secs),
        run,
    };
    vec![
        c(
            "canonical basis of Λ(2,2) at level 2",
            1,
            criterion_1 as fn(&Setup) -> Outcome,
        ),
        c("split of Λ(1,1,1) after slot 1 at level 1", 1, criterion_2),
        c("R± on Λ(1,1) in the canonical basis", 1, criterion_3),
        c("highest weight scalar of R+ for d1, d2 ≤ 3", 5, criterion_4),
        c("inner product of v_r on Λ(d) for d ≤ 8", 5, criterion_5),
        c("positivity suite, total ≤ 6", 60, criterion_6),
        c("algebra relations, total ≤ 6", 30, criterion_7),
        c("bar involution axioms, total ≤ 6", 30, criterion_8),
        c(
            "braiding: Yang–Baxter, inverses, intertwining",
            60,
            criterion_9,
        ),
        c(
            "refinement embedding and its compatibility with R",
            30,
            criterion_10,
        ),
    ]
}

fn main() {
    let standard = Setup::standard();
    let mut all_ok = true;
    for (i, c) in criteria().iter().enumerate() {
        let start = Instant::now();
        let outcome = (c.run)(&standard);
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            ensure(elapsed <= c.limit, || {
                format!("took {:.2?}, limit {:?}", elapsed, c.limit)
            })
        });
        match &outcome {
            Ok(()) => println!("criterion {:>2} PASS  {} ({:.2?})", i + 1, c.title, elapsed),
            Err(e) => {
                all_ok = false;
                println!(
                    "criterion {:>2} FAIL  {} ({:.2?}): {e}",
                    i + 1,
                    c.title,
                    elapsed
                );
            }
        }
    }

    let mutations = [
        (
            "κ_1 negated",
            Setup::mutated(true, RMatrixOptions::default()),
        ),
        (
            "diagonal applied before Θ",
            Setup::mutated(
                false,
                RMatrixOptions {
                    order: FactorOrder::DiagonalFirst,
                    drop_scalar: false,
                },
            ),
        ),
        (
            "swap applied first",
            Setup::mutated(
                false,
                RMatrixOptions {
                    order: FactorOrder::TransposeFirst,
                    drop_scalar: false,
                },
            ),
        ),
        (
            "global scalar dropped",
            Setup::mutated(
                false,
                RMatrixOptions {
                    order: FactorOrder::Standard,
                    drop_scalar: true,
                },
            ),
        ),
    ];
    let mut caught = Vec::new();
    let mut missed = Vec::new();
    for (name, setup) in &mutations {
        let hit = criteria()
            .iter()
            .enumerate()
            .find(|(_, c)| (c.run)(setup).is_err())
            .map(|(i, _)| i + 1);
        match hit {
            Some(i) => caught.push(format!("{name} → criterion {i}")),
            None => missed.push(*name),
        }
    }
    if missed.is_empty() {
        println!(
            "criterion 11 PASS  mutation sensitivity: {}",
            caught.join("; ")
        );
    } else {
        all_ok = false;
        println!(
            "criterion 11 FAIL  mutation sensitivity: undetected {}",
            missed.join(", ")
        );
    }

    if !all_ok {
        std::process::exit(1);
    }
}
