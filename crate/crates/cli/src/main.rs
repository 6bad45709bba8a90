use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use qsl2::cache::{TableCache, CACHE_DIR_ENV};
use qsl2::canonical::{embed_refine, split_expand, TableSource};
use qsl2::orbits::OrbitPoset;
use qsl2::repmod::{enumerate_basis, inner_product, parse_usize_list, ModuleError};
use qsl2::rmatrix::{
    matrix_in_basis, BasisKind, FactorOrder, MatrixView, PairMaps, RMatError, RMatrixOptions,
};
use qsl2::verify::{run_suite, Suite, VerifyConfig};
use qsl2::{
    BarInvolution, CanonError, Composition, ModuleVector, OrbitIndex, PermWord, QuasiR, Sign,
};

#[derive(Parser)]
#[command(
    name = "qsl2",
    version,
    about = "Exact canonical bases, bar involutions and R-matrices for tensor products of quantum sl2 modules"
)]
struct Cli {
    /// Directory for cached canonical tables
    #[arg(long, global = true, env = CACHE_DIR_ENV)]
    cache_dir: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical basis of Λ_d in terms of the standard basis
    Canon {
        #[command(flatten)]
        module: ModuleArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Braiding map R_±(d, σ) for a reduced word of σ
    Rmat {
        #[command(flatten)]
        module: ModuleArgs,
        /// Comma-separated letters i of s_i; the rightmost acts first
        #[arg(long, default_value = "1")]
        word: String,
        #[arg(long, value_enum, default_value_t = SignArg::Plus)]
        sign: SignArg,
        #[arg(long, value_enum, default_value_t = BasisArg::Canonical)]
        basis: BasisArg,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Canonical basis of Λ_d expanded in the product of canonical bases of two factors
    Split {
        #[command(flatten)]
        module: ModuleArgs,
        /// Number of leading slots in the left factor
        #[arg(long)]
        at: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Bar involution of a standard basis vector
    Bar {
        #[arg(long, value_parser = parse_composition)]
        d: Composition,
        /// Orbit index r, comma-separated
        #[arg(long, value_parser = parse_index)]
        vector: OrbitIndex,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Refinement embedding Λ_d → Λ_(1,…,1) on the standard basis
    Embed {
        #[command(flatten)]
        module: ModuleArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Gram matrix of the standard or canonical basis
    Inner {
        #[command(flatten)]
        module: ModuleArgs,
        #[arg(long, value_enum, default_value_t = BasisArg::Standard)]
        basis: BasisArg,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Closure order on the orbits of one level
    Orbits {
        #[arg(long, value_parser = parse_composition)]
        d: Composition,
        #[arg(long)]
        r: usize,
        #[arg(long, value_enum, default_value_t = PosetFormat::Table)]
        format: PosetFormat,
    },
    /// Runs every property suite on all compositions up to a total
    Verify {
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        max_total: u64,
        /// Run only these suites
        #[arg(long, value_enum)]
        suite: Vec<SuiteArg>,
        /// Inject a fault, to confirm the suites notice it
        #[arg(long, value_enum)]
        mutate: Option<Mutation>,
    },
}

#[derive(Args)]
struct ModuleArgs {
    /// Composition, comma-separated
    #[arg(long, value_parser = parse_composition)]
    d: Composition,
    /// Weight level; all levels when omitted
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum PosetFormat {
    Json,
    Table,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Standard,
    Canonical,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
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

#[derive(Clone, Copy, ValueEnum)]
enum Mutation {
    NegateKappa1,
    DiagonalFirst,
    TransposeFirst,
    DropScalar,
}

fn parse_composition(s: &str) -> Result<Composition, String> {
    s.parse::<Composition>().map_err(|e| e.to_string())
}

fn parse_index(s: &str) -> Result<OrbitIndex, String> {
    parse_usize_list(s)
        .map(OrbitIndex::new)
        .map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<ModuleError> for Failure {
    fn from(e: ModuleError) -> Self {
        match e {
            ModuleError::IntegralityViolation(_) | ModuleError::CodomainMismatch { .. } => {
                Failure::Internal(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<CanonError> for Failure {
    fn from(e: CanonError) -> Self {
        match e {
            CanonError::Module(m) => m.into(),
            CanonError::Orbit(_)
            | CanonError::CutOutOfRange { .. }
            | CanonError::LevelOutOfRange { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl From<RMatError> for Failure {
    fn from(e: RMatError) -> Self {
        match e {
            RMatError::Module(m) => m.into(),
            RMatError::Canon(c) => c.into(),
            RMatError::InvalidLetter { .. } | RMatError::NonReducedWord { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cache = cli.cache_dir.clone().map(TableCache::new);
    match run(cli.command, cache.as_ref()) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn levels(d: &Composition, r: Option<usize>) -> Result<Vec<usize>, Failure> {
    match r {
        Some(r) if r > d.total() => Err(Failure::Usage(format!(
            "level {r} exceeds the total {} of {d}",
            d.total()
        ))),
        Some(r) => Ok(vec![r]),
        None => Ok((0..=d.total()).collect()),
    }
}

fn standard_bar() -> Result<BarInvolution, Failure> {
    Ok(BarInvolution::standard()?)
}

fn tables<'a>(bar: &'a BarInvolution, cache: Option<&'a TableCache>) -> TableSource<'a> {
    match cache {
        Some(c) => TableSource::with_cache(bar, c),
        None => TableSource::new(bar),
    }
}

fn json_out(value: &impl Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

/// One JSON value when a single level was requested, an array otherwise.
fn json_levels<T: Serialize>(items: &[T], single: bool) {
    if single {
        json_out(&items[0]);
    } else {
        json_out(&items);
    }
}

fn run(command: Command, cache: Option<&TableCache>) -> Result<ExitCode, Failure> {
    match command {
        Command::Canon { module, format } => {
            let bar = standard_bar()?;
            let mut src = tables(&bar, cache);
            let mut out = Vec::new();
            for r in levels(&module.d, module.r)? {
                out.push(src.get(&module.d, r)?.clone());
            }
            match format {
                Format::Json => json_levels(&out, module.r.is_some()),
                Format::Table => print!(
                    "{}",
                    out.iter()
                        .map(|t| t.render_table())
                        .collect::<Vec<_>>()
                        .join("\n")
                ),
            }
        }
        Command::Rmat {
            module,
            word,
            sign,
            basis,
            format,
        } => {
            let bar = standard_bar()?;
            let word = PermWord::parse(module.d.len(), &word)?;
            let sign = match sign {
                SignArg::Plus => Sign::Plus,
                SignArg::Minus => Sign::Minus,
            };
            let kind = match basis {
                BasisArg::Standard => BasisKind::Standard,
                BasisArg::Canonical => BasisKind::Canonical,
            };
            let mut maps = PairMaps::from_tables(tables(&bar, cache), RMatrixOptions::default());
            let m = maps.r_move(&module.d, &word, sign)?;
            let mut out = Vec::new();
            for r in levels(&module.d, module.r)? {
                out.push(matrix_in_basis(maps.tables(), &m.map, r, kind)?);
            }
            match format {
                Format::Json => json_levels(&out, module.r.is_some()),
                Format::Table => print_blocks(&out, MatrixView::render_table),
            }
        }
        Command::Split { module, at, format } => {
            let bar = standard_bar()?;
            let mut src = tables(&bar, cache);
            let mut out = Vec::new();
            for r in levels(&module.d, module.r)? {
                out.push(split_expand(&mut src, &module.d, at, r)?);
            }
            match format {
                Format::Json => json_levels(&out, module.r.is_some()),
                Format::Table => print_blocks(&out, |e| e.render_table()),
            }
        }
        Command::Bar { d, vector, format } => {
            let bar = standard_bar()?;
            let v = ModuleVector::basis(&d, vector.clone())?;
            let image = bar.apply(&v)?;
            match format {
                Format::Json => json_out(&json!({ "d": d, "r": vector, "image": image })),
                Format::Table => println!("Ψ(v{vector}) = {image}"),
            }
        }
        Command::Embed { module, format } => {
            let bar = standard_bar()?;
            let mut src = tables(&bar, cache);
            let map = embed_refine(&mut src, &module.d)?;
            let target = Composition::ones(module.d.total());
            let mut columns = Vec::new();
            for r in levels(&module.d, module.r)? {
                for idx in enumerate_basis(&module.d, r) {
                    let image = map.column(&idx).expect("column").clone();
                    columns.push((idx, image));
                }
            }
            match format {
                Format::Json => json_out(&json!({
                    "d": module.d,
                    "target_d": target,
                    "columns": columns.iter().map(|(r, img)| json!({ "r": r, "image": img })).collect::<Vec<_>>(),
                })),
                Format::Table => {
                    println!("embedding {} → {}", module.d, target);
                    let width = columns
                        .iter()
                        .map(|(r, _)| format!("v{r}").len())
                        .max()
                        .unwrap_or(0);
                    for (r, img) in &columns {
                        println!("{:<width$} ↦ {img}", format!("v{r}"));
                    }
                }
            }
        }
        Command::Inner {
            module,
            basis,
            format,
        } => {
            let bar = standard_bar()?;
            let mut src = tables(&bar, cache);
            let kind = match basis {
                BasisArg::Standard => BasisKind::Standard,
                BasisArg::Canonical => BasisKind::Canonical,
            };
            let mut out = Vec::new();
            for r in levels(&module.d, module.r)? {
                let idx = enumerate_basis(&module.d, r);
                let vectors: Vec<ModuleVector> = match kind {
                    BasisKind::Standard => idx
                        .iter()
                        .map(|s| ModuleVector::basis(&module.d, s.clone()))
                        .collect::<Result<_, _>>()?,
                    BasisKind::Canonical => {
                        let t = src.get(&module.d, r)?;
                        idx.iter()
                            .map(|s| t.row(s).cloned())
                            .collect::<Result<_, _>>()?
                    }
                };
                let mut rows = Vec::new();
                for a in &vectors {
                    let mut row = Vec::new();
                    for b in &vectors {
                        row.push(inner_product(a, b)?);
                    }
                    rows.push(row);
                }
                out.push(MatrixView {
                    source_d: module.d.clone(),
                    target_d: module.d.clone(),
                    basis: kind,
                    level: r,
                    row_indices: idx.clone(),
                    col_indices: idx,
                    rows,
                });
            }
            match format {
                Format::Json => json_levels(&out, module.r.is_some()),
                Format::Table => print_blocks(&out, render_gram),
            }
        }
        Command::Orbits { d, r, format } => {
            levels(&d, Some(r))?;
            let poset = OrbitPoset::new(&d, r);
            match format {
                PosetFormat::Json => json_out(&poset.export()),
                PosetFormat::Dot => print!("{}", poset.to_dot()),
                PosetFormat::Table => {
                    let export = poset.export();
                    println!("orbits of {d} at level {r}");
                    for node in &export.nodes {
                        let covers: Vec<String> =
                            node.covers.iter().map(|s| s.to_string()).collect();
                        println!(
                            "{}  dim {}  cells {}  covers {}",
                            node.index,
                            node.dim,
                            node.cells,
                            if covers.is_empty() {
                                "-".to_string()
                            } else {
                                covers.join(" ")
                            }
                        );
                    }
                }
            }
        }
        Command::Verify {
            max_total,
            suite,
            mutate,
        } => return verify(max_total as usize, &suite, mutate),
    }
    Ok(ExitCode::SUCCESS)
}

fn print_blocks<T>(items: &[T], render: impl Fn(&T) -> String) {
    print!(
        "{}",
        items.iter().map(render).collect::<Vec<_>>().join("\n")
    );
}

fn render_gram(m: &MatrixView) -> String {
    let sym = match m.basis {
        BasisKind::Standard => "v",
        BasisKind::Canonical => "b",
    };
    let mut out = format!("Gram matrix of {} at level {}\n", m.source_d, m.level);
    for (i, r) in m.row_indices.iter().enumerate() {
        for (j, s) in m.col_indices.iter().enumerate() {
            if j >= i && !m.rows[i][j].is_zero() {
                out.push_str(&format!("({sym}{r}, {sym}{s}) = {}\n", m.rows[i][j]));
            }
        }
    }
    out
}

fn verify(
    max_total: usize,
    only: &[SuiteArg],
    mutate: Option<Mutation>,
) -> Result<ExitCode, Failure> {
    let quasi_r = QuasiR::cached(qsl2::canonical::STANDARD_ORDER)?;
    let quasi_r = match mutate {
        Some(Mutation::NegateKappa1) => quasi_r.with_negated(1),
        _ => quasi_r,
    };
    let bar = BarInvolution::new(quasi_r);
    let r_options = RMatrixOptions {
        order: match mutate {
            Some(Mutation::DiagonalFirst) => FactorOrder::DiagonalFirst,
            Some(Mutation::TransposeFirst) => FactorOrder::TransposeFirst,
            _ => FactorOrder::Standard,
        },
        drop_scalar: matches!(mutate, Some(Mutation::DropScalar)),
    };
    let cfg = VerifyConfig {
        bar: &bar,
        r_options,
        max_total,
    };
    let suites: Vec<Suite> = if only.is_empty() {
        Suite::ALL.to_vec()
    } else {
        let mut s: Vec<Suite> = only.iter().map(|&a| suite_of(a)).collect();
        s.sort();
        s.dedup();
        s
    };
    let mut failed = 0;
    for s in suites {
        let rep = run_suite(&cfg, s);
        let status = if rep.passed() {
            "ok".to_string()
        } else {
            format!("FAILED ({})", rep.failures.len())
        };
        println!(
            "{:<14} modules {:>3}  checks {:>7}  {status}",
            s.name(),
            rep.modules,
            rep.checks
        );
        if let Some((d, witness)) = rep.witness() {
            failed += 1;
            println!("  witness on Λ{d}: {witness}");
        }
    }
    if failed == 0 {
        println!("all suites passed for total ≤ {max_total}");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failed} suite(s) failed for total ≤ {max_total}");
        Ok(ExitCode::from(1))
    }
}

fn suite_of(a: SuiteArg) -> Suite {
    match a {
        SuiteArg::Algebra => Suite::Algebra,
        SuiteArg::Pairing => Suite::Pairing,
        SuiteArg::InnerFormula => Suite::InnerFormula,
        SuiteArg::Orbits => Suite::Orbits,
        SuiteArg::Bar => Suite::Bar,
        SuiteArg::Positivity => Suite::Positivity,
        SuiteArg::Embedding => Suite::Embedding,
        SuiteArg::Refinement => Suite::Refinement,
        SuiteArg::Braiding => Suite::Braiding,
    }
}
