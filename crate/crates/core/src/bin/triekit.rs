//! `triekit` command-line tool.
//!
//! Exit codes: 0 success, 2 I/O or malformed index file, 3 alphabet overflow,
//! 4 index format version mismatch, 5 malformed input (op lines, engine
//! names, parameters), 6 verification or audit failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use triekit::bench::{self, BenchConfig, BenchEngine};
use triekit::dynamic_index::DynTrieIndex;
use triekit::index_file;
use triekit::report::{display_pattern, parse_pattern, query_report, split_lines, QueryMode, ReportFormat};
use triekit::static_index::{Engine, StaticTrieIndex};
use triekit::suffix_array::{build_suffix_array, build_suffix_tree};
use triekit::suffix_oracle::OnlineSuffixTree;
use triekit::{Code, Error, ProbeCounters, Text};

#[derive(Parser)]
#[command(name = "triekit", version, about = "Deterministic trie and suffix-tree indexes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuildMode {
    Suffix,
    Strings,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Static,
    Tray,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryModeArg {
    Prefix,
    Predecessor,
    Count,
    Enumerate,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Tsv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a static index and write it to a file.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 256)]
        sigma: u32,
        #[arg(long, value_enum, default_value = "suffix")]
        mode: BuildMode,
        #[arg(long, value_enum, default_value = "static")]
        engine: EngineArg,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a pattern file against a saved index.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        patterns: PathBuf,
        #[arg(long, value_enum, default_value = "prefix")]
        mode: QueryModeArg,
        #[arg(long, value_enum, default_value = "tsv")]
        report: FormatArg,
    },
    /// Replay `I <string>`, `Q <pattern>` and `P <pattern>` lines on a dynamic index.
    Dynamic {
        #[arg(long)]
        ops: PathBuf,
        #[arg(long, default_value_t = 256)]
        sigma: u32,
        /// Run a structural audit every K operations.
        #[arg(long)]
        audit_every: Option<usize>,
    },
    /// Prepend a text right to left, checking against fresh builds every K steps.
    PrependStream {
        #[arg(long)]
        text: PathBuf,
        #[arg(long, default_value_t = 256)]
        sigma: u32,
        #[arg(long, default_value_t = 100)]
        check_every: usize,
        /// Test hook: compare step K against a deliberately wrong tree.
        #[arg(long, hide = true)]
        corrupt_at: Option<usize>,
    },
    /// Seeded benchmark over the listed engines.
    Bench {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 256)]
        sigma: u32,
        /// Comma-separated subset of static, tray, dynamic, sa.
        #[arg(long, default_value = "static,tray")]
        engines: String,
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "tsv")]
        report: FormatArg,
    },
}

enum Failure {
    Lib(Error),
    Malformed(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Lib(Error::Io(_) | Error::Format(_)) => 2,
            Failure::Lib(Error::AlphabetOverflow { .. }) => 3,
            Failure::Lib(Error::VersionMismatch { .. }) => 4,
            Failure::Lib(Error::CorruptTrie(_)) | Failure::Verify(_) => 6,
            Failure::Lib(_) | Failure::Malformed(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Malformed(m) | Failure::Verify(m) => m.clone(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn audit_forced() -> bool {
    std::env::var("TRIEKIT_AUDIT").is_ok_and(|v| v == "1")
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Lib(Error::Io(format!("{}: {e}", path.display()))))
}

/// Whole-file text: raw bytes for byte alphabets (one trailing line break
/// dropped), decimal codes otherwise.
fn parse_text(buf: &[u8], sigma: u32) -> Result<Vec<Code>, Failure> {
    let body = buf.strip_suffix(b"\n").map_or(buf, |b| b.strip_suffix(b"\r").unwrap_or(b));
    parse_pattern(body, sigma).map_err(Failure::Malformed)
}

fn cmd_build(input: &Path, sigma: u32, mode: BuildMode, engine: EngineArg, output: &Path) -> CliResult {
    let buf = read(input)?;
    let engine = match engine {
        EngineArg::Static => Engine::Static,
        EngineArg::Tray => Engine::Tray,
    };
    let start = Instant::now();
    let index = match mode {
        BuildMode::Suffix => StaticTrieIndex::from_text(&Text::from_codes(parse_text(&buf, sigma)?, sigma)?, engine)?,
        BuildMode::Strings => {
            let mut seen = std::collections::HashSet::new();
            let mut strings = Vec::new();
            for (i, line) in split_lines(&buf).into_iter().enumerate() {
                let s = parse_pattern(line, sigma).map_err(|m| Failure::Malformed(format!("line {}: {m}", i + 1)))?;
                if seen.insert(s.clone()) {
                    strings.push(s);
                }
            }
            StaticTrieIndex::from_strings(&strings, sigma, engine)?
        }
    };
    eprintln!("build_time_ms\t{:.3}", start.elapsed().as_secs_f64() * 1e3);
    index_file::write_file(output, &index)?;
    let s = triekit::report::summarize(&index);
    println!("n\t{}\nsigma\t{}\ns\t{}\nheavy_nodes\t{}\nengine\t{}\nmode\t{}", s.n, s.sigma, s.s, s.heavy_nodes, s.engine, s.kind);
    Ok(())
}

fn cmd_query(index: &Path, patterns: &Path, mode: QueryModeArg, format: FormatArg) -> CliResult {
    let idx = index_file::read_file(index)?;
    let buf = read(patterns)?;
    let mut pats = Vec::new();
    for (i, line) in split_lines(&buf).into_iter().enumerate() {
        pats.push(parse_pattern(line, idx.sigma()).map_err(|m| Failure::Malformed(format!("line {}: {m}", i + 1)))?);
    }
    let mode = match mode {
        QueryModeArg::Prefix => QueryMode::Prefix,
        QueryModeArg::Predecessor => QueryMode::Predecessor,
        QueryModeArg::Count => QueryMode::Count,
        QueryModeArg::Enumerate => QueryMode::Enumerate,
    };
    let rep = query_report(&idx, &pats, mode)?;
    let fmt = match format {
        FormatArg::Tsv => ReportFormat::Tsv,
        FormatArg::Json => ReportFormat::Json,
    };
    std::io::stdout().write_all(rep.render(fmt).as_bytes())?;
    Ok(())
}

fn cmd_dynamic(ops: &Path, sigma: u32, audit_every: Option<usize>) -> CliResult {
    let buf = read(ops)?;
    let mut d = DynTrieIndex::new(sigma)?;
    let force = audit_forced();
    let mut out = String::new();
    for (i, line) in split_lines(&buf).into_iter().enumerate() {
        let lineno = i + 1;
        let bad = |m: &str| Failure::Malformed(format!("line {lineno}: {m}"));
        let (op, arg) = match line {
            [op] => (*op, &[][..]),
            [op, b' ', rest @ ..] => (*op, rest),
            _ => return Err(bad("expected `I|Q|P <string>`")),
        };
        let s = parse_pattern(arg, sigma).map_err(|m| bad(&m))?;
        let shown = display_pattern(&s, sigma);
        match op {
            b'I' => {
                match d.insert(&s) {
                    Ok(_) | Err(Error::DuplicateKey) => {}
                    Err(e) => return Err(e.into()),
                }
                if force {
                    d.audit().map_err(|e| Failure::Verify(format!("line {lineno}: audit failed: {e}")))?;
                }
            }
            b'Q' => {
                let mut k = ProbeCounters::default();
                let m = d.search_counted(&s, &mut k)?;
                let count = if m.outcome.is_match() { m.count } else { 0 };
                out.push_str(&format!("Q\t{shown}\t{}\t{count}\t{}\t{}\n", m.outcome.as_str(), m.matched_len, k.to_kv()));
            }
            b'P' => {
                let mut k = ProbeCounters::default();
                let p = d.predecessor_counted(&s, &mut k)?;
                let found = p.map_or_else(|| "-".to_string(), |id| display_pattern(d.string(id), sigma));
                out.push_str(&format!("P\t{shown}\t{found}\t{}\n", k.to_kv()));
            }
            _ => return Err(bad("unknown operation")),
        }
        if audit_every.is_some_and(|k| k > 0 && lineno % k == 0) {
            d.audit().map_err(|e| Failure::Verify(format!("line {lineno}: audit failed: {e}")))?;
        }
    }
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn cmd_prepend_stream(text: &Path, sigma: u32, every: usize, corrupt_at: Option<usize>) -> CliResult {
    if every == 0 {
        return Err(Failure::Malformed("--check-every must be positive".into()));
    }
    let codes = parse_text(&read(text)?, sigma)?;
    Text::from_codes(codes.clone(), sigma)?;
    let mut tree = OnlineSuffixTree::new(sigma)?;
    let force = audit_forced();
    let mut checks = 0;
    let mut out = std::io::stdout().lock();
    for (i, &a) in codes.iter().rev().enumerate() {
        let step = i + 1;
        tree.prepend(a)?;
        if force {
            tree.audit_links().map_err(|e| Failure::Verify(format!("step {step}: link audit failed: {e}")))?;
        }
        if step % every == 0 {
            let mut cur = tree.text();
            if corrupt_at == Some(step) {
                cur.pop();
            }
            let t = Text::from_codes(cur, sigma)?;
            let fresh = build_suffix_tree(&build_suffix_array(&t), &t);
            if fresh.canonical_labels() != tree.canonical_labels() {
                return Err(Failure::Verify(format!("step {step}: tree differs from a fresh build")));
            }
            checks += 1;
            writeln!(out, "verified\t{step}\tnodes={}\tsteps={}", tree.node_count(), tree.steps())?;
        }
    }
    writeln!(out, "done\tn={}\tverifications={checks}\tsteps={}", codes.len(), tree.steps())?;
    Ok(())
}

fn cmd_bench(cfg: BenchConfig, format: FormatArg) -> CliResult {
    let (rep, timings) = bench::run(&cfg)?;
    for t in &timings {
        eprintln!(
            "{}\tbuild_ms={:.3}\tquery_ms={:.3}",
            t.engine.as_str(),
            t.build.as_secs_f64() * 1e3,
            t.query.as_secs_f64() * 1e3
        );
    }
    let text = match format {
        FormatArg::Tsv => rep.to_tsv(),
        FormatArg::Json => rep.to_json(),
    };
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Build { input, sigma, mode, engine, output } => cmd_build(&input, sigma, mode, engine, &output),
        Cmd::Query { index, patterns, mode, report } => cmd_query(&index, &patterns, mode, report),
        Cmd::Dynamic { ops, sigma, audit_every } => cmd_dynamic(&ops, sigma, audit_every),
        Cmd::PrependStream { text, sigma, check_every, corrupt_at } => {
            cmd_prepend_stream(&text, sigma, check_every, corrupt_at)
        }
        Cmd::Bench { n, sigma, engines, queries, seed, report } => match BenchEngine::parse_list(&engines) {
            Ok(engines) => cmd_bench(BenchConfig { n, sigma, engines, queries, seed }, report),
            Err(e) => Err(Failure::Malformed(e.to_string())),
        },
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("triekit: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
