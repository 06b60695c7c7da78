//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Hard checks fail the run. Soft checks (documented constants) are reported
//! with their measured values and never fail the run.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triekit::bench::{self, BenchConfig, BenchEngine, MAINTENANCE_C};
use triekit::dynamic_index::DynTrieIndex;
use triekit::index_file;
use triekit::report::{query_report, QueryMode};
use triekit::static_index::{Engine, StaticTrieIndex};
use triekit::suffix_array::{build_suffix_array, build_suffix_tree, naive_suffix_array};
use triekit::suffix_oracle::{FmaTree, OnlineSuffixTree};
use triekit::wexp_tree::WexpTree;
use triekit::{lg_lg, Code, Error, Outcome, ProbeCounters, Text};

/// Time budgets per criterion.
const SA_BUDGET: Duration = Duration::from_secs(10);
const SEARCH_BUDGET: Duration = Duration::from_secs(60);
const WEXP_BUDGET: Duration = Duration::from_secs(120);
/// Soft constant for static predecessor probes: `spp <= C * lg lg sigma + C` per query.
const SPP_C: f64 = 4.0;

struct Verdict {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Verdict {
    Verdict { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Verdict {
    Verdict { ok: false, detail: detail.into() }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return fail(format!($($fmt)*));
        }
    };
}

/// Independent scan oracle for suffix indexes: works on the raw text without
/// sorting. Returns (outcome, interval, matched_len).
fn scan_suffixes(text: &[Code], p: &[Code]) -> (Outcome, Option<(usize, usize)>, usize) {
    let t = terminated(text);
    let n = t.len();
    let mut below = 0;
    let mut hits = 0;
    let mut next = Vec::new();
    let mut best = 0;
    for i in 0..n {
        let s = &t[i..];
        let l = lcp(s, p);
        best = best.max(l);
        if l == p.len() {
            hits += 1;
            if next.len() < 2 && !next.contains(&s[l]) {
                next.push(s[l]);
            }
        } else if s[l] < p[l] {
            below += 1;
        }
    }
    if hits == 0 {
        return (Outcome::NotFound, None, best);
    }
    let outcome = if p.is_empty() || next.len() > 1 { Outcome::MatchedAtNode } else { Outcome::MatchedOnEdge };
    (outcome, Some((below, below + hits - 1)), p.len())
}

fn c1_suffix_array() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for i in 0..1000 {
        let sigma = [2u32, 4, 26, 200][i % 4];
        let n = rng.gen_range(0..=512);
        let text = random_text(&mut rng, n, sigma);
        let t = Text::from_codes(text, sigma).unwrap();
        let got = build_suffix_array(&t).sa;
        let want = naive_suffix_array(&t.terminated());
        ensure!(got == want, "text #{i} (n={n}, sigma={sigma}) disagrees with the sorted-suffix oracle");
    }
    let el = start.elapsed();
    ensure!(el < SA_BUDGET, "took {el:?}, budget {SA_BUDGET:?}");
    pass(format!("1000/1000 texts agree in {:.2}s", el.as_secs_f64()))
}

fn c2_static_search() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut checked = 0;
    for i in 0..500 {
        let sigma = [2u32, 4, 26, 256][i % 4];
        let n = rng.gen_range(0..=4096);
        let text = random_text(&mut rng, n, sigma);
        let t = Text::from_codes(text.clone(), sigma).unwrap();
        let st = StaticTrieIndex::from_text(&t, Engine::Static).unwrap();
        let tr = StaticTrieIndex::from_text(&t, Engine::Tray).unwrap();
        for p in mixed_patterns(&mut rng, &text, sigma, 100) {
            let want = scan_suffixes(&text, &p);
            let a = st.prefix_query(&p).unwrap();
            let b = tr.tray_query(&p).unwrap();
            ensure!((a.outcome, a.interval, a.matched_len) == want, "static: text #{i} pattern {p:?}: {a:?} vs {want:?}");
            ensure!((b.outcome, b.interval, b.matched_len) == want, "tray: text #{i} pattern {p:?}: {b:?} vs {want:?}");
            checked += 1;
        }
    }
    let el = start.elapsed();
    ensure!(el < SEARCH_BUDGET, "took {el:?}, budget {SEARCH_BUDGET:?}");
    pass(format!("{checked} patterns, static = tray = scan, {:.2}s", el.as_secs_f64()))
}

fn random_set<R: Rng>(rng: &mut R, sigma: u32, max: usize) -> Vec<Vec<Code>> {
    let count = rng.gen_range(0..=max);
    let mut set = std::collections::BTreeSet::new();
    let mut pool: Vec<Vec<Code>> = Vec::new();
    for _ in 0..count {
        let s = if !pool.is_empty() && rng.gen_bool(0.5) {
            let base = &pool[rng.gen_range(0..pool.len())];
            let mut s = base[..rng.gen_range(0..=base.len())].to_vec();
            let extra = rng.gen_range(0..5);
            s.extend(random_text(rng, extra, sigma));
            s
        } else {
            let len = rng.gen_range(0..12);
            random_text(rng, len, sigma)
        };
        if set.insert(s.clone()) {
            pool.push(s);
        }
    }
    pool
}

fn c3_predecessor() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for i in 0..200 {
        let sigma = [2u32, 4, 26, 256][i % 4];
        let strings = random_set(&mut rng, sigma, 2000);
        let mut sorted: Vec<Vec<Code>> = strings.iter().map(|s| terminated(s)).collect();
        sorted.sort();
        let st = StaticTrieIndex::from_strings(&strings, sigma, Engine::Static).unwrap();
        let tr = StaticTrieIndex::from_strings(&strings, sigma, Engine::Tray).unwrap();
        for _ in 0..200 {
            let p = if !strings.is_empty() && rng.gen_bool(0.5) {
                let s = &strings[rng.gen_range(0..strings.len())];
                let mut p = s[..rng.gen_range(0..=s.len())].to_vec();
                if rng.gen_bool(0.5) {
                    p.push(rng.gen_range(1..=sigma));
                }
                p
            } else {
                let len = rng.gen_range(0..10);
                random_text(&mut rng, len, sigma)
            };
            let want = naive_pred(&sorted, &p);
            ensure!(st.predecessor_query(&p).unwrap() == want, "static: set #{i} probe {p:?}");
            ensure!(tr.predecessor_query(&p).unwrap() == want, "tray: set #{i} probe {p:?}");
            checked += 1;
        }
    }
    pass(format!("{checked} probes over 200 sets match sort+scan"))
}

fn c4_probe_bounds() -> (Verdict, Verdict) {
    let sigma = 1u32 << 16;
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let uniform = random_text(&mut rng, n, sigma);
    // Few distinct codes spread over the full alphabet, so heavy nodes exist.
    let skewed: Vec<Code> = (0..n).map(|_| 1 + 8191 * rng.gen_range(0..8u32)).collect();
    let lglg = lg_lg(sigma as u64);
    let spp_bound = SPP_C * lglg + SPP_C;
    let (mut queries, mut worst_spp, mut heavy) = (0, 0f64, Vec::new());
    for text in [uniform, skewed] {
        let t = Text::from_codes(text.clone(), sigma).unwrap();
        let idx = StaticTrieIndex::from_text(&t, Engine::Static).unwrap();
        heavy.push(idx.heavy_count());
        for p in mixed_patterns(&mut rng, &text, sigma, 5000) {
            let mut k = ProbeCounters::default();
            let m = idx.prefix_query_counted(&p, &mut k).unwrap();
            let mut kp = ProbeCounters::default();
            idx.predecessor_query_counted(&p, &mut kp).unwrap();
            for (what, k) in [("prefix", k), ("predecessor", kp)] {
                if k.static_pred_queries > 2 || k.dict_probes > m.matched_len as u64 + 1 {
                    let v = fail(format!("{what} query {p:?}: {k} with matched_len {}", m.matched_len));
                    return (v, fail("not measured"));
                }
                if k.static_pred_queries > 0 {
                    worst_spp = worst_spp.max(k.static_pred_probes as f64 / k.static_pred_queries as f64);
                }
                queries += 1;
            }
        }
    }
    let hard = pass(format!("{queries} queries, heavy nodes {heavy:?}: spq <= 2 and dict <= matched_len + 1"));
    let detail = format!("max probes per static predecessor query {worst_spp:.1} vs C*lglg(sigma)+C = {spp_bound:.1} (C = {SPP_C})");
    let soft = if worst_spp <= spp_bound { pass(detail) } else { fail(detail) };
    (hard, soft)
}

fn c5_wexp() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut audits = 0;
    for (round, bits) in [8u32, 16, 32].into_iter().enumerate() {
        let u = 1u64 << bits;
        let mut tree: WexpTree<u64> = WexpTree::new(u);
        let mut oracle: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        let mut handles = BTreeMap::new();
        for op in 1..=100_000u64 {
            let key = if bits == 8 { rng.gen_range(0..u) } else { rng.gen_range(0..u.min(1 << 20)) * (u >> 20).max(1) };
            match rng.gen_range(0..10) {
                0..=2 => match tree.insert(key, op) {
                    Ok(h) => {
                        ensure!(oracle.insert(key, (1, op)).is_none(), "u=2^{bits} op {op}: insert of present key {key} accepted");
                        handles.insert(key, h);
                    }
                    Err(Error::DuplicateKey) => ensure!(oracle.contains_key(&key), "u=2^{bits}: spurious duplicate {key}"),
                    Err(e) => return fail(format!("u=2^{bits} insert {key}: {e}")),
                },
                3..=5 => {
                    if let Some((&k, _)) = oracle.range(key..).next().or_else(|| oracle.iter().next()) {
                        tree.increase(handles[&k]).unwrap();
                        oracle.get_mut(&k).unwrap().0 += 1;
                    }
                }
                _ => {
                    let got = tree.pred(key).map(|h| (tree.key(h), tree.weight(h), *tree.value(h)));
                    let want = oracle.range(..=key).next_back().map(|(&k, &(w, v))| (k, w, v));
                    ensure!(got == want, "u=2^{bits} op {op}: pred({key}) = {got:?}, oracle {want:?}");
                }
            }
            if op % 100 == 0 {
                if let Err(e) = tree.audit() {
                    return fail(format!("u=2^{bits} round {round} op {op}: audit: {e}"));
                }
                audits += 1;
            }
        }
        let total: u64 = oracle.values().map(|x| x.0).sum();
        ensure!(tree.total_weight() == total && tree.len() == oracle.len(), "u=2^{bits}: totals drifted");
    }
    let el = start.elapsed();
    ensure!(el < WEXP_BUDGET, "took {el:?}, budget {WEXP_BUDGET:?}");
    pass(format!("3 x 1e5 ops match the ordered-map oracle, {audits} audits clean, {:.2}s", el.as_secs_f64()))
}

/// Sorted-set oracle for the dynamic index: the strings with prefix `p` are a
/// contiguous range of the sentinel-terminated sorted list.
fn range_oracle(sorted: &[Vec<Code>], p: &[Code]) -> (Outcome, usize, usize) {
    let lo = sorted.partition_point(|s| s.as_slice() < p);
    let hi = lo + sorted[lo..].partition_point(|s| s.starts_with(p));
    if hi == lo {
        let near = [lo.checked_sub(1), (lo < sorted.len()).then_some(lo)];
        let best = near.iter().flatten().map(|&i| lcp(&sorted[i], p)).max().unwrap_or(0);
        return (Outcome::NotFound, 0, best);
    }
    let split = p.is_empty() || sorted[lo][p.len()] != sorted[hi - 1][p.len()];
    (if split { Outcome::MatchedAtNode } else { Outcome::MatchedOnEdge }, hi - lo, p.len())
}

fn c6_dynamic() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut audits = 0;
    let mut searches = 0;
    for sigma in [4u32, 26, 256] {
        let mut d = DynTrieIndex::new(sigma).unwrap();
        let mut sorted: Vec<Vec<Code>> = Vec::new();
        let mut pool: Vec<Vec<Code>> = Vec::new();
        let probe = |rng: &mut ChaCha8Rng, pool: &[Vec<Code>]| -> Vec<Code> {
            if !pool.is_empty() && rng.gen_bool(0.7) {
                let s = &pool[rng.gen_range(0..pool.len())];
                let mut p = s[..rng.gen_range(0..=s.len())].to_vec();
                if rng.gen_bool(0.3) {
                    p.push(rng.gen_range(1..=sigma));
                }
                p
            } else {
                let len = rng.gen_range(0..8);
                random_text(rng, len, sigma)
            }
        };
        for op in 1..=10_000 {
            let mut s = probe(&mut rng, &pool);
            let extra = rng.gen_range(0..4);
            s.extend(random_text(&mut rng, extra, sigma));
            let t = terminated(&s);
            match (sorted.binary_search(&t), d.insert(&s)) {
                (Err(i), Ok(_)) => {
                    sorted.insert(i, t);
                    pool.push(s);
                }
                (Ok(_), Err(Error::DuplicateKey)) => {}
                (want, got) => return fail(format!("sigma {sigma} op {op}: insert {s:?} gave {got:?}, oracle {want:?}")),
            }
            for _ in 0..20 {
                let p = probe(&mut rng, &pool);
                let m = d.search(&p).unwrap();
                let got = (m.outcome, if m.outcome.is_match() { m.count } else { 0 }, m.matched_len);
                let want = range_oracle(&sorted, &p);
                ensure!(got == want, "sigma {sigma} op {op}: search {p:?} = {got:?}, oracle {want:?}");
                let pred = d.predecessor(&p).unwrap().map(|i| terminated(d.string(i)));
                ensure!(pred.as_ref() == naive_pred(&sorted, &p).map(|r| &sorted[r]), "sigma {sigma} op {op}: pred {p:?}");
                searches += 1;
            }
            if op % 100 == 0 {
                if let Err(e) = d.audit() {
                    return fail(format!("sigma {sigma} op {op}: audit: {e}"));
                }
                audits += 1;
            }
        }
    }
    pass(format!("3 x 1e4 insertions, {searches} searches and predecessors exact, {audits} audits clean"))
}

fn c7_suffix_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut steps, mut audits) = (0, 0);
    for i in 0..200 {
        let sigma = [2u32, 4, 26][i % 3];
        let n = rng.gen_range(1..=2000);
        let text = random_text(&mut rng, n, sigma);
        let mut tree = OnlineSuffixTree::new(sigma).unwrap();
        for (j, &a) in text.iter().rev().enumerate() {
            tree.prepend(a).unwrap();
            let cur = Text::from_codes(text[n - 1 - j..].to_vec(), sigma).unwrap();
            let fresh = build_suffix_tree(&build_suffix_array(&cur), &cur);
            // Preorder (first char, depth, leaf id) fixes the labeled tree given the text.
            ensure!(tree.shape_signature() == fresh.shape_signature(), "text #{i} step {}: differs from a fresh build", j + 1);
            if (j + 1) % 50 == 0 {
                if let Err(e) = tree.audit_links() {
                    return fail(format!("text #{i} step {}: {e}", j + 1));
                }
                audits += 1;
            }
            steps += 1;
        }
        ensure!(tree.text() == text, "text #{i}: stored text differs");
        if n <= 300 {
            let t = Text::from_codes(text, sigma).unwrap();
            ensure!(tree.canonical_labels() == build_suffix_tree(&build_suffix_array(&t), &t).canonical_labels(), "text #{i}: labels");
        }
    }
    pass(format!("{steps} prepends isomorphic to fresh builds, {audits} link audits clean, {:.2}s", start.elapsed().as_secs_f64()))
}

fn c8_fma() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut f = FmaTree::new();
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut marked = vec![false];
    let (mut queries, mut rejected) = (0, 0);
    for op in 0..100_000 {
        let n = parent.len();
        let v = rng.gen_range(0..n);
        match rng.gen_range(0..10) {
            0..=2 => {
                ensure!(f.insert_leaf(v).unwrap() == n, "op {op}: leaf id");
                parent.push(Some(v));
                marked.push(false);
            }
            3 => {
                if let Some(p) = parent[v] {
                    ensure!(f.insert_middle(v).unwrap() == n, "op {op}: middle id");
                    parent.push(Some(p));
                    marked.push(marked[p]);
                    parent[v] = Some(n);
                }
            }
            4..=5 => {
                let allowed = parent[v].is_none_or(|p| marked[p]);
                match f.mark(v) {
                    Ok(()) => {
                        ensure!(allowed, "op {op}: marked {v} under an unmarked parent");
                        marked[v] = true;
                    }
                    Err(Error::MarkOrderViolation(x)) if x == v => {
                        ensure!(!allowed, "op {op}: rejected a legal mark of {v}");
                        rejected += 1;
                    }
                    Err(e) => return fail(format!("op {op}: {e}")),
                }
            }
            _ => {
                let want = marked[0].then(|| walk_up(&parent, &marked, v));
                let got = f.query(v).unwrap();
                ensure!(got == want, "op {op}: query({v}) = {got:?}, walk-up {want:?}");
                queries += 1;
            }
        }
    }
    ensure!(rejected > 0, "workload never exercised a mark-order violation");
    pass(format!("1e5 ops, {queries} queries exact, {rejected} mark-order violations rejected"))
}

fn c9_amortized() -> Verdict {
    let mut worst = 0f64;
    let mut parts = Vec::new();
    for sigma in [4u32, 256, 1 << 16] {
        let cfg = BenchConfig { n: 100_000, sigma, engines: vec![BenchEngine::Dynamic], queries: 0, seed: 9 };
        let row = bench::run(&cfg).unwrap().0.rows.remove(0);
        worst = worst.max(row.steps_ratio);
        parts.push(format!("sigma={sigma}: {} steps / {} inserts = {:.2} x lglg", row.maint_steps, row.items, row.steps_ratio));
    }
    let detail = format!("{}; C = {MAINTENANCE_C}", parts.join(", "));
    if worst <= MAINTENANCE_C {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn c10_determinism() -> Verdict {
    let cfg = BenchConfig {
        n: 20_000,
        sigma: 26,
        engines: BenchEngine::parse_list("static,tray,dynamic,sa").unwrap(),
        queries: 500,
        seed: 10,
    };
    let a = bench::run(&cfg).unwrap().0;
    let b = bench::run(&cfg).unwrap().0;
    ensure!(a.to_tsv() == b.to_tsv() && a.to_json() == b.to_json(), "bench reports differ for one seed");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut trips = 0;
    for i in 0..40 {
        let sigma = [2u32, 26, 256, 70_000][i % 4];
        let engine = if i % 2 == 0 { Engine::Static } else { Engine::Tray };
        let n = rng.gen_range(0..3000);
        let text = random_text(&mut rng, n, sigma);
        let suffix = StaticTrieIndex::from_text(&Text::from_codes(text.clone(), sigma).unwrap(), engine).unwrap();
        let strings = random_set(&mut rng, sigma, 500);
        let set = StaticTrieIndex::from_strings(&strings, sigma, engine).unwrap();
        let pats = mixed_patterns(&mut rng, &text, sigma, 100);
        for idx in [suffix, set] {
            let bytes = index_file::to_bytes(&idx);
            let back = index_file::from_bytes(&bytes).unwrap();
            ensure!(index_file::to_bytes(&back) == bytes, "case {i}: re-serialization differs");
            for mode in [QueryMode::Prefix, QueryMode::Predecessor, QueryMode::Enumerate] {
                let x = query_report(&idx, &pats, mode).unwrap();
                let y = query_report(&back, &pats, mode).unwrap();
                ensure!(x == y, "case {i}: {mode:?} answers differ after loading");
            }
            trips += 1;
        }
    }
    pass(format!("bench reports byte-identical; {trips} index round-trips answer identically"))
}

fn main() {
    let mut hard_fail = false;
    let mut line = |id: &str, name: &str, soft: bool, v: Verdict| {
        let tag = match (v.ok, soft) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (soft)",
        };
        hard_fail |= !v.ok && !soft;
        println!("criterion {id:<3} {tag:<11} {name}: {}", v.detail);
    };
    line("1", "suffix array exactness", false, c1_suffix_array());
    line("2", "static search correctness", false, c2_static_search());
    line("3", "predecessor correctness", false, c3_predecessor());
    let (hard, soft) = c4_probe_bounds();
    line("4", "probe bounds", false, hard);
    line("4s", "static predecessor probes", true, soft);
    line("5", "wexp tree", false, c5_wexp());
    line("6", "dynamic trie", false, c6_dynamic());
    line("7", "suffix oracle", false, c7_suffix_oracle());
    line("8", "fringe marked ancestor", false, c8_fma());
    line("9", "amortized maintenance", true, c9_amortized());
    line("10", "determinism and round-trip", false, c10_determinism());
    if hard_fail {
        std::process::exit(1);
    }
}
