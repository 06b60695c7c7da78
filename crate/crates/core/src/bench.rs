//! Deterministic benchmark workloads.
//!
//! A seed fixes the text, the pattern batch and the dynamic insertion order, so
//! reports are byte-identical across runs. Wall-clock timings are returned
//! separately and never enter the report.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::counters::ProbeCounters;
use crate::dynamic_index::DynTrieIndex;
use crate::error::{Error, Result};
use crate::lg_lg;
use crate::static_index::{Engine, StaticTrieIndex};
use crate::suffix_array::build_suffix_array;
use crate::text_model::{Code, Text};

/// Dynamic workloads insert the text windows of this length (shorter at the end).
pub const WINDOW: usize = 32;

/// Documented constant for the amortized maintenance bound
/// `steps <= C * N * lg lg sigma`, reported rather than enforced.
pub const MAINTENANCE_C: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchEngine {
    Static,
    Tray,
    Dynamic,
    /// Plain binary search over the suffix array.
    Sa,
}

impl BenchEngine {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(BenchEngine::Static),
            "tray" => Ok(BenchEngine::Tray),
            "dynamic" => Ok(BenchEngine::Dynamic),
            "sa" => Ok(BenchEngine::Sa),
            _ => Err(Error::InvalidInput(format!("unknown engine {s:?} (expected static, tray, dynamic or sa)"))),
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        s.split(',').filter(|t| !t.is_empty()).map(|t| Self::parse(t.trim())).collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BenchEngine::Static => "static",
            BenchEngine::Tray => "tray",
            BenchEngine::Dynamic => "dynamic",
            BenchEngine::Sa => "sa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub n: usize,
    pub sigma: u32,
    pub engines: Vec<BenchEngine>,
    pub queries: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub engine: BenchEngine,
    pub n: usize,
    pub sigma: u32,
    pub queries: usize,
    /// Stored leaves: suffixes for static engines, distinct windows for dynamic.
    pub items: usize,
    pub heavy_nodes: usize,
    pub matched: usize,
    pub totals: ProbeCounters,
    pub max_spq: u64,
    pub max_spp: u64,
    /// Largest `dict_probes - matched_len` over the batch.
    pub max_dict_excess: i64,
    pub maint_steps: u64,
    pub promotions: u64,
    pub rebalances: u64,
    /// `maint_steps / (items * lg lg sigma)`, to compare with `MAINTENANCE_C`.
    pub steps_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub maintenance_c: f64,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchTiming {
    pub engine: BenchEngine,
    pub build: Duration,
    pub query: Duration,
}

/// Text and pattern batch for a configuration.
pub fn workload(cfg: &BenchConfig) -> (Vec<Code>, Vec<Vec<Code>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let text: Vec<Code> = (0..cfg.n).map(|_| rng.gen_range(1..=cfg.sigma)).collect();
    let n = text.len();
    let mut pats = Vec::with_capacity(cfg.queries);
    for i in 0..cfg.queries {
        let p = match i % 3 {
            0 if n > 0 => {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(a..=n.min(a + 16));
                text[a..b].to_vec()
            }
            2 if n > 0 => {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(a..=n.min(a + 16));
                let mut p = text[a..b].to_vec();
                p.push(rng.gen_range(1..=cfg.sigma));
                p
            }
            _ => {
                let len = rng.gen_range(0..8);
                (0..len).map(|_| rng.gen_range(1..=cfg.sigma)).collect()
            }
        };
        pats.push(p);
    }
    (text, pats)
}

#[derive(Default)]
struct Tally {
    totals: ProbeCounters,
    matched: usize,
    max_spq: u64,
    max_spp: u64,
    max_dict_excess: i64,
}

impl Tally {
    fn add(&mut self, k: ProbeCounters, matched: bool, matched_len: usize) {
        self.totals += k;
        self.matched += usize::from(matched);
        self.max_spq = self.max_spq.max(k.static_pred_queries);
        self.max_spp = self.max_spp.max(k.static_pred_probes);
        self.max_dict_excess = self.max_dict_excess.max(k.dict_probes as i64 - matched_len as i64);
    }
}

/// Leftmost rank whose suffix is `>= p` (`upper` = false) or `> p` as a prefix
/// (`upper` = true). Each step is charged as one static predecessor probe.
fn sa_bound(t: &[Code], sa: &[usize], p: &[Code], upper: bool, k: &mut ProbeCounters) -> usize {
    let (mut lo, mut hi) = (0, sa.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        k.static_pred_probes += 1;
        let s = &t[sa[mid]..];
        let mut ord = std::cmp::Ordering::Equal;
        for (i, &c) in p.iter().enumerate() {
            k.chars_compared += 1;
            ord = s[i].cmp(&c);
            if ord != std::cmp::Ordering::Equal || s[i] == 0 {
                break;
            }
        }
        let go_right = match ord {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Equal => upper,
            std::cmp::Ordering::Greater => false,
        };
        if go_right {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn run(cfg: &BenchConfig) -> Result<(BenchReport, Vec<BenchTiming>)> {
    if cfg.sigma == 0 {
        return Err(Error::InvalidInput("sigma must be positive".into()));
    }
    let (text, pats) = workload(cfg);
    let t = Text::from_codes(text.clone(), cfg.sigma)?;
    let lglg = lg_lg(cfg.sigma as u64).max(1.0);
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &engine in &cfg.engines {
        let mut tally = Tally::default();
        let (mut items, mut heavy, mut stats) = (0, 0, None);
        let start = Instant::now();
        let build;
        match engine {
            BenchEngine::Static | BenchEngine::Tray => {
                let e = if engine == BenchEngine::Static { Engine::Static } else { Engine::Tray };
                let idx = StaticTrieIndex::from_text(&t, e)?;
                build = start.elapsed();
                items = idx.leaf_count();
                heavy = idx.heavy_count();
                for p in &pats {
                    let mut k = ProbeCounters::default();
                    let m = idx.prefix_query_counted(p, &mut k)?;
                    tally.add(k, m.outcome.is_match(), m.matched_len);
                }
            }
            BenchEngine::Sa => {
                let sa = build_suffix_array(&t).sa;
                let term = t.terminated();
                build = start.elapsed();
                items = sa.len();
                for p in &pats {
                    let mut k = ProbeCounters::default();
                    let lo = sa_bound(&term, &sa, p, false, &mut k);
                    let hi = sa_bound(&term, &sa, p, true, &mut k);
                    tally.add(k, hi > lo, p.len());
                }
            }
            BenchEngine::Dynamic => {
                let mut d = DynTrieIndex::new(cfg.sigma)?;
                for i in 0..text.len() {
                    if d.insert(&text[i..text.len().min(i + WINDOW)]).is_ok() {
                        items += 1;
                    }
                }
                build = start.elapsed();
                heavy = d.heavy_count();
                stats = Some(d.stats());
                for p in &pats {
                    let mut k = ProbeCounters::default();
                    let m = d.search_counted(p, &mut k)?;
                    tally.add(k, m.outcome.is_match(), m.matched_len);
                }
            }
        }
        let query = start.elapsed() - build;
        timings.push(BenchTiming { engine, build, query });
        let (maint_steps, promotions, rebalances) = stats.map_or((0, 0, 0), |s| (s.steps, s.promotions, s.rebalances));
        let steps_ratio = if items == 0 { 0.0 } else { maint_steps as f64 / (items as f64 * lglg) };
        rows.push(BenchRow {
            engine,
            n: cfg.n,
            sigma: cfg.sigma,
            queries: pats.len(),
            items,
            heavy_nodes: heavy,
            matched: tally.matched,
            totals: tally.totals,
            max_spq: tally.max_spq,
            max_spp: tally.max_spp,
            max_dict_excess: if pats.is_empty() { 0 } else { tally.max_dict_excess },
            maint_steps,
            promotions,
            rebalances,
            steps_ratio: (steps_ratio * 1e4).round() / 1e4,
        });
    }
    Ok((BenchReport { seed: cfg.seed, maintenance_c: MAINTENANCE_C, rows }, timings))
}

impl BenchReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "engine\tn\tsigma\tqueries\titems\theavy_nodes\tmatched\tprobes\tmax_spq\tmax_spp\tmax_dict_excess\tmaint_steps\tpromotions\trebalances\tsteps_ratio\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\n",
                r.engine.as_str(),
                r.n,
                r.sigma,
                r.queries,
                r.items,
                r.heavy_nodes,
                r.matched,
                r.totals.to_kv(),
                r.max_spq,
                r.max_spp,
                r.max_dict_excess,
                r.maint_steps,
                r.promotions,
                r.rebalances,
                r.steps_ratio
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(engines: &str, queries: usize, seed: u64) -> BenchConfig {
        BenchConfig { n: 3000, sigma: 26, engines: BenchEngine::parse_list(engines).unwrap(), queries, seed }
    }

    #[test]
    fn same_seed_same_report() {
        let a = run(&cfg("static,tray,dynamic,sa", 200, 4)).unwrap().0;
        let b = run(&cfg("static,tray,dynamic,sa", 200, 4)).unwrap().0;
        assert_eq!(a.to_tsv(), b.to_tsv());
        assert_eq!(a.to_json(), b.to_json());
        let c = run(&cfg("static,tray,dynamic,sa", 200, 5)).unwrap().0;
        assert_ne!(a.to_tsv(), c.to_tsv());
    }

    #[test]
    fn engines_agree_on_matches() {
        let rep = run(&cfg("static,tray,sa", 300, 8)).unwrap().0;
        let m: Vec<usize> = rep.rows.iter().map(|r| r.matched).collect();
        assert!(m.iter().all(|&x| x == m[0]), "{m:?}");
        assert!(rep.rows.iter().all(|r| r.max_spq <= 2));
    }

    #[test]
    fn build_only_and_bad_engine() {
        let rep = run(&cfg("static", 0, 1)).unwrap().0;
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.rows[0].queries, 0);
        assert!(BenchEngine::parse_list("static,btree").is_err());
    }
}
