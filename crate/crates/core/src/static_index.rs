//! Static compacted-trie index and the suffix-tray baseline.
//!
//! Nodes with at least `s` leaves below them are heavy. A heavy node finds its
//! heavy children through a dictionary (two or more heavy children) or a single
//! link, and its light children through a static predecessor structure over
//! first characters. A light subtree is resolved by binary search over the
//! sorted leaf array restricted to the subtree's rank interval.

use std::cmp::Ordering;

use crate::counters::ProbeCounters;
use crate::error::{Error, Result};
use crate::predecessor_kit::{DetDictionary, StaticPredecessor};
use crate::suffix_array::{build_suffix_array, build_suffix_tree};
use crate::text_model::{check_codes, Code, CompactedTrie, LeafKind, MatchResult, NodeId, Outcome, Text, ROOT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Heavy/light with `s = max(2, ⌈(lg lg σ)²⌉)`.
    Static,
    /// Suffix tray: threshold σ, child arrays at branching heavy nodes.
    Tray,
}

impl Engine {
    pub fn tag(self) -> u32 {
        match self {
            Engine::Static => 0,
            Engine::Tray => 1,
        }
    }

    pub fn from_tag(t: u32) -> Option<Self> {
        match t {
            0 => Some(Engine::Static),
            1 => Some(Engine::Tray),
            _ => None,
        }
    }
}

/// Heavy threshold of the static engine.
pub fn heavy_threshold(sigma: u32) -> usize {
    let l = crate::lg_lg(sigma as u64);
    ((l * l).ceil() as usize).max(2)
}

#[derive(Debug, Clone)]
enum Route {
    None,
    Single(Code, NodeId),
    Branching(DetDictionary<NodeId>),
}

#[derive(Debug, Clone)]
enum Payload {
    Static {
        route: Route,
        light_keys: StaticPredecessor,
        light_children: Vec<NodeId>,
        /// Over all first characters; index i is `children[i]`.
        all_keys: StaticPredecessor,
    },
    Tray {
        /// `array[c]` is child id + 1, or 0.
        array: Option<Vec<u32>>,
        special: Option<(Code, NodeId)>,
    },
}

#[derive(Debug, Clone)]
pub struct StaticTrieIndex {
    trie: CompactedTrie,
    leaf_order: Vec<usize>,
    sigma: u32,
    threshold: usize,
    engine: Engine,
    heavy: Vec<bool>,
    payload: Vec<Option<Box<Payload>>>,
}

/// The suffix tray is the same index built with [`Engine::Tray`].
pub type SuffixTrayIndex = StaticTrieIndex;

impl StaticTrieIndex {
    pub fn build(trie: CompactedTrie, leaf_order: Vec<usize>, sigma: u32) -> Result<Self> {
        Self::build_with(trie, leaf_order, sigma, Engine::Static)
    }

    pub fn build_tray(trie: CompactedTrie, leaf_order: Vec<usize>, sigma: u32) -> Result<Self> {
        Self::build_with(trie, leaf_order, sigma, Engine::Tray)
    }

    /// Suffix index over `text`.
    pub fn from_text(text: &Text, engine: Engine) -> Result<Self> {
        let sa = build_suffix_array(text);
        let trie = build_suffix_tree(&sa, text);
        Self::build_with(trie, sa.sa, text.sigma(), engine)
    }

    /// Index over a set of distinct strings; leaf ids are positions in `strings`.
    pub fn from_strings(strings: &[Vec<Code>], sigma: u32, engine: Engine) -> Result<Self> {
        let mut trie = CompactedTrie::new_strings();
        for s in strings {
            check_codes(s, sigma)?;
            trie.insert(s)?;
        }
        let order = trie.assign_intervals();
        Self::build_with(trie, order, sigma, engine)
    }

    pub fn build_with(trie: CompactedTrie, leaf_order: Vec<usize>, sigma: u32, engine: Engine) -> Result<Self> {
        trie.check_invariants()?;
        let leaves = trie.leaf_count();
        if leaf_order.len() != leaves {
            return Err(Error::CorruptTrie(format!("{} leaves but leaf order of {}", leaves, leaf_order.len())));
        }
        for n in trie.nodes() {
            if let Some(id) = n.leaf {
                if n.interval.0 != n.interval.1 || leaf_order.get(n.interval.0) != Some(&id) {
                    return Err(Error::CorruptTrie(format!("leaf {id} not at its rank")));
                }
            }
        }
        if leaves > 0 && trie.node(ROOT).interval != (0, leaves - 1) {
            return Err(Error::CorruptTrie("root interval does not cover all leaves".into()));
        }
        let threshold = match engine {
            Engine::Static => heavy_threshold(sigma),
            Engine::Tray => (sigma as usize).max(2),
        };
        let n = trie.len();
        let mut heavy = vec![false; n];
        for v in 0..n {
            heavy[v] = v == ROOT || (leaves > 0 && trie.leaves_below(v) >= threshold);
        }
        let u = sigma as u64 + 1;
        let mut payload: Vec<Option<Box<Payload>>> = vec![None; n];
        for v in 0..n {
            if !heavy[v] {
                continue;
            }
            let children = &trie.node(v).children;
            let hc: Vec<(Code, NodeId)> = children.iter().copied().filter(|&(_, w)| heavy[w]).collect();
            let p = match engine {
                Engine::Static => {
                    let route = match hc.len() {
                        0 => Route::None,
                        1 => Route::Single(hc[0].0, hc[0].1),
                        _ => Route::Branching(DetDictionary::build(
                            hc.iter().map(|&(c, w)| (c as u64, w)).collect(),
                        )?),
                    };
                    let light: Vec<(Code, NodeId)> =
                        children.iter().copied().filter(|&(_, w)| !heavy[w]).collect();
                    Payload::Static {
                        route,
                        light_keys: StaticPredecessor::build(light.iter().map(|p| p.0 as u64).collect(), u)?,
                        light_children: light.iter().map(|p| p.1).collect(),
                        all_keys: StaticPredecessor::build(children.iter().map(|p| p.0 as u64).collect(), u)?,
                    }
                }
                Engine::Tray => {
                    let array = (hc.len() >= 2).then(|| {
                        let mut a = vec![0u32; sigma as usize + 1];
                        for &(c, w) in children {
                            a[c as usize] = w as u32 + 1;
                        }
                        a
                    });
                    let special = (hc.len() == 1).then(|| hc[0]);
                    Payload::Tray { array, special }
                }
            };
            payload[v] = Some(Box::new(p));
        }
        Ok(Self { trie, leaf_order, sigma, threshold, engine, heavy, payload })
    }

    pub fn trie(&self) -> &CompactedTrie {
        &self.trie
    }

    pub fn leaf_order(&self) -> &[usize] {
        &self.leaf_order
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    /// Heavy threshold (`s` for the static engine, σ for the tray).
    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn is_heavy(&self, v: NodeId) -> bool {
        self.heavy[v]
    }

    pub fn heavy_count(&self) -> usize {
        self.heavy.iter().filter(|&&h| h).count()
    }

    pub fn is_branching_heavy(&self, v: NodeId) -> bool {
        match self.payload[v].as_deref() {
            Some(Payload::Static { route: Route::Branching(_), .. }) => true,
            Some(Payload::Tray { array: Some(_), .. }) => true,
            _ => false,
        }
    }

    /// Total `|A_v|` over tray arrays.
    pub fn tray_array_cells(&self) -> usize {
        self.payload
            .iter()
            .filter_map(|p| match p.as_deref() {
                Some(Payload::Tray { array: Some(a), .. }) => Some(a.len()),
                _ => None,
            })
            .sum()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_order.len()
    }

    fn leaf(&self, rank: usize) -> &[Code] {
        self.trie.leaf_str(self.leaf_order[rank])
    }

    /// Child of heavy node `v` whose edge starts with `c`.
    fn child_exact(&self, v: NodeId, c: Code, k: &mut ProbeCounters) -> Option<NodeId> {
        match self.payload[v].as_deref().expect("heavy payload") {
            Payload::Static { route, light_keys, light_children, .. } => {
                match route {
                    Route::Branching(d) => {
                        if let Some(&w) = d.get_counted(c as u64, k) {
                            return Some(w);
                        }
                    }
                    Route::Single(cc, w) if *cc == c => return Some(*w),
                    _ => {}
                }
                let i = light_keys.pred_index_counted(c as u64, k)?;
                (light_keys.keys()[i] == c as u64).then(|| light_children[i])
            }
            Payload::Tray { array, special } => {
                if let Some(a) = array {
                    k.dict_probes += 1;
                    let w = a[c as usize];
                    return (w > 0).then(|| w as usize - 1);
                }
                if let Some((cc, w)) = special {
                    if *cc == c {
                        return Some(*w);
                    }
                }
                let ch = &self.trie.node(v).children;
                let i = self.tray_child_search(ch, c, k);
                (i > 0 && ch[i - 1].0 == c).then(|| ch[i - 1].1)
            }
        }
    }

    /// Number of children with first character `<= c`, by binary search (tray).
    fn tray_child_search(&self, ch: &[(Code, NodeId)], c: Code, k: &mut ProbeCounters) -> usize {
        k.static_pred_queries += 1;
        let (mut a, mut b) = (0usize, ch.len());
        while a < b {
            let mid = (a + b) / 2;
            k.static_pred_probes += 1;
            if ch[mid].0 <= c {
                a = mid + 1;
            } else {
                b = mid;
            }
        }
        a
    }

    /// Child of heavy node `v` with the largest first character `< c`.
    fn child_below(&self, v: NodeId, c: Code, k: &mut ProbeCounters) -> Option<NodeId> {
        if c == 0 {
            return None;
        }
        let ch = &self.trie.node(v).children;
        match self.payload[v].as_deref().expect("heavy payload") {
            Payload::Static { all_keys, .. } => all_keys.pred_index_counted(c as u64 - 1, k).map(|i| ch[i].1),
            Payload::Tray { .. } => {
                let i = self.tray_child_search(ch, c - 1, k);
                (i > 0).then(|| ch[i - 1].1)
            }
        }
    }

    /// Prefix search. The interval covers all stored strings starting with `p`.
    pub fn prefix_query(&self, p: &[Code]) -> Result<MatchResult> {
        self.prefix_query_counted(p, &mut ProbeCounters::default())
    }

    /// Alias used for the tray engine.
    pub fn tray_query(&self, p: &[Code]) -> Result<MatchResult> {
        self.prefix_query(p)
    }

    pub fn prefix_query_counted(&self, p: &[Code], k: &mut ProbeCounters) -> Result<MatchResult> {
        check_codes(p, self.sigma)?;
        let m = p.len();
        if self.leaf_count() == 0 {
            return Ok(MatchResult::not_found(ROOT, 0));
        }
        let mut v = ROOT;
        let mut pos = 0;
        loop {
            if pos == m {
                return Ok(self.matched(Outcome::MatchedAtNode, v, self.trie.node(v).interval, m));
            }
            let Some(w) = self.child_exact(v, p[pos], k) else {
                return Ok(MatchResult::not_found(v, pos));
            };
            if !self.heavy[w] {
                return Ok(self.resolve_light(w, p, pos + 1, k));
            }
            let label = self.trie.label(w);
            let mut j = 1;
            while j < label.len() && pos + j < m {
                k.chars_compared += 1;
                if label[j] != p[pos + j] {
                    return Ok(MatchResult::not_found(w, pos + j));
                }
                j += 1;
            }
            if j < label.len() {
                return Ok(self.matched(Outcome::MatchedOnEdge, w, self.trie.node(w).interval, m));
            }
            pos += label.len();
            v = w;
        }
    }

    fn matched(&self, outcome: Outcome, node: NodeId, iv: (usize, usize), m: usize) -> MatchResult {
        MatchResult { outcome, node, interval: Some(iv), count: iv.1 + 1 - iv.0, matched_len: m }
    }

    /// Compares the leaf at `rank`, truncated to `|p|`, with `p`, assuming the
    /// first `from` characters agree. Returns the order and the exact lcp.
    fn cmp_prefix(&self, rank: usize, p: &[Code], from: usize, k: &mut ProbeCounters) -> (Ordering, usize) {
        let leaf = self.leaf(rank);
        let mut i = from;
        while i < p.len() {
            k.chars_compared += 1;
            match leaf[i].cmp(&p[i]) {
                Ordering::Equal => i += 1,
                o => return (o, i),
            }
        }
        (Ordering::Equal, i)
    }

    /// Full comparison of the leaf at `rank` with `p + $`.
    fn cmp_full(&self, rank: usize, p: &[Code], from: usize, k: &mut ProbeCounters) -> (Ordering, usize) {
        let leaf = self.leaf(rank);
        let mut i = from;
        loop {
            let pc = p.get(i).copied().unwrap_or(0);
            k.chars_compared += 1;
            match leaf[i].cmp(&pc) {
                Ordering::Equal if pc == 0 => return (Ordering::Equal, i),
                Ordering::Equal => i += 1,
                o => return (o, i),
            }
        }
    }

    /// First rank in `[lo, hi]` not sent left by `goes_left`. `la`/`lb` are the
    /// known lcps with the left and right boundaries.
    fn partition<F>(
        &self,
        (lo, hi): (usize, usize),
        (mut la, mut lb): (usize, usize),
        mut cmp: F,
        goes_left: fn(Ordering) -> bool,
    ) -> (usize, usize, usize)
    where
        F: FnMut(usize, usize) -> (Ordering, usize),
    {
        let (mut a, mut b) = (lo, hi + 1);
        while a < b {
            let mid = (a + b) / 2;
            let (o, l) = cmp(mid, la.min(lb));
            if goes_left(o) {
                a = mid + 1;
                la = l;
            } else {
                b = mid;
                lb = l;
            }
        }
        (a, la, lb)
    }

    /// Binary search inside the rank interval of light node `w`; every leaf there
    /// already agrees with `p` on the first `known` characters.
    fn resolve_light(&self, w: NodeId, p: &[Code], known: usize, k: &mut ProbeCounters) -> MatchResult {
        let m = p.len();
        let known = known.min(m);
        let (lo, hi) = self.trie.node(w).interval;
        let (first, la, lb) =
            self.partition((lo, hi), (known, known), |r, f| self.cmp_prefix(r, p, f, k), |o| o == Ordering::Less);
        if first > hi || lb < m {
            let best = if first > lo { la } else { known };
            let best = if first <= hi { best.max(lb) } else { best };
            return MatchResult::not_found(w, best);
        }
        let (end, _, _) =
            self.partition((first, hi), (m, known), |r, f| self.cmp_prefix(r, p, f, k), |o| o != Ordering::Greater);
        let last = end - 1;
        let at_node = first < last && {
            k.chars_compared += 2;
            self.leaf(first)[m] != self.leaf(last)[m]
        };
        let outcome = if at_node { Outcome::MatchedAtNode } else { Outcome::MatchedOnEdge };
        self.matched(outcome, w, (first, last), m)
    }

    /// Rank of the largest stored string `<= p`, comparing `p + $` with the
    /// sentinel-terminated stored strings. A stored string equal to `p` counts.
    pub fn predecessor_query(&self, p: &[Code]) -> Result<Option<usize>> {
        self.predecessor_query_counted(p, &mut ProbeCounters::default())
    }

    pub fn predecessor_query_counted(&self, p: &[Code], k: &mut ProbeCounters) -> Result<Option<usize>> {
        check_codes(p, self.sigma)?;
        let m = p.len();
        let mut v = ROOT;
        let mut pos = 0;
        let at = |i: usize| p.get(i).copied().unwrap_or(0);
        loop {
            let c = at(pos);
            let w = match self.child_exact(v, c, k) {
                Some(w) => w,
                None => {
                    return Ok(match self.child_below(v, c, k) {
                        Some(x) => Some(self.trie.node(x).interval.1),
                        None => self.trie.node(v).interval.0.checked_sub(1).filter(|_| self.leaf_count() > 0),
                    })
                }
            };
            if c == 0 {
                return Ok(Some(self.trie.node(w).interval.0));
            }
            let (lo, hi) = self.trie.node(w).interval;
            if !self.heavy[w] {
                let (first, _, _) = self.partition(
                    (lo, hi),
                    (pos + 1, pos + 1),
                    |r, f| self.cmp_full(r, p, f, k),
                    |o| o != Ordering::Greater,
                );
                return Ok(first.checked_sub(1));
            }
            let label = self.trie.label(w);
            for (j, &lc) in label.iter().enumerate().skip(1) {
                k.chars_compared += 1;
                match lc.cmp(&at(pos + j)) {
                    Ordering::Equal => {}
                    Ordering::Less => return Ok(Some(hi)),
                    Ordering::Greater => return Ok(lo.checked_sub(1)),
                }
            }
            debug_assert!(pos + label.len() <= m);
            pos += label.len();
            v = w;
        }
    }

    /// Leaf ids in the interval, in rank order (text positions for suffix indexes).
    pub fn enumerate(&self, interval: (usize, usize)) -> Result<Vec<usize>> {
        let (l, r) = interval;
        if l > r || r >= self.leaf_count() {
            return Err(Error::InvalidInput(format!("interval [{l}, {r}] outside [0, {})", self.leaf_count())));
        }
        Ok(self.leaf_order[l..=r].to_vec())
    }

    pub fn kind(&self) -> LeafKind {
        self.trie.kind()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_model::byte_code;

    fn codes(s: &str) -> Vec<Code> {
        s.bytes().map(byte_code).collect()
    }

    fn banana(engine: Engine) -> StaticTrieIndex {
        StaticTrieIndex::from_text(&Text::from_bytes(b"banana", 256).unwrap(), engine).unwrap()
    }

    #[test]
    fn banana_classification() {
        let idx = banana(Engine::Static);
        assert_eq!(idx.threshold(), 9);
        assert_eq!(idx.heavy_count(), 1);
        assert!(idx.is_heavy(ROOT));
    }

    #[test]
    fn banana_queries() {
        for e in [Engine::Static, Engine::Tray] {
            let idx = banana(e);
            let r = idx.prefix_query(&codes("ana")).unwrap();
            assert!(r.outcome.is_match());
            assert_eq!(r.interval, Some((2, 3)));
            assert_eq!(idx.enumerate((2, 3)).unwrap(), vec![3, 1]);
            let r = idx.prefix_query(&[]).unwrap();
            assert_eq!(r.interval, Some((0, 6)));
            let r = idx.prefix_query(&codes("nax")).unwrap();
            assert_eq!((r.outcome, r.matched_len), (Outcome::NotFound, 2));
            assert_eq!(idx.enumerate((0, 6)).unwrap().len(), 7);
            assert!(matches!(idx.enumerate((3, 7)), Err(Error::InvalidInput(_))));
            let r = idx.prefix_query(&codes("banana")).unwrap();
            assert_eq!(r.interval, Some((4, 4)));
            assert_eq!(idx.prefix_query(&codes("bananas")).unwrap().outcome, Outcome::NotFound);
            assert!(matches!(idx.prefix_query(&[300]), Err(Error::AlphabetOverflow { .. })));
        }
    }

    #[test]
    fn star_trie() {
        let sigma = 10_000;
        let strings: Vec<Vec<Code>> = (1..=sigma).map(|c| vec![c]).collect();
        let idx = StaticTrieIndex::from_strings(&strings, sigma, Engine::Static).unwrap();
        assert_eq!(idx.heavy_count(), 1);
        assert!(idx.is_heavy(ROOT));
        let r = idx.prefix_query(&[77]).unwrap();
        assert_eq!(r.interval, Some((76, 76)));
    }

    #[test]
    fn empty_trie() {
        let idx = StaticTrieIndex::from_strings(&[], 4, Engine::Static).unwrap();
        assert_eq!(idx.heavy_count(), 1);
        assert_eq!(idx.prefix_query(&[1]).unwrap().outcome, Outcome::NotFound);
        assert_eq!(idx.predecessor_query(&[1]).unwrap(), None);
    }

    #[test]
    fn predecessor_examples() {
        let words: Vec<Vec<Code>> = ["ant", "bee", "cow"].iter().map(|w| codes(w)).collect();
        for e in [Engine::Static, Engine::Tray] {
            let idx = StaticTrieIndex::from_strings(&words, 256, e).unwrap();
            let name = |r: Option<usize>| r.map(|r| idx.leaf_order()[r]);
            assert_eq!(name(idx.predecessor_query(&codes("bat")).unwrap()), Some(0));
            assert_eq!(name(idx.predecessor_query(&codes("zebra")).unwrap()), Some(2));
            assert_eq!(name(idx.predecessor_query(&codes("aa")).unwrap()), None);
            assert_eq!(name(idx.predecessor_query(&codes("bee")).unwrap()), Some(1));
        }
    }

    #[test]
    fn corrupt_order_rejected() {
        let t = Text::from_bytes(b"abab", 256).unwrap();
        let sa = build_suffix_array(&t);
        let trie = build_suffix_tree(&sa, &t);
        let mut order = sa.sa.clone();
        order.swap(0, 1);
        assert!(matches!(StaticTrieIndex::build(trie, order, 256), Err(Error::CorruptTrie(_))));
    }
}
