//! Weighted exponential search trees (amortized variant).
//!
//! A tree of level ℓ ≥ 2 stores splitters `e_1 < … < e_|S|` in a static
//! predecessor structure and children `X_0 … X_|S|` of level ℓ−1. Level-1 trees
//! are sorted arrays. Total weight stays below `2f(ℓ+1)`; a tree reaching that
//! weight is split eagerly and the chosen splitter moves into the parent.

use crate::counters::ProbeCounters;
use crate::error::{Error, Result};
use crate::predecessor_kit::{SplitterIndex, SplitterKind};

/// `⌊2^{(3/2)^ℓ}⌋` for ℓ ≤ 10.
const F_TABLE: [u64; 11] = [
    2,
    2,
    4,
    10,
    33,
    193,
    2684,
    139_116,
    51_888_311,
    373_769_884_171,
    228_510_656_987_187_971,
];

/// Capacity function `f(ℓ) = ⌊2^{(3/2)^ℓ}⌋`, saturating past 64-bit range.
pub fn f(level: usize) -> u64 {
    F_TABLE.get(level).copied().unwrap_or(u64::MAX / 4)
}

/// Split threshold `2f(ℓ+1)` for a tree of level ℓ.
pub fn split_threshold(level: usize) -> u64 {
    f(level + 1).saturating_mul(2)
}

type WId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementHandle(pub(crate) usize);

impl ElementHandle {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
struct Element<V> {
    key: u64,
    weight: u64,
    value: V,
    /// Node holding the element: the tree where it is a splitter, or its base array.
    home: WId,
}

#[derive(Debug, Clone)]
enum Body {
    Base(Vec<usize>),
    Inner {
        splitters: Vec<usize>,
        index: SplitterIndex,
        children: Vec<Option<WId>>,
    },
}

#[derive(Debug, Clone)]
struct WNode {
    level: usize,
    weight: u64,
    parent: Option<WId>,
    body: Body,
}

#[derive(Debug, Clone)]
pub struct WexpTree<V> {
    u: u64,
    kind: SplitterKind,
    nodes: Vec<WNode>,
    elems: Vec<Element<V>>,
    root: WId,
    splits: u64,
}

impl<V> WexpTree<V> {
    /// Empty tree over keys in `[0, u)`.
    pub fn new(u: u64) -> Self {
        Self::with_splitters(u, SplitterKind::Plain)
    }

    pub fn with_splitters(u: u64, kind: SplitterKind) -> Self {
        let root = WNode { level: 1, weight: 0, parent: None, body: Body::Base(Vec::new()) };
        Self { u: u.max(1), kind, nodes: vec![root], elems: Vec::new(), root: 0, splits: 0 }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.nodes[self.root].weight
    }

    pub fn root_level(&self) -> usize {
        self.nodes[self.root].level
    }

    pub fn splits(&self) -> u64 {
        self.splits
    }

    pub fn key(&self, h: ElementHandle) -> u64 {
        self.elems[h.0].key
    }

    pub fn weight(&self, h: ElementHandle) -> u64 {
        self.elems[h.0].weight
    }

    pub fn value(&self, h: ElementHandle) -> &V {
        &self.elems[h.0].value
    }

    pub fn value_mut(&mut self, h: ElementHandle) -> &mut V {
        &mut self.elems[h.0].value
    }

    /// Level of the node currently holding the element.
    pub fn home_level(&self, h: ElementHandle) -> usize {
        self.nodes[self.elems[h.0].home].level
    }

    /// True when the element is a splitter (not inside a base array).
    pub fn is_splitter(&self, h: ElementHandle) -> bool {
        matches!(self.nodes[self.elems[h.0].home].body, Body::Inner { .. })
    }

    fn check(&self, h: ElementHandle) -> Result<()> {
        if h.0 < self.elems.len() {
            Ok(())
        } else {
            Err(Error::InvalidHandle)
        }
    }

    fn empty_node(&self, level: usize, parent: WId) -> WNode {
        let body = if level <= 1 {
            Body::Base(Vec::new())
        } else {
            Body::Inner {
                splitters: Vec::new(),
                index: SplitterIndex::build(self.kind, Vec::new(), self.u).expect("empty index"),
                children: vec![None],
            }
        };
        WNode { level, weight: 0, parent: Some(parent), body }
    }

    /// Position among the splitters of an inner node: number of splitters `<= x`.
    fn rank_in(&self, v: WId, x: u64, c: &mut ProbeCounters) -> usize {
        match &self.nodes[v].body {
            Body::Inner { index, .. } => index.pred_index_counted(x, c).map_or(0, |i| i + 1),
            Body::Base(_) => unreachable!("rank_in on a base node"),
        }
    }

    /// Inserts `key` with weight one.
    pub fn insert(&mut self, key: u64, value: V) -> Result<ElementHandle> {
        if key >= self.u {
            return Err(Error::InvalidInput(format!("key {key} outside universe {}", self.u)));
        }
        let mut scratch = ProbeCounters::default();
        let mut v = self.root;
        let pos = loop {
            match &self.nodes[v].body {
                Body::Base(list) => {
                    let pos = list.partition_point(|&e| self.elems[e].key < key);
                    if pos < list.len() && self.elems[list[pos]].key == key {
                        return Err(Error::DuplicateKey);
                    }
                    break pos;
                }
                Body::Inner { .. } => {
                    let j = self.rank_in(v, key, &mut scratch);
                    let Body::Inner { splitters, children, .. } = &self.nodes[v].body else { unreachable!() };
                    if j > 0 && self.elems[splitters[j - 1]].key == key {
                        return Err(Error::DuplicateKey);
                    }
                    v = match children[j] {
                        Some(ch) => ch,
                        None => {
                            let node = self.empty_node(self.nodes[v].level - 1, v);
                            let id = self.nodes.len();
                            self.nodes.push(node);
                            let Body::Inner { children, .. } = &mut self.nodes[v].body else { unreachable!() };
                            children[j] = Some(id);
                            id
                        }
                    };
                }
            }
        };
        let id = self.elems.len();
        self.elems.push(Element { key, weight: 1, value, home: v });
        let Body::Base(list) = &mut self.nodes[v].body else { unreachable!() };
        list.insert(pos, id);
        self.add_weight(v, 1);
        self.rebalance_from(v);
        Ok(ElementHandle(id))
    }

    /// Adds one to the element's weight.
    pub fn increase(&mut self, h: ElementHandle) -> Result<()> {
        self.check(h)?;
        self.elems[h.0].weight += 1;
        let home = self.elems[h.0].home;
        self.add_weight(home, 1);
        self.rebalance_from(home);
        Ok(())
    }

    fn add_weight(&mut self, mut v: WId, d: u64) {
        loop {
            self.nodes[v].weight += d;
            match self.nodes[v].parent {
                Some(p) => v = p,
                None => break,
            }
        }
    }

    fn rebalance_from(&mut self, mut v: WId) {
        loop {
            if self.nodes[v].weight >= split_threshold(self.nodes[v].level) {
                self.split(v);
            }
            match self.nodes[v].parent {
                Some(p) => v = p,
                None => break,
            }
        }
    }

    fn subtree_weight(&self, v: Option<WId>) -> u64 {
        v.map_or(0, |v| self.nodes[v].weight)
    }

    /// Picks the splitting element by one left-to-right sweep.
    fn choose_split(&self, v: WId) -> usize {
        let node = &self.nodes[v];
        let f1 = f(node.level + 1);
        let f0 = f(node.level);
        let total = node.weight;
        let (cands, gaps): (&[usize], Vec<u64>) = match &node.body {
            Body::Base(list) => (list, vec![0; list.len() + 1]),
            Body::Inner { splitters, children, .. } => {
                (splitters, children.iter().map(|&c| self.subtree_weight(c)).collect())
            }
        };
        let mut before = 0u64;
        let mut fallback = None;
        for (t, &e) in cands.iter().enumerate() {
            before += gaps[t];
            let w = self.elems[e].weight;
            let after = total - before - w;
            let left_ok = before + w >= f1 - f0;
            if left_ok && fallback.is_none() {
                fallback = Some(t);
            }
            if before < f1 + f0 && after < f1 + f0 && left_ok && w + after >= f1 - f0 {
                return t;
            }
            before += w;
        }
        fallback.unwrap_or(cands.len() - 1)
    }

    fn split(&mut self, v: WId) {
        let t = self.choose_split(v);
        let level = self.nodes[v].level;
        let right_id = self.nodes.len();
        let (e, right_body, left_w, right_w) = match &mut self.nodes[v].body {
            Body::Base(list) => {
                let right: Vec<usize> = list.split_off(t + 1);
                let e = list.pop().expect("split element");
                let lw: u64 = list.iter().map(|&x| self.elems[x].weight).sum();
                let rw: u64 = right.iter().map(|&x| self.elems[x].weight).sum();
                for &x in &right {
                    self.elems[x].home = right_id;
                }
                (e, Body::Base(right), lw, rw)
            }
            Body::Inner { splitters, children, .. } => {
                let rs: Vec<usize> = splitters.split_off(t + 1);
                let e = splitters.pop().expect("split element");
                let rc: Vec<Option<WId>> = children.split_off(t + 1);
                let ls = splitters.clone();
                let lc = children.clone();
                let weight_of = |s: &[usize], c: &[Option<WId>]| -> u64 {
                    s.iter().map(|&x| self.elems[x].weight).sum::<u64>()
                        + c.iter().map(|&x| x.map_or(0, |x| self.nodes[x].weight)).sum::<u64>()
                };
                let lw = weight_of(&ls, &lc);
                let rw = weight_of(&rs, &rc);
                let right_keys: Vec<u64> = rs.iter().map(|&x| self.elems[x].key).collect();
                let left_keys: Vec<u64> = ls.iter().map(|&x| self.elems[x].key).collect();
                for &x in &rs {
                    self.elems[x].home = right_id;
                }
                for c in rc.iter().flatten() {
                    self.nodes[*c].parent = Some(right_id);
                }
                let Body::Inner { index, .. } = &mut self.nodes[v].body else { unreachable!() };
                *index = SplitterIndex::build(self.kind, left_keys, self.u).expect("sorted splitters");
                let rindex = SplitterIndex::build(self.kind, right_keys, self.u).expect("sorted splitters");
                (e, Body::Inner { splitters: rs, index: rindex, children: rc }, lw, rw)
            }
        };
        let parent = self.nodes[v].parent;
        self.nodes[v].weight = left_w;
        self.nodes.push(WNode { level, weight: right_w, parent, body: right_body });
        self.splits += 1;
        match parent {
            Some(p) => {
                let Body::Inner { splitters, children, .. } = &mut self.nodes[p].body else {
                    unreachable!("parent of a tree is an inner node")
                };
                let j = children.iter().position(|&c| c == Some(v)).expect("child link");
                splitters.insert(j, e);
                children.insert(j + 1, Some(right_id));
                self.elems[e].home = p;
                self.refresh(p);
            }
            None => {
                let r = self.nodes.len();
                let index = SplitterIndex::build(self.kind, vec![self.elems[e].key], self.u).expect("one key");
                self.nodes.push(WNode {
                    level: level + 1,
                    weight: left_w + right_w + self.elems[e].weight,
                    parent: None,
                    body: Body::Inner { splitters: vec![e], index, children: vec![Some(v), Some(right_id)] },
                });
                self.nodes[v].parent = Some(r);
                self.nodes[right_id].parent = Some(r);
                self.elems[e].home = r;
                self.root = r;
            }
        }
    }

    /// Rebuilds the splitter index of an inner node.
    fn refresh(&mut self, v: WId) {
        let Body::Inner { splitters, .. } = &self.nodes[v].body else { return };
        let keys: Vec<u64> = splitters.iter().map(|&x| self.elems[x].key).collect();
        let new = SplitterIndex::build(self.kind, keys, self.u).expect("sorted splitters");
        if let Body::Inner { index, .. } = &mut self.nodes[v].body {
            *index = new;
        }
    }

    /// Largest element with key `<= x`.
    pub fn pred(&self, x: u64) -> Option<ElementHandle> {
        self.pred_counted(x, &mut ProbeCounters::default())
    }

    pub fn pred_counted(&self, x: u64, c: &mut ProbeCounters) -> Option<ElementHandle> {
        let mut v = self.root;
        let mut best = None;
        loop {
            c.dyn_pred_probes += 1;
            match &self.nodes[v].body {
                Body::Base(list) => {
                    let p = list.partition_point(|&e| self.elems[e].key <= x);
                    return if p > 0 { Some(ElementHandle(list[p - 1])) } else { best };
                }
                Body::Inner { splitters, children, .. } => {
                    let j = self.rank_in(v, x, c);
                    if j > 0 {
                        let e = splitters[j - 1];
                        if self.elems[e].key == x {
                            return Some(ElementHandle(e));
                        }
                        best = Some(ElementHandle(e));
                    }
                    match children[j] {
                        Some(ch) => {
                            c.wexp_levels_descended += 1;
                            v = ch;
                        }
                        None => return best,
                    }
                }
            }
        }
    }

    /// Exact lookup.
    pub fn find(&self, key: u64) -> Option<ElementHandle> {
        self.pred(key).filter(|&h| self.elems[h.0].key == key)
    }

    pub fn find_counted(&self, key: u64, c: &mut ProbeCounters) -> Option<ElementHandle> {
        self.pred_counted(key, c).filter(|&h| self.elems[h.0].key == key)
    }

    /// Handles in key order.
    pub fn iter(&self) -> impl Iterator<Item = ElementHandle> {
        let mut out = Vec::with_capacity(self.elems.len());
        self.collect(self.root, &mut out);
        out.into_iter()
    }

    fn collect(&self, v: WId, out: &mut Vec<ElementHandle>) {
        match &self.nodes[v].body {
            Body::Base(list) => out.extend(list.iter().map(|&e| ElementHandle(e))),
            Body::Inner { splitters, children, .. } => {
                for (j, ch) in children.iter().enumerate() {
                    if let Some(ch) = ch {
                        self.collect(*ch, out);
                    }
                    if j < splitters.len() {
                        out.push(ElementHandle(splitters[j]));
                    }
                }
            }
        }
    }

    /// Full structural audit. Returns the first violation found.
    pub fn audit(&self) -> Result<()> {
        if self.nodes[self.root].parent.is_some() {
            return corrupt("root has a parent".into());
        }
        let mut seen = 0usize;
        self.audit_node(self.root, None, None, &mut seen)?;
        if seen != self.elems.len() {
            return corrupt(format!("{} elements reachable, {} stored", seen, self.elems.len()));
        }
        for (i, e) in self.elems.iter().enumerate() {
            let level = self.nodes[e.home].level;
            if e.weight >= split_threshold(level) {
                return corrupt(format!("element {i} of weight {} held at level {level}", e.weight));
            }
            let need = (crate::lg_lg(e.weight).floor() as i64 - 1).max(0) as usize;
            if level < need {
                return corrupt(format!("element {i} of weight {} below level threshold {need}", e.weight));
            }
        }
        Ok(())
    }

    /// Returns (weight, max element weight) of the subtree.
    fn audit_node(&self, v: WId, lo: Option<u64>, hi: Option<u64>, seen: &mut usize) -> Result<(u64, u64)> {
        let node = &self.nodes[v];
        let l = node.level;
        let in_range = |k: u64| lo.is_none_or(|lo| k > lo) && hi.is_none_or(|hi| k < hi);
        let (w, maxw) = match &node.body {
            Body::Base(list) => {
                if l != 1 {
                    return corrupt(format!("base node {v} at level {l}"));
                }
                let mut w = 0;
                let mut maxw = 0;
                let mut prev = None;
                for &e in list {
                    let el = &self.elems[e];
                    if el.home != v {
                        return corrupt(format!("element {e} home link stale"));
                    }
                    if !in_range(el.key) || prev.is_some_and(|p| p >= el.key) {
                        return corrupt(format!("key order violated at node {v}"));
                    }
                    prev = Some(el.key);
                    w += el.weight;
                    maxw = maxw.max(el.weight);
                    *seen += 1;
                }
                (w, maxw)
            }
            Body::Inner { splitters, index, children } => {
                if l < 2 || children.len() != splitters.len() + 1 {
                    return corrupt(format!("inner node {v} malformed"));
                }
                let mut w = 0;
                let mut maxw = 0;
                let mut child_w = Vec::with_capacity(children.len());
                for j in 0..children.len() {
                    let clo = if j == 0 { lo } else { Some(self.elems[splitters[j - 1]].key) };
                    let chi = if j == splitters.len() { hi } else { Some(self.elems[splitters[j]].key) };
                    let cw = match children[j] {
                        Some(ch) => {
                            if self.nodes[ch].parent != Some(v) || self.nodes[ch].level + 1 != l {
                                return corrupt(format!("child {ch} of {v} has wrong parent or level"));
                            }
                            let (cw, cm) = self.audit_node(ch, clo, chi, seen)?;
                            if cm >= 2 * f(l) {
                                return corrupt(format!("heavy element below splitters of {v}"));
                            }
                            maxw = maxw.max(cm);
                            cw
                        }
                        None => 0,
                    };
                    child_w.push(cw);
                    w += cw;
                }
                let mut scratch = ProbeCounters::default();
                for (i, &e) in splitters.iter().enumerate() {
                    let el = &self.elems[e];
                    if el.home != v {
                        return corrupt(format!("splitter {e} home link stale"));
                    }
                    if !in_range(el.key) || (i > 0 && self.elems[splitters[i - 1]].key >= el.key) {
                        return corrupt(format!("splitter order violated at node {v}"));
                    }
                    let r = index.pred_index_counted(el.key, &mut scratch);
                    if r != Some(i) {
                        return corrupt(format!("splitter index of {v} out of date"));
                    }
                    w += el.weight;
                    maxw = maxw.max(el.weight);
                    *seen += 1;
                }
                let gap = f(l) - f(l - 1);
                for i in 1..splitters.len() {
                    let g = self.elems[splitters[i - 1]].weight + child_w[i] + self.elems[splitters[i]].weight;
                    if g <= gap {
                        return corrupt(format!("node {v}: group {i} weight {g} <= {gap}"));
                    }
                }
                if (splitters.len() as u64) * gap > 4 * f(l + 1) {
                    return corrupt(format!("node {v}: {} splitters exceed bound", splitters.len()));
                }
                (w, maxw)
            }
        };
        if w != node.weight {
            return corrupt(format!("node {v}: stored weight {} != {w}", node.weight));
        }
        if w >= split_threshold(l) {
            return corrupt(format!("node {v}: weight {w} >= 2f({})", l + 1));
        }
        Ok((w, maxw))
    }
}

fn corrupt<T>(m: String) -> Result<T> {
    Err(Error::CorruptTrie(m))
}
