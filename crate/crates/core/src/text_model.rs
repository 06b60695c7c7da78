//! Coded texts, alphabets and the compacted-trie node arena shared by all indexes.
//!
//! Character codes are `u32`. Real characters live in `[1, sigma]`; code `0` is the
//! sentinel, which is appended internally to every stored string and suffix and
//! sorts below every real character. Patterns never contain the sentinel.

use serde::Serialize;

use crate::error::{Error, Result};

pub type Code = u32;
pub type NodeId = usize;

pub const SENTINEL: Code = 0;
pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    sigma: u32,
}

impl Alphabet {
    pub fn new(sigma: u32) -> Result<Self> {
        if sigma == 0 {
            return Err(Error::InvalidInput("alphabet size must be positive".into()));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    /// Rejects codes outside `[1, sigma]`.
    pub fn check(&self, codes: &[Code]) -> Result<()> {
        check_codes(codes, self.sigma)
    }
}

pub(crate) fn check_codes(codes: &[Code], sigma: u32) -> Result<()> {
    match codes.iter().position(|&c| c == SENTINEL || c > sigma) {
        Some(position) => Err(Error::AlphabetOverflow {
            symbol: codes[position] as u64,
            position,
            sigma,
        }),
        None => Ok(()),
    }
}

/// Maps a raw byte to its character code (`byte + 1`, order preserving).
#[inline]
pub fn byte_code(b: u8) -> Code {
    b as Code + 1
}

/// An integer-coded text over a declared alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Text {
    codes: Vec<Code>,
    alphabet: Alphabet,
}

impl Text {
    /// Encodes raw bytes with the identity byte coding `b -> b + 1`.
    pub fn from_bytes(bytes: &[u8], sigma: u32) -> Result<Self> {
        let codes: Vec<Code> = bytes.iter().map(|&b| byte_code(b)).collect();
        Self::from_codes(codes, sigma)
    }

    pub fn from_codes(codes: Vec<Code>, sigma: u32) -> Result<Self> {
        let alphabet = Alphabet::new(sigma)?;
        alphabet.check(&codes)?;
        Ok(Self { codes, alphabet })
    }

    pub fn codes(&self) -> &[Code] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn sigma(&self) -> u32 {
        self.alphabet.sigma
    }

    /// The codes followed by the sentinel.
    pub fn terminated(&self) -> Vec<Code> {
        let mut v = Vec::with_capacity(self.codes.len() + 1);
        v.extend_from_slice(&self.codes);
        v.push(SENTINEL);
        v
    }
}

/// Edge label: the half-open range `[start, end)` of source string `src`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Label {
    pub src: u32,
    pub start: u32,
    pub end: u32,
}

impl Label {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrieNode {
    pub parent: Option<NodeId>,
    pub label: Label,
    /// String depth at the lower end of the incoming edge.
    pub depth: usize,
    /// Children sorted by first edge character.
    pub children: Vec<(Code, NodeId)>,
    /// Leaf identifier: string id for string sets, suffix start for suffix trees.
    pub leaf: Option<usize>,
    /// Leaf-rank interval `[lo, hi]`, valid after [`CompactedTrie::assign_intervals`].
    pub interval: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// Each leaf is a stored string; source `i` is string `i`.
    Strings,
    /// Each leaf is a suffix of the single source `0`.
    Suffixes,
}

/// Arena-backed compacted trie over sentinel-terminated strings.
#[derive(Debug, Clone)]
pub struct CompactedTrie {
    nodes: Vec<TrieNode>,
    sources: Vec<Vec<Code>>,
    kind: LeafKind,
}

impl CompactedTrie {
    pub fn new_strings() -> Self {
        Self {
            nodes: vec![TrieNode::default()],
            sources: Vec::new(),
            kind: LeafKind::Strings,
        }
    }

    /// An empty suffix-tree shell over `terminated` (text plus sentinel).
    pub fn new_suffixes(terminated: Vec<Code>) -> Self {
        Self {
            nodes: vec![TrieNode::default()],
            sources: vec![terminated],
            kind: LeafKind::Suffixes,
        }
    }

    pub fn kind(&self) -> LeafKind {
        self.kind
    }

    pub fn sources(&self) -> &[Vec<Code>] {
        &self.sources
    }

    pub fn nodes(&self) -> &[TrieNode] {
        &self.nodes
    }

    pub fn node(&self, v: NodeId) -> &TrieNode {
        &self.nodes[v]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.leaf.is_some()).count()
    }

    pub fn label(&self, v: NodeId) -> &[Code] {
        let l = self.nodes[v].label;
        &self.sources[l.src as usize][l.start as usize..l.end as usize]
    }

    pub fn edge_len(&self, v: NodeId) -> usize {
        self.nodes[v].label.len()
    }

    pub fn first_char(&self, v: NodeId) -> Code {
        let l = self.nodes[v].label;
        self.sources[l.src as usize][l.start as usize]
    }

    /// Sentinel-terminated string of leaf `id`.
    pub fn leaf_str(&self, id: usize) -> &[Code] {
        match self.kind {
            LeafKind::Strings => &self.sources[id],
            LeafKind::Suffixes => &self.sources[0][id..],
        }
    }

    pub fn child(&self, v: NodeId, c: Code) -> Option<NodeId> {
        let ch = &self.nodes[v].children;
        ch.binary_search_by_key(&c, |&(k, _)| k).ok().map(|i| ch[i].1)
    }

    pub fn leaves_below(&self, v: NodeId) -> usize {
        let (lo, hi) = self.nodes[v].interval;
        hi + 1 - lo
    }

    /// Inserts a string (without sentinel). Returns the new leaf node.
    pub fn insert(&mut self, s: &[Code]) -> Result<NodeId> {
        self.insert_detailed(s).map(|ins| ins.leaf)
    }

    /// Inserts a string and reports which nodes were created.
    pub fn insert_detailed(&mut self, s: &[Code]) -> Result<Insertion> {
        assert_eq!(self.kind, LeafKind::Strings, "insert is only defined for string tries");
        let mut t = Vec::with_capacity(s.len() + 1);
        t.extend_from_slice(s);
        t.push(SENTINEL);
        let (attach, split_at) = self.locate(&t)?;
        let src = self.sources.len();
        self.sources.push(t);
        let (parent, middle) = match split_at {
            Some((child, k)) => {
                let mid = self.split_edge(child, k);
                (mid, Some(mid))
            }
            None => (attach, None),
        };
        let start = self.nodes[parent].depth as u32;
        let leaf = self.add_leaf(parent, src as u32, start, src);
        Ok(Insertion { leaf, middle, parent })
    }

    /// Finds where `t` (sentinel-terminated) leaves the trie: either at node `v`
    /// or `k` characters into the edge above `child`.
    fn locate(&self, t: &[Code]) -> Result<(NodeId, Option<(NodeId, usize)>)> {
        let mut v = ROOT;
        let mut pos = 0;
        loop {
            let Some(ch) = self.child(v, t[pos]) else {
                return Ok((v, None));
            };
            let label = self.label(ch);
            let k = label
                .iter()
                .zip(&t[pos..])
                .take_while(|(a, b)| a == b)
                .count();
            if k == label.len() {
                pos += k;
                if self.nodes[ch].leaf.is_some() {
                    return Err(Error::DuplicateKey);
                }
                v = ch;
            } else {
                return Ok((v, Some((ch, k))));
            }
        }
    }

    /// Splits the edge above `child` after `k` characters (`0 < k < edge_len`).
    pub fn split_edge(&mut self, child: NodeId, k: usize) -> NodeId {
        let old = self.nodes[child].label;
        debug_assert!(k > 0 && k < old.len());
        let parent = self.nodes[child].parent.expect("root has no incoming edge");
        let mid = self.nodes.len();
        let first = self.first_char(child);
        let mid_label = Label { src: old.src, start: old.start, end: old.start + k as u32 };
        let lower = Label { src: old.src, start: old.start + k as u32, end: old.end };
        let mid_depth = self.nodes[parent].depth + k;
        self.nodes.push(TrieNode {
            parent: Some(parent),
            label: mid_label,
            depth: mid_depth,
            children: Vec::new(),
            leaf: None,
            interval: self.nodes[child].interval,
        });
        self.nodes[child].label = lower;
        self.nodes[child].parent = Some(mid);
        let lower_first = self.sources[lower.src as usize][lower.start as usize];
        self.nodes[mid].children.push((lower_first, child));
        let siblings = &mut self.nodes[parent].children;
        let i = siblings.binary_search_by_key(&first, |&(c, _)| c).expect("child registered");
        siblings[i].1 = mid;
        mid
    }

    /// Adds a leaf below `parent` whose edge label is `sources[src][start..]`.
    pub fn add_leaf(&mut self, parent: NodeId, src: u32, start: u32, leaf_id: usize) -> NodeId {
        let end = self.sources[src as usize].len() as u32;
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + (end - start) as usize;
        self.nodes.push(TrieNode {
            parent: Some(parent),
            label: Label { src, start, end },
            depth,
            children: Vec::new(),
            leaf: Some(leaf_id),
            interval: (0, 0),
        });
        let c = self.sources[src as usize][start as usize];
        let ch = &mut self.nodes[parent].children;
        let i = ch.partition_point(|&(k, _)| k < c);
        ch.insert(i, (c, id));
        id
    }

    /// Recomputes leaf-rank intervals by a lexicographic depth-first traversal and
    /// returns the leaf ids in rank order.
    pub fn assign_intervals(&mut self) -> Vec<usize> {
        let mut order = Vec::new();
        // (node, children visited?)
        let mut stack = vec![(ROOT, false)];
        while let Some((v, done)) = stack.pop() {
            if done {
                let ch = &self.nodes[v].children;
                if let (Some(&(_, f)), Some(&(_, l))) = (ch.first(), ch.last()) {
                    let lo = self.nodes[f].interval.0;
                    let hi = self.nodes[l].interval.1;
                    self.nodes[v].interval = (lo, hi);
                }
                continue;
            }
            if let Some(id) = self.nodes[v].leaf {
                self.nodes[v].interval = (order.len(), order.len());
                order.push(id);
                continue;
            }
            stack.push((v, true));
            for &(_, c) in self.nodes[v].children.iter().rev() {
                stack.push((c, false));
            }
        }
        if order.is_empty() {
            // Empty trie: the root covers an empty range; keep (0, 0) with no leaves.
            self.nodes[ROOT].interval = (0, 0);
        }
        order
    }

    /// Structural check: compactedness, sorted distinct child keys, consistent
    /// depths and intervals.
    pub fn check_invariants(&self) -> Result<()> {
        self.check_shape(true)
    }

    /// As [`check_invariants`](Self::check_invariants), optionally skipping the
    /// leaf-rank intervals (which insert does not maintain).
    pub fn check_shape(&self, intervals: bool) -> Result<()> {
        let bad = |m: String| Err(Error::CorruptTrie(m));
        for (v, n) in self.nodes.iter().enumerate() {
            if v != ROOT && n.leaf.is_none() && n.children.len() < 2 {
                return bad(format!("internal node {v} has {} children", n.children.len()));
            }
            for w in n.children.windows(2) {
                if w[0].0 >= w[1].0 {
                    return bad(format!("children of {v} not strictly sorted"));
                }
            }
            for &(c, ch) in &n.children {
                if self.nodes[ch].parent != Some(v) {
                    return bad(format!("parent link of {ch} broken"));
                }
                if self.first_char(ch) != c {
                    return bad(format!("child key of {ch} differs from its label"));
                }
                if self.nodes[ch].depth != n.depth + self.edge_len(ch) {
                    return bad(format!("depth of {ch} inconsistent"));
                }
            }
            if intervals && !n.children.is_empty() {
                let lo = self.nodes[n.children[0].1].interval.0;
                let hi = self.nodes[n.children.last().unwrap().1].interval.1;
                if n.interval != (lo, hi) {
                    return bad(format!("interval of {v} is not the union of its children"));
                }
                for w in n.children.windows(2) {
                    if self.nodes[w[0].1].interval.1 + 1 != self.nodes[w[1].1].interval.0 {
                        return bad(format!("children intervals of {v} not contiguous"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical form with expanded labels: preorder of `[OPEN, len, label.., ]`
    /// tokens, children in character order, `CLOSE` after each subtree.
    pub fn canonical_labels(&self) -> Vec<u64> {
        const OPEN: u64 = u64::MAX;
        const CLOSE: u64 = u64::MAX - 1;
        let mut out = Vec::new();
        let mut stack = vec![(ROOT, false)];
        while let Some((v, done)) = stack.pop() {
            if done {
                out.push(CLOSE);
                continue;
            }
            out.push(OPEN);
            let label = if v == ROOT { &[][..] } else { self.label(v) };
            out.push(label.len() as u64);
            out.extend(label.iter().map(|&c| c as u64));
            stack.push((v, true));
            for &(_, c) in self.nodes[v].children.iter().rev() {
                stack.push((c, false));
            }
        }
        out
    }

    /// Shape signature for suffix trees: preorder `(first char, depth, leaf id)`
    /// triples with children in character order.
    pub fn shape_signature(&self) -> Vec<(Code, usize, usize)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            let c = if v == ROOT { SENTINEL } else { self.first_char(v) };
            out.push((c, self.nodes[v].depth, self.nodes[v].leaf.unwrap_or(usize::MAX)));
            for &(_, ch) in self.nodes[v].children.iter().rev() {
                stack.push(ch);
            }
        }
        out
    }
}

/// Nodes touched by one string insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Insertion {
    pub leaf: NodeId,
    /// Middle node created by splitting an edge, if any.
    pub middle: Option<NodeId>,
    pub parent: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    MatchedAtNode,
    MatchedOnEdge,
    NotFound,
}

impl Outcome {
    pub fn is_match(self) -> bool {
        self != Outcome::NotFound
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::MatchedAtNode => "MATCHED_AT_NODE",
            Outcome::MatchedOnEdge => "MATCHED_ON_EDGE",
            Outcome::NotFound => "NOT_FOUND",
        }
    }
}

/// Result of a prefix search.
///
/// `node` is the deepest trie node the descent reached (for matches resolved by
/// binary search inside a light subtree this is the subtree root). `interval`
/// is the leaf-rank interval of all stored strings that have the pattern as a
/// prefix; indexes that do not maintain ranks report only `count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchResult {
    pub outcome: Outcome,
    pub node: NodeId,
    pub interval: Option<(usize, usize)>,
    pub count: usize,
    pub matched_len: usize,
}

impl MatchResult {
    pub fn not_found(node: NodeId, matched_len: usize) -> Self {
        Self { outcome: Outcome::NotFound, node, interval: None, count: 0, matched_len }
    }
}
