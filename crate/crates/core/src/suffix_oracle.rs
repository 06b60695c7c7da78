//! Prepend-letter suffix tree (Weiner's algorithm with hard and soft a-links)
//! and the fringe marked ancestor structure.
//!
//! The text is stored reversed, terminator first, so prepending is a push and
//! edge labels `(r, len)` never move: character `k` of a label is `rev[r - k]`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::text_model::{Code, SENTINEL};

pub type OracleNode = usize;

const ROOT: OracleNode = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// The target node spells `a` followed by the source string.
    Hard(OracleNode),
    /// The locus lies inside the edge ending at the target.
    Soft(OracleNode),
}

impl Link {
    pub fn target(self) -> OracleNode {
        match self {
            Link::Hard(v) | Link::Soft(v) => v,
        }
    }
}

#[derive(Debug, Clone)]
struct ONode {
    parent: Option<OracleNode>,
    /// Index in `rev` of the first label character.
    r: usize,
    len: usize,
    depth: usize,
    children: Vec<(Code, OracleNode)>,
    /// Length of the suffix this leaf spells, terminator included.
    suffix_len: Option<usize>,
    links: BTreeMap<Code, Link>,
}

#[derive(Debug, Clone)]
pub struct OnlineSuffixTree {
    sigma: u32,
    rev: Vec<Code>,
    nodes: Vec<ONode>,
    last: OracleNode,
    steps: u64,
}

impl OnlineSuffixTree {
    /// Suffix tree of the empty text: a root with the single leaf `$`.
    pub fn new(sigma: u32) -> Result<Self> {
        if sigma == 0 {
            return Err(Error::InvalidInput("alphabet size must be positive".into()));
        }
        let root = ONode {
            parent: None,
            r: 0,
            len: 0,
            depth: 0,
            children: Vec::new(),
            suffix_len: None,
            links: BTreeMap::new(),
        };
        let mut t = OnlineSuffixTree { sigma, rev: vec![SENTINEL], nodes: vec![root], last: ROOT, steps: 0 };
        t.last = t.add_leaf(ROOT, 1);
        Ok(t)
    }

    /// Builds by prepending the codes of `text` right to left.
    pub fn from_codes(text: &[Code], sigma: u32) -> Result<Self> {
        let mut t = Self::new(sigma)?;
        for &a in text.iter().rev() {
            t.prepend(a)?;
        }
        Ok(t)
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    /// Current text without the terminator.
    pub fn text(&self) -> Vec<Code> {
        self.rev[1..].iter().rev().copied().collect()
    }

    pub fn text_len(&self) -> usize {
        self.rev.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Elementary steps spent in walk-ups, link updates and soft-link copies.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn link(&self, v: OracleNode, a: Code) -> Option<Link> {
        self.nodes.get(v)?.links.get(&a).copied()
    }

    fn ch(&self, v: OracleNode, k: usize) -> Code {
        self.rev[self.nodes[v].r - k]
    }

    fn add_leaf(&mut self, parent: OracleNode, suffix_len: usize) -> OracleNode {
        let d = self.nodes[parent].depth;
        let id = self.nodes.len();
        self.nodes.push(ONode {
            parent: Some(parent),
            r: suffix_len - 1 - d,
            len: suffix_len - d,
            depth: suffix_len,
            children: Vec::new(),
            suffix_len: Some(suffix_len),
            links: BTreeMap::new(),
        });
        let c = self.ch(id, 0);
        let ch = &mut self.nodes[parent].children;
        let i = ch.partition_point(|&(x, _)| x < c);
        ch.insert(i, (c, id));
        id
    }

    /// Splits the edge into `x` after `k` characters; returns the middle node.
    fn split(&mut self, x: OracleNode, k: usize) -> OracleNode {
        let p = self.nodes[x].parent.expect("split below the root");
        let c = self.ch(x, 0);
        let (r, len) = (self.nodes[x].r, self.nodes[x].len);
        let m = self.nodes.len();
        self.nodes.push(ONode {
            parent: Some(p),
            r,
            len: k,
            depth: self.nodes[p].depth + k,
            children: Vec::new(),
            suffix_len: None,
            links: BTreeMap::new(),
        });
        self.nodes[x].r = r - k;
        self.nodes[x].len = len - k;
        self.nodes[x].parent = Some(m);
        let cx = self.ch(x, 0);
        self.nodes[m].children.push((cx, x));
        let slot = self.nodes[p].children.iter_mut().find(|e| e.0 == c).expect("edge present");
        slot.1 = m;
        m
    }

    /// Turns the tree for `T` into the tree for `aT`.
    pub fn prepend(&mut self, a: Code) -> Result<()> {
        if a == SENTINEL || a > self.sigma {
            return Err(Error::AlphabetOverflow { symbol: a as u64, position: 0, sigma: self.sigma });
        }
        self.rev.push(a);
        let new_len = self.rev.len();
        // Lowest node on the path to the previous whole-text leaf with an a-link.
        let mut path = Vec::new();
        let mut u = Some(self.last);
        while let Some(v) = u {
            self.steps += 1;
            if self.nodes[v].links.contains_key(&a) {
                break;
            }
            path.push(v);
            u = self.nodes[v].parent;
        }
        let mut split = None;
        let attach = match u {
            None => ROOT,
            Some(u) => match self.nodes[u].links[&a] {
                Link::Hard(x) => x,
                Link::Soft(x) => {
                    let h = self.nodes[u].depth + 1;
                    let p = self.nodes[x].parent.expect("soft target has a parent");
                    let m = self.split(x, h - self.nodes[p].depth);
                    split = Some((m, x));
                    self.nodes[u].links.insert(a, Link::Hard(m));
                    // Ancestors whose soft a-link ended at `x` now end at `m`.
                    let mut w = self.nodes[u].parent;
                    while let Some(y) = w {
                        if self.nodes[y].links.get(&a) != Some(&Link::Soft(x)) {
                            break;
                        }
                        self.steps += 1;
                        self.nodes[y].links.insert(a, Link::Soft(m));
                        w = self.nodes[y].parent;
                    }
                    m
                }
            },
        };
        let leaf = self.add_leaf(attach, new_len);
        for &w in &path {
            let link = if w == self.last { Link::Hard(leaf) } else { Link::Soft(leaf) };
            self.nodes[w].links.insert(a, link);
        }
        // Eager copy of the lower node's links as soft links, once the path
        // links (which may include the lower node) are in place.
        if let Some((m, x)) = split {
            let copied: Vec<(Code, Link)> =
                self.nodes[x].links.iter().map(|(&b, l)| (b, Link::Soft(l.target()))).collect();
            self.steps += copied.len() as u64;
            self.nodes[m].links.extend(copied);
        }
        self.last = leaf;
        Ok(())
    }

    /// Where `s` ends: `(node, matched all of the node's string)`, or `None`
    /// if `s` does not occur.
    fn locate(&self, s: &[Code]) -> Option<(OracleNode, bool)> {
        let mut v = ROOT;
        let mut i = 0;
        loop {
            if i == s.len() {
                return Some((v, true));
            }
            let &(_, w) = self.nodes[v].children.iter().find(|e| e.0 == s[i])?;
            let len = self.nodes[w].len;
            for k in 0..len {
                if i + k == s.len() {
                    return Some((w, false));
                }
                if self.ch(w, k) != s[i + k] {
                    return None;
                }
            }
            i += len;
            v = w;
        }
    }

    fn string_of(&self, mut v: OracleNode) -> Vec<Code> {
        let mut parts = Vec::new();
        while let Some(p) = self.nodes[v].parent {
            parts.push((0..self.nodes[v].len).map(|k| self.ch(v, k)).collect::<Vec<_>>());
            v = p;
        }
        parts.into_iter().rev().flatten().collect()
    }

    /// Checks every stored link against a fresh locus search, monotonicity
    /// along tree edges and that no defined link is missing.
    pub fn audit_links(&self) -> Result<()> {
        let bad = |m: String| Err(Error::CorruptTrie(m));
        let mut letters: Vec<Code> = self.rev[1..].to_vec();
        letters.sort_unstable();
        letters.dedup();
        let mut leaf_of = vec![usize::MAX; self.rev.len() + 1];
        for (v, n) in self.nodes.iter().enumerate() {
            if let Some(l) = n.suffix_len {
                leaf_of[l] = v;
            }
        }
        for v in 0..self.nodes.len() {
            if let Some(l) = self.nodes[v].suffix_len {
                // A leaf's only a-link is to the leaf one character longer.
                let want: Vec<(Code, Link)> =
                    if l < self.rev.len() { vec![(self.rev[l], Link::Hard(leaf_of[l + 1]))] } else { Vec::new() };
                let got: Vec<(Code, Link)> = self.nodes[v].links.iter().map(|(&a, &k)| (a, k)).collect();
                if want != got {
                    return bad(format!("leaf {v}: links {got:?}, expected {want:?}"));
                }
                if let Some(&(a, _)) = want.first() {
                    if !self.nodes[self.nodes[v].parent.expect("leaf has a parent")].links.contains_key(&a) {
                        return bad(format!("link {a} at leaf {v} but not at its parent"));
                    }
                }
                continue;
            }
            let s = self.string_of(v);
            for &a in &letters {
                let mut as_ = vec![a];
                as_.extend_from_slice(&s);
                let want = self.locate(&as_).map(|(x, at)| if at { Link::Hard(x) } else { Link::Soft(x) });
                let got = self.nodes[v].links.get(&a).copied();
                if want != got {
                    return bad(format!("node {v} letter {a}: stored {got:?}, locus {want:?}"));
                }
                if got.is_some() {
                    if let Some(p) = self.nodes[v].parent {
                        if !self.nodes[p].links.contains_key(&a) {
                            return bad(format!("link {a} at {v} but not at its parent {p}"));
                        }
                    }
                }
            }
            if self.nodes[v].links.keys().any(|a| letters.binary_search(a).is_err()) {
                return bad(format!("node {v} links a letter absent from the text"));
            }
        }
        Ok(())
    }

    /// Same format as `CompactedTrie::canonical_labels`.
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
            out.push(self.nodes[v].len as u64);
            out.extend((0..self.nodes[v].len).map(|k| self.ch(v, k) as u64));
            stack.push((v, true));
            for &(_, w) in self.nodes[v].children.iter().rev() {
                stack.push((w, false));
            }
        }
        out
    }

    /// Same format as `CompactedTrie::shape_signature`; leaf ids are suffix
    /// start positions in the current text.
    pub fn shape_signature(&self) -> Vec<(Code, usize, usize)> {
        let total = self.rev.len();
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            let n = &self.nodes[v];
            let c = if v == ROOT { SENTINEL } else { self.ch(v, 0) };
            out.push((c, n.depth, n.suffix_len.map_or(usize::MAX, |l| total - l)));
            for &(_, w) in n.children.iter().rev() {
                stack.push(w);
            }
        }
        out
    }
}

/// Lowest marked ancestor queries on a growing tree whose marked nodes form a
/// connected subtree containing the root.
///
/// Each node keeps a shortcut `up` to some proper ancestor. Any unmarked
/// ancestor has only unmarked nodes below it, so a query may jump along
/// shortcuts while they land on unmarked nodes, then finish with parent
/// steps. Visited nodes are compressed to the highest unmarked node found.
#[derive(Debug, Clone)]
pub struct FmaTree {
    parent: Vec<Option<usize>>,
    marked: Vec<bool>,
    up: Vec<usize>,
    steps: u64,
}

impl Default for FmaTree {
    fn default() -> Self {
        Self::new()
    }
}

impl FmaTree {
    pub const ROOT: usize = 0;

    /// A single unmarked root.
    pub fn new() -> Self {
        FmaTree { parent: vec![None], marked: vec![false], up: vec![0], steps: 0 }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent.get(v).copied().flatten()
    }

    pub fn is_marked(&self, v: usize) -> bool {
        self.marked.get(v).copied().unwrap_or(false)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.parent.len() {
            Ok(())
        } else {
            Err(Error::InvalidHandle)
        }
    }

    /// New unmarked leaf below `p`.
    pub fn insert_leaf(&mut self, p: usize) -> Result<usize> {
        self.check(p)?;
        self.parent.push(Some(p));
        self.marked.push(false);
        self.up.push(p);
        Ok(self.parent.len() - 1)
    }

    /// New node on the edge above `v`; it adopts the mark of its parent.
    pub fn insert_middle(&mut self, v: usize) -> Result<usize> {
        self.check(v)?;
        let p = self.parent[v].ok_or_else(|| Error::InvalidInput("the root has no edge above it".into()))?;
        let m = self.parent.len();
        self.parent.push(Some(p));
        self.marked.push(self.marked[p]);
        self.up.push(p);
        self.parent[v] = Some(m);
        Ok(m)
    }

    pub fn mark(&mut self, v: usize) -> Result<()> {
        self.check(v)?;
        if let Some(p) = self.parent[v] {
            if !self.marked[p] {
                return Err(Error::MarkOrderViolation(v));
            }
        }
        self.marked[v] = true;
        Ok(())
    }

    /// Lowest marked ancestor of `v` (itself included), `None` if the root is
    /// unmarked.
    pub fn query(&mut self, v: usize) -> Result<Option<usize>> {
        self.check(v)?;
        if self.marked[v] {
            return Ok(Some(v));
        }
        if !self.marked[Self::ROOT] {
            return Ok(None);
        }
        let mut visited = vec![v];
        let mut x = v;
        loop {
            self.steps += 1;
            let u = self.up[x];
            if self.marked[u] {
                break;
            }
            visited.push(u);
            x = u;
        }
        // `x` is unmarked and the answer lies strictly above it, at or below `up[x]`.
        loop {
            self.steps += 1;
            let p = self.parent[x].expect("marked root above");
            if self.marked[p] {
                for &w in &visited {
                    if w != x {
                        self.up[w] = x;
                    }
                }
                return Ok(Some(p));
            }
            x = p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suffix_array::{build_suffix_array, build_suffix_tree};
    use crate::text_model::{byte_code, Text};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fresh(codes: &[Code], sigma: u32) -> crate::CompactedTrie {
        let t = Text::from_codes(codes.to_vec(), sigma).unwrap();
        build_suffix_tree(&build_suffix_array(&t), &t)
    }

    fn same_as_fresh(t: &OnlineSuffixTree) {
        let f = fresh(&t.text(), t.sigma());
        assert_eq!(t.canonical_labels(), f.canonical_labels(), "text {:?}", t.text());
        assert_eq!(t.shape_signature(), f.shape_signature(), "text {:?}", t.text());
    }

    fn bytes(s: &str) -> Vec<Code> {
        s.bytes().map(byte_code).collect()
    }

    #[test]
    fn prepend_b_to_a() {
        let mut t = OnlineSuffixTree::from_codes(&bytes("a"), 256).unwrap();
        t.prepend(byte_code(b'b')).unwrap();
        same_as_fresh(&t);
        assert_eq!(t.node_count(), 4);
        t.audit_links().unwrap();
    }

    #[test]
    fn ana_splits_leaf_edge() {
        let mut t = OnlineSuffixTree::from_codes(&bytes("na"), 256).unwrap();
        let before = t.node_count();
        t.prepend(byte_code(b'a')).unwrap();
        assert_eq!(t.node_count(), before + 2);
        same_as_fresh(&t);
        t.audit_links().unwrap();
        let a = byte_code(b'a');
        // root's a-link became hard once "a" got its own node
        assert!(matches!(t.link(ROOT, a), Some(Link::Hard(_))));
    }

    #[test]
    fn random_texts_track_fresh_builds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..30 {
            let sigma = [2u32, 3, 4, 26][round % 4];
            let n = rng.gen_range(0..120);
            let mut t = OnlineSuffixTree::new(sigma).unwrap();
            for step in 0..n {
                t.prepend(rng.gen_range(1..=sigma)).unwrap();
                same_as_fresh(&t);
                if step % 7 == 0 {
                    t.audit_links().unwrap();
                }
            }
            t.audit_links().unwrap();
        }
    }

    #[test]
    fn rejects_bad_letters() {
        let mut t = OnlineSuffixTree::new(4).unwrap();
        assert!(matches!(t.prepend(0), Err(Error::AlphabetOverflow { .. })));
        assert!(matches!(t.prepend(5), Err(Error::AlphabetOverflow { .. })));
        assert_eq!(t.text_len(), 0);
    }

    #[test]
    fn fma_examples() {
        let mut f = FmaTree::new();
        let leaf = f.insert_leaf(FmaTree::ROOT).unwrap();
        assert_eq!(f.query(leaf).unwrap(), None);
        f.mark(FmaTree::ROOT).unwrap();
        assert_eq!(f.query(leaf).unwrap(), Some(FmaTree::ROOT));
        let x = f.insert_leaf(FmaTree::ROOT).unwrap();
        let y = f.insert_leaf(x).unwrap();
        assert!(matches!(f.mark(y), Err(Error::MarkOrderViolation(_))));
        f.mark(x).unwrap();
        assert_eq!(f.query(y).unwrap(), Some(x));
        // a middle node under a marked parent is marked
        let m = f.insert_middle(y).unwrap();
        assert!(f.is_marked(m));
        assert_eq!(f.query(y).unwrap(), Some(m));
        assert!(f.insert_middle(FmaTree::ROOT).is_err());
        assert!(matches!(f.query(99), Err(Error::InvalidHandle)));
    }
}
