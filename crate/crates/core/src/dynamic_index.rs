//! Amortized dynamic compacted-trie index.
//!
//! Top level: nodes with at least `s = σ` leaves are heavy, nodes with at most
//! `s/2` leaves are light, anything in between keeps its current role. A heavy
//! node keeps a dynamic predecessor structure over all its children plus either
//! a single link to its only heavy child or a σ-sized child array.
//!
//! Every light child of a heavy node roots a small tree. Inside a small tree a
//! node of weight `w` (leaves below it) has a level `ℓ` with `w < 2f(ℓ+1)`;
//! maximal connected same-level groups are fragments. A node finds same-level
//! children through a static dictionary and lower-level children through a
//! weighted exponential search tree whose stored weights stay in `[⌈√w⌉, w]`.
//! A fragment whose root reaches weight `2f(ℓ+1)` is promoted; a small tree
//! whose root reaches `s` leaves is rebalanced into heavy nodes.

use std::cmp::Ordering;

use crate::counters::ProbeCounters;
use crate::error::{Error, Result};
use crate::predecessor_kit::{DetDictionary, DynamicPredecessor};
use crate::text_model::{check_codes, Code, CompactedTrie, MatchResult, NodeId, Outcome, ROOT};
use crate::wexp_tree::{f, split_threshold, WexpTree};

/// Level of a freshly built small-tree node of weight `w`: the largest ℓ with
/// `f(ℓ) <= w`, and 0 for a single leaf.
pub fn level_for(w: usize) -> usize {
    let w = w as u64;
    if w < f(0) {
        return 0;
    }
    (0..).take_while(|&l| f(l) <= w).last().unwrap_or(0)
}

pub(crate) fn ceil_sqrt(w: usize) -> u64 {
    let mut r = (w as f64).sqrt() as u64;
    while r * r < w as u64 {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= w as u64 {
        r -= 1;
    }
    r
}

#[derive(Debug, Clone)]
enum Route {
    None,
    Single(Code, NodeId),
    /// `array[c]` is child id + 1, or 0. Holds all children.
    Array(Vec<u32>),
}

#[derive(Debug, Clone)]
struct HeavyData {
    children: DynamicPredecessor<NodeId>,
    route: Route,
}

#[derive(Debug, Clone)]
struct LightData {
    tree: usize,
    level: usize,
    frag: usize,
    /// Same-level children.
    same: DetDictionary<NodeId>,
    same_keys: Vec<u64>,
    /// Lower-level children; `None` marks an entry whose child has since joined
    /// this node's fragment.
    lower: Option<WexpTree<Option<NodeId>>>,
}

#[derive(Debug, Clone)]
enum Role {
    Unset,
    Heavy(Box<HeavyData>),
    Light(Box<LightData>),
}

#[derive(Debug, Clone)]
struct NodeInfo {
    leaves: usize,
    role: Role,
}

#[derive(Debug, Clone)]
struct SmallTree {
    root: NodeId,
    leaves: usize,
    alive: bool,
}

#[derive(Debug, Clone)]
struct Fragment {
    root: NodeId,
    members: Vec<NodeId>,
    counter: usize,
    level: usize,
    alive: bool,
}

/// Work counters for the amortized maintenance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaintenanceStats {
    pub promotions: u64,
    pub rebalances: u64,
    /// Elementary steps spent promoting and rebalancing.
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub struct DynTrieIndex {
    trie: CompactedTrie,
    sigma: u32,
    s: usize,
    info: Vec<NodeInfo>,
    trees: Vec<SmallTree>,
    frags: Vec<Fragment>,
    stats: MaintenanceStats,
}

impl DynTrieIndex {
    pub fn new(sigma: u32) -> Result<Self> {
        if sigma == 0 {
            return Err(Error::InvalidInput("alphabet size must be positive".into()));
        }
        let root = NodeInfo {
            leaves: 0,
            role: Role::Heavy(Box::new(HeavyData { children: DynamicPredecessor::new(sigma as u64 + 1), route: Route::None })),
        };
        Ok(Self {
            trie: CompactedTrie::new_strings(),
            sigma,
            s: (sigma as usize).max(2),
            info: vec![root],
            trees: Vec::new(),
            frags: Vec::new(),
            stats: MaintenanceStats::default(),
        })
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    /// Heavy threshold `s`.
    pub fn threshold(&self) -> usize {
        self.s
    }

    pub fn len(&self) -> usize {
        self.trie.sources().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> MaintenanceStats {
        self.stats
    }

    pub fn trie(&self) -> &CompactedTrie {
        &self.trie
    }

    /// Stored string `id` without its sentinel.
    pub fn string(&self, id: usize) -> &[Code] {
        let s = &self.trie.sources()[id];
        &s[..s.len() - 1]
    }

    pub fn is_heavy(&self, v: NodeId) -> bool {
        matches!(self.info[v].role, Role::Heavy(_))
    }

    pub fn leaves(&self, v: NodeId) -> usize {
        self.info[v].leaves
    }

    pub fn heavy_count(&self) -> usize {
        self.info.iter().filter(|i| matches!(i.role, Role::Heavy(_))).count()
    }

    /// Level of a light node.
    pub fn level(&self, v: NodeId) -> Option<usize> {
        match &self.info[v].role {
            Role::Light(l) => Some(l.level),
            _ => None,
        }
    }

    fn light(&self, v: NodeId) -> &LightData {
        match &self.info[v].role {
            Role::Light(l) => l,
            _ => panic!("node {v} is not light"),
        }
    }

    fn light_mut(&mut self, v: NodeId) -> &mut LightData {
        match &mut self.info[v].role {
            Role::Light(l) => l,
            _ => panic!("node {v} is not light"),
        }
    }

    fn heavy_mut(&mut self, v: NodeId) -> &mut HeavyData {
        match &mut self.info[v].role {
            Role::Heavy(h) => h,
            _ => panic!("node {v} is not heavy"),
        }
    }

    fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.trie.node(v).parent
    }

    fn key(&self, v: NodeId) -> u64 {
        self.trie.first_char(v) as u64
    }

    fn universe(&self) -> u64 {
        self.sigma as u64 + 1
    }

    fn new_fragment(&mut self, root: NodeId, level: usize) -> usize {
        self.frags.push(Fragment { root, members: vec![root], counter: self.info[root].leaves, level, alive: true });
        self.frags.len() - 1
    }

    fn light_data(tree: usize, level: usize, frag: usize) -> LightData {
        LightData { tree, level, frag, same: DetDictionary::default(), same_keys: Vec::new(), lower: None }
    }

    fn rebuild_same(&mut self, v: NodeId) {
        let pairs: Vec<(u64, NodeId)> = self
            .light(v)
            .same_keys
            .iter()
            .map(|&c| (c, self.trie.child(v, c as Code).expect("same-level child")))
            .collect();
        self.stats.steps += pairs.len() as u64;
        self.light_mut(v).same = DetDictionary::build(pairs).expect("distinct child keys");
    }

    /// Registers lower-level child `x` in `v`'s weighted tree with stored weight `⌈√w⌉`.
    fn register_lower(&mut self, v: NodeId, x: NodeId) {
        let key = self.key(x);
        let target = ceil_sqrt(self.info[x].leaves);
        let u = self.universe();
        let lower = self.light_mut(v).lower.get_or_insert_with(|| WexpTree::new(u));
        let h = match lower.find(key) {
            Some(h) => {
                *lower.value_mut(h) = Some(x);
                h
            }
            None => lower.insert(key, Some(x)).expect("fresh key"),
        };
        let mut steps = 1;
        while lower.weight(h) < target {
            lower.increase(h).expect("live handle");
            steps += 1;
        }
        self.stats.steps += steps;
    }

    /// Inserts a string and returns its id.
    pub fn insert(&mut self, s: &[Code]) -> Result<usize> {
        check_codes(s, self.sigma)?;
        let ins = self.trie.insert_detailed(s)?;
        let id = self.trie.sources().len() - 1;
        self.info.resize(self.trie.len(), NodeInfo { leaves: 0, role: Role::Unset });
        if let Some(m) = ins.middle {
            let b = self.trie.node(m).children.iter().map(|&(_, w)| w).find(|&w| w != ins.leaf).expect("split child");
            self.info[m].leaves = self.info[b].leaves;
            self.attach_middle(m, b);
        }
        self.info[ins.leaf].leaves = 1;
        let mut u = Some(ins.parent);
        while let Some(v) = u {
            self.info[v].leaves += 1;
            u = self.parent(v);
        }
        self.attach_leaf(ins.parent, ins.leaf);
        self.after_insert(ins.leaf);
        Ok(id)
    }

    /// Wires a middle node `m` created above `b` by an edge split.
    fn attach_middle(&mut self, m: NodeId, b: NodeId) {
        let gp = self.parent(m).expect("middle node has a parent");
        let c = self.key(m);
        let cb = self.key(b);
        let u = self.universe();
        if self.is_heavy(b) {
            let mut children = DynamicPredecessor::new(u);
            children.insert(cb, b).expect("fresh");
            self.info[m].role = Role::Heavy(Box::new(HeavyData { children, route: Route::Single(cb as Code, b) }));
        } else {
            let lb = self.light(b);
            let (tree, level, frag) = (lb.tree, lb.level, lb.frag);
            let mut data = Self::light_data(tree, level, frag);
            data.same_keys = vec![cb];
            data.same = DetDictionary::build(vec![(cb, b)]).expect("one key");
            self.info[m].role = Role::Light(Box::new(data));
            self.frags[frag].members.push(m);
            if self.frags[frag].root == b {
                self.frags[frag].root = m;
            }
            if self.trees[tree].root == b {
                self.trees[tree].root = m;
            }
        }
        match &mut self.info[gp].role {
            Role::Heavy(h) => {
                h.children.set_value(c, m).expect("child registered");
                match &mut h.route {
                    Route::Single(cc, w) if *cc as u64 == c => *w = m,
                    Route::Array(a) => a[c as usize] = m as u32 + 1,
                    _ => {}
                }
            }
            Role::Light(l) => {
                if l.same_keys.binary_search(&c).is_ok() {
                    l.same.set_value(c, m).expect("child registered");
                } else {
                    let lower = l.lower.as_mut().expect("lower-level child registered");
                    let h = lower.find(c).expect("child registered");
                    *lower.value_mut(h) = Some(m);
                }
            }
            Role::Unset => unreachable!(),
        }
    }

    /// Wires a new leaf below `p`.
    fn attach_leaf(&mut self, p: NodeId, leaf: NodeId) {
        let c = self.key(leaf);
        if self.is_heavy(p) {
            let h = self.heavy_mut(p);
            h.children.insert(c, leaf).expect("fresh");
            if let Route::Array(a) = &mut h.route {
                a[c as usize] = leaf as u32 + 1;
            }
            self.trees.push(SmallTree { root: leaf, leaves: 0, alive: true });
            let tree = self.trees.len() - 1;
            self.info[leaf].role = Role::Light(Box::new(Self::light_data(tree, 0, usize::MAX)));
            let frag = self.new_fragment(leaf, 0);
            self.light_mut(leaf).frag = frag;
            return;
        }
        let lp = self.light(p);
        let (tree, level, pfrag) = (lp.tree, lp.level, lp.frag);
        self.info[leaf].role = Role::Light(Box::new(Self::light_data(tree, 0, usize::MAX)));
        if level == 0 {
            self.light_mut(leaf).frag = pfrag;
            self.frags[pfrag].members.push(leaf);
            let keys = &mut self.light_mut(p).same_keys;
            let i = keys.partition_point(|&k| k < c);
            keys.insert(i, c);
            self.rebuild_same(p);
        } else {
            let frag = self.new_fragment(leaf, 0);
            self.light_mut(leaf).frag = frag;
            self.register_lower(p, leaf);
        }
    }

    /// Light nodes from `leaf` up to its small-tree root, bottom-up.
    fn light_path(&self, leaf: NodeId) -> Vec<NodeId> {
        let mut path = vec![leaf];
        let mut v = leaf;
        while let Some(p) = self.parent(v) {
            if self.is_heavy(p) {
                break;
            }
            path.push(p);
            v = p;
        }
        path
    }

    fn after_insert(&mut self, leaf: NodeId) {
        let path = self.light_path(leaf);
        let tree = self.light(leaf).tree;
        self.trees[tree].leaves += 1;
        // Fragment counters top-down, then the stored weight of each fragment root.
        for &v in path.iter().rev() {
            let frag = self.light(v).frag;
            if self.frags[frag].root != v {
                continue;
            }
            self.frags[frag].counter = self.info[v].leaves;
            let Some(p) = self.parent(v).filter(|&p| !self.is_heavy(p)) else { continue };
            let key = self.key(v);
            let target = ceil_sqrt(self.info[v].leaves);
            if let Some(lower) = self.light_mut(p).lower.as_mut() {
                if let Some(h) = lower.find(key) {
                    if lower.weight(h) < target {
                        lower.increase(h).expect("live handle");
                    }
                }
            }
        }
        loop {
            let path = self.light_path(leaf);
            let due = path.iter().rev().copied().find(|&v| {
                let fr = &self.frags[self.light(v).frag];
                fr.root == v && fr.counter as u64 >= split_threshold(fr.level)
            });
            match due {
                Some(r) => self.promote(r),
                None => break,
            }
        }
        let tree = self.light(leaf).tree;
        if self.trees[tree].leaves >= self.s {
            self.rebalance(tree);
        }
    }

    /// Raises the tail of the fragment rooted at `r` by one level.
    fn promote(&mut self, r: NodeId) {
        self.stats.promotions += 1;
        let old = self.light(r).frag;
        let level = self.frags[old].level;
        let bound = f(level + 1) as usize;
        let mut tail = vec![r];
        loop {
            let t = *tail.last().unwrap();
            let same = self.light(t).same_keys.clone();
            self.stats.steps += same.len() as u64 + 1;
            let next = same
                .iter()
                .map(|&c| self.trie.child(t, c as Code).unwrap())
                .find(|&x| self.info[x].leaves > bound);
            match next {
                Some(x) => tail.push(x),
                None => break,
            }
        }
        let pr = self.parent(r).filter(|&p| !self.is_heavy(p));
        let joins = pr.is_some_and(|p| self.light(p).level == level + 1);
        let target = if joins {
            let p = pr.unwrap();
            let key = self.key(r);
            let l = self.light_mut(p);
            let lower = l.lower.as_mut().expect("r is registered below its parent");
            let h = lower.find(key).expect("r is registered below its parent");
            *lower.value_mut(h) = None;
            let i = l.same_keys.partition_point(|&k| k < key);
            l.same_keys.insert(i, key);
            self.rebuild_same(p);
            self.light(p).frag
        } else {
            self.frags.push(Fragment { root: r, members: Vec::new(), counter: self.info[r].leaves, level: level + 1, alive: true });
            self.frags.len() - 1
        };
        for &t in &tail {
            let l = self.light_mut(t);
            l.level = level + 1;
            l.frag = target;
            self.frags[target].members.push(t);
        }
        for (i, &t) in tail.iter().enumerate() {
            let keep = tail.get(i + 1).map(|&x| self.key(x));
            let dropped: Vec<u64> = self.light(t).same_keys.iter().copied().filter(|&k| Some(k) != keep).collect();
            self.light_mut(t).same_keys = keep.into_iter().collect();
            self.rebuild_same(t);
            for k in dropped {
                let x = self.trie.child(t, k as Code).unwrap();
                self.split_off_fragment(x, old);
                self.register_lower(t, x);
            }
        }
        self.frags[old].alive = false;
        self.frags[old].members.clear();
    }

    /// Makes `x` the root of a new fragment holding its connected members of `old`.
    fn split_off_fragment(&mut self, x: NodeId, old: usize) {
        let level = self.frags[old].level;
        let id = self.new_fragment(x, level);
        self.frags[id].members.clear();
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            self.stats.steps += 1;
            self.light_mut(y).frag = id;
            self.frags[id].members.push(y);
            for &c in &self.light(y).same_keys {
                stack.push(self.trie.child(y, c as Code).unwrap());
            }
        }
    }

    /// Turns every node below the small-tree root with more than `s/2` leaves
    /// heavy and rebuilds the small trees hanging off them.
    fn rebalance(&mut self, tree: usize) {
        self.stats.rebalances += 1;
        let x = self.trees[tree].root;
        let h = self.parent(x).expect("small-tree root has a heavy parent");
        self.trees[tree].alive = false;
        let mut nodes = Vec::new();
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            nodes.push(v);
            stack.extend(self.trie.node(v).children.iter().map(|&(_, w)| w));
        }
        self.stats.steps += nodes.len() as u64;
        for &v in &nodes {
            let frag = self.light(v).frag;
            self.frags[frag].alive = false;
            self.frags[frag].members.clear();
        }
        let heavy: Vec<NodeId> = nodes.iter().copied().filter(|&v| 2 * self.info[v].leaves > self.s).collect();
        let u = self.universe();
        for &v in &heavy {
            self.info[v].role = Role::Heavy(Box::new(HeavyData { children: DynamicPredecessor::new(u), route: Route::None }));
        }
        for &v in &heavy {
            let children: Vec<(Code, NodeId)> = self.trie.node(v).children.clone();
            for &(c, w) in &children {
                self.heavy_mut(v).children.insert(c as u64, w).expect("fresh");
                self.stats.steps += 1;
                if !self.is_heavy(w) {
                    self.build_small_tree(w);
                }
            }
            self.refresh_route(v);
        }
        self.refresh_route(h);
    }

    fn refresh_route(&mut self, v: NodeId) {
        let heavy: Vec<(Code, NodeId)> =
            self.trie.node(v).children.iter().copied().filter(|&(_, w)| self.is_heavy(w)).collect();
        let route = match heavy.len() {
            0 => Route::None,
            1 => Route::Single(heavy[0].0, heavy[0].1),
            _ => {
                self.stats.steps += self.sigma as u64 + 1;
                let mut a = vec![0u32; self.sigma as usize + 1];
                for &(c, w) in &self.trie.node(v).children {
                    a[c as usize] = w as u32 + 1;
                }
                Route::Array(a)
            }
        };
        self.heavy_mut(v).route = route;
    }

    /// Builds the small-tree bookkeeping for the light subtree rooted at `x`.
    fn build_small_tree(&mut self, x: NodeId) {
        let tree = self.trees.len();
        self.trees.push(SmallTree { root: x, leaves: self.info[x].leaves, alive: true });
        let mut order = Vec::new();
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.trie.node(v).children.iter().map(|&(_, w)| w));
        }
        for &v in &order {
            self.stats.steps += 1;
            let level = level_for(self.info[v].leaves);
            let frag = match self.parent(v) {
                Some(p) if v != x && self.light(p).level == level => {
                    let fr = self.light(p).frag;
                    self.frags[fr].members.push(v);
                    fr
                }
                _ => usize::MAX,
            };
            self.info[v].role = Role::Light(Box::new(Self::light_data(tree, level, frag)));
            if frag == usize::MAX {
                let fr = self.new_fragment(v, level);
                self.light_mut(v).frag = fr;
            }
        }
        for &v in &order {
            let level = self.light(v).level;
            let children: Vec<(Code, NodeId)> = self.trie.node(v).children.clone();
            let mut same = Vec::new();
            for &(c, w) in &children {
                if self.light(w).level == level {
                    same.push(c as u64);
                } else {
                    self.register_lower(v, w);
                }
            }
            self.light_mut(v).same_keys = same;
            self.rebuild_same(v);
        }
    }
}

impl DynTrieIndex {
    /// Child of `v` whose edge starts with `c`, through the per-node structures.
    fn child_counted(&self, v: NodeId, c: Code, k: &mut ProbeCounters) -> Option<NodeId> {
        match &self.info[v].role {
            Role::Heavy(h) => match &h.route {
                Route::Array(a) => {
                    k.dict_probes += 1;
                    let w = a[c as usize];
                    (w > 0).then(|| w as usize - 1)
                }
                Route::Single(cc, w) if *cc == c => Some(*w),
                _ => h.children.pred_counted(c as u64, k).filter(|p| p.0 == c as u64).map(|p| *p.1),
            },
            Role::Light(l) => {
                if let Some(&w) = l.same.get_counted(c as u64, k) {
                    return Some(w);
                }
                let lower = l.lower.as_ref()?;
                lower.find_counted(c as u64, k).and_then(|h| *lower.value(h))
            }
            Role::Unset => unreachable!(),
        }
    }

    /// Child of `v` with the largest first character `< c`.
    fn child_below(&self, v: NodeId, c: Code, k: &mut ProbeCounters) -> Option<NodeId> {
        if c == 0 {
            return None;
        }
        let x = c as u64 - 1;
        let key = match &self.info[v].role {
            Role::Heavy(h) => h.children.pred_counted(x, k).map(|p| p.0),
            Role::Light(l) => {
                let i = l.same_keys.partition_point(|&s| s <= x);
                let a = i.checked_sub(1).map(|i| l.same_keys[i]);
                let b = l.lower.as_ref().and_then(|t| t.pred_counted(x, k)).map(|h| l.lower.as_ref().unwrap().key(h));
                a.max(b)
            }
            Role::Unset => unreachable!(),
        }?;
        self.trie.child(v, key as Code)
    }

    fn rightmost_leaf(&self, mut v: NodeId) -> usize {
        while let Some(&(_, w)) = self.trie.node(v).children.last() {
            v = w;
        }
        self.trie.node(v).leaf.expect("childless node is a leaf")
    }

    /// Largest leaf ordered before the whole subtree of `w`.
    fn leaf_before(&self, mut w: NodeId, k: &mut ProbeCounters) -> Option<usize> {
        while let Some(p) = self.parent(w) {
            if let Some(x) = self.child_below(p, self.trie.first_char(w), k) {
                return Some(self.rightmost_leaf(x));
            }
            w = p;
        }
        None
    }

    /// Prefix search. `count` is the number of stored strings with prefix `p`;
    /// rank intervals are not maintained by the dynamic index.
    pub fn search(&self, p: &[Code]) -> Result<MatchResult> {
        self.search_counted(p, &mut ProbeCounters::default())
    }

    pub fn search_counted(&self, p: &[Code], k: &mut ProbeCounters) -> Result<MatchResult> {
        check_codes(p, self.sigma)?;
        let m = p.len();
        if self.is_empty() {
            return Ok(MatchResult::not_found(ROOT, 0));
        }
        let found = |outcome, node: NodeId| MatchResult {
            outcome,
            node,
            interval: None,
            count: self.info[node].leaves,
            matched_len: m,
        };
        let mut v = ROOT;
        let mut pos = 0;
        loop {
            if pos == m {
                return Ok(found(Outcome::MatchedAtNode, v));
            }
            let Some(w) = self.child_counted(v, p[pos], k) else {
                return Ok(MatchResult::not_found(v, pos));
            };
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
                return Ok(found(Outcome::MatchedOnEdge, w));
            }
            pos += label.len();
            v = w;
        }
    }

    /// Id of the largest stored string `<= p` (sentinel-terminated order).
    pub fn predecessor(&self, p: &[Code]) -> Result<Option<usize>> {
        self.predecessor_counted(p, &mut ProbeCounters::default())
    }

    pub fn predecessor_counted(&self, p: &[Code], k: &mut ProbeCounters) -> Result<Option<usize>> {
        check_codes(p, self.sigma)?;
        let at = |i: usize| p.get(i).copied().unwrap_or(0);
        let mut v = ROOT;
        let mut pos = 0;
        loop {
            let c = at(pos);
            let Some(w) = self.child_counted(v, c, k) else {
                return Ok(match self.child_below(v, c, k) {
                    Some(x) => Some(self.rightmost_leaf(x)),
                    None => self.leaf_before(v, k),
                });
            };
            if c == 0 {
                return Ok(self.trie.node(w).leaf);
            }
            let label = self.trie.label(w);
            for (j, &lc) in label.iter().enumerate().skip(1) {
                k.chars_compared += 1;
                match lc.cmp(&at(pos + j)) {
                    Ordering::Equal => {}
                    Ordering::Less => return Ok(Some(self.rightmost_leaf(w))),
                    Ordering::Greater => return Ok(self.leaf_before(w, k)),
                }
            }
            // The whole label, sentinel included, matched.
            if let Some(id) = self.trie.node(w).leaf {
                return Ok(Some(id));
            }
            pos += label.len();
            v = w;
        }
    }

    /// Full structural audit; returns the first violation.
    pub fn audit(&self) -> Result<()> {
        let bad = |m: String| Err(Error::CorruptTrie(m));
        self.trie.check_shape(false)?;
        if self.info.len() != self.trie.len() || !self.is_heavy(ROOT) {
            return bad("node table out of sync or light root".into());
        }
        // leaf counts
        let mut leaves = vec![0usize; self.trie.len()];
        let mut order = Vec::with_capacity(self.trie.len());
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.trie.node(v).children.iter().map(|&(_, w)| w));
        }
        for &v in order.iter().rev() {
            leaves[v] = if self.trie.node(v).leaf.is_some() {
                1
            } else {
                self.trie.node(v).children.iter().map(|&(_, w)| leaves[w]).sum()
            };
            if leaves[v] != self.info[v].leaves {
                return bad(format!("node {v}: leaf count {} != {}", self.info[v].leaves, leaves[v]));
            }
        }
        let mut frag_members: Vec<Vec<NodeId>> = vec![Vec::new(); self.frags.len()];
        for &v in &order {
            let w = leaves[v];
            let parent = self.parent(v);
            match &self.info[v].role {
                Role::Unset => return bad(format!("node {v} has no role")),
                Role::Heavy(h) => {
                    if 2 * w <= self.s && v != ROOT {
                        return bad(format!("heavy node {v} has only {w} leaves"));
                    }
                    if parent.is_some_and(|p| !self.is_heavy(p)) {
                        return bad(format!("heavy node {v} below a light node"));
                    }
                    self.audit_heavy(v, h)?;
                }
                Role::Light(l) => {
                    if w >= self.s {
                        return bad(format!("light node {v} has {w} >= s leaves"));
                    }
                    let p = parent.expect("root is heavy");
                    let tree = &self.trees[l.tree];
                    if !tree.alive {
                        return bad(format!("node {v} in a dead small tree"));
                    }
                    if self.is_heavy(p) {
                        if tree.root != v || tree.leaves != w {
                            return bad(format!("small-tree root {v} record mismatch"));
                        }
                    } else if self.light(p).tree != l.tree {
                        return bad(format!("node {v} and its parent in different small trees"));
                    }
                    let l1 = split_threshold(l.level) as usize;
                    if w >= l1 || (l.level >= 1 && (w as u64) < f(l.level)) {
                        return bad(format!("node {v}: weight {w} outside level-{} window", l.level));
                    }
                    let fr = &self.frags[l.frag];
                    if !fr.alive || fr.level != l.level {
                        return bad(format!("node {v}: fragment {} dead or level mismatch", l.frag));
                    }
                    frag_members[l.frag].push(v);
                    let is_root = self.is_heavy(p) || self.light(p).level != l.level;
                    if is_root {
                        if fr.root != v || fr.counter != w {
                            return bad(format!("node {v}: fragment root or counter mismatch"));
                        }
                    } else {
                        if self.light(p).frag != l.frag {
                            return bad(format!("node {v}: same-level parent in another fragment"));
                        }
                        if self.light(p).level < l.level {
                            return bad(format!("node {v}: level increases downwards"));
                        }
                    }
                    if !self.is_heavy(p) && self.light(p).level < l.level {
                        return bad(format!("node {v}: level above its parent's"));
                    }
                    self.audit_light(v, l)?;
                }
            }
        }
        for (i, fr) in self.frags.iter().enumerate() {
            if !fr.alive {
                continue;
            }
            let mut a = fr.members.clone();
            let mut b = std::mem::take(&mut frag_members[i]);
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return bad(format!("fragment {i}: member list differs from reachable members"));
            }
        }
        Ok(())
    }

    fn audit_heavy(&self, v: NodeId, h: &HeavyData) -> Result<()> {
        let bad = |m: String| Err(Error::CorruptTrie(m));
        let children = &self.trie.node(v).children;
        let stored: Vec<(u64, NodeId)> = h.children.entries().into_iter().map(|(k, &w)| (k, w)).collect();
        let want: Vec<(u64, NodeId)> = children.iter().map(|&(c, w)| (c as u64, w)).collect();
        if stored != want {
            return bad(format!("heavy node {v}: child predecessor structure out of date"));
        }
        h.children.tree().audit()?;
        let heavy: Vec<(Code, NodeId)> = children.iter().copied().filter(|&(_, w)| self.is_heavy(w)).collect();
        let ok = match (&h.route, heavy.len()) {
            (Route::None, 0) => true,
            (Route::Single(c, w), 1) => (*c, *w) == heavy[0],
            (Route::Array(a), n) if n >= 2 => {
                a.iter().enumerate().filter(|&(_, &x)| x > 0).count() == children.len()
                    && children.iter().all(|&(c, w)| a[c as usize] == w as u32 + 1)
            }
            _ => false,
        };
        if !ok {
            return bad(format!("heavy node {v}: route does not match its heavy children"));
        }
        Ok(())
    }

    fn audit_light(&self, v: NodeId, l: &LightData) -> Result<()> {
        let bad = |m: String| Err(Error::CorruptTrie(m));
        let mut same = Vec::new();
        let mut lower = Vec::new();
        for &(c, w) in &self.trie.node(v).children {
            if self.light(w).level == l.level {
                same.push((c as u64, w));
            } else {
                lower.push((c as u64, w));
            }
        }
        if l.same_keys != same.iter().map(|p| p.0).collect::<Vec<_>>() || l.same.len() != same.len() {
            return bad(format!("node {v}: same-level key list out of date"));
        }
        for &(c, w) in &same {
            if l.same.get(c) != Some(&w) {
                return bad(format!("node {v}: dictionary misses child {w}"));
            }
        }
        let Some(t) = &l.lower else {
            return if lower.is_empty() { Ok(()) } else { bad(format!("node {v}: lower children unregistered")) };
        };
        t.audit()?;
        let mut live = Vec::new();
        for h in t.iter() {
            match t.value(h) {
                Some(w) => live.push((t.key(h), *w, t.weight(h))),
                None => {
                    if l.same_keys.binary_search(&t.key(h)).is_err() {
                        return bad(format!("node {v}: retired entry {} not a same-level child", t.key(h)));
                    }
                }
            }
        }
        if live.len() != lower.len() {
            return bad(format!("node {v}: {} live entries for {} lower children", live.len(), lower.len()));
        }
        for (&(k, w, stored), &(c, x)) in live.iter().zip(&lower) {
            if (k, w) != (c, x) {
                return bad(format!("node {v}: weighted entry {k} points to the wrong child"));
            }
            let true_w = self.info[x].leaves;
            if stored > true_w as u64 || stored < ceil_sqrt(true_w) {
                return bad(format!("node {v}: stored weight {stored} outside [sqrt {true_w}, {true_w}]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_model::byte_code;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn codes(s: &str) -> Vec<Code> {
        s.bytes().map(|b| (b - b'a' + 1) as Code).collect()
    }

    #[test]
    fn level_table() {
        assert_eq!(level_for(1), 0);
        assert_eq!(level_for(3), 1);
        assert_eq!(level_for(4), 2);
        assert_eq!(level_for(33), 4);
        let t: Vec<u64> = (0..4).map(split_threshold).collect();
        assert_eq!(t, vec![4, 8, 20, 66]);
        assert_eq!(ceil_sqrt(1), 1);
        assert_eq!(ceil_sqrt(10), 4);
        assert_eq!(ceil_sqrt(16), 4);
    }

    #[test]
    fn abc_abd_abe() {
        let mut d = DynTrieIndex::new(26).unwrap();
        for w in ["abc", "abd", "abe"] {
            d.insert(&codes(w)).unwrap();
            d.audit().unwrap();
        }
        assert_eq!(d.heavy_count(), 1);
        let r = d.search(&codes("ab")).unwrap();
        assert_eq!((r.outcome, r.count), (Outcome::MatchedAtNode, 3));
        assert_eq!(d.insert(&codes("abc")), Err(Error::DuplicateKey));
    }

    #[test]
    fn abc_abd_queries() {
        let mut d = DynTrieIndex::new(26).unwrap();
        d.insert(&codes("abc")).unwrap();
        d.insert(&codes("abd")).unwrap();
        assert_eq!(d.search(&codes("ab")).unwrap().count, 2);
        assert_eq!(d.search(&[]).unwrap().count, 2);
        let r = d.search(&codes("abe")).unwrap();
        assert_eq!((r.outcome, r.matched_len), (Outcome::NotFound, 2));
        assert_eq!(d.predecessor(&codes("abe")).unwrap().map(|i| d.string(i).to_vec()), Some(codes("abd")));
    }

    #[test]
    fn heavy_flip_sigma4() {
        let mut d = DynTrieIndex::new(4).unwrap();
        let mut i = 0;
        let a = loop {
            let s: Vec<Code> = std::iter::once(1).chain((0..4).map(|j| ((i >> (2 * j)) & 3) as Code + 1)).collect();
            d.insert(&s).unwrap();
            d.audit().unwrap();
            i += 1;
            let a = d.trie().child(ROOT, 1).unwrap();
            if d.leaves(a) >= d.threshold() {
                break a;
            }
        };
        assert!(d.is_heavy(a));
        assert!(i <= 16);
    }

    #[test]
    fn chain_promotions() {
        let mut d = DynTrieIndex::new(1 << 20).unwrap();
        for n in 1..200 {
            d.insert(&vec![7; n]).unwrap();
            d.audit().unwrap();
        }
        assert!(d.stats().promotions > 0);
        assert_eq!(d.search(&[7; 50]).unwrap().count, 150);
    }

    #[test]
    fn random_small() {
        let _ = byte_code(0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &sigma in &[2u32, 4, 26] {
            let mut d = DynTrieIndex::new(sigma).unwrap();
            let mut set = BTreeSet::new();
            for op in 0..1500 {
                let len = rng.gen_range(0..12);
                let s: Vec<Code> = (0..len).map(|_| rng.gen_range(1..=sigma)).collect();
                match d.insert(&s) {
                    Ok(_) => assert!(set.insert(s)),
                    Err(e) => {
                        assert_eq!(e, Error::DuplicateKey);
                        assert!(set.contains(&s));
                    }
                }
                if op % 50 == 0 {
                    d.audit().unwrap();
                }
                let len = rng.gen_range(0..8);
                let p: Vec<Code> = (0..len).map(|_| rng.gen_range(1..=sigma)).collect();
                let count = set.iter().filter(|s| s.starts_with(&p)).count();
                assert_eq!(d.search(&p).unwrap().count, count);
                let mut pt = p.clone();
                pt.push(0);
                let want = set
                    .iter()
                    .filter(|s| {
                        let mut st = (*s).clone();
                        st.push(0);
                        st <= pt
                    })
                    .next_back();
                assert_eq!(d.predecessor(&p).unwrap().map(|i| d.string(i).to_vec()).as_ref(), want);
            }
            d.audit().unwrap();
        }
    }
}
