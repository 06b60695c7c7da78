//! Deterministic dictionaries and integer predecessor structures.
//!
//! * [`DetDictionary`]: two-level displacement table, two cell probes per lookup.
//! * [`StaticPredecessor`]: sampled keys under an x-fast trie whose levels are
//!   [`DetDictionary`]s, followed by a binary search inside one block.
//! * [`LayeredStaticPredecessor`]: one indirection step over groups of about √k keys.
//! * [`DynamicPredecessor`]: weight-one exponential search tree.

use crate::counters::ProbeCounters;
use crate::error::{Error, Result};
use crate::wexp_tree::{ElementHandle, WexpTree};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Static dictionary with deterministic construction and two-cell lookups
/// (one displacement cell, one slot cell).
#[derive(Debug, Clone)]
pub struct DetDictionary<V> {
    seed: u64,
    disp: Vec<u32>,
    slots: Vec<Option<(u64, V)>>,
    len: usize,
}

impl<V> Default for DetDictionary<V> {
    fn default() -> Self {
        Self { seed: 0, disp: Vec::new(), slots: Vec::new(), len: 0 }
    }
}

impl<V> DetDictionary<V> {
    pub fn build(pairs: Vec<(u64, V)>) -> Result<Self> {
        let k = pairs.len();
        if k == 0 {
            return Ok(Self::default());
        }
        let mut keys: Vec<u64> = pairs.iter().map(|p| p.0).collect();
        keys.sort_unstable();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DuplicateKey);
        }
        let mut m = 2 * k;
        let mut attempt = 0u64;
        loop {
            let seed = mix64(attempt ^ (m as u64).rotate_left(32));
            if let Some((disp, placement)) = Self::place(&pairs, seed, m) {
                let mut slots: Vec<Option<(u64, V)>> = (0..m).map(|_| None).collect();
                for (pair, slot) in pairs.into_iter().zip(placement) {
                    slots[slot] = Some(pair);
                }
                return Ok(Self { seed, disp, slots, len: k });
            }
            attempt += 1;
            if attempt % 4 == 0 {
                m *= 2;
            }
        }
    }

    fn bucket_count(k: usize) -> usize {
        (k / 2).max(1)
    }

    #[inline]
    fn bucket(seed: u64, key: u64, nb: usize) -> usize {
        (mix64(key ^ seed) % nb as u64) as usize
    }

    #[inline]
    fn slot(seed: u64, key: u64, d: u32, m: usize) -> usize {
        let h = mix64(key.wrapping_add(seed.rotate_left(17)));
        (mix64(h ^ (d as u64).wrapping_mul(GOLDEN)) % m as u64) as usize
    }

    /// Displacement search, largest buckets first. Returns per-pair slots.
    fn place(pairs: &[(u64, V)], seed: u64, m: usize) -> Option<(Vec<u32>, Vec<usize>)> {
        let nb = Self::bucket_count(pairs.len());
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nb];
        for (i, p) in pairs.iter().enumerate() {
            buckets[Self::bucket(seed, p.0, nb)].push(i);
        }
        let mut order: Vec<usize> = (0..nb).collect();
        order.sort_by_key(|&b| (std::cmp::Reverse(buckets[b].len()), b));
        let mut taken = vec![false; m];
        let mut disp = vec![0u32; nb];
        let mut placement = vec![0usize; pairs.len()];
        let cap = (4 * m).max(64) as u32;
        let mut chosen = Vec::new();
        for b in order {
            if buckets[b].is_empty() {
                continue;
            }
            let mut ok = false;
            for d in 0..cap {
                chosen.clear();
                for &i in &buckets[b] {
                    let s = Self::slot(seed, pairs[i].0, d, m);
                    if taken[s] || chosen.contains(&s) {
                        break;
                    }
                    chosen.push(s);
                }
                if chosen.len() == buckets[b].len() {
                    for (&i, &s) in buckets[b].iter().zip(&chosen) {
                        taken[s] = true;
                        placement[i] = s;
                    }
                    disp[b] = d;
                    ok = true;
                    break;
                }
            }
            if !ok {
                return None;
            }
        }
        Some((disp, placement))
    }

    /// Lookup plus the number of table cells read.
    pub fn lookup_traced(&self, key: u64) -> (Option<&V>, u32) {
        if self.len == 0 {
            return (None, 0);
        }
        let b = Self::bucket(self.seed, key, self.disp.len());
        let s = Self::slot(self.seed, key, self.disp[b], self.slots.len());
        match &self.slots[s] {
            Some((k, v)) if *k == key => (Some(v), 2),
            _ => (None, 2),
        }
    }

    pub fn get(&self, key: u64) -> Option<&V> {
        self.lookup_traced(key).0
    }

    /// Lookup charged as one dictionary probe.
    pub fn get_counted(&self, key: u64, c: &mut ProbeCounters) -> Option<&V> {
        c.dict_probes += 1;
        self.get(key)
    }

    pub fn get_mut(&mut self, key: u64) -> Option<&mut V> {
        if self.len == 0 {
            return None;
        }
        let b = Self::bucket(self.seed, key, self.disp.len());
        let s = Self::slot(self.seed, key, self.disp[b], self.slots.len());
        match &mut self.slots[s] {
            Some((k, v)) if *k == key => Some(v),
            _ => None,
        }
    }

    pub fn set_value(&mut self, key: u64, value: V) -> Result<()> {
        let slot = self.get_mut(key).ok_or_else(|| Error::InvalidInput(format!("key {key} not in dictionary")))?;
        *slot = value;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Stored pairs in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &V)> {
        self.slots.iter().flatten().map(|(k, v)| (*k, v))
    }

    pub fn keys(&self) -> Vec<u64> {
        let mut k: Vec<u64> = self.iter().map(|p| p.0).collect();
        k.sort_unstable();
        k
    }

    pub fn table_cells(&self) -> usize {
        self.disp.len() + self.slots.len()
    }
}

fn bits_for(u: u64) -> u32 {
    if u <= 2 {
        1
    } else {
        64 - (u - 1).leading_zeros()
    }
}

fn check_sorted(keys: &[u64], u: u64) -> Result<()> {
    if keys.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("predecessor keys must be strictly increasing".into()));
    }
    if let Some(&last) = keys.last() {
        if last >= u {
            return Err(Error::InvalidInput(format!("key {last} outside universe {u}")));
        }
    }
    Ok(())
}

/// Sampled static predecessor: every `rate`-th key goes into an x-fast trie
/// (one [`DetDictionary`] per prefix length mapping a prefix to the first and
/// last sample below it); the rest is a binary search inside one block.
#[derive(Debug, Clone)]
pub struct StaticPredecessor {
    keys: Vec<u64>,
    u: u64,
    bits: u32,
    rate: usize,
    levels: Vec<DetDictionary<(u32, u32)>>,
}

impl StaticPredecessor {
    /// Default sampling rate: every ⌈lg u⌉-th key.
    pub fn build(keys: Vec<u64>, u: u64) -> Result<Self> {
        let rate = bits_for(u) as usize;
        Self::with_rate(keys, u, rate)
    }

    pub fn with_rate(keys: Vec<u64>, u: u64, rate: usize) -> Result<Self> {
        check_sorted(&keys, u)?;
        let bits = bits_for(u);
        let rate = rate.max(1);
        let samples: Vec<u64> = keys.iter().step_by(rate).copied().collect();
        let mut levels = Vec::with_capacity(bits as usize + 1);
        if !samples.is_empty() {
            for l in 0..=bits {
                let mut pairs: Vec<(u64, (u32, u32))> = Vec::new();
                for (j, &key) in samples.iter().enumerate() {
                    let p = prefix(key, l, bits);
                    match pairs.last_mut() {
                        Some((q, range)) if *q == p => range.1 = j as u32,
                        _ => pairs.push((p, (j as u32, j as u32))),
                    }
                }
                levels.push(DetDictionary::build(pairs)?);
            }
        }
        Ok(Self { keys, u, bits, rate, levels })
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn universe(&self) -> u64 {
        self.u
    }

    pub fn rate(&self) -> usize {
        self.rate
    }

    pub fn pred(&self, x: u64) -> Option<u64> {
        self.pred_index(x).map(|i| self.keys[i])
    }

    pub fn pred_index(&self, x: u64) -> Option<usize> {
        let mut probes = 0;
        self.pred_index_probed(x, &mut probes)
    }

    /// Counts one static predecessor query and its elementary probes.
    pub fn pred_index_counted(&self, x: u64, c: &mut ProbeCounters) -> Option<usize> {
        let mut probes = 0;
        let r = self.pred_index_probed(x, &mut probes);
        c.static_pred_queries += 1;
        c.static_pred_probes += probes;
        r
    }

    pub fn pred_index_probed(&self, x: u64, probes: &mut u64) -> Option<usize> {
        let first = *self.keys.first()?;
        if x < first {
            return None;
        }
        let x = x.min(self.u - 1);
        // Longest prefix of x present among the samples.
        let (mut lo, mut hi) = (0u32, self.bits + 1);
        let mut range = *self.levels[0].get(0).expect("level 0 holds the empty prefix");
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            *probes += 1;
            match self.levels[mid as usize].get(prefix(x, mid, self.bits)) {
                Some(&r) => {
                    lo = mid;
                    range = r;
                }
                None => hi = mid,
            }
        }
        let sample = if lo == self.bits {
            range.0 as usize
        } else if (x >> (self.bits - lo - 1)) & 1 == 1 {
            range.1 as usize
        } else {
            // Every sample under this prefix exceeds x; samples[0] = keys[0] <= x.
            range.0 as usize - 1
        };
        let start = sample * self.rate;
        let end = (start + self.rate).min(self.keys.len());
        let block = &self.keys[start..end];
        let (mut a, mut b) = (0usize, block.len());
        while b - a > 1 {
            let mid = (a + b) / 2;
            *probes += 1;
            if block[mid] <= x {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some(start + a)
    }
}

#[inline]
fn prefix(x: u64, len: u32, bits: u32) -> u64 {
    if len == 0 {
        0
    } else {
        x >> (bits - len)
    }
}

/// Two-step predecessor: a top structure over every g-th key (g ≈ √k) selects a
/// group, a per-group structure finishes.
#[derive(Debug, Clone)]
pub struct LayeredStaticPredecessor {
    group: usize,
    top: StaticPredecessor,
    groups: Vec<StaticPredecessor>,
    len: usize,
}

impl LayeredStaticPredecessor {
    pub fn build(keys: Vec<u64>, u: u64) -> Result<Self> {
        check_sorted(&keys, u)?;
        let k = keys.len();
        let group = ((k as f64).sqrt().ceil() as usize).max(1);
        let top = StaticPredecessor::build(keys.iter().step_by(group).copied().collect(), u)?;
        let groups = keys
            .chunks(group)
            .map(|c| StaticPredecessor::build(c.to_vec(), u))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { group, top, groups, len: k })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn key(&self, i: usize) -> u64 {
        self.groups[i / self.group].keys()[i % self.group]
    }

    pub fn pred(&self, x: u64) -> Option<u64> {
        self.pred_index(x).map(|i| self.key(i))
    }

    pub fn pred_index(&self, x: u64) -> Option<usize> {
        let mut probes = 0;
        self.pred_index_probed(x, &mut probes)
    }

    pub fn pred_index_probed(&self, x: u64, probes: &mut u64) -> Option<usize> {
        let mut g = self.top.pred_index_probed(x, probes)?;
        loop {
            match self.groups[g].pred_index_probed(x, probes) {
                Some(i) => return Some(g * self.group + i),
                // Boundary correction: fall back to the previous group's maximum.
                None if g > 0 => {
                    g -= 1;
                    if !self.groups[g].is_empty() {
                        return Some(g * self.group + self.groups[g].len() - 1);
                    }
                }
                None => return None,
            }
        }
    }
}

/// Splitter-set predecessor used inside exponential search trees.
#[derive(Debug, Clone)]
pub enum SplitterIndex {
    Plain(StaticPredecessor),
    Layered(LayeredStaticPredecessor),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitterKind {
    #[default]
    Plain,
    Layered,
}

impl SplitterIndex {
    pub fn build(kind: SplitterKind, keys: Vec<u64>, u: u64) -> Result<Self> {
        Ok(match kind {
            SplitterKind::Plain => Self::Plain(StaticPredecessor::build(keys, u)?),
            SplitterKind::Layered => Self::Layered(LayeredStaticPredecessor::build(keys, u)?),
        })
    }

    pub fn pred_index_counted(&self, x: u64, c: &mut ProbeCounters) -> Option<usize> {
        let mut probes = 0;
        let r = match self {
            Self::Plain(p) => p.pred_index_probed(x, &mut probes),
            Self::Layered(p) => p.pred_index_probed(x, &mut probes),
        };
        c.static_pred_queries += 1;
        c.static_pred_probes += probes;
        r
    }
}

/// Insert-only predecessor structure over `[0, u)` with attached values.
#[derive(Debug, Clone)]
pub struct DynamicPredecessor<V> {
    tree: WexpTree<V>,
}

impl<V> DynamicPredecessor<V> {
    pub fn new(u: u64) -> Self {
        Self { tree: WexpTree::new(u) }
    }

    /// Inserts `key`; an existing key keeps its value (idempotent).
    pub fn insert(&mut self, key: u64, value: V) -> Result<ElementHandle> {
        if let Some(h) = self.tree.find(key) {
            return Ok(h);
        }
        self.tree.insert(key, value)
    }

    pub fn pred(&self, x: u64) -> Option<(u64, &V)> {
        let mut c = ProbeCounters::default();
        self.pred_counted(x, &mut c)
    }

    pub fn pred_counted(&self, x: u64, c: &mut ProbeCounters) -> Option<(u64, &V)> {
        let h = self.tree.pred_counted(x, c)?;
        Some((self.tree.key(h), self.tree.value(h)))
    }

    pub fn get(&self, key: u64) -> Option<&V> {
        self.tree.find(key).map(|h| self.tree.value(h))
    }

    pub fn set_value(&mut self, key: u64, value: V) -> Result<()> {
        let h = self.tree.find(key).ok_or(Error::InvalidHandle)?;
        *self.tree.value_mut(h) = value;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// Key/value pairs in key order.
    pub fn entries(&self) -> Vec<(u64, &V)> {
        self.tree.iter().map(|h| (self.tree.key(h), self.tree.value(h))).collect()
    }

    pub fn tree(&self) -> &WexpTree<V> {
        &self.tree
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn scan_pred(keys: &[u64], x: u64) -> Option<u64> {
        keys.iter().copied().filter(|&k| k <= x).max()
    }

    #[test]
    fn dict_small() {
        let d = DetDictionary::build(vec![(0, 10), (5, 11), (9, 12)]).unwrap();
        assert_eq!(d.get(5), Some(&11));
        assert_eq!(d.get(6), None);
        let e: DetDictionary<u32> = DetDictionary::build(vec![]).unwrap();
        assert_eq!(e.get(0), None);
        assert_eq!(DetDictionary::build(vec![(1, 0), (1, 1)]).unwrap_err(), Error::DuplicateKey);
    }

    #[test]
    fn dict_random_vs_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let set: BTreeSet<u64> = (0..1000).map(|_| rng.gen()).collect();
        let pairs: Vec<(u64, usize)> = set.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let d = DetDictionary::build(pairs.clone()).unwrap();
        for &(k, v) in &pairs {
            let (got, cells) = d.lookup_traced(k);
            assert_eq!(got, Some(&v));
            assert!(cells <= 2);
        }
        for _ in 0..1000 {
            let x: u64 = rng.gen();
            let oracle = pairs.iter().find(|p| p.0 == x).map(|p| p.1);
            assert_eq!(d.get(x).copied(), oracle);
        }
    }

    #[test]
    fn static_examples() {
        let p = StaticPredecessor::build(vec![2, 5, 9], 16).unwrap();
        assert_eq!(p.pred(8), Some(5));
        assert_eq!(p.pred(2), Some(2));
        assert_eq!(p.pred(1), None);
        assert!(matches!(StaticPredecessor::build(vec![5, 2], 16), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn layered_examples() {
        let p = LayeredStaticPredecessor::build((0..100).collect(), 100).unwrap();
        assert_eq!(p.pred(57), Some(57));
        let sq: Vec<u64> = (0..32).map(|i| i * i).collect();
        let p = LayeredStaticPredecessor::build(sq.clone(), 2048).unwrap();
        assert_eq!(p.pred(50), Some(49));
        assert_eq!(p.pred(1024), Some(961));
    }

    #[test]
    fn exhaustive_small_universe() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &u in &[1u64, 2, 3, 64, 4096] {
            for rate in [1usize, 3, 12] {
                let keys: Vec<u64> = (0..u).filter(|_| rng.gen_bool(0.3)).collect();
                let sp = StaticPredecessor::with_rate(keys.clone(), u, rate).unwrap();
                let lp = LayeredStaticPredecessor::build(keys.clone(), u).unwrap();
                for x in 0..u + 2 {
                    let o = scan_pred(&keys, x);
                    assert_eq!(sp.pred(x), o, "u={u} rate={rate} x={x}");
                    assert_eq!(lp.pred(x), o, "u={u} x={x}");
                }
            }
        }
    }

    #[test]
    fn large_universe_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set: BTreeSet<u64> = (0..5000).map(|_| rng.gen::<u64>() >> 1).collect();
        let keys: Vec<u64> = set.into_iter().collect();
        let sp = StaticPredecessor::build(keys.clone(), u64::MAX).unwrap();
        let lp = LayeredStaticPredecessor::build(keys.clone(), u64::MAX).unwrap();
        for _ in 0..3000 {
            let x = rng.gen::<u64>() >> 1;
            let i = keys.partition_point(|&k| k <= x);
            let o = i.checked_sub(1).map(|i| keys[i]);
            assert_eq!(sp.pred(x), o);
            assert_eq!(lp.pred(x), o);
        }
    }

    #[test]
    fn dynamic_examples() {
        let mut d = DynamicPredecessor::new(16);
        assert_eq!(d.pred(3), None);
        for k in [7, 3, 11] {
            d.insert(k, ()).unwrap();
        }
        d.insert(7, ()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.pred(10).map(|p| p.0), Some(7));
    }

    #[test]
    fn dynamic_random_vs_btree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = 1 << 20;
        let mut d = DynamicPredecessor::new(u);
        let mut oracle = BTreeSet::new();
        for _ in 0..100_000 {
            let x = rng.gen_range(0..u);
            if rng.gen_bool(0.5) {
                d.insert(x, x).unwrap();
                oracle.insert(x);
            } else {
                let o = oracle.range(..=x).next_back().copied();
                assert_eq!(d.pred(x).map(|p| p.0), o);
            }
        }
        d.tree().audit().unwrap();
    }
}
