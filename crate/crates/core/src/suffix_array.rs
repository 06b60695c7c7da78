//! Suffix arrays (prefix doubling with counting sorts), Kasai LCP and the
//! LCP-stack suffix tree construction.

use crate::text_model::{Code, CompactedTrie, Text, ROOT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixArrayIndex {
    /// Suffix start positions of `text + $` in lexicographic order.
    pub sa: Vec<usize>,
    /// `lcp[i]` is the common prefix length of suffixes `sa[i-1]` and `sa[i]`; `lcp[0] = 0`.
    pub lcp: Vec<usize>,
}

pub fn build_suffix_array(text: &Text) -> SuffixArrayIndex {
    let s = text.terminated();
    let sa = suffix_array_of(&s);
    let lcp = lcp_array(&s, &sa);
    SuffixArrayIndex { sa, lcp }
}

/// Suffix array of a sequence whose last symbol is a unique minimum.
pub fn suffix_array_of(s: &[Code]) -> Vec<usize> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sa: Vec<usize> = (0..n).collect();
    sa.sort_by_key(|&i| s[i]);
    let mut rank = vec![0usize; n];
    for i in 1..n {
        rank[sa[i]] = rank[sa[i - 1]] + usize::from(s[sa[i]] != s[sa[i - 1]]);
    }
    let mut classes = rank[sa[n - 1]] + 1;
    let mut tmp = vec![0usize; n];
    let mut next = vec![0usize; n];
    let mut count = vec![0usize; n + 1];
    let mut k = 1;
    while classes < n {
        // Order by second key: suffixes shorter than k come first (their ranks are already unique).
        let mut t = 0;
        for i in n - k.min(n)..n {
            tmp[t] = i;
            t += 1;
        }
        for &p in &sa {
            if p >= k {
                tmp[t] = p - k;
                t += 1;
            }
        }
        // Stable counting sort by first key.
        count[..=classes].iter_mut().for_each(|c| *c = 0);
        for &p in &tmp {
            count[rank[p] + 1] += 1;
        }
        for c in 1..=classes {
            count[c] += count[c - 1];
        }
        for &p in &tmp {
            sa[count[rank[p]]] = p;
            count[rank[p]] += 1;
        }
        let key = |i: usize| (rank[i], if i + k < n { rank[i + k] as isize } else { -1 });
        next[sa[0]] = 0;
        for i in 1..n {
            next[sa[i]] = next[sa[i - 1]] + usize::from(key(sa[i]) != key(sa[i - 1]));
        }
        std::mem::swap(&mut rank, &mut next);
        classes = rank[sa[n - 1]] + 1;
        k *= 2;
    }
    sa
}

/// Kasai et al. rank scan.
pub fn lcp_array(s: &[Code], sa: &[usize]) -> Vec<usize> {
    let n = sa.len();
    let mut rank = vec![0usize; n];
    for (i, &p) in sa.iter().enumerate() {
        rank[p] = i;
    }
    let mut lcp = vec![0usize; n];
    let mut h = 0usize;
    for p in 0..n {
        if rank[p] == 0 {
            h = 0;
            continue;
        }
        let q = sa[rank[p] - 1];
        while p + h < n && q + h < n && s[p + h] == s[q + h] {
            h += 1;
        }
        lcp[rank[p]] = h;
        h = h.saturating_sub(1);
    }
    lcp
}

/// Builds the suffix tree by inserting suffixes in lexicographic order along the
/// rightmost path. Leaf ids are suffix start positions; node intervals are SA ranges.
pub fn build_suffix_tree(index: &SuffixArrayIndex, text: &Text) -> CompactedTrie {
    build_suffix_tree_from(text.terminated(), &index.sa, &index.lcp)
}

pub fn build_suffix_tree_from(terminated: Vec<Code>, sa: &[usize], lcp: &[usize]) -> CompactedTrie {
    let mut trie = CompactedTrie::new_suffixes(terminated);
    let mut stack = vec![ROOT];
    for (i, &p) in sa.iter().enumerate() {
        let l = if i == 0 { 0 } else { lcp[i] };
        let mut last = None;
        while trie.node(*stack.last().unwrap()).depth > l {
            last = stack.pop();
        }
        let top = *stack.last().unwrap();
        let top_depth = trie.node(top).depth;
        if top_depth < l {
            let child = last.expect("deeper node popped");
            let mid = trie.split_edge(child, l - top_depth);
            stack.push(mid);
        }
        let parent = *stack.last().unwrap();
        let start = p + trie.node(parent).depth;
        let leaf = trie.add_leaf(parent, 0, start as u32, p);
        stack.push(leaf);
    }
    trie.assign_intervals();
    trie
}

/// Brute-force oracle: sort all suffixes directly.
pub fn naive_suffix_array(s: &[Code]) -> Vec<usize> {
    let mut sa: Vec<usize> = (0..s.len()).collect();
    sa.sort_by(|&a, &b| s[a..].cmp(&s[b..]));
    sa
}
