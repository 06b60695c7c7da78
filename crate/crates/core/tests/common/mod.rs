//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use triekit::{Code, Outcome};

/// What a naive scan says about a prefix pattern over a sorted list of
/// sentinel-terminated strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveMatch {
    pub outcome: Outcome,
    pub interval: Option<(usize, usize)>,
    pub matched_len: usize,
}

pub fn terminated(s: &[Code]) -> Vec<Code> {
    let mut v = s.to_vec();
    v.push(0);
    v
}

pub fn lcp(a: &[Code], b: &[Code]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// `sorted` must be lexicographically sorted sentinel-terminated strings.
pub fn naive_prefix(sorted: &[Vec<Code>], p: &[Code]) -> NaiveMatch {
    let hits: Vec<usize> = (0..sorted.len()).filter(|&i| sorted[i].starts_with(p)).collect();
    if hits.is_empty() {
        let best = sorted.iter().map(|s| lcp(s, p)).max().unwrap_or(0);
        return NaiveMatch { outcome: Outcome::NotFound, interval: None, matched_len: best };
    }
    let mut next: Vec<Code> = hits.iter().map(|&i| sorted[i][p.len()]).collect();
    next.dedup();
    let outcome = if p.is_empty() || next.len() > 1 { Outcome::MatchedAtNode } else { Outcome::MatchedOnEdge };
    NaiveMatch { outcome, interval: Some((hits[0], *hits.last().unwrap())), matched_len: p.len() }
}

/// Rank of the largest sorted string `<= p + $`.
pub fn naive_pred(sorted: &[Vec<Code>], p: &[Code]) -> Option<usize> {
    let pt = terminated(p);
    (0..sorted.len()).rev().find(|&i| sorted[i] <= pt)
}

pub fn sorted_suffixes(text: &[Code]) -> Vec<Vec<Code>> {
    let t = terminated(text);
    let mut v: Vec<Vec<Code>> = (0..t.len()).map(|i| t[i..].to_vec()).collect();
    v.sort();
    v
}

pub fn random_text<R: Rng>(rng: &mut R, n: usize, sigma: u32) -> Vec<Code> {
    (0..n).map(|_| rng.gen_range(1..=sigma)).collect()
}

/// Present substrings, random strings and substrings with a flipped tail.
pub fn mixed_patterns<R: Rng>(rng: &mut R, text: &[Code], sigma: u32, count: usize) -> Vec<Vec<Code>> {
    let n = text.len();
    (0..count)
        .map(|i| match i % 3 {
            0 if n > 0 => {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(a..=n.min(a + 12));
                text[a..b].to_vec()
            }
            1 => {
                let len = rng.gen_range(0..6);
                random_text(rng, len, sigma)
            }
            _ if n > 0 => {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(a..=n.min(a + 12));
                let mut p = text[a..b].to_vec();
                p.push(rng.gen_range(1..=sigma));
                p
            }
            _ => Vec::new(),
        })
        .collect()
}

/// Naive lowest-marked-ancestor by walking parent links.
pub fn walk_up(parent: &[Option<usize>], marked: &[bool], mut v: usize) -> usize {
    loop {
        if marked[v] {
            return v;
        }
        v = parent[v].expect("root is always marked");
    }
}
