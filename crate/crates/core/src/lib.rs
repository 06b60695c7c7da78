//! Deterministic search structures for compacted tries and suffix trees.
//!
//! The crate is organised bottom-up:
//!
//! * [`text_model`] holds coded texts, alphabets and the compacted-trie arena.
//! * [`suffix_array`] builds suffix arrays, LCP arrays and suffix trees.
//! * [`predecessor_kit`] provides a constant-probe static dictionary and the
//!   static/dynamic integer predecessor structures used everywhere else.
//! * [`wexp_tree`] implements weighted exponential search trees.
//! * [`static_index`] is the static trie index (heavy/light decomposition with
//!   dictionaries and predecessor structures) and the suffix-tray baseline.
//! * [`dynamic_index`] is the amortized dynamic trie index.
//! * [`suffix_oracle`] maintains a suffix tree under prepending letters and
//!   offers a fringe marked ancestor structure.
//! * [`index_file`], [`report`] and [`bench`] back the `triekit` command-line tool.

pub mod bench;
pub mod counters;
pub mod dynamic_index;
pub mod error;
pub mod index_file;
pub mod predecessor_kit;
pub mod report;
pub mod static_index;
pub mod suffix_array;
pub mod suffix_oracle;
pub mod text_model;
pub mod wexp_tree;

pub use counters::ProbeCounters;
pub use error::{Error, Result};
pub use text_model::{Alphabet, Code, CompactedTrie, MatchResult, NodeId, Outcome, Text, SENTINEL};

/// `⌊lg lg max(x, 4)⌋`-style helper used by thresholds: returns `lg lg max(x, 4)` as a float.
pub fn lg_lg(x: u64) -> f64 {
    (x.max(4) as f64).log2().log2()
}
