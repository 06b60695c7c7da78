//! Query reports in TSV and JSON form.
//!
//! TSV columns are fixed: `pattern outcome l r matched_len probes`, plus one
//! extra column for the `count` and `enumerate` modes. Missing interval ends
//! print as `-`.

use serde::Serialize;

use crate::counters::ProbeCounters;
use crate::error::Result;
use crate::static_index::{Engine, StaticTrieIndex};
use crate::text_model::{Code, LeafKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryRow {
    pub pattern: String,
    pub mode: &'static str,
    pub outcome: &'static str,
    pub l: Option<usize>,
    pub r: Option<usize>,
    pub matched_len: usize,
    pub counters: ProbeCounters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub n: u64,
    pub sigma: u32,
    pub s: usize,
    pub heavy_nodes: usize,
    pub engine: &'static str,
    pub kind: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryReport {
    pub summary: RunSummary,
    /// Header name of the extra column, if the mode has one.
    #[serde(skip)]
    pub extra_column: Option<&'static str>,
    pub rows: Vec<QueryRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

fn dash(x: Option<usize>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl QueryReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("pattern\toutcome\tl\tr\tmatched_len\tprobes");
        if let Some(c) = self.extra_column {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}",
                row.pattern,
                row.outcome,
                dash(row.l),
                dash(row.r),
                row.matched_len,
                row.counters.to_kv()
            ));
            if self.extra_column.is_some() {
                out.push('\t');
                out.push_str(row.extra.as_deref().unwrap_or("-"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Tsv => self.to_tsv(),
            ReportFormat::Json => self.to_json(),
        }
    }
}

/// Printable form of a coded pattern: bytes for byte alphabets, decimal codes otherwise.
pub fn display_pattern(p: &[Code], sigma: u32) -> String {
    if sigma <= 256 {
        let bytes: Vec<u8> = p.iter().map(|&c| (c - 1) as u8).collect();
        String::from_utf8_lossy(&bytes).replace(['\t', '\n', '\r'], " ")
    } else {
        p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// Parses one pattern line: raw bytes for byte alphabets, whitespace-separated
/// decimal codes otherwise. Codes are not range-checked here.
pub fn parse_pattern(line: &[u8], sigma: u32) -> std::result::Result<Vec<Code>, String> {
    if sigma <= 256 {
        return Ok(line.iter().map(|&b| b as Code + 1).collect());
    }
    let text = std::str::from_utf8(line).map_err(|_| "pattern line is not UTF-8".to_string())?;
    text.split_whitespace().map(|t| t.parse::<Code>().map_err(|_| format!("bad code {t:?}"))).collect()
}

/// Splits file contents into lines without their `\n` / `\r\n` terminators.
pub fn split_lines(buf: &[u8]) -> Vec<&[u8]> {
    if buf.is_empty() {
        return Vec::new();
    }
    let body = buf.strip_suffix(b"\n").unwrap_or(buf);
    body.split(|&b| b == b'\n').map(|l| l.strip_suffix(b"\r").unwrap_or(l)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    Prefix,
    Predecessor,
    Count,
    Enumerate,
}

impl QueryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryMode::Prefix => "prefix",
            QueryMode::Predecessor => "predecessor",
            QueryMode::Count => "count",
            QueryMode::Enumerate => "enumerate",
        }
    }
}

pub fn summarize(index: &StaticTrieIndex) -> RunSummary {
    let trie = index.trie();
    let (n, kind) = match trie.kind() {
        LeafKind::Suffixes => (trie.sources()[0].len() as u64 - 1, "suffix"),
        LeafKind::Strings => (trie.sources().len() as u64, "strings"),
    };
    RunSummary {
        n,
        sigma: index.sigma(),
        s: index.threshold(),
        heavy_nodes: index.heavy_count(),
        engine: match index.engine() {
            Engine::Static => "static",
            Engine::Tray => "tray",
        },
        kind,
    }
}

/// Runs every pattern through `index` with fresh counters per row.
///
/// In predecessor mode `l = r` is the rank of the predecessor, the outcome is
/// `FOUND` or `NONE`, and `matched_len` is the common prefix length of the
/// pattern and the predecessor string.
pub fn query_report(index: &StaticTrieIndex, patterns: &[Vec<Code>], mode: QueryMode) -> Result<QueryReport> {
    let mut rows = Vec::with_capacity(patterns.len());
    for p in patterns {
        let mut k = ProbeCounters::default();
        let pattern = display_pattern(p, index.sigma());
        let row = if mode == QueryMode::Predecessor {
            let rank = index.predecessor_query_counted(p, &mut k)?;
            let matched_len = rank.map_or(0, |r| {
                let s = index.trie().leaf_str(index.leaf_order()[r]);
                s.iter().zip(p).take_while(|(a, b)| a == b).count()
            });
            QueryRow {
                pattern,
                mode: mode.as_str(),
                outcome: if rank.is_some() { "FOUND" } else { "NONE" },
                l: rank,
                r: rank,
                matched_len,
                counters: k,
                extra: None,
            }
        } else {
            let m = index.prefix_query_counted(p, &mut k)?;
            let extra = match (mode, m.interval) {
                (QueryMode::Count, iv) => Some(iv.map_or(0, |(l, r)| r - l + 1).to_string()),
                (QueryMode::Enumerate, Some(iv)) => {
                    let mut ids = index.enumerate(iv)?;
                    ids.sort_unstable();
                    Some(ids.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                }
                _ => None,
            };
            QueryRow {
                pattern,
                mode: mode.as_str(),
                outcome: m.outcome.as_str(),
                l: m.interval.map(|iv| iv.0),
                r: m.interval.map(|iv| iv.1),
                matched_len: m.matched_len,
                counters: k,
                extra,
            }
        };
        rows.push(row);
    }
    let extra_column = match mode {
        QueryMode::Count => Some("count"),
        QueryMode::Enumerate => Some("leaves"),
        _ => None,
    };
    Ok(QueryReport { summary: summarize(index), extra_column, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_layout() {
        let rep = QueryReport {
            summary: RunSummary { n: 6, sigma: 256, s: 9, heavy_nodes: 1, engine: "static", kind: "suffix" },
            extra_column: None,
            rows: vec![QueryRow {
                pattern: "nax".into(),
                mode: "prefix",
                outcome: "NOT_FOUND",
                l: None,
                r: None,
                matched_len: 2,
                counters: ProbeCounters::default(),
                extra: None,
            }],
        };
        let tsv = rep.to_tsv();
        let mut lines = tsv.lines();
        assert_eq!(lines.next(), Some("pattern\toutcome\tl\tr\tmatched_len\tprobes"));
        assert!(lines.next().unwrap().starts_with("nax\tNOT_FOUND\t-\t-\t2\tdict=0;"));
        let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(json["rows"][0]["matched_len"], 2);
        assert_eq!(json["summary"]["s"], 9);
    }

    #[test]
    fn banana_rows() {
        let t = crate::Text::from_bytes(b"banana", 256).unwrap();
        let idx = StaticTrieIndex::from_text(&t, Engine::Static).unwrap();
        let pats = vec![parse_pattern(b"ana", 256).unwrap(), parse_pattern(b"nax", 256).unwrap()];
        let rep = query_report(&idx, &pats, QueryMode::Enumerate).unwrap();
        let tsv = rep.to_tsv();
        let rows: Vec<Vec<&str>> = tsv.lines().skip(1).map(|l| l.split('\t').collect()).collect();
        assert_eq!(&rows[0][..5], &["ana", "MATCHED_AT_NODE", "2", "3", "3"]);
        assert_eq!(rows[0][6], "1,3");
        assert_eq!(&rows[1][..5], &["nax", "NOT_FOUND", "-", "-", "2"]);
        let empty = query_report(&idx, &[], QueryMode::Prefix).unwrap();
        assert_eq!(empty.to_tsv().lines().count(), 1);
    }

    #[test]
    fn pattern_lines() {
        assert_eq!(split_lines(b""), Vec::<&[u8]>::new());
        assert_eq!(split_lines(b"ab\r\ncd\n"), vec![&b"ab"[..], &b"cd"[..]]);
        assert_eq!(split_lines(b"\n"), vec![&b""[..]]);
        assert_eq!(parse_pattern(b"ab", 256).unwrap(), vec![98, 99]);
        assert_eq!(parse_pattern(b" 7 300 ", 65536).unwrap(), vec![7, 300]);
        assert!(parse_pattern(b"x", 65536).is_err());
        assert_eq!(display_pattern(&[98, 99], 256), "ab");
        assert_eq!(display_pattern(&[7, 300], 65536), "7 300");
    }
}
