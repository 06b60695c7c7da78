//! Binary index files.
//!
//! Layout: a fixed header (magic, format version, n, sigma, heavy threshold,
//! engine tag, mode tag, section count) followed by sections of the form
//! `kind: u32, byte length: u64, payload`. All integers are little-endian.
//! Only primary payloads are stored (text, suffix and LCP arrays, or the
//! string set); tries, dictionaries and predecessor structures are rebuilt
//! on load.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::static_index::{Engine, StaticTrieIndex};
use crate::suffix_array::{build_suffix_tree_from, lcp_array};
use crate::text_model::{check_codes, Code, LeafKind, SENTINEL};

pub const MAGIC: [u8; 8] = *b"TRIEKIT\0";
pub const FORMAT_VERSION: u32 = 1;

const MODE_STRINGS: u32 = 0;
const MODE_SUFFIX: u32 = 1;

const SEC_TEXT: u32 = 1;
const SEC_SA: u32 = 2;
const SEC_LCP: u32 = 3;
const SEC_STRINGS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    /// Text length for suffix indexes, string count otherwise.
    pub n: u64,
    pub sigma: u32,
    pub threshold: u64,
    pub engine: Engine,
    pub kind: LeafKind,
    pub sections: u32,
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("length does not fit in memory".into()))
    }
}

fn put_u32s(out: &mut Vec<u8>, v: impl IntoIterator<Item = u32>) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_u64s(out: &mut Vec<u8>, v: impl IntoIterator<Item = u64>) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn section(out: &mut Vec<u8>, kind: u32, payload: &[u8]) {
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
}

/// Serializes a static index. Output is a pure function of the index.
pub fn to_bytes(index: &StaticTrieIndex) -> Vec<u8> {
    let trie = index.trie();
    let (mode, n, sections) = match trie.kind() {
        LeafKind::Suffixes => {
            let t = &trie.sources()[0];
            let text = &t[..t.len() - 1];
            let mut sec_text = Vec::new();
            put_u32s(&mut sec_text, text.iter().copied());
            let mut sec_sa = Vec::new();
            put_u64s(&mut sec_sa, index.leaf_order().iter().map(|&p| p as u64));
            let mut sec_lcp = Vec::new();
            put_u64s(&mut sec_lcp, lcp_array(t, index.leaf_order()).into_iter().map(|x| x as u64));
            (MODE_SUFFIX, text.len() as u64, vec![(SEC_TEXT, sec_text), (SEC_SA, sec_sa), (SEC_LCP, sec_lcp)])
        }
        LeafKind::Strings => {
            let mut sec = Vec::new();
            put_u64s(&mut sec, [trie.sources().len() as u64]);
            for s in trie.sources() {
                let body = &s[..s.len() - 1];
                put_u64s(&mut sec, [body.len() as u64]);
                put_u32s(&mut sec, body.iter().copied());
            }
            (MODE_STRINGS, trie.sources().len() as u64, vec![(SEC_STRINGS, sec)])
        }
    };
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    put_u32s(&mut out, [FORMAT_VERSION]);
    put_u64s(&mut out, [n]);
    put_u32s(&mut out, [index.sigma()]);
    put_u64s(&mut out, [index.threshold() as u64]);
    put_u32s(&mut out, [index.engine().tag(), mode, sections.len() as u32]);
    for (kind, payload) in &sections {
        section(&mut out, *kind, payload);
    }
    out
}

pub fn read_header(buf: &[u8]) -> Result<Header> {
    header(&mut Cursor { buf, pos: 0 })
}

fn header(c: &mut Cursor) -> Result<Header> {
    if c.take(8)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let n = c.u64()?;
    let sigma = c.u32()?;
    let threshold = c.u64()?;
    let engine = c.u32()?;
    let engine = Engine::from_tag(engine).ok_or_else(|| Error::Format(format!("unknown engine tag {engine}")))?;
    let kind = match c.u32()? {
        MODE_STRINGS => LeafKind::Strings,
        MODE_SUFFIX => LeafKind::Suffixes,
        m => return Err(Error::Format(format!("unknown mode tag {m}"))),
    };
    let sections = c.u32()?;
    Ok(Header { version, n, sigma, threshold, engine, kind, sections })
}

fn u32_payload(p: &[u8]) -> Result<Vec<u32>> {
    if p.len() % 4 != 0 {
        return Err(Error::Format("section length is not a multiple of 4".into()));
    }
    Ok(p.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).collect())
}

fn usize_payload(p: &[u8]) -> Result<Vec<usize>> {
    if p.len() % 8 != 0 {
        return Err(Error::Format("section length is not a multiple of 8".into()));
    }
    p.chunks_exact(8)
        .map(|b| usize::try_from(u64::from_le_bytes(b.try_into().unwrap())).map_err(|_| Error::Format("value too large".into())))
        .collect()
}

pub fn from_bytes(buf: &[u8]) -> Result<StaticTrieIndex> {
    let mut c = Cursor { buf, pos: 0 };
    let h = header(&mut c)?;
    let mut text = None;
    let mut sa = None;
    let mut lcp = None;
    let mut strings = None;
    for _ in 0..h.sections {
        let kind = c.u32()?;
        let len = c.usize()?;
        let payload = c.take(len)?;
        match kind {
            SEC_TEXT => text = Some(u32_payload(payload)?),
            SEC_SA => sa = Some(usize_payload(payload)?),
            SEC_LCP => lcp = Some(usize_payload(payload)?),
            SEC_STRINGS => strings = Some(parse_strings(payload)?),
            k => return Err(Error::Format(format!("unknown section kind {k}"))),
        }
    }
    if c.pos != buf.len() {
        return Err(Error::Format("trailing bytes after the last section".into()));
    }
    let missing = |what: &str| Error::Format(format!("missing {what} section"));
    let index = match h.kind {
        LeafKind::Suffixes => {
            let text = text.ok_or_else(|| missing("text"))?;
            let sa = sa.ok_or_else(|| missing("suffix array"))?;
            let lcp = lcp.ok_or_else(|| missing("lcp"))?;
            check_codes(&text, h.sigma)?;
            let mut t = text;
            t.push(SENTINEL);
            check_suffix_arrays(&t, &sa, &lcp)?;
            let trie = build_suffix_tree_from(t, &sa, &lcp);
            StaticTrieIndex::build_with(trie, sa, h.sigma, h.engine)?
        }
        LeafKind::Strings => {
            let strings = strings.ok_or_else(|| missing("strings"))?;
            StaticTrieIndex::from_strings(&strings, h.sigma, h.engine)?
        }
    };
    if index.threshold() as u64 != h.threshold || index.leaf_count() as u64 != h.n + u64::from(h.kind == LeafKind::Suffixes) {
        return Err(Error::Format("header does not match the rebuilt index".into()));
    }
    Ok(index)
}

fn parse_strings(p: &[u8]) -> Result<Vec<Vec<Code>>> {
    let mut c = Cursor { buf: p, pos: 0 };
    let count = c.usize()?;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = c.usize()?;
        let bytes = c.take(len.checked_mul(4).ok_or_else(|| Error::Format("string too long".into()))?)?;
        out.push(u32_payload(bytes)?);
    }
    if c.pos != p.len() {
        return Err(Error::Format("trailing bytes in string section".into()));
    }
    Ok(out)
}

/// Cheap consistency checks so a damaged file fails cleanly instead of
/// producing a wrong tree: `sa` is a permutation and adjacent suffixes share
/// the character before their lcp boundary, then increase.
fn check_suffix_arrays(t: &[Code], sa: &[usize], lcp: &[usize]) -> Result<()> {
    let n = t.len();
    let bad = |m: &str| Err(Error::Format(m.into()));
    if sa.len() != n || lcp.len() != n {
        return bad("suffix or lcp array length does not match the text");
    }
    let mut seen = vec![false; n];
    for &p in sa {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return bad("suffix array is not a permutation");
        }
    }
    for i in 1..n {
        let (a, b, l) = (sa[i - 1], sa[i], lcp[i]);
        if a + l >= n || b + l >= n || t[a + l] >= t[b + l] || (l > 0 && t[a + l - 1] != t[b + l - 1]) {
            return bad("suffix array order or lcp values are inconsistent");
        }
    }
    Ok(())
}

pub fn write_file(path: &Path, index: &StaticTrieIndex) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&to_bytes(index))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<StaticTrieIndex> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    from_bytes(&buf)
}
