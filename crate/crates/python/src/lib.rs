//! Python bindings for `triekit`.
//!
//! Strings and patterns may be passed as `bytes`/`str` (byte `b` becomes code
//! `b + 1`) or as lists of integer codes in `[1, sigma]`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use triekit::bench::{self, BenchConfig, BenchEngine};
use triekit::dynamic_index::DynTrieIndex;
use triekit::index_file;
use triekit::static_index::{Engine, StaticTrieIndex};
use triekit::suffix_array::{build_suffix_array, build_suffix_tree};
use triekit::suffix_oracle::{FmaTree, OnlineSuffixTree};
use triekit::{Code, Error, MatchResult, ProbeCounters, Text};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn codes(obj: &Bound<'_, PyAny>) -> PyResult<Vec<Code>> {
    if let Ok(b) = obj.extract::<Vec<u8>>() {
        if obj.is_instance_of::<PyBytes>() {
            return Ok(b.into_iter().map(triekit::text_model::byte_code).collect());
        }
    }
    if let Ok(s) = obj.extract::<String>() {
        return Ok(s.bytes().map(triekit::text_model::byte_code).collect());
    }
    obj.extract::<Vec<Code>>()
}

fn engine(name: &str) -> PyResult<Engine> {
    match name {
        "static" => Ok(Engine::Static),
        "tray" => Ok(Engine::Tray),
        _ => Err(PyValueError::new_err(format!("unknown engine {name:?}"))),
    }
}

fn counters(k: &ProbeCounters) -> BTreeMap<&'static str, u64> {
    BTreeMap::from([
        ("dict_probes", k.dict_probes),
        ("static_pred_queries", k.static_pred_queries),
        ("static_pred_probes", k.static_pred_probes),
        ("dyn_pred_probes", k.dyn_pred_probes),
        ("wexp_levels_descended", k.wexp_levels_descended),
        ("chars_compared", k.chars_compared),
        ("splits", k.splits),
        ("promotions", k.promotions),
    ])
}

/// Result of a prefix search.
#[pyclass(name = "Match", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMatch {
    outcome: &'static str,
    node: usize,
    interval: Option<(usize, usize)>,
    count: usize,
    matched_len: usize,
    counters: BTreeMap<&'static str, u64>,
}

#[pymethods]
impl PyMatch {
    fn __repr__(&self) -> String {
        format!(
            "Match(outcome={}, interval={:?}, count={}, matched_len={})",
            self.outcome, self.interval, self.count, self.matched_len
        )
    }
}

impl PyMatch {
    fn new(m: MatchResult, k: &ProbeCounters) -> Self {
        PyMatch {
            outcome: m.outcome.as_str(),
            node: m.node,
            interval: m.interval,
            count: if m.outcome.is_match() { m.count } else { 0 },
            matched_len: m.matched_len,
            counters: counters(k),
        }
    }
}

/// Static trie index over the suffixes of a text or over a string set.
#[pyclass(name = "StaticIndex", frozen)]
struct PyStaticIndex {
    inner: StaticTrieIndex,
}

#[pymethods]
impl PyStaticIndex {
    #[staticmethod]
    #[pyo3(signature = (text, sigma = 256, engine = "static"))]
    fn from_text(text: &Bound<'_, PyAny>, sigma: u32, engine: &str) -> PyResult<Self> {
        let t = Text::from_codes(codes(text)?, sigma).map_err(err)?;
        let inner = StaticTrieIndex::from_text(&t, self::engine(engine)?).map_err(err)?;
        Ok(PyStaticIndex { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (strings, sigma = 256, engine = "static"))]
    fn from_strings(strings: Vec<Bound<'_, PyAny>>, sigma: u32, engine: &str) -> PyResult<Self> {
        let strings = strings.iter().map(codes).collect::<PyResult<Vec<_>>>()?;
        let inner = StaticTrieIndex::from_strings(&strings, sigma, self::engine(engine)?).map_err(err)?;
        Ok(PyStaticIndex { inner })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyStaticIndex { inner: index_file::from_bytes(data).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyStaticIndex { inner: index_file::read_file(path.as_ref()).map_err(err)? })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &index_file::to_bytes(&self.inner))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        index_file::write_file(path.as_ref(), &self.inner).map_err(err)
    }

    #[getter]
    fn sigma(&self) -> u32 {
        self.inner.sigma()
    }

    #[getter]
    fn threshold(&self) -> usize {
        self.inner.threshold()
    }

    #[getter]
    fn heavy_count(&self) -> usize {
        self.inner.heavy_count()
    }

    fn __len__(&self) -> usize {
        self.inner.leaf_count()
    }

    fn prefix_query(&self, pattern: &Bound<'_, PyAny>) -> PyResult<PyMatch> {
        let mut k = ProbeCounters::default();
        let m = self.inner.prefix_query_counted(&codes(pattern)?, &mut k).map_err(err)?;
        Ok(PyMatch::new(m, &k))
    }

    /// Rank of the largest stored string `<= pattern`, or None.
    fn predecessor(&self, pattern: &Bound<'_, PyAny>) -> PyResult<Option<usize>> {
        self.inner.predecessor_query(&codes(pattern)?).map_err(err)
    }

    /// Leaf ids (text positions for suffix indexes) of the rank interval.
    fn enumerate(&self, l: usize, r: usize) -> PyResult<Vec<usize>> {
        self.inner.enumerate((l, r)).map_err(err)
    }
}

/// Dynamic trie index supporting insertions.
#[pyclass(name = "DynamicIndex")]
struct PyDynamicIndex {
    inner: DynTrieIndex,
}

#[pymethods]
impl PyDynamicIndex {
    #[new]
    #[pyo3(signature = (sigma = 256))]
    fn new(sigma: u32) -> PyResult<Self> {
        Ok(PyDynamicIndex { inner: DynTrieIndex::new(sigma).map_err(err)? })
    }

    /// Inserts a string and returns its id; duplicates raise ValueError.
    fn insert(&mut self, s: &Bound<'_, PyAny>) -> PyResult<usize> {
        self.inner.insert(&codes(s)?).map_err(err)
    }

    fn search(&self, pattern: &Bound<'_, PyAny>) -> PyResult<PyMatch> {
        let mut k = ProbeCounters::default();
        let m = self.inner.search_counted(&codes(pattern)?, &mut k).map_err(err)?;
        Ok(PyMatch::new(m, &k))
    }

    /// Codes of the largest stored string `<= pattern`, or None.
    fn predecessor(&self, pattern: &Bound<'_, PyAny>) -> PyResult<Option<Vec<Code>>> {
        let id = self.inner.predecessor(&codes(pattern)?).map_err(err)?;
        Ok(id.map(|i| self.inner.string(i).to_vec()))
    }

    fn audit(&self) -> PyResult<()> {
        self.inner.audit().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn heavy_count(&self) -> usize {
        self.inner.heavy_count()
    }

    /// Maintenance counters: promotions, rebalances and elementary steps.
    fn stats(&self) -> (u64, u64, u64) {
        let s = self.inner.stats();
        (s.promotions, s.rebalances, s.steps)
    }
}

/// Suffix tree maintained under prepending letters.
#[pyclass(name = "OnlineSuffixTree")]
struct PyOnlineSuffixTree {
    inner: OnlineSuffixTree,
}

#[pymethods]
impl PyOnlineSuffixTree {
    #[new]
    #[pyo3(signature = (sigma = 256))]
    fn new(sigma: u32) -> PyResult<Self> {
        Ok(PyOnlineSuffixTree { inner: OnlineSuffixTree::new(sigma).map_err(err)? })
    }

    /// Prepends every letter of `s`, last letter first.
    fn prepend(&mut self, s: &Bound<'_, PyAny>) -> PyResult<()> {
        for a in codes(s)?.into_iter().rev() {
            self.inner.prepend(a).map_err(err)?;
        }
        Ok(())
    }

    fn text(&self) -> Vec<Code> {
        self.inner.text()
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn audit_links(&self) -> PyResult<()> {
        self.inner.audit_links().map_err(err)
    }

    /// True when the tree equals a suffix tree built from scratch.
    fn matches_fresh_build(&self) -> PyResult<bool> {
        let t = Text::from_codes(self.inner.text(), self.inner.sigma()).map_err(err)?;
        let fresh = build_suffix_tree(&build_suffix_array(&t), &t);
        Ok(fresh.canonical_labels() == self.inner.canonical_labels())
    }
}

/// Lowest marked ancestor structure; node 0 is the root.
#[pyclass(name = "FmaTree")]
struct PyFmaTree {
    inner: FmaTree,
}

#[pymethods]
impl PyFmaTree {
    #[new]
    fn new() -> Self {
        PyFmaTree { inner: FmaTree::new() }
    }

    fn insert_leaf(&mut self, parent: usize) -> PyResult<usize> {
        self.inner.insert_leaf(parent).map_err(err)
    }

    fn insert_middle(&mut self, below: usize) -> PyResult<usize> {
        self.inner.insert_middle(below).map_err(err)
    }

    fn mark(&mut self, v: usize) -> PyResult<()> {
        self.inner.mark(v).map_err(err)
    }

    fn query(&mut self, v: usize) -> PyResult<Option<usize>> {
        self.inner.query(v).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Suffix array of `text` followed by the terminator.
#[pyfunction]
#[pyo3(signature = (text, sigma = 256))]
fn suffix_array(text: &Bound<'_, PyAny>, sigma: u32) -> PyResult<Vec<usize>> {
    let t = Text::from_codes(codes(text)?, sigma).map_err(err)?;
    Ok(build_suffix_array(&t).sa)
}

/// Deterministic benchmark; returns the TSV report.
#[pyfunction]
#[pyo3(signature = (n, sigma = 256, engines = "static,tray", queries = 1000, seed = 1))]
fn run_bench(n: usize, sigma: u32, engines: &str, queries: usize, seed: u64) -> PyResult<String> {
    let engines = BenchEngine::parse_list(engines).map_err(err)?;
    let (rep, _) = bench::run(&BenchConfig { n, sigma, engines, queries, seed }).map_err(err)?;
    Ok(rep.to_tsv())
}

#[pymodule]
fn triekit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatch>()?;
    m.add_class::<PyStaticIndex>()?;
    m.add_class::<PyDynamicIndex>()?;
    m.add_class::<PyOnlineSuffixTree>()?;
    m.add_class::<PyFmaTree>()?;
    m.add_function(wrap_pyfunction!(suffix_array, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
