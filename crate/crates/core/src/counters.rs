use std::fmt;
use std::ops::AddAssign;

use serde::Serialize;

/// Instrumentation counters reported per query and per run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ProbeCounters {
    /// Lookups issued to static dictionaries.
    pub dict_probes: u64,
    /// Number of static predecessor queries.
    pub static_pred_queries: u64,
    /// Elementary steps inside static predecessor queries (dictionary probes plus
    /// binary-search steps). The suffix tray charges its child binary searches here.
    pub static_pred_probes: u64,
    /// Node visits inside dynamic predecessor structures.
    pub dyn_pred_probes: u64,
    /// Levels descended inside weighted exponential search trees.
    pub wexp_levels_descended: u64,
    /// Pattern characters compared against stored text.
    pub chars_compared: u64,
    pub splits: u64,
    pub promotions: u64,
}

impl ProbeCounters {
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Compact `key=value` rendering used in TSV reports.
    pub fn to_kv(&self) -> String {
        format!(
            "dict={};spq={};spp={};dpp={};wexp={};chars={};splits={};promo={}",
            self.dict_probes,
            self.static_pred_queries,
            self.static_pred_probes,
            self.dyn_pred_probes,
            self.wexp_levels_descended,
            self.chars_compared,
            self.splits,
            self.promotions
        )
    }
}

impl AddAssign for ProbeCounters {
    fn add_assign(&mut self, o: Self) {
        self.dict_probes += o.dict_probes;
        self.static_pred_queries += o.static_pred_queries;
        self.static_pred_probes += o.static_pred_probes;
        self.dyn_pred_probes += o.dyn_pred_probes;
        self.wexp_levels_descended += o.wexp_levels_descended;
        self.chars_compared += o.chars_compared;
        self.splits += o.splits;
        self.promotions += o.promotions;
    }
}

impl fmt::Display for ProbeCounters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv())
    }
}
