//! Convergence table rows and their CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const CSV_HEADER: [&str; 6] = ["method", "s", "k", "n", "error_M", "wall_time_s"];

/// One `(method, s, k)` cell. A failed run has `error_m = NaN` and the reason
/// under `extra["error"]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub method: String,
    pub s: f64,
    pub k: usize,
    pub n: usize,
    #[serde(rename = "error_M")]
    pub error_m: f64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub extra: BTreeMap<String, String>,
}

impl ConvergenceRecord {
    pub fn failed(&self) -> bool {
        self.error_m.is_nan()
    }

    /// Same CSV-visible fields (NaN compares equal to NaN).
    pub fn same_row(&self, other: &Self) -> bool {
        let feq = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        self.method == other.method
            && self.s == other.s
            && self.k == other.k
            && self.n == other.n
            && feq(self.error_m, other.error_m)
            && feq(self.wall_time_s, other.wall_time_s)
    }
}

pub fn write_csv<W: Write>(out: W, records: &[ConvergenceRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> CliResult<Vec<ConvergenceRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(CliError::Config(format!("unexpected CSV header {header:?}")));
    }
    rd.deserialize().map(|r| r.map_err(CliError::from)).collect()
}
