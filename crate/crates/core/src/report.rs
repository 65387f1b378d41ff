//! Check records and the report type every checker writes into.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Tolerance for identities (equalities), relative.
pub const IDENTITY_REL_TOL: f64 = 1e-12;
/// Absolute slack on analytic inequalities to absorb rounding.
pub const INEQUALITY_ABS_TOL: f64 = 1e-13;
/// Integer and structural checks.
pub const EXACT_TOL: f64 = 0.0;

pub type Params = BTreeMap<String, Value>;

/// Build a parameter map from `(key, value)` pairs.
pub fn params<I, K, V>(pairs: I) -> Params
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<Value>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub params: Params,
    pub margin: f64,
    pub pass: bool,
    pub tol: f64,
}

impl CheckRecord {
    /// `pass` is derived: `margin >= -tol` (NaN never passes).
    pub fn new(check_id: impl Into<String>, params: Params, margin: f64, tol: f64) -> Self {
        // fold -0.0 into 0.0 so reports read cleanly
        let margin = margin + 0.0;
        Self {
            check_id: check_id.into(),
            params,
            margin,
            pass: margin >= -tol,
            tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub name: String,
    pub seed: u64,
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        Self {
            name: name.into(),
            seed,
            records: Vec::new(),
        }
    }

    pub fn record(&mut self, check_id: impl Into<String>, params: Params, margin: f64, tol: f64) -> bool {
        let rec = CheckRecord::new(check_id, params, margin, tol);
        let pass = rec.pass;
        self.records.push(rec);
        pass
    }

    /// Append another report's records, prefixing nothing.
    pub fn extend(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
    }

    pub fn passed(&self) -> usize {
        self.records.iter().filter(|r| r.pass).count()
    }

    pub fn total(&self) -> usize {
        self.records.len()
    }

    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    /// Minimum margin over all records (`+inf` for an empty report).
    pub fn worst_margin(&self) -> f64 {
        self.records.iter().map(|r| r.margin).fold(f64::INFINITY, |a, b| if b < a || b.is_nan() { b } else { a })
    }

    pub fn get<'a>(&'a self, check_id: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.records.iter().filter(move |r| r.check_id == check_id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    /// Stable sort by check id; records sharing an id keep insertion order.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    }

    /// JSON array of records.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("records serialize")
    }

    pub fn from_json(name: &str, seed: u64, json: &str) -> serde_json::Result<Self> {
        let records = serde_json::from_str(json)?;
        Ok(Self {
            name: name.to_string(),
            seed,
            records,
        })
    }

    pub fn summary_line(&self) -> String {
        format!(
            "SUITE {}: {}/{} worst_margin={:e}",
            self.name,
            self.passed(),
            self.total(),
            self.worst_margin()
        )
    }
}
