//! Pass/fail ledgers returned by the verification operations.

use std::fmt;

use serde::Serialize;

use crate::matrix::SeriesMatrix;
use crate::series::{format_monomial, format_rational, TruncSeries};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub title: String,
    pub entries: Vec<CheckEntry>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report { title: title.into(), entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.entries.push(CheckEntry { name: name.into(), passed, detail: detail.into() });
    }

    pub fn extend(&mut self, other: Report) {
        for e in other.entries {
            self.entries.push(CheckEntry { name: format!("{}: {}", other.title, e.name), ..e });
        }
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        for e in &self.entries {
            let tag = if e.passed { "PASS" } else { "FAIL" };
            if e.detail.is_empty() {
                writeln!(f, "  [{tag}] {}", e.name)?;
            } else {
                writeln!(f, "  [{tag}] {} ({})", e.name, e.detail)?;
            }
        }
        let passed = self.entries.iter().filter(|e| e.passed).count();
        write!(f, "  {passed}/{} checks passed", self.entries.len())
    }
}

/// Describes the lowest nonzero monomial of a residual, for failure messages.
pub fn describe_residual(s: &TruncSeries) -> String {
    match s.terms().next() {
        None => "zero".to_string(),
        Some((e, c)) => {
            let m = format_monomial(e, s.nq(), &|i| format!("v{i}"));
            format!("coefficient {} at monomial {m}", format_rational(c))
        }
    }
}

/// Same as [`describe_residual`] for the first nonzero matrix entry.
pub fn describe_matrix_residual(m: &SeriesMatrix) -> String {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !m.get(i, j).is_zero() {
                return format!("entry ({i},{j}): {}", describe_residual(m.get(i, j)));
            }
        }
    }
    "zero".to_string()
}
