//! Artifact writers. Every table carries a `format` column so that
//! downstream diffing can tell layouts apart.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kthier::report::Report;
use serde::Serialize;

pub const TABLE_FORMAT: &str = "kthier-table/1";
pub const FLOAT_FORMAT: &str = "kthier-float/1";
pub const REPORT_FORMAT: &str = "kthier-report/1";

pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).with_context(|| format!("cannot create output directory {}", d.display()))?;
        }
        Ok(Sink { dir })
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    /// Writes `rows` under `header`, prefixing each row with the format tag.
    pub fn table(&self, name: &str, format: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let Some(path) = self.path(name) else { return Ok(()) };
        write_table(&path, format, header, rows)
    }

    pub fn report<C: Serialize>(&self, name: &str, command: &str, config: &C, reports: &[Report]) -> Result<()> {
        let Some(path) = self.path(name) else { return Ok(()) };
        let doc = ReportFile {
            format: REPORT_FORMAT,
            command,
            config,
            passed: reports.iter().all(Report::all_passed),
            reports,
        };
        let text = serde_json::to_string_pretty(&doc)?;
        fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
    }
}

#[derive(Serialize)]
struct ReportFile<'a, C> {
    format: &'static str,
    command: &'a str,
    config: &'a C,
    passed: bool,
    reports: &'a [Report],
}

fn write_table(path: &Path, format: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut head = vec!["format"];
    head.extend_from_slice(header);
    w.write_record(&head)?;
    for r in rows {
        let mut rec = vec![format.to_string()];
        rec.extend(r.iter().cloned());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Prints an aligned plain-text table.
pub fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> =
            cells.iter().zip(&widths).map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
        println!("{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
}
