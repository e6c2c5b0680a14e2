//! Markdown tables over run records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::Path;

use serde::Deserialize;

use crate::config::ProbeKind;
use crate::error::{Error, Result};
use crate::record::{Cell, RunRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Table {
    /// Direct membership MRR.
    T2,
    /// Direct intensity pairwise accuracy.
    T4,
    /// Indirect intensity accuracy.
    T5,
    /// Scalar diversity macro-F1 (strategies and the LR baseline).
    T7,
    /// Direct intensity P-ACC, tau and rho.
    A8,
}

impl Table {
    fn title(self) -> &'static str {
        match self {
            Table::T2 => "Direct scale membership (MRR, best layer)",
            Table::T4 => "Direct intensity ranking (pairwise accuracy, best layer)",
            Table::T5 => "Indirect intensity ranking (pairwise accuracy)",
            Table::T7 => "Scalar diversity (macro-F1)",
            Table::A8 => "Direct intensity ranking (P-ACC, tau, rho)",
        }
    }

    fn probes(self) -> &'static [ProbeKind] {
        match self {
            Table::T2 => &[ProbeKind::MembershipDirect],
            Table::T4 | Table::A8 => &[ProbeKind::IntensityDirect],
            Table::T5 => &[ProbeKind::IntensityIndirect],
            Table::T7 => &[ProbeKind::Diversity, ProbeKind::LrBaseline],
        }
    }

    /// Metric keys shown under each dataset column.
    fn metrics(self) -> &'static [&'static str] {
        match self {
            Table::T2 => &["mrr"],
            Table::T4 => &["pacc"],
            Table::T5 => &["accuracy"],
            Table::T7 => &["f1"],
            Table::A8 => &["pacc", "tau", "rho"],
        }
    }
}

const DATASET_ORDER: [&str; 6] = ["DM", "CD", "WK", "PVT", "GZ", "RX"];

fn column_order(columns: &BTreeSet<String>) -> Vec<String> {
    let mut out: Vec<String> = DATASET_ORDER
        .iter()
        .filter(|c| columns.contains(**c))
        .map(|c| c.to_string())
        .collect();
    out.extend(
        columns
            .iter()
            .filter(|c| !DATASET_ORDER.contains(&c.as_str()))
            .cloned(),
    );
    out
}

fn row_label(r: &RunRecord) -> String {
    match &r.summary.variant {
        Some(v) if v != "endpoints-sum" => format!("{} ({v})", r.summary.row),
        _ => r.summary.row.clone(),
    }
}

fn metric_label(m: &str) -> &str {
    match m {
        "pacc" => "P-ACC",
        "tau" => "τ",
        "rho" => "ρ",
        "mrr" => "MRR",
        "f1" => "F1",
        _ => m,
    }
}

fn fmt_cell(cell: &Cell, bold: bool) -> String {
    let mut s = format!("{:.3}", cell.mean);
    if let Some(std) = cell.std {
        write!(s, " ± {std:.3}").unwrap();
    }
    if bold {
        s = format!("**{s}**");
    }
    if let Some(note) = &cell.note {
        write!(s, "<sub>{note}</sub>").unwrap();
    }
    s
}

/// Cells of one table: (row, column, metric) → cell. Later records win.
pub type Grid = BTreeMap<(String, String, String), Cell>;

pub fn collect(records: &[RunRecord], table: Table) -> (Vec<String>, Vec<String>, Grid) {
    let mut grid = Grid::new();
    let mut rows: Vec<String> = Vec::new();
    let mut columns = BTreeSet::new();
    for r in records
        .iter()
        .filter(|r| table.probes().contains(&r.config.probe))
    {
        let row = row_label(r);
        if !rows.contains(&row) {
            rows.push(row.clone());
        }
        columns.insert(r.summary.column.clone());
        for m in table.metrics() {
            if let Some(c) = r.summary.cells.get(*m) {
                let key = (row.clone(), r.summary.column.clone(), m.to_string());
                if grid.insert(key, c.clone()).is_some() {
                    log::warn!(
                        "several records for {row} / {}; keeping the last",
                        r.summary.column
                    );
                }
            }
        }
    }
    (rows, column_order(&columns), grid)
}

/// Renders a markdown table. Missing cells show as an em dash placeholder;
/// the best mean in each column is bold.
pub fn render(records: &[RunRecord], table: Table) -> String {
    let (rows, columns, grid) = collect(records, table);
    let metrics = table.metrics();
    let mut headers = vec!["Model".to_string()];
    for c in &columns {
        for m in metrics {
            headers.push(if metrics.len() == 1 {
                c.clone()
            } else {
                format!("{c} {}", metric_label(m))
            });
        }
    }
    let mut best: BTreeMap<(String, String), f64> = BTreeMap::new();
    for ((_, c, m), cell) in &grid {
        let e = best
            .entry((c.clone(), m.clone()))
            .or_insert(f64::NEG_INFINITY);
        if cell.mean > *e {
            *e = cell.mean;
        }
    }
    let mut out = format!("### {}\n\n", table.title());
    writeln!(out, "| {} |", headers.join(" | ")).unwrap();
    writeln!(out, "|{}", "---|".repeat(headers.len())).unwrap();
    for row in &rows {
        let mut cells = vec![row.clone()];
        for c in &columns {
            for m in metrics {
                let key = (row.clone(), c.clone(), m.to_string());
                cells.push(match grid.get(&key) {
                    Some(cell) => {
                        let bold = best.get(&(c.clone(), m.to_string())) == Some(&cell.mean)
                            && rows.len() > 1;
                        fmt_cell(cell, bold)
                    }
                    None => "—".to_string(),
                });
            }
        }
        writeln!(out, "| {} |", cells.join(" | ")).unwrap();
    }
    out
}

/// One expected cell with its tolerance.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub row: String,
    pub column: String,
    #[serde(default = "default_metric")]
    pub metric: String,
    pub value: f64,
    pub tolerance: f64,
}

fn default_metric() -> String {
    String::new()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default)]
    pub cell: Vec<Expectation>,
}

impl Expectations {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub row: String,
    pub column: String,
    pub metric: String,
    pub expected: f64,
    pub tolerance: f64,
    pub observed: Option<f64>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.observed
            .is_some_and(|o| (o - self.expected).abs() <= self.tolerance)
    }
}

/// Compares table cells against expectations; a missing cell fails.
pub fn check(records: &[RunRecord], table: Table, expected: &Expectations) -> Vec<Check> {
    let (_, _, grid) = collect(records, table);
    expected
        .cell
        .iter()
        .map(|e| {
            let metric = if e.metric.is_empty() {
                table.metrics()[0].to_string()
            } else {
                e.metric.clone()
            };
            let observed = grid
                .get(&(e.row.clone(), e.column.clone(), metric.clone()))
                .map(|c| c.mean);
            Check {
                row: e.row.clone(),
                column: e.column.clone(),
                metric,
                expected: e.value,
                tolerance: e.tolerance,
                observed,
            }
        })
        .collect()
}

pub fn render_checks(checks: &[Check]) -> String {
    let mut out = String::from("\n| Model | Dataset | Metric | Expected | Observed | Status |\n|---|---|---|---|---|---|\n");
    for c in checks {
        let observed = c.observed.map_or("—".to_string(), |o| format!("{o:.3}"));
        let status = if c.passed() { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "| {} | {} | {} | {:.3} ± {:.3} | {observed} | {status} |",
            c.row,
            c.column,
            metric_label(&c.metric),
            c.expected,
            c.tolerance
        )
        .unwrap();
    }
    out
}

/// Loads every record matching a glob pattern, in path order.
pub fn load_records(pattern: &str) -> Result<Vec<RunRecord>> {
    let paths = glob::glob(pattern).map_err(|e| Error::Config(format!("--runs: {e}")))?;
    let mut paths: Vec<_> = paths.filter_map(std::result::Result::ok).collect();
    paths.sort();
    paths.iter().map(|p| RunRecord::load(p)).collect()
}
