//! Plain-text and JSON summary tables over evaluation reports and
//! hallucination breakdowns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::evalcore::EvalReport;
use crate::halometer::HallucinationBreakdown;

const UNLABELLED: &str = "-";

/// Column of a grid: one dataset at one cut-off.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Column {
    pub dataset: String,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingCell {
    pub recall_at_k: f64,
    pub mrr: f64,
    pub exact_match: f64,
    pub n: usize,
}

/// Systems as rows (sorted by name), dataset and k as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub columns: Vec<Column>,
    pub rows: BTreeMap<String, BTreeMap<usize, RankingCell>>,
}

/// One grid per system: metrics as rows, dataset and k as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallucinationTable {
    pub columns: Vec<Column>,
    /// system → metric → column index → percentage.
    pub systems: BTreeMap<String, BTreeMap<String, BTreeMap<usize, Option<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub ranking: Option<RankingTable>,
    pub hallucination: Option<HallucinationTable>,
}

/// Metric rows in display order.
pub const HALLUCINATION_ROWS: [&str; 9] = [
    "MaHR",
    "MaHR-partial",
    "all-names-GT",
    "one-name-GT",
    "year-GT",
    "wrong-format",
    "other",
    "top-k-match MaHR",
    "exact-match MaHR",
];

fn label(x: &Option<String>) -> String {
    x.clone().unwrap_or_else(|| UNLABELLED.to_owned())
}

fn hallucination_values(b: &HallucinationBreakdown) -> [Option<f64>; 9] {
    let p = &b.percent;
    [
        Some(p.mahr),
        Some(p.mahr_partial),
        Some(p.all_names_gt),
        Some(p.one_name_gt),
        Some(p.year_gt),
        Some(p.wrong_format),
        Some(p.other_hal),
        p.topk_match_mahr,
        p.exact_match_mahr,
    ]
}

pub fn ranking_table(reports: &[EvalReport]) -> RankingTable {
    let columns: Vec<Column> = reports
        .iter()
        .map(|r| Column { dataset: label(&r.dataset), k: r.k })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rows: BTreeMap<String, BTreeMap<usize, RankingCell>> = BTreeMap::new();
    for r in reports {
        let col = Column { dataset: label(&r.dataset), k: r.k };
        let idx = columns.binary_search(&col).expect("column collected above");
        rows.entry(label(&r.system)).or_default().insert(
            idx,
            RankingCell {
                recall_at_k: r.recall_at_k,
                mrr: r.mrr,
                exact_match: r.exact_match,
                n: r.n,
            },
        );
    }
    RankingTable { columns, rows }
}

pub fn hallucination_table(breakdowns: &[HallucinationBreakdown]) -> HallucinationTable {
    let columns: Vec<Column> = breakdowns
        .iter()
        .map(|b| Column { dataset: label(&b.dataset), k: b.k })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut systems: BTreeMap<String, BTreeMap<String, BTreeMap<usize, Option<f64>>>> = BTreeMap::new();
    for b in breakdowns {
        let col = Column { dataset: label(&b.dataset), k: b.k };
        let idx = columns.binary_search(&col).expect("column collected above");
        let grid = systems.entry(label(&b.system)).or_default();
        for (name, value) in HALLUCINATION_ROWS.iter().zip(hallucination_values(b)) {
            grid.entry((*name).to_owned()).or_default().insert(idx, value);
        }
    }
    HallucinationTable { columns, systems }
}

pub fn build(reports: &[EvalReport], breakdowns: &[HallucinationBreakdown]) -> Report {
    Report {
        ranking: (!reports.is_empty()).then(|| ranking_table(reports)),
        hallucination: (!breakdowns.is_empty()).then(|| hallucination_table(breakdowns)),
    }
}

fn render_grid(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |out: &mut String, cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "  {cell:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(out, header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(out, &rule);
    for row in rows {
        line(out, row);
    }
}

impl RankingTable {
    pub fn render(&self) -> String {
        let mut header = vec!["System".to_owned()];
        for c in &self.columns {
            header.push(format!("{} R@{}", c.dataset, c.k));
            header.push(format!("{} MRR", c.dataset));
        }
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(system, cells)| {
                let mut row = vec![system.clone()];
                for i in 0..self.columns.len() {
                    match cells.get(&i) {
                        Some(c) => {
                            row.push(format!("{:.3}", c.recall_at_k));
                            row.push(format!("{:.3}", c.mrr));
                        }
                        None => row.extend([UNLABELLED.to_owned(), UNLABELLED.to_owned()]),
                    }
                }
                row
            })
            .collect();
        let mut out = String::new();
        render_grid(&mut out, &header, &rows);
        out
    }
}

impl HallucinationTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (n, (system, grid)) in self.systems.iter().enumerate() {
            if n > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "{system} (%)");
            let mut header = vec!["Metric".to_owned()];
            header.extend(self.columns.iter().map(|c| format!("{} top-{}", c.dataset, c.k)));
            let rows: Vec<Vec<String>> = HALLUCINATION_ROWS
                .iter()
                .map(|name| {
                    let mut row = vec![(*name).to_owned()];
                    for i in 0..self.columns.len() {
                        row.push(match grid.get(*name).and_then(|m| m.get(&i)).copied().flatten() {
                            Some(v) => format!("{v:.2}"),
                            None => UNLABELLED.to_owned(),
                        });
                    }
                    row
                })
                .collect();
            render_grid(&mut out, &header, &rows);
        }
        out
    }
}

impl Report {
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if let Some(t) = &self.ranking {
            parts.push(t.render());
        }
        if let Some(t) = &self.hallucination {
            parts.push(t.render());
        }
        parts.join("\n")
    }
}
