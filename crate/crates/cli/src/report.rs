//! `report`: summary table over analysis directories, one block per model
//! label and one column per group, with the smallest value of each
//! comparable row flagged.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analyze::{
    AnalysisMeta, EmbeddingMeta, Group, GroupStats, ANALYSIS_META_FILE, EMBEDDING_META_FILE,
    STATS_FILE,
};
use crate::output::{write_json, write_text};

pub const STRESS_NOTE: &str =
    "Average stress is the raw MDS stress divided by the number of programs in the group.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub group: Group,
    pub n: usize,
    pub medoid_program_id: usize,
    pub avg_dispersion: f64,
    pub median_dispersion: f64,
    pub avg_stress: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub statistic: String,
    /// Value per group, in column order; `None` where the group was not analyzed.
    pub values: Vec<Option<f64>>,
    /// Columns holding the row minimum; empty for rows that are not compared.
    pub minimal: Vec<Group>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    pub label: String,
    pub groups: Vec<GroupEntry>,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub columns: Vec<Group>,
    pub models: Vec<ModelBlock>,
    pub note: String,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Collects the analysis directories into blocks, keeping labels in the order
/// they are first seen.
pub fn build_report(dirs: &[PathBuf]) -> Result<Report> {
    let mut labels: Vec<String> = Vec::new();
    let mut entries: BTreeMap<(usize, Group), GroupEntry> = BTreeMap::new();
    for dir in dirs {
        let meta: AnalysisMeta = read_json(&dir.join(ANALYSIS_META_FILE))?;
        let stats: GroupStats = read_json(&dir.join(STATS_FILE))?;
        let embedding: EmbeddingMeta = read_json(&dir.join(EMBEDDING_META_FILE))?;
        let label_index = match labels.iter().position(|l| *l == meta.label) {
            Some(i) => i,
            None => {
                labels.push(meta.label.clone());
                labels.len() - 1
            }
        };
        let entry = GroupEntry {
            group: meta.group,
            n: stats.n,
            medoid_program_id: stats.medoid_program_id,
            avg_dispersion: stats.avg_dispersion,
            median_dispersion: stats.median_dispersion,
            avg_stress: embedding.avg_stress,
            source: dir.display().to_string(),
        };
        if let Some(prev) = entries.insert((label_index, meta.group), entry) {
            bail!(
                "duplicate analysis for label '{}' group {}: {} and {}",
                meta.label,
                meta.group,
                prev.source,
                dir.display()
            );
        }
    }
    if labels.is_empty() {
        bail!("no analysis directories given");
    }

    let mut columns: Vec<Group> = entries.keys().map(|(_, g)| *g).collect();
    columns.sort();
    columns.dedup();

    let mut models = Vec::new();
    for (index, label) in labels.into_iter().enumerate() {
        let groups: Vec<GroupEntry> = entries
            .range((index, Group::All)..)
            .take_while(|((i, _), _)| *i == index)
            .map(|(_, e)| e.clone())
            .collect();
        if !groups.iter().any(|e| e.group == Group::All) {
            bail!("label '{label}' has no analysis of group all");
        }
        let row = |statistic: &str, value: fn(&GroupEntry) -> f64, compared: bool| {
            let values: Vec<Option<f64>> = columns
                .iter()
                .map(|c| groups.iter().find(|e| e.group == *c).map(value))
                .collect();
            let minimal = if compared {
                row_minima(&columns, &values)
            } else {
                Vec::new()
            };
            ReportRow {
                statistic: statistic.to_owned(),
                values,
                minimal,
            }
        };
        let rows = vec![
            row("Mid Prg Idx", |e| e.medoid_program_id as f64, false),
            row("Avg Dispersion", |e| e.avg_dispersion, true),
            row("Median Dispersion", |e| e.median_dispersion, true),
            row("Average Stress", |e| e.avg_stress, true),
        ];
        models.push(ModelBlock {
            label,
            groups,
            rows,
        });
    }
    Ok(Report {
        tool_version: progspace_core::VERSION.to_owned(),
        columns,
        models,
        note: STRESS_NOTE.to_owned(),
    })
}

/// Every column whose value equals the row minimum.
fn row_minima(columns: &[Group], values: &[Option<f64>]) -> Vec<Group> {
    let Some(min) = values.iter().flatten().copied().reduce(f64::min) else {
        return Vec::new();
    };
    columns
        .iter()
        .zip(values)
        .filter(|(_, v)| **v == Some(min))
        .map(|(c, _)| *c)
        .collect()
}

pub fn render_markdown(report: &Report) -> String {
    let heading = |g: &Group| match g {
        Group::All => "0-6".to_owned(),
        Group::Question(q) => q.to_string(),
    };
    let mut md = String::from("| Model | Statistic |");
    for c in &report.columns {
        write!(md, " {} |", heading(c)).expect("write to string");
    }
    md.push_str("\n|---|---|");
    md.push_str(&"---|".repeat(report.columns.len()));
    md.push('\n');
    for model in &report.models {
        for (k, row) in model.rows.iter().enumerate() {
            let name = if k == 0 { model.label.as_str() } else { "" };
            write!(md, "| {name} | {} |", row.statistic).expect("write to string");
            for (c, v) in report.columns.iter().zip(&row.values) {
                let cell = match v {
                    None => "n/a".to_owned(),
                    Some(x) if row.minimal.is_empty() => format!("{x}"),
                    Some(x) => format!("{x:.1}"),
                };
                if row.minimal.contains(c) {
                    write!(md, " **{cell}** |").expect("write to string");
                } else {
                    write!(md, " {cell} |").expect("write to string");
                }
            }
            md.push('\n');
        }
    }
    md.push('\n');
    md.push_str("The smallest value per row is in bold. ");
    md.push_str(&report.note);
    md.push('\n');
    md
}

pub fn write_report(dirs: &[PathBuf], out_dir: &Path) -> Result<Report> {
    let report = build_report(dirs)?;
    write_json(&out_dir.join("report.json"), &report)?;
    write_text(&out_dir.join("report.md"), &render_markdown(&report))?;
    Ok(report)
}
