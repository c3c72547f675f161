//! `analyze`: statistics, persistence and embedding of one group of a matrix.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use progspace_core::corpus::QUESTION_COUNT;
use progspace_core::distmat::DistanceMatrix;
use progspace_core::mds::mds_embed;
use progspace_core::metric::Metric;
use progspace_core::stats::{default_radii, dispersion, ripley_k};
use progspace_core::tda::{betti_curve, log_diagram, persistence, Axis, FiltrationConfig};
use serde::{Deserialize, Serialize};
use tracing::info;

use crate::output::{file_sha256, write_csv, write_json};

pub const STATS_FILE: &str = "stats.json";
pub const EMBEDDING_META_FILE: &str = "embedding.meta.json";
pub const ANALYSIS_META_FILE: &str = "analysis.meta.json";

/// All programs, or the programs answering one question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    All,
    Question(u8),
}

impl FromStr for Group {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(Group::All);
        }
        match s.parse::<u8>() {
            Ok(q) if q < QUESTION_COUNT => Ok(Group::Question(q)),
            _ => bail!(
                "unknown group '{s}' (expected all or 0..{})",
                QUESTION_COUNT - 1
            ),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::All => f.write_str("all"),
            Group::Question(q) => write!(f, "{q}"),
        }
    }
}

impl Serialize for Group {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Group {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub group: Group,
    pub out_dir: PathBuf,
    pub label: Option<String>,
    pub seed: u64,
    pub restarts: usize,
    pub r_max: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub lambda: f64,
    pub bins: usize,
    pub max_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: Group,
    pub question_id: Option<u8>,
    pub n: usize,
    pub medoid_program_id: usize,
    pub avg_dispersion: f64,
    pub median_dispersion: f64,
    pub mad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub raw_stress: f64,
    pub avg_stress: f64,
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisMeta {
    pub tool_version: String,
    pub label: String,
    pub group: Group,
    pub input: String,
    pub input_sha256: String,
    pub corpus_digest: Option<String>,
    pub lambda: f64,
    pub r_max: f64,
    pub seed: u64,
    pub restarts: usize,
    pub histogram_bins: usize,
    /// Pairs with infinite death, left out of the log diagram.
    pub log_diagram_infinite: usize,
}

/// Label derived from a matrix file name: `runs/gpt4.dmat.csv` gives `gpt4`.
pub fn default_label(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.strip_suffix(".dmat.csv")
        .or_else(|| name.strip_suffix(".csv"))
        .unwrap_or(&name)
        .to_owned()
}

pub fn analyze(dmat_path: &Path, options: &AnalyzeOptions) -> Result<AnalysisMeta> {
    let (full, meta) = DistanceMatrix::load(dmat_path)?;
    let m = match options.group {
        Group::All => full,
        Group::Question(q) => full
            .submatrix(q)
            .with_context(|| format!("group {q} has no programs in {}", dmat_path.display()))?,
    };
    if m.len() < 2 {
        bail!(
            "group {} has {} program(s); at least 2 are needed",
            options.group,
            m.len()
        );
    }
    let label = options
        .label
        .clone()
        .unwrap_or_else(|| default_label(dmat_path));
    let out = &options.out_dir;
    info!(group = %options.group, n = m.len(), seed = options.seed, "analyzing");

    let summary = dispersion(&m)?;
    let stats = GroupStats {
        group: options.group,
        question_id: match options.group {
            Group::All => None,
            Group::Question(q) => Some(q),
        },
        n: m.len(),
        medoid_program_id: m.program_ids()[summary.medoid_index],
        avg_dispersion: summary.avg_dispersion,
        median_dispersion: summary.median_dispersion,
        mad: summary.mad,
    };
    write_json(&out.join(STATS_FILE), &stats)?;

    let radii = options.radii.clone().unwrap_or_else(|| default_radii(&m));
    let k = ripley_k(&m, &radii, options.lambda)?;
    write_csv(
        &out.join("kfunction.csv"),
        "r,K",
        k.radii
            .iter()
            .zip(&k.values)
            .map(|(r, v)| format!("{r},{v}")),
    )?;

    let r_max = options.r_max.unwrap_or(m.max_value() as f64);
    let config = FiltrationConfig {
        max_dim: 1,
        r_max: Some(r_max),
        max_points: options.max_points,
    };
    let pairs = persistence(&m, &config)?;
    write_csv(
        &out.join("persistence.csv"),
        "dim,birth,death",
        pairs
            .iter()
            .map(|p| format!("{},{},{}", p.dim, p.birth, p.death)),
    )?;
    let mut betti_rows = Vec::new();
    for dim in [0, 1] {
        let curve = betti_curve(&pairs, dim, &radii)?;
        betti_rows.extend(
            curve
                .radii
                .iter()
                .zip(&curve.counts)
                .map(|(r, c)| format!("{dim},{r},{c}")),
        );
    }
    write_csv(&out.join("betti.csv"), "dim,r,count", betti_rows)?;

    let diagram = log_diagram(&pairs, options.bins);
    write_csv(
        &out.join("logdiagram.csv"),
        "dim,log_birth,log_death",
        diagram
            .points
            .iter()
            .map(|p| format!("{},{},{}", p.dim, p.log_birth, p.log_death)),
    )?;
    write_csv(
        &out.join("logdiagram_hist.csv"),
        "dim,axis,lo,hi,count",
        diagram.histogram.iter().map(|b| {
            let axis = match b.axis {
                Axis::Birth => "birth",
                Axis::Death => "death",
            };
            format!("{},{axis},{},{},{}", b.dim, b.lo, b.hi, b.count)
        }),
    )?;

    let embedding = mds_embed(&m, options.seed, options.restarts);
    write_csv(
        &out.join("embedding.csv"),
        "program_id,question_id,x,y",
        embedding.points.iter().enumerate().map(|(i, p)| {
            let q = m.question_ids()[i]
                .map(|q| q.to_string())
                .unwrap_or_default();
            format!("{},{q},{},{}", m.program_ids()[i], p[0], p[1])
        }),
    )?;
    write_json(
        &out.join(EMBEDDING_META_FILE),
        &EmbeddingMeta {
            raw_stress: embedding.raw_stress,
            avg_stress: embedding.avg_stress,
            seed: options.seed,
            restarts: options.restarts,
            iterations: embedding.iterations,
            converged: embedding.converged,
        },
    )?;

    let analysis = AnalysisMeta {
        tool_version: progspace_core::VERSION.to_owned(),
        label,
        group: options.group,
        input: dmat_path.display().to_string(),
        input_sha256: file_sha256(dmat_path)?,
        corpus_digest: meta.and_then(|m| m.corpus_digest),
        lambda: options.lambda,
        r_max,
        seed: options.seed,
        restarts: options.restarts,
        histogram_bins: options.bins,
        log_diagram_infinite: diagram.n_infinite,
    };
    write_json(&out.join(ANALYSIS_META_FILE), &analysis)?;
    Ok(analysis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_parsing() {
        assert_eq!("all".parse::<Group>().unwrap(), Group::All);
        assert_eq!("6".parse::<Group>().unwrap(), Group::Question(6));
        for bad in ["7", "9", "-1", "x", ""] {
            let e = bad.parse::<Group>().unwrap_err().to_string();
            assert!(e.starts_with("unknown group"), "{e}");
        }
    }

    #[test]
    fn labels_from_paths() {
        assert_eq!(default_label(Path::new("runs/gpt4.dmat.csv")), "gpt4");
        assert_eq!(default_label(Path::new("m.csv")), "m");
    }
}
