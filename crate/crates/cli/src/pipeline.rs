//! `fixture`, `ingest` and `distmat`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use progspace_core::corpus::{Corpus, QUESTION_COUNT};
use progspace_core::distmat::{compute_matrix, ComputeOptions, ComputeReport};
use progspace_core::fsutil::write_atomic;
use progspace_core::synth::random_program;
use progspace_core::tda::{rename_cycle_source, RENAME_CYCLE_STATES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::write_text;

pub const MANIFEST_FILE: &str = "corpus.jsonl";
pub const ERROR_LOG_FILE: &str = "errors.jsonl";
pub const TREES_FILE: &str = "corpus.trees";

/// Writes the renaming-cycle programs as `q0_r<k>.py`.
pub fn fixture_rename_cycle(out_dir: &Path) -> Result<usize> {
    for (k, state) in RENAME_CYCLE_STATES.iter().enumerate() {
        write_text(
            &out_dir.join(format!("q0_r{k}.py")),
            &rename_cycle_source(state),
        )?;
    }
    Ok(RENAME_CYCLE_STATES.len())
}

/// Writes `per_question` random programs for each of the seven questions.
pub fn fixture_synthetic(out_dir: &Path, per_question: u32, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for q in 0..QUESTION_COUNT {
        for r in 0..per_question {
            write_text(
                &out_dir.join(format!("q{q}_r{r}.py")),
                &random_program(&mut rng),
            )?;
        }
    }
    Ok(usize::from(QUESTION_COUNT) * per_question as usize)
}

#[derive(Debug, Serialize)]
pub struct IngestSummary {
    pub programs: usize,
    pub rejected: usize,
    pub corpus_digest: String,
    pub manifest: PathBuf,
}

pub fn ingest(input: &Path, out_dir: &Path) -> Result<IngestSummary> {
    let corpus = Corpus::ingest(input)?;
    let manifest = out_dir.join(MANIFEST_FILE);
    let save = |name: &str, result: std::io::Result<()>| -> Result<()> {
        result.with_context(|| format!("writing {}", out_dir.join(name).display()))
    };
    save(
        MANIFEST_FILE,
        write_atomic(&manifest, |mut out| corpus.write_manifest(&mut out)),
    )?;
    save(
        ERROR_LOG_FILE,
        write_atomic(&out_dir.join(ERROR_LOG_FILE), |mut out| {
            corpus.write_error_log(&mut out)
        }),
    )?;
    save(
        TREES_FILE,
        write_atomic(&out_dir.join(TREES_FILE), |mut out| {
            corpus.write_trees(&mut out)
        }),
    )?;
    Ok(IngestSummary {
        programs: corpus.len(),
        rejected: corpus.error_log.len(),
        corpus_digest: corpus.digest(),
        manifest,
    })
}

/// Checkpoint used when none is given: `x.dmat.csv` gives `x.dmat.ckpt`.
pub fn default_checkpoint(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name.strip_suffix(".csv").unwrap_or(&name);
    out.with_file_name(format!("{stem}.ckpt"))
}

pub fn distmat(manifest: &Path, out: &Path, options: &ComputeOptions) -> Result<ComputeReport> {
    let corpus = Corpus::read_manifest(manifest)?;
    let (matrix, report) = compute_matrix(&corpus, options)?;
    matrix.save(out, Some(corpus.digest()))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_naming() {
        assert_eq!(
            default_checkpoint(Path::new("a/x.dmat.csv")),
            Path::new("a/x.dmat.ckpt")
        );
    }
}
