//! Pairwise tree-edit distance matrices: parallel block computation with
//! resumable checkpoints, the `.dmat.csv` file format, and per-question
//! restriction.
//!
//! The upper triangle is cut into `block_size × block_size` tiles. Workers
//! pull tiles from a shared counter and send finished tiles to the calling
//! thread, which is the only writer of both the matrix and the checkpoint.
//! Every tile is a pure function of the corpus, so the result does not depend
//! on the number of workers or on how often the run was interrupted.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::fsutil::write_atomic;
use crate::metric::Metric;
use crate::ted::{PostorderTree, TedError, TreeEditDistance};

pub const DEFAULT_BLOCK_SIZE: usize = 256;

#[derive(Debug, Error)]
pub enum DistmatError {
    #[error("corpus has {0} programs; at least 2 are required")]
    TooFewPrograms(usize),
    #[error("workers must be at least 1")]
    NoWorkers,
    #[error("checkpoint was written for corpus {found}, current corpus is {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error("checkpoint uses block size {found}, requested {expected}")]
    BlockSizeMismatch { expected: usize, found: usize },
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("program pair ({i}, {j}): {source}")]
    Ted {
        i: usize,
        j: usize,
        #[source]
        source: TedError,
    },
    #[error("stopped after the block budget: {completed} of {total} blocks done")]
    Incomplete { completed: usize, total: usize },
    #[error("unknown group {0}")]
    UnknownGroup(u8),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DistmatError + '_ {
    move |source| DistmatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Square, symmetric, zero-diagonal matrix of integer distances between
/// programs, with each row's program id and question group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<u64>,
    program_ids: Vec<usize>,
    question_ids: Vec<Option<u8>>,
}

impl Metric for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j] as f64
    }
}

impl DistanceMatrix {
    /// Builds a matrix from row-major values and validates it.
    pub fn new(
        n: usize,
        values: Vec<u64>,
        program_ids: Vec<usize>,
        question_ids: Vec<Option<u8>>,
    ) -> Result<Self, DistmatError> {
        if values.len() != n * n || program_ids.len() != n || question_ids.len() != n {
            return Err(DistmatError::Validation(format!(
                "shape mismatch: n = {n}, {} values, {} ids, {} groups",
                values.len(),
                program_ids.len(),
                question_ids.len()
            )));
        }
        let m = Self {
            n,
            values,
            program_ids,
            question_ids,
        };
        m.validate()?;
        Ok(m)
    }

    /// Row-major values with ids `0..n` and no groups.
    pub fn from_values(n: usize, values: Vec<u64>) -> Result<Self, DistmatError> {
        Self::new(n, values, (0..n).collect(), vec![None; n])
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn program_ids(&self) -> &[usize] {
        &self.program_ids
    }

    pub fn question_ids(&self) -> &[Option<u8>] {
        &self.question_ids
    }

    pub fn question_of(&self, program_id: usize) -> Option<u8> {
        let idx = self.program_ids.iter().position(|&p| p == program_id)?;
        self.question_ids[idx]
    }

    /// Distinct question groups present, ascending.
    pub fn groups(&self) -> Vec<u8> {
        self.question_ids
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn max_value(&self) -> u64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Checks symmetry and the zero diagonal.
    pub fn validate(&self) -> Result<(), DistmatError> {
        let n = self.n;
        for i in 0..n {
            if self.get(i, i) != 0 {
                return Err(DistmatError::Validation(format!(
                    "diagonal entry ({i},{i}) is {}",
                    self.get(i, i)
                )));
            }
            for j in (i + 1)..n {
                if self.get(i, j) != self.get(j, i) {
                    return Err(DistmatError::Validation(format!(
                        "entry ({i},{j}) = {} differs from ({j},{i}) = {}",
                        self.get(i, j),
                        self.get(j, i)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Tests `d(i,k) <= d(i,j) + d(j,k)` on `samples` random triples and
    /// returns the first violation.
    pub fn spot_check_triangles(
        &self,
        samples: usize,
        seed: u64,
    ) -> Result<(), (usize, usize, usize)> {
        if self.n == 0 {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let (i, j, k) = (
                rng.gen_range(0..self.n),
                rng.gen_range(0..self.n),
                rng.gen_range(0..self.n),
            );
            if self.get(i, k) > self.get(i, j) + self.get(j, k) {
                return Err((i, j, k));
            }
        }
        Ok(())
    }

    /// Restriction to the programs of one question, in the original order.
    pub fn submatrix(&self, question_id: u8) -> Result<DistanceMatrix, DistmatError> {
        let rows: Vec<usize> = (0..self.n)
            .filter(|&i| self.question_ids[i] == Some(question_id))
            .collect();
        if rows.is_empty() {
            return Err(DistmatError::UnknownGroup(question_id));
        }
        let k = rows.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in &rows {
            for &j in &rows {
                values.push(self.get(i, j));
            }
        }
        Ok(DistanceMatrix {
            n: k,
            values,
            program_ids: rows.iter().map(|&i| self.program_ids[i]).collect(),
            question_ids: rows.iter().map(|&i| self.question_ids[i]).collect(),
        })
    }

    /// Writes `n,<n>` followed by one comma-separated row per line.
    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "n,{}", self.n)?;
        let mut line = String::new();
        for i in 0..self.n {
            line.clear();
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn metadata(&self, corpus_digest: Option<String>) -> MatrixMeta {
        MatrixMeta {
            tool_version: crate::VERSION.to_owned(),
            n: self.n,
            program_ids: self.program_ids.clone(),
            question_ids: self.question_ids.clone(),
            corpus_digest,
        }
    }

    /// Saves the matrix and its metadata sidecar (see [`meta_path`]).
    pub fn save(&self, path: &Path, corpus_digest: Option<String>) -> Result<(), DistmatError> {
        write_atomic(path, |w| self.write_csv(w)).map_err(io_err(path))?;
        let meta_file = meta_path(path);
        let meta = self.metadata(corpus_digest);
        write_atomic(&meta_file, |w| {
            serde_json::to_writer_pretty(&mut *w, &meta)?;
            w.write_all(b"\n")
        })
        .map_err(io_err(&meta_file))
    }

    /// Loads and validates a matrix. Without a sidecar, ids are `0..n` and no
    /// groups are known.
    pub fn load(path: &Path) -> Result<(DistanceMatrix, Option<MatrixMeta>), DistmatError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let format_err = |message: String| DistmatError::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| format_err("empty file".into()))?;
        let n: usize = header
            .strip_prefix("n,")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| format_err(format!("bad header {header:?}, expected n,<n>")))?;
        let mut values = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (r, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            rows += 1;
            let mut count = 0;
            for cell in line.split(',') {
                let v: i64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| format_err(format!("row {r}: {cell:?} is not an integer")))?;
                if v < 0 {
                    return Err(DistmatError::Validation(format!(
                        "row {r}: negative entry {v}"
                    )));
                }
                values.push(v as u64);
                count += 1;
            }
            if count != n {
                return Err(format_err(format!(
                    "row {r} has {count} entries, header says {n}"
                )));
            }
        }
        if rows != n {
            return Err(format_err(format!("{rows} rows, header says {n}")));
        }
        let meta_file = meta_path(path);
        let meta: Option<MatrixMeta> = if meta_file.exists() {
            let text = fs::read_to_string(&meta_file).map_err(io_err(&meta_file))?;
            Some(
                serde_json::from_str(&text).map_err(|e| DistmatError::Format {
                    path: meta_file.clone(),
                    message: e.to_string(),
                })?,
            )
        } else {
            None
        };
        let (program_ids, question_ids) = match &meta {
            Some(m) if m.n == n => (m.program_ids.clone(), m.question_ids.clone()),
            Some(m) => {
                return Err(format_err(format!(
                    "sidecar describes {} programs, matrix has {n}",
                    m.n
                )))
            }
            None => ((0..n).collect(), vec![None; n]),
        };
        Ok((
            DistanceMatrix::new(n, values, program_ids, question_ids)?,
            meta,
        ))
    }
}

/// `foo.dmat.csv` → `foo.dmat.meta.json`; other names get `.meta.json` appended.
pub fn meta_path(csv: &Path) -> PathBuf {
    let name = csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let meta = match name.strip_suffix(".dmat.csv") {
        Some(stem) => format!("{stem}.dmat.meta.json"),
        None => format!("{name}.meta.json"),
    };
    csv.with_file_name(meta)
}

/// Sidecar describing the rows of a `.dmat.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub tool_version: String,
    pub n: usize,
    pub program_ids: Vec<usize>,
    pub question_ids: Vec<Option<u8>>,
    pub corpus_digest: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ComputeOptions {
    pub workers: usize,
    pub block_size: usize,
    pub checkpoint: Option<PathBuf>,
    /// Stop after computing this many new blocks in this run.
    pub max_new_blocks: Option<usize>,
    pub distance: TreeEditDistance,
}

impl Default for ComputeOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            block_size: DEFAULT_BLOCK_SIZE,
            checkpoint: None,
            max_new_blocks: None,
            distance: TreeEditDistance::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComputeReport {
    pub n: usize,
    pub total_blocks: usize,
    pub resumed_blocks: usize,
    pub computed_blocks: usize,
    pub pairs_computed: u64,
    pub elapsed: Duration,
    pub pairs_per_second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
struct Block {
    row: usize,
    col: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CheckpointRecord {
    Header {
        corpus_digest: String,
        block_size: usize,
        n: usize,
    },
    Block {
        row: usize,
        col: usize,
        values: Vec<u64>,
    },
}

fn block_ranges(
    block: Block,
    block_size: usize,
    n: usize,
) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let rows = block.row * block_size..((block.row + 1) * block_size).min(n);
    let cols = block.col * block_size..((block.col + 1) * block_size).min(n);
    (rows, cols)
}

/// Tile values in row-major order over `rows × cols`; cells on or below the
/// diagonal of a diagonal tile are zero-filled and ignored when merging.
fn compute_block(
    trees: &[PostorderTree],
    distance: &TreeEditDistance,
    block: Block,
    block_size: usize,
) -> (Vec<u64>, u64) {
    let n = trees.len();
    let (rows, cols) = block_ranges(block, block_size, n);
    let mut values = Vec::with_capacity(rows.len() * cols.len());
    let mut pairs = 0;
    for i in rows {
        for j in cols.clone() {
            if j > i {
                values.push(distance.distance_indexed(&trees[i], &trees[j]));
                pairs += 1;
            } else {
                values.push(0);
            }
        }
    }
    (values, pairs)
}

fn merge_block(values: &mut [u64], n: usize, block: Block, block_size: usize, tile: &[u64]) {
    let (rows, cols) = block_ranges(block, block_size, n);
    let width = cols.len();
    for (r, i) in rows.enumerate() {
        for (c, j) in cols.clone().enumerate() {
            if j > i {
                let v = tile[r * width + c];
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
    }
}

struct CheckpointState {
    done: BTreeMap<Block, Vec<u64>>,
}

fn read_checkpoint(
    path: &Path,
    digest: &str,
    block_size: usize,
    n: usize,
) -> Result<Option<CheckpointState>, DistmatError> {
    if !path.exists() {
        return Ok(None);
    }
    let ckpt_err = |message: String| DistmatError::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let file = fs::File::open(path).map_err(io_err(path))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(io_err(path))?;
    let mut done = BTreeMap::new();
    let last = lines.len().saturating_sub(1);
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CheckpointRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            // A kill during the final append leaves a torn last line.
            Err(_) if idx == last && idx > 0 => break,
            Err(e) => return Err(ckpt_err(format!("line {}: {e}", idx + 1))),
        };
        match (idx, record) {
            (
                0,
                CheckpointRecord::Header {
                    corpus_digest,
                    block_size: found_size,
                    n: found_n,
                },
            ) => {
                if corpus_digest != digest || found_n != n {
                    return Err(DistmatError::DigestMismatch {
                        expected: digest.to_owned(),
                        found: corpus_digest,
                    });
                }
                if found_size != block_size {
                    return Err(DistmatError::BlockSizeMismatch {
                        expected: block_size,
                        found: found_size,
                    });
                }
            }
            (0, _) => return Err(ckpt_err("first line is not a header".into())),
            (_, CheckpointRecord::Header { .. }) => {
                return Err(ckpt_err(format!("line {}: repeated header", idx + 1)))
            }
            (_, CheckpointRecord::Block { row, col, values }) => {
                let block = Block { row, col };
                let (rows, cols) = block_ranges(block, block_size, n);
                if row > col
                    || rows.is_empty()
                    || cols.is_empty()
                    || values.len() != rows.len() * cols.len()
                {
                    return Err(ckpt_err(format!(
                        "line {}: block ({row},{col}) has wrong shape",
                        idx + 1
                    )));
                }
                done.insert(block, values);
            }
        }
    }
    Ok(Some(CheckpointState { done }))
}

fn append_record(out: &mut fs::File, record: &CheckpointRecord) -> io::Result<()> {
    let mut line = serde_json::to_vec(record)?;
    line.push(b'\n');
    out.write_all(&line)?;
    out.flush()
}

/// Computes all pairwise distances of a corpus.
pub fn compute_matrix(
    corpus: &Corpus,
    options: &ComputeOptions,
) -> Result<(DistanceMatrix, ComputeReport), DistmatError> {
    let n = corpus.len();
    if n < 2 {
        return Err(DistmatError::TooFewPrograms(n));
    }
    if options.workers == 0 {
        return Err(DistmatError::NoWorkers);
    }
    let block_size = options.block_size.max(1);
    let start = Instant::now();

    let mut trees = Vec::with_capacity(n);
    for (i, tree) in corpus.trees().enumerate() {
        let indexed = options
            .distance
            .index(tree)
            .map_err(|source| DistmatError::Ted {
                i,
                j: if i == 0 { 1 } else { 0 },
                source,
            })?;
        trees.push(indexed);
    }

    let blocks_per_side = n.div_ceil(block_size);
    let all_blocks: Vec<Block> = (0..blocks_per_side)
        .flat_map(|row| (row..blocks_per_side).map(move |col| Block { row, col }))
        .collect();

    let digest = corpus.digest();
    let mut values = vec![0u64; n * n];
    let mut resumed = BTreeSet::new();
    let mut checkpoint_file = None;
    if let Some(path) = &options.checkpoint {
        if let Some(state) = read_checkpoint(path, &digest, block_size, n)? {
            for (block, tile) in state.done {
                merge_block(&mut values, n, block, block_size, &tile);
                resumed.insert(block);
            }
        }
        // Rewriting from the clean records drops a torn trailing line.
        rewrite_checkpoint(path, &digest, block_size, n, &values, &resumed)?;
        let file = fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        checkpoint_file = Some(file);
    }

    let mut pending: Vec<Block> = all_blocks
        .iter()
        .copied()
        .filter(|b| !resumed.contains(b))
        .collect();
    let remaining_total = pending.len();
    if let Some(limit) = options.max_new_blocks {
        pending.truncate(limit);
    }

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(Block, Vec<u64>, u64)>();
    let mut pairs_computed = 0u64;
    let mut io_failure = None;
    std::thread::scope(|scope| {
        for _ in 0..options.workers.min(pending.len().max(1)) {
            let tx = tx.clone();
            let (trees, pending, next) = (&trees, &pending, &next);
            let distance = options.distance;
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&block) = pending.get(k) else { break };
                let (tile, pairs) = compute_block(trees, &distance, block, block_size);
                if tx.send((block, tile, pairs)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (block, tile, pairs) in rx {
            merge_block(&mut values, n, block, block_size, &tile);
            pairs_computed += pairs;
            if let (Some(file), None) = (checkpoint_file.as_mut(), io_failure.as_ref()) {
                let record = CheckpointRecord::Block {
                    row: block.row,
                    col: block.col,
                    values: tile,
                };
                if let Err(e) = append_record(file, &record) {
                    io_failure = Some(e);
                }
            }
        }
    });
    if let (Some(e), Some(path)) = (io_failure, &options.checkpoint) {
        return Err(io_err(path)(e));
    }

    let computed_blocks = pending.len();
    if computed_blocks < remaining_total {
        return Err(DistmatError::Incomplete {
            completed: resumed.len() + computed_blocks,
            total: all_blocks.len(),
        });
    }

    let elapsed = start.elapsed();
    let report = ComputeReport {
        n,
        total_blocks: all_blocks.len(),
        resumed_blocks: resumed.len(),
        computed_blocks,
        pairs_computed,
        elapsed,
        pairs_per_second: pairs_computed as f64 / elapsed.as_secs_f64().max(1e-9),
    };
    tracing::info!(
        n,
        pairs = pairs_computed,
        pairs_per_second = report.pairs_per_second,
        "distance matrix complete"
    );
    let matrix = DistanceMatrix::new(
        n,
        values,
        corpus.programs.iter().map(|p| p.program_id).collect(),
        corpus
            .programs
            .iter()
            .map(|p| Some(p.question_id))
            .collect(),
    )?;
    Ok((matrix, report))
}

fn rewrite_checkpoint(
    path: &Path,
    digest: &str,
    block_size: usize,
    n: usize,
    values: &[u64],
    blocks: &BTreeSet<Block>,
) -> Result<(), DistmatError> {
    write_atomic(path, |w| {
        let header = CheckpointRecord::Header {
            corpus_digest: digest.to_owned(),
            block_size,
            n,
        };
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        for &block in blocks {
            let (rows, cols) = block_ranges(block, block_size, n);
            let mut tile = Vec::with_capacity(rows.len() * cols.len());
            for i in rows {
                for j in cols.clone() {
                    tile.push(if j > i { values[i * n + j] } else { 0 });
                }
            }
            let record = CheckpointRecord::Block {
                row: block.row,
                col: block.col,
                values: tile,
            };
            serde_json::to_writer(&mut *w, &record)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
    .map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Submission, SubmissionContent};

    fn corpus(sources: &[&str]) -> Corpus {
        Corpus::assemble(
            sources
                .iter()
                .enumerate()
                .map(|(i, src)| Submission {
                    question_id: (i % 2) as u8,
                    repetition: i as u32,
                    session_id: None,
                    source_path: None,
                    origin: format!("p{i}"),
                    content: SubmissionContent::Source((*src).to_owned()),
                })
                .collect(),
        )
    }

    const HELLO: &str = "a = 'Hello World'\nprint(a)";
    const GOODBYE: &str = "a = 'Goodbye World'\nprint(a)";

    #[test]
    fn identical_pair() {
        let c = corpus(&[HELLO, HELLO]);
        let (m, _) = compute_matrix(&c, &ComputeOptions::default()).unwrap();
        assert_eq!(m.get(0, 1), 0);
        assert_eq!(m.max_value(), 0);
    }

    #[test]
    fn hello_goodbye_hello() {
        let c = Corpus::assemble(
            [HELLO, GOODBYE, HELLO]
                .iter()
                .enumerate()
                .map(|(i, s)| Submission {
                    question_id: 0,
                    repetition: i as u32,
                    session_id: None,
                    source_path: None,
                    origin: String::new(),
                    content: SubmissionContent::Source((*s).into()),
                })
                .collect(),
        );
        let (m, report) = compute_matrix(&c, &ComputeOptions::default()).unwrap();
        assert_eq!((m.get(0, 1), m.get(1, 2), m.get(0, 2)), (1, 1, 0));
        assert_eq!(report.pairs_computed, 3);
    }

    #[test]
    fn too_few_programs() {
        let c = corpus(&[HELLO]);
        assert!(matches!(
            compute_matrix(&c, &ComputeOptions::default()),
            Err(DistmatError::TooFewPrograms(1))
        ));
    }

    #[test]
    fn size_guard_names_the_pair() {
        let c = corpus(&["x = 1", "y = [1, 2, 3, 4, 5, 6]"]);
        let options = ComputeOptions {
            distance: TreeEditDistance::default().with_max_nodes(5),
            ..Default::default()
        };
        match compute_matrix(&c, &options) {
            Err(DistmatError::Ted { i: 1, j: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn submatrix_by_group() {
        let values = vec![
            0, 1, 2, //
            1, 0, 3, //
            2, 3, 0,
        ];
        let m = DistanceMatrix::new(3, values, vec![10, 11, 12], vec![Some(0), Some(1), Some(0)])
            .unwrap();
        let g0 = m.submatrix(0).unwrap();
        assert_eq!(g0.len(), 2);
        assert_eq!(g0.get(0, 1), 2);
        assert_eq!(g0.program_ids(), [10, 12]);
        let g1 = m.submatrix(1).unwrap();
        assert_eq!((g1.len(), g1.get(0, 0)), (1, 0));
        assert_eq!(
            m.groups()
                .iter()
                .map(|&g| m.submatrix(g).unwrap().len())
                .sum::<usize>(),
            3
        );
        assert!(matches!(m.submatrix(5), Err(DistmatError::UnknownGroup(5))));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.dmat.csv");
        let m =
            DistanceMatrix::new(2, vec![0, 7, 7, 0], vec![3, 4], vec![Some(1), Some(2)]).unwrap();
        m.save(&path, Some("abc".into())).unwrap();
        assert!(dir.path().join("x.dmat.meta.json").exists());
        let (back, meta) = DistanceMatrix::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(meta.unwrap().corpus_digest.as_deref(), Some("abc"));
        assert_eq!(fs::read_to_string(&path).unwrap(), "n,2\n0,7\n7,0\n");
    }

    #[test]
    fn load_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.dmat.csv");
        fs::write(&path, "n,2\n0,1\n2,0\n").unwrap();
        assert!(matches!(
            DistanceMatrix::load(&path),
            Err(DistmatError::Validation(_))
        ));
        fs::write(&path, "n,2\n0,-1\n-1,0\n").unwrap();
        assert!(matches!(
            DistanceMatrix::load(&path),
            Err(DistmatError::Validation(_))
        ));
        fs::write(&path, "n,3\n0,1\n1,0\n").unwrap();
        assert!(matches!(
            DistanceMatrix::load(&path),
            Err(DistmatError::Format { .. })
        ));
        fs::write(&path, "n,2\n0,1,2\n1,0\n").unwrap();
        assert!(matches!(
            DistanceMatrix::load(&path),
            Err(DistmatError::Format { .. })
        ));
    }

    #[test]
    fn meta_path_naming() {
        assert_eq!(
            meta_path(Path::new("a/b.dmat.csv")),
            Path::new("a/b.dmat.meta.json")
        );
        assert_eq!(meta_path(Path::new("m.csv")), Path::new("m.csv.meta.json"));
    }

    #[test]
    fn checkpoint_digest_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = dir.path().join("run.dmat.ckpt");
        let options = ComputeOptions {
            checkpoint: Some(ckpt.clone()),
            block_size: 1,
            ..Default::default()
        };
        compute_matrix(&corpus(&[HELLO, GOODBYE, "x = 1"]), &options).unwrap();
        let err = compute_matrix(&corpus(&[HELLO, GOODBYE, "x = 2"]), &options).unwrap_err();
        assert!(matches!(err, DistmatError::DigestMismatch { .. }));
    }
}
