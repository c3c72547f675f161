//! From model responses to a corpus of normalized syntax trees.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::python::parse_program;
use crate::tree::{SyntaxTree, TreeFormatError};

/// Number of questions in the default prompt set.
pub const QUESTION_COUNT: u8 = 7;

/// One stored reply from a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub session_id: String,
    pub question_id: u8,
    pub repetition: u32,
    pub temperature: Option<f64>,
    pub response_text: String,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("input path does not exist: {0}")]
    Missing(PathBuf),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("manifest line {line}: {source}")]
    Tree {
        line: usize,
        #[source]
        source: TreeFormatError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A parsed program. `program_id` is its row in every distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub program_id: usize,
    pub question_id: u8,
    pub repetition: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<PathBuf>,
    pub source: String,
    #[serde(with = "bracket")]
    pub tree: SyntaxTree,
}

/// An input that produced no program. Rejected inputs are never assigned a
/// `program_id`, so the field is always `None` for them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedInput {
    pub program_id: Option<usize>,
    pub question_id: Option<u8>,
    pub repetition: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub programs: Vec<Program>,
    pub error_log: Vec<RejectedInput>,
}

/// Concatenates the bodies of all fenced code blocks, in document order,
/// separated by newlines. Any info string is accepted; an unterminated fence
/// runs to the end of the text.
pub fn extract_code_blocks(response_text: &str) -> String {
    let mut blocks: Vec<String> = Vec::new();
    let mut current: Option<(usize, usize, Vec<&str>)> = None;
    for line in response_text.lines() {
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();
        let ticks = trimmed.bytes().take_while(|&b| b == b'`').count();
        match current.as_mut() {
            None => {
                if ticks >= 3 && !trimmed[ticks..].contains('`') {
                    current = Some((ticks, indent, Vec::new()));
                }
            }
            Some((open_ticks, open_indent, body)) => {
                if ticks >= *open_ticks && trimmed[ticks..].trim().is_empty() {
                    blocks.push(body.join("\n"));
                    current = None;
                } else {
                    body.push(strip_indent(line, *open_indent));
                }
            }
        }
    }
    if let Some((_, _, body)) = current {
        blocks.push(body.join("\n"));
    }
    blocks.join("\n")
}

fn strip_indent(line: &str, indent: usize) -> &str {
    let spaces = line.bytes().take(indent).take_while(|&b| b == b' ').count();
    &line[spaces..]
}

/// One unit of work for corpus assembly.
#[derive(Debug, Clone)]
pub struct Submission {
    pub question_id: u8,
    pub repetition: u32,
    pub session_id: Option<String>,
    pub source_path: Option<PathBuf>,
    pub origin: String,
    pub content: SubmissionContent,
}

#[derive(Debug, Clone)]
pub enum SubmissionContent {
    /// Raw program text.
    Source(String),
    /// A model reply; code is taken from its fenced blocks.
    Response(String),
    /// Collection failed upstream.
    Failed(String),
    /// Input was unreadable before any parsing.
    Invalid(String),
}

impl Corpus {
    /// Parses submissions in parallel and assembles them in
    /// (question_id, repetition, session) order.
    pub fn assemble(mut inputs: Vec<Submission>) -> Corpus {
        inputs.sort_by(|a, b| {
            (a.question_id, a.repetition, &a.session_id, &a.origin).cmp(&(
                b.question_id,
                b.repetition,
                &b.session_id,
                &b.origin,
            ))
        });
        let outcomes: Vec<Result<(String, SyntaxTree), String>> = inputs
            .par_iter()
            .map(|s| match &s.content {
                SubmissionContent::Source(src) => parse_program(src)
                    .map(|t| (src.clone(), t))
                    .map_err(|e| e.to_string()),
                SubmissionContent::Response(text) => {
                    let code = extract_code_blocks(text);
                    if code.trim().is_empty() {
                        Err("no fenced code block in response".to_owned())
                    } else {
                        parse_program(&code)
                            .map(|t| (code, t))
                            .map_err(|e| e.to_string())
                    }
                }
                SubmissionContent::Failed(reason) => Err(format!("collection failed: {reason}")),
                SubmissionContent::Invalid(reason) => Err(reason.clone()),
            })
            .collect();
        let mut corpus = Corpus::default();
        for (input, outcome) in inputs.into_iter().zip(outcomes) {
            match outcome {
                Ok((source, tree)) => corpus.programs.push(Program {
                    program_id: corpus.programs.len(),
                    question_id: input.question_id,
                    repetition: input.repetition,
                    session_id: input.session_id,
                    source_path: input.source_path,
                    source,
                    tree,
                }),
                Err(reason) => corpus.error_log.push(RejectedInput {
                    program_id: None,
                    question_id: Some(input.question_id),
                    repetition: Some(input.repetition),
                    origin: Some(input.origin),
                    reason,
                }),
            }
        }
        corpus
    }

    /// Reads a directory of `q<question>_r<repetition>.py` files. Other files
    /// are ignored.
    pub fn from_directory(dir: &Path) -> Result<Corpus, CorpusError> {
        if !dir.exists() {
            return Err(CorpusError::Missing(dir.to_path_buf()));
        }
        let mut inputs = Vec::new();
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some((question_id, repetition)) = parse_file_name(name) else {
                tracing::debug!(file = name, "skipping file without q<N>_r<M>.py name");
                continue;
            };
            let content = if question_id >= QUESTION_COUNT {
                SubmissionContent::Invalid(format!("question id {question_id} out of range"))
            } else {
                match fs::read(&path) {
                    Ok(bytes) => match String::from_utf8(bytes) {
                        Ok(text) => SubmissionContent::Source(text),
                        Err(_) => SubmissionContent::Invalid("source is not valid UTF-8".into()),
                    },
                    Err(e) => return Err(io_err(&path)(e)),
                }
            };
            inputs.push(Submission {
                question_id,
                repetition,
                session_id: None,
                origin: name.to_owned(),
                source_path: Some(path),
                content,
            });
        }
        Ok(Corpus::assemble(inputs))
    }

    /// Reads a JSONL file of [`RawResponse`] records.
    ///
    /// When a (session, question, repetition) key appears more than once (a
    /// resumed collection retrying a failure) the last successful record wins,
    /// or the last record if none succeeded. Malformed lines are logged.
    pub fn from_responses(path: &Path) -> Result<Corpus, CorpusError> {
        if !path.exists() {
            return Err(CorpusError::Missing(path.to_path_buf()));
        }
        let file = fs::File::open(path).map_err(io_err(path))?;
        let mut latest: BTreeMap<(String, u8, u32), (usize, RawResponse)> = BTreeMap::new();
        let mut rejected = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record = match serde_json::from_str::<RawResponse>(&line) {
                Ok(r) if r.question_id < QUESTION_COUNT => r,
                Ok(r) => {
                    rejected.push(RejectedInput {
                        program_id: None,
                        question_id: Some(r.question_id),
                        repetition: Some(r.repetition),
                        origin: Some(format!("line {line_no}")),
                        reason: format!("question id {} out of range", r.question_id),
                    });
                    continue;
                }
                Err(e) => {
                    rejected.push(RejectedInput {
                        program_id: None,
                        question_id: None,
                        repetition: None,
                        origin: Some(format!("line {line_no}")),
                        reason: format!("malformed record: {e}"),
                    });
                    continue;
                }
            };
            let key = (
                record.session_id.clone(),
                record.question_id,
                record.repetition,
            );
            let replace = match latest.get(&key) {
                None => true,
                Some((_, previous)) => !record.failed || previous.failed,
            };
            if replace {
                latest.insert(key, (line_no, record));
            }
        }
        let inputs = latest
            .into_values()
            .map(|(line_no, r)| Submission {
                question_id: r.question_id,
                repetition: r.repetition,
                session_id: Some(r.session_id),
                source_path: None,
                origin: format!("line {line_no}"),
                content: if r.failed {
                    SubmissionContent::Failed(r.error.unwrap_or_else(|| "unknown".into()))
                } else {
                    SubmissionContent::Response(r.response_text)
                },
            })
            .collect();
        let mut corpus = Corpus::assemble(inputs);
        rejected.extend(corpus.error_log);
        corpus.error_log = rejected;
        Ok(corpus)
    }

    /// Dispatches on the path: directories hold source files, anything else
    /// is read as a responses JSONL.
    pub fn ingest(path: &Path) -> Result<Corpus, CorpusError> {
        if path.is_dir() {
            Self::from_directory(path)
        } else {
            Self::from_responses(path)
        }
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    pub fn trees(&self) -> impl Iterator<Item = &SyntaxTree> {
        self.programs.iter().map(|p| &p.tree)
    }

    /// SHA-256 over the bracket serialization of every tree, one per line, in
    /// `program_id` order.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.programs {
            hasher.update(p.tree.to_bracket().as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    pub fn write_manifest(&self, out: &mut impl Write) -> io::Result<()> {
        for p in &self.programs {
            serde_json::to_writer(&mut *out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_error_log(&self, out: &mut impl Write) -> io::Result<()> {
        for e in &self.error_log {
            serde_json::to_writer(&mut *out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Writes the `.trees` exchange file: one bracket tree per line.
    pub fn write_trees(&self, out: &mut impl Write) -> io::Result<()> {
        for p in &self.programs {
            writeln!(out, "{}", p.tree.to_bracket())?;
        }
        Ok(())
    }

    /// Reads a manifest written by [`Corpus::write_manifest`]. Program ids
    /// must be dense and in order.
    pub fn read_manifest(path: &Path) -> Result<Corpus, CorpusError> {
        if !path.exists() {
            return Err(CorpusError::Missing(path.to_path_buf()));
        }
        let file = fs::File::open(path).map_err(io_err(path))?;
        let mut corpus = Corpus::default();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let program: Program =
                serde_json::from_str(&line).map_err(|e| CorpusError::Manifest {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if program.program_id != corpus.programs.len() {
                return Err(CorpusError::Manifest {
                    line: idx + 1,
                    message: format!(
                        "expected program_id {}, found {}",
                        corpus.programs.len(),
                        program.program_id
                    ),
                });
            }
            corpus.programs.push(program);
        }
        Ok(corpus)
    }
}

/// `q3_r17.py` → (3, 17). Anything between the repetition and `.py` is
/// ignored, so `q3_r17.v2.py` also matches.
fn parse_file_name(name: &str) -> Option<(u8, u32)> {
    let stem = name.strip_suffix(".py")?;
    let rest = stem.strip_prefix('q')?;
    let (q, rest) = rest.split_once("_r")?;
    let rep: String = rest.chars().take_while(char::is_ascii_digit).collect();
    if q.is_empty() || rep.is_empty() || !q.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((q.parse().ok()?, rep.parse().ok()?))
}

mod bracket {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::tree::SyntaxTree;

    pub fn serialize<S: Serializer>(tree: &SyntaxTree, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&tree.to_bracket())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SyntaxTree, D::Error> {
        let text = String::deserialize(d)?;
        SyntaxTree::from_bracket(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(q: u8, rep: u32, text: &str) -> RawResponse {
        RawResponse {
            session_id: "s".into(),
            question_id: q,
            repetition: rep,
            temperature: Some(0.7),
            response_text: text.into(),
            timestamp: "2024-01-01T00:00:00Z".into(),
            failed: false,
            error: None,
        }
    }

    #[test]
    fn extracts_fences_in_order() {
        let text = "Here:\n```python\na=1\n```\nand then\n```\nprint(a)\n```\n";
        assert_eq!(extract_code_blocks(text), "a=1\nprint(a)");
    }

    #[test]
    fn no_fences_is_empty() {
        assert_eq!(extract_code_blocks("just prose, no code"), "");
    }

    #[test]
    fn shell_fences_are_kept() {
        let text = "Install:\n```bash\npip install opencv\n```";
        assert_eq!(extract_code_blocks(text), "pip install opencv");
        assert!(parse_program(&extract_code_blocks(text)).is_err());
    }

    #[test]
    fn indented_and_unterminated_fences() {
        let text = "1. step\n   ```python\n   x = 1\n     y = 2\n   ```\n```\nz = 3";
        assert_eq!(extract_code_blocks(text), "x = 1\n  y = 2\nz = 3");
    }

    #[test]
    fn inline_backticks_do_not_open() {
        assert_eq!(extract_code_blocks("use ```x``` inline"), "");
    }

    #[test]
    fn file_names() {
        assert_eq!(parse_file_name("q0_r12.py"), Some((0, 12)));
        assert_eq!(parse_file_name("q6_r3.orig.py"), Some((6, 3)));
        assert_eq!(parse_file_name("notes.py"), None);
        assert_eq!(parse_file_name("q1_r2.txt"), None);
    }

    #[test]
    fn directory_ingest() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("q1_r0.py"), "b = 2\n").unwrap();
        fs::write(dir.path().join("q0_r1.py"), "a = 1\nprint(a)\n").unwrap();
        fs::write(dir.path().join("q0_r0.py"), "print('hi')\n").unwrap();
        fs::write(dir.path().join("README.md"), "ignored").unwrap();
        let corpus = Corpus::from_directory(dir.path()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert!(corpus.error_log.is_empty());
        let order: Vec<(u8, u32)> = corpus
            .programs
            .iter()
            .map(|p| (p.question_id, p.repetition))
            .collect();
        assert_eq!(order, [(0, 0), (0, 1), (1, 0)]);
        assert_eq!(corpus.programs[2].program_id, 2);
    }

    #[test]
    fn missing_path() {
        assert!(matches!(
            Corpus::ingest(Path::new("/definitely/not/here")),
            Err(CorpusError::Missing(_))
        ));
    }

    #[test]
    fn jsonl_with_corrupt_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.jsonl");
        let mut lines = Vec::new();
        for rep in 0..9 {
            let r = response(0, rep, &format!("```python\nx = {rep}\nprint(x)\n```"));
            lines.push(serde_json::to_string(&r).unwrap());
        }
        lines.insert(4, "{\"session_id\": \"s\", truncated".into());
        fs::write(&path, lines.join("\n")).unwrap();
        let corpus = Corpus::from_responses(&path).unwrap();
        assert_eq!(corpus.len(), 9);
        assert_eq!(corpus.error_log.len(), 1);
        assert!(corpus.error_log[0].reason.starts_with("malformed record"));
    }

    #[test]
    fn unparseable_and_failed_responses_are_logged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.jsonl");
        let mut failed = response(1, 0, "");
        failed.failed = true;
        failed.error = Some("timeout".into());
        let records = [
            response(0, 0, "```\npip install opencv\n```"),
            response(0, 1, "no code here"),
            response(0, 2, "```python\nimport cv2\n```"),
            failed,
        ];
        let text: Vec<String> = records
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect();
        fs::write(&path, text.join("\n")).unwrap();
        let corpus = Corpus::from_responses(&path).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.error_log.len(), 3);
        assert_eq!(corpus.len() + corpus.error_log.len(), records.len());
        assert!(corpus.error_log.iter().all(|e| e.program_id.is_none()));
    }

    #[test]
    fn retried_failure_is_superseded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.jsonl");
        let mut failed = response(2, 5, "");
        failed.failed = true;
        let ok = response(2, 5, "```\nx = 1\n```");
        let text = [&failed, &ok, &failed]
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect::<Vec<_>>()
            .join("\n");
        fs::write(&path, text).unwrap();
        let corpus = Corpus::from_responses(&path).unwrap();
        assert_eq!(corpus.len(), 1);
        assert!(corpus.error_log.is_empty());
    }

    #[test]
    fn manifest_round_trip_and_digest() {
        let corpus = Corpus::assemble(vec![
            Submission {
                question_id: 0,
                repetition: 0,
                session_id: None,
                source_path: None,
                origin: "a".into(),
                content: SubmissionContent::Source("a = '{x}'\n".into()),
            },
            Submission {
                question_id: 0,
                repetition: 1,
                session_id: None,
                source_path: None,
                origin: "b".into(),
                content: SubmissionContent::Source("print(1)\n".into()),
            },
        ]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut file = fs::File::create(&path).unwrap();
        corpus.write_manifest(&mut file).unwrap();
        drop(file);
        let back = Corpus::read_manifest(&path).unwrap();
        assert_eq!(back.programs, corpus.programs);
        assert_eq!(back.digest(), corpus.digest());
        assert_eq!(corpus.digest().len(), 64);
    }
}
