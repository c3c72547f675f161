//! Query chat-completion endpoints with the question set and store every reply
//! as one JSON line.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use progspace_core::corpus::RawResponse;
use progspace_core::fsutil::write_atomic;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, info, warn};

pub const DEFAULT_REPETITIONS: u32 = 100;
pub const DEFAULT_CONCURRENCY: usize = 2;
pub const DEFAULT_MAX_RETRIES: u32 = 5;

/// The seven image-thresholding questions, indexed by question id.
pub fn default_questions() -> Vec<String> {
    [
        "Write a function which thresholds an image.",
        "Write a function which segments an image using thresholding.",
        "Write a program which thresholds an image.",
        "Write a python function that segments an image using Otsu's threshold from opencv. \
         The function must check that the input is a gray value 2d np.arrays, \
         and it is not to perform noise reduction.",
        "Write a function which takes an image as input and returns a segmentation using Otsu thresholding.",
        "Write a function which takes an image as input and returns a segmentation using thresholding.",
        "Act as an experienced python programmer. Write a function which takes an image as input \
         and returns a segmentation using Otsu thresholding.",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    /// Full URL of the chat-completions route.
    pub endpoint_url: String,
    pub model_name: String,
    /// Environment variable holding a bearer token; `None` sends no
    /// credentials.
    pub api_key_env: Option<String>,
    pub questions: Vec<String>,
    pub repetitions: u32,
    /// Sent only when set, otherwise the endpoint default applies.
    pub temperature: Option<f64>,
    pub request_timeout: Duration,
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub retry_base_delay: Duration,
    pub concurrency: usize,
    /// Session to append to. `None` continues the session found in the output
    /// file, or starts a new one.
    pub session_id: Option<String>,
}

impl SessionConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            api_key_env: None,
            questions: default_questions(),
            repetitions: DEFAULT_REPETITIONS,
            temperature: None,
            request_timeout: Duration::from_secs(120),
            max_retries: DEFAULT_MAX_RETRIES,
            retry_base_delay: Duration::from_millis(500),
            concurrency: DEFAULT_CONCURRENCY,
            session_id: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if let Some(t) = self.temperature {
            if !(0.0..=2.0).contains(&t) {
                return bad(format!("temperature {t} is outside [0, 2]"));
            }
        }
        if self.questions.is_empty() || self.questions.len() > usize::from(u8::MAX) + 1 {
            return bad(format!(
                "{} questions given; expected 1 to 256",
                self.questions.len()
            ));
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1".into());
        }
        if self.endpoint_url.trim().is_empty() {
            return bad("endpoint url is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("http client: {0}")]
    Client(#[from] reqwest::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub tool_version: String,
    pub session_id: String,
    pub model_name: String,
    pub endpoint_url: String,
    pub temperature: Option<f64>,
    pub questions: usize,
    pub repetitions: u32,
    /// (question, repetition) pairs already answered before this run.
    pub resumed: usize,
    pub requested: usize,
    pub succeeded: usize,
    pub failed: usize,
    /// Retries across all requests of this run.
    pub retries: u64,
    pub elapsed_seconds: f64,
}

impl SessionSummary {
    pub fn write(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, |out| {
            serde_json::to_writer_pretty(&mut *out, self)?;
            out.write_all(b"\n")
        })
    }
}

/// Blocking wrapper around [`run_session`] on a private runtime.
pub fn run_session_blocking(
    config: &SessionConfig,
    out_path: &Path,
) -> Result<SessionSummary, HarnessError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(run_session(config, out_path))
}

/// Asks every (question, repetition) pair not yet answered in `out_path` and
/// appends each reply as soon as it arrives.
pub async fn run_session(
    config: &SessionConfig,
    out_path: &Path,
) -> Result<SessionSummary, HarnessError> {
    config.validate()?;
    let key = match &config.api_key_env {
        Some(var) => Some(std::env::var(var).map_err(|_| HarnessError::MissingKey(var.clone()))?),
        None => None,
    };
    let previous = scan_output(out_path)?;
    let session_id = config
        .session_id
        .clone()
        .or(previous.last_session)
        .unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
    let done: HashSet<(u8, u32)> = previous
        .answered
        .iter()
        .filter(|(sid, _)| *sid == session_id)
        .map(|(_, pair)| *pair)
        .collect();
    let pending: Vec<(u8, u32)> = (0..config.questions.len())
        .flat_map(|q| (0..config.repetitions).map(move |r| (q as u8, r)))
        .filter(|pair| !done.contains(pair))
        .collect();
    info!(
        session = %session_id,
        resumed = done.len(),
        pending = pending.len(),
        "starting session"
    );

    let client = reqwest::Client::builder()
        .timeout(config.request_timeout)
        .build()?;
    let mut out = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out_path)?;
    let start = Instant::now();
    let mut summary = SessionSummary {
        tool_version: progspace_core::VERSION.to_owned(),
        session_id: session_id.clone(),
        model_name: config.model_name.clone(),
        endpoint_url: config.endpoint_url.clone(),
        temperature: config.temperature,
        questions: config.questions.len(),
        repetitions: config.repetitions,
        resumed: done.len(),
        requested: pending.len(),
        succeeded: 0,
        failed: 0,
        retries: 0,
        elapsed_seconds: 0.0,
    };

    let requests = stream::iter(pending)
        .map(|(q, rep)| {
            let (client, key, session_id) = (&client, key.as_deref(), &session_id);
            async move {
                let reply = ask(client, config, key, &config.questions[usize::from(q)]).await;
                (q, rep, session_id.clone(), reply)
            }
        })
        .buffer_unordered(config.concurrency);
    futures::pin_mut!(requests);
    while let Some((question_id, repetition, session_id, reply)) = requests.next().await {
        summary.retries += u64::from(reply.retries);
        let record = RawResponse {
            session_id,
            question_id,
            repetition,
            temperature: config.temperature,
            failed: reply.error.is_some(),
            response_text: reply.text,
            error: reply.error,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        if record.failed {
            summary.failed += 1;
            warn!(
                question_id,
                repetition,
                error = record.error.as_deref().unwrap_or(""),
                "request failed"
            );
        } else {
            summary.succeeded += 1;
            debug!(question_id, repetition, "response stored");
        }
        let mut line = serde_json::to_string(&record).map_err(io::Error::from)?;
        line.push('\n');
        out.write_all(line.as_bytes())?;
        out.flush()?;
    }
    out.sync_data()?;
    summary.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}

struct Reply {
    text: String,
    error: Option<String>,
    retries: u32,
}

async fn ask(
    client: &reqwest::Client,
    config: &SessionConfig,
    key: Option<&str>,
    question: &str,
) -> Reply {
    let mut body = serde_json::json!({
        "model": config.model_name,
        "messages": [{"role": "user", "content": question}],
    });
    if let Some(t) = config.temperature {
        body["temperature"] = t.into();
    }
    let mut retries = 0;
    loop {
        let mut request = client.post(&config.endpoint_url).json(&body);
        if let Some(key) = key {
            request = request.bearer_auth(key);
        }
        let (transient, text) = match request.send().await {
            Err(e) => (
                format!("transport error: {}", e.without_url()),
                String::new(),
            ),
            Ok(response) => {
                let status = response.status();
                match response.text().await {
                    Err(e) => (
                        format!("transport error: {}", e.without_url()),
                        String::new(),
                    ),
                    Ok(text) if status.is_success() => {
                        return match completion_text(&text) {
                            Some(content) => Reply {
                                text: content,
                                error: None,
                                retries,
                            },
                            None => Reply {
                                text,
                                error: Some(
                                    "malformed response: no choices[0].message.content".into(),
                                ),
                                retries,
                            },
                        };
                    }
                    Ok(text) if status.as_u16() == 429 || status.is_server_error() => {
                        (format!("HTTP {status}"), text)
                    }
                    Ok(text) => {
                        return Reply {
                            text,
                            error: Some(format!("HTTP {status}")),
                            retries,
                        }
                    }
                }
            }
        };
        if retries >= config.max_retries {
            return Reply {
                text,
                error: Some(format!("{transient} (gave up after {retries} retries)")),
                retries,
            };
        }
        tokio::time::sleep(config.retry_base_delay.saturating_mul(1 << retries.min(16))).await;
        retries += 1;
    }
}

fn completion_text(body: &str) -> Option<String> {
    let value: serde_json::Value = serde_json::from_str(body).ok()?;
    value
        .get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(String::from)
}

#[derive(Default)]
struct PreviousOutput {
    last_session: Option<String>,
    answered: Vec<(String, (u8, u32))>,
}

/// Reads an existing output file. A final line cut off mid-write is removed
/// so new records start on a fresh line.
fn scan_output(path: &Path) -> Result<PreviousOutput, HarnessError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(PreviousOutput::default()),
        Err(e) => return Err(e.into()),
    };
    let mut previous = PreviousOutput::default();
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut complete_len = 0u64;
    loop {
        line.clear();
        let read = reader.read_line(&mut line)?;
        if read == 0 {
            break;
        }
        if !line.ends_with('\n') {
            warn!(path = %path.display(), "dropping incomplete final line");
            break;
        }
        complete_len += read as u64;
        match serde_json::from_str::<RawResponse>(&line) {
            Ok(record) => {
                previous.last_session = Some(record.session_id.clone());
                if !record.failed {
                    previous
                        .answered
                        .push((record.session_id, (record.question_id, record.repetition)));
                }
            }
            Err(e) => warn!(error = %e, "skipping unreadable line in existing output"),
        }
    }
    if complete_len < fs::metadata(path)?.len() {
        OpenOptions::new()
            .write(true)
            .open(path)?
            .set_len(complete_len)?;
    }
    Ok(previous)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn questions_verbatim() {
        let q = default_questions();
        assert_eq!(q.len(), 7);
        assert_eq!(q[0], "Write a function which thresholds an image.");
        assert_eq!(q[2], "Write a program which thresholds an image.");
        assert!(q[3].contains("Otsu's threshold from opencv. The function must check"));
        assert!(q[6].starts_with("Act as an experienced python programmer. Write a function"));
    }

    #[test]
    fn config_checks() {
        let mut c = SessionConfig::new("http://localhost/v1/chat/completions", "m");
        assert!(c.validate().is_ok());
        c.temperature = Some(2.5);
        assert!(c.validate().is_err());
        c.temperature = Some(0.9);
        c.repetitions = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn completion_extraction() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#;
        assert_eq!(completion_text(body).as_deref(), Some("hi"));
        assert_eq!(completion_text("{}"), None);
        assert_eq!(completion_text("not json"), None);
    }
}
