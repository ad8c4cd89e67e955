//! Client for an out-of-process sentence metric.
//!
//! Wire format, over HTTP (`POST {base}/v1/score`) or as one JSON object per
//! line on a child process's stdin/stdout:
//!
//! ```text
//! request:  {"pairs": [{"hyp": "...", "ref": "..."}, ...], "metric": "..."}
//! response: {"scores": [0.93, ...]}
//! ```
//!
//! Scores come back in request order and must lie in `[0, 1]`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub hyp: String,
    #[serde(rename = "ref")]
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub pairs: Vec<ScorePair>,
    pub metric: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StdioReply {
    Scores(ScoreResponse),
    Failure { error: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transport {
    /// Base URL of the adapter, e.g. `http://127.0.0.1:8080`.
    Http { base_url: String },
    /// Program and arguments of an adapter speaking the line protocol.
    Stdio { command: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterConfig {
    pub transport: Transport,
    pub metric: String,
    pub timeout: Duration,
    /// Extra attempts after a transport failure (HTTP only).
    pub retries: u32,
    /// Whether the remote metric is known to satisfy `u(a, b) = u(b, a)`.
    pub symmetric: bool,
}

impl AdapterConfig {
    pub fn http(base_url: impl Into<String>, metric: impl Into<String>) -> AdapterConfig {
        AdapterConfig {
            transport: Transport::Http {
                base_url: base_url.into(),
            },
            metric: metric.into(),
            timeout: Duration::from_secs(30),
            retries: 2,
            symmetric: false,
        }
    }
}

struct StdioChannel {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    broken: bool,
}

impl Drop for StdioChannel {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

enum Backend {
    Http(ureq::Agent),
    Stdio(Mutex<StdioChannel>),
}

pub struct AdapterClient {
    config: AdapterConfig,
    backend: Backend,
}

impl std::fmt::Debug for AdapterClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdapterClient")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

fn spawn_line_reader<R: BufRead + Send + 'static>(reader: R) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in reader.lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    rx
}

impl AdapterClient {
    /// Connects according to `config.transport`. For stdio this spawns the
    /// adapter process; HTTP connections are opened lazily.
    pub fn connect(config: AdapterConfig) -> Result<AdapterClient> {
        let backend = match &config.transport {
            Transport::Http { .. } => {
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .timeout_global(Some(config.timeout))
                    .http_status_as_error(false)
                    .build()
                    .into();
                Backend::Http(agent)
            }
            Transport::Stdio { command } => {
                let (program, args) = command.split_first().ok_or_else(|| {
                    Error::AdapterUnavailable("empty adapter command".into())
                })?;
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| Error::AdapterUnavailable(format!("spawn {program}: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Backend::Stdio(Mutex::new(StdioChannel {
                    writer: Box::new(stdin),
                    lines: spawn_line_reader(BufReader::new(stdout)),
                    child: Some(child),
                    broken: false,
                }))
            }
        };
        Ok(AdapterClient { config, backend })
    }

    /// Speaks the line protocol over arbitrary streams instead of a child
    /// process. `transport` in `config` is ignored.
    pub fn from_streams<R, W>(config: AdapterConfig, reader: R, writer: W) -> AdapterClient
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        AdapterClient {
            config,
            backend: Backend::Stdio(Mutex::new(StdioChannel {
                writer: Box::new(writer),
                lines: spawn_line_reader(reader),
                child: None,
                broken: false,
            })),
        }
    }

    pub fn config(&self) -> &AdapterConfig {
        &self.config
    }

    /// Scores `(hyp, ref)` pairs in one round trip. Output order matches
    /// input order.
    pub fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let request = ScoreRequest {
            pairs: pairs
                .iter()
                .map(|(h, r)| ScorePair {
                    hyp: (*h).to_owned(),
                    reference: (*r).to_owned(),
                })
                .collect(),
            metric: self.config.metric.clone(),
        };
        let response = match &self.backend {
            Backend::Http(agent) => self.post_with_retries(agent, &request)?,
            Backend::Stdio(channel) => self.exchange_line(channel, &request)?,
        };
        check_scores(&response.scores, pairs.len())?;
        Ok(response.scores)
    }

    fn post_with_retries(&self, agent: &ureq::Agent, request: &ScoreRequest) -> Result<ScoreResponse> {
        let Transport::Http { base_url } = &self.config.transport else {
            unreachable!("http backend without http transport");
        };
        let url = format!("{}/v1/score", base_url.trim_end_matches('/'));
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                log::warn!("retrying metric adapter ({attempt}/{}): {last}", self.config.retries);
            }
            let mut resp = match agent.post(&url).send_json(request) {
                Ok(resp) => resp,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            if status >= 500 {
                last = format!("HTTP {status}");
                continue;
            }
            if status != 200 {
                let body = resp.body_mut().read_to_string().unwrap_or_default();
                return Err(Error::AdapterProtocol(format!("HTTP {status}: {body}")));
            }
            return resp
                .body_mut()
                .read_json::<ScoreResponse>()
                .map_err(|e| Error::AdapterProtocol(format!("bad response body: {e}")));
        }
        Err(Error::AdapterUnavailable(format!("{url}: {last}")))
    }

    fn exchange_line(&self, channel: &Mutex<StdioChannel>, request: &ScoreRequest) -> Result<ScoreResponse> {
        let mut ch = channel
            .lock()
            .map_err(|_| Error::AdapterUnavailable("adapter channel poisoned".into()))?;
        if ch.broken {
            return Err(Error::AdapterUnavailable(
                "adapter stream is out of sync after an earlier failure".into(),
            ));
        }
        let mut line = serde_json::to_string(request).expect("request serializes");
        line.push('\n');
        if let Err(e) = ch.writer.write_all(line.as_bytes()).and_then(|_| ch.writer.flush()) {
            ch.broken = true;
            return Err(Error::AdapterUnavailable(format!("write to adapter: {e}")));
        }
        let reply = match ch.lines.recv_timeout(self.config.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => {
                ch.broken = true;
                return Err(Error::AdapterUnavailable(format!("read from adapter: {e}")));
            }
            Err(RecvTimeoutError::Timeout) => {
                ch.broken = true;
                return Err(Error::AdapterUnavailable(format!(
                    "no reply within {:?}",
                    self.config.timeout
                )));
            }
            Err(RecvTimeoutError::Disconnected) => {
                ch.broken = true;
                return Err(Error::AdapterUnavailable("adapter closed its output".into()));
            }
        };
        match serde_json::from_str::<StdioReply>(&reply) {
            Ok(StdioReply::Scores(r)) => Ok(r),
            Ok(StdioReply::Failure { error }) => Err(Error::AdapterProtocol(error)),
            Err(e) => Err(Error::AdapterProtocol(format!("unparseable reply {reply:?}: {e}"))),
        }
    }
}

fn check_scores(scores: &[f64], expected: usize) -> Result<()> {
    if scores.len() != expected {
        return Err(Error::AdapterProtocol(format!(
            "expected {expected} scores, got {}",
            scores.len()
        )));
    }
    for (index, &score) in scores.iter().enumerate() {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::AdapterRangeViolation { index, score });
        }
    }
    Ok(())
}
