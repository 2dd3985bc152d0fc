use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::output::{RiskOutput, WireResponse};
use super::server::{HttpRiskRequest, StdioRiskRequest, RISK_ROUTE};
use super::toy::{toy_model_eval, ToyLmpiModelSpec};
use super::ModelError;
use crate::volume::{io as vio, VolumeGrid};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Anything that maps a volume to a risk output in-process.
pub trait RiskModel: Send + Sync {
    fn predict(&self, volume: &VolumeGrid) -> Result<RiskOutput, ModelError>;
}

impl RiskModel for ToyLmpiModelSpec {
    fn predict(&self, volume: &VolumeGrid) -> Result<RiskOutput, ModelError> {
        toy_model_eval(self, volume)
    }
}

/// Serializable description of how to reach a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "lowercase")]
pub enum TransportSpec {
    Toy { spec: ToyLmpiModelSpec },
    Subprocess { command: Vec<String> },
    Http { endpoint: String },
}

struct StdioClient {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    scratch: tempfile::TempDir,
    next: u64,
    broken: bool,
}

impl Drop for StdioClient {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

enum Backend {
    InProcess(Arc<dyn RiskModel>),
    Subprocess(Mutex<StdioClient>),
    Http { agent: ureq::Agent, url: String },
}

/// A black-box model reachable in-process, through a child process, or
/// over HTTP. Every query increments the counter exactly once.
pub struct ModelHandle {
    backend: Backend,
    timeout: Duration,
    queries: AtomicU64,
}

impl std::fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelHandle")
            .field("transport", &self.transport_name())
            .field("queries", &self.queries())
            .finish()
    }
}

impl ModelHandle {
    pub fn in_process(model: Arc<dyn RiskModel>) -> Self {
        Self {
            backend: Backend::InProcess(model),
            timeout: DEFAULT_TIMEOUT,
            queries: AtomicU64::new(0),
        }
    }

    pub fn toy(spec: ToyLmpiModelSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        Ok(Self::in_process(Arc::new(spec)))
    }

    /// Spawn `command` and speak newline-delimited JSON on its stdio.
    pub fn subprocess(command: &[String], timeout: Duration) -> Result<Self, ModelError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| ModelError::Transport("empty subprocess command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            backend: Backend::Subprocess(Mutex::new(StdioClient {
                child,
                stdin,
                lines: rx,
                scratch: tempfile::tempdir()?,
                next: 0,
                broken: false,
            })),
            timeout,
            queries: AtomicU64::new(0),
        })
    }

    /// POST volumes to `<endpoint>/v1/risk`.
    pub fn http(endpoint: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}{}", endpoint.trim_end_matches('/'), RISK_ROUTE);
        Self {
            backend: Backend::Http { agent, url },
            timeout,
            queries: AtomicU64::new(0),
        }
    }

    pub fn from_spec(spec: &TransportSpec, timeout: Duration) -> Result<Self, ModelError> {
        match spec {
            TransportSpec::Toy { spec } => Self::toy(spec.clone()),
            TransportSpec::Subprocess { command } => Self::subprocess(command, timeout),
            TransportSpec::Http { endpoint } => Ok(Self::http(endpoint, timeout)),
        }
    }

    pub fn transport_name(&self) -> &'static str {
        match self.backend {
            Backend::InProcess(_) => "in-process",
            Backend::Subprocess(_) => "subprocess",
            Backend::Http { .. } => "http",
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::SeqCst)
    }

    pub fn reset_queries(&self) {
        self.queries.store(0, Ordering::SeqCst);
    }

    pub fn query_risk(&self, volume: &VolumeGrid) -> Result<RiskOutput, ModelError> {
        self.queries.fetch_add(1, Ordering::SeqCst);
        match &self.backend {
            Backend::InProcess(m) => m.predict(volume),
            Backend::Subprocess(client) => {
                let mut c = client.lock().map_err(|_| ModelError::Transport("client poisoned".into()))?;
                query_stdio(&mut c, volume, self.timeout)
            }
            Backend::Http { agent, url } => query_http(agent, url, volume),
        }
    }
}

fn parse_reply(text: &str) -> Result<RiskOutput, ModelError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ModelError::Protocol(format!("malformed response: {e}")))?;
    if let Some(msg) = value.get("error") {
        return Err(ModelError::Remote(msg.as_str().unwrap_or("unknown").to_string()));
    }
    let wire: WireResponse =
        serde_json::from_value(value).map_err(|e| ModelError::Protocol(format!("malformed response: {e}")))?;
    RiskOutput::from_wire(&wire)
}

fn query_stdio(c: &mut StdioClient, volume: &VolumeGrid, timeout: Duration) -> Result<RiskOutput, ModelError> {
    if c.broken {
        return Err(ModelError::Transport("subprocess unusable after an earlier failure".into()));
    }
    c.next += 1;
    let path = c.scratch.path().join(format!("query-{}.json", c.next));
    vio::write_volume(&path, volume)?;
    let request = serde_json::to_string(&StdioRiskRequest {
        volume_path: path.to_string_lossy().into_owned(),
    })?;
    let sent = writeln!(c.stdin, "{request}").and_then(|_| c.stdin.flush());
    let reply = match sent {
        Ok(()) => c.lines.recv_timeout(timeout),
        Err(e) => {
            c.broken = true;
            return Err(ModelError::Transport(format!("writing request: {e}")));
        }
    };
    let _ = std::fs::remove_file(&path);
    let _ = std::fs::remove_file(path.with_extension("raw"));
    match reply {
        Ok(Ok(line)) => parse_reply(&line),
        Ok(Err(e)) => {
            c.broken = true;
            Err(ModelError::Transport(format!("reading response: {e}")))
        }
        Err(RecvTimeoutError::Timeout) => {
            // A late reply would desynchronise the stream.
            c.broken = true;
            Err(ModelError::Timeout)
        }
        Err(RecvTimeoutError::Disconnected) => {
            c.broken = true;
            Err(ModelError::Transport("subprocess closed its output".into()))
        }
    }
}

fn query_http(agent: &ureq::Agent, url: &str, volume: &VolumeGrid) -> Result<RiskOutput, ModelError> {
    let body = serde_json::to_string(&HttpRiskRequest::encode(volume))?;
    let mut resp = agent
        .post(url)
        .header("Content-Type", "application/json")
        .send(body)
        .map_err(|e| match e {
            ureq::Error::Timeout(_) => ModelError::Timeout,
            other => ModelError::Transport(other.to_string()),
        })?;
    let status = resp.status();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| ModelError::Transport(e.to_string()))?;
    if !status.is_success() {
        return match parse_reply(&text) {
            Err(ModelError::Remote(msg)) => Err(ModelError::Remote(msg)),
            _ => Err(ModelError::Transport(format!("HTTP {status}"))),
        };
    }
    parse_reply(&text)
}
