//! Newline-delimited JSON protocol for agents living in a child process.
//!
//! Each request is one line:
//! `{"version":"v1","id":N,"type":"propose"|"critique","payload":{...}}`
//! and the agent answers with one line carrying the same `id`:
//! `{"version":"v1","id":N,"designs":[...]}` for proposals or
//! `{"version":"v1","id":N,"text":"...","claims":[{"rival":"...","claim":"..."}]}`
//! for critiques. Lines whose id does not match are ignored.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use crate::error::{ArenaError, Result};

pub const PROTOCOL_VERSION: &str = "v1";
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestType {
    Propose,
    Critique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub version: String,
    pub id: u64,
    #[serde(rename = "type")]
    pub kind: RequestType,
    pub payload: serde_json::Value,
}

/// Response line. Fields that do not apply to the request type are absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub version: String,
    pub id: u64,
    #[serde(default)]
    pub designs: Vec<serde_json::Value>,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub claims: Vec<RawClaim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A claim as received; the code is checked against the known set later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawClaim {
    pub rival: String,
    pub claim: String,
}

/// Request/response transport to one external agent.
pub trait AgentChannel: Send {
    fn call(&mut self, kind: RequestType, payload: serde_json::Value) -> Result<Response>;
}

/// Talks to an agent process over its standard input and output.
pub struct ChildProcessChannel {
    agent_id: String,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    timeout: Duration,
    next_id: u64,
}

impl ChildProcessChannel {
    pub fn spawn(agent_id: &str, command: &[String], timeout: Duration) -> Result<Self> {
        let unavailable = |reason: String| ArenaError::AgentUnavailable {
            agent: agent_id.to_string(),
            reason,
        };
        let (program, args) = command
            .split_first()
            .ok_or_else(|| unavailable("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| unavailable(format!("spawn failed: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ChildProcessChannel {
            agent_id: agent_id.to_string(),
            child,
            stdin,
            lines,
            timeout,
            next_id: 1,
        })
    }

    fn unavailable(&self, reason: impl Into<String>) -> ArenaError {
        ArenaError::AgentUnavailable {
            agent: self.agent_id.clone(),
            reason: reason.into(),
        }
    }
}

impl AgentChannel for ChildProcessChannel {
    fn call(&mut self, kind: RequestType, payload: serde_json::Value) -> Result<Response> {
        let id = self.next_id;
        self.next_id += 1;
        let request = Request {
            version: PROTOCOL_VERSION.into(),
            id,
            kind,
            payload,
        };
        let line = serde_json::to_string(&request).expect("request serializes");
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| self.unavailable(format!("write failed: {e}")))?;

        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(left) {
                Ok(line) => line,
                Err(RecvTimeoutError::Timeout) => return Err(self.unavailable("timed out")),
                Err(RecvTimeoutError::Disconnected) => return Err(self.unavailable("process closed its output")),
            };
            let Ok(resp) = serde_json::from_str::<Response>(&line) else {
                continue;
            };
            if resp.id != id {
                continue;
            }
            if resp.version != PROTOCOL_VERSION {
                return Err(self.unavailable(format!("unsupported protocol version {:?}", resp.version)));
            }
            if let Some(err) = resp.error {
                return Err(self.unavailable(err));
            }
            return Ok(resp);
        }
    }
}

impl Drop for ChildProcessChannel {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
