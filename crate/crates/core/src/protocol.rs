//! Environment service: newline-delimited JSON, one object per line, each
//! with a `"type"` discriminator.
//!
//! Requests and their replies:
//!
//! | request | fields | reply |
//! |---|---|---|
//! | `reset` | `seed`, optional `overrides` (config keys) | `obs` |
//! | `step` | `action` in `0..=7` | `transition` |
//! | `close` | | `close`, then the connection ends |
//!
//! Any failure produces an `error` reply (`code`, `message`) and leaves the
//! session as it was. Unknown fields are ignored; unknown types are errors.
//! Every non-blank line gets exactly one reply. Reals are written in
//! shortest round-trip form, so both `f64` and `f32` values survive exactly.
//!
//! Each connection owns its own episode; connections share nothing.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::thread;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::EnvConfig;
use crate::episode::{Episode, Observation, StepRecord};
use crate::graph::{NodeClass, FEATURE_DIM};
use crate::grid::{Action, Cell};
use crate::reward::RewardTerms;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePayload {
    pub id: usize,
    pub class: NodeClass,
    pub cell: Cell,
    pub features: [f64; FEATURE_DIM],
}

/// Full observation; shipped whole on every reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsPayload {
    pub nodes: Vec<NodePayload>,
    /// `[src, dst, weight]`.
    pub edges: Vec<(usize, usize, f64)>,
    /// Indexed by action.
    pub feasible: [bool; 8],
    pub agent_cell: Cell,
    pub step: usize,
    pub coverage: f64,
}

impl ObsPayload {
    pub fn from_observation(obs: &Observation) -> Self {
        let graph = obs.graph();
        Self {
            nodes: graph
                .nodes
                .iter()
                .map(|n| NodePayload { id: n.id, class: n.class, cell: n.cell, features: n.features })
                .collect(),
            edges: graph.edges.iter().map(|e| (e.src, e.dst, e.weight)).collect(),
            feasible: obs.feasible.to_mask(),
            agent_cell: obs.agent_cell,
            step: obs.step,
            coverage: obs.coverage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub reward: f64,
    pub reward_terms: RewardTerms<f64>,
    pub intervened: bool,
    pub proposed_action: usize,
    /// `null` when nothing was feasible and the agent stayed.
    pub executed_action: Option<usize>,
    pub n_e: usize,
    pub done: bool,
    pub obs: ObsPayload,
}

impl Transition {
    pub fn new(record: &StepRecord, obs: &Observation, done: bool) -> Self {
        Self {
            reward: record.reward.value,
            reward_terms: record.reward,
            intervened: record.intervened,
            proposed_action: record.proposed,
            executed_action: record.executed,
            n_e: record.n_e,
            done,
            obs: ObsPayload::from_observation(obs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Not JSON, not an object, or fields of the wrong shape.
    Malformed,
    UnknownType,
    InvalidAction,
    InvalidConfig,
    NoEpisode,
    EpisodeDone,
    /// Engine fault; the episode is discarded.
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Reset {
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        overrides: Option<Value>,
    },
    Step {
        action: i64,
    },
    Close,
}

const REQUEST_TYPES: [&str; 3] = ["reset", "step", "close"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    Obs(ObsPayload),
    Transition(Transition),
    Close,
    Error(ErrorReply),
}

impl Response {
    fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Response::Error(ErrorReply { code, message: message.into() })
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("responses serialize")
    }
}

pub fn parse_request(line: &str) -> Result<Request, ErrorReply> {
    let fail = |code, message: String| ErrorReply { code, message };
    let value: Value =
        serde_json::from_str(line).map_err(|e| fail(ErrorCode::Malformed, e.to_string()))?;
    let ty = match value.get("type") {
        Some(Value::String(t)) => t.clone(),
        Some(_) => return Err(fail(ErrorCode::Malformed, "\"type\" must be a string".into())),
        None if value.is_object() => {
            return Err(fail(ErrorCode::Malformed, "missing \"type\"".into()))
        }
        None => return Err(fail(ErrorCode::Malformed, "message must be an object".into())),
    };
    if !REQUEST_TYPES.contains(&ty.as_str()) {
        return Err(fail(ErrorCode::UnknownType, format!("unknown message type {ty:?}")));
    }
    serde_json::from_value(value).map_err(|e| fail(ErrorCode::Malformed, e.to_string()))
}

/// One connection's state: the base config and the current episode.
pub struct Session {
    base: EnvConfig,
    episode: Option<Episode>,
}

impl Session {
    pub fn new(base: EnvConfig) -> Self {
        Self { base, episode: None }
    }

    pub fn episode(&self) -> Option<&Episode> {
        self.episode.as_ref()
    }

    pub fn handle(&mut self, request: Request) -> Response {
        match request {
            Request::Reset { seed, overrides } => self.reset(seed, overrides.as_ref()),
            Request::Step { action } => self.step(action),
            Request::Close => Response::Close,
        }
    }

    /// Parses and handles one line.
    pub fn handle_line(&mut self, line: &str) -> Response {
        match parse_request(line) {
            Ok(request) => self.handle(request),
            Err(e) => Response::Error(e),
        }
    }

    fn reset(&mut self, seed: u64, overrides: Option<&Value>) -> Response {
        let config = match overrides {
            Some(o) => match self.base.with_overrides(o) {
                Ok(c) => c,
                Err(e) => return Response::error(ErrorCode::InvalidConfig, e.to_string()),
            },
            None => self.base.clone(),
        };
        match Episode::reset(&config, seed) {
            Ok(episode) => {
                let obs = ObsPayload::from_observation(&episode.observation());
                self.episode = Some(episode);
                Response::Obs(obs)
            }
            Err(e) => Response::error(ErrorCode::InvalidConfig, e.to_string()),
        }
    }

    fn step(&mut self, action: i64) -> Response {
        let Some(episode) = self.episode.as_mut() else {
            return Response::error(ErrorCode::NoEpisode, "step before reset");
        };
        let Some(action) = usize::try_from(action).ok().and_then(Action::from_index) else {
            return Response::error(
                ErrorCode::InvalidAction,
                format!("action must be in 0..=7, got {action}"),
            );
        };
        if episode.is_done() {
            return Response::error(ErrorCode::EpisodeDone, "episode is over; send reset");
        }
        match episode.step(action) {
            Ok((record, obs, done)) => Response::Transition(Transition::new(&record, &obs, done)),
            Err(e) => {
                self.episode = None;
                Response::error(ErrorCode::Internal, e.to_string())
            }
        }
    }
}

/// Serves one connection until `close` or end of input.
pub fn serve_connection<R: BufRead, W: Write>(
    base: &EnvConfig,
    reader: R,
    mut writer: W,
) -> io::Result<()> {
    let mut session = Session::new(base.clone());
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = session.handle_line(&line);
        writeln!(writer, "{}", response.to_line())?;
        writer.flush()?;
        if response == Response::Close {
            break;
        }
    }
    Ok(())
}

pub fn serve_stdio(base: &EnvConfig) -> io::Result<()> {
    serve_connection(base, io::stdin().lock(), io::stdout().lock())
}

/// TCP listener; one thread and one session per connection.
pub struct Server {
    listener: TcpListener,
    base: EnvConfig,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, base: EnvConfig) -> io::Result<Self> {
        Ok(Self { listener: TcpListener::bind(addr)?, base })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections forever.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let base = self.base.clone();
            thread::spawn(move || {
                // a dropped client only ends its own session
                let _ = handle_stream(&base, stream);
            });
        }
        Ok(())
    }
}

fn handle_stream(base: &EnvConfig, stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    serve_connection(base, reader, BufWriter::new(stream))
}

/// Blocking request-reply client.
pub struct Client<R, W> {
    reader: R,
    writer: W,
    line: String,
}

impl Client<BufReader<TcpStream>, BufWriter<TcpStream>> {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self::new(BufReader::new(stream.try_clone()?), BufWriter::new(stream)))
    }
}

impl<R: BufRead, W: Write> Client<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self { reader, writer, line: String::new() }
    }

    /// Sends one raw line and returns the raw reply line.
    pub fn send_line(&mut self, line: &str) -> io::Result<String> {
        writeln!(self.writer, "{line}")?;
        self.writer.flush()?;
        self.line.clear();
        if self.reader.read_line(&mut self.line)? == 0 {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "server closed"));
        }
        Ok(self.line.trim_end().to_owned())
    }

    pub fn request(&mut self, request: &Request) -> io::Result<Response> {
        let text = serde_json::to_string(request).expect("requests serialize");
        let reply = self.send_line(&text)?;
        serde_json::from_str(&reply).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
