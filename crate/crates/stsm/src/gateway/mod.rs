//! Uniform handle over the two models, whatever backs them.
//!
//! A [`ModelHandle`] is either an in-process rule-based baseline or a client
//! of an external server speaking the [`protocol`]. The orchestrator only
//! sees batches going in and strings coming out.

pub mod protocol;
pub mod rule_based;
pub mod server;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use protocol::{Command, ProtocolClient, Request, Response};
pub use rule_based::RuleLexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Data to text.
    D2T,
    /// Text to data.
    T2D,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::D2T => "d2t",
            Direction::T2D => "t2d",
        })
    }
}

/// Decoding bounds, in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeLimits {
    pub max_len: u32,
    pub min_len: u32,
}

impl Default for DecodeLimits {
    fn default() -> Self {
        DecodeLimits {
            max_len: 256,
            min_len: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("cannot reach model server at {endpoint}: {source}")]
    Connect {
        endpoint: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error talking to model server: {0}")]
    Io(#[source] std::io::Error),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("response id {got} does not match request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("model server error: {0}")]
    Server(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("checkpoint tag is empty")]
    EmptyTag,
    #[error("unknown checkpoint tag: {0}")]
    UnknownTag(String),
    #[error("expected {expected} outputs, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointAction {
    Save,
    Load,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainAck {
    pub pairs: usize,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointAck {
    pub action: CheckpointAction,
    pub tag: String,
}

#[derive(Debug)]
enum Backend {
    RuleBased {
        lexicon: RuleLexicon,
        saved: BTreeSet<String>,
    },
    External(ProtocolClient),
}

#[derive(Debug)]
pub struct ModelHandle {
    direction: Direction,
    limits: DecodeLimits,
    backend: Backend,
    /// Pairs sent to training so far.
    trained_pairs: usize,
}

impl ModelHandle {
    pub fn rule_based(direction: Direction, lexicon: RuleLexicon) -> Self {
        ModelHandle {
            direction,
            limits: DecodeLimits::default(),
            backend: Backend::RuleBased {
                lexicon,
                saved: BTreeSet::new(),
            },
            trained_pairs: 0,
        }
    }

    pub fn external(direction: Direction, endpoint: impl Into<String>) -> Self {
        Self::with_client(direction, ProtocolClient::new(endpoint))
    }

    pub fn with_client(direction: Direction, client: ProtocolClient) -> Self {
        ModelHandle {
            direction,
            limits: DecodeLimits::default(),
            backend: Backend::External(client),
            trained_pairs: 0,
        }
    }

    pub fn with_limits(mut self, limits: DecodeLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn is_external(&self) -> bool {
        matches!(self.backend, Backend::External(_))
    }

    pub fn trained_pairs(&self) -> usize {
        self.trained_pairs
    }

    /// One output per input, in order.
    pub fn generate_batch(&mut self, inputs: &[String]) -> Result<Vec<String>, GatewayError> {
        if inputs.is_empty() {
            return Err(GatewayError::EmptyBatch);
        }
        let outputs = match &mut self.backend {
            Backend::RuleBased { lexicon, .. } => inputs
                .iter()
                .map(|i| {
                    let out = match self.direction {
                        Direction::D2T => lexicon.render(i),
                        Direction::T2D => lexicon.parse(i),
                    };
                    server::truncate_tokens(&out, self.limits.max_len)
                })
                .collect(),
            Backend::External(client) => {
                let mut req = Request::new(0, Command::Generate);
                req.inputs = Some(inputs.to_vec());
                req.max_len = Some(self.limits.max_len);
                req.min_len = Some(self.limits.min_len);
                client
                    .call(req)?
                    .outputs
                    .ok_or_else(|| GatewayError::Malformed("generate response without outputs".into()))?
            }
        };
        if outputs.len() != inputs.len() {
            return Err(GatewayError::LengthMismatch {
                expected: inputs.len(),
                got: outputs.len(),
            });
        }
        Ok(outputs)
    }

    /// `pairs` are (input, output) in this model's direction.
    pub fn train_batch(&mut self, pairs: &[(String, String)]) -> Result<TrainAck, GatewayError> {
        if pairs.is_empty() {
            return Err(GatewayError::EmptyBatch);
        }
        let ack = match &mut self.backend {
            Backend::RuleBased { .. } => TrainAck {
                pairs: pairs.len(),
                loss: None,
            },
            Backend::External(client) => {
                let mut req = Request::new(0, Command::Train);
                req.pairs = Some(pairs.to_vec());
                let resp = client.call(req)?;
                let echoed = resp.pairs.unwrap_or(pairs.len());
                if echoed != pairs.len() {
                    return Err(GatewayError::LengthMismatch {
                        expected: pairs.len(),
                        got: echoed,
                    });
                }
                TrainAck {
                    pairs: echoed,
                    loss: resp.loss,
                }
            }
        };
        self.trained_pairs += ack.pairs;
        Ok(ack)
    }

    pub fn checkpoint(&mut self, action: CheckpointAction, tag: &str) -> Result<CheckpointAck, GatewayError> {
        if tag.trim().is_empty() {
            return Err(GatewayError::EmptyTag);
        }
        match &mut self.backend {
            Backend::RuleBased { saved, .. } => match action {
                CheckpointAction::Save => {
                    saved.insert(tag.to_string());
                }
                CheckpointAction::Load => {
                    if !saved.contains(tag) {
                        return Err(GatewayError::UnknownTag(tag.to_string()));
                    }
                }
            },
            Backend::External(client) => {
                let cmd = match action {
                    CheckpointAction::Save => Command::Save,
                    CheckpointAction::Load => Command::Load,
                };
                let mut req = Request::new(0, cmd);
                req.tag = Some(tag.to_string());
                client.call(req)?;
            }
        }
        Ok(CheckpointAck {
            action,
            tag: tag.to_string(),
        })
    }

    /// Asks an external server to exit. A no-op for in-process models.
    pub fn shutdown(&mut self) -> Result<(), GatewayError> {
        if let Backend::External(client) = &mut self.backend {
            client.call(Request::new(0, Command::Shutdown))?;
        }
        Ok(())
    }
}
