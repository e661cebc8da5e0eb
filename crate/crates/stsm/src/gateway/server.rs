//! Server side of the wire protocol.
//!
//! [`serve_connection`] speaks the protocol for any [`ModelServer`]; a
//! trainable model only has to implement four methods. [`RuleServer`]
//! exposes a rule-based baseline this way, which is what the conformance
//! tests and the `model_server` example run against.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};
use std::net::TcpListener;

use super::protocol::{write_message, Command, Request, Response};
use super::rule_based::RuleLexicon;
use super::{DecodeLimits, Direction};

pub trait ModelServer {
    fn generate(&mut self, inputs: &[String], limits: DecodeLimits) -> Result<Vec<String>, String>;
    /// Returns the training loss if the model has one.
    fn train(&mut self, pairs: &[(String, String)]) -> Result<Option<f64>, String>;
    fn save(&mut self, tag: &str) -> Result<(), String>;
    fn load(&mut self, tag: &str) -> Result<(), String>;
}

/// Keeps at most `max_len` whitespace-separated tokens.
pub fn truncate_tokens(text: &str, max_len: u32) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() <= max_len as usize {
        return text.to_string();
    }
    words[..max_len as usize].join(" ")
}

/// Handles requests until `shutdown` or end of input. Requests must carry
/// strictly increasing ids.
pub fn serve_connection<R: BufRead, W: Write>(reader: R, mut writer: W, model: &mut dyn ModelServer) -> io::Result<()> {
    let mut last_id = 0u64;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                write_message(&mut writer, &Response::error(0, format!("bad request: {e}")))?;
                continue;
            }
        };
        let id = request.id;
        if id <= last_id {
            write_message(
                &mut writer,
                &Response::error(id, format!("id {id} not above {last_id}")),
            )?;
            continue;
        }
        last_id = id;
        let shutdown = request.cmd == Command::Shutdown;
        write_message(&mut writer, &handle(request, model))?;
        if shutdown {
            return Ok(());
        }
    }
    Ok(())
}

fn handle(request: Request, model: &mut dyn ModelServer) -> Response {
    let id = request.id;
    let result = match request.cmd {
        Command::Generate => {
            let Some(inputs) = request.inputs else {
                return Response::error(id, "generate needs inputs");
            };
            let limits = DecodeLimits {
                max_len: request.max_len.unwrap_or(DecodeLimits::default().max_len),
                min_len: request.min_len.unwrap_or(DecodeLimits::default().min_len),
            };
            model.generate(&inputs, limits).map(|outputs| Response {
                outputs: Some(outputs),
                ..Response::ok(id)
            })
        }
        Command::Train => {
            let Some(pairs) = request.pairs else {
                return Response::error(id, "train needs pairs");
            };
            model.train(&pairs).map(|loss| Response {
                pairs: Some(pairs.len()),
                loss,
                ..Response::ok(id)
            })
        }
        Command::Save | Command::Load => {
            let Some(tag) = request.tag else {
                return Response::error(id, "save/load needs a tag");
            };
            let done = if request.cmd == Command::Save {
                model.save(&tag)
            } else {
                model.load(&tag)
            };
            done.map(|()| Response {
                tag: Some(tag),
                ..Response::ok(id)
            })
        }
        Command::Shutdown => Ok(Response::ok(id)),
    };
    result.unwrap_or_else(|e| Response::error(id, e))
}

/// Accepts connections one after another and serves each until it ends.
/// Returns after `max_connections` connections, or never if `None`.
pub fn serve_tcp(listener: TcpListener, model: &mut dyn ModelServer, max_connections: Option<usize>) -> io::Result<()> {
    for (served, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        let reader = io::BufReader::new(stream.try_clone()?);
        serve_connection(reader, stream, model)?;
        if max_connections.is_some_and(|m| served + 1 >= m) {
            break;
        }
    }
    Ok(())
}

/// A rule-based model behind the protocol. Training is accepted and
/// ignored; checkpoints are remembered by tag.
#[derive(Debug, Clone)]
pub struct RuleServer {
    direction: Direction,
    lexicon: RuleLexicon,
    saved: BTreeSet<String>,
    /// Every command received, in order, for inspection in tests.
    pub log: Vec<String>,
}

impl RuleServer {
    pub fn new(direction: Direction, lexicon: RuleLexicon) -> Self {
        RuleServer {
            direction,
            lexicon,
            saved: BTreeSet::new(),
            log: Vec::new(),
        }
    }
}

impl ModelServer for RuleServer {
    fn generate(&mut self, inputs: &[String], limits: DecodeLimits) -> Result<Vec<String>, String> {
        self.log.push(format!("generate {}", inputs.len()));
        Ok(inputs
            .iter()
            .map(|i| {
                let out = match self.direction {
                    Direction::D2T => self.lexicon.render(i),
                    Direction::T2D => self.lexicon.parse(i),
                };
                truncate_tokens(&out, limits.max_len)
            })
            .collect())
    }

    fn train(&mut self, pairs: &[(String, String)]) -> Result<Option<f64>, String> {
        self.log.push(format!("train {}", pairs.len()));
        Ok(None)
    }

    fn save(&mut self, tag: &str) -> Result<(), String> {
        self.log.push(format!("save {tag}"));
        self.saved.insert(tag.to_string());
        Ok(())
    }

    fn load(&mut self, tag: &str) -> Result<(), String> {
        self.log.push(format!("load {tag}"));
        if self.saved.contains(tag) {
            Ok(())
        } else {
            Err(format!("unknown tag: {tag}"))
        }
    }
}
