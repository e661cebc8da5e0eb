//! Serves a rule-based model over the wire protocol and drives a short
//! pipeline run against it, as an external model server would be used.
//!
//! ```text
//! cargo run --example model_server                  # self-contained demo
//! cargo run --example model_server -- serve d2t 127.0.0.1:7001
//! ```
//!
//! In `serve` mode the process answers requests until a client sends
//! `shutdown`, so `stsm run --d2t-endpoint 127.0.0.1:7001 ...` can use it.

use std::net::TcpListener;
use std::thread;

use stsm::gateway::server::{serve_tcp, RuleServer};
use stsm::gateway::{Direction, ModelHandle};
use stsm::pipeline::{Corpus, Method, Pipeline, RunConfig};
use stsm::synthetic::desk_corpus;

fn lexicon(corpus: &Corpus) -> stsm::gateway::RuleLexicon {
    stsm::gateway::RuleLexicon::from_record_sets(stsm::record::RecordKind::Tripleset, corpus.all_sources())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let corpus: Corpus = desk_corpus().into();

    if args.first().map(String::as_str) == Some("serve") {
        let direction = match args.get(1).map(String::as_str) {
            Some("t2d") => Direction::T2D,
            _ => Direction::D2T,
        };
        let addr = args.get(2).map(String::as_str).unwrap_or("127.0.0.1:7001");
        let listener = TcpListener::bind(addr)?;
        eprintln!("serving {direction} on {}", listener.local_addr()?);
        let mut server = RuleServer::new(direction, lexicon(&corpus));
        serve_tcp(listener, &mut server, Some(1))?;
        return Ok(());
    }

    let mut endpoints = Vec::new();
    let mut workers = Vec::new();
    for direction in [Direction::D2T, Direction::T2D] {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        endpoints.push(format!("tcp://{}", listener.local_addr()?));
        let mut server = RuleServer::new(direction, lexicon(&corpus));
        workers.push(thread::spawn(move || {
            serve_tcp(listener, &mut server, Some(1)).expect("serve");
            server.log
        }));
    }

    let mut cfg = RunConfig::new(Method::SelfMemNewDataSelfT2D);
    cfg.batch_size = 16;
    let d2t = ModelHandle::external(Direction::D2T, &endpoints[0]);
    let t2d = ModelHandle::external(Direction::T2D, &endpoints[1]);
    let (outcome, (mut d2t, mut t2d)) = Pipeline::new(cfg, corpus, d2t, t2d)?.run(None)?;
    d2t.shutdown()?;
    t2d.shutdown()?;

    println!("test scores: {}", serde_json::to_string(&outcome.report.test)?);
    for (name, worker) in ["d2t", "t2d"].iter().zip(workers) {
        let log = worker.join().expect("server thread");
        println!(
            "{name} server handled {} requests; last five: {:?}",
            log.len(),
            &log[log.len().saturating_sub(5)..]
        );
    }
    Ok(())
}
