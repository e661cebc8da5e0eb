//! Runs the full self-training loop on the bundled synthetic corpus with
//! rule-based models.
//!
//! ```text
//! cargo run --example desk_run -- [method] [report.json]
//! ```

use std::path::PathBuf;

use stsm::pipeline::{Corpus, Method, Pipeline, RunConfig};
use stsm::synthetic::desk_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let method: Method = args.next().as_deref().unwrap_or("self-mem+new-data").parse()?;
    let report_path = args.next().map(PathBuf::from);

    let corpus: Corpus = desk_corpus().into();
    let (d2t, t2d) = corpus.rule_handles();
    let cfg = RunConfig::new(method);
    let (outcome, _) = Pipeline::new(cfg, corpus, d2t, t2d)?.run(None)?;

    for (trace, timing) in outcome.traces.iter().zip(&outcome.timings) {
        let total: f64 = timing.values().sum();
        println!(
            "epoch {}: drew {}, trained on {} ({:?}), val METEOR {:.4}, {:.1} ms",
            trace.epoch,
            trace.indices.len(),
            trace.subset.len(),
            stsm::pipeline::OriginCounts::of(&trace.subset),
            trace.val_meteor_d2t,
            total * 1e3
        );
    }
    let r = &outcome.report;
    println!("\nselection: {:?}", r.selection);
    println!("audit:     {:?} (all valid: {})", r.audit, r.audit.all_valid());
    println!("test:      {}", serde_json::to_string(&r.test)?);
    if let Some(path) = report_path {
        r.write(&path, &outcome.timings)?;
        println!("report written to {}", path.display());
    }
    Ok(())
}
