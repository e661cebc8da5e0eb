//! Loads DART JSON or E2E CSV files and prints what came out, including
//! load warnings.
//!
//! ```text
//! cargo run --example load_datasets -- dart path/to/train.json
//! cargo run --example load_datasets -- e2e path/to/trainset.csv
//! cargo run --example load_datasets -- write-synthetic crates/stsm/data/synthetic
//! ```
//!
//! Without arguments it loads the bundled synthetic training split.

use std::path::{Path, PathBuf};

use stsm::dataset::{load, DatasetFormat, DatasetSplit, SplitName};
use stsm::synthetic::{corpus_documents, render_document, DESK_SEED, DESK_SIZES};

fn show(split: &DatasetSplit) {
    println!("{} examples", split.examples.len());
    for ex in split.examples.iter().take(3) {
        println!("  source: {}", ex.source_text);
        println!("  target: {}", ex.target);
    }
    for w in &split.load_warnings {
        println!("  warning: {w}");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("write-synthetic") => {
            let dir = PathBuf::from(args.get(1).map(String::as_str).unwrap_or("data/synthetic"));
            std::fs::create_dir_all(&dir)?;
            for (doc, name) in corpus_documents(DESK_SEED, DESK_SIZES).iter().zip(SplitName::ALL) {
                let path = dir.join(format!("{name}.json"));
                std::fs::write(&path, render_document(doc))?;
                println!("wrote {}", path.display());
            }
        }
        Some(kind @ ("dart" | "e2e")) => {
            let format = if kind == "dart" {
                DatasetFormat::Dart
            } else {
                DatasetFormat::E2e
            };
            let path = args.get(1).ok_or("missing path")?;
            show(&load(Path::new(path), format, SplitName::Train)?);
        }
        _ => {
            let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/train.json");
            show(&load(&path, DatasetFormat::Dart, SplitName::Train)?);
        }
    }
    Ok(())
}
