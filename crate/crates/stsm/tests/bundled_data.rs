use std::path::Path;

use stsm::dataset::{load, DatasetFormat, SplitName};
use stsm::synthetic::{corpus_documents, desk_corpus, render_document, DESK_SEED, DESK_SIZES};

#[test]
fn bundled_files_match_the_generator() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let docs = corpus_documents(DESK_SEED, DESK_SIZES);
    for (doc, name) in docs.iter().zip(SplitName::ALL) {
        let path = dir.join(format!("{name}.json"));
        let on_disk = std::fs::read_to_string(&path).unwrap();
        assert!(
            on_disk == render_document(doc),
            "{} is stale; regenerate with the load_datasets example",
            path.display()
        );
    }
}

#[test]
fn bundled_files_load_like_the_in_memory_corpus() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    for (split, name) in desk_corpus().iter().zip(SplitName::ALL) {
        let loaded = load(&dir.join(format!("{name}.json")), DatasetFormat::Dart, name).unwrap();
        assert_eq!(loaded.examples, split.examples);
        assert!(loaded.load_warnings.is_empty());
    }
}
