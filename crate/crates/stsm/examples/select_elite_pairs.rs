//! Judges three self-memory tuples and assembles a training subset.

use stsm::linearize::{delinearize, LinearFormat};
use stsm::record::{Example, RecordKind, RecordSet, SelfMemTuple};
use stsm::select::{audit, build_subset, judge_pair, Mix, SelectionOptions};

fn records(text: &str) -> RecordSet {
    delinearize(text, RecordKind::Tripleset, &LinearFormat::default())
        .expect("valid linearization")
        .records
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src_a = "Anna Berg : BORN_IN : Lisbon";
    let src_b = "Hugo Dahl : BORN_IN : Oslo | Hugo Dahl : LIVES_IN : Oslo";
    let src_c = "Ines Holm : OCCUPATION : pilot";

    let gold = vec![
        Example::new(
            records(src_a),
            "Records show that Anna Berg was born in the city of Lisbon.",
        )?,
        Example::new(
            records(src_b),
            "Hugo Dahl was born in Oslo, and to this day Hugo Dahl lives in Oslo.",
        )?,
        Example::new(records(src_c), "Ines Holm, pilot.")?,
    ];
    let tuples = vec![
        // y′ is shorter than y and its reading is a subset of x: case 1.
        SelfMemTuple {
            x: gold[0].source.clone(),
            y: gold[0].target.clone(),
            y_prime: Some("Anna Berg born in Lisbon.".into()),
            x_prime: Some(records(src_a)),
            y_dprime: Some("Anna Berg born in Lisbon.".into()),
            x_dprime: Some(records(src_a)),
        },
        // The optimizer dropped a redundant sentence: case 2.
        SelfMemTuple {
            x: gold[1].source.clone(),
            y: gold[1].target.clone(),
            y_prime: Some("Hugo Dahl born in Oslo. Hugo Dahl lives in Oslo.".into()),
            x_prime: Some(records(src_b)),
            y_dprime: Some("Hugo Dahl born in Oslo.".into()),
            x_dprime: Some(records("Hugo Dahl : BORN_IN : Oslo")),
        },
        // Longer than the terse gold text: rejected.
        SelfMemTuple {
            x: gold[2].source.clone(),
            y: gold[2].target.clone(),
            y_prime: Some("Ines Holm occupation pilot.".into()),
            x_prime: Some(records(src_c)),
            y_dprime: Some("Ines Holm occupation pilot.".into()),
            x_dprime: Some(records(src_c)),
        },
    ];

    let opts = SelectionOptions::default();
    let verdicts: Vec<_> = tuples.iter().map(|t| judge_pair(t, opts)).collect();
    for (t, v) in tuples.iter().zip(&verdicts) {
        println!(
            "{:<45} accepted={:<5} case={:?} failed={:?} audit_ok={}",
            t.y_prime.as_deref().unwrap_or(""),
            v.accepted,
            v.case_id,
            v.failed_conditions,
            audit(t, v, opts)
        );
    }

    for mix in [Mix::EliteAndRemaining, Mix::EliteOnly] {
        let subset = build_subset(&gold, &tuples, &verdicts, 3, 42, &[], mix)?;
        println!("\n{mix:?}: {} pair(s)", subset.len());
        for p in &subset {
            println!("  [{:?}] {} => {}", p.origin(), p.source_text, p.target_text);
        }
    }
    Ok(())
}
