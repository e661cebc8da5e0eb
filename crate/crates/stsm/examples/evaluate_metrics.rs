//! Scores a few generated texts with every metric.

use stsm::linearize::{delinearize, LinearFormat};
use stsm::metrics::{EvalItem, MetricReport};
use stsm::record::RecordKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fmt = LinearFormat::default();
    let rows = [
        (
            "Clapham : STARTED : 20 August | Clapham : ENDED : 20 November",
            "Clapham started on 20 August and left on 20 November.",
            vec!["Clapham was loaned from 20 August to 20 November."],
            "Clapham : STARTED : 20 August",
        ),
        (
            "Anna Berg : BORN_IN : Lisbon",
            "Anna Berg was born in Lisbon.",
            vec!["Anna Berg was born in Lisbon.", "Lisbon is where Anna Berg was born."],
            "Anna Berg : BORN_IN : Lisbon",
        ),
        (
            "Hugo Dahl : OCCUPATION : pilot",
            "Hugo Dahl flies planes.",
            vec!["Hugo Dahl works as a pilot."],
            "Hugo Dahl : OCCUPATION : chemist",
        ),
    ];

    let items = rows
        .iter()
        .map(|(src, cand, refs, reading)| {
            Ok(EvalItem {
                candidate: cand.to_string(),
                references: refs.iter().map(|r| r.to_string()).collect(),
                source: Some(delinearize(src, RecordKind::Tripleset, &fmt)?.records),
                reconstructed: Some(
                    delinearize(reading, RecordKind::Tripleset, &fmt)
                        .ok()
                        .map(|d| d.records),
                ),
            })
        })
        .collect::<Result<Vec<_>, stsm::linearize::LinearizeError>>()?;

    let report = MetricReport::compute(&items)?;
    println!("{}", serde_json::to_string_pretty(&report.as_percent())?);
    Ok(())
}
