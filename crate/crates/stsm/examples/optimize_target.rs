//! Shortens generated targets to the sentences that carry source values.

use stsm::linearize::{delinearize, LinearFormat};
use stsm::optimize::{optimize_target, OptimizeOptions};
use stsm::record::RecordKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        (
            "Clapham : STARTED : 20 August | Clapham : ENDED : 20 November",
            "Clapham joined on 20 August. He was popular with fans. The loan ended on 20 November.",
        ),
        (
            "Anna Berg : BORN_IN : Lisbon | Anna Berg : LIVES_IN : Lisbon",
            "Anna Berg born in Lisbon. Anna Berg lives in Lisbon.",
        ),
        // A value the text never mentions: nothing to optimize.
        ("Oslo : CAPITAL_OF : Norway", "Oslo is a city. It is cold in winter."),
    ];
    for (source, target) in cases {
        let x = delinearize(source, RecordKind::Tripleset, &LinearFormat::default())?.records;
        let outcome = optimize_target(&x, target, OptimizeOptions::default());
        println!("source:    {source}");
        println!("target:    {target}");
        println!("optimized: {} (changed: {})", outcome.optimized, outcome.changed);
        println!("matched:   {:?}\n", outcome.matched_values);
    }
    Ok(())
}
