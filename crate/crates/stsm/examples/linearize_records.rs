//! Linearizes the two table rows (a DART tripleset and an E2E MR set),
//! then parses a noisy model output back into records.

use stsm::linearize::{delinearize, extract_source_values, linearize, LinearFormat};
use stsm::record::{Record, RecordKind, RecordSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fmt = LinearFormat::default();

    let dart = RecordSet::new(
        RecordKind::Tripleset,
        vec![
            Record::triple("Clapham", "STARTED", "20 August")?,
            Record::triple("Clapham", "ENDED", "20 November")?,
            Record::triple("Clapham", "LOAN_CLUB", "Wolverhampton Wanderers")?,
        ],
    )?;
    println!("DART source:   {}", linearize(&dart, &fmt)?);
    println!("source values: {:?}", extract_source_values(&dart, &fmt));

    // The subject pair is rendered first wherever it appears.
    let e2e = RecordSet::new(
        RecordKind::MrSet,
        vec![
            Record::mr("food", "English")?,
            Record::mr("name", "The Golden Curry")?,
            Record::mr("customer rating", "5 out of 5")?,
            Record::mr("area", "riverside")?,
            Record::mr("familyFriendly", "yes")?,
            Record::mr("near", "Café Rouge")?,
        ],
    )?;
    println!("E2E source:    {}", linearize(&e2e, &fmt)?);
    println!("source values: {:?}", extract_source_values(&e2e, &fmt));

    let noisy = "Clapham : STARTED : 20 August | Clapham ENDED | Clapham : LOAN_CLUB : Wolverhampton Wanderers";
    let parsed = delinearize(noisy, RecordKind::Tripleset, &fmt)?;
    println!(
        "\nparsed {} record(s) from noisy text, dropped {} segment(s):",
        parsed.records.len(),
        parsed.dropped
    );
    for r in parsed.records.records() {
        println!("  {:?}", r.fields());
    }
    Ok(())
}
