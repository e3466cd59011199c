//! Round trip of a report through JSON, then a tampered copy.

use dyntop::counterexample::verify_claim1;
use dyntop::numeric::ratio;
use dyntop::report::{recheck_json, Report, ReportBody};

fn main() -> dyntop::Result<()> {
    let w = verify_claim1(1, &ratio(1, 2), 1000)?;
    let text = Report::new(ReportBody::Claim1 { witness: w }).to_json();
    println!("{text}");
    println!("recheck: {:?}", recheck_json(&text).map(|r| r.kind()));
    let tampered = text.replacen("1033/36864", "1/36864", 1);
    println!("tampered: {:?}", recheck_json(&tampered).err());
    Ok(())
}
