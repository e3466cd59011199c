//! Mean-equicontinuity scans of two split orbits and of the counterexample.

use dyntop::meanstats::{mean_equi_scan, PairSample, ScanVerdict};
use dyntop::numeric::ratio;
use dyntop::SystemSpec;

fn main() -> dyntop::Result<()> {
    let systems = [("two orbits", dyntop::fixtures::mean_split()), ("counterexample:3", SystemSpec::parse("counterexample:3")?)];
    for (name, spec) in systems {
        let r = mean_equi_scan(&spec, &ratio(1, 4), &ratio(1, 8), &ratio(1, 1000), &PairSample::default())?;
        println!(
            "{name}: {} close pairs, {} pass, {} violate, {} undecided",
            r.close_pairs,
            r.count(ScanVerdict::Pass),
            r.count(ScanVerdict::Violation),
            r.count(ScanVerdict::Undecided)
        );
    }
    Ok(())
}
