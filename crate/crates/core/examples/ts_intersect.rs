//! Intersecting thickly syndetic sets and checking the generated pieces.

use dyntop::report::ts_intersect_report;
use dyntop::zplus::TsSpec;

fn main() -> dyntop::Result<()> {
    for ops in [vec!["not-pow2", "not-3pow2", "not-pow2-minus1"], vec!["not-pow2*all", "all*not-3pow2"]] {
        let specs: Vec<TsSpec> = ops.iter().map(|s| TsSpec::parse(s)).collect::<Result<_, _>>()?;
        let r = ts_intersect_report(&specs, &[1, 2, 3], None)?;
        println!("{}", ops.join(" & "));
        for c in &r.checks {
            let s = &c.generated;
            println!(
                "  n = {}: period {:?}, {} base points, gap {}, window {}, {}",
                c.n,
                s.period(),
                s.base().len(),
                s.gap(),
                c.window,
                if c.passed() { "ok" } else { "FAILED" }
            );
        }
    }
    Ok(())
}
