//! Level-by-level refutation that ((0,c), (0,dd)) is an Ind_fip pair.

use dyntop::counterexample::refute_indfip;
use dyntop::numeric::ratio;

fn main() -> dyntop::Result<()> {
    let t = refute_indfip(&ratio(1, 1), &ratio(0, 1), 14, 1 << 20)?;
    let b = &t.balls;
    println!("k = {}, U1 = B({}, {}), U2 = B({}, {})", b.k, b.center1, b.r1, b.center2, b.r2);
    for lvl in &t.levels {
        let pairs: u64 = lvl.starts.iter().map(|s| s.pairs_checked).sum();
        let tag = if lvl.vacuous { "vacuous" } else { "checked" };
        println!("I_{:<2} period {:>5}  {tag}  {} starts, {pairs} residue pairs", lvl.i, lvl.period, lvl.starts.len());
    }
    println!("circle refuted: {}, refuted overall: {}", t.circle_refuted, t.refuted());
    Ok(())
}
