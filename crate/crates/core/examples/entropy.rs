//! Sequence entropy of a finite system along 1, 2, 4, 8, ...

use dyntop::independence::{seq_entropy_estimate, CountMode, Cover, FiniteSystem};

fn main() -> dyntop::Result<()> {
    let fx = dyntop::fixtures::two_points();
    let sys = fx.system.build()?;
    let fs = FiniteSystem::new(&sys)?;
    let upper: Vec<_> = fs.points().iter().filter(|p| p.as_cyl().is_some_and(|c| c.y() > &dyntop::numeric::ratio(1, 4))).cloned().collect();
    let lower: Vec<_> = fs.points().iter().filter(|p| p.as_cyl().is_some_and(|c| c.y() < &dyntop::numeric::ratio(3, 4))).cloned().collect();
    let cover = Cover::from_points(&fs, &[upper, lower])?;
    let seq: Vec<u64> = (0..8).map(|k| 1 << k).collect();
    for e in seq_entropy_estimate(&fs, &cover, &seq, CountMode::Exact)? {
        println!("n = {}: N = {:>3}, log N / n = {:.4}", e.n, e.count, e.value);
    }
    Ok(())
}
