//! Average distances along pair orbits, and the empirical pair measure.

use dyntop::meanstats::{besicovitch, empirical_measure};
use dyntop::numeric::ratio;
use dyntop::{Point, SystemSpec};

fn main() -> dyntop::Result<()> {
    let sys = SystemSpec::parse("counterexample:2")?.build()?;
    let tol = ratio(1, 1_000_000);
    let (x, y): (Point, Point) = ("(3/4,0)".parse()?, "(5/12,0)".parse()?);
    let b = besicovitch(&sys, &x, &y, &tol)?;
    println!("joint period {}, mean distance in [{}, {}]", b.period, b.enclosure.lo, b.enclosure.hi);
    let mu = empirical_measure(&sys, &x, &y, b.period)?;
    let e = mu.integrate_rho(&tol)?;
    println!("empirical measure: {} atoms, integral of rho in [{}, {}]", mu.support().len(), e.lo, e.hi);

    let split = dyntop::fixtures::mean_split().build()?;
    let b = besicovitch(&split, &"(1/4,0)".parse()?, &"(1/4,1/100)".parse()?, &tol)?;
    println!("two orbits 1/100 apart: mean distance in [{}, {}]", b.enclosure.lo, b.enclosure.hi);
    Ok(())
}
