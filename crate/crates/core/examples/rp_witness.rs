//! Bounded regional proximality searches, generic and on the fixed circle.

use dyntop::counterexample::rp_infty_witness_general;
use dyntop::numeric::ratio;
use dyntop::relations::{rp_witness, SearchBounds};
use dyntop::{CylPoint, Point, SystemSpec};

fn main() -> dyntop::Result<()> {
    let spec = SystemSpec::parse("counterexample:3")?;
    let sys = spec.build()?;
    let (x, y): (Point, Point) = ("(0,1)".parse()?, "(0,0)".parse()?);
    match rp_witness(&spec, &sys, &x, &y, 1, &ratio(1, 2), &SearchBounds::default())? {
        Some(w) => println!("generic search: approximants {} {}, nbar {:?}", w.x_approx, w.y_approx, w.nbar),
        None => println!("generic search: nothing within bounds"),
    }
    let c: CylPoint = "(0,1/2)".parse()?;
    if let Some(w) = rp_infty_witness_general(&c, 2, &ratio(1, 4), 12, 64)? {
        println!("circle point {c}: approximants {} {}, nbar {:?}", w.x_approx, w.y_approx, w.nbar);
    }
    Ok(())
}
