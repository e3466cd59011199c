//! Order-d regional proximality of A = (0,1) and B = (0,0) in the counterexample.
//!
//! cargo run --example claim1 -- 2 1/10

use dyntop::counterexample::verify_claim1;
use dyntop::numeric::parse_rational;
use dyntop::systems::step_budget;

fn main() -> dyntop::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: u64 = args.next().map_or(1, |s| s.parse().expect("d is an integer"));
    let eps = parse_rational(&args.next().unwrap_or_else(|| "1/2".into()))?;
    let w = verify_claim1(d, &eps, step_budget())?;
    println!("level i = {}, nbar = {:?}", w.level(), w.nbar);
    println!("rho(A_i, A)^2 = {}", w.anchor_dist_sq);
    for c in &w.checks {
        println!("alpha {:?}  t = {:>4}  {} vs {}  dist^2 = {}", c.alpha_or_residues, c.time, c.left, c.right, c.dist_sq);
    }
    Ok(())
}
