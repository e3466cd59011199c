//! Largest single step on each piece against the bound 1/(2i).

use dyntop::counterexample::step_distance_bound_check;

fn main() -> dyntop::Result<()> {
    for i in 1..=20 {
        let r = step_distance_bound_check(i, 1 << 14)?;
        let how = if r.exhaustive { "all" } else { "sampled" };
        println!("I_{i:<2} {how:>7} {:>6} steps  max {:>12}  bound {:>8}  {}", r.steps_checked, r.max_dist_sq.to_string(), r.bound_sq.to_string(), r.all_pass);
    }
    Ok(())
}
