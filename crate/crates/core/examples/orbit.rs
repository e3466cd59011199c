//! Prints one full cycle of I_2 as CSV and jumps far along I_40.

use dyntop::counterexample::build_piece;
use dyntop::{Point, SystemSpec};
use num_bigint::BigUint;

fn main() -> dyntop::Result<()> {
    let sys = SystemSpec::parse("counterexample:2")?.build()?;
    let b2 = Point::Cyl(build_piece(2)?.b());
    print!("{}", sys.orbit_csv(&b2, 17)?);

    let far = SystemSpec::Counterexample { levels: 40 }.build()?;
    let a40 = Point::Cyl(build_piece(40)?.a());
    let n = BigUint::from(10u32).pow(12);
    println!("period of A_40: {}", far.period(&a40)?);
    println!("T^(10^12) A_40 = {}", far.step_big(&a40, &n)?);
    Ok(())
}
