//! Independence along the finite IP-set generated by 1, 2, 4.

use dyntop::independence::{ip_independence_check, ip_set, IpOutcome, Neighborhood, DEFAULT_IP_CAP};
use dyntop::numeric::ratio;
use dyntop::Point;

fn main() -> dyntop::Result<()> {
    let gens = [1, 2, 4];
    println!("FS(1,2,4) = {:?}", ip_set(&gens));
    let fx = dyntop::fixtures::binary_word();
    let ball = |c: &str| Neighborhood::Ball {
        center: c.parse::<Point>().unwrap(),
        radius: ratio(1, 4),
    };
    let outcome = ip_independence_check(&fx.system, &ball("(0,0)"), &ball("(0,1)"), &gens, DEFAULT_IP_CAP)?;
    match outcome {
        IpOutcome::Certified(c) => {
            c.verify()?;
            println!("independent along the IP-set");
        }
        IpOutcome::Failed(f) => {
            f.verify()?;
            println!("pattern {:?} on {:?} has no point", f.pattern, f.subset);
        }
    }
    Ok(())
}
