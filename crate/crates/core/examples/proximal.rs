//! Exact proximality verdicts and a distality scan.

use dyntop::relations::{classify_proximal, distality_scan};
use dyntop::{Point, SystemSpec};

fn main() -> dyntop::Result<()> {
    let sys = SystemSpec::parse("counterexample:2")?.build()?;
    let pairs = [("(3/4,0)", "(7/8,1/2)"), ("(3/4,0)", "(5/12,0)"), ("(0,1/3)", "(0,1/3)")];
    for (x, y) in pairs {
        let c = classify_proximal(&sys, &x.parse::<Point>()?, &y.parse::<Point>()?)?;
        let min = c.min_dist_sq.map_or("-".to_string(), |m| m.to_string());
        println!("{x} {y}: {:?}, min dist^2 {min}, period {}", c.verdict, c.joint_period);
    }
    for spec in ["rotation:7", "counterexample:2"] {
        let r = distality_scan(&SystemSpec::parse(spec)?.build()?, 8, 1 << 16, 0)?;
        match r.violation {
            Some(v) => println!("{spec}: proximal pair {} {}", v.x, v.y),
            None => println!("{spec}: {} pairs checked, none proximal", r.pairs_checked),
        }
    }
    Ok(())
}
