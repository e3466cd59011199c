//! Independence sequences: a rotation has none, two fixed points have all of them.

use dyntop::independence::{search_certificate, Neighborhood};
use dyntop::{Point, SystemSpec};

fn hood(s: &str) -> Neighborhood {
    Neighborhood::Set {
        points: s.split('|').map(|p| p.parse().expect("point")).collect(),
    }
}

fn main() -> dyntop::Result<()> {
    let rot = SystemSpec::parse("rotation:8")?;
    let r = search_certificate(&rot, &[hood("#0"), hood("#4")], 2, 16)?;
    println!("Z/8, U1 = {{#0}}, U2 = {{#4}}: certificate {}", if r.certificate.is_some() { "found" } else { "absent" });

    let spec = dyntop::fixtures::binary_word().system;
    let balls: Vec<Neighborhood> = ["(0,0)", "(0,1)"]
        .iter()
        .map(|c| Neighborhood::Ball {
            center: c.parse::<Point>().unwrap(),
            radius: dyntop::numeric::ratio(1, 4),
        })
        .collect();
    let r = search_certificate(&spec, &balls, 3, 32)?;
    if let Some(cert) = r.certificate {
        cert.verify()?;
        println!("binary word: times {:?}", cert.times);
        for w in &cert.witnesses {
            println!("  pattern {:?} realized by {}", w.pattern, w.point);
        }
    }
    Ok(())
}
