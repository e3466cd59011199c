//! Independence certificates built from fixed points and one periodic orbit.

use dyntop::fixtures::fixed_point_fixtures;
use dyntop::independence::se_tuple_witness_from_fixed_points;

fn main() -> dyntop::Result<()> {
    for fx in fixed_point_fixtures() {
        for l in 1..=fx.l {
            let w = se_tuple_witness_from_fixed_points(&fx.system, &fx.fixed, &fx.y, &fx.radii, l, fx.n_steps)?;
            w.certificate.verify()?;
            println!(
                "{:<12} l = {l}: {:?} route, nbar {:?}, delta'^2 = {}, return gaps {:?}",
                fx.name, w.route, w.nbar, w.delta_prime_sq, w.return_gaps
            );
        }
    }
    Ok(())
}
