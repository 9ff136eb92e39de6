//! Continuous-time exit-time density for a pure-death chain started at 3.

use chainkit::exit::{exit_density_ct, Domain};
use chainkit::{ChainModel, RateFn, Truncation};

fn main() -> chainkit::Result<()> {
    let model = ChainModel::birth_death(RateFn::Polynomial(vec![0.0]), RateFn::Polynomial(vec![0.0, 1.0]), 3)?;
    let stats = exit_density_ct(&model, &Domain::range(1, 3), 6.0, 12, &Truncation::range(0, 3)?, 1e-12)?;
    for (lo, hi, density) in stats.time_density() {
        println!("[{lo:.1}, {hi:.1})  {density:.6}");
    }
    println!("P(exit by 6) = {:.8}, error bound {:.2e}", stats.exit_probability, stats.error_bound);
    Ok(())
}
