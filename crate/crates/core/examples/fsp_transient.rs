//! Truncated transient law of a birth-death queue in continuous time, with
//! its certified error bound.

use chainkit::transient::fsp_ct;
use chainkit::{ChainModel, RateFn, StateKey, Truncation};

fn main() -> chainkit::Result<()> {
    let model = ChainModel::birth_death(RateFn::Polynomial(vec![1.0]), RateFn::Polynomial(vec![0.0, 0.5]), 0)?;
    for hi in [5, 10, 20] {
        let r = fsp_ct(&model, 3.0, &Truncation::range(0, hi)?, 1e-12)?;
        println!("0..={hi:<3} retained {:.10}  epsilon {:.3e}", r.retained, r.epsilon);
    }
    let r = fsp_ct(&model, 3.0, &Truncation::range(0, 20)?, 1e-12)?;
    // Poisson(2 (1 - e^{-1.5})) is the exact law for this infinite-server queue.
    let mean = 2.0 * (1.0 - (-1.5f64).exp());
    for x in 0..5 {
        let poisson = (-mean).exp() * mean.powi(x) / (1..=x).product::<i32>().max(1) as f64;
        println!("p({x}) = {:.10}  (Poisson {:.10})", r.approx.get(&StateKey::scalar(x as i64)), poisson);
    }
    Ok(())
}
