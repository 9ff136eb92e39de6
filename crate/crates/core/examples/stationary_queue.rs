//! Stationary law of a finite queue, cross-checked by regeneration and by
//! a long simulated path.

use chainkit::simulate::{empirical_distribution_ct, sample_path_ct};
use chainkit::stationary::{ergodic_distributions, ergodic_via_regeneration, stationary_residual};
use chainkit::structure::classify;
use chainkit::{ChainModel, RateFn, StateKey, Truncation};

fn main() -> chainkit::Result<()> {
    let model = ChainModel::birth_death(RateFn::Table(vec![1.0; 10]), RateFn::Polynomial(vec![1.5]), 0)?;
    let trunc = Truncation::range(0, 10)?;
    let report = ergodic_distributions(&model, &classify(&model, &trunc)?)?;
    let pi = &report.classes[0].distribution;
    let regen = ergodic_via_regeneration(&model, trunc.states(), &StateKey::scalar(0))?;
    let path = sample_path_ct(&model, 50_000.0, usize::MAX, 9)?;
    let occupation = empirical_distribution_ct(&path).distribution;
    println!("residual {:.2e}", stationary_residual(&model, pi, &trunc)?.residual);
    println!("l1(direct, regeneration) {:.2e}", pi.l1_distance(&regen));
    println!("l1(direct, time average) {:.4}", pi.l1_distance(&occupation));
    for x in 0..4 {
        println!("pi({x}) = {:.6}", pi.get(&StateKey::scalar(x)));
    }
    Ok(())
}
