//! Sample a few gambler's-ruin paths and compare the empirical law at step
//! 25 with the exact one.

use chainkit::simulate::{sample_ensemble_dt, sample_path_dt};
use chainkit::transient::law_exact_dt;
use chainkit::{ChainModel, SparseDistribution, StateKey, Truncation};

fn main() -> chainkit::Result<()> {
    let model = ChainModel::gambler(0.48, 20, 10)?;
    let path = sample_path_dt(&model, 25, 1)?;
    let coords: Vec<i64> = path.states.iter().map(StateKey::first).collect();
    println!("one path: {coords:?}");

    let n = 50_000;
    let mut empirical = SparseDistribution::new();
    for p in sample_ensemble_dt(&model, 25, n, 2)? {
        empirical.add(p.states[25].clone(), 1.0 / n as f64);
    }
    let exact = law_exact_dt(&model, 25, &Truncation::range(0, 20)?)?;
    println!("TV(empirical, exact) after 25 steps = {:.4}", exact.tv_distance(&empirical));
    Ok(())
}
