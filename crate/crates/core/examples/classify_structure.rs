//! Communicating classes and hitting probabilities on a truncation.

use std::collections::BTreeSet;

use chainkit::structure::{classify, hitting_probabilities};
use chainkit::{ChainModel, SparseDistribution, StateKey, Truncation};

fn main() -> chainkit::Result<()> {
    let p = vec![
        vec![0.5, 0.5, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.5, 0.0, 0.0],
        vec![0.0, 0.25, 0.25, 0.25, 0.25],
        vec![0.0, 0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    let model = ChainModel::from_dense_dt(&p, SparseDistribution::point(0))?;
    let trunc = Truncation::range(0, 4)?;
    for class in classify(&model, &trunc)?.classes {
        let states: Vec<i64> = class.states.iter().map(StateKey::first).collect();
        println!("{states:?}: closed={} period={} {:?}", class.certified_closed, class.period, class.label);
    }
    let target: BTreeSet<StateKey> = [StateKey::scalar(3)].into_iter().collect();
    let h = hitting_probabilities(&model, &target, &trunc)?;
    for x in 0..5 {
        println!("P_{x}(reach 3) = {:.6}", h.get(&StateKey::scalar(x)));
    }
    Ok(())
}
