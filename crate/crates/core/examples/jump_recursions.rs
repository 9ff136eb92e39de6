//! Forward and backward integral recursions: transition probabilities
//! restricted to at most n jumps, converging to the full law.

use chainkit::transient::{fir_bir_oracle, fsp_ct};
use chainkit::{ChainModel, StateKey, Truncation};

fn main() -> chainkit::Result<()> {
    let q = vec![vec![0.0, 2.0, 0.5], vec![1.0, 0.0, 1.0], vec![0.3, 0.7, 0.0]];
    let model = ChainModel::from_dense_ct(&q, chainkit::SparseDistribution::point(0))?;
    let trunc = Truncation::range(0, 2)?;
    let (x, y) = (StateKey::scalar(0), StateKey::scalar(2));
    for n in 0..=6 {
        let v = fir_bir_oracle(&model, &x, &y, 1.0, n, 4000, &trunc)?;
        println!("n={n}: forward {:.8} backward {:.8}", v.fir, v.bir);
    }
    let law = fsp_ct(&model, 1.0, &trunc, 1e-13)?;
    println!("full law: {:.8}", law.approx.get(&y));
    Ok(())
}
