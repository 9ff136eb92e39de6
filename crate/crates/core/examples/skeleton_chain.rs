//! The δ-skeleton of a continuous chain and its fixed point.

use chainkit::transient::skeleton_matrix;
use chainkit::{ChainModel, Truncation};

fn main() -> chainkit::Result<()> {
    let model = ChainModel::two_state(1.0, 3.0, 0)?;
    let trunc = Truncation::range(0, 1)?;
    for delta in [0.1, 1.0, 10.0] {
        let s = skeleton_matrix(&model, delta, &trunc, 1e-13)?;
        println!("delta = {delta}");
        for row in &s.rows {
            println!("  {row:.6?}");
        }
        println!("  pi S = {:.6?}", s.left_apply(&[0.75, 0.25]));
    }
    Ok(())
}
