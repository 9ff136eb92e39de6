//! Grow the truncation until the error bound drops below a tolerance.

use chainkit::transient::{fsp_adaptive, Horizon};
use chainkit::{ChainModel, RateFn, Truncation};

fn main() -> chainkit::Result<()> {
    let queue = ChainModel::birth_death(RateFn::Polynomial(vec![4.0]), RateFn::Polynomial(vec![0.0, 1.0]), 0)?;
    let r = fsp_adaptive(&queue, Horizon::Time(5.0), 1e-8, &Truncation::initial_support(&queue)?, 10_000)?;
    println!(
        "queue: {:?} after {} rounds, {} states, epsilon {:.2e}",
        r.termination,
        r.rounds,
        r.result.truncation.len(),
        r.result.epsilon
    );

    let explosive = ChainModel::pure_birth_geometric(2.0, 0)?;
    let r = fsp_adaptive(&explosive, Horizon::Time(2.0), 1e-8, &Truncation::initial_support(&explosive)?, 200)?;
    println!("pure birth: {:?}, epsilon stuck at {:.4}", r.termination, r.result.epsilon);
    Ok(())
}
