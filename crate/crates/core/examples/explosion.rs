//! Kendall–Gillespie sampling of the pure-birth chain with rates 2^x, which
//! explodes with positive probability before t = 2.

use chainkit::simulate::{sample_ensemble_ct, Termination};
use chainkit::transient::fsp_ct;
use chainkit::{ChainModel, Truncation};

fn main() -> chainkit::Result<()> {
    let model = ChainModel::pure_birth_geometric(2.0, 0)?;
    let n = 20_000;
    let paths = sample_ensemble_ct(&model, 2.0, 1000, n, 7)?;
    let exploded = paths.iter().filter(|p| p.reason == Termination::JumpBudget).count();
    let worst = paths.iter().map(|p| p.explosion_diagnostic).fold(0.0, f64::max);
    println!("paths hitting the jump budget: {:.4}", exploded as f64 / n as f64);
    println!("largest sum of mean holding times: {worst:.4}");
    for r in [10, 20, 40] {
        let fsp = fsp_ct(&model, 2.0, &Truncation::range(0, r)?, 1e-12)?;
        println!("truncation 0..={r}: error bound {:.6}", fsp.epsilon);
    }
    Ok(())
}
