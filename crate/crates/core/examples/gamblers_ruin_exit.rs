//! Exit distribution and expected duration for gambler's ruin, checked
//! against the closed form.

use chainkit::exit::{exit_marginals_minimal, gambler_oracle, Domain, ExitOptions};
use chainkit::{ChainModel, StateKey, Truncation};

fn main() -> chainkit::Result<()> {
    for a in [0.4, 0.5, 0.6] {
        let model = ChainModel::gambler(a, 50, 25)?;
        let stats = exit_marginals_minimal(
            &model,
            &Domain::range(1, 49),
            model.gamma(),
            &Truncation::range(0, 50)?,
            &ExitOptions::default(),
        )?;
        let oracle = gambler_oracle(a, 50, model.gamma())?;
        println!(
            "a={a}: P(win) {:.12} (closed form {:.12}), mean duration {:.4}",
            stats.mu.get(&StateKey::scalar(50)),
            oracle.success,
            stats.mean_exit_time
        );
    }
    Ok(())
}
