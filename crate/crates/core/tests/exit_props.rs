use chainkit::exit::{exit_density_ct, exit_joint_dt, exit_marginals_minimal, gambler_oracle, Domain, ExitOptions};
use chainkit::simulate::sample_ensemble_ct;
use chainkit::{ChainModel, RateFn, SparseDistribution, StateKey, Truncation};
use proptest::prelude::*;

fn k(x: i64) -> StateKey {
    StateKey::scalar(x)
}

fn ruin(m: &ChainModel, kk: i64, trunc: &Truncation) -> chainkit::exit::ExitStatistics {
    exit_marginals_minimal(m, &Domain::range(1, kk - 1), m.gamma(), trunc, &ExitOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gambler_grid_matches_closed_form(a in 0.05f64..0.95, kk in 2i64..60, frac in 0.0f64..1.0) {
        let x = 1 + ((kk - 2) as f64 * frac) as i64;
        let m = ChainModel::gambler(a, kk, x).unwrap();
        let s = ruin(&m, kk, &Truncation::range(0, kk).unwrap());
        let o = gambler_oracle(a, kk, m.gamma()).unwrap();
        prop_assert!((s.mu.get(&k(kk)) - o.success).abs() <= 1e-9);
        prop_assert!((s.mu.get(&k(0)) - o.ruin).abs() <= 1e-9);
        prop_assert!(s.error_bound <= 1e-9);
    }

    #[test]
    fn occupation_balance_holds(a in 0.1f64..0.9, kk in 3i64..30) {
        let m = ChainModel::gambler(a, kk, kk / 2).unwrap();
        let s = ruin(&m, kk, &Truncation::range(0, kk).unwrap());
        // ν(x) = γ(x) + sum_z ν(z) p(z, x) on D, and μ(y) = sum_z ν(z) p(z, y) off D.
        for x in 0..=kk {
            let inflow: f64 = (1..kk)
                .map(|z| s.nu.get(&k(z)) * m.row(&k(z)).unwrap().weight(&k(x)))
                .sum();
            let lhs = if (1..kk).contains(&x) { s.nu.get(&k(x)) - m.gamma().get(&k(x)) } else { s.mu.get(&k(x)) };
            prop_assert!((lhs - inflow).abs() <= 1e-8 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn wider_truncations_never_lose_exit_mass(a in 0.3f64..0.7, lo in 1i64..20, hi in 21i64..40) {
        let m = ChainModel::gambler(a, 40, 20).unwrap();
        let narrow = ruin(&m, 40, &Truncation::range(lo, hi).unwrap());
        let wide = ruin(&m, 40, &Truncation::range(0, 40).unwrap());
        prop_assert!(narrow.mu.dominated_by(&wide.mu, 1e-12));
        prop_assert!(narrow.nu.dominated_by(&wide.nu, 1e-9));
        prop_assert!(narrow.error_bound + 1e-12 >= wide.error_bound);
    }
}

#[test]
fn joint_law_converges_to_marginals() {
    let m = ChainModel::gambler(0.45, 12, 6).unwrap();
    let trunc = Truncation::range(0, 12).unwrap();
    let minimal = ruin(&m, 12, &trunc);
    let mut prev = 0.0;
    for n_f in [10, 100, 1000, 4000] {
        let joint = exit_joint_dt(&m, &Domain::range(1, 11), n_f, &trunc).unwrap();
        assert!(joint.mu.dominated_by(&minimal.mu, 1e-12));
        assert!(joint.exit_probability >= prev);
        assert!((joint.exit_probability + joint.still_inside + joint.leaked - 1.0).abs() <= 1e-12);
        prev = joint.exit_probability;
        if n_f == 4000 {
            assert!(joint.mu.l1_distance(&minimal.mu) <= 1e-10);
            assert!(joint.nu.l1_distance(&minimal.nu) <= 1e-8);
        }
    }
}

#[test]
fn fair_mean_exit_time() {
    for x in 1..20 {
        let m = ChainModel::gambler(0.5, 20, x).unwrap();
        let s = ruin(&m, 20, &Truncation::range(0, 20).unwrap());
        assert!((s.mean_exit_time - (x * (20 - x)) as f64).abs() <= 1e-8);
    }
}

#[test]
fn pure_death_exit_time_distribution() {
    let m = ChainModel::birth_death(RateFn::Polynomial(vec![0.0]), RateFn::Polynomial(vec![0.0, 1.0]), 3).unwrap();
    let domain = Domain::range(1, 3);
    let s = exit_density_ct(&m, &domain, 5.0, 50, &Truncation::range(0, 3).unwrap(), 1e-13).unwrap();
    for (t, cdf) in s.times.iter().zip(s.exit_cdf()) {
        let want = (1.0 - (-t).exp()).powi(3);
        assert!((cdf - want).abs() <= 1e-9, "t={t}: {cdf} vs {want}");
    }
    // Monte Carlo: time of absorption at 0 is the maximum of three unit exponentials.
    let n = 20_000;
    let paths = sample_ensemble_ct(&m, 1e9, 10, n, 17).unwrap();
    let below = paths.iter().filter(|p| *p.times.last().unwrap() <= 1.0).count() as f64 / n as f64;
    let want = (1.0 - (-1.0f64).exp()).powi(3);
    let se = (want * (1.0 - want) / n as f64).sqrt();
    assert!((below - want).abs() <= 4.0 * se);
}

#[test]
fn initial_mass_off_domain_exits_immediately() {
    let m = ChainModel::gambler(0.5, 10, 0)
        .unwrap()
        .with_gamma(SparseDistribution::from_pairs([(k(0), 0.25), (k(5), 0.75)]).unwrap())
        .unwrap();
    let s = ruin(&m, 10, &Truncation::range(0, 10).unwrap());
    assert!((s.mu.get(&k(0)) - (0.25 + 0.75 * 0.5)).abs() <= 1e-12);
    assert_eq!(s.nu.get(&k(0)), 0.0);
}
