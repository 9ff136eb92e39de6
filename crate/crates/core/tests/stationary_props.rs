use chainkit::simulate::{empirical_distribution_ct, empirical_distribution_dt, sample_path_ct, sample_path_dt};
use chainkit::stationary::{ergodic_distributions, ergodic_via_regeneration, stationary_residual};
use chainkit::structure::classify;
use chainkit::{ChainModel, SparseDistribution, StateKey, Truncation};
use proptest::prelude::*;

fn k(x: i64) -> StateKey {
    StateKey::scalar(x)
}

fn positive_matrix(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    n.prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n))
}

fn stochastic(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect()
}

fn off_diagonal(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, &v)| if i == j { 0.0 } else { 4.0 * v }).collect())
        .collect()
}

fn single_class(m: &ChainModel, n: usize) -> SparseDistribution {
    let trunc = Truncation::range(0, n as i64 - 1).unwrap();
    let report = ergodic_distributions(m, &classify(m, &trunc).unwrap()).unwrap();
    assert_eq!(report.classes.len(), 1);
    report.classes[0].distribution.clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn continuous_balance_and_regeneration(raw in positive_matrix(2..=10), anchor in 0usize..10) {
        let n = raw.len();
        let m = ChainModel::from_dense_ct(&off_diagonal(&raw), SparseDistribution::point(0)).unwrap();
        let pi = single_class(&m, n);
        let trunc = Truncation::range(0, n as i64 - 1).unwrap();
        prop_assert!((pi.mass() - 1.0).abs() <= 1e-12);
        prop_assert!(stationary_residual(&m, &pi, &trunc).unwrap().residual <= 1e-10);
        let regen = ergodic_via_regeneration(&m, trunc.states(), &k((anchor % n) as i64)).unwrap();
        prop_assert!(pi.l1_distance(&regen) <= 1e-9);
    }

    #[test]
    fn discrete_fixed_point(raw in positive_matrix(2..=10)) {
        let n = raw.len();
        let p = stochastic(&raw);
        let m = ChainModel::from_dense_dt(&p, SparseDistribution::point(0)).unwrap();
        let pi = single_class(&m, n);
        for y in 0..n {
            let moved: f64 = (0..n).map(|x| pi.get(&k(x as i64)) * p[x][y]).sum();
            prop_assert!((moved - pi.get(&k(y as i64))).abs() <= 1e-12);
        }
    }

    #[test]
    fn mixtures_of_ergodic_laws_are_stationary(a in positive_matrix(2..=4), b in positive_matrix(2..=4), w in 0.0f64..1.0) {
        // Two closed blocks plus a transient state feeding both.
        let (na, nb) = (a.len(), b.len());
        let n = na + nb + 1;
        let mut q = vec![vec![0.0; n]; n];
        let qa = off_diagonal(&a);
        let qb = off_diagonal(&b);
        for i in 0..na {
            for j in 0..na {
                q[i][j] = qa[i][j];
            }
        }
        for i in 0..nb {
            for j in 0..nb {
                q[na + i][na + j] = qb[i][j];
            }
        }
        q[n - 1][0] = 1.0;
        q[n - 1][na] = 1.0;
        let m = ChainModel::from_dense_ct(&q, SparseDistribution::point(0)).unwrap();
        let trunc = Truncation::range(0, n as i64 - 1).unwrap();
        let report = ergodic_distributions(&m, &classify(&m, &trunc).unwrap()).unwrap();
        prop_assert_eq!(report.classes.len(), 2);
        let mut mix = SparseDistribution::new();
        for (c, weight) in report.classes.iter().zip([w, 1.0 - w]) {
            for (x, p) in c.distribution.iter() {
                mix.add(x.clone(), weight * p);
            }
        }
        prop_assert!(stationary_residual(&m, &mix, &trunc).unwrap().residual <= 1e-10);
        prop_assert_eq!(mix.get(&k(n as i64 - 1)), 0.0);
    }
}

#[test]
fn time_averages_converge() {
    let m = ChainModel::two_state(1.0, 3.0, 0).unwrap();
    let pi = single_class(&m, 2);
    let path = sample_path_ct(&m, 20_000.0, usize::MAX, 4).unwrap();
    let occupation = empirical_distribution_ct(&path).distribution;
    assert!(occupation.l1_distance(&pi) < 0.02);

    let p = vec![vec![0.9, 0.1, 0.0], vec![0.2, 0.5, 0.3], vec![0.0, 0.6, 0.4]];
    let d = ChainModel::from_dense_dt(&p, SparseDistribution::point(0)).unwrap();
    let pi = single_class(&d, 3);
    let path = sample_path_dt(&d, 200_000, 8).unwrap();
    assert!(empirical_distribution_dt(&path).distribution.l1_distance(&pi) < 0.02);
}

#[test]
fn geometric_queue_law() {
    // Births 1 below 60, deaths 2: π(x) ∝ 2^-x.
    let m = ChainModel::birth_death(chainkit::RateFn::Table(vec![1.0; 60]), chainkit::RateFn::Polynomial(vec![2.0]), 0)
        .unwrap();
    let pi = single_class(&m, 61);
    let z: f64 = (0..=60).map(|x| 0.5f64.powi(x)).sum();
    for x in 0..=60 {
        assert!((pi.get(&k(x)) - 0.5f64.powi(x as i32) / z).abs() <= 1e-12);
    }
}
