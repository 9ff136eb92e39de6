use chainkit::simulate::sample_ensemble_dt;
use chainkit::transient::{fir_bir_oracle, fsp_adaptive, fsp_ct, fsp_dt, law_exact_dt, skeleton_matrix, Horizon};
use chainkit::{ChainModel, SparseDistribution, StateKey, Truncation};
use proptest::prelude::*;

fn k(x: i64) -> StateKey {
    StateKey::scalar(x)
}

fn stochastic(raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
    raw.iter()
        .enumerate()
        .map(|(i, r)| {
            let s: f64 = r.iter().sum();
            if s <= 0.0 {
                let mut row = vec![0.0; r.len()];
                row[i] = 1.0;
                row
            } else {
                r.iter().map(|v| v / s).collect()
            }
        })
        .collect()
}

fn sparse_matrix(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    n.prop_flat_map(|n| {
        prop::collection::vec(
            prop::collection::vec(prop_oneof![2 => Just(0.0), 1 => 0.01f64..1.0], n),
            n,
        )
    })
}

fn rates(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    sparse_matrix(n).prop_map(|m| {
        m.iter()
            .enumerate()
            .map(|(i, r)| r.iter().enumerate().map(|(j, &v)| if i == j { 0.0 } else { 3.0 * v }).collect())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn truncated_law_is_a_lower_bound(raw in sparse_matrix(3..=15), keep in 1usize..15, steps in 0usize..12) {
        let p = stochastic(&raw);
        let n = p.len() as i64;
        let m = ChainModel::from_dense_dt(&p, SparseDistribution::point(0)).unwrap();
        let exact = law_exact_dt(&m, steps, &Truncation::range(0, n - 1).unwrap()).unwrap();
        let sub = Truncation::range(0, (keep as i64).min(n) - 1).unwrap();
        let r = fsp_dt(&m, steps, &sub).unwrap();
        prop_assert!(r.approx.dominated_by(&exact, 1e-14));
        prop_assert!((r.epsilon - (1.0 - r.retained)).abs() <= 1e-12);
        prop_assert!((exact.tv_distance(&r.approx) - r.epsilon).abs() <= 1e-12);
    }

    #[test]
    fn discrete_error_grows_with_horizon(raw in sparse_matrix(3..=12), keep in 1usize..6) {
        let m = ChainModel::from_dense_dt(&stochastic(&raw), SparseDistribution::point(0)).unwrap();
        let sub = Truncation::range(0, (keep as i64).min(raw.len() as i64) - 1).unwrap();
        let eps: Vec<f64> = (0..10).map(|n| fsp_dt(&m, n, &sub).unwrap().epsilon).collect();
        for w in eps.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-15);
        }
    }

    #[test]
    fn continuous_semigroup(q in rates(2..=6), s in 0.05f64..1.5, t in 0.05f64..1.5) {
        let n = q.len() as i64;
        let trunc = Truncation::range(0, n - 1).unwrap();
        let m = ChainModel::from_dense_ct(&q, SparseDistribution::point(0)).unwrap();
        let direct = fsp_ct(&m, s + t, &trunc, 1e-13).unwrap();
        let half = fsp_ct(&m, s, &trunc, 1e-13).unwrap();
        let restarted = fsp_ct(&m.with_gamma(half.approx.clone()).unwrap(), t, &trunc, 1e-13).unwrap();
        prop_assert!(direct.approx.l1_distance(&restarted.approx) <= 1e-9);
        prop_assert!((direct.retained - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn skeleton_rows_match_point_laws(q in rates(2..=5), delta in 0.1f64..2.0) {
        let n = q.len() as i64;
        let trunc = Truncation::range(0, n - 1).unwrap();
        let m = ChainModel::from_dense_ct(&q, SparseDistribution::point(0)).unwrap();
        let s = skeleton_matrix(&m, delta, &trunc, 1e-13).unwrap();
        for x in 0..n {
            let law = fsp_ct(&m.with_gamma(SparseDistribution::point(x)).unwrap(), delta, &trunc, 1e-13).unwrap();
            for y in 0..n {
                prop_assert!((s.entry(&k(x), &k(y)).unwrap() - law.approx.get(&k(y))).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn integral_recursions_increase_toward_the_law(q in rates(2..=3), t in 0.2f64..1.0) {
        let n = q.len() as i64;
        let trunc = Truncation::range(0, n - 1).unwrap();
        let m = ChainModel::from_dense_ct(&q, SparseDistribution::point(0)).unwrap();
        let law = fsp_ct(&m, t, &trunc, 1e-13).unwrap();
        let mut prev = 0.0;
        for jumps in 0..=4 {
            let v = fir_bir_oracle(&m, &k(0), &k(n - 1), t, jumps, 2000, &trunc).unwrap();
            prop_assert!((v.fir - v.bir).abs() <= 1e-5);
            prop_assert!(v.fir >= prev - 1e-12);
            prop_assert!(v.fir <= law.approx.get(&k(n - 1)) + 1e-5);
            prev = v.fir;
        }
    }
}

#[test]
fn pure_death_law_matches_binomial() {
    let m = ChainModel::birth_death(
        chainkit::RateFn::Polynomial(vec![0.0]),
        chainkit::RateFn::Polynomial(vec![0.0, 1.0]),
        3,
    )
    .unwrap();
    let t = 0.7;
    let r = fsp_ct(&m, t, &Truncation::range(0, 3).unwrap(), 1e-13).unwrap();
    let alive = (-t).exp();
    for j in 0..=3 {
        let choose = [1.0, 3.0, 3.0, 1.0][j as usize];
        let want = choose * alive.powi(j as i32) * (1.0 - alive).powi(3 - j as i32);
        assert!((r.approx.get(&k(j)) - want).abs() <= 1e-10, "j={j}");
    }
}

#[test]
fn monte_carlo_agrees_with_exact_law() {
    let m = ChainModel::gambler(0.4, 12, 6).unwrap();
    let exact = law_exact_dt(&m, 15, &Truncation::range(0, 12).unwrap()).unwrap();
    let n = 40_000;
    let paths = sample_ensemble_dt(&m, 15, n, 5).unwrap();
    let mut empirical = SparseDistribution::new();
    for p in &paths {
        empirical.add(p.states[15].clone(), 1.0 / n as f64);
    }
    assert!(exact.tv_distance(&empirical) < 0.02);
}

#[test]
fn adaptive_search_reaches_tolerance_on_a_recurrent_chain() {
    let m = ChainModel::gambler(0.5, 200, 100).unwrap();
    let r = fsp_adaptive(&m, Horizon::Steps(40), 1e-10, &Truncation::initial_support(&m).unwrap(), 10_000).unwrap();
    assert!(r.converged);
    assert!(r.result.epsilon <= 1e-10);
    assert!(r.result.truncation.len() < 201);
}

#[test]
fn adaptive_search_stops_on_an_explosive_chain() {
    let m = ChainModel::pure_birth_geometric(2.0, 0).unwrap();
    let r = fsp_adaptive(&m, Horizon::Time(2.0), 1e-3, &Truncation::initial_support(&m).unwrap(), 60).unwrap();
    assert!(!r.converged);
    assert!(r.result.epsilon > 0.5);
}
