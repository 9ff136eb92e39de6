use std::collections::BTreeSet;

use chainkit::exit::{exit_marginals_minimal, Domain, ExitOptions};
use chainkit::lyapunov::{
    check_certificate, minimal_hitting_functional, Certificate, CriterionKind, HittingOptions, OutsideValue,
    TestFunction, Verdict,
};
use chainkit::minimal::{SolveMethod, SolveOptions};
use chainkit::{ChainModel, RateFn, SparseDistribution, StateKey, Truncation};
use proptest::prelude::*;

fn k(x: i64) -> StateKey {
    StateKey::scalar(x)
}

fn cert(kind: CriterionKind, v: TestFunction, f: &[i64], b: f64) -> Certificate {
    Certificate { kind, v, f_set: f.iter().map(|&x| k(x)).collect(), b, tail_claim: String::new() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdict_matches_independent_drift(
        birth in 0.1f64..3.0,
        death in 0.1f64..3.0,
        power in 1u32..3,
        b in 0.0f64..5.0,
    ) {
        // Finite queue on 0..=30 so every row stays inside.
        let m = ChainModel::birth_death(RateFn::Table(vec![birth; 30]), RateFn::Polynomial(vec![death]), 0).unwrap();
        let trunc = Truncation::range(0, 30).unwrap();
        let c = cert(CriterionKind::CtPositive, TestFunction::polynomial(vec![(1.0, vec![power])]), &[0], b);
        let report = check_certificate(&m, &c, &trunc).unwrap();
        let v = |x: i64| (x as f64).powi(power as i32);
        let mut any = false;
        for x in 0..=30i64 {
            let up = if x < 30 { birth * (v(x + 1) - v(x)) } else { 0.0 };
            let down = if x > 0 { death * (v(x - 1) - v(x)) } else { 0.0 };
            let rhs = -1.0 + if x == 0 { b } else { 0.0 };
            let slack = rhs - (up + down);
            if slack.abs() < 1e-9 {
                return Ok(());
            }
            let flagged = report.violations.iter().any(|(s, _)| *s == k(x));
            prop_assert_eq!(flagged, slack < 0.0);
            any |= slack < 0.0;
        }
        prop_assert_eq!(report.verdict == Verdict::Violated, any);
        prop_assert!(report.unchecked.is_empty());
    }

    #[test]
    fn homogeneous_criteria_ignore_scale(a in 0.2f64..0.8, scale in 0.01f64..100.0, power in 0u32..3) {
        let m = ChainModel::gambler(a, 20, 10).unwrap();
        let trunc = Truncation::range(0, 20).unwrap();
        let base = check_certificate(&m, &cert(CriterionKind::DtRecurrence, TestFunction::polynomial(vec![(1.0, vec![power])]), &[0, 20], 0.0), &trunc).unwrap();
        let scaled = check_certificate(&m, &cert(CriterionKind::DtRecurrence, TestFunction::polynomial(vec![(scale, vec![power])]), &[0, 20], 0.0), &trunc).unwrap();
        prop_assert_eq!(base.verdict, scaled.verdict);
        prop_assert_eq!(base.violations.len(), scaled.violations.len());
    }

    #[test]
    fn hitting_time_agrees_with_exit_occupation(a in 0.1f64..0.9, kk in 3i64..25) {
        let m = ChainModel::gambler(a, kk, 1).unwrap();
        let trunc = Truncation::range(0, kk).unwrap();
        let f: BTreeSet<StateKey> = [k(0), k(kk)].into_iter().collect();
        let u = minimal_hitting_functional(&m, &f, 1.0, &trunc, &HittingOptions::default()).unwrap();
        for x in 1..kk {
            let mx = m.with_gamma(SparseDistribution::point(x)).unwrap();
            let s = exit_marginals_minimal(&mx, &Domain::range(1, kk - 1), mx.gamma(), &trunc, &ExitOptions::default()).unwrap();
            let got = u.get(&k(x)).unwrap();
            prop_assert!((got - s.mean_exit_time).abs() <= 1e-8 * (1.0 + got));
        }
    }

    #[test]
    fn value_iteration_agrees_with_direct(a in 0.2f64..0.8, theta in 1.0f64..1.01) {
        let m = ChainModel::gambler(a, 15, 7).unwrap();
        let trunc = Truncation::range(0, 15).unwrap();
        let f: BTreeSet<StateKey> = [k(0), k(15)].into_iter().collect();
        let direct = minimal_hitting_functional(&m, &f, theta, &trunc, &HittingOptions::default()).unwrap();
        let vi = HittingOptions {
            solve: SolveOptions { method: SolveMethod::ValueIteration, tol: 1e-13, ..SolveOptions::default() },
            outside: OutsideValue::Infinite,
        };
        let iterated = minimal_hitting_functional(&m, &f, theta, &trunc, &vi).unwrap();
        for x in 0..=15 {
            let (d, i) = (direct.get(&k(x)).unwrap(), iterated.get(&k(x)).unwrap());
            prop_assert!(i <= d * (1.0 + 1e-9) + 1e-9);
            prop_assert!((d - i).abs() <= 1e-6 * (1.0 + d));
        }
    }
}

#[test]
fn hitting_functional_is_a_foster_certificate() {
    let p = vec![
        vec![0.2, 0.5, 0.3, 0.0],
        vec![0.4, 0.1, 0.3, 0.2],
        vec![0.1, 0.2, 0.3, 0.4],
        vec![0.3, 0.0, 0.3, 0.4],
    ];
    let m = ChainModel::from_dense_dt(&p, SparseDistribution::point(0)).unwrap();
    let trunc = Truncation::range(0, 3).unwrap();
    let f: BTreeSet<StateKey> = [k(0)].into_iter().collect();
    let u = minimal_hitting_functional(&m, &f, 1.0, &trunc, &HittingOptions::default()).unwrap();
    let values = u.values.clone();
    let v = TestFunction::new("hitting time", move |x| values[x]);
    // Pv(0) = v(0) - 1 + b with v(0) = 0.
    let b = 1.0 + (1..4).map(|y| p[0][y] * u.get(&k(y as i64)).unwrap()).sum::<f64>();
    let report = check_certificate(&m, &cert(CriterionKind::DtFoster, v, &[0], b), &trunc).unwrap();
    assert_eq!(report.verdict, Verdict::HoldsOnTruncation);
    assert!(report.worst_slack.abs() <= 1e-9);
}

#[test]
fn escaping_states_are_unbounded_unless_outside_is_zero() {
    let m = ChainModel::gambler(0.5, 100, 5).unwrap();
    let trunc = Truncation::range(0, 20).unwrap();
    let f: BTreeSet<StateKey> = [k(0)].into_iter().collect();
    let inf = minimal_hitting_functional(&m, &f, 1.0, &trunc, &HittingOptions::default()).unwrap();
    assert!(inf.get(&k(5)).unwrap().is_infinite());
    assert_eq!(inf.get(&k(0)), Some(0.0));
    let zero = minimal_hitting_functional(
        &m,
        &f,
        1.0,
        &trunc,
        &HittingOptions { outside: OutsideValue::Zero, ..HittingOptions::default() },
    )
    .unwrap();
    // Lower bound: exit time of 1..=20 from 5 is 5 * 16.
    assert!((zero.get(&k(5)).unwrap() - 80.0).abs() <= 1e-8);
}

#[test]
fn exponential_tail_on_pure_birth() {
    let m = ChainModel::pure_birth_geometric(2.0, 0).unwrap();
    let c = cert(CriterionKind::CtRegularity { c: 1.0 }, TestFunction::exponential(1.5), &[], 0.0);
    let report = check_certificate(&m, &c, &Truncation::range(0, 30).unwrap()).unwrap();
    assert_eq!(report.verdict, Verdict::Violated);
    assert_eq!(report.unchecked, vec![k(30)]);
}
