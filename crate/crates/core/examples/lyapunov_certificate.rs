//! Check a positive-recurrence drift certificate for a queue and compare
//! its bound with the exact mean hitting times.

use chainkit::lyapunov::{check_certificate, minimal_hitting_functional, Certificate, CriterionKind, HittingOptions, TestFunction};
use chainkit::{ChainModel, RateFn, StateKey, Truncation};

fn main() -> chainkit::Result<()> {
    let model = ChainModel::birth_death(RateFn::Table(vec![1.0; 100]), RateFn::Polynomial(vec![2.0]), 0)?;
    let trunc = Truncation::range(0, 100)?;
    let cert = Certificate {
        kind: CriterionKind::CtPositive,
        v: TestFunction::polynomial(vec![(1.0, vec![1])]),
        f_set: [StateKey::scalar(0)].into_iter().collect(),
        b: 2.0,
        tail_claim: "Qv = -1 off 0".into(),
    };
    let report = check_certificate(&model, &cert, &trunc)?;
    println!("{:?}, worst slack {:.3e}", report.verdict, report.worst_slack);
    let u = minimal_hitting_functional(&model, &cert.f_set, 0.0, &trunc, &HittingOptions::default())?;
    for x in [1, 5, 20, 80] {
        println!("E_{x}[time to 0] = {:.6} <= v({x}) = {x}", u.get(&StateKey::scalar(x)).unwrap());
    }
    Ok(())
}
