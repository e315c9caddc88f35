use belllab::conditions::{AuditGrid, GridOptions};
use belllab::theories::{classical_antiparallel_theory, coarse_grain, qm_singlet_theory, LambdaMode, Partition};
use belllab::{audit_all, chsh_value, ChshSpec, Condition};

#[test]
fn single_precision_reproduces_the_headline_numbers() {
    let q = qm_singlet_theory::<f32>();
    let s = chsh_value(&q, &ChshSpec::standard()).unwrap();
    assert!((s.abs() - 2.0 * std::f32::consts::SQRT_2).abs() < 1e-5);

    let g = AuditGrid::for_theory(&q, &GridOptions::default()).unwrap();
    let tol = 1e-5f32;
    let (reports, d) = audit_all(&q, &g, tol).unwrap();
    let pass = |c: Condition| reports.iter().find(|r| r.condition == c).unwrap().pass;
    assert!(pass(Condition::ParameterIndependence));
    assert!(!pass(Condition::OutcomeIndependence));
    assert!(d.equivalence_holds);

    let classical = classical_antiparallel_theory::<f32>(LambdaMode::Quadrature { nodes: 32 }).unwrap();
    let coarse = coarse_grain(&classical, &Partition::single_cell()).unwrap();
    let p = coarse.ensemble_joint(&belllab::Direction32::in_plane(0.3), &belllab::Direction32::in_plane(0.3)).unwrap();
    assert!((p.marginal_a().plus - 0.5).abs() < 1e-6);
    assert!(p.conditional_a_given_b(belllab::Outcome::Plus).unwrap().plus.abs() < 1e-6);
}
