use hsc_core::models::{bundle_catalog, catalog_model};
use hsc_core::papercheck::{check_second_derivatives, run_suite, IdentityId, SuiteOptions, IDENTITY_TOL};

#[test]
fn every_identity_holds_on_the_catalog() {
    let models = bundle_catalog();
    assert!(models.len() >= 6);
    assert!(models.iter().any(|m| m.n() == 2));
    let rep = run_suite(&models, &SuiteOptions::default());
    assert!(rep.excluded.is_empty(), "{:?}", rep.excluded);
    for case in &rep.cases {
        assert!(
            case.pass,
            "{} on {}: {:.3e} at {}",
            case.id, case.model, case.deviation, case.location
        );
    }
    assert!(rep.all_pass);
    assert_eq!(rep.cases.len(), models.len() * 10);
}

#[test]
fn second_derivatives_hold_across_lambda() {
    let m = catalog_model("sum100").unwrap().unwrap();
    for lambda in [1.5, 7.0, 40.0] {
        for case in check_second_derivatives(&m, lambda).unwrap() {
            assert!(
                case.deviation < IDENTITY_TOL,
                "{} at λ={lambda}: {:.3e}",
                case.id,
                case.deviation
            );
        }
    }
    let ids: Vec<IdentityId> = check_second_derivatives(&m, 2.0)
        .unwrap()
        .iter()
        .map(|c| c.id)
        .collect();
    assert_eq!(ids, IdentityId::SECOND_DERIVATIVES);
}
