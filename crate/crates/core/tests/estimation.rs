use gasqueue::estimation::{fit, model_table, Dynamics, ModelSpec};
use gasqueue::{gas_simulate, Family, GasParams, RandomStream};

#[test]
fn static_weibull_recovered() {
    let truth = GasParams::static_model(0.3, 1.0, 1.4).unwrap();
    let ys = gas_simulate(&truth, 20_000, &mut RandomStream::new(12)).unwrap();
    let m = fit(&ys, ModelSpec::new(Dynamics::Static, Family::Weibull)).unwrap();
    assert!(m.converged);
    let se = m.std_errors;
    assert_eq!(m.params.psi, 1.0);
    assert!((m.params.c - 0.3).abs() < 3.0 * se.c.unwrap());
    assert!((m.params.phi - 1.4).abs() < 3.0 * se.phi.unwrap());
    assert_eq!((m.params.b, m.params.a), (0.0, 0.0));
}

#[test]
fn iid_exponential_has_no_significant_dynamics() {
    let ys = gas_simulate(
        &GasParams::static_model(0.0, 1.0, 1.0).unwrap(),
        6000,
        &mut RandomStream::new(31),
    )
    .unwrap();
    let m = fit(&ys, ModelSpec::new(Dynamics::Dynamic, Family::Exponential)).unwrap();
    assert!(m.converged, "{m:?}");
    let se = m.std_errors.a.expect("standard error for a");
    assert!(m.params.a.abs() < 3.0 * se, "a = {} (se {se})", m.params.a);
}

#[test]
fn table_is_ordered_and_nested_fits_improve() {
    let ys = gas_simulate(
        &GasParams::new(-0.06, 0.72, 0.07, 1.15, 0.90).unwrap(),
        6000,
        &mut RandomStream::new(5),
    )
    .unwrap();
    let report = model_table(&ys).unwrap();
    assert_eq!(report.rows.len(), 8);
    let specs: Vec<ModelSpec> = report.rows.iter().map(|r| r.spec).collect();
    assert_eq!(specs, ModelSpec::all());
    assert!(report.all_converged());
    // Each model nests the one four rows above it, and the generalized gamma
    // nests the other families of its row.
    for i in 0..4 {
        assert!(report.rows[i + 4].loglik >= report.rows[i].loglik - 1e-6);
    }
    for base in [0, 4] {
        for j in 0..3 {
            assert!(report.rows[base + 3].loglik >= report.rows[base + j].loglik - 1e-6);
        }
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 9);
}

#[test]
fn empty_series_rejected() {
    assert!(fit(&[], ModelSpec::new(Dynamics::Static, Family::Exponential)).is_err());
    assert!(fit(&[1.0, -2.0], ModelSpec::new(Dynamics::Static, Family::Exponential)).is_err());
}
