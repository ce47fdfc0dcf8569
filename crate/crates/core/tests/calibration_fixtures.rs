use approx::assert_relative_eq;
use eitsdp_core::calibration::{calibrate, definiteness_margin, find_delta, sample_box, verify_certificate};
use eitsdp_core::linalg::lambda_max_value;
use eitsdp_core::{Geometry, MeasurementModel, SampleSpec, SigmaBox};

fn model(m: usize) -> MeasurementModel {
    MeasurementModel::new(Geometry::new(vec![0.5, 0.25]).unwrap(), m).unwrap()
}

fn pinned_box() -> SigmaBox {
    SigmaBox::new(vec![1.0, 0.5, 0.5], vec![1.0, 2.0, 2.0]).unwrap()
}

#[test]
fn deepest_layer_delta_fixture() {
    let md = model(20);
    let bx = SigmaBox::uniform(3, 0.5, 2.0).unwrap();
    let samples = sample_box(&bx, &SampleSpec::grid(3), 100).unwrap();
    let d = find_delta(&md, &bx, &samples, 2, 2.0, 2.0, 1e-6).unwrap();
    assert_relative_eq!(d, 0.010431662201881409, max_relative = 1e-9);
    // direct evaluation at every sample: margin ≥ ε at d, and < ε just above
    // the bisection bracket
    let margin = |delta: f64| {
        samples
            .iter()
            .map(|s| {
                let jac = md.assemble_jacobian(s).unwrap();
                lambda_max_value(&jac.directional(&[delta, delta, -1.0])).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    };
    assert!(margin(d) >= 1e-6);
    assert!(margin(d * 1.01) < 1e-6);
}

#[test]
fn pinned_certificate_fixture() {
    let md = model(20);
    let cert = calibrate(&md, &pinned_box(), &SampleSpec::grid(3), None).unwrap();
    assert_eq!(cert.c_const, 1.0);
    assert_eq!(cert.deltas.len(), 2);
    assert_eq!(cert.deltas[1], 1.0);
    assert!(cert.deltas[0] <= 1.0);
    assert_relative_eq!(cert.deltas[0], 0.04892796277999878, max_relative = 1e-9);
    assert_relative_eq!(cert.lambda, 7.559077530930325e-7, max_relative = 1e-8);
    assert_relative_eq!(cert.c[0], 1.0 / cert.deltas[0], max_relative = 1e-15);

    // independent re-evaluation on a finer grid
    let finer = sample_box(&pinned_box(), &SampleSpec::grid(9), 1000).unwrap();
    let direct = finer
        .iter()
        .map(|s| definiteness_margin(&md, &pinned_box(), &cert.deltas, s).unwrap().0)
        .fold(f64::INFINITY, f64::min);
    assert!(direct > 0.0);
    assert!(direct <= cert.lambda * (1.0 + 1e-12));
    let report = verify_certificate(&cert, &md, &finer).unwrap();
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.min_definiteness, direct);
}

#[test]
fn own_samples_reproduce_lambda() {
    let md = model(20);
    let cert = calibrate(&md, &pinned_box(), &SampleSpec::grid(3), None).unwrap();
    let own = cert.samples().unwrap();
    let report = verify_certificate(&cert, &md, &own).unwrap();
    assert_eq!(report.min_definiteness, cert.lambda);
}

#[test]
fn refining_nested_grids_never_raises_lambda() {
    // g → 2g − 1 keeps every previous node
    let md = model(20);
    let bx = pinned_box();
    let mut last = f64::INFINITY;
    for g in [2, 3, 5, 9] {
        let cert = calibrate(&md, &bx, &SampleSpec::grid(g), None).unwrap();
        // fixed deltas isolate the min-over-superset argument
        let fixed = sample_box(&bx, &SampleSpec::grid(g), 1000)
            .unwrap()
            .iter()
            .map(|s| definiteness_margin(&md, &bx, &[0.04, 1.0], s).unwrap().0)
            .fold(f64::INFINITY, f64::min);
        assert!(fixed <= last);
        last = fixed;
        assert!(cert.lambda > 0.0);
    }
}

#[test]
fn single_layer_certificate() {
    let md = MeasurementModel::new(Geometry::homogeneous(), 4).unwrap();
    let bx = SigmaBox::uniform(1, 0.5, 2.0).unwrap();
    let cert = calibrate(&md, &bx, &SampleSpec::grid(3), None).unwrap();
    assert_eq!(cert.c, vec![1.0]);
    // λ_max(−F'(σ)) = 1/σ² is smallest at σ = 2
    assert_relative_eq!(cert.lambda, 0.25, max_relative = 1e-14);
}
