use num_complex::Complex64;
use prepost::histories::{assign_probabilities, decoherence_matrix};
use prepost::scenarios::ParamValue;
use prepost::{
    abl_over_family, hm_closed_forms, hm_scenario, hm_scenario_with_order, Error, SlotOrder,
    DEFAULT_TOL,
};

const DIMS: std::ops::RangeInclusive<usize> = 2..=6;

/// `(1, (d²−1)², (d²−1)², (d²−1)²) / (3d⁴ − 6d² + 4)` evaluated in floats.
fn expected_probabilities(d: usize) -> [f64; 4] {
    let d2 = (d * d) as f64;
    let u = (d2 - 1.0).powi(2);
    let z = 3.0 * d2 * d2 - 6.0 * d2 + 4.0;
    [1.0 / z, u / z, u / z, u / z]
}

#[test]
fn matches_closed_forms_across_dimensions() {
    for d in DIMS {
        let sc = hm_scenario(d).unwrap();
        let cf = hm_closed_forms(d).unwrap();
        assert_eq!(sc.closed_forms.as_ref(), Some(&cf));

        let norm = sc.rho_i.trace_of_product(&sc.rho_f).unwrap();
        assert!(
            (norm - Complex64::new(1.0, 0.0)).norm() < 1e-9,
            "d={d}: {norm}"
        );

        let abl = abl_over_family(&sc.family, &sc.rho_i, &sc.rho_f).unwrap();
        let want = expected_probabilities(d);
        for ((p, c), w) in abl.values().iter().zip(cf.probabilities).zip(want) {
            assert!((p - c).abs() < 1e-9, "d={d}");
            assert!((c - w).abs() < 1e-15);
        }
        assert!((abl.values().iter().sum::<f64>() - 1.0).abs() < 1e-10);

        let dm = decoherence_matrix(&sc.family, &sc.rho_i, &sc.rho_f).unwrap();
        let d2 = (d * d) as f64;
        let offdiag = 1.0 / d2 - 1.0 / (d2 * d2);
        assert!((dm.get(0, 1).re - offdiag).abs() < 1e-9, "d={d}");
        assert!(dm.get(0, 1).im.abs() < 1e-9);
        assert!((cf.offdiag_12 - offdiag).abs() < 1e-15);

        match assign_probabilities(&dm, DEFAULT_TOL) {
            Err(Error::NotConsistent(v)) => {
                assert!(v.max_violation >= cf.offdiag_12 - 1e-9);
                assert!(!v.consistent);
            }
            other => panic!("d={d}: expected refusal, got {other:?}"),
        }
    }
}

#[test]
fn closed_form_numerators_sum_to_denominator() {
    for d in 2..=50 {
        let cf = hm_closed_forms(d).unwrap();
        assert_eq!(cf.numerators.iter().sum::<u128>(), cf.denominator);
    }
}

#[test]
fn decoherence_matrix_independent_of_rho_f_scale() {
    let sc = hm_scenario(2).unwrap();
    let base = decoherence_matrix(&sc.family, &sc.rho_i, &sc.rho_f).unwrap();
    let scaled = sc.rho_f.scale(Complex64::new(7.5, 0.0));
    let other = decoherence_matrix(&sc.family, &sc.rho_i, &scaled).unwrap();
    assert!(base.entries().approx_eq(other.entries(), 1e-12));
    assert!((other.norm_trace().re - 7.5).abs() < 1e-12);
}

#[test]
fn rescale_is_recorded() {
    for d in 2..=4 {
        let sc = hm_scenario(d).unwrap();
        assert!(
            matches!(sc.params["rho_f_rescale"], ParamValue::Real(r) if (r - 1.0).abs() < 1e-9)
        );
        assert_eq!(sc.param_int("d"), Some(d as i64));
    }
}

#[test]
fn swapped_order_changes_distribution() {
    let standard = hm_scenario(2).unwrap();
    let swapped = hm_scenario_with_order(2, SlotOrder::Swapped).unwrap();
    assert!(swapped.closed_forms.is_none());
    let a = abl_over_family(&standard.family, &standard.rho_i, &standard.rho_f).unwrap();
    let b = abl_over_family(&swapped.family, &swapped.rho_i, &swapped.rho_f).unwrap();
    assert!((b.values().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    let max_diff = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(max_diff > 1e-3, "{:?} vs {:?}", a.values(), b.values());
}

#[test]
fn degenerate_dimension_rejected() {
    assert!(matches!(hm_scenario(1), Err(Error::DegenerateDimension(1))));
    assert!(matches!(
        hm_closed_forms(0),
        Err(Error::DegenerateDimension(0))
    ));
}

#[test]
fn abl_answers_where_histories_refuse() {
    let spin = prepost::spin_scenario();
    let (rho_f, family) = spin.histories_setup();
    let d = decoherence_matrix(family, &spin.rho_i, rho_f).unwrap();
    assert!(matches!(
        assign_probabilities(&d, DEFAULT_TOL),
        Err(Error::NotConsistent(_))
    ));
    let abl = abl_over_family(family, &spin.rho_i, rho_f).unwrap();
    assert!((abl.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let hm = hm_scenario(2).unwrap();
    let d = decoherence_matrix(&hm.family, &hm.rho_i, &hm.rho_f).unwrap();
    assert!(matches!(
        assign_probabilities(&d, DEFAULT_TOL),
        Err(Error::NotConsistent(_))
    ));
    assert!(abl_over_family(&hm.family, &hm.rho_i, &hm.rho_f).is_ok());
}
