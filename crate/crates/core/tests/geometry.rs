use halphen_core::bianchi_geometry::{
    first_bianchi_residual, curvature, maurer_cartan_at, solve_connection, sweep_csv, sweep_row,
    EulerPoint, DEFAULT_SIN_EXCLUSION,
};
use halphen_core::darboux_halphen::{Isotropic, Perturbed, Rescaled};
use halphen_core::{asd_residual, build_coframe_metric, ricci, ClosedForm, SeriesParams};
use proptest::prelude::*;

fn ah() -> ClosedForm {
    ClosedForm::atiyah_hitchin(SeriesParams::default())
}

fn s_values(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| 0.5 + 2.5 * k as f64 / (n - 1) as f64)
}

#[test]
fn ah_sweep_is_anti_self_dual_and_ricci_flat() {
    let m = build_coframe_metric(ah(), -3.0, -0.5).unwrap();
    for s in s_values(26) {
        let a = asd_residual(&m, -s).unwrap();
        assert!(a.residual < 1e-7, "s={s} {a:?}");
        assert!(a.torsion_residual < 1e-9);
        assert!(ricci(&m, -s).unwrap().max_abs < 1e-6);
    }
}

#[test]
fn perturbed_triad_is_detected() {
    let m = build_coframe_metric(Perturbed::new(ah(), 1e-2), -3.0, -0.5).unwrap();
    for s in s_values(11) {
        let a = asd_residual(&m, -s).unwrap();
        assert!(a.residual > 1e-4, "s={s}");
        assert!(a.torsion_residual < 1e-9);
    }
}

#[test]
fn sweep_rows_sorted_with_header() {
    let m = build_coframe_metric(ah(), -3.0, -0.5).unwrap();
    let rows: Vec<_> = [-3.0, -2.0, -1.0].iter().map(|&t| sweep_row(&m, t).unwrap()).collect();
    let csv = sweep_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,asd_residual,ricci_maxabs,f0sq,f1sq,f2sq,f3sq"));
    assert_eq!(lines.count(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flat_isotropic_curvature(c in 0.3f64..3.0, t in 0.0f64..2.0) {
        let m = build_coframe_metric(Isotropic { c }, 0.0, 2.0).unwrap();
        let r = curvature(&solve_connection(&m, t).unwrap());
        prop_assert!(r.max_abs() < 1e-8);
    }

    #[test]
    fn rescaled_ah_stays_asd(c in 0.5f64..2.0, s in 0.6f64..2.8) {
        let p = Rescaled { inner: ah(), c };
        let m = build_coframe_metric(p, -3.0 / c, -0.5 / c).unwrap();
        let a = asd_residual(&m, -s / c).unwrap();
        prop_assert!(a.residual < 1e-7 * c.max(1.0).powi(2), "{a:?}");
        let conn = solve_connection(&m, -s / c).unwrap();
        prop_assert!(first_bianchi_residual(&curvature(&conn)) < 1e-7);
    }

    #[test]
    fn maurer_cartan_structure(alpha in 0.2f64..2.9, beta in 0.0f64..6.2, psi in 0.0f64..12.5) {
        let p = EulerPoint::new(alpha, beta, psi).unwrap();
        let mc = maurer_cartan_at(&p, DEFAULT_SIN_EXCLUSION).unwrap();
        prop_assert!(mc.structure_residual < 1e-6);
        prop_assert!((mc.volume - alpha.sin()).abs() < 1e-14);
    }
}
