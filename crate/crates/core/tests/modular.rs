use halphen_core::modular_forms::{
    eisenstein, eisenstein_derivative, eisenstein_partial, theta, transform_residuals,
    Eisenstein, ModularValues, Theta,
};
use halphen_core::{Complex64, HalfPlanePoint, SeriesParams};
use proptest::prelude::*;
use std::f64::consts::PI;

// Γ(1/4), Γ(3/4) to 20 digits (tabulated constants, independent of the series).
const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;
const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_177_6;

fn at(re: f64, im: f64) -> HalfPlanePoint {
    HalfPlanePoint::new(Complex64::new(re, im)).unwrap()
}

#[test]
fn special_values_at_i() {
    let p = at(0.0, 1.0);
    let par = SeriesParams::default();
    let m = ModularValues::at(&p, &par).unwrap();
    assert!((m.e2.value - 3.0 / PI).norm() < 1e-13);
    assert!(m.e6.value.norm() < 1e-13);
    let th3 = PI.powf(0.25) / GAMMA_THREE_QUARTERS;
    assert!((m.theta3.value.re - th3).abs() < 1e-13);
    let e4 = 3.0 * GAMMA_QUARTER.powi(8) / (2.0 * PI).powi(6);
    assert!((m.e4.value.re - e4).abs() < 1e-12 * e4);
    // ϑ2(i) = ϑ4(i) = 2^{-1/4} ϑ3(i)
    assert!((m.theta2.value.re - th3 / 2f64.powf(0.25)).abs() < 1e-13);
    assert!((m.theta4.value.re - th3 / 2f64.powf(0.25)).abs() < 1e-13);
}

#[test]
fn cusp_limit() {
    let p = at(0.1, 12.0);
    let par = SeriesParams::default();
    let m = ModularValues::at(&p, &par).unwrap();
    assert!((m.e2.value - 1.0).norm() < 1e-20_f64.max(24.0 * p.q().norm() * 2.0));
    assert!(m.theta2.value.norm() < 3.0 * p.q_half().norm().powf(0.25));
    assert!((m.theta3.value - 1.0).norm() < 3.0 * p.q_half().norm());
    let d = eisenstein_derivative(Eisenstein::E2, &p, &par).unwrap();
    assert!(d.value.norm() < 1e-20_f64.max(1e3 * p.q().norm()));
}

#[test]
fn lower_half_plane_rejected() {
    assert!(HalfPlanePoint::new(Complex64::new(0.2, -1.0)).is_err());
    assert!(HalfPlanePoint::new(Complex64::new(0.2, 0.0)).is_err());
}

#[test]
fn truncation_failure_reported() {
    let p = at(0.0, 0.06);
    let short = SeriesParams::new(5, 1e-15).unwrap();
    assert!(eisenstein(Eisenstein::E4, &p, &short).is_err());
    assert!(theta(Theta::Theta3, &p, &short).is_err());
}

#[test]
fn stable_under_doubling_terms() {
    let p = at(0.0, 1.0);
    let a = eisenstein_partial(Eisenstein::E4, &p, 20);
    let b = eisenstein_partial(Eisenstein::E4, &p, 40);
    assert!((a.value - b.value).norm() <= a.tail_bound);
}

fn tau() -> impl Strategy<Value = (f64, f64)> {
    (-0.5f64..0.5, 0.5f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_identity((re, im) in tau()) {
        let p = at(re, im);
        let m = ModularValues::at(&p, &SeriesParams::default()).unwrap();
        let r = m.theta3.value.powi(4) - m.theta2.value.powi(4) - m.theta4.value.powi(4);
        prop_assert!(r.norm() < 1e-12, "{}", r.norm());
    }

    #[test]
    fn e4_from_thetas((re, im) in tau()) {
        let p = at(re, im);
        let m = ModularValues::at(&p, &SeriesParams::default()).unwrap();
        let s = (m.theta2.value.powi(8) + m.theta3.value.powi(8) + m.theta4.value.powi(8)) / 2.0;
        prop_assert!((m.e4.value - s).norm() < 1e-11);
    }

    #[test]
    fn s_laws((re, im) in tau()) {
        let p = at(re, im);
        let r = transform_residuals(&p, &SeriesParams::default()).unwrap();
        prop_assert!(r.e2 < 1e-10, "{r:?}");
        prop_assert!(r.e4 < 1e-9 && r.e6 < 1e-8, "{r:?}");
    }

    #[test]
    fn tail_bound_monotone((re, im) in tau(), n in 2usize..40) {
        let p = at(re, im);
        for kind in [Eisenstein::E2, Eisenstein::E4, Eisenstein::E6] {
            let a = eisenstein_partial(kind, &p, n);
            let b = eisenstein_partial(kind, &p, n + 1);
            prop_assert!(b.tail_bound <= a.tail_bound);
        }
    }

    #[test]
    fn deterministic((re, im) in tau()) {
        let p = at(re, im);
        let par = SeriesParams::default();
        prop_assert_eq!(ModularValues::at(&p, &par).unwrap(), ModularValues::at(&p, &par).unwrap());
    }

    #[test]
    fn ramanujan_against_differences((re, im) in tau()) {
        let par = SeriesParams::default();
        let h = 1e-4;
        for kind in [Eisenstein::E2, Eisenstein::E4, Eisenstein::E6] {
            let d = eisenstein_derivative(kind, &at(re, im), &par).unwrap().value;
            let fp = eisenstein(kind, &at(re + h, im), &par).unwrap().value;
            let fm = eisenstein(kind, &at(re - h, im), &par).unwrap().value;
            let fd = (fp - fm) / (2.0 * h);
            prop_assert!((d - fd).norm() < 1e-5 * d.norm().max(1.0), "{kind:?} {d} {fd}");
        }
    }
}
