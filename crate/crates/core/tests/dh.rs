use halphen_core::darboux_halphen::{
    dh_integrate, dh_rhs, gamma_dh_residual, halphen_identities, theta_dh_residual,
    theta_real_solution, TrajectoryProvider,
};
use halphen_core::{Complex64, SeriesParams, TriadProvider, TriadState};
use proptest::prelude::*;

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64)
}

#[test]
fn closed_form_residual_uniform() {
    let par = SeriesParams::default();
    let worst = linspace(0.3, 5.0, 200)
        .map(|t| theta_dh_residual(t, &par).unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn complex_closed_form_off_axis() {
    let par = SeriesParams::default();
    for z in [Complex64::new(0.2, 0.9), Complex64::new(-0.4, 1.6)] {
        assert!(gamma_dh_residual(z, &par).unwrap() < 1e-8);
    }
}

/// Worst deviation from the closed form on [t0, t0 + 3] over 200 samples.
fn tracking_error(t0: f64, tol: f64) -> f64 {
    let par = SeriesParams::default();
    let tr = dh_integrate(theta_real_solution(t0, &par).unwrap(), t0 + 3.0, tol).unwrap();
    let mut worst: f64 = 0.0;
    for t in linspace(t0, t0 + 3.0, 200) {
        let num = tr.eval(t).unwrap().theta;
        let cf = theta_real_solution(t, &par).unwrap().theta;
        for i in 0..3 {
            worst = worst.max((num[i] - cf[i]).abs());
        }
    }
    worst
}

#[test]
fn integration_tracks_closed_form() {
    for t0 in [0.5, 1.0, 2.0] {
        for tol in [1e-8, 1e-10] {
            let e = tracking_error(t0, tol);
            assert!(e < 100.0 * tol, "t0={t0} tol={tol:e} err={e:e}");
        }
    }
}

#[test]
fn halving_tolerance_halves_error() {
    for tol in [1e-8, 1e-9, 1e-10] {
        let a = tracking_error(0.5, tol);
        let b = tracking_error(0.5, tol / 2.0);
        assert!(b <= 0.5 * a, "tol={tol:e}: {a:e} -> {b:e}");
    }
}

#[test]
fn halphen_identities_on_path() {
    let par = SeriesParams::default();
    for k in 0..20 {
        let z = Complex64::new(-0.3 + 0.03 * k as f64, 0.7 + 0.05 * k as f64);
        let h = halphen_identities(z, &par).unwrap();
        assert!(h.y_sum < 1e-9 && h.y_second < 1e-8, "{h:?}");
        assert!(h.jacobian.norm() > 1e-6);
    }
}

#[test]
fn trajectory_provider_is_a_flow() {
    let par = SeriesParams::default();
    let tr = dh_integrate(theta_real_solution(0.5, &par).unwrap(), 2.0, 1e-10).unwrap();
    let p = TrajectoryProvider(tr);
    let j = p.jet(1.0).unwrap();
    assert_eq!(j.d1, dh_rhs(&j.value));
}

fn triad() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-2.0f64..2.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sum_obeys_quadratic_law(th in triad()) {
        // (ΣΘ)′ = −(Θ¹Θ² + Θ²Θ³ + Θ³Θ¹)
        let r = dh_rhs(&th);
        let e2 = th[0] * th[1] + th[1] * th[2] + th[2] * th[0];
        prop_assert!((r.iter().sum::<f64>() + e2).abs() < 1e-12);
    }

    #[test]
    fn permutation_equivariant(th in prop::array::uniform3(0.1f64..1.0)) {
        let perm = [th[1], th[2], th[0]];
        let a = dh_integrate(TriadState::new(0.0, th), 1.0, 1e-10).unwrap().last().theta;
        let b = dh_integrate(TriadState::new(0.0, perm), 1.0, 1e-10).unwrap().last().theta;
        for i in 0..3 {
            prop_assert!((b[i] - a[(i + 1) % 3]).abs() < 1e-8);
        }
    }

    #[test]
    fn sum_law_along_trajectory(th in prop::array::uniform3(0.1f64..1.0)) {
        let tr = dh_integrate(TriadState::new(0.0, th), 1.0, 1e-11).unwrap();
        let s = |t: f64| tr.eval(t).unwrap().theta.iter().sum::<f64>();
        let h = 1e-3;
        let x = tr.eval(0.5).unwrap().theta;
        let fd = (s(0.5 + h) - s(0.5 - h)) / (2.0 * h);
        let want = -(x[0] * x[1] + x[1] * x[2] + x[2] * x[0]);
        prop_assert!((fd - want).abs() < 1e-5, "{fd} {want}");
    }
}
