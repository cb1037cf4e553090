use halphen_core::darboux_halphen::ClosedForm;
use halphen_core::moduli_space::{
    constant_energy, geodesic_integrate, k2_closed_form, k2_resultant, node_count,
    solve_radial_schrodinger, sylvester_resultant, weighted_inner, ConstantCoefficients,
    SchrodingerProblem, TriadCoefficients,
};
use halphen_core::{
    AhMetric, Complex64 as C, Error, Gauge, GeodesicState, RationalMap, SeriesParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_c(rng: &mut ChaCha8Rng) -> C {
    C::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
}

#[test]
fn sylvester_matches_closed_form_on_seeded_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (a0, a1, b0) = (random_c(&mut rng), random_c(&mut rng), random_c(&mut rng));
        let (d, _) = sylvester_resultant(&[a0, a1], &[b0, C::new(0.0, 0.0)]).unwrap();
        let want = k2_closed_form(a0, a1, b0);
        assert!((d - want).norm() <= 1e-12 * want.norm().max(1e-300), "{d} {want}");
    }
}

#[test]
fn planted_shared_roots_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        // numerator a1 (z − r), denominator (z − r)(z − s)
        let (r, s, a1) = (random_c(&mut rng), random_c(&mut rng), random_c(&mut rng));
        let a = vec![-a1 * r, a1];
        let b = vec![r * s, -(r + s)];
        assert!(matches!(RationalMap::new(a.clone(), b.clone()), Err(Error::DegenerateMap { .. })));
        // moving the numerator root off the denominator roots restores a valid map
        let shifted = vec![-a1 * (r + C::new(0.5, 0.25)), a1];
        if (r + C::new(0.5, 0.25) - s).norm() > 1e-3 {
            let m = RationalMap::new(shifted, b).unwrap();
            assert!(m.delta().norm() > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn general_k2_resultant(re in prop::array::uniform8(-2.0f64..2.0)) {
        let [a0, a1, b0, b1] = [0, 2, 4, 6].map(|i| C::new(re[i], re[i + 1]));
        let (d, _) = sylvester_resultant(&[a0, a1], &[b0, b1]).unwrap();
        let want = k2_resultant(a0, a1, b0, b1);
        let scale = a0.norm().max(a1.norm()).max(1.0).powi(2) * b0.norm().max(b1.norm()).max(1.0);
        prop_assert!((d - want).norm() < 1e-12 * scale);
    }

    #[test]
    fn resultant_vanishes_iff_common_root(r in -2.0f64..2.0, s in -2.0f64..2.0, gap in 0.05f64..1.0) {
        let num = |root: f64| vec![C::new(-root, 0.0), C::new(1.0, 0.0)];
        let den = vec![C::new(r * s, 0.0), C::new(-(r + s), 0.0)];
        let (shared, bound) = sylvester_resultant(&num(r), &den).unwrap();
        prop_assert!(shared.norm() <= 1e-12 * bound);
        let (apart, _) = sylvester_resultant(&num(r + gap), &den).unwrap();
        // Δ = (root − r)(root − s) for a monic linear numerator
        let want = gap * (r + gap - s);
        prop_assert!((apart.re - want).abs() < 1e-12 * want.abs().max(1.0));
    }
}

fn ah_metric() -> AhMetric<ClosedForm> {
    AhMetric::new(ClosedForm::atiyah_hitchin(SeriesParams::default()), -4.0, -0.2, Gauge::Theta).unwrap()
}

#[test]
fn geodesic_drift_scales_with_tolerance() {
    let m = ah_metric();
    let init = GeodesicState::new(&m, [-2.0, 1.0, 0.5, 0.2], [0.0, 0.2, 0.3, -0.1]).unwrap();
    let drift = |tol: f64| {
        let r = geodesic_integrate(&m, &init, 10.0, tol, 0).unwrap();
        assert!(r.exit.is_none(), "{:?}", r.exit);
        r.norm2_drift.max(r.p_beta_drift)
    };
    let (d8, d10) = (drift(1e-8), drift(1e-10));
    assert!(d10 < 1e-8, "{d10:e}");
    assert!(d8 / d10 >= 10.0, "{d8:e} {d10:e}");
}

#[test]
fn zero_velocity_is_fixed() {
    let m = ah_metric();
    let x = [-1.5, 1.2, 2.0, 3.0];
    let init = GeodesicState::new(&m, x, [0.0; 4]).unwrap();
    let r = geodesic_integrate(&m, &init, 10.0, 1e-10, 5).unwrap();
    for s in &r.samples {
        assert_eq!(s.x, x);
    }
    assert_eq!(r.norm2_drift, 0.0);
}

#[test]
fn constant_spectrum_and_refinement() {
    let prob = |n| SchrodingerProblem { r0: 0.0, r1: PI, n, hbar: 1.0, coeffs: ConstantCoefficients::default() };
    let s = solve_radial_schrodinger(&prob(2000), 5).unwrap();
    for (k, e) in s.energies.iter().enumerate() {
        let want = constant_energy(k + 1, PI, 1.0);
        assert!((e / want - 1.0).abs() < 1e-3);
    }
    let coarse = solve_radial_schrodinger(&prob(499), 3).unwrap();
    let fine = solve_radial_schrodinger(&prob(999), 3).unwrap();
    let want = constant_energy(3, PI, 1.0);
    let ratio = (coarse.energies[2] - want) / (fine.energies[2] - want);
    assert!((3.8..4.2).contains(&ratio), "{ratio}");
}

#[test]
fn triad_preset_is_ordered_and_nodeless() {
    let coeffs = TriadCoefficients(ClosedForm::literal(SeriesParams::default()));
    let run = |n| {
        solve_radial_schrodinger(&SchrodingerProblem { r0: 0.5, r1: 3.0, n, hbar: 1.0, coeffs: coeffs.clone() }, 4)
            .unwrap()
    };
    let s = run(400);
    for k in 1..4 {
        assert!(s.lambda[k] > s.lambda[k - 1]);
    }
    for k in 0..4 {
        assert_eq!(node_count(&s, k), k);
        assert!((weighted_inner(&s, k, k) - 1.0).abs() < 1e-10);
        for j in 0..k {
            assert!(weighted_inner(&s, j, k).abs() < 1e-10);
        }
    }
    // stable under refinement
    let f = run(800);
    for k in 0..4 {
        assert!((f.lambda[k] / s.lambda[k] - 1.0).abs() < 1e-3);
    }
}

#[test]
fn scattering_pole_follows_transverse_shifts_only() {
    use halphen_core::moduli_space::{scattering_csv, scattering_map, ScatteringGrid, ScatteringSetup};
    use halphen_core::MonopoleConfig;
    let (grid, setup) = (ScatteringGrid::default(), ScatteringSetup::default());
    for c in [[0.0, -1.0, 0.0], [0.6, 0.8, 0.0], [0.3, 0.2, 1.5]] {
        let r = scattering_map(&MonopoleConfig::default().with_center(c), &grid, &setup).unwrap();
        assert_eq!(r.degree, 1);
        let z0 = C::new(c[0], c[1]);
        let p = r.pole.unwrap();
        assert!((p - z0).norm() <= 0.05 * z0.norm().max(1.0), "{p} vs {z0}");
    }
    let r = scattering_map(&MonopoleConfig::default(), &grid, &setup).unwrap();
    let csv = scattering_csv(&r);
    assert!(csv.starts_with("re_z,im_z,a_fit,b_fit,residual\n"));
    assert_eq!(csv.lines().count(), 1 + grid.n * grid.n);
}
