use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use halphen_core::bps_monopole::{bogomolny_residual, energy_and_charge, DerivativeMode, GridSpec, QuadratureSpec};
use halphen_core::darboux_halphen::{dh_integrate, theta_real_solution};
use halphen_core::modular_forms::ModularValues;
use halphen_core::moduli_space::{
    geodesic_integrate, solve_radial_schrodinger, sylvester_resultant, ConstantCoefficients,
    SchrodingerProblem,
};
use halphen_core::{
    asd_residual, build_coframe_metric, AhMetric, ClosedForm, Complex64, Gauge, GeodesicState,
    HalfPlanePoint, MonopoleConfig, SeriesParams,
};

fn series(c: &mut Criterion) {
    let par = SeriesParams::default();
    let p = HalfPlanePoint::new(Complex64::new(0.1, 0.8)).unwrap();
    c.bench_function("modular_values", |b| b.iter(|| ModularValues::at(black_box(&p), &par).unwrap()));
}

fn flow(c: &mut Criterion) {
    let par = SeriesParams::default();
    let init = theta_real_solution(0.5, &par).unwrap();
    c.bench_function("dh_integrate_3", |b| b.iter(|| dh_integrate(black_box(init), 3.5, 1e-10).unwrap()));
    let m = build_coframe_metric(ClosedForm::atiyah_hitchin(par), -3.0, -0.5).unwrap();
    c.bench_function("asd_residual", |b| b.iter(|| asd_residual(&m, black_box(-1.3)).unwrap()));
}

fn monopole(c: &mut Criterion) {
    let cfg = MonopoleConfig::bps(1.0, 1.0).unwrap();
    let grid = GridSpec { n: 12, half_width: 4.0 };
    c.bench_function("bogomolny_grid_analytic", |b| {
        b.iter(|| bogomolny_residual(&cfg, &grid, DerivativeMode::Analytic).unwrap())
    });
    c.bench_function("energy_and_charge", |b| {
        b.iter(|| energy_and_charge(&cfg, 40.0, &QuadratureSpec::default()).unwrap())
    });
}

fn moduli(c: &mut Criterion) {
    let a = [Complex64::new(0.3, -1.2), Complex64::new(1.1, 0.4)];
    let d = [Complex64::new(-0.7, 0.2), Complex64::new(0.0, 0.0)];
    c.bench_function("sylvester_k2", |b| b.iter(|| sylvester_resultant(black_box(&a), &d).unwrap()));
    let m = AhMetric::new(ClosedForm::atiyah_hitchin(SeriesParams::default()), -4.0, -0.2, Gauge::Theta).unwrap();
    let init = GeodesicState::new(&m, [-2.0, 1.0, 0.5, 0.2], [0.0, 0.2, 0.3, -0.1]).unwrap();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("geodesic_arc_10", |b| b.iter(|| geodesic_integrate(&m, &init, 10.0, 1e-10, 50).unwrap()));
    let prob = SchrodingerProblem {
        r0: 0.0,
        r1: std::f64::consts::PI,
        n: 2000,
        hbar: 1.0,
        coeffs: ConstantCoefficients::default(),
    };
    g.bench_function("schrodinger_2000", |b| b.iter(|| solve_radial_schrodinger(&prob, 5).unwrap()));
    g.finish();
}

criterion_group!(benches, series, flow, monopole, moduli);
criterion_main!(benches);
