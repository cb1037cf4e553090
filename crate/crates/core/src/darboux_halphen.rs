//! The Darboux-Halphen system, its numerical integration and its
//! quasi-modular closed-form solution.
//!
//! Real form: `dΘ¹/dt = Θ²Θ³ − Θ¹(Θ² + Θ³)` and cyclic permutations.
//! The complex triad `γ^i(z)` solves the same system in `z` and
//! `Θ^k(t) = iγ^k(it)` restricts it to the real line.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modular_forms::{
    eisenstein, eisenstein_derivative, theta, Eisenstein, HalfPlanePoint, SeriesParams, Theta,
};
use crate::ode::{self, Guard, Integration, Outcome, Stats, Tolerances};

/// Components above this magnitude are treated as a finite-time blow-up.
pub const BLOW_UP_GUARD: f64 = 1e12;

/// Largest imaginary part tolerated when restricting the closed form to the real line.
pub const REALITY_TOLERANCE: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriadState {
    pub t: f64,
    pub theta: [f64; 3],
}

impl TriadState {
    pub fn new(t: f64, theta: [f64; 3]) -> Self {
        Self { t, theta }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.theta.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexTriad {
    pub z: Complex64,
    pub gamma: [Complex64; 3],
    /// Bound on the truncation error of each component.
    pub tail_bound: f64,
}

impl ComplexTriad {
    pub fn is_anisotropic(&self, sep: f64) -> bool {
        let g = &self.gamma;
        (g[0] - g[1]).norm() > sep && (g[1] - g[2]).norm() > sep && (g[2] - g[0]).norm() > sep
    }
}

/// Right-hand side of the cyclic system.
pub fn dh_rhs(th: &[f64; 3]) -> [f64; 3] {
    let [a, b, c] = *th;
    [b * c - a * (b + c), c * a - b * (c + a), a * b - c * (a + b)]
}

/// Complex right-hand side; same polynomial as [`dh_rhs`].
pub fn dh_rhs_complex(g: &[Complex64; 3]) -> [Complex64; 3] {
    let [a, b, c] = *g;
    [b * c - a * (b + c), c * a - b * (c + a), a * b - c * (a + b)]
}

/// Jacobian `∂ rhs_i / ∂Θ_j`.
pub fn dh_jacobian(th: &[f64; 3]) -> [[f64; 3]; 3] {
    let [a, b, c] = *th;
    [
        [-(b + c), c - a, b - a],
        [c - b, -(c + a), a - b],
        [b - c, a - c, -(a + b)],
    ]
}

/// Second derivative along the flow, `J(Θ)·rhs(Θ)`.
pub fn dh_second_derivative(th: &[f64; 3]) -> [f64; 3] {
    let j = dh_jacobian(th);
    let d = dh_rhs(th);
    std::array::from_fn(|i| (0..3).map(|k| j[i][k] * d[k]).sum())
}

// ---------------------------------------------------------------------------
// integration

/// An integrated DH trajectory with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    run: Integration<3>,
    tol: f64,
}

impl Trajectory {
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn stats(&self) -> Stats {
        self.run.stats
    }

    pub fn t_start(&self) -> f64 {
        self.run.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.run.t_last()
    }

    pub fn last(&self) -> TriadState {
        TriadState::new(self.run.t_last(), self.run.y_last())
    }

    /// Accepted step endpoints, including the initial state, in integration order.
    pub fn samples(&self) -> Vec<TriadState> {
        let mut out = Vec::with_capacity(self.run.steps.len() + 1);
        out.push(TriadState::new(self.run.t_start, self.run.y_start));
        for s in &self.run.steps {
            out.push(TriadState::new(s.t1(), s.end()));
        }
        out
    }

    /// Dense-output state at `t` inside the integrated range.
    pub fn eval(&self, t: f64) -> Result<TriadState> {
        self.run
            .eval(t)
            .map(|y| TriadState::new(t, y))
            .ok_or_else(|| {
                Error::Domain(format!(
                    "t = {t} outside trajectory range [{}, {}]",
                    self.run.t_start.min(self.run.t_last()),
                    self.run.t_start.max(self.run.t_last())
                ))
            })
    }

    /// CSV over the step endpoints, sorted by t.
    pub fn to_csv(&self) -> String {
        let mut rows = self.samples();
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        states_to_csv(&rows)
    }
}

/// CSV with header `t,theta1,theta2,theta3`.
pub fn states_to_csv(rows: &[TriadState]) -> String {
    let mut s = String::from("t,theta1,theta2,theta3\n");
    for r in rows {
        let _ = writeln!(s, "{:e},{:e},{:e},{:e}", r.t, r.theta[0], r.theta[1], r.theta[2]);
    }
    s
}

/// Adaptive Dormand-Prince integration of the DH system from `initial` to `t_end`.
pub fn dh_integrate(initial: TriadState, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance {tol} must be positive")));
    }
    if !initial.is_finite() {
        return Err(Error::Parameter("initial triad is not finite".into()));
    }
    if !t_end.is_finite() || t_end == initial.t {
        return Err(Error::Parameter(format!(
            "t_end = {t_end} must be finite and differ from t0 = {}",
            initial.t
        )));
    }
    let run = ode::integrate(
        |_, y| Ok(dh_rhs(y)),
        initial.t,
        initial.theta,
        t_end,
        Tolerances::uniform(tol),
        |_, y| {
            if y.iter().any(|v| !(v.abs() <= BLOW_UP_GUARD)) {
                Guard::Stop("blow-up guard".into())
            } else {
                Guard::Continue
            }
        },
    )?;
    match &run.outcome {
        Outcome::Completed => Ok(Trajectory { run, tol }),
        Outcome::Stopped { t, reason } => {
            if reason.contains("budget") {
                Err(Error::Numerical(format!("{reason} at t = {t}")))
            } else {
                Err(Error::Singularity { time: *t })
            }
        }
    }
}

// ---------------------------------------------------------------------------
// closed form

fn theta4(kind: Theta, p: &HalfPlanePoint, params: &SeriesParams) -> Result<(Complex64, f64)> {
    let v = theta(kind, p, params)?;
    let x2 = v.value * v.value;
    let n = v.value.norm();
    // |(x+d)^4 − x^4| ≤ 4n³d + 6n²d² + 4nd³ + d⁴
    let d = v.tail_bound;
    let bound = 4.0 * n.powi(3) * d + 6.0 * n * n * d * d + 4.0 * n * d.powi(3) + d.powi(4);
    Ok((x2 * x2, bound))
}

/// The anisotropic quasi-modular triad
/// `γ¹ = −2 (log ϑ4)'`, `γ² = −2 (log ϑ2)'`, `γ³ = −2 (log ϑ3)'`,
/// written through `E2` and fourth powers of theta nullwerte.
pub fn gamma_closed_form(z: Complex64, params: &SeriesParams) -> Result<ComplexTriad> {
    let p = HalfPlanePoint::new(z)?;
    let e2 = eisenstein(Eisenstein::E2, &p, params)?;
    let (t2, b2) = theta4(Theta::Theta2, &p, params)?;
    let (t3, b3) = theta4(Theta::Theta3, &p, params)?;
    let (t4, b4) = theta4(Theta::Theta4, &p, params)?;
    let pre = PI / (6.0 * I);
    let gamma = [
        pre * (e2.value - t2 - t3),
        pre * (e2.value + t3 + t4),
        pre * (e2.value + t2 - t4),
    ];
    let tail_bound = pre.norm() * (e2.tail_bound + b2.max(b4) + b3.max(b4).max(b2));
    Ok(ComplexTriad {
        z,
        gamma,
        tail_bound,
    })
}

/// `Θ^k(t) = iγ^k(it)` together with its truncation bound.
pub fn theta_real_solution_bounded(t: f64, params: &SeriesParams) -> Result<(TriadState, f64)> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "t = {t}: q-series at z = it require t > 0 (|q| = exp(-2πt) < 1)"
        )));
    }
    let g = gamma_closed_form(Complex64::new(0.0, t), params)?;
    let vals = g.gamma.map(|x| I * x);
    for (k, v) in vals.iter().enumerate() {
        if v.im.abs() > REALITY_TOLERANCE.max(g.tail_bound) {
            return Err(Error::Consistency(format!(
                "theta{} at t = {t} has imaginary part {:e}",
                k + 1,
                v.im
            )));
        }
    }
    Ok((TriadState::new(t, vals.map(|v| v.re)), g.tail_bound))
}

pub fn theta_real_solution(t: f64, params: &SeriesParams) -> Result<TriadState> {
    theta_real_solution_bounded(t, params).map(|(s, _)| s)
}

/// Leading large-t behaviour `(−4π e^{−πt}, π/2, 4π e^{−πt})` of the closed form.
pub fn theta_real_asymptotic(t: f64) -> [f64; 3] {
    let e = (-PI * t).exp();
    [-4.0 * PI * e, 0.5 * PI, 4.0 * PI * e]
}

// ---------------------------------------------------------------------------
// identities

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalphenResiduals {
    pub z: Complex64,
    /// |y + 2(ω¹ + ω² + ω³)| with y = iπE2.
    pub y_sum: f64,
    /// |y″ + 12ω¹ω²ω³|, y″ from composed Ramanujan derivatives.
    pub y_second: f64,
    /// |y″ − (−iπ³/18)(E2³ − 3E2E4 + 2E6)|.
    pub y_second_closed: f64,
    /// Measured c in y′ = c (E2² − E4).
    pub y_prime_constant: Complex64,
    /// |y′ − 2(ω¹ω² + ω²ω³ + ω³ω¹)|.
    pub y_prime_symmetric: f64,
    /// J = (ω¹ − ω²)(ω² − ω³)(ω³ − ω¹).
    pub jacobian: Complex64,
    /// |ℰ^i − λ′·{1/λ, 1/(λ−1), 1/(λ(λ−1))}| with λ′ by central differences.
    pub lambda_chain: [f64; 3],
    /// |γ^i + ½ (log ℰ^i)′| with the derivative by central differences.
    pub log_derivative: [f64; 3],
}

impl HalphenResiduals {
    pub fn max_lambda_chain(&self) -> f64 {
        self.lambda_chain.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_log_derivative(&self) -> f64 {
        self.log_derivative.iter().cloned().fold(0.0, f64::max)
    }
}

fn fd_step(z: Complex64) -> f64 {
    1e-5 * z.norm().max(1.0)
}

struct Quartics {
    t2: Complex64,
    t3: Complex64,
    t4: Complex64,
}

fn quartics(z: Complex64, params: &SeriesParams) -> Result<Quartics> {
    let p = HalfPlanePoint::new(z)?;
    Ok(Quartics {
        t2: theta4(Theta::Theta2, &p, params)?.0,
        t3: theta4(Theta::Theta3, &p, params)?.0,
        t4: theta4(Theta::Theta4, &p, params)?.0,
    })
}

/// `ℰ¹ = iπϑ4⁴`, `ℰ² = −iπϑ2⁴`, `ℰ³ = −iπϑ3⁴`.
fn script_e(q: &Quartics) -> [Complex64; 3] {
    [I * PI * q.t4, -I * PI * q.t2, -I * PI * q.t3]
}

pub fn halphen_identities(z: Complex64, params: &SeriesParams) -> Result<HalphenResiduals> {
    let p = HalfPlanePoint::new(z)?;
    let w = gamma_closed_form(z, params)?.gamma;
    let e2 = eisenstein(Eisenstein::E2, &p, params)?.value;
    let e4 = eisenstein(Eisenstein::E4, &p, params)?.value;
    let e6 = eisenstein(Eisenstein::E6, &p, params)?.value;
    let de2 = eisenstein_derivative(Eisenstein::E2, &p, params)?.value;
    let de4 = eisenstein_derivative(Eisenstein::E4, &p, params)?.value;

    let y = I * PI * e2;
    let y1 = I * PI * de2;
    let d2e2 = (PI * I / 6.0) * (2.0 * e2 * de2 - de4);
    let y2 = I * PI * d2e2;
    let y2_closed = -(I * PI.powi(3) / 18.0) * (e2 * e2 * e2 - 3.0 * e2 * e4 + 2.0 * e6);

    let sym2 = w[0] * w[1] + w[1] * w[2] + w[2] * w[0];
    let prod = w[0] * w[1] * w[2];

    let h = fd_step(z);
    let qp = quartics(z + h, params)?;
    let qm = quartics(z - h, params)?;
    let q0 = quartics(z, params)?;
    let lam = |q: &Quartics| q.t2 / q.t3;
    let l0 = lam(&q0);
    let dl = (lam(&qp) - lam(&qm)) / (2.0 * h);
    let ecal = script_e(&q0);
    let chain = [dl / l0, dl / (l0 - 1.0), dl / (l0 * (l0 - 1.0))];
    let lambda_chain = std::array::from_fn(|i| (ecal[i] - chain[i]).norm());

    let ep = script_e(&qp);
    let em = script_e(&qm);
    let log_derivative = std::array::from_fn(|i| {
        let dlog = (ep[i] / em[i]).ln() / (2.0 * h);
        (w[i] + 0.5 * dlog).norm()
    });

    Ok(HalphenResiduals {
        z,
        y_sum: (y + 2.0 * (w[0] + w[1] + w[2])).norm(),
        y_second: (y2 + 12.0 * prod).norm(),
        y_second_closed: (y2 - y2_closed).norm(),
        y_prime_constant: y1 / (e2 * e2 - e4),
        y_prime_symmetric: (y1 - 2.0 * sym2).norm(),
        jacobian: (w[0] - w[1]) * (w[1] - w[2]) * (w[2] - w[0]),
        lambda_chain,
        log_derivative,
    })
}

/// Fourth-order central difference `(−f(2h) + 8f(h) − 8f(−h) + f(−2h)) / 12h`.
fn central5<T, F>(f: F, h: f64) -> Result<[T; 3]>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    F: Fn(f64) -> Result<[T; 3]>,
{
    let p2 = f(2.0 * h)?;
    let p1 = f(h)?;
    let m1 = f(-h)?;
    let m2 = f(-2.0 * h)?;
    Ok(std::array::from_fn(|i| {
        ((p1[i] - m1[i]) * 8.0 + (m2[i] - p2[i])) * (1.0 / (12.0 * h))
    }))
}

/// Residual `|dγ/dz − rhs(γ)|` of the complex closed form, derivative by
/// fourth-order central differences.
pub fn gamma_dh_residual(z: Complex64, params: &SeriesParams) -> Result<f64> {
    let h = 1e-4 * z.norm().max(1.0);
    let d = central5(|s| Ok(gamma_closed_form(z + s, params)?.gamma), h)?;
    let rhs = dh_rhs_complex(&gamma_closed_form(z, params)?.gamma);
    Ok((0..3).map(|i| (d[i] - rhs[i]).norm()).fold(0.0, f64::max))
}

/// Residual `max_i |dΘ^i/dt − rhs_i(Θ)|` of the real closed form, derivative
/// by fourth-order central differences.
pub fn theta_dh_residual(t: f64, params: &SeriesParams) -> Result<f64> {
    let h = 1e-4 * t.abs().max(1.0);
    let d = central5(|s| Ok(theta_real_solution(t + s, params)?.theta), h)?;
    let rhs = dh_rhs(&theta_real_solution(t, params)?.theta);
    Ok((0..3).map(|i| (d[i] - rhs[i]).abs()).fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// triad providers

/// Value and first two t-derivatives of a triad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriadJet {
    pub value: [f64; 3],
    pub d1: [f64; 3],
    pub d2: [f64; 3],
}

impl TriadJet {
    /// Jet of a DH solution through `value`.
    pub fn along_flow(value: [f64; 3]) -> Self {
        Self {
            value,
            d1: dh_rhs(&value),
            d2: dh_second_derivative(&value),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value
            .iter()
            .chain(&self.d1)
            .chain(&self.d2)
            .all(|x| x.is_finite())
    }
}

/// A t-dependent triad feeding the geometry.
pub trait TriadProvider: Send + Sync {
    fn jet(&self, t: f64) -> Result<TriadJet>;

    fn triad(&self, t: f64) -> Result<TriadState> {
        Ok(TriadState::new(t, self.jet(t)?.value))
    }

    fn label(&self) -> String;
}

impl<T: TriadProvider + ?Sized> TriadProvider for &T {
    fn jet(&self, t: f64) -> Result<TriadJet> {
        (**self).jet(t)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<T: TriadProvider + ?Sized> TriadProvider for Box<T> {
    fn jet(&self, t: f64) -> Result<TriadJet> {
        (**self).jet(t)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// `Θ^i = c/(1 + ct)`, the isotropic DH solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isotropic {
    pub c: f64,
}

impl Default for Isotropic {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

impl TriadProvider for Isotropic {
    fn jet(&self, t: f64) -> Result<TriadJet> {
        let den = 1.0 + self.c * t;
        if den == 0.0 {
            return Err(Error::Domain(format!("isotropic triad has a pole at t = {t}")));
        }
        let v = self.c / den;
        Ok(TriadJet {
            value: [v; 3],
            d1: [-v * v; 3],
            d2: [2.0 * v * v * v; 3],
        })
    }

    fn label(&self) -> String {
        format!("isotropic(c={})", self.c)
    }
}

/// A t-independent triad; not a DH solution unless it vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTriad(pub [f64; 3]);

impl TriadProvider for ConstantTriad {
    fn jet(&self, _t: f64) -> Result<TriadJet> {
        Ok(TriadJet {
            value: self.0,
            d1: [0.0; 3],
            d2: [0.0; 3],
        })
    }

    fn label(&self) -> String {
        format!("constant({:?})", self.0)
    }
}

/// How t-derivatives of the closed form are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivatives {
    /// `Θ′ = rhs(Θ)`, `Θ″ = J(Θ)·rhs(Θ)`.
    DhFlow,
    /// Central differences of the series with step `h`.
    FiniteDifference { h: f64 },
}

/// Branch of the real closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `Θ(t) = iγ(it)` for t > 0, sign pattern (−, +, +).
    Literal,
    /// `Θ(t) = −iγ(−it)` for t < 0, sign pattern (+, −, −); all products positive.
    AtiyahHitchin,
}

/// The quasi-modular triad restricted to the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub params: SeriesParams,
    pub branch: Branch,
    pub derivatives: Derivatives,
}

impl ClosedForm {
    pub fn literal(params: SeriesParams) -> Self {
        Self {
            params,
            branch: Branch::Literal,
            derivatives: Derivatives::DhFlow,
        }
    }

    pub fn atiyah_hitchin(params: SeriesParams) -> Self {
        Self {
            params,
            branch: Branch::AtiyahHitchin,
            derivatives: Derivatives::DhFlow,
        }
    }

    pub fn with_derivatives(mut self, d: Derivatives) -> Self {
        self.derivatives = d;
        self
    }

    fn value(&self, t: f64) -> Result<[f64; 3]> {
        match self.branch {
            Branch::Literal => Ok(theta_real_solution(t, &self.params)?.theta),
            Branch::AtiyahHitchin => Ok(theta_real_solution(-t, &self.params)?.theta.map(|x| -x)),
        }
    }
}

impl TriadProvider for ClosedForm {
    fn jet(&self, t: f64) -> Result<TriadJet> {
        let value = self.value(t)?;
        match self.derivatives {
            Derivatives::DhFlow => Ok(TriadJet::along_flow(value)),
            Derivatives::FiniteDifference { h } => {
                if !(h > 1e-12) {
                    return Err(Error::Parameter(format!("finite-difference step {h} too small")));
                }
                let p = self.value(t + h)?;
                let m = self.value(t - h)?;
                Ok(TriadJet {
                    value,
                    d1: std::array::from_fn(|i| (p[i] - m[i]) / (2.0 * h)),
                    d2: std::array::from_fn(|i| (p[i] - 2.0 * value[i] + m[i]) / (h * h)),
                })
            }
        }
    }

    fn label(&self) -> String {
        match self.branch {
            Branch::Literal => "closed-form".into(),
            Branch::AtiyahHitchin => "atiyah-hitchin".into(),
        }
    }
}

/// Multiplies component i by `1 + signs[i]·delta`, derivatives included.
/// The result does not solve the DH system for delta ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbed<P> {
    pub inner: P,
    pub delta: f64,
    pub signs: [f64; 3],
}

impl<P> Perturbed<P> {
    pub fn new(inner: P, delta: f64) -> Self {
        Self {
            inner,
            delta,
            signs: [1.0, -1.0, 1.0],
        }
    }
}

impl<P: TriadProvider> TriadProvider for Perturbed<P> {
    fn jet(&self, t: f64) -> Result<TriadJet> {
        let j = self.inner.jet(t)?;
        let f: [f64; 3] = std::array::from_fn(|i| 1.0 + self.signs[i] * self.delta);
        Ok(TriadJet {
            value: std::array::from_fn(|i| f[i] * j.value[i]),
            d1: std::array::from_fn(|i| f[i] * j.d1[i]),
            d2: std::array::from_fn(|i| f[i] * j.d2[i]),
        })
    }

    fn label(&self) -> String {
        format!("perturbed({}, delta={})", self.inner.label(), self.delta)
    }
}

/// `c·Θ(ct)`, again a DH solution when Θ is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaled<P> {
    pub inner: P,
    pub c: f64,
}

impl<P: TriadProvider> TriadProvider for Rescaled<P> {
    fn jet(&self, t: f64) -> Result<TriadJet> {
        let c = self.c;
        let j = self.inner.jet(c * t)?;
        Ok(TriadJet {
            value: j.value.map(|x| c * x),
            d1: j.d1.map(|x| c * c * x),
            d2: j.d2.map(|x| c * c * c * x),
        })
    }

    fn label(&self) -> String {
        format!("rescaled({}, c={})", self.inner.label(), self.c)
    }
}

/// `Θ(−t)`: reverses the orientation of the t-direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeReversed<P>(pub P);

impl<P: TriadProvider> TriadProvider for TimeReversed<P> {
    fn jet(&self, t: f64) -> Result<TriadJet> {
        let j = self.0.jet(-t)?;
        Ok(TriadJet {
            value: j.value,
            d1: j.d1.map(|x| -x),
            d2: j.d2,
        })
    }

    fn label(&self) -> String {
        format!("reversed({})", self.0.label())
    }
}

/// A numerically integrated trajectory as a provider.
#[derive(Debug, Clone)]
pub struct TrajectoryProvider(pub Trajectory);

impl TriadProvider for TrajectoryProvider {
    fn jet(&self, t: f64) -> Result<TriadJet> {
        Ok(TriadJet::along_flow(self.0.eval(t)?.theta))
    }

    fn label(&self) -> String {
        "trajectory".into()
    }
}
