//! Two-monopole moduli space toolkit: based rational maps and their
//! resultants, the k = 2 surface, the Bianchi IX metric in Euler
//! coordinates with geodesic motion, line scattering of a single monopole,
//! and the radial Schrödinger problem in the j = 0 sector.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::bianchi_geometry::{
    build_coframe_metric, sigma_components, CoframeMetric, DEFAULT_SIN_EXCLUSION,
};
use crate::bps_monopole::{hedgehog_fields, MonopoleConfig};
use crate::darboux_halphen::TriadProvider;
use crate::error::{Error, Result};
use crate::ode::{integrate, Guard, Integration, Outcome, Stats, Tolerances};
use crate::quadrature::adaptive_simpson;

type C = Complex64;

// ---------------------------------------------------------------------------
// rational maps

/// `|Δ| ≤ DEGENERACY_RTOL · (Hadamard bound)` counts as a vanishing resultant.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// `S(z) = (Σ_{i<k} a_i z^i) / (z^k + Σ_{i<k} b_i z^i)`; numerator and denominator coprime.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMap {
    a: Vec<C>,
    b: Vec<C>,
    delta: C,
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut m: Vec<Vec<C>>) -> C {
    let n = m.len();
    let mut det = C::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap_or(col);
        if m[piv][col] == C::new(0.0, 0.0) {
            return C::new(0.0, 0.0);
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != C::new(0.0, 0.0) {
                for c in col..n {
                    let v = m[col][c];
                    m[r][c] -= f * v;
                }
            }
        }
    }
    det
}

/// Sylvester matrix of p, q given by descending coefficients.
pub fn sylvester_matrix(p: &[C], q: &[C]) -> Vec<Vec<C>> {
    let m = p.len() - 1;
    let n = q.len() - 1;
    let size = m + n;
    let mut s = vec![vec![C::new(0.0, 0.0); size]; size];
    for r in 0..n {
        for (j, c) in p.iter().enumerate() {
            s[r][r + j] = *c;
        }
    }
    for r in 0..m {
        for (j, c) in q.iter().enumerate() {
            s[n + r][r + j] = *c;
        }
    }
    s
}

/// Resultant of the numerator (formal degree k − 1) and the monic denominator,
/// with the Hadamard bound of its Sylvester matrix.
pub fn sylvester_resultant(a: &[C], b: &[C]) -> Result<(C, f64)> {
    let k = a.len();
    if k == 0 || b.len() != k {
        return Err(Error::Parameter(format!(
            "need k ≥ 1 numerator and denominator coefficients, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::Parameter("non-finite rational map coefficient".into()));
    }
    let p: Vec<C> = a.iter().rev().cloned().collect();
    let mut q = vec![C::new(1.0, 0.0)];
    q.extend(b.iter().rev());
    let s = sylvester_matrix(&p, &q);
    let bound: f64 = s
        .iter()
        .map(|row| row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .product();
    Ok((determinant(s), bound))
}

/// The centred k = 2 closed form `a₀² + b₀a₁²` (denominator `z² + b₀`).
pub fn k2_closed_form(a0: C, a1: C, b0: C) -> C {
    a0 * a0 + b0 * a1 * a1
}

/// General k = 2 resultant `a₀² − a₀a₁b₁ + b₀a₁²`.
pub fn k2_resultant(a0: C, a1: C, b0: C, b1: C) -> C {
    a0 * a0 - a0 * a1 * b1 + b0 * a1 * a1
}

impl RationalMap {
    pub fn new(a: Vec<C>, b: Vec<C>) -> Result<Self> {
        let (delta, bound) = sylvester_resultant(&a, &b)?;
        if delta.norm() <= DEGENERACY_RTOL * bound {
            return Err(Error::DegenerateMap {
                resultant: delta.norm(),
            });
        }
        Ok(Self { a, b, delta })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn numerator_coeffs(&self) -> &[C] {
        &self.a
    }

    pub fn denominator_coeffs(&self) -> &[C] {
        &self.b
    }

    pub fn delta(&self) -> C {
        self.delta
    }

    pub fn numerator(&self, z: C) -> C {
        self.a.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn denominator(&self, z: C) -> C {
        self.b.iter().rev().fold(C::new(1.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn eval(&self, z: C) -> C {
        self.numerator(z) / self.denominator(z)
    }
}

/// Membership residual and involution-orbit representative on `x² − z y² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub residual: f64,
    /// Lexicographic maximum of `(x, y, z)` and `(−x, −y, z)`.
    pub representative: [f64; 3],
}

impl SurfacePoint {
    pub fn on_surface(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

pub fn k2_surface(x: f64, y: f64, z: f64) -> SurfacePoint {
    let p = [x, y, z];
    let q = [-x, -y, z];
    let rep = if q.partial_cmp(&p) == Some(std::cmp::Ordering::Greater) {
        q
    } else {
        p
    };
    SurfacePoint {
        residual: (x * x - z * y * y - 1.0).abs(),
        representative: rep.map(|v| if v == 0.0 { 0.0 } else { v }),
    }
}

// ---------------------------------------------------------------------------
// metric in Euler coordinates

/// Radial coordinate of the coordinate metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// DH time t with `g_tt = Θ¹Θ²Θ³`.
    Theta,
    /// Proper radial distance s with `g_ss = 1`, `ds = sqrt(Θ¹Θ²Θ³) dt`, s = 0 at the domain start.
    UnitLapse,
}

#[derive(Debug, Clone)]
struct ProperTime {
    table: Integration<1>,
    s_max: f64,
}

/// `g = g₀₀ dx⁰² + Σ_i f_i² (σ^i)²` on coordinates `(x⁰, α, β, ψ)`.
#[derive(Debug, Clone)]
pub struct AhMetric<P> {
    base: CoframeMetric<P>,
    gauge: Gauge,
    proper: Option<ProperTime>,
}

/// Relative step of the central differences behind the Christoffel symbols.
pub const CHRISTOFFEL_STEP: f64 = 1e-5;

fn angular_metric(c: &[f64; 4], g00: f64, alpha: f64, psi: f64) -> [[f64; 4]; 4] {
    let s = sigma_components(alpha, psi);
    let mut g = [[0.0; 4]; 4];
    g[0][0] = g00;
    for mu in 0..3 {
        for nu in 0..3 {
            g[mu + 1][nu + 1] = (0..3).map(|i| c[i + 1] * s[i][mu] * s[i][nu]).sum();
        }
    }
    g
}

impl<P: TriadProvider> AhMetric<P> {
    pub fn new(provider: P, start: f64, end: f64, gauge: Gauge) -> Result<Self> {
        let base = build_coframe_metric(provider, start, end)?;
        let proper = match gauge {
            Gauge::Theta => None,
            Gauge::UnitLapse => {
                let (t0, t1) = base.domain();
                let table = integrate(
                    |t, _| Ok([base.coefficients(t)?[0].sqrt()]),
                    t0,
                    [0.0],
                    t1,
                    Tolerances::uniform(1e-13),
                    |_, _| Guard::Continue,
                )?;
                if table.outcome != Outcome::Completed {
                    return Err(Error::Numerical("proper-distance table incomplete".into()));
                }
                let s_max = table.y_last()[0];
                Some(ProperTime { table, s_max })
            }
        };
        Ok(Self { base, gauge, proper })
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn base(&self) -> &CoframeMetric<P> {
        &self.base
    }

    /// Range of the radial coordinate x⁰.
    pub fn radial_range(&self) -> (f64, f64) {
        match &self.proper {
            None => self.base.domain(),
            Some(p) => (0.0, p.s_max),
        }
    }

    /// DH time at radial coordinate x⁰.
    pub fn dh_time(&self, x0: f64) -> Result<f64> {
        let Some(p) = &self.proper else {
            return Ok(x0);
        };
        if !(0.0..=p.s_max).contains(&x0) {
            return Err(Error::Domain(format!("s = {x0} outside [0, {}]", p.s_max)));
        }
        let (mut lo, mut hi) = self.base.domain();
        let mut t = lo + (hi - lo) * x0 / p.s_max;
        // safeguarded Newton on s(t) = x0 with ds/dt = f₀ > 0
        for _ in 0..100 {
            let s = p.table.eval(t).map(|v| v[0]).unwrap_or(f64::NAN);
            let r = s - x0;
            if r.abs() <= 1e-15 * p.s_max.max(1.0) {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let f0 = self.base.coefficients(t)?[0].sqrt();
            let tn = t - r / f0;
            t = if tn > lo && tn < hi { tn } else { 0.5 * (lo + hi) };
        }
        Ok(t)
    }

    /// `(g₀₀, f₁², f₂², f₃²)` at radial coordinate x⁰.
    pub fn coefficients(&self, x0: f64) -> Result<[f64; 4]> {
        let mut c = self.base.coefficients(self.dh_time(x0)?)?;
        if self.gauge == Gauge::UnitLapse {
            c[0] = 1.0;
        }
        Ok(c)
    }

    fn check_chart(&self, p: &[f64; 4]) -> Result<()> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite chart point".into()));
        }
        if !(0.0..PI).contains(&p[1]) || p[1].sin() < DEFAULT_SIN_EXCLUSION {
            return Err(Error::Domain(format!(
                "alpha = {} outside the chart (sin alpha ≥ {DEFAULT_SIN_EXCLUSION})",
                p[1]
            )));
        }
        Ok(())
    }

    /// Symmetric positive-definite coordinate metric at `(x⁰, α, β, ψ)`.
    pub fn metric_at(&self, p: &[f64; 4]) -> Result<Matrix4<f64>> {
        self.check_chart(p)?;
        let c = self.coefficients(p[0])?;
        let g = angular_metric(&c, c[0], p[1], p[3]);
        let m = Matrix4::from_fn(|i, j| g[i][j]);
        if m.cholesky().is_none() {
            return Err(Error::Numerical(format!("metric not positive definite at {p:?}")));
        }
        Ok(m)
    }

    /// `Γ^μ_νρ` from fourth-order central differences of the metric (relative step [`CHRISTOFFEL_STEP`]).
    pub fn christoffel(&self, p: &[f64; 4]) -> Result<[[[f64; 4]; 4]; 4]> {
        self.check_chart(p)?;
        let x0 = p[0];
        let c = self.coefficients(x0)?;
        let g = angular_metric(&c, c[0], p[1], p[3]);
        // dg[σ][ν][ρ] = ∂_σ g_νρ
        let mut dg = [[[0.0; 4]; 4]; 4];
        for sig in 0..4 {
            let h = CHRISTOFFEL_STEP * p[sig].abs().max(1.0);
            let at = |k: f64| -> Result<[[f64; 4]; 4]> {
                if sig == 0 {
                    let ck = self.coefficients(x0 + k * h)?;
                    Ok(angular_metric(&ck, ck[0], p[1], p[3]))
                } else {
                    let mut q = *p;
                    q[sig] += k * h;
                    Ok(angular_metric(&c, c[0], q[1], q[3]))
                }
            };
            let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
            for nu in 0..4 {
                for rho in 0..4 {
                    dg[sig][nu][rho] = (8.0 * (p1[nu][rho] - m1[nu][rho]) - (p2[nu][rho] - m2[nu][rho])) / (12.0 * h);
                }
            }
        }
        let m = Matrix4::from_fn(|i, j| g[i][j]);
        let inv = m
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("metric not positive definite at {p:?}")))?
            .inverse();
        let mut gam = [[[0.0; 4]; 4]; 4];
        for mu in 0..4 {
            for nu in 0..4 {
                for rho in nu..4 {
                    let v: f64 = (0..4)
                        .map(|s| inv[(mu, s)] * (dg[nu][s][rho] + dg[rho][s][nu] - dg[s][nu][rho]))
                        .sum::<f64>()
                        * 0.5;
                    gam[mu][nu][rho] = v;
                    gam[mu][rho][nu] = v;
                }
            }
        }
        Ok(gam)
    }
}

/// Coordinate metric at p; see [`AhMetric::metric_at`].
pub fn ah_metric_at<P: TriadProvider>(m: &AhMetric<P>, p: &[f64; 4]) -> Result<Matrix4<f64>> {
    m.metric_at(p)
}

// ---------------------------------------------------------------------------
// geodesics

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    /// `(x⁰, α, β, ψ)`.
    pub x: [f64; 4],
    pub v: [f64; 4],
    pub norm2: f64,
    /// Momentum conjugate to the cyclic angle β.
    pub p_beta: f64,
}

impl GeodesicState {
    pub fn new<P: TriadProvider>(m: &AhMetric<P>, x: [f64; 4], v: [f64; 4]) -> Result<Self> {
        let g = m.metric_at(&x)?;
        let (norm2, p_beta) = conserved(&g, &v);
        Ok(Self { x, v, norm2, p_beta })
    }
}

fn conserved(g: &Matrix4<f64>, v: &[f64; 4]) -> (f64, f64) {
    let mut n2 = 0.0;
    let mut pb = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            n2 += g[(i, j)] * v[i] * v[j];
        }
        pb += g[(2, i)] * v[i];
    }
    (n2, pb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSample {
    pub s: f64,
    pub x: [f64; 4],
    pub norm2: f64,
    pub p_beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicReport {
    pub initial: GeodesicState,
    pub samples: Vec<GeodesicSample>,
    /// Largest `|norm²(s) − norm²(0)| / |norm²(0)|` over accepted steps (absolute if norm²(0) = 0).
    pub norm2_drift: f64,
    /// Largest `|p_β(s) − p_β(0)|`, relative to `max(|p_β(0)|, sqrt(norm²(0) g_ββ(0)))`.
    pub p_beta_drift: f64,
    /// Arc parameter reached.
    pub arc: f64,
    /// Set when the orbit left the chart or the positivity window.
    pub exit: Option<String>,
    pub stats: Stats,
}

/// Integrates the geodesic equations for affine parameter `arc`.
pub fn geodesic_integrate<P: TriadProvider>(
    m: &AhMetric<P>,
    initial: &GeodesicState,
    arc: f64,
    tol: f64,
    n_samples: usize,
) -> Result<GeodesicReport> {
    if !(tol > 0.0) || !(arc > 0.0) {
        return Err(Error::Parameter("geodesic needs tol > 0 and arc > 0".into()));
    }
    m.check_chart(&initial.x)?;
    let g0 = m.metric_at(&initial.x)?;
    let (n0, pb0) = conserved(&g0, &initial.v);
    let pb_scale = pb0.abs().max((n0.abs() * g0[(2, 2)]).sqrt()).max(f64::MIN_POSITIVE);
    let n_scale = if n0 == 0.0 { 1.0 } else { n0.abs() };
    let (r_lo, r_hi) = m.radial_range();
    let margin = 4.0 * CHRISTOFFEL_STEP * r_lo.abs().max(r_hi.abs()).max(1.0);

    let rhs = |_s: f64, y: &[f64; 8]| -> Result<[f64; 8]> {
        let x = [y[0], y[1], y[2], y[3]];
        let v = [y[4], y[5], y[6], y[7]];
        let gam = m.christoffel(&x)?;
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&v);
        for mu in 0..4 {
            let mut acc = 0.0;
            for nu in 0..4 {
                for rho in 0..4 {
                    acc += gam[mu][nu][rho] * v[nu] * v[rho];
                }
            }
            out[4 + mu] = -acc;
        }
        Ok(out)
    };
    let mut y0 = [0.0; 8];
    y0[..4].copy_from_slice(&initial.x);
    y0[4..].copy_from_slice(&initial.v);

    let mut n_drift: f64 = 0.0;
    let mut pb_drift: f64 = 0.0;
    let guard = |_s: f64, y: &[f64; 8]| {
        let x = [y[0], y[1], y[2], y[3]];
        if x[0] < r_lo + margin || x[0] > r_hi - margin {
            return Guard::Stop(format!("boundary exit: radial coordinate {} left [{r_lo}, {r_hi}]", x[0]));
        }
        if !(0.0..PI).contains(&x[1]) || x[1].sin() < DEFAULT_SIN_EXCLUSION {
            return Guard::Stop(format!("boundary exit: alpha = {} left the chart", x[1]));
        }
        match m.metric_at(&x) {
            Ok(g) => {
                let (n2, pb) = conserved(&g, &[y[4], y[5], y[6], y[7]]);
                n_drift = n_drift.max((n2 - n0).abs() / n_scale);
                pb_drift = pb_drift.max((pb - pb0).abs() / pb_scale);
                Guard::Continue
            }
            Err(e) => Guard::Stop(format!("boundary exit: {e}")),
        }
    };
    let run = integrate(rhs, 0.0, y0, arc, Tolerances::uniform(tol), guard)?;
    let exit = match &run.outcome {
        Outcome::Completed => None,
        Outcome::Stopped { reason, .. } => Some(reason.clone()),
    };
    let reached = run.t_last();
    let n = n_samples.max(2);
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let s = reached * k as f64 / (n - 1) as f64;
        let y = if run.steps.is_empty() {
            y0
        } else {
            run.eval(s).unwrap_or_else(|| run.y_last())
        };
        let x = [y[0], y[1], y[2], y[3]];
        let (n2, pb) = match m.metric_at(&x) {
            Ok(g) => conserved(&g, &[y[4], y[5], y[6], y[7]]),
            Err(_) => (f64::NAN, f64::NAN),
        };
        samples.push(GeodesicSample {
            s,
            x,
            norm2: n2,
            p_beta: pb,
        });
    }
    Ok(GeodesicReport {
        initial: GeodesicState {
            norm2: n0,
            p_beta: pb0,
            ..*initial
        },
        samples,
        norm2_drift: n_drift,
        p_beta_drift: pb_drift,
        arc: reached,
        exit,
        stats: run.stats,
    })
}

/// `s(t) = ∫ f₀ dt` from `t_a` to `t_b`: proper radial distance, the oracle for radial geodesics.
pub fn radial_distance<P: TriadProvider>(m: &AhMetric<P>, x_a: f64, x_b: f64, tol: f64) -> Result<f64> {
    let mut err = None;
    let v = adaptive_simpson(
        |x| match m.coefficients(x) {
            Ok(c) => c[0].sqrt(),
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        x_a,
        x_b,
        tol,
    );
    if let Some(e) = err {
        return Err(e);
    }
    v
}

/// CSV `s,t,alpha,beta,psi,norm2,p_beta`.
pub fn geodesic_csv(r: &GeodesicReport) -> String {
    let mut s = String::from("s,t,alpha,beta,psi,norm2,p_beta\n");
    for p in &r.samples {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            p.s, p.x[0], p.x[1], p.x[2], p.x[3], p.norm2, p.p_beta
        );
    }
    s
}

// ---------------------------------------------------------------------------
// line scattering

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringSetup {
    /// Lines run over τ ∈ [−L, L].
    pub half_length: f64,
    pub tol: f64,
    /// Minimum `Re μ · L` for the decay/growth splitting, μ the decay rate at the ends.
    pub min_suppression: f64,
}

impl Default for ScatteringSetup {
    fn default() -> Self {
        Self {
            half_length: 40.0,
            tol: 1e-10,
            min_suppression: 10.0,
        }
    }
}

/// Matching data on the line `x(τ) = (Re z, Im z, τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineData {
    pub z: C,
    /// `det[ŝ₋, ŝ₊⊥]`.
    pub a: C,
    /// `det[ŝ₋, ŝ₊]`; vanishes where the line meets the spectral data.
    pub b: C,
    /// Re μ·L at the ends.
    pub suppression: f64,
}

impl LineData {
    pub fn s(&self) -> C {
        self.a / self.b
    }
}

type Spinor = [C; 2];

/// `D s = (∂_τ − φ + i e A₃)s` in the fundamental, matrices `X^a σ^a/2`.
fn line_matrix(cfg: &MonopoleConfig, z: C, tau: f64) -> [[C; 2]; 2] {
    let f = hedgehog_fields(cfg, &[z.re, z.im, tau]);
    let i = C::new(0.0, 1.0);
    let x: [C; 3] = std::array::from_fn(|a| C::new(f.phi[a], 0.0) - i * cfg.e * f.a[2][a]);
    [
        [0.5 * x[2], 0.5 * (x[0] - i * x[1])],
        [0.5 * (x[0] + i * x[1]), -0.5 * x[2]],
    ]
}

/// Eigenvector of a traceless 2×2 matrix for the eigenvalue ±μ with Re(±μ) of the given sign;
/// phase fixed by a real positive second component.
fn end_vector(m: &[[C; 2]; 2], positive: bool) -> (Spinor, f64) {
    let mu = (m[0][0] * m[0][0] + m[0][1] * m[1][0]).sqrt();
    let lam = if (mu.re > 0.0) == positive { mu } else { -mu };
    let v1 = [m[0][1], lam - m[0][0]];
    let v2 = [lam - m[1][1], m[1][0]];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let mut v = if n1 >= n2 { v1 } else { v2 };
    let n = n1.max(n2).sqrt();
    if v[1].norm() > 0.0 {
        let ph = v[1] / v[1].norm();
        v = [v[0] / ph, v[1] / ph];
    }
    ([v[0] / n, v[1] / n], mu.re.abs())
}

fn transport(cfg: &MonopoleConfig, z: C, from: f64, s0: Spinor, tol: f64) -> Result<Spinor> {
    let y0 = [s0[0].re, s0[0].im, s0[1].re, s0[1].im];
    let run = integrate(
        |tau, y: &[f64; 4]| {
            let m = line_matrix(cfg, z, tau);
            let s = [C::new(y[0], y[1]), C::new(y[2], y[3])];
            let d = [m[0][0] * s[0] + m[0][1] * s[1], m[1][0] * s[0] + m[1][1] * s[1]];
            Ok([d[0].re, d[0].im, d[1].re, d[1].im])
        },
        from,
        y0,
        0.0,
        Tolerances::uniform(tol),
        |_, _| Guard::Continue,
    )?;
    if let Outcome::Stopped { reason, .. } = &run.outcome {
        return Err(Error::Conditioning(format!("line transport stopped: {reason}")));
    }
    let y = run.y_last();
    let s = [C::new(y[0], y[1]), C::new(y[2], y[3])];
    let n = (s[0].norm_sqr() + s[1].norm_sqr()).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Conditioning(format!("transported spinor norm {n:e}")));
    }
    Ok([s[0] / n, s[1] / n])
}

/// Decaying solutions from both ends matched at τ = 0.
pub fn line_scattering(cfg: &MonopoleConfig, z: C, setup: &ScatteringSetup) -> Result<LineData> {
    cfg.validate()?;
    let l = setup.half_length;
    if !(l > 0.0 && setup.tol > 0.0) {
        return Err(Error::Parameter("scattering needs positive half length and tolerance".into()));
    }
    let (plus, mu_p) = end_vector(&line_matrix(cfg, z, l), false);
    let (minus, mu_m) = end_vector(&line_matrix(cfg, z, -l), true);
    let suppression = mu_p.min(mu_m) * l;
    if suppression < setup.min_suppression {
        return Err(Error::Conditioning(format!(
            "decay/growth splitting lost rank: Re mu * L = {suppression:.3e} < {}",
            setup.min_suppression
        )));
    }
    let sp = transport(cfg, z, l, plus, setup.tol)?;
    let sm = transport(cfg, z, -l, minus, setup.tol)?;
    let perp = [-sp[1].conj(), sp[0].conj()];
    Ok(LineData {
        z,
        a: sm[0] * perp[1] - sm[1] * perp[0],
        b: sm[0] * sp[1] - sm[1] * sp[0],
        suppression,
    })
}

/// `S(z) ≈ α / (z − ζ)`, least squares over grid samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalFit {
    pub alpha: C,
    pub pole: C,
    /// `sqrt(Σ|α − S_j(z_j − ζ)|² / Σ|S_j z_j|²)`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringReport {
    /// Signed winding number of b around the grid boundary.
    pub winding: i64,
    /// Number of poles, `|winding|`.
    pub degree: i64,
    /// Zero of b refined from the grid minimum, when the degree is 1.
    pub pole: Option<C>,
    pub fit: Option<RationalFit>,
    pub rows: Vec<LineData>,
    /// `|b|` at the refined zero.
    pub b_at_pole: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringGrid {
    pub half_width: f64,
    pub n: usize,
    pub boundary_points: usize,
}

impl Default for ScatteringGrid {
    fn default() -> Self {
        Self {
            half_width: 1.5,
            n: 13,
            boundary_points: 96,
        }
    }
}

fn fit_pole(rows: &[LineData]) -> Option<RationalFit> {
    // α + S_j ζ = S_j z_j: normal equations for (α, ζ)
    let mut a = [[C::new(0.0, 0.0); 2]; 2];
    let mut r = [C::new(0.0, 0.0); 2];
    let mut scale = 0.0;
    let pts: Vec<(C, C)> = rows
        .iter()
        .filter(|d| d.b.norm() > 1e-8)
        .map(|d| (d.z, d.s()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    for (z, s) in &pts {
        let row = [C::new(1.0, 0.0), *s];
        let rhs = s * z;
        scale += rhs.norm_sqr();
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] += row[i].conj() * row[j];
            }
            r[i] += row[i].conj() * rhs;
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() == 0.0 {
        return None;
    }
    let alpha = (r[0] * a[1][1] - a[0][1] * r[1]) / det;
    let pole = (a[0][0] * r[1] - a[1][0] * r[0]) / det;
    let res: f64 = pts.iter().map(|(z, s)| (alpha - s * (z - pole)).norm_sqr()).sum();
    Some(RationalFit {
        alpha,
        pole,
        residual: (res / scale.max(f64::MIN_POSITIVE)).sqrt(),
    })
}

/// Locates the spectral point of a k ≤ 1 configuration from line scattering over a z-grid.
pub fn scattering_map(
    cfg: &MonopoleConfig,
    grid: &ScatteringGrid,
    setup: &ScatteringSetup,
) -> Result<ScatteringReport> {
    if grid.n < 3 || !(grid.half_width > 0.0) || grid.boundary_points < 8 {
        return Err(Error::Parameter("scattering grid too small".into()));
    }
    let w = grid.half_width;
    let coord = |k: usize| -w + 2.0 * w * k as f64 / (grid.n - 1) as f64;
    let mut rows = Vec::with_capacity(grid.n * grid.n);
    for i in 0..grid.n {
        for j in 0..grid.n {
            rows.push(line_scattering(cfg, C::new(coord(i), coord(j)), setup)?);
        }
    }
    // winding of b along the circle of radius w·1.2 around the grid centre
    let rad = 1.2 * w;
    let mut wind = 0.0;
    let mut prev: Option<C> = None;
    let mut first: Option<C> = None;
    for k in 0..grid.boundary_points {
        let th = 2.0 * PI * k as f64 / grid.boundary_points as f64;
        let b = line_scattering(cfg, C::from_polar(rad, th), setup)?.b;
        if let Some(p) = prev {
            wind += (b / p).arg();
        } else {
            first = Some(b);
        }
        prev = Some(b);
    }
    if let (Some(p), Some(f)) = (prev, first) {
        wind += (f / p).arg();
    }
    let winding = (wind / (2.0 * PI)).round() as i64;
    let degree = winding.abs();

    let mut pole = None;
    let mut b_at_pole = f64::NAN;
    if degree == 1 {
        let best = rows
            .iter()
            .min_by(|x, y| x.b.norm().total_cmp(&y.b.norm()))
            .map(|d| d.z)
            .unwrap_or_default();
        let mut zc = best;
        let mut rho = 2.0 * w / (grid.n - 1) as f64;
        for _ in 0..30 {
            let b = |dz: C| line_scattering(cfg, zc + dz, setup).map(|d| d.b);
            let c0 = b(C::new(0.0, 0.0))?;
            let bx = (b(C::new(rho, 0.0))? - b(C::new(-rho, 0.0))?) / (2.0 * rho);
            let by = (b(C::new(0.0, rho))? - b(C::new(0.0, -rho))?) / (2.0 * rho);
            // b ≈ c0 + bx δx + by δy, solved for real (δx, δy)
            let det = bx.re * by.im - bx.im * by.re;
            if det == 0.0 {
                break;
            }
            let dx = (-c0.re * by.im + c0.im * by.re) / det;
            let dy = (-bx.re * c0.im + bx.im * c0.re) / det;
            let step = C::new(dx, dy);
            zc += step;
            rho = (step.norm() * 2.0).clamp(1e-6, rho);
            if step.norm() < 1e-11 {
                break;
            }
        }
        b_at_pole = line_scattering(cfg, zc, setup)?.b.norm();
        pole = Some(zc);
    }
    let fit = if degree == 0 { None } else { fit_pole(&rows) };
    Ok(ScatteringReport {
        winding,
        degree,
        pole,
        fit,
        rows,
        b_at_pole,
    })
}

/// CSV `re_z,im_z,a_fit,b_fit,residual`: |a|, |b| on each line and the pointwise fit defect.
pub fn scattering_csv(r: &ScatteringReport) -> String {
    let mut s = String::from("re_z,im_z,a_fit,b_fit,residual\n");
    for d in &r.rows {
        let res = match &r.fit {
            Some(f) => (d.a * (d.z - f.pole) - f.alpha * d.b).norm(),
            None => d.a.norm(),
        };
        let _ = writeln!(s, "{:e},{:e},{:e},{:e},{:e}", d.z.re, d.z.im, d.a.norm(), d.b.norm(), res);
    }
    s
}

// ---------------------------------------------------------------------------
// radial Schrödinger problem

/// Coefficient maps `r ↦ (P(r), f(r))` of `−(1/(Pf)) d/dr((P/f) dΨ/dr) = λΨ`.
pub trait Coefficients: Send + Sync {
    fn eval(&self, r: f64) -> Result<(f64, f64)>;
    fn label(&self) -> String;
}

/// Constant `P`, `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub p: f64,
    pub f: f64,
}

impl Default for ConstantCoefficients {
    fn default() -> Self {
        Self { p: 1.0, f: 1.0 }
    }
}

impl Coefficients for ConstantCoefficients {
    fn eval(&self, _r: f64) -> Result<(f64, f64)> {
        Ok((self.p, self.f))
    }
    fn label(&self) -> String {
        format!("constant(P={}, f={})", self.p, self.f)
    }
}

/// `P = |Θ¹Θ²Θ³|(r)`, `f = |Θ²(r)|/r` from a triad provider evaluated at t = r.
#[derive(Debug, Clone)]
pub struct TriadCoefficients<T>(pub T);

impl<T: TriadProvider> Coefficients for TriadCoefficients<T> {
    fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("triad coefficients need r > 0, got {r}")));
        }
        let th = self.0.triad(r)?.theta;
        Ok(((th[0] * th[1] * th[2]).abs(), th[1].abs() / r))
    }
    fn label(&self) -> String {
        format!("triad({})", self.0.label())
    }
}

#[derive(Debug, Clone)]
pub struct SchrodingerProblem<K> {
    pub r0: f64,
    pub r1: f64,
    /// Interior grid points; Ψ vanishes at r0 and r1.
    pub n: usize,
    pub hbar: f64,
    pub coeffs: K,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Operator eigenvalues λ, ascending.
    pub lambda: Vec<f64>,
    /// `E = ħ² λ / π`.
    pub energies: Vec<f64>,
    /// Interior grid.
    pub grid: Vec<f64>,
    /// Discrete weights `w_i = P f` at the grid.
    pub weights: Vec<f64>,
    /// Ψ at the grid, normalised so that `Σ w Ψ² = 1`.
    pub vectors: Vec<Vec<f64>>,
}

/// Number of eigenvalues of the symmetric tridiagonal (d, e) below x.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T − σ) x = b` by Gaussian elimination with partial pivoting on the tridiagonal.
fn tridiagonal_solve(d: &[f64], e: &[f64], sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    // rows stored as (sub, diag, sup, sup2) after pivoting
    let mut diag: Vec<f64> = d.iter().map(|v| v - sigma).collect();
    let mut sup: Vec<f64> = (0..n).map(|i| if i + 1 < n { e[i] } else { 0.0 }).collect();
    let mut sup2 = vec![0.0; n];
    let mut sub: Vec<f64> = (0..n).map(|i| if i + 1 < n { e[i] } else { 0.0 }).collect();
    let mut rhs = b.to_vec();
    let tiny = f64::EPSILON * d.iter().map(|v| v.abs()).fold(1.0, f64::max);
    for i in 0..n.saturating_sub(1) {
        if sub[i].abs() > diag[i].abs() {
            // swap rows i and i + 1
            let (a0, a1, a2) = (diag[i], sup[i], sup2[i]);
            diag[i] = sub[i];
            sup[i] = diag[i + 1];
            sup2[i] = sup[i + 1];
            sub[i] = a0;
            diag[i + 1] = a1;
            sup[i + 1] = a2;
            rhs.swap(i, i + 1);
        }
        if diag[i].abs() < tiny {
            diag[i] = tiny;
        }
        let f = sub[i] / diag[i];
        diag[i + 1] -= f * sup[i];
        if i + 2 <= n - 1 {
            sup[i + 1] -= f * sup2[i];
        }
        rhs[i + 1] -= f * rhs[i];
    }
    if diag[n - 1].abs() < tiny {
        diag[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        if i + 1 < n {
            v -= sup[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= sup2[i] * x[i + 2];
        }
        x[i] = v / diag[i];
    }
    x
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Lowest k eigenpairs of the symmetric tridiagonal matrix with diagonal d and off-diagonal e.
pub fn tridiagonal_eigen(d: &[f64], e: &[f64], k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = d.len();
    if k > n || e.len() + 1 != n {
        return Err(Error::Parameter(format!("requested {k} eigenpairs of an {n}×{n} matrix")));
    }
    let radius = |i: usize| {
        (if i > 0 { e[i - 1].abs() } else { 0.0 }) + (if i + 1 < n { e[i].abs() } else { 0.0 })
    };
    let lo0 = (0..n).map(|i| d[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let hi0 = (0..n).map(|i| d[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    let norm = lo0.abs().max(hi0.abs()).max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(k);
    for j in 0..k {
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sturm_count(d, e, mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * (lo.abs().max(hi.abs())).max(norm * 1e-3) {
                break;
            }
        }
        values.push(0.5 * (lo + hi));
    }
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &lam) in values.iter().enumerate() {
        let shift = lam + 16.0 * f64::EPSILON * norm;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919 + j * 104729) % 97) as f64 / 97.0).collect();
        normalize(&mut x);
        let mut ok = false;
        for _ in 0..8 {
            let mut y = tridiagonal_solve(d, e, shift, &x);
            for prev in &vectors {
                let c: f64 = prev.iter().zip(&y).map(|(p, q)| p * q).sum();
                y.iter_mut().zip(prev).for_each(|(q, p)| *q -= c * p);
            }
            if normalize(&mut y) == 0.0 {
                break;
            }
            x = y;
            // ‖T x − λ x‖
            let mut r2 = 0.0;
            for i in 0..n {
                let mut v = (d[i] - lam) * x[i];
                if i > 0 {
                    v += e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += e[i] * x[i + 1];
                }
                r2 += v * v;
            }
            if r2.sqrt() <= 1e-10 * norm {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::Numerical(format!("inverse iteration did not converge for eigenvalue {j}")));
        }
        // sign convention: positive first nonzero-weight component
        if x.iter().find(|v| v.abs() > 1e-12).is_some_and(|v| *v < 0.0) {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        vectors.push(x);
    }
    Ok((values, vectors))
}

/// Lowest `n_eigs` eigenpairs of the second-order finite-difference discretisation.
pub fn solve_radial_schrodinger<K: Coefficients>(
    prob: &SchrodingerProblem<K>,
    n_eigs: usize,
) -> Result<Spectrum> {
    let (r0, r1, n) = (prob.r0, prob.r1, prob.n);
    if !(r0 >= 0.0 && r1 > r0 && r1.is_finite()) {
        return Err(Error::Parameter(format!("radial interval [{r0}, {r1}] invalid")));
    }
    if n < 2 || n_eigs == 0 || n_eigs >= n {
        return Err(Error::Parameter(format!("need 0 < n_eigs < n, got n_eigs = {n_eigs}, n = {n}")));
    }
    if !(prob.hbar > 0.0) {
        return Err(Error::Parameter(format!("hbar = {} must be positive", prob.hbar)));
    }
    let h = (r1 - r0) / (n + 1) as f64;
    let grid: Vec<f64> = (1..=n).map(|i| r0 + i as f64 * h).collect();
    let positive = |r: f64| -> Result<(f64, f64)> {
        let (p, f) = prob.coeffs.eval(r)?;
        if !(p > 0.0 && f > 0.0 && p.is_finite() && f.is_finite()) {
            return Err(Error::Domain(format!("coefficients P = {p}, f = {f} not positive at r = {r}")));
        }
        Ok((p, f))
    };
    let mut w = Vec::with_capacity(n);
    for &r in &grid {
        let (p, f) = positive(r)?;
        w.push(p * f);
    }
    // p at half points r0 + (i + ½)h, i = 0..=n
    let mut ph = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (p, f) = positive(r0 + (i as f64 + 0.5) * h)?;
        ph.push(p / f);
    }
    let h2 = h * h;
    let d: Vec<f64> = (0..n).map(|i| (ph[i] + ph[i + 1]) / (h2 * w[i])).collect();
    let e: Vec<f64> = (0..n - 1)
        .map(|i| -ph[i + 1] / (h2 * (w[i] * w[i + 1]).sqrt()))
        .collect();
    let (lambda, phis) = tridiagonal_eigen(&d, &e, n_eigs)?;
    for k in 1..lambda.len() {
        if !(lambda[k] > lambda[k - 1]) {
            return Err(Error::Numerical(format!("eigenvalues {} and {} not strictly ordered", k - 1, k)));
        }
    }
    let vectors = phis
        .into_iter()
        .map(|v| v.iter().zip(&w).map(|(x, wi)| x / wi.sqrt()).collect())
        .collect();
    let energies = lambda.iter().map(|l| prob.hbar * prob.hbar * l / PI).collect();
    Ok(Spectrum {
        lambda,
        energies,
        grid,
        weights: w,
        vectors,
    })
}

/// Weighted inner product `Σ w Ψ_a Ψ_b`.
pub fn weighted_inner(s: &Spectrum, a: usize, b: usize) -> f64 {
    s.weights
        .iter()
        .zip(&s.vectors[a])
        .zip(&s.vectors[b])
        .map(|((w, x), y)| w * x * y)
        .sum()
}

/// Interior sign changes of eigenvector `k`.
pub fn node_count(s: &Spectrum, k: usize) -> usize {
    let v = &s.vectors[k];
    let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut last = 0.0;
    let mut nodes = 0;
    for &x in v {
        if x.abs() <= 1e-12 * scale {
            continue;
        }
        if last != 0.0 && x.signum() != last {
            nodes += 1;
        }
        last = x.signum();
    }
    nodes
}

/// Exact `E_n = ħ² n² π / L²` of the constant-coefficient problem with `P = f = 1`.
pub fn constant_energy(n: usize, length: f64, hbar: f64) -> f64 {
    let n = n as f64;
    hbar * hbar * n * n * PI / (length * length)
}

/// CSV `n,E_n` with n counted from 1.
pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("n,E_n\n");
    for (k, e) in s.energies.iter().enumerate() {
        let _ = writeln!(out, "{},{:e}", k + 1, e);
    }
    out
}
