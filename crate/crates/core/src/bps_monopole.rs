//! SU(2) Yang-Mills-Higgs monopoles in the hedgehog ansatz.
//!
//! Fields are real su(2) triplets: `φ^a`, `A_i^a` with spatial index i and
//! algebra index a. Couplings use the bracket `[X, Y]^a = −ε_abc X^b Y^c`:
//! `D_iφ = ∂_iφ + e[A_i, φ]` and `F_ij = ∂_iA_j − ∂_jA_i + e[A_i, A_j]`.
//! With the ansatz `φ^a = x^a H(ξ)/(e r²)`, `A_n^a = ε_amn x^m (1 − K(ξ))/(e r²)`
//! and `ξ = v e r`, the BPS profiles solve `½ ε_ijk F_jk = D_iφ`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, gauss_legendre_on, pairwise_sum};

pub type V3 = [f64; 3];
/// `m[i][a]`: spatial index i, algebra index a.
pub type M3 = [[f64; 3]; 3];
/// `t[i][j][a]`.
pub type T3 = [[[f64; 3]; 3]; 3];

/// Sign in `[X, Y]^a = BRACKET_SIGN · ε_abc X^b Y^c`.
pub const BRACKET_SIGN: f64 = -1.0;

/// Below this |φ| the abelian direction φ̂ is undefined.
pub const PROJECTION_THRESHOLD: f64 = 1e-8;

pub fn cross(x: &V3, y: &V3) -> V3 {
    [
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ]
}

pub fn dot(x: &V3, y: &V3) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

pub fn norm(x: &V3) -> f64 {
    dot(x, x).sqrt()
}

pub fn bracket(x: &V3, y: &V3) -> V3 {
    cross(x, y).map(|c| BRACKET_SIGN * c)
}

fn eps(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn sub(x: &V3, y: &V3) -> V3 {
    [x[0] - y[0], x[1] - y[1], x[2] - y[2]]
}

fn add(x: &V3, y: &V3) -> V3 {
    [x[0] + y[0], x[1] + y[1], x[2] + y[2]]
}

fn scale(x: &V3, s: f64) -> V3 {
    x.map(|v| v * s)
}

// ---------------------------------------------------------------------------
// profiles

/// `(H, K)` and their derivatives at ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValues {
    pub h: f64,
    pub dh: f64,
    pub k: f64,
    pub dk: f64,
}

/// `p = H/ξ²`, `q = (1 − K)/ξ²` and `p′/ξ`, `q′/ξ`; regular at ξ = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced {
    pub p: f64,
    pub dp_over_xi: f64,
    pub q: f64,
    pub dq_over_xi: f64,
}

/// `H(ξ) = ξ coth ξ − 1`, `K(ξ) = ξ / sinh ξ`.
pub fn bps_profiles(xi: f64) -> (f64, f64) {
    let v = bps_values(xi);
    (v.h, v.k)
}

fn coth_csch(xi: f64) -> (f64, f64) {
    // stable for large ξ
    let e2 = (-2.0 * xi).exp();
    let den = -(-2.0 * xi).exp_m1();
    ((1.0 + e2) / den, 2.0 * (-xi).exp() / den)
}

pub fn bps_values(xi: f64) -> ProfileValues {
    let xi = xi.abs();
    if xi < 1e-4 {
        let x2 = xi * xi;
        return ProfileValues {
            h: x2 / 3.0 - x2 * x2 / 45.0,
            dh: 2.0 * xi / 3.0 - 4.0 * xi * x2 / 45.0,
            k: 1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0,
            dk: -xi / 3.0 + 7.0 * xi * x2 / 90.0,
        };
    }
    let (coth, csch) = coth_csch(xi);
    ProfileValues {
        h: xi * coth - 1.0,
        dh: coth - xi * csch * csch,
        k: xi * csch,
        dk: csch * (1.0 - xi * coth),
    }
}

fn bps_reduced(xi: f64) -> Reduced {
    let xi = xi.abs();
    if xi < 0.1 {
        let x2 = xi * xi;
        let p = [1.0 / 3.0, -1.0 / 45.0, 2.0 / 945.0, -1.0 / 4725.0, 2.0 / 93555.0];
        let q = [
            1.0 / 6.0,
            -7.0 / 360.0,
            31.0 / 15120.0,
            -127.0 / 604800.0,
            73.0 / 3421440.0,
        ];
        // (d/dξ Σ c_n ξ^{2n}) / ξ = Σ 2n c_n ξ^{2n−2}
        let dser = |c: &[f64; 5]| {
            let mut d = 0.0;
            let mut pw = 1.0;
            for (n, cn) in c.iter().enumerate().skip(1) {
                d += cn * 2.0 * n as f64 * pw;
                pw *= x2;
            }
            d
        };
        let val = |c: &[f64; 5]| c.iter().rev().fold(0.0, |acc, cn| acc * x2 + cn);
        return Reduced {
            p: val(&p),
            dp_over_xi: dser(&p),
            q: val(&q),
            dq_over_xi: dser(&q),
        };
    }
    reduced_from_values(xi, &bps_values(xi))
}

fn reduced_from_values(xi: f64, v: &ProfileValues) -> Reduced {
    let x2 = xi * xi;
    Reduced {
        p: v.h / x2,
        dp_over_xi: (v.dh * xi - 2.0 * v.h) / (x2 * x2),
        q: (1.0 - v.k) / x2,
        dq_over_xi: (-v.dk * xi - 2.0 * (1.0 - v.k)) / (x2 * x2),
    }
}

/// Radial profile family entering the hedgehog ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Closed-form BPS profiles.
    Bps,
    /// `(H, K²)`: regular, but not a Bogomolny solution.
    KSquared,
    /// Constant Higgs field `v ẑ` and vanishing gauge field.
    Vacuum,
}

impl Profile {
    pub fn values(self, xi: f64) -> ProfileValues {
        let b = bps_values(xi);
        match self {
            Profile::Bps => b,
            Profile::KSquared => ProfileValues {
                h: b.h,
                dh: b.dh,
                k: b.k * b.k,
                dk: 2.0 * b.k * b.dk,
            },
            Profile::Vacuum => ProfileValues {
                h: 0.0,
                dh: 0.0,
                k: 1.0,
                dk: 0.0,
            },
        }
    }

    pub fn reduced(self, xi: f64) -> Reduced {
        match self {
            Profile::Bps => bps_reduced(xi),
            Profile::KSquared => {
                // 1 − K² = (1 − K)(1 + K) and K = 1 − ξ²q, so K′/ξ = −ξ²(q′/ξ) − 2q
                let r = bps_reduced(xi);
                let b = bps_values(xi);
                let dk_over_xi = -(xi * xi) * r.dq_over_xi - 2.0 * r.q;
                Reduced {
                    p: r.p,
                    dp_over_xi: r.dp_over_xi,
                    q: r.q * (1.0 + b.k),
                    dq_over_xi: r.dq_over_xi * (1.0 + b.k) + r.q * dk_over_xi,
                }
            }
            Profile::Vacuum => Reduced {
                p: 0.0,
                dp_over_xi: 0.0,
                q: 0.0,
                dq_over_xi: 0.0,
            },
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Profile::Bps => "bps",
            Profile::KSquared => "k-squared",
            Profile::Vacuum => "vacuum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonopoleConfig {
    pub e: f64,
    pub v: f64,
    pub lambda_h: f64,
    pub profile: Profile,
    pub center: V3,
}

impl Default for MonopoleConfig {
    fn default() -> Self {
        Self {
            e: 1.0,
            v: 1.0,
            lambda_h: 0.0,
            profile: Profile::Bps,
            center: [0.0; 3],
        }
    }
}

impl MonopoleConfig {
    pub fn bps(e: f64, v: f64) -> Result<Self> {
        let c = Self {
            e,
            v,
            ..Self::default()
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_center(mut self, c: V3) -> Self {
        self.center = c;
        self
    }

    pub fn with_profile(mut self, p: Profile) -> Self {
        self.profile = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e > 0.0 && self.e.is_finite()) {
            return Err(Error::Parameter(format!("gauge coupling e = {} must be positive", self.e)));
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(Error::Parameter(format!("vev v = {} must be non-negative", self.v)));
        }
        if !(self.lambda_h >= 0.0 && self.lambda_h.is_finite()) {
            return Err(Error::Parameter(format!(
                "quartic coupling {} must be non-negative",
                self.lambda_h
            )));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("non-finite monopole center".into()));
        }
        Ok(())
    }

    pub fn is_bps_limit(&self) -> bool {
        self.lambda_h == 0.0
    }

    /// Radius below which grid quadratures exclude a ball around the center.
    pub fn exclusion_radius(&self) -> f64 {
        0.1 / (self.v * self.e)
    }
}

// ---------------------------------------------------------------------------
// fields

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: V3,
    /// `a[i][a] = A_i^a`.
    pub a: M3,
    pub phi: V3,
    /// `f[i][j][a] = F_ij^a`.
    pub f: Option<T3>,
    /// `dphi[i][a] = D_iφ^a`.
    pub dphi: Option<M3>,
}

impl FieldSample {
    /// `B_i^a = ½ ε_ijk F_jk^a`.
    pub fn magnetic(&self) -> Option<M3> {
        self.f.map(|f| magnetic_from(&f))
    }

    pub fn energy_density(&self, cfg: &MonopoleConfig) -> Option<f64> {
        let b = self.magnetic()?;
        let d = self.dphi?;
        let mut s = 0.0;
        for i in 0..3 {
            s += dot(&b[i], &b[i]) + dot(&d[i], &d[i]);
        }
        let p2 = dot(&self.phi, &self.phi) - cfg.v * cfg.v;
        Some(0.5 * s + 0.25 * cfg.lambda_h * p2 * p2)
    }

    /// `½ Σ F_ij^a F_ij^a`, twice the trace in the σ/2 normalisation.
    pub fn f_squared(&self) -> Option<f64> {
        let f = self.f?;
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += dot(&f[i][j], &f[i][j]);
            }
        }
        Some(0.5 * s)
    }
}

pub fn magnetic_from(f: &T3) -> M3 {
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let e = eps(i, j, k);
                if e != 0.0 {
                    for a in 0..3 {
                        b[i][a] += 0.5 * e * f[j][k][a];
                    }
                }
            }
        }
    }
    b
}

struct Radial {
    y: V3,
    u: f64,
    w: f64,
    du_over_r: f64,
    dw_over_r: f64,
}

fn radial(cfg: &MonopoleConfig, x: &V3) -> Radial {
    let y = sub(x, &cfg.center);
    let r = norm(&y);
    let (v, e) = (cfg.v, cfg.e);
    let red = cfg.profile.reduced(v * e * r);
    let c = v * v * e;
    let c4 = v.powi(4) * e.powi(3);
    Radial {
        y,
        u: c * red.p,
        w: c * red.q,
        du_over_r: c4 * red.dp_over_xi,
        dw_over_r: c4 * red.dq_over_xi,
    }
}

/// Gauge and Higgs fields at x; regular at the center.
pub fn hedgehog_fields(cfg: &MonopoleConfig, x: &V3) -> FieldSample {
    if cfg.profile == Profile::Vacuum {
        return FieldSample {
            x: *x,
            a: [[0.0; 3]; 3],
            phi: [0.0, 0.0, cfg.v],
            f: None,
            dphi: None,
        };
    }
    let rd = radial(cfg, x);
    let mut a = [[0.0; 3]; 3];
    for (i, ai) in a.iter_mut().enumerate() {
        for (al, slot) in ai.iter_mut().enumerate() {
            *slot = (0..3).map(|m| eps(al, m, i) * rd.y[m]).sum::<f64>() * rd.w;
        }
    }
    FieldSample {
        x: *x,
        a,
        phi: scale(&rd.y, rd.u),
        f: None,
        dphi: None,
    }
}

/// `∂_jA_i^a` as `da[j][i][a]` and `∂_jφ^a` as `dp[j][a]`, analytic.
fn hedgehog_derivatives(cfg: &MonopoleConfig, x: &V3) -> (T3, M3) {
    if cfg.profile == Profile::Vacuum {
        return ([[[0.0; 3]; 3]; 3], [[0.0; 3]; 3]);
    }
    let rd = radial(cfg, x);
    let y = rd.y;
    let mut dp = [[0.0; 3]; 3];
    let mut da = [[[0.0; 3]; 3]; 3];
    for j in 0..3 {
        for al in 0..3 {
            dp[j][al] = if al == j { rd.u } else { 0.0 } + y[al] * y[j] * rd.du_over_r;
            for i in 0..3 {
                let lin = eps(al, j, i) * rd.w;
                let rad: f64 = (0..3).map(|m| eps(al, m, i) * y[m]).sum::<f64>() * y[j] * rd.dw_over_r;
                da[j][i][al] = lin + rad;
            }
        }
    }
    (da, dp)
}

/// Field strength and covariant derivative from fields and their first derivatives.
pub fn strengths_from(e: f64, a: &M3, phi: &V3, da: &T3, dphi: &M3) -> (T3, M3) {
    let mut f = [[[0.0; 3]; 3]; 3];
    let mut d = [[0.0; 3]; 3];
    for i in 0..3 {
        d[i] = add(&dphi[i], &scale(&bracket(&a[i], phi), e));
        for j in 0..3 {
            if i == j {
                continue;
            }
            let br = bracket(&a[i], &a[j]);
            for al in 0..3 {
                f[i][j][al] = da[i][j][al] - da[j][i][al] + e * br[al];
            }
        }
    }
    (f, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { h: f64 },
}

fn fd_derivatives(
    fields: impl Fn(&V3) -> (M3, V3),
    x: &V3,
    h: f64,
) -> (T3, M3) {
    let mut da = [[[0.0; 3]; 3]; 3];
    let mut dp = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let (ap, pp) = fields(&xp);
        let (am, pm) = fields(&xm);
        for al in 0..3 {
            dp[j][al] = (pp[al] - pm[al]) / (2.0 * h);
            for i in 0..3 {
                da[j][i][al] = (ap[i][al] - am[i][al]) / (2.0 * h);
            }
        }
    }
    (da, dp)
}

/// Fields with `F` and `Dφ` filled in.
pub fn strengths(cfg: &MonopoleConfig, x: &V3, mode: DerivativeMode) -> Result<FieldSample> {
    let mut s = hedgehog_fields(cfg, x);
    let (da, dp) = match mode {
        DerivativeMode::Analytic => hedgehog_derivatives(cfg, x),
        DerivativeMode::FiniteDifference { h } => {
            if !(h >= 1e-12) {
                return Err(Error::Parameter(format!("finite-difference step {h:e} below 1e-12")));
            }
            fd_derivatives(
                |p| {
                    let f = hedgehog_fields(cfg, p);
                    (f.a, f.phi)
                },
                x,
                h,
            )
        }
    };
    let (f, d) = strengths_from(cfg.e, &s.a, &s.phi, &da, &dp);
    s.f = Some(f);
    s.dphi = Some(d);
    Ok(s)
}

// ---------------------------------------------------------------------------
// Bogomolny equation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `½ ε_ijk F_jk = +D_iφ`
    Plus,
    /// `½ ε_ijk F_jk = −D_iφ`
    Minus,
}

/// Pointwise `max_{i,a} |B_i^a ∓ D_iφ^a|` for both branches.
pub fn pointwise_bogomolny(s: &FieldSample) -> Option<(f64, f64)> {
    let b = s.magnetic()?;
    let d = s.dphi?;
    let mut plus: f64 = 0.0;
    let mut minus: f64 = 0.0;
    for i in 0..3 {
        for a in 0..3 {
            plus = plus.max((b[i][a] - d[i][a]).abs());
            minus = minus.max((b[i][a] + d[i][a]).abs());
        }
    }
    Some((plus, minus))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 20,
            half_width: 5.0,
        }
    }
}

impl GridSpec {
    /// `n³` points of `[−L, L]³` including the faces.
    pub fn points(&self) -> Vec<V3> {
        let n = self.n;
        let c = |k: usize| -self.half_width + 2.0 * self.half_width * k as f64 / (n - 1) as f64;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push([c(i), c(j), c(k)]);
                }
            }
        }
        out
    }

    pub fn cell_volume(&self) -> f64 {
        (2.0 * self.half_width / (self.n - 1) as f64).powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogomolnyReport {
    /// Branch with the smaller maximum residual.
    pub branch: Branch,
    pub max: f64,
    pub l2: f64,
    /// Maximum residual of the other branch.
    pub other_branch_max: f64,
    pub points: usize,
}

/// Bogomolny residual over a Cartesian grid excluding the central ball.
pub fn bogomolny_residual(
    cfg: &MonopoleConfig,
    grid: &GridSpec,
    mode: DerivativeMode,
) -> Result<BogomolnyReport> {
    cfg.validate()?;
    if !cfg.is_bps_limit() {
        return Err(Error::Mode(format!(
            "Bogomolny equation requires lambda_h = 0, got {}",
            cfg.lambda_h
        )));
    }
    if grid.n < 2 || !(grid.half_width > 0.0) {
        return Err(Error::Parameter("grid needs n ≥ 2 and positive width".into()));
    }
    let r_ex = cfg.exclusion_radius();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for x in grid.points() {
        if norm(&sub(&x, &cfg.center)) < r_ex {
            continue;
        }
        let s = strengths(cfg, &x, mode)?;
        let b = s.magnetic().unwrap_or([[0.0; 3]; 3]);
        let d = s.dphi.unwrap_or([[0.0; 3]; 3]);
        let mut p2 = 0.0;
        let mut m2 = 0.0;
        for i in 0..3 {
            for a in 0..3 {
                p2 += (b[i][a] - d[i][a]).powi(2);
                m2 += (b[i][a] + d[i][a]).powi(2);
            }
        }
        plus.push(p2);
        minus.push(m2);
    }
    let dv = grid.cell_volume();
    let stats = |v: &[f64]| {
        (
            v.iter().cloned().fold(0.0, f64::max).sqrt(),
            (pairwise_sum(v) * dv).sqrt(),
        )
    };
    let (pm, pl) = stats(&plus);
    let (mm, ml) = stats(&minus);
    let (branch, max, l2, other) = if pm <= mm {
        (Branch::Plus, pm, pl, mm)
    } else {
        (Branch::Minus, mm, ml, pm)
    };
    Ok(BogomolnyReport {
        branch,
        max,
        l2,
        other_branch_max: other,
        points: plus.len(),
    })
}

/// Pointwise residual of the + branch along a ray, `max_{i,a} |B − Dφ|`.
pub fn radial_bogomolny(cfg: &MonopoleConfig, xi: f64, direction: &V3) -> Result<f64> {
    let n = norm(direction);
    let r = xi / (cfg.v * cfg.e);
    let x = add(&cfg.center, &scale(direction, r / n));
    let s = strengths(cfg, &x, DerivativeMode::Analytic)?;
    Ok(pointwise_bogomolny(&s).map(|(p, _)| p).unwrap_or(0.0))
}

// ---------------------------------------------------------------------------
// energy and charge

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute tolerance of the radial quadrature.
    pub tol: f64,
    /// Add `4π R³ ρ(R)`, the exterior energy of an `r⁻⁴` Coulomb tail.
    pub far_field_tail: bool,
    /// Gauss-Legendre nodes in cos θ for surface integrals (2n in azimuth).
    pub surface_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            far_field_tail: true,
            surface_nodes: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeReport {
    /// Magnetic flux `∮ φ̂·B dS` through the sphere of radius r_max.
    pub g: f64,
    pub q: f64,
    /// Static energy including any tail correction.
    pub m: f64,
    pub k: i64,
    /// `|g e/(4π) − k|`.
    pub k_distance: f64,
    pub energy_bulk: f64,
    pub energy_core: f64,
    pub energy_tail: f64,
}

const PROBE: V3 = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];

/// Energy density at distance r from the center along a fixed generic direction.
pub fn radial_energy_density(cfg: &MonopoleConfig, r: f64) -> Result<f64> {
    let x = add(&cfg.center, &scale(&PROBE, r));
    let s = strengths(cfg, &x, DerivativeMode::Analytic)?;
    Ok(s.energy_density(cfg).unwrap_or_else(|| {
        let p2 = dot(&s.phi, &s.phi) - cfg.v * cfg.v;
        0.25 * cfg.lambda_h * p2 * p2
    }))
}

/// `∮ φ̂·B·n dS` over the sphere of radius r around the center.
pub fn surface_flux(cfg: &MonopoleConfig, r: f64, nodes: usize) -> Result<f64> {
    let (ct, wt) = gauss_legendre_on(nodes, -1.0, 1.0);
    let nphi = 2 * nodes;
    let mut terms = Vec::with_capacity(nodes * nphi);
    for (c, w) in ct.iter().zip(&wt) {
        let s = (1.0 - c * c).sqrt();
        for m in 0..nphi {
            let ph = 2.0 * PI * (m as f64 + 0.5) / nphi as f64;
            let n = [s * ph.cos(), s * ph.sin(), *c];
            let x = add(&cfg.center, &scale(&n, r));
            let smp = strengths(cfg, &x, DerivativeMode::Analytic)?;
            let a = norm(&smp.phi);
            if a < PROJECTION_THRESHOLD {
                return Err(Error::ProjectionSingular { norm: a });
            }
            let b = smp.magnetic().unwrap_or([[0.0; 3]; 3]);
            let flux: f64 = (0..3).map(|i| n[i] * dot(&smp.phi, &b[i]) / a).sum();
            terms.push(w * flux * r * r * 2.0 * PI / nphi as f64);
        }
    }
    Ok(pairwise_sum(&terms))
}

pub fn energy_and_charge(
    cfg: &MonopoleConfig,
    r_max: f64,
    spec: &QuadratureSpec,
) -> Result<ChargeReport> {
    cfg.validate()?;
    if cfg.profile == Profile::Vacuum {
        return Ok(ChargeReport {
            g: 0.0,
            q: 0.0,
            m: 0.0,
            k: 0,
            k_distance: 0.0,
            energy_bulk: 0.0,
            energy_core: 0.0,
            energy_tail: 0.0,
        });
    }
    if !(r_max > 0.0) {
        return Err(Error::Parameter(format!("r_max = {r_max} must be positive")));
    }
    let r_ex = cfg.exclusion_radius().min(0.5 * r_max);
    let mut err = None;
    let mut density = |r: f64| match radial_energy_density(cfg, r) {
        Ok(v) => 4.0 * PI * r * r * v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let bulk = adaptive_simpson(&mut density, r_ex, r_max, spec.tol)?;
    let (xs, ws) = gauss_legendre_on(8, 0.0, r_ex);
    let core: f64 = xs.iter().zip(&ws).map(|(x, w)| w * density(*x)).sum();
    if let Some(e) = err {
        return Err(e);
    }
    let tail = if spec.far_field_tail {
        4.0 * PI * r_max.powi(3) * radial_energy_density(cfg, r_max)?
    } else {
        0.0
    };
    let g = surface_flux(cfg, r_max, spec.surface_nodes)?;
    let units = g * cfg.e / (4.0 * PI);
    let k = units.round() as i64;
    Ok(ChargeReport {
        g,
        q: 0.0,
        m: bulk + core + tail,
        k,
        k_distance: (units - k as f64).abs(),
        energy_bulk: bulk,
        energy_core: core,
        energy_tail: tail,
    })
}

/// `M = v √(g² + q²)`.
pub fn bogomolny_bound(v: f64, g: f64, q: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::Parameter(format!("v = {v} must be non-negative")));
    }
    Ok(v * g.hypot(q))
}

// ---------------------------------------------------------------------------
// abelian projection

/// Normalisation of the magnitude `a` in the magnetic current density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurrentNormalization {
    /// `a = |φ(x)|` at the sample point.
    Pointwise,
    /// `a` fixed to the given value, e.g. `|φ|` on the bounding sphere.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Abelian field strength `F_ij`.
    pub f: [[f64; 3]; 3],
    /// `B_i = ½ ε_ijk F_jk`.
    pub b: V3,
    /// `det ∂_iφ^a`.
    pub jacobian: f64,
    /// `|φ|` at the sample.
    pub a: f64,
}

impl Projection {
    /// Static magnetic charge density `3 det(∂φ)/(a³ e)`.
    pub fn charge_density(&self, e: f64, norm_mode: CurrentNormalization) -> f64 {
        let a = match norm_mode {
            CurrentNormalization::Pointwise => self.a,
            CurrentNormalization::Fixed(a) => a,
        };
        3.0 * self.jacobian / (a.powi(3) * e)
    }
}

fn det3(m: &M3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `F_ij = ∂_i(φ̂·A_j) − ∂_j(φ̂·A_i) + (1/(a³e)) ε_abc φ^a ∂_iφ^b ∂_jφ^c`, derivatives by central differences.
pub fn abelian_projection(cfg: &MonopoleConfig, x: &V3, h: f64) -> Result<Projection> {
    if !(h >= 1e-12) {
        return Err(Error::Parameter(format!("finite-difference step {h:e} below 1e-12")));
    }
    let s = hedgehog_fields(cfg, x);
    let a = norm(&s.phi);
    if a < PROJECTION_THRESHOLD {
        return Err(Error::ProjectionSingular { norm: a });
    }
    let proj = |p: &V3| -> Result<(V3, V3)> {
        let f = hedgehog_fields(cfg, p);
        let n = norm(&f.phi);
        if n < PROJECTION_THRESHOLD {
            return Err(Error::ProjectionSingular { norm: n });
        }
        let ae: V3 = std::array::from_fn(|j| dot(&f.phi, &f.a[j]) / n);
        Ok((ae, f.phi))
    };
    let mut dae = [[0.0; 3]; 3]; // dae[i][j] = ∂_i (φ̂·A_j)
    let mut dphi = [[0.0; 3]; 3]; // dphi[i][a] = ∂_i φ^a
    for i in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        let (ap, pp) = proj(&xp)?;
        let (am, pm) = proj(&xm)?;
        for j in 0..3 {
            dae[i][j] = (ap[j] - am[j]) / (2.0 * h);
            dphi[i][j] = (pp[j] - pm[j]) / (2.0 * h);
        }
    }
    let mut f = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let triple = dot(&s.phi, &cross(&dphi[i], &dphi[j]));
            f[i][j] = dae[i][j] - dae[j][i] + triple / (a.powi(3) * cfg.e);
        }
    }
    let b = [f[1][2], f[2][0], f[0][1]];
    Ok(Projection {
        f,
        b,
        jacobian: det3(&dphi),
        a,
    })
}

/// Volume integral of the magnetic charge density over the ball of radius r_max.
pub fn magnetic_charge_volume(
    cfg: &MonopoleConfig,
    r_max: f64,
    norm_mode: CurrentNormalization,
    tol: f64,
) -> Result<f64> {
    let h = 1e-4 / (cfg.v * cfg.e).max(1e-300);
    let r_ex = cfg.exclusion_radius();
    let mut err = None;
    let f = |r: f64| match abelian_projection(cfg, &add(&cfg.center, &scale(&PROBE, r)), h) {
        Ok(p) => 4.0 * PI * r * r * p.charge_density(cfg.e, norm_mode),
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let mut f = f;
    let bulk = adaptive_simpson(&mut f, r_ex, r_max, tol);
    let (xs, ws) = gauss_legendre_on(8, 0.0, r_ex);
    let core: f64 = xs.iter().zip(&ws).map(|(x, w)| w * f(*x)).sum();
    if let Some(e) = err {
        return Err(e);
    }
    Ok(bulk? + core)
}

/// `|φ|` at distance r from the center.
pub fn higgs_magnitude(cfg: &MonopoleConfig, r: f64) -> f64 {
    norm(&hedgehog_fields(cfg, &add(&cfg.center, &scale(&PROBE, r))).phi)
}

// ---------------------------------------------------------------------------
// Dirac monopole

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracField {
    pub phi: f64,
    pub b: V3,
}

/// `φ = k/(2r)`, `B = grad φ = −(k/2r²) r̂`.
pub fn dirac_field(k: i64, x: &V3) -> Result<DiracField> {
    let r = norm(x);
    if !(r > 0.0) {
        return Err(Error::Domain("Dirac field is singular at r = 0".into()));
    }
    let kf = k as f64;
    Ok(DiracField {
        phi: kf / (2.0 * r),
        b: scale(x, -kf / (2.0 * r * r * r)),
    })
}

/// Flux of the Dirac field through the sphere of radius r by quadrature.
pub fn dirac_flux(k: i64, r: f64, nodes: usize) -> Result<f64> {
    let (ct, wt) = gauss_legendre_on(nodes, -1.0, 1.0);
    let nphi = 2 * nodes;
    let mut terms = Vec::new();
    for (c, w) in ct.iter().zip(&wt) {
        let s = (1.0 - c * c).sqrt();
        for m in 0..nphi {
            let ph = 2.0 * PI * (m as f64 + 0.5) / nphi as f64;
            let n = [s * ph.cos(), s * ph.sin(), *c];
            let d = dirac_field(k, &scale(&n, r))?;
            terms.push(w * dot(&d.b, &n) * r * r * 2.0 * PI / nphi as f64);
        }
    }
    Ok(pairwise_sum(&terms))
}

// ---------------------------------------------------------------------------
// linearized system

/// Compactly supported generator `ε^a(x) = amplitude · b(|x − c|) · n^a` with
/// `b(r) = exp(1 − 1/(1 − s²))`, `s = (r − r0)/width`, supported on |s| < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeGenerator {
    pub r0: f64,
    pub width: f64,
    pub amplitude: f64,
    pub direction: V3,
}

impl Default for GaugeGenerator {
    fn default() -> Self {
        Self {
            r0: 2.5,
            width: 1.5,
            amplitude: 1.0,
            direction: [0.0, 0.0, 1.0],
        }
    }
}

impl GaugeGenerator {
    /// Bump value and radial derivative.
    fn bump(&self, r: f64) -> (f64, f64) {
        let s = (r - self.r0) / self.width;
        if s.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let d = 1.0 - s * s;
        let b = (1.0 - 1.0 / d).exp();
        let db = b * (-2.0 * s / (d * d)) / self.width;
        (self.amplitude * b, self.amplitude * db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedReport {
    /// L² norm of `ε_ijk D_j a_k − D_iψ − e[a_i, φ]`.
    pub linearized: f64,
    pub linearized_max: f64,
    /// L² norm of `D_i a_i + e[φ, ψ]`.
    pub orthogonality: f64,
    pub orthogonality_max: f64,
    /// `(½ ∫ a·a + ψ·ψ)^{1/2}`.
    pub tangent_norm: f64,
}

/// Pure-gauge tangent `a_i = D_iε`, `ψ = e[φ, ε]` at x.
fn gauge_tangent(cfg: &MonopoleConfig, g: &GaugeGenerator, x: &V3) -> (M3, V3) {
    let s = hedgehog_fields(cfg, x);
    let y = sub(x, &cfg.center);
    let r = norm(&y);
    let (b, db) = g.bump(r);
    let n = g.direction;
    let eps_v = scale(&n, b);
    let mut a = [[0.0; 3]; 3];
    for i in 0..3 {
        let grad = if r > 0.0 { db * y[i] / r } else { 0.0 };
        a[i] = add(&scale(&n, grad), &scale(&bracket(&s.a[i], &eps_v), cfg.e));
    }
    let psi = scale(&bracket(&s.phi, &eps_v), cfg.e);
    (a, psi)
}

fn d5<F: Fn(&V3) -> [f64; N], const N: usize>(f: &F, x: &V3, j: usize, h: f64) -> [f64; N] {
    let at = |s: f64| {
        let mut p = *x;
        p[j] += s;
        f(&p)
    };
    let (p2, p1, m1, m2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
    std::array::from_fn(|k| (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * h))
}

/// Residuals of the linearized Bogomolny and gauge-orthogonality equations
/// for the pure-gauge tangent generated by `g`, over an `n³` grid covering its support.
pub fn linearized_residuals(
    cfg: &MonopoleConfig,
    g: &GaugeGenerator,
    n: usize,
    h: f64,
) -> Result<LinearizedReport> {
    cfg.validate()?;
    if !(g.width > 0.0) || n < 2 || !(h > 0.0) {
        return Err(Error::Parameter("generator width, grid size and step must be positive".into()));
    }
    if g.r0 - g.width < cfg.exclusion_radius() {
        return Err(Error::Domain(format!(
            "generator support reaches r = {} inside the exclusion ball {}",
            g.r0 - g.width,
            cfg.exclusion_radius()
        )));
    }
    let flat = |p: &V3| -> [f64; 12] {
        let (a, psi) = gauge_tangent(cfg, g, p);
        let mut o = [0.0; 12];
        for i in 0..3 {
            o[3 * i..3 * i + 3].copy_from_slice(&a[i]);
        }
        o[9..].copy_from_slice(&psi);
        o
    };
    let l = g.r0 + g.width;
    let spec = GridSpec { n, half_width: l };
    let dv = spec.cell_volume();
    let (mut lin, mut orth, mut nrm) = (Vec::new(), Vec::new(), Vec::new());
    let (mut lin_max, mut orth_max): (f64, f64) = (0.0, 0.0);
    for p in spec.points() {
        let x = add(&p, &cfg.center);
        let v = flat(&x);
        let a: M3 = std::array::from_fn(|i| [v[3 * i], v[3 * i + 1], v[3 * i + 2]]);
        let psi: V3 = [v[9], v[10], v[11]];
        nrm.push(0.5 * (v.iter().map(|z| z * z).sum::<f64>()));
        if v.iter().all(|&z| z == 0.0) {
            // outside the support every term vanishes identically
            continue;
        }
        let s = hedgehog_fields(cfg, &x);
        // da[j][k][a] = ∂_j a_k^a ; dpsi[j][a] = ∂_j ψ^a
        let mut da = [[[0.0; 3]; 3]; 3];
        let mut dpsi = [[0.0; 3]; 3];
        for j in 0..3 {
            let d = d5(&flat, &x, j, h);
            for k in 0..3 {
                da[j][k] = [d[3 * k], d[3 * k + 1], d[3 * k + 2]];
            }
            dpsi[j] = [d[9], d[10], d[11]];
        }
        let cov = |j: usize, k: usize| add(&da[j][k], &scale(&bracket(&s.a[j], &a[k]), cfg.e));
        let mut l2 = 0.0;
        for i in 0..3 {
            let mut curl = [0.0; 3];
            for j in 0..3 {
                for k in 0..3 {
                    let e = eps(i, j, k);
                    if e != 0.0 {
                        curl = add(&curl, &scale(&cov(j, k), e));
                    }
                }
            }
            let dpsi_i = add(&dpsi[i], &scale(&bracket(&s.a[i], &psi), cfg.e));
            let r = sub(&sub(&curl, &dpsi_i), &scale(&bracket(&a[i], &s.phi), cfg.e));
            l2 += dot(&r, &r);
        }
        let mut div = scale(&bracket(&s.phi, &psi), cfg.e);
        for i in 0..3 {
            div = add(&div, &cov(i, i));
        }
        let o2 = dot(&div, &div);
        lin_max = lin_max.max(l2.sqrt());
        orth_max = orth_max.max(o2.sqrt());
        lin.push(l2);
        orth.push(o2);
    }
    Ok(LinearizedReport {
        linearized: (pairwise_sum(&lin) * dv).sqrt(),
        linearized_max: lin_max,
        orthogonality: (pairwise_sum(&orth) * dv).sqrt(),
        orthogonality_max: orth_max,
        tangent_norm: (pairwise_sum(&nrm) * dv).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// exports

/// CSV `r,H,K,phi_norm,energy_density` on the given radii.
pub fn profile_csv(cfg: &MonopoleConfig, radii: &[f64]) -> Result<String> {
    let mut s = String::from("r,H,K,phi_norm,energy_density\n");
    for &r in radii {
        let pv = cfg.profile.values(cfg.v * cfg.e * r);
        let rho = radial_energy_density(cfg, r)?;
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e}",
            r,
            pv.h,
            pv.k,
            higgs_magnitude(cfg, r),
            rho
        );
    }
    Ok(s)
}

/// CSV `h,residual_max,residual_l2`.
pub fn convergence_csv(rows: &[(f64, BogomolnyReport)]) -> String {
    let mut s = String::from("h,residual_max,residual_l2\n");
    for (h, r) in rows {
        let _ = writeln!(s, "{:e},{:e},{:e}", h, r.max, r.l2);
    }
    s
}
