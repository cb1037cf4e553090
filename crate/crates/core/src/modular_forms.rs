//! Eisenstein series and Jacobi theta nullwerte on the upper half-plane.
//!
//! Everything is evaluated from truncated q-expansions with a rigorous
//! geometric majorant on the discarded tail. Eisenstein series use the nome
//! `q = exp(2πiτ)`; theta nullwerte use `q^{1/2} = exp(πiτ)`, which is the
//! normalisation in which `ϑ3(i) = π^{1/4}/Γ(3/4)` and
//! `E4 = (ϑ2⁸ + ϑ3⁸ + ϑ4⁸)/2`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest imaginary part accepted for evaluation (|q| ≤ e^{-0.1π}).
pub const MIN_IM_TAU: f64 = 0.05;

/// Environment variable that overrides [`SeriesParams::default`]'s `max_terms`.
pub const MAX_TERMS_ENV: &str = "HALPHEN_MAX_TERMS";

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point τ of the upper half-plane together with its cached nomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint {
    tau: Complex64,
    q: Complex64,
    q_half: Complex64,
}

impl HalfPlanePoint {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.re.is_finite() && tau.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite tau {tau}")));
        }
        if tau.im <= 0.0 {
            return Err(Error::Domain(format!(
                "tau = {tau} is not in the upper half-plane"
            )));
        }
        if tau.im < MIN_IM_TAU {
            return Err(Error::Domain(format!(
                "Im tau = {} below the evaluation floor {MIN_IM_TAU}",
                tau.im
            )));
        }
        Ok(Self {
            tau,
            q: (2.0 * PI * I * tau).exp(),
            q_half: (PI * I * tau).exp(),
        })
    }

    /// The purely imaginary point τ = i·t.
    pub fn on_imaginary_axis(t: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, t))
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// `exp(2πiτ)`.
    pub fn q(&self) -> Complex64 {
        self.q
    }

    /// `exp(πiτ)`, the theta-series nome.
    pub fn q_half(&self) -> Complex64 {
        self.q_half
    }

    /// The S-transformed point −1/τ.
    pub fn s_transform(&self) -> Result<Self> {
        Self::new(-1.0 / self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    pub max_terms: usize,
    /// Absolute bound required on the truncation error.
    pub tail_tolerance: f64,
}

impl Default for SeriesParams {
    fn default() -> Self {
        Self {
            max_terms: 2000,
            tail_tolerance: 1e-15,
        }
    }
}

impl SeriesParams {
    pub fn new(max_terms: usize, tail_tolerance: f64) -> Result<Self> {
        let p = Self {
            max_terms,
            tail_tolerance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms == 0 {
            return Err(Error::Parameter("max_terms must be at least 1".into()));
        }
        if !(self.tail_tolerance > 0.0) {
            return Err(Error::Parameter("tail_tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Defaults, with `max_terms` taken from `HALPHEN_MAX_TERMS` when set.
    pub fn from_env() -> Result<Self> {
        let mut p = Self::default();
        if let Ok(raw) = std::env::var(MAX_TERMS_ENV) {
            let n: usize = raw.trim().parse().map_err(|_| {
                Error::Parameter(format!("{MAX_TERMS_ENV}={raw:?} is not a positive integer"))
            })?;
            p.max_terms = n;
        }
        p.validate()?;
        Ok(p)
    }
}

/// A truncated series value with a bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eisenstein {
    E2,
    E4,
    E6,
}

impl Eisenstein {
    pub fn weight(self) -> i32 {
        match self {
            Eisenstein::E2 => 2,
            Eisenstein::E4 => 4,
            Eisenstein::E6 => 6,
        }
    }

    fn coefficient(self) -> f64 {
        match self {
            Eisenstein::E2 => -24.0,
            Eisenstein::E4 => 240.0,
            Eisenstein::E6 => -504.0,
        }
    }

    fn divisor_power(self) -> usize {
        match self {
            Eisenstein::E2 => 0,
            Eisenstein::E4 => 1,
            Eisenstein::E6 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theta {
    Theta2,
    Theta3,
    Theta4,
}

// ---------------------------------------------------------------------------
// divisor sums

/// σ1, σ3, σ5 for 1..=len, index 0 unused.
struct DivisorTable {
    sigma: Vec<[f64; 3]>,
}

impl DivisorTable {
    fn build(n: usize) -> Self {
        let mut sigma = vec![[0.0; 3]; n + 1];
        for d in 1..=n {
            let df = d as f64;
            let pw = [df, df.powi(3), df.powi(5)];
            let mut m = d;
            while m <= n {
                for k in 0..3 {
                    sigma[m][k] += pw[k];
                }
                m += d;
            }
        }
        Self { sigma }
    }

    fn len(&self) -> usize {
        self.sigma.len() - 1
    }
}

fn divisor_table(n: usize) -> Arc<DivisorTable> {
    static TABLE: OnceLock<RwLock<Arc<DivisorTable>>> = OnceLock::new();
    let lock = TABLE.get_or_init(|| RwLock::new(Arc::new(DivisorTable::build(64))));
    {
        let t = lock.read().unwrap_or_else(|e| e.into_inner());
        if t.len() >= n {
            return Arc::clone(&t);
        }
    }
    let mut t = lock.write().unwrap_or_else(|e| e.into_inner());
    if t.len() < n {
        *t = Arc::new(DivisorTable::build(n.max(2 * t.len())));
    }
    Arc::clone(&t)
}

/// Divisor sum σ_k(n) for k ∈ {1, 3, 5} from the shared sieve.
pub fn sigma(k: u32, n: usize) -> f64 {
    let idx = match k {
        1 => 0,
        3 => 1,
        5 => 2,
        _ => panic!("sigma is tabulated for k = 1, 3, 5 only"),
    };
    divisor_table(n).sigma[n][idx]
}

// ---------------------------------------------------------------------------
// tail majorants

/// Bound on Σ_{n>N} n^k (1 + ln n) r^n, which dominates Σ σ_k(n) r^n.
fn eisenstein_tail(k: u32, r: f64, n_done: usize) -> f64 {
    // log space: the terms underflow long before the ratio stops being meaningful
    let n = (n_done + 1) as f64;
    let log_term = |m: f64| k as f64 * m.ln() + (1.0 + m.ln()).ln() + m * r.ln();
    let ratio = (log_term(n + 1.0) - log_term(n)).exp();
    if !(ratio < 1.0) {
        return f64::INFINITY;
    }
    log_term(n).exp() / (1.0 - ratio)
}

fn theta_tail(kind: Theta, r: f64, n_done: usize) -> f64 {
    let n = n_done as f64;
    match kind {
        // terms n >= 0 with exponent (n + 1/2)^2; n_done of them summed
        Theta::Theta2 => {
            let e = (n + 0.5) * (n + 0.5);
            2.0 * r.powf(e) / (1.0 - r.powf(2.0 * n + 2.0))
        }
        Theta::Theta3 | Theta::Theta4 => {
            let e = (n + 1.0) * (n + 1.0);
            2.0 * r.powf(e) / (1.0 - r.powf(2.0 * n + 3.0))
        }
    }
}

// ---------------------------------------------------------------------------
// evaluation

/// Eisenstein series truncated after exactly `n_terms` q-powers.
pub fn eisenstein_partial(kind: Eisenstein, p: &HalfPlanePoint, n_terms: usize) -> SeriesValue {
    let table = divisor_table(n_terms.max(1));
    let c = kind.coefficient();
    let k = kind.divisor_power();
    let mut qn = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=n_terms {
        qn *= p.q;
        sum += qn * table.sigma[n][k];
    }
    let power = 2 * k as u32 + 1;
    SeriesValue {
        value: 1.0 + c * sum,
        tail_bound: c.abs() * eisenstein_tail(power, p.q.norm(), n_terms),
        terms: n_terms,
    }
}

/// Eisenstein series E2, E4 or E6 to the requested tail tolerance.
pub fn eisenstein(kind: Eisenstein, p: &HalfPlanePoint, params: &SeriesParams) -> Result<SeriesValue> {
    params.validate()?;
    let r = p.q.norm();
    let c = kind.coefficient().abs();
    let power = 2 * kind.divisor_power() as u32 + 1;
    let mut n = 0;
    let mut bound = c * eisenstein_tail(power, r, 0);
    while bound > params.tail_tolerance {
        if n >= params.max_terms {
            return Err(Error::Truncation {
                terms: n,
                tail_bound: bound,
                tolerance: params.tail_tolerance,
            });
        }
        n += 1;
        bound = c * eisenstein_tail(power, r, n);
    }
    Ok(eisenstein_partial(kind, p, n))
}

/// Theta nullwert truncated after `n_terms` terms of its sum.
pub fn theta_partial(kind: Theta, p: &HalfPlanePoint, n_terms: usize) -> SeriesValue {
    let tau = p.tau;
    let term = |e: f64| (PI * I * tau * e).exp();
    let mut sum = Complex64::new(0.0, 0.0);
    let value = match kind {
        Theta::Theta2 => {
            for n in 0..n_terms {
                let m = n as f64 + 0.5;
                sum += term(m * m);
            }
            2.0 * sum
        }
        Theta::Theta3 | Theta::Theta4 => {
            for n in 1..=n_terms {
                let m = n as f64;
                let t = term(m * m);
                if kind == Theta::Theta4 && n % 2 == 1 {
                    sum -= t;
                } else {
                    sum += t;
                }
            }
            1.0 + 2.0 * sum
        }
    };
    SeriesValue {
        value,
        tail_bound: theta_tail(kind, p.q_half.norm(), n_terms),
        terms: n_terms,
    }
}

pub fn theta(kind: Theta, p: &HalfPlanePoint, params: &SeriesParams) -> Result<SeriesValue> {
    params.validate()?;
    let r = p.q_half.norm();
    let mut n = 0;
    let mut bound = theta_tail(kind, r, 0);
    while bound > params.tail_tolerance {
        if n >= params.max_terms {
            return Err(Error::Truncation {
                terms: n,
                tail_bound: bound,
                tolerance: params.tail_tolerance,
            });
        }
        n += 1;
        bound = theta_tail(kind, r, n);
    }
    Ok(theta_partial(kind, p, n))
}

/// All six basic q-series at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularValues {
    pub e2: SeriesValue,
    pub e4: SeriesValue,
    pub e6: SeriesValue,
    pub theta2: SeriesValue,
    pub theta3: SeriesValue,
    pub theta4: SeriesValue,
}

impl ModularValues {
    pub fn at(p: &HalfPlanePoint, params: &SeriesParams) -> Result<Self> {
        Ok(Self {
            e2: eisenstein(Eisenstein::E2, p, params)?,
            e4: eisenstein(Eisenstein::E4, p, params)?,
            e6: eisenstein(Eisenstein::E6, p, params)?,
            theta2: theta(Theta::Theta2, p, params)?,
            theta3: theta(Theta::Theta3, p, params)?,
            theta4: theta(Theta::Theta4, p, params)?,
        })
    }
}

/// Propagated bound on |x·y − x̃·ỹ| given bounds on |x − x̃| and |y − ỹ|.
fn product_bound(x: &SeriesValue, y: &SeriesValue) -> f64 {
    x.value.norm() * y.tail_bound + y.value.norm() * x.tail_bound + x.tail_bound * y.tail_bound
}

/// dE_k/dτ from Ramanujan's differential system.
pub fn eisenstein_derivative(
    kind: Eisenstein,
    p: &HalfPlanePoint,
    params: &SeriesParams,
) -> Result<SeriesValue> {
    let e2 = eisenstein(Eisenstein::E2, p, params)?;
    let e4 = eisenstein(Eisenstein::E4, p, params)?;
    let (prefactor, value, bound) = match kind {
        Eisenstein::E2 => (
            PI * I / 6.0,
            e2.value * e2.value - e4.value,
            product_bound(&e2, &e2) + e4.tail_bound,
        ),
        Eisenstein::E4 => {
            let e6 = eisenstein(Eisenstein::E6, p, params)?;
            (
                2.0 * PI * I / 3.0,
                e2.value * e4.value - e6.value,
                product_bound(&e2, &e4) + e6.tail_bound,
            )
        }
        Eisenstein::E6 => {
            let e6 = eisenstein(Eisenstein::E6, p, params)?;
            (
                PI * I,
                e2.value * e6.value - e4.value * e4.value,
                product_bound(&e2, &e6) + product_bound(&e4, &e4),
            )
        }
    };
    Ok(SeriesValue {
        value: prefactor * value,
        tail_bound: prefactor.norm() * bound,
        terms: e2.terms.max(e4.terms),
    })
}

/// Residuals of the S-transformation laws at τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformResiduals {
    /// |E2(−1/τ) − τ²E2(τ) − 12τ/(2πi)|
    pub e2: f64,
    /// |E4(−1/τ) − τ⁴E4(τ)|
    pub e4: f64,
    /// |E6(−1/τ) − τ⁶E6(τ)|
    pub e6: f64,
    /// Combined truncation bound for each law, in the same order.
    pub bounds: [f64; 3],
}

impl TransformResiduals {
    pub fn max(&self) -> f64 {
        self.e2.max(self.e4).max(self.e6)
    }
}

pub fn transform_residuals(p: &HalfPlanePoint, params: &SeriesParams) -> Result<TransformResiduals> {
    let ps = p.s_transform()?;
    let tau = p.tau;
    let law = |kind: Eisenstein| -> Result<(f64, f64)> {
        let lhs = eisenstein(kind, &ps, params)?;
        let rhs = eisenstein(kind, p, params)?;
        let w = kind.weight();
        let mut expected = tau.powi(w) * rhs.value;
        if kind == Eisenstein::E2 {
            expected += 12.0 * tau / (2.0 * PI * I);
        }
        Ok((
            (lhs.value - expected).norm(),
            lhs.tail_bound + tau.norm().powi(w) * rhs.tail_bound,
        ))
    };
    let (e2, b2) = law(Eisenstein::E2)?;
    let (e4, b4) = law(Eisenstein::E4)?;
    let (e6, b6) = law(Eisenstein::E6)?;
    Ok(TransformResiduals {
        e2,
        e4,
        e6,
        bounds: [b2, b4, b6],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(re: f64, im: f64) -> HalfPlanePoint {
        HalfPlanePoint::new(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn divisor_sums() {
        assert_eq!(sigma(1, 12), 28.0);
        assert_eq!(sigma(3, 6), 1.0 + 8.0 + 27.0 + 216.0);
        assert_eq!(sigma(5, 1), 1.0);
        // 4999 is prime; forces a table rebuild
        assert_eq!(sigma(1, 4999), 5000.0);
        assert_eq!(sigma(3, 4999), 4999f64.powi(3) + 1.0);
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(matches!(
            HalfPlanePoint::new(Complex64::new(0.0, -1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            HalfPlanePoint::new(Complex64::new(0.3, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(HalfPlanePoint::new(Complex64::new(0.0, 0.01)).is_err());
    }

    #[test]
    fn q_to_zero_limits() {
        let p = pt(0.0, 50.0);
        let params = SeriesParams::default();
        let e2 = eisenstein(Eisenstein::E2, &p, &params).unwrap();
        assert!((e2.value - 1.0).norm() < 1e-15);
        let t3 = theta(Theta::Theta3, &p, &params).unwrap();
        let t2 = theta(Theta::Theta2, &p, &params).unwrap();
        let t4 = theta(Theta::Theta4, &p, &params).unwrap();
        assert!((t3.value - 1.0).norm() < 1e-15);
        assert!(t2.value.norm() < 1e-15);
        assert!((t4.value - 1.0).norm() < 1e-15);
        let d = eisenstein_derivative(Eisenstein::E2, &p, &params).unwrap();
        assert!(d.value.norm() < 1e-14);
    }

    #[test]
    fn values_at_i() {
        let p = pt(0.0, 1.0);
        let params = SeriesParams::default();
        let e6 = eisenstein(Eisenstein::E6, &p, &params).unwrap();
        assert!(e6.value.norm() < 1e-13);
        let e2 = eisenstein(Eisenstein::E2, &p, &params).unwrap();
        assert!((e2.value.re - 0.954_929_658_551_372).abs() < 1e-14);
        assert!((e2.value.re - 3.0 / PI).abs() < 1e-14);
        let t3 = theta(Theta::Theta3, &p, &params).unwrap();
        assert!((t3.value.re - 1.086_434_811_213_308).abs() < 1e-14);
    }

    #[test]
    fn theta3_stable_under_more_terms() {
        let p = pt(0.0, 1.0);
        let a = theta_partial(Theta::Theta3, &p, 10).value;
        let b = theta_partial(Theta::Theta3, &p, 20).value;
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_failure_reported() {
        let p = pt(0.0, 0.05);
        let params = SeriesParams::new(3, 1e-15).unwrap();
        let err = eisenstein(Eisenstein::E4, &p, &params).unwrap_err();
        assert!(matches!(err, Error::Truncation { terms: 3, .. }));
        assert!(SeriesParams::new(0, 1e-3).is_err());
        assert!(SeriesParams::new(10, 0.0).is_err());
    }

    #[test]
    fn tail_bound_dominates_true_tail() {
        let p = pt(0.1, 0.3);
        let exact = eisenstein_partial(Eisenstein::E4, &p, 400).value;
        for n in [5, 10, 20, 40] {
            let v = eisenstein_partial(Eisenstein::E4, &p, n);
            assert!((v.value - exact).norm() <= v.tail_bound, "n = {n}");
        }
        let exact = theta_partial(Theta::Theta2, &p, 60).value;
        for n in [1, 2, 4, 8] {
            let v = theta_partial(Theta::Theta2, &p, n);
            assert!((v.value - exact).norm() <= v.tail_bound, "n = {n}");
        }
    }

    #[test]
    fn transform_laws() {
        let params = SeriesParams::default();
        let r = transform_residuals(&pt(0.0, 1.0), &params).unwrap();
        assert!(r.e2 < 1e-13);
        let r = transform_residuals(&pt(0.2, 1.5), &params).unwrap();
        assert!(r.max() < 1e-10, "{r:?}");
        let r = transform_residuals(&pt(0.0, 2.0), &params).unwrap();
        assert!(r.e4 < 1e-12);
    }

    #[test]
    fn ramanujan_derivative_matches_finite_difference() {
        let params = SeriesParams::default();
        let tau = Complex64::new(0.0, 1.2);
        let h = 1e-4;
        let e2 = |z: Complex64| {
            eisenstein(Eisenstein::E2, &HalfPlanePoint::new(z).unwrap(), &params)
                .unwrap()
                .value
        };
        let fd = (e2(tau + h) - e2(tau - h)) / (2.0 * h);
        let d = eisenstein_derivative(Eisenstein::E2, &HalfPlanePoint::new(tau).unwrap(), &params)
            .unwrap()
            .value;
        assert!((fd - d).norm() / d.norm() < 1e-6);
    }
}
