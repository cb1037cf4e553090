//! Cartan geometry of diagonal Bianchi IX metrics
//! `g = Θ¹Θ²Θ³ dt² + Σ_i (Θ^jΘ^k/Θ^i) (σ^i)²`.
//!
//! Everything is computed over the orthonormal coframe
//! `θ⁰ = f₀ dt`, `θ^i = f_i σ^i` whose coefficients depend on t only, so
//! exterior derivatives reduce to t-derivatives (carried by jets) plus the
//! algebraic Maurer-Cartan relations. Frame index 0 is the dt direction.

use std::fmt::Write as _;

use crate::darboux_halphen::{TriadJet, TriadProvider};
use crate::error::{Error, Result};
use crate::forms::{Coframe, Form, DIM};
use crate::jet::Jet;

/// `dσ^i = SIGMA_STRUCTURE_SIGN · ½ ε_ijk σ^j∧σ^k` for the Euler-angle forms below.
pub const SIGMA_STRUCTURE_SIGN: f64 = -1.0;

/// Sign of `ε_0123`; fixes which half of the curvature is called anti-self-dual.
pub const ORIENTATION: f64 = 1.0;

pub const DEFAULT_SIN_EXCLUSION: f64 = 1e-3;

/// Number of samples used to discover the positivity domain.
pub const POSITIVITY_SCAN: usize = 201;

/// Cyclic triples (i, j, k).
pub const CYCLIC: [(usize, usize, usize); 3] = [(1, 2, 3), (2, 3, 1), (3, 1, 2)];

pub fn levi_civita4(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let p = [a, b, c, d];
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] == p[j] {
                return 0.0;
            }
        }
    }
    let mut inv = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    ORIENTATION * if inv % 2 == 0 { 1.0 } else { -1.0 }
}

// ---------------------------------------------------------------------------
// Maurer-Cartan forms

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerPoint {
    pub alpha: f64,
    pub beta: f64,
    pub psi: f64,
}

impl EulerPoint {
    pub fn new(alpha: f64, beta: f64, psi: f64) -> Result<Self> {
        let tau = 2.0 * std::f64::consts::PI;
        if !(0.0..=0.5 * tau).contains(&alpha)
            || !(0.0..=tau).contains(&beta)
            || !(0.0..=2.0 * tau).contains(&psi)
        {
            return Err(Error::Domain(format!(
                "Euler angles ({alpha}, {beta}, {psi}) outside [0,π]×[0,2π]×[0,4π]"
            )));
        }
        Ok(Self { alpha, beta, psi })
    }
}

/// Rows σ¹, σ², σ³; columns the coefficients of dα, dβ, dψ.
pub fn sigma_components(alpha: f64, psi: f64) -> [[f64; 3]; 3] {
    let (sa, ca) = alpha.sin_cos();
    let (sp, cp) = psi.sin_cos();
    [[cp, sa * sp, 0.0], [-sp, sa * cp, 0.0], [0.0, ca, 1.0]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaurerCartan {
    pub sigma: [[f64; 3]; 3],
    /// max |dσ^i − s·½ε_ijk σ^j∧σ^k| with d by central differences.
    pub structure_residual: f64,
    /// Coefficient of dα∧dβ∧dψ in σ¹∧σ²∧σ³.
    pub volume: f64,
}

pub fn maurer_cartan_at(p: &EulerPoint, sin_exclusion: f64) -> Result<MaurerCartan> {
    if p.alpha.sin().abs() < sin_exclusion {
        return Err(Error::Domain(format!(
            "|sin α| = {:e} inside the coordinate exclusion band {sin_exclusion:e}",
            p.alpha.sin().abs()
        )));
    }
    let m = sigma_components(p.alpha, p.psi);
    let h = 1e-5;
    // ∂_μ of the component matrix; coordinates (α, β, ψ)
    let dm: [[[f64; 3]; 3]; 3] = [
        {
            let (a, b) = (sigma_components(p.alpha + h, p.psi), sigma_components(p.alpha - h, p.psi));
            std::array::from_fn(|i| std::array::from_fn(|n| (a[i][n] - b[i][n]) / (2.0 * h)))
        },
        [[0.0; 3]; 3],
        {
            let (a, b) = (sigma_components(p.alpha, p.psi + h), sigma_components(p.alpha, p.psi - h));
            std::array::from_fn(|i| std::array::from_fn(|n| (a[i][n] - b[i][n]) / (2.0 * h)))
        },
    ];
    let mut residual: f64 = 0.0;
    for (i, j, k) in CYCLIC {
        let (i, j, k) = (i - 1, j - 1, k - 1);
        for mu in 0..3 {
            for nu in mu + 1..3 {
                let d = dm[mu][i][nu] - dm[nu][i][mu];
                let wedge = m[j][mu] * m[k][nu] - m[j][nu] * m[k][mu];
                residual = residual.max((d - SIGMA_STRUCTURE_SIGN * wedge).abs());
            }
        }
    }
    let volume = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    Ok(MaurerCartan {
        sigma: m,
        structure_residual: residual,
        volume,
    })
}

// ---------------------------------------------------------------------------
// metric

/// `f_a` as jets from a triad jet; requires every squared coefficient positive.
pub fn frame_coefficients(j: &TriadJet) -> Result<[Jet; DIM]> {
    let th: [Jet; 3] = std::array::from_fn(|i| Jet::new(j.value[i], j.d1[i], j.d2[i]));
    let p = th[0] * th[1] * th[2];
    let sq = [p, p / (th[0] * th[0]), p / (th[1] * th[1]), p / (th[2] * th[2])];
    if !sq.iter().all(|x| x.value() > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!(
            "metric coefficients {:?} not all positive",
            sq.map(|x| x.value())
        )));
    }
    Ok(sq.map(|x| x.sqrt()))
}

/// Diagonal coefficients `(f₀², f₁², f₂², f₃²)` from triad values.
pub fn squared_coefficients(th: &[f64; 3]) -> [f64; 4] {
    let p = th[0] * th[1] * th[2];
    [p, th[1] * th[2] / th[0], th[2] * th[0] / th[1], th[0] * th[1] / th[2]]
}

/// The metric of a triad provider on its discovered positivity domain.
#[derive(Debug, Clone)]
pub struct CoframeMetric<P> {
    provider: P,
    domain: (f64, f64),
}

impl<P: TriadProvider> CoframeMetric<P> {
    pub fn provider(&self) -> &P {
        &self.provider
    }

    /// Largest scanned sub-interval of the requested range on which all four coefficients are positive.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * (self.domain.1 - self.domain.0).abs().max(1.0);
        t >= self.domain.0 - slack && t <= self.domain.1 + slack
    }

    pub fn coefficients(&self, t: f64) -> Result<[f64; 4]> {
        self.check(t)?;
        Ok(squared_coefficients(&self.provider.jet(t)?.value))
    }

    fn check(&self, t: f64) -> Result<()> {
        if !self.contains(t) {
            return Err(Error::Domain(format!(
                "t = {t} outside positivity domain [{}, {}]",
                self.domain.0, self.domain.1
            )));
        }
        Ok(())
    }

    /// Triad jet and frame coefficients at t.
    pub fn frame(&self, t: f64) -> Result<(TriadJet, [Jet; DIM])> {
        self.check(t)?;
        let j = self.provider.jet(t)?;
        let f = frame_coefficients(&j)?;
        Ok((j, f))
    }
}

pub fn build_coframe_metric<P: TriadProvider>(
    provider: P,
    start: f64,
    end: f64,
) -> Result<CoframeMetric<P>> {
    if !(start.is_finite() && end.is_finite()) || start >= end {
        return Err(Error::Parameter(format!("empty scan interval [{start}, {end}]")));
    }
    let n = POSITIVITY_SCAN;
    let ts: Vec<f64> = (0..n)
        .map(|k| start + (end - start) * k as f64 / (n - 1) as f64)
        .collect();
    let ok: Vec<bool> = ts
        .iter()
        .map(|&t| {
            provider
                .jet(t)
                .map(|j| squared_coefficients(&j.value).iter().all(|&c| c > 0.0 && c.is_finite()))
                .unwrap_or(false)
        })
        .collect();
    let mut best: Option<(usize, usize)> = None;
    let mut k = 0;
    while k < n {
        if ok[k] {
            let s = k;
            while k + 1 < n && ok[k + 1] {
                k += 1;
            }
            if k > s && best.is_none_or(|(a, b)| k - s > b - a) {
                best = Some((s, k));
            }
        }
        k += 1;
    }
    match best {
        Some((a, b)) => Ok(CoframeMetric {
            provider,
            domain: (ts[a], ts[b]),
        }),
        None => Err(Error::EmptyDomain { start, end }),
    }
}

// ---------------------------------------------------------------------------
// connection and curvature

/// Orthonormal coframe algebra at one value of t.
fn coframe_at(f: &[Jet; DIM]) -> Coframe {
    let mut dtheta = [Form::ZERO; DIM];
    for (i, j, k) in CYCLIC {
        let h = f[i].deriv() / (f[0] * f[i]);
        dtheta[i] = Form::two(0, i, h)
            + Form::two(j, k, f[i] / (f[j] * f[k]) * SIGMA_STRUCTURE_SIGN);
    }
    Coframe::new(f[0], dtheta)
}

#[derive(Debug, Clone)]
pub struct Connection {
    pub t: f64,
    /// ω_ab as 1-forms, antisymmetric in (a, b).
    pub omega: [[Form; DIM]; DIM],
    /// Γ_abc with ω_ab = Γ_abc θ^c.
    pub gamma: [[[f64; DIM]; DIM]; DIM],
    /// max |dθ^a + ω_ab∧θ^b|.
    pub torsion_residual: f64,
    pub triad: TriadJet,
    pub frame: [Jet; DIM],
    coframe: Coframe,
}

impl Connection {
    pub fn coframe(&self) -> &Coframe {
        &self.coframe
    }
}

pub fn solve_connection<P: TriadProvider>(m: &CoframeMetric<P>, t: f64) -> Result<Connection> {
    let (triad, f) = m.frame(t)?;
    connection_from_frame(t, triad, f)
}

fn connection_from_frame(t: f64, triad: TriadJet, f: [Jet; DIM]) -> Result<Connection> {
    let cf = coframe_at(&f);
    // dθ^a = −½ C_abc θ^b∧θ^c
    let c = |a: usize, b: usize, d: usize| -> Jet { -cf.dtheta(a).c2(b, d) };
    let mut omega = [[Form::ZERO; DIM]; DIM];
    let mut gamma = [[[0.0; DIM]; DIM]; DIM];
    for a in 0..DIM {
        for b in a + 1..DIM {
            let mut coeffs = [Jet::ZERO; DIM];
            for (k, slot) in coeffs.iter_mut().enumerate() {
                let x = (c(k, a, b) - c(a, b, k) - c(b, k, a)) * 0.5;
                gamma[a][b][k] = x.value();
                gamma[b][a][k] = -x.value();
                *slot = x;
            }
            omega[a][b] = Form::one(coeffs);
            omega[b][a] = -omega[a][b];
        }
    }
    let mut torsion: f64 = 0.0;
    for a in 0..DIM {
        let mut tf = *cf.dtheta(a);
        for b in 0..DIM {
            tf += omega[a][b].wedge(&Form::basis(b));
        }
        torsion = torsion.max(tf.max_abs());
    }
    if !torsion.is_finite() {
        return Err(Error::Numerical(format!("non-finite connection at t = {t}")));
    }
    Ok(Connection {
        t,
        omega,
        gamma,
        torsion_residual: torsion,
        triad,
        frame: f,
        coframe: cf,
    })
}

#[derive(Debug, Clone)]
pub struct Curvature {
    pub t: f64,
    /// ℛ_ab = dω_ab + ω_ac∧ω_cb.
    pub r: [[Form; DIM]; DIM],
}

impl Curvature {
    /// R_abcd with ℛ_ab = ½ R_abcd θ^c∧θ^d.
    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.r[a][b].c2(c, d).value()
    }

    pub fn max_abs(&self) -> f64 {
        self.r
            .iter()
            .flatten()
            .map(|f| f.max_abs())
            .fold(0.0, f64::max)
    }

    /// max |ℛ_ab + ℛ_ba|.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..DIM {
            for b in 0..DIM {
                m = m.max((self.r[a][b] + self.r[b][a]).max_abs());
            }
        }
        m
    }
}

pub fn curvature(omega: &Connection) -> Curvature {
    let cf = omega.coframe();
    let mut r = [[Form::ZERO; DIM]; DIM];
    for a in 0..DIM {
        for b in a + 1..DIM {
            let mut f = cf.d(&omega.omega[a][b]);
            for c in 0..DIM {
                f += omega.omega[a][c].wedge(&omega.omega[c][b]);
            }
            r[a][b] = f;
            r[b][a] = -f;
        }
    }
    Curvature { t: omega.t, r }
}

/// max |ℛ_ab∧θ^b|.
pub fn first_bianchi_residual(r: &Curvature) -> f64 {
    let mut m: f64 = 0.0;
    for a in 0..DIM {
        let mut f = Form::ZERO;
        for b in 0..DIM {
            f += r.r[a][b].wedge(&Form::basis(b));
        }
        m = m.max(f.max_abs());
    }
    m
}

/// max |dℛ_ab + ω_ac∧ℛ_cb − ℛ_ac∧ω_cb| with dℛ by central differences in t.
pub fn second_bianchi_residual<P: TriadProvider>(m: &CoframeMetric<P>, t: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Parameter("difference step must be positive".into()));
    }
    let conn = solve_connection(m, t)?;
    let r0 = curvature(&conn);
    let rp = curvature(&solve_connection(m, t + h)?);
    let rm = curvature(&solve_connection(m, t - h)?);
    let mut rj = [[Form::ZERO; DIM]; DIM];
    for a in 0..DIM {
        for b in 0..DIM {
            let mut f = Form::ZERO;
            for mask in 0..16 {
                let v = r0.r[a][b].get(mask).value();
                let d = (rp.r[a][b].get(mask).value() - rm.r[a][b].get(mask).value()) / (2.0 * h);
                if v != 0.0 || d != 0.0 {
                    f.set(mask, Jet::with_order(v, d, f64::NAN, 1));
                }
            }
            rj[a][b] = f;
        }
    }
    let cf = conn.coframe();
    let mut res: f64 = 0.0;
    for a in 0..DIM {
        for b in 0..DIM {
            let mut f = cf.d(&rj[a][b]);
            for c in 0..DIM {
                f += conn.omega[a][c].wedge(&rj[c][b]) - rj[a][c].wedge(&conn.omega[c][b]);
            }
            res = res.max(f.max_abs());
        }
    }
    Ok(res)
}

// ---------------------------------------------------------------------------
// self-dual / anti-self-dual split

#[derive(Debug, Clone)]
pub struct SDDecomposition {
    pub s: [Form; 3],
    pub a: [Form; 3],
    pub big_s: [Form; 3],
    pub big_a: [Form; 3],
    /// max |s̃ − s|, |ã + a|, |S̃ − S|, |Ã + A| under index duality.
    pub duality_residual: f64,
    /// max |S_i − (ds_i − 2 s_j∧s_k)|.
    pub structure_residual_s: f64,
    /// max |A_i − (da_i + 2 a_j∧a_k)|.
    pub structure_residual_a: f64,
}

fn split(m: &[[Form; DIM]; DIM]) -> ([Form; 3], [Form; 3]) {
    let mut plus = [Form::ZERO; 3];
    let mut minus = [Form::ZERO; 3];
    for (i, j, k) in CYCLIC {
        plus[i - 1] = (m[0][i] + m[j][k]) * 0.5;
        minus[i - 1] = (m[0][i] - m[j][k]) * 0.5;
    }
    (plus, minus)
}

/// `X̃_ab = ½ ε_abcd X_cd`.
fn index_dual(m: &[[Form; DIM]; DIM]) -> [[Form; DIM]; DIM] {
    let mut out = [[Form::ZERO; DIM]; DIM];
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                for d in 0..DIM {
                    let e = levi_civita4(a, b, c, d);
                    if e != 0.0 {
                        out[a][b] += m[c][d] * (0.5 * e);
                    }
                }
            }
        }
    }
    out
}

fn max3(f: impl Fn(usize) -> f64) -> f64 {
    (0..3).map(f).fold(0.0, f64::max)
}

pub fn sd_decompose(omega: &Connection, r: &Curvature) -> SDDecomposition {
    let (s, a) = split(&omega.omega);
    let (big_s, big_a) = split(&r.r);
    let (st, at) = split(&index_dual(&omega.omega));
    let (bst, bat) = split(&index_dual(&r.r));
    let duality_residual = max3(|i| {
        (st[i] - s[i])
            .max_abs()
            .max((at[i] + a[i]).max_abs())
            .max((bst[i] - big_s[i]).max_abs())
            .max((bat[i] + big_a[i]).max_abs())
    });
    let cf = omega.coframe();
    let mut rs: f64 = 0.0;
    let mut ra: f64 = 0.0;
    for (i, j, k) in CYCLIC {
        let (i, j, k) = (i - 1, j - 1, k - 1);
        let ss = cf.d(&s[i]) - s[j].wedge(&s[k]) * 2.0;
        let aa = cf.d(&a[i]) + a[j].wedge(&a[k]) * 2.0;
        rs = rs.max((big_s[i] - ss).max_abs());
        ra = ra.max((big_a[i] - aa).max_abs());
    }
    SDDecomposition {
        s,
        a,
        big_s,
        big_a,
        duality_residual,
        structure_residual_s: rs,
        structure_residual_a: ra,
    }
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, PartialEq)]
pub struct AsdReport {
    pub t: f64,
    /// max_i of the A_i 2-form components.
    pub residual: f64,
    /// max_i of the S_i 2-form components.
    pub self_dual_max: f64,
    /// a_i in the basis (dt, σ¹, σ², σ³).
    pub a_sigma: [[f64; 4]; 3],
    /// max_i ||a_i·σ^i| − ½| plus the largest off-diagonal a_i component.
    pub reduction_residual: f64,
    /// |a_i − closed triad formula| in the orthonormal frame.
    pub formula_residual: f64,
    pub torsion_residual: f64,
    pub structure_residual: f64,
}

/// Frame coefficient of a_i on θ^i written through the triad and its derivative.
pub fn a_formula(j: &TriadJet) -> [f64; 3] {
    let th = j.value;
    let d = j.d1;
    let p = th[0] * th[1] * th[2];
    std::array::from_fn(|n| {
        let (i, jj, k) = CYCLIC[n];
        let (i, jj, k) = (i - 1, jj - 1, k - 1);
        let term = |m: usize, u: usize, v: usize| (d[m] - th[u] * th[v]) / th[m];
        (term(i, jj, k) - term(jj, k, i) - term(k, i, jj)) / (4.0 * p.sqrt())
    })
}

pub fn asd_residual<P: TriadProvider>(m: &CoframeMetric<P>, t: f64) -> Result<AsdReport> {
    let conn = solve_connection(m, t)?;
    let r = curvature(&conn);
    let sd = sd_decompose(&conn, &r);
    let residual = max3(|i| sd.big_a[i].max_abs());
    let self_dual_max = max3(|i| sd.big_s[i].max_abs());
    let f = conn.frame;
    let a_sigma: [[f64; 4]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|c| sd.a[i].c1(c).value() * f[c].value()));
    let mut reduction: f64 = 0.0;
    for i in 0..3 {
        for c in 0..4 {
            let v = a_sigma[i][c];
            let dev = if c == i + 1 { (v.abs() - 0.5).abs() } else { v.abs() };
            reduction = reduction.max(dev);
        }
    }
    let formula = a_formula(&conn.triad);
    let formula_residual = max3(|i| (sd.a[i].c1(i + 1).value() - formula[i]).abs());
    Ok(AsdReport {
        t,
        residual,
        self_dual_max,
        a_sigma,
        reduction_residual: reduction,
        formula_residual,
        torsion_residual: conn.torsion_residual,
        structure_residual: sd.structure_residual_a.max(sd.structure_residual_s),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RicciReport {
    pub t: f64,
    /// R_bd = Σ_a R_abad in the orthonormal frame.
    pub ricci: [[f64; DIM]; DIM],
    pub max_abs: f64,
    pub torsion_residual: f64,
}

pub fn ricci_tensor(r: &Curvature) -> [[f64; DIM]; DIM] {
    std::array::from_fn(|b| std::array::from_fn(|d| (0..DIM).map(|a| r.riemann(a, b, a, d)).sum()))
}

pub fn ricci<P: TriadProvider>(m: &CoframeMetric<P>, t: f64) -> Result<RicciReport> {
    let conn = solve_connection(m, t)?;
    let r = curvature(&conn);
    let ric = ricci_tensor(&r);
    let max_abs = ric.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(RicciReport {
        t,
        ricci: ric,
        max_abs,
        torsion_residual: conn.torsion_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub asd_residual: f64,
    pub ricci_maxabs: f64,
    pub torsion_residual: f64,
    pub coefficients: [f64; 4],
}

pub fn sweep_row<P: TriadProvider>(m: &CoframeMetric<P>, t: f64) -> Result<SweepRow> {
    let asd = asd_residual(m, t)?;
    let ric = ricci(m, t)?;
    Ok(SweepRow {
        t,
        asd_residual: asd.residual,
        ricci_maxabs: ric.max_abs,
        torsion_residual: asd.torsion_residual.max(ric.torsion_residual),
        coefficients: m.coefficients(t)?,
    })
}

/// CSV with header `t,asd_residual,ricci_maxabs,f0sq,f1sq,f2sq,f3sq`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("t,asd_residual,ricci_maxabs,f0sq,f1sq,f2sq,f3sq\n");
    for r in rows {
        let c = r.coefficients;
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.asd_residual, r.ricci_maxabs, c[0], c[1], c[2], c[3]
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux_halphen::{
        ClosedForm, ConstantTriad, Isotropic, Perturbed, Rescaled, TimeReversed,
    };
    use crate::modular_forms::SeriesParams;
    use std::f64::consts::PI;

    fn ah() -> CoframeMetric<ClosedForm> {
        build_coframe_metric(ClosedForm::atiyah_hitchin(SeriesParams::default()), -3.0, -0.5).unwrap()
    }

    #[test]
    fn euler_forms() {
        let p = EulerPoint::new(PI / 2.0, 0.0, 0.0).unwrap();
        let mc = maurer_cartan_at(&p, DEFAULT_SIN_EXCLUSION).unwrap();
        assert_eq!(mc.sigma[0], [1.0, 0.0, 0.0]);
        assert!((mc.sigma[2][1]).abs() < 1e-16 && mc.sigma[2][2] == 1.0);
        let p = EulerPoint::new(1.0, 0.7, 2.0).unwrap();
        let mc = maurer_cartan_at(&p, DEFAULT_SIN_EXCLUSION).unwrap();
        assert!(mc.structure_residual < 1e-7);
        assert!((mc.volume - 1f64.sin()).abs() < 1e-15);
        assert!(maurer_cartan_at(&EulerPoint::new(0.0, 0.0, 0.0).unwrap(), 1e-3).is_err());
        assert!(EulerPoint::new(4.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn opposite_structure_sign_fails() {
        // the finite-difference test distinguishes the two conventions
        let m = sigma_components(1.0, 2.0);
        let wedge = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((wedge - 1f64.sin()).abs() < 1e-15);
        // dσ³ = −sin α dα∧dβ
        assert!((SIGMA_STRUCTURE_SIGN * wedge + 1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn isotropic_coefficients() {
        let m = build_coframe_metric(Isotropic::default(), 0.0, 2.0).unwrap();
        let c = m.coefficients(1.0).unwrap();
        assert!((c[0] - 0.125).abs() < 1e-15);
        for v in &c[1..] {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert_eq!(m.domain(), (0.0, 2.0));
    }

    #[test]
    fn positivity_domain() {
        let m = ah();
        assert_eq!(m.domain(), (-3.0, -0.5));
        let lit = build_coframe_metric(ClosedForm::literal(SeriesParams::default()), 0.5, 3.0);
        assert!(matches!(lit, Err(Error::EmptyDomain { .. })));
        let neg = build_coframe_metric(ConstantTriad([-1.0, 1.0, 1.0]), 0.0, 1.0);
        assert!(matches!(neg, Err(Error::EmptyDomain { .. })));
        assert!(matches!(m.coefficients(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn isotropic_connection_by_hand() {
        let m = build_coframe_metric(Isotropic::default(), 0.0, 2.0).unwrap();
        let t = 1.0;
        let c = solve_connection(&m, t).unwrap();
        assert!(c.torsion_residual < 1e-10);
        let f = (1.0 + t as f64).powf(-0.5);
        for (i, j, k) in CYCLIC {
            // ω_0i = ½σ^i, ω_jk = −½σ^i
            assert!((c.gamma[0][i][i] - 0.5 / f).abs() < 1e-10);
            assert!((c.gamma[j][k][i] + 0.5 / f).abs() < 1e-10);
            assert!((c.gamma[i][0][i] + 0.5 / f).abs() < 1e-10);
        }
        let r = curvature(&c);
        assert!(r.max_abs() < 1e-10, "isotropic metric is flat");
        assert!(first_bianchi_residual(&r) < 1e-8);
    }

    #[test]
    fn ah_pipeline() {
        let m = ah();
        let c = solve_connection(&m, -1.0).unwrap();
        assert!(c.torsion_residual < 1e-9);
        let r = curvature(&c);
        assert_eq!(r.antisymmetry_residual(), 0.0);
        assert!(first_bianchi_residual(&r) < 1e-8);
        assert!(second_bianchi_residual(&m, -1.0, 1e-4).unwrap() < 1e-7);
        let sd = sd_decompose(&c, &r);
        assert!(sd.duality_residual < 1e-10);
        assert!(sd.structure_residual_a < 1e-8 && sd.structure_residual_s < 1e-8);
        let asd = asd_residual(&m, -1.0).unwrap();
        assert!(asd.residual < 1e-7, "{asd:?}");
        assert!(asd.self_dual_max > 1e-2);
        assert!(asd.reduction_residual < 1e-9);
        assert!(asd.formula_residual < 1e-9);
        for s in [-0.7, -1.0, -2.0] {
            assert!(ricci(&m, s).unwrap().max_abs < 1e-6);
        }
    }

    #[test]
    fn discriminates_non_solutions() {
        let c = build_coframe_metric(ConstantTriad([1.0; 3]), 0.0, 1.0).unwrap();
        assert!(asd_residual(&c, 0.5).unwrap().residual > 1e-3);
        assert!(ricci(&c, 0.5).unwrap().max_abs > 1e-2);
        let p = build_coframe_metric(
            Perturbed::new(ClosedForm::atiyah_hitchin(SeriesParams::default()), 1e-2),
            -3.0,
            -0.5,
        )
        .unwrap();
        for t in [-3.0, -1.0, -0.5] {
            assert!(asd_residual(&p, t).unwrap().residual > 1e-4);
        }
    }

    #[test]
    fn isotropic_a_is_half_sigma() {
        let m = build_coframe_metric(Isotropic::default(), 0.0, 2.0).unwrap();
        let r = asd_residual(&m, 1.0).unwrap();
        assert!(r.residual < 1e-8);
        for i in 0..3 {
            assert!((r.a_sigma[i][i + 1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaling_covariance() {
        let base = ah();
        let c = 2.0;
        let sc = build_coframe_metric(
            Rescaled {
                inner: ClosedForm::atiyah_hitchin(SeriesParams::default()),
                c,
            },
            -1.5,
            -0.25,
        )
        .unwrap();
        let g0 = solve_connection(&base, -1.0).unwrap();
        let g1 = solve_connection(&sc, -0.5).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                for k in 0..4 {
                    let want = g0.gamma[a][b][k] / c.sqrt();
                    assert!((g1.gamma[a][b][k] - want).abs() < 1e-9 * want.abs().max(1.0));
                }
            }
        }
        assert!(g1.torsion_residual < 1e-9);
    }

    #[test]
    fn orientation_flip_swaps_halves() {
        let m = build_coframe_metric(
            TimeReversed(ClosedForm::atiyah_hitchin(SeriesParams::default())),
            0.5,
            3.0,
        )
        .unwrap();
        let c = solve_connection(&m, 1.0).unwrap();
        let sd = sd_decompose(&c, &curvature(&c));
        let s = max3(|i| sd.big_s[i].max_abs());
        let a = max3(|i| sd.big_a[i].max_abs());
        assert!(s < 1e-7 && a > 1e-2, "S {s:e} A {a:e}");
    }

    #[test]
    fn sweep_csv_header() {
        let m = ah();
        let row = sweep_row(&m, -1.0).unwrap();
        let csv = sweep_csv(&[row]);
        assert!(csv.starts_with("t,asd_residual,ricci_maxabs,f0sq,f1sq,f2sq,f3sq\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
