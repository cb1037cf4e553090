//! Adaptive Dormand-Prince 5(4) integrator with continuous (dense) output.
//!
//! The stepper works on fixed-size real state vectors. Every accepted step
//! keeps the five Hairer dense-output coefficient vectors so the solution can
//! be queried anywhere inside the integrated range at fourth-order accuracy.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Maximum number of attempted steps before giving up.
    pub max_steps: usize,
    /// Optional cap on |h|.
    pub max_step: Option<f64>,
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 1_000_000,
            max_step: None,
        }
    }
}

/// Decision taken by a guard after every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    Continue,
    /// Stop integrating; the last accepted step is kept.
    Stop(String),
    /// Abort with an error.
    Fail(Error),
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> [f64; N] {
        self.rcont[0]
    }

    pub fn end(&self) -> [f64; N] {
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.rcont[0][i] + self.rcont[1][i];
        }
        y
    }

    /// Dense output at `t`, which should lie inside the step.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// How an integration run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    Stopped { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone)]
pub struct Integration<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
    pub stats: Stats,
    pub outcome: Outcome,
    pub t_start: f64,
    pub y_start: [f64; N],
}

impl<const N: usize> Integration<N> {
    pub fn t_last(&self) -> f64 {
        self.steps.last().map_or(self.t_start, |s| s.t1())
    }

    pub fn y_last(&self) -> [f64; N] {
        self.steps.last().map_or(self.y_start, |s| s.end())
    }

    /// Locates the step containing `t` (steps are monotone in either direction).
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let first = self.steps.first()?;
        let forward = first.h > 0.0;
        let (lo, hi) = if forward {
            (self.t_start, self.t_last())
        } else {
            (self.t_last(), self.t_start)
        };
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if t < lo - slack || t > hi + slack {
            return None;
        }
        let idx = self.steps.partition_point(|s| {
            if forward {
                s.t1() < t
            } else {
                s.t1() > t
            }
        });
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        Some(step.eval(t))
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn rms_norm<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(x, s)| (x / s) * (x / s)).sum();
    (s / N as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`.
///
/// A right-hand side error inside a trial step is treated as a rejected step
/// and the step is shrunk; if the step collapses the run stops with the
/// error message as the reason. `guard` inspects each accepted state.
pub fn integrate<const N: usize, F, G>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: Tolerances,
    mut guard: G,
) -> Result<Integration<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    G: FnMut(f64, &[f64; N]) -> Guard,
{
    if !(tol.rtol > 0.0 && tol.atol > 0.0) {
        return Err(Error::Parameter("tolerances must be positive".into()));
    }
    if t_end == t0 {
        return Err(Error::Parameter("t_end must differ from the initial time".into()));
    }
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut stats = Stats::default();
    let mut steps = Vec::new();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    stats.rhs_evals += 1;

    let scale0: [f64; N] = std::array::from_fn(|i| tol.atol + tol.rtol * y[i].abs());
    let d0 = rms_norm(&y, &scale0);
    let d1 = rms_norm(&k1, &scale0);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(span).min(tol.max_step.unwrap_or(f64::INFINITY)) * dir;

    let h_floor = |t: f64| 1e-14 * t.abs().max(1.0);
    let mut last_reject = false;

    loop {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Ok(Integration {
                steps,
                stats,
                outcome: Outcome::Stopped {
                    t,
                    reason: format!("step budget of {} exhausted", tol.max_steps),
                },
                t_start: t0,
                y_start: y0,
            });
        }
        let remaining = t_end - t;
        if remaining * dir <= h_floor(t) {
            break;
        }
        if (h.abs()) > remaining.abs() {
            h = remaining;
        }
        if h.abs() < h_floor(t) {
            return Ok(Integration {
                steps,
                stats,
                outcome: Outcome::Stopped {
                    t,
                    reason: "step size underflow".into(),
                },
                t_start: t0,
                y_start: y0,
            });
        }

        let trial = (|| -> Result<_> {
            let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(
                t + C4 * h,
                &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            )?;
            let k5 = f(
                t + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = f(
                t + h,
                &axpy(
                    &y,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            )?;
            let y1 = axpy(
                &y,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = f(t + h, &y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        stats.rhs_evals += 6;

        let (_k2, k3, k4, k5, k6, k7, y1) = match trial {
            Ok(v) => v,
            Err(_) => {
                stats.rejected += 1;
                h *= 0.25;
                last_reject = true;
                continue;
            }
        };

        let mut err = [0.0; N];
        let mut scale = [0.0; N];
        for i in 0..N {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            scale[i] = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
        }
        let err_norm = rms_norm(&err, &scale);
        if !err_norm.is_finite() {
            stats.rejected += 1;
            h *= 0.25;
            last_reject = true;
            continue;
        }

        if err_norm <= 1.0 {
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y1[i] - y[i];
                let bspl = h * k1[i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            steps.push(DenseStep { t0: t, h, rcont });
            stats.accepted += 1;
            t += h;
            y = y1;
            k1 = k7;

            match guard(t, &y) {
                Guard::Continue => {}
                Guard::Stop(reason) => {
                    return Ok(Integration {
                        steps,
                        stats,
                        outcome: Outcome::Stopped { t, reason },
                        t_start: t0,
                        y_start: y0,
                    })
                }
                Guard::Fail(e) => return Err(e),
            }

            let mut fac = 0.9 * err_norm.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_reject {
                fac = fac.min(1.0);
            }
            last_reject = false;
            h *= fac;
            if let Some(m) = tol.max_step {
                if h.abs() > m {
                    h = m * dir;
                }
            }
        } else {
            stats.rejected += 1;
            let fac = (0.9 * err_norm.powf(-0.2)).max(0.2);
            h *= fac;
            last_reject = true;
        }
    }

    Ok(Integration {
        steps,
        stats,
        outcome: Outcome::Completed,
        t_start: t0,
        y_start: y0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_dense_output() {
        let run = integrate(
            |_, y: &[f64; 1]| Ok([-y[0]]),
            0.0,
            [1.0],
            3.0,
            Tolerances::uniform(1e-10),
            |_, _| Guard::Continue,
        )
        .unwrap();
        assert_eq!(run.outcome, Outcome::Completed);
        assert!((run.y_last()[0] - (-3.0f64).exp()).abs() < 1e-9);
        for i in 0..=30 {
            let t = 0.1 * i as f64;
            let y = run.eval(t).unwrap()[0];
            assert!((y - (-t).exp()).abs() < 1e-9, "t={t} y={y}");
        }
        assert!(run.eval(3.5).is_none());
    }

    #[test]
    fn backward_integration() {
        let run = integrate(
            |t, _: &[f64; 1]| Ok([t.cos()]),
            0.0,
            [0.0],
            -2.0,
            Tolerances::uniform(1e-11),
            |_, _| Guard::Continue,
        )
        .unwrap();
        assert!((run.y_last()[0] - (-2.0f64).sin()).abs() < 1e-10);
        assert!((run.eval(-1.3).unwrap()[0] - (-1.3f64).sin()).abs() < 1e-9);
    }

    #[test]
    fn guard_stops_run() {
        let run = integrate(
            |_, _: &[f64; 1]| Ok([1.0]),
            0.0,
            [0.0],
            10.0,
            Tolerances {
                max_step: Some(0.5),
                ..Tolerances::uniform(1e-8)
            },
            |_, y| {
                if y[0] > 2.0 {
                    Guard::Stop("crossed".into())
                } else {
                    Guard::Continue
                }
            },
        )
        .unwrap();
        assert!(matches!(run.outcome, Outcome::Stopped { .. }));
        assert!(run.t_last() > 2.0 && run.t_last() <= 2.5 + 1e-12);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let r = integrate(
            |_, y: &[f64; 1]| Ok(*y),
            0.0,
            [1.0],
            1.0,
            Tolerances::uniform(0.0),
            |_, _| Guard::Continue,
        );
        assert!(matches!(r, Err(Error::Parameter(_))));
    }
}
