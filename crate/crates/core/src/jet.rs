//! Second-order Taylor jets in one real variable.
//!
//! A [`Jet`] carries `f, f′, f″` at a point together with the number of
//! derivatives that are still meaningful. Arithmetic propagates the minimum
//! order of its operands and [`Jet::deriv`] lowers it by one; derivatives
//! beyond the order are NaN.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

pub const MAX_ORDER: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; 3],
    order: u8,
}

impl Jet {
    pub const ZERO: Jet = Jet {
        c: [0.0; 3],
        order: MAX_ORDER,
    };

    pub fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self {
            c: [v, d1, d2],
            order: MAX_ORDER,
        }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(v, 0.0, 0.0)
    }

    /// A jet known only to the given order; higher slots become NaN.
    pub fn with_order(v: f64, d1: f64, d2: f64, order: u8) -> Self {
        let mut c = [v, d1, d2];
        for x in c.iter_mut().skip(order.min(MAX_ORDER) as usize + 1) {
            *x = f64::NAN;
        }
        Self {
            c,
            order: order.min(MAX_ORDER),
        }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn d1(&self) -> f64 {
        self.c[1]
    }

    pub fn d2(&self) -> f64 {
        self.c[2]
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    /// The derivative as a jet of one lower order.
    pub fn deriv(&self) -> Jet {
        if self.order == 0 {
            return Jet {
                c: [f64::NAN; 3],
                order: 0,
            };
        }
        Jet::with_order(self.c[1], self.c[2], f64::NAN, self.order - 1)
    }

    pub fn recip(&self) -> Jet {
        let [g, g1, g2] = self.c;
        let r = 1.0 / g;
        self.lift([r, -g1 * r * r, 2.0 * g1 * g1 * r * r * r - g2 * r * r])
    }

    pub fn sqrt(&self) -> Jet {
        let [g, g1, g2] = self.c;
        let s = g.sqrt();
        let s1 = g1 / (2.0 * s);
        self.lift([s, s1, g2 / (2.0 * s) - g1 * s1 / (2.0 * g)])
    }

    pub fn ln(&self) -> Jet {
        let [g, g1, g2] = self.c;
        let l1 = g1 / g;
        self.lift([g.ln(), l1, g2 / g - l1 * l1])
    }

    pub fn abs(&self) -> Jet {
        if self.c[0] < 0.0 {
            -*self
        } else {
            *self
        }
    }

    /// True when every stored slot is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.c[..=self.order as usize].iter().all(|x| x.is_finite())
    }

    fn lift(&self, c: [f64; 3]) -> Jet {
        Jet::with_order(c[0], c[1], c[2], self.order)
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::with_order(
            self.c[0] + o.c[0],
            self.c[1] + o.c[1],
            self.c[2] + o.c[2],
            self.order.min(o.order),
        )
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            c: self.c.map(|x| -x),
            order: self.order,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let [a, a1, a2] = self.c;
        let [b, b1, b2] = o.c;
        Jet::with_order(
            a * b,
            a1 * b + a * b1,
            a2 * b + 2.0 * a1 * b1 + a * b2,
            self.order.min(o.order),
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        Jet {
            c: self.c.map(|x| x * s),
            order: self.order,
        }
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self = *self - o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jet_of(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64, f64) {
        let h = 1e-4;
        (
            f(x),
            (f(x + h) - f(x - h)) / (2.0 * h),
            (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        )
    }

    #[test]
    fn order_tracking() {
        let x = Jet::new(2.0, 1.0, 0.0);
        assert_eq!(x.deriv().order(), 1);
        assert_eq!(x.deriv().deriv().order(), 0);
        assert!(x.deriv().deriv().deriv().value().is_nan());
        let y = x * x.deriv();
        assert_eq!(y.order(), 1);
        assert!(y.d2().is_nan());
        assert!(y.is_finite());
    }

    proptest! {
        #[test]
        fn chain_rules_match_differences(x in 0.3f64..3.0) {
            // g(x) = x² + 1 as a jet at x
            let g = Jet::new(x * x + 1.0, 2.0 * x, 2.0);
            let cases: [(Jet, Box<dyn Fn(f64) -> f64>); 4] = [
                (g.sqrt(), Box::new(|x: f64| (x * x + 1.0).sqrt())),
                (g.ln(), Box::new(|x: f64| (x * x + 1.0).ln())),
                (g.recip(), Box::new(|x: f64| 1.0 / (x * x + 1.0))),
                (g * g / (g + Jet::constant(1.0)),
                 Box::new(|x: f64| (x * x + 1.0).powi(2) / (x * x + 2.0))),
            ];
            for (j, f) in cases.iter() {
                let (v, d1, d2) = jet_of(f, x);
                prop_assert!((j.value() - v).abs() < 1e-12 * v.abs().max(1.0));
                prop_assert!((j.d1() - d1).abs() < 1e-6 * d1.abs().max(1.0));
                prop_assert!((j.d2() - d2).abs() < 1e-4 * d2.abs().max(1.0));
            }
        }
    }
}
