//! Exterior algebra over a four-dimensional orthonormal coframe `θ⁰..θ³`
//! whose coefficients are jets in the single variable t.
//!
//! A [`Form`] stores one coefficient per basis monomial `θ^I`, indexed by the
//! bitmask of `I` (bit a set ⇔ θ^a present, factors in increasing order).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::jet::Jet;

pub const DIM: usize = 4;
const MASKS: usize = 1 << DIM;

/// Sign of `θ^I ∧ θ^J` relative to `θ^{I∪J}`; zero when I and J overlap.
pub fn wedge_sign(i: usize, j: usize) -> f64 {
    if i & j != 0 {
        return 0.0;
    }
    let mut swaps = 0;
    for b in 0..DIM {
        if j & (1 << b) != 0 {
            // factors of I above b must move past θ^b
            swaps += (i >> (b + 1)).count_ones();
        }
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn degree(mask: usize) -> u32 {
    mask.count_ones()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Form {
    c: [Jet; MASKS],
}

impl Default for Form {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Form {
    pub const ZERO: Form = Form {
        c: [Jet::ZERO; MASKS],
    };

    pub fn scalar(s: Jet) -> Self {
        let mut f = Self::ZERO;
        f.c[0] = s;
        f
    }

    /// `θ^a`.
    pub fn basis(a: usize) -> Self {
        let mut f = Self::ZERO;
        f.c[1 << a] = Jet::constant(1.0);
        f
    }

    /// `Σ_a c_a θ^a`.
    pub fn one(c: [Jet; DIM]) -> Self {
        let mut f = Self::ZERO;
        for (a, v) in c.into_iter().enumerate() {
            f.c[1 << a] = v;
        }
        f
    }

    /// `s · θ^a ∧ θ^b` for a ≠ b in either order.
    pub fn two(a: usize, b: usize, s: Jet) -> Self {
        let mut f = Self::ZERO;
        if a != b {
            let sign = wedge_sign(1 << a, 1 << b);
            f.c[(1 << a) | (1 << b)] = s * sign;
        }
        f
    }

    pub fn get(&self, mask: usize) -> Jet {
        self.c[mask]
    }

    pub fn set(&mut self, mask: usize, v: Jet) {
        self.c[mask] = v;
    }

    /// Coefficient of θ^a.
    pub fn c1(&self, a: usize) -> Jet {
        self.c[1 << a]
    }

    /// Antisymmetric component `F_ab` in `F = ½ F_ab θ^a∧θ^b`.
    pub fn c2(&self, a: usize, b: usize) -> Jet {
        if a == b {
            return Jet::ZERO;
        }
        self.c[(1 << a) | (1 << b)] * wedge_sign(1 << a, 1 << b)
    }

    pub fn scale(&self, s: Jet) -> Form {
        Form {
            c: self.c.map(|x| x * s),
        }
    }

    pub fn wedge(&self, o: &Form) -> Form {
        let mut out = Form::ZERO;
        for i in 0..MASKS {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..MASKS {
                let s = wedge_sign(i, j);
                if s != 0.0 {
                    out.c[i | j] += self.c[i] * o.c[j] * s;
                }
            }
        }
        out
    }

    /// Homogeneous part of degree k.
    pub fn part(&self, k: u32) -> Form {
        let mut out = Form::ZERO;
        for m in 0..MASKS {
            if degree(m) == k {
                out.c[m] = self.c[m];
            }
        }
        out
    }

    /// Hodge star for the Euclidean metric with `θ⁰∧θ¹∧θ²∧θ³` positive.
    pub fn hodge(&self) -> Form {
        let full = MASKS - 1;
        let mut out = Form::ZERO;
        for m in 0..MASKS {
            let comp = full ^ m;
            out.c[comp] += self.c[m] * wedge_sign(m, comp);
        }
        out
    }

    /// Largest |coefficient value| over all monomials.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|j| j.value().abs()).fold(0.0, f64::max)
    }

    pub fn values(&self) -> [f64; MASKS] {
        self.c.map(|j| j.value())
    }

    pub fn map(&self, f: impl Fn(Jet) -> Jet) -> Form {
        Form { c: self.c.map(f) }
    }
}

impl Add for Form {
    type Output = Form;
    fn add(self, o: Form) -> Form {
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(o.c) {
            *x += y;
        }
        Form { c }
    }
}

impl AddAssign for Form {
    fn add_assign(&mut self, o: Form) {
        *self = *self + o;
    }
}

impl Sub for Form {
    type Output = Form;
    fn sub(self, o: Form) -> Form {
        self + (-o)
    }
}

impl Neg for Form {
    type Output = Form;
    fn neg(self) -> Form {
        Form {
            c: self.c.map(|x| -x),
        }
    }
}

impl Mul<f64> for Form {
    type Output = Form;
    fn mul(self, s: f64) -> Form {
        Form {
            c: self.c.map(|x| x * s),
        }
    }
}

/// Exterior derivative on a coframe with `θ⁰ = f₀ dt` and prescribed `dθ^a`.
#[derive(Debug, Clone)]
pub struct Coframe {
    f0: Jet,
    dbasis: [Form; MASKS],
}

impl Coframe {
    /// `dtheta[a]` is the 2-form `dθ^a`; coefficients depend on t only.
    pub fn new(f0: Jet, dtheta: [Form; DIM]) -> Self {
        let mut dbasis = [Form::ZERO; MASKS];
        for m in 1..MASKS {
            let a = m.trailing_zeros() as usize;
            let rest = m & !(1 << a);
            // d(θ^a ∧ θ^rest) = dθ^a ∧ θ^rest − θ^a ∧ dθ^rest
            let mut tail = Form::ZERO;
            tail.c[rest] = Jet::constant(1.0);
            dbasis[m] = dtheta[a].wedge(&tail) - Form::basis(a).wedge(&dbasis[rest]);
        }
        Self { f0, dbasis }
    }

    pub fn dtheta(&self, a: usize) -> &Form {
        &self.dbasis[1 << a]
    }

    /// `d(f)` for a function of t: `(f′/f₀) θ⁰`.
    pub fn d_scalar(&self, f: Jet) -> Form {
        let mut out = Form::ZERO;
        out.c[1] = f.deriv() / self.f0;
        out
    }

    pub fn d(&self, form: &Form) -> Form {
        let mut out = Form::ZERO;
        for m in 0..MASKS {
            let c = form.c[m];
            if c.is_zero() {
                continue;
            }
            if m & 1 == 0 {
                out.c[m | 1] += c.deriv() / self.f0;
            }
            if m != 0 {
                out += self.dbasis[m].scale(c);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_signs() {
        assert_eq!(wedge_sign(0b0001, 0b0010), 1.0);
        assert_eq!(wedge_sign(0b0010, 0b0001), -1.0);
        assert_eq!(wedge_sign(0b0011, 0b0100), 1.0);
        assert_eq!(wedge_sign(0b0100, 0b0011), 1.0);
        assert_eq!(wedge_sign(0b0010, 0b0101), -1.0);
        assert_eq!(wedge_sign(0b0011, 0b0001), 0.0);
    }

    #[test]
    fn wedge_is_graded_commutative() {
        let a = Form::one([1.0, 2.0, -1.0, 0.5].map(Jet::constant));
        let b = Form::one([0.3, -0.7, 1.1, 2.0].map(Jet::constant));
        let ab = a.wedge(&b);
        let ba = b.wedge(&a);
        assert!((ab + ba).max_abs() < 1e-15);
        assert!(a.wedge(&a).max_abs() < 1e-15);
        assert_eq!(Form::two(2, 1, Jet::constant(1.0)).c2(1, 2).value(), -1.0);
    }

    #[test]
    fn hodge_squares_to_sign() {
        // on 2-forms in four Euclidean dimensions ⋆⋆ = +1
        let f = Form::two(0, 1, Jet::constant(1.0)) + Form::two(1, 3, Jet::constant(2.0));
        assert!((f.hodge().hodge() - f).max_abs() < 1e-15);
        let s = Form::two(0, 1, Jet::constant(1.0)).hodge();
        assert_eq!(s.c2(2, 3).value(), 1.0);
    }

    #[test]
    fn d_squared_vanishes_on_flat_coframe() {
        // flat coframe: θ⁰ = dt, constant θ^i; d² f = 0 for f(t)
        let cf = Coframe::new(Jet::constant(1.0), [Form::ZERO; DIM]);
        let f = Form::scalar(Jet::new(1.0, 2.0, 3.0));
        let df = cf.d(&f);
        assert_eq!(df.c1(0).value(), 2.0);
        assert!(cf.d(&df).max_abs() < 1e-15);
    }
}
