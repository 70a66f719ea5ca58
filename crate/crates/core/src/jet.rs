//! Truncated Taylor jets for exact derivatives of smooth profiles.
//!
//! A [`Jet`] stores `f(x0), f'(x0)/1!, ..., f^(D)(x0)/D!`. Arithmetic on jets
//! propagates all derivatives at once, which is how the cutoff profiles and
//! the conjugate-operator coefficients get their analytic derivatives.

use std::ops::{Add, Mul, Neg, Sub};

/// Highest derivative order carried by a jet.
pub const JET_ORDER: usize = 8;
const LEN: usize = JET_ORDER + 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = v;
        Jet { c }
    }

    /// The identity jet `x0 + t`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = x0;
        c[1] = 1.0;
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The `j`-th derivative at the expansion point.
    pub fn derivative(&self, j: usize) -> f64 {
        self.c[j] * factorial(j)
    }

    pub fn scale(self, s: f64) -> Self {
        let mut out = self;
        out.c.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn offset(self, s: f64) -> Self {
        let mut out = self;
        out.c[0] += s;
        out
    }

    pub fn recip(self) -> Self {
        let mut out = [0.0; LEN];
        out[0] = 1.0 / self.c[0];
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * out[k - j];
            }
            out[k] = -acc / self.c[0];
        }
        Jet { c: out }
    }

    pub fn exp(self) -> Self {
        let mut out = [0.0; LEN];
        out[0] = self.c[0].exp();
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * out[k - j];
            }
            out[k] = acc / k as f64;
        }
        Jet { c: out }
    }

    pub fn div(self, rhs: Jet) -> Self {
        self * rhs.recip()
    }

    pub fn square(self) -> Self {
        self * self
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut out = self;
        for (a, b) in out.c.iter_mut().zip(rhs.c.iter()) {
            *a += b;
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = [0.0; LEN];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate().take(LEN - i) {
                out[i + j] += a * b;
            }
        }
        Jet { c: out }
    }
}

pub fn factorial(j: usize) -> f64 {
    (1..=j).fold(1.0, |acc, v| acc * v as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_variable_matches_series() {
        let e = Jet::variable(0.3).exp();
        for j in 0..=JET_ORDER {
            assert!((e.derivative(j) - 0.3f64.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn recip_derivatives() {
        // d^j/dx^j 1/x = (-1)^j j! / x^{j+1}
        let x = 1.7;
        let r = Jet::variable(x).recip();
        for j in 0..=JET_ORDER {
            let exact = (-1f64).powi(j as i32) * factorial(j) / x.powi(j as i32 + 1);
            assert!((r.derivative(j) - exact).abs() < 1e-10 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn product_rule() {
        let x = Jet::variable(2.0);
        let p = x * x * x;
        assert_eq!(p.derivative(1), 12.0);
        assert_eq!(p.derivative(2), 12.0);
        assert_eq!(p.derivative(3), 6.0);
        assert_eq!(p.derivative(4), 0.0);
    }
}
