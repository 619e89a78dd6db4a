//! Second-order multivariate jets.
//!
//! A [`Jet`] carries a value together with its exact gradient and Hessian with
//! respect to up to [`MAX_VARS`] independent variables. Arithmetic propagates
//! all three by the chain rule, so any expression built from jets yields exact
//! first and second derivatives (up to floating-point rounding).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest number of independent variables a jet can track.
pub const MAX_VARS: usize = 8;

/// Numeric type accepted by the generic evaluators ([`f64`] or [`Jet`]).
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Value, gradient and Hessian of a function of `n <= MAX_VARS` variables.
///
/// Constants carry `n = 0`; binary operations take the larger `n` of their
/// operands, so constants mix freely with variables.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    n: usize,
    v: f64,
    g: [f64; MAX_VARS],
    h: [[f64; MAX_VARS]; MAX_VARS],
}

impl Jet {
    pub fn constant(c: f64) -> Self {
        Jet {
            n: 0,
            v: c,
            g: [0.0; MAX_VARS],
            h: [[0.0; MAX_VARS]; MAX_VARS],
        }
    }

    /// The `index`-th coordinate function of `n` variables, evaluated at `at`.
    pub fn variable(n: usize, index: usize, at: f64) -> Self {
        assert!(n <= MAX_VARS, "jets support at most {MAX_VARS} variables");
        assert!(index < n);
        let mut j = Jet::constant(at);
        j.n = n;
        j.g[index] = 1.0;
        j
    }

    /// Coordinate functions x_0..x_{n-1} based at `point`.
    pub fn variables(point: &[f64]) -> Vec<Jet> {
        let n = point.len();
        (0..n).map(|i| Jet::variable(n, i, point[i])).collect()
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn grad(&self, i: usize) -> f64 {
        self.g[i]
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.h[i][j]
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.g[..self.n].to_vec()
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.v`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Jet {
        let n = self.n;
        let mut out = Jet::constant(f);
        out.n = n;
        for i in 0..n {
            out.g[i] = df * self.g[i];
            for j in 0..n {
                out.h[i][j] = df * self.h[i][j] + d2f * self.g[i] * self.g[j];
            }
        }
        out
    }

    pub fn recip(self) -> Jet {
        let v = self.v;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let n = self.n.max(rhs.n);
        let mut out = Jet::constant(self.v + rhs.v);
        out.n = n;
        for i in 0..n {
            out.g[i] = self.g[i] + rhs.g[i];
            for j in 0..n {
                out.h[i][j] = self.h[i][j] + rhs.h[i][j];
            }
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
        let mut out = self;
        out.v = -out.v;
        for i in 0..out.n {
            out.g[i] = -out.g[i];
            for j in 0..out.n {
                out.h[i][j] = -out.h[i][j];
            }
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let n = self.n.max(rhs.n);
        let (a, b) = (self, rhs);
        let mut out = Jet::constant(a.v * b.v);
        out.n = n;
        for i in 0..n {
            out.g[i] = a.v * b.g[i] + b.v * a.g[i];
            for j in 0..n {
                out.h[i][j] =
                    a.v * b.h[i][j] + b.v * a.h[i][j] + a.g[i] * b.g[j] + b.g[i] * a.g[j];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Scalar for Jet {
    fn from_f64(c: f64) -> Self {
        Jet::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }
    fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Jet::constant(1.0);
        }
        let v = self.v;
        let kf = k as f64;
        self.chain(
            v.powi(k),
            kf * v.powi(k - 1),
            kf * (kf - 1.0) * v.powi(k - 2),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_closed_form() {
        // f(x, y) = x^2 y at (2, 3)
        let v = Jet::variables(&[2.0, 3.0]);
        let f = v[0].powi(2) * v[1];
        assert_eq!(f.value(), 12.0);
        assert_eq!(f.grad(0), 12.0);
        assert_eq!(f.grad(1), 4.0);
        assert_eq!(f.hess(0, 0), 6.0);
        assert_eq!(f.hess(0, 1), 4.0);
        assert_eq!(f.hess(1, 1), 0.0);
    }

    #[test]
    fn trig_and_sqrt_second_derivatives() {
        let x = Jet::variable(1, 0, 0.7);
        let s = x.sin();
        assert!((s.hess(0, 0) + 0.7f64.sin()).abs() < 1e-15);
        let r = x.sqrt();
        let expected = -0.25 * 0.7f64.powf(-1.5);
        assert!((r.hess(0, 0) - expected).abs() < 1e-14);
        let q = Jet::constant(1.0) / x;
        assert!((q.hess(0, 0) - 2.0 / 0.7f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn constants_mix_with_variables() {
        let x = Jet::variable(3, 2, 1.5);
        let y = Jet::from_f64(2.0) * x + Jet::from_f64(1.0);
        assert_eq!(y.nvars(), 3);
        assert_eq!(y.grad(2), 2.0);
        assert_eq!(y.grad(0), 0.0);
    }
}
