//! Truncated Taylor arithmetic. A jet stores f(x₀ + h) = Σ c_k h^k for
//! k ≤ ORDER; derivatives are k!·c_k.

use core::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order carried.
pub const ORDER: usize = 8;
const LEN: usize = ORDER + 1;

/// Taylor coefficients up to [`ORDER`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet(pub [f64; LEN]);

impl Jet {
    /// The constant c.
    pub fn constant(c: f64) -> Self {
        let mut v = [0.0; LEN];
        v[0] = c;
        Jet(v)
    }

    /// The identity jet at x: x + h.
    pub fn var(x: f64) -> Self {
        let mut v = [0.0; LEN];
        v[0] = x;
        v[1] = 1.0;
        Jet(v)
    }

    /// Value.
    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// D-th derivative, D ≤ ORDER.
    pub fn derivative(&self, d: usize) -> f64 {
        let mut f = 1.0;
        for k in 2..=d {
            f *= k as f64;
        }
        self.0[d] * f
    }

    /// Multiplies by a scalar.
    pub fn scale(self, s: f64) -> Self {
        Jet(self.0.map(|c| c * s))
    }

    /// exp of a jet.
    pub fn exp(self) -> Self {
        let a = self.0;
        let mut e = [0.0; LEN];
        e[0] = a[0].exp();
        for k in 1..LEN {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * a[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    /// 1/f.
    pub fn recip(self) -> Self {
        Jet::constant(1.0) / self
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet(core::array::from_fn(|k| self.0[k] + o.0[k]))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet(core::array::from_fn(|k| self.0[k] - o.0[k]))
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
    fn mul(self, o: Jet) -> Jet {
        Jet(core::array::from_fn(|k| (0..=k).map(|j| self.0[j] * o.0[k - j]).sum()))
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        let mut q = [0.0; LEN];
        for k in 0..LEN {
            let mut s = a[k];
            for j in 1..=k {
                s -= b[j] * q[k - j];
            }
            q[k] = s / b[0];
        }
        Jet(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_linear() {
        let j = Jet::var(0.3).scale(2.0).exp();
        for d in 0..=ORDER {
            let want = 2f64.powi(d as i32) * 0.6f64.exp();
            assert!((j.derivative(d) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn reciprocal_derivatives() {
        // d^k/dx^k 1/x = (−1)^k k! / x^{k+1}
        let x = 1.7;
        let j = Jet::var(x).recip();
        let mut f = 1.0;
        for d in 0..=ORDER {
            if d > 0 {
                f *= d as f64;
            }
            let want = if d % 2 == 0 { 1.0 } else { -1.0 } * f / x.powi(d as i32 + 1);
            assert!((j.derivative(d) - want).abs() < 1e-12 * want.abs());
        }
    }
}
