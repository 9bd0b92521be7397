//! Gauss–Legendre panels, endpoint-singular substitutions and compensated sums.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    s: f64,
    c: f64,
}

impl Neumaier {
    /// Adds one term.
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    /// Current total.
    #[inline]
    pub fn sum(&self) -> f64 {
        self.s + self.c
    }
}

/// Compensated sum of a sequence.
pub fn nsum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    it.into_iter().for_each(|x| acc.add(x));
    acc.sum()
}

/// An n-point Gauss–Legendre rule on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    /// Nodes in increasing order.
    pub nodes: Vec<f64>,
    /// Matching weights.
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// ∫_a^b f.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        h * nsum(self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(c + h * x)))
    }

    /// ∫_a^b f over `panels` equal panels.
    pub fn composite(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        nsum((0..panels).map(|i| self.integrate(&f, a + i as f64 * h, a + (i + 1) as f64 * h)))
    }

    /// ∫_a^b f for f ~ (t−a)^{−1/3} near a: t = a + u^{3/2} makes the integrand smooth.
    pub fn left_singular(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let ub = (b - a).powf(2.0 / 3.0);
        self.composite(|u| 1.5 * u.sqrt() * f(a + u * u.sqrt()), 0.0, ub, panels)
    }

    /// ∫_a^b f for f ~ (b−t)^{−1/3} near b.
    pub fn right_singular(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let ub = (b - a).powf(2.0 / 3.0);
        self.composite(|u| 1.5 * u.sqrt() * f(b - u * u.sqrt()), 0.0, ub, panels)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        let g = GaussLegendre::new(10);
        let v = g.integrate(|x| x.powi(19) + x.powi(18), -1.0, 1.0);
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_endpoint() {
        let g = GaussLegendre::new(16);
        let v = g.left_singular(|t| t.powf(-1.0 / 3.0), 0.0, 1.0, 2);
        assert!((v - 1.5).abs() < 1e-13);
        let v = g.right_singular(|t| (2.0 - t).powf(-1.0 / 3.0) + (2.0 - t).powf(1.0 / 3.0), 1.0, 2.0, 2);
        assert!((v - 2.25).abs() < 1e-13);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        assert_eq!(nsum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }
}
