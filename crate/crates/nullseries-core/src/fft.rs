//! Iterative radix-2 FFT. Twiddles are evaluated directly (no recurrence), so
//! round-off stays at O(ε log N).

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Precomputed plan for one size.
#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    tw: Vec<Complex64>,
}

impl Fft {
    /// Plan for size n (a power of two ≥ 2).
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Shape(format!("FFT size {n} is not a power of two ≥ 2")));
        }
        let tw = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Ok(Fft { n, tw })
    }

    /// Size of the plan.
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; plans have n ≥ 2.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// In place: x_k ← Σ_j x_j e^{−2πijk/n} (unnormalized).
    pub fn forward(&self, x: &mut [Complex64]) -> Result<()> {
        self.run(x, false)
    }

    /// In place: x_k ← Σ_j x_j e^{+2πijk/n} (unnormalized).
    pub fn inverse(&self, x: &mut [Complex64]) -> Result<()> {
        self.run(x, true)
    }

    fn run(&self, x: &mut [Complex64], inv: bool) -> Result<()> {
        let n = self.n;
        if x.len() != n {
            return Err(Error::Shape(format!("buffer of {} for FFT plan of {n}", x.len())));
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                x.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.tw[k * stride];
                    let w = if inv { w.conj() } else { w };
                    let u = x[start + k];
                    let v = x[start + k + half] * w;
                    x[start + k] = u + v;
                    x[start + k + half] = u - v;
                }
            }
            len <<= 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_dft() {
        let n = 64;
        let x: Vec<Complex64> = (0..n).map(|j| Complex64::new((j as f64 * 0.37).sin(), (j * j % 7) as f64)).collect();
        let mut y = x.clone();
        Fft::new(n).unwrap().forward(&mut y).unwrap();
        for k in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                let a = -2.0 * PI * (j * k) as f64 / n as f64;
                s += xj * Complex64::new(a.cos(), a.sin());
            }
            assert!((s - y[k]).norm() < 1e-11);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Fft::new(12), Err(Error::Shape(_))));
        let f = Fft::new(8).unwrap();
        assert!(f.forward(&mut [Complex64::new(0.0, 0.0); 4]).is_err());
    }
}
