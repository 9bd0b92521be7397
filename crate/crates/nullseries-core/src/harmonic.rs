//! Uniform circle grids, two-sided spectra, harmonic conjugation and Poisson
//! evaluation inside the disk.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cantor::Target;
use crate::fft::Fft;
use crate::profile::ProfileFamily;
use crate::quad::Neumaier;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Record of how singular samples were replaced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipInfo {
    /// Human-readable rule.
    pub rule: String,
    /// Estimated singular mass lost by clipping, Σ over tags of the local
    /// x^{−1/3} mass within h/2.
    pub mass_bound: f64,
}

/// Samples at t_j = 2πj/N.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    /// Samples (real functions carry zero imaginary parts).
    pub values: Vec<Complex64>,
    /// Indices whose sample was clipped.
    pub tags: Vec<usize>,
    /// Clip rule, when any sample was produced near a singularity.
    pub clip: Option<ClipInfo>,
}

impl GridFunction {
    /// Samples f at the N grid points.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_pow2(n)?;
        let h = 2.0 * PI / n as f64;
        Ok(GridFunction { values: (0..n).map(|j| f(j as f64 * h)).collect(), tags: Vec::new(), clip: None })
    }

    /// Samples a real function.
    pub fn from_real(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(n, |t| Complex64::new(f(t), 0.0))
    }

    /// N.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when there are no samples.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid point t_j.
    pub fn t(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len() as f64
    }

    /// Real parts.
    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// (1/N)Σ f_j, the grid mean.
    pub fn mean(&self) -> Complex64 {
        let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
        for v in &self.values {
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.sum(), im.sum()) / self.len() as f64
    }
}

/// Coefficients c(n), −N/2 < n ≤ N/2, stored in FFT order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSeries {
    /// c at index n mod N.
    pub coeffs: Vec<Complex64>,
    /// Free-form description of the source (function, depth).
    pub origin: String,
}

impl SpectralSeries {
    /// Grid size N.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// True for an empty spectrum.
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest representable frequency N/2.
    pub fn nyquist(&self) -> i64 {
        (self.len() / 2) as i64
    }

    /// c(n); zero outside −N/2 < n ≤ N/2.
    pub fn get(&self, n: i64) -> Complex64 {
        let nn = self.len() as i64;
        if n > nn / 2 || n <= -nn / 2 {
            return ZERO;
        }
        self.coeffs[n.rem_euclid(nn) as usize]
    }

    /// Frequency of storage index j.
    pub fn freq(&self, j: usize) -> i64 {
        let n = self.len();
        if j <= n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// A spectrum of size N from explicit coefficients.
    pub fn from_pairs(n: usize, pairs: &[(i64, Complex64)], origin: &str) -> Result<Self> {
        check_pow2(n)?;
        let mut coeffs = alloc::vec![ZERO; n];
        for &(k, c) in pairs {
            if k > (n / 2) as i64 || k <= -((n / 2) as i64) {
                return Err(Error::Shape(format!("frequency {k} outside a size-{n} spectrum")));
            }
            coeffs[k.rem_euclid(n as i64) as usize] += c;
        }
        Ok(SpectralSeries { coeffs, origin: origin.into() })
    }
}

fn check_pow2(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Shape(format!("grid size {n} is not a power of two ≥ 2")));
    }
    Ok(())
}

/// c(n) = (1/N)Σ_j f(t_j)e^{−int_j}, the grid version of (1/2π)∫f e^{−int}.
pub fn analyze(g: &GridFunction) -> Result<SpectralSeries> {
    let n = g.len();
    check_pow2(n)?;
    let mut v = g.values.clone();
    Fft::new(n)?.forward(&mut v)?;
    let s = 1.0 / n as f64;
    v.iter_mut().for_each(|c| *c *= s);
    Ok(SpectralSeries { coeffs: v, origin: String::new() })
}

/// Samples Σ c(n)e^{int} on N points; N may exceed the spectrum size.
pub fn synthesize(s: &SpectralSeries, n: usize) -> Result<GridFunction> {
    check_pow2(n)?;
    if n < s.len() {
        return Err(Error::Shape(format!("cannot synthesize a size-{} spectrum on {n} points", s.len())));
    }
    let mut v = alloc::vec![ZERO; n];
    let half = s.nyquist();
    for (j, c) in s.coeffs.iter().enumerate() {
        let k = s.freq(j);
        if n > s.len() && k == half {
            // split the Nyquist term symmetrically so real spectra stay real
            v[k as usize] += c * 0.5;
            v[n - k as usize] += c * 0.5;
        } else {
            v[k.rem_euclid(n as i64) as usize] += c;
        }
    }
    Fft::new(n)?.inverse(&mut v)?;
    Ok(GridFunction { values: v, tags: Vec::new(), clip: None })
}

/// −i·sign(n), with DC and Nyquist sent to zero.
#[inline]
pub fn conj_multiplier(n: i64, nyquist: i64) -> Complex64 {
    if n == 0 || n == nyquist {
        ZERO
    } else if n > 0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

/// Harmonic conjugate of a real grid function, through the spectral multiplier.
pub fn conjugate(g: &GridFunction) -> Result<GridFunction> {
    let mut s = analyze(g)?;
    let ny = s.nyquist();
    for j in 0..s.len() {
        let k = s.freq(j);
        s.coeffs[j] *= conj_multiplier(k, ny);
    }
    let mut out = synthesize(&s, g.len())?;
    out.values.iter_mut().for_each(|v| v.im = 0.0);
    out.tags = g.tags.clone();
    out.clip = g.clip.clone();
    Ok(out)
}

/// Disk evaluation modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMode {
    /// Σ c(n) r^{|n|} e^{inθ}.
    HarmonicExtension,
    /// Σ (−i sign n) c(n) r^{|n|} e^{inθ}.
    Conjugate,
    /// c(0) + 2Σ_{n>0} c(n) z^n (the Nyquist term counted once).
    AnalyticCompletion,
}

fn mode_weight(mode: PoissonMode, k: i64, ny: i64) -> Complex64 {
    match mode {
        PoissonMode::HarmonicExtension => {
            if k == ny {
                Complex64::new(0.5, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        }
        PoissonMode::Conjugate => conj_multiplier(k, ny),
        PoissonMode::AnalyticCompletion => {
            if k == 0 || k == ny {
                Complex64::new(1.0, 0.0)
            } else if k > 0 {
                Complex64::new(2.0, 0.0)
            } else {
                ZERO
            }
        }
    }
}

/// Evaluates the extension of a spectrum at |z| < 1.
pub fn poisson_eval(s: &SpectralSeries, z: Complex64, mode: PoissonMode) -> Result<Complex64> {
    let r = z.norm();
    if !(r < 1.0) {
        return Err(Error::Domain(format!("|z| = {r} is not inside the unit disk")));
    }
    let ny = s.nyquist();
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    let zc = z.conj();
    // powers by repeated multiplication, separately for n > 0 and n < 0
    let mut zp = Complex64::new(1.0, 0.0);
    let mut zq = Complex64::new(1.0, 0.0);
    let mut add = |v: Complex64| {
        re.add(v.re);
        im.add(v.im);
    };
    add(s.get(0) * mode_weight(mode, 0, ny));
    for k in 1..=ny {
        zp *= z;
        zq *= zc;
        if zp.norm_sqr() == 0.0 && zq.norm_sqr() == 0.0 {
            break;
        }
        add(s.get(k) * mode_weight(mode, k, ny) * zp);
        if k == ny {
            if mode == PoissonMode::HarmonicExtension {
                add(s.get(k) * Complex64::new(0.5, 0.0) * zq);
            }
        } else {
            add(s.get(-k) * mode_weight(mode, -k, ny) * zq);
        }
    }
    Ok(Complex64::new(re.sum(), im.sum()))
}

/// Values of the extension at z_j = r·e^{2πij/Q}, j < Q, through one FFT.
/// Q must be a power of two at least the spectrum size; r ≤ 1.
pub fn eval_on_circle(s: &SpectralSeries, r: f64, q: usize, mode: PoissonMode) -> Result<Vec<Complex64>> {
    check_pow2(q)?;
    if q < s.len() {
        return Err(Error::Shape(format!("{q} circle nodes for a size-{} spectrum", s.len())));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("circle radius {r} outside (0, 1]")));
    }
    let ny = s.nyquist();
    let mut v = alloc::vec![ZERO; q];
    for j in 0..s.len() {
        let k = s.freq(j);
        let w = mode_weight(mode, k, ny) * s.coeffs[j] * r.powi(k.unsigned_abs() as i32);
        v[k.rem_euclid(q as i64) as usize] += w;
        if k == ny && mode == PoissonMode::HarmonicExtension {
            v[(-k).rem_euclid(q as i64) as usize] += w;
        }
    }
    Fft::new(q)?.inverse(&mut v)?;
    Ok(v)
}

/// |‖g‖²/N − Σ|c(n)|²| relative to ‖g‖²/N: the grid Parseval identity.
pub fn parseval_defect(g: &GridFunction) -> Result<f64> {
    let s = analyze(g)?;
    let mut a = Neumaier::default();
    let mut b = Neumaier::default();
    g.values.iter().for_each(|v| a.add(v.norm_sqr()));
    s.coeffs.iter().for_each(|c| b.add(c.norm_sqr()));
    let lhs = a.sum() / g.len() as f64;
    Ok(((lhs - b.sum()) / lhs).abs())
}

/// One probe/level row of the convergence check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    /// Probe point.
    pub z: Complex64,
    /// Level n (compares n+1 against n).
    pub n: usize,
    /// d(z, K_n).
    pub dist: f64,
    /// |G_{n+1}(z) − G_n(z)|.
    pub diff: f64,
    /// |G̃_{n+1}(z) − G̃_n(z)|.
    pub conj_diff: f64,
    /// diff·2^n·d.
    pub constant: f64,
    /// conj_diff·2^n·d.
    pub conj_constant: f64,
}

/// Result of the G_n convergence check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    /// All rows.
    pub rows: Vec<CauchyRow>,
    /// Probes dropped for lying closer than the threshold to K_n.
    pub excluded: Vec<Complex64>,
    /// Fitted C for |G_{n+1} − G_n| ≤ C/(2^n d).
    pub c_fit: f64,
    /// Fitted C for the conjugates.
    pub c_fit_conj: f64,
    /// The per-level maximum of the constant stays within [`CAUCHY_STABILITY`]
    /// of its first value at every later level.
    pub bounded: bool,
}

/// Allowed growth of the per-level fitted constant.
pub const CAUCHY_STABILITY: f64 = 4.0;

/// Distance from z in the disk to the arcs K_n on the circle.
pub fn disk_distance(p: &ProfileFamily, z: Complex64, n: usize) -> Result<f64> {
    let th = z.arg().rem_euclid(2.0 * PI);
    let d = p.set.distance(th, Target::K(n))?;
    let r = z.norm();
    Ok(((1.0 - r) * (1.0 - r) + 4.0 * r * (d / 2.0).sin().powi(2)).sqrt())
}

/// Checks |G_{n+1}(z) − G_n(z)| ≤ C/(2^n d(z, K_n)) and the same for the
/// conjugates at probe points, levels 0..n_max−1. The differences are the
/// Poisson and conjugate-Poisson integrals of g_{n+1} − g_n over K_n, by
/// piecewise quadrature.
pub fn cauchy_convergence_check(p: &ProfileFamily, probes: &[Complex64], min_dist: f64) -> Result<CauchyReport> {
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    let top = p.n_max();
    for &z in probes {
        if z.norm() >= 1.0 {
            return Err(Error::Domain(format!("probe {z} is not inside the disk")));
        }
        if disk_distance(p, z, top.saturating_sub(1))? < min_dist {
            excluded.push(z);
            continue;
        }
        for n in 0..top {
            let d = disk_distance(p, z, n)?;
            let v = p.level_difference_weighted(n, |t| {
                let e = Complex64::from_polar(1.0, t);
                (e + z) / (e - z)
            })? / (2.0 * PI);
            let scale = (1u64 << n) as f64 * d;
            rows.push(CauchyRow {
                z,
                n,
                dist: d,
                diff: v.re.abs(),
                conj_diff: v.im.abs(),
                constant: v.re.abs() * scale,
                conj_constant: v.im.abs() * scale,
            });
        }
    }
    let c_fit = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    let c_fit_conj = rows.iter().map(|r| r.conj_constant).fold(0.0, f64::max);
    let per_level: Vec<f64> = (0..top)
        .map(|n| rows.iter().filter(|r| r.n == n).map(|r| r.constant.max(r.conj_constant)).fold(0.0, f64::max))
        .collect();
    let first = per_level.iter().copied().find(|c| *c > 0.0).unwrap_or(0.0);
    let bounded = per_level.iter().all(|c| *c <= CAUCHY_STABILITY * first.max(f64::MIN_POSITIVE));
    Ok(CauchyReport { rows, excluded, c_fit, c_fit_conj, bounded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_grid(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_real(n, f).unwrap()
    }

    #[test]
    fn analyze_examples() {
        let s = analyze(&real_grid(16, |_| 1.0)).unwrap();
        assert!((s.get(0) - 1.0).norm() < 1e-15);
        assert!((1..16).all(|j| s.coeffs[j].norm() < 1e-15));
        let g = GridFunction::from_fn(32, |t| Complex64::from_polar(1.0, 5.0 * t)).unwrap();
        let s = analyze(&g).unwrap();
        assert!((s.get(5) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn conjugate_pairs() {
        let c = conjugate(&real_grid(64, |t| (3.0 * t).cos())).unwrap();
        assert!(c.values.iter().enumerate().all(|(j, v)| (v.re - (3.0 * c.t(j)).sin()).abs() < 1e-10));
        let c = conjugate(&real_grid(64, |t| t.sin())).unwrap();
        assert!(c.values.iter().enumerate().all(|(j, v)| (v.re + c.t(j).cos()).abs() < 1e-10));
        let c = conjugate(&real_grid(64, |_| 2.5)).unwrap();
        assert!(c.values.iter().all(|v| v.re.abs() < 1e-14));
    }

    #[test]
    fn poisson_examples() {
        let g = real_grid(64, |t| 0.3 + t.cos() + (2.0 * t).sin());
        let s = analyze(&g).unwrap();
        let v = poisson_eval(&s, Complex64::new(0.0, 0.0), PoissonMode::HarmonicExtension).unwrap();
        assert!((v.re - 0.3).abs() < 1e-14);
        let e = SpectralSeries::from_pairs(16, &[(3, Complex64::new(1.0, 0.0))], "z^3").unwrap();
        let z = Complex64::new(0.3, -0.5);
        let v = poisson_eval(&e, z, PoissonMode::AnalyticCompletion).unwrap();
        assert!((v - 2.0 * z * z * z).norm() < 1e-15);
        assert!(poisson_eval(&s, Complex64::new(1.0, 0.0), PoissonMode::Conjugate).is_err());
    }

    #[test]
    fn circle_matches_pointwise() {
        let g = real_grid(32, |t| (t.cos() * 2.0).exp());
        let s = analyze(&g).unwrap();
        for mode in [PoissonMode::HarmonicExtension, PoissonMode::Conjugate, PoissonMode::AnalyticCompletion] {
            let v = eval_on_circle(&s, 0.7, 64, mode).unwrap();
            for j in [0usize, 9, 40] {
                let z = Complex64::from_polar(0.7, 2.0 * PI * j as f64 / 64.0);
                assert!((v[j] - poisson_eval(&s, z, mode).unwrap()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn synthesize_rejects_small_grid() {
        let s = analyze(&real_grid(32, |t| t.sin())).unwrap();
        assert!(matches!(synthesize(&s, 16), Err(Error::Shape(_))));
    }
}
