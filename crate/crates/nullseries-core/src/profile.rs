//! The smooth step a, the singular profile l, its flanked versions l^±, and
//! the level functions g_n on the circle.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cantor::{circle_dist, wrap, CantorSet, Gap, PointStatus};
use crate::harmonic::{ClipInfo, GridFunction};
use crate::jet::{Jet, ORDER};
use crate::quad::{GaussLegendre, Neumaier};
use crate::weights::WeightSpec;
use crate::{Error, Result};

/// Highest derivative order of the step available through [`bump`].
pub const D_MAX: usize = ORDER;

const GL_POINTS: usize = 20;

fn e_jet(u: Jet) -> Jet {
    let u0 = u.value();
    if u0 <= 0.0 || -1.0 / u0 < -745.0 {
        return Jet::constant(0.0);
    }
    (-u.recip()).exp()
}

fn psi_jet(u: Jet) -> Jet {
    let u0 = u.value();
    if u0 <= 0.0 {
        return Jet::constant(0.0);
    }
    if u0 >= 1.0 {
        return Jet::constant(1.0);
    }
    let e1 = e_jet(u);
    let e2 = e_jet(Jet::constant(1.0) - u);
    e1 / (e1 + e2)
}

/// a(x) with its derivatives as a jet; a = ψ(6x − 2).
pub fn bump_jet(x: f64) -> Jet {
    psi_jet(Jet::var(x).scale(6.0) - Jet::constant(2.0))
}

/// a(x) on ℝ (0 left of 1/3, 1 right of 1/2).
#[inline]
pub fn step(x: f64) -> f64 {
    let u = 6.0 * x - 2.0;
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let e1 = (-1.0 / u).exp();
    let e2 = (-1.0 / (1.0 - u)).exp();
    e1 / (e1 + e2)
}

/// D-th derivative of the smooth step at x ∈ [0, 1].
pub fn bump(x: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("bump evaluated at {x}")));
    }
    if d > D_MAX {
        return Err(Error::Capability(format!("derivative order {d} exceeds {D_MAX}")));
    }
    Ok(if d == 0 { step(x) } else { bump_jet(x).derivative(d) })
}

/// max_x |a^{(D)}(x)| for D = 1..=D_MAX over a uniform grid of [1/3, 1/2],
/// and the smallest C with max |a^{(D)}| ≤ (CD)^{CD} for every such D.
pub fn bump_derivative_bound(samples: usize) -> (Vec<f64>, f64) {
    let mut maxima = alloc::vec![0.0f64; D_MAX + 1];
    for i in 0..=samples {
        let x = 1.0 / 3.0 + (1.0 / 6.0) * i as f64 / samples as f64;
        let j = bump_jet(x);
        for (d, m) in maxima.iter_mut().enumerate().skip(1) {
            *m = m.max(j.derivative(d).abs());
        }
    }
    let mut c = 0.0f64;
    for (d, m) in maxima.iter().enumerate().skip(1) {
        // (CD)^{CD} is increasing in C once CD ≥ 1/e; bisect on log scale.
        let (mut lo, mut hi) = (1.0 / (core::f64::consts::E * d as f64), 64.0);
        let target = m.ln();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let cd = mid * d as f64;
            if cd * cd.ln() >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        c = c.max(hi);
    }
    (maxima, c)
}

/// l(t) = −t^{−1/3}a(1−t) − a(t) on (0, 1]; −∞ at t = 0.
pub fn l_eval(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("l evaluated at {t}")));
    }
    Ok(l_raw(t))
}

#[inline]
fn l_raw(t: f64) -> f64 {
    if t == 0.0 {
        return f64::NEG_INFINITY;
    }
    -t.cbrt().recip() * step(1.0 - t) - step(t)
}

/// Side of the flanked profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// l⁺, supported on (0, 3+s].
    Plus,
    /// l⁻, supported on (0, 3−s].
    Minus,
}

impl Side {
    #[inline]
    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// l^±(s; x): l on (0,1], −1 on (1, 2±s], l(3±s−x) on (2±s, 3±s], else 0.
#[inline]
pub fn l_pm(s: f64, x: f64, side: Side) -> f64 {
    let len = 3.0 + side.sign() * s;
    if x <= 0.0 || x > len {
        0.0
    } else if x <= 1.0 {
        l_raw(x)
    } else if x <= len - 1.0 {
        -1.0
    } else {
        l_raw(len - x)
    }
}

/// ∫_{x0}^{x1} l^±(s; x) dx for 0 ≤ x0 ≤ x1 ≤ 3±s, by panels aligned to the
/// breakpoints of the profile.
pub fn l_pm_integral(gl: &GaussLegendre, s: f64, side: Side, x0: f64, x1: f64) -> f64 {
    l_pm_weighted_integral(gl, s, side, x0, x1, |_| Complex64::new(1.0, 0.0)).re
}

/// ∫_{x0}^{x1} l^±(s; x)·w(x) dx for a smooth complex weight w.
///
/// Within 1/3 of a pole l is exactly −|x − pole|^{−1/3}; there the substitution
/// |x − pole| = u^{3/2} turns the integrand into −(3/2)·w, which Gauss–Legendre
/// integrates without ever touching the pole. Elsewhere plain panels.
pub fn l_pm_weighted_integral(
    gl: &GaussLegendre,
    s: f64,
    side: Side,
    x0: f64,
    x1: f64,
    w: impl Fn(f64) -> Complex64,
) -> Complex64 {
    let len = 3.0 + side.sign() * s;
    let (x0, x1) = (x0.clamp(0.0, len), x1.clamp(0.0, len));
    if x1 <= x0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut br: Vec<f64> = [1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0, len - 1.0, len - 2.0 / 3.0, len - 0.5, len - 1.0 / 3.0]
        .into_iter()
        .filter(|b| *b > x0 && *b < x1)
        .collect();
    br.push(x0);
    br.push(x1);
    br.sort_by(f64::total_cmp);
    br.dedup();
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    let mut add = |v: Complex64| {
        re.add(v.re);
        im.add(v.im);
    };
    let third = 1.0 / 3.0;
    for win in br.windows(2) {
        let (p, q) = (win[0], win[1]);
        let both = |g: &dyn Fn(f64) -> Complex64, a: f64, b: f64, panels: usize| {
            Complex64::new(gl.composite(|u| g(u).re, a, b, panels), gl.composite(|u| g(u).im, a, b, panels))
        };
        if q <= third {
            add(both(&|u| w(u * u.sqrt()) * -1.5, p.powf(2.0 / 3.0), q.powf(2.0 / 3.0), 2));
        } else if p >= len - third {
            add(both(&|u| w(len - u * u.sqrt()) * -1.5, (len - q).powf(2.0 / 3.0), (len - p).powf(2.0 / 3.0), 2));
        } else if q <= 1.0 || p >= len - 1.0 {
            add(both(&|x| w(x) * l_pm(s, x, side), p, q, 4));
        } else {
            add(-both(&w, p, q, 2));
        }
    }
    Complex64::new(re.sum(), im.sum())
}

/// ∫_0^1 |l| by the same panel quadrature.
pub fn l_abs_integral() -> f64 {
    let gl = GaussLegendre::new(GL_POINTS);
    -l_pm_integral(&gl, 0.0, Side::Plus, 0.0, 1.0)
}

/// The functions g_0..g_{n_max} over a Cantor set.
#[derive(Clone, Debug)]
pub struct ProfileFamily {
    /// Underlying set (carries the schedule).
    pub set: CantorSet,
    /// Weight ω multiplying the level-n flanks.
    pub omega: WeightSpec,
    /// ω(n), n = 0..=n_max.
    pub omega_n: Vec<f64>,
    /// ∫_0^1 |l|.
    pub l_mass: f64,
    /// Cumulative negative mass W_n = Σ_{l≤n} 2^l τ_l ω(l)(4L+2).
    pub neg_mass: Vec<f64>,
    /// plateau(n) = W_n / (2πΦ(n)); plateau(0) = 0.
    pub plateau: Vec<f64>,
    gl: GaussLegendre,
    gl_small: GaussLegendre,
}

impl ProfileFamily {
    /// Builds per-level caches; the plateau comes from the closed-form balance.
    pub fn new(set: CantorSet, omega: WeightSpec) -> Result<Self> {
        let omega_n = omega.at_integers(set.n_max)?;
        let l_mass = l_abs_integral();
        let mut neg_mass = alloc::vec![0.0];
        let mut plateau = alloc::vec![0.0];
        for n in 1..=set.n_max {
            let w = neg_mass[n - 1] + (1u64 << n) as f64 * set.tau(n) * omega_n[n] * (4.0 * l_mass + 2.0);
            neg_mass.push(w);
            plateau.push(w / (2.0 * PI * set.schedule.phi[n]));
        }
        Ok(ProfileFamily {
            set,
            omega,
            omega_n,
            l_mass,
            neg_mass,
            plateau,
            gl: GaussLegendre::new(GL_POINTS),
            gl_small: GaussLegendre::new(8),
        })
    }

    /// Deepest level.
    pub fn n_max(&self) -> usize {
        self.set.n_max
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.set.n_max {
            return Err(Error::Capability(format!("level {n} beyond built depth {}", self.set.n_max)));
        }
        Ok(())
    }

    /// g_n(t); −∞ at a pole (a point of Q of level ≤ n).
    pub fn g_eval(&self, n: usize, t: f64) -> Result<f64> {
        self.check_level(n)?;
        Ok(self.g_raw(n, wrap(t)))
    }

    fn g_raw(&self, n: usize, t: f64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self.set.classify(t, n).expect("level checked").status {
            PointStatus::InsideDeepest { .. } => self.plateau[n],
            PointStatus::Singular { .. } => f64::NEG_INFINITY,
            PointStatus::Escaped { level, child, gap, .. } => self.flank(level, child, gap, t),
        }
    }

    fn flank(&self, lv: usize, c: usize, gap: Gap, t: f64) -> f64 {
        let set = &self.set;
        let tau = set.tau(lv);
        let s = set.s[lv][c];
        let w = self.omega_n[lv];
        match gap {
            Gap::Left => w * l_pm(s, (t - set.half_start(lv, c)) / tau, Side::Plus),
            Gap::Right => w * l_pm(s, (t - set.a[lv][c] - set.sigma(lv)) / tau, Side::Minus),
        }
    }

    /// Poles of g_n with the level whose flank dominates the singular mass.
    pub fn poles(&self, n: usize) -> Vec<(f64, usize)> {
        let set = &self.set;
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        out.push((0.0, 1));
        out.push((PI, 1));
        for l in 1..=n {
            let sg = set.sigma(l);
            for &a in &set.a[l] {
                out.push((a, l));
                out.push((a + sg, l));
                if l < n {
                    out.push((a + sg / 2.0, l + 1));
                }
            }
        }
        out
    }

    /// Samples g_n at t_j = 2πj/N. Samples within h/2 of a pole take the value
    /// g_n(pole ± h) from the same side (+h on ties) and are tagged.
    pub fn sample(&self, n: usize, grid: usize) -> Result<GridFunction> {
        self.check_level(n)?;
        if grid < 2 || !grid.is_power_of_two() {
            return Err(Error::Shape(format!("grid size {grid} is not a power of two ≥ 2")));
        }
        let h = 2.0 * PI / grid as f64;
        let mut values: Vec<Complex64> = (0..grid).map(|j| Complex64::new(self.g_raw(n, j as f64 * h), 0.0)).collect();
        let mut near: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
        for (q, lv) in self.poles(n) {
            let q = wrap(q);
            let j0 = (q / h).floor() as usize;
            for j in [j0, j0 + 1] {
                let j = j % grid;
                let d = circle_dist(j as f64 * h, q);
                if d <= h / 2.0 && near.get(&j).is_none_or(|e| d < e.0) {
                    near.insert(j, (d, q, lv));
                }
            }
        }
        let mut mass = Neumaier::default();
        let mut tags = Vec::with_capacity(near.len());
        for (&j, &(_, q, lv)) in &near {
            let off = wrap(j as f64 * h - q + PI) - PI;
            let side = if off < 0.0 { -1.0 } else { 1.0 };
            let mut k = 1.0;
            let mut v = self.g_raw(n, wrap(q + side * h));
            while !v.is_finite() {
                k += 1.0;
                v = self.g_raw(n, wrap(q + side * k * h));
            }
            values[j] = Complex64::new(v, 0.0);
            tags.push(j);
            let lv = lv.min(n);
            mass.add(2.0 * self.omega_n[lv] * 1.5 * self.set.tau(lv).cbrt() * (h / 2.0).powf(2.0 / 3.0));
        }
        Ok(GridFunction {
            values,
            tags,
            clip: Some(ClipInfo {
                rule: String::from("samples within h/2 of a pole take g(pole ± h), same side, +h on ties"),
                mass_bound: mass.sum(),
            }),
        })
    }

    /// ∫ of the level-lv flanks of child c (both sides), by quadrature.
    pub fn child_flank_integral(&self, lv: usize, c: usize) -> f64 {
        let s = self.set.s[lv][c];
        let scale = self.omega_n[lv] * self.set.tau(lv);
        scale
            * (l_pm_integral(&self.gl, s, Side::Plus, 0.0, 3.0 + s)
                + l_pm_integral(&self.gl, s, Side::Minus, 0.0, 3.0 - s))
    }

    /// ∫_𝕋 g_n: quadrature of every flank plus plateau(n)·m(K_n).
    pub fn total_integral(&self, n: usize) -> Result<f64> {
        self.check_level(n)?;
        let mut acc = Neumaier::default();
        for lv in 1..=n {
            for c in 0..1usize << lv {
                acc.add(self.child_flank_integral(lv, c));
            }
        }
        acc.add(self.plateau[n] * 2.0 * PI * self.set.schedule.phi[n]);
        Ok(acc.sum())
    }

    /// ∫_{I(n−1,k)} g_n^−, the negative mass of the two level-n children's flanks.
    pub fn interval_negative_mass(&self, n: usize, k: usize) -> Result<f64> {
        self.check_level(n)?;
        if n == 0 || k >= 1 << (n - 1) {
            return Err(Error::Range(format!("no interval ({}, {k})", n as isize - 1)));
        }
        Ok(self.child_flank_integral(n, 2 * k) + self.child_flank_integral(n, 2 * k + 1))
    }

    /// ∫_{a(n,k)}^{x} (g_{n+1} − g_n), for x ∈ I(n,k).
    pub fn level_difference_integral(&self, n: usize, k: usize, x: f64) -> Result<f64> {
        self.check_level(n + 1)?;
        let set = &self.set;
        let lv = n + 1;
        let tau = set.tau(lv);
        let w = self.omega_n[lv];
        let (pn, pn1) = (self.plateau[n], self.plateau[lv]);
        let a0 = set.a[n][k];
        let x = x.clamp(a0, a0 + set.sigma(n));
        let mut acc = Neumaier::default();
        for c in [2 * k, 2 * k + 1] {
            let s = set.s[lv][c];
            let hs = set.half_start(lv, c);
            let ac = set.a[lv][c];
            let bc = ac + set.sigma(lv);
            let he = hs + set.sigma(n) / 2.0;
            let part = |p: f64, q: f64| (x.min(q) - p).max(0.0);
            let j1 = part(hs, ac);
            acc.add(w * tau * l_pm_integral(&self.gl, s, Side::Plus, 0.0, j1 / tau) - pn * j1);
            acc.add((pn1 - pn) * part(ac, bc));
            let j2 = part(bc, he);
            acc.add(w * tau * l_pm_integral(&self.gl, s, Side::Minus, 0.0, j2 / tau) - pn * j2);
        }
        Ok(acc.sum())
    }

    /// ∫_{K_n} (g_{n+1} − g_n)(t)·w(t) dt for a weight w that is smooth on K_n.
    pub fn level_difference_weighted(&self, n: usize, w: impl Fn(f64) -> Complex64) -> Result<Complex64> {
        self.check_level(n + 1)?;
        let set = &self.set;
        let lv = n + 1;
        let tau = set.tau(lv);
        let om = self.omega_n[lv];
        let (pn, pn1) = (self.plateau[n], self.plateau[lv]);
        let gl = &self.gl_small;
        let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
        let plain = |p: f64, q: f64| Complex64::new(gl.integrate(|t| w(t).re, p, q), gl.integrate(|t| w(t).im, p, q));
        for c in 0..1usize << lv {
            let s = set.s[lv][c];
            let hs = set.half_start(lv, c);
            let ac = set.a[lv][c];
            let bc = ac + set.sigma(lv);
            let he = hs + set.sigma(n) / 2.0;
            let mut v = l_pm_weighted_integral(gl, s, Side::Plus, 0.0, 3.0 + s, |x| w(hs + tau * x)) * (om * tau);
            v += l_pm_weighted_integral(gl, s, Side::Minus, 0.0, 3.0 - s, |x| w(bc + tau * x)) * (om * tau);
            v -= (plain(hs, ac) + plain(bc, he)) * pn;
            v += plain(ac, bc) * (pn1 - pn);
            re.add(v.re);
            im.add(v.im);
        }
        Ok(Complex64::new(re.sum(), im.sum()))
    }

    /// sup_{t,u} |∫_t^u (g_{n+1} − g_n)| = max F − min F, with F the cumulative
    /// integral; its extremes sit at child endpoints (closed forms through L).
    pub fn level_difference_swing(&self, n: usize) -> Result<f64> {
        self.check_level(n + 1)?;
        let set = &self.set;
        let lv = n + 1;
        let tau = set.tau(lv);
        let w = self.omega_n[lv];
        let (pn, pn1) = (self.plateau[n], self.plateau[lv]);
        let l = self.l_mass;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for k in 0..1usize << n {
            let mut f = 0.0;
            for c in [2 * k, 2 * k + 1] {
                let s = set.s[lv][c];
                f += -w * tau * (2.0 * l + 1.0 + s) - pn * tau * (3.0 + s);
                lo = lo.min(f);
                f += (pn1 - pn) * set.sigma(lv);
                hi = hi.max(f);
                f += -w * tau * (2.0 * l + 1.0 - s) - pn * tau * (3.0 - s);
                lo = lo.min(f);
            }
        }
        Ok(hi - lo)
    }

    /// Growth and stability estimates across levels.
    pub fn growth_report(&self) -> Result<GrowthReport> {
        let nm = self.n_max();
        let mut levels = Vec::with_capacity(nm);
        for n in 1..=nm {
            let scale = self.set.tau(n) * self.omega_n[n];
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for k in 0..1usize << (n - 1) {
                let r = -self.interval_negative_mass(n, k)? / scale;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let swing = if n < nm { Some(self.level_difference_swing(n)?) } else { None };
            levels.push(GrowthLevel {
                n,
                neg_mass_ratio_min: lo,
                neg_mass_ratio_max: hi,
                plateau: self.plateau[n],
                plateau_over_n: self.plateau[n] / n as f64,
                neg_mass: self.neg_mass[n],
                swing,
                swing_constant: swing.map(|s| s * (1u64 << n) as f64),
            });
        }
        let burn_in = 4;
        let plateau_decreasing =
            levels.windows(2).filter(|w| w[0].n >= burn_in).all(|w| w[1].plateau_over_n < w[0].plateau_over_n);
        let cs: Vec<f64> = levels.iter().filter_map(|l| l.swing_constant).collect();
        let c_max = cs.iter().copied().fold(0.0, f64::max);
        let c_min = cs.iter().copied().fold(f64::INFINITY, f64::min);
        let tail: Vec<(f64, f64)> =
            levels.iter().filter(|l| l.n * 2 > nm).map(|l| ((l.n as f64).ln(), l.neg_mass.ln())).collect();
        Ok(GrowthReport {
            plateau_burn_in: burn_in,
            plateau_decreasing,
            neg_mass_ratio_spread: levels.iter().map(|l| l.neg_mass_ratio_max).fold(0.0, f64::max)
                / levels.iter().map(|l| l.neg_mass_ratio_min).fold(f64::INFINITY, f64::min),
            swing_constant_max: c_max,
            swing_constant_min: c_min,
            swing_stable: cs.is_empty() || c_max / c_min <= SWING_STABILITY,
            neg_mass_local_exponent: if tail.len() >= 2 { crate::weights::slope(&tail) } else { f64::NAN },
            levels,
        })
    }
}

/// Allowed max/min ratio of 2^n·sup|∫(g_{n+1} − g_n)| across levels.
pub const SWING_STABILITY: f64 = 4.0;

/// Per-level growth estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthLevel {
    /// Level.
    pub n: usize,
    /// min_k −∫_{I(n−1,k)} g_n^− / (τ_n ω(n)).
    pub neg_mass_ratio_min: f64,
    /// max_k of the same ratio.
    pub neg_mass_ratio_max: f64,
    /// plateau(n) = max g_n.
    pub plateau: f64,
    /// plateau(n)/n.
    pub plateau_over_n: f64,
    /// −∫ g_n^−.
    pub neg_mass: f64,
    /// sup |∫_t^u (g_{n+1} − g_n)|, absent at the deepest level.
    pub swing: Option<f64>,
    /// 2^n times the swing.
    pub swing_constant: Option<f64>,
}

/// Growth report across levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Rows n = 1..=n_max.
    pub levels: Vec<GrowthLevel>,
    /// First level of the plateau(n)/n monotonicity check.
    pub plateau_burn_in: usize,
    /// plateau(n)/n strictly decreasing from the burn-in level on.
    pub plateau_decreasing: bool,
    /// max/min of the negative-mass ratio over all (n, k).
    pub neg_mass_ratio_spread: f64,
    /// Largest swing constant.
    pub swing_constant_max: f64,
    /// Smallest swing constant.
    pub swing_constant_min: f64,
    /// max/min ≤ [`SWING_STABILITY`].
    pub swing_stable: bool,
    /// Log-log slope of −∫g_n^− against n over the upper half of levels.
    pub neg_mass_local_exponent: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{generate, OffsetMode};
    use crate::weights::{build_schedule, derive_omega2};

    const L_ORACLE: f64 = 1.630_292_169_391_661_4;

    fn family(n: usize, seed: u64, mode: OffsetMode) -> ProfileFamily {
        let w = WeightSpec::t_log2();
        let s = build_schedule(&derive_omega2(&w).unwrap(), n).unwrap();
        ProfileFamily::new(generate(&s, n, seed, mode).unwrap(), w).unwrap()
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump(0.2, 0).unwrap(), 0.0);
        assert_eq!(bump(0.75, 0).unwrap(), 1.0);
        assert_eq!(bump(0.2, 3).unwrap(), 0.0);
        assert!((bump(5.0 / 12.0, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(bump(0.4, 9), Err(Error::Capability(_))));
    }

    #[test]
    fn bump_derivatives_match_differences() {
        for x in [0.36, 0.41, 0.47] {
            let h = 1e-4;
            let d5 = |f: &dyn Fn(f64) -> f64| {
                (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
            };
            let fd = d5(&step);
            assert!((bump(x, 1).unwrap() - fd).abs() < 1e-8 * fd.abs().max(1.0));
            let fd4 = d5(&|y| bump(y, 3).unwrap());
            assert!((bump(x, 4).unwrap() - fd4).abs() < 1e-7 * fd4.abs().max(1.0));
        }
    }

    #[test]
    fn l_values() {
        assert!((l_eval(0.125).unwrap() + 2.0).abs() < 1e-14);
        assert_eq!(l_eval(0.8).unwrap(), -1.0);
        assert_eq!(l_eval(0.0).unwrap(), f64::NEG_INFINITY);
        for s in [0.0, 0.3, 1.0] {
            assert_eq!(l_pm(s, 1.5, Side::Plus), -1.0);
            assert_eq!(l_pm(s, 4.2, Side::Plus), 0.0);
        }
    }

    #[test]
    fn l_mass_matches_oracle() {
        assert!((l_abs_integral() - L_ORACLE).abs() < 1e-13);
        let gl = GaussLegendre::new(GL_POINTS);
        for s in [0.0, 0.37, 1.0] {
            let p = l_pm_integral(&gl, s, Side::Plus, 0.0, 3.0 + s);
            let m = l_pm_integral(&gl, s, Side::Minus, 0.0, 3.0 - s);
            assert!((p + 2.0 * L_ORACLE + 1.0 + s).abs() < 1e-12);
            assert!((m + 2.0 * L_ORACLE + 1.0 - s).abs() < 1e-12);
        }
    }

    #[test]
    fn g_zero_and_plateau() {
        let f = family(6, 2, OffsetMode::Random);
        assert_eq!(f.g_eval(0, 1.0).unwrap(), 0.0);
        let c = &f.set;
        let t = c.a[6][17] + c.sigma(6) / 3.0;
        assert_eq!(f.g_eval(6, t).unwrap(), f.plateau[6]);
        assert_eq!(f.g_eval(6, c.a[3][2]).unwrap(), f64::NEG_INFINITY);
        assert!(f.plateau.iter().skip(1).all(|p| *p > 0.0));
    }

    #[test]
    fn mean_zero_and_seed_invariance() {
        let f = family(8, 1, OffsetMode::Random);
        let g = family(8, 99, OffsetMode::Random);
        for n in 1..=8 {
            assert!(f.total_integral(n).unwrap().abs() <= 1e-8);
        }
        let a = f.interval_negative_mass(5, 3).unwrap();
        let b = g.interval_negative_mass(5, 3).unwrap();
        assert!((a - b).abs() <= 1e-8);
    }

    #[test]
    fn swing_matches_quadrature() {
        let f = family(7, 4, OffsetMode::Random);
        let n = 4;
        let sw = f.level_difference_swing(n).unwrap();
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for k in 0..1usize << n {
            let end = f.set.a[n][k] + f.set.sigma(n);
            assert!(f.level_difference_integral(n, k, end).unwrap().abs() < 1e-10);
            for c in [2 * k, 2 * k + 1] {
                let ac = f.set.a[n + 1][c];
                let v1 = f.level_difference_integral(n, k, ac).unwrap();
                let v2 = f.level_difference_integral(n, k, ac + f.set.sigma(n + 1)).unwrap();
                let he = f.set.half_start(n + 1, c) + f.set.sigma(n) / 2.0;
                let v3 = f.level_difference_integral(n, k, he).unwrap();
                lo = lo.min(v1).min(v2).min(v3);
                hi = hi.max(v1).max(v2).max(v3);
            }
        }
        assert!(((hi - lo) - sw).abs() < 1e-8 * sw, "{hi} {lo} {sw}");
    }

    #[test]
    fn clipping_tags_poles() {
        let f = family(4, 0, OffsetMode::Fixed(0.0));
        let g = f.sample(4, 1 << 12).unwrap();
        assert!(g.values.iter().all(|v| v.re.is_finite()));
        assert!(g.tags.contains(&0));
        assert!(g.tags.contains(&(1 << 11)));
    }
}
