//! F_n = exp(G_n + iG̃_n), its boundary values f_n, the Taylor ladder F̂_n(m),
//! the null series c(n) and the checks run against it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cantor::{generate, CantorSet, OffsetMode, PointStatus, Target};
use crate::fft::Fft;
use crate::harmonic::{
    analyze, conj_multiplier, eval_on_circle, synthesize, GridFunction, PoissonMode, SpectralSeries,
};
use crate::profile::ProfileFamily;
use crate::quad::Neumaier;
use crate::rng;
use crate::weights::{build_schedule, derive_omega2, slope, ThicknessSchedule, WeightSpec};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// What to do when n(m) exceeds the built depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthPolicy {
    /// Capability error.
    Strict,
    /// Use the deepest level available.
    Capped,
}

/// Numerical settings of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaConfig {
    /// Interior circle ρ = 1 − beta/N for the Taylor ladder.
    pub beta: f64,
    /// C in n(m) = ⌈C·log₂ m⌉.
    pub depth_constant: f64,
    /// Depth policy for n(m).
    pub policy: DepthPolicy,
    /// max|c(n)| below this is a construction failure.
    pub triviality_tol: f64,
}

impl Default for PlaConfig {
    fn default() -> Self {
        PlaConfig { beta: 32.0, depth_constant: 2.0, policy: DepthPolicy::Capped, triviality_tol: 1e-9 }
    }
}

/// n(m) = ⌈C·log₂ m⌉, with n(0) = n(1) = 0.
pub fn depth_for(m: u64, c: f64) -> usize {
    if m <= 1 {
        0
    } else {
        (c * (m as f64).log2() - 1e-12).ceil() as usize
    }
}

/// Deepest level whose flank scale τ_n is resolved by an N-point grid.
pub fn resolution_depth(s: &ThicknessSchedule, grid: usize) -> usize {
    let h = 2.0 * PI / grid as f64;
    (1..=s.n_max).take_while(|&n| s.tau(n) >= h).last().unwrap_or(0)
}

/// Smallest grid the resolution rule admits at depth n: N ≥ 2^{n+6}.
pub fn min_grid(n: usize) -> usize {
    1usize << (n + 6)
}

/// f_n and its spectra at one depth.
#[derive(Clone, Debug)]
pub struct PlaFunction {
    /// Depth n.
    pub depth: usize,
    /// Grid size N.
    pub grid: usize,
    /// Sampled g_n (clipped near poles, tagged).
    pub g: GridFunction,
    /// ĝ_n with the DC term set to its exact value 0.
    pub g_spectrum: SpectralSeries,
    /// DC term of the sampled g_n (quadrature diagnostic).
    pub g_dc_sampled: f64,
    /// f_n = exp(g_n + i g̃_n) on the grid.
    pub boundary: GridFunction,
    /// f̂_n from the boundary samples.
    pub spectrum: SpectralSeries,
    /// Grid points lying in K_n.
    pub inside: Vec<bool>,
    /// F̂_n(m) for 0 ≤ m < N/4, by Cauchy's formula on |z| = 1 − beta/N.
    pub taylor: Vec<Complex64>,
    /// Negative-band energy fraction on the interior circle.
    pub interior_leakage: f64,
    /// Negative-frequency energy fraction of the boundary samples.
    pub boundary_leakage: f64,
    /// plateau(n).
    pub plateau: f64,
}

/// Builds f_n on an N-point grid.
pub fn build_pla(p: &ProfileFamily, n: usize, grid: usize, cfg: &PlaConfig) -> Result<PlaFunction> {
    if n > p.n_max() {
        return Err(Error::Capability(format!("depth {n} beyond built depth {}", p.n_max())));
    }
    if grid < min_grid(n) {
        return Err(Error::Resolution(format!("grid {grid} below 2^(n+6) = {} at depth {n}", min_grid(n))));
    }
    let g = p.sample(n, grid)?;
    let mut gs = analyze(&g)?;
    gs.origin = format!("g_{n}");
    let g_dc_sampled = gs.coeffs[0].re;
    gs.coeffs[0] = ZERO;
    let fft = Fft::new(grid)?;
    let ny = gs.nyquist();

    let mut gt: Vec<Complex64> = (0..grid).map(|j| gs.coeffs[j] * conj_multiplier(gs.freq(j), ny)).collect();
    fft.inverse(&mut gt)?;
    let boundary_vals: Vec<Complex64> =
        g.values.iter().zip(&gt).map(|(a, b)| Complex64::new(a.re, b.re).exp()).collect();
    let boundary = GridFunction { values: boundary_vals, tags: g.tags.clone(), clip: g.clip.clone() };
    let mut spectrum = analyze(&boundary)?;
    spectrum.origin = format!("f_{n}");

    let ln_rho = (-cfg.beta / grid as f64).ln_1p();
    let mut a: Vec<Complex64> = (0..grid)
        .map(|j| {
            let k = gs.freq(j);
            if k > 0 && k < ny {
                gs.coeffs[j] * (2.0 * (k as f64 * ln_rho).exp())
            } else {
                ZERO
            }
        })
        .collect();
    fft.inverse(&mut a)?;
    a.iter_mut().for_each(|v| *v = v.exp());
    fft.forward(&mut a)?;
    let band = grid / 4;
    let inv = 1.0 / grid as f64;
    let taylor: Vec<Complex64> = (0..band).map(|m| a[m] * inv * (-(m as f64) * ln_rho).exp()).collect();
    let mut neg = Neumaier::default();
    for m in 1..band {
        neg.add((a[grid - m] * inv * (-(m as f64) * ln_rho).exp()).norm_sqr());
    }
    let pos: f64 = taylor.iter().map(|c| c.norm_sqr()).sum();
    let interior_leakage = neg.sum() / (neg.sum() + pos);

    let (mut bn, mut bt) = (Neumaier::default(), Neumaier::default());
    for j in 0..grid {
        let e = spectrum.coeffs[j].norm_sqr();
        bt.add(e);
        if spectrum.freq(j) < 0 {
            bn.add(e);
        }
    }
    let inside = (0..grid)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / grid as f64;
            n > 0 && matches!(p.set.classify(t, n).map(|c| c.status), Ok(PointStatus::InsideDeepest { .. }))
        })
        .collect();
    Ok(PlaFunction {
        depth: n,
        grid,
        g,
        g_spectrum: gs,
        g_dc_sampled,
        boundary,
        spectrum,
        inside,
        taylor,
        interior_leakage,
        boundary_leakage: bn.sum() / bt.sum(),
        plateau: p.plateau[n],
    })
}

/// Anything whose depth-n analytic function can be sampled on circles.
pub trait ContourSource {
    /// Deepest level available.
    fn max_depth(&self) -> usize;
    /// Values F_depth(r·e^{2πij/q}), j < q.
    fn circle_values(&self, depth: usize, r: f64, q: usize) -> Result<Vec<Complex64>>;
    /// Grid size the source was built on.
    fn grid(&self) -> usize;
}

/// One rung of the ladder.
#[derive(Clone, Debug)]
pub struct Rung {
    /// Depth.
    pub depth: usize,
    /// ĝ_depth, DC removed.
    pub g_spectrum: SpectralSeries,
    /// F̂_depth(m), 0 ≤ m < N/4.
    pub taylor: Vec<Complex64>,
    /// Interior-circle leakage.
    pub interior_leakage: f64,
}

/// The functions F_n at the depths n(m) needed for a frequency range.
#[derive(Clone, Debug)]
pub struct PlaLadder {
    /// Rungs sorted by depth.
    pub rungs: Vec<Rung>,
    /// Grid size.
    pub grid: usize,
}

impl PlaLadder {
    /// Rung of the given depth.
    pub fn rung(&self, depth: usize) -> Result<&Rung> {
        self.rungs
            .iter()
            .find(|r| r.depth == depth)
            .ok_or_else(|| Error::Capability(format!("no ladder rung at depth {depth}")))
    }

    /// F̂_{n(m)}(m), n(m) capped at the deepest rung.
    pub fn taylor(&self, m: usize, cfg: &PlaConfig) -> Result<Complex64> {
        let d = depth_for(m as u64, cfg.depth_constant).min(self.max_depth());
        let r = self.rung(d)?;
        r.taylor.get(m).copied().ok_or_else(|| Error::Capability(format!("m = {m} beyond the band N/4")))
    }
}

impl ContourSource for PlaLadder {
    fn max_depth(&self) -> usize {
        self.rungs.iter().map(|r| r.depth).max().unwrap_or(0)
    }
    fn circle_values(&self, depth: usize, r: f64, q: usize) -> Result<Vec<Complex64>> {
        let mut v = eval_on_circle(&self.rung(depth)?.g_spectrum, r, q, PoissonMode::AnalyticCompletion)?;
        v.iter_mut().for_each(|x| *x = x.exp());
        Ok(v)
    }
    fn grid(&self) -> usize {
        self.grid
    }
}

/// A fixed power series Σ_{m≥0} a_m z^m presented at every depth.
#[derive(Clone, Debug)]
pub struct PolynomialSource {
    /// a_m, m = 0, 1, ...
    pub coeffs: Vec<Complex64>,
    /// Nominal grid size.
    pub grid: usize,
    /// Nominal depth.
    pub depth: usize,
}

impl ContourSource for PolynomialSource {
    fn max_depth(&self) -> usize {
        self.depth
    }
    fn circle_values(&self, _depth: usize, r: f64, q: usize) -> Result<Vec<Complex64>> {
        let mut v = alloc::vec![ZERO; q];
        for (m, c) in self.coeffs.iter().enumerate() {
            v[m % q] += c * r.powi(m as i32);
        }
        Fft::new(q)?.inverse(&mut v)?;
        Ok(v)
    }
    fn grid(&self) -> usize {
        self.grid
    }
}

/// Depths n(m) for 0 ≤ m ≤ m_max, capped at `cap`, sorted.
pub fn ladder_depths(m_max: usize, cap: usize, c: f64) -> Vec<usize> {
    let mut d: Vec<usize> = (0..=m_max as u64).map(|m| depth_for(m, c).min(cap)).collect();
    d.dedup();
    d
}

/// Builds the rungs for n(m), m ≤ m_max, capped at `cap`.
pub fn build_ladder(p: &ProfileFamily, m_max: usize, cap: usize, grid: usize, cfg: &PlaConfig) -> Result<PlaLadder> {
    let mut rungs = Vec::new();
    for d in ladder_depths(m_max, cap, cfg.depth_constant) {
        let f = build_pla(p, d, grid, cfg)?;
        rungs.push(Rung { depth: d, g_spectrum: f.g_spectrum, taylor: f.taylor, interior_leakage: f.interior_leakage });
    }
    Ok(PlaLadder { rungs, grid })
}

/// F̂(m) ≈ (1/2πi)∮ z^{−m−1}F_{n(m)}(z)dz on |z| = max(1 − 1/m, 1/2) with
/// Q = max(8m, 4N) trapezoid nodes.
pub fn taylor_coeff(src: &impl ContourSource, m: u64, cfg: &PlaConfig) -> Result<Complex64> {
    if m < 1 {
        return Err(Error::Domain("taylor_coeff needs m ≥ 1".into()));
    }
    let want = depth_for(m, cfg.depth_constant);
    let depth = match cfg.policy {
        DepthPolicy::Capped => want.min(src.max_depth()),
        DepthPolicy::Strict if want > src.max_depth() => {
            let usable = 2f64.powf(src.max_depth() as f64 / cfg.depth_constant).floor();
            return Err(Error::Capability(format!(
                "n({m}) = {want} exceeds depth {}; largest usable m is {usable}",
                src.max_depth()
            )));
        }
        DepthPolicy::Strict => want,
    };
    let r = (1.0 - 1.0 / m as f64).max(0.5);
    let q = (8 * m as usize).max(4 * src.grid()).next_power_of_two();
    let v = src.circle_values(depth, r, q)?;
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    for (j, f) in v.iter().enumerate() {
        let ph = -2.0 * PI * ((m as u128 * j as u128) % q as u128) as f64 / q as f64;
        let x = f * Complex64::from_polar(1.0, ph);
        re.add(x.re);
        im.add(x.im);
    }
    Ok(Complex64::new(re.sum(), im.sum()) / (q as f64 * r.powi(m as i32)))
}

/// Provenance of a null series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    /// Cantor seed.
    pub seed: u64,
    /// Deepest level used for f.
    pub depth: usize,
    /// Grid size.
    pub grid: usize,
    /// Weight ω, when the series comes from the construction.
    pub omega: Option<WeightSpec>,
    /// Construction settings.
    pub config: PlaConfig,
}

/// c(n) for −M ≤ n ≤ M.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullSeries {
    /// M.
    pub m_max: usize,
    /// c(n) at index n + M.
    pub coeffs: Vec<Complex64>,
    /// Provenance.
    pub meta: SeriesMeta,
}

impl NullSeries {
    /// c(n); zero outside the stored range.
    pub fn get(&self, n: i64) -> Complex64 {
        let m = self.m_max as i64;
        if n.abs() > m {
            ZERO
        } else {
            self.coeffs[(n + m) as usize]
        }
    }

    /// max_n |c(n)|.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// max_{n<0} |c(n)|.
    pub fn max_abs_negative(&self) -> f64 {
        self.coeffs[..self.m_max].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// c(n) = f̂(n) for n < 0 and f̂(n) − F̂(n) for n ≥ 0, with a triviality check.
pub fn assemble(
    f_hat: &SpectralSeries,
    big_f: impl Fn(usize) -> Result<Complex64>,
    m_max: usize,
    tol: f64,
) -> Result<Vec<Complex64>> {
    if m_max as i64 >= f_hat.nyquist() {
        return Err(Error::Capability(format!("M = {m_max} needs a spectrum beyond N/2 = {}", f_hat.nyquist())));
    }
    let mut c = Vec::with_capacity(2 * m_max + 1);
    for n in -(m_max as i64)..=m_max as i64 {
        c.push(if n < 0 { f_hat.get(n) } else { f_hat.get(n) - big_f(n as usize)? });
    }
    let top = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(top > tol) {
        return Err(Error::Triviality(format!("max|c(n)| = {top:e} ≤ {tol:e}")));
    }
    Ok(c)
}

/// f̂ of f_N·1_{𝕋∖K_N}, the boundary function with the deepest set removed.
pub fn outside_spectrum(f: &PlaFunction) -> Result<SpectralSeries> {
    let vals = f.boundary.values.iter().zip(&f.inside).map(|(v, &ins)| if ins { ZERO } else { *v }).collect();
    let mut s = analyze(&GridFunction { values: vals, tags: Vec::new(), clip: None })?;
    s.origin = format!("f_{}·1_outside", f.depth);
    Ok(s)
}

/// Assembles the null series from the deepest f and the ladder.
pub fn null_series(
    deepest: &PlaFunction,
    ladder: &PlaLadder,
    m_max: usize,
    seed: u64,
    omega: Option<WeightSpec>,
    cfg: &PlaConfig,
) -> Result<NullSeries> {
    if m_max >= deepest.grid / 4 {
        return Err(Error::Capability(format!("M = {m_max} beyond the Taylor band N/4 = {}", deepest.grid / 4)));
    }
    let fh = outside_spectrum(deepest)?;
    let coeffs = assemble(&fh, |m| ladder.taylor(m, cfg), m_max, cfg.triviality_tol)?;
    Ok(NullSeries {
        m_max,
        coeffs,
        meta: SeriesMeta { seed, depth: deepest.depth, grid: deepest.grid, omega, config: cfg.clone() },
    })
}

/// Everything the construction produces.
#[derive(Clone, Debug)]
pub struct Construction {
    /// Profile family.
    pub profile: ProfileFamily,
    /// f at the deepest level.
    pub deepest: PlaFunction,
    /// Taylor ladder.
    pub ladder: PlaLadder,
    /// The series.
    pub series: NullSeries,
}

/// weights → cantor → profile → harmonic → pla.
pub fn construct(
    omega: &WeightSpec,
    depth: usize,
    grid: usize,
    m_max: usize,
    seed: u64,
    cfg: &PlaConfig,
) -> Result<Construction> {
    let w2 = derive_omega2(omega)?;
    let sched = build_schedule(&w2, depth)?;
    let set = generate(&sched, depth, seed, OffsetMode::Random)?;
    let profile = ProfileFamily::new(set, omega.clone())?;
    let deepest = build_pla(&profile, depth, grid, cfg)?;
    let mut ladder = build_ladder(&profile, m_max, depth.saturating_sub(1), grid, cfg)?;
    if depth_for(m_max as u64, cfg.depth_constant) >= depth {
        ladder.rungs.retain(|r| r.depth < depth);
        ladder.rungs.push(Rung {
            depth,
            g_spectrum: deepest.g_spectrum.clone(),
            taylor: deepest.taylor.clone(),
            interior_leakage: deepest.interior_leakage,
        });
    }
    let series = null_series(&deepest, &ladder, m_max, seed, Some(omega.clone()), cfg)?;
    Ok(Construction { profile, deepest, ladder, series })
}

/// One dyad of the decay fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    /// m = 2^j.
    pub m: u64,
    /// |c(−m)|.
    pub abs_c: f64,
    /// −log|c(−m)|.
    pub neg_log: f64,
    /// ω(log₂ m).
    pub omega_log: f64,
    /// −log|c(−m)| / ω(log₂ m).
    pub ratio: f64,
}

/// Decay fit of the anti-analytic part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// Per-dyad rows.
    pub rows: Vec<DecayRow>,
    /// ĉ = min ratio.
    pub c_hat: f64,
    /// Threshold ĉ_min.
    pub c_min: f64,
    /// Least-squares slope of the ratio against j over the upper half of dyads.
    pub tail_trend: f64,
    /// ĉ ≥ ĉ_min and the ratio does not fall below ĉ_min at the top dyad.
    pub pass: bool,
}

/// ĉ := min over dyadic m in [m_lo, m_hi] of −log|c(−m)| / ω(log₂ m).
pub fn decay_report(s: &NullSeries, w: &WeightSpec, m_lo: u64, m_hi: u64, c_min: f64) -> Result<DecayReport> {
    decay_from(|m| s.get(-(m as i64)).norm(), w, m_lo, m_hi.min(s.m_max as u64), c_min)
}

/// Decay fit for an arbitrary magnitude sequence m ↦ |c(−m)|.
pub fn decay_from(abs_c: impl Fn(u64) -> f64, w: &WeightSpec, m_lo: u64, m_hi: u64, c_min: f64) -> Result<DecayReport> {
    let mut rows = Vec::new();
    let mut j = m_lo.max(2).next_power_of_two().trailing_zeros();
    while (1u64 << j) <= m_hi {
        let m = 1u64 << j;
        let a = abs_c(m);
        let om = w.eval(j as f64)?;
        rows.push(DecayRow { m, abs_c: a, neg_log: -a.ln(), omega_log: om, ratio: -a.ln() / om });
        j += 1;
    }
    if rows.is_empty() {
        return Err(Error::Value(format!("no dyadic m in [{m_lo}, {m_hi}]")));
    }
    let c_hat = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let half: Vec<(f64, f64)> = rows
        .iter()
        .skip(rows.len() / 2)
        .filter(|r| r.ratio.is_finite())
        .map(|r| ((r.m as f64).log2(), r.ratio))
        .collect();
    let tail_trend = if half.len() >= 2 { slope(&half) } else { 0.0 };
    let pass = c_hat >= c_min;
    Ok(DecayReport { rows, c_hat, c_min, tail_trend, pass })
}

/// Random points of 𝕋 at distance ≥ `min_dist` from K_depth ∪ Q_{≤depth}.
pub fn escaped_probes(set: &CantorSet, depth: usize, count: usize, min_dist: f64, seed: u64) -> Result<Vec<f64>> {
    let mut r = rng::stream(seed, u64::MAX - 1);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1_000_000 {
            return Err(Error::Value(format!("found only {} escaped probes at distance {min_dist}", out.len())));
        }
        let t = 2.0 * PI * rng::uniform(&mut r);
        if matches!(set.classify(t, depth)?.status, PointStatus::Escaped { .. })
            && set.distance(t, Target::KPrime(depth))? >= min_dist
        {
            out.push(t);
        }
    }
    Ok(out)
}

/// Partial sums at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullCheckRow {
    /// Point.
    pub t: f64,
    /// Escape level.
    pub level: usize,
    /// |S_N(t)| for each N of the list.
    pub partial: Vec<f64>,
    /// max_N |S_N| / |S_{N_last}|.
    pub drop: f64,
    /// drop ≥ [`NULL_DROP`].
    pub pass: bool,
}

/// Convergence table of the partial sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullCheckReport {
    /// Truncation orders.
    pub orders: Vec<usize>,
    /// Rows per point.
    pub rows: Vec<NullCheckRow>,
    /// The series is identically zero.
    pub degenerate: bool,
    /// Every point passes (and the series is not degenerate).
    pub pass: bool,
}

/// Required drop of |S_N| from its peak to the last N.
pub const NULL_DROP: f64 = 4.0;

/// S_N(t) = Σ_{|n|≤N} c(n)e^{int} at escaped points, for each N in `orders`.
pub fn null_check(s: &NullSeries, set: &CantorSet, points: &[f64], orders: &[usize]) -> Result<NullCheckReport> {
    let depth = set.n_max;
    let mut rows = Vec::with_capacity(points.len());
    let degenerate = s.max_abs() == 0.0;
    if let Some(&bad) = orders.iter().find(|&&n| n > s.m_max) {
        return Err(Error::Capability(format!("order {bad} beyond stored M = {}", s.m_max)));
    }
    for &t in points {
        let level = match set.classify(t, depth)?.status {
            PointStatus::Escaped { level, .. } => level,
            other => return Err(Error::Precondition(format!("point {t} is not escaped ({other:?})"))),
        };
        let top = orders.iter().copied().max().unwrap_or(0);
        let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
        let mut partial = Vec::with_capacity(orders.len());
        let mut sums = alloc::vec![ZERO; top + 1];
        let c0 = s.get(0);
        re.add(c0.re);
        im.add(c0.im);
        sums[0] = Complex64::new(re.sum(), im.sum());
        for n in 1..=top {
            let e = Complex64::from_polar(1.0, n as f64 * t);
            let v = s.get(n as i64) * e + s.get(-(n as i64)) * e.conj();
            re.add(v.re);
            im.add(v.im);
            sums[n] = Complex64::new(re.sum(), im.sum());
        }
        for &n in orders {
            partial.push(sums[n].norm());
        }
        let peak = partial.iter().copied().fold(0.0, f64::max);
        let last = partial.last().copied().unwrap_or(0.0);
        let drop = if last > 0.0 {
            peak / last
        } else if peak > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        rows.push(NullCheckRow { t, level, partial, drop, pass: !degenerate && drop >= NULL_DROP });
    }
    let pass = !degenerate && rows.iter().all(|r| r.pass);
    Ok(NullCheckReport { orders: orders.to_vec(), rows, degenerate, pass })
}

/// Σ_k ∫_{I(n,k)} e^{−imx} dx in closed form.
pub fn interval_exponential_sum(set: &CantorSet, n: usize, m: i64) -> Complex64 {
    let s = set.sigma(n);
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    for &a in &set.a[n] {
        let v = if m == 0 {
            Complex64::new(s, 0.0)
        } else {
            let mf = m as f64;
            (Complex64::from_polar(1.0, -mf * a) - Complex64::from_polar(1.0, -mf * (a + s))) / Complex64::new(0.0, mf)
        };
        re.add(v.re);
        im.add(v.im);
    }
    Complex64::new(re.sum(), im.sum())
}

/// Setup of the moment experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRecipe {
    /// ω.
    pub omega: WeightSpec,
    /// Grid size.
    pub grid: usize,
    /// Depth cap; `None` uses the resolution depth of the grid.
    pub depth_cap: Option<usize>,
    /// Construction settings.
    pub config: PlaConfig,
}

/// X_m for one trial, by the interior-circle route and by direct summation over K_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTrial {
    /// Seed of the Cantor set.
    pub seed: u64,
    /// X_m = 2π(F̂_n(m) − f̂(f·1_{𝕋∖K_n})(m)).
    pub x: Vec<Complex64>,
    /// X_m = 2π·f̂(f·1_{K_n})(m).
    pub x_direct: Vec<Complex64>,
}

/// Depth used for every m of a recipe.
pub fn moment_depth(recipe: &MomentRecipe, m: u64) -> Result<usize> {
    let w2 = derive_omega2(&recipe.omega)?;
    let probe = build_schedule(&w2, 24)?;
    let cap = recipe.depth_cap.unwrap_or_else(|| resolution_depth(&probe, recipe.grid));
    Ok(depth_for(m, recipe.config.depth_constant).min(cap))
}

/// One trial with a fresh Cantor set.
pub fn moment_trial(recipe: &MomentRecipe, ms: &[u64], seed: u64) -> Result<MomentTrial> {
    let depths: Vec<usize> = ms.iter().map(|&m| moment_depth(recipe, m)).collect::<Result<_>>()?;
    let deepest = depths.iter().copied().max().unwrap_or(0);
    let w2 = derive_omega2(&recipe.omega)?;
    let sched = build_schedule(&w2, deepest.max(1))?;
    let set = generate(&sched, deepest.max(1), seed, OffsetMode::Random)?;
    let prof = ProfileFamily::new(set, recipe.omega.clone())?;
    let mut x = alloc::vec![ZERO; ms.len()];
    let mut xd = alloc::vec![ZERO; ms.len()];
    let mut uniq = depths.clone();
    uniq.sort_unstable();
    uniq.dedup();
    for d in uniq {
        let f = build_pla(&prof, d, recipe.grid, &recipe.config)?;
        let out = outside_spectrum(&f)?;
        for (i, &m) in ms.iter().enumerate() {
            if depths[i] != d {
                continue;
            }
            let m = m as usize;
            if m >= f.taylor.len() {
                return Err(Error::Capability(format!("m = {m} beyond the band N/4")));
            }
            x[i] = (f.taylor[m] - out.get(m as i64)) * (2.0 * PI);
            xd[i] = (f.spectrum.get(m as i64) - out.get(m as i64)) * (2.0 * PI);
        }
    }
    Ok(MomentTrial { seed, x, x_direct: xd })
}

/// Moment scaling summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// Frequencies.
    pub ms: Vec<u64>,
    /// Depth used per m.
    pub depths: Vec<usize>,
    /// Number of trials.
    pub trials: usize,
    /// Sample mean of |X_m|⁴.
    pub mean_x4: Vec<f64>,
    /// Sample mean of |X_m|⁴, direct route.
    pub mean_x4_direct: Vec<f64>,
    /// Sample mean of |X_m|².
    pub mean_x2: Vec<f64>,
    /// Log-log slope of mean |X_m|⁴ against m.
    pub slope: f64,
    /// Same slope, direct route.
    pub slope_direct: f64,
    /// Fewer than 30 trials.
    pub warning: Option<String>,
    /// slope ≤ −1.
    pub pass: bool,
}

/// Summarizes trials.
pub fn summarize_moments(ms: &[u64], depths: Vec<usize>, trials: &[MomentTrial]) -> MomentReport {
    let k = trials.len().max(1) as f64;
    let mean = |f: &dyn Fn(&MomentTrial, usize) -> f64, i: usize| trials.iter().map(|t| f(t, i)).sum::<f64>() / k;
    let mean_x4: Vec<f64> = (0..ms.len()).map(|i| mean(&|t, i| t.x[i].norm_sqr().powi(2), i)).collect();
    let mean_x4_direct: Vec<f64> = (0..ms.len()).map(|i| mean(&|t, i| t.x_direct[i].norm_sqr().powi(2), i)).collect();
    let mean_x2: Vec<f64> = (0..ms.len()).map(|i| mean(&|t, i| t.x[i].norm_sqr(), i)).collect();
    let fit = |v: &[f64]| {
        let pts: Vec<(f64, f64)> = ms.iter().zip(v).map(|(&m, &y)| ((m as f64).ln(), y.ln())).collect();
        if pts.len() >= 2 {
            slope(&pts)
        } else {
            f64::NAN
        }
    };
    let slope_v = fit(&mean_x4);
    MomentReport {
        ms: ms.to_vec(),
        depths,
        trials: trials.len(),
        slope_direct: fit(&mean_x4_direct),
        mean_x4,
        mean_x4_direct,
        mean_x2,
        slope: slope_v,
        warning: (trials.len() < MIN_TRIALS).then(|| {
            format!("{} trials is below {MIN_TRIALS}; the slope has no usable confidence interval", trials.len())
        }),
        pass: slope_v <= -1.0,
    }
}

/// Trial count below which the report carries a warning.
pub const MIN_TRIALS: usize = 30;

/// Runs `trials` trials with seeds seed_base, seed_base+1, ...
pub fn moment_experiment(recipe: &MomentRecipe, ms: &[u64], trials: usize, seed_base: u64) -> Result<MomentReport> {
    let depths = ms.iter().map(|&m| moment_depth(recipe, m)).collect::<Result<Vec<_>>>()?;
    let runs =
        (0..trials as u64).map(|i| moment_trial(recipe, ms, seed_base.wrapping_add(i))).collect::<Result<Vec<_>>>()?;
    Ok(summarize_moments(ms, depths, &runs))
}

/// Finite-difference derivative of order d ≤ 4 at grid index j with step `stride`·h.
fn fd_derivative(v: &[Complex64], j: usize, d: usize, stride: usize, h: f64) -> Complex64 {
    let n = v.len();
    let at = |o: isize| v[((j as isize + o * stride as isize).rem_euclid(n as isize)) as usize];
    let hh = stride as f64 * h;
    match d {
        0 => at(0),
        1 => (at(1) - at(-1)) / (2.0 * hh),
        2 => (at(1) - at(0) * 2.0 + at(-1)) / (hh * hh),
        3 => (at(2) - at(1) * 2.0 + at(-1) * 2.0 - at(-2)) / (2.0 * hh * hh * hh),
        _ => (at(2) - at(1) * 4.0 + at(0) * 6.0 - at(-1) * 4.0 + at(-2)) / (hh * hh * hh * hh),
    }
}

/// One probe/order row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessRow {
    /// Grid point.
    pub t: f64,
    /// d(t, K′).
    pub dist: f64,
    /// Order D.
    pub order: usize,
    /// |f^{(D)}(t)|.
    pub deriv: f64,
    /// |f(t)|.
    pub f_abs: f64,
    /// Smallest C′ with |f^{(D)}| ≤ |f|(C′D)^{C′D}/d^{2D}.
    pub c_required: f64,
}

/// Transfer inequality |f̂(m)| ≤ |m|^{−D}‖f^{(D)}‖_∞ at one order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    /// Order D.
    pub order: usize,
    /// ‖f^{(D)}‖_∞ (spectral derivative on a 4× grid).
    pub sup_deriv: f64,
    /// max over m ≠ 0 of |m|^D|f̂(m)| / ‖f^{(D)}‖_∞.
    pub worst_ratio: f64,
    /// worst_ratio ≤ 1.
    pub holds: bool,
}

/// Derivative bounds at escaped probe points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    /// Rows.
    pub rows: Vec<SmoothnessRow>,
    /// Probes dropped because the stencil reaches within 4 steps of K′.
    pub excluded: Vec<f64>,
    /// max C′ over rows (D ≥ 1).
    pub c_fit: f64,
    /// Transfer inequality per order.
    pub transfer: Vec<TransferRow>,
    /// c_fit finite and every transfer row holds.
    pub pass: bool,
}

fn c_for(ratio: f64, d: usize) -> f64 {
    if d == 0 || ratio <= 1.0 {
        return 0.0;
    }
    let target = ratio.ln();
    let (mut lo, mut hi) = (1.0 / (core::f64::consts::E * d as f64), 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let cd = mid * d as f64;
        if cd * cd.ln() >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// |f̂(m)| ≤ |m|^{−D}‖f^{(D)}‖_∞ for D ≤ d_max, with the sup taken from the
/// spectral derivative.
pub fn transfer_check(f: &GridFunction, d_max: usize) -> Result<Vec<TransferRow>> {
    let s = analyze(f)?;
    let n = f.len();
    let mut out = Vec::new();
    for d in 0..=d_max {
        let mut ds = s.clone();
        for j in 0..n {
            let k = s.freq(j);
            let k = if k == s.nyquist() { 0 } else { k };
            ds.coeffs[j] *= Complex64::new(0.0, k as f64).powu(d as u32);
        }
        let sup = synthesize(&ds, 4 * n)?.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for j in 0..n {
            let k = s.freq(j);
            if k == 0 || k == s.nyquist() {
                continue;
            }
            worst = worst.max((k.unsigned_abs() as f64).powi(d as i32) * s.coeffs[j].norm() / sup);
        }
        out.push(TransferRow { order: d, sup_deriv: sup, worst_ratio: worst, holds: worst <= 1.0 + 1e-9 });
    }
    Ok(out)
}

/// Finite-difference bounds |f^{(D)}(x)| ≤ |f(x)|(C′D)^{C′D}/d(x,K′)^{2D}
/// for D ≤ d_max ≤ 4 at the given probe points (snapped to the grid).
pub fn verify_smoothness(
    f: &PlaFunction,
    set: &CantorSet,
    probes: &[f64],
    d_max: usize,
    stride: usize,
) -> Result<SmoothnessReport> {
    if d_max > 4 {
        return Err(Error::Capability(format!("finite differences are limited to D ≤ 4, got {d_max}")));
    }
    let n = f.grid;
    let h = 2.0 * PI / n as f64;
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for &t in probes {
        let j = ((t / h).round() as usize) % n;
        let tj = j as f64 * h;
        let dist = set.distance(tj, Target::KPrime(f.depth))?;
        if dist < 4.0 * (2 * stride) as f64 * h {
            excluded.push(t);
            continue;
        }
        let f_abs = f.boundary.values[j].norm();
        for d in 0..=d_max {
            let deriv = fd_derivative(&f.boundary.values, j, d, stride, h).norm();
            let ratio = deriv * dist.powi(2 * d as i32) / f_abs;
            rows.push(SmoothnessRow { t: tj, dist, order: d, deriv, f_abs, c_required: c_for(ratio, d) });
        }
    }
    let c_fit = rows.iter().filter(|r| r.order > 0).map(|r| r.c_required).fold(0.0, f64::max);
    let transfer = transfer_check(&f.boundary, d_max)?;
    let pass = c_fit.is_finite() && transfer.iter().all(|r| r.holds);
    Ok(SmoothnessReport { rows, excluded, c_fit, transfer, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(n: usize, seed: u64) -> ProfileFamily {
        let w = WeightSpec::t_log2();
        let s = build_schedule(&derive_omega2(&w).unwrap(), n).unwrap();
        ProfileFamily::new(generate(&s, n, seed, OffsetMode::Random).unwrap(), w).unwrap()
    }

    #[test]
    fn depth_rule() {
        assert_eq!(depth_for(1, 2.0), 0);
        assert_eq!(depth_for(2, 2.0), 2);
        assert_eq!(depth_for(3, 2.0), 4);
        assert_eq!(depth_for(4, 2.0), 4);
        assert_eq!(depth_for(1 << 10, 2.0), 20);
    }

    #[test]
    fn depth_zero_is_constant_one() {
        let p = family(4, 0);
        let f = build_pla(&p, 0, 1 << 10, &PlaConfig::default()).unwrap();
        assert!((f.spectrum.get(0) - 1.0).norm() < 1e-14);
        assert!((1..1024).all(|j| f.spectrum.coeffs[j].norm() < 1e-14));
    }

    #[test]
    fn sup_norm_is_exp_plateau() {
        let p = family(5, 3);
        let f = build_pla(&p, 5, 1 << 14, &PlaConfig::default()).unwrap();
        let sup = f.boundary.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((sup - p.plateau[5].exp()).abs() < 1e-12 * sup);
        for (v, g) in f.boundary.values.iter().zip(&f.g.values) {
            assert!((v.norm() - g.re.exp()).abs() <= 1e-8 * v.norm().max(1e-300));
        }
    }

    #[test]
    fn resolution_error() {
        let p = family(6, 0);
        assert!(matches!(build_pla(&p, 6, 1 << 11, &PlaConfig::default()), Err(Error::Resolution(_))));
    }

    #[test]
    fn polynomial_contour() {
        let mut coeffs = alloc::vec![ZERO; 8];
        coeffs[5] = Complex64::new(1.0, 0.0);
        let src = PolynomialSource { coeffs, grid: 64, depth: 30 };
        let cfg = PlaConfig::default();
        assert!((taylor_coeff(&src, 5, &cfg).unwrap() - 1.0).norm() < 1e-12);
        assert!(taylor_coeff(&src, 6, &cfg).unwrap().norm() < 1e-12);
        let one = PolynomialSource { coeffs: alloc::vec![Complex64::new(1.0, 0.0)], grid: 64, depth: 30 };
        assert!((1..40).all(|m| taylor_coeff(&one, m, &cfg).unwrap().norm() < 1e-14));
    }

    #[test]
    fn strict_policy_reports_usable_m() {
        let src = PolynomialSource { coeffs: alloc::vec![Complex64::new(1.0, 0.0)], grid: 64, depth: 6 };
        let cfg = PlaConfig { policy: DepthPolicy::Strict, ..PlaConfig::default() };
        assert!(taylor_coeff(&src, 8, &cfg).is_ok());
        assert!(matches!(taylor_coeff(&src, 9, &cfg), Err(Error::Capability(_))));
    }

    #[test]
    fn contour_agrees_with_interior_circle() {
        let p = family(6, 1);
        let cfg = PlaConfig::default();
        let grid = 1 << 13;
        let ladder = build_ladder(&p, 256, 6, grid, &cfg).unwrap();
        for m in [3u64, 17, 100, 255] {
            let a = taylor_coeff(&ladder, m, &cfg).unwrap();
            let b = ladder.taylor(m as usize, &cfg).unwrap();
            assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "{m}: {a} {b}");
        }
    }

    #[test]
    fn polynomial_null_series_is_trivial() {
        let g = GridFunction::from_fn(64, |t| Complex64::from_polar(1.0, t) * 0.5 + 2.0).unwrap();
        let fh = analyze(&g).unwrap();
        let r = assemble(&fh, |m| Ok(fh.get(m as i64)), 20, 1e-9);
        assert!(matches!(r, Err(Error::Triviality(_))));
    }

    #[test]
    fn decay_identities() {
        let w = WeightSpec::power(2.0).unwrap();
        let r = decay_from(|m| (-w.eval((m as f64).log2()).unwrap()).exp(), &w, 64, 1 << 14, 0.05).unwrap();
        assert!((r.c_hat - 1.0).abs() < 1e-12);
        let r = decay_from(|m| (m as f64).powf(-0.5), &w, 64, 1 << 14, 0.05).unwrap();
        assert!(!r.pass && r.c_hat < 0.05);
    }

    #[test]
    fn exponential_sum_matches_grid() {
        let p = family(4, 2);
        let n = 3;
        let grid = 1 << 16;
        let g = GridFunction::from_real(grid, |t| {
            f64::from(u8::from(matches!(p.set.classify(t, n).unwrap().status, PointStatus::InsideDeepest { .. })))
        })
        .unwrap();
        let s = analyze(&g).unwrap();
        for m in [0i64, 5, 40] {
            let closed = interval_exponential_sum(&p.set, n, m) / (2.0 * PI);
            assert!((s.get(m) - closed).norm() < 1e-4);
        }
    }

    #[test]
    fn transfer_on_smooth_oracle() {
        let f = GridFunction::from_real(256, |t| t.cos().exp()).unwrap();
        let rows = transfer_check(&f, 4).unwrap();
        assert!(rows.iter().all(|r| r.holds));
    }
}
