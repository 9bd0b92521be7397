//! Privalov domains, harmonic measure by walk-on-spheres, the truncation
//! lemma and the ε_k audit of the uniqueness argument.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cantor::wrap;
use crate::fft::Fft;
use crate::quad::Neumaier;
use crate::rng;
use crate::weights::WeightSpec;
use crate::{Error, Result};

/// Closed arc {e^{it} : start ≤ t ≤ start + len} (radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    /// Start angle.
    pub start: f64,
    /// Length, 0 < len ≤ 2π.
    pub len: f64,
}

impl Arc {
    /// Arc of length `len` centred at angle `mid`.
    pub fn centered(mid: f64, len: f64) -> Self {
        Arc { start: wrap(mid - 0.5 * len), len }
    }

    /// Whether angle t lies on the arc.
    pub fn contains(&self, t: f64) -> bool {
        self.len >= TAU || wrap(t - self.start) <= self.len
    }

    /// Length of the intersection with another arc.
    pub fn overlap(&self, o: &Arc) -> f64 {
        if self.len >= TAU {
            return o.len.min(TAU);
        }
        if o.len >= TAU {
            return self.len;
        }
        let s = wrap(o.start - self.start);
        let a = (self.len.min(s + o.len) - s).max(0.0);
        let b = (o.len - (TAU - s)).clamp(0.0, self.len);
        a + b
    }
}

/// The disk D_I removed over a gap I of E.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivalovDisk {
    /// The gap.
    pub gap: Arc,
    /// Centre of the orthogonal circle.
    pub center: Complex64,
    /// Its radius.
    pub radius: f64,
    /// The gap exceeds a half circle, so 𝔻∖D_I is removed instead.
    pub keep_inside: bool,
}

impl PrivalovDisk {
    /// Orthogonal circle through the endpoints of `gap`.
    pub fn new(gap: Arc) -> Result<Self> {
        let th = 0.5 * gap.len;
        if !(th > 0.0 && th < PI) || (th - PI / 2.0).abs() < 1e-12 {
            return Err(Error::Value(format!("gap of length {} has no orthogonal disk", gap.len)));
        }
        let mid = gap.start + th;
        let (c, keep_inside) = if th < PI / 2.0 { (th, false) } else { (PI - th, true) };
        let dir = if keep_inside { mid + PI } else { mid };
        Ok(PrivalovDisk { gap, center: Complex64::from_polar(1.0 / c.cos(), dir), radius: c.tan(), keep_inside })
    }

    /// Signed distance to the removed part (positive inside the domain).
    pub fn clearance(&self, w: Complex64) -> f64 {
        let r = (w - self.center).norm();
        if self.keep_inside {
            self.radius - r
        } else {
            r - self.radius
        }
    }
}

/// 𝒫(E), optionally cut at an inner radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivalovDomain {
    /// Arcs of E, disjoint, sorted by start.
    pub arcs: Vec<Arc>,
    /// Inner cutoff radius.
    pub inner: Option<f64>,
    /// One disk per gap.
    pub disks: Vec<PrivalovDisk>,
}

impl PrivalovDomain {
    /// Builds the domain over E.
    pub fn new(mut arcs: Vec<Arc>, inner: Option<f64>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::Value("E must contain at least one arc".into()));
        }
        if let Some(r) = inner {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Value(format!("inner radius {r} outside [0, 1)")));
            }
        }
        for a in &mut arcs {
            if !(a.len > 0.0 && a.len <= TAU) {
                return Err(Error::Value(format!("arc length {} outside (0, 2π]", a.len)));
            }
            a.start = wrap(a.start);
        }
        arcs.sort_by(|a, b| a.start.total_cmp(&b.start));
        let total: f64 = arcs.iter().map(|a| a.len).sum();
        let mut disks = Vec::new();
        if arcs.len() == 1 && arcs[0].len >= TAU {
            return Ok(PrivalovDomain { arcs, inner, disks });
        }
        if total >= TAU {
            return Err(Error::Value("arcs of E overlap".into()));
        }
        for (i, a) in arcs.iter().enumerate() {
            let next = arcs[(i + 1) % arcs.len()];
            let end = a.start + a.len;
            let gap = wrap(next.start - end);
            let gap = if arcs.len() == 1 { TAU - a.len } else { gap };
            if gap <= 0.0 || (arcs.len() > 1 && wrap(next.start - a.start) < a.len) {
                return Err(Error::Value("arcs of E overlap".into()));
            }
            disks.push(PrivalovDisk::new(Arc { start: wrap(end), len: gap })?);
        }
        Ok(PrivalovDomain { arcs, inner, disks })
    }

    /// Normalized measure m(E).
    pub fn measure(&self) -> f64 {
        self.arcs.iter().map(|a| a.len).sum::<f64>() / TAU
    }
}

/// Domains the walk can run in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Unit disk.
    Disk,
    /// {inner ≤ |w| ≤ 1}.
    Annulus {
        /// Inner radius.
        inner: f64,
    },
    /// Privalov domain.
    Privalov(PrivalovDomain),
}

/// Boundary component an exit is attributed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// The unit circle.
    Unit,
    /// The inner circle.
    Inner,
    /// The circle of the i-th Privalov disk.
    Disk(usize),
}

/// Subset of the boundary whose harmonic measure is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryTarget {
    /// The whole boundary.
    All,
    /// The unit circle (for a Privalov domain: E).
    UnitCircle,
    /// An arc of the unit circle.
    UnitArc {
        /// The arc.
        arc: Arc,
    },
    /// The inner circle.
    InnerCircle,
    /// The Privalov circles.
    PrivalovCircles,
}

impl BoundaryTarget {
    fn hit(&self, e: &Exit) -> bool {
        match (self, e.component) {
            (BoundaryTarget::All, _) => true,
            (BoundaryTarget::UnitCircle, Component::Unit) => true,
            (BoundaryTarget::UnitArc { arc }, Component::Unit) => arc.contains(e.point.arg()),
            (BoundaryTarget::InnerCircle, Component::Inner) => true,
            (BoundaryTarget::PrivalovCircles, Component::Disk(_)) => true,
            _ => false,
        }
    }
}

impl Domain {
    fn inner(&self) -> Option<f64> {
        match self {
            Domain::Disk => None,
            Domain::Annulus { inner } => Some(*inner),
            Domain::Privalov(p) => p.inner,
        }
    }

    /// (distance to the boundary, nearest component, distance to the second nearest).
    pub fn nearest(&self, w: Complex64) -> (f64, Component, f64) {
        let r = w.norm();
        let mut best = (1.0 - r, Component::Unit);
        let mut second = f64::INFINITY;
        let mut offer = |d: f64, c: Component| {
            if d < best.0 {
                second = best.0;
                best = (d, c);
            } else if d < second {
                second = d;
            }
        };
        if let Some(ri) = self.inner() {
            offer(r - ri, Component::Inner);
        }
        if let Domain::Privalov(p) = self {
            for (i, d) in p.disks.iter().enumerate() {
                offer(d.clearance(w), Component::Disk(i));
            }
        }
        (best.0, best.1, second)
    }

    /// Strict interior test.
    pub fn contains(&self, w: Complex64) -> bool {
        self.nearest(w).0 > 0.0
    }

    fn project(&self, w: Complex64, c: Component) -> Complex64 {
        let unit = |v: Complex64| if v.norm() > 0.0 { v / v.norm() } else { Complex64::new(1.0, 0.0) };
        match (c, self) {
            (Component::Unit, _) => unit(w),
            (Component::Inner, _) => unit(w) * self.inner().unwrap_or(0.0),
            (Component::Disk(i), Domain::Privalov(p)) => {
                let d = &p.disks[i];
                d.center + unit(w - d.center) * d.radius
            }
            (Component::Disk(_), _) => unit(w),
        }
    }
}

/// Walk-on-spheres settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WosParams {
    /// Step radius as a fraction of the distance to the boundary.
    pub step_factor: f64,
    /// Absorption distance ε_stop.
    pub eps_stop: f64,
    /// Step cap per path; paths reaching it count as ambiguous.
    pub max_steps: usize,
}

impl Default for WosParams {
    fn default() -> Self {
        WosParams { step_factor: 0.95, eps_stop: 1e-5, max_steps: 100_000 }
    }
}

/// Absorption of one path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exit {
    /// Nearest component at absorption.
    pub component: Component,
    /// Absorption point projected onto that component.
    pub point: Complex64,
    /// Another component was within 2·ε_stop, or the step cap was hit.
    pub ambiguous: bool,
}

/// One walk-on-spheres path from z, driven by the stream (seed, index).
pub fn walk(dom: &Domain, z: Complex64, seed: u64, index: u64, p: &WosParams) -> Exit {
    let mut r = rng::stream(seed, index);
    let mut w = z;
    for _ in 0..p.max_steps {
        let (d, c, d2) = dom.nearest(w);
        if d < p.eps_stop {
            return Exit { component: c, point: dom.project(w, c), ambiguous: d2 < 2.0 * p.eps_stop };
        }
        w += Complex64::from_polar(p.step_factor * d, TAU * rng::uniform(&mut r));
    }
    let (_, c, _) = dom.nearest(w);
    Exit { component: c, point: dom.project(w, c), ambiguous: true }
}

/// Monte Carlo harmonic measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMeasureEstimate {
    /// Estimate.
    pub value: f64,
    /// Standard error.
    pub stderr: f64,
    /// Paths used.
    pub paths: usize,
    /// Seed.
    pub seed: u64,
    /// Ambiguous absorptions.
    pub ambiguous: usize,
    /// Walk settings.
    pub params: WosParams,
}

impl HarmonicMeasureEstimate {
    /// Ambiguous fraction below 0.5%.
    pub fn ambiguity_ok(&self) -> bool {
        (self.ambiguous as f64) < 0.005 * self.paths as f64
    }
}

/// Minimum number of paths.
pub const MIN_PATHS: usize = 1000;

fn check_start(dom: &Domain, z: Complex64, paths: usize) -> Result<()> {
    if paths < MIN_PATHS {
        return Err(Error::Precondition(format!("{paths} paths, need at least {MIN_PATHS}")));
    }
    if !dom.contains(z) {
        return Err(Error::Domain(format!("start point {z} is not strictly inside the domain")));
    }
    Ok(())
}

/// E h(B(T)) with its standard error, plus the ambiguous count.
pub fn exit_expectation(
    dom: &Domain,
    z: Complex64,
    h: impl Fn(&Exit) -> f64,
    paths: usize,
    seed: u64,
    p: &WosParams,
) -> Result<(f64, f64, usize)> {
    check_start(dom, z, paths)?;
    let (mut s1, mut s2) = (Neumaier::default(), Neumaier::default());
    let mut amb = 0;
    for i in 0..paths as u64 {
        let e = walk(dom, z, seed, i, p);
        amb += usize::from(e.ambiguous);
        let v = h(&e);
        s1.add(v);
        s2.add(v * v);
    }
    let n = paths as f64;
    let mean = s1.sum() / n;
    let var = ((s2.sum() / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt(), amb))
}

/// Ω(z, 𝒟)(target) with binomial standard error.
pub fn harmonic_measure(
    dom: &Domain,
    z: Complex64,
    target: &BoundaryTarget,
    paths: usize,
    seed: u64,
    p: &WosParams,
) -> Result<HarmonicMeasureEstimate> {
    let (value, _, ambiguous) = exit_expectation(dom, z, |e| f64::from(u8::from(target.hit(e))), paths, seed, p)?;
    let stderr = (value * (1.0 - value) / paths as f64).sqrt();
    Ok(HarmonicMeasureEstimate { value, stderr, paths, seed, ambiguous, params: *p })
}

/// log|w| / log(1 − l): probability of reaching the inner circle of {1−l ≤ |w| ≤ 1} first.
pub fn annulus_inner_measure(w: Complex64, l: f64) -> f64 {
    w.norm().ln() / (1.0 - l).ln()
}

/// Setup of the Privalov harmonic-measure lemma.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmprivScenario {
    /// ε.
    pub eps: f64,
    /// l = (1 − |z|)/ε, normalized arc length of I(ζ, l).
    pub l: f64,
    /// Angle of ζ = z/|z|.
    pub zeta: f64,
    /// Gaps of E (radians).
    pub gaps: Vec<Arc>,
}

impl HarmprivScenario {
    /// One gap of normalized mass ε²l centred at ζ.
    pub fn single_gap(eps: f64, l: f64, zeta: f64) -> Self {
        HarmprivScenario { eps, l, zeta, gaps: alloc::vec![Arc::centered(zeta, TAU * eps * eps * l)] }
    }

    /// E = 𝕋.
    pub fn full_circle(eps: f64, l: f64, zeta: f64) -> Self {
        HarmprivScenario { eps, l, zeta, gaps: Vec::new() }
    }

    /// Start point z = (1 − εl)e^{iζ}.
    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(1.0 - self.eps * self.l, self.zeta)
    }

    /// m(I(ζ, l) ∖ E), normalized.
    pub fn missing_mass(&self) -> f64 {
        let i = Arc::centered(self.zeta, TAU * self.l);
        self.gaps.iter().map(|g| i.overlap(g)).sum::<f64>() / TAU
    }

    /// The component of 𝒫(E) ∖ (1−l)𝔻 as a domain.
    pub fn domain(&self) -> Result<Domain> {
        let inner = Some(1.0 - self.l);
        if self.gaps.is_empty() {
            return Ok(Domain::Privalov(PrivalovDomain::new(alloc::vec![Arc { start: 0.0, len: TAU }], inner)?));
        }
        let mut gaps = self.gaps.clone();
        gaps.sort_by(|a, b| wrap(a.start).total_cmp(&wrap(b.start)));
        let arcs = (0..gaps.len())
            .map(|i| {
                let end = gaps[i].start + gaps[i].len;
                let next = if i + 1 < gaps.len() { gaps[i + 1].start } else { gaps[0].start + TAU };
                Arc { start: wrap(end), len: next - end }
            })
            .collect();
        Ok(Domain::Privalov(PrivalovDomain::new(arcs, inner)?))
    }
}

/// Outcome of the Privalov harmonic-measure check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmprivReport {
    /// Scenario.
    pub scenario: HarmprivScenario,
    /// Ω(z, 𝒟)(E).
    pub estimate: HarmonicMeasureEstimate,
    /// 1 − Ω.
    pub deficit: f64,
    /// Fitted C₁ = (1 − Ω)/ε.
    pub c1: f64,
    /// Admissible bound on C₁.
    pub c1_max: f64,
    /// c1 ≤ c1_max.
    pub pass: bool,
}

/// Bound on the fitted C₁.
pub const C1_MAX: f64 = 20.0;

/// Estimates Ω(z, 𝒟)(E) and fits C₁ in Ω > 1 − C₁ε.
pub fn check_harmpriv(sc: &HarmprivScenario, paths: usize, seed: u64, p: &WosParams) -> Result<HarmprivReport> {
    if !(sc.eps > 0.0 && sc.eps < 1.0 && sc.l > 0.0 && sc.l < 1.0) {
        return Err(Error::Precondition(format!("need 0 < ε, l < 1; got ε = {}, l = {}", sc.eps, sc.l)));
    }
    let miss = sc.missing_mass();
    if miss > sc.eps * sc.eps * sc.l * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("m(I(ζ,l)∖E) = {miss} exceeds ε²l = {}", sc.eps * sc.eps * sc.l)));
    }
    let dom = sc.domain()?;
    let z = sc.z();
    if !dom.contains(z) {
        return Err(Error::Precondition(format!("z = {z} is not in the Privalov domain")));
    }
    let estimate = harmonic_measure(&dom, z, &BoundaryTarget::UnitCircle, paths, seed, p)?;
    let deficit = 1.0 - estimate.value;
    let c1 = deficit / sc.eps;
    Ok(HarmprivReport { scenario: sc.clone(), estimate, deficit, c1, c1_max: C1_MAX, pass: c1 <= C1_MAX })
}

/// Truncation inequality ∫max(L, D) dμ ≤ εB + (1−ε)D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    /// ε from ∫L = εB + (1−ε)A.
    pub eps: f64,
    /// ∫max(L, D) dμ.
    pub lhs: f64,
    /// εB + (1−ε)D.
    pub rhs: f64,
    /// lhs ≤ rhs up to rounding.
    pub holds: bool,
}

/// Checks the truncation inequality for samples L with probability weights μ.
pub fn truncation_lemma(values: &[f64], weights: &[f64], a: f64, b: f64, d: f64) -> Result<TruncationCheck> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(Error::Shape(format!("{} values vs {} weights", values.len(), weights.len())));
    }
    if !(a < b && d > a && d < b) {
        return Err(Error::Precondition(format!("need A < D < B, got A = {a}, D = {d}, B = {b}")));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Precondition("weights must be non-negative".into()));
    }
    let total = crate::quad::nsum(weights.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("weights sum to {total}, not 1")));
    }
    if values.iter().any(|&v| v < a || v > b) {
        return Err(Error::Precondition("sample outside [A, B]".into()));
    }
    let int_l = crate::quad::nsum(values.iter().zip(weights).map(|(v, w)| v * w));
    if int_l < a || int_l > b {
        return Err(Error::Precondition(format!("∫L = {int_l} outside [A, B]")));
    }
    let eps = (int_l - a) / (b - a);
    let lhs = crate::quad::nsum(values.iter().zip(weights).map(|(v, w)| v.max(d) * w));
    let rhs = eps * b + (1.0 - eps) * d;
    let scale = a.abs().max(b.abs()).max(d.abs());
    Ok(TruncationCheck { eps, lhs, rhs, holds: lhs <= rhs + 1e-12 * scale })
}

/// Laurent coefficients c(n), n ≥ −len(neg).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentData {
    /// c(−1), c(−2), ...
    pub neg: Vec<Complex64>,
    /// c(0), c(1), ...
    pub pos: Vec<Complex64>,
}

impl LaurentData {
    /// From a two-sided table indexed n + M.
    pub fn from_centered(coeffs: &[Complex64], m: usize) -> Result<Self> {
        if coeffs.len() != 2 * m + 1 {
            return Err(Error::Shape(format!("expected {} coefficients, got {}", 2 * m + 1, coeffs.len())));
        }
        Ok(LaurentData { neg: (1..=m).map(|k| coeffs[m - k]).collect(), pos: coeffs[m..].to_vec() })
    }

    /// c(−m) = e^{−ω(log₂ m)} for 1 ≤ m ≤ m_max, c(n ≥ 0) = 0.
    pub fn synthetic_tail(w: &WeightSpec, m_max: usize) -> Result<Self> {
        let neg =
            (1..=m_max).map(|m| Ok(Complex64::new((-w.eval((m as f64).log2())?).exp(), 0.0))).collect::<Result<_>>()?;
        Ok(LaurentData { neg, pos: Vec::new() })
    }

    /// c(n).
    pub fn get(&self, n: i64) -> Complex64 {
        let z = Complex64::new(0.0, 0.0);
        if n < 0 {
            self.neg.get((-n - 1) as usize).copied().unwrap_or(z)
        } else {
            self.pos.get(n as usize).copied().unwrap_or(z)
        }
    }

    /// f_k on the circle of radius r at Q equispaced nodes.
    pub fn circle(&self, k: usize, r: f64, q: usize) -> Result<Vec<Complex64>> {
        let lo = 1usize << k;
        if lo > self.neg.len() {
            return Err(Error::Capability(format!(
                "f_{k} needs c(n) for n ≥ −{lo}; only {} negative terms",
                self.neg.len()
            )));
        }
        let mut a = alloc::vec![Complex64::new(0.0, 0.0); q];
        for (i, c) in self.neg[..lo].iter().enumerate() {
            let m = i + 1;
            a[(q - m % q) % q] += c * r.powi(-(m as i32));
        }
        for (n, c) in self.pos.iter().enumerate() {
            a[n % q] += c * r.powi(n as i32);
        }
        Fft::new(q)?.inverse(&mut a)?;
        Ok(a)
    }

    /// f_k(z).
    pub fn eval(&self, k: usize, z: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        let zi = z.inv();
        let mut p = zi;
        for c in self.neg.iter().take(1 << k) {
            s += c * p;
            p *= zi;
        }
        let mut p = Complex64::new(1.0, 0.0);
        for c in &self.pos {
            s += c * p;
            p *= z;
        }
        s
    }
}

/// Nodes used on circle r_k: 2^{max(12, k+6)}.
pub fn audit_nodes(k: usize) -> usize {
    1usize << 12.max(k + 6)
}

/// r_k = 1 − 4^{−k}.
pub fn r_k(k: usize) -> f64 {
    1.0 - 0.25f64.powi(k as i32)
}

/// One row of the audit at a fixed z₀.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    /// k.
    pub k: usize,
    /// r_k.
    pub r_k: f64,
    /// A_k = −ω(k)/2.
    #[serde(rename = "A_k")]
    pub a_k: f64,
    /// B_k = C₂k.
    #[serde(rename = "B_k")]
    pub b_k: f64,
    /// 𝓘_k = ∫[l_k]_{A_k} dP_k.
    #[serde(rename = "I_k")]
    pub i_k: f64,
    /// ε_k.
    pub eps_k: f64,
    /// ε′_k, from ∫[l_k]_{A_k} dP_{k−1}.
    pub eps_prime_k: f64,
    /// ∫[l_{k+1}]_{A_{k+1}} dP_k − 𝓘_{k+1}.
    pub shift_excess: f64,
    /// 𝓘_k − ∫[l_{k+1}]_{A_k} dP_k.
    pub step_excess: f64,
    /// εB + (1−ε)D − ∫max(L, D) for L = [l_{k+1}]_{A_{k+1}} on r_k, D = A_k.
    pub truncation_slack: f64,
    /// ε′_k.
    pub ineq_lhs: f64,
    /// ε′_{k+1}(1 + C₂/(B_k − A_k)) + (C k²2^{−k} + C′e^{−ω(k)/2})/(B_k − A_k).
    pub ineq_rhs: f64,
    /// Same right side with both fitted constants set to zero.
    pub ineq_rhs_bare: f64,
    /// Nodes where f vanished and were excluded.
    pub excluded_nodes: usize,
    /// ineq_lhs ≤ ineq_rhs.
    pub pass: bool,
}

/// Audit at one z₀.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditPoint {
    /// z₀.
    pub z0: Complex64,
    /// Rows.
    pub rows: Vec<AuditRow>,
}

/// The ε_k audit for one δ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessAudit {
    /// δ.
    pub delta: f64,
    /// |z₀| = 1 − √δ.
    pub z0_radius: f64,
    /// Deepest k.
    pub k_max: usize,
    /// k₀ = ⌈log₂ 1/δ⌉ + 1.
    pub k0: usize,
    /// Fitted C₂ in l_k ≤ C₂k.
    pub c2: f64,
    /// Fitted constant of the circle shift, in units of k²2^{−k}.
    pub c_shift: f64,
    /// Fitted constant of the f_k → f_{k+1} step, in units of e^{−ω(k)/2}.
    pub c_step: f64,
    /// Per-z₀ tables.
    pub points: Vec<AuditPoint>,
    /// Every row passes.
    pub recursion_pass: bool,
    /// Largest ε_{k₀} over the z₀.
    pub eps_k0: f64,
    /// ε_{k₀}/√δ.
    pub eps_k0_over_sqrt_delta: f64,
    /// max log|f_{k₀}| on |z| = 1 − √δ.
    pub l_k0_max: f64,
    /// c = −l_k0_max / ω(log₂ 1/δ).
    pub c_fit: f64,
    /// c > 0.
    pub chain_positive: bool,
    /// |c(n)| ≤ (1−√δ)^{−1−n}e^{−cω(log₂1/δ)} for −2^{k₀} ≤ n ≤ 2^{k₀}.
    pub laurent_holds: bool,
    /// Approximations made.
    pub notes: Vec<String>,
}

/// ω'(k) = min(ω(k), k²).
fn omega_capped(w: &WeightSpec, k: f64) -> Result<f64> {
    Ok(w.eval(k)?.min(k * k))
}

fn poisson_weights(z0: Complex64, r: f64, q: usize) -> Vec<f64> {
    let r2 = r * r - z0.norm_sqr();
    (0..q)
        .map(|j| {
            let w = Complex64::from_polar(r, TAU * j as f64 / q as f64);
            r2 / (w - z0).norm_sqr() / q as f64
        })
        .collect()
}

/// ∫[log|f|]_A dP over nodes, skipping zeros; (value, excluded).
fn truncated_integral(vals: &[Complex64], p: &[f64], a: f64) -> (f64, usize) {
    let mut s = Neumaier::default();
    let mut ex = 0;
    for (v, w) in vals.iter().zip(p) {
        let n = v.norm();
        if n == 0.0 {
            ex += 1;
        } else {
            s.add(n.ln().max(a) * w);
        }
    }
    (s.sum(), ex)
}

/// Audits the ε_k recursion at |z₀| = 1 − √δ for the given angles.
pub fn audit_theorem2(
    c: &LaurentData,
    w: &WeightSpec,
    delta: f64,
    k_max: usize,
    angles: &[f64],
) -> Result<UniquenessAudit> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ = {delta} outside (0, 1)")));
    }
    if c.neg.iter().chain(&c.pos).all(|v| v.norm() == 0.0) {
        return Err(Error::Triviality("the audit needs a nontrivial series".into()));
    }
    let k0 = (1.0 / delta).log2().ceil() as usize + 1;
    if k_max < k0 {
        return Err(Error::Capability(format!("k_max = {k_max} below k₀ = {k0}")));
    }
    if (1usize << (k_max + 1)) > c.neg.len() {
        return Err(Error::Capability(format!(
            "audit to k = {} needs c(n) for n ≥ −{}; only {} negative terms",
            k_max + 1,
            1usize << (k_max + 1),
            c.neg.len()
        )));
    }
    let rho0 = 1.0 - delta.sqrt();
    let mut notes = Vec::new();

    let mut c2 = 0.0f64;
    for k in 1..=k_max + 1 {
        let q = audit_nodes(k);
        let (lo, hi) = (1.0 - 0.5f64.powi(k as i32), 1.0 - 0.125f64.powi(k as i32));
        let mut radii: Vec<f64> = (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
        radii.push(r_k(k));
        if k >= 2 {
            radii.push(r_k(k - 1));
        }
        for r in radii {
            let v = c.circle(k, r, q)?;
            let m = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
            c2 = c2.max(m.ln() / k as f64);
        }
    }
    notes.push(String::from(
        "C2 is the maximum of l_k/k over sampled circles of the annuli; boundary continuity on the Privalov set is replaced by these sampled maxima",
    ));

    let k_first = (1..=k_max).find(|&k| k >= 2 && r_k(k - 1) > rho0).unwrap_or(k_max);
    struct Raw {
        k: usize,
        a: f64,
        b: f64,
        i_k: f64,
        eps_k: f64,
        eps_p: f64,
        shift: f64,
        step: f64,
        trunc: f64,
        ex: usize,
    }
    let mut raws: Vec<(Complex64, Vec<Raw>)> = Vec::new();
    for &ang in angles {
        let z0 = Complex64::from_polar(rho0, ang);
        let mut rows = Vec::new();
        for k in k_first..=k_max {
            let q = audit_nodes(k + 1);
            let a = -omega_capped(w, k as f64)? / 2.0;
            let a1 = -omega_capped(w, (k + 1) as f64)? / 2.0;
            let b = c2 * k as f64;
            let b1 = c2 * (k + 1) as f64;
            let pk = poisson_weights(z0, r_k(k), q);
            let pk1 = poisson_weights(z0, r_k(k - 1), q);
            let pk_next = poisson_weights(z0, r_k(k + 1), q);
            let lk_rk = c.circle(k, r_k(k), q)?;
            let lk_rk1 = c.circle(k, r_k(k - 1), q)?;
            let lk1_rk = c.circle(k + 1, r_k(k), q)?;
            let lk1_rk1 = c.circle(k + 1, r_k(k + 1), q)?;
            let (i_k, e1) = truncated_integral(&lk_rk, &pk, a);
            let (ip, e2) = truncated_integral(&lk_rk1, &pk1, a);
            let (shift_l, e3) = truncated_integral(&lk1_rk, &pk, a1);
            let (i_next, e4) = truncated_integral(&lk1_rk1, &pk_next, a1);
            let (step_r, _) = truncated_integral(&lk1_rk, &pk, a);
            let vals: Vec<f64> = lk1_rk.iter().map(|v| v.norm().ln().max(a1).min(b1)).collect();
            let tot = crate::quad::nsum(pk.iter().copied());
            let wn: Vec<f64> = pk.iter().map(|p| p / tot).collect();
            let trunc = match truncation_lemma(&vals, &wn, a1, b1, a) {
                Ok(t) => t.rhs - t.lhs,
                Err(_) => f64::NAN,
            };
            rows.push(Raw {
                k,
                a,
                b,
                i_k,
                eps_k: (i_k - a) / (b - a),
                eps_p: (ip - a) / (b - a),
                shift: shift_l - i_next,
                step: i_k - step_r,
                trunc,
                ex: e1 + e2 + e3 + e4,
            });
        }
        raws.push((z0, rows));
    }
    let mut c_shift = 0.0f64;
    let mut c_step = 0.0f64;
    for (_, rows) in &raws {
        for r in rows {
            let k = r.k as f64;
            c_shift = c_shift.max(r.shift / (k * k * 0.5f64.powi(r.k as i32)));
            c_step = c_step.max(r.step / (2.0 * r.a).exp());
        }
    }
    let mut points = Vec::new();
    let mut recursion_pass = true;
    let mut eps_k0 = f64::NEG_INFINITY;
    for (z0, rows) in raws {
        let mut out = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let Some(next) = rows.get(i + 1) else { break };
            let k = r.k as f64;
            let gap = r.b - r.a;
            let bare = next.eps_p * (1.0 + c2 / gap);
            let rhs = bare + (c_shift * k * k * 0.5f64.powi(r.k as i32) + c_step * (2.0 * r.a).exp()) / gap;
            let pass = r.eps_p <= rhs + 1e-12;
            recursion_pass &= pass;
            out.push(AuditRow {
                k: r.k,
                r_k: r_k(r.k),
                a_k: r.a,
                b_k: r.b,
                i_k: r.i_k,
                eps_k: r.eps_k,
                eps_prime_k: r.eps_p,
                shift_excess: r.shift,
                step_excess: r.step,
                truncation_slack: r.trunc,
                ineq_lhs: r.eps_p,
                ineq_rhs: rhs,
                ineq_rhs_bare: bare,
                excluded_nodes: r.ex,
                pass,
            });
        }
        if let Some(r) = rows.iter().find(|r| r.k == k0) {
            eps_k0 = eps_k0.max(r.eps_k);
        }
        points.push(AuditPoint { z0, rows: out });
    }
    if points.iter().any(|p| p.rows.iter().any(|r| r.excluded_nodes > 0)) {
        notes.push(String::from("nodes with f_k = 0 were excluded from the quadrature"));
    }

    let q0 = audit_nodes(k0).max(4 << k0);
    let circ = c.circle(k0, rho0, q0)?;
    let l_k0_max = circ.iter().map(|v| v.norm()).fold(0.0, f64::max).ln();
    let om = omega_capped(w, (1.0 / delta).log2())?;
    let c_fit = -l_k0_max / om;
    let bound = |n: i64| rho0.powf(-1.0 - n as f64) * (-c_fit * om).exp();
    let span = 1i64 << k0;
    let laurent_holds = (-span..=span).all(|n| c.get(n).norm() <= bound(n) * (1.0 + 1e-9));
    Ok(UniquenessAudit {
        delta,
        z0_radius: rho0,
        k_max,
        k0,
        c2,
        c_shift,
        c_step,
        points,
        recursion_pass,
        eps_k0,
        eps_k0_over_sqrt_delta: eps_k0 / delta.sqrt(),
        l_k0_max,
        c_fit,
        chain_positive: c_fit > 0.0,
        laurent_holds,
        notes,
    })
}

/// Default z₀ angles of the audit.
pub const AUDIT_ANGLES: [f64; 3] = [0.0, PI / 3.0, PI];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn privalov_disk_is_orthogonal() {
        for len in [0.1, 1.0, 3.0, 4.0, 6.0] {
            let d = PrivalovDisk::new(Arc { start: 0.7, len }).unwrap();
            assert!((d.center.norm_sqr() - 1.0 - d.radius * d.radius).abs() < 1e-12);
            for t in [0.7, 0.7 + len] {
                let e = Complex64::from_polar(1.0, t);
                assert!(((e - d.center).norm() - d.radius).abs() < 1e-12);
            }
            let mid = Complex64::from_polar(0.999, 0.7 + len / 2.0);
            assert!(d.clearance(mid) < 0.0);
        }
    }

    #[test]
    fn arc_overlap() {
        let a = Arc { start: 6.0, len: 1.0 };
        let b = Arc { start: 0.0, len: 0.5 };
        assert!((a.overlap(&b) - 0.5).abs() < 1e-12);
        let c = Arc { start: 5.5, len: 1.5 };
        assert!((Arc { start: 0.0, len: 6.0 }.overlap(&c) - (0.5 + 1.5 - (TAU - 5.5))).abs() < 1e-12);
        assert!((b.overlap(&a) - a.overlap(&b)).abs() < 1e-12);
        assert_eq!(Arc { start: 1.0, len: 0.2 }.overlap(&Arc { start: 2.0, len: 0.2 }), 0.0);
    }

    #[test]
    fn disk_arc_measure() {
        let p = WosParams::default();
        let arc = Arc { start: 0.3, len: 1.0 };
        let e =
            harmonic_measure(&Domain::Disk, Complex64::new(0.0, 0.0), &BoundaryTarget::UnitArc { arc }, 20_000, 1, &p)
                .unwrap();
        assert!((e.value - 1.0 / TAU).abs() < 3.0 * e.stderr);
        let all = harmonic_measure(&Domain::Disk, Complex64::new(0.3, 0.1), &BoundaryTarget::All, 2000, 1, &p).unwrap();
        assert_eq!(all.value, 1.0);
    }

    #[test]
    fn start_outside_is_rejected() {
        let p = WosParams::default();
        let r = harmonic_measure(&Domain::Disk, Complex64::new(1.0, 0.0), &BoundaryTarget::All, 2000, 1, &p);
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = harmonic_measure(&Domain::Disk, Complex64::new(0.0, 0.0), &BoundaryTarget::All, 10, 1, &p);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn truncation_equality_case() {
        let (a, b, d, e) = (-3.0, 2.0, 0.5, 0.3);
        let t = truncation_lemma(&[a, b], &[1.0 - e, e], a, b, d).unwrap();
        assert!((t.eps - e).abs() < 1e-12);
        assert!((t.lhs - t.rhs).abs() < 1e-12);
        let t = truncation_lemma(&[b], &[1.0], a, b, d).unwrap();
        assert!((t.eps - 1.0).abs() < 1e-15 && (t.lhs - b).abs() < 1e-15 && (t.rhs - b).abs() < 1e-15);
        assert!(matches!(truncation_lemma(&[3.0], &[1.0], a, b, d), Err(Error::Precondition(_))));
    }

    #[test]
    fn single_term_audit_matches_closed_form() {
        let mut c = LaurentData {
            neg: alloc::vec![Complex64::new(0.0, 0.0); 1 << 8],
            pos: alloc::vec![Complex64::new(0.0, 0.0); 6],
        };
        c.pos[5] = Complex64::new(1.0, 0.0);
        let w = WeightSpec::power(2.0).unwrap();
        let a = audit_theorem2(&c, &w, 1.0 / 16.0, 6, &[0.0]).unwrap();
        assert!(a.c2 == 0.0);
        for r in &a.points[0].rows {
            let l = 5.0 * r.r_k.ln();
            assert!((r.i_k - l.max(r.a_k)).abs() < 1e-10, "{} {}", r.i_k, l);
            assert!((r.eps_k - (l.max(r.a_k) - r.a_k) / (r.b_k - r.a_k)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_series_is_rejected() {
        let c = LaurentData { neg: alloc::vec![Complex64::new(0.0, 0.0); 1 << 12], pos: Vec::new() };
        let w = WeightSpec::power(2.0).unwrap();
        assert!(matches!(audit_theorem2(&c, &w, 1.0 / 16.0, 6, &[0.0]), Err(Error::Triviality(_))));
    }

    #[test]
    fn circle_values_match_direct_sum() {
        let w = WeightSpec::power(2.0).unwrap();
        let c = LaurentData::synthetic_tail(&w, 64).unwrap();
        let v = c.circle(5, 0.9, 256).unwrap();
        for j in [0usize, 17, 200] {
            let z = Complex64::from_polar(0.9, TAU * j as f64 / 256.0);
            assert!((v[j] - c.eval(5, z)).norm() < 1e-12);
        }
    }
}
