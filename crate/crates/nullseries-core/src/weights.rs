//! Regularity weights ω, the derived ω₂ and the thickness schedule Φ, σ, τ.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::quad::Neumaier;
use crate::{Error, Result};

/// Analytic family of a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// ω(t) = t^p.
    Power {
        /// Exponent, p > 0.
        p: f64,
    },
    /// ω(t) = t·log₂(1+t).
    TimesLog2,
    /// ω(t) = t·(ln(1+t))^p.
    TimesLogPow {
        /// Exponent of the logarithm, p ≥ 0.
        p: f64,
    },
    /// Values ω(0), ω(1), ... at the integers, linear in between.
    Tabulated {
        /// Table of ω(k), k = 0..len.
        values: Vec<f64>,
    },
    /// ω(t)·(1 + ln(1+t)) for the inner weight.
    LogBoosted {
        /// The weight being boosted.
        base: Box<WeightSpec>,
    },
}

/// Regularity flags carried by a weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    /// ω(t)/t is nondecreasing.
    pub ratio_increasing: bool,
    /// ω(t)/t is concave.
    pub ratio_concave: bool,
    /// Σ 1/ω(n) = ∞.
    pub sum_reciprocal_divergent: bool,
}

/// A weight ω together with its regularity claims.
///
/// Claims are derived from the family (closed forms) or from sampled
/// heuristics (tabulated and nested specs); they are never taken from input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightKind")]
pub struct WeightSpec {
    /// Family and parameters.
    #[serde(flatten)]
    pub kind: WeightKind,
    /// Regularity flags.
    pub claims: Claims,
}

impl TryFrom<WeightKind> for WeightSpec {
    type Error = Error;
    fn try_from(kind: WeightKind) -> Result<Self> {
        WeightSpec::new(kind)
    }
}

impl WeightSpec {
    /// Validates parameters and derives the claims.
    pub fn new(kind: WeightKind) -> Result<Self> {
        match &kind {
            WeightKind::Power { p } if !(p.is_finite() && *p > 0.0) => {
                return Err(Error::Value(format!("power exponent must be positive, got {p}")))
            }
            WeightKind::TimesLogPow { p } if !(p.is_finite() && *p >= 0.0) => {
                return Err(Error::Value(format!("log exponent must be nonnegative, got {p}")))
            }
            WeightKind::Tabulated { values } => {
                if values.len() < 3 {
                    return Err(Error::Value("tabulated weight needs at least 3 entries".into()));
                }
                if values[0] < 0.0 || values[1..].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::Value("tabulated weight must be positive for t > 0".into()));
                }
            }
            _ => {}
        }
        let claims = derive_claims(&kind);
        Ok(WeightSpec { kind, claims })
    }

    /// ω(t) = t^p.
    pub fn power(p: f64) -> Result<Self> {
        Self::new(WeightKind::Power { p })
    }

    /// ω(t) = t·log₂(1+t).
    pub fn t_log2() -> Self {
        Self::new(WeightKind::TimesLog2).expect("parameter-free family")
    }

    /// ω(t) = t·(ln(1+t))^p.
    pub fn t_log_pow(p: f64) -> Result<Self> {
        Self::new(WeightKind::TimesLogPow { p })
    }

    /// Linear interpolation of ω(k) given at k = 0, 1, 2, ...
    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        Self::new(WeightKind::Tabulated { values })
    }

    /// ω(t)·(1 + ln(1+t)).
    pub fn log_boosted(base: WeightSpec) -> Self {
        Self::new(WeightKind::LogBoosted { base: Box::new(base) }).expect("base already validated")
    }

    /// Evaluates ω(t).
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("weight evaluated at t = {t}")));
        }
        self.eval_unchecked(t)
    }

    fn eval_unchecked(&self, t: f64) -> Result<f64> {
        Ok(match &self.kind {
            WeightKind::Power { p } => t.powf(*p),
            WeightKind::TimesLog2 => t * t.ln_1p() / LN_2,
            WeightKind::TimesLogPow { p } => t * t.ln_1p().powf(*p),
            WeightKind::Tabulated { values } => {
                let last = (values.len() - 1) as f64;
                if t > last {
                    return Err(Error::Range(format!(
                        "tabulated weight has no value at t = {t} (table ends at {last})"
                    )));
                }
                let i = (t.floor() as usize).min(values.len() - 2);
                let f = t - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            }
            WeightKind::LogBoosted { base } => base.eval_unchecked(t)? * (1.0 + t.ln_1p()),
        })
    }

    /// Largest argument the weight accepts (∞ for closed forms).
    pub fn domain_end(&self) -> f64 {
        match &self.kind {
            WeightKind::Tabulated { values } => (values.len() - 1) as f64,
            WeightKind::LogBoosted { base } => base.domain_end(),
            _ => f64::INFINITY,
        }
    }

    /// ω(k) for k = 0..=n.
    pub fn at_integers(&self, n: usize) -> Result<Vec<f64>> {
        (0..=n).map(|k| self.eval(k as f64)).collect()
    }
}

fn derive_claims(kind: &WeightKind) -> Claims {
    match kind {
        WeightKind::Power { p } => Claims {
            ratio_increasing: *p >= 1.0,
            ratio_concave: (1.0..=2.0).contains(p),
            sum_reciprocal_divergent: *p <= 1.0,
        },
        WeightKind::TimesLog2 => Claims { ratio_increasing: true, ratio_concave: true, sum_reciprocal_divergent: true },
        WeightKind::TimesLogPow { p } => {
            Claims { ratio_increasing: true, ratio_concave: *p <= 1.0, sum_reciprocal_divergent: *p <= 1.0 }
        }
        WeightKind::LogBoosted { base } => {
            // Divergence of Σ 1/(ω·log) is decided per family: the extra log
            // factor turns t·log t into the summable t·log²t.
            let divergent = match &base.kind {
                WeightKind::Power { p } => *p <= 1.0,
                WeightKind::TimesLog2 => false,
                WeightKind::TimesLogPow { p } => *p <= 0.0,
                _ => sampled_divergence(|t| kind_eval(kind, t), base.domain_end()),
            };
            let end = base.domain_end().min(4096.0);
            Claims {
                ratio_increasing: base.claims.ratio_increasing,
                ratio_concave: sampled_ratio_concave(|t| kind_eval(kind, t), end),
                sum_reciprocal_divergent: divergent,
            }
        }
        WeightKind::Tabulated { values } => {
            let end = (values.len() - 1) as f64;
            let f = |t: f64| kind_eval(kind, t);
            Claims {
                ratio_increasing: sampled_ratio_increasing(f, end),
                ratio_concave: sampled_ratio_concave(f, end),
                sum_reciprocal_divergent: sampled_divergence(f, end),
            }
        }
    }
}

fn kind_eval(kind: &WeightKind, t: f64) -> f64 {
    match kind {
        WeightKind::Tabulated { values } => {
            let last = values.len() - 1;
            let i = (t.floor() as usize).min(last - 1);
            let f = t - i as f64;
            values[i] * (1.0 - f) + values[i + 1] * f
        }
        WeightKind::LogBoosted { base } => base.eval_unchecked(t).unwrap_or(f64::NAN) * (1.0 + t.ln_1p()),
        WeightKind::Power { p } => t.powf(*p),
        WeightKind::TimesLog2 => t * t.ln_1p() / LN_2,
        WeightKind::TimesLogPow { p } => t * t.ln_1p().powf(*p),
    }
}

fn sampled_ratio_increasing(f: impl Fn(f64) -> f64, end: f64) -> bool {
    let n = end.floor() as usize;
    (1..n).all(|k| f((k + 1) as f64) / (k + 1) as f64 >= f(k as f64) / k as f64 * (1.0 - 1e-12))
}

fn sampled_ratio_concave(f: impl Fn(f64) -> f64, end: f64) -> bool {
    let n = end.floor() as usize;
    let r = |k: usize| f(k as f64) / k as f64;
    (2..n).all(|k| r(k + 1) - 2.0 * r(k) + r(k - 1) <= 1e-12 * r(k).abs().max(1.0))
}

/// Cauchy-condensation heuristic: fits b_j = 2^j/ω(2^j) ≈ C·j^{−α} on the
/// upper half of the available dyads and calls the series divergent when α ≤ 1.05.
/// A finite table cannot decide divergence; this is evidence, not proof.
pub fn condensation_exponent(f: impl Fn(f64) -> f64, end: f64) -> f64 {
    let jmax = end.max(2.0).log2().floor() as usize;
    let lo = (jmax / 2).max(1);
    let pts: Vec<(f64, f64)> = (lo..=jmax)
        .map(|j| {
            let t = (1u64 << j) as f64;
            ((j as f64).ln(), (t / f(t)).ln())
        })
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    -slope(&pts)
}

fn sampled_divergence(f: impl Fn(f64) -> f64, end: f64) -> bool {
    condensation_exponent(f, end.min((1u64 << 40) as f64)) <= 1.05
}

/// Least-squares slope of y on x.
pub fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Partial sums Σ_{n≤N} 1/ω(n) at dyadic N = 2^j, j = 0..=jmax.
pub fn reciprocal_partial_sums(w: &WeightSpec, jmax: u32) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::new();
    let mut acc = Neumaier::default();
    let mut n = 1u64;
    for j in 0..=jmax {
        let top = 1u64 << j;
        while n <= top {
            acc.add(1.0 / w.eval(n as f64)?);
            n += 1;
        }
        out.push((top, acc.sum()));
    }
    Ok(out)
}

/// ω₂ := ω·(1 + ln(1+t)).
///
/// The divergence flag of the result is computed for its own family; for
/// ω = t·log₂(1+t) it is false even though ω qualifies.
pub fn derive_omega2(w: &WeightSpec) -> Result<WeightSpec> {
    if !w.claims.sum_reciprocal_divergent {
        return Err(Error::Contract("construction requires Σ 1/ω = ∞".into()));
    }
    if !w.claims.ratio_increasing {
        return Err(Error::Contract("construction requires ω(t)/t nondecreasing".into()));
    }
    Ok(WeightSpec::log_boosted(w.clone()))
}

/// The dyadic sequences Φ(n), σ_n, τ_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThicknessSchedule {
    /// Deepest level.
    pub n_max: usize,
    /// Φ(0..=n_max), Φ(0) = 1.
    pub phi: Vec<f64>,
    /// σ_0..=σ_{n_max} in radians.
    pub sigma: Vec<f64>,
    /// τ_1..=τ_{n_max} in radians.
    pub tau: Vec<f64>,
    /// The ω₂ driving Φ.
    pub omega2: WeightSpec,
}

impl ThicknessSchedule {
    /// τ_n for 1 ≤ n ≤ n_max.
    #[inline]
    pub fn tau(&self, n: usize) -> f64 {
        self.tau[n - 1]
    }
}

/// Builds Φ(n) = exp(−Σ_{k≤n} 1/ω₂(k)), σ_n = 2π·2^{−n}Φ(n) and
/// τ_n = (σ_{n−1} − 2σ_n)/12, the latter in the cancellation-free form
/// σ_n·(e^{1/ω₂(n)} − 1)/6.
pub fn build_schedule(w2: &WeightSpec, n_max: usize) -> Result<ThicknessSchedule> {
    if n_max < 1 {
        return Err(Error::Value("schedule needs n_max ≥ 1".into()));
    }
    let mut phi = Vec::with_capacity(n_max + 1);
    let mut sigma = Vec::with_capacity(n_max + 1);
    let mut tau = Vec::with_capacity(n_max);
    let mut acc = Neumaier::default();
    phi.push(1.0);
    sigma.push(2.0 * PI);
    for n in 1..=n_max {
        let w = w2.eval(n as f64)?;
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Value(format!("ω₂({n}) = {w} is not positive")));
        }
        acc.add(1.0 / w);
        let p = (-acc.sum()).exp();
        let s = 2.0 * PI * 0.5f64.powi(n as i32) * p;
        phi.push(p);
        sigma.push(s);
        tau.push(s * (1.0 / w).exp_m1() / 6.0);
    }
    Ok(ThicknessSchedule { n_max, phi, sigma, tau, omega2: w2.clone() })
}

/// Per-level diagnostics of a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    /// Level n ≥ 1.
    pub n: usize,
    /// ω₂(n).
    pub omega2: f64,
    /// Relative error of Φ(n)/Φ(n−1) against e^{−1/ω₂(n)}.
    pub phi_ratio_defect: f64,
    /// τ_n/σ_n with τ_n from the defining difference (σ_{n−1} − 2σ_n)/12.
    pub tau_over_sigma: f64,
    /// (e^{1/ω₂(n)} − 1)/6.
    pub tau_over_sigma_exact: f64,
    /// 1/(6ω₂(n)), the first-order term.
    pub tau_over_sigma_first_order: f64,
    /// Relative error between the two τ_n/σ_n values above.
    pub tau_ratio_defect: f64,
    /// Σ_{k≤n} Φ(k) / (nΦ(n)).
    pub phinormal_ratio: f64,
    /// log Φ(n) / log n (NaN at n = 1).
    pub log_phi_over_log_n: f64,
    /// 4τ_{n+1} + σ_{n+1} ≤ σ_n/2 (children fit in parent halves); true at n_max.
    pub fits: bool,
}

/// Aggregate schedule report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    /// Rows for n = 1..=n_max.
    pub levels: Vec<LevelDiagnostics>,
    /// Every τ_n > 0.
    pub all_tau_positive: bool,
    /// Largest Σ_{k≤n} Φ(k)/(nΦ(n)).
    pub max_phinormal_ratio: f64,
    /// Largest relative defect of Φ(n)/Φ(n−1).
    pub max_phi_ratio_defect: f64,
    /// Largest relative defect of τ_n/σ_n.
    pub max_tau_ratio_defect: f64,
    /// |log Φ(n)/log n| is smaller at n_max than at the first dyadic n ≥ 4.
    pub phi_small_trend: bool,
    /// The geometric fit holds at every level.
    pub all_fit: bool,
}

/// Checks the schedule identities and the slow-decrease properties of Φ.
pub fn check_schedule(s: &ThicknessSchedule) -> Result<ScheduleReport> {
    let mut levels = Vec::with_capacity(s.n_max);
    let mut phi_sum = Neumaier::default();
    for n in 1..=s.n_max {
        let w = s.omega2.eval(n as f64)?;
        phi_sum.add(s.phi[n]);
        let ratio = s.phi[n] / s.phi[n - 1];
        let expect = (-1.0 / w).exp();
        let exact = (1.0 / w).exp_m1() / 6.0;
        let def = (s.sigma[n - 1] - 2.0 * s.sigma[n]) / 12.0 / s.sigma[n];
        let fits = n == s.n_max || 4.0 * s.tau(n + 1) + s.sigma[n + 1] <= s.sigma[n] / 2.0 * (1.0 + 1e-14);
        levels.push(LevelDiagnostics {
            n,
            omega2: w,
            phi_ratio_defect: ((ratio - expect) / expect).abs(),
            tau_over_sigma: def,
            tau_over_sigma_exact: exact,
            tau_over_sigma_first_order: 1.0 / (6.0 * w),
            tau_ratio_defect: ((def - exact) / exact).abs(),
            phinormal_ratio: phi_sum.sum() / (n as f64 * s.phi[n]),
            log_phi_over_log_n: if n > 1 { s.phi[n].ln() / (n as f64).ln() } else { f64::NAN },
            fits,
        });
    }
    let fold = |f: fn(&LevelDiagnostics) -> f64| levels.iter().map(f).fold(0.0, f64::max);
    let first = levels.iter().find(|l| l.n >= 4).map(|l| l.log_phi_over_log_n.abs());
    let last = levels.last().map(|l| l.log_phi_over_log_n.abs());
    Ok(ScheduleReport {
        all_tau_positive: s.tau.iter().all(|t| *t > 0.0),
        max_phinormal_ratio: fold(|l| l.phinormal_ratio),
        max_phi_ratio_defect: fold(|l| l.phi_ratio_defect),
        max_tau_ratio_defect: fold(|l| l.tau_ratio_defect),
        phi_small_trend: matches!((first, last), (Some(a), Some(b)) if b <= a),
        all_fit: levels.iter().all(|l| l.fits),
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let w = WeightSpec::t_log2();
        assert_eq!(w.eval(0.0).unwrap(), 0.0);
        assert!((w.eval(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(WeightSpec::power(2.0).unwrap().eval(3.0).unwrap(), 9.0);
        assert!(matches!(w.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tabulated_range() {
        let w = WeightSpec::tabulated(alloc::vec![0.0, 1.0, 4.0, 9.0]).unwrap();
        assert_eq!(w.eval(2.5).unwrap(), 6.5);
        assert!(matches!(w.eval(3.5), Err(Error::Range(_))));
    }

    #[test]
    fn omega2_examples() {
        let w = WeightSpec::power(1.0).unwrap();
        let w2 = derive_omega2(&w).unwrap();
        for t in [0.5, 1.0, 7.0] {
            assert!((w2.eval(t).unwrap() - t * (1.0 + (1.0f64 + t).ln())).abs() < 1e-14);
        }
        let w = WeightSpec::t_log2();
        let w2 = derive_omega2(&w).unwrap();
        let r = w2.eval(1.0).unwrap() / w.eval(1.0).unwrap();
        assert!((r - 1.693_147_180_559_945).abs() < 1e-12);
        assert!(!w2.claims.sum_reciprocal_divergent);
        assert!(derive_omega2(&WeightSpec::power(1.0).unwrap()).unwrap().claims.sum_reciprocal_divergent);
    }

    #[test]
    fn omega2_rejects_convergent() {
        let w = WeightSpec::power(2.0).unwrap();
        assert!(matches!(derive_omega2(&w), Err(Error::Contract(_))));
    }

    #[test]
    fn schedule_k_squared() {
        let w2 = WeightSpec::power(2.0).unwrap();
        let s = build_schedule(&w2, 4).unwrap();
        assert_eq!(s.phi[0], 1.0);
        assert_eq!(s.sigma[0], 2.0 * PI);
        assert!((s.phi[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((s.phi[2] - (-1.25f64).exp()).abs() < 1e-15);
        let r = check_schedule(&s).unwrap();
        assert!((r.levels[0].tau_over_sigma - 0.286_380_304_743_174_2).abs() < 1e-12);
    }

    #[test]
    fn tabulated_claims_follow_samples() {
        let lin: Vec<f64> = (0..2048).map(|k| k as f64 * (1.0 + k as f64).ln()).collect();
        let w = WeightSpec::tabulated(lin).unwrap();
        assert!(w.claims.ratio_increasing && w.claims.sum_reciprocal_divergent);
        let sq: Vec<f64> = (0..2048).map(|k| (k * k) as f64).collect();
        assert!(!WeightSpec::tabulated(sq).unwrap().claims.sum_reciprocal_divergent);
    }

    #[test]
    fn serde_roundtrip_recomputes_claims() {
        let w = WeightSpec::log_boosted(WeightSpec::t_log2());
        let k = w.kind.clone();
        let back = WeightSpec::try_from(k).unwrap();
        assert_eq!(back, w);
    }
}
