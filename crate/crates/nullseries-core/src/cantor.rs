//! Randomized nested intervals I(n,k), the sets K_n, the singular set Q, and
//! point classification / distance queries on the circle.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quad::nsum;
use crate::rng;
use crate::weights::ThicknessSchedule;
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// How the offsets s(n,k) are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum OffsetMode {
    /// i.i.d. uniform draws; level n uses stream n of the seed.
    Random,
    /// Every s(n,k) equal to the given value in [0, 1].
    Fixed(f64),
}

/// The interval system up to depth `n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorSet {
    /// Schedule driving lengths and gaps.
    pub schedule: ThicknessSchedule,
    /// Depth.
    pub n_max: usize,
    /// RNG seed.
    pub seed: u64,
    /// Offset mode.
    pub mode: OffsetMode,
    /// s[n][k] for 1 ≤ n ≤ n_max (s[0] = [0]).
    pub s: Vec<Vec<f64>>,
    /// Left endpoints a[n][k], increasing in k.
    pub a: Vec<Vec<f64>>,
}

/// Which gap of a parent half an escaped point sits in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gap {
    /// Between the half's start and the child (flank J₁).
    Left,
    /// Between the child and the half's end (flank J₂).
    Right,
}

/// Which point of Q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QPoint {
    /// a(n,k).
    Left,
    /// a(n,k) + σ_n/2.
    Mid,
    /// a(n,k) + σ_n.
    Right,
}

/// Classification of a point at a given depth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PointStatus {
    /// t ∈ K_{level−1} ∖ K_level.
    Escaped {
        /// Level n of escape.
        level: usize,
        /// k of the rank-(n−1) interval containing t.
        parent: usize,
        /// Index of the level-n child in whose half t lies.
        child: usize,
        /// Gap side inside the half.
        gap: Gap,
    },
    /// t ∈ K_depth.
    InsideDeepest {
        /// k of the deepest interval containing t.
        k: usize,
    },
    /// t is a point of Q of level ≤ depth.
    Singular {
        /// Level of the Q point.
        level: usize,
        /// Interval index.
        k: usize,
        /// Endpoint or midpoint.
        which: QPoint,
    },
}

/// A point with its status.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointClass {
    /// t reduced to [0, 2π).
    pub point: f64,
    /// Status at the requested depth.
    pub status: PointStatus,
}

/// Distance targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// K_n.
    K(usize),
    /// K_depth ∪ Q_{≤depth}.
    KPrime(usize),
}

/// Reduces t to [0, 2π).
#[inline]
pub fn wrap(t: f64) -> f64 {
    let r = rem(t);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

#[inline]
fn rem(t: f64) -> f64 {
    let r = t % TWO_PI;
    if r < 0.0 {
        r + TWO_PI
    } else {
        r
    }
}

/// Distance on ℝ/2πℤ.
#[inline]
pub fn circle_dist(x: f64, y: f64) -> f64 {
    let d = rem(x - y);
    d.min(TWO_PI - d)
}

#[inline]
fn ulp_eq(t: f64, q: f64) -> bool {
    let q = wrap(q);
    let spacing = libm::nextafter(q.abs().max(f64::MIN_POSITIVE), f64::INFINITY) - q.abs();
    circle_dist(t, q) <= spacing
}

/// Builds the interval tables.
pub fn generate(schedule: &ThicknessSchedule, n_max: usize, seed: u64, mode: OffsetMode) -> Result<CantorSet> {
    if n_max > schedule.n_max {
        return Err(Error::Range(format!("depth {n_max} exceeds schedule depth {}", schedule.n_max)));
    }
    if let OffsetMode::Fixed(v) = mode {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Value(format!("fixed offset {v} outside [0, 1]")));
        }
    }
    let mut s = Vec::with_capacity(n_max + 1);
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    s.push(alloc::vec![0.0]);
    a.push(alloc::vec![0.0]);
    for n in 1..=n_max {
        let row: Vec<f64> = match mode {
            OffsetMode::Fixed(v) => alloc::vec![v; 1 << n],
            OffsetMode::Random => {
                let mut r = rng::stream(seed, n as u64);
                (0..1usize << n).map(|_| rng::uniform(&mut r)).collect()
            }
        };
        let tau = schedule.tau(n);
        let half = schedule.sigma[n - 1] / 2.0;
        let parents = &a[n - 1];
        let child: Vec<f64> = (0..1usize << n)
            .map(|c| parents[c / 2] + if c % 2 == 1 { half } else { 0.0 } + tau * (3.0 + row[c]))
            .collect();
        s.push(row);
        a.push(child);
    }
    Ok(CantorSet { schedule: schedule.clone(), n_max, seed, mode, s, a })
}

impl CantorSet {
    /// σ_n.
    #[inline]
    pub fn sigma(&self, n: usize) -> f64 {
        self.schedule.sigma[n]
    }

    /// τ_n, n ≥ 1.
    #[inline]
    pub fn tau(&self, n: usize) -> f64 {
        self.schedule.tau(n)
    }

    /// Start of the parent half containing child (n, c).
    #[inline]
    pub fn half_start(&self, n: usize, c: usize) -> f64 {
        self.a[n - 1][c / 2] + if c % 2 == 1 { self.sigma(n - 1) / 2.0 } else { 0.0 }
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.n_max {
            return Err(Error::Range(format!("depth {depth} exceeds built depth {}", self.n_max)));
        }
        Ok(())
    }

    /// Classifies t (reduced mod 2π) at the given depth.
    pub fn classify(&self, t: f64, depth: usize) -> Result<PointClass> {
        self.check_depth(depth)?;
        let t = wrap(t);
        let status = self.status(t, depth);
        Ok(PointClass { point: t, status })
    }

    fn status(&self, t: f64, depth: usize) -> PointStatus {
        if ulp_eq(t, 0.0) {
            return PointStatus::Singular { level: 0, k: 0, which: QPoint::Left };
        }
        let mut k = 0;
        for n in 1..=depth {
            let p = self.a[n - 1][k];
            let mid = p + self.sigma(n - 1) / 2.0;
            if ulp_eq(t, mid) {
                return PointStatus::Singular { level: n - 1, k, which: QPoint::Mid };
            }
            let c = 2 * k + usize::from(t >= mid);
            let ac = self.a[n][c];
            let bc = ac + self.sigma(n);
            if ulp_eq(t, ac) {
                return PointStatus::Singular { level: n, k: c, which: QPoint::Left };
            }
            if ulp_eq(t, bc) {
                return PointStatus::Singular { level: n, k: c, which: QPoint::Right };
            }
            if t < ac {
                return PointStatus::Escaped { level: n, parent: k, child: c, gap: Gap::Left };
            }
            if t > bc {
                return PointStatus::Escaped { level: n, parent: k, child: c, gap: Gap::Right };
            }
            k = c;
        }
        PointStatus::InsideDeepest { k }
    }

    /// Circle distance from t to K_n or to K_depth ∪ Q_{≤depth}.
    pub fn distance(&self, t: f64, target: Target) -> Result<f64> {
        let t = wrap(t);
        match target {
            Target::K(n) => {
                self.check_depth(n)?;
                Ok(self.dist_k(t, n))
            }
            Target::KPrime(d) => {
                self.check_depth(d)?;
                let mut best = self.dist_k(t, d);
                for l in 0..=d {
                    best = best.min(self.dist_q_level(t, l, l < d));
                }
                Ok(best)
            }
        }
    }

    fn nearest_index(&self, t: f64, n: usize) -> usize {
        let row = &self.a[n];
        row.partition_point(|&x| x <= t).saturating_sub(1)
    }

    fn dist_k(&self, t: f64, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let row = &self.a[n];
        let s = self.sigma(n);
        let m = row.len();
        let i = self.nearest_index(t, n);
        let mut best = f64::INFINITY;
        for j in [i + m - 1, i, i + 1] {
            let a = row[j % m];
            if circle_dist(t, a + s / 2.0) <= s / 2.0 {
                return 0.0;
            }
            best = best.min(circle_dist(t, a)).min(circle_dist(t, a + s));
        }
        best
    }

    fn dist_q_level(&self, t: f64, l: usize, with_mid: bool) -> f64 {
        let row = &self.a[l];
        let s = self.sigma(l);
        let m = row.len();
        let i = self.nearest_index(t, l);
        let mut best = f64::INFINITY;
        for j in [i + m - 1, i, i + 1] {
            let a = row[j % m];
            best = best.min(circle_dist(t, a)).min(circle_dist(t, a + s));
            if with_mid {
                best = best.min(circle_dist(t, a + s / 2.0));
            }
        }
        best
    }

    /// Per-level measure of K_n from the interval table, against 2πΦ(n).
    pub fn measure_report(&self) -> Vec<LevelMeasure> {
        (0..=self.n_max)
            .map(|n| {
                let s = self.sigma(n);
                let measure = nsum(self.a[n].iter().map(|_| s));
                let expected = TWO_PI * self.schedule.phi[n];
                LevelMeasure { n, measure, expected, rel_err: ((measure - expected) / expected).abs() }
            })
            .collect()
    }

    /// Smallest child margin and smallest same-level gap, each over τ_n, at every level.
    pub fn margin_report(&self) -> Vec<LevelMargins> {
        (1..=self.n_max)
            .map(|n| {
                let tau = self.tau(n);
                let s = self.sigma(n);
                let half = self.sigma(n - 1) / 2.0;
                let mut left = f64::INFINITY;
                let mut right = f64::INFINITY;
                for c in 0..1usize << n {
                    let hs = self.half_start(n, c);
                    left = left.min(self.a[n][c] - hs);
                    right = right.min(hs + half - (self.a[n][c] + s));
                }
                let row = &self.a[n];
                let mut gap = TWO_PI - (row[row.len() - 1] + s) + row[0];
                for w in row.windows(2) {
                    gap = gap.min(w[1] - (w[0] + s));
                }
                LevelMargins { n, left_margin: left / tau, right_margin: right / tau, min_gap: gap / tau }
            })
            .collect()
    }
}

/// Measure of K_n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMeasure {
    /// Level.
    pub n: usize,
    /// Σ_k |I(n,k)|.
    pub measure: f64,
    /// 2πΦ(n).
    pub expected: f64,
    /// Relative difference.
    pub rel_err: f64,
}

/// Margins at one level, in units of τ_n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMargins {
    /// Level.
    pub n: usize,
    /// min over children of a(n,c) − (half start).
    pub left_margin: f64,
    /// min over children of (half end) − (a(n,c) + σ_n).
    pub right_margin: f64,
    /// Smallest gap between consecutive intervals of level n (circularly).
    pub min_gap: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{build_schedule, derive_omega2, WeightSpec};

    fn sched(n: usize) -> ThicknessSchedule {
        build_schedule(&derive_omega2(&WeightSpec::t_log2()).unwrap(), n).unwrap()
    }

    #[test]
    fn fixed_zero_level_one() {
        let s = sched(4);
        let c = generate(&s, 4, 0, OffsetMode::Fixed(0.0)).unwrap();
        assert_eq!(c.a[1][0], 3.0 * s.tau(1));
        assert!((c.a[1][1] - (PI + 3.0 * s.tau(1))).abs() < 1e-15);
    }

    #[test]
    fn determinism_and_range() {
        let s = sched(8);
        let x = generate(&s, 8, 11, OffsetMode::Random).unwrap();
        let y = generate(&s, 8, 11, OffsetMode::Random).unwrap();
        assert_eq!(x.s, y.s);
        assert!(x.s.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        assert!(matches!(generate(&s, 9, 0, OffsetMode::Random), Err(Error::Range(_))));
    }

    #[test]
    fn classify_examples() {
        let s = sched(6);
        let c = generate(&s, 6, 3, OffsetMode::Random).unwrap();
        let mid = c.a[1][0] + c.sigma(1) / 2.0;
        assert!(matches!(c.classify(mid, 1).unwrap().status, PointStatus::InsideDeepest { k: 0 }));
        assert!(matches!(
            c.classify(mid, 2).unwrap().status,
            PointStatus::Singular { level: 1, which: QPoint::Mid, .. }
        ));
        for d in 1..=6 {
            assert!(matches!(c.classify(c.a[1][0], d).unwrap().status, PointStatus::Singular { level: 1, .. }));
        }
        let st = c.classify(1e-6, 6).unwrap().status;
        assert!(matches!(st, PointStatus::Escaped { level: 1, gap: Gap::Left, .. }));
    }

    #[test]
    fn distance_examples() {
        let s = sched(4);
        let c = generate(&s, 4, 0, OffsetMode::Fixed(0.0)).unwrap();
        let t = c.a[1][0] - s.tau(1);
        assert!((c.distance(t, Target::K(1)).unwrap() - s.tau(1)).abs() < 1e-15);
        assert_eq!(c.distance(c.a[3][5] + 1e-9, Target::K(3)).unwrap(), 0.0);
        assert!(c.distance(t, Target::KPrime(1)).unwrap() <= s.tau(1) * (1.0 + 1e-12));
    }

    #[test]
    fn measures() {
        let s = sched(10);
        let c = generate(&s, 10, 5, OffsetMode::Random).unwrap();
        let m = c.measure_report();
        assert_eq!(m[0].measure, TWO_PI);
        assert!(m.iter().all(|l| l.rel_err <= 1e-12));
        assert_eq!(m[1].measure, 2.0 * s.sigma[1]);
    }
}
