//! Exact proportions, percentage-point deltas, Wilson intervals and the exact McNemar test.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// z for a two-sided 95% interval.
pub const WILSON_Z_95: f64 = 1.959964;

/// `k/n`, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Proportion {
    pub k: usize,
    pub n: usize,
}

impl Proportion {
    /// Panics when `n == 0` or `k > n`.
    pub fn new(k: usize, n: usize) -> Self {
        assert!(n > 0 && k <= n, "invalid proportion {k}/{n}");
        Proportion { k, n }
    }

    pub fn ratio(self) -> Ratio<i64> {
        Ratio::new(self.k as i64, self.n as i64)
    }

    pub fn value(self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Percent in tenths, rounded half away from zero.
    pub fn percent_tenths(self) -> i64 {
        tenths(self.ratio())
    }

    pub fn percent(self) -> String {
        format_tenths(self.percent_tenths())
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({}%)", self.k, self.n, self.percent())
    }
}

fn tenths(r: Ratio<i64>) -> i64 {
    (r * Ratio::from_integer(1000)).round().to_integer()
}

fn format_tenths(t: i64) -> String {
    let sign = if t < 0 { "-" } else { "" };
    format!("{sign}{}.{}", t.abs() / 10, t.abs() % 10)
}

/// Signed difference of two proportions in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointDelta {
    pub minuend: Proportion,
    pub subtrahend: Proportion,
}

impl PointDelta {
    pub fn exact(self) -> Ratio<i64> {
        self.minuend.ratio() - self.subtrahend.ratio()
    }

    /// Percentage points in tenths, rounded half away from zero on the exact difference.
    pub fn tenths(self) -> i64 {
        tenths(self.exact())
    }

    pub fn points(self) -> f64 {
        self.tenths() as f64 / 10.0
    }
}

impl fmt::Display for PointDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} pp", format_tenths(self.tenths()))
    }
}

pub fn delta(a: Proportion, b: Proportion) -> PointDelta {
    PointDelta {
        minuend: a,
        subtrahend: b,
    }
}

/// Wilson score interval for `successes` of `n`, clamped to [0, 1].
///
/// Panics when `n == 0` or `successes > n`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    assert!(n > 0 && successes <= n, "invalid counts {successes}/{n}");
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lower = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let upper = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lower, upper)
}

/// Exact two-sided McNemar p-value from the discordant counts.
///
/// `p = min(1, 2 * sum_{i <= min(b, c)} C(b + c, i) / 2^(b + c))`, summed in log space.
pub fn mcnemar_exact(discordant_b: usize, discordant_c: usize) -> f64 {
    if discordant_b == discordant_c {
        return 1.0;
    }
    let n = discordant_b + discordant_c;
    let k = discordant_b.min(discordant_c);
    let mut log_term = -(n as f64) * std::f64::consts::LN_2;
    let mut logs = Vec::with_capacity(k + 1);
    for i in 0..=k {
        logs.push(log_term);
        log_term += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = max.exp() * logs.iter().map(|l| (l - max).exp()).sum::<f64>();
    (2.0 * tail).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub contrast: String,
    pub discordant_b: usize,
    pub discordant_c: usize,
    pub p_value: f64,
}

impl PairedTestResult {
    pub fn new(contrast: impl Into<String>, b: usize, c: usize) -> Self {
        PairedTestResult {
            contrast: contrast.into(),
            discordant_b: b,
            discordant_c: c,
            p_value: mcnemar_exact(b, c),
        }
    }
}

pub fn format_p(p: f64) -> String {
    if p >= 1.0 {
        "1".to_string()
    } else {
        format!("{p:.2e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Two-sided exact binomial p by enumerating every sign vector of length b + c.
    fn brute_mcnemar(b: usize, c: usize) -> f64 {
        let n = b + c;
        let k = b.min(c);
        let tail = (0u32..1 << n).filter(|v| v.count_ones() as usize <= k).count();
        (2.0 * tail as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn mcnemar_matches_enumeration() {
        for n in 0..=12 {
            for b in 0..=n {
                let (p, q) = (mcnemar_exact(b, n - b), brute_mcnemar(b, n - b));
                assert!((p - q).abs() <= 1e-12 * q.max(1e-300), "({b},{}) {p} vs {q}", n - b);
                assert_eq!(p, mcnemar_exact(n - b, b));
            }
        }
    }

    #[test]
    fn mcnemar_one_sided_tail() {
        assert_eq!(mcnemar_exact(0, 0), 1.0);
        assert_eq!(mcnemar_exact(1, 0), 1.0);
        for b in 2..40 {
            let expected = 2.0 * 0.5f64.powi(b as i32);
            assert!((mcnemar_exact(b, 0) - expected).abs() <= 1e-12 * expected);
        }
        assert!((mcnemar_exact(8, 0) - 2.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn mcnemar_large_counts_stay_finite() {
        let p = mcnemar_exact(900, 1200);
        assert!(p > 0.0 && p < 1e-9);
        assert_eq!(mcnemar_exact(2000, 2000), 1.0);
    }

    #[test]
    fn wilson_zero_successes() {
        let (lo, hi) = wilson_interval(0, 17, WILSON_Z_95);
        assert_eq!(lo, 0.0);
        // closed form at k = 0: upper = (z^2/n) / (1 + z^2/n) = z^2 / (n + z^2)
        let z2 = WILSON_Z_95 * WILSON_Z_95;
        assert!((hi - z2 / (17.0 + z2)).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_estimate_and_narrows_with_n() {
        for n in 1..60 {
            for k in 0..=n {
                let (lo, hi) = wilson_interval(k, n, WILSON_Z_95);
                let p = k as f64 / n as f64;
                assert!(lo <= p && p <= hi, "{k}/{n}");
                assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
                let (lo2, hi2) = wilson_interval(2 * k, 2 * n, WILSON_Z_95);
                assert!(hi2 - lo2 < hi - lo, "{k}/{n}");
            }
        }
    }

    #[test]
    fn percent_rounding_half_away_from_zero() {
        assert_eq!(Proportion::new(15, 17).percent(), "88.2");
        assert_eq!(Proportion::new(1, 8).percent(), "12.5");
        assert_eq!(Proportion::new(1, 16).percent(), "6.3");
        assert_eq!(Proportion::new(0, 3).percent(), "0.0");
        assert_eq!(Proportion::new(3, 3).percent(), "100.0");
        let d = delta(Proportion::new(0, 16), Proportion::new(1, 16));
        assert_eq!(d.tenths(), -63);
        assert_eq!(d.to_string(), "-6.3 pp");
    }

    #[test]
    fn delta_antisymmetry() {
        for n in 1..25 {
            for a in 0..=n {
                for b in 0..=n {
                    let (pa, pb) = (Proportion::new(a, n), Proportion::new(b, n));
                    assert_eq!(delta(pa, pb).tenths(), -delta(pb, pa).tenths());
                }
            }
        }
        let x = Proportion::new(4, 17);
        assert_eq!(delta(x, x).to_string(), "0.0 pp");
    }

    #[test]
    fn rates_partition_exactly() {
        let (s, p, f) = (Proportion::new(4, 17), Proportion::new(12, 17), Proportion::new(1, 17));
        assert_eq!(s.ratio() + p.ratio() + f.ratio(), Ratio::from_integer(1));
    }
}
