//! Paired Wilcoxon signed-rank test.
//!
//! Zero differences are dropped, tied magnitudes get average ranks, and the
//! statistic is `W = min(W+, W-)`. Up to [`WilcoxonOptions::exact_max_n`]
//! non-zero pairs the p-value comes from the exact null distribution over all
//! `2^n` sign assignments; beyond that a tie- and continuity-corrected normal
//! approximation is used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Scores of two arms aligned by section.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl PairedSample {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} paired values", a.len()),
                found: format!("{} values", b.len()),
            });
        }
        if a.is_empty() {
            return Err(Error::InvalidInput("paired sample must not be empty".into()));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("paired sample contains non-finite values".into()));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Differences `b - a`.
    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| b - a).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApproximation,
}

/// Alternative hypothesis on the location of `b - a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// `b` tends to exceed `a`.
    Greater,
    /// `b` tends to fall below `a`.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOptions {
    pub alternative: Alternative,
    /// Largest non-zero sample size handled by the exact distribution.
    pub exact_max_n: usize,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        Self { alternative: Alternative::TwoSided, exact_max_n: 25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic_w: f64,
    pub p_two_sided: f64,
    pub n_effective: usize,
    pub method: TestMethod,
    pub alternative: Alternative,
    /// p-value under `alternative`; equals `p_two_sided` for the default.
    pub p_value: f64,
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
}

/// Signed ranks of the non-zero differences, doubled so that average ranks
/// of ties stay integral.
#[derive(Debug, Clone)]
pub(crate) struct SignedRanks {
    /// `(2 * rank, difference > 0)`
    pub ranks2: Vec<(u64, bool)>,
    /// Sizes of tie groups, for the variance correction.
    pub ties: Vec<usize>,
}

impl SignedRanks {
    pub fn from_differences(diffs: &[f64]) -> Self {
        let mut nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
        nz.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
        let mut ranks2 = Vec::with_capacity(nz.len());
        let mut ties = Vec::new();
        let mut i = 0;
        while i < nz.len() {
            let mut j = i;
            while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
                j += 1;
            }
            // average of ranks i+1 ..= j+1, doubled
            let r2 = (i + 1 + j + 1) as u64;
            for d in &nz[i..=j] {
                ranks2.push((r2, *d > 0.0));
            }
            ties.push(j - i + 1);
            i = j + 1;
        }
        Self { ranks2, ties }
    }

    fn w_plus2(&self) -> u64 {
        self.ranks2.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum()
    }

    fn total2(&self) -> u64 {
        self.ranks2.iter().map(|(r, _)| r).sum()
    }
}

/// Number of sign assignments producing each doubled positive-rank sum.
/// Equivalent to enumerating all `2^n` assignments, computed as a subset-sum
/// convolution.
pub(crate) fn null_counts(ranks2: &[u64]) -> Vec<f64> {
    let total: u64 = ranks2.iter().sum();
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

pub fn wilcoxon_signed_rank(s: &PairedSample, opts: WilcoxonOptions) -> Result<TestResult> {
    let sr = SignedRanks::from_differences(&s.differences());
    let n = sr.ranks2.len();
    if n == 0 {
        return Err(Error::DegenerateSample("all paired differences are zero".into()));
    }
    let wp2 = sr.w_plus2();
    let total2 = sr.total2();
    let wm2 = total2 - wp2;
    let w2 = wp2.min(wm2);

    let (method, p_two, p_greater, p_less) = if n <= opts.exact_max_n {
        let ranks: Vec<u64> = sr.ranks2.iter().map(|(r, _)| *r).collect();
        let counts = null_counts(&ranks);
        let all = 2f64.powi(n as i32);
        let tail = |pred: &dyn Fn(u64) -> bool| -> f64 {
            counts.iter().enumerate().filter(|(s, _)| pred(*s as u64)).map(|(_, c)| c).sum::<f64>() / all
        };
        let p_two = tail(&|s| s <= w2 || total2 - s <= w2);
        let p_greater = tail(&|s| s >= wp2);
        let p_less = tail(&|s| s <= wp2);
        (TestMethod::Exact, p_two, p_greater, p_less)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_adj: f64 = sr.ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_adj;
        let sd = var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let w = w2 as f64 / 2.0;
        let wp = wp2 as f64 / 2.0;
        let z_two = ((w - mean + 0.5) / sd).min(0.0);
        let p_two = (2.0 * normal.cdf(z_two)).min(1.0);
        let p_greater = normal.sf((wp - mean - 0.5) / sd);
        let p_less = normal.cdf((wp - mean + 0.5) / sd);
        (TestMethod::NormalApproximation, p_two, p_greater, p_less)
    };

    let p_value = match opts.alternative {
        Alternative::TwoSided => p_two,
        Alternative::Greater => p_greater,
        Alternative::Less => p_less,
    };
    Ok(TestResult {
        statistic_w: w2 as f64 / 2.0,
        p_two_sided: p_two.clamp(0.0, 1.0),
        n_effective: n,
        method,
        alternative: opts.alternative,
        p_value: p_value.clamp(0.0, 1.0),
        w_plus: wp2 as f64 / 2.0,
    })
}
