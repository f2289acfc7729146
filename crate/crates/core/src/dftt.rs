//! The DFT (spectral) test in its three published parameterizations.
//!
//! All variants count the half-spectrum bins whose magnitude falls below a
//! threshold, `N₁ = #{ j < n/2 : |S_j| < T }`, and standardize it as
//!
//! ```text
//! d = (N₁ − 0.95·n/2) / √(0.95·0.05·n/a),    p = erfc(|d| / √2)
//! ```
//!
//! | variant  | threshold `T`     | `a`  |
//! |----------|-------------------|------|
//! | Original | `√(3n)`           | 2    |
//! | Kim      | `√(−n·ln 0.05)`   | 4    |
//! | Pareschi | `√(−n·ln 0.05)`   | 3.8  |
//!
//! The DC bin `j = 0` is part of the count.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitseq::BitSequence;
use crate::error::{Error, Result};
use crate::specialfns::{two_sided_pvalue, Probability};
use crate::spectral::{dft_power, SpectrumResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DfttVariant {
    Original,
    Kim,
    Pareschi,
}

impl DfttVariant {
    pub const ALL: [DfttVariant; 3] = [DfttVariant::Original, DfttVariant::Kim, DfttVariant::Pareschi];

    /// Threshold on `|S_j|`.
    pub fn threshold(self, n: usize) -> f64 {
        self.threshold_squared(n).sqrt()
    }

    /// Threshold on `|S_j|²`; comparisons are done in the squared domain.
    pub fn threshold_squared(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            DfttVariant::Original => 3.0 * n,
            DfttVariant::Kim | DfttVariant::Pareschi => -n * 0.05f64.ln(),
        }
    }

    pub fn divisor(self) -> f64 {
        match self {
            DfttVariant::Original => 2.0,
            DfttVariant::Kim => 4.0,
            DfttVariant::Pareschi => 3.8,
        }
    }

    /// `d` for a given count `N₁`.
    pub fn statistic(self, n: usize, below: usize) -> f64 {
        let n = n as f64;
        (below as f64 - 0.95 * n / 2.0) / (0.95 * 0.05 * n / self.divisor()).sqrt()
    }
}

/// Every test this crate can run on a single sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Original,
    Kim,
    Pareschi,
    Proposed,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [TestKind::Original, TestKind::Kim, TestKind::Pareschi, TestKind::Proposed];

    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Original => "original",
            TestKind::Kim => "kim",
            TestKind::Pareschi => "pareschi",
            TestKind::Proposed => "proposed",
        }
    }

    pub fn dftt_variant(self) -> Option<DfttVariant> {
        match self {
            TestKind::Original => Some(DfttVariant::Original),
            TestKind::Kim => Some(DfttVariant::Kim),
            TestKind::Pareschi => Some(DfttVariant::Pareschi),
            TestKind::Proposed => None,
        }
    }

    /// Evaluates this test on a precomputed half spectrum.
    pub fn evaluate(self, spectrum: &SpectrumResult) -> Result<TestOutcome> {
        match self.dftt_variant() {
            Some(variant) => dftt_from_spectrum(spectrum, variant),
            None => crate::vtest::vtest_from_spectrum(spectrum),
        }
    }
}

impl From<DfttVariant> for TestKind {
    fn from(v: DfttVariant) -> Self {
        match v {
            DfttVariant::Original => TestKind::Original,
            DfttVariant::Kim => TestKind::Kim,
            DfttVariant::Pareschi => TestKind::Pareschi,
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" | "nist" => Ok(TestKind::Original),
            "kim" => Ok(TestKind::Kim),
            "pareschi" => Ok(TestKind::Pareschi),
            "proposed" | "variance" => Ok(TestKind::Proposed),
            other => Err(Error::Config(format!("unknown test '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    /// `d` for the DFT tests, `Ṽ_n` for the variance test (`proposed`).
    pub statistic: f64,
    pub pvalue: Probability,
    pub variant: TestKind,
    pub n: usize,
}

impl TestOutcome {
    pub(crate) fn from_statistic(statistic: f64, variant: TestKind, n: usize) -> Result<Self> {
        Ok(Self {
            statistic,
            pvalue: two_sided_pvalue(statistic)?,
            variant,
            n,
        })
    }
}

/// `#{ j : mag2[j] < threshold² }` over a half spectrum. Ties count as not below.
pub fn count_below_threshold(spectrum: &SpectrumResult, threshold: f64) -> Result<usize> {
    if !spectrum.is_half() {
        return Err(Error::FullSpectrum);
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::Config(format!("threshold must be positive, got {threshold}")));
    }
    Ok(count_below_squared(spectrum.mag2(), threshold * threshold))
}

fn count_below_squared(mag2: &[f64], threshold_squared: f64) -> usize {
    mag2.iter().filter(|&&p| p < threshold_squared).count()
}

pub fn dftt_from_spectrum(spectrum: &SpectrumResult, variant: DfttVariant) -> Result<TestOutcome> {
    if !spectrum.is_half() {
        return Err(Error::FullSpectrum);
    }
    let n = spectrum.n();
    let below = count_below_squared(spectrum.mag2(), variant.threshold_squared(n));
    TestOutcome::from_statistic(variant.statistic(n, below), variant.into(), n)
}

pub fn dftt_pvalue(x: &BitSequence, variant: DfttVariant) -> Result<TestOutcome> {
    let n = x.len();
    if n % 2 != 0 {
        return Err(Error::OddLength { n });
    }
    let spectrum = dft_power(&x.to_pm1(), true)?;
    dftt_from_spectrum(&spectrum, variant)
}
