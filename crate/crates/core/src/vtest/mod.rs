//! The variance-of-power-spectrum statistic and its test.
//!
//! With `S_j` the DFT of the ±1 sequence, the variance of the power spectrum
//! `(1/n)|S_j|²` reduces, by Parseval, to
//!
//! ```text
//! V_n = (1/n³) Σ_{j<n} |S_j|⁴ − 1,      E[V_n] = 1 (n even), 1 − 1/n (n odd)
//! ```
//!
//! and `Ṽ_n = √(n/8)·(V_n − E[V_n])` is asymptotically standard normal. The
//! shipped test statistic uses the half-spectrum form
//!
//! ```text
//! Ṽ_n = (1/√(2n⁵)) Σ_{j<n/2} |S_j|⁴ − √(n/2)
//! ```
//!
//! which counts the DC bin once and leaves out the Nyquist bin `j = n/2`. The
//! two forms agree up to `O(n^{-1/2})` for random input but differ sharply on
//! period-2 signals, whose whole spectrum sits in the Nyquist bin.

mod oracle;

pub use oracle::{exact_v_n_moments, moment_oracle, v_n_autocorrelation, v_n_delta_oracle, VnMoments};

use serde::{Deserialize, Serialize};

use crate::bitseq::{BitSequence, PmSequence};
use crate::dftt::{TestKind, TestOutcome};
use crate::error::{Error, Result};
use crate::spectral::{dft_power, SpectrumResult};

/// Shortest sequence the half-spectrum test accepts.
pub const MIN_TEST_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VFormula {
    /// Half-spectrum form used by the test.
    CanonicalHalf,
    /// `√(n/8)(V_n − E[V_n])` over the full spectrum.
    FullSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VStatistic {
    /// For `CanonicalHalf`, the value of `V_n` implied by the half-spectrum sum,
    /// `2·Σ_{j<n/2}|S_j|⁴ / n³ − 1`.
    pub v_n: f64,
    pub v_tilde: f64,
    pub n: usize,
    pub formula: VFormula,
}

/// `E[V_n]` under the null hypothesis.
pub fn expected_v_n(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        1.0 - 1.0 / n as f64
    }
}

fn full_from_spectrum(spectrum: &SpectrumResult) -> f64 {
    let n = spectrum.n() as f64;
    spectrum.sum_fourth_powers() / (n * n * n) - 1.0
}

/// `V_n` from the full spectrum.
pub fn v_n_full(x: &PmSequence) -> Result<f64> {
    Ok(full_from_spectrum(&dft_power(x, false)?))
}

/// `√(n/8)(V_n − E[V_n])`, valid for every `n ≥ 2`.
pub fn v_tilde_full(x: &PmSequence) -> Result<VStatistic> {
    let n = x.len();
    let v_n = v_n_full(x)?;
    Ok(VStatistic {
        v_n,
        v_tilde: (n as f64 / 8.0).sqrt() * (v_n - expected_v_n(n)),
        n,
        formula: VFormula::FullSpectrum,
    })
}

/// The half-spectrum statistic from a precomputed half spectrum.
pub fn v_tilde_from_spectrum(spectrum: &SpectrumResult) -> Result<VStatistic> {
    if !spectrum.is_half() {
        return Err(Error::FullSpectrum);
    }
    let n = spectrum.n();
    if n < MIN_TEST_LEN {
        return Err(Error::TooShort { n, min: MIN_TEST_LEN });
    }
    let nf = n as f64;
    let half_sum = spectrum.sum_fourth_powers();
    // Scale first, subtract the centering constant last.
    let scaled = half_sum / (2.0 * nf.powi(5)).sqrt();
    let v_tilde = scaled - (nf / 2.0).sqrt();
    Ok(VStatistic {
        v_n: 2.0 * half_sum / (nf * nf * nf) - 1.0,
        v_tilde,
        n,
        formula: VFormula::CanonicalHalf,
    })
}

pub fn v_tilde_canonical(x: &PmSequence) -> Result<VStatistic> {
    let n = x.len();
    if n % 2 != 0 {
        return Err(Error::OddLength { n });
    }
    if n < MIN_TEST_LEN {
        return Err(Error::TooShort { n, min: MIN_TEST_LEN });
    }
    v_tilde_from_spectrum(&dft_power(x, true)?)
}

pub fn vtest_from_spectrum(spectrum: &SpectrumResult) -> Result<TestOutcome> {
    let stat = v_tilde_from_spectrum(spectrum)?;
    TestOutcome::from_statistic(stat.v_tilde, TestKind::Proposed, stat.n)
}

/// The variance test (`TestKind::Proposed`): `p = erfc(|Ṽ_n| / √2)` with the half-spectrum `Ṽ_n`.
pub fn vtest_pvalue(x: &BitSequence) -> Result<TestOutcome> {
    let stat = v_tilde_canonical(&x.to_pm1())?;
    TestOutcome::from_statistic(stat.v_tilde, TestKind::Proposed, stat.n)
}
