//! DFT power spectra of ±1 sequences.
//!
//! `mag2[j] = |S_j|² = (Σ_k x_k cos(2πkj/n))² + (Σ_k x_k sin(2πkj/n))²`.
//! The fast path uses a planned FFT valid for every length (mixed radix with
//! Bluestein/Rader fallbacks for awkward prime factors); the direct path
//! evaluates the defining sums and is only meant for validation.

use std::cell::RefCell;
use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::bitseq::PmSequence;
use crate::error::{Error, Result};

/// Largest length accepted by [`dft_power_direct`].
pub const DIRECT_MAX_LEN: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    n: usize,
    mag2: Vec<f64>,
    half: bool,
}

impl SpectrumResult {
    /// Length of the transformed sequence (not the number of stored bins).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mag2(&self) -> &[f64] {
        &self.mag2
    }

    /// True when only bins `0 .. n/2` are stored.
    pub fn is_half(&self) -> bool {
        self.half
    }

    /// `Σ_j |S_j|⁴` over the stored bins, with compensated accumulation.
    pub fn sum_fourth_powers(&self) -> f64 {
        compensated_sum(self.mag2.iter().map(|&p| p * p))
    }

    pub fn total_power(&self) -> f64 {
        compensated_sum(self.mag2.iter().copied())
    }

    /// The first `n/2` bins of a full spectrum.
    pub fn to_half(&self) -> Result<SpectrumResult> {
        if self.n % 2 != 0 {
            return Err(Error::OddLength { n: self.n });
        }
        Ok(SpectrumResult {
            n: self.n,
            mag2: self.mag2[..self.n / 2].to_vec(),
            half: true,
        })
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static SCRATCH: RefCell<Vec<Complex<f64>>> = const { RefCell::new(Vec::new()) };
}

/// Squared DFT magnitudes in O(n log n). With `half`, only `j < n/2` is returned
/// and `n` must be even.
pub fn dft_power(x: &PmSequence, half: bool) -> Result<SpectrumResult> {
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { n, min: 2 });
    }
    if half && n % 2 != 0 {
        return Err(Error::OddLength { n });
    }
    let mut buf: Vec<Complex<f64>> = x
        .values()
        .iter()
        .map(|&v| Complex::new(f64::from(v), 0.0))
        .collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    SCRATCH.with(|s| {
        let mut scratch = s.borrow_mut();
        let need = fft.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex::new(0.0, 0.0));
        }
        fft.process_with_scratch(&mut buf, &mut scratch[..need]);
    });
    let count = if half { n / 2 } else { n };
    let mag2 = buf[..count].iter().map(|c| c.norm_sqr()).collect();
    Ok(SpectrumResult { n, mag2, half })
}

/// Literal evaluation of the defining sums, O(n²). Returns the full spectrum.
pub fn dft_power_direct(x: &PmSequence) -> Result<SpectrumResult> {
    let n = x.len();
    if n > DIRECT_MAX_LEN {
        return Err(Error::TooLarge { n, max: DIRECT_MAX_LEN });
    }
    if n < 2 {
        return Err(Error::TooShort { n, min: 2 });
    }
    // Angles are indexed by the exact residue (k·j) mod n.
    let (cos, sin): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|r| {
            let angle = TAU * r as f64 / n as f64;
            (angle.cos(), angle.sin())
        })
        .unzip();
    let values = x.values();
    let mag2 = (0..n)
        .map(|j| {
            let mut re = Neumaier::default();
            let mut im = Neumaier::default();
            for (k, &v) in values.iter().enumerate() {
                let r = (k * j) % n;
                let v = f64::from(v);
                re.add(v * cos[r]);
                im.add(v * sin[r]);
            }
            let (re, im) = (re.total(), im.total());
            re * re + im * im
        })
        .collect();
    Ok(SpectrumResult { n, mag2, half: false })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}
