//! Slow, exact evaluations of `V_n` used to validate the spectral path.

use rayon::prelude::*;

use crate::bitseq::PmSequence;
use crate::error::{Error, Result};

pub const DELTA_ORACLE_MAX_LEN: usize = 64;
pub const ENUMERATION_MAX_LEN: usize = 22;

/// `δ_x = 1` iff `x ∈ {0, n, −n}`.
fn delta(x: i64, n: i64) -> bool {
    x == 0 || x == n || x == -n
}

/// `V_n = (1/n²) Σ_{a,b,c,d} x_a x_b x_c x_d δ_{a−b+c−d} − 1`, evaluated in
/// integers. For fixed `(a, b, c)` at most one `d` in `[0, n)` satisfies the
/// delta, so only the three candidates `a−b+c`, `a−b+c∓n` are visited.
pub fn v_n_delta_oracle(x: &PmSequence) -> Result<f64> {
    let n = x.len();
    if n > DELTA_ORACLE_MAX_LEN {
        return Err(Error::TooLarge { n, max: DELTA_ORACLE_MAX_LEN });
    }
    let v = x.values();
    let ni = n as i64;
    let mut total: i64 = 0;
    for a in 0..ni {
        for b in 0..ni {
            for c in 0..ni {
                let abc = i64::from(v[a as usize] * v[b as usize] * v[c as usize]);
                for shift in [0, ni, -ni] {
                    let d = a - b + c - shift;
                    if (0..ni).contains(&d) && delta(a - b + c - d, ni) {
                        total += abc * i64::from(v[d as usize]);
                    }
                }
            }
        }
    }
    Ok(total as f64 / (ni * ni) as f64 - 1.0)
}

/// `V_n = (1/n²) Σ_τ R(τ)² − 1` with the cyclic autocorrelation
/// `R(τ) = Σ_k x_k x_{(k+τ) mod n}`. Exact; O(n²).
pub fn v_n_autocorrelation(x: &PmSequence) -> f64 {
    let v = x.values();
    let n = v.len();
    let mut sum: i64 = 0;
    for tau in 0..n {
        let r: i64 = (0..n).map(|k| i64::from(v[k] * v[(k + tau) % n])).sum();
        sum += r * r;
    }
    sum as f64 / (n * n) as f64 - 1.0
}

/// `Σ_τ R(τ)²` for a sequence packed as the low `n` bits of `mask` (1 ↦ +1).
fn autocorrelation_energy(mask: u32, n: u32) -> u64 {
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut total = 0u64;
    for tau in 0..n {
        let rotated = if tau == 0 {
            mask
        } else {
            ((mask >> tau) | (mask << (n - tau))) & full
        };
        let disagreements = (mask ^ rotated).count_ones() as i64;
        let r = i64::from(n) - 2 * disagreements;
        total += (r * r) as u64;
    }
    total
}

/// Distribution of `V_n` over all `2ⁿ` equiprobable sequences.
#[derive(Debug, Clone)]
pub struct VnMoments {
    n: usize,
    /// `histogram[s]` = number of sequences with `Σ_τ R(τ)² = s`.
    histogram: Vec<u64>,
    total: u64,
}

impl VnMoments {
    pub fn n(&self) -> usize {
        self.n
    }

    fn v_of(&self, energy: usize) -> f64 {
        let n = self.n as f64;
        energy as f64 / (n * n) - 1.0
    }

    pub fn mean(&self) -> f64 {
        // exact integer sum first
        let num: u128 = self
            .histogram
            .iter()
            .enumerate()
            .map(|(s, &c)| s as u128 * u128::from(c))
            .sum();
        let n = self.n as f64;
        (num as f64 / self.total as f64) / (n * n) - 1.0
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    /// `E[(V_n − E[V_n])^m]`.
    pub fn central_moment(&self, m: u32) -> f64 {
        let mean = self.mean();
        let acc: f64 = self
            .histogram
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| c as f64 * (self.v_of(s) - mean).powi(m as i32))
            .sum();
        acc / self.total as f64
    }
}

/// Enumerates every ±1 sequence of length `n ≤ 22`.
pub fn exact_v_n_moments(n: usize) -> Result<VnMoments> {
    if n > ENUMERATION_MAX_LEN {
        return Err(Error::TooLarge { n, max: ENUMERATION_MAX_LEN });
    }
    if n < 2 {
        return Err(Error::TooShort { n, min: 2 });
    }
    let bits = n as u32;
    let max_energy = n * n * n;
    // Negating every entry leaves R unchanged, so fix the top bit and double.
    let half = 1u32 << (bits - 1);
    let chunk = 1u32 << (bits - 1).min(12);
    let histogram = (0..half.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut local = vec![0u64; max_energy + 1];
            let start = c * chunk;
            let end = (start + chunk).min(half);
            for mask in start..end {
                local[autocorrelation_energy(mask, bits) as usize] += 2;
            }
            local
        })
        .reduce(
            || vec![0u64; max_energy + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(VnMoments {
        n,
        histogram,
        total: 1u64 << bits,
    })
}

/// Exact `E[Ṽ_n^m]` for the full-spectrum statistic `√(n/8)(V_n − E[V_n])`.
pub fn moment_oracle(n: usize, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::Config("moment order must be positive".into()));
    }
    let moments = exact_v_n_moments(n)?;
    Ok((n as f64 / 8.0).powf(f64::from(m) / 2.0) * moments.central_moment(m))
}
