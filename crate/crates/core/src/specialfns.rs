//! Complementary error function and chi-square tail probabilities.
//!
//! Both are computed from the regularized incomplete gamma function: a power
//! series for `P(a, x)` when `x < a + 1` and a Lentz continued fraction for
//! `Q(a, x)` otherwise. `erfc(z) = Q(1/2, z²)` for `z >= 0`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 100_000;
/// Rounding slack tolerated outside `[0, 1]` before a value is rejected.
const CLAMP_SLACK: f64 = 1e-15;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
#[repr(transparent)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    /// Accepts `[0, 1]`, snapping rounding residue within 1e-15 of either end.
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else if (-CLAMP_SLACK..0.0).contains(&value) {
            Ok(Self(0.0))
        } else if value > 1.0 && value <= 1.0 + CLAMP_SLACK {
            Ok(Self(1.0))
        } else {
            Err(Error::NotAProbability(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

pub fn erfc(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite(z));
    }
    let q = gamma_q(0.5, z * z);
    Ok(if z >= 0.0 { q } else { 2.0 - q })
}

/// Two-sided normal tail: `erfc(|z| / √2)`.
pub fn two_sided_pvalue(z: f64) -> Result<Probability> {
    Probability::new(erfc(z.abs() * FRAC_1_SQRT_2)?)
}

pub fn normal_cdf(x: f64) -> Result<f64> {
    Ok(0.5 * erfc(-x * FRAC_1_SQRT_2)?)
}

/// `P(χ²(dof) > stat)`.
pub fn chi2_sf(stat: f64, dof: u32) -> Result<Probability> {
    if stat.is_nan() {
        return Err(Error::NonFinite(stat));
    }
    if stat < 0.0 {
        return Err(Error::NegativeStatistic(stat));
    }
    if dof == 0 {
        return Err(Error::Config("chi-square needs at least one degree of freedom".into()));
    }
    if stat == f64::INFINITY {
        return Ok(Probability::ZERO);
    }
    Probability::new(gamma_q(f64::from(dof) / 2.0, stat / 2.0))
}

/// Regularized upper incomplete gamma `Q(a, x)` for `a > 0`, `x >= 0`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
