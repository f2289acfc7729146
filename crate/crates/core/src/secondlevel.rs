//! Second-level tests on a collection of per-sequence p-values.
//!
//! * Proportion: `r = #{p_i > 0.01}` must satisfy `|r − 0.99M| < 3√(0.99·0.01·M)`.
//! * Uniformity: a 10-bin χ² test on the p-values (`[0, .1), …, [.9, 1]`),
//!   passing when the resulting `p_uniform > 0.0001`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specialfns::{chi2_sf, Probability};

pub const ALPHA: f64 = 0.01;
pub const UNIFORMITY_ALPHA: f64 = 0.0001;
pub const BINS: usize = 10;
/// Minimum number of `p_uniform` values for [`meta_uniformity`].
pub const META_MIN_VALUES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProportionOutcome {
    pub r: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityOutcome {
    pub chi2: f64,
    pub p_uniform: Probability,
    pub pass: bool,
    pub bin_counts: [u64; BINS],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondLevelReport {
    pub m: usize,
    pub r: usize,
    pub proportion_pass: bool,
    pub chi2_stat: f64,
    pub p_uniform: Probability,
    pub uniformity_pass: bool,
    pub bin_counts: [u64; BINS],
}

impl SecondLevelReport {
    pub fn evaluate(pvalues: &[Probability]) -> Result<Self> {
        let proportion = proportion_test(pvalues)?;
        let uniformity = uniformity_test(pvalues)?;
        Ok(Self {
            m: pvalues.len(),
            r: proportion.r,
            proportion_pass: proportion.pass,
            chi2_stat: uniformity.chi2,
            p_uniform: uniformity.p_uniform,
            uniformity_pass: uniformity.pass,
            bin_counts: uniformity.bin_counts,
        })
    }

    /// Rejected by at least one criterion.
    pub fn rejected(&self) -> bool {
        !self.proportion_pass || !self.uniformity_pass
    }
}

/// Half-width of the acceptance band around `0.99·M`.
pub fn proportion_bound(m: usize) -> f64 {
    3.0 * (m as f64 * (1.0 - ALPHA) * ALPHA).sqrt()
}

pub fn proportion_verdict(r: usize, m: usize) -> bool {
    (r as f64 - (1.0 - ALPHA) * m as f64).abs() < proportion_bound(m)
}

pub fn proportion_test(pvalues: &[Probability]) -> Result<ProportionOutcome> {
    if pvalues.is_empty() {
        return Err(Error::TooFewValues { min: 1, got: 0 });
    }
    let r = pvalues.iter().filter(|p| p.value() > ALPHA).count();
    Ok(ProportionOutcome {
        r,
        pass: proportion_verdict(r, pvalues.len()),
    })
}

pub fn bin_counts(pvalues: &[Probability]) -> [u64; BINS] {
    let mut counts = [0u64; BINS];
    for p in pvalues {
        let bin = ((p.value() * BINS as f64) as usize).min(BINS - 1);
        counts[bin] += 1;
    }
    counts
}

/// χ² statistic of observed bin counts against equal expected counts.
pub fn chi2_from_counts(counts: &[u64; BINS]) -> f64 {
    let m: u64 = counts.iter().sum();
    let expected = m as f64 / BINS as f64;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}

pub fn uniformity_test(pvalues: &[Probability]) -> Result<UniformityOutcome> {
    if pvalues.is_empty() {
        return Err(Error::TooFewValues { min: 1, got: 0 });
    }
    if pvalues.len() < BINS {
        log::warn!("uniformity test on only {} p-values; χ² approximation is poor", pvalues.len());
    }
    let counts = bin_counts(pvalues);
    let chi2 = chi2_from_counts(&counts);
    let p_uniform = chi2_sf(chi2, (BINS - 1) as u32)?;
    Ok(UniformityOutcome {
        chi2,
        p_uniform,
        pass: p_uniform.value() > UNIFORMITY_ALPHA,
        bin_counts: counts,
    })
}

/// Uniformity test applied to a collection of `p_uniform` values.
pub fn meta_uniformity(p_uniform_values: &[Probability]) -> Result<Probability> {
    if p_uniform_values.len() < META_MIN_VALUES {
        return Err(Error::TooFewValues {
            min: META_MIN_VALUES,
            got: p_uniform_values.len(),
        });
    }
    Ok(uniformity_test(p_uniform_values)?.p_uniform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::Mt19937;

    fn probs(v: impl IntoIterator<Item = f64>) -> Vec<Probability> {
        v.into_iter().map(|p| Probability::new(p).unwrap()).collect()
    }

    fn with_r(m: usize, r: usize) -> Vec<Probability> {
        probs((0..m).map(|i| if i < r { 0.5 } else { 0.005 }))
    }

    fn from_counts(counts: [usize; BINS]) -> Vec<Probability> {
        probs(counts.iter().enumerate().flat_map(|(b, &c)| std::iter::repeat_n(b as f64 / 10.0 + 0.05, c)))
    }

    #[test]
    fn proportion_examples() {
        assert!((proportion_bound(1000) - 9.439_279_633_531_36).abs() < 1e-12);
        assert_eq!(proportion_test(&with_r(1000, 990)).unwrap(), ProportionOutcome { r: 990, pass: true });
        assert!(!proportion_test(&with_r(1000, 980)).unwrap().pass);
        assert!(!proportion_test(&with_r(1000, 1000)).unwrap().pass);
        assert!(proportion_test(&with_r(1000, 981)).unwrap().pass);
    }

    #[test]
    fn proportion_threshold_is_strict() {
        let out = proportion_test(&probs([0.01, 0.010_000_001, 0.5])).unwrap();
        assert_eq!(out.r, 2);
    }

    #[test]
    fn small_set_band() {
        // M = 100: band half-width 3·√0.99 ≈ 2.985
        assert!(proportion_verdict(99, 100));
        assert!(proportion_verdict(97, 100));
        assert!(!proportion_verdict(96, 100));
        assert!(proportion_verdict(100, 100));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(proportion_test(&[]).is_err());
        assert!(uniformity_test(&[]).is_err());
        assert!(SecondLevelReport::evaluate(&[]).is_err());
    }

    #[test]
    fn uniform_counts() {
        let out = uniformity_test(&from_counts([100; BINS])).unwrap();
        assert_eq!(out.chi2, 0.0);
        assert_eq!(out.p_uniform.value(), 1.0);
        assert!(out.pass);
    }

    #[test]
    fn concentrated_counts() {
        let out = uniformity_test(&from_counts([1000, 0, 0, 0, 0, 0, 0, 0, 0, 0])).unwrap();
        assert!((out.chi2 - 9000.0).abs() < 1e-9);
        assert!(out.p_uniform.value() < 1e-300);
        assert!(!out.pass);
    }

    #[test]
    fn mild_deviation_counts() {
        let out = uniformity_test(&from_counts([110, 95, 105, 90, 100, 100, 95, 105, 100, 100])).unwrap();
        assert!((out.chi2 - 3.0).abs() < 1e-12);
        assert!((out.p_uniform.value() - 0.9643).abs() < 5e-5);
        assert!(out.pass);
    }

    #[test]
    fn bin_edges() {
        let counts = bin_counts(&probs([0.0, 0.1, 0.0999, 0.9, 1.0, 0.95]));
        assert_eq!(counts, [2, 1, 0, 0, 0, 0, 0, 0, 0, 3]);
    }

    #[test]
    fn meta_uniformity_examples() {
        let striped = probs((0..1000).map(|i| (i % 10) as f64 / 10.0 + 0.05));
        assert_eq!(meta_uniformity(&striped).unwrap().value(), 1.0);
        let zeros = probs(std::iter::repeat_n(0.0, 1000));
        assert!(meta_uniformity(&zeros).unwrap().value() < 1e-6);
        assert!(matches!(meta_uniformity(&zeros[..9]), Err(Error::TooFewValues { .. })));
    }

    fn uniform_draws(rng: &mut Mt19937, m: usize) -> Vec<Probability> {
        probs((0..m).map(|_| f64::from(rng.next_u32()) / f64::from(u32::MAX)))
    }

    #[test]
    fn meta_uniformity_on_uniform_draws() {
        let mut rng = Mt19937::new(123);
        let p = meta_uniformity(&uniform_draws(&mut rng, 1000)).unwrap();
        assert!(p.value() > UNIFORMITY_ALPHA);
    }

    #[test]
    fn proportion_false_rejection_rate() {
        let mut rng = Mt19937::new(2718);
        let rejected = (0..500)
            .filter(|_| !proportion_test(&uniform_draws(&mut rng, 1000)).unwrap().pass)
            .count();
        assert!(rejected < 10, "{rejected} of 500 sets rejected");
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = Mt19937::new(1);
        let mut p = uniform_draws(&mut rng, 300);
        let a = SecondLevelReport::evaluate(&p).unwrap();
        p.reverse();
        p.rotate_left(17);
        assert_eq!(a, SecondLevelReport::evaluate(&p).unwrap());
    }

    #[test]
    fn report_invariants() {
        let mut rng = Mt19937::new(9);
        let p = uniform_draws(&mut rng, 777);
        let rep = SecondLevelReport::evaluate(&p).unwrap();
        assert!(rep.r <= rep.m);
        assert_eq!(rep.bin_counts.iter().sum::<u64>(), 777);
        assert_eq!(rep.uniformity_pass, rep.p_uniform.value() > UNIFORMITY_ALPHA);
        assert_eq!(rep.proportion_pass, proportion_verdict(rep.r, rep.m));
    }
}
