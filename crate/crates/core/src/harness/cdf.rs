use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, SequenceSource};
use crate::harness::experiment::map_sequences;
use crate::specialfns::normal_cdf;
use crate::spectral::dft_power;
use crate::vtest::{v_tilde_from_spectrum, MIN_TEST_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub v_tilde: f64,
    pub empirical: f64,
    pub normal: f64,
}

/// Sorted `Ṽ_n` samples with their empirical and standard-normal CDFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    pub n: usize,
    pub rows: Vec<CdfRow>,
    /// Kolmogorov–Smirnov distance to the standard normal.
    pub ks: f64,
}

impl CdfTable {
    pub fn from_samples(n: usize, mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewValues { min: 1, got: 0 });
        }
        samples.sort_by(f64::total_cmp);
        let count = samples.len() as f64;
        let mut ks = 0.0f64;
        let rows = samples
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let normal = normal_cdf(v)?;
                let below = i as f64 / count;
                let empirical = (i + 1) as f64 / count;
                ks = ks.max((empirical - normal).abs()).max((normal - below).abs());
                Ok(CdfRow { v_tilde: v, empirical, normal })
            })
            .collect::<Result<_>>()?;
        Ok(Self { n, rows, ks })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["v_tilde", "empirical_cdf", "normal_cdf"]).map_err(|e| Error::Io(e.into()))?;
        for r in &self.rows {
            w.write_record([r.v_tilde.to_string(), r.empirical.to_string(), r.normal.to_string()])
                .map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `Ṽ_n` (half-spectrum form) of sequences `0..samples` from `generator`.
pub fn sample_v_tilde(n: usize, samples: usize, generator: &GeneratorSpec, workers: usize) -> Result<Vec<f64>> {
    if n % 2 != 0 {
        return Err(Error::OddLength { n });
    }
    if n < MIN_TEST_LEN {
        return Err(Error::TooShort { n, min: MIN_TEST_LEN });
    }
    let source = SequenceSource::open(generator)?;
    map_sequences(&source, n, samples, workers, |_, bits| {
        let spectrum = dft_power(&bits.to_pm1(), true)?;
        Ok(v_tilde_from_spectrum(&spectrum)?.v_tilde)
    })
}

pub fn empirical_cdf(n: usize, samples: usize, generator: &GeneratorSpec, workers: usize) -> Result<CdfTable> {
    if samples < 100 {
        log::warn!("empirical CDF from only {samples} samples");
    }
    CdfTable::from_samples(n, sample_v_tilde(n, samples, generator, workers)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample() {
        let t = empirical_cdf(64, 1, &GeneratorSpec::Mt19937 { seed: 1 }, 1).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].empirical, 1.0);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        // midpoints of N equal-probability cells of the normal distribution
        let count = 1000;
        let samples: Vec<f64> = (0..count)
            .map(|i| {
                let target = (i as f64 + 0.5) / count as f64;
                let (mut lo, mut hi) = (-10.0f64, 10.0f64);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid).unwrap() < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        let t = CdfTable::from_samples(0, samples).unwrap();
        assert!((t.ks - 0.5 / count as f64).abs() < 1e-9);
    }

    #[test]
    fn rows_are_sorted() {
        let t = empirical_cdf(256, 200, &GeneratorSpec::Mt19937 { seed: 2 }, 2).unwrap();
        assert!(t.rows.windows(2).all(|w| w[0].v_tilde <= w[1].v_tilde));
        assert!(t.rows.iter().all(|r| (0.0..=1.0).contains(&r.normal)));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 201);
    }

    #[test]
    fn rejects_bad_lengths() {
        let g = GeneratorSpec::Mt19937 { seed: 1 };
        assert!(empirical_cdf(63, 10, &g, 1).is_err());
        assert!(empirical_cdf(2, 10, &g, 1).is_err());
        assert!(CdfTable::from_samples(4, vec![]).is_err());
    }
}
