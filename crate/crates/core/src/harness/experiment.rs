use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitseq::BitSequence;
use crate::dftt::TestKind;
use crate::error::{Error, Result};
use crate::generators::{inject_periodic, PeriodicDefect, SequenceSource};
use crate::harness::config::ExperimentConfig;
use crate::secondlevel::{meta_uniformity, SecondLevelReport, ALPHA, META_MIN_VALUES};
use crate::specialfns::Probability;
use crate::spectral::dft_power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Batch,
    DetectionSweep,
}

/// One set evaluated by one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetRow {
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    pub set_id: usize,
    pub variant: TestKind,
    #[serde(flatten)]
    pub report: SecondLevelReport,
}

/// Aggregates for one test (and one period in a sweep).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    pub variant: TestKind,
    pub pvalues: usize,
    /// Sequences with `p < 0.01`.
    pub small_pvalues: usize,
    pub proportion_rejections: usize,
    pub uniformity_rejections: usize,
    pub both_rejections: usize,
    /// Sets rejected by at least one criterion.
    pub total_rejections: usize,
    /// Uniformity test over the per-set `p_uniform`; needs at least 10 sets.
    pub meta_uniformity: Option<Probability>,
}

impl VariantSummary {
    pub fn small_fraction(&self) -> f64 {
        self.small_pvalues as f64 / self.pvalues as f64
    }
}

/// Per-sequence p-values, kept when `record_pvalues` is set. Every test in a
/// row was computed from the sequence whose content hash is `hash`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueRow {
    pub period: Option<usize>,
    pub set_id: usize,
    pub index: usize,
    pub hash: u64,
    pub pvalues: Vec<Probability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub generator: String,
    pub n: usize,
    #[serde(rename = "M")]
    pub per_set: usize,
    pub sets: usize,
    pub tests: Vec<TestKind>,
    pub summaries: Vec<VariantSummary>,
    pub set_rows: Vec<SetRow>,
    #[serde(skip)]
    pub pvalue_rows: Option<Vec<PValueRow>>,
}

impl ExperimentReport {
    pub fn summary(&self, variant: TestKind, period: Option<usize>) -> Option<&VariantSummary> {
        self.summaries.iter().find(|s| s.variant == variant && s.period == period)
    }

    /// `(T, proportion, uniformity, total)` detection counts for one test.
    pub fn detection_series(&self, variant: TestKind) -> Vec<(usize, usize, usize, usize)> {
        self.summaries
            .iter()
            .filter(|s| s.variant == variant)
            .filter_map(|s| {
                s.period
                    .map(|t| (t, s.proportion_rejections, s.uniformity_rejections, s.total_rejections))
            })
            .collect()
    }
}

pub fn sequence_hash(bits: &BitSequence) -> u64 {
    let mut h = DefaultHasher::new();
    bits.hash(&mut h);
    h.finish()
}

/// Runs `f` on sequences `0..count` of `source` on a pool of `workers`
/// threads. Results come back in index order.
pub fn map_sequences<T, F>(source: &SequenceSource, n: usize, count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, BitSequence) -> Result<T> + Sync,
{
    if let Some(cap) = source.capacity(n) {
        if cap < count {
            return Err(Error::Truncated {
                needed: count * n,
                available: cap * n,
            });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| f(i, source.sequence(i as u64, n)?))
            .collect()
    })
}

struct SequenceResult {
    hash: Option<u64>,
    pvalues: Vec<Probability>,
}

fn evaluate_sequence(
    bits: BitSequence,
    defect: Option<PeriodicDefect>,
    tests: &[TestKind],
    keep_hash: bool,
) -> Result<SequenceResult> {
    let pm = match defect {
        Some(d) => inject_periodic(&bits.to_pm1(), d)?,
        None => bits.to_pm1(),
    };
    let hash = keep_hash.then(|| match defect {
        Some(_) => sequence_hash(&pm.to_bits()),
        None => sequence_hash(&bits),
    });
    let spectrum = dft_power(&pm, true)?;
    let pvalues = tests
        .iter()
        .map(|t| t.evaluate(&spectrum).map(|o| o.pvalue))
        .collect::<Result<_>>()?;
    Ok(SequenceResult { hash, pvalues })
}

/// Experiment 1: every selected test on the same `sets × M` sequences.
pub fn run_batch(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut config = config.clone();
    config.validate()?;
    run(&config, ExperimentKind::Batch, &[None])
}

/// Experiment 2: for each period `T`, the same base sequences with the defect
/// injected, evaluated by every selected test.
pub fn run_detection_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut config = config.clone();
    config.validate()?;
    if config.periods.is_empty() {
        return Err(Error::Config("the period sweep is empty".into()));
    }
    let periods: Vec<_> = config.periods.iter().copied().map(Some).collect();
    run(&config, ExperimentKind::DetectionSweep, &periods)
}

fn run(config: &ExperimentConfig, kind: ExperimentKind, periods: &[Option<PeriodicDefect>]) -> Result<ExperimentReport> {
    let source = SequenceSource::open(&config.generator)?;
    let total = config
        .sets
        .checked_mul(config.per_set)
        .ok_or_else(|| Error::Config("sets × per-set overflows".into()))?;
    let mut set_rows = Vec::new();
    let mut summaries = Vec::new();
    let mut pvalue_rows = config.record_pvalues.then(Vec::new);

    for &defect in periods {
        let period = defect.map(PeriodicDefect::period);
        let results = map_sequences(&source, config.n, total, config.workers, |_, bits| {
            evaluate_sequence(bits, defect, &config.tests, config.record_pvalues)
        })?;

        for (t_index, &test) in config.tests.iter().enumerate() {
            let mut summary = VariantSummary {
                period,
                variant: test,
                pvalues: total,
                small_pvalues: 0,
                proportion_rejections: 0,
                uniformity_rejections: 0,
                both_rejections: 0,
                total_rejections: 0,
                meta_uniformity: None,
            };
            let mut p_uniform = Vec::with_capacity(config.sets);
            for set_id in 0..config.sets {
                let chunk = &results[set_id * config.per_set..(set_id + 1) * config.per_set];
                let pvalues: Vec<Probability> = chunk.iter().map(|r| r.pvalues[t_index]).collect();
                summary.small_pvalues += pvalues.iter().filter(|p| p.value() < ALPHA).count();
                let report = SecondLevelReport::evaluate(&pvalues)?;
                summary.proportion_rejections += usize::from(!report.proportion_pass);
                summary.uniformity_rejections += usize::from(!report.uniformity_pass);
                summary.both_rejections += usize::from(!report.proportion_pass && !report.uniformity_pass);
                summary.total_rejections += usize::from(report.rejected());
                p_uniform.push(report.p_uniform);
                set_rows.push(SetRow { period, set_id, variant: test, report });
            }
            if p_uniform.len() >= META_MIN_VALUES {
                summary.meta_uniformity = Some(meta_uniformity(&p_uniform)?);
            }
            summaries.push(summary);
        }

        if let Some(rows) = pvalue_rows.as_mut() {
            rows.extend(results.into_iter().enumerate().map(|(g, r)| PValueRow {
                period,
                set_id: g / config.per_set,
                index: g % config.per_set,
                hash: r.hash.unwrap_or_default(),
                pvalues: r.pvalues,
            }));
        }
    }

    Ok(ExperimentReport {
        experiment: kind,
        generator: config.generator.name().to_string(),
        n: config.n,
        per_set: config.per_set,
        sets: config.sets,
        tests: config.tests.clone(),
        summaries,
        set_rows,
        pvalue_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::new(TestKind::ALL.to_vec(), 256, 40, 3, GeneratorSpec::Mt19937 { seed: 17 })
    }

    #[test]
    fn batch_shape() {
        let report = run_batch(&small_config()).unwrap();
        assert_eq!(report.set_rows.len(), 3 * 4);
        assert_eq!(report.summaries.len(), 4);
        for s in &report.summaries {
            assert_eq!(s.pvalues, 120);
            assert_eq!(s.total_rejections, s.proportion_rejections + s.uniformity_rejections - s.both_rejections);
            assert!(s.meta_uniformity.is_none());
        }
        for row in &report.set_rows {
            assert_eq!(row.report.m, 40);
            assert_eq!(row.report.bin_counts.iter().sum::<u64>(), 40);
        }
    }

    #[test]
    fn all_tests_see_the_same_sequences() {
        let mut config = small_config();
        config.record_pvalues = true;
        let report = run_batch(&config).unwrap();
        let rows = report.pvalue_rows.unwrap();
        assert_eq!(rows.len(), 120);
        let source = SequenceSource::open(&config.generator).unwrap();
        for (g, row) in rows.iter().enumerate() {
            let bits = source.sequence(g as u64, config.n).unwrap();
            assert_eq!(row.hash, sequence_hash(&bits));
            assert_eq!(row.pvalues.len(), 4);
            for (t, &kind) in config.tests.iter().enumerate() {
                let direct = match kind.dftt_variant() {
                    Some(v) => crate::dftt::dftt_pvalue(&bits, v).unwrap(),
                    None => crate::vtest::vtest_pvalue(&bits).unwrap(),
                };
                assert_eq!(row.pvalues[t], direct.pvalue);
            }
        }
    }

    #[test]
    fn workers_do_not_change_results() {
        let mut a = small_config();
        a.workers = 1;
        let mut b = small_config();
        b.workers = 4;
        assert_eq!(run_batch(&a).unwrap(), run_batch(&b).unwrap());
    }

    #[test]
    fn sweep_requires_periods() {
        assert!(run_detection_sweep(&small_config()).is_err());
    }

    #[test]
    fn strong_defect_is_always_detected() {
        let mut config = small_config();
        config.periods = vec![PeriodicDefect::new(2).unwrap(), PeriodicDefect::new(4).unwrap()];
        let report = run_detection_sweep(&config).unwrap();
        assert_eq!(report.experiment, ExperimentKind::DetectionSweep);
        for s in &report.summaries {
            assert_eq!(s.total_rejections, 3, "{:?}", s);
        }
        assert_eq!(report.detection_series(TestKind::Proposed).len(), 2);
    }

    #[test]
    fn file_source_capacity_is_checked() {
        let dir = std::env::temp_dir().join(format!("specvar-cap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bits.bin");
        std::fs::write(&path, vec![0xA5u8; 128]).unwrap();
        let mut config = ExperimentConfig::new(
            vec![TestKind::Proposed],
            64,
            4,
            3,
            GeneratorSpec::File { path: path.clone(), format: crate::bitseq::BitFormat::Raw },
        );
        assert!(run_batch(&config).is_ok());
        config.sets = 3;
        config.per_set = 9;
        assert!(matches!(run_batch(&config), Err(Error::Truncated { .. })));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
