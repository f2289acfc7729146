use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitseq::BitFormat;
use crate::dftt::TestKind;
use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, PeriodicDefect};

pub const DEFAULT_SEED: u32 = 5489;
pub const DEFAULT_KEY: [u8; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

/// A fully resolved experiment description. Two runs with equal configs
/// produce byte-identical reports, whatever `workers` is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub tests: Vec<TestKind>,
    pub n: usize,
    /// Sequences per set (`M`).
    pub per_set: usize,
    pub sets: usize,
    pub generator: GeneratorSpec,
    /// Defect periods to sweep; empty for a plain batch.
    pub periods: Vec<PeriodicDefect>,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
    pub workers: usize,
    /// Keep one row per sequence with its content hash and every p-value.
    pub record_pvalues: bool,
}

impl ExperimentConfig {
    pub fn new(tests: Vec<TestKind>, n: usize, per_set: usize, sets: usize, generator: GeneratorSpec) -> Self {
        Self {
            tests,
            n,
            per_set,
            sets,
            generator,
            periods: Vec::new(),
            output: None,
            format: ReportFormat::Csv,
            workers: 1,
            record_pvalues: false,
        }
    }

    /// Sorts and dedups `tests`/`periods` and checks every constraint.
    pub fn validate(&mut self) -> Result<()> {
        self.tests.sort();
        self.tests.dedup();
        self.periods.sort();
        self.periods.dedup();
        if self.tests.is_empty() {
            return Err(Error::Config("at least one test must be selected".into()));
        }
        if self.n % 2 != 0 || self.n < crate::vtest::MIN_TEST_LEN {
            return Err(Error::Config(format!("length must be even and at least 4, got {}", self.n)));
        }
        if self.per_set == 0 || self.sets == 0 {
            return Err(Error::Config("per-set and sets must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let Some(bad) = self.periods.iter().find(|p| 2 * p.period() > self.n) {
            return Err(Error::PeriodTooLarge { period: bad.period(), n: self.n });
        }
        Ok(())
    }
}

/// `1, 2, 4, …` up to `n/2`.
pub fn geometric_periods(n: usize) -> Vec<PeriodicDefect> {
    std::iter::successors(Some(1usize), |t| t.checked_mul(2))
        .take_while(|&t| 2 * t <= n)
        .map(|t| PeriodicDefect::new(t).expect("positive"))
        .collect()
}

/// Either a single comma-separated string or a list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ListValue<T> {
    One(String),
    Many(Vec<T>),
}

impl<T: FromStr<Err = Error> + Clone> ListValue<T> {
    fn resolve(&self) -> Result<Vec<T>> {
        match self {
            ListValue::Many(v) => Ok(v.clone()),
            ListValue::One(s) => parse_list(s),
        }
    }
}

pub fn parse_list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Period(usize);

impl FromStr for Period {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(Period).map_err(|_| Error::Config(format!("invalid period '{s}'")))
    }
}

/// Optional settings, from a config file or from command-line flags. Keys are
/// the long flag names.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    pub test: Option<ListValue<TestKind>>,
    pub length: Option<usize>,
    pub per_set: Option<usize>,
    pub sets: Option<usize>,
    pub samples: Option<usize>,
    pub gen: Option<String>,
    pub seed: Option<u32>,
    pub key: Option<String>,
    pub ctr: Option<String>,
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub format: Option<BitFormat>,
    pub period: Option<ListValue<usize>>,
    pub out: Option<PathBuf>,
    pub report_format: Option<ReportFormat>,
    pub workers: Option<usize>,
    pub pvalues_out: Option<PathBuf>,
}

impl Settings {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            test: over.test.or(self.test),
            length: over.length.or(self.length),
            per_set: over.per_set.or(self.per_set),
            sets: over.sets.or(self.sets),
            samples: over.samples.or(self.samples),
            gen: over.gen.or(self.gen),
            seed: over.seed.or(self.seed),
            key: over.key.or(self.key),
            ctr: over.ctr.or(self.ctr),
            input: over.input.or(self.input),
            format: over.format.or(self.format),
            period: over.period.or(self.period),
            out: over.out.or(self.out),
            report_format: over.report_format.or(self.report_format),
            workers: over.workers.or(self.workers),
            pvalues_out: over.pvalues_out.or(self.pvalues_out),
        }
    }

    pub fn tests(&self) -> Result<Vec<TestKind>> {
        match &self.test {
            Some(list) => list.resolve(),
            None => Ok(vec![TestKind::Kim, TestKind::Pareschi, TestKind::Proposed]),
        }
    }

    pub fn generator(&self) -> Result<GeneratorSpec> {
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        match self.gen.as_deref().unwrap_or("mt") {
            "mt" | "mt19937" => Ok(GeneratorSpec::Mt19937 { seed }),
            "aes" | "aes_ctr" => {
                let key = match &self.key {
                    Some(k) => parse_hex_128(k)?.to_be_bytes(),
                    None => DEFAULT_KEY,
                };
                let counter = match &self.ctr {
                    Some(c) => parse_hex_128(c)?,
                    None => 0,
                };
                // the seed offsets the per-sequence counter blocks like it offsets MT seeds
                Ok(GeneratorSpec::AesCtr {
                    key,
                    counter: counter.wrapping_add(u128::from(self.seed.unwrap_or(0)) << 64),
                })
            }
            "file" => {
                let path = self
                    .input
                    .clone()
                    .ok_or_else(|| Error::Config("--gen file requires --in <path>".into()))?;
                Ok(GeneratorSpec::File {
                    path,
                    format: self.format.unwrap_or(BitFormat::Raw),
                })
            }
            other => Err(Error::Config(format!("unknown generator '{other}'"))),
        }
    }

    pub fn periods(&self) -> Result<Option<Vec<PeriodicDefect>>> {
        let Some(list) = &self.period else { return Ok(None) };
        let raw: Vec<usize> = match list {
            ListValue::Many(v) => v.clone(),
            ListValue::One(s) => parse_list::<Period>(s)?.into_iter().map(|p| p.0).collect(),
        };
        raw.into_iter().map(PeriodicDefect::new).collect::<Result<Vec<_>>>().map(Some)
    }

    /// Resolves to a validated config. `sweep` selects the defect-sweep
    /// experiment, whose default period grid is [`geometric_periods`].
    pub fn experiment(&self, sweep: bool) -> Result<ExperimentConfig> {
        let n = self.length.unwrap_or(if sweep { 100_000 } else { 10_000 });
        let mut config = ExperimentConfig::new(
            self.tests()?,
            n,
            self.per_set.unwrap_or(if sweep { 200 } else { 1000 }),
            self.sets.unwrap_or(20),
            self.generator()?,
        );
        if sweep {
            config.periods = self.periods()?.unwrap_or_else(|| geometric_periods(n));
            if config.periods.is_empty() {
                return Err(Error::Config("the period sweep is empty".into()));
            }
        } else if self.period.is_some() {
            return Err(Error::Config("--period only applies to exp2".into()));
        }
        config.output = self.out.clone();
        config.format = self.report_format.unwrap_or_default();
        config.workers = self.workers.unwrap_or_else(default_workers);
        config.record_pvalues = self.pvalues_out.is_some();
        config.validate()?;
        Ok(config)
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Up to 32 hex digits, optional `0x` prefix, read as a big-endian integer.
pub fn parse_hex_128(s: &str) -> Result<u128> {
    let digits = s.trim().trim_start_matches("0x");
    if digits.is_empty() || digits.len() > 32 {
        return Err(Error::Config(format!("expected 1 to 32 hex digits, got '{s}'")));
    }
    u128::from_str_radix(digits, 16).map_err(|_| Error::Config(format!("invalid hex value '{s}'")))
}
