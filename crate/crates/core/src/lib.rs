//! Spectral randomness tests for binary sequences.
//!
//! The crate implements the variance-of-power-spectrum test (the "proposed"
//! test) next to the three published DFT-test variants (original NIST, Kim,
//! Pareschi), the second-level proportion and uniformity tests used to judge
//! collections of p-values, reference generators (MT19937, AES-128 in counter
//! mode) and an experiment harness that reproduces Type-1-error tables,
//! detection-power sweeps and empirical CDFs.
//!
//! ```
//! use specvar::{bitseq::BitSequence, vtest};
//!
//! let bits = BitSequence::from_bits((0..1024).map(|i| (i * 7919 % 13) < 6)).unwrap();
//! let outcome = vtest::vtest_pvalue(&bits).unwrap();
//! assert!((0.0..=1.0).contains(&outcome.pvalue.value()));
//! ```

pub mod bitseq;
pub mod dftt;
mod error;
pub mod generators;
pub mod harness;
pub mod secondlevel;
pub mod specialfns;
pub mod spectral;
pub mod vtest;

pub use bitseq::{BitFormat, BitSequence, PmSequence};
pub use dftt::{DfttVariant, TestKind, TestOutcome};
pub use error::{Error, Result};
pub use secondlevel::SecondLevelReport;
pub use specialfns::Probability;
pub use spectral::SpectrumResult;
pub use vtest::VStatistic;
