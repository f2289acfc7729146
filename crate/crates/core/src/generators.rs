//! Reference bit sources and the periodic defect injector.
//!
//! Every generator serializes its native words most significant bit first, so
//! `mt19937_bits(seed, 32)` is the binary expansion of the first 32-bit output.

use std::fmt;
use std::path::PathBuf;

use aes::cipher::{Array, BlockCipherEncrypt, KeyInit};
use aes::Aes128;
use serde::{Deserialize, Serialize};

use crate::bitseq::{parse_all_bits, BitFormat, BitSequence, PmSequence};
use crate::error::{Error, Result};

const MT_N: usize = 624;
const MT_M: usize = 397;
const MT_MATRIX_A: u32 = 0x9908_b0df;
const MT_UPPER: u32 = 0x8000_0000;
const MT_LOWER: u32 = 0x7fff_ffff;

/// 32-bit Mersenne Twister (MT19937) with the standard `init_genrand` seeding.
#[derive(Clone)]
pub struct Mt19937 {
    state: Box<[u32; MT_N]>,
    index: usize,
}

impl Mt19937 {
    pub fn new(seed: u32) -> Self {
        let mut state = Box::new([0u32; MT_N]);
        state[0] = seed;
        for i in 1..MT_N {
            let prev = state[i - 1];
            state[i] = 1_812_433_253u32
                .wrapping_mul(prev ^ (prev >> 30))
                .wrapping_add(i as u32);
        }
        Self { state, index: MT_N }
    }

    fn twist(&mut self) {
        let mt = &mut self.state;
        for i in 0..MT_N {
            let y = (mt[i] & MT_UPPER) | (mt[(i + 1) % MT_N] & MT_LOWER);
            let mut next = mt[(i + MT_M) % MT_N] ^ (y >> 1);
            if y & 1 != 0 {
                next ^= MT_MATRIX_A;
            }
            mt[i] = next;
        }
        self.index = 0;
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.index >= MT_N {
            self.twist();
        }
        let mut y = self.state[self.index];
        self.index += 1;
        y ^= y >> 11;
        y ^= (y << 7) & 0x9d2c_5680;
        y ^= (y << 15) & 0xefc6_0000;
        y ^ (y >> 18)
    }
}

impl fmt::Debug for Mt19937 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mt19937").field("index", &self.index).finish_non_exhaustive()
    }
}

/// AES-128 keystream: encryptions of `counter0, counter0 + 1, …` with the
/// counter as a 128-bit big-endian integer (wrapping).
pub struct AesCtr {
    cipher: Aes128,
    counter: u128,
}

impl AesCtr {
    pub fn new(key: [u8; 16], counter0: u128) -> Self {
        Self {
            cipher: Aes128::new(&Array::from(key)),
            counter: counter0,
        }
    }

    pub fn next_block(&mut self) -> [u8; 16] {
        let mut block = Array::from(self.counter.to_be_bytes());
        self.cipher.encrypt_block(&mut block);
        self.counter = self.counter.wrapping_add(1);
        block.into()
    }
}

impl fmt::Debug for AesCtr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AesCtr").field("counter", &self.counter).finish_non_exhaustive()
    }
}

fn pack_bytes<F: FnMut() -> Vec<u8>>(count: usize, mut next: F) -> Result<BitSequence> {
    let needed = count.div_ceil(8);
    let mut bytes = Vec::with_capacity(needed + 16);
    while bytes.len() < needed {
        bytes.extend(next());
    }
    BitSequence::from_msb_bytes(&bytes, count)
}

pub fn mt19937_bits(seed: u32, count: usize) -> Result<BitSequence> {
    let mut mt = Mt19937::new(seed);
    pack_bytes(count, || mt.next_u32().to_be_bytes().to_vec())
}

pub fn aes_ctr_bits(key: [u8; 16], counter0: u128, count: usize) -> Result<BitSequence> {
    let mut ctr = AesCtr::new(key, counter0);
    pack_bytes(count, || ctr.next_block().to_vec())
}

/// Which generator feeds an experiment. For `Mt19937` and `AesCtr` the values
/// are the base of the per-sequence derivation in [`SequenceSource`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Mt19937 { seed: u32 },
    AesCtr { key: [u8; 16], counter: u128 },
    File { path: PathBuf, format: BitFormat },
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Mt19937 { .. } => "mt",
            GeneratorSpec::AesCtr { .. } => "aes",
            GeneratorSpec::File { .. } => "file",
        }
    }
}

/// Deterministic mapping from a global sequence index to a bit sequence.
///
/// * MT19937: sequence `i` is the stream seeded with `seed + i` (wrapping).
/// * AES-CTR: sequence `i` starts at counter `counter + i·2⁶⁴` (wrapping).
/// * File: sequence `i` is bits `[i·n, (i+1)·n)` of the file.
pub enum SequenceSource {
    Mt19937 { seed: u32 },
    AesCtr { key: [u8; 16], counter: u128 },
    File { bits: BitSequence },
}

impl SequenceSource {
    pub fn open(spec: &GeneratorSpec) -> Result<Self> {
        Ok(match spec {
            GeneratorSpec::Mt19937 { seed } => SequenceSource::Mt19937 { seed: *seed },
            GeneratorSpec::AesCtr { key, counter } => SequenceSource::AesCtr {
                key: *key,
                counter: *counter,
            },
            GeneratorSpec::File { path, format } => {
                let file = std::fs::File::open(path).map_err(|source| Error::File {
                    path: path.clone(),
                    source,
                })?;
                SequenceSource::File {
                    bits: parse_all_bits(std::io::BufReader::new(file), *format)?,
                }
            }
        })
    }

    pub fn sequence(&self, index: u64, n: usize) -> Result<BitSequence> {
        match self {
            SequenceSource::Mt19937 { seed } => mt19937_bits(seed.wrapping_add(index as u32), n),
            SequenceSource::AesCtr { key, counter } => {
                aes_ctr_bits(*key, counter.wrapping_add(u128::from(index) << 64), n)
            }
            SequenceSource::File { bits } => {
                let start = usize::try_from(index)
                    .ok()
                    .and_then(|i| i.checked_mul(n))
                    .ok_or(Error::Truncated {
                        needed: usize::MAX,
                        available: bits.len(),
                    })?;
                bits.slice(start, n)
            }
        }
    }

    /// How many full sequences of length `n` this source can supply, if bounded.
    pub fn capacity(&self, n: usize) -> Option<usize> {
        match self {
            SequenceSource::File { bits } => Some(bits.len() / n),
            _ => None,
        }
    }
}

/// Period parameter `T` of the injected defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct PeriodicDefect(usize);

impl PeriodicDefect {
    pub fn new(period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::ZeroPeriod);
        }
        Ok(Self(period))
    }

    pub fn period(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for PeriodicDefect {
    type Error = Error;
    fn try_from(value: usize) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PeriodicDefect> for usize {
    fn from(d: PeriodicDefect) -> usize {
        d.0
    }
}

/// Overwrites `x_i = +1` for `i ≡ T (mod 2T)` and `x_i = -1` for `i ≡ 0 (mod 2T)`,
/// 0-based.
pub fn inject_periodic(x: &PmSequence, defect: PeriodicDefect) -> Result<PmSequence> {
    let t = defect.period();
    let n = x.len();
    if t.checked_mul(2).is_none_or(|p| p > n) {
        return Err(Error::PeriodTooLarge { period: t, n });
    }
    let mut out = x.clone();
    let values = out.values_mut();
    for i in (0..n).step_by(2 * t) {
        values[i] = -1;
        if i + t < n {
            values[i + t] = 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dft_power;

    fn hex16(s: &str) -> [u8; 16] {
        let mut out = [0u8; 16];
        for (i, b) in out.iter_mut().enumerate() {
            *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).unwrap();
        }
        out
    }

    #[test]
    fn mt_golden_outputs() {
        let mut mt = Mt19937::new(5489);
        let first = mt.next_u32();
        assert_eq!(first, 3_499_211_612);
        assert_eq!(mt.next_u32(), 581_869_302);
        assert_eq!(mt.next_u32(), 3_890_346_734);
        let mut mt = Mt19937::new(5489);
        let ten_thousandth = (0..10_000).map(|_| mt.next_u32()).last().unwrap();
        assert_eq!(ten_thousandth, 4_123_659_995);
        let mut mt = Mt19937::new(1);
        assert_eq!([mt.next_u32(), mt.next_u32(), mt.next_u32()], [1_791_095_845, 4_282_876_139, 3_093_770_124]);
    }

    #[test]
    fn mt_bits_are_msb_first() {
        let bits = mt19937_bits(5489, 32).unwrap();
        let word = bits.iter().fold(0u32, |acc, b| (acc << 1) | u32::from(b));
        assert_eq!(word, 3_499_211_612);
        assert_eq!(mt19937_bits(5489, 1000).unwrap(), mt19937_bits(5489, 1000).unwrap());
        assert_eq!(mt19937_bits(5489, 40).unwrap().slice(0, 32).unwrap(), bits);
    }

    #[test]
    fn aes_fips197_vector() {
        let key = hex16("000102030405060708090a0b0c0d0e0f");
        let ctr = u128::from_be_bytes(hex16("00112233445566778899aabbccddeeff"));
        let bits = aes_ctr_bits(key, ctr, 384).unwrap();
        // Blocks for counter0 and its two successors, checked against an independent AES-CTR implementation.
        let want = [
            hex16("69c4e0d86a7b0430d8cdb78070b4c55a"),
            hex16("dd78873daa5d87f8e497bef5411ece32"),
            hex16("967013bf1b116c4d3928b4bd63a52e80"),
        ]
        .concat();
        assert_eq!(bits.as_bytes(), &want[..]);
    }

    #[test]
    fn aes_counter_wraps() {
        let key = hex16("000102030405060708090a0b0c0d0e0f");
        let bits = aes_ctr_bits(key, u128::MAX, 256).unwrap();
        let want = [hex16("3c441f32ce07822364d7a2990e50bb13"), hex16("c6a13b37878f5b826f4f8162a1c8d879")].concat();
        assert_eq!(bits.as_bytes(), &want[..]);
    }

    #[test]
    fn aes_truncation_and_determinism() {
        let key = hex16("000102030405060708090a0b0c0d0e0f");
        let ctr = u128::from_be_bytes(hex16("00112233445566778899aabbccddeeff"));
        let byte = aes_ctr_bits(key, ctr, 8).unwrap();
        assert_eq!(byte.len(), 8);
        assert_eq!(byte.as_bytes(), &[0x69]);
        assert_eq!(aes_ctr_bits(key, ctr, 1000).unwrap(), aes_ctr_bits(key, ctr, 1000).unwrap());
    }

    #[test]
    fn sequence_source_derivation() {
        let src = SequenceSource::open(&GeneratorSpec::Mt19937 { seed: 100 }).unwrap();
        assert_eq!(src.sequence(5, 64).unwrap(), mt19937_bits(105, 64).unwrap());
        let key = [7u8; 16];
        let src = SequenceSource::open(&GeneratorSpec::AesCtr { key, counter: 3 }).unwrap();
        assert_eq!(src.sequence(2, 128).unwrap(), aes_ctr_bits(key, 3 + (2u128 << 64), 128).unwrap());
    }

    #[test]
    fn injection_t1_overwrites_everything() {
        let x = PmSequence::from_values(vec![1, 1, -1, -1, 1, -1]).unwrap();
        let y = inject_periodic(&x, PeriodicDefect::new(1).unwrap()).unwrap();
        assert_eq!(y.values(), &[-1, 1, -1, 1, -1, 1]);
    }

    #[test]
    fn injection_t2() {
        let x = PmSequence::from_values(vec![1; 8]).unwrap();
        let y = inject_periodic(&x, PeriodicDefect::new(2).unwrap()).unwrap();
        assert_eq!(y.values(), &[-1, 1, 1, 1, -1, 1, 1, 1]);
    }

    #[test]
    fn injection_rejects_long_period() {
        let x = PmSequence::from_values(vec![1; 8]).unwrap();
        assert!(matches!(
            inject_periodic(&x, PeriodicDefect::new(5).unwrap()),
            Err(Error::PeriodTooLarge { period: 5, n: 8 })
        ));
        assert!(inject_periodic(&x, PeriodicDefect::new(4).unwrap()).is_ok());
        assert!(matches!(PeriodicDefect::new(0), Err(Error::ZeroPeriod)));
    }

    #[test]
    fn injection_is_idempotent_and_scannable() {
        let x = mt19937_bits(9, 10_000).unwrap().to_pm1();
        for t in [1, 3, 7, 100, 5000] {
            let d = PeriodicDefect::new(t).unwrap();
            let once = inject_periodic(&x, d).unwrap();
            assert_eq!(inject_periodic(&once, d).unwrap(), once);
            for (i, &v) in once.values().iter().enumerate() {
                match i % (2 * t) {
                    0 => assert_eq!(v, -1),
                    r if r == t => assert_eq!(v, 1),
                    _ => assert_eq!(v, x.values()[i]),
                }
            }
        }
    }

    #[test]
    fn injected_line_dominates_spectrum() {
        let n = 1_000_000;
        let t = 100;
        let x = mt19937_bits(42, n).unwrap().to_pm1();
        let y = inject_periodic(&x, PeriodicDefect::new(t).unwrap()).unwrap();
        let spec = dft_power(&y, true).unwrap();
        let line = n / (2 * t);
        let mag2 = spec.mag2();
        let background = mag2
            .iter()
            .enumerate()
            .filter(|&(j, _)| j % line != 0)
            .map(|(_, &p)| p)
            .fold(0.0f64, f64::max);
        // the background maximum over ~n/2 exponential bins sits near ln(n/2)·n
        assert!(mag2[line] > 5.0 * background, "line {} vs background {}", mag2[line], background);
        // expected line power (n / T)²
        let expected = (n as f64 / t as f64).powi(2);
        assert!((mag2[line] / expected - 1.0).abs() < 0.35);
    }
}
