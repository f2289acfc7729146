//! Bit sequences and their ±1 view.
//!
//! Bits are stored packed, most significant bit first within each byte, so the
//! raw binary format is the storage format itself. Padding bits in the final
//! byte are always zero and never observable through the public API.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk encodings understood by [`parse_bits`] and [`BitSequence::serialize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitFormat {
    /// ASCII `'0'` / `'1'`, any ASCII whitespace between symbols is ignored.
    Ascii,
    /// Raw bytes, bit 7 of byte 0 first.
    Raw,
}

impl FromStr for BitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ascii" | "ascii01" => Ok(BitFormat::Ascii),
            "raw" | "raw_msb_first" | "binary" => Ok(BitFormat::Raw),
            other => Err(Error::Config(format!("unknown bit format '{other}'"))),
        }
    }
}

impl fmt::Display for BitFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitFormat::Ascii => "ascii",
            BitFormat::Raw => "raw",
        })
    }
}

/// An immutable, non-empty string of bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSequence {
    bytes: Vec<u8>,
    len: usize,
}

impl BitSequence {
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Result<Self> {
        let mut bytes = Vec::new();
        let mut len = 0usize;
        for bit in bits {
            if len % 8 == 0 {
                bytes.push(0);
            }
            if bit {
                *bytes.last_mut().unwrap() |= 0x80 >> (len % 8);
            }
            len += 1;
        }
        if len == 0 {
            return Err(Error::EmptySequence);
        }
        Ok(Self { bytes, len })
    }

    /// Takes the first `n` bits of `bytes`, MSB first.
    pub fn from_msb_bytes(bytes: &[u8], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let needed = n.div_ceil(8);
        if bytes.len() < needed {
            return Err(Error::Truncated {
                needed: n,
                available: bytes.len() * 8,
            });
        }
        let mut packed = bytes[..needed].to_vec();
        let tail = n % 8;
        if tail != 0 {
            *packed.last_mut().unwrap() &= 0xffu8 << (8 - tail);
        }
        Ok(Self { bytes: packed, len: n })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        (index < self.len).then(|| self.bytes[index / 8] & (0x80 >> (index % 8)) != 0)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Packed MSB-first bytes; padding bits of the last byte are zero.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Bits `[start, start + len)` as a new sequence.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start.checked_add(len).filter(|&e| e <= self.len).ok_or(Error::Truncated {
            needed: start.saturating_add(len),
            available: self.len,
        })?;
        if start % 8 == 0 {
            return Self::from_msb_bytes(&self.bytes[start / 8..], end - start);
        }
        Self::from_bits(self.iter().skip(start).take(len))
    }

    pub fn serialize(&self, format: BitFormat) -> Vec<u8> {
        match format {
            BitFormat::Raw => self.bytes.clone(),
            BitFormat::Ascii => self.iter().map(|b| if b { b'1' } else { b'0' }).collect(),
        }
    }

    pub fn to_pm1(&self) -> PmSequence {
        to_pm1(self)
    }
}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 64;
        let head: String = self.iter().take(SHOWN).map(|b| if b { '1' } else { '0' }).collect();
        let ellipsis = if self.len > SHOWN { "…" } else { "" };
        write!(f, "BitSequence(n={}, {head}{ellipsis})", self.len)
    }
}

/// A sequence of ±1 values, the domain every spectral statistic works in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PmSequence {
    values: Vec<i8>,
}

impl PmSequence {
    /// Fails if any value is not ±1 or the sequence is empty.
    pub fn from_values(values: Vec<i8>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(&bad) = values.iter().find(|v| v.abs() != 1) {
            return Err(Error::Config(format!("value {bad} is not +1 or -1")));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn sum(&self) -> i64 {
        self.values.iter().map(|&v| i64::from(v)).sum()
    }

    pub fn to_bits(&self) -> BitSequence {
        BitSequence::from_bits(self.values.iter().map(|&v| v > 0))
            .expect("PmSequence is never empty")
    }

    pub(crate) fn values_mut(&mut self) -> &mut [i8] {
        &mut self.values
    }
}

/// Maps 0 to -1 and 1 to +1.
pub fn to_pm1(x: &BitSequence) -> PmSequence {
    PmSequence {
        values: x.iter().map(|b| if b { 1 } else { -1 }).collect(),
    }
}

/// Reads exactly `n` bits from `input`. Anything after the `n`-th bit is left unread
/// for the raw format and ignored for ASCII.
pub fn parse_bits<R: Read>(mut input: R, format: BitFormat, n: usize) -> Result<BitSequence> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    match format {
        BitFormat::Raw => {
            let mut buf = vec![0u8; n.div_ceil(8)];
            let got = read_up_to(&mut input, &mut buf)?;
            if got < buf.len() {
                return Err(Error::Truncated {
                    needed: n,
                    available: got * 8,
                });
            }
            BitSequence::from_msb_bytes(&buf, n)
        }
        BitFormat::Ascii => {
            let mut raw = Vec::new();
            input.read_to_end(&mut raw)?;
            let bits = ascii_bits(&raw, Some(n))?;
            if bits.len() < n {
                return Err(Error::Truncated {
                    needed: n,
                    available: bits.len(),
                });
            }
            BitSequence::from_bits(bits)
        }
    }
}

/// Reads every bit the stream supplies.
pub fn parse_all_bits<R: Read>(mut input: R, format: BitFormat) -> Result<BitSequence> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    match format {
        BitFormat::Raw => BitSequence::from_msb_bytes(&raw, raw.len() * 8),
        BitFormat::Ascii => BitSequence::from_bits(ascii_bits(&raw, None)?),
    }
}

fn ascii_bits(raw: &[u8], limit: Option<usize>) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(limit.unwrap_or(raw.len()));
    for (offset, &byte) in raw.iter().enumerate() {
        if limit.is_some_and(|n| bits.len() == n) {
            break;
        }
        match byte {
            b'0' => bits.push(false),
            b'1' => bits.push(true),
            b if b.is_ascii_whitespace() => {}
            other => {
                return Err(Error::InvalidSymbol {
                    symbol: char::from(other),
                    offset,
                })
            }
        }
    }
    Ok(bits)
}

fn read_up_to<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}
