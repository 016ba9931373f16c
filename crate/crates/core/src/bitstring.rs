//! Packed fixed-length bit strings.
//!
//! Bit `i` of the search point lives in word `i / 64` at position `i % 64`
//! (least significant bit first), so `x_0` is the leftmost character of the
//! textual form. Unused high bits of the last word are always zero.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

#[inline]
fn low_mask(bits: usize) -> u64 {
    if bits >= WORD {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Extracts `count <= 64` bits starting at bit `start`, right-aligned.
#[inline]
pub(crate) fn chunk(words: &[u64], start: usize, count: usize) -> u64 {
    debug_assert!(count <= WORD && count > 0);
    let w = start / WORD;
    let s = start % WORD;
    let mut v = words[w] >> s;
    if s != 0 && s + count > WORD {
        v |= words[w + 1] << (WORD - s);
    }
    v & low_mask(count)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self {
            words: vec![u64::MAX; words_for(len)],
            len,
        };
        b.clear_tail();
        b
    }

    /// Uniformly random string of length `len`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut b = Self {
            words: (0..words_for(len)).map(|_| rng.random::<u64>()).collect(),
            len,
        };
        b.clear_tail();
        b
    }

    /// State index encoding used by the exact chains: bit `i` of `index` is `x_i`.
    pub fn from_index(len: usize, index: usize) -> Self {
        assert!(len <= WORD, "from_index supports at most 64 bits");
        let mut b = Self::zeros(len);
        if len > 0 {
            b.words[0] = index as u64 & low_mask(len);
        }
        b
    }

    pub fn to_index(&self) -> usize {
        assert!(self.len <= WORD, "to_index supports at most 64 bits");
        self.words.first().copied().unwrap_or(0) as usize
    }

    /// `1^a 0^b` style construction from runs of equal bits.
    pub fn from_runs(runs: &[(bool, usize)]) -> Self {
        let len = runs.iter().map(|r| r.1).sum();
        let mut b = Self::zeros(len);
        let mut i = 0;
        for &(bit, count) in runs {
            for _ in 0..count {
                b.set(i, bit);
                i += 1;
            }
        }
        b
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let m = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= m;
        } else {
            self.words[i / WORD] &= !m;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    #[inline]
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Length of the maximal all-ones prefix.
    pub fn leading_ones(&self) -> usize {
        let mut total = 0;
        for &w in &self.words {
            let t = w.trailing_ones() as usize;
            total += t;
            if t < WORD {
                break;
            }
        }
        total.min(self.len)
    }

    pub fn hamming(&self, other: &BitString) -> usize {
        assert_eq!(self.len, other.len, "hamming distance of unequal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::Config(format!(
                "length mismatch: {} vs {}",
                self.len, other.len
            )));
        }
        Ok(BitString {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
            len: self.len,
        })
    }

    pub fn complement(&self) -> BitString {
        let mut b = BitString {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        b.clear_tail();
        b
    }

    pub fn reversed(&self) -> BitString {
        let mut b = BitString::zeros(self.len);
        for i in 0..self.len {
            if self.get(i) {
                b.set(self.len - 1 - i, true);
            }
        }
        b
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub(crate) fn copy_from(&mut self, other: &BitString) {
        debug_assert_eq!(self.len, other.len);
        self.words.copy_from_slice(&other.words);
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= low_mask(rem);
            }
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut b = BitString::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i, true),
                other => {
                    return Err(Error::Config(format!(
                        "invalid bit character {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(b)
    }
}
