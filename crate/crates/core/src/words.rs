//! Finite binary words and dense sets of equal-length words.
//!
//! A word of length `l` is indexed MSB-first: the first letter is bit
//! `l-1` of the index. Prepending a letter `b` to every word of a set of
//! length `l-1` therefore moves the whole bitmap to offset `b * 2^(l-1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest word whose index fits the `u64` encoding.
pub const MAX_INDEXED_LEN: usize = 63;
/// Longest word length a [`WordSet`] will allocate for.
pub const MAX_SET_LEN: usize = 34;
/// Enumeration guard for `Xi_n` (bits per word).
pub const MAX_ENUMERATED_BITS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("letter {0} is not a bit")]
    Letter(u8),
    #[error("cannot parse word from {0:?}")]
    Parse(String),
    #[error("index {index} out of range for words of length {len}")]
    IndexRange { index: u64, len: usize },
    #[error("word length {len} exceeds the limit {max}")]
    TooLong { len: usize, max: usize },
    #[error("word of length {len} is shorter than the required {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("sigma_n needs n >= 1")]
    ZeroSigma,
    #[error("malformed word-set encoding {0:?}")]
    SetEncoding(String),
    #[error("enumerating Xi_{n} would need {bits}-bit words (limit {max})")]
    Enumeration { n: usize, bits: usize, max: usize },
}

/// A finite word over `{0, 1}`; letter `xi_{i+1}` is stored at index `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word(Vec<u8>);

impl TryFrom<String> for Word {
    type Error = WordError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

impl Word {
    pub fn new(bits: Vec<u8>) -> Result<Self, WordError> {
        if let Some(b) = bits.iter().find(|b| **b > 1) {
            return Err(WordError::Letter(*b));
        }
        Ok(Word(bits))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        Word(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    /// Letter `xi_i` with 1-based `i`.
    pub fn letter(&self, i: usize) -> u8 {
        self.0[i - 1]
    }

    pub fn index(&self) -> Result<u64, WordError> {
        if self.len() > MAX_INDEXED_LEN {
            return Err(WordError::TooLong {
                len: self.len(),
                max: MAX_INDEXED_LEN,
            });
        }
        Ok(self.0.iter().fold(0u64, |acc, b| (acc << 1) | *b as u64))
    }

    pub fn from_index(index: u64, len: usize) -> Result<Self, WordError> {
        if len > MAX_INDEXED_LEN {
            return Err(WordError::TooLong {
                len,
                max: MAX_INDEXED_LEN,
            });
        }
        if index >> len != 0 {
            return Err(WordError::IndexRange { index, len });
        }
        Ok(Word(
            (0..len).map(|i| ((index >> (len - 1 - i)) & 1) as u8).collect(),
        ))
    }

    pub fn prefix(&self, len: usize) -> Result<Word, WordError> {
        if len > self.len() {
            return Err(WordError::TooShort {
                len: self.len(),
                needed: len,
            });
        }
        Ok(Word(self.0[..len].to_vec()))
    }

    /// `sigma_n`: the prefix of length `2(n-1)`.
    pub fn sigma(&self, n: usize) -> Result<Word, WordError> {
        if n == 0 {
            return Err(WordError::ZeroSigma);
        }
        self.prefix(2 * (n - 1))
    }

    /// Right-pads with zeros up to `len` (no-op if already long enough).
    pub fn zero_padded(&self, len: usize) -> Word {
        let mut bits = self.0.clone();
        if bits.len() < len {
            bits.resize(len, 0);
        }
        Word(bits)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        Word(bits)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(WordError::Parse(s.to_string())),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(Word)
    }
}

/// `sigma_n(w)`.
pub fn sigma(w: &Word, n: usize) -> Result<Word, WordError> {
    w.sigma(n)
}

/// All words of `Xi_n = {0,1}^{2(n-1)}` in index order.
pub fn enumerate_xi(n: usize) -> Result<impl Iterator<Item = Word>, WordError> {
    if n == 0 {
        return Err(WordError::ZeroSigma);
    }
    let bits = 2 * (n - 1);
    if bits > MAX_ENUMERATED_BITS {
        return Err(WordError::Enumeration {
            n,
            bits,
            max: MAX_ENUMERATED_BITS,
        });
    }
    Ok((0..1u64 << bits).map(move |i| Word::from_index(i, bits).expect("index in range")))
}

/// Membership bitmap over all `2^len` words of length `len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordSet {
    len: usize,
    blocks: Vec<u64>,
}

fn block_count(len: usize) -> usize {
    if len <= 6 {
        1
    } else {
        1 << (len - 6)
    }
}

fn low_mask(len: usize) -> u64 {
    if len >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << len)) - 1
    }
}

impl WordSet {
    pub fn empty(len: usize) -> Self {
        assert!(len <= MAX_SET_LEN, "word set length {len} over limit");
        WordSet {
            len,
            blocks: vec![0; block_count(len)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        s.blocks.fill(u64::MAX);
        s.blocks[0] &= low_mask(len);
        s
    }

    /// The set `{empty word}`.
    pub fn unit() -> Self {
        let mut s = Self::empty(0);
        s.blocks[0] = 1;
        s
    }

    pub fn try_empty(len: usize) -> Result<Self, WordError> {
        if len > MAX_SET_LEN {
            return Err(WordError::TooLong {
                len,
                max: MAX_SET_LEN,
            });
        }
        Ok(Self::empty(len))
    }

    pub fn word_len(&self) -> usize {
        self.len
    }

    pub fn universe(&self) -> u64 {
        1u64 << self.len
    }

    pub fn insert_index(&mut self, index: u64) {
        debug_assert!(index < self.universe());
        self.blocks[(index >> 6) as usize] |= 1 << (index & 63);
    }

    pub fn contains_index(&self, index: u64) -> bool {
        index < self.universe() && self.blocks[(index >> 6) as usize] >> (index & 63) & 1 == 1
    }

    pub fn insert(&mut self, w: &Word) -> Result<(), WordError> {
        self.check_len(w)?;
        self.insert_index(w.index()?);
        Ok(())
    }

    pub fn contains(&self, w: &Word) -> bool {
        w.len() == self.len && w.index().map(|i| self.contains_index(i)).unwrap_or(false)
    }

    fn check_len(&self, w: &Word) -> Result<(), WordError> {
        if w.len() != self.len {
            return Err(WordError::TooShort {
                len: w.len(),
                needed: self.len,
            });
        }
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.blocks.iter().map(|b| b.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|b| *b == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.universe()
    }

    pub fn union_with(&mut self, other: &WordSet) {
        assert_eq!(self.len, other.len, "union of word sets of different lengths");
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= *b;
        }
    }

    pub fn is_subset(&self, other: &WordSet) -> bool {
        self.len == other.len
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a & !b == 0)
    }

    /// `self |= { b.w : w in tail }`, where `tail` holds words one letter shorter.
    pub fn union_extended(&mut self, b: u8, tail: &WordSet) {
        assert_eq!(tail.len + 1, self.len, "extension length mismatch");
        let offset = (b as u64) << tail.len;
        if tail.len >= 6 {
            let start = (offset >> 6) as usize;
            for (dst, src) in self.blocks[start..start + tail.blocks.len()]
                .iter_mut()
                .zip(&tail.blocks)
            {
                *dst |= *src;
            }
        } else {
            self.blocks[0] |= tail.blocks[0] << offset;
        }
    }

    /// Drops the last letter of every word.
    pub fn project_prefix(&self) -> WordSet {
        assert!(self.len > 0, "cannot project words of length 0");
        let mut out = WordSet::empty(self.len - 1);
        for i in self.indices() {
            out.insert_index(i >> 1);
        }
        out
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.blocks.iter().enumerate().flat_map(|(k, &block)| {
            let mut bits = block;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as u64;
                bits &= bits - 1;
                Some(((k as u64) << 6) | t)
            })
        })
    }

    pub fn words(&self) -> impl Iterator<Item = Word> + '_ {
        self.indices()
            .map(move |i| Word::from_index(i, self.len).expect("index in range"))
    }

    /// Hex bitmap: byte `j` holds words `8j..8j+7`, least significant bit first.
    pub fn to_hex(&self) -> String {
        let nbytes = (1usize << self.len).div_ceil(8);
        self.blocks
            .iter()
            .flat_map(|b| b.to_le_bytes())
            .take(nbytes)
            .map(|byte| format!("{byte:02x}"))
            .collect()
    }

    pub fn from_hex(len: usize, hex: &str) -> Result<Self, WordError> {
        let bad = || WordError::SetEncoding(hex.to_string());
        let mut s = Self::try_empty(len)?;
        let nbytes = (1usize << len).div_ceil(8);
        if hex.len() != 2 * nbytes {
            return Err(bad());
        }
        for j in 0..nbytes {
            let byte = u8::from_str_radix(&hex[2 * j..2 * j + 2], 16).map_err(|_| bad())?;
            s.blocks[j / 8] |= (byte as u64) << (8 * (j % 8));
        }
        if s.blocks[0] & !low_mask(len) != 0 {
            return Err(bad());
        }
        Ok(s)
    }
}

/// `{ b.w : w in s }`.
pub fn extend(b: u8, s: &WordSet) -> WordSet {
    let mut out = WordSet::empty(s.len + 1);
    out.union_extended(b, s);
    out
}

impl fmt::Display for WordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.len, self.to_hex())
    }
}

impl FromStr for WordSet {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (len, hex) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| WordError::SetEncoding(s.to_string()))?;
        let len: usize = len
            .parse()
            .map_err(|_| WordError::SetEncoding(s.to_string()))?;
        Self::from_hex(len, hex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn msb_first_indexing() {
        assert_eq!(w("10").index().unwrap(), 2);
        assert_eq!(Word::from_index(0, 3).unwrap(), w("000"));
        assert!(matches!(
            Word::from_index(8, 3),
            Err(WordError::IndexRange { .. })
        ));
    }

    #[test]
    fn index_bijection_exhaustive() {
        for len in 0..=12 {
            for i in 0..1u64 << len {
                assert_eq!(Word::from_index(i, len).unwrap().index().unwrap(), i);
            }
        }
    }

    #[test]
    fn sigma_prefixes() {
        assert_eq!(w("1011").sigma(1).unwrap(), Word::empty());
        assert_eq!(w("1011").sigma(2).unwrap(), w("10"));
        assert!(matches!(w("10").sigma(3), Err(WordError::TooShort { .. })));
        assert!(w("10").sigma(0).is_err());
    }

    #[test]
    fn extension_examples() {
        let e = extend(1, &WordSet::unit());
        assert_eq!(e.words().collect::<Vec<_>>(), vec![w("1")]);
        assert!(extend(0, &WordSet::empty(0)).is_empty());
        let e = extend(1, &WordSet::full(2));
        assert_eq!(
            e.words().collect::<Vec<_>>(),
            vec![w("100"), w("101"), w("110"), w("111")]
        );
    }

    #[test]
    fn large_extension_is_block_aligned() {
        let mut s = WordSet::empty(8);
        s.insert(&w("00000001")).unwrap();
        s.insert(&w("11111111")).unwrap();
        let e = extend(1, &s);
        assert_eq!(e.count(), 2);
        assert!(e.contains(&w("100000001")));
        assert!(e.contains(&w("111111111")));
    }

    #[test]
    fn xi_enumeration() {
        assert_eq!(enumerate_xi(1).unwrap().collect::<Vec<_>>(), vec![Word::empty()]);
        assert_eq!(
            enumerate_xi(2).unwrap().collect::<Vec<_>>(),
            vec![w("00"), w("01"), w("10"), w("11")]
        );
        assert_eq!(enumerate_xi(4).unwrap().count(), 64);
        for n in 1..=4 {
            let all: std::collections::HashSet<_> = enumerate_xi(n).unwrap().collect();
            assert_eq!(all.len(), 1 << (2 * (n - 1)));
        }
        assert!(matches!(enumerate_xi(17), Err(WordError::Enumeration { .. })));
    }

    #[test]
    fn hex_encoding() {
        let mut s = WordSet::empty(2);
        s.insert(&w("00")).unwrap();
        s.insert(&w("11")).unwrap();
        assert_eq!(s.to_string(), "2:09");
        assert_eq!("2:09".parse::<WordSet>().unwrap(), s);
        assert!("2:19".parse::<WordSet>().is_err());
        assert!("2:0".parse::<WordSet>().is_err());
        assert_eq!(WordSet::full(4).to_hex(), "ffff");
    }

    #[test]
    fn full_and_empty_counts() {
        for len in 0..=10 {
            assert_eq!(WordSet::full(len).count(), 1 << len);
            assert!(WordSet::full(len).is_full());
            assert_eq!(WordSet::empty(len).count(), 0);
        }
    }

    fn arb_set(len: usize) -> impl Strategy<Value = WordSet> {
        proptest::collection::vec(0..(1u64 << len), 0..40).prop_map(move |idx| {
            let mut s = WordSet::empty(len);
            for i in idx {
                s.insert_index(i);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn extend_preserves_cardinality(len in 0usize..10, b in 0u8..2, seed in any::<u64>()) {
            let mut s = WordSet::empty(len);
            let mut x = seed;
            for _ in 0..20 {
                x = crate::rng::mix64(x.wrapping_add(1));
                s.insert_index(x % (1 << len));
            }
            let e = extend(b, &s);
            prop_assert_eq!(e.count(), s.count());
            for word in s.words() {
                prop_assert!(e.contains(&Word::new(vec![b]).unwrap().concat(&word)));
            }
        }

        #[test]
        fn hex_round_trip(s in arb_set(7)) {
            prop_assert_eq!(s.to_string().parse::<WordSet>().unwrap(), s);
        }

        #[test]
        fn sigma_composition(bits in proptest::collection::vec(0u8..2, 40), n in 1usize..=21, m in 1usize..=21) {
            let word = Word::new(bits).unwrap();
            let (n, m) = (n.min(m), n.max(m));
            prop_assert_eq!(word.sigma(m).unwrap().sigma(n).unwrap(), word.sigma(n).unwrap());
        }
    }
}
