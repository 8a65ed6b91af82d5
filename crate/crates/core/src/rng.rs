//! Keyed pseudorandom function used for lazy, reproducible sampling.
//!
//! Every random object of the model (a site letter, an edge state, an
//! oriented-percolation site) is identified by a canonical sequence of
//! 64-bit words. The sequence is hashed together with a seed by the
//! *SplitMix64 sponge*:
//!
//! ```text
//! mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!            z ^ (z >> 31)
//! state   = mix64(seed ^ 0x9E3779B97F4A7C15)
//! absorb  : state = mix64((state + 0x9E3779B97F4A7C15) ^ word)   (wrapping)
//! finish  : mix64(state ^ (count * 0x9E3779B97F4A7C15))          (count = words absorbed)
//! uniform = (finish >> 11) * 2^-53
//! ```
//!
//! The byte form of an object id is the concatenation of its words in
//! little-endian order: `[tag][x_1]..[x_d]` for a site (tag 0) and
//! `[tag][x_1]..[x_d][direction][length]` for an edge (tag 1), where the
//! edge is described from its lower endpoint, `direction` is in `1..=d`
//! and `length` is 1 unless `direction == d`.

use thiserror::Error;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub const TAG_SITE: u64 = 0;
pub const TAG_EDGE: u64 = 1;

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Incremental form of the keyed hash. Cloning a partially absorbed sponge
/// lets callers share the common prefix of many ids.
#[derive(Clone, Copy, Debug)]
pub struct Sponge {
    state: u64,
    count: u64,
}

impl Sponge {
    #[inline]
    pub fn new(seed: u64) -> Self {
        Sponge {
            state: mix64(seed ^ GOLDEN_GAMMA),
            count: 0,
        }
    }

    #[inline]
    pub fn absorb(&mut self, word: u64) -> &mut Self {
        self.state = mix64(self.state.wrapping_add(GOLDEN_GAMMA) ^ word);
        self.count += 1;
        self
    }

    #[inline]
    pub fn finish(&self) -> u64 {
        mix64(self.state ^ self.count.wrapping_mul(GOLDEN_GAMMA))
    }

    #[inline]
    pub fn uniform(&self) -> f64 {
        (self.finish() >> 11) as f64 * UNIT
    }
}

/// Hashes a word sequence directly (no validation).
#[inline]
pub fn hash_words(seed: u64, words: &[u64]) -> u64 {
    let mut s = Sponge::new(seed);
    for &w in words {
        s.absorb(w);
    }
    s.finish()
}

#[inline]
pub fn uniform_words(seed: u64, words: &[u64]) -> f64 {
    (hash_words(seed, words) >> 11) as f64 * UNIT
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("object id length {0} is not a positive multiple of 8 bytes")]
    Length(usize),
    #[error("unknown object tag {0}")]
    Tag(u64),
    #[error("site id needs at least 2 coordinates, got {0}")]
    SiteDimension(usize),
    #[error("edge id needs at least 2 coordinates plus direction and length, got {0} words")]
    EdgeShape(usize),
    #[error("edge direction {direction} outside 1..={dim}")]
    Direction { direction: u64, dim: usize },
    #[error("edge length {length} invalid for direction {direction}")]
    EdgeLength { direction: u64, length: u64 },
}

pub fn encode_site(coords: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * (coords.len() + 1));
    out.extend_from_slice(&TAG_SITE.to_le_bytes());
    for c in coords {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn encode_edge(base: &[u64], direction: u64, length: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * (base.len() + 3));
    out.extend_from_slice(&TAG_EDGE.to_le_bytes());
    for c in base {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&direction.to_le_bytes());
    out.extend_from_slice(&length.to_le_bytes());
    out
}

/// Parses and validates a canonical object id into its word sequence.
pub fn decode_object_id(bytes: &[u8]) -> Result<Vec<u64>, EncodingError> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(8) {
        return Err(EncodingError::Length(bytes.len()));
    }
    let words: Vec<u64> = bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    match words[0] {
        TAG_SITE => {
            let dim = words.len() - 1;
            if dim < 2 {
                return Err(EncodingError::SiteDimension(dim));
            }
        }
        TAG_EDGE => {
            if words.len() < 5 {
                return Err(EncodingError::EdgeShape(words.len()));
            }
            let dim = words.len() - 3;
            let direction = words[words.len() - 2];
            let length = words[words.len() - 1];
            if direction == 0 || direction > dim as u64 {
                return Err(EncodingError::Direction { direction, dim });
            }
            if length == 0 || (direction < dim as u64 && length != 1) {
                return Err(EncodingError::EdgeLength { direction, length });
            }
        }
        tag => return Err(EncodingError::Tag(tag)),
    }
    Ok(words)
}

/// Deterministic Uniform[0,1) value attached to `object_id` under `seed`.
pub fn uniform_at(seed: u64, object_id: &[u8]) -> Result<f64, EncodingError> {
    let words = decode_object_id(object_id)?;
    Ok(uniform_words(seed, &words))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_query_same_value() {
        let id = encode_edge(&[3, 4, 5], 3, 7);
        assert_eq!(uniform_at(99, &id).unwrap(), uniform_at(99, &id).unwrap());
        assert_ne!(uniform_at(99, &id).unwrap(), uniform_at(100, &id).unwrap());
    }

    #[test]
    fn byte_and_word_paths_agree() {
        let id = encode_site(&[1, 2, 3]);
        assert_eq!(
            uniform_at(5, &id).unwrap(),
            uniform_words(5, &[TAG_SITE, 1, 2, 3])
        );
    }

    #[test]
    fn malformed_ids_rejected() {
        assert_eq!(decode_object_id(&[0u8; 7]), Err(EncodingError::Length(7)));
        assert_eq!(decode_object_id(&[]), Err(EncodingError::Length(0)));
        assert!(matches!(
            decode_object_id(&encode_site(&[1])),
            Err(EncodingError::SiteDimension(1))
        ));
        let mut bad_tag = encode_site(&[1, 2]);
        bad_tag[0] = 7;
        assert_eq!(decode_object_id(&bad_tag), Err(EncodingError::Tag(7)));
        // horizontal edge with length 2
        assert!(matches!(
            decode_object_id(&encode_edge(&[0, 0, 0], 1, 2)),
            Err(EncodingError::EdgeLength { .. })
        ));
        assert!(matches!(
            decode_object_id(&encode_edge(&[0, 0, 0], 4, 1)),
            Err(EncodingError::Direction { .. })
        ));
        assert!(matches!(
            decode_object_id(&encode_edge(&[0, 0, 0], 3, 0)),
            Err(EncodingError::EdgeLength { .. })
        ));
    }

    #[test]
    fn golden_values_are_pinned() {
        // Frozen outputs; changing the hash breaks every stored fixture.
        assert_eq!(mix64(0), 0);
        assert_eq!(mix64(1), 0x5692_161D_100B_05E5);
        assert_eq!(hash_words(0, &[]), mix64(mix64(GOLDEN_GAMMA)));
        assert_eq!(hash_words(42, &[0, 1, 2]), 0x25BC_4264_D563_EB04);
    }

    #[test]
    fn mean_of_million_ids() {
        let n = 1_000_000u64;
        let sum: f64 = (0..n).map(|i| uniform_words(42, &[TAG_SITE, i, 0])).sum();
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn ks_statistic_of_million_ids() {
        let n = 1_000_000usize;
        let mut xs: Vec<f64> = (0..n as u64)
            .map(|i| uniform_words(7, &[TAG_EDGE, i, 3, 1, 3, 1 + i % 17]))
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (k, x) in xs.iter().enumerate() {
            let lo = k as f64 / n as f64;
            let hi = (k + 1) as f64 / n as f64;
            d = d.max((x - lo).abs()).max((hi - x).abs());
        }
        assert!(d < 0.002, "KS {d}");
    }
}
