//! Exact computation of the words seen from a vertex inside a finite box.
//!
//! A word `xi` of length `L` is seen from `origin` when some oriented path
//! `origin = v_0, v_1, ..., v_L` of open edges stays in the box and carries
//! the letters `label(v_i) = xi_i` for `i >= 1`. Every edge increases the
//! coordinate sum, so such paths never revisit a vertex.
//!
//! Three independent routes are provided:
//!
//! * [`seen_words`]: backward dynamic programming over word sets,
//!   `T(v, 0) = {empty}` and `T(v, l) = U_{v->u open} label(u).T(u, l-1)`,
//!   evaluated only on vertices reachable from the origin;
//! * [`sees_word`]: forward frontier sets filtered letter by letter;
//! * [`brute_force_seen`]: explicit enumeration of all open paths.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::model::{Environment, ModelError, SiteField, Vertex};
use crate::scalar::Scalar;
use crate::words::{Word, WordSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("word length {len} exceeds the oracle limit {max}")]
    WordTooLong { len: usize, max: usize },
    #[error(
        "memory budget exceeded: {vertices} reachable vertices x 2^{len} words needs {bits} bits, budget {budget}"
    )]
    Budget {
        vertices: u64,
        len: usize,
        bits: u128,
        budget: u128,
    },
    #[error("path enumeration exceeded {max} paths")]
    PathGuard { max: u64 },
    #[error("origin {0:?} lies outside the box")]
    OriginOutsideBox(Vec<u64>),
    #[error("site field box differs from the environment box")]
    BoxMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Resource guards for the oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleLimits {
    pub max_len: usize,
    /// Total bits of word sets alive across all DP layers.
    pub max_bits: u128,
    /// Path prefixes the brute-force enumerator may visit.
    pub max_paths: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_len: 14,
            max_bits: 1 << 31,
            max_paths: 1_000_000,
        }
    }
}

/// "Which words of length `len` are seen from `origin`?"
#[derive(Debug, Clone)]
pub struct SeenQuery<'a, T> {
    pub env: &'a Environment<T>,
    pub sites: &'a SiteField<T>,
    pub origin: Vertex,
    pub len: usize,
}

impl<'a, T: Scalar> SeenQuery<'a, T> {
    pub fn new(
        env: &'a Environment<T>,
        sites: &'a SiteField<T>,
        origin: &[u64],
        len: usize,
    ) -> Result<Self, OracleError> {
        if env.lattice_box() != sites.lattice_box() {
            return Err(OracleError::BoxMismatch);
        }
        if origin.len() != env.dim() {
            return Err(ModelError::Dimension {
                got: origin.len(),
                dim: env.dim(),
            }
            .into());
        }
        if !env.lattice_box().contains(origin) {
            return Err(OracleError::OriginOutsideBox(origin.to_vec()));
        }
        Ok(SeenQuery {
            env,
            sites,
            origin: Vertex::from_slice(origin),
            len,
        })
    }

    /// Query from the corner `(0, ..., 0)`.
    pub fn from_origin(
        env: &'a Environment<T>,
        sites: &'a SiteField<T>,
        len: usize,
    ) -> Result<Self, OracleError> {
        let origin = vec![0u64; env.dim()];
        Self::new(env, sites, &origin, len)
    }
}

/// Forward reachability layers `R_0 = {origin}`, `R_j = out(R_{j-1})`
/// together with the adjacency of every vertex that has a successor layer.
struct Layers {
    layers: Vec<Vec<Vertex>>,
    adjacency: HashMap<Vertex, Vec<Vertex>>,
}

fn reachable_layers<T: Scalar>(
    q: &SeenQuery<'_, T>,
    limits: &OracleLimits,
) -> Result<Layers, OracleError> {
    let len = q.len;
    let mut layers: Vec<Vec<Vertex>> = vec![vec![q.origin.clone()]];
    let mut adjacency: HashMap<Vertex, Vec<Vertex>> = HashMap::new();
    let mut bits: u128 = 1u128 << len;
    let mut vertices: u64 = 1;
    for j in 1..=len {
        let mut seen: HashSet<Vertex> = HashSet::new();
        let mut next = Vec::new();
        for v in &layers[j - 1] {
            let outs = adjacency
                .entry(v.clone())
                .or_insert_with(|| q.env.out_neighbors(v));
            for u in outs.iter() {
                if seen.insert(u.clone()) {
                    next.push(u.clone());
                }
            }
        }
        vertices += next.len() as u64;
        bits += (next.len() as u128) << (len - j);
        if bits > limits.max_bits {
            return Err(OracleError::Budget {
                vertices,
                len,
                bits,
                budget: limits.max_bits,
            });
        }
        layers.push(next);
    }
    Ok(Layers { layers, adjacency })
}

/// All words of length `q.len` seen from `q.origin`.
pub fn seen_words<T: Scalar>(
    q: &SeenQuery<'_, T>,
    limits: &OracleLimits,
) -> Result<WordSet, OracleError> {
    if q.len > limits.max_len {
        return Err(OracleError::WordTooLong {
            len: q.len,
            max: limits.max_len,
        });
    }
    let Layers { layers, adjacency } = reachable_layers(q, limits)?;
    let len = q.len;
    let mut labels: HashMap<&Vertex, u8> = HashMap::new();

    // Layer L: every vertex carries the empty word.
    let mut tail: HashMap<&Vertex, WordSet> =
        layers[len].iter().map(|v| (v, WordSet::unit())).collect();
    for j in (0..len).rev() {
        let word_len = len - j;
        let mut current: HashMap<&Vertex, WordSet> = HashMap::with_capacity(layers[j].len());
        for v in &layers[j] {
            let mut set = WordSet::empty(word_len);
            for u in &adjacency[v] {
                if let Some(t) = tail.get(u) {
                    if t.is_empty() {
                        continue;
                    }
                    let b = *labels.entry(u).or_insert_with(|| q.sites.label(u));
                    set.union_extended(b, t);
                }
            }
            current.insert(v, set);
        }
        tail = current;
    }
    Ok(tail
        .remove(&q.origin)
        .unwrap_or_else(|| WordSet::empty(len)))
}

/// Whether `word` is seen from `q.origin` (the query length is ignored; the
/// word's own length is used).
pub fn sees_word<T: Scalar>(q: &SeenQuery<'_, T>, word: &Word) -> Result<bool, OracleError> {
    let mut frontier: HashSet<Vertex> = HashSet::from([q.origin.clone()]);
    for &letter in word.letters() {
        let mut next = HashSet::new();
        for v in &frontier {
            for u in q.env.out_neighbors(v) {
                if !next.contains(&u) && q.sites.label(&u) == letter {
                    next.insert(u);
                }
            }
        }
        if next.is_empty() {
            return Ok(false);
        }
        frontier = next;
    }
    Ok(true)
}

/// Collects the letter sequences of every open path of length `q.len`.
pub fn brute_force_seen<T: Scalar>(
    q: &SeenQuery<'_, T>,
    limits: &OracleLimits,
) -> Result<WordSet, OracleError> {
    let mut out = WordSet::try_empty(q.len).map_err(|_| OracleError::WordTooLong {
        len: q.len,
        max: crate::words::MAX_SET_LEN,
    })?;
    let mut visited: u64 = 0;
    // (vertex, depth, index of the letters so far)
    let mut stack: Vec<(Vertex, usize, u64)> = vec![(q.origin.clone(), 0, 0)];
    while let Some((v, depth, index)) = stack.pop() {
        visited += 1;
        if visited > limits.max_paths {
            return Err(OracleError::PathGuard {
                max: limits.max_paths,
            });
        }
        if depth == q.len {
            out.insert_index(index);
            continue;
        }
        for u in q.env.out_neighbors(&v) {
            let b = q.sites.label(&u) as u64;
            stack.push((u, depth + 1, (index << 1) | b));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LatticeBox, ModelParams, PnFamily};

    fn env(
        eps: f64,
        k: u64,
        pn: PnFamily<f64>,
        bx: &LatticeBox,
        seed: u64,
    ) -> Environment<f64> {
        Environment::new(ModelParams::new(3, 0.5, eps, k, pn).unwrap(), seed, bx.clone()).unwrap()
    }

    #[test]
    fn no_open_edges_sees_nothing() {
        let bx = LatticeBox::new(vec![3, 3], 6).unwrap();
        let e = env(0.0, 0, PnFamily::Constant { q: 1.0 }, &bx, 1);
        let s = SiteField::new(0.5, 2, bx).unwrap();
        let q = SeenQuery::from_origin(&e, &s, 1).unwrap();
        let lim = OracleLimits::default();
        assert!(seen_words(&q, &lim).unwrap().is_empty());
        assert!(brute_force_seen(&q, &lim).unwrap().is_empty());
    }

    #[test]
    fn all_ones_fully_connected() {
        let bx = LatticeBox::new(vec![3, 3], 6).unwrap();
        let e = env(1.0, 2, PnFamily::Constant { q: 1.0 }, &bx, 1);
        let s = SiteField::new(1.0, 2, bx).unwrap();
        let q = SeenQuery::from_origin(&e, &s, 3).unwrap();
        let got = seen_words(&q, &OracleLimits::default()).unwrap();
        assert_eq!(got.words().collect::<Vec<_>>(), vec!["111".parse().unwrap()]);
    }

    #[test]
    fn zero_sites_horizontal_lattice() {
        let bx = LatticeBox::new(vec![3, 3], 6).unwrap();
        let e = env(1.0, 0, PnFamily::Constant { q: 1.0 }, &bx, 1);
        let s = SiteField::new(0.0, 2, bx).unwrap();
        let q = SeenQuery::from_origin(&e, &s, 4).unwrap();
        assert!(sees_word(&q, &"0000".parse().unwrap()).unwrap());
        assert!(!sees_word(&q, &"0010".parse().unwrap()).unwrap());
    }

    #[test]
    fn letter_absent_when_p_is_one() {
        let bx = LatticeBox::new(vec![3, 3], 6).unwrap();
        let e = env(1.0, 3, PnFamily::Constant { q: 1.0 }, &bx, 4);
        let s = SiteField::new(1.0, 2, bx).unwrap();
        let q = SeenQuery::from_origin(&e, &s, 3).unwrap();
        assert!(!sees_word(&q, &"101".parse().unwrap()).unwrap());
        assert!(sees_word(&q, &"111".parse().unwrap()).unwrap());
    }

    #[test]
    fn single_chain_gives_single_word() {
        // d = 2, a column of height 3 with only length-1 vertical edges.
        let params = ModelParams::new(2, 0.5, 0.0, 1, PnFamily::Constant { q: 1.0 }).unwrap();
        let bx = LatticeBox::new(vec![1], 3).unwrap();
        let e = Environment::new(params, 3, bx.clone()).unwrap();
        let sites = (0..10_000u64)
            .map(|seed| SiteField::new(0.5, seed, bx.clone()).unwrap())
            .find(|s| s.label(&[0, 1]) == 1 && s.label(&[0, 2]) == 0 && s.label(&[0, 3]) == 1)
            .unwrap();
        let q = SeenQuery::from_origin(&e, &sites, 3).unwrap();
        let lim = OracleLimits::default();
        let want: Word = "101".parse().unwrap();
        for got in [seen_words(&q, &lim).unwrap(), brute_force_seen(&q, &lim).unwrap()] {
            assert_eq!(got.words().collect::<Vec<_>>(), vec![want.clone()]);
        }
    }

    #[test]
    fn guards_refuse() {
        let bx = LatticeBox::lazy(vec![20, 20]).unwrap();
        let e = env(1.0, 10, PnFamily::Constant { q: 1.0 }, &bx, 1);
        let s = SiteField::new(0.5, 2, bx).unwrap();
        let q = SeenQuery::from_origin(&e, &s, 15).unwrap();
        assert!(matches!(
            seen_words(&q, &OracleLimits::default()),
            Err(OracleError::WordTooLong { .. })
        ));
        let q = SeenQuery::from_origin(&e, &s, 8).unwrap();
        let tight = OracleLimits {
            max_bits: 1000,
            ..OracleLimits::default()
        };
        assert!(matches!(seen_words(&q, &tight), Err(OracleError::Budget { .. })));
        assert!(matches!(
            brute_force_seen(&q, &OracleLimits::default()),
            Err(OracleError::PathGuard { .. })
        ));
    }

    #[test]
    fn origin_must_be_inside() {
        let bx = LatticeBox::new(vec![3, 3], 6).unwrap();
        let e = env(1.0, 3, PnFamily::Constant { q: 1.0 }, &bx, 1);
        let s = SiteField::new(0.5, 2, bx).unwrap();
        assert!(matches!(
            SeenQuery::new(&e, &s, &[4, 0, 0], 2),
            Err(OracleError::OriginOutsideBox(_))
        ));
    }

    #[test]
    fn dp_matches_brute_force_and_frontier() {
        let bx = LatticeBox::new(vec![3, 3], 6).unwrap();
        let lim = OracleLimits::default();
        for seed in 0..40u64 {
            let eps = [0.2, 0.5, 0.8][seed as usize % 3];
            let e = env(eps, 3, PnFamily::Harmonic { c: 1.0 }, &bx, seed);
            let s = SiteField::new(0.5, seed + 1000, bx.clone()).unwrap();
            let origin = [seed % 2, 0, seed % 3];
            let q = SeenQuery::new(&e, &s, &origin, 4).unwrap();
            let dp = seen_words(&q, &lim).unwrap();
            assert_eq!(dp, brute_force_seen(&q, &lim).unwrap());
            for i in 0..16 {
                let word = Word::from_index(i, 4).unwrap();
                assert_eq!(sees_word(&q, &word).unwrap(), dp.contains(&word));
            }
        }
    }

    #[test]
    fn prefix_and_box_monotonicity() {
        let small = LatticeBox::new(vec![3, 3], 6).unwrap();
        let big = LatticeBox::new(vec![5, 5], 12).unwrap();
        let lim = OracleLimits::default();
        for seed in 0..30u64 {
            let e = env(0.4, 4, PnFamily::Harmonic { c: 1.0 }, &small, seed);
            let s = SiteField::new(0.5, seed + 7, small.clone()).unwrap();
            let eb = env(0.4, 4, PnFamily::Harmonic { c: 1.0 }, &big, seed);
            let sb = SiteField::new(0.5, seed + 7, big.clone()).unwrap();
            let w5 = seen_words(&SeenQuery::from_origin(&e, &s, 5).unwrap(), &lim).unwrap();
            let w4 = seen_words(&SeenQuery::from_origin(&e, &s, 4).unwrap(), &lim).unwrap();
            assert!(w5.project_prefix().is_subset(&w4));
            let w5b = seen_words(&SeenQuery::from_origin(&eb, &sb, 5).unwrap(), &lim).unwrap();
            assert!(w5.is_subset(&w5b));
        }
    }
}
