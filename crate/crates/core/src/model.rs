//! Long-range lattice model: parameters, finite windows and lazily sampled
//! bond and site configurations.
//!
//! Vertices live in the nonnegative orthant of `Z^d`. Horizontal edges join
//! `u` and `u + e_i` for `i < d` and are open with probability `eps`;
//! vertical edges join `u` and `u + n e_d` and are open with probability
//! `p_n` when `n <= K` and never otherwise. All states are pure functions of
//! a seed and the canonical object id (see [`crate::rng`]).

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::rng::{Sponge, TAG_EDGE, TAG_SITE};
use crate::scalar::{is_probability, Scalar};

pub type Vertex = SmallVec<[u64; 4]>;

/// Height used for windows that are unbounded in the long-range direction.
pub const LAZY_HEIGHT: u64 = 1 << 48;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} is out of range ({expected})")]
    Parameter {
        name: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("vertex has {got} coordinates, model dimension is {dim}")]
    Dimension { got: usize, dim: usize },
    #[error("vertex {0:?} lies outside the box")]
    OutsideBox(Vec<u64>),
    #[error("not an edge of the lattice: {0}")]
    NotAnEdge(String),
}

fn param_err(name: &'static str, value: impl ToString, expected: &'static str) -> ModelError {
    ModelError::Parameter {
        name,
        value: value.to_string(),
        expected,
    }
}

/// The sequence `p_n` of vertical edge probabilities (before truncation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PnFamily<T> {
    /// `p_n = min(1, c/n)`.
    Harmonic { c: T },
    /// `p_n = q`.
    Constant { q: T },
    /// `p_n = values[n-1]`, zero past the end.
    Custom { values: Vec<T> },
}

impl<T: Scalar> PnFamily<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            PnFamily::Harmonic { c } if !(*c > T::zero()) || !c.is_finite() => {
                Err(param_err("pn.c", c, "positive real"))
            }
            PnFamily::Constant { q } if !is_probability(*q) => {
                Err(param_err("pn.q", q, "probability in [0,1]"))
            }
            PnFamily::Custom { values } => match values.iter().find(|v| !is_probability(**v)) {
                Some(v) => Err(param_err("pn.values", v, "probabilities in [0,1]")),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// `p_n`; zero for `n = 0` and past the end of a custom list.
    pub fn value(&self, n: u64) -> T {
        if n == 0 {
            return T::zero();
        }
        match self {
            PnFamily::Harmonic { c } => (*c / T::of_u64(n)).min(T::one()),
            PnFamily::Constant { q } => *q,
            PnFamily::Custom { values } => usize::try_from(n - 1)
                .ok()
                .and_then(|i| values.get(i))
                .copied()
                .unwrap_or_else(T::zero),
        }
    }

    /// `p_1 + ... + p_n`.
    pub fn partial_sum(&self, n: u64) -> T {
        (1..=n).fold(T::zero(), |acc, i| acc + self.value(i))
    }
}

/// Scalar parameters of the annealed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub d: usize,
    /// Density of letter 1.
    pub p: T,
    /// Horizontal edge density.
    pub eps: T,
    /// Truncation: vertical edges longer than this are closed.
    pub k: u64,
    pub pn: PnFamily<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(d: usize, p: T, eps: T, k: u64, pn: PnFamily<T>) -> Result<Self, ModelError> {
        let params = ModelParams { d, p, eps, k, pn };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d < 2 {
            return Err(param_err("d", self.d, "integer >= 2"));
        }
        if !is_probability(self.p) {
            return Err(param_err("p", self.p, "probability in [0,1]"));
        }
        if !is_probability(self.eps) {
            return Err(param_err("eps", self.eps, "probability in [0,1]"));
        }
        self.pn.validate()
    }

    /// The truncated sequence `p_n^K`.
    pub fn truncated_pn(&self, n: u64) -> T {
        if n > self.k {
            T::zero()
        } else {
            self.pn.value(n)
        }
    }

    pub fn with_k(&self, k: u64) -> Self {
        ModelParams { k, ..self.clone() }
    }

    pub fn with_eps(&self, eps: T) -> Self {
        ModelParams { eps, ..self.clone() }
    }
}

/// Finite window `[0, w_1] x ... x [0, w_{d-1}] x [0, height]` of `Z^d_+`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub widths: Vec<u64>,
    pub height: u64,
}

impl LatticeBox {
    pub fn new(widths: Vec<u64>, height: u64) -> Result<Self, ModelError> {
        if widths.is_empty() {
            return Err(param_err("widths", "[]", "at least one horizontal extent"));
        }
        if let Some(w) = widths.iter().find(|w| **w == 0) {
            return Err(param_err("widths", w, "positive integers"));
        }
        if height == 0 {
            return Err(param_err("height", height, "positive integer"));
        }
        Ok(LatticeBox { widths, height })
    }

    /// A window whose height is effectively unbounded.
    pub fn lazy(widths: Vec<u64>) -> Result<Self, ModelError> {
        Self::new(widths, LAZY_HEIGHT)
    }

    pub fn dim(&self) -> usize {
        self.widths.len() + 1
    }

    pub fn is_lazy(&self) -> bool {
        self.height >= LAZY_HEIGHT
    }

    #[inline]
    pub fn contains(&self, v: &[u64]) -> bool {
        v.len() == self.dim()
            && v[..v.len() - 1]
                .iter()
                .zip(&self.widths)
                .all(|(x, w)| x <= w)
            && v[v.len() - 1] <= self.height
    }

    pub fn vertex_count(&self) -> u128 {
        self.widths
            .iter()
            .fold(self.height as u128 + 1, |acc, w| acc * (*w as u128 + 1))
    }
}

/// An edge in canonical form: lower endpoint, direction in `1..=d`, length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub base: Vertex,
    pub dir: usize,
    pub len: u64,
}

impl Edge {
    pub fn horizontal(base: &[u64], dir: usize) -> Self {
        Edge {
            base: Vertex::from_slice(base),
            dir,
            len: 1,
        }
    }

    pub fn vertical(base: &[u64], len: u64) -> Self {
        Edge {
            base: Vertex::from_slice(base),
            dir: base.len(),
            len,
        }
    }

    pub fn head(&self) -> Vertex {
        let mut v = self.base.clone();
        v[self.dir - 1] += self.len;
        v
    }
}

/// Lazily sampled bond configuration on a box.
#[derive(Debug, Clone)]
pub struct Environment<T> {
    params: ModelParams<T>,
    bond_seed: u64,
    bx: LatticeBox,
    eps: f64,
}

impl<T: Scalar> Environment<T> {
    pub fn new(params: ModelParams<T>, bond_seed: u64, bx: LatticeBox) -> Result<Self, ModelError> {
        params.validate()?;
        if bx.dim() != params.d {
            return Err(ModelError::Dimension {
                got: bx.dim(),
                dim: params.d,
            });
        }
        let eps = params.eps.as_f64();
        Ok(Environment {
            params,
            bond_seed,
            bx,
            eps,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn bond_seed(&self) -> u64 {
        self.bond_seed
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn dim(&self) -> usize {
        self.params.d
    }

    /// Checked edge query.
    pub fn edge_open(&self, edge: &Edge) -> Result<bool, ModelError> {
        let d = self.dim();
        if edge.base.len() != d {
            return Err(ModelError::Dimension {
                got: edge.base.len(),
                dim: d,
            });
        }
        if edge.dir == 0 || edge.dir > d {
            return Err(ModelError::NotAnEdge(format!("direction {}", edge.dir)));
        }
        if edge.len == 0 || (edge.dir < d && edge.len != 1) {
            return Err(ModelError::NotAnEdge(format!(
                "length {} in direction {}",
                edge.len, edge.dir
            )));
        }
        if !self.bx.contains(&edge.base) {
            return Err(ModelError::OutsideBox(edge.base.to_vec()));
        }
        let head = edge
            .base
            .get(edge.dir - 1)
            .and_then(|c| c.checked_add(edge.len));
        let mut end = edge.base.clone();
        match head {
            Some(h) => end[edge.dir - 1] = h,
            None => return Err(ModelError::OutsideBox(edge.base.to_vec())),
        }
        if !self.bx.contains(&end) {
            return Err(ModelError::OutsideBox(end.to_vec()));
        }
        Ok(if edge.dir == d {
            self.vertical_open(&edge.base, edge.len)
        } else {
            self.horizontal_open(&edge.base, edge.dir)
        })
    }

    fn edge_sponge(&self, base: &[u64]) -> Sponge {
        let mut s = Sponge::new(self.bond_seed);
        s.absorb(TAG_EDGE);
        for &c in base {
            s.absorb(c);
        }
        s
    }

    /// Unchecked query for the vertical edge `base -> base + len e_d`.
    #[inline]
    pub fn vertical_open(&self, base: &[u64], len: u64) -> bool {
        let threshold = self.params.truncated_pn(len).as_f64();
        if threshold <= 0.0 {
            return false;
        }
        let mut s = self.edge_sponge(base);
        s.absorb(base.len() as u64).absorb(len);
        s.uniform() < threshold
    }

    /// Unchecked query for the horizontal edge `base -> base + e_dir`.
    #[inline]
    pub fn horizontal_open(&self, base: &[u64], dir: usize) -> bool {
        if self.eps <= 0.0 {
            return false;
        }
        let mut s = self.edge_sponge(base);
        s.absorb(dir as u64).absorb(1);
        s.uniform() < self.eps
    }

    /// Heads of all open out-edges of `v` that stay inside the box, horizontal
    /// directions first, then vertical lengths in increasing order.
    pub fn out_neighbors(&self, v: &[u64]) -> Vec<Vertex> {
        let d = self.dim();
        let mut out = Vec::new();
        if self.eps > 0.0 {
            let prefix = self.edge_sponge(v);
            for dir in 1..d {
                if v[dir - 1] < self.bx.widths[dir - 1] {
                    let mut s = prefix;
                    s.absorb(dir as u64).absorb(1);
                    if s.uniform() < self.eps {
                        let mut u = Vertex::from_slice(v);
                        u[dir - 1] += 1;
                        out.push(u);
                    }
                }
            }
        }
        let room = self.bx.height.saturating_sub(v[d - 1]);
        let support = match &self.params.pn {
            PnFamily::Custom { values } => values.len() as u64,
            _ => u64::MAX,
        };
        let max_len = self.params.k.min(room).min(support);
        if max_len > 0 {
            let mut prefix = self.edge_sponge(v);
            prefix.absorb(d as u64);
            for len in 1..=max_len {
                let threshold = self.params.pn.value(len).as_f64();
                if threshold <= 0.0 {
                    continue;
                }
                let mut s = prefix;
                s.absorb(len);
                if s.uniform() < threshold {
                    let mut u = Vertex::from_slice(v);
                    u[d - 1] += len;
                    out.push(u);
                }
            }
        }
        out
    }
}

/// Lazily sampled site letters.
#[derive(Debug, Clone)]
pub struct SiteField<T> {
    p: T,
    site_seed: u64,
    bx: LatticeBox,
    threshold: f64,
}

impl<T: Scalar> SiteField<T> {
    pub fn new(p: T, site_seed: u64, bx: LatticeBox) -> Result<Self, ModelError> {
        if !is_probability(p) {
            return Err(param_err("p", p, "probability in [0,1]"));
        }
        Ok(SiteField {
            p,
            site_seed,
            bx,
            threshold: p.as_f64(),
        })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn site_seed(&self) -> u64 {
        self.site_seed
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.bx
    }

    /// Letter at `v`: 1 with probability `p`.
    #[inline]
    pub fn label(&self, v: &[u64]) -> u8 {
        let mut s = Sponge::new(self.site_seed);
        s.absorb(TAG_SITE);
        for &c in v {
            s.absorb(c);
        }
        u8::from(s.uniform() < self.threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{encode_edge, encode_site, uniform_at};

    fn harmonic(k: u64, eps: f64) -> ModelParams<f64> {
        ModelParams::new(3, 0.5, eps, k, PnFamily::Harmonic { c: 1.0 }).unwrap()
    }

    #[test]
    fn pn_values() {
        assert!((PnFamily::Harmonic { c: 1.0f64 }.value(3) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(PnFamily::Harmonic { c: 5.0 }.value(2), 1.0);
        assert_eq!(PnFamily::Constant { q: 0.2 }.value(100), 0.2);
        assert_eq!(
            PnFamily::Custom {
                values: vec![0.5, 0.25]
            }
            .value(3),
            0.0
        );
    }

    #[test]
    fn pn_partial_sums() {
        let h = PnFamily::Harmonic { c: 1.0f64 }.partial_sum(4);
        assert!((h - 25.0 / 12.0).abs() < 1e-15);
        assert_eq!(PnFamily::Constant { q: 0.0f64 }.partial_sum(10), 0.0);
        assert_eq!(PnFamily::Custom { values: vec![1.0f64] }.partial_sum(5), 1.0);
        // f32 instantiation
        let h32 = PnFamily::Harmonic { c: 1.0f32 }.partial_sum(4);
        assert!((h32 - 25.0 / 12.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_parameters() {
        assert!(ModelParams::new(1, 0.5, 0.5, 1, PnFamily::Constant { q: 0.5 }).is_err());
        assert!(ModelParams::new(3, 1.5, 0.5, 1, PnFamily::Constant { q: 0.5 }).is_err());
        assert!(ModelParams::new(3, 0.5, -0.1, 1, PnFamily::Constant { q: 0.5 }).is_err());
        assert!(ModelParams::new(3, 0.5, 0.5, 1, PnFamily::Constant { q: 2.0 }).is_err());
        assert!(ModelParams::new(3, 0.5, 0.5, 1, PnFamily::Harmonic { c: 0.0 }).is_err());
        assert!(LatticeBox::new(vec![2, 0], 3).is_err());
        assert!(LatticeBox::new(vec![2, 2], 0).is_err());
    }

    #[test]
    fn box_membership() {
        let b = LatticeBox::new(vec![3, 3], 6).unwrap();
        assert!(b.contains(&[3, 3, 6]));
        assert!(!b.contains(&[4, 0, 0]));
        assert!(!b.contains(&[0, 0, 7]));
        assert!(!b.contains(&[0, 0]));
        assert_eq!(b.vertex_count(), 4 * 4 * 7);
    }

    #[test]
    fn zero_truncation_closes_vertical_edges() {
        let env = Environment::new(harmonic(0, 0.5), 1, LatticeBox::lazy(vec![5, 5]).unwrap()).unwrap();
        for n in 1..50 {
            assert!(!env.edge_open(&Edge::vertical(&[0, 0, 0], n)).unwrap());
        }
    }

    #[test]
    fn full_eps_opens_horizontal_edges() {
        let env = Environment::new(harmonic(3, 1.0), 9, LatticeBox::lazy(vec![5, 5]).unwrap()).unwrap();
        for x in 0..5 {
            assert!(env.edge_open(&Edge::horizontal(&[x, 0, x], 1)).unwrap());
            assert!(env.edge_open(&Edge::horizontal(&[0, x, 2], 2)).unwrap());
        }
    }

    #[test]
    fn horizontal_frequency() {
        let env = Environment::new(harmonic(3, 0.3), 17, LatticeBox::lazy(vec![1000, 1000]).unwrap()).unwrap();
        let n = 100_000u64;
        let open = (0..n)
            .filter(|i| env.horizontal_open(&[i % 1000, i / 1000, 3], 1 + (*i as usize % 2)))
            .count();
        let f = open as f64 / n as f64;
        assert!((f - 0.3).abs() < 0.006, "{f}");
    }

    #[test]
    fn site_label_extremes_and_frequency() {
        let bx = LatticeBox::lazy(vec![1000, 1000]).unwrap();
        let ones = SiteField::new(1.0, 3, bx.clone()).unwrap();
        let zeros = SiteField::new(0.0, 3, bx.clone()).unwrap();
        let half = SiteField::new(0.5, 3, bx).unwrap();
        let mut count = 0u64;
        for i in 0..100_000u64 {
            let v = [i % 1000, i / 1000, i % 7];
            assert_eq!(ones.label(&v), 1);
            assert_eq!(zeros.label(&v), 0);
            count += half.label(&v) as u64;
        }
        let f = count as f64 / 1e5;
        assert!((f - 0.5).abs() < 0.0064, "{f}");
    }

    #[test]
    fn lazy_queries_match_canonical_ids() {
        let env = Environment::new(harmonic(10, 0.4), 77, LatticeBox::lazy(vec![9, 9]).unwrap()).unwrap();
        let sites = SiteField::new(0.5, 78, LatticeBox::lazy(vec![9, 9]).unwrap()).unwrap();
        for len in 1..=10 {
            let u = uniform_at(77, &encode_edge(&[1, 2, 3], 3, len)).unwrap();
            assert_eq!(env.vertical_open(&[1, 2, 3], len), u < 1.0 / len as f64);
        }
        let u = uniform_at(77, &encode_edge(&[1, 2, 3], 2, 1)).unwrap();
        assert_eq!(env.horizontal_open(&[1, 2, 3], 2), u < 0.4);
        let u = uniform_at(78, &encode_site(&[4, 5, 6])).unwrap();
        assert_eq!(sites.label(&[4, 5, 6]), u8::from(u < 0.5));
    }

    #[test]
    fn out_neighbors_agree_with_edge_queries() {
        let bx = LatticeBox::new(vec![3, 3], 6).unwrap();
        let env = Environment::new(harmonic(3, 0.5), 5, bx).unwrap();
        for x in 0..=3 {
            for z in 0..=6 {
                let v = [x, 3 - x, z];
                let got = env.out_neighbors(&v);
                let mut want = Vec::new();
                for dir in 1..3 {
                    let e = Edge::horizontal(&v, dir);
                    if env.lattice_box().contains(&e.head()) && env.edge_open(&e).unwrap() {
                        want.push(e.head());
                    }
                }
                for len in 1..=3 {
                    let e = Edge::vertical(&v, len);
                    if env.lattice_box().contains(&e.head()) && env.edge_open(&e).unwrap() {
                        want.push(e.head());
                    }
                }
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn invalid_edges() {
        let env = Environment::new(harmonic(3, 0.5), 5, LatticeBox::new(vec![3, 3], 6).unwrap()).unwrap();
        let long_horizontal = Edge {
            base: Vertex::from_slice(&[0, 0, 0]),
            dir: 1,
            len: 2,
        };
        assert!(matches!(env.edge_open(&long_horizontal), Err(ModelError::NotAnEdge(_))));
        assert!(matches!(
            env.edge_open(&Edge::vertical(&[0, 0, 5], 2)),
            Err(ModelError::OutsideBox(_))
        ));
        assert!(matches!(
            env.edge_open(&Edge::vertical(&[0, 0], 1)),
            Err(ModelError::Dimension { .. })
        ));
    }

    #[test]
    fn general_dimension() {
        let params = ModelParams::new(2, 0.5, 1.0, 2, PnFamily::Constant { q: 1.0 }).unwrap();
        let env = Environment::new(params, 1, LatticeBox::new(vec![4], 4).unwrap()).unwrap();
        let ns = env.out_neighbors(&[0, 0]);
        assert_eq!(ns.len(), 3);
        let params4 = ModelParams::new(4, 0.5, 1.0, 1, PnFamily::Constant { q: 1.0 }).unwrap();
        let env4 = Environment::new(params4, 1, LatticeBox::new(vec![1, 1, 1], 1).unwrap()).unwrap();
        assert_eq!(env4.out_neighbors(&[0, 0, 0, 0]).len(), 4);
    }
}
