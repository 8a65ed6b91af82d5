//! Closed-form bounds and decay-rate fitting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::scalar::{is_probability, Scalar};

/// Above this `n` the binomial tail is summed in log space.
pub const DIRECT_SUM_MAX_N: u64 = 1000;
/// Largest `n` accepted by the binomial tails.
pub const MAX_BINOM_N: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("{name} = {value} is not a probability")]
    Probability { name: &'static str, value: f64 },
    #[error("binomial tail needs 0 <= k <= n <= {max}, got n = {n}, k = {k}")]
    BinomialRange { n: u64, k: u64, max: u64 },
    #[error("m must be positive")]
    ZeroM,
    #[error("rate indistinguishable from 0: fewer than two nonzero estimates")]
    RateIndistinguishable,
    #[error("invalid argument: {0}")]
    Argument(String),
}

fn check_prob<T: Scalar>(name: &'static str, x: T) -> Result<(), BoundsError> {
    if is_probability(x) {
        Ok(())
    } else {
        Err(BoundsError::Probability {
            name,
            value: x.as_f64(),
        })
    }
}

/// `((1 - beta + beta e^t)^8 / e^{4t})^m`
pub fn chernoff<T: Scalar>(beta: T, t: T, m: u32) -> T {
    let one = T::one();
    let base = (one - beta + beta * t.exp()).powi(8) / (T::of(4.0) * t).exp();
    base.powi(m as i32)
}

/// `P(Bin(n, beta) > k)`.
pub fn exact_binom_tail<T: Scalar>(n: u64, beta: T, k: u64) -> Result<T, BoundsError> {
    check_prob("beta", beta)?;
    if k > n || n > MAX_BINOM_N {
        return Err(BoundsError::BinomialRange {
            n,
            k,
            max: MAX_BINOM_N,
        });
    }
    if k == n || beta.is_zero() {
        return Ok(T::zero());
    }
    if beta == T::one() {
        return Ok(T::one());
    }
    let b = beta.as_f64();
    let (lb, lq) = (b.ln(), (-b).ln_1p());
    let ln_fact_n = ln_gamma(n as f64 + 1.0);
    let log_term = |j: u64| {
        ln_fact_n - ln_gamma(j as f64 + 1.0) - ln_gamma((n - j) as f64 + 1.0)
            + j as f64 * lb
            + (n - j) as f64 * lq
    };
    let sum = if n <= DIRECT_SUM_MAX_N {
        (k + 1..=n).map(|j| log_term(j).exp()).sum::<f64>()
    } else {
        let logs: Vec<f64> = (k + 1..=n).map(log_term).collect();
        let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        peak.exp() * logs.iter().map(|l| (l - peak).exp()).sum::<f64>()
    };
    Ok(T::of(sum.min(1.0)))
}

/// `P(Bin(n, beta) > k)` in exact rational arithmetic.
pub fn exact_binom_tail_rational(n: u64, beta: &BigRational, k: u64) -> Result<BigRational, BoundsError> {
    if beta < &BigRational::zero() || beta > &BigRational::one() {
        return Err(BoundsError::Argument(format!("beta = {beta} is not a probability")));
    }
    if k > n || n > MAX_BINOM_N {
        return Err(BoundsError::BinomialRange {
            n,
            k,
            max: MAX_BINOM_N,
        });
    }
    let q = BigRational::one() - beta;
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    for j in 0..=n {
        if j > k {
            let term = BigRational::from_integer(binom.clone())
                * num_traits::pow(beta.clone(), j as usize)
                * num_traits::pow(q.clone(), (n - j) as usize);
            total += term;
        }
        binom = binom * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    Ok(total)
}

/// The exact rational value of a finite float.
pub fn float_to_rational(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// `q` with `1 - gamma = (1 - q)^2`.
pub fn q_of_gamma<T: Scalar>(gamma: T) -> Result<T, BoundsError> {
    check_prob("gamma", gamma)?;
    Ok(T::one() - (T::one() - gamma).sqrt())
}

/// `(c (1 - q))^{m/2}`; `c` is a free constant.
pub fn contour_bound_shape<T: Scalar>(c: T, q: T, m: u32) -> Result<T, BoundsError> {
    check_prob("q", q)?;
    if !(c > T::zero()) {
        return Err(BoundsError::Argument(format!("c = {c} must be positive")));
    }
    if m == 0 {
        return Err(BoundsError::ZeroM);
    }
    Ok((c * (T::one() - q)).powf(T::of(m as f64 / 2.0)))
}

/// Total of `sum_{m >= 1} (2^32 a)^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget<T> {
    Finite(T),
    Divergent,
}

impl<T: Scalar> Budget<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Budget::Finite(_))
    }

    pub fn value(&self) -> Option<T> {
        match self {
            Budget::Finite(v) => Some(*v),
            Budget::Divergent => None,
        }
    }
}

pub fn union_budget<T: Scalar>(a: T) -> Result<Budget<T>, BoundsError> {
    if !(a > T::zero()) {
        return Err(BoundsError::Argument(format!("a = {a} must be positive")));
    }
    let x = T::of(2f64.powi(32)) * a;
    Ok(if x < T::one() {
        Budget::Finite(x / (T::one() - x))
    } else {
        Budget::Divergent
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit<T> {
    /// Points used in the regression.
    pub points: Vec<(f64, T)>,
    /// Points with zero estimate, excluded from the regression.
    pub dropped: Vec<f64>,
    pub a_hat: T,
    pub r2: T,
}

/// Least squares of `log estimate` on `m`; `a_hat = exp(slope)`.
pub fn fit_decay<T: Scalar>(points: &[(f64, T)]) -> Result<DecayFit<T>, BoundsError> {
    let (kept, dropped): (Vec<(f64, T)>, Vec<(f64, T)>) =
        points.iter().copied().partition(|(_, y)| *y > T::zero());
    for (m, y) in &kept {
        if !m.is_finite() || !is_probability(*y) {
            return Err(BoundsError::Argument(format!("bad point ({m}, {y})")));
        }
    }
    if kept.len() < 2 {
        return Err(BoundsError::RateIndistinguishable);
    }
    let n = kept.len() as f64;
    let xs: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.as_f64().ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(BoundsError::Argument("all points share the same m".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(DecayFit {
        points: kept,
        dropped: dropped.into_iter().map(|p| p.0).collect(),
        a_hat: T::of(slope.exp()),
        r2: T::of(r2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn chernoff_fixtures() {
        for beta in [0.0, 0.3, 1.0] {
            assert_eq!(chernoff(beta, 0.0, 4), 1.0);
        }
        assert!((chernoff(0.0, 1.0, 2) - (-8f64).exp()).abs() < 1e-15);
        assert!((chernoff(0.0f32, 1.0, 2) - (-8f32).exp()).abs() < 1e-7);
    }

    #[test]
    fn chernoff_dominates_tail() {
        for m in 1..=5u32 {
            let c = chernoff(0.1, 1.0, m);
            let t = exact_binom_tail(8 * m as u64, 0.1, 4 * m as u64).unwrap();
            assert!(c >= t, "m={m}: {c} < {t}");
        }
    }

    #[test]
    fn binomial_fixtures() {
        assert_eq!(exact_binom_tail(10, 0.0, 0).unwrap(), 0.0);
        assert_eq!(exact_binom_tail(10, 1.0, 9).unwrap(), 1.0);
        let t = exact_binom_tail(8, 0.5f64, 4).unwrap();
        assert!((t - 93.0 / 256.0).abs() < 1e-14);
        assert_eq!(
            exact_binom_tail_rational(8, &ratio(1, 2), 4).unwrap(),
            ratio(93, 256)
        );
        assert!(exact_binom_tail(5, 0.5, 6).is_err());
        assert!(exact_binom_tail(20_000, 0.5, 6).is_err());
        assert!(exact_binom_tail(5, 1.5, 2).is_err());
    }

    #[test]
    fn float_and_rational_tails_agree() {
        for (n, k) in [(8u64, 4u64), (24, 12), (40, 3), (60, 50)] {
            let f = exact_binom_tail(n, 0.2, k).unwrap();
            let r = exact_binom_tail_rational(n, &ratio(1, 5), k).unwrap();
            let rf = num_traits::ToPrimitive::to_f64(&r).unwrap();
            assert!((f - rf).abs() <= 1e-12 * rf.max(1e-300), "n={n} k={k}: {f} vs {rf}");
        }
    }

    #[test]
    fn log_space_branch_is_continuous() {
        // Mean 600 of n = 2000, tail beyond 650.
        let big = exact_binom_tail(2000, 0.3, 650).unwrap();
        let small = exact_binom_tail(1000, 0.3, 325).unwrap();
        assert!(big > 0.0 && big < small && small < 0.5);
        let tiny = exact_binom_tail(5000, 0.01, 4000).unwrap();
        assert!((0.0..1e-300).contains(&tiny));
    }

    #[test]
    fn q_of_gamma_fixtures() {
        assert_eq!(q_of_gamma(0.0).unwrap(), 0.0);
        assert_eq!(q_of_gamma(0.75).unwrap(), 0.5);
        assert_eq!(q_of_gamma(1.0).unwrap(), 1.0);
        assert!(q_of_gamma(-0.1).is_err());
    }

    #[test]
    fn contour_fixtures() {
        assert_eq!(contour_bound_shape(5.0, 1.0, 3).unwrap(), 0.0);
        assert_eq!(contour_bound_shape(2.0, 0.5, 7).unwrap(), 1.0);
        let v: Vec<f64> = (1..6).map(|m| contour_bound_shape(16.0, 0.99, m).unwrap()).collect();
        for (m, x) in v.iter().enumerate() {
            assert!((x - 0.16f64.powf((m + 1) as f64 / 2.0)).abs() < 1e-12);
        }
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn union_budget_fixtures() {
        assert_eq!(union_budget(2f64.powi(-33)).unwrap(), Budget::Finite(1.0));
        let third = union_budget(2f64.powi(-34)).unwrap().value().unwrap();
        assert!((third - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(union_budget(2f64.powi(-32)).unwrap(), Budget::Divergent);
        assert_eq!(union_budget(0.5).unwrap(), Budget::Divergent);
        assert!(union_budget(0.0).is_err());
    }

    #[test]
    fn fit_exact_geometric() {
        let fit = fit_decay(&[(1.0, 0.1f64), (2.0, 0.01), (3.0, 0.001)]).unwrap();
        assert!((fit.a_hat - 0.1).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.dropped.is_empty());
    }

    #[test]
    fn fit_rejects_degenerate() {
        assert_eq!(
            fit_decay(&[(1.0, 0.2), (2.0, 0.0)]),
            Err(BoundsError::RateIndistinguishable)
        );
        assert_eq!(fit_decay::<f64>(&[(1.0, 0.0), (2.0, 0.0)]), Err(BoundsError::RateIndistinguishable));
        let fit = fit_decay(&[(1.0, 0.2), (2.0, 0.04), (3.0, 0.0)]).unwrap();
        assert_eq!(fit.dropped, vec![3.0]);
    }

    #[test]
    fn fit_noisy_geometric() {
        // Binomial noise at 10^5 trials, drawn from a fixed stream.
        let mut rng = crate::rng::Sponge::new(99);
        let trials = 100_000u64;
        let mut pts = Vec::new();
        for m in 1..=5u64 {
            let p = 0.3f64.powi(m as i32);
            let mut s = 0u64;
            for k in 0..trials {
                let mut sp = rng;
                if sp.absorb(m).absorb(k).uniform() < p {
                    s += 1;
                }
            }
            rng.absorb(m);
            pts.push((m as f64, s as f64 / trials as f64));
        }
        let fit = fit_decay(&pts).unwrap();
        assert!(fit.a_hat > 0.2 && fit.a_hat < 0.4, "{}", fit.a_hat);
    }

    proptest! {
        #[test]
        fn q_identity_and_monotone(g in 0.0f64..1.0, h in 0.0f64..1.0) {
            let q = q_of_gamma(g).unwrap();
            prop_assert!(((1.0 - q).powi(2) - (1.0 - g)).abs() < 1e-12);
            if g <= h {
                prop_assert!(q <= q_of_gamma(h).unwrap());
            }
        }

        #[test]
        fn chernoff_is_an_upper_bound(beta in 0.0f64..0.5, t in 0.0f64..3.0, m in 1u32..8) {
            let c = chernoff(beta, t, m);
            let tail = exact_binom_tail(8 * m as u64, beta, 4 * m as u64).unwrap();
            prop_assert!(c >= tail * (1.0 - 1e-12));
        }

        #[test]
        fn budget_finite_iff_small(e in 20.0f64..45.0) {
            let a = 2f64.powf(-e);
            prop_assert_eq!(union_budget(a).unwrap().is_finite(), a < 2f64.powi(-32));
        }
    }
}
