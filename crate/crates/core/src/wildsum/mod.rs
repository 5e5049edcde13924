//! Explicit extended Wild sums.
//!
//! The law of a component at time `t` is a convex combination, over the number
//! `n` of m-ary interactions in its history, of the average of the iterated
//! kernel laws over all ordered trees with `n` internal nodes:
//!
//! ```text
//! μ_t = Σ_n p_n(t) · (1/#_m(n)) Σ_{A ∈ 𝔸_n} μ^{∘A},
//! p_n(t) = #_m(n) / ((m-1)^n n!) · e^{-λt} (1 - e^{-(m-1)λt})^n.
//! ```
//!
//! [`tree_eval`] evaluates single (decorated) trees; [`series`] sums the
//! series, either by explicit enumeration for small orders or through an
//! exact recursion over root-subtree sizes that scales to the orders a tight
//! truncation needs.

pub mod series;
pub mod tree_eval;

pub use series::{
    enumerated_wild_sum, uniform_arrangement_series, wild_sum, wild_sum_up_down,
    wild_sum_two_kernel, ArrangementCaps,
};
pub use tree_eval::{decorated_tree_law, tree_law, tree_law_cached, TreeLawCache};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::statespace::Measure;

/// Largest series order a solver will build before giving up.
pub const DEFAULT_MAX_ORDER: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    /// m-ary meeting rate per component.
    pub lambda: f64,
    pub gamma_u: f64,
    pub gamma_d: f64,
    pub t: f64,
    /// Bound on the discarded probability mass.
    pub truncation_eps: f64,
    pub max_order: usize,
}

impl SeriesParams {
    pub fn new(lambda: f64, t: f64, truncation_eps: f64) -> Self {
        SeriesParams {
            lambda,
            gamma_u: 0.0,
            gamma_d: 0.0,
            t,
            truncation_eps,
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    /// Single unary kernel at rate `gamma`.
    pub fn with_gamma(self, gamma: f64) -> Self {
        SeriesParams { gamma_u: gamma, gamma_d: 0.0, ..self }
    }

    pub fn with_rates(self, gamma_u: f64, gamma_d: f64) -> Self {
        SeriesParams { gamma_u, gamma_d, ..self }
    }

    pub fn with_max_order(self, max_order: usize) -> Self {
        SeriesParams { max_order, ..self }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_u + self.gamma_d
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::param(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.gamma_u >= 0.0 && self.gamma_d >= 0.0) {
            return Err(Error::param("unary rates must be non-negative"));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::param(format!("time must be non-negative, got {}", self.t)));
        }
        if !(self.truncation_eps > 0.0 && self.truncation_eps < 1.0) {
            return Err(Error::param(format!(
                "truncation eps must lie in (0, 1), got {}",
                self.truncation_eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    /// Truncated series, renormalised to unit mass.
    pub law: Measure,
    /// Highest retained orders `(n, p)`.
    pub terms_used: (usize, usize),
    /// Discarded probability mass; the unnormalised sum has mass `1 - tail_bound`.
    pub tail_bound: f64,
    /// Mass of the truncated sum before renormalisation.
    pub raw_mass: f64,
}

/// `#_m(n) / ((m-1)^n n!)`, computed by its ratio recurrence.
pub fn tree_density(m: usize, n: usize) -> f64 {
    let r = (m - 1) as f64;
    (1..=n).fold(1.0, |d, k| d * (r * (k - 1) as f64 + 1.0) / (r * k as f64))
}

/// Probability of exactly `n` m-ary branchings in a history of length `t`.
pub fn p_n(params: &SeriesParams, m: usize, n: usize) -> f64 {
    let lt = params.lambda * params.t;
    let x = 1.0 - (-((m - 1) as f64) * params.lambda * params.t).exp();
    tree_density(m, n) * (-lt).exp() * x.powf(n as f64)
}

/// Poisson mass of `p` autonomous moves at total rate `gamma_u + gamma_d`.
pub fn q_p(params: &SeriesParams, p: usize) -> f64 {
    let gt = params.gamma() * params.t;
    poisson_mass(gt, p)
}

pub(crate) fn poisson_mass(mean: f64, k: usize) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k <= 30 {
        (1..=k).fold((-mean).exp(), |v, j| v * mean / j as f64)
    } else {
        (-mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_weights_are_classical_wild_coefficients() {
        for &(lambda, t) in &[(1.0, 1.0), (0.3, 2.5), (2.0, 0.1), (1.7, 0.9)] {
            let params = SeriesParams::new(lambda, t, 1e-8);
            for n in [0usize, 1, 2, 7, 15] {
                let classical = (-lambda * t).exp() * (1.0 - (-lambda * t).exp()).powf(n as f64);
                assert_eq!(p_n(&params, 2, n), classical);
            }
        }
    }

    #[test]
    fn weights_at_time_zero() {
        let params = SeriesParams::new(1.0, 0.0, 1e-8).with_gamma(1.0);
        assert_eq!(p_n(&params, 3, 0), 1.0);
        assert_eq!(p_n(&params, 3, 4), 0.0);
        assert_eq!(q_p(&params, 0), 1.0);
    }

    #[test]
    fn ternary_weight_at_ln2() {
        let params = SeriesParams::new(1.0, 2f64.ln(), 1e-8);
        assert!((p_n(&params, 3, 1) - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_masses() {
        let p = SeriesParams::new(1.0, 1.0, 1e-8).with_gamma(1.0);
        assert!((q_p(&p, 1) - (-1f64).exp()).abs() < 1e-16);
        let p = SeriesParams::new(1.0, 0.5, 1e-8).with_gamma(2.0);
        assert!((q_p(&p, 2) - (-1f64).exp() / 2.0).abs() < 1e-16);
        // both branches agree where they meet
        let a = (1..=31).fold((-20f64).exp(), |v, j| v * 20.0 / j as f64);
        assert!((poisson_mass(20.0, 31) - a).abs() / a < 1e-12);
    }

    #[test]
    fn weights_normalise() {
        for m in 2..=4 {
            for &t in &[0.25, 1.0, 2.0] {
                let params = SeriesParams::new(1.0, t, 1e-8);
                // sum until the terms no longer move the total
                let mut total = 0.0;
                let mut n = 0;
                loop {
                    let w = p_n(&params, m, n);
                    total += w;
                    n += 1;
                    if 1.0 - total <= 1e-14 || (n > 10 && w < 1e-17) {
                        break;
                    }
                }
                assert!((total - 1.0).abs() < 1e-10, "m={m} t={t} total={total}");
            }
        }
    }

    #[test]
    fn param_validation() {
        assert!(SeriesParams::new(0.0, 1.0, 1e-8).validate().is_err());
        assert!(SeriesParams::new(1.0, -1.0, 1e-8).validate().is_err());
        assert!(SeriesParams::new(1.0, 1.0, 1.0).validate().is_err());
        assert!(SeriesParams::new(1.0, 1.0, 1e-8).with_gamma(-0.1).validate().is_err());
        assert!(SeriesParams::new(1.0, 1.0, 1e-8).validate().is_ok());
    }
}
