//! Truncated series solvers.
//!
//! # Size-split recursion
//!
//! Let `E_n` be the uniform average of the tree laws over `𝔸_n`. In a uniform
//! tree of `𝔸_n` the root's subtrees have sizes `(n_1, …, n_m)` summing to
//! `n - 1` with probability `C(n-1; n_1..n_m) ∏ #_m(n_i) / #_m(n)`, and given
//! the sizes each subtree is uniform in its own class. Writing
//! `d_n = #_m(n)/((m-1)^n n!)` and `a_n = d_n E_n` this collapses to
//!
//! ```text
//! (m-1) n a_n = Σ_{n_1+…+n_m = n-1} B(a_{n_1}, …, a_{n_m}),
//! ```
//!
//! with `B` the multilinear first-coordinate operator, and the series is
//! `e^{-Λt} Σ_n x^n a_n` with `x = 1 - e^{-(m-1)Λt}`. The convolution over
//! sizes is evaluated one tuple coordinate at a time, so order `n` costs
//! `O(n k^m)` instead of the `#_m(n)` tree evaluations of plain enumeration.
//!
//! # Unary moves
//!
//! With autonomous moves at rate `γ` the evolution is
//! `λ(ν^{∘m} − ν) + γ(νQ_1 − ν) = Λ(B_γ(ν,…,ν) − ν)` where `Λ = λ + γ` and
//! `B_γ = (λ/Λ) B + (γ/Λ) B_1`, `B_1(v_1,…,v_m) = v_1 Q_1 ∏_{i>1} |v_i|`.
//! `B_γ` is multilinear, so the same series at rate `Λ` is exact. In tree
//! terms every internal node is an m-ary meeting with probability `λ/Λ` and a
//! unary move of its first lineage otherwise.

use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::tree_eval::{eval_decorated, eval_node, TreeLawCache};
use super::{p_n, q_p, SeriesParams, SeriesResult};
use crate::error::{Error, Result};
use crate::statespace::{contract_last, MAryKernel, MarginalTable, Measure, UnaryKernel};
use crate::trees::{count_arrangements, count_trees, enumerate_arrangements, enumerate_trees};

struct RawSeries {
    unnormalized: Vec<f64>,
    order: usize,
    tail: f64,
}

fn size_split_series(
    table: &MarginalTable,
    mu0: &[f64],
    rate: f64,
    t: f64,
    eps: f64,
    max_order: usize,
) -> Result<RawSeries> {
    let m = table.arity();
    let k = table.size();
    let r = (m - 1) as f64;
    let e0 = (-rate * t).exp();
    let x = 1.0 - (-r * rate * t).exp();

    let mut acc: Vec<f64> = mu0.iter().map(|w| e0 * w).collect();
    let mut cum = e0;
    let mut weight = e0;
    let mut xn = 1.0;
    let mut a: Vec<Vec<f64>> = vec![mu0.to_vec()];
    // levels[j - 1][s]: tensor over (x_1..x_j, c) with coordinates j+1..m
    // contracted against size-s convolutions of the a's
    let mut levels: Vec<Vec<Vec<f64>>> = vec![Vec::new(); m - 1];
    let mut n = 0;
    while 1.0 - cum > eps {
        n += 1;
        if n > max_order {
            return Err(Error::ResourceCap(format!(
                "series needs more than {max_order} terms (reduce t or raise eps)"
            )));
        }
        let s = n - 1;
        levels[m - 2].push(contract_last(table.raw(), &a[s], k));
        for j in (1..m - 1).rev() {
            let mut sum = vec![0.0; levels[j][0].len() / k];
            for q in 0..=s {
                let part = contract_last(&levels[j][s - q], &a[q], k);
                sum.iter_mut().zip(&part).for_each(|(d, v)| *d += v);
            }
            levels[j - 1].push(sum);
        }
        let mut next = vec![0.0; k];
        for q in 0..=s {
            let part = contract_last(&levels[0][s - q], &a[q], k);
            next.iter_mut().zip(&part).for_each(|(d, v)| *d += v);
        }
        let scale = 1.0 / (r * n as f64);
        next.iter_mut().for_each(|v| *v *= scale);

        xn *= x;
        weight *= x * (r * (n - 1) as f64 + 1.0) / (r * n as f64);
        cum += weight;
        acc.iter_mut().zip(&next).for_each(|(d, v)| *d += e0 * xn * v);
        a.push(next);
    }
    Ok(RawSeries { unnormalized: acc, order: n, tail: (1.0 - cum).max(0.0) })
}

fn finish(kernel: &MAryKernel, raw: RawSeries, terms: (usize, usize)) -> Result<SeriesResult> {
    let raw_mass = raw.unnormalized.iter().sum();
    let law = Measure::normalized(kernel.space().clone(), raw.unnormalized)?;
    Ok(SeriesResult { law, terms_used: terms, tail_bound: raw.tail, raw_mass })
}

/// Single-kernel extended Wild sum.
pub fn wild_sum(kernel: &MAryKernel, mu0: &Measure, params: &SeriesParams) -> Result<SeriesResult> {
    params.validate()?;
    if params.gamma() != 0.0 {
        return Err(Error::param("wild_sum takes no unary rates; use wild_sum_two_kernel"));
    }
    mu0.check_space(kernel.space())?;
    let raw = size_split_series(
        kernel.marginal(),
        mu0.weights(),
        params.lambda,
        params.t,
        params.truncation_eps,
        params.max_order,
    )?;
    let n = raw.order;
    finish(kernel, raw, (n, 0))
}

/// m-ary kernel at rate `lambda` plus one unary kernel at rate `gamma_u`.
pub fn wild_sum_two_kernel(
    kernel: &MAryKernel,
    unary: &UnaryKernel,
    mu0: &Measure,
    params: &SeriesParams,
) -> Result<SeriesResult> {
    params.validate()?;
    if params.gamma_d != 0.0 {
        return Err(Error::param("wild_sum_two_kernel takes a single rate in gamma_u"));
    }
    mu0.check_space(kernel.space())?;
    mu0.check_space(unary.space())?;
    let gamma = params.gamma_u;
    if gamma == 0.0 {
        return wild_sum(kernel, mu0, params);
    }
    let total = params.lambda + gamma;
    let table = kernel.marginal().mix_unary(params.lambda / total, unary, gamma / total);
    let raw = size_split_series(
        &table,
        mu0.weights(),
        total,
        params.t,
        params.truncation_eps,
        params.max_order,
    )?;
    let n = raw.order;
    finish(kernel, raw, (n, n))
}

/// Separate up and down kernels at rates `gamma_u` and `gamma_d`, folded into
/// one kernel `(γ_u Q_up + γ_d Q_down)/(γ_u + γ_d)` at rate `γ_u + γ_d`.
pub fn wild_sum_up_down(
    kernel: &MAryKernel,
    up: &UnaryKernel,
    down: &UnaryKernel,
    mu0: &Measure,
    params: &SeriesParams,
) -> Result<SeriesResult> {
    params.validate()?;
    let terms: Vec<(f64, &UnaryKernel)> = [(params.gamma_u, up), (params.gamma_d, down)]
        .into_iter()
        .filter(|(r, _)| *r > 0.0)
        .collect();
    if terms.is_empty() {
        return Err(Error::param("at least one of gamma_u, gamma_d must be positive"));
    }
    let mixed = UnaryKernel::mix(&terms)?;
    wild_sum_two_kernel(kernel, &mixed, mu0, &params.with_gamma(params.gamma()))
}

/// The same series as [`wild_sum`] / [`wild_sum_two_kernel`], computed by
/// averaging tree laws over every tree of every retained order. Only
/// practical for small orders; `cap` bounds the order.
pub fn enumerated_wild_sum(
    kernel: &MAryKernel,
    unary: Option<&UnaryKernel>,
    mu0: &Measure,
    params: &SeriesParams,
    cap: usize,
) -> Result<SeriesResult> {
    params.validate()?;
    mu0.check_space(kernel.space())?;
    let gamma = params.gamma();
    let (table, rate) = match unary {
        Some(q1) if gamma > 0.0 => {
            let total = params.lambda + gamma;
            (kernel.marginal().mix_unary(params.lambda / total, q1, gamma / total), total)
        }
        None if gamma > 0.0 => return Err(Error::param("unary rate given without a unary kernel")),
        _ => (kernel.marginal().clone(), params.lambda),
    };
    let m = kernel.arity();
    let k = kernel.space().size();
    let rated = SeriesParams { lambda: rate, ..*params };
    let cache = TreeLawCache::new();
    let mut acc = vec![0.0; k];
    let mut cum = 0.0;
    let mut n = 0;
    loop {
        let weight = p_n(&rated, m, n);
        let trees: Vec<_> = enumerate_trees(m, n, cap)?.collect();
        let laws: Vec<Vec<f64>> = trees
            .par_iter()
            .map(|tree| eval_node(tree.root(), &table, mu0.weights(), Some(&cache)))
            .collect();
        let scale = weight / trees.len() as f64;
        for law in &laws {
            acc.iter_mut().zip(law).for_each(|(d, v)| *d += scale * v);
        }
        cum += weight;
        if 1.0 - cum <= params.truncation_eps {
            break;
        }
        n += 1;
    }
    let raw = RawSeries { unnormalized: acc, order: n, tail: (1.0 - cum).max(0.0) };
    let p = if gamma > 0.0 { n } else { 0 };
    finish(kernel, raw, (n, p))
}

/// Caps for [`uniform_arrangement_series`].
#[derive(Debug, Clone, Copy)]
pub struct ArrangementCaps {
    pub max_n: usize,
    pub max_p: usize,
    pub max_arrangements: usize,
}

impl Default for ArrangementCaps {
    fn default() -> Self {
        ArrangementCaps { max_n: 8, max_p: 8, max_arrangements: 200_000 }
    }
}

/// Double sum over trees and unary arrangements with product weights
/// `p_n(t) q_p(t)`, each order averaged uniformly over `#_m(n) C(mn+p, mn)`
/// decorated trees, with `q_p` the Poisson law of the moves along a single
/// lineage.
///
/// This weighting ignores that the number of moves grows with the total
/// branch length of the history, so it differs from the solution of the
/// two-kernel evolution whenever `λ > 0` and the unary kernel is not the
/// identity. Kept for comparison; [`wild_sum_two_kernel`] is the exact series.
pub fn uniform_arrangement_series(
    kernel: &MAryKernel,
    unary: &UnaryKernel,
    mu0: &Measure,
    params: &SeriesParams,
    caps: ArrangementCaps,
) -> Result<SeriesResult> {
    params.validate()?;
    mu0.check_space(kernel.space())?;
    mu0.check_space(unary.space())?;
    let m = kernel.arity();
    let k = kernel.space().size();
    let half = params.truncation_eps / 2.0;

    let (mut n_max, mut tree_mass) = (0, p_n(params, m, 0));
    while 1.0 - tree_mass > half {
        n_max += 1;
        if n_max > caps.max_n {
            return Err(Error::ResourceCap(format!("tree order above {}", caps.max_n)));
        }
        tree_mass += p_n(params, m, n_max);
    }
    let (mut p_max, mut unary_mass) = (0, q_p(params, 0));
    while 1.0 - unary_mass > half {
        p_max += 1;
        if p_max > caps.max_p {
            return Err(Error::ResourceCap(format!("unary order above {}", caps.max_p)));
        }
        unary_mass += q_p(params, p_max);
    }

    let table = kernel.marginal();
    let mut acc = vec![0.0; k];
    for n in 0..=n_max {
        let trees: Vec<_> = enumerate_trees(m, n, caps.max_n)?.collect();
        let n_trees = count_trees(m, n).to_f64().unwrap_or(f64::INFINITY);
        for p in 0..=p_max {
            let boxes = m * n + 1;
            let arrangements: Vec<_> =
                enumerate_arrangements(boxes, p, caps.max_arrangements)?.collect();
            let n_arr = count_arrangements(boxes, p).to_f64().unwrap_or(f64::INFINITY);
            let weight = p_n(params, m, n) * q_p(params, p) / (n_trees * n_arr);
            let partial: Vec<Vec<f64>> = trees
                .par_iter()
                .map(|tree| {
                    let mut sum = vec![0.0; k];
                    for arr in &arrangements {
                        let mut edge = 0;
                        let law = eval_decorated(
                            tree.root(),
                            table,
                            unary,
                            mu0.weights(),
                            arr.counts(),
                            &mut edge,
                        );
                        sum.iter_mut().zip(&law).for_each(|(d, v)| *d += v);
                    }
                    sum
                })
                .collect();
            for s in &partial {
                acc.iter_mut().zip(s).for_each(|(d, v)| *d += weight * v);
            }
        }
    }
    let raw = RawSeries {
        unnormalized: acc,
        order: n_max,
        tail: (1.0 - tree_mass * unary_mass).max(0.0),
    };
    finish(kernel, raw, (n_max, p_max))
}
