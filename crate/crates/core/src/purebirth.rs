//! Branching-count laws of a tagged history tree.
//!
//! Going backward from time `t`, a history with `n` branchings has
//! `ℓ = (m-1)n + 1` lines, and it branches at rate `ℓ` in the infinite
//! population limit, at rate `λ_{N,n} ≤ ℓ` among `N` agents, and at most at
//! rate `m(n+1)`. All three are pure-birth processes started at 0; rates are
//! per unit meeting intensity.

use crate::error::{Error, Result};
use crate::wildsum::tree_density;

/// Tail mass below which a truncated birth law is accepted.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BirthFamily {
    /// Rates `(m-1)n + 1`.
    Limit,
    /// Rates `λ_{N,n}` for a population of the given size.
    FiniteN(usize),
    /// Rates `m(n+1)`.
    Dominating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirthLaw {
    pub m: usize,
    pub t: f64,
    pub family: BirthFamily,
    /// `probs[n]` for `n = 0..=n_max`.
    pub probs: Vec<f64>,
    /// Mass beyond `n_max`.
    pub tail: f64,
}

impl BirthLaw {
    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Fails when more than `tol` of the mass lies beyond `n_max`.
    pub fn check_tail(&self, tol: f64) -> Result<()> {
        if self.tail > tol {
            return Err(Error::ResourceCap(format!(
                "birth law mass beyond n = {} is {:.3e} > {tol:e}",
                self.n_max(),
                self.tail
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

fn check_m_t(m: usize, t: f64) -> Result<()> {
    if m < 2 {
        return Err(Error::param(format!("arity must be at least 2, got {m}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

fn lines(m: usize, n: usize) -> usize {
    (m - 1) * n + 1
}

/// `#_m(n)/((m-1)^n n!) e^{-t} (1 - e^{-(m-1)t})^n`.
pub fn pn_closed_form(m: usize, t: f64, n: usize) -> f64 {
    let x = -(-((m - 1) as f64) * t).exp_m1();
    tree_density(m, n) * (-t).exp() * x.powf(n as f64)
}

/// `e^{-mt} (1 - e^{-mt})^n`.
pub fn geometric_bound(m: usize, t: f64, n: usize) -> f64 {
    let q = -(-(m as f64) * t).exp_m1();
    (-(m as f64) * t).exp() * q.powi(n as i32)
}

/// Smallest `n` whose geometric tail beyond `n` is below `tol`. The
/// dominating law is stochastically larger than both other families, so the
/// index bounds their tails as well.
pub fn truncation_index(m: usize, t: f64, tol: f64) -> usize {
    let q = -(-(m as f64) * t).exp_m1();
    if q <= 0.0 {
        return 0;
    }
    // tail beyond n is q^{n+1}
    let n = (tol.ln() / q.ln()).ceil() - 1.0;
    n.max(0.0) as usize
}

/// `ℓ C(N-ℓ, m-1) / C(N-1, m-1)` with `ℓ = (m-1)n + 1`.
pub fn lambda_nn(m: usize, big_n: usize, n: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::param(format!("arity must be at least 2, got {m}")));
    }
    if big_n < m {
        return Err(Error::param(format!("population {big_n} smaller than arity {m}")));
    }
    let l = lines(m, n);
    if l > big_n {
        return Err(Error::param(format!(
            "population {big_n} too small for {n} branchings ({l} lines)"
        )));
    }
    let ratio = (0..m - 1).fold(1.0, |acc, j| {
        let num = big_n as f64 - l as f64 - j as f64;
        acc * num.max(0.0) / (big_n - 1 - j) as f64
    });
    Ok(l as f64 * ratio)
}

/// RK4 on the truncated birth system with an absorbing overflow state.
fn integrate(rates: &[f64], t: f64, step: f64) -> Result<(Vec<f64>, f64)> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::param(format!("step must be positive, got {step}")));
    }
    let size = rates.len();
    let mut p = vec![0.0; size + 1];
    p[0] = 1.0;
    if t == 0.0 {
        p.pop();
        return Ok((p, 0.0));
    }
    let field = |v: &[f64]| -> Vec<f64> {
        let mut d = vec![0.0; size + 1];
        for n in 0..size {
            let flow = rates[n] * v[n];
            d[n] -= flow;
            d[n + 1] += flow;
        }
        d
    };
    let steps = (t / step).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    for _ in 0..steps {
        let k1 = field(&p);
        let y: Vec<f64> = p.iter().zip(&k1).map(|(a, b)| a + h / 2.0 * b).collect();
        let k2 = field(&y);
        let y: Vec<f64> = p.iter().zip(&k2).map(|(a, b)| a + h / 2.0 * b).collect();
        let k3 = field(&y);
        let y: Vec<f64> = p.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = field(&y);
        for i in 0..=size {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let tail = p.pop().unwrap_or(0.0).max(0.0);
    Ok((p, tail))
}

/// Numerical solution of the limit birth system up to `n_max`. Entries
/// `0..=n_max` do not depend on the truncation; its mass is in `tail`, see
/// [`BirthLaw::check_tail`].
pub fn pn_kolmogorov(m: usize, t: f64, n_max: usize, step: f64) -> Result<BirthLaw> {
    check_m_t(m, t)?;
    let rates: Vec<f64> = (0..=n_max).map(|n| lines(m, n) as f64).collect();
    let (probs, tail) = integrate(&rates, t, step)?;
    Ok(BirthLaw { m, t, family: BirthFamily::Limit, probs, tail })
}

/// As [`pn_kolmogorov`] with rates `λ_{N,n}`. `n_max` is lowered to the
/// largest order a population of `big_n` can realise.
pub fn pn_finite_n(m: usize, big_n: usize, t: f64, n_max: usize, step: f64) -> Result<BirthLaw> {
    check_m_t(m, t)?;
    lambda_nn(m, big_n, 0)?;
    let top = (big_n - 1) / (m - 1);
    let n_max = n_max.min(top);
    let rates = (0..=n_max).map(|n| lambda_nn(m, big_n, n)).collect::<Result<Vec<_>>>()?;
    let (probs, tail) = integrate(&rates, t, step)?;
    Ok(BirthLaw { m, t, family: BirthFamily::FiniteN(big_n), probs, tail })
}

pub fn closed_form_law(m: usize, t: f64, n_max: usize) -> Result<BirthLaw> {
    check_m_t(m, t)?;
    let probs: Vec<f64> = (0..=n_max).map(|n| pn_closed_form(m, t, n)).collect();
    let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(BirthLaw { m, t, family: BirthFamily::Limit, probs, tail })
}

pub fn geometric_law(m: usize, t: f64, n_max: usize) -> Result<BirthLaw> {
    check_m_t(m, t)?;
    let probs: Vec<f64> = (0..=n_max).map(|n| geometric_bound(m, t, n)).collect();
    let tail = -(-(m as f64) * t).exp_m1();
    Ok(BirthLaw { m, t, family: BirthFamily::Dominating, probs, tail: tail.powi(n_max as i32 + 1) })
}

/// Upper bound on the mean number of meetings dropped as cycle-creating when
/// a tagged history over `[0, t]` is reduced to a tree.
///
/// While the backward history has `ℓ` lines a meeting touches at least two of
/// them at rate at most `(N/m) C(ℓ,2) C(N-2,m-2) / C(N,m) = (m-1) C(ℓ,2)/(N-1)`,
/// and `ℓ` only grows going backward, so the mean is at most
/// `t (m-1)/(N-1) Σ_n C(ℓ_n, 2) p_{N,n}(t)`.
pub fn redundancy_bound(m: usize, big_n: usize, t: f64) -> Result<f64> {
    check_m_t(m, t)?;
    let n_max = truncation_index(m, t, TAIL_TOL);
    let law = pn_finite_n(m, big_n, t, n_max, birth_step(t))?;
    let pairs: f64 = law
        .probs
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let l = lines(m, n) as f64;
            l * (l - 1.0) / 2.0 * p
        })
        .sum();
    Ok(t * (m - 1) as f64 / (big_n - 1) as f64 * pairs)
}

/// Step used where callers do not pick one.
pub fn birth_step(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (t / 2000.0).min(1e-3)
    }
}
