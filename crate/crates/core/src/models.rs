//! Prebuilt models: a two-sided over-the-counter market and a truncated
//! information-sharing model.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::statespace::{decode, KernelRow, MAryKernel, Measure, StateSpace, UnaryKernel};

/// Low-liquidity owner without the asset etc.; index order of the space.
pub const DGP_STATES: [&str; 4] = ["ln", "lo", "hn", "ho"];

const LN: usize = 0;
const LO: usize = 1;
const HN: usize = 2;
const HO: usize = 3;

/// Investors are low or high liquidity (`l`/`h`) and owners or non-owners
/// (`o`/`n`) of one asset. A high-liquidity non-owner meeting a low-liquidity
/// owner buys the asset; every other pair leaves unchanged.
#[derive(Debug, Clone)]
pub struct DgpModel {
    pub space: Arc<StateSpace>,
    pub q2: MAryKernel,
    /// `l -> h`, identity on high-liquidity states.
    pub q_up: UnaryKernel,
    /// `h -> l`, identity on low-liquidity states.
    pub q_down: UnaryKernel,
    /// Liquidity switch on every state.
    pub q_flip: UnaryKernel,
    pub lambda: f64,
    pub gamma_u: f64,
    pub gamma_d: f64,
}

pub fn build_dgp(lambda: f64, gamma_u: f64, gamma_d: f64) -> DgpModel {
    let space = StateSpace::new(DGP_STATES).expect("fixed labels are valid");
    let trade: Vec<(Vec<usize>, KernelRow)> = vec![
        (vec![HN, LO], vec![(vec![HO, LN], 1.0)]),
        (vec![LO, HN], vec![(vec![LN, HO], 1.0)]),
    ];
    let q2 = MAryKernel::new(space.clone(), 2, trade).expect("trade kernel is valid");
    let flip = |i: usize| i ^ 2;
    let up = |i: usize| if i < HN { i + 2 } else { i };
    let down = |i: usize| if i >= HN { i - 2 } else { i };
    DgpModel {
        q_up: UnaryKernel::from_map(space.clone(), up).expect("valid map"),
        q_down: UnaryKernel::from_map(space.clone(), down).expect("valid map"),
        q_flip: UnaryKernel::from_map(space.clone(), flip).expect("valid map"),
        space,
        q2,
        lambda,
        gamma_u,
        gamma_d,
    }
}

impl DgpModel {
    /// Weight on the two owner states.
    pub fn ownership(mu: &Measure) -> f64 {
        mu.weights()[LO] + mu.weights()[HO]
    }
}

/// Information levels `0..=L`. At a meeting all `m` participants leave with
/// the saturated sum of their levels; independently each agent's level is
/// redrawn from `pi` at rate `gamma`.
#[derive(Debug, Clone)]
pub struct PercolationModel {
    pub space: Arc<StateSpace>,
    pub m: usize,
    pub cap: usize,
    pub sum_kernel: MAryKernel,
    pub regression: UnaryKernel,
    pub pi: Measure,
    pub lambda: f64,
    pub gamma: f64,
}

pub fn build_percolation(
    m: usize,
    cap: usize,
    pi: &[f64],
    lambda: f64,
    gamma: f64,
) -> Result<PercolationModel> {
    if m < 2 {
        return Err(Error::param(format!("arity must be at least 2, got {m}")));
    }
    if cap < 1 {
        return Err(Error::param("level cap must be at least 1"));
    }
    if !(lambda >= 0.0 && gamma >= 0.0) {
        return Err(Error::param("rates must be non-negative"));
    }
    let space = StateSpace::new((0..=cap).map(|l| l.to_string()))?;
    let pi = Measure::new(space.clone(), pi.to_vec())?;
    let k = cap + 1;
    let mut entries = Vec::new();
    for code in 0..k.pow(m as u32) {
        let x = decode(code, k, m);
        let level = x.iter().sum::<usize>().min(cap);
        let y = vec![level; m];
        if y != x {
            entries.push((x, vec![(y, 1.0)]));
        }
    }
    let sum_kernel = MAryKernel::new(space.clone(), m, entries)?;
    let regression = UnaryKernel::new(space.clone(), vec![pi.weights().to_vec(); k])?;
    Ok(PercolationModel { space, m, cap, sum_kernel, regression, pi, lambda, gamma })
}

impl PercolationModel {
    pub fn mean_level(mu: &Measure) -> f64 {
        mu.weights().iter().enumerate().map(|(l, w)| l as f64 * w).sum()
    }
}
