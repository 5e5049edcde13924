//! Cross-checks of one model: series against integrator and simulator, plus
//! the model-independent identities at the model's arity.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::Result;
use crate::modelfile::ModelSpec;
use crate::ode::{ode_solve, residual};
use crate::purebirth::{lambda_nn, pn_closed_form, pn_kolmogorov};
use crate::simulator::tagged_law;
use crate::trees::{binomial, count_arrangements, count_trees, enumerate_arrangements, enumerate_trees};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, observed: f64, tolerance: f64) -> Check {
        Check { name: name.to_string(), observed, tolerance, pass: observed <= tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub t: f64,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateConfig {
    pub t: f64,
    pub eps: f64,
    pub step: f64,
    pub agents: usize,
    pub replications: usize,
    pub seed: u64,
    pub ode_tol: f64,
    pub residual_tol: f64,
    pub mc_tol: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            t: 1.0,
            eps: 1e-8,
            step: 1e-4,
            agents: 1000,
            replications: 200,
            seed: 1,
            ode_tol: 1e-6,
            residual_tol: 1e-5,
            mc_tol: 0.05,
        }
    }
}

pub fn validate_model(spec: &ModelSpec, cfg: &ValidateConfig) -> Result<Report> {
    let mut checks = Vec::new();
    let mu0 = &spec.init;
    let m = spec.arity();

    let wild = spec.series(mu0, cfg.t, cfg.eps)?;
    let ode = ode_solve(&spec.generator()?, mu0, cfg.t, cfg.step)?;
    checks.push(Check::at_most("series vs integrator (L1)", wild.law.l1_distance(&ode)?, cfg.ode_tol));

    let dt = 1e-4;
    if cfg.t >= 2.0 * dt {
        let gen = spec.generator()?;
        // a tight truncation keeps the truncation jumps well below dt^2
        let r = residual(&gen, |s| Ok(spec.series(mu0, s, 1e-12)?.law), cfg.t, dt)?;
        checks.push(Check::at_most("series residual (L1)", r, cfg.residual_tol));
    }

    if cfg.replications >= 2 {
        let est = tagged_law(&spec.sim_model()?, mu0, cfg.agents, cfg.t, cfg.seed, cfg.replications)?;
        checks.push(Check::at_most("simulator vs series (L1)", est.law.l1_distance(&wild.law)?, cfg.mc_tol));
    }

    let mut gap: f64 = 0.0;
    for &t in &[0.25, 1.0, 2.0] {
        let law = pn_kolmogorov(m, t, 30, 1e-3)?;
        for n in 0..=30 {
            gap = gap.max((law.probs[n] - pn_closed_form(m, t, n)).abs());
        }
    }
    checks.push(Check::at_most("branching law closed form vs integration", gap, 1e-8));

    let mut excess: f64 = 0.0;
    for n in 0..=(cfg.agents - 1) / (m - 1) {
        let lam = lambda_nn(m, cfg.agents, n)?;
        let l = ((m - 1) * n + 1) as f64;
        excess = excess.max(lam - l).max(l - (m * (n + 1)) as f64);
    }
    checks.push(Check::at_most("finite-population rate chain (max excess)", excess, 0.0));

    let mut mismatches = 0.0;
    for n in 0..=5 {
        let listed = enumerate_trees(m, n, 8)?.count();
        if Some(listed) != count_trees(m, n).to_usize() {
            mismatches += 1.0;
        }
        for p in 0..=4 {
            let boxes = m * n + 1;
            let listed = enumerate_arrangements(boxes, p, 1_000_000)?.count();
            let count = count_arrangements(boxes, p);
            if Some(listed) != count.to_usize() || count != binomial((m * n + p) as u64, (m * n) as u64) {
                mismatches += 1.0;
            }
        }
    }
    checks.push(Check::at_most("tree and arrangement counts (mismatches)", mismatches, 0.0));

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(Report { t: cfg.t, checks, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_dgp;

    #[test]
    fn loose_truncation_fails_the_comparison() {
        let spec = build_dgp(1.0, 0.2, 0.05).to_spec();
        let cfg = ValidateConfig { eps: 0.5, replications: 0, step: 1e-3, ..ValidateConfig::default() };
        let report = validate_model(&spec, &cfg).unwrap();
        assert!(!report.all_pass);
        assert!(!report.checks[0].pass);
    }
}
