//! Fixed-step Runge-Kutta integration of the one-component evolution
//! `dμ/dt = λ(μ^{∘m} − μ) + Σ_i γ_i(μQ_i − μ)`.

use crate::error::{Error, Result};
use crate::statespace::{l1, same_space, MAryKernel, Measure, UnaryKernel};

/// Drift with a re-projection onto the simplex is triggered above this.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Generator {
    pub kernel: MAryKernel,
    pub unary_terms: Vec<(f64, UnaryKernel)>,
    pub lambda: f64,
}

impl Generator {
    pub fn new(kernel: MAryKernel, lambda: f64, unary_terms: Vec<(f64, UnaryKernel)>) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::param(format!("lambda must be non-negative, got {lambda}")));
        }
        if unary_terms.iter().any(|(r, _)| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::param("unary rates must be non-negative"));
        }
        if lambda == 0.0 && unary_terms.iter().all(|(r, _)| *r == 0.0) {
            return Err(Error::param("generator needs lambda > 0 or a positive unary rate"));
        }
        for (_, q) in &unary_terms {
            if !same_space(q.space(), kernel.space()) {
                return Err(Error::SpaceMismatch);
            }
        }
        Ok(Generator { kernel, unary_terms, lambda })
    }

    /// Meeting dynamics only.
    pub fn interaction(kernel: MAryKernel, lambda: f64) -> Result<Self> {
        Generator::new(kernel, lambda, Vec::new())
    }

    /// Vector field at `v`; sums to zero whenever `v` has unit mass.
    pub fn drift(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        if self.lambda > 0.0 {
            let met = self.kernel.marginal().apply_diag(v);
            for ((o, a), b) in out.iter_mut().zip(&met).zip(v) {
                *o += self.lambda * (a - b);
            }
        }
        for (rate, q) in &self.unary_terms {
            if *rate > 0.0 {
                let moved = q.apply_raw(v);
                for ((o, a), b) in out.iter_mut().zip(&moved).zip(v) {
                    *o += rate * (a - b);
                }
            }
        }
        out
    }
}

fn rk4_step(gen: &Generator, v: &[f64], h: f64) -> Vec<f64> {
    let shift = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        base.iter().zip(k).map(|(b, d)| b + s * d).collect()
    };
    let k1 = gen.drift(v);
    let k2 = gen.drift(&shift(v, &k1, h / 2.0));
    let k3 = gen.drift(&shift(v, &k2, h / 2.0));
    let k4 = gen.drift(&shift(v, &k3, h));
    v.iter()
        .enumerate()
        .map(|(i, x)| x + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn project(v: &mut [f64]) {
    let mass: f64 = v.iter().sum();
    if (1.0 - mass).abs() > SIMPLEX_TOL || v.iter().any(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
        let mass: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= mass);
    }
}

/// Integrates from `mu0` to time `t`. The step is shrunk to `t / ceil(t/step)`
/// so the last step lands on `t`.
pub fn ode_solve(gen: &Generator, mu0: &Measure, t: f64, step: f64) -> Result<Measure> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::param(format!("step must be positive, got {step}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(format!("time must be non-negative, got {t}")));
    }
    if t > 0.0 && step > t {
        return Err(Error::param(format!("step {step} exceeds horizon {t}")));
    }
    mu0.check_space(gen.kernel.space())?;
    let mut v = mu0.weights().to_vec();
    if t > 0.0 {
        let n = (t / step).ceil() as usize;
        let h = t / n as f64;
        for _ in 0..n {
            v = rk4_step(gen, &v, h);
            project(&mut v);
        }
    }
    Measure::new(gen.kernel.space().clone(), v)
}

/// Laws at each of the increasing times in `times`, integrated in one pass.
pub fn ode_trajectory(gen: &Generator, mu0: &Measure, times: &[f64], step: f64) -> Result<Vec<Measure>> {
    let mut out = Vec::with_capacity(times.len());
    let mut cur = mu0.clone();
    let mut now = 0.0;
    for &t in times {
        if t < now {
            return Err(Error::param("times must be increasing"));
        }
        let span = t - now;
        cur = ode_solve(gen, &cur, span, step.min(span.max(f64::MIN_POSITIVE)))?;
        now = t;
        out.push(cur.clone());
    }
    Ok(out)
}

/// L1 norm of the central difference of `law` at `t` minus the generator
/// applied to `law(t)`.
pub fn residual<F>(gen: &Generator, law: F, t: f64, dt: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Measure>,
{
    if !(dt > 0.0) {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if t - dt < 0.0 {
        return Err(Error::param(format!("t - dt = {} is negative", t - dt)));
    }
    let ahead = law(t + dt)?;
    let behind = law(t - dt)?;
    let here = law(t)?;
    let fd: Vec<f64> = ahead
        .weights()
        .iter()
        .zip(behind.weights())
        .map(|(a, b)| (a - b) / (2.0 * dt))
        .collect();
    Ok(l1(&fd, &gen.drift(here.weights())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_dgp, build_percolation, DgpModel, PercolationModel};

    #[test]
    fn time_zero_and_identity() {
        let dgp = build_dgp(1.0, 0.0, 0.0);
        let mu = Measure::new(dgp.space.clone(), vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let gen = Generator::interaction(dgp.q2.clone(), 1.0).unwrap();
        assert_eq!(ode_solve(&gen, &mu, 0.0, 1e-3).unwrap(), mu);
        let id = Generator::interaction(MAryKernel::identity(dgp.space.clone(), 2).unwrap(), 1.0)
            .unwrap();
        assert_eq!(ode_solve(&id, &mu, 2.0, 1e-2).unwrap(), mu);
    }

    #[test]
    fn rejects_bad_steps() {
        let dgp = build_dgp(1.0, 0.0, 0.0);
        let mu = Measure::uniform(dgp.space.clone());
        let gen = Generator::interaction(dgp.q2.clone(), 1.0).unwrap();
        assert!(ode_solve(&gen, &mu, 1.0, 0.0).is_err());
        assert!(ode_solve(&gen, &mu, 1.0, 2.0).is_err());
        assert!(ode_solve(&gen, &mu, -1.0, 0.1).is_err());
        assert!(Generator::interaction(dgp.q2.clone(), 0.0).is_err());
        assert!(Generator::new(dgp.q2.clone(), 1.0, vec![(-1.0, dgp.q_flip.clone())]).is_err());
    }

    #[test]
    fn unary_only_flip_has_closed_form() {
        let dgp = build_dgp(0.0, 1.0, 0.0);
        let gen = Generator::new(dgp.q2.clone(), 0.0, vec![(1.0, dgp.q_flip.clone())]).unwrap();
        let ln = Measure::point(dgp.space.clone(), 0).unwrap();
        let out = ode_solve(&gen, &ln, 1.0, 1e-3).unwrap();
        let stay = (1.0 + (-2f64).exp()) / 2.0;
        assert!((out.weights()[0] - stay).abs() < 1e-12);
    }

    #[test]
    fn step_halving_is_fourth_order() {
        let dgp = build_dgp(1.0, 0.0, 0.0);
        let mu = Measure::new(dgp.space.clone(), vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let gen = Generator::new(dgp.q2.clone(), 1.0, vec![(0.3, dgp.q_flip.clone())]).unwrap();
        let fine = ode_solve(&gen, &mu, 1.0, 1e-3).unwrap();
        let err = |h: f64| ode_solve(&gen, &mu, 1.0, h).unwrap().l1_distance(&fine).unwrap();
        let ratio = err(0.1) / err(0.05);
        assert!((10.0..=22.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn trading_conserves_ownership() {
        let dgp = build_dgp(1.0, 0.0, 0.0);
        let mu = Measure::new(dgp.space.clone(), vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let gen = Generator::interaction(dgp.q2.clone(), 1.0).unwrap();
        let own = DgpModel::ownership(&mu);
        let path = ode_trajectory(&gen, &mu, &[0.5, 1.0, 2.0, 4.0], 1e-3).unwrap();
        for law in &path {
            assert!((DgpModel::ownership(law) - own).abs() < 1e-10);
        }
    }

    #[test]
    fn information_grows_without_regression() {
        let mut pi = vec![0.0; 9];
        pi[1] = 1.0;
        let p = build_percolation(2, 8, &pi, 1.0, 0.0).unwrap();
        let gen = Generator::interaction(p.sum_kernel.clone(), 1.0).unwrap();
        let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1).collect();
        let path = ode_trajectory(&gen, &p.pi, &times, 1e-3).unwrap();
        let mut last = PercolationModel::mean_level(&p.pi);
        for law in &path {
            let now = PercolationModel::mean_level(law);
            assert!(now >= last - 1e-12);
            last = now;
        }
    }

    #[test]
    fn residual_controls() {
        let dgp = build_dgp(1.0, 0.0, 0.0);
        let mu = Measure::new(dgp.space.clone(), vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let id = Generator::interaction(MAryKernel::identity(dgp.space.clone(), 2).unwrap(), 1.0)
            .unwrap();
        assert_eq!(residual(&id, |_| Ok(mu.clone()), 1.0, 1e-4).unwrap(), 0.0);
        let gen = Generator::interaction(dgp.q2.clone(), 1.0).unwrap();
        let frozen = residual(&gen, |_| Ok(mu.clone()), 1.0, 1e-4).unwrap();
        assert!(frozen > 0.1);
        assert!(residual(&gen, |_| Ok(mu.clone()), 1e-5, 1e-4).is_err());
    }
}
