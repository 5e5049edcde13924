//! A Kac-style velocity model on a discrete grid: binary collisions swap
//! energy between levels, and a thermal kick moves one particle at a time.

use wildkac::ode::{ode_solve, Generator};
use wildkac::statespace::{MAryKernel, Measure, StateSpace, UnaryKernel};
use wildkac::wildsum::{wild_sum_two_kernel, SeriesParams};

fn main() -> wildkac::Result<()> {
    let k = 6;
    let space = StateSpace::new((0..k).map(|e| format!("e{e}")))?;
    // collisions conserve total energy and redistribute it uniformly
    let mut entries = Vec::new();
    for a in 0..k {
        for b in 0..k {
            let total = a + b;
            let outs: Vec<usize> = (0..=total).filter(|&x| x < k && total - x < k).collect();
            let p = 1.0 / outs.len() as f64;
            entries.push((vec![a, b], outs.iter().map(|&x| (vec![x, total - x], p)).collect()));
        }
    }
    let collide = MAryKernel::new(space.clone(), 2, entries)?;
    let kick = UnaryKernel::new(
        space.clone(),
        (0..k)
            .map(|e| {
                let mut row = vec![0.0; k];
                row[e.saturating_sub(1)] += 0.5;
                row[(e + 1).min(k - 1)] += 0.5;
                row
            })
            .collect(),
    )?;
    let mut w = vec![0.0; k];
    w[0] = 0.5;
    w[4] = 0.5;
    let mu0 = Measure::new(space.clone(), w)?;
    let gen = Generator::new(collide.clone(), 1.0, vec![(0.3, kick.clone())])?;
    for t in [0.5, 1.0, 3.0] {
        let params = SeriesParams::new(1.0, t, 1e-10).with_gamma(0.3);
        let law = wild_sum_two_kernel(&collide, &kick, &mu0, &params)?.law;
        let ode = ode_solve(&gen, &mu0, t, 1e-3)?;
        let w: Vec<String> = law.weights().iter().map(|x| format!("{x:.4}")).collect();
        println!("t={t:<4} {}  |series - ode| = {:.1e}", w.join(" "), law.l1_distance(&ode)?);
    }
    Ok(())
}
