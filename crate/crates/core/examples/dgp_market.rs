//! Asset ownership in an over-the-counter market: series, integrator and
//! simulation side by side over a time grid.

use wildkac::models::{build_dgp, DgpModel, DGP_STATES};
use wildkac::ode::{ode_trajectory, Generator};
use wildkac::simulator::{tagged_law, SimModel};
use wildkac::statespace::Measure;
use wildkac::wildsum::{wild_sum_up_down, SeriesParams};

fn main() -> wildkac::Result<()> {
    let (gu, gd) = (0.2, 0.05);
    let dgp = build_dgp(1.0, gu, gd);
    // most high-valuation agents start without the asset
    let mu0 = Measure::new(dgp.space.clone(), vec![0.3, 0.2, 0.4, 0.1])?;
    let unary = vec![(gu, dgp.q_up.clone()), (gd, dgp.q_down.clone())];
    let gen = Generator::new(dgp.q2.clone(), 1.0, unary.clone())?;
    let sim = SimModel::new(dgp.q2.clone(), 1.0, unary)?;

    let times = [0.5, 1.0, 2.0, 4.0];
    let ode = ode_trajectory(&gen, &mu0, &times, 1e-3)?;
    println!("{:>5} {:>28} {:>10} {:>10} {:>10}", "t", DGP_STATES.join("  "), "owned", "|ode|", "|sim|");
    for (t, ode_law) in times.iter().zip(&ode) {
        let params = SeriesParams::new(1.0, *t, 1e-10).with_rates(gu, gd);
        let law = wild_sum_up_down(&dgp.q2, &dgp.q_up, &dgp.q_down, &mu0, &params)?.law;
        let mc = tagged_law(&sim, &mu0, 500, *t, 42, 200)?;
        let w: Vec<String> = law.weights().iter().map(|x| format!("{x:.4}")).collect();
        println!(
            "{t:>5} {:>28} {:>10.4} {:>10.1e} {:>10.1e}",
            w.join(" "),
            DgpModel::ownership(&law),
            law.l1_distance(ode_law)?,
            law.l1_distance(&mc.law)?
        );
    }
    Ok(())
}
