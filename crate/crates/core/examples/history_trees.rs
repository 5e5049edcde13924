//! Reconstruct the interaction history of a tagged agent from a simulated
//! event log and compare tree shapes with the uniform law.

use wildkac::models::build_dgp;
use wildkac::purebirth::closed_form_law;
use wildkac::simulator::{simulate, tagged_histories, tagged_history, tree_shape_law, Init, SimModel};
use wildkac::statespace::Measure;

fn main() -> wildkac::Result<()> {
    let dgp = build_dgp(1.0, 0.2, 0.05);
    let model = SimModel::new(dgp.q2, 1.0, vec![(0.2, dgp.q_up), (0.05, dgp.q_down)])?;
    let init = Init::Law(Measure::uniform(dgp.space.clone()));

    let (_, log) = simulate(&model, &init, 50, 1.0, 7)?;
    let h = tagged_history(&log, 2, 0, 1.0);
    println!("agent 0 at t=1: tree {}, moves per branch {:?}, cycles {}", h.tree.labeled(), h.arrangement.counts(), h.cycle_count);

    let hs = tagged_histories(&model, &init, 2000, 1.0, 7, 2000, 5)?;
    let law = tree_shape_law(&hs, 10_000)?;
    let limit = closed_form_law(2, 1.0, 6)?;
    println!("\n{:>3} {:>10} {:>10}", "n", "observed", "limit");
    for n in 0..=6 {
        println!("{n:>3} {:>10.4} {:>10.4}", law.order_frequency(n), limit.get(n));
    }
    for (n, shapes) in law.by_shape.range(2..=3) {
        println!("\nshapes with {n} meetings:");
        let total: usize = shapes.values().sum();
        for (s, c) in shapes {
            println!("  {s:<12} {:.3}", *c as f64 / total as f64);
        }
    }
    Ok(())
}
