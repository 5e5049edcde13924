//! Statistical checks of the agent simulator. Seeds are fixed, thresholds are
//! loose enough that a correct simulator fails with negligible probability.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use wildkac::models::build_dgp;
use wildkac::purebirth::{pn_finite_n, truncation_index, TAIL_TOL};
use wildkac::simulator::{
    empirical_law, replicate, simulate, tagged_histories, tree_shape_law, EventKind, Init, SimModel,
};
use wildkac::statespace::{MAryKernel, Measure, StateSpace};

fn pearson(observed: &[f64], expected: f64) -> f64 {
    let stat: f64 = observed.iter().map(|o| (o - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new(observed.len() as f64 - 1.0).unwrap().cdf(stat)
}

fn identity_model(m: usize, k: usize) -> SimModel {
    let space = StateSpace::new((0..k).map(|i| i.to_string())).unwrap();
    SimModel::new(MAryKernel::identity(space, m).unwrap(), 1.0, vec![]).unwrap()
}

#[test]
fn pairs_meet_uniformly() {
    let model = identity_model(2, 2);
    let init = Init::States(vec![0; 10]);
    let (_, log) = simulate(&model, &init, 10, 20_000.0, 3).unwrap();
    let mut counts = vec![0.0; 100];
    for e in &log.events {
        if let EventKind::Meeting { agents, .. } = &e.kind {
            assert_ne!(agents[0], agents[1]);
            let (a, b) = (agents[0].min(agents[1]), agents[0].max(agents[1]));
            counts[a * 10 + b] += 1.0;
        }
    }
    let pairs: Vec<f64> = (0..10).flat_map(|a| ((a + 1)..10).map(move |b| (a, b))).map(|(a, b)| counts[a * 10 + b]).collect();
    assert_eq!(pairs.len(), 45);
    let total: f64 = pairs.iter().sum();
    let p = pearson(&pairs, total / 45.0);
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn tuple_order_is_uniform() {
    let model = identity_model(3, 2);
    let init = Init::States(vec![0; 3]);
    let (_, log) = simulate(&model, &init, 3, 30_000.0, 5).unwrap();
    let mut counts = [0.0; 6];
    for e in &log.events {
        if let EventKind::Meeting { agents, .. } = &e.kind {
            let idx = match agents.as_slice() {
                [0, 1, 2] => 0,
                [0, 2, 1] => 1,
                [1, 0, 2] => 2,
                [1, 2, 0] => 3,
                [2, 0, 1] => 4,
                [2, 1, 0] => 5,
                other => panic!("not a permutation: {other:?}"),
            };
            counts[idx] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    assert!(pearson(&counts, total / 6.0) > 1e-3);
}

#[test]
fn event_counts_match_rates() {
    let dgp = build_dgp(1.0, 0.2, 0.05);
    let model = SimModel::new(dgp.q2, 1.0, vec![(0.2, dgp.q_up), (0.05, dgp.q_down)]).unwrap();
    let init = Init::Law(Measure::uniform(dgp.space.clone()));
    let (agents, t, reps) = (1000, 1.0, 200);
    let counts = replicate(&model, &init, agents, t, 11, reps, |_, log| (log.meetings(), log.unary_moves())).unwrap();
    let meetings: usize = counts.iter().map(|c| c.0).sum();
    let moves: usize = counts.iter().map(|c| c.1).sum();
    // Poisson totals: mean equals variance
    let want_meet = reps as f64 * agents as f64 / 2.0 * t;
    let want_move = reps as f64 * agents as f64 * 0.25 * t;
    assert!((meetings as f64 - want_meet).abs() < 5.0 * want_meet.sqrt(), "{meetings} vs {want_meet}");
    assert!((moves as f64 - want_move).abs() < 5.0 * want_move.sqrt(), "{moves} vs {want_move}");
}

#[test]
fn initial_draws_follow_the_law() {
    let dgp = build_dgp(1.0, 0.0, 0.0);
    let law = Measure::new(dgp.space.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let model = SimModel::new(dgp.q2, 1.0, vec![]).unwrap();
    let (pop, log) = simulate(&model, &Init::Law(law.clone()), 100_000, 0.0, 17).unwrap();
    assert!(log.events.is_empty());
    assert!(empirical_law(&pop).l1_distance(&law).unwrap() < 0.01);
}

#[test]
fn branching_counts_follow_the_finite_population_law() {
    let model = identity_model(3, 2);
    let init = Init::States(vec![0; 1000]);
    let hs = tagged_histories(&model, &init, 1000, 1.0, 23, 2000, 5).unwrap();
    let law = tree_shape_law(&hs, 10_000).unwrap();
    let birth = pn_finite_n(3, 1000, 1.0, truncation_index(3, 1.0, TAIL_TOL), 1e-3).unwrap();
    let (_, p) = law.chi_square(|n| birth.get(n), 6);
    assert!(p > 1e-3, "p = {p}");
}
