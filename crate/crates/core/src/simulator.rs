//! Exact event-driven simulation of N interacting agents.
//!
//! Meetings of uniformly chosen ordered m-tuples of distinct agents occur at
//! total rate `λN/m`, so each agent meets at rate `λ`; autonomous moves
//! occur at total rate `N Σγ_i` on a uniformly chosen agent. Replication `r`
//! of seed `s` draws from stream `r` of a ChaCha generator keyed by `s`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::statespace::{same_space, MAryKernel, Measure, StateSpace, UnaryKernel};
use crate::trees::{Arrangement, DecoratedTree, Node, OrderedTree};

/// Fewest tagged histories [`tree_shape_law`] accepts by default.
pub const MIN_SHAPE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SimModel {
    pub kernel: MAryKernel,
    pub lambda: f64,
    pub unary_terms: Vec<(f64, UnaryKernel)>,
}

impl SimModel {
    pub fn new(kernel: MAryKernel, lambda: f64, unary_terms: Vec<(f64, UnaryKernel)>) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::param(format!("lambda must be non-negative, got {lambda}")));
        }
        for (r, q) in &unary_terms {
            if !(*r >= 0.0) || !r.is_finite() {
                return Err(Error::param("unary rates must be non-negative"));
            }
            if !same_space(q.space(), kernel.space()) {
                return Err(Error::SpaceMismatch);
            }
        }
        Ok(SimModel { kernel, lambda, unary_terms })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        self.kernel.space()
    }

    pub fn arity(&self) -> usize {
        self.kernel.arity()
    }

    fn unary_rate(&self) -> f64 {
        self.unary_terms.iter().map(|(r, _)| r).sum()
    }
}

/// Initial condition: i.i.d. draws from a law, or explicit states.
#[derive(Debug, Clone)]
pub enum Init {
    Law(Measure),
    States(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub space: Arc<StateSpace>,
    pub states: Vec<usize>,
    pub seed: u64,
    pub replication: u64,
    pub clock: f64,
}

impl Population {
    pub fn size(&self) -> usize {
        self.states.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventKind {
    Meeting { agents: Vec<usize>, pre: Vec<usize>, post: Vec<usize> },
    Unary { agent: usize, pre: usize, post: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn meetings(&self) -> usize {
        self.events.iter().filter(|e| matches!(e.kind, EventKind::Meeting { .. })).count()
    }

    pub fn unary_moves(&self) -> usize {
        self.events.len() - self.meetings()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            let line = serde_json::to_string(e).map_err(|err| Error::Io(err.into()))?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

pub fn rng_for(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // 1 - U lies in (0, 1]
    -(1.0 - rng.gen::<f64>()).ln() / rate
}

fn pick(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>, fallback: usize) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in weights.enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    fallback
}

fn initial_states(model: &SimModel, init: &Init, agents: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let k = model.space().size();
    match init {
        Init::States(s) => {
            if s.len() != agents {
                return Err(Error::param(format!("{} initial states for {agents} agents", s.len())));
            }
            if s.iter().any(|&x| x >= k) {
                return Err(Error::param("initial state out of range"));
            }
            Ok(s.clone())
        }
        Init::Law(mu) => {
            mu.check_space(model.space())?;
            Ok((0..agents).map(|_| pick(rng, mu.weights().iter().copied(), k - 1)).collect())
        }
    }
}

/// Replication 0 of [`simulate_replication`].
pub fn simulate(model: &SimModel, init: &Init, agents: usize, t: f64, seed: u64) -> Result<(Population, EventLog)> {
    simulate_replication(model, init, agents, t, seed, 0)
}

pub fn simulate_replication(
    model: &SimModel,
    init: &Init,
    agents: usize,
    t: f64,
    seed: u64,
    replication: u64,
) -> Result<(Population, EventLog)> {
    let m = model.arity();
    if agents < m {
        return Err(Error::param(format!("population {agents} smaller than arity {m}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(format!("time must be non-negative, got {t}")));
    }
    let mut rng = rng_for(seed, replication);
    let mut states = initial_states(model, init, agents, &mut rng)?;
    let meet_rate = model.lambda * agents as f64 / m as f64;
    let unary_each = model.unary_rate();
    let unary_rate = unary_each * agents as f64;
    let total = meet_rate + unary_rate;
    let mut log = EventLog::default();
    let mut clock = 0.0;
    if total > 0.0 {
        loop {
            clock += exp_sample(&mut rng, total);
            if clock > t {
                break;
            }
            if rng.gen::<f64>() * total < meet_rate {
                let chosen = index::sample(&mut rng, agents, m).into_vec();
                let pre: Vec<usize> = chosen.iter().map(|&a| states[a]).collect();
                let post = match model.kernel.entries().get(&pre) {
                    Some(row) => {
                        let i = pick(&mut rng, row.iter().map(|(_, p)| *p), row.len() - 1);
                        row[i].0.clone()
                    }
                    None => pre.clone(),
                };
                for (&a, &s) in chosen.iter().zip(&post) {
                    states[a] = s;
                }
                log.events.push(Event { time: clock, kind: EventKind::Meeting { agents: chosen, pre, post } });
            } else {
                let agent = rng.gen_range(0..agents);
                let term = pick(
                    &mut rng,
                    model.unary_terms.iter().map(|(r, _)| r / unary_each),
                    model.unary_terms.len() - 1,
                );
                let q = &model.unary_terms[term].1;
                let pre = states[agent];
                let post = pick(&mut rng, q.row(pre).iter().copied(), pre);
                states[agent] = post;
                log.events.push(Event { time: clock, kind: EventKind::Unary { agent, pre, post } });
            }
        }
    }
    let pop = Population { space: model.space().clone(), states, seed, replication, clock: t };
    Ok((pop, log))
}

/// State frequencies of the population.
pub fn empirical_law(pop: &Population) -> Measure {
    let k = pop.space.size();
    let mut w = vec![0.0; k];
    for &s in &pop.states {
        w[s] += 1.0;
    }
    let n = pop.states.len() as f64;
    w.iter_mut().for_each(|x| *x /= n);
    Measure::normalized(pop.space.clone(), w).expect("frequencies form a law")
}

/// Backward history of one agent, reduced to a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryGraph {
    pub tagged: usize,
    /// Internal nodes are labelled in backward order, so labels increase
    /// away from the root.
    pub tree: OrderedTree,
    /// Unary moves on each branch, root edge first, branches in pre-order.
    pub arrangement: Arrangement,
    /// Indices into the log of the meetings kept as tree nodes.
    pub kept: Vec<usize>,
    /// Meetings touching two or more lines of the history; dropped.
    pub cycle_count: usize,
}

impl HistoryGraph {
    pub fn decorated(&self) -> DecoratedTree {
        DecoratedTree::new(self.tree.clone(), self.arrangement.clone()).expect("boxes match branches")
    }
}

struct Slot {
    children: Vec<usize>,
    label: u32,
    unary: usize,
}

/// Walks the log backward from time `t`, following every line met so far.
/// A meeting touching exactly one line becomes a node whose first child is
/// that line and whose other children follow the meeting's tuple order; a
/// meeting touching several lines would close a cycle and is dropped.
pub fn tagged_history(log: &EventLog, arity: usize, agent: usize, t: f64) -> HistoryGraph {
    let mut slots = vec![Slot { children: Vec::new(), label: 0, unary: 0 }];
    let mut active: HashMap<usize, usize> = HashMap::from([(agent, 0)]);
    let mut kept = Vec::new();
    let mut cycles = 0;
    for (idx, e) in log.events.iter().enumerate().rev() {
        if e.time > t {
            continue;
        }
        match &e.kind {
            EventKind::Unary { agent: a, .. } => {
                if let Some(&s) = active.get(a) {
                    slots[s].unary += 1;
                }
            }
            EventKind::Meeting { agents, .. } => {
                let touched: Vec<usize> =
                    agents.iter().copied().filter(|a| active.contains_key(a)).collect();
                match touched.len() {
                    0 => {}
                    1 => {
                        let line = touched[0];
                        let parent = active[&line];
                        kept.push(idx);
                        let label = kept.len() as u32;
                        let order = std::iter::once(line).chain(agents.iter().copied().filter(|&a| a != line));
                        let mut children = Vec::with_capacity(arity);
                        for a in order {
                            slots.push(Slot { children: Vec::new(), label: 0, unary: 0 });
                            let s = slots.len() - 1;
                            children.push(s);
                            active.insert(a, s);
                        }
                        slots[parent].children = children;
                        slots[parent].label = label;
                    }
                    _ => cycles += 1,
                }
            }
        }
    }
    let mut counts = Vec::with_capacity(slots.len());
    let root = build_node(&slots, 0, &mut counts);
    let tree = OrderedTree::from_root(arity, root).expect("backward labels increase away from the root");
    let arrangement = Arrangement::new(counts).expect("non-empty arrangement");
    HistoryGraph { tagged: agent, tree, arrangement, kept, cycle_count: cycles }
}

fn build_node(slots: &[Slot], s: usize, counts: &mut Vec<usize>) -> Node {
    counts.push(slots[s].unary);
    if slots[s].children.is_empty() {
        return Node::Leaf;
    }
    let children = slots[s].children.iter().map(|&c| build_node(slots, c, counts)).collect();
    Node::Internal { label: slots[s].label, children }
}

/// Empirical joint law of branching count and plane shape.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShapeLaw {
    pub samples: usize,
    pub by_order: BTreeMap<usize, usize>,
    pub by_shape: BTreeMap<usize, BTreeMap<String, usize>>,
}

impl ShapeLaw {
    pub fn order_frequency(&self, n: usize) -> f64 {
        *self.by_order.get(&n).unwrap_or(&0) as f64 / self.samples as f64
    }

    /// Pearson statistic and p-value of the order counts against `expected`
    /// over `0..=n_top`, with everything above `n_top` pooled into one cell.
    pub fn chi_square(&self, expected: impl Fn(usize) -> f64, n_top: usize) -> (f64, f64) {
        let total = self.samples as f64;
        let mut stat = 0.0;
        let mut rest_obs = self.samples as f64;
        let mut rest_exp = 1.0;
        for n in 0..=n_top {
            let e = expected(n);
            let o = *self.by_order.get(&n).unwrap_or(&0) as f64;
            stat += (o - total * e).powi(2) / (total * e);
            rest_obs -= o;
            rest_exp -= e;
        }
        let mut dof = n_top as f64;
        if rest_exp * total > 1e-9 {
            stat += (rest_obs - total * rest_exp).powi(2) / (total * rest_exp);
            dof += 1.0;
        }
        let p = 1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat);
        (stat, p)
    }
}

pub fn tree_shape_law(histories: &[HistoryGraph], min_samples: usize) -> Result<ShapeLaw> {
    if histories.len() < min_samples {
        return Err(Error::InsufficientSamples { have: histories.len(), need: min_samples });
    }
    let mut law = ShapeLaw { samples: histories.len(), ..ShapeLaw::default() };
    for h in histories {
        let n = h.tree.internal_count();
        *law.by_order.entry(n).or_default() += 1;
        *law.by_shape.entry(n).or_default().entry(h.tree.shape()).or_default() += 1;
    }
    Ok(law)
}

/// Runs `reps` independent replications in parallel and maps each one; the
/// output is in replication order.
pub fn replicate<T, F>(
    model: &SimModel,
    init: &Init,
    agents: usize,
    t: f64,
    seed: u64,
    reps: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Population, &EventLog) -> T + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|r| simulate_replication(model, init, agents, t, seed, r).map(|(p, l)| f(&p, &l)))
        .collect()
}

/// Estimate of the one-agent law at time `t`.
#[derive(Debug, Clone)]
pub struct TaggedEstimate {
    /// Average over replications of the whole population's frequencies.
    /// Agents are exchangeable, so this estimates the law of any one agent
    /// with far less noise than following a single one.
    pub law: Measure,
    /// Frequencies of agent 0 alone.
    pub tagged_only: Measure,
    /// Largest per-state 95% half-width of `law`.
    pub half_width: f64,
    pub replications: usize,
}

pub fn tagged_law(model: &SimModel, init: &Measure, agents: usize, t: f64, seed: u64, reps: usize) -> Result<TaggedEstimate> {
    if reps < 2 {
        return Err(Error::InsufficientSamples { have: reps, need: 2 });
    }
    let k = model.space().size();
    let runs = replicate(model, &Init::Law(init.clone()), agents, t, seed, reps, |pop, _| {
        (empirical_law(pop).weights().to_vec(), pop.states[0])
    })?;
    let r = reps as f64;
    let mut mean = vec![0.0; k];
    let mut sq = vec![0.0; k];
    let mut tagged = vec![0.0; k];
    for (w, s0) in &runs {
        for i in 0..k {
            mean[i] += w[i] / r;
            sq[i] += w[i] * w[i] / r;
        }
        tagged[*s0] += 1.0 / r;
    }
    let half_width = (0..k)
        .map(|i| 1.96 * ((sq[i] - mean[i] * mean[i]).max(0.0) / (r - 1.0)).sqrt())
        .fold(0.0, f64::max);
    Ok(TaggedEstimate {
        law: Measure::normalized(model.space().clone(), mean)?,
        tagged_only: Measure::normalized(model.space().clone(), tagged)?,
        half_width,
        replications: reps,
    })
}

/// Tagged histories of agents `0..tags` in each of `reps` replications.
pub fn tagged_histories(
    model: &SimModel,
    init: &Init,
    agents: usize,
    t: f64,
    seed: u64,
    reps: usize,
    tags: usize,
) -> Result<Vec<HistoryGraph>> {
    if tags > agents {
        return Err(Error::param(format!("{tags} tagged agents among {agents}")));
    }
    let m = model.arity();
    let per_run = replicate(model, init, agents, t, seed, reps, |_, log| {
        (0..tags).map(|a| tagged_history(log, m, a, t)).collect::<Vec<_>>()
    })?;
    Ok(per_run.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_dgp;

    fn dgp_model(lambda: f64, gu: f64, gd: f64) -> SimModel {
        let d = build_dgp(lambda, gu, gd);
        SimModel::new(d.q2, lambda, vec![(gu, d.q_up), (gd, d.q_down)]).unwrap()
    }

    #[test]
    fn no_rates_no_events() {
        let model = dgp_model(0.0, 0.0, 0.0);
        let init = Init::States(vec![0, 1, 2, 3]);
        let (pop, log) = simulate(&model, &init, 4, 5.0, 1).unwrap();
        assert_eq!(pop.states, vec![0, 1, 2, 3]);
        assert!(log.events.is_empty());
    }

    #[test]
    fn identity_kernel_logs_meetings_only() {
        let d = build_dgp(1.0, 0.0, 0.0);
        let model = SimModel::new(MAryKernel::identity(d.space.clone(), 2).unwrap(), 1.0, vec![]).unwrap();
        let states = vec![0, 1, 2, 3, 0, 1, 2, 3];
        let (pop, log) = simulate(&model, &Init::States(states.clone()), 8, 3.0, 9).unwrap();
        assert_eq!(pop.states, states);
        assert!(log.meetings() > 0);
        assert!(log.events.iter().all(|e| match &e.kind {
            EventKind::Meeting { pre, post, .. } => pre == post,
            _ => false,
        }));
    }

    #[test]
    fn deterministic_given_seed() {
        let model = dgp_model(1.0, 0.2, 0.05);
        let mu = Measure::uniform(model.space().clone());
        let a = simulate(&model, &Init::Law(mu.clone()), 50, 2.0, 42).unwrap();
        let b = simulate(&model, &Init::Law(mu.clone()), 50, 2.0, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_replication(&model, &Init::Law(mu), 50, 2.0, 42, 1).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn log_is_well_formed() {
        let model = dgp_model(1.0, 0.2, 0.05);
        let mu = Measure::uniform(model.space().clone());
        let (_, log) = simulate(&model, &Init::Law(mu), 30, 3.0, 5).unwrap();
        assert!(log.events.windows(2).all(|w| w[0].time < w[1].time));
        for e in &log.events {
            if let EventKind::Meeting { agents, .. } = &e.kind {
                assert_ne!(agents[0], agents[1]);
            }
        }
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), log.events.len());
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert!(first["kind"] == "meeting" || first["kind"] == "unary");
    }

    #[test]
    fn population_too_small() {
        let model = dgp_model(1.0, 0.0, 0.0);
        assert!(simulate(&model, &Init::States(vec![0]), 1, 1.0, 0).is_err());
    }

    #[test]
    fn empirical_law_examples() {
        let d = build_dgp(1.0, 0.0, 0.0);
        let pop = |states: Vec<usize>| Population {
            space: d.space.clone(),
            states,
            seed: 0,
            replication: 0,
            clock: 0.0,
        };
        assert_eq!(empirical_law(&pop(vec![2, 2, 2])).weights(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(empirical_law(&pop(vec![0, 1])).weights(), &[0.5, 0.5, 0.0, 0.0]);
    }

    fn meeting(time: f64, agents: Vec<usize>) -> Event {
        let pre = vec![0; agents.len()];
        Event { time, kind: EventKind::Meeting { agents, pre: pre.clone(), post: pre } }
    }

    #[test]
    fn history_without_meetings() {
        let h = tagged_history(&EventLog::default(), 2, 0, 1.0);
        assert_eq!(h.tree.internal_count(), 0);
        assert_eq!(h.cycle_count, 0);
    }

    #[test]
    fn repeated_pair_keeps_the_later_meeting() {
        let log = EventLog { events: vec![meeting(0.2, vec![1, 0]), meeting(0.7, vec![0, 1])] };
        let h = tagged_history(&log, 2, 0, 1.0);
        assert_eq!(h.cycle_count, 1);
        assert_eq!(h.kept, vec![1]);
        assert_eq!(h.tree.internal_count(), 1);
    }

    #[test]
    fn history_shape_and_decorations() {
        // 0 meets 1 at 0.8; earlier 1 meets 2 at 0.5 and 2 moves at 0.3
        let log = EventLog {
            events: vec![
                Event { time: 0.3, kind: EventKind::Unary { agent: 2, pre: 0, post: 0 } },
                meeting(0.5, vec![2, 1]),
                meeting(0.8, vec![0, 1]),
                Event { time: 0.9, kind: EventKind::Unary { agent: 0, pre: 0, post: 0 } },
                meeting(0.95, vec![3, 4]),
            ],
        };
        let h = tagged_history(&log, 2, 0, 1.0);
        assert_eq!(h.tree.labeled(), "(1:L(2:LL))");
        // root, agent 0 below, agent 1 edge, agent 1 below, agent 2 below
        assert_eq!(h.arrangement.counts(), &[1, 0, 0, 0, 1]);
        assert_eq!(h.cycle_count, 0);
        // a horizon before the last meetings sees only the first one
        let early = tagged_history(&log, 2, 1, 0.6);
        assert_eq!(early.tree.labeled(), "(1:LL)");
        assert_eq!(early.arrangement.counts(), &[0, 0, 1]);
    }

    #[test]
    fn shape_law_needs_samples() {
        let h = tagged_history(&EventLog::default(), 2, 0, 1.0);
        assert!(matches!(tree_shape_law(&[h.clone()], 2), Err(Error::InsufficientSamples { .. })));
        let law = tree_shape_law(&[h.clone(), h], 2).unwrap();
        assert_eq!(law.order_frequency(0), 1.0);
    }
}
