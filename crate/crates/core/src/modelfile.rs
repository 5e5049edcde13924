//! Plain-text model files.
//!
//! One directive per line; `#` starts a comment. Labels contain no
//! whitespace or commas.
//!
//! ```text
//! states ln lo hn ho
//! arity 2
//! lambda 1
//! meet hn lo -> ho ln 1
//! meet lo hn -> ln ho 1
//! unary up 0.2
//! move up ln hn 1
//! move up lo ho 1
//! init 0.25 0.25 0.25 0.25
//! ```
//!
//! `meet` lines give one joint outcome of an m-ary meeting and its
//! probability; inputs without `meet` lines are left unchanged. `unary`
//! declares a named autonomous kernel with its rate and `move` lines fill
//! its rows; rows without `move` lines stay put. `init` is optional and
//! defaults to the uniform law. `states` and `arity` come first.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{DgpModel, PercolationModel};
use crate::ode::Generator;
use crate::simulator::SimModel;
use crate::wildsum::{wild_sum, wild_sum_two_kernel, SeriesParams, SeriesResult};
use crate::statespace::{permutations, permute, KernelRow, MAryKernel, Measure, StateSpace, UnaryKernel, PROB_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedUnary {
    pub name: String,
    pub rate: f64,
    pub kernel: UnaryKernel,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub space: Arc<StateSpace>,
    pub kernel: MAryKernel,
    pub lambda: f64,
    pub unary: Vec<NamedUnary>,
    pub init: Measure,
}

impl PartialEq for ModelSpec {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space
            && self.kernel.arity() == other.kernel.arity()
            && self.kernel.entries() == other.kernel.entries()
            && self.lambda == other.lambda
            && self.unary == other.unary
            && self.init == other.init
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn number(line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| perr(line, format!("expected a number, found `{s}`")))
}

struct UnaryDraft {
    name: String,
    rate: f64,
    rows: BTreeMap<usize, (usize, Vec<f64>)>,
}

impl ModelSpec {
    pub fn arity(&self) -> usize {
        self.kernel.arity()
    }

    pub fn total_unary_rate(&self) -> f64 {
        self.unary.iter().map(|u| u.rate).sum()
    }

    pub fn unary_terms(&self) -> Vec<(f64, UnaryKernel)> {
        self.unary.iter().map(|u| (u.rate, u.kernel.clone())).collect()
    }

    pub fn parse(text: &str) -> Result<ModelSpec> {
        let mut space: Option<Arc<StateSpace>> = None;
        let mut arity: Option<usize> = None;
        let mut lambda: Option<f64> = None;
        let mut meets: BTreeMap<Vec<usize>, (usize, KernelRow)> = BTreeMap::new();
        let mut unary: Vec<UnaryDraft> = Vec::new();
        let mut init: Option<(usize, Vec<f64>)> = None;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let words: Vec<&str> = body.split_whitespace().collect();
            let need_space = || space.clone().ok_or_else(|| perr(line, "`states` must come first"));
            let state = |sp: &StateSpace, s: &str| {
                sp.index_of(s).ok_or_else(|| perr(line, format!("unknown state `{s}`")))
            };
            match words[0] {
                "states" => {
                    if space.is_some() {
                        return Err(perr(line, "`states` given twice"));
                    }
                    let sp = StateSpace::new(words[1..].iter().copied())
                        .map_err(|e| perr(line, e.to_string()))?;
                    space = Some(sp);
                }
                "arity" => {
                    need_space()?;
                    if words.len() != 2 {
                        return Err(perr(line, "usage: arity <m>"));
                    }
                    let m: usize = words[1].parse().map_err(|_| perr(line, "arity must be an integer"))?;
                    if m < 2 {
                        return Err(perr(line, format!("arity must be at least 2, got {m}")));
                    }
                    if arity.replace(m).is_some() {
                        return Err(perr(line, "`arity` given twice"));
                    }
                }
                "lambda" => {
                    if words.len() != 2 {
                        return Err(perr(line, "usage: lambda <rate>"));
                    }
                    let v = number(line, words[1])?;
                    if v < 0.0 {
                        return Err(perr(line, "lambda must be non-negative"));
                    }
                    lambda = Some(v);
                }
                "meet" => {
                    let sp = need_space()?;
                    let m = arity.ok_or_else(|| perr(line, "`arity` must precede `meet`"))?;
                    if words.len() != 2 * m + 3 || words[m + 1] != "->" {
                        return Err(perr(line, format!("usage: meet <{m} states> -> <{m} states> <p>")));
                    }
                    let x = words[1..=m].iter().map(|s| state(&sp, s)).collect::<Result<Vec<_>>>()?;
                    let y = words[m + 2..2 * m + 2].iter().map(|s| state(&sp, s)).collect::<Result<Vec<_>>>()?;
                    let p = number(line, words[2 * m + 2])?;
                    if !(0.0..=1.0 + PROB_TOL).contains(&p) {
                        return Err(perr(line, format!("probability {p} outside [0, 1]")));
                    }
                    let entry = meets.entry(x).or_insert((line, Vec::new()));
                    if entry.1.iter().any(|(o, _)| *o == y) {
                        return Err(perr(line, "duplicate outcome"));
                    }
                    entry.1.push((y, p));
                }
                "unary" => {
                    need_space()?;
                    if words.len() != 3 {
                        return Err(perr(line, "usage: unary <name> <rate>"));
                    }
                    if unary.iter().any(|u| u.name == words[1]) {
                        return Err(perr(line, format!("unary kernel `{}` declared twice", words[1])));
                    }
                    let rate = number(line, words[2])?;
                    if rate < 0.0 {
                        return Err(perr(line, "unary rate must be non-negative"));
                    }
                    unary.push(UnaryDraft { name: words[1].to_string(), rate, rows: BTreeMap::new() });
                }
                "move" => {
                    let sp = need_space()?;
                    if words.len() != 5 {
                        return Err(perr(line, "usage: move <name> <from> <to> <p>"));
                    }
                    let k = sp.size();
                    let draft = unary
                        .iter_mut()
                        .find(|u| u.name == words[1])
                        .ok_or_else(|| perr(line, format!("undeclared unary kernel `{}`", words[1])))?;
                    let from = state(&sp, words[2])?;
                    let to = state(&sp, words[3])?;
                    let p = number(line, words[4])?;
                    if !(0.0..=1.0 + PROB_TOL).contains(&p) {
                        return Err(perr(line, format!("probability {p} outside [0, 1]")));
                    }
                    let row = draft.rows.entry(from).or_insert((line, vec![0.0; k]));
                    row.1[to] += p;
                }
                "init" => {
                    let sp = need_space()?;
                    let w = words[1..].iter().map(|s| number(line, s)).collect::<Result<Vec<_>>>()?;
                    if w.len() != sp.size() {
                        return Err(perr(line, format!("init needs {} weights, got {}", sp.size(), w.len())));
                    }
                    init = Some((line, w));
                }
                other => return Err(perr(line, format!("unknown directive `{other}`"))),
            }
        }

        let end = text.lines().count().max(1);
        let space = space.ok_or_else(|| perr(end, "missing `states`"))?;
        let m = arity.ok_or_else(|| perr(end, "missing `arity`"))?;
        let lambda = lambda.unwrap_or(1.0);
        let k = space.size();

        for (line, row) in meets.values() {
            let total: f64 = row.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(perr(*line, format!("outcomes of this input sum to {total}")));
            }
        }
        let lines: BTreeMap<Vec<usize>, usize> = meets.iter().map(|(x, (l, _))| (x.clone(), *l)).collect();
        let kernel = MAryKernel::new(space.clone(), m, meets.into_iter().map(|(x, (_, row))| (x, row)))
            .map_err(|e| perr(end, e.to_string()))?;
        if let Some(line) = asymmetric_entry(&kernel, &lines) {
            return Err(perr(line, "kernel is not symmetric under relabelling of participants"));
        }

        let mut named = Vec::with_capacity(unary.len());
        for draft in unary {
            let mut rows: Vec<Vec<f64>> = (0..k)
                .map(|i| {
                    let mut r = vec![0.0; k];
                    r[i] = 1.0;
                    r
                })
                .collect();
            for (from, (line, row)) in draft.rows {
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(perr(line, format!("moves of `{}` from this state sum to {total}", draft.name)));
                }
                rows[from] = row;
            }
            let kernel = UnaryKernel::new(space.clone(), rows).map_err(|e| perr(end, e.to_string()))?;
            named.push(NamedUnary { name: draft.name, rate: draft.rate, kernel });
        }

        let init = match init {
            Some((line, w)) => Measure::new(space.clone(), w).map_err(|e| perr(line, e.to_string()))?,
            None => Measure::uniform(space.clone()),
        };
        Ok(ModelSpec { space, kernel, lambda, unary: named, init })
    }

    pub fn to_text(&self) -> String {
        let sp = &self.space;
        let mut out = String::new();
        let _ = writeln!(out, "states {}", sp.labels().join(" "));
        let _ = writeln!(out, "arity {}", self.arity());
        let _ = writeln!(out, "lambda {}", self.lambda);
        let names = |x: &[usize]| x.iter().map(|&i| sp.label(i)).collect::<Vec<_>>().join(" ");
        for (x, row) in self.kernel.entries() {
            for (y, p) in row {
                let _ = writeln!(out, "meet {} -> {} {}", names(x), names(y), p);
            }
        }
        for u in &self.unary {
            let _ = writeln!(out, "unary {} {}", u.name, u.rate);
            for from in 0..sp.size() {
                let row = u.kernel.row(from);
                if row[from] == 1.0 {
                    continue;
                }
                for (to, p) in row.iter().enumerate() {
                    if *p != 0.0 {
                        let _ = writeln!(out, "move {} {} {} {}", u.name, sp.label(from), sp.label(to), p);
                    }
                }
            }
        }
        let w: Vec<String> = self.init.weights().iter().map(|w| w.to_string()).collect();
        let _ = writeln!(out, "init {}", w.join(" "));
        out
    }
}

impl ModelSpec {
    /// Series law at time `t`. Several unary kernels are folded into their
    /// rate-weighted mixture at the total rate.
    pub fn series(&self, mu0: &Measure, t: f64, eps: f64) -> Result<SeriesResult> {
        let params = SeriesParams::new(self.lambda, t, eps);
        let active: Vec<(f64, &UnaryKernel)> =
            self.unary.iter().filter(|u| u.rate > 0.0).map(|u| (u.rate, &u.kernel)).collect();
        if active.is_empty() {
            return wild_sum(&self.kernel, mu0, &params);
        }
        let mixed = UnaryKernel::mix(&active)?;
        wild_sum_two_kernel(&self.kernel, &mixed, mu0, &params.with_gamma(self.total_unary_rate()))
    }

    pub fn generator(&self) -> Result<Generator> {
        Generator::new(self.kernel.clone(), self.lambda, self.unary_terms())
    }

    pub fn sim_model(&self) -> Result<SimModel> {
        SimModel::new(self.kernel.clone(), self.lambda, self.unary_terms())
    }
}

fn asymmetric_entry(kernel: &MAryKernel, lines: &BTreeMap<Vec<usize>, usize>) -> Option<usize> {
    let perms = permutations(kernel.arity());
    for (x, row) in kernel.entries() {
        for (y, _) in row {
            let p = kernel.probability(x, y);
            for sigma in &perms {
                if (kernel.probability(&permute(x, sigma), &permute(y, sigma)) - p).abs() > PROB_TOL {
                    return lines.get(x).copied();
                }
            }
        }
    }
    None
}

impl DgpModel {
    pub fn to_spec(&self) -> ModelSpec {
        let mut unary = Vec::new();
        if self.gamma_u > 0.0 {
            unary.push(NamedUnary { name: "up".into(), rate: self.gamma_u, kernel: self.q_up.clone() });
        }
        if self.gamma_d > 0.0 {
            unary.push(NamedUnary { name: "down".into(), rate: self.gamma_d, kernel: self.q_down.clone() });
        }
        ModelSpec {
            space: self.space.clone(),
            kernel: self.q2.clone(),
            lambda: self.lambda,
            unary,
            init: Measure::uniform(self.space.clone()),
        }
    }
}

impl PercolationModel {
    pub fn to_spec(&self) -> ModelSpec {
        let unary = if self.gamma > 0.0 {
            vec![NamedUnary { name: "regress".into(), rate: self.gamma, kernel: self.regression.clone() }]
        } else {
            Vec::new()
        };
        ModelSpec {
            space: self.space.clone(),
            kernel: self.sum_kernel.clone(),
            lambda: self.lambda,
            unary,
            init: self.pi.clone(),
        }
    }
}
