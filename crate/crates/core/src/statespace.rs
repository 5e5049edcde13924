//! Finite state spaces, probability vectors and interaction kernels.
//!
//! An m-ary kernel is stored as a sparse map from input tuples to joint
//! output distributions; every tuple without an entry keeps its state. The
//! analytic operators only need the law of the first output coordinate, which
//! is cached densely in a [`MarginalTable`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute tolerance for probability normalisation checks.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq, Eq)]
pub struct StateSpace {
    states: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let states: Vec<String> = labels.into_iter().map(Into::into).collect();
        if states.is_empty() {
            return Err(Error::param("state space must contain at least one state"));
        }
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == ',') {
                return Err(Error::param(format!("invalid state label {s:?}")));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::param(format!("duplicate state label {s:?}")));
            }
        }
        Ok(Arc::new(StateSpace { states, index }))
    }

    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.states
    }

    pub fn label(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

impl fmt::Debug for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.states).finish()
    }
}

pub(crate) fn same_space(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A probability vector over a finite state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    space: Arc<StateSpace>,
    weights: Vec<f64>,
}

impl Measure {
    /// Validates non-negativity and unit mass. Negative weights within
    /// [`PROB_TOL`] of zero are clamped.
    pub fn new(space: Arc<StateSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.size() {
            return Err(Error::InvalidMeasure(format!(
                "expected {} weights, got {}",
                space.size(),
                weights.len()
            )));
        }
        let mut weights = weights;
        for w in weights.iter_mut() {
            if !w.is_finite() || *w < -PROB_TOL {
                return Err(Error::InvalidMeasure(format!("weight {w} is not a probability")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {mass}, not 1")));
        }
        Ok(Measure { space, weights })
    }

    /// Clips negative entries and rescales to unit mass.
    pub fn normalized(space: Arc<StateSpace>, mut weights: Vec<f64>) -> Result<Self> {
        for w in weights.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidMeasure(format!("cannot normalise mass {mass}")));
        }
        weights.iter_mut().for_each(|w| *w /= mass);
        Measure::new(space, weights)
    }

    pub fn point(space: Arc<StateSpace>, state: usize) -> Result<Self> {
        if state >= space.size() {
            return Err(Error::InvalidMeasure(format!("state index {state} out of range")));
        }
        let mut weights = vec![0.0; space.size()];
        weights[state] = 1.0;
        Ok(Measure { space, weights })
    }

    pub fn uniform(space: Arc<StateSpace>) -> Self {
        let k = space.size();
        Measure { weights: vec![1.0 / k as f64; k], space }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, label: &str) -> Option<f64> {
        self.space.index_of(label).map(|i| self.weights[i])
    }

    pub fn l1_distance(&self, other: &Measure) -> Result<f64> {
        if !same_space(&self.space, &other.space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(l1(&self.weights, &other.weights))
    }

    pub(crate) fn check_space(&self, space: &Arc<StateSpace>) -> Result<()> {
        if same_space(&self.space, space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Joint output distribution for one input tuple.
pub type KernelRow = Vec<(Vec<usize>, f64)>;

/// Symmetric m-ary interaction kernel with identity completion.
#[derive(Debug, Clone)]
pub struct MAryKernel {
    space: Arc<StateSpace>,
    arity: usize,
    entries: BTreeMap<Vec<usize>, KernelRow>,
    marginal: MarginalTable,
}

impl MAryKernel {
    pub fn new<I>(space: Arc<StateSpace>, arity: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, KernelRow)>,
    {
        if arity < 2 {
            return Err(Error::InvalidKernel(format!("arity must be at least 2, got {arity}")));
        }
        let k = space.size();
        let mut map = BTreeMap::new();
        for (input, row) in entries {
            validate_tuple(&input, arity, k)?;
            let mut total = 0.0;
            for (output, p) in &row {
                validate_tuple(output, arity, k)?;
                if !p.is_finite() || *p < 0.0 {
                    return Err(Error::InvalidKernel(format!(
                        "negative probability {p} for input {input:?}"
                    )));
                }
                total += p;
            }
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidKernel(format!(
                    "outputs for input {input:?} sum to {total}"
                )));
            }
            if map.insert(input.clone(), row).is_some() {
                return Err(Error::InvalidKernel(format!("duplicate entry for input {input:?}")));
            }
        }
        let marginal = MarginalTable::build(k, arity, &map);
        Ok(MAryKernel { space, arity, entries: map, marginal })
    }

    pub fn identity(space: Arc<StateSpace>, arity: usize) -> Result<Self> {
        MAryKernel::new(space, arity, std::iter::empty())
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn entries(&self) -> &BTreeMap<Vec<usize>, KernelRow> {
        &self.entries
    }

    pub fn marginal(&self) -> &MarginalTable {
        &self.marginal
    }

    /// Probability of the joint outcome `output` given `input`.
    pub fn probability(&self, input: &[usize], output: &[usize]) -> f64 {
        match self.entries.get(input) {
            Some(row) => row.iter().filter(|(y, _)| y == output).map(|(_, p)| p).sum(),
            None => {
                if input == output {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Validates `Q(x_σ; y_σ) = Q(x; y)` over every stored entry and every
    /// permutation, up to [`PROB_TOL`].
    pub fn check_symmetry(&self) -> bool {
        let perms = permutations(self.arity);
        for (input, row) in &self.entries {
            for (output, _) in row {
                let p = self.probability(input, output);
                for sigma in &perms {
                    let xs = permute(input, sigma);
                    let ys = permute(output, sigma);
                    if (self.probability(&xs, &ys) - p).abs() > PROB_TOL {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn validate_tuple(t: &[usize], arity: usize, k: usize) -> Result<()> {
    if t.len() != arity {
        return Err(Error::ArityMismatch { expected: arity, found: t.len() });
    }
    if let Some(bad) = t.iter().find(|&&s| s >= k) {
        return Err(Error::InvalidKernel(format!("state index {bad} out of range")));
    }
    Ok(())
}

/// `(x ∘ σ)_i = x_{σ(i)}`.
pub fn permute(x: &[usize], sigma: &[usize]) -> Vec<usize> {
    sigma.iter().map(|&j| x[j]).collect()
}

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), &mut vec![false; m], &mut out);
    out
}

/// Dense table of the first-coordinate output law, indexed by input tuple.
///
/// `table[(x_1 k^{m-1} + ... + x_m) * k + c] = P(first output = c | x)`.
/// Applying it to m vectors is a multilinear map; on probability vectors it is
/// the one-component marginal operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    size: usize,
    arity: usize,
    table: Vec<f64>,
}

impl MarginalTable {
    fn build(k: usize, arity: usize, entries: &BTreeMap<Vec<usize>, KernelRow>) -> Self {
        let tuples = k.pow(arity as u32);
        let mut table = vec![0.0; tuples * k];
        for t in 0..tuples {
            let x = decode(t, k, arity);
            let row = &mut table[t * k..(t + 1) * k];
            match entries.get(&x) {
                Some(outs) => {
                    for (y, p) in outs {
                        row[y[0]] += p;
                    }
                }
                None => row[x[0]] = 1.0,
            }
        }
        MarginalTable { size: k, arity, table }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// `w_kernel * self + w_unary * U` where `U(x; c) = unary(x_1; c)`: the
    /// first-coordinate table of a kernel that, with probability `w_unary`,
    /// moves only the first participant.
    pub fn mix_unary(&self, w_kernel: f64, unary: &UnaryKernel, w_unary: f64) -> MarginalTable {
        let k = self.size;
        let block = k.pow(self.arity as u32 - 1);
        let mut table: Vec<f64> = self.table.iter().map(|v| v * w_kernel).collect();
        for x1 in 0..k {
            for rest in 0..block {
                let t = x1 * block + rest;
                for c in 0..k {
                    table[t * k + c] += w_unary * unary.get(x1, c);
                }
            }
        }
        MarginalTable { size: k, arity: self.arity, table }
    }

    /// Multilinear application to `arity` vectors (not necessarily normalised).
    pub fn apply(&self, inputs: &[&[f64]]) -> Vec<f64> {
        assert_eq!(inputs.len(), self.arity, "marginal table arity");
        let mut cur = self.table.clone();
        for v in inputs.iter().rev() {
            cur = contract_last(&cur, v, self.size);
        }
        cur
    }

    /// Applies the table with every argument equal to `v`.
    pub fn apply_diag(&self, v: &[f64]) -> Vec<f64> {
        let mut cur = contract_last(&self.table, v, self.size);
        for _ in 1..self.arity {
            cur = contract_last(&cur, v, self.size);
        }
        cur
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.table
    }
}

/// Sums out the last tuple coordinate of a `[prefix][x][c]` tensor against `v`.
pub(crate) fn contract_last(tensor: &[f64], v: &[f64], k: usize) -> Vec<f64> {
    let prefixes = tensor.len() / (k * k);
    let mut out = vec![0.0; prefixes * k];
    for p in 0..prefixes {
        let dst = &mut out[p * k..(p + 1) * k];
        let base = p * k * k;
        for (x, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let src = &tensor[base + x * k..base + (x + 1) * k];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    out
}

/// Mixed-radix decoding of a tuple index, first coordinate most significant.
pub fn decode(mut t: usize, k: usize, arity: usize) -> Vec<usize> {
    let mut x = vec![0; arity];
    for i in (0..arity).rev() {
        x[i] = t % k;
        t /= k;
    }
    x
}

pub fn encode(x: &[usize], k: usize) -> usize {
    x.iter().fold(0, |acc, &s| acc * k + s)
}

/// Row-stochastic matrix of autonomous single-component moves.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryKernel {
    space: Arc<StateSpace>,
    matrix: Vec<f64>,
}

impl UnaryKernel {
    pub fn new(space: Arc<StateSpace>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = space.size();
        if rows.len() != k {
            return Err(Error::InvalidKernel(format!("expected {k} rows, got {}", rows.len())));
        }
        let mut matrix = Vec::with_capacity(k * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidKernel(format!("row {i} has {} entries", row.len())));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidKernel(format!("row {i} has a negative entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidKernel(format!("row {i} sums to {total}")));
            }
            matrix.extend(row);
        }
        Ok(UnaryKernel { space, matrix })
    }

    pub fn identity(space: Arc<StateSpace>) -> Self {
        let k = space.size();
        let mut matrix = vec![0.0; k * k];
        (0..k).for_each(|i| matrix[i * k + i] = 1.0);
        UnaryKernel { space, matrix }
    }

    /// Deterministic kernel sending state `i` to `map(i)`.
    pub fn from_map(space: Arc<StateSpace>, map: impl Fn(usize) -> usize) -> Result<Self> {
        let k = space.size();
        let rows = (0..k)
            .map(|i| {
                let mut row = vec![0.0; k];
                let j = map(i);
                if j >= k {
                    return Err(Error::InvalidKernel(format!("state {i} maps out of range")));
                }
                row[j] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        UnaryKernel::new(space, rows)
    }

    /// Rate-weighted average `Σ r_i Q_i / Σ r_i`.
    pub fn mix(terms: &[(f64, &UnaryKernel)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::param("empty unary mixture"))?.1;
        let total: f64 = terms.iter().map(|(r, _)| r).sum();
        if !(total > 0.0) || terms.iter().any(|(r, _)| *r < 0.0) {
            return Err(Error::param("unary mixture needs non-negative rates with positive sum"));
        }
        let mut matrix = vec![0.0; first.matrix.len()];
        for (r, q) in terms {
            if !same_space(&q.space, &first.space) {
                return Err(Error::SpaceMismatch);
            }
            for (m, v) in matrix.iter_mut().zip(&q.matrix) {
                *m += r / total * v;
            }
        }
        Ok(UnaryKernel { space: first.space.clone(), matrix })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[from * self.space.size() + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let k = self.space.size();
        &self.matrix[from * k..(from + 1) * k]
    }

    /// Row vector times matrix.
    pub fn apply_raw(&self, v: &[f64]) -> Vec<f64> {
        let k = self.space.size();
        let mut out = vec![0.0; k];
        for (i, &w) in v.iter().enumerate() {
            if w != 0.0 {
                for (o, q) in out.iter_mut().zip(self.row(i)) {
                    *o += w * q;
                }
            }
        }
        out
    }

    pub fn apply_power(&self, v: &[f64], times: usize) -> Vec<f64> {
        let mut cur = v.to_vec();
        for _ in 0..times {
            cur = self.apply_raw(&cur);
        }
        cur
    }
}

/// Law of the first component after m independent components with the given
/// laws interact; multilinear in the inputs.
pub fn marginal_interact(kernel: &MAryKernel, inputs: &[&Measure]) -> Result<Measure> {
    if inputs.len() != kernel.arity() {
        return Err(Error::ArityMismatch { expected: kernel.arity(), found: inputs.len() });
    }
    for mu in inputs {
        mu.check_space(kernel.space())?;
    }
    let raw: Vec<&[f64]> = inputs.iter().map(|m| m.weights()).collect();
    Measure::new(kernel.space().clone(), kernel.marginal().apply(&raw))
}

/// `mu` pushed through `times` applications of the unary kernel.
pub fn apply_unary(kernel: &UnaryKernel, mu: &Measure, times: usize) -> Result<Measure> {
    mu.check_space(kernel.space())?;
    Measure::new(kernel.space().clone(), kernel.apply_power(mu.weights(), times))
}

pub fn check_symmetry(kernel: &MAryKernel) -> bool {
    kernel.check_symmetry()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dgp_space() -> Arc<StateSpace> {
        StateSpace::new(["ln", "lo", "hn", "ho"]).unwrap()
    }

    // ln=0 lo=1 hn=2 ho=3
    fn dgp_q2() -> MAryKernel {
        let s = dgp_space();
        MAryKernel::new(
            s,
            2,
            vec![
                (vec![2, 1], vec![(vec![3, 0], 1.0)]),
                (vec![1, 2], vec![(vec![0, 3], 1.0)]),
            ],
        )
        .unwrap()
    }

    fn flip() -> UnaryKernel {
        UnaryKernel::from_map(dgp_space(), |i| (i + 2) % 4).unwrap()
    }

    #[test]
    fn identity_kernel_preserves_law() {
        let s = dgp_space();
        let k = MAryKernel::identity(s.clone(), 2).unwrap();
        let mu = Measure::new(s, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = marginal_interact(&k, &[&mu, &mu]).unwrap();
        assert!(out.l1_distance(&mu).unwrap() < 1e-15);
    }

    #[test]
    fn dgp_trade_point_masses() {
        let s = dgp_space();
        let q2 = dgp_q2();
        let hn = Measure::point(s.clone(), 2).unwrap();
        let lo = Measure::point(s.clone(), 1).unwrap();
        let out = marginal_interact(&q2, &[&hn, &lo]).unwrap();
        assert_eq!(out.weights(), &[0.0, 0.0, 0.0, 1.0]);
        // the seller's side of the same trade
        let out = marginal_interact(&q2, &[&lo, &hn]).unwrap();
        assert_eq!(out.weights(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn dgp_uniform_matches_brute_force() {
        // brute force over the 16 ordered input pairs
        let s = dgp_space();
        let q2 = dgp_q2();
        let mut expect = [0.0; 4];
        for x1 in 0..4 {
            for x2 in 0..4 {
                for y1 in 0..4 {
                    for y2 in 0..4 {
                        expect[y1] += q2.probability(&[x1, x2], &[y1, y2]) / 16.0;
                    }
                }
            }
        }
        let u = Measure::uniform(s);
        let out = marginal_interact(&q2, &[&u, &u]).unwrap();
        for c in 0..4 {
            assert!((out.weights()[c] - expect[c]).abs() < 1e-15);
        }
        assert!((out.weight("ho").unwrap() - (0.25 + 1.0 / 16.0)).abs() < 1e-15);
        assert!((out.weight("hn").unwrap() - (0.25 - 1.0 / 16.0)).abs() < 1e-15);
    }

    #[test]
    fn arity_and_space_errors() {
        let q2 = dgp_q2();
        let mu = Measure::uniform(dgp_space());
        assert!(matches!(
            marginal_interact(&q2, &[&mu]),
            Err(Error::ArityMismatch { expected: 2, found: 1 })
        ));
        let other = Measure::uniform(StateSpace::new(["a", "b"]).unwrap());
        assert!(matches!(marginal_interact(&q2, &[&mu, &other]), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn unary_flip_is_an_involution() {
        let s = dgp_space();
        let q1 = flip();
        let ln = Measure::point(s.clone(), 0).unwrap();
        assert_eq!(apply_unary(&q1, &ln, 1).unwrap().weights(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(apply_unary(&q1, &ln, 2).unwrap(), ln);
        assert_eq!(apply_unary(&q1, &ln, 0).unwrap(), ln);
        // matrix square is the identity
        for i in 0..4 {
            let row = q1.apply_raw(q1.row(i));
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn symmetry_checks() {
        assert!(dgp_q2().check_symmetry());
        assert!(MAryKernel::identity(dgp_space(), 3).unwrap().check_symmetry());
        let broken = MAryKernel::new(dgp_space(), 2, vec![(vec![0, 1], vec![(vec![2, 3], 1.0)])])
            .unwrap();
        assert!(!broken.check_symmetry());
    }

    #[test]
    fn kernel_validation() {
        let s = dgp_space();
        assert!(MAryKernel::new(s.clone(), 2, vec![(vec![0, 1], vec![(vec![2, 3], 0.7)])]).is_err());
        assert!(MAryKernel::new(s.clone(), 1, Vec::new()).is_err());
        assert!(MAryKernel::new(s.clone(), 2, vec![(vec![0, 9], vec![(vec![0, 9], 1.0)])]).is_err());
        assert!(UnaryKernel::new(s.clone(), vec![vec![0.5, 0.5, 0.0, 0.0]; 3]).is_err());
        assert!(Measure::new(s.clone(), vec![0.5, 0.6, -0.1, 0.0]).is_err());
        assert!(StateSpace::new(["a", "a"]).is_err());
        assert!(StateSpace::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn mix_unary_table_matches_convex_combination() {
        let q2 = dgp_q2();
        let q1 = flip();
        let mixed = q2.marginal().mix_unary(0.75, &q1, 0.25);
        let a = [0.1, 0.2, 0.3, 0.4];
        let b = [0.4, 0.3, 0.2, 0.1];
        let got = mixed.apply(&[&a, &b]);
        let base = q2.marginal().apply(&[&a, &b]);
        let moved = q1.apply_raw(&a);
        for c in 0..4 {
            assert!((got[c] - (0.75 * base[c] + 0.25 * moved[c])).abs() < 1e-15);
        }
    }
}
