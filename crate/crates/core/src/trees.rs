//! Ordered m-ary interaction trees and their decorations by unary events.
//!
//! A tree with `n` internal nodes is grown by grafting an internal node onto
//! one of the current leaves, `n` times. Internal nodes carry the step at
//! which they were grafted (1 for the root), so two different grafting
//! histories are always different trees even when their plane shapes agree.
//! This is what makes the count `#_m(n) = ∏_{k=1}^{n-1} ((m-1)k + 1)`.
//!
//! Textual forms: a leaf is `L`, an internal node lists its children inside
//! parentheses. The shape form drops the graft order, e.g. `((LLL)LL)`; the
//! labelled form keeps it as `(1:(2:LLL)LL)`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf,
    Internal { label: u32, children: Vec<Node> },
}

impl Node {
    fn write_shape(&self, out: &mut String) {
        match self {
            Node::Leaf => out.push('L'),
            Node::Internal { children, .. } => {
                out.push('(');
                children.iter().for_each(|c| c.write_shape(out));
                out.push(')');
            }
        }
    }

    fn write_labeled(&self, out: &mut String) {
        match self {
            Node::Leaf => out.push('L'),
            Node::Internal { label, children } => {
                out.push('(');
                out.push_str(&label.to_string());
                out.push(':');
                children.iter().for_each(|c| c.write_labeled(out));
                out.push(')');
            }
        }
    }

    /// Shape string of this subtree.
    pub fn shape(&self) -> String {
        let mut s = String::new();
        self.write_shape(&mut s);
        s
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedTree {
    arity: usize,
    root: Node,
    internal_count: usize,
}

impl OrderedTree {
    pub fn leaf(arity: usize) -> Self {
        OrderedTree { arity, root: Node::Leaf, internal_count: 0 }
    }

    /// Checks arity and that labels are `1..=n`, increasing away from the root.
    pub fn from_root(arity: usize, root: Node) -> Result<Self> {
        if arity < 2 {
            return Err(Error::param(format!("tree arity must be at least 2, got {arity}")));
        }
        fn walk(node: &Node, arity: usize, parent: u32, labels: &mut Vec<u32>) -> Result<()> {
            if let Node::Internal { label, children } = node {
                if children.len() != arity {
                    return Err(Error::param(format!(
                        "internal node has {} children, expected {arity}",
                        children.len()
                    )));
                }
                if *label <= parent {
                    return Err(Error::param("node labels must increase away from the root"));
                }
                labels.push(*label);
                for c in children {
                    walk(c, arity, *label, labels)?;
                }
            }
            Ok(())
        }
        let mut labels = Vec::new();
        walk(&root, arity, 0, &mut labels)?;
        labels.sort_unstable();
        if labels.iter().enumerate().any(|(i, &l)| l as usize != i + 1) {
            return Err(Error::param("node labels must be exactly 1..=n"));
        }
        Ok(OrderedTree { arity, root, internal_count: labels.len() })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn internal_count(&self) -> usize {
        self.internal_count
    }

    pub fn leaf_count(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Leaf => 1,
                Node::Internal { children, .. } => children.iter().map(count).sum(),
            }
        }
        count(&self.root)
    }

    /// Edges including the planted root edge: `m n + 1`.
    pub fn branch_count(&self) -> usize {
        fn count(n: &Node) -> usize {
            1 + match n {
                Node::Leaf => 0,
                Node::Internal { children, .. } => children.iter().map(count).sum(),
            }
        }
        count(&self.root)
    }

    pub fn shape(&self) -> String {
        self.root.shape()
    }

    pub fn labeled(&self) -> String {
        let mut s = String::new();
        self.root.write_labeled(&mut s);
        s
    }

    /// Grafts a new internal node (label `n + 1`) onto the `leaf`-th leaf,
    /// counting leaves left to right.
    pub fn graft(&self, leaf: usize) -> Result<Self> {
        fn rec(node: &Node, target: &mut usize, arity: usize, label: u32) -> Option<Node> {
            match node {
                Node::Leaf => {
                    if *target == 0 {
                        Some(Node::Internal { label, children: vec![Node::Leaf; arity] })
                    } else {
                        *target -= 1;
                        None
                    }
                }
                Node::Internal { label: l, children } => {
                    for (i, c) in children.iter().enumerate() {
                        if let Some(new) = rec(c, target, arity, label) {
                            let mut children = children.clone();
                            children[i] = new;
                            return Some(Node::Internal { label: *l, children });
                        }
                    }
                    None
                }
            }
        }
        let mut target = leaf;
        let label = self.internal_count as u32 + 1;
        let root = rec(&self.root, &mut target, self.arity, label)
            .ok_or_else(|| Error::param(format!("tree has no leaf {leaf}")))?;
        Ok(OrderedTree { arity: self.arity, root, internal_count: self.internal_count + 1 })
    }

    /// Parses either textual form. Unlabelled internal nodes are numbered in
    /// pre-order, which is always a valid graft order.
    pub fn parse(arity: usize, text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let mut next = 1u32;
        let mut labelled = None;
        let root = parse_node(&chars, &mut pos, &mut next, &mut labelled)?;
        if pos != chars.len() {
            return Err(Error::param(format!("trailing input in tree {text:?}")));
        }
        OrderedTree::from_root(arity, root)
    }
}

fn parse_node(
    chars: &[char],
    pos: &mut usize,
    next: &mut u32,
    labelled: &mut Option<bool>,
) -> Result<Node> {
    let bad = |msg: &str| Error::param(format!("bad tree text: {msg}"));
    match chars.get(*pos) {
        Some('L') => {
            *pos += 1;
            Ok(Node::Leaf)
        }
        Some('(') => {
            *pos += 1;
            let digits: String = chars[*pos..].iter().take_while(|c| c.is_ascii_digit()).collect();
            let has_label = !digits.is_empty();
            if *labelled.get_or_insert(has_label) != has_label {
                return Err(bad("mixed labelled and unlabelled nodes"));
            }
            let label = if has_label {
                *pos += digits.len();
                if chars.get(*pos) != Some(&':') {
                    return Err(bad("expected ':' after label"));
                }
                *pos += 1;
                digits.parse().map_err(|_| bad("label overflow"))?
            } else {
                *next += 1;
                *next - 1
            };
            let mut children = Vec::new();
            while chars.get(*pos) != Some(&')') {
                if *pos >= chars.len() {
                    return Err(bad("unclosed '('"));
                }
                children.push(parse_node(chars, pos, next, labelled)?);
            }
            *pos += 1;
            Ok(Node::Internal { label, children })
        }
        Some(c) => Err(bad(&format!("unexpected {c:?}"))),
        None => Err(bad("unexpected end")),
    }
}

impl fmt::Display for OrderedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.shape())
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `#_m(n)`: number of ordered m-ary trees with `n` internal nodes.
pub fn count_trees(m: usize, n: usize) -> BigUint {
    assert!(m >= 2, "arity must be at least 2");
    (1..n).fold(BigUint::one(), |acc, k| acc * ((m as u64 - 1) * k as u64 + 1))
}

/// Default cap on the number of internal nodes an enumeration may request.
pub const DEFAULT_TREE_CAP: usize = 12;

/// Deterministic stream over all trees with `n` internal nodes, in
/// lexicographic order of grafting choices.
#[derive(Debug, Clone)]
pub struct TreeIter {
    arity: usize,
    choices: Vec<usize>,
    done: bool,
}

pub fn enumerate_trees(m: usize, n: usize, cap: usize) -> Result<TreeIter> {
    if m < 2 {
        return Err(Error::param(format!("tree arity must be at least 2, got {m}")));
    }
    if n > cap {
        return Err(Error::ResourceCap(format!("tree enumeration with n = {n} exceeds cap {cap}")));
    }
    Ok(TreeIter { arity: m, choices: vec![0; n], done: false })
}

impl TreeIter {
    fn leaves_before(&self, step: usize) -> usize {
        (self.arity - 1) * step + 1
    }
}

impl Iterator for TreeIter {
    type Item = OrderedTree;

    fn next(&mut self) -> Option<OrderedTree> {
        if self.done {
            return None;
        }
        let tree = build_from_choices(self.arity, &self.choices);
        // odometer, last choice fastest
        let mut i = self.choices.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.choices[i] += 1;
            if self.choices[i] < self.leaves_before(i) {
                break;
            }
            self.choices[i] = 0;
        }
        Some(tree)
    }
}

/// Builds the tree obtained by grafting at leaf `choices[k]` on step `k + 1`.
pub fn build_from_choices(arity: usize, choices: &[usize]) -> OrderedTree {
    let mut kids: Vec<Option<(u32, Vec<usize>)>> = vec![None];
    let mut leaves = vec![0usize];
    for (k, &c) in choices.iter().enumerate() {
        let id = leaves[c];
        let new: Vec<usize> = (kids.len()..kids.len() + arity).collect();
        kids.extend(std::iter::repeat(None).take(arity));
        kids[id] = Some((k as u32 + 1, new.clone()));
        leaves.splice(c..c + 1, new);
    }
    fn convert(id: usize, kids: &[Option<(u32, Vec<usize>)>]) -> Node {
        match &kids[id] {
            None => Node::Leaf,
            Some((label, ch)) => Node::Internal {
                label: *label,
                children: ch.iter().map(|&c| convert(c, kids)).collect(),
            },
        }
    }
    OrderedTree { arity, root: convert(0, &kids), internal_count: choices.len() }
}

/// Counts of indistinguishable unary events per branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arrangement {
    counts: Vec<usize>,
}

impl Arrangement {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::param("an arrangement needs at least one box"));
        }
        Ok(Arrangement { counts })
    }

    pub fn zeros(boxes: usize) -> Self {
        Arrangement { counts: vec![0; boxes.max(1)] }
    }

    pub fn boxes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// `|K_b^p| = C(b + p - 1, b - 1)`.
pub fn count_arrangements(boxes: usize, p: usize) -> BigUint {
    assert!(boxes >= 1, "at least one box");
    binomial((boxes + p - 1) as u64, (boxes - 1) as u64)
}

pub const DEFAULT_ARRANGEMENT_CAP: usize = 1_000_000;

/// Weak compositions of `p` into `boxes` parts, lexicographically decreasing.
#[derive(Debug, Clone)]
pub struct ArrangementIter {
    current: Option<Vec<usize>>,
}

pub fn enumerate_arrangements(boxes: usize, p: usize, cap: usize) -> Result<ArrangementIter> {
    if boxes == 0 {
        return Err(Error::param("an arrangement needs at least one box"));
    }
    if count_arrangements(boxes, p) > BigUint::from(cap) {
        return Err(Error::ResourceCap(format!(
            "{boxes} boxes with {p} objects exceeds the arrangement cap {cap}"
        )));
    }
    let mut first = vec![0; boxes];
    first[0] = p;
    Ok(ArrangementIter { current: Some(first) })
}

impl Iterator for ArrangementIter {
    type Item = Arrangement;

    fn next(&mut self) -> Option<Arrangement> {
        let cur = self.current.take()?;
        let b = cur.len();
        let mut succ = cur.clone();
        if let Some(i) = (0..b.saturating_sub(1)).rev().find(|&i| succ[i] > 0) {
            let rest: usize = 1 + succ[i + 1..].iter().sum::<usize>();
            succ[i] -= 1;
            succ[i + 1] = rest;
            succ[i + 2..].iter_mut().for_each(|c| *c = 0);
            self.current = Some(succ);
        }
        Some(Arrangement { counts: cur })
    }
}

/// An m-ary tree with unary events placed on its branches. Branches are
/// numbered in pre-order with the root edge first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecoratedTree {
    tree: OrderedTree,
    arrangement: Arrangement,
}

impl DecoratedTree {
    pub fn new(tree: OrderedTree, arrangement: Arrangement) -> Result<Self> {
        let b = tree.arity() * tree.internal_count() + 1;
        if arrangement.boxes() != b {
            return Err(Error::param(format!(
                "arrangement has {} boxes but the tree has {b} branches",
                arrangement.boxes()
            )));
        }
        Ok(DecoratedTree { tree, arrangement })
    }

    pub fn tree(&self) -> &OrderedTree {
        &self.tree
    }

    pub fn arrangement(&self) -> &Arrangement {
        &self.arrangement
    }
}
