use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::statespace::{MAryKernel, MarginalTable, Measure, UnaryKernel};
use crate::trees::{DecoratedTree, Node, OrderedTree};

/// Subtree laws keyed by plane shape. A cache is only meaningful for the
/// single (kernel, leaf law) pair it was filled with.
#[derive(Debug, Default)]
pub struct TreeLawCache {
    laws: Mutex<HashMap<String, Vec<f64>>>,
}

impl TreeLawCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.laws.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn eval_node(
    node: &Node,
    table: &MarginalTable,
    leaf: &[f64],
    cache: Option<&TreeLawCache>,
) -> Vec<f64> {
    let children = match node {
        Node::Leaf => return leaf.to_vec(),
        Node::Internal { children, .. } => children,
    };
    let key = cache.map(|_| node.shape());
    if let (Some(c), Some(k)) = (cache, &key) {
        if let Some(v) = c.laws.lock().unwrap().get(k) {
            return v.clone();
        }
    }
    let laws: Vec<Vec<f64>> = children.iter().map(|c| eval_node(c, table, leaf, cache)).collect();
    let refs: Vec<&[f64]> = laws.iter().map(Vec::as_slice).collect();
    let out = table.apply(&refs);
    if let (Some(c), Some(k)) = (cache, key) {
        // racing writers compute identical values, so either insert is fine
        c.laws.lock().unwrap().entry(k).or_insert_with(|| out.clone());
    }
    out
}

fn check(kernel: &MAryKernel, mu: &Measure, tree: &OrderedTree) -> Result<()> {
    if tree.arity() != kernel.arity() {
        return Err(Error::ArityMismatch { expected: kernel.arity(), found: tree.arity() });
    }
    mu.check_space(kernel.space())
}

/// Law at the root when `mu` sits on every leaf and each internal node
/// applies the marginal operator to its children's laws.
pub fn tree_law(kernel: &MAryKernel, mu: &Measure, tree: &OrderedTree) -> Result<Measure> {
    check(kernel, mu, tree)?;
    let w = eval_node(tree.root(), kernel.marginal(), mu.weights(), None);
    Measure::new(kernel.space().clone(), w)
}

pub fn tree_law_cached(
    kernel: &MAryKernel,
    mu: &Measure,
    tree: &OrderedTree,
    cache: &TreeLawCache,
) -> Result<Measure> {
    check(kernel, mu, tree)?;
    let w = eval_node(tree.root(), kernel.marginal(), mu.weights(), Some(cache));
    Measure::new(kernel.space().clone(), w)
}

pub(crate) fn eval_decorated(
    node: &Node,
    table: &MarginalTable,
    unary: &UnaryKernel,
    leaf: &[f64],
    counts: &[usize],
    edge: &mut usize,
) -> Vec<f64> {
    let mine = counts[*edge];
    *edge += 1;
    let law = match node {
        Node::Leaf => leaf.to_vec(),
        Node::Internal { children, .. } => {
            let laws: Vec<Vec<f64>> = children
                .iter()
                .map(|c| eval_decorated(c, table, unary, leaf, counts, edge))
                .collect();
            let refs: Vec<&[f64]> = laws.iter().map(Vec::as_slice).collect();
            table.apply(&refs)
        }
    };
    unary.apply_power(&law, mine)
}

/// As [`tree_law`], with the law flowing up each branch moved by the unary
/// kernel as many times as the arrangement puts on that branch.
pub fn decorated_tree_law(
    kernel: &MAryKernel,
    unary: &UnaryKernel,
    mu: &Measure,
    dtree: &DecoratedTree,
) -> Result<Measure> {
    check(kernel, mu, dtree.tree())?;
    mu.check_space(unary.space())?;
    let mut edge = 0;
    let w = eval_decorated(
        dtree.tree().root(),
        kernel.marginal(),
        unary,
        mu.weights(),
        dtree.arrangement().counts(),
        &mut edge,
    );
    Measure::new(kernel.space().clone(), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_dgp;
    use crate::statespace::{apply_unary, marginal_interact};
    use crate::trees::{enumerate_trees, Arrangement};

    #[test]
    fn leaf_and_single_node() {
        let dgp = build_dgp(1.0, 0.0, 0.0);
        let mu = Measure::new(dgp.space.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let leaf = OrderedTree::leaf(2);
        assert_eq!(tree_law(&dgp.q2, &mu, &leaf).unwrap(), mu);
        let one = leaf.graft(0).unwrap();
        assert_eq!(
            tree_law(&dgp.q2, &mu, &one).unwrap(),
            marginal_interact(&dgp.q2, &[&mu, &mu]).unwrap()
        );
        assert!(tree_law(&dgp.q2, &mu, &OrderedTree::leaf(3).graft(0).unwrap()).is_err());
    }

    #[test]
    fn two_node_binary_trees_match_brute_force() {
        // expand both trees over all 4^3 leaf configurations
        let dgp = build_dgp(1.0, 0.0, 0.0);
        let mu = Measure::uniform(dgp.space.clone());
        let q = |a: usize, b: usize| -> [f64; 4] {
            let mut out = [0.0; 4];
            for y1 in 0..4 {
                for y2 in 0..4 {
                    out[y1] += dgp.q2.probability(&[a, b], &[y1, y2]);
                }
            }
            out
        };
        let mut left = [0.0; 4]; // ((LL)L)
        let mut right = [0.0; 4]; // (L(LL))
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let w = 1.0 / 64.0;
                    let inner = q(a, b);
                    for (z, pz) in inner.iter().enumerate() {
                        let o = q(z, c);
                        for y in 0..4 {
                            left[y] += w * pz * o[y];
                        }
                    }
                    let inner = q(b, c);
                    for (z, pz) in inner.iter().enumerate() {
                        let o = q(a, z);
                        for y in 0..4 {
                            right[y] += w * pz * o[y];
                        }
                    }
                }
            }
        }
        let trees: Vec<_> = enumerate_trees(2, 2, 4).unwrap().collect();
        let l = tree_law(&dgp.q2, &mu, &trees[0]).unwrap();
        let r = tree_law(&dgp.q2, &mu, &trees[1]).unwrap();
        for y in 0..4 {
            assert!((l.weights()[y] - left[y]).abs() < 1e-15);
            assert!((r.weights()[y] - right[y]).abs() < 1e-15);
        }
    }

    #[test]
    fn cache_agrees_exactly() {
        let dgp = build_dgp(1.0, 0.0, 0.0);
        let mu = Measure::new(dgp.space.clone(), vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let cache = TreeLawCache::new();
        for t in enumerate_trees(2, 5, 6).unwrap() {
            let plain = tree_law(&dgp.q2, &mu, &t).unwrap();
            let cached = tree_law_cached(&dgp.q2, &mu, &t, &cache).unwrap();
            assert_eq!(plain, cached);
        }
        // one entry per plane shape with 1..=5 internal nodes (Catalan numbers)
        assert_eq!(cache.len(), 1 + 2 + 5 + 14 + 42);
    }

    #[test]
    fn zero_arrangement_is_plain_tree_law() {
        let dgp = build_dgp(1.0, 0.1, 0.1);
        let mu = Measure::new(dgp.space.clone(), vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        for t in enumerate_trees(2, 3, 4).unwrap() {
            let d = DecoratedTree::new(t.clone(), Arrangement::zeros(7)).unwrap();
            assert_eq!(
                decorated_tree_law(&dgp.q2, &dgp.q_flip, &mu, &d).unwrap(),
                tree_law(&dgp.q2, &mu, &t).unwrap()
            );
        }
    }

    #[test]
    fn single_leaf_with_one_unary_event() {
        let dgp = build_dgp(1.0, 0.1, 0.1);
        let mu = Measure::new(dgp.space.clone(), vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let d = DecoratedTree::new(OrderedTree::leaf(2), Arrangement::new(vec![1]).unwrap()).unwrap();
        assert_eq!(
            decorated_tree_law(&dgp.q2, &dgp.q_flip, &mu, &d).unwrap(),
            apply_unary(&dgp.q_flip, &mu, 1).unwrap()
        );
    }

    #[test]
    fn root_edge_is_applied_last() {
        let dgp = build_dgp(1.0, 0.1, 0.1);
        let mu = Measure::new(dgp.space.clone(), vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let t = OrderedTree::leaf(2).graft(0).unwrap();
        let d = DecoratedTree::new(t.clone(), Arrangement::new(vec![1, 0, 0]).unwrap()).unwrap();
        let expect = apply_unary(&dgp.q_flip, &tree_law(&dgp.q2, &mu, &t).unwrap(), 1).unwrap();
        assert_eq!(decorated_tree_law(&dgp.q2, &dgp.q_flip, &mu, &d).unwrap(), expect);
        // branch 2 is the second child's edge
        let d = DecoratedTree::new(t, Arrangement::new(vec![0, 0, 1]).unwrap()).unwrap();
        let moved = apply_unary(&dgp.q_flip, &mu, 1).unwrap();
        let expect = marginal_interact(&dgp.q2, &[&mu, &moved]).unwrap();
        assert_eq!(decorated_tree_law(&dgp.q2, &dgp.q_flip, &mu, &d).unwrap(), expect);
    }
}
