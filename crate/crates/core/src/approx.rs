//! Additive-3 approximation in O(n log n).
//!
//! The reduction: collapse the standard query universe onto the keys by
//! folding each gap's weight into a neighboring key (the first key also
//! absorbs the outer gaps), solve that successful-queries instance as an
//! optimal alphabetic tree over one inequality operator, then hang one
//! extra comparison under each leaf to split the key from its folded gap
//! (two extra under the leaf that absorbed three classes). The alphabetic
//! optimum is within 2 of the entropy lower bound, and the augmentation
//! adds at most about one expected comparison, giving cost at most the
//! true optimum plus 3.
//!
//! The construction follows whichever inequality operator is available;
//! with only `<=` everything mirrors. When the operator set is exactly
//! `{=}` there is nothing to reduce: [`equality_chain`] builds the
//! optimal chain of equality tests directly.

use crate::alphabetic::{optimal_alphabetic, AlphaNode};
use crate::instances::{CmpOp, Instance, QueryClass};
use crate::trees::{self, Node, Solution, Tree};
use num::{BigRational, One, ToPrimitive, Zero};
use thiserror::Error;

pub use crate::alphabetic::{AlphabeticProblem, AlphaTree};

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ApproxError {
    #[error("operator set is {{=}}; use the equality chain builder")]
    EqualityOnly,
    #[error("weights must sum to 1 (normalize first)")]
    NotNormalized,
    #[error("no correct tree exists for this instance")]
    Infeasible,
    #[error("internal invariant failed: {0}")]
    Internal(String),
}

/// Shannon entropy (bits) of the instance's class weights. Requires the
/// weights to sum to exactly 1; zero-weight classes contribute zero.
pub fn entropy(inst: &Instance) -> Result<f64, ApproxError> {
    if inst.total_weight() != BigRational::one() {
        return Err(ApproxError::NotNormalized);
    }
    Ok(entropy_of(inst.betas().iter().chain(inst.alphas().iter())))
}

/// `-sum w*log2(w)` with `0 log 0 = 0`; callers are responsible for
/// normalization.
pub fn entropy_of<'a, I: IntoIterator<Item = &'a BigRational>>(weights: I) -> f64 {
    let mut h = 0.0;
    for w in weights {
        if w.is_zero() {
            continue;
        }
        let x = w.to_f64().expect("weight in f64 range");
        h -= x * x.log2();
    }
    h
}

/// An optimal alphabetic tree for ordered leaf weights. Internal nodes
/// of such a tree correspond to strict comparisons against the leaf
/// boundaries; the callers materialize them as search-tree nodes.
pub fn alphabetic_tree(problem: &AlphabeticProblem) -> AlphaTree {
    optimal_alphabetic(problem)
}

/// Approximates the optimal tree to within an additive 3, in
/// O(n log n). The result is a correct, irreducible tree; its exact cost
/// is returned.
pub fn approx3(inst: &Instance) -> Result<Solution, ApproxError> {
    let ops = inst.ops();
    if ops.equality_only() {
        return Err(ApproxError::EqualityOnly);
    }
    let n = inst.n();
    let use_lt = ops.contains(CmpOp::Lt);

    let mut folded: Vec<BigRational> = Vec::with_capacity(n);
    for j in 1..=n {
        let w = if use_lt {
            // Leaf j of a `<`-only tree catches [K_j, K_{j+1}): key j and
            // gap j, plus gap 0 at the first leaf.
            let mut w = inst.beta(j) + inst.alpha(j);
            if j == 1 {
                w += inst.alpha(0);
            }
            w
        } else {
            // Mirror for `<=`: leaf j catches (K_{j-1}, K_j], the last
            // leaf also everything above K_n.
            let mut w = inst.alpha(j - 1) + inst.beta(j);
            if j == n {
                w += inst.alpha(n);
            }
            w
        };
        folded.push(w);
    }
    let alpha_tree = optimal_alphabetic(&AlphabeticProblem::new(folded));
    let root = materialize(&alpha_tree.root, inst, use_lt)?;
    let tree = trees::make_irreducible(&Tree::new(root), inst);

    let report = trees::verify(&tree, inst);
    if !report.is_ok() {
        return Err(ApproxError::Internal(format!("built tree fails verification: {report}")));
    }
    let cost = trees::cost_unchecked(&tree, inst);
    Ok(Solution { tree, cost })
}

fn materialize(node: &AlphaNode, inst: &Instance, use_lt: bool) -> Result<Node, ApproxError> {
    match node {
        AlphaNode::Internal(l, r) => {
            // Split after 0-based leaf k: keys 1..=k+1 go left.
            let k = l.max_leaf();
            let (op, key) =
                if use_lt { (CmpOp::Lt, k + 2) } else { (CmpOp::Le, k + 1) };
            Ok(Node::internal(
                op,
                key,
                materialize(l, inst, use_lt)?,
                materialize(r, inst, use_lt)?,
            ))
        }
        AlphaNode::Leaf(i) => augment_leaf(i + 1, inst, use_lt),
    }
}

/// Expands the alphabetic leaf for key `j` into the comparisons that
/// separate the query classes folded into it. Absent classes need no
/// comparison, so leaves shrink when the query set is sparse.
fn augment_leaf(j: usize, inst: &Instance, use_lt: bool) -> Result<Node, ApproxError> {
    use QueryClass::{Gap, Key};
    let n = inst.n();
    let ops = inst.ops();
    let leaf = |c: QueryClass| -> Option<Node> {
        inst.is_query(c).then(|| Node::leaf([c]))
    };

    // One comparison distinguishing the key from its folded gap: equality
    // when available, otherwise the non-tree inequality.
    let separate = |key_leaf: Node, gap_leaf: Node, gap: usize| -> Result<Node, ApproxError> {
        if ops.contains(CmpOp::Eq) {
            Ok(Node::internal(CmpOp::Eq, j, key_leaf, gap_leaf))
        } else if use_lt && ops.contains(CmpOp::Le) && gap == j {
            // Key(j) <= K_j, Gap(j) above it.
            Ok(Node::internal(CmpOp::Le, j, key_leaf, gap_leaf))
        } else if !use_lt && ops.contains(CmpOp::Lt) && gap + 1 == j {
            // Gap(j-1) < K_j, Key(j) not.
            Ok(Node::internal(CmpOp::Lt, j, gap_leaf, key_leaf))
        } else {
            Err(ApproxError::Infeasible)
        }
    };

    let pair = |key_leaf: Option<Node>, gap_leaf: Option<Node>, gap: usize| {
        match (key_leaf, gap_leaf) {
            (Some(k), Some(g)) => separate(k, g, gap),
            (Some(k), None) => Ok(k),
            (None, Some(g)) => Ok(g),
            (None, None) => Ok(Node::empty_leaf()),
        }
    };

    if use_lt {
        if j == 1 {
            // Gap 0, key 1, gap 1: strict comparison first, then the pair.
            let inner = pair(leaf(Key(1)), leaf(Gap(1)), 1)?;
            match leaf(Gap(0)) {
                Some(g0) => Ok(Node::internal(CmpOp::Lt, 1, g0, inner)),
                None => Ok(inner),
            }
        } else {
            pair(leaf(Key(j)), leaf(Gap(j)), j)
        }
    } else if j == n {
        let inner = pair(leaf(Key(n)), leaf(Gap(n - 1)), n - 1)?;
        match leaf(Gap(n)) {
            Some(gn) => Ok(Node::internal(CmpOp::Le, n, inner, gn)),
            None => Ok(inner),
        }
    } else {
        pair(leaf(Key(j)), leaf(Gap(j - 1)), j - 1)
    }
}

/// Optimal tree when only equality tests are allowed: a chain probing
/// keys in decreasing weight order, the final no-branch holding whatever
/// single class needs no test. Feasible only when at most one non-key
/// class is queried.
pub fn equality_chain(inst: &Instance) -> Result<Solution, ApproxError> {
    if !inst.ops().contains(CmpOp::Eq) {
        return Err(ApproxError::Infeasible);
    }
    let gaps: Vec<QueryClass> =
        inst.queries().iter().copied().filter(|q| !q.is_key()).collect();
    if gaps.len() > 1 {
        return Err(ApproxError::Infeasible);
    }
    let mut keys: Vec<usize> = inst
        .queries()
        .iter()
        .filter_map(|q| match q {
            QueryClass::Key(i) => Some(*i),
            QueryClass::Gap(_) => None,
        })
        .collect();
    // Heaviest first; ties by index for determinism.
    keys.sort_by(|&x, &y| inst.beta(y).cmp(inst.beta(x)).then(x.cmp(&y)));

    let (tested, last) = match (keys.as_slice(), gaps.first()) {
        ([], Some(&g)) => (&[] as &[usize], Node::leaf([g])),
        ([], None) => (&[] as &[usize], Node::empty_leaf()),
        (all, Some(&g)) => (all, Node::leaf([g])),
        ([rest @ .., lightest], None) => (rest, Node::leaf([QueryClass::Key(*lightest)])),
    };
    let mut node = last;
    for &k in tested.iter().rev() {
        node = Node::internal(CmpOp::Eq, k, Node::leaf([QueryClass::Key(k)]), node);
    }
    let tree = Tree::new(node);
    let report = trees::verify(&tree, inst);
    if !report.is_ok() {
        return Err(ApproxError::Internal(format!("chain fails verification: {report}")));
    }
    let cost = trees::cost_unchecked(&tree, inst);
    Ok(Solution { tree, cost })
}
