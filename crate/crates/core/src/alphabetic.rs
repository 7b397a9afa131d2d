//! Optimal alphabetic binary trees (Garsia–Wachs).
//!
//! Given leaf weights in a fixed left-to-right order, find a binary tree
//! whose leaves keep that order and whose weighted path length is
//! minimum. This is the workhorse behind both the no-equality solver and
//! the additive-3 approximation, where inequality-only search trees are
//! exactly alphabetic trees over the query classes.
//!
//! The combine phase repeatedly takes the leftmost pair `(x, y)` whose
//! left element weighs no more than the element after the pair, merges it,
//! and re-inserts the merged node just after the nearest element to the
//! left of the pair with weight >= the merged weight. The resulting tree
//! is generally *not* alphabetic, but its leaf depths are achievable by an
//! alphabetic tree, which a final left-to-right stack pass reconstructs.
//! Tie handling (<= in the pair rule, >= in the insertion rule) matters;
//! the unit tests pin it against exhaustive enumeration on tie-heavy
//! inputs.

use num::{BigRational, Zero};

/// An ordered sequence of leaf weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphabeticProblem {
    pub weights: Vec<BigRational>,
}

impl AlphabeticProblem {
    pub fn new(weights: Vec<BigRational>) -> AlphabeticProblem {
        AlphabeticProblem { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// A shape over leaf indices `0..m`, leaves in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlphaNode {
    Leaf(usize),
    Internal(Box<AlphaNode>, Box<AlphaNode>),
}

impl AlphaNode {
    /// Rightmost leaf index in this subtree.
    pub fn max_leaf(&self) -> usize {
        match self {
            AlphaNode::Leaf(i) => *i,
            AlphaNode::Internal(_, r) => r.max_leaf(),
        }
    }
}

/// An optimal alphabetic tree: shape, per-leaf depths, and exact cost
/// (sum of weight times depth).
#[derive(Clone, Debug)]
pub struct AlphaTree {
    pub root: AlphaNode,
    pub depths: Vec<usize>,
    pub cost: BigRational,
}

/// Computes an optimal alphabetic tree for the problem. Panics on an
/// empty problem.
pub fn optimal_alphabetic(problem: &AlphabeticProblem) -> AlphaTree {
    let m = problem.len();
    assert!(m > 0, "alphabetic problem needs at least one leaf");
    let depths = garsia_wachs_depths(&problem.weights);
    let root = rebuild(&depths);
    let mut cost = BigRational::zero();
    for (w, &d) in problem.weights.iter().zip(&depths) {
        cost += w * BigRational::from_integer(d.into());
    }
    AlphaTree { root, depths, cost }
}

/// The combine phase; returns each original leaf's depth.
fn garsia_wachs_depths(weights: &[BigRational]) -> Vec<usize> {
    let m = weights.len();
    if m == 1 {
        return vec![0];
    }
    // Arena of combine-tree nodes; leaves are 0..m. The working sequence
    // is a doubly linked list over arena ids, with sentinel slots 0 and 1
    // (head and tail) that compare as +infinity.
    const HEAD: usize = 0;
    const TAIL: usize = 1;
    let mut weight: Vec<BigRational> = Vec::with_capacity(2 * m + 1);
    weight.push(BigRational::zero()); // head placeholder
    weight.push(BigRational::zero()); // tail placeholder
    weight.extend(weights.iter().cloned());
    let mut kids: Vec<Option<(usize, usize)>> = vec![None; m + 2];
    let mut next = vec![usize::MAX; m + 2];
    let mut prev = vec![usize::MAX; m + 2];

    // Initial list: HEAD -> 2 -> 3 -> ... -> m+1 -> TAIL.
    let mut last = HEAD;
    for id in 2..m + 2 {
        next[last] = id;
        prev[id] = last;
        last = id;
    }
    next[last] = TAIL;
    prev[TAIL] = last;

    let infinite = |id: usize| id == HEAD || id == TAIL;
    // w(x) <= w(y) treating sentinels as +infinity.
    let le = |weight: &[BigRational], x: usize, y: usize| {
        if infinite(x) {
            infinite(y)
        } else {
            infinite(y) || weight[x] <= weight[y]
        }
    };

    let mut count = m;
    let mut scan = next[HEAD];
    while count > 1 {
        // Leftmost pair (p, q) with w(p) <= w(after q).
        let mut p = scan;
        loop {
            let q = next[p];
            debug_assert!(!infinite(q), "pair search ran past the end");
            if le(&weight, p, next[q]) {
                break;
            }
            p = q;
        }
        let q = next[p];
        let merged = weight.len();
        weight.push(&weight[p] + &weight[q]);
        kids.push(Some((p, q)));
        next.push(usize::MAX);
        prev.push(usize::MAX);

        // Unlink p and q.
        let left = prev[p];
        let right = next[q];
        next[left] = right;
        prev[right] = left;

        // Walk left to the first element at least as heavy, insert after.
        let mut r = left;
        while !infinite(r) && weight[r] < weight[merged] {
            r = prev[r];
        }
        let after = next[r];
        next[r] = merged;
        prev[merged] = r;
        next[merged] = after;
        prev[after] = merged;

        count -= 1;
        // Resume two elements left of the insertion: the only pairs whose
        // inputs changed are at or right of there.
        scan = merged;
        for _ in 0..2 {
            if !infinite(prev[scan]) {
                scan = prev[scan];
            }
        }
    }

    // Leaf depths are distances from the surviving root in the combine
    // tree.
    let root = next[HEAD];
    let mut depths = vec![0usize; m];
    let mut stack = vec![(root, 0usize)];
    while let Some((id, d)) = stack.pop() {
        match kids[id] {
            Some((l, r)) => {
                stack.push((l, d + 1));
                stack.push((r, d + 1));
            }
            None => depths[id - 2] = d,
        }
    }
    depths
}

/// Builds the alphabetic tree realizing a depth sequence, left to right:
/// push each leaf at its depth and merge equal-depth neighbors.
fn rebuild(depths: &[usize]) -> AlphaNode {
    let mut stack: Vec<(AlphaNode, usize)> = Vec::new();
    for (i, &d) in depths.iter().enumerate() {
        let mut node = (AlphaNode::Leaf(i), d);
        while let Some(top) = stack.last() {
            if top.1 == node.1 && node.1 > 0 {
                let (left, d_top) = stack.pop().unwrap();
                node = (AlphaNode::Internal(Box::new(left), Box::new(node.0)), d_top - 1);
            } else {
                break;
            }
        }
        stack.push(node);
    }
    assert!(
        stack.len() == 1 && stack[0].1 == 0,
        "depth sequence is not alphabetic: {depths:?}"
    );
    stack.pop().unwrap().0
}
