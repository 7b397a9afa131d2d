//! Exact solving without equality tests, in O(n log n).
//!
//! When only inequality comparisons are allowed, open gaps behave exactly
//! like keys: the query classes in order become the key set of a
//! successful-queries instance over `<` alone, which is an alphabetic
//! coding problem. Solving it optimally and relabeling each comparison
//! back to an allowed operator on a real key yields an optimal tree for
//! the original instance at the same cost.
//!
//! The forward direction (mapping a tree for the original instance onto
//! the reduced one) is also provided; tests use it to certify cost
//! equality both ways.

use crate::alphabetic::{optimal_alphabetic, AlphabeticProblem, AlphaNode};
use crate::instances::{CmpOp, Instance, InstanceError, KeyKind, OpSet, QueryClass};
use crate::trees::{self, Node, Solution, Tree};
use num::BigRational;
use thiserror::Error;

#[derive(Error, Debug, PartialEq, Eq)]
pub enum NoeqError {
    #[error("equality is in the operator set; this reduction does not apply")]
    EqualityAllowed,
    #[error("no correct tree exists: boundary between {0} and {1} is not expressible")]
    NoCorrectTree(QueryClass, QueryClass),
    #[error("tree node ({0} K{1}) has no query on one side; reduce from an irreducible tree")]
    NotIrreducible(CmpOp, usize),
    #[error("internal invariant failed: {0}")]
    Internal(String),
}

/// The alphabetic problem an instance reduces to: one leaf per query
/// class, in class order, carrying that class's weight.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub problem: AlphabeticProblem,
    pub classes: Vec<QueryClass>,
}

/// Reduces an equality-free instance to alphabetic coding.
pub fn reduce_noeq(inst: &Instance) -> Result<Reduction, NoeqError> {
    if inst.ops().contains(CmpOp::Eq) {
        return Err(NoeqError::EqualityAllowed);
    }
    let classes: Vec<QueryClass> = inst.queries().to_vec();
    let weights: Vec<BigRational> = classes.iter().map(|&q| inst.weight(q).clone()).collect();
    Ok(Reduction { problem: AlphabeticProblem::new(weights), classes })
}

/// The reduced instance as a first-class successful-queries instance
/// over `<`, with one pseudo-key per query class.
pub fn reduced_instance(inst: &Instance) -> Result<Instance, NoeqError> {
    let reduction = reduce_noeq(inst)?;
    let m = reduction.classes.len();
    let keys: Vec<String> = (0..m).map(|i| format!("q{i:06}")).collect();
    Instance::with_key_kind(
        keys,
        KeyKind::Str,
        (1..=m).map(QueryClass::Key).collect(),
        OpSet::of(&[CmpOp::Lt]),
        vec![BigRational::from_integer(0.into()); m + 1],
        reduction.problem.weights,
    )
    .map_err(|e: InstanceError| NoeqError::Internal(e.to_string()))
}

/// Picks an allowed comparison that routes exactly the classes up to
/// `left` into the yes branch, where `left` and `right` are consecutive
/// query classes.
fn boundary_comparison(
    ops: OpSet,
    left: QueryClass,
    right: QueryClass,
) -> Result<(CmpOp, usize), NoeqError> {
    // A cut position c sends positions <= c left; even cuts need `<`
    // (key c/2+1), odd cuts need `<=` (key (c+1)/2). Any cut in
    // [pos(left), pos(right)-1] works. The canonical choice is the cut
    // just below the right class; when classes are absent in between the
    // window is wider and other parities become available.
    for cut in (left.position()..right.position()).rev() {
        let (op, key) =
            if cut % 2 == 1 { (CmpOp::Le, (cut + 1) / 2) } else { (CmpOp::Lt, cut / 2 + 1) };
        if ops.contains(op) {
            return Ok((op, key));
        }
    }
    Err(NoeqError::NoCorrectTree(left, right))
}

/// Materializes an alphabetic shape over the query classes as a tree for
/// the original instance: each internal split becomes the allowed
/// comparison separating its boundary classes; same depths, same cost.
pub fn lift_tree(shape: &AlphaNode, inst: &Instance) -> Result<Tree, NoeqError> {
    if inst.ops().contains(CmpOp::Eq) {
        return Err(NoeqError::EqualityAllowed);
    }
    let classes: Vec<QueryClass> = inst.queries().to_vec();
    Ok(Tree::new(lift(shape, &classes, inst.ops())?))
}

fn lift(node: &AlphaNode, classes: &[QueryClass], ops: OpSet) -> Result<Node, NoeqError> {
    match node {
        AlphaNode::Leaf(i) => Ok(Node::leaf([classes[*i]])),
        AlphaNode::Internal(l, r) => {
            let boundary = l.max_leaf();
            let (op, key) = boundary_comparison(ops, classes[boundary], classes[boundary + 1])?;
            Ok(Node::internal(op, key, lift(l, classes, ops)?, lift(r, classes, ops)?))
        }
    }
}

/// Maps a correct irreducible tree for the instance onto the reduced
/// instance: every comparison becomes `<` against the least pseudo-key
/// at or above its cut. Depths are preserved class by class, hence so is
/// the cost. Used to certify the reduction in both directions.
pub fn project_tree(tree: &Tree, inst: &Instance) -> Result<(Instance, Tree), NoeqError> {
    let reduced = reduced_instance(inst)?;
    let classes: Vec<QueryClass> = inst.queries().to_vec();
    let root = project(&tree.root, &classes)?;
    Ok((reduced, Tree::new(root)))
}

fn project(node: &Node, classes: &[QueryClass]) -> Result<Node, NoeqError> {
    match node {
        Node::Leaf { classes: stored } => {
            let mapped = stored.iter().map(|q| {
                let rank = classes.binary_search(q).map_err(|_| {
                    NoeqError::Internal(format!("leaf class {q} not in the query set"))
                })?;
                Ok(QueryClass::Key(rank + 1))
            });
            Ok(Node::leaf(mapped.collect::<Result<Vec<_>, NoeqError>>()?))
        }
        Node::Internal { op, key, yes, no } => {
            // First query class failing the comparison; the reduced node
            // tests `< that class`.
            let cut = match op {
                CmpOp::Lt => 2 * key - 1,
                CmpOp::Le => 2 * key,
                CmpOp::Eq => return Err(NoeqError::EqualityAllowed),
            };
            let rank = classes.partition_point(|q| q.position() < cut);
            if rank == 0 || rank == classes.len() {
                return Err(NoeqError::NotIrreducible(*op, *key));
            }
            Ok(Node::internal(
                CmpOp::Lt,
                rank + 1,
                project(yes, classes)?,
                project(no, classes)?,
            ))
        }
    }
}

/// Optimal tree for an equality-free instance via the alphabetic
/// reduction.
pub fn solve_noeq(inst: &Instance) -> Result<Solution, NoeqError> {
    let reduction = reduce_noeq(inst)?;
    if reduction.classes.len() <= 1 {
        let tree = Tree::new(Node::leaf(reduction.classes.iter().copied()));
        let cost = trees::cost_unchecked(&tree, inst);
        return Ok(Solution { tree, cost });
    }
    let alpha_tree = optimal_alphabetic(&reduction.problem);
    let tree = lift_tree(&alpha_tree.root, inst)?;
    let report = trees::verify(&tree, inst);
    if !report.is_ok() {
        return Err(NoeqError::Internal(format!("lifted tree fails verification: {report}")));
    }
    let cost = trees::cost_unchecked(&tree, inst);
    if cost != alpha_tree.cost {
        return Err(NoeqError::Internal(format!(
            "lift changed cost: alphabetic {} vs tree {}",
            alpha_tree.cost, cost
        )));
    }
    Ok(Solution { tree, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp;
    use crate::instances::parse_instance;
    use crate::trees::{cost, verify};
    use num::Zero;

    fn rat(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn reduction_keeps_weights_in_class_order() {
        let inst =
            parse_instance("ops: < <=\nkeys: A B\nbeta: 2 3\nalpha: 1 0 4\n").unwrap();
        let red = reduce_noeq(&inst).unwrap();
        assert_eq!(red.problem.weights, vec![rat(1), rat(2), rat(0), rat(3), rat(4)]);
        assert_eq!(red.classes.len(), 5);

        let succ = parse_instance("ops: <\nkeys: A B C\nbeta: 1 2 3\n").unwrap();
        assert_eq!(reduce_noeq(&succ).unwrap().problem.len(), 3);

        let eq = parse_instance("ops: < =\nkeys: A\nbeta: 1\n").unwrap();
        assert_eq!(reduce_noeq(&eq).unwrap_err(), NoeqError::EqualityAllowed);
    }

    #[test]
    fn lift_uses_paper_mapping() {
        use crate::alphabetic::AlphaNode::{Internal, Leaf};
        // Standard queries over two keys: classes Gap0 K1 Gap1 K2 Gap2.
        let inst =
            parse_instance("ops: < <=\nkeys: A B\nbeta: 1 1\nalpha: 1 1 1\n").unwrap();
        // Boundary before K1 (a key): "< A". Boundary before Gap1: "<= A".
        let shape = Internal(
            Box::new(Leaf(0)),
            Box::new(Internal(
                Box::new(Leaf(1)),
                Box::new(Internal(
                    Box::new(Leaf(2)),
                    Box::new(Internal(Box::new(Leaf(3)), Box::new(Leaf(4)))),
                )),
            )),
        );
        let tree = lift_tree(&shape, &inst).unwrap();
        let rendered = trees::to_sexpr(&tree, &inst);
        assert_eq!(
            rendered,
            "(< A (leaf Gap0) (<= A (leaf A) (< B (leaf Gap1) (<= B (leaf B) (leaf Gap2)))))"
        );
        assert!(verify(&tree, &inst).is_ok());
    }

    #[test]
    fn solve_matches_exact_dp() {
        for text in [
            "ops: < <=\nkeys: A B C\nbeta: 1 2 3\nalpha: 1 0 0 1\n",
            "ops: <\nkeys: A B C D\nbeta: 1 1 1 1\n",
            "ops: <=\nkeys: A B\nbeta: 3 1\nqueries: keys-only\n",
            "ops: < <=\nkeys: A B C D E\nbeta: 5 0 2 0 5\nalpha: 1 1 1 1 1 1\n",
        ] {
            let inst = parse_instance(text).unwrap();
            let fast = solve_noeq(&inst).unwrap();
            assert!(verify(&fast.tree, &inst).is_ok(), "{text}");
            let exact = dp::solve(&inst).unwrap();
            assert_eq!(fast.cost, exact.cost, "{text}");
        }
    }

    #[test]
    fn uniform_four_keys_balanced() {
        let inst = parse_instance("ops: <\nkeys: A B C D\nbeta: 2 2 2 2\n").unwrap();
        let sol = solve_noeq(&inst).unwrap();
        assert_eq!(sol.cost, rat(16));
    }

    #[test]
    fn singleton_query_set_is_a_leaf() {
        let inst = parse_instance("ops: <\nkeys: A\nbeta: 4\n").unwrap();
        let sol = solve_noeq(&inst).unwrap();
        assert!(sol.tree.root.is_leaf());
        assert_eq!(sol.cost, BigRational::zero());
    }

    #[test]
    fn infeasible_boundaries_are_reported() {
        // `<` alone cannot separate K2 | Gap2.
        let inst = parse_instance("ops: <\nkeys: A B\nbeta: 1 1\nalpha: 1 1 1\n").unwrap();
        assert!(matches!(solve_noeq(&inst).unwrap_err(), NoeqError::NoCorrectTree(..)));
        // `<=` alone cannot separate Gap0 | K1.
        let inst =
            parse_instance("ops: <=\nkeys: A B\nbeta: 1 1\nalpha: 1 1 1\n").unwrap();
        assert!(matches!(solve_noeq(&inst).unwrap_err(), NoeqError::NoCorrectTree(..)));
    }

    #[test]
    fn sparse_query_sets_use_interior_cuts() {
        // Only Gap0 and K2 are queried; separating them with `<=` alone
        // needs the cut at K1, strictly inside the boundary window.
        let inst = crate::instances::Instance::new(
            vec!["A".into(), "B".into()],
            vec![QueryClass::Gap(0), QueryClass::Key(2)],
            crate::instances::OpSet::of(&[CmpOp::Le]),
            vec![rat(3), rat(0), rat(0)],
            vec![rat(0), rat(5)],
        )
        .unwrap();
        let sol = solve_noeq(&inst).unwrap();
        assert!(verify(&sol.tree, &inst).is_ok());
        assert_eq!(sol.cost, dp::solve(&inst).unwrap().cost);
    }

    #[test]
    fn projection_preserves_cost() {
        let inst =
            parse_instance("ops: < <=\nkeys: A B C\nbeta: 2 5 1\nalpha: 1 0 3 2\n").unwrap();
        let sol = solve_noeq(&inst).unwrap();
        let (reduced, projected) = project_tree(&sol.tree, &inst).unwrap();
        assert!(verify(&projected, &reduced).is_ok());
        assert_eq!(cost(&projected, &reduced).unwrap(), sol.cost);
    }
}
