//! Correctness-preserving subtree rewrites.
//!
//! Four local patterns over comparison nodes, exposed as standalone
//! operations rather than an optimizer pass: their job here is property
//! testing (every query class must classify identically before and
//! after). Each rule rearranges whole subtrees and never touches leaf
//! labels.
//!
//! Preconditions use the yes-set of an inequality node, the downward-
//! closed set of class positions passing the comparison. `(<, k)` accepts
//! positions up to `2k-2`, `(<=, k)` up to `2k-1`; containment of yes-sets
//! is a comparison of those bounds.

use super::Node;
use crate::instances::{CmpOp, QueryClass};
use thiserror::Error;

/// Which rewrite to attempt.
///
/// - `A1`: leaf promotion — an equality root over a leaf and an
///   inequality child commutes with the inequality; the orientation
///   depends on whether the tested key passes the child's comparison.
/// - `A2`: rotation between an inequality node and its inequality child;
///   applies in either orientation and is its own inverse.
/// - `A3`: rotation composed with leaf promotion, hoisting the deepest
///   inequality above an equality root. Requires the equality key to fail
///   the hoisted comparison.
/// - `A4`: double rotation hoisting a grandchild inequality to the top.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewriteRule {
    A1,
    A2,
    A3,
    A4,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum RewriteError {
    #[error("subtree does not match {rule:?}: {reason}")]
    PatternMismatch { rule: RewriteRule, reason: &'static str },
}

fn mismatch(rule: RewriteRule, reason: &'static str) -> RewriteError {
    RewriteError::PatternMismatch { rule, reason }
}

/// Greatest class position accepted by an inequality comparison.
fn yes_bound(op: CmpOp, key: usize) -> Option<usize> {
    match op {
        CmpOp::Lt => Some(2 * key - 2),
        CmpOp::Le => Some(2 * key - 1),
        CmpOp::Eq => None,
    }
}

fn key_passes(a: usize, op: CmpOp, key: usize) -> bool {
    super::satisfies(QueryClass::Key(a), op, key)
}

struct Ineq<'a> {
    op: CmpOp,
    key: usize,
    bound: usize,
    yes: &'a Node,
    no: &'a Node,
}

fn as_ineq(node: &Node) -> Option<Ineq<'_>> {
    match node {
        Node::Internal { op, key, yes, no } => {
            yes_bound(*op, *key).map(|bound| Ineq { op: *op, key: *key, bound, yes, no })
        }
        _ => None,
    }
}

/// Applies `rule` to the root of `subtree`, returning the rewritten
/// subtree. Classification of every query class is unchanged. Errors when
/// the root does not match the rule's pattern or a side condition fails.
pub fn rewrite(subtree: &Node, rule: RewriteRule) -> Result<Node, RewriteError> {
    match rule {
        RewriteRule::A1 => rewrite_a1(subtree),
        RewriteRule::A2 => rewrite_a2(subtree),
        RewriteRule::A3 => rewrite_a3(subtree),
        RewriteRule::A4 => rewrite_a4(subtree),
    }
}

/// `(= a) [leaf, (≺ b) [T0, T1]]` becomes the inequality first, with the
/// equality pushed into the side the key `a` belongs to.
fn rewrite_a1(subtree: &Node) -> Result<Node, RewriteError> {
    let rule = RewriteRule::A1;
    let Node::Internal { op: CmpOp::Eq, key: a, yes: leaf, no: rest } = subtree else {
        return Err(mismatch(rule, "root is not an equality node over a yes-leaf"));
    };
    if !leaf.is_leaf() {
        return Err(mismatch(rule, "equality yes child is not a leaf"));
    }
    let Some(child) = as_ineq(rest) else {
        return Err(mismatch(rule, "equality no child is not an inequality node"));
    };
    let eq_over = |t: &Node| Node::internal(CmpOp::Eq, *a, leaf.as_ref().clone(), t.clone());
    Ok(if key_passes(*a, child.op, child.key) {
        Node::internal(child.op, child.key, eq_over(child.yes), child.no.clone())
    } else {
        Node::internal(child.op, child.key, child.yes.clone(), eq_over(child.no))
    })
}

/// Rotation: `(≺ b) [T0, (≺ c) [T10, T11]]` with yes-set(b) ⊆ yes-set(c)
/// exchanges with `(≺ c) [(≺ b) [T0, T10], T11]`. Tried left-to-right
/// first, then in the inverse orientation.
fn rewrite_a2(subtree: &Node) -> Result<Node, RewriteError> {
    let rule = RewriteRule::A2;
    let Some(root) = as_ineq(subtree) else {
        return Err(mismatch(rule, "root is not an inequality node"));
    };
    if let Some(inner) = as_ineq(root.no) {
        if root.bound <= inner.bound {
            return Ok(Node::internal(
                inner.op,
                inner.key,
                Node::internal(root.op, root.key, root.yes.clone(), inner.yes.clone()),
                inner.no.clone(),
            ));
        }
    }
    if let Some(inner) = as_ineq(root.yes) {
        if inner.bound <= root.bound {
            return Ok(Node::internal(
                inner.op,
                inner.key,
                inner.yes.clone(),
                Node::internal(root.op, root.key, inner.no.clone(), root.no.clone()),
            ));
        }
    }
    Err(mismatch(rule, "no rotatable inequality child with nested yes-sets"))
}

/// `(= a) [leaf, (≺ b) [T0, (≺ c) [T10, T11]]]` with yes-set(b) ⊆
/// yes-set(c) and key `a` failing `(≺ c)` becomes
/// `(≺ c) [(≺ b) [T0, T10], (= a) [leaf, T11]]`.
fn rewrite_a3(subtree: &Node) -> Result<Node, RewriteError> {
    let rule = RewriteRule::A3;
    let Node::Internal { op: CmpOp::Eq, key: a, yes: leaf, no: rest } = subtree else {
        return Err(mismatch(rule, "root is not an equality node over a yes-leaf"));
    };
    if !leaf.is_leaf() {
        return Err(mismatch(rule, "equality yes child is not a leaf"));
    }
    let Some(b) = as_ineq(rest) else {
        return Err(mismatch(rule, "equality no child is not an inequality node"));
    };
    let Some(c) = as_ineq(b.no) else {
        return Err(mismatch(rule, "grandchild is not an inequality node"));
    };
    if b.bound > c.bound {
        return Err(mismatch(rule, "inner yes-set not contained in outer"));
    }
    if key_passes(*a, c.op, c.key) {
        return Err(mismatch(rule, "equality key passes the hoisted comparison"));
    }
    Ok(Node::internal(
        c.op,
        c.key,
        Node::internal(b.op, b.key, b.yes.clone(), c.yes.clone()),
        Node::internal(CmpOp::Eq, *a, leaf.as_ref().clone(), c.no.clone()),
    ))
}

/// `(≺ b) [T0, (≺ c) [(≺ e) [T100, T101], T11]]` with yes-set(b) ⊆
/// yes-set(e) ⊆ yes-set(c) becomes
/// `(≺ e) [(≺ b) [T0, T100], (≺ c) [T101, T11]]`.
fn rewrite_a4(subtree: &Node) -> Result<Node, RewriteError> {
    let rule = RewriteRule::A4;
    let Some(b) = as_ineq(subtree) else {
        return Err(mismatch(rule, "root is not an inequality node"));
    };
    let Some(c) = as_ineq(b.no) else {
        return Err(mismatch(rule, "no child is not an inequality node"));
    };
    let Some(e) = as_ineq(c.yes) else {
        return Err(mismatch(rule, "grandchild is not an inequality node"));
    };
    if !(b.bound <= e.bound && e.bound <= c.bound) {
        return Err(mismatch(rule, "yes-sets not nested"));
    }
    Ok(Node::internal(
        e.op,
        e.key,
        Node::internal(b.op, b.key, b.yes.clone(), e.yes.clone()),
        Node::internal(c.op, c.key, e.no.clone(), c.no.clone()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Instance, OpSet, QueryClass};
    use crate::trees::{cost_by_paths, Tree};
    use num::BigRational;

    fn rat(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    /// Leaf tagged with a distinct gap class so classification targets can
    /// be told apart.
    fn tag(i: usize) -> Node {
        Node::leaf([QueryClass::Gap(i)])
    }

    fn assert_classification_preserved(n: usize, before: &Node, after: &Node) {
        for p in 0..=2 * n {
            let q = QueryClass::from_position(p);
            let before_leaf = Tree::new(before.clone());
            let after_leaf = Tree::new(after.clone());
            assert_eq!(
                before_leaf.classify(q),
                after_leaf.classify(q),
                "class {q} diverges"
            );
        }
    }

    #[test]
    fn a1_promotes_leaf_on_both_sides() {
        // a = 2 passes (< 3): equality sinks into the yes side.
        let t = Node::internal(
            CmpOp::Eq,
            2,
            Node::leaf([QueryClass::Key(2)]),
            Node::internal(CmpOp::Lt, 3, tag(0), tag(3)),
        );
        let r = rewrite(&t, RewriteRule::A1).unwrap();
        assert!(matches!(r, Node::Internal { op: CmpOp::Lt, key: 3, .. }));
        assert_classification_preserved(4, &t, &r);

        // a = 3 fails (<= 2): equality sinks into the no side.
        let t = Node::internal(
            CmpOp::Eq,
            3,
            Node::leaf([QueryClass::Key(3)]),
            Node::internal(CmpOp::Le, 2, tag(0), tag(4)),
        );
        let r = rewrite(&t, RewriteRule::A1).unwrap();
        assert_classification_preserved(4, &t, &r);
    }

    #[test]
    fn a2_preserves_classification() {
        let t = Node::internal(
            CmpOp::Lt,
            2,
            tag(0),
            Node::internal(CmpOp::Le, 3, tag(2), tag(4)),
        );
        let r = rewrite(&t, RewriteRule::A2).unwrap();
        assert!(matches!(r, Node::Internal { op: CmpOp::Le, key: 3, .. }));
        assert_classification_preserved(4, &t, &r);
    }

    #[test]
    fn a2_twice_is_identity() {
        let t = Node::internal(
            CmpOp::Lt,
            2,
            tag(0),
            Node::internal(CmpOp::Lt, 4, tag(2), tag(4)),
        );
        let once = rewrite(&t, RewriteRule::A2).unwrap();
        let twice = rewrite(&once, RewriteRule::A2).unwrap();
        assert_eq!(twice, t);
    }

    #[test]
    fn a2_rejects_non_nested() {
        let t = Node::internal(
            CmpOp::Le,
            4,
            tag(0),
            Node::internal(CmpOp::Lt, 2, tag(1), tag(3)),
        );
        assert!(rewrite(&t, RewriteRule::A2).is_err());
    }

    #[test]
    fn a3_preserves_classification() {
        // Root tests key 4, which fails (<= 3); inner bounds nested.
        let t = Node::internal(
            CmpOp::Eq,
            4,
            Node::leaf([QueryClass::Key(4)]),
            Node::internal(
                CmpOp::Lt,
                2,
                tag(0),
                Node::internal(CmpOp::Le, 3, tag(2), tag(5)),
            ),
        );
        let r = rewrite(&t, RewriteRule::A3).unwrap();
        assert!(matches!(r, Node::Internal { op: CmpOp::Le, key: 3, .. }));
        assert_classification_preserved(5, &t, &r);
    }

    #[test]
    fn a3_rejects_passing_key() {
        let t = Node::internal(
            CmpOp::Eq,
            1,
            Node::leaf([QueryClass::Key(1)]),
            Node::internal(
                CmpOp::Lt,
                2,
                tag(0),
                Node::internal(CmpOp::Le, 3, tag(2), tag(5)),
            ),
        );
        // Key 1 satisfies (<= 3), so the hoist would misroute it.
        assert!(rewrite(&t, RewriteRule::A3).is_err());
    }

    #[test]
    fn a4_preserves_classification_and_cost_delta() {
        let t0 = tag(0);
        let t100 = tag(2);
        let t101 = tag(3);
        let t11 = tag(5);
        let before = Node::internal(
            CmpOp::Lt,
            2,
            t0,
            Node::internal(
                CmpOp::Le,
                4,
                Node::internal(CmpOp::Le, 3, t100, t101),
                t11,
            ),
        );
        let after = rewrite(&before, RewriteRule::A4).unwrap();
        assert_classification_preserved(5, &before, &after);

        // Cost change equals weight(T0) - weight(T10) where T10 is the
        // hoisted grandchild's subtree.
        let inst = Instance::standard(
            (1..=5).map(|i| format!("K{i}")).collect(),
            OpSet::all(),
            vec![rat(7), rat(0), rat(2), rat(3), rat(0), rat(11)],
            vec![rat(0); 5],
        )
        .unwrap();
        let before_cost = cost_by_paths(&Tree::new(before), &inst);
        let after_cost = cost_by_paths(&Tree::new(after), &inst);
        let w_t0 = rat(7);
        let w_t10 = rat(2) + rat(3);
        assert_eq!(after_cost - before_cost, w_t0 - w_t10);
    }

    #[test]
    fn a4_requires_nested_bounds() {
        let t = Node::internal(
            CmpOp::Lt,
            3,
            tag(0),
            Node::internal(
                CmpOp::Le,
                4,
                Node::internal(CmpOp::Lt, 2, tag(2), tag(3)),
                tag(5),
            ),
        );
        // bound(<,3) = 4 > bound(<,2) = 2: not nested.
        assert!(rewrite(&t, RewriteRule::A4).is_err());
    }
}
