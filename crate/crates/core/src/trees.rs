//! Two-way comparison search trees.
//!
//! An internal node asks a single yes/no comparison `Q op key`; the search
//! follows the yes child on success and the no child otherwise, ending at
//! a leaf. A tree is *correct* for an instance when every query class
//! reaches a leaf it shares with no other class, and *irreducible* when no
//! node's query set equals its parent's (every comparison splits
//! something). Leaves store their class sets explicitly; [`verify`]
//! recomputes the sets and flags any disagreement, which keeps the
//! partition invariant directly checkable.

use crate::instances::{CmpOp, Instance, QueryClass, Weight};
use num::BigRational;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

pub mod rewrite;
mod sexpr;

pub use sexpr::{parse_sexpr, to_sexpr, SexprError};

/// A node: an internal comparison or a leaf labeled with query classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Internal { op: CmpOp, key: usize, yes: Box<Node>, no: Box<Node> },
    Leaf { classes: BTreeSet<QueryClass> },
}

impl Node {
    pub fn internal(op: CmpOp, key: usize, yes: Node, no: Node) -> Node {
        Node::Internal { op, key, yes: Box::new(yes), no: Box::new(no) }
    }

    pub fn leaf<I: IntoIterator<Item = QueryClass>>(classes: I) -> Node {
        Node::Leaf { classes: classes.into_iter().collect() }
    }

    pub fn empty_leaf() -> Node {
        Node::Leaf { classes: BTreeSet::new() }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    /// For a leaf holding exactly one key class, that key's index.
    fn single_key_class(&self) -> Option<usize> {
        match self {
            Node::Leaf { classes } if classes.len() == 1 => match classes.iter().next() {
                Some(QueryClass::Key(i)) => Some(*i),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Internal { yes, no, .. } => 1 + yes.internal_count() + no.internal_count(),
        }
    }
}

/// A search tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    pub root: Node,
}

impl Tree {
    pub fn new(root: Node) -> Tree {
        Tree { root }
    }

    /// The leaf reached by a query of class `q`. Total: every class lands
    /// somewhere.
    pub fn classify(&self, q: QueryClass) -> &Node {
        let mut node = &self.root;
        while let Node::Internal { op, key, yes, no } = node {
            node = if satisfies(q, *op, *key) { yes } else { no };
        }
        node
    }

    /// Number of comparisons made when searching for class `q`.
    pub fn comparisons(&self, q: QueryClass) -> usize {
        let mut node = &self.root;
        let mut count = 0;
        while let Node::Internal { op, key, yes, no } = node {
            count += 1;
            node = if satisfies(q, *op, *key) { yes } else { no };
        }
        count
    }
}

/// A solver result: a tree and its exact cost.
#[derive(Clone, Debug)]
pub struct Solution {
    pub tree: Tree,
    pub cost: BigRational,
}

/// Whether class `q` passes the comparison `Q op key`.
///
/// Only the key class itself satisfies an equality test; inequality tests
/// compare positions on the class line.
pub fn satisfies(q: QueryClass, op: CmpOp, key: usize) -> bool {
    let key_pos = 2 * key - 1;
    match op {
        CmpOp::Eq => q == QueryClass::Key(key),
        CmpOp::Lt => q.position() < key_pos,
        CmpOp::Le => q.position() <= key_pos,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerifyFailure {
    /// Two or more query classes reach the same leaf.
    SharedLeaf { classes: Vec<QueryClass> },
    /// A leaf's stored label differs from the classes that reach it.
    LeafLabelMismatch { reached: Vec<QueryClass>, stored: Vec<QueryClass> },
    /// A node whose query set equals one child's (the comparison splits
    /// nothing).
    Reducible { op: CmpOp, key: usize },
    /// Comparison operator not in the instance's allowed set.
    IllegalOp { op: CmpOp, key: usize },
    /// Key index outside `1..=n`.
    IllegalKey { key: usize },
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyFailure::SharedLeaf { classes } => {
                write!(f, "classes {:?} share a leaf", classes)
            }
            VerifyFailure::LeafLabelMismatch { reached, stored } => {
                write!(f, "leaf labeled {:?} but reached by {:?}", stored, reached)
            }
            VerifyFailure::Reducible { op, key } => {
                write!(f, "node ({} K{}) splits nothing", op, key)
            }
            VerifyFailure::IllegalOp { op, key } => {
                write!(f, "operator {} (at key K{}) not allowed", op, key)
            }
            VerifyFailure::IllegalKey { key } => write!(f, "key index {} out of range", key),
        }
    }
}

/// Outcome of [`verify`]: empty means the tree is correct, irreducible,
/// and uses only allowed operators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub failures: Vec<VerifyFailure>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }

    /// Every query class reaches its own leaf, and leaf labels agree.
    pub fn correct(&self) -> bool {
        !self.failures.iter().any(|f| {
            matches!(
                f,
                VerifyFailure::SharedLeaf { .. } | VerifyFailure::LeafLabelMismatch { .. }
            )
        })
    }

    pub fn irreducible(&self) -> bool {
        !self.failures.iter().any(|f| matches!(f, VerifyFailure::Reducible { .. }))
    }

    pub fn ops_legal(&self) -> bool {
        !self
            .failures
            .iter()
            .any(|f| matches!(f, VerifyFailure::IllegalOp { .. } | VerifyFailure::IllegalKey { .. }))
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, failure) in self.failures.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}", failure)?;
        }
        Ok(())
    }
}

#[derive(Error, Debug)]
pub enum TreeError {
    #[error("tree fails verification: {0}")]
    Unverified(VerifyReport),
    #[error("equality comparisons not allowed; cannot rewrite a leaf parent")]
    EqualityUnavailable,
}

/// Checks correctness, irreducibility, and operator legality.
pub fn verify<W: Weight>(tree: &Tree, inst: &Instance<W>) -> VerifyReport {
    let mut report = VerifyReport::default();
    let queries: Vec<QueryClass> = inst.queries().to_vec();
    verify_walk(&tree.root, inst, queries, &mut report);
    report
}

fn verify_walk<W: Weight>(
    node: &Node,
    inst: &Instance<W>,
    classes: Vec<QueryClass>,
    report: &mut VerifyReport,
) {
    match node {
        Node::Leaf { classes: stored } => {
            if classes.len() > 1 {
                report.failures.push(VerifyFailure::SharedLeaf { classes: classes.clone() });
            }
            let stored_vec: Vec<QueryClass> = stored.iter().copied().collect();
            if stored_vec != classes {
                report.failures.push(VerifyFailure::LeafLabelMismatch {
                    reached: classes,
                    stored: stored_vec,
                });
            }
        }
        Node::Internal { op, key, yes, no } => {
            if *key == 0 || *key > inst.n() {
                report.failures.push(VerifyFailure::IllegalKey { key: *key });
                return;
            }
            if !inst.ops().contains(*op) {
                report.failures.push(VerifyFailure::IllegalOp { op: *op, key: *key });
            }
            let (yes_classes, no_classes): (Vec<_>, Vec<_>) =
                classes.into_iter().partition(|&c| satisfies(c, *op, *key));
            if yes_classes.is_empty() || no_classes.is_empty() {
                report.failures.push(VerifyFailure::Reducible { op: *op, key: *key });
            }
            verify_walk(yes, inst, yes_classes, report);
            verify_walk(no, inst, no_classes, report);
        }
    }
}

/// Expected search cost: the weighted number of comparisons, summed over
/// query classes. Equivalently the sum over internal nodes of the weight
/// reaching them; leaves cost nothing. Rejects trees that fail [`verify`].
pub fn cost<W: Weight>(tree: &Tree, inst: &Instance<W>) -> Result<W, TreeError> {
    let report = verify(tree, inst);
    if !report.is_ok() {
        return Err(TreeError::Unverified(report));
    }
    Ok(cost_unchecked(tree, inst))
}

/// Cost without the verification gate, for trees correct by construction.
pub(crate) fn cost_unchecked<W: Weight>(tree: &Tree, inst: &Instance<W>) -> W {
    let mut acc = W::zero();
    cost_walk(&tree.root, inst, &inst.queries().to_vec(), &mut acc);
    acc
}

fn cost_walk<W: Weight>(node: &Node, inst: &Instance<W>, classes: &[QueryClass], acc: &mut W) {
    if let Node::Internal { op, key, yes, no } = node {
        let mut here = W::zero();
        for &c in classes {
            here = here.plus(inst.weight(c));
        }
        *acc = acc.plus(&here);
        let (yes_classes, no_classes): (Vec<_>, Vec<_>) =
            classes.iter().partition(|&&c| satisfies(c, *op, *key));
        cost_walk(yes, inst, &yes_classes, acc);
        cost_walk(no, inst, &no_classes, acc);
    }
}

/// Cost computed the other way, as weight times root-to-leaf comparisons
/// per class. Agrees with [`cost`] on every tree; kept as an independent
/// accounting for tests.
pub fn cost_by_paths<W: Weight>(tree: &Tree, inst: &Instance<W>) -> W {
    let mut acc = W::zero();
    for &q in inst.queries() {
        let w = inst.weight(q);
        for _ in 0..tree.comparisons(q) {
            acc = acc.plus(w);
        }
    }
    acc
}

/// Splices out every node whose comparison splits nothing: if one child
/// receives the node's whole query set, the node is replaced by that
/// child. Output is correct whenever the input is, never costs more, and
/// has leaf labels rebuilt from the classes that actually reach them.
pub fn make_irreducible<W: Weight>(tree: &Tree, inst: &Instance<W>) -> Tree {
    Tree::new(splice(&tree.root, inst.queries().to_vec()))
}

fn splice(node: &Node, classes: Vec<QueryClass>) -> Node {
    match node {
        Node::Leaf { .. } => Node::leaf(classes),
        Node::Internal { op, key, yes, no } => {
            let (yes_classes, no_classes): (Vec<_>, Vec<_>) =
                classes.into_iter().partition(|&c| satisfies(c, *op, *key));
            if yes_classes.is_empty() {
                splice(no, no_classes)
            } else if no_classes.is_empty() {
                splice(yes, yes_classes)
            } else {
                Node::internal(*op, *key, splice(yes, yes_classes), splice(no, no_classes))
            }
        }
    }
}

/// Rewrites the parent of every single-key leaf into an equality test on
/// that key, with the leaf as yes child. Cost, correctness, and
/// irreducibility are preserved.
///
/// When both children of a node are single-key leaves only one of them can
/// get its equality parent; the smaller key index wins and the other leaf
/// stays as the no child. Requires equality in the allowed operator set
/// whenever at least one rewrite is needed.
pub fn canonicalize_leaf_parents<W: Weight>(
    tree: &Tree,
    inst: &Instance<W>,
) -> Result<Tree, TreeError> {
    let eq_ok = inst.ops().contains(CmpOp::Eq);
    Ok(Tree::new(canon(&tree.root, inst.queries().to_vec(), eq_ok)?))
}

fn canon(node: &Node, classes: Vec<QueryClass>, eq_ok: bool) -> Result<Node, TreeError> {
    match node {
        Node::Leaf { .. } => Ok(Node::leaf(classes)),
        Node::Internal { op, key, yes, no } => {
            let (yes_classes, no_classes): (Vec<_>, Vec<_>) =
                classes.into_iter().partition(|&c| satisfies(c, *op, *key));
            let yes = canon(yes, yes_classes, eq_ok)?;
            let no = canon(no, no_classes, eq_ok)?;
            let target = match (yes.single_key_class(), no.single_key_class()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (Some(a), None) => Some(a),
                (None, Some(b)) => Some(b),
                (None, None) => None,
            };
            match target {
                Some(l) => {
                    if *op == CmpOp::Eq && *key == l && yes.single_key_class() == Some(l) {
                        return Ok(Node::internal(*op, *key, yes, no));
                    }
                    if !eq_ok {
                        return Err(TreeError::EqualityUnavailable);
                    }
                    // The leaf becomes the yes child of an equality node on
                    // its own key; every other class reaching here already
                    // went to the sibling.
                    let (leaf, other) =
                        if yes.single_key_class() == Some(l) { (yes, no) } else { (no, yes) };
                    Ok(Node::internal(CmpOp::Eq, l, leaf, other))
                }
                None => Ok(Node::internal(*op, *key, yes, no)),
            }
        }
    }
}

/// Checks the maximum-likelihood property: every equality node tests a key
/// of maximum weight among the keys still possible at that node. Ties
/// count as attaining the maximum.
pub fn spuler_check<W: Weight>(tree: &Tree, inst: &Instance<W>) -> bool {
    spuler_walk(&tree.root, inst, &inst.queries().to_vec())
}

fn spuler_walk<W: Weight>(node: &Node, inst: &Instance<W>, classes: &[QueryClass]) -> bool {
    match node {
        Node::Leaf { .. } => true,
        Node::Internal { op, key, yes, no } => {
            if *op == CmpOp::Eq {
                if !classes.contains(&QueryClass::Key(*key)) {
                    return false;
                }
                let tested = inst.beta(*key);
                for &c in classes {
                    if let QueryClass::Key(i) = c {
                        if inst.beta(i) > tested {
                            return false;
                        }
                    }
                }
            }
            let (yes_classes, no_classes): (Vec<_>, Vec<_>) =
                classes.iter().partition(|&&c| satisfies(c, *op, *key));
            spuler_walk(yes, inst, &yes_classes) && spuler_walk(no, inst, &no_classes)
        }
    }
}

/// Deterministic DOT rendering; internal nodes show `op key`, edges are
/// labeled `Y`/`N`, leaves are boxes labeled with their classes.
pub fn export_dot<W: Weight>(tree: &Tree, inst: &Instance<W>) -> String {
    let mut out = String::from("digraph tree {\n");
    let mut next_id = 0usize;
    dot_walk(&tree.root, inst, &mut next_id, &mut out);
    out.push_str("}\n");
    out
}

fn dot_walk<W: Weight>(
    node: &Node,
    inst: &Instance<W>,
    next_id: &mut usize,
    out: &mut String,
) -> usize {
    let id = *next_id;
    *next_id += 1;
    match node {
        Node::Leaf { classes } => {
            let label: Vec<String> = classes.iter().map(|&c| inst.class_label(c)).collect();
            let label = if label.is_empty() { "-".to_string() } else { label.join(" ") };
            out.push_str(&format!("  n{} [label=\"{}\", shape=box];\n", id, label));
        }
        Node::Internal { op, key, yes, no } => {
            out.push_str(&format!("  n{} [label=\"{} {}\"];\n", id, op, inst.key_name(*key)));
            let yes_id = dot_walk(yes, inst, next_id, out);
            out.push_str(&format!("  n{} -> n{} [label=\"Y\"];\n", id, yes_id));
            let no_id = dot_walk(no, inst, next_id, out);
            out.push_str(&format!("  n{} -> n{} [label=\"N\"];\n", id, no_id));
        }
    }
    id
}
