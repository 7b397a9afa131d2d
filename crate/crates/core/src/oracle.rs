//! Exponential-time exact references.
//!
//! Every polynomial solver in this crate is validated against one of
//! these. [`brute_2wcst`] evaluates the unrestricted recurrence over
//! arbitrary query subsets — intervals minus *any* set of keys, not just
//! the heaviest — so it carries no maximum-likelihood assumption and can
//! falsify one. [`enumerate_trees`] is the even dumber reference:
//! literally every correct irreducible tree. [`brute_split`] and
//! [`brute_gbst`] memoize the split-tree recurrences over
//! (interval, deleted-subset) states.
//!
//! State spaces are O(n^2 * 2^n); calls are rejected above
//! [`MAX_ORACLE_KEYS`].

use crate::instances::{CmpOp, Instance, QueryClass};
use crate::scaled::{ScaleError, ScaledInstance};
use crate::trees::{Node, Solution, Tree};
use num::BigRational;
use std::collections::HashMap;
use thiserror::Error;

/// Largest key count the oracles accept.
pub const MAX_ORACLE_KEYS: usize = 12;

#[derive(Error, Debug, PartialEq, Eq)]
pub enum OracleError {
    #[error("{n} keys exceeds the oracle limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("no correct tree exists for this instance")]
    Infeasible,
    #[error("enumeration exceeds cap of {cap} trees")]
    TooMany { cap: usize },
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

fn check_size(n: usize) -> Result<(), OracleError> {
    if n > MAX_ORACLE_KEYS {
        return Err(OracleError::TooLarge { n, max: MAX_ORACLE_KEYS });
    }
    Ok(())
}

/// Yes-side bound of an inequality comparison on the position line.
fn bound(op: CmpOp, key: usize) -> usize {
    match op {
        CmpOp::Lt => 2 * key - 2,
        CmpOp::Le => 2 * key - 1,
        CmpOp::Eq => unreachable!("equality has no interval bound"),
    }
}

#[derive(Clone, Copy, Debug)]
enum Choice {
    Leaf,
    Eq(usize),
    Split(CmpOp, usize),
}

type BruteKey = (u8, u8, u16);

struct Brute2<'a> {
    inst: &'a Instance,
    scaled: ScaledInstance,
    /// Position -> membership in the query set.
    is_query: Vec<bool>,
    /// Prefix class counts: classes at positions < p.
    qcnt: Vec<usize>,
    /// Prefix weights of query classes at positions < p.
    wsum: Vec<i128>,
    memo: HashMap<BruteKey, Option<(i128, Choice)>>,
}

impl<'a> Brute2<'a> {
    fn new(inst: &'a Instance) -> Result<Brute2<'a>, OracleError> {
        let scaled = ScaledInstance::new(inst)?;
        let positions = inst.num_positions();
        let mut is_query = vec![false; positions];
        for &q in inst.queries() {
            is_query[q.position()] = true;
        }
        let mut qcnt = vec![0usize; positions + 1];
        let mut wsum = vec![0i128; positions + 1];
        for p in 0..positions {
            let class = QueryClass::from_position(p);
            qcnt[p + 1] = qcnt[p] + is_query[p] as usize;
            wsum[p + 1] = wsum[p] + if is_query[p] { scaled.weight(class) } else { 0 };
        }
        Ok(Brute2 { inst, scaled, is_query, qcnt, wsum, memo: HashMap::new() })
    }

    fn key_bit(j: usize) -> u16 {
        1 << (j - 1)
    }

    /// Mask of query-set keys with positions inside `[a, b]`.
    fn range_keys(&self, a: usize, b: usize) -> u16 {
        let mut mask = 0u16;
        for j in 1..=self.inst.n() {
            let p = 2 * j - 1;
            if p >= a && p <= b && self.is_query[p] {
                mask |= Self::key_bit(j);
            }
        }
        mask
    }

    fn classes_in(&self, a: usize, b: usize) -> usize {
        self.qcnt[b + 1] - self.qcnt[a]
    }

    fn masked_weight(&self, mask: u16) -> i128 {
        let mut total = 0;
        let mut m = mask;
        while m != 0 {
            let j = m.trailing_zeros() as usize + 1;
            total += self.scaled.beta[j - 1];
            m &= m - 1;
        }
        total
    }

    fn opt(&mut self, a: usize, b: usize, mask: u16) -> Option<(i128, Choice)> {
        let key = (a as u8, b as u8, mask);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let result = self.compute(a, b, mask);
        self.memo.insert(key, result);
        result
    }

    fn compute(&mut self, a: usize, b: usize, mask: u16) -> Option<(i128, Choice)> {
        let classes = self.classes_in(a, b) - mask.count_ones() as usize;
        if classes <= 1 {
            return Some((0, Choice::Leaf));
        }
        let omega = self.wsum[b + 1] - self.wsum[a] - self.masked_weight(mask);
        let ops = self.inst.ops();
        let mut best: Option<(i128, Choice)> = None;

        if ops.contains(CmpOp::Eq) {
            // Remove any present key, not only a heaviest one.
            for j in 1..=self.inst.n() {
                let p = 2 * j - 1;
                let bit = Self::key_bit(j);
                if p < a || p > b || !self.is_query[p] || mask & bit != 0 {
                    continue;
                }
                if let Some((sub, _)) = self.opt(a, b, mask | bit) {
                    if best.as_ref().is_none_or(|(c, _)| sub < *c) {
                        best = Some((sub, Choice::Eq(j)));
                    }
                }
            }
        }
        for op in [CmpOp::Lt, CmpOp::Le] {
            if !ops.contains(op) {
                continue;
            }
            for k in 1..=self.inst.n() {
                let cut = bound(op, k);
                if cut < a || cut >= b {
                    continue;
                }
                let yes_mask = mask & self.range_keys(a, cut);
                let no_mask = mask & self.range_keys(cut + 1, b);
                let yes_classes = self.classes_in(a, cut) - yes_mask.count_ones() as usize;
                let no_classes = self.classes_in(cut + 1, b) - no_mask.count_ones() as usize;
                if yes_classes == 0 || no_classes == 0 {
                    continue;
                }
                let yes = self.opt(a, cut, yes_mask);
                let no = self.opt(cut + 1, b, no_mask);
                if let (Some((cy, _)), Some((cn, _))) = (yes, no) {
                    let sub = cy + cn;
                    if best.as_ref().is_none_or(|(c, _)| sub < *c) {
                        best = Some((sub, Choice::Split(op, k)));
                    }
                }
            }
        }
        best.map(|(sub, choice)| (omega + sub, choice))
    }

    fn build(&mut self, a: usize, b: usize, mask: u16) -> Node {
        let (_, choice) = self.opt(a, b, mask).expect("building an infeasible subproblem");
        match choice {
            Choice::Leaf => {
                let classes: Vec<QueryClass> = (a..=b)
                    .filter(|&p| self.is_query[p])
                    .map(QueryClass::from_position)
                    .filter(|q| match q {
                        QueryClass::Key(j) => mask & Self::key_bit(*j) == 0,
                        QueryClass::Gap(_) => true,
                    })
                    .collect();
                Node::leaf(classes)
            }
            Choice::Eq(j) => Node::internal(
                CmpOp::Eq,
                j,
                Node::leaf([QueryClass::Key(j)]),
                self.build(a, b, mask | Self::key_bit(j)),
            ),
            Choice::Split(op, k) => {
                let cut = bound(op, k);
                let yes_mask = mask & self.range_keys(a, cut);
                let no_mask = mask & self.range_keys(cut + 1, b);
                Node::internal(op, k, self.build(a, cut, yes_mask), self.build(cut + 1, b, no_mask))
            }
        }
    }
}

/// Exact optimum over all trees with the instance's operators, with no
/// restriction on which key an equality test may use.
pub fn brute_2wcst(inst: &Instance) -> Result<Solution, OracleError> {
    check_size(inst.n())?;
    let mut solver = Brute2::new(inst)?;
    let top = inst.num_positions() - 1;
    let Some((value, _)) = solver.opt(0, top, 0) else {
        return Err(OracleError::Infeasible);
    };
    let tree = Tree::new(solver.build(0, top, 0));
    let cost = solver.scaled.unscale(value);
    Ok(Solution { tree, cost })
}

/// Every correct irreducible tree for the instance, assembled bottom-up
/// over query subsets. Errors when more than `cap` trees would be built.
pub fn enumerate_trees(inst: &Instance, cap: usize) -> Result<Vec<Tree>, OracleError> {
    check_size(inst.n())?;
    let classes: Vec<QueryClass> = inst.queries().to_vec();
    if classes.len() > 25 {
        return Err(OracleError::TooLarge { n: classes.len(), max: 25 });
    }
    let full: u32 = if classes.len() == 32 { u32::MAX } else { (1 << classes.len()) - 1 };
    let mut memo: HashMap<u32, Vec<Node>> = HashMap::new();
    let count = count_or_build(inst, &classes, full, &mut memo, cap)?;
    if count == 0 {
        return Err(OracleError::Infeasible);
    }
    Ok(memo[&full].iter().cloned().map(Tree::new).collect())
}

fn count_or_build(
    inst: &Instance,
    classes: &[QueryClass],
    mask: u32,
    memo: &mut HashMap<u32, Vec<Node>>,
    cap: usize,
) -> Result<usize, OracleError> {
    if let Some(nodes) = memo.get(&mask) {
        return Ok(nodes.len());
    }
    let members: Vec<QueryClass> =
        (0..classes.len()).filter(|i| mask >> i & 1 == 1).map(|i| classes[i]).collect();
    let mut nodes = Vec::new();
    if members.len() <= 1 {
        nodes.push(Node::leaf(members));
    } else {
        for op in inst.ops().iter() {
            for k in 1..=inst.n() {
                let mut yes_mask = 0u32;
                for (i, &c) in classes.iter().enumerate() {
                    if mask >> i & 1 == 1 && crate::trees::satisfies(c, op, k) {
                        yes_mask |= 1 << i;
                    }
                }
                let no_mask = mask & !yes_mask;
                if yes_mask == 0 || no_mask == 0 {
                    continue;
                }
                count_or_build(inst, classes, yes_mask, memo, cap)?;
                count_or_build(inst, classes, no_mask, memo, cap)?;
                let yes_nodes = memo[&yes_mask].clone();
                let no_nodes = memo[&no_mask].clone();
                for y in &yes_nodes {
                    for nn in &no_nodes {
                        nodes.push(Node::internal(op, k, y.clone(), nn.clone()));
                        if nodes.len() > cap {
                            return Err(OracleError::TooMany { cap });
                        }
                    }
                }
            }
        }
    }
    let count = nodes.len();
    memo.insert(mask, nodes);
    Ok(count)
}

/// Exact optimal cost over binary split trees (equality key forced to the
/// maximum-likelihood key, ties broken toward the higher index), for the
/// standard query universe of the instance: all keys plus all gaps.
pub fn brute_split(inst: &Instance) -> Result<BigRational, OracleError> {
    check_size(inst.n())?;
    let scaled = ScaledInstance::new(inst)?;
    let n = inst.n();
    let mut memo: HashMap<BruteKey, i128> = HashMap::new();
    let cost = split_opt(&scaled, n, 0, 2 * n, 0, &mut memo);
    Ok(scaled.unscale(cost))
}

fn split_opt(
    scaled: &ScaledInstance,
    n: usize,
    a: usize,
    b: usize,
    mask: u16,
    memo: &mut HashMap<BruteKey, i128>,
) -> i128 {
    let key = (a as u8, b as u8, mask);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    // Remaining keys in range, and the forced equality key: maximum
    // perturbed weight, i.e. ties go to the larger index.
    let mut eq_key = None;
    for j in 1..=n {
        let p = 2 * j - 1;
        if p < a || p > b || mask & (1 << (j - 1)) != 0 {
            continue;
        }
        if eq_key.is_none_or(|e: usize| scaled.beta[j - 1] >= scaled.beta[e - 1]) {
            eq_key = Some(j);
        }
    }
    let Some(e) = eq_key else {
        // Only gaps left: queries fall through without visiting a node.
        memo.insert(key, 0);
        return 0;
    };

    let mut omega: i128 = 0;
    for p in a..=b {
        match QueryClass::from_position(p) {
            QueryClass::Key(j) => {
                if mask & (1 << (j - 1)) == 0 {
                    omega += scaled.beta[j - 1];
                }
            }
            QueryClass::Gap(g) => omega += scaled.alpha[g],
        }
    }

    let child_mask = mask | (1 << (e - 1));
    let mut best = i128::MAX;
    for s in 1..=n {
        let cut = 2 * s - 2; // positions < key s go left
        let left = if cut < a {
            0
        } else {
            let hi = cut.min(b);
            split_opt(scaled, n, a, hi, child_mask & in_range_mask(n, a, hi), memo)
        };
        let right = if cut + 1 > b {
            0
        } else {
            let lo = (cut + 1).max(a);
            split_opt(scaled, n, lo, b, child_mask & in_range_mask(n, lo, b), memo)
        };
        best = best.min(left + right);
    }
    let value = omega + best;
    memo.insert(key, value);
    value
}

fn in_range_mask(n: usize, a: usize, b: usize) -> u16 {
    let mut mask = 0u16;
    for j in 1..=n {
        let p = 2 * j - 1;
        if p >= a && p <= b {
            mask |= 1 << (j - 1);
        }
    }
    mask
}

/// Exact optimal cost over generalized binary split trees (equality key
/// unconstrained) for successful queries over the given key weights.
pub fn brute_gbst(beta: &[BigRational]) -> Result<BigRational, OracleError> {
    let n = beta.len();
    check_size(n)?;
    let (factor, weights) = crate::scaled::scale_weights(beta)?;
    let mut memo: HashMap<(u8, u8, u16), i128> = HashMap::new();
    let cost = gbst_opt(&weights, n, 1, n, 0, &mut memo);
    Ok(crate::scaled::unscale(&factor, cost))
}

fn gbst_opt(
    beta: &[i128],
    n: usize,
    lo: usize,
    hi: usize,
    mask: u16,
    memo: &mut HashMap<(u8, u8, u16), i128>,
) -> i128 {
    if lo > hi {
        return 0;
    }
    let remaining: Vec<usize> =
        (lo..=hi).filter(|j| mask & (1 << (j - 1)) == 0).collect();
    if remaining.is_empty() {
        return 0;
    }
    let key = (lo as u8, hi as u8, mask);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let omega: i128 = remaining.iter().map(|&j| beta[j - 1]).sum();
    let mut best = i128::MAX;
    for &e in &remaining {
        let child_mask = mask | (1 << (e - 1));
        for s in 1..=n {
            // Left subtree takes keys < s, right takes keys >= s.
            let left = if s as i64 - 1 >= lo as i64 {
                let hi_l = (s - 1).min(hi);
                gbst_opt(beta, n, lo, hi_l, child_mask & key_range_mask(lo, hi_l), memo)
            } else {
                0
            };
            let right = if s <= hi {
                let lo_r = s.max(lo);
                gbst_opt(beta, n, lo_r, hi, child_mask & key_range_mask(lo_r, hi), memo)
            } else {
                0
            };
            best = best.min(left + right);
        }
    }
    let value = omega + best;
    memo.insert(key, value);
    value
}

fn key_range_mask(lo: usize, hi: usize) -> u16 {
    let mut mask = 0u16;
    for j in lo..=hi {
        mask |= 1 << (j - 1);
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{parse_instance, OpSet};
    use crate::trees::{cost, verify};
    use num::Zero;

    fn rat(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn single_key_successful_instance_is_a_leaf() {
        let inst = parse_instance("ops: < <= =\nkeys: A\nbeta: 5\n").unwrap();
        let sol = brute_2wcst(&inst).unwrap();
        assert_eq!(sol.cost, BigRational::zero());
        assert!(sol.tree.root.is_leaf());
    }

    #[test]
    fn equality_only_chains_test_heavier_keys_first() {
        // One equality node separates two keys, so both orders tie at the
        // total weight; with three keys the untested (deepest) key should
        // be the lightest.
        let two = parse_instance("ops: =\nkeys: A B\nbeta: 2 1\n").unwrap();
        assert_eq!(brute_2wcst(&two).unwrap().cost, rat(3));

        let three = parse_instance("ops: =\nkeys: A B C\nbeta: 3 2 1\n").unwrap();
        let sol = brute_2wcst(&three).unwrap();
        // 6 at the root + 3 for the {B, C} separation.
        assert_eq!(sol.cost, rat(9));
        match &sol.tree.root {
            Node::Internal { op: CmpOp::Eq, key, .. } => assert_eq!(*key, 1),
            other => panic!("expected equality root, got {other:?}"),
        }
    }

    #[test]
    fn equality_only_with_gaps_is_infeasible() {
        let inst = parse_instance("ops: =\nkeys: A\nbeta: 1\nalpha: 1 1\n").unwrap();
        assert_eq!(brute_2wcst(&inst).unwrap_err(), OracleError::Infeasible);
    }

    #[test]
    fn le_only_cannot_isolate_low_gap() {
        // Gap0 | K1 needs a strict comparison.
        let inst = parse_instance("ops: <=\nkeys: A\nbeta: 1\nalpha: 1 0\nqueries: standard\n")
            .unwrap();
        assert_eq!(brute_2wcst(&inst).unwrap_err(), OracleError::Infeasible);
    }

    #[test]
    fn oracle_trees_verify() {
        let inst =
            parse_instance("ops: < <= =\nkeys: A B C\nbeta: 3 1 2\nalpha: 1 0 2 1\n").unwrap();
        let sol = brute_2wcst(&inst).unwrap();
        let report = verify(&sol.tree, &inst);
        assert!(report.is_ok(), "{report}");
        assert_eq!(cost(&sol.tree, &inst).unwrap(), sol.cost);
    }

    #[test]
    fn oracle_matches_literal_enumeration() {
        for (ops, text) in [
            ("< =", "ops: < =\nkeys: A B C\nbeta: 3 1 2\n"),
            ("< <= =", "ops: < <= =\nkeys: A B\nbeta: 1 1\nalpha: 2 0 1\n"),
            ("<", "ops: <\nkeys: A B C\nbeta: 1 2 1\n"),
        ] {
            let inst = parse_instance(text).unwrap();
            let sol = brute_2wcst(&inst).unwrap();
            let trees = enumerate_trees(&inst, 2_000_000).unwrap();
            let best = trees
                .iter()
                .map(|t| cost(t, &inst).unwrap())
                .min()
                .unwrap();
            assert_eq!(sol.cost, best, "ops {ops}");
        }
    }

    #[test]
    fn enumeration_rejects_infeasible() {
        let inst = parse_instance("ops: =\nkeys: A\nbeta: 1\nalpha: 1 1\n").unwrap();
        assert_eq!(enumerate_trees(&inst, 1000).unwrap_err(), OracleError::Infeasible);
    }

    #[test]
    fn gbst_single_key() {
        assert_eq!(brute_gbst(&[rat(7)]).unwrap(), rat(7));
    }

    #[test]
    fn split_single_key_counts_one_visit_per_class() {
        let inst = parse_instance("ops: < =\nkeys: A\nbeta: 3\nalpha: 1 2\n").unwrap();
        assert_eq!(brute_split(&inst).unwrap(), rat(6));
    }

    #[test]
    fn gbst_relaxation_never_costs_more() {
        let beta: Vec<BigRational> = [4, 1, 3, 3, 2].into_iter().map(rat).collect();
        let keys: Vec<String> = (1..=5).map(|i| format!("K{i}")).collect();
        let inst = Instance::successful_only(keys, OpSet::all(), beta.clone()).unwrap();
        let split = brute_split(&inst).unwrap();
        let gbst = brute_gbst(&beta).unwrap();
        assert!(gbst <= split, "gbst {gbst} > split {split}");
    }

    #[test]
    fn size_limit_enforced() {
        let keys: Vec<String> = (10..24).map(|i| format!("K{i}")).collect();
        let beta = vec![rat(1); keys.len()];
        let inst = Instance::successful_only(keys, OpSet::all(), beta).unwrap();
        assert!(matches!(brute_2wcst(&inst), Err(OracleError::TooLarge { .. })));
    }
}
