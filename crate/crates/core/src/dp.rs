//! Exact optimal two-way-comparison trees in O(n^4).
//!
//! Subproblems are key intervals minus their heaviest keys. An interval
//! of query classes is a contiguous range on the position line; removing
//! the `h` heaviest keys (under perturbed weights, so "heaviest" is
//! unique) leaves the subproblem `S(I, h)`. The two recurrence branches
//! are: test equality against the next-heaviest key, moving to
//! `S(I, h+1)`; or split the interval with an inequality comparison,
//! which distributes the deleted heavy keys to the two sides by position.
//! Restricting equality tests to the heaviest key is what keeps the state
//! space at O(n^3); its justification is checked externally against the
//! unrestricted oracle.
//!
//! The solver always runs on the perturbed weights and strips the
//! infinitesimal part at the boundary, so tie-laden inputs are fine and
//! the reported cost is exact for the original instance.

use crate::instances::{CmpOp, Instance, QueryClass};
use crate::perturb::PWeight;
use crate::scaled::{ScaleError, ScaledInstance, SWeight};
use crate::trees::{self, Node, Solution, Tree};
use std::fmt;
use thiserror::Error;

/// Largest key count [`solve`] accepts; the memo table is O(n^3) cells.
pub const MAX_DP_KEYS: usize = 256;

#[derive(Error, Debug, PartialEq, Eq)]
pub enum SolveError {
    #[error("no correct tree exists for this instance")]
    Infeasible,
    #[error("{n} keys exceeds the solver limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error("subproblem out of range: {0}")]
    BadSubproblem(String),
    #[error("internal invariant failed: {0}")]
    Internal(String),
}

/// A key interval, one of the four types `(k1,k2)`, `[k1,k2]`, `(k1,k2]`,
/// `[k1,k2)` with endpoints drawn from the keys or infinity. `None`
/// endpoints are unbounded; closed flags are meaningless there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KeyInterval {
    pub lo: Option<usize>,
    pub hi: Option<usize>,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl KeyInterval {
    /// The whole line: every query class.
    pub fn full() -> KeyInterval {
        KeyInterval { lo: None, hi: None, lo_closed: false, hi_closed: false }
    }

    /// Interval covering class positions `a..=b` (for an instance with
    /// `n` keys). Positions are `Gap(0)=0, Key(1)=1, Gap(1)=2, ...`.
    pub fn from_positions(a: usize, b: usize, n: usize) -> KeyInterval {
        let (lo, lo_closed) = if a == 0 {
            (None, false)
        } else if a % 2 == 1 {
            (Some((a + 1) / 2), true)
        } else {
            (Some(a / 2), false)
        };
        let (hi, hi_closed) = if b == 2 * n {
            (None, false)
        } else if b % 2 == 1 {
            (Some((b + 1) / 2), true)
        } else {
            (Some(b / 2 + 1), false)
        };
        KeyInterval { lo, hi, lo_closed, hi_closed }
    }

    /// Inclusive position range this interval covers.
    pub fn positions(&self, n: usize) -> (usize, usize) {
        let a = match self.lo {
            None => 0,
            Some(k) => {
                if self.lo_closed {
                    2 * k - 1
                } else {
                    2 * k
                }
            }
        };
        let b = match self.hi {
            None => 2 * n,
            Some(k) => {
                if self.hi_closed {
                    2 * k - 1
                } else {
                    2 * k - 2
                }
            }
        };
        (a, b)
    }
}

impl fmt::Display for KeyInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.lo, self.lo_closed) {
            (None, _) => write!(f, "(-inf, ")?,
            (Some(k), true) => write!(f, "[K{}, ", k)?,
            (Some(k), false) => write!(f, "(K{}, ", k)?,
        }
        match (self.hi, self.hi_closed) {
            (None, _) => write!(f, "inf)"),
            (Some(k), true) => write!(f, "K{}]", k),
            (Some(k), false) => write!(f, "K{})", k),
        }
    }
}

/// Identifies `S(I, h)`: the classes of interval `I` minus its `h`
/// heaviest keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SubproblemKey {
    pub interval: KeyInterval,
    pub h: usize,
}

/// Which class positions a solver treats as present.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Universe {
    /// Only the instance's query classes.
    Queries,
    /// All `2n+1` positions regardless of the query set (split trees
    /// answer every key and gap).
    Standard,
}

/// Shared interval precomputation: membership and weight prefix sums over
/// positions, plus per-interval key lists sorted by perturbed weight
/// descending (the "top keys" order).
pub(crate) struct IntervalDp {
    pub n: usize,
    /// Number of positions, `2n+1`.
    pub p: usize,
    pub scaled: ScaledInstance,
    pub member: Vec<bool>,
    ccnt: Vec<usize>,
    kcnt: Vec<usize>,
    wreal: Vec<i128>,
    weps: Vec<i64>,
    desc_off: Vec<usize>,
    desc_data: Vec<u16>,
}

impl IntervalDp {
    pub fn new(inst: &Instance, universe: Universe) -> Result<IntervalDp, ScaleError> {
        let scaled = ScaledInstance::new(inst)?;
        let n = inst.n();
        let p = 2 * n + 1;
        let member: Vec<bool> = (0..p)
            .map(|pos| match universe {
                Universe::Queries => inst.is_query(QueryClass::from_position(pos)),
                Universe::Standard => true,
            })
            .collect();
        let mut ccnt = vec![0usize; p + 1];
        let mut kcnt = vec![0usize; p + 1];
        let mut wreal = vec![0i128; p + 1];
        let mut weps = vec![0i64; p + 1];
        for pos in 0..p {
            let w = if member[pos] {
                scaled.pweight(QueryClass::from_position(pos))
            } else {
                SWeight::ZERO
            };
            ccnt[pos + 1] = ccnt[pos] + member[pos] as usize;
            kcnt[pos + 1] = kcnt[pos] + (member[pos] && pos % 2 == 1) as usize;
            wreal[pos + 1] = wreal[pos] + w.real;
            weps[pos + 1] = weps[pos] + w.eps;
        }

        // Per-interval key lists in heaviest-first order, stored in one
        // arena. Row (a, *) is built by inserting keys as b advances.
        let mut desc_off = vec![0usize; p * p + 1];
        for a in 0..p {
            for b in a..p {
                let id = a * p + b;
                desc_off[id + 1] = kcnt[b + 1] - kcnt[a];
            }
        }
        for id in 0..p * p {
            desc_off[id + 1] += desc_off[id];
        }
        let mut desc_data = vec![0u16; desc_off[p * p]];
        let mut scratch: Vec<u16> = Vec::with_capacity(n);
        for a in 0..p {
            scratch.clear();
            for b in a..p {
                if b % 2 == 1 && member[b] {
                    let j = ((b + 1) / 2) as u16;
                    let w = scaled.beta[j as usize - 1];
                    // First index whose key is lighter than (w, j).
                    let pos = scratch
                        .partition_point(|&k| (scaled.beta[k as usize - 1], k) > (w, j));
                    scratch.insert(pos, j);
                }
                let id = a * p + b;
                desc_data[desc_off[id]..desc_off[id + 1]].copy_from_slice(&scratch);
            }
        }

        Ok(IntervalDp { n, p, scaled, member, ccnt, kcnt, wreal, weps, desc_off, desc_data })
    }

    pub fn classes(&self, a: usize, b: usize) -> usize {
        self.ccnt[b + 1] - self.ccnt[a]
    }

    pub fn keys(&self, a: usize, b: usize) -> usize {
        self.kcnt[b + 1] - self.kcnt[a]
    }

    pub fn omega(&self, a: usize, b: usize) -> SWeight {
        SWeight {
            real: self.wreal[b + 1] - self.wreal[a],
            eps: self.weps[b + 1] - self.weps[a],
        }
    }

    /// Keys of `[a, b]`, heaviest perturbed weight first.
    pub fn desc(&self, a: usize, b: usize) -> &[u16] {
        let id = a * self.p + b;
        &self.desc_data[self.desc_off[id]..self.desc_off[id + 1]]
    }

    pub fn key_weight(&self, j: u16) -> SWeight {
        SWeight { real: self.scaled.beta[j as usize - 1], eps: j as i64 }
    }
}

const TAG_INFEASIBLE: u8 = 0;
const TAG_LEAF: u8 = 1;
const TAG_EQ: u8 = 2;
const TAG_SPLIT: u8 = 3;

#[derive(Clone, Copy)]
struct Cell {
    real: i128,
    eps: i64,
    tag: u8,
    /// Split: cut position. Eq: tested key.
    data: u16,
}

impl Cell {
    const INFEASIBLE: Cell = Cell { real: 0, eps: 0, tag: TAG_INFEASIBLE, data: 0 };

    fn value(&self) -> Option<SWeight> {
        (self.tag != TAG_INFEASIBLE).then_some(SWeight { real: self.real, eps: self.eps })
    }
}

const INF: SWeight = SWeight { real: i128::MAX, eps: i64::MAX };

struct DpRun {
    dp: IntervalDp,
    /// Column start per interval id; the column for `[a, b]` holds
    /// entries for `h = 0..=keys(a, b)`.
    col_off: Vec<usize>,
    values: Vec<SWeight>,
    tags: Vec<u8>,
    data: Vec<u16>,
}

fn run(inst: &Instance) -> Result<DpRun, SolveError> {
    if inst.n() > MAX_DP_KEYS {
        return Err(SolveError::TooLarge { n: inst.n(), max: MAX_DP_KEYS });
    }
    let dp = IntervalDp::new(inst, Universe::Queries)?;
    let p = dp.p;
    let ops = inst.ops();
    let want_eq = ops.contains(CmpOp::Eq);
    let want = [ops.contains(CmpOp::Lt), ops.contains(CmpOp::Le)];

    let mut col_off = vec![0usize; p * p + 1];
    for a in 0..p {
        for b in a..p {
            let id = a * p + b;
            col_off[id + 1] = dp.keys(a, b) + 1;
        }
    }
    for id in 0..p * p {
        col_off[id + 1] += col_off[id];
    }
    let total = col_off[p * p];
    let mut values = vec![INF; total];
    let mut tags = vec![TAG_INFEASIBLE; total];
    let mut data = vec![0u16; total];

    // Scratch reused across intervals.
    let mut best_split: Vec<(SWeight, u16)> = Vec::new();
    let mut removed: Vec<SWeight> = Vec::new();

    for len in 0..p {
        for a in 0..p - len {
            let b = a + len;
            let id = a * p + b;
            let off = col_off[id];
            let desc = dp.desc(a, b);
            let key_count = desc.len();
            let class_count = dp.classes(a, b);
            // Cells with at most one live class are leaves; only h below
            // this bound need split candidates.
            let h_active = class_count.saturating_sub(1).min(key_count + 1);

            removed.clear();
            removed.push(SWeight::ZERO);
            for &j in desc {
                let prev = *removed.last().expect("seeded");
                removed.push(prev.add(dp.key_weight(j)));
            }
            best_split.clear();
            best_split.resize(h_active, (INF, 0));

            // Candidate sweep, cut outer and h inner: for a fixed cut the
            // two child columns are contiguous and all three h-indexed
            // walks advance monotonically, so the pass streams.
            let mut classes_yes = 0usize;
            for cut in a..b {
                classes_yes += dp.member[cut] as usize;
                if classes_yes == class_count {
                    break; // nothing can reach the no side from here on
                }
                if !want[cut % 2] || classes_yes == 0 {
                    continue;
                }
                let yes_off = col_off[a * p + cut];
                let no_off = col_off[(cut + 1) * p + b];
                let mut h_yes = 0usize;
                for h in 0..h_active {
                    let h_no = h - h_yes;
                    if classes_yes > h_yes && (class_count - classes_yes) > h_no {
                        let vy = values[yes_off + h_yes];
                        let vn = values[no_off + h_no];
                        if vy.real != i128::MAX && vn.real != i128::MAX {
                            let sum = vy.add(vn);
                            if sum < best_split[h].0 {
                                best_split[h] = (sum, cut as u16);
                            }
                        }
                    }
                    if h < key_count && 2 * (desc[h] as usize) - 1 <= cut {
                        h_yes += 1;
                    }
                }
            }

            // Finalize top-down in h so the equality branch can read the
            // already-final h+1 entry of this same column.
            let omega_all = dp.omega(a, b);
            for h in (0..=key_count).rev() {
                if class_count - h <= 1 {
                    values[off + h] = SWeight::ZERO;
                    tags[off + h] = TAG_LEAF;
                    continue;
                }
                let mut choice: (SWeight, u8, u16) = (INF, TAG_INFEASIBLE, 0);
                if want_eq && h < key_count && values[off + h + 1].real != i128::MAX {
                    choice = (values[off + h + 1], TAG_EQ, desc[h]);
                }
                let (split_val, split_cut) = best_split[h];
                if split_val < choice.0 {
                    choice = (split_val, TAG_SPLIT, split_cut);
                }
                if choice.1 != TAG_INFEASIBLE {
                    values[off + h] = omega_all.sub(removed[h]).add(choice.0);
                    tags[off + h] = choice.1;
                    data[off + h] = choice.2;
                }
            }
        }
    }
    Ok(DpRun { dp, col_off, values, tags, data })
}

impl DpRun {
    fn cell(&self, a: usize, b: usize, h: usize) -> Cell {
        let at = self.col_off[a * self.dp.p + b] + h;
        let v = self.values[at];
        Cell { real: v.real, eps: v.eps, tag: self.tags[at], data: self.data[at] }
    }

    /// Number of deleted top keys that fall at positions `<= cut`.
    fn top_below(&self, a: usize, b: usize, h: usize, cut: usize) -> usize {
        self.dp.desc(a, b)[..h]
            .iter()
            .filter(|&&j| 2 * (j as usize) - 1 <= cut)
            .count()
    }

    fn rebuild(&self, a: usize, b: usize, h: usize) -> Node {
        let cell = self.cell(a, b, h);
        match cell.tag {
            TAG_LEAF => {
                let desc = self.dp.desc(a, b);
                let classes: Vec<QueryClass> = (a..=b)
                    .filter(|&pos| self.dp.member[pos])
                    .map(QueryClass::from_position)
                    .filter(|q| match q {
                        QueryClass::Key(j) => !desc[..h].contains(&(*j as u16)),
                        QueryClass::Gap(_) => true,
                    })
                    .collect();
                Node::leaf(classes)
            }
            TAG_EQ => Node::internal(
                CmpOp::Eq,
                cell.data as usize,
                Node::leaf([QueryClass::Key(cell.data as usize)]),
                self.rebuild(a, b, h + 1),
            ),
            TAG_SPLIT => {
                let cut = cell.data as usize;
                let op = if cut % 2 == 1 { CmpOp::Le } else { CmpOp::Lt };
                let key = if cut % 2 == 1 { (cut + 1) / 2 } else { cut / 2 + 1 };
                let h_yes = self.top_below(a, b, h, cut);
                Node::internal(
                    op,
                    key,
                    self.rebuild(a, cut, h_yes),
                    self.rebuild(cut + 1, b, h - h_yes),
                )
            }
            _ => unreachable!("rebuilding an infeasible cell"),
        }
    }
}

/// Solves the instance exactly: a minimum-cost correct tree over the
/// allowed operators, built from the perturbed weights so the answer is
/// also optimal for the original weights. The returned tree is correct
/// and irreducible by construction; ties between recurrence branches are
/// broken deterministically (equality first, then smaller cut position).
pub fn solve(inst: &Instance) -> Result<Solution, SolveError> {
    let run = run(inst)?;
    let top = run.dp.p - 1;
    let root = run.cell(0, top, 0);
    let Some(value) = root.value() else {
        return Err(SolveError::Infeasible);
    };
    let tree = Tree::new(run.rebuild(0, top, 0));
    let cost = run.dp.scaled.unscale(value.real);

    let report = trees::verify(&tree, inst);
    if !report.is_ok() {
        return Err(SolveError::Internal(format!("solver tree fails verification: {report}")));
    }
    let recosted = trees::cost_unchecked(&tree, inst);
    if recosted != cost {
        return Err(SolveError::Internal(format!(
            "table cost {cost} but tree evaluates to {recosted}"
        )));
    }
    Ok(Solution { tree, cost })
}

/// The memo table of `opt(S(I, h))` values, exposed for inspection.
pub struct CostTable {
    run: DpRun,
}

pub fn solve_cost_table(inst: &Instance) -> Result<CostTable, SolveError> {
    Ok(CostTable { run: run(inst)? })
}

impl CostTable {
    pub fn n(&self) -> usize {
        self.run.dp.n
    }

    /// Keys inside the interval (the admissible range of `h`).
    pub fn key_count(&self, interval: &KeyInterval) -> usize {
        let (a, b) = interval.positions(self.n());
        self.run.dp.keys(a, b)
    }

    /// The optimal perturbed cost of `S(I, h)`, or `None` when no correct
    /// tree exists for that subproblem.
    pub fn opt(&self, key: &SubproblemKey) -> Result<Option<PWeight>, SolveError> {
        let (a, b) = key.interval.positions(self.n());
        if a > b || b >= self.run.dp.p {
            return Err(SolveError::BadSubproblem(format!("{} is empty", key.interval)));
        }
        if key.h > self.run.dp.keys(a, b) {
            return Err(SolveError::BadSubproblem(format!(
                "h={} exceeds {} keys in {}",
                key.h,
                self.run.dp.keys(a, b),
                key.interval
            )));
        }
        Ok(self
            .run
            .cell(a, b, key.h)
            .value()
            .map(|v| self.run.dp.scaled.unscale_pair(v)))
    }
}

/// The `h` heaviest keys of the interval under perturbed weights,
/// heaviest first. Ties in the raw weights resolve toward the higher
/// index.
pub fn top_keys(
    inst: &Instance,
    interval: &KeyInterval,
    h: usize,
) -> Result<Vec<usize>, SolveError> {
    let dp = IntervalDp::new(inst, Universe::Queries)?;
    let (a, b) = interval.positions(inst.n());
    let desc = dp.desc(a, b);
    if h > desc.len() {
        return Err(SolveError::BadSubproblem(format!(
            "h={} exceeds {} keys in {}",
            h,
            desc.len(),
            interval
        )));
    }
    Ok(desc[..h].iter().map(|&j| j as usize).collect())
}

/// Total perturbed weight of `S(I, h)`: all member classes of the
/// interval minus its `h` heaviest keys.
pub fn weight_of(inst: &Instance, key: &SubproblemKey) -> Result<PWeight, SolveError> {
    let dp = IntervalDp::new(inst, Universe::Queries)?;
    let (a, b) = key.interval.positions(inst.n());
    let desc = dp.desc(a, b);
    if key.h > desc.len() {
        return Err(SolveError::BadSubproblem(format!(
            "h={} exceeds {} keys in {}",
            key.h,
            desc.len(),
            key.interval
        )));
    }
    let mut w = dp.omega(a, b);
    for &j in &desc[..key.h] {
        w = w.sub(dp.key_weight(j));
    }
    Ok(dp.scaled.unscale_pair(w))
}
