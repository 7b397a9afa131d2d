//! Problem instances: keys, query classes, comparison operators, weights.
//!
//! An instance fixes `n` ordered keys, a set of query equivalence classes,
//! the comparison operators a tree may use, and nonnegative weights. A
//! query value is never stored as a number: only its relation to the keys
//! matters, so queries are represented by their equivalence class — either
//! a key or one of the `n+1` gaps between/outside the keys.
//!
//! Weights are exact rationals (arbitrary precision). The split-tree
//! counterexample depends on exact comparisons of large sums, and a
//! decimal input like `0.99` must mean exactly `99/100`.

use num::{BigRational, Signed, Zero};
use std::fmt;
use thiserror::Error;

/// Comparison operator usable at an internal node, after normalization.
///
/// `>` and `>=` are accepted in input but normalized away: `Q > k` is the
/// same test as `Q <= k` with the yes/no branches swapped, and `Q >= k`
/// likewise maps to `Q < k`. Tree constructors apply that branch swap, so
/// trees only ever carry `Lt`, `Le`, or `Eq`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
}

impl CmpOp {
    pub fn token(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Comparison operator as written in an instance file, before normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RawOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl RawOp {
    pub fn parse(token: &str) -> Option<RawOp> {
        match token {
            "<" => Some(RawOp::Lt),
            "<=" | "≤" => Some(RawOp::Le),
            "=" | "==" => Some(RawOp::Eq),
            ">=" | "≥" => Some(RawOp::Ge),
            ">" => Some(RawOp::Gt),
            _ => None,
        }
    }
}

/// Maps raw operators onto the normalized set `{<, <=, =}`.
///
/// `>` becomes `Le` and `>=` becomes `Lt`; the others map to themselves.
/// Idempotent when restricted to already-normalized operators.
pub fn normalize_ops(raw: &[RawOp]) -> OpSet {
    let mut set = OpSet::empty();
    for op in raw {
        set.insert(match op {
            RawOp::Lt | RawOp::Ge => CmpOp::Lt,
            RawOp::Le | RawOp::Gt => CmpOp::Le,
            RawOp::Eq => CmpOp::Eq,
        });
    }
    set
}

/// Set of allowed (normalized) comparison operators.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OpSet {
    lt: bool,
    le: bool,
    eq: bool,
}

impl OpSet {
    pub fn empty() -> OpSet {
        OpSet::default()
    }

    pub fn all() -> OpSet {
        OpSet { lt: true, le: true, eq: true }
    }

    pub fn of(ops: &[CmpOp]) -> OpSet {
        let mut s = OpSet::empty();
        for &op in ops {
            s.insert(op);
        }
        s
    }

    pub fn insert(&mut self, op: CmpOp) {
        match op {
            CmpOp::Lt => self.lt = true,
            CmpOp::Le => self.le = true,
            CmpOp::Eq => self.eq = true,
        }
    }

    pub fn contains(self, op: CmpOp) -> bool {
        match op {
            CmpOp::Lt => self.lt,
            CmpOp::Le => self.le,
            CmpOp::Eq => self.eq,
        }
    }

    pub fn is_empty(self) -> bool {
        !(self.lt || self.le || self.eq)
    }

    pub fn len(self) -> usize {
        self.lt as usize + self.le as usize + self.eq as usize
    }

    /// True if `<` or `<=` is allowed.
    pub fn has_inequality(self) -> bool {
        self.lt || self.le
    }

    /// True if the set is exactly `{=}`.
    pub fn equality_only(self) -> bool {
        self.eq && !self.has_inequality()
    }

    /// Operators in the fixed order `Lt, Le, Eq`.
    pub fn iter(self) -> impl Iterator<Item = CmpOp> {
        [CmpOp::Lt, CmpOp::Le, CmpOp::Eq]
            .into_iter()
            .filter(move |&op| self.contains(op))
    }
}

impl fmt::Debug for OpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OpSet{{{}}}", self)
    }
}

impl fmt::Display for OpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for op in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{}", op)?;
            first = false;
        }
        Ok(())
    }
}

/// A query equivalence class: a key, or a gap between adjacent keys.
///
/// Keys are indexed `1..=n`. `Gap(i)` is the open interval between key `i`
/// and key `i+1`; `Gap(0)` lies below the first key and `Gap(n)` above the
/// last. Classes are totally ordered by their position on the line:
/// `Gap(0) < Key(1) < Gap(1) < Key(2) < ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryClass {
    Key(usize),
    Gap(usize),
}

impl QueryClass {
    /// Position on the class line: `Gap(i) -> 2i`, `Key(i) -> 2i-1`.
    pub fn position(self) -> usize {
        match self {
            QueryClass::Key(i) => 2 * i - 1,
            QueryClass::Gap(i) => 2 * i,
        }
    }

    pub fn from_position(p: usize) -> QueryClass {
        if p % 2 == 1 {
            QueryClass::Key((p + 1) / 2)
        } else {
            QueryClass::Gap(p / 2)
        }
    }

    pub fn is_key(self) -> bool {
        matches!(self, QueryClass::Key(_))
    }
}

impl PartialOrd for QueryClass {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueryClass {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.position().cmp(&other.position())
    }
}

impl fmt::Display for QueryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryClass::Key(i) => write!(f, "K{}", i),
            QueryClass::Gap(i) => write!(f, "Gap{}", i),
        }
    }
}

/// Which canonical query set an instance uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryVariant {
    /// All `2n+1` classes: every key and every gap.
    Standard,
    /// Only the `n` key classes (queries always succeed).
    SuccessfulOnly,
}

/// The canonical query set for `n` keys.
pub fn canonical_queries(n: usize, variant: QueryVariant) -> Vec<QueryClass> {
    match variant {
        QueryVariant::Standard => (0..=2 * n).map(QueryClass::from_position).collect(),
        QueryVariant::SuccessfulOnly => (1..=n).map(QueryClass::Key).collect(),
    }
}

/// Weight values an instance can carry: exact rationals, or perturbed
/// rationals with a symbolic infinitesimal part.
pub trait Weight: Clone + Ord + fmt::Debug + fmt::Display + Zero {
    /// Sum by reference, avoiding clones of big values.
    fn plus(&self, other: &Self) -> Self;
}

impl Weight for BigRational {
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

/// How key tokens are ordered and validated in the file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KeyKind {
    #[default]
    Str,
    Int,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum InstanceError {
    #[error("line {0}: {1}")]
    AtLine(usize, Box<InstanceError>),
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("instance has no keys")]
    NoKeys,
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("keys not strictly increasing: `{0}` before `{1}`")]
    KeyOrder(String, String),
    #[error("key `{0}` is not an integer (keytype: int)")]
    BadIntKey(String),
    #[error("negative weight `{0}`")]
    NegativeWeight(String),
    #[error("bad rational `{0}`")]
    BadRational(String),
    #[error("expected {expected} weights, found {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("unknown operator token `{0}`")]
    UnknownOp(String),
    #[error("no comparison operators")]
    EmptyOps,
    #[error("query class {0} out of range for {1} keys")]
    BadQueryClass(String, usize),
    #[error("duplicate query class {0}")]
    DuplicateQuery(String),
    #[error("class {0} has nonzero weight but is absent from the query set")]
    WeightOutsideQueries(String),
    #[error("unknown `queries:` value `{0}` (expected `standard` or `keys-only`)")]
    BadQueriesValue(String),
    #[error("missing required line `{0}:`")]
    MissingLine(&'static str),
}

/// A problem instance.
///
/// Immutable after construction; all solvers take `&Instance`. The weight
/// type is [`BigRational`] for ordinary instances and [`crate::PWeight`]
/// for perturbed ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance<W = BigRational> {
    keys: Vec<String>,
    key_kind: KeyKind,
    queries: Vec<QueryClass>,
    in_queries: Vec<bool>,
    ops: OpSet,
    beta: Vec<W>,
    alpha: Vec<W>,
}

impl<W: Weight> Instance<W> {
    /// Builds and validates an instance.
    ///
    /// `beta` has one weight per key, `alpha` one per gap (`n+1` entries).
    /// Every class with nonzero weight must be in `queries`; classes in
    /// `queries` may have weight zero but still must be separated by a
    /// correct tree.
    pub fn new(
        keys: Vec<String>,
        queries: Vec<QueryClass>,
        ops: OpSet,
        alpha: Vec<W>,
        beta: Vec<W>,
    ) -> Result<Instance<W>, InstanceError> {
        Self::with_key_kind(keys, KeyKind::Str, queries, ops, alpha, beta)
    }

    pub fn with_key_kind(
        keys: Vec<String>,
        key_kind: KeyKind,
        mut queries: Vec<QueryClass>,
        ops: OpSet,
        alpha: Vec<W>,
        beta: Vec<W>,
    ) -> Result<Instance<W>, InstanceError> {
        let n = keys.len();
        if n == 0 {
            return Err(InstanceError::NoKeys);
        }
        for pair in keys.windows(2) {
            let in_order = match key_kind {
                KeyKind::Str => pair[0] < pair[1],
                KeyKind::Int => int_key(&pair[0])? < int_key(&pair[1])?,
            };
            if !in_order {
                if pair[0] == pair[1] {
                    return Err(InstanceError::DuplicateKey(pair[0].clone()));
                }
                return Err(InstanceError::KeyOrder(pair[0].clone(), pair[1].clone()));
            }
        }
        if ops.is_empty() {
            return Err(InstanceError::EmptyOps);
        }
        if beta.len() != n {
            return Err(InstanceError::WeightCount { expected: n, found: beta.len() });
        }
        if alpha.len() != n + 1 {
            return Err(InstanceError::WeightCount { expected: n + 1, found: alpha.len() });
        }

        queries.sort();
        let mut in_queries = vec![false; 2 * n + 1];
        for q in &queries {
            let ok = match q {
                QueryClass::Key(i) => (1..=n).contains(i),
                QueryClass::Gap(i) => *i <= n,
            };
            if !ok {
                return Err(InstanceError::BadQueryClass(q.to_string(), n));
            }
            if in_queries[q.position()] {
                return Err(InstanceError::DuplicateQuery(q.to_string()));
            }
            in_queries[q.position()] = true;
        }

        let inst = Instance { keys, key_kind, queries, in_queries, ops, beta, alpha };
        for p in 0..=2 * n {
            let class = QueryClass::from_position(p);
            if !inst.in_queries[p] && !inst.weight(class).is_zero() {
                return Err(InstanceError::WeightOutsideQueries(class.to_string()));
            }
        }
        Ok(inst)
    }

    /// Standard instance: all `2n+1` classes are queries.
    pub fn standard(
        keys: Vec<String>,
        ops: OpSet,
        alpha: Vec<W>,
        beta: Vec<W>,
    ) -> Result<Instance<W>, InstanceError> {
        let n = keys.len();
        Self::new(keys, canonical_queries(n, QueryVariant::Standard), ops, alpha, beta)
    }

    /// Successful-queries instance: queries are the keys, gap weights zero.
    pub fn successful_only(
        keys: Vec<String>,
        ops: OpSet,
        beta: Vec<W>,
    ) -> Result<Instance<W>, InstanceError> {
        let n = keys.len();
        let alpha = vec![W::zero(); n + 1];
        Self::new(keys, canonical_queries(n, QueryVariant::SuccessfulOnly), ops, alpha, beta)
    }

    pub fn n(&self) -> usize {
        self.keys.len()
    }

    /// Number of class positions, `2n+1`.
    pub fn num_positions(&self) -> usize {
        2 * self.keys.len() + 1
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Name of key `i` (1-based).
    pub fn key_name(&self, i: usize) -> &str {
        &self.keys[i - 1]
    }

    pub fn key_kind(&self) -> KeyKind {
        self.key_kind
    }

    pub fn ops(&self) -> OpSet {
        self.ops
    }

    /// The query classes, sorted by position.
    pub fn queries(&self) -> &[QueryClass] {
        &self.queries
    }

    pub fn is_query(&self, class: QueryClass) -> bool {
        self.in_queries[class.position()]
    }

    /// Weight of key `i` (1-based).
    pub fn beta(&self, i: usize) -> &W {
        &self.beta[i - 1]
    }

    /// Weight of gap `i` (0-based, `0..=n`).
    pub fn alpha(&self, i: usize) -> &W {
        &self.alpha[i]
    }

    pub fn betas(&self) -> &[W] {
        &self.beta
    }

    pub fn alphas(&self) -> &[W] {
        &self.alpha
    }

    pub fn weight(&self, class: QueryClass) -> &W {
        match class {
            QueryClass::Key(i) => self.beta(i),
            QueryClass::Gap(i) => self.alpha(i),
        }
    }

    pub fn total_weight(&self) -> W {
        let mut total = W::zero();
        for w in self.beta.iter().chain(self.alpha.iter()) {
            total = total.plus(w);
        }
        total
    }

    /// Label for a class using the instance's key names, e.g. `H` or `Gap2`.
    pub fn class_label(&self, class: QueryClass) -> String {
        match class {
            QueryClass::Key(i) => self.keys[i - 1].clone(),
            QueryClass::Gap(i) => format!("Gap{}", i),
        }
    }

    /// Replaces the operator set, revalidating nothing else.
    pub fn with_ops(&self, ops: OpSet) -> Result<Instance<W>, InstanceError> {
        if ops.is_empty() {
            return Err(InstanceError::EmptyOps);
        }
        let mut inst = self.clone();
        inst.ops = ops;
        Ok(inst)
    }
}

impl Instance<BigRational> {
    /// Scales all weights so they sum to 1. Returns the scaled instance and
    /// the original total. Errors on a zero total.
    pub fn normalized(&self) -> Option<(Instance<BigRational>, BigRational)> {
        let total = self.total_weight();
        if total.is_zero() {
            return None;
        }
        let mut inst = self.clone();
        for w in inst.beta.iter_mut().chain(inst.alpha.iter_mut()) {
            *w /= &total;
        }
        Some((inst, total))
    }
}

fn int_key(token: &str) -> Result<i64, InstanceError> {
    token.parse::<i64>().map_err(|_| InstanceError::BadIntKey(token.to_string()))
}

/// Parses a nonnegative rational: integer (`3`), fraction (`3/4`), or
/// decimal (`0.99`, meaning exactly 99/100).
pub fn parse_rational(token: &str) -> Result<BigRational, InstanceError> {
    use num::BigInt;
    let bad = || InstanceError::BadRational(token.to_string());
    let rat = if let Some((num_s, den_s)) = token.split_once('/') {
        let numer: BigInt = num_s.parse().map_err(|_| bad())?;
        let denom: BigInt = den_s.parse().map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(bad());
        }
        BigRational::new(numer, denom)
    } else if let Some((whole_s, frac_s)) = token.split_once('.') {
        if frac_s.is_empty() || !frac_s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: BigInt = if whole_s.is_empty() { 0.into() } else { whole_s.parse().map_err(|_| bad())? };
        let frac: BigInt = frac_s.parse().map_err(|_| bad())?;
        let scale = num::pow::pow(BigInt::from(10), frac_s.len());
        let frac_part = BigRational::new(frac, scale);
        let whole_rat = BigRational::from_integer(whole.clone());
        if whole.is_negative() || whole_s.starts_with('-') {
            whole_rat - frac_part
        } else {
            whole_rat + frac_part
        }
    } else {
        let numer: BigInt = token.parse().map_err(|_| bad())?;
        BigRational::from_integer(numer)
    };
    Ok(rat)
}

/// Parses the line-oriented instance file format.
///
/// ```text
/// ops: < <= =
/// keys: A B C          # whitespace-separated
/// beta: 3 1 2          # rationals: integer, decimal, or p/q
/// alpha: 0 1 0 1       # optional; n+1 entries
/// queries: standard    # or keys-only; defaults by presence of alpha
/// keytype: int         # optional; keys then order as integers
/// ```
///
/// `#` starts a comment. Without an `alpha:` line the gap weights are zero
/// and the query set defaults to keys-only; with one it defaults to the
/// standard `2n+1` classes.
pub fn parse_instance(text: &str) -> Result<Instance<BigRational>, InstanceError> {
    let mut ops: Option<(usize, OpSet)> = None;
    let mut keys: Option<(usize, Vec<String>)> = None;
    let mut beta: Option<(usize, Vec<BigRational>)> = None;
    let mut alpha: Option<(usize, Vec<BigRational>)> = None;
    let mut queries: Option<(usize, QueryVariant)> = None;
    let mut key_kind = KeyKind::Str;

    let at = |line: usize, e: InstanceError| InstanceError::AtLine(line, Box::new(e));

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| at(lineno, InstanceError::Malformed(line.to_string())))?;
        let rest = rest.trim();
        match name.trim() {
            "ops" => {
                let mut raw = Vec::new();
                for tok in rest.split_whitespace() {
                    raw.push(
                        RawOp::parse(tok)
                            .ok_or_else(|| at(lineno, InstanceError::UnknownOp(tok.to_string())))?,
                    );
                }
                let set = normalize_ops(&raw);
                if set.is_empty() {
                    return Err(at(lineno, InstanceError::EmptyOps));
                }
                ops = Some((lineno, set));
            }
            "keys" => {
                keys = Some((lineno, rest.split_whitespace().map(String::from).collect()));
            }
            "beta" => beta = Some((lineno, parse_weights(rest, lineno)?)),
            "alpha" => alpha = Some((lineno, parse_weights(rest, lineno)?)),
            "queries" => {
                let variant = match rest {
                    "standard" => QueryVariant::Standard,
                    "keys-only" => QueryVariant::SuccessfulOnly,
                    other => {
                        return Err(at(lineno, InstanceError::BadQueriesValue(other.to_string())))
                    }
                };
                queries = Some((lineno, variant));
            }
            "keytype" => {
                key_kind = match rest {
                    "int" => KeyKind::Int,
                    "str" => KeyKind::Str,
                    other => return Err(at(lineno, InstanceError::Malformed(other.to_string()))),
                };
            }
            other => return Err(at(lineno, InstanceError::Malformed(other.to_string()))),
        }
    }

    let (ops_line, ops) = ops.ok_or(InstanceError::MissingLine("ops"))?;
    let (keys_line, keys) = keys.ok_or(InstanceError::MissingLine("keys"))?;
    let (beta_line, beta) = beta.ok_or(InstanceError::MissingLine("beta"))?;
    let n = keys.len();
    if n == 0 {
        return Err(at(keys_line, InstanceError::NoKeys));
    }
    if beta.len() != n {
        return Err(at(beta_line, InstanceError::WeightCount { expected: n, found: beta.len() }));
    }
    let variant = match (&queries, &alpha) {
        (Some((_, v)), _) => *v,
        (None, Some(_)) => QueryVariant::Standard,
        (None, None) => QueryVariant::SuccessfulOnly,
    };
    let alpha = match alpha {
        Some((line, a)) => {
            if a.len() != n + 1 {
                return Err(at(line, InstanceError::WeightCount { expected: n + 1, found: a.len() }));
            }
            a
        }
        None => vec![BigRational::zero(); n + 1],
    };

    Instance::with_key_kind(keys, key_kind, canonical_queries(n, variant), ops, alpha, beta)
        .map_err(|e| match e {
            e @ InstanceError::AtLine(..) => e,
            e @ (InstanceError::DuplicateKey(_) | InstanceError::KeyOrder(..) | InstanceError::BadIntKey(_)) => {
                at(keys_line, e)
            }
            e @ InstanceError::EmptyOps => at(ops_line, e),
            e => at(beta_line, e),
        })
}

fn parse_weights(rest: &str, lineno: usize) -> Result<Vec<BigRational>, InstanceError> {
    let mut out = Vec::new();
    for tok in rest.split_whitespace() {
        let w = parse_rational(tok)
            .map_err(|e| InstanceError::AtLine(lineno, Box::new(e)))?;
        if w.is_negative() {
            return Err(InstanceError::AtLine(
                lineno,
                Box::new(InstanceError::NegativeWeight(tok.to_string())),
            ));
        }
        out.push(w);
    }
    Ok(out)
}

/// Serializes an instance in the file format; `parse_instance` of the
/// result reconstructs an equal instance.
pub fn serialize_instance(inst: &Instance<BigRational>) -> String {
    let mut out = String::new();
    out.push_str(&format!("ops: {}\n", inst.ops()));
    if inst.key_kind() == KeyKind::Int {
        out.push_str("keytype: int\n");
    }
    out.push_str(&format!("keys: {}\n", inst.keys().join(" ")));
    let beta: Vec<String> = inst.betas().iter().map(|w| w.to_string()).collect();
    out.push_str(&format!("beta: {}\n", beta.join(" ")));
    let has_alpha = inst.alphas().iter().any(|w| !w.is_zero());
    let standard = inst.queries().len() == inst.num_positions();
    if has_alpha || standard {
        let alpha: Vec<String> = inst.alphas().iter().map(|w| w.to_string()).collect();
        out.push_str(&format!("alpha: {}\n", alpha.join(" ")));
    }
    // Explicit when it differs from what the alpha line implies.
    if standard != has_alpha && !(standard && has_alpha) {
        out.push_str(&format!(
            "queries: {}\n",
            if standard { "standard" } else { "keys-only" }
        ));
    }
    out
}

impl fmt::Display for Instance<BigRational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_instance(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parse_keys_only_file() {
        let inst = parse_instance("ops: < <= =\nkeys: H O W\nbeta: 1 1 1\n").unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.queries().len(), 3);
        assert!(inst.queries().iter().all(|q| q.is_key()));
        let text = serialize_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn parse_standard_queries_line() {
        let inst = parse_instance("ops: <\nkeys: A B C\nbeta: 1 2 3\nqueries: standard\n").unwrap();
        assert_eq!(inst.queries().len(), 7);
        let round = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(round, inst);
    }

    #[test]
    fn parse_duplicate_key_is_error() {
        let err = parse_instance("ops: <\nkeys: A A\nbeta: 1 1\n").unwrap_err();
        match err {
            InstanceError::AtLine(2, inner) => {
                assert_eq!(*inner, InstanceError::DuplicateKey("A".into()))
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_instance("ops: <\nkeys: A B\nbeta: 1 -2\n").unwrap_err();
        assert!(matches!(err, InstanceError::AtLine(3, _)), "{err:?}");
        let err = parse_instance("ops: < % =\nkeys: A\nbeta: 1\n").unwrap_err();
        assert!(matches!(err, InstanceError::AtLine(1, _)), "{err:?}");
    }

    #[test]
    fn parse_decimal_is_exact() {
        assert_eq!(rat("0.99"), rat("99/100"));
        assert_eq!(rat("1.5"), rat("3/2"));
        assert_eq!(rat("20"), BigRational::from_integer(20.into()));
    }

    #[test]
    fn normalize_maps_reversed_ops() {
        assert_eq!(normalize_ops(&[RawOp::Gt]), OpSet::of(&[CmpOp::Le]));
        assert_eq!(
            normalize_ops(&[RawOp::Lt, RawOp::Le, RawOp::Eq]),
            OpSet::all()
        );
        assert_eq!(normalize_ops(&[RawOp::Ge, RawOp::Lt]), OpSet::of(&[CmpOp::Lt]));
    }

    #[test]
    fn normalize_is_idempotent() {
        for raw in [
            vec![RawOp::Gt, RawOp::Ge],
            vec![RawOp::Lt],
            vec![RawOp::Eq, RawOp::Gt, RawOp::Lt],
        ] {
            let once = normalize_ops(&raw);
            let again: Vec<RawOp> = once
                .iter()
                .map(|op| match op {
                    CmpOp::Lt => RawOp::Lt,
                    CmpOp::Le => RawOp::Le,
                    CmpOp::Eq => RawOp::Eq,
                })
                .collect();
            assert_eq!(normalize_ops(&again), once);
        }
    }

    #[test]
    fn canonical_query_counts() {
        assert_eq!(canonical_queries(3, QueryVariant::Standard).len(), 7);
        assert_eq!(canonical_queries(3, QueryVariant::SuccessfulOnly).len(), 3);
        assert_eq!(
            canonical_queries(1, QueryVariant::Standard),
            vec![QueryClass::Gap(0), QueryClass::Key(1), QueryClass::Gap(1)]
        );
    }

    #[test]
    fn class_order_follows_positions() {
        let mut classes = vec![QueryClass::Key(2), QueryClass::Gap(0), QueryClass::Gap(1)];
        classes.sort();
        assert_eq!(
            classes,
            vec![QueryClass::Gap(0), QueryClass::Gap(1), QueryClass::Key(2)]
        );
    }

    #[test]
    fn nonzero_weight_outside_queries_rejected() {
        let err = Instance::new(
            vec!["A".into()],
            vec![QueryClass::Key(1)],
            OpSet::all(),
            vec![rat("0"), rat("1")],
            vec![rat("1")],
        )
        .unwrap_err();
        assert!(matches!(err, InstanceError::WeightOutsideQueries(_)));
    }

    #[test]
    fn total_weight_counts_all_classes() {
        let inst = Instance::standard(
            vec!["A".into(), "B".into()],
            OpSet::all(),
            vec![rat("1/2"), rat("1/3"), rat("1/6")],
            vec![rat("2"), rat("3")],
        )
        .unwrap();
        assert_eq!(inst.total_weight(), rat("6"));
        // Subsetting queries (zeroing a class) never increases the total.
        let smaller = Instance::new(
            vec!["A".into(), "B".into()],
            vec![QueryClass::Key(1), QueryClass::Key(2), QueryClass::Gap(0)],
            OpSet::all(),
            vec![rat("1/2"), rat("0"), rat("0")],
            vec![rat("2"), rat("3")],
        )
        .unwrap();
        assert!(smaller.total_weight() <= inst.total_weight());
    }

    #[test]
    fn int_keytype_orders_numerically() {
        let inst =
            parse_instance("ops: <\nkeytype: int\nkeys: 2 10\nbeta: 1 1\n").unwrap();
        assert_eq!(inst.n(), 2);
        // As strings "10" < "2", so this must fail without keytype.
        assert!(parse_instance("ops: <\nkeys: 2 10\nbeta: 1 1\n").is_err());
        let round = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(round, inst);
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(
            n in 1usize..6,
            seed_weights in proptest::collection::vec(0u32..50, 13),
            standard in proptest::bool::ANY,
            op_bits in 1u8..8,
        ) {
            let keys: Vec<String> = (0..n).map(|i| format!("K{}", i + 1)).collect();
            let mut ops = OpSet::empty();
            if op_bits & 1 != 0 { ops.insert(CmpOp::Lt); }
            if op_bits & 2 != 0 { ops.insert(CmpOp::Le); }
            if op_bits & 4 != 0 { ops.insert(CmpOp::Eq); }
            let beta: Vec<BigRational> = (0..n)
                .map(|i| BigRational::new(seed_weights[i].into(), (1 + i as u32 % 3).into()))
                .collect();
            let alpha: Vec<BigRational> = if standard {
                (0..=n).map(|i| BigRational::from_integer(seed_weights[(i + n) % 13].into())).collect()
            } else {
                vec![BigRational::zero(); n + 1]
            };
            let queries = canonical_queries(
                n,
                if standard { QueryVariant::Standard } else { QueryVariant::SuccessfulOnly },
            );
            let inst = Instance::new(keys, queries, ops, alpha, beta).unwrap();
            let text = serialize_instance(&inst);
            let back = parse_instance(&text).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
