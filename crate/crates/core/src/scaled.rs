//! Scaled integer weights for solver internals.
//!
//! The dynamic programs compare and add weights billions of times, so they
//! run on integers: all rational weights are multiplied by the least
//! common denominator up front and divided back out at the boundary.
//! Scaling by a positive constant preserves every comparison, hence every
//! argmin, so results are bit-exact. Values live in `i128` with a
//! headroom check at construction; an instance that cannot be scaled into
//! range is rejected rather than silently degraded.
//!
//! Perturbed weights are pairs: the real part carries the scaled weight,
//! the infinitesimal part the (unscaled) sum of key indices. The parts
//! never mix, so scaling only the real part keeps lexicographic
//! comparisons faithful to the rational pair arithmetic.

use crate::instances::{Instance, QueryClass};
use num::bigint::BigInt;
use num::{BigRational, Integer, One, ToPrimitive};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ScaleError {
    #[error("weights too large to scale into 128-bit range")]
    OutOfRange,
}

/// A scaled cost or weight: integer real part plus integer infinitesimal
/// part, ordered lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct SWeight {
    pub real: i128,
    pub eps: i64,
}

impl SWeight {
    pub const ZERO: SWeight = SWeight { real: 0, eps: 0 };

    pub fn add(self, other: SWeight) -> SWeight {
        SWeight { real: self.real + other.real, eps: self.eps + other.eps }
    }

    pub fn sub(self, other: SWeight) -> SWeight {
        SWeight { real: self.real - other.real, eps: self.eps - other.eps }
    }
}

/// Instance weights scaled to integers. Indexing follows the instance:
/// `beta[i-1]` for key `i`, `alpha[i]` for gap `i`.
pub(crate) struct ScaledInstance {
    pub factor: BigInt,
    pub beta: Vec<i128>,
    pub alpha: Vec<i128>,
}

impl ScaledInstance {
    pub fn new(inst: &Instance<BigRational>) -> Result<ScaledInstance, ScaleError> {
        let n = inst.n();
        let mut factor = BigInt::one();
        for w in inst.betas().iter().chain(inst.alphas().iter()) {
            factor = factor.lcm(w.denom());
        }
        let mut beta = Vec::with_capacity(n);
        let mut alpha = Vec::with_capacity(n + 1);
        let mut total: i128 = 0;
        for i in 1..=n {
            let scaled = scale_one(inst.beta(i), &factor)?;
            total = total.checked_add(scaled).ok_or(ScaleError::OutOfRange)?;
            beta.push(scaled);
        }
        for i in 0..=n {
            let scaled = scale_one(inst.alpha(i), &factor)?;
            total = total.checked_add(scaled).ok_or(ScaleError::OutOfRange)?;
            alpha.push(scaled);
        }
        // Any cost is at most total * (number of classes); additions in the
        // solvers combine a handful of such values. Require slack so plain
        // i128 additions cannot overflow. The infinitesimal parts are sums
        // of key indices, bounded by n^2 per value.
        let positions = 2 * (n as i128) + 1;
        let limit = i128::MAX / (positions + 3) / 8;
        if total > limit {
            return Err(ScaleError::OutOfRange);
        }
        Ok(ScaledInstance { factor, beta, alpha })
    }

    pub fn weight(&self, class: QueryClass) -> i128 {
        match class {
            QueryClass::Key(i) => self.beta[i - 1],
            QueryClass::Gap(i) => self.alpha[i],
        }
    }

    /// Perturbed weight of a class: key `j` carries infinitesimal part `j`.
    pub fn pweight(&self, class: QueryClass) -> SWeight {
        match class {
            QueryClass::Key(i) => SWeight { real: self.beta[i - 1], eps: i as i64 },
            QueryClass::Gap(i) => SWeight { real: self.alpha[i], eps: 0 },
        }
    }

    /// Maps a scaled integer value back to the exact rational it encodes.
    pub fn unscale(&self, value: i128) -> BigRational {
        BigRational::new(BigInt::from(value), self.factor.clone())
    }

    pub fn unscale_pair(&self, w: SWeight) -> crate::perturb::PWeight {
        crate::perturb::PWeight::new(
            self.unscale(w.real),
            BigRational::from_integer(BigInt::from(w.eps)),
        )
    }
}

fn scale_one(w: &BigRational, factor: &BigInt) -> Result<i128, ScaleError> {
    (w.numer() * (factor / w.denom())).to_i128().ok_or(ScaleError::OutOfRange)
}

/// Scales a bare weight list by its common denominator.
pub(crate) fn scale_weights(weights: &[BigRational]) -> Result<(BigInt, Vec<i128>), ScaleError> {
    let mut factor = BigInt::one();
    for w in weights {
        factor = factor.lcm(w.denom());
    }
    let mut out = Vec::with_capacity(weights.len());
    let mut total: i128 = 0;
    for w in weights {
        let scaled = scale_one(w, &factor)?;
        total = total.checked_add(scaled.abs()).ok_or(ScaleError::OutOfRange)?;
        out.push(scaled);
    }
    let limit = i128::MAX / (weights.len() as i128 + 3) / 8;
    if total > limit {
        return Err(ScaleError::OutOfRange);
    }
    Ok((factor, out))
}

pub(crate) fn unscale(factor: &BigInt, value: i128) -> BigRational {
    BigRational::new(BigInt::from(value), factor.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::parse_instance;

    #[test]
    fn scales_mixed_denominators() {
        let inst = parse_instance("ops: <\nkeys: A B\nbeta: 1/2 0.25\nalpha: 1 1/3 0\n").unwrap();
        let s = ScaledInstance::new(&inst).unwrap();
        assert_eq!(s.factor, BigInt::from(12));
        assert_eq!(s.beta, vec![6, 3]);
        assert_eq!(s.alpha, vec![12, 4, 0]);
        assert_eq!(s.unscale(6), inst.beta(1).clone());
    }

    #[test]
    fn pweight_orders_like_rational_pairs() {
        let inst = parse_instance("ops: <\nkeys: A B\nbeta: 5 5\n").unwrap();
        let s = ScaledInstance::new(&inst).unwrap();
        let a = s.pweight(QueryClass::Key(1));
        let b = s.pweight(QueryClass::Key(2));
        assert!(a < b);
        assert_eq!(a.real, b.real);
    }
}
