//! Exact arithmetic over values `x + y*eps` with a symbolic infinitesimal.
//!
//! `eps` never gets a numeric value: a [`PWeight`] is the pair of rational
//! coefficients, added component-wise and ordered lexicographically. The
//! instance perturbation adds `i*eps` to the weight of key `i`, which makes
//! all key weights distinct while preserving every strict comparison
//! between unperturbed values. Degree one suffices: all solvers here
//! compute linear functions of the weights.

use crate::instances::{Instance, Weight};
use num::{BigRational, Zero};
use std::fmt;
use std::ops::Add;

/// A perturbed weight `real + eps_part * eps`.
///
/// The derived ordering is lexicographic on `(real, eps_part)`, which is
/// exactly the order of `real + eps_part * eps` for a sufficiently small
/// positive `eps`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PWeight {
    pub real: BigRational,
    pub eps: BigRational,
}

impl PWeight {
    pub fn new(real: BigRational, eps: BigRational) -> PWeight {
        PWeight { real, eps }
    }

    /// A plain rational, with zero infinitesimal part.
    pub fn from_rational(real: BigRational) -> PWeight {
        PWeight { real, eps: BigRational::zero() }
    }

    pub fn from_ints(real: i64, eps: i64) -> PWeight {
        PWeight::new(
            BigRational::from_integer(real.into()),
            BigRational::from_integer(eps.into()),
        )
    }
}

/// Component-wise sum.
pub fn add(a: &PWeight, b: &PWeight) -> PWeight {
    PWeight { real: &a.real + &b.real, eps: &a.eps + &b.eps }
}

/// Scales both components by a rational.
pub fn scale(z: &BigRational, a: &PWeight) -> PWeight {
    PWeight { real: z * &a.real, eps: z * &a.eps }
}

/// Strict lexicographic comparison: `a < b` iff `a.real < b.real`, or the
/// real parts tie and `a.eps < b.eps`.
pub fn less(a: &PWeight, b: &PWeight) -> bool {
    a < b
}

impl Add for PWeight {
    type Output = PWeight;

    fn add(self, rhs: PWeight) -> PWeight {
        add(&self, &rhs)
    }
}

impl<'a> Add<&'a PWeight> for PWeight {
    type Output = PWeight;

    fn add(self, rhs: &'a PWeight) -> PWeight {
        add(&self, rhs)
    }
}

impl Zero for PWeight {
    fn zero() -> PWeight {
        PWeight::from_rational(BigRational::zero())
    }

    fn is_zero(&self) -> bool {
        self.real.is_zero() && self.eps.is_zero()
    }
}

impl Weight for PWeight {
    fn plus(&self, other: &Self) -> Self {
        add(self, other)
    }
}

impl fmt::Display for PWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + ({})e", self.real, self.eps)
    }
}

/// Perturbs key weights: key `j` gets weight `beta_j + j*eps`. Gap weights
/// keep a zero infinitesimal part. All perturbed key weights are distinct,
/// and sorting keys by perturbed weight breaks ties by index, ascending.
pub fn perturb_instance(inst: &Instance<BigRational>) -> Instance<PWeight> {
    let n = inst.n();
    let beta: Vec<PWeight> = (1..=n)
        .map(|j| PWeight::new(inst.beta(j).clone(), BigRational::from_integer(j.into())))
        .collect();
    let alpha: Vec<PWeight> =
        (0..=n).map(|i| PWeight::from_rational(inst.alpha(i).clone())).collect();
    Instance::with_key_kind(
        inst.keys().to_vec(),
        inst.key_kind(),
        inst.queries().to_vec(),
        inst.ops(),
        alpha,
        beta,
    )
    .expect("perturbation preserves instance validity")
}
