//! Seeded random instance generation, shared by the CLI and the test
//! suites. Same seed and configuration, same instance.

use crate::instances::{canonical_queries, CmpOp, Instance, KeyKind, OpSet, QueryVariant};
use num::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

#[derive(Clone, Debug)]
pub enum WeightStyle {
    /// Integers drawn uniformly from `0..=max` (zeros allowed).
    Ints { max: u32 },
    /// Integers drawn from a short palette, forcing plenty of ties.
    Tied,
    /// Rationals `p/q` with small numerators and denominators.
    Rationals { max_numer: u32, max_denom: u32 },
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub n: usize,
    pub ops: OpSet,
    pub standard: bool,
    pub style: WeightStyle,
}

impl GenConfig {
    pub fn new(n: usize) -> GenConfig {
        GenConfig { n, ops: OpSet::all(), standard: true, style: WeightStyle::Ints { max: 20 } }
    }
}

fn draw(rng: &mut ChaCha8Rng, style: &WeightStyle) -> BigRational {
    match style {
        WeightStyle::Ints { max } => BigRational::from_integer(rng.gen_range(0..=*max).into()),
        WeightStyle::Tied => {
            let palette = [1u32, 1, 2, 2, 2, 5];
            BigRational::from_integer(palette[rng.gen_range(0..palette.len())].into())
        }
        WeightStyle::Rationals { max_numer, max_denom } => BigRational::new(
            rng.gen_range(0..=*max_numer).into(),
            rng.gen_range(1..=*max_denom).into(),
        ),
    }
}

/// Generates an instance deterministically from a seed. Keys are the
/// integers `1..=n`.
pub fn instance(seed: u64, cfg: &GenConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n;
    let keys: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let beta: Vec<BigRational> = (0..n).map(|_| draw(&mut rng, &cfg.style)).collect();
    let alpha: Vec<BigRational> = if cfg.standard {
        (0..=n).map(|_| draw(&mut rng, &cfg.style)).collect()
    } else {
        vec![BigRational::from_integer(0.into()); n + 1]
    };
    let variant =
        if cfg.standard { QueryVariant::Standard } else { QueryVariant::SuccessfulOnly };
    Instance::with_key_kind(
        keys,
        KeyKind::Int,
        canonical_queries(n, variant),
        cfg.ops,
        alpha,
        beta,
    )
    .expect("generated instances are valid")
}

/// A uniformly random nonempty operator subset.
pub fn random_ops(rng: &mut ChaCha8Rng) -> OpSet {
    let bits = rng.gen_range(1u8..8);
    let mut ops = OpSet::empty();
    if bits & 1 != 0 {
        ops.insert(CmpOp::Lt);
    }
    if bits & 2 != 0 {
        ops.insert(CmpOp::Le);
    }
    if bits & 4 != 0 {
        ops.insert(CmpOp::Eq);
    }
    ops
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = GenConfig::new(6);
        assert_eq!(instance(42, &cfg), instance(42, &cfg));
        assert_ne!(instance(42, &cfg), instance(43, &cfg));
    }

    #[test]
    fn respects_variant() {
        let mut cfg = GenConfig::new(4);
        cfg.standard = false;
        let inst = instance(1, &cfg);
        assert_eq!(inst.queries().len(), 4);
        cfg.standard = true;
        let inst = instance(1, &cfg);
        assert_eq!(inst.queries().len(), 9);
    }
}
