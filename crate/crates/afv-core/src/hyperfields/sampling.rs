//! Checking hypersums against sums of random representatives.

use super::{hyper_add, project, ClassSet, HClass, HyperCtx};
use crate::logic_core::Rational;
use num_bigint::BigInt;
use rand::Rng;
use std::collections::BTreeSet;

/// A random element of the class `x` whose unit part has numerator and
/// denominator of absolute value at most `height`.
pub fn sample_representative<R: Rng>(x: HClass, ctx: &HyperCtx, rng: &mut R, height: i64) -> Rational {
    let HClass::Cls { gamma, u } = x else { return Rational::from_integer(0.into()) };
    let p = ctx.p() as i64;
    let m = ctx.modulus() as i64;
    assert!(height >= m, "height must be at least p^level");
    let d = loop {
        let d = rng.gen_range(1..=height);
        if d % p != 0 {
            break d;
        }
    };
    let r = ((u as i128 * d as i128) % m as i128) as i64;
    let kmin = (-height - r).div_euclid(m) + 1;
    let kmax = (height - r).div_euclid(m);
    let n = r + m * rng.gen_range(kmin..=kmax);
    let scale = Rational::from_integer(BigInt::from(p)).pow(gamma as i32);
    Rational::new(n.into(), d.into()) * scale
}

/// Outcome of sampling one pair of classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SampleCheck {
    Agrees { samples: usize },
    /// A sampled sum outside the closed form.
    Outside { sum: HClass },
    /// A member of the closed form never hit within the sample budget.
    Uncovered { member: HClass, samples: usize },
}

/// Draws representative pairs of `x` and `y` (at least `min_samples`, at
/// most `max_samples`) and compares the classes of their sums with
/// `hyper_add`. Single and sphere results must be covered exactly; a ball
/// must have every unit class at its lowest valuation hit, plus some class
/// below that.
pub fn check_hyper_add<R: Rng>(x: HClass, y: HClass, ctx: &HyperCtx, rng: &mut R, height: i64, min_samples: usize, max_samples: usize) -> SampleCheck {
    let closed = hyper_add(x, y, ctx);
    let mut wanted: BTreeSet<HClass> = match closed.members(ctx) {
        Some(ms) => ms.into_iter().collect(),
        None => {
            let ClassSet::Ball { gamma_min } = closed else { unreachable!() };
            ctx.units().into_iter().map(|u| HClass::Cls { gamma: gamma_min, u }).collect()
        }
    };
    let mut deeper_seen = !matches!(closed, ClassSet::Ball { .. });
    let mut n = 0;
    while n < min_samples || (!(wanted.is_empty() && deeper_seen) && n < max_samples) {
        let s = project(&(sample_representative(x, ctx, rng, height) + sample_representative(y, ctx, rng, height)), ctx);
        if !closed.contains(s, ctx) {
            return SampleCheck::Outside { sum: s };
        }
        if let ClassSet::Ball { gamma_min } = closed {
            deeper_seen |= s.val().is_none_or(|v| v > gamma_min);
        }
        wanted.remove(&s);
        n += 1;
    }
    match wanted.into_iter().next() {
        Some(member) => SampleCheck::Uncovered { member, samples: n },
        None if !deeper_seen => SampleCheck::Uncovered { member: HClass::Zero, samples: n },
        None => SampleCheck::Agrees { samples: n },
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::ctx;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn representatives_lie_in_their_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (p, l) in [(2, 3), (3, 2), (7, 3)] {
            let c = ctx(p, l);
            for x in c.classes(2) {
                for _ in 0..20 {
                    assert_eq!(project(&sample_representative(x, &c, &mut rng, 1000), &c), x);
                }
            }
        }
    }

    #[test]
    fn closed_forms_match_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = ctx(3, 2);
        let classes = c.classes(1);
        for &x in &classes {
            for &y in &classes {
                let r = check_hyper_add(x, y, &c, &mut rng, 1000, 50, 3000);
                assert!(matches!(r, SampleCheck::Agrees { .. }), "{x} + {y}: {r:?}");
            }
        }
    }
}
