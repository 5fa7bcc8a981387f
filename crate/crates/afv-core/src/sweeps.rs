//! Parameter sweeps over the hyperfield predicates with line-oriented
//! reports. Every sweep takes explicit bounds and a seed; per-item random
//! streams are derived from the seed and the item index, so reports do not
//! depend on the executor.

use crate::hyperfields::sampling::{check_hyper_add, SampleCheck};
use crate::hyperfields::{in_pdelta, project, tplus_kras, HClass, HyperCtx, ThetaKras};
use crate::local_fields::tplus;
use crate::logic_core::Rational;
use crate::par::Exec;
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

const MAX_LISTED: usize = 10;

/// Independent random stream for item `index` of a sweep.
pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaReport {
    pub p: u64,
    pub level: u32,
    pub gamma_bound: i64,
    pub l: u32,
    pub checked: usize,
    pub failures: usize,
    pub counterexamples: Vec<String>,
}

impl ThetaReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for ThetaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "cell: p={} level={} gamma_bound={} l={} checked={} failures={} status={}",
            self.p,
            self.level,
            self.gamma_bound,
            self.l,
            self.checked,
            self.failures,
            status(self.passed())
        )?;
        for c in &self.counterexamples {
            writeln!(f, "  counterexample: {c}")?;
        }
        Ok(())
    }
}

fn status(pass: bool) -> &'static str {
    if pass { "pass" } else { "FAIL" }
}

/// Compares the definition of the valuation subset with `v >= 0` on every
/// class of valuation at most `gamma_bound` in absolute value.
pub fn check_theta_kras(ctx: &HyperCtx, gamma_bound: i64, l: u32, exec: Exec) -> ThetaReport {
    let theta = ThetaKras::new(ctx, l);
    let classes = ctx.classes(gamma_bound);
    let bad: Vec<String> = exec
        .map(&classes, |&x| {
            let (lhs, rhs) = (theta.holds(x), in_pdelta(x));
            (lhs != rhs).then(|| format!("{x}: definition={lhs} nonnegative={rhs}"))
        })
        .into_iter()
        .flatten()
        .collect();
    ThetaReport { p: ctx.p(), level: ctx.level, gamma_bound, l, checked: classes.len(), failures: bad.len(), counterexamples: bad.into_iter().take(MAX_LISTED).collect() }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TplusReport {
    pub p: u64,
    pub level: u32,
    pub samples: usize,
    pub height: i64,
    pub seed: u64,
    /// `T+(x)` in the field but not in the hyperfield at its class.
    pub image_failures: usize,
    /// `T+` in the hyperfield at the class but not in the field.
    pub lift_failures: usize,
    pub counterexamples: Vec<String>,
}

impl TplusReport {
    pub fn passed(&self) -> bool {
        self.image_failures == 0 && self.lift_failures == 0
    }
}

impl fmt::Display for TplusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "cell: p={} level={} samples={} height={} seed={} image_failures={} lift_failures={} status={}",
            self.p,
            self.level,
            self.samples,
            self.height,
            self.seed,
            self.image_failures,
            self.lift_failures,
            status(self.passed())
        )?;
        for c in &self.counterexamples {
            writeln!(f, "  counterexample: {c}")?;
        }
        Ok(())
    }
}

/// A random nonzero rational with numerator and denominator of absolute
/// value at most `height`.
pub fn random_rational<R: Rng>(rng: &mut R, height: i64) -> Rational {
    let n = loop {
        let n = rng.gen_range(-height..=height);
        if n != 0 {
            break n;
        }
    };
    Rational::new(BigInt::from(n), BigInt::from(rng.gen_range(1..=height)))
}

/// Compares `T+` in `Q_p` with `T+` in the hyperfield at the projection.
pub fn check_tplus_projection(ctx: &HyperCtx, samples: usize, height: i64, seed: u64, exec: Exec) -> TplusReport {
    let idx: Vec<u64> = (0..samples as u64).collect();
    let rows = exec.map(&idx, |&i| {
        let x = random_rational(&mut item_rng(seed, i), height);
        let field = tplus(&x, ctx.p);
        let class = project(&x, ctx);
        let hyper = tplus_kras(class, ctx);
        (x, class, field, hyper)
    });
    let mut rep = TplusReport { p: ctx.p(), level: ctx.level, samples, height, seed, image_failures: 0, lift_failures: 0, counterexamples: Vec::new() };
    for (x, class, field, hyper) in rows {
        if field != hyper {
            if field {
                rep.image_failures += 1;
            } else {
                rep.lift_failures += 1;
            }
            if rep.counterexamples.len() < MAX_LISTED {
                rep.counterexamples.push(format!("x={x} class={class} field={field} hyperfield={hyper}"));
            }
        }
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingReport {
    pub p: u64,
    pub level: u32,
    pub gamma_bound: i64,
    pub seed: u64,
    pub min_samples: usize,
    pub pairs: usize,
    pub discrepancies: usize,
    pub counterexamples: Vec<String>,
}

impl SamplingReport {
    pub fn passed(&self) -> bool {
        self.discrepancies == 0
    }
}

impl fmt::Display for SamplingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "cell: p={} level={} gamma_bound={} min_samples={} seed={} pairs={} discrepancies={} status={}",
            self.p,
            self.level,
            self.gamma_bound,
            self.min_samples,
            self.seed,
            self.pairs,
            self.discrepancies,
            status(self.passed())
        )?;
        for c in &self.counterexamples {
            writeln!(f, "  counterexample: {c}")?;
        }
        Ok(())
    }
}

/// Compares the closed-form hypersum with sums of random representatives
/// for every pair of classes with valuation at most `gamma_bound`.
pub fn check_hyper_add_sampling(ctx: &HyperCtx, gamma_bound: i64, min_samples: usize, max_samples: usize, height: i64, seed: u64, exec: Exec) -> SamplingReport {
    let classes: Vec<HClass> = ctx.classes(gamma_bound).into_iter().filter(|x| !x.is_zero()).collect();
    let pairs: Vec<(u64, HClass, HClass)> =
        classes.iter().flat_map(|&x| classes.iter().map(move |&y| (x, y))).enumerate().map(|(i, (x, y))| (i as u64, x, y)).collect();
    let bad: Vec<String> = exec
        .map(&pairs, |&(i, x, y)| match check_hyper_add(x, y, ctx, &mut item_rng(seed, i), height, min_samples, max_samples) {
            SampleCheck::Agrees { .. } => None,
            other => Some(format!("{x} + {y}: {other:?}")),
        })
        .into_iter()
        .flatten()
        .collect();
    SamplingReport {
        p: ctx.p(),
        level: ctx.level,
        gamma_bound,
        seed,
        min_samples,
        pairs: pairs.len(),
        discrepancies: bad.len(),
        counterexamples: bad.into_iter().take(MAX_LISTED).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperfields::DEFAULT_THETA_L;
    use crate::primes::Prime;

    fn ctx(p: u64, level: u32) -> HyperCtx {
        HyperCtx::new(Prime::new(p).unwrap(), level).unwrap()
    }

    #[test]
    fn theta_definition_on_a_small_cell() {
        let r = check_theta_kras(&ctx(3, 2), 3, DEFAULT_THETA_L, Exec::Parallel);
        assert!(r.passed(), "{r}");
        assert_eq!(r.checked, ctx(3, 2).classes(3).len());
    }

    #[test]
    fn tplus_projection_at_two() {
        let r = check_tplus_projection(&ctx(2, 2), 200, 1000, 1, Exec::Parallel);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn tplus_projection_image_fails_at_five() {
        let r = check_tplus_projection(&ctx(5, 1), 300, 1000, 1, Exec::Parallel);
        assert!(r.image_failures > 0);
        assert_eq!(r.lift_failures, 0, "{r}");
    }

    #[test]
    fn sampling_small_cell_and_determinism() {
        let a = check_hyper_add_sampling(&ctx(3, 1), 1, 50, 2000, 1000, 9, Exec::Parallel);
        assert!(a.passed(), "{a}");
        let b = check_hyper_add_sampling(&ctx(3, 1), 1, 50, 2000, 1000, 9, Exec::Sequential);
        assert_eq!(a, b);
    }
}
