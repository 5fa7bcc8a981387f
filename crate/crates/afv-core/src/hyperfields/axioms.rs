//! Exhaustive and sampled checks of the canonical hypergroup axioms and
//! distributivity.

use super::{classset_add_with, h_mul, h_neg, ClassSet, HClass, HyperCtx};
use crate::par::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// A hyperaddition; the axioms are checked for whichever one is supplied.
pub type HyperAdd = fn(HClass, HClass, &HyperCtx) -> ClassSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub checked: u64,
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub p: u64,
    pub level: u32,
    pub gamma_bound: i64,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.counterexample.is_none())
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| c.counterexample.is_some()).map(|c| c.name).collect()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cell: p={} level={} gamma_bound={} samples={} seed={}", self.p, self.level, self.gamma_bound, self.samples, self.seed)?;
        for c in &self.checks {
            match &c.counterexample {
                None => writeln!(f, "  {}: pass ({} cases)", c.name, c.checked)?,
                Some(ce) => writeln!(f, "  {}: FAIL ({} cases) counterexample {}", c.name, c.checked, ce)?,
            }
        }
        Ok(())
    }
}

/// Runs `f` over every element of `xs` and keeps the first counterexample
/// in input order.
fn sweep<F>(exec: Exec, name: &'static str, xs: &[HClass], per_item: u64, f: F) -> AxiomCheck
where
    F: Fn(HClass) -> Option<String> + Sync + Send,
{
    let found = exec.map(xs, |x| f(*x));
    AxiomCheck { name, checked: xs.len() as u64 * per_item, counterexample: found.into_iter().flatten().next() }
}

pub fn check_hypergroup_axioms(ctx: &HyperCtx, gamma_bound: i64, sample_count: usize, seed: u64, exec: Exec) -> AxiomReport {
    check_hypergroup_axioms_with(super::hyper_add, ctx, gamma_bound, sample_count, seed, exec)
}

pub fn check_hypergroup_axioms_with(add: HyperAdd, ctx: &HyperCtx, gamma_bound: i64, sample_count: usize, seed: u64, exec: Exec) -> AxiomReport {
    let xs = ctx.classes(gamma_bound);
    let n = xs.len() as u64;
    let c = ctx;
    let mut checks = Vec::new();

    checks.push(sweep(exec, "commutativity", &xs, n, |x| {
        xs.iter().find(|&&y| add(x, y, c) != add(y, x, c)).map(|y| format!("{x} + {y}"))
    }));
    checks.push(sweep(exec, "neutral element", &xs, 1, |x| {
        (add(HClass::Zero, x, c) != ClassSet::Single(x) || add(x, HClass::Zero, c) != ClassSet::Single(x)).then(|| format!("0 + {x}"))
    }));
    checks.push(sweep(exec, "unique negative", &xs, n, |x| {
        let negs: Vec<HClass> = xs.iter().copied().filter(|&y| add(x, y, c).contains(HClass::Zero, c)).collect();
        (negs != vec![h_neg(x, c)]).then(|| format!("{x} has negatives {negs:?}"))
    }));
    checks.push(sweep(exec, "reversibility", &xs, n * n, |y| {
        let ny = h_neg(y, c);
        for &z in &xs {
            let s = add(y, z, c);
            for &x in &xs {
                if s.contains(x, c) && !add(x, ny, c).contains(z, c) {
                    return Some(format!("{x} in {y} + {z} but {z} not in {x} - {y}"));
                }
            }
        }
        None
    }));
    checks.push(sweep(exec, "valuation bound", &xs, n, |x| {
        xs.iter()
            .find(|&&y| {
                let lo = match (x.val(), y.val()) {
                    (Some(a), Some(b)) => a.min(b),
                    (a, b) => a.or(b).unwrap_or(i64::MAX),
                };
                match add(x, y, c) {
                    ClassSet::Ball { gamma_min } => gamma_min < lo,
                    s => s.members(c).unwrap().iter().any(|t| t.val().is_some_and(|v| v < lo)),
                }
            })
            .map(|y| format!("{x} + {y}"))
    }));
    checks.push(sweep(exec, "distributivity", &xs, n * n, |r| {
        for &s in &xs {
            for &t in &xs {
                if add(s, t, c).scale(r, c) != add(h_mul(r, s, c), h_mul(r, t, c), c) {
                    return Some(format!("{r} * ({s} + {t})"));
                }
            }
        }
        None
    }));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[HClass; 3]> = (0..sample_count).map(|_| [0; 3].map(|_| xs[rng.gen_range(0..xs.len())])).collect();
    let found = exec.map(&triples, |&[x, y, z]| {
        let left = classset_add_with(add, &add(x, y, c), z, c);
        let right = classset_add_with(add, &add(y, z, c), x, c);
        (left != right).then(|| format!("({x} + {y}) + {z} = {left} but {x} + ({y} + {z}) = {right}"))
    });
    checks.push(AxiomCheck { name: "associativity", checked: sample_count as u64, counterexample: found.into_iter().flatten().next() });

    AxiomReport { p: ctx.p(), level: ctx.level, gamma_bound, samples: sample_count, seed, checks }
}
