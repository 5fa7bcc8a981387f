//! The residue ring `Z_p / p^l Z_p` recovered inside the hyperfield.
//!
//! `psi` sends a class of valuation at least 0 to its residue modulo `p^l`.
//! Its zero fiber is `{x : 1 in 1 + x}`, i.e. zero and the classes of
//! valuation at least `l`. Two classes are equivalent when `h in g + z` for
//! some `z` in the zero fiber; the induced addition and multiplication make
//! the equivalence classes a ring isomorphic to `Z / p^l`.

use crate::hyperfields::{h_mul, hyper_add, in_pdelta, sigma, HClass, HyperCtx};
use crate::par::Exec;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ResidueError {
    #[error("{0} has negative valuation")]
    NegativeValuation(HClass),
}

fn one() -> HClass {
    HClass::Cls { gamma: 0, u: 1 }
}

/// `1 in 1 + g`.
pub fn in_zero_fiber(g: HClass, ctx: &HyperCtx) -> bool {
    sigma(one(), g, one(), ctx)
}

/// `h in g + z` for some `z` in the zero fiber.
///
/// With `g = (a; u)` and `z = (c; w)`, `c >= l`: if `c >= a + l` the sum is
/// `{g}` (as for `z = 0`); if `g = 0` the sum is `{z}`. So only
/// `l <= c <= max(v(g), v(h)) + l` needs searching.
pub fn e_equiv(g: HClass, h: HClass, ctx: &HyperCtx) -> bool {
    if g == h {
        return true;
    }
    let lv = ctx.level as i64;
    let top = g.val().unwrap_or(0).max(h.val().unwrap_or(0)).max(0) + lv;
    let units = ctx.units();
    (lv..=top).any(|c| units.iter().any(|&w| sigma(g, HClass::Cls { gamma: c, u: w }, h, ctx)))
}

/// The residue `p^a u mod p^l` of a class of valuation `a >= 0`.
pub fn psi(g: HClass, ctx: &HyperCtx) -> Result<u64, ResidueError> {
    match g {
        HClass::Zero => Ok(0),
        HClass::Cls { gamma, .. } if gamma < 0 => Err(ResidueError::NegativeValuation(g)),
        HClass::Cls { gamma, .. } if gamma >= ctx.level as i64 => Ok(0),
        HClass::Cls { gamma, u } => Ok(ctx.ppow(gamma as u32) * u % ctx.modulus()),
    }
}

/// An equivalence class, held by its canonical representative: zero, or
/// `(a; u)` with `0 <= a < l` and `u` reduced modulo `p^(l-a)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EClass(HClass);

impl EClass {
    pub fn new(g: HClass, ctx: &HyperCtx) -> Result<EClass, ResidueError> {
        match g {
            HClass::Cls { gamma, .. } if gamma < 0 => Err(ResidueError::NegativeValuation(g)),
            HClass::Cls { gamma, u } if gamma < ctx.level as i64 => {
                let keep = ctx.modulus() / ctx.ppow(gamma as u32);
                Ok(EClass(HClass::Cls { gamma, u: u % keep }))
            }
            _ => Ok(EClass(HClass::Zero)),
        }
    }

    pub fn rep(&self) -> HClass {
        self.0
    }

    pub fn residue(&self, ctx: &HyperCtx) -> u64 {
        psi(self.0, ctx).expect("canonical classes have valuation at least 0")
    }
}

impl fmt::Display for EClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0)
    }
}

/// Canonical class of some `j` in `a + b`; every choice of `j` gives the
/// same class.
pub fn eclass_add(a: EClass, b: EClass, ctx: &HyperCtx) -> EClass {
    let s = hyper_add(a.0, b.0, ctx);
    let witnesses = s.members(ctx).unwrap_or_else(|| vec![HClass::Zero]);
    let first = EClass::new(witnesses[0], ctx).expect("sums of integral classes are integral");
    debug_assert!(witnesses.iter().all(|&j| EClass::new(j, ctx) == Ok(first)), "sum class depends on the witness");
    first
}

pub fn eclass_mul(a: EClass, b: EClass, ctx: &HyperCtx) -> EClass {
    EClass::new(h_mul(a.0, b.0, ctx), ctx).expect("products of integral classes are integral")
}

/// Classes of valuation between 0 and `gamma_bound`, zero first.
pub fn integral_classes(ctx: &HyperCtx, gamma_bound: i64) -> Vec<HClass> {
    ctx.classes(gamma_bound).into_iter().filter(|&g| in_pdelta(g)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoReport {
    pub p: u64,
    pub level: u32,
    pub gamma_bound: i64,
    pub classes_checked: usize,
    pub eclasses: usize,
    pub failures: Vec<String>,
}

impl IsoReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for IsoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "cell: p={} level={} gamma_bound={} classes={} eclasses={} status={}",
            self.p,
            self.level,
            self.gamma_bound,
            self.classes_checked,
            self.eclasses,
            if self.passed() { "pass" } else { "FAIL" }
        )?;
        for e in &self.failures {
            writeln!(f, "  counterexample: {e}")?;
        }
        Ok(())
    }
}

const MAX_FAILURES: usize = 10;

/// Checks that `psi` induces a bijection from equivalence classes onto
/// `Z / p^l` that respects the induced operations, and that the hyperfield
/// definition of the equivalence agrees with equality of residues.
pub fn check_ring_iso(ctx: &HyperCtx, gamma_bound: i64, exec: Exec) -> IsoReport {
    let classes = integral_classes(ctx, gamma_bound);
    let m = ctx.modulus();
    let mut failures = Vec::new();

    let mut by_residue: BTreeMap<u64, BTreeSet<EClass>> = BTreeMap::new();
    for &g in &classes {
        let e = EClass::new(g, ctx).unwrap();
        by_residue.entry(e.residue(ctx)).or_default().insert(e);
    }
    let eclasses: Vec<EClass> = by_residue.values().flatten().copied().collect();
    for (r, es) in &by_residue {
        if es.len() > 1 {
            failures.push(format!("residue {r} has {} classes", es.len()));
        }
    }
    if by_residue.len() as u64 != m {
        failures.push(format!("image has {} of {m} residues", by_residue.len()));
    }

    // the equivalence defined inside the hyperfield
    let found = exec.map(&classes, |&g| {
        let eg = EClass::new(g, ctx).unwrap();
        if !e_equiv(g, eg.rep(), ctx) || !e_equiv(eg.rep(), g, ctx) {
            return Some(format!("{g} not equivalent to its canonical form {eg}"));
        }
        if in_zero_fiber(g, ctx) != (eg.rep() == HClass::Zero) {
            return Some(format!("zero fiber membership of {g}"));
        }
        None
    });
    failures.extend(found.into_iter().flatten());
    let found = exec.map(&eclasses, |&a| eclasses.iter().find(|&&b| a != b && e_equiv(a.rep(), b.rep(), ctx)).map(|b| format!("distinct classes {a} and {b} are equivalent")));
    failures.extend(found.into_iter().flatten());

    // operations on arbitrary representatives
    let found = exec.map(&classes, |&g| {
        let eg = EClass::new(g, ctx).unwrap();
        for &h in &classes {
            let eh = EClass::new(h, ctx).unwrap();
            let (rg, rh) = (eg.residue(ctx), eh.residue(ctx));
            let sum = hyper_add(g, h, ctx);
            let witnesses = sum.members(ctx).unwrap_or_else(|| vec![HClass::Zero]);
            for j in witnesses {
                if psi(j, ctx).ok() != Some((rg + rh) % m) {
                    return Some(format!("psi({j}) for {j} in {g} + {h}"));
                }
            }
            if eclass_mul(eg, eh, ctx).residue(ctx) != rg * rh % m {
                return Some(format!("psi({g} * {h})"));
            }
        }
        None
    });
    failures.extend(found.into_iter().flatten());
    failures.truncate(MAX_FAILURES);

    IsoReport { p: ctx.p(), level: ctx.level, gamma_bound, classes_checked: classes.len(), eclasses: eclasses.len(), failures }
}

/// Number of classes among those of valuation at most `gamma_bound` with
/// residue `r`.
pub fn fiber_size(r: u64, ctx: &HyperCtx, gamma_bound: i64) -> usize {
    integral_classes(ctx, gamma_bound).into_iter().filter(|&g| psi(g, ctx) == Ok(r)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::Prime;

    fn ctx(p: u64, l: u32) -> HyperCtx {
        HyperCtx::new(Prime::new(p).unwrap(), l).unwrap()
    }

    #[test]
    fn zero_fiber() {
        let c = ctx(5, 1);
        for u in 1..5 {
            assert!(in_zero_fiber(HClass::Cls { gamma: 2, u }, &c));
        }
        assert!(!in_zero_fiber(HClass::Cls { gamma: 0, u: 2 }, &c));
        assert!(in_zero_fiber(HClass::Zero, &c));
    }

    #[test]
    fn equivalence_examples() {
        let c = ctx(3, 2);
        for u in c.units() {
            assert!(e_equiv(HClass::Cls { gamma: 2, u }, HClass::Zero, &c));
        }
        assert!(!e_equiv(HClass::Cls { gamma: 0, u: 1 }, HClass::Cls { gamma: 0, u: 2 }, &c));
        assert!(e_equiv(HClass::Cls { gamma: 1, u: 2 }, HClass::Cls { gamma: 1, u: 5 }, &c));
    }

    #[test]
    fn residues() {
        let c = ctx(3, 2);
        assert_eq!(psi(HClass::Cls { gamma: 0, u: 1 }, &c), Ok(1));
        assert_eq!(psi(HClass::Cls { gamma: 1, u: 2 }, &c), Ok(6));
        assert!(psi(HClass::Cls { gamma: -1, u: 1 }, &c).is_err());
    }

    #[test]
    fn induced_operations() {
        let c = ctx(3, 2);
        let e = |g, u| EClass::new(HClass::Cls { gamma: g, u }, &c).unwrap();
        assert_eq!(eclass_add(e(0, 1), e(0, 2), &c).residue(&c), 3);
        assert_eq!(eclass_mul(e(1, 1), e(1, 2), &c), EClass::new(HClass::Zero, &c).unwrap());
        let zero = EClass::new(HClass::Zero, &c).unwrap();
        assert_eq!(eclass_add(zero, e(1, 4), &c), e(1, 4));
    }

    #[test]
    fn isomorphism_reports() {
        for (p, l, bound, n) in [(3, 2, 4, 9), (2, 3, 5, 8), (5, 1, 2, 5)] {
            let r = check_ring_iso(&ctx(p, l), bound, Exec::Parallel);
            assert!(r.passed(), "{r}");
            assert_eq!(r.eclasses, n);
        }
    }

    #[test]
    fn fiber_sizes() {
        let c = ctx(3, 3);
        // residue 9 = 3^2 * 1: classes (2; u) with u = 1 mod 3
        assert_eq!(fiber_size(9, &c, 3), 9);
        assert_eq!(fiber_size(1, &c, 3), 1);
        assert_eq!(fiber_size(3, &c, 3), 3);
    }
}
