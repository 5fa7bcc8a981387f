//! Artin-Schreier type predicates and the existential-universal definition
//! of the valuation subset on the hyperfield.
//!
//! Witness window for `exists y. sigma(y^2, y, x)` with `y = (c; w)`:
//!
//! * `c > 0`: `y^2 + y` is the single class `(c; w + w^2 p^c)`, so `v(x) = c`;
//! * `c < 0`: it is `(2c; w^2 + w p^-c)`, so `v(x) = 2c`;
//! * `c = 0`: every member has valuation at least 0.
//!
//! So `c` ranges over `{v(x), v(x)/2, 0}`; the context margin widens each of
//! these to an interval, and widening never changes an answer.
//!
//! Every class satisfying `T+` has valuation 0. For `v(x) = c > 0` and any
//! unit `u`, `w + w^2 p^c = u` is solvable modulo `p^l` by Hensel lifting,
//! so `(c; w)` witnesses the Artin-Schreier predicate at `x`; for `v(x) < 0`
//! the same holds at `x^-1`. Thus the quantifiers over `T+` range over the
//! finitely many unit classes.

use super::{classset_add, h_inv, h_mul, h_neg, h_pow, hyper_add, ClassSet, ClassUnion, HClass, HyperCtx};
use std::collections::BTreeSet;

pub const DEFAULT_MARGIN: i64 = 2;

/// Exponent in the power clause. A multiple of `p - 1` for every `p <= 7`,
/// so `x^l = 1 mod p` for units of the small residue fields.
pub const DEFAULT_THETA_L: u32 = 12;

fn window(x: HClass, margin: i64) -> BTreeSet<i64> {
    let g = x.val().unwrap_or(0);
    let mut centers = vec![0, g];
    if g < 0 {
        centers.push(g.div_euclid(2));
    }
    centers.into_iter().flat_map(|c| c - margin..=c + margin).collect()
}

/// `exists y. x in y^2 + y`.
pub fn p2as_kras(x: HClass, ctx: &HyperCtx) -> bool {
    if x.is_zero() {
        return true;
    }
    let units = ctx.units();
    window(x, ctx.margin).into_iter().any(|c| {
        units.iter().any(|&w| {
            let y = HClass::Cls { gamma: c, u: w };
            hyper_add(h_mul(y, y, ctx), y, ctx).contains(x, ctx)
        })
    })
}

pub fn tplus_kras(x: HClass, ctx: &HyperCtx) -> bool {
    match h_inv(x, ctx) {
        Err(_) => false,
        Ok(inv) => !p2as_kras(x, ctx) && !p2as_kras(inv, ctx),
    }
}

/// Which disjunct of the definition holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ThetaClause {
    /// `x in (a + b) + cd` with `a, b, c, d` in `T+`.
    SumProduct,
    /// `(x^l - 1) + y` meets `T+` for some `y` in `T+`.
    Power,
    /// `x - 1` contains a class satisfying the previous clause.
    Shifted,
}

/// The definition with its parameter-free parts precomputed.
#[derive(Clone, Debug)]
pub struct ThetaKras {
    ctx: HyperCtx,
    l: u32,
    tplus: Vec<u64>,
    sum_product: ClassUnion,
    /// Classes `s` with `(s + y)` meeting `T+` for some `y` in `T+`; by
    /// reversibility this is the union of `w - y` over `w, y` in `T+`.
    power_targets: ClassUnion,
}

impl ThetaKras {
    pub fn new(ctx: &HyperCtx, l: u32) -> ThetaKras {
        let tplus: Vec<u64> = ctx.units().into_iter().filter(|&u| tplus_kras(HClass::Cls { gamma: 0, u }, ctx)).collect();
        let unit = |u: u64| HClass::Cls { gamma: 0, u };

        let mut pair_sums = ClassUnion::default();
        let mut power_targets = ClassUnion::default();
        for &a in &tplus {
            for &b in &tplus {
                pair_sums.insert_set(&hyper_add(unit(a), unit(b), ctx), ctx);
                power_targets.insert_set(&hyper_add(unit(a), h_neg(unit(b), ctx), ctx), ctx);
            }
        }
        let products: BTreeSet<u64> = tplus.iter().flat_map(|&c| tplus.iter().map(move |&d| (c, d))).map(|(c, d)| c * d % ctx.modulus()).collect();
        let mut sum_product = ClassUnion::default();
        for &cd in &products {
            for &w in pair_sums.classes() {
                sum_product.insert_set(&hyper_add(w, unit(cd), ctx), ctx);
            }
            if let Some(g) = pair_sums.ball() {
                sum_product.extend(&classset_add(&ClassSet::Ball { gamma_min: g }, unit(cd), ctx), ctx);
            }
        }
        ThetaKras { ctx: *ctx, l, tplus, sum_product, power_targets }
    }

    /// Unit residues of the classes satisfying `T+`.
    pub fn tplus_units(&self) -> &[u64] {
        &self.tplus
    }

    fn minus_one(&self) -> HClass {
        h_neg(HClass::Cls { gamma: 0, u: 1 }, &self.ctx)
    }

    fn power_clause(&self, x: HClass) -> bool {
        let s = hyper_add(h_pow(x, self.l, &self.ctx), self.minus_one(), &self.ctx);
        self.power_targets.meets(&s, &self.ctx)
    }

    /// The first disjunct that holds at `x`, if any.
    pub fn clause(&self, x: HClass) -> Option<ThetaClause> {
        if self.sum_product.contains(x) {
            return Some(ThetaClause::SumProduct);
        }
        if self.power_clause(x) {
            return Some(ThetaClause::Power);
        }
        let shifted = hyper_add(x, self.minus_one(), &self.ctx);
        let hit = match shifted.members(&self.ctx) {
            Some(ss) => ss.into_iter().any(|s| self.power_clause(s)),
            None => {
                // s^l is congruent to 0 once l v(s) >= level, so the clause
                // at such s agrees with the clause at 0.
                let ClassSet::Ball { gamma_min } = shifted else { unreachable!() };
                let top = (self.ctx.level as i64 + self.l as i64 - 1) / self.l as i64;
                self.power_clause(HClass::Zero)
                    || (gamma_min..top).any(|g| self.ctx.units().into_iter().any(|u| self.power_clause(HClass::Cls { gamma: g, u })))
            }
        };
        hit.then_some(ThetaClause::Shifted)
    }

    pub fn holds(&self, x: HClass) -> bool {
        self.clause(x).is_some()
    }
}

pub fn theta_kras(x: HClass, ctx: &HyperCtx, l: u32) -> bool {
    ThetaKras::new(ctx, l).holds(x)
}

#[cfg(test)]
mod tests {
    use super::super::tests::ctx;
    use super::super::{in_pdelta, project};
    use super::*;
    use crate::local_fields::rat;

    #[test]
    fn artin_schreier_examples() {
        let c = ctx(5, 1);
        assert!(p2as_kras(project(&rat(2, 1), &c), &c));
        assert!(p2as_kras(HClass::Zero, &c));
        assert!(!tplus_kras(project(&rat(2, 1), &c), &c));
        assert!(!tplus_kras(HClass::Zero, &c));
        // 4 + 2 = 1 mod 5, although 1 + 4 = 5 is not a square in Q_5
        assert!(p2as_kras(project(&rat(1, 1), &c), &c));
    }

    #[test]
    fn tplus_classes_are_units() {
        for (p, l) in [(2, 1), (2, 3), (3, 2), (5, 1), (7, 2)] {
            let c = ctx(p, l);
            for x in c.classes(6) {
                if tplus_kras(x, &c) {
                    assert_eq!(x.val(), Some(0), "{x} at p = {p}, l = {l}");
                }
            }
        }
    }

    #[test]
    fn theta_examples() {
        let c = ctx(5, 1);
        let t = ThetaKras::new(&c, 2);
        assert!(t.holds(c.cls(2, 3).unwrap()));
        assert!(!t.holds(c.cls(-1, 1).unwrap()));
        assert!(t.holds(HClass::Zero));
        assert_eq!(theta_kras(HClass::Zero, &c, 2), in_pdelta(HClass::Zero));
    }

    #[test]
    fn margin_does_not_change_answers() {
        for (p, l) in [(2, 2), (3, 1), (5, 2)] {
            let c = ctx(p, l);
            let wide = c.with_margin(6);
            for x in c.classes(5) {
                assert_eq!(p2as_kras(x, &c), p2as_kras(x, &wide), "{x}");
            }
        }
    }
}
