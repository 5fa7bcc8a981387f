//! Univariate polynomials over `Q`, lowest degree first.

use crate::logic_core::Rational;
use crate::primes::prime_factors_u64;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

pub fn eval(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

/// Quotient of `p` by `x - r`, assuming `r` is a root.
fn deflate(p: &[Rational], r: &Rational) -> Vec<Rational> {
    let n = p.len() - 1;
    let mut q = vec![Rational::zero(); n];
    let mut carry = Rational::zero();
    for i in (1..=n).rev() {
        carry = &carry * r + &p[i];
        q[i - 1] = carry.clone();
    }
    q
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for q in prime_factors_u64(n) {
        let mut m = n;
        let mut e = 0;
        while m.is_multiple_of(q) {
            m /= q;
            e += 1;
        }
        let base = out.clone();
        let mut pw = 1u64;
        for _ in 0..e {
            pw *= q;
            out.extend(base.iter().map(|d| d * pw));
        }
    }
    out.sort_unstable();
    out
}

/// The distinct rational roots of a nonzero polynomial and the cofactor
/// left after dividing them out with multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalRoots {
    pub roots: Vec<Rational>,
    pub rest: Vec<Rational>,
}

/// `None` when the polynomial is zero or its extreme coefficients are too
/// large to enumerate divisors of.
pub fn rational_roots(p: &[Rational]) -> Option<RationalRoots> {
    let mut p = trim(p.to_vec());
    if p.is_empty() {
        return None;
    }
    let mut roots = Vec::new();
    if p[0].is_zero() {
        roots.push(Rational::zero());
        while p[0].is_zero() {
            p.remove(0);
        }
    }
    let lcm = p.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = p.iter().map(|c| (c * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let a0 = ints[0].abs().to_u64()?;
    let an = ints.last().unwrap().abs().to_u64()?;
    let (d0, dn) = (divisors(a0), divisors(an));
    if d0.len() * dn.len() > 1 << 16 {
        return None;
    }
    let mut candidates: Vec<Rational> = Vec::new();
    for r in &d0 {
        for s in &dn {
            let q = Rational::new(BigInt::from(*r), BigInt::from(*s));
            candidates.push(q.clone());
            candidates.push(-q);
        }
    }
    candidates.sort();
    candidates.dedup();
    for c in candidates {
        if p.len() < 2 {
            break;
        }
        if eval(&p, &c).is_zero() {
            roots.push(c.clone());
            while p.len() >= 2 && eval(&p, &c).is_zero() {
                p = deflate(&p, &c);
            }
        }
    }
    roots.sort();
    Some(RationalRoots { roots, rest: p })
}

pub fn degree(p: &[Rational]) -> usize {
    p.len().saturating_sub(1)
}
