//! Exact p-adic facts about rational numbers: valuations, unit residues,
//! power predicates, Artin-Schreier solvability and the set `T+`.
//!
//! Rationals are dense in `Q_p`, so every predicate here is evaluated on the
//! rational point itself; no p-adic approximation is involved except where a
//! formula forces an irrational root (see [`eval`]).

mod eval;
mod laurent;
mod padic;
pub mod poly;

pub use eval::{eval_at_prime, eval_generic, GenericOutcome, LocalEvalError, Outcome, SearchConfig};
pub use laurent::Laurent;
pub use padic::PAdic;

use crate::logic_core::Rational;
use crate::primes::{mul_mod, pow_mod, prime_factors, Prime, TooLarge};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// A p-adic valuation; `Infinity` is the valuation of zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LocalError {
    #[error("zero has no unit part")]
    Zero,
    #[error("modulus {p}^{k} does not fit in 64 bits")]
    Overflow { p: u64, k: u32 },
    #[error("coefficient {0} is not p-integral")]
    NotIntegral(String),
    #[error("cannot parse rational `{0}`")]
    Parse(String),
}

/// Parses `n` or `n/d`.
pub fn parse_rational(text: &str) -> Result<Rational, LocalError> {
    let err = || LocalError::Parse(text.to_string());
    let t = text.trim();
    match t.split_once('/') {
        None => t.parse::<BigInt>().map(Rational::from_integer).map_err(|_| err()),
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// All rationals `n/d` in lowest terms with `|n|, d <= bound`, by height.
pub fn rationals_by_height(bound: u64) -> Vec<Rational> {
    let mut out = vec![Rational::zero()];
    for h in 1..=bound as i64 {
        for d in 1..=h {
            for n in [h, -h] {
                if n.gcd(&d) == 1 {
                    out.push(rat(n, d));
                }
            }
        }
        for n in 1..h {
            if n.gcd(&h) == 1 {
                out.push(rat(n, h));
                out.push(rat(-n, h));
            }
        }
    }
    out
}

fn strip(n: &BigInt, p: &BigInt) -> (i64, BigInt) {
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return (v, n);
        }
        n = q;
        v += 1;
    }
}

/// Writes `x = p^v * n/d` with `p` dividing neither `n` nor `d`.
pub fn split_unit(x: &Rational, p: Prime) -> Option<(i64, BigInt, BigInt)> {
    if x.is_zero() {
        return None;
    }
    let bp = BigInt::from(p.get());
    let (vn, n) = strip(x.numer(), &bp);
    let (vd, d) = strip(x.denom(), &bp);
    Some((vn - vd, n, d))
}

/// The exact p-adic valuation.
pub fn vp(x: &Rational, p: Prime) -> Valuation {
    match split_unit(x, p) {
        None => Valuation::Infinity,
        Some((v, _, _)) => Valuation::Finite(v),
    }
}

/// `p^k` if it fits in 64 bits.
pub fn prime_power(p: u64, k: u32) -> Result<u64, LocalError> {
    p.checked_pow(k).ok_or(LocalError::Overflow { p, k })
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let g = a.extended_gcd(m);
    debug_assert!(g.gcd.is_one());
    g.x.mod_floor(m)
}

/// `n * d^-1 mod m` for `d` invertible modulo `m`.
pub fn residue_mod(n: &BigInt, d: &BigInt, m: &BigInt) -> BigInt {
    (n.mod_floor(m) * mod_inverse(&d.mod_floor(m), m)).mod_floor(m)
}

/// The unit part of `x` modulo `p^k`.
pub fn unit_residue(x: &Rational, p: Prime, k: u32) -> Result<u64, LocalError> {
    let (_, n, d) = split_unit(x, p).ok_or(LocalError::Zero)?;
    let m = BigInt::from(prime_power(p.get(), k)?);
    Ok(residue_mod(&n, &d, &m).to_u64().expect("reduced residue"))
}

/// Precision at which a unit's k-th power class is decided by Hensel's lemma:
/// a root of `y^k = u` modulo `p^(2 v_p(k) + 1)` lifts to `Z_p`.
pub fn kth_power_precision(p: u64, k: u32) -> u32 {
    let mut v = 0;
    let mut m = k as u64;
    while m.is_multiple_of(p) {
        m /= p;
        v += 1;
    }
    if v == 0 {
        1
    } else {
        2 * v + 1
    }
}

/// Whether the unit residue `u mod p^N` (with `N = kth_power_precision`) is a
/// k-th power of a unit.
pub fn unit_residue_is_kth_power(u: u64, p: u64, k: u32) -> bool {
    let n = kth_power_precision(p, k);
    if n == 1 {
        let g = (k as u64).gcd(&(p - 1));
        return pow_mod(u % p, (p - 1) / g, p) == 1;
    }
    let m = p.pow(n);
    (1..m).filter(|y| y % p != 0).any(|y| pow_mod(y, k as u64, m) == u % m)
}

/// Whether `x` is a k-th power in `Q_p`; zero counts as a power.
pub fn is_kth_power(x: &Rational, p: Prime, k: u32) -> bool {
    assert!(k >= 1, "exponent must be positive");
    let Some((v, _, _)) = split_unit(x, p) else { return true };
    if v.rem_euclid(k as i64) != 0 {
        return false;
    }
    let n = kth_power_precision(p.get(), k);
    let u = unit_residue(x, p, n).expect("nonzero");
    unit_residue_is_kth_power(u, p.get(), k)
}

pub fn is_square(x: &Rational, p: Prime) -> bool {
    is_kth_power(x, p, 2)
}

/// Whether `y^2 + y = x` has a solution in `Q_p`, i.e. `1 + 4x` is a square.
pub fn p2as(x: &Rational, p: Prime) -> bool {
    is_square(&(Rational::one() + Rational::from_integer(4.into()) * x), p)
}

/// `x != 0` and neither `x` nor `1/x` is of the form `y^2 + y`.
pub fn tplus(x: &Rational, p: Prime) -> bool {
    let holds = !x.is_zero() && !p2as(x, p) && !p2as(&x.recip(), p);
    debug_assert!(!holds || vp(x, p) == Valuation::Finite(0), "T+ element of nonzero valuation: {x} at {p}");
    holds
}

/// A witness that `x` lies in the valuation ring via `T+` sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RingWitness {
    /// `x = shift + a + b + c*d` with `a, b, c, d` in `T+`.
    SumOfFour { shift: u8, a: Rational, b: Rational, c: Rational, d: Rational },
    /// `T+(y)` and `T+(x^l - 1 + y)`.
    Shifted { y: Rational },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundedSearch {
    Found(Box<RingWitness>),
    Unknown,
}

const RING_SEARCH_BUDGET: u64 = 4_000_000;

/// Bounded witness search for membership of `x` in
/// `{0,1} + {a+b+cd : a,b,c,d in T+} u {x : exists y. T+(y) and T+(x^l-1+y)}`.
///
/// `a, b, c, y` range over rationals of height at most `search_bound`; `d` is
/// solved for. Elements of negative valuation are reported `Unknown` without
/// searching: `T+` consists of units, so both sets lie in the valuation ring.
pub fn in_valuation_ring_bounded(x: &Rational, p: Prime, search_bound: u64, l: u32) -> BoundedSearch {
    if matches!(vp(x, p), Valuation::Finite(v) if v < 0) {
        return BoundedSearch::Unknown;
    }
    let t: Vec<Rational> = rationals_by_height(search_bound).into_iter().filter(|r| tplus(r, p)).collect();
    let shifted_base = num_traits::pow(x.clone(), l as usize) - Rational::one();
    for y in &t {
        if tplus(&(&shifted_base + y), p) {
            return BoundedSearch::Found(Box::new(RingWitness::Shifted { y: y.clone() }));
        }
    }
    let mut budget = RING_SEARCH_BUDGET;
    for shift in 0u8..=1 {
        let target = x - Rational::from_integer(shift.into());
        for (i, a) in t.iter().enumerate() {
            for b in &t[i..] {
                let rest = &target - a - b;
                for c in &t {
                    let d = &rest / c;
                    if tplus(&d, p) {
                        return BoundedSearch::Found(Box::new(RingWitness::SumOfFour { shift, a: a.clone(), b: b.clone(), c: c.clone(), d }));
                    }
                    budget -= 1;
                    if budget == 0 {
                        return BoundedSearch::Unknown;
                    }
                }
            }
        }
    }
    BoundedSearch::Unknown
}

/// Whether the monic polynomial `x^n + c_1 x^(n-1) + ... + c_n` has a root
/// modulo `p`; `coeffs` lists `c_1..c_n`.
pub fn sol_k(coeffs: &[Rational], p: Prime) -> Result<bool, LocalError> {
    let pm = BigInt::from(p.get());
    let mut res = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        if matches!(vp(c, p), Valuation::Finite(v) if v < 0) {
            return Err(LocalError::NotIntegral(c.to_string()));
        }
        res.push(if c.is_zero() { 0 } else { residue_mod(c.numer(), c.denom(), &pm).to_u64().unwrap() });
    }
    let q = p.get();
    Ok((0..q).any(|x| res.iter().fold(1 % q, |acc, c| (mul_mod(acc, x, q) + c) % q) == 0))
}

/// Distinct primes dividing the numerator or denominator of `x`.
pub fn rational_primes(x: &Rational) -> Result<Vec<u64>, TooLarge> {
    let mut out = prime_factors(x.numer())?;
    out.extend(prime_factors(x.denom())?);
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Integer k-th root of a non-negative integer, if exact.
fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

/// Whether `x` is a k-th power in `Q`.
pub fn is_rational_kth_power(x: &Rational, k: u32) -> bool {
    if x.is_zero() {
        return true;
    }
    let (n, d) = (x.numer(), x.denom());
    if n.is_negative() {
        return k % 2 == 1 && exact_root(&-n, k).is_some() && exact_root(d, k).is_some();
    }
    exact_root(n, k).is_some() && exact_root(d, k).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn valuations() {
        assert_eq!(vp(&q("50"), p(5)), Valuation::Finite(2));
        assert_eq!(vp(&q("1/6"), p(2)), Valuation::Finite(-1));
        assert_eq!(vp(&q("0"), p(7)), Valuation::Infinity);
    }

    #[test]
    fn unit_residues() {
        assert_eq!(unit_residue(&q("50"), p(5), 1).unwrap(), 2);
        assert_eq!(unit_residue(&q("1/3"), p(2), 3).unwrap(), 3);
        assert_eq!(unit_residue(&q("0"), p(5), 1), Err(LocalError::Zero));
        assert_eq!(unit_residue(&q("-1"), p(5), 1).unwrap(), 4);
    }

    #[test]
    fn squares_and_powers() {
        assert!(is_square(&q("9"), p(5)));
        assert!(!is_square(&q("2"), p(5)));
        assert!(is_square(&q("17"), p(2)));
        assert!(!is_square(&q("5"), p(2)));
        assert!(is_kth_power(&q("8"), p(7), 3));
        assert!(!is_kth_power(&q("5"), p(11), 5));
        assert!(!is_kth_power(&q("2"), p(7), 3));
        assert!(is_kth_power(&q("6"), p(7), 3));
    }

    #[test]
    fn artin_schreier_and_tplus() {
        assert!(p2as(&q("2"), p(5)));
        assert!(!p2as(&q("1"), p(5)));
        for n in [2, 3, 5, 7, 11] {
            assert!(p2as(&q("0"), p(n)));
            assert!(!tplus(&q("0"), p(n)));
        }
        assert!(tplus(&q("1"), p(5)));
        assert!(!tplus(&q("2"), p(5)));
    }

    #[test]
    fn valuation_ring_search() {
        let BoundedSearch::Found(w) = in_valuation_ring_bounded(&q("3"), p(5), 20, 2) else { panic!("no witness for 3") };
        match *w {
            RingWitness::SumOfFour { shift, a, b, c, d } => {
                for t in [&a, &b, &c, &d] {
                    assert!(tplus(t, p(5)));
                }
                assert_eq!(Rational::from_integer(shift.into()) + a + b + c * d, q("3"));
            }
            RingWitness::Shifted { y } => {
                assert!(tplus(&y, p(5)) && tplus(&(q("8") + &y), p(5)));
            }
        }
        assert_eq!(in_valuation_ring_bounded(&q("1/5"), p(5), 20, 2), BoundedSearch::Unknown);
        assert!(matches!(in_valuation_ring_bounded(&q("0"), p(3), 10, 2), BoundedSearch::Found(_)));
    }

    #[test]
    fn residue_roots() {
        assert!(sol_k(&[q("0"), q("1")], p(5)).unwrap());
        assert!(!sol_k(&[q("0"), q("1")], p(7)).unwrap());
        assert!(sol_k(&[q("0")], p(3)).unwrap());
        assert!(sol_k(&[q("1/5")], p(5)).is_err());
    }

    #[test]
    fn rational_powers() {
        assert!(is_rational_kth_power(&q("4/9"), 2));
        assert!(!is_rational_kth_power(&q("-4"), 2));
        assert!(is_rational_kth_power(&q("-8/27"), 3));
        assert!(!is_rational_kth_power(&q("2"), 3));
    }

    #[test]
    fn height_enumeration() {
        let r = rationals_by_height(2);
        assert_eq!(r.len(), 7);
        assert_eq!(r[0], q("0"));
    }
}
