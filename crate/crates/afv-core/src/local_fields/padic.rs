//! Fixed-precision p-adic numbers, used only to evaluate predicates at
//! irrational quadratic roots.

use super::{residue_mod, split_unit};
use crate::logic_core::Rational;
use crate::primes::{mul_mod, pow_mod, Prime};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

const EXACT: i64 = i64::MAX / 4;

/// `p^val * unit` with `unit` a unit known modulo `p^prec`. A zero `unit`
/// stands for an element known to be divisible by `p^val`; `val >= EXACT`
/// marks the exact zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAdic {
    p: u64,
    val: i64,
    unit: BigInt,
    prec: u32,
}

fn ppow(p: u64, m: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), m as usize)
}

impl PAdic {
    fn zero_to(p: u64, abs: i64) -> PAdic {
        PAdic { p, val: abs, unit: BigInt::zero(), prec: 0 }
    }

    pub fn from_rational(x: &Rational, p: Prime, prec: u32) -> PAdic {
        match split_unit(x, p) {
            None => PAdic::zero_to(p.get(), EXACT),
            Some((v, n, d)) => PAdic { p: p.get(), val: v, unit: residue_mod(&n, &d, &ppow(p.get(), prec)), prec },
        }
    }

    pub fn is_zero_approx(&self) -> bool {
        self.unit.is_zero()
    }

    /// Valuation, if enough digits are known to see a nonzero one.
    pub fn valuation(&self) -> Option<i64> {
        (!self.is_zero_approx()).then_some(self.val)
    }

    /// Unit part modulo `p^k`, if known to that precision.
    pub fn unit_residue(&self, k: u32) -> Option<u64> {
        if self.is_zero_approx() || self.prec < k {
            return None;
        }
        (&self.unit % ppow(self.p, k)).to_u64()
    }

    fn absolute(&self) -> i64 {
        if self.is_zero_approx() {
            self.val
        } else {
            self.val + self.prec as i64
        }
    }

    fn truncate(&self, abs: i64) -> PAdic {
        if self.is_zero_approx() {
            return PAdic::zero_to(self.p, self.val.min(abs));
        }
        if abs <= self.val {
            return PAdic::zero_to(self.p, abs);
        }
        let prec = self.prec.min((abs - self.val) as u32);
        PAdic { p: self.p, val: self.val, unit: &self.unit % ppow(self.p, prec), prec }
    }

    pub fn neg(&self) -> PAdic {
        if self.is_zero_approx() {
            return self.clone();
        }
        let m = ppow(self.p, self.prec);
        PAdic { unit: (-&self.unit).mod_floor(&m), ..self.clone() }
    }

    pub fn add(&self, o: &PAdic) -> PAdic {
        let abs = self.absolute().min(o.absolute());
        if self.is_zero_approx() {
            return o.truncate(abs);
        }
        if o.is_zero_approx() {
            return self.truncate(abs);
        }
        let v = self.val.min(o.val);
        if abs <= v {
            return PAdic::zero_to(self.p, abs);
        }
        let m = (abs - v) as u32;
        let modulus = ppow(self.p, m);
        let shift = |x: &PAdic| &x.unit * ppow(self.p, (x.val - v) as u32);
        let mut s = (shift(self) + shift(o)).mod_floor(&modulus);
        if s.is_zero() {
            return PAdic::zero_to(self.p, abs);
        }
        let bp = BigInt::from(self.p);
        let mut w = 0u32;
        while (&s % &bp).is_zero() {
            s /= &bp;
            w += 1;
        }
        PAdic { p: self.p, val: v + w as i64, unit: s, prec: m - w }
    }

    pub fn mul(&self, o: &PAdic) -> PAdic {
        match (self.is_zero_approx(), o.is_zero_approx()) {
            (true, true) => PAdic::zero_to(self.p, self.val.saturating_add(o.val).min(EXACT)),
            (true, false) => PAdic::zero_to(self.p, self.val.saturating_add(o.val).min(EXACT)),
            (false, true) => PAdic::zero_to(self.p, o.val.saturating_add(self.val).min(EXACT)),
            (false, false) => {
                let prec = self.prec.min(o.prec);
                PAdic { p: self.p, val: self.val + o.val, unit: (&self.unit * &o.unit) % ppow(self.p, prec), prec }
            }
        }
    }

    /// A square root, if the element is a known nonzero square.
    pub fn sqrt(&self) -> Option<PAdic> {
        if self.is_zero_approx() || self.val % 2 != 0 {
            return None;
        }
        let p = self.p;
        let root = if p == 2 {
            if self.prec < 3 || (&self.unit % 8u32) != BigInt::one() {
                return None;
            }
            let mut r = BigInt::one();
            for k in 3..self.prec {
                let m = ppow(2, k + 1);
                if !((&r * &r - &self.unit).mod_floor(&m)).is_zero() {
                    r += ppow(2, k - 1);
                }
            }
            PAdic { p, val: self.val / 2, unit: r % ppow(2, self.prec - 1), prec: self.prec - 1 }
        } else {
            let u0 = (&self.unit % p).to_u64().unwrap();
            let r0 = sqrt_mod_prime(u0, p)?;
            let m = ppow(p, self.prec);
            let mut r = BigInt::from(r0);
            let mut correct = 1u32;
            while correct < self.prec {
                let inv = (BigInt::from(2) * &r).extended_gcd(&m).x;
                r = (&r - (&r * &r - &self.unit) * inv).mod_floor(&m);
                correct *= 2;
            }
            PAdic { p, val: self.val / 2, unit: r, prec: self.prec }
        };
        Some(root)
    }
}

/// A square root of `a` modulo the odd prime `p` (Tonelli-Shanks).
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let (mut q, mut s) = (p - 1, 0u32);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| pow_mod(z, (p - 1) / 2, p) == p - 1).unwrap();
    let (mut m, mut c, mut t, mut r) = (s, pow_mod(z, q, p), pow_mod(a, q, p), pow_mod(a, q.div_ceil(2), p));
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}
