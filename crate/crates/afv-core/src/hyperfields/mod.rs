//! The Krasner hyperfield `Q_p / (1 + p^l Z_p)`.
//!
//! A nonzero class is `p^gamma * u * (1 + p^l Z_p)` with `u` a unit modulo
//! `p^l`. Multiplication is single valued; the sum of two classes is the set
//! of classes meeting the sumset of the cosets. Writing the classes as
//! `p^a u (1 + p^l Z_p)` and `p^b w (1 + p^l Z_p)` with `a <= b`, the sumset is
//! `p^a (u + w p^(b-a) + p^l Z_p)` because `u Z_p + w Z_p = Z_p`. Hence:
//!
//! * `a < b`: the single class `(a; u + w p^(b-a))`;
//! * `a = b`, `s = u + w` of valuation `m < l`: the `p^m` classes
//!   `(a + m; z)` with `z = s / p^m` modulo `p^(l-m)`;
//! * `a = b`, `s = 0` modulo `p^l`: all of `p^(a+l) Z_p`, a ball.

mod axioms;
mod kras;
pub mod sampling;

pub use axioms::{check_hypergroup_axioms, check_hypergroup_axioms_with, AxiomCheck, AxiomReport, HyperAdd};
pub use kras::{p2as_kras, theta_kras, tplus_kras, ThetaClause, ThetaKras, DEFAULT_MARGIN, DEFAULT_THETA_L};

use crate::local_fields::{split_unit, unit_residue};
use crate::logic_core::Rational;
use crate::primes::{mul_mod, Prime};
use num_integer::Integer;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HyperCtx {
    pub p: Prime,
    /// The hyperfield is taken modulo `1 + p^level Z_p`.
    pub level: u32,
    modulus: u64,
    /// Extra valuations searched around the derived witness window.
    pub margin: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HyperError {
    #[error("level must be at least 1")]
    ZeroLevel,
    #[error("p^level does not fit in 32 bits")]
    TooLarge,
    #[error("{0} is not a unit modulo p^level")]
    NotUnit(u64),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("cannot parse class `{0}`")]
    Parse(String),
}

impl HyperCtx {
    pub fn new(p: Prime, level: u32) -> Result<HyperCtx, HyperError> {
        if level == 0 {
            return Err(HyperError::ZeroLevel);
        }
        let modulus = (p.get() as u128).checked_pow(level).filter(|m| *m < 1 << 32).ok_or(HyperError::TooLarge)? as u64;
        Ok(HyperCtx { p, level, modulus, margin: DEFAULT_MARGIN })
    }

    pub fn with_margin(mut self, margin: i64) -> HyperCtx {
        self.margin = margin;
        self
    }

    pub fn p(&self) -> u64 {
        self.p.get()
    }

    /// `p^level`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `p^k` reduced modulo `p^level`.
    pub fn ppow(&self, k: u32) -> u64 {
        if k >= self.level { 0 } else { self.p().pow(k) }
    }

    fn ppow_exact(&self, k: u32) -> u64 {
        self.p().pow(k)
    }

    pub fn is_unit(&self, u: u64) -> bool {
        u < self.modulus && !u.is_multiple_of(self.p())
    }

    /// Units modulo `p^level` in increasing order.
    pub fn units(&self) -> Vec<u64> {
        (1..self.modulus).filter(|u| u % self.p() != 0).collect()
    }

    pub fn cls(&self, gamma: i64, u: u64) -> Result<HClass, HyperError> {
        let u = u % self.modulus;
        if !self.is_unit(u) {
            return Err(HyperError::NotUnit(u));
        }
        Ok(HClass::Cls { gamma, u })
    }

    /// All classes with `|gamma| <= bound`, zero first.
    pub fn classes(&self, bound: i64) -> Vec<HClass> {
        let units = self.units();
        let mut out = vec![HClass::Zero];
        for gamma in -bound..=bound {
            out.extend(units.iter().map(|&u| HClass::Cls { gamma, u }));
        }
        out
    }

    fn mulm(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.modulus)
    }

    fn inv_unit(&self, u: u64) -> u64 {
        let e = (u as i64).extended_gcd(&(self.modulus as i64));
        e.x.rem_euclid(self.modulus as i64) as u64
    }

    /// `(v, s / p^v)` for a nonzero residue `s` modulo `p^level`.
    fn split_residue(&self, s: u64) -> (u32, u64) {
        let mut m = 0;
        let mut s = s;
        while s.is_multiple_of(self.p()) {
            s /= self.p();
            m += 1;
        }
        (m, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HClass {
    Zero,
    Cls { gamma: i64, u: u64 },
}

impl HClass {
    pub fn is_zero(&self) -> bool {
        matches!(self, HClass::Zero)
    }

    /// `None` stands for infinite valuation.
    pub fn val(&self) -> Option<i64> {
        match self {
            HClass::Zero => None,
            HClass::Cls { gamma, .. } => Some(*gamma),
        }
    }

    /// Parses `0` or `(g; u)`.
    pub fn parse(text: &str, ctx: &HyperCtx) -> Result<HClass, HyperError> {
        let t = text.trim();
        if t == "0" {
            return Ok(HClass::Zero);
        }
        let err = || HyperError::Parse(text.to_string());
        let inner = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(err)?;
        let (g, u) = inner.split_once(';').ok_or_else(err)?;
        let gamma: i64 = g.trim().parse().map_err(|_| err())?;
        let u: i64 = u.trim().parse().map_err(|_| err())?;
        ctx.cls(gamma, u.rem_euclid(ctx.modulus as i64) as u64)
    }
}

impl fmt::Display for HClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HClass::Zero => write!(f, "0"),
            HClass::Cls { gamma, u } => write!(f, "({gamma}; {u})"),
        }
    }
}

pub fn project(x: &Rational, ctx: &HyperCtx) -> HClass {
    match split_unit(x, ctx.p) {
        None => HClass::Zero,
        Some((gamma, _, _)) => {
            let u = unit_residue(x, ctx.p, ctx.level).expect("nonzero rational has a unit residue");
            HClass::Cls { gamma, u }
        }
    }
}

/// A representative of a class: `p^gamma * u`.
pub fn lift(x: HClass, ctx: &HyperCtx) -> Rational {
    match x {
        HClass::Zero => Rational::from_integer(0.into()),
        HClass::Cls { gamma, u } => Rational::from_integer(ctx.p().into()).pow(gamma as i32) * Rational::from_integer(u.into()),
    }
}

pub fn h_mul(x: HClass, y: HClass, ctx: &HyperCtx) -> HClass {
    match (x, y) {
        (HClass::Cls { gamma: a, u }, HClass::Cls { gamma: b, u: w }) => HClass::Cls { gamma: a + b, u: ctx.mulm(u, w) },
        _ => HClass::Zero,
    }
}

pub fn h_inv(x: HClass, ctx: &HyperCtx) -> Result<HClass, HyperError> {
    match x {
        HClass::Zero => Err(HyperError::ZeroInverse),
        HClass::Cls { gamma, u } => Ok(HClass::Cls { gamma: -gamma, u: ctx.inv_unit(u) }),
    }
}

pub fn h_neg(x: HClass, ctx: &HyperCtx) -> HClass {
    match x {
        HClass::Zero => HClass::Zero,
        HClass::Cls { gamma, u } => HClass::Cls { gamma, u: ctx.modulus - u },
    }
}

pub fn h_pow(x: HClass, k: u32, ctx: &HyperCtx) -> HClass {
    (0..k).fold(HClass::Cls { gamma: 0, u: 1 }, |acc, _| h_mul(acc, x, ctx))
}

pub fn h_val(x: HClass) -> Option<i64> {
    x.val()
}

pub fn in_pdelta(x: HClass) -> bool {
    x.val().is_none_or(|g| g >= 0)
}

pub fn in_udelta(x: HClass) -> bool {
    x.val() == Some(0)
}

/// The value of a hypersum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassSet {
    Single(HClass),
    /// `{(gamma; z) : z = z0 mod p^(level - m)}`, with `0 < m < level`.
    Sphere { gamma: i64, z0: u64, m: u32 },
    /// Zero together with every class of valuation at least `gamma_min`.
    Ball { gamma_min: i64 },
}

impl ClassSet {
    pub fn contains(&self, x: HClass, ctx: &HyperCtx) -> bool {
        match (*self, x) {
            (ClassSet::Single(y), x) => x == y,
            (ClassSet::Sphere { gamma, z0, m }, HClass::Cls { gamma: g, u }) => g == gamma && u % ctx.ppow_exact(ctx.level - m) == z0,
            (ClassSet::Sphere { .. }, HClass::Zero) => false,
            (ClassSet::Ball { gamma_min }, x) => x.val().is_none_or(|g| g >= gamma_min),
        }
    }

    /// Members of a finite class set; `None` for a ball.
    pub fn members(&self, ctx: &HyperCtx) -> Option<Vec<HClass>> {
        match *self {
            ClassSet::Single(x) => Some(vec![x]),
            ClassSet::Sphere { gamma, z0, m } => {
                let step = ctx.ppow_exact(ctx.level - m);
                Some((0..ctx.ppow_exact(m)).map(|i| HClass::Cls { gamma, u: z0 + i * step }).collect())
            }
            ClassSet::Ball { .. } => None,
        }
    }

    pub fn scale(&self, r: HClass, ctx: &HyperCtx) -> ClassSet {
        match (r, *self) {
            (HClass::Zero, _) => ClassSet::Single(HClass::Zero),
            (r, ClassSet::Single(x)) => ClassSet::Single(h_mul(r, x, ctx)),
            (HClass::Cls { gamma: a, u }, ClassSet::Sphere { gamma, z0, m }) => {
                ClassSet::Sphere { gamma: gamma + a, z0: mul_mod(u, z0, ctx.ppow_exact(ctx.level - m)), m }
            }
            (HClass::Cls { gamma: a, .. }, ClassSet::Ball { gamma_min }) => ClassSet::Ball { gamma_min: gamma_min + a },
        }
    }

    pub fn to_union(&self, ctx: &HyperCtx) -> ClassUnion {
        let mut out = ClassUnion::default();
        out.insert_set(self, ctx);
        out
    }
}

impl fmt::Display for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassSet::Single(x) => write!(f, "{{{x}}}"),
            ClassSet::Sphere { gamma, z0, m } => write!(f, "sphere({gamma}; {z0} mod p^(l-{m}))"),
            ClassSet::Ball { gamma_min } => write!(f, "ball({gamma_min})"),
        }
    }
}

pub fn hyper_add(x: HClass, y: HClass, ctx: &HyperCtx) -> ClassSet {
    let (HClass::Cls { gamma: a, u }, HClass::Cls { gamma: b, u: w }) = (x, y) else {
        return ClassSet::Single(if x.is_zero() { y } else { x });
    };
    let ((a, u), (b, w)) = if a <= b { ((a, u), (b, w)) } else { ((b, w), (a, u)) };
    if a < b {
        let shift = u32::try_from(b - a).unwrap_or(u32::MAX);
        return ClassSet::Single(HClass::Cls { gamma: a, u: (u + ctx.mulm(w, ctx.ppow(shift))) % ctx.modulus });
    }
    let s = (u + w) % ctx.modulus;
    if s == 0 {
        return ClassSet::Ball { gamma_min: a + ctx.level as i64 };
    }
    let (m, rest) = ctx.split_residue(s);
    if m == 0 {
        ClassSet::Single(HClass::Cls { gamma: a, u: s })
    } else {
        ClassSet::Sphere { gamma: a + m as i64, z0: rest % ctx.ppow_exact(ctx.level - m), m }
    }
}

/// `z` lies in the hypersum of `x` and `y`.
pub fn sigma(x: HClass, y: HClass, z: HClass, ctx: &HyperCtx) -> bool {
    hyper_add(x, y, ctx).contains(z, ctx)
}

/// `t` lies in `(x + y) + z`.
pub fn sigma3(x: HClass, y: HClass, z: HClass, t: HClass, ctx: &HyperCtx) -> bool {
    classset_add(&hyper_add(x, y, ctx), z, ctx).contains(t)
}

/// A finite union of classes together with at most one ball, kept in a
/// canonical form so that equal sets compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClassUnion {
    classes: BTreeSet<HClass>,
    ball: Option<i64>,
}

impl ClassUnion {
    pub fn contains(&self, x: HClass) -> bool {
        self.ball.is_some_and(|g| x.val().is_none_or(|v| v >= g)) || self.classes.contains(&x)
    }

    pub fn classes(&self) -> impl Iterator<Item = &HClass> {
        self.classes.iter()
    }

    pub fn ball(&self) -> Option<i64> {
        self.ball
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.ball.is_none()
    }

    pub fn insert(&mut self, x: HClass, ctx: &HyperCtx) {
        if !self.contains(x) {
            self.classes.insert(x);
            self.absorb(ctx);
        }
    }

    fn insert_raw(&mut self, x: HClass) {
        if !self.contains(x) {
            self.classes.insert(x);
        }
    }

    pub fn insert_ball(&mut self, gamma_min: i64, ctx: &HyperCtx) {
        let g = self.ball.map_or(gamma_min, |b| b.min(gamma_min));
        self.ball = Some(g);
        self.classes.retain(|x| x.val().is_some_and(|v| v < g));
        self.absorb(ctx);
    }

    pub fn insert_set(&mut self, s: &ClassSet, ctx: &HyperCtx) {
        match s {
            ClassSet::Ball { gamma_min } => self.insert_ball(*gamma_min, ctx),
            _ => {
                for x in s.members(ctx).unwrap() {
                    self.insert_raw(x);
                }
                self.absorb(ctx);
            }
        }
    }

    pub fn extend(&mut self, o: &ClassUnion, ctx: &HyperCtx) {
        if let Some(g) = o.ball {
            self.insert_ball(g, ctx);
        }
        for x in &o.classes {
            self.insert_raw(*x);
        }
        self.absorb(ctx);
    }

    /// Grows the ball while the whole valuation level below it is present.
    fn absorb(&mut self, ctx: &HyperCtx) {
        while let Some(g) = self.ball {
            let level: Vec<HClass> = self.classes.range(HClass::Cls { gamma: g - 1, u: 0 }..HClass::Cls { gamma: g, u: 0 }).copied().collect();
            if level.len() as u64 != ctx.modulus / ctx.p() * (ctx.p() - 1) {
                break;
            }
            for x in level {
                self.classes.remove(&x);
            }
            self.ball = Some(g - 1);
        }
    }

    /// Some member of `s` lies in the union.
    pub fn meets(&self, s: &ClassSet, ctx: &HyperCtx) -> bool {
        match s.members(ctx) {
            Some(xs) => xs.into_iter().any(|x| self.contains(x)),
            None => {
                let ClassSet::Ball { gamma_min } = s else { unreachable!() };
                self.ball.is_some() || self.classes.iter().any(|x| x.val().is_none_or(|v| v >= *gamma_min))
            }
        }
    }
}

impl fmt::Display for ClassUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.classes.iter().map(|x| x.to_string()).collect();
        if let Some(g) = self.ball {
            parts.push(format!("ball({g})"));
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `{t : t in s + z for some s in S}`, with single and sphere members added
/// through `add`.
pub fn classset_add_with(add: HyperAdd, s: &ClassSet, z: HClass, ctx: &HyperCtx) -> ClassUnion {
    let mut out = ClassUnion::default();
    match s.members(ctx) {
        Some(xs) => {
            for x in xs {
                out.insert_set(&add(x, z, ctx), ctx);
            }
        }
        None => {
            let ClassSet::Ball { gamma_min } = *s else { unreachable!() };
            out.insert_set(&ball_plus(gamma_min, z, ctx), ctx);
        }
    }
    out
}

pub fn classset_add(s: &ClassSet, z: HClass, ctx: &HyperCtx) -> ClassUnion {
    classset_add_with(hyper_add, s, z, ctx)
}

/// `p^g Z_p` plus the class of `z`: a ball when `v(z) >= g`, otherwise the
/// classes at `v(z)` agreeing with `z` modulo `p^(g - v(z))`.
fn ball_plus(g: i64, z: HClass, ctx: &HyperCtx) -> ClassSet {
    match z {
        HClass::Cls { gamma: c, u } if c < g => {
            let gap = g - c;
            if gap >= ctx.level as i64 {
                ClassSet::Single(z)
            } else {
                let gap = gap as u32;
                ClassSet::Sphere { gamma: c, z0: u % ctx.ppow_exact(gap), m: ctx.level - gap }
            }
        }
        _ => ClassSet::Ball { gamma_min: g },
    }
}
