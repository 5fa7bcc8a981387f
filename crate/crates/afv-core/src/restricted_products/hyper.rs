//! Families of hyperfield classes indexed by the primes, eventually given by
//! a default that is read at each prime through the projection.
//!
//! A default `(gamma; r)` with `r` a nonzero rational stands for the class
//! of `p^gamma r` at every `p`. At a prime not dividing any rational occurring
//! in the evaluation, a term evaluates to zero or to `p^gamma r` with `r` a
//! rational unit, and the atoms are decided by `gamma` and `r` alone:
//!
//! * `p^a r + p^b s` with `a < b` is the single class of `p^a (r + p^(b-a) s)`,
//!   which equals the class of `p^a r` exactly when `b - a >= l`; otherwise it
//!   differs from every `p^a t` because `t - r` is zero or a unit;
//! * `p^a r + p^a s` with `r + s != 0` is the single class `(a; r + s)`;
//! * `p^a r - p^a r` is the ball of valuation at least `a + l` with zero.
//!
//! Hence the generic truth is the same at every prime outside a finite,
//! computed set, and the Boolean value is always finite or cofinite.

use super::FiniteAdele;
use crate::boolean_engine::PrimeSet;
use crate::hyperfields::{h_inv, h_mul, h_neg, in_pdelta, project, sigma, HClass, HyperCtx, HyperError};
use crate::local_fields::{parse_rational, rational_primes};
use crate::logic_core::{Formula, Rational, Term};
use crate::primes::{is_prime, Prime, TooLarge};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A default coordinate: zero, or the class of `p^gamma r` at each `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HDefault {
    Zero,
    Cls { gamma: i64, r: Rational },
}

impl HDefault {
    /// Parses `0` or `(gamma; r)`.
    pub fn parse(text: &str) -> Result<HDefault, HyperEvalError> {
        let t = text.trim();
        if t == "0" {
            return Ok(HDefault::Zero);
        }
        let err = || HyperEvalError::Malformed(text.to_string());
        let inner = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(err)?;
        let (g, u) = inner.split_once(';').ok_or_else(err)?;
        let gamma: i64 = g.trim().parse().map_err(|_| err())?;
        let r = parse_rational(u.trim()).map_err(|_| err())?;
        if r.is_zero() || gamma < 0 {
            return Err(err());
        }
        Ok(HDefault::Cls { gamma, r })
    }

    pub fn at(&self, ctx: &HyperCtx) -> HClass {
        match self {
            HDefault::Zero => HClass::Zero,
            HDefault::Cls { gamma, r } => {
                let pg = BigInt::from(ctx.p()).pow(*gamma as u32);
                project(&(r * Rational::from_integer(pg)), ctx)
            }
        }
    }
}

impl fmt::Display for HDefault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HDefault::Zero => write!(f, "0"),
            HDefault::Cls { gamma, r } => write!(f, "({gamma}; {r})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HyperEvalError {
    #[error("formula has a quantifier: {0}")]
    Quantified(String),
    #[error("malformed hyperfield family literal: {0}")]
    Malformed(String),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("variable `{0}` has no argument")]
    MissingArgument(String),
    #[error("families have levels {0} and {1}")]
    LevelMismatch(u32, u32),
    #[error(transparent)]
    Hyper(#[from] HyperError),
    #[error(transparent)]
    TooLarge(#[from] TooLarge),
}

/// An element of the restricted product of the hyperfields at a fixed level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdeleHFamily {
    level: u32,
    default: HDefault,
    exceptions: BTreeMap<u64, HClass>,
}

impl AdeleHFamily {
    pub fn new(level: u32, default: HDefault, exceptions: impl IntoIterator<Item = (u64, HClass)>) -> Result<AdeleHFamily, HyperEvalError> {
        if let HDefault::Cls { gamma, r } = &default {
            if *gamma < 0 || r.is_zero() {
                return Err(HyperEvalError::Malformed(default.to_string()));
            }
        }
        let mut ex = BTreeMap::new();
        for (p, x) in exceptions {
            let ctx = HyperCtx::new(Prime::new(p).map_err(|_| HyperEvalError::NotPrime(p))?, level)?;
            if let HClass::Cls { gamma, u } = x {
                ctx.cls(gamma, u)?;
            }
            if default.at(&ctx) != x {
                ex.insert(p, x);
            }
        }
        Ok(AdeleHFamily { level, default, exceptions: ex })
    }

    /// The coordinatewise projection of a finite adele.
    pub fn from_adele(a: &FiniteAdele, level: u32) -> Result<AdeleHFamily, HyperEvalError> {
        let d = a.default_value();
        let mut special: BTreeSet<u64> = a.exceptions().keys().copied().collect();
        // the default is a unit at primes outside its numerator and denominator
        special.extend(rational_primes(d)?);
        let default = if d.is_zero() { HDefault::Zero } else { HDefault::Cls { gamma: 0, r: d.clone() } };
        let mut ex = Vec::new();
        for p in special {
            let ctx = HyperCtx::new(Prime::new(p).expect("listed primes are prime"), level)?;
            ex.push((p, project(a.at(p), &ctx)));
        }
        AdeleHFamily::new(level, default, ex)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn default_value(&self) -> &HDefault {
        &self.default
    }

    pub fn exceptions(&self) -> &BTreeMap<u64, HClass> {
        &self.exceptions
    }

    /// Parses `{"level":1,"default":"(0; 1)","exceptions":{"5":"(-1; 1)"}}`.
    pub fn from_json(v: &serde_json::Value) -> Result<AdeleHFamily, HyperEvalError> {
        let bad = || HyperEvalError::Malformed(v.to_string());
        let obj = v.as_object().ok_or_else(bad)?;
        let level = obj.get("level").and_then(|l| l.as_u64()).ok_or_else(bad)? as u32;
        let default = HDefault::parse(obj.get("default").and_then(|d| d.as_str()).ok_or_else(bad)?)?;
        let mut ex = Vec::new();
        if let Some(e) = obj.get("exceptions") {
            for (k, x) in e.as_object().ok_or_else(bad)? {
                let p: u64 = k.parse().map_err(|_| bad())?;
                let ctx = HyperCtx::new(Prime::new(p).map_err(|_| HyperEvalError::NotPrime(p))?, level)?;
                ex.push((p, HClass::parse(x.as_str().ok_or_else(bad)?, &ctx)?));
            }
        }
        AdeleHFamily::new(level, default, ex)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ex: serde_json::Map<String, serde_json::Value> = self.exceptions.iter().map(|(p, x)| (p.to_string(), x.to_string().into())).collect();
        serde_json::json!({ "level": self.level, "default": self.default.to_string(), "exceptions": ex })
    }
}

pub fn h_stalk_project(f: &AdeleHFamily, p: Prime) -> Result<HClass, HyperEvalError> {
    match f.exceptions.get(&p.get()) {
        Some(x) => Ok(*x),
        None => Ok(f.default.at(&HyperCtx::new(p, f.level)?)),
    }
}

type HArgs = BTreeMap<String, AdeleHFamily>;

/// Walks the propositional structure of a quantifier-free formula.
fn walk<E>(f: &Formula, atom: &mut impl FnMut(&Formula) -> Result<bool, E>, quantified: impl Fn(&Formula) -> E + Copy) -> Result<bool, E> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom { .. } | Formula::Eq(..) | Formula::Bool(_) => atom(f)?,
        Formula::Not(g) => !walk(g, atom, quantified)?,
        Formula::And(gs) => {
            for g in gs {
                if !walk(g, atom, quantified)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if walk(g, atom, quantified)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(a, b) => !walk(a, atom, quantified)? || walk(b, atom, quantified)?,
        Formula::Exists(..) | Formula::Forall(..) => return Err(quantified(f)),
    })
}

fn quantified(f: &Formula) -> HyperEvalError {
    HyperEvalError::Quantified(f.to_string())
}

fn exact_term(t: &Term, env: &BTreeMap<String, HClass>, ctx: &HyperCtx) -> Result<HClass, HyperEvalError> {
    Ok(match t {
        Term::Var { name, .. } => *env.get(name).ok_or_else(|| HyperEvalError::MissingArgument(name.clone()))?,
        Term::Const { name, .. } if name == "0" => HClass::Zero,
        Term::Const { name, .. } if name == "1" => HClass::Cls { gamma: 0, u: 1 },
        Term::App { func, args, .. } => {
            let xs = args.iter().map(|a| exact_term(a, env, ctx)).collect::<Result<Vec<_>, _>>()?;
            match (func.as_str(), xs.as_slice()) {
                ("*", [x, y]) => h_mul(*x, *y, ctx),
                // inv(0) = 0 keeps the operation total
                ("inv", [x]) => h_inv(*x, ctx).unwrap_or(HClass::Zero),
                ("neg", [x]) => h_neg(*x, ctx),
                _ => return Err(HyperEvalError::UnknownSymbol(func.clone())),
            }
        }
        other => return Err(HyperEvalError::UnknownSymbol(other.to_string())),
    })
}

/// Truth of a quantifier-free hyperring formula in the hyperfield of `ctx`.
pub fn eval_hyper_at(phi: &Formula, env: &BTreeMap<String, HClass>, ctx: &HyperCtx) -> Result<bool, HyperEvalError> {
    let mut atom = |a: &Formula| -> Result<bool, HyperEvalError> {
        match a {
            Formula::Eq(s, t) => Ok(exact_term(s, env, ctx)? == exact_term(t, env, ctx)?),
            Formula::Atom { rel, args, .. } => {
                let xs = args.iter().map(|t| exact_term(t, env, ctx)).collect::<Result<Vec<_>, _>>()?;
                match (rel.as_str(), xs.as_slice()) {
                    ("Sigma", [x, y, z]) => Ok(sigma(*x, *y, *z, ctx)),
                    ("Pdelta", [x]) => Ok(in_pdelta(*x)),
                    _ => Err(HyperEvalError::UnknownSymbol(rel.clone())),
                }
            }
            other => Err(HyperEvalError::UnknownSymbol(other.to_string())),
        }
    };
    walk(phi, &mut atom, quantified)
}

/// A value at a prime outside the exceptional set.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Sym {
    Zero,
    Mono { gamma: i64, r: Rational },
}

struct Generic {
    level: i64,
    /// Every rational whose primes may break the generic reading.
    noted: BTreeSet<Rational>,
}

impl Generic {
    fn note(&mut self, r: Rational) {
        if !r.is_zero() {
            self.noted.insert(r);
        }
    }

    fn term(&mut self, t: &Term, env: &BTreeMap<String, Sym>) -> Result<Sym, HyperEvalError> {
        Ok(match t {
            Term::Var { name, .. } => env.get(name).cloned().ok_or_else(|| HyperEvalError::MissingArgument(name.clone()))?,
            Term::Const { name, .. } if name == "0" => Sym::Zero,
            Term::Const { name, .. } if name == "1" => Sym::Mono { gamma: 0, r: Rational::one() },
            Term::App { func, args, .. } => {
                let xs = args.iter().map(|a| self.term(a, env)).collect::<Result<Vec<_>, _>>()?;
                let v = match (func.as_str(), xs.as_slice()) {
                    ("*", [Sym::Mono { gamma: a, r }, Sym::Mono { gamma: b, r: s }]) => Sym::Mono { gamma: a + b, r: r * s },
                    ("*", [_, _]) => Sym::Zero,
                    ("inv", [Sym::Mono { gamma, r }]) => Sym::Mono { gamma: -gamma, r: r.recip() },
                    ("inv", [Sym::Zero]) => Sym::Zero,
                    ("neg", [Sym::Mono { gamma, r }]) => Sym::Mono { gamma: *gamma, r: -r },
                    ("neg", [Sym::Zero]) => Sym::Zero,
                    _ => return Err(HyperEvalError::UnknownSymbol(func.clone())),
                };
                if let Sym::Mono { r, .. } = &v {
                    self.note(r.clone());
                }
                v
            }
            other => return Err(HyperEvalError::UnknownSymbol(other.to_string())),
        })
    }

    fn same(&mut self, x: &Sym, y: &Sym) -> bool {
        match (x, y) {
            (Sym::Zero, Sym::Zero) => true,
            (Sym::Mono { gamma: a, r }, Sym::Mono { gamma: b, r: s }) => {
                self.note(r - s);
                a == b && r == s
            }
            _ => false,
        }
    }

    fn sigma(&mut self, x: &Sym, y: &Sym, z: &Sym) -> bool {
        match (x, y) {
            (Sym::Zero, _) => self.same(y, z),
            (_, Sym::Zero) => self.same(x, z),
            (Sym::Mono { gamma: a, r }, Sym::Mono { gamma: b, r: s }) => {
                if a != b {
                    let (lo, hi) = if a < b { (x, b - a) } else { (y, a - b) };
                    return hi >= self.level && self.same(lo, z);
                }
                let sum = r + s;
                self.note(sum.clone());
                if sum.is_zero() {
                    match z {
                        Sym::Zero => true,
                        Sym::Mono { gamma: c, .. } => *c >= a + self.level,
                    }
                } else {
                    self.same(&Sym::Mono { gamma: *a, r: sum }, z)
                }
            }
        }
    }
}

fn common_level(args: &HArgs) -> Result<Option<u32>, HyperEvalError> {
    let mut level = None;
    for f in args.values() {
        match level {
            None => level = Some(f.level),
            Some(l) if l != f.level => return Err(HyperEvalError::LevelMismatch(l, f.level)),
            _ => {}
        }
    }
    Ok(level)
}

/// `[[phi(args)]]` for a quantifier-free hyperring formula. `level` is used
/// when `args` is empty.
pub fn h_boolean_value(phi: &Formula, args: &HArgs, level: u32) -> Result<PrimeSet, HyperEvalError> {
    if !phi.is_quantifier_free() {
        return Err(quantified(phi));
    }
    for v in phi.free_vars().keys() {
        if !args.contains_key(v) {
            return Err(HyperEvalError::MissingArgument(v.clone()));
        }
    }
    let level = common_level(args)?.unwrap_or(level);

    let mut g = Generic { level: level as i64, noted: BTreeSet::new() };
    let env: BTreeMap<String, Sym> = args
        .iter()
        .map(|(k, f)| {
            let s = match &f.default {
                HDefault::Zero => Sym::Zero,
                HDefault::Cls { gamma, r } => Sym::Mono { gamma: *gamma, r: r.clone() },
            };
            (k.clone(), s)
        })
        .collect();
    for s in env.values() {
        if let Sym::Mono { r, .. } = s {
            g.note(r.clone());
        }
    }
    let mut atom = |a: &Formula| -> Result<bool, HyperEvalError> {
        match a {
            Formula::Eq(s, t) => {
                let (x, y) = (g.term(s, &env)?, g.term(t, &env)?);
                Ok(g.same(&x, &y))
            }
            Formula::Atom { rel, args, .. } => {
                let xs = args.iter().map(|t| g.term(t, &env)).collect::<Result<Vec<_>, _>>()?;
                match (rel.as_str(), xs.as_slice()) {
                    ("Sigma", [x, y, z]) => Ok(g.sigma(x, y, z)),
                    ("Pdelta", [Sym::Zero]) => Ok(true),
                    ("Pdelta", [Sym::Mono { gamma, .. }]) => Ok(*gamma >= 0),
                    _ => Err(HyperEvalError::UnknownSymbol(rel.clone())),
                }
            }
            other => Err(HyperEvalError::UnknownSymbol(other.to_string())),
        }
    };
    let generic = walk(phi, &mut atom, quantified)?;

    let mut special: BTreeSet<u64> = args.values().flat_map(|f| f.exceptions.keys().copied()).collect();
    for r in &g.noted {
        special.extend(rational_primes(r)?);
    }
    let mut flipped = Vec::new();
    for p in special {
        debug_assert!(is_prime(p));
        let ctx = HyperCtx::new(Prime::new(p).expect("special primes are prime"), level)?;
        let env = args.iter().map(|(k, f)| Ok((k.clone(), h_stalk_project(f, ctx.p)?))).collect::<Result<BTreeMap<_, _>, HyperEvalError>>()?;
        if eval_hyper_at(phi, &env, &ctx)? != generic {
            flipped.push(p);
        }
    }
    let set = if generic { PrimeSet::cofinite(flipped) } else { PrimeSet::finite(flipped) };
    Ok(set.expect("flipped primes are prime"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_fields::rat;
    use crate::logic_core::{parse_formula, Signature};

    fn hyper(text: &str) -> Formula {
        parse_formula(text, &Signature::hyperring()).unwrap()
    }

    fn fam(level: u32, default: &str, ex: &[(u64, i64, u64)]) -> AdeleHFamily {
        let ex = ex.iter().map(|&(p, g, u)| (p, HClass::Cls { gamma: g, u }));
        AdeleHFamily::new(level, HDefault::parse(default).unwrap(), ex).unwrap()
    }

    fn args(pairs: &[(&str, AdeleHFamily)]) -> HArgs {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    /// Evaluates at every prime below 200 and compares.
    fn agrees_below_200(phi: &Formula, a: &HArgs, level: u32, set: &PrimeSet) {
        for p in (2..200u64).filter(|&p| is_prime(p)) {
            let ctx = HyperCtx::new(Prime::new(p).unwrap(), level).unwrap();
            let env = a.iter().map(|(k, f)| (k.clone(), h_stalk_project(f, ctx.p).unwrap())).collect();
            assert_eq!(eval_hyper_at(phi, &env, &ctx).unwrap(), set.contains(p), "{phi} at p = {p}");
        }
    }

    #[test]
    fn stalks() {
        let f = fam(1, "(0; 1)", &[(5, -1, 1)]);
        assert_eq!(h_stalk_project(&f, Prime::new(7).unwrap()), Ok(HClass::Cls { gamma: 0, u: 1 }));
        assert_eq!(h_stalk_project(&f, Prime::new(5).unwrap()), Ok(HClass::Cls { gamma: -1, u: 1 }));
        let g = fam(1, "(0; 2)", &[]);
        assert_eq!(h_stalk_project(&g, Prime::new(2).unwrap()), Ok(HClass::Cls { gamma: 1, u: 1 }));
        assert_eq!(h_stalk_project(&g, Prime::new(5).unwrap()), Ok(HClass::Cls { gamma: 0, u: 2 }));
    }

    #[test]
    fn valuation_atoms() {
        let a = args(&[("x", fam(1, "(0; 1)", &[(5, -1, 1)]))]);
        let phi = hyper("(Pdelta x)");
        let v = h_boolean_value(&phi, &a, 1).unwrap();
        assert_eq!(v, PrimeSet::Cofinite(vec![5]));
        agrees_below_200(&phi, &a, 1, &v);
    }

    #[test]
    fn zero_atoms() {
        let a = args(&[("x", fam(2, "0", &[(3, 0, 1), (7, 2, 5)]))]);
        let phi = hyper("(= x 0)");
        assert_eq!(h_boolean_value(&phi, &a, 2).unwrap(), PrimeSet::Cofinite(vec![3, 7]));
    }

    #[test]
    fn sums_of_units() {
        let a = args(&[("x", fam(1, "(0; 1)", &[])), ("y", fam(1, "(0; 2)", &[]))]);
        let phi = hyper("(Sigma x x y)");
        let v = h_boolean_value(&phi, &a, 1).unwrap();
        // at p = 2, y is the class of 2, inside the ball 1 + 1
        assert_eq!(v, PrimeSet::all());
        agrees_below_200(&phi, &a, 1, &v);
        let phi = hyper("(Sigma x (neg x) 0)");
        assert_eq!(h_boolean_value(&phi, &a, 1).unwrap(), PrimeSet::all());
    }

    #[test]
    fn generic_answers_agree_with_exact_ones() {
        let a = args(&[
            ("x", fam(2, "(0; 3)", &[(5, 1, 2)])),
            ("y", fam(2, "(1; 6)", &[])),
            ("z", fam(2, "(0; 9/4)", &[(11, -2, 3)])),
        ]);
        for text in [
            "(Sigma x y z)",
            "(Sigma x (neg x) y)",
            "(Sigma x z (* x y))",
            "(= (* x (inv x)) 1)",
            "(= (* y y) (* x z))",
            "(or (Pdelta (inv y)) (Sigma z y x))",
            "(Sigma (* x x) (neg z) 0)",
            "(Sigma (* y y) (* z (inv y)) (* 1 z))",
            "(implies (Pdelta x) (not (= x (neg x))))",
        ] {
            let phi = hyper(text);
            let v = h_boolean_value(&phi, &a, 2).unwrap();
            agrees_below_200(&phi, &a, 2, &v);
        }
    }

    #[test]
    fn projections_of_adeles() {
        let a = FiniteAdele::new(rat(2, 3), [(3, rat(9, 1)), (5, rat(0, 1))]).unwrap();
        let f = AdeleHFamily::from_adele(&a, 1).unwrap();
        for p in (2..100u64).filter(|&p| is_prime(p)) {
            let ctx = HyperCtx::new(Prime::new(p).unwrap(), 1).unwrap();
            assert_eq!(h_stalk_project(&f, ctx.p), Ok(project(a.at(p), &ctx)), "p = {p}");
        }
        assert_eq!(f.exceptions().keys().copied().collect::<Vec<_>>(), vec![3, 5]);
        assert_eq!(h_stalk_project(&f, Prime::new(7).unwrap()), Ok(HClass::Cls { gamma: 0, u: 3 }));
    }

    #[test]
    fn errors_and_literals() {
        let a = args(&[("x", fam(1, "(0; 1)", &[]))]);
        assert!(matches!(h_boolean_value(&hyper("(exists (y hyper) (= y x))"), &a, 1), Err(HyperEvalError::Quantified(_))));
        assert!(matches!(h_boolean_value(&hyper("(Pdelta y)"), &a, 1), Err(HyperEvalError::MissingArgument(_))));
        let b = args(&[("x", fam(1, "(0; 1)", &[])), ("y", fam(2, "(0; 1)", &[]))]);
        assert!(matches!(h_boolean_value(&hyper("(= x y)"), &b, 1), Err(HyperEvalError::LevelMismatch(..))));
        assert!(HDefault::parse("(-1; 1)").is_err());
        let v: serde_json::Value = serde_json::from_str(r#"{"level":1,"default":"(0; 1)","exceptions":{"5":"(-1; 1)"}}"#).unwrap();
        let f = AdeleHFamily::from_json(&v).unwrap();
        assert_eq!(f, fam(1, "(0; 1)", &[(5, -1, 1)]));
        assert_eq!(AdeleHFamily::from_json(&f.to_json()).unwrap(), f);
    }
}
