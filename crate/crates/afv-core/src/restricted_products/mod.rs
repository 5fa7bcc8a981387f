//! Eventually constant elements of the finite adeles of `Q` and of the
//! restricted product of the hyperfields, with Boolean values of local
//! formulas.
//!
//! An element is a default rational together with finitely many exceptional
//! coordinates. The default lies in `Z_p` for all `p` not dividing its
//! denominator, so every such family is restricted.

mod hyper;

pub use hyper::{eval_hyper_at, h_boolean_value, h_stalk_project, AdeleHFamily, HDefault, HyperEvalError};

use crate::boolean_engine::{Classification, PrimeSet, PrimeSetError, Truth};
use crate::local_fields::{eval_at_prime, eval_generic, parse_rational, LocalEvalError, Outcome, SearchConfig};
use crate::logic_core::{Formula, Rational};
use crate::primes::{is_prime, Prime};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteAdele {
    default: Rational,
    exceptions: BTreeMap<u64, Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AdeleError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("malformed adele literal: {0}")]
    Malformed(String),
    #[error("idempotents need a classified prime set")]
    Unclassified,
}

impl FiniteAdele {
    pub fn new(default: Rational, exceptions: impl IntoIterator<Item = (u64, Rational)>) -> Result<FiniteAdele, AdeleError> {
        let mut ex = BTreeMap::new();
        for (p, v) in exceptions {
            if !is_prime(p) {
                return Err(AdeleError::NotPrime(p));
            }
            if v != default {
                ex.insert(p, v);
            }
        }
        Ok(FiniteAdele { default, exceptions: ex })
    }

    pub fn diagonal(q: Rational) -> FiniteAdele {
        FiniteAdele { default: q, exceptions: BTreeMap::new() }
    }

    pub fn zero() -> FiniteAdele {
        FiniteAdele::diagonal(Rational::zero())
    }

    pub fn one() -> FiniteAdele {
        FiniteAdele::diagonal(Rational::one())
    }

    /// `e_S`: 1 on `S`, 0 elsewhere.
    pub fn idempotent(s: &PrimeSet) -> Result<FiniteAdele, AdeleError> {
        let (default, marked) = match s {
            PrimeSet::Finite(_) => (Rational::zero(), Rational::one()),
            PrimeSet::Cofinite(_) => (Rational::one(), Rational::zero()),
            PrimeSet::Frontier(_) => return Err(AdeleError::Unclassified),
        };
        let listed = s.listed().iter().map(|&p| (p, marked.clone()));
        FiniteAdele::new(default, listed)
    }

    pub fn default_value(&self) -> &Rational {
        &self.default
    }

    pub fn exceptions(&self) -> &BTreeMap<u64, Rational> {
        &self.exceptions
    }

    /// The coordinate at `p`.
    pub fn at(&self, p: u64) -> &Rational {
        self.exceptions.get(&p).unwrap_or(&self.default)
    }

    fn combine(&self, o: &FiniteAdele, f: impl Fn(&Rational, &Rational) -> Rational) -> FiniteAdele {
        let primes: BTreeSet<u64> = self.exceptions.keys().chain(o.exceptions.keys()).copied().collect();
        let default = f(&self.default, &o.default);
        let exceptions = primes.into_iter().map(|p| (p, f(self.at(p), o.at(p))));
        FiniteAdele::new(default, exceptions).expect("exception keys are primes")
    }

    pub fn add(&self, o: &FiniteAdele) -> FiniteAdele {
        self.combine(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &FiniteAdele) -> FiniteAdele {
        self.combine(o, |a, b| a - b)
    }

    pub fn mul(&self, o: &FiniteAdele) -> FiniteAdele {
        self.combine(o, |a, b| a * b)
    }

    pub fn neg(&self) -> FiniteAdele {
        FiniteAdele::zero().sub(self)
    }

    /// Parses `{"default":"1/6","exceptions":{"2":"4"}}`.
    pub fn from_json(v: &serde_json::Value) -> Result<FiniteAdele, AdeleError> {
        let bad = || AdeleError::Malformed(v.to_string());
        let obj = v.as_object().ok_or_else(bad)?;
        let rational = |x: &serde_json::Value| -> Result<Rational, AdeleError> {
            match x {
                serde_json::Value::String(s) => parse_rational(s).map_err(|_| bad()),
                serde_json::Value::Number(n) => n.as_i64().map(|i| Rational::from_integer(i.into())).ok_or_else(bad),
                _ => Err(bad()),
            }
        };
        let default = rational(obj.get("default").ok_or_else(bad)?)?;
        let mut ex = Vec::new();
        if let Some(e) = obj.get("exceptions") {
            for (k, x) in e.as_object().ok_or_else(bad)? {
                ex.push((k.parse::<u64>().map_err(|_| bad())?, rational(x)?));
            }
        }
        FiniteAdele::new(default, ex)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ex: serde_json::Map<String, serde_json::Value> = self.exceptions.iter().map(|(p, v)| (p.to_string(), v.to_string().into())).collect();
        serde_json::json!({ "default": self.default.to_string(), "exceptions": ex })
    }
}

impl fmt::Display for FiniteAdele {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.default)?;
        if !self.exceptions.is_empty() {
            let ex: Vec<String> = self.exceptions.iter().map(|(p, v)| format!("{p}:{v}")).collect();
            write!(f, " except {{{}}}", ex.join(", "))?;
        }
        Ok(())
    }
}

/// `{p : a_p != 0}`.
pub fn supp(a: &FiniteAdele) -> PrimeSet {
    let zeros = |want_zero: bool| a.exceptions.iter().filter(move |(_, v)| v.is_zero() == want_zero).map(|(p, _)| *p);
    if a.default.is_zero() {
        PrimeSet::Finite(zeros(false).collect())
    } else {
        PrimeSet::Cofinite(zeros(true).collect())
    }
}

/// The prime `p` if `a = e_{p}`.
pub fn is_min_idempotent(a: &FiniteAdele) -> Option<u64> {
    match (a.default.is_zero(), a.exceptions.iter().collect::<Vec<_>>().as_slice()) {
        (true, [(p, v)]) if v.is_one() => Some(**p),
        _ => None,
    }
}

pub fn stalk_project(a: &FiniteAdele, p: Prime) -> Rational {
    a.at(p.get()).clone()
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BoolValueError {
    #[error("formula has a quantifier: {0}")]
    Quantified(String),
    #[error(transparent)]
    Local(#[from] LocalEvalError),
    #[error("truth at p = {0} is not decided")]
    UndecidedAt(u64),
    #[error("truth at a generic prime is not decided")]
    UndecidedGeneric,
    #[error("variable `{0}` has no argument")]
    MissingArgument(String),
    #[error(transparent)]
    PrimeSet(#[from] PrimeSetError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolValueConfig {
    pub search: SearchConfig,
    /// Primes up to this bound are inspected in frontier density reports.
    pub frontier_bound: u64,
}

impl Default for BoolValueConfig {
    fn default() -> Self {
        BoolValueConfig { search: SearchConfig::default(), frontier_bound: 10_000 }
    }
}

type Args = BTreeMap<String, FiniteAdele>;

fn coordinates(args: &Args, p: u64) -> BTreeMap<String, Rational> {
    args.iter().map(|(k, a)| (k.clone(), a.at(p).clone())).collect()
}

/// `[[phi(args)]]` for a quantifier-free local formula.
pub fn boolean_value(phi: &Formula, args: &Args, cfg: &BoolValueConfig) -> Result<PrimeSet, BoolValueError> {
    if !phi.is_quantifier_free() {
        return Err(BoolValueError::Quantified(phi.to_string()));
    }
    local_boolean_value(phi, args, cfg)
}

/// `[[phi(args)]]` for any local formula the local evaluator decides.
///
/// The default tuple is evaluated at a generic prime; the exceptional primes
/// it reports and the exception primes of the arguments are evaluated
/// exactly. A generic answer that varies with the prime gives a frontier set
/// backed by the exact per-prime evaluation.
pub fn local_boolean_value(phi: &Formula, args: &Args, cfg: &BoolValueConfig) -> Result<PrimeSet, BoolValueError> {
    for v in phi.free_vars().keys() {
        if !args.contains_key(v) {
            return Err(BoolValueError::MissingArgument(v.clone()));
        }
    }
    let defaults: BTreeMap<String, Rational> = args.iter().map(|(k, a)| (k.clone(), a.default.clone())).collect();
    let generic = eval_generic(phi, &defaults, &cfg.search)?;
    let mut special: BTreeSet<u64> = generic.exceptional.clone();
    for a in args.values() {
        special.extend(a.exceptions.keys());
    }
    let at = |p: u64| -> Result<bool, BoolValueError> {
        let prime = Prime::new(p).expect("special primes are prime");
        eval_at_prime(phi, prime, &coordinates(args, p), &cfg.search)?.to_bool().ok_or(BoolValueError::UndecidedAt(p))
    };
    match generic.outcome {
        Outcome::True | Outcome::False => {
            let base = generic.outcome == Outcome::True;
            let mut flipped = Vec::new();
            for &p in &special {
                if at(p)? != base {
                    flipped.push(p);
                }
            }
            Ok(if base { PrimeSet::cofinite(flipped)? } else { PrimeSet::finite(flipped)? })
        }
        Outcome::Varies => {
            let (phi, args, search) = (phi.clone(), args.clone(), cfg.search.clone());
            let label = phi.to_string();
            Ok(PrimeSet::frontier(&label, Classification::Unknown, cfg.frontier_bound, move |p| {
                Prime::new(p)
                    .ok()
                    .and_then(|prime| eval_at_prime(&phi, prime, &coordinates(&args, p), &search).ok())
                    .is_some_and(|t| t == Truth::True)
            }))
        }
        Outcome::Unknown => Err(BoolValueError::UndecidedGeneric),
    }
}
