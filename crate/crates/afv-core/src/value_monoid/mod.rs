//! The lattice-ordered value monoid of the finite adeles and the internal
//! reconstruction of its stalks, Boolean part and finiteness predicate.
//!
//! Elements are families in `Z u {inf}` indexed by the primes, equal to a
//! default at all but finitely many primes. Three versions are supported:
//! totally defined (values in `Z u {inf}`), infinity-free (values in `Z`)
//! and idelic (finite support, values in `Z`).
//!
//! Intervals. The product order is coordinatewise and every coordinate is a
//! chain, so `[a, b]` is a chain when `a` and `b` differ in at most one
//! coordinate. If they differ at `v != w`, the elements equal to `a` except
//! for `b(v)` at `v`, respectively `b(w)` at `w`, lie in `[a, b]` and are
//! incomparable. So `[a, b]` is a chain iff `#{v : a(v) < b(v)} <= 1`.
//!
//! Equality at an atom. For `f, g >= 0` and `e` the atom at `p`,
//! `f(p) = g(p)` iff `h /\ f = h /\ g` for every `h >= 0` in the internal
//! stalk at `e`: off `p` both sides are 0, and at `p` take `h(p)` at least
//! `max(f(p), g(p))`. Comparing `h >= f` with `h >= g` instead is not enough
//! once `f` or `g` is nonzero off `p`, since then no stalk element lies above
//! either. Nonpositive parts are handled dually with `\/`.

mod bbeta;
mod checks;

pub use bbeta::{bbeta_fin, check_bbeta, BBetaElement, BBetaReport, Flag};
pub use checks::{
    check_monoid_axioms, check_stalk_lemma, linear_order_witness, random_element, AxiomSweep, StalkReport,
};

use crate::boolean_engine::PrimeSet;
use crate::local_fields::{rational_primes, vp, Valuation};
use crate::logic_core::{Formula, Term};
use crate::primes::{is_prime, Prime, TooLarge};
use crate::restricted_products::FiniteAdele;
use num_traits::{ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A coordinate value. `Fin(_) < Inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MVal {
    Fin(i64),
    Inf,
}

impl MVal {
    pub fn add(self, o: MVal) -> MVal {
        match (self, o) {
            (MVal::Fin(a), MVal::Fin(b)) => MVal::Fin(a + b),
            _ => MVal::Inf,
        }
    }

    pub fn neg(self) -> Option<MVal> {
        match self {
            MVal::Fin(a) => Some(MVal::Fin(-a)),
            MVal::Inf => None,
        }
    }
}

impl fmt::Display for MVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MVal::Fin(a) => write!(f, "{a}"),
            MVal::Inf => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Version {
    /// Values in `Z u {inf}`, at least 0 almost everywhere.
    TotallyDefined,
    /// Values in `Z`, at least 0 almost everywhere.
    InfinityFree,
    /// Values in `Z`, 0 almost everywhere.
    Idelic,
}

impl Version {
    pub const ALL: [Version; 3] = [Version::TotallyDefined, Version::InfinityFree, Version::Idelic];

    pub fn name(self) -> &'static str {
        match self {
            Version::TotallyDefined => "totally-defined",
            Version::InfinityFree => "infinity-free",
            Version::Idelic => "idelic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MonoidError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("default {0} is negative")]
    NegativeDefault(MVal),
    #[error("malformed monoid literal: {0}")]
    Malformed(String),
    #[error("{0} is not a Boolean element")]
    NotBoolean(String),
    #[error("{0} is not below {1}")]
    NotBelow(String, String),
    #[error("{0} is not an atom")]
    NotAtom(String),
    #[error("unsupported term `{0}`")]
    Unsupported(String),
    #[error("variable `{0}` has no argument")]
    MissingArgument(String),
    #[error("formula has a quantifier: {0}")]
    Quantified(String),
    #[error(transparent)]
    TooLarge(#[from] TooLarge),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonoidElement {
    default: MVal,
    exceptions: BTreeMap<u64, MVal>,
}

impl MonoidElement {
    pub fn new(default: MVal, exceptions: impl IntoIterator<Item = (u64, MVal)>) -> Result<MonoidElement, MonoidError> {
        if default < MVal::Fin(0) {
            return Err(MonoidError::NegativeDefault(default));
        }
        let mut ex = BTreeMap::new();
        for (p, v) in exceptions {
            if !is_prime(p) {
                return Err(MonoidError::NotPrime(p));
            }
            if v != default {
                ex.insert(p, v);
            }
        }
        Ok(MonoidElement { default, exceptions: ex })
    }

    pub fn constant(v: MVal) -> Result<MonoidElement, MonoidError> {
        MonoidElement::new(v, [])
    }

    pub fn zero() -> MonoidElement {
        MonoidElement { default: MVal::Fin(0), exceptions: BTreeMap::new() }
    }

    /// `v` at `p`, 0 elsewhere.
    pub fn single(p: u64, v: MVal) -> Result<MonoidElement, MonoidError> {
        MonoidElement::new(MVal::Fin(0), [(p, v)])
    }

    pub fn atom(p: u64) -> Result<MonoidElement, MonoidError> {
        MonoidElement::single(p, MVal::Fin(1))
    }

    /// The supremum of the atoms at `primes`.
    pub fn indicator(primes: impl IntoIterator<Item = u64>) -> Result<MonoidElement, MonoidError> {
        MonoidElement::new(MVal::Fin(0), primes.into_iter().map(|p| (p, MVal::Fin(1))))
    }

    pub fn default_value(&self) -> MVal {
        self.default
    }

    pub fn exceptions(&self) -> &BTreeMap<u64, MVal> {
        &self.exceptions
    }

    pub fn at(&self, p: u64) -> MVal {
        self.exceptions.get(&p).copied().unwrap_or(self.default)
    }

    pub fn belongs_to(&self, version: Version) -> bool {
        let no_inf = || self.default != MVal::Inf && self.exceptions.values().all(|&v| v != MVal::Inf);
        match version {
            Version::TotallyDefined => true,
            Version::InfinityFree => no_inf(),
            Version::Idelic => no_inf() && self.default == MVal::Fin(0),
        }
    }

    fn combine(&self, o: &MonoidElement, f: impl Fn(MVal, MVal) -> MVal) -> MonoidElement {
        let primes: BTreeSet<u64> = self.exceptions.keys().chain(o.exceptions.keys()).copied().collect();
        let default = f(self.default, o.default);
        let mut ex = BTreeMap::new();
        for p in primes {
            let v = f(self.at(p), o.at(p));
            if v != default {
                ex.insert(p, v);
            }
        }
        MonoidElement { default, exceptions: ex }
    }

    pub fn add(&self, o: &MonoidElement) -> MonoidElement {
        self.combine(o, MVal::add)
    }

    pub fn meet(&self, o: &MonoidElement) -> MonoidElement {
        self.combine(o, MVal::min)
    }

    pub fn join(&self, o: &MonoidElement) -> MonoidElement {
        self.combine(o, MVal::max)
    }

    pub fn double(&self) -> MonoidElement {
        self.add(self)
    }

    /// The additive inverse, which exists iff the support is finite and no
    /// coordinate is `inf`.
    pub fn inverse(&self) -> Option<MonoidElement> {
        if self.default != MVal::Fin(0) {
            return None;
        }
        let ex = self.exceptions.iter().map(|(&p, &v)| v.neg().map(|n| (p, n))).collect::<Option<Vec<_>>>()?;
        Some(MonoidElement { default: MVal::Fin(0), exceptions: ex.into_iter().collect() })
    }

    /// Coordinatewise order.
    pub fn le(&self, o: &MonoidElement) -> bool {
        self.meet(o) == *self
    }

    /// Primes where the value is not zero, when finitely many.
    pub fn support(&self) -> Option<BTreeSet<u64>> {
        (self.default == MVal::Fin(0)).then(|| self.exceptions.keys().copied().collect())
    }

    /// Parses `{"default":0,"exceptions":{"2":3,"7":"inf"}}`.
    pub fn from_json(v: &serde_json::Value) -> Result<MonoidElement, MonoidError> {
        let bad = || MonoidError::Malformed(v.to_string());
        let val = |x: &serde_json::Value| match x {
            serde_json::Value::Number(n) => n.as_i64().map(MVal::Fin).ok_or_else(bad),
            serde_json::Value::String(s) if s == "inf" => Ok(MVal::Inf),
            serde_json::Value::String(s) => s.parse().map(MVal::Fin).map_err(|_| bad()),
            _ => Err(bad()),
        };
        let obj = v.as_object().ok_or_else(bad)?;
        let default = val(obj.get("default").ok_or_else(bad)?)?;
        let mut ex = Vec::new();
        if let Some(e) = obj.get("exceptions") {
            for (k, x) in e.as_object().ok_or_else(bad)? {
                ex.push((k.parse::<u64>().map_err(|_| bad())?, val(x)?));
            }
        }
        MonoidElement::new(default, ex)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let val = |v: MVal| match v {
            MVal::Fin(a) => serde_json::json!(a),
            MVal::Inf => serde_json::json!("inf"),
        };
        let ex: serde_json::Map<String, serde_json::Value> = self.exceptions.iter().map(|(p, &v)| (p.to_string(), val(v))).collect();
        serde_json::json!({ "default": val(self.default), "exceptions": ex })
    }
}

impl PartialOrd for MonoidElement {
    fn partial_cmp(&self, o: &MonoidElement) -> Option<Ordering> {
        match (self.le(o), o.le(self)) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}

impl fmt::Display for MonoidElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.default)?;
        if !self.exceptions.is_empty() {
            let ex: Vec<String> = self.exceptions.iter().map(|(p, v)| format!("{p}:{v}")).collect();
            write!(f, " except {{{}}}", ex.join(", "))?;
        }
        Ok(())
    }
}

/// The prime of `a` if `a` is an atom of the lattice order.
pub fn is_atom(a: &MonoidElement) -> Option<u64> {
    match (a.default, a.exceptions.iter().next(), a.exceptions.len()) {
        (MVal::Fin(0), Some((&p, &MVal::Fin(1))), 1) => Some(p),
        _ => None,
    }
}

fn require_atom(e: &MonoidElement) -> Result<u64, MonoidError> {
    is_atom(e).ok_or_else(|| MonoidError::NotAtom(e.to_string()))
}

/// Whether `[a, b]` is linearly ordered.
pub fn chain_interval(a: &MonoidElement, b: &MonoidElement) -> Result<bool, MonoidError> {
    if !a.le(b) {
        return Err(MonoidError::NotBelow(a.to_string(), b.to_string()));
    }
    if a.default != b.default {
        return Ok(false);
    }
    let primes: BTreeSet<u64> = a.exceptions.keys().chain(b.exceptions.keys()).copied().collect();
    Ok(primes.into_iter().filter(|&p| a.at(p) < b.at(p)).count() <= 1)
}

/// Stalk membership by the interval characterization: `h = 0`, or
/// `h >= e` with `[e, 2h]` a chain, or `h <= -e` with `[2h, -e]` a chain.
pub fn in_internal_stalk(h: &MonoidElement, e: &MonoidElement, version: Version) -> Result<bool, MonoidError> {
    require_atom(e)?;
    if !h.belongs_to(version) {
        return Err(MonoidError::Malformed(format!("{h} is not in the {} monoid", version.name())));
    }
    if *h == MonoidElement::zero() {
        return Ok(true);
    }
    let neg_e = e.inverse().expect("atoms are invertible");
    let h2 = h.double();
    Ok((e.le(h) && chain_interval(e, &h2)?) || (h.le(&neg_e) && chain_interval(&h2, &neg_e)?))
}

/// Stalk membership by coordinates: `h` vanishes off the atom.
pub fn in_stalk_direct(h: &MonoidElement, e: &MonoidElement) -> Result<bool, MonoidError> {
    let p = require_atom(e)?;
    Ok(h.default == MVal::Fin(0) && h.exceptions.keys().all(|&q| q == p))
}

/// `f(e) = g(e)`.
pub fn equiv_at_atom(f: &MonoidElement, g: &MonoidElement, e: &MonoidElement) -> Result<bool, MonoidError> {
    let p = require_atom(e)?;
    let direct = f.at(p) == g.at(p);
    debug_assert_eq!(Ok(direct), equiv_at_atom_internal(f, g, e), "stalk equality at {p} for {f} and {g}");
    Ok(direct)
}

/// `f(e) = g(e)` decided inside the monoid: split into nonnegative and
/// nonpositive parts and compare meets (joins) with stalk elements in the
/// window that decides them.
pub fn equiv_at_atom_internal(f: &MonoidElement, g: &MonoidElement, e: &MonoidElement) -> Result<bool, MonoidError> {
    let p = require_atom(e)?;
    let zero = MonoidElement::zero();
    let (fp, fm, gp, gm) = (f.join(&zero), f.meet(&zero), g.join(&zero), g.meet(&zero));
    debug_assert!(fp.add(&fm) == *f && gp.add(&gm) == *g);

    let top = match fp.at(p).max(gp.at(p)) {
        MVal::Fin(a) => a + 1,
        MVal::Inf => 1,
    };
    let mut positive: Vec<MonoidElement> = (0..=top).map(|k| MonoidElement::single(p, MVal::Fin(k))).collect::<Result<_, _>>()?;
    positive.push(MonoidElement::single(p, MVal::Inf)?);
    let bottom = match fm.at(p).min(gm.at(p)) {
        MVal::Fin(a) => a - 1,
        MVal::Inf => -1,
    };
    let negative: Vec<MonoidElement> = (bottom..=0).map(|k| MonoidElement::single(p, MVal::Fin(k))).collect::<Result<_, _>>()?;

    let pos_agree = positive.iter().all(|h| h.meet(&fp) == h.meet(&gp));
    let neg_agree = negative.iter().all(|h| h.join(&fm) == h.join(&gm));
    Ok(pos_agree && neg_agree)
}

/// Finiteness of a Boolean element: finite support, equivalently an
/// additive inverse exists.
pub fn is_finite_boolean(b: &MonoidElement) -> Result<bool, MonoidError> {
    let boolean = |v: MVal| v == MVal::Fin(0) || v == MVal::Fin(1);
    if !boolean(b.default) || !b.exceptions.values().all(|&v| boolean(v)) {
        return Err(MonoidError::NotBoolean(b.to_string()));
    }
    let finite = b.support().is_some();
    debug_assert_eq!(finite, b.inverse().is_some());
    Ok(finite)
}

/// The coordinatewise valuation of a finite adele.
pub fn prod_val(a: &FiniteAdele) -> Result<MonoidElement, MonoidError> {
    let to_mval = |v: Valuation| match v {
        Valuation::Finite(k) => MVal::Fin(k),
        Valuation::Infinity => MVal::Inf,
    };
    let d = a.default_value();
    let default = if d.is_zero() { MVal::Inf } else { MVal::Fin(0) };
    let mut primes: BTreeSet<u64> = a.exceptions().keys().copied().collect();
    primes.extend(rational_primes(d)?);
    let ex = primes.into_iter().map(|p| (p, to_mval(vp(a.at(p), Prime::new(p).expect("listed primes are prime")))));
    MonoidElement::new(default, ex)
}

type MEnv = BTreeMap<String, MVal>;

fn eval_mterm(t: &Term, env: &MEnv) -> Result<MVal, MonoidError> {
    Ok(match t {
        Term::Var { name, .. } => *env.get(name).ok_or_else(|| MonoidError::MissingArgument(name.clone()))?,
        Term::Const { name, .. } if name == "0" => MVal::Fin(0),
        Term::Const { name, .. } if name == "inf" => MVal::Inf,
        Term::Num { value, .. } if value.is_integer() => MVal::Fin(value.to_integer().to_i64().ok_or_else(|| MonoidError::Unsupported(t.to_string()))?),
        Term::App { func, args, .. } => match (func.as_str(), args.as_slice()) {
            ("+", [a, b]) => eval_mterm(a, env)?.add(eval_mterm(b, env)?),
            ("meet", [a, b]) => eval_mterm(a, env)?.min(eval_mterm(b, env)?),
            ("join", [a, b]) => eval_mterm(a, env)?.max(eval_mterm(b, env)?),
            _ => return Err(MonoidError::Unsupported(t.to_string())),
        },
        _ => return Err(MonoidError::Unsupported(t.to_string())),
    })
}

/// Truth of a quantifier-free monoid formula in `Z u {inf}`.
pub fn eval_monoid_local(phi: &Formula, env: &MEnv) -> Result<bool, MonoidError> {
    Ok(match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::Eq(s, t) => eval_mterm(s, env)? == eval_mterm(t, env)?,
        Formula::Not(g) => !eval_monoid_local(g, env)?,
        Formula::And(gs) => gs.iter().map(|g| eval_monoid_local(g, env)).collect::<Result<Vec<_>, _>>()?.into_iter().all(|b| b),
        Formula::Or(gs) => gs.iter().map(|g| eval_monoid_local(g, env)).collect::<Result<Vec<_>, _>>()?.into_iter().any(|b| b),
        Formula::Implies(a, b) => !eval_monoid_local(a, env)? || eval_monoid_local(b, env)?,
        Formula::Exists(..) | Formula::Forall(..) => return Err(MonoidError::Quantified(phi.to_string())),
        other => return Err(MonoidError::Unsupported(other.to_string())),
    })
}

/// `[[phi(args)]]`: exact at the primes where some argument is nonzero, and
/// the truth of `phi` at the default tuple elsewhere.
pub fn monoid_boolean_value(phi: &Formula, args: &BTreeMap<String, MonoidElement>) -> Result<PrimeSet, MonoidError> {
    for v in phi.free_vars().keys() {
        if !args.contains_key(v) {
            return Err(MonoidError::MissingArgument(v.clone()));
        }
    }
    let env_at = |p: Option<u64>| -> MEnv { args.iter().map(|(k, a)| (k.clone(), p.map_or(a.default, |p| a.at(p)))).collect() };
    let generic = eval_monoid_local(phi, &env_at(None))?;
    let special: BTreeSet<u64> = args.values().flat_map(|a| a.exceptions.keys().copied()).collect();
    let mut flipped = Vec::new();
    for p in special {
        if eval_monoid_local(phi, &env_at(Some(p)))? != generic {
            flipped.push(p);
        }
    }
    let set = if generic { PrimeSet::cofinite(flipped) } else { PrimeSet::finite(flipped) };
    Ok(set.expect("exception primes are prime"))
}

/// `Fin([[phi(args)]])` for arguments in the direct sum, cross-checked
/// against the bounded form of `exists f forall e (e in [[phi]] -> e <= f)`.
pub fn dsum_fin_check(phi: &Formula, args: &BTreeMap<String, MonoidElement>) -> Result<bool, MonoidError> {
    for a in args.values() {
        if !a.belongs_to(Version::Idelic) {
            return Err(MonoidError::Malformed(format!("{a} is not in the direct sum")));
        }
    }
    let set = monoid_boolean_value(phi, args)?;
    let fin = matches!(set, PrimeSet::Finite(_));
    debug_assert_eq!(fin, fin_by_witness(&set), "{phi}");
    Ok(fin)
}

/// The bounded witness form: `f` is the indicator of the members up to the
/// largest listed prime, and the atoms are checked up to twice that bound.
fn fin_by_witness(set: &PrimeSet) -> bool {
    let bound = set.listed().last().copied().unwrap_or(2).max(2);
    let members: Vec<u64> = (2..=bound).filter(|&p| is_prime(p) && set.contains(p)).collect();
    let f = MonoidElement::indicator(members).expect("members are prime");
    (2..=2 * bound + 2).filter(|&p| is_prime(p) && set.contains(p)).all(|p| MonoidElement::atom(p).expect("prime").le(&f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_fields::rat;
    use crate::logic_core::{parse_formula, Signature};

    fn el(default: MVal, ex: &[(u64, MVal)]) -> MonoidElement {
        MonoidElement::new(default, ex.iter().copied()).unwrap()
    }

    use MVal::{Fin as F, Inf};

    #[test]
    fn operations() {
        let z = MonoidElement::zero();
        let inf = MonoidElement::constant(Inf).unwrap();
        assert_eq!(z.add(&inf), inf);
        let g = el(F(2), &[(3, F(-1))]);
        assert!(g.meet(&z) != z);
        assert_eq!(el(F(2), &[(3, F(4))]).meet(&z), z);
        let j = MonoidElement::atom(2).unwrap().join(&MonoidElement::atom(3).unwrap());
        assert_eq!(j, MonoidElement::indicator([2, 3]).unwrap());
        assert_eq!(inf.meet(&g), g);
        assert_eq!(inf.join(&g), inf);
        assert!(MonoidElement::new(F(-1), []).is_err());
    }

    #[test]
    fn atoms() {
        assert_eq!(is_atom(&MonoidElement::atom(7).unwrap()), Some(7));
        assert_eq!(is_atom(&MonoidElement::constant(F(1)).unwrap()), None);
        assert_eq!(is_atom(&MonoidElement::single(5, F(2)).unwrap()), None);
        assert_eq!(is_atom(&MonoidElement::zero()), None);
    }

    #[test]
    fn intervals() {
        let e2 = MonoidElement::atom(2).unwrap();
        let h = MonoidElement::single(2, F(3)).unwrap();
        assert_eq!(chain_interval(&e2, &h.double()), Ok(true));
        let wide = el(F(0), &[(2, F(4)), (3, F(1))]);
        assert_eq!(chain_interval(&e2, &wide), Ok(false));
        assert_eq!(chain_interval(&wide, &wide), Ok(true));
        assert!(chain_interval(&wide, &e2).is_err());
        assert_eq!(chain_interval(&MonoidElement::zero(), &MonoidElement::constant(F(1)).unwrap()), Ok(false));
    }

    #[test]
    fn stalks() {
        let e2 = MonoidElement::atom(2).unwrap();
        for v in Version::ALL {
            assert_eq!(in_internal_stalk(&MonoidElement::zero(), &e2, v), Ok(true));
            assert_eq!(in_internal_stalk(&MonoidElement::single(2, F(3)).unwrap(), &e2, v), Ok(true));
            assert_eq!(in_internal_stalk(&MonoidElement::single(2, F(-2)).unwrap(), &e2, v), Ok(true));
            assert_eq!(in_internal_stalk(&el(F(0), &[(2, F(3)), (3, F(1))]), &e2, v), Ok(false));
            assert_eq!(in_internal_stalk(&el(F(0), &[(2, F(-3)), (3, F(1))]), &e2, v), Ok(false));
        }
        let h = MonoidElement::single(2, Inf).unwrap();
        assert_eq!(in_internal_stalk(&h, &e2, Version::TotallyDefined), Ok(true));
        assert!(in_internal_stalk(&h, &e2, Version::Idelic).is_err());
        assert!(in_internal_stalk(&h, &h, Version::TotallyDefined).is_err());
    }

    #[test]
    fn equality_at_atoms() {
        let e2 = MonoidElement::atom(2).unwrap();
        let f = el(F(1), &[(2, F(5)), (3, F(0))]);
        let g = el(F(0), &[(2, F(5)), (7, F(-3))]);
        assert_eq!(equiv_at_atom(&f, &g, &e2), Ok(true));
        let f1 = MonoidElement::single(2, F(1)).unwrap();
        let g2 = MonoidElement::single(2, F(2)).unwrap();
        assert_eq!(equiv_at_atom(&f1, &g2, &e2), Ok(false));
        assert_eq!(equiv_at_atom(&f, &f, &e2), Ok(true));
        assert_eq!(equiv_at_atom(&el(F(0), &[(2, Inf)]), &el(F(3), &[(2, Inf)]), &e2), Ok(true));
        assert_eq!(equiv_at_atom(&el(F(0), &[(2, Inf)]), &el(F(3), &[(2, F(9))]), &e2), Ok(false));
    }

    #[test]
    fn comparing_upper_bounds_alone_does_not_separate() {
        // f(2) = 1, g(2) = 5, both nonzero at 3: no stalk element at 2 lies
        // above either, so the upper-bound test cannot tell them apart
        let e2 = MonoidElement::atom(2).unwrap();
        let f = el(F(0), &[(2, F(1)), (3, F(1))]);
        let g = el(F(0), &[(2, F(5)), (3, F(1))]);
        let stalk: Vec<MonoidElement> = (0..8).map(|k| MonoidElement::single(2, F(k)).unwrap()).collect();
        assert!(stalk.iter().all(|h| f.le(h) == g.le(h)));
        assert_eq!(equiv_at_atom_internal(&f, &g, &e2), Ok(false));
    }

    #[test]
    fn boolean_finiteness() {
        assert_eq!(is_finite_boolean(&MonoidElement::indicator([2, 3]).unwrap()), Ok(true));
        assert_eq!(is_finite_boolean(&MonoidElement::constant(F(1)).unwrap()), Ok(false));
        assert_eq!(is_finite_boolean(&MonoidElement::zero()), Ok(true));
        assert!(is_finite_boolean(&MonoidElement::single(2, F(2)).unwrap()).is_err());
    }

    #[test]
    fn valuations_of_adeles() {
        let a = FiniteAdele::new(rat(12, 5), [(7, rat(0, 1))]).unwrap();
        let v = prod_val(&a).unwrap();
        assert_eq!(v, el(F(0), &[(2, F(2)), (3, F(1)), (5, F(-1)), (7, Inf)]));
        assert_eq!(prod_val(&FiniteAdele::zero()).unwrap(), MonoidElement::constant(Inf).unwrap());
    }

    #[test]
    fn direct_sum_finiteness() {
        let m = |t: &str| parse_formula(t, &Signature::monoid()).unwrap();
        let x = BTreeMap::from([("x".to_string(), MonoidElement::atom(2).unwrap())]);
        assert_eq!(dsum_fin_check(&m("(not (= x 0))"), &x), Ok(true));
        assert_eq!(dsum_fin_check(&m("(= x 0)"), &x), Ok(false));
        assert_eq!(dsum_fin_check(&m("(= (meet x 0) 0)"), &x), Ok(false));
        let y = BTreeMap::from([("x".to_string(), el(F(0), &[(3, F(-2)), (5, F(4))]))]);
        assert_eq!(monoid_boolean_value(&m("(= (meet x 0) 0)"), &y).unwrap(), PrimeSet::Cofinite(vec![3]));
        assert_eq!(dsum_fin_check(&m("(= (+ x x) (join x 4))"), &y), Ok(true));
    }

    #[test]
    fn json_round_trip() {
        let v: serde_json::Value = serde_json::from_str(r#"{"default":0,"exceptions":{"2":3,"7":"inf"}}"#).unwrap();
        let a = MonoidElement::from_json(&v).unwrap();
        assert_eq!(a, el(F(0), &[(2, F(3)), (7, Inf)]));
        assert_eq!(MonoidElement::from_json(&a.to_json()).unwrap(), a);
    }
}
