//! The Boolean algebra of sets of primes, three-valued evaluation of Boolean
//! formulas with `Fin` and `C_j`, and quantifier elimination for the theory
//! of the powerset of a countably infinite set with those predicates.

mod qe;

pub use qe::{ba_decide, ba_qe, Card, Key, MintermTable, QeError};

use crate::logic_core::{BAtom, BTerm, Formula};
use crate::primes::{is_prime, primes_up_to};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Kleene truth values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Truth {
    False,
    Indeterminate,
    True,
}

impl Truth {
    pub fn and(self, other: Truth) -> Truth {
        self.min(other)
    }

    pub fn or(self, other: Truth) -> Truth {
        self.max(other)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Indeterminate => Truth::Indeterminate,
        }
    }

    pub fn from_bool(b: bool) -> Truth {
        if b { Truth::True } else { Truth::False }
    }

    pub fn to_bool(self) -> Option<bool> {
        match self {
            Truth::True => Some(true),
            Truth::False => Some(false),
            Truth::Indeterminate => None,
        }
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::True => "true",
            Truth::False => "false",
            Truth::Indeterminate => "indeterminate",
        })
    }
}

/// What is known about the cardinality of a frontier set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Unknown,
    DeclaredFinite,
    DeclaredCofinite,
}

impl Classification {
    fn flip(self) -> Classification {
        match self {
            Classification::Unknown => Classification::Unknown,
            Classification::DeclaredFinite => Classification::DeclaredCofinite,
            Classification::DeclaredCofinite => Classification::DeclaredFinite,
        }
    }
}

pub type Oracle = Arc<dyn Fn(u64) -> bool + Send + Sync>;

/// A set of primes known only through a membership oracle.
#[derive(Clone)]
pub struct Frontier {
    pub oracle: Oracle,
    pub classification: Classification,
    /// Primes up to this bound are inspected for density reports.
    pub bound: u64,
    pub label: String,
}

impl fmt::Debug for Frontier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frontier({}, {:?}, B={})", self.label, self.classification, self.bound)
    }
}

/// A subset of the primes.
#[derive(Clone, Debug)]
pub enum PrimeSet {
    /// Sorted, duplicate-free list of members.
    Finite(Vec<u64>),
    /// Sorted, duplicate-free list of non-members.
    Cofinite(Vec<u64>),
    Frontier(Frontier),
}

impl PartialEq for PrimeSet {
    fn eq(&self, other: &PrimeSet) -> bool {
        match (self, other) {
            (PrimeSet::Finite(a), PrimeSet::Finite(b)) | (PrimeSet::Cofinite(a), PrimeSet::Cofinite(b)) => a == b,
            (PrimeSet::Frontier(a), PrimeSet::Frontier(b)) => Arc::ptr_eq(&a.oracle, &b.oracle) && a.classification == b.classification,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PrimeSetError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("malformed prime set literal: {0}")]
    Malformed(String),
}

fn normalize(mut v: Vec<u64>) -> Result<Vec<u64>, PrimeSetError> {
    v.sort_unstable();
    v.dedup();
    if let Some(&bad) = v.iter().find(|&&p| !is_prime(p)) {
        return Err(PrimeSetError::NotPrime(bad));
    }
    Ok(v)
}

fn merge(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn intersect(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

fn minus(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect()
}

/// Count of members below the bound, for frontier reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Density {
    pub members: usize,
    pub checked: usize,
    pub bound: u64,
}

impl Density {
    pub fn ratio(&self) -> f64 {
        if self.checked == 0 { 0.0 } else { self.members as f64 / self.checked as f64 }
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} primes up to {} (density {:.4})", self.members, self.checked, self.bound, self.ratio())
    }
}

impl PrimeSet {
    pub fn empty() -> PrimeSet {
        PrimeSet::Finite(Vec::new())
    }

    pub fn all() -> PrimeSet {
        PrimeSet::Cofinite(Vec::new())
    }

    pub fn finite(primes: impl IntoIterator<Item = u64>) -> Result<PrimeSet, PrimeSetError> {
        Ok(PrimeSet::Finite(normalize(primes.into_iter().collect())?))
    }

    pub fn cofinite(excluded: impl IntoIterator<Item = u64>) -> Result<PrimeSet, PrimeSetError> {
        Ok(PrimeSet::Cofinite(normalize(excluded.into_iter().collect())?))
    }

    pub fn frontier(label: &str, classification: Classification, bound: u64, oracle: impl Fn(u64) -> bool + Send + Sync + 'static) -> PrimeSet {
        PrimeSet::Frontier(Frontier { oracle: Arc::new(oracle), classification, bound, label: label.to_string() })
    }

    pub fn contains(&self, p: u64) -> bool {
        match self {
            PrimeSet::Finite(v) => v.binary_search(&p).is_ok(),
            PrimeSet::Cofinite(v) => v.binary_search(&p).is_err(),
            PrimeSet::Frontier(fr) => (fr.oracle)(p),
        }
    }

    pub fn is_classified(&self) -> bool {
        !matches!(self, PrimeSet::Frontier(_))
    }

    /// The listed primes: members of a finite set, non-members of a cofinite one.
    pub fn listed(&self) -> &[u64] {
        match self {
            PrimeSet::Finite(v) | PrimeSet::Cofinite(v) => v,
            PrimeSet::Frontier(_) => &[],
        }
    }

    pub fn complement(&self) -> PrimeSet {
        match self {
            PrimeSet::Finite(v) => PrimeSet::Cofinite(v.clone()),
            PrimeSet::Cofinite(v) => PrimeSet::Finite(v.clone()),
            PrimeSet::Frontier(fr) => {
                let o = fr.oracle.clone();
                PrimeSet::Frontier(Frontier {
                    oracle: Arc::new(move |p| !o(p)),
                    classification: fr.classification.flip(),
                    bound: fr.bound,
                    label: format!("not {}", fr.label),
                })
            }
        }
    }

    pub fn meet(&self, other: &PrimeSet) -> PrimeSet {
        use PrimeSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(intersect(a, b)),
            (Finite(a), Cofinite(b)) | (Cofinite(b), Finite(a)) => Finite(minus(a, b)),
            (Cofinite(a), Cofinite(b)) => Cofinite(merge(a, b)),
            (Finite(a), Frontier(fr)) | (Frontier(fr), Finite(a)) => Finite(a.iter().copied().filter(|&p| (fr.oracle)(p)).collect()),
            (Cofinite(a), Frontier(fr)) | (Frontier(fr), Cofinite(a)) => {
                let o = fr.oracle.clone();
                let excl = a.clone();
                Frontier(crate::boolean_engine::Frontier {
                    oracle: Arc::new(move |p| excl.binary_search(&p).is_err() && o(p)),
                    classification: fr.classification,
                    bound: fr.bound,
                    label: format!("{} minus {:?}", fr.label, a),
                })
            }
            (Frontier(x), Frontier(y)) => {
                use Classification::*;
                let c = match (x.classification, y.classification) {
                    (DeclaredFinite, _) | (_, DeclaredFinite) => DeclaredFinite,
                    (DeclaredCofinite, DeclaredCofinite) => DeclaredCofinite,
                    _ => Unknown,
                };
                let (o1, o2) = (x.oracle.clone(), y.oracle.clone());
                Frontier(crate::boolean_engine::Frontier {
                    oracle: Arc::new(move |p| o1(p) && o2(p)),
                    classification: c,
                    bound: x.bound.max(y.bound),
                    label: format!("({} and {})", x.label, y.label),
                })
            }
        }
    }

    pub fn join(&self, other: &PrimeSet) -> PrimeSet {
        self.complement().meet(&other.complement()).complement()
    }

    pub fn difference(&self, other: &PrimeSet) -> PrimeSet {
        self.meet(&other.complement())
    }

    pub fn symmetric_difference(&self, other: &PrimeSet) -> PrimeSet {
        self.difference(other).join(&other.difference(self))
    }

    /// Members up to the frontier bound, or `None` for classified sets.
    pub fn density(&self) -> Option<Density> {
        match self {
            PrimeSet::Frontier(fr) => {
                let ps = primes_up_to(fr.bound);
                let members = ps.iter().filter(|&&p| (fr.oracle)(p)).count();
                Some(Density { members, checked: ps.len(), bound: fr.bound })
            }
            _ => None,
        }
    }

    /// Emptiness, three-valued for frontier sets.
    pub fn is_empty(&self) -> Truth {
        match self {
            PrimeSet::Finite(v) => Truth::from_bool(v.is_empty()),
            PrimeSet::Cofinite(_) => Truth::False,
            PrimeSet::Frontier(fr) => {
                if fr.classification == Classification::DeclaredCofinite || primes_up_to(fr.bound).iter().any(|&p| (fr.oracle)(p)) {
                    Truth::False
                } else {
                    Truth::Indeterminate
                }
            }
        }
    }

    /// Parses `{"finite":[2,3,5]}` or `{"cofinite":[7]}`.
    pub fn from_json(v: &serde_json::Value) -> Result<PrimeSet, PrimeSetError> {
        let obj = v.as_object().ok_or_else(|| PrimeSetError::Malformed(v.to_string()))?;
        if obj.len() != 1 {
            return Err(PrimeSetError::Malformed(v.to_string()));
        }
        let (k, list) = obj.iter().next().unwrap();
        let items = list
            .as_array()
            .ok_or_else(|| PrimeSetError::Malformed(v.to_string()))?
            .iter()
            .map(|x| x.as_u64().ok_or_else(|| PrimeSetError::Malformed(x.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        match k.as_str() {
            "finite" => PrimeSet::finite(items),
            "cofinite" => PrimeSet::cofinite(items),
            _ => Err(PrimeSetError::Malformed(v.to_string())),
        }
    }

    pub fn to_json(&self) -> Option<serde_json::Value> {
        match self {
            PrimeSet::Finite(v) => Some(serde_json::json!({ "finite": v })),
            PrimeSet::Cofinite(v) => Some(serde_json::json!({ "cofinite": v })),
            PrimeSet::Frontier(_) => None,
        }
    }
}

impl fmt::Display for PrimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match self {
            PrimeSet::Finite(v) => write!(f, "Finite{{{}}}", list(v)),
            PrimeSet::Cofinite(v) => write!(f, "Cofinite{{{}}}", list(v)),
            PrimeSet::Frontier(fr) => write!(f, "Frontier[{}; {:?}; B={}]", fr.label, fr.classification, fr.bound),
        }
    }
}

/// Is the set finite?
pub fn eval_fin(a: &PrimeSet) -> Truth {
    match a {
        PrimeSet::Finite(_) => Truth::True,
        PrimeSet::Cofinite(_) => Truth::False,
        PrimeSet::Frontier(fr) => match fr.classification {
            Classification::DeclaredFinite => Truth::True,
            Classification::DeclaredCofinite => Truth::False,
            Classification::Unknown => Truth::Indeterminate,
        },
    }
}

/// Does the set have at least `j` members? Members found below the frontier
/// bound count as evidence; absence of evidence is indeterminate.
pub fn eval_cj(j: u32, a: &PrimeSet) -> Truth {
    assert!(j >= 1, "C_j needs j >= 1");
    match a {
        PrimeSet::Finite(v) => Truth::from_bool(v.len() >= j as usize),
        PrimeSet::Cofinite(_) => Truth::True,
        PrimeSet::Frontier(fr) => {
            if fr.classification == Classification::DeclaredCofinite {
                return Truth::True;
            }
            let found = primes_up_to(fr.bound).into_iter().filter(|&p| (fr.oracle)(p)).take(j as usize).count();
            if found >= j as usize { Truth::True } else { Truth::Indeterminate }
        }
    }
}

/// Values for the free Boolean variables and slots of a formula.
#[derive(Clone, Debug, Default)]
pub struct BEnv {
    pub vars: HashMap<String, PrimeSet>,
    pub slots: Vec<PrimeSet>,
}

impl BEnv {
    pub fn with_var(mut self, name: &str, value: PrimeSet) -> BEnv {
        self.vars.insert(name.to_string(), value);
        self
    }

    pub fn with_slots(mut self, slots: Vec<PrimeSet>) -> BEnv {
        self.slots = slots;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound Boolean variable `{0}`")]
    UnboundVariable(String),
    #[error("slot {0} has no value")]
    UnboundSlot(usize),
    #[error("formula is not quantifier-free Boolean: {0}")]
    NotQuantifierFree(String),
    #[error("Boolean value of a local formula must be computed before evaluation: {0}")]
    UnresolvedValue(String),
}

pub fn eval_bterm(t: &BTerm, env: &BEnv) -> Result<PrimeSet, EvalError> {
    Ok(match t {
        BTerm::Var(v) => env.vars.get(v).cloned().ok_or_else(|| EvalError::UnboundVariable(v.clone()))?,
        BTerm::Slot(i) => env.slots.get(*i).cloned().ok_or(EvalError::UnboundSlot(*i))?,
        BTerm::ValueOf(f) => return Err(EvalError::UnresolvedValue(f.to_string())),
        BTerm::Zero => PrimeSet::empty(),
        BTerm::One => PrimeSet::all(),
        BTerm::Meet(a, b) => eval_bterm(a, env)?.meet(&eval_bterm(b, env)?),
        BTerm::Join(a, b) => eval_bterm(a, env)?.join(&eval_bterm(b, env)?),
        BTerm::Compl(a) => eval_bterm(a, env)?.complement(),
    })
}

pub fn eval_batom(a: &BAtom, env: &BEnv) -> Result<Truth, EvalError> {
    Ok(match a {
        BAtom::Fin(t) => eval_fin(&eval_bterm(t, env)?),
        BAtom::Cj(j, t) => eval_cj(*j, &eval_bterm(t, env)?),
        BAtom::Eq(x, y) => eval_bterm(x, env)?.symmetric_difference(&eval_bterm(y, env)?).is_empty(),
        BAtom::Le(x, y) => eval_bterm(x, env)?.difference(&eval_bterm(y, env)?).is_empty(),
    })
}

/// Evaluates a quantifier-free Boolean formula in the powerset of the primes.
pub fn ba_eval(f: &Formula, env: &BEnv) -> Result<Truth, EvalError> {
    Ok(match f {
        Formula::True => Truth::True,
        Formula::False => Truth::False,
        Formula::Bool(a) => eval_batom(a, env)?,
        Formula::Not(g) => ba_eval(g, env)?.not(),
        Formula::And(xs) => {
            let mut acc = Truth::True;
            for g in xs {
                acc = acc.and(ba_eval(g, env)?);
                if acc == Truth::False {
                    break;
                }
            }
            acc
        }
        Formula::Or(xs) => {
            let mut acc = Truth::False;
            for g in xs {
                acc = acc.or(ba_eval(g, env)?);
                if acc == Truth::True {
                    break;
                }
            }
            acc
        }
        Formula::Implies(a, b) => ba_eval(a, env)?.not().or(ba_eval(b, env)?),
        other => return Err(EvalError::NotQuantifierFree(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic_core::{parse_formula, Signature};

    fn fin(v: &[u64]) -> PrimeSet {
        PrimeSet::finite(v.iter().copied()).unwrap()
    }

    fn cof(v: &[u64]) -> PrimeSet {
        PrimeSet::cofinite(v.iter().copied()).unwrap()
    }

    #[test]
    fn set_operations() {
        assert_eq!(fin(&[2, 3]).join(&fin(&[3, 5])), fin(&[2, 3, 5]));
        assert_eq!(cof(&[7]).complement(), fin(&[7]));
        assert_eq!(cof(&[2]).meet(&cof(&[3])), cof(&[2, 3]));
        assert_eq!(cof(&[2]).difference(&fin(&[5])), cof(&[2, 5]));
        assert_eq!(PrimeSet::finite([4]), Err(PrimeSetError::NotPrime(4)));
    }

    #[test]
    fn fin_and_cj() {
        assert_eq!(eval_fin(&fin(&[2, 3, 5])), Truth::True);
        assert_eq!(eval_fin(&cof(&[])), Truth::False);
        assert_eq!(eval_cj(2, &fin(&[2, 3, 5])), Truth::True);
        assert_eq!(eval_cj(4, &fin(&[2, 3, 5])), Truth::False);
        assert_eq!(eval_cj(1, &cof(&[2, 3])), Truth::True);
    }

    fn two_is_square_mod(p: u64) -> bool {
        p == 2 || (1..p).any(|y| y * y % p == 2)
    }

    #[test]
    fn frontier_sets_are_indeterminate_with_density() {
        let fr = PrimeSet::frontier("2 is a square mod p", Classification::Unknown, 10_000, two_is_square_mod);
        assert_eq!(eval_fin(&fr), Truth::Indeterminate);
        assert_eq!(eval_cj(3, &fr), Truth::True);
        let d = fr.density().unwrap();
        // Primes up to 10^4 where 2 is a quadratic residue: p = 2 or p = +-1 mod 8.
        let expected = primes_up_to(10_000).into_iter().filter(|p| *p == 2 || p % 8 == 1 || p % 8 == 7).count();
        assert_eq!(d.members, expected);
        assert!((d.ratio() - 0.5).abs() < 0.02);
        assert_eq!(fr.meet(&fin(&[7, 11, 17])), fin(&[7, 17]));
        assert_eq!(fr.join(&cof(&[3, 7])), cof(&[3]));
        assert_eq!(eval_fin(&fr.complement()), Truth::Indeterminate);
    }

    #[test]
    fn ba_eval_examples() {
        let sig = Signature::boolean();
        let f = parse_formula("(and (fin x) (cj 2 x))", &sig).unwrap();
        assert_eq!(ba_eval(&f, &BEnv::default().with_var("x", fin(&[2, 3]))).unwrap(), Truth::True);
        let g = parse_formula("(fin (join x (compl x)))", &sig).unwrap();
        assert_eq!(ba_eval(&g, &BEnv::default().with_var("x", fin(&[2]))).unwrap(), Truth::False);
        let h = parse_formula("(not (fin x))", &sig).unwrap();
        let fr = PrimeSet::frontier("all", Classification::Unknown, 100, |_| true);
        assert_eq!(ba_eval(&h, &BEnv::default().with_var("x", fr)).unwrap(), Truth::Indeterminate);
        assert!(matches!(ba_eval(&h, &BEnv::default()), Err(EvalError::UnboundVariable(_))));
    }

    #[test]
    fn json_literals_round_trip() {
        let v: serde_json::Value = serde_json::from_str(r#"{"finite":[5,2,3]}"#).unwrap();
        let s = PrimeSet::from_json(&v).unwrap();
        assert_eq!(s, fin(&[2, 3, 5]));
        assert_eq!(s.to_json().unwrap().to_string(), r#"{"finite":[2,3,5]}"#);
        let bad: serde_json::Value = serde_json::from_str(r#"{"finite":[6]}"#).unwrap();
        assert!(PrimeSet::from_json(&bad).is_err());
    }
}
