//! Reduction of formulas over products of local fields to Boolean formulas
//! over Boolean values of local formulas.
//!
//! A reduced form is a quantifier-free Boolean formula `theta` whose slots
//! `(bv i)` stand for `[[locals[i]]]`. Atoms `R(t)` become `[[R(t)]] = 1`;
//! connectives act on `theta`. For `exists x` over a body with reduced form
//! `theta(s_1, ..., s_m)`, let `psi_1, ..., psi_k` be the locals that mention
//! `x`. An element `x` of the product realizes the Boolean values
//! `Y_i = [[psi_i(x)]]` exactly when, for each `s` in `{0,1}^k`, every prime
//! in the region `T_s(Y) = /\_{i in s} Y_i /\ /\_{i not in s} -Y_i` satisfies
//! `phi_s = exists x (/\_{i in s} psi_i /\ /\_{i not in s} -psi_i)`, since the
//! coordinates of `x` can be chosen independently. So
//!
//! `exists x. theta  <=>  exists Y (/\_s T_s(Y) <= [[phi_s]] /\ theta[Y/s])`,
//!
//! and the Boolean quantifiers are eliminated at once. The regions `T_s(Y)`
//! are the cells of a partition, so this is the usual encoding with one
//! Boolean variable per split local instead of one per cell. In a restricted
//! product the guard `G(x)` is split as one more local, with `Fin(-Y_G)`.

mod corpus;
mod localize;
mod search;

pub use corpus::{corpus, run_corpus, CorpusEntry, CorpusReport, CorpusRow};
pub use localize::{check_localization, localization_params, localize, LocalizeReport, LocalizeRow, Localized, LOCALIZATION_FORMS};
pub use search::{eval_product_qf, witness_search, SearchBounds, SearchOutcome};

use crate::boolean_engine::{ba_eval, ba_qe, BEnv, PrimeSet, QeError, Truth};
use crate::local_fields::SearchConfig;
use crate::logic_core::{BTerm, Formula, Guard, Sort, Term, BOOL};
use crate::restricted_products::{local_boolean_value, BoolValueConfig, BoolValueError, FiniteAdele};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Which product the sentences are read in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Structure {
    /// The full product of the `Q_p`.
    Product,
    /// The finite adeles: the product restricted by `V`.
    Adeles,
}

impl Structure {
    pub fn name(self) -> &'static str {
        match self {
            Structure::Product => "product",
            Structure::Adeles => "adeles",
        }
    }

    pub fn guard(self) -> Option<Guard> {
        match self {
            Structure::Product => None,
            Structure::Adeles => Some(Guard { var: "g".into(), formula: Formula::atom("V", vec![Term::var("g", FIELD)]) }),
        }
    }
}

const FIELD: &str = "field";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedForm {
    pub theta: Formula,
    pub locals: Vec<Formula>,
}

impl fmt::Display for ReducedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "theta: {}", self.theta)?;
        for (i, l) in self.locals.iter().enumerate() {
            writeln!(f, "local {i}: {l}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FvError {
    #[error("unsupported formula: {0}")]
    Unsupported(String),
    #[error("quantifier over {x} splits {count} locals, above the cap of {cap}")]
    TooManyLocals { x: String, count: usize, cap: usize },
    #[error(transparent)]
    Qe(#[from] QeError),
    #[error("sentence expected, found free variables {0}")]
    NotClosed(String),
    #[error("variable `{0}` has no argument")]
    MissingArgument(String),
    #[error("parameter Boolean value {0} is not classified")]
    FrontierParameter(String),
    #[error("local formula outside the decidable fragment: {0}")]
    Local(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReduceConfig {
    /// Largest number of locals split by one quantifier.
    pub max_split: usize,
    /// When set, type sentences whose Boolean value is empty or every prime
    /// are folded to constants, using the local evaluator with this search.
    pub fold: Option<SearchConfig>,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig { max_split: 5, fold: Some(SearchConfig::default()) }
    }
}

struct Reducer<'a> {
    locals: Vec<Formula>,
    index: HashMap<Formula, usize>,
    guard: Option<&'a Guard>,
    cfg: &'a ReduceConfig,
    fresh: usize,
}

fn slots_of(theta: &Formula) -> BTreeSet<usize> {
    fn go(t: &BTerm, out: &mut BTreeSet<usize>) {
        match t {
            BTerm::Slot(i) => {
                out.insert(*i);
            }
            BTerm::Meet(a, b) | BTerm::Join(a, b) => {
                go(a, out);
                go(b, out);
            }
            BTerm::Compl(a) => go(a, out),
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    theta.visit_batoms(&mut |a| a.terms().into_iter().for_each(|t| go(t, &mut out)));
    out
}

fn map_slots(theta: &Formula, f: &impl Fn(usize) -> BTerm) -> Formula {
    theta.map_batoms(&mut |a| Formula::Bool(a.map_terms(&mut |t| t.map_leaves(&mut |leaf| match leaf {
        BTerm::Slot(i) => f(*i),
        other => other.clone(),
    }))))
}

fn has_batoms(f: &Formula) -> bool {
    let mut found = false;
    f.visit_batoms(&mut |_| found = true);
    found
}

impl Reducer<'_> {
    fn intern(&mut self, f: Formula) -> usize {
        if let Some(&i) = self.index.get(&f) {
            return i;
        }
        let i = self.locals.len();
        self.index.insert(f.clone(), i);
        self.locals.push(f);
        i
    }

    /// `Some(b)` when a local holds at every prime and every value of its
    /// free variables, or at none.
    fn fold_constant(&self, f: &Formula) -> Option<bool> {
        let search = self.cfg.fold.as_ref()?;
        let cfg = bool_value_cfg(search);
        let free = f.free_vars();
        let close = |g: Formula| free.iter().rev().fold(g, |acc, (v, s)| Formula::forall(v, s, acc));
        let everywhere = |g: Formula| matches!(local_boolean_value(&close(g), &BTreeMap::new(), &cfg), Ok(PrimeSet::Cofinite(v)) if v.is_empty());
        if everywhere(f.clone()) {
            Some(true)
        } else if everywhere(Formula::negate(f.clone())) {
            Some(false)
        } else {
            None
        }
    }

    fn local_slot(&mut self, f: &Formula) -> Result<BTerm, FvError> {
        if has_batoms(f) {
            return Err(FvError::Unsupported(format!("Boolean atom inside a local formula: {f}")));
        }
        Ok(BTerm::Slot(self.intern(f.clone())))
    }

    fn reduce(&mut self, f: &Formula) -> Result<Formula, FvError> {
        Ok(match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Atom { .. } | Formula::Eq(..) => Formula::beq(self.local_slot(f)?, BTerm::One),
            Formula::Bool(a) => {
                let mut err = None;
                let mapped = a.map_terms(&mut |t| {
                    t.map_leaves(&mut |leaf| match leaf {
                        BTerm::ValueOf(phi) => self.local_slot(phi).unwrap_or_else(|e| {
                            err = Some(e);
                            BTerm::Zero
                        }),
                        BTerm::Slot(i) => {
                            err = Some(FvError::Unsupported(format!("slot {i} in input")));
                            BTerm::Zero
                        }
                        other => other.clone(),
                    })
                });
                if let Some(e) = err {
                    return Err(e);
                }
                Formula::Bool(mapped)
            }
            Formula::Not(g) => Formula::negate(self.reduce(g)?),
            Formula::And(xs) => Formula::and(xs.iter().map(|g| self.reduce(g)).collect::<Result<Vec<_>, _>>()?),
            Formula::Or(xs) => Formula::or(xs.iter().map(|g| self.reduce(g)).collect::<Result<Vec<_>, _>>()?),
            Formula::Implies(a, b) => Formula::or([Formula::negate(self.reduce(a)?), self.reduce(b)?]),
            Formula::Exists(v, srt, body) => {
                let inner = self.reduce(body)?;
                self.exists(v, srt, inner)?
            }
            Formula::Forall(v, srt, body) => {
                let inner = Formula::negate(self.reduce(body)?);
                Formula::negate(self.exists(v, srt, inner)?)
            }
        })
    }

    fn exists(&mut self, x: &str, srt: &Sort, theta: Formula) -> Result<Formula, FvError> {
        if srt == BOOL {
            return Ok(ba_qe(&Formula::exists(x, BOOL, theta))?);
        }
        let split: Vec<usize> = slots_of(&theta).into_iter().filter(|&i| self.locals[i].free_vars().contains_key(x)).collect();
        // split formulas up to negation: slot i is Y_j or its complement
        let mut psis: Vec<Formula> = Vec::new();
        let mut signed = |f: &Formula| {
            let (base, positive) = match f {
                Formula::Not(g) => ((**g).clone(), false),
                other => (other.clone(), true),
            };
            let j = psis.iter().position(|p| *p == base).unwrap_or_else(|| {
                psis.push(base);
                psis.len() - 1
            });
            (j, positive)
        };
        let slot_map: HashMap<usize, (usize, bool)> = split.iter().map(|&i| (i, signed(&self.locals[i]))).collect();
        let guard = match self.guard {
            Some(g) if srt == FIELD => {
                let b = HashMap::from([(g.var.clone(), Term::var(x, srt))]);
                Some(crate::logic_core::substitute(&g.formula, &b).map_err(|e| FvError::Unsupported(e.to_string()))?)
            }
            _ => None,
        };
        let guard_at = guard.as_ref().map(&mut signed);
        if psis.is_empty() {
            // every sort is inhabited
            return Ok(theta);
        }
        let k = psis.len();
        if k > self.cfg.max_split {
            return Err(FvError::TooManyLocals { x: x.to_string(), count: k, cap: self.cfg.max_split });
        }
        self.fresh += 1;
        let ys: Vec<String> = (0..k).map(|j| format!("y{}_{j}", self.fresh)).collect();
        let mut parts = Vec::new();
        for s in 0..1usize << k {
            let region = BTerm::meet_all((0..k).map(|j| if s >> j & 1 == 1 { BTerm::var(&ys[j]) } else { BTerm::not(BTerm::var(&ys[j])) }));
            let conj = Formula::and((0..k).map(|j| if s >> j & 1 == 1 { psis[j].clone() } else { Formula::negate(psis[j].clone()) }));
            let phi_s = Formula::exists(x, srt, conj);
            match self.fold_constant(&phi_s) {
                Some(true) => {}
                Some(false) => parts.push(Formula::beq(region, BTerm::Zero)),
                None => {
                    let slot = self.intern(phi_s);
                    parts.push(Formula::ble(region, BTerm::Slot(slot)));
                }
            }
        }
        let y = |(j, positive): (usize, bool)| if positive { BTerm::var(&ys[j]) } else { BTerm::not(BTerm::var(&ys[j])) };
        if let Some(g) = guard_at {
            parts.push(Formula::fin(BTerm::not(y(g))));
        }
        parts.push(map_slots(&theta, &|i| slot_map.get(&i).map_or(BTerm::Slot(i), |&js| y(js))));
        let body = ys.iter().rev().fold(Formula::and(parts), |acc, y| Formula::exists(y, BOOL, acc));
        Ok(ba_qe(&body)?)
    }
}

/// Reduces `phi`; with a guard, field quantifiers range over the product
/// restricted by the guard.
pub fn fv_reduce(phi: &Formula, restriction: Option<&Guard>) -> Result<ReducedForm, FvError> {
    fv_reduce_with(phi, restriction, &ReduceConfig::default())
}

pub fn fv_reduce_with(phi: &Formula, restriction: Option<&Guard>, cfg: &ReduceConfig) -> Result<ReducedForm, FvError> {
    let mut r = Reducer { locals: Vec::new(), index: HashMap::new(), guard: restriction, cfg, fresh: 0 };
    let mut theta = r.reduce(phi)?;
    if !theta.is_quantifier_free() {
        theta = ba_qe(&theta)?;
    }
    // keep only the locals theta refers to, in slot order
    let used: Vec<usize> = slots_of(&theta).into_iter().collect();
    let renumber: HashMap<usize, usize> = used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let theta = map_slots(&theta, &|i| BTerm::Slot(renumber[&i]));
    let locals = used.into_iter().map(|i| r.locals[i].clone()).collect();
    Ok(ReducedForm { theta, locals })
}

/// Boolean values of the locals and the resulting truth.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub truth: Truth,
    /// `None` where the local evaluator could not decide the value.
    pub values: Vec<Option<PrimeSet>>,
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "truth: {:?}", self.truth)?;
        for (i, v) in self.values.iter().enumerate() {
            match v {
                Some(s) => {
                    write!(f, "value {i}: {s}")?;
                    if let Some(d) = s.density() {
                        write!(f, " density={}/{} bound={}", d.members, d.checked, d.bound)?;
                    }
                    writeln!(f)?;
                }
                None => writeln!(f, "value {i}: undecided")?,
            }
        }
        Ok(())
    }
}

fn bool_value_cfg(search: &SearchConfig) -> BoolValueConfig {
    BoolValueConfig { search: search.clone(), ..BoolValueConfig::default() }
}

/// Evaluates a reduced form at adele arguments for its free variables.
pub fn eval_reduced(r: &ReducedForm, args: &BTreeMap<String, FiniteAdele>, search: &SearchConfig) -> Result<Evaluation, FvError> {
    eval_reduced_with(r, args, &bool_value_cfg(search))
}

pub fn eval_reduced_with(r: &ReducedForm, args: &BTreeMap<String, FiniteAdele>, cfg: &BoolValueConfig) -> Result<Evaluation, FvError> {
    let mut values = Vec::new();
    for l in &r.locals {
        values.push(match local_boolean_value(l, args, cfg) {
            Ok(v) => Some(v),
            Err(BoolValueError::MissingArgument(v)) => return Err(FvError::MissingArgument(v)),
            Err(_) => None,
        });
    }
    let truth = if values.iter().all(Option::is_some) {
        let env = BEnv::default().with_slots(values.iter().map(|v| v.clone().expect("checked")).collect());
        ba_eval(&r.theta, &env).map_err(|e| FvError::Unsupported(e.to_string()))?
    } else {
        Truth::Indeterminate
    };
    Ok(Evaluation { truth, values })
}

/// Decides a sentence in the product or in the adeles.
pub fn decide_sentence(phi: &Formula, structure: Structure, search: &SearchConfig) -> Result<(ReducedForm, Evaluation), FvError> {
    let free = phi.free_vars();
    if !free.is_empty() {
        return Err(FvError::NotClosed(free.keys().cloned().collect::<Vec<_>>().join(", ")));
    }
    let guard = structure.guard();
    let cfg = ReduceConfig { fold: Some(search.clone()), ..ReduceConfig::default() };
    let r = fv_reduce_with(phi, guard.as_ref(), &cfg)?;
    let e = eval_reduced(&r, &BTreeMap::new(), search)?;
    Ok((r, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_fields::{eval_at_prime, rat};
    use crate::logic_core::{parse_formula, Signature};
    use crate::primes::Prime;

    fn ring(text: &str) -> Formula {
        parse_formula(text, &Signature::ring()).unwrap()
    }

    fn decide(text: &str, s: Structure) -> Truth {
        decide_sentence(&ring(text), s, &SearchConfig::default()).unwrap().1.truth
    }

    #[test]
    fn atoms_reduce_to_slot_equations() {
        let r = fv_reduce(&ring("(V x)"), None).unwrap();
        assert_eq!(r.theta, Formula::beq(BTerm::Slot(0), BTerm::One));
        assert_eq!(r.locals, vec![ring("(V x)")]);
    }

    #[test]
    fn trivial_witness() {
        let r = fv_reduce(&ring("(exists (x field) (= x 0))"), None).unwrap();
        assert!(r.theta.is_quantifier_free());
        assert_eq!(decide("(exists (x field) (= x 0))", Structure::Product), Truth::True);
    }

    #[test]
    fn idempotent_sentence() {
        let text = "(exists (e field) (and (= (* e e) e) (not (= e 0)) (not (= e 1))))";
        for s in [Structure::Product, Structure::Adeles] {
            assert_eq!(decide(text, s), Truth::True);
        }
        let local = ring(text);
        for p in [2u64, 3, 5, 7, 11, 13] {
            assert_eq!(eval_at_prime(&local, Prime::new(p).unwrap(), &BTreeMap::new(), &SearchConfig::default()).unwrap(), Truth::False);
        }
    }

    #[test]
    fn square_root_of_minus_one() {
        assert_eq!(decide("(exists (x field) (= (* x x) -1))", Structure::Adeles), Truth::False);
        assert_eq!(decide("(exists (x field) (= (* x x) -1))", Structure::Product), Truth::False);
    }

    #[test]
    fn restrictedness_is_seen() {
        let text = "(forall (x field) (fin (bv-of (not (V x)))))";
        assert_eq!(decide(text, Structure::Adeles), Truth::True);
        assert_eq!(decide(text, Structure::Product), Truth::False);
    }

    #[test]
    fn reduced_evaluation() {
        let cfg = SearchConfig::default();
        let arg = |q| BTreeMap::from([("x".to_string(), FiniteAdele::diagonal(q))]);
        let r = fv_reduce(&ring("(V x)"), None).unwrap();
        assert_eq!(eval_reduced(&r, &arg(rat(2, 1)), &cfg).unwrap().truth, Truth::True);
        let r = fv_reduce(&ring("(fin (bv-of (not (V x))))"), None).unwrap();
        assert_eq!(eval_reduced(&r, &arg(rat(1, 6)), &cfg).unwrap().truth, Truth::True);
        let e23 = FiniteAdele::idempotent(&PrimeSet::finite([2, 3]).unwrap()).unwrap();
        let r = fv_reduce(&ring("(cj 3 (bv-of (= x 0)))"), None).unwrap();
        let args = BTreeMap::from([("x".to_string(), e23)]);
        assert_eq!(eval_reduced(&r, &args, &cfg).unwrap().truth, Truth::True);
        assert!(matches!(eval_reduced(&r, &BTreeMap::new(), &cfg), Err(FvError::MissingArgument(_))));
    }

    #[test]
    fn locals_are_deduplicated() {
        let r = fv_reduce(&ring("(and (V x) (or (V x) (= x 0)) (fin (bv-of (V x))))"), None).unwrap();
        assert_eq!(r.locals.len(), 2);
    }

    #[test]
    fn split_cap_is_an_error() {
        let f = ring("(exists (x field) (and (= x 0) (= x 1) (= x 2) (= x 3) (= x 4) (= x 5)))");
        assert!(matches!(fv_reduce(&f, None), Err(FvError::TooManyLocals { .. })));
    }

    #[test]
    fn alternation_beyond_the_local_evaluator_exceeds_the_key_cap() {
        let f = ring("(exists (x field) (forall (y field) (= (* x y) y)))");
        let err = decide_sentence(&f, Structure::Adeles, &SearchConfig::default()).unwrap_err();
        assert!(matches!(err, FvError::Qe(QeError::TooManyKeys(_))), "{err}");
    }

    #[test]
    fn open_sentences_are_rejected() {
        assert!(matches!(decide_sentence(&ring("(V x)"), Structure::Product, &SearchConfig::default()), Err(FvError::NotClosed(_))));
    }
}
