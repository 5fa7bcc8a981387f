//! Localization of a reduced form at one prime.
//!
//! Parameters `a` are fixed adeles; the remaining variables `x` range over
//! tuples supported at `p`, embedded as `x^(p) = b` and `x^(q) = 0` elsewhere.
//! Off `p` the Boolean value of each local is `B_i = [[psi_i(0, a)]]`, and at
//! `p` it is decided by `psi_i(b, a(p))` in `Q_p`. So the localized formula is
//! the disjunction, over the membership patterns of `p` that make `theta`
//! true, of the matching signed conjunction of the `psi_i(x, a(p))`.

use super::{FvError, ReducedForm};
use crate::boolean_engine::{ba_eval, BEnv, PrimeSet, Truth};
use crate::local_fields::{eval_at_prime, SearchConfig};
use crate::logic_core::{substitute, Formula, Rational, Term};
use crate::primes::Prime;
use crate::restricted_products::{local_boolean_value, BoolValueConfig, FiniteAdele};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Largest number of locals depending on the localized variables.
const MAX_VARYING: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Localized {
    pub p: Prime,
    /// The variables left free, in order.
    pub vars: Vec<String>,
    pub formula: Formula,
}

impl Localized {
    /// The constant value when the formula does not depend on the variables.
    pub fn constant(&self) -> Option<bool> {
        match self.formula {
            Formula::True => Some(true),
            Formula::False => Some(false),
            _ => None,
        }
    }

    pub fn eval(&self, point: &BTreeMap<String, Rational>, search: &SearchConfig) -> Result<Truth, FvError> {
        eval_at_prime(&self.formula, self.p, point, search).map_err(|e| FvError::Local(e.to_string()))
    }
}

impl fmt::Display for Localized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {} over ({}): {}", self.p, self.vars.join(", "), self.formula)
    }
}

fn set_membership(s: &PrimeSet, p: u64, member: bool) -> PrimeSet {
    if s.contains(p) == member {
        return s.clone();
    }
    let single = PrimeSet::finite([p]).expect("prime");
    if member { s.join(&single) } else { s.difference(&single) }
}

pub fn localize(nf: &ReducedForm, p: Prime, params: &BTreeMap<String, FiniteAdele>, search: &SearchConfig) -> Result<Localized, FvError> {
    let mut vars = BTreeSet::new();
    for l in &nf.locals {
        vars.extend(l.free_vars().into_keys().filter(|v| !params.contains_key(v)));
    }
    let mut at_zero = params.clone();
    for v in &vars {
        at_zero.insert(v.clone(), FiniteAdele::zero());
    }
    let cfg = BoolValueConfig { search: search.clone(), ..BoolValueConfig::default() };
    let numerals: HashMap<String, Term> = params.iter().map(|(k, a)| (k.clone(), Term::num(a.at(p.get()).clone(), "field"))).collect();
    let mut base = Vec::new();
    let mut local_at_p = Vec::new();
    let mut varying = Vec::new();
    for (i, l) in nf.locals.iter().enumerate() {
        let b = local_boolean_value(l, &at_zero, &cfg).map_err(|e| FvError::Local(e.to_string()))?;
        if !b.is_classified() {
            return Err(FvError::FrontierParameter(l.to_string()));
        }
        base.push(b);
        local_at_p.push(substitute(l, &numerals).map_err(|e| FvError::Unsupported(e.to_string()))?);
        if vars.iter().any(|v| l.free_vars().contains_key(v)) {
            varying.push(i);
        }
    }
    if varying.len() > MAX_VARYING {
        return Err(FvError::TooManyLocals { x: "localized variables".into(), count: varying.len(), cap: MAX_VARYING });
    }
    let mut disjuncts = Vec::new();
    let patterns = 1usize << varying.len();
    for t in 0..patterns {
        let mut slots = base.clone();
        for (j, &i) in varying.iter().enumerate() {
            slots[i] = set_membership(&base[i], p.get(), t >> j & 1 == 1);
        }
        match ba_eval(&nf.theta, &BEnv::default().with_slots(slots)).map_err(|e| FvError::Unsupported(e.to_string()))? {
            Truth::True => disjuncts.push(Formula::and(varying.iter().enumerate().map(|(j, &i)| {
                if t >> j & 1 == 1 { local_at_p[i].clone() } else { Formula::negate(local_at_p[i].clone()) }
            }))),
            Truth::False => {}
            Truth::Indeterminate => return Err(FvError::FrontierParameter(nf.theta.to_string())),
        }
    }
    let formula = if disjuncts.len() == patterns {
        Formula::True
    } else if disjuncts.is_empty() {
        Formula::False
    } else {
        Formula::or(disjuncts)
    };
    Ok(Localized { p, vars: vars.into_iter().collect(), formula })
}

/// Normal forms in `x` with parameters `a` and `b` used by
/// [`check_localization`].
pub const LOCALIZATION_FORMS: [&str; 10] = [
    "(fin (bv-of (= x 0)))",
    "(cj 1 (bv-of (not (= x 0))))",
    "(cj 2 (bv-of (V (* x a))))",
    "(fin (bv-of (not (V x))))",
    "(fin (meet (bv-of (not (V x))) (bv-of (= a 0))))",
    "(and (cj 3 (bv-of (= (* x a) 1))) (not (fin (bv-of (V (+ x a))))))",
    "(le (bv-of (= x 0)) (bv-of (V (* x b))))",
    "(cj 1 (bv-of (exists (y field) (= (* y y) x))))",
    "(or (fin (bv-of (= (+ x b) 0))) (cj 2 (bv-of (not (V (- x a))))))",
    "(not (cj 1 (meet (bv-of (= (* x x) x)) (bv-of (not (= x 0))))))",
];

/// The parameters of [`LOCALIZATION_FORMS`].
pub fn localization_params() -> BTreeMap<String, FiniteAdele> {
    let q = |n: i64, d: i64| Rational::new(n.into(), d.into());
    BTreeMap::from([
        ("a".to_string(), FiniteAdele::new(q(1, 3), [(7, q(2, 1))]).expect("valid")),
        ("b".to_string(), FiniteAdele::new(q(5, 1), [(2, q(1, 2))]).expect("valid")),
    ])
}

const LOCALIZATION_PRIMES: [u64; 7] = [2, 3, 5, 7, 11, 13, 17];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalizeRow {
    pub form: String,
    pub points: usize,
    pub disagreements: usize,
    pub undecided: usize,
    pub counterexamples: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalizeReport {
    pub seed: u64,
    pub rows: Vec<LocalizeRow>,
}

impl LocalizeReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.disagreements == 0 && r.undecided == 0)
    }
}

impl fmt::Display for LocalizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(
                f,
                "form: {} points={} disagreements={} undecided={} seed={} status={}",
                r.form,
                r.points,
                r.disagreements,
                r.undecided,
                self.seed,
                if r.disagreements == 0 && r.undecided == 0 { "pass" } else { "FAIL" }
            )?;
            for c in &r.counterexamples {
                writeln!(f, "  counterexample: {c}")?;
            }
        }
        Ok(())
    }
}

/// For each normal form, samples a prime and a point `b` of `Q_p`, and
/// compares the localized formula at `b` with the reduced form evaluated at
/// the adele equal to `b` at `p` and 0 elsewhere.
pub fn check_localization(points: usize, seed: u64, search: &SearchConfig, exec: crate::par::Exec) -> Result<LocalizeReport, FvError> {
    use crate::logic_core::{parse_formula, Signature};
    use rand::Rng;
    let params = localization_params();
    let forms = LOCALIZATION_FORMS
        .iter()
        .map(|t| {
            let phi = parse_formula(t, &Signature::ring()).map_err(|e| FvError::Unsupported(e.to_string()))?;
            super::fv_reduce(&phi, None)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let localized = LOCALIZATION_PRIMES
        .iter()
        .map(|&q| forms.iter().map(|nf| localize(nf, Prime::new(q).expect("prime"), &params, search)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(usize, usize)> = (0..forms.len()).flat_map(|i| (0..points).map(move |j| (i, j))).collect();
    let outcomes = exec.map(&cells, |&(i, j)| {
        let mut rng = crate::sweeps::item_rng(seed, (i * points + j) as u64);
        let k = rng.gen_range(0..LOCALIZATION_PRIMES.len());
        let q = LOCALIZATION_PRIMES[k];
        let b = if rng.gen_bool(0.15) { Rational::from_integer(0.into()) } else { crate::sweeps::random_rational(&mut rng, 20) * Rational::from_integer(q.into()).pow(rng.gen_range(-2..=2)) };
        let mut args = params.clone();
        args.insert("x".into(), FiniteAdele::new(Rational::from_integer(0.into()), [(q, b.clone())]).expect("valid"));
        let direct = super::eval_reduced(&forms[i], &args, search).map(|e| e.truth);
        let local = localized[k][i].eval(&BTreeMap::from([("x".to_string(), b.clone())]), search);
        (q, b, direct, local)
    });
    let mut rows: Vec<LocalizeRow> =
        LOCALIZATION_FORMS.iter().map(|t| LocalizeRow { form: t.to_string(), points, disagreements: 0, undecided: 0, counterexamples: Vec::new() }).collect();
    for (&(i, _), (q, b, direct, local)) in cells.iter().zip(outcomes) {
        let row = &mut rows[i];
        match (direct, local) {
            (Ok(d), Ok(l)) if d == l && d != Truth::Indeterminate => {}
            (Ok(Truth::Indeterminate), _) | (_, Ok(Truth::Indeterminate)) | (Err(_), _) | (_, Err(_)) => row.undecided += 1,
            (Ok(d), Ok(l)) => {
                row.disagreements += 1;
                if row.counterexamples.len() < 5 {
                    row.counterexamples.push(format!("p={q} x={b} reduced={d:?} localized={l:?}"));
                }
            }
        }
    }
    Ok(LocalizeReport { seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv_transform::{eval_reduced, fv_reduce};
    use crate::local_fields::rat;
    use crate::logic_core::{parse_formula, Signature};

    fn nf(text: &str) -> ReducedForm {
        fv_reduce(&parse_formula(text, &Signature::ring()).unwrap(), None).unwrap()
    }

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn localization_sweep_agrees() {
        let r = check_localization(20, 3, &SearchConfig::default(), crate::par::Exec::Parallel).unwrap();
        assert!(r.passed(), "{r}");
        let s = check_localization(20, 3, &SearchConfig::default(), crate::par::Exec::Sequential).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn finiteness_of_zero_set_is_constant_false() {
        let l = localize(&nf("(fin (bv-of (= x 0)))"), p(5), &BTreeMap::new(), &SearchConfig::default()).unwrap();
        assert_eq!(l.constant(), Some(false));
    }

    #[test]
    fn single_support_gives_the_local_formula() {
        let l = localize(&nf("(cj 1 (bv-of (not (= x 0))))"), p(5), &BTreeMap::new(), &SearchConfig::default()).unwrap();
        let cfg = SearchConfig::default();
        for (b, want) in [(rat(0, 1), Truth::False), (rat(3, 1), Truth::True), (rat(1, 5), Truth::True)] {
            assert_eq!(l.eval(&BTreeMap::from([("x".to_string(), b)]), &cfg).unwrap(), want);
        }
    }

    #[test]
    fn agrees_with_embedded_points() {
        let cfg = SearchConfig::default();
        let a = FiniteAdele::new(rat(1, 3), [(7, rat(2, 1))]).unwrap();
        let params = BTreeMap::from([("a".to_string(), a)]);
        let form = nf("(cj 2 (bv-of (V (* x a))))");
        for q in [3u64, 7, 11] {
            let l = localize(&form, p(q), &params, &cfg).unwrap();
            for b in [rat(0, 1), rat(1, 1), rat(1, 3), rat(3, 1), rat(1, 7), rat(9, 2)] {
                let mut args = params.clone();
                args.insert("x".into(), FiniteAdele::new(rat(0, 1), [(q, b.clone())]).unwrap());
                let direct = eval_reduced(&form, &args, &cfg).unwrap().truth;
                let local = l.eval(&BTreeMap::from([("x".to_string(), b)]), &cfg).unwrap();
                assert_eq!(direct, local, "p={q}");
            }
        }
    }
}
