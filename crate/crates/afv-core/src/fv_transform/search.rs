//! Direct evaluation in the product and bounded witness search, independent
//! of the reduction.
//!
//! A quantifier-free formula holds at a tuple of the product when each atom
//! is read as "its Boolean value is every prime". The candidates are
//! eventually constant families: a rational default with at most one
//! exceptional coordinate. They lie in the finite adeles, so a witness found
//! here is a witness in both structures.

use super::FvError;
use crate::boolean_engine::{eval_batom, BEnv, PrimeSet, Truth};
use crate::local_fields::{rat, rationals_by_height, SearchConfig};
use crate::logic_core::{BTerm, Formula, Rational, Sort};
use crate::par::Exec;
use crate::restricted_products::{boolean_value, BoolValueConfig, FiniteAdele};
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct SearchBounds {
    /// Height bound on defaults for a single variable.
    pub height: u64,
    /// Height bound on defaults when several variables are searched.
    pub joint_height: u64,
    pub exception_primes: Vec<u64>,
    pub exception_values: Vec<Rational>,
    /// Exception values used when several variables are searched.
    pub joint_exception_values: Vec<Rational>,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            height: 10,
            joint_height: 2,
            exception_primes: vec![2, 3, 5, 7, 11, 13],
            exception_values: vec![rat(0, 1), rat(1, 1), rat(-1, 1), rat(2, 1), rat(1, 2)],
            joint_exception_values: vec![rat(0, 1), rat(1, 1)],
        }
    }
}

impl SearchBounds {
    fn candidates(&self, arity: usize) -> Vec<FiniteAdele> {
        let (h, vals) = if arity <= 1 { (self.height, &self.exception_values) } else { (self.joint_height, &self.joint_exception_values) };
        let mut out = Vec::new();
        for d in rationals_by_height(h) {
            out.push(FiniteAdele::diagonal(d.clone()));
            for &p in &self.exception_primes {
                for v in vals {
                    if *v != d {
                        out.push(FiniteAdele::new(d.clone(), [(p, v.clone())]).expect("valid exception"));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    /// An existential witness or universal counterexample was found.
    Decided { truth: bool, witness: BTreeMap<String, String> },
    /// Nothing was found within the bounds.
    Inconclusive { tried: usize },
}

/// Truth of a quantifier-free formula at an adele tuple of the product.
pub fn eval_product_qf(phi: &Formula, args: &BTreeMap<String, FiniteAdele>, search: &SearchConfig) -> Result<Truth, FvError> {
    let cfg = BoolValueConfig { search: search.clone(), ..BoolValueConfig::default() };
    let value = |f: &Formula| boolean_value(f, args, &cfg).map_err(|e| FvError::Local(e.to_string()));
    Ok(match phi {
        Formula::True => Truth::True,
        Formula::False => Truth::False,
        Formula::Atom { .. } | Formula::Eq(..) => value(phi)?.complement().is_empty(),
        Formula::Bool(a) => {
            let mut slots: Vec<PrimeSet> = Vec::new();
            let mut err = None;
            let mapped = a.map_terms(&mut |t| {
                t.map_leaves(&mut |leaf| match leaf {
                    BTerm::ValueOf(f) => match value(f) {
                        Ok(s) => {
                            slots.push(s);
                            BTerm::Slot(slots.len() - 1)
                        }
                        Err(e) => {
                            err = Some(e);
                            BTerm::Zero
                        }
                    },
                    other => other.clone(),
                })
            });
            if let Some(e) = err {
                return Err(e);
            }
            eval_batom(&mapped, &BEnv::default().with_slots(slots)).map_err(|e| FvError::Unsupported(e.to_string()))?
        }
        Formula::Not(f) => eval_product_qf(f, args, search)?.not(),
        Formula::And(xs) => {
            let mut t = Truth::True;
            for x in xs {
                t = t.and(eval_product_qf(x, args, search)?);
            }
            t
        }
        Formula::Or(xs) => {
            let mut t = Truth::False;
            for x in xs {
                t = t.or(eval_product_qf(x, args, search)?);
            }
            t
        }
        Formula::Implies(a, b) => eval_product_qf(a, args, search)?.not().or(eval_product_qf(b, args, search)?),
        Formula::Exists(..) | Formula::Forall(..) => return Err(FvError::Unsupported(format!("quantifier in {phi}"))),
    })
}

/// Searches for a witness of a prenex existential sentence or a
/// counterexample to a prenex universal one.
pub fn witness_search(phi: &Formula, bounds: &SearchBounds, search: &SearchConfig, exec: Exec) -> Result<SearchOutcome, FvError> {
    let (existential, vars, body) = prenex_block(phi)?;
    let cands = bounds.candidates(vars.len());
    let mut tuples: Vec<Vec<usize>> = vec![vec![]];
    for _ in &vars {
        tuples = tuples.into_iter().flat_map(|t| (0..cands.len()).map(move |i| [t.clone(), vec![i]].concat())).collect();
    }
    let target = if existential { Truth::True } else { Truth::False };
    let hits = exec.map(&tuples, |t| {
        let args: BTreeMap<String, FiniteAdele> = vars.iter().zip(t).map(|((v, _), &i)| (v.clone(), cands[i].clone())).collect();
        matches!(eval_product_qf(&body, &args, search), Ok(x) if x == target)
    });
    Ok(match hits.iter().position(|&h| h) {
        Some(i) => SearchOutcome::Decided {
            truth: existential,
            witness: vars.iter().zip(&tuples[i]).map(|((v, _), &j)| (v.clone(), cands[j].to_string())).collect(),
        },
        None => SearchOutcome::Inconclusive { tried: tuples.len() },
    })
}

/// Whether the block is existential, its variables, and the matrix.
type Block = (bool, Vec<(String, Sort)>, Formula);

fn prenex_block(phi: &Formula) -> Result<Block, FvError> {
    let existential = match phi {
        Formula::Exists(..) => true,
        Formula::Forall(..) => false,
        _ => return Err(FvError::Unsupported("witness search needs a leading quantifier".into())),
    };
    let mut vars = Vec::new();
    let mut cur = phi;
    while let (Formula::Exists(v, s, b), true) | (Formula::Forall(v, s, b), false) = (cur, existential) {
        if s.as_str() != "field" {
            return Err(FvError::Unsupported(format!("witness search over sort {s}")));
        }
        vars.push((v.clone(), s.clone()));
        cur = b;
    }
    if !cur.is_quantifier_free() {
        return Err(FvError::Unsupported("witness search needs a single quantifier block".into()));
    }
    if vars.len() > 2 {
        return Err(FvError::Unsupported("witness search over more than two variables".into()));
    }
    Ok((existential, vars, cur.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic_core::{parse_formula, Signature};

    fn run(text: &str) -> SearchOutcome {
        let f = parse_formula(text, &Signature::ring()).unwrap();
        witness_search(&f, &SearchBounds::default(), &SearchConfig::default(), Exec::Parallel).unwrap()
    }

    #[test]
    fn finds_a_nontrivial_idempotent() {
        match run("(exists (e field) (and (= (* e e) e) (not (= e 0)) (not (= e 1))))") {
            SearchOutcome::Decided { truth, .. } => assert!(truth),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finds_a_nonintegral_element() {
        assert!(matches!(run("(forall (x field) (V x))"), SearchOutcome::Decided { truth: false, .. }));
    }

    #[test]
    fn square_roots_of_minus_one_are_not_found() {
        assert!(matches!(run("(exists (x field) (= (* x x) -1))"), SearchOutcome::Inconclusive { .. }));
    }

    #[test]
    fn mixed_prefixes_are_rejected() {
        let f = parse_formula("(exists (x field) (forall (y field) (= (* x y) y)))", &Signature::ring()).unwrap();
        assert!(witness_search(&f, &SearchBounds::default(), &SearchConfig::default(), Exec::Sequential).is_err());
    }
}
