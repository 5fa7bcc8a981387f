use super::{BTerm, Formula, Sort, SortError, Term};
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error("no guard given for quantified sort `{0}`")]
    MissingGuard(Sort),
}

/// A one-variable formula used to relativize quantifiers of one sort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guard {
    pub var: String,
    pub formula: Formula,
}

/// Capture-avoiding substitution of terms for free variables.
///
/// Bound variables that would capture a variable of a substituted term are
/// renamed by appending primes.
pub fn substitute(f: &Formula, bindings: &HashMap<String, Term>) -> Result<Formula, SubstError> {
    let fv = f.free_vars();
    for (name, t) in bindings {
        if let Some(srt) = fv.get(name) {
            if srt != t.sort() {
                return Err(SortError { term: format!("{name} := {t}"), expected: srt.clone(), found: t.sort().clone() }.into());
            }
        }
    }
    let mut avoid = BTreeSet::new();
    for t in bindings.values() {
        let mut m = BTreeMap::new();
        t.free_vars_into(&mut m);
        avoid.extend(m.into_keys());
    }
    Ok(subst_rec(f, bindings, &avoid))
}

fn subst_term(t: &Term, b: &HashMap<String, Term>) -> Term {
    match t {
        Term::Var { name, .. } => b.get(name).cloned().unwrap_or_else(|| t.clone()),
        Term::App { func, args, sort } => Term::App { func: func.clone(), args: args.iter().map(|a| subst_term(a, b)).collect(), sort: sort.clone() },
        other => other.clone(),
    }
}

fn subst_bterm(t: &BTerm, b: &HashMap<String, Term>, avoid: &BTreeSet<String>) -> BTerm {
    match t {
        BTerm::ValueOf(phi) => BTerm::ValueOf(Box::new(subst_rec(phi, b, avoid))),
        BTerm::Meet(x, y) => BTerm::meet(subst_bterm(x, b, avoid), subst_bterm(y, b, avoid)),
        BTerm::Join(x, y) => BTerm::join(subst_bterm(x, b, avoid), subst_bterm(y, b, avoid)),
        BTerm::Compl(x) => BTerm::not(subst_bterm(x, b, avoid)),
        other => other.clone(),
    }
}

fn subst_rec(f: &Formula, b: &HashMap<String, Term>, avoid: &BTreeSet<String>) -> Formula {
    if b.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Atom { rel, index, args } => Formula::Atom { rel: rel.clone(), index: *index, args: args.iter().map(|t| subst_term(t, b)).collect() },
        Formula::Eq(x, y) => Formula::Eq(subst_term(x, b), subst_term(y, b)),
        Formula::Bool(a) => Formula::Bool(a.map_terms(&mut |t| subst_bterm(t, b, avoid))),
        Formula::Not(g) => Formula::not(subst_rec(g, b, avoid)),
        Formula::And(xs) => Formula::And(xs.iter().map(|g| subst_rec(g, b, avoid)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|g| subst_rec(g, b, avoid)).collect()),
        Formula::Implies(x, y) => Formula::implies(subst_rec(x, b, avoid), subst_rec(y, b, avoid)),
        Formula::Exists(v, srt, body) | Formula::Forall(v, srt, body) => {
            let mut inner = b.clone();
            inner.remove(v);
            let body_free = body.free_vars();
            let live: HashMap<String, Term> = inner.into_iter().filter(|(k, _)| body_free.contains_key(k)).collect();
            let (name, body) = if avoid.contains(v) && !live.is_empty() {
                let mut taken: BTreeSet<String> = avoid.clone();
                taken.extend(body_free.keys().cloned());
                let mut n = format!("{v}'");
                while taken.contains(&n) {
                    n.push('\'');
                }
                let mut renamed = live.clone();
                renamed.insert(v.clone(), Term::Var { name: n.clone(), sort: srt.clone() });
                (n, subst_rec(body, &renamed, avoid))
            } else {
                (v.clone(), subst_rec(body, &live, avoid))
            };
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(name, srt.clone(), Box::new(body))
            } else {
                Formula::Forall(name, srt.clone(), Box::new(body))
            }
        }
        other => other.clone(),
    }
}

/// Relativizes every quantifier to the guard of its sort: `exists y. B`
/// becomes `exists y. (G(y) and B)` and `forall y. B` becomes
/// `forall y. (G(y) implies B)`. Quantifier-free parts are unchanged.
pub fn relativize(f: &Formula, guards: &HashMap<Sort, Guard>) -> Result<Formula, SubstError> {
    Ok(match f {
        Formula::Not(g) => Formula::not(relativize(g, guards)?),
        Formula::And(xs) => Formula::And(xs.iter().map(|g| relativize(g, guards)).collect::<Result<_, _>>()?),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|g| relativize(g, guards)).collect::<Result<_, _>>()?),
        Formula::Implies(a, b) => Formula::implies(relativize(a, guards)?, relativize(b, guards)?),
        Formula::Exists(v, srt, body) | Formula::Forall(v, srt, body) => {
            let guard = guards.get(srt).ok_or_else(|| SubstError::MissingGuard(srt.clone()))?;
            let mut b = HashMap::new();
            b.insert(guard.var.clone(), Term::Var { name: v.clone(), sort: srt.clone() });
            let g = substitute(&guard.formula, &b)?;
            let inner = relativize(body, guards)?;
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(v.clone(), srt.clone(), Box::new(Formula::And(vec![g, inner])))
            } else {
                Formula::Forall(v.clone(), srt.clone(), Box::new(Formula::implies(g, inner)))
            }
        }
        other => other.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula, Signature};
    use super::*;

    fn ring(text: &str) -> Formula {
        parse_formula(text, &Signature::ring()).unwrap()
    }

    fn bind(pairs: &[(&str, &str)]) -> HashMap<String, Term> {
        pairs
            .iter()
            .map(|(v, t)| {
                let probe = ring(&format!("(= probe {t})"));
                let Formula::Eq(_, term) = probe else { unreachable!() };
                (v.to_string(), term)
            })
            .collect()
    }

    #[test]
    fn substitutes_constants() {
        let f = substitute(&ring("(= x 0)"), &bind(&[("x", "1")])).unwrap();
        assert_eq!(f.to_string(), "(= 1 0)");
        let g = substitute(&ring("(V x)"), &bind(&[("x", "(+ y 1)")])).unwrap();
        assert_eq!(g.to_string(), "(V (+ y 1))");
    }

    #[test]
    fn avoids_capture() {
        let f = substitute(&ring("(exists (x field) (= x y))"), &bind(&[("y", "x")])).unwrap();
        assert_eq!(f.to_string(), "(exists (x' field) (= x' x))");
    }

    #[test]
    fn sort_mismatch_is_reported() {
        let f = ring("(= x 0)");
        let mut b = HashMap::new();
        b.insert("x".to_string(), Term::var("h", "hyper"));
        assert!(matches!(substitute(&f, &b), Err(SubstError::Sort(_))));
    }

    #[test]
    fn relativizes_both_quantifiers() {
        let guard = Guard { var: "y".into(), formula: ring("(fin (bv-of (not (V y))))") };
        let mut g = HashMap::new();
        g.insert("field".to_string(), guard);
        let f = relativize(&ring("(exists (y field) (= y 0))"), &g).unwrap();
        assert_eq!(f.to_string(), "(exists (y field) (and (fin (bv-of (not (V y)))) (= y 0)))");
        let h = relativize(&ring("(forall (y field) (V y))"), &g).unwrap();
        assert_eq!(h.to_string(), "(forall (y field) (implies (fin (bv-of (not (V y)))) (V y)))");
        let qf = ring("(and (V x) (= x 1))");
        assert_eq!(relativize(&qf, &g).unwrap(), qf);
        assert!(matches!(relativize(&ring("(exists (y field) (V y))"), &HashMap::new()), Err(SubstError::MissingGuard(_))));
    }
}
