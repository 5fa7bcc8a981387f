//! S-expression reader.
//!
//! ```text
//! formula := '(' head args ')' | var | const
//! head    := and | or | not | implies | = | exists | forall | fin | cj | le | bv | bv-of | relation | function
//! binder  := '(' var sort ')'
//! ```
//!
//! Boolean terms use `0 1 meet join compl`, slots `(bv i)` and Boolean values
//! `(bv-of phi)`. The sort of an equation is inferred from its arguments;
//! free variables whose sort is not forced take the signature's default sort.
//! Bound variables that would shadow a free or enclosing bound variable are
//! renamed with trailing primes.

use super::{BAtom, BTerm, Formula, Signature, Sort, SortError, Term, BOOL};
use num_rational::BigRational;
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    Syntax { pos: usize, expected: String, found: String },
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { name: String, pos: usize },
}

#[derive(Clone, Debug)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn pos(&self) -> usize {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn describe(&self) -> String {
        match self {
            Sexp::Atom(a, _) => format!("`{a}`"),
            Sexp::List(xs, _) => match xs.first() {
                Some(Sexp::Atom(h, _)) => format!("list headed by `{h}`"),
                _ => "list".to_string(),
            },
        }
    }

    fn text(&self) -> String {
        match self {
            Sexp::Atom(a, _) => a.clone(),
            Sexp::List(xs, _) => format!("({})", xs.iter().map(Sexp::text).collect::<Vec<_>>().join(" ")),
        }
    }
}

fn syntax(pos: usize, expected: &str, found: &str) -> ParseError {
    ParseError::Syntax { pos, expected: expected.to_string(), found: found.to_string() }
}

fn tokenize(text: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if !cur.is_empty() {
                out.push((std::mem::take(&mut cur), start));
            }
            if !c.is_whitespace() {
                out.push((c.to_string(), i));
            }
        } else {
            if cur.is_empty() {
                start = i;
            }
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push((cur, start));
    }
    out
}

fn read(tokens: &[(String, usize)], i: &mut usize, end: usize) -> Result<Sexp, ParseError> {
    let Some((tok, pos)) = tokens.get(*i) else {
        return Err(syntax(end, "expression", "end of input"));
    };
    *i += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*i) {
                    None => return Err(syntax(end, "`)`", "end of input")),
                    Some((t, _)) if t == ")" => {
                        *i += 1;
                        return Ok(Sexp::List(items, *pos));
                    }
                    _ => items.push(read(tokens, i, end)?),
                }
            }
        }
        ")" => Err(syntax(*pos, "expression", "`)`")),
        _ => Ok(Sexp::Atom(tok.clone(), *pos)),
    }
}

fn numeral(tok: &str) -> Option<BigRational> {
    let body = tok.strip_prefix('-').unwrap_or(tok);
    let ok = !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '/')
        && body.chars().next().is_some_and(|c| c.is_ascii_digit())
        && body.matches('/').count() <= 1
        && !body.ends_with('/');
    if !ok {
        return None;
    }
    let r: BigRational = tok.parse().ok()?;
    Some(r)
}

struct Reader<'a> {
    sig: &'a Signature,
    bound: Vec<(String, Sort)>,
    free: BTreeMap<String, Sort>,
}

const FORMULA_HEADS: &[&str] = &["and", "or", "not", "implies", "=", "exists", "forall", "fin", "cj", "le", "true", "false"];

impl<'a> Reader<'a> {
    fn lookup(&self, name: &str) -> Option<Sort> {
        self.bound.iter().rev().find(|(n, _)| n == name).map(|(_, s)| s.clone()).or_else(|| self.free.get(name).cloned())
    }

    fn sort_mismatch(&self, e: &Sexp, expected: &str, found: &str) -> ParseError {
        ParseError::Sort(SortError { term: e.text(), expected: expected.to_string(), found: found.to_string() })
    }

    fn formula(&mut self, e: &Sexp) -> Result<Formula, ParseError> {
        match e {
            Sexp::Atom(a, p) => match a.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                _ => Err(syntax(*p, "formula", &e.describe())),
            },
            Sexp::List(items, p) => {
                let Some(Sexp::Atom(head, hp)) = items.first() else {
                    return Err(syntax(*p, "head symbol", "nested list"));
                };
                let args = &items[1..];
                let arity = |n: usize| -> Result<(), ParseError> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(syntax(*p, &format!("{n} argument(s) to `{head}`"), &format!("{}", args.len())))
                    }
                };
                match head.as_str() {
                    "and" | "or" => {
                        let parts = args.iter().map(|x| self.formula(x)).collect::<Result<Vec<_>, _>>()?;
                        Ok(if head == "and" { Formula::And(parts) } else { Formula::Or(parts) })
                    }
                    "not" => {
                        arity(1)?;
                        Ok(Formula::not(self.formula(&args[0])?))
                    }
                    "implies" => {
                        arity(2)?;
                        Ok(Formula::implies(self.formula(&args[0])?, self.formula(&args[1])?))
                    }
                    "exists" | "forall" => {
                        arity(2)?;
                        let (v, srt) = self.binder(&args[0])?;
                        self.bound.push((v.clone(), srt.clone()));
                        let body = self.formula(&args[1]);
                        self.bound.pop();
                        let body = Box::new(body?);
                        Ok(if head == "exists" { Formula::Exists(v, srt, body) } else { Formula::Forall(v, srt, body) })
                    }
                    "fin" => {
                        arity(1)?;
                        Ok(Formula::Bool(BAtom::Fin(self.bterm(&args[0])?)))
                    }
                    "cj" => {
                        arity(2)?;
                        let j = self.index(&args[0])?;
                        Ok(Formula::Bool(BAtom::Cj(j, self.bterm(&args[1])?)))
                    }
                    "le" => {
                        arity(2)?;
                        Ok(Formula::Bool(BAtom::Le(self.bterm(&args[0])?, self.bterm(&args[1])?)))
                    }
                    "=" => {
                        arity(2)?;
                        let srt = self
                            .infer(&args[0])
                            .or_else(|| self.infer(&args[1]))
                            .unwrap_or_else(|| self.sig.default_sort());
                        if srt == BOOL {
                            Ok(Formula::Bool(BAtom::Eq(self.bterm(&args[0])?, self.bterm(&args[1])?)))
                        } else {
                            Ok(Formula::Eq(self.term(&args[0], Some(&srt))?, self.term(&args[1], Some(&srt))?))
                        }
                    }
                    _ => {
                        if let Some(decl) = self.sig.relation(head).cloned() {
                            let (index, rest) = if decl.indexed {
                                let Some(first) = args.first() else {
                                    return Err(syntax(*p, "index", "nothing"));
                                };
                                (Some(self.index(first)?), &args[1..])
                            } else {
                                (None, args)
                            };
                            if rest.len() != decl.args.len() {
                                return Err(syntax(*p, &format!("{} argument(s) to `{head}`", decl.args.len()), &rest.len().to_string()));
                            }
                            let terms = rest
                                .iter()
                                .zip(&decl.args)
                                .map(|(x, srt)| self.term(x, Some(srt)))
                                .collect::<Result<Vec<_>, _>>()?;
                            Ok(Formula::Atom { rel: head.clone(), index, args: terms })
                        } else if self.sig.function(head).is_some() || ["meet", "join", "compl", "bv", "bv-of"].contains(&head.as_str()) {
                            Err(syntax(*hp, "formula", &format!("term headed by `{head}`")))
                        } else {
                            Err(ParseError::UnknownSymbol { name: head.clone(), pos: *hp })
                        }
                    }
                }
            }
        }
    }

    fn binder(&self, e: &Sexp) -> Result<(String, Sort), ParseError> {
        match e {
            Sexp::List(xs, p) if xs.len() == 2 => match (&xs[0], &xs[1]) {
                (Sexp::Atom(v, _), Sexp::Atom(srt, sp)) => {
                    if !self.sig.has_sort(srt) {
                        return Err(ParseError::UnknownSymbol { name: srt.clone(), pos: *sp });
                    }
                    if numeral(v).is_some() || FORMULA_HEADS.contains(&v.as_str()) {
                        return Err(syntax(*p, "variable name", v));
                    }
                    Ok((v.clone(), srt.clone()))
                }
                _ => Err(syntax(*p, "(var sort)", &e.describe())),
            },
            _ => Err(syntax(e.pos(), "(var sort)", &e.describe())),
        }
    }

    fn index(&self, e: &Sexp) -> Result<u32, ParseError> {
        match e {
            Sexp::Atom(a, p) => match a.parse::<u32>() {
                Ok(j) if j >= 1 => Ok(j),
                _ => Err(syntax(*p, "positive integer", a)),
            },
            _ => Err(syntax(e.pos(), "positive integer", &e.describe())),
        }
    }

    /// Best-effort sort of an equation argument.
    fn infer(&self, e: &Sexp) -> Option<Sort> {
        match e {
            Sexp::Atom(a, _) => {
                if let Some(s) = self.lookup(a) {
                    return Some(s);
                }
                if numeral(a).is_some() {
                    return if self.sig.constant(a).is_some() || self.sig.numerals.is_some() { None } else { Some(BOOL.into()) };
                }
                self.sig.constant(a).cloned()
            }
            Sexp::List(xs, _) => {
                let Some(Sexp::Atom(h, _)) = xs.first() else { return None };
                match h.as_str() {
                    "compl" | "bv" | "bv-of" => Some(BOOL.into()),
                    "meet" | "join" => {
                        let from_args = xs[1..].iter().filter_map(|x| self.infer(x)).next();
                        match (self.sig.function(h), from_args) {
                            (_, Some(s)) => Some(s),
                            (Some(decl), None) => Some(decl.result.clone()),
                            (None, None) => Some(BOOL.into()),
                        }
                    }
                    _ => self.sig.function(h).map(|f| f.result.clone()),
                }
            }
        }
    }

    fn bind_free(&mut self, e: &Sexp, name: &str, srt: &Sort) -> Result<(), ParseError> {
        match self.free.get(name) {
            Some(prev) if prev != srt => Err(self.sort_mismatch(e, prev, srt)),
            _ => {
                self.free.insert(name.to_string(), srt.clone());
                Ok(())
            }
        }
    }

    fn term(&mut self, e: &Sexp, expected: Option<&Sort>) -> Result<Term, ParseError> {
        let check = |this: &Self, t: Term| -> Result<Term, ParseError> {
            match expected {
                Some(x) if t.sort() != x => Err(this.sort_mismatch(e, x, t.sort())),
                _ => Ok(t),
            }
        };
        match e {
            Sexp::Atom(a, p) => {
                if let Some(srt) = self.lookup(a) {
                    if self.bound.iter().all(|(n, _)| n != a) {
                        self.bind_free(e, a, &srt)?;
                    }
                    return check(self, Term::Var { name: a.clone(), sort: srt });
                }
                if let Some(srt) = self.sig.constant(a) {
                    return check(self, Term::Const { name: a.clone(), sort: srt.clone() });
                }
                if let Some(r) = numeral(a) {
                    return match &self.sig.numerals {
                        Some(srt) => check(self, Term::Num { value: r, sort: srt.clone() }),
                        None => Err(ParseError::UnknownSymbol { name: a.clone(), pos: *p }),
                    };
                }
                if FORMULA_HEADS.contains(&a.as_str()) || self.sig.function(a).is_some() || self.sig.relation(a).is_some() {
                    return Err(syntax(*p, "term", a));
                }
                let srt = expected.cloned().unwrap_or_else(|| self.sig.default_sort());
                if srt == BOOL {
                    return Err(self.sort_mismatch(e, "non-Boolean sort", BOOL));
                }
                self.bind_free(e, a, &srt)?;
                Ok(Term::Var { name: a.clone(), sort: srt })
            }
            Sexp::List(items, p) => {
                let Some(Sexp::Atom(head, hp)) = items.first() else {
                    return Err(syntax(*p, "function symbol", "nested list"));
                };
                if let Some(decl) = self.sig.function(head).cloned() {
                    let args = &items[1..];
                    if args.len() != decl.args.len() {
                        return Err(syntax(*p, &format!("{} argument(s) to `{head}`", decl.args.len()), &args.len().to_string()));
                    }
                    let terms = args.iter().zip(&decl.args).map(|(x, srt)| self.term(x, Some(srt))).collect::<Result<Vec<_>, _>>()?;
                    return check(self, Term::App { func: head.clone(), args: terms, sort: decl.result.clone() });
                }
                if ["fin", "cj", "le", "meet", "join", "compl", "bv", "bv-of"].contains(&head.as_str()) {
                    let expected = expected.cloned().unwrap_or_else(|| self.sig.default_sort());
                    return Err(self.sort_mismatch(e, &expected, BOOL));
                }
                if self.sig.relation(head).is_some() || FORMULA_HEADS.contains(&head.as_str()) {
                    return Err(syntax(*hp, "term", &format!("formula headed by `{head}`")));
                }
                Err(ParseError::UnknownSymbol { name: head.clone(), pos: *hp })
            }
        }
    }

    fn bterm(&mut self, e: &Sexp) -> Result<BTerm, ParseError> {
        match e {
            Sexp::Atom(a, p) => match a.as_str() {
                "0" => Ok(BTerm::Zero),
                "1" => Ok(BTerm::One),
                _ => {
                    if let Some(srt) = self.lookup(a) {
                        if srt != BOOL {
                            return Err(self.sort_mismatch(e, BOOL, &srt));
                        }
                        if self.bound.iter().all(|(n, _)| n != a) {
                            self.bind_free(e, a, &srt)?;
                        }
                        return Ok(BTerm::Var(a.clone()));
                    }
                    if let Some(srt) = self.sig.constant(a) {
                        return Err(self.sort_mismatch(e, BOOL, srt));
                    }
                    if numeral(a).is_some() || FORMULA_HEADS.contains(&a.as_str()) {
                        return Err(syntax(*p, "Boolean term", a));
                    }
                    self.bind_free(e, a, &BOOL.to_string())?;
                    Ok(BTerm::Var(a.clone()))
                }
            },
            Sexp::List(items, p) => {
                let Some(Sexp::Atom(head, hp)) = items.first() else {
                    return Err(syntax(*p, "Boolean operation", "nested list"));
                };
                let args = &items[1..];
                let arity = |n: usize| -> Result<(), ParseError> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(syntax(*p, &format!("{n} argument(s) to `{head}`"), &args.len().to_string()))
                    }
                };
                match head.as_str() {
                    "meet" | "join" => {
                        arity(2)?;
                        let a = self.bterm(&args[0])?;
                        let b = self.bterm(&args[1])?;
                        Ok(if head == "meet" { BTerm::meet(a, b) } else { BTerm::join(a, b) })
                    }
                    "compl" => {
                        arity(1)?;
                        Ok(BTerm::not(self.bterm(&args[0])?))
                    }
                    "bv" => {
                        arity(1)?;
                        match &args[0] {
                            Sexp::Atom(a, ap) => a.parse::<usize>().map(BTerm::Slot).map_err(|_| syntax(*ap, "slot index", a)),
                            other => Err(syntax(other.pos(), "slot index", &other.describe())),
                        }
                    }
                    "bv-of" => {
                        arity(1)?;
                        Ok(BTerm::value_of(self.formula(&args[0])?))
                    }
                    _ => {
                        if let Some(decl) = self.sig.function(head) {
                            Err(self.sort_mismatch(e, BOOL, &decl.result.clone()))
                        } else {
                            Err(ParseError::UnknownSymbol { name: head.clone(), pos: *hp })
                        }
                    }
                }
            }
        }
    }
}

/// Parses one formula in the s-expression grammar over `sig`.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(syntax(0, "formula", "empty input"));
    }
    let mut i = 0;
    let sexp = read(&tokens, &mut i, text.len())?;
    if let Some((t, p)) = tokens.get(i) {
        return Err(syntax(*p, "end of input", t));
    }
    let mut reader = Reader { sig, bound: Vec::new(), free: BTreeMap::new() };
    let f = reader.formula(&sexp)?;
    let free: BTreeSet<String> = reader.free.keys().cloned().collect();
    Ok(rename_shadowing(&f, &free))
}

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = format!("{base}'");
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

fn all_names(f: &Formula, out: &mut BTreeSet<String>) {
    out.extend(f.free_vars().into_keys());
    match f {
        Formula::Exists(v, _, b) | Formula::Forall(v, _, b) => {
            out.insert(v.clone());
            all_names(b, out);
        }
        Formula::Not(g) => all_names(g, out),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|g| all_names(g, out)),
        Formula::Implies(a, b) => {
            all_names(a, out);
            all_names(b, out);
        }
        _ => {}
    }
}

/// Renames binders that reuse a free variable name or an enclosing binder.
fn rename_shadowing(f: &Formula, free: &BTreeSet<String>) -> Formula {
    let mut taken = free.clone();
    all_names(f, &mut taken);
    let mut in_scope: Vec<String> = free.iter().cloned().collect();
    rename_rec(f, &mut in_scope, &mut taken, &HashMap::new())
}

fn rename_rec(f: &Formula, scope: &mut Vec<String>, taken: &mut BTreeSet<String>, map: &HashMap<String, String>) -> Formula {
    let term_map = |t: &Term| rename_term(t, map);
    match f {
        Formula::Atom { rel, index, args } => Formula::Atom { rel: rel.clone(), index: *index, args: args.iter().map(term_map).collect() },
        Formula::Eq(a, b) => Formula::Eq(term_map(a), term_map(b)),
        Formula::Bool(a) => Formula::Bool(a.map_terms(&mut |t| rename_bterm(t, scope, taken, map))),
        Formula::Not(g) => Formula::not(rename_rec(g, scope, taken, map)),
        Formula::And(xs) => Formula::And(xs.iter().map(|g| rename_rec(g, scope, taken, map)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|g| rename_rec(g, scope, taken, map)).collect()),
        Formula::Implies(a, b) => Formula::implies(rename_rec(a, scope, taken, map), rename_rec(b, scope, taken, map)),
        Formula::Exists(v, srt, b) | Formula::Forall(v, srt, b) => {
            let mut inner = map.clone();
            let name = if scope.contains(v) {
                let n = fresh(v, taken);
                taken.insert(n.clone());
                inner.insert(v.clone(), n.clone());
                n
            } else {
                inner.remove(v);
                v.clone()
            };
            scope.push(name.clone());
            let body = Box::new(rename_rec(b, scope, taken, &inner));
            scope.pop();
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(name, srt.clone(), body)
            } else {
                Formula::Forall(name, srt.clone(), body)
            }
        }
        other => other.clone(),
    }
}

fn rename_term(t: &Term, map: &HashMap<String, String>) -> Term {
    match t {
        Term::Var { name, sort } => Term::Var { name: map.get(name).cloned().unwrap_or_else(|| name.clone()), sort: sort.clone() },
        Term::App { func, args, sort } => Term::App { func: func.clone(), args: args.iter().map(|a| rename_term(a, map)).collect(), sort: sort.clone() },
        other => other.clone(),
    }
}

fn rename_bterm(t: &BTerm, scope: &mut Vec<String>, taken: &mut BTreeSet<String>, map: &HashMap<String, String>) -> BTerm {
    match t {
        BTerm::Var(v) => BTerm::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
        BTerm::ValueOf(phi) => BTerm::ValueOf(Box::new(rename_rec(phi, scope, taken, map))),
        BTerm::Meet(a, b) => BTerm::meet(rename_bterm(a, scope, taken, map), rename_bterm(b, scope, taken, map)),
        BTerm::Join(a, b) => BTerm::join(rename_bterm(a, scope, taken, map), rename_bterm(b, scope, taken, map)),
        BTerm::Compl(a) => BTerm::not(rename_bterm(a, scope, taken, map)),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(text: &str) -> Result<Formula, ParseError> {
        parse_formula(text, &Signature::ring())
    }

    #[test]
    fn parses_existential_idempotent_shape() {
        let f = ring("(exists (x field) (= (* x x) x))").unwrap();
        let x = Term::var("x", "field");
        assert_eq!(f, Formula::exists("x", "field", Formula::Eq(Term::app("*", vec![x.clone(), x.clone()], "field"), x)));
    }

    #[test]
    fn parses_slot_finiteness() {
        let f = ring("(fin (bv 0))").unwrap();
        assert_eq!(f, Formula::Bool(BAtom::Fin(BTerm::Slot(0))));
    }

    #[test]
    fn cj_in_term_position_is_a_sort_error() {
        assert!(matches!(ring("(= x (cj 2 y))"), Err(ParseError::Sort(_))));
    }

    #[test]
    fn reports_positions_and_unknown_symbols() {
        assert!(matches!(ring(""), Err(ParseError::Syntax { .. })));
        assert!(matches!(ring("(= x 0"), Err(ParseError::Syntax { .. })));
        assert!(matches!(ring("(frob x)"), Err(ParseError::UnknownSymbol { .. })));
        assert!(matches!(ring("(= x 0) extra"), Err(ParseError::Syntax { .. })));
        assert!(matches!(ring("(exists (x nosuch) (= x 0))"), Err(ParseError::UnknownSymbol { .. })));
    }

    #[test]
    fn numerals_and_indexed_relations() {
        let f = ring("(pow 3 (+ x -1/6))").unwrap();
        assert_eq!(f.to_string(), "(pow 3 (+ x -1/6))");
        assert!(matches!(ring("(pow 0 x)"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn boolean_equations_are_recognised() {
        let f = parse_formula("(exists (x bool) (and (le x y) (cj 1 x) (fin x)))", &Signature::boolean()).unwrap();
        assert!(f.is_boolean());
        assert_eq!(f.free_vars().get("y").map(String::as_str), Some(BOOL));
        let g = ring("(exists (z bool) (= (meet z (bv-of (V x))) 0))").unwrap();
        assert!(matches!(g, Formula::Exists(_, _, ref b) if matches!(**b, Formula::Bool(BAtom::Eq(..)))));
    }

    #[test]
    fn monoid_meet_stays_in_the_value_sort() {
        let f = parse_formula("(= (meet x 0) 0)", &Signature::monoid()).unwrap();
        assert!(matches!(f, Formula::Eq(..)));
    }

    #[test]
    fn shadowing_binders_are_renamed() {
        let f = ring("(and (V x) (exists (x field) (exists (x field) (= x 0))))").unwrap();
        assert_eq!(f.to_string(), "(and (V x) (exists (x' field) (exists (x'' field) (= x'' 0))))");
    }

    #[test]
    fn inconsistent_free_sorts_are_rejected() {
        let err = ring("(and (V x) (fin x))").unwrap_err();
        assert!(matches!(err, ParseError::Sort(_)));
    }
}
