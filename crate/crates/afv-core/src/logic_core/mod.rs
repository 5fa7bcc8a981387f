//! Many-sorted first-order syntax shared by every other module.
//!
//! Formulas mix two layers. Field-level atoms (`Atom`, `Eq`) talk about
//! elements of a local structure. Boolean atoms (`Bool`) talk about the
//! Boolean algebra of index sets: `Fin`, `C_j`, equality and order between
//! Boolean terms, whose leaves may be Boolean variables, numbered slots of a
//! reduced form, or the Boolean value of a local formula.
//!
//! Sorts are names. They are not assumed disjoint; well-sortedness is a typing
//! judgment made by the parser and by [`check_sorts`].

mod parse;
mod render;
mod subst;

pub use parse::{parse_formula, ParseError};
pub use subst::{relativize, substitute, Guard, SubstError};

use num_rational::BigRational;
use std::collections::BTreeMap;

pub type Rational = BigRational;
pub type Sort = String;

/// The Boolean sort, available in every signature.
pub const BOOL: &str = "bool";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelDecl {
    pub name: String,
    pub args: Vec<Sort>,
    /// Takes a leading positive integer index, as in `(pow 3 t)`.
    pub indexed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FuncDecl {
    pub name: String,
    pub args: Vec<Sort>,
    pub result: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub sorts: Vec<Sort>,
    pub relations: Vec<RelDecl>,
    pub functions: Vec<FuncDecl>,
    pub constants: Vec<(String, Sort)>,
    /// Sort of numeric literals such as `-3` or `1/6`, if the signature has them.
    pub numerals: Option<Sort>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("sort `{0}` is used but not declared")]
    UndeclaredSort(String),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
}

fn s(x: &str) -> String {
    x.to_string()
}

impl Signature {
    /// Rings with the valuation-ring predicate `V` and power predicates `(pow k t)`.
    pub fn ring() -> Signature {
        let f = s("field");
        Signature {
            sorts: vec![f.clone()],
            relations: vec![
                RelDecl { name: s("V"), args: vec![f.clone()], indexed: false },
                RelDecl { name: s("pow"), args: vec![f.clone()], indexed: true },
            ],
            functions: ["+", "-", "*"]
                .iter()
                .map(|n| FuncDecl { name: s(n), args: vec![f.clone(), f.clone()], result: f.clone() })
                .chain(std::iter::once(FuncDecl { name: s("neg"), args: vec![f.clone()], result: f.clone() }))
                .collect(),
            constants: vec![(s("0"), f.clone()), (s("1"), f.clone())],
            numerals: Some(f),
        }
    }

    /// Krasner hyperrings: multiplication, inverse, the graph `Sigma` of
    /// hyperaddition and the valuation subset `Pdelta`.
    pub fn hyperring() -> Signature {
        let h = s("hyper");
        Signature {
            sorts: vec![h.clone()],
            relations: vec![
                RelDecl { name: s("Sigma"), args: vec![h.clone(), h.clone(), h.clone()], indexed: false },
                RelDecl { name: s("Pdelta"), args: vec![h.clone()], indexed: false },
            ],
            functions: vec![
                FuncDecl { name: s("*"), args: vec![h.clone(), h.clone()], result: h.clone() },
                FuncDecl { name: s("inv"), args: vec![h.clone()], result: h.clone() },
                FuncDecl { name: s("neg"), args: vec![h.clone()], result: h.clone() },
            ],
            constants: vec![(s("0"), h.clone()), (s("1"), h.clone())],
            numerals: None,
        }
    }

    /// Lattice-ordered value monoids.
    pub fn monoid() -> Signature {
        let v = s("value");
        Signature {
            sorts: vec![v.clone()],
            relations: vec![],
            functions: ["+", "meet", "join"]
                .iter()
                .map(|n| FuncDecl { name: s(n), args: vec![v.clone(), v.clone()], result: v.clone() })
                .collect(),
            constants: vec![(s("0"), v.clone()), (s("inf"), v.clone())],
            numerals: Some(v),
        }
    }

    /// Pure Boolean algebra language with `Fin` and `C_j`.
    pub fn boolean() -> Signature {
        Signature { sorts: vec![s(BOOL)], relations: vec![], functions: vec![], constants: vec![], numerals: None }
    }

    pub fn validate(&self) -> Result<(), SignatureError> {
        let declared = |x: &String| x == BOOL || self.sorts.contains(x);
        let mut seen = std::collections::HashSet::new();
        for r in &self.relations {
            if !seen.insert(("relation", &r.name)) {
                return Err(SignatureError::Duplicate { kind: "relation", name: r.name.clone() });
            }
            if let Some(bad) = r.args.iter().find(|a| !declared(a)) {
                return Err(SignatureError::UndeclaredSort(bad.clone()));
            }
        }
        for f in &self.functions {
            if !seen.insert(("function", &f.name)) {
                return Err(SignatureError::Duplicate { kind: "function", name: f.name.clone() });
            }
            if let Some(bad) = f.args.iter().chain(std::iter::once(&f.result)).find(|a| !declared(a)) {
                return Err(SignatureError::UndeclaredSort(bad.clone()));
            }
        }
        for (c, srt) in &self.constants {
            if !seen.insert(("constant", c)) {
                return Err(SignatureError::Duplicate { kind: "constant", name: c.clone() });
            }
            if !declared(srt) {
                return Err(SignatureError::UndeclaredSort(srt.clone()));
            }
        }
        if let Some(n) = &self.numerals {
            if !declared(n) {
                return Err(SignatureError::UndeclaredSort(n.clone()));
            }
        }
        Ok(())
    }

    /// Sort given to free variables whose sort is not forced by context.
    pub fn default_sort(&self) -> Sort {
        self.sorts.iter().find(|x| *x != BOOL).cloned().unwrap_or_else(|| s(BOOL))
    }

    pub fn has_sort(&self, x: &str) -> bool {
        x == BOOL || self.sorts.iter().any(|y| y == x)
    }

    pub fn relation(&self, name: &str) -> Option<&RelDecl> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FuncDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&Sort> {
        self.constants.iter().find(|(c, _)| c == name).map(|(_, srt)| srt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var { name: String, sort: Sort },
    Const { name: String, sort: Sort },
    Num { value: Rational, sort: Sort },
    App { func: String, args: Vec<Term>, sort: Sort },
}

impl Term {
    pub fn var(name: &str, sort: &str) -> Term {
        Term::Var { name: name.to_string(), sort: sort.to_string() }
    }

    pub fn constant(name: &str, sort: &str) -> Term {
        Term::Const { name: name.to_string(), sort: sort.to_string() }
    }

    pub fn num(value: Rational, sort: &str) -> Term {
        Term::Num { value, sort: sort.to_string() }
    }

    pub fn app(func: &str, args: Vec<Term>, sort: &str) -> Term {
        Term::App { func: func.to_string(), args, sort: sort.to_string() }
    }

    pub fn sort(&self) -> &Sort {
        match self {
            Term::Var { sort, .. } | Term::Const { sort, .. } | Term::Num { sort, .. } | Term::App { sort, .. } => sort,
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeMap<String, Sort>) {
        match self {
            Term::Var { name, sort } => {
                out.insert(name.clone(), sort.clone());
            }
            Term::App { args, .. } => args.iter().for_each(|a| a.free_vars_into(out)),
            _ => {}
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        match self {
            Term::Var { name, .. } => name == v,
            Term::App { args, .. } => args.iter().any(|a| a.mentions(v)),
            _ => false,
        }
    }
}

/// Terms of the Boolean sort.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BTerm {
    Var(String),
    /// Boolean value of the i-th local formula of the ambient reduced form.
    Slot(usize),
    /// Boolean value `[[phi]]` of a local formula.
    ValueOf(Box<Formula>),
    Zero,
    One,
    Meet(Box<BTerm>, Box<BTerm>),
    Join(Box<BTerm>, Box<BTerm>),
    Compl(Box<BTerm>),
}

impl BTerm {
    pub fn var(name: &str) -> BTerm {
        BTerm::Var(name.to_string())
    }

    pub fn meet(a: BTerm, b: BTerm) -> BTerm {
        BTerm::Meet(Box::new(a), Box::new(b))
    }

    pub fn join(a: BTerm, b: BTerm) -> BTerm {
        BTerm::Join(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: BTerm) -> BTerm {
        BTerm::Compl(Box::new(a))
    }

    /// Join of a list; the empty join is `0`.
    pub fn join_all(items: impl IntoIterator<Item = BTerm>) -> BTerm {
        items.into_iter().reduce(BTerm::join).unwrap_or(BTerm::Zero)
    }

    /// Meet of a list; the empty meet is `1`.
    pub fn meet_all(items: impl IntoIterator<Item = BTerm>) -> BTerm {
        items.into_iter().reduce(BTerm::meet).unwrap_or(BTerm::One)
    }

    pub fn value_of(f: Formula) -> BTerm {
        BTerm::ValueOf(Box::new(f))
    }

    /// Applies `f` to every leaf, bottom-up, replacing it with the result.
    pub fn map_leaves(&self, f: &mut impl FnMut(&BTerm) -> BTerm) -> BTerm {
        match self {
            BTerm::Meet(a, b) => BTerm::meet(a.map_leaves(f), b.map_leaves(f)),
            BTerm::Join(a, b) => BTerm::join(a.map_leaves(f), b.map_leaves(f)),
            BTerm::Compl(a) => BTerm::not(a.map_leaves(f)),
            leaf => f(leaf),
        }
    }

    pub fn vars_into(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            BTerm::Var(v) => {
                out.insert(v.clone());
            }
            BTerm::Meet(a, b) | BTerm::Join(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            BTerm::Compl(a) => a.vars_into(out),
            _ => {}
        }
    }

    pub fn max_slot(&self) -> Option<usize> {
        match self {
            BTerm::Slot(i) => Some(*i),
            BTerm::Meet(a, b) | BTerm::Join(a, b) => a.max_slot().max(b.max_slot()),
            BTerm::Compl(a) => a.max_slot(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BAtom {
    Fin(BTerm),
    /// At least `j` atoms below the term; `j >= 1`.
    Cj(u32, BTerm),
    Eq(BTerm, BTerm),
    Le(BTerm, BTerm),
}

impl BAtom {
    pub fn terms(&self) -> Vec<&BTerm> {
        match self {
            BAtom::Fin(t) | BAtom::Cj(_, t) => vec![t],
            BAtom::Eq(a, b) | BAtom::Le(a, b) => vec![a, b],
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&BTerm) -> BTerm) -> BAtom {
        match self {
            BAtom::Fin(t) => BAtom::Fin(f(t)),
            BAtom::Cj(j, t) => BAtom::Cj(*j, f(t)),
            BAtom::Eq(a, b) => BAtom::Eq(f(a), f(b)),
            BAtom::Le(a, b) => BAtom::Le(f(a), f(b)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom { rel: String, index: Option<u32>, args: Vec<Term> },
    Eq(Term, Term),
    Bool(BAtom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Sort, Box<Formula>),
    Forall(String, Sort, Box<Formula>),
}

/// A formula whose atoms are all Boolean atoms and whose quantifiers range
/// over the Boolean sort.
pub type BooleanFormula = Formula;

impl Formula {
    pub fn atom(rel: &str, args: Vec<Term>) -> Formula {
        Formula::Atom { rel: rel.to_string(), index: None, args }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(v: &str, sort: &str, body: Formula) -> Formula {
        Formula::Exists(v.to_string(), sort.to_string(), Box::new(body))
    }

    pub fn forall(v: &str, sort: &str, body: Formula) -> Formula {
        Formula::Forall(v.to_string(), sort.to_string(), Box::new(body))
    }

    pub fn fin(t: BTerm) -> Formula {
        Formula::Bool(BAtom::Fin(t))
    }

    pub fn cj(j: u32, t: BTerm) -> Formula {
        Formula::Bool(BAtom::Cj(j, t))
    }

    pub fn beq(a: BTerm, b: BTerm) -> Formula {
        Formula::Bool(BAtom::Eq(a, b))
    }

    pub fn ble(a: BTerm, b: BTerm) -> Formula {
        Formula::Bool(BAtom::Le(a, b))
    }

    /// Conjunction, flattening nested conjunctions and dropping `true`.
    pub fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(xs) => out.extend(xs),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction, flattening nested disjunctions and dropping `false`.
    pub fn or(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(xs) => out.extend(xs),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    /// Negation with constant folding and double-negation removal.
    pub fn negate(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => *g,
            g => Formula::not(g),
        }
    }

    pub fn free_vars(&self) -> BTreeMap<String, Sort> {
        let mut out = BTreeMap::new();
        self.free_vars_into(&mut out);
        out
    }

    fn free_vars_into(&self, out: &mut BTreeMap<String, Sort>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom { args, .. } => args.iter().for_each(|t| t.free_vars_into(out)),
            Formula::Eq(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Bool(atom) => atom.terms().into_iter().for_each(|t| bterm_free_vars(t, out)),
            Formula::Not(g) => g.free_vars_into(out),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|g| g.free_vars_into(out)),
            Formula::Implies(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Exists(v, _, body) | Formula::Forall(v, _, body) => {
                let mut inner = BTreeMap::new();
                body.free_vars_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.quantifier_count() == 0
    }

    /// Number of quantifier nodes, including those inside Boolean values of
    /// local formulas.
    pub fn quantifier_count(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => 0,
            Formula::Bool(atom) => atom.terms().into_iter().map(bterm_quantifier_count).sum(),
            Formula::Not(g) => g.quantifier_count(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().map(Formula::quantifier_count).sum(),
            Formula::Implies(a, b) => a.quantifier_count() + b.quantifier_count(),
            Formula::Exists(_, _, b) | Formula::Forall(_, _, b) => 1 + b.quantifier_count(),
        }
    }

    /// True when every atom is Boolean and every quantifier ranges over the
    /// Boolean sort.
    pub fn is_boolean(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Bool(_) => true,
            Formula::Atom { .. } | Formula::Eq(..) => false,
            Formula::Not(g) => g.is_boolean(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().all(Formula::is_boolean),
            Formula::Implies(a, b) => a.is_boolean() && b.is_boolean(),
            Formula::Exists(_, srt, b) | Formula::Forall(_, srt, b) => srt == BOOL && b.is_boolean(),
        }
    }

    /// Largest slot index mentioned, if any.
    pub fn max_slot(&self) -> Option<usize> {
        let mut best = None;
        self.visit_batoms(&mut |a| {
            for t in a.terms() {
                best = best.max(t.max_slot());
            }
        });
        best
    }

    /// Calls `f` on every Boolean atom at the formula level (not inside
    /// Boolean values of local formulas).
    pub fn visit_batoms(&self, f: &mut impl FnMut(&BAtom)) {
        match self {
            Formula::Bool(a) => f(a),
            Formula::Not(g) => g.visit_batoms(f),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|g| g.visit_batoms(f)),
            Formula::Implies(a, b) => {
                a.visit_batoms(f);
                b.visit_batoms(f);
            }
            Formula::Exists(_, _, b) | Formula::Forall(_, _, b) => b.visit_batoms(f),
            _ => {}
        }
    }

    /// Rebuilds the formula with every Boolean atom replaced by `f(atom)`.
    pub fn map_batoms(&self, f: &mut impl FnMut(&BAtom) -> Formula) -> Formula {
        match self {
            Formula::Bool(a) => f(a),
            Formula::Not(g) => Formula::not(g.map_batoms(f)),
            Formula::And(xs) => Formula::And(xs.iter().map(|g| g.map_batoms(f)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|g| g.map_batoms(f)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.map_batoms(f), b.map_batoms(f)),
            Formula::Exists(v, srt, b) => Formula::Exists(v.clone(), srt.clone(), Box::new(b.map_batoms(f))),
            Formula::Forall(v, srt, b) => Formula::Forall(v.clone(), srt.clone(), Box::new(b.map_batoms(f))),
            other => other.clone(),
        }
    }

    /// Negation normal form: negations only on atoms, no implications.
    pub fn nnf(&self) -> Formula {
        self.nnf_signed(true)
    }

    fn nnf_signed(&self, positive: bool) -> Formula {
        match self {
            Formula::True => if positive { Formula::True } else { Formula::False },
            Formula::False => if positive { Formula::False } else { Formula::True },
            Formula::Not(g) => g.nnf_signed(!positive),
            Formula::And(xs) => {
                let parts = xs.iter().map(|g| g.nnf_signed(positive));
                if positive { Formula::and(parts) } else { Formula::or(parts) }
            }
            Formula::Or(xs) => {
                let parts = xs.iter().map(|g| g.nnf_signed(positive));
                if positive { Formula::or(parts) } else { Formula::and(parts) }
            }
            Formula::Implies(a, b) => {
                if positive {
                    Formula::or([a.nnf_signed(false), b.nnf_signed(true)])
                } else {
                    Formula::and([a.nnf_signed(true), b.nnf_signed(false)])
                }
            }
            Formula::Exists(v, srt, b) => {
                let body = Box::new(b.nnf_signed(positive));
                if positive { Formula::Exists(v.clone(), srt.clone(), body) } else { Formula::Forall(v.clone(), srt.clone(), body) }
            }
            Formula::Forall(v, srt, b) => {
                let body = Box::new(b.nnf_signed(positive));
                if positive { Formula::Forall(v.clone(), srt.clone(), body) } else { Formula::Exists(v.clone(), srt.clone(), body) }
            }
            atom => {
                if positive { atom.clone() } else { Formula::not(atom.clone()) }
            }
        }
    }
}

fn bterm_free_vars(t: &BTerm, out: &mut BTreeMap<String, Sort>) {
    match t {
        BTerm::Var(v) => {
            out.insert(v.clone(), BOOL.to_string());
        }
        BTerm::ValueOf(f) => f.free_vars_into(out),
        BTerm::Meet(a, b) | BTerm::Join(a, b) => {
            bterm_free_vars(a, out);
            bterm_free_vars(b, out);
        }
        BTerm::Compl(a) => bterm_free_vars(a, out),
        _ => {}
    }
}

fn bterm_quantifier_count(t: &BTerm) -> usize {
    match t {
        BTerm::ValueOf(f) => f.quantifier_count(),
        BTerm::Meet(a, b) | BTerm::Join(a, b) => bterm_quantifier_count(a) + bterm_quantifier_count(b),
        BTerm::Compl(a) => bterm_quantifier_count(a),
        _ => 0,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("sort error in `{term}`: expected {expected}, found {found}")]
pub struct SortError {
    pub term: String,
    pub expected: Sort,
    pub found: Sort,
}

/// Checks that a formula built programmatically is well-sorted in `sig`.
pub fn check_sorts(f: &Formula, sig: &Signature) -> Result<(), SortError> {
    let text = f.to_string();
    let back = parse_formula(&text, sig).map_err(|e| match e {
        ParseError::Sort(err) => err,
        other => SortError { term: text.clone(), expected: "well-formed".into(), found: other.to_string() },
    })?;
    if back == *f {
        Ok(())
    } else {
        Err(SortError { term: text, expected: "declared sorts".into(), found: "inconsistent sort annotations".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_signatures_validate() {
        for sig in [Signature::ring(), Signature::hyperring(), Signature::monoid(), Signature::boolean()] {
            sig.validate().unwrap();
        }
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut sig = Signature::ring();
        sig.constants.push(("0".into(), "field".into()));
        assert!(matches!(sig.validate(), Err(SignatureError::Duplicate { .. })));
        let mut sig = Signature::ring();
        sig.relations.push(RelDecl { name: "P".into(), args: vec!["nosuch".into()], indexed: false });
        assert_eq!(sig.validate(), Err(SignatureError::UndeclaredSort("nosuch".into())));
    }

    #[test]
    fn nnf_pushes_negation_through_quantifiers() {
        let sig = Signature::ring();
        let f = parse_formula("(not (exists (x field) (implies (V x) (= x 0))))", &sig).unwrap();
        assert_eq!(f.nnf().to_string(), "(forall (x field) (and (V x) (not (= x 0))))");
    }

    #[test]
    fn free_vars_respect_binders() {
        let sig = Signature::ring();
        let f = parse_formula("(and (V y) (exists (x field) (= x y)))", &sig).unwrap();
        let fv: Vec<_> = f.free_vars().into_keys().collect();
        assert_eq!(fv, vec!["y".to_string()]);
    }
}
