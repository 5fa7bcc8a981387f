//! Quantifier elimination for `(P(I), 0, 1, meet, join, compl, Fin, C_j)` with
//! `I` countably infinite.
//!
//! A quantifier-free formula in Boolean keys `k_1..k_n` (variables, slots or
//! opaque Boolean values) is put in disjunctive normal form over
//! [`MintermTable`]s. A table constrains the cardinality of each minterm
//! `k_1^{e_1} ^ ... ^ k_n^{e_n}` to a [`Card`]: a set of cardinals of the
//! shape `[min, max]`, `[min, oo)`, `{oo}` or `[min, oo) u {oo}`, where `oo`
//! marks an infinite element. Every atom becomes a disjunction of tables:
//!
//! * `t = t'` and `t <= t'` zero out the minterms of `t xor t'`, resp. `t ^ -t'`;
//! * `Fin(t)` makes every minterm below `t` finite, `not Fin(t)` picks one
//!   minterm below `t` and makes it infinite;
//! * `C_j(t)` picks a composition `j = a_1 + ... + a_r` over the minterms
//!   below `t` and asks for at least `a_i` atoms in each; `not C_j(t)` picks a
//!   composition of `j - 1` and bounds each minterm by its part.
//!
//! To eliminate `exists x`, each table is projected: the parent minterm `m`
//! receives the Minkowski sum of the constraints on `m ^ x` and `m ^ -x`.
//!
//! Completeness. In `P(I)` the parts `m ^ x` for different `m` can be chosen
//! independently, and an element with `c` atoms splits into parts with `a`
//! and `b` atoms exactly when `c = a + b` (with `oo = a + oo = oo + oo`).
//! Hence a table over the keys and `x` is satisfiable for some `x` iff the
//! projected table is satisfied, and the projection is an equivalence. The
//! shapes above are closed under intersection and Minkowski sum, so no
//! approximation enters. Thresholds never exceed the sum of the indices `j`
//! of the `C_j` atoms of the input (plus one per negated equation); a cap of
//! "largest `j` plus number of quantifiers" would be unsound, since
//! `exists x (C_3(x ^ y) ^ C_3(-x ^ y))` is equivalent to `C_6(y)`.
//!
//! A table all of whose minterms are forced finite describes a finite
//! algebra and is discarded.

use super::{BEnv, Truth};
use crate::logic_core::{BAtom, BTerm, Formula, BOOL};
use std::collections::{BTreeMap, BTreeSet};

/// A Boolean key: a variable, a slot, or an opaque Boolean value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    Var(String),
    Slot(usize),
    Value(Formula),
}

impl Key {
    fn term(&self) -> BTerm {
        match self {
            Key::Var(v) => BTerm::Var(v.clone()),
            Key::Slot(i) => BTerm::Slot(*i),
            Key::Value(f) => BTerm::ValueOf(Box::new(f.clone())),
        }
    }
}

/// A set of admissible cardinalities for one minterm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Card {
    pub min: u32,
    /// Upper bound on finite sizes; `None` means unbounded.
    pub max: Option<u32>,
    /// Finite sizes in `[min, max]` are admissible.
    pub finite: bool,
    /// Infinite size is admissible (only when `max` is `None`).
    pub infinite: bool,
}

impl Card {
    pub fn any() -> Card {
        Card { min: 0, max: None, finite: true, infinite: true }
    }

    pub fn exactly(n: u32) -> Card {
        Card { min: n, max: Some(n), finite: true, infinite: false }
    }

    pub fn at_least(n: u32) -> Card {
        Card { min: n, max: None, finite: true, infinite: true }
    }

    pub fn infinite() -> Card {
        Card { min: 0, max: None, finite: false, infinite: true }
    }

    pub fn finite_unbounded() -> Card {
        Card { min: 0, max: None, finite: true, infinite: false }
    }

    pub fn at_most(n: u32) -> Card {
        Card { min: 0, max: Some(n), finite: true, infinite: false }
    }

    fn normalized(mut self) -> Card {
        if self.max.is_some() {
            self.infinite = false;
        }
        if self.max.is_some_and(|m| m < self.min) {
            self.finite = false;
        }
        if !self.finite {
            self.min = 0;
            self.max = None;
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        !self.finite && !self.infinite
    }

    pub fn is_any(&self) -> bool {
        *self == Card::any()
    }

    pub fn intersect(&self, other: &Card) -> Card {
        let max = match (self.max, other.max) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
        Card {
            min: self.min.max(other.min),
            max,
            finite: self.finite && other.finite,
            infinite: self.infinite && other.infinite,
        }
        .normalized()
    }

    /// Admissible sizes of a disjoint union of two parts.
    pub fn sum(&self, other: &Card) -> Card {
        if self.is_empty() || other.is_empty() {
            return Card { min: 0, max: None, finite: false, infinite: false };
        }
        let finite = self.finite && other.finite;
        let infinite = self.infinite || other.infinite;
        let max = match (self.max, other.max) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Card { min: self.min + other.min, max, finite, infinite }.normalized()
    }

    pub fn subset_of(&self, other: &Card) -> bool {
        if self.is_empty() {
            return true;
        }
        if self.infinite && !other.infinite {
            return false;
        }
        if self.finite {
            if !other.finite || self.min < other.min {
                return false;
            }
            match (self.max, other.max) {
                (_, None) => {}
                (Some(a), Some(b)) if a <= b => {}
                _ => return false,
            }
        }
        true
    }

    pub fn admits(&self, size: Option<u64>) -> bool {
        match size {
            None => self.infinite,
            Some(n) => self.finite && n >= self.min as u64 && self.max.is_none_or(|m| n <= m as u64),
        }
    }

    fn render(&self, t: &BTerm) -> Vec<Formula> {
        if *self == Card::exactly(0) {
            return vec![Formula::beq(t.clone(), BTerm::Zero)];
        }
        let mut out = Vec::new();
        if self.finite && self.min > 0 {
            out.push(Formula::cj(self.min, t.clone()));
        }
        match (self.finite, self.infinite, self.max) {
            (true, _, Some(m)) => out.push(Formula::not(Formula::cj(m + 1, t.clone()))),
            (true, false, None) => out.push(Formula::fin(t.clone())),
            (false, true, _) => out.push(Formula::not(Formula::fin(t.clone()))),
            _ => {}
        }
        out
    }
}

/// Per-minterm cardinality constraints over an ordered list of keys; bit `i`
/// of a minterm index is set when key `i` is taken positively. Absent
/// minterms are unconstrained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MintermTable {
    pub keys: Vec<Key>,
    pub cells: BTreeMap<u64, Card>,
}

type Table = BTreeMap<u64, Card>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum QeError {
    #[error("quantifier over non-Boolean sort `{0}`")]
    NonBooleanQuantifier(String),
    #[error("field-level atom in Boolean formula: {0}")]
    NotBoolean(String),
    #[error("too many Boolean keys ({0}) for minterm expansion")]
    TooManyKeys(usize),
    #[error("normal form exceeds {0} tables")]
    TooLarge(usize),
    #[error("sentence expected, found free keys {0}")]
    NotClosed(String),
}

const MAX_KEYS: usize = 20;
const MAX_TABLES: usize = 200_000;

struct Space {
    keys: Vec<Key>,
}

impl Space {
    fn new(keys: Vec<Key>) -> Result<Space, QeError> {
        if keys.len() > MAX_KEYS {
            return Err(QeError::TooManyKeys(keys.len()));
        }
        Ok(Space { keys })
    }

    fn size(&self) -> u64 {
        1u64 << self.keys.len()
    }

    fn eval(&self, t: &BTerm, mask: u64) -> bool {
        match t {
            BTerm::Zero => false,
            BTerm::One => true,
            BTerm::Meet(a, b) => self.eval(a, mask) && self.eval(b, mask),
            BTerm::Join(a, b) => self.eval(a, mask) || self.eval(b, mask),
            BTerm::Compl(a) => !self.eval(a, mask),
            leaf => {
                let key = leaf_key(leaf).expect("leaf");
                let i = self.keys.iter().position(|k| *k == key).expect("key in space");
                mask >> i & 1 == 1
            }
        }
    }

    fn support(&self, t: &BTerm) -> Vec<u64> {
        (0..self.size()).filter(|&m| self.eval(t, m)).collect()
    }

    fn minterm(&self, mask: u64) -> BTerm {
        BTerm::meet_all(self.keys.iter().enumerate().map(|(i, k)| if mask >> i & 1 == 1 { k.term() } else { BTerm::not(k.term()) }))
    }
}

fn leaf_key(t: &BTerm) -> Option<Key> {
    match t {
        BTerm::Var(v) => Some(Key::Var(v.clone())),
        BTerm::Slot(i) => Some(Key::Slot(*i)),
        BTerm::ValueOf(f) => Some(Key::Value((**f).clone())),
        _ => None,
    }
}

fn term_keys(t: &BTerm, out: &mut BTreeSet<Key>) {
    match t {
        BTerm::Meet(a, b) | BTerm::Join(a, b) => {
            term_keys(a, out);
            term_keys(b, out);
        }
        BTerm::Compl(a) => term_keys(a, out),
        BTerm::Zero | BTerm::One => {}
        leaf => {
            out.insert(leaf_key(leaf).unwrap());
        }
    }
}

fn formula_keys(f: &Formula) -> BTreeSet<Key> {
    let mut out = BTreeSet::new();
    f.visit_batoms(&mut |a| a.terms().into_iter().for_each(|t| term_keys(t, &mut out)));
    out
}

/// All ways to write `total` as an ordered sum of `parts` non-negative integers.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn literal(space: &Space, atom: &BAtom, positive: bool) -> Vec<Table> {
    let xor = |a: &BTerm, b: &BTerm| BTerm::join(BTerm::meet(a.clone(), BTerm::not(b.clone())), BTerm::meet(b.clone(), BTerm::not(a.clone())));
    let zero_or_nonempty = |supp: Vec<u64>| -> Vec<Table> {
        if positive {
            vec![supp.into_iter().map(|m| (m, Card::exactly(0))).collect()]
        } else {
            supp.into_iter().map(|m| Table::from([(m, Card::at_least(1))])).collect()
        }
    };
    match atom {
        BAtom::Eq(a, b) => zero_or_nonempty(space.support(&xor(a, b))),
        BAtom::Le(a, b) => zero_or_nonempty(space.support(&BTerm::meet(a.clone(), BTerm::not(b.clone())))),
        BAtom::Fin(t) => {
            let supp = space.support(t);
            if positive {
                vec![supp.into_iter().map(|m| (m, Card::finite_unbounded())).collect()]
            } else {
                supp.into_iter().map(|m| Table::from([(m, Card::infinite())])).collect()
            }
        }
        BAtom::Cj(j, t) => {
            let supp = space.support(t);
            if positive {
                compositions(*j, supp.len())
                    .into_iter()
                    .map(|parts| supp.iter().zip(parts).filter(|(_, a)| *a > 0).map(|(m, a)| (*m, Card::at_least(a))).collect())
                    .collect()
            } else {
                compositions(j - 1, supp.len())
                    .into_iter()
                    .map(|parts| supp.iter().zip(parts).map(|(m, b)| (*m, Card::at_most(b))).collect())
                    .collect()
            }
        }
    }
}

fn conjoin(a: &Table, b: &Table) -> Option<Table> {
    let mut out = a.clone();
    for (m, c) in b {
        let merged = match out.get(m) {
            Some(prev) => prev.intersect(c),
            None => *c,
        };
        if merged.is_empty() {
            return None;
        }
        out.insert(*m, merged);
    }
    Some(out)
}

fn table_implies(a: &Table, b: &Table) -> bool {
    b.iter().all(|(m, cb)| a.get(m).copied().unwrap_or_else(Card::any).subset_of(cb))
}

/// Drops tables that force a finite algebra and tables implied by others.
fn tidy(space: &Space, tables: Vec<Table>) -> Vec<Table> {
    let mut tables: Vec<Table> = tables
        .into_iter()
        .map(|t| t.into_iter().filter(|(_, c)| !c.is_any()).collect::<Table>())
        .filter(|t| !(t.len() as u64 == space.size() && t.values().all(|c| !c.infinite)))
        .collect();
    tables.sort();
    tables.dedup();
    let mut keep = vec![true; tables.len()];
    for i in 0..tables.len() {
        for j in 0..tables.len() {
            if i != j && keep[j] && table_implies(&tables[i], &tables[j]) && (tables[i] != tables[j] || i > j) {
                keep[i] = false;
                break;
            }
        }
    }
    tables.into_iter().zip(keep).filter(|(_, k)| *k).map(|(t, _)| t).collect()
}

fn dnf(space: &Space, f: &Formula) -> Result<Vec<Table>, QeError> {
    fn go(space: &Space, f: &Formula) -> Result<Vec<Table>, QeError> {
        Ok(match f {
            Formula::True => vec![Table::new()],
            Formula::False => vec![],
            Formula::Bool(a) => literal(space, a, true),
            Formula::Not(g) => match g.as_ref() {
                Formula::Bool(a) => literal(space, a, false),
                other => return Err(QeError::NotBoolean(other.to_string())),
            },
            Formula::Or(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    out.extend(go(space, x)?);
                }
                tidy(space, out)
            }
            Formula::And(xs) => {
                let mut acc = vec![Table::new()];
                for x in xs {
                    let part = go(space, x)?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &part {
                            if let Some(t) = conjoin(a, b) {
                                next.push(t);
                            }
                        }
                        if next.len() > MAX_TABLES {
                            return Err(QeError::TooLarge(MAX_TABLES));
                        }
                    }
                    acc = tidy(space, next);
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            other => return Err(QeError::NotBoolean(other.to_string())),
        })
    }
    go(space, &f.nnf())
}

fn project(table: &Table, bit: usize) -> Table {
    let low = (1u64 << bit) - 1;
    let squeeze = |m: u64| (m & low) | ((m >> (bit + 1)) << bit);
    let mut parents: BTreeMap<u64, (Card, Card)> = BTreeMap::new();
    for (m, c) in table {
        let entry = parents.entry(squeeze(*m)).or_insert((Card::any(), Card::any()));
        if m >> bit & 1 == 1 {
            entry.0 = *c;
        } else {
            entry.1 = *c;
        }
    }
    parents.into_iter().map(|(m, (a, b))| (m, a.sum(&b))).collect()
}

fn render(space: &Space, tables: &[Table]) -> Formula {
    Formula::or(tables.iter().map(|t| Formula::and(t.iter().flat_map(|(m, c)| c.render(&space.minterm(*m))))))
}

/// Normal form of a quantifier-free Boolean formula.
fn normalize(f: &Formula) -> Result<Formula, QeError> {
    let space = Space::new(formula_keys(f).into_iter().collect())?;
    let tables = dnf(&space, f)?;
    Ok(render(&space, &tables))
}

fn eliminate_exists(x: &str, body: &Formula) -> Result<Formula, QeError> {
    let keys: Vec<Key> = formula_keys(body).into_iter().collect();
    let Some(bit) = keys.iter().position(|k| *k == Key::Var(x.to_string())) else {
        return Ok(body.clone());
    };
    let space = Space::new(keys.clone())?;
    let tables = dnf(&space, body)?;
    let mut rest = keys;
    rest.remove(bit);
    let small = Space::new(rest)?;
    let projected: Vec<Table> = tables.iter().map(|t| project(t, bit)).filter(|t| t.values().all(|c| !c.is_empty())).collect();
    Ok(render(&small, &tidy(&small, projected)))
}

fn qe_rec(f: &Formula) -> Result<Formula, QeError> {
    Ok(match f {
        Formula::True | Formula::False | Formula::Bool(_) => f.clone(),
        Formula::Atom { .. } | Formula::Eq(..) => return Err(QeError::NotBoolean(f.to_string())),
        Formula::Not(g) => Formula::negate(qe_rec(g)?),
        Formula::And(xs) => Formula::and(xs.iter().map(qe_rec).collect::<Result<Vec<_>, _>>()?),
        Formula::Or(xs) => Formula::or(xs.iter().map(qe_rec).collect::<Result<Vec<_>, _>>()?),
        Formula::Implies(a, b) => Formula::or([Formula::negate(qe_rec(a)?), qe_rec(b)?]),
        Formula::Exists(v, srt, b) => {
            if srt != BOOL {
                return Err(QeError::NonBooleanQuantifier(srt.clone()));
            }
            eliminate_exists(v, &qe_rec(b)?)?
        }
        Formula::Forall(v, srt, b) => {
            if srt != BOOL {
                return Err(QeError::NonBooleanQuantifier(srt.clone()));
            }
            Formula::negate(eliminate_exists(v, &Formula::negate(qe_rec(b)?))?)
        }
    })
}

/// Eliminates Boolean quantifiers, returning an equivalent quantifier-free
/// formula in normal form over the same free keys.
pub fn ba_qe(f: &Formula) -> Result<Formula, QeError> {
    normalize(&qe_rec(f)?)
}

/// Decides a Boolean sentence in the powerset of a countably infinite set.
pub fn ba_decide(f: &Formula) -> Result<bool, QeError> {
    let q = ba_qe(f)?;
    let keys = formula_keys(&q);
    if !keys.is_empty() {
        return Err(QeError::NotClosed(format!("{keys:?}")));
    }
    match super::ba_eval(&q, &BEnv::default()).map_err(|e| QeError::NotBoolean(e.to_string()))? {
        Truth::True => Ok(true),
        Truth::False => Ok(false),
        Truth::Indeterminate => unreachable!("constant Boolean formulas are determinate"),
    }
}

impl MintermTable {
    /// Disjunctive normal form of a quantifier-free formula as tables.
    pub fn from_formula(f: &Formula) -> Result<Vec<MintermTable>, QeError> {
        let keys: Vec<Key> = formula_keys(f).into_iter().collect();
        let space = Space::new(keys.clone())?;
        Ok(dnf(&space, f)?.into_iter().map(|cells| MintermTable { keys: keys.clone(), cells }).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ba_eval, BEnv, PrimeSet};
    use super::*;
    use crate::logic_core::{parse_formula, Signature};

    fn b(text: &str) -> Formula {
        parse_formula(text, &Signature::boolean()).unwrap()
    }

    #[test]
    fn card_arithmetic() {
        assert_eq!(Card::exactly(2).sum(&Card::exactly(3)), Card::exactly(5));
        assert_eq!(Card::infinite().sum(&Card::exactly(0)), Card::infinite());
        assert_eq!(Card::exactly(1).sum(&Card::any()), Card::at_least(1));
        assert_eq!(Card::finite_unbounded().sum(&Card::at_most(3)), Card::finite_unbounded());
        assert!(Card::exactly(3).intersect(&Card::at_most(2)).is_empty());
        assert_eq!(Card::at_least(2).intersect(&Card::finite_unbounded()), Card { min: 2, max: None, finite: true, infinite: false });
        assert!(Card::exactly(2).subset_of(&Card::at_least(1)));
        assert!(!Card::at_least(1).subset_of(&Card::finite_unbounded()));
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(0, 3), vec![vec![0, 0, 0]]);
        assert!(compositions(2, 0).is_empty());
    }

    #[test]
    fn decides_spec_sentences() {
        assert!(ba_decide(&b("(exists (x bool) (and (fin x) (cj 2 x)))")).unwrap());
        assert!(ba_decide(&b("(exists (x bool) (and (cj 3 x) (fin x)))")).unwrap());
        assert!(!ba_decide(&b("(forall (x bool) (implies (cj 1 x) (fin x)))")).unwrap());
        assert!(!ba_decide(&b("(exists (x bool) (and (fin x) (fin (compl x))))")).unwrap());
    }

    #[test]
    fn atom_below_y() {
        let q = ba_qe(&b("(exists (x bool) (and (le x y) (cj 1 x) (fin x)))")).unwrap();
        assert!(q.is_quantifier_free());
        assert_eq!(q, ba_qe(&b("(cj 1 y)")).unwrap());
    }

    #[test]
    fn sum_of_thresholds_is_exact() {
        let q = ba_qe(&b("(exists (x bool) (and (cj 3 (meet x y)) (cj 3 (meet (compl x) y))))")).unwrap();
        assert_eq!(q, ba_qe(&b("(cj 6 y)")).unwrap());
    }

    #[test]
    fn universal_finiteness_example() {
        let f = b("(forall (x bool) (implies (fin (meet x y)) (fin x)))");
        let q = ba_qe(&f).unwrap();
        let env = BEnv::default().with_var("y", PrimeSet::finite([2]).unwrap());
        assert_eq!(ba_eval(&q, &env).unwrap(), Truth::False);
        let env = BEnv::default().with_var("y", PrimeSet::cofinite([2]).unwrap());
        assert_eq!(ba_eval(&q, &env).unwrap(), Truth::True);
    }

    #[test]
    fn qe_is_idempotent() {
        for text in [
            "(exists (x bool) (and (le x y) (cj 2 x) (not (fin (meet (compl x) y)))))",
            "(forall (x bool) (or (fin x) (cj 3 (meet x y))))",
            "(and (fin y) (not (= y 0)))",
        ] {
            let once = ba_qe(&b(text)).unwrap();
            assert_eq!(ba_qe(&once).unwrap(), once, "{text}");
        }
    }

    #[test]
    fn rejects_field_quantifiers() {
        let f = parse_formula("(exists (x field) (= x 0))", &Signature::ring()).unwrap();
        assert!(matches!(ba_qe(&f), Err(QeError::NonBooleanQuantifier(_))));
    }
}
