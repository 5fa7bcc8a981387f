//! Evaluation of ring formulas (with `V` and `(pow k t)`) over `Q_p`, both at
//! a fixed prime and at a generic prime.
//!
//! Both modes share one evaluator parameterised by a [`Domain`]. At a fixed
//! prime, values are rationals or elements `a + b*r` of a quadratic extension
//! generated by an irrational root `r` lying in `Q_p`; predicates on the
//! latter use p-adic approximations. At a generic prime, values are Laurent
//! polynomials in a symbol `pi` standing for the prime; every coefficient
//! touched is recorded, and for primes dividing none of them the generic
//! answer agrees with the fixed-prime one.
//!
//! `exists x. B` is decided in three ways, in order:
//!
//! * Algebraic: `x` occurs only in equations of `B`. Each equation not
//!   identically zero has finitely many roots; `B` has one truth value off
//!   the roots, so it suffices to test the roots in `Q_p` and one non-root.
//! * Pinned: some conjunct (through disjunctions) is a nonzero equation in
//!   `x`, so witnesses are among its roots.
//! * Search: candidates `c * pi^a` with `c` of small height. A witness gives
//!   `True`; otherwise the answer is `Unknown`.
//!
//! Roots in `Q_p` are the rational roots plus the roots of the remaining
//! factor: a quadratic contributes its two conjugate roots when its
//! discriminant is a square in `Q_p`, a factor of higher degree is ruled out
//! when it has no root modulo `p` and a unit leading coefficient.

use super::laurent::Laurent;
use super::padic::PAdic;
use super::poly::{self, rational_roots};
use super::{is_kth_power, is_rational_kth_power, is_square, kth_power_precision, rationals_by_height, unit_residue_is_kth_power, vp, Valuation};
use crate::boolean_engine::Truth;
use crate::logic_core::{Formula, Rational, Term};
use crate::primes::{mul_mod, prime_factors_u64, Prime};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

/// Result of generic evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    True,
    False,
    /// Determinate at every prime, but not constant by any argument here.
    Varies,
    Unknown,
}

impl Outcome {
    fn rank_and(self) -> u8 {
        match self {
            Outcome::False => 0,
            Outcome::Unknown => 1,
            Outcome::Varies => 2,
            Outcome::True => 3,
        }
    }

    pub fn and(self, o: Outcome) -> Outcome {
        if self.rank_and() <= o.rank_and() { self } else { o }
    }

    pub fn not(self) -> Outcome {
        match self {
            Outcome::True => Outcome::False,
            Outcome::False => Outcome::True,
            other => other,
        }
    }

    pub fn or(self, o: Outcome) -> Outcome {
        self.not().and(o.not()).not()
    }

    pub fn from_bool(b: bool) -> Outcome {
        if b { Outcome::True } else { Outcome::False }
    }

    pub fn to_truth(self) -> Truth {
        match self {
            Outcome::True => Truth::True,
            Outcome::False => Truth::False,
            _ => Truth::Indeterminate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LocalEvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("not a ring formula: {0}")]
    Unsupported(String),
    #[error("cannot determine the primes of {0}")]
    Unfactored(String),
}

/// Witness candidates for existential search: `c * pi^a` with `c` of height
/// at most `height` and `a` in `pi_powers`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub height: u64,
    pub pi_powers: Vec<i64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { height: 3, pi_powers: vec![0, 1, -1, 2, -2] }
    }
}

impl SearchConfig {
    fn candidates(&self) -> Vec<(Rational, i64)> {
        let cs = rationals_by_height(self.height);
        let mut out = Vec::new();
        for &a in &self.pi_powers {
            for c in &cs {
                if a == 0 || !c.is_zero() {
                    out.push((c.clone(), a));
                }
            }
        }
        out
    }
}

enum RootSet<V> {
    Exact(Vec<V>),
    Varies,
    Unknown,
}

trait Domain {
    type V: Clone;
    fn constant(&self, q: &Rational) -> Self::V;
    /// `c * pi^a`.
    fn scaled_power(&self, c: &Rational, a: i64) -> Self::V;
    fn add(&self, a: &Self::V, b: &Self::V) -> Option<Self::V>;
    fn mul(&self, a: &Self::V, b: &Self::V) -> Option<Self::V>;
    fn neg(&self, a: &Self::V) -> Self::V;
    fn as_rational(&self, v: &Self::V) -> Option<Rational>;
    fn is_zero(&mut self, v: &Self::V) -> Outcome;
    fn val_nonneg(&mut self, v: &Self::V) -> Outcome;
    /// The valuation, when it is known exactly.
    fn valuation(&mut self, v: &Self::V) -> Option<Valuation>;
    fn kth_power(&mut self, k: u32, v: &Self::V) -> Outcome;
    /// Roots in `Q_p` of a polynomial without rational roots.
    fn irrational_roots(&mut self, rest: &[Rational], body_is_qf: bool) -> RootSet<Self::V>;
    fn note_rational(&mut self, _q: &Rational) {}
}

/// A root of `x^2 + b x + c` in `Q_p`, selected by the sign of the square
/// root of the discriminant.
#[derive(Debug)]
struct QuadRoot {
    b: Rational,
    c: Rational,
    positive: bool,
    p: Prime,
}

impl QuadRoot {
    fn approx(&self, prec: u32) -> Option<PAdic> {
        let disc = &self.b * &self.b - Rational::from_integer(4.into()) * &self.c;
        let s = PAdic::from_rational(&disc, self.p, prec).sqrt()?;
        let s = if self.positive { s } else { s.neg() };
        let half = PAdic::from_rational(&Rational::new(BigInt::one(), BigInt::from(2)), self.p, prec);
        Some(PAdic::from_rational(&(-&self.b / Rational::from_integer(2.into())), self.p, prec).add(&half.mul(&s)))
    }
}

#[derive(Clone, Debug)]
enum PVal {
    Rat(Rational),
    /// `a + b*r` with `b != 0`.
    Quad(Rc<QuadRoot>, Rational, Rational),
}

fn quad(root: &Rc<QuadRoot>, a: Rational, b: Rational) -> PVal {
    if b.is_zero() { PVal::Rat(a) } else { PVal::Quad(root.clone(), a, b) }
}

struct AtPrime {
    p: Prime,
}

const PRECISIONS: [u32; 4] = [24, 48, 96, 192];

impl AtPrime {
    fn approx(&self, root: &QuadRoot, a: &Rational, b: &Rational, needed: u32) -> Option<PAdic> {
        for prec in PRECISIONS {
            let Some(r) = root.approx(prec) else { continue };
            let v = PAdic::from_rational(a, self.p, prec + 8).add(&PAdic::from_rational(b, self.p, prec + 8).mul(&r));
            if !v.is_zero_approx() && v.unit_residue(needed).is_some() {
                return Some(v);
            }
        }
        None
    }
}

impl Domain for AtPrime {
    type V = PVal;

    fn constant(&self, q: &Rational) -> PVal {
        PVal::Rat(q.clone())
    }

    fn scaled_power(&self, c: &Rational, a: i64) -> PVal {
        PVal::Rat(c * Rational::from_integer(self.p.get().into()).pow(a as i32))
    }

    fn add(&self, x: &PVal, y: &PVal) -> Option<PVal> {
        Some(match (x, y) {
            (PVal::Rat(a), PVal::Rat(b)) => PVal::Rat(a + b),
            (PVal::Rat(q), PVal::Quad(r, a, b)) | (PVal::Quad(r, a, b), PVal::Rat(q)) => quad(r, a + q, b.clone()),
            (PVal::Quad(r1, a1, b1), PVal::Quad(r2, a2, b2)) => {
                if !Rc::ptr_eq(r1, r2) {
                    return None;
                }
                quad(r1, a1 + a2, b1 + b2)
            }
        })
    }

    fn mul(&self, x: &PVal, y: &PVal) -> Option<PVal> {
        Some(match (x, y) {
            (PVal::Rat(a), PVal::Rat(b)) => PVal::Rat(a * b),
            (PVal::Rat(q), PVal::Quad(r, a, b)) | (PVal::Quad(r, a, b), PVal::Rat(q)) => quad(r, a * q, b * q),
            (PVal::Quad(r1, a1, b1), PVal::Quad(r2, a2, b2)) => {
                if !Rc::ptr_eq(r1, r2) {
                    return None;
                }
                let bb = b1 * b2;
                quad(r1, a1 * a2 - &bb * &r1.c, a1 * b2 + a2 * b1 - &bb * &r1.b)
            }
        })
    }

    fn neg(&self, x: &PVal) -> PVal {
        match x {
            PVal::Rat(a) => PVal::Rat(-a),
            PVal::Quad(r, a, b) => PVal::Quad(r.clone(), -a, -b),
        }
    }

    fn as_rational(&self, v: &PVal) -> Option<Rational> {
        match v {
            PVal::Rat(a) => Some(a.clone()),
            PVal::Quad(..) => None,
        }
    }

    fn is_zero(&mut self, v: &PVal) -> Outcome {
        match v {
            PVal::Rat(a) => Outcome::from_bool(a.is_zero()),
            PVal::Quad(..) => Outcome::False,
        }
    }

    fn val_nonneg(&mut self, v: &PVal) -> Outcome {
        match v {
            PVal::Rat(a) => Outcome::from_bool(vp(a, self.p) >= Valuation::Finite(0)),
            PVal::Quad(r, a, b) => match self.approx(r, a, b, 1) {
                Some(x) => Outcome::from_bool(x.valuation().unwrap() >= 0),
                None => Outcome::Unknown,
            },
        }
    }

    fn valuation(&mut self, v: &PVal) -> Option<Valuation> {
        match v {
            PVal::Rat(a) => Some(vp(a, self.p)),
            PVal::Quad(..) => None,
        }
    }

    fn kth_power(&mut self, k: u32, v: &PVal) -> Outcome {
        match v {
            PVal::Rat(a) => Outcome::from_bool(is_kth_power(a, self.p, k)),
            PVal::Quad(r, a, b) => {
                let n = kth_power_precision(self.p.get(), k);
                match self.approx(r, a, b, n) {
                    Some(x) => {
                        let ok = x.valuation().unwrap().rem_euclid(k as i64) == 0
                            && unit_residue_is_kth_power(x.unit_residue(n).unwrap(), self.p.get(), k);
                        Outcome::from_bool(ok)
                    }
                    None => Outcome::Unknown,
                }
            }
        }
    }

    fn irrational_roots(&mut self, rest: &[Rational], _body_is_qf: bool) -> RootSet<PVal> {
        match poly::degree(rest) {
            0 => RootSet::Exact(Vec::new()),
            2 => {
                let b = &rest[1] / &rest[2];
                let c = &rest[0] / &rest[2];
                let disc = &b * &b - Rational::from_integer(4.into()) * &c;
                if !is_square(&disc, self.p) {
                    return RootSet::Exact(Vec::new());
                }
                let roots = [true, false]
                    .into_iter()
                    .map(|positive| PVal::Quad(Rc::new(QuadRoot { b: b.clone(), c: c.clone(), positive, p: self.p }), Rational::zero(), Rational::one()))
                    .collect();
                RootSet::Exact(roots)
            }
            _ => {
                if no_roots_mod_p(rest, self.p.get()) {
                    RootSet::Exact(Vec::new())
                } else {
                    RootSet::Unknown
                }
            }
        }
    }
}

/// True when a primitive integral multiple of `f` has a unit leading
/// coefficient and no root modulo `p`; then `f` has no root in `Q_p`.
fn no_roots_mod_p(f: &[Rational], p: u64) -> bool {
    if p > 1 << 20 {
        return false;
    }
    let lcm = f.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = f.iter().map(|c| (c * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    let bp = BigInt::from(p);
    let res: Vec<u64> = ints.iter().map(|c| (c / &g).mod_floor(&bp).to_u64().unwrap()).collect();
    if *res.last().unwrap() == 0 {
        return false;
    }
    (0..p).all(|x| res.iter().rev().fold(0u64, |acc, c| (mul_mod(acc, x, p) + c) % p) != 0)
}

struct Generic {
    exceptional: BTreeSet<u64>,
    /// A coefficient whose primes could not be determined.
    unfactored: Option<String>,
}

impl Generic {
    fn note(&mut self, v: &Laurent) {
        match v.primes() {
            Ok(ps) => self.exceptional.extend(ps),
            Err(e) => self.unfactored = Some(e.0),
        }
    }
}

impl Domain for Generic {
    type V = Laurent;

    fn constant(&self, q: &Rational) -> Laurent {
        Laurent::constant(q.clone())
    }

    fn scaled_power(&self, c: &Rational, a: i64) -> Laurent {
        Laurent::monomial(c.clone(), a)
    }

    fn add(&self, a: &Laurent, b: &Laurent) -> Option<Laurent> {
        Some(a.add(b))
    }

    fn mul(&self, a: &Laurent, b: &Laurent) -> Option<Laurent> {
        Some(a.mul(b))
    }

    fn neg(&self, a: &Laurent) -> Laurent {
        a.neg()
    }

    fn as_rational(&self, v: &Laurent) -> Option<Rational> {
        v.as_constant()
    }

    fn is_zero(&mut self, v: &Laurent) -> Outcome {
        self.note(v);
        Outcome::from_bool(v.is_zero())
    }

    fn val_nonneg(&mut self, v: &Laurent) -> Outcome {
        self.note(v);
        Outcome::from_bool(v.lowest().is_none_or(|(d, _)| d >= 0))
    }

    fn valuation(&mut self, v: &Laurent) -> Option<Valuation> {
        self.note(v);
        Some(v.lowest().map_or(Valuation::Infinity, |(d, _)| Valuation::Finite(d)))
    }

    fn kth_power(&mut self, k: u32, v: &Laurent) -> Outcome {
        self.note(v);
        self.exceptional.extend(prime_factors_u64(k as u64));
        match v.lowest() {
            None => Outcome::True,
            Some((d, _)) if d.rem_euclid(k as i64) != 0 => Outcome::False,
            Some((_, c)) if is_rational_kth_power(c, k) => Outcome::True,
            Some(_) => Outcome::Varies,
        }
    }

    fn irrational_roots(&mut self, rest: &[Rational], body_is_qf: bool) -> RootSet<Laurent> {
        for c in rest {
            self.note_rational(c);
        }
        match poly::degree(rest) {
            0 => RootSet::Exact(Vec::new()),
            2 if body_is_qf => {
                self.note_rational(&(&rest[1] * &rest[1] - Rational::from_integer(4.into()) * &rest[0] * &rest[2]));
                RootSet::Varies
            }
            _ => RootSet::Unknown,
        }
    }

    fn note_rational(&mut self, q: &Rational) {
        self.note(&Laurent::constant(q.clone()));
    }
}

struct Evaluator<'a, D: Domain> {
    dom: D,
    candidates: &'a [(Rational, i64)],
}

type Env<V> = BTreeMap<String, V>;

fn unsupported(f: &impl std::fmt::Display) -> LocalEvalError {
    LocalEvalError::Unsupported(f.to_string())
}

/// Whether `x` occurs free inside a quantified subformula of `f`.
fn occurs_under_quantifier(f: &Formula, x: &str) -> bool {
    match f {
        Formula::Exists(v, _, b) | Formula::Forall(v, _, b) => v != x && b.free_vars().contains_key(x),
        Formula::Not(g) => occurs_under_quantifier(g, x),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().any(|g| occurs_under_quantifier(g, x)),
        Formula::Implies(a, b) => occurs_under_quantifier(a, x) || occurs_under_quantifier(b, x),
        _ => false,
    }
}

/// Whether `x` occurs in a `V` or power atom outside quantified subformulas.
fn occurs_in_predicate(f: &Formula, x: &str) -> bool {
    match f {
        Formula::Atom { args, .. } => args.iter().any(|t| t.mentions(x)),
        Formula::Not(g) => occurs_in_predicate(g, x),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().any(|g| occurs_in_predicate(g, x)),
        Formula::Implies(a, b) => occurs_in_predicate(a, x) || occurs_in_predicate(b, x),
        _ => false,
    }
}

/// Collects the arguments of `V` atoms mentioning `x`; false if `x` occurs
/// in any other kind of atom.
fn valuation_atoms<'f>(f: &'f Formula, x: &str, out: &mut Vec<&'f Term>) -> bool {
    match f {
        Formula::Atom { rel, index: None, args } if rel == "V" && args.len() == 1 => {
            if args[0].mentions(x) {
                out.push(&args[0]);
            }
            true
        }
        Formula::Atom { args, .. } => !args.iter().any(|t| t.mentions(x)),
        Formula::Eq(a, b) => !a.mentions(x) && !b.mentions(x),
        Formula::Not(g) => valuation_atoms(g, x, out),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().all(|g| valuation_atoms(g, x, out)),
        Formula::Implies(a, b) => valuation_atoms(a, x, out) && valuation_atoms(b, x, out),
        Formula::True | Formula::False => true,
        _ => false,
    }
}

fn qf_equations<'f>(f: &'f Formula, x: &str, out: &mut Vec<(&'f Term, &'f Term)>) {
    match f {
        Formula::Eq(a, b) if a.mentions(x) || b.mentions(x) => out.push((a, b)),
        Formula::Not(g) => qf_equations(g, x, out),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|g| qf_equations(g, x, out)),
        Formula::Implies(a, b) => {
            qf_equations(a, x, out);
            qf_equations(b, x, out);
        }
        _ => {}
    }
}

/// Equations that every witness for `x` must satisfy one of.
fn pinning<'f>(f: &'f Formula, x: &str) -> Option<Vec<(&'f Term, &'f Term)>> {
    match f {
        Formula::Eq(a, b) if a.mentions(x) || b.mentions(x) => Some(vec![(a, b)]),
        Formula::And(xs) => xs.iter().find_map(|g| pinning(g, x)),
        Formula::Or(xs) => {
            let mut all = Vec::new();
            for g in xs {
                all.extend(pinning(g, x)?);
            }
            Some(all)
        }
        _ => None,
    }
}

impl<D: Domain> Evaluator<'_, D> {
    fn term(&mut self, t: &Term, env: &Env<D::V>) -> Result<Option<D::V>, LocalEvalError> {
        Ok(match t {
            Term::Var { name, .. } => Some(env.get(name).cloned().ok_or_else(|| LocalEvalError::UnboundVariable(name.clone()))?),
            Term::Const { name, .. } => match name.as_str() {
                "0" => Some(self.dom.constant(&Rational::zero())),
                "1" => Some(self.dom.constant(&Rational::one())),
                _ => return Err(unsupported(t)),
            },
            Term::Num { value, .. } => Some(self.dom.constant(value)),
            Term::App { func, args, .. } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match self.term(a, env)? {
                        Some(v) => vals.push(v),
                        None => return Ok(None),
                    }
                }
                match (func.as_str(), vals.as_slice()) {
                    ("+", [a, b]) => self.dom.add(a, b),
                    ("-", [a, b]) => self.dom.add(a, &self.dom.neg(b)),
                    ("*", [a, b]) => self.dom.mul(a, b),
                    ("neg", [a]) => Some(self.dom.neg(a)),
                    _ => return Err(unsupported(t)),
                }
            }
        })
    }

    /// The polynomial in `x` given by `a - b`, coefficients lowest first.
    fn poly_in(&mut self, t: &Term, x: &str, env: &Env<D::V>) -> Result<Option<Vec<D::V>>, LocalEvalError> {
        if !t.mentions(x) {
            return Ok(self.term(t, env)?.map(|v| vec![v]));
        }
        Ok(match t {
            Term::Var { .. } => Some(vec![self.dom.constant(&Rational::zero()), self.dom.constant(&Rational::one())]),
            Term::App { func, args, .. } => {
                let mut ps = Vec::new();
                for a in args {
                    match self.poly_in(a, x, env)? {
                        Some(p) => ps.push(p),
                        None => return Ok(None),
                    }
                }
                match (func.as_str(), ps.as_slice()) {
                    ("+", [a, b]) => self.poly_add(a, b),
                    ("-", [a, b]) => {
                        let nb: Vec<D::V> = b.iter().map(|c| self.dom.neg(c)).collect();
                        self.poly_add(a, &nb)
                    }
                    ("*", [a, b]) => self.poly_mul(a, b),
                    ("neg", [a]) => Some(a.iter().map(|c| self.dom.neg(c)).collect()),
                    _ => return Err(unsupported(t)),
                }
            }
            _ => unreachable!("constants do not mention variables"),
        })
    }

    fn poly_add(&self, a: &[D::V], b: &[D::V]) -> Option<Vec<D::V>> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| match (a.get(i), b.get(i)) {
                (Some(x), Some(y)) => self.dom.add(x, y),
                (Some(x), None) | (None, Some(x)) => Some(x.clone()),
                (None, None) => unreachable!(),
            })
            .collect()
    }

    fn poly_mul(&self, a: &[D::V], b: &[D::V]) -> Option<Vec<D::V>> {
        let mut out: Vec<Option<D::V>> = vec![None; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let prod = self.dom.mul(x, y)?;
                out[i + j] = Some(match &out[i + j] {
                    Some(acc) => self.dom.add(acc, &prod)?,
                    None => prod,
                });
            }
        }
        Some(out.into_iter().map(|c| c.unwrap()).collect())
    }

    /// Rational coefficients of the equation `a = b` as a polynomial in `x`,
    /// with vanishing leading terms removed; `Ok(None)` when some coefficient
    /// is not a known rational.
    fn equation(&mut self, a: &Term, b: &Term, x: &str, env: &Env<D::V>) -> Result<Option<Vec<Rational>>, LocalEvalError> {
        let diff = Term::App { func: "-".into(), args: vec![a.clone(), b.clone()], sort: a.sort().clone() };
        let Some(p) = self.poly_in(&diff, x, env)? else { return Ok(None) };
        let mut out = Vec::with_capacity(p.len());
        for c in &p {
            match self.dom.as_rational(c) {
                Some(q) => {
                    self.dom.note_rational(&q);
                    out.push(q)
                }
                None => return Ok(None),
            }
        }
        Ok(Some(poly::trim(out)))
    }

    /// Points that must be tested for `exists x`, or `None` if the roots of
    /// some equation cannot be enumerated. The flag reports whether an
    /// irrational root set was p-dependent (generic mode only).
    fn root_points(&mut self, polys: &[Vec<Rational>], body_is_qf: bool) -> Option<(Vec<D::V>, Vec<Rational>, Outcome)> {
        let mut points = Vec::new();
        let mut rationals = Vec::new();
        let mut extra = Outcome::False;
        for p in polys {
            if p.is_empty() {
                continue;
            }
            let rr = rational_roots(p)?;
            for r in &rr.roots {
                self.dom.note_rational(r);
                if !rationals.contains(r) {
                    rationals.push(r.clone());
                    points.push(self.dom.constant(r));
                }
            }
            match self.dom.irrational_roots(&rr.rest, body_is_qf) {
                RootSet::Exact(vs) => points.extend(vs),
                RootSet::Varies => extra = extra.or(Outcome::Varies),
                RootSet::Unknown => return None,
            }
        }
        Some((points, rationals, extra))
    }

    fn exists(&mut self, x: &str, body: &Formula, env: &Env<D::V>) -> Result<Outcome, LocalEvalError> {
        let at = |this: &mut Self, v: D::V| -> Result<Outcome, LocalEvalError> {
            let mut e = env.clone();
            e.insert(x.to_string(), v);
            this.formula(body, &e)
        };
        let body_is_qf = body.is_quantifier_free();
        let nested = occurs_under_quantifier(body, x);

        if !nested && !occurs_in_predicate(body, x) {
            let mut eqs = Vec::new();
            qf_equations(body, x, &mut eqs);
            let mut polys = Vec::new();
            let mut all_rational = true;
            for (a, b) in eqs {
                match self.equation(a, b, x, env)? {
                    Some(p) => polys.push(p),
                    None => all_rational = false,
                }
            }
            if all_rational {
                if let Some((points, rationals, extra)) = self.root_points(&polys, body_is_qf) {
                    let mut acc = extra;
                    for v in points {
                        acc = acc.or(at(self, v)?);
                        if acc == Outcome::True {
                            return Ok(acc);
                        }
                    }
                    let generic_point = (0i64..).flat_map(|n| [n, -n]).map(|n| Rational::from_integer(n.into())).find(|n| !rationals.contains(n)).unwrap();
                    let v = self.dom.constant(&generic_point);
                    return Ok(acc.or(at(self, v)?));
                }
            }
        }

        if let Some(eqs) = pinning(body, x) {
            let mut polys = Vec::new();
            let mut usable = true;
            for (a, b) in eqs {
                match self.equation(a, b, x, env)? {
                    Some(p) if !p.is_empty() => polys.push(p),
                    _ => usable = false,
                }
            }
            if usable {
                if let Some((points, _, extra)) = self.root_points(&polys, body_is_qf) {
                    let mut acc = extra;
                    for v in points {
                        acc = acc.or(at(self, v)?);
                    }
                    return Ok(acc);
                }
            }
        }

        if body_is_qf {
            if let Some(points) = self.valuation_points(body, x, env)? {
                let mut acc = Outcome::False;
                for v in points {
                    acc = acc.or(at(self, v)?);
                }
                return Ok(acc);
            }
        }

        for (c, a) in self.candidates {
            let v = if *a == 0 { self.dom.constant(c) } else { self.dom.scaled_power(c, *a) };
            if at(self, v)? == Outcome::True {
                return Ok(Outcome::True);
            }
        }
        Ok(Outcome::Unknown)
    }

    /// When `x` occurs only in atoms `V(c x^k)`, the body depends on `v(x)`
    /// alone, and `V(c x^k)` holds exactly for `v(x) >= -v(c)/k`. One point
    /// per interval between thresholds, plus `x = 0`, decides `exists x`.
    fn valuation_points(&mut self, body: &Formula, x: &str, env: &Env<D::V>) -> Result<Option<Vec<D::V>>, LocalEvalError> {
        let mut atoms = Vec::new();
        if !valuation_atoms(body, x, &mut atoms) {
            return Ok(None);
        }
        let mut thresholds = Vec::new();
        for t in atoms {
            let Some(poly) = self.poly_in(t, x, env)? else { return Ok(None) };
            let mut mono = None;
            for (k, c) in poly.iter().enumerate() {
                match self.dom.valuation(c) {
                    None => return Ok(None),
                    Some(Valuation::Infinity) => {}
                    Some(Valuation::Finite(v)) if mono.is_none() && k > 0 => mono = Some((v, k as i64)),
                    Some(Valuation::Finite(_)) => return Ok(None),
                }
            }
            let Some((v, k)) = mono else { return Ok(None) };
            thresholds.push((-v).div_euclid(k) + i64::from((-v).rem_euclid(k) != 0));
        }
        let Some(&low) = thresholds.iter().min() else { return Ok(None) };
        let mut exps: Vec<i64> = thresholds;
        exps.push(low - 1);
        exps.sort_unstable();
        exps.dedup();
        let mut points = vec![self.dom.constant(&Rational::zero())];
        points.extend(exps.into_iter().map(|e| self.dom.scaled_power(&Rational::one(), e)));
        Ok(Some(points))
    }

    fn formula(&mut self, f: &Formula, env: &Env<D::V>) -> Result<Outcome, LocalEvalError> {
        Ok(match f {
            Formula::True => Outcome::True,
            Formula::False => Outcome::False,
            Formula::Eq(a, b) => {
                let diff = Term::App { func: "-".into(), args: vec![a.clone(), b.clone()], sort: a.sort().clone() };
                match self.term(&diff, env)? {
                    Some(v) => self.dom.is_zero(&v),
                    None => Outcome::Unknown,
                }
            }
            Formula::Atom { rel, index, args } => {
                let [t] = args.as_slice() else { return Err(unsupported(f)) };
                let Some(v) = self.term(t, env)? else { return Ok(Outcome::Unknown) };
                match (rel.as_str(), index) {
                    ("V", None) => self.dom.val_nonneg(&v),
                    ("pow", Some(k)) if *k >= 1 => self.dom.kth_power(*k, &v),
                    _ => return Err(unsupported(f)),
                }
            }
            Formula::Not(g) => self.formula(g, env)?.not(),
            Formula::And(xs) => {
                let mut acc = Outcome::True;
                for g in xs {
                    acc = acc.and(self.formula(g, env)?);
                    if acc == Outcome::False {
                        break;
                    }
                }
                acc
            }
            Formula::Or(xs) => {
                let mut acc = Outcome::False;
                for g in xs {
                    acc = acc.or(self.formula(g, env)?);
                    if acc == Outcome::True {
                        break;
                    }
                }
                acc
            }
            Formula::Implies(a, b) => self.formula(a, env)?.not().or(self.formula(b, env)?),
            Formula::Exists(x, _, body) => self.exists(x, body, env)?,
            Formula::Forall(x, _, body) => self.exists(x, &Formula::not((**body).clone()), env)?.not(),
            Formula::Bool(_) => return Err(unsupported(f)),
        })
    }
}

/// Evaluates a ring formula in `Q_p` at rational values of its free variables.
pub fn eval_at_prime(f: &Formula, p: Prime, env: &BTreeMap<String, Rational>, cfg: &SearchConfig) -> Result<Truth, LocalEvalError> {
    let candidates = cfg.candidates();
    let mut ev = Evaluator { dom: AtPrime { p }, candidates: &candidates };
    let env: Env<PVal> = env.iter().map(|(k, v)| (k.clone(), PVal::Rat(v.clone()))).collect();
    Ok(ev.formula(f, &env)?.to_truth())
}

/// The answer at a generic prime together with the primes where it may differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericOutcome {
    pub outcome: Outcome,
    /// Outside this set, [`eval_at_prime`] returns `outcome` whenever the
    /// latter is `True` or `False`, and is determinate when it is `Varies`.
    pub exceptional: BTreeSet<u64>,
}

/// Evaluates a ring formula at a symbolic prime, with the free variables
/// bound to rationals independent of the prime.
pub fn eval_generic(f: &Formula, env: &BTreeMap<String, Rational>, cfg: &SearchConfig) -> Result<GenericOutcome, LocalEvalError> {
    let candidates = cfg.candidates();
    let mut ev = Evaluator { dom: Generic { exceptional: BTreeSet::new(), unfactored: None }, candidates: &candidates };
    let env: Env<Laurent> = env.iter().map(|(k, v)| (k.clone(), Laurent::constant(v.clone()))).collect();
    for v in env.values() {
        ev.dom.note(v);
    }
    let outcome = ev.formula(f, &env)?;
    if let Some(n) = ev.dom.unfactored {
        return Err(LocalEvalError::Unfactored(n));
    }
    Ok(GenericOutcome { outcome, exceptional: ev.dom.exceptional })
}

#[cfg(test)]
mod tests {
    use super::super::rat;
    use super::*;
    use crate::logic_core::{parse_formula, Signature};

    fn ring(text: &str) -> Formula {
        parse_formula(text, &Signature::ring()).unwrap()
    }

    fn at(text: &str, p: u64) -> Truth {
        eval_at_prime(&ring(text), Prime::new(p).unwrap(), &BTreeMap::new(), &SearchConfig::default()).unwrap()
    }

    fn generic(text: &str) -> GenericOutcome {
        eval_generic(&ring(text), &BTreeMap::new(), &SearchConfig::default()).unwrap()
    }

    #[test]
    fn quantifier_free_atoms() {
        assert_eq!(at("(V (* 1/6 1))", 5), Truth::True);
        assert_eq!(at("(V 1/6)", 3), Truth::False);
        assert_eq!(at("(pow 2 2)", 7), Truth::True);
        assert_eq!(at("(pow 2 2)", 5), Truth::False);
    }

    #[test]
    fn nontrivial_idempotents_never_exist_locally() {
        let s = "(exists (e field) (and (= (* e e) e) (not (= e 0)) (not (= e 1))))";
        for p in [2, 3, 5, 7, 11, 13] {
            assert_eq!(at(s, p), Truth::False);
        }
        assert_eq!(generic(s).outcome, Outcome::False);
    }

    #[test]
    fn square_roots_of_minus_one() {
        let s = "(exists (x field) (= (* x x) -1))";
        for p in [2u64, 3, 5, 7, 11, 13, 17, 29] {
            let expected = p % 4 == 1;
            assert_eq!(at(s, p), Truth::from_bool(expected), "p = {p}");
        }
        assert_eq!(generic(s).outcome, Outcome::Varies);
        // the roots are units, checked through the p-adic approximation
        let integral = "(exists (x field) (and (= (* x x) -1) (V x)))";
        assert_eq!(at(integral, 5), Truth::True);
        assert_eq!(at(integral, 3), Truth::False);
        let square_root_is_square = "(exists (x field) (and (= (* x x) -1) (pow 2 x)))";
        // -1 is a fourth power mod p exactly when p = 1 mod 8
        assert_eq!(at(square_root_is_square, 17), Truth::True);
        assert_eq!(at(square_root_is_square, 13), Truth::False);
    }

    #[test]
    fn universal_unit() {
        let s = "(exists (x field) (forall (y field) (= (* x y) y)))";
        for p in [2, 3, 5] {
            assert_eq!(at(s, p), Truth::True);
        }
        assert_eq!(generic(s).outcome, Outcome::True);
    }

    #[test]
    fn elements_outside_the_valuation_ring() {
        let s = "(exists (x field) (not (V x)))";
        assert_eq!(at(s, 7), Truth::True);
        assert_eq!(generic(s).outcome, Outcome::True);
        let all_integral = "(forall (x field) (V x))";
        assert_eq!(generic(all_integral).outcome, Outcome::False);
    }

    #[test]
    fn generic_power_atom_reports_exceptions() {
        let mut env = BTreeMap::new();
        env.insert("a".to_string(), rat(4, 9));
        let g = eval_generic(&ring("(pow 2 a)"), &env, &SearchConfig::default()).unwrap();
        assert_eq!(g.outcome, Outcome::True);
        assert_eq!(g.exceptional, [2, 3].into_iter().collect());
        env.insert("a".to_string(), rat(2, 1));
        assert_eq!(eval_generic(&ring("(pow 2 a)"), &env, &SearchConfig::default()).unwrap().outcome, Outcome::Varies);
    }

    #[test]
    fn generic_agrees_with_primes_outside_exceptions() {
        let sentences = [
            "(exists (x field) (and (= (* x x) 4) (not (= x 2))))",
            "(forall (x field) (implies (= (* x x) x) (or (= x 0) (= x 1))))",
            "(exists (x field) (and (V x) (not (V (* x 1/3)))))",
            "(exists (x field) (= (* 3 x) 1))",
            "(exists (x field) (and (= (* x x) 9/4) (V x)))",
        ];
        for s in sentences {
            let g = generic(s);
            for p in crate::primes::primes_up_to(60) {
                if g.exceptional.contains(&p) {
                    continue;
                }
                let t = at(s, p);
                match g.outcome {
                    Outcome::True => assert_eq!(t, Truth::True, "{s} at {p}"),
                    Outcome::False => assert_eq!(t, Truth::False, "{s} at {p}"),
                    Outcome::Varies => assert_ne!(t, Truth::Indeterminate),
                    Outcome::Unknown => {}
                }
            }
        }
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let err = eval_at_prime(&ring("(V x)"), Prime::new(5).unwrap(), &BTreeMap::new(), &SearchConfig::default());
        assert!(matches!(err, Err(LocalEvalError::UnboundVariable(_))));
    }
}
