//! The finite-cofinite algebra interpreted in the direct sum: a pair
//! `(x, Zero)` stands for the finite set `x` and `(x, Beta)` for its
//! complement. The flag `Beta` is the atom at 2.

use super::{is_finite_boolean, MVal, MonoidElement, MonoidError};
use crate::boolean_engine::{eval_fin, PrimeSet, Truth};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flag {
    Zero,
    Beta,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BBetaElement {
    x: MonoidElement,
    flag: Flag,
}

impl BBetaElement {
    /// `x` must be a finite supremum of atoms.
    pub fn new(x: MonoidElement, flag: Flag) -> Result<BBetaElement, MonoidError> {
        if !is_finite_boolean(&x)? {
            return Err(MonoidError::NotBoolean(format!("{x} has infinite support")));
        }
        Ok(BBetaElement { x, flag })
    }

    pub fn from_primes(primes: impl IntoIterator<Item = u64>, flag: Flag) -> Result<BBetaElement, MonoidError> {
        BBetaElement::new(MonoidElement::indicator(primes)?, flag)
    }

    pub fn x(&self) -> &MonoidElement {
        &self.x
    }

    pub fn flag(&self) -> Flag {
        self.flag
    }

    pub fn bottom() -> BBetaElement {
        BBetaElement { x: MonoidElement::zero(), flag: Flag::Zero }
    }

    pub fn top() -> BBetaElement {
        BBetaElement { x: MonoidElement::zero(), flag: Flag::Beta }
    }

    fn primes(&self) -> BTreeSet<u64> {
        self.x.support().expect("components have finite support")
    }

    pub fn complement(&self) -> BBetaElement {
        let flag = match self.flag {
            Flag::Zero => Flag::Beta,
            Flag::Beta => Flag::Zero,
        };
        BBetaElement { x: self.x.clone(), flag }
    }

    pub fn meet(&self, o: &BBetaElement) -> BBetaElement {
        match (self.flag, o.flag) {
            (Flag::Zero, Flag::Zero) => BBetaElement { x: self.x.meet(&o.x), flag: Flag::Zero },
            (Flag::Beta, Flag::Beta) => BBetaElement { x: self.x.join(&o.x), flag: Flag::Beta },
            (Flag::Zero, Flag::Beta) => BBetaElement { x: relative_complement(&self.x, &o.x), flag: Flag::Zero },
            (Flag::Beta, Flag::Zero) => o.meet(self),
        }
    }

    pub fn join(&self, o: &BBetaElement) -> BBetaElement {
        self.complement().meet(&o.complement()).complement()
    }

    /// The prime set this element stands for.
    pub fn to_prime_set(&self) -> PrimeSet {
        let ps = self.primes();
        match self.flag {
            Flag::Zero => PrimeSet::Finite(ps.into_iter().collect()),
            Flag::Beta => PrimeSet::Cofinite(ps.into_iter().collect()),
        }
    }
}

impl fmt::Display for BBetaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flag = match self.flag {
            Flag::Zero => "0",
            Flag::Beta => "beta",
        };
        write!(f, "({}, {flag})", self.x)
    }
}

/// The supremum of the atoms below `x` and not below `y`.
fn relative_complement(x: &MonoidElement, y: &MonoidElement) -> MonoidElement {
    let keep = x.exceptions().iter().filter(|(p, v)| **v == MVal::Fin(1) && y.at(**p) != MVal::Fin(1)).map(|(p, _)| *p);
    MonoidElement::indicator(keep).expect("support primes are prime")
}

/// `Fin((x, 0))` iff `Fin(x)`; `Fin((x, beta))` iff not `Fin(x)`.
pub fn bbeta_fin(a: &BBetaElement) -> bool {
    // x always has finite support
    a.flag == Flag::Zero
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BBetaReport {
    pub primes: Vec<u64>,
    pub elements: usize,
    /// `(law, cases checked, first counterexample)`.
    pub checks: Vec<(&'static str, u64, Option<String>)>,
}

impl BBetaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.2.is_none())
    }
}

impl fmt::Display for BBetaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.primes.iter().map(|p| p.to_string()).collect();
        writeln!(f, "cell: supports={{{}}} elements={}", ps.join(","), self.elements)?;
        for (name, n, ce) in &self.checks {
            match ce {
                None => writeln!(f, "  {name}: pass ({n} cases)")?,
                Some(c) => writeln!(f, "  {name}: FAIL ({n} cases) counterexample {c}")?,
            }
        }
        Ok(())
    }
}

fn law<T>(name: &'static str, cases: &[T], bad: impl Fn(&T) -> Option<String>) -> (&'static str, u64, Option<String>) {
    (name, cases.len() as u64, cases.iter().find_map(bad))
}

/// Boolean algebra laws and the finiteness predicate, exhaustively over all
/// elements whose component is supported in `primes`.
pub fn check_bbeta(primes: &[u64]) -> Result<BBetaReport, MonoidError> {
    let mut elems = Vec::new();
    for mask in 0..1u32 << primes.len() {
        let chosen = primes.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| *p);
        let chosen: Vec<u64> = chosen.collect();
        for flag in [Flag::Zero, Flag::Beta] {
            elems.push(BBetaElement::from_primes(chosen.clone(), flag)?);
        }
    }
    let pairs: Vec<(&BBetaElement, &BBetaElement)> = elems.iter().flat_map(|a| elems.iter().map(move |b| (a, b))).collect();
    let triples: Vec<(&BBetaElement, &BBetaElement, &BBetaElement)> = pairs.iter().flat_map(|&(a, b)| elems.iter().map(move |c| (a, b, c))).collect();
    let (bot, top) = (BBetaElement::bottom(), BBetaElement::top());
    let show = |xs: &[&BBetaElement]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");

    let checks = vec![
        law("commutativity", &pairs, |&(a, b)| (a.meet(b) != b.meet(a) || a.join(b) != b.join(a)).then(|| show(&[a, b]))),
        law("associativity", &triples, |&(a, b, c)| {
            (a.meet(&b.meet(c)) != a.meet(b).meet(c) || a.join(&b.join(c)) != a.join(b).join(c)).then(|| show(&[a, b, c]))
        }),
        law("absorption", &pairs, |&(a, b)| (a.meet(&a.join(b)) != *a || a.join(&a.meet(b)) != *a).then(|| show(&[a, b]))),
        law("distributivity", &triples, |&(a, b, c)| {
            (a.meet(&b.join(c)) != a.meet(b).join(&a.meet(c)) || a.join(&b.meet(c)) != a.join(b).meet(&a.join(c))).then(|| show(&[a, b, c]))
        }),
        law("bounds", &elems, |a| (a.meet(&top) != *a || a.join(&bot) != *a).then(|| a.to_string())),
        law("complements", &elems, |a| (a.meet(&a.complement()) != bot || a.join(&a.complement()) != top).then(|| a.to_string())),
        law("set semantics", &pairs, |&(a, b)| {
            let (sa, sb) = (a.to_prime_set(), b.to_prime_set());
            (a.meet(b).to_prime_set() != sa.meet(&sb) || a.join(b).to_prime_set() != sa.join(&sb) || a.complement().to_prime_set() != sa.complement())
                .then(|| show(&[a, b]))
        }),
        law("finiteness flag", &elems, |a| (Truth::from_bool(bbeta_fin(a)) != eval_fin(&a.to_prime_set())).then(|| a.to_string())),
    ];
    Ok(BBetaReport { primes: primes.to_vec(), elements: elems.len(), checks })
}
