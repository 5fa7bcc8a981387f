//! Randomized sweeps over the three versions of the value monoid.

use super::{equiv_at_atom_internal, in_internal_stalk, in_stalk_direct, MVal, MonoidElement, Version};
use crate::par::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

const SAMPLE_PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// A random element with exceptions among the primes up to 13 and values in
/// `-3..=3`, plus `inf` in the totally defined version.
pub fn random_element(version: Version, rng: &mut impl Rng) -> MonoidElement {
    let value = |rng: &mut dyn rand::RngCore, lo: i64| {
        if version == Version::TotallyDefined && rng.gen_ratio(1, 8) {
            MVal::Inf
        } else {
            MVal::Fin(rng.gen_range(lo..=3))
        }
    };
    let default = match version {
        Version::Idelic => MVal::Fin(0),
        _ if rng.gen_bool(0.5) => MVal::Fin(0),
        _ => value(rng, 0),
    };
    let count = rng.gen_range(0..=3);
    let ex: Vec<(u64, MVal)> = (0..count).map(|_| (SAMPLE_PRIMES[rng.gen_range(0..SAMPLE_PRIMES.len())], value(rng, -3))).collect();
    MonoidElement::new(default, ex).expect("sample primes are prime and defaults nonnegative")
}

/// A random element vanishing off `p` or with a single extra coordinate.
fn near_stalk(version: Version, p: u64, rng: &mut impl Rng) -> MonoidElement {
    let mut h = MonoidElement::single(p, MVal::Fin(rng.gen_range(-3..=3))).expect("prime");
    if version == Version::TotallyDefined && rng.gen_ratio(1, 8) {
        h = MonoidElement::single(p, MVal::Inf).expect("prime");
    }
    if rng.gen_bool(0.5) {
        h = h.add(&random_element(version, rng));
    }
    h
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomSweep {
    pub version: Version,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<(&'static str, Option<String>)>,
}

impl AxiomSweep {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1.is_none())
    }
}

impl fmt::Display for AxiomSweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cell: version={} samples={} seed={}", self.version.name(), self.samples, self.seed)?;
        for (name, ce) in &self.checks {
            match ce {
                None => writeln!(f, "  {name}: pass")?,
                Some(c) => writeln!(f, "  {name}: FAIL counterexample {c}")?,
            }
        }
        Ok(())
    }
}

type Law = (&'static str, fn(&MonoidElement, &MonoidElement, &MonoidElement) -> bool);

const LAWS: [Law; 9] = [
    ("additive associativity", |x, y, z| x.add(&y.add(z)) == x.add(y).add(z)),
    ("additive commutativity", |x, y, _| x.add(y) == y.add(x)),
    ("additive identity", |x, _, _| x.add(&MonoidElement::zero()) == *x),
    ("lattice associativity", |x, y, z| x.meet(&y.meet(z)) == x.meet(y).meet(z) && x.join(&y.join(z)) == x.join(y).join(z)),
    ("lattice commutativity", |x, y, _| x.meet(y) == y.meet(x) && x.join(y) == y.join(x)),
    ("absorption", |x, y, _| x.meet(&x.join(y)) == *x && x.join(&x.meet(y)) == *x),
    ("distributivity", |x, y, z| x.meet(&y.join(z)) == x.meet(y).join(&x.meet(z))),
    ("translation invariance", |x, y, z| x.add(&y.meet(z)) == x.add(y).meet(&x.add(z)) && x.add(&y.join(z)) == x.add(y).join(&x.add(z))),
    ("infinity", |x, _, _| {
        let inf = MonoidElement::constant(MVal::Inf).expect("nonnegative");
        inf.add(x) == inf && inf.meet(x) == *x && inf.join(x) == inf
    }),
];

/// Lattice-ordered commutative monoid laws on random triples.
pub fn check_monoid_axioms(version: Version, samples: usize, seed: u64, exec: Exec) -> AxiomSweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[MonoidElement; 3]> = (0..samples).map(|_| [(); 3].map(|_| random_element(version, &mut rng))).collect();
    let laws: Vec<&Law> = LAWS.iter().filter(|(name, _)| *name != "infinity" || version == Version::TotallyDefined).collect();
    let checks = laws
        .into_iter()
        .map(|(name, law)| {
            let found = exec.map(&triples, |[x, y, z]| (!law(x, y, z)).then(|| format!("x = {x}, y = {y}, z = {z}")));
            (*name, found.into_iter().flatten().next())
        })
        .collect();
    AxiomSweep { version, samples, seed, checks }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StalkReport {
    pub version: Version,
    pub samples: usize,
    pub seed: u64,
    pub in_stalk: usize,
    pub stalk_failures: Vec<String>,
    pub equiv_failures: Vec<String>,
}

impl StalkReport {
    pub fn passed(&self) -> bool {
        self.stalk_failures.is_empty() && self.equiv_failures.is_empty()
    }
}

impl fmt::Display for StalkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cell: version={} samples={} seed={} in_stalk={}", self.version.name(), self.samples, self.seed, self.in_stalk)?;
        let status = |v: &[String]| if v.is_empty() { "pass" } else { "FAIL" };
        writeln!(f, "  interval characterization: {}", status(&self.stalk_failures))?;
        for c in &self.stalk_failures {
            writeln!(f, "    counterexample: {c}")?;
        }
        writeln!(f, "  equality at atoms: {}", status(&self.equiv_failures))?;
        for c in &self.equiv_failures {
            writeln!(f, "    counterexample: {c}")?;
        }
        Ok(())
    }
}

const MAX_FAILURES: usize = 10;

/// Compares the interval characterization of stalks and the internal
/// equality at atoms with their coordinate definitions on random samples.
pub fn check_stalk_lemma(version: Version, samples: usize, seed: u64, exec: Exec) -> StalkReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(MonoidElement, MonoidElement, MonoidElement, u64)> = (0..samples)
        .map(|_| {
            let p = SAMPLE_PRIMES[rng.gen_range(0..SAMPLE_PRIMES.len())];
            let h = near_stalk(version, p, &mut rng);
            let g = if rng.gen_bool(0.5) { h.add(&near_stalk(version, SAMPLE_PRIMES[rng.gen_range(0..6)], &mut rng)) } else { random_element(version, &mut rng) };
            (h, g, MonoidElement::atom(p).expect("prime"), p)
        })
        .collect();
    let results = exec.map(&cases, |(h, g, e, p)| {
        let lemma = in_internal_stalk(h, e, version);
        let direct = in_stalk_direct(h, e).expect("atom");
        let stalk = (lemma != Ok(direct)).then(|| format!("h = {h}, atom at {p}: interval {lemma:?}, direct {direct}"));
        let internal = equiv_at_atom_internal(h, g, e);
        let eq = h.at(*p) == g.at(*p);
        let equiv = (internal != Ok(eq)).then(|| format!("f = {h}, g = {g}, atom at {p}: internal {internal:?}, direct {eq}"));
        (direct, stalk, equiv)
    });
    let in_stalk = results.iter().filter(|r| r.0).count();
    let mut stalk_failures: Vec<String> = results.iter().filter_map(|r| r.1.clone()).collect();
    let mut equiv_failures: Vec<String> = results.iter().filter_map(|r| r.2.clone()).collect();
    stalk_failures.truncate(MAX_FAILURES);
    equiv_failures.truncate(MAX_FAILURES);
    StalkReport { version, samples, seed, in_stalk, stalk_failures, equiv_failures }
}

/// A pair violating `x /\ y = x or x /\ y = y`, if any.
pub fn linear_order_witness(elements: &[MonoidElement]) -> Option<(MonoidElement, MonoidElement)> {
    elements.iter().flat_map(|x| elements.iter().map(move |y| (x, y))).find(|(x, y)| {
        let m = x.meet(y);
        m != **x && m != **y
    }).map(|(x, y)| (x.clone(), y.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axioms_hold_in_every_version() {
        for v in Version::ALL {
            let r = check_monoid_axioms(v, 500, 3, Exec::Parallel);
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn stalk_lemma_holds_in_every_version() {
        for v in Version::ALL {
            let r = check_stalk_lemma(v, 500, 7, Exec::Parallel);
            assert!(r.passed(), "{r}");
            assert!(r.in_stalk > 50 && r.in_stalk < 450, "{r}");
        }
    }

    #[test]
    fn products_are_not_linearly_ordered() {
        let atoms: Vec<MonoidElement> = [2, 3].iter().map(|&p| MonoidElement::atom(p).unwrap()).collect();
        assert!(linear_order_witness(&atoms).is_some());
        let stalk: Vec<MonoidElement> = (-3..=3).map(|k| MonoidElement::single(5, MVal::Fin(k)).unwrap()).collect();
        assert!(linear_order_witness(&stalk).is_none());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = check_stalk_lemma(Version::TotallyDefined, 100, 11, Exec::Parallel);
        let b = check_stalk_lemma(Version::TotallyDefined, 100, 11, Exec::Sequential);
        assert_eq!(a, b);
    }
}
