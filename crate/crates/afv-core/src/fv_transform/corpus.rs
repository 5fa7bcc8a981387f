//! Sentences with known truth values in the product and in the adeles.

use super::{decide_sentence, witness_search, SearchBounds, SearchOutcome, Structure};
use crate::boolean_engine::Truth;
use crate::local_fields::SearchConfig;
use crate::logic_core::{parse_formula, Signature};
use crate::par::Exec;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub text: &'static str,
    pub structure: Structure,
    pub expected: bool,
}

const fn entry(name: &'static str, structure: Structure, expected: bool, text: &'static str) -> CorpusEntry {
    CorpusEntry { name, text, structure, expected }
}

use Structure::{Adeles, Product};

const ENTRIES: &[CorpusEntry] = &[
    entry("zero-exists", Product, true, "(exists (x field) (= x 0))"),
    entry("idempotent", Adeles, true, "(exists (e field) (and (= (* e e) e) (not (= e 0)) (not (= e 1))))"),
    entry("idempotent", Product, true, "(exists (e field) (and (= (* e e) e) (not (= e 0)) (not (= e 1))))"),
    entry("idempotents-trivial", Adeles, false, "(forall (e field) (implies (= (* e e) e) (or (= e 0) (= e 1))))"),
    entry("sqrt-minus-one", Adeles, false, "(exists (x field) (= (* x x) -1))"),
    entry("sqrt-minus-one", Product, false, "(exists (x field) (= (* x x) -1))"),
    entry("sqrt-two", Adeles, false, "(exists (x field) (= (* x x) 2))"),
    entry("all-integral", Adeles, false, "(forall (x field) (V x))"),
    entry("nonintegral-exists", Product, true, "(exists (x field) (not (V x)))"),
    entry("integral-square-nonintegral", Adeles, false, "(exists (x field) (and (V x) (not (V (* x x)))))"),
    entry("zero-set-finite-nonempty", Adeles, true, "(exists (x field) (and (fin (bv-of (= x 0))) (cj 1 (bv-of (= x 0)))))"),
    entry("zero-set-three", Product, true, "(exists (x field) (and (cj 3 (bv-of (= x 0))) (fin (bv-of (= x 0)))))"),
    entry("restricted", Adeles, true, "(forall (x field) (fin (bv-of (not (V x)))))"),
    entry("restricted", Product, false, "(forall (x field) (fin (bv-of (not (V x)))))"),
    entry("sqrt-two-twice", Adeles, true, "(exists (x field) (cj 2 (bv-of (= (* x x) 2))))"),
    entry("single-support", Adeles, true, "(exists (x field) (and (not (= x 0)) (not (cj 2 (bv-of (not (= x 0)))))))"),
    entry("infinite-coinfinite-zeros", Adeles, true, "(exists (x field) (and (V x) (not (fin (bv-of (= x 0)))) (not (fin (bv-of (not (= x 0)))))))"),
    entry("square-nonintegral", Adeles, true, "(exists (x field) (and (pow 2 x) (not (V x))))"),
    entry("square-integral", Product, true, "(forall (x field) (implies (V (* x x)) (V x)))"),
    entry("nonintegral-square-integral", Product, false, "(exists (x field) (and (not (V x)) (V (* x x))))"),
    entry("five-nonintegral", Adeles, true, "(exists (x field) (cj 5 (bv-of (not (V x)))))"),
    entry("idempotent-four", Product, true, "(exists (x field) (and (cj 4 (bv-of (= (* x x) x))) (not (= x 0))))"),
    entry("boolean-variable", Product, true, "(exists (x field) (exists (z bool) (and (= z (bv-of (= x 0))) (cj 2 z) (fin z))))"),
];

pub fn corpus() -> &'static [CorpusEntry] {
    ENTRIES
}

#[derive(Clone, Debug)]
pub struct CorpusRow {
    pub entry: CorpusEntry,
    pub got: Result<Truth, String>,
    /// Independent check by bounded search, where applicable.
    pub search: Option<SearchOutcome>,
}

impl CorpusRow {
    pub fn correct(&self) -> bool {
        self.got == Ok(Truth::from_bool(self.entry.expected))
    }

    /// The search found nothing, or agrees with the expected value.
    pub fn search_consistent(&self) -> bool {
        match &self.search {
            Some(SearchOutcome::Decided { truth, .. }) => *truth == self.entry.expected,
            _ => true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusReport {
    pub rows: Vec<CorpusRow>,
}

impl CorpusReport {
    pub fn correct(&self) -> usize {
        self.rows.iter().filter(|r| r.correct()).count()
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.correct() && r.search_consistent())
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let got = match &r.got {
                Ok(t) => format!("{t:?}"),
                Err(e) => format!("error: {e}"),
            };
            let search = match &r.search {
                Some(SearchOutcome::Decided { truth, witness }) => format!(" search={truth} {witness:?}"),
                Some(SearchOutcome::Inconclusive { tried }) => format!(" search=inconclusive({tried})"),
                None => String::new(),
            };
            writeln!(f, "{} {:<28} {:<8} expected={} got={}{}", if r.correct() && r.search_consistent() { "ok  " } else { "FAIL" }, r.entry.name, r.entry.structure.name(), r.entry.expected, got, search)?;
        }
        write!(f, "{}/{} decided correctly", self.correct(), self.rows.len())
    }
}

pub fn run_corpus(search: &SearchConfig, exec: Exec) -> CorpusReport {
    let sig = Signature::ring();
    let rows = exec.map(ENTRIES, |e| {
        let phi = parse_formula(e.text, &sig).expect("corpus sentences parse");
        let got = decide_sentence(&phi, e.structure, search).map(|(_, ev)| ev.truth).map_err(|err| err.to_string());
        // candidates lie in both structures, so search applies to each
        let search = witness_search(&phi, &SearchBounds::default(), search, Exec::Sequential).ok();
        CorpusRow { entry: e.clone(), got, search }
    });
    CorpusReport { rows }
}
