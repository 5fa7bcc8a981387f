//! Acceptance suite: one status line per criterion. The process fails when
//! any status differs from `EXPECTED`.

use afv_core::boolean_engine::{ba_decide, ba_eval, ba_qe, BEnv, PrimeSet, Truth};
use afv_core::fv_transform::{check_localization, decide_sentence, eval_product_qf, run_corpus, SearchBounds, Structure};
use afv_core::hyperfields::{check_hypergroup_axioms, hyper_add, project, tplus_kras, ClassSet, HClass, HyperCtx, DEFAULT_THETA_L};
use afv_core::local_fields::{eval_at_prime, rat, tplus, SearchConfig};
use afv_core::logic_core::{parse_formula, Formula, Signature};
use afv_core::par::Exec;
use afv_core::primes::{primes_up_to, Prime};
use afv_core::residue_interp::check_ring_iso;
use afv_core::restricted_products::FiniteAdele;
use afv_core::sweeps::{check_theta_kras, check_tplus_projection};
use afv_core::value_monoid::{check_bbeta, check_stalk_lemma, linear_order_witness, random_element, Version};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

const SEED: u64 = 20_260_101;

const HYPER_PRIMES: [u64; 3] = [2, 3, 5];
const HYPER_LEVELS: [u32; 2] = [1, 2];
const HYPER_GAMMA: i64 = 4;
const ASSOC_SAMPLES: usize = 1000;
const AXIOM_BUDGET: Duration = Duration::from_secs(60);

const ORACLE_MIN_PAIRS: usize = 200;
const ORACLE_MAX_PAIRS: usize = 20_000;
const ORACLE_HEIGHT: i64 = 1000;

const THETA_PRIMES: [u64; 4] = [2, 3, 5, 7];
const THETA_LEVELS: [u32; 3] = [1, 2, 3];
const THETA_GAMMA: i64 = 6;
const THETA_BUDGET: Duration = Duration::from_secs(300);

const TPLUS_SAMPLES: usize = 500;
const TPLUS_HEIGHT: i64 = 1000;

const ISO_LEVELS: [u32; 3] = [1, 2, 3];
const ISO_GAMMA: i64 = 4;

const STALK_BOUND: u64 = 30;
const CORPUS_MIN: usize = 20;
const CORPUS_EXCEPTION_PRIME_MAX: u64 = 13;
const CORPUS_HEIGHT_MAX: u64 = 10;
const QE_PRIME_BOUND: u64 = 30;
const MONOID_SAMPLES: usize = 1000;
const BBETA_PRIMES: [u64; 4] = [2, 3, 5, 7];
const LOCALIZE_FORMS: usize = 10;
const LOCALIZE_POINTS: usize = 100;

/// Expected status per criterion. The tplus biconditional fails for odd
/// primes in the image direction; see the counterexample printed for it.
const EXPECTED: [bool; 12] = [true, true, true, false, true, true, true, true, true, true, true, true];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ctx(p: u64, level: u32) -> HyperCtx {
    HyperCtx::new(Prime::new(p).unwrap(), level).unwrap()
}

fn grid(primes: &[u64], levels: &[u32]) -> Vec<HyperCtx> {
    primes.iter().flat_map(|&p| levels.iter().map(move |&l| ctx(p, l))).collect()
}

fn hyper_axioms() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut cells = 0;
    for c in grid(&HYPER_PRIMES, &HYPER_LEVELS) {
        let r = check_hypergroup_axioms(&c, HYPER_GAMMA, ASSOC_SAMPLES, SEED, Exec::Parallel);
        cells += 1;
        for check in &r.checks {
            if let Some(ce) = &check.counterexample {
                bad.push(format!("p={} l={} {}: {ce}", c.p(), c.level, check.name));
            }
        }
    }
    let t = start.elapsed();
    let detail = format!("cells={cells} gamma<={HYPER_GAMMA} assoc_samples={ASSOC_SAMPLES} failures={} time={:.1}s budget={}s {}", bad.len(), t.as_secs_f64(), AXIOM_BUDGET.as_secs(), bad.first().cloned().unwrap_or_default());
    outcome(bad.is_empty() && t < AXIOM_BUDGET, detail)
}

fn mod_inverse(a: i128, m: i128) -> i128 {
    let (mut r0, mut r1, mut s0, mut s1) = (a.rem_euclid(m), m, 1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    assert_eq!(r0, 1, "not invertible");
    s0.rem_euclid(m)
}

/// A representative `p^gamma * n / d` of the class, as `(gamma, n, d)`.
fn representative(gamma: i64, u: u64, p: i128, modulus: i128, rng: &mut ChaCha8Rng) -> (i64, i128, i128) {
    let d = loop {
        let d = rng.gen_range(1..=ORACLE_HEIGHT as i128);
        if d % p != 0 {
            break d;
        }
    };
    let r = (u as i128 * d).rem_euclid(modulus);
    let kmax = (ORACLE_HEIGHT as i128 - r) / modulus;
    let kmin = -(ORACLE_HEIGHT as i128 + r) / modulus;
    (gamma, r + rng.gen_range(kmin..=kmax) * modulus, d)
}

/// Class of `p^a n1/d1 + p^b n2/d2` computed in machine integers.
fn sum_class(x: (i64, i128, i128), y: (i64, i128, i128), p: i128, modulus: i128) -> HClass {
    let m = x.0.min(y.0);
    let n = p.pow((x.0 - m) as u32) * x.1 * y.2 + p.pow((y.0 - m) as u32) * y.1 * x.2;
    if n == 0 {
        return HClass::Zero;
    }
    let (mut n, mut v) = (n, 0i64);
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    let u = (n.rem_euclid(modulus) * mod_inverse(x.2 * y.2, modulus)).rem_euclid(modulus);
    HClass::Cls { gamma: m + v, u: u as u64 }
}

fn sampled_pair(x: HClass, y: HClass, c: &HyperCtx, seed: u64) -> Option<String> {
    let (HClass::Cls { gamma: a, u }, HClass::Cls { gamma: b, u: w }) = (x, y) else { return None };
    let (p, modulus) = (c.p() as i128, c.modulus() as i128);
    let closed = hyper_add(x, y, c);
    let mut wanted: BTreeSet<HClass> = match closed {
        ClassSet::Ball { gamma_min } => c.units().into_iter().map(|u| HClass::Cls { gamma: gamma_min, u }).collect(),
        other => other.members(c).unwrap().into_iter().collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..ORACLE_MAX_PAIRS {
        let s = sum_class(representative(a, u, p, modulus, &mut rng), representative(b, w, p, modulus, &mut rng), p, modulus);
        if !closed.contains(s, c) {
            return Some(format!("{x} + {y}: sampled {s} outside {closed}"));
        }
        wanted.remove(&s);
        if wanted.is_empty() && i + 1 >= ORACLE_MIN_PAIRS {
            return None;
        }
    }
    Some(format!("{x} + {y}: {} members of {closed} never sampled, e.g. {}", wanted.len(), wanted.first().unwrap()))
}

fn hyper_add_oracle() -> Outcome {
    let mut bad = Vec::new();
    let mut pairs = 0;
    for c in grid(&HYPER_PRIMES, &HYPER_LEVELS) {
        let classes: Vec<HClass> = c.classes(HYPER_GAMMA).into_iter().filter(|x| !x.is_zero()).collect();
        let all: Vec<(HClass, HClass)> = classes.iter().flat_map(|&x| classes.iter().map(move |&y| (x, y))).collect();
        pairs += all.len();
        let idx: Vec<usize> = (0..all.len()).collect();
        bad.extend(Exec::Parallel.map(&idx, |&i| sampled_pair(all[i].0, all[i].1, &c, SEED ^ (i as u64) << 8 ^ c.p() << 40 ^ (c.level as u64) << 48)).into_iter().flatten());
    }
    outcome(bad.is_empty(), format!("class_pairs={pairs} min_reps={ORACLE_MIN_PAIRS} height={ORACLE_HEIGHT} discrepancies={} {}", bad.len(), bad.first().cloned().unwrap_or_default()))
}

fn theta() -> Outcome {
    let start = Instant::now();
    let (mut checked, mut failures, mut first) = (0, 0, None);
    for c in grid(&THETA_PRIMES, &THETA_LEVELS) {
        let r = check_theta_kras(&c, THETA_GAMMA, DEFAULT_THETA_L, Exec::Parallel);
        checked += r.checked;
        failures += r.failures;
        first = first.or(r.counterexamples.first().map(|s| format!("p={} l={} {s}", c.p(), c.level)));
    }
    let t = start.elapsed();
    let small_l: usize = grid(&THETA_PRIMES, &THETA_LEVELS).iter().map(|c| check_theta_kras(c, THETA_GAMMA, 2, Exec::Parallel).failures).sum();
    let detail = format!(
        "classes={checked} exponent={DEFAULT_THETA_L} failures={failures} time={:.1}s budget={}s exponent_2_failures={small_l} {}",
        t.as_secs_f64(),
        THETA_BUDGET.as_secs(),
        first.unwrap_or_default()
    );
    outcome(failures == 0 && t < THETA_BUDGET, detail)
}

fn tplus_biconditional() -> Outcome {
    let (mut image, mut lift, mut first) = (0, 0, None);
    for (i, c) in grid(&THETA_PRIMES, &THETA_LEVELS).iter().enumerate() {
        let r = check_tplus_projection(c, TPLUS_SAMPLES, TPLUS_HEIGHT, SEED + i as u64, Exec::Parallel);
        image += r.image_failures;
        lift += r.lift_failures;
        first = first.or(r.counterexamples.first().map(|s| format!("p={} l={} {s}", c.p(), c.level)));
    }
    // hand-checked instance: 1 + 4*1 = 5 is not a square in Q_5
    let c5 = ctx(5, 1);
    let hand = tplus(&rat(1, 1), Prime::new(5).unwrap()) && !tplus_kras(project(&rat(1, 1), &c5), &c5);
    outcome(image == 0 && lift == 0, format!("samples_per_cell={TPLUS_SAMPLES} image_failures={image} lift_failures={lift} x=1_at_p=5_differs={hand} {}", first.unwrap_or_default()))
}

fn residue_iso() -> Outcome {
    let mut bad = Vec::new();
    let mut classes = 0;
    for c in grid(&HYPER_PRIMES, &ISO_LEVELS) {
        let r = check_ring_iso(&c, ISO_GAMMA, Exec::Parallel);
        classes += r.classes_checked;
        bad.extend(r.failures.iter().map(|f| format!("p={} l={} {f}", c.p(), c.level)));
    }
    outcome(bad.is_empty(), format!("cells=9 classes={classes} failures={} {}", bad.len(), bad.first().cloned().unwrap_or_default()))
}

fn ring(text: &str) -> Formula {
    parse_formula(text, &Signature::ring()).unwrap()
}

fn idempotent_sanity() -> Outcome {
    let search = SearchConfig::default();
    let phi = ring("(exists (e field) (and (= (* e e) e) (not (= e 0)) (not (= e 1))))");
    let adeles = decide_sentence(&phi, Structure::Adeles, &search).map(|(_, ev)| ev.truth);
    let stalks: Vec<(u64, Result<Truth, String>)> = primes_up_to(STALK_BOUND).into_iter().map(|p| (p, eval_at_prime(&phi, Prime::new(p).unwrap(), &BTreeMap::new(), &search).map_err(|e| e.to_string()))).collect();
    let stalks_false = stalks.iter().all(|(_, t)| *t == Ok(Truth::False));
    let e = FiniteAdele::idempotent(&PrimeSet::finite([2]).unwrap()).unwrap();
    let direct = e.mul(&e) == e && e != FiniteAdele::zero() && e != FiniteAdele::one();
    let body = ring("(and (= (* e e) e) (not (= e 0)) (not (= e 1)))");
    let via_values = eval_product_qf(&body, &BTreeMap::from([("e".to_string(), e)]), &search);
    let pass = adeles == Ok(Truth::True) && stalks_false && direct && via_values == Ok(Truth::True);
    outcome(pass, format!("adeles={adeles:?} stalks_false(p<{STALK_BOUND})={stalks_false} witness_e2_direct={direct} witness_e2_boolean_values={via_values:?}"))
}

fn corpus() -> Outcome {
    let bounds = SearchBounds::default();
    let bounds_ok = bounds.exception_primes.iter().all(|&p| p <= CORPUS_EXCEPTION_PRIME_MAX) && bounds.height <= CORPUS_HEIGHT_MAX;
    let r = run_corpus(&SearchConfig::default(), Exec::Parallel);
    let contradictions = r.rows.iter().filter(|row| !row.search_consistent()).count();
    let wrong: Vec<&str> = r.rows.iter().filter(|row| !row.correct()).map(|row| row.entry.name).collect();
    let pass = r.rows.len() >= CORPUS_MIN && wrong.is_empty() && contradictions == 0 && bounds_ok;
    outcome(pass, format!("sentences={} correct={} search_contradictions={contradictions} search_bounds_ok={bounds_ok} wrong={wrong:?}", r.rows.len(), r.correct()))
}

/// Sentences of the powerset of an infinite set with Fin and C_j.
const BA_BENCHMARK: [(&str, bool); 15] = [
    ("(exists (x bool) (and (fin x) (cj 2 x)))", true),
    ("(exists (x bool) (and (cj 3 x) (fin x)))", true),
    ("(forall (x bool) (implies (cj 1 x) (fin x)))", false),
    ("(exists (x bool) (and (fin x) (fin (compl x))))", false),
    ("(exists (x bool) (and (not (fin x)) (not (fin (compl x)))))", true),
    ("(forall (x bool) (or (fin x) (fin (compl x))))", false),
    ("(forall (x bool) (implies (not (= x 0)) (exists (y bool) (and (le y x) (cj 1 y) (not (cj 2 y))))))", true),
    ("(exists (x bool) (and (cj 1 x) (not (cj 2 x)) (not (fin x))))", false),
    ("(forall (x bool) (implies (fin x) (exists (y bool) (and (fin y) (le x y) (not (= x y))))))", true),
    ("(exists (x bool) (forall (y bool) (le y x)))", true),
    ("(exists (x bool) (and (not (= x 0)) (forall (y bool) (le x y))))", false),
    ("(forall (x bool) (forall (y bool) (implies (and (fin x) (fin y)) (fin (join x y)))))", true),
    ("(forall (x bool) (implies (not (fin x)) (exists (y bool) (and (le y x) (not (fin y)) (not (fin (meet x (compl y))))))))", true),
    ("(exists (x bool) (and (cj 2 x) (not (cj 3 x)) (fin (compl x))))", false),
    ("(forall (x bool) (or (cj 5 x) (fin x)))", true),
];

type SetOracle = fn(Option<usize>) -> bool;

/// Formulas in one free variable `s`, with their meaning in terms of the
/// cardinality of `s` (`None` for infinite).
const QE_CASES: [(&str, SetOracle); 10] = [
    ("(exists (y bool) (and (le y s) (cj 1 y) (fin y)))", |n| n != Some(0)),
    ("(exists (y bool) (and (le y s) (cj 3 y)))", |n| n.is_none_or(|k| k >= 3)),
    ("(exists (y bool) (and (le s y) (fin y)))", |n| n.is_some()),
    ("(forall (y bool) (implies (le y s) (fin y)))", |n| n.is_some()),
    ("(exists (y bool) (and (le y s) (not (fin y)) (not (fin (meet s (compl y))))))", |n| n.is_none()),
    ("(forall (y bool) (implies (fin y) (not (le s y))))", |n| n.is_none()),
    ("(exists (y bool) (and (cj 2 (meet s y)) (not (cj 3 (meet s y)))))", |n| n.is_none_or(|k| k >= 2)),
    ("(exists (y bool) (and (le y s) (fin y) (cj 2 y) (not (cj 1 (meet s (compl y))))))", |n| n.is_some_and(|k| k >= 2)),
    ("(forall (y bool) (implies (and (le y s) (cj 1 y)) (cj 2 s)))", |n| n != Some(1)),
    ("(exists (y bool) (and (cj 1 y) (not (cj 2 y)) (le y s) (fin (meet s (compl y)))))", |n| n.is_some_and(|k| k >= 1)),
];

fn boolean_engine() -> Outcome {
    let sig = Signature::boolean();
    let wrong: Vec<usize> = BA_BENCHMARK.iter().enumerate().filter(|(_, (t, truth))| ba_decide(&parse_formula(t, &sig).unwrap()) != Ok(*truth)).map(|(i, _)| i).collect();
    let primes = primes_up_to(QE_PRIME_BOUND);
    let mut envs = Vec::new();
    for mask in 0u32..(1 << primes.len()) {
        let chosen: Vec<u64> = primes.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
        envs.push((PrimeSet::finite(chosen.clone()).unwrap(), Some(chosen.len())));
        envs.push((PrimeSet::cofinite(chosen).unwrap(), None));
    }
    let mut disagreements = Vec::new();
    let mut not_qf = 0;
    for (text, meaning) in QE_CASES {
        let q = ba_qe(&parse_formula(text, &sig).unwrap()).unwrap();
        not_qf += usize::from(!q.is_quantifier_free());
        for (set, card) in &envs {
            let got = ba_eval(&q, &BEnv::default().with_var("s", set.clone()));
            if got != Ok(Truth::from_bool(meaning(*card))) {
                disagreements.push(format!("{text} at {set:?}: {got:?}"));
                break;
            }
        }
    }
    let pass = wrong.is_empty() && not_qf == 0 && disagreements.is_empty();
    outcome(pass, format!("benchmark={} wrong={wrong:?} qe_formulas={} environments={} not_quantifier_free={not_qf} disagreements={} {}", BA_BENCHMARK.len(), QE_CASES.len(), envs.len(), disagreements.len(), disagreements.first().cloned().unwrap_or_default()))
}

fn stalks_and_order() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for v in Version::ALL {
        let r = check_stalk_lemma(v, MONOID_SAMPLES, SEED, Exec::Parallel);
        pass &= r.passed();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let elems: Vec<_> = (0..64).map(|_| random_element(v, &mut rng)).collect();
        let witness = linear_order_witness(&elems);
        // every coordinate of every sampled pair is comparable
        let stalks_linear = elems.iter().all(|x| elems.iter().all(|y| primes_up_to(STALK_BOUND).iter().all(|&p| {
            let m = x.meet(y).at(p);
            m == x.at(p) || m == y.at(p)
        })));
        pass &= witness.is_some() && stalks_linear;
        notes.push(format!("{}: samples={} in_stalk={} failures={} order_witness={} stalks_linear={stalks_linear}", v.name(), r.samples, r.in_stalk, r.stalk_failures.len() + r.equiv_failures.len(), witness.is_some()));
    }
    outcome(pass, notes.join("; "))
}

fn bbeta() -> Outcome {
    match check_bbeta(&BBETA_PRIMES) {
        Ok(r) => {
            let failed: Vec<&str> = r.checks.iter().filter(|c| c.2.is_some()).map(|c| c.0).collect();
            let cases: u64 = r.checks.iter().map(|c| c.1).sum();
            outcome(r.passed(), format!("primes={BBETA_PRIMES:?} elements={} checks={} cases={cases} failed={failed:?}", r.elements, r.checks.len()))
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn localization() -> Outcome {
    match check_localization(LOCALIZE_POINTS, SEED, &SearchConfig::default(), Exec::Parallel) {
        Ok(r) => {
            let dis: usize = r.rows.iter().map(|row| row.disagreements).sum();
            let und: usize = r.rows.iter().map(|row| row.undecided).sum();
            let enough = r.rows.len() == LOCALIZE_FORMS && r.rows.iter().all(|row| row.points >= LOCALIZE_POINTS);
            outcome(r.passed() && enough, format!("forms={} points_per_form={LOCALIZE_POINTS} disagreements={dis} undecided={und}", r.rows.len()))
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

const SUITES: [&str; 10] = ["hyperaxioms", "theta-kras", "residue-iso", "stalk-lemma", "bbeta", "fv-corpus", "localize", "tplus", "hyper-sampling", "monoid-axioms"];

fn run_afv(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_afv")).args(args).output().expect("run afv");
    (out.status.code(), out.stdout)
}

fn determinism() -> Outcome {
    let seed = SEED.to_string();
    let mut differing = Vec::new();
    for s in SUITES {
        let args = ["check", s, "--seed", &seed];
        let a = run_afv(&args);
        let b = run_afv(&args);
        let c = run_afv(&["--sequential", "check", s, "--seed", &seed]);
        if a != b || a != c || a.1.is_empty() {
            differing.push(s);
        }
    }
    outcome(differing.is_empty(), format!("suites={} runs_per_suite=3 differing={differing:?}", SUITES.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("hypergroup axioms", hyper_axioms),
        ("hypersum against sampled representatives", hyper_add_oracle),
        ("valuation subset definition", theta),
        ("tplus lift and image", tplus_biconditional),
        ("residue ring isomorphism", residue_iso),
        ("nontrivial idempotent", idempotent_sanity),
        ("sentence corpus", corpus),
        ("boolean engine", boolean_engine),
        ("stalks and linear order", stalks_and_order),
        ("boolean algebra on supports", bbeta),
        ("localization", localization),
        ("determinism", determinism),
    ];
    let mut mismatches = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let note = if o.pass == EXPECTED[i] { "" } else { " UNEXPECTED" };
        println!("criterion {:>2} {status}{note} [{name}] ({:.1}s) {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        if o.pass != EXPECTED[i] {
            mismatches.push(i + 1);
        }
    }
    let passed = criteria.iter().enumerate().filter(|(i, _)| EXPECTED[*i]).count();
    println!("acceptance: {passed}/12 expected to pass; unexpected statuses: {mismatches:?}");
    if !mismatches.is_empty() {
        std::process::exit(1);
    }
}
