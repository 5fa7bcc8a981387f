use afv_core::boolean_engine::PrimeSet;
use afv_core::hyperfields::{h_neg, hyper_add, HClass, HyperCtx};
use afv_core::local_fields::{vp, SearchConfig, Valuation};
use afv_core::logic_core::{parse_formula, Rational, Signature};
use afv_core::primes::Prime;
use afv_core::restricted_products::{boolean_value, supp, BoolValueConfig, FiniteAdele};
use afv_core::value_monoid::prod_val;
use num_bigint::BigInt;
use proptest::prelude::*;
use std::collections::BTreeMap;

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn rational(max: i64) -> impl Strategy<Value = Rational> {
    (-max..=max, 1..=max).prop_map(|(n, d)| Rational::new(BigInt::from(n), BigInt::from(d)))
}

/// Mostly small values, with zeros common enough to exercise supports.
fn coordinate() -> impl Strategy<Value = Rational> {
    prop_oneof![1 => Just(Rational::from_integer(0.into())), 3 => rational(30)]
}

fn adele() -> impl Strategy<Value = FiniteAdele> {
    (coordinate(), proptest::collection::btree_map(proptest::sample::select(PRIMES.to_vec()), coordinate(), 0..4))
        .prop_map(|(d, ex)| FiniteAdele::new(d, ex).unwrap())
}

fn prime_set() -> impl Strategy<Value = PrimeSet> {
    (any::<bool>(), proptest::collection::btree_set(proptest::sample::select(PRIMES.to_vec()), 0..5)).prop_map(|(cofinite, s)| {
        if cofinite { PrimeSet::cofinite(s).unwrap() } else { PrimeSet::finite(s).unwrap() }
    })
}

fn args(pairs: &[(&str, &FiniteAdele)]) -> BTreeMap<String, FiniteAdele> {
    pairs.iter().map(|(k, v)| (k.to_string(), (*v).clone())).collect()
}

proptest! {
    #[test]
    fn support_of_product_is_meet(a in adele(), b in adele()) {
        prop_assert_eq!(supp(&a.mul(&b)), supp(&a).meet(&supp(&b)));
    }

    #[test]
    fn idempotents_follow_the_set_operations(s in prime_set(), t in prime_set()) {
        let e = |x: &PrimeSet| FiniteAdele::idempotent(x).unwrap();
        prop_assert_eq!(e(&s.meet(&t)), e(&s).mul(&e(&t)));
        prop_assert_eq!(e(&s.complement()), FiniteAdele::one().sub(&e(&s)));
        prop_assert_eq!(supp(&e(&s)), s.clone());
    }

    #[test]
    fn boolean_value_of_negation_is_complement(a in adele(), b in adele(), which in 0usize..4) {
        let sig = Signature::ring();
        let text = ["(= x 0)", "(V x)", "(= (* x y) (+ x y))", "(V (- (* x x) y))"][which];
        let phi = parse_formula(text, &sig).unwrap();
        let neg = parse_formula(&format!("(not {text})"), &sig).unwrap();
        let env = args(&[("x", &a), ("y", &b)]);
        let cfg = BoolValueConfig::default();
        prop_assert_eq!(boolean_value(&neg, &env, &cfg).unwrap(), boolean_value(&phi, &env, &cfg).unwrap().complement());
    }

    #[test]
    fn product_valuation_is_additive(a in adele(), b in adele()) {
        prop_assert_eq!(prod_val(&a.mul(&b)).unwrap(), prod_val(&a).unwrap().add(&prod_val(&b).unwrap()));
    }

    #[test]
    fn product_valuation_of_sum_dominates_meet(a in adele(), b in adele()) {
        let lower = prod_val(&a).unwrap().meet(&prod_val(&b).unwrap());
        prop_assert!(lower.le(&prod_val(&a.add(&b)).unwrap()));
    }

    #[test]
    fn valuation_is_multiplicative(x in rational(500), y in rational(500), p in proptest::sample::select(PRIMES.to_vec())) {
        let p = Prime::new(p).unwrap();
        let sum = match (vp(&x, p), vp(&y, p)) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinity,
        };
        prop_assert_eq!(vp(&(x * y), p), sum);
    }

    #[test]
    fn prime_sets_satisfy_de_morgan(s in prime_set(), t in prime_set()) {
        prop_assert_eq!(s.meet(&t).complement(), s.complement().join(&t.complement()));
        prop_assert_eq!(s.complement().complement(), s.clone());
        prop_assert!(s.meet(&s.complement()).is_empty().to_bool().unwrap());
    }

    #[test]
    fn hypersum_is_commutative_and_reversible(
        p in proptest::sample::select(vec![2u64, 3, 5]),
        level in 1u32..3,
        picks in proptest::collection::vec(any::<proptest::sample::Index>(), 3),
    ) {
        let ctx = HyperCtx::new(Prime::new(p).unwrap(), level).unwrap();
        let classes = ctx.classes(3);
        let [x, y, z] = [0, 1, 2].map(|i| *picks[i].get(&classes));
        prop_assert_eq!(hyper_add(x, y, &ctx), hyper_add(y, x, &ctx));
        // z in x + y iff x in z - y
        prop_assert_eq!(hyper_add(x, y, &ctx).contains(z, &ctx), hyper_add(z, h_neg(y, &ctx), &ctx).contains(x, &ctx));
        prop_assert!(hyper_add(x, h_neg(x, &ctx), &ctx).contains(HClass::Zero, &ctx));
    }

    #[test]
    fn formulas_print_and_parse_back(which in 0usize..4) {
        let sig = Signature::ring();
        let text = ["(forall (x field) (fin (bv-of (not (V x)))))", "(exists (e field) (and (= (* e e) e) (not (= e 0))))", "(cj 2 (bv-of (= (+ x 1) 0)))", "(le (bv-of (V x)) (bv-of (pow 2 x)))"][which];
        let phi = parse_formula(text, &sig).unwrap();
        prop_assert_eq!(parse_formula(&phi.to_string(), &sig).unwrap(), phi);
    }
}

#[test]
fn one_sixth_is_integral_away_from_two_and_three() {
    let phi = parse_formula("(V x)", &Signature::ring()).unwrap();
    let a = FiniteAdele::new(Rational::new(1.into(), 6.into()), []).unwrap();
    let v = boolean_value(&phi, &args(&[("x", &a)]), &BoolValueConfig { search: SearchConfig::default(), frontier_bound: 100 }).unwrap();
    assert_eq!(v, PrimeSet::cofinite([2, 3]).unwrap());
}
