//! End-to-end checks of the definition language against independent
//! oracles.

mod common;

use std::rc::Rc;

use coind_core::coterm::{bisimilar_to_depth, stream_signature, MemoBudget};
use coind_core::extnat::Fin;
use coind_core::prodfun::{check_productivity, ProductivityStatus};
use coind_core::streamlang::{
    builtin_library, check_guarded, derive_pf, evaluate_prefix, parse_defs, stream_coterm,
    EvalError,
};

#[test]
fn hamming_prefix_matches_the_smooth_number_oracle() {
    let sys = Rc::new(builtin_library());
    let got = evaluate_prefix(&sys, "H", 12, 256).unwrap();
    assert_eq!(got, common::five_smooth(12));
    assert_eq!(got, vec![1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16]);
}

#[test]
fn nested_stream_prefix_matches_the_index_oracle() {
    let sys = Rc::new(builtin_library());
    assert_eq!(evaluate_prefix(&sys, "D", 3, 64).unwrap(), vec![0, 1, 1]);
    let got = evaluate_prefix(&sys, "D", 16, 256).unwrap();
    assert_eq!(got, common::d_index_oracle(16));
}

#[test]
fn guardedness_matches_the_expected_split() {
    let sys = builtin_library();
    let g = check_guarded(&sys);
    for name in ["even", "zip", "add", "merge", "mul", "subst"] {
        assert!(g[name], "{name} should be guarded");
    }
    assert!(!g["D"]);
    assert!(!g["H"]);
}

#[test]
fn productivity_verdicts_for_the_library() {
    let sys = builtin_library();
    let derived = derive_pf(&sys).unwrap();
    for name in ["D", "H"] {
        let v = check_productivity(&derived.prefixes[name], &derived.system, 64, 256).unwrap();
        assert_eq!(
            v.status,
            ProductivityStatus::ProductiveVerified,
            "{name}"
        );
    }
}

#[test]
fn consuming_counterexample_has_a_witness() {
    let sys = parse_defs("f t = f (tl t)\n").unwrap();
    let derived = derive_pf(&sys).unwrap();
    let v = check_productivity(&derived.prefixes["f"], &derived.system, 64, 256).unwrap();
    match v.status {
        ProductivityStatus::NotProductive { witness } => assert_eq!(witness, 0),
        other => panic!("expected a witness, got {other:?}"),
    }
}

#[test]
fn derived_tables_match_the_closed_forms() {
    let sys = builtin_library();
    let derived = derive_pf(&sys).unwrap();
    let mut reqs = Vec::new();
    let mut expect = Vec::new();
    for n in 0..=16u64 {
        reqs.push(("even".to_string(), vec![Fin(n)]));
        expect.push(Fin(n.div_ceil(2)));
        for m in 0..=16u64 {
            reqs.push(("zip".to_string(), vec![Fin(n), Fin(m)]));
            expect.push(Fin((2 * n).min(2 * m + 1)));
            reqs.push(("add".to_string(), vec![Fin(n), Fin(m)]));
            expect.push(Fin(n.min(m)));
            reqs.push(("merge".to_string(), vec![Fin(n), Fin(m)]));
            expect.push(Fin(n.min(m)));
            reqs.push(("subst".to_string(), vec![Fin(n), Fin(m)]));
            expect.push(Fin(n.min(m)));
        }
    }
    let vals = derived.system.solve_batch(&reqs, 256).unwrap();
    for ((req, want), got) in reqs.iter().zip(&expect).zip(&vals) {
        assert!(got.is_exact(), "{req:?}");
        assert_eq!(got.value, *want, "{req:?}");
    }
}

/// zip(even(t), even(tl(t))) = t, checked as bounded bisimilarity of
/// coterms built from generated eventually-periodic streams.
#[test]
fn zip_even_identity_on_seeded_streams() {
    use rand::{Rng, SeedableRng};
    let sig = stream_signature();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..25 {
        let plen = rng.gen_range(0..4);
        let clen = rng.gen_range(1..5);
        let prefix: Vec<i64> = (0..plen).map(|_| rng.gen_range(-9..10)).collect();
        let cycle: Vec<i64> = (0..clen).map(|_| rng.gen_range(-9..10)).collect();

        let mut src = String::from(
            "even (x : y : t) = x : even t\nzip (x : t) s = x : zip s t\n",
        );
        let mut chain = String::from("scyc");
        for v in prefix.iter().rev() {
            chain = format!("{v} : {chain}");
        }
        src.push_str(&format!("s0 = {chain}\n"));
        let mut cyc = String::from("scyc");
        for v in cycle.iter().rev() {
            cyc = format!("{v} : {cyc}");
        }
        src.push_str(&format!("scyc = {cyc}\n"));
        src.push_str("goal = zip (even s0) (even (tl s0))\n");

        let sys = Rc::new(parse_defs(&src).unwrap());
        let goal = stream_coterm(&sys, "goal", &sig, MemoBudget::unbounded(), 512).unwrap();
        let direct = coind_core::coterm::periodic_stream(
            &sig,
            MemoBudget::unbounded(),
            prefix.clone(),
            cycle.clone(),
        );
        assert!(
            bisimilar_to_depth(&goal, &direct, 64).unwrap(),
            "case {case}: prefix {prefix:?} cycle {cycle:?}"
        );
    }
}

#[test]
fn insufficient_iterations_carries_the_partial_result() {
    let sys = Rc::new(parse_defs("f t = f (tl t)\nbad = f bad\n").unwrap());
    match evaluate_prefix(&sys, "bad", 1, 32) {
        Err(EvalError::InsufficientIterations { partial, .. }) => {
            assert!(partial.is_bot());
        }
        other => panic!("expected insufficient iterations, got {other:?}"),
    }
}
