mod common;

use std::collections::BTreeSet;

use common::ac::{ac_signature, brute_ac_equivalent, brute_match, random_raw, random_subject, scramble, PATTERNS};
use navslice::term::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn topic_sig() -> Signature {
    let mut sig = Signature::new();
    sig.set_literal_sorts(LiteralSorts { nat: Some("Nat".into()), ..Default::default() });
    for n in ["astronomy", "stars", "astrology", "telescopes"] {
        sig.op(n, &[], "Name").unwrap();
    }
    sig.op("#posts", &["Nat"], "Count").unwrap();
    sig.op("topic", &["Name", "Count"], "Topic").unwrap();
    sig.op("topic_info", &["Topic", "Topic", "Topic", "Topic"], "Info").unwrap();
    sig
}

const TOPIC_INFO: &str = "topic_info(topic(astronomy, #posts(520)), topic(stars, #posts(58)), \
                          topic(astrology, #posts(20)), topic(telescopes, #posts(290)))";

#[test]
fn topic_filter_criterion_and_slice() {
    let sig = topic_sig();
    let t = parse_term(TOPIC_INFO, &sig).unwrap();
    let fp = FilterPattern::parse("topic(astro, #posts(?))").unwrap();
    let (slice, crit) = filter_match(&fp, &t);
    let expected: BTreeSet<Position> =
        ["Λ.1.1", "Λ.1.2.1", "Λ.3.1", "Λ.3.2.1"].iter().map(|p| p.parse().unwrap()).collect();
    assert_eq!(crit, expected);
    assert_eq!(
        slice.render(Some(&sig)),
        "topic_info(topic(astronomy, #posts(520)), •, topic(astrology, #posts(20)), •)"
    );
    assert_eq!(t.subterm_at(&"Λ.1.2.1".parse().unwrap()).unwrap().to_string(), "520");
}

#[test]
fn flat_unflat_example() {
    let mut sig = Signature::new();
    sig.ac_op("f", "S", None).unwrap();
    sig.op("a", &[], "S").unwrap();
    sig.op("b", &[], "S").unwrap();
    sig.op("c", &[], "S").unwrap();
    let src = parse_term_raw("f(b, f(f(b, a), c))", &sig).unwrap();
    let (flat, rec) = flatten_recorded(&src, &sig);
    assert_eq!(flat.to_string(), "f(a, b, b, c)");
    assert_eq!(rec.apply(&src).unwrap(), flat);
    for q in flat.positions().into_iter().skip(1) {
        let back = rec.backward(&q).unwrap();
        assert_eq!(src.subterm_at(&back[0]).unwrap(), flat.subterm_at(&q).unwrap());
        assert_eq!(rec.forward(&back[0]), Some(q));
    }

    let tpl = parse_term_raw("f(f(b, c), f(a, b))", &sig).unwrap();
    let (un, urec) = unflatten(&flat, Some(&tpl), &sig).unwrap();
    assert_eq!(un, tpl);
    assert_eq!(urec.apply(&flat).unwrap(), tpl);
    for q in un.positions() {
        let sub = un.subterm_at(&q).unwrap();
        for b in urec.backward(&q).unwrap() {
            if sub.arity() == 0 {
                assert_eq!(flat.subterm_at(&b).unwrap(), sub);
                assert_eq!(urec.forward(&b), Some(q.clone()));
            } else {
                assert!(b.is_root());
            }
        }
    }
    assert_eq!(flatten(&un, &sig), flat);
}

#[test]
fn match_modulo_agrees_with_partition_oracle() {
    let sig = ac_signature();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let patterns: Vec<Term> = PATTERNS.iter().map(|p| parse_term(p, &sig).unwrap()).collect();
    for i in 0..500 {
        let s = random_subject(&mut rng, 5);
        let p = &patterns[i % patterns.len()];
        let got: BTreeSet<Substitution> = match_modulo(p, &s, &sig).into_iter().collect();
        let want = brute_match(p, &s, &sig);
        assert_eq!(got, want, "pattern {p} subject {s}");
    }
}

#[test]
fn views_make_matches_syntactic() {
    let sig = ac_signature();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let patterns: Vec<Term> = PATTERNS.iter().map(|p| parse_term(p, &sig).unwrap()).collect();
    for i in 0..300 {
        let s = random_subject(&mut rng, 4);
        let p = &patterns[i % patterns.len()];
        for m in match_with_views(p, &s, &sig, DEFAULT_MATCH_CAP).unwrap() {
            let view = m.view.apply(&s).unwrap();
            assert_eq!(flatten(&view, &sig), s);
            assert_eq!(match_syntactic(p, &view).as_ref(), Some(&m.subst), "{p} on view {view}");
        }
    }
}

#[test]
fn canonical_equality_agrees_with_brute_equivalence() {
    let sig = ac_signature();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut equal = 0;
    for i in 0..500 {
        let a = random_raw(&mut rng, 3);
        let b = if i % 2 == 0 { scramble(&a, &mut rng) } else { random_raw(&mut rng, 3) };
        let fast = ac_equal(&a, &b, &sig);
        assert_eq!(fast, brute_ac_equivalent(&a, &b), "{a} vs {b}");
        equal += fast as usize;
    }
    assert!(equal >= 250);
}

#[test]
fn match_cap_is_reported() {
    let sig = ac_signature();
    let p = parse_term("u(X:S, Y:S, Z:S)", &sig).unwrap();
    let s = parse_term("u(a, b, c, d, g(a), g(b), g(c), g(d))", &sig).unwrap();
    assert!(matches!(match_with_views(&p, &s, &sig, 256), Err(TermError::MatchCap(256))));
}

#[test]
fn parse_errors_carry_locations() {
    let sig = ac_signature();
    let err = parse_term("g(a,\n  zz)", &sig).unwrap_err().to_string();
    assert!(err.starts_with("2:3"), "{err}");
    assert!(parse_term("g(a", &sig).is_err());
    assert!(parse_term("g(a, b)", &sig).unwrap_err().to_string().contains('g'));
}

#[test]
fn string_literals_round_trip() {
    let mut sig = Signature::new();
    sig.set_literal_sorts(LiteralSorts { string: Some("Str".into()), ..Default::default() });
    sig.op("k", &["Str"], "S").unwrap();
    let t = parse_term(r#"k("say \"hi\"")"#, &sig).unwrap();
    assert_eq!(parse_term(&t.to_string(), &sig).unwrap(), t);
}

proptest! {
    #[test]
    fn flatten_is_idempotent_and_invariant(seed in any::<u64>()) {
        let sig = ac_signature();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_raw(&mut rng, 4);
        let f1 = flatten(&t, &sig);
        prop_assert_eq!(flatten(&f1, &sig), f1.clone());
        prop_assert_eq!(flatten(&scramble(&t, &mut rng), &sig), f1.clone());
        let (f2, rec) = flatten_recorded(&t, &sig);
        prop_assert_eq!(&f2, &f1);
        prop_assert_eq!(rec.apply(&t).unwrap(), f1);
    }

    #[test]
    fn filter_slices_are_consistent(seed in any::<u64>(), pat in 0usize..4) {
        let sig = ac_signature();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = flatten(&random_raw(&mut rng, 4), &sig);
        let fp = FilterPattern::parse(["g(?)", "h(a, ?)", "h(_, g(?))", "b"][pat]).unwrap();
        let (slice, crit) = filter_match(&fp, &t);
        for p in &crit {
            prop_assert!(slice.is_kept(p));
        }
        for (q, _) in slice.holes() {
            prop_assert!(!crit.iter().any(|p| q.is_prefix_of(p)));
        }
    }

    #[test]
    fn generated_terms_are_well_sorted(seed in any::<u64>(), depth in 1usize..5) {
        let sig = ac_signature();
        let gen = TermGenerator::new(&sig);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = gen.generate("S", depth, &mut rng).unwrap();
        prop_assert!(sig.check(&t).is_ok());
        prop_assert_eq!(flatten(&t, &sig), t);
    }
}
