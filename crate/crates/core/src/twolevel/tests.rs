use super::*;

fn pair(l: char, s: char) -> PairSymbol {
    PairSymbol::new(Sym::from_char(l), Sym::from_char(s))
}

fn pairs(spec: &str) -> Vec<PairSymbol> {
    spec.split_whitespace()
        .map(|t| {
            let cs: Vec<char> = t.chars().collect();
            match cs.as_slice() {
                [l, ':', s] => pair(*l, *s),
                [c] => pair(*c, *c),
                _ => panic!("bad pair spec {t}"),
            }
        })
        .collect()
}

#[test]
fn alphabet_only_file_has_identities_and_no_rules() {
    let rs = parse_rules("ALPHABET a b ;").unwrap();
    assert!(rs.rules().is_empty());
    assert!(rs.pair_idx(pair('a', 'a')).is_some());
    assert!(rs.pair_idx(pair('b', 'b')).is_some());
}

#[test]
fn epenthesis_rule_parses() {
    let rs = parse_rules("ALPHABET a e +:0 ;\nRULE \"r-epen\" +:r <=> a _ e ;").unwrap();
    assert_eq!(rs.rules().len(), 1);
    assert!(rs.pair_idx(pair('+', 'r')).is_some());
    assert_eq!(rs.rules()[0].op, RuleOp::DoubleArrow);
}

#[test]
fn undefined_set_is_reported_with_line() {
    let err = parse_rules("ALPHABET a ;\nRULE \"x\" a:0 => V _ ;").unwrap_err();
    match err {
        TwoLevelError::UndefinedSet { pos, name } => {
            assert_eq!(name, "V");
            assert_eq!(pos.line, 2);
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn duplicate_rule_name_rejected() {
    let err = parse_rules(
        "ALPHABET a e +:0 ;\nRULE \"r\" +:r <=> a _ e ;\nRULE \"r\" +:r <=> a _ a ;",
    )
    .unwrap_err();
    assert!(matches!(err, TwoLevelError::DuplicateRule { .. }));
}

#[test]
fn both_null_pair_rejected() {
    let err = parse_rules("ALPHABET 0:0 ;").unwrap_err();
    assert!(matches!(err, TwoLevelError::BothNull { .. }));
}

fn epen_rules() -> CompiledRules {
    parse_rules("ALPHABET s e m a o n +:0 ;\nRULE \"r-epen\" +:r <=> a _ e ;")
        .unwrap()
        .compile()
        .unwrap()
}

#[test]
fn double_arrow_accepts_epenthesis_site() {
    let cr = epen_rules();
    let s = pairs("s e m e +:0 a +:r e n");
    assert!(cr.accepts_pair_string(&s, false));
}

#[test]
fn double_arrow_rejects_pair_outside_context() {
    let cr = epen_rules();
    let s = pairs("a +:r o");
    assert!(!cr.accepts_pair_string(&s, false));
}

#[test]
fn empty_pair_string_is_vacuously_accepted() {
    let cr = epen_rules();
    assert!(cr.accepts_pair_string(&[], false));
    for rec in cr.recognizers() {
        assert!(rec.accepting(rec.start()));
    }
}

#[test]
fn check_pairing_epenthesis_round() {
    let cr = epen_rules();
    assert_eq!(cr.check_pairing("seme+a+en", "semearen", false).unwrap(), true);
    // Epenthesis omitted where the double arrow coerces it.
    assert_eq!(cr.check_pairing("seme+a+en", "semeaen", false).unwrap(), false);
}

#[test]
fn check_pairing_identity() {
    let cr = parse_rules("ALPHABET a b c ;").unwrap().compile().unwrap();
    assert_eq!(cr.check_pairing("abc", "abc", false).unwrap(), true);
}

#[test]
fn check_pairing_unalignable() {
    let cr = parse_rules("ALPHABET a b ;").unwrap().compile().unwrap();
    let err = cr.check_pairing("a", "b", false).unwrap_err();
    assert!(matches!(err, TwoLevelError::NoAlignment { .. }));
}

#[test]
fn licensed_pairs_cover_declarations_and_identities() {
    let rs = parse_rules("ALPHABET a b ;").unwrap();
    let lp = rs.licensed_pairs();
    assert_eq!(lp.len(), 2);

    let rs = parse_rules("ALPHABET a +:0 +:r ;").unwrap();
    let lp = rs.licensed_pairs();
    assert!(lp.contains(&pair('+', '0')));
    assert!(lp.contains(&pair('+', 'r')));
    assert!(lp.contains(&pair('a', 'a')));
    // `+` appears only with explicit realizations; `r` gains an identity.
    assert!(lp.contains(&pair('r', 'r')));

    let rs = parse_rules("").unwrap();
    assert!(rs.licensed_pairs().is_empty());
}

#[test]
fn rule_order_never_affects_acceptance() {
    let a = "ALPHABET s e m a n +:0 ;\nRULE \"one\" +:r <=> a _ e ;\nRULE \"two\" e:0 /<= m _ ;";
    let b = "ALPHABET s e m a n +:0 ;\nRULE \"two\" e:0 /<= m _ ;\nRULE \"one\" +:r <=> a _ e ;";
    let ca = parse_rules(a).unwrap().compile().unwrap();
    let cb = parse_rules(b).unwrap().compile().unwrap();
    for (lex, sur) in [
        ("seme+a+en", "semearen"),
        ("seme+a+en", "semeaen"),
        ("seme", "seme"),
        ("seme", "sem"),
        ("me", "m"),
    ] {
        let ra = ca.check_pairing(lex, sur, false).ok();
        let rb = cb.check_pairing(lex, sur, false).ok();
        assert_eq!(ra, rb, "{lex} / {sur}");
    }
}

#[test]
fn recognizers_are_deterministic_and_total() {
    let rs = parse_rules("ALPHABET s e m a o n +:0 ;\nRULE \"r-epen\" +:r <=> a _ e ;").unwrap();
    let rec = rs.compile_rule(&rs.rules()[0]).unwrap();
    let n_pairs = rs.licensed_pairs().len();
    assert_eq!(rec.n_pairs(), n_pairs);
    for s in 0..rec.n_states() as u32 {
        for p in 0..n_pairs {
            let t = rec.step(s, p);
            assert!((t as usize) < rec.n_states());
        }
    }
}

#[test]
fn variant_rules_gate_their_pairs() {
    let rs = parse_rules("ALPHABET g i z o n ;\nRULE \"z-palatal\" VARIANT z:x => i _ ;").unwrap();
    let zx = rs.pair_idx(pair('z', 'x')).unwrap();
    assert!(!rs.pair_feasible(zx, false));
    assert!(rs.pair_feasible(zx, true));
    let cr = rs.compile().unwrap();
    assert_eq!(cr.check_pairing("gizon", "gixon", true).unwrap(), true);
    assert!(cr.check_pairing("gizon", "gixon", false).is_err());
    // Out of the licensed context even in variant mode.
    assert_eq!(cr.check_pairing("zo", "xo", true).unwrap(), false);
}
