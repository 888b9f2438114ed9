//! Table of sorry/admit detection cases covering comments, strings, nesting,
//! and token boundaries, plus property coverage for identifier extraction.

use std::collections::HashSet;

use lean_check::{detect_incomplete, extract_identifiers};
use proptest::prelude::*;

#[test]
fn incompleteness_detection_case_table() {
    let cases: &[(&str, bool)] = &[
        // Bare markers in proof positions.
        ("theorem t : True := by sorry", true),
        ("theorem t : True := by admit", true),
        ("by\n  sorry", true),
        ("sorry", true),
        ("exact (sorry)", true),
        ("cases h with | intro x hx => admit", true),
        // Markers next to comments still count when outside them.
        ("by sorry -- finish later", true),
        ("/- plan -/ sorry", true),
        // Comments of every shape do not count.
        ("-- sorry\nexact rfl", false),
        ("exact rfl -- admit tomorrow", false),
        ("/- sorry -/ exact rfl", false),
        ("/- outer /- sorry -/ still comment -/ exact rfl", false),
        ("/- admit", false),
        // String literals do not count, including escaped quotes.
        ("have s := \"sorry\"\nexact rfl", false),
        ("have s := \"escaped \\\" sorry\"\nexact rfl", false),
        ("have s := \"unterminated sorry", false),
        // Larger identifiers are different names.
        ("exact sorry_lemma", false),
        ("exact mysorry", false),
        ("exact sorry'", false),
        ("exact Foo.sorry", false),
        ("theorem sorry_free : True := trivial", false),
        ("exact admitCard", false),
        // Empty and marker-free sources.
        ("", false),
        ("theorem t : 1 + 1 = 2 := by norm_num", false),
    ];

    for (source, expected) in cases {
        assert_eq!(
            detect_incomplete(source),
            *expected,
            "detect_incomplete({source:?}) should be {expected}"
        );
    }
}

fn universe(names: &[&str]) -> HashSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[test]
fn extraction_matches_whole_tokens_only() {
    let u = universe(&["Nat.gcd", "Nat.gcd_comm", "IsLocalMin.deriv_eq_zero"]);
    let source = "have h := IsLocalMin.deriv_eq_zero hmin\nrw [Nat.gcd_comm] -- Nat.gcd\n";
    let used: Vec<_> = extract_identifiers(source, &u).into_iter().collect();
    assert_eq!(used, vec!["IsLocalMin.deriv_eq_zero", "Nat.gcd_comm"]);
}

proptest! {
    // Tokens sampled from a pool, glued with separators: extraction must
    // recover exactly the sampled tokens that are in the universe.
    #[test]
    fn extraction_recovers_exactly_the_planted_tokens(
        picks in proptest::collection::vec(0usize..6, 1..12),
        seps in proptest::collection::vec(prop_oneof![
            Just(" "), Just("\n"), Just(" [ "), Just(" ] "), Just(" ( "), Just(" ) "), Just(" , ")
        ], 1..12),
    ) {
        let pool = ["Nat.gcd", "Nat.gcd_comm", "List.map", "foo'", "unknown_name", "h2"];
        let u = universe(&["Nat.gcd", "Nat.gcd_comm", "List.map", "foo'"]);

        let mut source = String::new();
        let mut expected: Vec<&str> = Vec::new();
        for (i, pick) in picks.iter().enumerate() {
            let tok = pool[*pick];
            source.push_str(tok);
            source.push_str(seps[i % seps.len()]);
            if u.contains(tok) {
                expected.push(tok);
            }
        }
        expected.sort_unstable();
        expected.dedup();

        let used: Vec<String> = extract_identifiers(&source, &u).into_iter().collect();
        prop_assert_eq!(used, expected.into_iter().map(String::from).collect::<Vec<_>>());

        // The same tokens buried in a line comment extract to nothing.
        let commented: String =
            source.lines().map(|l| format!("-- {l}\n")).collect();
        prop_assert!(extract_identifiers(&commented, &u).is_empty());
    }

    #[test]
    fn extraction_is_always_a_subset_of_the_universe(source in "[A-Za-z0-9_.' \\n\\-/\"]{0,200}") {
        let u = universe(&["Nat.gcd", "foo'", "List.map"]);
        let used = extract_identifiers(&source, &u);
        for name in used {
            prop_assert!(u.contains(&name));
        }
    }
}
