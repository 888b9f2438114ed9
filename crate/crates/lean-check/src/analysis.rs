//! Source predicates built on the masked lexer: incompleteness markers and
//! identifier usage against a name universe.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::lexer::{identifier_tokens, mask_non_code};

/// True when a bare `sorry` or `admit` token appears outside comments and
/// string literals. Qualified names (`Foo.sorry`) and larger identifiers
/// (`sorry_lemma`, `sorry'`) do not count.
pub fn detect_incomplete(source: &str) -> bool {
    let masked = mask_non_code(source);
    let found = identifier_tokens(&masked).any(|tok| tok == "sorry" || tok == "admit");
    found
}

/// Names from `universe` that occur in `source` as whole lexical tokens.
/// Tokenization is maximal munch, so `Nat.gcd_comm` in the source never
/// matches a universe entry `Nat.gcd`.
pub fn extract_identifiers(source: &str, universe: &HashSet<String>) -> BTreeSet<String> {
    let masked = mask_non_code(source);
    identifier_tokens(&masked)
        .filter(|tok| universe.contains(*tok))
        .map(str::to_string)
        .collect()
}

/// Per-name occurrence counts, same matching rules as
/// [`extract_identifiers`].
pub fn identifier_counts(source: &str, universe: &HashSet<String>) -> BTreeMap<String, usize> {
    let masked = mask_non_code(source);
    let mut counts = BTreeMap::new();
    for tok in identifier_tokens(&masked) {
        if universe.contains(tok) {
            *counts.entry(tok.to_string()).or_insert(0) += 1;
        }
    }
    counts
}
