//! Small corpus of representative traces, shared across the workspace's
//! tests. Each is a complete multi-turn transcript: system prompt, problem
//! statement, a think + search round, the tool response, and a final proof
//! that applies a retrieved theorem.

use serde_json::json;

use crate::event::ToolCall;
use crate::message::{ChatMessage, TraceRecord};
use crate::prompts::{agentic_user_prompt, AGENTIC_SYSTEM_PROMPT};
use crate::render::{code_block, think_block, tool_call_block, tool_response_block};

fn search_call(query: &str) -> String {
    let call = ToolCall {
        name: "leansearch".into(),
        arguments: json!({ "query": query }).as_object().unwrap().clone(),
    };
    tool_call_block(&call)
}

/// IMO 1959 Problem 1: gcd(21n+4, 14n+3) = 1, closed with a retrieved
/// norm_num helper lemma.
pub fn gcd_trace() -> TraceRecord {
    let statement = "import Mathlib\nimport Aesop\nset_option maxHeartbeats 0\nopen BigOperators Real Nat Topology Rat\n\n/-- Prove that the fraction 21n+4 / 14n+3 is irreducible for every natural number n.-/\ntheorem imo_1959_p1 (n : ℕ) (h0 : 0 < n) :\n    Nat.gcd (21 * n + 4) (14 * n + 3) = 1 := by sorry";

    let think_plan = "\nI need to prove gcd(21n+4, 14n+3) = 1. Applying the Euclidean algorithm:\n\n  21n + 4 = 1*(14n + 3) + (7n + 1)\n  14n + 3 = 2*(7n + 1) + 1\n\nSo gcd = 1. Equivalently, the linear combination -2*(21n+4) + 3*(14n+3) = 1 proves coprimality. In Lean's Nat (no negatives), rearrange as 3*(14n+3) = 2*(21n+4) + 1.\n\nLet me search Mathlib for a helper lemma that converts a linear combination into a gcd = 1 proof.\n";

    let response = json!({
        "tool": "leansearch",
        "top_k": 10,
        "theorems": [
            {
                "name": "Tactic.NormNum.nat_gcd_helper_2'",
                "formal_statement": "theorem Tactic.NormNum.nat_gcd_helper_2' (x y a b : ℕ) (h : x * a = y * b + 1) : Nat.gcd x y = 1",
                "informal_description": "A linear combination x * a = y * b + 1 certifies that gcd x y = 1.",
                "score": 0.931742
            },
            {
                "name": "Tactic.NormNum.nat_gcd_helper_1'",
                "formal_statement": "theorem Tactic.NormNum.nat_gcd_helper_1' (x y a b : ℕ) (h : y * b = x * a + 1) : Nat.gcd x y = 1",
                "informal_description": "A linear combination y * b = x * a + 1 certifies that gcd x y = 1.",
                "score": 0.926518
            },
            {
                "name": "Int.gcd_dvd_iff",
                "formal_statement": "theorem Int.gcd_dvd_iff {a b : ℤ} {n : ℕ} : gcd a b ∣ n ↔ ∃ x y : ℤ, ↑n = a * x + b * y",
                "informal_description": "The gcd of a and b divides n iff n is an integer linear combination of a and b.",
                "score": 0.874903
            }
        ]
    });

    let think_close = "\nThe retrieved theorem nat_gcd_helper_1' states: if y * b = x * a + 1 then gcd x y = 1. Setting x = 21n+4, y = 14n+3, a = 2, b = 3 gives exactly (14n+3)*3 = (21n+4)*2 + 1, and both sides equal 42n+9. This closes the goal without needing gcd commutativity.\n";

    let proof = "import Mathlib\nimport Aesop\nset_option maxHeartbeats 0\nopen BigOperators Real Nat Topology Rat\n\n/-- Prove that the fraction 21n+4 / 14n+3 is irreducible for every natural number n.-/\ntheorem imo_1959_p1 (n : ℕ) (h0 : 0 < n) :\n    Nat.gcd (21 * n + 4) (14 * n + 3) = 1 := by\n  have h_eq : (14 * n + 3) * 3 = (21 * n + 4) * 2 + 1 := by ring\n  exact Tactic.NormNum.nat_gcd_helper_1' (21 * n + 4) (14 * n + 3) 2 3 h_eq\n";

    TraceRecord {
        problem_id: "imo_1959_p1".into(),
        messages: vec![
            ChatMessage::system(AGENTIC_SYSTEM_PROMPT),
            ChatMessage::user(agentic_user_prompt(statement)),
            ChatMessage::assistant(format!(
                "{}\n\n{}",
                think_block(think_plan),
                search_call("Prove that gcd(21n+4, 14n+3) = 1 for all natural numbers n using the Euclidean algorithm or linear combinations.")
            )),
            ChatMessage::user(tool_response_block(&response)),
            ChatMessage::assistant(format!(
                "{}\n\n{}",
                think_block(think_close),
                code_block("lean4", proof)
            )),
        ],
    }
}

/// Wilson's theorem for finite fields: the product of the nonzero elements
/// of a finite field is -1.
pub fn finite_field_trace() -> TraceRecord {
    let statement = "import Mathlib\nopen Function Fintype Subgroup Ideal Polynomial Submodule Zsqrtd\nopen scoped BigOperators\n\n/-- Let K be a finite field. Prove that the product of the nonzero elements of K is -1.-/\ntheorem exercise_13_6_10 {K : Type*} [Field K] [Fintype Kˣ] :\n    (Finset.univ.prod fun x : Kˣ => x) = -1 := by sorry";

    let think_plan = "\nI need to prove that the product of the nonzero elements of a finite field K is -1. This is the finite-field generalization of Wilson's theorem: elements pair off with their inverses, leaving only the self-inverse elements 1 and -1.\n\nLet me check Mathlib for theorems about the product of units in a finite field.\n";

    let response = json!({
        "tool": "leansearch",
        "top_k": 10,
        "theorems": [
            {
                "name": "FiniteField.prod_univ_units_id_eq_neg_one",
                "formal_statement": "theorem FiniteField.prod_univ_units_id_eq_neg_one [CommRing K] [IsDomain K] [Fintype Kˣ] : ∏ x : Kˣ, x = -1",
                "informal_description": "In a finite integral domain, the product of all units is -1.",
                "score": 0.942106
            },
            {
                "name": "ZMod.wilsons_lemma",
                "formal_statement": "theorem ZMod.wilsons_lemma (p : ℕ) [Fact p.Prime] : ((p - 1)! : ZMod p) = -1",
                "informal_description": "Wilson's lemma: (p-1)! is congruent to -1 modulo a prime p.",
                "score": 0.881237
            },
            {
                "name": "Finset.prod_inv_distrib",
                "formal_statement": "theorem Finset.prod_inv_distrib : (∏ i ∈ s, (f i)⁻¹) = (∏ i ∈ s, f i)⁻¹",
                "informal_description": "Inversion distributes over finite products in a division monoid.",
                "score": 0.803914
            }
        ]
    });

    let think_close = "\nI found FiniteField.prod_univ_units_id_eq_neg_one, which states the result directly. Since K is a Field, it is a CommRing and an IsDomain, and Fintype Kˣ is given, so every typeclass condition is satisfied.\n";

    let proof = "import Mathlib\nopen Function Fintype Subgroup Ideal Polynomial Submodule Zsqrtd\nopen scoped BigOperators\n\ntheorem exercise_13_6_10 {K : Type*} [Field K] [Fintype Kˣ] :\n    (Finset.univ.prod fun x : Kˣ => x) = -1 := by\n  have h_main := FiniteField.prod_univ_units_id_eq_neg_one\n  apply h_main\n";

    TraceRecord {
        problem_id: "exercise_13_6_10".into(),
        messages: vec![
            ChatMessage::system(AGENTIC_SYSTEM_PROMPT),
            ChatMessage::user(agentic_user_prompt(statement)),
            ChatMessage::assistant(format!(
                "{}\n\n{}",
                think_block(think_plan),
                search_call("product of nonzero elements of finite field")
            )),
            ChatMessage::user(tool_response_block(&response)),
            ChatMessage::assistant(format!(
                "{}\n\n{}",
                think_block(think_close),
                code_block("lean4", proof)
            )),
        ],
    }
}

/// Fermat's theorem on local extrema: a smooth non-negative function with
/// f(0) = 0 has a vanishing derivative at 0.
pub fn local_min_trace() -> TraceRecord {
    let statement = "import Mathlib\nopen scoped BigOperators\n\n/-- Let f : ℝ → ℝ be infinitely differentiable with f(0)=0, f(1)=1, and f(x) ≥ 0. Show there exist n and x such that the n-th derivative of f at x is 0.-/\ntheorem exercise_2018_a5 (f : ℝ → ℝ) (hf : ContDiff ℝ ⊤ f)\n    (hf0 : f 0 = 0) (hf1 : f 1 = 1) (hf2 : ∀ x, f x ≥ 0) :\n    ∃ (n : ℕ) (x : ℝ), iteratedDeriv n f x = 0 := by sorry";

    let think_plan = "\nSince f(0) = 0 and f(x) ≥ 0 for all x, the point 0 is a global, hence local, minimum. By Fermat's theorem on stationary points the first derivative at a local minimum is zero, so n = 1 and x = 0 should work.\n\nLet me search for the relevant Mathlib theorem about derivatives at local minima.\n";

    let response = json!({
        "tool": "leansearch",
        "top_k": 10,
        "theorems": [
            {
                "name": "IsLocalMin.deriv_eq_zero",
                "formal_statement": "theorem IsLocalMin.deriv_eq_zero (h : IsLocalMin f a) : deriv f a = 0",
                "informal_description": "The derivative vanishes at a local minimum.",
                "score": 0.951873
            },
            {
                "name": "IsLocalMin.hasDerivAt_eq_zero",
                "formal_statement": "theorem IsLocalMin.hasDerivAt_eq_zero (h : IsLocalMin f a) (hf : HasDerivAt f f' a) : f' = 0",
                "informal_description": "Any derivative witnessed at a local minimum equals zero.",
                "score": 0.914365
            },
            {
                "name": "IsLocalMin.fderiv_eq_zero",
                "formal_statement": "theorem IsLocalMin.fderiv_eq_zero (h : IsLocalMin f a) : fderiv ℝ f a = 0",
                "informal_description": "The Fréchet derivative vanishes at a local minimum.",
                "score": 0.897401
            }
        ]
    });

    let think_close = "\nIsLocalMin.deriv_eq_zero gives deriv f 0 = 0 once 0 is a local minimum, which follows since f(x) ≥ 0 = f(0) everywhere. Then iteratedDeriv 1 f 0 = deriv f 0 = 0.\n";

    let proof = "import Mathlib\nopen scoped BigOperators\n\ntheorem exercise_2018_a5 (f : ℝ → ℝ) (hf : ContDiff ℝ ⊤ f)\n    (hf0 : f 0 = 0) (hf1 : f 1 = 1) (hf2 : ∀ x, f x ≥ 0) :\n    ∃ (n : ℕ) (x : ℝ), iteratedDeriv n f x = 0 := by\n  have h_local_min : IsLocalMin f 0 := by\n    filter_upwards with x\n    simpa [hf0] using hf2 x\n  have h_deriv_zero : deriv f 0 = 0 :=\n    IsLocalMin.deriv_eq_zero h_local_min\n  exact ⟨1, 0, by simp [iteratedDeriv_one, h_deriv_zero]⟩\n";

    TraceRecord {
        problem_id: "exercise_2018_a5".into(),
        messages: vec![
            ChatMessage::system(AGENTIC_SYSTEM_PROMPT),
            ChatMessage::user(agentic_user_prompt(statement)),
            ChatMessage::assistant(format!(
                "{}\n\n{}",
                think_block(think_plan),
                search_call("derivative is zero at local minimum")
            )),
            ChatMessage::user(tool_response_block(&response)),
            ChatMessage::assistant(format!(
                "{}\n\n{}",
                think_block(think_close),
                code_block("lean4", proof)
            )),
        ],
    }
}

pub fn sample_records() -> Vec<TraceRecord> {
    vec![gcd_trace(), finite_field_trace(), local_min_trace()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_trace;

    #[test]
    fn samples_parse_and_carry_one_search_round() {
        for record in sample_records() {
            let trace = parse_trace(record.problem_id.clone(), record.messages.clone()).unwrap();
            assert_eq!(trace.tool_call_count(), 1, "{}", record.problem_id);
            assert_eq!(trace.tool_responses().len(), 1);
            assert_eq!(trace.queries().len(), 1);
            assert!(trace.final_proof().is_ok());
            assert_eq!(trace.retrieved_theorem_names().len(), 3);
        }
    }

    #[test]
    fn gcd_sample_grounds_its_proof_in_a_retrieved_name() {
        let record = gcd_trace();
        let trace = parse_trace(record.problem_id, record.messages).unwrap();
        let proof = trace.final_proof().unwrap();
        assert!(proof.source.contains("Tactic.NormNum.nat_gcd_helper_1'"));
        assert!(trace
            .retrieved_theorem_names()
            .contains("Tactic.NormNum.nat_gcd_helper_1'"));
        assert!(trace.theorem_statement.starts_with("import Mathlib"));
        assert!(trace.theorem_statement.ends_with("by sorry"));
    }
}
