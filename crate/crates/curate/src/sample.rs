//! Stratified, namespace-capped, weight-proportional sampling.
//!
//! Selection uses per-candidate exponential-race keys (u^(1/w) with u drawn
//! from a ChaCha stream seeded by plan seed and problem id), which is
//! distributionally identical to drawing candidates one at a time with
//! probability proportional to weight, without replacement. Keying randomness
//! to the candidate rather than the draw sequence makes the outcome
//! independent of input order.
//!
//! The namespace cap is resolved per namespace before strata are filled:
//! each namespace keeps its top-cap candidates by key, the rest are
//! cap-excluded. Because that ranking never looks outside the namespace,
//! removing a candidate from the pool cannot change which candidates of
//! *other* namespaces are cap-excluded (cap locality). A count-as-you-go cap
//! lacks this property: dropping one candidate promotes another, whose
//! namespace tally then evicts an unrelated stratum's pick.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CurateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stratum {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "4+")]
    FourPlus,
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [Stratum::One, Stratum::Two, Stratum::Three, Stratum::FourPlus];

    pub fn of_depth(tool_calls: usize) -> Option<Stratum> {
        match tool_calls {
            0 => None,
            1 => Some(Stratum::One),
            2 => Some(Stratum::Two),
            3 => Some(Stratum::Three),
            _ => Some(Stratum::FourPlus),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Stratum::One => "1",
            Stratum::Two => "2",
            Stratum::Three => "3",
            Stratum::FourPlus => "4+",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub n_total: usize,
    pub strata: BTreeMap<Stratum, usize>,
    pub namespace_cap: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub problem_id: String,
    pub stratum: Stratum,
    pub namespace: String,
    pub weight: f64,
}

/// Proportional targets with largest-remainder rounding, clamped to what
/// each stratum actually holds. Returns InfeasiblePlan when the pool cannot
/// supply n_total at all.
pub fn plan_targets(
    pool: &BTreeMap<Stratum, usize>,
    n_total: usize,
) -> Result<BTreeMap<Stratum, usize>, CurateError> {
    let pool_total: usize = pool.values().sum();
    if n_total > pool_total {
        return Err(CurateError::InfeasiblePlan { requested: n_total, available: pool_total });
    }
    if n_total == 0 || pool_total == 0 {
        return Ok(Stratum::ALL.iter().map(|s| (*s, 0)).collect());
    }

    let mut targets: BTreeMap<Stratum, usize> = BTreeMap::new();
    let mut remainders: Vec<(f64, Stratum)> = Vec::new();
    let mut assigned = 0usize;
    for stratum in Stratum::ALL {
        let size = pool.get(&stratum).copied().unwrap_or(0);
        let exact = n_total as f64 * size as f64 / pool_total as f64;
        let floor = exact.floor() as usize;
        targets.insert(stratum, floor);
        assigned += floor;
        remainders.push((exact - floor as f64, stratum));
    }
    // Largest remainder first; ties go to the smaller stratum key. Strata
    // already at their pool size pass their share along; n_total <= pool
    // total guarantees somewhere has room.
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then(a.1.cmp(&b.1)));
    let mut leftover = n_total - assigned;
    while leftover > 0 {
        let mut progressed = false;
        for (_, stratum) in &remainders {
            if leftover == 0 {
                break;
            }
            let size = pool.get(stratum).copied().unwrap_or(0);
            let target = targets.get_mut(stratum).expect("all strata present");
            if *target < size {
                *target += 1;
                leftover -= 1;
                progressed = true;
            }
        }
        assert!(progressed, "n_total <= pool total, some stratum must have room");
    }
    Ok(targets)
}

/// Sort key for one candidate: u^(1/w), u uniform per (seed, problem_id).
fn race_key(seed: u64, candidate: &Candidate) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(candidate.problem_id.as_bytes());
    let digest = hasher.finalize();
    let mut rng = ChaCha20Rng::from_seed(digest.into());
    let u: f64 = rng.random();
    u.powf(1.0 / candidate.weight)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    /// Selected problem ids, in canonical (sorted) order.
    pub selected: Vec<String>,
    pub per_stratum: BTreeMap<Stratum, usize>,
    pub per_namespace: BTreeMap<String, usize>,
    /// Candidates barred because their namespace already kept cap stronger
    /// keys, sorted by problem id.
    pub cap_excluded: Vec<String>,
    /// Targets that caps or exhaustion left unmet.
    pub shortfall: usize,
}

/// Two phases. First each namespace keeps its namespace_cap strongest keys
/// (cap exclusion, local to the namespace). Then each stratum selects its
/// surviving candidates in descending key order until the target is met.
pub fn stratified_sample(
    candidates: &[Candidate],
    plan: &SamplePlan,
) -> Result<SampleOutcome, CurateError> {
    let mut sorted: Vec<&Candidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| a.problem_id.cmp(&b.problem_id));
    for pair in sorted.windows(2) {
        if pair[0].problem_id == pair[1].problem_id {
            return Err(CurateError::DuplicateProblem { problem: pair[0].problem_id.clone() });
        }
    }
    for candidate in &sorted {
        if !(candidate.weight > 0.0 && candidate.weight.is_finite()) {
            return Err(CurateError::WeightDomain {
                problem: candidate.problem_id.clone(),
                weight: candidate.weight,
            });
        }
    }

    let by_key = |a: &(f64, &Candidate), b: &(f64, &Candidate)| {
        b.0.partial_cmp(&a.0).expect("finite").then(a.1.problem_id.cmp(&b.1.problem_id))
    };

    let mut by_namespace: BTreeMap<&str, Vec<(f64, &Candidate)>> = BTreeMap::new();
    for candidate in &sorted {
        by_namespace
            .entry(candidate.namespace.as_str())
            .or_default()
            .push((race_key(plan.seed, candidate), candidate));
    }
    let mut cap_excluded: Vec<String> = Vec::new();
    let mut survivors: BTreeMap<Stratum, Vec<(f64, &Candidate)>> = BTreeMap::new();
    for entries in by_namespace.values_mut() {
        entries.sort_by(&by_key);
        for (rank, (key, candidate)) in entries.iter().enumerate() {
            if rank < plan.namespace_cap {
                survivors.entry(candidate.stratum).or_default().push((*key, candidate));
            } else {
                cap_excluded.push(candidate.problem_id.clone());
            }
        }
    }

    let mut selected: Vec<String> = Vec::new();
    let mut per_stratum: BTreeMap<Stratum, usize> = BTreeMap::new();
    let mut per_namespace: BTreeMap<String, usize> = BTreeMap::new();
    let mut shortfall = 0usize;
    for stratum in Stratum::ALL {
        let target = plan.strata.get(&stratum).copied().unwrap_or(0);
        let mut taken = 0usize;
        if let Some(entries) = survivors.get_mut(&stratum) {
            entries.sort_by(&by_key);
            for (_, candidate) in entries.iter().take(target) {
                selected.push(candidate.problem_id.clone());
                *per_namespace.entry(candidate.namespace.clone()).or_insert(0) += 1;
                taken += 1;
            }
        }
        per_stratum.insert(stratum, taken);
        shortfall += target - taken;
    }

    selected.sort();
    cap_excluded.sort();
    Ok(SampleOutcome { selected, per_stratum, per_namespace, cap_excluded, shortfall })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strata_cover_all_depths() {
        assert_eq!(Stratum::of_depth(0), None);
        assert_eq!(Stratum::of_depth(1), Some(Stratum::One));
        assert_eq!(Stratum::of_depth(3), Some(Stratum::Three));
        assert_eq!(Stratum::of_depth(4), Some(Stratum::FourPlus));
        assert_eq!(Stratum::of_depth(17), Some(Stratum::FourPlus));
    }

    #[test]
    fn largest_remainder_targets_sum_to_total() {
        let pool: BTreeMap<Stratum, usize> = [
            (Stratum::One, 50),
            (Stratum::Two, 30),
            (Stratum::Three, 15),
            (Stratum::FourPlus, 5),
        ]
        .into();
        let targets = plan_targets(&pool, 10).unwrap();
        assert_eq!(targets.values().sum::<usize>(), 10);
        assert_eq!(targets[&Stratum::One], 5);
        assert_eq!(targets[&Stratum::Two], 3);
        // 1.5 and 0.5 exact shares: largest-remainder assigns the leftover
        // to stratum 3 first (equal remainders, smaller key wins).
        assert_eq!(targets[&Stratum::Three], 2);
        assert_eq!(targets[&Stratum::FourPlus], 0);
    }

    #[test]
    fn targets_clamp_to_stratum_sizes() {
        let pool: BTreeMap<Stratum, usize> =
            [(Stratum::One, 2), (Stratum::Two, 98), (Stratum::Three, 0), (Stratum::FourPlus, 0)]
                .into();
        let targets = plan_targets(&pool, 50).unwrap();
        assert_eq!(targets.values().sum::<usize>(), 50);
        assert!(targets[&Stratum::One] <= 2);
        assert_eq!(targets[&Stratum::Three], 0);
    }

    #[test]
    fn infeasible_when_pool_too_small() {
        let pool: BTreeMap<Stratum, usize> = [(Stratum::One, 3)].into();
        match plan_targets(&pool, 5) {
            Err(CurateError::InfeasiblePlan { requested: 5, available: 3 }) => {}
            other => panic!("expected InfeasiblePlan, got {other:?}"),
        }
    }
}
