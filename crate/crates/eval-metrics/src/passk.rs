//! Unbiased pass@k estimation.

use std::collections::BTreeMap;

use crate::records::GenerationRecord;
use crate::MetricError;

/// P(at least one of k draws without replacement from n samples hits one of
/// the c successes) = 1 - C(n-c, k) / C(n, k). The ratio is accumulated in
/// log space so large n cannot overflow.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, MetricError> {
    if c > n || k == 0 || k > n {
        return Err(MetricError::Domain {
            reason: format!("pass@k requires 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}"),
        });
    }
    if c == 0 {
        return Ok(0.0);
    }
    if n - c < k {
        // Fewer failures than draws: every k-subset contains a success.
        return Ok(1.0);
    }
    let mut log_ratio = 0.0f64;
    for i in 0..k {
        log_ratio += ((n - c - i) as f64).ln() - ((n - i) as f64).ln();
    }
    Ok(1.0 - log_ratio.exp())
}

/// Groups records by problem, preserving first-appearance order.
pub fn group_by_problem(records: &[GenerationRecord]) -> Vec<(String, Vec<&GenerationRecord>)> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&GenerationRecord>> = BTreeMap::new();
    for record in records {
        if !groups.contains_key(&record.problem_id) {
            order.push(record.problem_id.clone());
        }
        groups.entry(record.problem_id.clone()).or_default().push(record);
    }
    order
        .into_iter()
        .map(|id| {
            let group = groups.remove(&id).expect("group recorded");
            (id, group)
        })
        .collect()
}

/// Mean per-problem pass@k over all problems, as a percentage. With n = k
/// this is exactly the fraction of problems that have a compiled sample.
pub fn benchmark_pass_rate(records: &[GenerationRecord], k: u64) -> Result<f64, MetricError> {
    let groups = group_by_problem(records);
    if groups.is_empty() {
        return Err(MetricError::Domain { reason: "no records".into() });
    }
    let mut total = 0.0f64;
    for (problem, group) in &groups {
        let n = group.len() as u64;
        if n < k {
            return Err(MetricError::InsufficientSamples {
                problem: problem.clone(),
                have: n,
                need: k,
            });
        }
        let c = group.iter().filter(|r| r.compiled).count() as u64;
        total += pass_at_k(n, c, k)?;
    }
    Ok(total / groups.len() as f64 * 100.0)
}
