use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::netcore::Edge;

/// A scored candidate edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeScore {
    pub edge: Edge,
    pub score: f64,
    pub positive: bool,
}

fn counts(scores: &[EdgeScore]) -> (usize, usize) {
    let pos = scores.iter().filter(|s| s.positive).count();
    (pos, scores.len() - pos)
}

fn check_finite(scores: &[EdgeScore]) -> Result<()> {
    match scores.iter().find(|s| !s.score.is_finite()) {
        Some(s) => Err(Error::Eval(format!("non-finite score {} for {:?}", s.score, s.edge))),
        None => Ok(()),
    }
}

/// Area under the ROC curve as the Mann–Whitney statistic:
/// `P(pos > neg) + ½ P(pos = neg)`.
pub fn auc_roc(scores: &[EdgeScore]) -> Result<f64> {
    check_finite(scores)?;
    let (pos, neg) = counts(scores);
    if pos == 0 || neg == 0 {
        return Err(Error::Eval("AUC-ROC needs both positives and negatives".into()));
    }
    let mut sorted: Vec<&EdgeScore> = scores.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    // Midranks over tie groups.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * sorted[i..j].iter().filter(|s| s.positive).count() as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision: mean over positives of the precision at each
/// positive's rank, scores descending. Within a group of tied scores the
/// negatives are ranked first.
pub fn auc_pr(scores: &[EdgeScore]) -> Result<f64> {
    check_finite(scores)?;
    let (pos, _) = counts(scores);
    if pos == 0 {
        return Err(Error::Eval("AUC-PR needs at least one positive".into()));
    }
    let mut sorted: Vec<&EdgeScore> = scores.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.positive.cmp(&b.positive)));
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (rank, s) in sorted.iter().enumerate() {
        if s.positive {
            hits += 1;
            acc += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(acc / pos as f64)
}

fn choose2(n: u64) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same items.
///
/// Returns 1 when both labelings are identical up to renaming, including the
/// degenerate case where both put everything in one cluster.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut ra: HashMap<usize, u64> = HashMap::new();
    let mut rb: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let expected = sa * sb / choose2(n);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
