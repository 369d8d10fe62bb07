//! Held-out link prediction, structure recovery and summary exports.

mod metrics;
mod summary;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::crp::Rng;
use crate::error::{Error, Result};
use crate::genmodel::GroundTruth;
use crate::gibbs::SeatingState;
use crate::netcore::{Edge, MultiGraph, Vocabulary};

pub use metrics::{adjusted_rand_index, auc_pr, auc_roc, EdgeScore};
pub use summary::{
    block_summary, save_block_matrix, save_degree_csv, save_degree_svg, save_top_nodes, BlockSummary,
};

/// Largest complement that is enumerated outright rather than rejection-sampled.
const ENUMERATE_LIMIT: u64 = 50_000_000;

/// Posterior predictive probability of `(s, r)`, averaged over snapshots.
pub fn edge_score(snapshots: &[SeatingState], s: usize, r: usize) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(Error::Eval("no snapshots to score with".into()));
    }
    let total: f64 = snapshots.iter().map(|st| st.edge_probability(s, r)).sum();
    Ok(total / snapshots.len() as f64)
}

/// Scores labelled candidate edges in parallel.
pub fn score_edges(snapshots: &[SeatingState], candidates: &[(Edge, bool)]) -> Result<Vec<EdgeScore>> {
    if snapshots.is_empty() {
        return Err(Error::Eval("no snapshots to score with".into()));
    }
    candidates
        .par_iter()
        .map(|&(edge, positive)| {
            let score = edge_score(snapshots, edge.sender.index(), edge.receiver.index())?;
            if !score.is_finite() {
                return Err(Error::Eval(format!("non-finite score for {edge:?}")));
            }
            Ok(EdgeScore { edge, score, positive })
        })
        .collect()
}

/// Draws `count` distinct ordered pairs absent from `full`, uniformly without
/// replacement. `None` returns every absent pair in random order.
pub fn sample_negatives(
    full: &MultiGraph,
    count: Option<usize>,
    self_loops: bool,
    seed: u64,
) -> Result<Vec<Edge>> {
    let j = full.num_nodes() as u64;
    let present: HashSet<Edge> = full
        .edges()
        .iter()
        .copied()
        .filter(|e| self_loops || e.sender != e.receiver)
        .collect();
    let space = if self_loops { j * j } else { j * j.saturating_sub(1) };
    let available = space - present.len() as u64;
    let want = count.map_or(available, |c| c as u64);
    if want > available {
        return Err(Error::Infeasible(format!(
            "{want} negatives requested but only {available} absent pairs exist"
        )));
    }
    let mut rng = Rng::named(seed, "negatives");
    let admissible = |s: u32, r: u32| (self_loops || s != r) && !present.contains(&Edge::new(s, r));

    if count.is_none() || want * 2 > available {
        if space > ENUMERATE_LIMIT {
            return Err(Error::Infeasible(format!(
                "{space} candidate pairs are too many to enumerate; request fewer negatives"
            )));
        }
        let j = j as u32;
        let mut all: Vec<Edge> = (0..j)
            .flat_map(|s| (0..j).map(move |r| (s, r)))
            .filter(|&(s, r)| admissible(s, r))
            .map(|(s, r)| Edge::new(s, r))
            .collect();
        all.shuffle(&mut rng);
        all.truncate(want as usize);
        return Ok(all);
    }

    let mut chosen = HashSet::with_capacity(want as usize);
    let mut out = Vec::with_capacity(want as usize);
    while (out.len() as u64) < want {
        let s = rng.random_range(0..j) as u32;
        let r = rng.random_range(0..j) as u32;
        if admissible(s, r) && chosen.insert((s, r)) {
            out.push(Edge::new(s, r));
        }
    }
    Ok(out)
}

/// Headline numbers of a link-prediction run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreReport {
    pub auc_pr: f64,
    pub auc_roc: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "auc_pr\t{:.6}", self.auc_pr)?;
        writeln!(f, "auc_roc\t{:.6}", self.auc_roc)?;
        writeln!(f, "positives\t{}", self.positives)?;
        write!(f, "negatives\t{}", self.negatives)
    }
}

/// Options for [`evaluate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    /// `None` uses every absent pair.
    pub negatives: Option<usize>,
    pub self_loops: bool,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            negatives: None,
            self_loops: true,
            seed: 0,
        }
    }
}

/// Scores the distinct test pairs against negatives drawn from outside `full`.
pub fn evaluate(
    snapshots: &[SeatingState],
    test: &MultiGraph,
    full: &MultiGraph,
    cfg: &EvalConfig,
) -> Result<(ScoreReport, Vec<EdgeScore>)> {
    if test.is_empty() {
        return Err(Error::Eval("test set is empty".into()));
    }
    if test.num_nodes() > full.num_nodes() {
        return Err(Error::Eval("test graph has nodes outside the full graph".into()));
    }
    let mut seen = HashSet::new();
    let mut candidates: Vec<(Edge, bool)> = test
        .edges()
        .iter()
        .filter(|e| seen.insert(**e))
        .map(|&e| (e, true))
        .collect();
    let negatives = sample_negatives(full, cfg.negatives, cfg.self_loops, cfg.seed)?;
    candidates.extend(negatives.iter().map(|&e| (e, false)));
    let scores = score_edges(snapshots, &candidates)?;
    let report = ScoreReport {
        auc_pr: auc_pr(&scores)?,
        auc_roc: auc_roc(&scores)?,
        positives: seen.len(),
        negatives: negatives.len(),
    };
    Ok((report, scores))
}

/// Writes `sender,receiver,label,score` rows, using `vocab` labels when given.
pub fn save_scores(path: impl AsRef<Path>, scores: &[EdgeScore], vocab: Option<&Vocabulary>) -> Result<()> {
    let path = path.as_ref();
    let name = |id: crate::netcore::NodeId| match vocab {
        Some(v) => v.label(id).to_string(),
        None => id.to_string(),
    };
    let mut out = String::from("sender,receiver,label,score\n");
    for s in scores {
        let label = if s.positive { "positive" } else { "negative" };
        out.push_str(&format!(
            "{},{},{label},{:e}\n",
            name(s.edge.sender),
            name(s.edge.receiver),
            s.score
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Per-edge `(sender block, receiver block)` labels of one snapshot, as
/// dense ids in first-seen order.
fn pair_labels(state: &SeatingState) -> Vec<usize> {
    let mut ids: HashMap<(u32, u32), usize> = HashMap::new();
    (0..state.num_edges())
        .map(|i| {
            let key = state.edge_block_pair(i).expect("snapshot is fully seated");
            let next = ids.len();
            *ids.entry(key).or_insert(next)
        })
        .collect()
}

/// Renames `labels` onto `reference` by greedy maximum overlap; labels left
/// unmatched get fresh ids past the reference range.
fn align(labels: &[usize], reference: &[usize]) -> Vec<usize> {
    let mut overlap: HashMap<(usize, usize), usize> = HashMap::new();
    for (&a, &b) in labels.iter().zip(reference) {
        *overlap.entry((a, b)).or_default() += 1;
    }
    let mut pairs: Vec<((usize, usize), usize)> = overlap.into_iter().collect();
    pairs.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut map: HashMap<usize, usize> = HashMap::new();
    let mut taken: HashSet<usize> = HashSet::new();
    for ((a, b), _) in pairs {
        if !map.contains_key(&a) && !taken.contains(&b) {
            map.insert(a, b);
            taken.insert(b);
        }
    }
    let mut fresh = reference.iter().max().map_or(0, |m| m + 1);
    labels
        .iter()
        .map(|a| {
            *map.entry(*a).or_insert_with(|| {
                fresh += 1;
                fresh - 1
            })
        })
        .collect()
}

/// Modal per-edge block-pair label across snapshots, after aligning every
/// snapshot to the last one.
pub fn modal_edge_labels(snapshots: &[SeatingState]) -> Result<Vec<usize>> {
    let last = snapshots
        .last()
        .ok_or_else(|| Error::Eval("no snapshots".into()))?;
    let reference = pair_labels(last);
    let n = reference.len();
    let mut votes: Vec<HashMap<usize, usize>> = vec![HashMap::new(); n];
    for st in snapshots {
        if st.num_edges() != n {
            return Err(Error::Eval("snapshots cover different edge sets".into()));
        }
        for (i, l) in align(&pair_labels(st), &reference).into_iter().enumerate() {
            *votes[i].entry(l).or_default() += 1;
        }
    }
    Ok(votes
        .into_iter()
        .map(|v| v.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).unwrap().0)
        .collect())
}

/// Edge-level adjusted Rand index between planted and inferred block pairs.
pub fn recovery_score(snapshots: &[SeatingState], truth: &GroundTruth) -> Result<f64> {
    let inferred = modal_edge_labels(snapshots)?;
    if inferred.len() != truth.edge_blocks.len() {
        return Err(Error::Eval(format!(
            "truth covers {} edges, snapshots {}",
            truth.edge_blocks.len(),
            inferred.len()
        )));
    }
    let mut ids: HashMap<(u32, u32), usize> = HashMap::new();
    let planted: Vec<usize> = truth
        .edge_blocks
        .iter()
        .map(|k| {
            let next = ids.len();
            *ids.entry(*k).or_insert(next)
        })
        .collect();
    Ok(adjusted_rand_index(&planted, &inferred))
}

/// Writes `key\tvalue` lines of a report.
pub fn save_report(path: impl AsRef<Path>, report: &ScoreReport) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "{report}").map_err(|e| Error::io(path, e))
}
