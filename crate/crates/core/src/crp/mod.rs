//! Chinese restaurant primitives shared by the forward samplers and the
//! Gibbs sampler: seating, categorical and Dirichlet draws, the base measure
//! over nodes, and the [`Rng`] stream every stochastic call takes.

mod restaurant;
mod rng;

pub use restaurant::{Remap, Restaurant, TableChoice, Unseated};
pub use rng::{Rng, RngState};

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Draws an index with probability proportional to `weights`.
///
/// The weights need not be normalized. Inverse CDF over a single pass; the
/// final index absorbs any rounding slack.
pub fn sample_categorical(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    sample_categorical_with_total(weights, total, rng)
}

/// Same as [`sample_categorical`] when the caller already accumulated the total.
pub fn sample_categorical_with_total(weights: &[f64], total: f64, rng: &mut Rng) -> usize {
    debug_assert!(!weights.is_empty());
    debug_assert!(total > 0.0 && total.is_finite(), "bad weight total {total}");
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding slack: land on the last index with positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Draws an index from unnormalized log weights.
pub fn sample_log_categorical(log_weights: &[f64], rng: &mut Rng) -> usize {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    sample_categorical(&weights, rng)
}

/// Draws from a Dirichlet distribution with the given positive parameters.
pub fn sample_dirichlet(params: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
    if params.is_empty() {
        return Err(Error::InvalidParameter("empty Dirichlet parameter".into()));
    }
    if let Some(bad) = params.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet parameters must be positive, got {bad}"
        )));
    }
    let mut draws = Vec::with_capacity(params.len());
    for &a in params {
        let g = Gamma::new(a, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        draws.push(g.sample(rng));
    }
    let total: f64 = draws.iter().sum();
    if !(total > 0.0) {
        // Every shape so small that all gamma draws underflowed: the limit
        // puts all mass on one atom chosen proportionally to the parameters.
        let idx = sample_categorical(params, rng);
        draws.iter_mut().for_each(|d| *d = 0.0);
        draws[idx] = 1.0;
        return Ok(draws);
    }
    draws.iter_mut().for_each(|d| *d /= total);
    Ok(draws)
}

/// Smallest value the unseen-node atom may take.
pub const MIN_UNSEEN_MASS: f64 = 1e-300;

/// Shared probability vector over the node vocabulary plus one unseen atom.
///
/// Nodes that have never been seated anywhere carry weight exactly zero; their
/// mass lives in the unseen atom. Index `num_nodes()` addresses the unseen atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasure {
    weights: Vec<f64>,
    unseen: f64,
    concentration: f64,
}

impl BaseMeasure {
    pub fn new(weights: Vec<f64>, unseen: f64, concentration: f64) -> Result<Self> {
        if !(concentration > 0.0) {
            return Err(Error::InvalidParameter(
                "node concentration must be positive".into(),
            ));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) || !(unseen > 0.0) {
            return Err(Error::InvalidParameter(
                "base measure entries must be non-negative and the unseen atom positive".into(),
            ));
        }
        let total = weights.iter().sum::<f64>() + unseen;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "base measure sums to {total}, expected 1"
            )));
        }
        Ok(BaseMeasure {
            weights,
            unseen,
            concentration,
        })
    }

    /// Prior-mean measure: every `active` node gets weight 1/(J_active + γ)
    /// and the unseen atom γ/(J_active + γ).
    pub fn uniform(active: &[bool], concentration: f64) -> Result<Self> {
        let n_active = active.iter().filter(|&&a| a).count() as f64;
        let denom = n_active + concentration;
        let weights = active
            .iter()
            .map(|&a| if a { 1.0 / denom } else { 0.0 })
            .collect();
        BaseMeasure::new(weights, concentration / denom, concentration)
    }

    /// Posterior draw given per-node table counts:
    /// `β ~ Dir(ρ_1, …, ρ_J, γ)`, with zero-count nodes held at zero.
    pub fn resample(table_counts: &[u32], concentration: f64, rng: &mut Rng) -> Result<Self> {
        let mut params = Vec::with_capacity(table_counts.len() + 1);
        let mut slots = Vec::with_capacity(table_counts.len());
        for (v, &rho) in table_counts.iter().enumerate() {
            if rho > 0 {
                params.push(rho as f64);
                slots.push(v);
            }
        }
        params.push(concentration);
        let draw = sample_dirichlet(&params, rng)?;
        let mut weights = vec![0.0; table_counts.len()];
        for (&v, &w) in slots.iter().zip(&draw) {
            weights[v] = w;
        }
        let unseen = draw[draw.len() - 1].max(MIN_UNSEEN_MASS);
        Ok(BaseMeasure {
            weights,
            unseen,
            concentration,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    /// Unseen atom index.
    pub fn unseen_index(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn weight(&self, node: usize) -> f64 {
        if node < self.weights.len() {
            self.weights[node]
        } else {
            self.unseen
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn unseen(&self) -> f64 {
        self.unseen
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    /// Maps a node to the atom used for scoring: itself when it carries mass,
    /// otherwise the unseen atom.
    #[inline]
    pub fn atom_of(&self, node: usize) -> usize {
        if node < self.weights.len() && self.weights[node] > 0.0 {
            node
        } else {
            self.weights.len()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_table_count_matches_harmonic_sum() {
        let oracle: f64 = (0..100).map(|i| 1.0 / (1.0 + i as f64)).sum();
        assert!((oracle - 5.187).abs() < 1e-3);
        let mut rng = Rng::seed_from_u64(11);
        let runs = 10_000;
        let mut total = 0usize;
        for _ in 0..runs {
            let mut r = Restaurant::new(1.0).unwrap();
            for _ in 0..100 {
                let choice = r.sample_table(&mut rng);
                r.seat(choice).unwrap();
            }
            total += r.num_tables();
        }
        let mean = total as f64 / runs as f64;
        assert!((mean - oracle).abs() < 0.05, "mean tables {mean} vs {oracle}");
    }

    #[test]
    fn dirichlet_degenerate() {
        let mut rng = Rng::seed_from_u64(1);
        assert_eq!(sample_dirichlet(&[1.0], &mut rng).unwrap(), vec![1.0]);
    }

    #[test]
    fn dirichlet_rejects_nonpositive() {
        let mut rng = Rng::seed_from_u64(1);
        assert!(sample_dirichlet(&[1.0, 0.0], &mut rng).is_err());
        assert!(sample_dirichlet(&[-1.0], &mut rng).is_err());
    }

    #[test]
    fn dirichlet_moments() {
        let mut rng = Rng::seed_from_u64(5);
        let n = 10_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let d = sample_dirichlet(&[5.0, 5.0], &mut rng).unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            sum[0] += d[0];
            sum[1] += d[1];
        }
        for s in sum {
            assert!((s / n as f64 - 0.5).abs() < 0.01);
        }

        // Var = a_i (a_0 - a_i) / (a_0^2 (a_0 + 1)) = 1*2/(9*4) = 1/18
        let mut first = Vec::with_capacity(n);
        for _ in 0..n {
            first.push(sample_dirichlet(&[1.0, 1.0, 1.0], &mut rng).unwrap()[0]);
        }
        let mean = first.iter().sum::<f64>() / n as f64;
        let var = first.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - 1.0 / 18.0).abs() < 0.003, "variance {var}");
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = Rng::seed_from_u64(3);
        let w = [1.0, 0.0, 3.0];
        let mut counts = [0usize; 3];
        for _ in 0..40_000 {
            counts[sample_categorical(&w, &mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        let p0 = counts[0] as f64 / 40_000.0;
        assert!((p0 - 0.25).abs() < 0.01);
    }

    #[test]
    fn log_categorical_handles_large_magnitudes() {
        let mut rng = Rng::seed_from_u64(3);
        let lw = [-1000.0, -1000.0 + (3.0f64).ln()];
        let hits = (0..20_000)
            .filter(|_| sample_log_categorical(&lw, &mut rng) == 1)
            .count();
        assert!((hits as f64 / 20_000.0 - 0.75).abs() < 0.015);
    }

    /// Restricted-growth strings of length n: every set partition once.
    fn partitions(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for label in 0..=max + 1 {
                prefix.push(label);
                rec(prefix, max.max(label), n, out);
                prefix.pop();
            }
        }
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        let mut prefix = vec![0];
        rec(&mut prefix, 0, n, &mut out);
        out
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Probability of a partition when customers arrive in `order`, obtained
    /// by multiplying the restaurant's own predictive weights.
    fn sequential_probability(labels: &[usize], order: &[usize], alpha: f64) -> f64 {
        let mut r = Restaurant::new(alpha).unwrap();
        let mut table_of_label: Vec<Option<usize>> = vec![None; labels.len()];
        let mut p = 1.0;
        for &c in order {
            let pred = r.predictive();
            match table_of_label[labels[c]] {
                Some(t) => {
                    p *= pred[t];
                    r.seat(TableChoice::Existing(t)).unwrap();
                }
                None => {
                    p *= pred[pred.len() - 1];
                    table_of_label[labels[c]] = Some(r.seat(TableChoice::New).unwrap());
                }
            }
        }
        p
    }

    #[test]
    fn seating_is_exchangeable_exhaustively() {
        for n in 1..=6 {
            let perms = permutations(n);
            let natural: Vec<usize> = (0..n).collect();
            let mut total = 0.0;
            for labels in partitions(n) {
                let p0 = sequential_probability(&labels, &natural, 1.7);
                total += p0;
                for order in &perms {
                    let p = sequential_probability(&labels, order, 1.7);
                    assert!((p - p0).abs() <= 1e-12 * p0.max(1e-300), "n={n} {labels:?}");
                }
            }
            assert!((total - 1.0).abs() < 1e-12, "partition mass {total}");
        }
    }

    #[test]
    fn predictive_is_probability_vector() {
        let mut rng = Rng::seed_from_u64(8);
        for _ in 0..200 {
            let k = rng.random_range(0..20);
            let sizes: Vec<u32> = (0..k).map(|_| rng.random_range(1..50)).collect();
            let alpha = rng.random_range(0.01..100.0);
            let p = Restaurant::from_sizes(sizes, alpha).unwrap().predictive();
            assert!(p.iter().all(|&x| x >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn base_measure_resample_keeps_zero_counts_at_zero() {
        let mut rng = Rng::seed_from_u64(2);
        let b = BaseMeasure::resample(&[3, 0, 5], 10.0, &mut rng).unwrap();
        assert_eq!(b.weight(1), 0.0);
        assert!(b.weight(0) > 0.0 && b.weight(2) > 0.0 && b.unseen() > 0.0);
        assert!((b.weights().iter().sum::<f64>() + b.unseen() - 1.0).abs() < 1e-12);
        assert_eq!(b.atom_of(1), 3);
        assert_eq!(b.atom_of(2), 2);
    }

    #[test]
    fn base_measure_concentrates() {
        let mut rng = Rng::seed_from_u64(2);
        let mut mean = 0.0;
        for _ in 0..200 {
            let b = BaseMeasure::resample(&[1_000_000, 0, 0], 10.0, &mut rng).unwrap();
            mean += b.weight(0) / 200.0;
        }
        assert!((mean - 1.0).abs() < 1e-4);
    }
}
