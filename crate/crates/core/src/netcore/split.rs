use std::collections::HashMap;

use rand::seq::SliceRandom;

use super::{Edge, MultiGraph};
use crate::crp::Rng;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Uniformly random train/test partition of the edge list.
///
/// The unit of splitting is the distinct ordered pair: all copies of a
/// weighted edge land on the same side. `round(train_fraction · #pairs)` pairs
/// go to train. Both sides keep the full graph's node vocabulary, and edges
/// keep their original relative order.
pub fn split_edges(g: &MultiGraph, spec: SplitSpec) -> Result<(MultiGraph, MultiGraph)> {
    if g.is_empty() {
        return Err(Error::Config("cannot split an empty graph".into()));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut group_of: HashMap<Edge, usize> = HashMap::new();
    for &e in g.edges() {
        let next = group_of.len();
        group_of.entry(e).or_insert(next);
    }
    let groups = group_of.len();
    let n_train = (spec.train_fraction * groups as f64).round() as usize;
    if n_train == 0 || n_train == groups {
        return Err(Error::Config(format!(
            "train fraction {} of {groups} edges leaves one side empty",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..groups).collect();
    let mut rng = Rng::named(spec.seed, "split");
    order.shuffle(&mut rng);
    let mut in_train = vec![false; groups];
    for &gidx in &order[..n_train] {
        in_train[gidx] = true;
    }
    let (train, test): (Vec<Edge>, Vec<Edge>) =
        g.edges().iter().partition(|e| in_train[group_of[e]]);
    Ok((
        MultiGraph::new(g.num_nodes(), train)?,
        MultiGraph::new(g.num_nodes(), test)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn distinct(n: u32) -> MultiGraph {
        let pairs: Vec<(u32, u32)> = (0..n).map(|i| (i, (i * 7 + 3) % n)).collect();
        MultiGraph::from_pairs(n as usize, &pairs).unwrap()
    }

    #[test]
    fn ten_edges_split_eight_two() {
        let (train, test) = split_edges(&distinct(10), SplitSpec::default()).unwrap();
        assert_eq!((train.num_edges(), test.num_edges()), (8, 2));
        assert_eq!(train.num_nodes(), 10);
        assert_eq!(test.num_nodes(), 10);
    }

    #[test]
    fn seven_hundred_nineteen_rows() {
        assert_eq!((0.8f64 * 719.0).round() as usize, 575);
        let g = {
            let pairs: Vec<(u32, u32)> = (0..719u32).map(|i| (i / 100, i % 100)).collect();
            MultiGraph::from_pairs(100, &pairs).unwrap()
        };
        let (train, test) = split_edges(&g, SplitSpec::default()).unwrap();
        assert_eq!((train.num_edges(), test.num_edges()), (575, 144));
    }

    #[test]
    fn deterministic_per_seed() {
        let g = distinct(50);
        let spec = SplitSpec {
            train_fraction: 0.7,
            seed: 99,
        };
        assert_eq!(split_edges(&g, spec).unwrap(), split_edges(&g, spec).unwrap());
        let other = split_edges(&g, SplitSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(split_edges(&g, spec).unwrap(), other);
    }

    #[test]
    fn weighted_edges_stay_whole() {
        let g = MultiGraph::from_pairs(3, &[(0, 1), (0, 1), (1, 2), (0, 1), (2, 0), (2, 2)])
            .unwrap();
        for seed in 0..20 {
            let (train, test) = split_edges(
                &g,
                SplitSpec {
                    train_fraction: 0.5,
                    seed,
                },
            )
            .unwrap();
            let copies = |h: &MultiGraph| h.edges().iter().filter(|e| **e == Edge::new(0, 1)).count();
            assert!(matches!((copies(&train), copies(&test)), (3, 0) | (0, 3)));
        }
    }

    #[test]
    fn empty_side_is_config_error() {
        let g = distinct(2);
        let spec = SplitSpec {
            train_fraction: 0.9,
            seed: 0,
        };
        assert!(matches!(split_edges(&g, spec), Err(Error::Config(_))));
        let empty = MultiGraph::new(3, vec![]).unwrap();
        assert!(split_edges(&empty, SplitSpec::default()).is_err());
        assert!(split_edges(&distinct(10), SplitSpec { train_fraction: 1.0, seed: 0 }).is_err());
    }
}
