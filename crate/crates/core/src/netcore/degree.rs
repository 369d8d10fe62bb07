use std::collections::BTreeMap;

use super::MultiGraph;

/// Per-node degrees counted with edge multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeStats {
    pub in_degree: Vec<u64>,
    pub out_degree: Vec<u64>,
}

impl DegreeStats {
    pub fn total(&self, node: usize) -> u64 {
        self.in_degree[node] + self.out_degree[node]
    }

    pub fn totals(&self) -> Vec<u64> {
        (0..self.in_degree.len()).map(|v| self.total(v)).collect()
    }

    /// Minimum total degree over nodes that occur in at least one edge.
    pub fn min_degree(&self) -> Option<u64> {
        self.totals().into_iter().filter(|&d| d > 0).min()
    }

    pub fn max_degree(&self) -> Option<u64> {
        self.totals().into_iter().max()
    }

    pub fn mean_degree(&self) -> f64 {
        let active: Vec<u64> = self.totals().into_iter().filter(|&d| d > 0).collect();
        if active.is_empty() {
            return 0.0;
        }
        active.iter().sum::<u64>() as f64 / active.len() as f64
    }

    /// `(degree, number of nodes)` for every positive total degree, ascending.
    pub fn distribution(&self) -> Vec<(u64, u64)> {
        let mut hist = BTreeMap::new();
        for d in self.totals().into_iter().filter(|&d| d > 0) {
            *hist.entry(d).or_insert(0u64) += 1;
        }
        hist.into_iter().collect()
    }
}

pub fn degree_stats(g: &MultiGraph) -> DegreeStats {
    let mut in_degree = vec![0u64; g.num_nodes()];
    let mut out_degree = vec![0u64; g.num_nodes()];
    for e in g.edges() {
        out_degree[e.sender.index()] += 1;
        in_degree[e.receiver.index()] += 1;
    }
    DegreeStats {
        in_degree,
        out_degree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_multiplicity() {
        let g = MultiGraph::from_pairs(2, &[(0, 1), (0, 1)]).unwrap();
        let d = degree_stats(&g);
        assert_eq!(d.out_degree, vec![2, 0]);
        assert_eq!(d.in_degree, vec![0, 2]);
        assert_eq!(d.max_degree(), Some(2));
        assert_eq!(d.min_degree(), Some(2));
        assert_eq!(d.distribution(), vec![(2, 2)]);
    }

    #[test]
    fn self_loop_counts_twice() {
        let g = MultiGraph::from_pairs(1, &[(0, 0)]).unwrap();
        assert_eq!(degree_stats(&g).total(0), 2);
    }

    #[test]
    fn totals_sum_to_twice_edges() {
        let g = MultiGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (3, 3), (0, 1)]).unwrap();
        let d = degree_stats(&g);
        assert_eq!(d.totals().iter().sum::<u64>(), 2 * g.num_edges() as u64);
        assert_eq!(d.min_degree(), Some(2));
    }
}
