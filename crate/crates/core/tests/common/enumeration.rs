//! Brute-force posterior over pair-table partitions for tiny edge lists,
//! obtained by summing the analytic joint over every assignment chain.

use std::collections::HashMap;

use crpblocks::gibbs::HyperParams;

/// All set partitions of `n` items as restricted-growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for label in 0..=max + 1 {
            prefix.push(label);
            let next_max = if label > max { label } else { max };
            rec(prefix, next_max, n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    rec(&mut prefix, 0, n, &mut out);
    out
}

fn block_sizes(labels: &[usize]) -> Vec<u32> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0u32; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Log exchangeable partition probability of a CRP with the given table sizes.
pub fn ln_eppf(sizes: &[u32], concentration: f64) -> f64 {
    let n: u32 = sizes.iter().sum();
    sizes.len() as f64 * concentration.ln() + sizes.iter().map(|&s| lgamma(s as f64)).sum::<f64>()
        + lgamma(concentration)
        - lgamma(concentration + n as f64)
}

/// Unsigned Stirling numbers of the first kind, `c(n, k)` for n ≤ max.
fn stirling_first(max: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; max + 1]; max + 1];
    c[0][0] = 1.0;
    for n in 1..=max {
        for k in 1..=n {
            c[n][k] = c[n - 1][k - 1] + (n - 1) as f64 * c[n - 1][k];
        }
    }
    c
}

/// Log marginal probability of the endpoint nodes given their blocks, with
/// node tables and the global node measure integrated out.
///
/// `endpoints` lists `(block, node)` for every endpoint.
pub fn ln_node_marginal(endpoints: &[(usize, u32)], tau_node: f64, gamma_node: f64) -> f64 {
    let mut groups: HashMap<(usize, u32), usize> = HashMap::new();
    let mut block_totals: HashMap<usize, u32> = HashMap::new();
    for &(k, v) in endpoints {
        *groups.entry((k, v)).or_default() += 1;
        *block_totals.entry(k).or_default() += 1;
    }
    let mut groups: Vec<((usize, u32), usize)> = groups.into_iter().collect();
    groups.sort();
    let max = groups.iter().map(|g| g.1).max().unwrap_or(0);
    let stirling = stirling_first(max);
    let nodes: Vec<u32> = {
        let mut v: Vec<u32> = groups.iter().map(|g| g.0 .1).collect();
        v.sort();
        v.dedup();
        v
    };

    // Sum over table counts j_g per group: Π_g c(n_g, j_g) τ^{j_g} times the
    // dish-level partition probability of the resulting table counts.
    fn rec(
        idx: usize,
        groups: &[((usize, u32), usize)],
        stirling: &[Vec<f64>],
        tau: f64,
        gamma: f64,
        nodes: &[u32],
        rho: &mut HashMap<u32, u32>,
        weight: f64,
        acc: &mut f64,
    ) {
        if idx == groups.len() {
            let sizes: Vec<u32> = nodes.iter().map(|v| rho[v]).collect();
            *acc += weight * ln_eppf(&sizes, gamma).exp();
            return;
        }
        let ((_, v), c) = groups[idx];
        for j in 1..=c {
            *rho.get_mut(&v).unwrap() += j as u32;
            rec(
                idx + 1,
                groups,
                stirling,
                tau,
                gamma,
                nodes,
                rho,
                weight * stirling[c][j] * tau.powi(j as i32),
                acc,
            );
            *rho.get_mut(&v).unwrap() -= j as u32;
        }
    }
    let mut rho: HashMap<u32, u32> = nodes.iter().map(|&v| (v, 0)).collect();
    let mut acc = 0.0;
    rec(0, &groups, &stirling, tau_node, gamma_node, &nodes, &mut rho, 1.0, &mut acc);
    let norm: f64 = block_totals
        .values()
        .map(|&n| lgamma(tau_node) - lgamma(tau_node + n as f64))
        .sum();
    norm + acc.ln()
}

fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

struct NodeCache<'a> {
    edges: &'a [(u32, u32)],
    hp: HyperParams,
    memo: HashMap<Vec<usize>, f64>,
}

impl NodeCache<'_> {
    /// `blocks[2i]`, `blocks[2i+1]` are the sender and receiver blocks of edge i.
    fn get(&mut self, blocks: &[usize]) -> f64 {
        let key = canonical(blocks);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let endpoints: Vec<(usize, u32)> = self
            .edges
            .iter()
            .enumerate()
            .flat_map(|(i, &(s, r))| [(key[2 * i], s), (key[2 * i + 1], r)])
            .collect();
        let v = ln_node_marginal(&endpoints, self.hp.tau_node, self.hp.gamma_node);
        self.memo.insert(key, v);
        v
    }
}

fn normalize(mut log_w: HashMap<Vec<usize>, f64>) -> HashMap<Vec<usize>, f64> {
    let max = log_w.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_w.values().map(|lw| (lw - max).exp()).sum();
    for lw in log_w.values_mut() {
        *lw = (*lw - max).exp() / total;
    }
    log_w
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Posterior over pair-table partitions (restricted-growth strings over the
/// edges) for the nondiagonal model.
pub fn ndmdnd_pair_posterior(edges: &[(u32, u32)], hp: HyperParams) -> HashMap<Vec<usize>, f64> {
    ndmdnd_posterior(edges, hp, false)
}

/// Posterior over the pair partition joined with the block partition of the
/// endpoints: key is the pair labels followed by the canonical labels of
/// `[sender block of edge 0, receiver block of edge 0, sender block of edge 1, …]`.
pub fn ndmdnd_block_posterior(edges: &[(u32, u32)], hp: HyperParams) -> HashMap<Vec<usize>, f64> {
    ndmdnd_posterior(edges, hp, true)
}

fn ndmdnd_posterior(edges: &[(u32, u32)], hp: HyperParams, with_blocks: bool) -> HashMap<Vec<usize>, f64> {
    let mut cache = NodeCache {
        edges,
        hp,
        memo: HashMap::new(),
    };
    let mut terms: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    for pairs in set_partitions(edges.len()) {
        let pair_sizes = block_sizes(&pairs);
        let p = pair_sizes.len();
        for senders in set_partitions(p) {
            let s_sizes = block_sizes(&senders);
            for receivers in set_partitions(p) {
                let r_sizes = block_sizes(&receivers);
                let n_tables = s_sizes.len() + r_sizes.len();
                let base = ln_eppf(&pair_sizes, hp.tau_pair)
                    + ln_eppf(&s_sizes, hp.tau_block)
                    + ln_eppf(&r_sizes, hp.tau_block);
                for labels in set_partitions(n_tables) {
                    let block_weight = ln_eppf(&block_sizes(&labels), hp.gamma_block);
                    let endpoint_blocks: Vec<usize> = pairs
                        .iter()
                        .flat_map(|&t| {
                            [labels[senders[t]], labels[s_sizes.len() + receivers[t]]]
                        })
                        .collect();
                    let mut key = pairs.clone();
                    if with_blocks {
                        key.extend(canonical(&endpoint_blocks));
                    }
                    terms
                        .entry(key)
                        .or_default()
                        .push(base + block_weight + cache.get(&endpoint_blocks));
                }
            }
        }
    }
    normalize(terms.into_iter().map(|(k, t)| (k, log_sum_exp(&t))).collect())
}

/// Canonical relabelling of a label sequence (first label seen becomes 0).
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    canonical(labels)
}

/// Posterior over pair-table partitions for the diagonal model, where each
/// pair table is its own block.
pub fn mdnd_pair_posterior(edges: &[(u32, u32)], hp: HyperParams) -> HashMap<Vec<usize>, f64> {
    let mut cache = NodeCache {
        edges,
        hp,
        memo: HashMap::new(),
    };
    let mut out = HashMap::new();
    for pairs in set_partitions(edges.len()) {
        let endpoint_blocks: Vec<usize> = pairs.iter().flat_map(|&t| [t, t]).collect();
        let lw = ln_eppf(&block_sizes(&pairs), hp.gamma_block) + cache.get(&endpoint_blocks);
        out.insert(pairs, lw);
    }
    normalize(out)
}

/// Total-variation distance between two distributions on the same keys.
pub fn total_variation(a: &HashMap<Vec<usize>, f64>, b: &HashMap<Vec<usize>, f64>) -> f64 {
    let mut keys: Vec<&Vec<usize>> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
