mod common;

use std::collections::HashMap;

use common::enumeration::{
    canonical_labels, mdnd_pair_posterior, ndmdnd_block_posterior, ndmdnd_pair_posterior, set_partitions,
    total_variation,
};
use crpblocks::crp::Rng;
use crpblocks::gibbs::{FitConfig, HyperParams, Model, Sampler};
use crpblocks::netcore::MultiGraph;

const EDGES: [(u32, u32); 4] = [(0, 1), (1, 2), (0, 1), (2, 2)];

fn hp() -> HyperParams {
    HyperParams {
        tau_pair: 1.0,
        tau_block: 0.7,
        gamma_block: 1.3,
        tau_node: 2.0,
        gamma_node: 1.5,
    }
}

fn empirical(model: Model, sweeps: usize, seed: u64) -> HashMap<Vec<usize>, f64> {
    empirical_keyed(model, sweeps, seed, false)
}

fn empirical_keyed(model: Model, sweeps: usize, seed: u64, with_blocks: bool) -> HashMap<Vec<usize>, f64> {
    let g = MultiGraph::from_pairs(3, &EDGES).unwrap();
    let cfg = FitConfig::default();
    let mut sampler = Sampler::new(&g, hp(), model, &cfg, Rng::seed_from_u64(seed)).unwrap();
    for _ in 0..1000 {
        sampler.step_epoch().unwrap();
    }
    let mut counts: HashMap<Vec<usize>, f64> = HashMap::new();
    for _ in 0..sweeps {
        sampler.step_epoch().unwrap();
        let st = sampler.state();
        let mut key = st.pair_partition();
        if with_blocks {
            let blocks: Vec<usize> = (0..st.num_edges())
                .flat_map(|i| {
                    let (a, b) = st.edge_block_pair(i).unwrap();
                    [a as usize, b as usize]
                })
                .collect();
            key.extend(canonical_labels(&blocks));
        }
        *counts.entry(key).or_default() += 1.0 / sweeps as f64;
    }
    counts
}

#[test]
fn oracle_covers_all_partitions() {
    let post = ndmdnd_pair_posterior(&EDGES, hp());
    assert_eq!(post.len(), 15);
    assert_eq!(set_partitions(4).len(), 15);
    assert!((post.values().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn ndmdnd_sampler_matches_enumeration() {
    let exact = ndmdnd_pair_posterior(&EDGES, hp());
    let got = empirical(Model::Ndmdnd, 200_000, 1);
    let tv = total_variation(&exact, &got);
    let mut rows: Vec<_> = exact.iter().collect();
    rows.sort_by(|a, b| a.0.cmp(b.0));
    for (k, p) in rows {
        eprintln!("{k:?} exact {p:.4} sampled {:.4}", got.get(k).copied().unwrap_or(0.0));
    }
    assert!(tv < 0.02, "total variation {tv}");
}

#[test]
fn mdnd_sampler_matches_enumeration() {
    let exact = mdnd_pair_posterior(&EDGES, hp());
    let got = empirical(Model::Mdnd, 200_000, 2);
    let tv = total_variation(&exact, &got);
    assert!(tv < 0.02, "total variation {tv}");
}

#[test]
fn block_structure_matches_enumeration() {
    let exact = ndmdnd_block_posterior(&EDGES, hp());
    let got = empirical_keyed(Model::Ndmdnd, 300_000, 3, true);
    let tv = total_variation(&exact, &got);
    eprintln!("{} joint states, tv {tv}", exact.len());
    assert!(tv < 0.03, "total variation {tv}");
}
