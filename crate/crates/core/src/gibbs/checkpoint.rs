use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::slab::Slab;
use super::state::{Block, BlockTable, LogScore, NodeTable, PairTable, SeatingState, NONE};
use super::{HyperParams, Model};
use crate::crp::{BaseMeasure, Rng, RngState};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "NDMDND-CKPT v1";

/// A chain frozen between epochs.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub state: SeatingState,
    pub rng: Rng,
    pub epoch: u64,
}

#[derive(Serialize, Deserialize)]
struct Doc {
    model: Model,
    hyperparams: HyperParams,
    epoch: u64,
    num_nodes: usize,
    num_blocks: u32,
    edges: Vec<[u32; 2]>,
    edge_pair: Vec<u32>,
    edge_node_tables: Vec<[u32; 2]>,
    pair_block_tables: Vec<[u32; 2]>,
    sender_table_blocks: Vec<u32>,
    receiver_table_blocks: Vec<u32>,
    /// `(block, node)` per node table.
    node_tables: Vec<[u32; 2]>,
    beta: Vec<f64>,
    beta_unseen: f64,
    log_score: [f64; 2],
    rng: RngState,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

/// Serializes the chain. The state is compacted first, so equal chains give
/// equal text.
pub fn to_checkpoint_string(ckpt: &Checkpoint) -> String {
    let mut st = ckpt.state.clone();
    st.compact();
    assert_eq!(
        st.num_seated(),
        st.num_edges(),
        "only fully seated states can be checkpointed"
    );
    let doc = Doc {
        model: st.model,
        hyperparams: st.hp,
        epoch: ckpt.epoch,
        num_nodes: st.num_nodes,
        num_blocks: st.blocks.len() as u32,
        edges: st.edges.iter().map(|&(s, r)| [s, r]).collect(),
        edge_pair: st.edge_pair.clone(),
        edge_node_tables: st.edge_node_tables.clone(),
        pair_block_tables: st.pairs.iter().map(|(_, p)| p.block_tables).collect(),
        sender_table_blocks: st.block_tables[0].iter().map(|(_, t)| t.block).collect(),
        receiver_table_blocks: st.block_tables[1].iter().map(|(_, t)| t.block).collect(),
        node_tables: st.node_tables.iter().map(|(_, n)| [n.block, n.node]).collect(),
        beta: st.beta.weights().to_vec(),
        beta_unseen: st.beta.unseen(),
        log_score: st.log_score.parts(),
        rng: ckpt.rng.state(),
    };
    let body = serde_json::to_string_pretty(&doc).expect("checkpoint serializes");
    format!("{CHECKPOINT_MAGIC}\n{body}\n")
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let (header, body) = text
        .split_once('\n')
        .ok_or_else(|| corrupt("missing header line"))?;
    let header = header.trim_end_matches('\r');
    if header != CHECKPOINT_MAGIC {
        if header.starts_with("NDMDND-CKPT") {
            return Err(corrupt(format!(
                "unsupported version `{header}` (expected `{CHECKPOINT_MAGIC}`)"
            )));
        }
        return Err(corrupt("not a checkpoint file"));
    }
    let doc: Doc = serde_json::from_str(body).map_err(|e| corrupt(e.to_string()))?;
    rebuild(doc)
}

fn rebuild(doc: Doc) -> Result<Checkpoint> {
    doc.hyperparams.validate()?;
    let n = doc.edges.len();
    let j = doc.num_nodes;
    if doc.edge_pair.len() != n || doc.edge_node_tables.len() != n {
        return Err(corrupt("per-edge arrays disagree in length"));
    }
    if doc.beta.len() != j {
        return Err(corrupt("base measure length differs from node count"));
    }
    let check = |id: u32, len: usize, what: &str| -> Result<usize> {
        if (id as usize) < len {
            Ok(id as usize)
        } else {
            Err(corrupt(format!("{what} index {id} out of range")))
        }
    };

    let n_pairs = doc.pair_block_tables.len();
    let side_blocks = [&doc.sender_table_blocks, &doc.receiver_table_blocks];
    let nb = doc.num_blocks as usize;
    let mut pair_sizes = vec![0u32; n_pairs];
    let mut nt_sizes = vec![0u32; doc.node_tables.len()];
    let mut counts = vec![vec![0u32; j]; nb];
    let mut totals = vec![0u32; nb];
    for i in 0..n {
        let [s, r] = doc.edges[i];
        check(s, j, "node")?;
        check(r, j, "node")?;
        let t = check(doc.edge_pair[i], n_pairs, "pair table")?;
        pair_sizes[t] += 1;
        for (si, &v) in [s, r].iter().enumerate() {
            let nt = check(doc.edge_node_tables[i][si], doc.node_tables.len(), "node table")?;
            let bt = check(doc.pair_block_tables[t][si], side_blocks[si].len(), "block table")?;
            let k = check(side_blocks[si][bt], nb, "block")?;
            if doc.node_tables[nt] != [k as u32, v] {
                return Err(corrupt(format!("edge {i} endpoint disagrees with its node table")));
            }
            nt_sizes[nt] += 1;
            counts[k][v as usize] += 1;
            totals[k] += 1;
        }
    }
    if pair_sizes.contains(&0) || nt_sizes.contains(&0) {
        return Err(corrupt("empty table stored"));
    }

    let mut bt_sizes = [vec![0u32; side_blocks[0].len()], vec![0u32; side_blocks[1].len()]];
    for p in &doc.pair_block_tables {
        for si in 0..2 {
            bt_sizes[si][p[si] as usize] += 1;
        }
    }
    let mut tables = vec![[0u32; 2]; nb];
    let mut mass = vec![[0u32; 2]; nb];
    for si in 0..2 {
        for (bt, &k) in side_blocks[si].iter().enumerate() {
            tables[k as usize][si] += 1;
            mass[k as usize][si] += bt_sizes[si][bt];
        }
    }
    let mut lists: Vec<HashMap<u32, Vec<u32>>> = vec![HashMap::new(); nb];
    let mut rho = vec![0u32; j];
    for (id, &[k, v]) in doc.node_tables.iter().enumerate() {
        check(k, nb, "block")?;
        check(v, j, "node")?;
        lists[k as usize].entry(v).or_default().push(id as u32);
        rho[v as usize] += 1;
    }

    let beta = BaseMeasure::new(doc.beta, doc.beta_unseen, doc.hyperparams.gamma_node)?;
    let rng = Rng::from_state(&doc.rng)?;
    let graph_edges: Vec<crate::netcore::Edge> = doc
        .edges
        .iter()
        .map(|&[s, r]| crate::netcore::Edge::new(s, r))
        .collect();
    let graph = crate::netcore::MultiGraph::new(j, graph_edges)?;
    let mut st = SeatingState::new(&graph, doc.hyperparams, doc.model)?;
    st.beta = beta;
    st.edge_pair = doc.edge_pair;
    st.edge_node_tables = doc.edge_node_tables;
    st.pairs = Slab::from_values(
        doc.pair_block_tables
            .iter()
            .zip(&pair_sizes)
            .map(|(&block_tables, &size)| PairTable { size, block_tables })
            .collect(),
    );
    for si in 0..2 {
        st.block_tables[si] = Slab::from_values(
            side_blocks[si]
                .iter()
                .zip(&bt_sizes[si])
                .map(|(&block, &size)| BlockTable { size, block })
                .collect(),
        );
    }
    st.blocks = Slab::from_values(
        counts
            .into_iter()
            .zip(lists)
            .enumerate()
            .map(|(k, (counts, node_tables))| Block {
                tables: tables[k],
                pair_mass: mass[k],
                total: totals[k],
                counts,
                node_tables,
            })
            .collect(),
    );
    st.node_tables = Slab::from_values(
        doc.node_tables
            .iter()
            .zip(&nt_sizes)
            .map(|(&[block, node], &size)| NodeTable { block, node, size })
            .collect(),
    );
    st.rho = rho;
    st.seated = n as u32;
    st.side_customers = [n_pairs as u32; 2];
    st.total_block_tables = (side_blocks[0].len() + side_blocks[1].len()) as u32;
    st.log_score = LogScore::from_parts(doc.log_score);
    debug_assert!(st.edge_pair.iter().all(|&t| t != NONE));
    st.check_consistency()
        .map_err(|msg| corrupt(format!("inconsistent state: {msg}")))?;
    Ok(Checkpoint {
        state: st,
        rng,
        epoch: doc.epoch,
    })
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_checkpoint_string(ckpt)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text)
}
