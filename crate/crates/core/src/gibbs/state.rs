use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::slab::Slab;
use super::{HyperParams, Model};
use crate::crp::{sample_categorical_with_total, BaseMeasure, Rng};
use crate::error::Result;
use crate::netcore::MultiGraph;

pub(crate) const NONE: u32 = u32::MAX;

/// Which block restaurant a block table belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Sender,
    Receiver,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Sender, Side::Receiver];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Side::Sender => 0,
            Side::Receiver => 1,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct PairTable {
    pub size: u32,
    pub block_tables: [u32; 2],
}

#[derive(Clone, Debug)]
pub(crate) struct BlockTable {
    /// Pair tables seated here.
    pub size: u32,
    pub block: u32,
}

#[derive(Clone, Debug)]
pub(crate) struct Block {
    /// Block tables carrying this label, per side. `m_k` is their sum.
    pub tables: [u32; 2],
    /// Pair-table customers summed over this block's tables, per side.
    pub pair_mass: [u32; 2],
    /// Endpoints seated in this block's node restaurant.
    pub total: u32,
    /// Endpoints per node, `n_{k,v}`.
    pub counts: Vec<u32>,
    /// Node tables per node; the list length is `ρ_{k,v}`.
    pub node_tables: HashMap<u32, Vec<u32>>,
}

impl Block {
    #[inline]
    pub fn m(&self) -> u32 {
        self.tables[0] + self.tables[1]
    }
}

#[derive(Clone, Debug)]
pub(crate) struct NodeTable {
    pub block: u32,
    pub node: u32,
    pub size: u32,
}

/// Compensated running sum for the incrementally maintained log-score.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct LogScore {
    sum: f64,
    comp: f64,
}

impl LogScore {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn parts(&self) -> [f64; 2] {
        [self.sum, self.comp]
    }

    pub fn from_parts(parts: [f64; 2]) -> Self {
        LogScore {
            sum: parts[0],
            comp: parts[1],
        }
    }
}

/// Sender-side choice when an edge opens a new pair table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SenderOption {
    /// Join one of the existing sender block tables labelled with this block.
    ExistingTableAt(u32),
    /// Open a sender block table and label it with this existing block.
    NewTableAt(u32),
    /// Open a sender block table with a brand-new block.
    NewBlock,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Scratch {
    pub fs: Vec<f64>,
    pub fr: Vec<f64>,
    pub frs: Vec<f64>,
    pub weights: Vec<f64>,
    pub ids: Vec<u32>,
    pub options: Vec<(SenderOption, f64, f64)>,
}

#[inline]
fn crp_term(size: u32, customers: u32, concentration: f64) -> f64 {
    let num = if size == 0 {
        concentration.ln()
    } else {
        (size as f64).ln()
    };
    num - (customers as f64 + concentration).ln()
}

/// Full latent state of one chain: the assignment chain
/// edge → pair table → (sender block table, receiver block table) → blocks,
/// the per-block node restaurants, every count cache, and the base measure.
#[derive(Clone, Debug)]
pub struct SeatingState {
    pub(crate) model: Model,
    pub(crate) hp: HyperParams,
    pub(crate) num_nodes: usize,
    pub(crate) edges: Vec<(u32, u32)>,
    pub(crate) edge_pair: Vec<u32>,
    pub(crate) edge_node_tables: Vec<[u32; 2]>,
    pub(crate) pairs: Slab<PairTable>,
    pub(crate) block_tables: [Slab<BlockTable>; 2],
    pub(crate) blocks: Slab<Block>,
    pub(crate) node_tables: Slab<NodeTable>,
    /// `ρ_{·v}`: node tables labelled `v` across all blocks.
    pub(crate) rho: Vec<u32>,
    pub(crate) beta: BaseMeasure,
    pub(crate) seated: u32,
    /// Customers (pair tables) of the sender and receiver block restaurants.
    pub(crate) side_customers: [u32; 2],
    /// `m_·`: customers of the block restaurant.
    pub(crate) total_block_tables: u32,
    pub(crate) log_score: LogScore,
    pub(crate) verify: bool,
    pub(crate) scratch: Scratch,
    pub(crate) spare_counts: Vec<Vec<u32>>,
}

impl SeatingState {
    /// A state holding `graph`'s edges with nothing seated. The base measure
    /// starts at its prior mean over the nodes that occur in the graph.
    pub fn new(graph: &MultiGraph, hp: HyperParams, model: Model) -> Result<Self> {
        hp.validate()?;
        let beta = BaseMeasure::uniform(&graph.active_nodes(), hp.gamma_node)?;
        let edges: Vec<(u32, u32)> = graph
            .edges()
            .iter()
            .map(|e| (e.sender.0, e.receiver.0))
            .collect();
        let n = edges.len();
        Ok(SeatingState {
            model,
            hp,
            num_nodes: graph.num_nodes(),
            edges,
            edge_pair: vec![NONE; n],
            edge_node_tables: vec![[NONE; 2]; n],
            pairs: Slab::default(),
            block_tables: [Slab::default(), Slab::default()],
            blocks: Slab::default(),
            node_tables: Slab::default(),
            rho: vec![0; graph.num_nodes()],
            beta,
            seated: 0,
            side_customers: [0; 2],
            total_block_tables: 0,
            log_score: LogScore::default(),
            verify: false,
            scratch: Scratch::default(),
            spare_counts: Vec::new(),
        })
    }

    /// Turns on the full from-scratch consistency check after every move.
    pub fn set_verify(&mut self, verify: bool) {
        self.verify = verify;
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn hyperparams(&self) -> &HyperParams {
        &self.hp
    }

    pub fn beta(&self) -> &BaseMeasure {
        &self.beta
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_seated(&self) -> usize {
        self.seated as usize
    }

    pub fn edge(&self, i: usize) -> (u32, u32) {
        self.edges[i]
    }

    /// The observed graph the state is built on.
    pub fn graph(&self) -> MultiGraph {
        let edges = self
            .edges
            .iter()
            .map(|&(s, r)| crate::netcore::Edge::new(s, r))
            .collect();
        MultiGraph::new(self.num_nodes, edges).expect("state edges are in range")
    }

    pub fn num_pair_tables(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_block_tables(&self) -> usize {
        self.block_tables[0].len() + self.block_tables[1].len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_ids(&self) -> Vec<u32> {
        self.blocks.iter().map(|(k, _)| k).collect()
    }

    /// `m_k` for a live block.
    pub fn block_table_count(&self, k: u32) -> u32 {
        self.blocks.get(k).m()
    }

    /// `n_{k,v}` for a live block.
    pub fn block_node_count(&self, k: u32, v: usize) -> u32 {
        self.blocks.get(k).counts.get(v).copied().unwrap_or(0)
    }

    /// Endpoints seated in a live block.
    pub fn block_total(&self, k: u32) -> u32 {
        self.blocks.get(k).total
    }

    /// `ρ_{·v}`.
    pub fn node_table_count(&self, v: usize) -> u32 {
        self.rho[v]
    }

    pub fn log_score(&self) -> f64 {
        self.log_score.value()
    }

    /// Pair table of edge `i`, if seated.
    pub fn pair_of_edge(&self, i: usize) -> Option<u32> {
        let t = self.edge_pair[i];
        (t != NONE).then_some(t)
    }

    /// `(sender block, receiver block)` carried by edge `i`'s pair table.
    pub fn edge_block_pair(&self, i: usize) -> Option<(u32, u32)> {
        self.pair_of_edge(i).map(|t| self.pair_blocks(t))
    }

    /// Live pair tables as `(id, size, sender block, receiver block)`.
    pub fn pair_tables(&self) -> Vec<(u32, u32, u32, u32)> {
        self.pairs
            .iter()
            .map(|(t, p)| {
                let (ks, kr) = self.pair_blocks(t);
                (t, p.size, ks, kr)
            })
            .collect()
    }

    #[inline]
    pub(crate) fn pair_blocks(&self, t: u32) -> (u32, u32) {
        let p = self.pairs.get(t);
        (
            self.block_tables[0].get(p.block_tables[0]).block,
            self.block_tables[1].get(p.block_tables[1]).block,
        )
    }

    /// Restricted-growth labelling of edges by pair table (first edge gets 0).
    pub fn pair_partition(&self) -> Vec<usize> {
        let mut seen: HashMap<u32, usize> = HashMap::new();
        self.edge_pair
            .iter()
            .map(|&t| {
                let next = seen.len();
                *seen.entry(t).or_insert(next)
            })
            .collect()
    }

    pub(crate) fn pair_concentration(&self) -> f64 {
        match self.model {
            Model::Ndmdnd => self.hp.tau_pair,
            Model::Mdnd => self.hp.gamma_block,
        }
    }

    // ----- node-level predictive -------------------------------------------------

    /// Dirichlet-multinomial node predictive
    /// `f_k(v) = (n_{k,v} + τ_node β_v) / (n_{k,·} + τ_node)`.
    /// `None` is the empty (new) block, whose predictive is `β_v`. Node index
    /// `num_nodes()` is the unseen atom.
    pub fn node_predictive(&self, block: Option<u32>, v: usize) -> f64 {
        match block {
            Some(k) => self.f(k, v),
            None => self.beta.weight(v),
        }
    }

    #[inline]
    pub(crate) fn f(&self, k: u32, v: usize) -> f64 {
        let b = self.blocks.get(k);
        let c = if v < self.num_nodes { b.counts[v] } else { 0 };
        let tau = self.hp.tau_node;
        (c as f64 + tau * self.beta.weight(v)) / (b.total as f64 + tau)
    }

    /// Predictive of `r` in block `k` after one more endpoint `s` joined it.
    #[inline]
    fn f_after(&self, k: u32, s: usize, r: usize) -> f64 {
        let b = self.blocks.get(k);
        let c = if r < self.num_nodes { b.counts[r] } else { 0 } + (r == s) as u32;
        let tau = self.hp.tau_node;
        (c as f64 + tau * self.beta.weight(r)) / (b.total as f64 + 1.0 + tau)
    }

    /// Predictive of `r` in a fresh block that has just received `s`.
    #[inline]
    pub(crate) fn f_new_after(&self, s: usize, r: usize) -> f64 {
        let tau = self.hp.tau_node;
        ((r == s) as u32 as f64 + tau * self.beta.weight(r)) / (1.0 + tau)
    }

    /// Fills `f_k(s)`, `f_k(r)` and `f_k(r | s joined k)` for every block slot.
    pub(crate) fn fill_factors(&self, s: usize, r: usize, fs: &mut Vec<f64>, fr: &mut Vec<f64>, frs: &mut Vec<f64>) {
        let cap = self.blocks.capacity();
        fs.clear();
        fr.clear();
        frs.clear();
        fs.resize(cap, 0.0);
        fr.resize(cap, 0.0);
        frs.resize(cap, 0.0);
        for (k, _) in self.blocks.iter() {
            let ki = k as usize;
            fs[ki] = self.f(k, s);
            fr[ki] = self.f(k, r);
            frs[ki] = self.f_after(k, s, r);
        }
    }

    /// Weight of each existing pair table for edge `(s, r)`, pushed onto
    /// `ids`/`weights`; returns their sum.
    pub(crate) fn existing_pair_weights(
        &self,
        fs: &[f64],
        fr: &[f64],
        frs: &[f64],
        ids: &mut Vec<u32>,
        weights: &mut Vec<f64>,
    ) -> f64 {
        ids.clear();
        weights.clear();
        let mut total = 0.0;
        for (t, p) in self.pairs.iter() {
            let ks = self.block_tables[0].get(p.block_tables[0]).block as usize;
            let kr = self.block_tables[1].get(p.block_tables[1]).block as usize;
            let second = if ks == kr { frs[kr] } else { fr[kr] };
            let w = p.size as f64 * fs[ks] * second;
            ids.push(t);
            weights.push(w);
            total += w;
        }
        total
    }

    /// Probability that an edge opening a new pair table emits `(s, r)`,
    /// marginalizing the sender and receiver franchise draws jointly. Options
    /// for the sender side are written to `options` as
    /// `(option, P(option) · f(s) · P(r | option), P(r | option))`; the return
    /// value is the sum of the weights.
    pub(crate) fn new_pair_options(
        &self,
        s: usize,
        r: usize,
        fs: &[f64],
        fr: &[f64],
        frs: &[f64],
        options: &mut Vec<(SenderOption, f64, f64)>,
    ) -> f64 {
        options.clear();
        let tb = self.hp.tau_block;
        let g = self.hp.gamma_block;
        let m_all = self.total_block_tables as f64;
        let den_s = self.side_customers[0] as f64 + tb;
        let den_r = self.side_customers[1] as f64 + tb;
        let beta_r = self.beta.weight(r);
        let beta_s = self.beta.weight(s);

        let mut base_tables = 0.0;
        let mut base_blocks = 0.0;
        for (k, b) in self.blocks.iter() {
            base_tables += b.pair_mass[1] as f64 * fr[k as usize];
            base_blocks += b.m() as f64 * fr[k as usize];
        }

        let mut total = 0.0;
        for (k, b) in self.blocks.iter() {
            let ki = k as usize;
            let m = b.m() as f64;
            let delta = frs[ki] - fr[ki];
            let tables = base_tables + b.pair_mass[1] as f64 * delta;
            let shifted = base_blocks + m * delta;
            if b.pair_mass[0] > 0 {
                let recv = (tables + tb * (shifted + g * beta_r) / (m_all + g)) / den_r;
                let w = b.pair_mass[0] as f64 / den_s * fs[ki] * recv;
                options.push((SenderOption::ExistingTableAt(k), w, recv));
                total += w;
            }
            let recv = (tables + tb * (shifted + frs[ki] + g * beta_r) / (m_all + 1.0 + g)) / den_r;
            let w = tb / den_s * m / (m_all + g) * fs[ki] * recv;
            options.push((SenderOption::NewTableAt(k), w, recv));
            total += w;
        }
        let recv = (base_tables
            + tb * (base_blocks + self.f_new_after(s, r) + g * beta_r) / (m_all + 1.0 + g))
            / den_r;
        let w = tb / den_s * g / (m_all + g) * beta_s * recv;
        options.push((SenderOption::NewBlock, w, recv));
        total + w
    }

    /// Posterior predictive probability that the next edge is `(s, r)`.
    /// Nodes at index `num_nodes()` (or without base-measure mass) are
    /// scored as the unseen atom.
    pub fn edge_probability(&self, s: usize, r: usize) -> f64 {
        let s = self.beta.atom_of(s);
        let r = self.beta.atom_of(r);
        let (mut fs, mut fr, mut frs) = (Vec::new(), Vec::new(), Vec::new());
        self.fill_factors(s, r, &mut fs, &mut fr, &mut frs);
        let (mut ids, mut weights) = (Vec::new(), Vec::new());
        let existing = self.existing_pair_weights(&fs, &fr, &frs, &mut ids, &mut weights);
        let alpha = self.pair_concentration();
        let new_mass = match self.model {
            Model::Ndmdnd => {
                let mut options = Vec::new();
                self.new_pair_options(s, r, &fs, &fr, &frs, &mut options)
            }
            Model::Mdnd => self.beta.weight(s) * self.f_new_after(s, r),
        };
        (existing + alpha * new_mass) / (self.seated as f64 + alpha)
    }

    // ----- seating primitives ----------------------------------------------------

    fn take_counts(&mut self) -> Vec<u32> {
        self.spare_counts
            .pop()
            .unwrap_or_else(|| vec![0; self.num_nodes])
    }

    pub(crate) fn open_block(&mut self) -> u32 {
        let counts = self.take_counts();
        self.blocks.insert(Block {
            tables: [0; 2],
            pair_mass: [0; 2],
            total: 0,
            counts,
            node_tables: HashMap::new(),
        })
    }

    fn close_block_if_unused(&mut self, k: u32) {
        let b = self.blocks.get(k);
        if b.m() == 0 {
            assert!(
                b.total == 0 && b.node_tables.is_empty(),
                "block {k} has no tables but still seats {} endpoints",
                b.total
            );
            let b = self.blocks.remove(k);
            debug_assert!(b.counts.iter().all(|&c| c == 0));
            self.spare_counts.push(b.counts);
        }
    }

    /// Labels a detached (or fresh) block table with block `k`: one more
    /// customer for the block restaurant.
    pub(crate) fn attach_block_table(&mut self, side: Side, bt: u32, k: u32) {
        let si = side.index();
        let size = {
            let table = self.block_tables[si].get_mut(bt);
            debug_assert_eq!(table.block, NONE);
            table.block = k;
            table.size
        };
        let m_before = self.blocks.get(k).m();
        let total_before = self.total_block_tables;
        {
            let b = self.blocks.get_mut(k);
            b.tables[si] += 1;
            b.pair_mass[si] += size;
        }
        self.total_block_tables += 1;
        if self.model == Model::Ndmdnd {
            self.log_score
                .add(crp_term(m_before, total_before, self.hp.gamma_block));
        }
    }

    /// Removes a block table's label; closes the block when it empties.
    pub(crate) fn detach_block_table(&mut self, side: Side, bt: u32) -> u32 {
        let si = side.index();
        let (k, size) = {
            let table = self.block_tables[si].get_mut(bt);
            let k = table.block;
            table.block = NONE;
            (k, table.size)
        };
        {
            let b = self.blocks.get_mut(k);
            b.tables[si] -= 1;
            b.pair_mass[si] -= size;
        }
        self.total_block_tables -= 1;
        if self.model == Model::Ndmdnd {
            let m_after = self.blocks.get(k).m();
            self.log_score
                .add(-crp_term(m_after, self.total_block_tables, self.hp.gamma_block));
        }
        self.close_block_if_unused(k);
        k
    }

    pub(crate) fn new_block_table(&mut self, side: Side, k: u32) -> u32 {
        let bt = self.block_tables[side.index()].insert(BlockTable {
            size: 0,
            block: NONE,
        });
        self.attach_block_table(side, bt, k);
        bt
    }

    /// Seats one more pair table at block table `bt`.
    pub(crate) fn block_table_seat(&mut self, side: Side, bt: u32) {
        let si = side.index();
        let (k, size_before) = {
            let table = self.block_tables[si].get_mut(bt);
            table.size += 1;
            (table.block, table.size - 1)
        };
        self.blocks.get_mut(k).pair_mass[si] += 1;
        let customers_before = self.side_customers[si];
        self.side_customers[si] += 1;
        if self.model == Model::Ndmdnd {
            self.log_score
                .add(crp_term(size_before, customers_before, self.hp.tau_block));
        }
    }

    fn block_table_unseat(&mut self, side: Side, bt: u32) {
        let si = side.index();
        let (k, size_after) = {
            let table = self.block_tables[si].get_mut(bt);
            table.size -= 1;
            (table.block, table.size)
        };
        self.blocks.get_mut(k).pair_mass[si] -= 1;
        self.side_customers[si] -= 1;
        if self.model == Model::Ndmdnd {
            self.log_score.add(-crp_term(
                size_after,
                self.side_customers[si],
                self.hp.tau_block,
            ));
        }
        if size_after == 0 {
            self.detach_block_table(side, bt);
            self.block_tables[si].remove(bt);
        }
    }

    pub(crate) fn new_pair_table(&mut self) -> u32 {
        self.pairs.insert(PairTable {
            size: 0,
            block_tables: [NONE; 2],
        })
    }

    /// Seats edge `i` at pair table `t`.
    pub(crate) fn pair_seat(&mut self, i: usize, t: u32) {
        let size_before = {
            let p = self.pairs.get_mut(t);
            p.size += 1;
            p.size - 1
        };
        let alpha = self.pair_concentration();
        self.log_score.add(crp_term(size_before, self.seated, alpha));
        self.seated += 1;
        self.edge_pair[i] = t;
    }

    fn pair_unseat(&mut self, i: usize) {
        let t = self.edge_pair[i];
        let size_after = {
            let p = self.pairs.get_mut(t);
            p.size -= 1;
            p.size
        };
        self.seated -= 1;
        let alpha = self.pair_concentration();
        self.log_score.add(-crp_term(size_after, self.seated, alpha));
        self.edge_pair[i] = NONE;
        if size_after == 0 {
            let p = self.pairs.remove(t);
            for side in Side::BOTH {
                self.block_table_unseat(side, p.block_tables[side.index()]);
            }
        }
    }

    /// Seats one endpoint with node `v` in block `k`'s node restaurant:
    /// existing tables of `v` with weight equal to their size, a new table
    /// with weight `τ_node β_v`.
    pub(crate) fn seat_node(&mut self, k: u32, v: u32, rng: &mut Rng) -> u32 {
        let tau = self.hp.tau_node;
        let beta_v = self.beta.weight(v as usize);
        let chosen = {
            let b = self.blocks.get(k);
            match b.node_tables.get(&v) {
                Some(list) if !list.is_empty() => {
                    let weights = &mut self.scratch.weights;
                    weights.clear();
                    let mut total = 0.0;
                    for &nt in list {
                        let w = self.node_tables.get(nt).size as f64;
                        weights.push(w);
                        total += w;
                    }
                    weights.push(tau * beta_v);
                    total += tau * beta_v;
                    let idx = sample_categorical_with_total(weights, total, rng);
                    list.get(idx).copied()
                }
                _ => None,
            }
        };
        let total_before = self.blocks.get(k).total;
        let (nt, size_before) = match chosen {
            Some(nt) => {
                let table = self.node_tables.get_mut(nt);
                table.size += 1;
                (nt, table.size - 1)
            }
            None => {
                assert!(beta_v > 0.0, "node {v} has no base-measure mass");
                let nt = self.node_tables.insert(NodeTable {
                    block: k,
                    node: v,
                    size: 1,
                });
                self.blocks
                    .get_mut(k)
                    .node_tables
                    .entry(v)
                    .or_default()
                    .push(nt);
                self.rho[v as usize] += 1;
                self.log_score.add(beta_v.ln());
                (nt, 0)
            }
        };
        let b = self.blocks.get_mut(k);
        b.counts[v as usize] += 1;
        b.total += 1;
        self.log_score.add(crp_term(size_before, total_before, tau));
        nt
    }

    pub(crate) fn unseat_node(&mut self, nt: u32) {
        let (k, v, size_after) = {
            let table = self.node_tables.get_mut(nt);
            table.size -= 1;
            (table.block, table.node, table.size)
        };
        let total_after = {
            let b = self.blocks.get_mut(k);
            b.counts[v as usize] -= 1;
            b.total -= 1;
            b.total
        };
        self.log_score
            .add(-crp_term(size_after, total_after, self.hp.tau_node));
        if size_after == 0 {
            let b = self.blocks.get_mut(k);
            let list = b.node_tables.get_mut(&v).expect("node table list");
            let pos = list.iter().position(|&x| x == nt).expect("node table listed");
            list.swap_remove(pos);
            if list.is_empty() {
                b.node_tables.remove(&v);
            }
            self.node_tables.remove(nt);
            self.rho[v as usize] -= 1;
            self.log_score.add(-self.beta.weight(v as usize).ln());
        }
    }

    /// Removes edge `i` from every level, cascading empty-table removal.
    pub(crate) fn unseat_edge(&mut self, i: usize) {
        let [snt, rnt] = self.edge_node_tables[i];
        self.unseat_node(rnt);
        self.unseat_node(snt);
        self.edge_node_tables[i] = [NONE; 2];
        self.pair_unseat(i);
    }

    /// Replaces the base measure and moves the `Σ ρ_v ln β_v` part of the
    /// log-score along with it.
    pub(crate) fn replace_beta(&mut self, beta: BaseMeasure) {
        let mut delta = 0.0;
        for (v, &rho) in self.rho.iter().enumerate() {
            if rho > 0 {
                delta += rho as f64 * (beta.weight(v).ln() - self.beta.weight(v).ln());
            }
        }
        self.beta = beta;
        self.log_score.add(delta);
    }

    // ----- from-scratch checks ---------------------------------------------------

    /// Log joint probability of the full seating given β, recomputed from the
    /// table sizes with log-gamma functions.
    pub fn recompute_log_score(&self) -> f64 {
        fn eppf<I: Iterator<Item = u32>>(sizes: I, concentration: f64) -> f64 {
            let mut tables = 0u64;
            let mut customers = 0u64;
            let mut acc = 0.0;
            for s in sizes {
                tables += 1;
                customers += s as u64;
                acc += libm::lgamma(s as f64);
            }
            tables as f64 * concentration.ln() + acc + libm::lgamma(concentration)
                - libm::lgamma(concentration + customers as f64)
        }
        let mut score = eppf(self.pairs.iter().map(|(_, p)| p.size), self.pair_concentration());
        if self.model == Model::Ndmdnd {
            for side in 0..2 {
                score += eppf(
                    self.block_tables[side].iter().map(|(_, t)| t.size),
                    self.hp.tau_block,
                );
            }
            score += eppf(self.blocks.iter().map(|(_, b)| b.m()), self.hp.gamma_block);
        }
        for (k, _) in self.blocks.iter() {
            score += eppf(
                self.node_tables
                    .iter()
                    .filter(|(_, nt)| nt.block == k)
                    .map(|(_, nt)| nt.size),
                self.hp.tau_node,
            );
        }
        for (v, &rho) in self.rho.iter().enumerate() {
            if rho > 0 {
                score += rho as f64 * self.beta.weight(v).ln();
            }
        }
        score
    }

    /// Recomputes every cache from the assignment chain and compares.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let n = self.edges.len();
        let mut pair_size: HashMap<u32, u32> = HashMap::new();
        let mut seated = 0u32;
        for i in 0..n {
            let t = self.edge_pair[i];
            let [snt, rnt] = self.edge_node_tables[i];
            if t == NONE {
                if snt != NONE || rnt != NONE {
                    return Err(format!("unseated edge {i} still holds node tables"));
                }
                continue;
            }
            seated += 1;
            if !self.pairs.contains(t) {
                return Err(format!("edge {i} points at dead pair table {t}"));
            }
            *pair_size.entry(t).or_default() += 1;
            let (ks, kr) = self.pair_blocks(t);
            let (s, r) = self.edges[i];
            for (nt, k, v) in [(snt, ks, s), (rnt, kr, r)] {
                if !self.node_tables.contains(nt) {
                    return Err(format!("edge {i} points at dead node table {nt}"));
                }
                let table = self.node_tables.get(nt);
                if table.block != k || table.node != v {
                    return Err(format!(
                        "edge {i}: node table {nt} is ({}, {}), chain says ({k}, {v})",
                        table.block, table.node
                    ));
                }
            }
        }
        if seated != self.seated {
            return Err(format!("seated {} vs recount {seated}", self.seated));
        }
        if pair_size.len() != self.pairs.len() {
            return Err("empty pair table survived".into());
        }
        let mut bt_size: [HashMap<u32, u32>; 2] = [HashMap::new(), HashMap::new()];
        for (t, p) in self.pairs.iter() {
            if pair_size.get(&t).copied() != Some(p.size) {
                return Err(format!("pair table {t} size {} vs recount", p.size));
            }
            for si in 0..2 {
                let bt = p.block_tables[si];
                if !self.block_tables[si].contains(bt) {
                    return Err(format!("pair table {t} points at dead block table"));
                }
                *bt_size[si].entry(bt).or_default() += 1;
            }
            if self.model == Model::Mdnd {
                let (ks, kr) = self.pair_blocks(t);
                if ks != kr {
                    return Err(format!("diagonal model has off-diagonal pair table {t}"));
                }
            }
        }
        let mut m = HashMap::<u32, [u32; 2]>::new();
        let mut mass = HashMap::<u32, [u32; 2]>::new();
        for si in 0..2 {
            if self.side_customers[si] as usize != self.pairs.len() {
                return Err(format!("side {si} customers {}", self.side_customers[si]));
            }
            if bt_size[si].len() != self.block_tables[si].len() {
                return Err("empty block table survived".into());
            }
            for (bt, table) in self.block_tables[si].iter() {
                if bt_size[si].get(&bt).copied() != Some(table.size) {
                    return Err(format!("block table {si}/{bt} size {}", table.size));
                }
                if !self.blocks.contains(table.block) {
                    return Err(format!("block table {si}/{bt} labelled with dead block"));
                }
                m.entry(table.block).or_default()[si] += 1;
                mass.entry(table.block).or_default()[si] += table.size;
            }
        }
        if m.len() != self.blocks.len() {
            return Err("block without tables survived".into());
        }
        let total_tables: u32 = m.values().map(|x| x[0] + x[1]).sum();
        if total_tables != self.total_block_tables {
            return Err("m_· mismatch".into());
        }
        let mut counts: HashMap<(u32, u32), u32> = HashMap::new();
        let mut totals: HashMap<u32, u32> = HashMap::new();
        let mut nt_size: HashMap<u32, u32> = HashMap::new();
        for i in 0..n {
            if self.edge_pair[i] == NONE {
                continue;
            }
            let (ks, kr) = self.pair_blocks(self.edge_pair[i]);
            let (s, r) = self.edges[i];
            *counts.entry((ks, s)).or_default() += 1;
            *counts.entry((kr, r)).or_default() += 1;
            *totals.entry(ks).or_default() += 1;
            *totals.entry(kr).or_default() += 1;
            for nt in self.edge_node_tables[i] {
                *nt_size.entry(nt).or_default() += 1;
            }
        }
        let mut rho = vec![0u32; self.num_nodes];
        let mut listed = 0usize;
        for (k, b) in self.blocks.iter() {
            if m.get(&k).copied() != Some(b.tables) || mass.get(&k).copied() != Some(b.pair_mass) {
                return Err(format!("block {k} table counts {:?}/{:?}", b.tables, b.pair_mass));
            }
            if totals.get(&k).copied().unwrap_or(0) != b.total {
                return Err(format!("block {k} total {}", b.total));
            }
            for (v, &c) in b.counts.iter().enumerate() {
                if counts.get(&(k, v as u32)).copied().unwrap_or(0) != c {
                    return Err(format!("n_(k={k}, v={v}) = {c} vs recount"));
                }
            }
            for (&v, list) in &b.node_tables {
                for &nt in list {
                    let table = self.node_tables.get(nt);
                    if table.block != k || table.node != v {
                        return Err(format!("node table {nt} listed under wrong (block, node)"));
                    }
                }
                rho[v as usize] += list.len() as u32;
                listed += list.len();
            }
        }
        if listed != self.node_tables.len() {
            return Err("node table missing from block lists".into());
        }
        for (nt, table) in self.node_tables.iter() {
            if nt_size.get(&nt).copied() != Some(table.size) {
                return Err(format!("node table {nt} size {}", table.size));
            }
        }
        if rho != self.rho {
            return Err("rho mismatch".into());
        }
        let fresh = self.recompute_log_score();
        let diff = (fresh - self.log_score()).abs();
        if diff > 1e-8 + 1e-13 * fresh.abs() {
            return Err(format!(
                "log-score drift: incremental {} vs recomputed {fresh}",
                self.log_score()
            ));
        }
        Ok(())
    }

    // ----- compaction ------------------------------------------------------------

    /// Renumbers every arena densely in id order and rebuilds node-table
    /// lists in ascending id order. Returns the block relabelling (old → new).
    pub fn compact(&mut self) -> Vec<u32> {
        let pair_map = self.pairs.compact();
        let bt_maps = [self.block_tables[0].compact(), self.block_tables[1].compact()];
        let block_map = self.blocks.compact();
        let nt_map = self.node_tables.compact();
        for t in self.edge_pair.iter_mut().filter(|t| **t != NONE) {
            *t = pair_map[*t as usize];
        }
        for nts in self.edge_node_tables.iter_mut() {
            for nt in nts.iter_mut().filter(|nt| **nt != NONE) {
                *nt = nt_map[*nt as usize];
            }
        }
        for (_, p) in self.pairs.iter_mut() {
            for si in 0..2 {
                p.block_tables[si] = bt_maps[si][p.block_tables[si] as usize];
            }
        }
        for si in 0..2 {
            for (_, t) in self.block_tables[si].iter_mut() {
                t.block = block_map[t.block as usize];
            }
        }
        for (_, b) in self.blocks.iter_mut() {
            b.node_tables.clear();
        }
        let mut lists: Vec<(u32, u32, u32)> = Vec::with_capacity(self.node_tables.len());
        for (_, nt) in self.node_tables.iter_mut() {
            nt.block = block_map[nt.block as usize];
        }
        for (id, nt) in self.node_tables.iter() {
            lists.push((nt.block, nt.node, id));
        }
        for (k, v, id) in lists {
            self.blocks.get_mut(k).node_tables.entry(v).or_default().push(id);
        }
        block_map
    }
}
