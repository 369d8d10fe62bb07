//! Forward samplers: the finite sparse block model, the diagonal model and its
//! nondiagonal extension, plus the synthetic benchmark presets.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::crp::{sample_categorical, sample_dirichlet, Rng};
use crate::error::{Error, Result};
use crate::gibbs::HyperParams;
use crate::netcore::{Edge, MultiGraph};

/// Finite block model: block pairs from `theta`, endpoints from per-block
/// node proportions `A_k ~ Dir(τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseBlockSpec {
    pub num_blocks: usize,
    /// `((sender block, receiver block), probability)`.
    pub theta: Vec<((u32, u32), f64)>,
    pub tau: f64,
    pub num_nodes: usize,
    pub num_edges: usize,
    /// Fixed node → block map; each `A_k` is then supported on its own nodes.
    pub block_of_node: Option<Vec<u32>>,
}

impl SparseBlockSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.num_blocks == 0 || self.num_nodes == 0 {
            return bad("block model needs at least one block and one node".into());
        }
        if self.theta.is_empty() {
            return bad("theta is empty".into());
        }
        let total: f64 = self.theta.iter().map(|t| t.1).sum();
        if (total - 1.0).abs() > 1e-9 || self.theta.iter().any(|t| !(t.1 >= 0.0)) {
            return bad(format!("theta must be a probability vector, sums to {total}"));
        }
        let k = self.num_blocks as u32;
        if let Some(((a, b), _)) = self.theta.iter().find(|((a, b), _)| *a >= k || *b >= k) {
            return bad(format!("block pair ({a}, {b}) out of range for {k} blocks"));
        }
        if !(self.tau > 0.0) {
            return bad("node concentration must be positive".into());
        }
        if let Some(map) = &self.block_of_node {
            if map.len() != self.num_nodes {
                return bad("block_of_node length differs from num_nodes".into());
            }
            for block in 0..k {
                let used = self.theta.iter().any(|((a, b), p)| *p > 0.0 && (*a == block || *b == block));
                if used && !map.contains(&block) {
                    return bad(format!("block {block} carries edges but owns no nodes"));
                }
            }
            if map.iter().any(|&b| b >= k) {
                return bad("block_of_node names a block out of range".into());
            }
        }
        Ok(())
    }

    /// Draws `A_k` for every block.
    fn node_props(&self, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
        let mut props = Vec::with_capacity(self.num_blocks);
        for k in 0..self.num_blocks as u32 {
            let support: Vec<usize> = match &self.block_of_node {
                Some(map) => (0..self.num_nodes).filter(|&v| map[v] == k).collect(),
                None => (0..self.num_nodes).collect(),
            };
            let mut a = vec![0.0; self.num_nodes];
            if !support.is_empty() {
                let draw = sample_dirichlet(&vec![self.tau; support.len()], rng)?;
                for (&v, p) in support.iter().zip(draw) {
                    a[v] = p;
                }
            }
            props.push(a);
        }
        Ok(props)
    }
}

/// Planted structure of a synthetic graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// `(c_sn, c_rn)` for every edge, in edge order.
    pub edge_blocks: Vec<(u32, u32)>,
    /// `A_k`, one probability vector over nodes per block.
    pub node_props: Vec<Vec<f64>>,
    pub block_of_node: Option<Vec<u32>>,
}

impl GroundTruth {
    /// Distinct planted block pairs, sorted.
    pub fn pair_support(&self) -> Vec<(u32, u32)> {
        let mut s: Vec<(u32, u32)> = self.edge_blocks.clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

fn draw_edge(theta_w: &[f64], theta: &[((u32, u32), f64)], props: &[Vec<f64>], rng: &mut Rng) -> (Edge, (u32, u32)) {
    let (a, b) = theta[sample_categorical(theta_w, rng)].0;
    let s = sample_categorical(&props[a as usize], rng) as u32;
    let r = sample_categorical(&props[b as usize], rng) as u32;
    (Edge::new(s, r), (a, b))
}

pub fn gen_sparse_block(spec: &SparseBlockSpec, rng: &mut Rng) -> Result<(MultiGraph, GroundTruth)> {
    spec.validate()?;
    let props = spec.node_props(rng)?;
    let theta_w: Vec<f64> = spec.theta.iter().map(|t| t.1).collect();
    let mut edges = Vec::with_capacity(spec.num_edges);
    let mut edge_blocks = Vec::with_capacity(spec.num_edges);
    for _ in 0..spec.num_edges {
        let (e, c) = draw_edge(&theta_w, &spec.theta, &props, rng);
        edges.push(e);
        edge_blocks.push(c);
    }
    Ok((
        MultiGraph::new(spec.num_nodes, edges)?,
        GroundTruth {
            edge_blocks,
            node_props: props,
            block_of_node: spec.block_of_node.clone(),
        },
    ))
}

/// A forward draw with its complete assignment chain.
#[derive(Clone, Debug, PartialEq)]
pub struct NdmdndDraw {
    pub graph: MultiGraph,
    pub edge_pair_table: Vec<u32>,
    /// `(sender block table, receiver block table)` per pair table.
    pub pair_block_tables: Vec<(u32, u32)>,
    /// Block label of every sender block table, then every receiver one.
    pub sender_table_blocks: Vec<u32>,
    pub receiver_table_blocks: Vec<u32>,
    /// `(sender node table, receiver node table)` per edge.
    pub edge_node_tables: Vec<(u32, u32)>,
    /// `(block, node)` per node table.
    pub node_tables: Vec<(u32, u32)>,
    pub num_blocks: usize,
}

impl NdmdndDraw {
    /// `(sender block, receiver block)` of edge `i`.
    pub fn edge_blocks(&self, i: usize) -> (u32, u32) {
        let (ts, tr) = self.pair_block_tables[self.edge_pair_table[i] as usize];
        (
            self.sender_table_blocks[ts as usize],
            self.receiver_table_blocks[tr as usize],
        )
    }

    /// Recounts the chain and checks referential integrity.
    pub fn check(&self) -> std::result::Result<(), String> {
        let n = self.graph.num_edges();
        if self.edge_pair_table.len() != n || self.edge_node_tables.len() != n {
            return Err("per-edge arrays disagree in length".into());
        }
        let mut pair_used = vec![false; self.pair_block_tables.len()];
        for i in 0..n {
            let t = self.edge_pair_table[i] as usize;
            if t >= pair_used.len() {
                return Err(format!("edge {i} names missing pair table {t}"));
            }
            pair_used[t] = true;
            let (ks, kr) = self.edge_blocks(i);
            let e = self.graph.edges()[i];
            let (snt, rnt) = self.edge_node_tables[i];
            if self.node_tables[snt as usize] != (ks, e.sender.0)
                || self.node_tables[rnt as usize] != (kr, e.receiver.0)
            {
                return Err(format!("edge {i} endpoints disagree with their node tables"));
            }
        }
        if pair_used.iter().any(|u| !u) {
            return Err("empty pair table".into());
        }
        let mut st = vec![false; self.sender_table_blocks.len()];
        let mut rt = vec![false; self.receiver_table_blocks.len()];
        for &(a, b) in &self.pair_block_tables {
            st[a as usize] = true;
            rt[b as usize] = true;
        }
        if st.iter().chain(&rt).any(|u| !u) {
            return Err("empty block table".into());
        }
        let mut blocks = vec![false; self.num_blocks];
        for &k in self.sender_table_blocks.iter().chain(&self.receiver_table_blocks) {
            blocks[k as usize] = true;
        }
        if blocks.iter().any(|u| !u) {
            return Err("block without tables".into());
        }
        Ok(())
    }
}

/// Sequential CRP: returns the chosen table, creating one when needed.
fn crp_draw(sizes: &mut Vec<u32>, concentration: f64, weights: &mut Vec<f64>, rng: &mut Rng) -> u32 {
    weights.clear();
    weights.extend(sizes.iter().map(|&s| s as f64));
    weights.push(concentration);
    let idx = sample_categorical(weights, rng);
    if idx == sizes.len() {
        sizes.push(0);
    }
    sizes[idx] += 1;
    idx as u32
}

struct NodeLevel {
    /// Per block: node-table sizes and node labels.
    tables: Vec<Vec<(u32, u32)>>,
    /// Global ids of each block's tables, parallel to `tables`.
    ids: Vec<Vec<u32>>,
    /// Table counts per node (the global node restaurant).
    rho: Vec<u32>,
    labels: Vec<(u32, u32)>,
    tau: f64,
    gamma: f64,
    weights: Vec<f64>,
}

impl NodeLevel {
    fn new(tau: f64, gamma: f64) -> Self {
        NodeLevel {
            tables: Vec::new(),
            ids: Vec::new(),
            rho: Vec::new(),
            labels: Vec::new(),
            tau,
            gamma,
            weights: Vec::new(),
        }
    }

    /// Draws a node in block `k`; returns `(node, node table id)`.
    fn draw(&mut self, k: u32, rng: &mut Rng) -> (u32, u32) {
        let k = k as usize;
        if self.tables.len() <= k {
            self.tables.resize_with(k + 1, Vec::new);
            self.ids.resize_with(k + 1, Vec::new);
        }
        self.weights.clear();
        self.weights.extend(self.tables[k].iter().map(|t| t.0 as f64));
        self.weights.push(self.tau);
        let idx = sample_categorical(&self.weights, rng);
        if idx < self.tables[k].len() {
            self.tables[k][idx].0 += 1;
            return (self.tables[k][idx].1, self.ids[k][idx]);
        }
        self.weights.clear();
        self.weights.extend(self.rho.iter().map(|&c| c as f64));
        self.weights.push(self.gamma);
        let v = sample_categorical(&self.weights, rng);
        if v == self.rho.len() {
            self.rho.push(0);
        }
        self.rho[v] += 1;
        let id = self.labels.len() as u32;
        self.labels.push((k as u32, v as u32));
        self.tables[k].push((1, v as u32));
        self.ids[k].push(id);
        (v as u32, id)
    }
}

/// Diagonal model: one CRP over blocks with concentration `γ_block`; sender
/// and receiver share the block; nodes through per-block node restaurants.
pub fn gen_mdnd(hp: &HyperParams, num_edges: usize, rng: &mut Rng) -> Result<NdmdndDraw> {
    hp.validate()?;
    if num_edges == 0 {
        return Err(Error::InvalidParameter("need at least one edge".into()));
    }
    let mut sizes = Vec::new();
    let mut weights = Vec::new();
    let mut nodes = NodeLevel::new(hp.tau_node, hp.gamma_node);
    let mut edge_pair_table = Vec::with_capacity(num_edges);
    let mut endpoints = Vec::with_capacity(num_edges);
    let mut edge_node_tables = Vec::with_capacity(num_edges);
    for _ in 0..num_edges {
        let k = crp_draw(&mut sizes, hp.gamma_block, &mut weights, rng);
        let (s, snt) = nodes.draw(k, rng);
        let (r, rnt) = nodes.draw(k, rng);
        edge_pair_table.push(k);
        endpoints.push(Edge::new(s, r));
        edge_node_tables.push((snt, rnt));
    }
    let nb = sizes.len() as u32;
    Ok(NdmdndDraw {
        graph: MultiGraph::new(nodes.rho.len(), endpoints)?,
        edge_pair_table,
        pair_block_tables: (0..nb).map(|k| (k, k)).collect(),
        sender_table_blocks: (0..nb).collect(),
        receiver_table_blocks: (0..nb).collect(),
        edge_node_tables,
        node_tables: nodes.labels,
        num_blocks: nb as usize,
    })
}

/// Nondiagonal model: pair-table CRP; a new pair table draws a sender block
/// table (existing by size, or new with its block from the shared block CRP),
/// then a receiver block table the same way; nodes as in [`gen_mdnd`].
pub fn gen_ndmdnd(hp: &HyperParams, num_edges: usize, rng: &mut Rng) -> Result<NdmdndDraw> {
    hp.validate()?;
    if num_edges == 0 {
        return Err(Error::InvalidParameter("need at least one edge".into()));
    }
    let mut weights = Vec::new();
    let mut pair_sizes = Vec::new();
    let mut pair_block_tables: Vec<(u32, u32)> = Vec::new();
    let mut table_sizes: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    let mut table_blocks: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    let mut block_m: Vec<u32> = Vec::new();
    let mut nodes = NodeLevel::new(hp.tau_node, hp.gamma_node);
    let mut edge_pair_table = Vec::with_capacity(num_edges);
    let mut endpoints = Vec::with_capacity(num_edges);
    let mut edge_node_tables = Vec::with_capacity(num_edges);
    for _ in 0..num_edges {
        let t = crp_draw(&mut pair_sizes, hp.tau_pair, &mut weights, rng);
        if t as usize == pair_block_tables.len() {
            let mut chosen = [0u32; 2];
            for side in 0..2 {
                let before = table_sizes[side].len();
                let bt = crp_draw(&mut table_sizes[side], hp.tau_block, &mut weights, rng);
                if bt as usize == before {
                    let k = crp_draw(&mut block_m, hp.gamma_block, &mut weights, rng);
                    table_blocks[side].push(k);
                }
                chosen[side] = bt;
            }
            pair_block_tables.push((chosen[0], chosen[1]));
        }
        let (ts, tr) = pair_block_tables[t as usize];
        let ks = table_blocks[0][ts as usize];
        let kr = table_blocks[1][tr as usize];
        let (s, snt) = nodes.draw(ks, rng);
        let (r, rnt) = nodes.draw(kr, rng);
        edge_pair_table.push(t);
        endpoints.push(Edge::new(s, r));
        edge_node_tables.push((snt, rnt));
    }
    Ok(NdmdndDraw {
        graph: MultiGraph::new(nodes.rho.len(), endpoints)?,
        edge_pair_table,
        pair_block_tables,
        sender_table_blocks: table_blocks[0].clone(),
        receiver_table_blocks: table_blocks[1].clone(),
        edge_node_tables,
        node_tables: nodes.labels,
        num_blocks: block_m.len(),
    })
}

/// Distinct nodes seen among the first `n` edges, for each `n` in `checkpoints`.
pub fn unique_node_growth(graph: &MultiGraph, checkpoints: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; graph.num_nodes()];
    let mut count = 0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let mut sorted: Vec<usize> = checkpoints.to_vec();
    sorted.sort_unstable();
    for (i, e) in graph.edges().iter().enumerate() {
        for v in [e.sender.index(), e.receiver.index()] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
            }
        }
        while next < sorted.len() && sorted[next] == i + 1 {
            out.push(count);
            next += 1;
        }
    }
    while out.len() < sorted.len() {
        out.push(count);
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Named synthetic benchmark layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub num_blocks: usize,
    pub block_size: usize,
    /// Planted block pairs, equally weighted.
    pub pairs: Vec<(u32, u32)>,
    /// Dirichlet concentration of the within-block node proportions.
    pub tau: f64,
    /// Edges are drawn until this many distinct ordered pairs exist.
    pub unique_edges: usize,
}

pub const PRESETS: [&str; 3] = ["paper-like", "nondiagonal", "diagonal"];

/// Layouts:
///
/// * `paper-like`: 100 nodes in 10 blocks of 10, 15 planted pairs (six
///   diagonal, nine off-diagonal), 719 distinct edges.
/// * `nondiagonal`: 100 nodes in 10 blocks, a directed cycle `k → k+1`.
/// * `diagonal`: 100 nodes in 10 blocks, diagonal pairs only.
pub fn preset(name: &str) -> Result<Preset> {
    let cycle = |k: u32| (0..k).map(|a| (a, (a + 1) % k)).collect::<Vec<_>>();
    match name {
        "paper-like" => {
            let mut pairs: Vec<(u32, u32)> = (0..6).map(|k| (k, k)).collect();
            pairs.extend([(0, 6), (6, 1), (1, 7), (7, 2), (2, 8), (8, 3), (3, 9), (9, 4), (5, 0)]);
            Ok(Preset {
                name: "paper-like",
                num_blocks: 10,
                block_size: 10,
                pairs,
                tau: 1.0,
                unique_edges: 719,
            })
        }
        "nondiagonal" => Ok(Preset {
            name: "nondiagonal",
            num_blocks: 10,
            block_size: 10,
            pairs: cycle(10),
            tau: 1.0,
            unique_edges: 719,
        }),
        "diagonal" => Ok(Preset {
            name: "diagonal",
            num_blocks: 10,
            block_size: 10,
            pairs: (0..10).map(|k| (k, k)).collect(),
            tau: 1.0,
            unique_edges: 719,
        }),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

impl Preset {
    pub fn num_nodes(&self) -> usize {
        self.num_blocks * self.block_size
    }

    pub fn block_of_node(&self) -> Vec<u32> {
        (0..self.num_nodes())
            .map(|v| (v / self.block_size) as u32)
            .collect()
    }

    /// Draws node proportions, then edges until `unique_edges` distinct pairs
    /// exist; redraws the edge stream until every node occurs.
    pub fn generate(&self, seed: u64) -> Result<(MultiGraph, GroundTruth)> {
        let support = self.pairs.len() * self.block_size * self.block_size;
        if self.unique_edges > support {
            return Err(Error::Infeasible(format!(
                "{} distinct edges requested but the planted support has {support}",
                self.unique_edges
            )));
        }
        let spec = SparseBlockSpec {
            num_blocks: self.num_blocks,
            theta: self
                .pairs
                .iter()
                .map(|&p| (p, 1.0 / self.pairs.len() as f64))
                .collect(),
            tau: self.tau,
            num_nodes: self.num_nodes(),
            num_edges: 0,
            block_of_node: Some(self.block_of_node()),
        };
        spec.validate()?;
        let mut rng = Rng::named(seed, "generate");
        let props = spec.node_props(&mut rng)?;
        let theta_w: Vec<f64> = spec.theta.iter().map(|t| t.1).collect();
        for _ in 0..1000 {
            let mut edges = Vec::new();
            let mut edge_blocks = Vec::new();
            let mut unique = HashSet::new();
            while unique.len() < self.unique_edges {
                let (e, c) = draw_edge(&theta_w, &spec.theta, &props, &mut rng);
                unique.insert(e);
                edges.push(e);
                edge_blocks.push(c);
            }
            let g = MultiGraph::new(self.num_nodes(), edges)?;
            if g.active_nodes().iter().all(|&a| a) {
                let truth = GroundTruth {
                    edge_blocks,
                    node_props: props,
                    block_of_node: spec.block_of_node,
                };
                return Ok((g, truth));
            }
        }
        Err(Error::Infeasible(format!(
            "preset {} left some node without edges in 1000 draws",
            self.name
        )))
    }
}

/// Builds a named benchmark graph with its planted truth.
pub fn make_synthetic_benchmark(name: &str, seed: u64) -> Result<(MultiGraph, GroundTruth)> {
    preset(name)?.generate(seed)
}

fn write_lines(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Per-edge sidecar `n<TAB>c_sn<TAB>c_rn` (with header).
pub fn save_edge_truth(path: impl AsRef<Path>, edge_blocks: &[(u32, u32)]) -> Result<()> {
    write_lines(path.as_ref(), |w| {
        writeln!(w, "n\tc_sn\tc_rn")?;
        for (n, (a, b)) in edge_blocks.iter().enumerate() {
            writeln!(w, "{n}\t{a}\t{b}")?;
        }
        Ok(())
    })
}

pub fn load_edge_truth(path: impl AsRef<Path>) -> Result<Vec<(u32, u32)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = || Error::Parse {
            line: lineno + 1,
            message: format!("expected `n<TAB>c_sn<TAB>c_rn`, got `{line}`"),
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 || f[0].parse::<usize>().ok() != Some(out.len()) {
            return Err(parse_err());
        }
        let a = f[1].parse().map_err(|_| parse_err())?;
        let b = f[2].parse().map_err(|_| parse_err())?;
        out.push((a, b));
    }
    Ok(out)
}

/// Per-node sidecar `node<TAB>block`.
pub fn save_node_truth(path: impl AsRef<Path>, block_of_node: &[u32]) -> Result<()> {
    write_lines(path.as_ref(), |w| {
        writeln!(w, "node\tblock")?;
        for (v, k) in block_of_node.iter().enumerate() {
            writeln!(w, "{v}\t{k}")?;
        }
        Ok(())
    })
}

/// Assignment sidecar of a forward draw: one line per edge with its pair
/// table, block tables and blocks.
pub fn save_assignments(path: impl AsRef<Path>, draw: &NdmdndDraw) -> Result<()> {
    write_lines(path.as_ref(), |w| {
        writeln!(w, "n\tpair_table\tsender_table\treceiver_table\tsender_block\treceiver_block")?;
        for i in 0..draw.graph.num_edges() {
            let t = draw.edge_pair_table[i];
            let (ts, tr) = draw.pair_block_tables[t as usize];
            let (ks, kr) = draw.edge_blocks(i);
            writeln!(w, "{i}\t{t}\t{ts}\t{tr}\t{ks}\t{kr}")?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::degree_stats;

    #[test]
    fn single_block_spec() {
        let spec = SparseBlockSpec {
            num_blocks: 1,
            theta: vec![((0, 0), 1.0)],
            tau: 1.0,
            num_nodes: 2,
            num_edges: 3,
            block_of_node: None,
        };
        let (g, truth) = gen_sparse_block(&spec, &mut Rng::seed_from_u64(0)).unwrap();
        assert_eq!(g.num_edges(), 3);
        assert!(truth.edge_blocks.iter().all(|&c| c == (0, 0)));
        assert!((truth.node_props[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_supports_route_edges() {
        let spec = SparseBlockSpec {
            num_blocks: 2,
            theta: vec![((0, 1), 1.0)],
            tau: 0.5,
            num_nodes: 6,
            num_edges: 200,
            block_of_node: Some(vec![0, 0, 0, 1, 1, 1]),
        };
        let (g, _) = gen_sparse_block(&spec, &mut Rng::seed_from_u64(1)).unwrap();
        assert!(g.edges().iter().all(|e| e.sender.0 < 3 && e.receiver.0 >= 3));
    }

    #[test]
    fn invalid_specs() {
        let base = SparseBlockSpec {
            num_blocks: 2,
            theta: vec![((0, 1), 1.0)],
            tau: 1.0,
            num_nodes: 4,
            num_edges: 1,
            block_of_node: None,
        };
        assert!(SparseBlockSpec { theta: vec![((0, 1), 0.5)], ..base.clone() }.validate().is_err());
        assert!(SparseBlockSpec { theta: vec![((0, 2), 1.0)], ..base.clone() }.validate().is_err());
        assert!(SparseBlockSpec { tau: 0.0, ..base.clone() }.validate().is_err());
        assert!(SparseBlockSpec { block_of_node: Some(vec![0, 0, 0, 0]), ..base.clone() }.validate().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn mdnd_draws_are_diagonal_and_consistent() {
        let hp = HyperParams::default();
        for seed in 0..5 {
            let d = gen_mdnd(&hp, 300, &mut Rng::seed_from_u64(seed)).unwrap();
            d.check().unwrap();
            assert!((0..300).all(|i| {
                let (a, b) = d.edge_blocks(i);
                a == b
            }));
        }
    }

    #[test]
    fn mdnd_vanishing_concentration_gives_one_block() {
        let hp = HyperParams {
            gamma_block: 1e-9,
            ..HyperParams::default()
        };
        let d = gen_mdnd(&hp, 100, &mut Rng::seed_from_u64(3)).unwrap();
        assert_eq!(d.num_blocks, 1);
    }

    #[test]
    fn mdnd_expected_block_count() {
        let hp = HyperParams {
            gamma_block: 1.0,
            ..HyperParams::default()
        };
        let mut rng = Rng::seed_from_u64(17);
        let runs = 10_000;
        let mut total = 0usize;
        for _ in 0..runs {
            total += gen_mdnd(&hp, 100, &mut rng).unwrap().num_blocks;
        }
        let expected: f64 = (0..100).map(|i| 1.0 / (1.0 + i as f64)).sum();
        let mean = total as f64 / runs as f64;
        assert!((expected - 5.187).abs() < 1e-3);
        assert!((mean - expected).abs() < 0.05, "{mean}");
    }

    #[test]
    fn ndmdnd_limits() {
        let one_pair = HyperParams {
            tau_pair: 1e-9,
            ..HyperParams::default()
        };
        let d = gen_ndmdnd(&one_pair, 200, &mut Rng::seed_from_u64(0)).unwrap();
        d.check().unwrap();
        assert_eq!(d.pair_block_tables.len(), 1);

        let one_block = HyperParams {
            tau_pair: 1e3,
            gamma_block: 1e-9,
            ..HyperParams::default()
        };
        let d = gen_ndmdnd(&one_block, 200, &mut Rng::seed_from_u64(0)).unwrap();
        d.check().unwrap();
        assert!(d.pair_block_tables.len() > 50);
        assert_eq!(d.num_blocks, 1);
    }

    #[test]
    fn ndmdnd_is_heavy_tailed() {
        // A homogeneous graph with the same node count would have max/mean
        // close to 1; the draws sit far above that.
        let mut ratios: Vec<f64> = (0..9)
            .map(|seed| {
                let d = gen_ndmdnd(&HyperParams::default(), 10_000, &mut Rng::seed_from_u64(seed)).unwrap();
                d.check().unwrap();
                let deg = degree_stats(&d.graph);
                deg.max_degree().unwrap() as f64 / deg.mean_degree()
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        assert!(ratios[4] > 5.0, "median max/mean {}", ratios[4]);
        assert!(ratios.iter().any(|&r| r > 10.0), "{ratios:?}");
    }

    #[test]
    fn ndmdnd_node_growth_is_sublinear() {
        let d = gen_ndmdnd(&HyperParams::default(), 20_000, &mut Rng::seed_from_u64(6)).unwrap();
        let cps = [100, 1_000, 10_000, 20_000];
        let growth = unique_node_growth(&d.graph, &cps);
        let pts: Vec<(f64, f64)> = cps.iter().zip(&growth).map(|(&x, &y)| (x as f64, y as f64)).collect();
        assert!(log_log_slope(&pts) < 1.0);
        assert_eq!(*growth.last().unwrap(), d.graph.num_nodes());
    }

    #[test]
    fn log_log_slope_recovers_power() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 3.0 * (i as f64).powf(0.6))).collect();
        assert!((log_log_slope(&pts) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn presets_match_their_layout() {
        for name in PRESETS {
            let (g, truth) = make_synthetic_benchmark(name, 7).unwrap();
            assert_eq!(g.num_nodes(), 100);
            assert_eq!(g.num_unique_edges(), 719);
            assert!((g.density() - 0.0719).abs() < 1e-12);
            assert!(degree_stats(&g).min_degree().unwrap() >= 1);
            assert_eq!(truth.edge_blocks.len(), g.num_edges());
            let map = truth.block_of_node.as_ref().unwrap();
            for (e, &(a, b)) in g.edges().iter().zip(&truth.edge_blocks) {
                assert_eq!((map[e.sender.index()], map[e.receiver.index()]), (a, b));
            }
        }
        assert_eq!(preset("paper-like").unwrap().pairs.len(), 15);
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn presets_are_deterministic() {
        let a = make_synthetic_benchmark("paper-like", 3).unwrap();
        let b = make_synthetic_benchmark("paper-like", 3).unwrap();
        assert_eq!(a, b);
        let c = make_synthetic_benchmark("paper-like", 4).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn truth_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("truth.tsv");
        let blocks = vec![(0, 1), (2, 2), (1, 0)];
        save_edge_truth(&p, &blocks).unwrap();
        assert_eq!(load_edge_truth(&p).unwrap(), blocks);
        save_node_truth(dir.path().join("nodes.tsv"), &[0, 0, 1]).unwrap();
        let d = gen_ndmdnd(&HyperParams::default(), 50, &mut Rng::seed_from_u64(0)).unwrap();
        let ap = dir.path().join("assign.tsv");
        save_assignments(&ap, &d).unwrap();
        assert_eq!(std::fs::read_to_string(ap).unwrap().lines().count(), 51);
    }
}
