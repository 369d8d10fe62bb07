use rand::seq::SliceRandom;

use super::state::{SeatingState, SenderOption, Side, NONE};
use super::Model;
use crate::crp::{sample_categorical_with_total, sample_log_categorical, BaseMeasure, Rng};
use crate::error::Result;

impl SeatingState {
    fn assert_consistent(&self, what: &str) {
        if let Err(msg) = self.check_consistency() {
            panic!("seating state inconsistent after {what}: {msg}");
        }
    }

    /// Seats every edge in order through the prior predictive conditioned on
    /// the observed endpoints.
    pub fn initialize(&mut self, rng: &mut Rng) {
        for i in 0..self.edges.len() {
            if self.edge_pair[i] == NONE {
                self.seat_edge(i, rng);
            }
        }
        if self.verify {
            self.assert_consistent("initialization");
        }
    }

    /// Removes edge `i` from every level and reseats it from its full
    /// conditional.
    pub fn resample_edge(&mut self, i: usize, rng: &mut Rng) {
        assert!(self.edge_pair[i] != NONE, "edge {i} is not seated");
        self.unseat_edge(i);
        self.seat_edge(i, rng);
        if self.verify {
            self.assert_consistent("edge move");
        }
    }

    /// Seats an unseated edge: pair table, then (for a new pair table) the
    /// sender block table and block, the sender endpoint, the receiver block
    /// table and block given the sender's placement, and the receiver endpoint.
    pub(crate) fn seat_edge(&mut self, i: usize, rng: &mut Rng) {
        debug_assert_eq!(self.edge_pair[i], NONE);
        let (s, r) = self.edges[i];
        let (su, ru) = (s as usize, r as usize);
        let mut scratch = std::mem::take(&mut self.scratch);
        self.fill_factors(su, ru, &mut scratch.fs, &mut scratch.fr, &mut scratch.frs);
        let existing = self.existing_pair_weights(
            &scratch.fs,
            &scratch.fr,
            &scratch.frs,
            &mut scratch.ids,
            &mut scratch.weights,
        );
        let alpha = self.pair_concentration();
        let new_mass = match self.model {
            Model::Ndmdnd => self.new_pair_options(
                su,
                ru,
                &scratch.fs,
                &scratch.fr,
                &scratch.frs,
                &mut scratch.options,
            ),
            Model::Mdnd => self.beta.weight(su) * self.f_new_after(su, ru),
        };
        scratch.weights.push(alpha * new_mass);
        let total = existing + alpha * new_mass;
        check_weights(&scratch.weights, total, "pair table");
        let idx = sample_categorical_with_total(&scratch.weights, total, rng);

        if idx < scratch.ids.len() {
            let t = scratch.ids[idx];
            self.scratch = scratch;
            self.pair_seat(i, t);
            let (ks, kr) = self.pair_blocks(t);
            let snt = self.seat_node(ks, s, rng);
            let rnt = self.seat_node(kr, r, rng);
            self.edge_node_tables[i] = [snt, rnt];
            return;
        }

        match self.model {
            Model::Mdnd => {
                self.scratch = scratch;
                let k = self.open_block();
                let t = self.new_pair_table();
                for side in Side::BOTH {
                    let bt = self.new_block_table(side, k);
                    self.block_table_seat(side, bt);
                    self.pairs.get_mut(t).block_tables[side.index()] = bt;
                }
                self.pair_seat(i, t);
                let snt = self.seat_node(k, s, rng);
                let rnt = self.seat_node(k, r, rng);
                self.edge_node_tables[i] = [snt, rnt];
            }
            Model::Ndmdnd => {
                scratch.weights.clear();
                scratch
                    .weights
                    .extend(scratch.options.iter().map(|&(_, w, _)| w));
                let pick = sample_categorical_with_total(&scratch.weights, new_mass, rng);
                let (option, _, expected_recv) = scratch.options[pick];
                self.scratch = scratch;

                let t = self.new_pair_table();
                let sbt = self.place_block_table(Side::Sender, option, rng);
                self.block_table_seat(Side::Sender, sbt);
                self.pairs.get_mut(t).block_tables[0] = sbt;
                let ks = self.block_tables[0].get(sbt).block;
                let snt = self.seat_node(ks, s, rng);

                let rbt = self.sample_receiver_table(ru, expected_recv, rng);
                self.block_table_seat(Side::Receiver, rbt);
                self.pairs.get_mut(t).block_tables[1] = rbt;
                self.pair_seat(i, t);
                let kr = self.block_tables[1].get(rbt).block;
                let rnt = self.seat_node(kr, r, rng);
                self.edge_node_tables[i] = [snt, rnt];
            }
        }
    }

    /// Resolves a sender option into a concrete block table.
    fn place_block_table(&mut self, side: Side, option: SenderOption, rng: &mut Rng) -> u32 {
        match option {
            SenderOption::ExistingTableAt(k) => {
                let mut scratch = std::mem::take(&mut self.scratch);
                scratch.ids.clear();
                scratch.weights.clear();
                let mut total = 0.0;
                for (bt, table) in self.block_tables[side.index()].iter() {
                    if table.block == k {
                        scratch.ids.push(bt);
                        scratch.weights.push(table.size as f64);
                        total += table.size as f64;
                    }
                }
                let idx = sample_categorical_with_total(&scratch.weights, total, rng);
                let bt = scratch.ids[idx];
                self.scratch = scratch;
                bt
            }
            SenderOption::NewTableAt(k) => self.new_block_table(side, k),
            SenderOption::NewBlock => {
                let k = self.open_block();
                self.new_block_table(side, k)
            }
        }
    }

    /// Receiver block table for node `r` given the state after the sender
    /// endpoint was placed: existing tables by size times `f_k(r)`, a new
    /// table labelled with block `k` by `τ_block m_k / (m_· + γ_block) f_k(r)`,
    /// and a new table with a new block by `τ_block γ_block / (m_· + γ_block) β_r`.
    fn sample_receiver_table(&mut self, r: usize, expected: f64, rng: &mut Rng) -> u32 {
        let tb = self.hp.tau_block;
        let g = self.hp.gamma_block;
        let m_all = self.total_block_tables as f64;
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.fr.clear();
        scratch.fr.resize(self.blocks.capacity(), 0.0);
        for (k, _) in self.blocks.iter() {
            scratch.fr[k as usize] = self.f(k, r);
        }
        scratch.ids.clear();
        scratch.weights.clear();
        let mut total = 0.0;
        for (bt, table) in self.block_tables[1].iter() {
            let w = table.size as f64 * scratch.fr[table.block as usize];
            scratch.ids.push(bt);
            scratch.weights.push(w);
            total += w;
        }
        let n_tables = scratch.ids.len();
        for (k, b) in self.blocks.iter() {
            let w = tb * b.m() as f64 / (m_all + g) * scratch.fr[k as usize];
            scratch.ids.push(k);
            scratch.weights.push(w);
            total += w;
        }
        let w = tb * g / (m_all + g) * self.beta.weight(r);
        scratch.weights.push(w);
        total += w;
        check_weights(&scratch.weights, total, "receiver block table");
        if self.verify {
            let got = total / (self.side_customers[1] as f64 + tb);
            assert!(
                (got - expected).abs() <= 1e-9 * expected.max(1e-300),
                "receiver marginal {got} disagrees with joint new-pair term {expected}"
            );
        }
        let idx = sample_categorical_with_total(&scratch.weights, total, rng);
        let choice = scratch.ids.get(idx).copied();
        self.scratch = scratch;
        if idx < n_tables {
            choice.unwrap()
        } else if let Some(k) = choice {
            self.new_block_table(Side::Receiver, k)
        } else {
            let k = self.open_block();
            self.new_block_table(Side::Receiver, k)
        }
    }

    /// One sweep over block tables in random order, resampling each table's
    /// block label given the endpoints it carries. At most `limit` tables are
    /// visited. No-op for the diagonal model, whose pair tables are blocks.
    pub fn resample_block_tables(&mut self, limit: Option<usize>, rng: &mut Rng) {
        if self.model == Model::Mdnd {
            return;
        }
        let mut pair_edges: Vec<Vec<u32>> = vec![Vec::new(); self.pairs.capacity()];
        for (i, &t) in self.edge_pair.iter().enumerate() {
            if t != NONE {
                pair_edges[t as usize].push(i as u32);
            }
        }
        let mut table_edges: [Vec<Vec<u32>>; 2] = [
            vec![Vec::new(); self.block_tables[0].capacity()],
            vec![Vec::new(); self.block_tables[1].capacity()],
        ];
        for (t, p) in self.pairs.iter() {
            for si in 0..2 {
                table_edges[si][p.block_tables[si] as usize].extend(&pair_edges[t as usize]);
            }
        }
        let mut order: Vec<(Side, u32)> = Side::BOTH
            .iter()
            .flat_map(|&side| {
                self.block_tables[side.index()]
                    .iter()
                    .map(move |(bt, _)| (side, bt))
            })
            .collect();
        order.shuffle(rng);
        order.truncate(limit.unwrap_or(usize::MAX));
        for (side, bt) in order {
            self.move_block_table(side, bt, &table_edges[side.index()][bt as usize], rng);
            if self.verify {
                self.assert_consistent("table move");
            }
        }
    }

    fn move_block_table(&mut self, side: Side, bt: u32, edges: &[u32], rng: &mut Rng) {
        let si = side.index();
        let mut nodes: Vec<u32> = Vec::with_capacity(edges.len());
        for &i in edges {
            let i = i as usize;
            let nt = self.edge_node_tables[i][si];
            self.unseat_node(nt);
            self.edge_node_tables[i][si] = NONE;
            nodes.push(if si == 0 { self.edges[i].0 } else { self.edges[i].1 });
        }
        self.detach_block_table(side, bt);

        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        let tau = self.hp.tau_node;
        let mut ids = Vec::with_capacity(self.blocks.len());
        let mut log_w = Vec::with_capacity(self.blocks.len() + 1);
        for (k, b) in self.blocks.iter() {
            let mut lw = (b.m() as f64).ln();
            let mut run = 0u32;
            for (j, &v) in sorted.iter().enumerate() {
                run = if j > 0 && sorted[j - 1] == v { run + 1 } else { 0 };
                let num = (b.counts[v as usize] + run) as f64 + tau * self.beta.weight(v as usize);
                lw += (num / (b.total as f64 + j as f64 + tau)).ln();
            }
            ids.push(k);
            log_w.push(lw);
        }
        let mut lw = self.hp.gamma_block.ln();
        let mut run = 0u32;
        for (j, &v) in sorted.iter().enumerate() {
            run = if j > 0 && sorted[j - 1] == v { run + 1 } else { 0 };
            let num = run as f64 + tau * self.beta.weight(v as usize);
            lw += (num / (j as f64 + tau)).ln();
        }
        log_w.push(lw);
        assert!(
            log_w.iter().all(|w| !w.is_nan()) && log_w.iter().any(|w| w.is_finite()),
            "table move weights are degenerate: {log_w:?}"
        );
        let idx = sample_log_categorical(&log_w, rng);
        let k = match ids.get(idx) {
            Some(&k) => k,
            None => self.open_block(),
        };
        self.attach_block_table(side, bt, k);
        for (&i, &v) in edges.iter().zip(&nodes) {
            let nt = self.seat_node(k, v, rng);
            self.edge_node_tables[i as usize][si] = nt;
        }
    }

    /// Draws `β ~ Dir(ρ_·1, …, ρ_·J, γ_node)` and installs it.
    pub fn resample_beta(&mut self, rng: &mut Rng) -> Result<()> {
        let beta = BaseMeasure::resample(&self.rho, self.hp.gamma_node, rng)?;
        self.replace_beta(beta);
        Ok(())
    }

    /// One full edge sweep over a random permutation (truncated to `limit`).
    pub fn sweep_edges(&mut self, limit: Option<usize>, rng: &mut Rng) {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.shuffle(rng);
        order.truncate(limit.unwrap_or(usize::MAX));
        for i in order {
            self.resample_edge(i, rng);
        }
    }
}

#[inline]
fn check_weights(weights: &[f64], total: f64, what: &str) {
    debug_assert!(
        weights.iter().all(|w| *w >= 0.0 && w.is_finite()),
        "{what} weights not finite and non-negative: {weights:?}"
    );
    assert!(
        total > 0.0 && total.is_finite(),
        "{what} weights sum to {total}"
    );
}
