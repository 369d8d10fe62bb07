//! Collapsed Gibbs inference over the franchise seating state.
//!
//! [`SeatingState`] holds the assignment chain and every count cache;
//! [`Sampler`] runs epochs (β update, edge sweep, block-table sweep);
//! [`fit`] wraps a whole run with burn-in and thinning.

mod checkpoint;
mod moves;
mod slab;
mod state;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, to_checkpoint_string, Checkpoint, CHECKPOINT_MAGIC};
pub use state::{SeatingState, Side};

use crate::crp::Rng;
use crate::error::{Error, Result};
use crate::netcore::MultiGraph;

/// Concentrations of the four restaurant levels and the node base measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub tau_pair: f64,
    pub tau_block: f64,
    pub gamma_block: f64,
    pub tau_node: f64,
    pub gamma_node: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            tau_pair: 100.0,
            tau_block: 10.0,
            gamma_block: 10.0,
            tau_node: 10.0,
            gamma_node: 10.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_pair", self.tau_pair),
            ("tau_block", self.tau_block),
            ("gamma_block", self.gamma_block),
            ("tau_node", self.tau_node),
            ("gamma_node", self.gamma_node),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Which model the sampler targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Nondiagonal: sender and receiver blocks are drawn separately.
    Ndmdnd,
    /// Diagonal baseline: every pair table is its own block.
    Mdnd,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ndmdnd" => Ok(Model::Ndmdnd),
            "mdnd" => Ok(Model::Mdnd),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (expected ndmdnd or mdnd)"
            ))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Ndmdnd => "ndmdnd",
            Model::Mdnd => "mdnd",
        })
    }
}

/// Run length and schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitConfig {
    pub epochs: u64,
    pub burn_in: u64,
    pub thin: u64,
    /// Edge resamples per epoch; `None` is one full sweep.
    pub edge_moves: Option<usize>,
    /// Block-table resamples per epoch; `None` visits every live table once.
    pub table_moves: Option<usize>,
    pub seed: u64,
    /// Check every cache from scratch after every move.
    pub verify: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 1000,
            burn_in: 500,
            thin: 10,
            edge_moves: None,
            table_moves: None,
            seed: 0,
            verify: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.burn_in > self.epochs {
            return Err(Error::Config(format!(
                "burn-in {} exceeds epochs {}",
                self.burn_in, self.epochs
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether the state after `epoch` (1-based) is kept as a snapshot.
    pub fn keeps(&self, epoch: u64) -> bool {
        epoch > self.burn_in && (epoch - self.burn_in) % self.thin == 0
    }
}

/// One line of the trace CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub epoch: u64,
    pub num_blocks: usize,
    pub num_pair_tables: usize,
    pub num_block_tables: usize,
    pub log_score: f64,
}

impl TraceRow {
    pub fn of(epoch: u64, state: &SeatingState) -> Self {
        TraceRow {
            epoch,
            num_blocks: state.num_blocks(),
            num_pair_tables: state.num_pair_tables(),
            num_block_tables: state.num_block_tables(),
            log_score: state.log_score(),
        }
    }
}

pub const TRACE_HEADER: &str = "epoch,num_blocks,num_pair_tables,num_block_tables,log_score";

pub fn write_trace<W: Write>(mut w: W, rows: &[TraceRow]) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for row in rows {
        write_trace_row(&mut w, row)?;
    }
    Ok(())
}

pub fn write_trace_row<W: Write>(mut w: W, row: &TraceRow) -> std::io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{}",
        row.epoch, row.num_blocks, row.num_pair_tables, row.num_block_tables, row.log_score
    )
}

pub fn save_trace(path: impl AsRef<Path>, rows: &[TraceRow]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_trace(&mut w, rows)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// A single chain: its state, its random stream and its epoch counter.
#[derive(Clone, Debug)]
pub struct Sampler {
    state: SeatingState,
    rng: Rng,
    epoch: u64,
    edge_moves: Option<usize>,
    table_moves: Option<usize>,
}

impl Sampler {
    /// Builds the state for `graph` and seats every edge sequentially.
    pub fn new(graph: &MultiGraph, hp: HyperParams, model: Model, cfg: &FitConfig, mut rng: Rng) -> Result<Self> {
        if graph.is_empty() {
            return Err(Error::Config("cannot fit an empty graph".into()));
        }
        let mut state = SeatingState::new(graph, hp, model)?;
        state.set_verify(cfg.verify);
        state.initialize(&mut rng);
        state.compact();
        Ok(Sampler {
            state,
            rng,
            epoch: 0,
            edge_moves: cfg.edge_moves,
            table_moves: cfg.table_moves,
        })
    }

    /// Resumes from a restored state.
    pub fn resume(checkpoint: Checkpoint, cfg: &FitConfig) -> Self {
        let mut state = checkpoint.state;
        state.set_verify(cfg.verify);
        Sampler {
            state,
            rng: checkpoint.rng,
            epoch: checkpoint.epoch,
            edge_moves: cfg.edge_moves,
            table_moves: cfg.table_moves,
        }
    }

    /// β update, edge sweep, block-table sweep, compaction.
    pub fn step_epoch(&mut self) -> Result<TraceRow> {
        self.state.resample_beta(&mut self.rng)?;
        self.state.sweep_edges(self.edge_moves, &mut self.rng);
        self.state
            .resample_block_tables(self.table_moves, &mut self.rng);
        self.state.compact();
        self.epoch += 1;
        Ok(TraceRow::of(self.epoch, &self.state))
    }

    pub fn state(&self) -> &SeatingState {
        &self.state
    }

    pub fn rng(&self) -> &Rng {
        &self.rng
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            state: self.state.clone(),
            rng: self.rng.clone(),
            epoch: self.epoch,
        }
    }

    pub fn into_state(self) -> SeatingState {
        self.state
    }
}

/// Output of [`fit`].
#[derive(Clone, Debug)]
pub struct FitResult {
    /// Thinned post-burn-in states, oldest first.
    pub snapshots: Vec<SeatingState>,
    pub trace: Vec<TraceRow>,
    pub last: Checkpoint,
}

/// Initializes and runs one chain for `cfg.epochs` epochs.
pub fn fit(graph: &MultiGraph, hp: HyperParams, cfg: &FitConfig, model: Model, rng: Rng) -> Result<FitResult> {
    cfg.validate()?;
    let mut sampler = Sampler::new(graph, hp, model, cfg, rng)?;
    run(&mut sampler, cfg, |_, _| Ok(()))
}

/// Runs `sampler` until `cfg.epochs`, calling `on_epoch` after each epoch.
pub fn run<F>(sampler: &mut Sampler, cfg: &FitConfig, mut on_epoch: F) -> Result<FitResult>
where
    F: FnMut(&Sampler, &TraceRow) -> Result<()>,
{
    cfg.validate()?;
    let mut snapshots = Vec::new();
    let mut trace = Vec::with_capacity(cfg.epochs.saturating_sub(sampler.epoch()) as usize);
    while sampler.epoch() < cfg.epochs {
        let row = sampler.step_epoch()?;
        log::debug!(
            "epoch {} blocks {} pair tables {} log-score {:.3}",
            row.epoch,
            row.num_blocks,
            row.num_pair_tables,
            row.log_score
        );
        if cfg.keeps(row.epoch) {
            snapshots.push(sampler.state().clone());
        }
        trace.push(row);
        on_epoch(sampler, &row)?;
    }
    Ok(FitResult {
        snapshots,
        trace,
        last: sampler.checkpoint(),
    })
}
