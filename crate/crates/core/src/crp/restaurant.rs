use serde::{Deserialize, Serialize};

use super::sample_categorical;
use super::Rng;
use crate::error::{Error, Result};

/// Where a customer sits: an existing table or a freshly opened one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableChoice {
    Existing(usize),
    New,
}

/// Index move caused by compaction after a table empties: the table that
/// used to live at `from` now lives at `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Remap {
    pub from: usize,
    pub to: usize,
}

/// Outcome of [`Restaurant::unseat`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unseated {
    pub table: usize,
    pub emptied: bool,
    pub moved: Option<Remap>,
}

/// A single Chinese restaurant process with dense, compacted table sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Restaurant {
    table_sizes: Vec<u32>,
    concentration: f64,
    customers: u64,
}

impl Restaurant {
    pub fn new(concentration: f64) -> Result<Self> {
        if !(concentration > 0.0 && concentration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "concentration must be positive and finite, got {concentration}"
            )));
        }
        Ok(Restaurant {
            table_sizes: Vec::new(),
            concentration,
            customers: 0,
        })
    }

    pub fn from_sizes(sizes: Vec<u32>, concentration: f64) -> Result<Self> {
        let mut r = Restaurant::new(concentration)?;
        if sizes.contains(&0) {
            return Err(Error::InvalidParameter("table sizes must be >= 1".into()));
        }
        r.customers = sizes.iter().map(|&s| s as u64).sum();
        r.table_sizes = sizes;
        Ok(r)
    }

    pub fn table_sizes(&self) -> &[u32] {
        &self.table_sizes
    }

    pub fn num_tables(&self) -> usize {
        self.table_sizes.len()
    }

    pub fn num_customers(&self) -> u64 {
        self.customers
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    /// Normalized seating probabilities: one entry per existing table followed
    /// by the new-table entry.
    pub fn predictive(&self) -> Vec<f64> {
        let denom = self.customers as f64 + self.concentration;
        self.table_sizes
            .iter()
            .map(|&s| s as f64 / denom)
            .chain(std::iter::once(self.concentration / denom))
            .collect()
    }

    pub fn sample_table(&self, rng: &mut Rng) -> TableChoice {
        let mut weights: Vec<f64> = self.table_sizes.iter().map(|&s| s as f64).collect();
        weights.push(self.concentration);
        let idx = sample_categorical(&weights, rng);
        if idx == self.table_sizes.len() {
            TableChoice::New
        } else {
            TableChoice::Existing(idx)
        }
    }

    pub fn seat(&mut self, table: TableChoice) -> Result<usize> {
        let idx = match table {
            TableChoice::Existing(idx) => {
                let len = self.table_sizes.len();
                let size = self
                    .table_sizes
                    .get_mut(idx)
                    .ok_or(Error::TableOutOfRange { index: idx, len })?;
                *size += 1;
                idx
            }
            TableChoice::New => {
                self.table_sizes.push(1);
                self.table_sizes.len() - 1
            }
        };
        self.customers += 1;
        Ok(idx)
    }

    /// Removes one customer from `table`. An emptied table is dropped by
    /// swapping the last table into its slot; the move is reported.
    pub fn unseat(&mut self, table: usize) -> Result<Unseated> {
        if self.customers == 0 {
            return Err(Error::EmptyRestaurant);
        }
        let len = self.table_sizes.len();
        let size = self
            .table_sizes
            .get_mut(table)
            .ok_or(Error::TableOutOfRange { index: table, len })?;
        *size -= 1;
        self.customers -= 1;
        if *size > 0 {
            return Ok(Unseated {
                table,
                emptied: false,
                moved: None,
            });
        }
        let last = len - 1;
        self.table_sizes.swap_remove(table);
        let moved = (last != table).then_some(Remap {
            from: last,
            to: table,
        });
        Ok(Unseated {
            table,
            emptied: true,
            moved,
        })
    }
}
