//! Runs every (scheme, copies, seed) cell of an experiment.

use std::fs::File;
use std::io::BufReader;

use rayon::prelude::*;

use dccast::metrics::CsvRow;
use dccast::sim::SimError;
use dccast::workload::{self, WorkloadError};
use dccast::{simulate, Scheme, TransferRequest};

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{scheme} copies={copies} seed={seed}: {source}")]
    Simulation { scheme: Scheme, copies: usize, seed: u64, source: SimError },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            RunError::Simulation { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cell {
    scheme: Scheme,
    copies: usize,
    seed: u64,
}

fn traffic(cfg: &ExperimentConfig, copies: usize, seed: u64) -> Result<Vec<TransferRequest>, ConfigError> {
    if let Some(path) = &cfg.workload_file {
        let file = File::open(path).map_err(|e| ConfigError::new("workload_file", format!("{}: {e}", path.display())))?;
        return workload::read_csv(BufReader::new(file)).map_err(|e| ConfigError::new("workload_file", e.to_string()));
    }
    let topology = cfg.topology.build(seed, cfg.capacity).map_err(|e| ConfigError::new("topology", e.to_string()))?;
    workload::generate(&cfg.workload(copies, seed), &topology).map_err(|e| match e {
        WorkloadError::BadCopies { .. } => ConfigError::new("copies", e.to_string()),
        other => ConfigError::new("workload", other.to_string()),
    })
}

/// Generates the traffic of one cell, for `workload --dump`.
pub fn cell_traffic(cfg: &ExperimentConfig, copies: usize, seed: u64) -> Result<Vec<TransferRequest>, ConfigError> {
    traffic(cfg, copies, seed)
}

fn run_cell(cfg: &ExperimentConfig, cell: Cell) -> Result<CsvRow, RunError> {
    let topology = cfg.topology.build(cell.seed, cfg.capacity).map_err(|e| ConfigError::new("topology", e.to_string()))?;
    let requests = traffic(cfg, cell.copies, cell.seed)?;
    let fail = |source| RunError::Simulation { scheme: cell.scheme, copies: cell.copies, seed: cell.seed, source };
    let outcome = simulate(&topology, &requests, cell.scheme, &cfg.sim(cell.seed)).map_err(|e| match e {
        SimError::Config(m) => RunError::Config(ConfigError::new("workload", m)),
        other => fail(other),
    })?;
    let copies = if cfg.workload_file.is_some() {
        requests.iter().map(|r| r.destinations.len()).max().unwrap_or(0)
    } else {
        cell.copies
    };
    Ok(CsvRow {
        topology: cfg.topology.to_string(),
        seed: cell.seed,
        copies,
        lambda: cfg.lambda,
        k_paths: cfg.k_paths,
        report: outcome.report,
    })
}

/// One row per cell, sorted by (scheme, copies, seed).
///
/// A replayed workload file is one cell per (scheme, seed).
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CsvRow>, RunError> {
    let copies: Vec<usize> = if cfg.workload_file.is_some() { vec![0] } else { cfg.copies.clone() };
    let mut cells = Vec::new();
    for &scheme in &cfg.schemes {
        for &c in &copies {
            for &seed in &cfg.seeds {
                cells.push(Cell { scheme, copies: c, seed });
            }
        }
    }
    cells.sort();
    let mut rows: Vec<(Cell, CsvRow)> = cells
        .par_iter()
        .map(|&cell| run_cell(cfg, cell).map(|row| (cell, row)))
        .collect::<Result<_, _>>()?;
    rows.sort_by(|(a, x), (b, y)| {
        (a.scheme.name(), x.copies, a.seed).cmp(&(b.scheme.name(), y.copies, b.seed))
    });
    Ok(rows.into_iter().map(|(_, row)| row).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violations_and_config_errors_map_to_exit_codes() {
        let config = RunError::Config(ConfigError::new("copies", "bad"));
        let violation = RunError::Simulation {
            scheme: Scheme::Dccast,
            copies: 1,
            seed: 1,
            source: SimError::Invariant { slot: 3, message: "arc 0 over capacity".into() },
        };
        assert_eq!(config.exit_code(), 1);
        assert_eq!(violation.exit_code(), 2);
        assert!(violation.to_string().contains("DCCAST copies=1 seed=1"));
    }
}
