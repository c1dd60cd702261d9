//! Comparison solvers sharing the dual-link result and trace interface:
//! iterative polite water-filling, block-coordinate WMMSE, and a
//! projected-gradient oracle for multiaccess sum capacity.

mod mac;
mod pwf;
mod wmmse;

pub use mac::{mac_capacity_oracle, mac_network};
pub use pwf::pwf_solve;
pub use wmmse::{wmmse_solve, wmmse_solve_from};

use crate::dual_link::{SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::network::NetworkSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineAlgorithm {
    Pwf,
    Wmmse,
}

#[derive(Debug, Clone, Copy)]
pub struct BaselineConfig {
    pub algorithm: BaselineAlgorithm,
    pub solver: SolverConfig,
    /// Trailing window used to classify a run that hit the iteration cap as
    /// oscillating (non-converged) rather than merely slow.
    pub oscillation_window: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            algorithm: BaselineAlgorithm::Pwf,
            solver: SolverConfig::default(),
            oscillation_window: 20,
        }
    }
}

impl BaselineConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.oscillation_window < 2 {
            return Err(Error::InvalidConfig(
                "oscillation window must cover at least two iterations".into(),
            ));
        }
        Ok(())
    }
}

/// Dispatch on the configured baseline.
pub fn baseline_solve(spec: &NetworkSpec, config: &BaselineConfig) -> Result<SolveResult> {
    match config.algorithm {
        BaselineAlgorithm::Pwf => pwf_solve(spec, config),
        BaselineAlgorithm::Wmmse => wmmse_solve(spec, config),
    }
}
