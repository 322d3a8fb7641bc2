//! Descent solvers for the discrete energy and the first eigenvalue of the
//! p-Laplacian.

mod descent;
mod eigen;
pub mod metric;
mod multistart;

use thiserror::Error;

use crate::classify::ConeClassification;
use crate::energy::{EnergyBreakdown, EnergyError};
use crate::grid::{Grid, GridError, ScalarField};

pub use descent::{critical_point_from, minimize};
pub use eigen::{first_eigenvalue, EigenReport};
pub use metric::Metric;
pub use multistart::{cluster_fields, multi_start, multi_start_with, random_initial_field, Cluster, MultiStartResult};

/// Energy below this value is taken as evidence of unboundedness.
pub const UNBOUNDED_ENERGY: f64 = -1e12;
/// Consecutive doublings of the sup norm that count as divergence.
pub const UNBOUNDED_DOUBLINGS: usize = 10;
/// Clusters join fields closer than this times the square root of the measure.
pub const CLUSTER_RELATIVE_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    /// Backtracking factor, in `(0, 1)`.
    pub shrink: f64,
    /// Armijo constant.
    pub sufficient_decrease: f64,
    pub initial_step: f64,
    pub random_seed: u64,
    pub metric: Metric,
    /// Keep the energy after every accepted step.
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iterations: 50_000,
            residual_tolerance: 1e-9,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            initial_step: 1.0,
            random_seed: 0,
            metric: Metric::default(),
            record_history: false,
        }
    }
}

impl SolveOptions {
    /// Defaults with the iteration budget matched to the grid dimension.
    pub fn for_grid(grid: &Grid) -> Self {
        let mut o = SolveOptions::default();
        if grid.dimension() == 2 {
            o.max_iterations = 20_000;
        }
        o
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let ok = self.residual_tolerance > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.sufficient_decrease > 0.0
            && self.sufficient_decrease < 1.0
            && self.initial_step > 0.0
            && self.initial_step.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SolveError::Options(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// Iteration budget exhausted.
    MaxIterations,
    /// Backtracking found no decrease before the step underflowed.
    LineSearchStalled,
}

/// Which entry point produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    Minimizer,
    CriticalPoint,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: ScalarField,
    pub energy: EnergyBreakdown,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    pub kind: SolutionKind,
    pub classification: Option<ConeClassification>,
    /// Energy after each accepted step (empty unless requested).
    pub energy_history: Vec<f64>,
}

#[derive(Debug, Error, Clone)]
pub enum SolveError {
    #[error("energy is not bounded below (energy {energy:e} after {iterations} iterations)")]
    NotBoundedBelow {
        iterations: usize,
        energy: f64,
        last: ScalarField,
    },
    #[error("the reaction needs a negative extension before descent can run")]
    MissingNegativeExtension,
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error("need at least two starts, got {0}")]
    TooFewStarts(usize),
    #[error("eigenvalue problem needs p > 1 and a grid with interior nodes")]
    EigenSetup,
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Grid(#[from] GridError),
}
