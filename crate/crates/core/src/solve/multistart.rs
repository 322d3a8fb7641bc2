//! Independent descents from random nonnegative fields, grouped by distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{minimize, SolveError, SolveOptions, SolveReport, CLUSTER_RELATIVE_THRESHOLD};
use crate::grid::ScalarField;
use crate::model::{Boundary, ProblemSpec};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Start index whose solution represents the cluster.
    pub representative: usize,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MultiStartResult {
    /// One entry per start, in start order.
    pub runs: Vec<Result<SolveReport, SolveError>>,
    /// Clusters of the converged runs.
    pub clusters: Vec<Cluster>,
    pub threshold: f64,
}

impl MultiStartResult {
    pub fn converged_count(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| matches!(r, Ok(rep) if rep.converged))
            .count()
    }

    pub fn representative(&self, cluster: &Cluster) -> &SolveReport {
        match &self.runs[cluster.representative] {
            Ok(r) => r,
            Err(_) => unreachable!("clusters only hold successful runs"),
        }
    }
}

/// Entries uniform in `[0, 2]`, zero on the boundary under Dirichlet data.
pub fn random_initial_field(ps: &ProblemSpec, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = &ps.grid;
    let v = (0..grid.node_count())
        .map(|i| {
            let x: f64 = rng.gen_range(0.0..=2.0);
            if ps.boundary == Boundary::DirichletZero && grid.is_boundary(i) {
                0.0
            } else {
                x
            }
        })
        .collect();
    ScalarField::new(grid, v).expect("length matches grid")
}

/// Greedy clustering in index order: each field joins the first
/// representative within `threshold` (lumped L2), else starts a cluster.
pub fn cluster_fields(fields: &[(usize, &ScalarField)], threshold: f64) -> Vec<Cluster> {
    let mut clusters: Vec<(Cluster, &ScalarField)> = Vec::new();
    for &(idx, f) in fields {
        match clusters.iter_mut().find(|(_, rep)| rep.l2_distance(f) < threshold) {
            Some((c, _)) => c.members.push(idx),
            None => clusters.push((
                Cluster {
                    representative: idx,
                    members: vec![idx],
                },
                f,
            )),
        }
    }
    clusters.into_iter().map(|(c, _)| c).collect()
}

pub fn multi_start(ps: &ProblemSpec, n_starts: usize, opts: &SolveOptions) -> Result<MultiStartResult, SolveError> {
    multi_start_with(ps, n_starts, opts, Execution::default())
}

/// Start `k` uses seed `opts.random_seed + k`; results are ordered by start
/// index whatever the execution mode.
pub fn multi_start_with(
    ps: &ProblemSpec,
    n_starts: usize,
    opts: &SolveOptions,
    exec: Execution,
) -> Result<MultiStartResult, SolveError> {
    if n_starts < 2 {
        return Err(SolveError::TooFewStarts(n_starts));
    }
    opts.validate()?;
    let runs = map_indexed(exec, n_starts, |k| {
        let init = random_initial_field(ps, opts.random_seed.wrapping_add(k as u64));
        minimize(ps, &init, opts)
    });
    let threshold = CLUSTER_RELATIVE_THRESHOLD * ps.grid.measure().sqrt();
    let fields: Vec<(usize, &ScalarField)> = runs
        .iter()
        .enumerate()
        .filter_map(|(k, r)| match r {
            Ok(rep) if rep.converged => Some((k, &rep.solution)),
            _ => None,
        })
        .collect();
    let clusters = cluster_fields(&fields, threshold);
    Ok(MultiStartResult {
        runs,
        clusters,
        threshold,
    })
}
