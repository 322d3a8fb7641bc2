//! Classification of computed fields against the strongly positive cone,
//! dead-core detection, and the comparability constant between two fields.

use std::fmt;

use thiserror::Error;

use crate::grid::{Grid, ScalarField};
use crate::model::{Boundary, ProblemSpec, ReactionFamily};

pub const DEFAULT_TOL_ZERO: f64 = 1e-8;
pub const DEFAULT_MIN_REGION_SIZE: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("the integral condition applies to the pure subhomogeneous family with natural boundary conditions")]
    WrongProblem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    Trivial,
    InteriorCone,
    DeadCore,
    NonnegativeDegenerate,
    SignChanging,
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConeKind::Trivial => "Trivial",
            ConeKind::InteriorCone => "InteriorCone",
            ConeKind::DeadCore => "DeadCore",
            ConeKind::NonnegativeDegenerate => "NonnegativeDegenerate",
            ConeKind::SignChanging => "SignChanging",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeClassification {
    pub kind: ConeKind,
    /// Smallest value over the nodes that must be positive (interior nodes
    /// for Dirichlet, all nodes otherwise).
    pub positivity_margin: f64,
    /// Smallest `-d_nu u` over boundary nodes with a neighbor along the normal
    /// (Dirichlet only).
    pub normal_derivative_margin: Option<f64>,
    /// Connected interior node sets where `|u| <= tol_zero`, each of at least
    /// `min_region_size` nodes.
    pub dead_core_regions: Vec<Vec<usize>>,
}

/// One-sided difference quotient `(u_n - u_b)/|x_n - x_b|` toward the
/// neighbor lying exactly along the inward normal of each boundary node.
/// Nodes without such a neighbor (rectangle corners off the triangle
/// diagonal) are skipped.
pub fn inward_slopes(grid: &Grid, u: &[f64]) -> Vec<(usize, f64)> {
    let nodes = grid.nodes();
    let mut out = Vec::new();
    for (&b, nu) in grid.boundary_nodes().iter().zip(grid.boundary_normals()) {
        let xb = nodes[b];
        let best = grid
            .neighbors(b)
            .iter()
            .filter_map(|&n| {
                let d = [nodes[n][0] - xb[0], nodes[n][1] - xb[1]];
                let len = d[0].hypot(d[1]);
                let cos = -(d[0] * nu[0] + d[1] * nu[1]) / len;
                (cos > 1.0 - 1e-9).then_some((n, len))
            })
            .next();
        if let Some((n, len)) = best {
            out.push((b, (u[n] - u[b]) / len));
        }
    }
    out
}

fn zero_regions(grid: &Grid, u: &[f64], tol_zero: f64, min_size: usize) -> Vec<Vec<usize>> {
    let n = grid.node_count();
    let in_set = |i: usize| !grid.is_boundary(i) && u[i].abs() <= tol_zero;
    let mut seen = vec![false; n];
    let mut regions = Vec::new();
    for start in 0..n {
        if seen[start] || !in_set(start) {
            continue;
        }
        let mut region = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            region.push(i);
            for &j in grid.neighbors(i) {
                if !seen[j] && in_set(j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if region.len() >= min_size {
            region.sort_unstable();
            regions.push(region);
        }
    }
    regions
}

pub fn classify_cone(ps: &ProblemSpec, u: &ScalarField, tol_zero: f64, min_region_size: usize) -> ConeClassification {
    let grid = &ps.grid;
    let v = u.values();
    let must_be_positive: Vec<usize> = match ps.boundary {
        Boundary::DirichletZero => grid.interior_nodes().to_vec(),
        Boundary::Natural => (0..grid.node_count()).collect(),
    };
    let positivity_margin = must_be_positive.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min);
    let normal_derivative_margin = (ps.boundary == Boundary::DirichletZero).then(|| {
        inward_slopes(grid, v)
            .into_iter()
            .map(|(_, s)| s)
            .fold(f64::INFINITY, f64::min)
    });
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let dead_core_regions = zero_regions(grid, v, tol_zero, min_region_size);

    let kind = if u.max_abs() <= tol_zero {
        ConeKind::Trivial
    } else if min < -tol_zero {
        ConeKind::SignChanging
    } else if positivity_margin > tol_zero && normal_derivative_margin.is_none_or(|m| m > tol_zero) {
        ConeKind::InteriorCone
    } else if !dead_core_regions.is_empty() && max > tol_zero {
        ConeKind::DeadCore
    } else {
        ConeKind::NonnegativeDegenerate
    };
    ConeClassification {
        kind,
        positivity_margin,
        normal_derivative_margin,
        dead_core_regions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Incomparability {
    BothTrivial,
    /// One field vanishes at `node` while the other does not.
    VanishesAt {
        node: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparability {
    /// Smallest `delta >= 1` with `v/delta <= u <= delta v` on the nodes
    /// where both are positive.
    Delta(f64),
    Incomparable(Incomparability),
}

impl Comparability {
    pub fn delta(&self) -> Option<f64> {
        match self {
            Comparability::Delta(d) => Some(*d),
            Comparability::Incomparable(_) => None,
        }
    }
}

pub fn comparability_delta(u: &ScalarField, v: &ScalarField, tol: f64) -> Comparability {
    if u.max_abs() <= tol && v.max_abs() <= tol {
        return Comparability::Incomparable(Incomparability::BothTrivial);
    }
    let mut delta: f64 = 1.0;
    for (node, (&a, &b)) in u.values().iter().zip(v.values()).enumerate() {
        match (a > tol, b > tol) {
            (true, true) => delta = delta.max((a / b).max(b / a)),
            (false, false) => {}
            _ => return Comparability::Incomparable(Incomparability::VanishesAt { node }),
        }
    }
    Comparability::Delta(delta)
}

/// `int a` (lumped) for the pure subhomogeneous family under natural
/// boundary conditions. A positive value rules out positive solutions and
/// makes the energy unbounded below along constants.
pub fn neumann_integral_condition(ps: &ProblemSpec) -> Result<f64, ClassifyError> {
    match (&ps.reaction.family, ps.boundary) {
        (ReactionFamily::PureSubhomogeneous { a, .. }, Boundary::Natural) => {
            let grid = &ps.grid;
            let vals: Vec<f64> = (0..grid.node_count()).map(|i| a.at(i)).collect();
            Ok(grid.integrate_nodal_values(&vals))
        }
        _ => Err(ClassifyError::WrongProblem),
    }
}
