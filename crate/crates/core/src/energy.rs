//! Discrete energy `I_h(u) = sum_e |e| (1/p) H(|grad u|_e^p) - sum_i m_i G(x_i, u_i)`
//! and its nodal gradient.

use thiserror::Error;

use crate::grid::{GridError, ScalarField};
use crate::model::{Boundary, ProblemSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("Dirichlet boundary node {node} carries value {value}")]
    BoundaryViolation { node: usize, value: f64 },
    #[error("negative value {value} at node {node} but the reaction has no negative extension")]
    NegativeArgument { node: usize, value: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Regularization of `|grad u|^(p-2)` for `p < 2` in the gradient assembly.
pub const GRADIENT_REGULARIZATION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `int (1/p) H(|grad u|^p)`
    pub diffusion_part: f64,
    /// `int G(x, u)` (lumped)
    pub reaction_part: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(diffusion_part: f64, reaction_part: f64) -> Self {
        // overflow of the diffusion term counts as +inf
        let total = if diffusion_part.is_nan() || diffusion_part == f64::INFINITY {
            f64::INFINITY
        } else {
            diffusion_part - reaction_part
        };
        let total = if total.is_nan() { f64::INFINITY } else { total };
        EnergyBreakdown {
            diffusion_part,
            reaction_part,
            total,
        }
    }
}

pub(crate) fn check_admissible(ps: &ProblemSpec, u: &[f64]) -> Result<(), EnergyError> {
    if ps.boundary == Boundary::DirichletZero {
        for &b in ps.grid.boundary_nodes() {
            if u[b] != 0.0 {
                return Err(EnergyError::BoundaryViolation { node: b, value: u[b] });
            }
        }
    }
    if ps.reaction.negative_extension.is_none() {
        if let Some(node) = u.iter().position(|&v| v < 0.0) {
            return Err(EnergyError::NegativeArgument { node, value: u[node] });
        }
    }
    Ok(())
}

fn check_field(ps: &ProblemSpec, u: &ScalarField) -> Result<(), EnergyError> {
    if !(std::sync::Arc::ptr_eq(u.grid(), &ps.grid) || **u.grid() == *ps.grid) {
        return Err(GridError::GridMismatch.into());
    }
    check_admissible(ps, u.values())
}

#[inline]
fn element_energy(ps: &ProblemSpec, e: usize, u: &[f64]) -> f64 {
    let p = ps.diffusion.p;
    let g = ps.grid.element_gradient(e, u);
    let s2 = g[0] * g[0] + g[1] * g[1];
    ps.diffusion.big_h(s2.powf(p / 2.0)) / p
}

/// Unchecked evaluation on raw nodal values.
pub(crate) fn energy_values(ps: &ProblemSpec, u: &[f64]) -> EnergyBreakdown {
    let grid = &ps.grid;
    let diffusion: f64 = (0..grid.element_count())
        .map(|e| grid.element_volume(e) * element_energy(ps, e, u))
        .sum();
    let reaction: f64 = u
        .iter()
        .zip(grid.node_mass())
        .enumerate()
        .map(|(i, (&v, &m))| m * ps.reaction.big_g(i, v))
        .sum();
    EnergyBreakdown::new(diffusion, reaction)
}

/// Three-point Gauss-Legendre rule for `int_a^b f`.
fn gauss3(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: f64 = 0.774_596_669_241_483_4;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * (5.0 / 9.0 * (f(mid - half * X) + f(mid + half * X)) + 8.0 / 9.0 * f(mid))
}

/// Relative size of a change below which term differences are integrated
/// instead of subtracted.
const SMALL_CHANGE: f64 = 1e-2;

fn small_change(a: f64, b: f64) -> bool {
    a * b > 0.0 && (b - a).abs() <= SMALL_CHANGE * a.abs().min(b.abs())
}

/// `I(w) - I(u)` accumulated term by term. Small changes of a term are
/// obtained by integrating its derivative, so nearby fields do not lose
/// their energy difference to cancellation.
pub(crate) fn energy_delta_values(ps: &ProblemSpec, u: &[f64], w: &[f64]) -> f64 {
    let grid = &ps.grid;
    let p = ps.diffusion.p;
    let dphi = |y: f64| 0.5 * ps.diffusion.h(y.powf(p / 2.0)) * y.powf(p / 2.0 - 1.0);
    let mut delta = 0.0;
    let mut diff = vec![0.0; u.len()];
    for (d, (a, b)) in diff.iter_mut().zip(u.iter().zip(w)) {
        *d = b - a;
    }
    for e in 0..grid.element_count() {
        let nodes = grid.element_nodes(e);
        if nodes.iter().all(|&n| diff[n] == 0.0) {
            continue;
        }
        let gu = grid.element_gradient(e, u);
        let gw = grid.element_gradient(e, w);
        let gd = grid.element_gradient(e, &diff);
        let yu = gu[0] * gu[0] + gu[1] * gu[1];
        let yw = gw[0] * gw[0] + gw[1] * gw[1];
        let dy = gd[0] * (gu[0] + gw[0]) + gd[1] * (gu[1] + gw[1]);
        let term = if yu > 0.0 && yw > 0.0 && dy.abs() <= SMALL_CHANGE * yu.min(yw) {
            gauss3(yu, yu + dy, dphi)
        } else {
            element_energy(ps, e, w) - element_energy(ps, e, u)
        };
        delta += grid.element_volume(e) * term;
    }
    for (i, m) in grid.node_mass().iter().enumerate() {
        let (a, b) = (u[i], w[i]);
        if a == b {
            continue;
        }
        let term = if small_change(a, b) {
            gauss3(a, b, |t| ps.reaction.g(i, t))
        } else {
            ps.reaction.big_g(i, b) - ps.reaction.big_g(i, a)
        };
        delta -= m * term;
    }
    if delta.is_nan() {
        f64::INFINITY
    } else {
        delta
    }
}

/// Gradient of the discrete energy with respect to nodal values, written
/// into `out`. Dirichlet entries are zeroed.
pub(crate) fn grad_values(ps: &ProblemSpec, u: &[f64], out: &mut [f64]) {
    let grid = &ps.grid;
    let p = ps.diffusion.p;
    for (i, o) in out.iter_mut().enumerate() {
        *o = -grid.node_mass()[i] * ps.reaction.g(i, u[i]);
    }
    for e in 0..grid.element_count() {
        let g = grid.element_gradient(e, u);
        let s = g[0].hypot(g[1]);
        if s == 0.0 {
            continue;
        }
        let base = if p < 2.0 { s.max(GRADIENT_REGULARIZATION) } else { s };
        let weight = grid.element_volume(e) * ps.diffusion.h(s.powf(p)) * base.powf(p - 2.0);
        for (&n, c) in grid.element_nodes(e).iter().zip(grid.element_grad_coeffs(e)) {
            out[n] += weight * (g[0] * c[0] + g[1] * c[1]);
        }
    }
    if ps.boundary == Boundary::DirichletZero {
        for &b in grid.boundary_nodes() {
            out[b] = 0.0;
        }
    }
}

pub(crate) fn residual_from_grad(ps: &ProblemSpec, grad: &[f64]) -> f64 {
    let sum: f64 = match ps.boundary {
        Boundary::DirichletZero => ps.grid.interior_nodes().iter().map(|&i| grad[i] * grad[i]).sum(),
        Boundary::Natural => grad.iter().map(|v| v * v).sum(),
    };
    (sum / ps.grid.node_count() as f64).sqrt()
}

pub fn energy(ps: &ProblemSpec, u: &ScalarField) -> Result<EnergyBreakdown, EnergyError> {
    check_field(ps, u)?;
    Ok(energy_values(ps, u.values()))
}

/// `I(w) - I(u)`, accumulated element by element.
pub fn energy_delta(ps: &ProblemSpec, u: &ScalarField, w: &ScalarField) -> Result<f64, EnergyError> {
    check_field(ps, u)?;
    check_field(ps, w)?;
    Ok(energy_delta_values(ps, u.values(), w.values()))
}

pub fn energy_grad(ps: &ProblemSpec, u: &ScalarField) -> Result<ScalarField, EnergyError> {
    check_field(ps, u)?;
    let mut out = vec![0.0; u.values().len()];
    grad_values(ps, u.values(), &mut out);
    Ok(ScalarField::new(&ps.grid, out)?)
}

/// Euclidean norm of the free gradient entries divided by the square root of
/// the node count.
pub fn residual_norm(ps: &ProblemSpec, u: &ScalarField) -> Result<f64, EnergyError> {
    let g = energy_grad(ps, u)?;
    Ok(residual_from_grad(ps, g.values()))
}
