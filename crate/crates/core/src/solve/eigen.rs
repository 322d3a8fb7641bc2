//! First eigenvalue of the Dirichlet p-Laplacian by projected descent on the
//! Rayleigh quotient `R(u) = int |grad u|^p / int |u|^p`.

use std::sync::Arc;

use super::metric::Preconditioner;
use super::{SolveError, SolveOptions, SolveStatus};
use crate::grid::{Grid, ScalarField};
use crate::model::Boundary;

#[derive(Debug, Clone)]
pub struct EigenReport {
    pub lambda1: f64,
    /// Nonnegative, normalized so that `int |u|^p = 1` (lumped).
    pub eigenfunction: ScalarField,
    /// Quotient after each accepted step, starting with the initial guess.
    pub rayleigh_history: Vec<f64>,
    pub iterations: usize,
    /// Norm of the quotient gradient at the returned field.
    pub residual: f64,
    pub converged: bool,
    pub status: SolveStatus,
}

struct Quotient<'a> {
    grid: &'a Grid,
    p: f64,
}

impl Quotient<'_> {
    fn element_term(&self, e: usize, u: &[f64]) -> f64 {
        let g = self.grid.element_gradient(e, u);
        (g[0] * g[0] + g[1] * g[1]).powf(self.p / 2.0)
    }

    fn numerator(&self, u: &[f64]) -> f64 {
        (0..self.grid.element_count())
            .map(|e| self.grid.element_volume(e) * self.element_term(e, u))
            .sum()
    }

    fn denominator(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(self.grid.node_mass())
            .map(|(v, m)| m * v.abs().powf(self.p))
            .sum()
    }

    /// Numerator and denominator changes from `u` to `w`, term by term.
    fn deltas(&self, u: &[f64], w: &[f64]) -> (f64, f64) {
        let mut da = 0.0;
        for e in 0..self.grid.element_count() {
            if self.grid.element_nodes(e).iter().any(|&n| u[n] != w[n]) {
                da += self.grid.element_volume(e) * (self.element_term(e, w) - self.element_term(e, u));
            }
        }
        let db = u
            .iter()
            .zip(w)
            .zip(self.grid.node_mass())
            .map(|((a, b), m)| m * (b.abs().powf(self.p) - a.abs().powf(self.p)))
            .sum();
        (da, db)
    }

    /// Gradient of `R` at a field with denominator `b` and quotient `r`.
    fn gradient(&self, u: &[f64], r: f64, b: f64, out: &mut [f64]) {
        let p = self.p;
        for (i, o) in out.iter_mut().enumerate() {
            *o = -r * p * self.grid.node_mass()[i] * u[i].abs().powf(p - 2.0) * u[i];
            if u[i] == 0.0 {
                *o = 0.0;
            }
        }
        for e in 0..self.grid.element_count() {
            let g = self.grid.element_gradient(e, u);
            let s = g[0].hypot(g[1]);
            if s == 0.0 {
                continue;
            }
            let w = p * self.grid.element_volume(e) * s.powf(p - 2.0);
            for (&n, c) in self.grid.element_nodes(e).iter().zip(self.grid.element_grad_coeffs(e)) {
                out[n] += w * (g[0] * c[0] + g[1] * c[1]);
            }
        }
        for &n in self.grid.boundary_nodes() {
            out[n] = 0.0;
        }
        out.iter_mut().for_each(|o| *o /= b);
    }

    fn normalize(&self, u: &mut [f64]) -> f64 {
        let s = self.denominator(u).powf(1.0 / self.p);
        u.iter_mut().for_each(|v| *v /= s);
        s
    }
}

/// Minimizes the Rayleigh quotient over fields vanishing on the boundary,
/// renormalizing after every step. The stopping test scales the tolerance by
/// `max(1, R)` since the quotient gradient carries the size of the quotient.
pub fn first_eigenvalue(grid: &Arc<Grid>, p: f64, opts: &SolveOptions) -> Result<EigenReport, SolveError> {
    opts.validate()?;
    if !(p > 1.0) || grid.interior_nodes().is_empty() {
        return Err(SolveError::EigenSetup);
    }
    let q = Quotient { grid, p };
    let n = grid.node_count();
    let pc = Preconditioner::new(grid, Boundary::DirichletZero, opts.metric);
    let mut u: Vec<f64> = (0..n).map(|i| if grid.is_boundary(i) { 0.0 } else { 1.0 }).collect();
    q.normalize(&mut u);

    let mut r = q.numerator(&u);
    let mut grad = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let residual_of = |grad: &[f64]| (grad.iter().map(|g| g * g).sum::<f64>() / n as f64).sqrt();
    q.gradient(&u, r, 1.0, &mut grad);
    let mut residual = residual_of(&grad);
    let mut history = vec![r];
    let mut step = opts.initial_step;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;

    loop {
        if residual <= opts.residual_tolerance * r.max(1.0) {
            status = SolveStatus::Converged;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        pc.direction(&grad, &mut dir);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if !(slope < 0.0) {
            status = SolveStatus::LineSearchStalled;
            break;
        }
        let mut alpha = step;
        let accepted = loop {
            for ((t, &x), &d) in trial.iter_mut().zip(&u).zip(&dir) {
                *t = x + alpha * d;
            }
            let (da, db) = q.deltas(&u, &trial);
            // R(w) - R(u) with B(u) = 1
            let change = (da - r * db) / (1.0 + db);
            if change.is_finite() && change <= opts.sufficient_decrease * alpha * slope {
                break true;
            }
            alpha *= opts.shrink;
            if alpha < 1e-300 {
                break false;
            }
        };
        if !accepted {
            status = SolveStatus::LineSearchStalled;
            break;
        }
        std::mem::swap(&mut u, &mut trial);
        q.normalize(&mut u);
        r = q.numerator(&u);
        history.push(r);
        iterations += 1;
        step = (2.0 * alpha).min(1e12);
        q.gradient(&u, r, 1.0, &mut grad);
        residual = residual_of(&grad);
    }

    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(EigenReport {
        lambda1: r,
        eigenfunction: ScalarField::new(grid, u)?,
        rayleigh_history: history,
        iterations,
        residual,
        converged: status == SolveStatus::Converged,
        status,
    })
}
