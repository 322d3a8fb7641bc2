//! Inner products for descent directions.
//!
//! The discrete H^1 metric `K + M / l^2` (P1 Laplacian stiffness plus lumped
//! mass, `l` a length scale relative to the longest domain side) on the free degrees of freedom is factored once
//! with a banded Cholesky decomposition; a descent direction is then
//! `-(K + M / l^2)^{-1} grad I`. Smaller `l` makes the smoothing more local.
//! Optionally the diagonal `D` of the positive part of the reaction's second
//! derivative is added and the matrix refactored every iteration, which keeps
//! strongly absorbing regions from dragging the rest of the field along.

use crate::grid::Grid;
use crate::model::Boundary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    /// Raw nodal gradient.
    Euclidean,
    /// Gradient in the discrete H^1 inner product with length scale
    /// `length` (a fraction of the longest domain side), plus the reaction
    /// curvature diagonal if `curvature` is set.
    Sobolev { length: f64, curvature: bool },
}

impl Default for Metric {
    fn default() -> Self {
        Metric::Sobolev {
            length: 0.1,
            curvature: true,
        }
    }
}

impl Metric {
    pub fn uses_curvature(&self) -> bool {
        matches!(self, Metric::Sobolev { curvature: true, .. })
    }
}

/// Symmetric positive definite band matrix stored row-wise as
/// `band[i * (bw + 1) + k] = A[i][i - k]`.
#[derive(Debug, Clone)]
struct BandCholesky {
    n: usize,
    bw: usize,
    factor: Vec<f64>,
}

impl BandCholesky {
    fn factor(n: usize, bw: usize, mut a: Vec<f64>) -> Self {
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = a[i * w + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= a[i * w + (i - k)] * a[j * w + (j - k)];
                }
                if i == j {
                    assert!(sum > 0.0, "metric matrix is not positive definite");
                    a[i * w] = sum.sqrt();
                } else {
                    a[i * w + (i - j)] = sum / a[j * w];
                }
            }
        }
        BandCholesky { n, bw, factor: a }
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let l = &self.factor;
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= l[i * w + (i - k)] * x[k];
            }
            x[i] = s / l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= l[k * w + (k - i)] * x[k];
            }
            x[i] = s / l[i * w];
        }
    }
}

/// Maps nodal gradients to descent directions.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    metric: Metric,
    free: Vec<usize>,
    bw: usize,
    base: Vec<f64>,
    chol: Option<BandCholesky>,
}

impl Preconditioner {
    pub fn new(grid: &Grid, boundary: Boundary, metric: Metric) -> Self {
        let free: Vec<usize> = match boundary {
            Boundary::DirichletZero => grid.interior_nodes().to_vec(),
            Boundary::Natural => (0..grid.node_count()).collect(),
        };
        let length = match metric {
            Metric::Sobolev { length, .. } if !free.is_empty() => {
                length * grid.extents().iter().map(|(a, b)| b - a).fold(0.0, f64::max)
            }
            _ => 0.0,
        };
        let mut pc = Preconditioner {
            metric,
            free,
            bw: 0,
            base: Vec::new(),
            chol: None,
        };
        if length > 0.0 {
            let mut slot = vec![usize::MAX; grid.node_count()];
            for (k, &n) in pc.free.iter().enumerate() {
                slot[n] = k;
            }
            let bw = grid
                .edges()
                .iter()
                .filter(|[a, b]| slot[*a] != usize::MAX && slot[*b] != usize::MAX)
                .map(|[a, b]| slot[*a].abs_diff(slot[*b]))
                .max()
                .unwrap_or(0);
            let w = bw + 1;
            let mut band = vec![0.0; pc.free.len() * w];
            for e in 0..grid.element_count() {
                let nodes = grid.element_nodes(e);
                let c = grid.element_grad_coeffs(e);
                let vol = grid.element_volume(e);
                for (a, &na) in nodes.iter().enumerate() {
                    for (b, &nb) in nodes.iter().enumerate() {
                        let (ia, ib) = (slot[na], slot[nb]);
                        if ia == usize::MAX || ib == usize::MAX || ib > ia {
                            continue;
                        }
                        band[ia * w + (ia - ib)] += vol * (c[a][0] * c[b][0] + c[a][1] * c[b][1]);
                    }
                }
            }
            for (k, &n) in pc.free.iter().enumerate() {
                band[k * w] += grid.node_mass()[n] / (length * length);
            }
            pc.bw = bw;
            pc.chol = Some(BandCholesky::factor(pc.free.len(), bw, band.clone()));
            pc.base = band;
        }
        pc
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Refactors with the nonnegative nodal diagonal `extra` added. No-op for
    /// the Euclidean metric.
    pub fn set_diagonal(&mut self, extra: &[f64]) {
        if self.base.is_empty() {
            return;
        }
        let w = self.bw + 1;
        let mut band = self.base.clone();
        for (k, &n) in self.free.iter().enumerate() {
            band[k * w] += extra[n];
        }
        self.chol = Some(BandCholesky::factor(self.free.len(), self.bw, band));
    }

    /// Writes `-P^{-1} grad` into `dir`; entries of fixed nodes are zero.
    pub fn direction(&self, grad: &[f64], dir: &mut [f64]) {
        dir.iter_mut().for_each(|d| *d = 0.0);
        match &self.chol {
            None => {
                for &n in &self.free {
                    dir[n] = -grad[n];
                }
            }
            Some(chol) => {
                let mut x: Vec<f64> = self.free.iter().map(|&n| grad[n]).collect();
                chol.solve_in_place(&mut x);
                for (k, &n) in self.free.iter().enumerate() {
                    dir[n] = -x[k];
                }
            }
        }
    }
}
