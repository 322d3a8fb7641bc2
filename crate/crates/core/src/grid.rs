//! Structured simplicial meshes on intervals and rectangles, with the P1
//! calculus (element gradients, lumped and elementwise quadrature) used by
//! every other module.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("need at least 2 cells per direction, got {0}")]
    TooFewCells(usize),
    #[error("degenerate extent [{0}, {1}]")]
    DegenerateExtent(f64, f64),
    #[error("field has {got} values but the grid has {expected} {what}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
}

/// A simplicial mesh of an interval (segments) or a rectangle (triangles).
///
/// Elements are stored as fixed triples; in 1D only the first two entries
/// are meaningful. Coordinates and gradient vectors are stored as pairs with
/// a zero second component in 1D.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dimension: usize,
    extents: Vec<(f64, f64)>,
    cells: (usize, usize),
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    element_volume: Vec<f64>,
    element_grad_coeffs: Vec<[[f64; 2]; 3]>,
    edges: Vec<[usize; 2]>,
    neighbors: Vec<Vec<usize>>,
    node_mass: Vec<f64>,
    boundary_nodes: Vec<usize>,
    boundary_normal: Vec<[f64; 2]>,
    interior_nodes: Vec<usize>,
    is_boundary: Vec<bool>,
    measure: f64,
}

fn check_extent(a: f64, b: f64) -> Result<(), GridError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(GridError::DegenerateExtent(a, b));
    }
    Ok(())
}

/// Uniform grid with `n` segments on `[a, b]`.
pub fn build_interval_grid(n: usize, a: f64, b: f64) -> Result<Grid, GridError> {
    if n < 2 {
        return Err(GridError::TooFewCells(n));
    }
    check_extent(a, b)?;
    let h = (b - a) / n as f64;
    let nodes: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            // pin the last node to b exactly
            let x = if i == n { b } else { a + h * i as f64 };
            [x, 0.0]
        })
        .collect();
    let elements = (0..n).map(|e| [e, e + 1, usize::MAX]).collect();
    let boundary = vec![(0, [-1.0, 0.0]), (n, [1.0, 0.0])];
    Ok(Grid::assemble(1, vec![(a, b)], (n, 1), nodes, elements, boundary))
}

/// Structured triangulation of `[x0,x1] x [y0,y1]` with `nx * ny` cells, each
/// split along its (lower-left, upper-right) diagonal.
pub fn build_rectangle_grid(nx: usize, ny: usize, extents: [(f64, f64); 2]) -> Result<Grid, GridError> {
    if nx < 2 {
        return Err(GridError::TooFewCells(nx));
    }
    if ny < 2 {
        return Err(GridError::TooFewCells(ny));
    }
    let [(x0, x1), (y0, y1)] = extents;
    check_extent(x0, x1)?;
    check_extent(y0, y1)?;
    let hx = (x1 - x0) / nx as f64;
    let hy = (y1 - y0) / ny as f64;
    let id = |i: usize, j: usize| j * (nx + 1) + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny { y1 } else { y0 + hy * j as f64 };
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + hx * i as f64 };
            nodes.push([x, y]);
        }
    }

    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (n00, n10, n01, n11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            elements.push([n00, n10, n11]);
            elements.push([n00, n11, n01]);
        }
    }

    let mut boundary = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let mut normal: [f64; 2] = [0.0, 0.0];
            if i == 0 {
                normal[0] -= 1.0;
            }
            if i == nx {
                normal[0] += 1.0;
            }
            if j == 0 {
                normal[1] -= 1.0;
            }
            if j == ny {
                normal[1] += 1.0;
            }
            if normal != [0.0, 0.0] {
                let len = normal[0].hypot(normal[1]);
                boundary.push((id(i, j), [normal[0] / len, normal[1] / len]));
            }
        }
    }
    Ok(Grid::assemble(
        2,
        vec![(x0, x1), (y0, y1)],
        (nx, ny),
        nodes,
        elements,
        boundary,
    ))
}

impl Grid {
    fn assemble(
        dimension: usize,
        extents: Vec<(f64, f64)>,
        cells: (usize, usize),
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        boundary: Vec<(usize, [f64; 2])>,
    ) -> Grid {
        let arity = dimension + 1;
        let mut element_volume = Vec::with_capacity(elements.len());
        let mut element_grad_coeffs = Vec::with_capacity(elements.len());
        let mut node_mass = vec![0.0; nodes.len()];
        let mut edge_set = BTreeSet::new();

        for el in &elements {
            let (vol, grads) = if dimension == 1 {
                let h = nodes[el[1]][0] - nodes[el[0]][0];
                (h, [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]])
            } else {
                let [a, b, c] = [nodes[el[0]], nodes[el[1]], nodes[el[2]]];
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let grads = [
                    [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
                    [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
                    [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
                ];
                (det.abs() / 2.0, grads)
            };
            for &n in &el[..arity] {
                node_mass[n] += vol / arity as f64;
            }
            for i in 0..arity {
                for j in (i + 1)..arity {
                    let (p, q) = (el[i].min(el[j]), el[i].max(el[j]));
                    edge_set.insert([p, q]);
                }
            }
            element_volume.push(vol);
            element_grad_coeffs.push(grads);
        }

        let edges: Vec<[usize; 2]> = edge_set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); nodes.len()];
        for &[p, q] in &edges {
            neighbors[p].push(q);
            neighbors[q].push(p);
        }

        let mut is_boundary = vec![false; nodes.len()];
        let mut boundary_nodes = Vec::with_capacity(boundary.len());
        let mut boundary_normal = Vec::with_capacity(boundary.len());
        for (n, normal) in boundary {
            is_boundary[n] = true;
            boundary_nodes.push(n);
            boundary_normal.push(normal);
        }
        let interior_nodes = (0..nodes.len()).filter(|&i| !is_boundary[i]).collect();
        let measure = extents.iter().map(|(a, b)| b - a).product();

        Grid {
            dimension,
            extents,
            cells,
            nodes,
            elements,
            element_volume,
            element_grad_coeffs,
            edges,
            neighbors,
            node_mass,
            boundary_nodes,
            boundary_normal,
            interior_nodes,
            is_boundary,
            measure,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Nodes per element: 2 for segments, 3 for triangles.
    pub fn arity(&self) -> usize {
        self.dimension + 1
    }

    pub fn extents(&self) -> &[(f64, f64)] {
        &self.extents
    }

    /// Cell counts per direction (`ny == 1` in 1D).
    pub fn cells(&self) -> (usize, usize) {
        self.cells
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.arity()]
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        self.element_volume[e]
    }

    pub fn element_volumes(&self) -> &[f64] {
        &self.element_volume
    }

    /// Gradients of the local P1 basis functions on element `e`.
    pub fn element_grad_coeffs(&self, e: usize) -> &[[f64; 2]] {
        &self.element_grad_coeffs[e][..self.arity()]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    /// Lumped mass: the share of element volume attributed to each node.
    pub fn node_mass(&self) -> &[f64] {
        &self.node_mass
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Outward unit normals, parallel to [`Grid::boundary_nodes`].
    pub fn boundary_normals(&self) -> &[[f64; 2]] {
        &self.boundary_normal
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Constant gradient of the P1 interpolant of `values` on element `e`.
    pub fn element_gradient(&self, e: usize, values: &[f64]) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        for (&n, c) in self.element_nodes(e).iter().zip(self.element_grad_coeffs(e)) {
            g[0] += c[0] * values[n];
            g[1] += c[1] * values[n];
        }
        g
    }

    pub fn integrate_elementwise(&self, w: &[f64]) -> Result<f64, GridError> {
        if w.len() != self.element_count() {
            return Err(GridError::LengthMismatch {
                what: "elements",
                expected: self.element_count(),
                got: w.len(),
            });
        }
        Ok(w.iter().zip(&self.element_volume).map(|(w, v)| w * v).sum())
    }

    /// Lumped quadrature of nodal values.
    pub fn integrate_nodal_values(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.node_mass).map(|(u, m)| u * m).sum()
    }
}

/// Nodal values of a piecewise-linear function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.node_count() {
            return Err(GridError::LengthMismatch {
                what: "nodes",
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(ScalarField {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        ScalarField {
            grid: Arc::clone(grid),
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self, GridError> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn ensure_same_grid(&self, other: &ScalarField) -> Result<(), GridError> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(GridError::GridMismatch)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, alpha: f64) -> ScalarField {
        ScalarField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// L2 distance under lumped quadrature.
    pub fn l2_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.grid.node_mass())
            .map(|((a, b), m)| m * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// One constant vector per element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementVectorField {
    grid: Arc<Grid>,
    vectors: Vec<[f64; 2]>,
}

impl ElementVectorField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Per-element vectors; the second component is zero in 1D.
    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    pub fn norms(&self) -> Vec<f64> {
        self.vectors.iter().map(|g| g[0].hypot(g[1])).collect()
    }
}

pub fn gradient(u: &ScalarField) -> ElementVectorField {
    let grid = u.grid();
    let vectors = (0..grid.element_count())
        .map(|e| grid.element_gradient(e, u.values()))
        .collect();
    ElementVectorField {
        grid: Arc::clone(grid),
        vectors,
    }
}

pub fn integrate_nodal(u: &ScalarField) -> f64 {
    u.grid().integrate_nodal_values(u.values())
}

pub fn integrate_elementwise(grid: &Grid, w: &[f64]) -> Result<f64, GridError> {
    grid.integrate_elementwise(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(g: Result<Grid, GridError>) -> Arc<Grid> {
        Arc::new(g.unwrap())
    }

    #[test]
    fn interval_two_cells() {
        let g = build_interval_grid(2, 0.0, 1.0).unwrap();
        assert_eq!(g.node_count(), 3);
        let xs: Vec<f64> = g.nodes().iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert_eq!(g.element_volumes(), &[0.5, 0.5]);
    }

    #[test]
    fn interval_normals_and_volume() {
        let g = build_interval_grid(100, -1.0, 1.0).unwrap();
        assert_eq!(g.node_count(), 101);
        assert_eq!(g.boundary_nodes(), &[0, 100]);
        assert_eq!(g.boundary_normals()[0], [-1.0, 0.0]);
        assert_eq!(g.boundary_normals()[1], [1.0, 0.0]);
        assert_eq!(g.nodes()[0][0], -1.0);
        assert_eq!(g.nodes()[100][0], 1.0);
        let g4 = build_interval_grid(4, 0.0, 1.0).unwrap();
        assert!((g4.element_volumes().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_interval() {
        assert_eq!(build_interval_grid(1, 0.0, 1.0), Err(GridError::TooFewCells(1)));
        assert!(matches!(
            build_interval_grid(4, 1.0, 1.0),
            Err(GridError::DegenerateExtent(..))
        ));
        assert!(build_interval_grid(4, 2.0, 1.0).is_err());
        assert!(build_rectangle_grid(1, 3, [(0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(build_rectangle_grid(3, 3, [(0.0, 1.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn unit_square_counts() {
        let g = build_rectangle_grid(2, 2, [(0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.element_count(), 8);
        for &v in g.element_volumes() {
            assert!((v - 0.125).abs() < 1e-15);
        }
        assert!((g.element_volumes().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g.interior_nodes(), &[4]);
    }

    #[test]
    fn interior_count_and_partition() {
        for (nx, ny) in [(2, 2), (3, 5), (7, 4), (10, 10)] {
            let g = build_rectangle_grid(nx, ny, [(-1.0, 2.0), (0.5, 1.5)]).unwrap();
            assert_eq!(g.interior_nodes().len(), (nx - 1) * (ny - 1));
            assert_eq!(g.interior_nodes().len() + g.boundary_nodes().len(), g.node_count());
            let total: f64 = g.element_volumes().iter().sum();
            assert!((total - g.measure()).abs() <= 1e-12 * g.measure());
            assert!(g.element_volumes().iter().all(|&v| v > 0.0));
            for n in g.boundary_normals() {
                assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn corner_normals_are_averaged() {
        let g = build_rectangle_grid(3, 3, [(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let k = g.boundary_nodes().iter().position(|&n| n == 0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let n = g.boundary_normals()[k];
        assert!((n[0] + s).abs() < 1e-15 && (n[1] + s).abs() < 1e-15);
    }

    #[test]
    fn gradient_exact_on_affine() {
        let g = arc(build_interval_grid(7, 0.0, 1.0));
        let u = ScalarField::from_fn(&g, |x| x[0]).unwrap();
        for v in gradient(&u).vectors() {
            assert!((v[0] - 1.0).abs() < 1e-12);
        }
        let c = ScalarField::constant(&g, 3.5);
        assert!(gradient(&c).vectors().iter().all(|v| v[0] == 0.0));

        let g2 = arc(build_rectangle_grid(5, 4, [(0.0, 2.0), (-1.0, 1.0)]));
        let w = ScalarField::from_fn(&g2, |x| 2.0 * x[0] + 3.0 * x[1] - 1.0).unwrap();
        for v in gradient(&w).vectors() {
            assert!((v[0] - 2.0).abs() < 1e-12 && (v[1] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature() {
        for n in [2, 3, 17, 100] {
            let g = arc(build_interval_grid(n, 0.0, 1.0));
            assert!((integrate_nodal(&ScalarField::constant(&g, 1.0)) - 1.0).abs() < 1e-12);
        }
        let g = arc(build_interval_grid(100, 0.0, 1.0));
        let u = ScalarField::from_fn(&g, |x| x[0]).unwrap();
        assert!((integrate_nodal(&u) - 0.5).abs() < 1e-12);

        let sq = build_rectangle_grid(6, 6, [(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let ones = vec![1.0; sq.element_count()];
        assert!((integrate_elementwise(&sq, &ones).unwrap() - 1.0).abs() < 1e-12);
        assert!(integrate_elementwise(&sq, &[1.0]).is_err());
    }

    #[test]
    fn field_validation() {
        let g = arc(build_interval_grid(3, 0.0, 1.0));
        assert!(ScalarField::new(&g, vec![0.0; 3]).is_err());
        assert_eq!(
            ScalarField::new(&g, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(GridError::NonFinite(1))
        );
    }

    /// For Dirichlet-zero u and smooth w, int grad u . grad w + int u w''
    /// shrinks under refinement.
    #[test]
    fn integration_by_parts_trend() {
        let defect = |n: usize| {
            let g = arc(build_interval_grid(n, 0.0, 1.0));
            let pi = std::f64::consts::PI;
            let u = ScalarField::from_fn(&g, |x| (pi * x[0]).sin()).unwrap();
            let mut uv = u.values().to_vec();
            uv[0] = 0.0;
            uv[n] = 0.0;
            let u = ScalarField::new(&g, uv).unwrap();
            let w = ScalarField::from_fn(&g, |x| x[0].exp()).unwrap();
            let gu = gradient(&u);
            let gw = gradient(&w);
            let stiff: f64 = (0..g.element_count())
                .map(|e| g.element_volume(e) * gu.vectors()[e][0] * gw.vectors()[e][0])
                .sum();
            // w'' = w
            let uw: Vec<f64> = u.values().iter().zip(w.values()).map(|(a, b)| a * b).collect();
            let lap = g.integrate_nodal_values(&uw);
            (stiff + lap).abs()
        };
        let d1 = defect(16);
        let d2 = defect(64);
        assert!(d2 < d1, "{d1} {d2}");
    }
}
