//! The q-power interpolation path `gamma_q(t) = ((1-t) u^q + t v^q)^(1/q)`
//! between nonnegative fields and checks of its convexity properties: the
//! pointwise gradient inequality, convexity of the diffusion energy and the
//! total energy along the path, and the concavity facts behind them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::energy::{self, EnergyError};
use crate::grid::{GridError, ScalarField};
use crate::model::{audit_a2prime, default_samples, ProblemSpec, ReactionSpec, Verdict};
use crate::par::{self, Execution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("negative value {value} at node {node}")]
    NegativeValue { node: usize, value: f64 },
    #[error("path exponent q = {q} must exceed 1")]
    InvalidQ { q: f64 },
    #[error("q = {q} must not exceed p = {p}")]
    QExceedsP { q: f64, p: f64 },
    #[error("q = {q} must be strictly below p = {p}")]
    QNotBelowP { q: f64, p: f64 },
    #[error("path parameter t = {0} outside [0, 1]")]
    ParameterRange(f64),
    #[error("need at least 3 path samples, got {0}")]
    TooFewSamples(usize),
    #[error("energy along the path lost convexity where it is exact: min second difference {0:e}")]
    InvariantViolation(f64),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Violations of an inequality above this level count as failures.
pub const VIOLATION_TOLERANCE: f64 = 1e-12;
/// A convexity gap above this level counts as strict.
pub const STRICTNESS_TOLERANCE: f64 = 1e-10;
/// Lower bound for second differences of exactly convex sampled profiles.
pub const CONVEXITY_TOLERANCE: f64 = 1e-10;
/// Sample count of the default t-grid.
pub const DEFAULT_PATH_SAMPLES: usize = 41;

#[inline]
fn gamma_node(u: f64, v: f64, q: f64, t: f64) -> f64 {
    if t == 0.0 || u == v {
        u
    } else if t == 1.0 {
        v
    } else {
        ((1.0 - t) * u.powf(q) + t * v.powf(q)).powf(1.0 / q)
    }
}

fn check_nonneg(u: &ScalarField) -> Result<(), PathError> {
    match u.values().iter().position(|&x| x < 0.0) {
        Some(node) => Err(PathError::NegativeValue {
            node,
            value: u.values()[node],
        }),
        None => Ok(()),
    }
}

fn check_pair(u: &ScalarField, v: &ScalarField, q: f64) -> Result<(), PathError> {
    u.ensure_same_grid(v)?;
    check_nonneg(u)?;
    check_nonneg(v)?;
    if !(q > 1.0) {
        return Err(PathError::InvalidQ { q });
    }
    Ok(())
}

pub(crate) fn gamma_values(u: &[f64], v: &[f64], q: f64, t: f64) -> Vec<f64> {
    u.iter().zip(v).map(|(&a, &b)| gamma_node(a, b, q, t)).collect()
}

/// Nodal values `((1-t) u_i^q + t v_i^q)^(1/q)`; returns `u` at `t = 0` and
/// `v` at `t = 1` exactly.
pub fn gamma_q(u: &ScalarField, v: &ScalarField, q: f64, t: f64) -> Result<ScalarField, PathError> {
    check_pair(u, v, q)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(PathError::ParameterRange(t));
    }
    Ok(ScalarField::new(u.grid(), gamma_values(u.values(), v.values(), q, t))?)
}

/// `(|gamma_j - gamma_i|^p, (1-t)|u_j - u_i|^p + t |v_j - v_i|^p)` for one
/// pair of nodes.
pub fn edge_inequality_sides(ui: f64, uj: f64, vi: f64, vj: f64, p: f64, q: f64, t: f64) -> (f64, f64) {
    let gi = gamma_node(ui, vi, q, t);
    let gj = gamma_node(uj, vj, q, t);
    let lhs = (gj - gi).abs().powf(p);
    let rhs = (1.0 - t) * (uj - ui).abs().powf(p) + t * (vj - vi).abs().powf(p);
    (lhs, rhs)
}

/// Excess of the left side over the right, relative to `max(1, rhs)`.
#[inline]
pub fn relative_excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / rhs.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InequalityMode {
    /// Difference quotients along mesh edges (exact discrete analogue).
    EdgeDifferences,
    /// P1 element gradients (carries interpolation error; diagnostic only).
    ElementGradients,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenConvexityReport {
    pub mode: InequalityMode,
    /// Largest relative excess of the left side over the right side; values
    /// at or below zero mean the inequality holds everywhere.
    pub max_violation: f64,
    pub checked: usize,
    /// Edges or elements where `u != v` at some node and `u` or `v` varies.
    pub z_tilde: Vec<usize>,
    /// Edges or elements where the right side exceeds the left by more than
    /// [`STRICTNESS_TOLERANCE`].
    pub strict: Vec<usize>,
}

/// Checks `|grad gamma_q(t)|^p <= (1-t)|grad u|^p + t|grad v|^p` on every
/// edge or element.
pub fn pointwise_hidden_convexity(
    u: &ScalarField,
    v: &ScalarField,
    p: f64,
    q: f64,
    t: f64,
    mode: InequalityMode,
) -> Result<HiddenConvexityReport, PathError> {
    check_pair(u, v, q)?;
    if q > p {
        return Err(PathError::QExceedsP { q, p });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(PathError::ParameterRange(t));
    }
    let grid = u.grid();
    let (uv, vv) = (u.values(), v.values());
    let mut report = HiddenConvexityReport {
        mode,
        max_violation: f64::NEG_INFINITY,
        checked: 0,
        z_tilde: Vec::new(),
        strict: Vec::new(),
    };
    let mut record = |k: usize, lhs: f64, rhs: f64, differs: bool, varies: bool| {
        report.checked += 1;
        report.max_violation = report.max_violation.max(relative_excess(lhs, rhs));
        if differs && varies {
            report.z_tilde.push(k);
        }
        if rhs - lhs > STRICTNESS_TOLERANCE {
            report.strict.push(k);
        }
    };
    match mode {
        InequalityMode::EdgeDifferences => {
            for (k, &[i, j]) in grid.edges().iter().enumerate() {
                let (lhs, rhs) = edge_inequality_sides(uv[i], uv[j], vv[i], vv[j], p, q, t);
                let differs = uv[i] != vv[i] || uv[j] != vv[j];
                let varies = (uv[j] - uv[i]).abs() + (vv[j] - vv[i]).abs() > 0.0;
                record(k, lhs, rhs, differs, varies);
            }
        }
        InequalityMode::ElementGradients => {
            let gamma = gamma_values(uv, vv, q, t);
            let norm_p = |g: [f64; 2]| (g[0] * g[0] + g[1] * g[1]).powf(p / 2.0);
            for e in 0..grid.element_count() {
                let gu = norm_p(grid.element_gradient(e, uv));
                let gv = norm_p(grid.element_gradient(e, vv));
                let lhs = norm_p(grid.element_gradient(e, &gamma));
                let rhs = (1.0 - t) * gu + t * gv;
                let differs = grid.element_nodes(e).iter().any(|&n| uv[n] != vv[n]);
                record(e, lhs, rhs, differs, gu + gv > 0.0);
            }
        }
    }
    if report.checked == 0 {
        report.max_violation = 0.0;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathExactness {
    /// 1D grid, `q <= p`, reaction passing the monotone-ratio audit at `q`:
    /// the sampled total energy must be convex up to roundoff.
    Exact,
    NotGuaranteed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathDiagnostics {
    pub q: f64,
    pub t_samples: Vec<f64>,
    /// `D(t) = int (1/p) H(|grad gamma_q(t)|^p)`
    pub diffusion_energy: Vec<f64>,
    /// `I(gamma_q(t))`
    pub total_energy: Vec<f64>,
    pub min_second_difference_d: f64,
    pub min_second_difference_i: f64,
    /// Worst edge-difference excess over all samples (see
    /// [`pointwise_hidden_convexity`]); `None` when `q > p`.
    pub pointwise_max_violation: Option<f64>,
    /// First sample triple where `D` is strictly convex.
    pub strict_convexity_witness: Option<(f64, f64, f64)>,
    /// `D` vanishes at every sample (both endpoints constant).
    pub degenerate_constants: bool,
    pub exactness: PathExactness,
}

impl PathDiagnostics {
    pub fn second_differences(values: &[f64]) -> Vec<f64> {
        values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
    }

    /// D is convex on the samples and strictly convex somewhere.
    pub fn strictly_convex(&self) -> bool {
        self.min_second_difference_d >= -CONVEXITY_TOLERANCE && self.strict_convexity_witness.is_some()
    }
}

pub fn uniform_samples(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if k == n - 1 { 1.0 } else { k as f64 / (n - 1) as f64 })
        .collect()
}

/// Samples `D(t)` and `I(gamma_q(t))` on a uniform t-grid.
///
/// In the [`PathExactness::Exact`] configuration a second difference of
/// `I` below `-1e-10` is reported as [`PathError::InvariantViolation`].
pub fn path_energy_profile(
    ps: &ProblemSpec,
    u: &ScalarField,
    v: &ScalarField,
    q: f64,
    n_samples: usize,
) -> Result<PathDiagnostics, PathError> {
    path_energy_profile_with(ps, u, v, q, n_samples, Execution::default())
}

pub fn path_energy_profile_with(
    ps: &ProblemSpec,
    u: &ScalarField,
    v: &ScalarField,
    q: f64,
    n_samples: usize,
    exec: Execution,
) -> Result<PathDiagnostics, PathError> {
    check_pair(u, v, q)?;
    if n_samples < 3 {
        return Err(PathError::TooFewSamples(n_samples));
    }
    energy::energy(ps, u)?;
    energy::energy(ps, v)?;
    let p = ps.diffusion.p;
    let ts = uniform_samples(n_samples);
    let (uv, vv) = (u.values(), v.values());

    let samples = par::map_indexed(exec, ts.len(), |k| {
        let gamma = gamma_values(uv, vv, q, ts[k]);
        let e = energy::energy_values(ps, &gamma);
        let violation = (q <= p).then(|| {
            ps.grid
                .edges()
                .iter()
                .map(|&[i, j]| {
                    let (l, r) = edge_inequality_sides(uv[i], uv[j], vv[i], vv[j], p, q, ts[k]);
                    relative_excess(l, r)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        });
        (e.diffusion_part, e.total, violation)
    });
    let diffusion_energy: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let total_energy: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let pointwise_max_violation = samples
        .iter()
        .map(|s| s.2)
        .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)));

    let d2d = PathDiagnostics::second_differences(&diffusion_energy);
    let d2i = PathDiagnostics::second_differences(&total_energy);
    let min_d = d2d.iter().copied().fold(f64::INFINITY, f64::min);
    let min_i = d2i.iter().copied().fold(f64::INFINITY, f64::min);
    let strict_convexity_witness = d2d
        .iter()
        .position(|&d| d > STRICTNESS_TOLERANCE)
        .map(|k| (ts[k], ts[k + 1], ts[k + 2]));
    let degenerate_constants = diffusion_energy.iter().all(|d| d.abs() < 1e-14);

    let exactness = if ps.grid.dimension() == 1 && q <= p && audit_a2prime(&ps.reaction, q, &default_samples()).passed()
    {
        PathExactness::Exact
    } else {
        PathExactness::NotGuaranteed
    };
    if exactness == PathExactness::Exact && min_i < -CONVEXITY_TOLERANCE {
        return Err(PathError::InvariantViolation(min_i));
    }

    Ok(PathDiagnostics {
        q,
        t_samples: ts,
        diffusion_energy,
        total_energy,
        min_second_difference_d: min_d,
        min_second_difference_i: min_i,
        pointwise_max_violation,
        strict_convexity_witness,
        degenerate_constants,
        exactness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MidpointVerdict {
    Strict,
    Equal,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidpointTest {
    pub verdict: MidpointVerdict,
    /// `(I(u) + I(v))/2 - I(gamma_q(1/2))`
    pub gap: f64,
}

pub fn midpoint_energy_test(
    ps: &ProblemSpec,
    u: &ScalarField,
    v: &ScalarField,
    q: f64,
) -> Result<MidpointTest, PathError> {
    check_pair(u, v, q)?;
    let iu = energy::energy(ps, u)?.total;
    let iv = energy::energy(ps, v)?.total;
    let mid = gamma_values(u.values(), v.values(), q, 0.5);
    let im = energy::energy_values(ps, &mid).total;
    let gap = 0.5 * (iu + iv) - im;
    let verdict = if gap > STRICTNESS_TOLERANCE {
        MidpointVerdict::Strict
    } else if gap >= -STRICTNESS_TOLERANCE {
        MidpointVerdict::Equal
    } else {
        MidpointVerdict::Violated
    };
    Ok(MidpointTest { verdict, gap })
}

/// `F(z1, z2) = q z1^(1-1/q) z2^(1/p)`.
pub fn f_product(p: f64, q: f64, z: (f64, f64)) -> f64 {
    f1(q, z.0) * f2(p, z.1)
}

#[inline]
fn f1(q: f64, t: f64) -> f64 {
    q * t.powf(1.0 - 1.0 / q)
}

#[inline]
fn f2(p: f64, t: f64) -> f64 {
    t.powf(1.0 / p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub pairs_checked: usize,
    /// Pairs with `(F(z) + F(w))/2 - F((z+w)/2) > 1e-12`.
    pub violations: usize,
    pub max_violation: f64,
    /// Distinct pairs with both points in the open quadrant.
    pub interior_distinct_pairs: usize,
    /// Those among them with a positive concavity gap above `1e-12`.
    pub strict_pairs: usize,
}

impl ConcavityReport {
    pub fn strict_fraction(&self) -> f64 {
        if self.interior_distinct_pairs == 0 {
            1.0
        } else {
            self.strict_pairs as f64 / self.interior_distinct_pairs as f64
        }
    }
}

/// Midpoint concavity of `F` over all unordered pairs drawn from `z_grid`
/// (including each point with itself).
pub fn concavity_check_f(p: f64, q: f64, z_grid: &[(f64, f64)]) -> Result<ConcavityReport, PathError> {
    concavity_check_f_with(p, q, z_grid, Execution::default())
}

pub fn concavity_check_f_with(
    p: f64,
    q: f64,
    z_grid: &[(f64, f64)],
    exec: Execution,
) -> Result<ConcavityReport, PathError> {
    if !(q > 1.0) {
        return Err(PathError::InvalidQ { q });
    }
    if q >= p {
        return Err(PathError::QNotBelowP { q, p });
    }
    if let Some(k) = z_grid.iter().position(|z| z.0 < 0.0 || z.1 < 0.0) {
        return Err(PathError::NegativeValue {
            node: k,
            value: z_grid[k].0.min(z_grid[k].1),
        });
    }

    // F = F1(z1) F2(z2): tabulate each factor on midpoints of the distinct
    // coordinate values so the pair loop needs no transcendental calls.
    let (xs, ix) = distinct_coordinates(z_grid.iter().map(|z| z.0));
    let (ys, iy) = distinct_coordinates(z_grid.iter().map(|z| z.1));
    let mid_table = |vals: &[f64], f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let n = vals.len();
        let mut t = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let m = f(0.5 * (vals[a] + vals[b]));
                t[a * n + b] = m;
                t[b * n + a] = m;
            }
        }
        t
    };
    let m1 = mid_table(&xs, &|t| f1(q, t));
    let m2 = mid_table(&ys, &|t| f2(p, t));
    let (nx, ny) = (xs.len(), ys.len());
    let values: Vec<f64> = z_grid.iter().map(|&z| f_product(p, q, z)).collect();

    let n = z_grid.len();
    let partial = par::map_chunks(exec, n, 64, |range| {
        let mut r = ConcavityReport {
            pairs_checked: 0,
            violations: 0,
            max_violation: f64::NEG_INFINITY,
            interior_distinct_pairs: 0,
            strict_pairs: 0,
        };
        for a in range {
            let za = z_grid[a];
            let interior_a = za.0 > 0.0 && za.1 > 0.0;
            for b in a..n {
                let mid = m1[ix[a] * nx + ix[b]] * m2[iy[a] * ny + iy[b]];
                let gap = mid - 0.5 * (values[a] + values[b]);
                r.pairs_checked += 1;
                r.max_violation = r.max_violation.max(-gap);
                if -gap > VIOLATION_TOLERANCE {
                    r.violations += 1;
                }
                let zb = z_grid[b];
                if interior_a && zb.0 > 0.0 && zb.1 > 0.0 && za != zb {
                    r.interior_distinct_pairs += 1;
                    if gap > VIOLATION_TOLERANCE {
                        r.strict_pairs += 1;
                    }
                }
            }
        }
        r
    });
    Ok(partial.into_iter().fold(
        ConcavityReport {
            pairs_checked: 0,
            violations: 0,
            max_violation: f64::NEG_INFINITY,
            interior_distinct_pairs: 0,
            strict_pairs: 0,
        },
        |acc, r| ConcavityReport {
            pairs_checked: acc.pairs_checked + r.pairs_checked,
            violations: acc.violations + r.violations,
            max_violation: acc.max_violation.max(r.max_violation),
            interior_distinct_pairs: acc.interior_distinct_pairs + r.interior_distinct_pairs,
            strict_pairs: acc.strict_pairs + r.strict_pairs,
        },
    ))
}

fn distinct_coordinates(it: impl Iterator<Item = f64> + Clone) -> (Vec<f64>, Vec<usize>) {
    let mut vals: Vec<f64> = it.clone().collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let idx = it
        .map(|v| vals.binary_search_by(|x| x.total_cmp(&v)).expect("value present"))
        .collect();
    (vals, idx)
}

/// The product grid `{step, 2 step, ..., n step}^2`.
pub fn product_grid(n: usize, step: f64) -> Vec<(f64, f64)> {
    let axis: Vec<f64> = (1..=n).map(|k| k as f64 * step).collect();
    axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackWitness {
    pub node: usize,
    pub s_triple: (f64, f64, f64),
    pub slope_increase: f64,
}

/// Concavity of `s -> G(x, s^(1/q))` on `s_grid` at every node: successive
/// secant slopes must not increase by more than `1e-10` (relative to the
/// slope magnitude).
pub fn reaction_pullback_concavity(rs: &ReactionSpec, q: f64, s_grid: &[f64]) -> Verdict<PullbackWitness> {
    for node in 0..rs.node_count() {
        let f: Vec<f64> = s_grid.iter().map(|&s| rs.big_g(node, s.powf(1.0 / q))).collect();
        for k in 0..s_grid.len().saturating_sub(2) {
            let (s0, s1, s2) = (s_grid[k], s_grid[k + 1], s_grid[k + 2]);
            let left = (f[k + 1] - f[k]) / (s1 - s0);
            let right = (f[k + 2] - f[k + 1]) / (s2 - s1);
            let increase = right - left;
            if increase > 1e-10 * left.abs().max(right.abs()).max(1.0) {
                return Verdict::Fail(PullbackWitness {
                    node,
                    s_triple: (s0, s1, s2),
                    slope_increase: increase,
                });
            }
        }
    }
    Verdict::Pass
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSuiteReport {
    pub instances: usize,
    pub max_violation: f64,
    /// Instances whose relative excess exceeds [`VIOLATION_TOLERANCE`].
    pub violations: usize,
    /// Instances where the inequality held with margin above
    /// [`STRICTNESS_TOLERANCE`].
    pub strict: usize,
}

/// Draws `instances` random quadruples `(u_i, u_j, v_i, v_j)` in
/// `[0, 10]^4` with `1 < q <= p <= 4` and `t` in `[0, 1]`, and checks the
/// edge-difference inequality on each. Instance `k` uses its own RNG stream
/// seeded from `seed + k / chunk`, so results do not depend on scheduling.
pub fn scalar_hidden_convexity_suite(instances: usize, seed: u64, exec: Execution) -> ScalarSuiteReport {
    const CHUNK: usize = 4096;
    let parts = par::map_chunks(exec, instances, CHUNK, |range| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((range.start / CHUNK) as u64));
        let mut out = ScalarSuiteReport {
            instances: 0,
            max_violation: f64::NEG_INFINITY,
            violations: 0,
            strict: 0,
        };
        for _ in range {
            let p: f64 = rng.gen_range(1.0..=4.0);
            let p = p.max(1.0 + 1e-9);
            // every 16th instance exercises the boundary case q = p
            let q = if rng.gen_ratio(1, 16) {
                p
            } else {
                rng.gen_range(1.0..=p).max(1.0 + 1e-12)
            };
            let t: f64 = rng.gen_range(0.0..=1.0);
            let [ui, uj, vi, vj]: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..=10.0));
            let (lhs, rhs) = edge_inequality_sides(ui, uj, vi, vj, p, q, t);
            let excess = relative_excess(lhs, rhs);
            out.instances += 1;
            out.max_violation = out.max_violation.max(excess);
            if excess > VIOLATION_TOLERANCE {
                out.violations += 1;
            }
            if rhs - lhs > STRICTNESS_TOLERANCE {
                out.strict += 1;
            }
        }
        out
    });
    parts.into_iter().fold(
        ScalarSuiteReport {
            instances: 0,
            max_violation: f64::NEG_INFINITY,
            violations: 0,
            strict: 0,
        },
        |a, b| ScalarSuiteReport {
            instances: a.instances + b.instances,
            max_violation: a.max_violation.max(b.max_violation),
            violations: a.violations + b.violations,
            strict: a.strict + b.strict,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_interval_grid, build_rectangle_grid, Grid};
    use crate::model::{Boundary, DiffusionSpec};
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::Arc;

    fn line(n: usize) -> Arc<Grid> {
        Arc::new(build_interval_grid(n, 0.0, 1.0).unwrap())
    }

    fn field(g: &Arc<Grid>, v: Vec<f64>) -> ScalarField {
        ScalarField::new(g, v).unwrap()
    }

    #[test]
    fn endpoints_and_equal_fields() {
        let g = line(4);
        let u = field(&g, vec![0.0, 0.3, 1.7, 2.0, 0.0]);
        let v = field(&g, vec![0.0, 1.1, 0.2, 5.0, 0.0]);
        assert_eq!(gamma_q(&u, &v, 1.7, 0.0).unwrap(), u);
        assert_eq!(gamma_q(&u, &v, 1.7, 1.0).unwrap(), v);
        for t in [0.1, 0.5, 0.9] {
            assert_eq!(gamma_q(&u, &u, 2.5, t).unwrap(), u);
        }
    }

    #[test]
    fn symmetric_pair() {
        let g = line(2);
        let u = field(&g, vec![0.0, 1.0, 0.0]);
        let v = field(&g, vec![1.0, 0.0, 0.0]);
        let m = gamma_q(&u, &v, 1.5, 0.5).unwrap();
        let expect = 0.5f64.powf(2.0 / 3.0);
        assert!((m.values()[0] - expect).abs() < 1e-15);
        assert!((m.values()[1] - expect).abs() < 1e-15);
        assert!((expect - 0.62996).abs() < 1e-5);
    }

    #[test]
    fn gamma_rejects_bad_input() {
        let g = line(2);
        let u = field(&g, vec![0.0, -1.0, 0.0]);
        let v = field(&g, vec![0.0, 1.0, 0.0]);
        assert!(matches!(
            gamma_q(&u, &v, 1.5, 0.5),
            Err(PathError::NegativeValue { node: 1, .. })
        ));
        assert!(matches!(gamma_q(&v, &v, 1.0, 0.5), Err(PathError::InvalidQ { .. })));
        assert!(matches!(gamma_q(&v, &v, 1.5, 1.5), Err(PathError::ParameterRange(_))));
        let other = field(&line(3), vec![0.0; 4]);
        assert!(gamma_q(&v, &other, 1.5, 0.5).is_err());
    }

    #[test]
    fn pointwise_examples() {
        let g = line(2);
        let u = field(&g, vec![0.0, 1.0, 0.0]);
        let v = field(&g, vec![1.0, 0.0, 0.0]);
        let r = pointwise_hidden_convexity(&u, &u, 2.0, 1.5, 0.3, InequalityMode::EdgeDifferences).unwrap();
        assert!(r.max_violation <= 0.0);
        assert!(r.strict.is_empty() && r.z_tilde.is_empty());

        let r = pointwise_hidden_convexity(&u, &v, 2.0, 1.5, 0.5, InequalityMode::EdgeDifferences).unwrap();
        // edge (0,1): gamma equal at both ends, lhs 0 vs rhs 1
        let (lhs, rhs) = edge_inequality_sides(0.0, 1.0, 1.0, 0.0, 2.0, 1.5, 0.5);
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 1.0);
        assert!(r.strict.contains(&0));
        assert!(r.z_tilde.contains(&0));

        assert!(matches!(
            pointwise_hidden_convexity(&u, &v, 1.5, 2.0, 0.5, InequalityMode::EdgeDifferences),
            Err(PathError::QExceedsP { .. })
        ));
    }

    #[test]
    fn element_mode_in_1d_matches_edges() {
        let g = line(8);
        let u = ScalarField::from_fn(&g, |x| 1.0 + x[0]).unwrap();
        let v = ScalarField::from_fn(&g, |x| (3.0 * x[0]).cos() + 1.5).unwrap();
        let e = pointwise_hidden_convexity(&u, &v, 3.0, 2.0, 0.4, InequalityMode::EdgeDifferences).unwrap();
        let el = pointwise_hidden_convexity(&u, &v, 3.0, 2.0, 0.4, InequalityMode::ElementGradients).unwrap();
        // in 1D the element gradient is the edge difference over h
        assert!(e.max_violation <= VIOLATION_TOLERANCE);
        assert!(el.max_violation <= VIOLATION_TOLERANCE);
        assert_eq!(e.z_tilde, el.z_tilde);
    }

    #[test]
    fn element_mode_2d_is_a_diagnostic() {
        let g = Arc::new(build_rectangle_grid(6, 6, [(0.0, 1.0), (0.0, 1.0)]).unwrap());
        let u = ScalarField::from_fn(&g, |x| 1.0 + x[0] * x[1]).unwrap();
        let v = ScalarField::from_fn(&g, |x| 2.0 - x[0] + x[1] * x[1]).unwrap();
        let r = pointwise_hidden_convexity(&u, &v, 2.0, 1.5, 0.5, InequalityMode::ElementGradients).unwrap();
        assert_eq!(r.checked, g.element_count());
        assert!(r.max_violation.is_finite());
    }

    #[test]
    fn constants_under_natural_bc_are_degenerate() {
        let g = line(16);
        let ps = ProblemSpec::new(
            g.clone(),
            DiffusionSpec::saturating(2.0).unwrap(),
            ReactionSpec::double_power(1.5, 3.0).unwrap(),
            Boundary::Natural,
        )
        .unwrap();
        let u = ScalarField::constant(&g, 1.0);
        let v = ScalarField::constant(&g, 2.0);
        let d = path_energy_profile(&ps, &u, &v, 1.5, DEFAULT_PATH_SAMPLES).unwrap();
        assert!(d.degenerate_constants);
        assert!(d.diffusion_energy.iter().all(|x| x.abs() < 1e-14));
        assert!(!d.strictly_convex());
        assert_eq!(d.t_samples.len(), 41);
        assert_eq!(d.t_samples[0], 0.0);
        assert_eq!(*d.t_samples.last().unwrap(), 1.0);
    }

    #[test]
    fn random_dirichlet_pair_is_strictly_convex() {
        let g = line(64);
        let ps = ProblemSpec::new(
            g.clone(),
            DiffusionSpec::constant(2.0).unwrap(),
            ReactionSpec::zero(),
            Boundary::DirichletZero,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut draw = || {
            let mut v: Vec<f64> = (0..=64).map(|_| rng.gen_range(0.0..1.0)).collect();
            v[0] = 0.0;
            v[64] = 0.0;
            field(&g, v)
        };
        let (u, v) = (draw(), draw());
        let d = path_energy_profile(&ps, &u, &v, 1.5, 41).unwrap();
        assert_eq!(d.exactness, PathExactness::Exact);
        assert!(d.min_second_difference_d >= -CONVEXITY_TOLERANCE);
        assert!(d.strictly_convex());
        assert!(d.pointwise_max_violation.unwrap() <= VIOLATION_TOLERANCE);

        let flat = path_energy_profile(&ps, &u, &u, 1.5, 5).unwrap();
        assert!(flat.total_energy.iter().all(|&e| e == flat.total_energy[0]));
        assert!(matches!(
            path_energy_profile(&ps, &u, &v, 1.5, 2),
            Err(PathError::TooFewSamples(2))
        ));
    }

    #[test]
    fn midpoint_examples() {
        let g = line(32);
        let a = ScalarField::from_fn(&g, |x| (6.0 * x[0]).sin() + 0.2).unwrap();
        let ps = ProblemSpec::new(
            g.clone(),
            DiffusionSpec::constant(2.0).unwrap(),
            ReactionSpec::pure_subhomogeneous(1.5, a).unwrap(),
            Boundary::DirichletZero,
        )
        .unwrap();
        let bump = |c: f64| {
            let mut f = ScalarField::from_fn(&g, |x| c * (x[0] * (1.0 - x[0])))
                .unwrap()
                .into_values();
            f[0] = 0.0;
            f[32] = 0.0;
            field(&g, f)
        };
        let (u, v) = (bump(1.0), bump(3.0));
        assert_eq!(midpoint_energy_test(&ps, &u, &u, 1.5).unwrap().gap, 0.0);
        assert_eq!(
            midpoint_energy_test(&ps, &u, &u, 1.5).unwrap().verdict,
            MidpointVerdict::Equal
        );
        let m = midpoint_energy_test(&ps, &u, &v, 1.5).unwrap();
        assert!(m.gap >= -1e-10);
    }

    #[test]
    fn f_concavity_examples() {
        let p = 2.0;
        let q = 1.5;
        let r = concavity_check_f(p, q, &[(0.5, 0.7)]).unwrap();
        assert_eq!(r.pairs_checked, 1);
        assert_eq!(r.violations, 0);
        assert!(r.max_violation.abs() < 1e-15);

        let axes = [(0.0, 1.0), (1.0, 0.0)];
        let r = concavity_check_f(p, q, &axes).unwrap();
        assert_eq!(r.violations, 0);
        let mid = f_product(p, q, (0.5, 0.5));
        assert!((mid - 1.5 * 0.5f64.powf(1.0 / 3.0) * 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(f_product(p, q, (0.0, 1.0)), 0.0);
        assert_eq!(f_product(p, q, (1.0, 0.0)), 0.0);
        // no interior pairs among axis points
        assert_eq!(r.interior_distinct_pairs, 0);

        assert!(matches!(
            concavity_check_f(2.0, 2.0, &axes),
            Err(PathError::QNotBelowP { .. })
        ));
    }

    #[test]
    fn f_concavity_small_grid_matches_direct_evaluation() {
        let grid = product_grid(12, 0.7);
        let r = concavity_check_f_with(3.0, 2.0, &grid, Execution::Sequential).unwrap();
        let mut violations = 0;
        let mut strict = 0;
        for a in 0..grid.len() {
            for b in a..grid.len() {
                let (za, zb) = (grid[a], grid[b]);
                let m = f_product(3.0, 2.0, ((za.0 + zb.0) / 2.0, (za.1 + zb.1) / 2.0));
                let gap = m - 0.5 * (f_product(3.0, 2.0, za) + f_product(3.0, 2.0, zb));
                if -gap > 1e-12 {
                    violations += 1;
                }
                if za != zb && gap > 1e-12 {
                    strict += 1;
                }
            }
        }
        assert_eq!(r.violations, violations);
        assert_eq!(r.strict_pairs, strict);
        assert_eq!(r.pairs_checked, 144 * 145 / 2);
    }

    #[test]
    fn pullback_examples() {
        let s: Vec<f64> = (1..200).map(|k| k as f64 * 0.1).collect();
        let g = line(8);
        let a = ScalarField::from_fn(&g, |x| x[0] - 0.5).unwrap();
        let pure = ReactionSpec::pure_subhomogeneous(1.5, a).unwrap();
        assert!(reaction_pullback_concavity(&pure, 1.5, &s).passed());
        let dp = ReactionSpec::double_power(1.5, 3.0).unwrap();
        assert!(reaction_pullback_concavity(&dp, 1.5, &s).passed());
        let linear = ReactionSpec::logistic(2.0, 3.0, 1.0, 0.0).unwrap();
        assert!(!reaction_pullback_concavity(&linear, 1.5, &s).passed());
    }

    /// Independent oracle for the sign of `d^2/ds^2 G(s^(1/q))` for the
    /// double-power family: with `x = s^(1/q)`,
    /// `G(s^(1/q)) = s/q - s^(r/q)/r` whose second derivative is
    /// `-(r/q)(r/q - 1) s^(r/q - 2) / r`, negative for `r > q`.
    #[test]
    fn double_power_pullback_sign_oracle() {
        let (q, r) = (1.5f64, 3.0f64);
        for k in 1..100 {
            let s = k as f64 * 0.3;
            let second = -(r / q) * (r / q - 1.0) * s.powf(r / q - 2.0) / r;
            assert!(second < 0.0);
        }
    }

    #[test]
    fn scalar_suite_modes_agree() {
        let a = scalar_hidden_convexity_suite(10_000, 11, Execution::Sequential);
        let b = scalar_hidden_convexity_suite(10_000, 11, Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.instances, 10_000);
        assert_eq!(a.violations, 0);
    }

    proptest! {
        #[test]
        fn reparametrization_identity(
            vals in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 5),
            q in 1.01f64..4.0,
            t in 0.0f64..=1.0,
            s in 0.0f64..=1.0,
            alpha in 0.0f64..=1.0,
        ) {
            let g = line(4);
            let u = field(&g, vals.iter().map(|x| x.0).collect());
            let v = field(&g, vals.iter().map(|x| x.1).collect());
            let direct = gamma_q(&u, &v, q, (1.0 - alpha) * t + alpha * s).unwrap();
            let nested = gamma_q(&gamma_q(&u, &v, q, t).unwrap(), &gamma_q(&u, &v, q, s).unwrap(), q, alpha).unwrap();
            for (a, b) in direct.values().iter().zip(nested.values()) {
                prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0), "{} {}", a, b);
            }
        }

        #[test]
        fn edge_inequality_holds(
            ui in 0.0f64..10.0, uj in 0.0f64..10.0, vi in 0.0f64..10.0, vj in 0.0f64..10.0,
            p in 1.01f64..4.0, qf in 0.0f64..=1.0, t in 0.0f64..=1.0,
        ) {
            let q = 1.0 + 1e-9 + qf * (p - 1.0 - 1e-9);
            let (l, r) = edge_inequality_sides(ui, uj, vi, vj, p, q, t);
            prop_assert!(relative_excess(l, r) <= VIOLATION_TOLERANCE);
        }
    }
}
