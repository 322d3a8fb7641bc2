//! Steepest descent with Armijo backtracking.

use super::metric::Preconditioner;
use super::{SolutionKind, SolveError, SolveOptions, SolveReport, SolveStatus, UNBOUNDED_DOUBLINGS, UNBOUNDED_ENERGY};
use crate::classify::{classify_cone, DEFAULT_MIN_REGION_SIZE, DEFAULT_TOL_ZERO};
use crate::energy::{check_admissible, energy_delta_values, energy_values, grad_values, residual_from_grad};
use crate::grid::{GridError, ScalarField};
use crate::model::{NegativeExtension, ProblemSpec, ReactionFamily};

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Writes `u + alpha dir` into `out`, clipped at zero when `project` is set,
/// and returns the first-order predicted change `grad . (out - u)` together
/// with whether any entry was clipped.
fn trial_point(u: &[f64], dir: &[f64], grad: &[f64], alpha: f64, project: bool, out: &mut [f64]) -> (f64, bool) {
    let mut predicted = 0.0;
    let mut clipped = false;
    for i in 0..u.len() {
        let mut t = u[i] + alpha * dir[i];
        if project && t < 0.0 {
            t = 0.0;
            clipped = true;
        }
        out[i] = t;
        predicted += grad[i] * (t - u[i]);
    }
    (predicted, clipped)
}

/// Values below this are lifted before evaluating `g'`, which may blow up at 0.
const CURVATURE_FLOOR: f64 = 1e-12;

/// `m_i max(0, -g'(u_i))`: the part of the reaction term's second derivative
/// that makes the energy locally stiffer.
fn curvature_diagonal(ps: &ProblemSpec, u: &[f64], out: &mut [f64]) {
    let mass = ps.grid.node_mass();
    for (i, o) in out.iter_mut().enumerate() {
        let t = u[i];
        let dg = if t < 0.0 && ps.reaction.negative_extension != Some(NegativeExtension::Odd) {
            0.0
        } else {
            ps.reaction.dg_positive(i, t.abs().max(CURVATURE_FLOOR))
        };
        *o = mass[i] * (-dg).max(0.0);
    }
}

fn descend(
    ps: &ProblemSpec,
    init: &ScalarField,
    opts: &SolveOptions,
    kind: SolutionKind,
) -> Result<SolveReport, SolveError> {
    opts.validate()?;
    if ps.reaction.negative_extension.is_none() {
        return Err(SolveError::MissingNegativeExtension);
    }
    if !(std::sync::Arc::ptr_eq(init.grid(), &ps.grid) || **init.grid() == *ps.grid) {
        return Err(GridError::GridMismatch.into());
    }
    let mut u = init.values().to_vec();
    check_admissible(ps, &u)?;

    let n = u.len();
    // With g = 0 for t < 0, replacing u by its positive part never raises the
    // energy, so descent may stay in the nonnegative cone.
    let project = ps.reaction.negative_extension == Some(NegativeExtension::Zero);
    if project {
        u.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let mut pc = Preconditioner::new(&ps.grid, ps.boundary, opts.metric);
    let curvature = opts.metric.uses_curvature() && !matches!(ps.reaction.family, ReactionFamily::Zero);
    let mut diag = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    grad_values(ps, &u, &mut grad);
    let mut residual = residual_from_grad(ps, &grad);
    let mut energy = energy_values(ps, &u).total;
    let mut history = Vec::new();
    let mut step = opts.initial_step;
    let mut norm_mark = sup(&u).max(1.0);
    let mut doublings = 0;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;

    loop {
        if residual <= opts.residual_tolerance {
            status = SolveStatus::Converged;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        if curvature {
            curvature_diagonal(ps, &u, &mut diag);
            pc.set_diagonal(&diag);
        }
        pc.direction(&grad, &mut dir);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if !(slope < 0.0) {
            status = SolveStatus::LineSearchStalled;
            break;
        }
        let mut alpha = step;
        let accepted = loop {
            let (predicted, clipped) = trial_point(&u, &dir, &grad, alpha, project, &mut trial);
            let delta = energy_delta_values(ps, &u, &trial);
            if delta < 0.0 && delta <= opts.sufficient_decrease * predicted {
                break Some((delta, clipped));
            }
            alpha *= opts.shrink;
            if alpha < 1e-300 || alpha * sup(&dir) <= f64::EPSILON * sup(&u) * 1e-3 {
                break None;
            }
        };
        let Some((mut delta, clipped)) = accepted else {
            status = SolveStatus::LineSearchStalled;
            break;
        };
        // An accepted step may still overshoot the minimum along `dir`; try
        // the minimizer of the quadratic through phi(0), phi'(0), phi(alpha).
        let curvature = 2.0 * (delta - slope * alpha) / (alpha * alpha);
        if !clipped && curvature > 0.0 {
            let alpha_q = -slope / curvature;
            if alpha_q < 0.9 * alpha && alpha_q > 1e-3 * alpha {
                let (predicted, _) = trial_point(&u, &dir, &grad, alpha_q, project, &mut scratch);
                let delta_q = energy_delta_values(ps, &u, &scratch);
                if delta_q < delta && delta_q <= opts.sufficient_decrease * predicted {
                    std::mem::swap(&mut trial, &mut scratch);
                    delta = delta_q;
                    alpha = alpha_q;
                }
            }
        }
        std::mem::swap(&mut u, &mut trial);
        energy += delta;
        iterations += 1;
        step = (2.0 * alpha).min(1e12);
        if opts.record_history {
            history.push(energy);
        }

        if energy < UNBOUNDED_ENERGY || !energy.is_finite() {
            return Err(unbounded(ps, u, iterations, energy));
        }
        let s = sup(&u);
        while s >= 2.0 * norm_mark {
            norm_mark *= 2.0;
            doublings += 1;
        }
        if s < norm_mark {
            // growth stopped being monotone, restart the count
            norm_mark = s.max(1.0);
            doublings = 0;
        }
        if doublings >= UNBOUNDED_DOUBLINGS {
            return Err(unbounded(ps, u, iterations, energy));
        }

        grad_values(ps, &u, &mut grad);
        residual = residual_from_grad(ps, &grad);
    }

    let solution = ScalarField::new(&ps.grid, u)?;
    let classification = Some(classify_cone(ps, &solution, DEFAULT_TOL_ZERO, DEFAULT_MIN_REGION_SIZE));
    Ok(SolveReport {
        energy: energy_values(ps, solution.values()),
        solution,
        residual,
        iterations,
        converged: status == SolveStatus::Converged,
        status,
        kind,
        classification,
        energy_history: history,
    })
}

fn unbounded(ps: &ProblemSpec, u: Vec<f64>, iterations: usize, energy: f64) -> SolveError {
    match ScalarField::new(&ps.grid, u) {
        Ok(last) => SolveError::NotBoundedBelow {
            iterations,
            energy,
            last,
        },
        Err(e) => e.into(),
    }
}

/// Descent from `init` toward a minimizer. Divergence of the energy is
/// reported as [`SolveError::NotBoundedBelow`]; a spent budget is reported in
/// the returned status with the last iterate.
pub fn minimize(ps: &ProblemSpec, init: &ScalarField, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    descend(ps, init, opts, SolutionKind::Minimizer)
}

/// Same iteration as [`minimize`], but the result is labeled as a critical
/// point: any iterate with a small residual is accepted, minimal or not.
pub fn critical_point_from(
    ps: &ProblemSpec,
    init: &ScalarField,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    descend(ps, init, opts, SolutionKind::CriticalPoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ConeKind;
    use crate::energy::residual_norm;
    use crate::grid::{build_interval_grid, build_rectangle_grid, Grid};
    use crate::model::{Boundary, DiffusionSpec, ReactionSpec};
    use crate::solve::Metric;
    use std::sync::Arc;

    fn line(n: usize) -> Arc<Grid> {
        Arc::new(build_interval_grid(n, 0.0, 1.0).unwrap())
    }

    fn spec(grid: &Arc<Grid>, d: DiffusionSpec, r: ReactionSpec, b: Boundary) -> ProblemSpec {
        ProblemSpec::new(grid.clone(), d, r, b).unwrap()
    }

    #[test]
    fn double_power_natural_converges_to_one() {
        let g = line(64);
        let ps = spec(
            &g,
            DiffusionSpec::constant(2.0).unwrap(),
            ReactionSpec::double_power(1.5, 3.0).unwrap(),
            Boundary::Natural,
        );
        let r = minimize(&ps, &ScalarField::constant(&g, 0.5), &SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.residual < 1e-9);
        assert!(r.solution.values().iter().all(|v| (v - 1.0).abs() < 1e-6));
        assert_eq!(r.classification.unwrap().kind, ConeKind::InteriorCone);
    }

    #[test]
    fn critical_point_at_one_needs_no_iterations() {
        let g = line(32);
        let ps = spec(
            &g,
            DiffusionSpec::constant(2.0).unwrap(),
            ReactionSpec::double_power(1.5, 3.0).unwrap(),
            Boundary::Natural,
        );
        let r = critical_point_from(&ps, &ScalarField::constant(&g, 1.0), &SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.kind, SolutionKind::CriticalPoint);
    }

    #[test]
    fn zero_is_a_fixed_critical_point() {
        let g = line(32);
        let ps = spec(
            &g,
            DiffusionSpec::constant(2.0).unwrap(),
            ReactionSpec::pure_subhomogeneous(1.5, 1.0).unwrap(),
            Boundary::DirichletZero,
        );
        let r = critical_point_from(&ps, &ScalarField::constant(&g, 0.0), &SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert!(r.solution.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_natural_positive_a_is_unbounded() {
        let g = line(32);
        let ps = spec(
            &g,
            DiffusionSpec::constant(2.0).unwrap(),
            ReactionSpec::pure_subhomogeneous(1.5, 1.0).unwrap(),
            Boundary::Natural,
        );
        let err = minimize(&ps, &ScalarField::constant(&g, 0.5), &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::NotBoundedBelow { .. }), "{err:?}");
    }

    #[test]
    fn zero_reaction_dirichlet_goes_to_zero() {
        for grid in [
            line(50),
            Arc::new(build_rectangle_grid(12, 12, [(0.0, 1.0), (0.0, 1.0)]).unwrap()),
        ] {
            let ps = spec(
                &grid,
                DiffusionSpec::constant(2.0).unwrap(),
                ReactionSpec::zero(),
                Boundary::DirichletZero,
            );
            let mut v = ScalarField::from_fn(&grid, |x| 1.0 + x[0] * x[1] + x[0])
                .unwrap()
                .into_values();
            for &b in grid.boundary_nodes() {
                v[b] = 0.0;
            }
            let r = minimize(
                &ps,
                &ScalarField::new(&grid, v).unwrap(),
                &SolveOptions::for_grid(&grid),
            )
            .unwrap();
            assert!(
                r.converged,
                "{:?} {} {} {}",
                r.status,
                r.iterations,
                r.residual,
                grid.dimension()
            );
            assert!(r.solution.max_abs() < 1e-6);
        }
    }

    #[test]
    fn logistic_natural_converges_to_two() {
        let g = line(64);
        let ps = spec(
            &g,
            DiffusionSpec::constant(2.0).unwrap(),
            ReactionSpec::logistic(2.0, 4.0, 4.0, 1.0).unwrap(),
            Boundary::Natural,
        );
        let r = critical_point_from(&ps, &ScalarField::constant(&g, 1.5), &SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.solution.values().iter().all(|v| (v - 2.0).abs() < 1e-6));
    }

    #[test]
    fn accepted_steps_decrease_energy_and_residual_is_reproducible() {
        let g = line(80);
        let a = ScalarField::from_fn(&g, |x| (2.0 * std::f64::consts::PI * x[0]).sin() + 0.3).unwrap();
        for metric in [Metric::default(), Metric::Euclidean] {
            let ps = spec(
                &g,
                DiffusionSpec::power_shift(2.5, 3.0).unwrap(),
                ReactionSpec::pure_subhomogeneous(1.5, a.clone()).unwrap(),
                Boundary::DirichletZero,
            );
            let opts = SolveOptions {
                record_history: true,
                max_iterations: 300,
                metric,
                ..SolveOptions::default()
            };
            let mut v = vec![0.7; g.node_count()];
            v[0] = 0.0;
            v[80] = 0.0;
            let init = ScalarField::new(&g, v).unwrap();
            let r = minimize(&ps, &init, &opts).unwrap();
            assert!(r.energy_history.windows(2).all(|w| w[1] < w[0]));
            assert_eq!(r.residual, residual_norm(&ps, &r.solution).unwrap());
            let again = minimize(&ps, &init, &opts).unwrap();
            assert_eq!(again.iterations, r.iterations);
            assert_eq!(again.solution.values(), r.solution.values());
        }
    }

    #[test]
    fn missing_extension_is_rejected() {
        let g = line(8);
        let ps = spec(
            &g,
            DiffusionSpec::constant(2.0).unwrap(),
            ReactionSpec::zero().with_extension(None),
            Boundary::Natural,
        );
        let err = minimize(&ps, &ScalarField::constant(&g, 1.0), &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::MissingNegativeExtension));
    }
}
