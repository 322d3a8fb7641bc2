//! Configuration-driven runners behind the `plap` binary. Each runner
//! computes first and writes its files at the end.

pub mod coefficient;
pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classify::{
    comparability_delta, neumann_integral_condition, Comparability, ConeClassification, DEFAULT_TOL_ZERO,
};
use crate::grid::{Grid, ScalarField};
use crate::model::{audit_a1_growth, audit_a2prime, audit_diffusion, default_samples, Boundary, ProblemSpec, Verdict};
use crate::paths::{
    self, midpoint_energy_test, path_energy_profile, MidpointVerdict, PathDiagnostics, PathError, PathExactness,
};
use crate::solve::{self, first_eigenvalue, minimize, EigenReport, MultiStartResult, SolveError, SolveReport};

pub use coefficient::{CoefficientDef, ParseError};
pub use config::{ConfigError, ScenarioConfig};

/// The shipped scenario catalog, `(id, config text)`.
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("E1", include_str!("../../scenarios/E1.conf")),
    ("E2", include_str!("../../scenarios/E2.conf")),
    ("E3", include_str!("../../scenarios/E3.conf")),
    ("E4", include_str!("../../scenarios/E4.conf")),
    ("E5", include_str!("../../scenarios/E5.conf")),
    ("E6", include_str!("../../scenarios/E6.conf")),
    ("E7", include_str!("../../scenarios/E7.conf")),
    ("E8", include_str!("../../scenarios/E8.conf")),
    ("E9a", include_str!("../../scenarios/E9a.conf")),
    ("E9b", include_str!("../../scenarios/E9b.conf")),
    ("E10a", include_str!("../../scenarios/E10a.conf")),
    ("E10b", include_str!("../../scenarios/E10b.conf")),
    ("E11", include_str!("../../scenarios/E11.conf")),
    ("EIG", include_str!("../../scenarios/EIG.conf")),
    ("EIG2", include_str!("../../scenarios/EIG2.conf")),
];

pub fn builtin_scenario(id: &str) -> Option<ScenarioConfig> {
    BUILTIN_SCENARIOS
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| ScenarioConfig::parse(text).expect("builtin scenarios parse"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn solver_failure(e: SolveError) -> CliError {
    match e {
        SolveError::NotBoundedBelow { .. } => CliError::NonConvergence(e.to_string()),
        SolveError::Options(_) | SolveError::MissingNegativeExtension | SolveError::TooFewStarts(_) => {
            CliError::Config(e.to_string())
        }
        SolveError::EigenSetup | SolveError::Grid(_) => CliError::Config(e.to_string()),
        SolveError::Energy(_) => CliError::Invariant(e.to_string()),
    }
}

fn path_failure(e: PathError) -> CliError {
    match e {
        PathError::InvariantViolation(_) => CliError::Invariant(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

/// Seventeen significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

/// Rows become lines joined by commas, each ending in LF.
fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Output files of one run, written together when the run finishes.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    fn add(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

/// `x,y,<columns...>` with one row per node.
pub fn field_csv(grid: &Grid, columns: &[(&str, &[f64])]) -> String {
    let mut header = vec!["x", "y"];
    header.extend(columns.iter().map(|(n, _)| *n));
    let rows: Vec<Vec<String>> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut r = vec![fmt_real(x[0]), fmt_real(x[1])];
            r.extend(columns.iter().map(|(_, v)| fmt_real(v[i])));
            r
        })
        .collect();
    csv(&header, &rows)
}

/// Reads the first value column (after `x,y`) of a field CSV and checks the
/// coordinates against the grid.
pub fn read_field_csv(grid: &std::sync::Arc<Grid>, text: &str) -> Result<ScalarField, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or("empty field file")?
        .split(',')
        .map(str::trim)
        .collect();
    if header.len() < 3 || header[0] != "x" || header[1] != "y" {
        return Err("field file must start with columns x,y,<value>".into());
    }
    let nodes = grid.nodes();
    let mut values = Vec::with_capacity(nodes.len());
    for (i, line) in lines.enumerate() {
        let cells: Result<Vec<f64>, _> = line.split(',').take(3).map(|c| c.trim().parse::<f64>()).collect();
        let cells = cells.map_err(|_| format!("row {}: cannot parse '{line}'", i + 2))?;
        if cells.len() < 3 {
            return Err(format!("row {}: expected three columns", i + 2));
        }
        let Some(x) = nodes.get(i) else {
            return Err(format!("field has more rows than the grid has nodes ({})", nodes.len()));
        };
        let scale = 1e-9 * (1.0 + x[0].abs().max(x[1].abs()));
        if (cells[0] - x[0]).abs() > scale || (cells[1] - x[1]).abs() > scale {
            return Err(format!("row {}: node coordinates do not match the grid", i + 2));
        }
        values.push(cells[2]);
    }
    if values.len() != nodes.len() {
        return Err(format!(
            "field has {} rows, grid has {} nodes",
            values.len(),
            nodes.len()
        ));
    }
    ScalarField::new(grid, values).map_err(|e| e.to_string())
}

/// A field given either as a file path or, if no such file exists, as a
/// coefficient expression evaluated at the nodes (and set to zero on the
/// boundary under Dirichlet data).
pub fn load_field(grid: &std::sync::Arc<Grid>, boundary: Boundary, spec: &str) -> Result<ScalarField, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        return read_field_csv(grid, &text).map_err(|m| CliError::Config(format!("{spec}: {m}")));
    }
    let def = CoefficientDef::parse(spec)
        .map_err(|e| CliError::Config(format!("'{spec}' is neither a file nor an expression ({e})")))?;
    expression_field(grid, boundary, &def).map_err(CliError::Config)
}

fn expression_field(
    grid: &std::sync::Arc<Grid>,
    boundary: Boundary,
    def: &CoefficientDef,
) -> Result<ScalarField, String> {
    let v = (0..grid.node_count())
        .map(|i| {
            if boundary == Boundary::DirichletZero && grid.is_boundary(i) {
                0.0
            } else {
                def.eval(grid.nodes()[i])
            }
        })
        .collect();
    ScalarField::new(grid, v).map_err(|e| e.to_string())
}

fn initial_field(cfg: &ScenarioConfig, ps: &ProblemSpec) -> ScalarField {
    match &cfg.init {
        Some(def) => expression_field(&ps.grid, ps.boundary, def).expect("validated expression"),
        None => solve::random_initial_field(ps, cfg.solver.seed),
    }
}

fn status_name(r: &SolveReport) -> &'static str {
    match r.status {
        solve::SolveStatus::Converged => "converged",
        solve::SolveStatus::MaxIterations => "max_iterations",
        solve::SolveStatus::LineSearchStalled => "line_search_stalled",
    }
}

fn classification_cells(c: Option<&ConeClassification>) -> [String; 4] {
    match c {
        Some(c) => [
            c.kind.to_string(),
            fmt_real(c.positivity_margin),
            fmt_opt(c.normal_derivative_margin),
            c.dead_core_regions.len().to_string(),
        ],
        None => Default::default(),
    }
}

fn comparability_cell(c: &Comparability) -> String {
    match c {
        Comparability::Delta(d) => fmt_real(*d),
        Comparability::Incomparable(_) => "incomparable".into(),
    }
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub report: Result<SolveReport, SolveError>,
    pub reference_delta: Option<Comparability>,
    pub outputs: Outputs,
    pub summary: String,
}

const SOLVE_HEADER: &[&str] = &[
    "status",
    "converged",
    "iterations",
    "energy",
    "diffusion_energy",
    "reaction_energy",
    "residual",
    "max_abs",
    "classification",
    "positivity_margin",
    "normal_derivative_margin",
    "dead_core_regions",
    "delta_reference",
];

/// Single descent run from `solve.init` (or a seeded random field).
pub fn run_solve(cfg: &ScenarioConfig) -> Result<SolveOutcome, CliError> {
    let ps = cfg.problem()?;
    let opts = cfg.solve_options(&ps.grid);
    opts.validate().map_err(solver_failure)?;
    let reference = cfg
        .reference
        .as_deref()
        .map(|r| load_field(&ps.grid, ps.boundary, r))
        .transpose()?;
    let init = initial_field(cfg, &ps);
    let result = minimize(&ps, &init, &opts);
    let mut outputs = Outputs::default();
    let mut reference_delta = None;
    let summary;
    match &result {
        Ok(r) => {
            reference_delta = reference
                .as_ref()
                .map(|v| comparability_delta(&r.solution, v, DEFAULT_TOL_ZERO));
            let [kind, pos, nd, regions] = classification_cells(r.classification.as_ref());
            let row = vec![
                status_name(r).into(),
                r.converged.to_string(),
                r.iterations.to_string(),
                fmt_real(r.energy.total),
                fmt_real(r.energy.diffusion_part),
                fmt_real(r.energy.reaction_part),
                fmt_real(r.residual),
                fmt_real(r.solution.max_abs()),
                kind.clone(),
                pos,
                nd,
                regions,
                reference_delta.as_ref().map(comparability_cell).unwrap_or_default(),
            ];
            outputs.add("report.csv", csv(SOLVE_HEADER, &[row]));
            outputs.add("solution.csv", field_csv(&ps.grid, &[("u", r.solution.values())]));
            summary = format!(
                "{}: {} after {} iterations, energy {:.6e}, residual {:.3e}, {}",
                cfg.id,
                status_name(r),
                r.iterations,
                r.energy.total,
                r.residual,
                kind
            );
        }
        Err(e) => {
            let (iterations, energy) = match e {
                SolveError::NotBoundedBelow { iterations, energy, .. } => (iterations.to_string(), fmt_real(*energy)),
                _ => (String::new(), String::new()),
            };
            let mut row = vec![String::new(); SOLVE_HEADER.len()];
            row[0] = failure_name(e).into();
            row[1] = "false".into();
            row[2] = iterations;
            row[3] = energy;
            outputs.add("report.csv", csv(SOLVE_HEADER, &[row]));
            summary = format!("{}: {e}", cfg.id);
        }
    }
    Ok(SolveOutcome {
        report: result,
        reference_delta,
        outputs,
        summary,
    })
}

fn failure_name(e: &SolveError) -> &'static str {
    match e {
        SolveError::NotBoundedBelow { .. } => "not_bounded_below",
        _ => "error",
    }
}

impl SolveOutcome {
    /// Exit status of the run once its files are written.
    pub fn status(&self) -> Result<(), CliError> {
        match &self.report {
            Ok(r) if r.converged => Ok(()),
            Ok(r) => Err(CliError::NonConvergence(format!("status {}", status_name(r)))),
            Err(e) => Err(solver_failure(e.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTest {
    pub clusters: (usize, usize),
    pub comparability: Comparability,
    /// `None` when a representative is not nonnegative.
    pub midpoint: Option<paths::MidpointTest>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub result: MultiStartResult,
    pub pair_tests: Vec<PairTest>,
    /// `int a` for pure reactions under natural boundary conditions.
    pub neumann_integral: Option<f64>,
    pub outputs: Outputs,
    pub summary: String,
}

impl ExperimentOutcome {
    pub fn status(&self) -> Result<(), CliError> {
        let failed = self.result.runs.len() - self.result.converged_count();
        if failed == 0 {
            return Ok(());
        }
        let unbounded = self
            .result
            .runs
            .iter()
            .filter(|r| matches!(r, Err(SolveError::NotBoundedBelow { .. })))
            .count();
        Err(CliError::NonConvergence(format!(
            "{failed} of {} starts failed ({unbounded} not bounded below)",
            self.result.runs.len()
        )))
    }
}

/// The exponent used for interpolation paths: `path.q`, else the reaction's
/// natural exponent, else `p`.
pub fn path_exponent(cfg: &ScenarioConfig, ps: &ProblemSpec) -> f64 {
    cfg.path.q.or_else(|| ps.reaction.natural_q()).unwrap_or(ps.diffusion.p)
}

/// Multi-start descent, clustering, cone classification of each cluster and
/// pairwise midpoint tests between cluster representatives.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<ExperimentOutcome, CliError> {
    let ps = cfg.problem()?;
    let opts = cfg.solve_options(&ps.grid);
    let result = solve::multi_start(&ps, cfg.solver.starts, &opts).map_err(solver_failure)?;
    let q = path_exponent(cfg, &ps);
    let neumann_integral = neumann_integral_condition(&ps).ok();

    let mut cluster_of = vec![None; result.runs.len()];
    for (c, cl) in result.clusters.iter().enumerate() {
        for &m in &cl.members {
            cluster_of[m] = Some(c);
        }
    }

    let mut pair_tests = Vec::new();
    for i in 0..result.clusters.len() {
        for j in i + 1..result.clusters.len() {
            let u = &result.representative(&result.clusters[i]).solution;
            let v = &result.representative(&result.clusters[j]).solution;
            let midpoint = match midpoint_energy_test(&ps, u, v, q) {
                Ok(m) => Some(m),
                Err(PathError::NegativeValue { .. }) => None,
                Err(e) => return Err(path_failure(e)),
            };
            pair_tests.push(PairTest {
                clusters: (i, j),
                comparability: comparability_delta(u, v, DEFAULT_TOL_ZERO),
                midpoint,
            });
        }
    }

    let header = [
        "start",
        "seed",
        "status",
        "converged",
        "iterations",
        "energy",
        "residual",
        "max_abs",
        "cluster",
        "classification",
    ];
    let rows: Vec<Vec<String>> = result
        .runs
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let seed = opts.random_seed.wrapping_add(k as u64).to_string();
            let cluster = cluster_of[k].map(|c| c.to_string()).unwrap_or_default();
            match r {
                Ok(r) => vec![
                    k.to_string(),
                    seed,
                    status_name(r).into(),
                    r.converged.to_string(),
                    r.iterations.to_string(),
                    fmt_real(r.energy.total),
                    fmt_real(r.residual),
                    fmt_real(r.solution.max_abs()),
                    cluster,
                    r.classification
                        .as_ref()
                        .map(|c| c.kind.to_string())
                        .unwrap_or_default(),
                ],
                Err(e) => {
                    let (it, en) = match e {
                        SolveError::NotBoundedBelow { iterations, energy, .. } => {
                            (iterations.to_string(), fmt_real(*energy))
                        }
                        _ => (String::new(), String::new()),
                    };
                    vec![
                        k.to_string(),
                        seed,
                        failure_name(e).into(),
                        "false".into(),
                        it,
                        en,
                        String::new(),
                        String::new(),
                        cluster,
                        String::new(),
                    ]
                }
            }
        })
        .collect();

    let mut outputs = Outputs::default();
    outputs.add("report.csv", csv(&header, &rows));
    if !result.clusters.is_empty() {
        let names: Vec<String> = (0..result.clusters.len()).map(|c| format!("cluster_{c}")).collect();
        let cols: Vec<(&str, &[f64])> = result
            .clusters
            .iter()
            .zip(&names)
            .map(|(c, n)| (n.as_str(), result.representative(c).solution.values()))
            .collect();
        outputs.add("solution.csv", field_csv(&ps.grid, &cols));
    }

    let mut s = String::new();
    let _ = writeln!(s, "scenario {}", cfg.id);
    if let Some(d) = &cfg.description {
        let _ = writeln!(s, "description: {d}");
    }
    let _ = writeln!(
        s,
        "starts: {}, converged: {}, clusters: {} (threshold {:.3e})",
        result.runs.len(),
        result.converged_count(),
        result.clusters.len(),
        result.threshold
    );
    for (c, cl) in result.clusters.iter().enumerate() {
        let r = result.representative(cl);
        let [kind, pos, nd, regions] = classification_cells(r.classification.as_ref());
        let _ = writeln!(
            s,
            "cluster {c}: {} members, energy {:.10e}, max|u| {:.6e}, {kind}, positivity margin {pos}, normal slope margin {}, dead-core regions {regions}",
            cl.members.len(),
            r.energy.total,
            r.solution.max_abs(),
            if nd.is_empty() { "n/a" } else { nd.as_str() },
        );
    }
    for t in &pair_tests {
        let mid = match &t.midpoint {
            Some(m) => format!(
                "midpoint gap {:.6e} ({})",
                m.gap,
                match m.verdict {
                    MidpointVerdict::Strict => "strict: the two cannot both be minimizers",
                    MidpointVerdict::Equal => "equal",
                    MidpointVerdict::Violated => "violated",
                }
            ),
            None => "midpoint test skipped (negative values)".into(),
        };
        let _ = writeln!(
            s,
            "clusters {} and {}: delta {}, {mid}",
            t.clusters.0,
            t.clusters.1,
            comparability_cell(&t.comparability)
        );
    }
    if let Some(a) = neumann_integral {
        let _ = writeln!(
            s,
            "integral of a: {:.6e} ({})",
            a,
            if a > 0.0 {
                "positive: no positive solution, energy unbounded along constants"
            } else {
                "nonpositive"
            }
        );
    }
    let _ = writeln!(
        s,
        "note: descent only finds local minimizers; saddle-type critical points are not sampled."
    );
    outputs.add("summary.txt", s.clone());

    Ok(ExperimentOutcome {
        result,
        pair_tests,
        neumann_integral,
        outputs,
        summary: s,
    })
}

#[derive(Debug)]
pub struct PathOutcome {
    pub diagnostics: PathDiagnostics,
    /// One-sided derivative of `I(gamma(t))` at `t = 0` and `t = 1`.
    pub end_slopes: (f64, f64),
    pub outputs: Outputs,
    pub summary: String,
}

/// Energy profile along the q-power path between `u` and `v`, each a field
/// file or an expression.
pub fn run_path_check(cfg: &ScenarioConfig, u: Option<&str>, v: Option<&str>) -> Result<PathOutcome, CliError> {
    let ps = cfg.problem()?;
    let pick = |flag: Option<&str>, key: &Option<String>, name: &str| -> Result<ScalarField, CliError> {
        let spec = flag.map(str::to_string).or_else(|| key.clone()).ok_or_else(|| {
            CliError::Config(format!("path check needs the field '{name}' (path.{name} or --{name})"))
        })?;
        load_field(&ps.grid, ps.boundary, &spec)
    };
    let uf = pick(u, &cfg.path.u, "u")?;
    let vf = pick(v, &cfg.path.v, "v")?;
    let q = path_exponent(cfg, &ps);
    let d = path_energy_profile(&ps, &uf, &vf, q, cfg.path.samples).map_err(path_failure)?;

    let n = d.t_samples.len();
    let dt0 = d.t_samples[1] - d.t_samples[0];
    let dt1 = d.t_samples[n - 1] - d.t_samples[n - 2];
    let end_slopes = (
        (d.total_energy[1] - d.total_energy[0]) / dt0,
        (d.total_energy[n - 1] - d.total_energy[n - 2]) / dt1,
    );
    let d2d = PathDiagnostics::second_differences(&d.diffusion_energy);
    let d2i = PathDiagnostics::second_differences(&d.total_energy);
    let rows: Vec<Vec<String>> = (0..n)
        .map(|k| {
            let inner = |v: &[f64]| {
                if k == 0 || k == n - 1 {
                    String::new()
                } else {
                    fmt_real(v[k - 1])
                }
            };
            vec![
                fmt_real(d.t_samples[k]),
                fmt_real(d.diffusion_energy[k]),
                fmt_real(d.total_energy[k]),
                inner(&d2d),
                inner(&d2i),
            ]
        })
        .collect();
    let mut outputs = Outputs::default();
    outputs.add(
        "path.csv",
        csv(
            &["t", "diffusion_energy", "total_energy", "d2_diffusion", "d2_total"],
            &rows,
        ),
    );

    let convexity = if d.degenerate_constants {
        "degenerate (constants): D vanishes identically, not strictly convex"
    } else if d.strictly_convex() {
        "strictly convex"
    } else if d.min_second_difference_d >= -paths::CONVEXITY_TOLERANCE {
        "convex, not strictly"
    } else {
        "not convex"
    };
    let mut s = String::new();
    let _ = writeln!(s, "q = {}", fmt_real(q));
    let _ = writeln!(s, "samples = {n}");
    let _ = writeln!(s, "min_second_difference_d = {}", fmt_real(d.min_second_difference_d));
    let _ = writeln!(s, "min_second_difference_i = {}", fmt_real(d.min_second_difference_i));
    let _ = writeln!(s, "pointwise_max_violation = {}", fmt_opt(d.pointwise_max_violation));
    let _ = writeln!(
        s,
        "strict_convexity_witness = {}",
        d.strict_convexity_witness
            .map(|(a, b, c)| format!("{}, {}, {}", fmt_real(a), fmt_real(b), fmt_real(c)))
            .unwrap_or_else(|| "none".into())
    );
    let _ = writeln!(s, "degenerate_constants = {}", d.degenerate_constants);
    let _ = writeln!(
        s,
        "exactness = {}",
        match d.exactness {
            PathExactness::Exact => "exact",
            PathExactness::NotGuaranteed => "not_guaranteed",
        }
    );
    let _ = writeln!(s, "slope_t0 = {}", fmt_real(end_slopes.0));
    let _ = writeln!(s, "slope_t1 = {}", fmt_real(end_slopes.1));
    let _ = writeln!(s, "convexity = {convexity}");
    outputs.add("path_summary.txt", s.clone());
    Ok(PathOutcome {
        diagnostics: d,
        end_slopes,
        outputs,
        summary: s,
    })
}

#[derive(Debug)]
pub struct EigenOutcome {
    pub report: EigenReport,
    pub outputs: Outputs,
    pub summary: String,
}

impl EigenOutcome {
    pub fn status(&self) -> Result<(), CliError> {
        if self.report.converged {
            Ok(())
        } else {
            Err(CliError::NonConvergence(format!(
                "eigen solver stopped: {:?}",
                self.report.status
            )))
        }
    }
}

/// First Dirichlet eigenvalue of the p-Laplacian on the configured grid.
pub fn run_eigen(cfg: &ScenarioConfig) -> Result<EigenOutcome, CliError> {
    let grid = cfg.build_grid()?;
    let d = cfg.diffusion_spec()?;
    let opts = cfg.solve_options(&grid);
    let r = first_eigenvalue(&grid, d.p, &opts).map_err(solver_failure)?;
    let mut outputs = Outputs::default();
    outputs.add(
        "eigen.csv",
        csv(
            &["p", "lambda1", "iterations", "residual", "converged"],
            &[vec![
                fmt_real(d.p),
                fmt_real(r.lambda1),
                r.iterations.to_string(),
                fmt_real(r.residual),
                r.converged.to_string(),
            ]],
        ),
    );
    outputs.add(
        "eigenfunction.csv",
        field_csv(&grid, &[("u", r.eigenfunction.values())]),
    );
    let hist: Vec<Vec<String>> = r
        .rayleigh_history
        .iter()
        .enumerate()
        .map(|(k, v)| vec![k.to_string(), fmt_real(*v)])
        .collect();
    outputs.add("eigen_history.csv", csv(&["step", "rayleigh_quotient"], &hist));
    let summary = format!(
        "{}: lambda1 = {:.10e} after {} iterations (residual {:.3e})",
        cfg.id, r.lambda1, r.iterations, r.residual
    );
    Ok(EigenOutcome {
        report: r,
        outputs,
        summary,
    })
}

#[derive(Debug)]
pub struct AuditOutcome {
    pub all_passed: bool,
    pub outputs: Outputs,
    pub summary: String,
}

fn verdict_line<W: std::fmt::Debug>(v: &Verdict<W>) -> String {
    match v {
        Verdict::Pass => "PASS".into(),
        Verdict::Fail(w) => format!("FAIL {w:?}"),
    }
}

/// Structural audits of the configured diffusion and reaction.
pub fn run_audit(cfg: &ScenarioConfig) -> Result<AuditOutcome, CliError> {
    let ps = cfg.problem()?;
    let samples = default_samples();
    let mut s = String::new();
    let mut all = true;
    let _ = writeln!(s, "scenario {}", cfg.id);

    let da = audit_diffusion(&ps.diffusion, &samples);
    let ok = da.nonnegative && da.nondecreasing;
    all &= ok;
    let _ = writeln!(
        s,
        "diffusion h >= 0 and nondecreasing: {} (sampled sup {:.6e}{})",
        if ok { "PASS" } else { "FAIL" },
        da.sampled_sup,
        da.growth_constant
            .map(|c| format!(", growth constant {c:.6e}"))
            .unwrap_or_default()
    );

    let cap = ps.reaction.largest_exponent().max(ps.diffusion.space_exponent());
    let ga = audit_a1_growth(&ps.reaction, cap, ps.grid.dimension(), &samples);
    all &= ga.passed();
    let _ = writeln!(
        s,
        "reaction growth |g| <= C(1 + t^sigma): {} (sigma {}, C {:.6e}, tail exponent {:.6e}, subcritical {})",
        if ga.passed() { "PASS" } else { "FAIL" },
        ga.sigma,
        ga.constant,
        ga.tail_exponent,
        ga.subcritical
    );

    let q = path_exponent(cfg, &ps);
    let ratio = audit_a2prime(&ps.reaction, q, &samples);
    all &= ratio.passed();
    let _ = writeln!(s, "g(x,t)/t^(q-1) nonincreasing at q = {q}: {}", verdict_line(&ratio));

    let s_grid: Vec<f64> = samples.iter().map(|t| t.powf(q)).collect();
    let pull = paths::reaction_pullback_concavity(&ps.reaction, q, &s_grid);
    all &= pull.passed();
    let _ = writeln!(s, "s -> G(x, s^(1/q)) concave: {}", verdict_line(&pull));

    if let Ok(a) = neumann_integral_condition(&ps) {
        let _ = writeln!(
            s,
            "integral of a under natural boundary: {:.6e} ({})",
            a,
            if a > 0.0 {
                "positive: energy unbounded below"
            } else {
                "nonpositive"
            }
        );
    }
    let _ = writeln!(s, "overall: {}", if all { "PASS" } else { "FAIL" });
    let mut outputs = Outputs::default();
    outputs.add("audit.txt", s.clone());
    Ok(AuditOutcome {
        all_passed: all,
        outputs,
        summary: s,
    })
}

/// Where a run writes: the `--out` flag, else `output.dir`, else
/// `out/<scenario id>`.
pub fn output_dir(cfg: &ScenarioConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_csv_round_trips_exactly() {
        let cfg = builtin_scenario("E1").unwrap();
        let grid = cfg.build_grid().unwrap();
        let u = ScalarField::from_fn(&grid, |x| (x[0] * 7.0).sin() / 3.0).unwrap();
        let text = field_csv(&grid, &[("u", u.values())]);
        assert!(!text.contains('\r'));
        let back = read_field_csv(&grid, &text).unwrap();
        assert_eq!(back.values(), u.values());

        let coarse = crate::grid::build_interval_grid(64, 0.0, 1.0)
            .map(std::sync::Arc::new)
            .unwrap();
        assert!(read_field_csv(&coarse, &text).is_err());
    }

    #[test]
    fn real_format_has_seventeen_digits() {
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_real(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn zero_reaction_solve_returns_zero() {
        let mut cfg = builtin_scenario("EIG").unwrap();
        cfg.grid.cells = vec![32];
        let out = run_solve(&cfg).unwrap();
        out.status().unwrap();
        let r = out.report.unwrap();
        assert!(r.solution.max_abs() < 1e-6);
        assert!(out.outputs.get("report.csv").unwrap().starts_with("status,"));
    }

    #[test]
    fn path_between_equal_fields_is_flat() {
        let mut cfg = builtin_scenario("E1").unwrap();
        cfg.grid.cells = vec![32];
        let expr = "sin(1*pi*x)";
        let out = run_path_check(&cfg, Some(expr), Some(expr)).unwrap();
        let e = &out.diagnostics.total_energy;
        assert!(e.iter().all(|x| (x - e[0]).abs() <= 1e-14 * e[0].abs().max(1.0)));
    }

    #[test]
    fn missing_path_field_is_config_error() {
        let cfg = builtin_scenario("E1").unwrap();
        let e = run_path_check(&cfg, None, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn audit_reports_verdicts() {
        let out = run_audit(&builtin_scenario("E1").unwrap()).unwrap();
        assert!(out.all_passed, "{}", out.summary);
        assert!(out.outputs.get("audit.txt").unwrap().contains("overall: PASS"));
    }
}
