//! Scenario configuration: flat `key = value` lines with dotted sections.
//! `#` starts a comment. Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::coefficient::CoefficientDef;
use crate::grid::{build_interval_grid, build_rectangle_grid, Grid};
use crate::model::{
    Boundary, DiffusionFamily, DiffusionSpec, NegativeExtension, ProblemSpec, ReactionFamily, ReactionSpec,
};
use crate::solve::{Metric, SolveOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the offending entry; 0 when the key is missing.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.key, self.message)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionKind {
    Constant,
    PowerShift,
    Saturating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionKind {
    Pure,
    TwoTerm,
    Logistic,
    DoublePower,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionKind {
    Zero,
    Odd,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Sobolev,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub cells: Vec<usize>,
    pub extents: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub family: DiffusionKind,
    pub p: f64,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionConfig {
    pub family: ReactionKind,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub a: Option<CoefficientDef>,
    pub b: Option<CoefficientDef>,
    pub negative_extension: ExtensionKind,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: Option<usize>,
    pub tolerance: f64,
    pub seed: u64,
    pub starts: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub metric: MetricKind,
    pub metric_length: f64,
    pub curvature: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub q: Option<f64>,
    pub samples: usize,
    pub u: Option<String>,
    pub v: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub description: Option<String>,
    pub grid: GridConfig,
    pub diffusion: DiffusionConfig,
    pub reaction: ReactionConfig,
    pub boundary: Boundary,
    pub solver: SolverConfig,
    /// Initial field for single solves; random when absent.
    pub init: Option<CoefficientDef>,
    /// Field (solution CSV) to compare single solves against.
    pub reference: Option<String>,
    pub path: PathConfig,
    pub output_dir: Option<String>,
}

const KEYS: &[&str] = &[
    "scenario.id",
    "scenario.description",
    "grid.dimension",
    "grid.n",
    "grid.extent",
    "diffusion.family",
    "diffusion.p",
    "diffusion.r",
    "reaction.family",
    "reaction.q",
    "reaction.r",
    "reaction.a",
    "reaction.b",
    "reaction.negative_extension",
    "reaction.sigma",
    "boundary",
    "solver.max_iterations",
    "solver.tolerance",
    "solver.seed",
    "solver.starts",
    "solver.initial_step",
    "solver.shrink",
    "solver.sufficient_decrease",
    "solver.metric",
    "solver.metric_length",
    "solver.curvature",
    "solve.init",
    "solve.reference",
    "path.q",
    "path.samples",
    "path.u",
    "path.v",
    "output.dir",
];

struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn err<T>(&self, key: &str, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: self.map.get(key).map_or(0, |(_, l)| *l),
            key: key.to_string(),
            message: message.into(),
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(v, _)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        match self.raw(key) {
            Some(v) => Ok(v),
            None => self.err(key, "missing required key"),
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => match v.parse::<T>() {
                Ok(x) => Ok(Some(x)),
                Err(_) => self.err(key, format!("cannot parse '{v}'")),
            },
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.parse::<f64>(key)?;
        match v {
            Some(x) if !x.is_finite() => self.err(key, "value must be finite"),
            _ => Ok(v),
        }
    }

    fn reals(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let parts: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
                match parts {
                    Ok(p) if p.iter().all(|x| x.is_finite()) => Ok(Some(p)),
                    _ => self.err(key, format!("expected comma-separated numbers, got '{v}'")),
                }
            }
        }
    }

    fn coefficient(&self, key: &str) -> Result<Option<CoefficientDef>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => CoefficientDef::parse(v)
                .map(Some)
                .or_else(|e| self.err(key, e.to_string())),
        }
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)], default: Option<T>) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => match default {
                Some(d) => Ok(d),
                None => self.err(key, "missing required key"),
            },
            Some(v) => match options.iter().find(|(name, _)| *name == v) {
                Some((_, t)) => Ok(*t),
                None => {
                    let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                    self.err(key, format!("'{v}' is not one of {}", names.join(", ")))
                }
            },
        }
    }
}

const DIFFUSION_NAMES: &[(&str, DiffusionKind)] = &[
    ("constant", DiffusionKind::Constant),
    ("power_shift", DiffusionKind::PowerShift),
    ("saturating", DiffusionKind::Saturating),
];
const REACTION_NAMES: &[(&str, ReactionKind)] = &[
    ("pure", ReactionKind::Pure),
    ("two_term", ReactionKind::TwoTerm),
    ("logistic", ReactionKind::Logistic),
    ("double_power", ReactionKind::DoublePower),
    ("zero", ReactionKind::Zero),
];
const EXTENSION_NAMES: &[(&str, ExtensionKind)] = &[
    ("zero", ExtensionKind::Zero),
    ("odd", ExtensionKind::Odd),
    ("none", ExtensionKind::None),
];
const BOUNDARY_NAMES: &[(&str, Boundary)] = &[("dirichlet", Boundary::DirichletZero), ("natural", Boundary::Natural)];
const METRIC_NAMES: &[(&str, MetricKind)] = &[("sobolev", MetricKind::Sobolev), ("euclidean", MetricKind::Euclidean)];
const BOOL_NAMES: &[(&str, bool)] = &[("true", true), ("false", false)];

fn name_of<T: PartialEq + Copy>(options: &[(&'static str, T)], value: T) -> &'static str {
    options
        .iter()
        .find(|(_, t)| *t == value)
        .map(|(n, _)| *n)
        .unwrap_or("?")
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError {
                    line,
                    key: content.to_string(),
                    message: "expected 'key = value'".into(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(ConfigError {
                    line,
                    key: k.to_string(),
                    message: "unknown key".into(),
                });
            }
            if let Some((_, first)) = map.insert(k.to_string(), (v.to_string(), line)) {
                return Err(ConfigError {
                    line,
                    key: k.to_string(),
                    message: format!("repeated key (first set on line {first})"),
                });
            }
        }
        let e = Entries { map };

        let id = e.required("scenario.id")?.to_string();
        let description = e.raw("scenario.description").map(str::to_string);

        let dimension = e.parse::<usize>("grid.dimension")?.unwrap_or(1);
        if dimension != 1 && dimension != 2 {
            return e.err("grid.dimension", "dimension must be 1 or 2");
        }
        let cells: Vec<usize> = {
            let raw = e.required("grid.n")?;
            let parsed: Result<Vec<usize>, _> = raw.split(',').map(|s| s.trim().parse::<usize>()).collect();
            match parsed {
                Ok(mut c) => {
                    if c.len() == 1 && dimension == 2 {
                        c.push(c[0]);
                    }
                    if c.len() != dimension {
                        return e.err("grid.n", format!("expected {dimension} cell counts"));
                    }
                    c
                }
                Err(_) => return e.err("grid.n", format!("cannot parse '{raw}'")),
            }
        };
        let extents: Vec<(f64, f64)> = match e.reals("grid.extent")? {
            None => vec![(0.0, 1.0); dimension],
            Some(v) if v.len() == 2 * dimension => v.chunks(2).map(|c| (c[0], c[1])).collect(),
            Some(_) => return e.err("grid.extent", format!("expected {} numbers", 2 * dimension)),
        };

        let diffusion = DiffusionConfig {
            family: e.choice("diffusion.family", DIFFUSION_NAMES, Some(DiffusionKind::Constant))?,
            p: e.real("diffusion.p")?
                .map_or_else(|| e.err("diffusion.p", "missing required key"), Ok)?,
            r: e.real("diffusion.r")?,
        };
        let reaction = ReactionConfig {
            family: e.choice("reaction.family", REACTION_NAMES, None)?,
            q: e.real("reaction.q")?,
            r: e.real("reaction.r")?,
            a: e.coefficient("reaction.a")?,
            b: e.coefficient("reaction.b")?,
            negative_extension: e.choice(
                "reaction.negative_extension",
                EXTENSION_NAMES,
                Some(ExtensionKind::Zero),
            )?,
            sigma: e.real("reaction.sigma")?,
        };
        let boundary = e.choice("boundary", BOUNDARY_NAMES, None)?;
        let defaults = SolveOptions::default();
        let default_length = match defaults.metric {
            Metric::Sobolev { length, .. } => length,
            Metric::Euclidean => 0.1,
        };
        let solver = SolverConfig {
            max_iterations: e.parse("solver.max_iterations")?,
            tolerance: e.real("solver.tolerance")?.unwrap_or(defaults.residual_tolerance),
            seed: e.parse("solver.seed")?.unwrap_or(0),
            starts: e.parse("solver.starts")?.unwrap_or(20),
            initial_step: e.real("solver.initial_step")?.unwrap_or(defaults.initial_step),
            shrink: e.real("solver.shrink")?.unwrap_or(defaults.shrink),
            sufficient_decrease: e
                .real("solver.sufficient_decrease")?
                .unwrap_or(defaults.sufficient_decrease),
            metric: e.choice("solver.metric", METRIC_NAMES, Some(MetricKind::Sobolev))?,
            metric_length: e.real("solver.metric_length")?.unwrap_or(default_length),
            curvature: e.choice("solver.curvature", BOOL_NAMES, Some(true))?,
        };
        let path = PathConfig {
            q: e.real("path.q")?,
            samples: e.parse("path.samples")?.unwrap_or(crate::paths::DEFAULT_PATH_SAMPLES),
            u: e.raw("path.u").map(str::to_string),
            v: e.raw("path.v").map(str::to_string),
        };
        let cfg = ScenarioConfig {
            id,
            description,
            grid: GridConfig { cells, extents },
            diffusion,
            reaction,
            boundary,
            solver,
            init: e.coefficient("solve.init")?,
            reference: e.raw("solve.reference").map(str::to_string),
            path,
            output_dir: e.raw("output.dir").map(str::to_string),
        };
        cfg.validate().or_else(|(key, msg)| e.err(key, msg))?;
        Ok(cfg)
    }

    /// Static checks that do not need the grid or model objects.
    fn validate(&self) -> Result<(), (&'static str, String)> {
        let s = &self.solver;
        if !(s.tolerance > 0.0) {
            return Err(("solver.tolerance", "must be positive".into()));
        }
        if !(s.shrink > 0.0 && s.shrink < 1.0) {
            return Err(("solver.shrink", "must lie in (0, 1)".into()));
        }
        if !(s.sufficient_decrease > 0.0 && s.sufficient_decrease < 1.0) {
            return Err(("solver.sufficient_decrease", "must lie in (0, 1)".into()));
        }
        if !(s.initial_step > 0.0) {
            return Err(("solver.initial_step", "must be positive".into()));
        }
        if !(s.metric_length > 0.0) {
            return Err(("solver.metric_length", "must be positive".into()));
        }
        if s.starts < 2 {
            return Err(("solver.starts", "need at least 2 starts".into()));
        }
        if self.path.samples < 3 {
            return Err(("path.samples", "need at least 3 samples".into()));
        }
        let needs = |present: bool, key: &'static str| {
            if present {
                Ok(())
            } else {
                Err((key, "required by this family".to_string()))
            }
        };
        match self.diffusion.family {
            DiffusionKind::PowerShift => needs(self.diffusion.r.is_some(), "diffusion.r")?,
            DiffusionKind::Constant | DiffusionKind::Saturating => {}
        }
        let r = &self.reaction;
        match r.family {
            ReactionKind::Pure => {
                needs(r.q.is_some(), "reaction.q")?;
                needs(r.a.is_some(), "reaction.a")?;
            }
            ReactionKind::TwoTerm | ReactionKind::Logistic => {
                needs(r.q.is_some(), "reaction.q")?;
                if r.family == ReactionKind::TwoTerm {
                    needs(r.r.is_some(), "reaction.r")?;
                }
                needs(r.a.is_some(), "reaction.a")?;
                needs(r.b.is_some(), "reaction.b")?;
            }
            ReactionKind::DoublePower => {
                needs(r.q.is_some(), "reaction.q")?;
                needs(r.r.is_some(), "reaction.r")?;
            }
            ReactionKind::Zero => {}
        }
        for (key, c) in [("reaction.a", &r.a), ("reaction.b", &r.b), ("solve.init", &self.init)] {
            if let Some(c) = c {
                c.validate(&self.grid.extents).map_err(|m| (key, m))?;
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.grid.cells.len()
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>, ConfigError> {
        let g = if self.dimension() == 1 {
            build_interval_grid(self.grid.cells[0], self.grid.extents[0].0, self.grid.extents[0].1)
        } else {
            build_rectangle_grid(
                self.grid.cells[0],
                self.grid.cells[1],
                [self.grid.extents[0], self.grid.extents[1]],
            )
        };
        g.map(Arc::new).map_err(|e| ConfigError {
            line: 0,
            key: "grid".into(),
            message: e.to_string(),
        })
    }

    pub fn diffusion_spec(&self) -> Result<DiffusionSpec, ConfigError> {
        let d = &self.diffusion;
        let family = match d.family {
            DiffusionKind::Constant => DiffusionFamily::Constant,
            DiffusionKind::PowerShift => DiffusionFamily::PowerShift {
                r: d.r.unwrap_or(f64::NAN),
            },
            DiffusionKind::Saturating => DiffusionFamily::SaturatingBounded,
        };
        DiffusionSpec::new(family, d.p).map_err(|e| ConfigError {
            line: 0,
            key: "diffusion".into(),
            message: e.to_string(),
        })
    }

    /// Builds the full problem, running the model's range checks.
    pub fn problem(&self) -> Result<ProblemSpec, ConfigError> {
        let grid = self.build_grid()?;
        let diffusion = self.diffusion_spec()?;
        let r = &self.reaction;
        let coef = |c: &Option<CoefficientDef>| c.as_ref().map(|c| c.to_coefficient(&grid)).unwrap_or(0.0.into());
        let nan = f64::NAN;
        let family = match r.family {
            ReactionKind::Pure => ReactionFamily::PureSubhomogeneous {
                q: r.q.unwrap_or(nan),
                a: coef(&r.a),
            },
            ReactionKind::TwoTerm => ReactionFamily::TwoTerm {
                q: r.q.unwrap_or(nan),
                r: r.r.unwrap_or(nan),
                a: coef(&r.a),
                b: coef(&r.b),
            },
            ReactionKind::Logistic => ReactionFamily::LogisticLike {
                p: diffusion.p,
                q: r.q.unwrap_or(nan),
                a: coef(&r.a),
                b: coef(&r.b),
            },
            ReactionKind::DoublePower => ReactionFamily::DoublePower {
                q: r.q.unwrap_or(nan),
                r: r.r.unwrap_or(nan),
            },
            ReactionKind::Zero => ReactionFamily::Zero,
        };
        let model_err = |e: crate::model::ModelError| ConfigError {
            line: 0,
            key: "reaction".into(),
            message: e.to_string(),
        };
        let mut reaction = ReactionSpec::new(family).map_err(model_err)?;
        reaction = reaction.with_extension(match r.negative_extension {
            ExtensionKind::Zero => Some(NegativeExtension::Zero),
            ExtensionKind::Odd => Some(NegativeExtension::Odd),
            ExtensionKind::None => None,
        });
        if let Some(s) = r.sigma {
            reaction = reaction.with_growth(s);
        }
        ProblemSpec::new(grid, diffusion, reaction, self.boundary).map_err(model_err)
    }

    pub fn solve_options(&self, grid: &Grid) -> SolveOptions {
        let s = &self.solver;
        let mut o = SolveOptions::for_grid(grid);
        if let Some(m) = s.max_iterations {
            o.max_iterations = m;
        }
        o.residual_tolerance = s.tolerance;
        o.random_seed = s.seed;
        o.initial_step = s.initial_step;
        o.shrink = s.shrink;
        o.sufficient_decrease = s.sufficient_decrease;
        o.metric = match s.metric {
            MetricKind::Sobolev => Metric::Sobolev {
                length: s.metric_length,
                curvature: s.curvature,
            },
            MetricKind::Euclidean => Metric::Euclidean,
        };
        o
    }

    /// Canonical text form; parsing it gives back an equal configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let reals = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        put("scenario.id", self.id.clone());
        if let Some(d) = &self.description {
            put("scenario.description", d.clone());
        }
        put("grid.dimension", self.dimension().to_string());
        put(
            "grid.n",
            self.grid
                .cells
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        );
        let ext: Vec<f64> = self.grid.extents.iter().flat_map(|(a, b)| [*a, *b]).collect();
        put("grid.extent", reals(&ext));
        put(
            "diffusion.family",
            name_of(DIFFUSION_NAMES, self.diffusion.family).into(),
        );
        put("diffusion.p", format!("{:?}", self.diffusion.p));
        if let Some(r) = self.diffusion.r {
            put("diffusion.r", format!("{r:?}"));
        }
        let r = &self.reaction;
        put("reaction.family", name_of(REACTION_NAMES, r.family).into());
        if let Some(q) = r.q {
            put("reaction.q", format!("{q:?}"));
        }
        if let Some(x) = r.r {
            put("reaction.r", format!("{x:?}"));
        }
        if let Some(a) = &r.a {
            put("reaction.a", a.to_string());
        }
        if let Some(b) = &r.b {
            put("reaction.b", b.to_string());
        }
        put(
            "reaction.negative_extension",
            name_of(EXTENSION_NAMES, r.negative_extension).into(),
        );
        if let Some(s) = r.sigma {
            put("reaction.sigma", format!("{s:?}"));
        }
        put("boundary", name_of(BOUNDARY_NAMES, self.boundary).into());
        let s = &self.solver;
        if let Some(m) = s.max_iterations {
            put("solver.max_iterations", m.to_string());
        }
        put("solver.tolerance", format!("{:?}", s.tolerance));
        put("solver.seed", s.seed.to_string());
        put("solver.starts", s.starts.to_string());
        put("solver.initial_step", format!("{:?}", s.initial_step));
        put("solver.shrink", format!("{:?}", s.shrink));
        put("solver.sufficient_decrease", format!("{:?}", s.sufficient_decrease));
        put("solver.metric", name_of(METRIC_NAMES, s.metric).into());
        put("solver.metric_length", format!("{:?}", s.metric_length));
        put("solver.curvature", s.curvature.to_string());
        if let Some(i) = &self.init {
            put("solve.init", i.to_string());
        }
        if let Some(r) = &self.reference {
            put("solve.reference", r.clone());
        }
        if let Some(q) = self.path.q {
            put("path.q", format!("{q:?}"));
        }
        put("path.samples", self.path.samples.to_string());
        if let Some(u) = &self.path.u {
            put("path.u", u.clone());
        }
        if let Some(v) = &self.path.v {
            put("path.v", v.clone());
        }
        if let Some(d) = &self.output_dir {
            put("output.dir", d.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "scenario.id = t\ngrid.n = 16\ndiffusion.p = 2\nreaction.family = zero\nboundary = natural\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.grid.extents, vec![(0.0, 1.0)]);
        assert_eq!(c.solver.starts, 20);
        assert_eq!(c.reaction.negative_extension, ExtensionKind::Zero);
        assert!(c.problem().is_ok());
    }

    #[test]
    fn diagnostics_name_line_and_key() {
        let text = format!("{MINIMAL}solver.shrink = 1.5\n");
        let e = ScenarioConfig::parse(&text).unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (6, "solver.shrink"));

        let e = ScenarioConfig::parse("scenario.id = t\n\n  bogus.key = 1\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (3, "bogus.key"));

        let e = ScenarioConfig::parse(&format!("{MINIMAL}grid.n = 8\n")).unwrap_err();
        assert_eq!(e.line, 6);
        assert!(e.message.contains("line 2"));

        let e = ScenarioConfig::parse("scenario.id = t\ngrid.n = 16\n").unwrap_err();
        assert_eq!(e.line, 0);

        let e = ScenarioConfig::parse(&MINIMAL.replace("zero", "pure")).unwrap_err();
        assert_eq!(e.key, "reaction.q");

        let e = ScenarioConfig::parse(&format!(
            "{}reaction.q = 1.5\nreaction.a = 1 + box(0.5, 2)\n",
            MINIMAL.replace("zero", "pure")
        ))
        .unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (7, "reaction.a"));
    }

    #[test]
    fn exponent_range_rejected_before_solving() {
        let text = MINIMAL.replace(
            "reaction.family = zero",
            "reaction.family = pure\nreaction.q = 2.5\nreaction.a = 1",
        );
        let c = ScenarioConfig::parse(&text).unwrap();
        let e = c.problem().unwrap_err();
        assert!(e.message.contains("q = 2.5"), "{e}");
    }

    #[test]
    fn builtin_scenarios_round_trip() {
        for (id, text) in super::super::BUILTIN_SCENARIOS {
            let c = ScenarioConfig::parse(text).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert_eq!(&c.id, id);
            let again = ScenarioConfig::parse(&c.to_text()).unwrap();
            assert_eq!(again, c, "{id}");
            assert_eq!(again.to_text(), c.to_text());
            c.problem().unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }
}
