//! Diffusion nonlinearities `h`, reaction terms `g`, their primitives, and
//! sample-based audits of the structural assumptions placed on them.

use std::sync::Arc;

use thiserror::Error;

use crate::grid::{Grid, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("negative argument {0} where the function is only defined on [0, inf)")]
    NegativeArgument(f64),
    #[error("invalid exponent: {0}")]
    Exponent(String),
    #[error("coefficient fields live on a different grid than the problem")]
    CoefficientGrid,
    #[error("logistic reaction uses p = {reaction_p} but the diffusion has p = {diffusion_p}")]
    ExponentMismatch { reaction_p: f64, diffusion_p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionFamily {
    /// `h = 1`, the plain p-Laplacian.
    Constant,
    /// `h(t) = 1 + t^(r/p - 1)`, the (p,r)-Laplacian.
    PowerShift { r: f64 },
    /// `h(t) = 1 + t/(1+t)`, bounded by 2.
    SaturatingBounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSpec {
    pub family: DiffusionFamily,
    pub p: f64,
}

impl DiffusionSpec {
    pub fn new(family: DiffusionFamily, p: f64) -> Result<Self, ModelError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(ModelError::Exponent(format!("p = {p} must exceed 1")));
        }
        if let DiffusionFamily::PowerShift { r } = family {
            if !(r > p && r.is_finite()) {
                return Err(ModelError::Exponent(format!("r = {r} must exceed p = {p}")));
            }
        }
        Ok(DiffusionSpec { family, p })
    }

    pub fn constant(p: f64) -> Result<Self, ModelError> {
        Self::new(DiffusionFamily::Constant, p)
    }

    pub fn power_shift(p: f64, r: f64) -> Result<Self, ModelError> {
        Self::new(DiffusionFamily::PowerShift { r }, p)
    }

    pub fn saturating(p: f64) -> Result<Self, ModelError> {
        Self::new(DiffusionFamily::SaturatingBounded, p)
    }

    /// Exponent of the Sobolev space the energy lives on (`r` for the
    /// (p,r)-Laplacian, `p` otherwise).
    pub fn space_exponent(&self) -> f64 {
        match self.family {
            DiffusionFamily::PowerShift { r } => r,
            _ => self.p,
        }
    }

    pub fn h_eval(&self, t: f64) -> Result<f64, ModelError> {
        if t < 0.0 {
            return Err(ModelError::NegativeArgument(t));
        }
        Ok(self.h(t))
    }

    pub fn big_h_eval(&self, t: f64) -> Result<f64, ModelError> {
        if t < 0.0 {
            return Err(ModelError::NegativeArgument(t));
        }
        Ok(self.big_h(t))
    }

    #[inline]
    pub(crate) fn h(&self, t: f64) -> f64 {
        match self.family {
            DiffusionFamily::Constant => 1.0,
            DiffusionFamily::PowerShift { r } => 1.0 + t.powf(r / self.p - 1.0),
            DiffusionFamily::SaturatingBounded => 1.0 + t / (1.0 + t),
        }
    }

    /// `H(t) = int_0^t h`.
    #[inline]
    pub(crate) fn big_h(&self, t: f64) -> f64 {
        match self.family {
            DiffusionFamily::Constant => t,
            DiffusionFamily::PowerShift { r } => t + (self.p / r) * t.powf(r / self.p),
            DiffusionFamily::SaturatingBounded => 2.0 * t - t.ln_1p(),
        }
    }
}

/// A coefficient `a(x)` or `b(x)`: either a constant or nodal values.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    Nodal(ScalarField),
}

impl Coefficient {
    #[inline]
    pub fn at(&self, node: usize) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Nodal(f) => f.values()[node],
        }
    }

    fn grid(&self) -> Option<&Arc<Grid>> {
        match self {
            Coefficient::Constant(_) => None,
            Coefficient::Nodal(f) => Some(f.grid()),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Constant(c)
    }
}

impl From<ScalarField> for Coefficient {
    fn from(f: ScalarField) -> Self {
        Coefficient::Nodal(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReactionFamily {
    /// `g = a t^(q-1)`
    PureSubhomogeneous { q: f64, a: Coefficient },
    /// `g = a t^(q-1) + b t^(r-1)`
    TwoTerm {
        q: f64,
        r: f64,
        a: Coefficient,
        b: Coefficient,
    },
    /// `g = a t^(p-1) - b t^(q-1)`, `q > p`
    LogisticLike {
        p: f64,
        q: f64,
        a: Coefficient,
        b: Coefficient,
    },
    /// `g = t^(q-1) - t^(r-1)`
    DoublePower { q: f64, r: f64 },
    /// `g = 0`
    Zero,
}

/// How `g` is continued to negative arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeExtension {
    Zero,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionSpec {
    pub family: ReactionFamily,
    pub negative_extension: Option<NegativeExtension>,
    /// Growth exponent sigma in `|g| <= C(1 + |t|^sigma)`.
    pub declared_growth: f64,
}

fn power(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if t == 0.0 {
        0.0
    } else {
        t.powf(e)
    }
}

impl ReactionSpec {
    /// Validates exponent ranges and sets the default negative extension
    /// (`Zero`) and growth exponent (largest exponent minus one).
    pub fn new(family: ReactionFamily) -> Result<Self, ModelError> {
        let bad = |m: String| Err(ModelError::Exponent(m));
        match &family {
            ReactionFamily::PureSubhomogeneous { q, .. } => {
                if !(*q > 1.0) {
                    return bad(format!("q = {q} must exceed 1"));
                }
            }
            ReactionFamily::TwoTerm { q, r, .. } => {
                if !(*q > 1.0) {
                    return bad(format!("q = {q} must exceed 1"));
                }
                if !(*r >= 1.0) || r == q {
                    return bad(format!("r = {r} must be at least 1 and differ from q"));
                }
            }
            ReactionFamily::LogisticLike { p, q, .. } => {
                if !(*p > 1.0 && q > p) {
                    return bad(format!("need q = {q} > p = {p} > 1"));
                }
            }
            ReactionFamily::DoublePower { q, r } => {
                if !(*q > 1.0 && r > q) {
                    return bad(format!("need r = {r} > q = {q} > 1"));
                }
            }
            ReactionFamily::Zero => {}
        }
        let mut spec = ReactionSpec {
            family,
            negative_extension: Some(NegativeExtension::Zero),
            declared_growth: 0.0,
        };
        spec.declared_growth = spec.largest_exponent() - 1.0;
        Ok(spec)
    }

    pub fn pure_subhomogeneous(q: f64, a: impl Into<Coefficient>) -> Result<Self, ModelError> {
        Self::new(ReactionFamily::PureSubhomogeneous { q, a: a.into() })
    }

    pub fn two_term(q: f64, r: f64, a: impl Into<Coefficient>, b: impl Into<Coefficient>) -> Result<Self, ModelError> {
        Self::new(ReactionFamily::TwoTerm {
            q,
            r,
            a: a.into(),
            b: b.into(),
        })
    }

    pub fn logistic(p: f64, q: f64, a: impl Into<Coefficient>, b: impl Into<Coefficient>) -> Result<Self, ModelError> {
        Self::new(ReactionFamily::LogisticLike {
            p,
            q,
            a: a.into(),
            b: b.into(),
        })
    }

    pub fn double_power(q: f64, r: f64) -> Result<Self, ModelError> {
        Self::new(ReactionFamily::DoublePower { q, r })
    }

    pub fn zero() -> Self {
        Self::new(ReactionFamily::Zero).expect("no exponents to check")
    }

    pub fn with_extension(mut self, ext: Option<NegativeExtension>) -> Self {
        self.negative_extension = ext;
        self
    }

    pub fn with_growth(mut self, sigma: f64) -> Self {
        self.declared_growth = sigma;
        self
    }

    /// Largest power of `t` appearing in `G`.
    pub fn largest_exponent(&self) -> f64 {
        match &self.family {
            ReactionFamily::PureSubhomogeneous { q, .. } => *q,
            ReactionFamily::TwoTerm { q, r, .. } | ReactionFamily::DoublePower { q, r } => q.max(*r),
            ReactionFamily::LogisticLike { q, .. } => *q,
            // any sigma > 0 bounds g = 0
            ReactionFamily::Zero => 2.0,
        }
    }

    /// The exponent at which `g(x,t)/t^(q-1)` is expected to be
    /// nonincreasing for this family; `None` for `g = 0`, where every
    /// exponent works.
    pub fn natural_q(&self) -> Option<f64> {
        match &self.family {
            ReactionFamily::PureSubhomogeneous { q, .. }
            | ReactionFamily::TwoTerm { q, .. }
            | ReactionFamily::DoublePower { q, .. } => Some(*q),
            ReactionFamily::LogisticLike { p, .. } => Some(*p),
            ReactionFamily::Zero => None,
        }
    }

    fn coefficients(&self) -> Vec<&Coefficient> {
        match &self.family {
            ReactionFamily::PureSubhomogeneous { a, .. } => vec![a],
            ReactionFamily::TwoTerm { a, b, .. } | ReactionFamily::LogisticLike { a, b, .. } => {
                vec![a, b]
            }
            ReactionFamily::DoublePower { .. } | ReactionFamily::Zero => vec![],
        }
    }

    /// Number of distinct nodes the coefficients vary over (1 if all are
    /// constants).
    pub fn node_count(&self) -> usize {
        self.coefficients()
            .iter()
            .filter_map(|c| c.grid())
            .map(|g| g.node_count())
            .next()
            .unwrap_or(1)
    }

    #[inline]
    fn g_nonneg(&self, node: usize, t: f64) -> f64 {
        match &self.family {
            ReactionFamily::PureSubhomogeneous { q, a } => a.at(node) * power(t, q - 1.0),
            ReactionFamily::TwoTerm { q, r, a, b } => a.at(node) * power(t, q - 1.0) + b.at(node) * power(t, r - 1.0),
            ReactionFamily::LogisticLike { p, q, a, b } => {
                a.at(node) * power(t, p - 1.0) - b.at(node) * power(t, q - 1.0)
            }
            ReactionFamily::DoublePower { q, r } => power(t, q - 1.0) - power(t, r - 1.0),
            ReactionFamily::Zero => 0.0,
        }
    }

    #[inline]
    fn big_g_nonneg(&self, node: usize, t: f64) -> f64 {
        match &self.family {
            ReactionFamily::PureSubhomogeneous { q, a } => a.at(node) * power(t, *q) / q,
            ReactionFamily::TwoTerm { q, r, a, b } => a.at(node) * power(t, *q) / q + b.at(node) * power(t, *r) / r,
            ReactionFamily::LogisticLike { p, q, a, b } => {
                a.at(node) * power(t, *p) / p - b.at(node) * power(t, *q) / q
            }
            ReactionFamily::DoublePower { q, r } => power(t, *q) / q - power(t, *r) / r,
            ReactionFamily::Zero => 0.0,
        }
    }

    /// Sum of the absolute values of the power terms of `g` at `t >= 0`.
    fn g_envelope(&self, node: usize, t: f64) -> f64 {
        let term = |c: f64, e: f64| c.abs() * power(t, e);
        match &self.family {
            ReactionFamily::PureSubhomogeneous { q, a } => term(a.at(node), q - 1.0),
            ReactionFamily::TwoTerm { q, r, a, b } => term(a.at(node), q - 1.0) + term(b.at(node), r - 1.0),
            ReactionFamily::LogisticLike { p, q, a, b } => term(a.at(node), p - 1.0) + term(b.at(node), q - 1.0),
            ReactionFamily::DoublePower { q, r } => term(1.0, q - 1.0) + term(1.0, r - 1.0),
            ReactionFamily::Zero => 0.0,
        }
    }

    /// `d/dt g(x_node, t)` for `t > 0`.
    pub(crate) fn dg_positive(&self, node: usize, t: f64) -> f64 {
        let d = |c: f64, e: f64| if e == 0.0 { 0.0 } else { c * e * t.powf(e - 1.0) };
        match &self.family {
            ReactionFamily::PureSubhomogeneous { q, a } => d(a.at(node), q - 1.0),
            ReactionFamily::TwoTerm { q, r, a, b } => d(a.at(node), q - 1.0) + d(b.at(node), r - 1.0),
            ReactionFamily::LogisticLike { p, q, a, b } => d(a.at(node), p - 1.0) - d(b.at(node), q - 1.0),
            ReactionFamily::DoublePower { q, r } => d(1.0, q - 1.0) - d(1.0, r - 1.0),
            ReactionFamily::Zero => 0.0,
        }
    }

    /// `g(x_node, t)`; NaN for negative `t` without an extension.
    #[inline]
    pub(crate) fn g(&self, node: usize, t: f64) -> f64 {
        if t >= 0.0 {
            return self.g_nonneg(node, t);
        }
        match self.negative_extension {
            Some(NegativeExtension::Zero) => 0.0,
            Some(NegativeExtension::Odd) => -self.g_nonneg(node, -t),
            None => f64::NAN,
        }
    }

    #[inline]
    pub(crate) fn big_g(&self, node: usize, t: f64) -> f64 {
        if t >= 0.0 {
            return self.big_g_nonneg(node, t);
        }
        match self.negative_extension {
            Some(NegativeExtension::Zero) => 0.0,
            // G is even when g is odd
            Some(NegativeExtension::Odd) => self.big_g_nonneg(node, -t),
            None => f64::NAN,
        }
    }

    fn check_arg(&self, t: f64) -> Result<(), ModelError> {
        if t < 0.0 && self.negative_extension.is_none() {
            Err(ModelError::NegativeArgument(t))
        } else {
            Ok(())
        }
    }

    pub fn g_eval(&self, node: usize, t: f64) -> Result<f64, ModelError> {
        self.check_arg(t)?;
        Ok(self.g(node, t))
    }

    pub fn big_g_eval(&self, node: usize, t: f64) -> Result<f64, ModelError> {
        self.check_arg(t)?;
        Ok(self.big_g(node, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Homogeneous Dirichlet data, the space `W_0^{1,p}`.
    DirichletZero,
    /// No boundary constraint, the space `W^{1,p}`.
    Natural,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Arc<Grid>,
    pub diffusion: DiffusionSpec,
    pub reaction: ReactionSpec,
    pub boundary: Boundary,
}

impl ProblemSpec {
    pub fn new(
        grid: Arc<Grid>,
        diffusion: DiffusionSpec,
        reaction: ReactionSpec,
        boundary: Boundary,
    ) -> Result<Self, ModelError> {
        for c in reaction.coefficients() {
            if let Some(g) = c.grid() {
                if !(Arc::ptr_eq(g, &grid) || **g == *grid) {
                    return Err(ModelError::CoefficientGrid);
                }
            }
        }
        let p = diffusion.p;
        match &reaction.family {
            ReactionFamily::LogisticLike { p: rp, .. } => {
                if (rp - p).abs() > 1e-12 {
                    return Err(ModelError::ExponentMismatch {
                        reaction_p: *rp,
                        diffusion_p: p,
                    });
                }
            }
            ReactionFamily::PureSubhomogeneous { q, .. }
            | ReactionFamily::TwoTerm { q, .. }
            | ReactionFamily::DoublePower { q, .. } => {
                if !(*q < p) {
                    return Err(ModelError::Exponent(format!(
                        "subhomogeneous exponent q = {q} must lie in (1, p = {p})"
                    )));
                }
            }
            ReactionFamily::Zero => {}
        }
        Ok(ProblemSpec {
            grid,
            diffusion,
            reaction,
            boundary,
        })
    }
}

/// 64 logarithmically spaced points in `(1e-6, 1e3)`.
pub fn default_samples() -> Vec<f64> {
    log_samples(1e-6, 1e3, 64)
}

pub fn log_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict<W> {
    Pass,
    Fail(W),
}

impl<W> Verdict<W> {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Witness of a monotonicity failure: the ratio rose between `t_pair.0`
/// and `t_pair.1` at `node`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioWitness {
    pub node: usize,
    pub t_pair: (f64, f64),
    pub ratios: (f64, f64),
}

/// Checks that `t -> g(x,t) / t^(q_test-1)` is nonincreasing on the samples
/// at every node.
pub fn audit_a2prime(rs: &ReactionSpec, q_test: f64, t_samples: &[f64]) -> Verdict<RatioWitness> {
    assert!(t_samples.len() >= 2, "need at least two samples");
    for node in 0..rs.node_count() {
        let ratio = |t: f64| rs.g(node, t) / t.powf(q_test - 1.0);
        for w in t_samples.windows(2) {
            let (r0, r1) = (ratio(w[0]), ratio(w[1]));
            if r1 - r0 > 1e-12 * r0.abs().max(1.0) {
                return Verdict::Fail(RatioWitness {
                    node,
                    t_pair: (w[0], w[1]),
                    ratios: (r0, r1),
                });
            }
        }
    }
    Verdict::Pass
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthAudit {
    pub sigma: f64,
    /// Smallest `C` with `|g| <= C(1 + t^sigma)` on the samples.
    pub constant: f64,
    /// Log-log slope over the last two samples of the sum of the absolute
    /// power terms of `g`, which bounds `|g|` and does not dip where the
    /// terms cancel.
    pub tail_exponent: f64,
    pub bounded: bool,
    /// `sigma (N - cap) <= (cap - 1) N + cap`.
    pub subcritical: bool,
}

impl GrowthAudit {
    pub fn passed(&self) -> bool {
        self.bounded && self.subcritical
    }
}

/// Allowed excess of the observed tail exponent over the declared sigma.
pub const GROWTH_EXPONENT_TOLERANCE: f64 = 1e-2;

/// Growth bound `|g(x,t)| <= C(1+|t|^sigma)` with the declared sigma, plus
/// the subcriticality condition for dimension `dimension` and Sobolev
/// exponent `exponent_cap`.
pub fn audit_a1_growth(rs: &ReactionSpec, exponent_cap: f64, dimension: usize, t_samples: &[f64]) -> GrowthAudit {
    assert!(t_samples.len() >= 2, "need at least two samples");
    let sigma = rs.declared_growth;
    let mut constant: f64 = 0.0;
    let mut tail_exponent = f64::NEG_INFINITY;
    let k = t_samples.len();
    let (t0, t1) = (t_samples[k - 2], t_samples[k - 1]);
    for node in 0..rs.node_count() {
        let ratio = |t: f64| rs.g(node, t).abs() / (1.0 + t.powf(sigma));
        for &t in t_samples {
            constant = constant.max(ratio(t));
        }
        let (g0, g1) = (rs.g_envelope(node, t0), rs.g_envelope(node, t1));
        if g0 > 0.0 && g1 > 0.0 {
            tail_exponent = tail_exponent.max((g1 / g0).ln() / (t1 / t0).ln());
        }
    }
    let n = dimension as f64;
    GrowthAudit {
        sigma,
        constant,
        tail_exponent,
        bounded: constant.is_finite() && tail_exponent <= sigma + GROWTH_EXPONENT_TOLERANCE,
        subcritical: sigma > 0.0 && sigma * (n - exponent_cap) <= (exponent_cap - 1.0) * n + exponent_cap,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionAudit {
    pub nonnegative: bool,
    pub nondecreasing: bool,
    /// Largest sampled value of `h`.
    pub sampled_sup: f64,
    /// Smallest `C` with `h(t) <= C(1 + t^(r/p-1))` on the samples, for the
    /// (p,r) family.
    pub growth_constant: Option<f64>,
}

pub fn audit_diffusion(d: &DiffusionSpec, t_samples: &[f64]) -> DiffusionAudit {
    let hs: Vec<f64> = t_samples.iter().map(|&t| d.h(t)).collect();
    let growth_constant = match d.family {
        DiffusionFamily::PowerShift { r } => Some(
            t_samples
                .iter()
                .zip(&hs)
                .map(|(t, h)| h / (1.0 + t.powf(r / d.p - 1.0)))
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    DiffusionAudit {
        nonnegative: hs.iter().all(|&h| h >= 0.0),
        nondecreasing: hs.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        sampled_sup: hs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        growth_constant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_interval_grid;
    use proptest::prelude::*;

    fn families() -> Vec<DiffusionSpec> {
        vec![
            DiffusionSpec::constant(2.0).unwrap(),
            DiffusionSpec::constant(1.5).unwrap(),
            DiffusionSpec::power_shift(2.0, 3.0).unwrap(),
            DiffusionSpec::power_shift(1.5, 4.0).unwrap(),
            DiffusionSpec::saturating(3.0).unwrap(),
        ]
    }

    fn reactions() -> Vec<ReactionSpec> {
        vec![
            ReactionSpec::pure_subhomogeneous(1.5, 2.0).unwrap(),
            ReactionSpec::two_term(1.5, 3.0, 1.0, -0.5).unwrap(),
            ReactionSpec::two_term(1.7, 1.2, -1.0, 0.5).unwrap(),
            ReactionSpec::logistic(2.0, 4.0, 4.0, 1.0).unwrap(),
            ReactionSpec::double_power(1.5, 3.0).unwrap(),
        ]
    }

    #[test]
    fn primitives_closed_form() {
        let c = DiffusionSpec::constant(2.0).unwrap();
        assert_eq!(c.big_h_eval(3.0).unwrap(), 3.0);
        let ps = DiffusionSpec::power_shift(2.0, 4.0).unwrap();
        assert!((ps.big_h_eval(4.0).unwrap() - 12.0).abs() < 1e-14);
        for d in families() {
            assert_eq!(d.big_h_eval(0.0).unwrap(), 0.0);
            assert!(d.h_eval(-1.0).is_err());
            assert!(d.big_h_eval(-1e-3).is_err());
        }
        let sat = DiffusionSpec::saturating(2.0).unwrap();
        assert!(sat.h(1e12) < 2.0);
    }

    #[test]
    fn rejects_bad_diffusion() {
        assert!(DiffusionSpec::constant(1.0).is_err());
        assert!(DiffusionSpec::power_shift(2.0, 2.0).is_err());
    }

    #[test]
    fn reaction_values() {
        let pure = ReactionSpec::pure_subhomogeneous(1.5, 1.0).unwrap();
        assert_eq!(pure.g_eval(0, 1.0).unwrap(), 1.0);
        assert!((pure.big_g_eval(0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let dp = ReactionSpec::double_power(1.5, 3.0).unwrap();
        assert_eq!(dp.g_eval(0, 1.0).unwrap(), 0.0);
        assert_eq!(pure.g_eval(0, -2.0).unwrap(), 0.0);
        assert_eq!(pure.big_g_eval(0, -2.0).unwrap(), 0.0);

        let odd = pure.clone().with_extension(Some(NegativeExtension::Odd));
        assert_eq!(odd.g_eval(0, -1.0).unwrap(), -1.0);
        assert!((odd.big_g_eval(0, -1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let none = pure.with_extension(None);
        assert_eq!(none.g_eval(0, -2.0), Err(ModelError::NegativeArgument(-2.0)));
        assert!(none.big_g_eval(0, -2.0).is_err());
    }

    #[test]
    fn rejects_bad_reaction_exponents() {
        assert!(ReactionSpec::pure_subhomogeneous(1.0, 1.0).is_err());
        assert!(ReactionSpec::double_power(1.5, 1.2).is_err());
        assert!(ReactionSpec::logistic(2.0, 1.5, 1.0, 1.0).is_err());
        assert!(ReactionSpec::two_term(1.5, 1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn problem_spec_checks_exponents() {
        let g = Arc::new(build_interval_grid(4, 0.0, 1.0).unwrap());
        let d = DiffusionSpec::constant(2.0).unwrap();
        let bad = ReactionSpec::pure_subhomogeneous(2.5, 1.0).unwrap();
        assert!(ProblemSpec::new(g.clone(), d, bad, Boundary::DirichletZero).is_err());
        let mismatch = ReactionSpec::logistic(3.0, 4.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            ProblemSpec::new(g.clone(), d, mismatch, Boundary::Natural),
            Err(ModelError::ExponentMismatch { .. })
        ));
        let other = Arc::new(build_interval_grid(5, 0.0, 1.0).unwrap());
        let a = ScalarField::constant(&other, 1.0);
        let wrong_grid = ReactionSpec::pure_subhomogeneous(1.5, a).unwrap();
        assert_eq!(
            ProblemSpec::new(g, d, wrong_grid, Boundary::Natural).unwrap_err(),
            ModelError::CoefficientGrid
        );
    }

    #[test]
    fn a2prime_examples() {
        let s = default_samples();
        let g = Arc::new(build_interval_grid(8, 0.0, 1.0).unwrap());
        let a = ScalarField::from_fn(&g, |x| (6.0 * x[0]).sin()).unwrap();
        let pure = ReactionSpec::pure_subhomogeneous(1.5, a).unwrap();
        assert!(audit_a2prime(&pure, 1.5, &s).passed());

        // g = t^(p-1) with p = 2 as the logistic family with b = 0
        let linear = ReactionSpec::logistic(2.0, 3.0, 1.0, 0.0).unwrap();
        match audit_a2prime(&linear, 1.5, &s) {
            Verdict::Fail(w) => assert!(w.ratios.1 > w.ratios.0),
            Verdict::Pass => panic!("t^(p - q) is increasing"),
        }
        let dp = ReactionSpec::double_power(1.5, 3.0).unwrap();
        assert!(audit_a2prime(&dp, 1.5, &s).passed());
        let logistic = ReactionSpec::logistic(2.0, 4.0, 4.0, 1.0).unwrap();
        assert!(audit_a2prime(&logistic, 2.0, &s).passed());
    }

    #[test]
    fn a1_examples() {
        let s = default_samples();
        let pure = ReactionSpec::pure_subhomogeneous(1.5, 1.0).unwrap();
        let audit = audit_a1_growth(&pure, 2.0, 1, &s);
        assert_eq!(audit.sigma, 0.5);
        assert!(audit.passed(), "{audit:?}");
        for sigma in [0.5, 1.0, 7.0] {
            assert!(audit_a1_growth(&pure.clone().with_growth(sigma), 2.0, 1, &s).subcritical);
        }

        let dp = ReactionSpec::double_power(1.5, 3.0).unwrap().with_growth(2.0);
        let audit = audit_a1_growth(&dp, 2.0, 1, &s);
        assert!(audit.passed(), "{audit:?}");
        assert!(audit.constant <= 1.0);

        let low = ReactionSpec::double_power(1.5, 3.0).unwrap().with_growth(1.5);
        assert!(!audit_a1_growth(&low, 2.0, 1, &s).bounded);

        // supercritical in 3D: sigma (3 - 2) <= 1*3 + 2 fails for sigma > 5
        let hi = ReactionSpec::pure_subhomogeneous(1.5, 1.0).unwrap().with_growth(6.0);
        assert!(!audit_a1_growth(&hi, 2.0, 3, &s).subcritical);
    }

    #[test]
    fn diffusion_audits() {
        let s = default_samples();
        for d in families() {
            let a = audit_diffusion(&d, &s);
            assert!(a.nonnegative && a.nondecreasing);
        }
        let sat = audit_diffusion(&DiffusionSpec::saturating(2.0).unwrap(), &s);
        assert!(sat.sampled_sup <= 2.0);
        let ps = audit_diffusion(&DiffusionSpec::power_shift(2.0, 3.0).unwrap(), &s);
        assert!(ps.growth_constant.unwrap() <= 1.0 + 1e-15);
    }

    #[test]
    fn h_primitive_is_convex_nondecreasing() {
        let s = log_samples(1e-6, 1e2, 200);
        for d in families() {
            let hs: Vec<f64> = s.iter().map(|&t| d.big_h(t)).collect();
            for w in hs.windows(2) {
                assert!(w[1] >= w[0]);
            }
            // second differences on a uniform grid
            let u: Vec<f64> = (0..200).map(|k| d.big_h(k as f64 * 0.5)).collect();
            for w in u.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12 * w[1].abs().max(1.0));
            }
        }
    }

    #[test]
    fn g_pullback_concave_for_a2prime_families() {
        let s: Vec<f64> = (1..400).map(|k| k as f64 * 0.05).collect();
        for rs in reactions() {
            let q = rs.natural_q().unwrap();
            if !audit_a2prime(&rs, q, &default_samples()).passed() {
                continue;
            }
            let v: Vec<f64> = s.iter().map(|&x| rs.big_g(0, x.powf(1.0 / q))).collect();
            for w in v.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-10, "{rs:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn h_primitive_derivative(t in 0.01f64..100.0) {
            for d in families() {
                let e = 1e-6 * t.max(1.0);
                let fd = (d.big_h(t + e) - d.big_h(t - e)) / (2.0 * e);
                let h = d.h(t);
                prop_assert!((fd - h).abs() <= 1e-6 * h.abs().max(1.0));
            }
        }

        #[test]
        fn g_primitive_derivative(t in 0.05f64..20.0, neg in any::<bool>()) {
            for rs in reactions() {
                let rs = rs.with_extension(Some(NegativeExtension::Odd));
                let t = if neg { -t } else { t };
                let e = 1e-6 * t.abs().max(1.0);
                let fd = (rs.big_g(0, t + e) - rs.big_g(0, t - e)) / (2.0 * e);
                let g = rs.g(0, t);
                prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1.0), "{:?} {} {}", rs.family, fd, g);
            }
        }

        #[test]
        fn g_derivative_matches_differences(t in 0.05f64..20.0) {
            for rs in reactions() {
                let e = 1e-6 * t;
                let fd = (rs.g(0, t + e) - rs.g(0, t - e)) / (2.0 * e);
                let dg = rs.dg_positive(0, t);
                prop_assert!((fd - dg).abs() <= 1e-5 * dg.abs().max(1.0), "{:?} {} {}", rs.family, fd, dg);
            }
        }
    }
}
