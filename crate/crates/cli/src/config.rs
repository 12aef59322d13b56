//! Experiment configuration. Every section has defaults, so a config file
//! only needs to name what differs from `print-defaults`.

use std::fmt;

use besovlab_core::limits::EpsilonGrid;
use besovlab_core::mollifiers::MollifierKind;
use besovlab_core::quadrature::singular::Method;
use besovlab_core::seminorms::FunctionalParams;
use besovlab_core::{Field, KernelKind, MollifierSpec, QuadBudget, Region, SphereRule};
use serde::{Deserialize, Serialize};

/// A validation failure tied to a config path such as `params.r`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

fn bad<T>(path: impl Into<String>, message: impl fmt::Display) -> Result<T, ConfigError> {
    Err(ConfigError { path: path.into(), message: message.to_string() })
}

/// Attach a path to an error raised by the numerical core.
fn at<T>(path: &str, r: besovlab_core::Result<T>) -> Result<T, ConfigError> {
    r.or_else(|e| bad(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    KernelAudit,
    Constants,
    Sandwich,
    KernelEquivalence,
    JumpChain,
    Interpolation,
    TruncationConvergence,
    BoundsAudit,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::KernelAudit => "kernel_audit",
            ExperimentKind::Constants => "constants",
            ExperimentKind::Sandwich => "sandwich",
            ExperimentKind::KernelEquivalence => "kernel_equivalence",
            ExperimentKind::JumpChain => "jump_chain",
            ExperimentKind::Interpolation => "interpolation",
            ExperimentKind::TruncationConvergence => "truncation_convergence",
            ExperimentKind::BoundsAudit => "bounds_audit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionConfig {
    Whole,
    Interval { a: f64, b: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Complement { inner: std::boxed::Box<RegionConfig> },
    Union { parts: Vec<RegionConfig> },
}

impl RegionConfig {
    pub fn build(&self, dim: usize, path: &str) -> Result<Region, ConfigError> {
        let len = |v: &[f64], key: &str| {
            if v.len() != dim {
                bad(format!("{path}.{key}"), format!("expected {dim} coordinates, got {}", v.len()))
            } else if v.iter().any(|x| !x.is_finite()) {
                bad(format!("{path}.{key}"), "coordinates must be finite")
            } else {
                Ok(())
            }
        };
        Ok(match self {
            RegionConfig::Whole => Region::Whole,
            RegionConfig::Interval { a, b } => {
                if dim != 1 {
                    return bad(path, "an interval needs a one-dimensional field");
                }
                if !(a < b) {
                    return bad(format!("{path}.b"), "interval needs a < b");
                }
                Region::interval(*a, *b)
            }
            RegionConfig::Box { lo, hi } => {
                len(lo, "lo")?;
                len(hi, "hi")?;
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return bad(format!("{path}.hi"), "box needs lo < hi on every axis");
                }
                Region::boxed(lo, hi)
            }
            RegionConfig::Ball { center, radius } => {
                len(center, "center")?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad(format!("{path}.radius"), "radius must be positive");
                }
                Region::ball(center, *radius)
            }
            RegionConfig::HalfSpace { normal, offset } => {
                len(normal, "normal")?;
                Region::half_space(normal, *offset)
            }
            RegionConfig::Complement { inner } => Region::complement(inner.build(dim, &format!("{path}.inner"))?),
            RegionConfig::Union { parts } => Region::Union(
                parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.build(dim, &format!("{path}.parts[{i}]")))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub region: RegionConfig,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    /// `amplitude` on `[a, b)`.
    Step { a: f64, b: f64, amplitude: f64 },
    BallIndicator { center: Vec<f64>, radius: f64, amplitude: f64 },
    GaussianBump { center: Vec<f64>, sigma: f64, amplitude: Vec<f64> },
    RotatedStep { angle: f64 },
    PiecewiseConstant { dim: usize, background: Vec<f64>, pieces: Vec<PieceConfig> },
}

impl FieldConfig {
    pub fn dim(&self) -> usize {
        match self {
            FieldConfig::Step { .. } | FieldConfig::RotatedStep { .. } => 1,
            FieldConfig::BallIndicator { center, .. } | FieldConfig::GaussianBump { center, .. } => center.len(),
            FieldConfig::PiecewiseConstant { dim, .. } => *dim,
        }
    }

    pub fn build(&self) -> Result<Field, ConfigError> {
        let dim = self.dim();
        if !(1..=3).contains(&dim) {
            return bad("field", format!("dimension {dim} is not supported (1..=3)"));
        }
        match self {
            FieldConfig::Step { a, b, amplitude } => at("field", Field::step(*a, *b, *amplitude)),
            FieldConfig::BallIndicator { center, radius, amplitude } => {
                at("field", Field::ball_indicator(center, *radius, *amplitude))
            }
            FieldConfig::GaussianBump { center, sigma, amplitude } => {
                at("field", Field::gaussian_bump(center, *sigma, amplitude))
            }
            FieldConfig::RotatedStep { angle } => at("field.angle", Field::rotated_step(*angle)),
            FieldConfig::PiecewiseConstant { dim, background, pieces } => {
                let ps = pieces
                    .iter()
                    .enumerate()
                    .map(|(i, p)| Ok((p.region.build(*dim, &format!("field.pieces[{i}].region"))?, p.values.clone())))
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                at("field", Field::piecewise_constant(*dim, ps, background))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    /// Defaults to `1/q` when omitted.
    pub r: Option<f64>,
    pub q: f64,
    pub p: Option<f64>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig { r: None, q: 2.0, p: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierName {
    Tent,
    TruncatedGaussian,
    SmoothBump,
    SignedTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifierConfig {
    pub kind: MollifierName,
    /// Cut radius of the truncated Gaussian, in standard deviations.
    pub cut: f64,
    pub gain: f64,
    pub width: f64,
}

impl Default for MollifierConfig {
    fn default() -> Self {
        MollifierConfig { kind: MollifierName::Tent, cut: 6.0, gain: 1.0, width: 1.0 }
    }
}

impl MollifierConfig {
    pub fn build(&self, dim: usize) -> Result<MollifierSpec, ConfigError> {
        let kind = match self.kind {
            MollifierName::Tent => MollifierKind::Tent,
            MollifierName::TruncatedGaussian => MollifierKind::TruncatedGaussian { cut: self.cut },
            MollifierName::SmoothBump => MollifierKind::SmoothBump,
            MollifierName::SignedTest => MollifierKind::SignedTest,
        };
        let m = at("mollifier.kind", MollifierSpec::new(kind, dim))?;
        let m = at("mollifier.width", m.with_width(self.width))?;
        at("mollifier.gain", m.with_gain(self.gain))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Polar,
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub max_evaluations: u64,
    pub target_rel_error: f64,
    pub method: MethodName,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig { max_evaluations: 20_000, target_rel_error: 1e-6, method: MethodName::Polar }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative, for chains of variations and Besov constants.
    pub variation: f64,
    /// Relative, for chains involving Gagliardo constants.
    pub gagliardo: f64,
    /// Closed-form identities.
    pub identity: f64,
    /// Absolute threshold for terms expected to vanish.
    pub vanishing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { variation: 0.05, gagliardo: 0.10, identity: 1e-6, vanishing: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub dims: Vec<usize>,
    /// `|ln eps|` range of the audit sweep.
    pub abs_ln_min: f64,
    pub abs_ln_max: f64,
    pub count: usize,
    pub delta: f64,
    pub alpha: f64,
    pub mass_tolerance: f64,
    pub moment_tolerance: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            dims: vec![1, 2, 3],
            abs_ln_min: 2.0,
            abs_ln_max: 1e4,
            count: 10,
            delta: 0.1,
            alpha: 1.0,
            mass_tolerance: 1e-9,
            moment_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    pub dims: Vec<usize>,
    pub q_list: Vec<f64>,
    /// Allowed gap between the quadrature and closed-form `moment1`.
    pub nc_tolerance: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig { dims: vec![1, 2, 3], q_list: vec![1.0, 2.0, 3.0], nc_tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectionalConfig {
    pub epsilon: f64,
    /// Empty means the coordinate axes plus the diagonal (or `0.5, 1, 2` in 1D).
    pub directions: Vec<Vec<f64>>,
}

impl Default for DirectionalConfig {
    fn default() -> Self {
        DirectionalConfig { epsilon: 1e-3, directions: Vec::new() }
    }
}

impl DirectionalConfig {
    pub fn directions_for(&self, dim: usize) -> Vec<Vec<f64>> {
        if !self.directions.is_empty() {
            return self.directions.clone();
        }
        let d = std::f64::consts::FRAC_1_SQRT_2;
        match dim {
            1 => vec![vec![0.5], vec![1.0], vec![2.0]],
            2 => vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![d, d]],
            _ => vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![d, d, 0.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    pub levels: Vec<f64>,
    /// Relative gap allowed between terms at saturated levels and the untruncated terms.
    pub exact_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolationConfig {
    /// Also require equality, which holds for single-jump-height 1D steps.
    pub expect_equality: bool,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        InterpolationConfig { expect_equality: true }
    }
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { levels: vec![0.5, 1.0, 2.0, 3.0, 4.0], exact_tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// `[eps, beta, gamma]` triples for the three-region split.
    pub splits: Vec<[f64; 3]>,
    pub shifts: Vec<Vec<f64>>,
    pub lq_epsilons: Vec<f64>,
    /// Multiple of the quadrature error added to a bound before comparing.
    pub error_factor: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            splits: vec![
                [0.1, 0.05, 0.5],
                [0.05, 0.01, 0.2],
                [0.01, 0.005, 0.1],
                [0.01, 0.02, 1.0],
                [0.001, 0.0005, 0.05],
            ],
            shifts: vec![vec![0.05], vec![0.5], vec![4.0]],
            lq_epsilons: vec![0.1, 0.01, 0.001],
            error_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub field: FieldConfig,
    pub region: RegionConfig,
    pub params: ParamsConfig,
    pub mollifier: MollifierConfig,
    pub kernels: Vec<KernelKind>,
    /// Scales for variations and Besov constants.
    pub grid: EpsilonGrid,
    /// Scales for Gagliardo constants.
    pub gagliardo_grid: EpsilonGrid,
    pub budget: BudgetConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
    pub audit: AuditConfig,
    pub constants: ConstantsConfig,
    pub directional: DirectionalConfig,
    pub truncation: TruncationConfig,
    pub interpolation: InterpolationConfig,
    pub bounds: BoundsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::JumpChain,
            seed: 1,
            field: FieldConfig::Step { a: 0.0, b: 1.0, amplitude: 1.0 },
            region: RegionConfig::Interval { a: -1.0, b: 2.0 },
            params: ParamsConfig::default(),
            mollifier: MollifierConfig::default(),
            kernels: vec![KernelKind::Trivial, KernelKind::Logarithmic { omega: 0.5 }, KernelKind::SigmaApprox { ratio: 0.5 }],
            grid: EpsilonGrid::default_variation(),
            gagliardo_grid: EpsilonGrid::default_gagliardo(),
            budget: BudgetConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
            audit: AuditConfig::default(),
            constants: ConstantsConfig::default(),
            directional: DirectionalConfig::default(),
            truncation: TruncationConfig::default(),
            interpolation: InterpolationConfig::default(),
            bounds: BoundsConfig::default(),
        }
    }
}

/// The pieces of a validated config the experiments consume.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub field: Field,
    pub region: Region,
    pub params: FunctionalParams,
    pub mollifier: MollifierSpec,
    pub budget: QuadBudget,
    pub method: Method,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn functional_params(&self) -> Result<FunctionalParams, ConfigError> {
        let ParamsConfig { r, q, p } = self.params;
        if !(q >= 1.0 && q.is_finite()) {
            return bad("params.q", format!("q must lie in [1, inf), got {q}"));
        }
        let r = r.unwrap_or(1.0 / q);
        if !(r > 0.0 && r < 1.0) {
            return bad("params.r", format!("r must lie in (0, 1), got {r}"));
        }
        let jump_kinds = matches!(
            self.kind,
            ExperimentKind::JumpChain | ExperimentKind::KernelEquivalence | ExperimentKind::Sandwich | ExperimentKind::TruncationConvergence
        );
        if jump_kinds && (r * q - 1.0).abs() > 1e-12 {
            return bad("params.r", format!("{} needs r = 1/q, got r = {r}, q = {q}", self.kind.name()));
        }
        let mut fp = FunctionalParams::new(r, q, Region::Whole).or_else(|e| bad("params", e))?;
        if let Some(p) = p {
            fp = fp.with_p(p).or_else(|e| bad("params.p", e))?;
        }
        if self.kind == ExperimentKind::Interpolation && fp.p.is_none() {
            return bad("params.p", "interpolation needs p > q");
        }
        if self.kind == ExperimentKind::Interpolation && !(q > 1.0) {
            return bad("params.q", "interpolation needs q > 1");
        }
        Ok(fp)
    }

    pub fn quad_budget(&self) -> Result<QuadBudget, ConfigError> {
        at("budget", QuadBudget::new(self.budget.max_evaluations, self.budget.target_rel_error, self.seed))
    }

    pub fn method(&self) -> Method {
        match self.budget.method {
            MethodName::Polar => Method::Polar(SphereRule::default_for(self.dim())),
            MethodName::Stratified => Method::Stratified,
        }
    }

    /// Check every field the experiment kind reads and build the core objects.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let field = self.field.build()?;
        let dim = field.dim;
        let region = self.region.build(dim, "region")?;
        let mut params = self.functional_params()?;
        params.region = region.clone();
        let mollifier = self.mollifier.build(dim)?;
        let budget = self.quad_budget()?;
        at("grid", self.grid.validate())?;
        at("gagliardo_grid", self.gagliardo_grid.validate())?;
        if let EpsilonGrid::Geometric { eps0, .. } = self.gagliardo_grid {
            if eps0 >= (-1.0f64).exp() {
                return bad("gagliardo_grid.eps0", "gagliardo constants need epsilon < 1/e");
            }
        }
        if let EpsilonGrid::LogUniform { abs_ln_min, .. } = self.gagliardo_grid {
            if abs_ln_min <= 1.0 {
                return bad("gagliardo_grid.abs_ln_min", "gagliardo constants need |ln eps| > 1");
            }
        }
        for (name, t) in [
            ("variation", self.tolerances.variation),
            ("gagliardo", self.tolerances.gagliardo),
            ("identity", self.tolerances.identity),
            ("vanishing", self.tolerances.vanishing),
        ] {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("tolerances.{name}"), "tolerances must be finite and nonnegative");
            }
        }
        for (i, k) in self.kernels.iter().enumerate() {
            at(&format!("kernels[{i}]"), besovlab_core::RadialKernelFamily::new(*k, dim))?;
        }
        match self.kind {
            ExperimentKind::KernelEquivalence | ExperimentKind::JumpChain if self.kernels.is_empty() => {
                return bad("kernels", "at least one kernel is required");
            }
            ExperimentKind::JumpChain | ExperimentKind::TruncationConvergence if !field.is_piecewise_constant() => {
                return bad("field", "needs a piecewise-constant field with a known jump set");
            }
            ExperimentKind::JumpChain => {
                for (i, n) in self.directional.directions_for(dim).iter().enumerate() {
                    if n.len() != dim {
                        return bad(format!("directional.directions[{i}]"), format!("expected {dim} components"));
                    }
                }
                if !(self.directional.epsilon > 0.0) {
                    return bad("directional.epsilon", "must be positive");
                }
            }
            ExperimentKind::TruncationConvergence if self.truncation.levels.is_empty() => {
                return bad("truncation.levels", "at least one level is required");
            }
            ExperimentKind::TruncationConvergence => {
                if self.truncation.levels.iter().any(|l| !(*l >= 0.0)) {
                    return bad("truncation.levels", "levels must be nonnegative");
                }
                if self.truncation.levels.windows(2).any(|w| w[1] < w[0]) {
                    return bad("truncation.levels", "levels must be nondecreasing");
                }
            }
            ExperimentKind::BoundsAudit => {
                for (i, [e, b, g]) in self.bounds.splits.iter().enumerate() {
                    if !(*e > 0.0 && *b > 0.0 && g > b) {
                        return bad(format!("bounds.splits[{i}]"), "needs eps > 0 and 0 < beta < gamma");
                    }
                }
                for (i, h) in self.bounds.shifts.iter().enumerate() {
                    if h.len() != dim {
                        return bad(format!("bounds.shifts[{i}]"), format!("expected {dim} components"));
                    }
                }
            }
            ExperimentKind::KernelAudit => {
                if self.audit.dims.iter().any(|d| !(1..=3).contains(d)) {
                    return bad("audit.dims", "dimensions must lie in 1..=3");
                }
                if !(self.audit.abs_ln_min > 1.0 && self.audit.abs_ln_max > self.audit.abs_ln_min) || self.audit.count < 2 {
                    return bad("audit", "needs 1 < abs_ln_min < abs_ln_max and count >= 2");
                }
            }
            ExperimentKind::Constants => {
                if self.constants.dims.iter().any(|d| !(1..=3).contains(d)) {
                    return bad("constants.dims", "dimensions must lie in 1..=3");
                }
                if self.constants.q_list.iter().any(|q| !(*q > 0.0)) {
                    return bad("constants.q_list", "exponents must be positive");
                }
            }
            _ => {}
        }
        let method = self.method();
        Ok(Resolved { field, region, params, mollifier, budget, method })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let d = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&d.to_toml()).unwrap();
        assert_eq!(back, d);
        d.resolve().unwrap();
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let c = ExperimentConfig::from_toml("kind = \"sandwich\"\n[params]\nq = 3.0\n").unwrap();
        assert_eq!(c.kind, ExperimentKind::Sandwich);
        assert_eq!(c.budget, BudgetConfig::default());
        let p = c.functional_params().unwrap();
        assert!((p.r - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors_name_paths() {
        let c = ExperimentConfig::from_toml("kind = \"bounds_audit\"\n[params]\nr = 1.5\n").unwrap();
        assert_eq!(c.resolve().unwrap_err().path, "params.r");
        let c = ExperimentConfig::from_toml("[params]\nr = 0.3\n").unwrap();
        assert_eq!(c.resolve().unwrap_err().path, "params.r");
        let c = ExperimentConfig::from_toml("kind = \"interpolation\"\n").unwrap();
        assert_eq!(c.resolve().unwrap_err().path, "params.p");
        let c = ExperimentConfig::from_toml("[region]\ntype = \"ball\"\ncenter = [0.0, 0.0]\nradius = 1.0\n").unwrap();
        assert_eq!(c.resolve().unwrap_err().path, "region.center");
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn nested_regions() {
        let c = ExperimentConfig::from_toml(
            "[field]\ntype = \"ball_indicator\"\ncenter = [0.0, 0.0]\nradius = 0.5\namplitude = 1.0\n\
             [region]\ntype = \"complement\"\ninner = { type = \"half_space\", normal = [1.0, 0.0], offset = 0.0 }\n",
        )
        .unwrap();
        let r = c.resolve().unwrap();
        assert!(r.region.contains(&[1.0, 0.0, 0.0]));
        assert!(!r.region.contains(&[-1.0, 0.0, 0.0]));
    }
}
