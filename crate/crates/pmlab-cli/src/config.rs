//! Strict JSON run-configuration schema.
//!
//! A run is one JSON document: a `command` selecting the operation plus
//! the sections that operation reads.  Unknown keys are rejected
//! everywhere, every numeric knob is validated before any computation
//! starts, and a seed is demanded up front whenever the selected
//! operation has a Monte Carlo path, so a run can never silently fall
//! back to nondeterminism.

use serde::Deserialize;

use pmlab::error::{Error, Result};
use pmlab::exponents::Params;
use pmlab::geometry::{Cylinder, QuadratureSpec};
use pmlab::solutions::ExactSolution;

/// Top-level run configuration (one JSON document).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Operation to run.
    pub command: CommandKind,
    /// RNG seed; mandatory when the command has a Monte Carlo path
    /// (`--seed` overrides it).
    #[serde(default)]
    pub seed: Option<u64>,
    /// Shared exponent bundle (N, m, r, p) for commands that need one.
    #[serde(default)]
    pub params: Option<ParamsConfig>,
    /// Quadrature controls; defaults match the library's defaults.
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Exact solution selection for field-driven commands.
    #[serde(default)]
    pub solution: Option<SolutionConfig>,
    /// Section for `command = "exponents"`.
    #[serde(default)]
    pub exponents: Option<ExponentsConfig>,
    /// Section for `command = "solution"`.
    #[serde(default)]
    pub solution_report: Option<SolutionReportConfig>,
    /// Section for `command = "probe"`.
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
    /// Section for `command = "cylinders"`.
    #[serde(default)]
    pub cylinders: Option<CylindersConfig>,
    /// Section for `command = "cover"`.
    #[serde(default)]
    pub cover: Option<CoverConfig>,
    /// Section for `command = "verify"`: the ordered check batch.
    #[serde(default)]
    pub checks: Option<Vec<CheckConfig>>,
    /// Section for `command = "solve"`.
    #[serde(default)]
    pub solve: Option<SolveConfig>,
}

/// The seven operations of the laboratory frontend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Exponents,
    Solution,
    Probe,
    Cylinders,
    Cover,
    Verify,
    Solve,
}

impl RunConfig {
    /// Effective seed after the command-line override.
    pub fn seed_with_override(&self, cli_seed: Option<u64>) -> Option<u64> {
        cli_seed.or(self.seed)
    }

    /// Rejects configurations whose command has a Monte Carlo path but
    /// no seed — determinism must be pinned before the run starts.
    pub fn require_seed_for_monte_carlo(&self, cli_seed: Option<u64>) -> Result<()> {
        let needs_seed = match self.command {
            CommandKind::Cover => true,
            CommandKind::Verify => self
                .checks
                .iter()
                .flatten()
                .any(|c| matches!(c, CheckConfig::PowerIneq { .. })),
            _ => false,
        };
        if needs_seed && self.seed_with_override(cli_seed).is_none() {
            return Err(Error::Config(
                "path 'seed': a seed is mandatory for Monte Carlo sampling \
                 (set \"seed\" in the config or pass --seed)"
                    .to_string(),
            ));
        }
        Ok(())
    }

    /// The shared exponent bundle, or a config error naming its path.
    pub fn params(&self) -> Result<Params> {
        self.params
            .as_ref()
            .ok_or_else(|| Error::Config("path 'params': section required by this command".into()))?
            .build()
    }

    /// The configured exact solution, or a config error naming its path.
    pub fn solution(&self) -> Result<ExactSolution> {
        self.solution
            .as_ref()
            .ok_or_else(|| {
                Error::Config("path 'solution': section required by this command".into())
            })?
            .build()
    }
}

/// Exponent bundle (N, m, r, p).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n: u32,
    pub m: f64,
    pub r: f64,
    pub p: f64,
}

impl ParamsConfig {
    pub fn build(&self) -> Result<Params> {
        Params::new(self.n, self.m, self.r, self.p)
    }
}

/// Quadrature controls mirroring [`QuadratureSpec`]; absent fields keep
/// the library defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub time_order: Option<usize>,
    pub r_min: Option<f64>,
    pub max_depth: Option<usize>,
    pub mc_samples: Option<u64>,
}

impl QuadratureConfig {
    pub fn build(&self) -> Result<QuadratureSpec> {
        let d = QuadratureSpec::default();
        let spec = QuadratureSpec {
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            time_order: self.time_order.unwrap_or(d.time_order),
            r_min: self.r_min.unwrap_or(d.r_min),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            mc_samples: self.mc_samples.unwrap_or(d.mc_samples),
        };
        if !(spec.rel_tol > 0.0 && spec.abs_tol > 0.0 && spec.r_min > 0.0) {
            return Err(Error::Config(
                "path 'quadrature': tolerances and r_min must be positive".into(),
            ));
        }
        if spec.time_order == 0 || spec.max_depth == 0 {
            return Err(Error::Config(
                "path 'quadrature': time_order and max_depth must be positive".into(),
            ));
        }
        Ok(spec)
    }
}

/// Exact-solution selection by name.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolutionConfig {
    /// Separable singular solution (needs N ≥ 3, 0 < m < (N−2)/(N+2)).
    Separable { n: u32, m: f64, t_ext: f64 },
    /// Two-parameter singular solution with amplitude `a`.
    KingKosov { n: u32, m: f64, t_ext: f64, a: f64 },
    /// Critical-exponent solution with quadrature-built forcing.
    KosovCritical { n: u32, t_ext: f64 },
}

impl SolutionConfig {
    pub fn build(&self) -> Result<ExactSolution> {
        match *self {
            SolutionConfig::Separable { n, m, t_ext } => ExactSolution::separable(n, m, t_ext),
            SolutionConfig::KingKosov { n, m, t_ext, a } => {
                ExactSolution::king_kosov(n, m, t_ext, a)
            }
            SolutionConfig::KosovCritical { n, t_ext } => ExactSolution::kosov_critical(n, t_ext),
        }
    }

    /// Stable name for reports.
    pub fn name(&self) -> &'static str {
        match self {
            SolutionConfig::Separable { .. } => "separable",
            SolutionConfig::KingKosov { .. } => "king-kosov",
            SolutionConfig::KosovCritical { .. } => "kosov-critical",
        }
    }
}

/// `exponents` command: a grid of exponent bundles to tabulate.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub grid: Vec<ParamsConfig>,
}

/// `solution` command: residual and asymptotics sampling.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionReportConfig {
    /// Radial sample points (must avoid the singular axis).
    pub s_samples: Vec<f64>,
    /// Time sample points inside the solution's domain.
    pub t_samples: Vec<f64>,
    /// Centered finite-difference step of the residual stencil.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Verdict threshold on max |residual| (absent = report only).
    #[serde(default)]
    pub max_residual: Option<f64>,
    /// Radii at which the forcing is compared to its small-r asymptote
    /// (solutions with forcing only).
    #[serde(default)]
    pub asymptote_radii: Vec<f64>,
    /// Verdict band for the forcing/asymptote ratio, e.g. [0.9, 1.1].
    #[serde(default)]
    pub asymptote_band: Option<[f64; 2]>,
}

fn default_fd_step() -> f64 {
    1e-5
}

/// `probe` command: gradient-integrability probe of a singular solution.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Ascending exponent grid that must bracket the critical exponent.
    pub s_grid: Vec<f64>,
    /// Number of dyadic annuli per fitted decay sequence (≥ 10).
    #[serde(default = "default_annuli")]
    pub annuli: u32,
    /// Expected integrability gain for the verdict (absent = report only).
    #[serde(default)]
    pub expected_eps: Option<f64>,
    /// Relative tolerance of the expected-gain verdict.
    #[serde(default = "default_probe_rel_tol")]
    pub rel_tol: f64,
}

fn default_annuli() -> u32 {
    12
}

fn default_probe_rel_tol() -> f64 {
    0.05
}

/// One base point of a `cylinders` run.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasePoint {
    pub center_dist: f64,
    pub t_center: f64,
}

/// `cylinders` command: build and audit concentric θ-systems.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylindersConfig {
    pub base_points: Vec<BasePoint>,
    /// Outer radius R of each system.
    pub r_outer: f64,
    /// Smallest grid radius (default R/16).
    #[serde(default)]
    pub r_min: Option<f64>,
    /// Logarithmic grid density.
    #[serde(default = "default_ppd")]
    pub points_per_decade: u32,
    /// Scaling floor λ_o; absent = computed from the field on Q_{4R}.
    #[serde(default)]
    pub lambda_o: Option<f64>,
    /// Grid stride of the quadratic sub-intrinsic audit (1 = all pairs).
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Slack multiplier on the ≤ 1 verdicts; absorbs quadrature noise.
    #[serde(default = "default_invariant_slack")]
    pub slack: f64,
}

fn default_ppd() -> u32 {
    4
}

fn default_stride() -> usize {
    1
}

fn default_invariant_slack() -> f64 {
    1.0 + 1e-9
}

/// Enlargement-constant mode of a `cover` run.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CHatMode {
    /// Proof-grade constant from the exponent bundle (huge).
    Proof,
    /// Empirical stand-in (20), exercising the fallback containment.
    Test,
}

/// `cover` command: one randomized Vitali-type covering family.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverConfig {
    /// Number of candidate cylinders to draw.
    pub count: usize,
    /// Outer radius R bounding the candidate base radii by R/ĉ.
    pub r_outer: f64,
    /// Enlargement-constant mode.
    pub c_hat: CHatMode,
    /// Upper bound of the log-uniform θ draw (lower bound is 1).
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    /// Half-width of the uniform temporal-center draw.
    #[serde(default = "default_time_span")]
    pub time_span: f64,
    /// Number of octaves below R/ĉ spanned by the log-uniform radius draw.
    #[serde(default = "default_radius_octaves")]
    pub radius_octaves: f64,
}

fn default_theta_max() -> f64 {
    100.0
}

fn default_time_span() -> f64 {
    1.0
}

fn default_radius_octaves() -> f64 {
    6.0
}

/// Cylinder geometry of a single check.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CylinderConfig {
    /// Intrinsic cylinder with scaling parameter θ.
    Intrinsic {
        center_dist: f64,
        t_center: f64,
        rho: f64,
        #[serde(default = "default_theta")]
        theta: f64,
    },
    /// Backward box B_radius × (t − duration, t].
    OneSided {
        center_dist: f64,
        t_center: f64,
        radius: f64,
        duration: f64,
    },
    /// Standard parabolic cylinder.
    Standard {
        center_dist: f64,
        t_center: f64,
        rho: f64,
    },
}

fn default_theta() -> f64 {
    1.0
}

impl CylinderConfig {
    pub fn build(&self) -> Result<Cylinder> {
        match *self {
            CylinderConfig::Intrinsic {
                center_dist,
                t_center,
                rho,
                theta,
            } => {
                if !(rho > 0.0 && theta >= 1.0 && center_dist >= 0.0) {
                    return Err(Error::Config(format!(
                        "path 'cylinder': intrinsic geometry needs rho > 0, theta >= 1, \
                         center_dist >= 0; got rho = {rho}, theta = {theta}, \
                         center_dist = {center_dist}"
                    )));
                }
                Ok(Cylinder::intrinsic(center_dist, t_center, rho, theta))
            }
            CylinderConfig::OneSided {
                center_dist,
                t_center,
                radius,
                duration,
            } => {
                if !(radius > 0.0 && duration > 0.0 && center_dist >= 0.0) {
                    return Err(Error::Config(format!(
                        "path 'cylinder': one-sided geometry needs radius > 0, duration > 0, \
                         center_dist >= 0; got radius = {radius}, duration = {duration}, \
                         center_dist = {center_dist}"
                    )));
                }
                Ok(Cylinder::one_sided(center_dist, t_center, radius, duration))
            }
            CylinderConfig::Standard {
                center_dist,
                t_center,
                rho,
            } => {
                if !(rho > 0.0 && center_dist >= 0.0) {
                    return Err(Error::Config(format!(
                        "path 'cylinder': parabolic geometry needs rho > 0, center_dist >= 0; \
                         got rho = {rho}, center_dist = {center_dist}"
                    )));
                }
                Ok(Cylinder::standard(center_dist, t_center, rho))
            }
        }
    }
}

/// One entry of a `verify` batch.  A missing `theta` on the coupled
/// checks means "solve the sub-intrinsic relation for θ̃ first".
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckConfig {
    Energy {
        center_dist: f64,
        t_center: f64,
        rho: f64,
        /// Inner radius in [rho/2, rho); default rho/2.
        #[serde(default)]
        r_in: Option<f64>,
        #[serde(default = "default_theta")]
        theta: f64,
        /// Anchor mean; absent = mean of the field on the inner cylinder.
        #[serde(default)]
        a: Option<f64>,
        #[serde(default)]
        max_ratio: Option<f64>,
    },
    Gluing {
        center_dist: f64,
        t_center: f64,
        rho: f64,
        #[serde(default = "default_theta")]
        theta: f64,
        #[serde(default)]
        max_ratio: Option<f64>,
    },
    Poincare {
        center_dist: f64,
        t_center: f64,
        rho: f64,
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default = "default_big_k")]
        big_k: f64,
        #[serde(default = "default_lambda_o")]
        lambda_o: f64,
        #[serde(default)]
        max_ratio: Option<f64>,
    },
    Revholder {
        center_dist: f64,
        t_center: f64,
        rho: f64,
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default = "default_big_k")]
        big_k: f64,
        #[serde(default = "default_lambda_o")]
        lambda_o: f64,
        #[serde(default)]
        max_ratio: Option<f64>,
    },
    ThetaBound {
        center_dist: f64,
        t_center: f64,
        rho: f64,
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default = "default_lambda_o")]
        lambda_o: f64,
        #[serde(default)]
        max_ratio: Option<f64>,
    },
    Supbound {
        cylinder: CylinderConfig,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default)]
        max_ratio: Option<f64>,
    },
    Main {
        center_dist: f64,
        t_center: f64,
        rho: f64,
        eps: f64,
        #[serde(default)]
        max_ratio: Option<f64>,
    },
    Fubini {
        /// Hölder exponent q of the identity; absent = the bundle's q.
        #[serde(default)]
        q: Option<f64>,
        eps: f64,
        /// Truncation level k (> lam1).
        k: f64,
        /// Lower integration level λ₁ (> 0).
        lam1: f64,
        cylinder: CylinderConfig,
        /// Verdict threshold on the two-path relative gap.
        #[serde(default = "default_fubini_gap")]
        max_gap: f64,
    },
    PowerIneq {
        alpha: f64,
        p: f64,
        #[serde(default = "default_power_samples")]
        samples: usize,
        #[serde(default)]
        max_ratio: Option<f64>,
    },
}

fn default_big_k() -> f64 {
    1.5
}

fn default_lambda_o() -> f64 {
    1.0
}

fn default_sigma() -> f64 {
    0.5
}

fn default_fubini_gap() -> f64 {
    1e-3
}

fn default_power_samples() -> usize {
    20_000
}

impl CheckConfig {
    /// The stable checker name used in reports and summaries.
    pub fn name(&self) -> &'static str {
        match self {
            CheckConfig::Energy { .. } => "energy",
            CheckConfig::Gluing { .. } => "gluing",
            CheckConfig::Poincare { .. } => "poincare",
            CheckConfig::Revholder { .. } => "revholder",
            CheckConfig::ThetaBound { .. } => "theta-bound",
            CheckConfig::Supbound { .. } => "supbound",
            CheckConfig::Main { .. } => "main-estimate",
            CheckConfig::Fubini { .. } => "fubini",
            CheckConfig::PowerIneq { .. } => "power-inequalities",
        }
    }

    /// The anchor string the checker attaches to its reports; used for
    /// synthesized rows when a check errors before producing one.
    pub fn anchor(&self) -> &'static str {
        match self {
            CheckConfig::Energy { .. } => "energy-caccioppoli",
            CheckConfig::Gluing { .. } => "gluing-mean-drift",
            CheckConfig::Poincare { .. } => "sobolev-poincare",
            CheckConfig::Revholder { .. } => "reverse-hoelder",
            CheckConfig::ThetaBound { .. } => "theta-from-data",
            CheckConfig::Supbound { .. } => "quantitative-sup-estimate",
            CheckConfig::Main { .. } => "higher-integrability",
            CheckConfig::Fubini { .. } => "layer-cake-truncation",
            CheckConfig::PowerIneq { .. } => "signed-power-comparisons",
        }
    }
}

/// Initial profile of a `solve` run.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    /// Trace of the configured exact solution at t_start.
    Solution,
    /// Constant profile.
    Constant { value: f64 },
}

/// Boundary data of a `solve` run.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    /// Traces of the configured exact solution on both circles.
    Solution,
    /// Time-independent Dirichlet values.
    Constant { inner: f64, outer: f64 },
}

/// Step policy of a `solve` run; absent fields keep the solver defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub dt_max: Option<f64>,
    pub safety: Option<f64>,
    pub dt_min: Option<f64>,
}

/// Optional grid-refinement study attached to a `solve` run.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub base_cells: usize,
    pub refinements: u32,
    /// Verdict threshold on the observed order (absent = report only).
    #[serde(default)]
    pub min_order: Option<f64>,
}

/// `solve` command: one radial march plus optional refinement study.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub n: u32,
    pub m: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub cells: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub initial: ProfileConfig,
    pub boundary: BoundaryConfig,
    /// Wire the exact solution's forcing term into the flux.
    #[serde(default)]
    pub use_solution_forcing: bool,
    /// Replace Dirichlet rows by zero-total-flux balances.
    #[serde(default)]
    pub zero_flux: bool,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub convergence: Option<ConvergenceConfig>,
    /// Verdict threshold on the final L² error against the exact
    /// solution (requires a configured solution).
    #[serde(default)]
    pub max_error: Option<f64>,
}
