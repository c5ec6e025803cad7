//! Scenario configuration: the TOML schema, its validation, and the
//! conversion into core types.
//!
//! The schema is strict — unknown keys are rejected at parse time so a typo
//! cannot silently fall back to a default — and every cross-field rule
//! (exactly one way to give the time list, velocity window endpoints in
//! pairs, section/command compatibility) is checked here before any
//! computation starts, so config mistakes surface with exit code 2 and a
//! message naming the offending key.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use schpack::{
    Grid, InitialConditions, MeanActionVariant, OracleConfig, PhysicsParams, PotentialModel,
    QuadratureRule, VelocityQuadrature,
};

use crate::CliError;

/// Default relative tolerance handed to the packet ODE integrator.
pub const DEFAULT_ODE_TOL: f64 = 1e-10;

fn default_hbar() -> f64 {
    1.0
}

fn default_mass() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_n_v() -> usize {
    257
}

fn default_rule() -> RuleSpec {
    RuleSpec::GaussLegendre
}

/// Mean-action convention selector as it appears in configs and on the
/// command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantSpec {
    Paper,
    Corrected,
}

impl VariantSpec {
    pub fn to_core(self) -> MeanActionVariant {
        match self {
            VariantSpec::Paper => MeanActionVariant::Paper,
            VariantSpec::Corrected => MeanActionVariant::Corrected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSpec {
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub x0: f64,
    pub v0: f64,
    pub a0: f64,
    #[serde(default)]
    pub b0: f64,
}

/// Potential selector. A plain struct with optional parameter slots (rather
/// than a tagged enum) so that strict key checking and precise "key X does
/// not apply to kind Y" messages are both possible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinspaceSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

/// Output times: either an explicit `list` or a uniform `linspace`, never
/// both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linspace: Option<LinspaceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_floor: Option<f64>,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            dt: default_dt(),
            epsilon_floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleSpec {
    Trapezoid,
    GaussLegendre,
}

impl RuleSpec {
    pub fn to_core(self) -> QuadratureRule {
        match self {
            RuleSpec::Trapezoid => QuadratureRule::Trapezoid,
            RuleSpec::GaussLegendre => QuadratureRule::GaussLegendre,
        }
    }
}

/// Kernel / propagator section: evaluation time and the velocity-integral
/// quadrature. Omit `v_min`/`v_max` to size the window automatically from
/// the stationary-velocity span of the requested point pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub t: f64,
    #[serde(default = "default_n_v")]
    pub n_v: usize,
    #[serde(default = "default_rule")]
    pub rule: RuleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Explicit check selection; omit for the default suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
}

/// One scenario: everything a command needs, in one strict document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantSpec>,
    pub physics: PhysicsSpec,
    pub initial: InitialSpec,
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub times: TimesSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config parse error: {e}")))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self)
            .map_err(|e| CliError::config(format!("config serialize error: {e}")))
    }
}

/// A validated scenario: core-typed values ready for the command drivers.
#[derive(Debug)]
pub struct Scenario {
    pub params: PhysicsParams,
    pub initial: InitialConditions,
    pub potential: PotentialModel,
    pub grid: Grid,
    pub times: Vec<f64>,
    pub oracle: OracleSpec,
    pub kernel: Option<KernelSpec>,
    pub out_dir: PathBuf,
    pub verify_checks: Option<Vec<String>>,
    pub variant: VariantSpec,
}

impl Scenario {
    /// Validate a parsed config and resolve command-line overrides.
    ///
    /// Every error out of here is a config error (exit 2).
    pub fn build(
        config: &ScenarioConfig,
        variant_override: Option<VariantSpec>,
        out_override: Option<&PathBuf>,
    ) -> Result<Self, CliError> {
        let variant = variant_override
            .or(config.variant)
            .unwrap_or(VariantSpec::Corrected);

        let params = PhysicsParams::new(
            config.physics.mass,
            config.physics.hbar,
            config.physics.nu,
            variant.to_core(),
        )
        .map_err(|e| CliError::config(format!("physics: {e}")))?;

        let initial = InitialConditions::new(
            config.initial.x0,
            config.initial.v0,
            config.initial.a0,
            config.initial.b0,
        )
        .map_err(|e| CliError::config(format!("initial: {e}")))?;

        let potential = build_potential(&config.potential, &params)?;
        let grid = build_grid(&config.grid)?;
        let times = build_times(&config.times)?;

        let oracle = config.oracle.clone().unwrap_or_default();
        if !(oracle.dt > 0.0 && oracle.dt.is_finite()) {
            return Err(CliError::config(format!(
                "oracle.dt must be positive, got {}",
                oracle.dt
            )));
        }
        if let Some(eps) = oracle.epsilon_floor {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(CliError::config(format!(
                    "oracle.epsilon_floor must be positive, got {eps}"
                )));
            }
        }

        if let Some(kernel) = &config.kernel {
            validate_kernel(kernel)?;
        }

        let out_dir = out_override
            .cloned()
            .or_else(|| config.output.as_ref().and_then(|o| o.dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"));

        Ok(Scenario {
            params,
            initial,
            potential,
            grid,
            times,
            oracle,
            kernel: config.kernel.clone(),
            out_dir,
            verify_checks: config.verify.as_ref().and_then(|v| v.checks.clone()),
            variant,
        })
    }

    /// The kernel section, required by the kernel/propagate commands and the
    /// kernel-based verification checks.
    pub fn kernel_spec(&self) -> Result<&KernelSpec, CliError> {
        self.kernel
            .as_ref()
            .ok_or_else(|| CliError::config("this command needs a [kernel] section (kernel.t)"))
    }

    /// Velocity quadrature for the kernel: explicit window if both endpoints
    /// were configured, otherwise automatic sizing over the point pairs.
    pub fn velocity_quadrature(
        &self,
        x_grid: &Grid,
        x0_grid: &Grid,
    ) -> Result<VelocityQuadrature, CliError> {
        let spec = self.kernel_spec()?;
        match (spec.v_min, spec.v_max) {
            (Some(v_min), Some(v_max)) => {
                VelocityQuadrature::new(v_min, v_max, spec.n_v, spec.rule.to_core())
                    .map_err(|e| CliError::config(format!("kernel: {e}")))
            }
            (None, None) => schpack::propagator::auto_velocity_window(
                spec.t,
                x_grid,
                x0_grid,
                &self.initial,
                &self.potential,
                &self.params,
                spec.n_v,
                spec.rule.to_core(),
            )
            .map_err(CliError::runtime),
            _ => Err(CliError::config(
                "kernel.v_min and kernel.v_max must be given together",
            )),
        }
    }

    /// The oracle solver configuration on the scenario grid (which must be
    /// periodic for the spectral kinetic step).
    pub fn oracle_config(&self) -> Result<OracleConfig, CliError> {
        if self.grid.kind != schpack::GridKind::Periodic {
            return Err(CliError::config(
                "the oracle needs grid.periodic = true (spectral kinetic step)",
            ));
        }
        let config = OracleConfig::new(self.grid, self.oracle.dt)
            .map_err(|e| CliError::config(format!("oracle: {e}")))?;
        match self.oracle.epsilon_floor {
            Some(eps) => config
                .with_epsilon_floor(eps)
                .map_err(|e| CliError::config(format!("oracle: {e}"))),
            None => Ok(config),
        }
    }
}

fn build_potential(
    spec: &PotentialSpec,
    params: &PhysicsParams,
) -> Result<PotentialModel, CliError> {
    let reject = |key: &str, kind: &str| -> Result<(), CliError> {
        Err(CliError::config(format!(
            "potential.{key} does not apply to kind \"{kind}\""
        )))
    };
    match spec.kind.as_str() {
        "free" => {
            if spec.omega.is_some() {
                reject("omega", "free")?;
            }
            if spec.force.is_some() {
                reject("force", "free")?;
            }
            if spec.coeffs.is_some() {
                reject("coeffs", "free")?;
            }
            Ok(PotentialModel::Free)
        }
        "linear" => {
            if spec.omega.is_some() {
                reject("omega", "linear")?;
            }
            if spec.coeffs.is_some() {
                reject("coeffs", "linear")?;
            }
            let force = spec
                .force
                .ok_or_else(|| CliError::config("potential.force is required for kind \"linear\""))?;
            if !force.is_finite() {
                return Err(CliError::config("potential.force must be finite"));
            }
            Ok(PotentialModel::Linear { force })
        }
        "harmonic" => {
            if spec.force.is_some() {
                reject("force", "harmonic")?;
            }
            if spec.coeffs.is_some() {
                reject("coeffs", "harmonic")?;
            }
            let omega = spec.omega.ok_or_else(|| {
                CliError::config("potential.omega is required for kind \"harmonic\"")
            })?;
            PotentialModel::harmonic(params.mass, omega)
                .map_err(|e| CliError::config(format!("potential: {e}")))
        }
        "polynomial" => {
            if spec.omega.is_some() {
                reject("omega", "polynomial")?;
            }
            if spec.force.is_some() {
                reject("force", "polynomial")?;
            }
            let coeffs = spec.coeffs.clone().ok_or_else(|| {
                CliError::config("potential.coeffs is required for kind \"polynomial\"")
            })?;
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(CliError::config("potential.coeffs must all be finite"));
            }
            Ok(PotentialModel::Polynomial { coeffs })
        }
        other => Err(CliError::config(format!(
            "potential.kind \"{other}\" is not one of free | linear | harmonic | polynomial"
        ))),
    }
}

fn build_grid(spec: &GridSpec) -> Result<Grid, CliError> {
    let result = if spec.periodic {
        Grid::periodic(spec.x_min, spec.x_max, spec.n)
    } else {
        Grid::bounded(spec.x_min, spec.x_max, spec.n)
    };
    result.map_err(|e| CliError::config(format!("grid: {e}")))
}

fn build_times(spec: &TimesSpec) -> Result<Vec<f64>, CliError> {
    let times = match (&spec.list, &spec.linspace) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "times.list and times.linspace are mutually exclusive",
            ))
        }
        (Some(list), None) => list.clone(),
        (None, Some(ls)) => {
            if ls.count == 0 {
                return Err(CliError::config("times.linspace.count must be at least 1"));
            }
            if !(ls.start.is_finite() && ls.stop.is_finite()) {
                return Err(CliError::config("times.linspace endpoints must be finite"));
            }
            if ls.count == 1 {
                vec![ls.start]
            } else {
                let h = (ls.stop - ls.start) / (ls.count - 1) as f64;
                (0..ls.count).map(|i| ls.start + h * i as f64).collect()
            }
        }
        (None, None) => Vec::new(),
    };
    if times.iter().any(|t| !t.is_finite()) {
        return Err(CliError::config("times must be finite"));
    }
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(CliError::config("times must be non-negative"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::config("times must increase strictly"));
    }
    Ok(times)
}

fn validate_kernel(spec: &KernelSpec) -> Result<(), CliError> {
    if !(spec.t > 0.0 && spec.t.is_finite()) {
        return Err(CliError::config(format!(
            "kernel.t must be positive, got {}",
            spec.t
        )));
    }
    Ok(())
}
