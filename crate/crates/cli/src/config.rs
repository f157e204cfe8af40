//! The `align` configuration file.

use std::path::{Path, PathBuf};

use curvereg_core::multalign::Engine;
use curvereg_core::register::{
    Criterion, DpOptions, LandmarkInterp, ParametricFamily, ParametricOptions, StepPattern,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Published schema every configuration is checked against before use.
pub const SCHEMA: &str = include_str!("../../../docs/config.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Landmark,
    Shift,
    Affine,
    Dtw,
    Elastic,
    Procrustes,
    Karcher,
    Kmeans,
    Pca,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineName {
    Dtw,
    Elastic,
    Shift,
    Affine,
    OneParam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpConfig {
    pub grid_size: Option<usize>,
    pub penalty: Option<f64>,
    pub max_step: Option<usize>,
    pub slope_limit: Option<f64>,
    pub subsamples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricConfig {
    pub criterion: Option<Criterion>,
    pub derivative_order: Option<u8>,
    pub max_shift: Option<f64>,
    pub scale_range: Option<(f64, f64)>,
    pub beta_range: Option<(f64, f64)>,
    pub min_overlap: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkConfig {
    pub min_prominence: Option<f64>,
    pub interp: Option<LandmarkInterp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub method: MethodName,
    pub input: PathBuf,
    pub output: PathBuf,
    pub working_grid: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub engine: Option<EngineName>,
    pub reference: Option<usize>,
    pub initial_template: Option<usize>,
    pub k: Option<usize>,
    pub components: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub dp: Option<DpConfig>,
    #[serde(default)]
    pub parametric: ParametricConfig,
    #[serde(default)]
    pub landmarks: LandmarkConfig,
}

/// Check `value` against [`SCHEMA`], listing every violation.
pub fn validate_against_schema(value: &Value) -> CliResult<()> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("bundled schema compiles");
    let problems: Vec<String> = validator
        .iter_errors(value)
        .map(|e| {
            let at = e.instance_path().to_string();
            let at = if at.is_empty() { "/".to_string() } else { at };
            format!("{at}: {e}")
        })
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::config(format!("config does not match the schema: {}", problems.join("; "))))
    }
}

impl Config {
    pub fn from_json(text: &str) -> CliResult<Config> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
        validate_against_schema(&value)?;
        serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))
    }

    /// Load a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Config::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.input.is_relative() {
            cfg.input = base.join(&cfg.input);
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        Ok(cfg)
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(20)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-6)
    }

    /// Lattice options; `default_penalty` applies when the config sets none.
    pub fn dp_options(&self, default_penalty: f64) -> CliResult<DpOptions> {
        let mut o = DpOptions::default();
        let Some(dp) = &self.dp else {
            o.penalty = default_penalty;
            return Ok(o);
        };
        if let Some(n) = dp.grid_size {
            o.grid_size = n;
        }
        o.penalty = dp.penalty.unwrap_or(default_penalty);
        if dp.max_step.is_some() || dp.slope_limit.is_some() {
            let max = dp.max_step.unwrap_or(6);
            let limit = dp.slope_limit.unwrap_or(3.0);
            o.steps = StepPattern::window_up_to(max)
                .into_iter()
                .filter(|s| s.slope() <= limit * (1.0 + 1e-12) && s.slope() * limit >= 1.0 - 1e-12)
                .collect();
        }
        if let Some(s) = dp.subsamples {
            o.subsamples = s;
        }
        o.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(o)
    }

    pub fn parametric_options(&self, family: ParametricFamily) -> CliResult<ParametricOptions> {
        let p = &self.parametric;
        let mut o = ParametricOptions::new(family, p.criterion.unwrap_or(Criterion::L2));
        if let Some(d) = p.derivative_order {
            o.derivative_order = d;
        }
        if let Some(v) = p.max_shift {
            o.max_shift = v;
        }
        if let Some(v) = p.scale_range {
            o.scale_range = v;
        }
        if let Some(v) = p.beta_range {
            o.beta_range = v;
        }
        if let Some(v) = p.min_overlap {
            o.min_overlap = v;
        }
        Ok(o)
    }

    /// Engine of the iterative methods; elastic unless configured otherwise.
    pub fn engine(&self) -> CliResult<Engine> {
        Ok(match self.engine.unwrap_or(EngineName::Elastic) {
            EngineName::Dtw => Engine::DtwL2(self.dp_options(0.0)?),
            EngineName::Elastic => Engine::Elastic(self.dp_options(0.0)?),
            EngineName::Shift => Engine::Parametric(self.parametric_options(ParametricFamily::Shift)?),
            EngineName::Affine => Engine::Parametric(self.parametric_options(ParametricFamily::Affine)?),
            EngineName::OneParam => {
                Engine::Parametric(self.parametric_options(ParametricFamily::OneParam)?)
            }
        })
    }
}
