//! Experiment configuration files: parsing, schema checks, and line-anchored
//! validation errors.

use std::fs;
use std::path::{Path, PathBuf};

use funcspan::approx::{DensityConfig, Fitter, SampleSpec, Target, TargetExpr};
use funcspan::measure::{AtomicSignedMeasure, DiscriminatorSearch, Quadratic};
use funcspan::spaces::{CompactSet, Functional, FunctionalSpec, ParamMap, SpaceInstance};
use funcspan::{ScanConfig, SquashingFn};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA: &str = "funcspan.experiment/1";

fn default_p_values() -> Vec<f64> {
    vec![1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactSetSection {
    pub dim: usize,
    pub map: ParamMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscriminateSection {
    pub measure: AtomicSignedMeasure,
    pub functionals: Vec<FunctionalSpec>,
    #[serde(default)]
    pub search: DiscriminatorSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushforwardSection {
    pub measure: AtomicSignedMeasure,
    pub functionals: Vec<FunctionalSpec>,
    pub g: Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub generators: Vec<FunctionalSpec>,
    pub max_degree: u32,
    #[serde(default)]
    pub ridge: f64,
    /// Net resolution; defaults to `train_resolution`.
    #[serde(default)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationSection {
    pub resolution: usize,
    /// Smallest `|f(x) − f(y)|` counted as separating.
    #[serde(default)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub name: String,
    pub space: SpaceInstance,
    pub compact_set: CompactSetSection,
    pub target: TargetExpr,
    #[serde(default)]
    pub activation: SquashingFn,
    pub fitter: Fitter,
    pub widths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub train_resolution: usize,
    #[serde(default)]
    pub eval_resolution: Option<usize>,
    #[serde(default)]
    pub measure: SampleSpec,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    #[serde(default)]
    pub truncate: Option<f64>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub discriminate: Option<DiscriminateSection>,
    #[serde(default)]
    pub pushforward_check: Option<PushforwardSection>,
    #[serde(default)]
    pub algebra: Option<AlgebraSection>,
    #[serde(default)]
    pub separation: Option<SeparationSection>,
}

/// A parsed config with its derived objects built and checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub path: PathBuf,
    pub text: String,
    pub config: ExperimentConfig,
    pub set: CompactSet,
    pub target: Target,
}

/// 1-based line of the first occurrence of `"key"` in `text`, or 1.
pub fn key_line(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1)
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(path, text)
    }

    pub fn parse(path: &Path, text: String) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config {
                path: path.to_path_buf(),
                line: e.line().max(1),
                message: e.to_string(),
            })?;
        let fail = |key: &str, message: String| CliError::Config {
            path: path.to_path_buf(),
            line: key_line(&text, key),
            message,
        };
        if config.schema != SCHEMA {
            return Err(fail(
                "schema",
                format!(
                    "unsupported schema {:?}, expected {SCHEMA:?}",
                    config.schema
                ),
            ));
        }
        if config.name.is_empty() {
            return Err(fail("name", "name must be nonempty".into()));
        }
        if config.widths.is_empty() {
            return Err(fail("widths", "widths must be nonempty".into()));
        }
        if config.widths[0] == 0 {
            return Err(fail("widths", "widths must be >= 1".into()));
        }
        if config.widths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(fail("widths", "widths must be strictly increasing".into()));
        }
        if config.seeds.is_empty() {
            return Err(fail("seeds", "seeds must be nonempty".into()));
        }
        if config.train_resolution == 0 {
            return Err(fail(
                "train_resolution",
                "train_resolution must be >= 1".into(),
            ));
        }
        let set = CompactSet::new(
            config.space.clone(),
            config.compact_set.dim,
            config.compact_set.map.clone(),
        )
        .map_err(|e| fail("compact_set", e.to_string()))?;
        let target = Target::new(set.kind(), config.target.clone())
            .map_err(|e| fail("target", e.to_string()))?;
        config
            .activation
            .validate_params()
            .map_err(|e| fail("activation", e.to_string()))?;
        let exp = Experiment {
            path: path.to_path_buf(),
            text,
            config,
            set,
            target,
        };
        exp.density_config(0)
            .validate()
            .map_err(|e| exp.anchor_density_error(&e.to_string()))?;
        exp.validate_sections()?;
        Ok(exp)
    }

    fn fail(&self, key: &str, message: String) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            line: key_line(&self.text, key),
            message,
        }
    }

    fn anchor_density_error(&self, message: &str) -> CliError {
        let key = [
            "eval_resolution",
            "train_resolution",
            "p_values",
            "truncate",
            "widths",
            "seeds",
        ]
        .into_iter()
        .find(|k| message.contains(k))
        .unwrap_or("fitter");
        self.fail(key, message.to_string())
    }

    fn validate_sections(&self) -> Result<(), CliError> {
        let kind = self.set.kind();
        let c = &self.config;
        if let Some(d) = &c.discriminate {
            self.functionals(&d.functionals, "discriminate")?;
            if d.measure.space() != kind {
                return Err(self.fail(
                    "discriminate",
                    "measure space differs from config space".into(),
                ));
            }
            let s = &d.search;
            if s.w_points == 0
                || s.b_points == 0
                || s.w_range.0 > s.w_range.1
                || s.b_range.0 > s.b_range.1
            {
                return Err(self.fail("search", "search ranges must be nonempty".into()));
            }
        }
        if let Some(p) = &c.pushforward_check {
            self.functionals(&p.functionals, "pushforward_check")?;
            if p.measure.space() != kind {
                return Err(self.fail(
                    "pushforward_check",
                    "measure space differs from config space".into(),
                ));
            }
            p.g.validate()
                .map_err(|e| self.fail("pushforward_check", e.to_string()))?;
            if p.g.dim() != p.functionals.len() {
                return Err(self.fail(
                    "pushforward_check",
                    "g dimension must equal the number of functionals".into(),
                ));
            }
        }
        if let Some(a) = &c.algebra {
            self.functionals(&a.generators, "algebra")?;
            if !(a.ridge.is_finite() && a.ridge >= 0.0) {
                return Err(self.fail("algebra", "algebra ridge must be >= 0".into()));
            }
            if a.resolution == Some(0) {
                return Err(self.fail("algebra", "algebra resolution must be >= 1".into()));
            }
        }
        if let Some(s) = &c.separation {
            if s.resolution == 0 || !(s.tol.is_finite() && s.tol >= 0.0) {
                return Err(self.fail(
                    "separation",
                    "separation needs resolution >= 1 and tol >= 0".into(),
                ));
            }
        }
        Ok(())
    }

    fn functionals(
        &self,
        specs: &[FunctionalSpec],
        key: &str,
    ) -> Result<Vec<Functional>, CliError> {
        specs
            .iter()
            .map(|s| s.resolve(self.set.kind()))
            .collect::<funcspan::Result<Vec<_>>>()
            .map_err(|e| self.fail(key, e.to_string()))
    }

    /// Resolved functionals of a section already checked by [`Experiment::parse`].
    pub fn resolve(&self, specs: &[FunctionalSpec]) -> Vec<Functional> {
        specs
            .iter()
            .map(|s| s.resolve(self.set.kind()).expect("validated at load"))
            .collect()
    }

    pub fn density_config(&self, jobs: usize) -> DensityConfig {
        let c = &self.config;
        DensityConfig {
            widths: c.widths.clone(),
            seeds: c.seeds.clone(),
            fitter: c.fitter.clone(),
            train_resolution: c.train_resolution,
            eval_resolution: c.eval_resolution,
            sample: c.measure,
            p_values: c.p_values.clone(),
            truncate: c.truncate,
            jobs,
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.config.output.clone())
            .unwrap_or_else(|| PathBuf::from("out").join(&self.config.name))
    }

    pub fn missing(&self, section: &str) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            line: 1,
            message: format!("this subcommand needs a \"{section}\" section"),
        }
    }
}
