use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::apps::EMProblem;
use crate::diagnostics::{DEFAULT_DROP_TAIL, DEFAULT_R_FLOOR, DEFAULT_TAIL_FRACTION};
use crate::error::{Error, Result};
use crate::phase::PriorSpec;
use crate::primitives::{Point, TiePolicy, Tolerances};
use crate::sets::{CurveParam, SetDescriptor};

/// Environment variable overriding the tie-breaking seed of a config.
pub const SEED_ENV: &str = "PROJLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ap,
    LocalAp,
    Dr,
    Averaged,
    Gs,
    Em,
    Cadzow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GsSpec {
    pub m: Vec<f64>,
    pub prior: PriorSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CadzowSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sequence {
    A,
    #[default]
    B,
}

/// Which diagnostics to compute and with which parameters. The gap is
/// always reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseOptions {
    pub tail_fraction: f64,
    pub cluster_radius: f64,
    pub angle: bool,
    pub r_floor: f64,
    pub rate: bool,
    pub rate_sequence: Sequence,
    pub rate_window: Option<usize>,
    pub drop_tail: f64,
    /// `[c, gamma]`
    pub three_point: Option<[f64; 2]>,
    /// Three-point check at the fitted `gamma` with `c = gamma / 4`.
    pub three_point_fitted: bool,
    pub four_point: Option<f64>,
    /// `[c, sigma]`
    pub holder: Option<[f64; 2]>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            tail_fraction: DEFAULT_TAIL_FRACTION,
            cluster_radius: 0.2,
            angle: false,
            r_floor: DEFAULT_R_FLOOR,
            rate: false,
            rate_sequence: Sequence::B,
            rate_window: None,
            drop_tail: DEFAULT_DROP_TAIL,
            three_point: None,
            three_point_fitted: false,
            four_point: None,
            holder: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub sets: Vec<SetDescriptor>,
    #[serde(default)]
    pub start: Option<Point>,
    #[serde(default)]
    pub start_param: Option<CurveParam>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub tie: TiePolicy,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub gs: Option<GsSpec>,
    #[serde(default)]
    pub em: Option<EMProblem>,
    #[serde(default)]
    pub cadzow: Option<CadzowSpec>,
    #[serde(default)]
    pub diagnostics: DiagnoseOptions,
}

fn missing(field: &str, algorithm: Algorithm) -> Error {
    Error::Config(format!("field `{field}` is required for algorithm {algorithm:?}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies [`SEED_ENV`] when set.
    pub fn apply_env_seed(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.tie.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances
            .validate()
            .map_err(|e| Error::Config(format!("tolerances: {e}")))?;
        for (i, s) in self.sets.iter().enumerate() {
            s.validate().map_err(|e| Error::Config(format!("sets[{i}]: {e}")))?;
        }
        let alg = self.algorithm;
        let need_sets = |n: usize| {
            if self.sets.len() < n {
                Err(Error::Config(format!(
                    "field `sets` needs {n} entries for algorithm {alg:?}, found {}",
                    self.sets.len()
                )))
            } else {
                Ok(())
            }
        };
        match alg {
            Algorithm::Ap | Algorithm::Dr => {
                need_sets(2)?;
                self.start.as_ref().ok_or_else(|| missing("start", alg))?;
            }
            Algorithm::LocalAp => {
                need_sets(2)?;
                if self.sets[0].as_curve().is_none() {
                    return Err(Error::Config("sets[0] must be a param-curve for local-ap".into()));
                }
                self.start_param.ok_or_else(|| missing("start_param", alg))?;
            }
            Algorithm::Averaged => {
                need_sets(1)?;
                self.start.as_ref().ok_or_else(|| missing("start", alg))?;
            }
            Algorithm::Gs => {
                self.gs.as_ref().ok_or_else(|| missing("gs", alg))?;
                self.start.as_ref().ok_or_else(|| missing("start", alg))?;
            }
            Algorithm::Em => {
                let em = self.em.as_ref().ok_or_else(|| missing("em", alg))?;
                em.validate().map_err(|e| Error::Config(format!("em: {e}")))?;
                self.start.as_ref().ok_or_else(|| missing("start", alg))?;
            }
            Algorithm::Cadzow => {
                need_sets(1)?;
                self.cadzow.ok_or_else(|| missing("cadzow", alg))?;
                self.start.as_ref().ok_or_else(|| missing("start", alg))?;
            }
        }
        Ok(())
    }
}
