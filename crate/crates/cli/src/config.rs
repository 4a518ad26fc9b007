use std::path::{Path, PathBuf};

use qtransport::analysis::{AnalysisOptions, DecayModel};
use qtransport::continuum::ContinuousDos;
use qtransport::graph::{GraphSpec, DEFAULT_SIZE_CAP};
use qtransport::transport::TimeGrid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// One experiment. Read from TOML; every field has a default so a file only
/// needs what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Graph spec such as `ring:200`. Exclusive with `dos`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    /// Density-of-states spec such as `semicircle:nu=0.5`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dos: Option<String>,
    pub out: PathBuf,
    /// Seed for random graphs whose spec has none.
    pub seed: u64,
    pub max_nodes: usize,
    pub grid: GridConfig,
    pub analysis: AnalysisConfig,
    pub outputs: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: None,
            dos: None,
            out: PathBuf::from("out"),
            seed: 1,
            max_nodes: DEFAULT_SIZE_CAP,
            grid: GridConfig::default(),
            analysis: AnalysisConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub spacing: Spacing,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Prepend `t = 0` to a log grid.
    pub include_zero: bool,
    /// Extra uniformly spaced samples with this step across the fit windows,
    /// so envelopes see every oscillation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_dt: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            spacing: Spacing::Log,
            t_min: 1e-2,
            t_max: 1e4,
            points: 600,
            include_zero: true,
            refine_dt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    PowerLaw,
    StretchedExp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub half_width: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical_window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantum_window: Option<[f64; 2]>,
    pub model: Model,
    pub tail_fraction: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            half_width: 3,
            classical_window: None,
            quantum_window: None,
            model: Model::PowerLaw,
            tail_fraction: 0.1,
        }
    }
}

impl AnalysisConfig {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            half_width: self.half_width,
            classical_window: self.classical_window.map(|[a, b]| (a, b)),
            quantum_window: self.quantum_window.map(|[a, b]| (a, b)),
            model: match self.model {
                Model::PowerLaw => DecayModel::PowerLaw,
                Model::StretchedExp => DecayModel::StretchedExp,
            },
            tail_fraction: self.tail_fraction,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Exact averaged return probability; needs eigenvectors.
    pub pi_bar: bool,
    /// Long-time transition matrix; needs eigenvectors.
    pub chi: bool,
    /// Bins of the eigenvalue histogram, 0 to skip it.
    pub dos_bins: usize,
}

/// What an experiment runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Graph(GraphSpec),
    Dos(ContinuousDos),
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Graph(g) => g.fmt(f),
            Source::Dos(d) => d.fmt(f),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn source(&self) -> Result<Source> {
        match (&self.graph, &self.dos) {
            (Some(g), None) => {
                Ok(Source::Graph(g.parse().map_err(|e| {
                    CliError::Config(format!("graph `{g}`: {e}"))
                })?))
            }
            (None, Some(d)) => {
                Ok(Source::Dos(d.parse().map_err(|e| {
                    CliError::Config(format!("dos `{d}`: {e}"))
                })?))
            }
            (None, None) => Err(CliError::Config(
                "no input: give exactly one of `graph` or `dos`".into(),
            )),
            (Some(_), Some(_)) => Err(CliError::Config(
                "`graph` and `dos` are mutually exclusive".into(),
            )),
        }
    }

    /// Base grid merged with the refinement windows.
    pub fn time_grid(&self) -> Result<TimeGrid> {
        let g = &self.grid;
        let base = match g.spacing {
            Spacing::Log => TimeGrid::logarithmic(g.t_min, g.t_max, g.points, g.include_zero)?,
            Spacing::Linear => TimeGrid::linear(g.t_min, g.t_max, g.points)?,
        };
        let Some(dt) = g.refine_dt else {
            return Ok(base);
        };
        let windows = [self.analysis.classical_window, self.analysis.quantum_window];
        let mut grid = base;
        for [lo, hi] in windows.into_iter().flatten() {
            grid = grid.merge(&TimeGrid::with_step(lo, hi, dt)?);
        }
        Ok(grid)
    }

    pub fn validate(&self) -> Result<Source> {
        let source = self.source()?;
        if self.out.as_os_str().is_empty() {
            return Err(CliError::Config(
                "output directory must not be empty".into(),
            ));
        }
        let a = &self.analysis;
        if a.half_width == 0 {
            return Err(CliError::Config("half_width must be >= 1".into()));
        }
        if !(a.tail_fraction > 0.0 && a.tail_fraction <= 0.5) {
            return Err(CliError::Config(format!(
                "tail_fraction must lie in (0, 0.5], got {}",
                a.tail_fraction
            )));
        }
        for [lo, hi] in [a.classical_window, a.quantum_window].into_iter().flatten() {
            if !(lo > 0.0 && lo < hi) {
                return Err(CliError::Config(format!(
                    "fit window [{lo}, {hi}] needs 0 < lo < hi"
                )));
            }
        }
        if matches!(source, Source::Dos(_)) && (self.outputs.pi_bar || self.outputs.chi) {
            return Err(CliError::Config(
                "pi_bar and chi need eigenvectors, which a continuum DOS does not have".into(),
            ));
        }
        self.time_grid()?;
        Ok(source)
    }
}
