//! Ready-made configurations for the standard figures.

use std::path::PathBuf;

use crate::config::{AnalysisConfig, ExperimentConfig, GridConfig, OutputConfig, Spacing};
use crate::error::{CliError, Result};

pub const PRESETS: [&str; 5] = ["fig1a", "fig1b", "fig2a", "fig2b", "fig3"];

/// Dense sampling step for envelope windows.
const REFINE_DT: f64 = 0.05;

fn windows(lo: f64, hi: f64) -> AnalysisConfig {
    AnalysisConfig {
        classical_window: Some([lo, hi]),
        quantum_window: Some([lo, hi]),
        ..AnalysisConfig::default()
    }
}

fn refined() -> GridConfig {
    GridConfig {
        refine_dt: Some(REFINE_DT),
        ..GridConfig::default()
    }
}

/// The configuration behind a named figure, writing to `out/<name>`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig {
        out: PathBuf::from("out").join(name),
        ..ExperimentConfig::default()
    };
    let cfg = match name {
        // infinite chain
        "fig1a" => ExperimentConfig {
            dos: Some("semicircle:nu=-0.5,lmax=4".into()),
            grid: refined(),
            analysis: windows(10.0, 100.0),
            ..base
        },
        // random-matrix semicircle
        "fig1b" => ExperimentConfig {
            dos: Some("semicircle:nu=0.5,lmax=4".into()),
            grid: refined(),
            analysis: windows(10.0, 100.0),
            ..base
        },
        // Out to t = 1e5 so the slowest mode, λ ≈ 1e-3, has died out in the
        // saturation tail.
        "fig2a" => ExperimentConfig {
            graph: Some("ring:200".into()),
            grid: GridConfig {
                t_max: 1e5,
                points: 700,
                ..refined()
            },
            analysis: windows(1.0, 100.0),
            ..base
        },
        // N = 3070; eigenvalues only
        "fig2b" => ExperimentConfig {
            graph: Some("dendrimer:10,3".into()),
            analysis: AnalysisConfig {
                classical_window: Some([10.0, 100.0]),
                ..AnalysisConfig::default()
            },
            ..base
        },
        "fig3" => ExperimentConfig {
            graph: Some("star:10".into()),
            grid: GridConfig {
                spacing: Spacing::Linear,
                t_min: 0.0,
                t_max: 100.0,
                points: 2001,
                include_zero: false,
                refine_dt: None,
            },
            analysis: AnalysisConfig {
                tail_fraction: 0.5,
                ..AnalysisConfig::default()
            },
            outputs: OutputConfig {
                pi_bar: true,
                chi: true,
                dos_bins: 0,
            },
            ..base
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}
