use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{AnalysisConfig, ExperimentConfig, Model, Spacing};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::presets::preset;
use crate::run::{fit_series, run_stage, Stage};

#[derive(Debug, Parser)]
#[command(
    name = "qtransport",
    version,
    about = "Classical and quantum walk transport on graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pipeline: spectrum, series, fits and report.
    Run(RunArgs),
    /// Eigenvalues, degeneracies and histogram only.
    Spectrum(RunArgs),
    /// Return-probability series only.
    Transport(RunArgs),
    /// Analyse an existing series.csv.
    Fit(FitArgs),
    /// Run (or print) a named figure configuration.
    Preset(PresetArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Series file written by `run` or `transport`.
    #[arg(long)]
    series: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Node count, for the equipartition line of the report.
    #[arg(long)]
    nodes: Option<usize>,
    #[command(flatten)]
    analysis: AnalysisFlags,
}

#[derive(Debug, Args)]
struct PresetArgs {
    /// fig1a, fig1b, fig2a, fig2b or fig3.
    name: String,
    /// Print the configuration as TOML instead of running it.
    #[arg(long)]
    print: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Power,
    Stretched,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SpacingArg {
    Log,
    Linear,
}

fn window(s: &str) -> std::result::Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok([parse(a)?, parse(b)?])
}

#[derive(Debug, Default, Args)]
struct AnalysisFlags {
    /// Envelope half-width in grid points.
    #[arg(long)]
    half_width: Option<usize>,
    /// Sets both fit windows, e.g. `10,100`.
    #[arg(long, value_parser = window)]
    fit_window: Option<[f64; 2]>,
    #[arg(long, value_parser = window)]
    classical_window: Option<[f64; 2]>,
    #[arg(long, value_parser = window)]
    quantum_window: Option<[f64; 2]>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Fraction of the series averaged for saturation values.
    #[arg(long)]
    tail_fraction: Option<f64>,
}

impl AnalysisFlags {
    fn apply(&self, a: &mut AnalysisConfig) {
        if let Some(v) = self.half_width {
            a.half_width = v;
        }
        if let Some(w) = self.fit_window {
            a.classical_window = Some(w);
            a.quantum_window = Some(w);
        }
        if let Some(w) = self.classical_window {
            a.classical_window = Some(w);
        }
        if let Some(w) = self.quantum_window {
            a.quantum_window = Some(w);
        }
        if let Some(m) = self.model {
            a.model = match m {
                ModelArg::Power => Model::PowerLaw,
                ModelArg::Stretched => Model::StretchedExp,
            };
        }
        if let Some(v) = self.tail_fraction {
            a.tail_fraction = v;
        }
    }
}

#[derive(Debug, Default, Args)]
struct Overrides {
    /// Graph spec: ring:N, star:N, dendrimer:G,Z, torus:L,D, er:N,P[,seed=S].
    #[arg(long)]
    graph: Option<String>,
    /// Density spec: semicircle:nu=V[,lmax=L] or lifshits:b=B.
    #[arg(long)]
    dos: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long, value_enum)]
    spacing: Option<SpacingArg>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Leave t = 0 out of a log grid.
    #[arg(long)]
    no_zero: bool,
    /// Dense step added across the fit windows.
    #[arg(long)]
    refine_dt: Option<f64>,
    /// Also compute the exact averaged quantum return probability.
    #[arg(long)]
    pi_bar: bool,
    /// Also write the long-time transition matrix.
    #[arg(long)]
    chi: bool,
    #[arg(long)]
    dos_bins: Option<usize>,
    #[command(flatten)]
    analysis: AnalysisFlags,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        // A source given on the command line replaces the file's source.
        if self.graph.is_some() || self.dos.is_some() {
            cfg.graph = self.graph.clone();
            cfg.dos = self.dos.clone();
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.max_nodes {
            cfg.max_nodes = m;
        }
        let g = &mut cfg.grid;
        if let Some(s) = self.spacing {
            g.spacing = match s {
                SpacingArg::Log => Spacing::Log,
                SpacingArg::Linear => Spacing::Linear,
            };
        }
        if let Some(v) = self.t_min {
            g.t_min = v;
        }
        if let Some(v) = self.t_max {
            g.t_max = v;
        }
        if let Some(v) = self.points {
            g.points = v;
        }
        if self.no_zero {
            g.include_zero = false;
        }
        if let Some(v) = self.refine_dt {
            g.refine_dt = Some(v);
        }
        cfg.outputs.pi_bar |= self.pi_bar;
        cfg.outputs.chi |= self.chi;
        if let Some(b) = self.dos_bins {
            cfg.outputs.dos_bins = b;
        }
        self.analysis.apply(&mut cfg.analysis);
    }
}

/// What a successful invocation produced.
pub enum Outcome {
    Ran(Box<RunManifest>),
    Printed(String),
}

/// Parses `args` (including the program name) and executes the command.
pub fn execute<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => e.exit(),
        _ => CliError::Config(e.to_string()),
    })?;
    let (cfg, stage) = match cli.command {
        Command::Run(a) => (a.load()?, Stage::Full),
        Command::Spectrum(a) => (a.load()?, Stage::Spectrum),
        Command::Transport(a) => (a.load()?, Stage::Transport),
        Command::Fit(f) => {
            let mut analysis = AnalysisConfig::default();
            f.analysis.apply(&mut analysis);
            return fit_series(&f.series, &analysis, f.nodes, &f.out)
                .map(|m| Outcome::Ran(Box::new(m)));
        }
        Command::Preset(p) => {
            let mut cfg = preset(&p.name)?;
            p.overrides.apply(&mut cfg);
            if p.print {
                return Ok(Outcome::Printed(cfg.to_toml()));
            }
            (cfg, Stage::Full)
        }
    };
    run_stage(&cfg, stage).map(|m| Outcome::Ran(Box::new(m)))
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        self.overrides.apply(&mut cfg);
        Ok(cfg)
    }
}
