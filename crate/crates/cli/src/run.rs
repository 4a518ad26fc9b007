use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use qtransport::analysis::{efficiency_report, EfficiencyReport};
use qtransport::continuum::{
    classical_return_continuum, quantum_return_bound_continuum, ContinuousDos,
};
use qtransport::format_f64;
use qtransport::graph::{laplacian, GraphSpec};
use qtransport::spectral::{decompose, degeneracies_to_csv, degeneracy_table, dos_histogram};
use qtransport::transport::{chi_matrix, TransportSeries};

use crate::config::{AnalysisConfig, ExperimentConfig, Source};
use crate::error::{CliError, Result};
use crate::manifest::{sha256_hex, RunManifest, MANIFEST_FILE};

/// How far down the pipeline to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Eigenvalues, degeneracies, histogram.
    Spectrum,
    /// Everything up to `series.csv`.
    Transport,
    /// Series plus fits and `ΔP`.
    Full,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Spectrum => "spectrum",
            Stage::Transport => "transport",
            Stage::Full => "run",
        }
    }
}

/// Collects artifacts and their checksums.
struct Writer<'a> {
    dir: &'a Path,
    files: BTreeMap<String, String>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Writer {
            dir,
            files: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.files
            .insert(name.to_string(), sha256_hex(text.as_bytes()));
        Ok(())
    }

    fn finish(
        self,
        command: &str,
        config: &ExperimentConfig,
        start: Instant,
    ) -> Result<RunManifest> {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            duration_seconds: start.elapsed().as_secs_f64(),
            files: self.files,
            config: config.clone(),
        };
        let path = self.dir.join(MANIFEST_FILE);
        std::fs::write(&path, manifest.to_toml()).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Runs `config` up to `stage`, writing artifacts under `config.out`.
pub fn run_stage(config: &ExperimentConfig, stage: Stage) -> Result<RunManifest> {
    let start = Instant::now();
    let source = config.validate()?;
    let mut out = Writer::new(&config.out)?;
    let (series, nodes) = match &source {
        Source::Graph(spec) => graph_pipeline(config, spec, stage, &mut out)?,
        Source::Dos(dos) => {
            if stage == Stage::Spectrum {
                return Err(CliError::Config(
                    "the spectrum stage needs a graph, not a continuum DOS".into(),
                ));
            }
            (dos_pipeline(config, dos, &mut out)?, None)
        }
    };
    if let Some(series) = series {
        out.write("series.csv", &series.to_csv())?;
        if stage == Stage::Full {
            let report = efficiency_report(&series, &config.analysis.options(), nodes)?;
            write_report(&mut out, &source.to_string(), &report)?;
        }
    }
    out.finish(stage.name(), config, start)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    run_stage(config, Stage::Full)
}

fn graph_pipeline(
    config: &ExperimentConfig,
    spec: &GraphSpec,
    stage: Stage,
    out: &mut Writer,
) -> Result<(Option<TransportSeries>, Option<usize>)> {
    let graph = spec.build(config.seed, config.max_nodes)?;
    let wants_vectors = stage != Stage::Spectrum && (config.outputs.pi_bar || config.outputs.chi);
    let spectrum = decompose(&laplacian(&graph), wants_vectors)?;
    out.write("spectrum.csv", &spectrum.to_csv())?;
    let table = degeneracy_table(&spectrum, spectrum.default_cluster_tol())?;
    out.write("degeneracies.csv", &degeneracies_to_csv(&table))?;
    if config.outputs.dos_bins > 0 {
        out.write(
            "dos.csv",
            &dos_histogram(&spectrum, config.outputs.dos_bins)?.to_csv(),
        )?;
    }
    if stage == Stage::Spectrum {
        return Ok((None, Some(graph.n())));
    }
    if config.outputs.chi {
        let chi = chi_matrix(&spectrum, spectrum.default_cluster_tol())?;
        out.write("chi.csv", &chi.to_csv())?;
    }
    let grid = config.time_grid()?;
    let series = TransportSeries::from_spectrum(&spectrum, &grid, config.outputs.pi_bar)?;
    Ok((Some(series), Some(graph.n())))
}

fn dos_pipeline(
    config: &ExperimentConfig,
    dos: &ContinuousDos,
    out: &mut Writer,
) -> Result<Option<TransportSeries>> {
    if config.outputs.dos_bins > 0 {
        out.write("dos.csv", &sampled_density(dos, config.outputs.dos_bins))?;
    }
    let grid = config.time_grid()?;
    let p_bar = classical_return_continuum(dos, &grid)?;
    let alpha_bar_sq = quantum_return_bound_continuum(dos, &grid)?;
    Ok(Some(TransportSeries {
        grid,
        p_bar,
        alpha_bar_sq,
        pi_bar: None,
    }))
}

/// `lambda,density` at bin midpoints; a Lifshits density is cut at 10.
fn sampled_density(dos: &ContinuousDos, bins: usize) -> String {
    let (lo, hi) = dos.support();
    let hi = if hi.is_finite() { hi } else { 10.0 };
    let width = (hi - lo) / bins as f64;
    let mut text = String::from("lambda,density\n");
    for i in 0..bins {
        let x = lo + (i as f64 + 0.5) * width;
        let _ = writeln!(text, "{},{}", format_f64(x), format_f64(dos.density(x)));
    }
    text
}

fn write_report(out: &mut Writer, source: &str, report: &EfficiencyReport) -> Result<()> {
    let text = format!("source = {source}\n{}", report.to_text());
    out.write("report.txt", &text)?;
    out.write("deltap.csv", &report.delta_p.to_csv())
}

/// Analysis of an existing `series.csv`; `nodes` sets the equipartition
/// reference in the report.
pub fn fit_series(
    series_csv: &Path,
    analysis: &AnalysisConfig,
    nodes: Option<usize>,
    out_dir: &Path,
) -> Result<RunManifest> {
    let start = Instant::now();
    let text = std::fs::read_to_string(series_csv).map_err(|e| CliError::io(series_csv, e))?;
    let series = TransportSeries::from_csv(&text)?;
    let config = ExperimentConfig {
        out: out_dir.to_path_buf(),
        analysis: analysis.clone(),
        ..ExperimentConfig::default()
    };
    let report = efficiency_report(&series, &analysis.options(), nodes)?;
    let mut out = Writer::new(out_dir)?;
    write_report(&mut out, &series_csv.display().to_string(), &report)?;
    out.finish("fit", &config, start)
}
