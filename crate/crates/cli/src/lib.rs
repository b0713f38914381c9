//! Command-line front end: runs sweeps from a config document, fits CSV data
//! and summarises result files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use noonsim::config::{parse_config, ConfigDoc};
use noonsim::error::Error;
use noonsim::experiment::{
    brightness_from_config, calibration_from_config, hom_scan_from_config, phase_sweep_from_config,
    RunOptions, Series, SweepResult,
};
use noonsim::fit::{fit_model, Branch, FitData, FitOptions, FringeModel};

pub mod output;
pub mod plot;

pub use output::{config_hash, emit_csv, emit_json, fit_json, read_csv, CSV_HEADER, SCHEMA_VERSION};
pub use plot::emit_plot;

/// Exit status for command-line usage errors.
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or invalid input document. Exit status 1.
    Config(String),
    /// Simulation, fit or I/O failure. Exit status 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::ConfigSyntax { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "noonsim", version, about = "Two-source SFWM interferometer simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a sweep and write `<name>.csv` and `<name>.json`.
    Simulate {
        #[arg(value_enum)]
        kind: SweepKind,
        #[command(flatten)]
        args: SimulateArgs,
    },
    /// Fit a model to the `control`, `counts_net` and `sigma` columns of a CSV file.
    Fit {
        csv: PathBuf,
        #[arg(long, value_enum)]
        model: ModelName,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
        /// Fit the fringe period instead of holding it fixed.
        #[arg(long)]
        free_period: bool,
        /// Pump wavelength for the `hom` model.
        #[arg(long, default_value_t = 1549.6)]
        lambda_p_nm: f64,
        /// Hold the `hom` channel width at this value.
        #[arg(long)]
        width_nm: Option<f64>,
    },
    /// Summarise a JSON result file.
    Report { results: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    PhaseSweep,
    HomScan,
    Brightness,
    Calibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Sinsq,
    Cossq,
    Classical,
    #[value(name = "eq4-a")]
    Eq4A,
    #[value(name = "eq4-b")]
    Eq4B,
    Hom,
}

impl ModelName {
    pub fn model(self, lambda_p_nm: f64) -> FringeModel<f64> {
        match self {
            ModelName::Sinsq => FringeModel::SinSq,
            ModelName::Cossq => FringeModel::CosSq,
            ModelName::Classical => FringeModel::ClassicalMz,
            ModelName::Eq4A => FringeModel::Eq4Asym(Branch::A),
            ModelName::Eq4B => FringeModel::Eq4Asym(Branch::B),
            ModelName::Hom => FringeModel::Hom { lambda_p_nm },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; falls back to `$NOONSIM_OUT`, then the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, conflicts_with = "noiseless")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub plot: bool,
    /// Write expected counts instead of Poisson samples.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long)]
    pub points: Option<usize>,
    /// Signal-idler detuning for `hom-scan`.
    #[arg(long)]
    pub delta_nm: Option<f64>,
}

/// Output directory from the flag, `NOONSIM_OUT`, or `.`; created if missing.
pub fn output_dir(flag: Option<&Path>) -> CliResult<PathBuf> {
    let dir = match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os("NOONSIM_OUT").map_or_else(|| PathBuf::from("."), PathBuf::from),
    };
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("cannot create output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn load_config(path: &Path) -> CliResult<(ConfigDoc, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let doc = parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let hash = config_hash(&doc);
    Ok((doc, hash))
}

pub fn simulate(kind: SweepKind, doc: &ConfigDoc, opts: &RunOptions) -> CliResult<SweepResult> {
    let result = match kind {
        SweepKind::PhaseSweep => phase_sweep_from_config(doc, opts),
        SweepKind::HomScan => hom_scan_from_config(doc, opts),
        SweepKind::Brightness => brightness_from_config(doc, opts),
        SweepKind::Calibration => calibration_from_config(doc, opts),
    };
    Ok(result?)
}

/// Runs one command; returns the text for standard output.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Simulate { kind, args } => run_simulate(*kind, args),
        Command::Fit {
            csv,
            model,
            out,
            plot,
            free_period,
            lambda_p_nm,
            width_nm,
        } => {
            let model = model.model(*lambda_p_nm);
            let mut options = FitOptions::default();
            if *free_period {
                if !matches!(model, FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz) {
                    return Err(CliError::Config(format!("model {model} has no period")));
                }
                options = options.free_period(&model);
            }
            if let Some(w) = width_nm {
                if !matches!(model, FringeModel::Hom { .. }) {
                    return Err(CliError::Config(format!("model {model} has no channel width")));
                }
                options = options.fix(&model, "width_nm", *w);
            }
            run_fit(csv, model, &options, out.as_deref(), *plot)
        }
        Command::Report { results } => report(results),
    }
}

fn run_simulate(kind: SweepKind, args: &SimulateArgs) -> CliResult<String> {
    let (doc, hash) = load_config(&args.config)?;
    let opts = RunOptions {
        seed: args.seed,
        noiseless: args.noiseless,
        points: args.points,
        delta_nm: args.delta_nm,
    };
    let result = simulate(kind, &doc, &opts)?;
    let dir = output_dir(args.out.as_deref())?;
    let mut written = vec![dir.join(format!("{}.csv", result.name)), dir.join(format!("{}.json", result.name))];
    emit_csv(&result, &written[0])?;
    emit_json(&result, &hash, &written[1])?;
    if args.plot {
        let svg = dir.join(format!("{}.svg", result.name));
        emit_plot(&result, &svg)?;
        written.push(svg);
    }
    let mut text = String::new();
    for s in &result.series {
        if let Some(fit) = &s.fit {
            text += &format!(
                "{} ({}): V = {:.4} ± {:.4}\n",
                s.label, fit.model, fit.visibility, fit.visibility_sigma
            );
        }
    }
    for (k, v) in &result.metrics {
        text += &format!("{k} = {v}\n");
    }
    for p in written {
        text += &format!("wrote {}\n", p.display());
    }
    Ok(text)
}

fn run_fit(
    csv: &Path,
    model: FringeModel<f64>,
    options: &FitOptions<f64>,
    out: Option<&Path>,
    plot: bool,
) -> CliResult<String> {
    let (x, y, sigma) = read_csv(csv)?;
    let data = FitData::new(x.clone(), y.clone(), sigma.clone())
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv.display())))?;
    let fit = fit_model(&data, model, options)?;
    let stem = csv
        .file_stem()
        .map_or_else(|| "fit".to_string(), |s| s.to_string_lossy().into_owned());
    let source = csv
        .file_name()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let dir = output_dir(out)?;
    let json_path = dir.join(format!("{stem}_{model}.json"));
    let doc = fit_json(&fit, &source);
    output::write_json(&doc, &json_path)?;
    let mut text = format!(
        "{model}: V = {:.6} ± {:.6}, χ²/dof = {:.4}\n",
        fit.visibility,
        fit.visibility_sigma,
        fit.chi2_per_dof()
    );
    for (i, name) in model.param_names().iter().enumerate() {
        text += &format!("  {name} = {} ± {}\n", fit.params[i], fit.uncertainties[i]);
    }
    text += &format!("wrote {}\n", json_path.display());
    if plot {
        let svg = dir.join(format!("{stem}_{model}.svg"));
        let series = Series {
            label: stem.clone(),
            x,
            y,
            sigma,
            fit: Some(fit),
        };
        plot::write_svg(&[series], "control", &svg)?;
        text += &format!("wrote {}\n", svg.display());
    }
    Ok(text)
}

fn report(path: &Path) -> CliResult<String> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read results {}: {e}", path.display())))?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: not a result file: {e}", path.display())))?;
    output::summarise(&doc).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
}
