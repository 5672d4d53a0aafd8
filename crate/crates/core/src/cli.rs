//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{fit, FitModel, FitResult};
use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::intensity::{
    central_fringe_visibility, converged_fields, fringe_visibility, Pattern, SlitFields,
    SuperpositionSpec,
};
use crate::io::{load_experimental_csv, read_pattern, write_fit_report, write_pattern};
use crate::oracle::run_oracle;
use crate::physics::derive_kinematics;
use crate::propagation::Kernel;

#[derive(Debug, Parser)]
#[command(
    name = "matterwave",
    version,
    about = "Matter-wave slit diffraction patterns and calibration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-slit pattern.
    Single(RunArgs),
    /// Double-slit pattern, coherent or decoherent according to the config mode.
    Double(RunArgs),
    /// Fit the free parameters of the config to measured counts.
    Fit(FitArgs),
    /// Fringe visibility of the central maximum of a pattern file.
    Visibility(VisibilityArgs),
    /// Compare closed-form aperture integrals with adaptive quadrature.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Pattern file to write; defaults to the config `output` or `pattern.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub kernel: Option<Kernel>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Experimental `s_m,counts` table.
    #[arg(long)]
    pub data: PathBuf,
    /// Fit report (TOML).
    #[arg(long, default_value = "fit_report.toml")]
    pub out: PathBuf,
    /// Fitted-model pattern; defaults to the report path with a `.csv` extension.
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    #[arg(long)]
    pub kernel: Option<Kernel>,
}

#[derive(Debug, Args)]
pub struct VisibilityArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    /// Only look for the minimum within this distance (m) of the maximum.
    #[arg(long)]
    pub window: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1000)]
    pub cases: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

/// Slit fields for `cfg` at `amplitude`, refined to `tail_tol` when the
/// config asks for adaptive truncation.
pub fn config_fields(cfg: &RunConfig, amplitude: f64) -> Result<SlitFields> {
    let kin = derive_kinematics(&cfg.physics)?;
    let scan = cfg.screen.geometry()?;
    let trunc = &cfg.numerics.truncation;
    if !cfg.numerics.adaptive {
        return SlitFields::compute(&scan, cfg.kernel, trunc, &kin, &cfg.geometry, amplitude);
    }
    let mode = cfg.mode;
    let spec = cfg.superposition.unwrap_or_else(SuperpositionSpec::equal);
    let lambda_t = match mode {
        Mode::DoubleDecoherent => cfg.decoherence.map_or(1.0, |d| d.lambda_t),
        _ => 1.0,
    };
    converged_fields(
        &scan,
        cfg.kernel,
        trunc,
        &kin,
        &cfg.geometry,
        amplitude,
        |f| match mode {
            Mode::Single => f.single_intensities(),
            _ => f.mixed_intensities(&spec, lambda_t),
        },
    )
}

fn pattern_for(cfg: &RunConfig, fields: &SlitFields) -> Result<Pattern> {
    let sup = || {
        cfg.superposition
            .ok_or_else(|| Error::MissingKey("superposition".into()))
    };
    let mut pattern = match cfg.mode {
        Mode::Single => fields.single()?,
        Mode::DoubleCoherent => fields.coherent(&sup()?)?,
        Mode::DoubleDecoherent => fields.decoherent(
            &sup()?,
            &cfg.decoherence
                .ok_or_else(|| Error::MissingKey("decoherence".into()))?,
        )?,
    };
    pattern
        .metadata
        .insert("amplitude".into(), format!("{:e}", cfg.physics.amplitude));
    Ok(pattern)
}

/// Intensity pattern described by `cfg`.
pub fn simulate(cfg: &RunConfig) -> Result<Pattern> {
    let fields = config_fields(cfg, cfg.physics.amplitude)?;
    pattern_for(cfg, &fields)
}

fn load(path: &Path, kernel: Option<Kernel>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(k) = kernel {
        cfg.kernel = k;
    }
    Ok(cfg)
}

fn run_pattern(args: &RunArgs, double: bool) -> Result<()> {
    let mut cfg = load(&args.config, args.kernel)?;
    if double && !cfg.mode.is_double() {
        return Err(Error::validation(
            "mode",
            "`double` needs a double-coherent or double-decoherent config",
        ));
    }
    if !double {
        cfg.mode = Mode::Single;
    }
    let pattern = simulate(&cfg)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("pattern.csv"));
    write_pattern(&out, &pattern, Some(&cfg))?;
    println!(
        "wrote {} ({} points, max_m = {}, max_n = {})",
        out.display(),
        pattern.len(),
        pattern.metadata["max_m"],
        pattern.metadata["max_n"]
    );
    Ok(())
}

fn fitted_config(cfg: &RunConfig, result: &FitResult) -> Result<RunConfig> {
    let mut fitted = cfg.clone();
    fitted.physics.amplitude = result.values.amplitude;
    if fitted.mode.is_double() {
        fitted.superposition = Some(SuperpositionSpec::from_c1(result.values.c1)?);
    }
    if fitted.mode == Mode::DoubleDecoherent {
        fitted.decoherence = Some(crate::intensity::DecoherenceSpec::from_lambda(
            result.values.lambda_t,
        )?);
    }
    Ok(fitted)
}

fn run_fit(args: &FitArgs) -> Result<()> {
    let cfg = load(&args.config, args.kernel)?;
    let data = load_experimental_csv(&args.data)?;
    let spec = cfg.fit_spec();
    let model = FitModel::new(cfg.mode.model_kind(), config_fields(&cfg, 1.0)?);
    let result = fit(&model, &data, &spec)?;
    write_fit_report(&args.out, &cfg, &data, &spec, &result)?;
    let fitted = fitted_config(&cfg, &result)?;
    let mut pattern = model.pattern(&result.values)?;
    pattern
        .metadata
        .insert("amplitude".into(), format!("{:e}", result.values.amplitude));
    let pattern_path = args
        .pattern
        .clone()
        .unwrap_or_else(|| args.out.with_extension("csv"));
    write_pattern(&pattern_path, &pattern, Some(&fitted))?;
    println!(
        "A = {:e}, c1 = {:e}, c2 = {:e}, lambda_t = {:e}, objective = {:e}, evaluations = {}, converged = {}",
        result.values.amplitude,
        result.values.c1,
        result.values.c2(),
        result.values.lambda_t,
        result.objective,
        result.evaluations,
        result.converged
    );
    Ok(())
}

fn run_visibility(args: &VisibilityArgs) -> Result<()> {
    let pattern = read_pattern(&args.pattern)?;
    let nu = match args.window {
        Some(w) => central_fringe_visibility(&pattern, w)?,
        None => fringe_visibility(&pattern)?,
    };
    println!("{nu:.6}");
    Ok(())
}

fn run_oracle_check(args: &OracleArgs) -> Result<()> {
    let report = run_oracle(args.cases, args.seed)?;
    let pass = report.max_relative_error < args.tolerance;
    println!(
        "{} cases ({} near resonance), max relative error {:e}, tolerance {:e}: {}",
        report.cases,
        report.near_resonant,
        report.max_relative_error,
        args.tolerance,
        if pass { "PASS" } else { "FAIL" }
    );
    if !pass {
        return Err(Error::Analysis(format!("worst case {:?}", report.worst)));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Single(a) => run_pattern(a, false),
        Command::Double(a) => run_pattern(a, true),
        Command::Fit(a) => run_fit(a),
        Command::Visibility(a) => run_visibility(a),
        Command::OracleCheck(a) => run_oracle_check(a),
    }
}
