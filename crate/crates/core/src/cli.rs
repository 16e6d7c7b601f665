//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 invalid input,
//! 3 fit or inference failure, 4 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{
    evaluate_spectrum, general_lines, mollow_limit_lines, three_atom_lines, two_atom_lines, Grid, LineSpectrum,
    SampledSpectrum,
};
use crate::error::{Error, Result};
use crate::figures::figure_data;
use crate::inference::{
    add_multiplicative_noise, analyze_spectrum, estimate_mean_distance, fit_lorentzians, merged_regime_estimate,
    smooth, detect_peaks, FitOptions, FitResult, InferenceDiagnostic, InferenceOptions, Peak, PipelineOptions,
};
use crate::io::{read_lines, read_params, read_spectrum, write_lines, write_spectrum, GridSpec, Header};
use crate::liouville::{bare_spectrum_oracle, dressed_spectrum_oracle};
use crate::model::{make_params, SystemParams};
use crate::validate::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_FIT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParams(_) | Error::Unsupported(_) | Error::Parse { .. } | Error::Format(_) | Error::Io(_) => {
            EXIT_INVALID_INPUT
        }
        Error::Fit(_) | Error::Inference(_) => EXIT_FIT,
        Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "dicke-spectra", version, about = "Collective resonance-fluorescence spectra of dipole-coupled emitters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form line list and sampled spectrum.
    Spectrum(SpectrumArgs),
    /// Numerical master-equation spectrum.
    Oracle(OracleArgs),
    /// Run self-check suites.
    Validate(ValidateArgs),
    /// Multi-Lorentzian fit of a spectrum file.
    Fit(FitArgs),
    /// Recover N, delta and Omega from a spectrum file.
    Infer(InferArgs),
    /// Data for the three reference figures, normalized as S/N^2.
    Figures(FiguresArgs),
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// TOML parameters file; explicit flags override its values.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub rabi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub dd: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub detuning: Option<f64>,
    /// Sample grid as MIN:MAX:POINTS (default ±(2Ω+δ+20), 4001 points).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<(SystemParams, Grid, GridSpec)> {
        let file = self.params.as_deref().map(read_params).transpose()?;
        let n = self
            .n
            .or(file.as_ref().map(|f| f.n_emitters.max(0) as usize))
            .ok_or_else(|| Error::InvalidParams("--n is required without --params".into()))?;
        let rabi = self
            .rabi
            .or(file.as_ref().map(|f| f.rabi))
            .ok_or_else(|| Error::InvalidParams("--rabi is required without --params".into()))?;
        let dd = self.dd.or(file.as_ref().map(|f| f.dd_coupling)).unwrap_or(0.0);
        let detuning = self.detuning.or(file.as_ref().map(|f| f.detuning)).unwrap_or(0.0);
        let params = make_params(n, rabi, dd, detuning)?;
        let spec = match (&self.grid, file.as_ref().and_then(|f| f.grid)) {
            (Some(text), _) => parse_grid(text)?,
            (None, Some(g)) => g,
            (None, None) => GridSpec::default_for(&params),
        };
        Ok((params, spec.to_grid()?, spec))
    }
}

pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidParams(format!("grid must be MIN:MAX:POINTS, got '{text}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let spec = GridSpec {
        min: parts[0].trim().parse().map_err(|_| bad())?,
        max: parts[1].trim().parse().map_err(|_| bad())?,
        points: parts[2].trim().parse().map_err(|_| bad())?,
    };
    spec.to_grid()?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    General,
    Mollow,
    N2,
    N3,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value = "general")]
    pub model: Model,
    /// Multiplicative Gaussian noise level applied to the sampled spectrum.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Spectrum file; the line list goes next to it with a `.lines.toml` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    Secular,
    Bare,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value = "secular")]
    pub frame: FrameArg,
    /// Output file (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Algebra,
    Appendix,
    Oracle,
    Inference,
    All,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Also write the report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitFlags {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Peak threshold as a fraction of the global maximum.
    #[arg(long, default_value_t = 1e-3)]
    pub min_prominence: f64,
    /// Moving-average half window used for peak counting on noisy data.
    #[arg(long, default_value_t = 0)]
    pub smooth: usize,
}

impl FitFlags {
    fn fit_options(&self) -> Result<FitOptions> {
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iter == 0 {
            return Err(Error::InvalidParams("--tol must be positive and --max-iter at least 1".into()));
        }
        Ok(FitOptions {
            max_iter: self.max_iter,
            tol: self.tol,
        })
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub flags: FitFlags,
    /// Start from this line list instead of detected peaks.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub flags: FitFlags,
    /// Constant C in r = (C/delta)^(1/3); enables the distance estimate.
    #[arg(long)]
    pub dipole_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// Figure number (all three if omitted).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub which: Option<u8>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let command_line = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let result = match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a, &command_line, out),
        Command::Oracle(a) => cmd_oracle(a, &command_line, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Infer(a) => cmd_infer(a, out),
        Command::Figures(a) => cmd_figures(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn header_for(generator: &str, params: &SystemParams, grid: &GridSpec, command_line: &str) -> Header {
    let mut h = Header::new(generator, Some(params));
    h.push("grid", &format!("{}:{}:{}", grid.min, grid.max, grid.points));
    h.push("command", &format!("dicke-spectra {command_line}"));
    h
}

fn lines_path(out: &Path) -> PathBuf {
    out.with_extension("lines.toml")
}

pub fn cmd_spectrum(a: &SpectrumArgs, command_line: &str, out: &mut dyn Write) -> Result<i32> {
    let (params, grid, grid_spec) = a.params.resolve()?;
    let lines: LineSpectrum = match a.model {
        Model::General => general_lines(&params)?,
        Model::Mollow => mollow_limit_lines(&params)?,
        Model::N2 => two_atom_lines(&params)?,
        Model::N3 => three_atom_lines(&params)?,
    };
    if !(a.noise >= 0.0 && a.noise.is_finite()) {
        return Err(Error::InvalidParams(format!("--noise must be non-negative, got {}", a.noise)));
    }
    let mut spectrum = evaluate_spectrum(&lines.lines, &grid);
    let mut header = header_for(&format!("analytic {}", lines.provenance), &params, &grid_spec, command_line);
    if a.noise > 0.0 {
        spectrum = add_multiplicative_noise(&spectrum, a.noise, a.seed);
        header.push("noise", &format!("multiplicative gaussian level={} seed={}", a.noise, a.seed));
    }
    write_spectrum(&a.out, &spectrum, &header)?;
    let lp = lines_path(&a.out);
    write_lines(&lp, &lines)?;
    writeln!(out, "wrote {} ({} points) and {} ({} lines)", a.out.display(), spectrum.len(), lp.display(), lines.len())?;
    Ok(EXIT_OK)
}

pub fn cmd_oracle(a: &OracleArgs, command_line: &str, out: &mut dyn Write) -> Result<i32> {
    let (params, grid, grid_spec) = a.params.resolve()?;
    let spectrum = match a.frame {
        FrameArg::Secular => dressed_spectrum_oracle(&params, &grid)?,
        FrameArg::Bare => bare_spectrum_oracle(&params, &grid)?,
    };
    let generator = match a.frame {
        FrameArg::Secular => "oracle secular",
        FrameArg::Bare => "oracle bare",
    };
    let header = header_for(generator, &params, &grid_spec, command_line);
    match &a.out {
        Some(path) => {
            write_spectrum(path, &spectrum, &header)?;
            writeln!(out, "wrote {} ({} points)", path.display(), spectrum.len())?;
        }
        None => write!(out, "{}", crate::io::spectrum_to_string(&spectrum, &header))?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let suite = match a.suite {
        SuiteArg::Algebra => Suite::Algebra,
        SuiteArg::Appendix => Suite::Appendix,
        SuiteArg::Oracle => Suite::Oracle,
        SuiteArg::Inference => Suite::Inference,
        SuiteArg::All => Suite::All,
    };
    let checks = run_suite(suite);
    let report: String = checks.iter().map(|c| format!("{c}\n")).collect();
    write!(out, "{report}")?;
    if let Some(path) = &a.report {
        std::fs::write(path, &report)?;
    }
    Ok(if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_VALIDATION })
}

#[derive(Serialize)]
struct LineReport {
    center: f64,
    half_width: f64,
    weight: f64,
    sigma_center: f64,
    sigma_half_width: f64,
    sigma_weight: f64,
}

#[derive(Serialize)]
struct FitReport {
    converged: bool,
    iterations: usize,
    residual_norm: f64,
    lines: Vec<LineReport>,
}

impl FitReport {
    fn new(fit: &FitResult) -> Self {
        let mut lines: Vec<LineReport> = fit
            .lines
            .iter()
            .zip(&fit.uncertainties)
            .map(|(l, u)| LineReport {
                center: l.center,
                half_width: l.half_width,
                weight: l.weight,
                sigma_center: u.center,
                sigma_half_width: u.half_width,
                sigma_weight: u.weight,
            })
            .collect();
        lines.sort_by(|a, b| a.center.total_cmp(&b.center));
        Self {
            converged: fit.converged,
            iterations: fit.iterations,
            residual_norm: fit.residual_norm,
            lines,
        }
    }
}

fn to_toml<T: Serialize>(v: &T) -> String {
    toml::to_string(v).unwrap_or_else(|e| format!("# report serialization failed: {e}\n"))
}

fn load_spectrum(path: &Path) -> Result<SampledSpectrum> {
    Ok(read_spectrum(path)?.0)
}

fn initial_peaks(spectrum: &SampledSpectrum, flags: &FitFlags) -> Result<Vec<Peak>> {
    let peaks = detect_peaks(&smooth(spectrum, flags.smooth), flags.min_prominence)?;
    if peaks.is_empty() {
        return Err(Error::Fit("no peaks to start the fit from".into()));
    }
    Ok(peaks)
}

pub fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> Result<i32> {
    let spectrum = load_spectrum(&a.flags.input)?;
    let options = a.flags.fit_options()?;
    let init = match &a.init {
        Some(path) => read_lines(path)?.lines,
        None => initial_peaks(&spectrum, &a.flags)?.iter().map(Peak::as_line).collect(),
    };
    let fit = fit_lorentzians(&spectrum, &init, options)?;
    write!(out, "{}", to_toml(&FitReport::new(&fit)))?;
    Ok(if fit.converged { EXIT_OK } else { EXIT_FIT })
}

#[derive(Serialize)]
struct InferReport {
    status: String,
    peaks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_hat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_from_spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distinguishability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_distance: Option<f64>,
    diagnostics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    merged_regime: Option<MergedReport>,
    fit: FitReport,
}

#[derive(Serialize)]
struct MergedReport {
    omega_hat: f64,
    sideband_half_width: f64,
    excess_width: f64,
}

pub fn cmd_infer(a: &InferArgs, out: &mut dyn Write) -> Result<i32> {
    let spectrum = load_spectrum(&a.flags.input)?;
    if let Some(c) = a.dipole_scale {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParams(format!("--dipole-scale must be positive, got {c}")));
        }
    }
    let options = PipelineOptions {
        min_prominence_fraction: a.flags.min_prominence,
        smoothing: a.flags.smooth,
        fit: a.flags.fit_options()?,
        inference: InferenceOptions::default(),
        ..PipelineOptions::default()
    };
    let analysis = analyze_spectrum(&spectrum, options)?;
    let mut report = InferReport {
        status: String::new(),
        peaks: analysis.peaks.len(),
        n_hat: None,
        delta_hat: None,
        delta_from_spacing: None,
        omega_hat: None,
        distinguishability: None,
        mean_distance: None,
        diagnostics: Vec::new(),
        merged_regime: None,
        fit: FitReport::new(&analysis.fit),
    };
    let code = match &analysis.inference {
        Ok(r) => {
            report.status = "ok".into();
            report.n_hat = Some(r.n_hat);
            report.delta_hat = Some(r.delta_hat);
            report.delta_from_spacing = Some(r.delta_from_spacing);
            report.omega_hat = Some(r.omega_hat);
            report.distinguishability = r.distinguishability;
            if let (Some(c), true) = (a.dipole_scale, r.delta_hat > 0.0) {
                report.mean_distance = Some(estimate_mean_distance(r.delta_hat, c)?);
            }
            report.diagnostics = r
                .diagnostics
                .iter()
                .map(|d| match d {
                    InferenceDiagnostic::EstimatorDisagreement { span, spacing } => {
                        format!("span estimate {span:.6} and spacing estimate {spacing:.6} disagree by more than 5%")
                    }
                    InferenceDiagnostic::PoorlyResolved { ratio } => {
                        format!("sideband spacing is only {ratio:.3} linewidth units; lines are poorly resolved")
                    }
                })
                .collect();
            EXIT_OK
        }
        Err(e) => {
            report.status = format!("failed: {e}");
            if let Ok(m) = merged_regime_estimate(&spectrum, options.fit) {
                report.diagnostics.push("merged regime: three-line fit reported as a coupling proxy, not a calibrated estimate".into());
                report.merged_regime = Some(MergedReport {
                    omega_hat: m.omega_hat,
                    sideband_half_width: m.sideband_half_width,
                    excess_width: m.excess_width,
                });
            }
            EXIT_FIT
        }
    };
    write!(out, "{}", to_toml(&report))?;
    Ok(code)
}

pub fn cmd_figures(a: &FiguresArgs, out: &mut dyn Write) -> Result<i32> {
    let which: Vec<u8> = match a.which {
        Some(w) => vec![w],
        None => vec![1, 2, 3],
    };
    std::fs::create_dir_all(&a.out_dir)?;
    for w in which {
        let data = figure_data(w)?;
        let params = data.spec.params();
        let mut header = Header::new(&format!("figure {w}"), Some(&params));
        header.push("caption", &data.spec.caption());
        header.push("normalization", "S/N^2");
        header.push("command", &format!("dicke-spectra figures --which {w}"));
        let path = a.out_dir.join(format!("fig{w}.dat"));
        write_spectrum(&path, &data.spectrum, &header)?;
        writeln!(out, "wrote {} ({})", path.display(), data.spec.caption())?;
    }
    Ok(EXIT_OK)
}
