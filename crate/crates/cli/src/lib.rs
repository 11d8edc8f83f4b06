//! Command implementations behind the `ringpair` binary.
//!
//! Every command computes all of its outputs in memory first; the output
//! directory is only created once nothing can fail except the writes.

pub mod overrides;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use ringpair::analysis::{analyze, analyze_amplitude, analyze_intensity, find_peaks};
use ringpair::config::{simulate, DifferentiatorConfig, ResonanceSource};
use ringpair::io::{self, ComplexSeries};
use ringpair::jsa::compute_jsa_quadrature;
use ringpair::phasematch::{default_length_um, orientation_from_taus, orientation_map, OrientationPoint};
use ringpair::profile::local_maxima;
use ringpair::pump::{centered_time_grid, estimate_diff_order, pump_waveform, PumpTransform};
use ringpair::specfit::{fit_resonance, FitOptions};
use ringpair::units::{omega_to_wavelength, wavelength_to_omega, AngularFrequency};
use ringpair::{Config, Error, PhaseMatch, Pump, Report, Resonance};
use serde::Serialize;
use serde_json::Value;

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_CONSISTENCY: u8 = 3;

/// Pump spectrum samples written by `pump`, spanning ±4 FWHM.
const PUMP_SPECTRUM_POINTS: usize = 1001;
const PUMP_SPECTRUM_SPAN_FWHM: f64 = 4.0;
/// Waveform grid: 16 samples per inverse FWHM bandwidth period.
const WAVEFORM_POINTS: usize = 4096;
const WAVEFORM_OVERSAMPLE: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Consistency(_) | Error::Singular { .. } => EXIT_CONSISTENCY,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "ringpair", version, about = "Biphoton spectra of microring photon-pair sources")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for randomised fit restarts.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads: a positive integer or `auto`.
    #[arg(long, global = true, default_value = "auto")]
    pub threads: String,
    /// Suppress summaries and warnings.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Simulation config (JSON).
    pub config: PathBuf,
    /// Override a config value, e.g. `--set pump.fwhm_pm=148`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Complex amplitude; the Schmidt decomposition keeps the phase.
    Jsa,
    /// Intensity grid as written to `jsi.csv` (`re` column); flat phase assumed.
    Jsi,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the split-resonance model to a transmission spectrum.
    Fit {
        /// Spectrum CSV (`wavelength_nm,transmission`).
        spectrum: PathBuf,
        /// Label stored in the result; defaults to the file stem.
        #[arg(long)]
        label: Option<String>,
        /// Starting point: a preset name or a resonance JSON file.
        #[arg(long)]
        init: Option<String>,
    },
    /// Compute the JSA, filtering factors and analysis report.
    Simulate(ConfigArgs),
    /// Repeat the analysis over values of one config key.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Dotted config key to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<String>,
    },
    /// Time-domain signal-idler correlation map.
    Tdsi(ConfigArgs),
    /// Sum-frequency amplitude distribution.
    Adp(ConfigArgs),
    /// Pump spectrum, temporal waveform and resolved shaping stage.
    Pump(ConfigArgs),
    /// Group-delay mismatch and orientation angle from a dispersion table.
    Phasematch {
        /// Dispersion CSV (`lambda_nm,k1_ps_per_um`).
        #[arg(long)]
        dispersion: PathBuf,
        #[arg(long)]
        pump_nm: f64,
        #[arg(long)]
        signal_nm: f64,
        #[arg(long)]
        idler_nm: f64,
        /// Interaction length in µm; defaults to the ring circumference.
        #[arg(long)]
        length_um: Option<f64>,
        /// Pump wavelengths for an orientation map.
        #[arg(long, value_delimiter = ',', requires = "map_offsets_nm")]
        map_pumps_nm: Vec<f64>,
        /// Idler-minus-pump offsets for an orientation map.
        #[arg(long, value_delimiter = ',', requires = "map_pumps_nm")]
        map_offsets_nm: Vec<f64>,
    },
    /// Schmidt analysis of a grid CSV written by `simulate`.
    Analyze {
        /// Grid CSV (`d_lambda_s_nm,d_lambda_i_nm,re,im,abs2`).
        grid: PathBuf,
        /// Config providing the signal and idler centres.
        #[arg(long, conflicts_with_all = ["signal_thz", "idler_thz"])]
        config: Option<PathBuf>,
        /// Signal centre in rad/ps.
        #[arg(long, requires = "idler_thz")]
        signal_thz: Option<f64>,
        /// Idler centre in rad/ps.
        #[arg(long, requires = "signal_thz")]
        idler_thz: Option<f64>,
        #[arg(long, value_enum, default_value_t = GridKind::Jsa)]
        kind: GridKind,
        /// Relative peak threshold.
        #[arg(long, default_value_t = 0.10)]
        threshold: f64,
        /// Decompose |F| instead of F.
        #[arg(long)]
        flat_phase: bool,
    },
}

impl Command {
    fn mode(&self) -> &'static str {
        match self {
            Self::Fit { .. } => "fit",
            Self::Simulate(_) => "simulate",
            Self::Sweep { .. } => "sweep",
            Self::Tdsi(_) => "tdsi",
            Self::Adp(_) => "adp",
            Self::Pump(_) => "pump",
            Self::Phasematch { .. } => "phasematch",
            Self::Analyze { .. } => "analyze",
        }
    }
}

/// Record of an invocation, written as `run.json` next to the outputs.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub mode: &'static str,
    pub inputs: Vec<String>,
    pub out: String,
    pub overrides: BTreeMap<String, String>,
    pub seed: Option<u64>,
}

/// Files and messages produced by a command, not yet written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    /// Non-zero for results that are written but flagged (non-convergence).
    pub code: u8,
}

impl Outcome {
    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
        bytes.push(b'\n');
        self.file(name, bytes);
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> ringpair::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

/// Loads a config, expands resonance references and applies overrides.
fn load_config(args: &ConfigArgs) -> Result<(Value, Config, BTreeMap<String, String>), CliError> {
    let text = read_text(&args.config)?;
    let mut tree = overrides::expand(&text, base_dir(&args.config)).map_err(|e| CliError::input(format!("{}: {e}", args.config.display())))?;
    let mut applied = BTreeMap::new();
    for s in &args.overrides {
        let (k, v) = overrides::parse_assignment(s)?;
        overrides::apply(&mut tree, &k, &v)?;
        applied.insert(k, v);
    }
    let cfg = overrides::to_config(&tree)?;
    Ok((tree, cfg, applied))
}

fn load_resonance(spec: &str) -> Result<Resonance, CliError> {
    if spec.ends_with(".json") {
        let path = Path::new(spec);
        serde_json::from_str(&read_text(path)?).map_err(|e| io_err(path, e))
    } else {
        Ok(ResonanceSource::Preset(spec.to_string()).resolve()?)
    }
}

fn cmd_fit(spectrum: &Path, label: Option<&str>, init: Option<&str>, seed: Option<u64>) -> Result<Outcome, CliError> {
    let file = std::fs::File::open(spectrum).map_err(|e| io_err(spectrum, e))?;
    let samples = io::read_spectrum::<f64, _>(file).map_err(|e| io_err(spectrum, e))?;
    let init = init.map(load_resonance).transpose()?;
    let mut options = FitOptions::default();
    if let Some(s) = seed {
        options.seed = s;
    }
    let mut fit = fit_resonance(&samples, init.as_ref(), &options)?;
    fit.params.label = match label {
        Some(l) => l.to_string(),
        None => spectrum.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    let mut out = Outcome::default();
    out.summary.push(format!("{} R2={}", fit.params.label, fit.r_squared));
    if !fit.converged {
        out.warnings.push(format!("fit did not converge after {} iterations", fit.iterations));
        out.code = EXIT_NOT_CONVERGED;
    }
    out.json("fit.json", &fit);
    Ok(out)
}

fn cmd_simulate(cfg: &Config) -> Result<Outcome, CliError> {
    let sim = simulate(cfg)?;
    let mut out = Outcome::default();
    out.warnings.extend(sim.warnings().iter().cloned());
    let jsi = sim.jsa.grid.map(|v| v.norm_sqr());
    out.file("jsa.csv", csv_bytes(|w| io::write_grid(w, &sim.jsa.grid))?);
    out.file("jsi.csv", csv_bytes(|w| io::write_intensity_grid(w, &jsi))?);
    let adp = ComplexSeries { x: sim.adp_grid.points().to_vec(), values: sim.adp.clone() };
    out.file("adp.csv", csv_bytes(|w| io::write_adp(w, &adp))?);
    out.file("tdsi.csv", csv_bytes(|w| io::write_grid(w, &sim.tdsi))?);
    out.summary.push(format!("purity={} g2={} peaks={}", sim.report.purity, sim.report.g2, sim.report.peaks.len()));
    out.json("report.json", &sim.report);
    Ok(out)
}

fn report_for(cfg: &Config) -> Result<(Report, Vec<String>), CliError> {
    let jsa = compute_jsa_quadrature(&cfg.source()?)?;
    let report = analyze(&jsa, cfg.analysis.flat_phase, cfg.analysis.jsi_threshold)?;
    Ok((report, jsa.warnings))
}

fn cmd_sweep(tree: &Value, param: &str, values: &[String]) -> Result<Outcome, CliError> {
    overrides::check_key(tree, param)?;
    let configs = values
        .iter()
        .map(|v| {
            let mut t = tree.clone();
            overrides::apply(&mut t, param, v)?;
            overrides::to_config(&t).map_err(|e| CliError::input(format!("{param}={v}: {}", e.message)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reports: Vec<_> = configs.par_iter().map(report_for).collect::<Result<_, _>>()?;
    let mut out = Outcome::default();
    let mut csv = String::from("value,purity,g2,n_peaks\n");
    for (v, (report, warnings)) in values.iter().zip(reports) {
        csv.push_str(&format!("{v},{},{},{}\n", report.purity, report.g2, report.peaks.len()));
        out.summary.push(format!("{param}={v} purity={} g2={} peaks={}", report.purity, report.g2, report.peaks.len()));
        out.warnings.extend(warnings.into_iter().map(|w| format!("{param}={v}: {w}")));
    }
    out.file("sweep.csv", csv.into_bytes());
    Ok(out)
}

fn cmd_tdsi(cfg: &Config) -> Result<Outcome, CliError> {
    let tdsi = ringpair::jsa::compute_tdsi(&cfg.source()?)?;
    let peaks = find_peaks(&tdsi.values.map(|v| v.norm_sqr()), cfg.analysis.tdsi_threshold).len();
    let mut out = Outcome::default();
    out.file("tdsi.csv", csv_bytes(|w| io::write_grid(w, &tdsi))?);
    out.summary.push(format!("peaks={peaks}"));
    Ok(out)
}

fn cmd_adp(cfg: &Config) -> Result<Outcome, CliError> {
    let source = cfg.source()?;
    let grid = ringpair::jsa::adp_sum_grid(&source)?;
    let values = ringpair::jsa::compute_adp(&source, &grid)?;
    let intensity: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
    let peaks = local_maxima(&intensity, cfg.analysis.adp_threshold).len();
    let mut out = Outcome::default();
    out.file("adp.csv", csv_bytes(|w| io::write_adp(w, &ComplexSeries { x: grid.points().to_vec(), values }))?);
    out.summary.push(format!("peaks={peaks}"));
    Ok(out)
}

#[derive(Debug, Serialize)]
struct PumpSummary {
    spec: Pump,
    /// Effective differentiation order over the shaping band, if shaped.
    order: Option<f64>,
}

fn cmd_pump(cfg: &Config) -> Result<Outcome, CliError> {
    let res = cfg.pump_resonance.resolve()?;
    let spec = cfg.pump_spec(&res)?;
    let fwhm = spec.fwhm_omega();
    let order = match (&spec.transform, &cfg.pump.differentiator) {
        (Some(PumpTransform::Mrr(ring)), Some(DifferentiatorConfig::Mrr { band_half_width, .. })) => {
            Some(estimate_diff_order(ring, band_half_width.unwrap_or(fwhm / 2.0))?)
        }
        (Some(PumpTransform::Ideal(d)), _) => Some(d.order),
        _ => None,
    };

    let half = PUMP_SPECTRUM_SPAN_FWHM * fwhm;
    let step = 2.0 * half / (PUMP_SPECTRUM_POINTS - 1) as f64;
    let mut spectrum = ComplexSeries { x: Vec::new(), values: Vec::new() };
    // descending detuning gives ascending wavelength
    for k in (0..PUMP_SPECTRUM_POINTS).rev() {
        let nu = -half + step * k as f64;
        spectrum.x.push(omega_to_wavelength(AngularFrequency(spec.center.0 + nu))?);
        spectrum.values.push(spec.at(nu));
    }
    let dt = std::f64::consts::TAU / (WAVEFORM_OVERSAMPLE * fwhm);
    let waveform = pump_waveform(&spec, &centered_time_grid(dt, WAVEFORM_POINTS))?;

    let mut out = Outcome::default();
    out.file("pump_spectrum.csv", csv_bytes(|w| io::write_complex_spectrum(w, &spectrum))?);
    out.file("waveform.csv", csv_bytes(|w| io::write_waveform(w, &waveform))?);
    match order {
        Some(n) => out.summary.push(format!("order={n}")),
        None => out.summary.push("order=none".into()),
    }
    out.json("pump.json", &PumpSummary { spec, order });
    Ok(out)
}

#[derive(Debug, Serialize)]
struct PhaseMatchSummary {
    tau_s: f64,
    tau_i: f64,
    theta_deg: f64,
    /// Ready to paste into a simulation config.
    phase_matching: PhaseMatch,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    map: Vec<OrientationPoint<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_phasematch(
    dispersion: &Path,
    pump_nm: f64,
    signal_nm: f64,
    idler_nm: f64,
    length_um: Option<f64>,
    map_pumps: &[f64],
    map_offsets: &[f64],
) -> Result<Outcome, CliError> {
    let file = std::fs::File::open(dispersion).map_err(|e| io_err(dispersion, e))?;
    let table = io::read_dispersion::<f64, _>(file).map_err(|e| io_err(dispersion, e))?;
    let (tau_s, tau_i) = table.taus(pump_nm, signal_nm, idler_nm)?;
    let theta_deg = orientation_from_taus(tau_s, tau_i);
    let phase_matching = PhaseMatch::new(
        length_um.unwrap_or_else(default_length_um),
        tau_s,
        tau_i,
        wavelength_to_omega(signal_nm)?,
        wavelength_to_omega(idler_nm)?,
    )?;
    let map = orientation_map(&table, map_pumps, map_offsets);
    let mut out = Outcome::default();
    out.summary.push(format!("tau_s={tau_s} tau_i={tau_i} theta_deg={theta_deg}"));
    out.json("phasematch.json", &PhaseMatchSummary { tau_s, tau_i, theta_deg, phase_matching, map });
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    grid_path: &Path,
    config: Option<&Path>,
    signal_thz: Option<f64>,
    idler_thz: Option<f64>,
    kind: GridKind,
    threshold: f64,
    flat_phase: bool,
) -> Result<Outcome, CliError> {
    let (signal, idler) = match (config, signal_thz, idler_thz) {
        (Some(path), _, _) => {
            let cfg = overrides::to_config(&overrides::expand(&read_text(path)?, base_dir(path))?)?;
            (cfg.signal_resonance.resolve()?.omega0, cfg.idler_resonance.resolve()?.omega0)
        }
        (None, Some(s), Some(i)) => (AngularFrequency(s), AngularFrequency(i)),
        _ => return Err(CliError::input("analyze needs --config or both --signal-thz and --idler-thz")),
    };
    let file = std::fs::File::open(grid_path).map_err(|e| io_err(grid_path, e))?;
    let table = io::read_grid::<f64, _>(file).map_err(|e| io_err(grid_path, e))?;
    let grid = table.to_grid(signal, idler)?;
    let report = match kind {
        GridKind::Jsa => analyze_amplitude(&grid, flat_phase, threshold)?,
        GridKind::Jsi => analyze_intensity(&grid.map(|v| v.re), threshold)?,
    };
    let mut out = Outcome::default();
    out.summary.push(format!("purity={} g2={} peaks={}", report.purity, report.g2, report.peaks.len()));
    out.json("report.json", &report);
    Ok(out)
}

fn configure_threads(threads: &str) -> Result<(), CliError> {
    if threads.eq_ignore_ascii_case("auto") {
        return Ok(());
    }
    let n: usize = threads
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input(format!("--threads must be a positive integer or `auto`, got `{threads}`")))?;
    // a pool already exists when called twice in one process; keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Runs a parsed command line. Returns the exit code together with the
/// summary and warning lines for the caller to print.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    configure_threads(&g.threads)?;
    let mut inputs = Vec::new();
    let mut applied = BTreeMap::new();
    let mut outcome = match &cli.command {
        Command::Fit { spectrum, label, init } => {
            inputs.push(display(spectrum));
            inputs.extend(init.iter().cloned());
            cmd_fit(spectrum, label.as_deref(), init.as_deref(), g.seed)?
        }
        Command::Simulate(a) | Command::Tdsi(a) | Command::Adp(a) | Command::Pump(a) => {
            inputs.push(display(&a.config));
            let (_, cfg, ov) = load_config(a)?;
            applied = ov;
            match &cli.command {
                Command::Simulate(_) => cmd_simulate(&cfg)?,
                Command::Tdsi(_) => cmd_tdsi(&cfg)?,
                Command::Adp(_) => cmd_adp(&cfg)?,
                _ => cmd_pump(&cfg)?,
            }
        }
        Command::Sweep { config, param, values } => {
            inputs.push(display(&config.config));
            let (tree, _, ov) = load_config(config)?;
            applied = ov;
            applied.insert(param.clone(), values.join(","));
            cmd_sweep(&tree, param, values)?
        }
        Command::Phasematch { dispersion, pump_nm, signal_nm, idler_nm, length_um, map_pumps_nm, map_offsets_nm } => {
            inputs.push(display(dispersion));
            cmd_phasematch(dispersion, *pump_nm, *signal_nm, *idler_nm, *length_um, map_pumps_nm, map_offsets_nm)?
        }
        Command::Analyze { grid, config, signal_thz, idler_thz, kind, threshold, flat_phase } => {
            inputs.push(display(grid));
            inputs.extend(config.as_deref().map(display));
            cmd_analyze(grid, config.as_deref(), *signal_thz, *idler_thz, *kind, *threshold, *flat_phase)?
        }
    };
    let run = RunConfig { mode: cli.command.mode(), inputs, out: display(&g.out), overrides: applied, seed: g.seed };
    outcome.json("run.json", &run);
    write_outputs(&g.out, &outcome.files)?;
    Ok(outcome)
}

fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}
