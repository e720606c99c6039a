//! Command implementations. Every failure is reported with a
//! machine-parsable code on stderr; exit status 1 flags validation
//! problems, 2 a fit that did not converge.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use homsim_core::{
    delay_scan, delay_scan_circuit, fit_cosine, fit_cosine_with_errors, fit_gaussian,
    multimode_map, phase_scan, retrieve_phase, visibility, Arm, BiphotonState, CoherenceModel,
    Element, ImperfectionModel, MomentumGrid, PhaseMask, ScanResult, VisibilityKind,
};
use serde::Serialize;
use serde_json::json;

use crate::output::{self, Summary};
use crate::setup::{self, BuiltSetup, CircuitDescription, ElementDesc};

pub struct CliError {
    pub exit_code: i32,
    pub tag: &'static str,
    pub message: String,
}

impl CliError {
    fn parse(message: impl Into<String>) -> Self {
        Self { exit_code: 1, tag: "E_PARSE", message: message.into() }
    }
    fn validate(message: impl Into<String>) -> Self {
        Self { exit_code: 1, tag: "E_VALIDATE", message: message.into() }
    }
    fn io(message: impl Into<String>) -> Self {
        Self { exit_code: 1, tag: "E_IO", message: message.into() }
    }
    fn fit(message: impl Into<String>) -> Self {
        Self { exit_code: 2, tag: "E_FIT", message: message.into() }
    }
}

type CmdResult = Result<(), CliError>;

fn parse_angle(s: &str) -> Result<f64, String> {
    crate::num::parse_number(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    Delay,
    Phase,
}

#[derive(Debug, Args)]
pub struct CommonOutput {
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Also write gnuplot-ready plot data to this path
    #[arg(long)]
    pub emit_plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateFlags {
    /// Detected pairs per second (overrides the setup's model)
    #[arg(long)]
    pub pair_rate: Option<f64>,
    /// Integration time per point, seconds (overrides the setup's model)
    #[arg(long)]
    pub time: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DelayScanArgs {
    /// Setup description file; without it the ideal closed-form model runs
    #[arg(long)]
    pub setup: Option<PathBuf>,
    /// Mask phase jump in radians ("pi", "pi/6", ... accepted)
    #[arg(long, value_parser = parse_angle)]
    pub phi: Option<f64>,
    /// Smallest delay, meters (default -4 coherence lengths)
    #[arg(long)]
    pub dl_min: Option<f64>,
    /// Largest delay, meters (default +4 coherence lengths)
    #[arg(long)]
    pub dl_max: Option<f64>,
    /// Number of delay points
    #[arg(long, default_value_t = 41)]
    pub dl_steps: usize,
    /// Master seed; falls back to HOMSIM_SEED, then 0
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accumulate this many repetitions per point
    #[arg(long, default_value_t = 1)]
    pub trials: u32,
    #[command(flatten)]
    pub rates: RateFlags,
    #[command(flatten)]
    pub output: CommonOutput,
}

#[derive(Debug, Args)]
pub struct PhaseScanArgs {
    /// Setup description file supplying the imperfection model
    #[arg(long)]
    pub setup: Option<PathBuf>,
    /// Number of phase points covering [0, 2 pi]
    #[arg(long, default_value_t = 13)]
    pub phi_steps: usize,
    /// Master seed; falls back to HOMSIM_SEED, then 0
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accumulate this many repetitions per point
    #[arg(long, default_value_t = 1)]
    pub trials: u32,
    #[command(flatten)]
    pub rates: RateFlags,
    #[command(flatten)]
    pub output: CommonOutput,
}

#[derive(Debug, Args)]
pub struct MultimodeArgs {
    /// Setup description file; its idler masks define the symmetry map
    #[arg(long)]
    pub setup: Option<PathBuf>,
    /// Step-mask jump used when no setup is given
    #[arg(long, value_parser = parse_angle)]
    pub phi: Option<f64>,
    /// Grid size used when no setup is given
    #[arg(long, default_value_t = 201)]
    pub grid_n: usize,
    #[command(flatten)]
    pub output: CommonOutput,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Scan CSV to fit
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Kind of scan in the file
    #[arg(long, value_enum, default_value = "delay")]
    pub kind: FitKind,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// Normalized coincidence rate to invert
    #[arg(long)]
    pub c: Option<f64>,
    /// Scan CSV; the point nearest zero delay supplies the rate
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Contrast of the fitted law
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Offset of the fitted law
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("HOMSIM_SEED")
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
    })
    .unwrap_or(0)
}

fn load_setup(path: &Path) -> Result<(CircuitDescription, BuiltSetup), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read setup '{}': {e}", path.display())))?;
    let desc = setup::parse_setup(&text)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let built = desc
        .build(base)
        .map_err(|e| CliError::validate(format!("{}: {e}", path.display())))?;
    Ok((desc, built))
}

fn apply_rate_flags(model: ImperfectionModel, rates: &RateFlags) -> Result<ImperfectionModel, CliError> {
    let pair_rate = rates.pair_rate.unwrap_or_else(|| model.pair_rate());
    let time = rates.time.unwrap_or_else(|| model.integration_time());
    model
        .with_rates(pair_rate, time, model.accidental_rate())
        .map_err(|e| CliError::validate(e.to_string()))
}

fn write_output(path: Option<&Path>, content: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::io(format!("cannot write '{}': {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::validate("need at least one scan point"));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    if !(hi > lo) {
        return Err(CliError::validate(format!("empty scan range [{lo}, {hi}]")));
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

pub fn delay_scan_cmd(args: &DelayScanArgs) -> CmdResult {
    let seed = resolve_seed(args.seed);
    let loaded = args.setup.as_deref().map(load_setup).transpose()?;
    let (model, coherence) = match &loaded {
        Some((_, built)) => (built.model, built.coherence),
        None => (ImperfectionModel::ideal(), CoherenceModel::default_filter()),
    };
    let model = apply_rate_flags(model, &args.rates)?;
    let lc = coherence.coherence_length();
    let lo = args.dl_min.unwrap_or(-4.0 * lc);
    let hi = args.dl_max.unwrap_or(4.0 * lc);
    let axis = linspace(lo, hi, args.dl_steps)?;

    let mut scan = match &loaded {
        Some((desc, built)) => {
            let mut circuit = built.circuit.clone();
            if let Some(phi) = args.phi {
                if desc.idler.iter().any(|e| matches!(e, ElementDesc::PhaseFile(_))) {
                    return Err(CliError::validate(
                        "--phi cannot override a phase_file mask; edit the setup instead",
                    ));
                }
                circuit
                    .set_arm_step_mask(Arm::Idler, phi)
                    .map_err(|e| CliError::validate(e.to_string()))?;
            }
            let source = BiphotonState::spdc(built.grid);
            delay_scan_circuit(&circuit, &source, built.k0, &model, &axis)
        }
        None => delay_scan(&model, &coherence, args.phi.unwrap_or(0.0), &axis),
    }
    .map_err(|e| CliError::validate(e.to_string()))?;
    scan.sample(seed, args.trials)
        .map_err(|e| CliError::validate(e.to_string()))?;

    let params = json!({
        "setup": args.setup.as_ref().map(|p| p.display().to_string()),
        "phi": args.phi,
        "dl_min": lo,
        "dl_max": hi,
        "dl_steps": args.dl_steps,
        "trials": args.trials,
        "pair_rate": model.pair_rate(),
        "time": model.integration_time(),
    });
    emit_scan("delay-scan", &scan, params, seed, &args.output)
}

pub fn phase_scan_cmd(args: &PhaseScanArgs) -> CmdResult {
    let seed = resolve_seed(args.seed);
    let loaded = args.setup.as_deref().map(load_setup).transpose()?;
    let (model, coherence) = match &loaded {
        Some((_, built)) => (built.model, built.coherence),
        None => (ImperfectionModel::ideal(), CoherenceModel::default_filter()),
    };
    let model = apply_rate_flags(model, &args.rates)?;
    let axis = linspace(0.0, 2.0 * PI, args.phi_steps)?;
    let mut scan =
        phase_scan(&model, &coherence, &axis).map_err(|e| CliError::validate(e.to_string()))?;
    scan.sample(seed, args.trials)
        .map_err(|e| CliError::validate(e.to_string()))?;

    let params = json!({
        "setup": args.setup.as_ref().map(|p| p.display().to_string()),
        "phi_steps": args.phi_steps,
        "trials": args.trials,
        "pair_rate": model.pair_rate(),
        "time": model.integration_time(),
    });
    emit_scan("phase-scan", &scan, params, seed, &args.output)
}

fn emit_scan(
    command: &str,
    scan: &ScanResult,
    params: serde_json::Value,
    seed: u64,
    out: &CommonOutput,
) -> CmdResult {
    let content = match out.format {
        Format::Csv => output::scan_to_csv(scan),
        Format::Json => output::ScanPayload::new(command, params, seed, scan).to_json(),
    };
    write_output(out.out.as_deref(), &content)?;
    if let Some(plot) = &out.emit_plot {
        write_output(Some(plot), &output::scan_to_plot(scan))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MapPayload {
    schema: u32,
    command: String,
    params: serde_json::Value,
    entries: Vec<(i32, i32, f64)>,
}

pub fn multimode_cmd(args: &MultimodeArgs) -> CmdResult {
    let loaded = args.setup.as_deref().map(load_setup).transpose()?;
    let (grid, mask, model, coherence) = match &loaded {
        Some((_, built)) => {
            // Compose every idler mask into one phase map.
            let masks: Vec<&PhaseMask> = built
                .circuit
                .arm_elements(Arm::Idler)
                .iter()
                .filter_map(|e| match e {
                    Element::Mask(m) => Some(m),
                    _ => None,
                })
                .collect();
            let values: Vec<f64> = built
                .grid
                .labels()
                .map(|l| masks.iter().map(|m| m.phase_at(l).expect("label on grid")).sum())
                .collect();
            let mask = PhaseMask::from_values(built.grid, values)
                .map_err(|e| CliError::validate(e.to_string()))?;
            (built.grid, mask, built.model, built.coherence)
        }
        None => {
            let grid = MomentumGrid::new(args.grid_n, 1.0)
                .map_err(|e| CliError::validate(e.to_string()))?;
            let mask = PhaseMask::step(grid, args.phi.unwrap_or(PI))
                .map_err(|e| CliError::validate(e.to_string()))?;
            (grid, mask, ImperfectionModel::ideal(), CoherenceModel::default_filter())
        }
    };
    let map =
        multimode_map(&mask, &model, &coherence, 0.0).map_err(|e| CliError::validate(e.to_string()))?;

    let params = json!({
        "setup": args.setup.as_ref().map(|p| p.display().to_string()),
        "phi": args.phi,
        "grid_n": grid.n(),
    });
    let content = match args.output.format {
        Format::Csv => output::map_to_csv(&map),
        Format::Json => {
            let payload = MapPayload {
                schema: 1,
                command: "multimode".into(),
                params: params.clone(),
                entries: map.entries().iter().map(|(k, c)| (k.ix, k.iy, *c)).collect(),
            };
            let mut s = serde_json::to_string_pretty(&payload).expect("payload serializes");
            s.push('\n');
            s
        }
    };
    write_output(args.output.out.as_deref(), &content)?;
    if let Some(plot) = &args.output.emit_plot {
        write_output(Some(plot), &output::map_to_plot(&map))?;
    }
    Ok(())
}

fn read_scan(path: &Path) -> Result<ScanResult, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read '{}': {e}", path.display())))?;
    output::scan_from_csv(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

pub fn fit_cmd(args: &FitArgs) -> CmdResult {
    let scan = read_scan(&args.input)?;
    let params = json!({
        "in": args.input.display().to_string(),
        "kind": match args.kind { FitKind::Delay => "delay", FitKind::Phase => "phase" },
    });
    let mut summary = Summary::new("fit", params, 0);

    match args.kind {
        FitKind::Delay => {
            let fit = fit_gaussian(&scan.axis, &scan.normalized)
                .map_err(|e| CliError::validate(e.to_string()))?;
            if !fit.converged {
                return Err(CliError::fit(
                    fit.message.unwrap_or_else(|| "fit did not converge".into()),
                ));
            }
            let center = scan
                .index_nearest_zero()
                .ok_or_else(|| CliError::validate("empty scan"))?;
            let c0 = scan.normalized[center];
            let kind = if c0 >= 1.0 { VisibilityKind::Peak } else { VisibilityKind::Dip };
            let report = visibility(&scan, kind).map_err(|e| CliError::validate(e.to_string()))?;
            summary.results.visibility = Some(report.v);
            summary.results.sigma = fit.value("sigma");
            summary.results.phi_retrieved = retrieve_phase(c0, 1.0, 0.0).ok();
        }
        FitKind::Phase => {
            let fit = if scan.stderr.iter().all(|s| *s > 0.0) {
                fit_cosine_with_errors(&scan.axis, &scan.normalized, &scan.stderr)
            } else {
                fit_cosine(&scan.axis, &scan.normalized)
            }
            .map_err(|e| CliError::validate(e.to_string()))?;
            summary.results.alpha = fit.value("alpha");
            summary.results.beta = fit.value("beta");
        }
    }
    write_output(args.out.as_deref(), &summary.to_json())
}

pub fn retrieve_cmd(args: &RetrieveArgs) -> CmdResult {
    let c = match (args.c, &args.input) {
        (Some(c), _) => c,
        (None, Some(path)) => {
            let scan = read_scan(path)?;
            let center = scan
                .index_nearest_zero()
                .ok_or_else(|| CliError::validate("empty scan"))?;
            scan.normalized[center]
        }
        (None, None) => {
            return Err(CliError::validate("pass --c VALUE or --in SCAN.csv"));
        }
    };
    let phi = retrieve_phase(c, args.alpha, args.beta)
        .map_err(|e| CliError::validate(e.to_string()))?;
    let params = json!({
        "c": c,
        "alpha": args.alpha,
        "beta": args.beta,
        "in": args.input.as_ref().map(|p| p.display().to_string()),
    });
    let mut summary = Summary::new("retrieve", params, 0);
    summary.results.phi_retrieved = Some(phi);
    write_output(args.out.as_deref(), &summary.to_json())
}
