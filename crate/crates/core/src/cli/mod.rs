//! `molcomm` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid parameters or input, 3 no signal,
//! 4 I/O failure. CSV artifacts start with `#` comment lines carrying the
//! tool version and the fully resolved parameters, including the seed.

pub mod config;
pub mod grid;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diffusion::{cumulative_capture_fraction, windowed_capture, ChannelParams, TimeWindow};
use crate::error::Error;
use crate::link::{
    default_threshold, molecular_ber, molecular_throughput, predict_link, rate_surface, simulate_ook_link,
    with_throughput, write_rate_surface_csv, SamplingPolicy,
};
use crate::oracle::{self, default_workers, simulate_first_passage, uniform_edges, Stepping, WalkConfig};
use crate::propagation::{
    builtin_dataset, classify_feasibility, fit_molecular, fit_radio, observed_feasibility, predict_delay_spread,
    predict_rssi, read_dataset_csv, unique_configurations, write_dataset_csv, Censored, Endpoints, MeasurementRecord,
    PipeTopology,
};
use crate::pulse::{estimate_delay_spread, ingest_trace_csv, EmissionSchedule, DEFAULT_SPRAY_DURATION};

use config::{parse_config, ConfigFile};
use grid::parse_grid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NO_SIGNAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

const DEFAULT_X: f64 = 1.0;
const DEFAULT_D: f64 = 0.1;
const DEFAULT_WALKERS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "molcomm",
    version,
    about = "Molecular diffusion link analysis for confined pipe networks"
)]
pub struct Cli {
    /// TOML file with channel, sampling and walk sections supplying defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Decimal digits for printed scalars.
    #[arg(long, global = true, default_value_t = 5)]
    pub digits: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected molecules captured in [t0, t0 + tau].
    Capture(ScalarArgs),
    /// Out-of-window fraction for a sampling window of n * tau.
    Ber(ScalarArgs),
    /// Good-put in bits/s/chemical, or a rate surface with --surface.
    Rate(RateArgs),
    /// Peak-to-3dB delay spread of a `t_s,amplitude` trace.
    DelaySpread(DelaySpreadArgs),
    /// Fit the radio and molecular propagation laws.
    Fit(FitArgs),
    /// Predict radio and molecular link behaviour for a pipe topology.
    Predict(PredictArgs),
    /// Brownian walker first-passage histogram.
    Oracle(OracleArgs),
    /// Monte Carlo OOK link.
    Simulate(SimulateArgs),
    /// Export the built-in measurement table as CSV.
    Dataset(DatasetArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChannelArgs {
    /// Distance to the receiver, m [default: 1].
    #[arg(long)]
    pub x: Option<f64>,
    /// Diffusivity, m^2/s [default: 0.1].
    #[arg(long)]
    pub d: Option<f64>,
    /// Drift velocity, m/s [default: 0].
    #[arg(long)]
    pub v: Option<f64>,
    /// Molecules per emission [default: 1].
    #[arg(long)]
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SamplingArgs {
    /// Window start after emission, s [default: analytic peak time].
    #[arg(long)]
    pub t0: Option<f64>,
    /// Delay spread, s.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Window multiplier [default: 1].
    #[arg(long)]
    pub n: Option<f64>,
    /// Whole window length n * tau, s (overrides --tau and --n).
    #[arg(long)]
    pub ntau: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WalkArgs {
    /// Walker step, s [default: 1e-3 * x^2 / (2 D)].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of walkers [default: 100000].
    #[arg(long)]
    pub walkers: Option<u64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Simulation horizon, s [default: 2 * analytic peak time].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Check for absorption after every step, even far from the receiver.
    #[arg(long)]
    pub every_step: bool,
}

#[derive(Debug, Args)]
pub struct ScalarArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Also write a one-row CSV.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Two grids, `tau=start:stop:count T=start:stop:count`.
    #[arg(long, num_args = 2, value_names = ["TAU_GRID", "T_GRID"])]
    pub surface: Option<Vec<String>>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DelaySpreadArgs {
    /// Trace CSV with header `t_s,amplitude`.
    pub trace: PathBuf,
    /// Print `NS` and exit 0 when no pulse is detected.
    #[arg(long)]
    pub no_signal_ok: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetSource {
    /// Use the built-in measurement table (default).
    #[arg(long, conflicts_with = "dataset")]
    pub builtin: bool,
    /// Dataset CSV `shape,length_m,bends,rssi_dbm,rssi_sd,delay_s,delay_sd`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: DatasetSource,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Total pipe length, m.
    #[arg(long)]
    pub length: f64,
    #[arg(long, default_value_t = 0)]
    pub bends: u32,
    #[command(flatten)]
    pub source: DatasetSource,
    /// BER target; enables the throughput section.
    #[arg(long)]
    pub ber_target: Option<f64>,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Window start after emission, s [default: analytic peak time].
    #[arg(long)]
    pub t0: Option<f64>,
    /// Window multiplier [default: 1].
    #[arg(long)]
    pub n: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub walk: WalkArgs,
    /// Uniform histogram bins over [0, horizon].
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Window start for a capture comparison, s.
    #[arg(long, requires = "tau")]
    pub t0: Option<f64>,
    /// Window length for a capture comparison, s.
    #[arg(long, requires = "t0")]
    pub tau: Option<f64>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Bit string, e.g. 10110.
    #[arg(long)]
    pub bits: String,
    /// Symbol period, s.
    #[arg(long)]
    pub period: f64,
    #[arg(long, default_value_t = DEFAULT_SPRAY_DURATION)]
    pub spray: f64,
    /// Detection threshold, molecules [default: half the expected capture].
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

/// A failed command: message plus exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoSignal(_) => EXIT_NO_SIGNAL,
            Error::Io(_) => EXIT_IO,
            Error::Csv(ref c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_VALIDATION,
        message: msg.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::from(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })?;
    Ok(parse_config(&text)?)
}

struct Ctx<'a> {
    cfg: ConfigFile,
    digits: usize,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn channel(&self, a: &ChannelArgs) -> CliResult<ChannelParams> {
        let c = &self.cfg.channel;
        Ok(ChannelParams::new(
            a.x.or(c.x).unwrap_or(DEFAULT_X),
            a.d.or(c.d).unwrap_or(DEFAULT_D),
            a.v.or(c.v).unwrap_or(0.0),
            a.m.or(c.m).unwrap_or(1.0),
        )?)
    }

    fn policy(&self, a: &SamplingArgs, p: &ChannelParams) -> CliResult<SamplingPolicy> {
        let s = &self.cfg.sampling;
        let t0 = a.t0.or(s.t0).unwrap_or_else(|| p.peak_time());
        let (tau, n) = match a.ntau {
            Some(ntau) => (ntau, 1.0),
            None => (
                a.tau.or(s.tau).ok_or_else(|| validation("missing --tau (or --ntau)"))?,
                a.n.or(s.n).unwrap_or(1.0),
            ),
        };
        Ok(SamplingPolicy::new(t0, tau, n)?)
    }

    fn walk(&self, a: &WalkArgs, p: &ChannelParams, default_horizon: f64) -> CliResult<WalkConfig> {
        let w = &self.cfg.walk;
        let workers = a.workers.or(w.workers);
        let workers = match workers {
            Some(n) => NonZeroUsize::new(n).ok_or_else(|| validation("--workers must be at least 1"))?,
            None => default_workers(),
        };
        let cfg = WalkConfig::new(
            *p,
            a.dt.or(w.dt).unwrap_or_else(|| oracle::default_step(p)),
            a.horizon.or(w.horizon).unwrap_or(default_horizon),
            a.walkers.or(w.walkers).unwrap_or(DEFAULT_WALKERS),
            a.seed.or(w.seed).unwrap_or(0),
        )?;
        let stepping = if a.every_step {
            Stepping::Fixed
        } else {
            Stepping::FarField
        };
        Ok(cfg.workers(workers).stepping(stepping))
    }

    fn num(&self, v: f64) -> String {
        format!("{v:.*}", self.digits)
    }

    fn println(&mut self, line: impl AsRef<str>) -> CliResult<()> {
        writeln!(self.out, "{}", line.as_ref())?;
        Ok(())
    }
}

fn header(command: &str, params: Vec<(&str, String)>) -> Vec<String> {
    let body = params
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    vec![format!("molcomm {} {command}", env!("CARGO_PKG_VERSION")), body]
}

fn channel_params(p: &ChannelParams) -> Vec<(&'static str, String)> {
    vec![
        ("x", p.distance.to_string()),
        ("d", p.diffusivity.to_string()),
        ("v", p.drift.to_string()),
        ("m", p.molecules.to_string()),
    ]
}

fn policy_params(pol: &SamplingPolicy) -> Vec<(&'static str, String)> {
    vec![
        ("t0", pol.peak_arrival.to_string()),
        ("tau", pol.delay_spread.to_string()),
        ("n", pol.multiplier.to_string()),
    ]
}

fn walk_params(cfg: &WalkConfig) -> Vec<(&'static str, String)> {
    vec![
        ("dt", cfg.step_dt.to_string()),
        ("horizon", cfg.horizon.to_string()),
        ("walkers", cfg.walkers.to_string()),
        ("seed", cfg.seed.to_string()),
        ("stepping", format!("{:?}", cfg.stepping)),
    ]
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))).into())
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let mut ctx = Ctx {
        cfg: load_config(cli.config.as_deref())?,
        digits: cli.digits,
        out,
        err,
    };
    match &cli.command {
        Command::Capture(a) => cmd_capture(&mut ctx, a),
        Command::Ber(a) => cmd_ber(&mut ctx, a),
        Command::Rate(a) => cmd_rate(&mut ctx, a),
        Command::DelaySpread(a) => cmd_delay_spread(&mut ctx, a),
        Command::Fit(a) => cmd_fit(&mut ctx, a),
        Command::Predict(a) => cmd_predict(&mut ctx, a),
        Command::Oracle(a) => cmd_oracle(&mut ctx, a),
        Command::Simulate(a) => cmd_simulate(&mut ctx, a),
        Command::Dataset(a) => cmd_dataset(&mut ctx, a),
    }
}

fn write_scalar_csv(
    path: &Path,
    command: &str,
    params: Vec<(&str, String)>,
    column: &str,
    value: f64,
) -> CliResult<()> {
    let mut f = create(path)?;
    for line in header(command, params) {
        writeln!(f, "# {line}")?;
    }
    writeln!(f, "{column}\n{value}")?;
    f.flush()?;
    Ok(())
}

fn cmd_capture(ctx: &mut Ctx, a: &ScalarArgs) -> CliResult<i32> {
    let p = ctx.channel(&a.channel)?;
    let pol = ctx.policy(&a.sampling, &p)?;
    let w = TimeWindow::new(pol.peak_arrival, pol.window())?;
    let value = windowed_capture(&p, &w)?;
    ctx.println(ctx.num(value))?;
    if let Some(path) = &a.output {
        let mut params = channel_params(&p);
        params.extend(policy_params(&pol));
        write_scalar_csv(path, "capture", params, "capture", value)?;
    }
    Ok(EXIT_OK)
}

fn cmd_ber(ctx: &mut Ctx, a: &ScalarArgs) -> CliResult<i32> {
    let p = ctx.channel(&a.channel)?;
    let pol = ctx.policy(&a.sampling, &p)?;
    let value = molecular_ber(&p, &pol)?;
    ctx.println(ctx.num(value))?;
    if let Some(path) = &a.output {
        let mut params = channel_params(&p);
        params.extend(policy_params(&pol));
        write_scalar_csv(path, "ber", params, "ber", value)?;
    }
    Ok(EXIT_OK)
}

fn cmd_rate(ctx: &mut Ctx, a: &RateArgs) -> CliResult<i32> {
    let p = ctx.channel(&a.channel)?;
    let Some(specs) = &a.surface else {
        let pol = ctx.policy(&a.sampling, &p)?;
        let value = molecular_throughput(&p, &pol)?;
        ctx.println(ctx.num(value))?;
        if let Some(path) = &a.output {
            let mut params = channel_params(&p);
            params.extend(policy_params(&pol));
            write_scalar_csv(path, "rate", params, "rate_bps", value)?;
        }
        return Ok(EXIT_OK);
    };

    let mut taus = None;
    let mut arrivals = None;
    for spec in specs {
        let (name, values) = parse_grid(spec)?;
        match name.as_str() {
            "tau" => taus = Some(values),
            "T" | "t0" => arrivals = Some(values),
            other => {
                return Err(validation(format!(
                    "unknown surface axis `{other}` (expected tau or T)"
                )))
            }
        }
    }
    let (Some(taus), Some(arrivals)) = (taus, arrivals) else {
        return Err(validation("--surface needs one tau= grid and one T= grid"));
    };
    let n = a.sampling.n.or(ctx.cfg.sampling.n).unwrap_or(1.0);
    let points = rate_surface(&p, &taus, &arrivals, n)?;
    let mut params = channel_params(&p);
    params.push(("n", n.to_string()));
    params.push(("tau_grid", specs[0].clone()));
    params.push(("T_grid", specs[1].clone()));
    let head = header("rate", params);
    let best = points
        .iter()
        .copied()
        .fold(None::<crate::link::RatePoint>, |b, pt| match b {
            Some(b) if b.rate >= pt.rate => Some(b),
            _ => Some(pt),
        })
        .expect("surface is non-empty");
    match &a.output {
        Some(path) => {
            let mut f = create(path)?;
            write_rate_surface_csv(&points, &mut f, &head)?;
            f.flush()?;
            let line = format!(
                "points={} max_rate_bps={} at tau_s={} T_s={}",
                points.len(),
                ctx.num(best.rate),
                best.tau,
                best.arrival
            );
            ctx.println(line)?;
        }
        None => write_rate_surface_csv(&points, &mut *ctx.out, &head)?,
    }
    Ok(EXIT_OK)
}

fn cmd_delay_spread(ctx: &mut Ctx, a: &DelaySpreadArgs) -> CliResult<i32> {
    let file = File::open(&a.trace)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", a.trace.display()))))?;
    let trace = ingest_trace_csv(std::io::BufReader::new(file))?;
    match estimate_delay_spread(&trace) {
        Ok(d) => {
            let lines = [
                format!("peak_time_s={}", ctx.num(d.peak_time)),
                format!("cross_time_s={}", ctx.num(d.cross_time)),
                format!("tau_s={}", ctx.num(d.tau)),
            ];
            for l in lines {
                ctx.println(l)?;
            }
            Ok(EXIT_OK)
        }
        Err(Error::NoSignal(msg)) if a.no_signal_ok => {
            writeln!(ctx.err, "note: {msg}")?;
            ctx.println("NS")?;
            Ok(EXIT_OK)
        }
        Err(e) => Err(e.into()),
    }
}

fn load_dataset(src: &DatasetSource) -> CliResult<Vec<MeasurementRecord>> {
    match &src.dataset {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
            Ok(read_dataset_csv(std::io::BufReader::new(file))?)
        }
        None => Ok(builtin_dataset()),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "up"
    } else {
        "down"
    }
}

fn cmd_fit(ctx: &mut Ctx, a: &FitArgs) -> CliResult<i32> {
    let data = load_dataset(&a.source)?;
    let radio = fit_radio(&data)?;
    let mol = fit_molecular(&data)?;
    let d = ctx.digits;
    ctx.println(format!(
        "radio: intercept_dbm={:.d$} slope_db_per_m={:.d$} first_bend_loss_db={:.d$} sensitivity_dbm={}",
        radio.intercept_dbm, radio.slope_db_per_m, radio.first_bend_loss_db, radio.sensitivity_dbm
    ))?;
    ctx.println(format!(
        "molecular: tau_intercept_s={:.d$} slope_s_per_m={:.d$} bend_factor={:.d$} unclamped_bend_factor={:.d$}",
        mol.model.tau_intercept_s, mol.model.slope_s_per_m, mol.model.bend_factor, mol.unclamped_bend_factor
    ))?;
    ctx.println(format!(
        "{:<28} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8} {:>11} {:>11}",
        "configuration", "rssi", "rssi_fit", "resid", "delay", "dly_fit", "resid%", "radio", "molecular"
    ))?;
    let mut misclassified = 0;
    let mut classified = 0;
    for rec in unique_configurations(&data) {
        let topo = &rec.topology;
        let fmt_c = |c: Censored<f64>| format!("{c:.2}");
        let (rssi_fit, delay_fit, radio_cls, mol_cls) = match topo.endpoints {
            Endpoints::PipedTanks | Endpoints::SealedTanks => {
                let predicted = classify_feasibility(&radio, &mol.model, topo)?;
                let observed = observed_feasibility(&rec);
                classified += 1;
                if predicted != observed {
                    misclassified += 1;
                }
                let cls = |p: bool, o: bool| format!("{}/{}", yes_no(o), yes_no(p));
                let (rf, df) = if topo.endpoints == Endpoints::PipedTanks {
                    (
                        Some(predict_rssi(&radio, topo)?),
                        Some(predict_delay_spread(&mol.model, topo)?),
                    )
                } else {
                    (None, None)
                };
                (
                    rf,
                    df,
                    cls(predicted.radio_up, observed.radio_up),
                    cls(predicted.molecular_up, observed.molecular_up),
                )
            }
            _ => (None, None, "-".into(), "-".into()),
        };
        let rssi_meas = rec.rssi_dbm.detected().map(|r| r.mean);
        let delay_meas = rec.delay_spread_s.detected().map(|r| r.mean);
        let resid = match (rssi_meas, rssi_fit.and_then(|c| c.detected())) {
            (Some(m), Some(f)) => format!("{:.2}", m - f),
            _ => "-".into(),
        };
        let resid_pct = match (delay_meas, delay_fit) {
            (Some(m), Some(f)) => format!("{:.1}", 100.0 * (f - m) / m),
            _ => "-".into(),
        };
        let line = format!(
            "{:<28} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8} {:>11} {:>11}",
            topo.display_name(),
            rssi_meas.map_or("NS".into(), |v| format!("{v:.1}")),
            rssi_fit.map_or("-".into(), fmt_c),
            resid,
            delay_meas.map_or("NS".into(), |v| format!("{v:.2}")),
            delay_fit.map_or("-".into(), |v| format!("{v:.2}")),
            resid_pct,
            radio_cls,
            mol_cls,
        );
        ctx.println(line)?;
    }
    ctx.println(format!(
        "classification: {misclassified} of {classified} tank configurations misclassified (observed/predicted)"
    ))?;
    Ok(EXIT_OK)
}

fn cmd_predict(ctx: &mut Ctx, a: &PredictArgs) -> CliResult<i32> {
    let topo = PipeTopology::pipe(a.length, a.bends)?;
    let data = load_dataset(&a.source)?;
    let radio = fit_radio(&data)?;
    let mol = fit_molecular(&data)?.model;
    let mut report = predict_link(&radio, &mol, &topo)?;
    if let Some(target) = a.ber_target {
        let p = ctx.channel(&a.channel)?;
        let t0 = a.t0.or(ctx.cfg.sampling.t0).unwrap_or_else(|| p.peak_time());
        let n = a.n.or(ctx.cfg.sampling.n).unwrap_or(1.0);
        report = with_throughput(report, &p, t0, n, target)?;
    }
    let d = ctx.digits;
    ctx.println(format!("topology={}", topo.display_name()))?;
    ctx.println(format!("rssi_dbm={:.d$}", report.rssi_dbm))?;
    ctx.println(format!("delay_spread_s={:.d$}", report.delay_spread_s))?;
    ctx.println(format!("radio={}", yes_no(report.feasibility.radio_up)))?;
    ctx.println(format!("molecular={}", yes_no(report.feasibility.molecular_up)))?;
    if let Some(t) = report.throughput {
        ctx.println(format!("t0_s={:.d$} n={}", t.policy.peak_arrival, t.policy.multiplier))?;
        ctx.println(format!(
            "ber={:.d$} target={} met={}",
            t.ber, t.ber_target, t.meets_target
        ))?;
        ctx.println(format!("rate_bps={:.d$}", t.rate))?;
        match t.min_multiplier {
            Some(n) => ctx.println(format!("min_n_for_target={n:.d$}"))?,
            None => ctx.println("min_n_for_target=unattainable")?,
        }
    }
    Ok(EXIT_OK)
}

/// Three binomial standard errors plus the step-discretisation allowance.
pub fn oracle_tolerance(p: f64, walkers: u64) -> f64 {
    3.0 * (p * (1.0 - p) / walkers as f64).sqrt() + 0.005
}

fn cmd_oracle(ctx: &mut Ctx, a: &OracleArgs) -> CliResult<i32> {
    let p = ctx.channel(&a.channel)?;
    let cfg = ctx.walk(&a.walk, &p, 2.0 * p.peak_time())?;
    if a.bins == 0 {
        return Err(validation("--bins must be at least 1"));
    }
    let hist = simulate_first_passage(&cfg, &uniform_edges(cfg.horizon, a.bins))?;
    let mut params = channel_params(&p);
    params.extend(walk_params(&cfg));
    params.push(("bins", a.bins.to_string()));
    if let Some(path) = &a.output {
        let mut f = create(path)?;
        hist.write_csv(&mut f, &header("oracle", params))?;
        f.flush()?;
    }
    let frac = hist.absorbed_fraction();
    ctx.println(format!("absorbed_fraction={}", ctx.num(frac)))?;
    if p.drift == 0.0 {
        let analytic = cumulative_capture_fraction(&p, cfg.horizon)?;
        let tol = oracle_tolerance(analytic, cfg.walkers);
        ctx.println(format!("analytic_fraction={}", ctx.num(analytic)))?;
        ctx.println(format!(
            "tolerance={} agree={}",
            ctx.num(tol),
            (frac - analytic).abs() <= tol
        ))?;
    }
    if let (Some(t0), Some(tau)) = (a.t0, a.tau) {
        let w = TimeWindow::new(t0, tau)?;
        let empirical = oracle::empirical_capture(&cfg, &w)?;
        ctx.println(format!("window_capture={}", ctx.num(empirical)))?;
        if p.drift == 0.0 {
            let analytic = windowed_capture(&p.with_molecules(1.0), &w)?;
            let tol = oracle_tolerance(analytic, cfg.walkers);
            ctx.println(format!("analytic_window_capture={}", ctx.num(analytic)))?;
            ctx.println(format!(
                "window_tolerance={} window_agree={}",
                ctx.num(tol),
                (empirical - analytic).abs() <= tol
            ))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(ctx: &mut Ctx, a: &SimulateArgs) -> CliResult<i32> {
    let p = ctx.channel(&a.channel)?;
    let sched = EmissionSchedule::from_bit_str(&a.bits, a.period, a.spray)?;
    let mut sampling = a.sampling.clone();
    if sampling.tau.is_none() && sampling.ntau.is_none() && ctx.cfg.sampling.tau.is_none() {
        // default window: the remainder of the symbol slot after t0
        let t0 = sampling.t0.or(ctx.cfg.sampling.t0).unwrap_or_else(|| p.peak_time());
        sampling.ntau = Some((a.period - t0).max(0.0)).filter(|w| *w > 0.0).or(Some(a.period));
    }
    let pol = ctx.policy(&sampling, &p)?;
    let threshold = match a.threshold {
        Some(t) => t,
        None => default_threshold(&p, &pol)?,
    };
    let cfg = ctx.walk(&a.walk, &p, sched.duration())?;
    let outcome = simulate_ook_link(&p, &sched, &pol, threshold, &cfg)?;
    for w in &outcome.warnings {
        writeln!(ctx.err, "warning: {w}")?;
    }
    if let Some(path) = &a.output {
        let mut params = channel_params(&p);
        params.extend(policy_params(&pol));
        params.push(("dt", cfg.step_dt.to_string()));
        params.push(("seed", cfg.seed.to_string()));
        params.push(("stepping", format!("{:?}", cfg.stepping)));
        params.push(("bits", a.bits.clone()));
        params.push(("period", a.period.to_string()));
        params.push(("threshold", threshold.to_string()));
        let mut f = create(path)?;
        outcome.write_csv(&sched.bits, &mut f, &header("simulate", params))?;
        f.flush()?;
    }
    ctx.println(format!("empirical_ber={}", ctx.num(outcome.empirical_ber)))?;
    ctx.println(format!("threshold={}", ctx.num(threshold)))?;
    Ok(EXIT_OK)
}

fn cmd_dataset(ctx: &mut Ctx, a: &DatasetArgs) -> CliResult<i32> {
    let data = builtin_dataset();
    let head = header(
        "dataset",
        vec![("source", "builtin".to_string()), ("rows", data.len().to_string())],
    );
    match &a.output {
        Some(path) => {
            let mut f = create(path)?;
            write_dataset_csv(&data, &mut f, &head)?;
            f.flush()?;
        }
        None => write_dataset_csv(&data, &mut *ctx.out, &head)?,
    }
    Ok(EXIT_OK)
}
