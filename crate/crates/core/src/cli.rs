//! `wavebranch` command line: subcommands, exit codes and output files.
//!
//! Exit codes: 0 ok, 2 config or input error, 3 solver error,
//! 4 no bifurcation, 5 degenerate field.

use crate::config::{ConfigError, RunConfig};
use crate::conformal::{periodic_hilbert, ConformalError, PeriodicFunction};
use crate::continuation::{continue_branch, ContinuationError};
use crate::dispersion::{find_tau_star, transversality, Dispersion, DispersionError, TauStar};
use crate::field::{check_nodal, FieldError, Orientation, WaveField};
use crate::io::{self, Cell, Csv, Json, ObjBuilder, ReadError};
use crate::linear_wave::{LinearWave, LinearWaveError};
use crate::uniform_stream::{solve_uniform_stream, StreamError, UniformStream};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "wavebranch",
    version,
    about = "Steady rotational water waves: streams, dispersion, branches"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrientationArg {
    Positive,
    Negative,
    Auto,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Uniform stream profile and its constants.
    Stream,
    /// Dispersion scan, τ* and transversality.
    Dispersion,
    /// Small-amplitude wave at the bifurcation point.
    Smallwave,
    /// Branch continuation from the small-amplitude seed.
    Continue,
    /// Nodal-property check of a field file.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        orientation: OrientationArg,
    },
    /// Periodic Hilbert transform of uniformly sampled values.
    Hilbert {
        file: PathBuf,
        /// Strip depth.
        #[arg(long)]
        h: f64,
        /// Period of the samples.
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        period: f64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    NoBifurcation(String),
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::NoBifurcation(_) => 4,
            CliError::Degenerate(_) => 5,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}

impl From<ReadError> for CliError {
    fn from(e: ReadError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        match e {
            StreamError::InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<DispersionError> for CliError {
    fn from(e: DispersionError) -> Self {
        match e {
            DispersionError::Stream(s) => s.into(),
            DispersionError::NoBifurcation { .. } => CliError::NoBifurcation(e.to_string()),
            DispersionError::InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<LinearWaveError> for CliError {
    fn from(e: LinearWaveError) -> Self {
        match e {
            LinearWaveError::Dispersion(d) => d.into(),
            LinearWaveError::AmplitudeTooLarge { .. } | LinearWaveError::InvalidInput(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::DegenerateField { .. } => CliError::Degenerate(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ContinuationError> for CliError {
    fn from(e: ContinuationError) -> Self {
        match e {
            ContinuationError::InvalidInput(_) => CliError::Input(e.to_string()),
            ContinuationError::Stream(s) => s.into(),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<ConformalError> for CliError {
    fn from(e: ConformalError) -> Self {
        match e {
            ConformalError::NonzeroMean { .. } | ConformalError::InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        io::write_text(&path, text)?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    fn stream(&self) -> Result<UniformStream, CliError> {
        let f = &self.cfg.flow;
        Ok(solve_uniform_stream(&f.vorticity_fn(), f.h, f.lambda, f.nodes)?)
    }

    fn seed(&self, stream: &UniformStream) -> Result<(TauStar, LinearWave), CliError> {
        let ts = find_tau_star(stream)?;
        let w = LinearWave::from_sample(
            stream,
            &ts.sample,
            self.cfg.wave.t,
            self.cfg.flow.regime,
            self.cfg.wave.c_star,
        )?;
        Ok((ts, w))
    }

    fn log_transversality(&self, tau: f64) -> Json {
        let f = &self.cfg.flow;
        match transversality(
            &f.vorticity_fn(),
            f.h,
            f.lambda,
            tau,
            self.cfg.dispersion.transversality_step,
            f.nodes,
        ) {
            Ok(t) => {
                info!(
                    "transversality: dsigma/dlambda = {:.6e} (error {:.1e})",
                    t.derivative, t.error_estimate
                );
                if !t.holds {
                    warn!("transversality is not certified at this resolution");
                }
                ObjBuilder::new()
                    .field("derivative", t.derivative)
                    .field("error_estimate", t.error_estimate)
                    .field("holds", t.holds)
                    .build()
            }
            Err(e) => {
                warn!("transversality unavailable: {e}");
                Json::Null
            }
        }
    }
}

fn cmd_stream(ctx: &Ctx) -> Result<(), CliError> {
    let s = ctx.stream()?;
    let mu1 = Dispersion::new(&s)?.mu1();
    let n = ctx.cfg.flow.samples;
    let mut csv = Csv::new(&["y", "Psi", "dPsi", "ddPsi"]);
    for i in 0..n {
        let y = s.h * i as f64 / (n - 1) as f64;
        let (p, dp, ddp) = s.eval_clamped(y);
        csv.floats(&[y, p, dp, ddp]);
    }
    ctx.write("stream.csv", &csv.render())?;
    let summary = ObjBuilder::new()
        .field("h", s.h)
        .field("lambda", s.lambda)
        .field("m", s.m)
        .field("Q", s.bernoulli)
        .field("kappa", s.kappa)
        .field("mu_1", mu1)
        .build();
    ctx.write("stream.json", &summary.render())?;
    Ok(())
}

fn cmd_dispersion(ctx: &Ctx) -> Result<(), CliError> {
    let s = ctx.stream()?;
    let d = Dispersion::new(&s)?;
    let dc = &ctx.cfg.dispersion;
    let taus: Vec<f64> = (1..=dc.tau_points)
        .map(|i| dc.tau_max * i as f64 / dc.tau_points as f64)
        .collect();
    let curve = d.sigma_scan(&taus)?;
    let mut csv = Csv::new(&["tau", "sigma", "gamma_prime_h", "sign_definite"]);
    let mut resonant = 0usize;
    for p in &curve.points {
        match p {
            Ok(p) => csv.row(vec![
                Cell::F(p.tau),
                Cell::F(p.sigma),
                Cell::F(p.gamma_prime_h),
                Cell::B(p.sign_definite),
            ]),
            Err(DispersionError::ResonantTau { tau, .. }) => {
                warn!("tau = {tau} is resonant; row omitted");
                resonant += 1;
            }
            Err(e) => return Err(e.clone().into()),
        }
    }
    ctx.write("dispersion.csv", &csv.render())?;

    if let Some([lo, hi]) = dc.lambda_range {
        let f = &ctx.cfg.flow;
        let mut table = Csv::new(&["lambda", "tau_star", "mode"]);
        for i in 0..dc.lambda_points {
            let lambda = lo + (hi - lo) * i as f64 / (dc.lambda_points - 1) as f64;
            let row = solve_uniform_stream(&f.vorticity_fn(), f.h, lambda, f.nodes)
                .map_err(DispersionError::from)
                .and_then(|st| find_tau_star(&st));
            match row {
                Ok(ts) => table.row(vec![Cell::F(lambda), Cell::F(ts.tau), Cell::S(ts.mode.as_str().into())]),
                Err(e) => table.row(vec![Cell::F(lambda), Cell::F(f64::NAN), Cell::S(error_tag(&e).into())]),
            }
        }
        ctx.write("tau_star.csv", &table.render())?;
    }

    let sigma0 = d.sigma(0.0)?;
    let base = ObjBuilder::new()
        .field("h", s.h)
        .field("lambda", s.lambda)
        .field("kappa", s.kappa)
        .field("mu_1", d.mu1())
        .field("rho0", d.rho0())
        .field("sigma0", sigma0)
        .field("asymptotic_ratio", curve.asymptotic_ratio)
        .field("resonant_points", resonant);
    match find_tau_star(&s) {
        Ok(ts) => {
            let tr = ctx.log_transversality(ts.tau);
            let summary = base
                .field("tau_star", ts.tau)
                .field("period_star", 2.0 * std::f64::consts::PI / ts.tau)
                .field("mode", ts.mode.as_str())
                .field("transversality", tr)
                .build();
            ctx.write("dispersion.json", &summary.render())?;
            Ok(())
        }
        Err(e) => {
            let summary = base.field("tau_star", Json::Null).field("error", error_tag(&e)).build();
            ctx.write("dispersion.json", &summary.render())?;
            Err(e.into())
        }
    }
}

fn error_tag(e: &DispersionError) -> &'static str {
    match e {
        DispersionError::NoBifurcation { .. } => "no_bifurcation",
        DispersionError::ResonantTau { .. } => "resonant_tau",
        DispersionError::Stream(_) => "stream_error",
        DispersionError::SolverFailure { .. } => "solver_failure",
        DispersionError::InvalidInput(_) => "invalid_input",
    }
}

fn cmd_smallwave(ctx: &Ctx) -> Result<(), CliError> {
    let s = ctx.stream()?;
    let (ts, w) = ctx.seed(&s)?;
    let cc = &ctx.cfg.continuation;
    let field = WaveField::from_linear_wave(&w, cc.nx, cc.ny);
    ctx.write("smallwave.field.json", &io::field_json(&field).render())?;
    let n = ctx.cfg.wave.samples;
    let mut csv = Csv::new(&["x", "eta"]);
    for i in 0..n {
        let x = w.period() * i as f64 / (n - 1) as f64;
        csv.floats(&[x, w.eta(x).0]);
    }
    ctx.write("smallwave_surface.csv", &csv.render())?;
    let nodal = match check_nodal(&field, Orientation::Auto) {
        Ok(r) => io::nodal_json(&r),
        Err(e) => Json::Str(e.to_string()),
    };
    let summary = ObjBuilder::new()
        .field("regime", w.regime.as_str())
        .field("t", w.t)
        .field("tau_star", ts.tau)
        .field("period_star", w.period())
        .field("mode", ts.mode.as_str())
        .field("c_star", w.c_star)
        .field("c_star_choice", format!("{:?}", w.c_star_choice).to_lowercase())
        .field("max_field_residual", w.max_field_residual(n, n))
        .field("max_bernoulli_residual", w.max_bernoulli_residual(n))
        .field("max_kinematic_residual", w.max_kinematic_residual(n))
        .field("nodal", nodal)
        .build();
    ctx.write("smallwave.json", &summary.render())?;
    Ok(())
}

fn cmd_continue(ctx: &Ctx) -> Result<(), CliError> {
    let s = ctx.stream()?;
    let (ts, w) = ctx.seed(&s)?;
    ctx.log_transversality(ts.tau);
    if w.t == 0.0 {
        warn!("seed amplitude is zero: the branch consists of uniform streams only");
    }
    let b = continue_branch(&w, &ctx.cfg.continuation)?;
    io::write_branch(&ctx.out, &b)?;
    info!(
        "branch: {} points, termination {}",
        b.points.len(),
        b.termination.as_str()
    );
    if b.loop_report.artifact_warning {
        warn!("second uniform-stream point on a variable-period branch: numerical artifact");
    }
    Ok(())
}

fn cmd_check(ctx: &Ctx, file: &Path, orientation: OrientationArg) -> Result<(), CliError> {
    let field = io::read_field(file)?;
    let o = match orientation {
        OrientationArg::Positive => Orientation::Positive,
        OrientationArg::Negative => Orientation::Negative,
        OrientationArg::Auto => Orientation::Auto,
    };
    let report = check_nodal(&field, o)?;
    let text = io::nodal_json(&report).render();
    ctx.write("nodal.json", &text)?;
    print!("{text}");
    Ok(())
}

fn read_samples(file: &Path) -> Result<Vec<f64>, CliError> {
    let text =
        std::fs::read_to_string(file).map_err(|e| CliError::Input(format!("cannot read {}: {e}", file.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{} is empty", file.display())))?;
    let column = header.split(',').count() - 1;
    let values = lines
        .enumerate()
        .map(|(k, l)| {
            l.split(',')
                .nth(column)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Input(format!("{}: bad value on data row {}", file.display(), k + 1)))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    if values.is_empty() {
        return Err(CliError::Input(format!("{} has no samples", file.display())));
    }
    Ok(values)
}

fn cmd_hilbert(ctx: &Ctx, file: &Path, h: f64, period: f64) -> Result<(), CliError> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(CliError::Input(format!("period must be positive, got {period}")));
    }
    let values = read_samples(file)?;
    let u = PeriodicFunction::from_samples(period, &values, values.len());
    let v = periodic_hilbert(&u, h)?;
    let tau = u.tau();
    let mut csv = Csv::new(&["k", "multiplier", "in_cos", "in_sin", "out_cos", "out_sin"]);
    for (k, (a, b)) in u.modes.iter().zip(&v.modes).enumerate() {
        let kk = (k + 1) as f64;
        csv.row(vec![
            Cell::I(k + 1),
            Cell::F(1.0 / (kk * tau * h).tanh()),
            Cell::F(2.0 * a.re),
            Cell::F(-2.0 * a.im),
            Cell::F(2.0 * b.re),
            Cell::F(-2.0 * b.im),
        ]);
    }
    ctx.write("hilbert.csv", &csv.render())?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let ctx = Ctx { cfg, out };
    match &cli.command {
        Command::Stream => cmd_stream(&ctx),
        Command::Dispersion => cmd_dispersion(&ctx),
        Command::Smallwave => cmd_smallwave(&ctx),
        Command::Continue => cmd_continue(&ctx),
        Command::Check { file, orientation } => cmd_check(&ctx, file, *orientation),
        Command::Hilbert { file, h, period } => cmd_hilbert(&ctx, file, *h, *period),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
