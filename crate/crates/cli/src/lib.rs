//! Command-line front end: fitting, single-level tests, p-value curves and
//! simulation campaigns.

pub mod config;
pub mod penn;
pub mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use qrwald_core::io::{build_restriction, load_csv, read_table, Loaded};
use qrwald_core::sim::{emit_report, run_experiment};
use qrwald_core::wald::test_at;
use qrwald_core::{
    fit_rq, pvalue_curve, Dataset, EgConfig, Error, GMethod, KernelSupport, LevelMode, Matrix, Restriction,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        return EXIT_NUMERICAL;
    }
    match e.root() {
        Error::Config { .. } | Error::Domain(_) | Error::EmptyGrid => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

#[derive(Debug, Parser)]
#[command(name = "qrwald", version, about = "Quantile-regression Wald tests with quantile-process density estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a regression quantile and print the coefficients.
    Fit(FitArgs),
    /// Wald test of a linear restriction at one quantile level.
    Test(TestArgs),
    /// Pointwise Wald tests over a grid of quantile levels.
    Curve(CurveArgs),
    /// Run a Monte Carlo size/power campaign from a config file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Pennsylvania reemployment-bonus layout.
    Penn,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Response column (ignored with `--profile penn`).
    #[arg(long, required_unless_present = "profile")]
    pub response: Option<String>,
    /// Prepend a column of ones named `intercept`.
    #[arg(long)]
    pub intercept: bool,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, Args)]
pub struct EgArgs {
    #[arg(long, default_value_t = 5.0)]
    pub k: f64,
    #[arg(long, default_value_t = 1.5)]
    pub c: f64,
    /// Fixed number of process levels instead of the rule in `k`.
    #[arg(long)]
    pub m: Option<usize>,
    /// Fixed bandwidth instead of the rule in `c`.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub a1: f64,
    #[arg(long, default_value_t = 0.99)]
    pub a2: f64,
    /// `equispaced` or `iid`.
    #[arg(long, default_value = "equispaced")]
    pub level_mode: String,
    /// Kernel support: `unit` for [-1,1], `half` for [-1/2,1/2].
    #[arg(long, default_value = "unit")]
    pub kernel: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RestrictArgs {
    /// Comma-separated coefficient names tested jointly equal to zero.
    #[arg(long, value_delimiter = ',', conflicts_with = "restrict_file")]
    pub restrict: Vec<String>,
    /// CSV with coefficient-name columns and an `rhs` column, one row per restriction.
    #[arg(long)]
    pub restrict_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "weg")]
    pub method: String,
    #[command(flatten)]
    pub restrict: RestrictArgs,
    #[command(flatten)]
    pub eg: EgArgs,
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `LO:HI:COUNT`, equally spaced and inclusive.
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value = "weg")]
    pub method: String,
    #[command(flatten)]
    pub restrict: RestrictArgs,
    #[command(flatten)]
    pub eg: EgArgs,
    /// Output prefix; writes `<out>.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write `<out>.svg`.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// One line per finished cell on standard error.
    #[arg(long)]
    pub progress: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RestrictionSource {
    Columns(Vec<String>),
    File(PathBuf),
    /// Profile default.
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevelSpec {
    Single(f64),
    Grid { lo: f64, hi: f64, count: usize },
}

impl LevelSpec {
    pub fn levels(&self) -> Vec<f64> {
        match *self {
            LevelSpec::Single(a) => vec![a],
            LevelSpec::Grid { lo, hi, count: 1 } => vec![0.5 * (lo + hi)],
            LevelSpec::Grid { lo, hi, count } => (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Fit,
    Test,
    Curve,
    Simulate,
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: CommandKind,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub response: Option<String>,
    pub intercept: bool,
    pub profile: Option<Profile>,
    pub levels: Option<LevelSpec>,
    pub method: GMethod,
    pub restriction: RestrictionSource,
    pub eg: EgConfig,
    pub tau: f64,
    pub svg: bool,
    pub progress: bool,
}

fn usage(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        msg: msg.into(),
    }
}

pub fn parse_grid(s: &str) -> Result<LevelSpec, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(usage("grid", "expected LO:HI:COUNT"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| usage("grid", "bad LO"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| usage("grid", "bad HI"))?;
    let count: usize = parts[2].trim().parse().map_err(|_| usage("grid", "bad COUNT"))?;
    if count == 0 {
        return Err(usage("grid", "COUNT must be positive"));
    }
    if !(lo > 0.0 && lo <= hi && hi < 1.0) {
        return Err(usage("grid", "need 0 < LO <= HI < 1"));
    }
    Ok(LevelSpec::Grid { lo, hi, count })
}

impl EgArgs {
    pub fn to_config(&self) -> Result<EgConfig, Error> {
        let cfg = EgConfig {
            a1: self.a1,
            a2: self.a2,
            k: self.k,
            c: self.c,
            m_override: self.m,
            h_override: self.h,
            level_mode: self.level_mode.parse::<LevelMode>()?,
            seed: self.seed,
            kernel: self.kernel.parse::<KernelSupport>()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RestrictArgs {
    fn source(&self) -> RestrictionSource {
        match (&self.restrict_file, self.restrict.is_empty()) {
            (Some(p), _) => RestrictionSource::File(p.clone()),
            (None, false) => RestrictionSource::Columns(self.restrict.clone()),
            (None, true) => RestrictionSource::Default,
        }
    }
}

impl RunSpec {
    fn base(command: CommandKind, input: PathBuf) -> Self {
        Self {
            command,
            input,
            output: None,
            response: None,
            intercept: false,
            profile: None,
            levels: None,
            method: GMethod::Eg,
            restriction: RestrictionSource::Default,
            eg: EgConfig::default(),
            tau: 0.05,
            svg: false,
            progress: false,
        }
    }

    fn with_data(mut self, d: &DataArgs) -> Self {
        self.response = d.response.clone();
        self.intercept = d.intercept;
        self.profile = d.profile;
        self
    }

    pub fn from_command(cmd: &Command) -> Result<Self, Error> {
        let spec = match cmd {
            Command::Fit(a) => Self {
                levels: Some(LevelSpec::Single(a.alpha)),
                output: a.out.clone(),
                ..Self::base(CommandKind::Fit, a.data.input.clone()).with_data(&a.data)
            },
            Command::Test(a) => Self {
                levels: Some(LevelSpec::Single(a.alpha)),
                output: a.out.clone(),
                method: a.method.parse()?,
                restriction: a.restrict.source(),
                eg: a.eg.to_config()?,
                tau: a.tau,
                ..Self::base(CommandKind::Test, a.data.input.clone()).with_data(&a.data)
            },
            Command::Curve(a) => Self {
                levels: Some(parse_grid(&a.grid)?),
                output: Some(a.out.clone()),
                method: a.method.parse()?,
                restriction: a.restrict.source(),
                eg: a.eg.to_config()?,
                svg: a.svg,
                ..Self::base(CommandKind::Curve, a.data.input.clone()).with_data(&a.data)
            },
            Command::Simulate(a) => Self {
                output: Some(a.out.clone()),
                progress: a.progress,
                ..Self::base(CommandKind::Simulate, a.config.clone())
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(usage("tau", "must lie in (0,1)"));
        }
        match self.command {
            CommandKind::Simulate => {
                if self.output.is_none() {
                    return Err(usage("out", "simulate needs an output path"));
                }
                return Ok(());
            }
            CommandKind::Curve if !matches!(self.levels, Some(LevelSpec::Grid { .. })) => {
                return Err(usage("grid", "curve requires a level grid"));
            }
            _ => {}
        }
        if self.profile.is_none() && self.response.is_none() {
            return Err(usage("response", "required without a profile"));
        }
        if matches!(self.command, CommandKind::Test | CommandKind::Curve)
            && self.profile.is_none()
            && self.restriction == RestrictionSource::Default
        {
            return Err(usage("restrict", "name the coefficients to test"));
        }
        let levels = self.levels.as_ref().map(LevelSpec::levels).unwrap_or_default();
        for a in levels {
            if !(a > 0.0 && a < 1.0) {
                return Err(usage("alpha", format!("level {a} outside (0,1)")));
            }
            if self.command != CommandKind::Fit && self.method == GMethod::Eg && !(self.eg.a1 < a && a < self.eg.a2) {
                return Err(usage("alpha", format!("level {a} outside the process interval [{}, {}]", self.eg.a1, self.eg.a2)));
            }
        }
        Ok(())
    }
}

/// Loaded data and the restriction the profile or flags imply.
pub struct Prepared {
    pub data: Dataset,
    pub dropped: usize,
    pub restriction: Option<Restriction>,
}

pub fn prepare(spec: &RunSpec) -> Result<Prepared, Error> {
    let (loaded, default_names) = match spec.profile {
        Some(Profile::Penn) => {
            let p = penn::load(&spec.input)?;
            (p.loaded, Some(p.interactions))
        }
        None => (
            load_csv(&spec.input, spec.response.as_deref().expect("validated"), spec.intercept)?,
            None,
        ),
    };
    let Loaded { data, dropped } = loaded;
    let restriction = match &spec.restriction {
        RestrictionSource::Columns(names) => Some(build_restriction(&data, names)?),
        RestrictionSource::File(p) => Some(restriction_from_file(&data, p)?),
        RestrictionSource::Default => match default_names {
            Some(names) => Some(build_restriction(&data, &names)?),
            None => None,
        },
    };
    Ok(Prepared {
        data,
        dropped,
        restriction,
    })
}

/// Reads an explicit `R β = r` specification: one column per named
/// coefficient plus `rhs`; unnamed coefficients get zero weight.
pub fn restriction_from_file(data: &Dataset, path: &Path) -> Result<Restriction, Error> {
    let table = read_table(path)?;
    let rhs_col = table.column("rhs")?;
    let d = data.d();
    let mut r_mat = Matrix::zeros(table.rows.len(), d);
    let mut r = Vec::with_capacity(table.rows.len());
    let targets = table
        .header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != rhs_col)
        .map(|(j, name)| {
            data.column_index(name)
                .map(|k| (j, k))
                .ok_or_else(|| Error::UnknownColumn(name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (row, (line, cells)) in table.rows.iter().enumerate() {
        let num = |j: usize| {
            cells[j].parse::<f64>().map_err(|_| Error::Parse {
                line: *line,
                msg: format!("non-numeric cell `{}`", cells[j]),
            })
        };
        for &(j, k) in &targets {
            r_mat[(row, k)] = num(j)?;
        }
        r.push(num(rhs_col)?);
    }
    Restriction::new(r_mat, r)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_fit(spec: &RunSpec) -> Result<(), Error> {
    let prep = prepare(spec)?;
    let alpha = spec.levels.as_ref().expect("validated").levels()[0];
    let fit = fit_rq(&prep.data, alpha)?;
    let mut out = String::from("term,estimate\n");
    for (name, b) in prep.data.column_names().iter().zip(&fit.beta) {
        writeln!(out, "{name},{b:.16e}").unwrap();
    }
    write_or_print(spec.output.as_deref(), &out)
}

pub fn cmd_test(spec: &RunSpec) -> Result<(), Error> {
    let prep = prepare(spec)?;
    let restr = prep.restriction.as_ref().expect("validated");
    let alpha = spec.levels.as_ref().expect("validated").levels()[0];
    let res = test_at(&prep.data, restr, alpha, spec.method, &spec.eg)?;
    let mut out = String::from("alpha,statistic,df,p_value,method,bandwidth,m,reject\n");
    writeln!(
        out,
        "{},{:.10e},{},{:.10e},{},{:.10e},{},{}",
        res.alpha,
        res.statistic,
        res.df,
        res.p_value,
        res.method,
        res.bandwidth,
        res.m_used.map(|m| m.to_string()).unwrap_or_default(),
        res.rejects(spec.tau)
    )
    .unwrap();
    write_or_print(spec.output.as_deref(), &out)
}

/// Appends `ext` to the prefix without replacing an existing extension.
pub fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Returns the number of grid points that failed.
pub fn cmd_curve(spec: &RunSpec) -> Result<usize, Error> {
    let prep = prepare(spec)?;
    let restr = prep.restriction.as_ref().expect("validated");
    let alphas = spec.levels.as_ref().expect("validated").levels();
    let points = pvalue_curve(&prep.data, restr, &alphas, spec.method, &spec.eg)?;
    let mut out = String::from("alpha,statistic,df,p_value,status\n");
    let mut failed = 0;
    for p in &points {
        match &p.outcome {
            Ok(w) => writeln!(out, "{},{:.10e},{},{:.10e},ok", p.alpha, w.statistic, w.df, w.p_value).unwrap(),
            Err(e) => {
                failed += 1;
                let status = e.root().to_string().replace([',', '\n'], ";");
                writeln!(out, "{},,{},,{}", p.alpha, restr.j(), status).unwrap()
            }
        }
    }
    let prefix = spec.output.as_deref().expect("validated");
    fs::write(with_suffix(prefix, "csv"), out)?;
    if spec.svg {
        let pts: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|w| (p.alpha, w.p_value)))
            .collect();
        fs::write(with_suffix(prefix, "svg"), svg::pvalue_plot(&pts, 0.10))?;
    }
    Ok(failed)
}

pub fn cmd_simulate(spec: &RunSpec) -> Result<(), Error> {
    let text = fs::read_to_string(&spec.input)?;
    let mut cfg = config::parse_sim_config(&text)?;
    cfg.progress = spec.progress;
    let report = run_experiment(&cfg)?;
    emit_report(&report, spec.output.as_deref().expect("validated"))
}

pub fn run(spec: &RunSpec) -> Result<(), Error> {
    match spec.command {
        CommandKind::Fit => cmd_fit(spec),
        CommandKind::Test => cmd_test(spec),
        CommandKind::Curve => {
            let failed = cmd_curve(spec)?;
            if failed > 0 {
                log::warn!("{failed} grid points failed; see the status column");
            }
            Ok(())
        }
        CommandKind::Simulate => cmd_simulate(spec),
    }
}

/// Applies `QRWALD_THREADS` to the global rayon pool.
pub fn configure_threads(value: Option<&str>) -> Result<(), Error> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage("QRWALD_THREADS", format!("expected a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage("QRWALD_THREADS", e.to_string()))
}
