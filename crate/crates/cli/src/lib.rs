//! Command implementations behind the `roulette` binary.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rug::ops::Pow;
use rug::{Integer, Rational};

use roulette_core::bounds::cache::{load_existing, load_or_compute, write_table, CacheStatus};
use roulette_core::bounds::{figure_data, write_figure_csv, BoundsTable, WindowPolicy};
use roulette_core::coupling::{
    collision_experiment, simulate_multiround, sweep_experiment, write_trajectory_csv, MultiRoundPlan,
};
use roulette_core::decimal::{parse_decimal, to_decimal, Rounding};
use roulette_core::intervals::{
    hv_tail_terms, nonconvergence_certificate_with, CertificateReport, HvTailSums, CERT_N_MIN,
};

/// Environment variable overriding the bounds cache directory.
pub const CACHE_DIR_VAR: &str = "ROULETTE_CACHE_DIR";

pub const DEFAULT_CACHE_DIR: &str = "roulette-cache";
pub const QUICK_N: u32 = 1200;
pub const FULL_N: u32 = 6000;

/// Failures of a command, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("certificate failed: {0}")]
    CertificateFailed(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    CacheIntegrity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CertificateFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Domain(_) => 4,
            CliError::CacheIntegrity(_) => 5,
        }
    }
}

impl From<roulette_core::Error> for CliError {
    fn from(e: roulette_core::Error) -> Self {
        use roulette_core::Error as E;
        match e {
            E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
            E::CacheIntegrity { .. } => CliError::CacheIntegrity(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Simulation {
    RoundSweep { from: u32, to: u32, realizations: u64 },
    Multiround { start: u32, rounds: u32, copy: i64 },
    Collision { a: u32, b: u32, trials: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Bounds,
    Certify,
    Simulate(Simulation),
    Figure,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub n: u32,
    pub scale: Integer,
    /// Target width of the enclosures behind reported real quantities.
    pub precision: Rational,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub force_recompute: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            n: QUICK_N,
            scale: Integer::from(10u64.pow(10)),
            precision: Rational::from((1, Integer::from(10).pow(30))),
            seed: 0,
            threads: 0,
            out: None,
            cache_dir: default_cache_dir(),
            force_recompute: false,
        }
    }
}

pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

/// Parse `0.001`, `1e-30` or `1/1000` into an exact positive rational.
pub fn parse_precision(s: &str) -> CliResult<Rational> {
    let bad = || CliError::Usage(format!("invalid precision {s:?}"));
    let q = if let Some((m, e)) = s.split_once(['e', 'E']) {
        let m = parse_decimal(m).map_err(|_| bad())?;
        let e: i32 = e.parse().map_err(|_| bad())?;
        let p = Rational::from(Integer::from(10).pow(e.unsigned_abs()));
        if e < 0 {
            m / p
        } else {
            m * p
        }
    } else if s.contains('/') {
        Rational::from_str(s.trim()).map_err(|_| bad())?
    } else {
        parse_decimal(s).map_err(|_| bad())?
    };
    if q <= 0 {
        return Err(bad());
    }
    Ok(q)
}

/// Run `f` on a pool with the configured number of threads.
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

/// Run the configured command, writing human-readable output to `log`.
pub fn run(config: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    match &config.command {
        Command::Bounds => cmd_bounds(config, log).map(drop),
        Command::Certify => {
            let report = cmd_certify(config, log)?;
            if report.passed() {
                Ok(())
            } else {
                let names: Vec<_> = report.failures().map(|c| c.name).collect();
                Err(CliError::CertificateFailed(names.join(", ")))
            }
        }
        Command::Simulate(sim) => cmd_simulate(config, sim, log).map(drop),
        Command::Figure => cmd_figure(config, log).map(drop),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn cache_table(config: &RunConfig, n: u32) -> CliResult<(BoundsTable, CacheStatus)> {
    std::fs::create_dir_all(&config.cache_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", config.cache_dir.display())))?;
    let policy = WindowPolicy::Widened;
    let (dir, scale, force) = (&config.cache_dir, &config.scale, config.force_recompute);
    Ok(with_pool(config.threads, || {
        load_or_compute(dir, n, scale, policy, force, None)
    })??)
}

fn describe(status: &CacheStatus) -> String {
    match status {
        CacheStatus::Hit(p) => format!("cache hit {}", p.display()),
        CacheStatus::Computed(p) => format!("computed, cached at {}", p.display()),
    }
}

/// Compute (or load) the bounds table for `n <= N` and optionally export it.
pub fn cmd_bounds(config: &RunConfig, log: &mut dyn Write) -> CliResult<BoundsTable> {
    if config.n < 2 {
        return Err(CliError::Domain(format!("N = {} must be at least 2", config.n)));
    }
    let start = Instant::now();
    let (table, status) = cache_table(config, config.n)?;
    let table = if table.n_max() > config.n {
        table.truncated(config.n)?
    } else {
        table
    };
    if let Some(out) = &config.out {
        let mut w = create(out)?;
        write_table(&table, &mut w)?;
        w.flush()?;
    }
    let mut s = String::new();
    writeln!(s, "N = {}", table.n_max()).unwrap();
    writeln!(s, "scale = {}", table.scale()).unwrap();
    if let Some((n, gap)) = table.max_gap() {
        writeln!(s, "max_gap = {} at n = {n}", to_decimal(&gap, 12, Rounding::Up)).unwrap();
    }
    writeln!(s, "source = {}", describe(&status)).unwrap();
    writeln!(s, "wall_time_s = {:.2}", start.elapsed().as_secs_f64()).unwrap();
    log.write_all(s.as_bytes())?;
    Ok(table)
}

/// Assemble the certificate from a bounds table covering the valleys.
pub fn cmd_certify(config: &RunConfig, log: &mut dyn Write) -> CliResult<CertificateReport> {
    certify_with(config, None, log)
}

/// [`cmd_certify`], reusing tail sums computed elsewhere when given.
pub fn certify_with(
    config: &RunConfig,
    tails: Option<HvTailSums>,
    log: &mut dyn Write,
) -> CliResult<CertificateReport> {
    let n = config.n.max(CERT_N_MIN);
    let start = Instant::now();
    let (table, status) = cache_table(config, n)?;
    writeln!(log, "bounds = {}", describe(&status))?;
    let tails = match tails {
        Some(t) => t,
        None => with_pool(config.threads, hv_tail_terms)??,
    };
    let report = nonconvergence_certificate_with(&table, tails, &config.precision)?;
    if let Some(out) = &config.out {
        let mut w = create(out)?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    write!(log, "{report}")?;
    writeln!(log, "wall_time_s = {:.2}", start.elapsed().as_secs_f64())?;
    Ok(report)
}

/// Summary of a simulation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationSummary {
    pub violations: u64,
    pub text: String,
}

/// Run one coupling experiment; the output is a function of the config only.
pub fn cmd_simulate(config: &RunConfig, sim: &Simulation, log: &mut dyn Write) -> CliResult<SimulationSummary> {
    let seed = config.seed;
    let (violations, text, csv) = match *sim {
        Simulation::RoundSweep { from, to, realizations } => {
            if from < 2 || from > to {
                return Err(CliError::Domain(format!("invalid range {from}..{to}")));
            }
            let (checks, found) = with_pool(config.threads, || sweep_experiment(from..=to, realizations, seed))??;
            let mut text = format!("range = {from}..{to}\nrealizations = {realizations}\nseed = {seed}\n");
            writeln!(text, "checked = {checks}").unwrap();
            let mut csv = String::from("n,i,violation\n");
            for v in &found {
                writeln!(csv, "{},{},{}", v.n, v.i, v.what).unwrap();
            }
            (found.len() as u64, text, Some(csv))
        }
        Simulation::Multiround { start, rounds, copy } => {
            let plan = MultiRoundPlan::constant(seed, copy);
            let mut traj = simulate_multiround(&plan, start, rounds)?;
            // absorbed states stay put
            let last = *traj.last().expect("trajectory holds the start");
            traj.resize(rounds as usize + 1, last);
            let mut buf = Vec::new();
            write_trajectory_csv(&traj, &mut buf)?;
            let text = format!("start = {start}\nrounds = {rounds}\nfinal = {last}\nseed = {seed}\n");
            (0, text, Some(String::from_utf8(buf).expect("csv is utf-8")))
        }
        Simulation::Collision { a, b, trials } => {
            let report = with_pool(config.threads, || collision_experiment(a, b, trials, seed))??;
            (0, format!("{report}seed = {seed}\n"), None)
        }
    };
    let text = format!("{text}violations = {violations}\n");
    log.write_all(text.as_bytes())?;
    if let (Some(out), Some(csv)) = (&config.out, csv) {
        let mut w = create(out)?;
        w.write_all(csv.as_bytes())?;
        w.flush()?;
    }
    Ok(SimulationSummary { violations, text })
}

/// Export `n, log_n, lower, upper` from an existing cache.
pub fn cmd_figure(config: &RunConfig, log: &mut dyn Write) -> CliResult<usize> {
    let policy = WindowPolicy::Widened;
    let table = load_existing(&config.cache_dir, config.n, &config.scale, policy)?;
    let table = if table.n_max() > config.n {
        table.truncated(config.n)?
    } else {
        table
    };
    let rows = figure_data(&table)?;
    match &config.out {
        Some(out) => {
            let mut w = create(out)?;
            write_figure_csv(&rows, &mut w)?;
            w.flush()?;
            writeln!(log, "rows = {}\nout = {}", rows.len(), out.display())?;
        }
        None => write_figure_csv(&rows, &mut *log)?,
    }
    Ok(rows.len())
}
