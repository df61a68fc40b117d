use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use steinhaus_core::montecarlo::DEFAULT_WORK_LIMIT;
use steinhaus_core::{
    fit_growth_exponent, EnergyReport, EnumerationOptions, Error as CoreError, FactorTable,
    NormalizationMode, PhaseModel, QuadrupleConstraint, QuadrupleEnumerator, RmfRealization,
    SampleSummary, SetSpec, Simulation, SimulationPlan, WeightVector,
};

use crate::artifact::{self, *};
use crate::parallel;
use crate::setarg::SetArg;
use crate::LabError;

/// Largest `N` accepted by the `phases` dump.
pub const PHASE_DUMP_CAP: u32 = 10_000;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (schema 1)");

#[derive(Debug, Parser)]
#[command(
    name = "rmf-lab",
    version = VERSION,
    about = "Monte Carlo and exact-count experiments for Steinhaus random multiplicative functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample normalized subset sums of f and summarize their distribution
    Simulate(SimulateArgs),
    /// Mean of |sum_{n<=x} f(n)| / sqrt(x) over an x grid
    Harper(HarperArgs),
    /// Exact quadruple count and weighted energy sum
    Energy(EnergyArgs),
    /// Second moment of the weighted quadruple sum across an N grid
    Concentrate(ConcentrateArgs),
    /// Print smallest/largest prime factors and factorizations
    SieveDebug(SieveDebugArgs),
    /// Dump the phases of one realization as CSV (N <= 10000)
    Phases(PhasesArgs),
    /// Merge simulate artifacts into one comparison table (CSV)
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Phases {
    Steinhaus,
    Identity,
}

impl Phases {
    fn model(self) -> PhaseModel {
        match self {
            Phases::Steinhaus => PhaseModel::Steinhaus,
            Phases::Identity => PhaseModel::Identity,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Phases::Steinhaus => "steinhaus",
            Phases::Identity => "identity",
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: u32,
    /// interval | primes | short:M | table | bernoulli:RHO:SEED | exact:RHO:SEED | file:PATH
    #[arg(long)]
    set: SetArg,
    /// Density used by the normalizers [default: the set's nominal density]
    #[arg(long)]
    rho: Option<f64>,
    /// raw | dc | centered | centered-size
    #[arg(long, default_value = "raw")]
    mode: NormalizationMode,
    #[arg(long)]
    reps: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, value_enum, default_value = "steinhaus")]
    phases: Phases,
    /// Refuse runs with reps * N above this many term evaluations
    #[arg(long, default_value_t = DEFAULT_WORK_LIMIT)]
    work_limit: u128,
    /// Store wall-clock time in the artifact (breaks byte-identical reruns)
    #[arg(long)]
    record_runtime: bool,
}

#[derive(Debug, Args)]
struct HarperArgs {
    /// Strictly ascending, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    x_grid: Vec<u32>,
    #[arg(long)]
    reps: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, value_enum, default_value = "steinhaus")]
    phases: Phases,
    #[arg(long)]
    record_runtime: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("what").required(true).args(["count_only", "weights"])))]
struct EnergyArgs {
    #[arg(long)]
    n: u32,
    /// cross | lind
    #[arg(long)]
    mode: QuadrupleConstraint,
    /// Print the exact count only
    #[arg(long)]
    count_only: bool,
    /// Centered weights 1_A - rho of this set, e.g. bernoulli:RHO:SEED
    #[arg(long)]
    weights: Option<SetSpec>,
    /// Also drop quadruples with {n1, n2} = {m1, m2}
    #[arg(long)]
    exclude_swaps: bool,
    #[arg(long, default_value_t = steinhaus_core::energy::DEFAULT_ENUMERATION_CAP)]
    cap: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    record_runtime: bool,
}

#[derive(Debug, Args)]
struct ConcentrateArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_grid: Vec<u32>,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    reps: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "cross")]
    mode: QuadrupleConstraint,
    #[arg(long)]
    exclude_swaps: bool,
    #[arg(long, default_value_t = steinhaus_core::energy::DEFAULT_ENUMERATION_CAP)]
    cap: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    record_runtime: bool,
}

#[derive(Debug, Args)]
struct SieveDebugArgs {
    #[arg(long)]
    n: u32,
    /// Values to factor [default: a summary of the table]
    values: Vec<u32>,
}

#[derive(Debug, Args)]
struct PhasesArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long, value_enum, default_value = "steinhaus")]
    phases: Phases,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// simulate artifacts (JSON)
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = writeln!(stderr, "{}", e.render());
                    let _ = writeln!(stderr, "{}", Cli::command().render_long_help());
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), LabError> {
    match command {
        Command::Simulate(a) => simulate(a, stdout),
        Command::Harper(a) => harper(a, stdout),
        Command::Energy(a) => energy(a, stdout),
        Command::Concentrate(a) => concentrate(a, stdout, stderr),
        Command::SieveDebug(a) => sieve_debug(a, stdout),
        Command::Phases(a) => phases(a, stdout),
        Command::Report(a) => report(a, stdout),
    }
}

fn path_string(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn elapsed(start: Instant, record: bool) -> Option<f64> {
    record.then(|| start.elapsed().as_secs_f64())
}

fn check_invariants(s: &SampleSummary) -> Result<(), LabError> {
    let slack = 1.0 - 1e-12;
    if s.m4.is_nan() || s.m4 < s.m2 * s.m2 * slack {
        return Err(LabError::Internal(format!("m4 = {} < m2^2 = {}", s.m4, s.m2 * s.m2)));
    }
    if s.m2.is_nan() || s.m2 < s.m1 * s.m1 * slack {
        return Err(LabError::Internal(format!("m2 = {} < m1^2 = {}", s.m2, s.m1 * s.m1)));
    }
    Ok(())
}

fn simulate(a: SimulateArgs, stdout: &mut dyn Write) -> Result<(), LabError> {
    let start = Instant::now();
    if a.n == 0 {
        return Err(CoreError::ZeroLimit.into());
    }
    if a.reps == 0 {
        return Err(LabError::Usage("--reps must be at least 1".into()));
    }
    let work = a.reps as u128 * a.n as u128;
    if work > a.work_limit {
        return Err(CoreError::WorkLimit { work, limit: a.work_limit }.into());
    }
    let table = FactorTable::build(a.n)?;
    let set = a.set.build(&table)?;
    let rho = a.rho.unwrap_or_else(|| set.nominal_density());
    let mut plan = SimulationPlan::new(a.n, rho, a.mode, a.reps, a.seed).with_phase_model(a.phases.model());
    plan.work_limit = a.work_limit;
    let config = SimulateConfig {
        n: a.n,
        set: a.set.to_string(),
        set_size: set.len(),
        rho,
        mode: a.mode.as_str().to_string(),
        reps: a.reps,
        seed: a.seed,
        phases: a.phases.as_str().to_string(),
        threads: a.threads as usize,
        format: a.format.as_str().to_string(),
        out: path_string(&a.out),
    };
    let sim = Simulation::from_parts(plan, table, set)?;
    let summary = parallel::simulate(&sim, a.threads as usize)?;
    check_invariants(&summary)?;
    let art = SimulateArtifact::new(config, &summary, elapsed(start, a.record_runtime));
    let text = match a.format {
        Format::Json => artifact::to_json(&art)?,
        Format::Csv => artifact::simulate_csv(&art)?,
    };
    artifact::emit(a.out.as_deref(), &text, stdout)
}

fn harper(a: HarperArgs, stdout: &mut dyn Write) -> Result<(), LabError> {
    let start = Instant::now();
    let rows = parallel::harper_scan(&a.x_grid, a.reps, a.seed, a.phases.model(), a.threads as usize)?;
    let rows: Vec<HarperPoint> = rows.into_iter().map(HarperPoint::from).collect();
    let art = HarperArtifact {
        header: Header::new("harper"),
        plan: HarperConfig {
            x_grid: a.x_grid.clone(),
            reps: a.reps,
            seed: a.seed,
            phases: a.phases.as_str().to_string(),
            threads: a.threads as usize,
            format: a.format.as_str().to_string(),
            out: path_string(&a.out),
        },
        rows,
        runtime_seconds: elapsed(start, a.record_runtime),
    };
    let text = match a.format {
        Format::Json => artifact::to_json(&art)?,
        Format::Csv => artifact::harper_csv(&art.rows)?,
    };
    artifact::emit(a.out.as_deref(), &text, stdout)
}

fn energy(a: EnergyArgs, stdout: &mut dyn Write) -> Result<(), LabError> {
    let start = Instant::now();
    let options = EnumerationOptions::new(a.mode).excluding_swaps(a.exclude_swaps).with_cap(a.cap);
    options.check(a.n)?;
    let table = FactorTable::build(a.n)?;
    let enumerator = QuadrupleEnumerator::new(&table, a.n, options)?;
    let threads = a.threads as usize;
    let count = parallel::count(&enumerator, threads)?;
    let report = match &a.weights {
        None => EnergyReport::new(a.n, options, count, None)?,
        Some(spec) => {
            let set = spec.build(&table)?;
            let w = WeightVector::centered(&set, set.nominal_density())?;
            let sum = parallel::weighted_sums(&enumerator, &[w.values()], threads)?[0];
            EnergyReport::new(a.n, options, count, Some((sum, &w)))?
        }
    };
    let art = EnergyArtifact::new(
        EnergyConfig {
            n: a.n,
            mode: a.mode.as_str().to_string(),
            exclude_swaps: a.exclude_swaps,
            weights: a.weights.map(|s| s.to_string()),
            cap: a.cap,
            threads,
            out: path_string(&a.out),
        },
        &report,
        elapsed(start, a.record_runtime),
    );
    if a.count_only {
        writeln!(stdout, "{count}").map_err(|e| LabError::io("<stdout>", e))?;
        if let Some(out) = &a.out {
            artifact::write_text(out, &artifact::to_json(&art)?)?;
        }
        return Ok(());
    }
    artifact::emit(a.out.as_deref(), &artifact::to_json(&art)?, stdout)
}

fn concentrate(a: ConcentrateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), LabError> {
    let start = Instant::now();
    let options = EnumerationOptions::new(a.mode).excluding_swaps(a.exclude_swaps).with_cap(a.cap);
    if a.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Usage("--n-grid must be strictly ascending".into()));
    }
    for &n in &a.n_grid {
        steinhaus_core::energy::validate_concentration(n, a.rho, a.reps, options)?;
    }
    let max = *a.n_grid.last().expect("clap requires a non-empty grid");
    let table = FactorTable::build(max)?;
    let threads = a.threads as usize;
    let mut rows = Vec::with_capacity(a.n_grid.len());
    for &n in &a.n_grid {
        let r = parallel::concentration(&table, n, a.rho, a.reps, a.seed, options, threads)?;
        rows.push(ConcentrationPoint::from(&r));
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.mean_sq)).collect();
    let exponent = fit_growth_exponent(&points).ok();
    let art = ConcentrationArtifact {
        header: Header::new("concentrate"),
        plan: ConcentrationConfig {
            n_grid: a.n_grid.clone(),
            rho: a.rho,
            reps: a.reps,
            seed: a.seed,
            mode: a.mode.as_str().to_string(),
            exclude_swaps: a.exclude_swaps,
            cap: a.cap,
            threads,
            format: a.format.as_str().to_string(),
            out: path_string(&a.out),
        },
        rows,
        exponent,
        runtime_seconds: elapsed(start, a.record_runtime),
    };
    let text = match a.format {
        Format::Json => artifact::to_json(&art)?,
        Format::Csv => artifact::concentration_csv(&art.rows)?,
    };
    artifact::emit(a.out.as_deref(), &text, stdout)?;
    let shown = exponent.map(|e| e.to_string()).unwrap_or_else(|| "n/a".into());
    writeln!(stderr, "growth exponent of mean_sq: {shown}").map_err(|e| LabError::io("<stderr>", e))
}

fn sieve_debug(a: SieveDebugArgs, stdout: &mut dyn Write) -> Result<(), LabError> {
    let table = FactorTable::build(a.n)?;
    let mut text = String::new();
    if a.values.is_empty() {
        let primes = table.primes();
        text.push_str(&format!("N = {}\nprimes = {}\n", a.n, primes.len()));
        if let Some(p) = primes.last() {
            text.push_str(&format!("largest prime = {p}\n"));
        }
    }
    for &v in &a.values {
        let factors = table
            .factorize(v)?
            .into_iter()
            .map(|(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect::<Vec<_>>();
        let factors = if factors.is_empty() { "1".to_string() } else { factors.join(" * ") };
        text.push_str(&format!(
            "{v}: spf = {}, P = {}, {v} = {factors}\n",
            table.smallest_prime_factor(v)?,
            table.largest_prime_factor(v)?,
        ));
    }
    stdout.write_all(text.as_bytes()).map_err(|e| LabError::io("<stdout>", e))
}

fn phases(a: PhasesArgs, stdout: &mut dyn Write) -> Result<(), LabError> {
    if a.n > PHASE_DUMP_CAP {
        return Err(CoreError::LimitAboveCap { what: "phase dump", limit: a.n as u64, cap: PHASE_DUMP_CAP as u64 }.into());
    }
    let table = FactorTable::build(a.n)?;
    let mut f = RmfRealization::identity(&table);
    f.resample(&table, a.phases.model(), a.seed, a.replicate);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows = || -> csv::Result<()> {
        w.write_record(["n", "phase", "phase_bits"])?;
        for n in 1..=a.n {
            let phase = f.phase(n).expect("n within the table");
            w.write_record([n.to_string(), phase.fraction().to_string(), phase.bits().to_string()])?;
        }
        Ok(())
    };
    rows().map_err(|e| LabError::Internal(format!("csv: {e}")))?;
    let bytes = w.into_inner().map_err(|e| LabError::Internal(format!("csv: {e}")))?;
    let text = String::from_utf8(bytes).map_err(|e| LabError::Internal(e.to_string()))?;
    artifact::emit(a.out.as_deref(), &text, stdout)
}

fn report(a: ReportArgs, stdout: &mut dyn Write) -> Result<(), LabError> {
    let runs = a
        .inputs
        .iter()
        .map(|p| Ok((p.clone(), artifact::read_simulate(p)?)))
        .collect::<Result<Vec<_>, LabError>>()?;
    let text = artifact::report_csv(&runs)?;
    artifact::emit(a.out.as_deref().map(Path::new), &text, stdout)
}
