//! Command-line front end: `run`, `sweep` and `compare`.
//!
//! Exit codes: 0 on success, 1 for configuration or input errors, 2 for
//! failures while simulating or writing results.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{self, EngineError, SweepTable, TraceRow};
use crate::geometry;
use crate::metrics::{self, Comparison, RunResult};
use crate::scenario::{parse_scenario, AggregationConfig, AllowedBands, CarrierSpec, ScenarioConfig};
use crate::scheduler::PfPolicy;
use crate::seed::SubSeeds;

/// Environment variable capping the number of sweep workers.
pub const THREADS_ENV: &str = "CA_NETSIM_THREADS";

/// Seed count and run length of a preset sweep.
const PRESET_SEEDS: u64 = 5;
const PRESET_N_TTI: u32 = 1000;

#[derive(Debug, Parser)]
#[command(name = "ca-netsim", version, about = "LTE-Advanced carrier aggregation system-level simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario.
    Run(RunArgs),
    /// Simulate every carrier combination over several seeds.
    Sweep(SweepArgs),
    /// Relative throughput and fairness change from run A to run B.
    Compare(CompareArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Scenario file (TOML or JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides the one in the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-RB allocation trace.
    #[arg(long)]
    pub trace: bool,
    /// Also write site, sector and UE positions.
    #[arg(long)]
    pub layout: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 1800@20+2100@20 against 900@10+1800@20+2100@20.
    #[value(name = "paper-2cc-vs-3cc")]
    TwoVsThreeCc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Joint,
    #[value(name = "per_cc", alias = "per-cc")]
    PerCc,
}

impl From<PolicyArg> for PfPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Joint => PfPolicy::Joint,
            PolicyArg::PerCc => PfPolicy::PerCc,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Allowed bands and bandwidths, e.g. "900:10;1800:10,20;2100:10,20".
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub bands: Option<String>,
    /// Carrier counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "2", conflicts_with = "preset")]
    pub cc: Vec<usize>,
    /// Number of seeds; seeds 1..=K are used.
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Base scenario for everything except the carriers.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_tti: Option<u32>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    /// Baseline summary.json.
    #[arg(long)]
    pub a: PathBuf,
    /// Summary.json compared against the baseline.
    #[arg(long)]
    pub b: PathBuf,
    /// Directory for compare.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Geometry(_) | EngineError::Propagation(_) | EngineError::Metrics(_) | EngineError::Pool(_) => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).and_then(|_| fill(&mut w)).map_err(|e| CliError::Runtime(e.to_string()))?;
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut scenario = load_scenario(&args.config)?;
    if let Some(seed) = args.seed {
        scenario.seed = Some(seed);
    }
    let out = engine::run_with_trace(&scenario, args.trace)?;
    create_dir(&args.out)?;
    write_file(&args.out.join("summary.json"), &pretty_json(&out.result)?)?;
    write_file(&args.out.join("cell_stats.csv"), &cell_stats_csv(&out.result)?)?;
    if let Some(trace) = &out.trace {
        write_file(&args.out.join("alloc_trace.csv"), &trace_csv(trace)?)?;
    }
    if args.layout {
        write_file(&args.out.join("layout.csv"), layout_csv(&scenario)?.as_bytes())?;
    }
    Ok(())
}

pub fn cell_stats_csv(r: &RunResult) -> Result<Vec<u8>, CliError> {
    csv_bytes(&["ue_id", "sector", "x", "y", "throughput_mbps"], |w| {
        for u in &r.per_ue {
            w.write_record([
                u.ue_id.to_string(),
                u.sector.to_string(),
                u.x.to_string(),
                u.y.to_string(),
                u.throughput_mbps.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn trace_csv(trace: &[TraceRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(&["tti", "carrier", "rb", "ue", "bits"], |w| {
        for t in trace {
            w.write_record([
                t.tti.to_string(),
                t.carrier.to_string(),
                t.rb.to_string(),
                t.ue.to_string(),
                t.bits.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn layout_csv(sc: &ScenarioConfig) -> Result<String, CliError> {
    let seed = sc.seed.ok_or_else(|| CliError::Config("seed required".into()))?;
    let layout = geometry::build_hex_layout(
        sc.layout.inter_site_distance_m,
        sc.layout.rings,
        sc.layout.sectors_per_site as usize,
        sc.layout.azimuth_offset_deg,
        sc.layout.site_height_m,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SubSeeds::new(seed).placement);
    let ues = geometry::drop_ues(
        &layout,
        sc.population.ues_per_sector as usize,
        sc.layout.min_ue_distance_m,
        sc.population.rx_height_m,
        &mut rng,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(geometry::layout_csv(&layout, &ues))
}

/// The two configurations of the 2CC versus 3CC comparison.
pub fn preset_combinations(preset: Preset) -> Vec<AggregationConfig> {
    match preset {
        Preset::TwoVsThreeCc => {
            let agg = |cs: &[(u32, f64)]| {
                AggregationConfig::new(cs.iter().map(|&(f, b)| CarrierSpec::builtin(f, b).expect("builtin carrier")).collect())
                    .expect("valid preset")
            };
            vec![agg(&[(1800, 20.0), (2100, 20.0)]), agg(&[(900, 10.0), (1800, 20.0), (2100, 20.0)])]
        }
    }
}

/// Worker count from the environment; `None` uses the global pool.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let (combos, default_seeds, default_n_tti) = match (args.preset, &args.bands) {
        (Some(p), _) => (preset_combinations(p), PRESET_SEEDS, Some(PRESET_N_TTI)),
        (None, Some(spec)) => {
            let allowed = AllowedBands::parse_spec(spec).map_err(|e| CliError::Config(e.to_string()))?;
            (engine::sweep_combinations(&allowed, &args.cc)?, PRESET_SEEDS, None)
        }
        (None, None) => return Err(CliError::Config("--bands or --preset required".into())),
    };
    let mut base = match &args.config {
        Some(path) => load_scenario(path)?,
        None => ScenarioConfig::new(combos[0].clone()),
    };
    if let Some(n) = args.n_tti.or(if args.config.is_none() { default_n_tti } else { None }) {
        base.sim.n_tti = n;
    }
    if let Some(p) = args.policy {
        base.sim.pf_policy = p.into();
    }
    let k = args.seeds.unwrap_or(default_seeds);
    if k == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let seeds: Vec<u64> = (1..=k).collect();
    let table = engine::run_sweep(&base, &combos, &seeds, threads_from_env()?)?;
    create_dir(&args.out)?;
    let policy = base.sim.pf_policy;
    write_file(&args.out.join("sweep.csv"), &sweep_csv(&table, policy)?)?;
    write_file(&args.out.join("fig4_throughput.csv"), &figure_csv(&table, Figure::Throughput)?)?;
    write_file(&args.out.join("fig5_fairness.csv"), &figure_csv(&table, Figure::Fairness)?)?;
    let failed = table.runs.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} runs failed; see the error column of sweep.csv", table.runs.len());
    }
    Ok(())
}

fn band_list(agg: &AggregationConfig) -> String {
    agg.carriers().iter().map(|c| c.band.frequency_mhz.to_string()).collect::<Vec<_>>().join(";")
}

fn bw_list(agg: &AggregationConfig) -> String {
    agg.carriers().iter().map(|c| c.bandwidth.to_string()).collect::<Vec<_>>().join(";")
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "combination",
    "band_list",
    "bw_list",
    "total_bw_mhz",
    "seed",
    "cell_avg_mbps",
    "fairness",
    "cell_avg_std_mbps",
    "fairness_std",
    "policy",
    "error",
];

/// One row per run followed by one aggregate row (seed `mean`) per
/// combination.
pub fn sweep_csv(table: &SweepTable, policy: PfPolicy) -> Result<Vec<u8>, CliError> {
    csv_bytes(&SWEEP_COLUMNS, |w| {
        for r in &table.runs {
            let c = &r.combination;
            let (tput, fair, err) = match &r.outcome {
                Ok(res) => (res.cell_avg_throughput_mbps.to_string(), res.fairness_index.to_string(), String::new()),
                Err(e) => (String::new(), String::new(), e.to_string()),
            };
            w.write_record([
                c.label(),
                band_list(c),
                bw_list(c),
                c.total_bandwidth_mhz().to_string(),
                r.seed.to_string(),
                tput,
                fair,
                String::new(),
                String::new(),
                policy.as_str().to_string(),
                err,
            ])?;
        }
        for a in &table.aggregates {
            let c = &a.combination;
            let num = |x: f64| if a.runs == 0 { String::new() } else { x.to_string() };
            w.write_record([
                c.label(),
                band_list(c),
                bw_list(c),
                c.total_bandwidth_mhz().to_string(),
                "mean".to_string(),
                num(a.mean_throughput_mbps),
                num(a.mean_fairness),
                num(a.std_throughput_mbps),
                num(a.std_fairness),
                policy.as_str().to_string(),
                if a.runs == 0 { "no successful runs".to_string() } else { String::new() },
            ])?;
        }
        Ok(())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Throughput,
    Fairness,
}

/// Bar-chart data: one row per combination with mean and std over seeds.
pub fn figure_csv(table: &SweepTable, figure: Figure) -> Result<Vec<u8>, CliError> {
    let header = match figure {
        Figure::Throughput => ["combination", "mode", "total_bw_mhz", "runs", "cell_avg_mbps", "cell_avg_std_mbps"],
        Figure::Fairness => ["combination", "mode", "total_bw_mhz", "runs", "fairness", "fairness_std"],
    };
    csv_bytes(&header, |w| {
        for a in &table.aggregates {
            let (m, s) = match figure {
                Figure::Throughput => (a.mean_throughput_mbps, a.std_throughput_mbps),
                Figure::Fairness => (a.mean_fairness, a.std_fairness),
            };
            let num = |x: f64| if a.runs == 0 { String::new() } else { x.to_string() };
            w.write_record([
                a.combination.label(),
                a.combination.mode_label(),
                a.combination.total_bandwidth_mhz().to_string(),
                a.runs.to_string(),
                num(m),
                num(s),
            ])?;
        }
        Ok(())
    })
}

fn load_summary(path: &Path) -> Result<RunResult, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: not a run summary: {e}", path.display())))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let a = load_summary(&args.a)?;
    let b = load_summary(&args.b)?;
    if a.seed != b.seed {
        eprintln!("warning: runs use different seeds ({} and {}); drops differ", a.seed, b.seed);
    }
    let c: Comparison = metrics::compare_runs(&a, &b).map_err(|e| CliError::Config(e.to_string()))?;
    let json = pretty_json(&c)?;
    print!("{}", String::from_utf8_lossy(&json));
    create_dir(&args.out)?;
    write_file(&args.out.join("compare.json"), &json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn parse_errors_exit_one() {
        assert_eq!(main_with_args(["ca-netsim", "sweep", "--out", "x"]), 1);
        assert_eq!(main_with_args(["ca-netsim", "bogus"]), 1);
        assert_eq!(main_with_args(["ca-netsim", "--help"]), 0);
    }

    #[test]
    fn preset_pair() {
        let p = preset_combinations(Preset::TwoVsThreeCc);
        assert_eq!(p[0].label(), "1800@20+2100@20");
        assert_eq!(p[1].label(), "900@10+1800@20+2100@20");
    }
}
