//! The `coflow` command line.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::benchmarks::{solve, SchedulerId};
use crate::harness::{compare, read_results_csv, run_sweep, write_comparison_csv, write_raw_csv, write_results_csv};
use crate::harness::{SweepAxis, SweepOptions, SweepSpec};
use crate::instance::{generate_instance, GeneratorConfig};
use crate::io::{read_instance, read_schedule_file, read_sweep, write_instance, write_schedule};
use crate::schedule::{export_milp, validate};

#[derive(Debug, Parser)]
#[command(name = "coflow", version, about = "Multi-source coflow scheduling on multi-hop edge networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Schedule an instance and write the schedule file.
    Solve(SolveArgs),
    /// Check a schedule file against the instance; exits 1 on violations.
    Validate(ValidateArgs),
    /// Write the source-selection and ordering MILP in CPLEX LP format.
    ExportMilp(ExportArgs),
    /// Run a parameter sweep and write the results CSV.
    Sweep(SweepArgs),
    /// Percentage reduction of SCASA against every other scheduler.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 40)]
    pub devices: usize,
    #[arg(long, default_value_t = 20)]
    pub coflows: usize,
    /// Flows per coflow.
    #[arg(long, default_value_t = 3)]
    pub flows: usize,
    /// Source options per flow.
    #[arg(long, default_value_t = 3)]
    pub sources: usize,
    /// Mean link bandwidth, Mbps.
    #[arg(long, default_value_t = 20.0)]
    pub bandwidth: f64,
    /// Mean flow size, Mb.
    #[arg(long, default_value_t = 2.0)]
    pub data: f64,
    /// Mean release time as a multiple of data / bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub release_scale: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// RANDOM, FLS, CFLS, BAS, FLORD, SCASA or SCASA_FLORD (case-insensitive).
    #[arg(long)]
    pub scheduler: String,
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Required by RANDOM, rejected otherwise.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep spec file. Alternatively give --axis to sweep its default grid.
    #[arg(long, conflicts_with_all = ["axis", "iterations", "seed"], required_unless_present = "axis")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long, requires = "axis")]
    pub iterations: Option<usize>,
    #[arg(long, requires = "axis")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write per-seed values here.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Fill in wall-clock runtimes (makes the output differ between runs).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Results CSV written by `sweep`.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Validate(a) => validate_cmd(a),
        Command::ExportMilp(a) => export(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare_cmd(a),
    }
}

fn load_instance(path: &Path) -> anyhow::Result<crate::instance::ProblemInstance> {
    read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn generate(a: GenerateArgs) -> anyhow::Result<ExitCode> {
    let config = GeneratorConfig {
        num_devices: a.devices,
        num_coflows: a.coflows,
        flows_per_coflow: a.flows,
        sources_per_flow: a.sources,
        mean_bandwidth: a.bandwidth,
        mean_data: a.data,
        release_scale: a.release_scale,
        ..GeneratorConfig::default()
    }
    .with_seed(a.seed);
    let instance = generate_instance(&config).context("generating instance")?;
    write_instance(&a.out, &instance).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "instance: {} devices, {} links, {} coflows, {} flows -> {}",
        instance.network().num_devices(),
        instance.network().num_links(),
        instance.num_coflows(),
        instance.num_flows(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn solve_cmd(a: SolveArgs) -> anyhow::Result<ExitCode> {
    let scheduler: SchedulerId = a.scheduler.parse()?;
    let seed = match (scheduler.is_randomized(), a.seed) {
        (true, Some(s)) => s,
        (true, None) => bail!("{scheduler} is randomized and needs --seed"),
        (false, Some(_)) => bail!("--seed only applies to RANDOM, not {scheduler}"),
        (false, None) => 0,
    };
    let instance = load_instance(&a.instance)?;
    let schedule = solve(&instance, scheduler, seed);
    write_schedule(&a.out, &instance, &schedule).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{scheduler}: sum CCT {:.6} s", schedule.sum_cct());
    for (i, cct) in schedule.evaluated.cct.iter().enumerate() {
        println!("  coflow {i}: {cct:.6} s");
    }
    Ok(ExitCode::SUCCESS)
}

fn validate_cmd(a: ValidateArgs) -> anyhow::Result<ExitCode> {
    let instance = load_instance(&a.instance)?;
    let file = read_schedule_file(&a.schedule).with_context(|| format!("reading schedule {}", a.schedule.display()))?;
    let sources = file.selection(&instance).context("schedule does not fit the instance")?;
    let report = validate(&instance, &sources, &file.timing);
    if report.is_feasible() {
        println!("feasible: 0 violations, sum CCT {:.6} s", file.timing.sum_cct);
        Ok(ExitCode::SUCCESS)
    } else {
        let n = report.violations.len();
        println!("{n} violation{}", if n == 1 { "" } else { "s" });
        print!("{report}");
        Ok(ExitCode::from(1))
    }
}

fn export(a: ExportArgs) -> anyhow::Result<ExitCode> {
    let instance = load_instance(&a.instance)?;
    let model = export_milp(&instance);
    fs::write(&a.out, &model.text).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "model: {} X, {} Y, {} Ft variables, {} constraints, big-M {} -> {}",
        model.stats.x_vars,
        model.stats.y_vars,
        model.stats.ft_vars,
        model.stats.constraints,
        model.big_m,
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    if a.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let spec = match (&a.spec, &a.axis) {
        (Some(path), _) => read_sweep(path).with_context(|| format!("reading sweep spec {}", path.display()))?,
        (None, Some(axis)) => {
            let axis: SweepAxis = axis.parse()?;
            let base = GeneratorConfig::default().with_seed(a.seed.unwrap_or(0));
            SweepSpec::standard(axis, base, a.iterations.unwrap_or(30))
        }
        (None, None) => bail!("give --spec or --axis"),
    };
    let rows = run_sweep(&spec, SweepOptions { jobs: a.jobs })?;
    let out = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_results_csv(&rows, a.timing, BufWriter::new(out))?;
    if let Some(raw) = &a.raw {
        let f = File::create(raw).with_context(|| format!("creating {}", raw.display()))?;
        write_raw_csv(&spec, &rows, a.timing, BufWriter::new(f))?;
    }
    println!("{:>10} {:>12} {:>14} {:>10}", spec.axis.name(), "scheduler", "mean sum CCT", "ci95");
    for r in &rows {
        println!(
            "{:>10} {:>12} {:>14.4} {:>10.4}",
            r.value,
            r.scheduler.name(),
            r.mean_sum_cct,
            r.ci95
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn compare_cmd(a: CompareArgs) -> anyhow::Result<ExitCode> {
    let file = File::open(&a.results).with_context(|| format!("opening {}", a.results.display()))?;
    let rows = read_results_csv(file)?;
    let reductions = compare(&rows)?;
    let out = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_comparison_csv(&reductions, BufWriter::new(out))?;
    for r in &reductions {
        println!(
            "{}={}: SCASA vs {}: {:.2}% reduction",
            r.axis, r.value, r.scheduler, r.reduction_pct
        );
    }
    Ok(ExitCode::SUCCESS)
}
