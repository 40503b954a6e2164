//! `tsn-sim`: run, sweep and report on TSN switched-Ethernet scenarios.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tsn_sim::config::ConfigError;
use tsn_sim::presets;
use tsn_sim::report;
use tsn_sim::scenario::{
    run_scenario_with, sweep_point, RunError, RunOutput, SummaryRow, SweepParameter,
    SweepRunError,
};
use tsn_sim::ScenarioConfig;

#[derive(Parser)]
#[command(
    name = "tsn-sim",
    version,
    about = "Deterministic simulator for TSN-shaped switched Ethernet",
    after_help = "Exit codes: 0 success, 2 validation failure, 1 runtime error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against the schema and model constraints.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one scenario and write records, summary and drop counters.
    Run(RunArgs),
    /// Re-run a scenario while varying one parameter over a range.
    Sweep(SweepArgs),
    /// Solve switch timing constants from target path constants.
    Calibrate(CalibrateArgs),
    /// Run the whole preset battery and render the result tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct ScenarioSource {
    /// Scenario file to load.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (see `report` for the full battery).
    #[arg(long)]
    preset: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the run duration, in seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write per-flow series CSVs and a gnuplot script.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Parameter to vary: flow-phase:<flow>, jitter, load-rate:<flow> or
    /// payload:<flow>.
    #[arg(long)]
    param: String,
    /// First swept value (ns, bps or bytes depending on the parameter).
    #[arg(long)]
    start: u64,
    /// Last swept value, inclusive.
    #[arg(long)]
    end: u64,
    /// Step between values.
    #[arg(long)]
    step: u64,
    /// Worker threads for independent sweep points.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Link capacity in bits per second.
    #[arg(long)]
    capacity_bps: u64,
    /// Target one-bridge path constant, microseconds.
    #[arg(long)]
    k1_us: f64,
    /// Target two-bridge path constant, microseconds.
    #[arg(long)]
    k2_us: f64,
    /// Cable length per link, meters.
    #[arg(long, default_value_t = 10.0)]
    link_length_m: f64,
    /// Signal propagation speed, meters per second.
    #[arg(long, default_value_t = 2.0e8)]
    propagation_speed_mps: f64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override every preset's duration, in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Override every preset's seed.
    #[arg(long)]
    seed: Option<u64>,
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(io) => CliError::Runtime(io.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => c.into(),
        }
    }
}

impl From<SweepRunError> for CliError {
    fn from(e: SweepRunError) -> Self {
        match e {
            SweepRunError::Sweep(s) => CliError::Validation(s.to_string()),
            SweepRunError::Run(r) => r.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run(args) => run(args),
        Command::Sweep(args) => do_sweep(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Report(args) => batch_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_source(source: &ScenarioSource) -> Result<ScenarioConfig, CliError> {
    let mut config = match (&source.config, &source.preset) {
        (Some(path), None) => tsn_sim::load_config(path)?,
        (None, Some(name)) => presets::preset(name).ok_or_else(|| {
            CliError::Validation(format!(
                "unknown preset {name:?}; available: {}",
                presets::preset_names().join(", ")
            ))
        })?,
        _ => {
            return Err(CliError::Validation(
                "exactly one of --config or --preset is required".into(),
            ))
        }
    };
    if let Some(seed) = source.seed {
        config.seed = seed;
    }
    if let Some(secs) = source.duration {
        if !(secs > 0.0) {
            return Err(CliError::Validation("duration must be positive".into()));
        }
        config.duration_ns = (secs * 1e9).round() as u64;
    }
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(ConfigError::Invalid(violations).into());
    }
    Ok(config)
}

fn validate(path: &Path) -> Result<(), CliError> {
    let config = tsn_sim::load_config(path)?;
    println!(
        "{}: valid ({} nodes, {} links, {} flows)",
        config.name,
        config.nodes.len(),
        config.links.len(),
        config.flows.len()
    );
    Ok(())
}

fn write_run_output(
    dir: &Path,
    config: &ScenarioConfig,
    out: &RunOutput,
    plots: bool,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("records.csv"), report::records_csv(out))?;
    std::fs::write(dir.join("summary.csv"), report::summary_csv(&out.rows))?;
    std::fs::write(
        dir.join("summary.md"),
        report::summary_markdown(&config.name, &out.rows),
    )?;
    std::fs::write(dir.join("drops.csv"), report::drops_csv(out))?;
    if plots {
        for flow in out.flows.iter().filter(|f| f.measure) {
            let series = report::series_csv(out, &flow.name).expect("flow exists");
            std::fs::write(dir.join(format!("series_{}.csv", flow.name)), series)?;
        }
        std::fs::write(dir.join("plot.gp"), report::gnuplot_script(out))?;
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let config = load_source(&args.source)?;
    let out = run_scenario_with(&config, false)?;
    write_run_output(&args.out, &config, &out, args.plots)?;
    print!("{}", report::summary_markdown(&config.name, &out.rows));
    if !out.drops.is_empty() {
        println!("\ndropped frames:");
        for d in &out.drops {
            println!("  {} -> {} queue {}: {}", d.node, d.toward, d.queue, d.drops);
        }
    }
    println!("\nwrote {}", args.out.display());
    Ok(())
}

fn do_sweep(args: SweepArgs) -> Result<(), CliError> {
    let config = load_source(&args.source)?;
    let param: SweepParameter = args
        .param
        .parse()
        .map_err(|e: tsn_sim::scenario::SweepError| CliError::Validation(e.to_string()))?;
    if args.step == 0 {
        return Err(CliError::Validation("step must be positive".into()));
    }
    let values: Vec<u64> = (args.start..=args.end).step_by(args.step as usize).collect();
    if values.is_empty() {
        return Err(CliError::Validation("sweep range is empty".into()));
    }

    // Points are independent simulations; order of completion does not
    // matter because results are keyed by value.
    let points = if args.parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.parallel)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        use rayon::prelude::*;
        pool.install(|| {
            values
                .par_iter()
                .map(|&v| sweep_point(&config, &param, v))
                .collect::<Result<Vec<_>, _>>()
        })?
    } else {
        values
            .iter()
            .map(|&v| sweep_point(&config, &param, v))
            .collect::<Result<Vec<_>, _>>()?
    };

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("sweep.csv"), report::sweep_csv(&points))?;

    // Observed extremum per measured flow.
    let flows: Vec<String> = points
        .first()
        .map(|p| p.rows.iter().map(|r| r.flow.clone()).collect())
        .unwrap_or_default();
    for flow in flows {
        let best = points
            .iter()
            .filter_map(|p| {
                p.rows
                    .iter()
                    .find(|r| r.flow == flow)
                    .map(|r| (p.value, r.stats.max_ns))
            })
            .max_by_key(|&(_, max)| max);
        if let Some((value, max)) = best {
            println!(
                "{flow}: max delay {} us at {}={value}",
                report::us(max as f64),
                args.param
            );
        }
    }
    println!("wrote {}", args.out.join("sweep.csv").display());
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let prop = tsn_sim::propagation_delay(args.link_length_m, args.propagation_speed_mps)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let k1 = (args.k1_us * 1_000.0).round() as u64;
    let k2 = (args.k2_us * 1_000.0).round() as u64;
    let timing = presets::calibrate(k1, k2, prop.as_ns())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&timing).expect("serializes"));
    println!(
        "// per-link propagation {} ns; k1 = {} ns, k2 = {} ns at {} bps",
        prop.as_ns(),
        k1,
        k2,
        args.capacity_bps
    );
    Ok(())
}

fn batch_report(args: ReportArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&args.out)?;
    let mut sections = Vec::new();
    for rate_suffix in ["100m", "1g"] {
        let title = if rate_suffix == "100m" {
            "Link capacity 100 Mbps"
        } else {
            "Link capacity 1 Gbps"
        };
        let mut rows: Vec<SummaryRow> = Vec::new();
        for exp in 1..=3 {
            for variant in ["_noload", ""] {
                let name = format!("exp{exp}_{rate_suffix}{variant}");
                let mut config = presets::preset(&name).expect("preset exists");
                if let Some(secs) = args.duration {
                    config.duration_ns = (secs * 1e9).round() as u64;
                }
                if let Some(seed) = args.seed {
                    config.seed = seed;
                }
                let out = run_scenario_with(&config, false)?;
                write_run_output(&args.out.join(&name), &config, &out, false)?;
                rows.extend(out.rows);
            }
        }
        sections.push(report::summary_markdown(title, &rows));
    }
    let full = sections.join("\n");
    std::fs::write(args.out.join("report.md"), &full)?;
    print!("{full}");
    println!("wrote {}", args.out.join("report.md").display());
    Ok(())
}
