use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use xtrsim::experiment::{
    emit_sweep, run_attack, run_sweep, write_attack_report, write_file, ExperimentConfig, ExperimentError,
    OutputFormat, Scenario,
};
use xtrsim::workload::{gen_dos_stream, read_trace, write_trace, PopulationProfile};
use xtrsim::xtr::{PacketEvent, XtrMetrics, XtrState};

#[derive(Parser)]
#[command(name = "xtrsim", version, about = "Map-cache and Map-Request rate limiting simulator")]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// First seed; seeds run from here upwards.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of seeds.
    #[arg(long, global = true)]
    seeds: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// False-positive sweep over growing sketch sizes.
    Sweep {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Paired defense-off / defense-on attack simulations.
    Attack {
        #[arg(value_enum)]
        scenario: ScenarioArg,
        /// Also write the first seed's packet trace here.
        #[arg(long)]
        export_trace: Option<PathBuf>,
    },
    /// Runs a recorded packet trace through the pipeline.
    Replay {
        trace: PathBuf,
        /// Also write the map-cache event trace here.
        #[arg(long)]
        cache_trace: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Plot,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Dos,
    Overflow,
    Scan,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Dos => Scenario::Dos,
            ScenarioArg::Overflow => Scenario::Overflow,
            ScenarioArg::Scan => Scenario::Scan,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if cli.seeds == Some(0) {
        return Err(ExperimentError::InvalidConfig("--seeds must be at least 1".into()));
    }
    cfg.override_seeds(cli.seed, cli.seeds);
    Ok(cfg)
}

fn scenario_workload(cfg: &ExperimentConfig, scenario: Scenario, seed: u64) -> Result<Vec<PacketEvent>, ExperimentError> {
    let flood = match scenario {
        Scenario::Dos => &cfg.attack.dos,
        Scenario::Overflow => &cfg.attack.overflow,
        Scenario::Scan => return cfg.attack.scan.workload(seed),
    };
    let profile = PopulationProfile { seed, ..flood.population.clone() };
    Ok(gen_dos_stream(&profile, flood.strategy, &flood.shape)?)
}

fn write_events(path: &Path, events: &[PacketEvent]) -> Result<(), ExperimentError> {
    let file = File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_trace(events, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| ExperimentError::io(path, e))
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, ExperimentError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Sweep { format } => {
            let rows = run_sweep(&cfg.sweep)?;
            let format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Plot => OutputFormat::PlotScript,
            };
            emit_sweep(&rows, format, &cli.out)
        }
        Command::Attack { scenario, export_trace } => {
            let scenario = Scenario::from(*scenario);
            let report = run_attack(scenario, &cfg.attack)?;
            let mut written = write_attack_report(&report, &cli.out)?;
            for s in &report.summaries {
                println!(
                    "{} seed {}: admission {:.4} -> {:.4}, overflow {} -> {}, legit hit rate {:.4} -> {:.4}",
                    s.scenario,
                    s.seed,
                    s.victim_admission_off,
                    s.victim_admission_on,
                    s.overflow_events_off,
                    s.overflow_events_on,
                    s.legit_hit_rate_off,
                    s.legit_hit_rate_on
                );
            }
            if let Some(path) = export_trace {
                let seed = report.summaries[0].seed;
                write_events(path, &scenario_workload(&cfg, scenario, seed)?)?;
                written.push(path.clone());
            }
            Ok(written)
        }
        Command::Replay { trace, cache_trace } => {
            let file = File::open(trace).map_err(|e| ExperimentError::io(trace, e))?;
            let events = read_trace(BufReader::new(file))?;
            let mut xtr = XtrState::new(cfg.replay.clone())?;
            if cache_trace.is_some() {
                xtr.enable_trace();
            }
            let metrics = xtr.run(events)?;
            fs::create_dir_all(&cli.out).map_err(|e| ExperimentError::io(&cli.out, e))?;
            let path = cli.out.join("replay.csv");
            let csv = format!(
                "config_hash,seed,{}\n{},{},{}\n",
                XtrMetrics::csv_header(),
                cfg.replay.config_hash(),
                cfg.replay.seed,
                metrics.csv_fields()
            );
            write_file(&path, &csv)?;
            let mut written = vec![path];
            if let Some(p) = cache_trace {
                let lines: String = xtr.take_trace().iter().map(|e| format!("{e}\n")).collect();
                write_file(p, &lines)?;
                written.push(p.clone());
            }
            Ok(written)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
