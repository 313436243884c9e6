use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lwb_sim::metrics::Summary;
use lwb_sim::sim::{compare_modes, run_forwarders, run_simulation, write_trace, SimError};
use lwb_sim::time::{parse_duration, DefaultUnit};
use lwb_sim::{SimConfig, Topology};

#[derive(Parser)]
#[command(name = "lwb-sim", version, about = "Slot-stepped LWB / FS-LWB simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[command(flatten)]
        scenario: Scenario,
        /// Simulated time, e.g. `60`, `60s`, `1500ms`.
        #[arg(long)]
        duration: Option<String>,
        /// JSON-lines trace output.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Summary output (text followed by JSON).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the scenario with forwarder selection off and on and compare.
    Compare {
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Run FS-LWB to the end of stabilization and dump forwarder sets.
    Forwarders {
        #[command(flatten)]
        scenario: Scenario,
    },
}

#[derive(Args)]
struct Scenario {
    /// Edge list, one `a b` pair per line.
    #[arg(long)]
    topology: PathBuf,
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Usage(String),
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::World(e) => Failure::Validation(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

impl Scenario {
    fn load(&self) -> Result<(SimConfig, Topology), Failure> {
        let mut config = match &self.config {
            Some(path) => read(path)?.parse::<SimConfig>().map_err(|e| Failure::Validation(e.to_string()))?,
            None => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        let topology = Topology::parse_edge_list(&read(&self.topology)?, config.max_node_number)
            .map_err(|e| Failure::Validation(format!("{}: {e}", self.topology.display())))?;
        Ok((config, topology))
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { scenario, duration, trace, summary } => {
            let (mut config, topology) = scenario.load()?;
            if let Some(text) = duration {
                config.duration = parse_duration(&text, DefaultUnit::Seconds)
                    .ok_or_else(|| Failure::Usage(format!("invalid --duration {text:?}")))?;
                config.validate().map_err(|e| Failure::Validation(e.to_string()))?;
            }
            let run = run_simulation(&config, &topology)?;
            let report: Summary = run.stats.summary();
            if let Some(path) = trace {
                let mut buf = Vec::new();
                write_trace(&mut buf, &run.rounds).map_err(|e| Failure::Runtime(e.to_string()))?;
                write(&path, &buf)?;
            }
            match summary {
                Some(path) => write(&path, report.to_document().as_bytes())?,
                None => print!("{}", report.to_text()),
            }
        }
        Command::Compare { scenario } => {
            let (config, topology) = scenario.load()?;
            let (_, _, report) = compare_modes(&config, &topology)?;
            print!("{}", report.to_document());
        }
        Command::Forwarders { scenario } => {
            let (config, topology) = scenario.load()?;
            let (_, sets) = run_forwarders(&config, &topology)?;
            for record in sets {
                println!("{}", serde_json::to_string(&record).expect("record serializes"));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Usage(msg) | Failure::Validation(msg) | Failure::Runtime(msg)) = &failure;
            eprintln!("lwb-sim: {msg}");
            ExitCode::from(failure.code())
        }
    }
}
