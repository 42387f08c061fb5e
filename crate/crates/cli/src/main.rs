use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ascetic_core::model::{check_constraints, Allocation, DelayModel, Model};
use ascetic_core::sim::{
    self, instance_scenario, instance_topology, metrics_csv, plot_csv, run_on, summary_csv, training_csv, CellResult,
    ExperimentConfig,
};
use ascetic_core::topology::Topology;
use ascetic_core::workload::Scenario;

#[derive(Parser)]
#[command(name = "ascetic", version, about = "Edge-cloud service placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (`ascetic-cfg v1`); defaults apply otherwise.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set requests=80`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Overrides the config seed.
    #[arg(long, env = "ASCETIC_SEED")]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ExperimentConfig::from_text(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        for o in &self.overrides {
            let Some((k, v)) = o.split_once('=') else { bail!("--set expects KEY=VALUE, got {o:?}") };
            cfg.set(k.trim(), v.trim()).map_err(anyhow::Error::msg).with_context(|| format!("--set {o}"))?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a topology file.
    GenTopo {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short, default_value = "topology.txt")]
        out: PathBuf,
    },
    /// Generate a scenario file over a topology.
    GenScn {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Topology file; generated from the config and seed when omitted.
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long, short, default_value = "scenario.txt")]
        out: PathBuf,
        /// Also write the request table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Simulate every configured orchestrator on one instance.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Output directory.
        #[arg(long, short, env = "ASCETIC_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Sweep the configured axis over seeds and orchestrators.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short, env = "ASCETIC_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Re-check a stored allocation against every constraint.
    Validate {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long, default_value_t = DelayModel::Restricted)]
        delay_model: DelayModel,
        /// Write the JSON report here as well as printing a summary.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Aggregate a summary file into per-cell means.
    Plotdata {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long, short, default_value = "plot.csv")]
        out: PathBuf,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_topology(path: Option<&PathBuf>, cfg: &ExperimentConfig) -> Result<Topology> {
    Ok(match path {
        Some(p) => Topology::from_text(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => instance_topology(cfg, cfg.seed)?,
    })
}

fn load_scenario(path: Option<&PathBuf>, cfg: &ExperimentConfig, topo: &Topology) -> Result<Scenario> {
    Ok(match path {
        Some(p) => Scenario::from_text(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => instance_scenario(cfg, topo, cfg.seed)?,
    })
}

fn run(cfg: &ExperimentConfig, topology: Option<&PathBuf>, scenario: Option<&PathBuf>, out: &Path) -> Result<()> {
    let topo = load_topology(topology, cfg)?;
    let scn = load_scenario(scenario, cfg, &topo)?;
    write(&out.join("topology.txt"), &topo.to_text())?;
    write(&out.join("scenario.txt"), &scn.to_text())?;
    let mut cells = Vec::new();
    for &kind in &cfg.orchestrators {
        let res = run_on(&topo, &scn, cfg, kind, cfg.seed).with_context(|| format!("orchestrator {kind}"))?;
        write(&out.join(format!("allocation-{kind}.csv")), &res.allocation.to_csv(&topo))?;
        if !res.training.is_empty() {
            write(&out.join(format!("training-{kind}.csv")), &training_csv(&res.training))?;
        }
        let objective = Model::new(&topo, &scn).with_delay_model(cfg.delay_model).objective_cost(&res.allocation)?;
        let summary = res.metrics.summary();
        println!(
            "{kind}: cost {:.3}, mean delay {:.3} ms, unsupported {}",
            summary.total_cost, summary.mean_delay_ms, summary.unsupported
        );
        cells.push(CellResult {
            axis_value: None,
            orchestrator: kind,
            seed: cfg.seed,
            summary,
            metrics: res.metrics,
            objective,
            accuracy: res.accuracy,
            wall_clock: res.wall_clock,
        });
    }
    write(&out.join("metrics.csv"), &metrics_csv(&cells))?;
    write(&out.join("summary.csv"), &summary_csv(&cells))?;
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenTopo { cfg, out } => {
            let cfg = cfg.load()?;
            write(&out, &instance_topology(&cfg, cfg.seed)?.to_text())?;
        }
        Command::GenScn { cfg, topology, out, csv } => {
            let cfg = cfg.load()?;
            let topo = load_topology(topology.as_ref(), &cfg)?;
            let scn = instance_scenario(&cfg, &topo, cfg.seed)?;
            write(&out, &scn.to_text())?;
            if let Some(p) = csv {
                write(&p, &scn.requests_csv())?;
            }
        }
        Command::Run { cfg, topology, scenario, out } => {
            let cfg = cfg.load()?;
            run(&cfg, topology.as_ref(), scenario.as_ref(), &out)?;
        }
        Command::Sweep { cfg, out } => {
            let cfg = cfg.load()?;
            let cells = sim::sweep(&cfg)?;
            let summary = summary_csv(&cells);
            write(&out.join("metrics.csv"), &metrics_csv(&cells))?;
            write(&out.join("summary.csv"), &summary)?;
            write(&out.join("plot.csv"), &plot_csv(&summary)?)?;
            println!("{} runs written to {}", cells.len(), out.display());
        }
        Command::Validate { topology, scenario, allocation, delay_model, report } => {
            let topo = Topology::from_text(&read(&topology)?).context("parsing topology")?;
            let scn = Scenario::from_text(&read(&scenario)?).context("parsing scenario")?;
            let alloc = Allocation::from_csv(&read(&allocation)?).context("parsing allocation")?;
            let model = Model::new(&topo, &scn).with_delay_model(delay_model);
            let rep = check_constraints(&model, &alloc);
            if let Some(p) = report {
                write(&p, &rep.to_json())?;
            }
            print!("{rep}");
            if !rep.feasible {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Plotdata { summary, out } => {
            write(&out, &plot_csv(&read(&summary)?)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
