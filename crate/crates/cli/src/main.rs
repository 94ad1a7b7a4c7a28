use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use locomanip_core::config::{dotted, ScenarioConfig};
use locomanip_core::dynamics::InjectionMode;
use locomanip_core::error::Error;
use locomanip_core::exec::{run_sweep, write_sweep_csv, Execution, SweepAxis};
use locomanip_core::sim::run;

#[derive(Parser)]
#[command(
    name = "locomanip",
    version,
    about = "Adaptive loco-manipulation scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace and summary.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory for `<name>.csv` and `<name>.summary.txt`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a configuration and print it with all defaults resolved.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run a scenario over a grid of parameter values.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Swept parameter as `key=v1,v2,...`; repeat for a multi-axis grid.
        #[arg(long = "grid", required = true)]
        grid: Vec<String>,
        /// Output directory for `sweep.csv`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run grid points one after another.
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario name (overridden by `base` in a config file).
    scenario: Option<String>,
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Disable the adaptive manipulation force.
    #[arg(long)]
    baseline: bool,
    #[arg(long, value_enum)]
    injection: Option<Injection>,
    /// Extra override `key=value`, applied after the config file.
    #[arg(long = "set")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Injection {
    Paper,
    Scaled,
}

impl From<Injection> for InjectionMode {
    fn from(i: Injection) -> Self {
        match i {
            Injection::Paper => InjectionMode::PaperLiteral,
            Injection::Scaled => InjectionMode::MassScaledReaction,
        }
    }
}

/// Failure with its process exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver { .. } => 2,
            Error::Diverged { .. } => 3,
            Error::Io(_) | Error::Csv(_) => 4,
            _ => 1,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 4, error }
    }
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, Failure> {
        let mut table = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))
                    .map_err(|error| Failure { code: 1, error })?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        if let Some(name) = &self.scenario {
            table
                .entry("base")
                .or_insert_with(|| toml::Value::String(name.clone()));
        }
        let mut cfg = ScenarioConfig::from_table(table)?;
        for item in &self.set {
            let axis = SweepAxis::parse(item)?;
            let [value] = axis.values.as_slice() else {
                return Err(Error::invalid(axis.key, "--set takes a single value").into());
            };
            cfg = cfg.with_overrides(dotted(&axis.key, value.clone()))?;
        }
        if self.baseline {
            cfg.adapt.enabled = false;
        }
        if let Some(i) = self.injection {
            cfg.injection = i.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::from)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, out } => {
            let cfg = scenario.resolve()?;
            create_dir(&out)?;
            let trace_path = out.join(format!("{}.csv", cfg.name));
            let (trace, summary, failure) = match run(&cfg) {
                Ok(o) => (o.trace, Some(o.summary), None),
                Err(f) => (f.trace, None, Some(f.error)),
            };
            let file = fs::File::create(&trace_path)
                .with_context(|| format!("creating {}", trace_path.display()))?;
            trace.write_csv(std::io::BufWriter::new(file))?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            let line = summary.expect("summary present on success").to_line();
            let summary_path = out.join(format!("{}.summary.txt", cfg.name));
            fs::write(&summary_path, format!("{line}\n"))
                .with_context(|| format!("writing {}", summary_path.display()))?;
            println!("{line}");
            Ok(())
        }
        Command::Validate { scenario } => {
            let cfg = scenario.resolve()?;
            print!("{}", cfg.to_toml()?);
            Ok(())
        }
        Command::Sweep {
            scenario,
            grid,
            out,
            sequential,
        } => {
            let cfg = scenario.resolve()?;
            let axes = grid
                .iter()
                .map(|g| SweepAxis::parse(g))
                .collect::<Result<Vec<_>, _>>()?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let rows = run_sweep(&cfg, &axes, exec);
            create_dir(&out)?;
            let path = out.join("sweep.csv");
            let file =
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_sweep_csv(&axes, &rows, file)?;
            for row in &rows {
                let point: Vec<String> =
                    row.point.iter().map(|(k, v)| format!("{k}={v}")).collect();
                match &row.outcome {
                    Ok(s) => println!("{} {}", point.join(" "), s.to_line()),
                    Err(e) => println!("{} error={e:?}", point.join(" ")),
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
