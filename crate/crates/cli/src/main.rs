//! covid-abm command line: synth, forecast, run, validate, report, config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use covid_abm::io::{
    forecast_bytes, load_inputs, synth_inputs, write_bundle, write_file, write_reports, Inputs, ReportContext,
    SynthSpec,
};
use covid_abm::pipeline::{self, ForecastSet};
use covid_abm::sim::EventLog;
use covid_abm::validate::{validate_run, ValidationContext};
use covid_abm::RunConfig;

const LOG_FILE: &str = "event_log.csv";
const RUN_CONFIG: &str = "run_config.json";

#[derive(Parser)]
#[command(name = "covid-abm", version, about = "County-level COVID-19 agent-based simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run config (JSON). Defaults to <out>/run_config.json for validate and report.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u32>,
    /// Output directory.
    #[arg(long, env = "COVID_ABM_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic input bundle and its config from a spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "COVID_ABM_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Write forecast.csv only.
    Forecast(Common),
    /// Run a simulation; writes the event log and reports.
    Run(Common),
    /// Recompute Patterns 1-4 from a saved run; exit 1 on any breach.
    Validate(Common),
    /// Rewrite reports from a saved event log.
    Report(Common),
    /// Print configuration.
    Config {
        /// Print the full default config.
        #[arg(long, required = true)]
        dump_defaults: bool,
    },
}

enum Outcome {
    Ok,
    ValidationFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Synth { spec, seed, out } => {
            let mut spec = SynthSpec::load(&spec)?;
            if let Some(s) = seed {
                spec.config.seed = s;
            }
            let (inputs, cfg) = synth_inputs(&spec)?;
            write_bundle(&out, &inputs, &cfg)?;
            println!("wrote synthetic bundle to {}", out.display());
            Ok(Outcome::Ok)
        }
        Command::Forecast(c) => {
            let cfg = load_config(&c, false)?;
            let inputs = load_inputs(&cfg)?;
            let f = pipeline::forecast(&cfg, &inputs)?;
            write_file(&c.out.join("forecast.csv"), &forecast_bytes(&f.forecasts)?)?;
            println!("wrote {}", c.out.join("forecast.csv").display());
            Ok(Outcome::Ok)
        }
        Command::Run(c) => {
            let cfg = load_config(&c, false)?;
            let inputs = load_inputs(&cfg)?;
            let p = pipeline::run(&cfg, &inputs)?;
            let log = &p.sim.log;
            write_file(&c.out.join(LOG_FILE), &log.to_csv_bytes())?;
            write_file(&c.out.join("forecast.csv"), &forecast_bytes(&p.forecast.forecasts)?)?;
            write_file(&c.out.join(RUN_CONFIG), pinned(&cfg).to_json().as_bytes())?;
            let summary = write_reports(&c.out, log, &report_context(&cfg, &inputs))?;
            println!("events: {}  cases: {}  sha256: {}", summary.events, summary.cases, summary.event_log_sha256);
            Ok(Outcome::Ok)
        }
        Command::Validate(c) => {
            let cfg = load_config(&c, true)?;
            let inputs = load_inputs(&cfg)?;
            let log = read_log(&c.out)?;
            let forecast: ForecastSet = pipeline::forecast(&cfg, &inputs)?;
            let ctx = ValidationContext {
                counties: inputs.world.counties.iter().map(|c| c.id).collect(),
                horizon: cfg.horizon,
                severity: &cfg.cases.severity,
                visitation: &cfg.visitation,
                pbj_hours: inputs.pbj_hours(),
                forecast: Some(&forecast),
                tolerances: &cfg.validation,
            };
            let report = validate_run(&log, &ctx);
            print!("{report}");
            let json = serde_json::to_string_pretty(&report)? + "\n";
            write_file(&c.out.join("validation.json"), json.as_bytes())?;
            Ok(if report.passed() { Outcome::Ok } else { Outcome::ValidationFailed })
        }
        Command::Report(c) => {
            let cfg = load_config(&c, true)?;
            let inputs = load_inputs(&cfg)?;
            let log = read_log(&c.out)?;
            let summary = write_reports(&c.out, &log, &report_context(&cfg, &inputs))?;
            println!("reports written to {}  sha256: {}", c.out.display(), summary.event_log_sha256);
            Ok(Outcome::Ok)
        }
        Command::Config { dump_defaults } => {
            if dump_defaults {
                print!("{}", RunConfig::default().to_json());
            }
            Ok(Outcome::Ok)
        }
    }
}

/// Loads `--config`, or the saved run config when `saved_ok` and none is
/// given, then applies overrides.
fn load_config(c: &Common, saved_ok: bool) -> anyhow::Result<RunConfig> {
    let path = match (&c.config, saved_ok) {
        (Some(p), _) => p.clone(),
        (None, true) => c.out.join(RUN_CONFIG),
        (None, false) => bail!("--config is required"),
    };
    let mut cfg = RunConfig::load(&path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(h) = c.horizon {
        cfg.horizon = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The effective config with absolute input paths, so a saved run can be
/// revalidated from its output directory alone.
fn pinned(cfg: &RunConfig) -> RunConfig {
    let mut out = cfg.clone();
    let abs = |p: &Path| {
        let r = cfg.resolve(p);
        std::path::absolute(&r).unwrap_or(r)
    };
    out.inputs.world = abs(&cfg.inputs.world);
    out.inputs.cases = abs(&cfg.inputs.cases);
    out.inputs.vaccinations = abs(&cfg.inputs.vaccinations);
    out.inputs.pbj = abs(&cfg.inputs.pbj);
    out
}

fn read_log(out: &Path) -> anyhow::Result<EventLog> {
    let path = out.join(LOG_FILE);
    let file = std::fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    Ok(EventLog::read_csv(file)?)
}

fn report_context<'a>(cfg: &'a RunConfig, inputs: &Inputs) -> ReportContext<'a> {
    let pbj_hours: BTreeMap<u32, f64> = inputs.pbj_hours();
    ReportContext {
        seed: cfg.seed,
        start_date: cfg.start_date.to_string(),
        horizon: cfg.horizon,
        counties: inputs.world.counties.iter().map(|c| (c.id, c.name.clone())).collect(),
        severity: &cfg.cases.severity,
        visitation: &cfg.visitation,
        pbj_hours,
    }
}
