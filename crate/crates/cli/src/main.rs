mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use h2stack::config::{ConfigError, RunConfig, CONFIG_ENV};
use h2stack::degradation::AccrualMode;
use h2stack::economics::LcohMode;
use h2stack::electrolyzer::LowerBoundMode;
use h2stack::lifecycle::{FailureKind, LifecycleError};
use h2stack::sweep::SweepError;

/// Electrolyzer stack replacement: dispatch, lifecycle and LCOH sweeps.
#[derive(Debug, Parser)]
#[command(name = "h2stack", version, about)]
struct Cli {
    /// JSON run configuration. Falls back to $H2STACK_CONFIG, then to the
    /// built-in default.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the configuration and every referenced file, then exit.
    ValidateConfig {
        /// Print the effective configuration as JSON.
        #[arg(long)]
        print: bool,
    },
    /// Solve one dispatch horizon and write hourly flows and a cost summary.
    Dispatch {
        /// Operating year; earlier years are simulated to obtain its
        /// degradation state.
        #[arg(long, default_value_t = 1)]
        year: u32,
    },
    /// Simulate one stack life and write yearly results and LCOH.
    Lifecycle,
    /// Run the full parameter grid and write the sweep table.
    Sweep {
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        parallel: Option<usize>,
        /// Also write the per-figure CSV bundle.
        #[arg(long)]
        figures: bool,
    },
    /// Run the grid the figures need and write the per-figure CSV bundle.
    EmitFigures {
        #[arg(long)]
        parallel: Option<usize>,
    },
}

/// Command-line overrides of individual config fields.
#[derive(Debug, Args)]
struct Overrides {
    /// Simulated hours per year T.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Step length in hours.
    #[arg(long, global = true)]
    dt_hours: Option<f64>,
    /// Hours per accounting year used to annualise short horizons.
    #[arg(long, global = true)]
    year_hours: Option<f64>,
    /// Linearisation points J of the efficiency curve.
    #[arg(long, global = true)]
    j_points: Option<usize>,
    /// Scenario preset name.
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Shift/tilt coefficient α.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Degradation threshold R in %.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Give up when the threshold is not exceeded within this many years.
    #[arg(long, global = true)]
    max_years: Option<u32>,
    /// Electrolysis CAPEX in €/kW.
    #[arg(long, global = true)]
    capex: Option<f64>,
    /// Surplus sale price in €/kWh.
    #[arg(long, global = true)]
    sale_price: Option<f64>,
    /// Accept a sale price at or above the cheapest electricity price.
    #[arg(long, global = true)]
    allow_surplus_arbitrage: bool,
    /// Allow buying grid electricity.
    #[arg(long, global = true)]
    grid_purchase: bool,
    /// Disable hydrogen storage.
    #[arg(long, global = true)]
    no_storage: bool,
    /// Hydrogen output lower bound: relaxed, literal or off.
    #[arg(long, global = true, value_parser = parse_lower_bound)]
    lower_bound: Option<LowerBoundMode>,
    /// LCOH formula: averaged or literal_sum.
    #[arg(long, global = true, value_parser = parse_lcoh_mode)]
    lcoh_mode: Option<LcohMode>,
    /// Degradation accrual: all_hours or operating_hours_only.
    #[arg(long, global = true, value_parser = parse_accrual)]
    accrual: Option<AccrualMode>,
    /// Directory for output files.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_lower_bound(s: &str) -> Result<LowerBoundMode, String> {
    parse_enum(s)
}

fn parse_lcoh_mode(s: &str) -> Result<LcohMode, String> {
    parse_enum(s)
}

fn parse_accrual(s: &str) -> Result<AccrualMode, String> {
    parse_enum(s)
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        use h2stack::config::ScenarioRef;
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.horizon, self.horizon);
        set!(cfg.dt_hours, self.dt_hours);
        set!(cfg.year_hours, self.year_hours);
        set!(cfg.electrolyzer.j_points, self.j_points);
        if let Some(name) = &self.scenario {
            cfg.degradation.scenario = ScenarioRef::Preset(name.clone());
        }
        set!(cfg.degradation.alpha, self.alpha);
        set!(cfg.lifecycle.threshold_percent, self.threshold);
        set!(cfg.lifecycle.max_years, self.max_years);
        set!(cfg.economics.c_capex, self.capex);
        set!(cfg.grid.sale_price, self.sale_price);
        set!(cfg.flags.lower_bound, self.lower_bound);
        set!(cfg.flags.lcoh_mode, self.lcoh_mode);
        set!(cfg.flags.accrual, self.accrual);
        if let Some(dir) = &self.output_dir {
            // Taken relative to the working directory, not the config file.
            cfg.output_dir = std::path::absolute(dir).unwrap_or_else(|_| dir.clone());
        }
        if self.allow_surplus_arbitrage {
            cfg.flags.allow_surplus_arbitrage = true;
        }
        if self.grid_purchase {
            cfg.grid.purchase_enabled = true;
        }
        if self.no_storage {
            cfg.storage.enabled = false;
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|source| ConfigError::Io {
                path: p.clone(),
                source,
            })?;
            let mut cfg = RunConfig::from_json_str(&text)?;
            cfg.base_dir = p.parent().map(PathBuf::from).unwrap_or_default();
            cfg
        }
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Exit code and diagnostic class for an error chain.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ConfigError>() {
            return match e {
                ConfigError::SurplusArbitrage { .. } => (4, "UnboundedSurplusArbitrage"),
                ConfigError::FileNotFound { .. } => (2, "FileNotFound"),
                _ => (2, "ConfigError"),
            };
        }
        if let Some(e) = cause.downcast_ref::<LifecycleError>() {
            return match e.kind() {
                FailureKind::MaxYearsExceeded => (3, "MaxYearsExceeded"),
                FailureKind::Infeasible => (3, "Infeasible"),
                FailureKind::Unbounded => match e {
                    LifecycleError::Dispatch { source, .. }
                        if matches!(
                            source.as_ref(),
                            h2stack::dispatch::DispatchError::UnboundedSurplusArbitrage { .. }
                                | h2stack::dispatch::DispatchError::SurplusArbitrage { .. }
                        ) =>
                    {
                        (4, "UnboundedSurplusArbitrage")
                    }
                    _ => (4, "Unbounded"),
                },
                FailureKind::NumericFailure => (5, "NumericFailure"),
                FailureKind::InvalidInput => (2, "InvalidInput"),
            };
        }
        if let Some(e) = cause.downcast_ref::<SweepError>() {
            return match e {
                SweepError::ThreadPool(_) | SweepError::EmptyCurve => (5, "NumericFailure"),
                _ => (2, "ConfigError"),
            };
        }
    }
    (1, "Error")
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let ctx = commands::Context {
        quiet: cli.quiet,
        out_dir: cfg.output_path(),
    };
    match &cli.command {
        Command::ValidateConfig { print } => {
            if *print {
                println!("{}", cfg.to_json_pretty());
            }
            ctx.progress("configuration is valid");
            Ok(())
        }
        Command::Dispatch { year } => commands::dispatch(&ctx, &cfg, *year),
        Command::Lifecycle => commands::lifecycle(&ctx, &cfg),
        Command::Sweep { parallel, figures } => commands::sweep(&ctx, &cfg, *parallel, *figures),
        Command::EmitFigures { parallel } => commands::emit_figures(&ctx, &cfg, *parallel),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, class) = classify(&err);
            eprintln!("error [{class}]: {err:#}");
            ExitCode::from(code)
        }
    }
}
