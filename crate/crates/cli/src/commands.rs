use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use h2stack::config::{ConfigError, RunConfig, ScenarioRef};
use h2stack::degradation::DegradationState;
use h2stack::figures::{figure_sweep_config, write_figures, FigureBase};
use h2stack::lifecycle::{dispatch_for_state, simulate_lifecycle, year_step};
use h2stack::output::fmt_g6;
use h2stack::sweep::{failure_summary, sweep_grid, SweepConfig, SweepTable};
use h2stack::timeseries::Source;

pub struct Context {
    pub quiet: bool,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        let path = self.out_dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    fn wrote(&self, name: &str) {
        self.progress(format!("wrote {}", self.out_dir.join(name).display()));
    }
}

pub fn dispatch(ctx: &Context, cfg: &RunConfig, year: u32) -> Result<()> {
    if year == 0 {
        return Err(ConfigError::Invalid {
            path: "--year".into(),
            message: "years are counted from 1".into(),
        }
        .into());
    }
    let setup = cfg.setup()?;
    let scenario = cfg.scenario()?;
    let mut state = DegradationState::fresh(setup.electrolyzer.j_points);
    for _ in 1..year {
        let (res, next) = year_step(&setup, &scenario, &state)?;
        ctx.progress(format!("year {}: R {:.4}% -> {:.4}%", res.year, res.r_start_percent, res.r_end_percent));
        state = next;
    }
    let sol = dispatch_for_state(&setup, &state)?;
    sol.write_csv(ctx.file("dispatch_hourly.csv")?)?;
    ctx.wrote("dispatch_hourly.csv");

    let booking = |s: Source| {
        sol.bookings
            .iter()
            .find(|b| b.source == s)
            .map_or(0.0, |b| b.capacity_kw)
    };
    let c = &sol.costs;
    let mut w = csv::Writer::from_writer(ctx.file("dispatch_summary.csv")?);
    w.write_record([
        "year",
        "horizon_hours",
        "eps_nom",
        "c_ppa",
        "c_grid",
        "c_storage",
        "r_surplus",
        "objective",
        "storage_capacity_kg",
        "booking_onshore_kw",
        "booking_offshore_kw",
        "booking_solar_kw",
    ])?;
    let eps_nom = *state
        .degraded_points(&setup.electrolyzer.bol_points())
        .last()
        .expect("at least two grid points");
    w.write_record([
        year.to_string(),
        fmt_g6(setup.horizon as f64 * setup.dt_hours),
        fmt_g6(eps_nom),
        fmt_g6(c.c_ppa),
        fmt_g6(c.c_grid),
        fmt_g6(c.c_storage),
        fmt_g6(c.r_surplus),
        fmt_g6(c.net()),
        fmt_g6(sol.storage_capacity_kg),
        fmt_g6(booking(Source::Onshore)),
        fmt_g6(booking(Source::Offshore)),
        fmt_g6(booking(Source::Solar)),
    ])?;
    w.flush()?;
    ctx.wrote("dispatch_summary.csv");
    ctx.progress(format!(
        "dispatch year {year}: objective {} € over {} h ({} simplex iterations)",
        fmt_g6(c.net()),
        setup.horizon,
        sol.diagnostics.iterations
    ));
    Ok(())
}

pub fn lifecycle(ctx: &Context, cfg: &RunConfig) -> Result<()> {
    let setup = cfg.setup()?;
    let scenario = cfg.scenario()?;
    ctx.progress(format!(
        "lifecycle: scenario {} at R = {}%, up to {} years",
        cfg.scenario_name(),
        cfg.lifecycle.threshold_percent,
        cfg.lifecycle.max_years
    ));
    let res = simulate_lifecycle(&setup, &scenario, cfg.lifecycle.threshold_percent, cfg.lifecycle.max_years)?;
    res.write_csv(ctx.file("lifecycle.csv")?)?;
    ctx.wrote("lifecycle.csv");
    res.write_summary_csv(ctx.file("lifecycle_summary.csv")?)?;
    ctx.wrote("lifecycle_summary.csv");
    res.lcoh.write_csv(ctx.file("lcoh_breakdown.csv")?)?;
    ctx.wrote("lcoh_breakdown.csv");
    ctx.progress(format!("end of life after {} years, LCOH {} €/kg", res.eol_years, fmt_g6(res.lcoh.lcoh_av)));
    Ok(())
}

fn figure_base(cfg: &RunConfig) -> FigureBase {
    let scenario = match &cfg.degradation.scenario {
        ScenarioRef::Preset(name) => name.clone(),
        ScenarioRef::Custom { .. } => "base_const".into(),
    };
    FigureBase {
        scenario,
        alpha: cfg.degradation.alpha,
        capex: cfg.economics.c_capex,
    }
}

fn run_grid(ctx: &Context, cfg: &RunConfig, grid: &SweepConfig) -> Result<SweepTable> {
    let setup = cfg.setup()?;
    ctx.progress(format!(
        "sweep: {} scenarios x {} alphas x {} CAPEX x {} thresholds",
        grid.scenarios.len(),
        grid.alphas.len(),
        grid.capex.len(),
        grid.thresholds.len()
    ));
    let table = sweep_grid(&setup, grid, cfg.lifecycle.max_years)?;
    for (kind, n) in failure_summary(&table) {
        ctx.progress(format!("{n} cells failed: {}", kind.as_str()));
    }
    Ok(table)
}

fn write_optima(ctx: &Context, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(ctx.file("optima.csv")?);
    w.write_record(["scenario", "alpha", "capex_eur_per_kw", "R_opt_percent", "eol_opt_years", "lcoh_opt_eur_per_kg"])?;
    for c in &table.curves {
        let o = c.optimum;
        w.write_record([
            c.scenario.clone(),
            fmt_g6(c.alpha),
            fmt_g6(c.capex),
            o.map(|o| fmt_g6(o.threshold_percent)).unwrap_or_default(),
            o.map(|o| o.eol_years.to_string()).unwrap_or_default(),
            o.map(|o| fmt_g6(o.lcoh_av)).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    ctx.wrote("optima.csv");
    Ok(())
}

fn emit(ctx: &Context, table: &SweepTable, grid: &SweepConfig, base: &FigureBase) -> Result<()> {
    let dir: &Path = &ctx.out_dir.join("figures");
    for path in write_figures(table, grid, base, dir)? {
        ctx.progress(format!("wrote {}", path.display()));
    }
    Ok(())
}

pub fn sweep(ctx: &Context, cfg: &RunConfig, parallel: Option<usize>, figures: bool) -> Result<()> {
    let mut grid = cfg.sweep.clone();
    if let Some(p) = parallel {
        grid.parallelism = p;
    }
    let table = if figures {
        // One run over the widened grid feeds both outputs; the sweep table
        // keeps only the configured cells, in their configured order.
        let base = figure_base(cfg);
        let wide = figure_sweep_config(&grid, &base);
        let full = run_grid(ctx, cfg, &wide)?;
        emit(ctx, &full, &wide, &base)?;
        SweepTable {
            curves: full
                .curves
                .into_iter()
                .filter(|c| {
                    grid.scenarios.contains(&c.scenario) && grid.alphas.contains(&c.alpha) && grid.capex.contains(&c.capex)
                })
                .collect(),
        }
    } else {
        run_grid(ctx, cfg, &grid)?
    };
    table.write_csv(ctx.file("sweep.csv")?)?;
    ctx.wrote("sweep.csv");
    write_optima(ctx, &table)
}

pub fn emit_figures(ctx: &Context, cfg: &RunConfig, parallel: Option<usize>) -> Result<()> {
    let mut grid = cfg.sweep.clone();
    if let Some(p) = parallel {
        grid.parallelism = p;
    }
    let base = figure_base(cfg);
    let wide = figure_sweep_config(&grid, &base);
    let table = run_grid(ctx, cfg, &wide)?;
    emit(ctx, &table, &wide, &base)
}
