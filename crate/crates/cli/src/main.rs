use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ecoheat_core::config::Config;
use ecoheat_core::energy::{replay_log, write_log};
use ecoheat_core::harness::{
    calibrate_beta, compare, report_json, run_scenario, sweep_ambient, write_comparison_csv,
    ComparisonRow, ComparisonTable, HarnessError,
};
use ecoheat_core::hvac::{fit_alpha, read_samples};
use ecoheat_core::traffic::{plan_eco_trajectory, plan_normal_trajectory, TrafficError};
use ecoheat_core::{Heating, Setup};

const DEFAULT_CONFIG: &str = "configs/default.toml";

#[derive(Parser)]
#[command(name = "ecoheat", version, about = "Eco-driving and eco-heating study runner for a hybrid car")]
struct Cli {
    /// Study file [default: configs/default.toml].
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory; `-` writes the data to stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Override the seed of every scenario that is run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan the commanded speed profile over the corridor.
    Plan {
        /// Driving strategy to plan for
        #[arg(long, value_enum, default_value_t = DrivingArg::Eco)]
        driving: DrivingArg,
    },
    /// Run one configured scenario closed loop.
    Simulate {
        /// Scenario name from the study file
        #[arg(long)]
        scenario: String,
    },
    /// Compare constant and eco heating, or two named scenarios.
    Compare {
        /// Sweep the configured ambient temperatures and seeds.
        #[arg(long, conflicts_with_all = ["baseline", "candidate"])]
        sweep: bool,
        /// Scenario the candidate is measured against
        #[arg(long, requires = "candidate")]
        baseline: Option<String>,
        /// Scenario whose saving is reported
        #[arg(long, requires = "baseline")]
        candidate: Option<String>,
    },
    /// Scale the beta schedule so eco heating delivers the same mean heat.
    CalibrateBeta,
    /// Recompute the energy report from a logged run.
    Replay {
        /// Run log written by `simulate`
        #[arg(long)]
        log: PathBuf,
    },
    /// Fit the vent air temperature model to measured samples.
    FitAlpha {
        /// CSV of measured vent temperature samples
        #[arg(long)]
        samples: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DrivingArg {
    Eco,
    Normal,
}

enum Out {
    Stdout,
    Path(PathBuf),
}

impl Out {
    fn parse(arg: Option<&str>, default: impl FnOnce() -> PathBuf) -> Out {
        match arg {
            Some("-") => Out::Stdout,
            Some(p) => Out::Path(PathBuf::from(p)),
            None => Out::Path(default()),
        }
    }

    fn write_with(&self, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        match self {
            Out::Stdout => {
                let mut lock = io::stdout().lock();
                f(&mut lock)?;
                lock.flush()?;
            }
            Out::Path(p) => {
                let mut w = BufWriter::new(create(p)?);
                f(&mut w)?;
                w.flush().with_context(|| format!("writing {}", p.display()))?;
                eprintln!("wrote {}", p.display());
            }
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn write_json(w: &mut dyn Write, value: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn load(cli: &Cli) -> Result<Config> {
    let path = cli.config.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG));
    Ok(Config::load(&path)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe))
}

/// 2 when the study itself is impossible, 1 for bad input or I/O.
fn exit_code(e: &anyhow::Error) -> u8 {
    let infeasible = e.chain().any(|c| {
        c.downcast_ref::<HarnessError>().is_some_and(HarnessError::is_infeasibility)
            || matches!(c.downcast_ref::<TrafficError>(), Some(TrafficError::InfeasibleCorridor { .. }))
    });
    if infeasible {
        2
    } else {
        1
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Plan { driving } => plan(cli, *driving),
        Command::Simulate { scenario } => simulate(cli, scenario),
        Command::Compare {
            sweep,
            baseline,
            candidate,
        } => {
            if *sweep {
                compare_sweep(cli)
            } else {
                compare_pairs(cli, baseline.as_deref(), candidate.as_deref())
            }
        }
        Command::CalibrateBeta => calibrate(cli),
        Command::Replay { log } => replay(cli, log),
        Command::FitAlpha { samples } => fit(cli, samples),
    }
}

fn plan(cli: &Cli, driving: DrivingArg) -> Result<()> {
    let cfg = load(cli)?;
    let setup = &cfg.setup;
    let (name, profile) = match driving {
        DrivingArg::Eco => ("eco", plan_eco_trajectory(&setup.corridor, 0.0, 0.0, &setup.limits)?),
        DrivingArg::Normal => ("normal", plan_normal_trajectory(&setup.corridor, 0.0, 0.0, &setup.limits)?),
    };
    eprintln!(
        "{name} plan: {:.0} s, {:.0} m, {} intermediate stop(s)",
        profile.duration(),
        profile.distance(),
        profile.intermediate_stops().len()
    );
    let out = Out::parse(cli.out.as_deref(), || cfg.output.dir.join(format!("plan_{name}.csv")));
    out.write_with(|w| Ok(profile.write_csv(w)?))
}

fn simulate(cli: &Cli, name: &str) -> Result<()> {
    let cfg = load(cli)?;
    let mut scenario = cfg.scenario(name)?.clone();
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    let result = run_scenario(&scenario, &cfg.setup)?;
    let report = report_json(&result, &cfg.setup);
    let r = &result.report;
    eprintln!(
        "{}: E_eq {:.4} MJ, fuel {:.4} MJ, E_DAHE {:.4} MJ, idle {:.0} s, dSOC {:+.4}",
        scenario.name,
        r.e_eq / 1e6,
        r.fuel_energy / 1e6,
        r.e_dahe / 1e6,
        r.engine_idle_seconds,
        -r.delta_soc
    );
    match Out::parse(cli.out.as_deref(), || cfg.output.dir.join(&scenario.name)) {
        Out::Stdout => Out::Stdout.write_with(|w| write_json(w, &report)),
        Out::Path(dir) => {
            Out::Path(dir.join("series.csv")).write_with(|w| Ok(result.write_series_csv(w)?))?;
            Out::Path(dir.join("report.json")).write_with(|w| write_json(w, &report))?;
            Out::Path(dir.join("log.csv")).write_with(|w| Ok(write_log(&result.log, w)?))
        }
    }
}

fn print_groups(table: &ComparisonTable) {
    for g in &table.groups {
        eprintln!(
            "{:<10} runs {:>2}  saving {:>6.2} %  E_DAHE change {:>+6.2} %",
            g.group.label(),
            g.runs,
            g.mean_saving_pct,
            g.mean_dahe_change_pct
        );
    }
}

fn compare_sweep(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let mut base = cfg.sweep_base();
    if let Some(seed) = cli.seed {
        base.seed = seed;
    }
    let table = sweep_ambient(&base, &cfg.sweep.temps_c, cfg.sweep.repeats, &cfg.setup, cli.jobs)?;
    print_groups(&table);
    let out = Out::parse(cli.out.as_deref(), || cfg.output.dir.join("sweep.csv"));
    out.write_with(|w| Ok(write_comparison_csv(&table.rows, w)?))
}

fn compare_pairs(cli: &Cli, baseline: Option<&str>, candidate: Option<&str>) -> Result<()> {
    let cfg = load(cli)?;
    let seeded = |s: &ecoheat_core::Scenario| {
        let mut s = s.clone();
        if let Some(seed) = cli.seed {
            s.seed = seed;
        }
        s
    };
    let pairs = match (baseline, candidate) {
        (Some(a), Some(b)) => vec![(seeded(cfg.scenario(a)?), seeded(cfg.scenario(b)?))],
        _ => cfg
            .scenarios
            .iter()
            .filter(|s| s.heating == Heating::Constant)
            .map(|s| {
                let mut eco = seeded(s).with_heating(Heating::Eco);
                eco.name = format!("{} (eco heating)", s.name);
                (seeded(s), eco)
            })
            .collect(),
    };
    if pairs.is_empty() {
        bail!("no constant-heating scenarios to compare in {}", cfg.path.display());
    }
    let mut rows: Vec<ComparisonRow> = Vec::with_capacity(pairs.len());
    for (a, b) in &pairs {
        let ra = run_scenario(a, &cfg.setup)?;
        let rb = run_scenario(b, &cfg.setup)?;
        let row = compare(&ra, &rb)?;
        eprintln!(
            "{} vs {}: saving {:.2} %, E_DAHE change {:+.2} %, idle {:.0} -> {:.0} s",
            a.name,
            b.name,
            row.saving_pct,
            row.dahe_change_pct(),
            row.idle_base,
            row.idle_eco
        );
        rows.push(row);
    }
    print_groups(&ComparisonTable::from_rows(rows.clone()));
    let out = Out::parse(cli.out.as_deref(), || cfg.output.dir.join("comparison.csv"));
    out.write_with(|w| Ok(write_comparison_csv(&rows, w)?))
}

fn calibrate(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let mut scenarios = cfg.calibration_scenarios();
    if let Some(seed) = cli.seed {
        scenarios.iter_mut().for_each(|s| s.seed = seed);
    }
    let cal = calibrate_beta(&cfg.setup.controller.beta, &scenarios, &cfg.setup, cli.jobs)?;
    eprintln!(
        "calibrated scale {:.6}, heating energy gap {:+.4} % over {} scenario(s) ({} evaluations)",
        cal.scale,
        cal.gap * 100.0,
        scenarios.len(),
        cal.evaluations
    );
    let out = Out::parse(cli.out.as_deref(), || cfg.output.dir.join("beta_calibration.json"));
    out.write_with(|w| write_json(w, &cal))
}

fn replay(cli: &Cli, log: &Path) -> Result<()> {
    let setup = match &cli.config {
        Some(_) => load(cli)?.setup,
        None => Setup::default(),
    };
    let report = replay_log(log, &setup.powertrain, setup.controller.c_p)
        .with_context(|| format!("replaying {}", log.display()))?;
    eprintln!(
        "E_eq {:.4} MJ, fuel {:.4} MJ, E_DAHE {:.4} MJ, idle {:.0} s",
        report.e_eq / 1e6,
        report.fuel_energy / 1e6,
        report.e_dahe / 1e6,
        report.engine_idle_seconds
    );
    let doc = serde_json::json!({
        "log": log.display().to_string(),
        "report": report,
        "metadata": {
            "E_batt_J": setup.powertrain.e_batt,
            "eta_sys": setup.powertrain.eta_sys,
            "LHV_J_per_kg": setup.powertrain.lhv,
            "AFR_stoich": setup.powertrain.afr_stoich,
            "c_p": setup.controller.c_p,
        }
    });
    let out = Out::parse(cli.out.as_deref(), || log.with_extension("report.json"));
    out.write_with(|w| write_json(w, &doc))
}

fn fit(cli: &Cli, samples: &Path) -> Result<()> {
    let file = File::open(samples).with_context(|| format!("opening {}", samples.display()))?;
    let data = read_samples(file).with_context(|| format!("reading {}", samples.display()))?;
    let fit = fit_alpha(&data)?;
    let a = &fit.alpha;
    eprintln!("{} samples, RMS residual {:.4} C", fit.samples, fit.rms);
    eprintln!(
        "[controller.alpha]\na1 = {}\na2 = {}\na3 = {}\na4 = {}\nT_sp_floor = {}",
        a.a1, a.a2, a.a3, a.a4, a.t_sp_floor
    );
    match cli.out.as_deref() {
        None => Ok(()),
        arg => Out::parse(arg, PathBuf::new).write_with(|w| write_json(w, &fit)),
    }
}
