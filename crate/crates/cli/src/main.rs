//! `keyswitch`: scenario runner for switched-QKD network control.
//!
//! Subcommands load a scenario file, derive the useful configurations when
//! the file does not supply them, and run validation, schedule optimization,
//! simulation, or sustainable-rate sweeps. Every subcommand is a pure
//! function of its inputs; reruns produce byte-identical output. Log
//! verbosity is controlled through `RUST_LOG`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use keyswitch_core::configspace;
use keyswitch_core::coordinator::{Coordinator, CoordinatorConfig};
use keyswitch_core::model::{
    self, Mode, ModelError, Scenario, StrategyKind, StrategySettings,
};
use keyswitch_core::optimize;
use keyswitch_core::simenv::{self, SimParams};

#[derive(Parser)]
#[command(name = "keyswitch", version, about = "Control plane for switched QKD networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Fmcb,
    Mmak,
}

impl From<Strategy> for StrategyKind {
    fn from(strategy: Strategy) -> Self {
        match strategy {
            Strategy::Fmcb => StrategyKind::Fmcb,
            Strategy::Mmak => StrategyKind::Mmak,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario against the structural invariants.
    Validate { scenario: PathBuf },
    /// Derive the useful (non-superseded) configurations and print them.
    Enumerate { scenario: PathBuf },
    /// Compute a switching schedule without simulating it.
    Optimize {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        strategy: Strategy,
    },
    /// Run the event-driven simulation and print a per-link summary.
    Simulate {
        scenario: PathBuf,
        /// Override the scenario's strategy.
        #[arg(long, value_enum)]
        strategy: Option<Strategy>,
        /// Simulated seconds; defaults to the scenario horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Uniform consumption override, bits/second.
        #[arg(long)]
        consumption: Option<f64>,
        /// Start every buffer at this percentage of its capacity.
        #[arg(long)]
        initial_fill: Option<f64>,
        /// Generation blackout after each reconfiguration, seconds.
        #[arg(long)]
        downtime: Option<f64>,
        /// Write the piecewise-linear trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Extra trace rows every this many seconds.
        #[arg(long)]
        sample: Option<f64>,
    },
    /// Bisect for the largest sustainable uniform consumption rate.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        strategy: Strategy,
        /// Bracket resolution, bits/second.
        #[arg(long, default_value_t = 10.0)]
        tol: f64,
        /// Known-sustainable lower bracket, bits/second.
        #[arg(long)]
        k_lo: Option<f64>,
        /// Known-unsustainable upper bracket, bits/second.
        #[arg(long)]
        k_hi: Option<f64>,
    },
    /// Sweep both strategies and report their rates and ratio.
    Compare {
        scenario: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl ToString) -> Self {
        Failure { code: 1, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Failure { code: 2, message: message.to_string() }
    }
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::Validate { scenario } => validate(&scenario),
        Command::Enumerate { scenario } => {
            let loaded = load(&scenario)?;
            Ok(model::serialize_configurations(loaded.structure.configurations()))
        }
        Command::Optimize { scenario, strategy } => optimize_cmd(&scenario, strategy.into()),
        Command::Simulate {
            scenario,
            strategy,
            horizon,
            consumption,
            initial_fill,
            downtime,
            trace,
            sample,
        } => {
            let mut loaded = load(&scenario)?;
            if let Some(strategy) = strategy {
                set_strategy(&mut loaded.settings, strategy.into());
            }
            if let Some(horizon) = horizon {
                loaded.settings.horizon = horizon;
            }
            if let Some(rate) = consumption {
                for link in &mut loaded.state.links {
                    link.consumption_rate = rate;
                }
            }
            if let Some(pct) = initial_fill {
                if !(0.0..=100.0).contains(&pct) {
                    return Err(Failure::runtime(format!("--initial-fill {pct} is outside 0..=100")));
                }
                for (link, spec) in loaded.state.links.iter_mut().zip(loaded.structure.links()) {
                    link.fill_level = (pct / 100.0 * spec.buffer_capacity).round();
                }
            }
            if let Some(downtime) = downtime {
                loaded.settings.switch_downtime = downtime;
            }
            simulate_cmd(&loaded, trace.as_deref(), sample)
        }
        Command::Sweep { scenario, strategy, tol, k_lo, k_hi } => {
            let mut loaded = load(&scenario)?;
            set_strategy(&mut loaded.settings, strategy.into());
            let outcome = sweep(&loaded, tol, k_lo, k_hi)?;
            let mut out = String::new();
            writeln!(out, "strategy: {}", loaded.settings.strategy.as_str()).unwrap();
            writeln!(out, "sustained_rate_bits_per_s: {}", outcome.rate).unwrap();
            writeln!(out, "probes: {}", outcome.probes).unwrap();
            Ok(out)
        }
        Command::Compare { scenario, tol } => {
            let loaded = load(&scenario)?;
            let mut out = String::new();
            let mut rates = [0.0; 2];
            for (slot, strategy) in [StrategyKind::Fmcb, StrategyKind::Mmak].into_iter().enumerate() {
                let mut per_strategy = loaded.clone();
                set_strategy(&mut per_strategy.settings, strategy);
                let outcome = sweep(&per_strategy, tol, None, None)?;
                rates[slot] = outcome.rate;
                writeln!(out, "{}_sustained_rate_bits_per_s: {}", strategy.as_str(), outcome.rate)
                    .unwrap();
            }
            writeln!(out, "mmak_over_fmcb: {}", rates[1] / rates[0]).unwrap();
            Ok(out)
        }
    }
}

/// Loads, validates and completes a scenario (deriving the configuration
/// list when the file does not supply one).
fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    let mut scenario = model::parse_scenario(&text).map_err(Failure::validation)?;
    scenario.structure =
        configspace::resolve_configurations(&scenario.structure, scenario.explicit_configurations)
            .map_err(Failure::validation)?;
    Ok(scenario)
}

fn set_strategy(settings: &mut StrategySettings, strategy: StrategyKind) {
    if settings.strategy != strategy {
        settings.strategy = strategy;
        settings.mode = match strategy {
            StrategyKind::Fmcb => Mode::EventDriven,
            StrategyKind::Mmak => Mode::Periodic,
        };
    }
}

fn validate(path: &Path) -> Result<String, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    match model::parse_scenario(&text) {
        Ok(scenario) => {
            let scenario = Scenario {
                structure: configspace::resolve_configurations(
                    &scenario.structure,
                    scenario.explicit_configurations,
                )
                .map_err(Failure::validation)?,
                ..scenario
            };
            let mut out = String::new();
            writeln!(
                out,
                "ok: {} links, {} {} configurations",
                scenario.structure.links().len(),
                scenario.structure.configurations().len(),
                if scenario.explicit_configurations { "explicit" } else { "derived" },
            )
            .unwrap();
            Ok(out)
        }
        Err(ModelError::Invariants(violations)) => {
            let mut message = String::from("invalid network structure:");
            for violation in violations {
                write!(message, "\n  [{}] {violation}", violation.code()).unwrap();
            }
            Err(Failure::validation(message))
        }
        Err(other) => Err(Failure::validation(other)),
    }
}

fn optimize_cmd(path: &Path, strategy: StrategyKind) -> Result<String, Failure> {
    let scenario = load(path)?;
    let eta = scenario.state.consumption_weights();
    let matrix =
        optimize::build_matrices(&scenario.structure, &eta).map_err(Failure::runtime)?;
    let mut out = String::new();
    writeln!(out, "strategy: {}", strategy.as_str()).unwrap();
    let schedule = match strategy {
        StrategyKind::Mmak => {
            let (mix, supported) = optimize::mmak_solve(&matrix).map_err(Failure::runtime)?;
            writeln!(out, "k_supported_bits_per_s: {supported}").unwrap();
            writeln!(out, "mix:").unwrap();
            for (config, share) in matrix.config_ids().iter().zip(mix.as_slice()) {
                if *share > 0.0 {
                    writeln!(out, "  {config}: {share}").unwrap();
                }
            }
            let schedule = optimize::schedule_from_mix(&matrix, &mix, &scenario.structure)
                .map_err(Failure::runtime)?;
            writeln!(out, "schedule_period_s: {}", schedule.period()).unwrap();
            schedule
        }
        StrategyKind::Fmcb => {
            let ranking =
                optimize::criticality_ranking(&scenario.state, &scenario.structure, &eta)
                    .map_err(Failure::runtime)?;
            let critical = &scenario.structure.links()[ranking[0]].id;
            writeln!(out, "most_critical_link: {critical}").unwrap();
            let schedule = optimize::fmcb_select(&matrix, &ranking).map_err(Failure::runtime)?;
            let config = &schedule.entries[0].config_id;
            let rate = scenario
                .structure
                .configuration(config)
                .map(|c| c.rate_for(critical))
                .unwrap_or_default();
            writeln!(out, "selected_config: {config}").unwrap();
            writeln!(out, "rate_for_critical_bits_per_s: {rate}").unwrap();
            schedule
        }
    };
    for entry in &schedule.entries {
        writeln!(out, "SCHEDULE\t{}\t{}", entry.config_id, entry.duration).unwrap();
    }
    Ok(out)
}

fn simulate_cmd(
    scenario: &Scenario,
    trace_path: Option<&Path>,
    sample: Option<f64>,
) -> Result<String, Failure> {
    let mut coordinator = Coordinator::new(
        scenario.structure.clone(),
        CoordinatorConfig::from_settings(&scenario.settings),
    )
    .map_err(Failure::runtime)?;
    let params = SimParams {
        horizon: scenario.settings.horizon,
        switch_downtime: scenario.settings.switch_downtime,
        sample_interval: sample,
        event_cap: simenv::DEFAULT_EVENT_CAP,
    };
    let trace = simenv::run(&scenario.structure, &scenario.state, &mut coordinator, &params)
        .map_err(Failure::runtime)?;

    if let Some(path) = trace_path {
        std::fs::write(path, trace.to_csv())
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    }

    let mut out = String::new();
    writeln!(out, "strategy: {}", scenario.settings.strategy.as_str()).unwrap();
    writeln!(out, "horizon_s: {}", scenario.settings.horizon).unwrap();
    writeln!(out, "events: {}", trace.events).unwrap();
    writeln!(out, "links:").unwrap();
    for (index, id) in trace.link_ids.iter().enumerate() {
        let totals = &trace.totals[index];
        writeln!(
            out,
            "  {id}: final_fill_bits={} depletion_s={} wasted_bits={}",
            trace.final_fills()[index].round(),
            totals.depletion_time,
            totals.wasted.round(),
        )
        .unwrap();
    }
    match simenv::detect_steady_state(&trace, &scenario.structure) {
        Some(steady) => {
            writeln!(
                out,
                "steady_state: cycle_start_s={} cycle_length_s={}",
                steady.cycle_start, steady.cycle_length
            )
            .unwrap();
            writeln!(out, "mix:").unwrap();
            for (config, share) in
                scenario.structure.configurations().iter().zip(steady.average_mix.as_slice())
            {
                if *share > 0.0 {
                    writeln!(out, "  {}: {share}", config.id).unwrap();
                }
            }
            let eta = scenario.state.consumption_weights();
            let matrix =
                optimize::build_matrices(&scenario.structure, &eta).map_err(Failure::runtime)?;
            let supported =
                optimize::k_supported(&matrix, &steady.average_mix).map_err(Failure::runtime)?;
            writeln!(out, "k_supported_avg_bits_per_s: {supported}").unwrap();
        }
        None => writeln!(out, "steady_state: none").unwrap(),
    }
    Ok(out)
}

fn sweep(
    scenario: &Scenario,
    tol: f64,
    k_lo: Option<f64>,
    k_hi: Option<f64>,
) -> Result<simenv::SweepOutcome, Failure> {
    let eta = scenario.state.consumption_weights();
    // No uniform rate above the weakest link's best weighted rate can be
    // sustained, so one step past it is a sound default upper bracket.
    let structural_cap = scenario
        .structure
        .links()
        .iter()
        .zip(&eta)
        .map(|(link, weight)| {
            scenario
                .structure
                .configurations()
                .iter()
                .map(|c| c.rate_for(&link.id) / weight)
                .fold(0.0f64, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    let k_lo = k_lo.unwrap_or(1.0);
    let k_hi = k_hi.unwrap_or(structural_cap + 1.0);

    let base_state =
        simenv::qualification_state(&scenario.structure, &scenario.state, scenario.settings.strategy);
    let params = SimParams {
        horizon: scenario.settings.horizon,
        switch_downtime: scenario.settings.switch_downtime,
        sample_interval: None,
        event_cap: simenv::DEFAULT_EVENT_CAP,
    };
    let config = CoordinatorConfig::from_settings(&scenario.settings);
    let structure = scenario.structure.clone();
    let mut factory = move || Coordinator::new(structure.clone(), config.clone());
    simenv::sweep_supported_rate(
        &scenario.structure,
        &base_state,
        &mut factory,
        &params,
        k_lo,
        k_hi,
        tol,
    )
    .map_err(Failure::runtime)
}
