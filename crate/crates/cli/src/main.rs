use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use bayes_pbne::error::{ExperimentError, GameError, ScenarioError};
use bayes_pbne::experiments::{ExperimentArgs, ExperimentRegistry, Grid, TypeSampling};
use bayes_pbne::game::{parse_game, validate_game, MultiStageGame, Player};
use bayes_pbne::io;
use bayes_pbne::pbne::{solve_pbne, InitialBeliefs, PbneConfig};
use bayes_pbne::selection::SelectorRegistry;
use bayes_pbne::te::{self, TEParams};
use clap::{ArgMatches, Args, Command, FromArgMatches, ValueEnum};

const EXIT_INVALID: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Builtin {
    Te,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Initial {
    Uniform,
    Prior,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sampling {
    /// Redraw the opponent's type each stage from the current beliefs.
    Beliefs,
    /// Draw the opponent's type once per episode from the prior.
    Prior,
}

// Scenario selection and solver flags shared by every subcommand.
#[derive(Debug, Args)]
struct Common {
    /// Built-in scenario; used when no scenario file is given.
    #[arg(long, value_enum, default_value = "te", conflicts_with = "scenario")]
    builtin: Builtin,
    /// JSON scenario document.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// JSON object of TE parameter overrides.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Initial state, by label or index.
    #[arg(long)]
    x0: Option<String>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    iter_num: usize,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-8)]
    belief_tol: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    initial: Initial,
    /// Equilibrium selection rule for stage games.
    #[arg(long, default_value = "lexicographic")]
    selection: String,
}

#[derive(Debug, Args)]
struct SolveFlags {
    /// Directory for strategy, belief and value CSV tables.
    #[arg(long)]
    tables: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentFlags {
    /// Grid as `start,stop,points`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
    /// Final-stage state for belief sweeps, by label or index.
    #[arg(long)]
    state: Option<String>,
    /// Player whose belief is swept (1 or 2).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    player: Option<u8>,
    /// Opponent type whose probability is swept, by label or index.
    #[arg(long)]
    opp_type: Option<String>,
    /// Fix the other player's belief to a point mass on this type of the
    /// swept player.
    #[arg(long)]
    fix_other: Option<String>,
    /// TE parameter varied by sensitivity sweeps.
    #[arg(long)]
    field: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    episodes: usize,
    #[arg(long, value_enum, default_value = "beliefs")]
    sampling: Sampling,
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [start, stop, points] = parts[..] else {
        return Err("expected start,stop,points".into());
    };
    let start: f64 = start.parse().map_err(|e| format!("start: {e}"))?;
    let stop: f64 = stop.parse().map_err(|e| format!("stop: {e}"))?;
    let points: usize = points.parse().map_err(|e| format!("points: {e}"))?;
    Grid::new(start, stop, points).map_err(|e| e.to_string())
}

/// Errors caused by bad input rather than by the computation.
fn is_invalid_input(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<GameError>()
            || e.is::<ScenarioError>()
            || e.downcast_ref::<ExperimentError>().is_some_and(experiment_input_error)
            || e.downcast_ref::<Box<ExperimentError>>().is_some_and(|b| experiment_input_error(b))
            || e.is::<InvalidArgument>()
    })
}

// Transparent variants do not show up in the error chain, so look inside.
fn experiment_input_error(e: &ExperimentError) -> bool {
    match e {
        ExperimentError::InvalidInput(_)
        | ExperimentError::UnknownExperiment(_)
        | ExperimentError::Game(_)
        | ExperimentError::Scenario(_) => true,
        ExperimentError::GridPoint { source, .. } => experiment_input_error(source),
        _ => false,
    }
}

#[derive(Debug)]
struct InvalidArgument(String);

impl std::fmt::Display for InvalidArgument {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidArgument {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidArgument(msg.into()).into()
}

struct Scenario {
    game: MultiStageGame,
    params: Option<TEParams>,
}

fn load_scenario(common: &Common) -> anyhow::Result<Scenario> {
    if let Some(path) = &common.scenario {
        if common.params.is_some() {
            return Err(invalid("--params applies to the built-in TE scenario only"));
        }
        let doc = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let game = parse_game(&doc).with_context(|| format!("scenario {}", path.display()))?;
        return Ok(Scenario { game, params: None });
    }
    let Builtin::Te = common.builtin;
    let params = match &common.params {
        Some(path) => {
            let doc = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            TEParams::from_overrides(&doc).with_context(|| format!("parameters {}", path.display()))?
        }
        None => te::default_params(),
    };
    let game = te::build_te_game(&params)?;
    Ok(Scenario {
        game,
        params: Some(params),
    })
}

fn resolve(labels: &[String], value: &str, what: &str) -> anyhow::Result<usize> {
    if let Some(i) = labels.iter().position(|l| l == value) {
        return Ok(i);
    }
    match value.parse::<usize>() {
        Ok(i) if i < labels.len() => Ok(i),
        _ => Err(invalid(format!("unknown {what} '{value}' (expected one of {})", labels.join(", ")))),
    }
}

fn pbne_config(common: &Common) -> anyhow::Result<PbneConfig> {
    if SelectorRegistry::builtin().get(&common.selection).is_none() {
        return Err(invalid(format!(
            "unknown selection rule '{}' (expected one of {})",
            common.selection,
            SelectorRegistry::builtin().names().join(", ")
        )));
    }
    let mut config = PbneConfig {
        iter_num: common.iter_num,
        epsilon: common.epsilon,
        belief_tol: common.belief_tol,
        initial: match common.initial {
            Initial::Uniform => InitialBeliefs::Uniform,
            Initial::Prior => InitialBeliefs::PriorFromGame,
        },
        ..PbneConfig::default()
    };
    config.solver.selection = common.selection.clone();
    config.check().map_err(|e| invalid(e.to_string()))?;
    Ok(config)
}

fn default_x0(scenario: &Scenario) -> usize {
    if scenario.params.is_some() {
        te::EFFECTUAL
    } else {
        0
    }
}

fn x0(common: &Common, scenario: &Scenario) -> anyhow::Result<usize> {
    match &common.x0 {
        Some(v) => resolve(scenario.game.stage(0).states(), v, "initial state"),
        None => Ok(default_x0(scenario)),
    }
}

fn emit(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run_solve(common: &Common, flags: &SolveFlags) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(common)?;
    let config = pbne_config(common)?;
    let x0 = x0(common, &scenario)?;
    let game = &scenario.game;
    let report = solve_pbne(game, x0, &config)?;
    emit(common.out.as_deref(), &(io::report_json(&report) + "\n"))?;
    if let Some(dir) = &flags.tables {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        io::strategy_table(game, &report.strategies).write_csv(&dir.join("strategies.csv"))?;
        io::belief_table(game, &report.beliefs).write_csv(&dir.join("beliefs.csv"))?;
        io::value_table(game, &report.values).write_csv(&dir.join("values.csv"))?;
    }
    eprintln!(
        "x0 {}: {} after {} iterations, epsilon {:e}, discrepancy {:e}",
        game.stage(0).states()[x0],
        if report.converged { "converged" } else { "not converged" },
        report.iterations,
        report.epsilon,
        report.discrepancy
    );
    Ok(if report.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    })
}

fn run_validate(common: &Common) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(common)?;
    let mut problems: Vec<String> = Vec::new();
    if let Some(p) = &scenario.params {
        problems.extend(p.violations());
    }
    let report = validate_game(&scenario.game);
    if !report.is_empty() {
        problems.push(report.to_string());
    }
    if problems.is_empty() {
        let g = &scenario.game;
        println!(
            "ok: {} stages, {} x {} types",
            g.num_stages(),
            g.num_types(Player::One),
            g.num_types(Player::Two)
        );
        Ok(ExitCode::SUCCESS)
    } else {
        for p in &problems {
            eprintln!("{p}");
        }
        Ok(ExitCode::from(EXIT_INVALID))
    }
}

fn run_experiment(name: &str, common: &Common, flags: &ExperimentFlags) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(common)?;
    let game = &scenario.game;
    let player = flags.player.map(|n| if n == 1 { Player::One } else { Player::Two });
    let swept = player.unwrap_or(Player::Two);
    let last = game.stage(game.horizon());
    let args = ExperimentArgs {
        x0: x0(common, &scenario)?,
        grid: flags.grid,
        pbne: pbne_config(common)?,
        state: flags.state.as_deref().map(|s| resolve(last.states(), s, "state")).transpose()?,
        player,
        opp_type: flags
            .opp_type
            .as_deref()
            .map(|s| resolve(game.types(swept.opponent()), s, "opponent type"))
            .transpose()?,
        fix_other: flags
            .fix_other
            .as_deref()
            .map(|s| resolve(game.types(swept), s, "type"))
            .transpose()?,
        field: flags.field.clone(),
        seed: flags.seed,
        episodes: flags.episodes,
        sampling: match flags.sampling {
            Sampling::Beliefs => TypeSampling::PerStageFromBeliefs,
            Sampling::Prior => TypeSampling::OnceFromPrior,
        },
        params: scenario.params.clone(),
        ..ExperimentArgs::new(game.clone())
    };
    let output = ExperimentRegistry::builtin().run(name, &args)?;
    emit(common.out.as_deref(), &output.table.to_csv())?;
    if output.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        log::warn!("{name}: at least one equilibrium solve did not converge");
        Ok(ExitCode::from(EXIT_NOT_CONVERGED))
    }
}

fn cli() -> Command {
    let mut cmd = Command::new("pbne")
        .about("Multi-stage Bayesian game solver and experiment harness")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            SolveFlags::augment_args(Common::augment_args(Command::new("solve")))
                .about("solve for a perfect Bayesian equilibrium and write the report as JSON"),
        )
        .subcommand(Common::augment_args(Command::new("validate")).about("check a scenario and its parameters"));
    let registry = ExperimentRegistry::builtin();
    for name in registry.names() {
        let summary = registry.get(name).expect("listed").summary().to_string();
        cmd = cmd.subcommand(ExperimentFlags::augment_args(Common::augment_args(Command::new(name.to_string()))).about(summary));
    }
    cmd
}

fn dispatch(name: &str, m: &ArgMatches) -> anyhow::Result<ExitCode> {
    let common = Common::from_arg_matches(m)?;
    match name {
        "solve" => run_solve(&common, &SolveFlags::from_arg_matches(m)?),
        "validate" => run_validate(&common),
        _ => run_experiment(name, &common, &ExperimentFlags::from_arg_matches(m)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match dispatch(name, sub) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_invalid_input(&err) {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
