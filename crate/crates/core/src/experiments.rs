//! Computational studies on a scenario: static belief sweeps, parameter
//! sensitivity, posterior versus prior, final-state distributions,
//! information-structure comparisons and Monte-Carlo rollouts.
//!
//! Experiments that need a distinguished user type (the attacker) use the
//! user's type with index [`ATTACKER`]; the TE scenario puts "adversarial"
//! there.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamic::{reach_probabilities, realized_utility};
use crate::error::ExperimentError;
use crate::game::{MultiStageGame, Player};
use crate::pbne::{solve_pbne, EquilibriumReport, PbneConfig};
use crate::static_eq::{solve_sbne, SolverConfig, StageGameView, StaticEquilibrium};
use crate::table::{fmt_f64, Table};
use crate::tables::{BeliefTable, StrategyProfile};
use crate::te::{self, TEParams};

/// Index of the user type treated as the attacker.
pub const ATTACKER: usize = 0;

/// Evenly spaced points from `start` to `stop`, both included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self, ExperimentError> {
        if points < 2 {
            return Err(ExperimentError::InvalidInput("a grid needs at least 2 points".into()));
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err(ExperimentError::InvalidInput("grid bounds must be finite".into()));
        }
        Ok(Grid { start, stop, points })
    }

    /// `0, 0.1, ..., 1`.
    pub fn unit() -> Self {
        Grid {
            start: 0.0,
            stop: 1.0,
            points: 11,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / last)
            .collect()
    }

    fn check_probability(&self) -> Result<(), ExperimentError> {
        if self.values().iter().all(|v| (0.0..=1.0).contains(v)) {
            Ok(())
        } else {
            Err(ExperimentError::InvalidInput("probability grid must lie in [0, 1]".into()))
        }
    }
}

/// `q` on `index`, the rest spread evenly over the other entries.
fn concentrated(len: usize, index: usize, q: f64) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let rest = (1.0 - q) / (len - 1) as f64;
    (0..len).map(|i| if i == index { q } else { rest }).collect()
}

fn point_mass(len: usize, index: usize) -> Vec<f64> {
    concentrated(len, index, 1.0)
}

fn at_point<T>(point: f64, r: Result<T, ExperimentError>) -> Result<T, ExperimentError> {
    r.map_err(|e| ExperimentError::GridPoint {
        point,
        source: Box::new(e),
    })
}

/// The last stage of `game` at `state` as a one-shot game.
pub fn final_stage_view(game: &MultiStageGame, state: usize, beliefs: [Vec<Vec<f64>>; 2]) -> StageGameView {
    let stage = game.stage(game.horizon());
    StageGameView::from_fn(
        [stage.num_actions(Player::One), stage.num_actions(Player::Two)],
        [game.num_types(Player::One), game.num_types(Player::Two)],
        beliefs,
        |a1, a2, t1, t2| {
            [
                stage.utility(state, a1, a2, t1, t2, Player::One),
                stage.utility(state, a1, a2, t1, t2, Player::Two),
            ]
        },
    )
}

// ---------------------------------------------------------------------------
// Static belief sweep

/// Sweeps one player's belief in one opponent type at a final-stage state.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefSweep {
    pub state: usize,
    /// Whose belief is swept; the same value is used for all its types.
    pub player: Player,
    /// Opponent type whose probability is swept.
    pub opp_type: usize,
    pub grid: Grid,
    /// Point-mass belief of the other player on this type of the swept
    /// player; `None` keeps the game's priors.
    pub fix_other: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub belief: f64,
    pub equilibrium: StaticEquilibrium,
    /// Some agent's support differs from the previous row.
    pub jump: bool,
}

pub fn sweep_static_belief(game: &MultiStageGame, spec: &BeliefSweep, config: &SolverConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    spec.grid.check_probability()?;
    let last = game.stage(game.horizon());
    if spec.state >= last.num_states() {
        return Err(ExperimentError::InvalidInput(format!("state {} does not exist at the final stage", spec.state)));
    }
    let swept = spec.player;
    let other = swept.opponent();
    if spec.opp_type >= game.num_types(other) {
        return Err(ExperimentError::InvalidInput(format!("player {other} has no type {}", spec.opp_type)));
    }
    if spec.fix_other.is_some_and(|t| t >= game.num_types(swept)) {
        return Err(ExperimentError::InvalidInput(format!("player {swept} has no type {}", spec.fix_other.unwrap_or(0))));
    }
    let solved: Vec<(f64, StaticEquilibrium)> = spec
        .grid
        .values()
        .into_par_iter()
        .map(|q| {
            let mut beliefs = game.priors().clone();
            beliefs[swept.index()] = vec![concentrated(game.num_types(other), spec.opp_type, q); game.num_types(swept)];
            if let Some(t) = spec.fix_other {
                beliefs[other.index()] = vec![point_mass(game.num_types(swept), t); game.num_types(other)];
            }
            let eq = solve_sbne(&final_stage_view(game, spec.state, beliefs), config);
            at_point(q, eq.map_err(Into::into)).map(|eq| (q, eq))
        })
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(solved.len());
    for (belief, equilibrium) in solved {
        let jump = rows.last().is_some_and(|prev| prev.equilibrium.supports != equilibrium.supports);
        rows.push(SweepRow { belief, equilibrium, jump });
    }
    Ok(rows)
}

/// Column name of an action probability, e.g. `p2_adversarial_encrypted-command`.
pub fn action_column(game: &MultiStageGame, player: Player, own_type: usize, action: usize) -> String {
    let stage = game.stage(game.horizon());
    format!(
        "p{}_{}_{}",
        player.number(),
        game.types(player)[own_type],
        stage.actions(player)[action]
    )
}

pub fn value_column(game: &MultiStageGame, player: Player, own_type: usize) -> String {
    format!("v{}_{}", player.number(), game.types(player)[own_type])
}

pub fn belief_sweep_table(game: &MultiStageGame, rows: &[SweepRow]) -> Table {
    let stage = game.stage(game.horizon());
    let mut headers = vec!["belief".to_string()];
    for p in Player::ALL {
        for t in 0..game.num_types(p) {
            for a in 0..stage.num_actions(p) {
                headers.push(action_column(game, p, t, a));
            }
        }
    }
    for p in Player::ALL {
        for t in 0..game.num_types(p) {
            headers.push(value_column(game, p, t));
        }
    }
    headers.push("jump".into());
    let mut table = Table::new(headers);
    for row in rows {
        let eq = &row.equilibrium;
        let mut cells = vec![fmt_f64(row.belief)];
        for p in Player::ALL {
            for dist in &eq.strategies[p.index()] {
                cells.extend(dist.iter().map(|v| fmt_f64(*v)));
            }
        }
        for p in Player::ALL {
            cells.extend(eq.values[p.index()].iter().map(|v| fmt_f64(*v)));
        }
        cells.push(row.jump.to_string());
        table.push(cells);
    }
    table
}

// ---------------------------------------------------------------------------
// Parameter sensitivity

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub value: f64,
    pub state: usize,
    pub defender_utility: f64,
    pub attacker_utility: f64,
}

/// Final-stage equilibrium utilities of a primitive defender facing a known
/// attacker, at every final state, as one TE parameter varies.
pub fn sweep_sensitivity(params: &TEParams, field: &str, grid: &Grid, config: &SolverConfig) -> Result<Vec<SensitivityRow>, ExperimentError> {
    params.get(field)?;
    let per_point: Vec<Vec<SensitivityRow>> = grid
        .values()
        .into_par_iter()
        .map(|v| {
            at_point(v, (|| {
                let game = te::build_te_final_stage(&params.with(field, v)?)?;
                let beliefs = [
                    vec![point_mass(2, te::ADVERSARIAL); 2],
                    vec![point_mass(2, te::PRIMITIVE); 2],
                ];
                (0..game.stage(0).num_states())
                    .map(|x| {
                        let eq = solve_sbne(&final_stage_view(&game, x, beliefs.clone()), config)?;
                        Ok(SensitivityRow {
                            value: v,
                            state: x,
                            defender_utility: eq.values[0][te::PRIMITIVE],
                            attacker_utility: eq.values[1][te::ADVERSARIAL],
                        })
                    })
                    .collect()
            })())
        })
        .collect::<Result<_, _>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn sensitivity_table(field: &str, game_final: &MultiStageGame, rows: &[SensitivityRow]) -> Table {
    let states = game_final.stage(game_final.horizon()).states();
    let mut table = Table::new([field, "state", "defender_utility", "attacker_utility"]);
    for r in rows {
        table.push(vec![
            fmt_f64(r.value),
            states[r.state].clone(),
            fmt_f64(r.defender_utility),
            fmt_f64(r.attacker_utility),
        ]);
    }
    table
}

// ---------------------------------------------------------------------------
// Posterior versus prior, final-state distribution

fn solve_at_prior(game: &MultiStageGame, q: f64, x0: usize, config: &PbneConfig) -> Result<(MultiStageGame, EquilibriumReport), ExperimentError> {
    let g = game.with_prior_for_all(Player::One, &concentrated(game.num_types(Player::Two), ATTACKER, q));
    let report = at_point(q, solve_pbne(&g, x0, config).map_err(Into::into))?;
    Ok((g, report))
}

fn check_x0(game: &MultiStageGame, x0: usize) -> Result<(), ExperimentError> {
    if x0 < game.stage(0).num_states() {
        Ok(())
    } else {
        Err(ExperimentError::InvalidInput(format!("initial state {x0} does not exist")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRow {
    pub prior: f64,
    pub defender_type: usize,
    pub posterior: f64,
    pub converged: bool,
}

/// Defender's final-stage belief that the user is the attacker, averaged
/// over the final states the attacker actually reaches.
pub fn attacker_path_posterior(game: &MultiStageGame, report: &EquilibriumReport, defender_type: usize) -> f64 {
    let k = game.horizon();
    let reach = reach_probabilities(game, &report.strategies, report.x0, [defender_type, ATTACKER]);
    reach[k]
        .iter()
        .enumerate()
        .map(|(x, r)| r * report.beliefs.slice(Player::One, k, x, defender_type)[ATTACKER])
        .sum()
}

pub fn posterior_vs_prior(game: &MultiStageGame, grid: &Grid, x0: usize, config: &PbneConfig) -> Result<Vec<PosteriorRow>, ExperimentError> {
    grid.check_probability()?;
    check_x0(game, x0)?;
    let per_point: Vec<Vec<PosteriorRow>> = grid
        .values()
        .into_par_iter()
        .map(|q| {
            let (g, report) = solve_at_prior(game, q, x0, config)?;
            Ok((0..g.num_types(Player::One))
                .map(|t| PosteriorRow {
                    prior: q,
                    defender_type: t,
                    posterior: attacker_path_posterior(&g, &report, t),
                    converged: report.converged,
                })
                .collect())
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn posterior_table(game: &MultiStageGame, rows: &[PosteriorRow]) -> Table {
    let mut table = Table::new(["prior", "defender_type", "posterior", "converged"]);
    for r in rows {
        table.push(vec![
            fmt_f64(r.prior),
            game.types(Player::One)[r.defender_type].clone(),
            fmt_f64(r.posterior),
            r.converged.to_string(),
        ]);
    }
    table
}

/// Final-state distribution for one defender type, with the user's type
/// drawn from that type's prior.
pub fn final_state_distribution(game: &MultiStageGame, strategies: &StrategyProfile, x0: usize, defender_type: usize) -> Vec<f64> {
    let k = game.horizon();
    let mut dist = vec![0.0; game.stage(k).num_states()];
    for (t2, w) in game.prior(Player::One, defender_type).iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let reach = reach_probabilities(game, strategies, x0, [defender_type, t2]);
        for (d, r) in dist.iter_mut().zip(&reach[k]) {
            *d += w * r;
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDistRow {
    pub prior: f64,
    pub defender_type: usize,
    pub state: usize,
    pub probability: f64,
    pub converged: bool,
}

/// Per prior, the equilibrium final-state distribution. `profile` replaces
/// the equilibrium strategies when given.
pub fn state_distribution(
    game: &MultiStageGame,
    grid: &Grid,
    x0: usize,
    config: &PbneConfig,
    profile: Option<&StrategyProfile>,
) -> Result<Vec<StateDistRow>, ExperimentError> {
    grid.check_probability()?;
    check_x0(game, x0)?;
    let per_point: Vec<Vec<StateDistRow>> = grid
        .values()
        .into_par_iter()
        .map(|q| {
            let (g, strategies, converged) = match profile {
                Some(s) => {
                    let g = game.with_prior_for_all(Player::One, &concentrated(game.num_types(Player::Two), ATTACKER, q));
                    (g, s.clone(), true)
                }
                None => {
                    let (g, report) = solve_at_prior(game, q, x0, config)?;
                    (g, report.strategies, report.converged)
                }
            };
            let mut rows = Vec::new();
            for t in 0..g.num_types(Player::One) {
                for (state, probability) in final_state_distribution(&g, &strategies, x0, t).into_iter().enumerate() {
                    rows.push(StateDistRow {
                        prior: q,
                        defender_type: t,
                        state,
                        probability,
                        converged,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn state_distribution_table(game: &MultiStageGame, rows: &[StateDistRow]) -> Table {
    let states = game.stage(game.horizon()).states();
    let mut table = Table::new(["prior", "defender_type", "state", "probability", "converged"]);
    for r in rows {
        table.push(vec![
            fmt_f64(r.prior),
            game.types(Player::One)[r.defender_type].clone(),
            states[r.state].clone(),
            fmt_f64(r.probability),
            r.converged.to_string(),
        ]);
    }
    table
}

// ---------------------------------------------------------------------------
// Information structures

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regime {
    /// Both players know both types.
    Complete,
    /// The user knows the defender's type; the defender keeps its prior.
    OneSided,
    /// Both players keep their priors.
    DoubleSided,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Complete, Regime::OneSided, Regime::DoubleSided];

    pub fn label(self) -> &'static str {
        match self {
            Regime::Complete => "complete",
            Regime::OneSided => "one-sided",
            Regime::DoubleSided => "double-sided",
        }
    }

    /// `game` with priors set for this regime when the true types are
    /// `(defender_type, ATTACKER)`.
    pub fn game(self, game: &MultiStageGame, defender_type: usize) -> MultiStageGame {
        let n1 = game.num_types(Player::One);
        let n2 = game.num_types(Player::Two);
        match self {
            Regime::Complete => game
                .with_prior_for_all(Player::One, &point_mass(n2, ATTACKER))
                .with_prior_for_all(Player::Two, &point_mass(n1, defender_type)),
            Regime::OneSided => game.with_prior_for_all(Player::Two, &point_mass(n1, defender_type)),
            Regime::DoubleSided => game.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub regime: Regime,
    pub x0: usize,
    pub defender_type: usize,
    pub player: Player,
    /// Expected cumulative utility with the true types fixed.
    pub utility: f64,
    pub converged: bool,
}

pub fn compare_information_structures(game: &MultiStageGame, x0s: &[usize], config: &PbneConfig) -> Result<Vec<CompareRow>, ExperimentError> {
    for &x0 in x0s {
        check_x0(game, x0)?;
    }
    let mut cases = Vec::new();
    for &x0 in x0s {
        for t1 in 0..game.num_types(Player::One) {
            for regime in Regime::ALL {
                cases.push((regime, x0, t1));
            }
        }
    }
    let per_case: Vec<Vec<CompareRow>> = cases
        .into_par_iter()
        .map(|(regime, x0, t1)| {
            let g = regime.game(game, t1);
            let report = solve_pbne(&g, x0, config)?;
            let u = realized_utility(&g, &report.strategies, x0, [t1, ATTACKER]);
            Ok(Player::ALL
                .iter()
                .map(|&p| CompareRow {
                    regime,
                    x0,
                    defender_type: t1,
                    player: p,
                    utility: u[p.index()],
                    converged: report.converged,
                })
                .collect())
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(per_case.into_iter().flatten().collect())
}

pub fn compare_table(game: &MultiStageGame, rows: &[CompareRow]) -> Table {
    let mut table = Table::new(["regime", "x0", "defender_type", "player", "utility", "converged"]);
    for r in rows {
        table.push(vec![
            r.regime.label().to_string(),
            game.stage(0).states()[r.x0].clone(),
            game.types(Player::One)[r.defender_type].clone(),
            r.player.number().to_string(),
            fmt_f64(r.utility),
            r.converged.to_string(),
        ]);
    }
    table
}

// ---------------------------------------------------------------------------
// Monte-Carlo rollouts

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeSampling {
    /// Redraw the opponent's type at every stage from the viewpoint's
    /// current belief slice, matching how cumulative utility is evaluated.
    PerStageFromBeliefs,
    /// Draw the opponent's type once per episode from the prior.
    OnceFromPrior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutSpec {
    pub episodes: usize,
    pub seed: u64,
    pub x0: usize,
    pub sampling: TypeSampling,
}

/// Empirical results from the point of view of one `(player, own type)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewpointStats {
    pub player: Player,
    pub own_type: usize,
    pub mean: f64,
    pub std_err: f64,
    /// Empirical distribution of the final state.
    pub final_states: Vec<f64>,
    pub final_state_std_err: Vec<f64>,
}

fn sample(rng: &mut ChaCha8Rng, dist: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in dist.iter().enumerate() {
        if *p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

fn std_err(sum: f64, sum_sq: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (var / nf).sqrt()
}

/// Simulates `spec.episodes` plays for every viewpoint. Each viewpoint has
/// its own ChaCha8 stream derived from the seed, so results do not depend
/// on thread scheduling.
pub fn rollout(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    beliefs: &BeliefTable,
    spec: &RolloutSpec,
) -> Result<Vec<ViewpointStats>, ExperimentError> {
    if spec.episodes == 0 {
        return Err(ExperimentError::InvalidInput("at least one episode is required".into()));
    }
    check_x0(game, spec.x0)?;
    let viewpoints: Vec<(Player, usize)> = Player::ALL
        .iter()
        .flat_map(|&p| (0..game.num_types(p)).map(move |t| (p, t)))
        .collect();
    let k_last = game.horizon();
    let n_final = game.stage(k_last).num_states();
    Ok(viewpoints
        .into_par_iter()
        .enumerate()
        .map(|(stream, (player, own))| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(stream as u64);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            let mut counts = vec![0usize; n_final];
            for _ in 0..spec.episodes {
                let mut x = spec.x0;
                let mut total = 0.0;
                let mut opp_type = match spec.sampling {
                    TypeSampling::OnceFromPrior => sample(&mut rng, game.prior(player, own)),
                    TypeSampling::PerStageFromBeliefs => 0,
                };
                for k in 0..=k_last {
                    if spec.sampling == TypeSampling::PerStageFromBeliefs {
                        opp_type = sample(&mut rng, beliefs.slice(player, k, x, own));
                    }
                    let (t1, t2) = match player {
                        Player::One => (own, opp_type),
                        Player::Two => (opp_type, own),
                    };
                    let a1 = sample(&mut rng, strategies.get(Player::One, k, x, t1));
                    let a2 = sample(&mut rng, strategies.get(Player::Two, k, x, t2));
                    let stage = game.stage(k);
                    total += stage.utility(x, a1, a2, t1, t2, player);
                    if k < k_last {
                        x = stage.next_state(x, a1, a2);
                    }
                }
                sum += total;
                sum_sq += total * total;
                counts[x] += 1;
            }
            let n = spec.episodes;
            let nf = n as f64;
            ViewpointStats {
                player,
                own_type: own,
                mean: sum / nf,
                std_err: std_err(sum, sum_sq, n),
                final_states: counts.iter().map(|c| *c as f64 / nf).collect(),
                final_state_std_err: counts.iter().map(|c| std_err(*c as f64, *c as f64, n)).collect(),
            }
        })
        .collect())
}

pub fn rollout_table(game: &MultiStageGame, stats: &[ViewpointStats]) -> Table {
    let states = game.stage(game.horizon()).states();
    let mut table = Table::new(["player", "type", "quantity", "value", "std_err"]);
    for s in stats {
        let who = [s.player.number().to_string(), game.types(s.player)[s.own_type].clone()];
        table.push(vec![who[0].clone(), who[1].clone(), "utility".into(), fmt_f64(s.mean), fmt_f64(s.std_err)]);
        for (x, (f, e)) in s.final_states.iter().zip(&s.final_state_std_err).enumerate() {
            table.push(vec![
                who[0].clone(),
                who[1].clone(),
                format!("final_state={}", states[x]),
                fmt_f64(*f),
                fmt_f64(*e),
            ]);
        }
    }
    table
}

// ---------------------------------------------------------------------------
// Named experiments

/// Inputs shared by all named experiments. Fields an experiment does not
/// use are ignored; missing optional fields fall back to per-experiment
/// defaults.
#[derive(Debug, Clone)]
pub struct ExperimentArgs {
    pub game: MultiStageGame,
    /// Present when the game was built from TE parameters.
    pub params: Option<TEParams>,
    pub x0: usize,
    pub grid: Option<Grid>,
    pub pbne: PbneConfig,
    pub state: Option<usize>,
    pub player: Option<Player>,
    pub opp_type: Option<usize>,
    pub fix_other: Option<usize>,
    pub field: Option<String>,
    pub seed: u64,
    pub episodes: usize,
    pub sampling: TypeSampling,
}

impl ExperimentArgs {
    pub fn new(game: MultiStageGame) -> Self {
        ExperimentArgs {
            game,
            params: None,
            x0: 0,
            grid: None,
            pbne: PbneConfig::default(),
            state: None,
            player: None,
            opp_type: None,
            fix_other: None,
            field: None,
            seed: 0,
            episodes: 100_000,
            sampling: TypeSampling::PerStageFromBeliefs,
        }
    }

    pub fn te(params: TEParams) -> Result<Self, ExperimentError> {
        let game = te::build_te_game(&params)?;
        Ok(ExperimentArgs {
            params: Some(params),
            x0: te::EFFECTUAL,
            ..Self::new(game)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub table: Table,
    /// False when any equilibrium solve inside the experiment stopped
    /// without reaching the convergence criteria.
    pub converged: bool,
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &str;
    fn summary(&self) -> &str;
    fn run(&self, args: &ExperimentArgs) -> Result<ExperimentOutput, ExperimentError>;
}

struct SweepBelief;

impl Experiment for SweepBelief {
    fn name(&self) -> &str {
        "sweep-belief"
    }
    fn summary(&self) -> &str {
        "final-stage equilibrium as one player's type belief varies"
    }
    fn run(&self, args: &ExperimentArgs) -> Result<ExperimentOutput, ExperimentError> {
        let game = &args.game;
        let spec = BeliefSweep {
            state: args.state.unwrap_or(game.stage(game.horizon()).num_states() - 1),
            player: args.player.unwrap_or(Player::Two),
            opp_type: args.opp_type.unwrap_or(0),
            grid: args.grid.unwrap_or(Grid::unit()),
            fix_other: args.fix_other,
        };
        let rows = sweep_static_belief(game, &spec, &args.pbne.solver)?;
        Ok(ExperimentOutput {
            table: belief_sweep_table(game, &rows),
            converged: true,
        })
    }
}

struct SweepSensitivity;

impl Experiment for SweepSensitivity {
    fn name(&self) -> &str {
        "sweep-sensitivity"
    }
    fn summary(&self) -> &str {
        "final-stage utilities of a primitive defender and an attacker as a TE parameter varies"
    }
    fn run(&self, args: &ExperimentArgs) -> Result<ExperimentOutput, ExperimentError> {
        let params = args
            .params
            .as_ref()
            .ok_or_else(|| ExperimentError::InvalidInput("sensitivity sweeps need the built-in TE scenario".into()))?;
        let field = args.field.as_deref().unwrap_or("detection_reward_primitive");
        let grid = args.grid.unwrap_or(Grid {
            start: 0.0,
            stop: 50.0,
            points: 11,
        });
        let rows = sweep_sensitivity(params, field, &grid, &args.pbne.solver)?;
        Ok(ExperimentOutput {
            table: sensitivity_table(field, &te::build_te_final_stage(params)?, &rows),
            converged: true,
        })
    }
}

struct Posterior;

impl Experiment for Posterior {
    fn name(&self) -> &str {
        "posterior"
    }
    fn summary(&self) -> &str {
        "defender's final-stage belief in the attacker along the attacker's path, per prior"
    }
    fn run(&self, args: &ExperimentArgs) -> Result<ExperimentOutput, ExperimentError> {
        let rows = posterior_vs_prior(&args.game, &args.grid.unwrap_or(Grid::unit()), args.x0, &args.pbne)?;
        Ok(ExperimentOutput {
            converged: rows.iter().all(|r| r.converged),
            table: posterior_table(&args.game, &rows),
        })
    }
}

struct StateDist;

impl Experiment for StateDist {
    fn name(&self) -> &str {
        "state-dist"
    }
    fn summary(&self) -> &str {
        "equilibrium final-state distribution per prior"
    }
    fn run(&self, args: &ExperimentArgs) -> Result<ExperimentOutput, ExperimentError> {
        let rows = state_distribution(&args.game, &args.grid.unwrap_or(Grid::unit()), args.x0, &args.pbne, None)?;
        Ok(ExperimentOutput {
            converged: rows.iter().all(|r| r.converged),
            table: state_distribution_table(&args.game, &rows),
        })
    }
}

struct CompareInfo;

impl Experiment for CompareInfo {
    fn name(&self) -> &str {
        "compare-info"
    }
    fn summary(&self) -> &str {
        "cumulative utilities under complete, one-sided and double-sided incomplete information"
    }
    fn run(&self, args: &ExperimentArgs) -> Result<ExperimentOutput, ExperimentError> {
        let x0s: Vec<usize> = (0..args.game.stage(0).num_states()).collect();
        let rows = compare_information_structures(&args.game, &x0s, &args.pbne)?;
        Ok(ExperimentOutput {
            converged: rows.iter().all(|r| r.converged),
            table: compare_table(&args.game, &rows),
        })
    }
}

struct Rollout;

impl Experiment for Rollout {
    fn name(&self) -> &str {
        "rollout"
    }
    fn summary(&self) -> &str {
        "Monte-Carlo play of the equilibrium from the initial state"
    }
    fn run(&self, args: &ExperimentArgs) -> Result<ExperimentOutput, ExperimentError> {
        check_x0(&args.game, args.x0)?;
        let report = solve_pbne(&args.game, args.x0, &args.pbne)?;
        let spec = RolloutSpec {
            episodes: args.episodes,
            seed: args.seed,
            x0: args.x0,
            sampling: args.sampling,
        };
        let stats = rollout(&args.game, &report.strategies, &report.beliefs, &spec)?;
        Ok(ExperimentOutput {
            table: rollout_table(&args.game, &stats),
            converged: report.converged,
        })
    }
}

#[derive(Clone, Default)]
pub struct ExperimentRegistry {
    entries: BTreeMap<String, Arc<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = Self::default();
        reg.register(Arc::new(SweepBelief));
        reg.register(Arc::new(SweepSensitivity));
        reg.register(Arc::new(Posterior));
        reg.register(Arc::new(StateDist));
        reg.register(Arc::new(CompareInfo));
        reg.register(Arc::new(Rollout));
        reg
    }

    pub fn builtin() -> &'static ExperimentRegistry {
        static REGISTRY: OnceLock<ExperimentRegistry> = OnceLock::new();
        REGISTRY.get_or_init(Self::with_builtins)
    }

    pub fn register(&mut self, experiment: Arc<dyn Experiment>) {
        self.entries.insert(experiment.name().to_string(), experiment);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Experiment>> {
        self.entries.get(name).cloned()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn run(&self, name: &str, args: &ExperimentArgs) -> Result<ExperimentOutput, ExperimentError> {
        self.get(name)
            .ok_or_else(|| ExperimentError::UnknownExperiment(name.to_string()))?
            .run(args)
    }
}
