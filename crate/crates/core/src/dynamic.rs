//! Backward induction over stages under a fixed belief table, exact
//! evaluation of expected cumulative utility, and a best-response dynamic
//! program used to measure how far a profile is from sequential rationality.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::DynamicError;
use crate::game::{MultiStageGame, Player};
use crate::static_eq::{solve_sbne, SolverConfig, StageGameView, StaticEquilibrium};
use crate::tables::{BeliefTable, StrategyProfile, ValueTable};

/// Equilibrium of the multi-stage game for a given belief table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicEquilibrium {
    pub strategies: StrategyProfile,
    pub values: ValueTable,
    /// Certificate residual of the stage solve, `[stage][state]`.
    pub residuals: Vec<Vec<f64>>,
}

impl DynamicEquilibrium {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// The one-shot game at `(k, x)`: stage utility plus the value of the
/// successor state, with the stage-`k` belief slices at `x`.
pub fn stage_view(game: &MultiStageGame, beliefs: &BeliefTable, values: &ValueTable, k: usize, x: usize) -> StageGameView {
    let stage = game.stage(k);
    let types = [game.num_types(Player::One), game.num_types(Player::Two)];
    let slices = Player::ALL.map(|p| (0..types[p.index()]).map(|t| beliefs.slice(p, k, x, t).to_vec()).collect());
    let last = k == game.horizon();
    StageGameView::from_fn(
        [stage.num_actions(Player::One), stage.num_actions(Player::Two)],
        types,
        slices,
        |a1, a2, t1, t2| {
            let mut u = [
                stage.utility(x, a1, a2, t1, t2, Player::One),
                stage.utility(x, a1, a2, t1, t2, Player::Two),
            ];
            if !last {
                let next = stage.next_state(x, a1, a2);
                u[0] += values.value(Player::One, k + 1, next, t1);
                u[1] += values.value(Player::Two, k + 1, next, t2);
            }
            u
        },
    )
}

/// Solves every state of every stage from the last stage backwards,
/// including states that can not be reached from any initial state.
pub fn backward_pass(game: &MultiStageGame, beliefs: &BeliefTable, config: &SolverConfig) -> Result<DynamicEquilibrium, DynamicError> {
    let mut strategies = StrategyProfile::first_action(game);
    let mut values = ValueTable::zeros(game);
    let mut residuals = vec![Vec::new(); game.num_stages()];
    for k in (0..game.num_stages()).rev() {
        let solved: Vec<StaticEquilibrium> = (0..game.stage(k).num_states())
            .into_par_iter()
            .map(|x| {
                solve_sbne(&stage_view(game, beliefs, &values, k, x), config)
                    .map_err(|source| DynamicError::Solver { stage: k, state: x, source })
            })
            .collect::<Result<_, _>>()?;
        for (x, eq) in solved.into_iter().enumerate() {
            for p in Player::ALL {
                for t in 0..game.num_types(p) {
                    strategies.set(p, k, x, t, eq.strategies[p.index()][t].clone());
                    values.set(p, k, x, t, eq.values[p.index()][t]);
                }
            }
            residuals[k].push(eq.residual);
        }
    }
    Ok(DynamicEquilibrium {
        strategies,
        values,
        residuals,
    })
}

/// Expected payoff to `player` of type `own` at `(k, x)` when it plays `own_action`,
/// the opponent follows `strategies`, its type is drawn from the belief slice, and
/// `continuation` gives the value of each successor.
#[allow(clippy::too_many_arguments)]
fn action_value(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    beliefs: &BeliefTable,
    k: usize,
    x: usize,
    player: Player,
    own: usize,
    own_action: usize,
    continuation: &dyn Fn(usize) -> f64,
) -> f64 {
    let stage = game.stage(k);
    let opp = player.opponent();
    let last = k == game.horizon();
    let mut total = 0.0;
    for (tj, b) in beliefs.slice(player, k, x, own).iter().enumerate() {
        if *b == 0.0 {
            continue;
        }
        let opp_dist = strategies.get(opp, k, x, tj);
        let mut inner = 0.0;
        for (aj, q) in opp_dist.iter().enumerate() {
            if *q == 0.0 {
                continue;
            }
            let (a1, a2, t1, t2) = match player {
                Player::One => (own_action, aj, own, tj),
                Player::Two => (aj, own_action, tj, own),
            };
            let mut u = stage.utility(x, a1, a2, t1, t2, player);
            if !last {
                u += continuation(stage.next_state(x, a1, a2));
            }
            inner += q * u;
        }
        total += b * inner;
    }
    total
}

/// Expected cumulative utility of `player` from every `(k, x, own type)`
/// onwards, `[stage][state][own type]`. At each stage the opponent's type
/// is weighted by that stage's belief slice at the current state.
pub fn cumulative_utility_table(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    beliefs: &BeliefTable,
    player: Player,
) -> Vec<Vec<Vec<f64>>> {
    let types = game.num_types(player);
    let mut table: Vec<Vec<Vec<f64>>> = vec![Vec::new(); game.num_stages()];
    for k in (0..game.num_stages()).rev() {
        let layer: Vec<Vec<f64>> = (0..game.stage(k).num_states())
            .map(|x| {
                (0..types)
                    .map(|t| {
                        let next = table.get(k + 1);
                        let cont = |xn: usize| next.map_or(0.0, |l| l[xn][t]);
                        strategies
                            .get(player, k, x, t)
                            .iter()
                            .enumerate()
                            .filter(|(_, p)| **p != 0.0)
                            .map(|(a, p)| p * action_value(game, strategies, beliefs, k, x, player, t, a, &cont))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        table[k] = layer;
    }
    table
}

/// Expected cumulative utility of `(player, own)` from `(k0, x)` to the end.
pub fn evaluate_cumulative_utility(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    beliefs: &BeliefTable,
    k0: usize,
    x: usize,
    player: Player,
    own: usize,
) -> f64 {
    cumulative_utility_table(game, strategies, beliefs, player)[k0][x][own]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponseResult {
    pub player: Player,
    /// `[stage][state][own type]`
    pub optimal_values: Vec<Vec<Vec<f64>>>,
    /// Optimal pure action, `[stage][state][own type]`.
    pub policy: Vec<Vec<Vec<usize>>>,
    /// Optimal value minus the value of the candidate strategy.
    pub gains: Vec<Vec<Vec<f64>>>,
}

impl BestResponseResult {
    pub fn max_gain(&self) -> f64 {
        self.gains.iter().flatten().flatten().copied().fold(0.0, f64::max)
    }
}

/// Best response of `player` to the opponent's part of `strategies`, by
/// dynamic programming over `(stage, state)` for each own type.
pub fn best_response_value(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    beliefs: &BeliefTable,
    player: Player,
) -> BestResponseResult {
    let types = game.num_types(player);
    let n = game.num_stages();
    let mut optimal: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
    let mut policy: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    for k in (0..n).rev() {
        let states = game.stage(k).num_states();
        let mut values = vec![vec![0.0; types]; states];
        let mut actions = vec![vec![0; types]; states];
        for x in 0..states {
            for t in 0..types {
                let next = optimal.get(k + 1);
                let cont = |xn: usize| next.map_or(0.0, |l| l[xn][t]);
                let mut best = (0, f64::NEG_INFINITY);
                for a in 0..game.stage(k).num_actions(player) {
                    let v = action_value(game, strategies, beliefs, k, x, player, t, a, &cont);
                    // strict comparison keeps the lowest index on ties
                    if v > best.1 {
                        best = (a, v);
                    }
                }
                actions[x][t] = best.0;
                values[x][t] = best.1;
            }
        }
        optimal[k] = values;
        policy[k] = actions;
    }
    let candidate = cumulative_utility_table(game, strategies, beliefs, player);
    let gains = optimal
        .iter()
        .zip(&candidate)
        .map(|(ok, ck)| ok.iter().zip(ck).map(|(ox, cx)| ox.iter().zip(cx).map(|(o, c)| o - c).collect()).collect())
        .collect();
    BestResponseResult {
        player,
        optimal_values: optimal,
        policy,
        gains,
    }
}

/// Probability of each state at each stage when play starts at `x0` and the
/// types are fixed to `(t1, t2)`, `[stage][state]`.
pub fn reach_probabilities(game: &MultiStageGame, strategies: &StrategyProfile, x0: usize, types: [usize; 2]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(game.num_stages());
    let mut reach = vec![0.0; game.stage(0).num_states()];
    reach[x0] = 1.0;
    for k in 0..game.num_stages() {
        if k > 0 {
            let stage = game.stage(k - 1);
            let mut next = vec![0.0; game.stage(k).num_states()];
            for (x, r) in reach.iter().enumerate() {
                if *r == 0.0 {
                    continue;
                }
                let s1 = strategies.get(Player::One, k - 1, x, types[0]);
                let s2 = strategies.get(Player::Two, k - 1, x, types[1]);
                for (a1, p1) in s1.iter().enumerate() {
                    for (a2, p2) in s2.iter().enumerate() {
                        next[stage.next_state(x, a1, a2)] += r * p1 * p2;
                    }
                }
            }
            reach = next;
        }
        out.push(reach.clone());
    }
    out
}

/// Expected total stage utility of both players from `x0` with the true
/// types fixed to `(t1, t2)`.
pub fn realized_utility(game: &MultiStageGame, strategies: &StrategyProfile, x0: usize, types: [usize; 2]) -> [f64; 2] {
    let reach = reach_probabilities(game, strategies, x0, types);
    let mut total = [0.0; 2];
    for (k, layer) in reach.iter().enumerate() {
        let stage = game.stage(k);
        for (x, r) in layer.iter().enumerate() {
            if *r == 0.0 {
                continue;
            }
            let s1 = strategies.get(Player::One, k, x, types[0]);
            let s2 = strategies.get(Player::Two, k, x, types[1]);
            for (a1, p1) in s1.iter().enumerate() {
                for (a2, p2) in s2.iter().enumerate() {
                    let w = r * p1 * p2;
                    if w == 0.0 {
                        continue;
                    }
                    for p in Player::ALL {
                        total[p.index()] += w * stage.utility(x, a1, a2, types[0], types[1], p);
                    }
                }
            }
        }
    }
    total
}
