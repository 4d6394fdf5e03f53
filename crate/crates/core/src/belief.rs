//! Bayesian updates of type beliefs.
//!
//! Two update rules are provided: the history-based rule, which conditions on
//! the observed action pair, and the Markov rule, which conditions only on the
//! observed state transition and therefore aggregates every action pair that
//! produces it. [`forward_beliefs`] runs the Markov rule over a whole game.

use serde::Serialize;

use crate::error::BeliefError;
use crate::game::{MultiStageGame, Player};
use crate::tables::{BeliefTable, StrategyProfile};

/// Renormalize a slice when its mass drifts further than this from one.
const DRIFT_TOL: f64 = 1e-12;

/// Two predecessor posteriors differing by more than this are reported.
const DISAGREEMENT_TOL: f64 = 1e-12;

/// Result of one belief update.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub posterior: Vec<f64>,
    /// Set when the Bayes denominator was zero and the stage-0 prior was used.
    pub fallback: bool,
}

/// Observed action pairs `(a_1^t, a_2^t)` for stages `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    pairs: Vec<(usize, usize)>,
}

impl History {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        History { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn push(&mut self, a1: usize, a2: usize) {
        self.pairs.push((a1, a2));
    }
}

fn own_and_opponent(player: Player, a1: usize, a2: usize) -> (usize, usize) {
    match player {
        Player::One => (a1, a2),
        Player::Two => (a2, a1),
    }
}

fn normalize_or_fallback(mut weights: Vec<f64>, prior: &[f64]) -> Update {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in &mut weights {
            *w /= total;
        }
        Update {
            posterior: weights,
            fallback: false,
        }
    } else {
        Update {
            posterior: prior.to_vec(),
            fallback: true,
        }
    }
}

/// One step of the history-based update after observing `(a1, a2)` at
/// `(k, x)`.
#[allow(clippy::too_many_arguments)]
pub fn history_step(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    k: usize,
    x: usize,
    player: Player,
    own_type: usize,
    belief: &[f64],
    observed: (usize, usize),
) -> Update {
    let opp = player.opponent();
    let (own_action, opp_action) = own_and_opponent(player, observed.0, observed.1);
    let own_prob = strategies.get(player, k, x, own_type)[own_action];
    let weights = belief
        .iter()
        .enumerate()
        .map(|(tj, b)| own_prob * strategies.get(opp, k, x, tj)[opp_action] * b)
        .collect();
    normalize_or_fallback(weights, game.prior(player, own_type))
}

/// Posterior over the opponent's type after the full `history`, starting
/// from the prior at `x0`. A zero denominator at any step resets the
/// belief to the prior and sets the fallback flag.
pub fn history_update(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    player: Player,
    own_type: usize,
    x0: usize,
    history: &History,
) -> Result<Update, BeliefError> {
    if history.len() > game.horizon() {
        return Err(BeliefError::HistoryTooLong {
            len: history.len(),
            horizon: game.horizon(),
        });
    }
    let mut belief = game.prior(player, own_type).to_vec();
    let mut fallback = false;
    let mut x = x0;
    for (k, &(a1, a2)) in history.pairs().iter().enumerate() {
        let next = game
            .transition(k, x, a1, a2)
            .map_err(|source| BeliefError::InvalidAction { stage: k, source })?;
        let step = history_step(game, strategies, k, x, player, own_type, &belief, (a1, a2));
        fallback |= step.fallback;
        belief = step.posterior;
        x = next;
    }
    Ok(Update {
        posterior: belief,
        fallback,
    })
}

/// `Pr(x_next | θ_j, x, θ_i)` for every opponent type `θ_j`: the total
/// probability of the action pairs leading from `x` to `x_next`.
pub fn transition_likelihoods(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    k: usize,
    x: usize,
    x_next: usize,
    player: Player,
    own_type: usize,
) -> Vec<f64> {
    let stage = game.stage(k);
    let opp = player.opponent();
    let own = strategies.get(player, k, x, own_type);
    (0..game.num_types(opp))
        .map(|tj| {
            let other = strategies.get(opp, k, x, tj);
            let mut total = 0.0;
            for a1 in 0..stage.num_actions(Player::One) {
                for a2 in 0..stage.num_actions(Player::Two) {
                    if stage.next_state(x, a1, a2) == x_next {
                        let (ai, aj) = own_and_opponent(player, a1, a2);
                        total += own[ai] * other[aj];
                    }
                }
            }
            total
        })
        .collect()
}

/// Scalar form of [`transition_likelihoods`] for one opponent type.
#[allow(clippy::too_many_arguments)]
pub fn transition_likelihood(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    k: usize,
    x: usize,
    x_next: usize,
    player: Player,
    own_type: usize,
    opp_type: usize,
) -> f64 {
    transition_likelihoods(game, strategies, k, x, x_next, player, own_type)[opp_type]
}

/// Markov belief update across the transition `x → x_next` at stage `k`.
#[allow(clippy::too_many_arguments)]
pub fn markov_update(
    game: &MultiStageGame,
    strategies: &StrategyProfile,
    k: usize,
    x: usize,
    x_next: usize,
    player: Player,
    own_type: usize,
    belief: &[f64],
) -> Update {
    let lik = transition_likelihoods(game, strategies, k, x, x_next, player, own_type);
    let weights = lik.iter().zip(belief).map(|(l, b)| l * b).collect();
    normalize_or_fallback(weights, game.prior(player, own_type))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BeliefDiagnostic {
    /// The Bayes denominator vanished; the prior was used instead.
    ZeroDenominator {
        player: Player,
        stage: usize,
        state: usize,
        own_type: usize,
    },
    /// Several reachable predecessors produced different posteriors at a
    /// shared successor; they were averaged by reach probability.
    PredecessorDisagreement {
        player: Player,
        stage: usize,
        state: usize,
        own_type: usize,
        spread: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub beliefs: BeliefTable,
    pub diagnostics: Vec<BeliefDiagnostic>,
}

/// Forward Markov belief propagation from the initial state `x0`.
///
/// Stage-0 slices equal the game's priors at every state. A stage-`k+1`
/// state reached from several predecessors gets the reach-weighted average
/// of their posteriors, where reach is computed under `strategies` with the
/// opponent's type drawn from the stage-0 prior. States unreachable from
/// `x0` keep the prior.
pub fn forward_beliefs(game: &MultiStageGame, strategies: &StrategyProfile, x0: usize) -> BeliefTable {
    forward_beliefs_with_diagnostics(game, strategies, x0).beliefs
}

pub fn forward_beliefs_with_diagnostics(game: &MultiStageGame, strategies: &StrategyProfile, x0: usize) -> ForwardPass {
    let mut beliefs = BeliefTable::from_priors(game);
    let mut diagnostics = Vec::new();
    for player in Player::ALL {
        let opp_types = game.num_types(player.opponent());
        for own in 0..game.num_types(player) {
            let prior = game.prior(player, own).to_vec();
            // reach[x][θ_j] = Pr(x^k = x | θ_i, θ_j)
            let mut reach = vec![vec![0.0; opp_types]; game.stage(0).num_states()];
            reach[x0] = vec![1.0; opp_types];
            for k in 0..game.horizon() {
                let next_count = game.stage(k + 1).num_states();
                let mut next_reach = vec![vec![0.0; opp_types]; next_count];
                for x_next in 0..next_count {
                    let mut weighted = vec![0.0; opp_types];
                    let mut total_weight = 0.0;
                    let mut posteriors: Vec<Vec<f64>> = Vec::new();
                    for (x, reach_x) in reach.iter().enumerate() {
                        if reach_x.iter().all(|r| *r == 0.0) {
                            continue;
                        }
                        let lik = transition_likelihoods(game, strategies, k, x, x_next, player, own);
                        for tj in 0..opp_types {
                            next_reach[x_next][tj] += reach_x[tj] * lik[tj];
                        }
                        let weight: f64 = (0..opp_types).map(|tj| prior[tj] * reach_x[tj] * lik[tj]).sum();
                        if weight <= 0.0 {
                            continue;
                        }
                        let update = markov_update(game, strategies, k, x, x_next, player, own, beliefs.slice(player, k, x, own));
                        if update.fallback {
                            diagnostics.push(BeliefDiagnostic::ZeroDenominator {
                                player,
                                stage: k + 1,
                                state: x_next,
                                own_type: own,
                            });
                        }
                        for tj in 0..opp_types {
                            weighted[tj] += weight * update.posterior[tj];
                        }
                        total_weight += weight;
                        posteriors.push(update.posterior);
                    }
                    if total_weight <= 0.0 {
                        continue;
                    }
                    let spread = posteriors
                        .iter()
                        .flat_map(|a| posteriors.iter().map(move |b| sup_diff(a, b)))
                        .fold(0.0, f64::max);
                    if spread > DISAGREEMENT_TOL {
                        diagnostics.push(BeliefDiagnostic::PredecessorDisagreement {
                            player,
                            stage: k + 1,
                            state: x_next,
                            own_type: own,
                            spread,
                        });
                    }
                    let mut slice: Vec<f64> = weighted.iter().map(|w| w / total_weight).collect();
                    renormalize(&mut slice);
                    beliefs.set(player, k + 1, x_next, own, slice);
                }
                reach = next_reach;
            }
        }
    }
    ForwardPass { beliefs, diagnostics }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn renormalize(slice: &mut [f64]) {
    let total: f64 = slice.iter().sum();
    if (total - 1.0).abs() > DRIFT_TOL && total > 0.0 {
        for p in slice.iter_mut() {
            *p /= total;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Stage;

    /// One transition stage with two actions per player; player 2 action
    /// determines the successor, player 1 action is ignored.
    fn signal_game() -> MultiStageGame {
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut s0 = Stage::new(names(&["x"]), [names(&["p", "q"]), names(&["a", "b"])], [2, 2]);
        for a1 in 0..2 {
            for a2 in 0..2 {
                s0.set_transition(0, a1, a2, a2);
            }
        }
        let s1 = Stage::new(names(&["ya", "yb"]), [names(&["p"]), names(&["a"])], [2, 2]);
        MultiStageGame::new(
            [names(&["h", "l"]), names(&["bad", "good"])],
            vec![s0, s1],
            [vec![vec![0.5, 0.5]; 2], vec![vec![0.5, 0.5]; 2]],
        )
        .unwrap()
    }

    fn revealing_profile(game: &MultiStageGame) -> StrategyProfile {
        StrategyProfile::from_fn(game, |p, k, _, t| match (p, k) {
            (Player::Two, 0) if t == 0 => vec![0.8, 0.2],
            (Player::Two, 0) => vec![0.2, 0.8],
            _ => {
                let n = game.stage(k).num_actions(p);
                vec![1.0 / n as f64; n]
            }
        })
    }

    #[test]
    fn bayes_rule_arithmetic() {
        let game = signal_game();
        let sigma = revealing_profile(&game);
        let h = History::new(vec![(0, 0)]);
        let up = history_update(&game, &sigma, Player::One, 0, 0, &h).unwrap();
        assert!((up.posterior[0] - 0.8).abs() < 1e-15);
        assert!((up.posterior[1] - 0.2).abs() < 1e-15);
        assert!(!up.fallback);
    }

    #[test]
    fn type_independent_strategies_leave_belief_unchanged() {
        let game = signal_game();
        let sigma = StrategyProfile::uniform(&game);
        let slice = [0.3, 0.7];
        let up = markov_update(&game, &sigma, 0, 0, 1, Player::One, 1, &slice);
        assert!((up.posterior[0] - 0.3).abs() < 1e-15);
        let up = history_step(&game, &sigma, 0, 0, Player::Two, 0, &slice, (1, 0));
        assert!((up.posterior[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn point_mass_is_absorbing() {
        let game = signal_game();
        let sigma = revealing_profile(&game);
        let up = markov_update(&game, &sigma, 0, 0, 1, Player::One, 0, &[1.0, 0.0]);
        assert_eq!(up.posterior, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_denominator_falls_back_to_prior() {
        let mut game = signal_game();
        game.set_prior(Player::One, 0, vec![0.9, 0.1]);
        let sigma = StrategyProfile::from_fn(&game, |p, k, _, _| {
            let mut v = vec![0.0; game.stage(k).num_actions(p)];
            v[0] = 1.0;
            v
        });
        // player 2 never plays b, so yb is unreachable
        let up = markov_update(&game, &sigma, 0, 0, 1, Player::One, 0, &[0.5, 0.5]);
        assert!(up.fallback);
        assert_eq!(up.posterior, vec![0.9, 0.1]);
        assert_eq!(transition_likelihood(&game, &sigma, 0, 0, 1, Player::One, 0, 0), 0.0);
    }

    #[test]
    fn forward_pass_matches_direct_bayes() {
        let game = signal_game();
        let sigma = revealing_profile(&game);
        let table = forward_beliefs(&game, &sigma, 0);
        assert_eq!(table.slice(Player::One, 0, 0, 0), &[0.5, 0.5]);
        let s = table.slice(Player::One, 1, 0, 1);
        assert!((s[0] - 0.8).abs() < 1e-15 && (s[1] - 0.2).abs() < 1e-15);
        // player 2 learns nothing from player 1's uniform play
        assert_eq!(table.slice(Player::Two, 1, 1, 0), &[0.5, 0.5]);
        assert!(table.check(&game).is_empty());
    }

    #[test]
    fn history_longer_than_horizon_is_rejected() {
        let game = signal_game();
        let sigma = StrategyProfile::uniform(&game);
        let h = History::new(vec![(0, 0), (0, 0)]);
        assert!(matches!(
            history_update(&game, &sigma, Player::One, 0, 0, &h),
            Err(BeliefError::HistoryTooLong { .. })
        ));
        let h = History::new(vec![(5, 0)]);
        assert!(matches!(
            history_update(&game, &sigma, Player::One, 0, 0, &h),
            Err(BeliefError::InvalidAction { .. })
        ));
    }
}
