//! Per-player tables indexed by `(stage, state, own type)`: behavioral
//! strategies, beliefs over the opponent's type, and values-to-go.

use serde::Serialize;

use crate::game::{distribution_problem, MultiStageGame, Player};

/// `[stage][state][own type]` → a probability vector.
type Layered = Vec<Vec<Vec<Vec<f64>>>>;

fn layered(game: &MultiStageGame, player: Player, mut entry: impl FnMut(usize, usize, usize) -> Vec<f64>) -> Layered {
    (0..game.num_stages())
        .map(|k| {
            (0..game.stage(k).num_states())
                .map(|x| (0..game.num_types(player)).map(|t| entry(k, x, t)).collect())
                .collect()
        })
        .collect()
}

fn sup_distance(a: &[Layered; 2], b: &[Layered; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        for (sa, sb) in pa.iter().zip(pb) {
            for (xa, xb) in sa.iter().zip(sb) {
                for (ta, tb) in xa.iter().zip(xb) {
                    for (va, vb) in ta.iter().zip(tb) {
                        worst = worst.max((va - vb).abs());
                    }
                }
            }
        }
    }
    worst
}

fn check_layered(tables: &[Layered; 2], game: &MultiStageGame, what: &str, width: impl Fn(usize, Player) -> usize) -> Vec<String> {
    let mut problems = Vec::new();
    for player in Player::ALL {
        let table = &tables[player.index()];
        if table.len() != game.num_stages() {
            problems.push(format!("{what} for player {player}: wrong stage count"));
            continue;
        }
        for (k, stage) in table.iter().enumerate() {
            if stage.len() != game.stage(k).num_states() {
                problems.push(format!("{what} for player {player}, stage {k}: wrong state count"));
                continue;
            }
            for (x, by_type) in stage.iter().enumerate() {
                if by_type.len() != game.num_types(player) {
                    problems.push(format!("{what} for player {player}, stage {k}, state {x}: wrong type count"));
                    continue;
                }
                for (t, dist) in by_type.iter().enumerate() {
                    if dist.len() != width(k, player) {
                        problems.push(format!("{what} ({player},{k},{x},{t}): wrong length"));
                    } else if let Some(msg) = distribution_problem(dist) {
                        problems.push(format!("{what} ({player},{k},{x},{t}): {msg}"));
                    }
                }
            }
        }
    }
    problems
}

/// Behavioral strategies `σ_i^k(a | x, θ_i)` for both players.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyProfile {
    players: [Layered; 2],
}

impl StrategyProfile {
    pub fn from_fn(game: &MultiStageGame, mut entry: impl FnMut(Player, usize, usize, usize) -> Vec<f64>) -> Self {
        let players = Player::ALL.map(|p| layered(game, p, |k, x, t| entry(p, k, x, t)));
        StrategyProfile { players }
    }

    pub fn uniform(game: &MultiStageGame) -> Self {
        Self::from_fn(game, |p, k, _, _| {
            let n = game.stage(k).num_actions(p);
            vec![1.0 / n as f64; n]
        })
    }

    /// Every agent plays its first action.
    pub fn first_action(game: &MultiStageGame) -> Self {
        Self::from_fn(game, |p, k, _, _| {
            let mut v = vec![0.0; game.stage(k).num_actions(p)];
            v[0] = 1.0;
            v
        })
    }

    #[inline]
    pub fn get(&self, player: Player, k: usize, x: usize, own_type: usize) -> &[f64] {
        &self.players[player.index()][k][x][own_type]
    }

    pub fn set(&mut self, player: Player, k: usize, x: usize, own_type: usize, dist: Vec<f64>) {
        self.players[player.index()][k][x][own_type] = dist;
    }

    /// Problems with shape or normalization; empty when valid for `game`.
    pub fn check(&self, game: &MultiStageGame) -> Vec<String> {
        check_layered(&self.players, game, "strategy", |k, p| game.stage(k).num_actions(p))
    }

    pub fn sup_distance(&self, other: &StrategyProfile) -> f64 {
        sup_distance(&self.players, &other.players)
    }
}

/// Beliefs `b_i^k(θ_j | x, θ_i)` for both players.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefTable {
    players: [Layered; 2],
}

impl BeliefTable {
    pub fn from_fn(game: &MultiStageGame, mut entry: impl FnMut(Player, usize, usize, usize) -> Vec<f64>) -> Self {
        let players = Player::ALL.map(|p| layered(game, p, |k, x, t| entry(p, k, x, t)));
        BeliefTable { players }
    }

    /// Every slice equal to the game's prior for that player and own type.
    pub fn from_priors(game: &MultiStageGame) -> Self {
        Self::from_fn(game, |p, _, _, t| game.prior(p, t).to_vec())
    }

    pub fn uniform(game: &MultiStageGame) -> Self {
        Self::from_fn(game, |p, _, _, _| {
            let n = game.num_types(p.opponent());
            vec![1.0 / n as f64; n]
        })
    }

    #[inline]
    pub fn slice(&self, player: Player, k: usize, x: usize, own_type: usize) -> &[f64] {
        &self.players[player.index()][k][x][own_type]
    }

    pub fn set(&mut self, player: Player, k: usize, x: usize, own_type: usize, dist: Vec<f64>) {
        self.players[player.index()][k][x][own_type] = dist;
    }

    pub fn check(&self, game: &MultiStageGame) -> Vec<String> {
        check_layered(&self.players, game, "belief", |_, p| game.num_types(p.opponent()))
    }

    /// Largest absolute entry-wise difference.
    pub fn sup_distance(&self, other: &BeliefTable) -> f64 {
        sup_distance(&self.players, &other.players)
    }

    /// Entry-wise `weight * self + (1 - weight) * other`.
    pub fn blend(&self, other: &BeliefTable, weight: f64) -> BeliefTable {
        let mut out = self.clone();
        for (po, pb) in out.players.iter_mut().zip(&other.players) {
            for (so, sb) in po.iter_mut().zip(pb) {
                for (xo, xb) in so.iter_mut().zip(sb) {
                    for (to, tb) in xo.iter_mut().zip(xb) {
                        for (vo, vb) in to.iter_mut().zip(tb) {
                            *vo = weight * *vo + (1.0 - weight) * vb;
                        }
                    }
                }
            }
        }
        out
    }
}

/// Values-to-go `V_i^k(x, θ_i)` for stages `0..=K`; the virtual layer
/// `K + 1` is identically zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTable {
    /// `[player][stage][state][own type]`
    layers: [Vec<Vec<Vec<f64>>>; 2],
}

impl ValueTable {
    pub fn zeros(game: &MultiStageGame) -> Self {
        let layers = Player::ALL.map(|p| {
            (0..game.num_stages())
                .map(|k| vec![vec![0.0; game.num_types(p)]; game.stage(k).num_states()])
                .collect()
        });
        ValueTable { layers }
    }

    pub fn horizon(&self) -> usize {
        self.layers[0].len().saturating_sub(1)
    }

    /// `V_i^k(x, θ_i)`; returns exactly zero for `k = K + 1`.
    #[inline]
    pub fn value(&self, player: Player, k: usize, x: usize, own_type: usize) -> f64 {
        match self.layers[player.index()].get(k) {
            Some(layer) => layer[x][own_type],
            None => 0.0,
        }
    }

    pub fn set(&mut self, player: Player, k: usize, x: usize, own_type: usize, value: f64) {
        self.layers[player.index()][k][x][own_type] = value;
    }

    pub fn stage_layer(&self, player: Player, k: usize) -> &[Vec<f64>] {
        &self.layers[player.index()][k]
    }

    pub fn sup_distance(&self, other: &ValueTable) -> f64 {
        let mut worst: f64 = 0.0;
        for (pa, pb) in self.layers.iter().zip(&other.layers) {
            for (ka, kb) in pa.iter().zip(pb) {
                for (xa, xb) in ka.iter().zip(kb) {
                    for (a, b) in xa.iter().zip(xb) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
        worst
    }
}
