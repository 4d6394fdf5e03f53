//! Random instance generators and brute-force oracles shared by the
//! integration tests. The oracles work from raw payoff lookups and do not
//! call the solver code paths they check.

#![allow(dead_code)]

use bayes_pbne::game::{MultiStageGame, Player, Stage};
use bayes_pbne::static_eq::{StageGameView, TypeStrategies};
use bayes_pbne::tables::{BeliefTable, StrategyProfile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Random distribution with strictly positive entries.
pub fn random_dist(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn point_mass(n: usize, i: usize) -> Vec<f64> {
    (0..n).map(|j| if j == i { 1.0 } else { 0.0 }).collect()
}

/// Payoff generator used by the random constructors.
#[derive(Debug, Clone, Copy)]
pub enum Payoffs {
    /// Integers in `[-lim, lim]`.
    Integer(i32),
    /// Uniform reals in `[-lim, lim]`; ties have probability zero.
    Real(f64),
}

impl Payoffs {
    pub fn draw(self, rng: &mut impl Rng) -> f64 {
        match self {
            Payoffs::Integer(lim) => rng.random_range(-lim..=lim) as f64,
            Payoffs::Real(lim) => rng.random_range(-lim..=lim),
        }
    }
}

pub fn random_view(rng: &mut impl Rng, actions: [usize; 2], types: [usize; 2], payoffs: Payoffs) -> StageGameView {
    let beliefs = [
        (0..types[0]).map(|_| random_dist(rng, types[1])).collect(),
        (0..types[1]).map(|_| random_dist(rng, types[0])).collect(),
    ];
    let table: Vec<[f64; 2]> = (0..actions[0] * actions[1] * types[0] * types[1])
        .map(|_| [payoffs.draw(rng), payoffs.draw(rng)])
        .collect();
    StageGameView::from_fn(actions, types, beliefs, |a1, a2, t1, t2| {
        table[((a1 * actions[1] + a2) * types[0] + t1) * types[1] + t2]
    })
}

pub struct GameShape {
    pub horizon: usize,
    pub max_states: usize,
    pub actions: std::ops::RangeInclusive<usize>,
    pub types: [usize; 2],
    pub payoffs: Payoffs,
}

pub fn random_game(rng: &mut impl Rng, shape: &GameShape) -> MultiStageGame {
    let n_states: Vec<usize> = (0..=shape.horizon)
        .map(|k| if k == 0 { 1 } else { rng.random_range(1..=shape.max_states) })
        .collect();
    let mut stages = Vec::new();
    for k in 0..=shape.horizon {
        let na = [rng.random_range(shape.actions.clone()), rng.random_range(shape.actions.clone())];
        let mut stage = Stage::new(
            labels(&format!("s{k}_"), n_states[k]),
            [labels("a", na[0]), labels("b", na[1])],
            shape.types,
        );
        for x in 0..n_states[k] {
            for a1 in 0..na[0] {
                for a2 in 0..na[1] {
                    for t1 in 0..shape.types[0] {
                        for t2 in 0..shape.types[1] {
                            stage.set_utility(x, a1, a2, t1, t2, [shape.payoffs.draw(rng), shape.payoffs.draw(rng)]);
                        }
                    }
                    if k < shape.horizon {
                        stage.set_transition(x, a1, a2, rng.random_range(0..n_states[k + 1]));
                    }
                }
            }
        }
        stages.push(stage);
    }
    let priors = [
        (0..shape.types[0]).map(|_| random_dist(rng, shape.types[1])).collect(),
        (0..shape.types[1]).map(|_| random_dist(rng, shape.types[0])).collect(),
    ];
    MultiStageGame::new([labels("t", shape.types[0]), labels("u", shape.types[1])], stages, priors).expect("generated game is valid")
}

pub fn random_profile(rng: &mut impl Rng, game: &MultiStageGame) -> StrategyProfile {
    StrategyProfile::from_fn(game, |p, k, _, _| random_dist(rng, game.stage(k).num_actions(p)))
}

/// Random pure profile, possibly different per type.
pub fn random_pure_profile(rng: &mut impl Rng, game: &MultiStageGame) -> StrategyProfile {
    StrategyProfile::from_fn(game, |p, k, _, _| {
        let n = game.stage(k).num_actions(p);
        point_mass(n, rng.random_range(0..n))
    })
}

pub fn random_beliefs(rng: &mut impl Rng, game: &MultiStageGame) -> BeliefTable {
    BeliefTable::from_fn(game, |p, _, _, _| random_dist(rng, game.num_types(p.opponent())))
}

/// Largest pure-deviation gain, computed from raw payoff lookups.
pub fn brute_force_gain(view: &StageGameView, s: &[TypeStrategies; 2]) -> f64 {
    let [n1, n2] = [view.num_actions(Player::One), view.num_actions(Player::Two)];
    let [m1, m2] = [view.num_types(Player::One), view.num_types(Player::Two)];
    let mut worst: f64 = 0.0;
    for t1 in 0..m1 {
        let payoff = |a1: usize| -> f64 {
            let mut u = 0.0;
            for t2 in 0..m2 {
                for a2 in 0..n2 {
                    u += view.belief(Player::One, t1)[t2] * s[1][t2][a2] * view.payoff(a1, a2, t1, t2, Player::One);
                }
            }
            u
        };
        let current: f64 = (0..n1).map(|a| s[0][t1][a] * payoff(a)).sum();
        for a in 0..n1 {
            worst = worst.max(payoff(a) - current);
        }
    }
    for t2 in 0..m2 {
        let payoff = |a2: usize| -> f64 {
            let mut u = 0.0;
            for t1 in 0..m1 {
                for a1 in 0..n1 {
                    u += view.belief(Player::Two, t2)[t1] * s[0][t1][a1] * view.payoff(a1, a2, t1, t2, Player::Two);
                }
            }
            u
        };
        let current: f64 = (0..n2).map(|a| s[1][t2][a] * payoff(a)).sum();
        for a in 0..n2 {
            worst = worst.max(payoff(a) - current);
        }
    }
    worst
}

/// Solves the square system `m x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
pub fn solve_linear(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n)).map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect()).collect()
}

/// Mixed strategy over `n` actions with support `supp` making the
/// opponent indifferent across `other` under `payoff[own][opp]`, which is
/// indexed from the opponent's point of view.
fn indifference(n: usize, supp: &[usize], other: &[usize], payoff: impl Fn(usize, usize) -> f64) -> Option<Vec<f64>> {
    // unknowns: probabilities on supp, then the opponent's value
    let k = supp.len();
    let mut m = Vec::new();
    let mut b = Vec::new();
    for &o in other {
        let mut row: Vec<f64> = supp.iter().map(|&s| payoff(o, s)).collect();
        row.push(-1.0);
        m.push(row);
        b.push(0.0);
    }
    let mut row = vec![1.0; k];
    row.push(0.0);
    m.push(row);
    b.push(1.0);
    let sol = solve_linear(m, b)?;
    let mut x = vec![0.0; n];
    for (i, &s) in supp.iter().enumerate() {
        if sol[i] < -1e-12 {
            return None;
        }
        x[s] = sol[i].max(0.0);
    }
    Some(x)
}

/// All Nash equilibria of a nondegenerate bimatrix game by equal-size
/// support enumeration.
pub fn bimatrix_equilibria(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (a.len(), a[0].len());
    let mut out = Vec::new();
    for i_set in subsets(m) {
        for j_set in subsets(n) {
            if i_set.len() != j_set.len() {
                continue;
            }
            // y makes player 1 indifferent over I; x makes player 2 indifferent over J
            let Some(y) = indifference(n, &j_set, &i_set, |i, j| a[i][j]) else { continue };
            let Some(x) = indifference(m, &i_set, &j_set, |j, i| b[i][j]) else { continue };
            let u1: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i][j] * y[j]).sum()).collect();
            let u2: Vec<f64> = (0..n).map(|j| (0..m).map(|i| b[i][j] * x[i]).sum()).collect();
            let best1 = u1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let best2 = u2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ok1 = i_set.iter().all(|&i| u1[i] >= best1 - 1e-9);
            let ok2 = j_set.iter().all(|&j| u2[j] >= best2 - 1e-9);
            if ok1 && ok2 {
                out.push((x, y));
            }
        }
    }
    out
}

/// Literal expected cumulative utility by recursion over stages: the
/// opponent's type is drawn afresh from the current belief slice at every
/// stage.
pub fn cumulative_oracle(
    game: &MultiStageGame,
    s: &StrategyProfile,
    b: &BeliefTable,
    k: usize,
    x: usize,
    player: Player,
    own: usize,
) -> f64 {
    let stage = game.stage(k);
    let mut total = 0.0;
    for (tj, w) in b.slice(player, k, x, own).iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let (t1, t2) = match player {
            Player::One => (own, tj),
            Player::Two => (tj, own),
        };
        for a1 in 0..stage.num_actions(Player::One) {
            for a2 in 0..stage.num_actions(Player::Two) {
                let p = s.get(Player::One, k, x, t1)[a1] * s.get(Player::Two, k, x, t2)[a2];
                if p == 0.0 {
                    continue;
                }
                let mut u = stage.utility(x, a1, a2, t1, t2, player);
                if k < game.horizon() {
                    u += cumulative_oracle(game, s, b, k + 1, stage.next_state(x, a1, a2), player, own);
                }
                total += w * p * u;
            }
        }
    }
    total
}

/// Probability of each final state with both types fixed, by enumerating
/// every action path.
pub fn path_enumeration(game: &MultiStageGame, s: &StrategyProfile, x0: usize, types: [usize; 2]) -> Vec<f64> {
    fn go(game: &MultiStageGame, s: &StrategyProfile, k: usize, x: usize, p: f64, types: [usize; 2], out: &mut [f64]) {
        if k > game.horizon() {
            return;
        }
        if k == game.horizon() {
            out[x] += p;
            return;
        }
        let stage = game.stage(k);
        for a1 in 0..stage.num_actions(Player::One) {
            for a2 in 0..stage.num_actions(Player::Two) {
                let q = s.get(Player::One, k, x, types[0])[a1] * s.get(Player::Two, k, x, types[1])[a2];
                go(game, s, k + 1, stage.next_state(x, a1, a2), p * q, types, out);
            }
        }
    }
    let mut out = vec![0.0; game.stage(game.horizon()).num_states()];
    go(game, s, 0, x0, 1.0, types, &mut out);
    out
}
