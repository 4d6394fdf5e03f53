//! Static Bayesian Nash equilibria of one-shot two-player Bayesian games.
//!
//! Equilibria are found by support enumeration in the agent form, where each
//! `(player, type)` pair is an independent agent. For a fixed support profile
//! the indifference and domination conditions of player one's agents are
//! linear in player two's type-contingent strategies and vice versa, so each
//! profile reduces to two independent linear feasibility problems.

use serde::Serialize;

use crate::error::SolveError;
use crate::game::{distribution_problem, Player};
use crate::lp::{find_feasible, Row};
use crate::selection::{EquilibriumSelector, SelectorRegistry};

/// Type-contingent mixed strategies of one player: `[own type][action]`.
pub type TypeStrategies = Vec<Vec<f64>>;

/// Candidate pairs whose interim deviation gain exceeds this are discarded
/// as numerically spurious.
const ACCEPT_GAIN: f64 = 1e-7;

/// Probabilities below this are treated as zero when pruning supports.
const PRUNE_EPS: f64 = 1e-12;

/// Two equilibria closer than this in sup-norm are the same equilibrium.
const DEDUP_TOL: f64 = 1e-9;

/// Refuse enumerations larger than this many support profiles.
const MAX_PROFILES: usize = 4_000_000;

/// A one-shot Bayesian game: payoffs `Ĵ_i(a1, a2, θ1, θ2)` and each player's
/// belief slice over the opponent's types.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageGameView {
    actions: [usize; 2],
    types: [usize; 2],
    /// `[a1][a2][t1][t2][player]`
    payoffs: Vec<f64>,
    /// `[player][own type][opponent type]`
    beliefs: [Vec<Vec<f64>>; 2],
}

impl StageGameView {
    pub fn from_fn(
        actions: [usize; 2],
        types: [usize; 2],
        beliefs: [Vec<Vec<f64>>; 2],
        mut payoff: impl FnMut(usize, usize, usize, usize) -> [f64; 2],
    ) -> Self {
        let mut payoffs = Vec::with_capacity(actions[0] * actions[1] * types[0] * types[1] * 2);
        for a1 in 0..actions[0] {
            for a2 in 0..actions[1] {
                for t1 in 0..types[0] {
                    for t2 in 0..types[1] {
                        payoffs.extend_from_slice(&payoff(a1, a2, t1, t2));
                    }
                }
            }
        }
        StageGameView {
            actions,
            types,
            payoffs,
            beliefs,
        }
    }

    /// Complete-information bimatrix game (one type per player).
    pub fn bimatrix(payoff1: &[Vec<f64>], payoff2: &[Vec<f64>]) -> Self {
        let actions = [payoff1.len(), payoff1.first().map_or(0, Vec::len)];
        Self::from_fn(actions, [1, 1], [vec![vec![1.0]], vec![vec![1.0]]], |a1, a2, _, _| {
            [payoff1[a1][a2], payoff2[a1][a2]]
        })
    }

    pub fn num_actions(&self, player: Player) -> usize {
        self.actions[player.index()]
    }

    pub fn num_types(&self, player: Player) -> usize {
        self.types[player.index()]
    }

    #[inline]
    pub fn payoff(&self, a1: usize, a2: usize, t1: usize, t2: usize, player: Player) -> f64 {
        let off = ((((a1 * self.actions[1]) + a2) * self.types[0] + t1) * self.types[1] + t2) * 2;
        self.payoffs[off + player.index()]
    }

    /// Payoff to `player` when it plays `own` and the opponent plays `opp`.
    #[inline]
    fn payoff_for(&self, player: Player, own: usize, opp: usize, own_type: usize, opp_type: usize) -> f64 {
        match player {
            Player::One => self.payoff(own, opp, own_type, opp_type, player),
            Player::Two => self.payoff(opp, own, opp_type, own_type, player),
        }
    }

    pub fn belief(&self, player: Player, own_type: usize) -> &[f64] {
        &self.beliefs[player.index()][own_type]
    }

    pub fn with_beliefs(&self, beliefs: [Vec<Vec<f64>>; 2]) -> Self {
        StageGameView {
            beliefs,
            ..self.clone()
        }
    }

    pub fn check(&self) -> Result<(), SolveError> {
        let bad = |m: String| Err(SolveError::MalformedView(m));
        if self.actions.contains(&0) || self.types.contains(&0) {
            return bad("empty action or type set".into());
        }
        if self.payoffs.iter().any(|u| !u.is_finite()) {
            return bad("non-finite payoff".into());
        }
        for player in Player::ALL {
            let slices = &self.beliefs[player.index()];
            if slices.len() != self.num_types(player) {
                return bad(format!("player {player} needs one belief slice per own type"));
            }
            for (t, slice) in slices.iter().enumerate() {
                if slice.len() != self.num_types(player.opponent()) {
                    return bad(format!("belief slice ({player},{t}) has the wrong length"));
                }
                if let Some(msg) = distribution_problem(slice) {
                    return bad(format!("belief slice ({player},{t}): {msg}"));
                }
            }
        }
        Ok(())
    }

    /// Interim expected payoff of each pure action of `(player, own_type)`
    /// against the opponent's type-contingent strategies.
    pub fn interim_action_payoffs(&self, player: Player, own_type: usize, opponent: &[Vec<f64>]) -> Vec<f64> {
        let belief = self.belief(player, own_type);
        (0..self.num_actions(player))
            .map(|a| {
                let mut total = 0.0;
                for (tj, bj) in belief.iter().enumerate() {
                    if *bj == 0.0 {
                        continue;
                    }
                    let inner: f64 = opponent[tj]
                        .iter()
                        .enumerate()
                        .map(|(b, p)| p * self.payoff_for(player, a, b, own_type, tj))
                        .sum();
                    total += bj * inner;
                }
                total
            })
            .collect()
    }

    /// Interim expected payoff of `(player, own_type)` under a profile.
    pub fn interim_value(&self, player: Player, own_type: usize, strategies: &[TypeStrategies; 2]) -> f64 {
        let opp = &strategies[player.opponent().index()];
        let own = &strategies[player.index()][own_type];
        dot(own, &self.interim_action_payoffs(player, own_type, opp))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Per-type certificate weights; `None` means all ones.
    pub alpha: Option<[Vec<f64>; 2]>,
    pub feasibility_tol: f64,
    /// Name of a registered [`EquilibriumSelector`].
    pub selection: String,
    /// Enumerate every equilibrium even when the selector would not need to.
    pub enumerate_all: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: None,
            feasibility_tol: 1e-9,
            selection: "lexicographic".to_string(),
            enumerate_all: false,
        }
    }
}

impl SolverConfig {
    pub fn alpha(&self, player: Player, own_type: usize) -> f64 {
        self.alpha.as_ref().map_or(1.0, |a| a[player.index()][own_type])
    }

    fn check(&self, view: &StageGameView) -> Result<(), SolveError> {
        if !(self.feasibility_tol >= 0.0) {
            return Err(SolveError::InvalidConfig("feasibility tolerance must be nonnegative".into()));
        }
        if let Some(alpha) = &self.alpha {
            for player in Player::ALL {
                let w = &alpha[player.index()];
                if w.len() != view.num_types(player) {
                    return Err(SolveError::InvalidConfig(format!("alpha for player {player} has the wrong length")));
                }
                if w.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(SolveError::InvalidConfig("alpha weights must be strictly positive and finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// One static Bayesian Nash equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticEquilibrium {
    pub strategies: [TypeStrategies; 2],
    /// Interim value of each type; the certificate variable is its negation.
    pub values: [Vec<f64>; 2],
    pub residual: f64,
    /// Actions played with positive probability, per player and type.
    pub supports: [Vec<Vec<usize>>; 2],
}

impl StaticEquilibrium {
    fn distance(&self, other: &StaticEquilibrium) -> f64 {
        let mut worst: f64 = 0.0;
        for (pa, pb) in self.strategies.iter().zip(&other.strategies) {
            for (ta, tb) in pa.iter().zip(pb) {
                for (a, b) in ta.iter().zip(tb) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

/// Largest gain any type of either player gets from a pure deviation.
pub fn verify_sbne(view: &StageGameView, strategies: &[TypeStrategies; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for player in Player::ALL {
        let opp = &strategies[player.opponent().index()];
        for t in 0..view.num_types(player) {
            let payoffs = view.interim_action_payoffs(player, t, opp);
            let current = dot(&strategies[player.index()][t], &payoffs);
            let best = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(best - current);
        }
    }
    worst
}

/// Negated optimal objective of the bilinear certificate program at the
/// candidate, with each certificate variable set to the negated best pure
/// deviation payoff (its tightest feasible value). Zero exactly at an
/// equilibrium, where it equals the negated interim value.
pub fn certificate_residual(view: &StageGameView, strategies: &[TypeStrategies; 2], config: &SolverConfig) -> f64 {
    let mut total = 0.0;
    for player in Player::ALL {
        let opp = &strategies[player.opponent().index()];
        for t in 0..view.num_types(player) {
            let payoffs = view.interim_action_payoffs(player, t, opp);
            let current = dot(&strategies[player.index()][t], &payoffs);
            let best = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            total += config.alpha(player, t) * (best - current);
        }
    }
    total.max(0.0)
}

/// Nonempty subsets of `0..n`, ordered by size and then lexicographically.
fn ordered_supports(n: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// Agents are player one's types followed by player two's types.
struct ProfileSpace {
    supports: [Vec<Vec<usize>>; 2],
    types: [usize; 2],
}

impl ProfileSpace {
    fn new(view: &StageGameView) -> Self {
        ProfileSpace {
            supports: [
                ordered_supports(view.num_actions(Player::One)),
                ordered_supports(view.num_actions(Player::Two)),
            ],
            types: view.types,
        }
    }

    fn num_agents(&self) -> usize {
        self.types[0] + self.types[1]
    }

    fn agent_choices(&self, agent: usize) -> &[Vec<usize>] {
        if agent < self.types[0] {
            &self.supports[0]
        } else {
            &self.supports[1]
        }
    }

    /// Every profile as per-agent support ranks, smallest total support
    /// first, ties broken lexicographically on the rank tuple.
    fn ordered_profiles(&self) -> Result<Vec<Vec<u16>>, SolveError> {
        let agents = self.num_agents();
        let count = (0..agents)
            .try_fold(1usize, |acc, a| acc.checked_mul(self.agent_choices(a).len()))
            .filter(|c| *c <= MAX_PROFILES)
            .ok_or_else(|| SolveError::InvalidConfig("support enumeration too large for this game".into()))?;
        let mut profiles = Vec::with_capacity(count);
        let mut ranks = vec![0u16; agents];
        loop {
            profiles.push(ranks.clone());
            let mut a = agents;
            loop {
                if a == 0 {
                    let size = |p: &Vec<u16>| -> usize {
                        p.iter()
                            .enumerate()
                            .map(|(agent, r)| self.agent_choices(agent)[*r as usize].len())
                            .sum()
                    };
                    profiles.sort_by_cached_key(|p| (size(p), p.clone()));
                    return Ok(profiles);
                }
                a -= 1;
                ranks[a] += 1;
                if (ranks[a] as usize) < self.agent_choices(a).len() {
                    break;
                }
                ranks[a] = 0;
            }
        }
    }

    fn player_supports<'a>(&'a self, profile: &[u16], player: Player) -> Vec<&'a [usize]> {
        let (start, end) = match player {
            Player::One => (0, self.types[0]),
            Player::Two => (self.types[0], self.num_agents()),
        };
        (start..end)
            .map(|agent| self.agent_choices(agent)[profile[agent] as usize].as_slice())
            .collect()
    }
}

/// Solves for the type-contingent strategies of `cond.opponent()` that make
/// every action in `cond`'s supports a best response and every supported
/// action the opponent's own support.
fn solve_side(
    view: &StageGameView,
    cond: Player,
    cond_supports: &[&[usize]],
    var_supports: &[&[usize]],
    tol: f64,
) -> Option<TypeStrategies> {
    let var_player = cond.opponent();
    // variable layout: for each opponent type, its supported actions
    let mut offsets = Vec::with_capacity(var_supports.len());
    let mut num_vars = 0;
    for s in var_supports {
        offsets.push(num_vars);
        num_vars += s.len();
    }
    let mut eq = Vec::new();
    let mut le = Vec::new();
    for (tq, s) in var_supports.iter().enumerate() {
        let mut coeffs = vec![0.0; num_vars];
        for v in 0..s.len() {
            coeffs[offsets[tq] + v] = 1.0;
        }
        eq.push(Row::new(coeffs, 1.0));
    }
    for (tp, support) in cond_supports.iter().enumerate() {
        let belief = view.belief(cond, tp);
        let action_row = |a: usize| -> Vec<f64> {
            let mut coeffs = vec![0.0; num_vars];
            for (tq, s) in var_supports.iter().enumerate() {
                let b = belief[tq];
                if b == 0.0 {
                    continue;
                }
                for (v, &aq) in s.iter().enumerate() {
                    coeffs[offsets[tq] + v] = b * view.payoff_for(cond, a, aq, tp, tq);
                }
            }
            coeffs
        };
        let reference = action_row(support[0]);
        for a in 0..view.num_actions(cond) {
            if a == support[0] {
                continue;
            }
            let coeffs: Vec<f64> = action_row(a).iter().zip(&reference).map(|(x, r)| x - r).collect();
            if support.contains(&a) {
                eq.push(Row::new(coeffs, 0.0));
            } else {
                le.push(Row::new(coeffs, 0.0));
            }
        }
    }
    let x = find_feasible(num_vars, &eq, &le, tol)?;
    Some(
        var_supports
            .iter()
            .enumerate()
            .map(|(tq, s)| {
                let mut dist = vec![0.0; view.num_actions(var_player)];
                for (v, &a) in s.iter().enumerate() {
                    dist[a] = x[offsets[tq] + v];
                }
                dist
            })
            .collect(),
    )
}

fn prune(dist: &mut [f64]) {
    for p in dist.iter_mut() {
        if *p < PRUNE_EPS {
            *p = 0.0;
        }
    }
    let total: f64 = dist.iter().sum();
    for p in dist.iter_mut() {
        *p /= total;
    }
}

fn finish(view: &StageGameView, mut strategies: [TypeStrategies; 2], config: &SolverConfig) -> StaticEquilibrium {
    for side in strategies.iter_mut() {
        for dist in side.iter_mut() {
            prune(dist);
        }
    }
    let values = Player::ALL.map(|p| (0..view.num_types(p)).map(|t| view.interim_value(p, t, &strategies)).collect());
    let supports = strategies
        .clone()
        .map(|side| side.iter().map(|d| (0..d.len()).filter(|a| d[*a] > 0.0).collect()).collect());
    let residual = certificate_residual(view, &strategies, config);
    StaticEquilibrium {
        strategies,
        values,
        residual,
        supports,
    }
}

/// Walks support profiles in the selection order, calling `visit` on each
/// equilibrium found until it returns `false`. Returns the profile count.
fn enumerate(
    view: &StageGameView,
    config: &SolverConfig,
    mut visit: impl FnMut(StaticEquilibrium) -> bool,
) -> Result<usize, SolveError> {
    view.check()?;
    config.check(view)?;
    let space = ProfileSpace::new(view);
    let profiles = space.ordered_profiles()?;
    for profile in &profiles {
        let s1 = space.player_supports(profile, Player::One);
        let s2 = space.player_supports(profile, Player::Two);
        // player one's conditions pin down player two's mixing, and vice versa
        let Some(sigma2) = solve_side(view, Player::One, &s1, &s2, config.feasibility_tol) else {
            continue;
        };
        let Some(sigma1) = solve_side(view, Player::Two, &s2, &s1, config.feasibility_tol) else {
            continue;
        };
        let candidate = finish(view, [sigma1, sigma2], config);
        let gain = verify_sbne(view, &candidate.strategies);
        if gain > ACCEPT_GAIN {
            log::debug!("discarding numerically spurious candidate with deviation gain {gain:e}");
            continue;
        }
        if !visit(candidate) {
            break;
        }
    }
    Ok(profiles.len())
}

/// Every distinct equilibrium reachable by support enumeration, in
/// selection order.
pub fn enumerate_sbne(view: &StageGameView, config: &SolverConfig) -> Result<Vec<StaticEquilibrium>, SolveError> {
    let mut found: Vec<StaticEquilibrium> = Vec::new();
    let profiles = enumerate(view, config, |eq| {
        if !found.iter().any(|f| f.distance(&eq) <= DEDUP_TOL) {
            found.push(eq);
        }
        true
    })?;
    if found.is_empty() {
        return Err(SolveError::NoEquilibrium { profiles });
    }
    Ok(found)
}

/// Solves the stage game with the selection rule named in `config`.
pub fn solve_sbne(view: &StageGameView, config: &SolverConfig) -> Result<StaticEquilibrium, SolveError> {
    let selector = SelectorRegistry::builtin()
        .get(&config.selection)
        .ok_or_else(|| SolveError::UnknownSelector(config.selection.clone()))?;
    solve_sbne_with(view, config, selector.as_ref())
}

pub fn solve_sbne_with(
    view: &StageGameView,
    config: &SolverConfig,
    selector: &dyn EquilibriumSelector,
) -> Result<StaticEquilibrium, SolveError> {
    if config.enumerate_all || selector.needs_all() {
        let mut all = enumerate_sbne(view, config)?;
        let pick = selector.select(&all, config);
        return Ok(all.swap_remove(pick));
    }
    let mut first = None;
    let profiles = enumerate(view, config, |eq| {
        first = Some(eq);
        false
    })?;
    first.ok_or(SolveError::NoEquilibrium { profiles })
}
