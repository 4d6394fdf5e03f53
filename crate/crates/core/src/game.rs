//! Game data model: a finite two-player multi-stage game with private types,
//! deterministic state transitions and expected stage utilities stored as
//! dense tensors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GameError;

/// Tolerance for probability vectors summing to one.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const ALL: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Player> {
        match index {
            0 => Some(Player::One),
            1 => Some(Player::Two),
            _ => None,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// 1-based number used in file formats.
    pub fn number(self) -> usize {
        self.index() + 1
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One stage of the game: its state space, both action spaces, the expected
/// utility tensor and (for every stage but the last) the transition table.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    states: Vec<String>,
    actions: [Vec<String>; 2],
    type_counts: [usize; 2],
    /// Indexed `[state][a1][a2][t1][t2][player]`.
    utilities: Vec<f64>,
    /// Indexed `[state][a1][a2]`, holding the successor state index.
    transitions: Option<Vec<usize>>,
}

impl Stage {
    /// A stage with all utilities zero and no transitions.
    pub fn new(states: Vec<String>, actions: [Vec<String>; 2], type_counts: [usize; 2]) -> Stage {
        let len = states.len()
            * actions[0].len()
            * actions[1].len()
            * type_counts[0]
            * type_counts[1]
            * 2;
        Stage {
            states,
            actions,
            type_counts,
            utilities: vec![0.0; len],
            transitions: None,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn actions(&self, player: Player) -> &[String] {
        &self.actions[player.index()]
    }

    pub fn num_actions(&self, player: Player) -> usize {
        self.actions[player.index()].len()
    }

    pub fn has_transitions(&self) -> bool {
        self.transitions.is_some()
    }

    fn utility_offset(&self, x: usize, a1: usize, a2: usize, t1: usize, t2: usize) -> usize {
        let n1 = self.actions[0].len();
        let n2 = self.actions[1].len();
        ((((x * n1 + a1) * n2 + a2) * self.type_counts[0] + t1) * self.type_counts[1] + t2) * 2
    }

    /// Unchecked tensor lookup; panics on out-of-range indices.
    #[inline]
    pub fn utility(&self, x: usize, a1: usize, a2: usize, t1: usize, t2: usize, player: Player) -> f64 {
        self.utilities[self.utility_offset(x, a1, a2, t1, t2) + player.index()]
    }

    pub fn set_utility(&mut self, x: usize, a1: usize, a2: usize, t1: usize, t2: usize, payoff: [f64; 2]) {
        let off = self.utility_offset(x, a1, a2, t1, t2);
        self.utilities[off] = payoff[0];
        self.utilities[off + 1] = payoff[1];
    }

    /// Sets the same payoff pair for every type combination.
    pub fn set_utility_all_types(&mut self, x: usize, a1: usize, a2: usize, payoff: [f64; 2]) {
        for t1 in 0..self.type_counts[0] {
            for t2 in 0..self.type_counts[1] {
                self.set_utility(x, a1, a2, t1, t2, payoff);
            }
        }
    }

    /// Unchecked successor lookup; panics if the stage is terminal.
    #[inline]
    pub fn next_state(&self, x: usize, a1: usize, a2: usize) -> usize {
        let table = self.transitions.as_ref().expect("terminal stage has no transitions");
        table[(x * self.actions[0].len() + a1) * self.actions[1].len() + a2]
    }

    pub fn set_transition(&mut self, x: usize, a1: usize, a2: usize, next: usize) {
        let n1 = self.actions[0].len();
        let n2 = self.actions[1].len();
        let len = self.states.len() * n1 * n2;
        let table = self.transitions.get_or_insert_with(|| vec![0; len]);
        table[(x * n1 + a1) * n2 + a2] = next;
    }

    fn raw_transitions(&self) -> Option<&[usize]> {
        self.transitions.as_deref()
    }
}

/// Full description of a finite multi-stage Bayesian game.
///
/// Stages are indexed `0..=horizon`. Player one and player two each hold a
/// private type; `priors[i][own]` is player `i`'s stage-0 distribution over
/// the opponent's types.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStageGame {
    types: [Vec<String>; 2],
    stages: Vec<Stage>,
    priors: [Vec<Vec<f64>>; 2],
}

impl MultiStageGame {
    /// Assembles a game without checking invariants. Use [`validate_game`]
    /// or [`MultiStageGame::new`] for a checked construction.
    pub fn from_parts(types: [Vec<String>; 2], stages: Vec<Stage>, priors: [Vec<Vec<f64>>; 2]) -> Self {
        MultiStageGame { types, stages, priors }
    }

    pub fn new(types: [Vec<String>; 2], stages: Vec<Stage>, priors: [Vec<Vec<f64>>; 2]) -> Result<Self, GameError> {
        let game = Self::from_parts(types, stages, priors);
        let report = validate_game(&game);
        if report.is_empty() {
            Ok(game)
        } else {
            Err(GameError::Invalid(report))
        }
    }

    /// Final stage index `K`.
    pub fn horizon(&self) -> usize {
        self.stages.len().saturating_sub(1)
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, k: usize) -> &Stage {
        &self.stages[k]
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn stage_mut(&mut self, k: usize) -> &mut Stage {
        &mut self.stages[k]
    }

    pub fn types(&self, player: Player) -> &[String] {
        &self.types[player.index()]
    }

    pub fn num_types(&self, player: Player) -> usize {
        self.types[player.index()].len()
    }

    /// Player's stage-0 belief over the opponent's types given its own type.
    pub fn prior(&self, player: Player, own_type: usize) -> &[f64] {
        &self.priors[player.index()][own_type]
    }

    pub fn priors(&self) -> &[Vec<Vec<f64>>; 2] {
        &self.priors
    }

    pub fn set_prior(&mut self, player: Player, own_type: usize, dist: Vec<f64>) {
        self.priors[player.index()][own_type] = dist;
    }

    /// Copy of the game with the prior of every own type of `player` replaced.
    pub fn with_prior_for_all(&self, player: Player, dist: &[f64]) -> MultiStageGame {
        let mut game = self.clone();
        for own in 0..game.num_types(player) {
            game.set_prior(player, own, dist.to_vec());
        }
        game
    }

    fn check_stage(&self, k: usize) -> Result<&Stage, GameError> {
        self.stages.get(k).ok_or(GameError::StageOutOfRange {
            stage: k,
            horizon: self.horizon(),
        })
    }

    /// Checked transition `f^k(x, a1, a2)`.
    pub fn transition(&self, k: usize, x: usize, a1: usize, a2: usize) -> Result<usize, GameError> {
        let stage = self.check_stage(k)?;
        if k >= self.horizon() || !stage.has_transitions() {
            return Err(GameError::StageOutOfRange {
                stage: k,
                horizon: self.horizon(),
            });
        }
        check_index("state", x, stage.num_states())?;
        check_index("player 1 action", a1, stage.num_actions(Player::One))?;
        check_index("player 2 action", a2, stage.num_actions(Player::Two))?;
        Ok(stage.next_state(x, a1, a2))
    }

    /// Label-based transition, returning the successor's label.
    pub fn transition_by_label(&self, k: usize, x: &str, a1: &str, a2: &str) -> Result<&str, GameError> {
        let xi = self.state_index(k, x)?;
        let a1i = self.action_index(k, Player::One, a1)?;
        let a2i = self.action_index(k, Player::Two, a2)?;
        let next = self.transition(k, xi, a1i, a2i)?;
        Ok(&self.stages[k + 1].states[next])
    }

    /// Checked expected stage utility `J_i^k`.
    #[allow(clippy::too_many_arguments)]
    pub fn stage_utility(
        &self,
        k: usize,
        x: usize,
        a1: usize,
        a2: usize,
        t1: usize,
        t2: usize,
        player: Player,
    ) -> Result<f64, GameError> {
        let stage = self.check_stage(k)?;
        check_index("state", x, stage.num_states())?;
        check_index("player 1 action", a1, stage.num_actions(Player::One))?;
        check_index("player 2 action", a2, stage.num_actions(Player::Two))?;
        check_index("player 1 type", t1, self.num_types(Player::One))?;
        check_index("player 2 type", t2, self.num_types(Player::Two))?;
        Ok(stage.utility(x, a1, a2, t1, t2, player))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn stage_utility_by_label(
        &self,
        k: usize,
        x: &str,
        a1: &str,
        a2: &str,
        t1: &str,
        t2: &str,
        player: Player,
    ) -> Result<f64, GameError> {
        self.stage_utility(
            k,
            self.state_index(k, x)?,
            self.action_index(k, Player::One, a1)?,
            self.action_index(k, Player::Two, a2)?,
            self.type_index(Player::One, t1)?,
            self.type_index(Player::Two, t2)?,
            player,
        )
    }

    pub fn state_index(&self, k: usize, label: &str) -> Result<usize, GameError> {
        let stage = self.check_stage(k)?;
        find_label(&stage.states, label, "state")
    }

    pub fn action_index(&self, k: usize, player: Player, label: &str) -> Result<usize, GameError> {
        let stage = self.check_stage(k)?;
        find_label(stage.actions(player), label, "action")
    }

    pub fn type_index(&self, player: Player, label: &str) -> Result<usize, GameError> {
        find_label(self.types(player), label, "type")
    }
}

fn find_label(labels: &[String], label: &str, kind: &'static str) -> Result<usize, GameError> {
    labels.iter().position(|l| l == label).ok_or_else(|| GameError::UnknownLabel {
        kind,
        label: label.to_string(),
    })
}

fn check_index(what: &'static str, index: usize, len: usize) -> Result<(), GameError> {
    if index < len {
        Ok(())
    } else {
        Err(GameError::IndexOutOfRange { what, index, len })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub rule: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, rule: &'static str, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            rule,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: [{}] {}", v.location, v.rule, v.message)?;
        }
        Ok(())
    }
}

/// Lists every invariant violation of `game`. Never fails.
pub fn validate_game(game: &MultiStageGame) -> ValidationReport {
    let mut report = ValidationReport::default();
    if game.stages.is_empty() {
        report.push("stages", "nonempty", "game has no stages");
    }
    for player in Player::ALL {
        if game.types(player).is_empty() {
            report.push(format!("types[{}]", player.index()), "nonempty", "empty type space");
        }
    }
    let type_counts = [game.num_types(Player::One), game.num_types(Player::Two)];
    let horizon = game.horizon();
    for (k, stage) in game.stages.iter().enumerate() {
        let loc = format!("stages[{k}]");
        if stage.states.is_empty() {
            report.push(format!("{loc}.states"), "nonempty", "empty state space");
        }
        for player in Player::ALL {
            if stage.actions(player).is_empty() {
                report.push(
                    format!("{loc}.actions[{}]", player.index()),
                    "nonempty",
                    "empty action space",
                );
            }
        }
        if stage.type_counts != type_counts {
            report.push(
                format!("{loc}.utilities"),
                "dimensions",
                "utility tensor type extents disagree with the type spaces",
            );
            continue;
        }
        let n1 = stage.num_actions(Player::One);
        let n2 = stage.num_actions(Player::Two);
        for x in 0..stage.num_states() {
            for a1 in 0..n1 {
                for a2 in 0..n2 {
                    for t1 in 0..type_counts[0] {
                        for t2 in 0..type_counts[1] {
                            for p in Player::ALL {
                                let u = stage.utility(x, a1, a2, t1, t2, p);
                                if !u.is_finite() {
                                    report.push(
                                        format!("{loc}.utilities[{x}][{a1}][{a2}][{t1}][{t2}][{}]", p.index()),
                                        "finite-utility",
                                        format!("utility {u} is not finite"),
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        match (k < horizon, stage.raw_transitions()) {
            (true, Some(table)) => {
                let next_states = game.stages[k + 1].num_states();
                if table.len() != stage.num_states() * n1 * n2 {
                    report.push(format!("{loc}.transitions"), "dimensions", "transition table has the wrong size");
                } else {
                    for (n, &target) in table.iter().enumerate() {
                        if target >= next_states {
                            report.push(
                                format!("{loc}.transitions[{n}]"),
                                "transition-target",
                                format!("successor index {target} outside stage {} states", k + 1),
                            );
                        }
                    }
                }
            }
            (true, None) => report.push(format!("{loc}.transitions"), "transition-total", "missing transition table"),
            (false, Some(_)) => report.push(
                format!("{loc}.transitions"),
                "terminal-stage",
                "final stage must not define transitions",
            ),
            (false, None) => {}
        }
    }
    for player in Player::ALL {
        let priors = &game.priors[player.index()];
        if priors.len() != game.num_types(player) {
            report.push(
                format!("priors[{}]", player.index()),
                "dimensions",
                "one prior per own type required",
            );
            continue;
        }
        for (own, dist) in priors.iter().enumerate() {
            let loc = format!("priors[{}][{}]", player.index(), own);
            if dist.len() != game.num_types(player.opponent()) {
                report.push(loc, "dimensions", "prior length differs from opponent type count");
                continue;
            }
            if let Some(msg) = distribution_problem(dist) {
                report.push(loc, "prior-distribution", msg);
            }
        }
    }
    report
}

/// Describes why `dist` is not a probability vector, if it is not one.
pub(crate) fn distribution_problem(dist: &[f64]) -> Option<String> {
    if let Some(p) = dist.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Some(format!("entry {p} is negative or not finite"));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOL {
        return Some(format!("entries sum to {sum}, not 1"));
    }
    None
}

// ---------------------------------------------------------------------------
// Scenario documents

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    horizon: usize,
    types: [Vec<String>; 2],
    stages: Vec<StageDoc>,
    priors: [Vec<BTreeMap<String, f64>>; 2],
}

type UtilityDoc = Vec<Vec<Vec<Vec<Vec<[f64; 2]>>>>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageDoc {
    states: Vec<String>,
    actions: [Vec<String>; 2],
    utilities: UtilityDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transitions: Option<Vec<Vec<Vec<String>>>>,
}

/// Parses a JSON scenario document into a validated game.
pub fn parse_game(document: &str) -> Result<MultiStageGame, GameError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| GameError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    game_from_doc(doc)
}

fn mismatch(path: String, message: impl Into<String>) -> GameError {
    GameError::DimensionMismatch {
        path,
        message: message.into(),
    }
}

fn expect_len<T>(items: &[T], len: usize, path: impl Fn() -> String) -> Result<(), GameError> {
    if items.len() == len {
        Ok(())
    } else {
        Err(mismatch(path(), format!("expected {len} entries, found {}", items.len())))
    }
}

fn game_from_doc(doc: ScenarioDoc) -> Result<MultiStageGame, GameError> {
    if doc.stages.len() != doc.horizon + 1 {
        return Err(mismatch(
            "stages".into(),
            format!("horizon {} requires {} stages, found {}", doc.horizon, doc.horizon + 1, doc.stages.len()),
        ));
    }
    let type_counts = [doc.types[0].len(), doc.types[1].len()];
    let mut stages = Vec::with_capacity(doc.stages.len());
    let next_labels: Vec<Vec<String>> = doc.stages.iter().skip(1).map(|s| s.states.clone()).collect();
    for (k, sd) in doc.stages.into_iter().enumerate() {
        let mut stage = Stage::new(sd.states, sd.actions, type_counts);
        let (ns, n1, n2) = (
            stage.num_states(),
            stage.num_actions(Player::One),
            stage.num_actions(Player::Two),
        );
        let base = format!("stages[{k}].utilities");
        expect_len(&sd.utilities, ns, || base.clone())?;
        for (x, by_a1) in sd.utilities.iter().enumerate() {
            expect_len(by_a1, n1, || format!("{base}[{x}]"))?;
            for (a1, by_a2) in by_a1.iter().enumerate() {
                expect_len(by_a2, n2, || format!("{base}[{x}][{a1}]"))?;
                for (a2, by_t1) in by_a2.iter().enumerate() {
                    expect_len(by_t1, type_counts[0], || format!("{base}[{x}][{a1}][{a2}]"))?;
                    for (t1, by_t2) in by_t1.iter().enumerate() {
                        expect_len(by_t2, type_counts[1], || format!("{base}[{x}][{a1}][{a2}][{t1}]"))?;
                        for (t2, pair) in by_t2.iter().enumerate() {
                            stage.set_utility(x, a1, a2, t1, t2, *pair);
                        }
                    }
                }
            }
        }
        let tpath = format!("stages[{k}].transitions");
        match (k < doc.horizon, sd.transitions) {
            (true, Some(table)) => {
                let targets = &next_labels[k];
                expect_len(&table, ns, || tpath.clone())?;
                for (x, by_a1) in table.iter().enumerate() {
                    expect_len(by_a1, n1, || format!("{tpath}[{x}]"))?;
                    for (a1, by_a2) in by_a1.iter().enumerate() {
                        expect_len(by_a2, n2, || format!("{tpath}[{x}][{a1}]"))?;
                        for (a2, label) in by_a2.iter().enumerate() {
                            let next = targets.iter().position(|s| s == label).ok_or_else(|| {
                                mismatch(
                                    format!("{tpath}[{x}][{a1}][{a2}]"),
                                    format!("successor '{label}' is not a state of stage {}", k + 1),
                                )
                            })?;
                            stage.set_transition(x, a1, a2, next);
                        }
                    }
                }
            }
            (true, None) => return Err(mismatch(tpath, "non-final stage requires transitions")),
            (false, Some(_)) => return Err(mismatch(tpath, "final stage must not have transitions")),
            (false, None) => {}
        }
        stages.push(stage);
    }
    let mut priors: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for player in Player::ALL {
        let i = player.index();
        let own_types = &doc.types[i];
        let opp_types = &doc.types[1 - i];
        expect_len(&doc.priors[i], own_types.len(), || format!("priors[{i}]"))?;
        for (own, map) in doc.priors[i].iter().enumerate() {
            let path = format!("priors[{i}][{own}]");
            if let Some(unknown) = map.keys().find(|key| !opp_types.contains(key)) {
                return Err(mismatch(path, format!("unknown opponent type '{unknown}'")));
            }
            let dist = opp_types
                .iter()
                .map(|t| map.get(t).copied().ok_or_else(|| mismatch(path.clone(), format!("missing type '{t}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            priors[i].push(dist);
        }
    }
    MultiStageGame::new(doc.types, stages, priors)
}

/// Emits the scenario document for `game`; `parse_game` inverts it exactly.
pub fn serialize_game(game: &MultiStageGame) -> String {
    let horizon = game.horizon();
    let tc = [game.num_types(Player::One), game.num_types(Player::Two)];
    let stages = game
        .stages
        .iter()
        .enumerate()
        .map(|(k, stage)| {
            let n1 = stage.num_actions(Player::One);
            let n2 = stage.num_actions(Player::Two);
            let utilities = (0..stage.num_states())
                .map(|x| {
                    (0..n1)
                        .map(|a1| {
                            (0..n2)
                                .map(|a2| {
                                    (0..tc[0])
                                        .map(|t1| {
                                            (0..tc[1])
                                                .map(|t2| {
                                                    [
                                                        stage.utility(x, a1, a2, t1, t2, Player::One),
                                                        stage.utility(x, a1, a2, t1, t2, Player::Two),
                                                    ]
                                                })
                                                .collect()
                                        })
                                        .collect()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let transitions = (k < horizon && stage.has_transitions()).then(|| {
                let next = &game.stages[k + 1].states;
                (0..stage.num_states())
                    .map(|x| {
                        (0..n1)
                            .map(|a1| (0..n2).map(|a2| next[stage.next_state(x, a1, a2)].clone()).collect())
                            .collect()
                    })
                    .collect()
            });
            StageDoc {
                states: stage.states.clone(),
                actions: stage.actions.clone(),
                utilities,
                transitions,
            }
        })
        .collect();
    let priors = [Player::One, Player::Two].map(|player| {
        let opp = game.types(player.opponent());
        game.priors[player.index()]
            .iter()
            .map(|dist| opp.iter().cloned().zip(dist.iter().copied()).collect())
            .collect()
    });
    let doc = ScenarioDoc {
        horizon,
        types: game.types.clone(),
        stages,
        priors,
    };
    serde_json::to_string_pretty(&doc).expect("scenario document serializes")
}
