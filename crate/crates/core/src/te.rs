//! Three-stage APT defense scenario on a Tennessee Eastman plant: phishing
//! at stage 0, privilege escalation at stage 1, sensor compromise at stage 2.
//!
//! The defender (player one) is sophisticated or primitive; the user (player
//! two) is adversarial or legitimate. Type-dependent quantities come in
//! `_sophisticated` / `_primitive` pairs.

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::game::{MultiStageGame, Player, Stage};

pub const SOPHISTICATED: usize = 0;
pub const PRIMITIVE: usize = 1;
pub const ADVERSARIAL: usize = 0;
pub const LEGITIMATE: usize = 1;

pub const INEFFECTUAL: usize = 0;
pub const EFFECTUAL: usize = 1;

pub const QUARANTINE: usize = 0;
pub const EMPLOYEE: usize = 1;
pub const MANAGER: usize = 2;

pub const NO_TRAINING: usize = 0;
pub const TRAIN_EMPLOYEES: usize = 1;
pub const TRAIN_MANAGERS: usize = 2;
pub const EMAIL_EMPLOYEES: usize = 0;
pub const EMAIL_MANAGERS: usize = 1;
pub const EMAIL_AVATARS: usize = 2;

pub const PERMIT: usize = 0;
pub const RESTRICT: usize = 1;
pub const NOP: usize = 0;
pub const ESCALATE: usize = 1;

pub const SELECTIVE_MONITORING: usize = 0;
pub const COMPLETE_MONITORING: usize = 1;
pub const UNENCRYPTED: usize = 0;
pub const ENCRYPTED: usize = 1;

/// Scenario parameters, all in thousands of dollars per stage unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TEParams {
    pub training_cost_sophisticated: f64,
    pub training_cost_primitive: f64,
    /// Legitimate user's reward for reaching a real employee or manager.
    pub legit_email_reward: f64,
    /// Attacker's reward for phishing an untrained receiver.
    pub phishing_reward: f64,
    /// Legitimate user's payoff for emailing an avatar (negative).
    pub legit_avatar_payoff: f64,
    /// Attacker's fake payoff for emailing an avatar (positive).
    pub attacker_avatar_payoff: f64,
    /// Attacker's cost when its target was trained.
    pub training_penalty_sophisticated: f64,
    pub training_penalty_primitive: f64,
    /// Shared reward when a legitimate escalation is permitted.
    pub legit_escalation_reward: f64,
    /// Defender's loss when an adversarial escalation is permitted.
    pub escalation_loss: f64,
    pub restriction_reward_sophisticated: f64,
    pub restriction_reward_primitive: f64,
    pub detection_reward_sophisticated: f64,
    pub detection_reward_primitive: f64,
    pub monitoring_cost_sophisticated: f64,
    pub monitoring_cost_primitive: f64,
    /// Time-averaged plant utility under normal operation.
    pub normal_utility: f64,
    /// Time-averaged plant utility after a sensor compromise from each
    /// final privilege level.
    pub compromised_utility_0: f64,
    pub compromised_utility_1: f64,
    pub compromised_utility_2: f64,
    pub compromised_utility_3: f64,
    /// Factor on the attacker's stage-0 rewards when reconnaissance was
    /// ineffectual.
    pub recon_attenuation: f64,
    /// Defender's prior probability that the user is adversarial.
    pub prior_adversarial: f64,
    /// User's prior probability that the defender is sophisticated.
    pub prior_sophisticated: f64,
}

/// Frozen defaults. These are not measured values. Besides satisfying the
/// parameter constraints they make the compromise loss grow sharply at the
/// top privilege level, and they give the default scenario a pure
/// consistent equilibrium that the fixed-point iteration reaches for every
/// prior on an 11-point grid. Small changes to the payoffs can turn that
/// into a belief cycle.
pub fn default_params() -> TEParams {
    TEParams {
        training_cost_sophisticated: 2.25,
        training_cost_primitive: 0.25,
        legit_email_reward: 0.75,
        phishing_reward: 8.75,
        legit_avatar_payoff: -5.5,
        attacker_avatar_payoff: 4.0,
        training_penalty_sophisticated: 11.75,
        training_penalty_primitive: 2.25,
        legit_escalation_reward: 2.75,
        escalation_loss: 7.0,
        restriction_reward_sophisticated: 5.75,
        restriction_reward_primitive: 4.25,
        detection_reward_sophisticated: 41.5,
        detection_reward_primitive: 31.0,
        monitoring_cost_sophisticated: 1.75,
        monitoring_cost_primitive: 6.5,
        normal_utility: 50.0,
        compromised_utility_0: 49.0,
        compromised_utility_1: 49.0,
        compromised_utility_2: 44.0,
        compromised_utility_3: 13.75,
        recon_attenuation: 0.5,
        prior_adversarial: 0.5,
        prior_sophisticated: 0.5,
    }
}

impl Default for TEParams {
    fn default() -> Self {
        default_params()
    }
}

impl TEParams {
    pub fn compromised_utility(&self, level: usize) -> f64 {
        [
            self.compromised_utility_0,
            self.compromised_utility_1,
            self.compromised_utility_2,
            self.compromised_utility_3,
        ][level]
    }

    /// Field names, sorted.
    pub fn field_names() -> Vec<String> {
        match serde_json::to_value(default_params()) {
            Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
            _ => unreachable!("parameters serialize to an object"),
        }
    }

    pub fn get(&self, name: &str) -> Result<f64, ScenarioError> {
        let value = serde_json::to_value(self)?;
        value
            .get(name)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| ScenarioError::UnknownParameter(name.to_string()))
    }

    /// Copy with one field replaced.
    pub fn with(&self, name: &str, value: f64) -> Result<TEParams, ScenarioError> {
        let mut overrides = serde_json::Map::new();
        overrides.insert(name.to_string(), serde_json::json!(value));
        self.merged(&serde_json::Value::Object(overrides))
    }

    /// Applies a partial JSON object of overrides. Unknown keys are errors.
    pub fn merged(&self, overrides: &serde_json::Value) -> Result<TEParams, ScenarioError> {
        let serde_json::Value::Object(over) = overrides else {
            return Err(ScenarioError::Constraint("parameter overrides must be a JSON object".into()));
        };
        let mut base = match serde_json::to_value(self)? {
            serde_json::Value::Object(map) => map,
            _ => unreachable!("parameters serialize to an object"),
        };
        for (key, value) in over {
            if !base.contains_key(key) {
                return Err(ScenarioError::UnknownParameter(key.clone()));
            }
            base.insert(key.clone(), value.clone());
        }
        Ok(serde_json::from_value(serde_json::Value::Object(base))?)
    }

    /// Parses an override document and merges it onto the defaults.
    pub fn from_overrides(document: &str) -> Result<TEParams, ScenarioError> {
        let value: serde_json::Value = serde_json::from_str(document)?;
        default_params().merged(&value)
    }

    /// Every violated constraint, by name.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut require = |ok: bool, what: &str| {
            if !ok {
                out.push(what.to_string());
            }
        };
        let all = serde_json::to_value(self).ok();
        let finite = all
            .as_ref()
            .and_then(|v| v.as_object())
            .is_some_and(|m| m.values().all(|v| v.as_f64().is_some_and(f64::is_finite)));
        require(finite, "all parameters finite");
        require(
            self.training_cost_sophisticated > self.training_cost_primitive && self.training_cost_primitive > 0.0,
            "training_cost_sophisticated > training_cost_primitive > 0",
        );
        require(
            self.training_penalty_sophisticated > self.training_penalty_primitive,
            "training_penalty_sophisticated > training_penalty_primitive",
        );
        require(
            self.legit_avatar_payoff < 0.0 && self.attacker_avatar_payoff > 0.0,
            "legit_avatar_payoff < 0 < attacker_avatar_payoff",
        );
        let levels: Vec<f64> = (0..4).map(|l| self.compromised_utility(l)).collect();
        require(levels.windows(2).all(|w| w[1] <= w[0]), "compromised_utility non-increasing in privilege level");
        require(levels[0] <= self.normal_utility, "compromised_utility_0 <= normal_utility");
        require(
            (0.0..=1.0).contains(&self.recon_attenuation),
            "recon_attenuation in [0, 1]",
        );
        require(
            (0.0..=1.0).contains(&self.prior_adversarial) && (0.0..=1.0).contains(&self.prior_sophisticated),
            "priors in [0, 1]",
        );
        out
    }

    pub fn check(&self) -> Result<(), ScenarioError> {
        match self.violations().first() {
            Some(v) => Err(ScenarioError::Constraint(v.clone())),
            None => Ok(()),
        }
    }
}

/// Selects the sophisticated or primitive value by defender type.
fn by_defender(sophisticated: f64, primitive: f64) -> impl Fn(usize) -> f64 {
    move |t1| if t1 == SOPHISTICATED { sophisticated } else { primitive }
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn initial_stage(p: &TEParams) -> Stage {
    let mut stage = Stage::new(
        labels(&["ineffectual", "effectual"]),
        [
            labels(&["no-training", "train-employees", "train-managers"]),
            labels(&["email-employees", "email-managers", "email-avatars"]),
        ],
        [2, 2],
    );
    let c = by_defender(p.training_cost_sophisticated, p.training_cost_primitive);
    let r = by_defender(p.training_penalty_sophisticated, p.training_penalty_primitive);
    for x in [INEFFECTUAL, EFFECTUAL] {
        let scale = if x == INEFFECTUAL { p.recon_attenuation } else { 1.0 };
        let r2 = scale * p.phishing_reward;
        let rbf = scale * p.attacker_avatar_payoff;
        for a1 in 0..3 {
            for a2 in 0..3 {
                let next = match a2 {
                    EMAIL_EMPLOYEES => EMPLOYEE,
                    EMAIL_MANAGERS => MANAGER,
                    _ => QUARANTINE,
                };
                stage.set_transition(x, a1, a2, next);
                for t1 in [SOPHISTICATED, PRIMITIVE] {
                    let cost = if a1 == NO_TRAINING { 0.0 } else { c(t1) };
                    let adversarial = match (a1, a2) {
                        (_, EMAIL_AVATARS) => [-cost, rbf],
                        (NO_TRAINING, _) => [-r2, r2],
                        (TRAIN_EMPLOYEES, EMAIL_EMPLOYEES) | (TRAIN_MANAGERS, EMAIL_MANAGERS) => [-cost, -r(t1)],
                        _ => [-cost, r2],
                    };
                    let legitimate = if a2 == EMAIL_AVATARS {
                        [-cost, p.legit_avatar_payoff]
                    } else {
                        [-cost, p.legit_email_reward]
                    };
                    stage.set_utility(x, a1, a2, t1, ADVERSARIAL, adversarial);
                    stage.set_utility(x, a1, a2, t1, LEGITIMATE, legitimate);
                }
            }
        }
    }
    stage
}

fn escalation_stage(p: &TEParams) -> Stage {
    let mut stage = Stage::new(
        labels(&["quarantine", "employee", "manager"]),
        [labels(&["permit", "restrict"]), labels(&["nop", "escalate"])],
        [2, 2],
    );
    let r = by_defender(p.restriction_reward_sophisticated, p.restriction_reward_primitive);
    let (r1, r2) = (p.legit_escalation_reward, p.escalation_loss);
    for x in [QUARANTINE, EMPLOYEE, MANAGER] {
        for a1 in [PERMIT, RESTRICT] {
            for a2 in [NOP, ESCALATE] {
                let next = match (x, a1, a2) {
                    (QUARANTINE, _, _) => 0,
                    (EMPLOYEE, PERMIT, ESCALATE) => 2,
                    (EMPLOYEE, _, _) => 1,
                    (_, PERMIT, ESCALATE) => 3,
                    _ => 2,
                };
                stage.set_transition(x, a1, a2, next);
                for t1 in [SOPHISTICATED, PRIMITIVE] {
                    let (adversarial, legitimate) = match (a1, a2) {
                        (_, NOP) => ([0.0, 0.0], [0.0, 0.0]),
                        (PERMIT, _) => ([-r2, r2], [r1, r1]),
                        _ => ([r(t1), -r(t1)], [-r1, -r1]),
                    };
                    stage.set_utility(x, a1, a2, t1, ADVERSARIAL, adversarial);
                    stage.set_utility(x, a1, a2, t1, LEGITIMATE, legitimate);
                }
            }
        }
    }
    stage
}

fn final_stage(p: &TEParams) -> Stage {
    let mut stage = Stage::new(
        labels(&["privilege-0", "privilege-1", "privilege-2", "privilege-3"]),
        [
            labels(&["selective-monitoring", "complete-monitoring"]),
            labels(&["unencrypted-command", "encrypted-command"]),
        ],
        [2, 2],
    );
    let r = by_defender(p.detection_reward_sophisticated, p.detection_reward_primitive);
    let c = by_defender(p.monitoring_cost_sophisticated, p.monitoring_cost_primitive);
    let r4 = p.normal_utility;
    for x in 0..4 {
        let r1 = p.compromised_utility(x);
        for a1 in [SELECTIVE_MONITORING, COMPLETE_MONITORING] {
            for a2 in [UNENCRYPTED, ENCRYPTED] {
                for t1 in [SOPHISTICATED, PRIMITIVE] {
                    let cost = if a1 == COMPLETE_MONITORING { c(t1) } else { 0.0 };
                    let adversarial = match (a1, a2) {
                        (_, UNENCRYPTED) => [r4 - cost, 0.0],
                        (SELECTIVE_MONITORING, _) => [r1, r4 - r1],
                        _ => [r(t1) - cost, -r(t1)],
                    };
                    let legitimate = if a2 == UNENCRYPTED { [r4 - cost, r4 / 2.0] } else { [r4 - cost, r4] };
                    stage.set_utility(x, a1, a2, t1, ADVERSARIAL, adversarial);
                    stage.set_utility(x, a1, a2, t1, LEGITIMATE, legitimate);
                }
            }
        }
    }
    stage
}

/// Builds the three-stage game. Priors are the same for both own types of
/// each player.
pub fn build_te_game(p: &TEParams) -> Result<MultiStageGame, ScenarioError> {
    p.check()?;
    let defender_prior = vec![p.prior_adversarial, 1.0 - p.prior_adversarial];
    let user_prior = vec![p.prior_sophisticated, 1.0 - p.prior_sophisticated];
    Ok(MultiStageGame::new(
        [labels(&["sophisticated", "primitive"]), labels(&["adversarial", "legitimate"])],
        vec![initial_stage(p), escalation_stage(p), final_stage(p)],
        [vec![defender_prior; 2], vec![user_prior; 2]],
    )?)
}

/// Only the final stage, as a one-stage game.
pub fn build_te_final_stage(p: &TEParams) -> Result<MultiStageGame, ScenarioError> {
    let game = build_te_game(p)?;
    Ok(MultiStageGame::new(
        [game.types(Player::One).to_vec(), game.types(Player::Two).to_vec()],
        vec![final_stage(p)],
        game.priors().clone(),
    )?)
}

/// Hourly economics of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TEProcessEconomics {
    /// Production rate, m³/h.
    pub production_rate: f64,
    /// Mole fraction of the product in the output, in [0, 1].
    pub quality: f64,
    /// Product price, $/m³.
    pub price: f64,
    /// Operating cost, $/h.
    pub operating_cost: f64,
}

impl TEProcessEconomics {
    pub fn check(&self) -> Result<(), ScenarioError> {
        let ok = self.production_rate >= 0.0
            && (0.0..=1.0).contains(&self.quality)
            && self.price >= 0.0
            && self.operating_cost >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ScenarioError::Constraint(
                "production_rate, price, operating_cost >= 0 and quality in [0, 1]".into(),
            ))
        }
    }
}

/// Revenue minus operating cost, $/h.
pub fn te_per_hour_utility(e: &TEProcessEconomics) -> f64 {
    e.production_rate * e.quality * e.price - e.operating_cost
}
