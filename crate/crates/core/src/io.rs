//! Long-format CSV exports of strategy, belief and value tables, and the
//! JSON form of an equilibrium report.

use crate::game::{MultiStageGame, Player};
use crate::pbne::EquilibriumReport;
use crate::static_eq::{StageGameView, StaticEquilibrium};
use crate::table::{fmt_f64, Table};
use crate::tables::{BeliefTable, StrategyProfile, ValueTable};

/// Rows `(player, stage, state, type, action, probability)`.
pub fn strategy_table(game: &MultiStageGame, strategies: &StrategyProfile) -> Table {
    let mut table = Table::new(["player", "stage", "state", "type", "action", "probability"]);
    for p in Player::ALL {
        for (k, stage) in game.stages().iter().enumerate() {
            for x in 0..stage.num_states() {
                for t in 0..game.num_types(p) {
                    for (a, prob) in strategies.get(p, k, x, t).iter().enumerate() {
                        table.push(vec![
                            p.number().to_string(),
                            k.to_string(),
                            stage.states()[x].clone(),
                            game.types(p)[t].clone(),
                            stage.actions(p)[a].clone(),
                            fmt_f64(*prob),
                        ]);
                    }
                }
            }
        }
    }
    table
}

/// Rows `(player, stage, state, own_type, opp_type, probability)`.
pub fn belief_table(game: &MultiStageGame, beliefs: &BeliefTable) -> Table {
    let mut table = Table::new(["player", "stage", "state", "own_type", "opp_type", "probability"]);
    for p in Player::ALL {
        let opp = p.opponent();
        for (k, stage) in game.stages().iter().enumerate() {
            for x in 0..stage.num_states() {
                for t in 0..game.num_types(p) {
                    for (o, prob) in beliefs.slice(p, k, x, t).iter().enumerate() {
                        table.push(vec![
                            p.number().to_string(),
                            k.to_string(),
                            stage.states()[x].clone(),
                            game.types(p)[t].clone(),
                            game.types(opp)[o].clone(),
                            fmt_f64(*prob),
                        ]);
                    }
                }
            }
        }
    }
    table
}

/// Rows `(player, stage, state, type, value)`.
pub fn value_table(game: &MultiStageGame, values: &ValueTable) -> Table {
    let mut table = Table::new(["player", "stage", "state", "type", "value"]);
    for p in Player::ALL {
        for (k, stage) in game.stages().iter().enumerate() {
            for x in 0..stage.num_states() {
                for t in 0..game.num_types(p) {
                    table.push(vec![
                        p.number().to_string(),
                        k.to_string(),
                        stage.states()[x].clone(),
                        game.types(p)[t].clone(),
                        fmt_f64(values.value(p, k, x, t)),
                    ]);
                }
            }
        }
    }
    table
}

/// One-shot equilibrium as rows `(player, type, action, probability)`,
/// followed by one summary row per `(player, type)` carrying its interim
/// value and deviation gain in the `value` and `residual` columns.
/// `labels[i]` holds player `i + 1`'s action labels and type labels.
pub fn equilibrium_table(view: &StageGameView, eq: &StaticEquilibrium, labels: [(&[String], &[String]); 2]) -> Table {
    let mut table = Table::new(["player", "type", "action", "probability", "value", "residual"]);
    for p in Player::ALL {
        let (actions, types) = labels[p.index()];
        for (t, s) in eq.strategies[p.index()].iter().enumerate() {
            for (a, prob) in s.iter().enumerate() {
                table.push(vec![
                    p.number().to_string(),
                    types[t].clone(),
                    actions[a].clone(),
                    fmt_f64(*prob),
                    String::new(),
                    String::new(),
                ]);
            }
        }
    }
    for p in Player::ALL {
        let (_, types) = labels[p.index()];
        let opp = &eq.strategies[p.opponent().index()];
        for t in 0..view.num_types(p) {
            let value = view.interim_value(p, t, &eq.strategies);
            let best = view.interim_action_payoffs(p, t, opp).into_iter().fold(f64::NEG_INFINITY, f64::max);
            table.push(vec![
                p.number().to_string(),
                types[t].clone(),
                String::new(),
                String::new(),
                fmt_f64(value),
                fmt_f64((best - value).max(0.0)),
            ]);
        }
    }
    table
}

pub fn report_json(report: &EquilibriumReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}
