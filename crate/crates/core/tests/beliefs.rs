mod common;

use bayes_pbne::belief::{
    forward_beliefs, forward_beliefs_with_diagnostics, history_step, history_update, markov_update, transition_likelihood,
    BeliefDiagnostic, History,
};
use bayes_pbne::game::{MultiStageGame, Player, Stage};
use bayes_pbne::pbne::{solve_pbne, PbneConfig};
use bayes_pbne::tables::{BeliefTable, StrategyProfile};
use bayes_pbne::te;
use common::*;
use proptest::prelude::*;

fn small_game(seed: u64, horizon: usize, types: [usize; 2]) -> MultiStageGame {
    random_game(
        &mut rng(seed),
        &GameShape {
            horizon,
            max_states: 3,
            actions: 1..=3,
            types,
            payoffs: Payoffs::Integer(3),
        },
    )
}

/// Opponent strategies that ignore the opponent's type.
fn type_blind(game: &MultiStageGame, seed: u64, opponent: Player) -> StrategyProfile {
    let mut r = rng(seed);
    let mut s = random_profile(&mut r, game);
    for k in 0..game.num_stages() {
        for x in 0..game.stage(k).num_states() {
            let shared = random_dist(&mut r, game.stage(k).num_actions(opponent));
            for t in 0..game.num_types(opponent) {
                s.set(opponent, k, x, t, shared.clone());
            }
        }
    }
    s
}

#[test]
fn history_update_by_hand() {
    // one stage, two user actions; user type 0 plays action 0 w.p. 0.8, type 1 w.p. 0.2
    let mut stage = Stage::new(labels("x", 1), [labels("a", 1), labels("b", 2)], [1, 2]);
    stage.set_transition(0, 0, 0, 0);
    stage.set_transition(0, 0, 1, 0);
    let last = Stage::new(labels("y", 1), [labels("a", 1), labels("b", 1)], [1, 2]);
    let game = MultiStageGame::new(
        [labels("t", 1), labels("u", 2)],
        vec![stage, last],
        [vec![vec![0.5, 0.5]], vec![vec![1.0]; 2]],
    )
    .unwrap();
    let mut s = StrategyProfile::uniform(&game);
    s.set(Player::Two, 0, 0, 0, vec![0.8, 0.2]);
    s.set(Player::Two, 0, 0, 1, vec![0.2, 0.8]);
    let up = history_update(&game, &s, Player::One, 0, 0, &History::new(vec![(0, 0)])).unwrap();
    assert!((up.posterior[0] - 0.8).abs() < 1e-15 && (up.posterior[1] - 0.2).abs() < 1e-15);
    assert!(!up.fallback);
}

#[test]
fn likelihood_edge_cases() {
    let game = small_game(3, 1, [2, 2]);
    let s = random_profile(&mut rng(4), &game);
    let stage = game.stage(0);
    for xn in 0..game.stage(1).num_states() {
        let reachable = (0..stage.num_actions(Player::One))
            .any(|a1| (0..stage.num_actions(Player::Two)).any(|a2| stage.next_state(0, a1, a2) == xn));
        if !reachable {
            assert_eq!(transition_likelihood(&game, &s, 0, 0, xn, Player::One, 0, 1), 0.0);
        }
    }
    // single action each: the unique successor has likelihood one
    let mut one = Stage::new(labels("x", 1), [labels("a", 1), labels("b", 1)], [2, 2]);
    one.set_transition(0, 0, 0, 1);
    let last = Stage::new(labels("y", 2), [labels("a", 1), labels("b", 1)], [2, 2]);
    let g = MultiStageGame::new([labels("t", 2), labels("u", 2)], vec![one, last], [vec![vec![0.5, 0.5]; 2], vec![vec![0.5, 0.5]; 2]]).unwrap();
    let s = StrategyProfile::uniform(&g);
    assert_eq!(transition_likelihood(&g, &s, 0, 0, 1, Player::Two, 0, 1), 1.0);
    assert_eq!(transition_likelihood(&g, &s, 0, 0, 0, Player::Two, 0, 1), 0.0);
}

#[test]
fn te_restricted_escalation_stays_at_privilege_one() {
    let game = te::build_te_game(&te::default_params()).unwrap();
    let mut s = StrategyProfile::uniform(&game);
    for t in 0..2 {
        s.set(Player::One, 1, te::EMPLOYEE, t, vec![0.0, 1.0]);
        s.set(Player::Two, 1, te::EMPLOYEE, t, vec![0.4, 0.6]);
    }
    let l = transition_likelihood(&game, &s, 1, te::EMPLOYEE, 1, Player::One, te::SOPHISTICATED, te::ADVERSARIAL);
    assert_eq!(l, 1.0);
}

#[test]
fn zero_likelihood_resets_to_prior_with_a_diagnostic() {
    let game = small_game(11, 1, [2, 2]);
    let mut s = random_profile(&mut rng(12), &game);
    // the user's type 0 never takes action 0, type 1 always does
    let n2 = game.stage(0).num_actions(Player::Two);
    if n2 < 2 {
        return;
    }
    s.set(Player::Two, 0, 0, 0, (0..n2).map(|a| if a == 1 { 1.0 } else { 0.0 }).collect());
    s.set(Player::Two, 0, 0, 1, point_mass(n2, 0));
    let up = history_step(&game, &s, 0, 0, Player::One, 0, &[1.0, 0.0], (0, 0));
    assert!(up.fallback);
    assert_eq!(up.posterior, game.prior(Player::One, 0));
}

#[test]
fn horizon_zero_beliefs_are_the_priors() {
    let game = small_game(5, 0, [2, 3]);
    let b = forward_beliefs(&game, &random_profile(&mut rng(6), &game), 0);
    assert_eq!(b, BeliefTable::from_priors(&game));
}

#[test]
fn singleton_opponent_types_give_point_masses() {
    let game = small_game(7, 2, [1, 2]);
    let b = forward_beliefs(&game, &random_profile(&mut rng(8), &game), 0);
    for k in 0..game.num_stages() {
        for x in 0..game.stage(k).num_states() {
            for t in 0..2 {
                assert_eq!(b.slice(Player::Two, k, x, t), [1.0]);
            }
        }
    }
}

#[test]
fn te_equilibrium_beliefs_are_a_fixed_point() {
    let game = te::build_te_game(&te::default_params()).unwrap();
    for x0 in [te::INEFFECTUAL, te::EFFECTUAL] {
        let rep = solve_pbne(&game, x0, &PbneConfig::default()).unwrap();
        assert!(rep.converged);
        let again = forward_beliefs(&game, &rep.strategies, x0);
        assert_eq!(again, rep.beliefs);
        assert_eq!(forward_beliefs(&game, &rep.strategies, x0), again);
    }
}

#[test]
fn unreachable_states_hold_the_prior() {
    let game = te::build_te_game(&te::default_params()).unwrap();
    // everyone emails employees: the manager branch is never reached
    let mut s = StrategyProfile::first_action(&game);
    for t in 0..2 {
        s.set(Player::Two, 0, te::EFFECTUAL, t, point_mass(3, te::EMAIL_EMPLOYEES));
    }
    let b = forward_beliefs(&game, &s, te::EFFECTUAL);
    for t in 0..2 {
        assert_eq!(b.slice(Player::One, 1, te::MANAGER, t), game.prior(Player::One, t));
        assert_eq!(b.slice(Player::One, 2, 3, t), game.prior(Player::One, t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn forward_beliefs_are_normalized(seed in any::<u64>()) {
        let game = small_game(seed, 2, [2, 3]);
        let pass = forward_beliefs_with_diagnostics(&game, &random_pure_profile(&mut rng(seed ^ 1), &game), 0);
        prop_assert!(pass.beliefs.check(&game).is_empty());
        for d in &pass.diagnostics {
            if let BeliefDiagnostic::PredecessorDisagreement { spread, .. } = d {
                prop_assert!(*spread > 0.0);
            }
        }
    }

    #[test]
    fn type_blind_opponents_leave_beliefs_unchanged(seed in any::<u64>(), player in 0usize..2) {
        let p = Player::from_index(player).unwrap();
        let game = small_game(seed, 1, [2, 2]);
        let s = type_blind(&game, seed ^ 2, p.opponent());
        let belief = random_dist(&mut rng(seed ^ 3), 2);
        for x in 0..game.stage(0).num_states() {
            for xn in 0..game.stage(1).num_states() {
                let up = markov_update(&game, &s, 0, x, xn, p, 0, &belief);
                if !up.fallback {
                    for (a, b) in up.posterior.iter().zip(&belief) {
                        prop_assert!((a - b).abs() <= 1e-12);
                    }
                }
            }
        }
        let b = forward_beliefs(&game, &s, 0);
        for x in 0..game.stage(1).num_states() {
            for t in 0..2 {
                let slice = b.slice(p, 1, x, t);
                for (a, q) in slice.iter().zip(game.prior(p, t)) {
                    prop_assert!((a - q).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn point_masses_are_absorbing(seed in any::<u64>(), tj in 0usize..2) {
        let game = small_game(seed, 1, [2, 2]);
        let s = random_profile(&mut rng(seed ^ 5), &game);
        let pm = point_mass(2, tj);
        for x in 0..game.stage(0).num_states() {
            for xn in 0..game.stage(1).num_states() {
                let up = markov_update(&game, &s, 0, x, xn, Player::One, 1, &pm);
                if !up.fallback {
                    prop_assert_eq!(&up.posterior, &pm);
                }
            }
        }
    }

    /// Markov updates equal history updates aggregated over the action
    /// pairs leading to the same successor.
    #[test]
    fn markov_update_aggregates_history_updates(seed in any::<u64>()) {
        let game = small_game(seed, 1, [2, 2]);
        let s = random_profile(&mut rng(seed ^ 7), &game);
        let stage = game.stage(0);
        for p in Player::ALL {
            let belief = random_dist(&mut rng(seed ^ 9), 2);
            for xn in 0..game.stage(1).num_states() {
                let mut mix = [0.0; 2];
                let mut mass = 0.0;
                for a1 in 0..stage.num_actions(Player::One) {
                    for a2 in 0..stage.num_actions(Player::Two) {
                        if stage.next_state(0, a1, a2) != xn {
                            continue;
                        }
                        let (ai, aj) = if p == Player::One { (a1, a2) } else { (a2, a1) };
                        let m: f64 = (0..2).map(|tj| belief[tj] * s.get(p, 0, 0, 0)[ai] * s.get(p.opponent(), 0, 0, tj)[aj]).sum();
                        let post = history_step(&game, &s, 0, 0, p, 0, &belief, (a1, a2)).posterior;
                        for t in 0..2 {
                            mix[t] += m * post[t];
                        }
                        mass += m;
                    }
                }
                let up = markov_update(&game, &s, 0, 0, xn, p, 0, &belief);
                if mass > 0.0 {
                    for t in 0..2 {
                        prop_assert!((up.posterior[t] - mix[t] / mass).abs() <= 1e-12);
                    }
                } else {
                    prop_assert!(up.fallback);
                }
            }
        }
    }
}
