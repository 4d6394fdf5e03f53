mod common;

use bayes_pbne::dynamic::{backward_pass, best_response_value, evaluate_cumulative_utility, stage_view};
use bayes_pbne::game::{MultiStageGame, Player, Stage};
use bayes_pbne::static_eq::{solve_sbne, SolverConfig};
use bayes_pbne::tables::{StrategyProfile, ValueTable};
use common::*;
use proptest::prelude::*;

fn game_and_beliefs(seed: u64, horizon: usize) -> (MultiStageGame, bayes_pbne::tables::BeliefTable) {
    let mut r = rng(seed);
    let g = random_game(
        &mut r,
        &GameShape {
            horizon,
            max_states: 3,
            actions: 1..=3,
            types: [2, 2],
            payoffs: Payoffs::Integer(5),
        },
    );
    let b = random_beliefs(&mut r, &g);
    (g, b)
}

#[test]
fn one_stage_game_matches_the_static_solver() {
    let (g, b) = game_and_beliefs(21, 0);
    let eq = backward_pass(&g, &b, &SolverConfig::default()).unwrap();
    let zeros = ValueTable::zeros(&g);
    for x in 0..g.stage(0).num_states() {
        let st = solve_sbne(&stage_view(&g, &b, &zeros, 0, x), &SolverConfig::default()).unwrap();
        for p in Player::ALL {
            for t in 0..2 {
                assert_eq!(eq.strategies.get(p, 0, x, t), st.strategies[p.index()][t].as_slice());
                assert_eq!(eq.values.value(p, 0, x, t), st.values[p.index()][t]);
            }
        }
    }
}

#[test]
fn all_zero_utilities() {
    let (g, b) = game_and_beliefs(22, 2);
    let mut zero = g.clone();
    for k in 0..zero.num_stages() {
        let old = zero.stage(k).clone();
        let mut s = Stage::new(
            old.states().to_vec(),
            [old.actions(Player::One).to_vec(), old.actions(Player::Two).to_vec()],
            [2, 2],
        );
        if k < zero.horizon() {
            for x in 0..old.num_states() {
                for a1 in 0..old.num_actions(Player::One) {
                    for a2 in 0..old.num_actions(Player::Two) {
                        s.set_transition(x, a1, a2, old.next_state(x, a1, a2));
                    }
                }
            }
        }
        *zero.stage_mut(k) = s;
    }
    let eq = backward_pass(&zero, &b, &SolverConfig::default()).unwrap();
    assert_eq!(eq.strategies, StrategyProfile::first_action(&zero));
    assert_eq!(eq.values, ValueTable::zeros(&zero));
    let any = random_profile(&mut rng(1), &zero);
    for p in Player::ALL {
        assert_eq!(best_response_value(&zero, &any, &b, p).max_gain(), 0.0);
        assert_eq!(evaluate_cumulative_utility(&zero, &any, &b, 0, 0, p, 0), 0.0);
    }
}

/// Finite-horizon dynamic program for a player facing a fixed opponent
/// profile, written directly over `(stage, state, own type)`.
fn single_agent_values(g: &MultiStageGame, s: &StrategyProfile, b: &bayes_pbne::tables::BeliefTable, p: Player) -> Vec<Vec<Vec<f64>>> {
    let mut v: Vec<Vec<Vec<f64>>> = vec![Vec::new(); g.num_stages()];
    for k in (0..g.num_stages()).rev() {
        let st = g.stage(k);
        v[k] = (0..st.num_states())
            .map(|x| {
                (0..g.num_types(p))
                    .map(|t| {
                        (0..st.num_actions(p))
                            .map(|a| {
                                let mut q = 0.0;
                                for (tj, w) in b.slice(p, k, x, t).iter().enumerate() {
                                    for (aj, pj) in s.get(p.opponent(), k, x, tj).iter().enumerate() {
                                        let (a1, a2, t1, t2) = if p == Player::One { (a, aj, t, tj) } else { (aj, a, tj, t) };
                                        let cont = if k < g.horizon() { v[k + 1][st.next_state(x, a1, a2)][t] } else { 0.0 };
                                        q += w * pj * (st.utility(x, a1, a2, t1, t2, p) + cont);
                                    }
                                }
                                q
                            })
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect()
            })
            .collect();
    }
    v
}

#[test]
fn single_action_defender_reduces_to_a_decision_problem() {
    let mut r = rng(23);
    let g = random_game(
        &mut r,
        &GameShape {
            horizon: 2,
            max_states: 3,
            actions: 1..=1,
            types: [2, 2],
            payoffs: Payoffs::Integer(5),
        },
    );
    // widen only the user's action sets
    let g = widen_user_actions(&mut r, &g, 3);
    let b = random_beliefs(&mut r, &g);
    let eq = backward_pass(&g, &b, &SolverConfig::default()).unwrap();
    let oracle = single_agent_values(&g, &eq.strategies, &b, Player::Two);
    for k in 0..g.num_stages() {
        for x in 0..g.stage(k).num_states() {
            for t in 0..2 {
                assert!((eq.values.value(Player::Two, k, x, t) - oracle[k][x][t]).abs() <= 1e-9);
            }
        }
    }
}

fn widen_user_actions(r: &mut impl rand::Rng, g: &MultiStageGame, n: usize) -> MultiStageGame {
    let mut stages = Vec::new();
    for k in 0..g.num_stages() {
        let old = g.stage(k);
        let mut s = Stage::new(old.states().to_vec(), [labels("a", 1), labels("b", n)], [2, 2]);
        for x in 0..old.num_states() {
            for a2 in 0..n {
                for t1 in 0..2 {
                    for t2 in 0..2 {
                        s.set_utility(x, 0, a2, t1, t2, [Payoffs::Integer(5).draw(r), Payoffs::Integer(5).draw(r)]);
                    }
                }
                if k < g.horizon() {
                    s.set_transition(x, 0, a2, r.random_range(0..g.stage(k + 1).num_states()));
                }
            }
        }
        stages.push(s);
    }
    MultiStageGame::new([labels("t", 2), labels("u", 2)], stages, g.priors().clone()).unwrap()
}

#[test]
fn dominated_final_action_gain_is_the_dominance_margin() {
    // one stage, user's action 1 is worse than action 0 by exactly 2 for every opponent action
    let mut st = Stage::new(labels("x", 1), [labels("a", 2), labels("b", 2)], [1, 1]);
    for a1 in 0..2 {
        st.set_utility(0, a1, 0, 0, 0, [a1 as f64, 5.0]);
        st.set_utility(0, a1, 1, 0, 0, [a1 as f64, 3.0]);
    }
    let g = MultiStageGame::new([labels("t", 1), labels("u", 1)], vec![st], [vec![vec![1.0]], vec![vec![1.0]]]).unwrap();
    let mut s = StrategyProfile::first_action(&g);
    s.set(Player::Two, 0, 0, 0, vec![0.0, 1.0]);
    let b = bayes_pbne::tables::BeliefTable::from_priors(&g);
    let br = best_response_value(&g, &s, &b, Player::Two);
    assert_eq!(br.max_gain(), 2.0);
    assert_eq!(br.policy[0][0][0], 0);
}

#[test]
fn type_blind_game_reduces_to_value_iteration() {
    let mut r = rng(29);
    let g = random_game(
        &mut r,
        &GameShape {
            horizon: 2,
            max_states: 3,
            actions: 2..=3,
            types: [1, 1],
            payoffs: Payoffs::Integer(5),
        },
    );
    let b = bayes_pbne::tables::BeliefTable::from_priors(&g);
    let s = random_profile(&mut r, &g);
    let br = best_response_value(&g, &s, &b, Player::One);
    let oracle = single_agent_values(&g, &s, &b, Player::One);
    for k in 0..g.num_stages() {
        for x in 0..g.stage(k).num_states() {
            assert!((br.optimal_values[k][x][0] - oracle[k][x][0]).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backward_pass_is_sequentially_rational_everywhere(seed in any::<u64>()) {
        let (g, b) = game_and_beliefs(seed, 2);
        let eq = backward_pass(&g, &b, &SolverConfig::default()).unwrap();
        prop_assert!(eq.max_residual() <= 1e-6);
        for p in Player::ALL {
            let br = best_response_value(&g, &eq.strategies, &b, p);
            prop_assert!(br.max_gain() <= 1e-6);
            prop_assert!(br.gains.iter().flatten().flatten().all(|v| *v >= -1e-9));
        }
    }

    #[test]
    fn values_equal_cumulative_utility(seed in any::<u64>()) {
        let (g, b) = game_and_beliefs(seed, 2);
        let eq = backward_pass(&g, &b, &SolverConfig::default()).unwrap();
        for p in Player::ALL {
            for k in 0..g.num_stages() {
                for x in 0..g.stage(k).num_states() {
                    for t in 0..2 {
                        let v = eq.values.value(p, k, x, t);
                        prop_assert!((v - evaluate_cumulative_utility(&g, &eq.strategies, &b, k, x, p, t)).abs() <= 1e-9);
                        prop_assert!((v - cumulative_oracle(&g, &eq.strategies, &b, k, x, p, t)).abs() <= 1e-9);
                    }
                }
            }
            prop_assert_eq!(eq.values.value(p, g.num_stages(), 0, 0), 0.0);
        }
    }

    #[test]
    fn cumulative_utility_of_any_profile_matches_the_oracle(seed in any::<u64>()) {
        let (g, b) = game_and_beliefs(seed, 2);
        let s = random_profile(&mut rng(seed ^ 3), &g);
        let k = g.horizon();
        for p in Player::ALL {
            for x in 0..g.stage(0).num_states() {
                prop_assert!((evaluate_cumulative_utility(&g, &s, &b, 0, x, p, 1) - cumulative_oracle(&g, &s, &b, 0, x, p, 1)).abs() <= 1e-9);
            }
            for x in 0..g.stage(k).num_states() {
                let direct = cumulative_oracle(&g, &s, &b, k, x, p, 0);
                prop_assert!((evaluate_cumulative_utility(&g, &s, &b, k, x, p, 0) - direct).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn a_best_response_has_no_gain(seed in any::<u64>()) {
        let (g, b) = game_and_beliefs(seed, 2);
        let s = random_profile(&mut rng(seed ^ 4), &g);
        let br = best_response_value(&g, &s, &b, Player::One);
        let mut improved = s.clone();
        for k in 0..g.num_stages() {
            for x in 0..g.stage(k).num_states() {
                for t in 0..2 {
                    improved.set(Player::One, k, x, t, point_mass(g.stage(k).num_actions(Player::One), br.policy[k][x][t]));
                }
            }
        }
        prop_assert!(best_response_value(&g, &improved, &b, Player::One).max_gain() <= 1e-9);
    }
}
