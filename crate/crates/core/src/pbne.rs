//! Fixed-point iteration between backward policy computation and forward
//! belief propagation, certified by independent rationality and consistency
//! checks.

use serde::Serialize;

use crate::belief::forward_beliefs;
use crate::dynamic::{backward_pass, best_response_value, DynamicEquilibrium};
use crate::error::{DynamicError, SolveError};
use crate::game::{MultiStageGame, Player};
use crate::static_eq::SolverConfig;
use crate::tables::{BeliefTable, StrategyProfile, ValueTable};

/// Consecutive non-decreasing belief changes that trigger damping.
const DAMPING_PATIENCE: usize = 5;
const DAMPING_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialBeliefs {
    Uniform,
    PriorFromGame,
    Explicit(BeliefTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbneConfig {
    pub iter_num: usize,
    pub epsilon: f64,
    pub belief_tol: f64,
    pub initial: InitialBeliefs,
    pub solver: SolverConfig,
}

impl Default for PbneConfig {
    fn default() -> Self {
        PbneConfig {
            iter_num: 100,
            epsilon: 1e-6,
            belief_tol: 1e-8,
            initial: InitialBeliefs::Uniform,
            solver: SolverConfig::default(),
        }
    }
}

impl PbneConfig {
    pub fn check(&self) -> Result<(), SolveError> {
        if self.iter_num == 0 {
            return Err(SolveError::InvalidConfig("iteration limit must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.belief_tol >= 0.0) {
            return Err(SolveError::InvalidConfig("tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub epsilon: f64,
    pub belief_change: f64,
    /// The beliefs for the next iteration were averaged with this one's.
    pub damped: bool,
    /// Index of the best iterate seen so far and its merit.
    pub best_iteration: usize,
    pub best_merit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub x0: usize,
    pub strategies: StrategyProfile,
    pub beliefs: BeliefTable,
    pub values: ValueTable,
    pub epsilon: f64,
    pub discrepancy: f64,
    pub max_certificate_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub best_iteration: usize,
    pub trace: Vec<TraceEntry>,
}

/// Largest best-response gain of either player, over all stages, states and
/// types, against `strategies` under `beliefs`.
pub fn check_sequential_rationality(game: &MultiStageGame, strategies: &StrategyProfile, beliefs: &BeliefTable) -> f64 {
    Player::ALL
        .iter()
        .map(|&p| best_response_value(game, strategies, beliefs, p).max_gain())
        .fold(0.0, f64::max)
}

/// Sup-norm distance between `beliefs` and the beliefs that `strategies`
/// induce from `x0`.
pub fn check_belief_consistency(game: &MultiStageGame, strategies: &StrategyProfile, beliefs: &BeliefTable, x0: usize) -> f64 {
    beliefs.sup_distance(&forward_beliefs(game, strategies, x0))
}

struct Iterate {
    beliefs: BeliefTable,
    eq: DynamicEquilibrium,
    epsilon: f64,
    discrepancy: f64,
}

fn merit(epsilon: f64, discrepancy: f64) -> f64 {
    epsilon.max(discrepancy)
}

pub fn solve_pbne(game: &MultiStageGame, x0: usize, config: &PbneConfig) -> Result<EquilibriumReport, DynamicError> {
    config.check().map_err(DynamicError::Config)?;
    let mut beliefs = match &config.initial {
        InitialBeliefs::Uniform => BeliefTable::uniform(game),
        InitialBeliefs::PriorFromGame => BeliefTable::from_priors(game),
        InitialBeliefs::Explicit(table) => table.clone(),
    };
    let mut trace = Vec::new();
    let mut best: Option<(usize, Iterate)> = None;
    let mut stalled = 0;
    let mut converged = false;
    let mut last_change = f64::INFINITY;

    for iteration in 0..config.iter_num {
        let eq = backward_pass(game, &beliefs, &config.solver)?;
        let next = forward_beliefs(game, &eq.strategies, x0);
        let epsilon = check_sequential_rationality(game, &eq.strategies, &beliefs);
        let discrepancy = beliefs.sup_distance(&next);
        log::debug!("iteration {iteration}: epsilon {epsilon:e}, belief change {discrepancy:e}");

        let m = merit(epsilon, discrepancy);
        let improved = best.as_ref().is_none_or(|(_, b)| m < merit(b.epsilon, b.discrepancy));
        converged = epsilon <= config.epsilon && discrepancy <= config.belief_tol;

        stalled = if discrepancy >= last_change { stalled + 1 } else { 0 };
        last_change = discrepancy;
        let damped = !converged && stalled >= DAMPING_PATIENCE;

        let current = Iterate {
            beliefs,
            eq,
            epsilon,
            discrepancy,
        };
        beliefs = if damped {
            stalled = 0;
            log::info!("iteration {iteration}: belief change stalled, damping");
            next.blend(&current.beliefs, DAMPING_WEIGHT)
        } else {
            next
        };
        if improved || converged {
            best = Some((iteration, current));
        }
        let (best_iteration, b) = best.as_ref().expect("set on first iteration");
        trace.push(TraceEntry {
            iteration,
            epsilon,
            belief_change: discrepancy,
            damped,
            best_iteration: *best_iteration,
            best_merit: merit(b.epsilon, b.discrepancy),
        });
        if converged {
            break;
        }
    }

    let (best_iteration, it) = best.expect("at least one iteration");
    if !converged {
        log::warn!(
            "no consistent equilibrium within {} iterations; best iterate {best_iteration} has epsilon {:e}, discrepancy {:e}",
            config.iter_num,
            it.epsilon,
            it.discrepancy
        );
    }
    Ok(EquilibriumReport {
        x0,
        max_certificate_residual: it.eq.max_residual(),
        strategies: it.eq.strategies,
        beliefs: it.beliefs,
        values: it.eq.values,
        epsilon: it.epsilon,
        discrepancy: it.discrepancy,
        converged,
        iterations: trace.len(),
        best_iteration,
        trace,
    })
}
