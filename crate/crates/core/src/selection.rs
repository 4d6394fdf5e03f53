//! Rules for picking one stage equilibrium when several exist.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use crate::game::Player;
use crate::static_eq::{SolverConfig, StaticEquilibrium};

pub trait EquilibriumSelector: Send + Sync {
    fn name(&self) -> &str;

    /// Whether the rule must see every equilibrium. When `false` the solver
    /// stops at the first one in enumeration order.
    fn needs_all(&self) -> bool;

    /// Index into `candidates`, which is nonempty and in enumeration order.
    fn select(&self, candidates: &[StaticEquilibrium], config: &SolverConfig) -> usize;
}

/// First equilibrium in enumeration order (smallest supports first).
pub struct Lexicographic;

impl EquilibriumSelector for Lexicographic {
    fn name(&self) -> &str {
        "lexicographic"
    }
    fn needs_all(&self) -> bool {
        false
    }
    fn select(&self, _: &[StaticEquilibrium], _: &SolverConfig) -> usize {
        0
    }
}

/// Maximizes an α-weighted score of interim values; earliest wins ties.
pub struct MaxScore {
    name: &'static str,
    players: &'static [Player],
}

impl MaxScore {
    fn score(&self, eq: &StaticEquilibrium, config: &SolverConfig) -> f64 {
        self.players
            .iter()
            .map(|&p| {
                eq.values[p.index()]
                    .iter()
                    .enumerate()
                    .map(|(t, v)| config.alpha(p, t) * v)
                    .sum::<f64>()
            })
            .sum()
    }
}

impl EquilibriumSelector for MaxScore {
    fn name(&self) -> &str {
        self.name
    }
    fn needs_all(&self) -> bool {
        true
    }
    fn select(&self, candidates: &[StaticEquilibrium], config: &SolverConfig) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, eq) in candidates.iter().enumerate() {
            let s = self.score(eq, config);
            if s > best_score + 1e-12 {
                best = i;
                best_score = s;
            }
        }
        best
    }
}

#[derive(Clone, Default)]
pub struct SelectorRegistry {
    entries: BTreeMap<String, Arc<dyn EquilibriumSelector>>,
}

impl SelectorRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(Lexicographic));
        reg.register(Arc::new(MaxScore {
            name: "max-welfare",
            players: &[Player::One, Player::Two],
        }));
        reg.register(Arc::new(MaxScore {
            name: "player1-optimal",
            players: &[Player::One],
        }));
        reg.register(Arc::new(MaxScore {
            name: "player2-optimal",
            players: &[Player::Two],
        }));
        reg
    }

    /// Shared registry holding the built-in rules.
    pub fn builtin() -> &'static SelectorRegistry {
        static REGISTRY: OnceLock<SelectorRegistry> = OnceLock::new();
        REGISTRY.get_or_init(Self::with_builtins)
    }

    /// Adds or replaces a rule under its own name.
    pub fn register(&mut self, selector: Arc<dyn EquilibriumSelector>) {
        self.entries.insert(selector.name().to_string(), selector);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn EquilibriumSelector>> {
        self.entries.get(name).cloned()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}
