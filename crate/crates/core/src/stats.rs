//! Solver-call bookkeeping.
//!
//! The cost of a run is reported as counts — structural Newton iterations,
//! fluid solves and their pseudo-time steps, coupling iterations and
//! coupling-loop activations — never as wall-clock claims. Counts are
//! accumulated per job and merged in input order so that parallel execution
//! reports identical numbers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    /// Structural Newton iterations (steps taken, summed over all solves).
    pub newton_iterations: u64,
    /// Structural Newton solves.
    pub newton_solves: u64,
    /// Fluid (surrogate) solves.
    pub fluid_solves: u64,
    /// Total pseudo-time steps over all fluid solves.
    pub pseudo_time_steps: u64,
    /// Coupling-loop iterations (one structural + one fluid pass each).
    pub coupling_iterations: u64,
    /// Number of coupling-loop activations.
    pub coupling_activations: u64,
}

impl CostLedger {
    pub fn merge(&mut self, other: &CostLedger) {
        self.newton_iterations += other.newton_iterations;
        self.newton_solves += other.newton_solves;
        self.fluid_solves += other.fluid_solves;
        self.pseudo_time_steps += other.pseudo_time_steps;
        self.coupling_iterations += other.coupling_iterations;
        self.coupling_activations += other.coupling_activations;
    }
}
