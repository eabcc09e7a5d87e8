//! Microscopic traffic simulation.

mod control;
mod engine;
mod phases;

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::netmodel::{Demand, RoadNetwork};

pub use control::{
    ControlContext, Decision, DetectorReading, DetectorView, FixedPhase, LightMode, PassEvent,
    SignalController,
};
pub use engine::{ControllerSet, PhaseStart, Simulation};
pub use phases::{
    build_yellow_grid, GreenPhase, PhaseTable, YellowGrid, YellowPhase, MIN_GREEN, YELLOW_DECEL,
    YELLOW_REACTION,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("phase table: {0}")]
    Phases(String),
    #[error("simulation setup: {0}")]
    Config(String),
    #[error("unknown detector {0}")]
    UnknownDetector(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Timestep, s.
    pub dt: f64,
    /// Simulated time limit, s.
    pub horizon: f64,
    pub seed: u64,
    /// Release times are shifted by U(-j, j) when positive.
    pub entry_jitter: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 7200.0,
            seed: 0,
            entry_jitter: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarOutcome {
    pub vehicle_id: String,
    pub entry: f64,
    /// Actual exit, or the estimate used for a car still travelling.
    pub exit: f64,
    pub finished: bool,
}

impl CarOutcome {
    pub fn journey(&self) -> f64 {
        self.exit - self.entry
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimSummary {
    pub mtt_s: f64,
    pub objective_s: f64,
    pub finished: usize,
    pub unfinished: usize,
}

/// Per-car outcomes in demand order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub cars: Vec<CarOutcome>,
}

impl SimResult {
    pub fn from_outcomes(cars: Vec<CarOutcome>) -> Self {
        Self { cars }
    }

    /// Sum of journey times.
    pub fn total_journey(&self) -> f64 {
        self.cars.iter().map(CarOutcome::journey).sum()
    }

    /// Mean travel time; 0 for an empty demand.
    pub fn mtt(&self) -> f64 {
        if self.cars.is_empty() {
            0.0
        } else {
            self.total_journey() / self.cars.len() as f64
        }
    }

    pub fn summary(&self) -> SimSummary {
        let finished = self.cars.iter().filter(|c| c.finished).count();
        SimSummary {
            mtt_s: self.mtt(),
            objective_s: self.total_journey(),
            finished,
            unfinished: self.cars.len() - finished,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("car_id,entry_s,exit_s,journey_s,finished\n");
        for c in &self.cars {
            let _ = writeln!(
                s,
                "{},{:.3},{:.3},{:.3},{}",
                c.vehicle_id,
                c.entry,
                c.exit,
                c.journey(),
                c.finished
            );
        }
        s
    }
}

/// Simulates `demand` on `net` with one controller per light.
pub fn run(
    net: &RoadNetwork,
    demand: &Demand,
    controllers: ControllerSet,
    cfg: SimConfig,
) -> Result<SimResult, SimError> {
    Ok(Simulation::new(net, demand, controllers, cfg)?.run_to_end())
}
