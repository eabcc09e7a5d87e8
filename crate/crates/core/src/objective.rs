//! Simulation-backed evaluation of controller configurations.

use crate::controllers::{build_controllers, ControlConfig, ControlError};
use crate::nash::{unflatten, NashError, Objective, ParameterVector};
use crate::netmodel::{Demand, RoadNetwork};
use crate::simcore::{self, SimConfig, SimResult};

/// Runs `demand` under `config`.
pub fn simulate(
    net: &RoadNetwork,
    demand: &Demand,
    config: &ControlConfig,
    sim: SimConfig,
) -> Result<SimResult, ControlError> {
    let controllers = build_controllers(net, demand, config)?;
    Ok(simcore::run(net, demand, controllers, sim)?)
}

/// Seed used for dataset `i`; fixed for the whole optimization run.
pub fn dataset_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add(i as u64)
}

/// Total travel time Σ (c_exit - c_entry) of each dataset.
pub struct TravelTimeObjective<'a> {
    pub net: &'a RoadNetwork,
    pub datasets: &'a [Demand],
    pub sim: SimConfig,
}

impl TravelTimeObjective<'_> {
    pub fn run(&self, s: &ParameterVector, dataset: usize) -> Result<SimResult, NashError> {
        let config = unflatten(s, self.net)?;
        let sim = SimConfig {
            seed: dataset_seed(self.sim.seed, dataset),
            ..self.sim
        };
        simulate(self.net, &self.datasets[dataset], &config, sim)
            .map_err(|e| NashError::Evaluation(e.to_string()))
    }
}

impl Objective for TravelTimeObjective<'_> {
    fn datasets(&self) -> usize {
        self.datasets.len()
    }

    fn evaluate(&self, s: &ParameterVector, dataset: usize) -> Result<f64, NashError> {
        Ok(self.run(s, dataset)?.total_journey())
    }
}
