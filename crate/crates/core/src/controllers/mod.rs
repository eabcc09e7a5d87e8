//! Signal controllers: fixed schedules, micro-auctions and planners, plus
//! the per-network configuration that selects one of them for every light.

mod auction;
mod fixed_time;
pub mod gwctl;
mod planning;

use std::collections::HashMap;

use thiserror::Error;

use crate::netmodel::{place_planning_detectors, Demand, Detector, RoadNetwork};
use crate::simcore::{ControllerSet, PhaseTable, SignalController, SimError, MIN_GREEN};

pub use auction::{auction_decide, compute_bid, AuctionController, AuctionParams};
pub use fixed_time::{cycle_yellows, static_decide, StaticController, StaticParams};
pub use planning::{
    plan_schedule, update_timeline, Arrival, Plan, PlanEvent, PlanProblem, PlanningController,
    PlanningLimits, PlanningParams, PlanningSetup, RemoteSensor, SpeedProfile, Switch, Timeline,
};

/// Remote detectors reach this far upstream, s of travel.
pub const PLANNING_REACH: f64 = 15.0;
/// Travel time between consecutive remote detectors, s.
pub const PLANNING_SPACING: f64 = 3.0;
/// Queue discharge per lane, cars per second.
pub const SATURATION_FLOW: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("light {light}: {msg}")]
    Invalid { light: String, msg: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LightControl {
    Static(StaticParams),
    Auction(AuctionParams),
    Planning(PlanningParams),
}

impl LightControl {
    pub fn kind(&self) -> &'static str {
        match self {
            LightControl::Static(_) => "static",
            LightControl::Auction(_) => "auction",
            LightControl::Planning(_) => "planning",
        }
    }
}

/// One controller per light, in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlConfig {
    pub lights: Vec<LightControl>,
}

impl ControlConfig {
    /// Every light on a fixed schedule with equal greens.
    pub fn uniform_static(net: &RoadNetwork, green: f64) -> Self {
        Self {
            lights: net
                .lights
                .iter()
                .map(|l| {
                    LightControl::Static(StaticParams {
                        durations: vec![green; l.phases.len()],
                        offset: 0.0,
                    })
                })
                .collect(),
        }
    }

    /// Every light auctioned; each phase bids +1 per car queued on a lane
    /// it releases.
    pub fn demand_auction(net: &RoadNetwork, minimum: f64, priority: f64, release: f64) -> Self {
        Self {
            lights: (0..net.lights.len())
                .map(|l| {
                    let dets = net.local_detectors(l);
                    let served = served_lanes(net, l);
                    let weights = served
                        .iter()
                        .map(|lanes| {
                            dets.iter()
                                .map(|&d| {
                                    if lanes.contains(&net.detectors[d].lane) {
                                        1.0
                                    } else {
                                        0.0
                                    }
                                })
                                .collect()
                        })
                        .collect();
                    LightControl::Auction(AuctionParams {
                        weights,
                        minimum,
                        priority,
                        release,
                    })
                })
                .collect(),
        }
    }

    pub fn planning(net: &RoadNetwork, params: PlanningParams) -> Self {
        Self {
            lights: vec![LightControl::Planning(params); net.lights.len()],
        }
    }

    /// Checks shapes and value ranges against the network.
    pub fn validate(&self, net: &RoadNetwork) -> Result<(), ControlError> {
        if self.lights.len() != net.lights.len() {
            return Err(ControlError::Invalid {
                light: "*".into(),
                msg: format!(
                    "{} controllers for {} lights",
                    self.lights.len(),
                    net.lights.len()
                ),
            });
        }
        for (i, (c, light)) in self.lights.iter().zip(&net.lights).enumerate() {
            let bad = |msg: String| ControlError::Invalid {
                light: light.id.clone(),
                msg,
            };
            let phases = light.phases.len();
            match c {
                LightControl::Static(p) => {
                    if p.durations.len() != phases {
                        return Err(bad(format!(
                            "{} durations for {phases} phases",
                            p.durations.len()
                        )));
                    }
                    if p.durations.iter().any(|d| !(*d >= MIN_GREEN)) {
                        return Err(bad(format!("durations must be at least {MIN_GREEN} s")));
                    }
                    let cycle = p.cycle(&cycle_yellows(&PhaseTable::for_light(net, i)?));
                    if !(p.offset >= 0.0 && p.offset < cycle) {
                        return Err(bad(format!("offset {} outside [0, {cycle})", p.offset)));
                    }
                }
                LightControl::Auction(p) => {
                    let dets = net.local_detectors(i).len();
                    if p.weights.len() != phases || p.weights.iter().any(|w| w.len() != dets) {
                        return Err(bad(format!(
                            "weights must be {phases} phases x {dets} detectors"
                        )));
                    }
                    if p.weights.iter().flatten().any(|w| !w.is_finite()) {
                        return Err(bad("weights must be finite".into()));
                    }
                    if !(p.minimum > 0.0 && p.minimum <= p.priority && p.priority <= p.release) {
                        return Err(bad("need 0 < minimum <= priority <= release".into()));
                    }
                }
                LightControl::Planning(p) => {
                    if [p.speed_loss, p.waiting, p.change]
                        .iter()
                        .any(|w| !(*w >= 0.0 && w.is_finite()))
                    {
                        return Err(bad("penalty weights must be non-negative".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per phase, the incoming lanes with a green link.
fn served_lanes(net: &RoadNetwork, light: usize) -> Vec<Vec<usize>> {
    let phases = &net.lights[light].phases;
    let mut out = vec![Vec::new(); phases.len()];
    for c in &net.connections {
        let Some(s) = c.signal.filter(|s| s.light == light) else {
            continue;
        };
        for (p, state) in phases.iter().enumerate() {
            if state.as_bytes()[s.link] == b'G' && !out[p].contains(&c.from_lane) {
                out[p].push(c.from_lane);
            }
        }
    }
    out
}

/// Historical phase demand of traffic on each edge approaching a light:
/// for a car on `edge`, the expected share needing each phase (the
/// remainder turns away before reaching the light).
struct PhaseShares {
    phases: usize,
    by_edge: HashMap<usize, Vec<f64>>,
}

impl PhaseShares {
    fn new(net: &RoadNetwork, demand: &Demand, light: usize) -> Self {
        let node = net.lights[light].node;
        let phases = &net.lights[light].phases;
        // phases releasing each (in edge, out edge) movement
        let mut movement: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for c in &net.connections {
            let Some(s) = c.signal.filter(|s| s.light == light) else {
                continue;
            };
            let key = (net.lanes[c.from_lane].edge, net.lanes[c.to_lane].edge);
            let entry = movement.entry(key).or_default();
            for (p, state) in phases.iter().enumerate() {
                if state.as_bytes()[s.link] == b'G' && !entry.contains(&p) {
                    entry.push(p);
                }
            }
        }
        let mut counts = vec![0usize; demand.routes.len()];
        for r in &demand.records {
            counts[r.route] += 1;
        }
        let mut totals: HashMap<usize, f64> = HashMap::new();
        let mut by_edge: HashMap<usize, Vec<f64>> = HashMap::new();
        for (route, &count) in demand.routes.iter().zip(&counts) {
            if count == 0 {
                continue;
            }
            let edges = &route.edges;
            for (i, &e) in edges.iter().enumerate() {
                *totals.entry(e).or_default() += count as f64;
                let Some(j) =
                    (i..edges.len().saturating_sub(1)).find(|&j| net.edges[edges[j]].to == node)
                else {
                    continue;
                };
                let Some(ps) = movement.get(&(edges[j], edges[j + 1])) else {
                    continue;
                };
                if ps.is_empty() {
                    continue;
                }
                let w = by_edge.entry(e).or_insert_with(|| vec![0.0; phases.len()]);
                for &p in ps {
                    w[p] += count as f64 / ps.len() as f64;
                }
            }
        }
        for (e, w) in &mut by_edge {
            let total = totals[e];
            w.iter_mut().for_each(|x| *x /= total);
        }
        Self {
            phases: phases.len(),
            by_edge,
        }
    }

    fn get(&self, edge: usize) -> Vec<f64> {
        self.by_edge
            .get(&edge)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.phases])
    }
}

fn planning_setup(
    net: &RoadNetwork,
    demand: &Demand,
    light: usize,
    first_index: usize,
) -> (PlanningSetup, Vec<Detector>) {
    let detectors = place_planning_detectors(net, light, PLANNING_REACH, PLANNING_SPACING);
    let shares = PhaseShares::new(net, demand, light);
    let sensors: Vec<RemoteSensor> = detectors
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let distance = match d.kind {
                crate::netmodel::DetectorKind::Remote { distance, .. } => distance,
                crate::netmodel::DetectorKind::Local => d.position,
            };
            // the next detector upstream on this lane, else the nearest
            // one on each lane feeding it
            let same_lane = detectors
                .iter()
                .enumerate()
                .filter(|(_, o)| o.lane == d.lane && o.position > d.position)
                .min_by(|a, b| a.1.position.total_cmp(&b.1.position))
                .map(|(k, _)| k);
            let upstream = match same_lane {
                Some(k) => vec![k],
                None => net
                    .lane_in(d.lane)
                    .iter()
                    .filter_map(|&c| {
                        let up = net.connections[c].from_lane;
                        detectors
                            .iter()
                            .enumerate()
                            .filter(|(_, o)| o.lane == up)
                            .min_by(|a, b| a.1.position.total_cmp(&b.1.position))
                            .map(|(k, _)| k)
                    })
                    .filter(|&k| k != i)
                    .collect(),
            };
            RemoteSensor {
                distance,
                phase_weights: shares.get(net.lanes[d.lane].edge),
                upstream,
            }
        })
        .collect();
    let local = net
        .local_detectors(light)
        .into_iter()
        .map(|d| (d, shares.get(net.lanes[net.detectors[d].lane].edge)))
        .collect();
    let served = served_lanes(net, light);
    let mut downstream_limit = Vec::new();
    for (p, state) in net.lights[light].phases.iter().enumerate() {
        let limits: Vec<f64> = net
            .connections
            .iter()
            .filter(|c| {
                c.signal
                    .is_some_and(|s| s.light == light && state.as_bytes()[s.link] == b'G')
            })
            .map(|c| net.lanes[c.to_lane].speed_limit)
            .collect();
        let mean = if limits.is_empty() {
            0.0
        } else {
            limits.iter().sum::<f64>() / limits.len() as f64
        };
        downstream_limit.push(mean);
        debug_assert!(p < served.len());
    }
    let setup = PlanningSetup {
        detectors: (first_index..first_index + detectors.len()).collect(),
        initial_speeds: detectors
            .iter()
            .map(|d| net.lanes[d.lane].speed_limit)
            .collect(),
        sensors,
        local,
        downstream_limit,
        discharge: served
            .iter()
            .map(|l| l.len() as f64 * SATURATION_FLOW)
            .collect(),
        limits: PlanningLimits::default(),
    };
    (setup, detectors)
}

/// Instantiates the controllers of `config` for a run. Planning lights get
/// their remote detectors placed and their turning shares computed from
/// `demand`.
pub fn build_controllers(
    net: &RoadNetwork,
    demand: &Demand,
    config: &ControlConfig,
) -> Result<ControllerSet, ControlError> {
    config.validate(net)?;
    let mut controllers: Vec<Box<dyn SignalController>> = Vec::with_capacity(config.lights.len());
    let mut extra = Vec::new();
    for (i, c) in config.lights.iter().enumerate() {
        let table = PhaseTable::for_light(net, i)?;
        controllers.push(match c {
            LightControl::Static(p) => Box::new(StaticController::new(p.clone(), &table)),
            LightControl::Auction(p) => {
                Box::new(AuctionController::new(p.clone(), net.local_detectors(i)))
            }
            LightControl::Planning(p) => {
                let (setup, dets) =
                    planning_setup(net, demand, i, net.detectors.len() + extra.len());
                extra.extend(dets);
                Box::new(PlanningController::new(*p, setup, table.len()))
            }
        });
    }
    Ok(ControllerSet {
        controllers,
        extra_detectors: extra,
    })
}
