//! Controller configurations as flat parameter vectors.

use super::{Entry, GroupKind, NashError, ParamKind, ParameterVector, RepairGroup, Role};
use crate::controllers::{
    cycle_yellows, AuctionParams, ControlConfig, LightControl, PlanningParams, StaticParams,
};
use crate::netmodel::RoadNetwork;
use crate::simcore::PhaseTable;

pub const STATIC_DURATION_BOUNDS: (f64, f64) = (3.0, 120.0);
pub const AUCTION_DURATION_BOUNDS: (f64, f64) = (3.0, 120.0);
/// Largest magnitude a detector weight may take.
pub const WEIGHT_BOUNDS: (f64, f64) = (-10.0, 10.0);
/// Weights smaller than this in magnitude are treated as a removed sensor.
pub const WEIGHT_DEAD_ZONE: f64 = 0.05;
pub const PENALTY_BOUNDS: (f64, f64) = (0.0, 100.0);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlattenOptions {
    /// Keep each static light's total green time at its current value.
    pub fixed_cycle: bool,
}

fn entry(value: f64, (lo, hi): (f64, f64), group: usize, role: Role) -> Entry {
    Entry {
        value,
        kind: ParamKind::Continuous { lo, hi },
        group,
        role,
    }
}

/// One repair group per light, entries in light order: static lights give
/// their green durations then the offset; auction lights their
/// phase-by-detector weights then minimum, priority and release; planning
/// lights their three penalty weights.
pub fn flatten(
    config: &ControlConfig,
    net: &RoadNetwork,
    opts: FlattenOptions,
) -> Result<ParameterVector, NashError> {
    if config.lights.len() != net.lights.len() {
        return Err(NashError::Shape(format!(
            "{} controllers for {} lights",
            config.lights.len(),
            net.lights.len()
        )));
    }
    let mut entries = Vec::new();
    let mut groups = Vec::new();
    for (g, c) in config.lights.iter().enumerate() {
        let kind = match c {
            LightControl::Static(p) => {
                let table =
                    PhaseTable::for_light(net, g).map_err(|e| NashError::Shape(e.to_string()))?;
                let yellow_total: f64 = cycle_yellows(&table).iter().sum();
                for &d in &p.durations {
                    entries.push(entry(d, STATIC_DURATION_BOUNDS, g, Role::Duration));
                }
                let max_cycle = p.durations.len() as f64 * STATIC_DURATION_BOUNDS.1 + yellow_total;
                entries.push(entry(p.offset, (0.0, max_cycle), g, Role::Offset));
                GroupKind::Static {
                    fixed_cycle: opts.fixed_cycle.then(|| p.durations.iter().sum()),
                    yellow_total,
                }
            }
            LightControl::Auction(p) => {
                for &w in p.weights.iter().flatten() {
                    entries.push(entry(w, WEIGHT_BOUNDS, g, Role::Weight));
                }
                entries.push(entry(p.minimum, AUCTION_DURATION_BOUNDS, g, Role::Minimum));
                entries.push(entry(
                    p.priority,
                    AUCTION_DURATION_BOUNDS,
                    g,
                    Role::Priority,
                ));
                entries.push(entry(p.release, AUCTION_DURATION_BOUNDS, g, Role::Release));
                GroupKind::Auction
            }
            LightControl::Planning(p) => {
                for v in [p.speed_loss, p.waiting, p.change] {
                    entries.push(entry(v, PENALTY_BOUNDS, g, Role::Penalty));
                }
                GroupKind::Planning
            }
        };
        groups.push(RepairGroup {
            light: Some(g),
            kind,
        });
    }
    Ok(ParameterVector { entries, groups })
}

/// Inverse of [`flatten`].
pub fn unflatten(s: &ParameterVector, net: &RoadNetwork) -> Result<ControlConfig, NashError> {
    let mut lights = Vec::with_capacity(net.lights.len());
    let mut at = 0;
    let shape = |msg: String| NashError::Shape(msg);
    for (g, group) in s.groups.iter().enumerate() {
        let Some(light) = group.light else {
            return Err(shape(format!("group {g} is not tied to a light")));
        };
        if light != lights.len() || light >= net.lights.len() {
            return Err(shape(format!("group {g} names light {light} out of order")));
        }
        let start = at;
        while at < s.entries.len() && s.entries[at].group == g {
            at += 1;
        }
        let vals: Vec<f64> = s.entries[start..at].iter().map(|e| e.value).collect();
        let phases = net.lights[light].phases.len();
        lights.push(match group.kind {
            GroupKind::Static { .. } => {
                if vals.len() != phases + 1 {
                    return Err(shape(format!(
                        "light {light}: {} entries for a {phases}-phase static light",
                        vals.len()
                    )));
                }
                LightControl::Static(StaticParams {
                    durations: vals[..phases].to_vec(),
                    offset: vals[phases],
                })
            }
            GroupKind::Auction => {
                let dets = net.local_detectors(light).len();
                if vals.len() != phases * dets + 3 {
                    return Err(shape(format!(
                        "light {light}: {} entries, expected {phases} x {dets} weights + 3",
                        vals.len()
                    )));
                }
                let n = phases * dets;
                LightControl::Auction(AuctionParams {
                    weights: (0..phases)
                        .map(|p| vals[p * dets..(p + 1) * dets].to_vec())
                        .collect(),
                    minimum: vals[n],
                    priority: vals[n + 1],
                    release: vals[n + 2],
                })
            }
            GroupKind::Planning => {
                if vals.len() != 3 {
                    return Err(shape(format!("light {light}: planning needs 3 entries")));
                }
                LightControl::Planning(PlanningParams {
                    speed_loss: vals[0],
                    waiting: vals[1],
                    change: vals[2],
                })
            }
            GroupKind::Plain => return Err(shape(format!("group {g} has no controller kind"))),
        });
    }
    if at != s.entries.len() || lights.len() != net.lights.len() {
        return Err(shape(format!(
            "{} groups / {} entries do not cover {} lights",
            s.groups.len(),
            s.entries.len(),
            net.lights.len()
        )));
    }
    Ok(ControlConfig { lights })
}
