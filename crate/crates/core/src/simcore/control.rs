//! The per-step interface between the simulator and signal controllers.

use crate::netmodel::Detector;

use super::engine::{CarSlot, LaneSlot};
use super::PhaseTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LightMode {
    Green { phase: usize, since: f64 },
    Yellow { from: usize, to: usize, until: f64 },
}

impl LightMode {
    /// The green phase shown, or being left during a yellow.
    pub fn phase(&self) -> usize {
        match *self {
            LightMode::Green { phase, .. } => phase,
            LightMode::Yellow { from, .. } => from,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Keep,
    SwitchTo(usize),
}

/// A detector pass observed during the last step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassEvent {
    pub detector: usize,
    pub time: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectorReading {
    pub occupancy: u32,
    pub pass_count: u64,
    pub mean_speed: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct DetectorCounters {
    pub passes: u64,
    pub speed_sum: f64,
}

/// Read-only access to detector state.
#[derive(Clone, Copy)]
pub struct DetectorView<'a> {
    pub(crate) defs: &'a [Detector],
    pub(crate) counters: &'a [DetectorCounters],
    pub(crate) lanes: &'a [LaneSlot],
    pub(crate) cars: &'a [CarSlot],
    pub(crate) events: &'a [PassEvent],
}

impl<'a> DetectorView<'a> {
    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn definition(&self, detector: usize) -> &'a Detector {
        &self.defs[detector]
    }

    /// Vehicles whose body overlaps the detector zone.
    pub fn occupancy(&self, detector: usize) -> u32 {
        let d = &self.defs[detector];
        let lane = &self.lanes[d.lane];
        let (lo, hi) = d.zone(lane.length);
        lane.cars
            .iter()
            .filter(|&&c| {
                let car = &self.cars[c as usize];
                car.pos >= lo && car.pos - car.vtype.length <= hi
            })
            .count() as u32
    }

    pub fn reading(&self, detector: usize) -> DetectorReading {
        let c = self.counters[detector];
        DetectorReading {
            occupancy: self.occupancy(detector),
            pass_count: c.passes,
            mean_speed: if c.passes == 0 {
                0.0
            } else {
                c.speed_sum / c.passes as f64
            },
        }
    }

    /// Passes recorded during the previous step.
    pub fn events(&self) -> &'a [PassEvent] {
        self.events
    }
}

pub struct ControlContext<'a> {
    pub clock: f64,
    pub light: usize,
    pub mode: LightMode,
    /// True on the first step of each simulated second.
    pub second_tick: bool,
    pub table: &'a PhaseTable,
    pub detectors: DetectorView<'a>,
}

impl ControlContext<'_> {
    pub fn phase(&self) -> usize {
        self.mode.phase()
    }

    pub fn in_transition(&self) -> bool {
        matches!(self.mode, LightMode::Yellow { .. })
    }

    /// Time since the current green started (0 during a yellow).
    pub fn elapsed(&self) -> f64 {
        match self.mode {
            LightMode::Green { since, .. } => self.clock - since,
            LightMode::Yellow { .. } => 0.0,
        }
    }
}

/// A traffic-light controller. The simulator consults each light's
/// controller exactly once per step; switch requests made before the
/// current green has run its minimum duration, or during a yellow, are
/// ignored.
pub trait SignalController: Send {
    fn initial_mode(&self, _table: &PhaseTable) -> LightMode {
        LightMode::Green {
            phase: 0,
            since: 0.0,
        }
    }

    fn decide(&mut self, ctx: &ControlContext<'_>) -> Decision;
}

/// Never changes phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedPhase(pub usize);

impl SignalController for FixedPhase {
    fn initial_mode(&self, _table: &PhaseTable) -> LightMode {
        LightMode::Green {
            phase: self.0,
            since: 0.0,
        }
    }

    fn decide(&mut self, _ctx: &ControlContext<'_>) -> Decision {
        Decision::Keep
    }
}
