//! Discrete-time, continuous-space vehicle dynamics.
//!
//! Each step: lights resolve finished yellows and consult their controllers,
//! released cars enter when their first lane has room, every car computes a
//! Krauss safe speed from the state at the start of the step, positions are
//! committed, detector passes are recorded and finally front cars cross to
//! their next lane or leave the network.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netmodel::{Demand, Detector, RoadNetwork, SignalLink};
use crate::vehicle::{self, VehicleType};

use super::control::{
    ControlContext, Decision, DetectorCounters, DetectorReading, DetectorView, LightMode,
    PassEvent, SignalController,
};
use super::{CarOutcome, PhaseTable, SimConfig, SimError, SimResult};

const NONE: u32 = u32::MAX;
const EPS: f64 = 1e-9;
/// Speeds below this, m/s, are snapped to zero.
const STANDSTILL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CarState {
    Pending,
    Waiting,
    Active,
    Finished,
}

#[derive(Debug, Clone)]
pub(crate) struct CarSlot {
    pub vtype: VehicleType,
    route: u32,
    leg: u32,
    lane: u32,
    next_lane: u32,
    next_link: Option<SignalLink>,
    pub pos: f64,
    pub speed: f64,
    new_pos: f64,
    new_speed: f64,
    prev_pos: f64,
    entered: bool,
    committed: bool,
    entry: f64,
    exit: Option<f64>,
    state: CarState,
}

#[derive(Debug, Clone)]
pub(crate) struct LaneSlot {
    pub length: f64,
    limit: f64,
    /// Front (closest to the stop line) first.
    pub cars: VecDeque<u32>,
    detectors: Vec<u32>,
}

/// A green start observed during the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseStart {
    pub light: usize,
    pub phase: usize,
    pub time: f64,
}

struct LightSlot {
    table: PhaseTable,
    mode: LightMode,
    signals: Vec<u8>,
}

impl LightSlot {
    fn show(&mut self) {
        let s = match self.mode {
            LightMode::Green { phase, .. } => &self.table.phases[phase].state,
            LightMode::Yellow { from, to, .. } => {
                &self.table.yellow[from][to]
                    .as_ref()
                    .expect("yellow mode without a grid entry")
                    .state
            }
        };
        self.signals.clear();
        self.signals.extend_from_slice(s.as_bytes());
    }
}

/// Controllers for every light of a network, plus any extra detectors
/// (planning sensors) they read. Extra detectors are indexed after the
/// network's own.
pub struct ControllerSet {
    pub controllers: Vec<Box<dyn SignalController>>,
    pub extra_detectors: Vec<Detector>,
}

impl ControllerSet {
    pub fn new(controllers: Vec<Box<dyn SignalController>>) -> Self {
        Self {
            controllers,
            extra_detectors: Vec::new(),
        }
    }
}

pub struct Simulation<'a> {
    net: &'a RoadNetwork,
    demand: &'a Demand,
    cfg: SimConfig,
    step_index: u64,
    clock: f64,
    cars: Vec<CarSlot>,
    release_order: Vec<u32>,
    next_release: usize,
    entry_queues: Vec<VecDeque<u32>>,
    queued_edges: Vec<usize>,
    lanes: Vec<LaneSlot>,
    lights: Vec<LightSlot>,
    controllers: Vec<Box<dyn SignalController>>,
    detectors: Vec<Detector>,
    counters: Vec<DetectorCounters>,
    events: Vec<PassEvent>,
    next_events: Vec<PassEvent>,
    feasible: Vec<Vec<Vec<u32>>>,
    phase_log: Vec<PhaseStart>,
    released: usize,
    active: usize,
    waiting: usize,
    finished: usize,
}

fn krauss_safe_speed(v: f64, leader_speed: f64, gap: f64, vt: &VehicleType) -> f64 {
    let tau = vt.reaction;
    leader_speed + (gap - leader_speed * tau) / ((v + leader_speed) / (2.0 * vt.max_decel) + tau)
}

impl<'a> Simulation<'a> {
    pub fn new(
        net: &'a RoadNetwork,
        demand: &'a Demand,
        set: ControllerSet,
        cfg: SimConfig,
    ) -> Result<Self, SimError> {
        if !(cfg.dt > 0.0) || !(cfg.horizon > 0.0) {
            return Err(SimError::Config("dt and horizon must be positive".into()));
        }
        if set.controllers.len() != net.lights.len() {
            return Err(SimError::Config(format!(
                "{} controllers for {} lights",
                set.controllers.len(),
                net.lights.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let catalog = vehicle::catalog();
        let feasible: Vec<Vec<Vec<u32>>> = demand
            .routes
            .iter()
            .map(|r| {
                net.feasible_lanes(&r.edges)
                    .into_iter()
                    .map(|v| v.into_iter().map(|l| l as u32).collect())
                    .collect()
            })
            .collect();
        if let Some(r) = feasible.iter().position(|f| f.iter().any(Vec::is_empty)) {
            return Err(SimError::Config(format!(
                "route {} cannot be driven",
                demand.routes[r].id
            )));
        }
        let cars: Vec<CarSlot> = demand
            .records
            .iter()
            .map(|rec| {
                let entry = if cfg.entry_jitter > 0.0 {
                    (rec.entry + rng.gen_range(-cfg.entry_jitter..=cfg.entry_jitter)).max(0.0)
                } else {
                    rec.entry
                };
                CarSlot {
                    vtype: catalog[rec.vtype],
                    route: rec.route as u32,
                    leg: 0,
                    lane: NONE,
                    next_lane: NONE,
                    next_link: None,
                    pos: 0.0,
                    speed: 0.0,
                    new_pos: 0.0,
                    new_speed: 0.0,
                    prev_pos: 0.0,
                    entered: false,
                    committed: false,
                    entry,
                    exit: None,
                    state: CarState::Pending,
                }
            })
            .collect();
        let mut release_order: Vec<u32> = (0..cars.len() as u32).collect();
        release_order.sort_by(|&a, &b| {
            cars[a as usize]
                .entry
                .total_cmp(&cars[b as usize].entry)
                .then(a.cmp(&b))
        });

        let mut detectors = net.detectors.clone();
        detectors.extend(set.extra_detectors);
        let mut lanes: Vec<LaneSlot> = net
            .lanes
            .iter()
            .map(|l| LaneSlot {
                length: l.length,
                limit: l.speed_limit,
                cars: VecDeque::new(),
                detectors: Vec::new(),
            })
            .collect();
        for (i, d) in detectors.iter().enumerate() {
            if d.lane >= lanes.len() {
                return Err(SimError::Config(format!("detector {} has no lane", d.id)));
            }
            lanes[d.lane].detectors.push(i as u32);
        }

        let mut lights = Vec::with_capacity(net.lights.len());
        let mut phase_log = Vec::new();
        for (i, c) in set.controllers.iter().enumerate() {
            let table = PhaseTable::for_light(net, i)?;
            let mode = c.initial_mode(&table);
            let valid = match mode {
                LightMode::Green { phase, .. } => phase < table.len(),
                LightMode::Yellow { from, to, .. } => {
                    from < table.len() && to < table.len() && table.yellow[from][to].is_some()
                }
            };
            if !valid {
                return Err(SimError::Config(format!("light {i}: bad initial phase")));
            }
            if let LightMode::Green { phase, since } = mode {
                phase_log.push(PhaseStart {
                    light: i,
                    phase,
                    time: since,
                });
            }
            let mut slot = LightSlot {
                table,
                mode,
                signals: Vec::new(),
            };
            slot.show();
            lights.push(slot);
        }

        let counters = vec![DetectorCounters::default(); detectors.len()];
        Ok(Simulation {
            net,
            demand,
            cfg,
            step_index: 0,
            clock: 0.0,
            cars,
            release_order,
            next_release: 0,
            entry_queues: vec![VecDeque::new(); net.edges.len()],
            queued_edges: Vec::new(),
            lanes,
            lights,
            controllers: set.controllers,
            detectors,
            counters,
            events: Vec::new(),
            next_events: Vec::new(),
            feasible,
            phase_log,
            released: 0,
            active: 0,
            waiting: 0,
            finished: 0,
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn is_done(&self) -> bool {
        self.finished == self.cars.len()
    }

    /// (released, finished, in network, waiting to enter)
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        (self.released, self.finished, self.active, self.waiting)
    }

    pub fn phase_log(&self) -> &[PhaseStart] {
        &self.phase_log
    }

    pub fn light_mode(&self, light: usize) -> LightMode {
        self.lights[light].mode
    }

    pub fn signal_state(&self, light: usize) -> &str {
        std::str::from_utf8(&self.lights[light].signals).unwrap_or("")
    }

    pub fn detector_definitions(&self) -> &[Detector] {
        &self.detectors
    }

    fn view(&self) -> DetectorView<'_> {
        DetectorView {
            defs: &self.detectors,
            counters: &self.counters,
            lanes: &self.lanes,
            cars: &self.cars,
            events: &self.events,
        }
    }

    pub fn read_detector(&self, id: &str) -> Result<DetectorReading, SimError> {
        let i = self
            .detectors
            .iter()
            .position(|d| d.id == id)
            .ok_or_else(|| SimError::UnknownDetector(id.to_string()))?;
        Ok(self.view().reading(i))
    }

    pub fn reset_detector(&mut self, id: &str) -> Result<(), SimError> {
        let i = self
            .detectors
            .iter()
            .position(|d| d.id == id)
            .ok_or_else(|| SimError::UnknownDetector(id.to_string()))?;
        self.counters[i] = DetectorCounters::default();
        Ok(())
    }

    /// Vehicles on a lane as (position of front, speed, length), front first.
    pub fn lane_vehicles(&self, lane: usize) -> Vec<(f64, f64, f64)> {
        self.lanes[lane]
            .cars
            .iter()
            .map(|&c| {
                let car = &self.cars[c as usize];
                (car.pos, car.speed, car.vtype.length)
            })
            .collect()
    }

    /// Places a stopped car of the given demand record directly on a lane;
    /// meant for detector and dynamics tests.
    pub fn place_car(&mut self, record: usize, lane: usize, pos: f64) -> Result<(), SimError> {
        let route = &self.demand.routes[self.demand.records[record].route];
        let leg = route
            .edges
            .iter()
            .position(|&e| e == self.net.lanes[lane].edge)
            .ok_or_else(|| SimError::Config("lane not on the car's route".into()))?;
        let car = &mut self.cars[record];
        if car.state != CarState::Pending {
            return Err(SimError::Config("car already released".into()));
        }
        car.state = CarState::Active;
        car.leg = leg as u32;
        car.pos = pos;
        car.prev_pos = pos;
        self.released += 1;
        self.active += 1;
        self.release_order.retain(|&c| c as usize != record);
        self.insert_sorted(record as u32, lane);
        self.choose_next_lane(record as u32);
        Ok(())
    }

    fn insert_sorted(&mut self, car: u32, lane: usize) {
        self.cars[car as usize].lane = lane as u32;
        let pos = self.cars[car as usize].pos;
        let cars = &self.cars;
        let at = self.lanes[lane]
            .cars
            .iter()
            .position(|&c| cars[c as usize].pos < pos)
            .unwrap_or(self.lanes[lane].cars.len());
        self.lanes[lane].cars.insert(at, car);
    }

    fn choose_next_lane(&mut self, car: u32) {
        let c = &self.cars[car as usize];
        let route = &self.demand.routes[c.route as usize].edges;
        let leg = c.leg as usize;
        let (next_lane, link) = if leg + 1 < route.len() {
            let allowed = &self.feasible[c.route as usize][leg + 1];
            let mut best: Option<(usize, u32, Option<SignalLink>)> = None;
            for &ci in self.net.lane_out(c.lane as usize) {
                let conn = &self.net.connections[ci];
                let to = conn.to_lane as u32;
                if !allowed.contains(&to) {
                    continue;
                }
                let load = self.lanes[to as usize].cars.len();
                if best.map_or(true, |(bl, bt, _)| (load, to) < (bl, bt)) {
                    best = Some((load, to, conn.signal));
                }
            }
            match best {
                Some((_, to, sig)) => (to, sig),
                None => (NONE, None),
            }
        } else {
            (NONE, None)
        };
        let c = &mut self.cars[car as usize];
        c.next_lane = next_lane;
        c.next_link = link;
    }

    /// Advances the simulation by one timestep.
    pub fn step(&mut self) {
        let dt = self.cfg.dt;
        let t = self.clock;
        let second_tick = self.step_index == 0 || {
            let prev = (self.step_index - 1) as f64 * dt;
            (t + EPS).floor() > (prev + EPS).floor()
        };

        self.update_lights(t, second_tick);
        self.release(t);
        self.spawn();
        self.compute_speeds(dt);
        self.commit();
        self.record_passes(t + dt);
        self.transitions(t + dt);

        std::mem::swap(&mut self.events, &mut self.next_events);
        self.next_events.clear();
        self.step_index += 1;
        self.clock = self.step_index as f64 * dt;
        debug_assert!(
            self.check_invariants().is_ok(),
            "{:?}",
            self.check_invariants()
        );
    }

    fn update_lights(&mut self, t: f64, second_tick: bool) {
        for (i, light) in self.lights.iter_mut().enumerate() {
            if let LightMode::Yellow { to, until, .. } = light.mode {
                if t + EPS >= until {
                    light.mode = LightMode::Green {
                        phase: to,
                        since: t,
                    };
                    light.show();
                    self.phase_log.push(PhaseStart {
                        light: i,
                        phase: to,
                        time: t,
                    });
                }
            }
        }
        let view = DetectorView {
            defs: &self.detectors,
            counters: &self.counters,
            lanes: &self.lanes,
            cars: &self.cars,
            events: &self.events,
        };
        for (i, (light, ctl)) in self
            .lights
            .iter_mut()
            .zip(self.controllers.iter_mut())
            .enumerate()
        {
            let ctx = ControlContext {
                clock: t,
                light: i,
                mode: light.mode,
                second_tick,
                table: &light.table,
                detectors: view,
            };
            let decision = ctl.decide(&ctx);
            let LightMode::Green { phase, since } = light.mode else {
                continue;
            };
            let Decision::SwitchTo(target) = decision else {
                continue;
            };
            if target == phase
                || target >= light.table.len()
                || t - since + EPS < light.table.phases[phase].min_duration
            {
                continue;
            }
            light.mode = match &light.table.yellow[phase][target] {
                Some(y) => LightMode::Yellow {
                    from: phase,
                    to: target,
                    until: t + y.duration,
                },
                None => {
                    self.phase_log.push(PhaseStart {
                        light: i,
                        phase: target,
                        time: t,
                    });
                    LightMode::Green {
                        phase: target,
                        since: t,
                    }
                }
            };
            light.show();
        }
    }

    fn release(&mut self, t: f64) {
        while let Some(&c) = self.release_order.get(self.next_release) {
            let car = &mut self.cars[c as usize];
            if car.entry > t + EPS {
                break;
            }
            self.next_release += 1;
            car.state = CarState::Waiting;
            self.released += 1;
            self.waiting += 1;
            let edge = self.demand.routes[car.route as usize].edges[0];
            if self.entry_queues[edge].is_empty() {
                self.queued_edges.push(edge);
            }
            self.entry_queues[edge].push_back(c);
        }
    }

    fn spawn(&mut self) {
        let mut still = Vec::new();
        let edges = std::mem::take(&mut self.queued_edges);
        for edge in edges {
            while let Some(&c) = self.entry_queues[edge].front() {
                let car = &self.cars[c as usize];
                let gap_needed = car.vtype.min_gap;
                let mut best: Option<(usize, u32)> = None;
                for &l in &self.feasible[car.route as usize][0] {
                    let lane = &self.lanes[l as usize];
                    let room = match lane.cars.back() {
                        None => true,
                        Some(&b) => {
                            let back = &self.cars[b as usize];
                            back.pos - back.vtype.length - gap_needed >= 0.0
                        }
                    };
                    if room {
                        let load = lane.cars.len();
                        if best.map_or(true, |(bl, bi)| (load, l) < (bl, bi)) {
                            best = Some((load, l));
                        }
                    }
                }
                let Some((_, lane)) = best else { break };
                self.entry_queues[edge].pop_front();
                let car = &mut self.cars[c as usize];
                car.state = CarState::Active;
                car.lane = lane;
                car.pos = 0.0;
                car.prev_pos = 0.0;
                car.speed = 0.0;
                car.entered = true;
                self.lanes[lane as usize].cars.push_back(c);
                self.waiting -= 1;
                self.active += 1;
                self.choose_next_lane(c);
            }
            if !self.entry_queues[edge].is_empty() {
                still.push(edge);
            }
        }
        self.queued_edges = still;
    }

    fn compute_speeds(&mut self, dt: f64) {
        for li in 0..self.lanes.len() {
            let lane = &self.lanes[li];
            if lane.cars.is_empty() {
                continue;
            }
            let length = lane.length;
            let limit = lane.limit;
            let mut leader: Option<u32> = None;
            for k in 0..self.lanes[li].cars.len() {
                let ci = self.lanes[li].cars[k];
                let car = &self.cars[ci as usize];
                let vt = car.vtype;
                let v = car.speed;
                let pos = car.pos;
                let vmax = limit * vt.speed_factor;
                // (gap, leader speed, hard position bound)
                let constraint: Option<(f64, f64, f64)> = match leader {
                    Some(l) => {
                        let lc = &self.cars[l as usize];
                        let bound = lc.pos - lc.vtype.length - vt.min_gap;
                        Some((bound - pos, lc.speed, bound))
                    }
                    None => self.front_constraint(ci, length),
                };
                let mut nv = (v + vt.max_accel * dt).min(vmax);
                let mut np;
                if let Some((gap, vl, bound)) = constraint {
                    nv = nv.min(krauss_safe_speed(v, vl, gap, &vt)).max(0.0);
                    np = pos + nv * dt;
                    if np > bound {
                        np = bound.max(pos);
                        nv = ((np - pos) / dt).min(nv);
                    }
                    // creeping toward a stop point is standing still
                    if nv < STANDSTILL {
                        nv = 0.0;
                        np = pos;
                    }
                } else {
                    nv = nv.max(0.0);
                    np = pos + nv * dt;
                }
                let car = &mut self.cars[ci as usize];
                car.new_speed = nv;
                car.new_pos = np;
                leader = Some(ci);
            }
        }
    }

    /// Constraint on the car at the head of a lane: the stop line when its
    /// signal says stop, otherwise the tail of the lane it moves into.
    fn front_constraint(&mut self, ci: u32, length: f64) -> Option<(f64, f64, f64)> {
        let car = &self.cars[ci as usize];
        if car.next_lane == NONE {
            return None;
        }
        let dist = length - car.pos;
        let v = car.speed;
        let mut stop = false;
        if let Some(sig) = car.next_link {
            match self.lights[sig.light].signals[sig.link] {
                b'G' | b'g' => {}
                b'y' => {
                    if !car.committed {
                        if v * v / (2.0 * car.vtype.max_decel) <= dist {
                            stop = true;
                        } else {
                            self.cars[ci as usize].committed = true;
                        }
                    }
                }
                _ => {
                    let can_stop = v * v / (2.0 * car.vtype.emergency_decel) <= dist;
                    if !car.committed || can_stop {
                        stop = true;
                    }
                }
            }
        }
        let car = &self.cars[ci as usize];
        if stop {
            return Some((dist, 0.0, length));
        }
        let next = &self.lanes[car.next_lane as usize];
        match next.cars.back() {
            Some(&t) => {
                let tail = &self.cars[t as usize];
                let room = tail.pos - tail.vtype.length - car.vtype.min_gap;
                Some((dist + room, tail.speed, length + room))
            }
            None => Some((f64::INFINITY, 0.0, length + next.length)),
        }
    }

    fn commit(&mut self) {
        for lane in &self.lanes {
            for &ci in &lane.cars {
                let car = &mut self.cars[ci as usize];
                car.prev_pos = if car.entered {
                    f64::NEG_INFINITY
                } else {
                    car.pos
                };
                car.entered = false;
                car.pos = car.new_pos;
                car.speed = car.new_speed;
            }
        }
    }

    fn record_passes(&mut self, time: f64) {
        for lane in &self.lanes {
            if lane.detectors.is_empty() {
                continue;
            }
            for &ci in &lane.cars {
                let car = &self.cars[ci as usize];
                for &d in &lane.detectors {
                    let (lo, _) = self.detectors[d as usize].zone(lane.length);
                    if car.prev_pos < lo && car.pos >= lo {
                        let c = &mut self.counters[d as usize];
                        c.passes += 1;
                        c.speed_sum += car.speed;
                        self.next_events.push(PassEvent {
                            detector: d as usize,
                            time,
                            speed: car.speed,
                        });
                    }
                }
            }
        }
    }

    fn transitions(&mut self, time: f64) {
        for li in 0..self.lanes.len() {
            let Some(&ci) = self.lanes[li].cars.front() else {
                continue;
            };
            let length = self.lanes[li].length;
            let car = &self.cars[ci as usize];
            if car.pos <= length {
                continue;
            }
            if car.next_lane == NONE {
                self.lanes[li].cars.pop_front();
                let car = &mut self.cars[ci as usize];
                car.state = CarState::Finished;
                car.exit = Some(time);
                self.active -= 1;
                self.finished += 1;
                continue;
            }
            let to = car.next_lane as usize;
            let mut np = car.pos - length;
            let next = &self.lanes[to];
            if let Some(&t) = next.cars.back() {
                let tail = &self.cars[t as usize];
                np = np.min(tail.pos - tail.vtype.length - car.vtype.min_gap);
            }
            np = np.min(next.length);
            if np < 0.0 {
                let car = &mut self.cars[ci as usize];
                car.pos = length;
                car.speed = 0.0;
                continue;
            }
            self.lanes[li].cars.pop_front();
            let next_limit = self.lanes[to].limit;
            let car = &mut self.cars[ci as usize];
            car.pos = np;
            car.speed = car.speed.min(next_limit * car.vtype.speed_factor);
            car.lane = to as u32;
            car.leg += 1;
            car.committed = false;
            let speed = car.speed;
            self.lanes[to].cars.push_back(ci);
            for &d in &self.lanes[to].detectors {
                let (lo, _) = self.detectors[d as usize].zone(self.lanes[to].length);
                if np >= lo {
                    let c = &mut self.counters[d as usize];
                    c.passes += 1;
                    c.speed_sum += speed;
                    self.next_events.push(PassEvent {
                        detector: d as usize,
                        time,
                        speed,
                    });
                }
            }
            self.choose_next_lane(ci);
        }
    }

    /// Safety and conservation checks.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.released != self.finished + self.active + self.waiting {
            return Err(format!(
                "conservation: released {} != finished {} + active {} + waiting {}",
                self.released, self.finished, self.active, self.waiting
            ));
        }
        for (li, lane) in self.lanes.iter().enumerate() {
            for w in lane.cars.iter().collect::<Vec<_>>().windows(2) {
                let (a, b) = (&self.cars[*w[0] as usize], &self.cars[*w[1] as usize]);
                let gap = a.pos - a.vtype.length - b.pos;
                if gap < -1e-6 {
                    return Err(format!(
                        "lane {}: overlap {gap:.3} m at t={:.2}",
                        self.net.lanes[li].id, self.clock
                    ));
                }
            }
        }
        Ok(())
    }

    /// Runs until every car has left or the horizon is reached.
    pub fn run_to_end(mut self) -> SimResult {
        while !self.is_done() && self.clock < self.cfg.horizon - EPS {
            self.step();
        }
        self.result()
    }

    /// Outcome for every car; cars still travelling are charged their
    /// remaining free-flow time after the horizon.
    pub fn result(&self) -> SimResult {
        let end = self.clock.max(self.cfg.horizon);
        let outcomes = self
            .cars
            .iter()
            .zip(&self.demand.records)
            .map(|(car, rec)| {
                let (exit, finished) = match car.exit {
                    Some(x) => (x, true),
                    None => (end.max(car.entry) + self.remaining_free_flow(car), false),
                };
                CarOutcome {
                    vehicle_id: rec.vehicle_id.clone(),
                    entry: car.entry,
                    exit,
                    finished,
                }
            })
            .collect();
        SimResult::from_outcomes(outcomes)
    }

    fn remaining_free_flow(&self, car: &CarSlot) -> f64 {
        let route = &self.demand.routes[car.route as usize].edges;
        match car.state {
            CarState::Active => {
                let lane = &self.net.lanes[car.lane as usize];
                let here = (lane.length - car.pos).max(0.0) / lane.speed_limit;
                here + route[car.leg as usize + 1..]
                    .iter()
                    .map(|&e| self.net.edge_free_flow_time(e))
                    .sum::<f64>()
            }
            _ => self.net.free_flow_time(route),
        }
    }
}
