//! Planning lights: remote detectors put upcoming cars on per-phase
//! timelines and a dynamic program over a one-second grid picks the phase
//! sequence with the lowest speed-loss, waiting and phase-change cost.

use std::collections::HashMap;

use crate::simcore::{
    ControlContext, Decision, LightMode, PassEvent, PhaseTable, SignalController,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningParams {
    /// Cost per forced stop, scaled by the downstream speed limit.
    pub speed_loss: f64,
    /// Cost per car-second spent queued.
    pub waiting: f64,
    /// Cost per phase change.
    pub change: f64,
}

impl Default for PlanningParams {
    fn default() -> Self {
        Self {
            speed_loss: 0.5,
            waiting: 1.0,
            change: 5.0,
        }
    }
}

/// Search limits of the dynamic program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningLimits {
    /// Seconds planned past the last known arrival.
    pub tail: usize,
    /// Hard cap on the planning horizon, s.
    pub max_horizon: usize,
    /// Changes considered per plan.
    pub max_changes: usize,
    /// Events beyond this many (earliest first) are ignored.
    pub max_events: usize,
    pub prune: bool,
}

impl Default for PlanningLimits {
    fn default() -> Self {
        Self {
            tail: 5,
            max_horizon: 30,
            max_changes: 3,
            max_events: 96,
            prune: true,
        }
    }
}

/// A predicted arrival at the stop line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub weight: f64,
    /// Detector that produced the prediction.
    pub source: usize,
    /// Arrivals from one pass share a group across phases.
    pub group: u64,
}

/// Per-phase predicted arrivals, time-ordered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeline {
    pub phases: Vec<Vec<Arrival>>,
    next_group: u64,
}

impl Timeline {
    pub fn new(phases: usize) -> Self {
        Self {
            phases: vec![Vec::new(); phases],
            next_group: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.phases.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn remove_group(&mut self, group: u64) {
        for p in &mut self.phases {
            p.retain(|a| a.group != group);
        }
    }
}

/// What the planner knows about one remote detector.
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteSensor {
    /// Distance from the detector to the stop line, m.
    pub distance: f64,
    /// Expected share of passers needing each phase.
    pub phase_weights: Vec<f64>,
    /// Detectors a car passes just before this one.
    pub upstream: Vec<usize>,
}

/// Exponential moving average of pass speeds per detector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    speeds: Vec<f64>,
    updated: Vec<f64>,
    half_life: f64,
}

impl SpeedProfile {
    pub const MIN_SPEED: f64 = 1.0;

    pub fn new(initial: Vec<f64>, half_life: f64) -> Self {
        let n = initial.len();
        Self {
            speeds: initial,
            updated: vec![f64::NEG_INFINITY; n],
            half_life,
        }
    }

    pub fn speed(&self, sensor: usize) -> f64 {
        self.speeds[sensor].max(Self::MIN_SPEED)
    }

    pub fn observe(&mut self, sensor: usize, time: f64, speed: f64) {
        let dt = time - self.updated[sensor];
        let alpha = if dt.is_finite() {
            1.0 - 0.5f64.powf(dt.max(0.0) / self.half_life)
        } else {
            0.5
        };
        self.speeds[sensor] += alpha * (speed - self.speeds[sensor]);
        self.updated[sensor] = time;
    }
}

/// Adds arrivals for new pass events and drops arrivals already due.
/// `events` carry sensor indices into `sensors`. A pass hands the car over
/// from the detector just upstream, so the earliest pending arrival from
/// that detector is removed first.
pub fn update_timeline(
    tl: &mut Timeline,
    events: &[PassEvent],
    sensors: &[RemoteSensor],
    speeds: &SpeedProfile,
    now: f64,
) {
    for ev in events {
        let s = &sensors[ev.detector];
        if !s.upstream.is_empty() {
            let handoff = tl
                .phases
                .iter()
                .flatten()
                .filter(|a| s.upstream.contains(&a.source))
                .min_by(|a, b| a.time.total_cmp(&b.time).then(a.group.cmp(&b.group)))
                .map(|a| a.group);
            if let Some(g) = handoff {
                tl.remove_group(g);
            }
        }
        let time = ev.time + s.distance / speeds.speed(ev.detector);
        let group = tl.next_group;
        tl.next_group += 1;
        for (p, &w) in s.phase_weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let list = &mut tl.phases[p];
            let at = list.partition_point(|a| a.time <= time);
            list.insert(
                at,
                Arrival {
                    time,
                    weight: w,
                    source: ev.detector,
                    group,
                },
            );
        }
    }
    for list in &mut tl.phases {
        list.retain(|a| a.time >= now);
    }
}

/// One car (or fraction of one) the plan has to serve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEvent {
    pub phase: usize,
    /// Seconds from now.
    pub time: f64,
    pub weight: f64,
    /// Already queued at the stop line: no further speed loss.
    pub stopped: bool,
}

/// The light as the planner sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanProblem {
    pub phase: usize,
    /// Green time already shown by `phase`, s.
    pub elapsed: f64,
    pub min_green: Vec<f64>,
    /// `yellow[i][j]` in seconds (0 when none).
    pub yellow: Vec<Vec<f64>>,
    /// Speed limit cars of each phase drive onto.
    pub downstream_limit: Vec<f64>,
    /// Weighted cars each green phase discharges per second.
    pub discharge: Vec<f64>,
    pub events: Vec<PlanEvent>,
}

impl PlanProblem {
    pub fn phases(&self) -> usize {
        self.min_green.len()
    }

    /// Events per phase in FIFO order (stopped first, then by time).
    pub(crate) fn queues(&self, max_events: usize) -> Vec<Vec<PlanEvent>> {
        let mut ev = self.events.clone();
        ev.sort_by(|a, b| {
            b.stopped
                .cmp(&a.stopped)
                .then(a.time.total_cmp(&b.time))
                .then(a.phase.cmp(&b.phase))
        });
        ev.truncate(max_events);
        let mut q = vec![Vec::new(); self.phases()];
        for e in ev {
            q[e.phase].push(e);
        }
        q
    }

    pub fn horizon(&self, limits: &PlanningLimits) -> usize {
        let last = self.events.iter().map(|e| e.time).fold(0.0f64, f64::max);
        (last.ceil() as usize + limits.tail).min(limits.max_horizon)
    }
}

/// A phase change: at the start of slot `at` the light leaves its green for
/// `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Switch {
    pub at: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub switches: Vec<Switch>,
    pub cost: f64,
}

impl Plan {
    pub fn decision(&self) -> Decision {
        match self.switches.first() {
            Some(s) if s.at == 0 => Decision::SwitchTo(s.to),
            _ => Decision::Keep,
        }
    }

    fn first_switch(&self) -> usize {
        self.switches.first().map_or(usize::MAX, |s| s.at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Mode {
    /// Green; `lock` slots remain before a change is allowed.
    Green { phase: usize, lock: usize },
    /// Yellow for `left` more slots, then green `to`.
    Yellow { to: usize, left: usize },
}

#[derive(Debug, Clone)]
struct Node {
    mode: Mode,
    /// Per phase: how many queued events have been resolved (FIFO prefix).
    served: Vec<u16>,
    /// Partial service of the head event of the green phase.
    head_left: f64,
    cost: f64,
    switches: Vec<Switch>,
}

impl Node {
    fn key(&self) -> (Mode, Vec<u16>, u64) {
        (self.mode, self.served.clone(), self.head_left.to_bits())
    }

    fn first_switch(&self) -> usize {
        self.switches.first().map_or(usize::MAX, |s| s.at)
    }

    fn dominates(&self, other: &Node) -> bool {
        self.cost <= other.cost
            && self.switches.len() <= other.switches.len()
            && self.first_switch() <= other.first_switch()
    }
}

fn slots(seconds: f64) -> usize {
    (seconds - 1e-9).ceil().max(0.0) as usize
}

/// Shared slot dynamics for the search and the exhaustive reference.
pub(crate) struct SlotModel<'a> {
    pub problem: &'a PlanProblem,
    pub params: &'a PlanningParams,
    pub queues: Vec<Vec<PlanEvent>>,
}

impl SlotModel<'_> {
    /// Advances one slot `t` with `green` showing (None during yellow).
    /// Returns the slot cost.
    pub(crate) fn advance(
        &self,
        t: usize,
        green: Option<usize>,
        served: &mut [u16],
        head_left: &mut f64,
    ) -> f64 {
        let p = self.problem;
        let mut cost = 0.0;
        let lo = t as f64;
        let hi = lo + 1.0;
        for (q, queue) in self.queues.iter().enumerate() {
            // arrivals during the slot that find an empty queue on a green
            // phase pass without stopping
            let mut k = served[q] as usize;
            while k < queue.len() {
                let e = &queue[k];
                let arriving = e.time >= lo && e.time < hi && !e.stopped;
                if green == Some(q) && arriving && k == served[q] as usize {
                    served[q] += 1;
                    k += 1;
                    continue;
                }
                break;
            }
            for e in queue[served[q] as usize..].iter() {
                if !e.stopped && e.time >= lo && e.time < hi {
                    cost += self.params.speed_loss * e.weight * p.downstream_limit[q];
                }
            }
        }
        if let Some(g) = green {
            let mut budget = p.discharge[g];
            let queue = &self.queues[g];
            while budget > 1e-12 {
                let k = served[g] as usize;
                let Some(e) = queue.get(k) else { break };
                if !e.stopped && e.time >= hi {
                    break;
                }
                let left = if *head_left > 0.0 {
                    *head_left
                } else {
                    e.weight
                };
                if left <= budget + 1e-12 {
                    budget -= left;
                    served[g] += 1;
                    *head_left = 0.0;
                } else {
                    *head_left = left - budget;
                    budget = 0.0;
                }
            }
        }
        for (q, queue) in self.queues.iter().enumerate() {
            let mut k = served[q] as usize;
            let mut waiting = 0.0;
            if green == Some(q) && *head_left > 0.0 && k < queue.len() {
                waiting += *head_left;
                k += 1;
            }
            for e in &queue[k..] {
                if e.stopped || e.time < hi {
                    waiting += e.weight;
                }
            }
            cost += self.params.waiting * waiting;
        }
        cost
    }

    /// Phases with anything left to serve.
    pub(crate) fn in_demand(&self, served: &[u16]) -> Vec<bool> {
        self.queues
            .iter()
            .zip(served)
            .map(|(q, &s)| (s as usize) < q.len())
            .collect()
    }
}

/// Searches switch sequences over the planning horizon. Returns the plan
/// of lowest cost (ties: fewer changes, then earliest first change).
pub fn plan_schedule(
    problem: &PlanProblem,
    params: &PlanningParams,
    limits: &PlanningLimits,
) -> Plan {
    let n = problem.phases();
    let model = SlotModel {
        problem,
        params,
        queues: problem.queues(limits.max_events),
    };
    let horizon = problem.horizon(limits);
    let first_lock = slots(problem.min_green[problem.phase] - problem.elapsed);
    let mut frontier = vec![Node {
        mode: Mode::Green {
            phase: problem.phase,
            lock: first_lock,
        },
        served: vec![0; n],
        head_left: 0.0,
        cost: 0.0,
        switches: Vec::new(),
    }];

    for t in 0..horizon {
        // branch: every unlocked green may change to a phase in demand
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for node in &frontier {
            next.push(node.clone());
            let Mode::Green { phase, lock: 0 } = node.mode else {
                continue;
            };
            if node.switches.len() >= limits.max_changes {
                continue;
            }
            let demand = model.in_demand(&node.served);
            for to in (0..n).filter(|&q| q != phase && demand[q]) {
                let y = slots(problem.yellow[phase][to]);
                let mut child = node.clone();
                child.cost += params.change;
                child.switches.push(Switch { at: t, to });
                child.mode = if y == 0 {
                    Mode::Green {
                        phase: to,
                        lock: slots(problem.min_green[to]),
                    }
                } else {
                    Mode::Yellow { to, left: y }
                };
                // a phase change ends any partial discharge
                child.head_left = 0.0;
                next.push(child);
            }
        }
        // advance every node through slot t
        for node in &mut next {
            let green = match node.mode {
                Mode::Green { phase, .. } => Some(phase),
                Mode::Yellow { .. } => None,
            };
            node.cost += model.advance(t, green, &mut node.served, &mut node.head_left);
            node.mode = match node.mode {
                Mode::Green { phase, lock } => Mode::Green {
                    phase,
                    lock: lock.saturating_sub(1),
                },
                Mode::Yellow { to, left } if left > 1 => Mode::Yellow { to, left: left - 1 },
                Mode::Yellow { to, .. } => Mode::Green {
                    phase: to,
                    lock: slots(problem.min_green[to]),
                },
            };
        }
        frontier = if limits.prune { prune(next) } else { next };
    }

    frontier
        .into_iter()
        .map(|n| Plan {
            switches: n.switches,
            cost: n.cost,
        })
        .min_by(|a, b| {
            a.cost
                .total_cmp(&b.cost)
                .then(a.switches.len().cmp(&b.switches.len()))
                .then(a.first_switch().cmp(&b.first_switch()))
        })
        .expect("the keep schedule is always present")
}

/// Drops nodes whose future is identical to another node's (same light
/// state and same queues) but which are no better in cost, change count or
/// first change time.
fn prune(nodes: Vec<Node>) -> Vec<Node> {
    let mut groups: HashMap<(Mode, Vec<u16>, u64), Vec<Node>> = HashMap::new();
    let mut order = Vec::new();
    for node in nodes {
        let key = node.key();
        let group = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        if group.iter().any(|g| g.dominates(&node)) {
            continue;
        }
        group.retain(|g| !node.dominates(g));
        group.push(node);
    }
    order
        .into_iter()
        .flat_map(|k| groups.remove(&k).unwrap_or_default())
        .collect()
}

/// Fixed inputs of a planning light.
#[derive(Debug, Clone)]
pub struct PlanningSetup {
    /// Simulator indices of the remote detectors, aligned with `sensors`.
    pub detectors: Vec<usize>,
    pub sensors: Vec<RemoteSensor>,
    /// Simulator indices of local queue detectors with their phase shares.
    pub local: Vec<(usize, Vec<f64>)>,
    pub downstream_limit: Vec<f64>,
    pub discharge: Vec<f64>,
    pub initial_speeds: Vec<f64>,
    pub limits: PlanningLimits,
}

pub struct PlanningController {
    params: PlanningParams,
    setup: PlanningSetup,
    by_detector: HashMap<usize, usize>,
    timeline: Timeline,
    speeds: SpeedProfile,
    scratch: Vec<PassEvent>,
}

impl PlanningController {
    pub const SPEED_HALF_LIFE: f64 = 60.0;

    pub fn new(params: PlanningParams, setup: PlanningSetup, phases: usize) -> Self {
        let by_detector = setup
            .detectors
            .iter()
            .enumerate()
            .map(|(i, &d)| (d, i))
            .collect();
        Self {
            speeds: SpeedProfile::new(setup.initial_speeds.clone(), Self::SPEED_HALF_LIFE),
            params,
            by_detector,
            timeline: Timeline::new(phases),
            setup,
            scratch: Vec::new(),
        }
    }

    fn problem(&self, ctx: &ControlContext<'_>, phase: usize, elapsed: f64) -> PlanProblem {
        let table: &PhaseTable = ctx.table;
        let n = table.len();
        let mut events = Vec::new();
        for (d, shares) in &self.setup.local {
            let occ = ctx.detectors.occupancy(*d);
            for _ in 0..occ {
                for (p, &w) in shares.iter().enumerate() {
                    if w > 0.0 {
                        events.push(PlanEvent {
                            phase: p,
                            time: 0.0,
                            weight: w,
                            stopped: true,
                        });
                    }
                }
            }
        }
        for (p, list) in self.timeline.phases.iter().enumerate() {
            for a in list {
                events.push(PlanEvent {
                    phase: p,
                    time: a.time - ctx.clock,
                    weight: a.weight,
                    stopped: false,
                });
            }
        }
        PlanProblem {
            phase,
            elapsed,
            min_green: table.phases.iter().map(|p| p.min_duration).collect(),
            yellow: (0..n)
                .map(|i| (0..n).map(|j| table.yellow_duration(i, j)).collect())
                .collect(),
            downstream_limit: self.setup.downstream_limit.clone(),
            discharge: self.setup.discharge.clone(),
            events,
        }
    }
}

impl SignalController for PlanningController {
    fn decide(&mut self, ctx: &ControlContext<'_>) -> Decision {
        self.scratch.clear();
        for ev in ctx.detectors.events() {
            if let Some(&i) = self.by_detector.get(&ev.detector) {
                self.speeds.observe(i, ev.time, ev.speed);
                self.scratch.push(PassEvent { detector: i, ..*ev });
            }
        }
        update_timeline(
            &mut self.timeline,
            &self.scratch,
            &self.setup.sensors,
            &self.speeds,
            ctx.clock,
        );
        if !ctx.second_tick {
            return Decision::Keep;
        }
        let LightMode::Green { phase, since } = ctx.mode else {
            return Decision::Keep;
        };
        let problem = self.problem(ctx, phase, ctx.clock - since);
        plan_schedule(&problem, &self.params, &self.setup.limits).decision()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sensor(distance: f64, weights: Vec<f64>, upstream: Vec<usize>) -> RemoteSensor {
        RemoteSensor {
            distance,
            phase_weights: weights,
            upstream,
        }
    }

    fn pass(detector: usize, time: f64) -> PassEvent {
        PassEvent {
            detector,
            time,
            speed: 10.0,
        }
    }

    #[test]
    fn pass_becomes_weighted_arrival() {
        let sensors = vec![sensor(90.0, vec![0.0, 0.5], vec![])];
        let speeds = SpeedProfile::new(vec![10.0], 60.0);
        let mut tl = Timeline::new(2);
        update_timeline(&mut tl, &[], &sensors, &speeds, 0.0);
        assert!(tl.is_empty());
        update_timeline(&mut tl, &[pass(0, 100.0)], &sensors, &speeds, 100.0);
        assert!(tl.phases[0].is_empty());
        assert_eq!(tl.phases[1].len(), 1);
        assert!((tl.phases[1][0].time - 109.0).abs() < 1e-12);
        assert_eq!(tl.phases[1][0].weight, 0.5);
    }

    #[test]
    fn split_weights_and_stale_drop() {
        let sensors = vec![sensor(30.0, vec![0.7, 0.3], vec![])];
        let speeds = SpeedProfile::new(vec![10.0], 60.0);
        let mut tl = Timeline::new(2);
        update_timeline(&mut tl, &[pass(0, 0.0)], &sensors, &speeds, 0.0);
        let total: f64 = tl.phases.iter().flatten().map(|a| a.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        update_timeline(&mut tl, &[], &sensors, &speeds, 3.5);
        assert!(tl.is_empty());
    }

    #[test]
    fn handoff_replaces_upstream_prediction() {
        let sensors = vec![
            sensor(30.0, vec![1.0], vec![1]),
            sensor(60.0, vec![1.0], vec![]),
        ];
        let speeds = SpeedProfile::new(vec![10.0, 10.0], 60.0);
        let mut tl = Timeline::new(1);
        update_timeline(&mut tl, &[pass(1, 0.0)], &sensors, &speeds, 0.0);
        update_timeline(&mut tl, &[pass(0, 4.0)], &sensors, &speeds, 4.0);
        assert_eq!(tl.phases[0].len(), 1);
        assert!((tl.phases[0][0].time - 7.0).abs() < 1e-12);
    }

    fn problem(events: Vec<PlanEvent>) -> PlanProblem {
        PlanProblem {
            phase: 0,
            elapsed: 10.0,
            min_green: vec![3.0, 3.0],
            yellow: vec![vec![0.0, 4.0], vec![4.0, 0.0]],
            downstream_limit: vec![10.0, 10.0],
            discharge: vec![1.0, 1.0],
            events,
        }
    }

    #[test]
    fn idle_light_keeps() {
        let plan = plan_schedule(
            &problem(vec![]),
            &PlanningParams::default(),
            &PlanningLimits::default(),
        );
        assert!(plan.switches.is_empty());
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn early_change_when_current_phase_empties() {
        let mut events: Vec<PlanEvent> = (0..4)
            .map(|k| PlanEvent {
                phase: 0,
                time: k as f64 + 0.5,
                weight: 1.0,
                stopped: false,
            })
            .collect();
        events.push(PlanEvent {
            phase: 1,
            time: 20.0,
            weight: 1.0,
            stopped: false,
        });
        let plan = plan_schedule(
            &problem(events),
            &PlanningParams::default(),
            &PlanningLimits::default(),
        );
        assert_eq!(plan.switches.first(), Some(&Switch { at: 4, to: 1 }));
    }
}
