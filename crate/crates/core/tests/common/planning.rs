//! Brute-force cost model and enumeration for the planning search.

use greenwave::controllers::{PlanEvent, PlanProblem, PlanningParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn slots(seconds: f64) -> usize {
    (seconds - 1e-9).ceil().max(0.0) as usize
}

/// Cost of following `switches` (slot, target) for `horizon` slots.
///
/// Per slot: arrivals finding their green phase's queue empty pass for
/// free; other arrivals pay a stop; the green phase then discharges its
/// queue FIFO up to its flow; every car still queued at slot end waits.
pub fn schedule_cost(
    p: &PlanProblem,
    w: &PlanningParams,
    switches: &[(usize, usize)],
    horizon: usize,
) -> f64 {
    let n = p.phases();
    let mut queues: Vec<Vec<PlanEvent>> = vec![Vec::new(); n];
    let mut ev = p.events.clone();
    ev.sort_by(|a, b| b.stopped.cmp(&a.stopped).then(a.time.total_cmp(&b.time)));
    for e in ev {
        queues[e.phase].push(e);
    }
    // remaining weight of every event; 0 once served
    let mut left: Vec<Vec<f64>> = queues
        .iter()
        .map(|q| q.iter().map(|e| e.weight).collect())
        .collect();
    let mut head = vec![0usize; n];

    // green phase per slot (None while yellow)
    let mut green: Vec<Option<usize>> = vec![Some(p.phase); horizon];
    let mut switch_at: Vec<bool> = vec![false; horizon];
    let mut phase = p.phase;
    for &(at, to) in switches {
        let y = slots(p.yellow[phase][to]);
        for (t, g) in green.iter_mut().enumerate().skip(at) {
            *g = if t < at + y { None } else { Some(to) };
        }
        switch_at[at] = true;
        phase = to;
    }

    let mut cost = w.change * switches.len() as f64;
    for t in 0..horizon {
        let (lo, hi) = (t as f64, t as f64 + 1.0);
        if switch_at[t] {
            // leaving a green drops any partial discharge
            for q in 0..n {
                if head[q] < queues[q].len() {
                    left[q][head[q]] = queues[q][head[q]].weight;
                }
            }
        }
        for q in 0..n {
            let arriving = |e: &PlanEvent| !e.stopped && e.time >= lo && e.time < hi;
            if green[t] == Some(q) {
                while head[q] < queues[q].len() && arriving(&queues[q][head[q]]) {
                    left[q][head[q]] = 0.0;
                    head[q] += 1;
                }
            }
            for e in &queues[q][head[q]..] {
                if arriving(e) {
                    cost += w.speed_loss * e.weight * p.downstream_limit[q];
                }
            }
        }
        if let Some(g) = green[t] {
            let mut budget = p.discharge[g];
            while budget > 1e-12 && head[g] < queues[g].len() {
                let e = &queues[g][head[g]];
                if !e.stopped && e.time >= hi {
                    break;
                }
                let l = left[g][head[g]];
                if l <= budget + 1e-12 {
                    budget -= l;
                    left[g][head[g]] = 0.0;
                    head[g] += 1;
                } else {
                    left[g][head[g]] = l - budget;
                    budget = 0.0;
                }
            }
        }
        for q in 0..n {
            for (k, e) in queues[q].iter().enumerate().skip(head[q]) {
                if e.stopped || e.time < hi {
                    cost += w.waiting * left[q][k];
                }
            }
        }
    }
    cost
}

/// Every legal schedule: switches at unlocked slots, to any other phase,
/// at most `max_changes` of them.
pub fn enumerate(p: &PlanProblem, horizon: usize, max_changes: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![];
    let mut stack = vec![(
        Vec::<(usize, usize)>::new(),
        p.phase,
        slots(p.min_green[p.phase] - p.elapsed),
    )];
    while let Some((sched, phase, earliest)) = stack.pop() {
        out.push(sched.clone());
        if sched.len() == max_changes {
            continue;
        }
        for at in earliest..horizon {
            for to in (0..p.phases()).filter(|&q| q != phase) {
                let mut s = sched.clone();
                s.push((at, to));
                let next = at + slots(p.yellow[phase][to]) + slots(p.min_green[to]);
                stack.push((s, to, next));
            }
        }
    }
    out
}

pub fn random_problem(rng: &mut ChaCha8Rng) -> PlanProblem {
    let n = rng.gen_range(2..=3);
    let yellow = rng.gen_range(0..=4) as f64 + if rng.gen_bool(0.5) { 0.5 } else { 0.0 };
    let events = (0..rng.gen_range(0..=6))
        .map(|_| {
            let stopped = rng.gen_bool(0.3);
            PlanEvent {
                phase: rng.gen_range(0..n),
                time: if stopped {
                    0.0
                } else {
                    rng.gen_range(0.0..10.0)
                },
                weight: [0.25, 0.5, 1.0, 1.0][rng.gen_range(0..4)],
                stopped,
            }
        })
        .collect();
    PlanProblem {
        phase: rng.gen_range(0..n),
        elapsed: rng.gen_range(0.0..6.0),
        min_green: (0..n).map(|_| rng.gen_range(1..=4) as f64).collect(),
        yellow: (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { yellow }).collect())
            .collect(),
        downstream_limit: (0..n).map(|_| rng.gen_range(5.0..15.0)).collect(),
        discharge: (0..n)
            .map(|_| [0.5, 1.0, 1.5][rng.gen_range(0..3)])
            .collect(),
        events,
    }
}
