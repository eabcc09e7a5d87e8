//! Fixed-schedule round-robin lights.

use crate::simcore::{ControlContext, Decision, LightMode, PhaseTable, SignalController};

#[derive(Debug, Clone, PartialEq)]
pub struct StaticParams {
    /// Green duration of each phase, s.
    pub durations: Vec<f64>,
    /// Shift of the cycle start, s.
    pub offset: f64,
}

impl StaticParams {
    /// Cycle length including the yellow after each phase.
    pub fn cycle(&self, yellows: &[f64]) -> f64 {
        self.durations.iter().sum::<f64>() + yellows.iter().sum::<f64>()
    }
}

/// `yellows[i]` is the yellow shown between phase `i` and phase `i + 1`
/// (wrapping).
pub fn cycle_yellows(table: &PhaseTable) -> Vec<f64> {
    let n = table.len();
    (0..n)
        .map(|i| table.yellow_duration(i, (i + 1) % n))
        .collect()
}

/// Where a fixed schedule is at `clock`: the phase whose green or trailing
/// yellow covers it, the time into that slot, and whether it is the yellow.
fn locate(durations: &[f64], yellows: &[f64], offset: f64, clock: f64) -> (usize, f64, bool) {
    let cycle: f64 = durations.iter().sum::<f64>() + yellows.iter().sum::<f64>();
    if !(cycle > 0.0) {
        return (0, 0.0, false);
    }
    let mut t = (clock - offset).rem_euclid(cycle);
    for (i, (&d, &y)) in durations.iter().zip(yellows).enumerate() {
        if t < d {
            return (i, t, false);
        }
        t -= d;
        if t < y {
            return (i, t, true);
        }
        t -= y;
    }
    // rounding at the very end of the cycle
    (0, 0.0, false)
}

/// The phase a fixed schedule wants at `clock`: phase `i` during its green,
/// phase `i + 1` during the yellow that follows it.
pub fn static_decide(durations: &[f64], yellows: &[f64], offset: f64, clock: f64) -> usize {
    let (i, _, yellow) = locate(durations, yellows, offset, clock);
    if yellow {
        (i + 1) % durations.len()
    } else {
        i
    }
}

#[derive(Debug, Clone)]
pub struct StaticController {
    params: StaticParams,
    yellows: Vec<f64>,
}

impl StaticController {
    pub fn new(params: StaticParams, table: &PhaseTable) -> Self {
        Self {
            yellows: cycle_yellows(table),
            params,
        }
    }
}

impl SignalController for StaticController {
    fn initial_mode(&self, _table: &PhaseTable) -> LightMode {
        let n = self.params.durations.len();
        let (i, into, yellow) = locate(
            &self.params.durations,
            &self.yellows,
            self.params.offset,
            0.0,
        );
        if yellow {
            LightMode::Yellow {
                from: i,
                to: (i + 1) % n,
                until: self.yellows[i] - into,
            }
        } else {
            LightMode::Green {
                phase: i,
                since: -into,
            }
        }
    }

    // Evaluated every step so that switches land on the schedule rather
    // than on the next whole second.
    fn decide(&mut self, ctx: &ControlContext<'_>) -> Decision {
        if ctx.in_transition() {
            return Decision::Keep;
        }
        let want = static_decide(
            &self.params.durations,
            &self.yellows,
            self.params.offset,
            ctx.clock,
        );
        if want == ctx.phase() {
            Decision::Keep
        } else {
            Decision::SwitchTo(want)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_lookup() {
        let d = [10.0, 10.0];
        let y = [3.0, 3.0];
        assert_eq!(static_decide(&d, &y, 0.0, 5.0), 0);
        assert_eq!(static_decide(&d, &y, 0.0, 11.0), 1);
        assert_eq!(static_decide(&d, &y, 0.0, 14.0), 1);
        assert_eq!(static_decide(&d, &y, 0.0, 24.0), 0);
        assert_eq!(static_decide(&d, &y, 0.0, 26.0), 0);
        assert_eq!(static_decide(&d, &y, 0.0, 36.5), 1);
    }

    #[test]
    fn offset_of_one_cycle_is_no_offset() {
        let d = [12.0, 7.0, 20.0];
        let y = [4.0, 0.0, 5.5];
        let cycle = 48.5;
        for k in 0..200 {
            let t = k as f64 * 0.37;
            assert_eq!(
                static_decide(&d, &y, cycle, t),
                static_decide(&d, &y, 0.0, t)
            );
        }
    }
}
