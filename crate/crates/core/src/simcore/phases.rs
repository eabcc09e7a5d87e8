//! Green phases and the yellow-transition grid between them.

use crate::netmodel::RoadNetwork;

use super::SimError;

/// Safe deceleration used to size yellow intervals, m/s².
pub const YELLOW_DECEL: f64 = 3.0;
/// Driver reaction allowance added to every yellow, s.
pub const YELLOW_REACTION: f64 = 1.0;
/// Shortest green any phase may show, s.
pub const MIN_GREEN: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GreenPhase {
    pub state: String,
    pub min_duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YellowPhase {
    pub state: String,
    pub duration: f64,
}

/// `grid[i][j]` is the intermediate phase shown when leaving green `i` for
/// green `j`; `None` when no signal goes from green to red.
pub type YellowGrid = Vec<Vec<Option<YellowPhase>>>;

/// Builds the yellow grid for a light. `limits[k]` is the speed limit of the
/// fastest lane controlled by signal `k`.
pub fn build_yellow_grid(phases: &[String], limits: &[f64]) -> Result<YellowGrid, SimError> {
    let n = phases.first().map_or(0, |p| p.len());
    if phases.iter().any(|p| p.len() != n) {
        return Err(SimError::Phases(
            "signal-state strings differ in length".into(),
        ));
    }
    if limits.len() != n {
        return Err(SimError::Phases(format!(
            "{} speed limits for {} signals",
            limits.len(),
            n
        )));
    }
    if limits.iter().any(|v| !(*v > 0.0)) {
        return Err(SimError::Phases("speed limits must be positive".into()));
    }
    let grid = phases
        .iter()
        .map(|from| {
            phases
                .iter()
                .map(|to| yellow_between(from.as_bytes(), to.as_bytes(), limits))
                .collect()
        })
        .collect();
    Ok(grid)
}

fn yellow_between(from: &[u8], to: &[u8], limits: &[f64]) -> Option<YellowPhase> {
    let mut vmax: Option<f64> = None;
    let state: String = from
        .iter()
        .zip(to)
        .zip(limits)
        .map(|((&a, &b), &v)| {
            if a == b'G' && b == b'r' {
                vmax = Some(vmax.map_or(v, |m| m.max(v)));
                'y'
            } else {
                a as char
            }
        })
        .collect();
    vmax.map(|v| YellowPhase {
        state,
        duration: v / YELLOW_DECEL + YELLOW_REACTION,
    })
}

/// Phases and transitions of one light.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    pub phases: Vec<GreenPhase>,
    pub yellow: YellowGrid,
}

impl PhaseTable {
    pub fn for_light(net: &RoadNetwork, light: usize) -> Result<Self, SimError> {
        let l = &net.lights[light];
        let mut limits = vec![0.0f64; l.link_count()];
        for c in &net.connections {
            if let Some(s) = c.signal.filter(|s| s.light == light) {
                limits[s.link] = limits[s.link].max(net.lanes[c.from_lane].speed_limit);
            }
        }
        let fallback = limits.iter().copied().fold(0.0, f64::max);
        for v in &mut limits {
            if *v == 0.0 {
                *v = if fallback > 0.0 { fallback } else { 13.89 };
            }
        }
        Ok(PhaseTable {
            phases: l
                .phases
                .iter()
                .map(|s| GreenPhase {
                    state: s.clone(),
                    min_duration: MIN_GREEN,
                })
                .collect(),
            yellow: build_yellow_grid(&l.phases, &limits)?,
        })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Yellow duration for the transition `from -> to` (0 when none).
    pub fn yellow_duration(&self, from: usize, to: usize) -> f64 {
        self.yellow[from][to].as_ref().map_or(0.0, |y| y.duration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn opposite_phases_get_yellow_on_released_signals() {
        let g = build_yellow_grid(&s(&["GGrr", "rrGG"]), &[15.0; 4]).unwrap();
        let y = g[0][1].as_ref().unwrap();
        assert_eq!(y.state, "yyrr");
        assert!((y.duration - 6.0).abs() < 1e-12);
        assert_eq!(g[1][0].as_ref().unwrap().state, "rryy");
        assert!(g[0][0].is_none());
    }

    #[test]
    fn no_green_to_red_means_no_yellow() {
        let g = build_yellow_grid(&s(&["Grrr", "GGrr"]), &[10.0; 4]).unwrap();
        assert!(g[0][1].is_none());
        assert_eq!(g[1][0].as_ref().unwrap().state, "Gyrr");
    }

    #[test]
    fn duration_uses_fastest_yellowed_lane() {
        let g = build_yellow_grid(&s(&["GGr", "rrG"]), &[13.89, 22.22, 30.0]).unwrap();
        let d = g[0][1].as_ref().unwrap().duration;
        assert!((d - (22.22 / 3.0 + 1.0)).abs() < 1e-12);
        assert!((d - 8.4067).abs() < 1e-3);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(build_yellow_grid(&s(&["GG", "rrr"]), &[10.0; 2]).is_err());
        assert!(build_yellow_grid(&s(&["GG", "rr"]), &[10.0; 3]).is_err());
    }
}
