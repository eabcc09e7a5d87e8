//! Placement of upstream planning detectors.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{Detector, DetectorKind, RoadNetwork};

/// Zone length of a physical loop at the stop line.
pub const DEFAULT_LOOP_LENGTH: f64 = 2.0;
/// Planning detectors count passes at a point; this is their nominal zone.
pub const POINT_DETECTOR_LENGTH: f64 = 0.5;

#[derive(PartialEq)]
struct Frontier {
    time: f64,
    lane: usize,
    distance: f64,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, lane)
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.lane.cmp(&self.lane))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Places point detectors on every lane that reaches the stop line of
/// `light` within `horizon` seconds at the speed limit, one every `spacing`
/// seconds of travel. Placement walks upstream across other intersections
/// when an approach is shorter than the horizon; each lane is visited once,
/// at its earliest travel time to the stop line.
pub fn place_planning_detectors(
    net: &RoadNetwork,
    light: usize,
    horizon: f64,
    spacing: f64,
) -> Vec<Detector> {
    assert!(
        horizon > spacing && spacing > 0.0,
        "need horizon > spacing > 0"
    );
    let node = net.lights[light].node;
    let mut heap: BinaryHeap<Frontier> = net
        .light_incoming_lanes(light)
        .into_iter()
        .map(|lane| Frontier {
            time: 0.0,
            lane,
            distance: 0.0,
        })
        .collect();
    let mut visited = HashSet::new();
    let mut out = Vec::new();
    let eps = 1e-9;

    while let Some(Frontier {
        time,
        lane,
        distance,
    }) = heap.pop()
    {
        if !visited.insert(lane) {
            continue;
        }
        let l = &net.lanes[lane];
        let mut k = (time / spacing - eps).ceil().max(0.0) as usize;
        let mut placed = 0;
        loop {
            let t = k as f64 * spacing;
            if t > horizon + eps {
                break;
            }
            let x = (t - time) * l.speed_limit;
            if x + POINT_DETECTOR_LENGTH > l.length + eps {
                break;
            }
            out.push(Detector {
                id: format!("plan:{}:{}:{}", net.lights[light].id, l.id, placed),
                lane,
                position: x,
                zone_length: POINT_DETECTOR_LENGTH,
                kind: DetectorKind::Remote {
                    light,
                    distance: distance + x,
                },
            });
            placed += 1;
            k += 1;
        }
        let upstream_time = time + l.length / l.speed_limit;
        if upstream_time > horizon + eps {
            continue;
        }
        for &c in net.lane_in(lane) {
            let up = net.connections[c].from_lane;
            if visited.contains(&up) || net.edges[net.lanes[up].edge].from == node {
                continue;
            }
            heap.push(Frontier {
                time: upstream_time,
                lane: up,
                distance: distance + l.length,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{NetworkBuilder, SignalLink};

    /// Approach edge(s) of given length/lanes into a lit node, one exit edge.
    fn approach(length: f64, lanes: usize, upstream: Option<f64>) -> RoadNetwork {
        let mut b = NetworkBuilder::new();
        let a = b.add_node("a", -length, 0.0);
        let c = b.add_node("c", 0.0, 0.0);
        let e = b.add_node("e", 100.0, 0.0);
        let (_, first) = b.add_edge("ac", a, c, length, vec![10.0; lanes]);
        let (_, out) = b.add_edge("ce", c, e, 100.0, vec![10.0]);
        let phase = "G".repeat(lanes);
        let light = b.add_light("L", c, vec![phase]);
        for k in 0..lanes {
            b.connect(first + k, out, Some(SignalLink { light, link: k }));
        }
        if let Some(up_len) = upstream {
            let z = b.add_node("z", -length - up_len, 0.0);
            let (_, up) = b.add_edge("za", z, a, up_len, vec![10.0]);
            b.connect(up, first, None);
        }
        b.build().unwrap()
    }

    fn positions(ds: &[Detector], lane: usize) -> Vec<f64> {
        ds.iter()
            .filter(|d| d.lane == lane)
            .map(|d| d.position)
            .collect()
    }

    #[test]
    fn spaced_by_travel_time_on_a_long_lane() {
        let net = approach(400.0, 1, None);
        let ds = place_planning_detectors(&net, 0, 15.0, 3.0);
        assert_eq!(positions(&ds, 0), vec![0.0, 30.0, 60.0, 90.0, 120.0, 150.0]);
        for w in ds.windows(2) {
            assert!(w[1].position > w[0].position);
        }
    }

    #[test]
    fn short_lane_keeps_only_fitting_positions() {
        let net = approach(20.0, 1, None);
        let ds = place_planning_detectors(&net, 0, 15.0, 3.0);
        assert_eq!(positions(&ds, 0), vec![0.0]);
    }

    #[test]
    fn two_lane_approach_is_symmetric() {
        let net = approach(400.0, 2, None);
        let ds = place_planning_detectors(&net, 0, 15.0, 3.0);
        assert_eq!(positions(&ds, 0), positions(&ds, 1));
        assert_eq!(ds.len(), 12);
    }

    #[test]
    fn crosses_to_upstream_lanes() {
        // 100 m approach (10 s) then 200 m upstream: detectors at 12 s and 15 s
        // of travel, i.e. 20 m and 50 m from the upstream lane's end.
        let net = approach(100.0, 1, Some(200.0));
        let ds = place_planning_detectors(&net, 0, 15.0, 3.0);
        let up = net.lane("za_0").unwrap();
        assert_eq!(positions(&ds, 0), vec![0.0, 30.0, 60.0, 90.0]);
        let ups = positions(&ds, up);
        assert_eq!(ups.len(), 2);
        assert!((ups[0] - 20.0).abs() < 1e-9 && (ups[1] - 50.0).abs() < 1e-9);
        match ds.last().unwrap().kind {
            DetectorKind::Remote { distance, .. } => assert!((distance - 150.0).abs() < 1e-9),
            _ => unreachable!(),
        }
    }
}
