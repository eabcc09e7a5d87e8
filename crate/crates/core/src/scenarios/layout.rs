//! Turning plain road layouts into signalized networks.

use crate::netmodel::{Detector, DetectorKind, NetError, NetworkBuilder, RoadNetwork, SignalLink};

/// Length of the queue zone watched by each local detector, m.
pub const QUEUE_ZONE: f64 = 40.0;

#[derive(Debug, Clone)]
pub(crate) struct LayoutNode {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub lit: bool,
}

/// A two-way road between two nodes.
#[derive(Debug, Clone)]
pub(crate) struct LayoutRoad {
    pub a: usize,
    pub b: usize,
    pub lanes_ab: usize,
    pub lanes_ba: usize,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Turn {
    Right,
    Straight,
    Left,
}

fn turn(inx: f64, iny: f64, outx: f64, outy: f64) -> Option<Turn> {
    let cross = inx * outy - iny * outx;
    let dot = inx * outx + iny * outy;
    let norm = (inx.hypot(iny)) * (outx.hypot(outy));
    if cross.abs() < 1e-6 * norm {
        return (dot > 0.0).then_some(Turn::Straight);
    }
    Some(if cross > 0.0 { Turn::Left } else { Turn::Right })
}

/// Builds the network: one edge per road direction, right turns from the
/// rightmost lane, left turns from the leftmost, through traffic from every
/// lane, no U-turns. Lit nodes get a two-phase light (north-south, then
/// east-west) and a queue-zone detector on every incoming lane.
pub(crate) fn build_layout(
    nodes: &[LayoutNode],
    roads: &[LayoutRoad],
) -> Result<RoadNetwork, NetError> {
    let mut b = NetworkBuilder::new();
    for n in nodes {
        b.add_node(n.id.clone(), n.x, n.y);
    }
    // (edge, first lane, lanes, from, to)
    let mut edges: Vec<(usize, usize, usize, usize, usize)> = Vec::new();
    let mut lane_lengths = Vec::new();
    let mut lane_ids = Vec::new();
    for r in roads {
        for (from, to, lanes) in [(r.a, r.b, r.lanes_ab), (r.b, r.a, r.lanes_ba)] {
            let (na, nb) = (&nodes[from], &nodes[to]);
            let length = (nb.x - na.x).hypot(nb.y - na.y);
            let id = format!("{}-{}", na.id, nb.id);
            lane_ids.extend((0..lanes).map(|k| format!("{id}_{k}")));
            let (e, first) = b.add_edge(id, from, to, length, vec![r.speed; lanes]);
            edges.push((e, first, lanes, from, to));
            lane_lengths.extend(std::iter::repeat(length).take(lanes));
        }
    }
    for (node_idx, node) in nodes.iter().enumerate() {
        let incoming: Vec<_> = edges.iter().filter(|e| e.4 == node_idx).copied().collect();
        let outgoing: Vec<_> = edges.iter().filter(|e| e.3 == node_idx).copied().collect();
        let mut links: Vec<(usize, usize, bool)> = Vec::new();
        for &(_, ifirst, ilanes, ifrom, _) in &incoming {
            let (dx, dy) = (node.x - nodes[ifrom].x, node.y - nodes[ifrom].y);
            let vertical = dy.abs() > dx.abs();
            for &(_, ofirst, olanes, _, oto) in &outgoing {
                let (ex, ey) = (nodes[oto].x - node.x, nodes[oto].y - node.y);
                let Some(t) = turn(dx, dy, ex, ey) else {
                    continue;
                };
                let from_lanes: Vec<usize> = match t {
                    Turn::Right => vec![0],
                    Turn::Left => vec![ilanes - 1],
                    Turn::Straight => (0..ilanes).collect(),
                };
                for fl in from_lanes {
                    for k in 0..olanes {
                        links.push((ifirst + fl, ofirst + k, vertical));
                    }
                }
            }
        }
        if node.lit && !links.is_empty() {
            let ns: String = links.iter().map(|l| if l.2 { 'G' } else { 'r' }).collect();
            let ew: String = links.iter().map(|l| if l.2 { 'r' } else { 'G' }).collect();
            let mut phases = vec![ns, ew];
            phases.retain(|p| p.contains('G'));
            let light = b.add_light(format!("L{}", node.id), node_idx, phases);
            for (k, &(from, to, _)) in links.iter().enumerate() {
                b.connect(from, to, Some(SignalLink { light, link: k }));
            }
            let mut watched: Vec<usize> = links.iter().map(|l| l.0).collect();
            watched.sort_unstable();
            watched.dedup();
            for lane in watched {
                b.add_detector(Detector {
                    id: format!("q:{}", lane_ids[lane]),
                    lane,
                    position: 0.0,
                    zone_length: QUEUE_ZONE.min(lane_lengths[lane]),
                    kind: DetectorKind::Local,
                });
            }
        } else {
            for &(from, to, _) in &links {
                b.connect(from, to, None);
            }
        }
    }
    b.build()
}
