//! Road network, route, demand and detector model.
//!
//! A [`RoadNetwork`] is an immutable, validated directed graph of edges,
//! each carrying one or more lanes. Lane-to-lane [`Connection`]s describe the
//! legal movements through intersections; connections through a signalized
//! node carry a link index into the light's signal-state strings.

mod detectors;
mod format;

pub use detectors::{place_planning_detectors, DEFAULT_LOOP_LENGTH, POINT_DETECTOR_LENGTH};
pub use format::{
    load_demand, load_network, parse_demand, parse_network, save_demand, save_network,
    write_demand, write_network,
};

use std::collections::{HashMap, HashSet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("route {route}: {msg}")]
    Route { route: String, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// Length in meters; shared by all lanes of the edge.
    pub length: f64,
    /// Lane indices, rightmost first.
    pub lanes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: String,
    pub edge: usize,
    pub index: usize,
    /// Speed limit in m/s.
    pub speed_limit: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignalLink {
    pub light: usize,
    /// Position in the light's signal-state strings.
    pub link: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub from_lane: usize,
    pub to_lane: usize,
    pub signal: Option<SignalLink>,
}

/// A traffic light and its green phases (one signal character per link).
#[derive(Debug, Clone, PartialEq)]
pub struct Light {
    pub id: String,
    pub node: usize,
    pub phases: Vec<String>,
}

impl Light {
    pub fn link_count(&self) -> usize {
        self.phases.first().map_or(0, |p| p.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorKind {
    /// Loop at the controlled intersection.
    Local,
    /// Upstream planning sensor feeding `light`, `distance` meters of road
    /// away from its stop line.
    Remote { light: usize, distance: f64 },
}

/// An induction loop. `position` is measured from the lane end (stop line)
/// to the downstream boundary of the zone; the zone extends `zone_length`
/// meters upstream from there.
#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub id: String,
    pub lane: usize,
    pub position: f64,
    pub zone_length: f64,
    pub kind: DetectorKind,
}

impl Detector {
    /// Zone bounds in lane coordinates (distance from lane start).
    pub fn zone(&self, lane_length: f64) -> (f64, f64) {
        let hi = lane_length - self.position;
        (hi - self.zone_length, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub node: usize,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
    pub light: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RoadNetwork {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub lanes: Vec<Lane>,
    pub connections: Vec<Connection>,
    pub lights: Vec<Light>,
    pub detectors: Vec<Detector>,
    pub intersections: Vec<Intersection>,
    lane_out: Vec<Vec<usize>>,
    lane_in: Vec<Vec<usize>>,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    lane_index: HashMap<String, usize>,
    light_index: HashMap<String, usize>,
    detector_index: HashMap<String, usize>,
}

impl RoadNetwork {
    pub fn node(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn edge(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub fn lane(&self, id: &str) -> Option<usize> {
        self.lane_index.get(id).copied()
    }

    pub fn light(&self, id: &str) -> Option<usize> {
        self.light_index.get(id).copied()
    }

    pub fn detector(&self, id: &str) -> Option<usize> {
        self.detector_index.get(id).copied()
    }

    /// Connection indices leaving `lane`.
    pub fn lane_out(&self, lane: usize) -> &[usize] {
        &self.lane_out[lane]
    }

    /// Connection indices entering `lane`.
    pub fn lane_in(&self, lane: usize) -> &[usize] {
        &self.lane_in[lane]
    }

    /// Edges no connection leads into: where traffic is introduced.
    pub fn entry_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| {
                self.edges[e]
                    .lanes
                    .iter()
                    .all(|&l| self.lane_in[l].is_empty())
            })
            .collect()
    }

    /// Edges with no outgoing connection: where traffic leaves.
    pub fn exit_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| {
                self.edges[e]
                    .lanes
                    .iter()
                    .all(|&l| self.lane_out[l].is_empty())
            })
            .collect()
    }

    /// Lanes entering the node of `light` that have a signalized movement.
    pub fn light_incoming_lanes(&self, light: usize) -> Vec<usize> {
        let mut lanes: Vec<usize> = self
            .connections
            .iter()
            .filter(|c| c.signal.map(|s| s.light) == Some(light))
            .map(|c| c.from_lane)
            .collect();
        lanes.sort_unstable();
        lanes.dedup();
        lanes
    }

    /// Local detectors on the approaches of `light`, in network order.
    pub fn local_detectors(&self, light: usize) -> Vec<usize> {
        let incoming: HashSet<usize> = self.light_incoming_lanes(light).into_iter().collect();
        self.detectors
            .iter()
            .enumerate()
            .filter(|(_, d)| d.kind == DetectorKind::Local && incoming.contains(&d.lane))
            .map(|(i, _)| i)
            .collect()
    }

    /// Does any lane of `from` connect to any lane of `to`?
    pub fn edges_connected(&self, from: usize, to: usize) -> bool {
        self.edges[from].lanes.iter().any(|&l| {
            self.lane_out[l]
                .iter()
                .any(|&c| self.lanes[self.connections[c].to_lane].edge == to)
        })
    }

    /// For each edge of `route`, the lanes from which the remainder of the
    /// route can still be driven. Empty sets mean the route is undrivable.
    pub fn feasible_lanes(&self, route: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); route.len()];
        if let Some(&last) = route.last() {
            out[route.len() - 1] = self.edges[last].lanes.clone();
        }
        for i in (0..route.len().saturating_sub(1)).rev() {
            let next: HashSet<usize> = out[i + 1].iter().copied().collect();
            out[i] = self.edges[route[i]]
                .lanes
                .iter()
                .copied()
                .filter(|&l| {
                    self.lane_out[l]
                        .iter()
                        .any(|&c| next.contains(&self.connections[c].to_lane))
                })
                .collect();
        }
        out
    }

    /// Checks that a route is continuous, drivable at lane level and never
    /// visits a node twice.
    pub fn check_route(&self, edges: &[usize]) -> Result<(), String> {
        let Some(&first) = edges.first() else {
            return Err("route is empty".into());
        };
        let mut seen = HashSet::new();
        seen.insert(self.edges[first].from);
        for (i, &e) in edges.iter().enumerate() {
            if i > 0 {
                let prev = edges[i - 1];
                if self.edges[prev].to != self.edges[e].from {
                    return Err(format!(
                        "edges {} and {} are not consecutive",
                        self.edges[prev].id, self.edges[e].id
                    ));
                }
                if !self.edges_connected(prev, e) {
                    return Err(format!(
                        "no lane connection from {} to {}",
                        self.edges[prev].id, self.edges[e].id
                    ));
                }
            }
            if !seen.insert(self.edges[e].to) {
                return Err(format!(
                    "node {} visited twice",
                    self.nodes[self.edges[e].to].id
                ));
            }
        }
        if self.feasible_lanes(edges).iter().any(Vec::is_empty) {
            return Err("no lane sequence drives the route".into());
        }
        Ok(())
    }

    /// Free-flow travel time over a whole route at lane speed limits.
    pub fn free_flow_time(&self, route: &[usize]) -> f64 {
        route.iter().map(|&e| self.edge_free_flow_time(e)).sum()
    }

    pub fn edge_free_flow_time(&self, edge: usize) -> f64 {
        let e = &self.edges[edge];
        let vmax = e
            .lanes
            .iter()
            .map(|&l| self.lanes[l].speed_limit)
            .fold(0.0, f64::max);
        e.length / vmax
    }

    /// Starts a builder pre-populated with this network's content.
    pub fn to_builder(&self) -> NetworkBuilder {
        NetworkBuilder {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    from: e.from,
                    to: e.to,
                    length: e.length,
                    speeds: e.lanes.iter().map(|&l| self.lanes[l].speed_limit).collect(),
                })
                .collect(),
            connections: self.connections.clone(),
            lights: self.lights.clone(),
            detectors: self.detectors.clone(),
        }
    }
}

#[derive(Debug, Clone)]
struct EdgeSpec {
    id: String,
    from: usize,
    to: usize,
    length: f64,
    speeds: Vec<f64>,
}

/// Incremental construction of a [`RoadNetwork`]. Lane indices are assigned
/// in edge order, so the lane index of `(edge, k)` is known as soon as the
/// edge is added.
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    nodes: Vec<Node>,
    edges: Vec<EdgeSpec>,
    connections: Vec<Connection>,
    lights: Vec<Light>,
    detectors: Vec<Detector>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<String>, x: f64, y: f64) -> usize {
        self.nodes.push(Node {
            id: id.into(),
            x,
            y,
        });
        self.nodes.len() - 1
    }

    /// Adds an edge with one lane per entry of `speeds`; returns the edge
    /// index and the index of its first lane.
    pub fn add_edge(
        &mut self,
        id: impl Into<String>,
        from: usize,
        to: usize,
        length: f64,
        speeds: Vec<f64>,
    ) -> (usize, usize) {
        let first_lane = self.edges.iter().map(|e| e.speeds.len()).sum();
        self.edges.push(EdgeSpec {
            id: id.into(),
            from,
            to,
            length,
            speeds,
        });
        (self.edges.len() - 1, first_lane)
    }

    pub fn add_light(&mut self, id: impl Into<String>, node: usize, phases: Vec<String>) -> usize {
        self.lights.push(Light {
            id: id.into(),
            node,
            phases,
        });
        self.lights.len() - 1
    }

    pub fn connect(&mut self, from_lane: usize, to_lane: usize, signal: Option<SignalLink>) {
        self.connections.push(Connection {
            from_lane,
            to_lane,
            signal,
        });
    }

    pub fn add_detector(&mut self, detector: Detector) {
        self.detectors.push(detector);
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn lane_count(&self) -> usize {
        self.edges.iter().map(|e| e.speeds.len()).sum()
    }

    pub fn lights_mut(&mut self) -> &mut Vec<Light> {
        &mut self.lights
    }

    pub fn build(self) -> Result<RoadNetwork, NetError> {
        let invalid = |m: String| Err(NetError::Invalid(m));
        let NetworkBuilder {
            nodes,
            edges: edge_specs,
            connections,
            lights,
            detectors,
        } = self;

        if nodes.is_empty() {
            return invalid("network has no nodes".into());
        }
        let mut node_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return invalid(format!("node {} has non-finite coordinates", n.id));
            }
            if node_index.insert(n.id.clone(), i).is_some() {
                return invalid(format!("duplicate node id {}", n.id));
            }
        }

        let mut edges = Vec::with_capacity(edge_specs.len());
        let mut lanes = Vec::new();
        let mut edge_index = HashMap::new();
        let mut lane_index = HashMap::new();
        for (ei, spec) in edge_specs.into_iter().enumerate() {
            if spec.from >= nodes.len() || spec.to >= nodes.len() {
                return invalid(format!("edge {} references a missing node", spec.id));
            }
            if spec.from == spec.to {
                return invalid(format!("edge {} is a self-loop", spec.id));
            }
            if !(spec.length > 0.0 && spec.length.is_finite()) {
                return invalid(format!("edge {} length must be > 0", spec.id));
            }
            if spec.speeds.is_empty() {
                return invalid(format!("edge {} has no lanes", spec.id));
            }
            if edge_index.insert(spec.id.clone(), ei).is_some() {
                return invalid(format!("duplicate edge id {}", spec.id));
            }
            let mut lane_ids = Vec::with_capacity(spec.speeds.len());
            for (k, &v) in spec.speeds.iter().enumerate() {
                if !(v > 0.0 && v.is_finite()) {
                    return invalid(format!(
                        "lane {} of edge {} has speed limit <= 0",
                        k, spec.id
                    ));
                }
                let id = format!("{}_{}", spec.id, k);
                lane_index.insert(id.clone(), lanes.len());
                lane_ids.push(lanes.len());
                lanes.push(Lane {
                    id,
                    edge: ei,
                    index: k,
                    speed_limit: v,
                    length: spec.length,
                });
            }
            edges.push(Edge {
                id: spec.id,
                from: spec.from,
                to: spec.to,
                length: spec.length,
                lanes: lane_ids,
            });
        }

        let mut light_index = HashMap::new();
        let mut lit_nodes = HashMap::new();
        for (i, l) in lights.iter().enumerate() {
            if l.node >= nodes.len() {
                return invalid(format!("light {} references a missing node", l.id));
            }
            if light_index.insert(l.id.clone(), i).is_some() {
                return invalid(format!("duplicate light id {}", l.id));
            }
            if lit_nodes.insert(l.node, i).is_some() {
                return invalid(format!(
                    "node {} is controlled by more than one light",
                    nodes[l.node].id
                ));
            }
            if l.phases.is_empty() {
                return invalid(format!("light {} has no phases", l.id));
            }
            let n = l.phases[0].len();
            if n == 0 || l.phases.iter().any(|p| p.len() != n) {
                return invalid(format!("light {} phase strings differ in length", l.id));
            }
            if l.phases
                .iter()
                .any(|p| p.chars().any(|c| !matches!(c, 'G' | 'r')))
            {
                return invalid(format!("light {} green phases may only use G and r", l.id));
            }
        }

        let mut lane_out = vec![Vec::new(); lanes.len()];
        let mut lane_in = vec![Vec::new(); lanes.len()];
        let mut seen_conn = HashSet::new();
        for (ci, c) in connections.iter().enumerate() {
            if c.from_lane >= lanes.len() || c.to_lane >= lanes.len() {
                return invalid(format!("connection {ci} references a missing lane"));
            }
            let (fa, ta) = (&lanes[c.from_lane], &lanes[c.to_lane]);
            let via = edges[fa.edge].to;
            if via != edges[ta.edge].from {
                return invalid(format!(
                    "connection {} -> {} does not pass through a common node",
                    fa.id, ta.id
                ));
            }
            if !seen_conn.insert((c.from_lane, c.to_lane)) {
                return invalid(format!("duplicate connection {} -> {}", fa.id, ta.id));
            }
            match (c.signal, lit_nodes.get(&via)) {
                (Some(s), Some(&light)) => {
                    if s.light != light {
                        return invalid(format!(
                            "connection {} -> {} references light {} not at its node",
                            fa.id, ta.id, s.light
                        ));
                    }
                    if s.link >= lights[light].link_count() {
                        return invalid(format!(
                            "connection {} -> {} link {} out of range",
                            fa.id, ta.id, s.link
                        ));
                    }
                }
                (Some(_), None) => {
                    return invalid(format!(
                        "connection {} -> {} is signalized at an unlit node",
                        fa.id, ta.id
                    ))
                }
                (None, Some(_)) => {
                    return invalid(format!(
                        "connection {} -> {} crosses a lit node without a signal link",
                        fa.id, ta.id
                    ))
                }
                (None, None) => {}
            }
            lane_out[c.from_lane].push(ci);
            lane_in[c.to_lane].push(ci);
        }

        let mut detector_index = HashMap::new();
        for (i, d) in detectors.iter().enumerate() {
            if d.lane >= lanes.len() {
                return invalid(format!("detector {} references a missing lane", d.id));
            }
            if detector_index.insert(d.id.clone(), i).is_some() {
                return invalid(format!("duplicate detector id {}", d.id));
            }
            let len = lanes[d.lane].length;
            if !(d.position >= 0.0 && d.zone_length > 0.0)
                || d.position + d.zone_length > len + 1e-9
            {
                return invalid(format!("detector {} zone lies outside its lane", d.id));
            }
            if let DetectorKind::Remote { light, distance } = d.kind {
                if light >= lights.len() || !(distance >= 0.0) {
                    return invalid(format!("detector {} has a bad remote target", d.id));
                }
            }
        }

        // weak connectivity over all nodes
        let mut adj = vec![Vec::new(); nodes.len()];
        for e in &edges {
            adj[e.from].push(e.to);
            adj[e.to].push(e.from);
        }
        let mut reached = vec![false; nodes.len()];
        let mut stack = vec![0];
        reached[0] = true;
        while let Some(n) = stack.pop() {
            for &m in &adj[n] {
                if !reached[m] {
                    reached[m] = true;
                    stack.push(m);
                }
            }
        }
        if let Some(i) = reached.iter().position(|r| !r) {
            return invalid(format!("node {} is disconnected", nodes[i].id));
        }

        let mut intersections = Vec::new();
        for node in 0..nodes.len() {
            let mut incoming = Vec::new();
            let mut outgoing = Vec::new();
            for c in &connections {
                if edges[lanes[c.from_lane].edge].to == node {
                    incoming.push(c.from_lane);
                    outgoing.push(c.to_lane);
                }
            }
            let light = lit_nodes.get(&node).copied();
            if incoming.is_empty() && light.is_none() {
                continue;
            }
            incoming.sort_unstable();
            incoming.dedup();
            outgoing.sort_unstable();
            outgoing.dedup();
            intersections.push(Intersection {
                node,
                incoming,
                outgoing,
                light,
            });
        }

        Ok(RoadNetwork {
            nodes,
            edges,
            lanes,
            connections,
            lights,
            detectors,
            intersections,
            lane_out,
            lane_in,
            node_index,
            edge_index,
            lane_index,
            light_index,
            detector_index,
        })
    }
}

/// One vehicle's planned route.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub id: String,
    pub edges: Vec<usize>,
}

/// One vehicle's trip: route, entry time and (when observed) exit time.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelRecord {
    pub vehicle_id: String,
    pub route: usize,
    /// Scheduled entry time c_entry, s.
    pub entry: f64,
    /// Index into [`crate::vehicle::catalog`].
    pub vtype: usize,
    /// Exit time observed in external data, when known.
    pub observed_exit: Option<f64>,
}

impl TravelRecord {
    pub fn observed_journey(&self) -> Option<f64> {
        self.observed_exit.map(|x| x - self.entry)
    }
}

/// A demand profile: shared routes plus the trips using them, sorted by
/// entry time (ties by vehicle id).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Demand {
    pub routes: Vec<Route>,
    pub records: Vec<TravelRecord>,
}

impl Demand {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            a.entry
                .total_cmp(&b.entry)
                .then_with(|| a.vehicle_id.cmp(&b.vehicle_id))
        });
    }

    /// Checks every route against `net`.
    pub fn validate(&self, net: &RoadNetwork) -> Result<(), NetError> {
        for r in &self.routes {
            if r.edges.iter().any(|&e| e >= net.edges.len()) {
                return Err(NetError::Route {
                    route: r.id.clone(),
                    msg: "references a missing edge".into(),
                });
            }
            net.check_route(&r.edges).map_err(|msg| NetError::Route {
                route: r.id.clone(),
                msg,
            })?;
        }
        for rec in &self.records {
            if rec.route >= self.routes.len() {
                return Err(NetError::Route {
                    route: rec.vehicle_id.clone(),
                    msg: "car references a missing route".into(),
                });
            }
            if let Some(x) = rec.observed_exit {
                if x < rec.entry {
                    return Err(NetError::Route {
                        route: self.routes[rec.route].id.clone(),
                        msg: format!("car {} exits before it enters", rec.vehicle_id),
                    });
                }
            }
        }
        Ok(())
    }

    /// Route index for an edge sequence, adding the route when new.
    pub fn intern_route(&mut self, edges: Vec<usize>) -> usize {
        if let Some(i) = self.routes.iter().position(|r| r.edges == edges) {
            return i;
        }
        let id = format!("r{}", self.routes.len());
        self.routes.push(Route { id, edges });
        self.routes.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_node() -> RoadNetwork {
        let mut b = NetworkBuilder::new();
        let a = b.add_node("a", 0.0, 0.0);
        let c = b.add_node("b", 100.0, 0.0);
        b.add_edge("ab", a, c, 100.0, vec![10.0]);
        b.build().unwrap()
    }

    #[test]
    fn minimal_network_has_one_edge_no_lights() {
        let net = two_node();
        assert_eq!(net.edges.len(), 1);
        assert_eq!(net.lanes.len(), 1);
        assert!(net.lights.is_empty());
        assert!(net.intersections.is_empty());
        assert_eq!(net.entry_edges(), vec![0]);
        assert_eq!(net.exit_edges(), vec![0]);
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut b = NetworkBuilder::new();
        let a = b.add_node("a", 0.0, 0.0);
        let c = b.add_node("b", 1.0, 0.0);
        b.add_edge("ab", a, c, 0.0, vec![10.0]);
        assert!(matches!(b.build(), Err(NetError::Invalid(_))));

        let mut b = NetworkBuilder::new();
        let a = b.add_node("a", 0.0, 0.0);
        let c = b.add_node("b", 1.0, 0.0);
        b.add_edge("ab", a, c, 5.0, vec![0.0]);
        assert!(matches!(b.build(), Err(NetError::Invalid(_))));

        let mut b = NetworkBuilder::new();
        b.add_node("a", 0.0, 0.0);
        b.add_node("b", 1.0, 0.0);
        let err = b.build().unwrap_err().to_string();
        assert!(err.contains("disconnected"), "{err}");
    }

    #[test]
    fn detector_must_fit_its_lane() {
        let mut b = two_node().to_builder();
        b.add_detector(Detector {
            id: "d".into(),
            lane: 0,
            position: 99.0,
            zone_length: 2.0,
            kind: DetectorKind::Local,
        });
        assert!(b.build().is_err());
    }

    #[test]
    fn route_checks() {
        // a -> b -> c chain with a spur b -> d that has no connection
        let mut b = NetworkBuilder::new();
        let na = b.add_node("a", 0.0, 0.0);
        let nb = b.add_node("b", 100.0, 0.0);
        let nc = b.add_node("c", 200.0, 0.0);
        let nd = b.add_node("d", 100.0, 100.0);
        let (_, l0) = b.add_edge("ab", na, nb, 100.0, vec![10.0]);
        let (_, l1) = b.add_edge("bc", nb, nc, 100.0, vec![10.0]);
        b.add_edge("bd", nb, nd, 100.0, vec![10.0]);
        b.connect(l0, l1, None);
        let net = b.build().unwrap();
        assert!(net.check_route(&[0, 1]).is_ok());
        assert!(net
            .check_route(&[0, 2])
            .unwrap_err()
            .contains("no lane connection"));
        assert!(net
            .check_route(&[1, 0])
            .unwrap_err()
            .contains("consecutive"));
        assert!(net.check_route(&[]).is_err());
        assert_eq!(net.intersections.len(), 1);
    }
}
