//! `.gwnet` / `.gwdem` text formats.
//!
//! One record per line, whitespace-separated fields, `#` starts a comment.
//! Records must be declared before they are referenced. Units are meters,
//! m/s and seconds. Numbers are written with the shortest representation
//! that round-trips, so `save(load(x))` reproduces a canonical file
//! byte-for-byte.
//!
//! Network records:
//!
//! ```text
//! NODE <id> <x> <y>
//! EDGE <id> <from-node> <to-node> <length> <lane-count>
//! LANE <edge> <index> <speed-limit>
//! LIGHT <id> <node> <phase-state>...
//! CONN <from-lane> <to-lane> [<light> <link>]
//! DET <id> <lane> <position> <zone-length> local
//! DET <id> <lane> <position> <zone-length> remote <light> <distance>
//! ```
//!
//! Lane ids are `<edge>_<index>`. Demand records:
//!
//! ```text
//! ROUTE <id> <edge>...
//! CAR <id> <route> <entry-s> <vehicle-type> [<exit-s>]
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{
    Demand, Detector, DetectorKind, NetError, NetworkBuilder, RoadNetwork, Route, SignalLink,
    TravelRecord,
};
use crate::vehicle;

const NETWORK_HEADER: &str = "# greenwave network";
const DEMAND_HEADER: &str = "# greenwave demand";

fn read(path: &Path) -> Result<String, NetError> {
    std::fs::read_to_string(path).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), NetError> {
    std::fs::write(path, text).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })
}

struct Fields<'a> {
    line: usize,
    tag: &'a str,
    items: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn err(&self, msg: impl Into<String>) -> NetError {
        NetError::Parse {
            line: self.line,
            msg: format!("{}: {}", self.tag, msg.into()),
        }
    }

    fn arity(&self, min: usize, max: usize) -> Result<(), NetError> {
        let n = self.items.len();
        if n < min || n > max {
            return Err(self.err(format!("expected {min}..={max} fields, found {n}")));
        }
        Ok(())
    }

    fn num(&self, i: usize, name: &str) -> Result<f64, NetError> {
        let s = self.items[i];
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(format!("field {name}: '{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(format!("field {name}: '{s}' is not finite")));
        }
        Ok(v)
    }

    fn int(&self, i: usize, name: &str) -> Result<usize, NetError> {
        let s = self.items[i];
        s.parse()
            .map_err(|_| self.err(format!("field {name}: '{s}' is not an index")))
    }

    fn lookup(
        &self,
        map: &HashMap<String, usize>,
        i: usize,
        what: &str,
    ) -> Result<usize, NetError> {
        let s = self.items[i];
        map.get(s)
            .copied()
            .ok_or_else(|| self.err(format!("unknown {what} '{s}'")))
    }
}

fn records(text: &str) -> impl Iterator<Item = Fields<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let mut it = body.split_whitespace();
        let tag = it.next()?;
        Some(Fields {
            line: i + 1,
            tag,
            items: it.collect(),
        })
    })
}

pub fn load_network(path: impl AsRef<Path>) -> Result<RoadNetwork, NetError> {
    parse_network(&read(path.as_ref())?)
}

pub fn parse_network(text: &str) -> Result<RoadNetwork, NetError> {
    let mut b = NetworkBuilder::new();
    let mut nodes = HashMap::new();
    let mut edges: HashMap<String, usize> = HashMap::new();
    // edge index -> (first lane index, declared lane count, speeds so far)
    let mut edge_lanes: Vec<(usize, usize, Vec<Option<f64>>)> = Vec::new();
    let mut edge_specs: Vec<(String, usize, usize, f64)> = Vec::new();
    let mut lanes = HashMap::new();
    let mut lights = HashMap::new();
    let mut light_links: Vec<usize> = Vec::new();
    let mut pending_conn = Vec::new();
    let mut pending_det = Vec::new();

    for f in records(text) {
        match f.tag {
            "NODE" => {
                f.arity(3, 3)?;
                let id = f.items[0].to_string();
                if nodes.contains_key(&id) {
                    return Err(f.err(format!("duplicate node '{id}'")));
                }
                let i = b.add_node(id.clone(), f.num(1, "x")?, f.num(2, "y")?);
                nodes.insert(id, i);
            }
            "EDGE" => {
                f.arity(5, 5)?;
                let id = f.items[0].to_string();
                if edges.contains_key(&id) {
                    return Err(f.err(format!("duplicate edge '{id}'")));
                }
                let from = f.lookup(&nodes, 1, "node")?;
                let to = f.lookup(&nodes, 2, "node")?;
                let length = f.num(3, "length")?;
                let count = f.int(4, "lane-count")?;
                if count == 0 {
                    return Err(f.err("lane-count must be >= 1"));
                }
                edges.insert(id.clone(), edge_specs.len());
                let first = edge_lanes.iter().map(|e| e.1).sum();
                edge_lanes.push((first, count, vec![None; count]));
                edge_specs.push((id, from, to, length));
            }
            "LANE" => {
                f.arity(3, 3)?;
                let e = f.lookup(&edges, 0, "edge")?;
                let k = f.int(1, "index")?;
                let v = f.num(2, "speed")?;
                let (first, count, speeds) = &mut edge_lanes[e];
                if k >= *count {
                    return Err(f.err(format!("lane index {k} >= lane-count {count}")));
                }
                if speeds[k].replace(v).is_some() {
                    return Err(f.err(format!("lane {k} declared twice")));
                }
                lanes.insert(format!("{}_{}", f.items[0], k), *first + k);
            }
            "LIGHT" => {
                if f.items.len() < 3 {
                    return Err(f.err("expected id, node and at least one phase"));
                }
                let id = f.items[0].to_string();
                if lights.contains_key(&id) {
                    return Err(f.err(format!("duplicate light '{id}'")));
                }
                let node = f.lookup(&nodes, 1, "node")?;
                let phases: Vec<String> = f.items[2..].iter().map(|s| s.to_string()).collect();
                light_links.push(phases[0].len());
                lights.insert(id.clone(), b.add_light(id, node, phases));
            }
            "CONN" => {
                if f.items.len() != 2 && f.items.len() != 4 {
                    return Err(f.err("expected <from-lane> <to-lane> [<light> <link>]"));
                }
                let from = f.lookup(&lanes, 0, "lane")?;
                let to = f.lookup(&lanes, 1, "lane")?;
                let signal = if f.items.len() == 4 {
                    let light = f.lookup(&lights, 2, "light")?;
                    let link = f.int(3, "link")?;
                    if link >= light_links[light] {
                        return Err(f.err(format!("link {link} out of range")));
                    }
                    Some(SignalLink { light, link })
                } else {
                    None
                };
                pending_conn.push((from, to, signal));
            }
            "DET" => {
                f.arity(5, 7)?;
                let lane = f.lookup(&lanes, 1, "lane")?;
                let kind = match (f.items[4], f.items.len()) {
                    ("local", 5) => DetectorKind::Local,
                    ("remote", 7) => DetectorKind::Remote {
                        light: f.lookup(&lights, 5, "light")?,
                        distance: f.num(6, "distance")?,
                    },
                    (k, _) => return Err(f.err(format!("bad detector kind '{k}'"))),
                };
                pending_det.push(Detector {
                    id: f.items[0].to_string(),
                    lane,
                    position: f.num(2, "position")?,
                    zone_length: f.num(3, "zone-length")?,
                    kind,
                });
            }
            other => {
                return Err(NetError::Parse {
                    line: f.line,
                    msg: format!("unknown record tag '{other}'"),
                })
            }
        }
    }

    for ((id, from, to, length), (_, _, speeds)) in edge_specs.into_iter().zip(edge_lanes) {
        let mut vs = Vec::with_capacity(speeds.len());
        for (k, s) in speeds.into_iter().enumerate() {
            vs.push(s.ok_or_else(|| {
                NetError::Invalid(format!("edge {id} is missing LANE record {k}"))
            })?);
        }
        b.add_edge(id, from, to, length, vs);
    }
    for (from, to, signal) in pending_conn {
        b.connect(from, to, signal);
    }
    for d in pending_det {
        b.add_detector(d);
    }
    b.build()
}

/// Canonical text of a network.
pub fn write_network(net: &RoadNetwork) -> String {
    let mut s = String::new();
    writeln!(s, "{NETWORK_HEADER}").unwrap();
    for n in &net.nodes {
        writeln!(s, "NODE {} {} {}", n.id, n.x, n.y).unwrap();
    }
    for e in &net.edges {
        writeln!(
            s,
            "EDGE {} {} {} {} {}",
            e.id,
            net.nodes[e.from].id,
            net.nodes[e.to].id,
            e.length,
            e.lanes.len()
        )
        .unwrap();
        for &l in &e.lanes {
            let lane = &net.lanes[l];
            writeln!(s, "LANE {} {} {}", e.id, lane.index, lane.speed_limit).unwrap();
        }
    }
    for l in &net.lights {
        writeln!(
            s,
            "LIGHT {} {} {}",
            l.id,
            net.nodes[l.node].id,
            l.phases.join(" ")
        )
        .unwrap();
    }
    for c in &net.connections {
        let (f, t) = (&net.lanes[c.from_lane].id, &net.lanes[c.to_lane].id);
        match c.signal {
            Some(sig) => writeln!(s, "CONN {f} {t} {} {}", net.lights[sig.light].id, sig.link),
            None => writeln!(s, "CONN {f} {t}"),
        }
        .unwrap();
    }
    for d in &net.detectors {
        let lane = &net.lanes[d.lane].id;
        match &d.kind {
            DetectorKind::Local => writeln!(
                s,
                "DET {} {} {} {} local",
                d.id, lane, d.position, d.zone_length
            ),
            DetectorKind::Remote { light, distance } => writeln!(
                s,
                "DET {} {} {} {} remote {} {}",
                d.id, lane, d.position, d.zone_length, net.lights[*light].id, distance
            ),
        }
        .unwrap();
    }
    s
}

pub fn save_network(net: &RoadNetwork, path: impl AsRef<Path>) -> Result<(), NetError> {
    write_file(path.as_ref(), &write_network(net))
}

/// Loads a demand file, validating every route against `net`. Records come
/// back sorted by entry time, ties broken by vehicle id.
pub fn load_demand(path: impl AsRef<Path>, net: &RoadNetwork) -> Result<Demand, NetError> {
    parse_demand(&read(path.as_ref())?, net)
}

pub fn parse_demand(text: &str, net: &RoadNetwork) -> Result<Demand, NetError> {
    let mut demand = Demand::default();
    let mut routes = HashMap::new();
    let mut cars = std::collections::HashSet::new();
    for f in records(text) {
        match f.tag {
            "ROUTE" => {
                if f.items.len() < 2 {
                    return Err(f.err("expected id and at least one edge"));
                }
                let id = f.items[0].to_string();
                if routes.contains_key(&id) {
                    return Err(f.err(format!("duplicate route '{id}'")));
                }
                let mut edges = Vec::with_capacity(f.items.len() - 1);
                for e in &f.items[1..] {
                    edges.push(
                        net.edge(e)
                            .ok_or_else(|| f.err(format!("unknown edge '{e}'")))?,
                    );
                }
                net.check_route(&edges).map_err(|msg| NetError::Route {
                    route: id.clone(),
                    msg,
                })?;
                routes.insert(id.clone(), demand.routes.len());
                demand.routes.push(Route { id, edges });
            }
            "CAR" => {
                f.arity(4, 5)?;
                let id = f.items[0].to_string();
                if !cars.insert(id.clone()) {
                    return Err(f.err(format!("duplicate car '{id}'")));
                }
                let route = f.lookup(&routes, 1, "route")?;
                let entry = f.num(2, "entry")?;
                let vtype = vehicle::by_name(f.items[3])
                    .ok_or_else(|| f.err(format!("unknown vehicle type '{}'", f.items[3])))?;
                let observed_exit = if f.items.len() == 5 {
                    let x = f.num(4, "exit")?;
                    if x < entry {
                        return Err(f.err("exit time precedes entry time"));
                    }
                    Some(x)
                } else {
                    None
                };
                demand.records.push(TravelRecord {
                    vehicle_id: id,
                    route,
                    entry,
                    vtype,
                    observed_exit,
                });
            }
            other => {
                return Err(NetError::Parse {
                    line: f.line,
                    msg: format!("unknown record tag '{other}'"),
                })
            }
        }
    }
    demand.sort();
    Ok(demand)
}

/// Canonical text of a demand set.
pub fn write_demand(demand: &Demand, net: &RoadNetwork) -> String {
    let mut s = String::new();
    writeln!(s, "{DEMAND_HEADER}").unwrap();
    for r in &demand.routes {
        let edges: Vec<&str> = r.edges.iter().map(|&e| net.edges[e].id.as_str()).collect();
        writeln!(s, "ROUTE {} {}", r.id, edges.join(" ")).unwrap();
    }
    for c in &demand.records {
        write!(
            s,
            "CAR {} {} {} {}",
            c.vehicle_id,
            demand.routes[c.route].id,
            c.entry,
            vehicle::catalog()[c.vtype].name
        )
        .unwrap();
        if let Some(x) = c.observed_exit {
            write!(s, " {x}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn save_demand(
    demand: &Demand,
    net: &RoadNetwork,
    path: impl AsRef<Path>,
) -> Result<(), NetError> {
    write_file(path.as_ref(), &write_demand(demand, net))
}
