//! Synthetic networks and demand, dataset perturbation and the
//! capacity-under-matched-travel-time search.

mod capacity;
mod layout;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::netmodel::{Demand, NetError, RoadNetwork, TravelRecord};
use crate::vehicle;

pub use capacity::{capacity_search, resample_demand, CapacityReport, CapacitySpec};
pub use layout::QUEUE_ZONE;
use layout::{build_layout, LayoutNode, LayoutRoad};

/// Speed limits drawn for synthetic roads, m/s (30 to 70 km/h).
pub const SPEED_CHOICES: [f64; 5] = [8.33, 11.11, 13.89, 16.67, 19.44];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("no route from {from} to {to} after {tries} tries")]
    NoRoute {
        from: String,
        to: String,
        tries: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Inclusive lane-count range per road direction.
    pub lanes: (usize, usize),
    /// One is drawn per two-way road.
    pub speeds: Vec<f64>,
    /// Block length range, m.
    pub block: (f64, f64),
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            lanes: (1, 3),
            speeds: SPEED_CHOICES.to_vec(),
            block: (120.0, 180.0),
        }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ScenarioError::Spec(
                "rows and cols must be at least 1".into(),
            ));
        }
        if self.lanes.0 == 0 || self.lanes.0 > self.lanes.1 {
            return Err(ScenarioError::Spec("bad lane range".into()));
        }
        if self.speeds.is_empty() || self.speeds.iter().any(|v| !(*v > 0.0)) {
            return Err(ScenarioError::Spec("speed limits must be positive".into()));
        }
        if !(self.block.0 > QUEUE_ZONE && self.block.0 <= self.block.1) {
            return Err(ScenarioError::Spec(format!(
                "block range must start above {QUEUE_ZONE} m"
            )));
        }
        Ok(())
    }
}

/// A rows x cols grid of lit intersections. Every boundary intersection
/// has an unlit fringe node beyond it, so a 3 x 3 grid has 12 entry and
/// 12 exit edges.
pub fn gen_grid(spec: &GridSpec, seed: u64) -> Result<RoadNetwork, ScenarioError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = |rng: &mut ChaCha8Rng| {
        if spec.block.1 > spec.block.0 {
            rng.gen_range(spec.block.0..spec.block.1)
        } else {
            spec.block.0
        }
    };
    // x of each column (plus fringes), y of each row (row 0 on top)
    let mut xs = vec![0.0];
    for _ in 0..spec.cols + 1 {
        let g = gap(&mut rng);
        xs.push(xs.last().unwrap() + g);
    }
    let mut ys = vec![0.0];
    for _ in 0..spec.rows + 1 {
        let g = gap(&mut rng);
        ys.push(ys.last().unwrap() - g);
    }
    let mut nodes = Vec::new();
    let mut grid = vec![vec![0; spec.cols]; spec.rows];
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            grid[r][c] = nodes.len();
            nodes.push(LayoutNode {
                id: format!("n{r}_{c}"),
                x: xs[c + 1],
                y: ys[r + 1],
                lit: true,
            });
        }
    }
    let mut fringe = |id: String, x: f64, y: f64| {
        nodes.push(LayoutNode {
            id,
            x,
            y,
            lit: false,
        });
        nodes.len() - 1
    };
    let mut pairs = Vec::new();
    for c in 0..spec.cols {
        let n = fringe(format!("N{c}"), xs[c + 1], ys[0]);
        pairs.push((n, grid[0][c]));
        let s = fringe(format!("S{c}"), xs[c + 1], ys[spec.rows + 1]);
        pairs.push((grid[spec.rows - 1][c], s));
    }
    for r in 0..spec.rows {
        let w = fringe(format!("W{r}"), xs[0], ys[r + 1]);
        pairs.push((w, grid[r][0]));
        let e = fringe(format!("E{r}"), xs[spec.cols + 1], ys[r + 1]);
        pairs.push((grid[r][spec.cols - 1], e));
    }
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            if c + 1 < spec.cols {
                pairs.push((grid[r][c], grid[r][c + 1]));
            }
            if r + 1 < spec.rows {
                pairs.push((grid[r][c], grid[r + 1][c]));
            }
        }
    }
    let roads: Vec<LayoutRoad> = pairs
        .into_iter()
        .map(|(a, b)| LayoutRoad {
            a,
            b,
            lanes_ab: rng.gen_range(spec.lanes.0..=spec.lanes.1),
            lanes_ba: rng.gen_range(spec.lanes.0..=spec.lanes.1),
            speed: *spec.speeds.choose(&mut rng).expect("checked non-empty"),
        })
        .collect();
    Ok(build_layout(&nodes, &roads)?)
}

/// One dominant road through `lights` intersections with short one-lane
/// cross streets.
#[derive(Debug, Clone, PartialEq)]
pub struct ArterialSpec {
    pub lights: usize,
    /// Distance between intersections on the main road, m.
    pub spacing: f64,
    pub main_lanes: usize,
    pub main_speed: f64,
    pub cross_lanes: usize,
    pub cross_speed: f64,
    /// Length of each cross-street arm, m.
    pub cross_length: f64,
}

impl Default for ArterialSpec {
    fn default() -> Self {
        Self {
            lights: 4,
            spacing: 200.0,
            main_lanes: 2,
            main_speed: 13.89,
            cross_lanes: 1,
            cross_speed: 11.11,
            cross_length: 150.0,
        }
    }
}

pub fn gen_arterial(spec: &ArterialSpec) -> Result<RoadNetwork, ScenarioError> {
    if spec.lights == 0 || spec.main_lanes == 0 || spec.cross_lanes == 0 {
        return Err(ScenarioError::Spec(
            "need at least one light and lane".into(),
        ));
    }
    if !(spec.spacing > QUEUE_ZONE && spec.cross_length > QUEUE_ZONE) {
        return Err(ScenarioError::Spec(format!(
            "road lengths must exceed {QUEUE_ZONE} m"
        )));
    }
    let mut nodes = vec![LayoutNode {
        id: "W".into(),
        x: 0.0,
        y: 0.0,
        lit: false,
    }];
    for k in 0..spec.lights {
        nodes.push(LayoutNode {
            id: format!("a{k}"),
            x: spec.spacing * (k + 1) as f64,
            y: 0.0,
            lit: true,
        });
    }
    nodes.push(LayoutNode {
        id: "E".into(),
        x: spec.spacing * (spec.lights + 1) as f64,
        y: 0.0,
        lit: false,
    });
    let main = |a, b| LayoutRoad {
        a,
        b,
        lanes_ab: spec.main_lanes,
        lanes_ba: spec.main_lanes,
        speed: spec.main_speed,
    };
    let mut roads: Vec<LayoutRoad> = (0..=spec.lights).map(|k| main(k, k + 1)).collect();
    for k in 0..spec.lights {
        let x = spec.spacing * (k + 1) as f64;
        for (name, y) in [("N", spec.cross_length), ("S", -spec.cross_length)] {
            nodes.push(LayoutNode {
                id: format!("{name}{k}"),
                x,
                y,
                lit: false,
            });
            roads.push(LayoutRoad {
                a: nodes.len() - 1,
                b: k + 1,
                lanes_ab: spec.cross_lanes,
                lanes_ba: spec.cross_lanes,
                speed: spec.cross_speed,
            });
        }
    }
    Ok(build_layout(&nodes, &roads)?)
}

#[derive(PartialEq)]
struct Reach {
    cost: f64,
    edge: usize,
}

impl Eq for Reach {}

impl Ord for Reach {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

impl PartialOrd for Reach {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cheapest edge sequence from `from` to `to` with each edge's free-flow
/// time scaled by U(1, 1.3), so repeated queries spread over near-shortest
/// alternatives.
fn randomized_path(
    net: &RoadNetwork,
    succ: &[Vec<usize>],
    from: usize,
    to: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    let cost: Vec<f64> = (0..net.edges.len())
        .map(|e| net.edge_free_flow_time(e) * rng.gen_range(1.0..1.3))
        .collect();
    let mut best = vec![f64::INFINITY; net.edges.len()];
    let mut prev = vec![usize::MAX; net.edges.len()];
    let mut heap = BinaryHeap::new();
    best[from] = cost[from];
    heap.push(Reach {
        cost: cost[from],
        edge: from,
    });
    while let Some(Reach { cost: c, edge }) = heap.pop() {
        if c > best[edge] {
            continue;
        }
        if edge == to {
            break;
        }
        for &n in &succ[edge] {
            let nc = c + cost[n];
            if nc < best[n] {
                best[n] = nc;
                prev[n] = edge;
                heap.push(Reach { cost: nc, edge: n });
            }
        }
    }
    if !best[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}

fn successors(net: &RoadNetwork) -> Vec<Vec<usize>> {
    (0..net.edges.len())
        .map(|e| {
            let mut out: Vec<usize> = net.edges[e]
                .lanes
                .iter()
                .flat_map(|&l| net.lane_out(l))
                .map(|&c| net.lanes[net.connections[c].to_lane].edge)
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect()
}

fn vehicle_id(k: usize, n: usize) -> String {
    let width = n.max(1).to_string().len();
    format!("c{k:0width$}")
}

/// Trips between weighted (entry edge, exit edge) pairs.
fn demand_from_pairs(
    net: &RoadNetwork,
    pairs: &[(usize, usize, f64)],
    cars: usize,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Demand, ScenarioError> {
    let mut demand = Demand::default();
    if cars == 0 {
        return Ok(demand);
    }
    if pairs.is_empty() {
        return Err(ScenarioError::Spec(
            "network has no entry/exit pairs".into(),
        ));
    }
    let succ = successors(net);
    let total: f64 = pairs.iter().map(|p| p.2).sum();
    let types = vehicle::catalog().len();
    const TRIES: usize = 100;
    for k in 0..cars {
        let mut tries = 0;
        let route = loop {
            let mut x = rng.gen_range(0.0..total);
            let &(from, to, _) = pairs
                .iter()
                .find(|p| {
                    x -= p.2;
                    x < 0.0
                })
                .unwrap_or(pairs.last().unwrap());
            if let Some(path) = randomized_path(net, &succ, from, to, rng) {
                if net.check_route(&path).is_ok() {
                    break path;
                }
            }
            tries += 1;
            if tries >= TRIES {
                return Err(ScenarioError::NoRoute {
                    from: net.edges[from].id.clone(),
                    to: net.edges[to].id.clone(),
                    tries,
                });
            }
        };
        let route = demand.intern_route(route);
        demand.records.push(TravelRecord {
            vehicle_id: vehicle_id(k, cars),
            route,
            entry: if horizon > 0.0 {
                rng.gen_range(0.0..horizon)
            } else {
                0.0
            },
            vtype: rng.gen_range(0..types),
            observed_exit: None,
        });
    }
    demand.sort();
    Ok(demand)
}

/// Entry/exit edge pairs that start and end at different fringe nodes.
fn fringe_pairs(net: &RoadNetwork) -> Vec<(usize, usize, f64)> {
    let entries = net.entry_edges();
    let exits = net.exit_edges();
    let mut out = Vec::new();
    for &a in &entries {
        for &b in &exits {
            if net.edges[a].from != net.edges[b].to {
                out.push((a, b, 1.0));
            }
        }
    }
    out
}

/// `cars` trips between random distinct fringe endpoints, released
/// uniformly over `[0, horizon)`, with random vehicle types.
pub fn gen_demand(
    net: &RoadNetwork,
    cars: usize,
    horizon: f64,
    seed: u64,
) -> Result<Demand, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    demand_from_pairs(net, &fringe_pairs(net), cars, horizon, &mut rng)
}

/// Arterial demand: a `main_share` fraction of trips runs end to end along
/// the main road (both directions), the rest joins random fringe pairs.
pub fn gen_arterial_demand(
    net: &RoadNetwork,
    cars: usize,
    main_share: f64,
    horizon: f64,
    seed: u64,
) -> Result<Demand, ScenarioError> {
    if !(0.0..=1.0).contains(&main_share) {
        return Err(ScenarioError::Spec("main share must be in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_id = |id: &str| {
        net.edge(id)
            .ok_or_else(|| ScenarioError::Spec(format!("not an arterial network: no edge {id}")))
    };
    let west_in = by_id("W-a0")?;
    let last = net.lights.len().saturating_sub(1);
    let east_in = by_id(&format!("E-a{last}"))?;
    let west_out = by_id("a0-W")?;
    let east_out = by_id(&format!("a{last}-E"))?;
    let mut pairs = fringe_pairs(net);
    let n = pairs.len() as f64;
    let minor = (1.0 - main_share) / n;
    for p in &mut pairs {
        p.2 = minor;
    }
    pairs.push((west_in, east_out, main_share / 2.0));
    pairs.push((east_in, west_out, main_share / 2.0));
    pairs.retain(|p| p.2 > 0.0);
    demand_from_pairs(net, &pairs, cars, horizon, &mut rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// Per-route count jitter fraction j: counts scale by 1 + U(-j, j).
    pub count_jitter: f64,
    /// Release times move by U(-r, r) seconds.
    pub release_jitter: f64,
    pub datasets: usize,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            count_jitter: 0.1,
            release_jitter: 60.0,
            datasets: 10,
        }
    }
}

/// `spec.datasets` reality-based variants of `base`. Each keeps the base
/// routes; per-route car counts and release times are jittered. Dataset
/// `i` uses its own seed derived from `seed` and `i`.
pub fn perturb_demand(
    base: &Demand,
    spec: &PerturbationSpec,
    seed: u64,
) -> Result<Vec<Demand>, ScenarioError> {
    if base.is_empty() {
        return Err(ScenarioError::Spec("base demand is empty".into()));
    }
    if !(0.0..1.0).contains(&spec.count_jitter)
        || !(spec.release_jitter >= 0.0)
        || spec.datasets == 0
    {
        return Err(ScenarioError::Spec(
            "need count jitter in [0, 1), release jitter >= 0 and at least one dataset".into(),
        ));
    }
    let mut by_route: Vec<Vec<&TravelRecord>> = vec![Vec::new(); base.routes.len()];
    for r in &base.records {
        by_route[r.route].push(r);
    }
    let horizon = base.records.iter().map(|r| r.entry).fold(0.0, f64::max);
    let types = vehicle::catalog().len();
    (0..spec.datasets)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1)),
            );
            let mut out = Demand {
                routes: base.routes.clone(),
                records: Vec::new(),
            };
            for (route, cars) in by_route.iter().enumerate() {
                if cars.is_empty() {
                    continue;
                }
                let factor = if spec.count_jitter > 0.0 {
                    1.0 + rng.gen_range(-spec.count_jitter..=spec.count_jitter)
                } else {
                    1.0
                };
                let count = (cars.len() as f64 * factor).round() as usize;
                for k in 0..count {
                    // reuse base cars first; extra cars copy a random one
                    let src = if k < cars.len() {
                        cars[k]
                    } else {
                        cars[rng.gen_range(0..cars.len())]
                    };
                    let shift = if spec.release_jitter > 0.0 {
                        rng.gen_range(-spec.release_jitter..=spec.release_jitter)
                    } else {
                        0.0
                    };
                    let vtype = if k < cars.len() {
                        src.vtype
                    } else {
                        rng.gen_range(0..types)
                    };
                    out.records.push(TravelRecord {
                        vehicle_id: if k < cars.len() {
                            src.vehicle_id.clone()
                        } else {
                            format!("{}+{}:{}", src.vehicle_id, route, k)
                        },
                        route,
                        entry: (src.entry + shift).clamp(0.0, horizon.max(0.0)),
                        vtype,
                        observed_exit: None,
                    });
                }
            }
            out.sort();
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let net = gen_grid(&GridSpec::new(3, 3), 1).unwrap();
        assert_eq!(net.lights.len(), 9);
        assert_eq!(net.entry_edges().len(), 12);
        assert_eq!(net.exit_edges().len(), 12);
        let one = gen_grid(&GridSpec::new(1, 1), 1).unwrap();
        assert_eq!(one.lights.len(), 1);
        assert_eq!(one.entry_edges().len(), 4);
    }

    #[test]
    fn arterial_shape() {
        let net = gen_arterial(&ArterialSpec::default()).unwrap();
        assert_eq!(net.lights.len(), 4);
        let d = gen_arterial_demand(&net, 200, 0.7, 600.0, 3).unwrap();
        assert_eq!(d.len(), 200);
        d.validate(&net).unwrap();
    }
}
