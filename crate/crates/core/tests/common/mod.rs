#![allow(dead_code)]

pub mod auction;
pub mod nash;
pub mod planning;

use greenwave::netmodel::{parse_demand, parse_network, Demand, RoadNetwork};

/// One 100 m lane from a to b, 10 m/s.
pub const ROAD: &str = "\
NODE a 0 0
NODE b 100 0
EDGE ab a b 100 1
LANE ab 0 10
";

/// A single lit crossing: north-south is link 0, west-east is link 1.
pub const CROSSING: &str = "\
NODE n 0 200
NODE w -200 0
NODE j 0 0
NODE s 0 -200
NODE e 200 0
EDGE nj n j 200 1
LANE nj 0 10
EDGE wj w j 200 1
LANE wj 0 10
EDGE js j s 200 1
LANE js 0 10
EDGE je j e 200 1
LANE je 0 10
LIGHT L j Gr rG
CONN nj_0 js_0 L 0
CONN wj_0 je_0 L 1
DET q:nj_0 nj_0 0 40 local
DET q:wj_0 wj_0 0 40 local
DET loop nj_0 10 2 local
";

pub fn net(text: &str) -> RoadNetwork {
    parse_network(text).expect("test network parses")
}

pub fn demand(net: &RoadNetwork, text: &str) -> Demand {
    parse_demand(text, net).expect("test demand parses")
}

/// `n` cars per route spaced `gap` seconds apart, starting at `start`.
pub fn stream(routes: &[(&str, &str)], n: usize, gap: f64, vtype: &str) -> String {
    let mut s = String::new();
    for (id, edges) in routes {
        s.push_str(&format!("ROUTE {id} {edges}\n"));
    }
    let mut k = 0;
    for i in 0..n {
        for (id, _) in routes {
            s.push_str(&format!("CAR c{k:04} {id} {} {vtype}\n", i as f64 * gap));
            k += 1;
        }
    }
    s
}
