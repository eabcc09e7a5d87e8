//! `.gwctl` controller configuration files.
//!
//! One record per line, `#` starts a comment, lights are named by id and
//! every light of the network appears in exactly one controller record:
//!
//! ```text
//! STATIC <light> <offset-s> <green-s>...        one duration per phase
//! AUCTION <light> <minimum-s> <priority-s> <release-s>
//! BID <light> <phase> <weight>...               one weight per local detector
//! PLAN <light> <speed-loss> <waiting> <change>
//! ```
//!
//! An auction light needs one `BID` line per phase (phases numbered from
//! 0); local detectors are in network order. Numbers are written in their
//! shortest round-trip form.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{
    AuctionParams, ControlConfig, ControlError, LightControl, PlanningParams, StaticParams,
};
use crate::netmodel::RoadNetwork;

const HEADER: &str = "# greenwave control";

fn parse_err(line: usize, msg: impl Into<String>) -> ControlError {
    ControlError::Parse {
        line,
        msg: msg.into(),
    }
}

fn nums(line: usize, items: &[&str]) -> Result<Vec<f64>, ControlError> {
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("'{s}' is not a number")))
        })
        .collect()
}

pub fn parse_control(text: &str, net: &RoadNetwork) -> Result<ControlConfig, ControlError> {
    let mut lights: Vec<Option<LightControl>> = vec![None; net.lights.len()];
    let mut bids: HashMap<usize, Vec<Option<Vec<f64>>>> = HashMap::new();
    let mut bid_lines: HashMap<usize, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        let Some((&tag, rest)) = fields.split_first() else {
            continue;
        };
        let Some((&light_id, args)) = rest.split_first() else {
            return Err(parse_err(line, format!("{tag}: missing light id")));
        };
        let light = net
            .light(light_id)
            .ok_or_else(|| parse_err(line, format!("unknown light '{light_id}'")))?;
        let phases = net.lights[light].phases.len();
        let control = match tag {
            "STATIC" => {
                let v = nums(line, args)?;
                if v.len() != phases + 1 {
                    return Err(parse_err(
                        line,
                        format!("STATIC: expected offset and {phases} durations"),
                    ));
                }
                Some(LightControl::Static(StaticParams {
                    offset: v[0],
                    durations: v[1..].to_vec(),
                }))
            }
            "AUCTION" => {
                let v = nums(line, args)?;
                if v.len() != 3 {
                    return Err(parse_err(
                        line,
                        "AUCTION: expected minimum priority release",
                    ));
                }
                Some(LightControl::Auction(AuctionParams {
                    weights: Vec::new(),
                    minimum: v[0],
                    priority: v[1],
                    release: v[2],
                }))
            }
            "PLAN" => {
                let v = nums(line, args)?;
                if v.len() != 3 {
                    return Err(parse_err(line, "PLAN: expected speed-loss waiting change"));
                }
                Some(LightControl::Planning(PlanningParams {
                    speed_loss: v[0],
                    waiting: v[1],
                    change: v[2],
                }))
            }
            "BID" => {
                let Some((&phase, weights)) = args.split_first() else {
                    return Err(parse_err(line, "BID: missing phase"));
                };
                let phase: usize = phase
                    .parse()
                    .ok()
                    .filter(|&p| p < phases)
                    .ok_or_else(|| parse_err(line, format!("BID: bad phase '{phase}'")))?;
                let slot = bids.entry(light).or_insert_with(|| vec![None; phases]);
                if slot[phase].is_some() {
                    return Err(parse_err(line, format!("BID: phase {phase} given twice")));
                }
                slot[phase] = Some(nums(line, weights)?);
                bid_lines.entry(light).or_insert(line);
                None
            }
            other => return Err(parse_err(line, format!("unknown record '{other}'"))),
        };
        if let Some(c) = control {
            if lights[light].is_some() {
                return Err(parse_err(
                    line,
                    format!("light '{light_id}' configured twice"),
                ));
            }
            lights[light] = Some(c);
        }
    }

    for (light, rows) in bids {
        let line = bid_lines[&light];
        match &mut lights[light] {
            Some(LightControl::Auction(p)) => {
                p.weights = rows
                    .into_iter()
                    .enumerate()
                    .map(|(k, r)| {
                        r.ok_or_else(|| parse_err(line, format!("BID: phase {k} missing")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            _ => return Err(parse_err(line, "BID for a light that is not an auction")),
        }
    }
    let lights = lights
        .into_iter()
        .zip(&net.lights)
        .map(|(c, l)| {
            c.ok_or_else(|| ControlError::Invalid {
                light: l.id.clone(),
                msg: "no controller".into(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let config = ControlConfig { lights };
    for (l, c) in config.lights.iter().enumerate() {
        if let LightControl::Auction(p) = c {
            if p.weights.is_empty() && !net.lights[l].phases.is_empty() {
                return Err(ControlError::Invalid {
                    light: net.lights[l].id.clone(),
                    msg: "auction without BID lines".into(),
                });
            }
        }
    }
    config.validate(net)?;
    Ok(config)
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_control(config: &ControlConfig, net: &RoadNetwork) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for (c, light) in config.lights.iter().zip(&net.lights) {
        let id = &light.id;
        match c {
            LightControl::Static(p) => {
                let _ = writeln!(s, "STATIC {id} {} {}", p.offset, join(&p.durations));
            }
            LightControl::Auction(p) => {
                let _ = writeln!(s, "AUCTION {id} {} {} {}", p.minimum, p.priority, p.release);
                for (k, w) in p.weights.iter().enumerate() {
                    let _ = writeln!(s, "BID {id} {k} {}", join(w));
                }
            }
            LightControl::Planning(p) => {
                let _ = writeln!(s, "PLAN {id} {} {} {}", p.speed_loss, p.waiting, p.change);
            }
        }
    }
    s
}

pub fn load_control(
    path: impl AsRef<Path>,
    net: &RoadNetwork,
) -> Result<ControlConfig, ControlError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ControlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_control(&text, net)
}

pub fn save_control(
    config: &ControlConfig,
    net: &RoadNetwork,
    path: impl AsRef<Path>,
) -> Result<(), ControlError> {
    let path = path.as_ref();
    std::fs::write(path, write_control(config, net)).map_err(|source| ControlError::Io {
        path: path.display().to_string(),
        source,
    })
}
