//! How much traffic a controller carries at a given mean travel time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::controllers::{ControlConfig, ControlError};
use crate::netmodel::{Demand, RoadNetwork, TravelRecord};
use crate::objective::simulate;
use crate::simcore::SimConfig;
use crate::vehicle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacitySpec {
    pub target_mtt: f64,
    /// Accept when |MTT - target| <= tol * target.
    pub tol: f64,
    pub lo: f64,
    pub hi: f64,
    pub max_probes: usize,
    /// Resampled demands averaged per probe away from scale 1.
    pub samples: usize,
    pub seed: u64,
}

impl CapacitySpec {
    pub fn new(target_mtt: f64) -> Self {
        Self {
            target_mtt,
            tol: 0.02,
            lo: 0.25,
            hi: 4.0,
            max_probes: 20,
            samples: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub scale: f64,
    pub cars: usize,
    pub mtt_s: f64,
    pub target_mtt_s: f64,
    /// False when the target lies outside the scale bracket or the probe
    /// budget ran out.
    pub converged: bool,
    /// (scale, MTT) of every probe in order.
    pub probes: Vec<(f64, f64)>,
}

/// `scale * |base|` cars drawn from the base route distribution, released
/// uniformly over the base release window.
pub fn resample_demand(base: &Demand, scale: f64, seed: u64) -> Demand {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (base.len() as f64 * scale).round() as usize;
    let window = base.records.iter().map(|r| r.entry).fold(0.0, f64::max);
    let types = vehicle::catalog().len();
    let width = n.max(1).to_string().len();
    let mut out = Demand {
        routes: base.routes.clone(),
        records: Vec::with_capacity(n),
    };
    if base.is_empty() {
        return out;
    }
    for k in 0..n {
        let src = &base.records[rng.gen_range(0..base.len())];
        out.records.push(TravelRecord {
            vehicle_id: format!("s{k:0width$}"),
            route: src.route,
            entry: if window > 0.0 {
                rng.gen_range(0.0..window)
            } else {
                0.0
            },
            vtype: rng.gen_range(0..types),
            observed_exit: None,
        });
    }
    out.sort();
    out
}

fn probe_mtt(
    net: &RoadNetwork,
    base: &Demand,
    config: &ControlConfig,
    sim: SimConfig,
    spec: &CapacitySpec,
    scale: f64,
    probe: usize,
) -> Result<(f64, usize), ControlError> {
    if (scale - 1.0).abs() < 1e-12 {
        return Ok((simulate(net, base, config, sim)?.mtt(), base.len()));
    }
    let runs: Vec<(f64, usize)> = (0..spec.samples.max(1))
        .into_par_iter()
        .map(|k| {
            let seed = spec.seed.wrapping_add(1000 * probe as u64 + k as u64);
            let d = resample_demand(base, scale, seed);
            simulate(net, &d, config, sim).map(|r| (r.mtt(), d.len()))
        })
        .collect::<Result<_, _>>()?;
    let mtt = runs.iter().map(|r| r.0).sum::<f64>() / runs.len() as f64;
    Ok((mtt, runs[0].1))
}

/// Bisects (geometrically) on the demand scale until the controller's MTT
/// matches the target. The first probe is the base demand itself.
pub fn capacity_search(
    net: &RoadNetwork,
    base: &Demand,
    config: &ControlConfig,
    sim: SimConfig,
    spec: &CapacitySpec,
) -> Result<CapacityReport, ControlError> {
    let target = spec.target_mtt;
    let close = |m: f64| (m - target).abs() <= spec.tol * target;
    let mut probes = Vec::new();
    let report = |scale: f64, mtt: f64, cars: usize, converged: bool, probes: Vec<(f64, f64)>| {
        CapacityReport {
            scale,
            cars,
            mtt_s: mtt,
            target_mtt_s: target,
            converged,
            probes,
        }
    };

    let (m1, c1) = probe_mtt(net, base, config, sim, spec, 1.0, 0)?;
    probes.push((1.0, m1));
    if close(m1) {
        return Ok(report(1.0, m1, c1, true, probes));
    }
    let (mut lo, mut hi) = if m1 < target {
        (1.0, spec.hi)
    } else {
        (spec.lo, 1.0)
    };
    // check the far end of the bracket first
    let edge = if m1 < target { hi } else { lo };
    let (me, ce) = probe_mtt(net, base, config, sim, spec, edge, 1)?;
    probes.push((edge, me));
    if close(me) {
        return Ok(report(edge, me, ce, true, probes));
    }
    if (m1 < target) == (me < target) {
        return Ok(report(edge, me, ce, false, probes));
    }
    let mut best = (edge, me, ce);
    for p in 2..spec.max_probes {
        let mid = (lo * hi).sqrt();
        let (m, c) = probe_mtt(net, base, config, sim, spec, mid, p)?;
        probes.push((mid, m));
        if (m - target).abs() < (best.1 - target).abs() {
            best = (mid, m, c);
        }
        if close(m) {
            return Ok(report(mid, m, c, true, probes));
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(report(best.0, best.1, best.2, false, probes))
}
