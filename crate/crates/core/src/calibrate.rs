//! Fitting fixed-schedule lights to observed journey times.
//!
//! The mismatch of a hypothesized setting h is
//! f(h) = Σ_c |JourneyTime_h(c) - JourneyTime_a(c)| over all observed cars,
//! replayed with their observed entry times.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::controllers::{cycle_yellows, ControlConfig, ControlError, LightControl, StaticParams};
use crate::nash::{
    flatten, optimize_with, unflatten, FlattenOptions, NashError, Objective, OptimizeConfig,
    ParameterVector, RunLog, Trial,
};
use crate::netmodel::{Demand, RoadNetwork};
use crate::objective::simulate;
use crate::simcore::{PhaseTable, SimConfig, SimResult};

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("car {0} has no observed journey time")]
    Unobserved(String),
    #[error("car {0} missing from the simulation result")]
    Missing(String),
    #[error("correlation needs two equal-length series of at least 2 values")]
    Length,
    #[error("correlation undefined: a series has zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Nash(#[from] NashError),
}

/// Observed journey times in demand order.
pub fn observed_times(demand: &Demand) -> Result<Vec<f64>, CalibrateError> {
    demand
        .records
        .iter()
        .map(|r| {
            r.observed_journey()
                .ok_or_else(|| CalibrateError::Unobserved(r.vehicle_id.clone()))
        })
        .collect()
}

/// Simulated journey times aligned with the demand's records by car id.
pub fn aligned_times(result: &SimResult, demand: &Demand) -> Result<Vec<f64>, CalibrateError> {
    // results come back in demand order; fall back to an id lookup otherwise
    let in_order = result.cars.len() == demand.len()
        && result
            .cars
            .iter()
            .zip(&demand.records)
            .all(|(c, r)| c.vehicle_id == r.vehicle_id);
    if in_order {
        return Ok(result.cars.iter().map(|c| c.journey()).collect());
    }
    let by_id: HashMap<&str, f64> = result
        .cars
        .iter()
        .map(|c| (c.vehicle_id.as_str(), c.journey()))
        .collect();
    demand
        .records
        .iter()
        .map(|r| {
            by_id
                .get(r.vehicle_id.as_str())
                .copied()
                .ok_or_else(|| CalibrateError::Missing(r.vehicle_id.clone()))
        })
        .collect()
}

/// f(h) and MAE = f / |C| between simulated and observed journey times.
pub fn mismatch(simulated: &[f64], observed: &[f64]) -> (f64, f64) {
    let f: f64 = simulated
        .iter()
        .zip(observed)
        .map(|(a, b)| (a - b).abs())
        .sum();
    let mae = if observed.is_empty() {
        0.0
    } else {
        f / observed.len() as f64
    };
    (f, mae)
}

/// Simulates the observed demand under `config` and compares journey
/// times with the observations.
pub fn similarity_objective(
    net: &RoadNetwork,
    target: &Demand,
    config: &ControlConfig,
    sim: SimConfig,
) -> Result<(f64, f64), CalibrateError> {
    let observed = observed_times(target)?;
    let result = simulate(net, target, config, sim)?;
    Ok(mismatch(&aligned_times(&result, target)?, &observed))
}

/// Pearson correlation coefficient.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64, CalibrateError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(CalibrateError::Length);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(CalibrateError::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pairwise correlations of per-car journey-time vectors.
pub fn correlation_matrix(runs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CalibrateError> {
    let n = runs.len();
    let mut m = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = correlation(&runs[i], &runs[j])?;
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub observed: usize,
    pub simulated: usize,
}

/// Side-by-side histograms on shared bins of width `bin` starting at 0.
pub fn histograms(observed: &[f64], simulated: &[f64], bin: f64) -> Vec<HistogramBin> {
    let top = observed
        .iter()
        .chain(simulated)
        .copied()
        .fold(0.0f64, f64::max);
    let bins = ((top / bin).floor() as usize + 1).max(1);
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|k| HistogramBin {
            lo: k as f64 * bin,
            hi: (k + 1) as f64 * bin,
            observed: 0,
            simulated: 0,
        })
        .collect();
    let idx = |v: f64| ((v.max(0.0) / bin).floor() as usize).min(bins - 1);
    for &v in observed {
        out[idx(v)].observed += 1;
    }
    for &v in simulated {
        out[idx(v)].simulated += 1;
    }
    out
}

/// Random fixed schedules: greens U(lo, hi), offsets U(0, cycle).
pub fn random_static_config(net: &RoadNetwork, green: (f64, f64), seed: u64) -> ControlConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lights = (0..net.lights.len())
        .map(|i| {
            let table = PhaseTable::for_light(net, i).expect("lights of a built network are valid");
            let durations: Vec<f64> = (0..table.len())
                .map(|_| rng.gen_range(green.0..=green.1))
                .collect();
            let p = StaticParams {
                offset: 0.0,
                durations,
            };
            let cycle = p.cycle(&cycle_yellows(&table));
            LightControl::Static(StaticParams {
                offset: rng.gen_range(0.0..cycle),
                ..p
            })
        })
        .collect();
    ControlConfig { lights }
}

/// The demand with every car's exit time taken from a run under `config`.
pub fn observe(
    net: &RoadNetwork,
    demand: &Demand,
    config: &ControlConfig,
    sim: SimConfig,
) -> Result<Demand, CalibrateError> {
    let result = simulate(net, demand, config, sim)?;
    let times = aligned_times(&result, demand)?;
    let mut out = demand.clone();
    for (r, t) in out.records.iter_mut().zip(times) {
        r.observed_exit = Some(r.entry + t);
    }
    Ok(out)
}

/// Journey-time correlation of two settings on the same demand.
pub fn robustness_test(
    net: &RoadNetwork,
    a: &ControlConfig,
    b: &ControlConfig,
    fresh: &Demand,
    sim: SimConfig,
) -> Result<f64, CalibrateError> {
    let ta = aligned_times(&simulate(net, fresh, a, sim)?, fresh)?;
    let tb = aligned_times(&simulate(net, fresh, b, sim)?, fresh)?;
    correlation(&ta, &tb)
}

/// Journey-time mismatch against a fixed set of observations.
pub struct SimilarityObjective<'a> {
    pub net: &'a RoadNetwork,
    pub target: &'a Demand,
    pub observed: Vec<f64>,
    pub sim: SimConfig,
}

impl<'a> SimilarityObjective<'a> {
    pub fn new(
        net: &'a RoadNetwork,
        target: &'a Demand,
        sim: SimConfig,
    ) -> Result<Self, CalibrateError> {
        Ok(Self {
            net,
            target,
            observed: observed_times(target)?,
            sim,
        })
    }

    pub fn times(&self, s: &ParameterVector) -> Result<Vec<f64>, NashError> {
        let config = unflatten(s, self.net)?;
        let result = simulate(self.net, self.target, &config, self.sim)
            .map_err(|e| NashError::Evaluation(e.to_string()))?;
        aligned_times(&result, self.target).map_err(|e| NashError::Evaluation(e.to_string()))
    }
}

impl Objective for SimilarityObjective<'_> {
    fn datasets(&self) -> usize {
        1
    }

    fn evaluate(&self, s: &ParameterVector, _dataset: usize) -> Result<f64, NashError> {
        Ok(mismatch(&self.times(s)?, &self.observed).0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub cars: usize,
    pub initial_mae_s: f64,
    pub final_mae_s: f64,
    /// Calibrated simulated vs observed journey times.
    pub correlation: f64,
    /// Starting (uncalibrated) settings vs observed.
    pub initial_correlation: f64,
    #[serde(skip)]
    pub vehicle_ids: Vec<String>,
    #[serde(skip)]
    pub observed: Vec<f64>,
    #[serde(skip)]
    pub initial: Vec<f64>,
    #[serde(skip)]
    pub simulated: Vec<f64>,
    /// Best MAE after each trial (trial 0 is the starting point).
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl CalibrationReport {
    /// `car_id,observed_s,initial_s,calibrated_s`
    pub fn pairs_csv(&self) -> String {
        let mut s = String::from("car_id,observed_s,initial_s,calibrated_s\n");
        for i in 0..self.observed.len() {
            let _ = writeln!(
                s,
                "{},{:.3},{:.3},{:.3}",
                self.vehicle_ids[i], self.observed[i], self.initial[i], self.simulated[i]
            );
        }
        s
    }

    /// `trial,best_mae_s`
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("trial,best_mae_s\n");
        for (t, v) in self.trace.iter().enumerate() {
            let _ = writeln!(s, "{t},{v}");
        }
        s
    }

    /// `bin_lo_s,bin_hi_s,observed,simulated`
    pub fn histogram_csv(&self, bin: f64) -> String {
        let mut s = String::from("bin_lo_s,bin_hi_s,observed,simulated\n");
        for b in histograms(&self.observed, &self.simulated, bin) {
            let _ = writeln!(s, "{},{},{},{}", b.lo, b.hi, b.observed, b.simulated);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub config: ControlConfig,
    pub vector: ParameterVector,
    pub report: CalibrationReport,
    pub log: RunLog,
}

/// Runs NASH from `start` to minimize the journey-time mismatch with the
/// observations in `target`.
pub fn calibrate_lights(
    net: &RoadNetwork,
    target: &Demand,
    start: &ControlConfig,
    sim: SimConfig,
    opt: &OptimizeConfig,
    progress: impl FnMut(&Trial),
) -> Result<Calibration, CalibrateError> {
    let objective = SimilarityObjective::new(net, target, sim)?;
    let s0 = flatten(start, net, FlattenOptions::default())?;
    let initial = objective.times(&s0)?;
    let out = optimize_with(&s0, &objective, opt, progress)?;
    let simulated = objective.times(&out.best)?;
    let n = target.len().max(1) as f64;
    let mut trace = vec![out.log.initial / n];
    trace.extend(out.log.trials.iter().map(|t| t.best_so_far / n));
    let observed = objective.observed.clone();
    let report = CalibrationReport {
        cars: target.len(),
        initial_mae_s: mismatch(&initial, &observed).1,
        final_mae_s: mismatch(&simulated, &observed).1,
        correlation: correlation(&simulated, &observed).unwrap_or(f64::NAN),
        initial_correlation: correlation(&initial, &observed).unwrap_or(f64::NAN),
        vehicle_ids: target
            .records
            .iter()
            .map(|r| r.vehicle_id.clone())
            .collect(),
        observed,
        initial,
        simulated,
        trace,
    };
    Ok(Calibration {
        config: unflatten(&out.best, net)?,
        vector: out.best,
        report,
        log: out.log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_by_hand() {
        let (f, mae) = mismatch(&[10.0, 20.0], &[12.0, 18.0]);
        assert_eq!(f, 4.0);
        assert_eq!(mae, 2.0);
    }

    #[test]
    fn correlation_cases() {
        assert!((correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            correlation(&[1.0, 1.0], &[1.0, 2.0]),
            Err(CalibrateError::ZeroVariance)
        ));
    }

    #[test]
    fn histogram_bins_share_edges() {
        let h = histograms(&[1.0, 11.0], &[5.0, 25.0], 10.0);
        assert_eq!(h.len(), 3);
        assert_eq!((h[0].observed, h[0].simulated), (1, 1));
        assert_eq!((h[2].observed, h[2].simulated), (0, 1));
    }
}
