//! Next-ascent stochastic hillclimbing over flat parameter vectors.
//!
//! Each trial perturbs a few entries, repairs the vector back into the
//! valid subspace, evaluates it on every dataset and keeps it only if the
//! acceptance rule says it improved on the incumbent.

mod params;

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use params::{
    flatten, unflatten, FlattenOptions, AUCTION_DURATION_BOUNDS, PENALTY_BOUNDS,
    STATIC_DURATION_BOUNDS, WEIGHT_BOUNDS, WEIGHT_DEAD_ZONE,
};

use crate::simcore::MIN_GREEN;

#[derive(Debug, Error)]
pub enum NashError {
    #[error("value vectors differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("objective has no datasets")]
    NoDatasets,
    #[error("parameter vector: {0}")]
    Shape(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    Continuous { lo: f64, hi: f64 },
    Discrete { options: Vec<f64> },
}

/// What an entry means to its repair group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Duration,
    Offset,
    Weight,
    Minimum,
    Priority,
    Release,
    Penalty,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: f64,
    pub kind: ParamKind,
    pub group: usize,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupKind {
    /// A fixed-schedule light. With `fixed_cycle`, greens are rescaled to
    /// sum to it; `yellow_total` completes the cycle for the offset.
    Static {
        fixed_cycle: Option<f64>,
        yellow_total: f64,
    },
    Auction,
    Planning,
    /// Bounds only.
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairGroup {
    /// Light index, when the group belongs to one.
    pub light: Option<usize>,
    pub kind: GroupKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub entries: Vec<Entry>,
    pub groups: Vec<RepairGroup>,
}

impl ParameterVector {
    /// A vector of unconstrained continuous entries in one plain group.
    pub fn continuous(values: &[f64], lo: f64, hi: f64) -> Self {
        Self {
            entries: values
                .iter()
                .map(|&value| Entry {
                    value,
                    kind: ParamKind::Continuous { lo, hi },
                    group: 0,
                    role: Role::Free,
                })
                .collect(),
            groups: vec![RepairGroup {
                light: None,
                kind: GroupKind::Plain,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Do all entries satisfy their bounds and option sets?
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|e| match &e.kind {
            ParamKind::Continuous { lo, hi } => e.value >= *lo && e.value <= *hi,
            ParamKind::Discrete { options } => options.contains(&e.value),
        })
    }

    fn group_entries(&self, g: usize) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| self.entries[i].group == g)
            .collect()
    }
}

/// How many entries one trial perturbs at most.
pub fn max_perturbed(len: usize) -> usize {
    ((len as f64 * 0.05).floor() as usize).max(1)
}

/// Perturbs k ~ U{1..max(1, ⌊0.05|S|⌋)} distinct entries. Continuous
/// entries move by U(-5%, +5%) of their value (U(-1%, +1%) of the bound
/// range when the value is 0) and are clamped; discrete entries jump to
/// another option. Returns the new vector and the indices drawn.
pub fn perturb(s: &ParameterVector, rng: &mut impl Rng) -> (ParameterVector, Vec<usize>) {
    let mut out = s.clone();
    if s.is_empty() {
        return (out, Vec::new());
    }
    let k = rng.gen_range(1..=max_perturbed(s.len()));
    let mut picked = sample(rng, s.len(), k).into_vec();
    picked.sort_unstable();
    for &i in &picked {
        let e = &mut out.entries[i];
        match &e.kind {
            ParamKind::Continuous { lo, hi } => {
                let v = e.value;
                let span = if v == 0.0 {
                    0.01 * (hi - lo)
                } else {
                    0.05 * v.abs()
                };
                let nv = if span > 0.0 {
                    v + rng.gen_range(-span..=span)
                } else {
                    v
                };
                e.value = nv.clamp(*lo, *hi);
            }
            ParamKind::Discrete { options } => {
                let others: Vec<f64> = options.iter().copied().filter(|o| *o != e.value).collect();
                if !others.is_empty() {
                    e.value = others[rng.gen_range(0..others.len())];
                }
            }
        }
    }
    (out, picked)
}

fn clamp_entry(e: &mut Entry) {
    if let ParamKind::Continuous { lo, hi } = e.kind {
        e.value = e.value.clamp(lo, hi);
    }
}

/// Maps a vector back into the valid subspace, group by group.
/// Idempotent.
pub fn repair(s: &mut ParameterVector) {
    for e in &mut s.entries {
        clamp_entry(e);
    }
    for g in 0..s.groups.len() {
        let idx = s.group_entries(g);
        match s.groups[g].kind.clone() {
            GroupKind::Static {
                fixed_cycle,
                yellow_total,
            } => repair_static(s, &idx, fixed_cycle, yellow_total),
            GroupKind::Auction => repair_auction(s, &idx),
            GroupKind::Planning | GroupKind::Plain => {}
        }
    }
}

fn repair_static(
    s: &mut ParameterVector,
    idx: &[usize],
    fixed_cycle: Option<f64>,
    yellow_total: f64,
) {
    let durations: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&i| s.entries[i].role == Role::Duration)
        .collect();
    if let Some(cycle) = fixed_cycle {
        let sum: f64 = durations.iter().map(|&i| s.entries[i].value).sum();
        if (sum - cycle).abs() > 1e-9 * cycle {
            // proportional rescale; durations pinned at a bound drop
            // out and the rest absorb the difference
            let mut pinned = vec![false; durations.len()];
            loop {
                let fixed: f64 = durations
                    .iter()
                    .zip(&pinned)
                    .filter(|(_, p)| **p)
                    .map(|(&i, _)| s.entries[i].value)
                    .sum();
                let free: f64 = durations
                    .iter()
                    .zip(&pinned)
                    .filter(|(_, p)| !**p)
                    .map(|(&i, _)| s.entries[i].value)
                    .sum();
                if free <= 0.0 {
                    break;
                }
                let f = (cycle - fixed) / free;
                let mut changed = false;
                for (k, &i) in durations.iter().enumerate() {
                    if pinned[k] {
                        continue;
                    }
                    let (lo, hi) = match s.entries[i].kind {
                        ParamKind::Continuous { lo, hi } => (lo.max(MIN_GREEN), hi),
                        ParamKind::Discrete { .. } => (MIN_GREEN, f64::INFINITY),
                    };
                    let v = s.entries[i].value * f;
                    if v < lo || v > hi {
                        s.entries[i].value = v.clamp(lo, hi);
                        pinned[k] = true;
                        changed = true;
                    } else {
                        s.entries[i].value = v;
                    }
                }
                if !changed {
                    break;
                }
            }
        }
    }
    let cycle: f64 = durations.iter().map(|&i| s.entries[i].value).sum::<f64>() + yellow_total;
    for &i in idx {
        if s.entries[i].role == Role::Offset && cycle > 0.0 && s.entries[i].value >= cycle {
            s.entries[i].value = s.entries[i].value.rem_euclid(cycle);
        }
    }
}

fn repair_auction(s: &mut ParameterVector, idx: &[usize]) {
    let mut triple = [usize::MAX; 3];
    for &i in idx {
        match s.entries[i].role {
            Role::Weight => {
                if s.entries[i].value.abs() < WEIGHT_DEAD_ZONE {
                    s.entries[i].value = 0.0;
                }
            }
            Role::Minimum => triple[0] = i,
            Role::Priority => triple[1] = i,
            Role::Release => triple[2] = i,
            _ => {}
        }
    }
    if triple.iter().any(|&i| i == usize::MAX) {
        return;
    }
    let mut v = triple.map(|i| s.entries[i].value);
    v.sort_by(f64::total_cmp);
    v[0] = v[0].max(MIN_GREEN);
    v[1] = v[1].max(v[0]);
    v[2] = v[2].max(v[1]);
    for (k, &i) in triple.iter().enumerate() {
        s.entries[i].value = v[k];
        clamp_entry(&mut s.entries[i]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptRule {
    /// Lower mean objective.
    Simple,
    /// Lower mean objective and at least half of the datasets improved.
    Majority,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn accept(old: &[f64], new: &[f64], rule: AcceptRule) -> Result<bool, NashError> {
    if old.len() != new.len() {
        return Err(NashError::Length(old.len(), new.len()));
    }
    if old.is_empty() {
        return Err(NashError::NoDatasets);
    }
    let better_mean = mean(new) < mean(old);
    Ok(match rule {
        AcceptRule::Simple => better_mean,
        AcceptRule::Majority => {
            let improved = old.iter().zip(new).filter(|(o, n)| n < o).count();
            better_mean && 2 * improved >= old.len()
        }
    })
}

/// An objective over one or more datasets; lower is better. Evaluations
/// must be pure: the same vector and dataset always give the same value.
pub trait Objective: Sync {
    fn datasets(&self) -> usize;
    fn evaluate(&self, s: &ParameterVector, dataset: usize) -> Result<f64, NashError>;

    /// Values on every dataset, evaluated concurrently.
    fn evaluate_all(&self, s: &ParameterVector) -> Result<Vec<f64>, NashError> {
        (0..self.datasets())
            .into_par_iter()
            .map(|d| self.evaluate(s, d))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub budget: usize,
    pub rule: AcceptRule,
    pub seed: u64,
    /// Stop once the best mean objective is at or below this.
    pub target: Option<f64>,
    /// Record wall-clock time per trial (makes logs non-reproducible).
    pub timing: bool,
}

impl OptimizeConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            rule: AcceptRule::Simple,
            seed,
            target: None,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub trial: usize,
    pub objective_mean: f64,
    pub accepted: bool,
    pub best_so_far: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    /// Mean objective of the starting vector.
    pub initial: f64,
    pub trials: Vec<Trial>,
}

impl RunLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,objective_mean,accepted,best_so_far,wall_ms\n");
        for t in &self.trials {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                t.trial, t.objective_mean, t.accepted, t.best_so_far, t.wall_ms
            );
        }
        s
    }

    pub fn best(&self) -> f64 {
        self.trials.last().map_or(self.initial, |t| t.best_so_far)
    }
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub best: ParameterVector,
    /// Per-dataset values of `best`.
    pub values: Vec<f64>,
    pub log: RunLog,
}

/// Runs `cfg.budget` perturb, repair, evaluate, accept trials from `s0`.
pub fn optimize(
    s0: &ParameterVector,
    objective: &dyn Objective,
    cfg: &OptimizeConfig,
) -> Result<Optimized, NashError> {
    optimize_with(s0, objective, cfg, |_| {})
}

/// [`optimize`] with a callback after every trial.
pub fn optimize_with(
    s0: &ParameterVector,
    objective: &dyn Objective,
    cfg: &OptimizeConfig,
    mut progress: impl FnMut(&Trial),
) -> Result<Optimized, NashError> {
    if objective.datasets() == 0 {
        return Err(NashError::NoDatasets);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = s0.clone();
    repair(&mut best);
    let mut values = objective.evaluate_all(&best)?;
    let mut log = RunLog {
        initial: mean(&values),
        trials: Vec::with_capacity(cfg.budget),
    };
    for trial in 1..=cfg.budget {
        if cfg.target.is_some_and(|t| mean(&values) <= t) {
            break;
        }
        let start = Instant::now();
        let (mut candidate, _) = perturb(&best, &mut rng);
        repair(&mut candidate);
        let new_values = objective.evaluate_all(&candidate)?;
        let accepted = accept(&values, &new_values, cfg.rule)?;
        if accepted {
            best = candidate;
            values = new_values.clone();
        }
        let t = Trial {
            trial,
            objective_mean: mean(&new_values),
            accepted,
            best_so_far: mean(&values),
            wall_ms: if cfg.timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        };
        progress(&t);
        log.trials.push(t);
    }
    Ok(Optimized { best, values, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_count_bound() {
        assert_eq!(max_perturbed(50), 2);
        assert_eq!(max_perturbed(10), 1);
        assert_eq!(max_perturbed(27), 1);
        assert_eq!(max_perturbed(100), 5);
    }

    #[test]
    fn two_option_discrete_flips() {
        let s = ParameterVector {
            entries: vec![Entry {
                value: 1.0,
                kind: ParamKind::Discrete {
                    options: vec![1.0, 2.0],
                },
                group: 0,
                role: Role::Free,
            }],
            groups: vec![RepairGroup {
                light: None,
                kind: GroupKind::Plain,
            }],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (p, idx) = perturb(&s, &mut rng);
        assert_eq!(idx, vec![0]);
        assert_eq!(p.entries[0].value, 2.0);
    }

    #[test]
    fn majority_boundary() {
        let old = [10.0; 10];
        let mut new = [10.0; 10];
        for v in new.iter_mut().take(4) {
            *v = 5.0;
        }
        assert!(!accept(&old, &new, AcceptRule::Majority).unwrap());
        new[4] = 9.0;
        assert!(accept(&old, &new, AcceptRule::Majority).unwrap());
        assert!(accept(&[100.0], &[99.0], AcceptRule::Simple).unwrap());
        assert!(accept(&[1.0], &[1.0, 2.0], AcceptRule::Simple).is_err());
    }
}
