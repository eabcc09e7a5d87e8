//! Micro-auction lights: each phase bids a weighted sum of the local
//! queue-zone occupancies and the light runs a small auction every second.

use crate::simcore::{ControlContext, Decision, SignalController};

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionParams {
    /// `weights[phase][detector]` over the light's local detectors; 0
    /// removes the detector from that phase's bid.
    pub weights: Vec<Vec<f64>>,
    /// No change before this much green, s.
    pub minimum: f64,
    /// Until here a non-negative current bid keeps the green, s.
    pub priority: f64,
    /// From here the current phase bids at most 0, s.
    pub release: f64,
}

impl AuctionParams {
    /// All-zero weights: behaves as a round-robin light holding each phase
    /// for `priority` seconds.
    pub fn sensorless(
        phases: usize,
        detectors: usize,
        minimum: f64,
        priority: f64,
        release: f64,
    ) -> Self {
        Self {
            weights: vec![vec![0.0; detectors]; phases],
            minimum,
            priority,
            release,
        }
    }
}

/// b_i = Σ_j w_ij s_j
pub fn compute_bid(weights: &[f64], readings: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), readings.len());
    weights
        .iter()
        .zip(readings)
        .filter(|(w, _)| **w != 0.0)
        .map(|(w, s)| w * s)
        .sum()
}

/// Highest bid; ties go to the first tied phase after `current` in cyclic
/// order (so `current` itself loses every tie).
fn auction(current: usize, bids: &[f64]) -> (usize, f64) {
    let n = bids.len();
    let mut best = (current, bids[current]);
    for k in 1..=n {
        let i = (current + k) % n;
        if bids[i] > best.1 || (bids[i] == best.1 && best.0 == current && i != current) {
            best = (i, bids[i]);
        }
    }
    best
}

/// One auction decision for a light showing green `current` for `elapsed`
/// seconds.
pub fn auction_decide(
    current: usize,
    elapsed: f64,
    params: &AuctionParams,
    bids: &[f64],
) -> Decision {
    if elapsed < params.minimum {
        return Decision::Keep;
    }
    if elapsed < params.priority && bids[current] >= 0.0 {
        return Decision::Keep;
    }
    let winner = if elapsed < params.release {
        auction(current, bids)
    } else {
        let mut capped = bids.to_vec();
        capped[current] = capped[current].min(0.0);
        auction(current, &capped)
    };
    if winner.1 < 0.0 || winner.0 == current {
        Decision::Keep
    } else {
        Decision::SwitchTo(winner.0)
    }
}

#[derive(Debug, Clone)]
pub struct AuctionController {
    params: AuctionParams,
    /// Indices of the light's local detectors in the simulator.
    detectors: Vec<usize>,
    readings: Vec<f64>,
    bids: Vec<f64>,
}

impl AuctionController {
    pub fn new(params: AuctionParams, detectors: Vec<usize>) -> Self {
        let n = params.weights.len();
        Self {
            readings: vec![0.0; detectors.len()],
            bids: vec![0.0; n],
            params,
            detectors,
        }
    }
}

impl SignalController for AuctionController {
    fn decide(&mut self, ctx: &ControlContext<'_>) -> Decision {
        if !ctx.second_tick || ctx.in_transition() {
            return Decision::Keep;
        }
        for (r, &d) in self.readings.iter_mut().zip(&self.detectors) {
            *r = ctx.detectors.occupancy(d) as f64;
        }
        for (b, w) in self.bids.iter_mut().zip(&self.params.weights) {
            *b = compute_bid(w, &self.readings);
        }
        auction_decide(ctx.phase(), ctx.elapsed() + 1e-9, &self.params, &self.bids)
    }
}
