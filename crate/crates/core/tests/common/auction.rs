//! Independent reference implementations of the auction rule table and
//! the sensorless round-robin schedule.

use greenwave::controllers::AuctionParams;
use greenwave::simcore::Decision;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Reference decision table written directly from the window rules.
pub fn reference_decide(cur: usize, elapsed: f64, p: &AuctionParams, bids: &[f64]) -> Decision {
    let n = bids.len();
    let open = |bids: &[f64]| {
        let top = bids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top < 0.0 {
            return Decision::Keep;
        }
        // first tied phase after the current one, wrapping to it last
        let winner = (1..=n)
            .map(|k| (cur + k) % n)
            .find(|&i| bids[i] == top)
            .unwrap();
        if winner == cur {
            Decision::Keep
        } else {
            Decision::SwitchTo(winner)
        }
    };
    if elapsed < p.minimum {
        Decision::Keep
    } else if elapsed < p.priority {
        if bids[cur] >= 0.0 {
            Decision::Keep
        } else {
            open(bids)
        }
    } else if elapsed < p.release {
        open(bids)
    } else {
        let mut capped = bids.to_vec();
        capped[cur] = capped[cur].min(0.0);
        open(&capped)
    }
}

pub fn random_case(rng: &mut ChaCha8Rng) -> (usize, f64, AuctionParams, Vec<f64>) {
    let n = rng.gen_range(2..=5);
    let mut d = [
        rng.gen_range(1.0..30.0),
        rng.gen_range(1.0..30.0),
        rng.gen_range(1.0..30.0),
    ];
    d.sort_by(f64::total_cmp);
    let p = AuctionParams::sensorless(n, 0, d[0], d[1], d[2]);
    // elapsed lands in every window, sometimes exactly on a boundary
    let elapsed = match rng.gen_range(0..6) {
        0 => d[0],
        1 => d[1],
        2 => d[2],
        _ => rng.gen_range(0.0..35.0),
    };
    // integer bids make ties common; some all-equal rows
    let bids: Vec<f64> = match rng.gen_range(0..4) {
        0 => vec![rng.gen_range(-3..=3) as f64; n],
        1 => (0..n).map(|_| rng.gen_range(-10.0..=10.0)).collect(),
        _ => (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect(),
    };
    (rng.gen_range(0..n), elapsed, p, bids)
}

/// Phase starts a round-robin light holding each green for `hold` seconds
/// would log, with decisions on whole seconds only.
pub fn round_robin_starts(
    phases: usize,
    hold: f64,
    yellow: f64,
    dt: f64,
    until: f64,
) -> Vec<(usize, f64)> {
    let eps = 1e-9;
    let mut out = vec![(0, 0.0)];
    let mut phase = 0;
    let mut since = 0.0;
    let mut yellow_until: Option<f64> = None;
    let steps = (until / dt).round() as u64;
    for k in 0..steps {
        let t = k as f64 * dt;
        let tick = k == 0 || (t + eps).floor() > ((k - 1) as f64 * dt + eps).floor();
        if let Some(u) = yellow_until {
            if t + eps >= u {
                phase = (phase + 1) % phases;
                since = t;
                yellow_until = None;
                out.push((phase, t));
            }
        }
        if yellow_until.is_none() && tick && t - since + eps >= hold {
            yellow_until = Some(t + yellow);
        }
    }
    out
}
