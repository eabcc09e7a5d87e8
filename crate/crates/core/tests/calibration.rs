use greenwave::calibrate::{
    calibrate_lights, correlation, correlation_matrix, mismatch, observe, random_static_config,
    robustness_test,
};
use greenwave::nash::OptimizeConfig;
use greenwave::scenarios::{gen_demand, gen_grid, GridSpec};
use greenwave::simcore::SimConfig;
use proptest::prelude::*;

/// Textbook Pearson: covariance over the product of standard deviations.
fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn pearson_examples() {
    let a = [1.0, 2.0, 3.0, 4.0];
    let b = [1.1, 1.9, 3.2, 3.8];
    let r = correlation(&a, &b).unwrap();
    assert!((r - pearson(&a, &b)).abs() < 1e-12);
    // centered: sxy = 4.7, sxx = 5, syy = 4.5
    assert!((r - 4.7 / 22.5f64.sqrt()).abs() < 1e-12, "{r}");
    assert_eq!(
        correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
        -1.0
    );
    assert!(correlation(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    let m = correlation_matrix(&[a.to_vec(), b.to_vec()]).unwrap();
    assert_eq!(m[0][0], 1.0);
    assert_eq!(m[0][1], m[1][0]);
}

proptest! {
    #[test]
    fn mismatch_is_zero_only_on_exact_match(
        obs in prop::collection::vec(1.0f64..500.0, 1..50),
        k in any::<prop::sample::Index>(),
        delta in 0.001f64..50.0,
    ) {
        prop_assert_eq!(mismatch(&obs, &obs).0, 0.0);
        let mut sim = obs.clone();
        let i = k.index(obs.len());
        sim[i] += delta;
        let (f1, _) = mismatch(&sim, &obs);
        prop_assert!(f1 > 0.0);
        // growing one error with the rest fixed grows f
        sim[i] += 1.0;
        prop_assert!(mismatch(&sim, &obs).0 > f1);
    }

    #[test]
    fn mismatch_ignores_car_order(
        pairs in prop::collection::vec((1.0f64..500.0, 1.0f64..500.0), 1..40),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let (sim, obs): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (s2, o2): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
        let (a, b) = (mismatch(&sim, &obs).0, mismatch(&s2, &o2).0);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn correlation_matches_the_textbook_formula(
        xy in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let Ok(r) = correlation(&x, &y) {
            prop_assert!((r - pearson(&x, &y)).abs() < 1e-9);
        }
    }
}

fn small_setup() -> (
    greenwave::netmodel::RoadNetwork,
    greenwave::netmodel::Demand,
    SimConfig,
) {
    let net = gen_grid(&GridSpec::new(2, 2), 1).unwrap();
    let demand = gen_demand(&net, 300, 600.0, 2).unwrap();
    let sim = SimConfig {
        horizon: 4000.0,
        ..SimConfig::default()
    };
    (net, demand, sim)
}

#[test]
fn target_settings_match_themselves() {
    let (net, demand, sim) = small_setup();
    let target = random_static_config(&net, (5.0, 60.0), 7);
    let observed = observe(&net, &demand, &target, sim).unwrap();
    let cal = calibrate_lights(
        &net,
        &observed,
        &target,
        sim,
        &OptimizeConfig::new(0, 0),
        |_| {},
    )
    .unwrap();
    assert_eq!(cal.report.initial_mae_s, 0.0);
    assert_eq!(cal.report.final_mae_s, 0.0);
    assert!((cal.report.correlation - 1.0).abs() < 1e-12);
    assert_eq!(
        robustness_test(&net, &target, &target, &demand, sim).unwrap(),
        1.0
    );
}

#[test]
fn calibration_never_ends_worse_than_its_start() {
    let (net, demand, sim) = small_setup();
    let observed = observe(
        &net,
        &demand,
        &random_static_config(&net, (5.0, 60.0), 7),
        sim,
    )
    .unwrap();
    let start = random_static_config(&net, (5.0, 60.0), 8);
    let cal = calibrate_lights(
        &net,
        &observed,
        &start,
        sim,
        &OptimizeConfig::new(40, 1),
        |_| {},
    )
    .unwrap();
    let r = &cal.report;
    assert!(r.final_mae_s <= r.initial_mae_s);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(r.trace.len(), 41);
    assert_eq!(r.pairs_csv().lines().count(), 301);
}

#[test]
fn unobserved_demand_is_rejected() {
    let (net, demand, sim) = small_setup();
    let start = random_static_config(&net, (5.0, 60.0), 8);
    assert!(calibrate_lights(
        &net,
        &demand,
        &start,
        sim,
        &OptimizeConfig::new(1, 1),
        |_| {}
    )
    .is_err());
}
