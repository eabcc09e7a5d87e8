//! Parameter vectors for exercising perturb and repair.

use greenwave::controllers::{ControlConfig, LightControl, PlanningParams, StaticParams};
use greenwave::nash::{flatten, FlattenOptions, ParamKind, ParameterVector};
use greenwave::scenarios::{gen_grid, GridSpec};
use rand::Rng;

/// A vector mixing every light kind on a 2×2 grid.
pub fn mixed_vector() -> ParameterVector {
    let net = gen_grid(&GridSpec::new(2, 2), 11).unwrap();
    let auction = ControlConfig::demand_auction(&net, 4.0, 10.0, 25.0);
    let mut lights = ControlConfig::uniform_static(&net, 25.0).lights;
    lights[1] = auction.lights[1].clone();
    lights[2] = LightControl::Planning(PlanningParams::default());
    lights[3] = LightControl::Static(StaticParams {
        durations: vec![35.0, 15.0],
        offset: 12.0,
    });
    let config = ControlConfig { lights };
    flatten(&config, &net, FlattenOptions { fixed_cycle: true }).unwrap()
}

pub fn scramble(s: &ParameterVector, rng: &mut impl Rng) -> ParameterVector {
    let mut out = s.clone();
    for e in &mut out.entries {
        if let ParamKind::Continuous { lo, hi } = e.kind {
            let pad = 0.2 * (hi - lo);
            e.value = rng.gen_range(lo - pad..hi + pad);
        }
    }
    out
}
