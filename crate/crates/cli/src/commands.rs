//! One function per subcommand.

use std::fmt::Write as _;
use std::path::Path;

use greenwave::calibrate::{
    aligned_times, calibrate_lights, correlation, correlation_matrix, observe,
    random_static_config, robustness_test,
};
use greenwave::controllers::gwctl::{load_control, write_control};
use greenwave::controllers::{AuctionParams, ControlConfig, LightControl, PlanningParams};
use greenwave::nash::{
    flatten, optimize_with, unflatten, AcceptRule, FlattenOptions, OptimizeConfig, Trial,
};
use greenwave::netmodel::{
    load_demand, load_network, write_demand, write_network, Demand, RoadNetwork,
};
use greenwave::objective::{simulate, TravelTimeObjective};
use greenwave::scenarios::{
    capacity_search, gen_arterial, gen_arterial_demand, gen_demand, gen_grid, perturb_demand,
    ArterialSpec, CapacitySpec, GridSpec, PerturbationSpec,
};
use greenwave::simcore::{PhaseTable, SimConfig, SimSummary};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::output::{bad_input, invalid, runtime, CmdResult, OutDir};

pub fn run(cli: &Cli) -> CmdResult<()> {
    check_global(&cli.global)?;
    if let Some(jobs) = cli.global.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(runtime)?;
    }
    let out = OutDir::create(&cli.global.out)?;
    match &cli.command {
        Command::Gen(g) => match g {
            Gen::Grid(a) => gen_grid_cmd(cli, &out, a),
            Gen::Arterial(a) => gen_arterial_cmd(cli, &out, a),
            Gen::Demand(a) => gen_demand_cmd(cli, &out, a),
            Gen::Perturb(a) => gen_perturb_cmd(cli, &out, a),
            Gen::Control(a) => gen_control_cmd(cli, &out, a),
        },
        Command::Simulate(a) => simulate_cmd(cli, &out, a),
        Command::Calibrate(a) => calibrate_cmd(cli, &out, a),
        Command::Optimize(a) => optimize_cmd(cli, &out, a),
        Command::Capacity(a) => capacity_cmd(cli, &out, a),
        Command::Report(a) => report_cmd(cli, &out, a),
    }
}

fn check_global(g: &Global) -> CmdResult<()> {
    if !(g.dt > 0.0 && g.dt <= 1.0) {
        return Err(invalid("--dt must be in (0, 1]"));
    }
    if g.jobs == Some(0) {
        return Err(invalid("--jobs must be at least 1"));
    }
    Ok(())
}

/// The flags of the run, echoed into every JSON output.
fn provenance(cli: &Cli) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "flags": cli,
    })
}

fn with_flags(cli: &Cli, body: impl Serialize) -> CmdResult<serde_json::Value> {
    let mut v = serde_json::to_value(body).map_err(runtime)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("run".into(), provenance(cli));
    }
    Ok(v)
}

fn progress(label: &'static str, budget: usize) -> impl FnMut(&Trial) {
    let every = (budget / 20).max(1);
    move |t: &Trial| {
        if t.trial % every == 0 || t.trial == budget {
            eprintln!(
                "{label}: trial {}/{budget} best {:.3}",
                t.trial, t.best_so_far
            );
        }
    }
}

fn load_net(path: &Path) -> CmdResult<RoadNetwork> {
    load_network(path).map_err(|e| bad_input(path, e))
}

fn load_dem(path: &Path, net: &RoadNetwork) -> CmdResult<Demand> {
    load_demand(path, net).map_err(|e| bad_input(path, e))
}

fn load_ctl(path: &Path, net: &RoadNetwork) -> CmdResult<ControlConfig> {
    load_control(path, net).map_err(|e| bad_input(path, e))
}

fn sim_config(cli: &Cli, s: &SimArgs) -> CmdResult<SimConfig> {
    if !(s.horizon > 0.0) {
        return Err(invalid("--horizon must be positive"));
    }
    Ok(SimConfig {
        dt: cli.global.dt,
        horizon: s.horizon,
        seed: cli.global.seed,
        entry_jitter: 0.0,
    })
}

fn positive(name: &str, v: f64) -> CmdResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("--{name} must be positive")))
    }
}

#[derive(Serialize)]
struct GenSummary {
    network: Option<String>,
    demand: Vec<String>,
    nodes: usize,
    edges: usize,
    lanes: usize,
    lights: usize,
    cars: Vec<usize>,
}

fn gen_summary(
    net: &RoadNetwork,
    network: Option<String>,
    demand: &[(String, &Demand)],
) -> GenSummary {
    GenSummary {
        network,
        demand: demand.iter().map(|d| d.0.clone()).collect(),
        nodes: net.nodes.len(),
        edges: net.edges.len(),
        lanes: net.lanes.len(),
        lights: net.lights.len(),
        cars: demand.iter().map(|d| d.1.len()).collect(),
    }
}

fn write_scenario(
    cli: &Cli,
    out: &OutDir,
    name: &str,
    net: &RoadNetwork,
    demand: &Demand,
) -> CmdResult<()> {
    let net_file = format!("{name}.gwnet");
    let dem_file = format!("{name}.gwdem");
    let ctl_file = format!("{name}.gwctl");
    out.write(&net_file, &write_network(net))?;
    out.write(&dem_file, &write_demand(demand, net))?;
    out.write(
        &ctl_file,
        &write_control(&ControlConfig::uniform_static(net, 30.0), net),
    )?;
    let summary = gen_summary(net, Some(net_file), &[(dem_file, demand)]);
    out.write_json(&format!("{name}.json"), &with_flags(cli, summary)?)?;
    Ok(())
}

fn gen_grid_cmd(cli: &Cli, out: &OutDir, a: &GridArgs) -> CmdResult<()> {
    positive("horizon", a.horizon)?;
    let spec = GridSpec {
        lanes: (a.min_lanes, a.max_lanes),
        ..GridSpec::new(a.rows, a.cols)
    };
    let net = gen_grid(&spec, cli.global.seed).map_err(invalid)?;
    let demand =
        gen_demand(&net, a.cars, a.horizon, cli.global.seed.wrapping_add(1)).map_err(runtime)?;
    write_scenario(cli, out, &a.name, &net, &demand)
}

fn gen_arterial_cmd(cli: &Cli, out: &OutDir, a: &ArterialArgs) -> CmdResult<()> {
    positive("horizon", a.horizon)?;
    positive("spacing", a.spacing)?;
    let spec = ArterialSpec {
        lights: a.lights,
        spacing: a.spacing,
        main_lanes: a.main_lanes,
        cross_lanes: a.cross_lanes,
        ..ArterialSpec::default()
    };
    let net = gen_arterial(&spec).map_err(invalid)?;
    let demand = gen_arterial_demand(&net, a.cars, a.main_share, a.horizon, cli.global.seed)
        .map_err(invalid)?;
    write_scenario(cli, out, &a.name, &net, &demand)
}

fn gen_demand_cmd(cli: &Cli, out: &OutDir, a: &DemandArgs) -> CmdResult<()> {
    positive("horizon", a.horizon)?;
    let net = load_net(&a.net)?;
    let demand = gen_demand(&net, a.cars, a.horizon, cli.global.seed).map_err(runtime)?;
    let file = format!("{}.gwdem", a.name);
    out.write(&file, &write_demand(&demand, &net))?;
    let summary = gen_summary(&net, None, &[(file, &demand)]);
    out.write_json(&format!("{}.json", a.name), &with_flags(cli, summary)?)?;
    Ok(())
}

fn perturbation(datasets: usize, count_jitter: f64, release_jitter: f64) -> PerturbationSpec {
    PerturbationSpec {
        count_jitter,
        release_jitter,
        datasets,
    }
}

fn gen_perturb_cmd(cli: &Cli, out: &OutDir, a: &PerturbArgs) -> CmdResult<()> {
    let net = load_net(&a.net)?;
    let base = load_dem(&a.demand, &net)?;
    let spec = perturbation(a.datasets, a.count_jitter, a.release_jitter);
    let sets = perturb_demand(&base, &spec, cli.global.seed).map_err(invalid)?;
    let mut files = Vec::new();
    for (i, d) in sets.iter().enumerate() {
        let file = format!("{}_{i:02}.gwdem", a.name);
        out.write(&file, &write_demand(d, &net))?;
        files.push((file, d));
    }
    let summary = gen_summary(&net, None, &files);
    out.write_json(&format!("{}.json", a.name), &with_flags(cli, summary)?)?;
    Ok(())
}

fn gen_control_cmd(cli: &Cli, out: &OutDir, a: &ControlArgs) -> CmdResult<()> {
    let net = load_net(&a.net)?;
    let config = match a.kind {
        ControlKind::Static => {
            positive("green", a.green)?;
            ControlConfig::uniform_static(&net, a.green)
        }
        ControlKind::RandomStatic => {
            positive("green", a.green)?;
            if a.green_max < a.green {
                return Err(invalid("--green-max must be at least --green"));
            }
            random_static_config(&net, (a.green, a.green_max), cli.global.seed)
        }
        ControlKind::Auction => {
            ControlConfig::demand_auction(&net, a.minimum, a.priority, a.release)
        }
        ControlKind::Sensorless => sensorless(&net, a)?,
        ControlKind::Planning => ControlConfig::planning(&net, PlanningParams::default()),
    };
    config.validate(&net).map_err(invalid)?;
    let file = format!("{}.gwctl", a.name);
    out.write(&file, &write_control(&config, &net))?;
    out.write_json(
        &format!("{}.json", a.name),
        &with_flags(cli, json!({ "control": file, "lights": net.lights.len() }))?,
    )?;
    Ok(())
}

fn sensorless(net: &RoadNetwork, a: &ControlArgs) -> CmdResult<ControlConfig> {
    let lights = (0..net.lights.len())
        .map(|l| {
            let table = PhaseTable::for_light(net, l).map_err(invalid)?;
            Ok(LightControl::Auction(AuctionParams::sensorless(
                table.len(),
                net.local_detectors(l).len(),
                a.minimum,
                a.priority,
                a.release,
            )))
        })
        .collect::<CmdResult<_>>()?;
    Ok(ControlConfig { lights })
}

fn simulate_cmd(cli: &Cli, out: &OutDir, a: &SimulateArgs) -> CmdResult<()> {
    let sim = sim_config(cli, &a.sim)?;
    let net = load_net(&a.sim.net)?;
    let demand = load_dem(&a.sim.demand, &net)?;
    let config = load_ctl(&a.control, &net)?;
    let result = simulate(&net, &demand, &config, sim).map_err(runtime)?;
    out.write("cars.csv", &result.to_csv())?;
    if a.observe {
        let observed = observe(&net, &demand, &config, sim).map_err(runtime)?;
        out.write("observed.gwdem", &write_demand(&observed, &net))?;
    }
    out.write_json("summary.json", &with_flags(cli, result.summary())?)?;
    Ok(())
}

fn calibrate_cmd(cli: &Cli, out: &OutDir, a: &CalibrateArgs) -> CmdResult<()> {
    let sim = sim_config(cli, &a.sim)?;
    positive("bin", a.bin)?;
    let net = load_net(&a.sim.net)?;
    let target = load_dem(&a.sim.demand, &net)?;
    if let Some(r) = target.records.iter().find(|r| r.observed_exit.is_none()) {
        return Err(bad_input(
            &a.sim.demand,
            format!("car {} has no observed exit time", r.vehicle_id),
        ));
    }
    let start = match &a.start {
        Some(p) => load_ctl(p, &net)?,
        None => {
            positive("green-min", a.green_min)?;
            if a.green_max < a.green_min {
                return Err(invalid("--green-max must be at least --green-min"));
            }
            random_static_config(&net, (a.green_min, a.green_max), cli.global.seed)
        }
    };
    if start
        .lights
        .iter()
        .any(|l| !matches!(l, LightControl::Static(_)))
    {
        return Err(invalid(
            "calibration starts from fixed-schedule lights only",
        ));
    }
    let mut opt = OptimizeConfig::new(a.budget, cli.global.seed);
    opt.rule = AcceptRule::Simple;
    let cal = calibrate_lights(
        &net,
        &target,
        &start,
        sim,
        &opt,
        progress("calibrate", a.budget),
    )
    .map_err(runtime)?;

    let robustness = match (&a.target, &a.fresh) {
        (Some(t), Some(f)) => {
            let hidden = load_ctl(t, &net)?;
            let fresh = load_dem(f, &net)?;
            let calibrated =
                robustness_test(&net, &cal.config, &hidden, &fresh, sim).map_err(runtime)?;
            let uncalibrated =
                robustness_test(&net, &start, &hidden, &fresh, sim).map_err(runtime)?;
            Some(json!({ "calibrated": calibrated, "uncalibrated": uncalibrated }))
        }
        _ => None,
    };

    out.write("start.gwctl", &write_control(&start, &net))?;
    out.write("calibrated.gwctl", &write_control(&cal.config, &net))?;
    out.write("runlog.csv", &cal.log.to_csv())?;
    out.write("pairs.csv", &cal.report.pairs_csv())?;
    out.write("trace.csv", &cal.report.trace_csv())?;
    out.write("histogram.csv", &cal.report.histogram_csv(a.bin))?;
    let body = json!({
        "report": cal.report,
        "robustness": robustness,
        "trials": cal.log.trials.len(),
    });
    out.write_json("calibration.json", &with_flags(cli, body)?)?;
    Ok(())
}

fn optimize_cmd(cli: &Cli, out: &OutDir, a: &OptimizeArgs) -> CmdResult<()> {
    let sim = sim_config(cli, &a.sim)?;
    if a.datasets == 0 {
        return Err(invalid("--datasets must be at least 1"));
    }
    let net = load_net(&a.sim.net)?;
    let base = load_dem(&a.sim.demand, &net)?;
    let start = load_ctl(&a.control, &net)?;
    let datasets = if a.datasets == 1 {
        vec![base]
    } else {
        let spec = perturbation(a.datasets, a.count_jitter, a.release_jitter);
        perturb_demand(&base, &spec, cli.global.seed).map_err(invalid)?
    };
    let s0 = flatten(
        &start,
        &net,
        FlattenOptions {
            fixed_cycle: a.fixed_cycle,
        },
    )
    .map_err(invalid)?;
    let objective = TravelTimeObjective {
        net: &net,
        datasets: &datasets,
        sim,
    };
    let mut opt = OptimizeConfig::new(a.budget, cli.global.seed);
    opt.rule = match a.accept {
        AcceptArg::Simple => AcceptRule::Simple,
        AcceptArg::Majority => AcceptRule::Majority,
    };
    let result =
        optimize_with(&s0, &objective, &opt, progress("optimize", a.budget)).map_err(runtime)?;
    let best = unflatten(&result.best, &net).map_err(runtime)?;
    out.write("best.gwctl", &write_control(&best, &net))?;
    out.write("runlog.csv", &result.log.to_csv())?;
    let cars: Vec<usize> = datasets.iter().map(Demand::len).collect();
    let total_cars = cars.iter().sum::<usize>().max(1) as f64;
    let body = json!({
        "initial_objective_s": result.log.initial,
        "best_objective_s": result.log.best(),
        "best_mtt_s": result.values.iter().sum::<f64>() / total_cars,
        "dataset_objectives_s": result.values,
        "dataset_cars": cars,
        "trials": result.log.trials.len(),
        "accepted": result.log.trials.iter().filter(|t| t.accepted).count(),
        "parameters": result.best.len(),
    });
    out.write_json("optimize.json", &with_flags(cli, body)?)?;
    Ok(())
}

fn capacity_cmd(cli: &Cli, out: &OutDir, a: &CapacityArgs) -> CmdResult<()> {
    let sim = sim_config(cli, &a.sim)?;
    let net = load_net(&a.sim.net)?;
    let base = load_dem(&a.sim.demand, &net)?;
    let config = load_ctl(&a.control, &net)?;
    let target = match (a.target_mtt, &a.reference) {
        (Some(t), _) => t,
        (None, Some(r)) => {
            let reference = load_ctl(r, &net)?;
            simulate(&net, &base, &reference, sim)
                .map_err(runtime)?
                .mtt()
        }
        (None, None) => return Err(invalid("need --target-mtt or --reference")),
    };
    positive("target-mtt", target)?;
    if !(a.min_scale > 0.0 && a.min_scale < 1.0 && a.max_scale > 1.0) {
        return Err(invalid(
            "scale bracket must satisfy 0 < --min-scale < 1 < --max-scale",
        ));
    }
    let spec = CapacitySpec {
        tol: a.tol,
        lo: a.min_scale,
        hi: a.max_scale,
        samples: a.samples,
        seed: cli.global.seed,
        ..CapacitySpec::new(target)
    };
    let report = capacity_search(&net, &base, &config, sim, &spec).map_err(runtime)?;
    eprintln!(
        "capacity: scale {:.3} ({} probes, converged {})",
        report.scale,
        report.probes.len(),
        report.converged
    );
    out.write_json("capacity.json", &with_flags(cli, report)?)?;
    Ok(())
}

#[derive(Serialize)]
struct ControlSummary {
    control: String,
    #[serde(flatten)]
    summary: SimSummary,
}

fn report_cmd(cli: &Cli, out: &OutDir, a: &ReportArgs) -> CmdResult<()> {
    use rayon::prelude::*;
    let sim = sim_config(cli, &a.sim)?;
    let net = load_net(&a.sim.net)?;
    let demand = load_dem(&a.sim.demand, &net)?;
    let configs = a
        .control
        .iter()
        .map(|p| load_ctl(p, &net))
        .collect::<CmdResult<Vec<_>>>()?;
    let results = configs
        .par_iter()
        .map(|c| simulate(&net, &demand, c, sim))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let times = results
        .iter()
        .map(|r| aligned_times(r, &demand))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let names: Vec<String> = a.control.iter().map(|p| p.display().to_string()).collect();

    let mut journeys = String::from("car_id");
    for i in 0..names.len() {
        let _ = write!(journeys, ",c{i}_s");
    }
    if demand.records.iter().all(|r| r.observed_exit.is_some()) {
        journeys.push_str(",observed_s");
    }
    journeys.push('\n');
    for (k, r) in demand.records.iter().enumerate() {
        journeys.push_str(&r.vehicle_id);
        for t in &times {
            let _ = write!(journeys, ",{:.3}", t[k]);
        }
        if let Some(o) = r.observed_journey() {
            let _ = write!(journeys, ",{o:.3}");
        }
        journeys.push('\n');
    }
    out.write("journeys.csv", &journeys)?;

    // correlations are undefined for a single car or constant times
    let matrix = correlation_matrix(&times).ok();
    if let Some(m) = &matrix {
        let mut csv = String::from("control");
        for i in 0..m.len() {
            let _ = write!(csv, ",c{i}");
        }
        csv.push('\n');
        for (i, row) in m.iter().enumerate() {
            let _ = write!(csv, "c{i}");
            for v in row {
                let _ = write!(csv, ",{v:.6}");
            }
            csv.push('\n');
        }
        out.write("correlation.csv", &csv)?;
    }
    let observed: Option<Vec<f64>> = demand
        .records
        .iter()
        .map(|r| r.observed_journey())
        .collect();
    let vs_observed: Option<Vec<Option<f64>>> = observed
        .as_ref()
        .map(|o| times.iter().map(|t| correlation(t, o).ok()).collect());
    let summaries: Vec<ControlSummary> = names
        .iter()
        .zip(&results)
        .map(|(n, r)| ControlSummary {
            control: n.clone(),
            summary: r.summary(),
        })
        .collect();
    let body = json!({
        "controls": summaries,
        "correlation": matrix,
        "correlation_with_observed": vs_observed,
    });
    out.write_json("report.json", &with_flags(cli, body)?)?;
    Ok(())
}
