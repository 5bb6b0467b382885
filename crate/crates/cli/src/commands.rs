use serde_json::{json, Map, Value};
use tipsy_core::analytics::{self, AnalyticsError, RegimeVerdict, Winner};
use tipsy_core::engine::{run_batch, sweep_phase, BatchConfig, BatchSummary, GameSpec, Pairing, PhasePoint, SweepConfig};
use tipsy_core::oracle::{build_grid_chain, build_line_chain, solve, BoundaryPolicy, ChainLabel};
use tipsy_core::{GameParams, TreeGameState, TreeStrategy};

use crate::args::{
    distance_start, grid_start, grid_strategy, tree_strategy, AnalyzeArgs, BoundaryChoice, ChainKind, Format, GameKind,
    OracleArgs, PhaseArgs, RunArgs, SimulateArgs,
};
use crate::output::{envelope, write_csv, write_json};
use crate::CliError;

fn batch_config(run: &RunArgs, episodes: u64) -> BatchConfig {
    BatchConfig { horizon: run.horizon, episodes, master_seed: run.seed, threads: run.threads }
}

fn engine_error(e: tipsy_core::engine::EngineError) -> CliError {
    use tipsy_core::engine::EngineError;
    match e {
        EngineError::Game(g) => CliError::Config(g.to_string()),
        EngineError::Analytics(a) => CliError::Config(a.to_string()),
        EngineError::NoEpisodes => CliError::Config("--episodes must be at least 1".into()),
        EngineError::Pool(msg) => CliError::Runtime(msg),
    }
}

fn params_json(p: &GameParams) -> Value {
    json!({ "c": p.c, "r": p.r, "t_c": p.t_c, "t_r": p.t_r })
}

fn summary_json(s: &BatchSummary) -> Value {
    let mut v = serde_json::to_value(s).expect("summary serialises");
    let obj = v.as_object_mut().expect("summary is an object");
    obj.insert("source".into(), json!("mc"));
    if let Some(interval) = obj.get_mut("capture_interval").and_then(Value::as_object_mut) {
        interval.insert("level".into(), json!(0.95));
        interval.insert("method".into(), json!("wilson"));
    }
    v
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (spec, config) = match args.game.game {
        GameKind::Grid => {
            let params = args.game.grid_params()?;
            let cop = grid_strategy(args.cop.as_deref().unwrap_or("CS1"), &params)?;
            let robber = grid_strategy(args.robber.as_deref().unwrap_or("RS"), &params)?;
            let start = grid_start(args.start.as_deref())?;
            let config = json!({
                "game": "grid",
                "params": params_json(&params),
                "cop": cop.name(),
                "robber": robber.name(),
                "start": [start.x, start.y],
            });
            (GameSpec::Grid { params, cop, robber, start }, config)
        }
        GameKind::Tree => {
            let tree = args.game.tree()?;
            let params = args.game.tree_params()?;
            let cop = tree_strategy(args.cop.as_deref().unwrap_or("CSB"))?;
            let robber = tree_strategy(args.robber.as_deref().unwrap_or("RSB"))?;
            let d0 = distance_start(args.start.as_deref(), 10)?;
            if d0 == 0 {
                return Err(CliError::Config("--start must be a positive base distance".into()));
            }
            let config = json!({
                "game": "tree",
                "Delta": tree.base_degree,
                "delta": tree.small_degree,
                "params": params_json(&params),
                "cop": cop.name(),
                "robber": robber.name(),
                "start": d0,
            });
            let start = TreeGameState::base_pair(d0 as usize);
            (GameSpec::Tree { tree, params, cop, robber, start }, config)
        }
    };
    let mut config = config;
    let obj = config.as_object_mut().expect("object");
    obj.insert("horizon".into(), json!(args.run.horizon));
    obj.insert("episodes".into(), json!(args.episodes));
    obj.insert("seed".into(), json!(args.run.seed));

    let result = run_batch(&spec, &batch_config(&args.run, args.episodes)).map_err(engine_error)?;
    match args.format {
        Format::Json => {
            let mut out = envelope("simulate", config, args.run.deterministic);
            out.insert("summary".into(), summary_json(&result.summary()));
            write_json(args.run.output.as_deref(), &Value::Object(out))
        }
        Format::Csv => {
            let rows = result.reports.iter().enumerate().map(|(i, r)| {
                vec![
                    i.to_string(),
                    r.captured.to_string(),
                    r.capture_time.map(|t| t.to_string()).unwrap_or_default(),
                    r.steps_run.to_string(),
                    r.final_distance.to_string(),
                ]
            });
            write_csv(
                args.run.output.as_deref(),
                &["episode", "captured", "capture_time", "steps_run", "final_distance"],
                rows,
            )
        }
    }
}

/// Evenly spaced values from `from` to `to` inclusive, rounded to hide
/// binary drift.
pub fn range(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) {
        return Err(CliError::Config(format!("step {step} must be positive")));
    }
    if to < from {
        return Err(CliError::Config(format!("range {from}..{to} is empty")));
    }
    let n = ((to - from) / step + 1e-9).floor() as u64;
    if n > 100_000 {
        return Err(CliError::Config(format!("range {from}..{to} by {step} has too many points")));
    }
    Ok((0..=n).map(|i| ((from + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn verdict_json(v: &RegimeVerdict, source: &str) -> Value {
    let mut obj = Map::new();
    obj.insert("winner".into(), json!(v.winner.name()));
    obj.insert("rationale".into(), json!(v.rationale));
    if let Some(f) = v.finite_expected_time {
        obj.insert("finite_expected_time".into(), json!(f));
    }
    obj.insert("source".into(), json!(source));
    Value::Object(obj)
}

const PAIRINGS: [Pairing; 2] = [
    Pairing { cop: TreeStrategy::Cs, robber: TreeStrategy::Rsa },
    Pairing { cop: TreeStrategy::Csb, robber: TreeStrategy::Rsb },
];

fn phase_point_json(p: &PhasePoint) -> Value {
    let mut obj = Map::new();
    obj.insert("t_r".into(), json!(p.t_r));
    obj.insert("t_c".into(), json!(p.t_c));
    if let Some(regime) = &p.analytic {
        obj.insert("analytic_rsa".into(), verdict_json(&regime.rsa, "analytic:tree-regime"));
        obj.insert("analytic_rsb".into(), verdict_json(&regime.rsb, "analytic:tree-regime"));
    }
    for (robber, key) in [(TreeStrategy::Rsa, "observed_rsa"), (TreeStrategy::Rsb, "observed_rsb")] {
        if let Some(o) = p.observed_for(robber) {
            let mut v = serde_json::to_value(o).expect("observation serialises");
            v.as_object_mut().expect("object").insert("source".into(), json!("mc"));
            obj.insert(key.into(), v);
        }
    }
    if !p.errors.is_empty() {
        obj.insert("errors".into(), json!(p.errors));
    }
    Value::Object(obj)
}

pub fn phase(args: &PhaseArgs) -> Result<(), CliError> {
    let tree = tipsy_core::TreeParams::new(args.big_delta, args.small_delta).map_err(|e| CliError::Config(e.to_string()))?;
    let tr_to = args.tr_to.unwrap_or_else(|| analytics::depth_limit(args.small_delta));
    let tc_to = args.tc_to.unwrap_or_else(|| analytics::cop_box_limit(args.small_delta, args.big_delta));
    let t_r = range(args.tr_from, tr_to, args.tr_step)?;
    let t_c = range(args.tc_from, tc_to, args.tc_step)?;
    if args.start == 0 {
        return Err(CliError::Config("--start must be a positive base distance".into()));
    }
    let config = SweepConfig { batch: batch_config(&args.run, args.episodes), start_distance: args.start, threshold: args.threshold };
    let points = sweep_phase(&tree, &PAIRINGS, &t_r, &t_c, &config);
    match args.format {
        Format::Csv => {
            let rows = points.iter().map(|p| {
                let analytic = |robber| p.analytic_for(robber).map(Winner::name).unwrap_or("error").to_string();
                let observed = |robber| p.observed_for(robber).map(|o| o.capture_fraction.to_string()).unwrap_or_default();
                vec![
                    p.t_r.to_string(),
                    p.t_c.to_string(),
                    analytic(TreeStrategy::Rsa),
                    analytic(TreeStrategy::Rsb),
                    observed(TreeStrategy::Rsa),
                    observed(TreeStrategy::Rsb),
                ]
            });
            write_csv(
                args.run.output.as_deref(),
                &["t_r", "t_c", "analytic_rsa", "analytic_rsb", "observed_capture_rsa", "observed_capture_rsb"],
                rows,
            )
        }
        Format::Json => {
            let echo = json!({
                "Delta": tree.base_degree,
                "delta": tree.small_degree,
                "t_r": t_r,
                "t_c": t_c,
                "start": args.start,
                "horizon": args.run.horizon,
                "episodes": args.episodes,
                "seed": args.run.seed,
                "threshold": args.threshold,
                "pairings": PAIRINGS.iter().map(|p| format!("{} vs {}", p.cop.name(), p.robber.name())).collect::<Vec<_>>(),
            });
            let mut out = envelope("phase", echo, args.run.deterministic);
            out.insert("points".into(), Value::Array(points.iter().map(phase_point_json).collect()));
            write_json(args.run.output.as_deref(), &Value::Object(out))
        }
    }
}

#[derive(Default)]
struct Tally {
    failures: usize,
    total: usize,
}

impl Tally {
    /// One analytic quantity: its value or the reason it does not apply.
    fn quantity(&mut self, value: Result<Value, AnalyticsError>, source: &str) -> Value {
        self.total += 1;
        match value {
            Ok(v) => json!({ "value": v, "source": format!("analytic:{source}") }),
            Err(e) => {
                self.failures += 1;
                json!({ "error": e.to_string(), "source": format!("analytic:{source}") })
            }
        }
    }
}

fn grid_verdict_text(v: &RegimeVerdict) -> String {
    match (v.winner, v.finite_expected_time) {
        (Winner::CopAlmostSurely, Some(true)) => "CopAS, positive recurrent".into(),
        (Winner::CopAlmostSurely, _) => "CopAS, null recurrent".into(),
        (Winner::RobberPositiveProb, _) => "RobberPositiveProb, transient".into(),
        (w, _) => w.name().into(),
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let mut tally = Tally::default();
    let mut results = Map::new();
    let echo;
    match args.game.game {
        GameKind::Grid => {
            let params = args.game.grid_params()?;
            echo = json!({ "game": "grid", "params": params_json(&params) });
            let regime = analytics::grid_regime(&params);
            let verdict = regime.as_ref().map(grid_verdict_text).map_err(Clone::clone);
            results.insert("regime".into(), tally.quantity(regime.map(|r| verdict_json(&r, "analytic:grid-regime")), "grid-regime"));
            results.insert("verdict".into(), tally.quantity(verdict.map(Value::from), "grid-regime"));
            let model = analytics::grid_weight_model(&params);
            let field = |f: fn(&analytics::WeightModel) -> f64| model.as_ref().map(|m| json!(f(m))).map_err(Clone::clone);
            results.insert("beta".into(), tally.quantity(field(|m| m.beta), "edge-weights"));
            results.insert("alpha".into(), tally.quantity(field(|m| m.alpha), "edge-weights"));
            results.insert("vertical_weight_sum".into(), tally.quantity(field(|m| m.vertical_sum), "edge-weights"));
            results.insert("horizontal_weight_sum".into(), tally.quantity(field(|m| m.horizontal_sum), "edge-weights"));
            results.insert("p_star".into(), tally.quantity(analytics::cs2_mixing(&params).map(Value::from), "cs2-mixing"));
            results.insert("foolish_margin".into(), tally.quantity(analytics::foolish_margin(&params).map(Value::from), "two-round-drift"));
        }
        GameKind::Tree => {
            let tree = args.game.tree()?;
            let (small, big) = (tree.small_degree, tree.base_degree);
            let (tr, tc) = (args.game.tr, args.game.tc);
            echo = json!({ "game": "tree", "Delta": big, "delta": small, "t_r": tr, "t_c": tc });
            results.insert("depth_limit".into(), tally.quantity(Ok(json!(analytics::depth_limit(small))), "depth-limit"));
            results.insert("base_limit".into(), tally.quantity(Ok(json!(analytics::base_limit(big))), "base-limit"));
            results.insert("t0".into(), tally.quantity(analytics::crossover_t0(small, big).map(Value::from), "crossover"));
            if let Some(tr) = tr {
                results.insert("mu".into(), tally.quantity(analytics::mu(tr, small, big).map(Value::from), "mean-base-gap"));
                results.insert("f".into(), tally.quantity(analytics::threshold_f(tr, small, big).map(Value::from), "rsb-threshold"));
                results.insert("rsa_line".into(), tally.quantity(Ok(json!(tr / (small as f64 - 1.0))), "rsa-threshold"));
            }
            if let (Some(tr), Some(tc)) = (tr, tc) {
                results.insert("rsb_margin".into(), tally.quantity(analytics::rsb_margin(tr, tc, small, big).map(Value::from), "rsb-margin"));
                match analytics::tree_regime(tr, tc, small, big) {
                    Ok(regime) => {
                        tally.total += 2;
                        results.insert("rsa".into(), verdict_json(&regime.rsa, "analytic:tree-regime"));
                        results.insert("rsb".into(), verdict_json(&regime.rsb, "analytic:tree-regime"));
                    }
                    Err(e) => {
                        results.insert("regime".into(), tally.quantity(Err(e), "tree-regime"));
                    }
                }
                if small == big {
                    let v = analytics::regular_tree_regime(small, tc, tr).map(|v| verdict_json(&v, "analytic:regular-tree"));
                    results.insert("regular_tree".into(), tally.quantity(v, "regular-tree"));
                }
            }
        }
    }
    let mut out = envelope("analyze", echo, args.deterministic);
    out.insert("results".into(), Value::Object(results));
    write_json(args.output.as_deref(), &Value::Object(out))?;
    if tally.failures == tally.total {
        return Err(CliError::Runtime("no quantity applies to these parameters".into()));
    }
    Ok(())
}

fn policies(choice: BoundaryChoice) -> Vec<BoundaryPolicy> {
    match choice {
        BoundaryChoice::Killing => vec![BoundaryPolicy::Killing],
        BoundaryChoice::Reflecting => vec![BoundaryPolicy::Reflecting],
        BoundaryChoice::Both => vec![BoundaryPolicy::Killing, BoundaryPolicy::Reflecting],
    }
}

fn policy_name(p: BoundaryPolicy) -> &'static str {
    match p {
        BoundaryPolicy::Killing => "killing",
        BoundaryPolicy::Reflecting => "reflecting",
    }
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    if args.game.game != GameKind::Grid {
        return Err(CliError::Config("the oracle only covers grid games".into()));
    }
    if args.radii.is_empty() || args.radii.contains(&0) {
        return Err(CliError::Config("--radii must list positive radii".into()));
    }
    let mut ladder = Vec::new();
    let echo;
    let mut mc = None;
    match args.chain {
        ChainKind::Line => {
            let Some(up) = args.up else {
                return Err(CliError::Config("line chains need --up".into()));
            };
            if !(0.0..=1.0).contains(&up) {
                return Err(CliError::Config(format!("--up {up} is outside [0, 1]")));
            }
            let start = distance_start(args.start.as_deref(), 1)?;
            echo = json!({ "chain": "line", "up": up, "start": start, "radii": args.radii });
            for &radius in &args.radii {
                if start > radius {
                    continue;
                }
                for policy in policies(args.boundary) {
                    let chain = build_line_chain(|_| up, radius, policy).map_err(|e| CliError::Config(e.to_string()))?;
                    let sol = solve(&chain).map_err(|e| CliError::Runtime(e.to_string()))?;
                    let (h, t) = sol.at(ChainLabel::Line(start)).expect("start lies in the chain");
                    ladder.push(json!({
                        "radius": radius, "boundary": policy_name(policy), "states": chain.len(),
                        "capture_probability": h, "expected_time": t, "sweeps": sol.sweeps, "source": "oracle",
                    }));
                }
            }
        }
        ChainKind::Grid => {
            let params = args.game.grid_params()?;
            let cop = grid_strategy(args.cop.as_deref().unwrap_or("CS1"), &params)?;
            let robber = grid_strategy(args.robber.as_deref().unwrap_or("RS"), &params)?;
            let start = grid_start(args.start.as_deref())?;
            let folded = start.fold();
            echo = json!({
                "chain": "grid", "params": params_json(&params), "cop": cop.name(), "robber": robber.name(),
                "start": [start.x, start.y], "radii": args.radii, "horizon": args.run.horizon,
                "episodes": args.episodes, "seed": args.run.seed,
            });
            for &radius in &args.radii {
                if folded.y as u64 > radius {
                    continue;
                }
                for policy in policies(args.boundary) {
                    let chain = build_grid_chain(&params, &cop, &robber, radius, policy).map_err(|e| CliError::Config(e.to_string()))?;
                    let sol = solve(&chain).map_err(|e| CliError::Runtime(e.to_string()))?;
                    let (h, t) = sol.at(ChainLabel::Grid(folded)).expect("start lies in the chain");
                    ladder.push(json!({
                        "radius": radius, "boundary": policy_name(policy), "states": chain.len(),
                        "capture_probability": h, "expected_time": t, "sweeps": sol.sweeps, "source": "oracle",
                    }));
                }
            }
            if args.episodes > 0 {
                let spec = GameSpec::Grid { params, cop, robber, start };
                let result = run_batch(&spec, &batch_config(&args.run, args.episodes)).map_err(engine_error)?;
                mc = Some(result.summary());
            }
        }
    }
    let mut out = envelope("oracle", echo, args.run.deterministic);
    let cross_check = mc.as_ref().and_then(|s| cross_check(&ladder, s));
    out.insert("ladder".into(), Value::Array(ladder));
    if let Some(s) = &mc {
        out.insert("monte_carlo".into(), summary_json(s));
    }
    if let Some(c) = cross_check {
        out.insert("cross_check".into(), c);
    }
    write_json(args.run.output.as_deref(), &Value::Object(out))
}

/// Compares Monte Carlo with the largest killing radius for capture and the
/// largest reflecting radius for the expected time.
fn cross_check(ladder: &[Value], mc: &BatchSummary) -> Option<Value> {
    let last = |policy: &str| ladder.iter().rev().find(|v| v["boundary"] == policy);
    let mut obj = Map::new();
    if let Some(k) = last("killing") {
        let h = k["capture_probability"].as_f64()?;
        let p = mc.capture_fraction;
        let se = (p * (1.0 - p) / mc.n_episodes as f64).sqrt();
        obj.insert("killing_radius".into(), k["radius"].clone());
        obj.insert("capture_delta".into(), json!(p - h));
        obj.insert("capture_std_error".into(), json!(se));
    }
    if let (Some(r), Some(mean)) = (last("reflecting"), mc.mean_capture_time) {
        if let Some(t) = r["expected_time"].as_f64() {
            obj.insert("reflecting_radius".into(), r["radius"].clone());
            obj.insert("time_delta".into(), json!(mean - t));
            obj.insert("time_relative_delta".into(), json!((mean - t) / t));
        }
    }
    (!obj.is_empty()).then(|| {
        obj.insert("source".into(), json!("oracle-vs-mc"));
        Value::Object(obj)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_include_both_ends() {
        assert_eq!(range(0.0, 0.1, 0.025).unwrap(), vec![0.0, 0.025, 0.05, 0.075, 0.1]);
        assert_eq!(range(0.2, 0.2, 0.1).unwrap(), vec![0.2]);
        assert!(range(0.3, 0.2, 0.1).is_err());
        assert!(range(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn grid_verdict_texts() {
        let v = analytics::grid_regime(&GameParams::grid_merged(0.25, 0.25, 0.5).unwrap()).unwrap();
        assert_eq!(grid_verdict_text(&v), "CopAS, null recurrent");
        let v = analytics::grid_regime(&GameParams::grid_merged(0.3, 0.2, 0.5).unwrap()).unwrap();
        assert_eq!(grid_verdict_text(&v), "CopAS, positive recurrent");
    }
}
