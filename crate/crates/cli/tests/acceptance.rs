//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails other than the documented unattainable one.

use std::process::Command;
use std::time::Instant;

use num_rational::BigRational;
use tipsy_core::analytics::{self, Winner};
use tipsy_core::engine::{estimate_mu, run_batch, BatchConfig, BatchResult, GameSpec};
use tipsy_core::grid::{folded_step_distribution, two_round_expectation, two_round_expectation_in};
use tipsy_core::oracle::{build_grid_chain, solve, BoundaryPolicy, ChainLabel};
use tipsy_core::tree::run_tree_episode;
use tipsy_core::{GameParams, GridState, GridStrategy, RngStream, TreeGameState, TreeParams, TreeStrategy};

const SEED: u64 = 1;
/// Largest change of a capture fraction on doubling the horizon that still
/// counts as a plateau.
const PLATEAU: f64 = 0.005;
/// Criteria whose statement cannot hold; they are run and reported but do
/// not fail the harness.
const KNOWN_UNATTAINABLE: &[&str] = &["4c"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid_batch(c: f64, r: f64, t: f64, cop: GridStrategy, start: (i64, i64), horizon: u64, episodes: u64) -> BatchResult {
    let spec = GameSpec::Grid {
        params: GameParams::grid_merged(c, r, t).unwrap(),
        cop,
        robber: GridStrategy::Rs,
        start: GridState::new(start.0, start.1),
    };
    run_batch(&spec, &BatchConfig { horizon, episodes, master_seed: SEED, threads: None }).unwrap()
}

/// Random grid parameters `(a, b, d) / n` with all three parts positive.
fn random_triple(draws: &mut tipsy_core::spinner::Draws, n: i64) -> (i64, i64, i64) {
    loop {
        let a = 1 + (draws.uniform() * (n - 2) as f64) as i64;
        let b = 1 + (draws.uniform() * (n - 2) as f64) as i64;
        if a + b < n {
            return (a, b, n - a - b);
        }
    }
}

fn two_round_identity() -> Outcome {
    let rat = |v: i64| BigRational::from_float(v as f64).unwrap();
    let mut draws = RngStream::new(SEED, 1).draws();
    let (mut worst_float, mut exact_misses) = (0.0f64, 0);
    let foolish = GridStrategy::FoolishCop;
    for _ in 0..50 {
        let n = 1000;
        let (a, b, d) = random_triple(&mut draws, n);
        let (c, r, t) = (rat(a) / rat(n), rat(b) / rat(n), rat(d) / rat(n));
        let two = rat(2);
        let axis = two.clone() * r.clone() * r.clone() + two.clone() * r.clone() * t.clone()
            - rat(3) / rat(2) * c.clone() * t.clone()
            - two.clone() * c.clone() * c.clone();
        let off = two.clone() * r.clone() * r.clone() + two.clone() * r.clone() * t.clone() + two * r.clone() * c.clone()
            - c.clone() * c.clone()
            - c.clone() * t.clone() / rat(4);
        let y = 2 + (draws.uniform() * 40.0) as i64;
        let states = [(GridState::new(0, y), &axis), (GridState::new(1, y + 1), &off), (GridState::new(-1, y + 1), &off)];
        let params = GameParams::grid_merged(a as f64 / n as f64, b as f64 / n as f64, d as f64 / n as f64).unwrap();
        let (cf, rf, tf) = (params.c, params.r, params.t());
        for (state, expected) in states {
            let exact = two_round_expectation_in(&c, &r, &t, &foolish, &GridStrategy::Rs, state).unwrap();
            if &exact != expected {
                exact_misses += 1;
            }
            let float = two_round_expectation(&params, &foolish, &GridStrategy::Rs, state).unwrap();
            let formula = if state.x == 0 {
                2.0 * rf * rf + 2.0 * rf * tf - 1.5 * cf * tf - 2.0 * cf * cf
            } else {
                2.0 * rf * rf + 2.0 * rf * tf + 2.0 * rf * cf - cf * cf - cf * tf / 4.0
            };
            worst_float = worst_float.max((float - formula).abs());
        }
    }
    outcome(
        exact_misses == 0 && worst_float <= 1e-12,
        format!("50 triples x 3 states: {exact_misses} exact mismatches, worst float error {worst_float:.1e} (tol 1e-12)"),
    )
}

fn weight_model() -> Outcome {
    let mut draws = RngStream::new(SEED, 2).draws();
    let (mut checked, mut worst, mut worst_diag) = (0, 0.0f64, 0.0f64);
    while checked < 1000 {
        let (a, b, d) = random_triple(&mut draws, 10_000);
        if a <= b {
            continue;
        }
        let (c, r, t) = (a as f64 / 1e4, b as f64 / 1e4, d as f64 / 1e4);
        let params = GameParams::grid_merged(c, r, t).unwrap();
        let w = analytics::grid_weight_model(&params).unwrap();
        let y = 1 + (draws.uniform() * 30.0) as i64;
        let x = -y + (draws.uniform() * (2 * y + 1) as f64) as i64;
        let state = GridState::new(x, y);
        let cop = GridStrategy::Cs2 { p: w.p_star };
        for (target, p) in folded_step_distribution(&params, &cop, &GridStrategy::Rs, state).unwrap() {
            worst = worst.max((w.transition(state, target) - p).abs());
        }
        let p_star = t * (c - r) / (2.0 * c * (2.0 * r + t));
        let diag = GridState::new(y, y);
        let toward = w.transition(diag, GridState::new(y - 1, y));
        worst_diag = worst_diag.max((toward - (p_star * c + t / 2.0)).abs()).max((w.p_star - p_star).abs());
        checked += 1;
    }
    outcome(
        worst <= 1e-12 && worst_diag <= 1e-12,
        format!("1000 states: worst transition error {worst:.1e}, worst diagonal identity error {worst_diag:.1e} (tol 1e-12)"),
    )
}

fn oracle_vs_monte_carlo() -> Outcome {
    let params = GameParams::grid_merged(0.3, 0.2, 0.5).unwrap();
    let start = ChainLabel::Grid(GridState::new(0, 1));
    let time_at = |radius| {
        let chain = build_grid_chain(&params, &GridStrategy::Cs1, &GridStrategy::Rs, radius, BoundaryPolicy::Reflecting).unwrap();
        solve(&chain).unwrap().at(start).unwrap().1.unwrap()
    };
    let (t30, t40) = (time_at(30), time_at(40));
    let mc = grid_batch(0.3, 0.2, 0.5, GridStrategy::Cs1, (0, 1), 1_000_000, 100_000).summary();
    let mean = mc.mean_capture_time.unwrap();
    let mc_rel = (mean - t40).abs() / t40;
    let ladder_rel = (t30 - t40).abs() / t40;
    outcome(
        mc_rel < 0.02 && ladder_rel < 0.005 && mc.captured == mc.n_episodes,
        format!(
            "oracle r40 {t40:.4}, r30 {t30:.4} (diff {:.3}%, tol .5%); MC mean {mean:.4} over 1e5 (diff {:.2}%, tol 2%)",
            100.0 * ladder_rel,
            100.0 * mc_rel
        ),
    )
}

fn restricted_mean(result: &BatchResult, h: u64) -> f64 {
    result.reports.iter().map(|r| r.capture_time.unwrap_or(u64::MAX).min(h) as f64).sum::<f64>() / result.reports.len() as f64
}

fn grid_regimes() -> Vec<(&'static str, Outcome)> {
    let h = 100_000;
    let transient = grid_batch(0.2, 0.3, 0.5, GridStrategy::Cs1, (0, 1), h, 10_000);
    let (a_half, a_full) = (transient.capture_fraction_at(h / 2), transient.capture_fraction_at(h));
    let recurrent = grid_batch(0.3, 0.2, 0.5, GridStrategy::Cs1, (0, 1), h, 10_000);
    let b = recurrent.capture_fraction_at(h);
    let null = grid_batch(0.25, 0.25, 0.5, GridStrategy::Cs1, (0, 1), h, 10_000);
    let (c_half, c_full) = (null.capture_fraction_at(h / 2), null.capture_fraction_at(h));
    let (m_half, m_full) = (null.summary_at(h / 2).mean_capture_time.unwrap(), null.summary().mean_capture_time.unwrap());
    let (rm_half, rm_full) = (restricted_mean(&null, h / 2), restricted_mean(&null, h));
    vec![
        (
            "4a",
            outcome(
                a_full <= 0.95 && a_full - a_half <= PLATEAU,
                format!("r > c: capture {a_full:.4} at H=1e5 (tol <= .95), {a_half:.4} at H/2 (plateau tol {PLATEAU})"),
            ),
        ),
        ("4b", outcome(b >= 0.99, format!("c > r: capture {b:.4} at H=1e5 (tol >= .99)"))),
        (
            "4c",
            outcome(
                c_full > c_half && m_full / m_half > 2.0,
                format!(
                    "c = r: capture {c_half:.4} -> {c_full:.4}; mean capture time {m_half:.0} -> {m_full:.0} (ratio {:.3}, super-linear needs > 2); \
                     restricted mean {rm_half:.0} -> {rm_full:.0} (ratio {:.3}); a truncated mean cannot grow faster than the horizon",
                    m_full / m_half,
                    rm_full / rm_half
                ),
            ),
        ),
    ]
}

fn foolish_cop_escapes() -> Outcome {
    let (c, r, t) = (0.26, 0.25, 0.49);
    let margin = 2.0 * r * r + 2.0 * r * t - 1.5 * c * t - 2.0 * c * c;
    let h = 100_000;
    let foolish = grid_batch(c, r, t, GridStrategy::FoolishCop, (0, 1), h, 10_000);
    let (half, full) = (foolish.capture_fraction_at(h / 2), foolish.capture_fraction_at(h));
    let cs1 = grid_batch(c, r, t, GridStrategy::Cs1, (0, 1), h, 10_000).capture_fraction_at(h);
    outcome(
        c > r && margin > 0.0 && full <= 0.9 && full - half < PLATEAU && cs1 > 0.99,
        format!(
            "c={c} r={r} t={t}, margin {margin:.4}; FoolishCop capture {full:.4} (tol <= .9), {half:.4} at H/2 (plateau tol {PLATEAU}); CS1 capture {cs1:.4} (tol > .99)"
        ),
    )
}

fn tree_batch(tree: TreeParams, t_c: f64, t_r: f64, cop: TreeStrategy, robber: TreeStrategy, start: usize, horizon: u64, episodes: u64) -> BatchResult {
    let spec = GameSpec::Tree {
        tree,
        params: GameParams::tree(t_c, t_r).unwrap(),
        cop,
        robber,
        start: TreeGameState::base_pair(start),
    };
    run_batch(&spec, &BatchConfig { horizon, episodes, master_seed: SEED, threads: None }).unwrap()
}

fn regular_tree_threshold() -> Outcome {
    // with Δ = δ = 3 every vertex has degree 3
    let tree = TreeParams::new(3, 3).unwrap();
    let h = 100_000;
    let above = tree_batch(tree, 0.1, 0.25, TreeStrategy::Cs, TreeStrategy::Rsa, 10, h, 1000).capture_fraction_at(h);
    let below = tree_batch(tree, 0.1, 0.15, TreeStrategy::Cs, TreeStrategy::Rsa, 10, h, 1000);
    let (half, full) = (below.capture_fraction_at(h / 2), below.capture_fraction_at(h));
    let verdicts = (
        analytics::regular_tree_regime(3, 0.1, 0.25).unwrap().winner,
        analytics::regular_tree_regime(3, 0.1, 0.15).unwrap().winner,
    );
    outcome(
        above >= 0.99 && full <= 0.95 && full - half <= PLATEAU && verdicts == (Winner::CopAlmostSurely, Winner::RobberPositiveProb),
        format!("t_c=.1: t_r=.25 capture {above:.4} (tol >= .99); t_r=.15 capture {full:.4} (tol <= .95), {half:.4} at H/2 (plateau tol {PLATEAU})"),
    )
}

fn mean_base_gap() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (big, delta, t_r) in [(7, 3, 0.1), (7, 2, 0.3), (5, 4, 0.05)] {
        let tree = TreeParams::new(big, delta).unwrap();
        let t_c = analytics::cop_box_limit(delta, big);
        let config = BatchConfig { horizon: 20_000, episodes: 200, master_seed: SEED, threads: None };
        let est = estimate_mu(&tree, t_r, t_c, 50, &config).unwrap();
        let rel = (est.mean - est.analytic) / est.analytic;
        pass &= rel.abs() < 0.01 && est.gaps >= 100_000;
        parts.push(format!("({big},{delta},{t_r}) {:.5} vs {:.5} ({:+.3}%, {} gaps)", est.mean, est.analytic, 100.0 * rel, est.gaps));
    }
    outcome(pass, format!("{} (tol 1%, >= 1e5 gaps)", parts.join("; ")))
}

fn lower_bound_variables() -> Outcome {
    let (big, t_c, t_r) = (7.0, 0.1, 0.2);
    let tree = TreeParams::new(7, 3).unwrap();
    let params = GameParams::tree(t_c, t_r).unwrap();
    let start = TreeGameState::base_pair(20);
    let expect_r = (1.0 - 6.0 * t_r / big) / (1.0 - 2.0 * t_r / big);
    let expect_c = -(1.0 - (4.0 * big - 6.0) * t_c / big) / (1.0 - 2.0 * t_c / big);
    let (mut sum_r, mut n_r, mut sum_c, mut n_c, mut events, mut violations) = (0i64, 0u64, 0i64, 0u64, 0u64, 0u64);
    for i in 0..1000 {
        let stream = RngStream::new(SEED, i);
        let episode = run_tree_episode(&tree, &params, TreeStrategy::Csb, TreeStrategy::Rsb, &start, 2000, &stream, true).unwrap();
        for e in episode.events.unwrap() {
            events += 1;
            if e.f < e.f_tilde {
                violations += 1;
            }
            match e.side {
                tipsy_core::Side::Robber => {
                    sum_r += e.f_tilde as i64;
                    n_r += 1;
                }
                tipsy_core::Side::Cop => {
                    sum_c += e.f_tilde as i64;
                    n_c += 1;
                }
            }
        }
        violations += episode.stats.dominance_violations;
    }
    let (mean_r, mean_c) = (sum_r as f64 / n_r as f64, sum_c as f64 / n_c as f64);
    let z_r = (mean_r - expect_r) / ((1.0 - expect_r * expect_r) / n_r as f64).sqrt();
    let z_c = (mean_c - expect_c) / ((1.0 - expect_c * expect_c) / n_c as f64).sqrt();
    outcome(
        z_r.abs() <= 3.0 && z_c.abs() <= 3.0 && violations == 0,
        format!(
            "(7,3) t_c=.1 t_r=.2: robber {mean_r:.5} vs {expect_r:.5} (z {z_r:+.2}), cop {mean_c:.5} vs {expect_c:.5} (z {z_c:+.2}), tol 3 sigma; {violations} F < F~ in {events} events"
        ),
    )
}

fn plotted_radical(x: f64) -> f64 {
    (-21.0 + 24.0 * x + 18.0 * x * x + (441.0 - 2086.0 * x + 3285.0 * x * x - 1908.0 * x.powi(3) + 324.0 * x.powi(4)).sqrt())
        / (11.0 * (-7.0 + 12.0 * x))
}

fn threshold_curve() -> Outcome {
    let (big, delta) = (7, 2);
    let f = |x: f64| analytics::threshold_f(x, delta, big).unwrap();
    let radical_err = [0.1, 0.2, 0.3, 0.4].iter().map(|&x| (f(x) - plotted_radical(x)).abs()).fold(0.0, f64::max);
    let end_err = (f(analytics::depth_limit(delta)) - (delta as f64 / (4.0 * delta as f64 - 4.0)).min(big as f64 / (4.0 * big as f64 - 6.0))).abs();
    let h = 1e-6;
    let slope_err = (f(h) / h - 2.0 / (big as f64 - 1.0)).abs();
    let xs: Vec<f64> = (0..100).map(|i| analytics::depth_limit(delta) * i as f64 / 99.0).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let monotone = fs.windows(2).all(|w| w[1] >= w[0]);
    let convex = fs.windows(3).all(|w| w[1] <= 0.5 * (w[0] + w[2]) + 1e-12);
    outcome(
        radical_err < 1e-9 && f(0.0) == 0.0 && end_err < 1e-9 && slope_err < 1e-3 && monotone && convex,
        format!(
            "(7,2): radical error {radical_err:.1e} (tol 1e-9), f(0) = {}, endpoint error {end_err:.1e}, f'(0) error {slope_err:.1e} (tol 1e-3), monotone {monotone}, convex {convex}",
            f(0.0)
        ),
    )
}

fn crossover() -> Outcome {
    let two = analytics::crossover_t0(2, 7).unwrap();
    let zero = analytics::crossover_t0(3, 5).unwrap();
    let t0 = analytics::crossover_t0(3, 7).unwrap();
    let gap = (analytics::threshold_f(t0, 3, 7).unwrap() - t0 / 2.0).abs();
    outcome(
        two == 0.5 && zero == 0.0 && gap < 1e-10 && t0 > 0.0 && t0 < 0.375,
        format!("δ=2: {two}; (5,3): {zero}; (7,3): t0 = {t0:.10}, |f(t0) - t0/2| = {gap:.1e} (tol 1e-10)"),
    )
}

fn phase_concordance() -> Outcome {
    let (big, delta) = (7, 3);
    let tree = TreeParams::new(big, delta).unwrap();
    let (x_max, y_max) = (analytics::depth_limit(delta), analytics::cop_box_limit(delta, big));
    let mut draws = RngStream::new(SEED, 11).draws();
    let h = 100_000;
    let (mut agree, mut points) = (0, Vec::new());
    while points.len() < 20 {
        let (t_r, t_c) = (draws.uniform() * x_max, draws.uniform() * y_max);
        let margin = analytics::rsb_margin(t_r, t_c, delta, big).unwrap();
        if margin.abs() <= 0.05 {
            continue;
        }
        let capture = tree_batch(tree, t_c, t_r, TreeStrategy::Csb, TreeStrategy::Rsb, 20, h, 100).capture_fraction_at(h);
        // a positive margin means RSB escapes
        let ok = (margin > 0.0) == (capture < 0.5);
        agree += ok as u32;
        points.push(format!("({t_r:.3},{t_c:.3}) m{margin:+.3} c{capture:.2}{}", if ok { "" } else { "!" }));
    }
    outcome(agree >= 18, format!("{agree}/20 agree (tol >= 18): {}", points.join(" ")))
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["simulate", "--c", "0.3", "--r", "0.2", "--t", "0.5", "--episodes", "20000", "--horizon", "100000"],
        &["simulate", "--game", "tree", "--Delta", "7", "--delta", "3", "--tc", "0.1", "--tr", "0.2", "--start", "20", "--episodes", "1000", "--horizon", "2000"],
        &["phase", "--Delta", "7", "--delta", "3", "--tr-step", "0.125", "--tc-step", "0.1", "--start", "5", "--episodes", "20", "--horizon", "2000"],
        &["oracle", "--c", "0.3", "--r", "0.2", "--t", "0.5", "--radii", "10,20", "--episodes", "5000"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let outputs: Vec<Vec<u8>> = [1, 2, 4]
            .iter()
            .map(|threads| {
                let out = Command::new(env!("CARGO_BIN_EXE_tipsy"))
                    .args(args)
                    .args(["--seed", &SEED.to_string(), "--threads", &threads.to_string(), "--deterministic"])
                    .env_remove("TIPSY_SEED")
                    .output()
                    .unwrap();
                assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            differing.push(args[0]);
        }
    }
    outcome(differing.is_empty(), format!("simulate/tree/phase/oracle at 1, 2, 4 threads; differing: {differing:?}"))
}

fn main() {
    let checks: Vec<(&str, Box<dyn Fn() -> Vec<(&'static str, Outcome)>>)> = vec![
        ("1", Box::new(|| vec![("1", two_round_identity())])),
        ("2", Box::new(|| vec![("2", weight_model())])),
        ("3", Box::new(|| vec![("3", oracle_vs_monte_carlo())])),
        ("4", Box::new(grid_regimes)),
        ("5", Box::new(|| vec![("5", foolish_cop_escapes())])),
        ("6", Box::new(|| vec![("6", regular_tree_threshold())])),
        ("7", Box::new(|| vec![("7", mean_base_gap())])),
        ("8", Box::new(|| vec![("8", lower_bound_variables())])),
        ("9", Box::new(|| vec![("9", threshold_curve())])),
        ("10", Box::new(|| vec![("10", crossover())])),
        ("11", Box::new(|| vec![("11", phase_concordance())])),
        ("12", Box::new(|| vec![("12", determinism())])),
    ];
    let mut unexpected = 0;
    for (_, check) in checks {
        let started = Instant::now();
        let results = check();
        let secs = started.elapsed().as_secs_f64();
        for (id, o) in results {
            let known = KNOWN_UNATTAINABLE.contains(&id);
            let tag = match (o.pass, known) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known unattainable)",
                (false, false) => "FAIL",
            };
            println!("criterion {id:>3}: {tag} [{secs:.1}s] {}", o.detail);
            if !o.pass && !known {
                unexpected += 1;
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
