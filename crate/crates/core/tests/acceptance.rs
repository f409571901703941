//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p perfect-core --test acceptance --release`.

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{all_pairs, brute_antiholes, brute_cycle_configs, brute_holes, brute_min_flips, non_edges, petersen};
use num_bigint::BigUint;
use perfect_core::expectation::{
    count_all_antihole_configs, count_all_hole_configs, count_hole_configs, expected_counts,
    monte_carlo_counts,
};
use perfect_core::graph::generate_optional_pairs;
use perfect_core::heuristic::{run_heuristic_observed, FlipObserver, PairCountIndex};
use perfect_core::master::gap_pct;
use perfect_core::solve::NamedStrategy;
use perfect_core::{
    find_odd_antiholes, find_odd_holes, generate_er, is_perfect, run_heuristic, solve_complete,
    solve_delete, solve_edit, solve_sandwich, ErParams, Graph, HeuristicMode, SolveResult,
    SolveStatus, StrategyConfig,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const DENSITIES: [f64; 3] = [0.25, 0.5, 0.75];
const SEEDS: std::ops::Range<u64> = 0..5;

fn with_limit(limit: Duration) -> StrategyConfig {
    StrategyConfig {
        time_limit: Some(limit),
        ..StrategyConfig::default()
    }
}

fn enumeration_oracle() -> Outcome {
    let t = Instant::now();
    for k in 0..50u64 {
        let n = 8 + (k % 5) as usize;
        let p = DENSITIES[(k / 5 % 3) as usize];
        let g = generate_er(ErParams::new(n, p, 500 + k));
        let holes: BTreeSet<_> = find_odd_holes(&g, None).into_iter().collect();
        let antiholes: BTreeSet<_> = find_odd_antiholes(&g, None).into_iter().collect();
        ensure!(holes == brute_holes(&g), "holes differ on n={n} p={p} seed={}", 500 + k);
        ensure!(antiholes == brute_antiholes(&g), "antiholes differ on n={n} p={p} seed={}", 500 + k);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("50 graphs in {secs:.2} s"))
}

fn known_counts() -> Outcome {
    let c5 = find_odd_holes(&Graph::cycle(5), None).len();
    ensure!(c5 == 1, "C5 has {c5} holes");
    let c6 = find_odd_holes(&Graph::cycle(6), None).len();
    ensure!(c6 == 0, "C6 has {c6} holes");
    let pg = petersen();
    let oracle = brute_holes(&pg).len();
    let found = find_odd_holes(&pg, None).len();
    ensure!(oracle == 12 && found == 12, "Petersen: oracle {oracle}, found {found}");
    let anti = find_odd_antiholes(&Graph::cycle(7).complement(), None).len();
    ensure!(anti == 1, "complement of C7 has {anti} antiholes");
    Ok("C5=1, C6=0, Petersen=12, co-C7=1".into())
}

fn configuration_counts() -> Outcome {
    let c55 = count_hole_configs(5, 5).map_err(|e| e.to_string())?;
    ensure!(c55 == BigUint::from(12u32), "count_hole_configs(5,5) = {c55}");
    let c7 = count_all_hole_configs(7);
    ensure!(c7 == BigUint::from(612u32), "count_all_hole_configs(7) = {c7}");
    ensure!(count_all_antihole_configs(6) == BigUint::from(0u32), "antihole sum includes length 5");
    for n in 7..=30 {
        let five = count_hole_configs(n, 5).map_err(|e| e.to_string())?;
        ensure!(
            count_all_antihole_configs(n) + five == count_all_hole_configs(n),
            "antihole sum does not start at length 7 for n={n}"
        );
    }
    for n in 5..=8 {
        let mut antiholes = 0u64;
        for i in (5..=n).step_by(2) {
            let brute = brute_cycle_configs(n, i);
            let formula = count_hole_configs(n, i).map_err(|e| e.to_string())?;
            ensure!(formula == BigUint::from(brute), "n={n} i={i}: {formula} vs {brute}");
            if i >= 7 {
                antiholes += brute;
            }
        }
        ensure!(count_all_antihole_configs(n) == BigUint::from(antiholes), "antihole total n={n}");
    }
    Ok("closed forms and enumeration agree for n <= 8".into())
}

fn expectation_validity() -> Outcome {
    let t = Instant::now();
    const SAMPLES: usize = 50_000;
    let mut notes = Vec::new();
    for (n, p) in [(7, 0.3), (8, 0.5), (10, 0.25)] {
        let e = expected_counts(n, p).map_err(|e| e.to_string())?;
        let mc = monte_carlo_counts(n, p, SAMPLES, 20_000);
        let m = SAMPLES as f64;
        // A zero sample deviation (nothing observed) falls back to the
        // Poisson standard error of the expectation.
        let se = |sample: f64, expected: f64| if sample > 0.0 { sample } else { (expected / m).sqrt() };
        let zh = (e.e_holes - mc.mean_holes).abs() / se(mc.se_holes, e.e_holes);
        let za = (e.e_antiholes - mc.mean_antiholes).abs() / se(mc.se_antiholes, e.e_antiholes);
        ensure!(zh <= 3.0, "n={n} p={p}: holes {} vs {} ({zh:.2} SE)", e.e_holes, mc.mean_holes);
        ensure!(za <= 3.0, "n={n} p={p}: antiholes {} vs {} ({za:.2} SE)", e.e_antiholes, mc.mean_antiholes);
        notes.push(format!("({n},{p}) {zh:.2}/{za:.2} SE"));
    }
    for n in 5..=40 {
        for k in 500..=1000 {
            let p = k as f64 / 1000.0;
            let a = expected_counts(n, p).map_err(|e| e.to_string())?.e_total;
            let b = expected_counts(n, 1.0 - p).map_err(|e| e.to_string())?.e_total;
            ensure!(a == b, "E[X+X̄] not symmetric at n={n} p={p}: {a} vs {b}");
        }
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=1000 {
        let p = k as f64 / 1000.0;
        let v = expected_counts(5, p).map_err(|e| e.to_string())?.e_total;
        if v > best.0 {
            best = (v, p);
        }
    }
    ensure!(best.1 == 0.5, "n=5 maximiser at p={}", best.1);
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 300.0, "took {secs:.1} s");
    Ok(format!("{}; symmetric; max at 0.5; {secs:.1} s", notes.join(", ")))
}

fn exact_optimality() -> Outcome {
    let t = Instant::now();
    let cfg = StrategyConfig::default();
    for k in 0..30u64 {
        let n = 5 + (k % 3) as usize;
        let p = DENSITIES[(k / 3 % 3) as usize];
        let g = generate_er(ErParams::new(n, p, 700 + k));
        let edit = solve_edit(&g, &cfg);
        let brute = brute_min_flips(&g, &all_pairs(n));
        ensure!(edit.status == SolveStatus::Optimal && edit.objective == brute, "edit seed {}: {:?} vs {brute:?}", 700 + k, edit.objective);
        let complete = solve_complete(&g, &cfg);
        let brute = brute_min_flips(&g, &non_edges(&g));
        ensure!(complete.status == SolveStatus::Optimal, "completion seed {} not optimal", 700 + k);
        ensure!(complete.objective <= brute && complete.objective == brute, "completion seed {}: {:?} vs {brute:?}", 700 + k, complete.objective);
        let out = complete.output.expect("optimal result has a graph");
        ensure!(g.is_subgraph_of(&out) && is_perfect(&out), "completion seed {} output invalid", 700 + k);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 120.0, "took {secs:.1} s");
    Ok(format!("30 graphs in {secs:.2} s"))
}

/// Optimal editing objectives of the n=20 suite, shared by later checks.
struct Suite {
    edit20: Vec<(Graph, usize)>,
}

fn run_timed(kind: &str, g: &Graph, budget: Duration, solve: fn(&Graph, &StrategyConfig) -> SolveResult) -> Result<(usize, f64), String> {
    let t = Instant::now();
    let r = solve(g, &with_limit(budget));
    let secs = t.elapsed().as_secs_f64();
    ensure!(r.status == SolveStatus::Optimal, "{kind}: status {:?} (ub {:?}, lb {}) after {secs:.1} s", r.status, r.objective, r.lower_bound);
    ensure!(secs < budget.as_secs_f64(), "{kind}: {secs:.1} s");
    Ok((r.objective.expect("optimal"), secs))
}

fn desk_scale(suite: &mut Suite) -> Outcome {
    let mut worst20: f64 = 0.0;
    let mut worst25: f64 = 0.0;
    let mut failures = Vec::new();
    for (kind, solve) in [("edit", solve_edit as fn(&Graph, &StrategyConfig) -> SolveResult), ("complete", solve_complete)] {
        for p in DENSITIES {
            for seed in SEEDS {
                let g = generate_er(ErParams::new(20, p, seed));
                match run_timed(kind, &g, Duration::from_secs(60), solve) {
                    Ok((obj, secs)) => {
                        worst20 = worst20.max(secs);
                        if kind == "edit" {
                            suite.edit20.push((g, obj));
                        }
                    }
                    Err(e) => failures.push(format!("n=20 p={p} seed={seed} {e}")),
                }
            }
        }
        for p in [0.25, 0.75] {
            for seed in SEEDS {
                let g = generate_er(ErParams::new(25, p, seed));
                match run_timed(kind, &g, Duration::from_secs(120), solve) {
                    Ok((_, secs)) => worst25 = worst25.max(secs),
                    Err(e) => failures.push(format!("n=25 p={p} seed={seed} {e}")),
                }
            }
        }
    }
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok(format!("50 runs optimal; slowest n=20 {worst20:.1} s, n=25 {worst25:.1} s"))
}

fn strategy_invariance(suite: &Suite) -> Outcome {
    ensure!(suite.edit20.len() == 15, "n=20 editing suite incomplete");
    for (g, opt) in &suite.edit20 {
        for s in NamedStrategy::ALL {
            let r = solve_edit(g, &StrategyConfig { time_limit: Some(Duration::from_secs(60)), ..s.config() });
            ensure!(r.status == SolveStatus::Optimal && r.objective == Some(*opt), "{}: {:?} vs {opt}", s.as_str(), r.objective);
        }
    }
    Ok(format!("{} strategies agree on 15 instances", NamedStrategy::ALL.len()))
}

fn gap_formula() -> Outcome {
    let gap = gap_pct(Some(10), 8);
    ensure!(gap == 20.0, "gap {gap}");
    Ok("UB 10, LB 8 -> 20%".into())
}

fn duality() -> Outcome {
    let cfg = with_limit(Duration::from_secs(600));
    for k in 0..20u64 {
        let n = 10 + (k % 6) as usize;
        let p = DENSITIES[(k % 3) as usize];
        let g = generate_er(ErParams::new(n, p, 900 + k));
        let d = solve_delete(&g, &cfg);
        let c = solve_complete(&g.complement(), &cfg);
        ensure!(d.status == SolveStatus::Optimal && c.status == SolveStatus::Optimal, "seed {} not optimal", 900 + k);
        ensure!(d.objective == c.objective, "seed {}: {:?} vs {:?}", 900 + k, d.objective, c.objective);
    }
    Ok("20 instances, n 10..15".into())
}

fn sandwich_degenerations() -> Outcome {
    let cfg = StrategyConfig::default();
    let mut perfect_inputs = 0;
    for k in 0..20u64 {
        let n = 6 + (k % 5) as usize;
        let p = [0.2, 0.5, 0.8][(k % 3) as usize];
        let g = generate_er(ErParams::new(n, p, 1100 + k));
        let r = solve_sandwich(&g, &[], &cfg).map_err(|e| e.to_string())?;
        let perfect = is_perfect(&g);
        perfect_inputs += perfect as usize;
        ensure!((r.status == SolveStatus::SandwichFeasible) == perfect, "empty optional, seed {}: {:?}", 1100 + k, r.status);
        ensure!(r.status.is_definite(), "seed {}: {:?}", 1100 + k, r.status);
        let r = solve_sandwich(&g, &non_edges(&g), &cfg).map_err(|e| e.to_string())?;
        ensure!(r.status == SolveStatus::SandwichFeasible, "all optional, seed {}: {:?}", 1100 + k, r.status);
    }
    let r = solve_sandwich(&Graph::cycle(5), &[], &cfg).map_err(|e| e.to_string())?;
    ensure!(r.status == SolveStatus::SandwichInfeasiblePrecheck, "C5: {:?}", r.status);
    Ok(format!("20 + 20 instances ({perfect_inputs} perfect inputs), C5 precheck"))
}

fn sandwich_desk_scale() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut feasible = 0;
    for p in DENSITIES {
        for seed in SEEDS {
            let g = generate_er(ErParams::new(20, p, seed));
            let optional = generate_optional_pairs(&g, 0.9, seed);
            let t = Instant::now();
            let r = solve_sandwich(&g, &optional, &with_limit(Duration::from_secs(60))).map_err(|e| e.to_string())?;
            let secs = t.elapsed().as_secs_f64();
            ensure!(r.status.is_definite() && secs < 60.0, "p={p} seed={seed}: {:?} after {secs:.1} s", r.status);
            feasible += (r.status == SolveStatus::SandwichFeasible) as usize;
            worst = worst.max(secs);
        }
    }
    Ok(format!("15 definite ({feasible} feasible), slowest {worst:.2} s"))
}

fn heuristic(suite: &Suite) -> Outcome {
    let mut notes = Vec::new();
    for seed in SEEDS {
        let g = generate_er(ErParams::new(30, 0.5, seed));
        let t = Instant::now();
        let run = run_heuristic(&g, HeuristicMode::EditBothWays);
        let secs = t.elapsed().as_secs_f64();
        ensure!(run.is_perfect() && secs < 3.0, "ER(30) seed {seed}: perfect={} after {secs:.2} s", run.is_perfect());
        ensure!(is_perfect(run.graph()), "ER(30) seed {seed}: output not perfect");
        let objective = run.graph().hamming_distance(&g);
        let exact = solve_edit(&g, &with_limit(Duration::from_secs(20)));
        let bound = match exact.status {
            SolveStatus::Optimal => exact.objective.expect("optimal"),
            _ => exact.lower_bound,
        };
        ensure!(objective >= bound, "ER(30) seed {seed}: heuristic {objective} below bound {bound}");
        notes.push(format!("{secs:.2}s"));
    }
    ensure!(suite.edit20.len() == 15, "n=20 editing suite incomplete");
    let mut total = 0.0;
    for (g, opt) in &suite.edit20 {
        let run = run_heuristic(g, HeuristicMode::EditBothWays);
        ensure!(run.is_perfect(), "n=20 heuristic failed");
        let h = run.graph().hamming_distance(g);
        ensure!(h >= *opt, "heuristic {h} below optimum {opt}");
        total += if h == 0 { 0.0 } else { (h - opt) as f64 / h as f64 * 100.0 };
    }
    let mean = total / suite.edit20.len() as f64;
    ensure!(mean <= 25.0, "mean gap {mean:.1}%");
    Ok(format!("ER(30) times [{}]; mean n=20 gap {mean:.1}%", notes.join(", ")))
}

struct Audit {
    flips: usize,
    mismatch: Option<String>,
}

impl FlipObserver for Audit {
    fn after_flip(&mut self, graph: &Graph, index: &PairCountIndex) {
        self.flips += 1;
        let rebuilt = PairCountIndex::from_holes(
            graph.n(),
            find_odd_holes(graph, None).into_iter().chain(find_odd_antiholes(graph, None)),
        );
        if self.mismatch.is_none() && (index.snapshot() != rebuilt.snapshot() || !index.is_consistent()) {
            self.mismatch = Some(format!("after flip {}", self.flips));
        }
    }
}

fn index_consistency() -> Outcome {
    let mut flips = 0;
    for seed in 0..10u64 {
        let g = generate_er(ErParams::new(10, 0.5, 1300 + seed));
        let mut audit = Audit { flips: 0, mismatch: None };
        run_heuristic_observed(&g, HeuristicMode::EditBothWays, &mut audit);
        if let Some(m) = audit.mismatch {
            return Err(format!("seed {}: {m}", 1300 + seed));
        }
        flips += audit.flips;
    }
    ensure!(flips > 0, "no flips exercised");
    Ok(format!("{flips} flips checked"))
}

fn main() -> ExitCode {
    let mut suite = Suite { edit20: Vec::new() };
    let mut failed = 0;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1} s]");
            }
        }
    };
    report("enumeration_oracle", &mut enumeration_oracle);
    report("known_counts", &mut known_counts);
    report("configuration_counts", &mut configuration_counts);
    report("expectation_validity", &mut expectation_validity);
    report("exact_solver_optimality", &mut exact_optimality);
    report("desk_scale_edit_and_completion", &mut || desk_scale(&mut suite));
    report("strategy_invariance", &mut || strategy_invariance(&suite));
    report("gap_formula", &mut gap_formula);
    report("completion_deletion_duality", &mut duality);
    report("sandwich_degenerations", &mut sandwich_degenerations);
    report("sandwich_desk_scale", &mut sandwich_desk_scale);
    report("heuristic", &mut || heuristic(&suite));
    report("heuristic_index_consistency", &mut index_consistency);
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
