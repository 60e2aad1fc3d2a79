//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

mod common;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use sqgpu::cost_model::*;
use sqgpu::experiments::{run_csr_sweep, run_qcount_sweep, CsrPoint, CsrSweep, QcountSweep};
use sqgpu::rng::derive_trial_rng;
use sqgpu::sched_sim::*;
use sqgpu::workload::{Batch, BurstLevel, QubitAddr};

const P: CostParams = CostParams::REFERENCE;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn sqgpu(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sqgpu")).args(args).output().expect("binary runs")
}

fn shape(m: u32, n: u32) -> SystemShape {
    SystemShape::grid(m, n).unwrap()
}

fn calibration() -> Outcome {
    let start = Instant::now();
    let out = sqgpu(&["calibrate", "--point", "2:5000", "--point", "50:4000000"]);
    let elapsed = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    let get = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .and_then(|v| v.parse::<f64>().ok())
            .unwrap_or(f64::NAN)
    };
    let (eps, a) = (get("epsilon"), get("a"));
    outcome(
        out.status.success()
            && (eps - 21_476.0).abs() <= 1.0
            && (a - 1.11032).abs() <= 1e-5
            && elapsed < Duration::from_secs(1),
        format!("epsilon={eps:.4} a={a:.7} in {elapsed:.1?}"),
    )
}

fn cost_anchor() -> Outcome {
    let cs = cost_sqgpu(&shape(6, 50), &P).unwrap();
    let anchored = (cs / 36.75e6 - 1.0).abs() <= 0.005 && (cs / 1e6).round() == 37.0;
    let mut ordered = true;
    for n in 6..=300 {
        let s = shape(6, n);
        let (cs, ce, c0) = (
            cost_sqgpu(&s, &P).unwrap(),
            cost_entanglement(&s, &P).unwrap(),
            cost_monolithic(&s, &P).unwrap(),
        );
        ordered &= cs < ce && ce < c0;
    }
    outcome(
        anchored && ordered,
        format!("C_S(6,50)={cs:.2} (~${:.0}M), C_S<C_E<C_0 on N=6..300: {ordered}", cs / 1e6),
    )
}

fn turning_point() -> Outcome {
    let costs = |n| {
        let s = shape(6, n);
        (
            cost_sqgpu(&s, &P).unwrap(),
            cost_entanglement(&s, &P).unwrap(),
            cost_monolithic(&s, &P).unwrap(),
        )
    };
    let (s5, e5, m5) = costs(5);
    let (s6, e6, m6) = costs(6);
    outcome(
        m5 < e5 && m5 < s5 && m6 > e6 && m6 > s6,
        format!("N=5: C_0={m5:.0} C_E={e5:.0} C_S={s5:.0}; N=6: C_0={m6:.0} C_E={e6:.0} C_S={s6:.0}"),
    )
}

fn asymptotics() -> Outcome {
    let s = shape(6, 150);
    let exact_e = cost_sqgpu(&s, &P).unwrap() / cost_entanglement(&s, &P).unwrap();
    let approx_e = P.a.powi(-150);
    let s = shape(2, 100);
    let exact_0 = cost_sqgpu(&s, &P).unwrap() / cost_monolithic(&s, &P).unwrap();
    let approx_0 = 2.0 * P.a.powi(100 - 200);
    let (dev_e, dev_0) = ((exact_e / approx_e - 1.0).abs(), (exact_0 / approx_0 - 1.0).abs());
    outcome(
        dev_e < 0.02 && dev_0 < 0.01,
        format!("C_S/C_E off a^-N by {:.3}%, C_S/C_0 off M*a^(N-MN) by {:.3}%", dev_e * 100.0, dev_0 * 100.0),
    )
}

fn q_budgets() -> Outcome {
    let even = run_qcount_sweep(&QcountSweep::Even { nodes: 6, y: 3, x: (2..=50).step_by(2).collect() }).unwrap();
    let slopes_ok = even.windows(2).all(|w| {
        let dx = w[1].param - w[0].param;
        w[1].q_entanglement - w[0].q_entanglement == 6 * dx && w[1].q_sqgpu - w[0].q_sqgpu == 3 * dx
    }) && even.iter().all(|r| r.q_entanglement == 6 * r.param && r.q_sqgpu == 3 * r.param);

    let uneven = run_qcount_sweep(&QcountSweep::Uneven { nodes: 6, qubits_per_node: 50, r: (1..=150).collect() }).unwrap();
    let plateau_ok = uneven.iter().all(|r| {
        if r.param >= 50 {
            r.q_entanglement == 300
        } else {
            r.q_entanglement == 6 * r.param
        }
    });
    outcome(
        slopes_ok && plateau_ok,
        format!("subcase E slopes 6/3: {slopes_ok}; subcase U plateau 300 for R>=50: {plateau_ok}"),
    )
}

struct GridResult {
    points: Vec<CsrPoint>,
    elapsed: Duration,
}

fn default_grid() -> GridResult {
    let start = Instant::now();
    let mut points = Vec::new();
    for level in [BurstLevel::Qubit, BurstLevel::Node] {
        points.extend(run_csr_sweep(&CsrSweep::default_grid(level)).unwrap().points);
    }
    GridResult { points, elapsed: start.elapsed() }
}

fn find<'a>(g: &'a GridResult, arch: Architecture, m: u32, p: &CsrPoint) -> &'a CsrPoint {
    g.points
        .iter()
        .find(|q| q.arch == arch && q.nodes == m && q.level == p.level && q.burst_ratio == p.burst_ratio)
        .unwrap()
}

fn dominance(g: &GridResult) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for ded in g.points.iter().filter(|p| p.arch == Architecture::Dedicated) {
        let sh = find(g, Architecture::Shared, ded.nodes, ded);
        let margin = sh.csr - (ded.csr - (sh.stderr_csr + ded.stderr_csr));
        worst = worst.min(margin);
        if margin < 0.0 {
            failures += 1;
        }
    }
    outcome(
        failures == 0 && g.elapsed < Duration::from_secs(300),
        format!("{} points, {failures} below margin, smallest margin {worst:.4}, grid ran in {:.1?}", g.points.len() / 2, g.elapsed),
    )
}

fn node_stress(g: &GridResult) -> Outcome {
    let at = |m| {
        g.points
            .iter()
            .find(|p| {
                p.arch == Architecture::Dedicated && p.nodes == m && p.burst_ratio == 0.5 && p.level == sqgpu::experiments::PointLevel::Node
            })
            .unwrap()
    };
    let (small, large) = (at(8), at(40));
    outcome(
        large.csr < small.csr,
        format!(
            "dedicated node-level p=0.5: CSR(M=8)={:.4}±{:.4}, CSR(M=40)={:.4}±{:.4}",
            small.csr, small.stderr_csr, large.csr, large.stderr_csr
        ),
    )
}

fn csr_range(g: &GridResult) -> Outcome {
    let bad = g.points.iter().filter(|p| !(p.csr > 0.0 && p.csr <= 1.0)).count();
    let lo = g.points.iter().map(|p| p.csr).fold(f64::INFINITY, f64::min);
    outcome(bad == 0, format!("{} points, {bad} outside (0,1], min CSR {lo:.4}", g.points.len()))
}

fn step_invariants_hold(batch: &Batch, model: &ResourceModel, result: &ScheduleResult) -> bool {
    let by_seq: HashMap<u64, _> = batch.requests.iter().map(|r| (r.seq, r)).collect();
    let mut seen = HashSet::new();
    for step in &result.steps {
        let mut qubits = HashSet::new();
        let mut per_node: HashMap<u32, u32> = HashMap::new();
        for seq in step {
            let Some(r) = by_seq.get(seq) else { return false };
            if !seen.insert(*seq) || !qubits.insert(r.src) || !qubits.insert(r.dst) {
                return false;
            }
            *per_node.entry(r.src.node).or_default() += 1;
            *per_node.entry(r.dst.node).or_default() += 1;
        }
        let ok = match model {
            ResourceModel::Dedicated { per_node_comm } => per_node.values().all(|c| c <= per_node_comm),
            ResourceModel::Shared { modules } => step.len() as u64 <= *modules,
            ResourceModel::Ideal => true,
        };
        if !ok {
            return false;
        }
    }
    seen.len() == batch.len() && result.makespan as usize == result.steps.len()
}

fn scheduler_correctness() -> Outcome {
    let mut failures = Vec::new();
    let models = [
        ResourceModel::Dedicated { per_node_comm: 1 },
        ResourceModel::Dedicated { per_node_comm: 2 },
        ResourceModel::Shared { modules: 1 },
        ResourceModel::Shared { modules: 3 },
        ResourceModel::Ideal,
    ];
    for (mi, model) in models.iter().enumerate() {
        for case in 0..1000u64 {
            let mut rng = derive_trial_rng(0x00AC_CE97, (mi as u64) << 32 | case);
            let batch = common::fuzz_batch(&mut rng, 8);
            let greedy = simulate(&batch, model).unwrap();
            let optimal = optimal_makespan_bruteforce(&batch, model).unwrap();
            let ok = greedy.makespan >= optimal
                && (*model != ResourceModel::Ideal || greedy.makespan <= 2 * optimal)
                && step_invariants_hold(&batch, model, &greedy);
            if !ok {
                failures.push(format!("{model:?} case {case}"));
            }
        }
    }

    let pairs = (0..50).map(|i| (QubitAddr::new(0, i), QubitAddr::new(1, i)));
    let batch = Batch::from_pairs(SystemShape::new(2, 50, 20).unwrap(), pairs).unwrap();
    let ded = simulate(&batch, &ResourceModel::Dedicated { per_node_comm: 10 }).unwrap().makespan;
    let sh = simulate(&batch, &ResourceModel::Shared { modules: 50 }).unwrap().makespan;
    let ideal = ideal_latency(&batch);
    let (c_ded, c_sh) = (csr(f64::from(ideal), f64::from(ded)).unwrap(), csr(f64::from(ideal), f64::from(sh)).unwrap());
    let vectors = ded == 5 && sh == 1 && ideal == 1 && c_ded.csr == 0.2 && c_sh.csr == 1.0;

    outcome(
        failures.is_empty() && vectors,
        format!(
            "{} fuzz cases, {} failures; 50 pairs: dedicated {ded}, shared {sh}, ideal {ideal}, CSR {} vs {}",
            models.len() * 1000,
            failures.len(),
            c_ded.csr,
            c_sh.csr
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let cost_csv = d("cost_for_plot.csv");
    sqgpu(&["cost", "--M", "6", "--N", "2:300", "--out", &cost_csv]);
    let commands: Vec<Vec<String>> = vec![
        vec!["calibrate", "--point", "2:5000", "--point", "50:4000000", "--out"],
        vec!["cost", "--M", "1:8", "--N", "2:300", "--lg", "--out"],
        vec!["cost", "--M", "6", "--N", "50", "--uneven", "10", "--out"],
        vec!["qcount", "--subcase", "E", "--M", "6", "--y", "3", "--out"],
        vec!["simulate", "--level", "qubit", "--trials", "100", "--seed", "42", "--out"],
        vec!["simulate", "--level", "node", "--M", "8:40:16", "--trials", "100", "--seed", "9", "--out"],
        vec!["plot", "--in", &cost_csv, "--x", "N", "--y", "cost_sqgpu,cost_monolithic", "--logy", "--out"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();

    let mut mismatched = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let ext = if cmd[0] == "plot" { "svg" } else { "csv" };
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|run| {
                let path = d(&format!("out{i}_{run}.{ext}"));
                let mut args: Vec<&str> = cmd.iter().map(String::as_str).collect();
                args.push(&path);
                let status = sqgpu(&args).status;
                if status.success() {
                    fs::read(&path).unwrap_or_default()
                } else {
                    Vec::new()
                }
            })
            .collect();
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            mismatched.push(cmd[0].clone());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{} commands run twice, differing: {mismatched:?}", commands.len()),
    )
}

fn main() {
    let grid = default_grid();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 calibration", calibration()),
        ("2 cost anchor and ordering", cost_anchor()),
        ("3 turning point", turning_point()),
        ("4 asymptotic ratios", asymptotics()),
        ("5 communication-qubit budgets", q_budgets()),
        ("6a shared CSR dominates dedicated", dominance(&grid)),
        ("6b dedicated node-level CSR falls with M", node_stress(&grid)),
        ("6c CSR within (0, 1]", csr_range(&grid)),
        ("7 scheduler vs exhaustive oracle", scheduler_correctness()),
        ("8 byte-identical reruns", determinism()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
