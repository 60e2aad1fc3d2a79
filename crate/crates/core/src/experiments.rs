//! Parameter sweeps: cost curves and contours, communication-qubit budgets,
//! and Monte-Carlo CSR surfaces.
//!
//! CSR trials run in parallel but are keyed by trial index, so results never
//! depend on the thread count or completion order.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost_model::{self, CostParams, SystemShape};
use crate::error::{Error, Result};
use crate::rng::derive_trial_rng;
use crate::sched_sim::{self, Architecture};
use crate::workload::{self, Batch, BurstLevel, WorkloadSpec};

pub const DEFAULT_QUBITS_PER_NODE: u32 = 50;
pub const DEFAULT_COMM_PER_NODE: u64 = 10;
pub const DEFAULT_TRIALS: u32 = 500;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_NODES: [u32; 5] = [8, 16, 24, 32, 40];
pub const DEFAULT_QUBIT_BURSTS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
pub const DEFAULT_NODE_BURSTS: [f64; 3] = [0.1, 0.3, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Mean and standard error `s/√n` with the unbiased `s`; `n = 1` gives 0.
pub fn aggregate_stats(samples: &[f64]) -> Result<StatSummary> {
    let count = samples.len();
    if count == 0 {
        return Err(Error::InvalidInput("no samples to aggregate".into()));
    }
    let n = count as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let stderr = if count == 1 {
        0.0
    } else {
        let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    };
    Ok(StatSummary { mean, stderr, count })
}

// ─── cost sweeps ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostScale {
    Linear,
    /// `lg C`, evaluated in log domain so no grid point overflows.
    Lg10,
}

/// Which pairing regime the two distributed columns use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostVariant {
    Full,
    /// Shared side sized for `r` gates; dedicated side at full pairing.
    Partial { r: u64 },
    /// `x` qubits on each of `y` nodes (`y` defaults to `M`).
    Even { x: u32, y: Option<u32> },
    /// Up to `r` gates that may concentrate on one node.
    Uneven { r: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSweep {
    pub nodes: Vec<u32>,
    pub qubits_per_node: Vec<u32>,
    pub params: CostParams,
    pub scale: CostScale,
    pub variant: CostVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub nodes: u32,
    pub qubits_per_node: u32,
    pub cost_sqgpu: f64,
    pub cost_entanglement: f64,
    pub cost_monolithic: f64,
}

fn cost_row(m: u32, n: u32, sweep: &CostSweep) -> Result<CostRow> {
    let shape = SystemShape::grid(m, n)?;
    let p = &sweep.params;
    let lg = sweep.scale == CostScale::Lg10;
    let to_scale = |v: f64| if lg { v.log10() } else { v };

    let full_s = || {
        if lg {
            cost_model::lg_cost_sqgpu(&shape, p)
        } else {
            cost_model::cost_sqgpu(&shape, p)
        }
    };
    let full_e = || {
        if lg {
            cost_model::lg_cost_entanglement(&shape, p)
        } else {
            cost_model::cost_entanglement(&shape, p)
        }
    };
    let partial_s = |r: u64| cost_model::cost_sqgpu_partial(&shape, r, p).map(to_scale);

    let (cost_sqgpu, cost_entanglement) = match sweep.variant {
        // C_S is undefined for odd MN; keep the grid rectangular for contours.
        CostVariant::Full if (u64::from(m) * u64::from(n)) % 2 == 1 => (f64::NAN, full_e()?),
        CostVariant::Full => (full_s()?, full_e()?),
        CostVariant::Partial { r } => (partial_s(r)?, full_e()?),
        CostVariant::Even { x, y } => {
            let pairing = cost_model::PairingSpec::from_xy(&shape, x, y.unwrap_or(m))?;
            (
                partial_s(pairing.r)?,
                to_scale(cost_model::cost_entanglement_partial_even(&shape, x, p)?),
            )
        }
        CostVariant::Uneven { r } => (
            partial_s(r)?,
            to_scale(cost_model::cost_entanglement_partial_uneven(&shape, r, p)?),
        ),
    };
    let cost_monolithic = if lg {
        cost_model::lg_cost_monolithic(&shape, p)?
    } else {
        cost_model::cost_monolithic(&shape, p)?
    };
    Ok(CostRow {
        nodes: m,
        qubits_per_node: n,
        cost_sqgpu,
        cost_entanglement,
        cost_monolithic,
    })
}

/// Rows in `M`-major order.
pub fn run_cost_sweep(sweep: &CostSweep) -> Result<Vec<CostRow>> {
    if sweep.nodes.is_empty() || sweep.qubits_per_node.is_empty() {
        return Err(Error::Config("cost sweep needs non-empty M and N ranges".into()));
    }
    sweep.params.validate()?;
    let mut rows = Vec::with_capacity(sweep.nodes.len() * sweep.qubits_per_node.len());
    for &m in &sweep.nodes {
        for &n in &sweep.qubits_per_node {
            rows.push(cost_row(m, n, sweep)?);
        }
    }
    Ok(rows)
}

// ─── communication-qubit budgets ──────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QcountSweep {
    /// Fixed `M` and `y`, varying `x`.
    Even { nodes: u32, y: u32, x: Vec<u32> },
    /// Fixed `M` and `N`, varying `R`.
    Uneven { nodes: u32, qubits_per_node: u32, r: Vec<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcountRow {
    pub param: u64,
    pub q_entanglement: u64,
    pub q_sqgpu: u64,
}

pub fn run_qcount_sweep(sweep: &QcountSweep) -> Result<Vec<QcountRow>> {
    match sweep {
        QcountSweep::Even { nodes, y, x } => {
            if x.is_empty() {
                return Err(Error::Config("qcount sweep needs a non-empty x range".into()));
            }
            cost_model::comm_budget_even(*nodes, 0, *y)?;
            // Odd x·y has no perfect pairing; those x are left out.
            x.iter()
                .filter(|&&x| (u64::from(x) * u64::from(*y)) % 2 == 0)
                .map(|&x| {
                    let b = cost_model::comm_budget_even(*nodes, x, *y)?;
                    Ok(QcountRow {
                        param: u64::from(x),
                        q_entanglement: b.q_entanglement,
                        q_sqgpu: b.q_sqgpu,
                    })
                })
                .collect()
        }
        QcountSweep::Uneven {
            nodes,
            qubits_per_node,
            r,
        } => {
            if r.is_empty() {
                return Err(Error::Config("qcount sweep needs a non-empty R range".into()));
            }
            r.iter()
                .map(|&r| {
                    let b = cost_model::comm_budget_uneven(*nodes, *qubits_per_node, r)?;
                    Ok(QcountRow {
                        param: r,
                        q_entanglement: b.q_entanglement,
                        q_sqgpu: b.q_sqgpu,
                    })
                })
                .collect()
        }
    }
}

// ─── CSR sweeps ───────────────────────────────────────────────────────────

/// Total communication-qubit budget as a function of `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommRule {
    PerNode(u64),
    Total(u64),
}

impl CommRule {
    pub fn total(&self, nodes: u32) -> u64 {
        match *self {
            CommRule::PerNode(k) => k * u64::from(nodes),
            CommRule::Total(q) => q,
        }
    }
}

impl Default for CommRule {
    fn default() -> Self {
        CommRule::PerNode(DEFAULT_COMM_PER_NODE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchSource {
    Generated { level: BurstLevel, burst_ratios: Vec<f64> },
    /// Replays one fixed batch in every trial.
    Injected(Batch),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrSweep {
    pub archs: Vec<Architecture>,
    pub nodes: Vec<u32>,
    pub qubits_per_node: u32,
    pub comm: CommRule,
    pub source: BatchSource,
    pub trials: u32,
    pub master_seed: u64,
}

impl CsrSweep {
    /// Both architectures over the default `M` grid and the default burst
    /// ratios for `level`.
    pub fn default_grid(level: BurstLevel) -> Self {
        let burst_ratios = match level {
            BurstLevel::Qubit => DEFAULT_QUBIT_BURSTS.to_vec(),
            BurstLevel::Node => DEFAULT_NODE_BURSTS.to_vec(),
        };
        CsrSweep {
            archs: Architecture::ALL.to_vec(),
            nodes: DEFAULT_NODES.to_vec(),
            qubits_per_node: DEFAULT_QUBITS_PER_NODE,
            comm: CommRule::default(),
            source: BatchSource::Generated { level, burst_ratios },
            trials: DEFAULT_TRIALS,
            master_seed: DEFAULT_SEED,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.archs.is_empty() {
            return Err(Error::Config("no architecture selected".into()));
        }
        if self.nodes.is_empty() {
            return Err(Error::Config("empty M range".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.qubits_per_node == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        match &self.source {
            BatchSource::Generated { burst_ratios, .. } => {
                if burst_ratios.is_empty() {
                    return Err(Error::Config("empty burst-ratio list".into()));
                }
                if let Some(p) = burst_ratios.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(Error::Config(format!("burst ratio {p} outside [0, 1]")));
                }
                if let Some(m) = self.nodes.iter().find(|&&m| m < 2) {
                    return Err(Error::Config(format!("M={m}: remote gates need M >= 2")));
                }
            }
            BatchSource::Injected(batch) => {
                batch.validate()?;
                if self.nodes != [batch.shape.nodes] || self.qubits_per_node != batch.shape.qubits_per_node {
                    return Err(Error::Config(format!(
                        "injected batch is shaped M={} N={}, sweep asks for M={:?} N={}",
                        batch.shape.nodes, batch.shape.qubits_per_node, self.nodes, self.qubits_per_node
                    )));
                }
            }
        }
        for &m in &self.nodes {
            let shape = SystemShape::new(m, self.qubits_per_node, self.comm.total(m))?;
            for arch in &self.archs {
                arch.resource_model(&shape)?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, embedded in output metadata.
    pub fn config_hash(&self) -> String {
        config_hash(self)
    }
}

pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("sweep configs serialize");
    hex::encode(Sha256::digest(json))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointLevel {
    Qubit,
    Node,
    Injected,
}

impl From<BurstLevel> for PointLevel {
    fn from(l: BurstLevel) -> Self {
        match l {
            BurstLevel::Qubit => PointLevel::Qubit,
            BurstLevel::Node => PointLevel::Node,
        }
    }
}

impl fmt::Display for PointLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointLevel::Qubit => "qubit",
            PointLevel::Node => "node",
            PointLevel::Injected => "injected",
        })
    }
}

/// Aggregated result for one `(arch, level, M, burst ratio)` grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrPoint {
    pub arch: Architecture,
    pub level: PointLevel,
    pub nodes: u32,
    pub qubits_per_node: u32,
    pub comm_qubits: u64,
    /// For injected batches, the engaged fraction `|batch| / MN`.
    pub burst_ratio: f64,
    pub trials: u32,
    pub mean_lr: f64,
    pub mean_li: f64,
    /// `min(1, mean_Li / mean_Lr)`.
    pub csr: f64,
    /// `mean_Lr / mean_Li`.
    pub latency_ratio: f64,
    pub stderr_csr: f64,
    pub seed: u64,
    /// Mean of per-trial `min(1, L_i / L_r)`, empty trials counting as 1.
    pub mean_trial_csr: f64,
}

/// A trial where the greedy ideal schedule came out longer than the
/// resource-limited one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingViolation {
    pub arch: Architecture,
    pub nodes: u32,
    pub trial_index: u64,
    pub ideal: u32,
    pub constrained: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrReport {
    pub points: Vec<CsrPoint>,
    pub violations: Vec<OrderingViolation>,
}

struct TrialOutcome {
    index: u64,
    ideal: u32,
    constrained: Vec<u32>,
}

fn run_trial(batch: &Batch, archs: &[Architecture], index: u64) -> Result<TrialOutcome> {
    let ideal = sched_sim::ideal_latency(batch);
    let constrained = archs
        .iter()
        .map(|arch| {
            let model = arch.resource_model(&batch.shape)?;
            Ok(sched_sim::simulate(batch, &model)?.makespan)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome {
        index,
        ideal,
        constrained,
    })
}

/// Delta-method standard error of `mean(li) / mean(lr)`.
fn ratio_stderr(li: &[f64], lr: &[f64]) -> f64 {
    let n = li.len() as f64;
    if li.len() < 2 {
        return 0.0;
    }
    let (mi, mr) = (li.iter().sum::<f64>() / n, lr.iter().sum::<f64>() / n);
    if mr == 0.0 {
        return 0.0;
    }
    let r = mi / mr;
    let (mut vi, mut vr, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in li.iter().zip(lr) {
        vi += (a - mi).powi(2);
        vr += (b - mr).powi(2);
        cov += (a - mi) * (b - mr);
    }
    let denom = n - 1.0;
    let var = (vi - 2.0 * r * cov + r * r * vr) / denom / (n * mr * mr);
    var.max(0.0).sqrt()
}

fn aggregate_point(
    outcomes: &[TrialOutcome],
    arch_slot: usize,
    template: CsrPoint,
) -> Result<CsrPoint> {
    let li: Vec<f64> = outcomes.iter().map(|o| f64::from(o.ideal)).collect();
    let lr: Vec<f64> = outcomes
        .iter()
        .map(|o| f64::from(o.constrained[arch_slot]))
        .collect();
    let mean_li = aggregate_stats(&li)?.mean;
    let mean_lr = aggregate_stats(&lr)?.mean;
    let value = sched_sim::csr(mean_li, mean_lr)?;
    let per_trial: Vec<f64> = li
        .iter()
        .zip(&lr)
        .map(|(&i, &r)| if r == 0.0 { 1.0 } else { (i / r).min(1.0) })
        .collect();
    Ok(CsrPoint {
        mean_lr,
        mean_li,
        csr: value.csr,
        latency_ratio: value.latency_ratio,
        stderr_csr: ratio_stderr(&li, &lr),
        mean_trial_csr: aggregate_stats(&per_trial)?.mean,
        ..template
    })
}

/// Runs every grid point of `sweep`.
///
/// Trial `t` of grid point `k` (points enumerated `M`-major, then burst
/// ratio) draws its stream from `derive_trial_rng(seed, k·trials + t)`. The
/// index does not involve the architecture, so both architectures see the
/// same batches.
///
/// Points come back sorted by `(arch, M, burst ratio)`.
pub fn run_csr_sweep(sweep: &CsrSweep) -> Result<CsrReport> {
    sweep.validate()?;
    let trials = u64::from(sweep.trials);
    let mut points = Vec::new();
    let mut violations = Vec::new();

    let mut grid: Vec<(u32, Option<f64>)> = Vec::new();
    match &sweep.source {
        BatchSource::Generated { burst_ratios, .. } => {
            for &m in &sweep.nodes {
                grid.extend(burst_ratios.iter().map(|&p| (m, Some(p))));
            }
        }
        BatchSource::Injected(_) => grid.push((sweep.nodes[0], None)),
    }

    for (point_index, &(m, burst)) in grid.iter().enumerate() {
        let shape = SystemShape::new(m, sweep.qubits_per_node, sweep.comm.total(m))?;
        let first_trial = point_index as u64 * trials;

        let (level, burst_ratio, outcomes) = match (&sweep.source, burst) {
            (BatchSource::Generated { level, .. }, Some(p)) => {
                let spec = WorkloadSpec::new(*level, p, sweep.master_seed)?;
                let outcomes = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let index = first_trial + t;
                        let mut rng = derive_trial_rng(sweep.master_seed, index);
                        let batch = workload::generate(&shape, &spec, &mut rng)?;
                        run_trial(&batch, &sweep.archs, index)
                    })
                    .collect::<Result<Vec<_>>>()?;
                (PointLevel::from(*level), p, outcomes)
            }
            (BatchSource::Injected(batch), _) => {
                let batch = Batch {
                    requests: batch.requests.clone(),
                    shape,
                };
                let once = run_trial(&batch, &sweep.archs, first_trial)?;
                let outcomes = (0..trials)
                    .map(|t| TrialOutcome {
                        index: first_trial + t,
                        ideal: once.ideal,
                        constrained: once.constrained.clone(),
                    })
                    .collect();
                let engaged = batch.len() as f64 / shape.total_qubits() as f64;
                (PointLevel::Injected, engaged, outcomes)
            }
            _ => unreachable!("grid points match the batch source"),
        };

        for (slot, &arch) in sweep.archs.iter().enumerate() {
            for o in &outcomes {
                if o.ideal > o.constrained[slot] {
                    violations.push(OrderingViolation {
                        arch,
                        nodes: m,
                        trial_index: o.index,
                        ideal: o.ideal,
                        constrained: o.constrained[slot],
                    });
                }
            }
            let template = CsrPoint {
                arch,
                level,
                nodes: m,
                qubits_per_node: shape.qubits_per_node,
                comm_qubits: shape.comm_qubits,
                burst_ratio,
                trials: sweep.trials,
                mean_lr: 0.0,
                mean_li: 0.0,
                csr: 0.0,
                latency_ratio: 0.0,
                stderr_csr: 0.0,
                seed: sweep.master_seed,
                mean_trial_csr: 0.0,
            };
            points.push(aggregate_point(&outcomes, slot, template)?);
        }
    }

    points.sort_by(|a, b| {
        (a.arch, a.nodes)
            .cmp(&(b.arch, b.nodes))
            .then(a.burst_ratio.total_cmp(&b.burst_ratio))
    });
    violations.sort_by_key(|v| (v.arch, v.nodes, v.trial_index));
    Ok(CsrReport { points, violations })
}
