//! Discrete-time scheduling of a request batch under limited communication
//! resources.
//!
//! Every remote gate takes one step. At each step the pending requests are
//! scanned in `seq` order and a request is started iff both of its qubits are
//! idle this step and the resource model still has room:
//!
//! * dedicated: one communication qubit on the source node and one on the
//!   target node,
//! * shared: one two-qubit gate module from the common pool,
//! * ideal: nothing.
//!
//! Everything is released at the end of the step.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost_model::SystemShape;
use crate::error::{Error, Result};
use crate::workload::{Batch, GateRequest};

/// Largest batch the exhaustive oracle accepts.
pub const BRUTEFORCE_MAX_REQUESTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Dedicated,
    Shared,
}

impl Architecture {
    pub const ALL: [Architecture; 2] = [Architecture::Dedicated, Architecture::Shared];

    /// Resource model for a total budget of `Q` communication qubits.
    pub fn resource_model(self, shape: &SystemShape) -> Result<ResourceModel> {
        match self {
            Architecture::Dedicated => ResourceModel::dedicated_from_budget(shape),
            Architecture::Shared => Ok(ResourceModel::shared_from_budget(shape)),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Dedicated => "dedicated",
            Architecture::Shared => "shared",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dedicated" => Ok(Architecture::Dedicated),
            "shared" => Ok(Architecture::Shared),
            other => Err(Error::Config(format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ResourceModel {
    Dedicated { per_node_comm: u32 },
    Shared { modules: u64 },
    Ideal,
}

impl ResourceModel {
    /// `Q / M` communication qubits on every node; `Q` must split evenly.
    pub fn dedicated_from_budget(shape: &SystemShape) -> Result<Self> {
        let m = u64::from(shape.nodes);
        if m == 0 || shape.comm_qubits % m != 0 {
            return Err(Error::Config(format!(
                "Q={} does not split evenly over M={} nodes",
                shape.comm_qubits, shape.nodes
            )));
        }
        let per_node = u32::try_from(shape.comm_qubits / m)
            .map_err(|_| Error::Config(format!("Q={} is too large", shape.comm_qubits)))?;
        Ok(ResourceModel::Dedicated {
            per_node_comm: per_node,
        })
    }

    /// Two communication qubits per gate module.
    pub fn shared_from_budget(shape: &SystemShape) -> Self {
        ResourceModel::Shared {
            modules: shape.comm_qubits / 2,
        }
    }

    fn has_capacity(&self) -> bool {
        match *self {
            ResourceModel::Dedicated { per_node_comm } => per_node_comm > 0,
            ResourceModel::Shared { modules } => modules > 0,
            ResourceModel::Ideal => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub makespan: u32,
    /// `seq` numbers started at each step, in scan order.
    pub steps: Vec<Vec<u64>>,
    /// Busiest step's share of the model's capacity. For the ideal model the
    /// capacity is taken as `⌊MN/2⌋` simultaneous gates.
    pub peak_utilization: f64,
}

fn seq_order(batch: &Batch) -> Vec<&GateRequest> {
    let mut order: Vec<&GateRequest> = batch.requests.iter().collect();
    order.sort_by_key(|r| r.seq);
    order
}

/// Greedy FIFO schedule of `batch`.
pub fn simulate(batch: &Batch, model: &ResourceModel) -> Result<ScheduleResult> {
    let shape = &batch.shape;
    if batch.is_empty() {
        return Ok(ScheduleResult {
            makespan: 0,
            steps: Vec::new(),
            peak_utilization: 0.0,
        });
    }
    if !model.has_capacity() {
        return Err(Error::Infeasible(format!(
            "{model:?} cannot run any of {} requests",
            batch.len()
        )));
    }

    let n = shape.qubits_per_node;
    let mut pending = seq_order(batch);
    // Step number (1-based) in which each qubit was last claimed.
    let mut qubit_step = vec![0u32; shape.total_qubits() as usize];
    let mut node_load = vec![0u32; shape.nodes as usize];
    let mut steps = Vec::new();
    let mut peak_ops = 0usize;

    while !pending.is_empty() {
        let step = steps.len() as u32 + 1;
        node_load.iter_mut().for_each(|c| *c = 0);
        let mut started = Vec::new();
        let mut waiting = Vec::with_capacity(pending.len());

        for req in pending {
            let (s, d) = (req.src.index(n), req.dst.index(n));
            let qubits_free = qubit_step[s] != step && qubit_step[d] != step;
            let room = qubits_free
                && match *model {
                    ResourceModel::Dedicated { per_node_comm } => {
                        node_load[req.src.node as usize] < per_node_comm
                            && node_load[req.dst.node as usize] < per_node_comm
                    }
                    ResourceModel::Shared { modules } => (started.len() as u64) < modules,
                    ResourceModel::Ideal => true,
                };
            if room {
                qubit_step[s] = step;
                qubit_step[d] = step;
                node_load[req.src.node as usize] += 1;
                node_load[req.dst.node as usize] += 1;
                started.push(req.seq);
            } else {
                waiting.push(req);
            }
        }

        peak_ops = peak_ops.max(started.len());
        steps.push(started);
        pending = waiting;
    }

    let capacity = match *model {
        ResourceModel::Dedicated { per_node_comm } => {
            f64::from(per_node_comm) * f64::from(shape.nodes) / 2.0
        }
        ResourceModel::Shared { modules } => modules as f64,
        ResourceModel::Ideal => (shape.total_qubits() / 2).max(1) as f64,
    };
    Ok(ScheduleResult {
        makespan: steps.len() as u32,
        steps,
        peak_utilization: peak_ops as f64 / capacity,
    })
}

/// Makespan with unlimited communication resources, same greedy policy.
pub fn ideal_latency(batch: &Batch) -> u32 {
    simulate(batch, &ResourceModel::Ideal)
        .expect("the ideal model always has capacity")
        .makespan
}

/// Whether `requests` may all run in one step under `model`.
pub fn step_is_feasible(requests: &[&GateRequest], model: &ResourceModel) -> bool {
    let mut qubits = HashSet::new();
    for r in requests {
        if !qubits.insert(r.src) || !qubits.insert(r.dst) {
            return false;
        }
    }
    match *model {
        ResourceModel::Ideal => true,
        ResourceModel::Shared { modules } => requests.len() as u64 <= modules,
        ResourceModel::Dedicated { per_node_comm } => {
            let mut load: HashMap<u32, u32> = HashMap::new();
            for r in requests {
                *load.entry(r.src.node).or_default() += 1;
                *load.entry(r.dst.node).or_default() += 1;
            }
            load.values().all(|&c| c <= per_node_comm)
        }
    }
}

/// Minimum makespan over every partition of the batch into feasible steps.
///
/// Exponential; refuses batches above [`BRUTEFORCE_MAX_REQUESTS`].
pub fn optimal_makespan_bruteforce(batch: &Batch, model: &ResourceModel) -> Result<u32> {
    let n = batch.len();
    if n > BRUTEFORCE_MAX_REQUESTS {
        return Err(Error::BatchTooLarge {
            size: n,
            max: BRUTEFORCE_MAX_REQUESTS,
        });
    }
    if n == 0 {
        return Ok(0);
    }
    if !step_is_feasible(&[&batch.requests[0]], model) {
        return Err(Error::Infeasible(format!(
            "{model:?} cannot run a single request"
        )));
    }

    struct Search<'a> {
        requests: &'a [GateRequest],
        model: &'a ResourceModel,
        steps: Vec<Vec<&'a GateRequest>>,
        best: usize,
    }

    impl<'a> Search<'a> {
        fn run(&mut self, next: usize) {
            if self.steps.len() >= self.best {
                return;
            }
            if next == self.requests.len() {
                self.best = self.steps.len();
                return;
            }
            let req = &self.requests[next];
            for s in 0..self.steps.len() {
                self.steps[s].push(req);
                if step_is_feasible(&self.steps[s], self.model) {
                    self.run(next + 1);
                }
                self.steps[s].pop();
            }
            // Opening a step is symmetric across positions; only one new step.
            if self.steps.len() + 1 < self.best {
                self.steps.push(vec![req]);
                self.run(next + 1);
                self.steps.pop();
            }
        }
    }

    let mut search = Search {
        requests: &batch.requests,
        model,
        steps: Vec::new(),
        best: n + 1,
    };
    search.run(0);
    Ok(search.best as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsrValue {
    /// `min(1, L_i / L_r)`: 1 means resource limits cost nothing.
    pub csr: f64,
    /// `L_r / L_i`, the raw latency inflation.
    pub latency_ratio: f64,
}

pub fn csr(mean_li: f64, mean_lr: f64) -> Result<CsrValue> {
    if !(mean_li >= 0.0 && mean_lr >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "latencies must be non-negative, got L_i={mean_li} L_r={mean_lr}"
        )));
    }
    if mean_lr == 0.0 {
        if mean_li > 0.0 {
            return Err(Error::InvalidInput(format!(
                "realistic latency is zero but ideal latency is {mean_li}"
            )));
        }
        return Ok(CsrValue {
            csr: 1.0,
            latency_ratio: 1.0,
        });
    }
    let latency_ratio = if mean_li == 0.0 {
        f64::INFINITY
    } else {
        mean_lr / mean_li
    };
    Ok(CsrValue {
        csr: (mean_li / mean_lr).min(1.0),
        latency_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::QubitAddr;

    fn q(node: u32, qubit: u32) -> QubitAddr {
        QubitAddr::new(node, qubit)
    }

    fn disjoint_pairs(count: u32, m: u32, n: u32, q_total: u64) -> Batch {
        let shape = SystemShape::new(m, n, q_total).unwrap();
        Batch::from_pairs(shape, (0..count).map(|i| (q(0, i), q(1, i)))).unwrap()
    }

    #[test]
    fn fifty_disjoint_pairs() {
        let b = disjoint_pairs(50, 10, 50, 100);
        let dedicated = ResourceModel::dedicated_from_budget(&b.shape).unwrap();
        assert_eq!(dedicated, ResourceModel::Dedicated { per_node_comm: 10 });
        assert_eq!(simulate(&b, &dedicated).unwrap().makespan, 5);
        let shared = ResourceModel::shared_from_budget(&b.shape);
        assert_eq!(shared, ResourceModel::Shared { modules: 50 });
        assert_eq!(simulate(&b, &shared).unwrap().makespan, 1);
        assert_eq!(ideal_latency(&b), 1);
    }

    #[test]
    fn empty_batch() {
        let b = disjoint_pairs(0, 4, 4, 40);
        for model in [ResourceModel::Ideal, ResourceModel::Shared { modules: 0 }, ResourceModel::Dedicated { per_node_comm: 0 }] {
            assert_eq!(simulate(&b, &model).unwrap().makespan, 0);
            assert_eq!(optimal_makespan_bruteforce(&b, &model).unwrap(), 0);
        }
        assert_eq!(ideal_latency(&b), 0);
    }

    #[test]
    fn star_serializes_on_target() {
        let shape = SystemShape::new(4, 2, 0).unwrap();
        let b = Batch::from_pairs(shape, [(q(0, 0), q(1, 0)), (q(2, 0), q(1, 0)), (q(3, 0), q(1, 0))]).unwrap();
        let r = simulate(&b, &ResourceModel::Ideal).unwrap();
        assert_eq!(r.makespan, 3);
        assert_eq!(r.steps, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(optimal_makespan_bruteforce(&b, &ResourceModel::Ideal).unwrap(), 3);
    }

    #[test]
    fn path_and_triangle() {
        // A=(0,0) B=(1,0) C=(2,0) D=(3,0)
        let shape = SystemShape::new(4, 1, 0).unwrap();
        let path = Batch::from_pairs(shape, [(q(0, 0), q(1, 0)), (q(1, 0), q(2, 0)), (q(2, 0), q(3, 0))]).unwrap();
        let r = simulate(&path, &ResourceModel::Ideal).unwrap();
        assert_eq!(r.steps, vec![vec![0, 2], vec![1]]);
        assert_eq!(optimal_makespan_bruteforce(&path, &ResourceModel::Ideal).unwrap(), 2);

        let tri = Batch::from_pairs(shape, [(q(0, 0), q(1, 0)), (q(1, 0), q(2, 0)), (q(2, 0), q(0, 0))]).unwrap();
        assert_eq!(ideal_latency(&tri), 3);
        assert_eq!(optimal_makespan_bruteforce(&tri, &ResourceModel::Ideal).unwrap(), 3);
    }

    #[test]
    fn oracle_on_six_pairs_two_per_node() {
        let b = disjoint_pairs(6, 10, 50, 20);
        let model = ResourceModel::Dedicated { per_node_comm: 2 };
        assert_eq!(optimal_makespan_bruteforce(&b, &model).unwrap(), 3);
        assert_eq!(simulate(&b, &model).unwrap().makespan, 3);
    }

    #[test]
    fn oracle_refuses_large_batches() {
        let b = disjoint_pairs(11, 2, 11, 4);
        assert!(matches!(
            optimal_makespan_bruteforce(&b, &ResourceModel::Ideal),
            Err(Error::BatchTooLarge { size: 11, max: 10 })
        ));
    }

    #[test]
    fn zero_capacity_is_infeasible() {
        let b = disjoint_pairs(3, 2, 3, 0);
        assert!(matches!(simulate(&b, &ResourceModel::Shared { modules: 0 }), Err(Error::Infeasible(_))));
        assert!(matches!(simulate(&b, &ResourceModel::Dedicated { per_node_comm: 0 }), Err(Error::Infeasible(_))));
        assert!(matches!(
            optimal_makespan_bruteforce(&b, &ResourceModel::Shared { modules: 0 }),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn uneven_budget_rejected_for_dedicated() {
        let shape = SystemShape::new(3, 5, 10).unwrap();
        assert!(ResourceModel::dedicated_from_budget(&shape).is_err());
        assert_eq!(ResourceModel::shared_from_budget(&shape), ResourceModel::Shared { modules: 5 });
        let odd = SystemShape::new(3, 5, 11).unwrap();
        assert_eq!(ResourceModel::shared_from_budget(&odd), ResourceModel::Shared { modules: 5 });
    }

    #[test]
    fn peak_utilization() {
        let b = disjoint_pairs(50, 10, 50, 100);
        let r = simulate(&b, &ResourceModel::Shared { modules: 50 }).unwrap();
        assert_eq!(r.peak_utilization, 1.0);
        // 10 ops per step out of a 10*10/2 = 50 pair capacity.
        let r = simulate(&b, &ResourceModel::Dedicated { per_node_comm: 10 }).unwrap();
        assert_eq!(r.peak_utilization, 0.2);
    }

    #[test]
    fn csr_values() {
        let v = csr(1.0, 5.0).unwrap();
        assert_eq!((v.csr, v.latency_ratio), (0.2, 5.0));
        assert_eq!(csr(3.5, 3.5).unwrap().csr, 1.0);
        let v = csr(0.0, 0.0).unwrap();
        assert_eq!((v.csr, v.latency_ratio), (1.0, 1.0));
        assert!(csr(-1.0, 2.0).is_err());
        assert!(csr(1.0, -2.0).is_err());
        assert_eq!(csr(0.0, 2.0).unwrap().latency_ratio, f64::INFINITY);
    }
}
