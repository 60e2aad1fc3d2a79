//! Seeded generation of bursty remote-gate batches.
//!
//! A batch is every remote gate request raised at one time instant. Under
//! qubit-level burstiness each computing qubit independently raises a request
//! with probability `p`; under node-level burstiness each node does, and then
//! every one of its qubits raises one. Targets are drawn uniformly from the
//! qubits of the other nodes with no exclusion, so one qubit can be the target
//! of several requests. The scheduler serializes those.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost_model::SystemShape;
use crate::error::{Error, Result};
use crate::rng::{bernoulli_threshold, Xoshiro256StarStar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct QubitAddr {
    pub node: u32,
    pub qubit: u32,
}

impl QubitAddr {
    pub fn new(node: u32, qubit: u32) -> Self {
        QubitAddr { node, qubit }
    }

    /// Dense index `node * N + qubit`.
    pub fn index(&self, qubits_per_node: u32) -> usize {
        self.node as usize * qubits_per_node as usize + self.qubit as usize
    }
}

impl From<[u32; 2]> for QubitAddr {
    fn from([node, qubit]: [u32; 2]) -> Self {
        QubitAddr { node, qubit }
    }
}

impl From<QubitAddr> for [u32; 2] {
    fn from(q: QubitAddr) -> Self {
        [q.node, q.qubit]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateRequest {
    pub seq: u64,
    pub src: QubitAddr,
    pub dst: QubitAddr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub requests: Vec<GateRequest>,
    pub shape: SystemShape,
}

impl Batch {
    pub fn empty(shape: SystemShape) -> Self {
        Batch {
            requests: Vec::new(),
            shape,
        }
    }

    /// Builds a batch from `(src, dst)` pairs, numbering them in order.
    pub fn from_pairs(shape: SystemShape, pairs: impl IntoIterator<Item = (QubitAddr, QubitAddr)>) -> Result<Self> {
        let requests = pairs
            .into_iter()
            .enumerate()
            .map(|(seq, (src, dst))| GateRequest {
                seq: seq as u64,
                src,
                dst,
            })
            .collect();
        let batch = Batch { requests, shape };
        batch.validate()?;
        Ok(batch)
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        let (m, n) = (self.shape.nodes, self.shape.qubits_per_node);
        let mut sources = HashSet::with_capacity(self.requests.len());
        let mut seqs = HashSet::with_capacity(self.requests.len());
        for req in &self.requests {
            for q in [req.src, req.dst] {
                if q.node >= m || q.qubit >= n {
                    return Err(Error::InvalidInput(format!(
                        "request {} addresses qubit ({}, {}) outside M={m} N={n}",
                        req.seq, q.node, q.qubit
                    )));
                }
            }
            if req.src.node == req.dst.node {
                return Err(Error::InvalidInput(format!(
                    "request {} is local to node {}",
                    req.seq, req.src.node
                )));
            }
            if !sources.insert(req.src) {
                return Err(Error::InvalidInput(format!(
                    "qubit ({}, {}) is the source of more than one request",
                    req.src.node, req.src.qubit
                )));
            }
            if !seqs.insert(req.seq) {
                return Err(Error::InvalidInput(format!("duplicate seq {}", req.seq)));
            }
        }
        Ok(())
    }

    /// One JSON object per line: `{"seq":0,"src":[0,1],"dst":[2,3]}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for req in &self.requests {
            serde_json::to_writer(&mut out, req)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R, shape: SystemShape) -> Result<Self> {
        let mut requests = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let req: GateRequest = serde_json::from_str(&line).map_err(|e| {
                Error::InvalidInput(format!("batch line {}: {e}", lineno + 1))
            })?;
            requests.push(req);
        }
        let batch = Batch { requests, shape };
        batch.validate()?;
        Ok(batch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BurstLevel {
    Qubit,
    Node,
}

impl fmt::Display for BurstLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BurstLevel::Qubit => "qubit",
            BurstLevel::Node => "node",
        })
    }
}

impl FromStr for BurstLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubit" => Ok(BurstLevel::Qubit),
            "node" => Ok(BurstLevel::Node),
            other => Err(Error::Config(format!("unknown burst level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub level: BurstLevel,
    pub burst_ratio: f64,
    pub master_seed: u64,
}

impl WorkloadSpec {
    pub fn new(level: BurstLevel, burst_ratio: f64, master_seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&burst_ratio) {
            return Err(Error::InvalidInput(format!(
                "burst ratio must lie in [0, 1], got {burst_ratio}"
            )));
        }
        Ok(WorkloadSpec {
            level,
            burst_ratio,
            master_seed,
        })
    }
}

fn check_generation(shape: &SystemShape, spec: &WorkloadSpec, level: BurstLevel) -> Result<()> {
    shape.validate()?;
    if shape.nodes < 2 {
        return Err(Error::InvalidShape(format!(
            "remote gates need at least two nodes, got M={}",
            shape.nodes
        )));
    }
    if spec.level != level {
        return Err(Error::InvalidInput(format!(
            "{} generator called with a {}-level spec",
            level, spec.level
        )));
    }
    if !(0.0..=1.0).contains(&spec.burst_ratio) {
        return Err(Error::InvalidInput(format!(
            "burst ratio must lie in [0, 1], got {}",
            spec.burst_ratio
        )));
    }
    Ok(())
}

/// Uniform target among the `(M − 1)·N` qubits not on `src_node`.
fn draw_remote(rng: &mut Xoshiro256StarStar, shape: &SystemShape, src_node: u32) -> QubitAddr {
    let n = u64::from(shape.qubits_per_node);
    let k = rng.below((u64::from(shape.nodes) - 1) * n);
    let slot = (k / n) as u32;
    let node = if slot < src_node { slot } else { slot + 1 };
    QubitAddr::new(node, (k % n) as u32)
}

/// Qubits are visited node-major; each raises a request with probability `p`.
pub fn gen_qubit_level(shape: &SystemShape, spec: &WorkloadSpec, rng: &mut Xoshiro256StarStar) -> Result<Batch> {
    check_generation(shape, spec, BurstLevel::Qubit)?;
    let threshold = bernoulli_threshold(spec.burst_ratio);
    let mut requests = Vec::new();
    for node in 0..shape.nodes {
        for qubit in 0..shape.qubits_per_node {
            if rng.bernoulli(threshold) {
                let dst = draw_remote(rng, shape, node);
                requests.push(GateRequest {
                    seq: requests.len() as u64,
                    src: QubitAddr::new(node, qubit),
                    dst,
                });
            }
        }
    }
    Ok(Batch {
        requests,
        shape: *shape,
    })
}

/// Each node bursts with probability `p`; a bursting node engages all `N`
/// of its qubits.
pub fn gen_node_level(shape: &SystemShape, spec: &WorkloadSpec, rng: &mut Xoshiro256StarStar) -> Result<Batch> {
    check_generation(shape, spec, BurstLevel::Node)?;
    let threshold = bernoulli_threshold(spec.burst_ratio);
    let mut requests = Vec::new();
    for node in 0..shape.nodes {
        if !rng.bernoulli(threshold) {
            continue;
        }
        for qubit in 0..shape.qubits_per_node {
            let dst = draw_remote(rng, shape, node);
            requests.push(GateRequest {
                seq: requests.len() as u64,
                src: QubitAddr::new(node, qubit),
                dst,
            });
        }
    }
    Ok(Batch {
        requests,
        shape: *shape,
    })
}

pub fn generate(shape: &SystemShape, spec: &WorkloadSpec, rng: &mut Xoshiro256StarStar) -> Result<Batch> {
    match spec.level {
        BurstLevel::Qubit => gen_qubit_level(shape, spec, rng),
        BurstLevel::Node => gen_node_level(shape, spec, rng),
    }
}
