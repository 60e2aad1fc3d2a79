#![allow(dead_code)]

use proptest::prelude::*;
use sqgpu::rng::Xoshiro256StarStar;
use sqgpu::sched_sim::ResourceModel;
use sqgpu::workload::{Batch, QubitAddr};
use sqgpu::SystemShape;

/// Builds a valid batch from raw draws: sources are deduplicated and the
/// target node skips the source node.
pub fn batch_from_raw(m: u32, n: u32, comm: u64, raw: &[(u32, u32)]) -> Batch {
    let shape = SystemShape::new(m, n, comm).unwrap();
    let mut used = vec![false; (m * n) as usize];
    let mut pairs = Vec::new();
    for &(s, t) in raw {
        let s = s % (m * n);
        if used[s as usize] {
            continue;
        }
        used[s as usize] = true;
        let src = QubitAddr::new(s / n, s % n);
        let t = t % ((m - 1) * n);
        let node = t / n;
        let node = if node >= src.node { node + 1 } else { node };
        pairs.push((src, QubitAddr::new(node, t % n)));
    }
    Batch::from_pairs(shape, pairs).unwrap()
}

/// Small random batch plus a model sized to it.
pub fn arb_case(max_requests: usize) -> impl Strategy<Value = (Batch, ResourceModel)> {
    (2u32..=5, 1u32..=3, 0u32..3, prop::collection::vec((any::<u32>(), any::<u32>()), 0..=max_requests))
        .prop_map(|(m, n, model_kind, raw)| {
            let cap = 1 + raw.len() as u32 % 2;
            let batch = batch_from_raw(m, n, u64::from(cap * m), &raw);
            let model = match model_kind {
                0 => ResourceModel::Dedicated { per_node_comm: cap },
                1 => ResourceModel::Shared { modules: 1 + u64::from(cap) },
                _ => ResourceModel::Ideal,
            };
            (batch, model)
        })
}

/// Same shape of case but driven by the crate's generator, for fixed-count
/// fuzz loops.
pub fn fuzz_batch(rng: &mut Xoshiro256StarStar, max_requests: u64) -> Batch {
    let m = 2 + rng.below(4) as u32;
    let n = 1 + rng.below(3) as u32;
    let k = rng.below(max_requests + 1) as usize;
    let raw: Vec<(u32, u32)> = (0..k).map(|_| (rng.next_u64() as u32, rng.next_u64() as u32)).collect();
    batch_from_raw(m, n, u64::from(m), &raw)
}

pub fn max_qubit_degree(batch: &Batch) -> u32 {
    let mut deg = std::collections::HashMap::new();
    for r in &batch.requests {
        *deg.entry(r.src).or_insert(0u32) += 1;
        *deg.entry(r.dst).or_insert(0u32) += 1;
    }
    deg.values().copied().max().unwrap_or(0)
}
