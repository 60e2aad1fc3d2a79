//! Analytical cost model for the two distributed architectures.
//!
//! A fully connected `n`-qubit machine is priced at `ε(aⁿ − 1)`. The shared
//! architecture adds a pool of two-qubit gate modules, each priced like a
//! two-qubit machine; the dedicated architecture doubles every node so it can
//! hold as many communication qubits as computing qubits. Both pay `b` per
//! quantum channel and `d` per path of the classical optical switch.
//!
//! Every money value is an `f64`. The plain functions overflow to `+inf` once
//! an exponent passes roughly 709 nats; the `lg_*` variants evaluate the same
//! sums in log domain and stay finite for any grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of the bracket searched by [`calibrate_cost_params`].
pub const CALIBRATION_A_MAX: f64 = 1000.0;
const CALIBRATION_A_MIN: f64 = 1.0 + 1e-9;
const CALIBRATION_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    /// Per-node cost scale in USD.
    pub epsilon: f64,
    /// Growth base of a node's cost in its qubit count.
    pub a: f64,
    /// Cost per quantum channel.
    pub b: f64,
    /// Cost per optical switching path.
    pub d: f64,
}

impl CostParams {
    /// Published calibration: $5,000 for two qubits, $4M for fifty, with
    /// $10,000 per channel and $100 per switching path.
    pub const REFERENCE: CostParams = CostParams {
        epsilon: 21_476.0,
        a: 1.11032,
        b: 10_000.0,
        d: 100.0,
    };

    pub fn new(epsilon: f64, a: f64, b: f64, d: f64) -> Result<Self> {
        let params = CostParams { epsilon, a, b, d };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.a > 1.0 && self.a.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "a must exceed 1, got {}",
                self.a
            )));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) || !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "b and d must be non-negative, got b={} d={}",
                self.b, self.d
            )));
        }
        Ok(())
    }
}

impl Default for CostParams {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// `M` homogeneous nodes of `N` computing qubits, plus a total budget of `Q`
/// communication qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemShape {
    pub nodes: u32,
    pub qubits_per_node: u32,
    pub comm_qubits: u64,
}

impl SystemShape {
    pub fn new(nodes: u32, qubits_per_node: u32, comm_qubits: u64) -> Result<Self> {
        let shape = SystemShape {
            nodes,
            qubits_per_node,
            comm_qubits,
        };
        shape.validate()?;
        Ok(shape)
    }

    /// Shape for cost evaluation, where no communication budget is involved.
    pub fn grid(nodes: u32, qubits_per_node: u32) -> Result<Self> {
        Self::new(nodes, qubits_per_node, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.qubits_per_node == 0 {
            return Err(Error::InvalidShape(format!(
                "need M >= 1 and N >= 1, got M={} N={}",
                self.nodes, self.qubits_per_node
            )));
        }
        Ok(())
    }

    pub fn total_qubits(&self) -> u64 {
        u64::from(self.nodes) * u64::from(self.qubits_per_node)
    }
}

/// At most `x` computing qubits on each of at most `y` nodes engage at once,
/// giving `R = xy/2` simultaneous remote gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairingSpec {
    pub x: u32,
    pub y: u32,
    pub r: u64,
}

impl PairingSpec {
    pub fn from_xy(shape: &SystemShape, x: u32, y: u32) -> Result<Self> {
        if x == 0 || x > shape.qubits_per_node {
            return Err(Error::InvalidPairing(format!(
                "x must lie in 1..={}, got {x}",
                shape.qubits_per_node
            )));
        }
        if y == 0 || y > shape.nodes {
            return Err(Error::InvalidPairing(format!(
                "y must lie in 1..={}, got {y}",
                shape.nodes
            )));
        }
        let engaged = u64::from(x) * u64::from(y);
        if engaged % 2 != 0 {
            return Err(Error::InvalidPairing(format!("x*y must be even, got {engaged}")));
        }
        Ok(PairingSpec { x, y, r: engaged / 2 })
    }
}

/// Communication qubits required by each architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommBudget {
    pub q_entanglement: u64,
    pub q_sqgpu: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticRatio {
    /// `C_S / C_0 ≈ M·a^(N − MN)`
    SqgpuOverMonolithic,
    /// `C_S / C_E ≈ a^(−N)`
    SqgpuOverEntanglement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub epsilon: f64,
    pub a: f64,
}

/// `ln(aⁿ − 1)`, finite for any `n` where the plain power would overflow.
fn ln_pow_m1(a: f64, n: f64) -> f64 {
    let z = n * a.ln();
    if z > 30.0 {
        z + (-(-z).exp()).ln_1p()
    } else {
        z.exp_m1().ln()
    }
}

/// `ε(aⁿ − 1)`: price of a fully connected machine of `n` qubits.
fn machine_cost(params: &CostParams, qubits: f64) -> f64 {
    params.epsilon * (qubits * params.a.ln()).exp_m1()
}

fn ln_machine_cost(params: &CostParams, qubits: f64) -> f64 {
    params.epsilon.ln() + ln_pow_m1(params.a, qubits)
}

/// `ln Σ exp(tᵢ)`; zero-valued terms are passed as `-inf`.
fn ln_sum(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn ln_scaled(count: f64, price: f64) -> f64 {
    (count * price).ln()
}

// Shared architecture: nodes + gate modules + channels + switch.
fn sqgpu_expr(params: &CostParams, shape: &SystemShape, modules: f64, switch_paths: f64) -> f64 {
    let m = f64::from(shape.nodes);
    let mn = shape.total_qubits() as f64;
    m * machine_cost(params, f64::from(shape.qubits_per_node))
        + modules * machine_cost(params, 2.0)
        + mn * params.b
        + switch_paths * params.d
}

fn lg_sqgpu_expr(params: &CostParams, shape: &SystemShape, modules: f64, switch_paths: f64) -> f64 {
    let m = f64::from(shape.nodes);
    let mn = shape.total_qubits() as f64;
    let ln = ln_sum(&[
        m.ln() + ln_machine_cost(params, f64::from(shape.qubits_per_node)),
        modules.ln() + ln_machine_cost(params, 2.0),
        ln_scaled(mn, params.b),
        ln_scaled(switch_paths, params.d),
    ]);
    ln / std::f64::consts::LN_10
}

// Dedicated architecture: each node carries `node_qubits` qubits in total.
fn entanglement_expr(
    params: &CostParams,
    shape: &SystemShape,
    node_qubits: u64,
    switch_paths: f64,
) -> f64 {
    let m = f64::from(shape.nodes);
    let mn = shape.total_qubits() as f64;
    m * machine_cost(params, node_qubits as f64) + mn * params.b + switch_paths * params.d
}

fn lg_entanglement_expr(
    params: &CostParams,
    shape: &SystemShape,
    node_qubits: u64,
    switch_paths: f64,
) -> f64 {
    let m = f64::from(shape.nodes);
    let mn = shape.total_qubits() as f64;
    let ln = ln_sum(&[
        m.ln() + ln_machine_cost(params, node_qubits as f64),
        ln_scaled(mn, params.b),
        ln_scaled(switch_paths, params.d),
    ]);
    ln / std::f64::consts::LN_10
}

fn full_switch_paths(shape: &SystemShape) -> f64 {
    let mn = u128::from(shape.total_qubits());
    (mn * mn) as f64
}

fn require_even(shape: &SystemShape) -> Result<()> {
    shape.validate()?;
    if shape.total_qubits() % 2 != 0 {
        return Err(Error::InvalidShape(format!(
            "full pairing needs an even M*N, got {}",
            shape.total_qubits()
        )));
    }
    Ok(())
}

/// Full-pairing cost of the shared architecture, `MN/2` gate modules.
pub fn cost_sqgpu(shape: &SystemShape, params: &CostParams) -> Result<f64> {
    require_even(shape)?;
    let modules = (shape.total_qubits() / 2) as f64;
    Ok(sqgpu_expr(params, shape, modules, full_switch_paths(shape)))
}

pub fn lg_cost_sqgpu(shape: &SystemShape, params: &CostParams) -> Result<f64> {
    require_even(shape)?;
    let modules = (shape.total_qubits() / 2) as f64;
    Ok(lg_sqgpu_expr(params, shape, modules, full_switch_paths(shape)))
}

/// Full-pairing cost of the dedicated architecture, `2N` qubits per node.
pub fn cost_entanglement(shape: &SystemShape, params: &CostParams) -> Result<f64> {
    shape.validate()?;
    let node_qubits = 2 * u64::from(shape.qubits_per_node);
    Ok(entanglement_expr(params, shape, node_qubits, full_switch_paths(shape)))
}

pub fn lg_cost_entanglement(shape: &SystemShape, params: &CostParams) -> Result<f64> {
    shape.validate()?;
    let node_qubits = 2 * u64::from(shape.qubits_per_node);
    Ok(lg_entanglement_expr(params, shape, node_qubits, full_switch_paths(shape)))
}

/// One fully connected machine with all `MN` qubits. `+inf` once it overflows.
pub fn cost_monolithic(shape: &SystemShape, params: &CostParams) -> Result<f64> {
    shape.validate()?;
    Ok(machine_cost(params, shape.total_qubits() as f64))
}

pub fn lg_cost_monolithic(shape: &SystemShape, params: &CostParams) -> Result<f64> {
    shape.validate()?;
    Ok(ln_machine_cost(params, shape.total_qubits() as f64) / std::f64::consts::LN_10)
}

/// Large-`N` limit of a cost ratio, where only the exponential terms survive.
///
/// Takes raw counts so that degenerate sizes such as `N = 0` can be probed.
pub fn asymptotic_ratio(nodes: u32, qubits_per_node: u32, params: &CostParams, which: AsymptoticRatio) -> f64 {
    let m = f64::from(nodes);
    let n = f64::from(qubits_per_node);
    let ln_a = params.a.ln();
    match which {
        AsymptoticRatio::SqgpuOverMonolithic => (m.ln() + (n - m * n) * ln_a).exp(),
        AsymptoticRatio::SqgpuOverEntanglement => (-n * ln_a).exp(),
    }
}

/// Shared architecture sized for at most `r` simultaneous remote gates.
///
/// The switch term is `d·(MN·2R)`, which matches the full-pairing `(MN)²d`
/// only at `R = MN/2`.
pub fn cost_sqgpu_partial(shape: &SystemShape, r: u64, params: &CostParams) -> Result<f64> {
    shape.validate()?;
    check_r_range(shape, r)?;
    let switch_paths = (u128::from(shape.total_qubits()) * 2 * u128::from(r)) as f64;
    Ok(sqgpu_expr(params, shape, r as f64, switch_paths))
}

fn check_r_range(shape: &SystemShape, r: u64) -> Result<()> {
    let max = shape.total_qubits() / 2;
    if r == 0 || r > max {
        return Err(Error::InvalidPairing(format!("R must lie in 1..={max}, got {r}")));
    }
    Ok(())
}

/// Dedicated architecture with `x` communication qubits on every node.
pub fn cost_entanglement_partial_even(shape: &SystemShape, x: u32, params: &CostParams) -> Result<f64> {
    shape.validate()?;
    if x == 0 || x > shape.qubits_per_node {
        return Err(Error::InvalidPairing(format!(
            "x must lie in 1..={}, got {x}",
            shape.qubits_per_node
        )));
    }
    let mn = u128::from(shape.total_qubits());
    let switch_paths = (mn * u128::from(shape.nodes) * u128::from(x)) as f64;
    let node_qubits = u64::from(shape.qubits_per_node) + u64::from(x);
    Ok(entanglement_expr(params, shape, node_qubits, switch_paths))
}

/// Dedicated architecture when all `r` gates may land on one node: `min(R, N)`
/// communication qubits per node. Above `N` the cost is the full-pairing one.
pub fn cost_entanglement_partial_uneven(shape: &SystemShape, r: u64, params: &CostParams) -> Result<f64> {
    shape.validate()?;
    if r == 0 {
        return Err(Error::InvalidPairing("R must be at least 1".into()));
    }
    let n = u64::from(shape.qubits_per_node);
    if r > n {
        return cost_entanglement(shape, params);
    }
    let mn = u128::from(shape.total_qubits());
    let switch_paths = (mn * u128::from(shape.nodes) * u128::from(r)) as f64;
    Ok(entanglement_expr(params, shape, n + r, switch_paths))
}

/// Evenly distributed engagement: `x` qubits on each of `y` nodes.
pub fn comm_budget_even(nodes: u32, x: u32, y: u32) -> Result<CommBudget> {
    if nodes == 0 {
        return Err(Error::InvalidShape("M must be at least 1".into()));
    }
    if y == 0 || y > nodes {
        return Err(Error::InvalidPairing(format!("y must lie in 1..={nodes}, got {y}")));
    }
    let engaged = u64::from(x) * u64::from(y);
    if engaged % 2 != 0 {
        return Err(Error::InvalidPairing(format!("x*y must be even, got {engaged}")));
    }
    Ok(CommBudget {
        q_entanglement: u64::from(nodes) * u64::from(x),
        q_sqgpu: engaged,
    })
}

/// Unevenly distributed engagement: the dedicated side plateaus at `N` per node.
pub fn comm_budget_uneven(nodes: u32, qubits_per_node: u32, r: u64) -> Result<CommBudget> {
    if nodes == 0 || qubits_per_node == 0 {
        return Err(Error::InvalidShape(format!(
            "need M >= 1 and N >= 1, got M={nodes} N={qubits_per_node}"
        )));
    }
    if r == 0 {
        return Err(Error::InvalidPairing("R must be at least 1".into()));
    }
    Ok(CommBudget {
        q_entanglement: u64::from(nodes) * r.min(u64::from(qubits_per_node)),
        q_sqgpu: 2 * r,
    })
}

/// Fits `(ε, a)` so that `ε(aⁿ − 1)` passes through both `(qubits, price)`
/// points.
///
/// The log of the price ratio is monotone in `a`, so plain bisection on
/// `(1, 1000]` brackets the unique root.
pub fn calibrate_cost_params(point1: (u32, f64), point2: (u32, f64)) -> Result<Calibration> {
    let (lo, hi) = if point1.0 <= point2.0 {
        (point1, point2)
    } else {
        (point2, point1)
    };
    let ((n1, c1), (n2, c2)) = (lo, hi);
    if n1 == n2 {
        return Err(Error::DegenerateInput(format!(
            "both points have {n1} qubits"
        )));
    }
    if n1 < 2 {
        return Err(Error::InvalidInput(format!(
            "qubit counts must be at least 2, got {n1}"
        )));
    }
    if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "prices must be positive, got {c1} and {c2}"
        )));
    }
    if c2 <= c1 {
        return Err(Error::InvalidInput(format!(
            "{n2} qubits priced at {c2} but {n1} qubits at {c1}; price must grow with qubit count"
        )));
    }

    let (n1f, n2f) = (f64::from(n1), f64::from(n2));
    let target = (c2 / c1).ln();
    let residual = |a: f64| ln_pow_m1(a, n2f) - ln_pow_m1(a, n1f) - target;

    let (mut left, mut right) = (CALIBRATION_A_MIN, CALIBRATION_A_MAX);
    if residual(left) > 0.0 {
        return Err(Error::InfeasibleCalibration {
            a_max: CALIBRATION_A_MAX,
            reason: format!(
                "price ratio {} is below the a -> 1 limit {}",
                c2 / c1,
                n2f / n1f
            ),
        });
    }
    if residual(right) < 0.0 {
        return Err(Error::InfeasibleCalibration {
            a_max: CALIBRATION_A_MAX,
            reason: format!("price ratio {} needs a > {CALIBRATION_A_MAX}", c2 / c1),
        });
    }
    for _ in 0..CALIBRATION_ITERATIONS {
        let mid = 0.5 * (left + right);
        if residual(mid) > 0.0 {
            right = mid;
        } else {
            left = mid;
        }
    }
    let a = 0.5 * (left + right);
    let epsilon = c1 / (n1f * a.ln()).exp_m1();
    Ok(Calibration { epsilon, a })
}
