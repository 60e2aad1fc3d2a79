use proptest::prelude::*;
use sqgpu::cost_model::*;

const P: CostParams = CostParams::REFERENCE;

fn shape(m: u32, n: u32) -> SystemShape {
    SystemShape::grid(m, n).unwrap()
}

/// lg10 of each cost, or `None` for C_S where MN is odd.
fn lg_costs(m: u32, n: u32) -> (Option<f64>, f64, f64) {
    let s = shape(m, n);
    let cs = if (m * n) % 2 == 0 { Some(lg_cost_sqgpu(&s, &P).unwrap()) } else { None };
    (cs, lg_cost_entanglement(&s, &P).unwrap(), lg_cost_monolithic(&s, &P).unwrap())
}

#[test]
fn costs_strictly_increase_in_n() {
    for m in 1..=64 {
        for n in 2..300 {
            let (cs0, ce0, c00) = lg_costs(m, n);
            let (_, ce1, c01) = lg_costs(m, n + 1);
            assert!(ce1 > ce0, "C_E not increasing at M={m} N={n}");
            assert!(c01 > c00, "C_0 not increasing at M={m} N={n}");
            // Linear scale too where it is representable.
            let (s0, s1) = (shape(m, n), shape(m, n + 1));
            if m * (n + 1) <= 600 {
                assert!(cost_entanglement(&s1, &P).unwrap() > cost_entanglement(&s0, &P).unwrap());
            }
            // C_S needs even MN; step to the next even total.
            let step = if m % 2 == 0 { 1 } else { 2 };
            if let (Some(a), true) = (cs0, n + step <= 300) {
                let (b, _, _) = lg_costs(m, n + step);
                assert!(b.unwrap() > a, "C_S not increasing at M={m} N={n}");
                let lin_a = cost_sqgpu(&s0, &P).unwrap();
                let lin_b = cost_sqgpu(&shape(m, n + step), &P).unwrap();
                assert!(lin_b > lin_a);
            }
        }
    }
}

#[test]
fn costs_strictly_increase_in_m() {
    for n in 2..=300 {
        for m in 1..64 {
            let (cs0, ce0, c00) = lg_costs(m, n);
            let (_, ce1, c01) = lg_costs(m + 1, n);
            assert!(ce1 > ce0, "C_E not increasing at M={m} N={n}");
            assert!(c01 > c00, "C_0 not increasing at M={m} N={n}");
            let step = if n % 2 == 0 { 1 } else { 2 };
            if let (Some(a), true) = (cs0, m + step <= 64) {
                let (b, _, _) = lg_costs(m + step, n);
                assert!(b.unwrap() > a, "C_S not increasing at M={m} N={n}");
            }
        }
    }
}

#[test]
fn sqgpu_cheaper_than_entanglement_at_six_nodes() {
    for n in 2..=300 {
        let s = shape(6, n);
        let cs = cost_sqgpu(&s, &P).unwrap();
        let ce = cost_entanglement(&s, &P).unwrap();
        assert!(cs < ce, "N={n}: {cs} >= {ce}");
    }
}

#[test]
fn asymptotic_ratios() {
    let s = shape(6, 150);
    let exact = cost_sqgpu(&s, &P).unwrap() / cost_entanglement(&s, &P).unwrap();
    let approx = asymptotic_ratio(6, 150, &P, AsymptoticRatio::SqgpuOverEntanglement);
    assert!((exact / approx - 1.0).abs() < 0.02, "{exact} vs {approx}");

    let s = shape(2, 100);
    let exact = cost_sqgpu(&s, &P).unwrap() / cost_monolithic(&s, &P).unwrap();
    let approx = asymptotic_ratio(2, 100, &P, AsymptoticRatio::SqgpuOverMonolithic);
    assert!((exact / approx - 1.0).abs() < 0.01, "{exact} vs {approx}");
}

#[test]
fn lg_agrees_with_linear_where_finite() {
    for (m, n) in [(1, 2), (6, 5), (6, 50), (10, 60), (2, 100)] {
        let s = shape(m, n);
        let pairs = [
            (cost_sqgpu(&s, &P).unwrap(), lg_cost_sqgpu(&s, &P).unwrap()),
            (cost_entanglement(&s, &P).unwrap(), lg_cost_entanglement(&s, &P).unwrap()),
            (cost_monolithic(&s, &P).unwrap(), lg_cost_monolithic(&s, &P).unwrap()),
        ];
        for (lin, lg) in pairs {
            assert!((lin.log10() - lg).abs() < 1e-12 * lg.abs().max(1.0), "M={m} N={n}: {lin} {lg}");
        }
    }
    // Past the f64 range only the log form survives.
    let big = shape(64, 300);
    assert!(cost_monolithic(&big, &P).unwrap().is_infinite());
    assert!(lg_cost_monolithic(&big, &P).unwrap().is_finite());
}

proptest! {
    #[test]
    fn reductions_are_exact(m in 1u32..=20, half_n in 1u32..=60) {
        let n = 2 * half_n;
        let s = shape(m, n);
        let mn = u64::from(m * n);
        prop_assert_eq!(cost_sqgpu_partial(&s, mn / 2, &P).unwrap(), cost_sqgpu(&s, &P).unwrap());
        prop_assert_eq!(cost_entanglement_partial_even(&s, n, &P).unwrap(), cost_entanglement(&s, &P).unwrap());
        prop_assert_eq!(
            cost_entanglement_partial_uneven(&s, u64::from(n), &P).unwrap(),
            cost_entanglement(&s, &P).unwrap()
        );
    }

    #[test]
    fn even_budget_dominance(m in 2u32..=64, x in 1u32..=100, y_seed in any::<u32>()) {
        let y = 1 + y_seed % m;
        prop_assume!((x * y) % 2 == 0);
        let b = comm_budget_even(m, x, y).unwrap();
        prop_assert!(b.q_sqgpu <= b.q_entanglement);
        prop_assert_eq!(b.q_sqgpu == b.q_entanglement, y == m);
    }

    #[test]
    fn uneven_budget_dominance(m in 2u32..=64, n in 1u32..=100, r_seed in any::<u64>()) {
        let r = 1 + r_seed % (u64::from(m * n) / 2).max(1);
        let b = comm_budget_uneven(m, n, r).unwrap();
        prop_assert!(b.q_sqgpu <= b.q_entanglement);
        // Full engagement (R = MN/2) also needs every qubit on both sides.
        let full = 2 * r == u64::from(m * n);
        prop_assert_eq!(
            b.q_sqgpu == b.q_entanglement,
            (m == 2 && r <= u64::from(n)) || full
        );
    }

    #[test]
    fn calibration_round_trip(
        eps in 100.0f64..1e6,
        a in 1.001f64..1.5,
        n1 in 2u32..40,
        gap in 1u32..60,
    ) {
        let n2 = n1 + gap;
        let price = |n: u32| eps * (a.powi(n as i32) - 1.0);
        let cal = calibrate_cost_params((n1, price(n1)), (n2, price(n2))).unwrap();
        for n in [n1, n2] {
            let back = cal.epsilon * (cal.a.powi(n as i32) - 1.0);
            prop_assert!((back / price(n) - 1.0).abs() < 1e-8, "n={} back={} want={}", n, back, price(n));
        }
    }
}

#[test]
fn calibration_reference_points_round_trip() {
    let cal = calibrate_cost_params((2, 5000.0), (50, 4_000_000.0)).unwrap();
    for (n, price) in [(2, 5000.0), (50, 4_000_000.0)] {
        let back = cal.epsilon * (cal.a.powi(n) - 1.0);
        assert!((back / price - 1.0).abs() < 1e-8);
    }
}
