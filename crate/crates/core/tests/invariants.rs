//! Cross-module invariants checked on randomized inputs.

use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

use roadgame_core::bounds;
use roadgame_core::cost::{CostMatrix, LinkCostParams, Orientation};
use roadgame_core::linalg::Matrix;
use roadgame_core::network::{Network, PathFlowAssignment, VehicleClass};

fn parallel_assignment(
    links: usize,
    demand_regular: f64,
    demand_smart: f64,
    weights_regular: &[f64],
    weights_smart: &[f64],
) -> (Network, PathFlowAssignment) {
    let net = Network::parallel(links, demand_regular, demand_smart).unwrap();
    let paths = net.enumerate_paths(0, 100).unwrap().paths;
    let mut asg = PathFlowAssignment::default();
    let wr: f64 = weights_regular.iter().sum();
    let ws: f64 = weights_smart.iter().sum();
    for (i, path) in paths.iter().enumerate() {
        asg.push(0, VehicleClass::Regular, path.clone(), demand_regular * weights_regular[i] / wr);
        asg.push(0, VehicleClass::Smart, path.clone(), demand_smart * weights_smart[i] / ws);
    }
    (net, asg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn induced_link_flows_are_feasible(
        links in 1usize..=3,
        demand_regular in 0.1f64..2.0,
        demand_smart in 0.1f64..2.0,
        seed in 0u64..10_000,
    ) {
        let mut rng = StdRng::seed_from_u64(seed);
        let wr: Vec<f64> = (0..links).map(|_| rng.gen_range(0.01..1.0)).collect();
        let ws: Vec<f64> = (0..links).map(|_| rng.gen_range(0.01..1.0)).collect();
        let (net, asg) = parallel_assignment(links, demand_regular, demand_smart, &wr, &ws);
        let z = net.to_link_flows(&asg);
        let report = net.is_feasible(&z, 1e-9).unwrap();
        prop_assert!(report.feasible, "violations: {:?}", report.violations);

        // total mass conservation per class
        let total_r: f64 = (0..links).map(|i| z.regular(i)).sum();
        let total_s: f64 = (0..links).map(|i| z.smart(i)).sum();
        prop_assert!((total_r - demand_regular).abs() <= 1e-9);
        prop_assert!((total_s - demand_smart).abs() <= 1e-9);
    }

    #[test]
    fn link_flow_map_is_linear(
        links in 1usize..=3,
        seed in 0u64..10_000,
    ) {
        let mut rng = StdRng::seed_from_u64(seed);
        let w1: Vec<f64> = (0..links).map(|_| rng.gen_range(0.01..1.0)).collect();
        let w2: Vec<f64> = (0..links).map(|_| rng.gen_range(0.01..1.0)).collect();
        let (net, a1) = parallel_assignment(links, 1.0, 0.5, &w1, &w1);
        let (_, a2) = parallel_assignment(links, 0.7, 1.3, &w2, &w2);
        let mut combined = PathFlowAssignment::default();
        combined.flows.extend(a1.flows.iter().cloned());
        combined.flows.extend(a2.flows.iter().cloned());
        let z1 = net.to_link_flows(&a1);
        let z2 = net.to_link_flows(&a2);
        let zc = net.to_link_flows(&combined);
        for i in 0..zc.len() {
            prop_assert!((zc.as_slice()[i] - z1.as_slice()[i] - z2.as_slice()[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn capacity_between_class_limits(
        m in 0.1f64..5.0,
        m_smart in 0.1f64..5.0,
        x in 0.0f64..10.0,
        y in 0.0f64..10.0,
    ) {
        prop_assume!(x + y > 0.0);
        let p = roadgame_core::cost::CapacityParams::new(m, m_smart, 1.0, 0.0).unwrap();
        let g = p.capacity(x, y).unwrap();
        prop_assert!(g >= m.min(m_smart) - 1e-12);
        prop_assert!(g <= m.max(m_smart) + 1e-12);
    }

    #[test]
    fn assembled_matrices_are_pairwise_separable(
        coeffs in proptest::collection::vec((0.1f64..5.0, 1.0f64..4.0), 1..4),
    ) {
        let links: Vec<LinkCostParams> = coeffs
            .iter()
            .map(|&(a, k)| LinkCostParams::new(0.5, a, k, Orientation::RegularHeavy).unwrap())
            .collect();
        let cm = CostMatrix::assemble(&links).unwrap();
        // blocks are dense even at k = 1, so the result is never Separable
        prop_assert_eq!(
            cm.classify(),
            roadgame_core::cost::SeparabilityClass::PairwiseSeparable
        );
    }
}

#[test]
fn diamond_assignments_stay_feasible() {
    // s -> a -> t, s -> b -> t, plus a direct s -> t link
    let net = Network::new(
        &[(0, 1), (1, 3), (0, 2), (2, 3), (0, 3)],
        vec![roadgame_core::network::OdPair {
            origin: 0,
            destination: 3,
            demand_regular: 1.2,
            demand_smart: 0.8,
        }],
    )
    .unwrap();
    let paths = net.enumerate_paths(0, 100).unwrap().paths;
    assert_eq!(paths.len(), 3);
    let mut rng = StdRng::seed_from_u64(404);
    for _ in 0..50 {
        let mut asg = PathFlowAssignment::default();
        for (class, demand) in [(VehicleClass::Regular, 1.2), (VehicleClass::Smart, 0.8)] {
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = w.iter().sum();
            for (path, wi) in paths.iter().zip(&w) {
                asg.push(0, class, path.clone(), demand * wi / total);
            }
        }
        let z = net.to_link_flows(&asg);
        let report = net.is_feasible(&z, 1e-9).unwrap();
        assert!(report.feasible, "violations: {:?}", report.violations);
    }
    // breaking conservation at the middle node must be caught
    let mut z = net.to_link_flows(&PathFlowAssignment::default());
    z.0[0] = 1.2; // mass enters s -> a but never leaves a
    z.0[9] = 0.8;
    let report = net.is_feasible(&z, 1e-9).unwrap();
    assert!(!report.feasible);
}

#[test]
fn monotone_operator_agrees_with_definition_on_random_pairs() {
    let mut rng = StdRng::seed_from_u64(2024);
    for _ in 0..30 {
        let dim = 2 * rng.gen_range(1..=2usize);
        let mut a = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                a.set(i, j, rng.gen_range(0.0..3.0));
            }
        }
        let cm = CostMatrix::from_link_offsets(a, &vec![0.0; dim / 2]).unwrap();
        let monotone = cm.is_monotone_operator(1e-9);
        let mut violation = None;
        for _ in 0..1000 {
            let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect();
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect();
            let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            let ad = cm.coefficients().matvec(&d);
            let inner: f64 = ad.iter().zip(&d).map(|(a, b)| a * b).sum();
            if inner < -1e-9 {
                violation = Some(inner);
                break;
            }
        }
        if monotone {
            assert!(violation.is_none(), "random counterexample {violation:?}");
        } else {
            let w = cm.monotonicity_witness().expect("witness");
            assert!(w.inner_product < 0.0);
        }
    }
}

#[test]
fn eta_squared_at_least_one_across_thousand_matrices() {
    let mut rng = StdRng::seed_from_u64(77);
    let mut checked = 0;
    while checked < 1000 {
        let n = 2 * rng.gen_range(1..=3usize);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, rng.gen_range(-2.0..2.0));
            }
        }
        match bounds::eta_squared(&m) {
            Ok(eta) => {
                assert!(eta >= 1.0 - 1e-9, "eta^2 = {eta}");
                checked += 1;
            }
            Err(bounds::BoundsError::PNotPositiveDefinite { .. }) => continue,
            Err(e) => panic!("unexpected error: {e}"),
        }
    }
}

/// Heavier randomized consistency sweep; run on demand with
/// `cargo test -p roadgame-core --test invariants -- --ignored`.
#[test]
#[ignore]
fn stress_random_networks_consistency() {
    use roadgame_core::equilibrium::{self, SolverOptions};
    use roadgame_core::optimum::{self, OptimumOptions};

    let eq_opts = SolverOptions::default();
    let opt_opts = OptimumOptions {
        grid_steps: 60,
        grid_point_budget: 120_000,
        bisection_grid_budget: 15_000,
        ..Default::default()
    };
    let mut rng = StdRng::seed_from_u64(999);
    for trial in 0..2000 {
        let links = rng.gen_range(1..=3usize);
        let net = Network::parallel(
            links,
            rng.gen_range(0.05..3.0),
            rng.gen_range(0.05..3.0),
        )
        .unwrap();
        let params: Vec<LinkCostParams> = (0..links)
            .map(|_| {
                let orientation = if rng.gen_bool(0.5) {
                    Orientation::RegularHeavy
                } else {
                    Orientation::SmartHeavy
                };
                LinkCostParams::new(
                    rng.gen_range(0.0..3.0),
                    rng.gen_range(0.05..8.0),
                    rng.gen_range(1.0..3.9),
                    orientation,
                )
                .unwrap()
            })
            .collect();
        let cm = CostMatrix::assemble(&params).unwrap();
        let k = cm.degree_of_asymmetry().unwrap();

        let worst = equilibrium::worst_equilibrium(&net, &cm, &eq_opts).unwrap();
        assert!(worst.equilibrium.vi_residual <= 1e-8, "trial {trial}");
        let solved = equilibrium::solve_equilibrium(&net, &cm, &eq_opts).unwrap();
        let solved_cost = cm.social_cost(&solved.flow).unwrap();
        assert!(
            worst.cost >= solved_cost - 1e-7,
            "trial {trial}: worst {} < solved {solved_cost}",
            worst.cost
        );

        let opt = optimum::social_optimum(&net, &cm, &opt_opts).unwrap();
        assert!(opt.cost <= worst.cost + 1e-8, "trial {trial}");
        let poa = worst.cost / opt.cost;
        assert!(poa >= 1.0 - 1e-9, "trial {trial}: poa {poa}");
        assert!(
            poa <= 4.0 / (4.0 - k) + 1e-6,
            "trial {trial}: poa {poa} vs bound {} (k = {k})",
            4.0 / (4.0 - k)
        );

        if trial % 4 == 0 {
            let bc = optimum::empirical_bicriteria(&net, &cm, worst.cost, &opt_opts).unwrap();
            assert!(
                bc.scale <= 1.0 + k / 4.0 + 1e-6,
                "trial {trial}: bicriteria {} vs bound {}",
                bc.scale,
                1.0 + k / 4.0
            );
        }
    }
}

#[test]
fn sampled_beta_never_exceeds_quarter_k() {
    let mut rng = StdRng::seed_from_u64(55);
    for _ in 0..20 {
        let links = rng.gen_range(1..=2usize);
        let params: Vec<LinkCostParams> = (0..links)
            .map(|_| {
                let orientation = if rng.gen_bool(0.5) {
                    Orientation::RegularHeavy
                } else {
                    Orientation::SmartHeavy
                };
                LinkCostParams::new(
                    rng.gen_range(0.0..2.0),
                    rng.gen_range(0.1..5.0),
                    rng.gen_range(1.0..4.0),
                    orientation,
                )
                .unwrap()
            })
            .collect();
        let cm = CostMatrix::assemble(&params).unwrap();
        let k = cm.degree_of_asymmetry().unwrap();
        for _ in 0..1000 {
            let v: Vec<f64> = (0..2 * links).map(|_| rng.gen_range(0.0..5.0)).collect();
            let beta = bounds::beta_closed_form(&cm, &v).unwrap();
            assert!(
                beta.proof_bound <= k / 4.0 + 1e-9,
                "proof-side beta {} exceeds k/4 = {}",
                beta.proof_bound,
                k / 4.0
            );
        }
    }
}
