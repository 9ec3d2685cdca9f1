mod common;

use common::{averaging_matrix, matrix_power_apply, random_topology, scalar_bfs};
use exchange_net::analytics::{lattice_metrics_oracle, metrics_report, shortest_path_stats};
use exchange_net::dynamics::{average_into, average_into_sequential, average_step};
use exchange_net::rng::seeded;
use exchange_net::{LatticeSpec, PathMethod, StateVector, Topology};
use rand::Rng;

#[test]
fn averaging_matches_dense_matrix_power() {
    let mut rng = seeded(2024);
    for case in 0..120 {
        let t = random_topology(&mut rng, 64);
        assert!(t.validate().is_empty(), "case {case}");
        let x: Vec<f64> = (0..t.n_nodes()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let k = rng.gen_range(1..=50);
        let expected = matrix_power_apply(&averaging_matrix(&t), &x, k);
        let mut s = StateVector::new(x).unwrap();
        for _ in 0..k {
            s = average_step(&t, &s).unwrap();
        }
        for (a, b) in s.values().iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-12, "case {case}: {a} vs {b}");
        }
    }
}

#[test]
fn averaging_matrix_is_doubly_stochastic() {
    let mut rng = seeded(7);
    for _ in 0..20 {
        let m = averaging_matrix(&random_topology(&mut rng, 64));
        for i in 0..m.nrows() {
            assert!((m.row(i).sum() - 1.0).abs() < 1e-14);
            assert!((m.column(i).sum() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn parallel_and_sequential_kernels_agree_bitwise() {
    let mut t = Topology::moore_lattice(&LatticeSpec::square(90)).unwrap();
    let mut rng = seeded(3);
    t.rewire_round(&mut rng);
    let x: Vec<f64> = (0..t.n_nodes()).map(|_| rng.gen()).collect();
    let (mut a, mut b) = (vec![0.0; x.len()], vec![0.0; x.len()]);
    average_into_sequential(&t, &x, &mut a);
    average_into(&t, &x, &mut b);
    assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
}

#[test]
fn bitset_bfs_matches_scalar_bfs() {
    let mut rng = seeded(11);
    for _ in 0..40 {
        let t = random_topology(&mut rng, 64);
        let stats = shortest_path_stats(&t, PathMethod::Exact);
        let sources: Vec<usize> = (0..t.n_nodes()).collect();
        let (max, sum, reached) = scalar_bfs(&t, &sources);
        assert_eq!(stats.max_distance, max);
        assert_eq!(stats.reachable_pairs, reached);
        assert!((stats.cpl - sum as f64 / reached as f64).abs() < 1e-12);
    }
    // larger graph spanning several 64-source batches
    let mut t = Topology::moore_lattice(&LatticeSpec::torus(20, 17)).unwrap();
    t.rewire_round(&mut rng);
    let stats = shortest_path_stats(&t, PathMethod::Exact);
    let sources: Vec<usize> = (0..t.n_nodes()).collect();
    let (max, sum, reached) = scalar_bfs(&t, &sources);
    assert_eq!((stats.max_distance, stats.reachable_pairs), (max, reached));
    assert!((stats.cpl - sum as f64 / reached as f64).abs() < 1e-12);
}

#[test]
fn torus_traversal_matches_closed_form() {
    for (m, n) in [(3, 3), (3, 7), (5, 5), (6, 9), (12, 12), (16, 5), (32, 32)] {
        let t = Topology::moore_lattice(&LatticeSpec::torus(m, n)).unwrap();
        let stats = shortest_path_stats(&t, PathMethod::Exact);
        let (d, cpl) = lattice_metrics_oracle(m, n).unwrap();
        assert_eq!(stats.diameter(), Some(d), "{m}x{n}");
        assert!((stats.cpl - cpl).abs() < 1e-12, "{m}x{n}: {} vs {cpl}", stats.cpl);
    }
}

#[test]
fn auto_metrics_match_exact_below_the_budget() {
    // the in-run metrics path and a direct call produce the same report
    let mut t = Topology::moore_lattice(&LatticeSpec::square(20)).unwrap();
    let mut rng = seeded(1);
    for _ in 0..4 {
        t.rewire_round(&mut rng);
    }
    let auto = metrics_report(
        &t,
        PathMethod::Auto {
            node_budget: 1_000,
            sample_size: 10,
            seed: 0,
        },
    );
    let exact = metrics_report(&t, PathMethod::Exact);
    assert_eq!(auto, exact);
}
