mod common;

use exchange_net::cli::config::parse_config;
use exchange_net::dynamics::{mean, run, run_observed, simulate, threshold_crossings};
use exchange_net::rng::seeded;
use exchange_net::{DistributionSpec, LatticeSpec, Mode, NodeId, RunConfig, StateVector, Topology};
use proptest::prelude::*;
use rand::Rng;

fn mode_strategy() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("evolutionary"), Just("automaton"), Just("frozen")]
}

fn distribution_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        (0.0f64..10.0, 0.5f64..10.0)
            .prop_map(|(lo, w)| format!(r#"{{"kind": "uniform", "lo": {lo:?}, "hi": {:?}}}"#, lo + w)),
        prop::array::uniform4(0.5f64..9.0).prop_map(|v| format!(
            r#"{{"kind": "quadrant", "values": [{:?}, {:?}, {:?}, {:?}]}}"#,
            v[0], v[1], v[2], v[3]
        )),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        cells in prop::collection::vec((mode_strategy(), 3usize..40, 3usize..40, distribution_strategy()), 1..4),
        seed in 0u64..1_000_000,
        seeds in 1usize..20,
        max_rounds in 1usize..100_000,
        metrics_at in prop::collection::vec(1e-6f64..0.5, 0..3),
    ) {
        let runs: Vec<String> = cells
            .iter()
            .map(|(mode, r, c, dist)| {
                let freeze = if *mode == "frozen" { r#", "freeze_at": 1e-3"# } else { "" };
                format!(r#"{{"mode": "{mode}", "rows": {r}, "cols": {c}, "distribution": {dist}{freeze}}}"#)
            })
            .collect();
        // distinct table keys would need shared thresholds; give every cell the same list
        let text = format!(
            r#"{{"seed": {seed}, "seeds": {seeds}, "max_rounds": {max_rounds}, "metrics_at": {metrics_at:?}, "runs": [{}]}}"#,
            runs.join(", ")
        );
        let config = parse_config(&text).unwrap();
        let again = parse_config(&config.to_json()).unwrap();
        prop_assert_eq!(&config, &again);
        prop_assert_eq!(config.to_json(), again.to_json());
    }

    #[test]
    fn rewiring_preserves_degrees_and_multiset(rows in 3usize..12, cols in 3usize..12, seed: u64, rounds in 1usize..6) {
        let mut t = Topology::moore_lattice(&LatticeSpec::torus(rows, cols)).unwrap();
        let mut before: Vec<NodeId> = t.in_edges().to_vec();
        before.sort_unstable();
        let mut rng = seeded(seed);
        for _ in 0..rounds {
            t.rewire_round(&mut rng);
        }
        prop_assert!(t.validate().is_empty());
        prop_assert!(t.out_degrees().iter().all(|&d| d == 8));
        let mut after = t.in_edges().to_vec();
        after.sort_unstable();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn averaging_conserves_the_mean(rows in 3usize..20, cols in 3usize..20, seed: u64, offset in 0.0f64..1e3) {
        let spec = LatticeSpec::torus(rows, cols);
        let dist = DistributionSpec::Uniform { lo: offset + 1.0, hi: offset + 3.0 };
        let config = RunConfig::new(Mode::Evolutionary).with_seeds(seed, seed ^ 1);
        let out = simulate(&config, &spec, &dist).unwrap();
        prop_assert!(out.trace.mean_drift() < 1e-10, "drift {}", out.trace.mean_drift());
    }

    #[test]
    fn mean_moves_at_most_four_ulps_per_round(side in 3usize..40, seed: u64, automaton: bool, lo in 0.0f64..100.0) {
        let spec = LatticeSpec::square(side);
        let mode = if automaton { Mode::Automaton } else { Mode::Evolutionary };
        let config = RunConfig::new(mode).with_seeds(seed, seed.wrapping_add(1));
        let topology = Topology::moore_lattice(&spec).unwrap();
        let init = DistributionSpec::Uniform { lo, hi: lo + 1.0 }.generate(side, side, &mut seeded(seed)).unwrap();
        let mut prev = init.mean();
        let mut worst = 0.0f64;
        run_observed(&config, topology, init, |view| {
            let m = mean(view.state);
            worst = worst.max(((m - prev) / prev).abs() / f64::EPSILON);
            prev = m;
        })
        .unwrap();
        prop_assert!(worst <= 4.0, "{worst} ulps");
    }

    #[test]
    fn crossings_are_monotone(b in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let thresholds = [0.5, 0.1, 0.05, 0.01];
        let c = threshold_crossings(&b, &thresholds);
        for w in c.windows(2) {
            if let (Some(a), Some(b)) = (w[0].round, w[1].round) {
                prop_assert!(a <= b);
            }
            if w[0].round.is_none() {
                prop_assert!(w[1].round.is_none());
            }
        }
    }
}

#[test]
fn churn_and_rewiring_stress() {
    let mut rng = seeded(99);
    let mut t = Topology::moore_lattice(&LatticeSpec::torus(6, 6)).unwrap();
    for op in 0..10_000 {
        match rng.gen_range(0..10) {
            0..=3 if t.n_nodes() < 80 => {
                t.insert_node(&mut rng).unwrap();
            }
            0..=6 if t.n_nodes() > t.q() + 1 => {
                let v = NodeId::new(rng.gen_range(0..t.n_nodes()));
                t.delete_node(v, &mut rng).unwrap();
            }
            _ => {
                t.rewire_round(&mut rng);
            }
        }
        let violations = t.validate();
        assert!(violations.is_empty(), "op {op}: {violations:?}");
    }
}

#[test]
fn churn_near_the_minimum_size() {
    // ten nodes: every delete forces the complete nine-node graph
    let mut rng = seeded(5);
    let mut t = Topology::moore_lattice(&LatticeSpec::torus(3, 3)).unwrap();
    for _ in 0..2_000 {
        t.insert_node(&mut rng).unwrap();
        let v = NodeId::new(rng.gen_range(0..t.n_nodes()));
        t.delete_node(v, &mut rng).unwrap();
        assert!(t.validate().is_empty());
    }
}

#[test]
fn lattice_is_symmetric_for_many_sizes() {
    for rows in 3..15 {
        for cols in 3..15 {
            let t = Topology::moore_lattice(&LatticeSpec::torus(rows, cols)).unwrap();
            assert!(t.is_symmetric(), "{rows}x{cols}");
            assert!(t.validate().is_empty());
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let spec = LatticeSpec::square(24);
    for mode in [Mode::Evolutionary, Mode::Automaton] {
        let config = RunConfig::new(mode).with_seeds(17, 18);
        let a = simulate(&config, &spec, &DistributionSpec::default()).unwrap();
        let b = simulate(&config, &spec, &DistributionSpec::default()).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.topology, b.topology);
    }
    let config = RunConfig::default().with_seeds(1, 2);
    let other = RunConfig::default().with_seeds(3, 2);
    let a = simulate(&config, &spec, &DistributionSpec::default()).unwrap();
    let b = simulate(&other, &spec, &DistributionSpec::default()).unwrap();
    assert_ne!(a.topology, b.topology);
}

#[test]
fn constant_data_is_degenerate_only_when_zero_mean() {
    let t = Topology::moore_lattice(&LatticeSpec::square(5)).unwrap();
    let config = RunConfig::new(Mode::Automaton);
    let out = run(&config, t.clone(), StateVector::new(vec![2.0; 25]).unwrap()).unwrap();
    assert_eq!(out.trace.b_per_round[0], 0.0);
    assert!(run(&config, t, StateVector::new(vec![0.0; 25]).unwrap()).is_err());
}

#[test]
fn long_rewiring_keeps_the_graph_valid() {
    let mut t = Topology::moore_lattice(&LatticeSpec::square(32)).unwrap();
    let mut rng = seeded(10);
    for _ in 0..10_000 {
        t.rewire_round(&mut rng);
    }
    assert!(t.validate().is_empty());
    assert_eq!(t.edge_count(), 8 * 1024);

    let mut grown = t.clone();
    let u = grown.insert_node(&mut rng).unwrap();
    assert_eq!((grown.n_nodes(), u.index()), (1025, 1024));
    assert!(grown.validate().is_empty());
    for v in [0, 511, 1023] {
        let mut shrunk = t.clone();
        shrunk.delete_node(NodeId::new(v), &mut rng).unwrap();
        assert_eq!(shrunk.n_nodes(), 1023);
        assert!(shrunk.validate().is_empty());
    }
}
