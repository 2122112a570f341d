mod common;

use common::*;
use proptest::prelude::*;
use wsnloc::clustering::Clustering;
use wsnloc::matrices::sensor_components;
use wsnloc::metrics::{message_accounting, rmse, squared_error_sum, MethodKind};
use wsnloc::network::Node;
use wsnloc::netgen::sample_noise;
use wsnloc::rng::Stream;
use wsnloc::solver::*;
use wsnloc::{Network, ProblemMatrices};

fn net_strategy() -> impl Strategy<Value = Network> {
    (0u64..10_000, 10usize..45, 2usize..6).prop_map(|(seed, k, m)| instance(seed, k, m, 0.45, 0.02))
}

fn clusterings(net: &Network, seed: u64) -> Vec<Clustering> {
    let big_n = net.n_sensors();
    let mut all = vec![Clustering::whole(big_n), Clustering::singleton(big_n), Clustering::colored(net)];
    // hop distances run over sensor links only
    if sensor_components(net) == 1 {
        all.push(Clustering::geographical(net, (big_n / 4).max(1), seed).unwrap());
    }
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sweeps_descend_and_keep_u_feasible(net in net_strategy(), seed in 0u64..1000) {
        let mut rng = Stream::new(seed, 7, 0);
        for clustering in clusterings(&net, seed) {
            let solver = AmSolver::new(&net, &clustering).unwrap();
            let x0 = uniform_vec(&mut rng, net.n_sensors() * 2, 0.01);
            let mut state = SolverState { x: x0, u: vec![0.0; net.n_edges() * 2], iter: 0, history: vec![] };
            for _ in 0..30 {
                solver.sweep(&net, &mut state, true, false);
                for u in state.u.chunks(2) {
                    let len = (u[0] * u[0] + u[1] * u[1]).sqrt();
                    prop_assert!(len == 0.0 || (len - 1.0).abs() <= 1e-15);
                }
            }
            for r in &state.history {
                prop_assert!(r.x_decrease >= -1e-12, "{:?}", r);
                prop_assert!(r.u_decrease >= -1e-12, "{:?}", r);
                let slack = 1e-12 * (1.0 + r.g_start.abs());
                prop_assert!(r.g_after_x <= r.g_start + slack && r.g_after_u <= r.g_after_x + slack);
            }
        }
    }

    #[test]
    fn coloring_is_a_valid_small_partition(net in net_strategy()) {
        let colored = Clustering::colored(&net);
        colored.validate(&net).unwrap();
        prop_assert!(colored.is_independent(&net));
        for e in net.sensor_edges() {
            prop_assert_ne!(colored.assignment()[e.i], colored.assignment()[e.j]);
        }
        let delta = (0..net.n_sensors()).map(|i| net.sensor_degree(i)).max().unwrap_or(0);
        prop_assert!(colored.len() <= delta + 1);
    }

    #[test]
    fn geographical_clusters_partition_deterministically(net in net_strategy(), q_frac in 0.0f64..1.0, seed in 0u64..1000) {
        prop_assume!(sensor_components(&net) == 1);
        let q = 1 + ((net.n_sensors() - 1) as f64 * q_frac) as usize;
        let c = Clustering::geographical(&net, q, seed).unwrap();
        prop_assert_eq!(c.len(), q);
        let mut seen = vec![0usize; net.n_sensors()];
        for cluster in c.clusters() {
            prop_assert!(!cluster.is_empty());
            for &i in cluster {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        for (id, &h) in c.heads().unwrap().iter().enumerate() {
            prop_assert_eq!(c.assignment()[h], id);
        }
        prop_assert_eq!(Clustering::geographical(&net, q, seed).unwrap(), c);
    }

    #[test]
    fn rmse_squared_times_r_is_total_squared_error(r in 1usize..8, seed in 0u64..1000) {
        let mut rng = Stream::new(seed, 8, 0);
        let truth = uniform_vec(&mut rng, 20, 1.0);
        let est: Vec<Vec<f64>> = (0..r).map(|_| uniform_vec(&mut rng, 20, 1.0)).collect();
        let value = rmse(&est, Some(&truth)).unwrap();
        let total = squared_error_sum(&est, Some(&truth)).unwrap();
        prop_assert!(rel_err(value * value * r as f64, total) <= 1e-14);
    }

    #[test]
    fn distributed_ledger_counts_every_edge_twice(net in net_strategy()) {
        let ledger = message_accounting(MethodKind::FullyDistributed, None, &net).unwrap();
        prop_assert_eq!(ledger.in_total(), 2 * net.n_edges());
        let degrees: usize = (0..net.n_sensors()).map(|i| net.degree(i)).sum();
        prop_assert_eq!(ledger.sensor_in_total(), degrees);
        prop_assert!(ledger.sensor_out.iter().all(|&o| o == 1));
    }

    #[test]
    fn rebinding_distances_equals_rebuilding(net in net_strategy(), index in 0usize..50, seed in 0u64..1000) {
        let base = ProblemMatrices::build(&net).unwrap();
        let noisy = sample_noise(&net, 0.05, seed, index).unwrap().net;
        let rebound = base.rebind(&noisy).unwrap();
        let built = ProblemMatrices::build(&noisy).unwrap();
        let mut rng = Stream::new(seed, 9, 0);
        let u = ball_vec(&mut rng, net.n_edges(), 2);
        prop_assert_eq!(rebound.rhs(&u), built.rhs(&u));
        prop_assert_eq!(rebound.s(), built.s());
        prop_assert_eq!(rebound.anchor_const(), built.anchor_const());
    }

    #[test]
    fn parallel_sweeps_match_serial_bitwise(net in net_strategy(), seed in 0u64..1000) {
        let mut rng = Stream::new(seed, 10, 0);
        let x0 = uniform_vec(&mut rng, net.n_sensors() * 2, 0.01);
        for clustering in clusterings(&net, seed) {
            let solver = AmSolver::new(&net, &clustering).unwrap();
            let mut a = SolverState { x: x0.clone(), u: vec![0.0; net.n_edges() * 2], iter: 0, history: vec![] };
            let mut b = a.clone();
            for _ in 0..20 {
                solver.sweep(&net, &mut a, false, false);
                solver.sweep(&net, &mut b, false, true);
            }
            prop_assert_eq!(&a.x, &b.x);
            prop_assert_eq!(&a.u, &b.u);
        }
    }

    #[test]
    fn smooth_objective_recovers_original(net in net_strategy(), seed in 0u64..1000) {
        let mut rng = Stream::new(seed, 11, 0);
        let x = uniform_vec(&mut rng, net.n_sensors() * 2, 0.5);
        let u = update_u(&net, &x);
        let lhs = objective_orig(&net, &x);
        let rhs = objective_g(&net, &x, &u) + squared_distance_sum(&net);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn truth_is_a_zero_of_the_noiseless_objective(net in net_strategy()) {
        let exact = net.with_distances(&net.true_distances().unwrap()).unwrap();
        prop_assert!(objective_orig(&exact, exact.truth().unwrap()) <= 1e-28);
    }

    #[test]
    fn edges_resolve_in_both_orientations(net in net_strategy()) {
        let ord = net.ordering();
        prop_assert_eq!(ord.len(), net.n_edges());
        for (l, e) in net.sensor_edges().iter().enumerate() {
            prop_assert!(e.i < e.j);
            prop_assert_eq!(ord.index_of(Node::Sensor(e.i), Node::Sensor(e.j)), Some(l));
            prop_assert_eq!(ord.index_of(Node::Sensor(e.j), Node::Sensor(e.i)), Some(l));
        }
        let k1 = net.sensor_edges().len();
        for (l, e) in net.anchor_edges().iter().enumerate() {
            prop_assert_eq!(ord.index_of(Node::Anchor(e.anchor), Node::Sensor(e.sensor)), Some(k1 + l));
        }
    }

    #[test]
    fn noise_draws_are_reproducible(net in net_strategy(), seed in 0u64..1000, index in 0usize..100) {
        let a = sample_noise(&net, 0.01, seed, index).unwrap().net.distances();
        let b = sample_noise(&net, 0.01, seed, index).unwrap().net.distances();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn iterates_stay_bounded(net in net_strategy(), seed in 0u64..1000) {
        let mut rng = Stream::new(seed, 12, 0);
        let x0 = uniform_vec(&mut rng, net.n_sensors() * 2, 0.01);
        let cfg = SolverConfig { max_iters: 200, record_history: true, ..Default::default() };
        let (state, _) = solve(&net, &Clustering::colored(&net), &x0, &cfg).unwrap();
        let scale = net.anchors().iter().chain(net.truth().unwrap()).fold(0.0f64, |a, b| a.max(b.abs()));
        prop_assert!(state.x.iter().all(|v| v.is_finite() && v.abs() <= 10.0 * (1.0 + scale)));
    }
}
