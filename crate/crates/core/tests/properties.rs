use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sensor_game::game::{
    count_partitions, enumerate_partitions, stackelberg_bruteforce, stackelberg_tree, GameInstance, PAYOFF_TOLERANCE,
};
use sensor_game::recipes::random_tree;
use sensor_game::spectral::{
    closed_form_directed, closed_form_undirected, grounded_system, invert_numeric, kernel_for, sigma_max, two_tree_count,
};
use sensor_game::{LeaderNetwork, Mode};

fn tree(n: usize, seed: u64, mode: Mode) -> LeaderNetwork {
    random_tree(n, mode, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn nonnegative_matrix(max: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        proptest::collection::vec(0.0..10.0f64, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segments_partition_the_followers(n in 2usize..20, seed: u64) {
        let net = tree(n, seed, Mode::Undirected);
        let mut seen: Vec<usize> = net.leader_rooted_paths().unwrap().into_iter().flat_map(|p| p.segment).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, net.followers());
    }

    #[test]
    fn leader_is_a_cut_vertex_iff_interior(n in 3usize..20, seed: u64) {
        let net = tree(n, seed, Mode::Undirected);
        prop_assert_eq!(net.is_leader_cut_vertex(), net.degree(net.leader()) >= 2);
    }

    #[test]
    fn closed_forms_match_inversion(n in 2usize..30, seed: u64) {
        for mode in [Mode::Undirected, Mode::Directed] {
            let net = tree(n, seed, mode);
            let closed = match mode {
                Mode::Undirected => closed_form_undirected(&net).unwrap(),
                Mode::Directed => closed_form_directed(&net).unwrap(),
            };
            let numeric = invert_numeric(&grounded_system(&net).unwrap()).unwrap();
            prop_assert!(closed.max_discrepancy(&numeric) <= 1e-9);
        }
    }

    #[test]
    fn two_tree_counts_match_kernel(n in 2usize..10, seed: u64) {
        let net = tree(n, seed, Mode::Undirected);
        let kernel = closed_form_undirected(&net).unwrap();
        for (r, &i) in kernel.follower_order.iter().enumerate() {
            for (c, &j) in kernel.follower_order.iter().enumerate() {
                prop_assert_eq!(two_tree_count(&net, i, j).unwrap() as f64, kernel.entry(r, c));
            }
        }
    }

    #[test]
    fn entries_bounded_by_their_diagonals(n in 2usize..20, seed: u64) {
        let net = tree(n, seed, Mode::Undirected);
        let k = closed_form_undirected(&net).unwrap();
        for i in 0..k.size() {
            for j in 0..k.size() {
                prop_assert!(k.entry(i, j) <= k.entry(i, i).min(k.entry(j, j)));
                prop_assert_eq!(k.entry(i, j), k.entry(j, i));
            }
        }
    }

    #[test]
    fn sigma_matches_svd(m in nonnegative_matrix(7)) {
        let reference = m.clone().svd(false, false).singular_values.max();
        prop_assert!((sigma_max(&m).unwrap() - reference).abs() <= 1e-9 * reference.max(1.0));
    }

    #[test]
    fn sigma_of_a_block_is_at_most_the_whole(m in nonnegative_matrix(7), r in 0usize..7, c in 0usize..7) {
        let (rows, cols) = ((r % m.nrows()) + 1, (c % m.ncols()) + 1);
        let block = m.view((0, 0), (rows, cols)).into_owned();
        prop_assert!(sigma_max(&block).unwrap() <= sigma_max(&m).unwrap() + 1e-12);
    }

    #[test]
    fn partition_count_matches_enumeration(caps in proptest::collection::vec(0usize..5, 1..6), f in 0usize..8) {
        let capacity: usize = caps.iter().sum();
        match enumerate_partitions(f, &caps) {
            Ok(parts) => {
                prop_assert_eq!(parts.len() as u128, count_partitions(f, &caps));
                prop_assert!(parts.iter().all(|p| p.parts.iter().sum::<usize>() == f));
                prop_assert!(parts.windows(2).all(|w| w[0].parts < w[1].parts));
            }
            Err(_) => prop_assert!(capacity < f),
        }
    }

    #[test]
    fn tree_algorithm_matches_brute_force(n in 2usize..9, seed: u64, f in 1usize..4) {
        for mode in [Mode::Undirected, Mode::Directed] {
            let net = tree(n, seed, mode);
            let f = f.min(n - 1);
            let game = GameInstance::new(kernel_for(&net).unwrap(), f).unwrap();
            let fast = stackelberg_tree(&game, &net).unwrap();
            let slow = stackelberg_bruteforce(&game).unwrap();
            prop_assert!((fast.value - slow.value).abs() <= PAYOFF_TOLERANCE);
        }
    }

    #[test]
    fn payoffs_scale_linearly(n in 3usize..9, seed: u64, scale in 0.1f64..10.0) {
        let net = tree(n, seed, Mode::Undirected);
        let kernel = kernel_for(&net).unwrap();
        let unit = stackelberg_bruteforce(&GameInstance::new(kernel.clone(), 2).unwrap()).unwrap();
        let scaled = stackelberg_bruteforce(&GameInstance::with_scale(kernel, 2, scale).unwrap()).unwrap();
        prop_assert!((scaled.value - scale * unit.value).abs() <= 1e-9 * scaled.value.max(1.0));
        prop_assert_eq!(scaled.strategies, unit.strategies);
    }
}
