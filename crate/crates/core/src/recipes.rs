//! Reproduction recipes: randomized and exhaustive sweeps that check the
//! structural results against brute force, one recipe per result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::game::{
    compare_directed_undirected, count_partitions, pure_nash_all, stackelberg_bruteforce, stackelberg_tree,
    GameInstance, PAYOFF_TOLERANCE,
};
use crate::platoon::{leader_placement_sweep, platoon_game, platoon_ne_prediction, PlatoonScenario};
use crate::simulator::{dc_gain_empirical, frequency_response, log_spaced, SimConfig};
use crate::spectral::{closed_form_directed, closed_form_undirected, grounded_system, kernel_for, max_abs_diff, sigma_max};
use crate::topology::{caterpillar_edges, random_tree_edges, tree_from_edges, LeaderNetwork, Mode};

pub const RECIPES: [&str; 8] = ["thm3", "directed-f1", "alg1-vs-brute", "thm6", "prop1", "prop2", "leader-sweep", "dc-gain"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RecipeParams {
    pub seed: u64,
    /// Random instances per size (or in total, for recipes without a size loop).
    pub samples: usize,
    pub max_n: usize,
    pub max_f: usize,
}

impl RecipeParams {
    /// Defaults sized for each recipe.
    pub fn defaults(recipe: &str) -> RecipeParams {
        let (samples, max_n, max_f) = match recipe {
            "thm3" => (100, 10, 1),
            "directed-f1" => (500, 8, 1),
            "alg1-vs-brute" | "thm6" => (200, 10, 3),
            "prop1" | "prop2" => (0, 12, 4),
            "leader-sweep" => (0, 12, 3),
            _ => (20, 10, 2),
        };
        RecipeParams { seed: 0, samples, max_n, max_f }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecipeCase {
    pub label: String,
    pub passed: bool,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecipeOutcome {
    pub recipe: String,
    pub cases: Vec<RecipeCase>,
}

impl RecipeOutcome {
    fn new(recipe: &str) -> Self {
        Self { recipe: recipe.to_string(), cases: Vec::new() }
    }

    fn record(&mut self, label: String, passed: bool, discrepancy: f64) {
        self.cases.push(RecipeCase { label, passed, discrepancy });
    }

    pub fn passed(&self) -> usize {
        self.cases.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.cases.len()
    }

    pub fn worst_discrepancy(&self) -> f64 {
        self.cases.iter().map(|c| c.discrepancy).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {}/{} passed, worst discrepancy {}",
            self.recipe,
            self.passed(),
            self.cases.len(),
            sig12(self.worst_discrepancy())
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,passed,discrepancy\n");
        for c in &self.cases {
            out.push_str(&format!("{},{},{}\n", c.label, c.passed, sig12(c.discrepancy)));
        }
        out
    }
}

pub fn run_recipe(recipe: &str, params: &RecipeParams) -> Result<RecipeOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    match recipe {
        "thm3" => undirected_single_attack(params, &mut rng),
        "directed-f1" => directed_single_attack(params, &mut rng),
        "alg1-vs-brute" => tree_algorithm_vs_brute_force(params, &mut rng),
        "thm6" => direction_ordering(params, &mut rng),
        "prop1" => platoon_predictions(params, Mode::Undirected, "prop1"),
        "prop2" => platoon_predictions(params, Mode::Directed, "prop2"),
        "leader-sweep" => leader_sweep(params),
        "dc-gain" => dc_gain(params, &mut rng),
        other => Err(Error::UnknownRecipe(other.to_string())),
    }
}

/// A random tree on `n` nodes with a random leader.
pub fn random_tree(n: usize, mode: Mode, rng: &mut ChaCha8Rng) -> Result<LeaderNetwork> {
    let edges = random_tree_edges(n, rng);
    let leader = rng.gen_range(0..n);
    tree_from_edges(n, &edges, leader, mode)
}

fn undirected_single_attack(params: &RecipeParams, rng: &mut ChaCha8Rng) -> Result<RecipeOutcome> {
    let mut out = RecipeOutcome::new("thm3");
    for n in 3..=params.max_n {
        for sample in 0..params.samples {
            let edges = random_tree_edges(n, rng);
            for leader in 0..n {
                let net = tree_from_edges(n, &edges, leader, Mode::Undirected)?;
                let game = GameInstance::new(closed_form_undirected(&net)?, 1)?;
                let report = pure_nash_all(&game)?;
                let leaf = net.degree(leader) == 1;
                let (passed, discrepancy) = match (&report, leaf) {
                    (Some(r), true) => (r.value == 1.0, (r.value - 1.0).abs()),
                    (None, false) => (true, 0.0),
                    _ => (false, f64::INFINITY),
                };
                out.record(format!("n{n}-s{sample}-leader{leader}"), passed, discrepancy);
            }
        }
    }
    Ok(out)
}

/// Directed trees used by the single-attack check: paths and stars with every
/// leader choice plus caterpillars, all orientations away from the leader.
pub fn directed_families(max_n: usize) -> Result<Vec<(String, LeaderNetwork)>> {
    let mut nets = Vec::new();
    for n in 2..=max_n {
        let path: Vec<_> = (1..n).map(|k| (k - 1, k)).collect();
        let star: Vec<_> = (1..n).map(|k| (0, k)).collect();
        for leader in 0..n {
            nets.push((format!("path{n}-leader{leader}"), tree_from_edges(n, &path, leader, Mode::Directed)?));
            nets.push((format!("star{n}-leader{leader}"), tree_from_edges(n, &star, leader, Mode::Directed)?));
        }
    }
    for spine in 2..=max_n {
        for legs in 1..=max_n {
            let n = spine * (legs + 1);
            if n > max_n {
                break;
            }
            let edges = caterpillar_edges(spine, legs);
            for leader in 0..n {
                nets.push((
                    format!("caterpillar{spine}x{legs}-leader{leader}"),
                    tree_from_edges(n, &edges, leader, Mode::Directed)?,
                ));
            }
        }
    }
    Ok(nets)
}

fn directed_single_attack(params: &RecipeParams, rng: &mut ChaCha8Rng) -> Result<RecipeOutcome> {
    let mut out = RecipeOutcome::new("directed-f1");
    let mut nets = directed_families(params.max_n)?;
    for sample in 0..params.samples {
        let n = rng.gen_range(2..=params.max_n);
        nets.push((format!("random{sample}-n{n}"), random_tree(n, Mode::Directed, rng)?));
    }
    for (label, net) in nets {
        let game = GameInstance::new(closed_form_directed(&net)?, 1)?;
        let exists = pure_nash_all(&game)?.is_some();
        out.record(label, exists == net.is_directed_path(), 0.0);
    }
    Ok(out)
}

fn tree_algorithm_vs_brute_force(params: &RecipeParams, rng: &mut ChaCha8Rng) -> Result<RecipeOutcome> {
    let mut out = RecipeOutcome::new("alg1-vs-brute");
    for sample in 0..params.samples {
        let n = rng.gen_range(2..=params.max_n);
        let edges = random_tree_edges(n, rng);
        let leader = rng.gen_range(0..n);
        for mode in [Mode::Undirected, Mode::Directed] {
            let net = tree_from_edges(n, &edges, leader, mode)?;
            for f in 1..=params.max_f.min(n - 1) {
                let game = GameInstance::new(kernel_for(&net)?, f)?;
                let tree = stackelberg_tree(&game, &net)?;
                let brute = stackelberg_bruteforce(&game)?;
                let caps: Vec<usize> = net.leader_rooted_paths()?.iter().map(|p| p.segment.len()).collect();
                let s = count_partitions(f, &caps);
                let diff = (tree.value - brute.value).abs();
                let passed = diff <= PAYOFF_TOLERANCE && tree.evaluations as u128 == s * s;
                out.record(format!("s{sample}-n{n}-{mode:?}-f{f}"), passed, diff);
            }
        }
    }
    Ok(out)
}

fn direction_ordering(params: &RecipeParams, rng: &mut ChaCha8Rng) -> Result<RecipeOutcome> {
    let mut out = RecipeOutcome::new("thm6");
    for sample in 0..params.samples {
        let n = rng.gen_range(2..=params.max_n);
        let net = random_tree(n, Mode::Directed, rng)?;
        for f in 1..=params.max_f.min(n - 1) {
            let cmp = compare_directed_undirected(&net, f)?;
            out.record(format!("s{sample}-n{n}-f{f}"), cmp.ordered, (cmp.directed - cmp.undirected).max(0.0));
        }
    }
    Ok(out)
}

/// σ_max of the `f×f` lower-triangular all-ones block.
pub fn triangular_block_sigma(f: usize) -> f64 {
    let block = nalgebra::DMatrix::from_fn(f, f, |r, c| if c <= r { 1.0 } else { 0.0 });
    sigma_max(&block).expect("non-empty block")
}

fn platoon_predictions(params: &RecipeParams, mode: Mode, name: &str) -> Result<RecipeOutcome> {
    let mut out = RecipeOutcome::new(name);
    for n in 2..=params.max_n {
        for leader in [0, n - 1] {
            for f in 1..=params.max_f.min(n - 1) {
                let scn = PlatoonScenario::new(n, leader, mode, 1.0, 1.0, vec![0.0; n])?;
                let game = platoon_game(&scn, f)?;
                let pair = platoon_ne_prediction(&scn, f)?;
                let saddle = game.is_saddle_point(&pair)?;
                let discrepancy = match mode {
                    Mode::Directed => (game.payoff(&pair)? - triangular_block_sigma(f)).abs(),
                    Mode::Undirected => 0.0,
                };
                out.record(format!("n{n}-leader{leader}-f{f}"), saddle && discrepancy <= PAYOFF_TOLERANCE, discrepancy);
            }
        }
    }
    Ok(out)
}

fn leader_sweep(params: &RecipeParams) -> Result<RecipeOutcome> {
    let mut out = RecipeOutcome::new("leader-sweep");
    for n in 4..=params.max_n {
        for f in 1..=params.max_f.min(n - 1) {
            let rows = leader_placement_sweep(n, f, Mode::Undirected)?;
            let end = rows[0].value.min(rows[n - 1].value);
            for row in &rows {
                out.record(format!("n{n}-f{f}-pos{}", row.position), row.within_end_values, (row.value - end).max(0.0));
            }
        }
    }
    Ok(out)
}

fn dc_gain(params: &RecipeParams, rng: &mut ChaCha8Rng) -> Result<RecipeOutcome> {
    let mut out = RecipeOutcome::new("dc-gain");
    for sample in 0..params.samples {
        let n = rng.gen_range(3..=params.max_n);
        let mode = if sample % 2 == 0 { Mode::Undirected } else { Mode::Directed };
        let net = random_tree(n, mode, rng)?;
        let f = rng.gen_range(1..=params.max_f.min(n - 1));
        let attacker = random_subset(n - 1, f, rng);
        let detector = random_subset(n - 1, f, rng);
        let kernel = kernel_for(&net)?;
        let expected = kernel.submatrix(&detector, &attacker);
        let cfg = SimConfig::first_order_defaults(&grounded_system(&net)?)?;
        let empirical = dc_gain_empirical(&net, &attacker, &detector, &cfg)?;
        let diff = max_abs_diff(&empirical, &expected);
        out.record(format!("s{sample}-n{n}-{mode:?}-f{f}-dc"), diff <= 1e-4, diff);

        let sweep = frequency_response(&net, &attacker, &detector, &log_spaced(1e-3, 1e3, 61))?;
        let first = sweep[0].1;
        let excess = sweep.iter().map(|p| p.1 - first).fold(0.0, f64::max);
        out.record(format!("s{sample}-n{n}-{mode:?}-f{f}-sweep"), excess <= 1e-12 * first.max(1.0), excess);
    }
    Ok(out)
}

/// `k` distinct indices from `0..n`, ascending.
pub fn random_subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut set = rand::seq::index::sample(rng, n, k).into_vec();
    set.sort_unstable();
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(recipe: &str) -> RecipeParams {
        let d = RecipeParams::defaults(recipe);
        RecipeParams { samples: d.samples.min(5), max_n: d.max_n.min(7), ..d }
    }

    #[test]
    fn small_runs_pass() {
        for recipe in ["thm3", "directed-f1", "alg1-vs-brute", "thm6", "prop1", "leader-sweep", "dc-gain"] {
            let outcome = run_recipe(recipe, &small(recipe)).unwrap();
            assert!(!outcome.cases.is_empty(), "{recipe}");
            assert!(outcome.all_passed(), "{}", outcome.summary());
        }
    }

    #[test]
    fn directed_platoon_values_follow_the_triangular_block() {
        let outcome = run_recipe("prop2", &small("prop2")).unwrap();
        assert!(outcome.all_passed(), "{}", outcome.summary());
        assert!((triangular_block_sigma(2) - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_recipe() {
        assert!(matches!(run_recipe("nope", &small("thm3")), Err(Error::UnknownRecipe(_))));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = run_recipe("thm6", &small("thm6")).unwrap();
        let b = run_recipe("thm6", &small("thm6")).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
