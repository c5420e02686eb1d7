//! The zero-sum attacker–detector placement game.
//!
//! The detector picks `f` rows of the kernel (sensor locations), the attacker
//! picks `f` columns (attacked followers), and the payoff is the largest
//! singular value of the selected block times a positive scale. The detector
//! maximizes, the attacker minimizes.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{sigma_max, GroundedKernel};
use crate::topology::{LeaderNetwork, Mode};

/// Absolute tolerance for payoff comparisons.
pub const PAYOFF_TOLERANCE: f64 = 1e-9;

/// Largest number of payoff evaluations an exhaustive search may perform.
pub const EVALUATION_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug)]
pub struct GameInstance {
    kernel: GroundedKernel,
    f: usize,
    scale: f64,
}

impl GameInstance {
    pub fn new(kernel: GroundedKernel, f: usize) -> Result<Self> {
        Self::with_scale(kernel, f, 1.0)
    }

    pub fn with_scale(kernel: GroundedKernel, f: usize, scale: f64) -> Result<Self> {
        let followers = kernel.size();
        if f == 0 || f > followers || kernel.inv.ncols() != followers {
            return Err(Error::InvalidBudget { f, followers });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidScale(scale));
        }
        Ok(Self { kernel, f, scale })
    }

    pub fn kernel(&self) -> &GroundedKernel {
        &self.kernel
    }

    pub fn budget(&self) -> usize {
        self.f
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn followers(&self) -> usize {
        self.kernel.size()
    }

    /// Every `f`-subset of followers, lexicographic.
    pub fn strategies(&self) -> Vec<Vec<usize>> {
        (0..self.followers()).combinations(self.f).collect()
    }

    fn strategy_count(&self) -> u128 {
        binomial(self.followers() as u128, self.f as u128)
    }

    fn check_strategy(&self, set: &[usize]) -> Result<()> {
        if set.len() != self.f {
            return Err(Error::PlacementSize { expected: self.f, got: set.len() });
        }
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicatePlacement(w[0]));
            }
        }
        if let Some(&index) = sorted.iter().find(|&&i| i >= self.followers()) {
            return Err(Error::PlacementOutOfRange { index, size: self.followers() });
        }
        Ok(())
    }

    pub(crate) fn raw_payoff(&self, detector: &[usize], attacker: &[usize]) -> f64 {
        let value = if self.f == 1 {
            self.kernel.entry(detector[0], attacker[0]).abs()
        } else {
            sigma_max(&self.kernel.submatrix(detector, attacker)).expect("non-empty block")
        };
        self.scale * value
    }

    pub fn payoff(&self, pair: &PlacementPair) -> Result<f64> {
        self.check_strategy(&pair.attacker)?;
        self.check_strategy(&pair.detector)?;
        Ok(self.raw_payoff(&pair.detector, &pair.attacker))
    }

    fn guard(&self, evaluations: u128) -> Result<()> {
        if evaluations > EVALUATION_LIMIT {
            return Err(Error::GuardExceeded { evaluations, limit: EVALUATION_LIMIT });
        }
        Ok(())
    }

    /// Whether `pair` survives every unilateral deviation.
    pub fn is_saddle_point(&self, pair: &PlacementPair) -> Result<bool> {
        let value = self.payoff(pair)?;
        self.guard(2 * self.strategy_count())?;
        for set in (0..self.followers()).combinations(self.f) {
            if self.raw_payoff(&set, &pair.attacker) > value + PAYOFF_TOLERANCE {
                return Ok(false);
            }
            if self.raw_payoff(&pair.detector, &set) < value - PAYOFF_TOLERANCE {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementPair {
    /// Attacked followers (kernel columns), ascending.
    pub attacker: Vec<usize>,
    /// Sensor followers (kernel rows), ascending.
    pub detector: Vec<usize>,
}

impl PlacementPair {
    pub fn new(mut attacker: Vec<usize>, mut detector: Vec<usize>) -> Self {
        attacker.sort_unstable();
        detector.sort_unstable();
        Self { attacker, detector }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    PureNash,
    Stackelberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    SaddleCheck,
    BruteForce,
    TreePartition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub value: f64,
    pub strategies: Vec<PlacementPair>,
    pub certified_by: Certification,
    pub evaluations: u64,
}

/// All pure Nash equilibria, or `None` when the game has no saddle point.
pub fn pure_nash_all(game: &GameInstance) -> Result<Option<EquilibriumReport>> {
    let count = game.strategy_count();
    game.guard(count * count)?;
    let sets = game.strategies();
    let table: Vec<Vec<f64>> = sets.iter().map(|c| sets.iter().map(|b| game.raw_payoff(c, b)).collect()).collect();
    let row_min: Vec<f64> = table.iter().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let col_max: Vec<f64> = (0..sets.len())
        .map(|b| table.iter().map(|row| row[b]).fold(f64::NEG_INFINITY, f64::max))
        .collect();

    let mut strategies = Vec::new();
    let mut values = Vec::new();
    for (ci, row) in table.iter().enumerate() {
        for (bi, &v) in row.iter().enumerate() {
            if v >= col_max[bi] - PAYOFF_TOLERANCE && v <= row_min[ci] + PAYOFF_TOLERANCE {
                strategies.push(PlacementPair::new(sets[bi].clone(), sets[ci].clone()));
                values.push(v);
            }
        }
    }
    if strategies.is_empty() {
        return Ok(None);
    }
    let value = values[0];
    if let Some(bad) = values.iter().find(|v| (**v - value).abs() > 2.0 * PAYOFF_TOLERANCE) {
        return Err(Error::Invariant(format!("pure equilibria disagree on the game value: {value} vs {bad}")));
    }
    Ok(Some(EquilibriumReport {
        kind: EquilibriumKind::PureNash,
        value,
        strategies,
        certified_by: Certification::SaddleCheck,
        evaluations: (count * count) as u64,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NePrediction {
    pub exists: bool,
    pub value_if_exists: Option<f64>,
}

/// Structural prediction for `f = 1` on trees, without touching payoffs.
///
/// Undirected: an equilibrium exists exactly when the leader is not a cut
/// vertex, and its value is 1. Directed: exactly when the tree is a directed path.
pub fn predict_ne_f1(net: &LeaderNetwork) -> Result<NePrediction> {
    net.require_tree()?;
    let exists = match net.mode() {
        Mode::Undirected => !net.is_leader_cut_vertex(),
        Mode::Directed => net.is_directed_path(),
    };
    Ok(NePrediction { exists, value_if_exists: exists.then_some(1.0) })
}

// (value, set) beats (best_value, best_set) for a maximizer: strictly larger
// beyond the tolerance, or tied and lexicographically smaller.
fn improves(value: f64, set: &[usize], best: &Option<(f64, Vec<usize>)>, maximize: bool) -> bool {
    match best {
        None => true,
        Some((bv, bs)) => {
            let diff = if maximize { value - bv } else { bv - value };
            diff > PAYOFF_TOLERANCE || (diff.abs() <= PAYOFF_TOLERANCE && set < bs.as_slice())
        }
    }
}

/// Max–min by exhaustive search over every detector and attacker set.
pub fn stackelberg_bruteforce(game: &GameInstance) -> Result<EquilibriumReport> {
    let count = game.strategy_count();
    game.guard(count * count)?;
    let sets = game.strategies();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut best_response = Vec::new();
    for detector in &sets {
        let mut inner: Option<(f64, Vec<usize>)> = None;
        for attacker in &sets {
            let v = game.raw_payoff(detector, attacker);
            if improves(v, attacker, &inner, false) {
                inner = Some((v, attacker.clone()));
            }
        }
        let (v, attacker) = inner.expect("at least one attacker set");
        if improves(v, detector, &best, true) {
            best = Some((v, detector.clone()));
            best_response = attacker;
        }
    }
    let (value, detector) = best.expect("at least one detector set");
    Ok(EquilibriumReport {
        kind: EquilibriumKind::Stackelberg,
        value,
        strategies: vec![PlacementPair::new(best_response, detector)],
        certified_by: Certification::BruteForce,
        evaluations: (count * count) as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstrainedPartition {
    pub parts: Vec<usize>,
    pub caps: Vec<usize>,
}

/// All `(f_1, .., f_m)` with `0 <= f_i <= caps[i]` summing to `f`, lexicographic.
pub fn enumerate_partitions(f: usize, caps: &[usize]) -> Result<Vec<ConstrainedPartition>> {
    let capacity: usize = caps.iter().sum();
    if capacity < f {
        return Err(Error::Infeasible { f, capacity });
    }
    // suffix[i]: capacity of parts i.. ; prunes branches that cannot reach f.
    let mut suffix = vec![0; caps.len() + 1];
    for i in (0..caps.len()).rev() {
        suffix[i] = suffix[i + 1] + caps[i];
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(caps.len());
    fn fill(i: usize, left: usize, caps: &[usize], suffix: &[usize], current: &mut Vec<usize>, out: &mut Vec<ConstrainedPartition>) {
        if i == caps.len() {
            if left == 0 {
                out.push(ConstrainedPartition { parts: current.clone(), caps: caps.to_vec() });
            }
            return;
        }
        let lo = left.saturating_sub(suffix[i + 1]);
        for take in lo..=caps[i].min(left) {
            current.push(take);
            fill(i + 1, left - take, caps, suffix, current, out);
            current.pop();
        }
    }
    fill(0, f, caps, &suffix, &mut current, &mut out);
    Ok(out)
}

/// Number of constrained partitions, counted by dynamic programming.
pub fn count_partitions(f: usize, caps: &[usize]) -> u128 {
    let mut ways = vec![0u128; f + 1];
    ways[0] = 1;
    for &cap in caps {
        let mut next = vec![0u128; f + 1];
        for (total, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for take in 0..=cap.min(f - total) {
                next[total + take] += w;
            }
        }
        ways = next;
    }
    ways[f]
}

/// Max–min restricted to partition placements along leader-rooted segments.
///
/// Each segment is a chain hanging below its first node. For a partition
/// `(f_1, .., f_m)` the detector takes the `f_i` deepest nodes of segment
/// `i`; the attacker takes the `f_i` shallowest nodes on an undirected tree
/// and the `f_i` deepest on a directed one. Exactly `S²` payoffs are
/// evaluated, `S` being the number of partitions.
pub fn stackelberg_tree(game: &GameInstance, net: &LeaderNetwork) -> Result<EquilibriumReport> {
    let paths = net.leader_rooted_paths()?;
    if game.kernel().follower_order != net.followers() {
        return Err(Error::KernelMismatch("kernel follower order differs from the network".into()));
    }
    let to_position = |v: usize| net.follower_position(v).expect("segments contain followers only");
    let segments: Vec<Vec<usize>> =
        paths.iter().map(|p| p.segment.iter().map(|&v| to_position(v)).collect()).collect();
    let caps: Vec<usize> = segments.iter().map(Vec::len).collect();
    let partitions = enumerate_partitions(game.budget(), &caps)?;
    let s = partitions.len() as u128;
    game.guard(s * s)?;

    let deepest = |parts: &[usize]| -> Vec<usize> {
        let mut set: Vec<usize> =
            segments.iter().zip(parts).flat_map(|(seg, &k)| seg[seg.len() - k..].iter().copied()).collect();
        set.sort_unstable();
        set
    };
    let shallowest = |parts: &[usize]| -> Vec<usize> {
        let mut set: Vec<usize> = segments.iter().zip(parts).flat_map(|(seg, &k)| seg[..k].iter().copied()).collect();
        set.sort_unstable();
        set
    };
    let detector_sets: Vec<Vec<usize>> = partitions.iter().map(|p| deepest(&p.parts)).collect();
    let attacker_sets: Vec<Vec<usize>> = match net.mode() {
        Mode::Undirected => partitions.iter().map(|p| shallowest(&p.parts)).collect(),
        Mode::Directed => detector_sets.clone(),
    };

    let mut evaluations = 0u64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut best_response = Vec::new();
    for detector in &detector_sets {
        let mut inner: Option<(f64, Vec<usize>)> = None;
        for attacker in &attacker_sets {
            let v = game.raw_payoff(detector, attacker);
            evaluations += 1;
            if improves(v, attacker, &inner, false) {
                inner = Some((v, attacker.clone()));
            }
        }
        let (v, attacker) = inner.expect("at least one partition");
        if improves(v, detector, &best, true) {
            best = Some((v, detector.clone()));
            best_response = attacker;
        }
    }
    let (value, detector) = best.expect("at least one partition");
    Ok(EquilibriumReport {
        kind: EquilibriumKind::Stackelberg,
        value,
        strategies: vec![PlacementPair::new(best_response, detector)],
        certified_by: Certification::TreePartition,
        evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionComparison {
    pub directed: f64,
    pub undirected: f64,
    pub ordered: bool,
}

/// Stackelberg values on a directed tree and on the same tree with directions dropped.
pub fn compare_directed_undirected(net: &LeaderNetwork, f: usize) -> Result<DirectionComparison> {
    if net.mode() != Mode::Directed {
        return Err(Error::WrongMode { expected: Mode::Directed });
    }
    let undirected_net = net.undirected_counterpart();
    let directed = stackelberg_tree(&GameInstance::new(crate::spectral::closed_form_directed(net)?, f)?, net)?.value;
    let undirected = stackelberg_tree(
        &GameInstance::new(crate::spectral::closed_form_undirected(&undirected_net)?, f)?,
        &undirected_net,
    )?
    .value;
    Ok(DirectionComparison { directed, undirected, ordered: directed <= undirected + PAYOFF_TOLERANCE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{closed_form_directed, closed_form_undirected, KernelMethod};
    use crate::topology::{generate, TreeKind};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn path_game(followers: usize, f: usize, mode: Mode) -> (GameInstance, LeaderNetwork) {
        let net = generate(TreeKind::Path, followers + 1, 0, mode, None).unwrap();
        let kernel = match mode {
            Mode::Undirected => closed_form_undirected(&net).unwrap(),
            Mode::Directed => closed_form_directed(&net).unwrap(),
        };
        (GameInstance::new(kernel, f).unwrap(), net)
    }

    fn identity_game(n: usize, f: usize) -> GameInstance {
        let kernel = GroundedKernel { inv: DMatrix::identity(n, n), method: KernelMethod::Numeric, follower_order: (0..n).collect() };
        GameInstance::new(kernel, f).unwrap()
    }

    #[test]
    fn payoff_examples() {
        let (game, _) = path_game(4, 1, Mode::Undirected);
        for d in 0..4 {
            assert_eq!(game.payoff(&PlacementPair::new(vec![0], vec![d])).unwrap(), 1.0);
        }
        let (game, _) = path_game(4, 2, Mode::Undirected);
        let v = game.payoff(&PlacementPair::new(vec![0, 1], vec![2, 3])).unwrap();
        assert_relative_eq!(v, 10f64.sqrt(), max_relative = 1e-12);
        assert_eq!(identity_game(3, 1).payoff(&PlacementPair::new(vec![0], vec![2])).unwrap(), 0.0);
    }

    #[test]
    fn payoff_rejects_bad_placements() {
        let (game, _) = path_game(4, 2, Mode::Undirected);
        assert!(matches!(game.payoff(&PlacementPair::new(vec![1, 1], vec![2, 3])), Err(Error::DuplicatePlacement(1))));
        assert!(matches!(game.payoff(&PlacementPair::new(vec![1, 9], vec![2, 3])), Err(Error::PlacementOutOfRange { index: 9, .. })));
        assert!(matches!(game.payoff(&PlacementPair::new(vec![1], vec![2, 3])), Err(Error::PlacementSize { .. })));
        let kernel = game.kernel().clone();
        assert!(matches!(GameInstance::new(kernel.clone(), 0), Err(Error::InvalidBudget { .. })));
        assert!(matches!(GameInstance::new(kernel.clone(), 5), Err(Error::InvalidBudget { .. })));
        assert!(matches!(GameInstance::with_scale(kernel, 1, -1.0), Err(Error::InvalidScale(_))));
    }

    #[test]
    fn star_has_no_pure_equilibrium() {
        let star = generate(TreeKind::Star, 5, 0, Mode::Undirected, None).unwrap();
        let game = GameInstance::new(closed_form_undirected(&star).unwrap(), 1).unwrap();
        assert!(pure_nash_all(&game).unwrap().is_none());
    }

    #[test]
    fn path_with_end_leader_has_value_one() {
        let (game, _) = path_game(4, 1, Mode::Undirected);
        let report = pure_nash_all(&game).unwrap().unwrap();
        assert_eq!(report.value, 1.0);
        assert!(report.strategies.iter().all(|p| p.attacker == vec![0]));
        // Every detector choice works against the leader's neighbor.
        assert_eq!(report.strategies.len(), 4);
    }

    #[test]
    fn directed_path_equilibrium_senses_the_tail() {
        let (game, _) = path_game(2, 1, Mode::Directed);
        let report = pure_nash_all(&game).unwrap().unwrap();
        assert_eq!(report.value, 1.0);
        assert!(report.strategies.iter().all(|p| p.detector == vec![1]));
    }

    #[test]
    fn structural_predictions() {
        let end = generate(TreeKind::Path, 5, 0, Mode::Undirected, None).unwrap();
        assert_eq!(predict_ne_f1(&end).unwrap(), NePrediction { exists: true, value_if_exists: Some(1.0) });
        let mid = generate(TreeKind::Path, 5, 2, Mode::Undirected, None).unwrap();
        assert!(!predict_ne_f1(&mid).unwrap().exists);
        let star = generate(TreeKind::Star, 5, 0, Mode::Directed, None).unwrap();
        assert!(!predict_ne_f1(&star).unwrap().exists);
        let split = LeaderNetwork::new(4, &[(0, 1), (2, 3)], Mode::Undirected, 0).unwrap();
        assert!(matches!(predict_ne_f1(&split), Err(Error::NotATree)));
    }

    #[test]
    fn bruteforce_small_cases() {
        let (game, _) = path_game(4, 1, Mode::Undirected);
        assert_eq!(stackelberg_bruteforce(&game).unwrap().value, 1.0);
        assert_eq!(stackelberg_bruteforce(&identity_game(4, 1)).unwrap().value, 0.0);
        let (game, _) = path_game(4, 2, Mode::Undirected);
        let ne = pure_nash_all(&game).unwrap().unwrap();
        let st = stackelberg_bruteforce(&game).unwrap();
        assert!((ne.value - st.value).abs() < 1e-9);
        assert_eq!(st.evaluations, 36);
    }

    #[test]
    fn bruteforce_guard() {
        let star = generate(TreeKind::Star, 41, 0, Mode::Undirected, None).unwrap();
        let game = GameInstance::new(closed_form_undirected(&star).unwrap(), 5).unwrap();
        assert!(matches!(stackelberg_bruteforce(&game), Err(Error::GuardExceeded { .. })));
        assert!(matches!(pure_nash_all(&game), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn partitions() {
        let parts: Vec<_> = enumerate_partitions(2, &[2, 2]).unwrap().into_iter().map(|p| p.parts).collect();
        assert_eq!(parts, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(enumerate_partitions(1, &[1, 1, 1]).unwrap().len(), 3);
        assert!(matches!(enumerate_partitions(3, &[1, 1]), Err(Error::Infeasible { f: 3, capacity: 2 })));
        assert_eq!(count_partitions(2, &[2, 2]), 3);
        assert_eq!(count_partitions(0, &[3]), 1);
    }

    #[test]
    fn tree_algorithm_on_a_path() {
        let (game, net) = path_game(4, 2, Mode::Undirected);
        let report = stackelberg_tree(&game, &net).unwrap();
        assert_eq!(report.strategies[0], PlacementPair::new(vec![0, 1], vec![2, 3]));
        assert_relative_eq!(report.value, 10f64.sqrt(), max_relative = 1e-12);
        assert_eq!(report.evaluations, 1);
    }

    #[test]
    fn tree_algorithm_on_a_star() {
        let star = generate(TreeKind::Star, 5, 0, Mode::Undirected, None).unwrap();
        let game = GameInstance::new(closed_form_undirected(&star).unwrap(), 1).unwrap();
        let report = stackelberg_tree(&game, &star).unwrap();
        assert_eq!(report.value, 0.0);
        assert_eq!(report.evaluations, 16);
        let p = &report.strategies[0];
        assert_ne!(p.attacker, p.detector);
    }

    #[test]
    fn direction_comparison_on_paths() {
        let net = generate(TreeKind::Path, 5, 0, Mode::Directed, None).unwrap();
        let c1 = compare_directed_undirected(&net, 1).unwrap();
        assert_eq!((c1.directed, c1.undirected, c1.ordered), (1.0, 1.0, true));
        let c2 = compare_directed_undirected(&net, 2).unwrap();
        // The directed saddle block is [[1, 0], [1, 1]].
        assert_relative_eq!(c2.directed, (1.0 + 5f64.sqrt()) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(c2.undirected, 10f64.sqrt(), max_relative = 1e-12);
        assert!(c2.ordered);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 3), 84);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 4), 0);
    }
}
