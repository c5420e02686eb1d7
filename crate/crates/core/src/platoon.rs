//! Vehicle platoons under cooperative adaptive cruise control.
//!
//! Vehicles sit on a line `0..n`; the leader is one of them. At zero
//! frequency the attack-to-sensor gain of the platoon is the consensus
//! kernel scaled by `1 / k_p`, so the platoon game is the path game with
//! that scale. The velocity gain `k_u` and the spacing vector only matter
//! to the time-domain simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{pure_nash_all, stackelberg_tree, GameInstance, PlacementPair, PAYOFF_TOLERANCE};
use crate::spectral::{closed_form_directed, closed_form_undirected};
use crate::topology::{generate, LeaderNetwork, Mode, TreeKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlatoonScenario {
    #[serde(rename = "n")]
    pub vehicle_count: usize,
    pub leader_position: usize,
    pub mode: Mode,
    pub k_p: f64,
    pub k_u: f64,
    /// Aggregated desired gap `Δ_i = Σ_j Δ_ij` per vehicle; the leader's entry is unused.
    pub spacing: Vec<f64>,
}

impl PlatoonScenario {
    pub fn new(vehicle_count: usize, leader_position: usize, mode: Mode, k_p: f64, k_u: f64, spacing: Vec<f64>) -> Result<Self> {
        let scn = Self { vehicle_count, leader_position, mode, k_p, k_u, spacing };
        scn.validate()?;
        Ok(scn)
    }

    /// Scenario whose nominal formation keeps `gap` between consecutive vehicles.
    pub fn with_uniform_gap(vehicle_count: usize, leader_position: usize, mode: Mode, k_p: f64, k_u: f64, gap: f64) -> Result<Self> {
        let mut scn = Self { vehicle_count, leader_position, mode, k_p, k_u, spacing: vec![0.0; vehicle_count] };
        scn.validate()?;
        let net = scn.network()?;
        // Vehicle k sits at -k * gap; Δ_ij is the desired p_i - p_j.
        let place = |k: usize| -(k as f64) * gap;
        for v in 0..vehicle_count {
            scn.spacing[v] = net.in_neighbors(v).iter().map(|&u| place(v) - place(u)).sum();
        }
        Ok(scn)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vehicle_count < 2 {
            return Err(Error::InvalidScenario(format!("need at least 2 vehicles, got {}", self.vehicle_count)));
        }
        if self.leader_position >= self.vehicle_count {
            return Err(Error::InvalidScenario(format!("leader position {} outside the platoon", self.leader_position)));
        }
        if !(self.k_p > 0.0 && self.k_p.is_finite()) || !(self.k_u > 0.0 && self.k_u.is_finite()) {
            return Err(Error::InvalidScenario("gains k_p and k_u must be positive".into()));
        }
        if self.spacing.len() != self.vehicle_count {
            return Err(Error::InvalidScenario(format!(
                "spacing has {} entries for {} vehicles",
                self.spacing.len(),
                self.vehicle_count
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scn: Self = serde_json::from_str(text)?;
        scn.validate()?;
        Ok(scn)
    }

    /// Line graph with edges oriented away from the leader in directed mode.
    pub fn network(&self) -> Result<LeaderNetwork> {
        generate(TreeKind::Platoon, self.vehicle_count, self.leader_position, self.mode, None)
    }

    pub fn leader_at_end(&self) -> bool {
        self.leader_position == 0 || self.leader_position + 1 == self.vehicle_count
    }

    /// Follower kernel positions sorted from closest to farthest from the leader.
    pub fn followers_by_distance(&self) -> Vec<usize> {
        let net = self.network().expect("validated scenario");
        let mut nodes = net.followers();
        nodes.sort_by_key(|&v| (v.abs_diff(self.leader_position), v));
        nodes.into_iter().map(|v| net.follower_position(v).expect("follower")).collect()
    }
}

/// The zero-frequency platoon game: path kernel scaled by `1 / k_p`.
pub fn platoon_game(scn: &PlatoonScenario, f: usize) -> Result<GameInstance> {
    scn.validate()?;
    let net = scn.network()?;
    let kernel = match scn.mode {
        Mode::Undirected => closed_form_undirected(&net)?,
        Mode::Directed => closed_form_directed(&net)?,
    };
    GameInstance::with_scale(kernel, f, 1.0 / scn.k_p)
}

/// Equilibrium placement for a platoon led from one end.
///
/// Undirected: the attacker takes the `f` followers closest to the leader and
/// the detector the `f` farthest. Directed: both take the `f` farthest.
pub fn platoon_ne_prediction(scn: &PlatoonScenario, f: usize) -> Result<PlacementPair> {
    scn.validate()?;
    if !scn.leader_at_end() {
        return Err(Error::UnsupportedPrediction(format!(
            "leader at interior position {} of {}",
            scn.leader_position, scn.vehicle_count
        )));
    }
    let followers = scn.vehicle_count - 1;
    if f == 0 || f > followers {
        return Err(Error::InvalidBudget { f, followers });
    }
    let order = scn.followers_by_distance();
    let farthest = order[followers - f..].to_vec();
    let attacker = match scn.mode {
        Mode::Undirected => order[..f].to_vec(),
        Mode::Directed => farthest.clone(),
    };
    Ok(PlacementPair::new(attacker, farthest))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub position: usize,
    pub value: f64,
    pub ne_exists: bool,
    pub strategy: PlacementPair,
    /// Value does not exceed the value with the leader at either end.
    pub within_end_values: bool,
}

/// Stackelberg value (gains of 1) for every leader position on a line of `n` vehicles.
pub fn leader_placement_sweep(n: usize, f: usize, mode: Mode) -> Result<Vec<SweepRow>> {
    if n < 3 {
        return Err(Error::InvalidScenario(format!("sweep needs at least 3 vehicles, got {n}")));
    }
    let mut rows = Vec::with_capacity(n);
    for position in 0..n {
        let scn = PlatoonScenario::new(n, position, mode, 1.0, 1.0, vec![0.0; n])?;
        let game = platoon_game(&scn, f)?;
        let report = stackelberg_tree(&game, &scn.network()?)?;
        let ne_exists = pure_nash_all(&game)?.is_some();
        rows.push(SweepRow {
            position,
            value: report.value,
            ne_exists,
            strategy: report.strategies[0].clone(),
            within_end_values: true,
        });
    }
    let end_value = rows[0].value.min(rows[n - 1].value);
    for row in &mut rows[1..n - 1] {
        row.within_end_values = row.value <= end_value + PAYOFF_TOLERANCE;
    }
    Ok(rows)
}
