//! Attacker–detector sensor placement on leader–follower networks.
//!
//! An attacker injects constant signals at `f` followers of a leader–follower
//! consensus network; a detector places `f` sensors. The payoff is the
//! system's worst-case gain from attack to sensors, which for this positive
//! system is the largest singular value of a block of the inverse grounded
//! Laplacian. The attacker minimizes it and the detector maximizes it.
//!
//! * [`topology`] builds and inspects leader–follower graphs.
//! * [`spectral`] computes the payoff kernel numerically and in closed form on trees.
//! * [`game`] finds pure equilibria and solves the detector-first (Stackelberg) game.
//! * [`platoon`] specializes the game to vehicle platoons.
//! * [`simulator`] checks payoffs against time- and frequency-domain runs.
//! * [`cli`] and [`recipes`] back the `sensor-game` binary.

pub mod cli;
pub mod error;
pub mod format;
pub mod game;
pub mod platoon;
pub mod recipes;
pub mod simulator;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
pub use game::{EquilibriumReport, GameInstance, PlacementPair};
pub use platoon::PlatoonScenario;
pub use spectral::GroundedKernel;
pub use topology::{LeaderNetwork, Mode};
