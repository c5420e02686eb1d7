//! Detector-first game on a random tree: tree algorithm against brute force.

use std::time::Instant;

use sensor_game::game::{stackelberg_bruteforce, stackelberg_tree};
use sensor_game::spectral::kernel_for;
use sensor_game::topology::{generate, TreeKind};
use sensor_game::{GameInstance, Mode};

fn main() -> sensor_game::Result<()> {
    let net = generate(TreeKind::RandomTree, 14, 0, Mode::Undirected, Some(7))?;
    println!("edges {:?}", net.edges());
    for f in 1..=3 {
        let game = GameInstance::new(kernel_for(&net)?, f)?;
        let start = Instant::now();
        let fast = stackelberg_tree(&game, &net)?;
        let fast_time = start.elapsed();
        let start = Instant::now();
        let slow = stackelberg_bruteforce(&game)?;
        let slow_time = start.elapsed();
        println!(
            "f={f}: tree {:.6} ({} evals, {:?})  brute {:.6} ({} evals, {:?})  detector {:?}",
            fast.value, fast.evaluations, fast_time, slow.value, slow.evaluations, slow_time, fast.strategies[0].detector
        );
    }
    Ok(())
}
