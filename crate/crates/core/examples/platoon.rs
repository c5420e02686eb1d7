//! Platoon game: predicted placements and the leader-position sweep.

use sensor_game::platoon::{leader_placement_sweep, platoon_game, platoon_ne_prediction};
use sensor_game::{Mode, PlatoonScenario};

fn main() -> sensor_game::Result<()> {
    for mode in [Mode::Undirected, Mode::Directed] {
        let scn = PlatoonScenario::with_uniform_gap(8, 0, mode, 2.0, 1.0, 10.0)?;
        for f in 1..=3 {
            let game = platoon_game(&scn, f)?;
            let pair = platoon_ne_prediction(&scn, f)?;
            println!(
                "{mode:?} f={f}: attacker {:?} detector {:?} value {:.6} saddle {}",
                pair.attacker,
                pair.detector,
                game.payoff(&pair)?,
                game.is_saddle_point(&pair)?
            );
        }
    }
    println!("leader position sweep, 9 vehicles, f=2");
    for row in leader_placement_sweep(9, 2, Mode::Undirected)? {
        println!("  {} {:.6} ne={} within_end_values={}", row.position, row.value, row.ne_exists, row.within_end_values);
    }
    Ok(())
}
