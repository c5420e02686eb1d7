//! Orienting a tree away from its leader never raises the detector's value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sensor_game::game::compare_directed_undirected;
use sensor_game::recipes::random_tree;
use sensor_game::Mode;

fn main() -> sensor_game::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..8 {
        let net = random_tree(10, Mode::Directed, &mut rng)?;
        let cmp = compare_directed_undirected(&net, 2)?;
        println!("leader {} directed {:.4} undirected {:.4} ordered {}", net.leader(), cmp.directed, cmp.undirected, cmp.ordered);
    }
    Ok(())
}
