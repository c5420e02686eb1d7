//! Single attacker, single sensor: a pure equilibrium exists exactly when the
//! leader is a leaf (undirected) or the tree is a directed path.

use sensor_game::game::{predict_ne_f1, pure_nash_all};
use sensor_game::spectral::kernel_for;
use sensor_game::topology::{generate, TreeKind};
use sensor_game::{GameInstance, Mode};

fn main() -> sensor_game::Result<()> {
    let cases = [
        ("path, leader at end", TreeKind::Path, 0, Mode::Undirected),
        ("path, leader inside", TreeKind::Path, 2, Mode::Undirected),
        ("star, leader at hub", TreeKind::Star, 0, Mode::Undirected),
        ("star, leader on a leaf", TreeKind::Star, 3, Mode::Undirected),
        ("directed path", TreeKind::Path, 0, Mode::Directed),
        ("directed star", TreeKind::Star, 0, Mode::Directed),
    ];
    for (label, kind, leader, mode) in cases {
        let net = generate(kind, 6, leader, mode, None)?;
        let game = GameInstance::new(kernel_for(&net)?, 1)?;
        match pure_nash_all(&game)? {
            Some(report) => println!("{label:24} value {} with {} equilibria", report.value, report.strategies.len()),
            None => println!("{label:24} no pure NE"),
        }
        if mode == Mode::Undirected {
            println!("{:24} predicted: {:?}", "", predict_ne_f1(&net)?);
        }
    }
    Ok(())
}
